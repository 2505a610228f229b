use m2i_core::experiment::ConditionalAblation;
use m2i_core::metrics::MetricReport;

use crate::{CliError, CliResult};

/// (header, value, lower is better)
type Column = (&'static str, fn(&MetricReport) -> f64, bool);

const COLUMNS: [Column; 5] = [
    ("minADE", |r| r.min_ade, true),
    ("minFDE", |r| r.min_fde, true),
    ("MR", |r| r.miss_rate, true),
    ("OR", |r| r.overlap_rate, true),
    ("mAP", |r| r.map, false),
];

/// Aggregate rows of several metric reports with the best value of each column flagged.
pub struct Table {
    rows: Vec<(String, [f64; 5])>,
    best: [f64; 5],
}

impl Table {
    pub fn new(reports: &[MetricReport]) -> CliResult<Self> {
        if reports.is_empty() {
            return Err(CliError::Validation("no metric reports".into()));
        }
        let rows: Vec<(String, [f64; 5])> =
            reports.iter().map(|r| (r.label.clone(), COLUMNS.map(|(_, f, _)| f(r)))).collect();
        let mut best = [0.0; 5];
        for (c, (_, _, lower)) in COLUMNS.iter().enumerate() {
            let vals = rows.iter().map(|(_, v)| v[c]);
            best[c] = if *lower { vals.fold(f64::INFINITY, f64::min) } else { vals.fold(f64::NEG_INFINITY, f64::max) };
        }
        Ok(Self { rows, best })
    }

    fn is_best(&self, c: usize, v: f64) -> bool {
        v == self.best[c]
    }

    /// Fixed-width text; `*` marks the best entry of each column.
    pub fn text(&self) -> String {
        let width = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(4);
        let mut out = format!("{:<width$}", "mode");
        for (h, _, _) in COLUMNS {
            out += &format!(" {h:>9} ");
        }
        out.push('\n');
        for (label, vals) in &self.rows {
            out += &format!("{label:<width$}");
            for (c, v) in vals.iter().enumerate() {
                let mark = if self.is_best(c, *v) { "*" } else { " " };
                out += &format!(" {:>9.4}{mark}", v);
            }
            out.push('\n');
        }
        out
    }

    /// Full-precision values plus the list of columns where the row is best.
    pub fn csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["mode"];
        header.extend(COLUMNS.iter().map(|c| c.0));
        header.push("best");
        w.write_record(&header).map_err(internal)?;
        for (label, vals) in &self.rows {
            let mut rec = vec![label.clone()];
            rec.extend(vals.iter().map(f64::to_string));
            let best: Vec<&str> =
                (0..COLUMNS.len()).filter(|&c| self.is_best(c, vals[c])).map(|c| COLUMNS[c].0).collect();
            rec.push(best.join(";"));
            w.write_record(&rec).map_err(internal)?;
        }
        w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
    }
}

fn internal(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

/// Precision-recall points of every report, tagged by mode.
pub fn pr_curves_csv(reports: &[MetricReport]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mode", "recall", "precision"]).map_err(internal)?;
    for r in reports {
        for p in &r.pr_curve {
            w.write_record([r.label.clone(), p.recall.to_string(), p.precision.to_string()]).map_err(internal)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn ablation_text(a: &ConditionalAblation) -> String {
    format!(
        "reactor minFDE over {} directed scenarios\n{:<16} {:>8.4}\n{:<16} {:>8.4}\n{:<16} {:>8.4}\n",
        a.scenarios,
        "marginal",
        a.marginal_min_fde,
        "conditional-gt",
        a.conditional_gt_min_fde,
        "conditional-p1",
        a.conditional_p1_min_fde
    )
}

pub fn ablation_csv(a: &ConditionalAblation) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "reactor_minFDE", "scenarios"]).map_err(internal)?;
    for (row, v) in [
        ("marginal", a.marginal_min_fde),
        ("conditional-gt", a.conditional_gt_min_fde),
        ("conditional-p1", a.conditional_p1_min_fde),
    ] {
        w.write_record([row.to_string(), v.to_string(), a.scenarios.to_string()]).map_err(internal)?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}
