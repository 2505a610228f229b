use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    joint_min_ade, joint_min_fde, joint_miss, precision_recall, average_precision, sample_overlap, GroundTruth,
    MatchThresholds, PrPoint,
};
use crate::error::{invalid, Result};
use crate::pipeline::JointPredictionSet;
use crate::relation::RelationType;
use crate::trajectory::AgentFootprint;

/// One evaluated scenario: prediction, ground truth and what is needed to score it.
#[derive(Debug, Clone)]
pub struct EvalEntry {
    pub prediction: JointPredictionSet,
    pub truth: GroundTruth,
    pub footprints: BTreeMap<String, AgentFootprint>,
    pub relation_gt: Option<RelationType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario_id: String,
    pub relation_pred: Option<RelationType>,
    pub relation_gt: Option<RelationType>,
    #[serde(rename = "minADE")]
    pub min_ade: f64,
    #[serde(rename = "minFDE")]
    pub min_fde: f64,
    pub miss: bool,
    pub overlap: bool,
    pub top1_prob: f64,
}

/// Corpus-level metrics with the per-scenario table and the precision-recall curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub label: String,
    #[serde(rename = "minADE")]
    pub min_ade: f64,
    #[serde(rename = "minFDE")]
    pub min_fde: f64,
    pub miss_rate: f64,
    pub overlap_rate: f64,
    #[serde(rename = "mAP")]
    pub map: f64,
    pub scenarios: Vec<ScenarioMetrics>,
    pub pr_curve: Vec<PrPoint>,
}

fn score(e: &EvalEntry, th: &MatchThresholds) -> Result<ScenarioMetrics> {
    let p = &e.prediction;
    Ok(ScenarioMetrics {
        scenario_id: p.scenario_id.clone(),
        relation_pred: p.relation,
        relation_gt: e.relation_gt,
        min_ade: joint_min_ade(p, &e.truth)?,
        min_fde: joint_min_fde(p, &e.truth)?,
        miss: joint_miss(p, &e.truth, th)?,
        overlap: sample_overlap(p.top(), &e.footprints)?,
        top1_prob: p.top().probability,
    })
}

/// Score every entry and aggregate. Rows are ordered by scenario id.
pub fn evaluate_corpus(label: &str, entries: &[EvalEntry], th: &MatchThresholds) -> Result<MetricReport> {
    th.validate()?;
    if entries.is_empty() {
        return invalid("cannot evaluate an empty corpus");
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].prediction.scenario_id.cmp(&entries[b].prediction.scenario_id).then(a.cmp(&b)));
    let rows = crate::par_map(&order, |&i| score(&entries[i], th)).into_iter().collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(JointPredictionSet, GroundTruth)> =
        order.iter().map(|&i| (entries[i].prediction.clone(), entries[i].truth.clone())).collect();
    let pr_curve = precision_recall(&pairs, th)?;
    let n = rows.len() as f64;
    let mean = |f: fn(&ScenarioMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        label: label.to_string(),
        min_ade: mean(|r| r.min_ade),
        min_fde: mean(|r| r.min_fde),
        miss_rate: mean(|r| f64::from(u8::from(r.miss))),
        overlap_rate: mean(|r| f64::from(u8::from(r.overlap))),
        map: average_precision(&pr_curve),
        scenarios: rows,
        pr_curve,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario_id: &'a str,
    relation_pred: &'a str,
    relation_gt: &'a str,
    #[serde(rename = "minADE")]
    min_ade: f64,
    #[serde(rename = "minFDE")]
    min_fde: f64,
    miss: f64,
    overlap: f64,
    top1_prob: String,
    #[serde(rename = "mAP")]
    map: String,
}

/// Label used for the aggregate row of the CSV export.
pub const AGGREGATE_ROW: &str = "ALL";

impl MetricReport {
    /// One row per scenario plus a trailing aggregate row carrying the corpus means and mAP.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let rel = |r: Option<RelationType>| r.map_or("", RelationType::as_str);
        for r in &self.scenarios {
            out.serialize(CsvRow {
                scenario_id: &r.scenario_id,
                relation_pred: rel(r.relation_pred),
                relation_gt: rel(r.relation_gt),
                min_ade: r.min_ade,
                min_fde: r.min_fde,
                miss: f64::from(u8::from(r.miss)),
                overlap: f64::from(u8::from(r.overlap)),
                top1_prob: r.top1_prob.to_string(),
                map: String::new(),
            })?;
        }
        out.serialize(CsvRow {
            scenario_id: AGGREGATE_ROW,
            relation_pred: "",
            relation_gt: "",
            min_ade: self.min_ade,
            min_fde: self.min_fde,
            miss: self.miss_rate,
            overlap: self.overlap_rate,
            top1_prob: String::new(),
            map: self.map.to_string(),
        })?;
        out.flush()?;
        Ok(())
    }

    pub fn write_pr_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.pr_curve {
            out.serialize(p)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: MetricReport = serde_json::from_str(s)?;
        let rate_ok = |x: f64| (0.0..=1.0).contains(&x);
        if !(rate_ok(r.miss_rate) && rate_ok(r.overlap_rate) && rate_ok(r.map) && r.min_ade >= 0.0 && r.min_fde >= 0.0) {
            return invalid(format!("metric report `{}` has out-of-range values", r.label));
        }
        Ok(r)
    }
}
