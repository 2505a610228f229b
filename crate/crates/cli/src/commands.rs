use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use m2i_core::experiment::{
    accuracy, conditional_ablation, evaluate_mode, predict_scenario, relation_dataset, split_indices, training_example,
    Mode,
};
use m2i_core::metrics::MetricReport;
use m2i_core::relation::{
    label_relation, train_relation_classifier, RelationClassifier, RelationType,
};
use m2i_core::scenario::{load_corpus, Scenario};
use m2i_core::scengen::{generate_chain, generate_corpus, write_label_csv, ChainShape};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report;
use crate::{CliError, CliResult};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> m2i_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Scenarios sorted by id, so every artifact is ordered the same way.
fn load(cfg: &RunConfig) -> CliResult<Vec<Scenario>> {
    let path = cfg.corpus_path();
    if !path.exists() {
        return Err(io_err(&path, "corpus not found"));
    }
    let mut corpus = load_corpus(&path).map_err(|e| match e {
        m2i_core::Error::Io(e) => io_err(&path, e),
        e => CliError::Validation(format!("{}: {e}", path.display())),
    })?;
    corpus.sort_by(|a, b| a.id.cmp(&b.id));
    if corpus.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(CliError::Validation("corpus contains duplicate scenario ids".into()));
    }
    Ok(corpus)
}

fn load_classifier(cfg: &RunConfig) -> CliResult<RelationClassifier> {
    let path = cfg.classifier_path();
    Ok(RelationClassifier::from_json(&read(&path)?)?)
}

fn shape_name(s: ChainShape) -> &'static str {
    match s {
        ChainShape::Chain => "chain",
        ChainShape::Fan => "fan",
        ChainShape::Independent => "independent",
    }
}

/// Empty the scenario directory of stale `.json` files from earlier runs.
fn clear_scenarios(dir: &Path) -> CliResult<()> {
    if !dir.exists() {
        return fs::create_dir_all(dir).map_err(|e| io_err(dir, e));
    }
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let p = entry.map_err(|e| io_err(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "json") {
            fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
        }
    }
    Ok(())
}

fn write_scenarios(dir: &Path, scenarios: &[&Scenario]) -> CliResult<()> {
    clear_scenarios(dir)?;
    for s in scenarios {
        write(&dir.join(format!("{}.json", s.id)), s.to_json()? + "\n")?;
    }
    Ok(())
}

pub fn generate(cfg: &RunConfig) -> CliResult<()> {
    let gen = cfg.generator();
    gen.validate()?;
    let dir = cfg.out.join("scenarios");
    if cfg.multi_agent {
        let shapes = [ChainShape::Chain, ChainShape::Fan, ChainShape::Independent];
        let jobs: Vec<(ChainShape, usize)> =
            shapes.iter().enumerate().flat_map(|(k, &s)| (0..gen.count).map(move |i| (s, k * gen.count + i))).collect();
        let scenes = jobs
            .par_iter()
            .map(|&(shape, index)| {
                let n = if shape == ChainShape::Chain { 3 } else { cfg.fan_agents };
                generate_chain(&gen, shape, n, index)
            })
            .collect::<m2i_core::Result<Vec<_>>>()?;
        write_scenarios(&dir, &scenes.iter().map(|g| &g.scenario).collect::<Vec<_>>())?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record(["scenario_id", "shape", "influencer", "reactor"]).map_err(csv_err)?;
        for g in &scenes {
            if g.edges.is_empty() {
                w.write_record([g.scenario.id.as_str(), shape_name(g.shape), "", ""]).map_err(csv_err)?;
            }
            for (i, r) in &g.edges {
                w.write_record([g.scenario.id.as_str(), shape_name(g.shape), i, r]).map_err(csv_err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        write(&cfg.out.join("intended_graph.csv"), bytes)?;
        println!("wrote {} multi-agent scenes to {}", scenes.len(), dir.display());
    } else {
        let corpus = generate_corpus(&gen)?;
        write_scenarios(&dir, &corpus.iter().map(|g| &g.scenario).collect::<Vec<_>>())?;
        write(&cfg.out.join("intended.csv"), csv_bytes(|b| write_label_csv(b, &corpus))?)?;
        println!("wrote {} scenarios to {}", corpus.len(), dir.display());
    }
    Ok(())
}

const LABEL_HEADER: [&str; 8] = ["scenario_id", "agent_a", "agent_b", "relation", "d_i", "t1", "t2", "epsilon_d"];

pub fn label(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load(cfg)?;
    let rows = corpus
        .par_iter()
        .map(|s| -> CliResult<Vec<[String; 8]>> {
            let ids = &s.interacting;
            let mut out = Vec::new();
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    let (a, b) = (s.agent(&ids[i])?, s.agent(&ids[j])?);
                    let (rel, g) = label_relation(&a.future, &b.future, &a.footprint, &b.footprint)?;
                    out.push([
                        s.id.clone(),
                        a.id.clone(),
                        b.id.clone(),
                        rel.as_str().to_string(),
                        g.d_i.to_string(),
                        g.t1.to_string(),
                        g.t2.to_string(),
                        g.epsilon_d.to_string(),
                    ]);
                }
            }
            Ok(out)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(LABEL_HEADER).map_err(csv_err)?;
    let mut count = 0;
    for r in rows.iter().flatten() {
        w.write_record(r).map_err(csv_err)?;
        count += 1;
    }
    let path = cfg.out.join("relations.csv");
    write(&path, w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)?;
    println!("labeled {count} pairs in {} scenarios -> {}", corpus.len(), path.display());
    Ok(())
}

/// Relation per (scenario, agent_a, agent_b) from a `label` CSV.
fn read_labels(path: &Path) -> CliResult<BTreeMap<(String, String, String), RelationType>> {
    let text = read(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Validation(e.to_string()))?.clone();
    if header.iter().ne(LABEL_HEADER) {
        return Err(CliError::Validation(format!("{}: unexpected header", path.display())));
    }
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        out.insert((rec[0].to_string(), rec[1].to_string(), rec[2].to_string()), rec[3].parse()?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct TrainingSummary {
    train_size: usize,
    held_out_size: usize,
    initial_loss: f64,
    final_loss: f64,
    train_accuracy: f64,
    held_out_accuracy: f64,
}

pub fn train_relation(cfg: &RunConfig) -> CliResult<()> {
    if cfg.multi_agent {
        return Err(CliError::Validation("train-relation works on pair corpora".into()));
    }
    let corpus = load(cfg)?;
    let data = match &cfg.labels {
        None => relation_dataset(&corpus)?,
        Some(path) => {
            let labels = read_labels(path)?;
            corpus
                .iter()
                .map(|s| {
                    let (a, b) = s.pair();
                    let y = labels.get(&(s.id.clone(), a.to_string(), b.to_string())).copied().ok_or_else(|| {
                        CliError::Validation(format!("no label for scenario `{}` in {}", s.id, path.display()))
                    })?;
                    Ok(training_example(s, y)?)
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let (train_idx, held_idx) = split_indices(data.len(), cfg.training.train_fraction, cfg.seed);
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    let (train, held) = (pick(&train_idx), pick(&held_idx));
    let (clf, rep) = train_relation_classifier(&train, cfg.training_options())?;
    let summary = TrainingSummary {
        train_size: train.len(),
        held_out_size: held.len(),
        initial_loss: rep.initial_loss,
        final_loss: rep.final_loss,
        train_accuracy: rep.train_accuracy,
        held_out_accuracy: accuracy(&clf, &held),
    };
    write(&cfg.classifier_path(), clf.to_json()? + "\n")?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
    write(&cfg.out.join("training.json"), json + "\n")?;
    println!(
        "train accuracy {:.4} ({} scenarios), held-out accuracy {:.4} ({} scenarios), loss {:.4} -> {:.4}",
        summary.train_accuracy,
        summary.train_size,
        summary.held_out_accuracy,
        summary.held_out_size,
        summary.initial_loss,
        summary.final_loss
    );
    Ok(())
}

fn classifier_for(cfg: &RunConfig) -> CliResult<Option<RelationClassifier>> {
    if cfg.mode.contains(&Mode::M2i) {
        load_classifier(cfg).map(Some)
    } else {
        Ok(None)
    }
}

pub fn predict(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load(cfg)?;
    let clf = classifier_for(cfg)?;
    for &mode in &cfg.mode {
        let lines = corpus
            .par_iter()
            .map(|s| -> CliResult<String> {
                Ok(predict_scenario(s, mode, clf.as_ref(), &cfg.predictor, cfg.multi_agent)?.to_json()? + "\n")
            })
            .collect::<CliResult<Vec<_>>>()?;
        let path = cfg.out.join(format!("predictions-{mode}.jsonl"));
        write(&path, lines.concat())?;
        println!("{mode}: {} predictions -> {}", lines.len(), path.display());
    }
    Ok(())
}

fn write_metrics(out: &Path, r: &MetricReport) -> CliResult<()> {
    write(&out.join(format!("metrics-{}.json", r.label)), r.to_json()? + "\n")?;
    write(&out.join(format!("metrics-{}.csv", r.label)), csv_bytes(|b| r.write_csv(b))?)?;
    write(&out.join(format!("pr-{}.csv", r.label)), csv_bytes(|b| r.write_pr_csv(b))?)
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load(cfg)?;
    if corpus.is_empty() {
        return Err(CliError::Validation("cannot evaluate an empty corpus".into()));
    }
    let clf = classifier_for(cfg)?;
    let mut reports = Vec::new();
    for &mode in &cfg.mode {
        let r = evaluate_mode(&corpus, mode, clf.as_ref(), &cfg.predictor, &cfg.thresholds, cfg.multi_agent)?;
        write_metrics(&cfg.out, &r)?;
        reports.push(r);
    }
    let table = report::Table::new(&reports)?;
    write(&cfg.out.join("comparison.txt"), table.text())?;
    write(&cfg.out.join("comparison.csv"), table.csv()?)?;
    print!("{}", table.text());
    if cfg.teacher_forcing {
        if cfg.multi_agent {
            return Err(CliError::Validation("the conditional ablation needs pair scenarios".into()));
        }
        let ab = conditional_ablation(&corpus, &cfg.predictor)?;
        let text = report::ablation_text(&ab);
        write(&cfg.out.join("conditional.txt"), &text)?;
        write(&cfg.out.join("conditional.csv"), report::ablation_csv(&ab)?)?;
        print!("{text}");
    }
    Ok(())
}

fn default_metric_files(out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(out)
        .map_err(|e| io_err(out, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("metrics-") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn report(cfg: &RunConfig, files: &[PathBuf]) -> CliResult<()> {
    let files = if files.is_empty() { default_metric_files(&cfg.out)? } else { files.to_vec() };
    if files.is_empty() {
        return Err(CliError::Validation("report needs at least one metric file".into()));
    }
    let reports = files
        .iter()
        .map(|f| MetricReport::from_json(&read(f)?).map_err(|e| CliError::Validation(format!("{}: {e}", f.display()))))
        .collect::<CliResult<Vec<_>>>()?;
    let table = report::Table::new(&reports)?;
    write(&cfg.out.join("report.txt"), table.text())?;
    write(&cfg.out.join("report.csv"), table.csv()?)?;
    write(&cfg.out.join("pr_curves.csv"), report::pr_curves_csv(&reports)?)?;
    print!("{}", table.text());
    Ok(())
}
