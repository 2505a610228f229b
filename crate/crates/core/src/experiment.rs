//! Corpus-level experiment drivers: labeling, relation datasets, prediction in each
//! mode, and the conditional-vs-marginal reactor comparison.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::{evaluate_corpus, footprints, ground_truth, EvalEntry, MatchThresholds, MetricReport};
use crate::pipeline::{
    build_influence_graph, m2i_predict_multi, m2i_predict_pair, predict_marginal_pairs, InfluenceGraph, JointPredictionSet,
};
use crate::predict::{plan_goals, predict_joint_baseline, Obstacle, PredictionSet, PredictorConfig};
use crate::relation::{extract_pair_features, label_relation, ConflictGeometry, RelationClassifier, RelationType, Roles};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Marginal,
    Joint,
    M2i,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Marginal => "marginal",
            Mode::Joint => "joint",
            Mode::M2i => "m2i",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(Mode::Marginal),
            "joint" => Ok(Mode::Joint),
            "m2i" => Ok(Mode::M2i),
            _ => Err(Error::Invalid(format!("unknown mode `{s}` (expected marginal, joint or m2i)"))),
        }
    }
}

/// Heuristic label of the interacting pair on the ground-truth futures.
pub fn label_scenario(s: &Scenario) -> Result<(RelationType, ConflictGeometry)> {
    let (a, b) = s.pair();
    let (a, b) = (s.agent(a)?, s.agent(b)?);
    label_relation(&a.future, &b.future, &a.footprint, &b.footprint)
}

/// Training example for the interacting pair labeled `label` (relation of the first
/// interacting agent towards the second), in the id order the classifier expects.
pub fn training_example(s: &Scenario, label: RelationType) -> Result<(Vec<f64>, RelationType)> {
    let (a, b) = s.pair();
    if a <= b {
        Ok((extract_pair_features(s, a, b)?.to_vec(), label))
    } else {
        Ok((extract_pair_features(s, b, a)?.to_vec(), label.swapped()))
    }
}

/// Relation features and heuristic labels for every scenario.
pub fn relation_dataset(corpus: &[Scenario]) -> Result<Vec<(Vec<f64>, RelationType)>> {
    crate::par_map(corpus, |s| training_example(s, label_scenario(s)?.0))
        .into_iter()
        .collect()
}

/// Deterministic shuffled split of `0..n` into (train, held-out) index sets.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64) * train_fraction).round() as usize;
    let held = idx.split_off(cut.min(n));
    (idx, held)
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn accuracy(classifier: &RelationClassifier, data: &[(Vec<f64>, RelationType)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data.iter().filter(|(x, y)| classifier.predict(x).argmax() == *y).count();
    hits as f64 / data.len() as f64
}

/// Joint prediction for one scenario in the requested mode.
pub fn predict_scenario(
    s: &Scenario,
    mode: Mode,
    classifier: Option<&RelationClassifier>,
    cfg: &PredictorConfig,
    multi_agent: bool,
) -> Result<JointPredictionSet> {
    let need = || classifier.ok_or_else(|| Error::Invalid("m2i mode needs a trained relation classifier".into()));
    match (mode, multi_agent) {
        (Mode::Marginal, false) => predict_marginal_pairs(s, cfg),
        (Mode::Marginal, true) => {
            let graph = InfluenceGraph::new(s.interacting.clone(), Vec::new());
            let mut out = m2i_predict_multi(s, &graph, cfg)?;
            out.relation = None;
            Ok(out)
        }
        (Mode::Joint, false) => predict_joint_baseline(s, cfg),
        (Mode::Joint, true) => invalid("the joint baseline only handles agent pairs"),
        (Mode::M2i, false) => m2i_predict_pair(s, need()?, cfg),
        (Mode::M2i, true) => m2i_predict_multi(s, &build_influence_graph(s, need()?)?, cfg),
    }
}

/// Predict every scenario and score the corpus.
pub fn evaluate_mode(
    corpus: &[Scenario],
    mode: Mode,
    classifier: Option<&RelationClassifier>,
    cfg: &PredictorConfig,
    th: &MatchThresholds,
    multi_agent: bool,
) -> Result<MetricReport> {
    let entries = crate::par_map(corpus, |s| {
        let prediction = predict_scenario(s, mode, classifier, cfg, multi_agent)?;
        let ids = || s.interacting.iter().map(String::as_str);
        Ok(EvalEntry {
            prediction,
            truth: ground_truth(s, ids())?,
            footprints: footprints(s, ids())?,
            relation_gt: if s.interacting.len() == 2 { Some(label_scenario(s)?.0) } else { None },
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    evaluate_corpus(mode.as_str(), &entries, th)
}

/// Reactor minFDE of the marginal predictor and of the conditional predictor fed the
/// ground-truth influencer future or the top-1 predicted influencer future.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalAblation {
    pub scenarios: usize,
    pub marginal_min_fde: f64,
    pub conditional_gt_min_fde: f64,
    pub conditional_p1_min_fde: f64,
}

fn set_min_fde(set: &PredictionSet, truth: &crate::trajectory::Trajectory) -> f64 {
    let end = truth.last().position;
    set.samples
        .iter()
        .map(|s| s.trajectory.last().position.dist(end))
        .fold(f64::INFINITY, f64::min)
}

/// Roles come from the heuristic label; scenarios labeled None are skipped.
pub fn conditional_ablation(corpus: &[Scenario], cfg: &PredictorConfig) -> Result<ConditionalAblation> {
    let rows = crate::par_map(corpus, |s| -> Result<Option<[f64; 3]>> {
        let (rel, _) = label_scenario(s)?;
        let Roles::Directed { influencer, reactor } = crate::relation::assign_roles(rel, s.pair()) else {
            return Ok(None);
        };
        let infl = s.agent(&influencer)?;
        let re = s.agent(&reactor)?;
        let plan = plan_goals(s, &reactor, cfg)?;
        let marginal = plan.marginal(cfg.samples);
        let gt = plan.conditional(
            &re.footprint,
            &[Obstacle {
                future: &infl.future,
                footprint: infl.footprint,
            }],
            cfg,
        );
        let p1_future = plan_goals(s, &influencer, cfg)?.marginal(1).samples.remove(0).trajectory;
        let p1 = plan.conditional(
            &re.footprint,
            &[Obstacle {
                future: &p1_future,
                footprint: infl.footprint,
            }],
            cfg,
        );
        Ok(Some([set_min_fde(&marginal, &re.future), set_min_fde(&gt, &re.future), set_min_fde(&p1, &re.future)]))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows: Vec<[f64; 3]> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return invalid("no directed interactions in the corpus");
    }
    let n = rows.len() as f64;
    let mean = |i: usize| rows.iter().map(|r| r[i]).sum::<f64>() / n;
    Ok(ConditionalAblation {
        scenarios: rows.len(),
        marginal_min_fde: mean(0),
        conditional_gt_min_fde: mean(1),
        conditional_p1_min_fde: mean(2),
    })
}
