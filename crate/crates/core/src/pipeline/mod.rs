//! Factored joint inference: relation, role assignment, marginal influencer
//! samples, conditional reactor samples, and top-K joint selection. Also the
//! influence-graph chaining for more than two agents.

mod graph;
mod multi;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::{plan_goals, Obstacle, PredictionSet, PredictorConfig};
use crate::relation::{assign_roles, classify_pair, RelationClassifier, RelationType, Roles};
use crate::scenario::{trajectory_from_rows, trajectory_rows, Scenario};
use crate::trajectory::Trajectory;

pub use graph::{build_influence_graph, InfluenceEdge, InfluenceGraph};
pub use multi::m2i_predict_multi;

/// One agent's contribution to a joint sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub agent_id: String,
    /// Index of the sample within the agent's own prediction set.
    pub sample_index: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Components in prediction order (influencers before their reactors).
    pub components: Vec<Component>,
    /// Probability before renormalization over the selected set.
    pub raw_probability: f64,
    /// True when `raw_probability` is the product of component confidences.
    pub factored: bool,
}

impl Provenance {
    pub fn factored(components: Vec<Component>) -> Self {
        let raw_probability = components.iter().fold(1.0, |p, c| p * c.confidence);
        Self {
            components,
            raw_probability,
            factored: true,
        }
    }

    fn index_key(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.iter().map(|c| c.sample_index)
    }
}

/// One trajectory per agent with a joint probability.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub trajectories: BTreeMap<String, Trajectory>,
    pub probability: f64,
    pub provenance: Provenance,
}

/// Selected joint samples, sorted by descending probability.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPredictionSet {
    pub scenario_id: String,
    /// Relation the prediction was conditioned on, if a single pair relation was used.
    pub relation: Option<RelationType>,
    pub samples: Vec<JointSample>,
    /// Influence edges dropped to break cycles (multi-agent mode).
    pub removed_edges: Vec<InfluenceEdge>,
}

impl JointPredictionSet {
    pub fn top(&self) -> &JointSample {
        &self.samples[0]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&JointSetRepr::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: JointSetRepr = serde_json::from_str(s)?;
        r.try_into()
    }
}

/// Order candidates by descending raw probability; ties by component sample indices.
pub(crate) fn candidate_order(a: &JointSample, b: &JointSample) -> Ordering {
    b.provenance
        .raw_probability
        .total_cmp(&a.provenance.raw_probability)
        .then_with(|| a.provenance.index_key().cmp(b.provenance.index_key()))
}

/// Keep the `k` most likely candidates and renormalize their probabilities to sum to one.
pub fn select_top_k(mut candidates: Vec<JointSample>, k: usize) -> Result<Vec<JointSample>> {
    if k == 0 || k > candidates.len() {
        return Err(Error::NotEnoughCandidates {
            k,
            available: candidates.len(),
        });
    }
    candidates.sort_by(candidate_order);
    candidates.truncate(k);
    let total: f64 = candidates.iter().map(|c| c.provenance.raw_probability).sum();
    for c in &mut candidates {
        c.probability = if total > 0.0 {
            c.provenance.raw_probability / total
        } else {
            1.0 / k as f64
        };
    }
    Ok(candidates)
}

/// Pairs every sample of `first` with every sample of the set `second_given(i)`
/// built for it, with product probabilities, in (first index, second index) order.
fn pair_candidates<'a>(first: &PredictionSet, second_given: impl Fn(usize) -> &'a PredictionSet) -> Vec<JointSample> {
    let mut out = Vec::new();
    for (i, a) in first.samples.iter().enumerate() {
        let second = second_given(i);
        for (j, b) in second.samples.iter().enumerate() {
            let provenance = Provenance::factored(vec![
                Component {
                    agent_id: first.agent_id.clone(),
                    sample_index: i,
                    confidence: a.confidence,
                },
                Component {
                    agent_id: second.agent_id.clone(),
                    sample_index: j,
                    confidence: b.confidence,
                },
            ]);
            let mut trajectories = BTreeMap::new();
            trajectories.insert(first.agent_id.clone(), a.trajectory.clone());
            trajectories.insert(second.agent_id.clone(), b.trajectory.clone());
            out.push(JointSample {
                trajectories,
                probability: provenance.raw_probability,
                provenance,
            });
        }
    }
    out
}

/// Pair prediction under a given relation (agent 1 = first interacting agent).
pub fn predict_pair_with_relation(s: &Scenario, relation: RelationType, cfg: &PredictorConfig) -> Result<JointPredictionSet> {
    let (a, b) = s.pair();
    let candidates = match assign_roles(relation, (a, b)) {
        Roles::Independent { agents } => {
            // canonical agent order makes the result independent of the pair ordering
            let (first, second) = if agents.0 <= agents.1 {
                (agents.0, agents.1)
            } else {
                (agents.1, agents.0)
            };
            let pa = plan_goals(s, &first, cfg)?.marginal(cfg.samples);
            let pb = plan_goals(s, &second, cfg)?.marginal(cfg.samples);
            pair_candidates(&pa, |_| &pb)
        }
        Roles::Directed { influencer, reactor } => {
            let infl = plan_goals(s, &influencer, cfg)?.marginal(cfg.samples);
            let reactor_plan = plan_goals(s, &reactor, cfg)?;
            let reactor_fp = s.agent(&reactor)?.footprint;
            let infl_fp = s.agent(&influencer)?.footprint;
            let conditionals: Vec<PredictionSet> = infl
                .samples
                .iter()
                .map(|smp| {
                    reactor_plan.conditional(
                        &reactor_fp,
                        &[Obstacle {
                            future: &smp.trajectory,
                            footprint: infl_fp,
                        }],
                        cfg,
                    )
                })
                .collect();
            pair_candidates(&infl, |i| &conditionals[i])
        }
    };
    Ok(JointPredictionSet {
        scenario_id: s.id.clone(),
        relation: Some(relation),
        samples: select_top_k(candidates, cfg.joint_samples)?,
        removed_edges: Vec::new(),
    })
}

/// Full pair inference: most likely relation from the classifier, then factored prediction.
pub fn m2i_predict_pair(s: &Scenario, classifier: &RelationClassifier, cfg: &PredictorConfig) -> Result<JointPredictionSet> {
    let (a, b) = s.pair();
    let relation = classify_pair(s, classifier, a, b)?.argmax();
    predict_pair_with_relation(s, relation, cfg)
}

/// Independent marginal pairing for both agents (the marginal baseline).
pub fn predict_marginal_pairs(s: &Scenario, cfg: &PredictorConfig) -> Result<JointPredictionSet> {
    let mut out = predict_pair_with_relation(s, RelationType::None, cfg)?;
    out.relation = None;
    Ok(out)
}

// ---------------------------------------------------------------------------
// wire format

#[derive(Serialize, Deserialize)]
struct JointSampleRepr {
    probability: f64,
    provenance: Provenance,
    trajectories: BTreeMap<String, Vec<[f64; 4]>>,
}

#[derive(Serialize, Deserialize)]
struct JointSetRepr {
    scenario_id: String,
    relation: Option<RelationType>,
    samples: Vec<JointSampleRepr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    removed_edges: Vec<InfluenceEdge>,
}

impl From<&JointPredictionSet> for JointSetRepr {
    fn from(j: &JointPredictionSet) -> Self {
        JointSetRepr {
            scenario_id: j.scenario_id.clone(),
            relation: j.relation,
            samples: j
                .samples
                .iter()
                .map(|s| JointSampleRepr {
                    probability: s.probability,
                    provenance: s.provenance.clone(),
                    trajectories: s.trajectories.iter().map(|(k, t)| (k.clone(), trajectory_rows(t))).collect(),
                })
                .collect(),
            removed_edges: j.removed_edges.clone(),
        }
    }
}

impl TryFrom<JointSetRepr> for JointPredictionSet {
    type Error = Error;
    fn try_from(r: JointSetRepr) -> Result<Self> {
        Ok(JointPredictionSet {
            scenario_id: r.scenario_id,
            relation: r.relation,
            samples: r
                .samples
                .into_iter()
                .map(|s| {
                    Ok(JointSample {
                        probability: s.probability,
                        provenance: s.provenance,
                        trajectories: s
                            .trajectories
                            .iter()
                            .map(|(k, rows)| Ok((k.clone(), trajectory_from_rows(rows)?)))
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?,
            removed_edges: r.removed_edges,
        })
    }
}
