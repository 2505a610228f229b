use std::collections::BTreeMap;

use super::{candidate_order, select_top_k, Component, InfluenceGraph, JointPredictionSet, JointSample, Provenance};
use crate::error::Result;
use crate::predict::{plan_goals, Obstacle, PredictorConfig};
use crate::relation::RelationType;
use crate::scenario::Scenario;

/// Chained factored prediction over an influence graph.
///
/// Agents are visited in topological order. Roots take their marginal samples, every
/// other agent is predicted conditionally on the futures its influencers have in the
/// partial joint sample. Partial samples are pruned to a beam of `cfg.samples` after
/// every agent but the last; the last expansion goes straight into top-K selection.
pub fn m2i_predict_multi(s: &Scenario, graph: &InfluenceGraph, cfg: &PredictorConfig) -> Result<JointPredictionSet> {
    let order = graph.topological_order()?;
    let mut beam = vec![JointSample {
        trajectories: BTreeMap::new(),
        probability: 1.0,
        provenance: Provenance::factored(Vec::new()),
    }];

    for (step, id) in order.iter().enumerate() {
        let plan = plan_goals(s, id, cfg)?;
        let footprint = s.agent(id)?.footprint;
        let influencers = graph.influencers_of(id);
        let marginal = influencers.is_empty().then(|| plan.marginal(cfg.samples));

        let mut next = Vec::with_capacity(beam.len() * cfg.samples);
        for partial in &beam {
            let conditional;
            let set = match &marginal {
                Some(m) => m,
                None => {
                    let obstacles = influencers
                        .iter()
                        .map(|inf| {
                            Ok(Obstacle {
                                future: &partial.trajectories[*inf],
                                footprint: s.agent(inf)?.footprint,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    conditional = plan.conditional(&footprint, &obstacles, cfg);
                    &conditional
                }
            };
            for (j, smp) in set.samples.iter().enumerate() {
                let mut components = partial.provenance.components.clone();
                components.push(Component {
                    agent_id: id.clone(),
                    sample_index: j,
                    confidence: smp.confidence,
                });
                let provenance = Provenance::factored(components);
                let mut trajectories = partial.trajectories.clone();
                trajectories.insert(id.clone(), smp.trajectory.clone());
                next.push(JointSample {
                    trajectories,
                    probability: provenance.raw_probability,
                    provenance,
                });
            }
        }
        if step + 1 < order.len() {
            next.sort_by(candidate_order);
            next.truncate(cfg.samples);
        }
        beam = next;
    }

    Ok(JointPredictionSet {
        scenario_id: s.id.clone(),
        relation: pair_relation(s, graph),
        samples: select_top_k(beam, cfg.joint_samples)?,
        removed_edges: graph.removed.clone(),
    })
}

/// Relation of the interacting pair implied by the graph, when there are exactly two agents.
fn pair_relation(s: &Scenario, graph: &InfluenceGraph) -> Option<RelationType> {
    let [a, b] = s.interacting.as_slice() else {
        return None;
    };
    Some(match graph.edges.first() {
        None => RelationType::None,
        Some(e) if &e.influencer == a && &e.reactor == b => RelationType::Pass,
        Some(e) if &e.influencer == b && &e.reactor == a => RelationType::Yield,
        Some(_) => return None,
    })
}
