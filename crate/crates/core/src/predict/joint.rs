use std::collections::BTreeMap;

use super::marginal::{plan_goals, GoalPlan};
use super::PredictorConfig;
use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::pipeline::{select_top_k, Component, JointPredictionSet, JointSample, Provenance};
use crate::relation::dynamic_threshold;
use crate::scenario::Scenario;
use crate::trajectory::{DT, FUTURE_LEN, HORIZON};

/// Goal-pair scores of the interacting pair before the collision penalty is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPairDistribution {
    pub first: GoalPlan,
    pub second: GoalPlan,
    /// Sum of the two goal scores, row-major over (first goal, second goal).
    pub base_scores: Vec<f64>,
    /// Whether the straight-line arrivals of the pair come within the interaction threshold.
    pub conflicts: Vec<bool>,
}

impl JointPairDistribution {
    pub fn len(&self) -> usize {
        self.base_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_scores.is_empty()
    }

    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        i * self.second.goals.len() + j
    }

    /// Softmax over all pairs with the given collision penalty.
    pub fn probabilities(&self, penalty: f64) -> Vec<f64> {
        let scores: Vec<f64> = self
            .base_scores
            .iter()
            .zip(&self.conflicts)
            .map(|(&s, &c)| if c { s - penalty } else { s })
            .collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }
}

/// Position at step `k` (1-based) when moving in a straight line from `p0` to `goal` at a constant rate.
fn straight_arrival(p0: Vec2, goal: Vec2, k: usize) -> Vec2 {
    p0.lerp(goal, k as f64 * DT / HORIZON)
}

/// Score every goal pair of the interacting agents.
pub fn joint_pair_distribution(s: &Scenario, cfg: &PredictorConfig) -> Result<JointPairDistribution> {
    let (a, b) = s.pair();
    let first = plan_goals(s, a, cfg)?;
    let second = plan_goals(s, b, cfg)?;
    let (aa, ab) = (s.agent(a)?, s.agent(b)?);
    let eps = dynamic_threshold(&aa.footprint, &ab.footprint);
    let (pa, pb) = (aa.current().position, ab.current().position);

    let paths = |plan: &GoalPlan, p0: Vec2| -> Vec<Vec<Vec2>> {
        plan.goals
            .iter()
            .map(|g| (1..=FUTURE_LEN).map(|k| straight_arrival(p0, g.goal.position, k)).collect())
            .collect()
    };
    let (ta, tb) = (paths(&first, pa), paths(&second, pb));
    let eps2 = eps * eps;
    let mut base_scores = Vec::with_capacity(ta.len() * tb.len());
    let mut conflicts = Vec::with_capacity(ta.len() * tb.len());
    for (ga, xa) in first.goals.iter().zip(&ta) {
        for (gb, xb) in second.goals.iter().zip(&tb) {
            base_scores.push(ga.goal.score + gb.goal.score);
            conflicts.push(xa.iter().zip(xb).any(|(p, q)| p.dist_sq(*q) < eps2));
        }
    }
    Ok(JointPairDistribution {
        first,
        second,
        base_scores,
        conflicts,
    })
}

/// Goal-pair joint baseline: the top K goal pairs, each agent rolled out on its own goal.
pub fn predict_joint_baseline(s: &Scenario, cfg: &PredictorConfig) -> Result<JointPredictionSet> {
    let dist = joint_pair_distribution(s, cfg)?;
    let probs = dist.probabilities(cfg.collision_penalty);
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&x, &y| probs[y].total_cmp(&probs[x]).then(x.cmp(&y)));
    order.truncate(cfg.joint_samples);

    let own = |plan: &GoalPlan| plan.top(plan.goals.len()).into_iter().collect::<BTreeMap<usize, f64>>();
    let (ca, cb) = (own(&dist.first), own(&dist.second));
    let n2 = dist.second.goals.len();
    let candidates = order
        .into_iter()
        .map(|idx| {
            let (i, j) = (idx / n2, idx % n2);
            let mut trajectories = BTreeMap::new();
            trajectories.insert(dist.first.agent_id.clone(), dist.first.goals[i].trajectory());
            trajectories.insert(dist.second.agent_id.clone(), dist.second.goals[j].trajectory());
            JointSample {
                trajectories,
                probability: probs[idx],
                provenance: Provenance {
                    components: vec![
                        Component {
                            agent_id: dist.first.agent_id.clone(),
                            sample_index: i,
                            confidence: ca[&i],
                        },
                        Component {
                            agent_id: dist.second.agent_id.clone(),
                            sample_index: j,
                            confidence: cb[&j],
                        },
                    ],
                    raw_probability: probs[idx],
                    factored: false,
                },
            }
        })
        .collect();
    Ok(JointPredictionSet {
        scenario_id: s.id.clone(),
        relation: None,
        samples: select_top_k(candidates, cfg.joint_samples)?,
        removed_edges: Vec::new(),
    })
}

/// Pick the collision penalty from `grid` that minimizes the mean cross-entropy of the
/// goal pair closest to the ground-truth endpoints. Ties keep the earlier grid value.
pub fn fit_collision_penalty(corpus: &[Scenario], cfg: &PredictorConfig, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() || corpus.is_empty() {
        return invalid("collision penalty fit needs a non-empty grid and corpus");
    }
    let mut labeled = Vec::with_capacity(corpus.len());
    for s in corpus {
        let dist = joint_pair_distribution(s, cfg)?;
        let (a, b) = s.pair();
        let (ea, eb) = (s.agent(a)?.future.last().position, s.agent(b)?.future.last().position);
        let nearest = |plan: &GoalPlan, end: Vec2| {
            plan.goals
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.goal.position.dist(end).total_cmp(&y.1.goal.position.dist(end)))
                .map(|(i, _)| i)
                .expect("plans have at least two goals")
        };
        let label = dist.pair_index(nearest(&dist.first, ea), nearest(&dist.second, eb));
        labeled.push((dist, label));
    }
    let loss = |penalty: f64| -> f64 {
        labeled
            .iter()
            .map(|(d, l)| -d.probabilities(penalty)[*l].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / labeled.len() as f64
    };
    let mut best = (grid[0], loss(grid[0]));
    for &g in &grid[1..] {
        let l = loss(g);
        if l < best.1 {
            best = (g, l);
        }
    }
    Ok(best.0)
}
