use super::marginal::{plan_goals, rank_subset, GoalPlan};
use super::profile::{yield_plan, Occupant, ARC_RESOLUTION};
use super::{PredictionSample, PredictionSet, PredictorConfig};
use crate::error::{invalid, Result};
use crate::relation::dynamic_threshold;
use crate::scenario::Scenario;
use crate::trajectory::{AgentFootprint, Trajectory, FUTURE_LEN};

/// A future the reactor has to respect.
#[derive(Debug, Clone, Copy)]
pub struct Obstacle<'a> {
    pub future: &'a Trajectory,
    pub footprint: AgentFootprint,
}

/// Reactor prediction conditioned on one influencer future.
pub fn predict_conditional(
    s: &Scenario,
    reactor_id: &str,
    influencer_future: &Trajectory,
    influencer_footprint: AgentFootprint,
    cfg: &PredictorConfig,
) -> Result<PredictionSet> {
    predict_conditional_multi(
        s,
        reactor_id,
        &[Obstacle {
            future: influencer_future,
            footprint: influencer_footprint,
        }],
        cfg,
    )
}

/// Reactor prediction conditioned on several influencer futures at once.
pub fn predict_conditional_multi(
    s: &Scenario,
    reactor_id: &str,
    influencers: &[Obstacle<'_>],
    cfg: &PredictorConfig,
) -> Result<PredictionSet> {
    if influencers.iter().any(|o| o.future.len() != FUTURE_LEN) {
        return invalid("influencer future must span the full horizon");
    }
    let plan = plan_goals(s, reactor_id, cfg)?;
    let footprint = s.agent(reactor_id)?.footprint;
    Ok(plan.conditional(&footprint, influencers, cfg))
}

/// Smallest center distance over common timesteps, normalized by each pair's threshold.
fn clearance(traj: &Trajectory, own: &AgentFootprint, others: &[Obstacle<'_>]) -> f64 {
    others
        .iter()
        .flat_map(|o| {
            let eps = dynamic_threshold(own, &o.footprint);
            traj.positions()
                .zip(o.future.positions())
                .map(move |(a, b)| a.dist(b) - eps)
        })
        .fold(f64::INFINITY, f64::min)
}

impl GoalPlan {
    /// Re-time every top-N rollout that comes within the interaction threshold of an
    /// influencer, penalize its score by the peak deceleration, and renormalize.
    pub fn conditional(&self, footprint: &AgentFootprint, influencers: &[Obstacle<'_>], cfg: &PredictorConfig) -> PredictionSet {
        let top = self.top_indices(cfg.samples);
        let occupants: Vec<Occupant<'_>> = influencers
            .iter()
            .map(|o| Occupant {
                future: o.future,
                radius: dynamic_threshold(footprint, &o.footprint) + ARC_RESOLUTION,
            })
            .collect();
        let params = cfg.yield_params();

        let mut trajectories = Vec::with_capacity(top.len());
        let mut scores = Vec::with_capacity(top.len());
        for &i in &top {
            let g = &self.goals[i];
            let original = g.trajectory();
            let before = clearance(&original, footprint, influencers);
            let mut score = g.goal.score;
            let mut chosen = original;
            if before < 0.0 {
                let plan = yield_plan(&g.route.line, self.v0, &g.plan, &occupants, &params);
                let adjusted = plan.rollout(&g.route.line);
                if clearance(&adjusted, footprint, influencers) >= before {
                    score -= cfg.yield_penalty * plan.peak_decel(self.v0);
                    chosen = adjusted;
                }
            }
            trajectories.push(chosen);
            scores.push(score);
        }

        PredictionSet {
            agent_id: self.agent_id.clone(),
            samples: rank_subset(&top, &scores)
                .into_iter()
                .map(|(goal_idx, confidence)| {
                    let slot = top.iter().position(|&t| t == goal_idx).expect("ranked from top");
                    PredictionSample {
                        trajectory: trajectories[slot].clone(),
                        confidence,
                    }
                })
                .collect(),
        }
    }
}
