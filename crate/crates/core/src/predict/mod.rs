//! Goal-based trajectory predictors: marginal, conditional (reactor given an
//! influencer future) and the goal-pair joint baseline.

mod conditional;
mod joint;
mod marginal;
pub mod profile;
pub mod route;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::scenario::trajectory_rows;
use crate::trajectory::Trajectory;

pub use conditional::{predict_conditional, predict_conditional_multi, Obstacle};
pub use joint::{fit_collision_penalty, joint_pair_distribution, predict_joint_baseline, JointPairDistribution};
pub use marginal::{plan_goals, predict_marginal, GoalPlan, GoalRollout};

/// Tunables shared by all predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    /// Samples per agent (N).
    pub samples: usize,
    /// Joint samples kept after selection (K).
    pub joint_samples: usize,
    /// Goal candidates enumerated per agent (G).
    pub goal_candidates: usize,
    /// m/s^2
    pub max_accel: f64,
    /// m/s^2
    pub max_decel: f64,
    /// m/s^2
    pub comfort_decel: f64,
    /// Seconds the reactor waits after the influencer clears a conflict.
    pub safety_gap_time: f64,
    /// Meters kept between the reactor and an occupied conflict zone.
    pub safety_gap_distance: f64,
    /// Weight of the squared speed-consistency term in goal scores, (m/s)^-2.
    pub speed_weight: f64,
    /// Score bonus for goals that follow a lane aligned with the agent.
    pub lane_bonus: f64,
    /// Score penalty per m/s^2 of peak deceleration for yielding samples, s^2/m.
    pub yield_penalty: f64,
    /// Pair-score penalty of the joint baseline for space-time conflicting goal pairs.
    pub collision_penalty: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            samples: 6,
            joint_samples: 6,
            goal_candidates: 24,
            max_accel: 3.0,
            max_decel: 5.0,
            comfort_decel: 2.5,
            safety_gap_time: 1.0,
            safety_gap_distance: 2.0,
            speed_weight: 0.5,
            lane_bonus: 1.0,
            yield_penalty: 0.2,
            collision_penalty: 3.0,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.max_accel,
            self.max_decel,
            self.comfort_decel,
            self.safety_gap_time,
            self.safety_gap_distance,
            self.speed_weight,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return invalid("predictor limits and gaps must be positive");
        }
        if self.lane_bonus < 0.0 || self.yield_penalty < 0.0 || self.collision_penalty < 0.0 {
            return invalid("predictor score weights must be non-negative");
        }
        if self.samples == 0 || self.joint_samples == 0 || self.goal_candidates < 2 {
            return invalid("sample counts must be positive and at least two goal candidates are needed");
        }
        if self.samples > self.goal_candidates {
            return invalid("samples per agent cannot exceed goal candidates");
        }
        if self.comfort_decel > self.max_decel {
            return invalid("comfort deceleration cannot exceed maximum deceleration");
        }
        Ok(())
    }

    pub fn yield_params(&self) -> profile::YieldParams {
        profile::YieldParams {
            gap_time: self.safety_gap_time,
            gap_distance: self.safety_gap_distance,
            comfort_decel: self.comfort_decel,
            max_decel: self.max_decel,
            max_accel: self.max_accel,
        }
    }
}

/// Goal position on the lane graph (or the off-lane fallback).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalCandidate {
    pub position: Vec2,
    /// `None` for the constant-velocity fallback goal.
    pub lane_id: Option<String>,
    /// Distance travelled along the route to reach the goal.
    pub arc_offset: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSample {
    pub trajectory: Trajectory,
    pub confidence: f64,
}

/// Multi-modal prediction for one agent, sorted by descending confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub agent_id: String,
    pub samples: Vec<PredictionSample>,
}

impl PredictionSet {
    pub fn top(&self) -> &PredictionSample {
        &self.samples[0]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PredictionSetRepr::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: PredictionSetRepr = serde_json::from_str(s)?;
        Ok(PredictionSet {
            agent_id: r.agent_id,
            samples: r
                .samples
                .into_iter()
                .map(|s| {
                    Ok(PredictionSample {
                        trajectory: crate::scenario::trajectory_from_rows(&s.trajectory)?,
                        confidence: s.confidence,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRepr {
    confidence: f64,
    trajectory: Vec<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct PredictionSetRepr {
    agent_id: String,
    samples: Vec<SampleRepr>,
}

impl From<&PredictionSet> for PredictionSetRepr {
    fn from(p: &PredictionSet) -> Self {
        PredictionSetRepr {
            agent_id: p.agent_id.clone(),
            samples: p
                .samples
                .iter()
                .map(|s| SampleRepr {
                    confidence: s.confidence,
                    trajectory: trajectory_rows(&s.trajectory),
                })
                .collect(),
        }
    }
}

/// Softmax of `scores`, then a stable sort by descending probability.
/// Returns (original index, probability) pairs.
pub(crate) fn normalized_ranking(scores: &[f64]) -> Vec<(usize, f64)> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut ranked: Vec<(usize, f64)> = exps.into_iter().map(|e| e / total).enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}
