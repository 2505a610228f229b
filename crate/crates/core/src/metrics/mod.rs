//! Interactive-prediction metrics over joint prediction sets.

mod precision;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{boxes_overlap, Vec2};
use crate::pipeline::{JointPredictionSet, JointSample};
use crate::scenario::Scenario;
use crate::trajectory::{AgentFootprint, Trajectory};

pub use precision::{average_precision, mean_average_precision, precision_recall, PrPoint};
pub use report::{evaluate_corpus, EvalEntry, MetricReport, ScenarioMetrics};

/// Final-position match thresholds, scaled by the agent's initial speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchThresholds {
    /// Meters, at full scale.
    pub lateral: f64,
    /// Meters, at full scale.
    pub longitudinal: f64,
    /// Below this speed (m/s) the scale is `min_scale`.
    pub low_speed: f64,
    /// Above this speed (m/s) the scale is 1.
    pub high_speed: f64,
    pub min_scale: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        Self {
            lateral: 1.8,
            longitudinal: 3.6,
            low_speed: 1.4,
            high_speed: 11.0,
            min_scale: 0.5,
        }
    }
}

impl MatchThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lateral > 0.0
            && self.longitudinal > 0.0
            && self.min_scale > 0.0
            && self.min_scale <= 1.0
            && self.low_speed >= 0.0
            && self.high_speed > self.low_speed;
        if !ok {
            return invalid("match thresholds must be positive with low_speed < high_speed");
        }
        Ok(())
    }

    pub fn scale(&self, v0: f64) -> f64 {
        if v0 < self.low_speed {
            self.min_scale
        } else if v0 > self.high_speed {
            1.0
        } else {
            self.min_scale + (1.0 - self.min_scale) * (v0 - self.low_speed) / (self.high_speed - self.low_speed)
        }
    }

    /// Whether `pred` matches `truth` at the final step, measured in the frame of the
    /// ground-truth final heading.
    pub fn matches(&self, pred: Vec2, truth: Vec2, truth_heading: f64, v0: f64) -> bool {
        let err = (pred - truth).rotate(-truth_heading);
        let s = self.scale(v0);
        err.x.abs() <= s * self.longitudinal && err.y.abs() <= s * self.lateral
    }
}

/// Ground truth of one agent as needed by the metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTruth {
    pub future: Trajectory,
    /// Speed at the last observed step.
    pub initial_speed: f64,
}

pub type GroundTruth = BTreeMap<String, AgentTruth>;

/// Ground truth of the given agents of a scenario.
pub fn ground_truth<'a>(s: &Scenario, ids: impl IntoIterator<Item = &'a str>) -> Result<GroundTruth> {
    ids.into_iter()
        .map(|id| {
            let a = s.agent(id)?;
            Ok((
                id.to_string(),
                AgentTruth {
                    future: a.future.clone(),
                    initial_speed: a.current().speed(),
                },
            ))
        })
        .collect()
}

fn check_agents(sample: &JointSample, gt: &GroundTruth) -> Result<()> {
    if sample.trajectories.len() != gt.len() || !sample.trajectories.keys().eq(gt.keys()) {
        return invalid(format!(
            "prediction agents {:?} do not match ground truth agents {:?}",
            sample.trajectories.keys().collect::<Vec<_>>(),
            gt.keys().collect::<Vec<_>>()
        ));
    }
    for (id, t) in &sample.trajectories {
        if t.len() != gt[id].future.len() {
            return invalid(format!("agent `{id}`: predicted {} steps, ground truth {}", t.len(), gt[id].future.len()));
        }
    }
    Ok(())
}

/// Mean positional error over all agents and steps of one joint sample.
pub fn sample_ade(sample: &JointSample, gt: &GroundTruth) -> Result<f64> {
    check_agents(sample, gt)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for (id, t) in &sample.trajectories {
        for (p, q) in t.positions().zip(gt[id].future.positions()) {
            total += p.dist(q);
            n += 1;
        }
    }
    Ok(total / n as f64)
}

/// Final positional error averaged over agents.
pub fn sample_fde(sample: &JointSample, gt: &GroundTruth) -> Result<f64> {
    check_agents(sample, gt)?;
    let total: f64 = sample
        .trajectories
        .iter()
        .map(|(id, t)| t.last().position.dist(gt[id].future.last().position))
        .sum();
    Ok(total / sample.trajectories.len() as f64)
}

/// A joint sample hits when every agent's endpoint is within its thresholds.
pub fn sample_hit(sample: &JointSample, gt: &GroundTruth, th: &MatchThresholds) -> Result<bool> {
    check_agents(sample, gt)?;
    Ok(sample.trajectories.iter().all(|(id, t)| {
        let truth = gt[id].future.last();
        th.matches(t.last().position, truth.position, truth.heading(), gt[id].initial_speed)
    }))
}

fn min_over(pred: &JointPredictionSet, f: impl Fn(&JointSample) -> Result<f64>) -> Result<f64> {
    if pred.samples.is_empty() {
        return Err(Error::NotEnoughCandidates { k: 1, available: 0 });
    }
    pred.samples.iter().try_fold(f64::INFINITY, |m, s| Ok(m.min(f(s)?)))
}

pub fn joint_min_ade(pred: &JointPredictionSet, gt: &GroundTruth) -> Result<f64> {
    min_over(pred, |s| sample_ade(s, gt))
}

pub fn joint_min_fde(pred: &JointPredictionSet, gt: &GroundTruth) -> Result<f64> {
    min_over(pred, |s| sample_fde(s, gt))
}

/// True when no joint sample hits.
pub fn joint_miss(pred: &JointPredictionSet, gt: &GroundTruth, th: &MatchThresholds) -> Result<bool> {
    for s in &pred.samples {
        if sample_hit(s, gt, th)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the footprints of any two predicted agents intersect at a common step.
pub fn sample_overlap(sample: &JointSample, footprints: &BTreeMap<String, AgentFootprint>) -> Result<bool> {
    let agents: Vec<(&Trajectory, &AgentFootprint)> = sample
        .trajectories
        .iter()
        .map(|(id, t)| footprints.get(id).map(|fp| (t, fp)).ok_or_else(|| Error::UnknownAgent(id.clone())))
        .collect::<Result<_>>()?;
    for (i, (ta, fa)) in agents.iter().enumerate() {
        for (tb, fb) in &agents[i + 1..] {
            if ta.boxes(fa).zip(tb.boxes(fb)).any(|(p, q)| boxes_overlap(&p, &q)) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Footprints of the given agents of a scenario.
pub fn footprints<'a>(s: &Scenario, ids: impl IntoIterator<Item = &'a str>) -> Result<BTreeMap<String, AgentFootprint>> {
    ids.into_iter().map(|id| Ok((id.to_string(), s.agent(id)?.footprint))).collect()
}
