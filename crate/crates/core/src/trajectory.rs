//! Timed agent states and trajectory arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{wrap_angle, OrientedBox, RigidTransform, Vec2};

/// Seconds per step.
pub const DT: f64 = 0.1;
/// Prediction horizon in steps (8 s).
pub const FUTURE_LEN: usize = 80;
/// Observed history length in steps (1.1 s including the current step).
pub const HISTORY_LEN: usize = 11;
/// Horizon in seconds.
pub const HORIZON: f64 = FUTURE_LEN as f64 * DT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    heading: f64,
    speed: f64,
    pub valid: bool,
}

impl AgentState {
    /// Builds a state, wrapping the heading into (-pi, pi] and clamping negative speed to zero.
    pub fn new(position: Vec2, heading: f64, speed: f64, valid: bool) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
            speed: speed.max(0.0),
            valid,
        }
    }

    pub fn valid(position: Vec2, heading: f64, speed: f64) -> Self {
        Self::new(position, heading, speed, true)
    }

    pub fn invalid() -> Self {
        Self::new(Vec2::ZERO, 0.0, 0.0, false)
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Self {
        Self {
            position: tf.apply(self.position),
            heading: tf.apply_heading(self.heading),
            ..*self
        }
    }
}

/// Fixed-rate state sequence; step `k` is at time `k * DT` relative to the first state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<AgentState>,
}

impl Trajectory {
    pub fn new(states: Vec<AgentState>) -> Result<Self> {
        if states.is_empty() {
            return invalid("trajectory must have at least one state");
        }
        Ok(Self { states })
    }

    /// Fully valid trajectory from (position, heading, speed) triples.
    pub fn from_poses(poses: impl IntoIterator<Item = (Vec2, f64, f64)>) -> Result<Self> {
        Self::new(
            poses
                .into_iter()
                .map(|(p, h, v)| AgentState::valid(p, h, v))
                .collect(),
        )
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        index as f64 * DT
    }

    pub fn positions(&self) -> impl DoubleEndedIterator<Item = Vec2> + ExactSizeIterator + '_ {
        self.states.iter().map(|s| s.position)
    }

    pub fn last(&self) -> &AgentState {
        self.states.last().expect("non-empty")
    }

    pub fn last_valid(&self) -> Option<(usize, &AgentState)> {
        self.states.iter().enumerate().rev().find(|(_, s)| s.valid)
    }

    pub fn valid_count(&self) -> usize {
        self.states.iter().filter(|s| s.valid).count()
    }

    pub fn is_fully_valid(&self) -> bool {
        self.states.iter().all(|s| s.valid)
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Self {
        Self {
            states: self.states.iter().map(|s| s.transformed(tf)).collect(),
        }
    }

    /// Oriented footprint boxes at every step.
    pub fn boxes(&self, fp: &AgentFootprint) -> impl Iterator<Item = OrientedBox> + '_ {
        let fp = *fp;
        self.states
            .iter()
            .map(move |s| OrientedBox::new(s.position, s.heading, fp.length, fp.width))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FootprintRepr", into = "FootprintRepr")]
pub struct AgentFootprint {
    pub length: f64,
    pub width: f64,
}

#[derive(Serialize, Deserialize)]
struct FootprintRepr {
    length: f64,
    width: f64,
}

impl TryFrom<FootprintRepr> for AgentFootprint {
    type Error = Error;
    fn try_from(r: FootprintRepr) -> Result<Self> {
        AgentFootprint::new(r.length, r.width)
    }
}

impl From<AgentFootprint> for FootprintRepr {
    fn from(f: AgentFootprint) -> Self {
        FootprintRepr {
            length: f.length,
            width: f.width,
        }
    }
}

impl AgentFootprint {
    pub fn new(length: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && length >= width && length.is_finite()) {
            return invalid(format!("footprint needs length >= width > 0, got {length} x {width}"));
        }
        Ok(Self { length, width })
    }

    pub fn diagonal(&self) -> f64 {
        self.length.hypot(self.width)
    }
}

/// Closest approach between the valid states of two trajectories, over all index pairs.
///
/// Returns `(distance, idx_a, idx_b)`; among equal minima the lexicographically
/// smallest `(idx_a, idx_b)` wins.
pub fn pairwise_min_distance(a: &Trajectory, b: &Trajectory) -> Result<(f64, usize, usize)> {
    let bv: Vec<(usize, Vec2)> = b
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.valid)
        .map(|(j, s)| (j, s.position))
        .collect();
    if bv.is_empty() {
        return Err(Error::NoValidStates);
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, sa) in a.states.iter().enumerate().filter(|(_, s)| s.valid) {
        for &(j, pb) in &bv {
            let d2 = sa.position.dist_sq(pb);
            if best.is_none_or(|(bd, _, _)| d2 < bd) {
                best = Some((d2, i, j));
            }
        }
    }
    let (d2, i, j) = best.ok_or(Error::NoValidStates)?;
    Ok((d2.sqrt(), i, j))
}
