//! Synthetic interactive scenarios with known relations. Influencers drive at constant
//! speed, reactors follow the yield model with their own sampled gap parameters.

mod chain;
mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{Polyline, RigidTransform, Vec2};
use crate::predict::profile::{yield_plan, LongitudinalPlan, Occupant, YieldParams, ARC_RESOLUTION};
use crate::relation::{dynamic_threshold, label_relation, ConflictGeometry, RelationType};
use crate::scenario::{Agent, Scenario};
use crate::trajectory::{AgentFootprint, AgentState, Trajectory, DT, HISTORY_LEN};

pub use chain::{generate_chain, ChainShape, GeneratedChain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    CrossingYield,
    CrossingPass,
    MergeBehind,
    Overtake,
    Independent,
    UTurnYield,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 6] = [
        TemplateKind::CrossingYield,
        TemplateKind::CrossingPass,
        TemplateKind::MergeBehind,
        TemplateKind::Overtake,
        TemplateKind::Independent,
        TemplateKind::UTurnYield,
    ];

    /// Relation of the first interacting agent towards the second.
    pub fn intended_relation(self) -> RelationType {
        match self {
            TemplateKind::CrossingPass | TemplateKind::Overtake => RelationType::Pass,
            TemplateKind::Independent => RelationType::None,
            TemplateKind::CrossingYield | TemplateKind::MergeBehind | TemplateKind::UTurnYield => RelationType::Yield,
        }
    }

    /// Templates whose reactor yields with the first interacting agent as reactor.
    pub fn is_yield(self) -> bool {
        self.intended_relation() == RelationType::Yield
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateKind::CrossingYield => "crossing_yield",
            TemplateKind::CrossingPass => "crossing_pass",
            TemplateKind::MergeBehind => "merge_behind",
            TemplateKind::Overtake => "overtake",
            TemplateKind::Independent => "independent",
            TemplateKind::UTurnYield => "u_turn_yield",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown template `{s}`")))
    }
}

/// Sampling ranges shared by all templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Scenarios per template.
    pub count: usize,
    /// Standard deviation (m) of the position noise added to observed histories.
    pub noise_std: f64,
    pub templates: Vec<TemplateKind>,
    /// Approach speeds, m/s.
    pub speed_range: (f64, f64),
    /// Time the reactor keeps after the influencer has cleared a path point, s.
    pub gap_range: (f64, f64),
    /// Distance the reactor keeps to a still-occupied path point, m.
    pub gap_distance_range: (f64, f64),
    /// Time until the influencer reaches the conflict point, s.
    pub arrival_range: (f64, f64),
    /// How much later the reactor would reach the conflict point at its current speed, s.
    pub lead_range: (f64, f64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 100,
            noise_std: 0.05,
            templates: TemplateKind::ALL.to_vec(),
            speed_range: (2.0, 15.0),
            gap_range: (0.5, 4.0),
            gap_distance_range: (1.0, 3.0),
            arrival_range: (1.5, 4.0),
            lead_range: (0.2, 1.2),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: (f64, f64), min: f64| r.0.is_finite() && r.1.is_finite() && r.0 >= min && r.0 <= r.1;
        if self.count == 0 {
            return invalid("generator count must be at least 1");
        }
        if self.templates.is_empty() {
            return invalid("at least one template is required");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return invalid("noise_std must be non-negative");
        }
        if !(range_ok(self.speed_range, 1.0)
            && range_ok(self.gap_range, 0.0)
            && range_ok(self.gap_distance_range, 0.0)
            && range_ok(self.arrival_range, 0.5)
            && range_ok(self.lead_range, 0.0))
        {
            return invalid("generator ranges must be finite, ordered and non-negative (speeds >= 1 m/s)");
        }
        Ok(())
    }

    /// Random stream of one scenario: independent of every other index.
    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// A generated scenario with its intended relation and the sampled parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub scenario: Scenario,
    pub template: TemplateKind,
    pub intended: RelationType,
    pub params: BTreeMap<String, f64>,
}

impl GeneratedScenario {
    /// Heuristic label of the interacting pair on the ground-truth futures.
    pub fn heuristic_label(&self) -> Result<(RelationType, ConflictGeometry)> {
        let (a, b) = self.scenario.pair();
        let (a, b) = (self.scenario.agent(a)?, self.scenario.agent(b)?);
        label_relation(&a.future, &b.future, &a.footprint, &b.footprint)
    }
}

/// Instances where the heuristic sits on a decision boundary: near-simultaneous
/// arrival or a closest approach within 0.25 m of the threshold.
pub fn is_edge_case(g: &ConflictGeometry) -> bool {
    g.t1.abs_diff(g.t2) <= 1 || (g.d_i - g.epsilon_d).abs() < 0.25
}

/// `count` scenarios per template, template-major. Deterministic given the seed.
pub fn generate_corpus(cfg: &GeneratorConfig) -> Result<Vec<GeneratedScenario>> {
    cfg.validate()?;
    let jobs: Vec<(usize, TemplateKind)> = cfg
        .templates
        .iter()
        .enumerate()
        .flat_map(|(t, &kind)| (0..cfg.count).map(move |i| (t * cfg.count + i, kind)))
        .collect();
    crate::par_map(&jobs, |&(index, kind)| templates::generate_pair(cfg, kind, index))
        .into_iter()
        .collect()
}

#[derive(Serialize)]
struct LabelRow<'a> {
    scenario_id: &'a str,
    intended_relation: &'a str,
    template: &'a str,
    parameters: String,
}

/// Sidecar table: scenario id, intended relation, template and sampled parameters.
pub fn write_label_csv<W: Write>(w: W, corpus: &[GeneratedScenario]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for g in corpus {
        out.serialize(LabelRow {
            scenario_id: &g.scenario.id,
            intended_relation: g.intended.as_str(),
            template: g.template.as_str(),
            parameters: g.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
        })?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// shared construction helpers

pub(crate) fn uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.1 > r.0 {
        rng.random_range(r.0..r.1)
    } else {
        r.0
    }
}

pub(crate) fn random_footprint(rng: &mut ChaCha8Rng) -> AgentFootprint {
    AgentFootprint::new(rng.random_range(4.0..5.0), rng.random_range(1.8..2.1)).expect("length exceeds width")
}

pub(crate) fn random_pose(rng: &mut ChaCha8Rng) -> RigidTransform {
    RigidTransform::new(
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        Vec2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)),
    )
}

/// Reflection across the x axis.
fn mirrored(s: &Scenario) -> Scenario {
    let flip = |p: Vec2| Vec2::new(p.x, -p.y);
    let flip_traj = |t: &Trajectory| {
        Trajectory::new(t.states().iter().map(|st| AgentState::new(flip(st.position), -st.heading(), st.speed(), st.valid)).collect())
            .expect("same length")
    };
    Scenario {
        lanes: s
            .lanes
            .iter()
            .map(|l| crate::scenario::Lane {
                centerline: Polyline::new(l.centerline.points().iter().map(|&p| flip(p)).collect()).expect("isometric image"),
                ..l.clone()
            })
            .collect(),
        agents: s
            .agents
            .iter()
            .map(|a| Agent {
                history: flip_traj(&a.history),
                future: flip_traj(&a.future),
                ..a.clone()
            })
            .collect(),
        ..s.clone()
    }
}

/// Mirror the layout with probability one half, then place it at a random pose, so
/// left/right and absolute position carry no information about the relation.
/// Returns whether the scene was mirrored.
pub(crate) fn random_placement(s: &Scenario, rng: &mut ChaCha8Rng) -> (Scenario, bool) {
    let mirror = rng.random_bool(0.5);
    let s = if mirror { mirrored(s) } else { s.clone() };
    (s.transformed(&random_pose(rng)), mirror)
}

/// An agent moving along `path`, currently at arc `s_now` with speed `v`.
#[derive(Debug, Clone)]
pub(crate) struct Driver {
    pub id: String,
    pub footprint: AgentFootprint,
    pub path: Polyline,
    pub s_now: f64,
    pub v: f64,
}

impl Driver {
    /// Constant-speed history with position noise on every observed state.
    pub fn history(&self, noise: f64, rng: &mut ChaCha8Rng) -> Trajectory {
        let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("finite std");
        let states = (0..HISTORY_LEN)
            .map(|k| {
                let s = self.s_now - self.v * DT * (HISTORY_LEN - 1 - k) as f64;
                let p = self.path.point_at_extrapolated(s);
                let jitter = if noise > 0.0 {
                    Vec2::new(normal.sample(rng), normal.sample(rng))
                } else {
                    Vec2::ZERO
                };
                AgentState::valid(p.position + jitter, p.heading, self.v)
            })
            .collect();
        Trajectory::new(states).expect("non-empty history")
    }

    pub fn ahead(&self) -> Polyline {
        self.path.tail_from(self.s_now)
    }

    pub fn constant_future(&self) -> Trajectory {
        LongitudinalPlan::constant(self.v).rollout(&self.ahead())
    }

    /// Future that yields to every trajectory in `others`.
    pub fn yielding_future(&self, others: &[(&Trajectory, AgentFootprint)], params: &YieldParams) -> Trajectory {
        let occupants: Vec<Occupant<'_>> = others
            .iter()
            .map(|(t, fp)| Occupant {
                future: t,
                radius: dynamic_threshold(&self.footprint, fp) + ARC_RESOLUTION,
            })
            .collect();
        let ahead = self.ahead();
        yield_plan(&ahead, self.v, &LongitudinalPlan::constant(self.v), &occupants, params).rollout(&ahead)
    }

    pub fn into_agent(self, future: Trajectory, noise: f64, rng: &mut ChaCha8Rng) -> Agent {
        Agent {
            history: self.history(noise, rng),
            id: self.id,
            footprint: self.footprint,
            future,
        }
    }
}

/// Ground-truth yield parameters: sampled gaps, shared kinematic limits.
pub(crate) fn sample_yield_params(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> YieldParams {
    let limits = crate::predict::PredictorConfig::default();
    YieldParams {
        gap_time: uniform(rng, cfg.gap_range),
        gap_distance: uniform(rng, cfg.gap_distance_range),
        comfort_decel: limits.comfort_decel,
        max_decel: limits.max_decel,
        max_accel: limits.max_accel,
    }
}

/// Whether the footprints of two futures intersect at any common step.
pub(crate) fn futures_overlap(a: &Agent, b: &Agent) -> bool {
    a.future
        .boxes(&a.footprint)
        .zip(b.future.boxes(&b.footprint))
        .any(|(p, q)| crate::geom::boxes_overlap(&p, &q))
}

/// Traveled arc length of a future measured along `path` from `s_now`.
pub(crate) fn final_arc(d: &Driver, future: &Trajectory) -> f64 {
    d.s_now + d.ahead().project(future.last().position).0
}
