use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{final_arc, futures_overlap, random_footprint, random_placement, sample_yield_params, uniform, Driver, GeneratorConfig};
use crate::error::{invalid, Error, Result};
use crate::geom::{Polyline, Vec2};
use crate::scenario::{Agent, Lane, Scenario};
use crate::trajectory::{Trajectory, DT};

const MAX_ATTEMPTS: usize = 2000;

/// Stream offset keeping multi-agent scenes independent of the pair corpus.
const STREAM_BASE: u64 = 1 << 40;

/// Longest reactor gap in multi-agent scenes, s. Sequential yields must fit the horizon.
const MAX_CHAIN_GAP: f64 = 1.0;

/// Natural arrival delay of a chain reactor behind its influencer, s. Long enough that
/// reactors slow down rather than stop.
const CHAIN_LEAD: (f64, f64) = (0.6, 1.4);

fn chain_config(cfg: &GeneratorConfig) -> GeneratorConfig {
    let hi = cfg.gap_range.1.min(MAX_CHAIN_GAP).max(cfg.gap_range.0);
    GeneratorConfig {
        gap_range: (cfg.gap_range.0, hi),
        ..cfg.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainShape {
    /// Agent k yields to agent k-1 (three agents).
    Chain,
    /// Every other agent yields to agent 0.
    Fan,
    /// Parallel roads, no interaction.
    Independent,
}

/// A multi-agent scene and its intended influence edges `(influencer, reactor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedChain {
    pub scenario: Scenario,
    pub shape: ChainShape,
    pub edges: Vec<(String, String)>,
}

fn veh(k: usize) -> String {
    format!("veh-{k}")
}

/// Straight road through `through` with heading `angle`, 200 m before and 300 m after.
fn road(through: Vec2, angle: f64) -> Polyline {
    let d = Vec2::from_heading(angle);
    Polyline::new(vec![through - d * 200.0, through + d * 300.0]).expect("distinct points")
}

/// First step (1-based time) at which `future` is past arc `conflict` along the driver's path.
fn passing_time(d: &Driver, future: &Trajectory, conflict: f64) -> Option<f64> {
    let ahead = d.ahead();
    future
        .positions()
        .position(|p| d.s_now + ahead.project(p).0 >= conflict)
        .map(|k| (k + 1) as f64 * DT)
}

/// Multi-agent scene number `index` of the given shape.
pub fn generate_chain(cfg: &GeneratorConfig, shape: ChainShape, n_agents: usize, index: usize) -> Result<GeneratedChain> {
    cfg.validate()?;
    if n_agents < 3 {
        return invalid("multi-agent scenes need at least three agents");
    }
    if shape == ChainShape::Chain && n_agents != 3 {
        return invalid("chains are built with exactly three agents");
    }
    let cfg = &chain_config(cfg);
    let mut rng = cfg.rng(STREAM_BASE + index as u64);
    let id = format!("multi-{index:05}");
    for _ in 0..MAX_ATTEMPTS {
        let built = match shape {
            ChainShape::Chain => chain(cfg, &mut rng),
            ChainShape::Fan => fan(cfg, n_agents, &mut rng),
            ChainShape::Independent => parallel(cfg, n_agents, &mut rng),
        };
        if let Some((lanes, agents, edges)) = built {
            let ids = agents.iter().map(|a| a.id.clone()).collect();
            let (s, _) = random_placement(&Scenario::new(id, lanes, agents, ids)?, &mut rng);
            return Ok(GeneratedChain { scenario: s, shape, edges });
        }
    }
    Err(Error::Invalid(format!("no feasible {shape:?} scene after {MAX_ATTEMPTS} attempts")))
}

type Scene = (Vec<Lane>, Vec<Agent>, Vec<(String, String)>);

fn lanes_of(paths: &[Polyline]) -> Vec<Lane> {
    paths
        .iter()
        .enumerate()
        .map(|(k, p)| Lane {
            id: format!("road-{k}"),
            centerline: p.clone(),
            successors: vec![],
        })
        .collect()
}

fn no_overlaps(agents: &[Agent]) -> bool {
    agents
        .iter()
        .enumerate()
        .all(|(i, a)| agents[i + 1..].iter().all(|b| !futures_overlap(a, b)))
}

/// Smallest distance between any two points of two futures.
fn spatial_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.positions()
        .flat_map(|p| b.positions().map(move |q| p.dist(q)))
        .fold(f64::INFINITY, f64::min)
}

/// veh-0 crosses the road of veh-1, which then crosses the road of veh-2 further on.
fn chain(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Option<Scene> {
    let spacing = rng.random_range(18.0..25.0);
    // veh-0 and veh-2 drive parallel roads and never interact
    let heading = rng.random_range(85.0_f64..95.0).to_radians();
    let a_road = road(Vec2::ZERO, heading);
    let c_road = road(Vec2::new(spacing, 0.0), heading);
    let b_road = road(Vec2::new(0.0, 0.0), 0.0);
    let speeds = (cfg.speed_range.0.max(9.0).min(cfg.speed_range.1), cfg.speed_range.1.min(13.0).max(cfg.speed_range.0));

    let v_a = uniform(rng, speeds);
    let t_a = rng.random_range(0.5..1.2);
    let a = Driver {
        id: veh(0),
        footprint: random_footprint(rng),
        path: a_road.clone(),
        s_now: 200.0 - v_a * t_a,
        v: v_a,
    };
    let f_a = a.constant_future();

    let v_b = uniform(rng, speeds);
    let b = Driver {
        id: veh(1),
        footprint: random_footprint(rng),
        path: b_road.clone(),
        s_now: 200.0 - v_b * (t_a + uniform(rng, CHAIN_LEAD)),
        v: v_b,
    };
    let f_b = b.yielding_future(&[(&f_a, a.footprint)], &sample_yield_params(cfg, rng));
    let t_b2 = passing_time(&b, &f_b, 200.0 + spacing)?;

    let v_c = uniform(rng, speeds);
    let c = Driver {
        id: veh(2),
        footprint: random_footprint(rng),
        path: c_road.clone(),
        s_now: 200.0 - v_c * (t_b2 + uniform(rng, (0.3, 0.9))),
        v: v_c,
    };
    let f_c = c.yielding_future(&[(&f_b, b.footprint)], &sample_yield_params(cfg, rng));
    if final_arc(&c, &f_c) < 200.0 + c.footprint.length || final_arc(&b, &f_b) < 200.0 + spacing + b.footprint.length {
        return None;
    }
    // veh-0 and veh-2 must stay clear of each other
    if spatial_gap(&f_a, &f_c) < 10.0 {
        return None;
    }
    let agents = vec![
        a.into_agent(f_a, cfg.noise_std, rng),
        b.into_agent(f_b, cfg.noise_std, rng),
        c.into_agent(f_c, cfg.noise_std, rng),
    ];
    no_overlaps(&agents).then(|| {
        (
            lanes_of(&[a_road, b_road, c_road]),
            agents,
            vec![(veh(0), veh(1)), (veh(1), veh(2))],
        )
    })
}

/// veh-0 drives east across the roads of all other agents, who each wait for it.
fn fan(cfg: &GeneratorConfig, n: usize, rng: &mut ChaCha8Rng) -> Option<Scene> {
    let main = road(Vec2::ZERO, 0.0);
    let v_0 = rng.random_range(12.0..15.0_f64).clamp(cfg.speed_range.0, cfg.speed_range.1);
    let first = rng.random_range(5.0..12.0);
    let lead0 = Driver {
        id: veh(0),
        footprint: random_footprint(rng),
        path: main.clone(),
        s_now: 200.0 - first,
        v: v_0,
    };
    let f_0 = lead0.constant_future();
    let mut paths = vec![main];
    let mut agents = Vec::new();
    let mut futures = Vec::new();
    let mut x = 0.0;
    for k in 1..n {
        if k > 1 {
            x += rng.random_range(16.0..20.0);
        }
        let p = road(Vec2::new(x, 0.0), rng.random_range(80.0_f64..100.0).to_radians());
        let t_cross = (first + x) / v_0;
        let v = uniform(rng, (cfg.speed_range.0.max(4.0).min(cfg.speed_range.1), cfg.speed_range.1.min(10.0).max(cfg.speed_range.0)));
        let d = Driver {
            id: veh(k),
            footprint: random_footprint(rng),
            path: p.clone(),
            s_now: 200.0 - v * (t_cross + uniform(rng, CHAIN_LEAD)),
            v,
        };
        let f = d.yielding_future(&[(&f_0, lead0.footprint)], &sample_yield_params(cfg, rng));
        if final_arc(&d, &f) < 200.0 + d.footprint.length {
            return None;
        }
        if futures.iter().any(|g| spatial_gap(g, &f) < 8.0) {
            return None;
        }
        futures.push(f.clone());
        agents.push((d, f));
        paths.push(p);
    }
    let mut out = vec![lead0.into_agent(f_0, cfg.noise_std, rng)];
    for (d, f) in agents {
        out.push(d.into_agent(f, cfg.noise_std, rng));
    }
    let edges = (1..n).map(|k| (veh(0), veh(k))).collect();
    no_overlaps(&out).then(|| (lanes_of(&paths), out, edges))
}

/// Parallel roads 15-25 m apart with arbitrary directions.
fn parallel(cfg: &GeneratorConfig, n: usize, rng: &mut ChaCha8Rng) -> Option<Scene> {
    let mut y = 0.0;
    let mut paths = Vec::new();
    let mut agents = Vec::new();
    for k in 0..n {
        if k > 0 {
            y += rng.random_range(15.0..25.0);
        }
        let angle = if rng.random_bool(0.5) { 0.0 } else { std::f64::consts::PI };
        let p = road(Vec2::new(0.0, y), angle);
        let d = Driver {
            id: veh(k),
            footprint: random_footprint(rng),
            path: p.clone(),
            s_now: 200.0 + rng.random_range(-40.0..40.0),
            v: uniform(rng, cfg.speed_range),
        };
        let f = d.constant_future();
        agents.push(d.into_agent(f, cfg.noise_std, rng));
        paths.push(p);
    }
    Some((lanes_of(&paths), agents, Vec::new()))
}
