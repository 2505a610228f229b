use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    final_arc, futures_overlap, random_footprint, random_placement, sample_yield_params, uniform, Driver, GeneratedScenario,
    GeneratorConfig, TemplateKind,
};
use crate::error::{Error, Result};
use crate::geom::{Polyline, Vec2};
use crate::scenario::{Lane, Scenario};

const MAX_ATTEMPTS: usize = 1000;

/// Lane graph plus the paths of both agents and where on each path they conflict.
struct Layout {
    lanes: Vec<Lane>,
    reactor_path: Polyline,
    influencer_path: Polyline,
    reactor_conflict: f64,
    influencer_conflict: f64,
}

fn line(points: &[(f64, f64)]) -> Polyline {
    Polyline::new(points.iter().map(|&(x, y)| Vec2::new(x, y)).collect()).expect("template geometry is valid")
}

fn lane(id: &str, centerline: Polyline, successors: &[&str]) -> Lane {
    Lane {
        id: id.to_string(),
        centerline,
        successors: successors.iter().map(|s| s.to_string()).collect(),
    }
}

/// Two straight roads crossing at the origin; the reactor drives east.
fn crossing(angle: f64) -> Layout {
    let d = Vec2::from_heading(angle);
    let ew = line(&[(-200.0, 0.0), (300.0, 0.0)]);
    let other = Polyline::new(vec![d * -200.0, d * 300.0]).expect("distinct points");
    Layout {
        lanes: vec![lane("road-ew", ew.clone(), &[]), lane("road-x", other.clone(), &[])],
        reactor_path: ew,
        influencer_path: other,
        reactor_conflict: 200.0,
        influencer_conflict: 200.0,
    }
}

/// Main road along +x with a ramp joining it at the origin under `angle`.
fn merge(angle: f64) -> Layout {
    let main_a = line(&[(-250.0, 0.0), (0.0, 0.0)]);
    let main_b = line(&[(0.0, 0.0), (300.0, 0.0)]);
    let ramp = Polyline::new(vec![Vec2::from_heading(angle) * -200.0, Vec2::ZERO]).expect("distinct points");
    Layout {
        reactor_path: ramp.concat(&main_b),
        influencer_path: main_a.concat(&main_b),
        lanes: vec![
            lane("main-a", main_a, &["main-b"]),
            lane("main-b", main_b, &[]),
            lane("ramp", ramp, &["main-b"]),
        ],
        reactor_conflict: 200.0,
        influencer_conflict: 250.0,
    }
}

/// Reactor on the main road; a parallel lane at `offset` joins it at the origin after
/// a diagonal of length `taper` along x.
fn overtake(offset: f64, taper: f64) -> Layout {
    let main_a = line(&[(-250.0, 0.0), (0.0, 0.0)]);
    let main_b = line(&[(0.0, 0.0), (300.0, 0.0)]);
    let side = line(&[(-250.0, offset), (-taper, offset), (0.0, 0.0)]);
    Layout {
        reactor_path: main_a.concat(&main_b),
        influencer_conflict: side.length(),
        influencer_path: side.concat(&main_b),
        lanes: vec![
            lane("main-a", main_a, &["main-b"]),
            lane("main-b", main_b, &[]),
            lane("side", side, &["main-b"]),
        ],
        reactor_conflict: 250.0,
    }
}

/// Eastbound reactor turning around into the westbound lane at `offset`, where the
/// influencer approaches from the east.
fn u_turn(offset: f64) -> Layout {
    let r = 0.5 * offset;
    let eb_a = line(&[(-250.0, 0.0), (0.0, 0.0)]);
    let eb_b = line(&[(0.0, 0.0), (300.0, 0.0)]);
    let arc = Polyline::new(
        (0..=16)
            .map(|i| {
                let a = -0.5 * PI + PI * i as f64 / 16.0;
                Vec2::new(r * a.cos(), r + r * a.sin())
            })
            .collect(),
    )
    .expect("distinct arc points");
    let wb_a = line(&[(300.0, offset), (0.0, offset)]);
    let wb_b = line(&[(0.0, offset), (-300.0, offset)]);
    Layout {
        reactor_conflict: eb_a.length() + arc.length(),
        reactor_path: eb_a.concat(&arc).concat(&wb_b),
        influencer_path: wb_a.concat(&wb_b),
        influencer_conflict: 300.0,
        lanes: vec![
            lane("eb-a", eb_a, &["eb-b", "u-turn"]),
            lane("eb-b", eb_b, &[]),
            lane("u-turn", arc, &["wb-b"]),
            lane("wb-a", wb_a, &["wb-b"]),
            lane("wb-b", wb_b, &[]),
        ],
    }
}

pub(crate) fn generate_pair(cfg: &GeneratorConfig, kind: TemplateKind, index: usize) -> Result<GeneratedScenario> {
    let mut rng = cfg.rng(index as u64);
    let id = format!("{}-{:05}", kind.as_str(), index);
    for attempt in 0..MAX_ATTEMPTS {
        let built = if kind == TemplateKind::Independent {
            independent(cfg, &id, &mut rng)
        } else {
            interacting(cfg, kind, &id, &mut rng)
        };
        if let Some((scenario, mut params)) = built? {
            params.insert("attempts".into(), (attempt + 1) as f64);
            return Ok(GeneratedScenario {
                scenario,
                template: kind,
                intended: kind.intended_relation(),
                params,
            });
        }
    }
    Err(Error::Invalid(format!("no feasible `{kind}` instance after {MAX_ATTEMPTS} attempts")))
}

type Built = Option<(Scenario, BTreeMap<String, f64>)>;

fn interacting(cfg: &GeneratorConfig, kind: TemplateKind, id: &str, rng: &mut ChaCha8Rng) -> Result<Built> {
    let (lo, hi) = cfg.speed_range;
    let mut params = BTreeMap::new();
    let (layout, v_i, v_r) = match kind {
        TemplateKind::CrossingYield | TemplateKind::CrossingPass => {
            let angle = rng.random_range(50.0_f64..130.0).to_radians();
            params.insert("angle_deg".to_string(), angle.to_degrees());
            (crossing(angle), uniform(rng, cfg.speed_range), uniform(rng, cfg.speed_range))
        }
        TemplateKind::MergeBehind => {
            let angle = rng.random_range(15.0_f64..35.0).to_radians();
            params.insert("angle_deg".to_string(), angle.to_degrees());
            (merge(angle), uniform(rng, cfg.speed_range), uniform(rng, cfg.speed_range))
        }
        TemplateKind::Overtake => {
            let offset = rng.random_range(6.5..7.5);
            let taper = rng.random_range(25.0..40.0);
            params.insert("offset".to_string(), offset);
            params.insert("taper".to_string(), taper);
            let v_r = uniform(rng, (lo, (0.7 * hi).max(lo)));
            let v_i = (v_r + rng.random_range(3.0..6.0)).min(hi);
            (overtake(offset, taper), v_i, v_r)
        }
        TemplateKind::UTurnYield => {
            let offset = rng.random_range(7.0..8.0);
            params.insert("offset".to_string(), offset);
            let v_r = uniform(rng, (lo, hi.min(6.0).max(lo)));
            (u_turn(offset), uniform(rng, (lo.max(5.0).min(hi), hi)), v_r)
        }
        TemplateKind::Independent => unreachable!("handled separately"),
    };
    let arrival = uniform(rng, cfg.arrival_range);
    let lead = uniform(rng, cfg.lead_range);
    let yp = sample_yield_params(cfg, rng);

    let influencer = Driver {
        id: String::new(),
        footprint: random_footprint(rng),
        path: layout.influencer_path,
        s_now: layout.influencer_conflict - v_i * arrival,
        v: v_i,
    };
    let reactor = Driver {
        id: String::new(),
        footprint: random_footprint(rng),
        path: layout.reactor_path,
        s_now: layout.reactor_conflict - v_r * (arrival + lead),
        v: v_r,
    };
    if kind == TemplateKind::Overtake {
        let (pi, pr) = (
            influencer.path.point_at_extrapolated(influencer.s_now).position,
            reactor.path.point_at_extrapolated(reactor.s_now).position,
        );
        // the influencer starts behind the reactor
        if pi.x > pr.x - 2.0 {
            return Ok(None);
        }
    }

    let f_i = influencer.constant_future();
    let f_r = reactor.yielding_future(&[(&f_i, influencer.footprint)], &yp);
    if final_arc(&reactor, &f_r) < layout.reactor_conflict + reactor.footprint.length {
        return Ok(None);
    }

    // the first interacting agent is the one whose relation the template names
    let (first, f_first, second, f_second) = if kind.is_yield() {
        (reactor, f_r, influencer, f_i)
    } else {
        (influencer, f_i, reactor, f_r)
    };
    let a = Driver { id: "veh-0".into(), ..first }.into_agent(f_first, cfg.noise_std, rng);
    let b = Driver { id: "veh-1".into(), ..second }.into_agent(f_second, cfg.noise_std, rng);
    if futures_overlap(&a, &b) {
        return Ok(None);
    }
    params.insert("v_influencer".into(), v_i);
    params.insert("v_reactor".into(), v_r);
    params.insert("arrival".into(), arrival);
    params.insert("lead".into(), lead);
    params.insert("gap_time".into(), yp.gap_time);
    params.insert("gap_distance".into(), yp.gap_distance);

    let s = Scenario::new(id, layout.lanes, vec![a, b], vec!["veh-0".into(), "veh-1".into()])?;
    let (s, mirror) = random_placement(&s, rng);
    params.insert("mirrored".into(), f64::from(u8::from(mirror)));
    Ok(Some((s, params)))
}

/// Non-conflicting pairs: parallel roads far apart, or a crossing the second agent has
/// already left behind.
fn independent(cfg: &GeneratorConfig, id: &str, rng: &mut ChaCha8Rng) -> Result<Built> {
    let mut params = BTreeMap::new();
    let (v1, v2) = (uniform(rng, cfg.speed_range), uniform(rng, cfg.speed_range));
    let (lanes, d1, d2) = if rng.random_bool(0.5) {
        let offset = rng.random_range(8.0..20.0);
        let opposite = rng.random_bool(0.5);
        params.insert("offset".to_string(), offset);
        params.insert("opposite".to_string(), f64::from(u8::from(opposite)));
        let l1 = line(&[(-250.0, 0.0), (300.0, 0.0)]);
        let l2 = if opposite {
            line(&[(300.0, offset), (-250.0, offset)])
        } else {
            line(&[(-250.0, offset), (300.0, offset)])
        };
        let x1 = rng.random_range(-60.0..20.0);
        let x2 = rng.random_range(-60.0..20.0);
        let s2 = if opposite { 300.0 - x2 } else { 250.0 + x2 };
        let d1 = Driver {
            id: "veh-0".into(),
            footprint: random_footprint(rng),
            path: l1.clone(),
            s_now: 250.0 + x1,
            v: v1,
        };
        let d2 = Driver {
            id: "veh-1".into(),
            footprint: random_footprint(rng),
            path: l2.clone(),
            s_now: s2,
            v: v2,
        };
        (vec![lane("road-a", l1, &[]), lane("road-b", l2, &[])], d1, d2)
    } else {
        let angle = rng.random_range(50.0_f64..130.0).to_radians();
        let past = rng.random_range(10.0..40.0);
        params.insert("angle_deg".to_string(), angle.to_degrees());
        params.insert("past".to_string(), past);
        let layout = crossing(angle);
        let arrival = uniform(rng, cfg.arrival_range);
        let d1 = Driver {
            id: "veh-0".into(),
            footprint: random_footprint(rng),
            s_now: layout.reactor_conflict - v1 * arrival,
            path: layout.reactor_path,
            v: v1,
        };
        let d2 = Driver {
            id: "veh-1".into(),
            footprint: random_footprint(rng),
            s_now: layout.influencer_conflict + past,
            path: layout.influencer_path,
            v: v2,
        };
        (layout.lanes, d1, d2)
    };
    let (f1, f2) = (d1.constant_future(), d2.constant_future());
    let a = d1.into_agent(f1, cfg.noise_std, rng);
    let b = d2.into_agent(f2, cfg.noise_std, rng);
    params.insert("v_first".into(), v1);
    params.insert("v_second".into(), v2);
    let s = Scenario::new(id, lanes, vec![a, b], vec!["veh-0".into(), "veh-1".into()])?;
    let (s, mirror) = random_placement(&s, rng);
    params.insert("mirrored".into(), f64::from(u8::from(mirror)));
    Ok(Some((s, params)))
}
