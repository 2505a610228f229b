//! Longitudinal speed profiles: ramp-and-hold goal reaching, and the yield model
//! that delays a path until other agents have cleared it.

use crate::geom::Polyline;
use crate::trajectory::{Trajectory, DT, FUTURE_LEN, HORIZON};

/// Speed ramps linearly from `v0` to `cruise` at `rate` m/s^2, then holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProfile {
    pub v0: f64,
    pub cruise: f64,
    pub rate: f64,
}

impl RampProfile {
    fn ramp_time(&self) -> f64 {
        if self.cruise == self.v0 {
            0.0
        } else {
            (self.cruise - self.v0).abs() / self.rate
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        let tr = self.ramp_time();
        if t >= tr {
            self.cruise
        } else {
            self.v0 + (self.cruise - self.v0) * (t / tr)
        }
    }

    pub fn distance(&self, t: f64) -> f64 {
        let tr = self.ramp_time();
        if t >= tr {
            0.5 * (self.v0 + self.cruise) * tr + self.cruise * (t - tr)
        } else {
            let v = self.speed(t);
            0.5 * (self.v0 + v) * t
        }
    }

    /// Speeds and arc lengths at steps 1..=FUTURE_LEN.
    pub fn sample(&self) -> LongitudinalPlan {
        let (speeds, arcs) = (1..=FUTURE_LEN)
            .map(|k| {
                let t = k as f64 * DT;
                (self.speed(t), self.distance(t))
            })
            .unzip();
        LongitudinalPlan { speeds, arcs }
    }
}

/// Range of distances reachable over the horizon with a ramp-and-hold profile
/// that never reverses: `[full comfort braking, full acceleration]`.
pub fn reachable_distance(v0: f64, accel: f64, decel: f64) -> (f64, f64) {
    let lo = if v0 <= decel * HORIZON {
        v0 * v0 / (2.0 * decel)
    } else {
        v0 * HORIZON - 0.5 * decel * HORIZON * HORIZON
    };
    (lo, v0 * HORIZON + 0.5 * accel * HORIZON * HORIZON)
}

/// Ramp-and-hold profile covering exactly `distance` meters in the horizon
/// (clamped into the reachable range).
pub fn profile_for_distance(v0: f64, distance: f64, accel: f64, decel: f64) -> RampProfile {
    let (lo, hi) = reachable_distance(v0, accel, decel);
    let d = distance.clamp(lo, hi);
    let h = HORIZON;
    let base = v0 * h;
    if d >= base {
        // d = vc*h - (vc - v0)^2 / (2a), smaller root in u = vc - v0
        let u = accel * (h - (h * h - 2.0 * (d - base) / accel).max(0.0).sqrt());
        RampProfile {
            v0,
            cruise: v0 + u,
            rate: accel,
        }
    } else {
        // d = vc*h + (v0 - vc)^2 / (2b), smaller root in u = v0 - vc
        let u = decel * (h - (h * h - 2.0 * (base - d) / decel).max(0.0).sqrt());
        RampProfile {
            v0,
            cruise: (v0 - u).max(0.0),
            rate: decel,
        }
    }
}

/// Speeds and traveled arc lengths at steps 1..=FUTURE_LEN.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalPlan {
    pub speeds: Vec<f64>,
    pub arcs: Vec<f64>,
}

impl LongitudinalPlan {
    /// Constant speed over the horizon.
    pub fn constant(v: f64) -> Self {
        RampProfile {
            v0: v,
            cruise: v,
            rate: 1.0,
        }
        .sample()
    }

    /// Trajectory following `line` with this plan.
    pub fn rollout(&self, line: &Polyline) -> Trajectory {
        Trajectory::from_poses(self.arcs.iter().zip(&self.speeds).map(|(&s, &v)| {
            let p = line.point_at_extrapolated(s);
            (p.position, p.heading, v)
        }))
        .expect("horizon is non-empty")
    }

    /// Largest per-step speed drop divided by DT, given the initial speed.
    pub fn peak_decel(&self, v0: f64) -> f64 {
        std::iter::once(v0)
            .chain(self.speeds.iter().copied())
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| (w[0] - w[1]) / DT)
            .fold(0.0, f64::max)
    }
}

/// Parameters of the yield model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldParams {
    pub gap_time: f64,
    pub gap_distance: f64,
    pub comfort_decel: f64,
    pub max_decel: f64,
    pub max_accel: f64,
}

/// Arc sampling resolution of the path occupancy scan.
pub const ARC_RESOLUTION: f64 = 0.5;

/// Another agent's future and the center distance below which it occupies a path point.
#[derive(Debug, Clone, Copy)]
pub struct Occupant<'a> {
    pub future: &'a Trajectory,
    pub radius: f64,
}

/// Re-time a path so that every point is reached no earlier than `gap_time` after the
/// last moment any occupant is within its radius of that point. The path is kept, the
/// desired speeds of `base` are followed where the constraint allows, and braking uses
/// comfort deceleration when possible and maximum deceleration otherwise.
pub fn yield_plan(line: &Polyline, v0: f64, base: &LongitudinalPlan, occupants: &[Occupant<'_>], p: &YieldParams) -> LongitudinalPlan {
    let reach = base.arcs.last().copied().unwrap_or(0.0) + p.gap_distance + 2.0 * ARC_RESOLUTION;
    let samples = (reach / ARC_RESOLUTION).ceil() as usize + 1;
    let points: Vec<_> = (0..samples)
        .map(|j| line.point_at_extrapolated(j as f64 * ARC_RESOLUTION).position)
        .collect();

    // earliest admissible arrival time per arc sample
    let mut release = vec![f64::NEG_INFINITY; samples];
    for occ in occupants {
        let r2 = occ.radius * occ.radius;
        for (k, st) in occ.future.states().iter().enumerate() {
            let t = (k + 1) as f64 * DT + p.gap_time;
            for (rel, pt) in release.iter_mut().zip(&points) {
                if pt.dist_sq(st.position) < r2 && t > *rel {
                    *rel = t;
                }
            }
        }
    }
    // a point is only reachable after everything before it is released
    for j in 1..samples {
        release[j] = release[j].max(release[j - 1]);
    }

    let mut speeds = Vec::with_capacity(FUTURE_LEN);
    let mut arcs = Vec::with_capacity(FUTURE_LEN);
    let (mut s, mut v) = (0.0_f64, v0);
    for k in 0..FUTURE_LEN {
        let t = (k + 1) as f64 * DT;
        let stop_at = release
            .iter()
            .position(|&r| r > t)
            .map_or(f64::INFINITY, |j| j as f64 * ARC_RESOLUTION - p.gap_distance - ARC_RESOLUTION);
        let v_des = base.speeds[k];
        // largest v' with s + (v + v') dt / 2 + v'^2 / (2 b) <= stop_at
        let b = p.comfort_decel;
        let c = s + 0.5 * v * DT - stop_at;
        let disc = (0.5 * b * DT).powi(2) - 2.0 * b * c;
        let v_safe = if disc >= 0.0 { -0.5 * b * DT + disc.sqrt() } else { f64::NEG_INFINITY };
        let v_next = v_des
            .min(v + p.max_accel * DT)
            .min(v_safe)
            .max(v - p.max_decel * DT)
            .max(0.0);
        s += 0.5 * (v + v_next) * DT;
        v = v_next;
        speeds.push(v);
        arcs.push(s);
    }
    LongitudinalPlan { speeds, arcs }
}
