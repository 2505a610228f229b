//! Lane matching and route enumeration over the lane successor graph.

use crate::geom::{wrap_angle, Polyline, Vec2};
use crate::scenario::Scenario;

/// Lanes farther than this from the agent are never matched.
pub const MAX_MATCH_DISTANCE: f64 = 20.0;
/// Meters of lateral error equivalent to one radian of heading error in lane matching.
const HEADING_WEIGHT: f64 = 5.0;
const MAX_ROUTES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct LaneMatch {
    pub lane_id: String,
    pub arc: f64,
    pub lateral: f64,
    pub heading_error: f64,
}

/// A drivable path starting at the agent's projection onto its matched lane.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub line: Polyline,
    /// Lanes traversed, in order. Empty for the straight constant-velocity route.
    pub lanes: Vec<String>,
}

impl Route {
    /// Straight line from `start` along `heading`, `length` meters long.
    pub fn straight(start: Vec2, heading: f64, length: f64) -> Route {
        let end = start + Vec2::from_heading(heading) * length.max(1.0);
        Route {
            line: Polyline::new(vec![start, end]).expect("distinct endpoints"),
            lanes: Vec::new(),
        }
    }
}

/// Closest lane by lateral distance plus weighted heading error, ignoring lanes
/// pointing more than 90 degrees away from the agent.
pub fn match_lane(s: &Scenario, position: Vec2, heading: f64) -> Option<LaneMatch> {
    let mut best: Option<(f64, LaneMatch)> = None;
    for lane in &s.lanes {
        let (arc, lateral, lane_heading) = lane.centerline.project(position);
        let heading_error = wrap_angle(heading - lane_heading).abs();
        if lateral > MAX_MATCH_DISTANCE || heading_error > std::f64::consts::FRAC_PI_2 {
            continue;
        }
        let cost = lateral + HEADING_WEIGHT * heading_error;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((
                cost,
                LaneMatch {
                    lane_id: lane.id.clone(),
                    arc,
                    lateral,
                    heading_error,
                },
            ));
        }
    }
    best.map(|(_, m)| m)
}

/// Depth-first enumeration of routes from the matched lane until each route is at least
/// `min_length` long or reaches a lane without successors.
pub fn enumerate_routes(s: &Scenario, m: &LaneMatch, min_length: f64) -> Vec<Route> {
    let Some(start) = s.lane(&m.lane_id) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut stack = vec![Route {
        line: start.centerline.tail_from(m.arc),
        lanes: vec![start.id.clone()],
    }];
    while let Some(route) = stack.pop() {
        if out.len() >= MAX_ROUTES {
            break;
        }
        let last = s.lane(route.lanes.last().expect("non-empty")).expect("validated successors");
        let next: Vec<_> = last
            .successors
            .iter()
            .filter(|id| !route.lanes.contains(id))
            .filter_map(|id| s.lane(id))
            .collect();
        if route.line.length() >= min_length || next.is_empty() {
            out.push(route);
            continue;
        }
        // reversed so the first successor is explored first
        for lane in next.into_iter().rev() {
            let mut lanes = route.lanes.clone();
            lanes.push(lane.id.clone());
            stack.push(Route {
                line: route.line.concat(&lane.centerline),
                lanes,
            });
        }
    }
    out
}
