use super::profile::{profile_for_distance, reachable_distance, LongitudinalPlan};
use super::route::{enumerate_routes, match_lane, Route};
use super::{normalized_ranking, GoalCandidate, PredictionSample, PredictionSet, PredictorConfig};
use crate::error::{Error, Result};
use crate::scenario::{Agent, Scenario};
use crate::trajectory::{Trajectory, HORIZON};

/// Speeds below this are treated as standing still.
const STANDSTILL: f64 = 0.1;

/// A goal with the route and speed plan that reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalRollout {
    pub goal: GoalCandidate,
    pub route: Route,
    pub plan: LongitudinalPlan,
}

impl GoalRollout {
    pub fn trajectory(&self) -> Trajectory {
        self.plan.rollout(&self.route.line)
    }
}

/// Every goal candidate of one agent, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalPlan {
    pub agent_id: String,
    pub v0: f64,
    pub goals: Vec<GoalRollout>,
}

impl GoalPlan {
    pub fn scores(&self) -> Vec<f64> {
        self.goals.iter().map(|g| g.goal.score).collect()
    }

    /// Indices of the `n` best goals and their renormalized confidences,
    /// sorted by descending confidence (ties keep enumeration order).
    pub fn top(&self, n: usize) -> Vec<(usize, f64)> {
        let top = self.top_indices(n);
        let scores: Vec<f64> = top.iter().map(|&i| self.goals[i].goal.score).collect();
        rank_subset(&top, &scores)
    }

    /// Indices of the `n` best-scoring goals, best first.
    pub(crate) fn top_indices(&self, n: usize) -> Vec<usize> {
        normalized_ranking(&self.scores()).iter().take(n).map(|r| r.0).collect()
    }
}

fn usable_history(agent: &Agent) -> Result<()> {
    if agent.history.valid_count() < 2 {
        return Err(Error::Invalid(format!(
            "agent `{}` needs at least two valid history states",
            agent.id
        )));
    }
    Ok(())
}

/// Enumerate and score the goal candidates of `agent_id`.
///
/// Lane goals are spread evenly over the reachable distance range on every route
/// leaving the matched lane; one constant-velocity goal is always added. The score
/// is `-w (d / H - v0)^2` plus a lane bonus scaled by heading alignment.
pub fn plan_goals(s: &Scenario, agent_id: &str, cfg: &PredictorConfig) -> Result<GoalPlan> {
    cfg.validate()?;
    let agent = s.agent(agent_id)?;
    usable_history(agent)?;
    let cur = agent.current();
    let v0 = cur.speed();
    let (d_lo, d_hi) = reachable_distance(v0, cfg.max_accel, cfg.comfort_decel);
    let speed_score = |d: f64| -cfg.speed_weight * (d / HORIZON - v0).powi(2);

    let lane_match = match_lane(s, cur.position, cur.heading());
    let routes = lane_match
        .as_ref()
        .map(|m| enumerate_routes(s, m, d_hi + 10.0))
        .unwrap_or_default();
    if routes.is_empty() && v0 < STANDSTILL {
        // no lane and no motion to extrapolate
        let has_motion = agent.history.states().iter().filter(|st| st.valid).any(|st| st.speed() >= STANDSTILL);
        if !has_motion {
            return Err(Error::Degenerate(agent_id.to_string()));
        }
    }

    let straight = Route::straight(cur.position, cur.heading(), d_hi + 10.0);
    let mut goals = Vec::with_capacity(cfg.goal_candidates);
    let mut push = |route: &Route, d: f64, bonus: f64| {
        let point = route.line.point_at_extrapolated(d);
        let lane_id = route.lanes.iter().rev().find(|id| {
            s.lane(id)
                .is_some_and(|l| l.centerline.project(point.position).1 < 1e-6)
        });
        goals.push(GoalRollout {
            goal: GoalCandidate {
                position: point.position,
                lane_id: lane_id.or(route.lanes.last()).cloned(),
                arc_offset: d,
                score: speed_score(d) + bonus,
            },
            route: route.clone(),
            plan: profile_for_distance(v0, d, cfg.max_accel, cfg.comfort_decel).sample(),
        });
    };

    if routes.is_empty() {
        // constant-velocity fallback only: spread all goals along the straight route
        for d in spread(d_lo, d_hi, cfg.goal_candidates) {
            push(&straight, d, 0.0);
        }
    } else {
        let bonus = cfg.lane_bonus * lane_match.as_ref().map_or(0.0, |m| m.heading_error.cos().max(0.0));
        let lane_goals = cfg.goal_candidates - 1;
        let per_route = lane_goals / routes.len();
        let extra = lane_goals % routes.len();
        for (r, route) in routes.iter().enumerate() {
            let m = per_route + usize::from(r < extra);
            for d in spread(d_lo, d_hi, m) {
                push(route, d, bonus);
            }
        }
        push(&straight, v0 * HORIZON, 0.0);
    }

    Ok(GoalPlan {
        agent_id: agent_id.to_string(),
        v0,
        goals,
    })
}

/// Softmax over `scores` (aligned with `indices`), sorted by descending probability.
pub(crate) fn rank_subset(indices: &[usize], scores: &[f64]) -> Vec<(usize, f64)> {
    normalized_ranking(scores)
        .into_iter()
        .map(|(j, p)| (indices[j], p))
        .collect()
}

/// `n` evenly spaced values covering `[lo, hi]`, the midpoint for `n == 1`.
fn spread(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Marginal multi-modal prediction: top-N goals with lane-following rollouts.
pub fn predict_marginal(s: &Scenario, agent_id: &str, cfg: &PredictorConfig) -> Result<PredictionSet> {
    let plan = plan_goals(s, agent_id, cfg)?;
    Ok(plan.marginal(cfg.samples))
}

impl GoalPlan {
    pub fn marginal(&self, n: usize) -> PredictionSet {
        PredictionSet {
            agent_id: self.agent_id.clone(),
            samples: self
                .top(n)
                .into_iter()
                .map(|(i, confidence)| PredictionSample {
                    trajectory: self.goals[i].trajectory(),
                    confidence,
                })
                .collect(),
        }
    }
}
