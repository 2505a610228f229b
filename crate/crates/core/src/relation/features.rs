use super::{RelationClassifier, RelationDistribution};
use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec2};
use crate::scenario::Scenario;
use crate::trajectory::{pairwise_min_distance, AgentState, Trajectory, DT, FUTURE_LEN};

/// Length of the relation feature vector.
pub const FEATURE_COUNT: usize = 9;

/// Relation features for the scenario's interacting pair (agent 1 = first interacting id).
pub fn extract_relation_features(s: &Scenario) -> Result<[f64; FEATURE_COUNT]> {
    let (a, b) = s.pair();
    extract_pair_features(s, a, b)
}

/// Features of agent `b` relative to agent `a`, expressed in `a`'s frame:
///
/// | idx | feature |
/// |-----|---------|
/// | 0,1 | position of `b` in `a`'s frame (longitudinal, lateral) |
/// | 2   | heading of `b` relative to `a` |
/// | 3,4 | speeds of `a` and `b` |
/// | 5   | acute crossing angle between the headings |
/// | 6,7 | constant-velocity time to the closest-approach point for `a` and `b` |
/// | 8   | constant-velocity closest approach distance |
pub fn extract_pair_features(s: &Scenario, a: &str, b: &str) -> Result<[f64; FEATURE_COUNT]> {
    let sa = last_valid(&s.agent(a)?.history)?;
    let sb = last_valid(&s.agent(b)?.history)?;

    let rel = (sb.position - sa.position).rotate(-sa.heading());
    let dh = wrap_angle(sb.heading() - sa.heading());
    let crossing = dh.cos().abs().min(1.0).acos();

    let ca = constant_velocity(sa);
    let cb = constant_velocity(sb);
    let (approach, ia, ib) = pairwise_min_distance(&ca, &cb)?;

    Ok([
        rel.x,
        rel.y,
        dh,
        sa.speed(),
        sb.speed(),
        crossing,
        ia as f64 * DT,
        ib as f64 * DT,
        approach,
    ])
}

/// Relation of `a` towards `b`. The classifier always sees the pair in id order, so
/// swapping the arguments swaps the answer.
pub fn classify_pair(s: &Scenario, classifier: &RelationClassifier, a: &str, b: &str) -> Result<RelationDistribution> {
    if a <= b {
        Ok(classifier.predict(&extract_pair_features(s, a, b)?))
    } else {
        Ok(classifier.predict(&extract_pair_features(s, b, a)?).swapped())
    }
}

fn last_valid(t: &Trajectory) -> Result<&AgentState> {
    t.last_valid().map(|(_, s)| s).ok_or(Error::NoValidStates)
}

/// Current position followed by the horizon at constant speed and heading.
fn constant_velocity(s: &AgentState) -> Trajectory {
    let step = Vec2::from_heading(s.heading()) * (s.speed() * DT);
    Trajectory::from_poses((0..=FUTURE_LEN).map(|k| (s.position + step * k as f64, s.heading(), s.speed())))
        .expect("non-empty")
}
