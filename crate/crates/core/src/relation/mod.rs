//! Influencer/reactor relations: the future-based labeling heuristic and the
//! context-based relation classifier.

mod classifier;
mod features;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{pairwise_min_distance, AgentFootprint, Trajectory};

pub use classifier::{
    softmax, train_relation_classifier, LossAndGradient, RelationClassifier, TrainingOptions, TrainingReport,
};
pub use features::{classify_pair, extract_pair_features, extract_relation_features, FEATURE_COUNT};

/// Relation of agent 1 towards agent 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationType {
    /// No interaction.
    None,
    /// Agent 1 passes agent 2: agent 1 is the influencer.
    Pass,
    /// Agent 1 yields to agent 2: agent 1 is the reactor.
    Yield,
}

impl RelationType {
    /// Fixed class order, also the argmax tie-break order.
    pub const ALL: [RelationType; 3] = [RelationType::None, RelationType::Pass, RelationType::Yield];

    pub fn index(self) -> usize {
        match self {
            RelationType::None => 0,
            RelationType::Pass => 1,
            RelationType::Yield => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The same relation seen from agent 2.
    pub fn swapped(self) -> Self {
        match self {
            RelationType::None => RelationType::None,
            RelationType::Pass => RelationType::Yield,
            RelationType::Yield => RelationType::Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::None => "none",
            RelationType::Pass => "pass",
            RelationType::Yield => "yield",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RelationType::None),
            "pass" => Ok(RelationType::Pass),
            "yield" => Ok(RelationType::Yield),
            other => Err(Error::Invalid(format!("unknown relation `{other}`"))),
        }
    }
}

/// Closest approach between two futures and the step at which each agent reaches it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictGeometry {
    pub d_i: f64,
    pub t1: usize,
    pub t2: usize,
    pub epsilon_d: f64,
}

/// Probabilities over `RelationType::ALL`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationDistribution(pub [f64; 3]);

impl RelationDistribution {
    pub fn probability(&self, r: RelationType) -> f64 {
        self.0[r.index()]
    }

    /// Most likely relation; ties go to the earlier class in `RelationType::ALL`.
    pub fn argmax(&self) -> RelationType {
        let mut best = 0;
        for i in 1..3 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        RelationType::ALL[best]
    }

    /// The same distribution seen from the other agent.
    pub fn swapped(&self) -> Self {
        let mut out = [0.0; 3];
        for r in RelationType::ALL {
            out[r.swapped().index()] = self.probability(r);
        }
        Self(out)
    }
}

/// Center-distance threshold below which two agents are considered interacting:
/// half the sum of the footprint diagonals.
pub fn dynamic_threshold(f1: &AgentFootprint, f2: &AgentFootprint) -> f64 {
    0.5 * (f1.diagonal() + f2.diagonal())
}

/// Label the relation of agent 1 towards agent 2 from their future trajectories.
pub fn label_relation(
    y1: &Trajectory,
    y2: &Trajectory,
    f1: &AgentFootprint,
    f2: &AgentFootprint,
) -> Result<(RelationType, ConflictGeometry)> {
    // t1 is the smallest step of agent 1 attaining the global minimum, t2 likewise for agent 2.
    let (d_i, t1, _) = pairwise_min_distance(y1, y2)?;
    let (_, t2, _) = pairwise_min_distance(y2, y1)?;
    let epsilon_d = dynamic_threshold(f1, f2);
    let geometry = ConflictGeometry { d_i, t1, t2, epsilon_d };
    let relation = if d_i > epsilon_d {
        RelationType::None
    } else if t1 > t2 {
        RelationType::Yield
    } else if t1 < t2 {
        RelationType::Pass
    } else {
        // Simultaneous arrival: the faster agent passes; agent 1 passes on equal speed.
        let v1 = y1.states()[t1].speed();
        let v2 = y2.states()[t2].speed();
        if v2 > v1 {
            RelationType::Yield
        } else {
            RelationType::Pass
        }
    };
    Ok((relation, geometry))
}

/// Influencer/reactor assignment for an ordered agent pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Roles {
    /// Both agents act as influencers and are predicted marginally.
    Independent { agents: (String, String) },
    Directed { influencer: String, reactor: String },
}

pub fn assign_roles(r: RelationType, pair: (&str, &str)) -> Roles {
    let (a, b) = (pair.0.to_string(), pair.1.to_string());
    match r {
        RelationType::None => Roles::Independent { agents: (a, b) },
        RelationType::Yield => Roles::Directed {
            influencer: b,
            reactor: a,
        },
        RelationType::Pass => Roles::Directed {
            influencer: a,
            reactor: b,
        },
    }
}
