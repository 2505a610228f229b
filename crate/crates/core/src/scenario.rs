//! Scenario container and its JSON interchange format.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{Polyline, RigidTransform, Vec2};
use crate::trajectory::{AgentFootprint, AgentState, Trajectory, FUTURE_LEN, HISTORY_LEN};

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: String,
    pub centerline: Polyline,
    pub successors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub footprint: AgentFootprint,
    pub history: Trajectory,
    pub future: Trajectory,
}

impl Agent {
    /// Last valid observed state.
    pub fn current(&self) -> &AgentState {
        self.history
            .last_valid()
            .map(|(_, s)| s)
            .expect("validated at construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub lanes: Vec<Lane>,
    pub agents: Vec<Agent>,
    /// The interacting pair, or a larger interacting set in multi-agent mode.
    pub interacting: Vec<String>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, lanes: Vec<Lane>, agents: Vec<Agent>, interacting: Vec<String>) -> Result<Self> {
        let s = Self {
            id: id.into(),
            lanes,
            agents,
            interacting,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for a in &self.agents {
            if !seen.insert(a.id.as_str()) {
                return invalid(format!("duplicate agent id `{}`", a.id));
            }
            if a.history.len() != HISTORY_LEN {
                return invalid(format!("agent `{}` history has {} steps, expected {HISTORY_LEN}", a.id, a.history.len()));
            }
            if a.future.len() != FUTURE_LEN {
                return invalid(format!("agent `{}` future has {} steps, expected {FUTURE_LEN}", a.id, a.future.len()));
            }
            if a.history.valid_count() == 0 {
                return Err(Error::NoValidStates);
            }
            if !a.future.is_fully_valid() {
                return invalid(format!("agent `{}` future has invalid states", a.id));
            }
        }
        if self.interacting.len() < 2 {
            return invalid("scenario needs at least two interacting agents");
        }
        let mut inter = HashSet::new();
        for id in &self.interacting {
            if !seen.contains(id.as_str()) {
                return Err(Error::UnknownAgent(id.clone()));
            }
            if !inter.insert(id.as_str()) {
                return invalid(format!("agent `{id}` listed twice as interacting"));
            }
        }
        let lane_ids: HashSet<&str> = self.lanes.iter().map(|l| l.id.as_str()).collect();
        if lane_ids.len() != self.lanes.len() {
            return invalid("duplicate lane id");
        }
        for l in &self.lanes {
            if let Some(bad) = l.successors.iter().find(|s| !lane_ids.contains(s.as_str())) {
                return invalid(format!("lane `{}` has unknown successor `{bad}`", l.id));
            }
        }
        Ok(())
    }

    pub fn agent(&self, id: &str) -> Result<&Agent> {
        self.agents
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| Error::UnknownAgent(id.to_string()))
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    /// First two interacting agents.
    pub fn pair(&self) -> (&str, &str) {
        (&self.interacting[0], &self.interacting[1])
    }

    /// Copy with the roles of the first two interacting agents swapped.
    pub fn with_swapped_pair(&self) -> Scenario {
        let mut s = self.clone();
        s.interacting.swap(0, 1);
        s
    }

    pub fn transformed(&self, tf: &RigidTransform) -> Scenario {
        Scenario {
            id: self.id.clone(),
            lanes: self
                .lanes
                .iter()
                .map(|l| Lane {
                    id: l.id.clone(),
                    centerline: Polyline::new(l.centerline.points().iter().map(|&p| tf.apply(p)).collect())
                        .expect("rigid image of a valid polyline"),
                    successors: l.successors.clone(),
                })
                .collect(),
            agents: self
                .agents
                .iter()
                .map(|a| Agent {
                    history: a.history.transformed(tf),
                    future: a.future.transformed(tf),
                    ..a.clone()
                })
                .collect(),
            interacting: self.interacting.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ScenarioRepr::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Scenario> {
        let repr: ScenarioRepr = serde_json::from_str(s)?;
        repr.try_into()
    }
}

// ---------------------------------------------------------------------------
// wire format

#[derive(Serialize, Deserialize)]
struct LaneRepr {
    id: String,
    centerline: Vec<[f64; 2]>,
    successors: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValidFlag {
    Bool(bool),
    Number(f64),
}

#[derive(Serialize, Deserialize)]
struct HistoryRow(f64, f64, f64, f64, ValidFlag);

#[derive(Serialize, Deserialize)]
struct AgentRepr {
    id: String,
    footprint: AgentFootprint,
    history: Vec<HistoryRow>,
    future: Vec<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    id: String,
    lanes: Vec<LaneRepr>,
    agents: Vec<AgentRepr>,
    interacting: Vec<String>,
}

/// `[x, y, heading, speed]` rows of a trajectory.
pub fn trajectory_rows(t: &Trajectory) -> Vec<[f64; 4]> {
    t.states()
        .iter()
        .map(|s| [s.position.x, s.position.y, s.heading(), s.speed()])
        .collect()
}

pub fn trajectory_from_rows(rows: &[[f64; 4]]) -> Result<Trajectory> {
    Trajectory::from_poses(rows.iter().map(|r| (Vec2::new(r[0], r[1]), r[2], r[3])))
}

impl From<&Scenario> for ScenarioRepr {
    fn from(s: &Scenario) -> Self {
        ScenarioRepr {
            id: s.id.clone(),
            lanes: s
                .lanes
                .iter()
                .map(|l| LaneRepr {
                    id: l.id.clone(),
                    centerline: l.centerline.points().iter().map(|&p| p.into()).collect(),
                    successors: l.successors.clone(),
                })
                .collect(),
            agents: s
                .agents
                .iter()
                .map(|a| AgentRepr {
                    id: a.id.clone(),
                    footprint: a.footprint,
                    history: a
                        .history
                        .states()
                        .iter()
                        .map(|st| HistoryRow(st.position.x, st.position.y, st.heading(), st.speed(), ValidFlag::Bool(st.valid)))
                        .collect(),
                    future: trajectory_rows(&a.future),
                })
                .collect(),
            interacting: s.interacting.clone(),
        }
    }
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = Error;

    fn try_from(r: ScenarioRepr) -> Result<Scenario> {
        let lanes = r
            .lanes
            .into_iter()
            .map(|l| {
                Ok(Lane {
                    centerline: Polyline::new(l.centerline.into_iter().map(Vec2::from).collect())
                        .map_err(|e| Error::Invalid(format!("lane `{}`: {e}", l.id)))?,
                    id: l.id,
                    successors: l.successors,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let agents = r
            .agents
            .into_iter()
            .map(|a| {
                let history = Trajectory::new(
                    a.history
                        .iter()
                        .map(|HistoryRow(x, y, h, v, valid)| {
                            let valid = match valid {
                                ValidFlag::Bool(b) => *b,
                                ValidFlag::Number(n) => *n != 0.0,
                            };
                            AgentState::new(Vec2::new(*x, *y), *h, *v, valid)
                        })
                        .collect(),
                )?;
                Ok(Agent {
                    id: a.id,
                    footprint: a.footprint,
                    history,
                    future: trajectory_from_rows(&a.future)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(r.id, lanes, agents, r.interacting)
    }
}

/// Write scenarios as JSON lines.
pub fn write_corpus<W: Write>(mut w: W, scenarios: &[Scenario]) -> Result<()> {
    for s in scenarios {
        writeln!(w, "{}", s.to_json()?)?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(r: R) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Scenario::from_json(&line).map_err(|e| Error::Invalid(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

/// Load a corpus from a JSON-lines file, or from a directory of one-scenario `.json` files
/// (read in file-name order).
pub fn load_corpus(path: &Path) -> Result<Vec<Scenario>> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files
            .iter()
            .map(|f| Scenario::from_json(&std::fs::read_to_string(f)?))
            .collect()
    } else {
        read_corpus(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
