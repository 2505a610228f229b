use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{classify_pair, RelationClassifier, RelationType};
use crate::scenario::Scenario;

/// Directed influence `influencer -> reactor` with the classifier's confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEdge {
    pub influencer: String,
    pub reactor: String,
    pub confidence: f64,
}

/// Acyclic graph of pairwise influences between interacting agents.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InfluenceGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<InfluenceEdge>,
    /// Edges dropped while breaking cycles, in removal order.
    pub removed: Vec<InfluenceEdge>,
}

impl InfluenceGraph {
    pub fn new(nodes: Vec<String>, edges: Vec<InfluenceEdge>) -> Self {
        let mut g = Self {
            nodes,
            edges,
            removed: Vec::new(),
        };
        g.break_cycles();
        g
    }

    pub fn influencers_of(&self, node: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|e| e.reactor == node)
            .map(|e| e.influencer.as_str())
            .collect()
    }

    /// Kahn's algorithm, always releasing the lexicographically smallest ready node.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for e in &self.edges {
            *indegree.get_mut(e.reactor.as_str()).ok_or_else(|| Error::UnknownAgent(e.reactor.clone()))? += 1;
            if !indegree.contains_key(e.influencer.as_str()) {
                return Err(Error::UnknownAgent(e.influencer.clone()));
            }
        }
        let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            order.push(n.to_string());
            for e in self.edges.iter().filter(|e| e.influencer == n) {
                let d = indegree.get_mut(e.reactor.as_str()).expect("checked above");
                *d -= 1;
                if *d == 0 {
                    ready.insert(e.reactor.as_str());
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(Error::CyclicGraph);
        }
        Ok(order)
    }

    /// Edge indices forming some directed cycle, if any.
    fn find_cycle(&self) -> Option<Vec<usize>> {
        // colors: 0 unvisited, 1 on stack, 2 done
        fn dfs(g: &InfluenceGraph, node: &str, color: &mut BTreeMap<String, u8>, path: &mut Vec<usize>) -> Option<Vec<usize>> {
            color.insert(node.to_string(), 1);
            for (idx, e) in g.edges.iter().enumerate().filter(|(_, e)| e.influencer == node) {
                match color.get(&e.reactor).copied().unwrap_or(0) {
                    1 => {
                        // cycle closes at e.reactor: keep the path suffix starting there
                        let start = path.iter().position(|&p| g.edges[p].influencer == e.reactor).unwrap_or(0);
                        let mut cycle = path[start..].to_vec();
                        cycle.push(idx);
                        return Some(cycle);
                    }
                    0 => {
                        path.push(idx);
                        if let Some(c) = dfs(g, &e.reactor, color, path) {
                            return Some(c);
                        }
                        path.pop();
                    }
                    _ => {}
                }
            }
            color.insert(node.to_string(), 2);
            None
        }
        let mut color = BTreeMap::new();
        for n in &self.nodes {
            if color.get(n).copied().unwrap_or(0) == 0 {
                if let Some(c) = dfs(self, n, &mut color, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Remove the lowest-confidence edge of some cycle until none remain.
    fn break_cycles(&mut self) {
        while let Some(cycle) = self.find_cycle() {
            let weakest = cycle
                .into_iter()
                .min_by(|&a, &b| self.edges[a].confidence.total_cmp(&self.edges[b].confidence).then(b.cmp(&a)))
                .expect("cycles are non-empty");
            let e = self.edges.remove(weakest);
            self.removed.push(e);
        }
    }
}

/// Pairwise relation prediction over every interacting pair.
pub fn build_influence_graph(s: &Scenario, classifier: &RelationClassifier) -> Result<InfluenceGraph> {
    let ids = &s.interacting;
    let mut edges = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let dist = classify_pair(s, classifier, &ids[i], &ids[j])?;
            let r = dist.argmax();
            let confidence = dist.probability(r);
            let (influencer, reactor) = match r {
                RelationType::None => continue,
                RelationType::Pass => (&ids[i], &ids[j]),
                RelationType::Yield => (&ids[j], &ids[i]),
            };
            edges.push(InfluenceEdge {
                influencer: influencer.clone(),
                reactor: reactor.clone(),
                confidence,
            });
        }
    }
    Ok(InfluenceGraph::new(ids.clone(), edges))
}
