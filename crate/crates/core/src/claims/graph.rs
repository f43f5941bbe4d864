use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Undirected bipartite graph between answers and the claims they entail.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntailmentGraph {
    pub answer_nodes: Vec<String>,
    pub claim_nodes: Vec<String>,
    /// `(answer_id, claim_id)` pairs.
    pub edges: BTreeSet<(String, String)>,
}

impl EntailmentGraph {
    pub fn new(answer_nodes: Vec<String>, claim_nodes: Vec<String>) -> Self {
        EntailmentGraph {
            answer_nodes,
            claim_nodes,
            edges: BTreeSet::new(),
        }
    }

    pub fn add_edge(&mut self, answer_id: &str, claim_id: &str) {
        self.edges.insert((answer_id.to_string(), claim_id.to_string()));
    }

    pub fn node_count(&self) -> usize {
        self.answer_nodes.len() + self.claim_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    pub fn claim_degree(&self, claim_id: &str) -> usize {
        self.edges.iter().filter(|(_, c)| c == claim_id).count()
    }

    pub fn check(&self) -> Result<(), String> {
        let mut answers = BTreeSet::new();
        for a in &self.answer_nodes {
            if !answers.insert(a.as_str()) {
                return Err(format!("duplicate answer node {a:?}"));
            }
        }
        let mut claims = BTreeSet::new();
        for c in &self.claim_nodes {
            if !claims.insert(c.as_str()) {
                return Err(format!("duplicate claim node {c:?}"));
            }
            if answers.contains(c.as_str()) {
                return Err(format!("{c:?} is both an answer and a claim node"));
            }
        }
        for (a, c) in &self.edges {
            if !answers.contains(a.as_str()) || !claims.contains(c.as_str()) {
                return Err(format!("edge ({a:?}, {c:?}) does not join an answer to a claim"));
            }
        }
        Ok(())
    }

    /// Adjacency lists over nodes numbered answers first, then claims.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let index: BTreeMap<&str, usize> = self
            .answer_nodes
            .iter()
            .chain(&self.claim_nodes)
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); self.node_count()];
        for (a, c) in &self.edges {
            if let (Some(&i), Some(&j)) = (index.get(a.as_str()), index.get(c.as_str())) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// Outcome of folding claim sets together.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MergeMap {
    pub kept: Vec<String>,
    /// Absorbed claim id to the id of the claim that absorbed it.
    pub aliases: BTreeMap<String, String>,
}

impl MergeMap {
    pub fn check(&self) -> Result<(), String> {
        let kept: BTreeSet<&str> = self.kept.iter().map(String::as_str).collect();
        if kept.len() != self.kept.len() {
            return Err("kept list has duplicates".into());
        }
        for (from, to) in &self.aliases {
            if !kept.contains(to.as_str()) {
                return Err(format!("alias target {to:?} is not kept"));
            }
            if kept.contains(from.as_str()) {
                return Err(format!("{from:?} is both kept and aliased"));
            }
            if self.aliases.contains_key(to) {
                return Err(format!("alias chain through {to:?}"));
            }
        }
        Ok(())
    }

    /// Final kept id for any claim id seen during merging.
    pub fn resolve<'a>(&'a self, id: &'a str) -> &'a str {
        self.aliases.get(id).map(String::as_str).unwrap_or(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_rejects_same_side_edge() {
        let mut g = EntailmentGraph::new(vec!["a0".into(), "a1".into()], vec!["c0".into()]);
        g.add_edge("a0", "c0");
        assert!(g.check().is_ok());
        g.add_edge("a0", "a1");
        assert!(g.check().is_err());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let mut g = EntailmentGraph::new(vec!["a0".into()], vec!["c0".into(), "c1".into()]);
        g.add_edge("a0", "c1");
        assert_eq!(g.adjacency(), vec![vec![2], vec![], vec![0]]);
    }

    #[test]
    fn merge_map_rejects_chains() {
        let mut m = MergeMap {
            kept: vec!["x".into()],
            aliases: BTreeMap::from([("y".into(), "x".into())]),
        };
        assert!(m.check().is_ok());
        m.aliases.insert("z".into(), "y".into());
        assert!(m.check().is_err());
    }
}
