//! Network graph representation and deterministic minimum-hop routing.
//!
//! Links are directed arcs labeled `L{u}{v}` for arc u→v; an undirected
//! edge list expands each edge into both arcs. Shortest paths are computed
//! by breadth-first search with a fixed tie rule: among all minimum-hop
//! predecessors of a node, the one with the smallest id is chosen. This is
//! realized by processing every BFS layer in ascending id order, so the
//! first discovery of a node comes from its smallest-id predecessor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path as FsPath;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub from: u32,
    pub to: u32,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Directed,
    Undirected,
}

#[derive(Debug, Clone)]
pub struct Topology {
    /// Ascending, unique.
    pub node_ids: Vec<u32>,
    /// Sorted by (from, to); unique.
    pub arcs: Vec<Arc>,
    /// Arc (from, to) → index into `arcs`.
    arc_index: BTreeMap<(u32, u32), usize>,
    /// Out-neighbors, ascending.
    adjacency: BTreeMap<u32, Vec<u32>>,
}

/// A minimum-hop route: ordered arc indices into `Topology::arcs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub arcs: Vec<usize>,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.arcs.len()
    }
}

pub fn arc_label(from: u32, to: u32) -> String {
    format!("L{from}{to}")
}

impl Topology {
    /// Build from directed arcs (already expanded). Internal constructor.
    fn from_arcs(node_ids: BTreeSet<u32>, pairs: Vec<(u32, u32)>) -> Result<Topology> {
        let mut arc_set = BTreeSet::new();
        for &(u, v) in &pairs {
            if !arc_set.insert((u, v)) {
                return Err(Error::Data(format!("duplicate link {u} {v}")));
            }
        }
        let arcs: Vec<Arc> = arc_set
            .iter()
            .map(|&(u, v)| Arc { from: u, to: v, label: arc_label(u, v) })
            .collect();
        let arc_index = arcs.iter().enumerate().map(|(i, a)| ((a.from, a.to), i)).collect();
        let mut adjacency: BTreeMap<u32, Vec<u32>> =
            node_ids.iter().map(|&n| (n, Vec::new())).collect();
        for a in &arcs {
            adjacency.get_mut(&a.from).expect("endpoint declared").push(a.to);
        }
        // BTreeSet iteration already yields ascending targets per source.
        Ok(Topology { node_ids: node_ids.into_iter().collect(), arcs, arc_index, adjacency })
    }

    /// Build a topology from undirected edges or directed arc pairs.
    /// `declared` optionally fixes the node set; endpoints outside it are
    /// rejected, and declared nodes missing from every edge remain as
    /// isolated nodes (they surface as unreachable in routing).
    pub fn build(
        edges: &[(u32, u32)],
        mode: GraphMode,
        declared: Option<&[u32]>,
    ) -> Result<Topology> {
        let mut nodes: BTreeSet<u32> = declared.map(|d| d.iter().copied().collect()).unwrap_or_default();
        if let Some(d) = declared {
            if nodes.len() != d.len() {
                return Err(Error::Data("declared node list contains duplicates".into()));
            }
        }
        let mut pairs = Vec::new();
        let mut undirected_seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Data(format!("self-loop on node {u}")));
            }
            if let Some(d) = declared {
                for e in [u, v] {
                    if !d.contains(&e) {
                        return Err(Error::Data(format!(
                            "link {u} {v} references undeclared node {e}"
                        )));
                    }
                }
            } else {
                nodes.insert(u);
                nodes.insert(v);
            }
            match mode {
                GraphMode::Directed => pairs.push((u, v)),
                GraphMode::Undirected => {
                    if !undirected_seen.insert((u.min(v), u.max(v))) {
                        return Err(Error::Data(format!("duplicate link {u} {v}")));
                    }
                    pairs.push((u, v));
                    pairs.push((v, u));
                }
            }
        }
        if nodes.len() < 2 {
            return Err(Error::Data("topology needs at least two nodes".into()));
        }
        Topology::from_arcs(nodes, pairs)
    }

    /// Parse an edge-list file: one `u v` pair per line; blank lines and
    /// `#`-comments ignored.
    pub fn load(path: &FsPath, mode: GraphMode, declared: Option<&[u32]>) -> Result<Topology> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32> {
                tok.ok_or(())
                    .and_then(|t| t.parse::<u32>().map_err(|_| ()))
                    .map_err(|_| {
                        Error::Data(format!(
                            "{}:{}: malformed edge line {raw:?}",
                            path.display(),
                            lineno + 1
                        ))
                    })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Data(format!(
                    "{}:{}: trailing tokens on edge line {raw:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            edges.push((u, v));
        }
        Topology::build(&edges, mode, declared)
    }

    pub fn arc(&self, from: u32, to: u32) -> Option<usize> {
        self.arc_index.get(&(from, to)).copied()
    }

    pub fn contains_node(&self, id: u32) -> bool {
        self.adjacency.contains_key(&id)
    }

    /// BFS tree from `s` under the min-id-predecessor tie rule: for every
    /// reached node v ≠ s, `parent[v]` is the smallest-id node u adjacent to
    /// v with hop-distance dist(v) − 1.
    fn bfs_parents(&self, s: u32) -> BTreeMap<u32, u32> {
        let mut parent = BTreeMap::new();
        let mut visited = BTreeSet::new();
        visited.insert(s);
        let mut layer = vec![s]; // kept ascending
        while !layer.is_empty() {
            let mut next = Vec::new();
            for &u in &layer {
                for &v in &self.adjacency[&u] {
                    if visited.insert(v) {
                        parent.insert(v, u);
                        next.push(v);
                    }
                }
            }
            next.sort_unstable();
            layer = next;
        }
        parent
    }

    /// Minimum-hop route from `s` to `d` (deterministic tie-breaking).
    pub fn shortest_path(&self, s: u32, d: u32) -> Result<Route> {
        if s == d {
            return Err(Error::Usage(format!("shortest_path: source equals destination {s}")));
        }
        for n in [s, d] {
            if !self.contains_node(n) {
                return Err(Error::Data(format!("shortest_path: unknown node {n}")));
            }
        }
        let parent = self.bfs_parents(s);
        self.route_from_parents(&parent, s, d)
            .ok_or_else(|| Error::Data(format!("node {d} is unreachable from node {s}")))
    }

    fn route_from_parents(&self, parent: &BTreeMap<u32, u32>, s: u32, d: u32) -> Option<Route> {
        if !parent.contains_key(&d) {
            return None;
        }
        let mut rev = Vec::new();
        let mut cur = d;
        while cur != s {
            let p = parent[&cur];
            rev.push(self.arc(p, cur).expect("parent edge exists"));
            cur = p;
        }
        rev.reverse();
        Some(Route { arcs: rev })
    }

    /// Minimum-hop routes for all ordered pairs (s, d), s ≠ d. Errors with a
    /// list of unreachable pairs if the topology is not strongly connected
    /// over its node set.
    pub fn all_pairs_paths(&self) -> Result<BTreeMap<(u32, u32), Route>> {
        let mut out = BTreeMap::new();
        let mut unreachable = String::new();
        for &s in &self.node_ids {
            let parent = self.bfs_parents(s);
            for &d in &self.node_ids {
                if s == d {
                    continue;
                }
                match self.route_from_parents(&parent, s, d) {
                    Some(r) => {
                        out.insert((s, d), r);
                    }
                    None => {
                        let _ = write!(unreachable, " ({s},{d})");
                    }
                }
            }
        }
        if !unreachable.is_empty() {
            return Err(Error::Data(format!("unreachable node pairs:{unreachable}")));
        }
        Ok(out)
    }
}
