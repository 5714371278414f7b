//! Undirected weighted graphs, the edge-list file format and instance generators.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::rng::subseed;

pub type NodeId = usize;
pub type EdgeId = usize;

/// Default exponent `C` of the weight bound `w <= n^C`.
pub const DEFAULT_WEIGHT_EXPONENT: u32 = 3;

/// Attempts made by [`gen_random_graph`] before giving up on connectivity.
pub const MAX_GENERATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adj {
    pub to: NodeId,
    pub edge: EdgeId,
}

/// Adjacency structure without weights; this is all the round engine needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adj: Vec<Vec<Adj>>,
    ends: Vec<(NodeId, NodeId)>,
}

impl Topology {
    /// Builds a topology from edge endpoints. Neighbor lists are sorted by id.
    pub fn new(n: usize, ends: Vec<(NodeId, NodeId)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (e, &(u, v)) in ends.iter().enumerate() {
            adj[u].push(Adj { to: v, edge: e });
            adj[v].push(Adj { to: u, edge: e });
        }
        for list in &mut adj {
            list.sort_by_key(|a| a.to);
        }
        Topology { adj, ends }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.ends.len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[Adj] {
        &self.adj[v]
    }

    pub fn endpoints(&self, e: EdgeId) -> (NodeId, NodeId) {
        self.ends[e]
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        self.adj[u]
            .binary_search_by_key(&v, |a| a.to)
            .ok()
            .map(|i| self.adj[u][i].edge)
    }

    pub fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return false;
        }
        self.hop_bfs(0).iter().all(|d| d.is_some())
    }

    /// Hop distances from `root`; `None` for unreachable nodes.
    pub fn hop_bfs(&self, root: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[root] = Some(0);
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for a in &self.adj[v] {
                if dist[a.to].is_none() {
                    dist[a.to] = Some(d + 1);
                    queue.push_back(a.to);
                }
            }
        }
        dist
    }

    /// Hop eccentricity of `root` (maximum hop distance to a reachable node).
    pub fn hop_eccentricity(&self, root: NodeId) -> usize {
        self.hop_bfs(root).into_iter().flatten().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: u64,
}

/// Simple connected undirected graph with positive integer weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    topo: Topology,
    weights: Vec<u64>,
}

impl WeightedGraph {
    /// Validates and builds a graph. Enforces the weight bound `n^weight_exp`.
    pub fn from_edges(n: usize, edges: &[Edge], weight_exp: u32) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidParameter(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let bound = weight_bound(n, weight_exp);
        let mut seen = HashSet::with_capacity(edges.len());
        let mut ends = Vec::with_capacity(edges.len());
        let mut weights = Vec::with_capacity(edges.len());
        for e in edges {
            for id in [e.u, e.v] {
                if id >= n {
                    return Err(GraphError::NodeOutOfRange { id, n });
                }
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if e.w < 1 {
                return Err(GraphError::WeightTooSmall { u: e.u, v: e.v, w: e.w as i64 });
            }
            if e.w > bound {
                return Err(GraphError::WeightTooLarge {
                    u: e.u,
                    v: e.v,
                    w: e.w,
                    c: weight_exp,
                    bound,
                });
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            ends.push(key);
            weights.push(e.w);
        }
        let topo = Topology::new(n, ends);
        if !topo.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(WeightedGraph { topo, weights })
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn n(&self) -> usize {
        self.topo.n()
    }

    pub fn m(&self) -> usize {
        self.topo.m()
    }

    pub fn neighbors(&self, v: NodeId) -> &[Adj] {
        self.topo.neighbors(v)
    }

    pub fn weight(&self, e: EdgeId) -> u64 {
        self.weights[e]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn max_weight(&self) -> u64 {
        self.weights.iter().copied().max().unwrap_or(1)
    }

    /// Weight of edge `{u, v}`, if present.
    pub fn weight_between(&self, u: NodeId, v: NodeId) -> Option<u64> {
        self.topo.edge_between(u, v).map(|e| self.weights[e])
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.m()).map(move |e| {
            let (u, v) = self.topo.endpoints(e);
            Edge { u, v, w: self.weights[e] }
        })
    }

    /// Renders the graph in the edge-list format accepted by [`load_graph`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.m());
        for e in self.edges() {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
        }
        out
    }
}

/// `n^c`, saturating at `u64::MAX`.
pub fn weight_bound(n: usize, c: u32) -> u64 {
    (n as u64).checked_pow(c).unwrap_or(u64::MAX)
}

/// Parses the edge-list format: a header `n m` followed by `m` lines `u v w`.
/// Blank lines and lines starting with `#` are ignored.
pub fn load_graph(text: &str) -> Result<WeightedGraph, GraphError> {
    load_graph_with_bound(text, DEFAULT_WEIGHT_EXPONENT)
}

pub fn load_graph_with_bound(text: &str, weight_exp: u32) -> Result<WeightedGraph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(GraphError::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    let nums = parse_fields(hline, header, 2)?;
    let (n, m) = (nums[0] as usize, nums[1] as usize);
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines.by_ref() {
        if edges.len() == m {
            return Err(GraphError::Parse {
                line,
                msg: format!("more than the declared {m} edges"),
            });
        }
        let f = parse_fields(line, l, 3)?;
        if f[2] < 1 {
            return Err(GraphError::WeightTooSmall { u: f[0] as usize, v: f[1] as usize, w: f[2] });
        }
        if f[0] < 0 || f[1] < 0 {
            return Err(GraphError::Parse { line, msg: "negative node id".into() });
        }
        edges.push(Edge { u: f[0] as usize, v: f[1] as usize, w: f[2] as u64 });
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: 0,
            msg: format!("declared {m} edges, found {}", edges.len()),
        });
    }
    WeightedGraph::from_edges(n, &edges, weight_exp)
}

fn parse_fields(line: usize, text: &str, want: usize) -> Result<Vec<i64>, GraphError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != want {
        return Err(GraphError::Parse {
            line,
            msg: format!("expected {want} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<i64>().map_err(|e| GraphError::Parse {
                line,
                msg: format!("{f:?}: {e}"),
            })
        })
        .collect()
}

/// Erdős–Rényi `G(n, p_edge)` with weights uniform in `[1, w_max]`, regenerated
/// with derived seeds until connected.
/// Edge probability `min(1, c ln n / n)`; above the connectivity threshold for `c > 1`.
pub fn connected_density(n: usize, c: f64) -> f64 {
    let n = n.max(2) as f64;
    (c * n.ln() / n).min(1.0)
}

pub fn gen_random_graph(
    n: usize,
    p_edge: f64,
    w_max: u64,
    seed: u64,
) -> Result<WeightedGraph, GraphError> {
    gen_random_graph_with_bound(n, p_edge, w_max, seed, DEFAULT_WEIGHT_EXPONENT)
}

pub fn gen_random_graph_with_bound(
    n: usize,
    p_edge: f64,
    w_max: u64,
    seed: u64,
    weight_exp: u32,
) -> Result<WeightedGraph, GraphError> {
    if !(p_edge > 0.0 && p_edge <= 1.0) {
        return Err(GraphError::InvalidParameter(format!("p_edge = {p_edge} not in (0, 1]")));
    }
    if w_max < 1 {
        return Err(GraphError::InvalidParameter("w_max must be at least 1".into()));
    }
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "gen_random_graph", attempt as u64));
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p_edge) {
                    edges.push(Edge { u, v, w: rng.gen_range(1..=w_max) });
                }
            }
        }
        match WeightedGraph::from_edges(n, &edges, weight_exp) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::GenerationExhausted(MAX_GENERATION_ATTEMPTS))
}

/// Node numbering of the lower-bound instance built by [`gen_hard_instance`].
#[derive(Debug, Clone, Copy)]
pub struct HardLayout {
    pub h: usize,
    pub sigma: usize,
}

impl HardLayout {
    /// `u_i`, 1-based `i`.
    pub fn u(&self, i: usize) -> NodeId {
        i - 1
    }
    /// `v_i`, 1-based `i`.
    pub fn v(&self, i: usize) -> NodeId {
        self.h + i - 1
    }
    /// `s_{i,j}`, 1-based indices.
    pub fn s(&self, i: usize, j: usize) -> NodeId {
        2 * self.h + (i - 1) * self.sigma + (j - 1)
    }
    pub fn n(&self) -> usize {
        2 * self.h + self.h * self.sigma
    }
    pub fn sources(&self) -> Vec<NodeId> {
        (2 * self.h..self.n()).collect()
    }
}

/// Two unit-weight chains `u_1..u_h` and `v_1..v_h`, a unit bridge `{u_1, v_h}`,
/// and `sigma` pendant sources on each `v_i` with weight `4 i h`.
pub fn gen_hard_instance(h: usize, sigma: usize) -> Result<WeightedGraph, GraphError> {
    if h < 1 || sigma < 1 {
        return Err(GraphError::InvalidParameter("h and sigma must be at least 1".into()));
    }
    let lay = HardLayout { h, sigma };
    let mut edges = Vec::new();
    for i in 1..h {
        edges.push(Edge { u: lay.u(i), v: lay.u(i + 1), w: 1 });
        edges.push(Edge { u: lay.v(i), v: lay.v(i + 1), w: 1 });
    }
    edges.push(Edge { u: lay.u(1), v: lay.v(h), w: 1 });
    for i in 1..=h {
        for j in 1..=sigma {
            edges.push(Edge { u: lay.v(i), v: lay.s(i, j), w: (4 * i * h) as u64 });
        }
    }
    WeightedGraph::from_edges(lay.n(), &edges, DEFAULT_WEIGHT_EXPONENT)
}

/// Path `0 - 1 - ... - (len-1)` with the given weights.
pub fn path_graph(weights: &[u64]) -> WeightedGraph {
    let edges: Vec<Edge> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Edge { u: i, v: i + 1, w })
        .collect();
    WeightedGraph::from_edges(weights.len() + 1, &edges, 64).expect("valid path")
}

/// Star with center 0 and `leaves` unit-weight leaves.
pub fn star_graph(leaves: usize) -> WeightedGraph {
    let edges: Vec<Edge> = (1..=leaves).map(|i| Edge { u: 0, v: i, w: 1 }).collect();
    WeightedGraph::from_edges(leaves + 1, &edges, 64).expect("valid star")
}

/// Set of node ids, kept sorted.
pub type NodeSet = BTreeSet<NodeId>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path() {
        let g = load_graph("3 2\n0 1 2\n1 2 3").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.weight_between(0, 1), Some(2));
        assert_eq!(g.weight_between(2, 1), Some(3));
        assert_eq!(g.weight_between(0, 2), None);
    }

    #[test]
    fn parses_single_edge_and_comments() {
        let g = load_graph("# tiny\n2 1\n# the edge\n0 1 1\n").unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(load_graph("3 1\n0 1 1"), Err(GraphError::Disconnected));
        assert_eq!(load_graph("2 2\n0 1 1\n1 0 2"), Err(GraphError::DuplicateEdge(0, 1)));
        assert_eq!(load_graph("2 1\n1 1 1"), Err(GraphError::SelfLoop(1)));
        assert!(matches!(load_graph("2 1\n0 1 0"), Err(GraphError::WeightTooSmall { .. })));
        assert!(matches!(load_graph("2 1\n0 5 1"), Err(GraphError::NodeOutOfRange { .. })));
        assert!(matches!(load_graph("2 1\n0 1 9"), Err(GraphError::WeightTooLarge { .. })));
        assert!(matches!(load_graph("2 1\n0 1"), Err(GraphError::Parse { .. })));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_random_graph(20, 0.3, 50, 4).unwrap();
        assert_eq!(load_graph(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn random_graph_forced_and_deterministic() {
        let g = gen_random_graph(2, 1.0, 1, 7).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.weight(0), 1);
        let a = gen_random_graph(64, 0.1, 100, 1).unwrap();
        let b = gen_random_graph(64, 0.1, 100, 1).unwrap();
        let c = gen_random_graph(64, 0.1, 100, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());
    }

    #[test]
    fn random_graph_gives_up() {
        assert_eq!(
            gen_random_graph(200, 0.0001, 5, 1),
            Err(GraphError::GenerationExhausted(MAX_GENERATION_ATTEMPTS))
        );
    }

    #[test]
    fn hard_instance_shape() {
        let g = gen_hard_instance(1, 1).unwrap();
        assert_eq!(g.n(), 3);
        let lay = HardLayout { h: 1, sigma: 1 };
        assert_eq!(g.weight_between(lay.v(1), lay.s(1, 1)), Some(4));

        let g = gen_hard_instance(2, 3).unwrap();
        let lay = HardLayout { h: 2, sigma: 3 };
        assert_eq!(g.n(), 10);
        for j in 1..=3 {
            assert_eq!(g.weight_between(lay.v(2), lay.s(2, j)), Some(16));
            assert_eq!(g.weight_between(lay.v(1), lay.s(1, j)), Some(8));
        }
        assert_eq!(g.weight_between(lay.u(1), lay.v(2)), Some(1));

        let g = gen_hard_instance(2, 1).unwrap();
        assert!(g.topology().is_connected());
        assert_eq!(load_graph(&g.to_edge_list()).unwrap(), g);
    }
}
