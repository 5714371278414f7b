//! Graphs with exact rational weights (skeleton and overlay graphs) and the
//! Baswana–Sen `(2k - 1)`-spanner.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::Dist;
use crate::graph::NodeId;
use crate::rng::subseed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: Dist,
}

/// Undirected graph on local ids `0..n` with rational weights.
#[derive(Debug, Clone, Default)]
pub struct RatGraph {
    n: usize,
    edges: Vec<RatEdge>,
    adj: Vec<Vec<(NodeId, usize)>>,
}

impl RatGraph {
    /// Parallel edges keep the lightest copy.
    pub fn new(n: usize, edges: impl IntoIterator<Item = RatEdge>) -> Self {
        let mut best: BTreeMap<(NodeId, NodeId), Dist> = BTreeMap::new();
        for e in edges {
            if e.u == e.v {
                continue;
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            match best.get(&key) {
                Some(w) if *w <= e.w => {}
                _ => {
                    best.insert(key, e.w);
                }
            }
        }
        let edges: Vec<RatEdge> = best.into_iter().map(|((u, v), w)| RatEdge { u, v, w }).collect();
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        RatGraph { n, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[RatEdge] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.adj[v]
    }

    pub fn subgraph(&self, keep: &[usize]) -> RatGraph {
        RatGraph::new(self.n, keep.iter().map(|&i| self.edges[i].clone()))
    }

    /// Distances and shortest-path-tree parents from `src`. Ties prefer fewer
    /// hops, then the smaller parent id.
    pub fn dijkstra(&self, src: NodeId) -> (Vec<Option<Dist>>, Vec<Option<NodeId>>) {
        let mut dist: Vec<Option<(Dist, u32)>> = vec![None; self.n];
        let mut parent = vec![None; self.n];
        let mut done = vec![false; self.n];
        let mut heap = BinaryHeap::new();
        dist[src] = Some((Dist::zero(), 0));
        heap.push(Reverse((Dist::zero(), 0u32, src)));
        while let Some(Reverse((d, h, v))) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            for &(u, e) in &self.adj[v] {
                if done[u] {
                    continue;
                }
                let cand = (&d + &self.edges[e].w, h + 1);
                let better = match &dist[u] {
                    None => true,
                    Some(cur) => cand < *cur || (cand == *cur && Some(v) < parent[u]),
                };
                if better {
                    dist[u] = Some(cand.clone());
                    parent[u] = Some(v);
                    heap.push(Reverse((cand.0, cand.1, u)));
                }
            }
        }
        (dist.into_iter().map(|d| d.map(|x| x.0)).collect(), parent)
    }

    pub fn all_pairs(&self) -> Vec<Vec<Option<Dist>>> {
        (0..self.n).map(|s| self.dijkstra(s).0).collect()
    }

    /// Edge list in the graph file format. Weights are rounded up to integers;
    /// `names` maps local ids to the ids printed in the leading comment.
    pub fn to_edge_list(&self, names: &[NodeId]) -> String {
        let mut s = String::new();
        let _ = write!(s, "# local id -> node:");
        for (i, v) in names.iter().enumerate() {
            let _ = write!(s, " {i}={v}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{} {}", self.n, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.u, e.v, e.w.ceil_u64());
        }
        s
    }
}

/// Baswana–Sen clustering. Returns the indices of the spanner edges of `g`.
pub fn baswana_sen_spanner(g: &RatGraph, k: u32, seed: u64) -> Vec<usize> {
    assert!(k >= 1, "k must be positive");
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "baswana_sen", k as u64));
    let p = (n.max(1) as f64).powf(-1.0 / k as f64);
    let mut alive = vec![true; g.m()];
    let mut in_spanner = vec![false; g.m()];
    // cluster[v] = center of v's cluster, None once v left the clustering
    let mut cluster: Vec<Option<NodeId>> = (0..n).map(Some).collect();
    let weight_key = |e: usize| (g.edges[e].w.clone(), e);

    // Lightest alive edge from `v` into each adjacent cluster.
    let lightest = |v: NodeId, alive: &[bool], cluster: &[Option<NodeId>]| {
        let mut by_cluster: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &(u, e) in g.neighbors(v) {
            if !alive[e] {
                continue;
            }
            if let Some(c) = cluster[u] {
                by_cluster
                    .entry(c)
                    .and_modify(|best| {
                        if weight_key(e) < weight_key(*best) {
                            *best = e;
                        }
                    })
                    .or_insert(e);
            }
        }
        by_cluster
    };

    for _phase in 1..k {
        let centers: Vec<NodeId> = {
            let mut c: Vec<NodeId> = cluster.iter().flatten().copied().collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        let sampled: BTreeMap<NodeId, bool> = centers.iter().map(|&c| (c, rng.gen_bool(p))).collect();
        let mut next = cluster.clone();
        let mut discard: Vec<(NodeId, NodeId)> = Vec::new(); // (vertex, cluster)
        for v in 0..n {
            let Some(cv) = cluster[v] else { continue };
            if sampled[&cv] {
                continue;
            }
            let adjacent = lightest(v, &alive, &cluster);
            let nearest = adjacent
                .iter()
                .filter(|(c, _)| sampled[c])
                .min_by_key(|(_, &e)| weight_key(e))
                .map(|(&c, &e)| (c, e));
            match nearest {
                None => {
                    for (&c, &e) in &adjacent {
                        in_spanner[e] = true;
                        discard.push((v, c));
                    }
                    next[v] = None;
                }
                Some((c_near, e_near)) => {
                    in_spanner[e_near] = true;
                    next[v] = Some(c_near);
                    discard.push((v, c_near));
                    for (&c, &e) in &adjacent {
                        if weight_key(e) < weight_key(e_near) {
                            in_spanner[e] = true;
                            discard.push((v, c));
                        }
                    }
                }
            }
        }
        for (v, c) in discard {
            for &(u, e) in g.neighbors(v) {
                if cluster[u] == Some(c) {
                    alive[e] = false;
                }
            }
        }
        cluster = next;
        for (e, edge) in g.edges.iter().enumerate() {
            let (a, b) = (cluster[edge.u], cluster[edge.v]);
            if a.is_none() && b.is_none() || a.is_some() && a == b {
                alive[e] = false;
            }
        }
    }
    for v in 0..n {
        for (_, e) in lightest(v, &alive, &cluster) {
            in_spanner[e] = true;
        }
    }
    (0..g.m()).filter(|&e| in_spanner[e]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn rat(n: usize, edges: &[(NodeId, NodeId, u64)]) -> RatGraph {
        RatGraph::new(n, edges.iter().map(|&(u, v, w)| RatEdge { u, v, w: Dist::from_int(w) }))
    }

    fn random_rat(n: usize, p: f64, seed: u64) -> RatGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    let w = Dist::from_parts(rng.gen_range(1..1000), rng.gen_range(1..4)).unwrap();
                    edges.push(RatEdge { u, v, w });
                }
            }
        }
        RatGraph::new(n, edges)
    }

    fn max_stretch(g: &RatGraph, sp: &RatGraph) -> f64 {
        let (a, b) = (g.all_pairs(), sp.all_pairs());
        let mut worst = 1.0f64;
        for s in 0..g.n() {
            for t in 0..g.n() {
                match (&a[s][t], &b[s][t]) {
                    (Some(x), Some(y)) if !x.is_zero() => worst = worst.max(y.to_f64() / x.to_f64()),
                    (Some(_), None) => return f64::INFINITY,
                    _ => {}
                }
            }
        }
        worst
    }

    #[test]
    fn k1_keeps_everything() {
        let g = random_rat(30, 0.3, 1);
        assert_eq!(baswana_sen_spanner(&g, 1, 5).len(), g.m());
    }

    #[test]
    fn triangle_k2() {
        let g = rat(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 3)]);
        for seed in 0..20 {
            let sp = g.subgraph(&baswana_sen_spanner(&g, 2, seed));
            assert!(max_stretch(&g, &sp) <= 3.0);
        }
    }

    #[test]
    fn hundred_nodes_k2_five_seeds() {
        let g = random_rat(100, 0.2, 77);
        for seed in 0..5 {
            let keep = baswana_sen_spanner(&g, 2, seed);
            let sp = g.subgraph(&keep);
            assert!(max_stretch(&g, &sp) <= 3.0 + 1e-12);
            assert!(keep.len() < g.m());
        }
    }

    #[test]
    fn dijkstra_and_dump() {
        let g = rat(3, &[(0, 1, 2), (1, 2, 3), (0, 2, 9)]);
        let (d, p) = g.dijkstra(0);
        assert_eq!(d[2], Some(Dist::from_int(5)));
        assert_eq!(p[2], Some(1));
        let dump = g.to_edge_list(&[10, 11, 12]);
        let body: String = dump.lines().skip(1).collect::<Vec<_>>().join("\n");
        let back = crate::graph::load_graph(&body).unwrap();
        assert_eq!(back.m(), 3);
        assert!(dump.starts_with("# local id -> node: 0=10 1=11 2=12"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn stretch_at_most_2k_minus_1(n in 2usize..60, p in 0.05f64..0.6, k in 1u32..5, seed in 0u64..1000) {
            let g = random_rat(n, p, seed);
            let sp = g.subgraph(&baswana_sen_spanner(&g, k, seed));
            prop_assert!(max_stretch(&g, &sp) <= (2 * k - 1) as f64 + 1e-9);
        }
    }
}
