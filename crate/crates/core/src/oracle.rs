//! Exact centralized oracles used to verify the distributed algorithms.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, Topology, WeightedGraph};

/// All-pairs weighted distances and the hop count of a minimum-hop shortest
/// weighted path for every pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistances {
    pub wd: Vec<Vec<u64>>,
    pub min_hops: Vec<Vec<u32>>,
}

impl ExactDistances {
    pub fn n(&self) -> usize {
        self.wd.len()
    }
}

/// Dijkstra from `src` on composite keys `(weight, hops)`.
pub fn single_source(g: &WeightedGraph, src: NodeId) -> (Vec<u64>, Vec<u32>) {
    let n = g.n();
    let mut best = vec![(u64::MAX, u32::MAX); n];
    let mut heap = BinaryHeap::new();
    best[src] = (0, 0);
    heap.push(Reverse((0u64, 0u32, src)));
    while let Some(Reverse((d, h, v))) = heap.pop() {
        if (d, h) > best[v] {
            continue;
        }
        for a in g.neighbors(v) {
            let cand = (d + g.weight(a.edge), h + 1);
            if cand < best[a.to] {
                best[a.to] = cand;
                heap.push(Reverse((cand.0, cand.1, a.to)));
            }
        }
    }
    best.into_iter().unzip()
}

pub fn exact_distances(g: &WeightedGraph) -> ExactDistances {
    let (wd, min_hops) = (0..g.n()).map(|s| single_source(g, s)).unzip();
    ExactDistances { wd, min_hops }
}

/// For every node, the sorted prefix of `(Wd(v, w), w)` over sources `w` with
/// `h_{v,w} <= h`, truncated to `sigma` entries.
pub fn exact_detection_oracle(
    dist: &ExactDistances,
    sources: &[NodeId],
    h: u64,
    sigma: usize,
) -> Vec<Vec<(u64, NodeId)>> {
    (0..dist.n())
        .map(|v| {
            let mut list: Vec<(u64, NodeId)> = sources
                .iter()
                .filter(|&&s| u64::from(dist.min_hops[v][s]) <= h)
                .map(|&s| (dist.wd[v][s], s))
                .collect();
            list.sort_unstable();
            list.truncate(sigma);
            list
        })
        .collect()
}

/// Detection on the graph in which every edge `e` is subdivided into
/// `lengths[e]` unit edges, restricted to original nodes.
pub fn subdivided_detection_oracle(
    topo: &Topology,
    lengths: Option<&[u64]>,
    sources: &[NodeId],
    h: u64,
    sigma: usize,
) -> Vec<Vec<(u64, NodeId)>> {
    let n = topo.n();
    let mut lists: Vec<Vec<(u64, NodeId)>> = vec![Vec::new(); n];
    for &s in sources {
        let d = length_dijkstra(topo, lengths, s);
        for v in 0..n {
            if d[v] <= h {
                lists[v].push((d[v], s));
            }
        }
    }
    for l in &mut lists {
        l.sort_unstable();
        l.truncate(sigma);
    }
    lists
}

/// Shortest path lengths from `src` using per-edge lengths (1 when absent).
pub fn length_dijkstra(topo: &Topology, lengths: Option<&[u64]>, src: NodeId) -> Vec<u64> {
    let mut dist = vec![u64::MAX; topo.n()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0;
    heap.push(Reverse((0u64, src)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for a in topo.neighbors(v) {
            let nd = d + lengths.map_or(1, |l| l[a.edge]);
            if nd < dist[a.to] {
                dist[a.to] = nd;
                heap.push(Reverse((nd, a.to)));
            }
        }
    }
    dist
}

/// Hop diameter, weighted diameter and shortest path diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    #[serde(rename = "D")]
    pub hop_diameter: u64,
    #[serde(rename = "WD")]
    pub weighted_diameter: u64,
    #[serde(rename = "SPD")]
    pub spd: u64,
}

pub fn graph_stats(g: &WeightedGraph) -> GraphStats {
    graph_stats_from(g, &exact_distances(g))
}

pub fn graph_stats_from(g: &WeightedGraph, dist: &ExactDistances) -> GraphStats {
    let topo = g.topology();
    let hop_diameter = (0..g.n()).map(|v| topo.hop_eccentricity(v) as u64).max().unwrap_or(0);
    let weighted_diameter = dist.wd.iter().flatten().copied().max().unwrap_or(0);
    let spd = dist.min_hops.iter().flatten().copied().max().unwrap_or(0) as u64;
    GraphStats { hop_diameter, weighted_diameter, spd }
}

/// Stats plus node and edge counts, as emitted by the `stats` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub n: usize,
    pub m: usize,
    #[serde(flatten)]
    pub stats: GraphStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_random_graph, load_graph, path_graph};
    use proptest::prelude::*;

    /// Minimum weight and, among minimum-weight paths, minimum hops, over all
    /// simple paths. Exponential; only for tiny graphs.
    fn brute_force(g: &WeightedGraph) -> (Vec<Vec<u64>>, Vec<Vec<u32>>) {
        let n = g.n();
        let mut wd = vec![vec![u64::MAX; n]; n];
        let mut hops = vec![vec![u32::MAX; n]; n];
        fn dfs(
            g: &WeightedGraph,
            src: usize,
            v: usize,
            w: u64,
            h: u32,
            seen: &mut Vec<bool>,
            wd: &mut [Vec<u64>],
            hops: &mut [Vec<u32>],
        ) {
            if (w, h) < (wd[src][v], hops[src][v]) {
                wd[src][v] = w;
                hops[src][v] = h;
            }
            for a in g.neighbors(v) {
                if !seen[a.to] {
                    seen[a.to] = true;
                    dfs(g, src, a.to, w + g.weight(a.edge), h + 1, seen, wd, hops);
                    seen[a.to] = false;
                }
            }
        }
        for s in 0..n {
            let mut seen = vec![false; n];
            seen[s] = true;
            dfs(g, s, s, 0, 0, &mut seen, &mut wd, &mut hops);
        }
        (wd, hops)
    }

    #[test]
    fn path_and_triangle() {
        let p3 = path_graph(&[2, 3]);
        let d = exact_distances(&p3);
        assert_eq!((d.wd[0][2], d.min_hops[0][2]), (5, 2));
        let tri = load_graph("3 3\n0 1 1\n1 2 1\n0 2 3").unwrap();
        let d = exact_distances(&tri);
        assert_eq!((d.wd[0][2], d.min_hops[0][2]), (2, 2));
        for v in 0..3 {
            assert_eq!((d.wd[v][v], d.min_hops[v][v]), (0, 0));
        }
    }

    #[test]
    fn detection_oracle_examples() {
        let p3 = path_graph(&[2, 3]);
        let d = exact_distances(&p3);
        let l = exact_detection_oracle(&d, &[0, 2], 2, 2);
        assert_eq!(l[1], vec![(2, 0), (3, 2)]);
        let l = exact_detection_oracle(&d, &[0, 2], 1, 2);
        assert_eq!(l[0], vec![(0, 0)]);
        // equal distances: smaller id first
        let star = crate::graph::star_graph(4);
        let d = exact_distances(&star);
        let l = exact_detection_oracle(&d, &[4, 3, 2, 1], 1, 2);
        assert_eq!(l[0], vec![(1, 1), (1, 2)]);
    }

    #[test]
    fn stats_examples() {
        let s = graph_stats(&path_graph(&[2, 3]));
        assert_eq!((s.hop_diameter, s.weighted_diameter, s.spd), (2, 5, 2));
        let s = graph_stats(&path_graph(&[1]));
        assert_eq!((s.hop_diameter, s.weighted_diameter, s.spd), (1, 1, 1));
        let tri = load_graph("3 3\n0 1 1\n1 2 1\n0 2 3").unwrap();
        let s = graph_stats(&tri);
        assert_eq!((s.hop_diameter, s.spd), (1, 2));
    }

    #[test]
    fn subdivided_oracle_matches_weighted_oracle() {
        let g = gen_random_graph(30, 0.2, 7, 3).unwrap();
        let d = exact_distances(&g);
        let srcs: Vec<_> = (0..30).step_by(3).collect();
        // Subdividing by the weights: hop distance equals weighted distance.
        let sub = subdivided_detection_oracle(g.topology(), Some(g.weights()), &srcs, u64::MAX, 5);
        let full = exact_detection_oracle(&d, &srcs, u64::MAX, 5);
        assert_eq!(sub, full);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dijkstra_matches_path_enumeration(n in 2usize..=9, p in 0.3f64..1.0, seed in 0u64..10_000) {
            let g = gen_random_graph(n, p, 6, seed).unwrap();
            let d = exact_distances(&g);
            let (wd, hops) = brute_force(&g);
            prop_assert_eq!(&d.wd, &wd);
            prop_assert_eq!(&d.min_hops, &hops);
            for v in 0..n {
                for w in 0..n {
                    prop_assert_eq!(d.wd[v][w], d.wd[w][v]);
                    for x in 0..n {
                        prop_assert!(d.wd[v][w] <= d.wd[v][x] + d.wd[x][w]);
                    }
                }
            }
            let st = graph_stats_from(&g, &d);
            prop_assert!(st.hop_diameter <= st.spd && st.spd <= n as u64 - 1);
            prop_assert!(st.weighted_diameter >= st.hop_diameter);
        }

        #[test]
        fn detection_is_prefix_of_full_list(seed in 0u64..1000, h in 1u64..6, sigma in 1usize..6) {
            let g = gen_random_graph(12, 0.3, 5, seed).unwrap();
            let d = exact_distances(&g);
            let srcs: Vec<_> = (0..12).filter(|v| v % 2 == 0).collect();
            let short = exact_detection_oracle(&d, &srcs, h, sigma);
            let full = exact_detection_oracle(&d, &srcs, h, usize::MAX);
            for v in 0..12 {
                prop_assert!(short[v].len() <= sigma);
                prop_assert_eq!(&short[v][..], &full[v][..short[v].len()]);
            }
        }
    }
}
