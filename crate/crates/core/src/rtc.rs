//! Routing table construction with relabeling.
//!
//! A random skeleton `S` is sampled. Short range: PDE over all nodes gives
//! every node estimates and next hops towards nearby nodes, and its closest
//! skeleton node `s'_v`. Long range: PDE over `S` gives `Wd'_S`, a
//! `(2k - 1)`-spanner of the skeleton graph is made known to everyone, and the
//! routes from each `v` to `s'_v` form trees that are labelled for tree routing.
//! A node's label is `(id, s'_v, Wd~(v, s'_v), tree interval)`.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{Dist, Eps};
use crate::engine::{run_global_phase, EngineConfig, RunStats};
use crate::error::{Error, RoutingError};
use crate::graph::{NodeId, WeightedGraph, MAX_GENERATION_ATTEMPTS};
use crate::monitor::LemmaCheck;
use crate::oracle::ExactDistances;
use crate::pde::{pde_estimate, PdeParams, PdeResult};
use crate::rng::subseed;
use crate::spanner::{baswana_sen_spanner, RatEdge, RatGraph};
use crate::tree::{label_tree, tree_label_cost, RootedTree, TreeLabel, TreeLabeling, DEFAULT_C_T};

/// Flag bit marking a source as a skeleton node.
pub const FLAG_SKELETON: u8 = 1;

/// Default constant `c` in `h = sigma = c log2 n / p`.
pub const DEFAULT_C: f64 = 4.0;

pub fn log2n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// `eps = 1 / ceil(log2 n)`.
pub fn default_eps(n: usize) -> Eps {
    Eps::reciprocal(log2n(n).ceil() as u64)
}

/// `p = n^(-1/2 - 1/(4k))`.
pub fn sample_prob(n: usize, k: u32) -> f64 {
    (n as f64).powf(-0.5 - 1.0 / (4.0 * k as f64))
}

/// `min(n, ceil(c log2 n / p))`.
pub fn hop_param(n: usize, c: f64, p: f64) -> u64 {
    ((c * log2n(n) / p).ceil() as u64).min(n as u64)
}

/// Independent sampling with probability `p`, redrawn while empty.
pub fn sample_skeleton(n: usize, p: f64, seed: u64) -> Result<Vec<NodeId>, Error> {
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "rtc_skeleton", attempt as u64));
        let s: Vec<NodeId> = (0..n).filter(|_| rng.gen_bool(p.clamp(0.0, 1.0))).collect();
        if !s.is_empty() {
            return Ok(s);
        }
    }
    Err(Error::ResampleExhausted(MAX_GENERATION_ATTEMPTS))
}

#[derive(Debug, Clone)]
pub struct RtcConfig {
    pub k: u32,
    /// Defaults to `1 / ceil(log2 n)`.
    pub eps: Option<Eps>,
    pub c: f64,
    pub c_t: u64,
    pub seed: u64,
    pub engine: EngineConfig,
}

impl RtcConfig {
    pub fn new(k: u32, seed: u64) -> Self {
        RtcConfig { k, eps: None, c: DEFAULT_C, c_t: DEFAULT_C_T, seed, engine: EngineConfig::default() }
    }
}

/// `(id, s'_v, Wd~(v, s'_v), interval in T_{s'_v})`. The distance is exact when
/// it fits the wire format and otherwise rounded up to a multiple of 2^-20.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RtcLabel {
    pub id: NodeId,
    pub s_prime: NodeId,
    pub dist: Dist,
    pub tree: TreeLabel,
}

/// Bits of the encoded label.
pub const RTC_LABEL_BITS: u32 = 16 + 16 + 64 + 32 + 32 + 32;

const QUANTUM_DEN: u64 = 1 << 20;

fn wire_dist(d: &Dist) -> Result<(u64, u32), RoutingError> {
    let parts = d.to_parts(64, 32).or_else(|| d.quantize_up(QUANTUM_DEN).to_parts(64, 32));
    parts
        .map(|(n, den)| (n, den as u32))
        .ok_or_else(|| RoutingError::MalformedLabel(format!("distance {d} does not fit 64/32 bits")))
}

impl RtcLabel {
    /// Big-endian `[16 id][16 s'][64 num][32 den][32 in][32 out]`.
    pub fn encode(&self) -> Result<Vec<u8>, RoutingError> {
        let id = u16::try_from(self.id).map_err(|_| RoutingError::MalformedLabel("id exceeds 16 bits".into()))?;
        let sp = u16::try_from(self.s_prime)
            .map_err(|_| RoutingError::MalformedLabel("skeleton id exceeds 16 bits".into()))?;
        let (num, den) = wire_dist(&self.dist)?;
        let mut out = Vec::with_capacity(24);
        out.extend_from_slice(&id.to_be_bytes());
        out.extend_from_slice(&sp.to_be_bytes());
        out.extend_from_slice(&num.to_be_bytes());
        out.extend_from_slice(&den.to_be_bytes());
        out.extend_from_slice(&self.tree.inn.to_be_bytes());
        out.extend_from_slice(&self.tree.out.to_be_bytes());
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<RtcLabel, RoutingError> {
        if bytes.len() != (RTC_LABEL_BITS / 8) as usize {
            return Err(RoutingError::MalformedLabel(format!("expected 24 bytes, got {}", bytes.len())));
        }
        let u16_at = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
        let u32_at = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
        let num = u64::from_be_bytes(bytes[4..12].try_into().unwrap());
        let den = u32_at(12);
        let dist = Dist::from_parts(num, den as u64)
            .ok_or_else(|| RoutingError::MalformedLabel("zero denominator".into()))?;
        let tree = TreeLabel { inn: u32_at(16), out: u32_at(20) };
        if tree.inn > tree.out {
            return Err(RoutingError::MalformedLabel("empty interval".into()));
        }
        Ok(RtcLabel { id: u16_at(0) as NodeId, s_prime: u16_at(2) as NodeId, dist, tree })
    }

    /// The label as carried in packets: the distance is rounded as on the wire.
    pub fn on_wire(&self) -> Result<RtcLabel, RoutingError> {
        RtcLabel::decode(&self.encode()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Segment {
    Short,
    Tree,
    Long,
}

#[derive(Debug, Clone, Serialize)]
pub struct Route {
    pub path: Vec<NodeId>,
    pub weight: u64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone)]
pub struct RtcScheme {
    pub n: usize,
    pub k: u32,
    pub eps: Eps,
    pub p: f64,
    pub h: u64,
    pub skeleton: Vec<NodeId>,
    pub skel_index: HashMap<NodeId, usize>,
    /// PDE over all nodes.
    pub short: PdeResult,
    /// PDE over the skeleton; `Wd'_S`.
    pub long: PdeResult,
    /// Spanner of the skeleton graph, on skeleton-local ids.
    pub spanner: RatGraph,
    pub spanner_dist: Vec<Vec<Option<Dist>>>,
    pub s_prime: Vec<NodeId>,
    /// Nodes whose `s'_v` is not in `L_v`.
    pub s_prime_outside_list: Vec<NodeId>,
    pub trees: BTreeMap<NodeId, TreeLabeling>,
    pub labels: Vec<RtcLabel>,
    /// `far[u][z] = (min_t Wd'_S(u, t) + d_H(t, z), argmin)` over `t != u`.
    pub far: Vec<Vec<Option<(Dist, NodeId)>>>,
    pub stats: RunStats,
}

pub fn rtc_build(g: &WeightedGraph, cfg: &RtcConfig) -> Result<RtcScheme, Error> {
    if cfg.k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n = g.n();
    let eps = cfg.eps.unwrap_or_else(|| default_eps(n));
    let p = sample_prob(n, cfg.k);
    let h = hop_param(n, cfg.c, p);
    let skeleton = sample_skeleton(n, p, cfg.seed)?;
    let skel_index: HashMap<NodeId, usize> = skeleton.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let in_s = |v: NodeId| skel_index.contains_key(&v);

    let mut short_params = PdeParams::new((0..n).collect(), h, h as usize, eps);
    short_params.flags = Some((0..n).map(|v| if in_s(v) { FLAG_SKELETON } else { 0 }).collect());
    let short = pde_estimate(g, &short_params, cfg.engine)?;
    let long_params = PdeParams::new(skeleton.clone(), h, skeleton.len(), eps);
    let long = pde_estimate(g, &long_params, cfg.engine)?;
    let mut stats = short.stats.clone();
    stats.absorb(&long.stats);

    // s'_v: the first skeleton entry of L_v, else the best skeleton entry seen.
    let mut s_prime = Vec::with_capacity(n);
    let mut s_prime_outside_list = Vec::new();
    for v in 0..n {
        if let Some(e) = short.lists[v].iter().find(|e| e.flags & FLAG_SKELETON != 0) {
            s_prime.push(e.src);
            continue;
        }
        s_prime_outside_list.push(v);
        let best = short.tables[v]
            .iter()
            .filter(|(_, w)| w.flags & FLAG_SKELETON != 0)
            .min_by(|a, b| short.cmp_witness(a.1, b.1).then(a.0.cmp(b.0)))
            .map(|(&s, _)| s);
        s_prime.push(best.ok_or(Error::NoSkeletonInRange(v))?);
    }

    // Skeleton graph weighted by Wd'_S, and its spanner, broadcast to all.
    let skel_edges = skeleton.iter().enumerate().flat_map(|(i, &s)| {
        let long = &long;
        let skel_index = &skel_index;
        long.tables[s].iter().filter(move |(&t, _)| t != s).map(move |(t, w)| RatEdge {
            u: i,
            v: skel_index[t],
            w: long.value(w),
        })
    });
    let skel_graph = RatGraph::new(skeleton.len(), skel_edges);
    let spanner = skel_graph.subgraph(&baswana_sen_spanner(&skel_graph, cfg.k, cfg.seed));
    let bfs_depth = g.topology().hop_eccentricity(0) as u64;
    run_global_phase(&mut stats, spanner.edges(), bfs_depth);
    let spanner_dist = spanner.all_pairs();

    // Trees T_s of the routes from each v to s'_v.
    let mut rooted: BTreeMap<NodeId, RootedTree> =
        skeleton.iter().map(|&s| (s, RootedTree::new(s))).collect();
    for v in 0..n {
        let s = s_prime[v];
        let tree = rooted.get_mut(&s).unwrap();
        let mut u = v;
        while u != s && !tree.parent.contains_key(&u) {
            let next = short.next_hop(u, s)?.ok_or(RoutingError::Stuck { from: v, to: s, at: u })?;
            tree.parent.insert(u, next);
            u = next;
        }
    }
    let mut trees = BTreeMap::new();
    let mut per_node = vec![0u64; n];
    let mut max_depth = 0;
    for (s, t) in rooted {
        let l = label_tree(&t)?;
        for &v in l.labels.keys() {
            per_node[v] += 1;
        }
        max_depth = max_depth.max(l.depth);
        trees.insert(s, l);
    }
    // One simulated labeling round per tree a node belongs to.
    let max_trees = per_node.iter().copied().max().unwrap_or(1);
    stats.global_phase_cost += tree_label_cost(max_depth, n, cfg.c_t) * max_trees;

    let labels = (0..n)
        .map(|v| {
            let s = s_prime[v];
            RtcLabel {
                id: v,
                s_prime: s,
                dist: short.estimate(v, s).expect("s'_v is in the table"),
                tree: trees[&s].labels[&v],
            }
        })
        .collect();

    let far = (0..n)
        .map(|u| {
            (0..skeleton.len())
                .map(|z| {
                    long.tables[u]
                        .iter()
                        .filter(|(&t, _)| t != u)
                        .filter_map(|(&t, w)| {
                            let dh = spanner_dist[skel_index[&t]][z].as_ref()?;
                            Some((&long.value(w) + dh, t))
                        })
                        .min()
                })
                .collect()
        })
        .collect();

    Ok(RtcScheme {
        n,
        k: cfg.k,
        eps,
        p,
        h,
        skeleton,
        skel_index,
        short,
        long,
        spanner,
        spanner_dist,
        s_prime,
        s_prime_outside_list,
        trees,
        labels,
        far,
        stats,
    })
}

impl RtcScheme {
    pub fn label(&self, v: NodeId) -> &RtcLabel {
        &self.labels[v]
    }

    /// Candidate moves at `u` towards the node labelled `dst`, each with an
    /// upper bound on the remaining route weight.
    fn options(&self, u: NodeId, dst: &RtcLabel) -> Result<Vec<(Dist, Segment, NodeId)>, RoutingError> {
        let w = dst.id;
        let mut opts = Vec::new();
        if let Some(wit) = self.short.witness(u, w) {
            if let Some(x) = wit.via {
                opts.push((self.short.value(wit), Segment::Short, x));
            }
        }
        if let Some(t) = self.trees.get(&dst.s_prime) {
            if let Some(own) = t.label(u) {
                if own.contains(&dst.tree) {
                    if let Some(x) = t.next_hop(u, &dst.tree)? {
                        let up = self.short.estimate(u, dst.s_prime).unwrap_or_else(Dist::zero);
                        opts.push((dst.dist.sub_raw(&up), Segment::Tree, x));
                    }
                }
            }
        }
        let z = *self
            .skel_index
            .get(&dst.s_prime)
            .ok_or_else(|| RoutingError::MalformedLabel(format!("{} is not a skeleton node", dst.s_prime)))?;
        if u != dst.s_prime {
            if let Some((f, t)) = &self.far[u][z] {
                if let Some(x) = self.long.next_hop(u, *t)? {
                    opts.push((f.add_raw(&dst.dist), Segment::Long, x));
                }
            }
        }
        Ok(opts)
    }

    /// Next hop and segment kind from `u`; `None` at the destination.
    pub fn next_hop(&self, u: NodeId, dst: &RtcLabel) -> Result<Option<(NodeId, Segment)>, RoutingError> {
        if u == dst.id {
            return Ok(None);
        }
        let opts = self.options(u, dst)?;
        let best = opts.into_iter().min_by(|a, b| a.0.cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))));
        match best {
            Some((_, seg, x)) => Ok(Some((x, seg))),
            None => Err(RoutingError::Stuck { from: u, to: dst.id, at: u }),
        }
    }

    /// Distance estimate `dist_v(label)`, computed from local tables only.
    pub fn dist(&self, v: NodeId, dst: &RtcLabel) -> Result<Dist, RoutingError> {
        if v == dst.id {
            return Ok(Dist::zero());
        }
        self.options(v, dst)?
            .into_iter()
            .map(|o| o.0)
            .min()
            .map(Dist::reduced)
            .ok_or(RoutingError::Stuck { from: v, to: dst.id, at: v })
    }

    pub fn route(&self, g: &WeightedGraph, v: NodeId, dst: &RtcLabel) -> Result<Route, RoutingError> {
        let mut path = vec![v];
        let mut segments = Vec::new();
        let mut weight = 0u64;
        let mut u = v;
        // The bound drops with every hop and depends only on the node, so
        // routes are simple paths.
        let limit = self.n;
        while let Some((x, seg)) = self.next_hop(u, dst)? {
            weight += g.weight_between(u, x).ok_or(RoutingError::Stuck { from: v, to: dst.id, at: u })?;
            path.push(x);
            segments.push(seg);
            u = x;
            if path.len() > limit {
                return Err(RoutingError::RouteLoop { from: v, to: dst.id, hops: limit });
            }
        }
        Ok(Route { path, weight, segments })
    }

    /// Short-range table entries per node.
    pub fn short_table_sizes(&self) -> Vec<usize> {
        self.short.tables.iter().map(|t| t.len()).collect()
    }

    /// Number of trees each node belongs to.
    pub fn trees_per_node(&self) -> Vec<u64> {
        let mut c = vec![0; self.n];
        for t in self.trees.values() {
            for &v in t.labels.keys() {
                c[v] += 1;
            }
        }
        c
    }

    pub fn max_tree_depth(&self) -> u64 {
        self.trees.values().map(|t| t.depth).max().unwrap_or(0)
    }

    /// Spanner in the graph file format, on skeleton-local ids.
    pub fn spanner_dump(&self) -> String {
        self.spanner.to_edge_list(&self.skeleton)
    }

    /// `(6k - 1)(1 + eps)^3`: the stretch bound with its eps terms written out.
    pub fn stretch_bound(&self) -> f64 {
        let k = self.k as f64;
        (6.0 * k - 1.0) * (1.0 + self.eps.as_f64()).powi(3)
    }
}

/// Empirical checks of the high-probability statements behind the scheme.
pub fn rtc_lemma_checks(s: &RtcScheme, d: &ExactDistances) -> Vec<LemmaCheck> {
    let n = s.n;
    let one_plus = s.eps.one_plus();
    let is_s = |v: NodeId| s.skel_index.contains_key(&v);
    let wd = |v: NodeId, w: NodeId| d.wd[v][w];
    // Wd'(v, w) as known to v; None when w was never detected.
    let est = |v: NodeId, w: NodeId| s.short.estimate(v, w);
    let mut st = [1, 2, 3, 4].map(|i| LemmaCheck::new("4.2", i));
    let mut l43 = [1, 2].map(|i| LemmaCheck::new("4.3", i));

    // Distances in the full skeleton graph (not the spanner).
    let skel = RatGraph::new(
        s.skeleton.len(),
        s.skeleton.iter().enumerate().flat_map(|(i, &a)| {
            s.long.tables[a].iter().filter(move |(&t, _)| t != a).map(move |(t, w)| RatEdge {
                u: i,
                v: s.skel_index[t],
                w: s.long.value(w),
            })
        }),
    );
    let skel_dist = skel.all_pairs();
    let three = num_rational::BigRational::from_integer(3.into());
    let two = num_rational::BigRational::from_integer(2.into());
    let cube = &one_plus * &one_plus * &one_plus;

    for v in 0..n {
        let s_v = (0..n).filter(|&x| is_s(x)).min_by_key(|&x| (wd(v, x), x)).unwrap();
        let sp = s.s_prime[v];
        let sp_key = (est(v, sp).unwrap(), sp);
        let in_list = |w: NodeId| s.short.lists[v].iter().any(|e| e.src == w);
        for w in 0..n {
            if w == v {
                continue;
            }
            let e = est(v, w);
            let within = |x: &Option<Dist>, bound: u64| x.as_ref().is_some_and(|x| x.within(&one_plus, bound));
            let before_sp = e.as_ref().is_some_and(|x| (x.clone(), w) <= sp_key);
            if before_sp {
                st[0].record(within(&e, wd(v, w)) && in_list(w), (v, w));
            } else {
                st[3].record(sp_key.0.within(&one_plus, wd(v, w)), (v, w));
            }
            if (wd(v, w), w) <= (wd(v, s_v), s_v) {
                st[1].record(within(&e, wd(v, w)), (v, w));
            } else {
                st[2].record(within(&est(v, s_v), wd(v, w)), (v, w));
            }
            if !in_list(w) {
                let spw = s.s_prime[w];
                let first = s.short.estimate(w, spw).unwrap();
                l43[0].record(first.ratio() <= &(&(&two * &cube) * &num_rational::BigRational::from_integer(wd(v, w).into())), (v, w));
                let z = s.skel_index[&spw];
                let chain = s.long.tables[v]
                    .iter()
                    .filter_map(|(&t, wit)| Some(&s.long.value(wit) + skel_dist[s.skel_index[&t]][z].as_ref()?))
                    .min();
                let bound = &(&three * &cube) * &num_rational::BigRational::from_integer(wd(v, w).into());
                l43[1].record(chain.is_some_and(|c| c.ratio() <= &bound), (v, w));
            }
        }
    }

    let mut l44_depth = LemmaCheck::new("4.4", 1);
    let mut l44_trees = LemmaCheck::new("4.4", 2);
    let depth_bound = (s.short.i_max() as u64 + 1) * s.short.h_prime;
    for (&root, t) in &s.trees {
        l44_depth.record(t.depth <= depth_bound, (root, root));
    }
    for (v, &c) in s.trees_per_node().iter().enumerate() {
        l44_trees.record(c <= s.short.i_max() as u64 + 1, (v, v));
    }
    let mut out: Vec<LemmaCheck> = st.into_iter().collect();
    out.extend(l43);
    out.push(l44_depth);
    out.push(l44_trees);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{connected_density, gen_random_graph, path_graph};
    use crate::monitor::total_violations;
    use crate::oracle::exact_distances;

    #[test]
    fn parameters() {
        assert_eq!(default_eps(256), Eps::reciprocal(8));
        let p = sample_prob(256, 2);
        assert!((p - 256f64.powf(-0.625)).abs() < 1e-12);
        assert_eq!(hop_param(256, 4.0, p), 256);
        assert_eq!(hop_param(256, 0.1, p), 26);
    }

    #[test]
    fn two_nodes() {
        let g = path_graph(&[3]);
        let s = rtc_build(&g, &RtcConfig::new(1, 0)).unwrap();
        let r = s.route(&g, 0, s.label(1)).unwrap();
        assert_eq!(r.path, vec![0, 1]);
        assert_eq!(r.weight, 3);
        assert!(s.route(&g, 1, s.label(1)).unwrap().path == vec![1]);
        assert_eq!(s.dist(0, s.label(0)).unwrap(), Dist::zero());
    }

    #[test]
    fn p3_routes_exactly() {
        let g = path_graph(&[2, 3]);
        for seed in 0..5 {
            let s = rtc_build(&g, &RtcConfig::new(1, seed)).unwrap();
            let r = s.route(&g, 0, s.label(2)).unwrap();
            assert_eq!((r.path.clone(), r.weight), (vec![0, 1, 2], 5));
            let d = exact_distances(&g);
            let sp = s.labels[2].s_prime;
            assert!(s.labels[2].dist.within(&s.eps.one_plus(), d.wd[2][sp]));
        }
    }

    #[test]
    fn label_round_trip() {
        let l = RtcLabel {
            id: 300,
            s_prime: 7,
            dist: Dist::from_parts(1001, 64).unwrap(),
            tree: TreeLabel { inn: 12, out: 40 },
        };
        let bytes = l.encode().unwrap();
        assert_eq!(bytes.len() * 8, RTC_LABEL_BITS as usize);
        assert_eq!(RtcLabel::decode(&bytes).unwrap(), l);
        assert!(RtcLabel::decode(&bytes[1..]).is_err());
        // a denominator beyond 32 bits is rounded up
        let big = Dist::from_parts(u64::MAX / 3, 1u64 << 40).unwrap();
        let q = RtcLabel { dist: big.clone(), ..l }.on_wire().unwrap();
        assert!(q.dist >= big);
    }

    fn check_all_routes(g: &WeightedGraph, s: &RtcScheme) -> (f64, usize) {
        let d = exact_distances(g);
        let mut worst = 1.0f64;
        let mut long = 0;
        for v in 0..g.n() {
            for w in 0..g.n() {
                if v == w {
                    continue;
                }
                let label = s.label(w).on_wire().unwrap();
                let r = s.route(g, v, &label).unwrap();
                assert_eq!(*r.path.last().unwrap(), w);
                let est = s.dist(v, &label).unwrap();
                assert!(est >= Dist::from_int(d.wd[v][w]));
                assert!(Dist::from_int(r.weight) <= est);
                worst = worst.max(r.weight as f64 / d.wd[v][w] as f64);
                long += usize::from(r.segments.contains(&Segment::Long));
            }
        }
        (worst, long)
    }

    #[test]
    fn small_c_exercises_long_range() {
        let n = 96;
        let g = gen_random_graph(n, connected_density(n, 1.5), 50, 3).unwrap();
        let mut cfg = RtcConfig::new(2, 11);
        cfg.c = 0.3;
        let s = rtc_build(&g, &cfg).unwrap();
        assert!(s.h < n as u64);
        let (_, long) = check_all_routes(&g, &s);
        assert!(long > 0);
        // skeleton estimates are symmetric when sigma = |S|
        for &a in &s.skeleton {
            for &b in &s.skeleton {
                assert_eq!(s.long.estimate(a, b), s.long.estimate(b, a));
            }
        }
    }

    #[test]
    fn default_constant_on_random_graph() {
        let n = 64;
        let g = gen_random_graph(n, connected_density(n, 2.0), (n as u64).pow(3), 5).unwrap();
        let s = rtc_build(&g, &RtcConfig::new(2, 1)).unwrap();
        let (worst, _) = check_all_routes(&g, &s);
        assert!(worst <= s.stretch_bound());
        let checks = rtc_lemma_checks(&s, &exact_distances(&g));
        assert_eq!(total_violations(&checks), 0, "{checks:?}");
    }
}
