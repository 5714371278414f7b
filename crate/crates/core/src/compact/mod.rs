//! Compact routing tables from an approximate Thorup–Zwick hierarchy.
//!
//! Levels below `l0` are built with PDE on the graph. In the short-circuit and
//! broadcast-all modes the levels from `l0` up are computed on the skeleton
//! graph over `S_l0`, whose edges carry `(1 + eps')`-approximate distances, and
//! each node composes `min_t Wd'_{S_l0}(v, t) + Wd'_S(t, s)`.

mod route;

pub use route::{compact_lemma_checks, CompactLabel, LevelLabel, Route, RouteStep};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Dist, Eps};
use crate::engine::{run_global_phase, EngineConfig, RunStats};
use crate::error::{Error, RoutingError};
use crate::graph::{NodeId, Topology, WeightedGraph, MAX_GENERATION_ATTEMPTS};
use crate::monitor::LemmaCheck;
use crate::pde::{pde_estimate, pde_estimate_on, PdeParams, PdeResult};
use crate::rng::subseed;
use crate::rtc::{log2n, DEFAULT_C};
use crate::spanner::{RatEdge, RatGraph};
use crate::tree::{label_tree, tree_label_cost, RootedTree, TreeLabeling, DEFAULT_C_T};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every level with `h = SPD`.
    Spd,
    ShortCircuit,
    BroadcastAll,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Spd => "spd",
            Mode::ShortCircuit => "short-circuit",
            Mode::BroadcastAll => "broadcast-all",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spd" => Ok(Mode::Spd),
            "short-circuit" => Ok(Mode::ShortCircuit),
            "broadcast-all" => Ok(Mode::BroadcastAll),
            _ => Err(format!("unknown mode {s:?} (spd, short-circuit, broadcast-all)")),
        }
    }
}

/// `eps = 1 / ceil(log2 n)^2`.
pub fn default_eps(n: usize) -> Eps {
    let l = log2n(n).ceil() as u64;
    Eps::reciprocal(l * l)
}

/// `sigma = min(n, ceil(c n^(1/k) log2 n))`.
pub fn sigma_for(n: usize, k: u32, c: f64) -> usize {
    ((c * (n as f64).powf(1.0 / k as f64) * log2n(n)).ceil() as usize).min(n)
}

/// `h_l = min(n, ceil(c n^(l/k) log2 n))`.
pub fn hop_for(n: usize, k: u32, l: u32, c: f64) -> u64 {
    ((c * (n as f64).powf(l as f64 / k as f64) * log2n(n)).ceil() as u64).min(n as u64)
}

/// The integer closest to `k (log D / log n + 1) / 2`, at least `floor(k/2) + 1`
/// and at most `k - 1`.
pub fn choose_l0(n: usize, k: u32, d: u64) -> u32 {
    let x = k as f64 * ((d.max(1) as f64).ln() / (n.max(2) as f64).ln() + 1.0) / 2.0;
    let lo = k / 2 + 1;
    (x.round() as u32).max(lo).min(k.saturating_sub(1).max(1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    pub k: u32,
    pub level_of: Vec<u32>,
    /// `sets[l] = S_l`, ascending.
    pub sets: Vec<Vec<NodeId>>,
}

impl Hierarchy {
    pub fn contains(&self, l: u32, v: NodeId) -> bool {
        self.level_of[v] >= l
    }
}

/// Geometric levels with `P[level >= l] = n^(-l/k)`, truncated at `k - 1` and
/// redrawn while `S_{k-1}` is empty.
pub fn sample_levels(n: usize, k: u32, seed: u64) -> Result<Hierarchy, Error> {
    if k < 2 {
        return Err(Error::Config("the hierarchy needs k >= 2".into()));
    }
    let step = (n.max(1) as f64).powf(-1.0 / k as f64);
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "compact_levels", attempt as u64));
        let level_of: Vec<u32> = (0..n)
            .map(|_| {
                let mut l = 0;
                while l + 1 < k && rng.gen_bool(step) {
                    l += 1;
                }
                l
            })
            .collect();
        let sets: Vec<Vec<NodeId>> =
            (0..k).map(|l| (0..n).filter(|&v| level_of[v] >= l).collect()).collect();
        if !sets[k as usize - 1].is_empty() {
            return Ok(Hierarchy { k, level_of, sets });
        }
    }
    Err(Error::ResampleExhausted(MAX_GENERATION_ATTEMPTS))
}

#[derive(Debug, Clone)]
pub struct CompactConfig {
    pub k: u32,
    pub mode: Mode,
    /// Defaults to `1 / ceil(log2 n)^2`.
    pub eps: Option<Eps>,
    pub c: f64,
    pub c_t: u64,
    /// Overrides `choose_l0`.
    pub l0: Option<u32>,
    /// Required in SPD mode.
    pub spd: Option<u64>,
    pub seed: u64,
    pub engine: EngineConfig,
}

impl CompactConfig {
    pub fn new(k: u32, mode: Mode, seed: u64) -> Self {
        CompactConfig {
            k,
            mode,
            eps: None,
            c: DEFAULT_C,
            c_t: DEFAULT_C_T,
            l0: None,
            spd: None,
            seed,
            engine: EngineConfig::default(),
        }
    }
}

/// Skeleton graph on `S_l0` with edge weights `Wd'_{S_l0}`.
#[derive(Debug, Clone)]
pub struct SkeletonL0 {
    pub h: u64,
    pub nodes: Vec<NodeId>,
    pub index: HashMap<NodeId, usize>,
    /// `(1 + eps')`-approximate `(S_l0, h_l0, |S_l0|)`-estimation on the graph.
    pub pde: PdeResult,
    /// On local ids; an edge whose two ends disagree keeps the larger value.
    pub edges: Vec<RatEdge>,
}

impl SkeletonL0 {
    pub fn graph(&self) -> RatGraph {
        RatGraph::new(self.nodes.len(), self.edges.iter().cloned())
    }
}

/// Level `l` of the hierarchy as seen by every node.
#[derive(Debug, Clone)]
pub enum LevelTable {
    /// PDE for sources `S_l` on the graph.
    Pde(PdeResult),
    /// `far[v][s] = (min_{t != v} Wd'_{S_l0}(v, t) + D(t, s), argmin)` for
    /// `s` in `S_l`, `D` being the skeleton-graph distance function.
    Composed(Vec<BTreeMap<NodeId, (Dist, NodeId)>>),
}

/// Levels below `l0` plus the skeleton graph, shared by the short-circuit and
/// broadcast-all completions.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub cfg: CompactConfig,
    pub n: usize,
    pub eps: Eps,
    pub eps_prime: Eps,
    pub sigma: usize,
    pub l0: u32,
    pub bfs_depth: u64,
    /// Hop parameter used for the PDE of each low level.
    pub hops: Vec<u64>,
    pub hier: Hierarchy,
    pub low: Vec<PdeResult>,
    pub skeleton: Option<SkeletonL0>,
    pub stats: RunStats,
}

#[derive(Debug, Clone)]
pub struct CompactScheme {
    pub n: usize,
    pub k: u32,
    /// Requested mode; k = 2 short-circuit runs as broadcast-all.
    pub mode: Mode,
    pub effective_mode: Mode,
    pub eps: Eps,
    pub eps_prime: Eps,
    pub sigma: usize,
    pub l0: u32,
    pub hier: Hierarchy,
    pub skeleton: Option<SkeletonL0>,
    pub levels: Vec<LevelTable>,
    /// `pivots[l][v] = s'_l(v)`; `pivots[0][v] = v`.
    pub pivots: Vec<Vec<NodeId>>,
    /// `trees[l]` holds the trees of level `l >= 1`, keyed by root.
    pub trees: Vec<BTreeMap<NodeId, TreeLabeling>>,
    pub labels: Vec<CompactLabel>,
    pub stats: RunStats,
    /// Pivot checks made while building.
    pub checks: Vec<LemmaCheck>,
}

fn flags_for(hier: &Hierarchy, sources: &[NodeId], l: u32) -> Vec<u8> {
    sources.iter().map(|&s| u8::from(l < hier.k && hier.contains(l, s))).collect()
}

/// Hierarchy, levels below `l0` and, unless in SPD mode, the skeleton graph.
pub fn prepare(g: &WeightedGraph, cfg: &CompactConfig) -> Result<Prepared, Error> {
    if cfg.k < 2 {
        return Err(Error::Config("compact routing needs k >= 2".into()));
    }
    prepare_with(g, cfg, sample_levels(g.n(), cfg.k, cfg.seed)?)
}

/// As `prepare`, with a given hierarchy.
pub fn prepare_with(g: &WeightedGraph, cfg: &CompactConfig, hier: Hierarchy) -> Result<Prepared, Error> {
    let n = g.n();
    let k = cfg.k;
    if k < 2 || hier.k != k || hier.level_of.len() != n || hier.sets[k as usize - 1].is_empty() {
        return Err(Error::Config("hierarchy does not match k and the graph".into()));
    }
    if cfg.c <= 0.0 {
        return Err(Error::Config("c must be positive".into()));
    }
    let eps = cfg.eps.unwrap_or_else(|| default_eps(n));
    let eps_prime = eps.half_step();
    let sigma = sigma_for(n, k, cfg.c);
    let bfs_depth = g.topology().hop_eccentricity(0) as u64;
    let l0 = match cfg.mode {
        Mode::Spd => {
            if cfg.spd.is_none() {
                return Err(Error::Config("spd mode needs the shortest path diameter".into()));
            }
            k
        }
        _ if k == 2 => 1,
        _ => match cfg.l0 {
            Some(l) if l >= 1 && l < k => l,
            Some(l) => return Err(Error::Config(format!("l0 = {l} outside 1..{k}"))),
            None => choose_l0(n, k, bfs_depth),
        },
    };
    let mut stats = RunStats::empty(n, cfg.engine.c_b);
    let mut low = Vec::new();
    let mut hops = Vec::new();
    for l in 0..l0 {
        let h = match cfg.mode {
            Mode::Spd => cfg.spd.unwrap().max(1),
            _ if l + 1 >= k => n as u64,
            _ => hop_for(n, k, l + 1, cfg.c),
        };
        let sources = hier.sets[l as usize].clone();
        let mut params = PdeParams::new(sources.clone(), h, sigma, eps);
        params.flags = Some(flags_for(&hier, &sources, l + 1));
        let r = pde_estimate(g, &params, cfg.engine)?;
        stats.absorb(&r.stats);
        low.push(r);
        hops.push(h);
    }
    let skeleton = if l0 < k {
        let nodes = hier.sets[l0 as usize].clone();
        let h = hop_for(n, k, l0, cfg.c);
        let params = PdeParams::new(nodes.clone(), h, nodes.len(), eps_prime);
        let pde = pde_estimate(g, &params, cfg.engine)?;
        stats.absorb(&pde.stats);
        let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut w: BTreeMap<(usize, usize), Dist> = BTreeMap::new();
        for &s in &nodes {
            for (&t, wit) in &pde.tables[s] {
                if t == s {
                    continue;
                }
                let key = (index[&s].min(index[&t]), index[&s].max(index[&t]));
                let val = pde.value(wit);
                match w.get(&key) {
                    Some(cur) if *cur >= val => {}
                    _ => {
                        w.insert(key, val);
                    }
                }
            }
        }
        let edges = w.into_iter().map(|((u, v), w)| RatEdge { u, v, w }).collect();
        Some(SkeletonL0 { h, nodes, index, pde, edges })
    } else {
        None
    };
    Ok(Prepared {
        cfg: cfg.clone(),
        n,
        eps,
        eps_prime,
        sigma,
        l0,
        bfs_depth,
        hops,
        hier,
        low,
        skeleton,
        stats,
    })
}

/// `D(t, s)` for every skeleton node `t` (local id) and every `s` in `S_l`.
type SkeletonDist = Vec<BTreeMap<NodeId, Dist>>;

fn broadcast_all_dist(sk: &SkeletonL0, set: &[NodeId]) -> SkeletonDist {
    let g = sk.graph();
    let mut out = vec![BTreeMap::new(); sk.nodes.len()];
    for &s in set {
        let (d, _) = g.dijkstra(sk.index[&s]);
        for (t, dt) in d.into_iter().enumerate() {
            if let Some(x) = dt {
                out[t].insert(s, x);
            }
        }
    }
    out
}

/// Simulates `(S_l, h, sigma)`-estimation on the skeleton graph; every
/// simulated round is pipelined to all nodes over a BFS tree.
fn short_circuit_dist(
    p: &Prepared,
    sk: &SkeletonL0,
    l: u32,
    stats: &mut RunStats,
) -> Result<SkeletonDist, Error> {
    let k = p.hier.k;
    let n = p.n;
    let m = sk.nodes.len();
    let topo = Topology::new(m, sk.edges.iter().map(|e| (e.u, e.v)).collect());
    let weights: Vec<Dist> = sk.edges.iter().map(|e| e.w.clone()).collect();
    let h = if l + 1 >= k {
        m as u64
    } else {
        let ratio = (n as f64).powf((l + 1 - p.l0) as f64 / k as f64);
        ((p.cfg.c * ratio * log2n(n)).ceil() as u64).clamp(1, m.max(1) as u64)
    };
    let set = &p.hier.sets[l as usize];
    let sources: Vec<NodeId> = set.iter().map(|s| sk.index[s]).collect();
    let mut params = PdeParams::new(sources, h, p.sigma, p.eps_prime);
    params.flags = Some(set.iter().map(|&s| u8::from(l + 1 < k && p.hier.contains(l + 1, s))).collect());
    let sim = pde_estimate_on(&topo, &weights, &params, p.cfg.engine)?;
    let broadcasts: u64 = sim.stats.broadcasts_per_node.iter().sum();
    stats.global_phase_cost +=
        broadcasts + 2 * p.bfs_depth * sim.stats.rounds_used + sim.stats.global_phase_cost;
    Ok((0..m)
        .map(|t| {
            sim.tables[t]
                .iter()
                .map(|(&s, w)| (sk.nodes[s], sim.value(w)))
                .collect()
        })
        .collect())
}

fn compose(n: usize, sk: &SkeletonL0, d: &SkeletonDist) -> Vec<BTreeMap<NodeId, (Dist, NodeId)>> {
    (0..n)
        .map(|v| {
            let mut best: BTreeMap<NodeId, (Dist, NodeId)> = BTreeMap::new();
            for (&t, wit) in &sk.pde.tables[v] {
                if t == v {
                    continue;
                }
                let to_t = sk.pde.value(wit);
                for (&s, ds) in &d[sk.index[&t]] {
                    let cand = (to_t.add_raw(ds), t);
                    match best.get(&s) {
                        Some(cur) if *cur <= cand => {}
                        _ => {
                            best.insert(s, cand);
                        }
                    }
                }
            }
            best.into_iter().map(|(s, (d, t))| (s, (d.reduced(), t))).collect()
        })
        .collect()
}

/// Completes the hierarchy. `mode` picks how levels from `l0` up are built and
/// is ignored in SPD mode.
pub fn finish(g: &WeightedGraph, p: &Prepared, mode: Mode) -> Result<CompactScheme, Error> {
    let n = p.n;
    let k = p.hier.k;
    let effective_mode = match (p.cfg.mode, mode) {
        (Mode::Spd, _) => Mode::Spd,
        (_, Mode::Spd) => return Err(Error::Config("prepared without spd mode".into())),
        (_, _) if k == 2 => Mode::BroadcastAll,
        (_, m) => m,
    };
    let mut stats = p.stats.clone();
    let mut levels: Vec<LevelTable> = p.low.iter().cloned().map(LevelTable::Pde).collect();
    if let Some(sk) = &p.skeleton {
        if effective_mode == Mode::BroadcastAll {
            run_global_phase(&mut stats, &sk.edges, p.bfs_depth);
        }
        for l in p.l0..k {
            let set = &p.hier.sets[l as usize];
            let d = match effective_mode {
                Mode::ShortCircuit => short_circuit_dist(p, sk, l, &mut stats)?,
                _ => broadcast_all_dist(sk, set),
            };
            levels.push(LevelTable::Composed(compose(n, sk, &d)));
        }
    }

    let mut scheme = CompactScheme {
        n,
        k,
        mode: if p.cfg.mode == Mode::Spd { Mode::Spd } else { mode },
        effective_mode,
        eps: p.eps,
        eps_prime: p.eps_prime,
        sigma: p.sigma,
        l0: p.l0,
        hier: p.hier.clone(),
        skeleton: p.skeleton.clone(),
        levels,
        pivots: vec![(0..n).collect()],
        trees: vec![BTreeMap::new()],
        labels: Vec::new(),
        stats,
        checks: Vec::new(),
    };

    // Pivots s'_l(v) from the level l - 1 tables.
    let mut pivot_check = LemmaCheck::new("4.7", 1);
    for l in 1..k {
        let mut piv = Vec::with_capacity(n);
        for v in 0..n {
            let entries = scheme.sorted_entries(l - 1, v);
            let pos = entries.iter().position(|e| scheme.hier.contains(l, e.1));
            let Some(pos) = pos else {
                return Err(Error::PivotMissing { node: v, level: l });
            };
            pivot_check.record(pos < scheme.sigma, (v, entries[pos].1));
            piv.push(entries[pos].1);
        }
        scheme.pivots.push(piv);
    }
    scheme.checks.push(pivot_check);

    // Trees of the routes from each v to s'_l(v) at level l - 1.
    let mut depth_max = 0;
    let mut per_node = vec![0u64; n];
    for l in 1..k {
        let mut rooted: BTreeMap<NodeId, RootedTree> = BTreeMap::new();
        for v in 0..n {
            let s = scheme.pivots[l as usize][v];
            let tree = rooted.entry(s).or_insert_with(|| RootedTree::new(s));
            let mut u = v;
            while u != s && !tree.parent.contains_key(&u) {
                let next = scheme
                    .level_next(l - 1, u, s)?
                    .ok_or(RoutingError::Stuck { from: v, to: s, at: u })?;
                tree.parent.insert(u, next);
                u = next;
            }
        }
        let mut trees = BTreeMap::new();
        for (s, t) in rooted {
            let lab = label_tree(&t)?;
            for &v in lab.labels.keys() {
                per_node[v] += 1;
            }
            depth_max = depth_max.max(lab.depth);
            trees.insert(s, lab);
        }
        scheme.trees.push(trees);
    }
    let max_trees = per_node.iter().copied().max().unwrap_or(1);
    scheme.stats.global_phase_cost += tree_label_cost(depth_max, n, p.cfg.c_t) * max_trees;

    scheme.labels = (0..n).map(|w| scheme.make_label(w)).collect();
    let _ = g;
    Ok(scheme)
}

pub fn compact_build(g: &WeightedGraph, cfg: &CompactConfig) -> Result<CompactScheme, Error> {
    let p = prepare(g, cfg)?;
    finish(g, &p, cfg.mode)
}

impl CompactScheme {
    /// `Wd'_l(v, s)` as stored at `v`.
    pub fn level_est(&self, l: u32, v: NodeId, s: NodeId) -> Option<Dist> {
        match &self.levels[l as usize] {
            LevelTable::Pde(r) => r.estimate(v, s),
            LevelTable::Composed(far) => {
                if v == s {
                    Some(Dist::zero())
                } else {
                    far[v].get(&s).map(|x| x.0.clone())
                }
            }
        }
    }

    /// Next hop from `v` towards `s` with the level `l` tables.
    pub fn level_next(&self, l: u32, v: NodeId, s: NodeId) -> Result<Option<NodeId>, RoutingError> {
        if v == s {
            return Ok(None);
        }
        match &self.levels[l as usize] {
            LevelTable::Pde(r) => r.next_hop(v, s),
            LevelTable::Composed(far) => {
                let (_, t) = far[v].get(&s).ok_or(RoutingError::MissingEntry { node: v, target: s })?;
                let sk = self.skeleton.as_ref().expect("composed levels have a skeleton");
                sk.pde.next_hop(v, *t)
            }
        }
    }

    /// Level `l` entries of `v` ascending by `(estimate, id)`, itself included.
    pub fn sorted_entries(&self, l: u32, v: NodeId) -> Vec<(Dist, NodeId)> {
        let mut e: Vec<(Dist, NodeId)> = match &self.levels[l as usize] {
            LevelTable::Pde(r) => r.tables[v].iter().map(|(&s, w)| (r.value(w), s)).collect(),
            LevelTable::Composed(far) => {
                let mut e: Vec<(Dist, NodeId)> = far[v].iter().map(|(&s, x)| (x.0.clone(), s)).collect();
                if self.hier.contains(l, v) && !far[v].contains_key(&v) {
                    e.push((Dist::zero(), v));
                }
                e
            }
        };
        e.sort();
        e
    }

    /// `S'_l(v)`: entries before the pivot `s'_{l+1}(v)`; all entries at the top level.
    pub fn cluster(&self, l: u32, v: NodeId) -> Vec<(Dist, NodeId)> {
        let mut e = self.sorted_entries(l, v);
        if l + 1 < self.k {
            let piv = self.pivots[l as usize + 1][v];
            if let Some(pos) = e.iter().position(|x| x.1 == piv) {
                e.truncate(pos);
            }
        }
        e
    }

    /// Stored routing entries per node: all levels, the skeleton table, and
    /// one entry per tree the node belongs to.
    pub fn table_entries(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.n];
        for lv in &self.levels {
            for (v, x) in c.iter_mut().enumerate() {
                *x += match lv {
                    LevelTable::Pde(r) => r.tables[v].len(),
                    LevelTable::Composed(far) => far[v].len(),
                };
            }
        }
        if let Some(sk) = &self.skeleton {
            for (v, x) in c.iter_mut().enumerate() {
                *x += sk.pde.tables[v].len();
            }
        }
        for trees in &self.trees {
            for t in trees.values() {
                for &v in t.labels.keys() {
                    c[v] += 1;
                }
            }
        }
        c
    }

    /// `(1 + eps)^(4(k-1)) (4k - 3)`.
    pub fn stretch_bound(&self) -> f64 {
        let k = self.k as i32;
        (1.0 + self.eps.as_f64()).powi(4 * (k - 1)) * (4 * k - 3) as f64
    }

    fn make_label(&self, w: NodeId) -> CompactLabel {
        let levels = (1..self.k)
            .map(|l| {
                let s = self.pivots[l as usize][w];
                LevelLabel {
                    pivot: s,
                    dist: self.level_est(l - 1, w, s).expect("the pivot is in the table"),
                    tree: self.trees[l as usize][&s].labels[&w],
                }
            })
            .collect();
        CompactLabel { id: w, levels }
    }

    pub fn label(&self, w: NodeId) -> &CompactLabel {
        &self.labels[w]
    }
}
