//! `(1 + eps)`-approximate `(S, h, sigma)`-estimation.
//!
//! Level `i` rounds every weight up to a multiple of `b(i) = (1 + eps)^i` and
//! runs unweighted detection with hop budget `h'` on the graph whose edge `e`
//! has length `ceil(W(e) / b(i))`. A node's estimate for `s` is the smallest
//! `b(i) * Hd_i(v, s)` over the levels whose list contains `s`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::detect::{detect_with_lengths, DetectParams, SourceList};
use crate::dist::{compute_imax, hop_budget, Dist, Eps, LevelScale};
use crate::engine::{run_global_phase, EngineConfig, RunStats};
use crate::error::{EngineError, RoutingError};
use crate::graph::{NodeId, Topology, WeightedGraph};

#[derive(Debug, Clone)]
pub struct PdeParams {
    pub sources: Vec<NodeId>,
    pub h: u64,
    pub sigma: usize,
    pub eps: Eps,
    /// Flag byte per source, indexed like `sources`.
    pub flags: Option<Vec<u8>>,
    /// Keep every level's detection lists in the result.
    pub keep_levels: bool,
}

impl PdeParams {
    pub fn new(sources: Vec<NodeId>, h: u64, sigma: usize, eps: Eps) -> Self {
        PdeParams { sources, h, sigma, eps, flags: None, keep_levels: false }
    }
}

/// The level and hop count witnessing an estimate, and the neighbor the
/// witnessing announcement came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub level: u32,
    pub hops: u64,
    pub via: Option<NodeId>,
    pub flags: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PdeEntry {
    pub src: NodeId,
    pub est: Dist,
    pub level: u32,
    pub hops: u64,
    pub via: Option<NodeId>,
    pub flags: u8,
}

#[derive(Debug, Clone)]
pub struct PdeResult {
    pub scale: LevelScale,
    pub h_prime: u64,
    pub sigma: usize,
    /// `L_v`: at most `sigma` entries ascending by `(est, src)`.
    pub lists: Vec<Vec<PdeEntry>>,
    /// Per node, the best witness over all levels for every source seen.
    pub tables: Vec<BTreeMap<NodeId, Witness>>,
    /// `levels[i][v]` is `L_{v,i}` when requested.
    pub levels: Option<Vec<Vec<SourceList>>>,
    pub stats: RunStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct DumpLine {
    pub v: NodeId,
    pub s: NodeId,
    pub wdtilde_num: String,
    pub wdtilde_den: String,
    pub level: u32,
    pub next_hop: Option<NodeId>,
}

impl PdeResult {
    pub fn n(&self) -> usize {
        self.lists.len()
    }

    pub fn i_max(&self) -> u32 {
        self.scale.i_max()
    }

    pub fn eps(&self) -> Eps {
        self.scale.eps()
    }

    pub fn value(&self, w: &Witness) -> Dist {
        self.scale.value(w.hops, w.level)
    }

    /// `Wd~(v, s)` if `s` was detected at `v` on some level.
    pub fn estimate(&self, v: NodeId, s: NodeId) -> Option<Dist> {
        self.tables[v].get(&s).map(|w| self.value(w))
    }

    pub fn witness(&self, v: NodeId, s: NodeId) -> Option<&Witness> {
        self.tables[v].get(&s)
    }

    /// Compares the estimates of two witnesses exactly.
    pub fn cmp_witness(&self, a: &Witness, b: &Witness) -> Ordering {
        self.scale.cmp_scaled((a.hops, a.level), (b.hops, b.level))
    }

    /// Next hop from `v` towards source `s`; `None` when `v == s`.
    pub fn next_hop(&self, v: NodeId, s: NodeId) -> Result<Option<NodeId>, RoutingError> {
        if v == s {
            return Ok(None);
        }
        match self.tables[v].get(&s) {
            Some(w) => Ok(w.via),
            None => Err(RoutingError::MissingEntry { node: v, target: s }),
        }
    }

    /// Next-hop table of every node: source to neighbor.
    pub fn next_hop_tables(&self) -> Vec<BTreeMap<NodeId, NodeId>> {
        self.tables
            .iter()
            .map(|t| t.iter().filter_map(|(&s, w)| w.via.map(|u| (s, u))).collect())
            .collect()
    }

    /// Follows next hops from `v` to `s`, returning the path and its weight.
    pub fn walk(
        &self,
        weight: impl Fn(NodeId, NodeId) -> Dist,
        v: NodeId,
        s: NodeId,
    ) -> Result<(Vec<NodeId>, Dist), RoutingError> {
        let limit = (self.i_max() as u64 + 1) * self.h_prime + 1;
        let mut path = vec![v];
        let mut total = Dist::zero();
        let mut u = v;
        while let Some(x) = self.next_hop(u, s)? {
            total = total + weight(u, x);
            path.push(x);
            u = x;
            if path.len() as u64 > limit + 1 {
                return Err(RoutingError::RouteLoop { from: v, to: s, hops: limit as usize });
            }
        }
        Ok((path, total))
    }

    pub fn dump_lines(&self) -> Vec<DumpLine> {
        let mut out = Vec::new();
        for (v, list) in self.lists.iter().enumerate() {
            for e in list {
                out.push(DumpLine {
                    v,
                    s: e.src,
                    wdtilde_num: e.est.numer().to_string(),
                    wdtilde_den: e.est.denom().to_string(),
                    level: e.level,
                    next_hop: e.via,
                });
            }
        }
        out
    }
}

pub fn pde_estimate(
    g: &WeightedGraph,
    params: &PdeParams,
    cfg: EngineConfig,
) -> Result<PdeResult, EngineError> {
    let weights: Vec<Dist> = g.weights().iter().map(|&w| Dist::from_int(w)).collect();
    pde_estimate_on(g.topology(), &weights, params, cfg)
}

/// PDE on a topology with exact rational weights, all at least 1.
pub fn pde_estimate_on(
    topo: &Topology,
    weights: &[Dist],
    params: &PdeParams,
    cfg: EngineConfig,
) -> Result<PdeResult, EngineError> {
    let n = topo.n();
    let w_max = weights.iter().max().cloned().unwrap_or_else(|| Dist::from_int(1));
    let i_max = compute_imax(&w_max, params.eps);
    let scale = LevelScale::new(params.eps, i_max);
    let h_prime = hop_budget(params.h, params.eps);
    let mut stats = RunStats::empty(n, cfg.c_b);
    // Learning w_max is a convergecast and broadcast over a BFS tree.
    run_global_phase::<()>(&mut stats, &[], topo.hop_eccentricity(0) as u64);

    let mut detect = DetectParams::new(params.sources.clone(), h_prime, params.sigma);
    detect.flags = params.flags.clone();
    let mut tables: Vec<BTreeMap<NodeId, Witness>> = vec![BTreeMap::new(); n];
    let mut levels = params.keep_levels.then(Vec::new);
    for i in 0..=i_max {
        let lengths: Vec<u64> = weights.iter().map(|w| scale.rounded_length(w, i)).collect();
        let (lists, st) = detect_with_lengths(topo, Some(&lengths), &detect, cfg)?;
        stats.absorb(&st);
        for (v, list) in lists.iter().enumerate() {
            for e in list {
                let cand = Witness { level: i, hops: e.dist, via: e.via, flags: e.flags };
                tables[v]
                    .entry(e.src)
                    .and_modify(|w| {
                        if scale.cmp_scaled((cand.hops, i), (w.hops, w.level)) == Ordering::Less {
                            *w = cand;
                        }
                    })
                    .or_insert(cand);
            }
        }
        if let Some(l) = levels.as_mut() {
            l.push(lists);
        }
    }

    let lists = tables
        .iter()
        .map(|t| {
            let mut all: Vec<(NodeId, &Witness)> = t.iter().map(|(&s, w)| (s, w)).collect();
            all.sort_by(|a, b| {
                scale
                    .cmp_scaled((a.1.hops, a.1.level), (b.1.hops, b.1.level))
                    .then(a.0.cmp(&b.0))
            });
            all.truncate(params.sigma);
            all.into_iter()
                .map(|(src, w)| PdeEntry {
                    src,
                    est: scale.value(w.hops, w.level),
                    level: w.level,
                    hops: w.hops,
                    via: w.via,
                    flags: w.flags,
                })
                .collect()
        })
        .collect();
    Ok(PdeResult { scale, h_prime, sigma: params.sigma, lists, tables, levels, stats })
}
