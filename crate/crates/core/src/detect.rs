//! Unweighted `(S, h, sigma)`-detection: every node learns the `sigma` smallest
//! `(hop distance, source)` pairs among sources within `h` hops.
//!
//! Each node keeps its current top-`sigma` list and, once per round, broadcasts
//! the smallest entry it has not announced yet. A node stops sending after
//! `sigma (sigma + 1) / 2` broadcasts. With edge lengths, an edge of length `l`
//! behaves like a path of `l` unit edges.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::engine::{self, EngineConfig, Incoming, Message, NodeCtx, NodeProgram, Outgoing, RunStats};
use crate::error::EngineError;
use crate::graph::{NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DetectEntry {
    pub dist: u64,
    pub src: NodeId,
    /// Neighbor the entry was learned from; `None` for the node itself.
    pub via: Option<NodeId>,
    pub flags: u8,
}

/// Sorted ascending by `(dist, src)`.
pub type SourceList = Vec<DetectEntry>;

#[derive(Debug, Clone)]
pub struct DetectParams {
    pub sources: Vec<NodeId>,
    pub h: u64,
    pub sigma: usize,
    pub msg_cap: u64,
    /// Flag byte announced with each source, indexed like `sources`.
    pub flags: Option<Vec<u8>>,
}

impl DetectParams {
    pub fn new(sources: Vec<NodeId>, h: u64, sigma: usize) -> Self {
        DetectParams { sources, h, sigma, msg_cap: default_msg_cap(sigma), flags: None }
    }

    pub fn with_flags(mut self, flags: Vec<u8>) -> Self {
        assert_eq!(flags.len(), self.sources.len());
        self.flags = Some(flags);
        self
    }
}

pub fn default_msg_cap(sigma: usize) -> u64 {
    let s = sigma as u64;
    s * (s + 1) / 2
}

#[derive(Debug, Clone, Default)]
pub struct DetectState {
    /// Indexed by source id.
    best: Vec<Option<(u64, Option<NodeId>, u8)>>,
    top: BTreeSet<(u64, NodeId)>,
    unsent: BTreeSet<(u64, NodeId)>,
    sent: u64,
}

impl DetectState {
    /// Current tentative list as `(dist, src)` pairs.
    pub fn current(&self) -> impl Iterator<Item = (u64, NodeId)> + '_ {
        self.top.iter().copied()
    }
}

struct DetectProgram<'a> {
    params: &'a DetectParams,
    /// Indexed by node id; `None` for non-sources.
    source_flags: Vec<Option<u8>>,
}

impl DetectProgram<'_> {
    fn offer(&self, st: &mut DetectState, d: u64, src: NodeId, via: Option<NodeId>, flags: u8) {
        if d > self.params.h {
            return;
        }
        if let Some((old, _, _)) = st.best[src] {
            if old <= d {
                return;
            }
            st.top.remove(&(old, src));
            st.unsent.remove(&(old, src));
        } else if st.top.len() >= self.params.sigma {
            match st.top.last() {
                Some(&last) if (d, src) < last => {
                    st.top.remove(&last);
                    st.unsent.remove(&last);
                    st.best[last.1] = None;
                }
                _ => return,
            }
        }
        st.best[src] = Some((d, via, flags));
        st.top.insert((d, src));
        if d < self.params.h {
            st.unsent.insert((d, src));
        }
    }
}

impl NodeProgram for DetectProgram<'_> {
    type State = DetectState;
    type Output = SourceList;

    fn init(&self, ctx: &NodeCtx) -> DetectState {
        let mut st = DetectState { best: vec![None; ctx.n], ..Default::default() };
        if let Some(f) = self.source_flags[ctx.id] {
            if self.params.sigma > 0 {
                self.offer(&mut st, 0, ctx.id, None, f);
            }
        }
        st
    }

    fn on_round(
        &self,
        ctx: &NodeCtx,
        st: &mut DetectState,
        _round: u64,
        inbox: &[Incoming],
        out: &mut Vec<Outgoing>,
    ) {
        for inc in inbox {
            let d = inc.msg.dist + ctx.edge_len(inc.edge);
            self.offer(st, d, inc.msg.id as NodeId, Some(inc.from), inc.msg.flags);
        }
        if st.sent < self.params.msg_cap {
            if let Some((d, src)) = st.unsent.pop_first() {
                st.sent += 1;
                let flags = st.best[src].map_or(0, |b| b.2);
                out.push(Outgoing::Broadcast(Message::new(d, src, flags)));
            }
        }
    }

    fn expires(&self, msg: &Message, len: u64) -> bool {
        msg.dist + len > self.params.h
    }

    fn is_done(&self, _: &NodeCtx, st: &DetectState) -> bool {
        st.unsent.is_empty() || st.sent >= self.params.msg_cap
    }

    fn output(&self, _: &NodeCtx, st: DetectState) -> SourceList {
        st.top
            .iter()
            .map(|&(dist, src)| {
                let (_, via, flags) = st.best[src].expect("listed sources have an entry");
                DetectEntry { dist, src, via, flags }
            })
            .collect()
    }
}

fn program(params: &DetectParams, n: usize) -> DetectProgram<'_> {
    let mut source_flags = vec![None; n];
    for (i, &s) in params.sources.iter().enumerate() {
        source_flags[s] = Some(params.flags.as_ref().map_or(0, |f| f[i]));
    }
    DetectProgram { params, source_flags }
}

pub fn unweighted_detect(
    topo: &Topology,
    params: &DetectParams,
    cfg: EngineConfig,
) -> Result<(Vec<SourceList>, RunStats), EngineError> {
    detect_with_lengths(topo, None, params, cfg)
}

pub fn detect_with_lengths(
    topo: &Topology,
    lengths: Option<&[u64]>,
    params: &DetectParams,
    cfg: EngineConfig,
) -> Result<(Vec<SourceList>, RunStats), EngineError> {
    engine::run(topo, lengths, &program(params, topo.n()), cfg)
}

/// As `detect_with_lengths`, passing every node's tentative state to
/// `observe(round, states)` after each round.
pub fn detect_observed<F>(
    topo: &Topology,
    lengths: Option<&[u64]>,
    params: &DetectParams,
    cfg: EngineConfig,
    observe: F,
) -> Result<(Vec<SourceList>, RunStats), EngineError>
where
    F: FnMut(u64, &[DetectState]),
{
    engine::run_with_observer(topo, lengths, &program(params, topo.n()), cfg, observe)
}

/// Drops `via` and `flags`.
pub fn pairs(list: &[DetectEntry]) -> Vec<(u64, NodeId)> {
    list.iter().map(|e| (e.dist, e.src)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{connected_density, gen_random_graph, path_graph, star_graph};
    use crate::oracle::subdivided_detection_oracle;
    use proptest::prelude::*;

    fn run_detect(topo: &Topology, lengths: Option<&[u64]>, p: &DetectParams) -> (Vec<SourceList>, RunStats) {
        detect_with_lengths(topo, lengths, p, EngineConfig::default()).unwrap()
    }

    #[test]
    fn p3_both_ends() {
        let g = path_graph(&[1, 1]);
        let (l, st) = run_detect(g.topology(), None, &DetectParams::new(vec![0, 2], 2, 2));
        assert_eq!(pairs(&l[1]), vec![(1, 0), (1, 2)]);
        assert_eq!(l[1][0].via, Some(0));
        assert!(st.rounds_used <= 4);
    }

    #[test]
    fn self_detection() {
        let g = path_graph(&[1, 1]);
        let (l, st) = run_detect(g.topology(), None, &DetectParams::new(vec![1], 2, 1));
        assert_eq!(pairs(&l[1]), vec![(0, 1)]);
        assert_eq!(l[1][0].via, None);
        assert!(st.rounds_used <= 3);
    }

    #[test]
    fn star_ties_by_id() {
        let g = star_graph(4);
        let (l, _) = run_detect(g.topology(), None, &DetectParams::new(vec![4, 3, 2, 1], 1, 2));
        assert_eq!(pairs(&l[0]), vec![(1, 1), (1, 2)]);
    }

    #[test]
    fn lengths_subdivide_edges() {
        let g = path_graph(&[1, 1]);
        let lengths = [2, 3];
        let (l, _) = run_detect(g.topology(), Some(&lengths), &DetectParams::new(vec![2], 5, 1));
        assert_eq!(pairs(&l[0]), vec![(5, 2)]);
        let (l, _) = run_detect(g.topology(), Some(&lengths), &DetectParams::new(vec![2], 4, 1));
        assert!(l[0].is_empty());
    }

    #[test]
    fn unit_lengths_match_unweighted() {
        let g = gen_random_graph(40, 0.1, 1, 5).unwrap();
        let ones = vec![1; g.m()];
        let p = DetectParams::new((0..40).step_by(4).collect(), 5, 4);
        assert_eq!(run_detect(g.topology(), None, &p), run_detect(g.topology(), Some(&ones), &p));
    }

    #[test]
    fn flags_travel_with_sources() {
        let g = path_graph(&[1, 1, 1]);
        let p = DetectParams::new(vec![0, 3], 3, 2).with_flags(vec![1, 0]);
        let (l, _) = run_detect(g.topology(), None, &p);
        for list in &l {
            for e in list {
                assert_eq!(e.flags, u8::from(e.src == 0));
            }
        }
    }

    #[test]
    fn prefix_entries_stabilize() {
        let g = gen_random_graph(60, 0.08, 1, 21).unwrap();
        let p = DetectParams::new((0..60).filter(|v| v % 3 == 0).collect(), 6, 5);
        let mut frozen: Vec<Vec<Option<(u64, NodeId)>>> = vec![vec![None; 5]; 60];
        let mut violations = 0;
        detect_observed(g.topology(), None, &p, EngineConfig::default(), |round, states| {
            for (v, st) in states.iter().enumerate() {
                let cur: Vec<_> = st.current().collect();
                for (i, slot) in frozen[v].iter_mut().enumerate() {
                    match *slot {
                        Some(e) => violations += usize::from(cur.get(i) != Some(&e)),
                        None => {
                            if let Some(&(d, s)) = cur.get(i) {
                                if d + (i as u64) < round {
                                    *slot = Some((d, s));
                                }
                            }
                        }
                    }
                }
            }
        })
        .unwrap();
        assert_eq!(violations, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matches_oracle(n in 2usize..64, p in 0.05f64..0.5, seed in 0u64..100_000,
                          h in 1u64..12, sigma in 1usize..10, every in 1usize..5) {
            let g = gen_random_graph(n, p.max(connected_density(n, 2.0)), 1, seed).unwrap();
            let sources: Vec<_> = (0..n).filter(|v| v % every == 0).collect();
            let params = DetectParams::new(sources.clone(), h, sigma);
            let (l, st) = run_detect(g.topology(), None, &params);
            let oracle = subdivided_detection_oracle(g.topology(), None, &sources, h, sigma);
            for v in 0..n {
                prop_assert_eq!(pairs(&l[v]), oracle[v].clone());
            }
            prop_assert!(st.rounds_used <= h + sigma as u64);
            prop_assert!(st.max_broadcasts() <= default_msg_cap(sigma));
        }

        #[test]
        fn matches_subdivided_oracle(n in 2usize..48, seed in 0u64..100_000,
                                     h in 1u64..30, sigma in 1usize..8) {
            let g = gen_random_graph(n, connected_density(n, 2.0), 3, seed).unwrap();
            let lengths: Vec<u64> = g.weights().iter().map(|&w| 1 + w % 5).collect();
            let sources: Vec<_> = (0..n).step_by(2).collect();
            let params = DetectParams::new(sources.clone(), h, sigma);
            let (l, st) = run_detect(g.topology(), Some(&lengths), &params);
            let oracle = subdivided_detection_oracle(g.topology(), Some(&lengths), &sources, h, sigma);
            for v in 0..n {
                prop_assert_eq!(pairs(&l[v]), oracle[v].clone());
                for e in &l[v] {
                    // `via` is a neighbor one edge closer to the source
                    if let Some(u) = e.via {
                        let edge = g.topology().edge_between(v, u).unwrap();
                        let du = l[u].iter().find(|x| x.src == e.src).map(|x| x.dist);
                        prop_assert!(du.is_none_or(|du| du + lengths[edge] <= e.dist));
                    }
                }
            }
            prop_assert!(st.rounds_used <= h + sigma as u64);
            prop_assert!(st.max_broadcasts() <= default_msg_cap(sigma));
        }
    }
}
