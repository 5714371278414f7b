//! Synchronous round executor with a one-message-per-edge-direction bandwidth
//! limit and optional integer edge delays.
//!
//! Round `r` runs in two phases: every awake node processes the messages
//! delivered to it at the end of round `r - 1`, then emits sends. A message sent
//! in round `r` over an edge of length `l` is delivered at the end of round
//! `r + l - 1` and is processed in round `r + l`.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::EngineError;
use crate::graph::{EdgeId, NodeId, Topology};

/// One `(distance, id, flags)` tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Message {
    pub dist: u64,
    pub id: u32,
    pub flags: u8,
}

impl Message {
    pub fn new(dist: u64, id: NodeId, flags: u8) -> Self {
        Message { dist, id: id as u32, flags }
    }

    /// Bits needed for the payload: distance, id and the flag byte.
    pub fn bits(&self) -> u32 {
        let width = |v: u64| 64 - v.leading_zeros().min(63);
        width(self.dist) + width(self.id as u64) + 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incoming {
    pub from: NodeId,
    pub edge: EdgeId,
    pub msg: Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outgoing {
    Broadcast(Message),
    To(NodeId, Message),
}

/// What a node may see about itself: its id, its incident edges and `n`.
#[derive(Debug, Clone, Copy)]
pub struct NodeCtx<'a> {
    pub id: NodeId,
    pub n: usize,
    topo: &'a Topology,
    lengths: Option<&'a [u64]>,
}

impl<'a> NodeCtx<'a> {
    pub fn neighbors(&self) -> &'a [crate::graph::Adj] {
        self.topo.neighbors(self.id)
    }

    /// Delay of an incident edge (1 without lengths).
    pub fn edge_len(&self, edge: EdgeId) -> u64 {
        self.lengths.map_or(1, |l| l[edge])
    }
}

pub trait NodeProgram: Sync {
    type State: Send;
    type Output;

    fn init(&self, ctx: &NodeCtx) -> Self::State;

    fn on_round(
        &self,
        ctx: &NodeCtx,
        state: &mut Self::State,
        round: u64,
        inbox: &[Incoming],
        out: &mut Vec<Outgoing>,
    );

    fn is_done(&self, ctx: &NodeCtx, state: &Self::State) -> bool;

    fn output(&self, ctx: &NodeCtx, state: Self::State) -> Self::Output;

    /// Whether a copy of `msg` sent over an edge of length `len` is useless to
    /// the receiver. On a subdivided edge such a copy dies inside the path, so
    /// it is neither delivered nor counted.
    fn expires(&self, _msg: &Message, _len: u64) -> bool {
        false
    }
}

/// Default bandwidth constant `c_B` in `B = ceil(c_B * log2 n)`.
pub const DEFAULT_C_B: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_rounds: u64,
    pub c_b: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_rounds: 10_000_000, c_b: DEFAULT_C_B }
    }
}

impl EngineConfig {
    pub fn with_max_rounds(max_rounds: u64) -> Self {
        EngineConfig { max_rounds, ..Default::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub rounds_used: u64,
    pub broadcasts_per_node: Vec<u64>,
    pub messages_per_edge_total: u64,
    pub global_phase_cost: u64,
    pub max_message_bits: u32,
    pub bandwidth_bits: u32,
}

pub fn bandwidth_bits(n: usize, c_b: u32) -> u32 {
    (c_b as f64 * (n.max(2) as f64).log2()).ceil() as u32
}

impl RunStats {
    pub fn empty(n: usize, c_b: u32) -> Self {
        RunStats {
            broadcasts_per_node: vec![0; n],
            bandwidth_bits: bandwidth_bits(n, c_b),
            ..Default::default()
        }
    }

    /// Simulated plus accounted rounds.
    pub fn total_rounds(&self) -> u64 {
        self.rounds_used + self.global_phase_cost
    }

    pub fn max_broadcasts(&self) -> u64 {
        self.broadcasts_per_node.iter().copied().max().unwrap_or(0)
    }

    /// Sequential composition: `other` ran after `self` on the same nodes.
    pub fn absorb(&mut self, other: &RunStats) {
        let ids: Vec<NodeId> = (0..other.broadcasts_per_node.len()).collect();
        self.absorb_mapped(other, &ids);
    }

    /// As `absorb`, for a run whose node `i` is node `ids[i]` here.
    pub fn absorb_mapped(&mut self, other: &RunStats, ids: &[NodeId]) {
        self.rounds_used += other.rounds_used;
        self.messages_per_edge_total += other.messages_per_edge_total;
        self.global_phase_cost += other.global_phase_cost;
        self.max_message_bits = self.max_message_bits.max(other.max_message_bits);
        for (i, &b) in other.broadcasts_per_node.iter().enumerate() {
            let v = ids[i];
            if v >= self.broadcasts_per_node.len() {
                self.broadcasts_per_node.resize(v + 1, 0);
            }
            self.broadcasts_per_node[v] += b;
        }
    }
}

/// Accounts a phase pipelined over a BFS tree of depth `bfs_depth` that
/// delivers every message to every node. Returns the cost `M + 2 * bfs_depth`.
pub fn run_global_phase<T>(stats: &mut RunStats, messages: &[T], bfs_depth: u64) -> u64 {
    let cost = messages.len() as u64 + 2 * bfs_depth;
    stats.global_phase_cost += cost;
    cost
}

struct Delivery {
    to: NodeId,
    inc: Incoming,
}

/// Deliveries by round: a ring of buckets for the near future, a map beyond.
#[derive(Default)]
struct InFlight {
    /// `ring[i]` holds deliveries at the end of round `base + i`.
    base: u64,
    ring: VecDeque<Vec<Delivery>>,
    in_ring: usize,
    far: BTreeMap<u64, Vec<Delivery>>,
    spare: Vec<Vec<Delivery>>,
    scratch: Vec<Delivery>,
}

const RING_SPAN: u64 = 4096;

impl InFlight {
    fn push(&mut self, round: u64, arrival: u64, d: Delivery) {
        if self.ring.is_empty() {
            self.base = round;
        }
        let off = arrival - self.base;
        if off >= RING_SPAN {
            self.far.entry(arrival).or_default().push(d);
            return;
        }
        while self.ring.len() as u64 <= off {
            self.ring.push_back(self.spare.pop().unwrap_or_default());
        }
        self.ring[off as usize].push(d);
        self.in_ring += 1;
    }

    fn first_round(&self) -> Option<u64> {
        let near = self.ring.iter().position(|b| !b.is_empty()).map(|i| self.base + i as u64);
        let far = self.far.keys().next().copied();
        match (near, far) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Deliveries at the end of `round`; call `advance(round)` afterwards.
    fn take(&mut self, round: u64) -> &mut Vec<Delivery> {
        self.scratch.clear();
        // skipped idle rounds left only empty buckets behind
        self.advance(round - 1);
        if !self.ring.is_empty() && self.base == round {
            std::mem::swap(&mut self.scratch, &mut self.ring[0]);
            self.in_ring -= self.scratch.len();
        }
        if let Some(mut more) = self.far.remove(&round) {
            self.scratch.append(&mut more);
        }
        &mut self.scratch
    }

    fn advance(&mut self, round: u64) {
        while !self.ring.is_empty() && self.base <= round {
            let b = self.ring.pop_front().unwrap();
            debug_assert!(b.is_empty());
            self.spare.push(b);
            self.base += 1;
        }
        if self.in_ring == 0 {
            self.spare.extend(self.ring.drain(..));
        }
    }
}

pub fn run<P: NodeProgram>(
    topo: &Topology,
    lengths: Option<&[u64]>,
    prog: &P,
    cfg: EngineConfig,
) -> Result<(Vec<P::Output>, RunStats), EngineError> {
    run_with_observer(topo, lengths, prog, cfg, |_, _| {})
}

/// As `run`, calling `observe(round, states)` after every executed round.
pub fn run_with_observer<P, F>(
    topo: &Topology,
    lengths: Option<&[u64]>,
    prog: &P,
    cfg: EngineConfig,
    mut observe: F,
) -> Result<(Vec<P::Output>, RunStats), EngineError>
where
    P: NodeProgram,
    F: FnMut(u64, &[P::State]),
{
    let n = topo.n();
    if let Some(l) = lengths {
        assert_eq!(l.len(), topo.m(), "one length per edge");
        assert!(l.iter().all(|&x| x >= 1), "edge lengths must be positive");
    }
    let ctx = |id| NodeCtx { id, n, topo, lengths };
    let mut stats = RunStats::empty(n, cfg.c_b);
    let mut states: Vec<P::State> = (0..n).map(|v| prog.init(&ctx(v))).collect();
    // Ascending ids of nodes that run in the next round regardless of mail.
    let mut awake: Vec<NodeId> = (0..n).filter(|&v| !prog.is_done(&ctx(v), &states[v])).collect();
    let mut running: Vec<NodeId> = Vec::new();
    // In-flight messages keyed by the round at whose end they are delivered.
    let mut in_flight = InFlight::default();
    let mut inbox: Vec<Vec<Incoming>> = vec![Vec::new(); n];
    let mut has_mail: Vec<NodeId> = Vec::new();
    let mut sends = Vec::new();
    let mut used: Vec<NodeId> = Vec::new();
    let mut round = 0u64;

    loop {
        if awake.is_empty() && has_mail.is_empty() {
            match in_flight.first_round() {
                None => break,
                // Nothing happens until the next delivery is processed.
                Some(r) => round = round.max(r - 1),
            }
        }
        round += 1;
        // Round `max_rounds + 1` may only absorb the last deliveries: any send
        // in it would arrive too late.
        if round > cfg.max_rounds + 1 {
            return Err(EngineError::RoundLimitExceeded { max_rounds: cfg.max_rounds });
        }
        running.clear();
        running.extend(awake.drain(..).chain(has_mail.drain(..)));
        running.sort_unstable();
        running.dedup();
        for &v in &running {
            let c = ctx(v);
            sends.clear();
            prog.on_round(&c, &mut states[v], round, &inbox[v], &mut sends);
            inbox[v].clear();
            if !prog.is_done(&c, &states[v]) {
                awake.push(v);
            }
            if sends.is_empty() {
                continue;
            }
            used.clear();
            let broadcast = sends.iter().any(|s| matches!(s, Outgoing::Broadcast(_)));
            if broadcast && sends.len() > 1 {
                return Err(EngineError::BandwidthViolation { node: v, round });
            }
            for s in &sends {
                match *s {
                    Outgoing::Broadcast(msg) => {
                        stats.broadcasts_per_node[v] += 1;
                        for a in topo.neighbors(v) {
                            if lengths.is_some() && prog.expires(&msg, c.edge_len(a.edge)) {
                                continue;
                            }
                            emit(&mut in_flight, &mut stats, &c, round, cfg, a.to, a.edge, msg)?;
                        }
                    }
                    Outgoing::To(to, msg) => {
                        if used.contains(&to) {
                            return Err(EngineError::BandwidthViolation { node: v, round });
                        }
                        used.push(to);
                        let edge = topo
                            .edge_between(v, to)
                            .ok_or(EngineError::NotANeighbor { node: v, target: to })?;
                        emit(&mut in_flight, &mut stats, &c, round, cfg, to, edge, msg)?;
                    }
                }
            }
        }
        let batch = in_flight.take(round);
        if !batch.is_empty() {
            stats.rounds_used = round;
            for d in batch.drain(..) {
                if inbox[d.to].is_empty() {
                    has_mail.push(d.to);
                }
                inbox[d.to].push(d.inc);
            }
        }
        in_flight.advance(round);
        observe(round, &states);
    }

    let outputs = states
        .into_iter()
        .enumerate()
        .map(|(v, s)| prog.output(&ctx(v), s))
        .collect();
    Ok((outputs, stats))
}

#[allow(clippy::too_many_arguments)]
fn emit(
    in_flight: &mut InFlight,
    stats: &mut RunStats,
    ctx: &NodeCtx,
    round: u64,
    cfg: EngineConfig,
    to: NodeId,
    edge: EdgeId,
    msg: Message,
) -> Result<(), EngineError> {
    let arrival = round + ctx.edge_len(edge) - 1;
    if arrival > cfg.max_rounds {
        return Err(EngineError::RoundLimitExceeded { max_rounds: cfg.max_rounds });
    }
    stats.messages_per_edge_total += 1;
    stats.max_message_bits = stats.max_message_bits.max(msg.bits());
    in_flight.push(round, arrival, Delivery { to, inc: Incoming { from: ctx.id, edge, msg } });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::path_graph;

    struct Trivial;
    impl NodeProgram for Trivial {
        type State = ();
        type Output = ();
        fn init(&self, _: &NodeCtx) {}
        fn on_round(&self, _: &NodeCtx, _: &mut (), _: u64, _: &[Incoming], _: &mut Vec<Outgoing>) {}
        fn is_done(&self, _: &NodeCtx, _: &()) -> bool {
            true
        }
        fn output(&self, _: &NodeCtx, _: ()) {}
    }

    /// Node 0 floods a token; every node records the round it first heard it
    /// and forwards it to every neighbor except the one it came from.
    struct Flood;
    impl NodeProgram for Flood {
        type State = (Option<u64>, Option<NodeId>, bool);
        type Output = Option<u64>;
        fn init(&self, ctx: &NodeCtx) -> Self::State {
            (if ctx.id == 0 { Some(0) } else { None }, None, ctx.id != 0)
        }
        fn on_round(
            &self,
            ctx: &NodeCtx,
            st: &mut Self::State,
            round: u64,
            inbox: &[Incoming],
            out: &mut Vec<Outgoing>,
        ) {
            if st.0.is_none() && !inbox.is_empty() {
                *st = (Some(round - 1), Some(inbox[0].from), false);
            }
            if st.0.is_some() && !st.2 {
                let msg = Message::new(0, 0, 0);
                match st.1 {
                    None => out.push(Outgoing::Broadcast(msg)),
                    Some(p) => out.extend(
                        ctx.neighbors().iter().filter(|a| a.to != p).map(|a| Outgoing::To(a.to, msg)),
                    ),
                }
                st.2 = true;
            }
        }
        fn is_done(&self, _: &NodeCtx, st: &Self::State) -> bool {
            st.2
        }
        fn output(&self, _: &NodeCtx, st: Self::State) -> Option<u64> {
            st.0
        }
    }

    struct DoubleSend;
    impl NodeProgram for DoubleSend {
        type State = bool;
        type Output = ();
        fn init(&self, _: &NodeCtx) -> bool {
            false
        }
        fn on_round(&self, ctx: &NodeCtx, st: &mut bool, _: u64, _: &[Incoming], out: &mut Vec<Outgoing>) {
            if ctx.id == 0 {
                let to = ctx.neighbors()[0].to;
                out.push(Outgoing::To(to, Message::new(1, 0, 0)));
                out.push(Outgoing::To(to, Message::new(2, 0, 0)));
            }
            *st = true;
        }
        fn is_done(&self, _: &NodeCtx, st: &bool) -> bool {
            *st
        }
        fn output(&self, _: &NodeCtx, _: bool) {}
    }

    #[test]
    fn trivial_program_uses_no_rounds() {
        let g = path_graph(&[1, 1]);
        let (_, st) = run(g.topology(), None, &Trivial, EngineConfig::default()).unwrap();
        assert_eq!(st.rounds_used, 0);
    }

    #[test]
    fn flood_on_p3_takes_two_rounds() {
        let g = path_graph(&[1, 1]);
        let (out, st) = run(g.topology(), None, &Flood, EngineConfig::default()).unwrap();
        assert_eq!(st.rounds_used, 2);
        assert_eq!(out, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(st.broadcasts_per_node, vec![1, 0, 0]);
        assert_eq!(st.messages_per_edge_total, 2);
    }

    #[test]
    fn flood_with_edge_delays() {
        let g = path_graph(&[1, 1]);
        let lengths = [2, 3];
        let (out, st) = run(g.topology(), Some(&lengths), &Flood, EngineConfig::default()).unwrap();
        assert_eq!(out, vec![Some(0), Some(2), Some(5)]);
        assert_eq!(st.rounds_used, 5);
    }

    #[test]
    fn double_send_is_a_bandwidth_violation() {
        let g = path_graph(&[1]);
        let err = run(g.topology(), None, &DoubleSend, EngineConfig::default()).unwrap_err();
        assert_eq!(err, EngineError::BandwidthViolation { node: 0, round: 1 });
    }

    #[test]
    fn round_limit() {
        let g = path_graph(&[1, 1, 1]);
        let err = run(g.topology(), None, &Flood, EngineConfig::with_max_rounds(2)).unwrap_err();
        assert_eq!(err, EngineError::RoundLimitExceeded { max_rounds: 2 });
        assert!(run(g.topology(), None, &Flood, EngineConfig::with_max_rounds(3)).is_ok());
    }

    #[test]
    fn global_phase_cost() {
        let mut st = RunStats::empty(4, DEFAULT_C_B);
        assert_eq!(run_global_phase::<u8>(&mut st, &[], 3), 6);
        assert_eq!(run_global_phase(&mut st, &[0u8; 10], 3), 16);
        assert_eq!(st.global_phase_cost, 22);
        assert_eq!(st.total_rounds(), 22);
    }

    #[test]
    fn absorb_adds_counters() {
        let mut a = RunStats::empty(3, DEFAULT_C_B);
        a.rounds_used = 4;
        a.broadcasts_per_node = vec![1, 2, 3];
        let mut b = RunStats::empty(2, DEFAULT_C_B);
        b.rounds_used = 5;
        b.broadcasts_per_node = vec![7, 9];
        a.absorb_mapped(&b, &[2, 0]);
        assert_eq!(a.rounds_used, 9);
        assert_eq!(a.broadcasts_per_node, vec![10, 2, 10]);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let g = crate::graph::gen_random_graph(40, 0.1, 3, 11).unwrap();
        let a = run(g.topology(), Some(g.weights()), &Flood, EngineConfig::default()).unwrap();
        let b = run(g.topology(), Some(g.weights()), &Flood, EngineConfig::default()).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let d = crate::oracle::length_dijkstra(g.topology(), Some(g.weights()), 0);
        let heard: Vec<u64> = a.0.iter().map(|x| x.unwrap()).collect();
        assert_eq!(heard, d);
    }
}
