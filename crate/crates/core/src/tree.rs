//! BFS trees and interval labels for stateless tree routing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{self, EngineConfig, Incoming, Message, NodeCtx, NodeProgram, Outgoing, RunStats};
use crate::error::{EngineError, RoutingError};
use crate::graph::{NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BfsTree {
    pub root: NodeId,
    pub parent: Vec<Option<NodeId>>,
    pub depth: Vec<u64>,
}

impl BfsTree {
    pub fn max_depth(&self) -> u64 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn as_rooted(&self) -> RootedTree {
        RootedTree {
            root: self.root,
            parent: self.parent.iter().enumerate().filter_map(|(v, p)| p.map(|p| (v, p))).collect(),
        }
    }
}

struct BfsProgram {
    root: NodeId,
}

impl NodeProgram for BfsProgram {
    /// `(parent, depth, announced)`
    type State = (Option<NodeId>, Option<u64>, bool);
    type Output = (Option<NodeId>, u64);

    fn init(&self, ctx: &NodeCtx) -> Self::State {
        if ctx.id == self.root {
            (None, Some(0), false)
        } else {
            (None, None, true)
        }
    }

    fn on_round(
        &self,
        _: &NodeCtx,
        st: &mut Self::State,
        _round: u64,
        inbox: &[Incoming],
        out: &mut Vec<Outgoing>,
    ) {
        if st.1.is_none() {
            if let Some(first) = inbox.iter().min_by_key(|m| m.from) {
                *st = (Some(first.from), Some(first.msg.dist + 1), false);
            }
        }
        if let (Some(d), false) = (st.1, st.2) {
            out.push(Outgoing::Broadcast(Message::new(d, 0, 0)));
            st.2 = true;
        }
    }

    fn is_done(&self, _: &NodeCtx, st: &Self::State) -> bool {
        st.2
    }

    fn output(&self, _: &NodeCtx, st: Self::State) -> Self::Output {
        (st.0, st.1.unwrap_or(u64::MAX))
    }
}

/// Hop-level BFS tree; a node's parent is its smallest-id neighbor one level up.
pub fn build_bfs_tree(
    topo: &Topology,
    root: NodeId,
    cfg: EngineConfig,
) -> Result<(BfsTree, RunStats), EngineError> {
    let (out, stats) = engine::run(topo, None, &BfsProgram { root }, cfg)?;
    let (parent, depth) = out.into_iter().unzip();
    Ok((BfsTree { root, parent, depth }, stats))
}

/// A tree over a subset of the nodes, given by parent pointers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RootedTree {
    pub root: NodeId,
    /// Parent of every non-root member.
    pub parent: BTreeMap<NodeId, NodeId>,
}

impl RootedTree {
    pub fn new(root: NodeId) -> Self {
        RootedTree { root, parent: BTreeMap::new() }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v == self.root || self.parent.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.parent.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// DFS preorder interval: `v` is an ancestor of `w` iff `v.inn <= w.inn <= v.out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeLabel {
    pub inn: u32,
    pub out: u32,
}

impl TreeLabel {
    pub fn contains(&self, other: &TreeLabel) -> bool {
        self.inn <= other.inn && other.inn <= self.out
    }

    /// Bits for the two endpoints when every value is below `n`.
    pub fn bits(n: usize) -> u32 {
        2 * ceil_log2(n)
    }
}

pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Labels of one tree together with the local routing tables: each member's
/// parent and its children's intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeLabeling {
    pub root: NodeId,
    pub labels: BTreeMap<NodeId, TreeLabel>,
    pub parent: BTreeMap<NodeId, NodeId>,
    /// Children ordered by interval.
    pub children: BTreeMap<NodeId, Vec<(TreeLabel, NodeId)>>,
    pub depth: u64,
}

impl TreeLabeling {
    pub fn label(&self, v: NodeId) -> Option<TreeLabel> {
        self.labels.get(&v).copied()
    }

    /// Next tree hop from member `at` towards the member labelled `target`;
    /// `None` once there.
    pub fn next_hop(&self, at: NodeId, target: &TreeLabel) -> Result<Option<NodeId>, RoutingError> {
        let own = self
            .labels
            .get(&at)
            .ok_or(RoutingError::MissingEntry { node: at, target: self.root })?;
        if own.inn == target.inn {
            return Ok(None);
        }
        if own.contains(target) {
            let kids = self.children.get(&at).map(Vec::as_slice).unwrap_or(&[]);
            let i = kids.partition_point(|(l, _)| l.inn <= target.inn);
            return match i.checked_sub(1).map(|i| kids[i]) {
                Some((l, c)) if l.contains(target) => Ok(Some(c)),
                _ => Err(RoutingError::MalformedLabel(format!(
                    "interval [{}, {}] not below node {at}",
                    target.inn, target.out
                ))),
            };
        }
        match self.parent.get(&at) {
            Some(&p) => Ok(Some(p)),
            None => Err(RoutingError::MalformedLabel(format!(
                "interval [{}, {}] outside the tree",
                target.inn, target.out
            ))),
        }
    }

    /// Member sequence from `a` to `b`.
    pub fn route(&self, a: NodeId, b: NodeId) -> Result<Vec<NodeId>, RoutingError> {
        let target = self.label(b).ok_or(RoutingError::MissingEntry { node: a, target: b })?;
        let mut path = vec![a];
        let mut at = a;
        while let Some(x) = self.next_hop(at, &target)? {
            path.push(x);
            at = x;
            if path.len() > 2 * self.labels.len() + 1 {
                return Err(RoutingError::RouteLoop { from: a, to: b, hops: path.len() });
            }
        }
        Ok(path)
    }
}

/// Default tree-labeling round constant `c_T`.
pub const DEFAULT_C_T: u64 = 4;

/// Accounted rounds for labeling a tree of the given depth.
pub fn tree_label_cost(depth: u64, n: usize, c_t: u64) -> u64 {
    c_t * depth.max(1) * u64::from(ceil_log2(n).max(1))
}

/// Interval labels by DFS preorder with children visited in id order.
pub fn label_tree(tree: &RootedTree) -> Result<TreeLabeling, RoutingError> {
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (&v, &p) in &tree.parent {
        if v == tree.root {
            return Err(RoutingError::CycleDetected(v));
        }
        if !tree.contains(p) {
            return Err(RoutingError::MalformedLabel(format!("parent {p} of {v} is not in the tree")));
        }
        children.entry(p).or_default().push(v);
    }
    let mut labels = BTreeMap::new();
    let mut depth = 0;
    let mut counter = 0u32;
    // (node, depth, next child index)
    let mut stack = vec![(tree.root, 0u64, 0usize)];
    labels.insert(tree.root, TreeLabel { inn: 0, out: 0 });
    while let Some(top) = stack.last_mut() {
        let (v, d, i) = *top;
        let kids = children.get(&v).map(Vec::as_slice).unwrap_or(&[]);
        if i < kids.len() {
            top.2 += 1;
            let c = kids[i];
            counter += 1;
            labels.insert(c, TreeLabel { inn: counter, out: counter });
            depth = depth.max(d + 1);
            stack.push((c, d + 1, 0));
        } else {
            labels.get_mut(&v).unwrap().out = counter;
            stack.pop();
        }
    }
    if labels.len() != tree.len() {
        let stray = tree.parent.keys().find(|v| !labels.contains_key(v)).copied().unwrap_or(tree.root);
        return Err(RoutingError::CycleDetected(stray));
    }
    let children = children
        .into_iter()
        .map(|(p, kids)| {
            let mut ks: Vec<(TreeLabel, NodeId)> = kids.into_iter().map(|c| (labels[&c], c)).collect();
            ks.sort_by_key(|(l, _)| l.inn);
            (p, ks)
        })
        .collect();
    Ok(TreeLabeling { root: tree.root, labels, parent: tree.parent.clone(), children, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_random_graph, path_graph, star_graph};
    use crate::rng::subseed;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bfs_examples() {
        let g = path_graph(&[1, 1]);
        let (t, st) = build_bfs_tree(g.topology(), 0, EngineConfig::default()).unwrap();
        assert_eq!(t.parent, vec![None, Some(0), Some(1)]);
        assert_eq!(t.max_depth(), 2);
        assert!(st.rounds_used <= 3);
        let g = star_graph(5);
        let (t, _) = build_bfs_tree(g.topology(), 0, EngineConfig::default()).unwrap();
        assert_eq!(t.max_depth(), 1);
    }

    #[test]
    fn bfs_depth_matches_eccentricity() {
        let g = gen_random_graph(64, 0.08, 1, 2).unwrap();
        let topo = g.topology();
        let (t, st) = build_bfs_tree(topo, 5, EngineConfig::default()).unwrap();
        let ecc = topo.hop_eccentricity(5) as u64;
        assert_eq!(t.max_depth(), ecc);
        assert!(st.rounds_used <= ecc + 1);
        let hops = topo.hop_bfs(5);
        for v in 0..64 {
            assert_eq!(t.depth[v], hops[v].unwrap() as u64);
            if let Some(p) = t.parent[v] {
                assert_eq!(t.depth[p] + 1, t.depth[v]);
                let smallest = topo.neighbors(v).iter().map(|a| a.to).filter(|&u| t.depth[u] + 1 == t.depth[v]).min();
                assert_eq!(Some(p), smallest);
            }
        }
    }

    #[test]
    fn path_tree_routes_through_middle() {
        let mut t = RootedTree::new(0);
        t.parent.insert(1, 0);
        t.parent.insert(2, 1);
        let l = label_tree(&t).unwrap();
        assert_eq!(l.route(0, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(l.route(2, 2).unwrap(), vec![2]);
        assert_eq!(l.route(2, 0).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn cycles_are_rejected() {
        let mut t = RootedTree::new(0);
        t.parent.insert(1, 2);
        t.parent.insert(2, 1);
        assert!(matches!(label_tree(&t), Err(RoutingError::CycleDetected(_))));
    }

    fn random_tree(n: usize, seed: u64) -> RootedTree {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "tree-test", 0));
        // random labels so that ids do not follow the tree order
        let mut ids: Vec<NodeId> = (0..n).map(|i| i * 7 + 3).collect();
        for i in (1..n).rev() {
            ids.swap(i, rng.gen_range(0..=i));
        }
        let mut t = RootedTree::new(ids[0]);
        for i in 1..n {
            t.parent.insert(ids[i], ids[rng.gen_range(0..i)]);
        }
        t
    }

    fn tree_path(t: &RootedTree, a: NodeId, b: NodeId) -> Vec<NodeId> {
        let up = |mut v: NodeId| {
            let mut p = vec![v];
            while let Some(&u) = t.parent.get(&v) {
                p.push(u);
                v = u;
            }
            p
        };
        let (pa, pb) = (up(a), up(b));
        let lca = *pa.iter().find(|v| pb.contains(v)).unwrap();
        let mut path: Vec<NodeId> = pa.iter().copied().take_while(|&v| v != lca).collect();
        path.push(lca);
        let tail: Vec<NodeId> = pb.iter().copied().take_while(|&v| v != lca).collect();
        path.extend(tail.into_iter().rev());
        path
    }

    #[test]
    fn all_pairs_follow_unique_path() {
        let t = random_tree(50, 9);
        let l = label_tree(&t).unwrap();
        let members: Vec<NodeId> = l.labels.keys().copied().collect();
        let mut pairs = 0;
        for &a in &members {
            for &b in &members {
                if a != b {
                    assert_eq!(l.route(a, b).unwrap(), tree_path(&t, a, b));
                    pairs += 1;
                }
            }
        }
        assert_eq!(pairs, 2450);
    }

    proptest! {
        #[test]
        fn containment_is_ancestry(n in 1usize..200, seed in 0u64..10_000) {
            let t = random_tree(n, seed);
            let l = label_tree(&t).unwrap();
            let is_anc = |a: NodeId, mut b: NodeId| loop {
                if a == b { return true; }
                match t.parent.get(&b) { Some(&p) => b = p, None => return false }
            };
            let members: Vec<NodeId> = l.labels.keys().copied().collect();
            for &a in members.iter().take(40) {
                for &b in &members {
                    prop_assert_eq!(l.labels[&a].contains(&l.labels[&b]), is_anc(a, b));
                }
            }
            prop_assert!(l.labels.values().all(|x| (x.out as usize) < n));
        }
    }
}
