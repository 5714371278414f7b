use num_rational::BigRational;
use serde::Serialize;

use super::CompactScheme;
use crate::dist::Dist;
use crate::error::RoutingError;
use crate::graph::{NodeId, WeightedGraph};
use crate::monitor::LemmaCheck;
use crate::oracle::ExactDistances;
use crate::tree::TreeLabel;

/// Pivot `s'_l(w)`, `Wd'_{l-1}(w, s'_l(w))` and `w`'s interval in the tree
/// of the pivot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelLabel {
    pub pivot: NodeId,
    pub dist: Dist,
    pub tree: TreeLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompactLabel {
    pub id: NodeId,
    /// Levels `1..k`.
    pub levels: Vec<LevelLabel>,
}

const GROUP_BYTES: usize = 2 + 8 + 4 + 16;
const QUANTUM_DEN: u64 = 1 << 20;

impl CompactLabel {
    pub fn bits(k: u32) -> u32 {
        16 + (k - 1) * (GROUP_BYTES as u32 * 8)
    }

    /// Big-endian `[16 id]` then per level `[16 pivot][64 num][32 den]
    /// [32 in][32 out][32 in2][32 out2]`. The second interval is unused and zero.
    pub fn encode(&self) -> Result<Vec<u8>, RoutingError> {
        let bad = |what: &str| RoutingError::MalformedLabel(format!("{what} exceeds 16 bits"));
        let mut out = Vec::with_capacity(2 + self.levels.len() * GROUP_BYTES);
        out.extend_from_slice(&u16::try_from(self.id).map_err(|_| bad("id"))?.to_be_bytes());
        for lv in &self.levels {
            out.extend_from_slice(&u16::try_from(lv.pivot).map_err(|_| bad("pivot"))?.to_be_bytes());
            let (num, den) = lv
                .dist
                .to_parts(64, 32)
                .or_else(|| lv.dist.quantize_up(QUANTUM_DEN).to_parts(64, 32))
                .ok_or_else(|| RoutingError::MalformedLabel(format!("distance {} too large", lv.dist)))?;
            out.extend_from_slice(&num.to_be_bytes());
            out.extend_from_slice(&(den as u32).to_be_bytes());
            out.extend_from_slice(&lv.tree.inn.to_be_bytes());
            out.extend_from_slice(&lv.tree.out.to_be_bytes());
            out.extend_from_slice(&[0u8; 8]);
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<CompactLabel, RoutingError> {
        if bytes.len() < 2 || (bytes.len() - 2) % GROUP_BYTES != 0 {
            return Err(RoutingError::MalformedLabel(format!("bad length {}", bytes.len())));
        }
        let u16_at = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
        let u32_at = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
        let mut levels = Vec::new();
        for g in 0..(bytes.len() - 2) / GROUP_BYTES {
            let o = 2 + g * GROUP_BYTES;
            let num = u64::from_be_bytes(bytes[o + 2..o + 10].try_into().unwrap());
            let dist = Dist::from_parts(num, u32_at(o + 10) as u64)
                .ok_or_else(|| RoutingError::MalformedLabel("zero denominator".into()))?;
            let tree = TreeLabel { inn: u32_at(o + 14), out: u32_at(o + 18) };
            if tree.inn > tree.out {
                return Err(RoutingError::MalformedLabel("empty interval".into()));
            }
            levels.push(LevelLabel { pivot: u16_at(o) as NodeId, dist, tree });
        }
        Ok(CompactLabel { id: u16_at(0) as NodeId, levels })
    }

    /// The label as carried in packets.
    pub fn on_wire(&self) -> Result<CompactLabel, RoutingError> {
        CompactLabel::decode(&self.encode()?)
    }

    fn target(&self, l: u32) -> (NodeId, Dist) {
        if l == 0 {
            (self.id, Dist::zero())
        } else {
            let lv = &self.levels[l as usize - 1];
            (lv.pivot, lv.dist.clone())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RouteStep {
    /// Towards the level-`l` pivot with the level-`l` tables.
    Level(u32),
    /// Down the tree of the level-`l` pivot.
    Tree(u32),
}

#[derive(Debug, Clone, Serialize)]
pub struct Route {
    pub path: Vec<NodeId>,
    pub weight: u64,
    pub steps: Vec<RouteStep>,
}

impl CompactScheme {
    /// Moves available at `u`, each with an upper bound on the remaining weight.
    fn options(&self, u: NodeId, dst: &CompactLabel) -> Result<Vec<(Dist, RouteStep, NodeId)>, RoutingError> {
        if dst.levels.len() + 1 != self.k as usize {
            return Err(RoutingError::MalformedLabel(format!(
                "{} levels for k = {}",
                dst.levels.len(),
                self.k
            )));
        }
        let mut opts = Vec::new();
        for l in 0..self.k {
            let (s, ds) = dst.target(l);
            if s >= self.n {
                return Err(RoutingError::MalformedLabel(format!("unknown node {s}")));
            }
            if u != s {
                if let Some(est) = self.level_est(l, u, s) {
                    if let Some(x) = self.level_next(l, u, s)? {
                        opts.push((est.add_raw(&ds), RouteStep::Level(l), x));
                    }
                }
            }
            if l == 0 {
                continue;
            }
            let tree = &self.trees[l as usize].get(&s);
            let lv = &dst.levels[l as usize - 1];
            if let Some(t) = tree {
                if t.label(u).is_some_and(|own| own.contains(&lv.tree)) {
                    if let (Some(x), Some(up)) = (t.next_hop(u, &lv.tree)?, self.level_est(l - 1, u, s)) {
                        opts.push((ds.sub_raw(&up), RouteStep::Tree(l), x));
                    }
                }
            }
        }
        Ok(opts)
    }

    pub fn next_hop(&self, u: NodeId, dst: &CompactLabel) -> Result<Option<(NodeId, RouteStep)>, RoutingError> {
        if u == dst.id {
            return Ok(None);
        }
        let best = self.options(u, dst)?.into_iter().min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((_, step, x)) => Ok(Some((x, step))),
            None => Err(RoutingError::Stuck { from: u, to: dst.id, at: u }),
        }
    }

    /// Distance estimate from `v`'s tables and the label alone.
    pub fn dist(&self, v: NodeId, dst: &CompactLabel) -> Result<Dist, RoutingError> {
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

    pub fn route(&self, g: &WeightedGraph, v: NodeId, dst: &CompactLabel) -> Result<Route, RoutingError> {
        let mut path = vec![v];
        let mut steps = Vec::new();
        let mut weight = 0u64;
        let mut u = v;
        // The bound drops with every hop and depends only on the node, so
        // routes are simple paths.
        let limit = self.n;
        while let Some((x, step)) = self.next_hop(u, dst)? {
            weight += g.weight_between(u, x).ok_or(RoutingError::Stuck { from: v, to: dst.id, at: u })?;
            path.push(x);
            steps.push(step);
            u = x;
            if path.len() > limit {
                return Err(RoutingError::RouteLoop { from: v, to: dst.id, hops: limit });
            }
        }
        Ok(Route { path, weight, steps })
    }

    /// Minimal `l` with `s'_l(w)` in `S'_l(v)`, if any.
    pub fn tz_level(&self, v: NodeId, w: NodeId) -> Option<u32> {
        (0..self.k).find(|&l| {
            let s = self.pivots[l as usize][w];
            self.cluster(l, v).iter().any(|e| e.1 == s)
        })
    }
}

/// Pivot checks from the build plus the induction bounds of the stretch
/// argument, evaluated with exact distances at every level up to the minimal
/// one.
pub fn compact_lemma_checks(s: &CompactScheme, d: &ExactDistances) -> Vec<LemmaCheck> {
    let mut out = s.checks.clone();
    let mut to_w = LemmaCheck::new("4.6", 1);
    let mut to_v = LemmaCheck::new("4.6", 2);
    let mut found = LemmaCheck::new("4.6", 3);
    let one_plus = s.eps.one_plus();
    let int = |x: u64| BigRational::from_integer(x.into());
    for v in 0..s.n {
        // one cluster scan per level instead of one per pair
        let clusters: Vec<Vec<NodeId>> = (0..s.k).map(|l| s.cluster(l, v).into_iter().map(|e| e.1).collect()).collect();
        for w in 0..s.n {
            if v == w {
                continue;
            }
            let lvl = (0..s.k).find(|&l| clusters[l as usize].contains(&s.pivots[l as usize][w]));
            found.record(lvl.is_some(), (v, w));
            let top = lvl.unwrap_or(s.k - 1);
            let base = int(d.wd[v][w]);
            let mut f = BigRational::from_integer(1.into());
            for l in 0..=top {
                let p = s.pivots[l as usize][w];
                let two_l = int(2 * l as u64);
                to_w.record(int(d.wd[w][p]) <= &(&f * &two_l) * &base, (v, w));
                to_v.record(int(d.wd[v][p]) <= &(&f * &(two_l + int(1))) * &base, (v, w));
                f = &(&f * &one_plus) * &one_plus;
            }
        }
    }
    out.extend([to_w, to_v, found]);
    out
}
