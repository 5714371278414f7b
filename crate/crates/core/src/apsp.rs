//! `(1 + eps)`-approximate all-pairs shortest paths: PDE with every node a
//! source and `h = sigma = n`.

use serde::Serialize;

use crate::dist::{Dist, Eps};
use crate::engine::{EngineConfig, RunStats};
use crate::error::EngineError;
use crate::graph::WeightedGraph;
use crate::pde::{pde_estimate, PdeParams};

#[derive(Debug, Clone, Serialize)]
pub struct ApspResult {
    pub eps: Eps,
    pub i_max: u32,
    pub h_prime: u64,
    /// `est[v][w]` as computed by node `v`.
    pub est: Vec<Vec<Dist>>,
    pub stats: RunStats,
}

pub fn approx_apsp(g: &WeightedGraph, eps: Eps, cfg: EngineConfig) -> Result<ApspResult, EngineError> {
    let n = g.n();
    let params = PdeParams::new((0..n).collect(), n as u64, n, eps);
    let r = pde_estimate(g, &params, cfg)?;
    let est = r
        .lists
        .iter()
        .map(|list| {
            let mut row = vec![None; n];
            for e in list {
                row[e.src] = Some(e.est.clone());
            }
            row.into_iter().map(|x| x.expect("h = sigma = n covers every node")).collect()
        })
        .collect();
    Ok(ApspResult { eps, i_max: r.i_max(), h_prime: r.h_prime, est, stats: r.stats })
}

/// Largest and smallest `est / Wd` over ordered pairs of distinct nodes.
pub fn ratio_range(est: &[Vec<Dist>], wd: &[Vec<u64>]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    for (v, row) in est.iter().enumerate() {
        for (w, e) in row.iter().enumerate() {
            if v != w {
                let r = e.ratio_to(wd[v][w]);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::EPS_MAX;
    use crate::graph::{connected_density, gen_random_graph, path_graph};
    use crate::oracle::exact_distances;

    #[test]
    fn p3() {
        let g = path_graph(&[2, 3]);
        let r = approx_apsp(&g, EPS_MAX, EngineConfig::default()).unwrap();
        assert_eq!(r.est[0][2], Dist::from_int(5));
        for v in 0..3 {
            assert!(r.est[v][v].is_zero());
        }
    }

    #[test]
    fn random_graph_within_ratio() {
        let n = 48;
        let g = gen_random_graph(n, connected_density(n, 2.0), (n as u64).pow(3), 4).unwrap();
        let eps: Eps = "1/4".parse().unwrap();
        let r = approx_apsp(&g, eps, EngineConfig::default()).unwrap();
        let d = exact_distances(&g);
        let one_plus = eps.one_plus();
        for v in 0..n {
            for w in 0..n {
                assert!(r.est[v][w] >= Dist::from_int(d.wd[v][w]));
                assert!(r.est[v][w].within(&one_plus, d.wd[v][w]));
            }
        }
        let (lo, hi) = ratio_range(&r.est, &d.wd);
        assert!(lo >= 1.0 && hi <= 1.25);
    }
}
