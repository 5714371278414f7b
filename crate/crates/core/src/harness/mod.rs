//! Experiment driver: graph sources, scheme runs, oracle sweeps and reports.

mod report;
mod run;
pub mod verify;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use report::{HardMetrics, MetricsReport, StretchSummary, TableSummary, REPORT_SCHEMA};
pub use run::{cmd_hard, cmd_run, compact_reports, pde_contract, report_stem, route_sweep, write_outputs, ContractCount, SweepCount};

use crate::compact::Mode;
use crate::dist::Eps;
use crate::engine::{EngineConfig, DEFAULT_C_B};
use crate::error::Error;
use crate::graph::{
    connected_density, gen_hard_instance, gen_random_graph_with_bound, load_graph_with_bound, weight_bound,
    HardLayout, NodeId, WeightedGraph, DEFAULT_WEIGHT_EXPONENT,
};
use crate::rng::subseed;
use crate::rtc::DEFAULT_C;
use crate::tree::DEFAULT_C_T;

/// Pairs are swept against the exact oracle only up to this many nodes.
pub const ORACLE_CAP: usize = 1024;

/// Label constant `c_L` in the label-size check `bits <= c_L log2 n`.
pub const DEFAULT_C_L: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Apsp,
    Pde,
    Rtc,
    Compact,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Apsp => "apsp",
            Scheme::Pde => "pde",
            Scheme::Rtc => "rtc",
            Scheme::Compact => "compact",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "apsp" => Ok(Scheme::Apsp),
            "pde" => Ok(Scheme::Pde),
            "rtc" => Ok(Scheme::Rtc),
            "compact" => Ok(Scheme::Compact),
            _ => Err(format!("unknown scheme {s:?} (apsp, pde, rtc, compact)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSource {
    /// Erdős–Rényi with `p = degree * ln n / n`, resampled until connected.
    Random { n: usize, degree: f64 },
    File { path: PathBuf },
    Hard { h: usize, sigma: usize },
}

impl FromStr for GraphSource {
    type Err = String;

    /// `random:N[:DEGREE]`, `hard:H:SIGMA` or a file path.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
        match parts.as_slice() {
            ["random", n] => Ok(GraphSource::Random { n: num(n)?, degree: 2.0 }),
            ["random", n, d] => Ok(GraphSource::Random {
                n: num(n)?,
                degree: d.parse().map_err(|e| format!("{d:?}: {e}"))?,
            }),
            ["hard", h, sigma] => Ok(GraphSource::Hard { h: num(h)?, sigma: num(sigma)? }),
            _ if parts[0] == "random" || parts[0] == "hard" => Err(format!("bad graph spec {s:?}")),
            _ => Ok(GraphSource::File { path: PathBuf::from(s) }),
        }
    }
}

/// A loaded graph; `hard` is set for the lower-bound instance.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: WeightedGraph,
    pub hard: Option<HardLayout>,
}

impl GraphSource {
    pub fn load(&self, seed: u64, weight_exp: u32) -> Result<LoadedGraph, Error> {
        Ok(match self {
            GraphSource::Random { n, degree } => {
                let w_max = weight_bound(*n, weight_exp);
                let g = gen_random_graph_with_bound(
                    *n,
                    connected_density(*n, *degree),
                    w_max,
                    subseed(seed, "graph", 0),
                    weight_exp,
                )?;
                LoadedGraph { graph: g, hard: None }
            }
            GraphSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                LoadedGraph { graph: load_graph_with_bound(&text, weight_exp)?, hard: None }
            }
            GraphSource::Hard { h, sigma } => {
                LoadedGraph { graph: gen_hard_instance(*h, *sigma)?, hard: Some(HardLayout { h: *h, sigma: *sigma }) }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Sampling and hop constant shared by the routing schemes.
    pub c: f64,
    #[serde(rename = "c_B")]
    pub c_b: u32,
    #[serde(rename = "c_L")]
    pub c_l: u32,
    #[serde(rename = "c_T")]
    pub c_t: u64,
    /// Weights lie in `[1, n^C]`.
    #[serde(rename = "C")]
    pub weight_exp: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { c: DEFAULT_C, c_b: DEFAULT_C_B, c_l: DEFAULT_C_L, c_t: DEFAULT_C_T, weight_exp: DEFAULT_WEIGHT_EXPONENT }
    }
}

impl Constants {
    /// Sets one constant from `name=value`.
    pub fn set(&mut self, assignment: &str) -> Result<(), String> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected NAME=VALUE, got {assignment:?}"))?;
        let bad = |e: &dyn fmt::Display| format!("{name}={value}: {e}");
        match name.trim() {
            "c" => self.c = value.parse().map_err(|e| bad(&e))?,
            "c_B" | "c_b" => self.c_b = value.parse().map_err(|e| bad(&e))?,
            "c_L" | "c_l" => self.c_l = value.parse().map_err(|e| bad(&e))?,
            "c_T" | "c_t" => self.c_t = value.parse().map_err(|e| bad(&e))?,
            "C" => self.weight_exp = value.parse().map_err(|e| bad(&e))?,
            other => return Err(format!("unknown constant {other:?} (c, c_B, c_L, c_T, C)")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), Error> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("c = {} must be positive", self.c)));
        }
        if self.c_b == 0 || self.c_l == 0 || self.c_t == 0 || self.weight_exp == 0 {
            return Err(Error::Config("c_B, c_L, c_T and C must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub graph: GraphSource,
    /// Scheme default when unset.
    pub eps: Option<Eps>,
    pub k: u32,
    pub l0: Option<u32>,
    /// Compact only; unset picks the cheaper of broadcast-all and
    /// short-circuit by measured rounds.
    pub mode: Option<Mode>,
    /// PDE hop parameter; defaults to `n`.
    pub h: Option<u64>,
    /// PDE list length; defaults to `n`.
    pub sigma: Option<usize>,
    pub seed: u64,
    pub max_rounds: u64,
    pub constants: Constants,
    pub oracle_cap: usize,
    /// Where reports are written; nothing is written when unset.
    pub out: Option<PathBuf>,
    /// Also write the PDE table (JSON lines) or the RTC spanner.
    pub dumps: bool,
}

impl ExperimentConfig {
    pub fn new(scheme: Scheme, graph: GraphSource, seed: u64) -> Self {
        ExperimentConfig {
            scheme,
            graph,
            eps: None,
            k: 2,
            l0: None,
            mode: None,
            h: None,
            sigma: None,
            seed,
            max_rounds: EngineConfig::default().max_rounds,
            constants: Constants::default(),
            oracle_cap: ORACLE_CAP,
            out: None,
            dumps: false,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.constants.validate()?;
        if self.k < 1 || (self.scheme == Scheme::Compact && self.k < 2) {
            return Err(Error::Config(format!("k = {} too small for {}", self.k, self.scheme)));
        }
        if let Some(l0) = self.l0 {
            if l0 < 1 || l0 >= self.k {
                return Err(Error::Config(format!("l0 = {l0} not in [1, k-1]")));
            }
        }
        if self.h == Some(0) || self.sigma == Some(0) {
            return Err(Error::Config("h and sigma must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max rounds must be positive".into()));
        }
        match &self.graph {
            GraphSource::Random { n, degree } if *n < 2 || !(*degree > 0.0) => {
                Err(Error::Config(format!("random graph needs n >= 2 and degree > 0, got {n}, {degree}")))
            }
            GraphSource::Hard { h, sigma } if *h < 1 || *sigma < 1 => {
                Err(Error::Config("hard instance needs h, sigma >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig { max_rounds: self.max_rounds, c_b: self.constants.c_b }
    }
}

/// Scheme parameters echoed into reports.
pub type Params = BTreeMap<String, serde_json::Value>;

/// `(v, w)` pairs in sweep order.
pub fn ordered_pairs(n: usize) -> impl Iterator<Item = (NodeId, NodeId)> {
    (0..n).flat_map(move |v| (0..n).filter(move |&w| w != v).map(move |w| (v, w)))
}

#[cfg(test)]
mod tests;
