use serde::Serialize;

use super::{Params, Scheme};
use crate::compact::Mode;
use crate::dist::Eps;
use crate::monitor::LemmaCheck;

/// Bumped whenever a report field is added, removed or renamed.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableSummary {
    pub max: u64,
    pub mean: f64,
}

impl TableSummary {
    pub fn of(sizes: &[u64]) -> Self {
        let max = sizes.iter().copied().max().unwrap_or(0);
        let mean = if sizes.is_empty() { 0.0 } else { sizes.iter().sum::<u64>() as f64 / sizes.len() as f64 };
        TableSummary { max, mean }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StretchSummary {
    pub max: f64,
    pub p99: f64,
    pub mean: f64,
}

impl StretchSummary {
    pub fn of(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let len = values.len();
        let p99 = values[((len as f64 * 0.99).ceil() as usize).clamp(1, len) - 1];
        Some(StretchSummary { max: values[len - 1], p99, mean: values.iter().sum::<f64>() / len as f64 })
    }
}

/// Extra numbers for the lower-bound instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardMetrics {
    pub h: usize,
    pub sigma: usize,
    /// `rounds_used / (h sigma)`.
    pub ratio: f64,
    /// `8 (h' + sigma) (i_max + 1)`.
    pub round_bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub schema: u32,
    pub scheme: Scheme,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub eps: Eps,
    pub k: Option<u32>,
    pub mode: Option<Mode>,
    pub effective_mode: Option<Mode>,
    pub params: Params,
    /// Simulated rounds.
    pub rounds_used: u64,
    /// Rounds of globally accounted phases.
    pub global_phase_cost: u64,
    pub max_broadcasts_per_node: u64,
    pub table_entries: TableSummary,
    pub label_bits_max: Option<u32>,
    /// Route weight (routing schemes) or estimate (APSP, PDE) over exact
    /// distance, across swept pairs.
    pub stretch: Option<StretchSummary>,
    pub pairs_checked: u64,
    /// Routes that reached their destination.
    pub routes_delivered: Option<u64>,
    pub stretch_bound: Option<f64>,
    pub within_bound: Option<u64>,
    /// Routes above twice the stretch bound.
    pub over_hard_cap: Option<u64>,
    /// Estimates below the exact distance.
    pub soundness_violations: u64,
    /// Deterministic `(1 + eps)` guarantees broken (APSP, PDE).
    pub accuracy_violations: u64,
    pub whp_failures: u64,
    pub lemma_checks: Vec<LemmaCheck>,
    pub hard: Option<HardMetrics>,
    pub warnings: Vec<String>,
    pub wallclock_ms: u64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wallclock zeroed, for determinism comparisons.
    pub fn canonical_json(&self) -> String {
        MetricsReport { wallclock_ms: 0, ..self.clone() }.to_json()
    }

    pub fn within_fraction(&self) -> Option<f64> {
        let w = self.within_bound?;
        Some(if self.pairs_checked == 0 { 1.0 } else { w as f64 / self.pairs_checked as f64 })
    }

    pub const CSV_HEADER: &'static str = "scheme,n,m,seed,eps,k,mode,rounds_used,global_phase_cost,\
max_broadcasts_per_node,table_entries_max,table_entries_mean,label_bits_max,stretch_max,stretch_p99,\
stretch_mean,pairs_checked,routes_delivered,soundness_violations,accuracy_violations,whp_failures,wallclock_ms";

    /// One row matching [`MetricsReport::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(x: Option<T>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        let st = self.stretch;
        [
            self.scheme.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.seed.to_string(),
            self.eps.to_string(),
            opt(self.k),
            opt(self.effective_mode),
            self.rounds_used.to_string(),
            self.global_phase_cost.to_string(),
            self.max_broadcasts_per_node.to_string(),
            self.table_entries.max.to_string(),
            format!("{:.3}", self.table_entries.mean),
            opt(self.label_bits_max),
            opt(st.map(|s| format!("{:.6}", s.max))),
            opt(st.map(|s| format!("{:.6}", s.p99))),
            opt(st.map(|s| format!("{:.6}", s.mean))),
            self.pairs_checked.to_string(),
            opt(self.routes_delivered),
            self.soundness_violations.to_string(),
            self.accuracy_violations.to_string(),
            self.whp_failures.to_string(),
            self.wallclock_ms.to_string(),
        ]
        .join(",")
    }
}
