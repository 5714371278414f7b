//! Invariant suites and the acceptance presets.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{cmd_hard, cmd_run, compact_reports, pde_contract, ExperimentConfig, GraphSource, MetricsReport, Scheme};
use crate::compact::Mode;
use crate::detect::{pairs, unweighted_detect, DetectParams};
use crate::dist::Eps;
use crate::engine::EngineConfig;
use crate::error::Error;
use crate::graph::{connected_density, gen_random_graph, weight_bound, DEFAULT_WEIGHT_EXPONENT};
use crate::monitor::merge_checks;
use crate::oracle::{exact_distances, subdivided_detection_oracle};
use crate::pde::{pde_estimate, PdeParams};
use crate::rng::subseed;

/// Hard invariants broken by one report. Lemma failures count only above
/// `whp_threshold`.
pub fn failed_invariants(rep: &MetricsReport, whp_threshold: u64) -> Vec<String> {
    let mut out = Vec::new();
    if rep.soundness_violations > 0 {
        out.push(format!("soundness: {} estimates below the exact distance", rep.soundness_violations));
    }
    if rep.accuracy_violations > 0 {
        out.push(format!("accuracy: {} estimates above (1 + eps) times exact", rep.accuracy_violations));
    }
    if let Some(d) = rep.routes_delivered {
        if d != rep.pairs_checked {
            out.push(format!("delivery: {} of {} routes failed", rep.pairs_checked - d, rep.pairs_checked));
        }
    }
    if rep.whp_failures > whp_threshold {
        let items: Vec<String> = rep
            .lemma_checks
            .iter()
            .filter(|c| c.violations > 0)
            .map(|c| format!("lemma {} statement {}: {}", c.lemma, c.statement, c.violations))
            .collect();
        out.push(format!("whp: {} failures ({})", rep.whp_failures, items.join(", ")));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub passed: bool,
    pub failures: Vec<String>,
    pub reports: Vec<MetricsReport>,
}

/// Runs `cfg` once per seed, checks every hard invariant, and reruns the
/// first seed to check that reports are reproducible.
pub fn cmd_verify(cfg: &ExperimentConfig, seeds: &[u64], whp_threshold: u64) -> Result<VerifySummary, Error> {
    cfg.validate()?;
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for &seed in seeds {
        let c = ExperimentConfig { seed, ..cfg.clone() };
        let rep = cmd_run(&c)?;
        failures.extend(failed_invariants(&rep, whp_threshold).into_iter().map(|f| format!("seed {seed}: {f}")));
        reports.push(rep);
    }
    if let (Some(&seed), Some(first)) = (seeds.first(), reports.first()) {
        let again = cmd_run(&ExperimentConfig { seed, ..cfg.clone() })?;
        if again.canonical_json() != first.canonical_json() {
            failures.push(format!("seed {seed}: determinism: rerun produced a different report"));
        }
    }
    Ok(VerifySummary { passed: failures.is_empty(), failures, reports })
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub notes: Vec<String>,
    /// Everything the criterion measured, without wallclock fields.
    pub data: Value,
    #[serde(skip)]
    pub reports: Vec<MetricsReport>,
    pub wallclock_ms: u64,
}

impl CriterionReport {
    fn new(id: u32, title: &str) -> Self {
        CriterionReport {
            id,
            title: title.to_string(),
            passed: true,
            notes: Vec::new(),
            data: Value::Null,
            reports: Vec::new(),
            wallclock_ms: 0,
        }
    }

    /// Records a check; a failing check fails the criterion.
    fn check(&mut self, ok: bool, note: String) {
        self.passed &= ok;
        self.notes.push(if ok { note } else { format!("FAILED {note}") });
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {} {}: {} [{}]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.notes.join("; ")
        )
    }

    /// JSON compared by the determinism criterion.
    pub fn canonical_json(&self) -> String {
        let v = json!({ "id": self.id, "passed": self.passed, "notes": self.notes, "data": self.data });
        serde_json::to_string_pretty(&v).expect("criterion serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("criterion serializes")
    }
}

fn canonical(reports: &[MetricsReport]) -> Value {
    Value::Array(
        reports
            .iter()
            .map(|r| serde_json::to_value(MetricsReport { wallclock_ms: 0, ..r.clone() }).expect("report serializes"))
            .collect(),
    )
}

fn random_cfg(scheme: Scheme, n: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(scheme, GraphSource::Random { n, degree: 2.0 }, seed)
}

pub const CRITERIA: [u32; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

/// Source detection equals the unit-length oracle, within `h + sigma` rounds
/// and `sigma (sigma + 1) / 2` broadcasts per node.
pub fn criterion_1() -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(1, "source detection exactness and cost");
    let (mut runs, mut wrong_lists, mut slow, mut chatty) = (0u64, 0u64, 0u64, 0u64);
    let mut rows = Vec::new();
    for seed in 1..=5u64 {
        for j in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "criterion_1", j));
            let n = rng.gen_range(2..=128usize);
            let h = rng.gen_range(1..=16u64);
            let sigma = rng.gen_range(1..=16usize);
            let g = gen_random_graph(n, connected_density(n, 2.0), weight_bound(n, DEFAULT_WEIGHT_EXPONENT), rng.gen())?;
            let sources: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let (lists, st) =
                unweighted_detect(g.topology(), &DetectParams::new(sources.clone(), h, sigma), EngineConfig::default())?;
            let oracle = subdivided_detection_oracle(g.topology(), None, &sources, h, sigma);
            runs += 1;
            wrong_lists += (0..n).filter(|&v| pairs(&lists[v]) != oracle[v]).count() as u64;
            slow += u64::from(st.rounds_used > h + sigma as u64);
            chatty += u64::from(st.max_broadcasts() > (sigma * (sigma + 1) / 2) as u64);
            rows.push(json!([seed, j, n, h, sigma, sources.len(), st.rounds_used, st.max_broadcasts()]));
        }
    }
    c.check(wrong_lists == 0, format!("{runs} graphs, {wrong_lists} node lists differ from the oracle"));
    c.check(slow == 0, format!("{slow} runs above h + sigma rounds"));
    c.check(chatty == 0, format!("{chatty} runs above sigma(sigma+1)/2 broadcasts"));
    c.data = json!({ "columns": ["seed", "graph", "n", "h", "sigma", "sources", "rounds", "max_broadcasts"], "runs": rows });
    Ok(c)
}

/// PDE is sound everywhere and `(1 + eps)`-accurate within `h` hops.
pub fn criterion_2() -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(2, "PDE contract");
    let epss = [Eps::reciprocal(1), Eps::reciprocal(2), Eps::reciprocal(4)];
    let (mut pairs_checked, mut unsound, mut inaccurate) = (0u64, 0u64, 0u64);
    let mut rows = Vec::new();
    for seed in 1..=5u64 {
        for j in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "criterion_2", j));
            let n = rng.gen_range(4..=128usize);
            let eps = epss[(j % 3) as usize];
            let h = rng.gen_range(1..=16u64);
            let sigma = rng.gen_range(1..=16usize);
            let g = gen_random_graph(n, connected_density(n, 2.0), (n as u64).pow(3), rng.gen())?;
            let sources: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let r = pde_estimate(&g, &PdeParams::new(sources.clone(), h, sigma, eps), EngineConfig::default())?;
            let k = pde_contract(&r, &exact_distances(&g), h);
            pairs_checked += k.pairs;
            unsound += k.unsound;
            inaccurate += k.inaccurate;
            rows.push(json!([seed, j, n, eps, h, sigma, sources.len(), r.stats.rounds_used, k.unsound, k.inaccurate]));
        }
    }
    c.check(unsound == 0, format!("{pairs_checked} detected pairs, {unsound} below Wd"));
    c.check(inaccurate == 0, format!("{inaccurate} pairs within h hops above (1+eps) Wd"));
    c.data = json!({
        "columns": ["seed", "graph", "n", "eps", "h", "sigma", "sources", "rounds", "unsound", "inaccurate"],
        "runs": rows,
    });
    Ok(c)
}

/// APSP within `[1, 1 + eps]` and rounds scaling like `n log n / eps^2`.
pub fn criterion_3() -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(3, "APSP accuracy and round scaling");
    let eps = Eps::reciprocal(4);
    let run = |n: usize, seed: u64| cmd_run(&ExperimentConfig { eps: Some(eps), ..random_cfg(Scheme::Apsp, n, seed) });
    let mut reports = Vec::new();
    for seed in 1..=3 {
        reports.push(run(128, seed)?);
    }
    let bad: u64 = reports.iter().map(|r| r.soundness_violations + r.accuracy_violations).sum();
    let worst = reports.iter().filter_map(|r| r.stretch.map(|s| s.max)).fold(0.0, f64::max);
    c.check(bad == 0, format!("n=128: {bad} pairs outside [1, 1.25], max ratio {worst:.4}"));
    let scaled = |r: &MetricsReport| {
        let n = r.n as f64;
        r.rounds_used as f64 / (n * n.log2() * 16.0)
    };
    let consts = [scaled(&run(64, 1)?), scaled(&reports[0]), scaled(&run(256, 1)?)];
    let mean = consts.iter().sum::<f64>() / 3.0;
    let stable = consts.iter().all(|&x| (x - mean).abs() <= 0.5 * mean);
    c.check(
        stable,
        format!("rounds/(n log n eps^-2) = {:.3}, {:.3}, {:.3} for n = 64, 128, 256", consts[0], consts[1], consts[2]),
    );
    c.data = json!({ "reports": canonical(&reports), "scaled_rounds": consts });
    c.reports = reports;
    Ok(c)
}

/// RTC delivery, stretch, hard cap and label size at `n = 256`, `k = 2`.
pub fn criterion_4() -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(4, "relabeled routing at n = 256, k = 2");
    let mut reports = Vec::new();
    for seed in 1..=3 {
        reports.push(cmd_run(&ExperimentConfig { k: 2, ..random_cfg(Scheme::Rtc, 256, seed) })?);
    }
    for r in &reports {
        let delivered = r.routes_delivered.unwrap_or(0);
        let within = r.within_fraction().unwrap_or(0.0);
        let bound = r.stretch_bound.unwrap_or(f64::NAN);
        let bits = r.label_bits_max.unwrap_or(u32::MAX);
        let c_l = bits as f64 / (r.n as f64).log2();
        c.check(delivered == r.pairs_checked, format!("seed {}: {delivered}/{} delivered", r.seed, r.pairs_checked));
        c.check(within >= 0.99, format!("seed {}: {:.2}% within {bound:.3}", r.seed, 100.0 * within));
        c.check(r.over_hard_cap == Some(0), format!("seed {}: {} above 2x bound", r.seed, r.over_hard_cap.unwrap_or(0)));
        c.check(c_l <= 32.0, format!("seed {}: label {bits} bits, c_L = {c_l:.1}", r.seed));
        c.check(r.soundness_violations == 0, format!("seed {}: {} unsound estimates", r.seed, r.soundness_violations));
    }
    c.data = json!({ "reports": canonical(&reports) });
    c.reports = reports;
    Ok(c)
}

/// Compact routing delivery, stretch, table scaling and soundness.
pub fn criterion_5() -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(5, "compact routing at n = 128, 256 and k = 2, 3");
    let modes = [Mode::BroadcastAll, Mode::ShortCircuit];
    let mut reports = Vec::new();
    for k in [2u32, 3] {
        for n in [128usize, 256] {
            for seed in 1..=3 {
                let cfg = ExperimentConfig { k, ..random_cfg(Scheme::Compact, n, seed) };
                reports.extend(compact_reports(&cfg, &modes)?);
            }
        }
    }
    let (mut pairs, mut undelivered, mut unsound) = (0u64, 0u64, 0u64);
    for r in &reports {
        pairs += r.pairs_checked;
        undelivered += r.pairs_checked - r.routes_delivered.unwrap_or(0);
        unsound += r.soundness_violations;
        let within = r.within_fraction().unwrap_or(0.0);
        c.check(
            within >= 0.99,
            format!(
                "n={} k={} {} seed {}: {:.2}% within {:.3}",
                r.n,
                r.k.unwrap_or(0),
                r.mode.map(|m| m.to_string()).unwrap_or_default(),
                r.seed,
                100.0 * within,
                r.stretch_bound.unwrap_or(f64::NAN)
            ),
        );
    }
    c.check(undelivered == 0, format!("{undelivered} of {pairs} routes failed"));
    c.check(unsound == 0, format!("{unsound} unsound distance queries"));
    let mut fits = Vec::new();
    for k in [2u32, 3] {
        for m in modes {
            let max_at = |n: usize| {
                reports
                    .iter()
                    .filter(|r| r.n == n && r.k == Some(k) && r.mode == Some(m))
                    .map(|r| r.table_entries.max)
                    .max()
                    .unwrap_or(0)
            };
            let (a, b) = (max_at(128), max_at(256));
            let ratio = b as f64 / a.max(1) as f64;
            let limit = 2f64.powf(1.0 / k as f64) * (8.0f64 / 7.0).powi(2) * 1.5;
            let fit = |n: usize, e: u64| e as f64 / ((n as f64).powf(1.0 / k as f64) * (n as f64).log2().powi(2));
            fits.push(json!({ "k": k, "mode": m, "max_128": a, "max_256": b, "c_128": fit(128, a), "c_256": fit(256, b) }));
            c.check(ratio <= limit, format!("k={k} {m}: max entries {a} -> {b}, ratio {ratio:.3} <= {limit:.3}"));
        }
    }
    c.data = json!({ "reports": canonical(&reports), "table_fit": fits });
    c.reports = reports;
    Ok(c)
}

/// PDE on the lower-bound instance stays below `h sigma` rounds.
pub fn criterion_6() -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(6, "hard instance separation");
    let base = random_cfg(Scheme::Pde, 2, 1);
    let small = cmd_hard(16, 16, Eps::reciprocal(1), &base)?;
    let big = cmd_hard(32, 32, Eps::reciprocal(1), &base)?;
    let (hs, hb) = (small.hard.expect("hard metrics"), big.hard.expect("hard metrics"));
    c.check(
        big.rounds_used <= hb.round_bound,
        format!("h=sigma=32: {} rounds <= 8(h'+sigma)(i_max+1) = {}", big.rounds_used, hb.round_bound),
    );
    let target = 0.75 * 1024.0;
    c.check((big.rounds_used as f64) < target, format!("h=sigma=32: {} rounds < {target}", big.rounds_used));
    c.check(
        big.soundness_violations + big.accuracy_violations == 0,
        format!(
            "h=sigma=32 contract: {} unsound, {} inaccurate",
            big.soundness_violations, big.accuracy_violations
        ),
    );
    c.check(hb.ratio < hs.ratio, format!("rounds/(h sigma) {:.3} at 16 -> {:.3} at 32", hs.ratio, hb.ratio));
    let reports = vec![small, big];
    c.data = json!({ "reports": canonical(&reports) });
    c.reports = reports;
    Ok(c)
}

/// Reruns criteria 1-6 and compares their canonical JSON with `first`.
pub fn criterion_7(first: &[CriterionReport]) -> Result<CriterionReport, Error> {
    let mut c = CriterionReport::new(7, "determinism of criteria 1-6");
    let mut same = Vec::new();
    for old in first.iter().filter(|r| r.id <= 6) {
        let again = run_one(old.id)?;
        let equal = again.canonical_json() == old.canonical_json();
        c.check(equal, format!("criterion {} {}", old.id, if equal { "identical" } else { "differs" }));
        same.push(json!([old.id, equal]));
    }
    c.data = json!({ "identical": same });
    Ok(c)
}

/// No lemma failures across the routing runs of criteria 4 and 5.
pub fn criterion_8(routing: &[CriterionReport]) -> CriterionReport {
    let mut c = CriterionReport::new(8, "w.h.p. lemma monitoring");
    let mut checks = Vec::new();
    let mut runs = 0;
    for r in routing.iter().filter(|r| r.id == 4 || r.id == 5).flat_map(|r| &r.reports) {
        merge_checks(&mut checks, &r.lemma_checks);
        runs += 1;
    }
    let total: u64 = checks.iter().map(|x| x.violations).sum();
    c.check(total == 0, format!("{runs} runs, {total} whp failures"));
    for x in checks.iter().filter(|x| x.violations > 0) {
        c.notes.push(format!("lemma {} statement {}: {} of {}", x.lemma, x.statement, x.violations, x.checked));
    }
    c.data = json!({ "checks": checks });
    c
}

/// Runs criterion `id` in 1-6.
pub fn run_one(id: u32) -> Result<CriterionReport, Error> {
    let start = Instant::now();
    let mut c = match id {
        1 => criterion_1()?,
        2 => criterion_2()?,
        3 => criterion_3()?,
        4 => criterion_4()?,
        5 => criterion_5()?,
        6 => criterion_6()?,
        _ => return Err(Error::Config(format!("criterion {id} is not standalone"))),
    };
    c.wallclock_ms = start.elapsed().as_millis() as u64;
    Ok(c)
}

/// Runs the requested criteria. 7 reruns 1-6 and 8 reads the runs of 4 and
/// 5; both run whatever they depend on. `on_done` sees each result as it
/// finishes.
pub fn run_criteria(ids: &[u32], mut on_done: impl FnMut(&CriterionReport)) -> Result<Vec<CriterionReport>, Error> {
    let mut need: Vec<u32> = ids.to_vec();
    if ids.contains(&7) {
        need.extend(1..=6);
    }
    if ids.contains(&8) {
        need.extend([4, 5]);
    }
    need.sort_unstable();
    need.dedup();
    let mut done: Vec<CriterionReport> = Vec::new();
    for id in need {
        let start = Instant::now();
        let mut c = match id {
            1..=6 => run_one(id)?,
            7 => criterion_7(&done)?,
            8 => criterion_8(&done),
            _ => return Err(Error::Config(format!("no criterion {id}"))),
        };
        c.wallclock_ms = start.elapsed().as_millis() as u64;
        if ids.contains(&id) {
            on_done(&c);
        }
        done.push(c);
    }
    done.retain(|c| ids.contains(&c.id));
    Ok(done)
}
