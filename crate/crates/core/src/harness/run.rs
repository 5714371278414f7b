use std::path::Path;
use std::time::Instant;

use serde_json::json;

use super::report::{HardMetrics, MetricsReport, StretchSummary, TableSummary, REPORT_SCHEMA};
use super::{ordered_pairs, ExperimentConfig, GraphSource, LoadedGraph, Params, Scheme};
use crate::apsp::approx_apsp;
use crate::compact::{compact_lemma_checks, finish, prepare, CompactConfig, CompactScheme, Mode};
use crate::dist::{Dist, Eps};
use crate::engine::RunStats;
use crate::error::{Error, RoutingError};
use crate::graph::{NodeId, WeightedGraph};
use crate::monitor::{total_violations, LemmaCheck};
use crate::oracle::{exact_distances, graph_stats_from, ExactDistances};
use crate::pde::{pde_estimate, PdeParams, PdeResult};
use crate::rtc::{rtc_build, rtc_lemma_checks, RtcConfig};

/// Default `eps` for APSP and PDE runs is `1 / DEFAULT_EPS_DEN`.
const DEFAULT_EPS_DEN: u64 = 4;

/// Counts from checking a PDE result against exact distances.
#[derive(Debug, Clone, Default)]
pub struct ContractCount {
    pub pairs: u64,
    pub unsound: u64,
    pub inaccurate: u64,
    pub ratios: Vec<f64>,
}

/// `Wd' >= Wd` for every table entry, and `Wd' <= (1 + eps) Wd` for list
/// entries within `h` hops.
pub fn pde_contract(r: &PdeResult, d: &ExactDistances, h: u64) -> ContractCount {
    let one_plus = r.eps().one_plus();
    let mut c = ContractCount::default();
    for v in 0..r.n() {
        for (&s, w) in &r.tables[v] {
            c.pairs += 1;
            if r.value(w) < Dist::from_int(d.wd[v][s]) {
                c.unsound += 1;
            }
        }
        for e in &r.lists[v] {
            if e.src == v {
                continue;
            }
            c.ratios.push(e.est.ratio_to(d.wd[v][e.src]));
            if u64::from(d.min_hops[v][e.src]) <= h && !e.est.within(&one_plus, d.wd[v][e.src]) {
                c.inaccurate += 1;
            }
        }
    }
    c
}

/// Outcome of routing every ordered pair.
#[derive(Debug, Clone, Default)]
pub struct SweepCount {
    pub pairs: u64,
    pub delivered: u64,
    pub within: u64,
    pub over_cap: u64,
    pub unsound: u64,
    pub stretch: Vec<f64>,
    pub first_error: Option<String>,
}

/// Routes every ordered pair with `route(v, w) -> (weight, estimate)` and
/// compares against exact distances.
pub fn route_sweep<F>(n: usize, d: &ExactDistances, bound: f64, mut route: F) -> SweepCount
where
    F: FnMut(NodeId, NodeId) -> Result<(u64, Dist), RoutingError>,
{
    let mut c = SweepCount::default();
    for (v, w) in ordered_pairs(n) {
        c.pairs += 1;
        match route(v, w) {
            Ok((weight, est)) => {
                c.delivered += 1;
                let st = weight as f64 / d.wd[v][w] as f64;
                c.stretch.push(st);
                if st <= bound {
                    c.within += 1;
                }
                if st > 2.0 * bound {
                    c.over_cap += 1;
                }
                if est < Dist::from_int(d.wd[v][w]) {
                    c.unsound += 1;
                }
            }
            Err(e) => {
                c.first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    c
}

fn base_report(cfg: &ExperimentConfig, g: &WeightedGraph, eps: Eps) -> MetricsReport {
    MetricsReport {
        schema: REPORT_SCHEMA,
        scheme: cfg.scheme,
        n: g.n(),
        m: g.m(),
        seed: cfg.seed,
        eps,
        k: None,
        mode: None,
        effective_mode: None,
        params: Params::new(),
        rounds_used: 0,
        global_phase_cost: 0,
        max_broadcasts_per_node: 0,
        table_entries: TableSummary::of(&[]),
        label_bits_max: None,
        stretch: None,
        pairs_checked: 0,
        routes_delivered: None,
        stretch_bound: None,
        within_bound: None,
        over_hard_cap: None,
        soundness_violations: 0,
        accuracy_violations: 0,
        whp_failures: 0,
        lemma_checks: Vec::new(),
        hard: None,
        warnings: Vec::new(),
        wallclock_ms: 0,
    }
}

fn set_stats(rep: &mut MetricsReport, st: &RunStats) {
    rep.rounds_used = st.rounds_used;
    rep.global_phase_cost = st.global_phase_cost;
    rep.max_broadcasts_per_node = st.max_broadcasts();
}

fn set_sweep(rep: &mut MetricsReport, c: SweepCount, bound: f64) {
    rep.pairs_checked = c.pairs;
    rep.routes_delivered = Some(c.delivered);
    rep.stretch_bound = Some(bound);
    rep.within_bound = Some(c.within);
    rep.over_hard_cap = Some(c.over_cap);
    rep.soundness_violations = c.unsound;
    rep.stretch = StretchSummary::of(c.stretch);
    if let Some(e) = c.first_error {
        rep.warnings.push(format!("{} of {} routes failed; first: {e}", c.pairs - c.delivered, c.pairs));
    }
}

fn set_checks(rep: &mut MetricsReport, checks: Vec<LemmaCheck>) {
    rep.whp_failures = total_violations(&checks);
    rep.lemma_checks = checks;
}

/// Files written next to the report when dumps are requested.
pub type Dumps = Vec<(String, String)>;

fn run_apsp(cfg: &ExperimentConfig, g: &WeightedGraph, d: Option<&ExactDistances>) -> Result<MetricsReport, Error> {
    let eps = cfg.eps.unwrap_or(Eps::reciprocal(DEFAULT_EPS_DEN));
    let r = approx_apsp(g, eps, cfg.engine())?;
    let mut rep = base_report(cfg, g, eps);
    set_stats(&mut rep, &r.stats);
    rep.params = Params::from([("i_max".into(), json!(r.i_max)), ("h_prime".into(), json!(r.h_prime))]);
    rep.table_entries = TableSummary::of(&vec![g.n() as u64; g.n()]);
    if let Some(d) = d {
        let one_plus = eps.one_plus();
        let mut ratios = Vec::new();
        for (v, w) in ordered_pairs(g.n()) {
            rep.pairs_checked += 1;
            let e = &r.est[v][w];
            if *e < Dist::from_int(d.wd[v][w]) {
                rep.soundness_violations += 1;
            }
            if !e.within(&one_plus, d.wd[v][w]) {
                rep.accuracy_violations += 1;
            }
            ratios.push(e.ratio_to(d.wd[v][w]));
        }
        rep.stretch = StretchSummary::of(ratios);
    }
    Ok(rep)
}

fn run_pde(
    cfg: &ExperimentConfig,
    lg: &LoadedGraph,
    d: Option<&ExactDistances>,
    dumps: &mut Dumps,
) -> Result<MetricsReport, Error> {
    let g = &lg.graph;
    let n = g.n();
    let eps = cfg.eps.unwrap_or(Eps::reciprocal(DEFAULT_EPS_DEN));
    let sources = match lg.hard {
        Some(lay) => lay.sources(),
        None => (0..n).collect(),
    };
    let h = cfg.h.unwrap_or(n as u64);
    let sigma = cfg.sigma.unwrap_or(sources.len());
    let r = pde_estimate(g, &PdeParams::new(sources.clone(), h, sigma, eps), cfg.engine())?;
    let mut rep = base_report(cfg, g, eps);
    set_stats(&mut rep, &r.stats);
    rep.params = Params::from([
        ("sources".into(), json!(sources.len())),
        ("h".into(), json!(h)),
        ("sigma".into(), json!(sigma)),
        ("i_max".into(), json!(r.i_max())),
        ("h_prime".into(), json!(r.h_prime)),
    ]);
    let sizes: Vec<u64> = r.lists.iter().map(|l| l.len() as u64).collect();
    rep.table_entries = TableSummary::of(&sizes);
    if let Some(d) = d {
        let c = pde_contract(&r, d, h);
        rep.pairs_checked = c.pairs;
        rep.soundness_violations = c.unsound;
        rep.accuracy_violations = c.inaccurate;
        rep.stretch = StretchSummary::of(c.ratios);
    }
    if let Some(lay) = lg.hard {
        let hs = (lay.h * lay.sigma) as u64;
        rep.hard = Some(HardMetrics {
            h: lay.h,
            sigma: lay.sigma,
            ratio: r.stats.rounds_used as f64 / hs as f64,
            round_bound: 8 * (r.h_prime + sigma as u64) * (r.i_max() as u64 + 1),
        });
    }
    if cfg.dumps {
        let lines: Vec<String> = r
            .dump_lines()
            .iter()
            .map(|l| serde_json::to_string(l).expect("dump line serializes"))
            .collect();
        dumps.push(("pde.jsonl".into(), lines.join("\n") + "\n"));
    }
    Ok(rep)
}

fn run_rtc(
    cfg: &ExperimentConfig,
    g: &WeightedGraph,
    d: Option<&ExactDistances>,
    dumps: &mut Dumps,
) -> Result<MetricsReport, Error> {
    let rc = RtcConfig {
        k: cfg.k,
        eps: cfg.eps,
        c: cfg.constants.c,
        c_t: cfg.constants.c_t,
        seed: cfg.seed,
        engine: cfg.engine(),
    };
    let s = rtc_build(g, &rc)?;
    let mut rep = base_report(cfg, g, s.eps);
    rep.k = Some(cfg.k);
    set_stats(&mut rep, &s.stats);
    rep.params = Params::from([
        ("p".into(), json!(s.p)),
        ("h".into(), json!(s.h)),
        ("skeleton".into(), json!(s.skeleton.len())),
        ("spanner_edges".into(), json!(s.spanner.m())),
        ("max_tree_depth".into(), json!(s.max_tree_depth())),
        ("i_max".into(), json!(s.short.i_max())),
    ]);
    let trees = s.trees_per_node();
    let sizes: Vec<u64> = s
        .short_table_sizes()
        .iter()
        .zip(&trees)
        .map(|(&t, &c)| (t + s.skeleton.len()) as u64 + c)
        .collect();
    rep.table_entries = TableSummary::of(&sizes);
    let mut label_bits = 0;
    let mut wire = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let bytes = s.label(v).encode()?;
        label_bits = label_bits.max(bytes.len() as u32 * 8);
        wire.push(s.label(v).on_wire()?);
    }
    rep.label_bits_max = Some(label_bits);
    let bound = s.stretch_bound();
    if let Some(d) = d {
        let c = route_sweep(g.n(), d, bound, |v, w| {
            let r = s.route(g, v, &wire[w])?;
            Ok((r.weight, s.dist(v, &wire[w])?))
        });
        set_sweep(&mut rep, c, bound);
        set_checks(&mut rep, rtc_lemma_checks(&s, d));
    } else {
        rep.stretch_bound = Some(bound);
    }
    if cfg.dumps {
        dumps.push(("spanner.txt".into(), s.spanner_dump()));
    }
    Ok(rep)
}

fn sweep_compact(s: &CompactScheme, g: &WeightedGraph, d: &ExactDistances) -> Result<SweepCount, Error> {
    let wire = (0..g.n()).map(|w| s.label(w).on_wire()).collect::<Result<Vec<_>, _>>()?;
    Ok(route_sweep(g.n(), d, s.stretch_bound(), |v, w| {
        let r = s.route(g, v, &wire[w])?;
        Ok((r.weight, s.dist(v, &wire[w])?))
    }))
}

fn compact_config(cfg: &ExperimentConfig, g: &WeightedGraph, d: Option<&ExactDistances>) -> Result<CompactConfig, Error> {
    let mut cc = CompactConfig::new(cfg.k, cfg.mode.unwrap_or(Mode::ShortCircuit), cfg.seed);
    cc.eps = cfg.eps;
    cc.c = cfg.constants.c;
    cc.c_t = cfg.constants.c_t;
    cc.l0 = cfg.l0;
    cc.engine = cfg.engine();
    if cc.mode == Mode::Spd {
        let d = d.ok_or_else(|| Error::Config("spd mode needs the exact oracle for SPD".into()))?;
        cc.spd = Some(graph_stats_from(g, d).spd);
    }
    Ok(cc)
}

fn compact_report(
    cfg: &ExperimentConfig,
    g: &WeightedGraph,
    d: Option<&ExactDistances>,
    s: &CompactScheme,
    requested: Option<Mode>,
) -> Result<MetricsReport, Error> {
    let mut rep = base_report(cfg, g, s.eps);
    rep.k = Some(cfg.k);
    rep.mode = requested;
    rep.effective_mode = Some(s.effective_mode);
    set_stats(&mut rep, &s.stats);
    rep.params = Params::from([
        ("l0".into(), json!(s.l0)),
        ("sigma".into(), json!(s.sigma)),
        ("eps_prime".into(), json!(s.eps_prime)),
        ("level_sizes".into(), json!(s.hier.sets.iter().map(|x| x.len()).collect::<Vec<_>>())),
    ]);
    let sizes: Vec<u64> = s.table_entries().iter().map(|&x| x as u64).collect();
    rep.table_entries = TableSummary::of(&sizes);
    let mut label_bits = 0;
    for v in 0..g.n() {
        label_bits = label_bits.max(s.label(v).encode()?.len() as u32 * 8);
    }
    rep.label_bits_max = Some(label_bits);
    let bound = s.stretch_bound();
    if let Some(d) = d {
        let c = sweep_compact(s, g, d)?;
        set_sweep(&mut rep, c, bound);
        set_checks(&mut rep, compact_lemma_checks(s, d));
    } else {
        rep.stretch_bound = Some(bound);
        set_checks(&mut rep, s.checks.clone());
    }
    if s.effective_mode == Mode::Spd {
        rep.warnings.push("SPD taken from the exact oracle (out-of-model knowledge)".to_string());
    }
    Ok(rep)
}

fn run_compact(cfg: &ExperimentConfig, g: &WeightedGraph, d: Option<&ExactDistances>) -> Result<MetricsReport, Error> {
    let p = prepare(g, &compact_config(cfg, g, d)?)?;
    let s = match cfg.mode {
        Some(m) => finish(g, &p, m)?,
        None => {
            // pick the cheaper mode by measured rounds
            let a = finish(g, &p, Mode::BroadcastAll)?;
            let b = if cfg.k == 2 { None } else { Some(finish(g, &p, Mode::ShortCircuit)?) };
            match b {
                Some(b) if b.stats.total_rounds() < a.stats.total_rounds() => b,
                _ => a,
            }
        }
    };
    compact_report(cfg, g, d, &s, cfg.mode)
}

/// Compact reports for several modes sharing one hierarchy and low-level
/// build. `cfg.mode` must not be SPD.
pub fn compact_reports(cfg: &ExperimentConfig, modes: &[Mode]) -> Result<Vec<MetricsReport>, Error> {
    cfg.validate()?;
    if cfg.scheme != Scheme::Compact || cfg.mode == Some(Mode::Spd) || modes.contains(&Mode::Spd) {
        return Err(Error::Config("compact_reports takes a compact config without spd mode".into()));
    }
    let start = Instant::now();
    let lg = cfg.graph.load(cfg.seed, cfg.constants.weight_exp)?;
    let g = &lg.graph;
    let oracle = (g.n() <= cfg.oracle_cap).then(|| exact_distances(g));
    let p = prepare(g, &compact_config(cfg, g, oracle.as_ref())?)?;
    let shared = start.elapsed();
    let mut out = Vec::new();
    for &m in modes {
        let t = Instant::now();
        let s = finish(g, &p, m)?;
        let mut rep = compact_report(cfg, g, oracle.as_ref(), &s, Some(m))?;
        rep.wallclock_ms = (shared + t.elapsed()).as_millis() as u64;
        out.push(rep);
    }
    Ok(out)
}

/// Runs the configured scheme and sweeps it against the exact oracle. Writes
/// `<stem>.json`, `<stem>.csv` and any dumps when `cfg.out` is set.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<MetricsReport, Error> {
    cfg.validate()?;
    let start = Instant::now();
    let lg = cfg.graph.load(cfg.seed, cfg.constants.weight_exp)?;
    let g = &lg.graph;
    let oracle = (g.n() <= cfg.oracle_cap).then(|| exact_distances(g));
    let mut dumps = Dumps::new();
    let mut rep = match cfg.scheme {
        Scheme::Apsp => run_apsp(cfg, g, oracle.as_ref())?,
        Scheme::Pde => run_pde(cfg, &lg, oracle.as_ref(), &mut dumps)?,
        Scheme::Rtc => run_rtc(cfg, g, oracle.as_ref(), &mut dumps)?,
        Scheme::Compact => run_compact(cfg, g, oracle.as_ref())?,
    };
    if oracle.is_none() {
        rep.warnings.push(format!("n = {} exceeds the oracle cap {}; stretch sweep skipped", g.n(), cfg.oracle_cap));
    }
    rep.wallclock_ms = start.elapsed().as_millis() as u64;
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &report_stem(&rep), &rep, &dumps)?;
    }
    Ok(rep)
}

/// PDE on the lower-bound instance with `S` = all pendant sources and hop
/// parameter `h + 1`, the hop length of the paths the instance forces
/// through the bridge.
pub fn cmd_hard(h: usize, sigma: usize, eps: Eps, base: &ExperimentConfig) -> Result<MetricsReport, Error> {
    if h < 2 || sigma < 2 {
        return Err(Error::Config("hard instance needs h, sigma >= 2".into()));
    }
    let mut cfg = base.clone();
    cfg.scheme = Scheme::Pde;
    cfg.graph = GraphSource::Hard { h, sigma };
    cfg.eps = Some(eps);
    cfg.h = Some(h as u64 + 1);
    cfg.sigma = Some(sigma);
    cfg.oracle_cap = usize::MAX;
    cmd_run(&cfg)
}

pub fn report_stem(rep: &MetricsReport) -> String {
    let mut stem = format!("{}-n{}", rep.scheme, rep.n);
    if let Some(k) = rep.k {
        stem += &format!("-k{k}");
    }
    if let Some(m) = rep.effective_mode {
        stem += &format!("-{m}");
    }
    if let Some(hm) = rep.hard {
        stem = format!("hard-h{}-s{}", hm.h, hm.sigma);
    }
    stem + &format!("-seed{}", rep.seed)
}

pub fn write_outputs(dir: &Path, stem: &str, rep: &MetricsReport, dumps: &Dumps) -> Result<(), Error> {
    let io = |e: std::io::Error| Error::Config(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{stem}.json")), rep.to_json() + "\n").map_err(io)?;
    let csv = format!("{}\n{}\n", MetricsReport::CSV_HEADER, rep.csv_row());
    std::fs::write(dir.join(format!("{stem}.csv")), csv).map_err(io)?;
    for (name, body) in dumps {
        std::fs::write(dir.join(format!("{stem}.{name}")), body).map_err(io)?;
    }
    Ok(())
}
