use super::verify::{cmd_verify, failed_invariants};
use super::*;
use crate::graph::path_graph;
use crate::oracle::exact_distances;
use crate::pde::{pde_estimate, PdeParams};

fn temp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pderoute-harness-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn apsp_on_p3() {
    let dir = temp_dir("p3");
    let path = dir.join("p3.txt");
    std::fs::write(&path, path_graph(&[2, 3]).to_edge_list()).unwrap();
    let mut cfg = ExperimentConfig::new(Scheme::Apsp, GraphSource::File { path }, 0);
    cfg.eps = Some(Eps::reciprocal(1));
    let rep = cmd_run(&cfg).unwrap();
    assert_eq!((rep.n, rep.pairs_checked), (3, 6));
    assert!(rep.stretch.unwrap().max <= 2.0);
    assert!(rep.stretch.unwrap().max >= 1.0);
    assert_eq!(rep.soundness_violations, 0);
    assert_eq!(rep.accuracy_violations, 0);
}

#[test]
fn compact_report_has_table_entries_and_is_reproducible() {
    let dir = temp_dir("compact");
    let mut cfg = ExperimentConfig::new(Scheme::Compact, "random:40".parse().unwrap(), 3);
    cfg.out = Some(dir.clone());
    let a = cmd_run(&cfg).unwrap();
    assert!(a.table_entries.max > 0);
    assert_eq!(a.effective_mode, Some(Mode::BroadcastAll));
    assert_eq!(a.routes_delivered, Some(40 * 39));
    let b = cmd_run(&cfg).unwrap();
    assert_eq!(a.canonical_json(), b.canonical_json());
    let stem = report_stem(&a);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap()).unwrap();
    assert!(json["table_entries"]["max"].as_u64().unwrap() > 0);
    assert_eq!(json["schema"], REPORT_SCHEMA);
    let csv = std::fs::read_to_string(dir.join(format!("{stem}.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn compact_modes_share_one_build() {
    let cfg = ExperimentConfig { k: 3, ..ExperimentConfig::new(Scheme::Compact, "random:48".parse().unwrap(), 2) };
    let reps = compact_reports(&cfg, &[Mode::BroadcastAll, Mode::ShortCircuit]).unwrap();
    assert_eq!(reps.len(), 2);
    assert_eq!(reps[0].params["level_sizes"], reps[1].params["level_sizes"]);
    for r in &reps {
        assert!(failed_invariants(r, 0).is_empty(), "{:?}", failed_invariants(r, 0));
    }
    let spd = ExperimentConfig { mode: Some(Mode::Spd), ..cfg.clone() };
    assert!(compact_reports(&spd, &[Mode::BroadcastAll]).is_err());
    let rep = cmd_run(&spd).unwrap();
    assert!(rep.warnings.iter().any(|w| w.contains("out-of-model")));
}

#[test]
fn rtc_run_and_spanner_dump() {
    let dir = temp_dir("rtc");
    let mut cfg = ExperimentConfig::new(Scheme::Rtc, "random:40".parse().unwrap(), 1);
    cfg.out = Some(dir.clone());
    cfg.dumps = true;
    let rep = cmd_run(&cfg).unwrap();
    assert_eq!(rep.label_bits_max, Some(crate::rtc::RTC_LABEL_BITS));
    assert!(failed_invariants(&rep, 0).is_empty());
    let dump = std::fs::read_to_string(dir.join(format!("{}.spanner.txt", report_stem(&rep)))).unwrap();
    assert!(dump.starts_with("# local id"));
}

#[test]
fn pde_dump_is_json_lines() {
    let dir = temp_dir("pde");
    let mut cfg = ExperimentConfig::new(Scheme::Pde, "random:20".parse().unwrap(), 4);
    cfg.out = Some(dir.clone());
    cfg.dumps = true;
    cfg.h = Some(3);
    cfg.sigma = Some(4);
    let rep = cmd_run(&cfg).unwrap();
    assert_eq!(rep.table_entries.max, 4);
    let body = std::fs::read_to_string(dir.join(format!("{}.pde.jsonl", report_stem(&rep)))).unwrap();
    for line in body.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["v", "s", "wdtilde_num", "wdtilde_den", "level", "next_hop"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
}

#[test]
fn hard_sanity_run() {
    let base = ExperimentConfig::new(Scheme::Pde, "random:2".parse().unwrap(), 0);
    let rep = cmd_hard(2, 2, Eps::reciprocal(1), &base).unwrap();
    let hm = rep.hard.unwrap();
    assert_eq!((hm.h, hm.sigma, rep.n), (2, 2, 8));
    assert_eq!(rep.soundness_violations + rep.accuracy_violations, 0);
    assert!(rep.rounds_used <= hm.round_bound);
    assert!(cmd_hard(1, 2, Eps::reciprocal(1), &base).is_err());
}

#[test]
fn hard_ratio_drops_from_8_to_16() {
    let base = ExperimentConfig::new(Scheme::Pde, "random:2".parse().unwrap(), 0);
    let a = cmd_hard(8, 8, Eps::reciprocal(1), &base).unwrap();
    let b = cmd_hard(16, 16, Eps::reciprocal(1), &base).unwrap();
    assert!(b.hard.unwrap().ratio < a.hard.unwrap().ratio);
    assert_eq!(b.soundness_violations + b.accuracy_violations, 0);
}

#[test]
fn verify_suite_passes_on_small_graphs() {
    for scheme in [Scheme::Apsp, Scheme::Pde, Scheme::Rtc, Scheme::Compact] {
        let cfg = ExperimentConfig::new(scheme, "random:32".parse().unwrap(), 0);
        let s = cmd_verify(&cfg, &[1, 2], 0).unwrap();
        assert!(s.passed, "{scheme}: {:?}", s.failures);
        assert_eq!(s.reports.len(), 2);
    }
}

#[test]
fn corrupted_table_fails_named_invariant() {
    let g = path_graph(&[5, 5, 5]);
    let mut r = pde_estimate(&g, &PdeParams::new(vec![0], 3, 1, Eps::reciprocal(1)), Default::default()).unwrap();
    // claim node 3 is one unit from the source
    r.tables[3].get_mut(&0).unwrap().hops = 1;
    let c = pde_contract(&r, &exact_distances(&g), 3);
    assert_eq!(c.unsound, 1);
    let cfg = ExperimentConfig::new(Scheme::Pde, "random:8".parse().unwrap(), 0);
    let mut rep = cmd_run(&cfg).unwrap();
    rep.soundness_violations = c.unsound;
    let f = failed_invariants(&rep, 0);
    assert_eq!(f.len(), 1);
    assert!(f[0].starts_with("soundness"));
}

#[test]
fn config_validation() {
    assert!("0".parse::<Eps>().is_err());
    assert!("0/3".parse::<Eps>().is_err());
    assert!("3/2".parse::<Eps>().is_err());
    let ok = ExperimentConfig::new(Scheme::Compact, "random:16".parse().unwrap(), 0);
    assert!(ok.validate().is_ok());
    assert!(ExperimentConfig { k: 1, ..ok.clone() }.validate().is_err());
    assert!(ExperimentConfig { l0: Some(2), ..ok.clone() }.validate().is_err());
    let mut bad = ok.clone();
    bad.constants.c = 0.0;
    assert!(bad.validate().is_err());
    assert!(ExperimentConfig { graph: GraphSource::Random { n: 1, degree: 2.0 }, ..ok }.validate().is_err());
}

#[test]
fn parsing() {
    assert_eq!("random:64".parse::<GraphSource>().unwrap(), GraphSource::Random { n: 64, degree: 2.0 });
    assert_eq!("random:64:3.5".parse::<GraphSource>().unwrap(), GraphSource::Random { n: 64, degree: 3.5 });
    assert_eq!("hard:4:5".parse::<GraphSource>().unwrap(), GraphSource::Hard { h: 4, sigma: 5 });
    assert!("hard:4".parse::<GraphSource>().is_err());
    assert_eq!(
        "g.txt".parse::<GraphSource>().unwrap(),
        GraphSource::File { path: PathBuf::from("g.txt") }
    );
    let mut c = Constants::default();
    c.set("c=2.5").unwrap();
    c.set("c_B=6").unwrap();
    c.set("C=2").unwrap();
    assert_eq!((c.c, c.c_b, c.weight_exp), (2.5, 6, 2));
    assert!(c.set("q=1").is_err());
    assert!(c.set("c").is_err());
    assert_eq!("compact".parse::<Scheme>().unwrap(), Scheme::Compact);
}

#[test]
fn stretch_percentiles() {
    let s = StretchSummary::of((1..=200).map(|i| i as f64).collect()).unwrap();
    assert_eq!((s.max, s.p99), (200.0, 198.0));
    assert!((s.mean - 100.5).abs() < 1e-12);
    assert!(StretchSummary::of(vec![]).is_none());
    assert_eq!(TableSummary::of(&[1, 2, 6]), TableSummary { max: 6, mean: 3.0 });
}
