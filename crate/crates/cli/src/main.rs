use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pderoute::compact::Mode;
use pderoute::harness::verify::{cmd_verify, run_criteria, CRITERIA};
use pderoute::harness::{
    cmd_hard, cmd_run, report_stem, write_outputs, Constants, ExperimentConfig, GraphSource, MetricsReport, Scheme,
};
use pderoute::oracle::{graph_stats, StatsReport};
use pderoute::Eps;

#[derive(Parser)]
#[command(name = "pderoute", version, about = "CONGEST simulator for partial distance estimation and routing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated graph in the edge-list format.
    Gen {
        /// random:N[:DEGREE] or hard:H:SIGMA.
        #[arg(long)]
        graph: GraphSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constant override such as C=3; repeatable.
        #[arg(long = "const", value_name = "NAME=VALUE")]
        consts: Vec<String>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scheme and sweep it against the exact oracle.
    Run(RunArgs),
    /// PDE on the lower-bound instance.
    Hard {
        #[arg(long)]
        h: usize,
        #[arg(long)]
        sigma: usize,
        #[arg(long, default_value = "1")]
        eps: Eps,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Invariant suite for a configuration, or acceptance presets.
    Verify {
        /// Acceptance criterion to run (1-8); repeatable. Runs the invariant
        /// suite for the configuration when absent.
        #[arg(long)]
        preset: Vec<u32>,
        /// Run every acceptance criterion.
        #[arg(long, conflicts_with = "preset")]
        all: bool,
        /// Seeds for the invariant suite, e.g. 1..5 or 1,4,9.
        #[arg(long, default_value = "1..5")]
        seeds: String,
        /// Lemma failures tolerated before the suite fails.
        #[arg(long, default_value_t = 0)]
        whp_threshold: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Hop diameter, weighted diameter and SPD of a graph.
    Stats {
        #[arg(long)]
        graph: GraphSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "const", value_name = "NAME=VALUE")]
        consts: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutArgs {
    /// Directory for reports.
    #[arg(long, env = "PDEROUTE_OUT")]
    out: Option<PathBuf>,
    /// Format printed to stdout.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// random:N[:DEGREE], hard:H:SIGMA or an edge-list file.
    #[arg(long, default_value = "random:64")]
    graph: GraphSource,
    #[arg(long, default_value = "compact")]
    scheme: Scheme,
    /// Rational eps as P/Q; scheme default when absent.
    #[arg(long)]
    eps: Option<Eps>,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long)]
    l0: Option<u32>,
    /// spd, short-circuit or broadcast-all; cheapest by measured rounds when absent.
    #[arg(long)]
    mode: Option<Mode>,
    /// PDE hop parameter.
    #[arg(long)]
    h: Option<u64>,
    /// PDE list length.
    #[arg(long)]
    sigma: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Constant override such as c=4, c_B=4, c_L=32, c_T=4, C=3; repeatable.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    consts: Vec<String>,
    /// Skip the oracle sweep above this many nodes.
    #[arg(long, default_value_t = pderoute::harness::ORACLE_CAP)]
    oracle_cap: usize,
    /// Also write the PDE table (JSON lines) or the RTC spanner.
    #[arg(long)]
    dump: bool,
    #[command(flatten)]
    out: OutArgs,
}

fn constants(list: &[String]) -> Result<Constants> {
    let mut c = Constants::default();
    for a in list {
        c.set(a).map_err(anyhow::Error::msg)?;
    }
    Ok(c)
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.scheme, self.graph.clone(), self.seed);
        cfg.eps = self.eps;
        cfg.k = self.k;
        cfg.l0 = self.l0;
        cfg.mode = self.mode;
        cfg.h = self.h;
        cfg.sigma = self.sigma;
        if let Some(m) = self.max_rounds {
            cfg.max_rounds = m;
        }
        cfg.constants = constants(&self.consts)?;
        cfg.oracle_cap = self.oracle_cap;
        cfg.out = self.out.out.clone();
        cfg.dumps = self.dump;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(rep: &MetricsReport, format: Format) {
    match format {
        Format::Json => println!("{}", rep.to_json()),
        Format::Csv => println!("{}\n{}", MetricsReport::CSV_HEADER, rep.csv_row()),
    }
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty seed range {s}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().with_context(|| format!("seed {x:?}"))).collect()
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Gen { graph, seed, consts, out } => {
            let g = graph.load(seed, constants(&consts)?.weight_exp)?.graph;
            match out {
                Some(p) => std::fs::write(&p, g.to_edge_list()).with_context(|| p.display().to_string())?,
                None => print!("{}", g.to_edge_list()),
            }
        }
        Cmd::Run(args) => {
            let rep = cmd_run(&args.config()?)?;
            print_report(&rep, args.out.format);
        }
        Cmd::Hard { h, sigma, eps, out } => {
            let base = ExperimentConfig::new(Scheme::Pde, GraphSource::Hard { h, sigma }, 0);
            let rep = cmd_hard(h, sigma, eps, &base)?;
            if let Some(dir) = &out.out {
                write_outputs(dir, &report_stem(&rep), &rep, &Vec::new())?;
            }
            print_report(&rep, out.format);
        }
        Cmd::Verify { preset, all, seeds, whp_threshold, run } => {
            let ids: Vec<u32> = if all { CRITERIA.to_vec() } else { preset };
            if !ids.is_empty() {
                if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(i)) {
                    bail!("no criterion {bad}; presets are 1-8");
                }
                let results = run_criteria(&ids, |c| println!("{}", c.line()))?;
                if let Some(dir) = &run.out.out {
                    std::fs::create_dir_all(dir)?;
                    for c in &results {
                        std::fs::write(dir.join(format!("criterion-{}.json", c.id)), c.to_json() + "\n")?;
                    }
                }
                return Ok(if results.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE });
            }
            let cfg = run.config()?;
            let summary = cmd_verify(&cfg, &parse_seeds(&seeds)?, whp_threshold)?;
            for rep in &summary.reports {
                if let Some(dir) = &cfg.out {
                    write_outputs(dir, &report_stem(rep), rep, &Vec::new())?;
                }
            }
            for f in &summary.failures {
                println!("FAIL {f}");
            }
            println!(
                "{} {} on {} seeds",
                if summary.passed { "PASS" } else { "FAIL" },
                cfg.scheme,
                summary.reports.len()
            );
            return Ok(if summary.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Cmd::Stats { graph, seed, consts } => {
            let g = graph.load(seed, constants(&consts)?.weight_exp)?.graph;
            let rep = StatsReport { n: g.n(), m: g.m(), stats: graph_stats(&g) };
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
