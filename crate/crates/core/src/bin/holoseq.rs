use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use holoseq::classify::{classify, osgood_estimate, Thresholds};
use holoseq::geometry::DEFAULT_DENSITY;
use holoseq::harness::{self, load_domain, read_json_arg, Command, RunConfig, SeqSpec};
use holoseq::spaces::{hv_norm, metric_big_d, metric_dtilde, metric_d, ContextConfig, MetricContext};
use holoseq::witness::{WitnessConfig, WitnessKind, WitnessSequence};
use holoseq::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "holoseq", version, about = "Witness sequences for modes of convergence of holomorphic functions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build one witness sequence and write its functions and certificates.
    Witness {
        #[arg(long, default_value = "sp-not-suc")]
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a sequence given as JSON (inline or a file).
    Classify {
        #[arg(long)]
        seq: String,
        /// Cell size for the Osgood estimate; omitted means no estimate.
        #[arg(long)]
        osgood: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted sup norm of an entire function, e.g. `z^3` or JSON.
    Norms {
        #[arg(long, default_value = "z^3")]
        phi: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two sequences (`d` compares members at `--index`).
    Metric {
        #[arg(long, value_enum)]
        kind: MetricKind,
        /// Context JSON: {"domain": ..., "j": 8, "density": 8}.
        #[arg(long)]
        ctx: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 1)]
        index: usize,
        #[arg(long, default_value_t = 5)]
        n_trunc: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a checked command and write a report.
    Run {
        command: String,
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value = "z^3")]
        phi: String,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    #[value(name = "d")]
    D,
    Dtilde,
    #[value(name = "D")]
    BigD,
}

#[derive(Args)]
struct Common {
    /// `plane`, `disc`, inline JSON or a JSON file.
    #[arg(long, default_value = "plane")]
    domain: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    n_max: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    density: f64,
    /// Polynomial as a JSON term list.
    #[arg(long)]
    poly: Option<String>,
    /// Thresholds JSON, inline or a file.
    #[arg(long)]
    thresholds: Option<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            domain: self.domain.clone(),
            c: self.c,
            gamma: self.gamma,
            n_max: self.n_max,
            seed: self.seed,
            density: self.density,
            poly: self.poly.clone(),
            thresholds: match &self.thresholds {
                Some(t) => read_json_arg::<Thresholds>(t)?,
                None => Thresholds::default(),
            },
            out: self.out.clone(),
            ..RunConfig::default()
        })
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, s)?,
        None => println!("{s}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("holoseq: {e}");
            match e {
                Error::Config(_) | Error::Rejected(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn execute(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Witness { kind, common } => {
            let cfg = common.config()?;
            cfg.validate()?;
            let domain = load_domain(&cfg.domain)?;
            let kind = WitnessKind::parse(&kind)?;
            let wc = WitnessConfig { gamma: cfg.gamma, density: cfg.density, n_max: cfg.n_max, ..WitnessConfig::default() };
            let seq = WitnessSequence::new(kind, &domain, cfg.c, wc)?;
            let ns: Vec<usize> = (1..=cfg.n_max).collect();
            seq.prefetch(&ns)?;
            let members = ns.iter().map(|&n| seq.member(n)).collect::<Result<Vec<_>>>()?;
            let passed = members.iter().all(|m| m.passed()) && seq.schedule().map_or(true, |s| s.all_hold());
            #[derive(Serialize)]
            struct Out<'a> {
                kind: WitnessKind,
                c: f64,
                schedule: Option<&'a holoseq::witness::RadiiSchedule>,
                members: Vec<&'a holoseq::witness::WitnessMember>,
            }
            let out = Out { kind, c: cfg.c, schedule: seq.schedule(), members: members.iter().map(|m| m.as_ref()).collect() };
            emit(&out, cfg.out.as_ref())?;
            Ok(passed)
        }
        Cmd::Classify { seq, osgood, common } => {
            let cfg = common.config()?;
            cfg.validate()?;
            let domain = load_domain(&cfg.domain)?;
            let spec: SeqSpec = read_json_arg(&seq)?;
            let wc = WitnessConfig { gamma: cfg.gamma, density: cfg.density, n_max: cfg.n_max, ..WitnessConfig::default() };
            let s = spec.build(&domain, &wc)?;
            let verdict = classify(&s, &domain, cfg.n_max, &cfg.thresholds);
            match &cfg.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    emit(&verdict, Some(&dir.join("verdict.json")))?;
                    if let Some(cell) = osgood {
                        let o = osgood_estimate(&s, &domain, cfg.n_max, cell, 2.0, &cfg.thresholds)?;
                        std::fs::write(dir.join("osgood.svg"), o.to_svg())?;
                        std::fs::write(dir.join("osgood.csv"), o.to_csv())?;
                    }
                }
                None => emit(&verdict, None)?,
            }
            Ok(true)
        }
        Cmd::Norms { phi, out } => {
            let phi = holoseq::algebra::Entire::parse(&phi)?;
            let rep = hv_norm(&phi)?;
            emit(&rep, out.as_ref())?;
            Ok(rep.certified)
        }
        Cmd::Metric { kind, ctx, f, g, index, n_trunc, out } => {
            let cc: ContextConfig = read_json_arg(&ctx)?;
            let mc = MetricContext::from_config(&cc)?;
            let wc = WitnessConfig { n_max: n_trunc.max(index), ..WitnessConfig::default() };
            let fs = read_json_arg::<SeqSpec>(&f)?.build(&cc.domain, &wc)?;
            let gs = read_json_arg::<SeqSpec>(&g)?.build(&cc.domain, &wc)?;
            use holoseq::sequence::Sequence;
            let v = match kind {
                MetricKind::D => metric_d(&|z| fs.eval_many(index, z), &|z| gs.eval_many(index, z), &mc)?,
                MetricKind::Dtilde => metric_dtilde(&fs, &gs, &mc, n_trunc)?,
                MetricKind::BigD => metric_big_d(&fs, &gs, &mc, n_trunc)?,
            };
            emit(&v, out.as_ref())?;
            Ok(true)
        }
        Cmd::Run { command, seq, phi, eps, k, common } => {
            let command = Command::parse(&command)?;
            let cfg = RunConfig { seq, phi, eps, k, ..common.config()? };
            let report = harness::run(command, &cfg)?;
            for c in &report.certificates {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(report.passed())
        }
    }
}
