//! `ladderlab`: run ladder verifications and convergence sweeps.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 engine error.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ladderlab::factorization::FunctionId;
use ladderlab::hybrid::{zeta_budget, Check, Lab, Pair, Variant, EXACT_SWEEP_TOL};
use ladderlab::report::{emit_report, Format, Report};
use ladderlab::{LabConfig, LabError};

#[derive(Parser)]
#[command(
    name = "ladderlab",
    version,
    about = "Numerical experiments on Jacob's ladder of the zeta function"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat key = value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set c0=1
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Checkpoint file for the Hardy-Littlewood integral
    #[arg(long, global = true, env = "LADDERLAB_CACHE")]
    cache: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for report files; reports go to stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Exact,
    Zeta,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Exact => Variant::Exact,
            VariantArg::Zeta => Variant::Zeta,
        }
    }
}

#[derive(Args, Clone)]
struct Segment {
    /// L values; the base segment is [pi L, pi L + U]
    #[arg(long = "L", value_delimiter = ',', required = true)]
    l: Vec<f64>,
    /// Segment length U
    #[arg(long = "U", conflicts_with = "u_pi")]
    u: Option<f64>,
    /// Segment length as a multiple of pi
    #[arg(long = "U-pi")]
    u_pi: Option<f64>,
}

impl Segment {
    fn u(&self, cfg: &LabConfig) -> f64 {
        match (self.u, self.u_pi) {
            (Some(u), _) => u,
            (None, Some(p)) => p * PI,
            (None, None) => cfg.u_default,
        }
    }
}

#[derive(Args, Clone)]
struct Levels {
    /// Level used for every function
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    k3: Option<usize>,
    #[arg(long)]
    k4: Option<usize>,
}

impl Levels {
    fn four(&self) -> [usize; 4] {
        [self.k1, self.k2, self.k3, self.k4].map(|k| k.unwrap_or(self.k))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Z(t), |zeta(1/2+it)|^2 and theta(t)
    Zeta {
        #[arg(long)]
        t: f64,
    },
    /// phi_1, its derivative, reverse iterates and the gap ratio at T
    Ladder {
        #[arg(long = "T")]
        t: f64,
        #[arg(long = "U")]
        u: Option<f64>,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Node vector for one function
    Nodes {
        #[command(flatten)]
        seg: Segment,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "f1")]
        f: String,
    },
    /// Check one formula at the given heights
    Verify {
        #[command(subcommand)]
        what: Formula,
    },
    /// Sweep one formula over increasing L
    Sweep {
        #[command(subcommand)]
        what: Formula,
    },
    /// Inspect or extend the integral checkpoint store
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Clone)]
enum Formula {
    /// Factorization formula for one of f1..f6
    Lemma {
        #[command(flatten)]
        seg: Segment,
        #[command(flatten)]
        levels: Levels,
        #[arg(long, default_value = "f1")]
        f: String,
        #[arg(long, value_enum, default_value = "exact")]
        variant: VariantArg,
    },
    /// First crossbreeding stage, f1 + f2 or f3 + f4
    Crossbreed {
        #[command(flatten)]
        seg: Segment,
        #[command(flatten)]
        levels: Levels,
        /// Use f3 + f4 instead of f1 + f2
        #[arg(long)]
        quadratic: bool,
        #[arg(long, value_enum, default_value = "exact")]
        variant: VariantArg,
    },
    /// Complete hybrid formula built from f1..f4
    Chf {
        #[command(flatten)]
        seg: Segment,
        #[command(flatten)]
        levels: Levels,
        #[arg(long, value_enum, default_value = "exact")]
        variant: VariantArg,
    },
    /// sin^2 / cos^2 hybrid formula
    Sincos {
        #[command(flatten)]
        seg: Segment,
        #[command(flatten)]
        levels: Levels,
        #[arg(long, value_enum, default_value = "exact")]
        variant: VariantArg,
    },
    /// Secondary complete hybrid formula
    Secondary {
        #[command(flatten)]
        seg: Segment,
        #[command(flatten)]
        levels: Levels,
        #[arg(long, value_enum, default_value = "exact")]
        variant: VariantArg,
    },
}

impl Formula {
    fn parts(&self) -> anyhow::Result<(&Segment, Check, Variant)> {
        Ok(match self {
            Formula::Lemma {
                seg,
                levels,
                f,
                variant,
            } => {
                let f: FunctionId = f.parse()?;
                (
                    seg,
                    Check::Lemma {
                        f,
                        k: levels.k1.unwrap_or(levels.k),
                    },
                    (*variant).into(),
                )
            }
            Formula::Crossbreed {
                seg,
                levels,
                quadratic,
                variant,
            } => {
                let [a, b, ..] = levels.four();
                let pair = if *quadratic {
                    Pair::Quadratic
                } else {
                    Pair::Linear
                };
                (
                    seg,
                    Check::Linear {
                        pair,
                        k_a: a,
                        k_b: b,
                    },
                    (*variant).into(),
                )
            }
            Formula::Chf {
                seg,
                levels,
                variant,
            } => (
                seg,
                Check::Chf {
                    levels: levels.four(),
                },
                (*variant).into(),
            ),
            Formula::Sincos {
                seg,
                levels,
                variant,
            } => {
                let [k5, k6, ..] = levels.four();
                (seg, Check::Sincos { k5, k6 }, (*variant).into())
            }
            Formula::Secondary {
                seg,
                levels,
                variant,
            } => (
                seg,
                Check::Secondary {
                    levels: levels.four(),
                },
                (*variant).into(),
            ),
        })
    }
}

#[derive(Subcommand)]
enum CacheAction {
    /// Show path, fingerprint and coverage
    Info,
    /// Extend the table to cover height T
    Build {
        #[arg(long = "T")]
        t: f64,
    },
}

/// Pass/fail tolerance for a single exact-variant check.
fn exact_tolerance(check: &Check) -> f64 {
    match check {
        Check::Lemma { .. } | Check::Chf { .. } | Check::Linear { .. } => 1e-6,
        Check::Sincos { .. } => 1e-8,
        Check::Secondary { .. } => EXACT_SWEEP_TOL,
    }
}

struct Session {
    cfg: LabConfig,
    cache: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Format,
}

impl Session {
    fn from_global(g: &Global) -> anyhow::Result<Self> {
        let mut cfg = match &g.config {
            Some(p) => LabConfig::load(p)?,
            None => LabConfig::default(),
        };
        let mut problems = Vec::new();
        for o in &g.overrides {
            match o.split_once('=') {
                Some((k, v)) => {
                    if let Err(LabError::InvalidConfig(msg)) = cfg.set(k.trim(), v.trim()) {
                        problems.push(msg);
                    }
                }
                None => problems.push(format!("--set expects KEY=VALUE, got {o:?}")),
            }
        }
        if let Err(LabError::InvalidConfig(msg)) = cfg.validate() {
            problems.push(msg);
        }
        if let Some(0) = g.jobs {
            problems.push("--jobs must be at least 1".into());
        }
        if !problems.is_empty() {
            return Err(LabError::InvalidConfig(problems.join("; ")).into());
        }
        if let Some(n) = g.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("starting worker pool")?;
        }
        Ok(Session {
            cfg,
            cache: g.cache.clone(),
            out: g.out.clone(),
            format: g.format.into(),
        })
    }

    fn lab(&self) -> anyhow::Result<Lab> {
        Ok(self.cfg.build_lab(self.cache.clone())?)
    }

    fn write(&self, lab: &Lab, report: &Report, name: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(format!("{name}.{}", self.format.extension()));
                emit_report(
                    report,
                    self.format,
                    &path,
                    Some(lab.ladder().store().fingerprint()),
                )?;
                // sweeps also get the other format as a mirror
                if let Report::Sweep(_) = report {
                    let other = match self.format {
                        Format::Csv => Format::Json,
                        Format::Json => Format::Csv,
                    };
                    let mirror = dir.join(format!("{name}.{}", other.extension()));
                    emit_report(
                        report,
                        other,
                        &mirror,
                        Some(lab.ladder().store().fingerprint()),
                    )?;
                }
                eprintln!("wrote {}", path.display());
            }
            None => print!("{}", report.render(self.format)?),
        }
        Ok(())
    }
}

fn check_heights(ls: &[f64]) -> anyhow::Result<()> {
    if !ls.iter().all(|&l| l.is_finite() && l >= 4.0) {
        return Err(LabError::InvalidConfig("every L must be finite and at least 4".into()).into());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let session = Session::from_global(&cli.global)?;
    match &cli.command {
        Command::Zeta { t } => {
            let engine = session.cfg.engine()?;
            let z = engine.z_value(*t)?;
            println!("t = {t}");
            println!("theta(t) = {}", engine.theta(*t)?);
            println!("Z(t) = {z}");
            println!("|zeta(1/2+it)|^2 = {}", z * z);
            Ok(true)
        }
        Command::Ladder { t, u, k } => {
            let lab = session.lab()?;
            let m = lab.ladder();
            let u = u.unwrap_or(session.cfg.u_default);
            println!("T = {t}");
            println!("I(T) = {}", m.hl_integral(*t)?);
            println!("phi1(T) = {}", m.phi1(*t)?);
            println!("phi1'(T) = {}", m.phi1_prime(*t)?);
            for c in &m.disconnected_set(*t, u, *k)?.components {
                println!("level {}: [{}, {}]", c.level, c.lo, c.hi);
            }
            if *k >= 1 {
                println!("gap ratio (r = 1) = {}", m.gap_ratio(*t, u, 1)?);
            }
            Ok(true)
        }
        Command::Nodes { seg, k, f } => {
            check_heights(&seg.l)?;
            let id: FunctionId = f.parse()?;
            let lab = session.lab()?;
            let u = seg.u(&session.cfg);
            let mut nodes = Vec::new();
            for &l in &seg.l {
                nodes.push((*lab.nodes(id, l, u, *k)?).clone());
            }
            println!("{}", serde_json::to_string_pretty(&nodes)?);
            Ok(true)
        }
        Command::Verify { what } => verify(&session, what),
        Command::Sweep { what } => sweep(&session, what),
        Command::Cache { action } => {
            let lab = session.lab()?;
            let store = lab.ladder().store();
            if let CacheAction::Build { t } = action {
                store.ensure(*t)?;
            }
            let status = store.status();
            println!(
                "path = {}",
                store
                    .path()
                    .map_or("(in memory)".into(), |p: &Path| p.display().to_string())
            );
            println!("fingerprint = {}", store.fingerprint());
            println!("rows = {}", store.snapshot().rows.len());
            println!("covered to T = {}", store.covered_to());
            if let Some(e) = status.persist_error {
                println!("warning: {e}");
            }
            if let Some(d) = status.discarded {
                println!("discarded previous table: {d}");
            }
            Ok(true)
        }
    }
}

fn verify(session: &Session, what: &Formula) -> anyhow::Result<bool> {
    let (seg, check, variant) = what.parts()?;
    check_heights(&seg.l)?;
    let u = seg.u(&session.cfg);
    if !(u > 0.0 && u < PI / 2.0) {
        return Err(LabError::InvalidConfig(format!("U must lie in (0, pi/2), got {u}")).into());
    }
    let lab = session.lab()?;
    let mut pass = true;
    let report = if let Check::Lemma { f, k } = check {
        let mut rows = Vec::new();
        for &l in &seg.l {
            let r = lab.lemma(f, l, u, k)?;
            let dev = match variant {
                Variant::Exact => r.residual_exact.abs(),
                Variant::Zeta => r.deviation_zeta.abs(),
            };
            pass &= within(variant, &check, dev, l, &session.cfg);
            rows.push(r);
        }
        Report::Factorization(rows)
    } else {
        let mut rows = Vec::new();
        for &l in &seg.l {
            let r = lab.run(&check, l, u, variant)?;
            pass &= within(variant, &check, r.deviation(), l, &session.cfg);
            rows.push(r);
        }
        Report::Hybrid(rows)
    };
    session.write(&lab, &report, &format!("verify-{}-{variant}", check.name()))?;
    eprintln!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn within(variant: Variant, check: &Check, dev: f64, l: f64, cfg: &LabConfig) -> bool {
    match variant {
        Variant::Exact => dev <= exact_tolerance(check),
        Variant::Zeta => dev <= zeta_budget(cfg.kappa, l),
    }
}

fn sweep(session: &Session, what: &Formula) -> anyhow::Result<bool> {
    let (seg, check, variant) = what.parts()?;
    check_heights(&seg.l)?;
    let u = seg.u(&session.cfg);
    let lab = session.lab()?;
    let plan = session.cfg.sweep_plan(seg.l.clone());
    let result = lab.sweep(&check, &plan, u, variant)?;
    let verdict = result.verdict;
    for m in &result.decade_medians {
        eprintln!(
            "decade {} (n = {}): median |ratio - 1| = {:e}",
            m.decade, m.count, m.median
        );
    }
    session.write(
        &lab,
        &Report::Sweep(result),
        &format!("sweep-{}-{variant}", check.name()),
    )?;
    eprintln!("{verdict}");
    Ok(verdict == ladderlab::hybrid::Verdict::Pass)
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<LabError>() {
        Some(e) if e.is_usage() => 2,
        Some(_) => 3,
        None => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
