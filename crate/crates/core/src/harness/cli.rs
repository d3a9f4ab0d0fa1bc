use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::SweepConfig;
use super::suite::{run_verification_suite, SuiteOptions};
use super::sweep::run_sweep;
use crate::error::{Error, Result};
use crate::gallery::{self, GallerySpec, PNorm};
use crate::mechanism::{self, Mechanism};
use crate::metric::{FiniteBimetricSpace, Metric, PointId};
use crate::packing::{self, PackingMode};
use crate::scales;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "mplab", version, about = "Scales, packings and private mechanisms on finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check metric axioms (and the ultrametric claim) of a space file.
    Validate { space: PathBuf },
    /// Entropic, diametric, doubling and outer scales at one alpha.
    Scales {
        space: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        json: bool,
    },
    /// Packing number of the whole space (or a subset) at resolution eps.
    Packing {
        space: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "1")]
        metric: u8,
        #[arg(long)]
        greedy: bool,
        /// Comma-separated point ids.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
    },
    /// Build a mechanism; print its summary and one input's distribution or sample.
    Mech {
        space: PathBuf,
        #[command(flatten)]
        mech: MechArgs,
        #[arg(long, default_value_t = 0)]
        input: usize,
        /// Draw one sample with this seed instead of printing the distribution.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustive privacy audit; exit 1 if the claimed alpha is violated.
    Audit {
        space: PathBuf,
        #[command(flatten)]
        mech: MechArgs,
    },
    /// Run an alpha sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the property suite; exit 1 on any failure.
    Verify {
        space: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a gallery space (or cover structure) as JSON.
    Gallery(GalleryArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Kind {
    Exponential,
    #[value(alias = "ultrametric_relaxed")]
    UltrametricRelaxed,
    Constant,
}

#[derive(Args, Debug)]
struct MechArgs {
    #[arg(long, value_enum, default_value = "exponential")]
    kind: Kind,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Net (or relaxation) resolution; defaults to the entropic scale at alpha/3.
    #[arg(long)]
    net_s: Option<f64>,
    /// Output of the constant mechanism.
    #[arg(long, default_value_t = 0)]
    y0: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum GalleryName {
    Line,
    Ball,
    Hamming,
    Baire,
    Geometric,
    Lattice,
    Lipschitz,
    Closure,
    Cover,
}

#[derive(Args, Debug)]
struct GalleryArgs {
    #[arg(value_enum)]
    name: GalleryName,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 9)]
    grid_n: usize,
    #[arg(long, default_value = "inf")]
    p: String,
    #[arg(long = "L", default_value_t = 6)]
    l: usize,
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 3.0)]
    b: f64,
    #[arg(long, default_value_t = 4)]
    denom: usize,
    /// Value step as `num/den`.
    #[arg(long, default_value = "1/3")]
    step: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
}

fn parse_ratio(s: &str) -> Result<(i64, i64)> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let parse = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|e| Error::Domain(format!("bad ratio {s:?}: {e}")))
    };
    Ok((parse(n)?, parse(d)?))
}

fn build_mech(space: &FiniteBimetricSpace, args: &MechArgs) -> Result<Mechanism> {
    match args.kind {
        Kind::Exponential => mechanism::build_exponential(space, args.alpha, args.net_s),
        Kind::UltrametricRelaxed => mechanism::build_ultrametric_relaxed(space, args.alpha, args.net_s),
        Kind::Constant => mechanism::build_constant(space, PointId(args.y0)),
    }
}

fn load(path: &PathBuf) -> Result<FiniteBimetricSpace> {
    let space = FiniteBimetricSpace::read_json(path)?;
    let report = space.validate();
    if !report.is_clean() {
        return Err(Error::Invalid(Box::new(report)));
    }
    Ok(space)
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate { space } => {
            let z = FiniteBimetricSpace::read_json(&space)?;
            let report = z.validate();
            writeln!(out, "points={}", z.len())?;
            writeln!(out, "violations={}", report.violation_count())?;
            for v in &report.violations {
                writeln!(out, "{v:?}")?;
            }
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Scales { space, alpha, json: as_json } => {
            let z = load(&space)?;
            let r = scales::scale_report(&z, alpha)?;
            if as_json {
                writeln!(out, "{}", json(&r)?)?;
            } else {
                writeln!(out, "entropic={}", r.entropic.value)?;
                writeln!(out, "diametric={}", r.diametric.value)?;
                if let Some(d) = &r.doubling {
                    writeln!(out, "doubling={}", d.value)?;
                }
                if let Some(o) = &r.outer {
                    writeln!(out, "outer={}", o.value)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Packing {
            space,
            eps,
            metric,
            greedy,
            subset,
        } => {
            let z = load(&space)?;
            let metric = Metric::from_index(metric)?;
            let subset: Vec<PointId> = match subset {
                Some(ids) => ids.into_iter().map(PointId).collect(),
                None => z.points().collect(),
            };
            for p in &subset {
                z.check_point(*p)?;
            }
            let mode = if greedy { PackingMode::Greedy } else { PackingMode::Exact };
            let r = packing::packing_number(&z, metric, &subset, eps, mode)?;
            writeln!(out, "{}", json(&r)?)?;
            Ok(EXIT_OK)
        }
        Command::Mech {
            space,
            mech,
            input,
            seed,
        } => {
            let z = load(&space)?;
            let m = build_mech(&z, &mech)?;
            z.check_point(PointId(input))?;
            writeln!(out, "{}", json(&m.summary())?)?;
            match seed {
                Some(seed) => writeln!(out, "sample={}", m.sample(PointId(input), seed).0)?,
                None => writeln!(out, "{}", json(&m.output_distribution(PointId(input)))?)?,
            }
            Ok(EXIT_OK)
        }
        Command::Audit { space, mech } => {
            let z = load(&space)?;
            let m = build_mech(&z, &mech)?;
            let audit = mechanism::audit_privacy_at(&m, &z, mech.alpha)?;
            writeln!(out, "{}", json(&audit)?)?;
            Ok(if audit.pass { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Sweep { config } => {
            let cfg = SweepConfig::read(&config)?;
            let curve = run_sweep(&cfg)?;
            if cfg.csv.is_none() && cfg.json.is_none() {
                write!(out, "{}", curve.to_csv_string()?)?;
            }
            let bad = curve.lower_bound_violations();
            for (alpha, name) in &bad {
                writeln!(out, "lower bound violated: {name} at alpha={alpha}")?;
            }
            Ok(if bad.is_empty() { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Verify { space, alphas, seed } => {
            let z = FiniteBimetricSpace::read_json(&space)?;
            let opts = SuiteOptions {
                seed,
                ..Default::default()
            };
            let report = run_verification_suite(&z, &alphas, &opts)?;
            writeln!(out, "{}", json(&report)?)?;
            Ok(if report.all_pass() { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Gallery(g) => {
            let text = if let GalleryName::Cover = g.name {
                gallery::wasserstein_cover(g.d, g.gamma)?.to_json_string()?
            } else {
                let spec = match g.name {
                    GalleryName::Line => GallerySpec::Line { n: g.n },
                    GalleryName::Ball => GallerySpec::GridBall {
                        d: g.d,
                        grid_n: g.grid_n,
                        p: g.p.parse::<PNorm>()?,
                    },
                    GalleryName::Hamming => GallerySpec::Hamming { d: g.d },
                    GalleryName::Baire => GallerySpec::Baire { r: g.r, l: g.l },
                    GalleryName::Geometric => GallerySpec::Geometric { a: g.a, b: g.b, l: g.l },
                    GalleryName::Lattice => GallerySpec::Lattice {
                        d: g.d,
                        n: g.n,
                        denom: g.denom,
                    },
                    GalleryName::Lipschitz => {
                        let (step_num, step_den) = parse_ratio(&g.step)?;
                        if step_den <= 0 {
                            return Err(Error::Domain("step denominator must be positive".into()));
                        }
                        GallerySpec::Lipschitz {
                            grid_n: g.grid_n,
                            step_num,
                            step_den,
                        }
                    }
                    GalleryName::Closure => GallerySpec::Closure { n: g.n, seed: g.seed },
                    GalleryName::Cover => unreachable!(),
                };
                spec.build()?.to_json_string()?
            };
            match g.out {
                Some(p) => std::fs::write(p, text)?,
                None => writeln!(out, "{text}")?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_structural() {
                EXIT_USAGE
            } else {
                EXIT_PROPERTY
            }
        }
    }
}

pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
