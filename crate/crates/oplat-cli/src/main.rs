//! Command-line surface: suite runner, instance generators, table checks and
//! the per-pair projection report.
//!
//! Exit codes: 0 pass, 1 assertion failure, 2 usage error.

mod gen;
mod report;
mod suite;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;

use gen::{GenParams, InstanceKind};
use suite::{run_suite, SuiteConfig, SuiteName};

#[derive(Parser)]
#[command(
    name = "oplat",
    about = "Verification suites for finite-dimensional lattice completions, Jordan squaring operations and projection-determined maps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Base seed for every randomized family.
    #[arg(long, env = "OPLAT_SEED", default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance override.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Cap on per-family instance counts (0 keeps the documented defaults).
    #[arg(long, default_value_t = 0)]
    count: usize,
    /// Cap on matrix dimensions / poset sizes.
    #[arg(long, default_value_t = 6)]
    dims: usize,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and emit its report.
    Run {
        /// lattice | jordan | projections | pmap | poset | all
        suite: String,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Generate a reproducible instance in the interchange format.
    Gen {
        /// basic-element | projection-pair | pmap-table | hermitian | poset
        kind: String,
        #[command(flatten)]
        opts: CommonOpts,
        /// Spectrum size for tuple instances.
        #[arg(long, default_value_t = 3)]
        spectrum: usize,
        /// Generator count for basic elements.
        #[arg(long, default_value_t = 2)]
        gens: usize,
        /// Principal angle for projection pairs.
        #[arg(long, default_value_t = 0.3)]
        angle: f64,
        /// Boolean lattice order for tables.
        #[arg(long, default_value_t = 3)]
        lattice: usize,
        /// Poset size.
        #[arg(long, default_value_t = 5)]
        size: usize,
    },
    /// Projection-map table utilities.
    Pmap {
        #[command(subcommand)]
        cmd: PmapCommand,
    },
    /// Projection-pair batteries.
    Projections {
        #[command(subcommand)]
        cmd: ProjectionsCommand,
    },
}

#[derive(Subcommand)]
enum PmapCommand {
    /// Check decorations of a table file, emitting a witness report.
    Check {
        #[arg(long)]
        table: PathBuf,
        /// Comma-separated decorations: o,co,c,a,aw,av
        #[arg(long, default_value = "o,c,a")]
        decorations: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ProjectionsCommand {
    /// Emit the per-pair CSV: angle spectrum, iterations, gap to the oracle.
    Pairs {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, env = "OPLAT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.write_all(b"\n")
        }
    }
}

fn timestamp() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { suite, opts } => {
            let name: SuiteName = suite.parse().map_err(|e: String| e)?;
            let cfg = SuiteConfig {
                seed: opts.seed,
                tolerance: opts.tol,
                count: opts.count,
                max_dim: opts.dims,
                timestamp: timestamp(),
            };
            let report = run_suite(name, &cfg).map_err(|e| e.to_string())?;
            let content = match opts.format.as_str() {
                "json" => report.to_json(),
                "csv" => report.to_csv(),
                other => return Err(format!("unknown format {other}")),
            };
            emit(&opts.out, &content).map_err(|e| e.to_string())?;
            eprintln!(
                "suite {}: {}/{} checks passed",
                report.header.suite,
                report.total - report.failed,
                report.total
            );
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Gen {
            kind,
            opts,
            spectrum,
            gens,
            angle,
            lattice,
            size,
        } => {
            let kind: InstanceKind = kind.parse().map_err(|e: String| e)?;
            let params = GenParams {
                spectrum,
                gens,
                dim: opts.dims.max(2),
                angle,
                lattice,
                size,
            };
            let value = gen::gen_instance(kind, &params, opts.seed).map_err(|e| e.to_string())?;
            emit(
                &opts.out,
                &serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Pmap { cmd } => match cmd {
            PmapCommand::Check {
                table,
                decorations,
                out,
            } => {
                let raw = std::fs::read_to_string(&table).map_err(|e| e.to_string())?;
                let value: serde_json::Value =
                    serde_json::from_str(&raw).map_err(|e| e.to_string())?;
                let t = oplat_core::io::pmap_table_from_json(&value).map_err(|e| e.to_string())?;
                let pairs: Vec<(usize, usize)> = (0..t.domain.len())
                    .flat_map(|i| (0..t.domain.len()).map(move |j| (i, j)))
                    .collect();
                use oplat_core::pmap::{check_decoration, Decoration, DecorationContext};
                let ctx = DecorationContext::default();
                let mut results = Vec::new();
                let mut all_pass = true;
                for code in decorations.split(',') {
                    let d = match code.trim() {
                        "o" => Decoration::O,
                        "co" => Decoration::Co,
                        "c" => Decoration::C,
                        "a" => Decoration::A,
                        "aw" => Decoration::AWedge,
                        "av" => Decoration::AVee,
                        other => return Err(format!("unknown decoration {other}")),
                    };
                    let rep = check_decoration(&t, d, &pairs, &ctx).map_err(|e| e.to_string())?;
                    all_pass &= rep.passed();
                    results.push(serde_json::json!({
                        "decoration": code.trim(),
                        "checked": rep.checked,
                        "pass": rep.passed(),
                        "failures": rep
                            .failures
                            .iter()
                            .map(|f| serde_json::json!({
                                "pair": [f.pair.0, f.pair.1],
                                "detail": f.detail,
                                "lhs": oplat_core::io::element_to_json(&t.domain[f.pair.0].base),
                                "rhs": oplat_core::io::element_to_json(&t.domain[f.pair.1].base),
                            }))
                            .collect::<Vec<_>>(),
                    }));
                }
                let content = serde_json::to_string_pretty(&serde_json::json!({
                    "table": table.display().to_string(),
                    "results": results,
                }))
                .map_err(|e| e.to_string())?;
                emit(&out, &content).map_err(|e| e.to_string())?;
                Ok(if all_pass { 0 } else { 1 })
            }
        },
        Command::Projections { cmd } => match cmd {
            ProjectionsCommand::Pairs {
                dim,
                count,
                seed,
                out,
            } => {
                use oplat_core::algebra::AlgebraHandle;
                use oplat_core::projection::{
                    principal_angles, random_projection, wedge_exact, wedge_iterative,
                };
                let alg = AlgebraHandle::matrix(dim);
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut csv = String::from("pair,angles,iterations,gap_to_oracle\n");
                let mut worst = 0.0f64;
                for i in 0..count {
                    let p = random_projection(alg, 1 + rng.random_range(0..dim - 1), &mut rng)
                        .map_err(|e| e.to_string())?;
                    let q = random_projection(alg, 1 + rng.random_range(0..dim - 1), &mut rng)
                        .map_err(|e| e.to_string())?;
                    let exact = wedge_exact(&p, &q).map_err(|e| e.to_string())?;
                    let it =
                        wedge_iterative(&p, &q, 1e-11, 2_000_000).map_err(|e| e.to_string())?;
                    let gap = it.projection.base.distance(&exact.base);
                    worst = worst.max(gap);
                    let angles: Vec<String> = principal_angles(&p, &q)
                        .iter()
                        .map(|a| format!("{a:.6}"))
                        .collect();
                    csv.push_str(&format!(
                        "{i},{},{},{gap:e}\n",
                        angles.join(";"),
                        it.iterations
                    ));
                }
                emit(&out, &csv).map_err(|e| e.to_string())?;
                eprintln!("{count} pairs, worst oracle gap {worst:e}");
                Ok(if worst <= 1e-8 { 0 } else { 1 })
            }
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
