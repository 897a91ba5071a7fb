use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use cosob::checks::{run_scenario, CheckContext};
use cosob::report;
use cosob::scenario::{Check, FamilySpec, Scenario};
use cosob_core::energy::{DomainKind, QuadratureSpec};
use std::path::PathBuf;
use std::process::ExitCode;

/// Verification harness for the intrinsic Sobolev calculus library.
#[derive(Parser)]
#[command(name = "cosob", version, about)]
struct Cli {
    /// Worker threads (default: COSOB_THREADS or the number of logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Fill the runtime_ms report column (timed reports are not
    /// byte-reproducible across runs).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write JSON/CSV reports.
    Run {
        scenario: PathBuf,
        /// Output directory for report.json / report.csv (defaults to the
        /// scenario's `out` field, then ./cosob-reports).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full acceptance suite.
    Verify {
        #[arg(long, default_value = "cosob-reports")]
        out: PathBuf,
        /// Test hook: flip the Christoffel sign inside the Sasaki horizontal
        /// lift; the Sasaki identity criterion must then fail.
        #[arg(long, hide = true)]
        inject_gamma_flip: bool,
    },
    /// Submultiplicativity experiment over random double-morphism pairs.
    NormCompose {
        #[arg(long, default_value_t = 1000)]
        random: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// One energy integral of a gallery family.
    Energy {
        #[arg(long)]
        family: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
        /// Derivative order j of the integrand |D^j_K u|^q.
        #[arg(long)]
        order: usize,
        /// Exponent q.
        #[arg(long)]
        exponent: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 12)]
        annuli: usize,
        #[arg(long, default_value_t = 6)]
        radial_nodes: usize,
        #[arg(long, default_value_t = 8)]
        angular_nodes: usize,
    },
}

fn thread_count(cli: &Cli) -> usize {
    cli.threads
        .or_else(|| {
            std::env::var("COSOB_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = thread_count(&cli);
    if rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .is_err()
    {
        eprintln!("warning: global thread pool already initialized");
    }
    match dispatch(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let ctx = CheckContext {
        gamma_sign: 1.0,
        timings: cli.timings,
    };
    match cli.command {
        Command::Run { scenario, out } => {
            let text = std::fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let parsed = Scenario::parse(&text)?;
            let out = out
                .or_else(|| parsed.out.clone())
                .unwrap_or_else(|| PathBuf::from("cosob-reports"));
            let rep = run_scenario(&parsed, &ctx)?;
            let reports = vec![rep];
            report::write_reports(&reports, &out)?;
            report::print_table(&reports);
            Ok(reports.iter().all(|r| r.passed()))
        }
        Command::Verify { out, inject_gamma_flip } => {
            let ctx = CheckContext {
                gamma_sign: if inject_gamma_flip { -1.0 } else { 1.0 },
                ..ctx
            };
            let reports = cosob::verify_suite(&ctx)?;
            report::write_reports(&reports, &out)?;
            report::print_table(&reports);
            Ok(reports.iter().all(|r| r.passed()))
        }
        Command::NormCompose { random, seed } => {
            let check = Check::NormSubmultiplicative {
                pairs: random,
                max_dim: 4,
                seed,
                tol: 1e-12,
            };
            let rows = cosob::checks::run_check(&check, &ctx)?;
            for r in &rows {
                println!(
                    "{}: {} (expected {}) -> {}",
                    r.check_id,
                    r.value,
                    r.expected,
                    if r.verdict { "PASS" } else { "FAIL" }
                );
            }
            Ok(rows.iter().all(|r| r.verdict))
        }
        Command::Energy {
            family,
            alpha,
            beta,
            m,
            ell,
            order,
            exponent,
            radius,
            annuli,
            radial_nodes,
            angular_nodes,
        } => {
            let spec = FamilySpec { id: family, alpha, beta, m, ell };
            let fam = spec.to_family()?;
            let u = cosob_core::gallery::make_example(&fam).map_err(|e| anyhow!("{e}"))?;
            let domain = match u.domain.as_ref() {
                cosob_core::manifold::Manifold::Euclidean { dim } => {
                    DomainKind::Ball { radius, m: *dim }
                }
                cosob_core::manifold::Manifold::Circle { radius } => {
                    DomainKind::Circle { radius: *radius }
                }
                other => {
                    return Err(anyhow!("no default quadrature domain for {other:?}"));
                }
            };
            let quad = QuadratureSpec {
                domain,
                n_annuli: annuli,
                radial_nodes,
                angular_nodes,
            };
            let rep = cosob_core::energy::energy(&u, order, exponent, &quad)
                .map_err(|e| anyhow!("{e}"))?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(true)
        }
    }
}
