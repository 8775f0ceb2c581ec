use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pinchlab_cli::suites::{decompose_report, run_calibrate, run_verify};
use pinchlab_cli::{load_config, run_batch, write_json, BatchOptions, CliError};

#[derive(Parser)]
#[command(name = "pinchlab", version, about = "Ricci-flow pinching laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed; overrides the `seed` key of scenario files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for all output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate scenarios and run the pinching suite on each.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Algebraic identity and property suites; no flow.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Curvature decomposition of a scenario's initial metric.
    Decompose { config: PathBuf },
    /// Sample the cubic and Weyl constants.
    Calibrate {
        #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5, 6, 7, 8])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn real_main(cli: Cli) -> Result<bool, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // A second global init only happens in tests; ignore it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let geom = |scenario: &str| {
        let scenario = scenario.to_string();
        move |source| CliError::Geometry { scenario, source }
    };
    match cli.command {
        Command::Run { configs } => {
            let index = run_batch(
                &configs,
                &BatchOptions {
                    out_dir: cli.out_dir,
                    seed: cli.seed,
                    strict: cli.strict,
                    threads: cli.threads,
                },
            )?;
            for s in &index.scenarios {
                match &s.error {
                    Some(e) => eprintln!("{}: error: {e}", s.name),
                    None => println!(
                        "{}: {} {} violations={} invariant_failures={} warnings={}{}",
                        s.name,
                        s.status.as_deref().unwrap_or("-"),
                        s.singularity.as_deref().unwrap_or("-"),
                        s.violations.unwrap_or(0),
                        s.invariant_failures.unwrap_or(0),
                        s.warnings.unwrap_or(0),
                        if s.ok { "" } else { "  FAIL" }
                    ),
                }
            }
            Ok(index.all_ok)
        }
        Command::Verify { samples } => {
            let seed = cli.seed.unwrap_or(0);
            let r = run_verify(samples, seed).map_err(geom("verify"))?;
            for c in &r.checks {
                let n = c.n.map_or(String::new(), |n| format!(" n={n}"));
                let verdict = if c.pass { "pass" } else { "FAIL" };
                println!("{verdict} {}{n}: {:e} (tol {:e})", c.name, c.value, c.tolerance);
            }
            write_json(&r, &cli.out_dir.join("verify.json"))?;
            Ok(r.all_pass)
        }
        Command::Decompose { config } => {
            let cfg = load_config(&config)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            let r = decompose_report(&cfg.name, cfg.geometry.kind(), &cfg.geometry.build(), seed)
                .map_err(geom(&cfg.name))?;
            println!("{}", serde_json::to_string_pretty(&r).expect("finite report"));
            write_json(&r, &cli.out_dir.join(format!("{}.decompose.json", cfg.name)))?;
            Ok(true)
        }
        Command::Calibrate { dims, samples } => {
            let seed = cli.seed.unwrap_or(1);
            let r = run_calibrate(&dims, samples, seed).map_err(geom("calibrate"))?;
            println!("n  samples   c1_sharp  c1_refined  c2_table  c2_sampled  c2_refined");
            for row in &r.rows {
                println!(
                    "{}  {:<8}  {:.6}  {:.6}    {:.4}    {:.6}    {:.6}",
                    row.n, row.samples, row.c1_sharp, row.c1_refined, row.c2_table, row.c2_sampled, row.c2_refined
                );
            }
            write_json(&r, &cli.out_dir.join("calibration.json"))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
