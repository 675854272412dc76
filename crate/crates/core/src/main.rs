use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dpgrr_sim::cli::{self, Experiment};

#[derive(Parser)]
#[command(name = "dpgrr", version, about = "Distributed proximal gradient experiments over time-varying graphs")]
struct Args {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every listed algorithm and write metrics CSVs and a manifest.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run a single seed instead of the config's list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the graph schedule and step sizes without running.
    Validate { config: PathBuf },
    /// Compute the certified optimum and store it as a fixture.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = cli::ORACLE_TOL)]
        tol: f64,
        #[arg(long, default_value_t = cli::ORACLE_MAX_ITERS)]
        max_iters: usize,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(args.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Cmd) -> dpgrr_sim::Result<ExitCode> {
    match cmd {
        Cmd::Run { config, out, seed } => {
            let mut exp = Experiment::load(&config)?;
            if let Some(dir) = out {
                exp = exp.with_output_dir(dir);
            }
            if let Some(s) = seed {
                exp = exp.with_seed(s);
            }
            let res = cli::cmd_run(&exp)?;
            for r in &res.manifest.runs {
                println!(
                    "{} seed {}: gamma = {:e}, final subopt = {}",
                    r.label,
                    r.seed,
                    r.gamma,
                    r.final_subopt.map_or("n/a".into(), |v| format!("{v:e}"))
                );
            }
            println!(
                "F* = {} ({}); wrote {} runs to {}",
                res.manifest.f_star,
                res.manifest.f_star_source,
                res.manifest.runs.len(),
                res.output_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Validate { config } => {
            let exp = Experiment::load(&config)?;
            let (v, report) = cli::cmd_validate(&exp)?;
            print!("{report}");
            Ok(if v.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::Oracle {
            config,
            tol,
            max_iters,
        } => {
            let exp = Experiment::load(&config)?;
            match cli::cmd_oracle(&exp, tol, max_iters) {
                Ok(o) => {
                    let what = if o.written { "wrote" } else { "up to date:" };
                    println!(
                        "{what} {} F* = {} (mapping norm {:e}) in {}",
                        o.key,
                        o.value,
                        o.mapping_norm,
                        o.store.display()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(dpgrr_sim::Error::NoConvergence { best }) => {
                    eprintln!(
                        "error: no convergence within {max_iters} iterations; best-effort F* = {} \
                         (mapping norm {:e} > tol {tol:e}), NOT stored",
                        best.value, best.mapping_norm
                    );
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => Err(e),
            }
        }
    }
}
