use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use star_pls::experiment::{load_config, run_command, run_sweep, validate_command, SweepSpec};
use star_pls::optimizer::Scheme;
use star_pls::{Error, SystemConfig};

#[derive(Parser)]
#[command(name = "star-pls", version, about = "Secure STAR-RIS precoding and surface design")]
struct Cli {
    /// Worker threads, 0 for one per core. Falls back to STAR_PLS_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one channel realization.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Scheme to run; repeat for several. Defaults to all three.
        #[arg(long)]
        scheme: Vec<Scheme>,
    },
    /// Run every (scheme, value, seed) point of a sweep spec.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the numerical oracles at the configured dimensions.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn thread_count(flag: Option<usize>) -> Result<usize, String> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("STAR_PLS_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| format!("STAR_PLS_THREADS must be a non-negative integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}

fn config(path: &Path) -> Result<SystemConfig, ExitCode> {
    load_config(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::InvalidConfig(_) | Error::ConfigParse(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_RUNTIME),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match thread_count(cli.threads) {
        Ok(n) => n,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }

    match cli.command {
        Command::Run { config: path, seed, out, scheme } => {
            let cfg = match config(&path) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let schemes = if scheme.is_empty() { Scheme::ALL.to_vec() } else { scheme };
            match run_command(&cfg, seed, &schemes, &out) {
                Ok(records) => {
                    for r in &records {
                        println!(
                            "{:<17} objective {:.6}  r_b {:.6}  r_b_sec {:.6}  r_c {:.6}  iters {}  {}",
                            r.scheme.name(),
                            r.objective,
                            r.r_b,
                            r.r_b_sec,
                            r.r_c,
                            r.outer_iterations,
                            r.status
                        );
                    }
                    if records.iter().any(|r| r.ok()) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_RUNTIME)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep { config: path, spec, out } => {
            let cfg = match config(&path) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let spec = match SweepSpec::load(&spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match run_sweep(&spec, &cfg, &out) {
                Ok(records) => {
                    let ok = records.iter().filter(|r| r.ok()).count();
                    println!("{ok}/{} points succeeded; results in {}", records.len(), out.display());
                    for r in records.iter().filter(|r| !r.ok()) {
                        eprintln!(
                            "{} {}={} seed {}: {}",
                            r.scheme.name(),
                            spec.axis.name(),
                            r.axis_value,
                            r.seed,
                            r.status
                        );
                    }
                    if ok == 0 {
                        ExitCode::from(EXIT_RUNTIME)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { config: path, out } => {
            let cfg = match config(&path) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match validate_command(&cfg, &out) {
                Ok(checks) => {
                    for c in &checks {
                        let verdict = if c.pass { "ok" } else { "FAIL" };
                        println!("{:<30} {:>14.6e}  < {:<14.6e} {verdict}", c.name, c.value, c.threshold);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
