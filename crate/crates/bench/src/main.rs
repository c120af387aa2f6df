use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mlm_bench::problems::{helmholtz_reference, ReferenceSettings};
use mlm_bench::runner::{build_system, initial_params};
use mlm_bench::{render_report, run_campaign, write_traces, Campaign, CampaignFile, Format, ProblemId, Solver, Velocity};
use mlm_core::amg::{coarsen_from_jacobian, write_inspection, BlockNorm};

#[derive(Parser)]
#[command(name = "mlm-bench", version, about = "LM versus two-level LM on network PDE problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every campaign of a TOML campaign file.
    Run {
        campaign_file: PathBuf,
        /// Replace the seed list of every campaign by this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run only this solver.
        #[arg(long)]
        solver: Option<Solver>,
        /// Report path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Directory for per-seed iteration traces.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// List the available problems.
    ListProblems,
    /// Build and cache finite-difference references for the 2D Helmholtz problems.
    FdRef {
        #[arg(long)]
        nu: f64,
        /// c1, c2, c3 or c4; all four if omitted.
        #[arg(long)]
        velocity: Option<String>,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[arg(long)]
        cache_dir: PathBuf,
    },
    /// Dump the coupling matrix, C/F splitting and prolongation at the initial point.
    SplitInspect {
        #[arg(long)]
        problem: ProblemId,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        hidden: usize,
        #[arg(long, default_value = "tanh")]
        activation: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.9)]
        strength: f64,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            campaign_file,
            seed,
            solver,
            out,
            format,
            trace,
        } => {
            let file = CampaignFile::load(&campaign_file)?;
            let mut rows = Vec::new();
            let mut failures = 0;
            for mut campaign in file.campaigns {
                if let Some(s) = seed {
                    campaign.seeds = vec![s];
                }
                if let Some(s) = solver {
                    campaign.solvers = vec![s];
                }
                campaign.validate()?;
                let result = run_campaign(&campaign, file.cache_dir.as_deref())?;
                for s in &result.seeds {
                    for r in &s.runs {
                        if let Err(e) = &r.result {
                            eprintln!("warning: {} seed {} {}: {e}", campaign.name, s.seed, r.solver.name());
                        }
                    }
                }
                failures += result.failures();
                if let Some(dir) = &trace {
                    write_traces(&result, dir)?;
                }
                rows.extend(result.rows);
            }
            write_output(out.as_ref(), &render_report(&rows, format)?)?;
            if failures > 0 {
                eprintln!("{failures} solver run(s) failed");
            }
            Ok(failures == 0)
        }
        Command::ListProblems => {
            for id in ProblemId::all() {
                println!("{:<16} {}D  {}", id.to_string(), id.dim(), id.describe());
            }
            Ok(true)
        }
        Command::FdRef {
            nu,
            velocity,
            resolution,
            cache_dir,
        } => {
            let velocities: Vec<Velocity> = match velocity {
                Some(tag) => vec![Velocity::ALL
                    .into_iter()
                    .find(|v| v.tag() == tag)
                    .with_context(|| format!("unknown velocity '{tag}'"))?],
                None => Velocity::ALL.to_vec(),
            };
            let settings = ReferenceSettings {
                resolution,
                cache_dir: Some(&cache_dir),
            };
            let mut ok = true;
            for v in velocities {
                match helmholtz_reference(nu, v, &settings) {
                    Ok(grid) => {
                        let max = grid.field().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                        println!("{}: {resolution}x{resolution}, max |u| = {max:.5e}", v.tag());
                    }
                    Err(e) => {
                        eprintln!("{}: {e:#}", v.tag());
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
        Command::SplitInspect {
            problem,
            nu,
            hidden,
            activation,
            seed,
            strength,
            cache_dir,
            out,
        } => {
            let mut campaign = Campaign::new("inspect", problem, nu, hidden, vec![seed]);
            campaign.activation = activation;
            campaign.strength = strength;
            let sys = build_system(&campaign, cache_dir.as_deref())?;
            let p0 = initial_params(seed, sys.num_params());
            let jac = sys.residual_jacobian(p0.as_slice())?;
            let (a, split, ops) = coarsen_from_jacobian(&jac, hidden, strength, BlockNorm::Gram)?;
            let mut buf = Vec::new();
            write_inspection(&mut buf, &a, &split, &ops)?;
            write_output(out.as_ref(), &buf)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
