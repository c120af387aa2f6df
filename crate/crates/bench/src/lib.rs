//! Experiment harness for the one-level and two-level Levenberg-Marquardt
//! network PDE solvers: problem registry, campaign files, multi-seed runs,
//! and CSV/JSON reports.

pub mod config;
pub mod problems;
pub mod report;
pub mod runner;

use std::path::Path;

use anyhow::{Context, Result};
use mlm_core::trace::write_trace_csv;

pub use config::{Campaign, CampaignFile, Solver};
pub use problems::{build_problem, ProblemId, Velocity};
pub use report::{emit_report, render_report, Format};
pub use runner::{run_campaign, CampaignResult, ComparisonRow};

/// Writes one trace CSV per seed and solver into `dir`, named
/// `<campaign>_<solver>_seed<seed>.csv`.
pub fn write_traces(result: &CampaignResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for seed in &result.seeds {
        for run in &seed.runs {
            if let Ok(summary) = &run.result {
                let name = format!("{}_{}_seed{}.csv", result.campaign.name, run.solver.name(), seed.seed);
                let path = dir.join(name);
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_trace_csv(std::io::BufWriter::new(file), &summary.report.trace)?;
            }
        }
    }
    Ok(())
}
