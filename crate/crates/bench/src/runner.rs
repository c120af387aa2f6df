//! Multi-seed LM versus MLM campaigns.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;

use anyhow::{ensure, Result};
use mlm_core::amg::{coarsen_from_jacobian, BlockNorm};
use mlm_core::ann::NetworkArch;
use mlm_core::lm::{lm_solve, SolveReport};
use mlm_core::mlm::mlm_solve;
use mlm_core::pde::ResidualSystem;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Campaign, Solver};
use crate::problems::{build_problem, ReferenceSettings};

/// Initial parameters for `seed`: i.i.d. uniform on `[-1, 1]` drawn from
/// `ChaCha8Rng::seed_from_u64(seed)`.
pub fn initial_params(seed: u64, num_params: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(num_params, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Hash of the exact bit patterns of `p`.
pub fn params_hash(p: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for x in p {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Outcome of one solver on one seed.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: Solver,
    pub p0_hash: u64,
    /// `Err` holds the solver's error message.
    pub result: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: SolveReport,
    pub rmse: f64,
    /// Coarse hidden-layer width (two-level runs only).
    pub coarse_hidden: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub runs: Vec<SolverRun>,
}

impl SeedResult {
    pub fn run(&self, solver: Solver) -> Option<&SolverRun> {
        self.runs.iter().find(|r| r.solver == solver)
    }

    /// LM flops over MLM flops when both succeeded.
    pub fn save(&self) -> Option<f64> {
        let lm = self.run(Solver::Lm)?.result.as_ref().ok()?;
        let mlm = self.run(Solver::Mlm)?.result.as_ref().ok()?;
        Some(lm.report.matvec_flops as f64 / mlm.report.matvec_flops as f64)
    }
}

/// One aggregated line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub campaign: String,
    pub problem: String,
    pub nu: f64,
    pub hidden: usize,
    pub activation: String,
    pub solver: Solver,
    pub seeds: usize,
    pub converged: usize,
    pub failed: usize,
    pub mean_iterations: f64,
    pub mean_coarse_hidden: Option<f64>,
    pub rmse_geomean: f64,
    pub rmse_per_seed: Vec<f64>,
    pub save_min: Option<f64>,
    pub save_mean: Option<f64>,
    pub save_max: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub campaign: Campaign,
    pub seeds: Vec<SeedResult>,
    pub rows: Vec<ComparisonRow>,
}

impl CampaignResult {
    /// Number of solver runs that ended in an error.
    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failed).sum()
    }
}

/// Runs one solver from `p0`.
pub fn run_solver(sys: &ResidualSystem, p0: &DVector<f64>, solver: Solver, campaign: &Campaign) -> Result<RunSummary> {
    let id = campaign.problem_id()?;
    let (report, coarse_hidden) = match solver {
        Solver::Lm => (lm_solve(sys, p0, &campaign.lm_config(id))?, None),
        Solver::Mlm => {
            let jac = sys.residual_jacobian(p0.as_slice())?;
            let (_, _, ops) = coarsen_from_jacobian(&jac, sys.arch().hidden(), campaign.strength, BlockNorm::Gram)?;
            let report = mlm_solve(sys, p0, &campaign.mlm_config(id), &ops)?;
            (report, Some(ops.coarse_size()))
        }
    };
    let rmse = sys.rmse(&report.final_params, campaign.test_points)?;
    Ok(RunSummary {
        report,
        rmse,
        coarse_hidden,
    })
}

/// Builds the residual system of a campaign.
pub fn build_system(campaign: &Campaign, cache_dir: Option<&Path>) -> Result<ResidualSystem> {
    campaign.validate()?;
    let id = campaign.problem_id()?;
    let settings = ReferenceSettings {
        resolution: campaign.fd_resolution,
        cache_dir,
    };
    let problem = build_problem(id, campaign.nu, campaign.penalty_factor, campaign.grid_points, &settings)?;
    let arch = NetworkArch::new(campaign.hidden, id.dim(), campaign.activation()?)?;
    Ok(ResidualSystem::new(problem, arch)?)
}

/// Runs every requested solver for `seed` from a single draw of `p0`.
pub fn run_seed(sys: &ResidualSystem, campaign: &Campaign, seed: u64) -> SeedResult {
    let p0 = initial_params(seed, sys.num_params());
    let hash = params_hash(p0.as_slice());
    let mut solvers = campaign.solvers.clone();
    solvers.sort();
    solvers.dedup();
    let runs = solvers
        .into_iter()
        .map(|solver| {
            let start = p0.clone();
            let p0_hash = params_hash(start.as_slice());
            assert_eq!(p0_hash, hash, "solvers must start from the same parameters");
            SolverRun {
                solver,
                p0_hash,
                result: run_solver(sys, &start, solver, campaign).map_err(|e| format!("{e:#}")),
            }
        })
        .collect();
    SeedResult { seed, runs }
}

/// Runs all seeds (in parallel) and aggregates per solver.
pub fn run_campaign(campaign: &Campaign, cache_dir: Option<&Path>) -> Result<CampaignResult> {
    let sys = build_system(campaign, cache_dir)?;
    let mut seeds: Vec<u64> = campaign.seeds.clone();
    seeds.sort();
    seeds.dedup();
    ensure!(!seeds.is_empty(), "campaign '{}' has no seeds", campaign.name);
    let mut results: Vec<SeedResult> = seeds.par_iter().map(|&s| run_seed(&sys, campaign, s)).collect();
    results.sort_by_key(|r| r.seed);
    let rows = aggregate(campaign, &results);
    Ok(CampaignResult {
        campaign: campaign.clone(),
        seeds: results,
        rows,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Aggregates seed results (sorted by seed) into one row per solver.
pub fn aggregate(campaign: &Campaign, seeds: &[SeedResult]) -> Vec<ComparisonRow> {
    let mut solvers = campaign.solvers.clone();
    solvers.sort();
    solvers.dedup();
    solvers
        .into_iter()
        .map(|solver| {
            let ok: Vec<&RunSummary> = seeds
                .iter()
                .filter_map(|s| s.run(solver)?.result.as_ref().ok())
                .collect();
            let failed = seeds.len() - ok.len();
            let rmse: Vec<f64> = ok.iter().map(|r| r.rmse).collect();
            let rmse_geomean = if rmse.is_empty() {
                f64::NAN
            } else {
                (rmse.iter().map(|r| r.ln()).sum::<f64>() / rmse.len() as f64).exp()
            };
            let iterations: Vec<f64> = ok.iter().map(|r| r.report.iterations as f64).collect();
            let coarse: Vec<f64> = ok.iter().filter_map(|r| r.coarse_hidden.map(|c| c as f64)).collect();
            let saves: Vec<f64> = if solver == Solver::Mlm {
                seeds.iter().filter_map(SeedResult::save).collect()
            } else {
                Vec::new()
            };
            let (save_min, save_mean, save_max) = if saves.is_empty() {
                (None, None, None)
            } else {
                (
                    Some(saves.iter().copied().fold(f64::INFINITY, f64::min)),
                    Some(mean(&saves)),
                    Some(saves.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                )
            };
            ComparisonRow {
                campaign: campaign.name.clone(),
                problem: campaign.problem.clone(),
                nu: campaign.nu,
                hidden: campaign.hidden,
                activation: campaign.activation.clone(),
                solver,
                seeds: seeds.len(),
                converged: ok.iter().filter(|r| r.report.converged).count(),
                failed,
                mean_iterations: mean(&iterations),
                mean_coarse_hidden: (!coarse.is_empty()).then(|| mean(&coarse)),
                rmse_geomean,
                rmse_per_seed: rmse,
                save_min,
                save_mean,
                save_max,
            }
        })
        .collect()
}
