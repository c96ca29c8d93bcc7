//! Experiment drivers. Independent jobs (grid points, step counts, time
//! steps) run on a bounded rayon pool; results are always collected in job
//! order, so output does not depend on the thread count.

use dacqc_core::agp::build_generator_set;
use dacqc_core::evolve::{converged_reference, evolve, max_deviation, EvolveConfig, Method, SimulationResult};
use dacqc_core::fit::{scaling_fit, ScalingFit};
use dacqc_core::model::{ModelInstance, Schedule};
use dacqc_core::pf::Ordering;
use dacqc_core::scaling::{Decomposition, ScalingContext};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::AlphaRow;

/// `threads = None` uses one worker per available core.
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Pool(e.to_string()))
}

/// Normalized Frobenius errors of `decomposition` over `grid`, then the
/// power-law fit.
pub fn error_scaling(
    pool: &rayon::ThreadPool,
    model: &ModelInstance,
    decomposition: Decomposition,
    lambda: f64,
    grid: &[f64],
    cap: usize,
) -> Result<ScalingFit> {
    let ctx = ScalingContext::new(model, decomposition, lambda, cap)?;
    let errors: Vec<f64> = pool.install(|| grid.par_iter().map(|&dt| ctx.error(dt)).collect::<std::result::Result<Vec<f64>, dacqc_core::Error>>())?;
    Ok(scaling_fit(grid, &errors)?)
}

/// AGP coefficients at every step midpoint.
pub fn alpha_table(pool: &rayon::ThreadPool, model: &ModelInstance, schedule: &Schedule, l: usize) -> Result<Vec<AlphaRow>> {
    let rows = pool.install(|| {
        (1..=schedule.steps)
            .into_par_iter()
            .map(|m| {
                let t = schedule.midpoint(m);
                let (lambda, lambda_dot) = schedule.eval(t)?;
                let set = build_generator_set(model, lambda, lambda_dot, l)?;
                Ok(AlphaRow { step: m, t, lambda, lambda_dot, alpha: set.alpha })
            })
            .collect::<std::result::Result<Vec<_>, dacqc_core::Error>>()
    })?;
    Ok(rows)
}

/// Largest step size of the reference integrator.
pub const REFERENCE_DT: f64 = 1e-3;
/// Refinement stops once halving the step moves the final fidelity by less.
pub const REFERENCE_TOL: f64 = 1e-6;
pub const REFERENCE_MAX_DOUBLINGS: usize = 5;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest step count that every entry of `m_list` divides and that gives
/// `dt <= REFERENCE_DT`.
pub fn reference_steps(total_time: f64, m_list: &[usize]) -> Result<usize> {
    if m_list.contains(&0) {
        return Err(Error::Config("step counts must be positive".into()));
    }
    let lcm = m_list.iter().fold(1usize, |acc, &m| acc / gcd(acc, m) * m);
    let min = (total_time / REFERENCE_DT).ceil() as usize;
    Ok(min.div_ceil(lcm).max(1) * lcm)
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub reference: SimulationResult,
    pub runs: Vec<SimulationResult>,
    /// `max_m |F_M(m dt) - F_ref(m dt)|` per run.
    pub max_deviation: Vec<f64>,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.max_deviation.windows(2).all(|w| w[1] < w[0])
    }

    pub fn final_gap(&self) -> Vec<f64> {
        self.runs.iter().map(|r| (r.final_fidelity() - self.reference.final_fidelity()).abs()).collect()
    }
}

/// Runs for each `M` plus the converged exact-CD reference.
pub fn fidelity_convergence(
    pool: &rayon::ThreadPool,
    model: &ModelInstance,
    order: usize,
    m_list: &[usize],
    method: Method,
    total_time: f64,
    ordering: Ordering,
) -> Result<ConvergenceReport> {
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("step counts must be increasing".into()));
    }
    let start = reference_steps(total_time, m_list)?;
    let mut cfg = EvolveConfig::new(method, order);
    cfg.ordering = ordering;
    let (reference, runs) = pool.install(|| {
        rayon::join(
            || converged_reference(model, total_time, order, start, REFERENCE_TOL, REFERENCE_MAX_DOUBLINGS),
            || {
                m_list
                    .par_iter()
                    .map(|&m| evolve(model, &Schedule::new(total_time, m)?, &cfg))
                    .collect::<std::result::Result<Vec<_>, dacqc_core::Error>>()
            },
        )
    });
    let reference = reference?;
    let runs = runs?;
    let max_deviation = runs.iter().map(|r| max_deviation(r, &reference)).collect::<std::result::Result<Vec<_>, dacqc_core::Error>>()?;
    Ok(ConvergenceReport { reference, runs, max_deviation })
}

/// Independent evolutions in job order.
pub fn evolve_many(
    pool: &rayon::ThreadPool,
    model: &ModelInstance,
    jobs: &[(Schedule, EvolveConfig)],
) -> Result<Vec<SimulationResult>> {
    Ok(pool.install(|| jobs.par_iter().map(|(s, c)| evolve(model, s, c)).collect::<std::result::Result<Vec<_>, dacqc_core::Error>>())?)
}
