//! Time evolution from the ground state of `H0` under the discretized
//! schedule, one step per midpoint.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::aab::{supported, Synthesizer};
use crate::agp::build_generator_set;
use crate::circuit::{BlockFamily, CircuitIR};
use crate::error::{Error, Result};
use crate::model::{ModelInstance, ModelKind, Schedule};
use crate::pf::{synth_order_l, trotter_step, Expansion, Ordering, StepGenerators};
use crate::scaling::Decomposition;
use crate::sim::{apply_exp_hermitian, apply_factors, ground_state, magnetization, sample_bitstrings, Caps};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// `exp(-i dt (H + H_CD))` applied exactly.
    ExactCd,
    /// Exact `H` factor plus group-commutator product formulas for the CD part.
    Pf,
    /// Analog-block circuit.
    Aab,
    /// The same circuit with every group split into per-term exponentials.
    Digital,
    /// `exp(-i dt H)` only.
    Aqc,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::ExactCd, Method::Pf, Method::Aab, Method::Digital, Method::Aqc];

    pub fn id(self) -> &'static str {
        match self {
            Method::ExactCd => "exact_cd",
            Method::Pf => "pf",
            Method::Aab => "aab",
            Method::Digital => "digital",
            Method::Aqc => "aqc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == s)
    }
}

impl Ordering {
    pub fn id(self) -> &'static str {
        match self {
            Ordering::HFirst => "h_first",
            Ordering::CdFirst => "cd_first",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Ordering::HFirst, Ordering::CdFirst].into_iter().find(|o| o.id() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shots {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub method: Method,
    /// AGP order; ignored by [`Method::Aqc`].
    pub order: usize,
    pub ordering: Ordering,
    /// Product-formula depth for [`Method::Pf`].
    pub expansion: Expansion,
    /// Hardware family for the block methods; defaults per model.
    pub family: Option<BlockFamily>,
    pub shots: Option<Shots>,
    pub caps: Caps,
}

impl EvolveConfig {
    pub fn new(method: Method, order: usize) -> Self {
        EvolveConfig {
            method,
            order,
            ordering: Ordering::HFirst,
            expansion: Expansion::Nested,
            family: None,
            shots: None,
            caps: Caps::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    /// Midpoint time `(m - 1/2) dt`, the label used for the curves.
    pub t: f64,
    pub lambda: f64,
    pub fidelity: f64,
    pub magnetization: f64,
    pub fidelity_shots: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub kind: ModelKind,
    pub seed: u64,
    pub schedule: Schedule,
    pub config: EvolveConfig,
    pub target_degeneracy: usize,
    pub initial_fidelity: f64,
    pub initial_magnetization: f64,
    pub records: Vec<StepRecord>,
    pub norm_defect: f64,
}

impl SimulationResult {
    pub fn final_fidelity(&self) -> f64 {
        self.records.last().map_or(self.initial_fidelity, |r| r.fidelity)
    }

    /// Largest `|M(t) - M(0)|` over the run.
    pub fn magnetization_drift(&self) -> f64 {
        self.records.iter().map(|r| (r.magnetization - self.initial_magnetization).abs()).fold(0.0, f64::max)
    }
}

/// `exp(-i dt H)` or `exp(-i dt (H + H_CD))` for one step, or a product formula
/// or circuit for it, applied to `state`.
fn step(model: &ModelInstance, cfg: &EvolveConfig, lambda: f64, lambda_dot: f64, dt: f64, state: &mut Vec<Complex64>) -> Result<()> {
    if cfg.method == Method::Aqc {
        let (h, _) = model.interpolate(lambda)?;
        return apply_exp_hermitian(state, &h, dt);
    }
    let set = build_generator_set(model, lambda, lambda_dot, cfg.order)?;
    match cfg.method {
        Method::ExactCd => apply_exp_hermitian(state, &set.total()?, dt),
        Method::Pf => {
            let mut ir = CircuitIR::new(model.n_qubits());
            let ids = StepGenerators::register(&mut ir, &set, "")?;
            let cd = synth_order_l(&ids, dt, lambda_dot, &set.alpha, cfg.expansion)?;
            apply_factors(&ir, &trotter_step(ids.h, dt, cd, cfg.ordering), state)
        }
        Method::Aab | Method::Digital => {
            let family = cfg.family.unwrap_or(Decomposition::family(model.kind));
            if !supported(model.kind, family) {
                return Err(Error::Unsupported("model cannot be realized on this block family"));
            }
            let mut ir = CircuitIR::new(model.n_qubits());
            let mut synth = Synthesizer::new(&mut ir, model, family)?;
            let ids = StepGenerators::register(&mut ir, &set, "")?;
            let factors = synth.step(&mut ir, &set, &ids, dt, cfg.ordering, cfg.method == Method::Digital)?;
            apply_factors(&ir, &factors, state)
        }
        Method::Aqc => unreachable!(),
    }
}

fn shot_fidelity(targets: &[usize], state: &[Complex64], shots: Shots, step: usize) -> Result<f64> {
    let seed = shots.seed.wrapping_add((step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let counts = sample_bitstrings(state, shots.count, seed)?;
    let hits: usize = targets.iter().filter_map(|j| counts.get(j)).sum();
    Ok(hits as f64 / shots.count as f64)
}

/// Evolve the ground state of `H0` through `schedule`, recording the
/// target-state fidelity and magnetization after every step.
pub fn evolve(model: &ModelInstance, schedule: &Schedule, cfg: &EvolveConfig) -> Result<SimulationResult> {
    let n = model.n_qubits();
    cfg.caps.check_state(n)?;
    if cfg.method != Method::Aqc && cfg.order == 0 {
        return Err(Error::InvalidArgument("AGP order must be at least 1"));
    }
    let target = ground_state(&model.h1, cfg.caps)?;
    let targets: Vec<usize> = match cfg.shots {
        Some(_) if !model.h1.is_diagonal() => {
            return Err(Error::Unsupported("shot estimates need a diagonal final Hamiltonian"));
        }
        Some(_) => target
            .basis
            .iter()
            .map(|b| b.iter().position(|x| x.norm_sqr() > 0.5).ok_or(Error::InvalidArgument("target is not a basis state")))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let initial = ground_state(&model.h0, cfg.caps)?;
    let mut state = initial.basis[0].clone();
    let initial_fidelity = target.fidelity(&state);
    let initial_magnetization = magnetization(&state);
    let dt = schedule.dt();
    let mut records = Vec::with_capacity(schedule.steps);
    for m in 1..=schedule.steps {
        let t = schedule.midpoint(m);
        let (lambda, lambda_dot) = schedule.eval(t)?;
        step(model, cfg, lambda, lambda_dot, dt, &mut state)?;
        let fidelity_shots = match cfg.shots {
            Some(s) => Some(shot_fidelity(&targets, &state, s, m)?),
            None => None,
        };
        records.push(StepRecord {
            step: m,
            t,
            lambda,
            fidelity: target.fidelity(&state),
            magnetization: magnetization(&state),
            fidelity_shots,
        });
    }
    let norm_defect = (crate::linalg::vec_norm(&state) - 1.0).abs();
    Ok(SimulationResult {
        kind: model.kind,
        seed: model.seed,
        schedule: *schedule,
        config: *cfg,
        target_degeneracy: target.degeneracy(),
        initial_fidelity,
        initial_magnetization,
        records,
        norm_defect,
    })
}

/// Fidelity after `m dt_run` read off a reference run whose step count is a
/// multiple of the run's.
pub fn reference_at(reference: &SimulationResult, run_steps: usize, m: usize) -> Result<f64> {
    let r = reference.schedule.steps;
    if run_steps == 0 || r % run_steps != 0 || m == 0 || m > run_steps {
        return Err(Error::InvalidArgument("reference grid does not contain the run's step ends"));
    }
    Ok(reference.records[m * (r / run_steps) - 1].fidelity)
}

/// Converged exact-CD reference: start from `steps` and double until the
/// final fidelity moves by less than `tol`. Returns the finest run.
pub fn converged_reference(
    model: &ModelInstance,
    total_time: f64,
    order: usize,
    steps: usize,
    tol: f64,
    max_doublings: usize,
) -> Result<SimulationResult> {
    let cfg = EvolveConfig::new(if order == 0 { Method::Aqc } else { Method::ExactCd }, order);
    let mut prev = evolve(model, &Schedule::new(total_time, steps)?, &cfg)?;
    for k in 1..=max_doublings {
        let next = evolve(model, &Schedule::new(total_time, steps << k)?, &cfg)?;
        let change = (next.final_fidelity() - prev.final_fidelity()).abs();
        prev = next;
        if change < tol {
            return Ok(prev);
        }
    }
    Err(Error::NoConvergence)
}

/// Largest `|F_run(m dt) - F_ref(m dt)|` over the run's steps.
pub fn max_deviation(run: &SimulationResult, reference: &SimulationResult) -> Result<f64> {
    let steps = run.schedule.steps;
    let mut worst = 0.0f64;
    for r in &run.records {
        worst = worst.max((r.fidelity - reference_at(reference, steps, r.step)?).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelParams};

    fn ising2() -> ModelInstance {
        build_model(ModelKind::IsingSpinGlass, 2, ModelParams::default(), 7).unwrap()
    }

    #[test]
    fn slow_aqc_reaches_ground_state() {
        let m = ising2();
        let r = evolve(&m, &Schedule::new(50.0, 5000).unwrap(), &EvolveConfig::new(Method::Aqc, 0)).unwrap();
        assert!(r.final_fidelity() >= 0.99, "{}", r.final_fidelity());
        assert!(r.norm_defect < 1e-10);
    }

    #[test]
    fn methods_agree_at_small_steps() {
        let m = ising2();
        let s = Schedule::new(1.0, 1000).unwrap();
        let exact = evolve(&m, &s, &EvolveConfig::new(Method::ExactCd, 1)).unwrap();
        for method in [Method::Pf, Method::Aab] {
            let r = evolve(&m, &s, &EvolveConfig::new(method, 1)).unwrap();
            let gap = r.records.iter().zip(&exact.records).map(|(a, b)| (a.fidelity - b.fidelity).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-2, "{method:?}: {gap}");
        }
    }

    #[test]
    fn shots_need_diagonal_target() {
        let m = build_model(ModelKind::Xxz, 2, ModelParams::default(), 0).unwrap();
        let mut cfg = EvolveConfig::new(Method::ExactCd, 1);
        cfg.shots = Some(Shots { count: 100, seed: 1 });
        let err = evolve(&m, &Schedule::new(1.0, 2).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn shot_estimate_is_binomial() {
        let m = ising2();
        let mut cfg = EvolveConfig::new(Method::ExactCd, 1);
        cfg.shots = Some(Shots { count: 20_000, seed: 3 });
        let r = evolve(&m, &Schedule::new(1.0, 20).unwrap(), &cfg).unwrap();
        for rec in &r.records {
            let f = rec.fidelity;
            let sigma = (f * (1.0 - f) / 20_000.0).sqrt();
            assert!((rec.fidelity_shots.unwrap() - f).abs() <= 3.0 * sigma + 1e-12, "{rec:?}");
        }
    }

    #[test]
    fn initial_state_is_h0_ground_state() {
        let m = build_model(ModelKind::Xxz, 3, ModelParams::default(), 0).unwrap();
        let r = evolve(&m, &Schedule::new(1.0, 1).unwrap(), &EvolveConfig::new(Method::Aqc, 0)).unwrap();
        assert!((r.initial_magnetization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.id()), Some(m));
        }
        assert_eq!(Ordering::parse("cd_first"), Some(Ordering::CdFirst));
    }
}
