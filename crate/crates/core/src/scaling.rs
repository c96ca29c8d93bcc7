//! Error of one synthesized step against its exact target, as a function of
//! the step size.
//!
//! Product formulas are evaluated in the eigenbasis of `H`, where every `H`
//! factor is diagonal and each other generator costs two matrix products.
//! Analog-block and digital decompositions carry rotation layers and are
//! evaluated in the computational basis.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::aab::{native_op, Synthesizer};
use crate::agp::GeneratorSet;
use crate::circuit::{BlockFamily, CircuitIR, Factor, FactorKind, GeneratorId, GeneratorRole};
use crate::error::{Error, Result};
use crate::fit::{scaling_fit, ScalingFit};
use crate::linalg::{hermitian_eigen, DenseMatrix, HermitianEigen};
use crate::model::{ModelInstance, ModelKind};
use crate::pauli::{PauliString, PauliSum};
use crate::pf::{synth_u1, synth_u3, Expansion, StepGenerators};
use crate::sim::{norm_error, DenseEvaluator};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Decomposition {
    /// `U^(1)` by one group commutator over `H` and `dH`.
    U1Gc,
    /// `U^(3)` by one group commutator over `H` and `C^(2)`.
    U3Gc,
    /// `U^(3)` nested down to exact `C^(1)` exponentials.
    U3Nested,
    /// `U^(3)` nested down to `dH`.
    U3NestedFull,
    /// Both layers of Algorithm 1 against `exp(-i (dt/2) sum J (YZ + ZY))`.
    Alg1,
    /// Both layers of Algorithm 3 against `exp(-i dt sum J ZZ)`.
    Alg3,
    /// Analog-block adiabatic step against `exp(-i dt H)`.
    AabAdiabatic,
    /// Per-term adiabatic step against `exp(-i dt H)`.
    DigitalAdiabatic,
    /// Analog-block `exp(dt C^(1))`.
    AabU1,
    /// Per-term `exp(dt C^(1))`.
    DigitalU1,
}

impl Decomposition {
    pub const ALL: [Decomposition; 10] = [
        Decomposition::U1Gc,
        Decomposition::U3Gc,
        Decomposition::U3Nested,
        Decomposition::U3NestedFull,
        Decomposition::Alg1,
        Decomposition::Alg3,
        Decomposition::AabAdiabatic,
        Decomposition::DigitalAdiabatic,
        Decomposition::AabU1,
        Decomposition::DigitalU1,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Decomposition::U1Gc => "u1_gc",
            Decomposition::U3Gc => "u3_gc",
            Decomposition::U3Nested => "u3_nested",
            Decomposition::U3NestedFull => "u3_nested_full",
            Decomposition::Alg1 => "alg1",
            Decomposition::Alg3 => "alg3",
            Decomposition::AabAdiabatic => "aab_adiabatic",
            Decomposition::DigitalAdiabatic => "digital_adiabatic",
            Decomposition::AabU1 => "aab_u1",
            Decomposition::DigitalU1 => "digital_u1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|d| d.id() == s)
    }

    fn is_product_formula(self) -> bool {
        matches!(self, Decomposition::U1Gc | Decomposition::U3Gc | Decomposition::U3Nested | Decomposition::U3NestedFull)
    }

    /// Default hardware family for a model.
    pub fn family(kind: ModelKind) -> BlockFamily {
        match kind {
            ModelKind::IsingSpinGlass => BlockFamily::Zz,
            ModelKind::Xxz => BlockFamily::XxPlusYy,
        }
    }
}

/// Exponentials in the eigenbasis of one reference generator.
struct FrameEvaluator {
    frame: GeneratorId,
    frame_eig: HermitianEigen,
    frame_base: Complex64,
    /// Eigenvalues, `V_frame^dag V_g`, and the factor making `g` Hermitian.
    gens: BTreeMap<GeneratorId, (Vec<f64>, DenseMatrix, Complex64)>,
}

fn hermitian_base(op: &PauliSum) -> Complex64 {
    if op.is_hermitian(1e-12 * op.max_abs_coefficient().max(1.0)) {
        Complex64::new(1.0, 0.0)
    } else {
        I
    }
}

impl FrameEvaluator {
    fn new(ir: &CircuitIR, frame: GeneratorId, others: &[GeneratorId], cap: usize) -> Result<Self> {
        let eig = |id: GeneratorId| -> Result<(HermitianEigen, Complex64)> {
            let g = ir.generator(id).ok_or(Error::InvalidArgument("unknown generator id"))?;
            let base = hermitian_base(&g.op);
            Ok((hermitian_eigen(&DenseMatrix::from_pauli_sum(&g.op.scaled(base), cap)?)?, base))
        };
        let (frame_eig, frame_base) = eig(frame)?;
        let mut gens = BTreeMap::new();
        for &id in others {
            if id == frame || gens.contains_key(&id) {
                continue;
            }
            let (e, base) = eig(id)?;
            let w = frame_eig.vectors.adjoint_matmul(&e.vectors)?;
            gens.insert(id, (e.values, w, base));
        }
        Ok(FrameEvaluator { frame, frame_eig, frame_base, gens })
    }

    /// `(id, phi)` with `exp(c G) = exp(-i phi K)` for the cached Hermitian `K`.
    fn phase(&self, id: GeneratorId, c: Complex64) -> Result<f64> {
        let base = if id == self.frame {
            self.frame_base
        } else {
            self.gens.get(&id).ok_or(Error::InvalidArgument("generator not in frame cache"))?.2
        };
        // c G = -i phi (base G)  =>  phi = i c / base
        let phi = I * c / base;
        if phi.im.abs() > 1e-12 * phi.norm().max(1.0) {
            return Err(Error::NotAntiHermitian);
        }
        Ok(phi.re)
    }

    fn apply_left(&self, id: GeneratorId, c: Complex64, u: &mut DenseMatrix) -> Result<()> {
        let phi = self.phase(id, c)?;
        if id == self.frame {
            let ph: Vec<Complex64> = self.frame_eig.values.iter().map(|e| Complex64::from_polar(1.0, -phi * e)).collect();
            u.scale_rows(&ph);
            return Ok(());
        }
        let (values, w, _) = &self.gens[&id];
        let ph: Vec<Complex64> = values.iter().map(|e| Complex64::from_polar(1.0, -phi * e)).collect();
        let mut t = w.adjoint_matmul(u)?;
        t.scale_rows(&ph);
        *u = w.matmul(&t)?;
        Ok(())
    }

    fn exp(&self, id: GeneratorId, c: Complex64) -> Result<DenseMatrix> {
        let phi = self.phase(id, c)?;
        if id == self.frame {
            let ph: Vec<Complex64> = self.frame_eig.values.iter().map(|e| Complex64::from_polar(1.0, -phi * e)).collect();
            return Ok(DenseMatrix::from_diagonal(&ph));
        }
        let (values, w, _) = &self.gens[&id];
        let ph: Vec<Complex64> = values.iter().map(|e| Complex64::from_polar(1.0, -phi * e)).collect();
        let mut s = w.clone();
        s.scale_columns(&ph);
        s.matmul_adjoint(w)
    }

    fn unitary(&self, n: usize, factors: &[Factor]) -> Result<DenseMatrix> {
        let mut u: Option<DenseMatrix> = None;
        for f in factors {
            let FactorKind::ExactExp { generator, coeff } = f.kind else {
                return Err(Error::Unsupported("eigenbasis evaluation of blocks or rotations"));
            };
            match u.as_mut() {
                None => u = Some(self.exp(generator, coeff)?),
                Some(m) => self.apply_left(generator, coeff, m)?,
            }
        }
        Ok(u.unwrap_or_else(|| DenseMatrix::identity(1 << n)))
    }
}

enum Engine {
    Frame(FrameEvaluator),
    Dense { eval: DenseEvaluator, target: HermitianEigen, target_base: Complex64 },
}

/// Everything needed to evaluate one decomposition at many step sizes.
/// Construction does the eigendecompositions; [`ScalingContext::error`] is
/// read-only and can run from several threads.
pub struct ScalingContext {
    model: ModelInstance,
    decomposition: Decomposition,
    lambda: f64,
    family: BlockFamily,
    engine: Engine,
}

struct Built {
    ir: CircuitIR,
    factors: Vec<Factor>,
    target: GeneratorId,
    /// Target is `exp(target_coeff * G)`.
    target_coeff: Complex64,
}

fn edge_target(model: &ModelInstance) -> Result<PauliSum> {
    let n = model.n_qubits();
    let mut s = PauliSum::new(n)?;
    for (e, &j) in model.lattice.edges.iter().zip(&model.couplings) {
        for sites in [[(e.a, 'Y'), (e.b, 'Z')], [(e.a, 'Z'), (e.b, 'Y')]] {
            s.add_term(PauliString::from_sites(n, &sites)?, Complex64::new(j, 0.0))?;
        }
    }
    s.prune();
    Ok(s)
}

impl ScalingContext {
    pub fn new(model: &ModelInstance, decomposition: Decomposition, lambda: f64, cap: usize) -> Result<Self> {
        let family = Decomposition::family(model.kind);
        if decomposition == Decomposition::Alg1 && model.kind != ModelKind::IsingSpinGlass {
            return Err(Error::Unsupported("Algorithm 1 targets the Ising first nested commutator"));
        }
        if model.n_qubits() > cap {
            return Err(Error::ResourceCap { what: "dense matrix", n_qubits: model.n_qubits(), cap });
        }
        let mut ctx = ScalingContext {
            model: model.clone(),
            decomposition,
            lambda,
            family,
            engine: Engine::Dense {
                eval: DenseEvaluator::new(cap),
                target: HermitianEigen { values: Vec::new(), vectors: DenseMatrix::zeros(0) },
                target_base: Complex64::new(1.0, 0.0),
            },
        };
        let b = ctx.build(1e-3)?;
        let target_op = &b.ir.generator(b.target).ok_or(Error::InvalidArgument("unknown generator id"))?.op;
        ctx.engine = if decomposition.is_product_formula() {
            let ids: Vec<GeneratorId> = (0..b.ir.generators().len()).map(GeneratorId).collect();
            let frame = b
                .ir
                .generators()
                .iter()
                .position(|g| g.role == GeneratorRole::Hamiltonian)
                .map(GeneratorId)
                .ok_or(Error::InvalidArgument("no Hamiltonian registered"))?;
            Engine::Frame(FrameEvaluator::new(&b.ir, frame, &ids, cap)?)
        } else {
            let mut eval = DenseEvaluator::new(cap);
            eval.warm(&b.ir, &b.factors)?;
            let base = hermitian_base(target_op);
            let target = hermitian_eigen(&DenseMatrix::from_pauli_sum(&target_op.scaled(base), cap)?)?;
            Engine::Dense { eval, target, target_base: base }
        };
        Ok(ctx)
    }

    pub fn decomposition(&self) -> Decomposition {
        self.decomposition
    }

    fn build(&self, dt: f64) -> Result<Built> {
        let n = self.model.n_qubits();
        let mut ir = CircuitIR::new(n);
        let (h, dh) = self.model.interpolate(self.lambda)?;
        let d = self.decomposition;
        if d.is_product_formula() {
            let l = if d == Decomposition::U1Gc { 1 } else { 2 };
            let set = GeneratorSet::with_alpha(h, dh, self.lambda, 1.0, vec![1.0; l])?;
            let g = StepGenerators::register(&mut ir, &set, "")?;
            let (factors, target) = match d {
                Decomposition::U1Gc => (synth_u1(&g, dt, 1.0, 1.0)?, g.nc[1]),
                Decomposition::U3Gc => (synth_u3(&g, dt, 1.0, 1.0, Expansion::Flat)?, g.nc[3]),
                Decomposition::U3Nested => (synth_u3(&g, dt, 1.0, 1.0, Expansion::Nested)?, g.nc[3]),
                _ => (synth_u3(&g, dt, 1.0, 1.0, Expansion::Full)?, g.nc[3]),
            };
            return Ok(Built { ir, factors, target, target_coeff: Complex64::new(dt, 0.0) });
        }
        let mut syn = Synthesizer::new(&mut ir, &self.model, self.family)?;
        let minus_i_dt = Complex64::new(0.0, -dt);
        let (factors, op, coeff) = match d {
            Decomposition::Alg1 => (syn.alg1(dt), edge_target(&self.model)?, minus_i_dt * 0.5),
            Decomposition::Alg3 => (syn.alg3(1.0, dt), native_op(&self.model, BlockFamily::Zz)?, minus_i_dt),
            Decomposition::AabAdiabatic => (syn.adiabatic(self.lambda, dt)?, h, minus_i_dt),
            Decomposition::DigitalAdiabatic => (syn.digital_adiabatic(&mut ir, self.lambda, dt)?, h, minus_i_dt),
            Decomposition::AabU1 => (syn.c1_exp(dt)?, h.commutator(&dh)?, Complex64::new(dt, 0.0)),
            _ => (syn.digital_c1_exp(&mut ir, dt)?, h.commutator(&dh)?, Complex64::new(dt, 0.0)),
        };
        let target = ir.add_generator("target", GeneratorRole::Other, op)?;
        Ok(Built { ir, factors, target, target_coeff: coeff })
    }

    /// Normalized Frobenius distance between the synthesized step and its
    /// target at step size `dt`.
    pub fn error(&self, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive"));
        }
        let b = self.build(dt)?;
        match &self.engine {
            Engine::Frame(fe) => {
                let u = fe.unitary(b.ir.n_qubits(), &b.factors)?;
                let v = fe.exp(b.target, b.target_coeff)?;
                norm_error(&u, &v)
            }
            Engine::Dense { eval, target, target_base } => {
                let u = eval.unitary_warm(&b.ir, &b.factors)?;
                let phi = (I * b.target_coeff / target_base).re;
                let v = target.exp_i(phi);
                norm_error(&u, &v)
            }
        }
    }

    /// Errors on a grid, then the power-law fit.
    pub fn sweep(&self, grid: &[f64]) -> Result<ScalingFit> {
        let errors = grid.iter().map(|&dt| self.error(dt)).collect::<Result<Vec<f64>>>()?;
        scaling_fit(grid, &errors)
    }
}

/// One-shot sweep for `decomposition` on `model` at `lambda`.
pub fn error_scaling(
    model: &ModelInstance,
    decomposition: Decomposition,
    lambda: f64,
    grid: &[f64],
    cap: usize,
) -> Result<ScalingFit> {
    ScalingContext::new(model, decomposition, lambda, cap)?.sweep(grid)
}
