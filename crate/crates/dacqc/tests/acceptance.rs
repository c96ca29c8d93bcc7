//! Acceptance gate. Prints one PASS/FAIL line per criterion with the
//! measured values. FAIL lines do not abort the run unless
//! `DACQC_ACCEPTANCE_STRICT` is set; an internal error always does.
//! `DACQC_ACCEPTANCE_L3=1` adds the l = 3 table check.

use std::time::Instant;

use dacqc::bench;
use dacqc_core::aab::{blocks_per_step, count_blocks, Synthesizer};
use dacqc_core::agp::{action_from_commutators, agp_coefficients, build_generator_set};
use dacqc_core::circuit::{BlockFamily, CircuitIR, Factor};
use dacqc_core::depth::{
    cd_hamiltonian, closed_form_counts, ising_three_body_text, table_instance, table_regression, GENERIC_LAMBDA,
};
use dacqc_core::evolve::{evolve, EvolveConfig, Method, Shots, SimulationResult};
use dacqc_core::fit::{log_grid, ScalingFit};
use dacqc_core::model::{build_model, ModelInstance, ModelKind, ModelParams, Schedule};
use dacqc_core::pauli::nested_commutators;
use dacqc_core::pf::{synth_block, Expansion, Ordering, StepGenerators};
use dacqc_core::scaling::{Decomposition, ScalingContext};
use dacqc_core::sim::{norm_error, unitary_of, DenseEvaluator};
use dacqc_core::{Complex64, PauliString, PauliSum};

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Gate {
    pass: usize,
    fail: usize,
}

impl Gate {
    fn line(&mut self, ok: bool, name: &str, detail: String) {
        if ok {
            self.pass += 1;
        } else {
            self.fail += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn ising(l: usize) -> Res<ModelInstance> {
    Ok(build_model(ModelKind::IsingSpinGlass, l, ModelParams::default(), 7)?)
}

fn xxz(l: usize, j: f64) -> Res<ModelInstance> {
    Ok(build_model(ModelKind::Xxz, l, ModelParams { j, ..ModelParams::default() }, 7)?)
}

fn grid() -> Res<Vec<f64>> {
    Ok(log_grid(1e-6, 1e-2, 3)?)
}

fn nu(f: &ScalingFit) -> f64 {
    f.fit.as_ref().map_or(f64::NAN, |p| p.nu)
}

fn prefactor(f: &ScalingFit) -> f64 {
    f.fit.as_ref().map_or(f64::NAN, |p| p.prefactor)
}

fn error_scaling(g: &mut Gate, pool: &rayon::ThreadPool) -> Res<()> {
    let start = Instant::now();
    let grid = grid()?;
    for (name, m) in [("ising 3x3", ising(3)?), ("xxz 3x3", xxz(3, 1.0)?)] {
        for (d, lo, hi, bound) in
            [(Decomposition::U1Gc, 1.4, 1.6, 1.5), (Decomposition::U3Gc, 1.4, 1.6, 1.5), (Decomposition::U3Nested, 0.9, 1.15, 0.75)]
        {
            let f = bench::error_scaling(pool, &m, d, 0.5, &grid, 9)?;
            let v = nu(&f);
            g.line(
                (lo..=hi).contains(&v),
                &format!("error-scaling {name} {} window", d.id()),
                format!("nu = {v:.4}, required [{lo}, {hi}]"),
            );
            g.line(v >= bound, &format!("error-scaling {name} {} bound", d.id()), format!("nu = {v:.6} >= {bound}"));
            if d == Decomposition::U3Nested && m.kind == ModelKind::Xxz {
                let ok = f.breakdown.is_some_and(|b| b >= 1e-5);
                g.line(
                    ok,
                    &format!("error-scaling {name} u3_nested breakdown"),
                    format!("breakdown at {:?}, required detection at dt >= 1e-5", f.breakdown),
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    g.line(secs < 300.0, "error-scaling runtime", format!("{secs:.1} s, required < 300 s"));
    Ok(())
}

fn tables(g: &mut Gate) -> Res<()> {
    let start = Instant::now();
    for kind in [ModelKind::IsingSpinGlass, ModelKind::Xxz] {
        for c in table_regression(kind, 2, &[2, 3], 7)? {
            if c.l == 0 {
                continue;
            }
            let d = c.discrepancies();
            let detail = if d.is_empty() {
                "integer equality".to_string()
            } else {
                d.iter().map(|(w, a, b)| format!("{w}-body closed form {a}, computed {b}")).collect::<Vec<_>>().join("; ")
            };
            g.line(c.passed(), &format!("table {kind:?} L={} l={}", c.size, c.l), detail);
        }
    }
    let m = table_instance(ModelKind::IsingSpinGlass, 3, 0.5, 7)?;
    let computed = cd_hamiltonian(&m, 2, GENERIC_LAMBDA)?.weight_histogram().get(&3).copied().unwrap_or(0);
    let table = closed_form_counts(ModelKind::IsingSpinGlass, 2, 3)?.get(&3).copied().unwrap_or(0);
    let text = ising_three_body_text(3);
    g.line(
        computed == table,
        "table ising 3-body text vs table",
        format!("computed {computed}, table {table}, text {text}; the table count holds"),
    );
    for (kind, fam, l, want) in [
        (ModelKind::IsingSpinGlass, BlockFamily::Zz, 2, 17),
        (ModelKind::Xxz, BlockFamily::XxPlusYy, 0, 3),
        (ModelKind::Xxz, BlockFamily::XxPlusYy, 1, 4),
        (ModelKind::Xxz, BlockFamily::XxPlusYy, 2, 26),
    ] {
        let got = blocks_per_step(kind, fam, l)?;
        let synth = synthesized_blocks(kind, fam, l)?;
        g.line(
            got == want && synth == want,
            &format!("aab count {kind:?} l={l}"),
            format!("accounted {got}, synthesized {synth}, required {want}"),
        );
    }
    if std::env::var_os("DACQC_ACCEPTANCE_L3").is_some() {
        let s3 = Instant::now();
        for kind in [ModelKind::IsingSpinGlass, ModelKind::Xxz] {
            for c in table_regression(kind, 3, &[3], 7)?.into_iter().filter(|c| c.l == 3) {
                g.line(c.passed(), &format!("table {kind:?} L=3 l=3"), format!("{:?}", c.discrepancies()));
            }
        }
        let secs = s3.elapsed().as_secs_f64();
        g.line(secs < 1800.0, "table l=3 runtime", format!("{secs:.1} s, required < 1800 s"));
    }
    let secs = start.elapsed().as_secs_f64();
    g.line(secs < 120.0, "table runtime", format!("{secs:.1} s, required < 120 s"));
    Ok(())
}

fn synthesized_blocks(kind: ModelKind, fam: BlockFamily, l: usize) -> Res<usize> {
    let m = if kind == ModelKind::Xxz { xxz(2, 1.0)? } else { ising(2)? };
    if l == 0 {
        let mut ir = CircuitIR::new(m.n_qubits());
        let syn = Synthesizer::new(&mut ir, &m, fam)?;
        return Ok(count_blocks(&syn.adiabatic(GENERIC_LAMBDA, 0.01)?));
    }
    let set = build_generator_set(&m, GENERIC_LAMBDA, 1.0, l)?;
    let mut ir = CircuitIR::new(m.n_qubits());
    let ids = StepGenerators::register(&mut ir, &set, "")?;
    let mut syn = Synthesizer::new(&mut ir, &m, fam)?;
    let f = syn.step(&mut ir, &set, &ids, 0.01, Ordering::HFirst, false)?;
    Ok(count_blocks(&f))
}

fn gamma_counting(g: &mut Gate) -> Res<()> {
    let m = ising(2)?;
    for l in 1..=3 {
        let set = build_generator_set(&m, GENERIC_LAMBDA, 1.0, l)?;
        let mut ir = CircuitIR::new(m.n_qubits());
        let ids = StepGenerators::register(&mut ir, &set, "")?;
        let f = synth_block(&ids, l, 1e-3, 1.0, set.alpha[l - 1], Expansion::Nested)?;
        let c = ir.tally(&f)?;
        let (gh, gc) = (2 * ((1 << l) - 1), 1 << l);
        g.line(
            c.gamma_h == gh && c.gamma_c(l - 1) == gc && c.total_factors() == gh + gc,
            &format!("gamma count l={l}"),
            format!("gamma_H = {} (want {gh}), gamma_C{} = {} (want {gc})", c.gamma_h, l - 1, c.gamma_c(l - 1)),
        );
    }
    Ok(())
}

fn edge_sum(m: &ModelInstance, ops: &[(char, char, f64)]) -> Res<PauliSum> {
    let n = m.n_qubits();
    let mut s = PauliSum::new(n)?;
    for (e, &j) in m.lattice.edges.iter().zip(&m.couplings) {
        for &(pa, pb, w) in ops {
            s.add_term(PauliString::from_sites(n, &[(e.a, pa), (e.b, pb)])?, Complex64::new(j * w, 0.0))?;
        }
    }
    s.prune();
    Ok(s)
}

fn exactness(ir: &CircuitIR, f: &[Factor], target: &PauliSum, tau: f64) -> Res<f64> {
    let u = DenseEvaluator::new(9).unitary(ir, f)?;
    let v = unitary_of(target, Complex64::new(0.0, -tau), 9)?;
    Ok(norm_error(&u, &v)?)
}

fn aab_exactness(g: &mut Gate, pool: &rayon::ThreadPool) -> Res<()> {
    let tau = 0.1;
    for l in [2, 3] {
        let m = ising(l)?;
        let mut ir = CircuitIR::new(m.n_qubits());
        let s = Synthesizer::new(&mut ir, &m, BlockFamily::Zz)?;
        let f = s.alg1(tau);
        let e1 = exactness(&ir, &f[..3], &edge_sum(&m, &[('Z', 'Y', 1.0)])?, tau / 2.0)?;
        let e2 = exactness(&ir, &f[3..], &edge_sum(&m, &[('Y', 'Z', 1.0)])?, tau / 2.0)?;
        g.line(e1.max(e2) <= 1e-12, &format!("aab exact alg1 layers {l}x{l}"), format!("{e1:.1e}, {e2:.1e} <= 1e-12"));

        let m = build_model(ModelKind::Xxz, l, ModelParams { random_xxz_couplings: true, ..ModelParams::default() }, 7)?;
        let mut ir = CircuitIR::new(m.n_qubits());
        let s = Synthesizer::new(&mut ir, &m, BlockFamily::XxPlusYy)?;
        let e = exactness(&ir, &s.alg2(tau), &edge_sum(&m, &[('Y', 'X', 4.0), ('X', 'Y', -4.0)])?, tau)?;
        g.line(e <= 1e-12, &format!("aab exact alg2 {l}x{l}"), format!("{e:.1e} <= 1e-12"));
        let e = exactness(&ir, &s.alg4(tau), &edge_sum(&m, &[('Y', 'Z', 1.0), ('Z', 'Y', 1.0)])?, tau)?;
        g.line(e <= 1e-12, &format!("aab exact alg4 {l}x{l}"), format!("{e:.1e} <= 1e-12"));
        let f = s.alg3(1.0, tau);
        let e1 = exactness(&ir, &f[..3], &edge_sum(&m, &[('Z', 'Z', 1.0), ('Y', 'Y', -1.0)])?, tau / 2.0)?;
        let e2 = exactness(&ir, &f[3..], &edge_sum(&m, &[('Z', 'Z', 1.0), ('Y', 'Y', 1.0)])?, tau / 2.0)?;
        g.line(e1.max(e2) <= 1e-12, &format!("aab exact alg3 layers {l}x{l}"), format!("{e1:.1e}, {e2:.1e} <= 1e-12"));
    }
    let grid = grid()?;
    for (d, m) in [(Decomposition::Alg1, ising(2)?), (Decomposition::Alg3, xxz(2, 1.0)?)] {
        let v = nu(&bench::error_scaling(pool, &m, d, 0.5, &grid, 9)?);
        g.line((1.9..=2.1).contains(&v), &format!("aab two-layer {} 2x2", d.id()), format!("nu = {v:.4}, required [1.9, 2.1]"));
    }
    Ok(())
}

/// Golden-section minimum of `f` along `x + s d`, bracketed by doubling.
fn line_min(f: &dyn Fn(&[f64]) -> f64, x: &[f64], d: &[f64]) -> f64 {
    let at = |s: f64| f(&x.iter().zip(d).map(|(a, b)| a + s * b).collect::<Vec<_>>());
    let f0 = at(0.0);
    let mut step = 1e-3;
    let dir = if at(step) < f0 {
        1.0
    } else if at(-step) < f0 {
        -1.0
    } else {
        0.0
    };
    let (mut lo, mut hi) = (-step, step);
    if dir != 0.0 {
        // expand until the function rises again
        let (mut prev, mut cur) = (0.0, dir * step);
        loop {
            step *= 2.0;
            let next = dir * step;
            if at(next) >= at(cur) {
                (lo, hi) = (f64::min(prev, next), f64::max(prev, next));
                break;
            }
            (prev, cur) = (cur, next);
        }
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if at(a) < at(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Powell's direction-set search; no use of the normal equations.
fn brute_minimize(f: &dyn Fn(&[f64]) -> f64, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let mut dirs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..50 {
        let x0 = x.clone();
        for d in &dirs {
            let s = line_min(f, &x, d);
            x.iter_mut().zip(d).for_each(|(a, b)| *a += s * b);
        }
        let d: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-13 {
            break;
        }
        let s = line_min(f, &x, &d);
        x.iter_mut().zip(&d).for_each(|(a, b)| *a += s * b);
        dirs.remove(0);
        dirs.push(d);
    }
    x
}

fn agp_solver(g: &mut Gate) -> Res<()> {
    let lambda = 0.5;
    let h = PauliSum::from_labels(1, [("X", Complex64::new(lambda - 1.0, 0.0)), ("Z", Complex64::new(lambda, 0.0))])?;
    let dh = PauliSum::from_labels(1, [("X", Complex64::new(1.0, 0.0)), ("Z", Complex64::new(1.0, 0.0))])?;
    let a = agp_coefficients(&h, &dh, 1)?.alpha[0];
    g.line((a + 0.5).abs() <= 1e-10, "agp 1-qubit closed form", format!("alpha_1 = {a:.12}, required -0.5 to 1e-10"));

    let m = ising(2)?;
    let (h2, dh2) = m.interpolate(lambda)?;
    for (name, h, dh, l) in [("1-qubit", &h, &dh, 1), ("ising 2x2", &h2, &dh2, 1), ("ising 2x2", &h2, &dh2, 2)] {
        let nested = nested_commutators(h, dh, 2 * l)?;
        let solved = agp_coefficients(h, dh, l)?.alpha;
        let f = |a: &[f64]| action_from_commutators(&nested, a).expect("action");
        let brute = brute_minimize(&f, l);
        let diff = solved.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        g.line(
            diff <= 1e-6,
            &format!("agp brute force {name} l={l}"),
            format!("solve {solved:.8?}, search {brute:.8?}, max diff {diff:.1e} <= 1e-6"),
        );
    }
    Ok(())
}

fn fidelity(g: &mut Gate, pool: &rayon::ThreadPool) -> Res<()> {
    let m_list = [10, 40, 160];
    for (name, m) in [("ising", ising(3)?), ("xxz", xxz(3, -1.0)?)] {
        let mut finals = Vec::new();
        for l in 1..=2 {
            let r = bench::fidelity_convergence(pool, &m, l, &m_list, Method::Pf, 1.0, Ordering::HFirst)?;
            g.line(
                r.strictly_decreasing(),
                &format!("fidelity convergence {name} l={l}"),
                format!(
                    "max deviation over M = {m_list:?}: {:.4?} (reference M = {}, final F {:.6})",
                    r.max_deviation,
                    r.reference.schedule.steps,
                    r.reference.final_fidelity()
                ),
            );
            if m.kind == ModelKind::Xxz {
                let drift =
                    r.runs.iter().chain([&r.reference]).map(SimulationResult::magnetization_drift).fold(0.0, f64::max);
                g.line(drift <= 1e-8, &format!("magnetization xxz l={l}"), format!("max |dM| = {drift:.1e} <= 1e-8"));
            }
            finals.push(r.reference.final_fidelity());
        }
        g.line(
            finals[1] > finals[0],
            &format!("fidelity order {name}"),
            format!("converged l=2 {:.6} > l=1 {:.6}", finals[1], finals[0]),
        );
    }
    Ok(())
}

fn run_aab(m: &ModelInstance, steps: usize, ordering: Ordering) -> Res<f64> {
    let mut cfg = EvolveConfig::new(Method::Aab, 1);
    cfg.ordering = ordering;
    Ok(evolve(m, &Schedule::new(1.0, steps)?, &cfg)?.final_fidelity())
}

fn analog_vs_digital(g: &mut Gate, pool: &rayon::ThreadPool) -> Res<()> {
    let grid = grid()?;
    let m = xxz(3, 1.0)?;
    let a = bench::error_scaling(pool, &m, Decomposition::AabAdiabatic, 0.5, &grid, 9)?;
    let d = bench::error_scaling(pool, &m, Decomposition::DigitalAdiabatic, 0.5, &grid, 9)?;
    let (na, nd) = (nu(&a), nu(&d));
    g.line(
        (1.9..=2.1).contains(&na) && (1.9..=2.1).contains(&nd),
        "analog-vs-digital adiabatic-step exponents",
        format!("aab nu = {na:.4}, digital nu = {nd:.4}, required [1.9, 2.1]"),
    );
    let ratio = prefactor(&a) / prefactor(&d);
    g.line(
        (ratio - 1.0).abs() <= 0.10,
        "analog-vs-digital adiabatic-step prefactors",
        format!("aab b = {:.4}, digital b = {:.4}, ratio {ratio:.4}, required within 10%", prefactor(&a), prefactor(&d)),
    );

    let ea = ScalingContext::new(&m, Decomposition::AabU1, 0.5, 9)?.error(1e-3)?;
    let ed = ScalingContext::new(&m, Decomposition::DigitalU1, 0.5, 9)?.error(1e-3)?;
    g.line(
        ea * 1e3 <= ed,
        "analog-vs-digital U1 error at dt = 1e-3",
        format!("aab {ea:.2e}, digital {ed:.2e}, required aab <= digital / 1e3"),
    );

    let mo = xxz(3, -1.0)?;
    let (h10, c10) = (run_aab(&mo, 10, Ordering::HFirst)?, run_aab(&mo, 10, Ordering::CdFirst)?);
    g.line(
        c10 >= h10,
        "analog-vs-digital ordering at M = 10",
        format!("cd_first {c10:.6} >= h_first {h10:.6}"),
    );
    let (h100, c100) = (run_aab(&mo, 100, Ordering::HFirst)?, run_aab(&mo, 100, Ordering::CdFirst)?);
    let gap = (h100 - c100).abs();
    g.line(gap < 1e-3, "analog-vs-digital ordering gap at dt = 0.01", format!("|{h100:.6} - {c100:.6}| = {gap:.1e} < 1e-3"));
    Ok(())
}

fn depth_budget(g: &mut Gate) -> Res<()> {
    let m = ising(3)?;
    let t = 0.8;
    let run = |method: Method, steps: usize| -> Res<(f64, f64)> {
        let mut cfg = EvolveConfig::new(method, 1);
        cfg.shots = Some(Shots { count: 20_000, seed: 7 });
        let r = evolve(&m, &Schedule::new(t, steps)?, &cfg)?;
        let last = r.records.last().ok_or("empty run")?;
        Ok((last.fidelity, last.fidelity_shots.ok_or("no shot estimate")?))
    };
    let (dacqc, dcqc) = (run(Method::Aab, 40)?, run(Method::Digital, 10)?);
    let (aqc40, aqc10) = (run(Method::Aqc, 40)?, run(Method::Aqc, 10)?);
    g.line(
        dacqc.1 > dcqc.1,
        "depth budget DACQC vs DCQC",
        format!(
            "shots: dt=0.02 aab {:.4} > dt=0.08 digital {:.4} (exact {:.4} vs {:.4})",
            dacqc.1, dcqc.1, dacqc.0, dcqc.0
        ),
    );
    g.line(
        dacqc.1 >= aqc40.1 && dcqc.1 >= aqc10.1,
        "depth budget vs AQC baselines",
        format!("aab {:.4} >= aqc M=40 {:.4}; digital {:.4} >= aqc M=10 {:.4}", dacqc.1, aqc40.1, dcqc.1, aqc10.1),
    );
    Ok(())
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let pool = bench::pool(None).expect("thread pool");
    let mut g = Gate { pass: 0, fail: 0 };
    type Criterion = fn(&mut Gate, &rayon::ThreadPool) -> Res<()>;
    let criteria: [(&str, Criterion); 8] = [
        ("error_scaling", error_scaling),
        ("tables", |g, _| tables(g)),
        ("gamma_counting", |g, _| gamma_counting(g)),
        ("aab_exactness", aab_exactness),
        ("agp_solver", |g, _| agp_solver(g)),
        ("fidelity", fidelity),
        ("analog_vs_digital", analog_vs_digital),
        ("depth_budget", |g, _| depth_budget(g)),
    ];
    let mut errors = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        if let Err(e) = f(&mut g, &pool) {
            println!("ERROR {name}: {e}");
            errors += 1;
        }
        println!("-- {name} done in {:.1} s", t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} PASS, {} FAIL, {errors} errors", g.pass, g.fail);
    let strict = std::env::var_os("DACQC_ACCEPTANCE_STRICT").is_some();
    if errors > 0 || (strict && g.fail > 0) {
        std::process::exit(1);
    }
}
