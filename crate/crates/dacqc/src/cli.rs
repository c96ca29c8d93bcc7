//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 for invalid input (including unknown flags),
//! 2 when a resource cap is exceeded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dacqc_core::aab::{supported, Synthesizer};
use dacqc_core::agp::{build_generator_set, GeneratorSet};
use dacqc_core::circuit::{BlockFamily, CircuitIR};
use dacqc_core::depth::{depth_report, table_instance, table_regression, XXZ_TABLE_DELTA};
use dacqc_core::evolve::{EvolveConfig, Method, Shots};
use dacqc_core::fit::log_grid;
use dacqc_core::model::{ModelKind, Schedule};
use dacqc_core::pf::{synth_order_l, trotter_step, Expansion, Ordering, StepGenerators};
use dacqc_core::scaling::Decomposition;
use dacqc_core::sim::Caps;
use serde_json::json;

use crate::bench;
use crate::error::{Error, Result};
use crate::formats::{
    circuit_to_json, depth_report_text, depth_report_to_json, family_name, fit_to_json, table_cell_to_json, write_alpha_csv,
    write_json, write_scaling_csv, write_simulation_csv, KindName, Manifest, ModelConfig, ModelExport,
};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "DACQC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dacqc", version, about = "Digital-analog counterdiabatic circuit synthesis and verification")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// Directory for artifacts.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model instance and export it.
    BuildModel(ModelArgs),
    /// AGP coefficients at every step midpoint.
    Agp(AgpArgs),
    /// Synthesize one Trotter step.
    Synth(SynthArgs),
    /// Term counts, depth bounds and block counts.
    DepthReport(DepthArgs),
    /// Error of a decomposition against its target over a step-size grid.
    ErrorScaling(ScalingArgs),
    /// Target-state fidelity along the schedule.
    Fidelity(FidelityArgs),
    /// Computed term histograms against the closed forms.
    TableCheck(TableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Ising,
    Xxz,
}

impl From<KindArg> for KindName {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ising => KindName::Ising,
            KindArg::Xxz => KindName::Xxz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Zz,
    Xxyy,
}

impl From<FamilyArg> for BlockFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Zz => BlockFamily::Zz,
            FamilyArg::Xxyy => BlockFamily::XxPlusYy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExpansionArg {
    Flat,
    Nested,
    NestedFull,
}

impl From<ExpansionArg> for Expansion {
    fn from(e: ExpansionArg) -> Self {
        match e {
            ExpansionArg::Flat => Expansion::Flat,
            ExpansionArg::Nested => Expansion::Nested,
            ExpansionArg::NestedFull => Expansion::Full,
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method {s:?}; expected one of exact_cd, pf, aab, digital, aqc"))
}

fn parse_ordering(s: &str) -> std::result::Result<Ordering, String> {
    Ordering::parse(s).ok_or_else(|| format!("unknown ordering {s:?}; expected h_first or cd_first"))
}

fn parse_decomposition(s: &str) -> std::result::Result<Decomposition, String> {
    Decomposition::parse(s).ok_or_else(|| {
        let ids: Vec<&str> = Decomposition::ALL.iter().map(|d| d.id()).collect();
        format!("unknown decomposition {s:?}; expected one of {}", ids.join(", "))
    })
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Model config JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<KindArg>,
    /// Linear lattice size.
    #[arg(long = "L")]
    pub size: Option<usize>,
    #[arg(long = "J")]
    pub j: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random per-edge XXZ couplings.
    #[arg(long)]
    pub random_couplings: bool,
    /// Total time.
    #[arg(long = "T")]
    pub total_time: Option<f64>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<ModelConfig> {
        let mut c = match &self.config {
            Some(p) => ModelConfig::load(p)?,
            None => ModelConfig::new(self.model.map_or(KindName::Ising, Into::into)),
        };
        if let Some(k) = self.model {
            c.kind = k.into();
        }
        if let Some(v) = self.size {
            c.size = v;
        }
        if let Some(v) = self.j {
            c.j = v;
        }
        if let Some(v) = self.h {
            c.h = v;
        }
        if let Some(v) = self.delta {
            c.delta = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.total_time {
            c.schedule.total_time = v;
        }
        c.random_couplings |= self.random_couplings;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, Args)]
pub struct AgpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// AGP order.
    #[arg(long = "l", default_value_t = 1)]
    pub order: usize,
    /// Number of Trotter steps.
    #[arg(long = "M")]
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "l", default_value_t = 1)]
    pub order: usize,
    /// pf, aab or digital.
    #[arg(long, default_value = "aab", value_parser = parse_method)]
    pub method: Method,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_dot: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value = "h_first", value_parser = parse_ordering)]
    pub ordering: Ordering,
    #[arg(long, value_enum, default_value = "nested")]
    pub expansion: ExpansionArg,
    /// Hardware block family (default: zz for Ising, xxyy for XXZ).
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Use alpha_k = 1 instead of the variational coefficients.
    #[arg(long)]
    pub unit_alpha: bool,
}

#[derive(Clone, Debug, Args)]
pub struct DepthArgs {
    #[arg(long, value_enum, default_value = "ising")]
    pub model: KindArg,
    #[arg(long = "L", default_value_t = 3)]
    pub size: usize,
    #[arg(long = "l", default_value_t = 2)]
    pub order: usize,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Skip the computed histogram (always skipped for l = 3 unless --compute).
    #[arg(long, conflicts_with = "compute")]
    pub no_compute: bool,
    /// Force the computed histogram.
    #[arg(long)]
    pub compute: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "u1_gc", value_parser = parse_decomposition)]
    pub decomp: Decomposition,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub dt_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt_max: f64,
    #[arg(long, default_value_t = 3)]
    pub per_decade: usize,
    /// Largest register turned into a dense matrix.
    #[arg(long, default_value_t = 9)]
    pub cap: usize,
}

#[derive(Clone, Debug, Args)]
pub struct FidelityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "l", default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value = "pf", value_parser = parse_method)]
    pub method: Method,
    /// Step counts, comma separated.
    #[arg(long = "M", default_value = "10", value_delimiter = ',')]
    pub steps: Vec<usize>,
    #[arg(long, default_value = "h_first", value_parser = parse_ordering)]
    pub ordering: Ordering,
    #[arg(long, value_enum, default_value = "nested")]
    pub expansion: ExpansionArg,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Estimate the fidelity from this many samples per step as well.
    #[arg(long)]
    pub shots: Option<usize>,
    /// Sampler seed (default: the model seed).
    #[arg(long)]
    pub shot_seed: Option<u64>,
    /// Also compute the converged exact-CD reference and the deviations.
    #[arg(long)]
    pub reference: bool,
    /// State-vector qubit cap.
    #[arg(long, default_value_t = 12)]
    pub state_cap: usize,
}

#[derive(Clone, Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum, default_value = "ising")]
    pub model: KindArg,
    #[arg(long, default_value_t = 2)]
    pub l_max: usize,
    #[arg(long, default_value = "2,3", value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Exit with 1 when any cell disagrees.
    #[arg(long)]
    pub strict: bool,
}

struct Ctx {
    out: PathBuf,
    json: bool,
    threads: Option<usize>,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn announce(&self, path: &Path, what: &str) {
        if !self.json {
            println!("wrote {} ({what})", path.display());
        }
    }

    fn manifest(&self, name: &str, m: &Manifest) -> Result<()> {
        let p = self.path(&format!("{name}.manifest.json"));
        write_json(&p, m)?;
        self.announce(&p, "manifest");
        Ok(())
    }
}

/// Parse `argv` (including the program name) and run; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32> {
    let ctx = Ctx { out: cli.out, json: cli.json, threads: cli.threads };
    match cli.command {
        Command::BuildModel(a) => build_model_cmd(&ctx, &a),
        Command::Agp(a) => agp_cmd(&ctx, &a),
        Command::Synth(a) => synth_cmd(&ctx, &a),
        Command::DepthReport(a) => depth_cmd(&ctx, &a),
        Command::ErrorScaling(a) => scaling_cmd(&ctx, &a),
        Command::Fidelity(a) => fidelity_cmd(&ctx, &a),
        Command::TableCheck(a) => table_cmd(&ctx, &a),
    }
}

fn kind_id(k: KindName) -> &'static str {
    match k {
        KindName::Ising => "ising",
        KindName::Xxz => "xxz",
    }
}

fn build_model_cmd(ctx: &Ctx, a: &ModelArgs) -> Result<i32> {
    let c = a.resolve()?;
    let m = c.build()?;
    let export = ModelExport::new(&c, &m);
    let p = ctx.path("model.json");
    write_json(&p, &export)?;
    if ctx.json {
        println!("{}", serde_json::to_string(&export)?);
    } else {
        println!(
            "{} L={} seed={}: {} qubits, {} edges, H1 has {} terms",
            kind_id(c.kind),
            c.size,
            c.seed,
            m.n_qubits(),
            m.lattice.edges.len(),
            m.h1.len()
        );
    }
    ctx.announce(&p, "model instance");
    Ok(0)
}

fn agp_cmd(ctx: &Ctx, a: &AgpArgs) -> Result<i32> {
    let mut c = a.model.resolve()?;
    if let Some(m) = a.steps {
        c.schedule.steps = m;
    }
    let m = c.build()?;
    let s = c.schedule()?;
    let pool = bench::pool(ctx.threads)?;
    let rows = bench::alpha_table(&pool, &m, &s, a.order)?;
    let name = format!("agp_{}_l{}", kind_id(c.kind), a.order);
    let p = ctx.path(&format!("{name}.csv"));
    let n = write_alpha_csv(&p, &rows)?;
    ctx.announce(&p, &format!("{n} steps"));
    let config = json!({ "model": c, "l": a.order });
    let mut man = Manifest::new("agp", config, c.seed);
    man.artifacts.push(format!("{name}.csv"));
    ctx.manifest(&name, &man)?;
    if ctx.json {
        let v: Vec<_> = rows.iter().map(|r| json!({"step": r.step, "lambda": r.lambda, "alpha": r.alpha})).collect();
        println!("{}", serde_json::to_string(&v)?);
    }
    Ok(0)
}

fn default_family(kind: ModelKind, f: Option<FamilyArg>) -> BlockFamily {
    f.map_or(Decomposition::family(kind), Into::into)
}

fn synth_cmd(ctx: &Ctx, a: &SynthArgs) -> Result<i32> {
    let c = a.model.resolve()?;
    let m = c.build()?;
    if !(0.0..=1.0).contains(&a.lambda) {
        return Err(Error::Config("lambda must lie in [0, 1]".into()));
    }
    if !(a.dt > 0.0) {
        return Err(Error::Config("dt must be positive".into()));
    }
    let (h, dh) = m.interpolate(a.lambda)?;
    let set = if a.unit_alpha {
        GeneratorSet::with_alpha(h, dh, a.lambda, a.lambda_dot, vec![1.0; a.order])?
    } else {
        build_generator_set(&m, a.lambda, a.lambda_dot, a.order)?
    };
    let mut ir = CircuitIR::new(m.n_qubits());
    let family = default_family(m.kind, a.family);
    let factors = match a.method {
        Method::Pf => {
            let ids = StepGenerators::register(&mut ir, &set, "")?;
            let cd = synth_order_l(&ids, a.dt, a.lambda_dot, &set.alpha, a.expansion.into())?;
            trotter_step(ids.h, a.dt, cd, a.ordering)
        }
        Method::Aab | Method::Digital => {
            if !supported(m.kind, family) {
                return Err(Error::Config(format!("{} cannot be realized on {} blocks", kind_id(c.kind), family_name(family))));
            }
            let mut syn = Synthesizer::new(&mut ir, &m, family)?;
            let ids = StepGenerators::register(&mut ir, &set, "")?;
            syn.step(&mut ir, &set, &ids, a.dt, a.ordering, a.method == Method::Digital)?
        }
        _ => return Err(Error::Config("synth supports the pf, aab and digital methods".into())),
    };
    ir.push_step(factors)?;
    let name = format!("circuit_{}_{}_l{}", kind_id(c.kind), a.method.id(), a.order);
    let p = ctx.path(&format!("{name}.json"));
    let cj = circuit_to_json(&ir);
    write_json(&p, &cj)?;
    let k = ir.counters();
    if ctx.json {
        println!("{}", serde_json::to_string(&cj.counters)?);
    } else {
        let gc: String = k.gamma_c.iter().map(|(n, v)| format!(" gamma_C{n}={v}")).collect();
        println!(
            "{} factors: gamma_H={}{} analog_blocks={} rotation_layers={} other={}",
            k.total_factors(),
            k.gamma_h,
            gc,
            k.analog_blocks,
            k.rotation_layers,
            k.other_exps
        );
    }
    ctx.announce(&p, "circuit");
    Ok(0)
}

fn depth_cmd(ctx: &Ctx, a: &DepthArgs) -> Result<i32> {
    let kind: ModelKind = KindName::from(a.model).into();
    let family = default_family(kind, a.family);
    let compute = a.compute || (!a.no_compute && a.order <= 2);
    let model = if compute {
        let delta = if kind == ModelKind::Xxz { XXZ_TABLE_DELTA } else { 0.5 };
        Some(table_instance(kind, a.size, delta, a.seed)?)
    } else {
        None
    };
    let r = depth_report(kind, a.order, a.size, family, model.as_ref())?;
    let rj = depth_report_to_json(&r);
    let name = format!("depth_{}_L{}_l{}", kind_id(a.model.into()), a.size, a.order);
    let p = ctx.path(&format!("{name}.json"));
    write_json(&p, &rj)?;
    if ctx.json {
        println!("{}", serde_json::to_string(&rj)?);
    } else {
        print!("{}", depth_report_text(&r));
    }
    ctx.announce(&p, "depth report");
    Ok(0)
}

fn scaling_cmd(ctx: &Ctx, a: &ScalingArgs) -> Result<i32> {
    let c = a.model.resolve()?;
    let m = c.build()?;
    let grid = log_grid(a.dt_min, a.dt_max, a.per_decade)?;
    let pool = bench::pool(ctx.threads)?;
    let fit = bench::error_scaling(&pool, &m, a.decomp, a.lambda, &grid, a.cap)?;
    let name = format!("error_scaling_{}_{}", kind_id(c.kind), a.decomp.id());
    let p = ctx.path(&format!("{name}.csv"));
    let n = write_scaling_csv(&p, &fit)?;
    ctx.announce(&p, &format!("{n} points"));
    let fj = fit_to_json(&fit);
    let config = json!({
        "model": c, "decomposition": a.decomp.id(), "lambda": a.lambda,
        "dt_min": a.dt_min, "dt_max": a.dt_max, "per_decade": a.per_decade,
    });
    let mut man = Manifest::new("error-scaling", config, c.seed);
    man.artifacts.push(format!("{name}.csv"));
    man.results = json!({ "fit": fj, "exact": fit.fit.is_none() });
    ctx.manifest(&name, &man)?;
    if ctx.json {
        println!("{}", serde_json::to_string(&man.results)?);
    } else {
        match &fj {
            Some(f) => println!(
                "{}: nu = {:.4}, b = {:.4e} over [{:.2e}, {:.2e}]{}",
                a.decomp.id(),
                f.nu,
                f.prefactor,
                f.window[0],
                f.window[1],
                f.breakdown.map_or(String::new(), |b| format!(", breakdown at {b:.2e}"))
            ),
            None => println!("{}: exact to rounding, no fit", a.decomp.id()),
        }
    }
    Ok(0)
}

fn fidelity_cmd(ctx: &Ctx, a: &FidelityArgs) -> Result<i32> {
    let c = a.model.resolve()?;
    let m = c.build()?;
    if a.steps.is_empty() || a.steps.contains(&0) {
        return Err(Error::Config("step counts must be positive".into()));
    }
    let mut cfg = EvolveConfig::new(a.method, a.order);
    cfg.ordering = a.ordering;
    cfg.expansion = a.expansion.into();
    cfg.family = a.family.map(Into::into);
    cfg.caps = Caps { state: a.state_cap, ..Caps::default() };
    cfg.shots = a.shots.map(|count| Shots { count, seed: a.shot_seed.unwrap_or(c.seed) });
    let pool = bench::pool(ctx.threads)?;
    let jobs = a
        .steps
        .iter()
        .map(|&mm| Ok((Schedule::new(c.schedule.total_time, mm)?, cfg)))
        .collect::<Result<Vec<_>>>()?;
    let runs = bench::evolve_many(&pool, &m, &jobs)?;
    let base = format!("fidelity_{}_{}_l{}_{}", kind_id(c.kind), a.method.id(), a.order, a.ordering.id());
    let mut man = Manifest::new(
        "fidelity",
        json!({
            "model": c, "l": a.order, "method": a.method.id(), "M": a.steps, "ordering": a.ordering.id(),
            "shots": a.shots, "shot_seed": cfg.shots.map(|s| s.seed), "reference": a.reference,
        }),
        c.seed,
    );
    let mut results = Vec::new();
    for r in &runs {
        let name = format!("{base}_M{}.csv", r.schedule.steps);
        let p = ctx.path(&name);
        let n = write_simulation_csv(&p, r)?;
        ctx.announce(&p, &format!("{n} steps"));
        man.artifacts.push(name);
        results.push(json!({
            "M": r.schedule.steps, "final_fidelity": r.final_fidelity(),
            "final_fidelity_shots": r.records.last().and_then(|x| x.fidelity_shots),
            "magnetization_drift": r.magnetization_drift(),
        }));
    }
    let mut summary = json!({ "runs": results });
    if a.reference {
        if a.method == Method::Aqc {
            return Err(Error::Config("the reference is an exact CD evolution; use it with a CD method".into()));
        }
        let start = bench::reference_steps(c.schedule.total_time, &a.steps)?;
        let reference = dacqc_core::evolve::converged_reference(
            &m,
            c.schedule.total_time,
            a.order,
            start,
            bench::REFERENCE_TOL,
            bench::REFERENCE_MAX_DOUBLINGS,
        )?;
        let name = format!("fidelity_{}_reference_l{}.csv", kind_id(c.kind), a.order);
        let p = ctx.path(&name);
        let n = write_simulation_csv(&p, &reference)?;
        ctx.announce(&p, &format!("{n} steps"));
        man.artifacts.push(name);
        let dev = runs.iter().map(|r| dacqc_core::evolve::max_deviation(r, &reference)).collect::<std::result::Result<Vec<_>, dacqc_core::Error>>()?;
        summary["reference"] = json!({ "M": reference.schedule.steps, "final_fidelity": reference.final_fidelity() });
        summary["max_deviation"] = json!(dev);
    }
    man.results = summary;
    ctx.manifest(&base, &man)?;
    if ctx.json {
        println!("{}", serde_json::to_string(&man.results)?);
    } else {
        for r in &runs {
            println!("{} M={}: final fidelity {:.6}", a.method.id(), r.schedule.steps, r.final_fidelity());
        }
        if let Some(d) = man.results.get("max_deviation") {
            println!("max deviation from reference: {d}");
        }
    }
    Ok(0)
}

fn table_cmd(ctx: &Ctx, a: &TableArgs) -> Result<i32> {
    let kind: ModelKind = KindName::from(a.model).into();
    let cells = table_regression(kind, a.l_max, &a.sizes, a.seed)?;
    let cj: Vec<_> = cells.iter().map(table_cell_to_json).collect();
    let name = format!("table_check_{}", kind_id(a.model.into()));
    let p = ctx.path(&format!("{name}.json"));
    write_json(&p, &cj)?;
    if ctx.json {
        println!("{}", serde_json::to_string(&cj)?);
    } else {
        for c in &cells {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let d: Vec<String> =
                c.discrepancies().iter().map(|(w, a, b)| format!("{w}-body closed {a} computed {b}")).collect();
            println!("{status} l={} L={} {}", c.l, c.size, d.join("; "));
        }
    }
    ctx.announce(&p, "table check");
    let all = cells.iter().all(|c| c.passed());
    Ok(if a.strict && !all { 1 } else { 0 })
}
