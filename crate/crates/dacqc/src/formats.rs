//! JSON and CSV formats.
//!
//! Every writer emits deterministic bytes for the same input: canonical term
//! order, sorted JSON object keys, shortest round-trip float formatting.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use dacqc_core::circuit::{Axis, BlockFamily, CircuitIR, FactorKind, GeneratorRole};
use dacqc_core::depth::{DepthReport, TableCell};
use dacqc_core::evolve::SimulationResult;
use dacqc_core::fit::ScalingFit;
use dacqc_core::model::{LatticeSpec, ModelInstance, ModelKind, ModelParams, Schedule};
use dacqc_core::{Complex64, PauliSum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub pauli: String,
    pub re: f64,
    pub im: f64,
}

pub fn pauli_sum_to_json(s: &PauliSum) -> Vec<TermJson> {
    s.to_labels().into_iter().map(|(pauli, c)| TermJson { pauli, re: c.re, im: c.im }).collect()
}

/// `n_qubits` is needed for the empty sum; labels must all have that length.
pub fn pauli_sum_from_json(n_qubits: usize, terms: &[TermJson]) -> Result<PauliSum> {
    if let Some(t) = terms.iter().find(|t| t.pauli.chars().count() != n_qubits) {
        return Err(Error::Config(format!("label {:?} does not have {n_qubits} sites", t.pauli)));
    }
    Ok(PauliSum::from_labels(n_qubits, terms.iter().map(|t| (t.pauli.as_str(), Complex64::new(t.re, t.im))))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    #[serde(alias = "IsingSpinGlass")]
    Ising,
    #[serde(alias = "XXZ")]
    Xxz,
}

impl From<KindName> for ModelKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Ising => ModelKind::IsingSpinGlass,
            KindName::Xxz => ModelKind::Xxz,
        }
    }
}

impl From<ModelKind> for KindName {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::IsingSpinGlass => KindName::Ising,
            ModelKind::Xxz => KindName::Xxz,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn seven() -> u64 {
    7
}

fn ten() -> usize {
    10
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(rename = "T", default = "one")]
    pub total_time: f64,
    #[serde(rename = "M", default = "ten")]
    pub steps: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { total_time: 1.0, steps: 10 }
    }
}

/// `{"kind", "L", "J", "h", "delta", "seed", "schedule": {"T", "M"}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: KindName,
    #[serde(rename = "L")]
    pub size: usize,
    #[serde(rename = "J", default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default = "half")]
    pub delta: f64,
    #[serde(default = "seven")]
    pub seed: u64,
    /// Per-edge random XXZ couplings.
    #[serde(default)]
    pub random_couplings: bool,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

impl ModelConfig {
    pub fn new(kind: KindName) -> Self {
        ModelConfig {
            kind,
            size: 3,
            j: 1.0,
            h: 1.0,
            delta: 0.5,
            seed: 7,
            random_couplings: false,
            schedule: ScheduleConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.size < 2 {
            return bad("L must be at least 2");
        }
        if self.size * self.size > 64 {
            return bad("L x L must not exceed 64 sites");
        }
        if ![self.j, self.h, self.delta].iter().all(|x| x.is_finite()) {
            return bad("J, h and delta must be finite");
        }
        if self.j == 0.0 {
            return bad("J must be nonzero");
        }
        if !(self.schedule.total_time > 0.0 && self.schedule.total_time.is_finite()) {
            return bad("schedule T must be positive");
        }
        if self.schedule.steps == 0 {
            return bad("schedule M must be positive");
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams { j: self.j, h: self.h, delta: self.delta, random_xxz_couplings: self.random_couplings }
    }

    pub fn build(&self) -> Result<ModelInstance> {
        self.validate()?;
        Ok(dacqc_core::model::build_model(self.kind.into(), self.size, self.params(), self.seed)?)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        self.validate()?;
        Ok(Schedule::new(self.schedule.total_time, self.schedule.steps)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: ModelConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path).map_err(Error::io(path))?)
    }
}

/// A full instance: the config plus the coupling tables and both
/// Hamiltonians, so an experiment can be replayed without the RNG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelExport {
    pub config: ModelConfig,
    pub edges: Vec<[usize; 2]>,
    pub couplings: Vec<f64>,
    pub fields: Vec<f64>,
    #[serde(rename = "H0")]
    pub h0: Vec<TermJson>,
    #[serde(rename = "H1")]
    pub h1: Vec<TermJson>,
}

impl ModelExport {
    pub fn new(config: &ModelConfig, m: &ModelInstance) -> Self {
        ModelExport {
            config: config.clone(),
            edges: m.lattice.edges.iter().map(|e| [e.a, e.b]).collect(),
            couplings: m.couplings.clone(),
            fields: m.fields.clone(),
            h0: pauli_sum_to_json(&m.h0),
            h1: pauli_sum_to_json(&m.h1),
        }
    }

    /// Rebuild from the stored tables and check the stored Hamiltonians.
    pub fn instance(&self) -> Result<ModelInstance> {
        self.config.validate()?;
        let c = &self.config;
        let lattice = LatticeSpec::square(c.size)?;
        let edges: Vec<[usize; 2]> = lattice.edges.iter().map(|e| [e.a, e.b]).collect();
        if edges != self.edges {
            return Err(Error::Config("edge list does not match the lattice".into()));
        }
        let m = ModelInstance::from_couplings(
            c.kind.into(),
            lattice,
            c.params(),
            c.seed,
            self.couplings.clone(),
            self.fields.clone(),
        )?;
        let n = m.n_qubits();
        for (name, stored, built) in [("H0", &self.h0, &m.h0), ("H1", &self.h1, &m.h1)] {
            let diff = pauli_sum_from_json(n, stored)?.sub(built)?;
            if diff.max_abs_coefficient() > 1e-12 {
                return Err(Error::Config(format!("stored {name} does not match the coupling tables")));
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorJson {
    pub id: usize,
    pub label: String,
    pub role: String,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotationJson {
    pub site: usize,
    pub axis: String,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FactorJson {
    ExactExp { generator: usize, re: f64, im: f64, provenance: String },
    AnalogBlock { generator: usize, duration: f64, provenance: String },
    RotationLayer { rotations: Vec<RotationJson>, provenance: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountersJson {
    pub gamma_h: usize,
    pub gamma_c: BTreeMap<usize, usize>,
    pub analog_blocks: usize,
    pub rotation_layers: usize,
    pub other_exps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitJson {
    pub n_qubits: usize,
    pub generators: Vec<GeneratorJson>,
    pub steps: Vec<Vec<FactorJson>>,
    pub counters: CountersJson,
}

pub fn family_name(f: BlockFamily) -> &'static str {
    match f {
        BlockFamily::Zz => "zz",
        BlockFamily::XxPlusYy => "xx+yy",
    }
}

fn role_name(r: GeneratorRole) -> String {
    match r {
        GeneratorRole::Hamiltonian => "hamiltonian".into(),
        GeneratorRole::NestedCommutator(n) => format!("nested_commutator:{n}"),
        GeneratorRole::Native(f) => format!("native:{}", family_name(f)),
        GeneratorRole::Other => "other".into(),
    }
}

fn axis_name(a: Axis) -> String {
    a.as_char().to_string()
}

pub fn circuit_to_json(ir: &CircuitIR) -> CircuitJson {
    let generators = ir
        .generators()
        .iter()
        .enumerate()
        .map(|(id, g)| GeneratorJson { id, label: g.label.clone(), role: role_name(g.role), terms: pauli_sum_to_json(&g.op) })
        .collect();
    let steps = ir
        .steps()
        .iter()
        .map(|s| {
            s.iter()
                .map(|f| {
                    let provenance = f.provenance.to_string();
                    match &f.kind {
                        FactorKind::ExactExp { generator, coeff } => {
                            FactorJson::ExactExp { generator: generator.0, re: coeff.re, im: coeff.im, provenance }
                        }
                        FactorKind::AnalogBlock { generator, duration } => {
                            FactorJson::AnalogBlock { generator: generator.0, duration: *duration, provenance }
                        }
                        FactorKind::RotationLayer(rs) => FactorJson::RotationLayer {
                            rotations: rs
                                .iter()
                                .map(|r| RotationJson { site: r.site, axis: axis_name(r.axis), angle: r.angle })
                                .collect(),
                            provenance,
                        },
                    }
                })
                .collect()
        })
        .collect();
    let c = ir.counters();
    CircuitJson {
        n_qubits: ir.n_qubits(),
        generators,
        steps,
        counters: CountersJson {
            gamma_h: c.gamma_h,
            gamma_c: c.gamma_c.clone(),
            analog_blocks: c.analog_blocks,
            rotation_layers: c.rotation_layers,
            other_exps: c.other_exps,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthRowJson {
    pub weight: usize,
    pub closed_form: usize,
    pub computed: Option<usize>,
    pub p_min: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthReportJson {
    pub kind: KindName,
    pub l: usize,
    #[serde(rename = "L")]
    pub size: usize,
    pub family: &'static str,
    pub rows: Vec<DepthRowJson>,
    pub aab_count: usize,
    pub edge_coloring_bound: Option<usize>,
    pub extra_weights: BTreeMap<usize, usize>,
    pub matches: Option<bool>,
}

pub fn depth_report_to_json(r: &DepthReport) -> DepthReportJson {
    DepthReportJson {
        kind: r.kind.into(),
        l: r.l,
        size: r.size,
        family: family_name(r.family),
        rows: r
            .rows
            .iter()
            .map(|x| DepthRowJson { weight: x.weight, closed_form: x.closed_form, computed: x.computed, p_min: x.p_min })
            .collect(),
        aab_count: r.aab_count,
        edge_coloring_bound: r.edge_coloring_bound,
        extra_weights: r.extra_weights.clone(),
        matches: r.matches(),
    }
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Columns as in the printed tables (order, term, count, P_min, AABs), with
/// the computed count next to the closed form.
pub fn depth_report_text(r: &DepthReport) -> String {
    let mut out = format!(
        "{} L={} l={} family={}\n{:<6} {:<8} {:>12} {:>10} {:>6} {:>6}\n",
        match r.kind {
            ModelKind::IsingSpinGlass => "ising",
            ModelKind::Xxz => "xxz",
        },
        r.size,
        r.l,
        family_name(r.family),
        "order",
        "term",
        "closed_form",
        "computed",
        "P_min",
        "AABs"
    );
    for (i, row) in r.rows.iter().enumerate() {
        let order = if i == 0 { format!("l={}", r.l) } else { String::new() };
        let aabs = if i == 0 { r.aab_count.to_string() } else { String::new() };
        out.push_str(&format!(
            "{:<6} {:<8} {:>12} {:>10} {:>6} {:>6}\n",
            order,
            format!("{}-body", row.weight),
            row.closed_form,
            opt(row.computed),
            opt(row.p_min),
            aabs
        ));
    }
    for (w, c) in &r.extra_weights {
        out.push_str(&format!("{:<6} {:<8} {:>12} {:>10} {:>6} {:>6}\n", "", format!("{w}-body"), "-", c, "-", ""));
    }
    if let Some(b) = r.edge_coloring_bound {
        out.push_str(&format!("two-body edge-colouring bound: {b}\n"));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCellJson {
    pub l: usize,
    #[serde(rename = "L")]
    pub size: usize,
    pub passed: bool,
    /// `[weight, closed form, computed]`.
    pub discrepancies: Vec<[usize; 3]>,
    pub report: DepthReportJson,
}

pub fn table_cell_to_json(c: &TableCell) -> TableCellJson {
    TableCellJson {
        l: c.l,
        size: c.size,
        passed: c.passed(),
        discrepancies: c.discrepancies().into_iter().map(|(w, a, b)| [w, a, b]).collect(),
        report: depth_report_to_json(&c.report),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    Ok(csv::Writer::from_path(path)?)
}

fn f(x: f64) -> String {
    format!("{x}")
}

pub const SIMULATION_HEADER: [&str; 5] = ["step", "t", "lambda", "fidelity", "magnetization"];

/// `step,t,lambda,fidelity,magnetization[,fidelity_shots]`.
pub fn write_simulation_csv(path: &Path, r: &SimulationResult) -> Result<usize> {
    let mut w = csv_writer(path)?;
    let shots = r.config.shots.is_some();
    let mut header: Vec<&str> = SIMULATION_HEADER.to_vec();
    if shots {
        header.push("fidelity_shots");
    }
    w.write_record(&header)?;
    for rec in &r.records {
        let mut row = vec![rec.step.to_string(), f(rec.t), f(rec.lambda), f(rec.fidelity), f(rec.magnetization)];
        if shots {
            row.push(rec.fidelity_shots.map(f).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(r.records.len())
}

/// `dt,error,in_window`.
pub fn write_scaling_csv(path: &Path, s: &ScalingFit) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record(["dt", "error", "in_window"])?;
    for (i, (dt, e)) in s.dts.iter().zip(&s.errors).enumerate() {
        let inside = s.fit.is_some() && (s.window.0..s.window.1).contains(&i);
        w.write_record([f(*dt), f(*e), (inside as u8).to_string()])?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(s.dts.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaRow {
    pub step: usize,
    pub t: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
    pub alpha: Vec<f64>,
}

/// `step,t,lambda,lambda_dot,alpha_1..alpha_l`.
pub fn write_alpha_csv(path: &Path, rows: &[AlphaRow]) -> Result<usize> {
    let mut w = csv_writer(path)?;
    let l = rows.first().map_or(0, |r| r.alpha.len());
    let mut header: Vec<String> = ["step", "t", "lambda", "lambda_dot"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=l).map(|k| format!("alpha_{k}")));
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.step.to_string(), f(r.t), f(r.lambda), f(r.lambda_dot)];
        row.extend(r.alpha.iter().map(|a| f(*a)));
        w.write_record(&row)?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(rows.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub nu: f64,
    pub prefactor: f64,
    pub residual: f64,
    pub window: [f64; 2],
    pub window_found: bool,
    pub breakdown: Option<f64>,
}

pub fn fit_to_json(s: &ScalingFit) -> Option<FitJson> {
    s.fit.as_ref().map(|p| FitJson {
        nu: p.nu,
        prefactor: p.prefactor,
        residual: p.residual,
        window: [s.dts[s.window.0], s.dts[s.window.1 - 1]],
        window_found: s.window_found,
        breakdown: s.breakdown,
    })
}

/// Provenance record written next to every experiment's artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
    pub results: serde_json::Value,
}

/// SHA-256 of the canonical (sorted-key, compact) JSON of `config`.
pub fn config_hash(config: &serde_json::Value) -> String {
    let text = serde_json::to_string(config).expect("values always serialize");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("dacqc".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Manifest {
            command: command.to_string(),
            config_hash: config_hash(&config),
            config,
            seed,
            versions,
            artifacts: Vec::new(),
            results: serde_json::Value::Null,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    // through Value so that object keys come out sorted
    let v = serde_json::to_value(value)?;
    let mut file = fs::File::create(path).map_err(Error::io(path))?;
    serde_json::to_writer_pretty(&mut file, &v)?;
    file.write_all(b"\n").map_err(Error::io(path))?;
    Ok(())
}
