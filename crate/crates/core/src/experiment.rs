//! Experiment manifests, dispatch to the measurement layers, and report
//! serialization.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::coding::{build_inner_scheme, check_power, CodingScheme, FloorQuantizer, InnerSchemeKind, InnerSchemeParams};
use crate::dither::{density_convergence_test, derandomize_dither};
use crate::error::{Error, Result};
use crate::montecarlo::{domain, stream_rng};
use crate::network::{validate_network, NetworkDescription, NetworkModel, NodeId, TrafficDemand};
use crate::noise_lab::{convergence_sweep, BinSelector};
use crate::pipeline::{convexity_probe, epsilon_kb_report, estimate_error_probability, TransformedScheme};
use crate::stats::two_proportion_rejects;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NoiseLab,
    Transform,
    Quantize,
    Convexity,
    Simulate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NoiseLab => "noise-lab",
            ExperimentKind::Transform => "transform",
            ExperimentKind::Quantize => "quantize",
            ExperimentKind::Convexity => "convexity",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

fn default_trials() -> usize {
    10_000
}
fn default_b_list() -> Vec<usize> {
    vec![4, 16, 64, 256]
}
fn default_m_list() -> Vec<u32> {
    vec![1, 3, 5, 8]
}
fn default_alpha() -> f64 {
    0.01
}
fn default_candidates() -> usize {
    16
}
fn default_bins() -> BinSelector {
    BinSelector::AllTypes
}

/// Experiment description. `network` is resolved relative to the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub network: PathBuf,
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_b_list")]
    pub b_list: Vec<usize>,
    /// Inner block length; sets the block length of uncoded PAM and must
    /// match the length of the other presets.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<u32>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub inner: InnerSchemeParams,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// Node whose noise law the noise-lab and quantize experiments study;
    /// defaults to the first destination of the first demand.
    #[serde(default)]
    pub noise_node: Option<String>,
    #[serde(default = "default_bins")]
    pub bins: BinSelector,
}

impl ExperimentManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    /// Reads a manifest and makes its network path absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut m = Self::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if m.network.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            m.network = base.join(&m.network);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.b_list.is_empty() || self.b_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("b_list must be nonempty and strictly ascending".into()));
        }
        if let Some(&b) = self.b_list.iter().find(|&&b| b < 2 || b % 2 != 0) {
            return Err(Error::OddBlockSize(b));
        }
        if self.m_list.is_empty() || self.m_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("m_list must be nonempty and strictly ascending".into()));
        }
        if self.candidates == 0 {
            return Err(Error::InvalidArgument("candidates must be positive".into()));
        }
        Ok(())
    }
}

/// One report cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_g12(*v),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(v) => json!(v),
            Cell::Float(v) => float_value(*v),
            Cell::Bool(v) => Value::Bool(*v),
        }
    }
}

/// Formats like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..12).contains(&exp) {
        trim(&format!("{:.*}", (11 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

fn float_value(x: f64) -> Value {
    let rounded: f64 = format_g12(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

/// Rounds every float inside a JSON value to 12 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => float_value(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

/// Rows under a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ReportTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// Writes a table to `path`; empty tables are an error.
pub fn emit_report(table: &ReportTable, format: ReportFormat, path: &Path) -> Result<()> {
    if table.is_empty() {
        return Err(Error::EmptyInput("report rows"));
    }
    let text = match format {
        ReportFormat::Csv => table.to_csv()?,
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&table.to_json()).expect("json serializes");
            s.push('\n');
            s
        }
    };
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_summary(summary: &Value, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(&round_floats(summary.clone())).expect("json serializes");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub table: ReportTable,
    pub summary: Value,
    /// Invariant violations; nonempty means the run failed its checks.
    pub violations: Vec<String>,
}

struct Context {
    net: NetworkModel<f64>,
    demand: TrafficDemand,
}

fn load_network(m: &ExperimentManifest) -> Result<Context> {
    let desc = NetworkDescription::load(&m.network)?;
    let report = validate_network(&desc);
    if !report.is_valid() {
        return Err(Error::InvalidNetwork(format!("{}: {report}", m.network.display())));
    }
    let (net, demand) = desc.build()?;
    Ok(Context { net, demand })
}

fn noise_node(m: &ExperimentManifest, ctx: &Context) -> Result<NodeId> {
    match &m.noise_node {
        Some(label) => ctx
            .net
            .node(label)
            .ok_or_else(|| Error::InvalidArgument(format!("noise_node `{label}` is not in the network"))),
        None => ctx
            .demand
            .demands()
            .first()
            .map(|d| d.destinations[0])
            .ok_or_else(|| Error::InvalidArgument("network has no demand; set noise_node".into())),
    }
}

fn inner_scheme(m: &ExperimentManifest, ctx: &Context) -> Result<CodingScheme> {
    let mut params = m.inner.clone();
    if let (Some(k), InnerSchemeKind::UncodedPam) = (m.k, params.kind) {
        params.block_length = k;
    }
    let scheme = build_inner_scheme(&params, &ctx.net, &ctx.demand)?;
    if let Some(k) = m.k {
        if scheme.block_length() != k {
            return Err(Error::InvalidArgument(format!(
                "k = {k} does not match the {} block length {}",
                scheme.name(),
                scheme.block_length()
            )));
        }
    }
    Ok(scheme)
}

fn power_violations(scheme: &CodingScheme, seed: u64, trials: usize) -> Vec<String> {
    let report = check_power(scheme, trials.min(10_000), &mut stream_rng(seed, domain::POWER_CHECK, 0));
    if report.pass {
        Vec::new()
    } else {
        vec![format!(
            "power constraint violated: codeword max {}, relay max {}",
            format_g12(report.codeword_max_power),
            format_g12(report.relay_max_power)
        )]
    }
}

/// Runs one experiment. Errors mean the manifest or its inputs are unusable.
pub fn run_experiment(m: &ExperimentManifest) -> Result<ExperimentOutcome> {
    m.validate()?;
    let ctx = load_network(m)?;
    let mut summary = Map::new();
    summary.insert("experiment".into(), json!(m.experiment.name()));
    summary.insert("seed".into(), json!(m.seed));
    summary.insert("trials".into(), json!(m.trials));
    let mut violations = Vec::new();
    let table = match m.experiment {
        ExperimentKind::NoiseLab => {
            let v = noise_node(m, &ctx)?;
            let spec = ctx.net.noise(v).clone();
            let reports = convergence_sweep(&spec, &m.b_list, m.trials, &m.bins, m.alpha, m.seed)?;
            let mut t = ReportTable::new(&["family", "sigma2", "b", "bin", "trials", "ks", "critical", "variance", "pass"]);
            for r in &reports {
                t.push(vec![
                    r.family.clone().into(),
                    r.sigma2.into(),
                    r.b.into(),
                    r.bin.into(),
                    r.trials.into(),
                    r.ks.into(),
                    r.critical.into(),
                    r.variance.into(),
                    r.pass.into(),
                ]);
            }
            let gaussian = spec.family_name() == "gaussian";
            if gaussian {
                for r in reports.iter().filter(|r| !r.pass) {
                    violations.push(format!("gaussian noise failed KS at b = {}, bin {}: {}", r.b, r.bin, format_g12(r.ks)));
                }
            }
            summary.insert("noise_node".into(), json!(ctx.net.label(v)));
            summary.insert("family".into(), json!(spec.family_name()));
            summary.insert("passed".into(), json!(reports.iter().filter(|r| r.pass).count()));
            summary.insert("rows".into(), json!(reports.len()));
            t
        }
        ExperimentKind::Transform => {
            let inner = inner_scheme(m, &ctx)?;
            violations.extend(power_violations(&inner, m.seed, m.trials));
            let mut t = ReportTable::new(&[
                "experiment",
                "family",
                "sigma2",
                "b",
                "k",
                "bin",
                "trials",
                "eps_hat",
                "ci_lo",
                "ci_hi",
                "eps_k_baseline",
                "fano_bound",
            ]);
            let mut sweep = Vec::new();
            for &b in &m.b_list {
                let ts = TransformedScheme::new(inner.clone(), b)?;
                let r = epsilon_kb_report(&ts, &ctx.net, m.trials, m.seed)?;
                for e in &r.per_bin {
                    t.push(vec![
                        "transform".into(),
                        r.family.clone().into(),
                        r.sigma2.into(),
                        b.into(),
                        r.k.into(),
                        e.bin.into(),
                        r.trials.into(),
                        e.estimate.p_hat.into(),
                        e.estimate.ci_lo.into(),
                        e.estimate.ci_hi.into(),
                        r.eps_k.p_hat.into(),
                        r.fano_bounds[0].into(),
                    ]);
                }
                let rejections = r
                    .per_bin
                    .iter()
                    .filter(|e| two_proportion_rejects(&e.estimate, &r.eps_k, m.alpha))
                    .count();
                sweep.push(json!({
                    "b": b,
                    "eps_k": r.eps_k.p_hat,
                    "eps_kb": r.eps_kb,
                    "worst_bin": r.worst_bin,
                    "gap": (r.eps_kb - r.eps_k.p_hat).abs(),
                    "bins_rejecting_equality": rejections,
                    "fano_bounds": r.fano_bounds,
                    "mi_bits_per_use": r.mi_bits_per_use,
                }));
            }
            summary.insert("scheme".into(), json!(inner.name()));
            summary.insert("rate".into(), json!(inner.rate(0)));
            summary.insert("sweep".into(), Value::Array(sweep));
            t
        }
        ExperimentKind::Quantize => {
            let inner = inner_scheme(m, &ctx)?;
            let v = noise_node(m, &ctx)?;
            let spec = ctx.net.noise(v);
            let density = density_convergence_test(spec, &m.m_list, m.trials, m.alpha, m.seed)?;
            let unquantized = inner.with_precision(None);
            let eps_n = estimate_error_probability(&unquantized, &ctx.net, m.trials, m.seed)?;
            let mut t = ReportTable::new(&["m", "candidate_id", "trials", "error_estimate", "ci_low", "ci_high", "selected"]);
            let mut per_m = Vec::new();
            for &res in &m.m_list {
                let r = derandomize_dither(&unquantized, &ctx.net, res, m.candidates, m.trials, m.seed)?;
                for c in &r.candidates {
                    t.push(vec![
                        res.into(),
                        c.id.into(),
                        c.estimate.trials.into(),
                        c.estimate.p_hat.into(),
                        c.estimate.ci_lo.into(),
                        c.estimate.ci_hi.into(),
                        (c.id == r.selected).into(),
                    ]);
                }
                if r.best().p_hat > r.mean_estimate {
                    violations.push(format!("m = {res}: selected candidate worse than the candidate mean"));
                }
                per_m.push(json!({
                    "m": res,
                    "selected": r.selected,
                    "best": r.best().p_hat,
                    "mean": r.mean_estimate,
                    "within_unquantized_ci": eps_n.contains(r.best().p_hat),
                }));
            }
            summary.insert("eps_n".into(), json!(eps_n));
            summary.insert("density".into(), serde_json::to_value(&density).expect("serializes"));
            summary.insert("derandomization".into(), Value::Array(per_m));
            t
        }
        ExperimentKind::Convexity => {
            let inner = inner_scheme(m, &ctx)?;
            let r = convexity_probe(&inner, &ctx.net, m.trials, m.seed, &FloorQuantizer, false)?;
            if r.violations > 0 {
                violations.push(format!("{} of {} convexity probes failed", r.violations, r.probes));
            }
            let mut t = ReportTable::new(&["experiment", "scheme", "precision", "probes", "violations"]);
            t.push(vec![
                "convexity".into(),
                inner.name().into(),
                inner.precision().unwrap_or(0).into(),
                r.probes.into(),
                r.violations.into(),
            ]);
            summary.insert("violations_found".into(), json!(r.violations));
            t
        }
        ExperimentKind::Simulate => {
            let inner = inner_scheme(m, &ctx)?;
            violations.extend(power_violations(&inner, m.seed, m.trials));
            let e = estimate_error_probability(&inner, &ctx.net, m.trials, m.seed)?;
            let d = inner.decoders()[0].node;
            let spec = ctx.net.noise(d);
            let mut t = ReportTable::new(&[
                "experiment", "scheme", "family", "sigma2", "n", "rate", "trials", "eps_hat", "ci_lo", "ci_hi",
            ]);
            t.push(vec![
                "simulate".into(),
                inner.name().into(),
                spec.family_name().into(),
                spec.variance.into(),
                inner.block_length().into(),
                inner.rate(0).into(),
                m.trials.into(),
                e.p_hat.into(),
                e.ci_lo.into(),
                e.ci_hi.into(),
            ]);
            summary.insert("estimate".into(), json!(e));
            t
        }
    };
    summary.insert("violations".into(), json!(violations));
    Ok(ExperimentOutcome { table, summary: Value::Object(summary), violations })
}

/// Paths written by [`write_outcome`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub report: PathBuf,
    pub summary: PathBuf,
}

/// Writes `<kind>.<ext>` and `summary.json` into `dir`.
pub fn write_outcome(
    outcome: &ExperimentOutcome,
    kind: ExperimentKind,
    format: ReportFormat,
    dir: &Path,
) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let report = dir.join(format!("{}.{}", kind.name(), format.extension()));
    let summary = dir.join("summary.json");
    emit_report(&outcome.table, format, &report)?;
    write_summary(&outcome.summary, &summary)?;
    Ok(WrittenFiles { report, summary })
}

/// Human-readable one-line digest of an outcome.
pub fn describe(outcome: &ExperimentOutcome) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} rows", outcome.table.len());
    if outcome.violations.is_empty() {
        s.push_str(", no violations");
    } else {
        let _ = write!(s, ", {} violation(s): {}", outcome.violations.len(), outcome.violations.join("; "));
    }
    s
}
