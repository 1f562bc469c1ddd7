//! Coding schemes over an additive-noise network: codebooks at the sources,
//! causal relaying functions, decoders, and the finite-reading-precision
//! read path.

use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NetworkModel, NodeId, NoiseSampler, TrafficDemand};
use crate::scalar::Scalar;

/// `⌊x⌋_ρ = 2^{-ρ} ⌊2^ρ x⌋`: the largest multiple of `2^{-ρ}` not above `x`.
pub fn floor_precision<T: Scalar>(x: T, rho: u32) -> T {
    let scale = T::lit(2f64.powi(rho as i32));
    (x * scale).floor() / scale
}

/// Cell width `2^{-ρ}`.
pub fn precision_step(rho: u32) -> f64 {
    2f64.powi(-(rho as i32))
}

/// Maps a raw read to what a node with precision `rho` gets to see.
pub trait Quantizer: Send + Sync {
    fn quantize(&self, y: f64, rho: u32) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FloorQuantizer;

impl Quantizer for FloorQuantizer {
    fn quantize(&self, y: f64, rho: u32) -> f64 {
        floor_precision(y, rho)
    }
}

/// Transformation applied to every received sample before relays and
/// decoders see it.
pub trait ReadMap: Sync {
    fn read(&self, node: NodeId, t: usize, y: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FullPrecision;

impl ReadMap for FullPrecision {
    fn read(&self, _: NodeId, _: usize, y: f64) -> f64 {
        y
    }
}

pub struct PrecisionRead<'q> {
    pub rho: u32,
    pub quantizer: &'q dyn Quantizer,
}

impl PrecisionRead<'static> {
    pub fn floor(rho: u32) -> Self {
        PrecisionRead { rho, quantizer: &FloorQuantizer }
    }
}

impl ReadMap for PrecisionRead<'_> {
    fn read(&self, _: NodeId, _: usize, y: f64) -> f64 {
        self.quantizer.quantize(y, self.rho)
    }
}

/// Relaying function `r^{(t)}(y_0, ..., y_{t-1})`. At `t = 0` the slice is
/// empty and the output is a constant.
pub trait RelayFunction: Send + Sync + Debug {
    fn output(&self, t: usize, past_reads: &[f64]) -> f64;
}

pub trait DecoderFunction: Send + Sync + Debug {
    fn decode(&self, reads: &[f64]) -> usize;
}

/// Forwards the previous read scaled by `gain`.
#[derive(Debug, Clone, Copy)]
pub struct AmplifyForward {
    pub gain: f64,
}

impl RelayFunction for AmplifyForward {
    fn output(&self, t: usize, past_reads: &[f64]) -> f64 {
        match t {
            0 => 0.0,
            _ => self.gain * past_reads[t - 1],
        }
    }
}

/// Minimum weighted squared distance to a set of noiseless read templates.
/// Ties go to the smaller message index.
#[derive(Debug, Clone)]
pub struct NearestCodeword {
    templates: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl NearestCodeword {
    pub fn new(templates: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::EmptyInput("decoder templates"));
        }
        if let Some(t) = templates.iter().find(|t| t.len() != weights.len()) {
            return Err(Error::DimensionMismatch { what: "decoder template", expected: weights.len(), got: t.len() });
        }
        Ok(Self { templates, weights })
    }

    pub fn unweighted(templates: Vec<Vec<f64>>) -> Result<Self> {
        let n = templates.first().map_or(0, Vec::len);
        Self::new(templates, vec![1.0; n])
    }
}

impl DecoderFunction for NearestCodeword {
    fn decode(&self, reads: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (w, template) in self.templates.iter().enumerate() {
            let d: f64 = template
                .iter()
                .zip(reads)
                .zip(&self.weights)
                .map(|((a, y), c)| c * (y - a) * (y - a))
                .sum();
            if d < best.1 {
                best = (w, d);
            }
        }
        best.0
    }
}

/// Deterministic encoder as a table `message → codeword`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn new(codewords: Vec<Vec<f64>>) -> Result<Self> {
        let n = codewords.first().map(Vec::len).ok_or(Error::EmptyInput("codebook"))?;
        if let Some(c) = codewords.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch { what: "codeword", expected: n, got: c.len() });
        }
        Ok(Self { codewords })
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, message: usize) -> &[f64] {
        &self.codewords[message]
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn block_length(&self) -> usize {
        self.codewords[0].len()
    }
}

#[derive(Debug, Clone)]
pub struct SourceRole {
    pub node: NodeId,
    pub codebook: Codebook,
}

#[derive(Debug, Clone)]
pub struct RelayRole {
    pub node: NodeId,
    pub function: Arc<dyn RelayFunction>,
}

#[derive(Debug, Clone)]
pub struct DecoderRole {
    pub demand: usize,
    pub node: NodeId,
    pub function: Arc<dyn DecoderFunction>,
}

/// Block-length-`n` coding scheme. Demand `i` is served by `sources[i]`.
///
/// Relay outputs pass through an energy-budget clip: the output at time `t` is
/// clamped so that the running energy never exceeds `n·P`. This keeps the
/// average power constraint for every input trajectory.
#[derive(Debug, Clone)]
pub struct CodingScheme {
    name: String,
    block_length: usize,
    power: f64,
    precision: Option<u32>,
    sources: Vec<SourceRole>,
    relays: Vec<RelayRole>,
    decoders: Vec<DecoderRole>,
}

impl CodingScheme {
    pub fn new(
        name: impl Into<String>,
        power: f64,
        precision: Option<u32>,
        sources: Vec<SourceRole>,
        relays: Vec<RelayRole>,
        decoders: Vec<DecoderRole>,
    ) -> Result<Self> {
        let n = sources
            .first()
            .map(|s| s.codebook.block_length())
            .ok_or(Error::EmptyInput("scheme sources"))?;
        if n == 0 {
            return Err(Error::InvalidArgument("block length must be positive".into()));
        }
        if let Some(s) = sources.iter().find(|s| s.codebook.block_length() != n) {
            return Err(Error::DimensionMismatch { what: "source block length", expected: n, got: s.codebook.block_length() });
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::InvalidArgument(format!("power {power} must be positive")));
        }
        for d in &decoders {
            if d.demand >= sources.len() {
                return Err(Error::InvalidArgument(format!("decoder refers to unknown demand {}", d.demand)));
            }
        }
        for i in 0..sources.len() {
            if !decoders.iter().any(|d| d.demand == i) {
                return Err(Error::InvalidArgument(format!("demand {i} has no decoder")));
            }
        }
        for r in &relays {
            if sources.iter().any(|s| s.node == r.node) {
                return Err(Error::InvalidArgument(format!("node {} is both source and relay", r.node)));
            }
        }
        Ok(Self { name: name.into(), block_length: n, power, precision, sources, relays, decoders })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn precision(&self) -> Option<u32> {
        self.precision
    }

    pub fn with_precision(&self, precision: Option<u32>) -> Self {
        Self { precision, ..self.clone() }
    }

    pub fn sources(&self) -> &[SourceRole] {
        &self.sources
    }

    pub fn relays(&self) -> &[RelayRole] {
        &self.relays
    }

    pub fn decoders(&self) -> &[DecoderRole] {
        &self.decoders
    }

    pub fn demand_count(&self) -> usize {
        self.sources.len()
    }

    pub fn message_count(&self, demand: usize) -> usize {
        self.sources[demand].codebook.len()
    }

    /// Bits per channel use for `demand`.
    pub fn rate(&self, demand: usize) -> f64 {
        (self.message_count(demand) as f64).log2() / self.block_length as f64
    }

    /// The read path implied by the scheme's own precision.
    pub fn reader(&self) -> SchemeRead {
        SchemeRead(self.precision)
    }

    /// Checks the node roles against a network.
    pub fn check_network(&self, net: &NetworkModel<f64>) -> Result<()> {
        let n = net.node_count();
        let nodes = self
            .sources
            .iter()
            .map(|s| s.node)
            .chain(self.relays.iter().map(|r| r.node))
            .chain(self.decoders.iter().map(|d| d.node));
        for v in nodes {
            if v.0 >= n {
                return Err(Error::InvalidNetwork(format!("scheme uses node {v} but the network has {n} nodes")));
            }
        }
        if (net.power() - self.power).abs() > 1e-12 * self.power {
            return Err(Error::InvalidNetwork(format!(
                "scheme designed for power {} but the network budget is {}",
                self.power,
                net.power()
            )));
        }
        Ok(())
    }

    pub(crate) fn transmitter_plan(&self, node_count: usize) -> Vec<Transmitter<'_>> {
        let mut plan = vec![Transmitter::Silent; node_count];
        for (i, s) in self.sources.iter().enumerate() {
            plan[s.node.0] = Transmitter::Source(i);
        }
        for r in &self.relays {
            plan[r.node.0] = Transmitter::Relay(r.function.as_ref());
        }
        plan
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Transmitter<'a> {
    Silent,
    Source(usize),
    Relay(&'a dyn RelayFunction),
}

/// Read path of a scheme: identity or `⌊·⌋_ρ`.
#[derive(Debug, Clone, Copy)]
pub struct SchemeRead(pub Option<u32>);

impl ReadMap for SchemeRead {
    fn read(&self, _: NodeId, _: usize, y: f64) -> f64 {
        match self.0 {
            Some(rho) => floor_precision(y, rho),
            None => y,
        }
    }
}

/// Clamps `x` so the running energy stays within `budget`.
pub fn clip_to_budget(x: f64, used: f64, budget: f64) -> f64 {
    let cap = (budget - used).max(0.0).sqrt();
    x.clamp(-cap, cap)
}

/// One message per demand, 0-based (`0..message_count`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageVector(Vec<usize>);

impl MessageVector {
    pub fn new(values: Vec<usize>, scheme: &CodingScheme) -> Result<Self> {
        if values.len() != scheme.demand_count() {
            return Err(Error::DimensionMismatch { what: "message vector", expected: scheme.demand_count(), got: values.len() });
        }
        for (demand, &message) in values.iter().enumerate() {
            let size = scheme.message_count(demand);
            if message >= size {
                return Err(Error::MessageOutOfRange { demand, message, size });
            }
        }
        Ok(Self(values))
    }

    /// Uniform messages, one draw per demand in demand order.
    pub fn random<R: Rng + ?Sized>(scheme: &CodingScheme, rng: &mut R) -> Self {
        Self((0..scheme.demand_count()).map(|d| rng.random_range(0..scheme.message_count(d))).collect())
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// Per-node noise sequences, indexed `[node][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization(pub Vec<Vec<f64>>);

impl NoiseRealization {
    pub fn zeros(nodes: usize, len: usize) -> Self {
        Self(vec![vec![0.0; len]; nodes])
    }

    pub fn len(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prepared per-node samplers for a network.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    samplers: Vec<NoiseSampler>,
}

impl NoiseSource {
    pub fn new(net: &NetworkModel<f64>) -> Result<Self> {
        let samplers = net.noise_specs().iter().map(|s| s.sampler()).collect::<Result<_>>()?;
        Ok(Self { samplers })
    }

    /// Node-major draw: all of node 0's samples first.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> NoiseRealization {
        NoiseRealization(
            self.samplers
                .iter()
                .map(|s| {
                    let mut v = vec![0.0; len];
                    s.fill(rng, &mut v);
                    v
                })
                .collect(),
        )
    }
}

/// Everything the nodes saw during one block, indexed `[node][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Reads after the read map.
    pub reads: Vec<Vec<f64>>,
    /// Received signal without its noise term.
    pub noiseless: Vec<Vec<f64>>,
    pub transmit: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// One decision per decoder role, in role order.
    pub decisions: Vec<usize>,
    /// Per demand: whether any of its destinations decoded wrongly.
    pub errors: Vec<bool>,
}

impl RunOutcome {
    pub fn any_error(&self) -> bool {
        self.errors.iter().any(|&e| e)
    }
}

/// Runs `n` synchronous steps with causal relaying.
pub fn simulate(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    messages: &MessageVector,
    noise: &NoiseRealization,
    reader: &dyn ReadMap,
) -> Result<Trajectory> {
    let n = scheme.block_length();
    let nodes = net.node_count();
    if noise.0.len() != nodes {
        return Err(Error::DimensionMismatch { what: "noise realization nodes", expected: nodes, got: noise.0.len() });
    }
    if let Some(row) = noise.0.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { what: "noise realization length", expected: n, got: row.len() });
    }
    if messages.values().len() != scheme.demand_count() {
        return Err(Error::DimensionMismatch { what: "message vector", expected: scheme.demand_count(), got: messages.values().len() });
    }
    scheme.check_network(net)?;
    let plan = scheme.transmitter_plan(nodes);
    let budget = n as f64 * scheme.power();
    let mut reads = vec![vec![0.0; n]; nodes];
    let mut noiseless = vec![vec![0.0; n]; nodes];
    let mut transmit = vec![vec![0.0; n]; nodes];
    let mut used = vec![0.0; nodes];
    let mut x = vec![0.0; nodes];
    let mut z = vec![0.0; nodes];
    let mut y = vec![0.0; nodes];
    let zero = vec![0.0; nodes];
    for t in 0..n {
        for v in 0..nodes {
            x[v] = match plan[v] {
                Transmitter::Silent => 0.0,
                Transmitter::Source(i) => scheme.sources[i].codebook.codeword(messages.values()[i])[t],
                Transmitter::Relay(f) => {
                    let out = clip_to_budget(f.output(t, &reads[v][..t]), used[v], budget);
                    used[v] += out * out;
                    out
                }
            };
            transmit[v][t] = x[v];
            z[v] = noise.0[v][t];
        }
        net.propagate_into(&x, &zero, &mut y);
        for v in 0..nodes {
            noiseless[v][t] = y[v];
        }
        net.propagate_into(&x, &z, &mut y);
        for v in 0..nodes {
            reads[v][t] = reader.read(NodeId(v), t, y[v]);
        }
    }
    Ok(Trajectory { reads, noiseless, transmit })
}

/// Applies every decoder to its node's reads.
pub fn decode(scheme: &CodingScheme, reads: &[Vec<f64>], messages: &MessageVector) -> RunOutcome {
    let mut errors = vec![false; scheme.demand_count()];
    let decisions = scheme
        .decoders()
        .iter()
        .map(|d| {
            let w = d.function.decode(&reads[d.node.0]);
            if w != messages.values()[d.demand] {
                errors[d.demand] = true;
            }
            w
        })
        .collect();
    RunOutcome { decisions, errors }
}

/// Simulates one block with the scheme's own read path and decodes it.
pub fn run_scheme(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    messages: &MessageVector,
    noise: &NoiseRealization,
) -> Result<RunOutcome> {
    run_scheme_with(scheme, net, messages, noise, &scheme.reader())
}

pub fn run_scheme_with(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    messages: &MessageVector,
    noise: &NoiseRealization,
    reader: &dyn ReadMap,
) -> Result<RunOutcome> {
    let traj = simulate(scheme, net, messages, noise, reader)?;
    Ok(decode(scheme, &traj.reads, messages))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub codeword_max_power: f64,
    /// `(demand, message, average power)` for every codeword above `P`.
    pub codeword_violations: Vec<(usize, usize, f64)>,
    pub relay_max_power: f64,
    pub relay_trajectories: usize,
    pub pass: bool,
}

fn avg_power(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Exact codeword power check plus random-trajectory relay check.
///
/// Relay inputs are Gaussian with a log-uniform scale between `0.01√P` and
/// `1000√P`, read through the scheme's precision.
pub fn check_power<R: Rng + ?Sized>(scheme: &CodingScheme, trials: usize, rng: &mut R) -> PowerReport {
    let p = scheme.power();
    let limit = p * (1.0 + 1e-12);
    let mut codeword_max_power: f64 = 0.0;
    let mut codeword_violations = Vec::new();
    for (i, s) in scheme.sources().iter().enumerate() {
        for (w, c) in s.codebook.codewords().iter().enumerate() {
            let pw = avg_power(c);
            codeword_max_power = codeword_max_power.max(pw);
            if pw > limit {
                codeword_violations.push((i, w, pw));
            }
        }
    }
    let n = scheme.block_length();
    let budget = n as f64 * p;
    let reader = scheme.reader();
    let mut relay_max_power: f64 = 0.0;
    let mut reads = vec![0.0; n];
    let mut outs = vec![0.0; n];
    for role in scheme.relays() {
        for _ in 0..trials {
            let scale = p.sqrt() * 10f64.powf(rng.random_range(-2.0..3.0));
            for (t, r) in reads.iter_mut().enumerate() {
                let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                *r = reader.read(role.node, t, scale * g);
            }
            let mut used = 0.0;
            for t in 0..n {
                outs[t] = clip_to_budget(role.function.output(t, &reads[..t]), used, budget);
                used += outs[t] * outs[t];
            }
            relay_max_power = relay_max_power.max(avg_power(&outs));
        }
    }
    let pass = codeword_violations.is_empty() && relay_max_power <= limit;
    PowerReport {
        codeword_max_power,
        codeword_violations,
        relay_max_power,
        relay_trajectories: trials * scheme.relays().len(),
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSchemeKind {
    UncodedPam,
    Repetition,
    AfRelay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerSchemeParams {
    pub kind: InnerSchemeKind,
    /// Constellation size (power of two).
    pub points: usize,
    /// Uncoded PAM block length.
    pub block_length: usize,
    /// Repetition factor.
    pub repetition: usize,
    /// Requested rate in bits per use; must not exceed what the constellation carries.
    pub rate: Option<f64>,
    pub precision: Option<u32>,
}

impl Default for InnerSchemeParams {
    fn default() -> Self {
        Self {
            kind: InnerSchemeKind::UncodedPam,
            points: 2,
            block_length: 1,
            repetition: 3,
            rate: None,
            precision: Some(8),
        }
    }
}

const MAX_CODEBOOK: usize = 1 << 16;

fn pam_level(d: usize, points: usize, power: f64) -> f64 {
    let m = (points - 1) as f64;
    power.sqrt() * (2.0 * d as f64 - m) / m
}

/// Builds one of the catalog schemes for the first demand of `demand`.
pub fn build_inner_scheme(
    params: &InnerSchemeParams,
    net: &NetworkModel<f64>,
    demand: &TrafficDemand,
) -> Result<CodingScheme> {
    let first = demand
        .demands()
        .first()
        .ok_or_else(|| Error::InfeasibleScheme("network has no traffic demand".into()))?;
    let (s, d) = (first.source, first.destinations[0]);
    let m = params.points;
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InfeasibleScheme(format!("constellation size {m} must be a power of two ≥ 2")));
    }
    let bits = m.trailing_zeros() as f64;
    let power = net.power();
    let level = |w: usize| pam_level(w, m, power);

    match params.kind {
        InnerSchemeKind::UncodedPam => {
            let n = params.block_length;
            if n == 0 {
                return Err(Error::InfeasibleScheme("block length must be positive".into()));
            }
            let full = (bits * n as f64).exp2();
            let count = match params.rate {
                None => full,
                Some(r) => {
                    if r > bits + 1e-12 {
                        return Err(Error::InfeasibleScheme(format!(
                            "rate {r} exceeds the {bits} bits/use of a {m}-point constellation"
                        )));
                    }
                    let total = r * n as f64;
                    if r <= 0.0 || (total - total.round()).abs() > 1e-9 {
                        return Err(Error::InfeasibleScheme(format!("n·R = {total} must be a positive integer")));
                    }
                    total.round().exp2()
                }
            };
            if count > MAX_CODEBOOK as f64 {
                return Err(Error::InfeasibleScheme(format!("codebook of {count} words is too large")));
            }
            let h = net
                .gain(s, d)
                .ok_or_else(|| Error::InfeasibleScheme("uncoded PAM needs a direct source-destination edge".into()))?;
            let codewords: Vec<Vec<f64>> = (0..count as usize)
                .map(|w| {
                    (0..n)
                        .map(|t| level((w / m.pow((n - 1 - t) as u32)) % m))
                        .collect()
                })
                .collect();
            let templates = codewords.iter().map(|c| c.iter().map(|x| h * x).collect()).collect();
            single_hop(format!("uncoded_pam{m}"), power, params.precision, s, d, codewords, templates)
        }
        InnerSchemeKind::Repetition => {
            let r = params.repetition;
            if r == 0 {
                return Err(Error::InfeasibleScheme("repetition factor must be positive".into()));
            }
            if let Some(rate) = params.rate {
                if rate > bits / r as f64 + 1e-12 {
                    return Err(Error::InfeasibleScheme(format!(
                        "rate {rate} exceeds {} bits/use of {r}-fold repetition",
                        bits / r as f64
                    )));
                }
            }
            let h = net
                .gain(s, d)
                .ok_or_else(|| Error::InfeasibleScheme("repetition needs a direct source-destination edge".into()))?;
            let codewords: Vec<Vec<f64>> = (0..m).map(|w| vec![level(w); r]).collect();
            let templates = codewords.iter().map(|c| c.iter().map(|x| h * x).collect()).collect();
            single_hop(format!("repetition{r}"), power, params.precision, s, d, codewords, templates)
        }
        InnerSchemeKind::AfRelay => {
            if let Some(rate) = params.rate {
                if rate > bits / 2.0 + 1e-12 {
                    return Err(Error::InfeasibleScheme(format!("rate {rate} exceeds {} bits/use", bits / 2.0)));
                }
            }
            let v = (0..net.node_count())
                .map(NodeId)
                .find(|&v| v != s && v != d && net.gain(s, v).is_some() && net.gain(v, d).is_some())
                .ok_or_else(|| Error::InfeasibleScheme("no relay node on a two-hop path".into()))?;
            let h_sv = net.gain(s, v).unwrap();
            let h_vd = net.gain(v, d).unwrap();
            let h_sd = net.gain(s, d).unwrap_or(0.0);
            let var_v = net.noise(v).variance;
            let var_d = net.noise(d).variance;
            let gain = (power / (h_sv * h_sv * power + var_v)).sqrt();
            let codewords: Vec<Vec<f64>> = (0..m).map(|w| vec![level(w), 0.0]).collect();
            let templates = codewords
                .iter()
                .map(|c| vec![h_sd * c[0], h_vd * gain * h_sv * c[0]])
                .collect();
            let weights = vec![
                1.0 / var_d.max(1e-12),
                1.0 / (h_vd * h_vd * gain * gain * var_v + var_d).max(1e-12),
            ];
            CodingScheme::new(
                "af_relay",
                power,
                params.precision,
                vec![SourceRole { node: s, codebook: Codebook::new(codewords)? }],
                vec![RelayRole { node: v, function: Arc::new(AmplifyForward { gain }) }],
                vec![DecoderRole { demand: 0, node: d, function: Arc::new(NearestCodeword::new(templates, weights)?) }],
            )
        }
    }
}

fn single_hop(
    name: String,
    power: f64,
    precision: Option<u32>,
    s: NodeId,
    d: NodeId,
    codewords: Vec<Vec<f64>>,
    templates: Vec<Vec<f64>>,
) -> Result<CodingScheme> {
    CodingScheme::new(
        name,
        power,
        precision,
        vec![SourceRole { node: s, codebook: Codebook::new(codewords)? }],
        Vec::new(),
        vec![DecoderRole { demand: 0, node: d, function: Arc::new(NearestCodeword::unweighted(templates)?) }],
    )
}
