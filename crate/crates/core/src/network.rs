//! Additive-noise network model: topology, real channel gains, per-node noise
//! laws, a per-node average power budget and traffic demands.
//!
//! At every time step node `v` receives `Y_v = Σ_{u ∈ I(v)} h_{u,v} X_u + N_v`
//! where `I(v)` is the in-neighbourhood of `v`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense node index `0..|V|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Zero-mean noise law. The scale of every family is fixed by the enclosing
/// [`NoiseSpec::variance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Uniform on `(-σ√3, σ√3)`.
    Uniform,
    /// Laplace with scale `σ/√2`.
    Laplace,
    /// `±σ` with equal probability.
    Rademacher,
    /// `σ(E - 1)` with `E ~ Exp(1)`.
    ShiftedExponential,
    /// Finite pmf. Atoms are re-centred to mean zero and rescaled to the
    /// declared variance.
    DiscretePmf { atoms: Vec<f64>, probs: Vec<f64> },
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Laplace => "laplace",
            NoiseFamily::Rademacher => "rademacher",
            NoiseFamily::ShiftedExponential => "shifted_exponential",
            NoiseFamily::DiscretePmf { .. } => "discrete_pmf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub family: NoiseFamily,
    pub variance: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, variance: f64) -> Result<Self> {
        let spec = Self { family, variance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(variance: f64) -> Self {
        Self { family: NoiseFamily::Gaussian, variance }
    }

    pub fn uniform(variance: f64) -> Self {
        Self { family: NoiseFamily::Uniform, variance }
    }

    pub fn laplace(variance: f64) -> Self {
        Self { family: NoiseFamily::Laplace, variance }
    }

    pub fn rademacher(variance: f64) -> Self {
        Self { family: NoiseFamily::Rademacher, variance }
    }

    pub fn shifted_exponential(variance: f64) -> Self {
        Self { family: NoiseFamily::ShiftedExponential, variance }
    }

    pub fn discrete_pmf(atoms: Vec<f64>, probs: Vec<f64>, variance: f64) -> Result<Self> {
        Self::new(NoiseFamily::DiscretePmf { atoms, probs }, variance)
    }

    pub fn family_name(&self) -> &'static str {
        self.family.name()
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Variance must be finite: laws without a second moment are rejected.
    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::InvalidNoise(format!(
                "variance {} must be finite and nonnegative",
                self.variance
            )));
        }
        if let NoiseFamily::DiscretePmf { atoms, probs } = &self.family {
            centred_pmf(atoms, probs, self.variance)?;
        }
        Ok(())
    }

    /// Whether the law is absolutely continuous.
    pub fn has_density(&self) -> bool {
        self.variance > 0.0
            && !matches!(
                self.family,
                NoiseFamily::Rademacher | NoiseFamily::DiscretePmf { .. }
            )
    }

    /// Atoms and probabilities for laws with finite support, `None` otherwise.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        if self.variance == 0.0 {
            return Some(vec![(0.0, 1.0)]);
        }
        match &self.family {
            NoiseFamily::Rademacher => {
                let s = self.sigma();
                Some(vec![(-s, 0.5), (s, 0.5)])
            }
            NoiseFamily::DiscretePmf { atoms, probs } => {
                let a = centred_pmf(atoms, probs, self.variance).ok()?;
                Some(a.into_iter().zip(probs.iter().copied()).collect())
            }
            _ => None,
        }
    }

    pub fn sampler(&self) -> Result<NoiseSampler> {
        self.validate()?;
        let s = self.sigma();
        if self.variance == 0.0 {
            return Ok(NoiseSampler::Zero);
        }
        Ok(match &self.family {
            NoiseFamily::Gaussian => NoiseSampler::Gaussian { sigma: s },
            NoiseFamily::Uniform => NoiseSampler::Uniform { half_width: s * 3f64.sqrt() },
            NoiseFamily::Laplace => NoiseSampler::Laplace { scale: s / std::f64::consts::SQRT_2 },
            NoiseFamily::Rademacher => NoiseSampler::Rademacher { amplitude: s },
            NoiseFamily::ShiftedExponential => NoiseSampler::ShiftedExponential { sigma: s },
            NoiseFamily::DiscretePmf { atoms, probs } => {
                let atoms = centred_pmf(atoms, probs, self.variance)?;
                let index = WeightedIndex::new(probs)
                    .map_err(|e| Error::InvalidNoise(format!("pmf weights: {e}")))?;
                NoiseSampler::Discrete { atoms, index }
            }
        })
    }
}

fn centred_pmf(atoms: &[f64], probs: &[f64], variance: f64) -> Result<Vec<f64>> {
    if atoms.is_empty() || atoms.len() != probs.len() {
        return Err(Error::InvalidNoise(format!(
            "pmf needs matching nonempty atom/probability lists (got {} and {})",
            atoms.len(),
            probs.len()
        )));
    }
    if atoms.iter().chain(probs).any(|x| !x.is_finite()) || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidNoise("pmf entries must be finite, probabilities nonnegative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidNoise(format!("pmf probabilities sum to {total}, not 1")));
    }
    let mean: f64 = atoms.iter().zip(probs).map(|(a, p)| a * p).sum();
    let centred: Vec<f64> = atoms.iter().map(|a| a - mean).collect();
    let natural: f64 = centred.iter().zip(probs).map(|(a, p)| a * a * p).sum();
    if variance == 0.0 {
        return Ok(vec![0.0; atoms.len()]);
    }
    if natural <= 0.0 {
        return Err(Error::InvalidNoise(
            "pmf is a point mass but a positive variance was requested".into(),
        ));
    }
    let scale = (variance / natural).sqrt();
    Ok(centred.into_iter().map(|a| a * scale).collect())
}

/// Prepared sampler for one [`NoiseSpec`].
#[derive(Debug, Clone)]
pub enum NoiseSampler {
    Zero,
    Gaussian { sigma: f64 },
    Uniform { half_width: f64 },
    Laplace { scale: f64 },
    Rademacher { amplitude: f64 },
    ShiftedExponential { sigma: f64 },
    Discrete { atoms: Vec<f64>, index: WeightedIndex<f64> },
}

impl NoiseSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Zero => 0.0,
            NoiseSampler::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseSampler::Uniform { half_width } => {
                // open interval: resample the single excluded endpoint
                loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        return half_width * (2.0 * u - 1.0);
                    }
                }
            }
            NoiseSampler::Laplace { scale } => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                scale * (a - b)
            }
            NoiseSampler::Rademacher { amplitude } => {
                if rng.random::<bool>() {
                    *amplitude
                } else {
                    -*amplitude
                }
            }
            NoiseSampler::ShiftedExponential { sigma } => {
                let e: f64 = Exp1.sample(rng);
                sigma * (e - 1.0)
            }
            NoiseSampler::Discrete { atoms, index } => atoms[index.sample(rng)],
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out {
            *x = self.sample(rng);
        }
    }
}

/// Draws `count` i.i.d. samples from `spec`.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let sampler = spec.sampler()?;
    let mut out = vec![0.0; count];
    sampler.fill(rng, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub from: NodeId,
    pub to: NodeId,
    pub gain: T,
}

/// Validated, immutable network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T: Scalar = f64> {
    labels: Vec<String>,
    edges: Vec<Edge<T>>,
    incoming: Vec<Vec<(NodeId, T)>>,
    power: T,
    noise: Vec<NoiseSpec>,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn new(labels: Vec<String>, edges: Vec<Edge<T>>, power: T, noise: Vec<NoiseSpec>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("network has no nodes".into()));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != n {
            return Err(Error::InvalidNetwork("duplicate node label".into()));
        }
        if !(power.is_finite() && power > T::zero()) {
            return Err(Error::InvalidNetwork(format!("power {power} must be positive and finite")));
        }
        if noise.len() != n {
            return Err(Error::DimensionMismatch { what: "noise specs", expected: n, got: noise.len() });
        }
        for (v, spec) in noise.iter().enumerate() {
            spec.validate()
                .map_err(|e| Error::InvalidNetwork(format!("noise at {}: {e}", labels[v])))?;
        }
        let mut seen = BTreeSet::new();
        let mut incoming = vec![Vec::new(); n];
        for e in &edges {
            if e.from.0 >= n || e.to.0 >= n {
                return Err(Error::InvalidNetwork(format!("edge ({}, {}) references unknown node", e.from, e.to)));
            }
            if e.from == e.to {
                return Err(Error::InvalidNetwork(format!("self-loop at {}", labels[e.from.0])));
            }
            if !e.gain.is_finite() {
                return Err(Error::InvalidNetwork("non-finite gain".into()));
            }
            if !seen.insert((e.from, e.to)) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge ({}, {})",
                    labels[e.from.0], labels[e.to.0]
                )));
            }
            incoming[e.to.0].push((e.from, e.gain));
        }
        Ok(Self { labels, edges, incoming, power, noise })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.0]
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(NodeId)
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn gain(&self, from: NodeId, to: NodeId) -> Option<T> {
        self.incoming
            .get(to.0)?
            .iter()
            .find(|(u, _)| *u == from)
            .map(|&(_, h)| h)
    }

    pub fn in_neighbors(&self, v: NodeId) -> &[(NodeId, T)] {
        &self.incoming[v.0]
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn noise(&self, v: NodeId) -> &NoiseSpec {
        &self.noise[v.0]
    }

    pub fn noise_specs(&self) -> &[NoiseSpec] {
        &self.noise
    }

    /// Same network with every noise law replaced.
    pub fn with_noise(&self, noise: Vec<NoiseSpec>) -> Result<Self> {
        Self::new(self.labels.clone(), self.edges.clone(), self.power, noise)
    }

    /// Same variances, Gaussian laws.
    pub fn gaussianized(&self) -> Self {
        let mut out = self.clone();
        for spec in &mut out.noise {
            *spec = NoiseSpec::gaussian(spec.variance);
        }
        out
    }

    pub fn noiseless(&self) -> Self {
        let mut out = self.clone();
        for spec in &mut out.noise {
            *spec = NoiseSpec::gaussian(0.0);
        }
        out
    }

    /// Writes `Y_v` for every node into `out`. Slices must have `|V|` entries.
    pub fn propagate_into(&self, transmit: &[T], noise: &[T], out: &mut [T]) {
        debug_assert_eq!(transmit.len(), self.node_count());
        for ((y, incoming), &n) in out.iter_mut().zip(&self.incoming).zip(noise) {
            *y = incoming
                .iter()
                .fold(n, |acc, &(u, h)| acc + h * transmit[u.0]);
        }
    }
}

impl NetworkModel<f64> {
    /// `s → d` with gain `h`.
    pub fn single_link(gain: f64, power: f64, noise: NoiseSpec) -> Result<Self> {
        Self::new(
            vec!["s".into(), "d".into()],
            vec![Edge { from: NodeId(0), to: NodeId(1), gain }],
            power,
            vec![NoiseSpec::gaussian(0.0), noise],
        )
    }

    /// Three-node relay channel `{(s,v), (s,d), (v,d)}`; the same law at `v` and `d`.
    pub fn relay_channel(h_sv: f64, h_sd: f64, h_vd: f64, power: f64, noise: NoiseSpec) -> Result<Self> {
        Self::new(
            vec!["s".into(), "v".into(), "d".into()],
            vec![
                Edge { from: NodeId(0), to: NodeId(1), gain: h_sv },
                Edge { from: NodeId(0), to: NodeId(2), gain: h_sd },
                Edge { from: NodeId(1), to: NodeId(2), gain: h_vd },
            ],
            power,
            vec![NoiseSpec::gaussian(0.0), noise.clone(), noise],
        )
    }
}

/// One synchronous step of the channel.
pub fn propagate_step<T: Scalar>(net: &NetworkModel<T>, transmit: &[T], noise: &[T]) -> Result<Vec<T>> {
    let n = net.node_count();
    for (what, len) in [("transmit vector", transmit.len()), ("noise vector", noise.len())] {
        if len != n {
            return Err(Error::DimensionMismatch { what, expected: n, got: len });
        }
    }
    let mut out = vec![T::zero(); n];
    net.propagate_into(transmit, noise, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand {
    pub source: NodeId,
    pub destinations: Vec<NodeId>,
}

/// Set of (source, destination-set) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrafficDemand {
    demands: Vec<Demand>,
}

impl TrafficDemand {
    pub fn new(demands: Vec<Demand>, node_count: usize) -> Result<Self> {
        for (i, d) in demands.iter().enumerate() {
            if d.destinations.is_empty() {
                return Err(Error::InvalidNetwork(format!("demand {i} has no destinations")));
            }
            if d.destinations.contains(&d.source) {
                return Err(Error::InvalidNetwork(format!("demand {i} lists its source as a destination")));
            }
            if d.source.0 >= node_count || d.destinations.iter().any(|v| v.0 >= node_count) {
                return Err(Error::InvalidNetwork(format!("demand {i} references an unknown node")));
            }
            let unique: BTreeSet<_> = d.destinations.iter().collect();
            if unique.len() != d.destinations.len() {
                return Err(Error::InvalidNetwork(format!("demand {i} repeats a destination")));
            }
        }
        Ok(Self { demands })
    }

    pub fn unicast(source: NodeId, destination: NodeId, node_count: usize) -> Result<Self> {
        Self::new(vec![Demand { source, destinations: vec![destination] }], node_count)
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }
}

/// JSON node label: either a string or an integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeLabel {
    Name(String),
    Index(u64),
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Name(s) => f.write_str(s),
            NodeLabel::Index(i) => write!(f, "{i}"),
        }
    }
}

impl From<&str> for NodeLabel {
    fn from(s: &str) -> Self {
        NodeLabel::Name(s.to_string())
    }
}

/// Network file as ingested from JSON, before validation.
///
/// ```json
/// {"nodes": ["s","v","d"], "edges": [["s","v",1.0], ...], "power": 1.0,
///  "noise": {"v": {"family": "uniform", "variance": 1.0}, ...},
///  "demands": [["s", ["d"]]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDescription {
    pub nodes: Vec<NodeLabel>,
    pub edges: Vec<(NodeLabel, NodeLabel, f64)>,
    pub power: f64,
    pub noise: BTreeMap<String, NoiseSpec>,
    #[serde(default)]
    pub demands: Vec<(NodeLabel, Vec<NodeLabel>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateNode(String),
    UnknownEdgeNode { edge: (String, String), node: String },
    SelfLoop(String),
    DuplicateEdge(String, String),
    NonFiniteGain(String, String),
    InvalidPower(f64),
    MissingNoise(String),
    UnknownNoiseNode(String),
    InvalidNoise { node: String, reason: String },
    UnknownDemandNode { demand: usize, node: String },
    EmptyDestinations(usize),
    SourceInDestinations(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode(n) => write!(f, "duplicate node `{n}`"),
            Violation::UnknownEdgeNode { edge, node } => {
                write!(f, "edge ({}, {}) references unknown node `{node}`", edge.0, edge.1)
            }
            Violation::SelfLoop(n) => write!(f, "self-loop at `{n}`"),
            Violation::DuplicateEdge(u, v) => write!(f, "duplicate edge ({u}, {v})"),
            Violation::NonFiniteGain(u, v) => write!(f, "edge ({u}, {v}) has a non-finite gain"),
            Violation::InvalidPower(p) => write!(f, "power {p} must be positive and finite"),
            Violation::MissingNoise(n) => write!(f, "node `{n}` has no noise specification"),
            Violation::UnknownNoiseNode(n) => write!(f, "noise given for unknown node `{n}`"),
            Violation::InvalidNoise { node, reason } => write!(f, "noise at `{node}`: {reason}"),
            Violation::UnknownDemandNode { demand, node } => {
                write!(f, "demand {demand} references unknown node `{node}`")
            }
            Violation::EmptyDestinations(i) => write!(f, "demand {i} has an empty destination set"),
            Violation::SourceInDestinations(i) => write!(f, "demand {i} lists its source among its destinations"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("; "))
    }
}

/// Lists every invariant violation in a network description.
pub fn validate_network(desc: &NetworkDescription) -> ValidationReport {
    let mut out = Vec::new();
    let mut known = BTreeSet::new();
    for n in &desc.nodes {
        if !known.insert(n.to_string()) {
            out.push(Violation::DuplicateNode(n.to_string()));
        }
    }
    let mut seen = BTreeSet::new();
    for (u, v, h) in &desc.edges {
        let (u, v) = (u.to_string(), v.to_string());
        let mut ok = true;
        for node in [&u, &v] {
            if !known.contains(node) {
                out.push(Violation::UnknownEdgeNode { edge: (u.clone(), v.clone()), node: node.clone() });
                ok = false;
            }
        }
        if ok && u == v {
            out.push(Violation::SelfLoop(u.clone()));
        }
        if !h.is_finite() {
            out.push(Violation::NonFiniteGain(u.clone(), v.clone()));
        }
        if !seen.insert((u.clone(), v.clone())) {
            out.push(Violation::DuplicateEdge(u, v));
        }
    }
    if !(desc.power.is_finite() && desc.power > 0.0) {
        out.push(Violation::InvalidPower(desc.power));
    }
    for n in &known {
        match desc.noise.get(n) {
            None => out.push(Violation::MissingNoise(n.clone())),
            Some(spec) => {
                if let Err(e) = spec.validate() {
                    out.push(Violation::InvalidNoise { node: n.clone(), reason: e.to_string() });
                }
            }
        }
    }
    for n in desc.noise.keys() {
        if !known.contains(n) {
            out.push(Violation::UnknownNoiseNode(n.clone()));
        }
    }
    for (i, (s, dests)) in desc.demands.iter().enumerate() {
        for node in std::iter::once(s).chain(dests) {
            if !known.contains(&node.to_string()) {
                out.push(Violation::UnknownDemandNode { demand: i, node: node.to_string() });
            }
        }
        if dests.is_empty() {
            out.push(Violation::EmptyDestinations(i));
        }
        if dests.contains(s) {
            out.push(Violation::SourceInDestinations(i));
        }
    }
    ValidationReport { violations: out }
}

impl NetworkDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network description serializes")
    }

    pub fn build(&self) -> Result<(NetworkModel<f64>, TrafficDemand)> {
        let report = validate_network(self);
        if !report.is_valid() {
            return Err(Error::InvalidNetwork(report.to_string()));
        }
        let labels: Vec<String> = self.nodes.iter().map(ToString::to_string).collect();
        let index = |l: &NodeLabel| NodeId(labels.iter().position(|x| *x == l.to_string()).unwrap());
        let edges = self
            .edges
            .iter()
            .map(|(u, v, h)| Edge { from: index(u), to: index(v), gain: *h })
            .collect();
        let noise = labels.iter().map(|l| self.noise[l].clone()).collect();
        let net = NetworkModel::new(labels.clone(), edges, self.power, noise)?;
        let demands = self
            .demands
            .iter()
            .map(|(s, d)| Demand { source: index(s), destinations: d.iter().map(index).collect() })
            .collect();
        let demand = TrafficDemand::new(demands, net.node_count())?;
        Ok((net, demand))
    }
}
