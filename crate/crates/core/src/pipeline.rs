//! The mixed scheme: `b` copies of an inner scheme run in parallel, each node
//! mixing its `b` per-time transmit values with the transmit map and
//! unmixing every received block with the receive map. Also the
//! measurements built on top of it: per-bin error rates, Fano rate bounds,
//! superchannel mutual information, the quantization-cell convexity probe
//! and a toy outer code.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{
    clip_to_budget, decode, precision_step, CodingScheme, MessageVector, NoiseRealization, NoiseSource,
    PrecisionRead, Quantizer, ReadMap, RunOutcome, Transmitter, simulate,
};
use crate::error::{Error, Result};
use crate::mixer::{bin_type, check_block_size, ChannelType, OfdmMixer};
use crate::montecarlo::{domain, stream_rng, try_tally};
use crate::network::{NetworkModel, NodeId};
use crate::scalar::Scalar;
use crate::stats::Estimate;

/// Monte Carlo error probability with uniform messages each trial.
pub fn estimate_error_probability(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate_with_reader(scheme, net, trials, seed, &scheme.reader())
}

/// Same as [`estimate_error_probability`] with an explicit read path.
pub fn estimate_with_reader(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    trials: usize,
    seed: u64,
    reader: &dyn ReadMap,
) -> Result<Estimate> {
    estimate_in_domain(scheme, net, trials, seed, domain::TRIALS, reader)
}

fn estimate_in_domain(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    trials: usize,
    seed: u64,
    stream: u64,
    reader: &dyn ReadMap,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    scheme.check_network(net)?;
    let source = NoiseSource::new(net)?;
    let n = scheme.block_length();
    let counts = try_tally(trials, seed, stream, 1, |rng, counts| {
        let messages = MessageVector::random(scheme, rng);
        let noise = source.draw(rng, n);
        let traj = simulate(scheme, net, &messages, &noise, reader)?;
        if decode(scheme, &traj.reads, &messages).any_error() {
            counts[0] += 1;
        }
        Ok::<(), Error>(())
    })?;
    Ok(Estimate::wilson(counts[0], trials as u64))
}

/// Inner scheme of length `k` lifted to length `b·k` through the mixer.
#[derive(Debug, Clone)]
pub struct TransformedScheme {
    inner: CodingScheme,
    b: usize,
    mixer: OfdmMixer<f64>,
}

/// Per-bin decode results of one transformed block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedOutcome {
    pub per_bin: Vec<RunOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedTrajectory {
    /// Effective reads after the read map, `[bin][node][t]`.
    pub reads: Vec<Vec<Vec<f64>>>,
    /// Physical transmissions, `[node][τ]` with `τ = b·t + i`.
    pub physical: Vec<Vec<f64>>,
}

impl TransformedScheme {
    pub fn new(inner: CodingScheme, b: usize) -> Result<Self> {
        if inner.precision().is_none() {
            return Err(Error::MissingPrecision);
        }
        check_block_size(b)?;
        Ok(Self { mixer: OfdmMixer::new(b)?, inner, b })
    }

    pub fn inner(&self) -> &CodingScheme {
        &self.inner
    }

    pub fn bins(&self) -> usize {
        self.b
    }

    /// Composite block length `b·k`.
    pub fn block_length(&self) -> usize {
        self.b * self.inner.block_length()
    }

    /// Runs one composite block. Message slot `ℓ` rides on bin `ℓ`.
    pub fn simulate(
        &self,
        net: &NetworkModel<f64>,
        messages: &[MessageVector],
        noise: &NoiseRealization,
        reader: &dyn ReadMap,
    ) -> Result<TransformedTrajectory> {
        let (b, k, nodes) = (self.b, self.inner.block_length(), net.node_count());
        if messages.len() != b {
            return Err(Error::DimensionMismatch { what: "message slots", expected: b, got: messages.len() });
        }
        if noise.0.len() != nodes {
            return Err(Error::DimensionMismatch { what: "noise realization nodes", expected: nodes, got: noise.0.len() });
        }
        if let Some(row) = noise.0.iter().find(|r| r.len() != b * k) {
            return Err(Error::DimensionMismatch { what: "noise realization length", expected: b * k, got: row.len() });
        }
        self.inner.check_network(net)?;
        let plan = self.inner.transmitter_plan(nodes);
        let budget = k as f64 * self.inner.power();
        let mut reads = vec![vec![vec![0.0; k]; nodes]; b];
        let mut used = vec![vec![0.0; nodes]; b];
        let mut physical = vec![vec![0.0; b * k]; nodes];
        let mut d = vec![0.0; b];
        let mut y = vec![0.0; b];
        let mut eff = vec![0.0; b];
        let mut scratch = self.mixer.scratch();
        for t in 0..k {
            let block = t * b..(t + 1) * b;
            for v in 0..nodes {
                for (l, dl) in d.iter_mut().enumerate() {
                    *dl = match plan[v] {
                        Transmitter::Silent => 0.0,
                        Transmitter::Source(i) => {
                            self.inner.sources()[i].codebook.codeword(messages[l].values()[i])[t]
                        }
                        Transmitter::Relay(f) => {
                            let out = clip_to_budget(f.output(t, &reads[l][v][..t]), used[l][v], budget);
                            used[l][v] += out * out;
                            out
                        }
                    };
                }
                self.mixer.transmit_into(&d, &mut physical[v][block.clone()], &mut scratch)?;
            }
            for v in 0..nodes {
                y.copy_from_slice(&noise.0[v][block.clone()]);
                for &(u, h) in net.in_neighbors(NodeId(v)) {
                    for (yi, xi) in y.iter_mut().zip(&physical[u.0][block.clone()]) {
                        *yi += h * xi;
                    }
                }
                self.mixer.receive_into(&y, &mut eff, &mut scratch)?;
                for (l, &e) in eff.iter().enumerate() {
                    reads[l][v][t] = reader.read(NodeId(v), t, e);
                }
            }
        }
        debug_assert!(physical.iter().all(|x| {
            let avg = x.iter().map(|v| v * v).sum::<f64>() / (b * k) as f64;
            avg <= self.inner.power() * (1.0 + 1e-9)
        }));
        Ok(TransformedTrajectory { reads, physical })
    }

    pub fn run(
        &self,
        net: &NetworkModel<f64>,
        messages: &[MessageVector],
        noise: &NoiseRealization,
    ) -> Result<TransformedOutcome> {
        self.run_with(net, messages, noise, &self.inner.reader())
    }

    pub fn run_with(
        &self,
        net: &NetworkModel<f64>,
        messages: &[MessageVector],
        noise: &NoiseRealization,
        reader: &dyn ReadMap,
    ) -> Result<TransformedOutcome> {
        let traj = self.simulate(net, messages, noise, reader)?;
        let per_bin = traj
            .reads
            .iter()
            .zip(messages)
            .map(|(reads, m)| decode(&self.inner, reads, m))
            .collect();
        Ok(TransformedOutcome { per_bin })
    }

    fn random_trial<R: Rng + ?Sized>(
        &self,
        net: &NetworkModel<f64>,
        source: &NoiseSource,
        rng: &mut R,
    ) -> Result<(Vec<MessageVector>, TransformedOutcome)> {
        let messages: Vec<MessageVector> = (0..self.b).map(|_| MessageVector::random(&self.inner, rng)).collect();
        let noise = source.draw(rng, self.block_length());
        let out = self.run(net, &messages, &noise)?;
        Ok((messages, out))
    }
}

/// `R(1 − ε) − 1/k`.
pub fn fano_rate_bound<T: Scalar>(rate: T, eps: T, k: usize) -> Result<T> {
    if !(eps >= T::zero() && eps <= T::one()) {
        return Err(Error::InvalidArgument(format!("error probability {eps} outside [0, 1]")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(rate * (T::one() - eps) - T::one() / T::from_usize_exact(k))
}

/// Multicast form: evaluated at the worst destination's error probability.
pub fn multicast_fano_bound<T: Scalar>(rate: T, per_destination: &[T], k: usize) -> Result<T> {
    let worst = per_destination
        .iter()
        .copied()
        .reduce(T::max)
        .ok_or(Error::EmptyInput("destination error probabilities"))?;
    fano_rate_bound(rate, worst, k)
}

/// Empirical joint counts of (sent, decoded) symbols on a square alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts {
    alphabet: usize,
    counts: Vec<u64>,
}

impl JointCounts {
    pub fn new(alphabet: usize) -> Self {
        Self { alphabet, counts: vec![0; alphabet * alphabet] }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let alphabet = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != alphabet) {
            return Err(Error::DimensionMismatch { what: "joint count row", expected: alphabet, got: r.len() });
        }
        Ok(Self { alphabet, counts: rows.concat() })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn add(&mut self, sent: usize, decoded: usize, n: u64) {
        self.counts[sent * self.alphabet + decoded] += n;
    }

    pub fn get(&self, sent: usize, decoded: usize) -> u64 {
        self.counts[sent * self.alphabet + decoded]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Plug-in mutual information of the empirical joint law, in bits.
pub fn superchannel_mi(counts: &JointCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyInput("joint counts"));
    }
    let a = counts.alphabet;
    let n = total as f64;
    let row: Vec<f64> = (0..a).map(|i| (0..a).map(|j| counts.get(i, j)).sum::<u64>() as f64).collect();
    let col: Vec<f64> = (0..a).map(|j| (0..a).map(|i| counts.get(i, j)).sum::<u64>() as f64).collect();
    let mut mi = 0.0;
    for i in 0..a {
        for j in 0..a {
            let c = counts.get(i, j) as f64;
            if c > 0.0 {
                mi += c / n * (c * n / (row[i] * col[j])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Largest inner alphabet for which per-bin joint counts are collected.
pub const MAX_JOINT_ALPHABET: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub bin: usize,
    pub channel: ChannelType,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub family: String,
    pub sigma2: f64,
    pub b: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Inner scheme on the same topology with every noise replaced by a
    /// Gaussian of equal variance.
    pub eps_k: Estimate,
    pub per_bin: Vec<BinEstimate>,
    /// Largest per-bin error estimate.
    pub eps_kb: f64,
    pub worst_bin: usize,
    pub rates: Vec<f64>,
    /// Multicast Fano bound per demand.
    pub fano_bounds: Vec<f64>,
    /// Per-bin joint counts for demand 0's first decoder, when the inner
    /// alphabet is small enough.
    pub joint_counts: Option<Vec<JointCounts>>,
    /// Sum of per-bin plug-in MI divided by `b·k`.
    pub mi_bits_per_use: Option<f64>,
}

/// Runs the transformed scheme and scores every bin separately.
pub fn epsilon_kb_report(
    ts: &TransformedScheme,
    net: &NetworkModel<f64>,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let inner = ts.inner();
    let (b, k) = (ts.bins(), inner.block_length());
    let roles = inner.decoders().len();
    let alphabet = inner.message_count(0);
    let joint = alphabet <= MAX_JOINT_ALPHABET;
    let role_offset = b;
    let joint_offset = b + b * roles;
    let width = joint_offset + if joint { b * alphabet * alphabet } else { 0 };

    let baseline_net = net.gaussianized();
    let eps_k = estimate_in_domain(inner, &baseline_net, trials, seed, domain::BASELINE, &inner.reader())?;

    let source = NoiseSource::new(net)?;
    let counts = try_tally(trials, seed, domain::TRIALS, width, |rng, counts| {
        let (messages, out) = ts.random_trial(net, &source, rng)?;
        for (l, (run, m)) in out.per_bin.iter().zip(&messages).enumerate() {
            if run.any_error() {
                counts[l] += 1;
            }
            for (r, role) in inner.decoders().iter().enumerate() {
                if run.decisions[r] != m.values()[role.demand] {
                    counts[role_offset + l * roles + r] += 1;
                }
            }
            if joint {
                let sent = m.values()[0];
                let got = run.decisions[0];
                counts[joint_offset + (l * alphabet + sent) * alphabet + got] += 1;
            }
        }
        Ok::<(), Error>(())
    })?;

    let n = trials as u64;
    let per_bin: Vec<BinEstimate> = (0..b)
        .map(|l| BinEstimate { bin: l, channel: bin_type(b, l), estimate: Estimate::wilson(counts[l], n) })
        .collect();
    let (worst_bin, eps_kb) = per_bin
        .iter()
        .map(|e| (e.bin, e.estimate.p_hat))
        .fold((0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });

    let rates: Vec<f64> = (0..inner.demand_count()).map(|d| inner.rate(d)).collect();
    let fano_bounds = (0..inner.demand_count())
        .map(|d| {
            let per_destination: Vec<f64> = inner
                .decoders()
                .iter()
                .enumerate()
                .filter(|(_, role)| role.demand == d)
                .map(|(r, _)| (0..b).map(|l| counts[role_offset + l * roles + r]).max().unwrap_or(0) as f64 / n as f64)
                .collect();
            multicast_fano_bound(rates[d], &per_destination, k)
        })
        .collect::<Result<Vec<f64>>>()?;

    let joint_counts = joint.then(|| {
        (0..b)
            .map(|l| {
                let start = joint_offset + l * alphabet * alphabet;
                JointCounts { alphabet, counts: counts[start..start + alphabet * alphabet].to_vec() }
            })
            .collect::<Vec<_>>()
    });
    let mi_bits_per_use = match &joint_counts {
        Some(jc) => {
            let total: f64 = jc.iter().map(superchannel_mi).sum::<Result<f64>>()?;
            Some(total / (b * k) as f64)
        }
        None => None,
    };

    let observed = inner.decoders()[0].node;
    let noise = net.noise(observed);
    Ok(ExperimentReport {
        family: noise.family_name().to_string(),
        sigma2: noise.variance,
        b,
        k,
        trials,
        seed,
        eps_k,
        per_bin,
        eps_kb,
        worst_bin,
        rates,
        fano_bounds,
        joint_counts,
        mi_bits_per_use,
    })
}

/// Result of a batch of convexity probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub probes: usize,
    /// Probes where `z′` or a convex combination changed the read vector.
    pub violations: usize,
}

/// Interior margin, as a fraction of a cell, for sampling inside a cell.
const CELL_MARGIN: f64 = 1e-6;

/// Probes convexity of the noise sets that produce a fixed quantized read
/// trajectory.
///
/// Each probe draws messages and noise `z`, records the quantized reads, and
/// samples `z′` from the cell obtained by inverting a floor read along the
/// causal trajectory. For a floor quantizer that cell is exactly the set of
/// noise values reproducing the reads, a box. `z′` and `αz + (1−α)z′` for
/// `α ∈ {0.25, 0.5, 0.75}` must reproduce the reads. With `degenerate` set,
/// `z′ = z`.
pub fn convexity_probe(
    inner: &CodingScheme,
    net: &NetworkModel<f64>,
    probes: usize,
    seed: u64,
    quantizer: &dyn Quantizer,
    degenerate: bool,
) -> Result<ConvexityReport> {
    let rho = inner.precision().ok_or(Error::MissingPrecision)?;
    if probes == 0 {
        return Err(Error::InvalidArgument("probes must be positive".into()));
    }
    let reader = PrecisionRead { rho, quantizer };
    let step = precision_step(rho);
    let source = NoiseSource::new(net)?;
    let noisy: Vec<bool> = net.noise_specs().iter().map(|s| s.variance > 0.0).collect();
    let n = inner.block_length();
    let counts = try_tally(probes, seed, domain::PROBES, 1, |rng, counts| {
        let messages = MessageVector::random(inner, rng);
        let z = source.draw(rng, n);
        let base = simulate(inner, net, &messages, &z, &reader)?;
        let mut z2 = z.clone();
        if !degenerate {
            for (v, row) in z2.0.iter_mut().enumerate() {
                if !noisy[v] {
                    continue;
                }
                for (t, zt) in row.iter_mut().enumerate() {
                    let s = rng.random_range(CELL_MARGIN..1.0 - CELL_MARGIN);
                    *zt = base.reads[v][t] - base.noiseless[v][t] + step * s;
                }
            }
        }
        let mut violated = simulate(inner, net, &messages, &z2, &reader)?.reads != base.reads;
        for alpha in [0.25, 0.5, 0.75] {
            if violated {
                break;
            }
            let mix = NoiseRealization(
                z.0.iter()
                    .zip(&z2.0)
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect())
                    .collect(),
            );
            violated = simulate(inner, net, &messages, &mix, &reader)?.reads != base.reads;
        }
        if violated {
            counts[0] += 1;
        }
        Ok::<(), Error>(())
    })?;
    Ok(ConvexityReport { probes, violations: counts[0] as usize })
}

/// Random outer code over the inner message alphabet. Symbol `j` of a
/// codeword rides on bin `j`; remaining bins carry random filler.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomOuterCode {
    alphabet: usize,
    codewords: Vec<Vec<usize>>,
}

pub const MAX_OUTER_ALPHABET: usize = 16;
pub const MAX_OUTER_LENGTH: usize = 4;

impl RandomOuterCode {
    pub fn new(alphabet: usize, codewords: Vec<Vec<usize>>) -> Result<Self> {
        let length = codewords.first().map_or(0, Vec::len);
        Self::check_shape(alphabet, length, codewords.len())?;
        if codewords.iter().flatten().any(|&s| s >= alphabet) || codewords.iter().any(|c| c.len() != length) {
            return Err(Error::InvalidArgument("outer codewords must share a length and stay inside the alphabet".into()));
        }
        Ok(Self { alphabet, codewords })
    }

    pub fn random<R: Rng + ?Sized>(alphabet: usize, length: usize, size: usize, rng: &mut R) -> Result<Self> {
        Self::check_shape(alphabet, length, size)?;
        let codewords = (0..size).map(|_| (0..length).map(|_| rng.random_range(0..alphabet)).collect()).collect();
        Ok(Self { alphabet, codewords })
    }

    fn check_shape(alphabet: usize, length: usize, size: usize) -> Result<()> {
        if !(2..=MAX_OUTER_ALPHABET).contains(&alphabet) {
            return Err(Error::InvalidArgument(format!("outer alphabet {alphabet} outside 2..={MAX_OUTER_ALPHABET}")));
        }
        if !(1..=MAX_OUTER_LENGTH).contains(&length) {
            return Err(Error::InvalidArgument(format!("outer length {length} outside 1..={MAX_OUTER_LENGTH}")));
        }
        if size == 0 {
            return Err(Error::InvalidArgument("outer code needs at least one codeword".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn length(&self) -> usize {
        self.codewords[0].len()
    }

    pub fn codeword(&self, i: usize) -> &[usize] {
        &self.codewords[i]
    }

    /// Outer rate in bits per inner channel use of the composite block.
    pub fn rate(&self, composite_length: usize) -> f64 {
        (self.codewords.len() as f64).log2() / composite_length as f64
    }

    /// Exhaustive ML decoding under per-bin transition estimates
    /// (add-half smoothing). Ties go to the smaller index.
    pub fn decode(&self, received: &[usize], transitions: &[JointCounts]) -> usize {
        let loglik = |j: usize, sent: usize, got: usize| {
            let jc = &transitions[j];
            let row: u64 = (0..jc.alphabet).map(|d| jc.get(sent, d)).sum();
            ((jc.get(sent, got) as f64 + 0.5) / (row as f64 + 0.5 * jc.alphabet as f64)).ln()
        };
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in self.codewords.iter().enumerate() {
            let score: f64 = c.iter().enumerate().map(|(j, &s)| loglik(j, s, received[j])).sum();
            if score > best.1 {
                best = (i, score);
            }
        }
        best.0
    }
}

/// End-to-end error rate of the outer code on top of a single-demand
/// transformed scheme.
pub fn outer_code_error(
    ts: &TransformedScheme,
    net: &NetworkModel<f64>,
    code: &RandomOuterCode,
    transitions: &[JointCounts],
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    let inner = ts.inner();
    if inner.demand_count() != 1 {
        return Err(Error::InvalidArgument("outer code needs a single-demand inner scheme".into()));
    }
    if inner.message_count(0) != code.alphabet {
        return Err(Error::DimensionMismatch { what: "outer alphabet", expected: inner.message_count(0), got: code.alphabet });
    }
    if code.length() > ts.bins() || transitions.len() < code.length() {
        return Err(Error::InvalidArgument("outer code longer than the available bins".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let source = NoiseSource::new(net)?;
    let counts = try_tally(trials, seed, domain::OUTER_CODE, 1, |rng, counts| {
        let w = rng.random_range(0..code.len());
        let messages = (0..ts.bins())
            .map(|l| {
                let m = match code.codeword(w).get(l) {
                    Some(&s) => s,
                    None => rng.random_range(0..code.alphabet),
                };
                MessageVector::new(vec![m], inner)
            })
            .collect::<Result<Vec<_>>>()?;
        let noise = source.draw(rng, ts.block_length());
        let out = ts.run(net, &messages, &noise)?;
        let received: Vec<usize> = out.per_bin.iter().map(|r| r.decisions[0]).collect();
        if code.decode(&received, transitions) != w {
            counts[0] += 1;
        }
        Ok::<(), Error>(())
    })?;
    Ok(Estimate::wilson(counts[0], trials as u64))
}

/// Seeded generator for outer codebooks.
pub fn outer_code_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, domain::OUTER_CODE, u64::MAX >> 24)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{build_inner_scheme, FloorQuantizer, InnerSchemeParams};
    use crate::network::{NoiseSpec, TrafficDemand};
    use crate::stats::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn pam_link(noise: NoiseSpec) -> (NetworkModel<f64>, CodingScheme) {
        let net = NetworkModel::single_link(1.0, 1.0, noise).unwrap();
        let demand = TrafficDemand::unicast(NodeId(0), NodeId(1), 2).unwrap();
        let scheme = build_inner_scheme(&InnerSchemeParams::default(), &net, &demand).unwrap();
        (net, scheme)
    }

    #[test]
    fn fano_examples() {
        assert_eq!(fano_rate_bound(1.0, 0.1, 100).unwrap(), 0.89);
        assert_abs_diff_eq!(fano_rate_bound(2.0, 1.0, 10).unwrap(), -0.1, epsilon = 1e-15);
        assert!(fano_rate_bound(1.0, 1.5, 10).is_err());
        assert!(fano_rate_bound(1.0, 0.1, 0).is_err());
        assert_eq!(multicast_fano_bound(1.0, &[0.0, 0.1, 0.05], 100).unwrap(), 0.89);
        assert_eq!(fano_rate_bound(1.0f32, 0.0, 4).unwrap(), 0.75f32);
    }

    #[test]
    fn mi_of_simple_channels() {
        let mut id = JointCounts::new(4);
        for s in 0..4 {
            id.add(s, s, 25);
        }
        assert_abs_diff_eq!(superchannel_mi(&id).unwrap(), 2.0, epsilon = 1e-12);
        let ind = JointCounts::from_rows(&[vec![10, 30], vec![10, 30]]).unwrap();
        assert_abs_diff_eq!(superchannel_mi(&ind).unwrap(), 0.0, epsilon = 1e-12);
        let bsc = JointCounts::from_rows(&[vec![45, 5], vec![5, 45]]).unwrap();
        assert_abs_diff_eq!(superchannel_mi(&bsc).unwrap(), 1.0 - binary_entropy(0.1), epsilon = 1e-12);
        assert!(superchannel_mi(&JointCounts::new(2)).is_err());
    }

    #[test]
    fn transform_requires_precision_and_even_b() {
        let (_, scheme) = pam_link(NoiseSpec::gaussian(1.0));
        assert!(matches!(TransformedScheme::new(scheme.with_precision(None), 4), Err(Error::MissingPrecision)));
        assert!(matches!(TransformedScheme::new(scheme, 5), Err(Error::OddBlockSize(5))));
    }

    #[test]
    fn noiseless_transformed_scheme_decodes_every_slot() {
        let (net, scheme) = pam_link(NoiseSpec::gaussian(0.0));
        let ts = TransformedScheme::new(scheme, 8).unwrap();
        let mut rng = stream_rng(1, 0, 0);
        for _ in 0..20 {
            let messages: Vec<_> = (0..8).map(|_| MessageVector::random(ts.inner(), &mut rng)).collect();
            let noise = NoiseRealization::zeros(2, 8);
            let out = ts.run(&net, &messages, &noise).unwrap();
            assert!(out.per_bin.iter().all(|r| !r.any_error()));
        }
    }

    #[test]
    fn zero_noise_estimate() {
        let (net, scheme) = pam_link(NoiseSpec::gaussian(0.0));
        let e = estimate_error_probability(&scheme, &net, 1000, 3).unwrap();
        assert_eq!(e.errors, 0);
        assert_eq!(e.ci_lo, 0.0);
        assert_eq!(e.ci_hi, Estimate::wilson(0, 1000).ci_hi);
        let ts = TransformedScheme::new(scheme, 4).unwrap();
        let report = epsilon_kb_report(&ts, &net, 500, 3).unwrap();
        assert!(report.per_bin.iter().all(|b| b.estimate.errors == 0));
        assert_eq!(report.eps_kb, 0.0);
    }

    #[test]
    fn rademacher_below_decision_distance_is_error_free() {
        let (net, scheme) = pam_link(NoiseSpec::rademacher(0.81));
        let e = estimate_error_probability(&scheme, &net, 5000, 4).unwrap();
        assert_eq!(e.errors, 0);
    }

    #[test]
    fn floor_probe_has_no_violations() {
        let (net, scheme) = pam_link(NoiseSpec::uniform(1.0));
        let r = convexity_probe(&scheme, &net, 2000, 5, &FloorQuantizer, false).unwrap();
        assert_eq!(r.violations, 0);
        let r = convexity_probe(&scheme, &net, 200, 5, &FloorQuantizer, true).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn outer_code_round_trip_without_noise() {
        let (net, scheme) = pam_link(NoiseSpec::gaussian(0.0));
        let ts = TransformedScheme::new(scheme, 4).unwrap();
        let report = epsilon_kb_report(&ts, &net, 400, 6).unwrap();
        let transitions = report.joint_counts.unwrap();
        let code = RandomOuterCode::new(2, vec![vec![0, 0, 0, 0], vec![1, 1, 1, 1], vec![0, 1, 0, 1]]).unwrap();
        let e = outer_code_error(&ts, &net, &code, &transitions, 300, 6).unwrap();
        assert_eq!(e.errors, 0);
        let mut rng = outer_code_rng(6);
        assert_eq!(RandomOuterCode::random(2, 4, 3, &mut rng).unwrap().len(), 3);
        assert!(RandomOuterCode::random(17, 2, 2, &mut rng).is_err());
        assert!(RandomOuterCode::random(2, 5, 2, &mut rng).is_err());
    }
}
