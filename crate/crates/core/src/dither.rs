//! Dithered quantization `ỹ = ⌊y⌋_m + u` with `u ∈ (−2^{−m−1}, 2^{−m−1})`,
//! the density-convergence check, and a search for a fixed dither vector.

use rand::Rng;
use rand::distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::coding::{floor_precision, precision_step, CodingScheme, ReadMap};
use crate::error::{Error, Result};
use crate::montecarlo::{collect, domain, stream_rng};
use crate::network::{NetworkModel, NodeId, NoiseSpec};
use crate::pipeline::estimate_with_reader;
use crate::scalar::Scalar;
use crate::stats::{ks_critical_two_sample, ks_two_sample, Estimate};

/// Half-width `2^{−m−1}` of the dither interval.
pub fn dither_bound(m: u32) -> f64 {
    precision_step(m) / 2.0
}

pub fn dither_quantize<T: Scalar>(y: T, m: u32, u: T) -> Result<T> {
    let bound = T::lit(dither_bound(m));
    if !(u.abs() < bound) {
        return Err(Error::DitherOutOfRange {
            value: u.to_f64().unwrap_or(f64::NAN),
            bound: dither_bound(m),
        });
    }
    Ok(floor_precision(y, m) + u)
}

/// Draws a dither value uniformly from the open interval.
pub fn random_dither<R: Rng + ?Sized>(m: u32, rng: &mut R) -> f64 {
    let s: f64 = Open01.sample(rng);
    precision_step(m) * (s - 0.5)
}

/// Resolution `m` and an optional fixed dither vector `u[node][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DitherSpec {
    pub m: u32,
    pub u: Option<Vec<Vec<f64>>>,
}

impl DitherSpec {
    pub fn new(m: u32, u: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let bound = dither_bound(m);
        if let Some(&value) = u.iter().flatten().flatten().find(|x| !(x.abs() < bound)) {
            return Err(Error::DitherOutOfRange { value, bound });
        }
        Ok(Self { m, u })
    }

    pub fn random<R: Rng + ?Sized>(m: u32, nodes: usize, len: usize, rng: &mut R) -> Self {
        let u = (0..nodes).map(|_| (0..len).map(|_| random_dither(m, rng)).collect()).collect();
        Self { m, u: Some(u) }
    }
}

/// Read path `y ↦ ⌊y⌋_m + u[node][t]`, followed by the scheme's own floor
/// when it has one.
#[derive(Debug, Clone, Copy)]
pub struct DitheredRead<'a> {
    pub m: u32,
    pub u: &'a [Vec<f64>],
    pub inner_precision: Option<u32>,
}

impl ReadMap for DitheredRead<'_> {
    fn read(&self, node: NodeId, t: usize, y: f64) -> f64 {
        let q = floor_precision(y, self.m) + self.u[node.0][t];
        match self.inner_precision {
            Some(rho) => floor_precision(q, rho),
            None => q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub m: u32,
    pub trials: usize,
    /// Two-sample KS between `Ỹ^(m)` and fresh draws of `Y`.
    pub ks: f64,
    /// Two-sample KS between the unquantized draws and the same fresh draws.
    pub baseline: f64,
    pub critical: f64,
}

/// Two-sample KS distance between `Ỹ^(m)` and `Y` for each `m`.
///
/// The same `Y` draws, the same unit dither draws and the same reference
/// sample are reused across `m`, so differences along `m_list` come from the
/// quantization alone.
pub fn density_convergence_test(
    spec: &NoiseSpec,
    m_list: &[u32],
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<DensityReport>> {
    spec.validate()?;
    if !spec.has_density() {
        return Err(Error::NoDensity(spec.family_name().to_string()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("resolutions must be strictly ascending".into()));
    }
    let sampler = spec.sampler()?;
    let pairs = collect(trials, seed, domain::DITHER_SAMPLES, |rng| {
        let y = sampler.sample(rng);
        let s: f64 = Open01.sample(rng);
        (y, s - 0.5)
    });
    let reference = collect(trials, seed, domain::DITHER_REFERENCE, |rng| sampler.sample(rng));
    let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let baseline = ks_two_sample(&y, &reference)?;
    let critical = ks_critical_two_sample(alpha, trials, trials);
    m_list
        .iter()
        .map(|&m| {
            let h = precision_step(m);
            let q: Vec<f64> = pairs.iter().map(|&(y, s)| floor_precision(y, m) + h * s).collect();
            Ok(DensityReport { m, trials, ks: ks_two_sample(&q, &reference)?, baseline, critical })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub id: usize,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerandomizationReport {
    pub m: u32,
    pub candidates: Vec<CandidateResult>,
    pub selected: usize,
    pub dither: DitherSpec,
    /// Average error estimate over all candidates.
    pub mean_estimate: f64,
}

impl DerandomizationReport {
    pub fn best(&self) -> &Estimate {
        &self.candidates[self.selected].estimate
    }
}

/// Evaluates `candidates` random dither vectors on the `m`-quantized scheme
/// and keeps the one with the lowest error estimate (ties to the lower id).
///
/// Every candidate is scored on the same messages and noise draws.
pub fn derandomize_dither(
    scheme: &CodingScheme,
    net: &NetworkModel<f64>,
    m: u32,
    candidates: usize,
    trials: usize,
    seed: u64,
) -> Result<DerandomizationReport> {
    if candidates == 0 {
        return Err(Error::InvalidArgument("need at least one dither candidate".into()));
    }
    let (nodes, n) = (net.node_count(), scheme.block_length());
    let dithers: Vec<DitherSpec> = (0..candidates)
        .map(|c| DitherSpec::random(m, nodes, n, &mut stream_rng(seed, domain::DITHER_CANDIDATES, c as u64)))
        .collect();
    let results = dithers
        .iter()
        .enumerate()
        .map(|(id, d)| {
            let reader = DitheredRead { m, u: d.u.as_deref().expect("random dither is set"), inner_precision: scheme.precision() };
            Ok(CandidateResult { id, estimate: estimate_with_reader(scheme, net, trials, seed, &reader)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = results
        .iter()
        .fold(0, |best, r| if r.estimate.p_hat < results[best].estimate.p_hat { r.id } else { best });
    let mean_estimate = results.iter().map(|r| r.estimate.p_hat).sum::<f64>() / candidates as f64;
    Ok(DerandomizationReport { m, selected, dither: dithers[selected].clone(), candidates: results, mean_estimate })
}
