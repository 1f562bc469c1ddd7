//! Statistical checks on effective noise: the variance normaliser of the
//! cosine-weighted sums, Lindeberg ratios, KS goodness of fit against the
//! Gaussian limit, and sweeps over the block size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixer::{bin_type, check_block_size, first_bin_of, ChannelType, OfdmMixer};
use crate::montecarlo::{collect, derive_seed, domain};
use crate::network::NoiseSpec;
use crate::scalar::Scalar;
use crate::stats::{ks_critical, ks_one_sample, mean_variance, normal_cdf};

/// `Σ_i σ² cos²(2π iℓ/b)` in closed form: `bσ²` at `ℓ ∈ {0, b/2}`, `bσ²/2`
/// elsewhere. `ℓ` is a DFT frequency index.
pub fn s_b_squared<T: Scalar>(sigma: T, b: usize, freq: usize) -> Result<T> {
    check_block_size(b)?;
    if freq >= b {
        return Err(Error::InvalidArgument(format!("frequency {freq} out of range for b = {b}")));
    }
    let full = T::from_usize_exact(b) * sigma * sigma;
    Ok(if freq == 0 || 2 * freq == b { full } else { full / T::lit(2.0) })
}

fn cosine_weights(b: usize, freq: usize) -> Vec<f64> {
    (0..b)
        .map(|i| (2.0 * std::f64::consts::PI * (i * freq % b) as f64 / b as f64).cos())
        .collect()
}

/// `(1/s_b²) Σ_i E[Y_i² 1{|Y_i| ≥ ε s_b}]` with `Y_i = N_i cos(2π iℓ/b)`.
///
/// Exact for laws with finite support; Monte Carlo over `trials` noise
/// vectors otherwise.
pub fn lindeberg_ratio(spec: &NoiseSpec, b: usize, freq: usize, eps: f64, trials: usize, seed: u64) -> Result<f64> {
    spec.validate()?;
    if spec.variance == 0.0 {
        return Err(Error::DegenerateNoise("lindeberg ratio"));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {eps} must be positive")));
    }
    let s2 = s_b_squared(spec.sigma(), b, freq)?;
    if freq == 0 || 2 * freq == b {
        return Err(Error::InvalidArgument(format!("frequency {freq} is not a middle frequency for b = {b}")));
    }
    let weights = cosine_weights(b, freq);
    let threshold = eps * s2.sqrt();
    let truncated = |y: f64| if y.abs() >= threshold { y * y } else { 0.0 };
    let total = match spec.atoms() {
        Some(atoms) => weights
            .iter()
            .map(|c| atoms.iter().map(|(a, p)| p * truncated(a * c)).sum::<f64>())
            .sum::<f64>(),
        None => {
            if trials == 0 {
                return Err(Error::InvalidArgument("trials must be positive".into()));
            }
            let sampler = spec.sampler()?;
            let per_trial = collect(trials, derive_seed(seed, b as u64), domain::LINDEBERG, |rng| {
                weights.iter().map(|c| truncated(sampler.sample(rng) * c)).sum::<f64>()
            });
            per_trial.iter().sum::<f64>() / trials as f64
        }
    };
    Ok(total / s2)
}

/// One-sample KS distance of `samples` against `N(0, σ²)`.
pub fn ks_statistic(samples: &[f64], sigma2: f64) -> Result<f64> {
    ks_one_sample(samples, |x| normal_cdf(x, sigma2.sqrt()))
}

/// Which bins a sweep inspects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSelector {
    /// First bin of one channel type.
    FirstOf(ChannelType),
    /// First bin of every channel type present.
    AllTypes,
    Index(usize),
    Every,
}

impl BinSelector {
    pub fn bins(&self, b: usize) -> Result<Vec<usize>> {
        Ok(match self {
            BinSelector::FirstOf(ch) => vec![first_bin_of(b, *ch).ok_or_else(|| {
                Error::InvalidArgument(format!("block size {b} has no {ch} bin"))
            })?],
            BinSelector::AllTypes => ChannelType::ALL.iter().filter_map(|&c| first_bin_of(b, c)).collect(),
            BinSelector::Index(l) if *l < b => vec![*l],
            BinSelector::Index(l) => return Err(Error::InvalidArgument(format!("bin {l} out of range for b = {b}"))),
            BinSelector::Every => (0..b).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub family: String,
    pub sigma2: f64,
    pub b: usize,
    pub bin: usize,
    pub channel: ChannelType,
    pub trials: usize,
    pub ks: f64,
    pub critical: f64,
    pub variance: f64,
    pub pass: bool,
}

/// Draws `trials` blocks of i.i.d. noise, maps each through the receive
/// transform and keeps the requested bins, as `[bin][trial]`.
fn sample_bins(spec: &NoiseSpec, b: usize, bins: &[usize], trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let mixer = OfdmMixer::<f64>::new(b)?;
    let sampler = spec.sampler()?;
    let rows = collect(trials, seed, domain::NOISE_LAB, |rng| {
        let mut scratch = mixer.scratch();
        let mut noise = vec![0.0; b];
        let mut z = vec![0.0; b];
        sampler.fill(rng, &mut noise);
        mixer.receive_into(&noise, &mut z, &mut scratch).expect("block length fixed");
        bins.iter().map(|&l| z[l]).collect::<Vec<f64>>()
    });
    Ok((0..bins.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
}

/// KS of effective noise against `N(0, σ²)` for every `b` in `b_list`.
pub fn convergence_sweep(
    spec: &NoiseSpec,
    b_list: &[usize],
    trials: usize,
    selector: &BinSelector,
    alpha: f64,
    seed: u64,
) -> Result<Vec<GoodnessReport>> {
    spec.validate()?;
    if b_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("block sizes must be strictly ascending".into()));
    }
    let critical = ks_critical(alpha, trials);
    let mut out = Vec::new();
    for &b in b_list {
        check_block_size(b)?;
        let bins = selector.bins(b)?;
        let samples = sample_bins(spec, b, &bins, trials, derive_seed(seed, b as u64))?;
        for (&bin, s) in bins.iter().zip(&samples) {
            let ks = ks_statistic(s, spec.variance)?;
            out.push(GoodnessReport {
                family: spec.family_name().to_string(),
                sigma2: spec.variance,
                b,
                bin,
                channel: bin_type(b, bin),
                trials,
                ks,
                critical,
                variance: mean_variance(s).1,
                pass: ks < critical,
            });
        }
    }
    Ok(out)
}

/// Effective noise on every bin, `[bin][trial]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSampleSet {
    pub spec: NoiseSpec,
    pub b: usize,
    pub samples: Vec<Vec<f64>>,
}

impl NoiseSampleSet {
    pub fn generate(spec: &NoiseSpec, b: usize, trials: usize, seed: u64) -> Result<Self> {
        check_block_size(b)?;
        let bins: Vec<usize> = (0..b).collect();
        let samples = sample_bins(spec, b, &bins, trials, seed)?;
        Ok(Self { spec: spec.clone(), b, samples })
    }

    pub fn trials(&self) -> usize {
        self.samples[0].len()
    }
}

fn covariance_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows[0].len() as f64;
    let means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let denom = (n - 1.0).max(1.0);
    (0..rows.len())
        .map(|i| {
            (0..rows.len())
                .map(|j| {
                    rows[i]
                        .iter()
                        .zip(&rows[j])
                        .map(|(a, b)| (a - means[i]) * (b - means[j]))
                        .sum::<f64>()
                        / denom
                })
                .collect()
        })
        .collect()
}

/// Empirical covariance between bins.
pub fn cross_bin_covariance(set: &NoiseSampleSet) -> Vec<Vec<f64>> {
    covariance_matrix(&set.samples)
}

/// Empirical covariance between squared bins; nonzero off-diagonals expose
/// dependence that plain covariance misses.
pub fn squared_bin_covariance(set: &NoiseSampleSet) -> Vec<Vec<f64>> {
    let squared: Vec<Vec<f64>> = set.samples.iter().map(|r| r.iter().map(|x| x * x).collect()).collect();
    covariance_matrix(&squared)
}
