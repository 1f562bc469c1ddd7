use noiseforge::mixer::{effective_row, ChannelType};
use noiseforge::network::NoiseSpec;
use noiseforge::noise_lab::{
    convergence_sweep, cross_bin_covariance, lindeberg_ratio, s_b_squared, squared_bin_covariance, BinSelector,
    NoiseSampleSet,
};
use noiseforge::stats::{gaussian_tail, mean_variance};

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn cosines(b: usize, freq: usize) -> Vec<f64> {
    (0..b)
        .map(|i| (2.0 * std::f64::consts::PI * ((i * freq) % b) as f64 / b as f64).cos())
        .collect()
}

/// Exact Lindeberg ratio given `E[X² 1{|X| ≥ t}]` for the unit-variance law.
fn lindeberg_oracle(b: usize, freq: usize, eps: f64, truncated_second_moment: impl Fn(f64) -> f64) -> f64 {
    let s2 = s_b_squared(1.0f64, b, freq).unwrap();
    let threshold = eps * s2.sqrt();
    cosines(b, freq)
        .iter()
        .filter(|c| c.abs() > 1e-12)
        .map(|c| c * c * truncated_second_moment(threshold / c.abs()))
        .sum::<f64>()
        / s2
}

#[test]
fn uniform_mid_bin_has_unit_variance() {
    let set = NoiseSampleSet::generate(&NoiseSpec::uniform(1.0), 64, 20_000, 11).unwrap();
    for bin in [0, 1, 2, 31, 32, 63] {
        let v = mean_variance(&set.samples[bin]).1;
        assert!((0.97..1.03).contains(&v), "bin {bin} variance {v}");
    }
}

#[test]
fn gaussian_effective_noise_stays_gaussian() {
    let r = convergence_sweep(&NoiseSpec::gaussian(2.0), &[4, 16], 50_000, &BinSelector::AllTypes, 0.001, 5).unwrap();
    assert_eq!(r.len(), 8);
    for g in &r {
        assert!(g.pass, "{g:?}");
        assert!((g.variance / 2.0 - 1.0).abs() < 0.03, "{g:?}");
    }
}

#[test]
fn bins_are_uncorrelated() {
    let trials = 40_000;
    let set = NoiseSampleSet::generate(&NoiseSpec::laplace(1.0), 8, trials, 21).unwrap();
    let cov = cross_bin_covariance(&set);
    let se = 1.0 / (trials as f64).sqrt();
    for i in 0..8 {
        assert!((cov[i][i] - 1.0).abs() < 0.05, "variance of bin {i}: {}", cov[i][i]);
        for j in 0..8 {
            if i != j {
                assert!(cov[i][j].abs() < 4.0 * se, "cov[{i}][{j}] = {}", cov[i][j]);
            }
        }
    }
}

#[test]
fn squared_bins_match_sign_pattern_enumeration() {
    let b = 4;
    let rows: Vec<Vec<f64>> = (0..b).map(|l| effective_row(b, l)).collect();
    let patterns: Vec<Vec<f64>> = (0..1u32 << b)
        .map(|mask| {
            let n: Vec<f64> = (0..b).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            rows.iter().map(|r| r.iter().zip(&n).map(|(w, x)| w * x).sum::<f64>().powi(2)).collect()
        })
        .collect();
    let count = patterns.len() as f64;
    let mean: Vec<f64> = (0..b).map(|l| patterns.iter().map(|p| p[l]).sum::<f64>() / count).collect();
    let exact = |i: usize, j: usize| {
        patterns.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / count
    };
    // the uniform Rademacher law does produce dependent squares at b = 4
    assert!((0..b).any(|i| (0..b).any(|j| i != j && exact(i, j).abs() > 0.1)));

    let set = NoiseSampleSet::generate(&NoiseSpec::rademacher(1.0), b, 200_000, 8).unwrap();
    let cov = squared_bin_covariance(&set);
    for i in 0..b {
        for j in 0..b {
            assert!((cov[i][j] - exact(i, j)).abs() < 0.03, "[{i}][{j}] {} vs {}", cov[i][j], exact(i, j));
        }
    }
}

#[test]
fn lindeberg_matches_gaussian_closed_form() {
    let gaussian = |t: f64| 2.0 * gaussian_tail(t) + 2.0 * t * phi(t);
    for (b, freq) in [(8, 1), (32, 3), (128, 1)] {
        let oracle = lindeberg_oracle(b, freq, 0.5, gaussian);
        let est = lindeberg_ratio(&NoiseSpec::gaussian(1.0), b, freq, 0.5, 200_000, 3).unwrap();
        assert!((est - oracle).abs() < 0.01 + 0.05 * oracle, "b={b}: {est} vs {oracle}");
    }
}

#[test]
fn lindeberg_matches_uniform_closed_form() {
    let a = 3f64.sqrt();
    let uniform = move |t: f64| if t >= a { 0.0 } else { (a.powi(3) - t.powi(3)) / (3.0 * a) };
    for (b, freq, eps) in [(8, 1, 0.5), (8, 1, 0.3), (16, 2, 0.4)] {
        let oracle = lindeberg_oracle(b, freq, eps, uniform);
        let est = lindeberg_ratio(&NoiseSpec::uniform(1.0), b, freq, eps, 200_000, 4).unwrap();
        assert!((est - oracle).abs() < 0.01, "b={b} eps={eps}: {est} vs {oracle}");
    }
}

#[test]
fn lindeberg_is_exact_for_atoms() {
    // Rademacher: |c_i| ≥ ε s_b keeps the term, and every term has mass one
    let (b, freq, eps) = (8, 1, 0.5);
    let s = s_b_squared(1.0f64, b, freq).unwrap().sqrt();
    let kept: f64 = cosines(b, freq).iter().filter(|c| c.abs() >= eps * s).map(|c| c * c).sum();
    let r = lindeberg_ratio(&NoiseSpec::rademacher(1.0), b, freq, eps, 0, 0).unwrap();
    assert!((r - kept / (s * s)).abs() < 1e-12);
}

#[test]
fn lindeberg_rejects_edge_frequencies() {
    let spec = NoiseSpec::uniform(1.0);
    assert!(lindeberg_ratio(&spec, 8, 0, 0.5, 100, 0).is_err());
    assert!(lindeberg_ratio(&spec, 8, 4, 0.5, 100, 0).is_err());
    assert!(lindeberg_ratio(&spec, 8, 1, 0.0, 100, 0).is_err());
    assert!(lindeberg_ratio(&NoiseSpec::uniform(0.0), 8, 1, 0.5, 100, 0).is_err());
}

#[test]
fn gaussianization_trend_holds_on_most_seeds() {
    // strict monotonicity is noisy at the sampling floor; the large steps are not
    for spec in [NoiseSpec::rademacher(1.0), NoiseSpec::uniform(1.0)] {
        let mut wins = 0;
        for seed in [1, 2, 3] {
            let r = convergence_sweep(&spec, &[4, 16, 64], 50_000, &BinSelector::FirstOf(ChannelType::Real), 0.01, seed)
                .unwrap();
            if r[0].ks > r[1].ks && r[1].ks > r[2].ks {
                wins += 1;
            }
        }
        assert!(wins >= 2, "{}: {wins} of 3", spec.family_name());
    }
}

#[test]
fn discrete_pmf_is_rescaled() {
    let spec = NoiseSpec::discrete_pmf(vec![0.0, 1.0, 5.0], vec![0.5, 0.3, 0.2], 2.0).unwrap();
    let atoms = spec.atoms().unwrap();
    let mean: f64 = atoms.iter().map(|(a, p)| a * p).sum();
    let var: f64 = atoms.iter().map(|(a, p)| a * a * p).sum::<f64>() - mean * mean;
    assert!(mean.abs() < 1e-12);
    assert!((var - 2.0).abs() < 1e-12);
}
