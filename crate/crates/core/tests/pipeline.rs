use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use noiseforge::coding::{
    build_inner_scheme, check_power, floor_precision, run_scheme_with, simulate, CodingScheme, FullPrecision,
    InnerSchemeKind, InnerSchemeParams, MessageVector, NoiseRealization, NoiseSource, PrecisionRead,
};
use noiseforge::mixer::effective_row;
use noiseforge::network::{NetworkModel, NodeId, NoiseSpec, TrafficDemand};
use noiseforge::pipeline::{epsilon_kb_report, estimate_error_probability, TransformedScheme};
use noiseforge::stats::gaussian_tail;

fn link(power: f64, noise: NoiseSpec) -> NetworkModel<f64> {
    NetworkModel::single_link(1.0, power, noise).unwrap()
}

fn relay(noise: NoiseSpec) -> NetworkModel<f64> {
    NetworkModel::relay_channel(1.0, 0.5, 1.0, 1.0, noise).unwrap()
}

fn scheme(net: &NetworkModel<f64>, d: usize, params: InnerSchemeParams) -> CodingScheme {
    let demand = TrafficDemand::unicast(NodeId(0), NodeId(d), net.node_count()).unwrap();
    build_inner_scheme(&params, net, &demand).unwrap()
}

fn pam(net: &NetworkModel<f64>) -> CodingScheme {
    scheme(net, 1, InnerSchemeParams::default())
}

fn af(net: &NetworkModel<f64>) -> CodingScheme {
    scheme(net, 2, InnerSchemeParams { kind: InnerSchemeKind::AfRelay, ..Default::default() })
}

#[test]
fn antipodal_link_matches_gaussian_tail() {
    let net = link(1.0, NoiseSpec::gaussian(1.0));
    let e = estimate_error_probability(&pam(&net), &net, 1_000_000, 42).unwrap();
    assert!((e.p_hat - gaussian_tail(1.0)).abs() < 0.002, "{e:?}");
}

#[test]
fn bounded_noise_below_half_distance_never_errs() {
    let net = link(4.0, NoiseSpec::rademacher(1.0));
    let e = estimate_error_probability(&pam(&net), &net, 20_000, 1).unwrap();
    assert_eq!(e.errors, 0);
    assert_eq!(e.ci_lo, 0.0);
}

#[test]
fn repetition_beats_uncoded() {
    let net = link(1.0, NoiseSpec::gaussian(1.0));
    let rep = scheme(&net, 1, InnerSchemeParams { kind: InnerSchemeKind::Repetition, ..Default::default() });
    let e_rep = estimate_error_probability(&rep, &net, 100_000, 3).unwrap();
    let e_pam = estimate_error_probability(&pam(&net), &net, 100_000, 3).unwrap();
    // repetition-3 of an antipodal symbol is antipodal at amplitude √3
    assert!((e_rep.p_hat - gaussian_tail(3f64.sqrt())).abs() < 0.003, "{e_rep:?}");
    assert!(e_rep.ci_hi < e_pam.ci_lo);
}

#[test]
fn relay_helps_over_direct_path() {
    let net = relay(NoiseSpec::gaussian(1.0));
    let e = estimate_error_probability(&af(&net), &net, 100_000, 4).unwrap();
    // direct edge alone: antipodal at amplitude h_sd·√P = 0.5
    assert!(e.ci_hi < gaussian_tail(0.5), "{e:?}");
}

#[test]
fn power_is_respected() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in [pam(&link(2.0, NoiseSpec::gaussian(1.0))), af(&relay(NoiseSpec::laplace(1.0)))] {
        let r = check_power(&s, 2000, &mut rng);
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn reads_are_invariant_to_prefloored_input() {
    let net = relay(NoiseSpec::uniform(1.0));
    let s = scheme(&net, 2, InnerSchemeParams { kind: InnerSchemeKind::AfRelay, precision: Some(3), ..Default::default() });
    let source = NoiseSource::new(&net).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..2000 {
        let m = MessageVector::random(&s, &mut rng);
        let noise = source.draw(&mut rng, s.block_length());
        let direct = simulate(&s, &net, &m, &noise, &PrecisionRead::floor(3)).unwrap();
        let twice = Twice(3);
        let refloored = simulate(&s, &net, &m, &noise, &twice).unwrap();
        assert_eq!(direct.reads, refloored.reads);
    }
}

struct Twice(u32);

impl noiseforge::coding::ReadMap for Twice {
    fn read(&self, _: NodeId, _: usize, y: f64) -> f64 {
        floor_precision(floor_precision(y, self.0), self.0)
    }
}

/// Inner-scheme noise seen by bin `l`: each node's block of `b` samples at
/// time `t` mixed by the receive row of that bin.
fn bin_noise(noise: &NoiseRealization, b: usize, k: usize, l: usize) -> NoiseRealization {
    let row = effective_row(b, l);
    NoiseRealization(
        noise
            .0
            .iter()
            .map(|z| (0..k).map(|t| row.iter().zip(&z[t * b..(t + 1) * b]).map(|(w, x)| w * x).sum()).collect())
            .collect(),
    )
}

#[test]
fn every_bin_is_the_inner_scheme_on_mixed_noise() {
    let nets = [relay(NoiseSpec::laplace(1.0)), relay(NoiseSpec::rademacher(0.5))];
    for net in &nets {
        let inner = af(net);
        for b in [2, 4, 8] {
            let ts = TransformedScheme::new(inner.clone(), b).unwrap();
            let k = inner.block_length();
            let source = NoiseSource::new(net).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(b as u64);
            for _ in 0..200 {
                let msgs: Vec<MessageVector> = (0..b).map(|_| MessageVector::random(&inner, &mut rng)).collect();
                let noise = source.draw(&mut rng, b * k);
                let traj = ts.simulate(net, &msgs, &noise, &FullPrecision).unwrap();
                let out = ts.run_with(net, &msgs, &noise, &FullPrecision).unwrap();
                for l in 0..b {
                    let z = bin_noise(&noise, b, k, l);
                    let reference = simulate(&inner, net, &msgs[l], &z, &FullPrecision).unwrap();
                    for (got, want) in traj.reads[l].iter().zip(&reference.reads) {
                        for (g, w) in got.iter().zip(want) {
                            assert!((g - w).abs() < 1e-9, "b={b} bin {l}: {g} vs {w}");
                        }
                    }
                    // atoms can put reads exactly on a decision boundary, where
                    // rounding picks the side
                    if net.noise(NodeId(2)).has_density() {
                        let decided = run_scheme_with(&inner, net, &msgs[l], &z, &FullPrecision).unwrap();
                        assert_eq!(out.per_bin[l], decided);
                    }
                }
            }
        }
    }
}

#[test]
fn changing_one_bin_leaves_the_others_alone() {
    let net = relay(NoiseSpec::uniform(1.0));
    let inner = af(&net);
    let b = 8;
    let ts = TransformedScheme::new(inner.clone(), b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = NoiseSource::new(&net).unwrap().draw(&mut rng, b * inner.block_length());
    let mut msgs: Vec<MessageVector> = (0..b).map(|_| MessageVector::new(vec![0], &inner).unwrap()).collect();
    let before = ts.simulate(&net, &msgs, &noise, &FullPrecision).unwrap();
    msgs[3] = MessageVector::new(vec![1], &inner).unwrap();
    let after = ts.simulate(&net, &msgs, &noise, &FullPrecision).unwrap();
    for l in (0..b).filter(|&l| l != 3) {
        for (x, y) in before.reads[l].iter().flatten().zip(after.reads[l].iter().flatten()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
    assert_ne!(before.reads[3], after.reads[3]);
}

#[test]
fn gap_to_gaussian_baseline_shrinks_with_block_size() {
    let net = link(2.705543454095415, NoiseSpec::rademacher(1.0));
    let inner = pam(&net);
    let gap = |b: usize| {
        let r = epsilon_kb_report(&TransformedScheme::new(inner.clone(), b).unwrap(), &net, 40_000, 10).unwrap();
        (r.eps_kb - r.eps_k.p_hat).abs()
    };
    let (g2, g4, g64) = (gap(2), gap(4), gap(64));
    assert!(g2 > g4 && g4 > g64, "{g2} {g4} {g64}");
}

#[test]
fn transform_report_is_seed_deterministic() {
    let net = relay(NoiseSpec::laplace(1.0));
    let ts = TransformedScheme::new(af(&net), 4).unwrap();
    let a = epsilon_kb_report(&ts, &net, 5000, 77).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| epsilon_kb_report(&ts, &net, 5000, 77).unwrap());
    assert_eq!(a, b);
    let c = epsilon_kb_report(&ts, &net, 5000, 78).unwrap();
    assert_ne!(a.per_bin, c.per_bin);
}

#[test]
fn transformed_scheme_requires_a_precision() {
    let net = link(1.0, NoiseSpec::gaussian(1.0));
    let s = scheme(&net, 1, InnerSchemeParams { precision: None, ..Default::default() });
    assert!(TransformedScheme::new(s, 4).is_err());
    assert!(TransformedScheme::new(pam(&net), 6).is_ok());
    assert!(TransformedScheme::new(pam(&net), 5).is_err());
}
