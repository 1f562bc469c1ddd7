//! OFDM-style mixing: conjugate-symmetric packing, unitary IDFT/DFT and the
//! extraction of `b` effective real channels from one length-`b` block.
//!
//! Effective reads come out in canonical bin order
//! `[DC, Re 1, Im 1, ..., Re (b/2-1), Im (b/2-1), Nyquist]`.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kind of effective channel carried by a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelType {
    /// DFT index 0.
    Dc,
    /// Real part at a middle frequency.
    Real,
    /// Imaginary part at a middle frequency.
    Imag,
    /// DFT index `b/2`.
    Nyquist,
}

impl ChannelType {
    pub const ALL: [ChannelType; 4] = [ChannelType::Dc, ChannelType::Real, ChannelType::Imag, ChannelType::Nyquist];

    pub fn name(self) -> &'static str {
        match self {
            ChannelType::Dc => "dc",
            ChannelType::Real => "re",
            ChannelType::Imag => "im",
            ChannelType::Nyquist => "nyquist",
        }
    }

    pub fn is_middle(self) -> bool {
        matches!(self, ChannelType::Real | ChannelType::Imag)
    }
}

impl fmt::Display for ChannelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn check_block_size(b: usize) -> Result<()> {
    if b < 2 || !b.is_multiple_of(2) {
        return Err(Error::OddBlockSize(b));
    }
    Ok(())
}

/// Channel type of bin `bin` in a block of size `b`.
pub fn bin_type(b: usize, bin: usize) -> ChannelType {
    assert!(bin < b, "bin {bin} out of range for block size {b}");
    if bin == 0 {
        ChannelType::Dc
    } else if bin == b - 1 {
        ChannelType::Nyquist
    } else if bin % 2 == 1 {
        ChannelType::Real
    } else {
        ChannelType::Imag
    }
}

/// DFT frequency index carried by `bin`.
pub fn bin_frequency(b: usize, bin: usize) -> usize {
    match bin_type(b, bin) {
        ChannelType::Dc => 0,
        ChannelType::Nyquist => b / 2,
        _ => bin.div_ceil(2),
    }
}

/// First bin of the given type, if the block has one.
pub fn first_bin_of(b: usize, channel: ChannelType) -> Option<usize> {
    (0..b).find(|&l| bin_type(b, l) == channel)
}

/// Row of the combined receive map for `bin`: effective noise on that bin is
/// `Σ_n row[n]·N[n]`.
pub fn effective_row(b: usize, bin: usize) -> Vec<f64> {
    let freq = bin_frequency(b, bin) as f64;
    let bf = b as f64;
    (0..b)
        .map(|n| {
            let phase = 2.0 * std::f64::consts::PI * freq * n as f64 / bf;
            match bin_type(b, bin) {
                ChannelType::Dc => 1.0 / bf.sqrt(),
                ChannelType::Nyquist => (if n % 2 == 0 { 1.0 } else { -1.0 }) / bf.sqrt(),
                ChannelType::Real => (2.0 / bf).sqrt() * phase.cos(),
                ChannelType::Imag => -(2.0 / bf).sqrt() * phase.sin(),
            }
        })
        .collect()
}

/// Unitary DFT of fixed size. Radix-2 for powers of two, direct summation
/// otherwise.
#[derive(Debug, Clone)]
pub struct Dft<T> {
    n: usize,
    /// `exp(-2πi k/n)` for `k < n`.
    roots: Vec<Complex<T>>,
    bitrev: Option<Vec<usize>>,
    scale: T,
}

impl<T: Scalar> Dft<T> {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        let roots = (0..n)
            .map(|k| {
                let a = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Complex::new(T::lit(a.cos()), T::lit(a.sin()))
            })
            .collect();
        let bitrev = n.is_power_of_two().then(|| {
            let bits = n.trailing_zeros();
            (0..n)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect()
        });
        Self { n, roots, bitrev, scale: T::one() / T::from_usize_exact(n).sqrt() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X[k] = n^{-1/2} Σ x[m] e^{-2πi km/n}`.
    pub fn forward(&self, buf: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
        self.run(buf, scratch, false)
    }

    /// `x[m] = n^{-1/2} Σ X[k] e^{+2πi km/n}`.
    pub fn inverse(&self, buf: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
        self.run(buf, scratch, true)
    }

    fn root(&self, k: usize, inverse: bool) -> Complex<T> {
        let w = self.roots[k % self.n];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn run(&self, buf: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>, inverse: bool) {
        assert_eq!(buf.len(), self.n);
        let n = self.n;
        match &self.bitrev {
            Some(rev) => {
                for i in 0..n {
                    if i < rev[i] {
                        buf.swap(i, rev[i]);
                    }
                }
                let mut len = 2;
                while len <= n {
                    let stride = n / len;
                    for start in (0..n).step_by(len) {
                        for j in 0..len / 2 {
                            let w = self.root(j * stride, inverse);
                            let a = buf[start + j];
                            let b = buf[start + j + len / 2] * w;
                            buf[start + j] = a + b;
                            buf[start + j + len / 2] = a - b;
                        }
                    }
                    len <<= 1;
                }
            }
            None => {
                scratch.clear();
                scratch.extend_from_slice(buf);
                for (k, out) in buf.iter_mut().enumerate() {
                    *out = scratch
                        .iter()
                        .enumerate()
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (m, &x)| acc + x * self.root(k * m, inverse));
                }
            }
        }
        for x in buf.iter_mut() {
            *x = *x * self.scale;
        }
    }
}

/// Conjugate-symmetric length-`b` complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedVector<T> {
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> PackedVector<T> {
    /// Validates conjugate symmetry with the scalar type's tolerance.
    pub fn new(entries: Vec<Complex<T>>) -> Result<Self> {
        let b = entries.len();
        check_block_size(b)?;
        let tol = T::symmetry_tolerance();
        for (i, e) in entries.iter().enumerate() {
            let mirror = entries[(b - i) % b].conj();
            if (*e - mirror).norm() > tol {
                return Err(Error::NotConjugateSymmetric { index: i });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn pack_into<T: Scalar>(d: &[T], out: &mut [Complex<T>]) {
    let b = d.len();
    let h = b / 2;
    out[0] = Complex::new(d[0], T::zero());
    for i in 1..h {
        let c = Complex::new(d[2 * i - 1], d[2 * i]);
        out[i] = c;
        out[b - i] = c.conj();
    }
    out[h] = Complex::new(d[b - 1], T::zero());
}

fn unpack_into<T: Scalar>(p: &[Complex<T>], out: &mut [T]) {
    let b = p.len();
    let h = b / 2;
    out[0] = p[0].re;
    for i in 1..h {
        out[2 * i - 1] = p[i].re;
        out[2 * i] = p[i].im;
    }
    out[b - 1] = p[h].re;
}

pub fn pack<T: Scalar>(d: &[T]) -> Result<PackedVector<T>> {
    check_block_size(d.len())?;
    let mut entries = vec![Complex::new(T::zero(), T::zero()); d.len()];
    pack_into(d, &mut entries);
    Ok(PackedVector { entries })
}

pub fn unpack<T: Scalar>(p: &PackedVector<T>) -> Vec<T> {
    let mut out = vec![T::zero(); p.len()];
    unpack_into(&p.entries, &mut out);
    out
}

/// Transmit map `L_T` and receive map `L_R` for one block size.
#[derive(Debug, Clone)]
pub struct OfdmMixer<T> {
    b: usize,
    dft: Dft<T>,
}

/// Reusable buffers for [`OfdmMixer`] so inner loops do not allocate.
#[derive(Debug, Clone, Default)]
pub struct MixerScratch<T> {
    spectrum: Vec<Complex<T>>,
    dft: Vec<Complex<T>>,
    scaled: Vec<T>,
}

impl<T: Scalar> OfdmMixer<T> {
    pub fn new(b: usize) -> Result<Self> {
        check_block_size(b)?;
        Ok(Self { b, dft: Dft::new(b) })
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    pub fn scratch(&self) -> MixerScratch<T> {
        MixerScratch {
            spectrum: vec![Complex::new(T::zero(), T::zero()); self.b],
            dft: Vec::with_capacity(self.b),
            scaled: vec![T::zero(); self.b],
        }
    }

    fn check_len(&self, what: &'static str, got: usize) -> Result<()> {
        if got != self.b {
            return Err(Error::DimensionMismatch { what, expected: self.b, got });
        }
        Ok(())
    }

    /// Physical block for effective inputs `d`: middle bins divided by √2,
    /// packed, unitary IDFT. `‖X‖₂ = ‖d‖₂`.
    pub fn transmit_into(&self, d: &[T], out: &mut [T], s: &mut MixerScratch<T>) -> Result<()> {
        self.check_len("transmit input", d.len())?;
        self.check_len("transmit output", out.len())?;
        let inv_sqrt2 = T::FRAC_1_SQRT_2();
        s.scaled.resize(self.b, T::zero());
        for (l, (o, &x)) in s.scaled.iter_mut().zip(d).enumerate() {
            *o = if bin_type(self.b, l).is_middle() { x * inv_sqrt2 } else { x };
        }
        s.spectrum.resize(self.b, Complex::new(T::zero(), T::zero()));
        pack_into(&s.scaled, &mut s.spectrum);
        self.dft.inverse(&mut s.spectrum, &mut s.dft);
        let magnitude = d.iter().fold(T::one(), |m, x| m.max(x.abs()));
        let tol = T::symmetry_tolerance() * magnitude;
        let mut residue = T::zero();
        for (o, c) in out.iter_mut().zip(&s.spectrum) {
            residue = residue.max(c.im.abs());
            *o = c.re;
        }
        if residue > tol {
            return Err(Error::ImaginaryResidue { residue: residue.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(())
    }

    /// Effective reads for a received block: unitary DFT, then
    /// `[Ỹ_0, √2 Re Ỹ_1, √2 Im Ỹ_1, ..., Ỹ_{b/2}]`.
    pub fn receive_into(&self, y: &[T], out: &mut [T], s: &mut MixerScratch<T>) -> Result<()> {
        self.check_len("receive input", y.len())?;
        self.check_len("receive output", out.len())?;
        s.spectrum.clear();
        s.spectrum.extend(y.iter().map(|&v| Complex::new(v, T::zero())));
        self.dft.forward(&mut s.spectrum, &mut s.dft);
        unpack_into(&s.spectrum, out);
        let sqrt2 = T::SQRT_2();
        for o in &mut out[1..self.b - 1] {
            *o = *o * sqrt2;
        }
        Ok(())
    }

    pub fn transmit(&self, d: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.b];
        self.transmit_into(d, &mut out, &mut self.scratch())?;
        Ok(out)
    }

    pub fn receive(&self, y: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.b];
        self.receive_into(y, &mut out, &mut self.scratch())?;
        Ok(out)
    }
}

pub fn transmit_transform<T: Scalar>(d: &[T]) -> Result<Vec<T>> {
    OfdmMixer::new(d.len())?.transmit(d)
}

pub fn receive_transform<T: Scalar>(y: &[T]) -> Result<Vec<T>> {
    OfdmMixer::new(y.len())?.receive(y)
}

/// Effective noise on every bin for a physical noise block.
pub fn effective_noise<T: Scalar>(noise: &[T]) -> Result<Vec<T>> {
    receive_transform(noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn pack_four() {
        let p = pack(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.entries(), &[c(1.0, 0.0), c(2.0, 3.0), c(4.0, 0.0), c(2.0, -3.0)]);
        assert_eq!(unpack(&p), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn pack_two_and_zero() {
        let p = pack(&[5.0, 7.0]).unwrap();
        assert_eq!(p.entries(), &[c(5.0, 0.0), c(7.0, 0.0)]);
        assert!(pack(&[0.0f64; 8]).unwrap().entries().iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn odd_and_asymmetric_inputs_rejected() {
        assert_eq!(pack(&[1.0, 2.0, 3.0]), Err(Error::OddBlockSize(3)));
        assert!(matches!(
            PackedVector::new(vec![c(1.0, 0.0), c(2.0, 3.0), c(4.0, 0.0), c(9.0, 9.0)]),
            Err(Error::NotConjugateSymmetric { .. })
        ));
        assert!(OfdmMixer::<f64>::new(0).is_err());
        assert!(transmit_transform(&[1.0f64; 5]).is_err());
    }

    #[test]
    fn two_point_transforms() {
        let (a, b) = (0.3, -1.7);
        let x = transmit_transform(&[a, b]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(x[0], (a + b) * r, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], (a - b) * r, epsilon = 1e-15);
        let z = effective_noise(&[a, b]).unwrap();
        assert_abs_diff_eq!(z[0], (a + b) * r, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], (a - b) * r, epsilon = 1e-15);
    }

    #[test]
    fn bin_layout() {
        let types: Vec<_> = (0..6).map(|l| bin_type(6, l)).collect();
        use ChannelType::*;
        assert_eq!(types, vec![Dc, Real, Imag, Real, Imag, Nyquist]);
        assert_eq!((0..6).map(|l| bin_frequency(6, l)).collect::<Vec<_>>(), vec![0, 1, 1, 2, 2, 3]);
        assert_eq!(first_bin_of(2, Real), None);
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for b in [2, 4, 6, 8, 10, 64, 256] {
            let mixer = OfdmMixer::<f64>::new(b).unwrap();
            for _ in 0..20 {
                let d: Vec<f64> = (0..b).map(|_| rng.random_range(-3.0..3.0)).collect();
                let x = mixer.transmit(&d).unwrap();
                let back = mixer.receive(&x).unwrap();
                for (u, v) in d.iter().zip(&back) {
                    assert_abs_diff_eq!(u, v, epsilon = 1e-9);
                }
                let nd: f64 = d.iter().map(|v| v * v).sum();
                let nx: f64 = x.iter().map(|v| v * v).sum();
                assert_abs_diff_eq!(nd, nx, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dft_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 2, 4, 6, 16, 12] {
            let dft = Dft::<f64>::new(n);
            let x: Vec<Complex<f64>> = (0..n).map(|_| c(rng.random(), rng.random())).collect();
            let mut y = x.clone();
            dft.forward(&mut y, &mut Vec::new());
            for k in 0..n {
                let direct: Complex<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v * Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64))
                    .sum::<Complex<f64>>()
                    / (n as f64).sqrt();
                assert_abs_diff_eq!((y[k] - direct).norm(), 0.0, epsilon = 1e-12);
            }
            let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let ny: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            assert_abs_diff_eq!(nx, ny, epsilon = 1e-12);
            dft.inverse(&mut y, &mut Vec::new());
            for (a, b) in x.iter().zip(&y) {
                assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn effective_noise_matches_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for b in [2, 4, 8, 12, 32] {
            let n: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = effective_noise(&n).unwrap();
            for (l, zl) in z.iter().enumerate() {
                let row = effective_row(b, l);
                let direct: f64 = row.iter().zip(&n).map(|(r, x)| r * x).sum();
                assert_abs_diff_eq!(*zl, direct, epsilon = 1e-12);
                let norm: f64 = row.iter().map(|r| r * r).sum();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(z[0], n.iter().sum::<f64>() / (b as f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_channel_through_the_mixer() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = 16;
        let h = -0.7;
        let mixer = OfdmMixer::<f64>::new(b).unwrap();
        let d: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = mixer.transmit(&d).unwrap();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(x, n)| h * x + n).collect();
        let reads = mixer.receive(&y).unwrap();
        let z = mixer.receive(&noise).unwrap();
        for l in 0..b {
            assert_abs_diff_eq!(reads[l], h * d[l] + z[l], epsilon = 1e-12);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let mixer = OfdmMixer::<f32>::new(8).unwrap();
        let d = [0.5f32, -1.0, 0.25, 2.0, -0.75, 1.5, 0.0, -2.0];
        let back = mixer.receive(&mixer.transmit(&d).unwrap()).unwrap();
        for (u, v) in d.iter().zip(&back) {
            assert!((u - v).abs() < 1e-5);
        }
    }
}
