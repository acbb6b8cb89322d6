//! DFT and Fourier-series plumbing shared by the recovery paths.
//!
//! Forward kernel is `exp(-j 2π k n / K)`; the scaled variants carry the T_S
//! factor used throughout the sampling identities.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{BandSpec, PeriodicBandpassSignal};

/// Unscaled forward DFT of a real sequence.
pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let k = x.len();
    let mut out = vec![Complex64::default(); k];
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        for (i, &v) in x.iter().enumerate() {
            let phase = -std::f64::consts::TAU * (i as f64) * (n as f64) / (k as f64);
            acc += v * Complex64::from_polar(1.0, phase);
        }
        *o = acc;
    }
    out
}

/// Inverse DFT with the 1/K normalization.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let k = x.len();
    let mut out = vec![Complex64::default(); k];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        for (n, &v) in x.iter().enumerate() {
            let phase = std::f64::consts::TAU * (i as f64) * (n as f64) / (k as f64);
            acc += v * Complex64::from_polar(1.0, phase);
        }
        *o = acc / k as f64;
    }
    out
}

/// Forward DFT scaled by the sampling period, matching the normalized
/// Fourier series of a sampled sequence evaluated on the grid 2π n/τ.
pub fn dft_scaled(x: &[f64], sample_period: f64) -> Vec<Complex64> {
    dft(x).into_iter().map(|v| v * sample_period).collect()
}

/// Circular first difference x[k+1 mod K] − x[k].
pub fn circ_diff(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    (0..k).map(|i| x[(i + 1) % k] - x[i]).collect()
}

/// Exclusive prefix sum: out[k] = Σ_{m<k} x[m], out[0] = 0.
pub fn excl_prefix(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for &v in x {
        out.push(acc);
        acc += v;
    }
    out
}

/// Fourier-series coefficients of the trigonometric interpolant of K uniform
/// samples over one period, indexed on the baseband harmonics
/// m ∈ (−K/2, K/2]. For even K the Nyquist bin is split evenly between ±K/2
/// so that the map stays conjugate-symmetric.
pub fn fs_from_samples(samples: &[f64]) -> BTreeMap<i64, Complex64> {
    let k = samples.len();
    let spectrum = dft(samples);
    let mut coeffs = BTreeMap::new();
    if k == 0 {
        return coeffs;
    }
    let half = k as i64 / 2;
    for (n, &v) in spectrum.iter().enumerate() {
        let c = v / k as f64;
        if c.norm() == 0.0 {
            continue;
        }
        let n = n as i64;
        let m = if n <= half { n } else { n - k as i64 };
        if k % 2 == 0 && m == half {
            // Nyquist bin: c is real for real input
            coeffs.insert(half, c / 2.0);
            coeffs.insert(-half, (c / 2.0).conj());
        } else {
            coeffs.insert(m, c);
        }
    }
    coeffs
}

/// Periodize a coefficient map onto the baseband harmonics (−K/2, K/2] of a
/// sampling rate Ω_S = K·2π/τ: b[m] = Σ_{n ≡ m (mod K)} c[n]. This is the
/// Fourier series of the sampled sequence.
pub fn alias_to_baseband(
    period: f64,
    coeffs: &BTreeMap<i64, Complex64>,
    omega_s: f64,
) -> Result<BTreeMap<i64, Complex64>> {
    let grid = std::f64::consts::TAU / period;
    let kf = omega_s / grid;
    let k = kf.round();
    if (kf - k).abs() > 1e-6 * kf.abs().max(1.0) || k < 1.0 {
        return Err(Error::GridMismatch { what: "omega_s / (2π/τ)".into(), value: omega_s, grid });
    }
    let k = k as i64;
    let half = k / 2;
    let mut out: BTreeMap<i64, Complex64> = BTreeMap::new();
    for (&n, &c) in coeffs {
        let mut m = n.rem_euclid(k);
        if m > half {
            m -= k;
        }
        if k % 2 == 0 && m == half {
            // n ≡ K/2 aliases onto the Nyquist pair; split to keep symmetry
            *out.entry(half).or_default() += c / 2.0;
            *out.entry(-half).or_default() += c.conj() / 2.0;
        } else {
            *out.entry(m).or_default() += c;
        }
    }
    // drop numerically empty bins
    out.retain(|_, c| c.norm() > 0.0);
    Ok(out)
}

/// Build a signal from a coefficient map, deriving the band from the support.
pub fn signal_from_coeffs(
    period: f64,
    coeffs: BTreeMap<i64, Complex64>,
    fallback_band: BandSpec,
) -> Result<PeriodicBandpassSignal> {
    let grid = std::f64::consts::TAU / period;
    let support: Vec<i64> = coeffs
        .iter()
        .filter(|(_, c)| c.norm() > 1e-14)
        .map(|(&n, _)| n.abs())
        .filter(|&n| n > 0)
        .collect();
    let band = if support.is_empty() {
        fallback_band
    } else {
        let lo = *support.iter().min().unwrap() as f64 * grid;
        let hi = *support.iter().max().unwrap() as f64 * grid;
        BandSpec::new(lo, hi)?
    };
    PeriodicBandpassSignal::new(period, coeffs, band)
}
