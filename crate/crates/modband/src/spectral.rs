//! Spectral relocation between baseband and passband: band selection on the
//! wedge domain D(Ω_S, P), lowpass extraction, sinc interpolation and AM
//! remodulation.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::signal_from_coeffs;
use crate::signal::{BandSpec, PeriodicBandpassSignal};

/// The two-sided selection domain
/// `D(Ω_S, P) = ½[−PΩ_S, −(P−1)Ω_S] ∪ ½[(P−1)Ω_S, PΩ_S]` (closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSelector {
    pub omega_s: f64,
    pub wedge: u32,
}

impl SpectralSelector {
    pub fn new(omega_s: f64, wedge: u32) -> Result<Self> {
        if omega_s <= 0.0 || wedge == 0 {
            return Err(Error::Precondition(format!(
                "selector needs omega_s > 0 and wedge ≥ 1, got ({omega_s}, {wedge})"
            )));
        }
        Ok(Self { omega_s, wedge })
    }

    /// Positive-frequency block `[½(P−1)Ω_S, ½PΩ_S]`.
    pub fn positive_block(&self) -> (f64, f64) {
        let p = self.wedge as f64;
        (0.5 * (p - 1.0) * self.omega_s, 0.5 * p * self.omega_s)
    }

    pub fn contains(&self, omega: f64) -> bool {
        let (lo, hi) = self.positive_block();
        let a = omega.abs();
        a >= lo && a <= hi
    }
}

/// Keep exactly the coefficients of an Ω_S-periodic sampled series whose
/// aliases land inside D(Ω_S, P).
///
/// The input map holds the baseband representatives (harmonics of 2π/τ inside
/// the Nyquist band of Ω_S); each is lifted to its alias n + lK inside the
/// selection domain. When the domain endpoints coincide with a bin the two
/// edge aliases receive half the coefficient each, which keeps the output
/// conjugate-symmetric and leaves the sample values unchanged.
pub fn band_select(
    period: f64,
    baseband: &BTreeMap<i64, Complex64>,
    sel: &SpectralSelector,
) -> Result<PeriodicBandpassSignal> {
    let grid = std::f64::consts::TAU / period;
    let kf = sel.omega_s / grid;
    let k = kf.round();
    if (kf - k).abs() > 1e-6 * kf.max(1.0) || k < 1.0 {
        return Err(Error::GridMismatch { what: "omega_s / (2π/τ)".into(), value: sel.omega_s, grid });
    }
    let k = k as i64;
    let p = sel.wedge as i64;
    // selection domain in bin units, scaled by two to keep half-integer
    // endpoints exact: |2n| ∈ [(P−1)K, PK]
    let lo2 = (p - 1) * k;
    let hi2 = p * k;
    let mut out: BTreeMap<i64, Complex64> = BTreeMap::new();
    for (&m, &c) in baseband {
        let mut hits: Vec<i64> = Vec::with_capacity(2);
        // aliases of m within |2n| ∈ [lo2, hi2]; at most one per sign apart
        // from endpoint coincidences
        for l in -(p + 1)..=(p + 1) {
            let n = m + l * k;
            let a = 2 * n.abs();
            if a >= lo2 && a <= hi2 {
                hits.push(n);
            }
        }
        hits.sort_unstable();
        hits.dedup();
        match hits.len() {
            0 => {}
            1 => {
                *out.entry(hits[0]).or_default() += c;
            }
            2 => {
                // coincident edges: split evenly
                *out.entry(hits[0]).or_default() += c / 2.0;
                *out.entry(hits[1]).or_default() += c / 2.0;
            }
            n => {
                return Err(Error::Precondition(format!(
                    "bin {m} has {n} aliases in the selection domain"
                )))
            }
        }
    }
    out.retain(|_, c| c.norm() > 0.0);
    let (blo, bhi) = sel.positive_block();
    let fallback = BandSpec::new(blo.max(grid), bhi.max(grid))?;
    signal_from_coeffs(period, out, fallback)
}

/// Eq.-style lowpass extraction: retain harmonics with |ω| ≤ Ω_S/2.
pub fn lowpass_extract(
    period: f64,
    coeffs: &BTreeMap<i64, Complex64>,
    omega_s: f64,
) -> BTreeMap<i64, Complex64> {
    let grid = std::f64::consts::TAU / period;
    coeffs
        .iter()
        .filter(|(&n, _)| (n as f64 * grid).abs() <= omega_s / 2.0 + 1e-9 * omega_s)
        .map(|(&n, &c)| (n, c))
        .collect()
}

/// Truncated-kernel sinc interpolation `Σ_k x[k]·sinc(Ω(t − kT_S))` with
/// `T_S = π/Ω`. Exact on the sample grid; truncation error appears away from
/// the window.
pub fn sinc_interpolate(samples: &[f64], omega: f64, times: &[f64]) -> Vec<f64> {
    let t_s = std::f64::consts::PI / omega;
    times
        .iter()
        .map(|&t| {
            samples
                .iter()
                .enumerate()
                .map(|(k, &x)| x * sinc(omega * (t - k as f64 * t_s)))
                .sum()
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Periodic (Dirichlet) interpolation of K samples spanning one period:
/// resynthesis through the trigonometric interpolant, free of truncation
/// error for τ-periodic inputs.
pub fn dirichlet_interpolate(samples: &[f64], period: f64, times: &[f64]) -> Result<Vec<f64>> {
    let coeffs = crate::series::fs_from_samples(samples);
    let band = BandSpec::new(1.0, 1.0)?;
    let sig = PeriodicBandpassSignal::new(period, coeffs, band)?;
    sig.evaluate(times)
}

/// Passband reconstruction `g̃(t)·sin(Ω_C t + θ_C)/sin θ_C` from baseband
/// values aligned with `times`.
pub fn am_remodulate(
    baseband: &[f64],
    omega_carrier: f64,
    theta_carrier: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    if baseband.len() != times.len() {
        return Err(Error::LengthMismatch { left: baseband.len(), right: times.len() });
    }
    let s = theta_carrier.sin();
    if s.abs() < 1e-6 {
        return Err(Error::IllConditionedPhase { sin_theta: s });
    }
    Ok(baseband
        .iter()
        .zip(times)
        .map(|(&g, &t)| g * (omega_carrier * t + theta_carrier).sin() / s)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::alias_to_baseband;
    use crate::signal::synth_random_bandpass;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn selector_geometry() {
        let sel = SpectralSelector::new(10.0, 1).unwrap();
        assert!(sel.contains(0.0) && sel.contains(4.9) && !sel.contains(5.1));
        let sel = SpectralSelector::new(10.0, 3).unwrap();
        assert!(sel.contains(-12.0) && sel.contains(12.0));
        assert!(!sel.contains(8.0) && !sel.contains(16.0));
    }

    #[test]
    fn wedge_one_is_identity_on_nyquist_band() {
        let band = BandSpec::new(4.0 * PI, 6.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 1.0, 3).unwrap();
        let omega_s = 16.0 * TAU; // well above 2Ω_U
        let base = alias_to_baseband(1.0, &sig.coeffs, omega_s).unwrap();
        let sel = SpectralSelector::new(omega_s, 1).unwrap();
        let out = band_select(1.0, &base, &sel).unwrap();
        for (&n, &c) in &sig.coeffs {
            assert!((out.coeffs[&n] - c).norm() < 1e-12);
        }
    }

    #[test]
    fn odd_wedge_relocation_round_trip() {
        // interior of the wedge (no edge collisions): K = 23, Ω_S = 23π
        let band = BandSpec::new(50.0 * PI, 51.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 7).unwrap();
        let omega_s = 23.0 * PI;
        let base = alias_to_baseband(2.0, &sig.coeffs, omega_s).unwrap();
        // relocated support sits at |m| ∈ {4, 5}
        assert!(base.contains_key(&4) && base.contains_key(&5));
        let sel = SpectralSelector::new(omega_s, 5).unwrap();
        let out = band_select(2.0, &base, &sel).unwrap();
        assert_eq!(out.coeffs.len(), sig.coeffs.len());
        for (&n, &c) in &sig.coeffs {
            assert!((out.coeffs[&n] - c).norm() < 1e-10, "bin {n}");
        }
        // energy preserved
        let e_in: f64 = sig.coeffs.values().map(|c| c.norm_sqr()).sum();
        let e_out: f64 = out.coeffs.values().map(|c| c.norm_sqr()).sum();
        assert!((e_in - e_out).abs() < 1e-12 * e_in);
    }

    #[test]
    fn even_wedge_mirrors_spectrum() {
        // K = 220, Ω_S = 220π, wedge 2: band lands mirrored at |m| ∈ {20, 21}
        let band = BandSpec::new(199.0 * PI, 200.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 13).unwrap();
        let omega_s = 220.0 * PI;
        let base = alias_to_baseband(2.0, &sig.coeffs, omega_s).unwrap();
        assert!((base[&-20] - sig.coeffs[&200]).norm() < 1e-12);
        let sel = SpectralSelector::new(omega_s, 2).unwrap();
        let out = band_select(2.0, &base, &sel).unwrap();
        for (&n, &c) in &sig.coeffs {
            assert!((out.coeffs[&n] - c).norm() < 1e-10, "bin {n}");
        }
    }

    #[test]
    fn relocation_edge_collision_preserves_samples() {
        // Ω_S = 25π at wedge 5: band edges ±50π alias onto DC together; the
        // split keeps the resampled values exact even though the individual
        // edge coefficients merge.
        let band = BandSpec::new(50.0 * PI, 51.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 7).unwrap();
        let omega_s = 25.0 * PI;
        let base = alias_to_baseband(2.0, &sig.coeffs, omega_s).unwrap();
        let sel = SpectralSelector::new(omega_s, 5).unwrap();
        let out = band_select(2.0, &base, &sel).unwrap();
        let t_s = TAU / omega_s;
        let a = sig.sample(t_s, 25).unwrap();
        let b = out.sample(t_s, 25).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        // interior bin survives exactly; the edge pair merges its real part
        assert!((out.coeffs[&51] - sig.coeffs[&51]).norm() < 1e-12);
        assert!((out.coeffs[&50] - Complex64::new(sig.coeffs[&50].re, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lowpass_extract_limits() {
        let band = BandSpec::new(4.0 * PI, 6.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 1.0, 3).unwrap();
        let inside = lowpass_extract(1.0, &sig.coeffs, 16.0 * PI);
        assert_eq!(&inside, &sig.coeffs);
        let empty = lowpass_extract(1.0, &sig.coeffs, 2.0 * PI);
        assert!(empty.is_empty());
    }

    #[test]
    fn sinc_reproduces_grid_samples() {
        let omega = PI / 0.01;
        let samples: Vec<f64> = (0..64).map(|k| (0.23 * k as f64).sin()).collect();
        let times: Vec<f64> = (0..64).map(|k| k as f64 * 0.01).collect();
        let out = sinc_interpolate(&samples, omega, &times);
        for (a, b) in out.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sinc_constant_center_accuracy() {
        let omega = PI / 0.01;
        let samples = vec![1.5; 400];
        let times: Vec<f64> = (0..5).map(|i| 2.0 + i as f64 * 0.0013).collect();
        let out = sinc_interpolate(&samples, omega, &times);
        for v in out {
            assert!((v - 1.5).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn sinc_bandlimited_tone_accuracy() {
        let t_s = 0.01;
        let omega = PI / t_s;
        let tone = |t: f64| (2.0 * PI * 8.0 * t).sin(); // 8 Hz ≪ 50 Hz
        let samples: Vec<f64> = (0..1200).map(|k| tone(k as f64 * t_s)).collect();
        let times: Vec<f64> = (0..40).map(|i| 5.0 + i as f64 * 0.0023).collect();
        let out = sinc_interpolate(&samples, omega, &times);
        for (&t, &v) in times.iter().zip(&out) {
            assert!((v - tone(t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn dirichlet_is_exact_for_periodic_input() {
        let band = BandSpec::new(4.0 * PI, 6.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 1.0, 3).unwrap();
        let k = 16;
        let samples = sig.sample(1.0 / k as f64, k).unwrap();
        let times: Vec<f64> = (0..37).map(|i| i as f64 * 0.027).collect();
        let out = dirichlet_interpolate(&samples, 1.0, &times).unwrap();
        let truth = sig.evaluate(&times).unwrap();
        for (a, b) in out.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn remodulate_carrier_recovery() {
        let theta = 0.4f64;
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.003).collect();
        let constant: Vec<f64> = vec![theta.sin(); times.len()];
        let out = am_remodulate(&constant, 400.0, theta, &times).unwrap();
        for (&t, &v) in times.iter().zip(&out) {
            assert!((v - (400.0 * t + theta).sin()).abs() < 1e-12);
        }
        // θ_C = π/2 divides by one
        let ones = vec![1.0; times.len()];
        let out = am_remodulate(&ones, 400.0, PI / 2.0, &times).unwrap();
        for (&t, &v) in times.iter().zip(&out) {
            assert!((v - (400.0 * t).cos()).abs() < 1e-12);
        }
        assert!(am_remodulate(&ones, 400.0, PI, &times).is_err());
    }
}
