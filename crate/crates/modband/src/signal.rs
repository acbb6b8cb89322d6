//! τ-periodic bandpass and AM test signals.
//!
//! Signals are stored as sparse Fourier-series coefficient maps on the
//! harmonic grid 2π/τ with the convention
//!
//!     g(t) = Σ_n c[n] · exp(j 2π n t / τ),   c[-n] = conj(c[n]).
//!
//! Conjugate symmetry keeps every synthesized signal real-valued.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a frequency sits on the
/// harmonic grid.
const GRID_TOL: f64 = 1e-6;

/// Absolute bound on the imaginary residual of Fourier synthesis.
pub const IMAG_TOL: f64 = 1e-10;

/// Passband `[Ω_L, Ω_U]` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub omega_low: f64,
    pub omega_high: f64,
}

impl BandSpec {
    /// A degenerate band with `omega_low == omega_high` (a single tone) is
    /// allowed; several planner bounds then saturate.
    pub fn new(omega_low: f64, omega_high: f64) -> Result<Self> {
        if !(omega_low > 0.0 && omega_high >= omega_low) {
            return Err(Error::Precondition(format!(
                "band requires 0 < omega_low <= omega_high, got ({omega_low}, {omega_high})"
            )));
        }
        Ok(Self { omega_low, omega_high })
    }

    /// Passband width Ω_U − Ω_L.
    pub fn width(&self) -> f64 {
        self.omega_high - self.omega_low
    }

    /// Harmonic indices (n_low, n_high) of the band edges on the grid 2π/τ,
    /// or a grid-mismatch error if an edge is off the grid.
    pub fn harmonic_range(&self, period: f64) -> Result<(i64, i64)> {
        let n_lo = index_on_grid(self.omega_low, period, "omega_low")?;
        let n_hi = index_on_grid(self.omega_high, period, "omega_high")?;
        Ok((n_lo, n_hi))
    }

    /// Snap the band outward onto the harmonic grid of `period`: the lower
    /// edge is floored, the upper edge is ceiled. Used when replicating
    /// captures whose nominal band is not commensurate with τ.
    pub fn snap_to_grid(&self, period: f64) -> Result<Self> {
        let grid = std::f64::consts::TAU / period;
        let n_lo = (self.omega_low / grid + GRID_TOL).floor();
        let n_hi = (self.omega_high / grid - GRID_TOL).ceil();
        BandSpec::new(n_lo * grid, n_hi * grid)
    }
}

fn index_on_grid(omega: f64, period: f64, what: &str) -> Result<i64> {
    let grid = std::f64::consts::TAU / period;
    let q = omega / grid;
    let n = q.round();
    if (q - n).abs() > GRID_TOL * q.abs().max(1.0) {
        return Err(Error::GridMismatch { what: what.to_string(), value: omega, grid });
    }
    Ok(n as i64)
}

/// Parameters of the AM test waveform
/// `A_M (1 + cos(Ω_M t + θ_M)) · sin(Ω_C t + θ_C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmParams {
    pub amp: f64,
    pub omega_msg: f64,
    pub phase_msg: f64,
    pub omega_carrier: f64,
    pub phase_carrier: f64,
}

impl AmParams {
    /// Implied passband (Ω_C − Ω_M, Ω_C + Ω_M).
    pub fn band(&self) -> Result<BandSpec> {
        BandSpec::new(self.omega_carrier - self.omega_msg, self.omega_carrier + self.omega_msg)
    }
}

/// τ-periodic real signal as a sparse conjugate-symmetric coefficient map.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBandpassSignal {
    pub period: f64,
    pub coeffs: BTreeMap<i64, Complex64>,
    pub band: BandSpec,
}

impl PeriodicBandpassSignal {
    pub fn new(period: f64, coeffs: BTreeMap<i64, Complex64>, band: BandSpec) -> Result<Self> {
        if period <= 0.0 {
            return Err(Error::Precondition(format!("period must be positive, got {period}")));
        }
        for (&n, &c) in &coeffs {
            let mirror = coeffs.get(&-n).copied().unwrap_or_default();
            if (mirror - c.conj()).norm() > 1e-9 * (1.0 + c.norm()) {
                return Err(Error::ConjugateSymmetry { residual: (mirror - c.conj()).norm() });
            }
        }
        Ok(Self { period, coeffs, band })
    }

    /// Largest |n| carrying a coefficient.
    pub fn max_harmonic(&self) -> i64 {
        self.coeffs.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    /// Evaluate g(t) at the given times. The imaginary part of the synthesis
    /// is asserted below [`IMAG_TOL`] and discarded.
    pub fn evaluate(&self, times: &[f64]) -> Result<Vec<f64>> {
        let omega0 = std::f64::consts::TAU / self.period;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&n, &c) in &self.coeffs {
                acc += c * Complex64::from_polar(1.0, omega0 * n as f64 * t);
            }
            if acc.im.abs() > IMAG_TOL {
                return Err(Error::ConjugateSymmetry { residual: acc.im.abs() });
            }
            out.push(acc.re);
        }
        Ok(out)
    }

    /// Evaluate at a single time.
    pub fn evaluate_at(&self, t: f64) -> Result<f64> {
        Ok(self.evaluate(std::slice::from_ref(&t))?[0])
    }

    /// Uniform samples g(k·T_S) for k = 0..count.
    pub fn sample(&self, sample_period: f64, count: usize) -> Result<Vec<f64>> {
        let times: Vec<f64> = (0..count).map(|k| k as f64 * sample_period).collect();
        self.evaluate(&times)
    }

    /// Grid estimate of ‖g‖∞ over one period using
    /// `oversample_factor × 2·n_max` points (factors below 8 are raised to 8).
    pub fn sup_norm(&self, oversample_factor: usize) -> f64 {
        let factor = oversample_factor.max(8);
        let n_max = self.max_harmonic().max(1) as usize;
        let points = factor * 2 * n_max;
        let omega0 = std::f64::consts::TAU / self.period;
        let mut sup: f64 = 0.0;
        for k in 0..points {
            let t = self.period * k as f64 / points as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&n, &c) in &self.coeffs {
                acc += c * Complex64::from_polar(1.0, omega0 * n as f64 * t);
            }
            sup = sup.max(acc.re.abs());
        }
        sup
    }

    /// Multiply every coefficient by a real factor.
    pub fn scale(&mut self, factor: f64) {
        for c in self.coeffs.values_mut() {
            *c *= factor;
        }
    }

    pub fn to_json(&self) -> String {
        let file = SignalFile {
            period: self.period,
            band: [self.band.omega_low, self.band.omega_high],
            coeffs: self
                .coeffs
                .iter()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(&n, c)| (n, c.re, c.im))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("signal serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SignalFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let mut coeffs = BTreeMap::new();
        for (n, re, im) in file.coeffs {
            coeffs.insert(n, Complex64::new(re, im));
        }
        let band = BandSpec::new(file.band[0], file.band[1])?;
        PeriodicBandpassSignal::new(file.period, coeffs, band)
    }
}

#[derive(Serialize, Deserialize)]
struct SignalFile {
    period: f64,
    band: [f64; 2],
    coeffs: Vec<(i64, f64, f64)>,
}

/// Draw a random bandpass signal with coefficients `100·U0 + j·120·U1` on the
/// positive band, mirrored by conjugation, then rescaled so the sup-norm grid
/// estimate (factor 64) equals one. Deterministic in `(band, period, seed)`.
pub fn synth_random_bandpass(band: &BandSpec, period: f64, seed: u64) -> Result<PeriodicBandpassSignal> {
    let (n_lo, n_hi) = band.harmonic_range(period)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = BTreeMap::new();
    for n in n_lo..=n_hi {
        let u0: f64 = rng.gen();
        let u1: f64 = rng.gen();
        let c = Complex64::new(100.0 * u0, 120.0 * u1);
        coeffs.insert(n, c);
        coeffs.insert(-n, c.conj());
    }
    let mut sig = PeriodicBandpassSignal::new(period, coeffs, *band)?;
    let sup = sig.sup_norm(64);
    if sup > 0.0 {
        sig.scale(1.0 / sup);
    }
    Ok(sig)
}

/// Exact five-coefficient Fourier expansion of the AM waveform.
///
/// `A sin(Ω_C t + θ_C) + (A/2)[sin((Ω_C+Ω_M)t + θ_C+θ_M) + sin((Ω_C−Ω_M)t + θ_C−θ_M)]`
/// places lines at ±Ω_C and ±(Ω_C ± Ω_M); the side lobes are symmetric about
/// the carrier.
pub fn synth_am(p: &AmParams, period: f64) -> Result<PeriodicBandpassSignal> {
    if !(p.omega_carrier > p.omega_msg && p.omega_msg > 0.0) {
        return Err(Error::Precondition(format!(
            "AM requires omega_carrier > omega_msg > 0, got ({}, {})",
            p.omega_carrier, p.omega_msg
        )));
    }
    let n_c = index_on_grid(p.omega_carrier, period, "omega_carrier")?;
    let n_m = index_on_grid(p.omega_msg, period, "omega_msg")?;
    let mut coeffs = BTreeMap::new();
    // sin(ωt + θ) contributes e^{jθ}/(2j) at +ω and its conjugate at −ω.
    let mut add_sine = |n: i64, amp: f64, theta: f64| {
        let c = Complex64::from_polar(amp, theta) / Complex64::new(0.0, 2.0);
        *coeffs.entry(n).or_insert(Complex64::default()) += c;
        *coeffs.entry(-n).or_insert(Complex64::default()) += c.conj();
    };
    add_sine(n_c, p.amp, p.phase_carrier);
    add_sine(n_c + n_m, p.amp / 2.0, p.phase_carrier + p.phase_msg);
    add_sine(n_c - n_m, p.amp / 2.0, p.phase_carrier - p.phase_msg);
    let band = p.band()?;
    PeriodicBandpassSignal::new(period, coeffs, band)
}

/// Direct time-domain evaluation of the AM waveform, used as an oracle for
/// the Fourier expansion.
pub fn am_waveform(p: &AmParams, t: f64) -> f64 {
    p.amp * (1.0 + (p.omega_msg * t + p.phase_msg).cos()) * (p.omega_carrier * t + p.phase_carrier).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn random_bandpass_support_and_norm() {
        let band = BandSpec::new(50.0 * PI, 51.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 7).unwrap();
        let idx: Vec<i64> = sig.coeffs.keys().copied().collect();
        assert_eq!(idx, vec![-51, -50, 50, 51]);
        assert!((sig.sup_norm(64) - 1.0).abs() < 1e-12);
        // refinement only sharpens the estimate slightly
        assert!((sig.sup_norm(1024) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn random_bandpass_deterministic() {
        let band = BandSpec::new(50.0 * PI, 51.0 * PI).unwrap();
        let a = synth_random_bandpass(&band, 2.0, 7).unwrap();
        let b = synth_random_bandpass(&band, 2.0, 7).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
        let c = synth_random_bandpass(&band, 2.0, 8).unwrap();
        assert_ne!(a.coeffs, c.coeffs);
    }

    #[test]
    fn degenerate_single_harmonic() {
        let band = BandSpec::new(PI, PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 3).unwrap();
        let idx: Vec<i64> = sig.coeffs.keys().copied().collect();
        assert_eq!(idx, vec![-1, 1]);
    }

    #[test]
    fn off_grid_band_rejected() {
        let band = BandSpec::new(50.3 * PI, 51.0 * PI).unwrap();
        let err = synth_random_bandpass(&band, 2.0, 7).unwrap_err();
        assert!(matches!(err, Error::GridMismatch { .. }));
    }

    #[test]
    fn am_expansion_matches_pointwise_formula() {
        // Ω_M = 2π, Ω_C = 20π on the τ = 1 grid
        let p = AmParams {
            amp: 1.0,
            omega_msg: 2.0 * PI,
            phase_msg: 0.0,
            omega_carrier: 20.0 * PI,
            phase_carrier: 0.0,
        };
        let sig = synth_am(&p, 1.0).unwrap();
        let c10 = sig.coeffs[&10];
        assert!((c10 - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        let times: Vec<f64> = (0..101).map(|k| k as f64 * 0.01).collect();
        let vals = sig.evaluate(&times).unwrap();
        for (&t, &v) in times.iter().zip(vals.iter()) {
            assert!((v - am_waveform(&p, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn am_hardware_parameters_band() {
        let p = AmParams {
            amp: 3.72,
            omega_msg: 43.98,
            phase_msg: 2.644,
            omega_carrier: 628.31,
            phase_carrier: -0.0093,
        };
        let band = p.band().unwrap();
        assert!((band.omega_low - 584.33).abs() < 1e-9);
        assert!((band.omega_high - 672.30).abs() < 1e-9);
        // frequencies are not commensurate with τ = 0.299: the synthesizer
        // must reject them until snapped
        assert!(synth_am(&p, 0.299).is_err());
    }

    #[test]
    fn am_zero_amplitude_is_zero_signal() {
        let p = AmParams {
            amp: 0.0,
            omega_msg: 2.0 * PI,
            phase_msg: 0.3,
            omega_carrier: 10.0 * PI,
            phase_carrier: 0.1,
        };
        let sig = synth_am(&p, 1.0).unwrap();
        let vals = sig.evaluate(&[0.0, 0.13, 0.77]).unwrap();
        assert!(vals.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn evaluate_cosine_pair() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, Complex64::new(0.5, 0.0));
        coeffs.insert(-1, Complex64::new(0.5, 0.0));
        let band = BandSpec::new(2.0 * PI, 2.0 * PI).unwrap();
        let sig = PeriodicBandpassSignal::new(1.0, coeffs, band).unwrap();
        assert!((sig.evaluate_at(0.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn evaluate_periodicity() {
        let band = BandSpec::new(50.0 * PI, 51.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 11).unwrap();
        for k in 0..16 {
            let t = 0.123 * k as f64;
            let a = sig.evaluate_at(t).unwrap();
            let b = sig.evaluate_at(t + 2.0).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn broken_symmetry_rejected() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, Complex64::new(0.5, 0.2));
        coeffs.insert(-1, Complex64::new(0.5, 0.2));
        let band = BandSpec::new(2.0 * PI, 2.0 * PI).unwrap();
        assert!(PeriodicBandpassSignal::new(1.0, coeffs, band).is_err());
    }

    #[test]
    fn sup_norm_pure_tone() {
        let mut coeffs = BTreeMap::new();
        // A·cos: c(±1) = A/2
        coeffs.insert(1, Complex64::new(1.7, 0.0));
        coeffs.insert(-1, Complex64::new(1.7, 0.0));
        let band = BandSpec::new(2.0 * PI, 2.0 * PI).unwrap();
        let sig = PeriodicBandpassSignal::new(1.0, coeffs, band).unwrap();
        assert!((sig.sup_norm(64) - 3.4).abs() < 1e-6);
    }

    #[test]
    fn json_round_trip() {
        let band = BandSpec::new(50.0 * PI, 51.0 * PI).unwrap();
        let sig = synth_random_bandpass(&band, 2.0, 7).unwrap();
        let back = PeriodicBandpassSignal::from_json(&sig.to_json()).unwrap();
        assert_eq!(sig, back);
    }
}
