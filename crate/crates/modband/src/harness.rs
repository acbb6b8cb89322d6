//! Experiment orchestration: config-driven synth → fold → sample → recover →
//! metrics pipelines, seeded Monte-Carlo sweeps, capture files and shipped
//! presets.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{
    circular_fold_count, fold_generalized, fold_ideal, residue_and_fold_count, Architecture,
    FoldedCapture, HysteresisParams, NonIdealResidue,
};
use crate::planner::{self, PlanRegime, SamplingPlan};
use crate::recovery::fourier::{recover_bandpass_fourier, SetChoice};
use crate::recovery::time::{recover_bandpass_time, recover_generalized, UsAlgConfig};
use crate::series::{alias_to_baseband, signal_from_coeffs};
use crate::signal::{synth_am, synth_random_bandpass, AmParams, BandSpec, PeriodicBandpassSignal};
use crate::spectral::lowpass_extract;

/// Mean squared error (1/K)·Σ|a[k]−b[k]|².
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

/// Remove the 2λZ recovery ambiguity against ground truth: subtracts
/// 2λ·round(mean(recovered − truth)/2λ).
pub fn fix_offset(recovered: &[f64], truth: &[f64], lambda: f64) -> Vec<f64> {
    if recovered.len() != truth.len() || recovered.is_empty() {
        return recovered.to_vec();
    }
    let mean: f64 =
        recovered.iter().zip(truth).map(|(r, t)| r - t).sum::<f64>() / recovered.len() as f64;
    let shift = 2.0 * lambda * (mean / (2.0 * lambda)).round();
    recovered.iter().map(|r| r - shift).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaSpec {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl LambdaSpec {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            LambdaSpec::Fixed { value } => value,
            LambdaSpec::Uniform { low, high } => rng.gen_range(low..high),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalSpec {
    RandomBandpass { omega_low: f64, omega_high: f64, period: f64 },
    Am {
        amp: f64,
        omega_msg: f64,
        phase_msg: f64,
        omega_carrier: f64,
        phase_carrier: f64,
        period: f64,
    },
    CaptureFile { path: String },
}

impl SignalSpec {
    pub fn period(&self) -> Option<f64> {
        match self {
            SignalSpec::RandomBandpass { period, .. } | SignalSpec::Am { period, .. } => Some(*period),
            SignalSpec::CaptureFile { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArchSpec {
    Ideal { lambda: LambdaSpec },
    Generalized { lambda: f64, hysteresis: f64 },
    NonIdealJitter { lambda: LambdaSpec, jitter: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodSpec {
    Time { order: Option<u32> },
    Fourier { set: SetChoice, snap: bool, fold_cap: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    pub architecture: ArchSpec,
    pub sample_period: f64,
    pub wedge: u32,
    pub method: MethodSpec,
    pub seed: u64,
    pub replications: usize,
    /// Accept operating points outside the closed-form plans (they are then
    /// vetted by the recovery's own validity checks).
    #[serde(default)]
    pub empirical: bool,
    /// Planner band when it should be wider than the signal support
    /// (conservative grid-snapped hardware bands).
    #[serde(default)]
    pub band_override: Option<[f64; 2]>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn band(&self) -> Result<BandSpec> {
        if let Some([lo, hi]) = self.band_override {
            return BandSpec::new(lo, hi);
        }
        match &self.signal {
            SignalSpec::RandomBandpass { omega_low, omega_high, .. } => {
                BandSpec::new(*omega_low, *omega_high)
            }
            SignalSpec::Am { omega_msg, omega_carrier, .. } => {
                BandSpec::new(omega_carrier - omega_msg, omega_carrier + omega_msg)
            }
            SignalSpec::CaptureFile { .. } => Err(Error::Precondition(
                "capture-file configs need an explicit band_override".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub lambda: f64,
    pub fold_count: usize,
    pub spike_count_circular: usize,
    pub order_used: u32,
    pub amplitude_scale: f64,
    pub success: bool,
    pub mse: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<RunRecord>,
    pub failures: usize,
    pub max_mse: Option<f64>,
    pub mean_mse: Option<f64>,
}

impl SweepReport {
    fn from_runs(mut runs: Vec<RunRecord>) -> Self {
        runs.sort_by_key(|r| r.index);
        let failures = runs.iter().filter(|r| !r.success).count();
        let mses: Vec<f64> = runs.iter().filter_map(|r| r.mse).collect();
        let max_mse = mses.iter().copied().fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
        let mean_mse = if mses.is_empty() {
            None
        } else {
            Some(mses.iter().sum::<f64>() / mses.len() as f64)
        };
        SweepReport { runs, failures, max_mse, mean_mse }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Run the configured sweep. Replications are keyed by (seed, index) and run
/// in parallel; `MODBAND_THREADS` caps the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepReport> {
    if cfg.replications == 0 {
        return Ok(SweepReport::from_runs(Vec::new()));
    }
    if !cfg.empirical {
        check_plan_gate(cfg)?;
    }
    let indices: Vec<usize> = (0..cfg.replications).collect();
    let worker = |&index: &usize| -> RunRecord {
        match run_single(cfg, index) {
            Ok(rec) => rec,
            Err(e) => RunRecord {
                index,
                lambda: f64::NAN,
                fold_count: 0,
                spike_count_circular: 0,
                order_used: 0,
                amplitude_scale: 1.0,
                success: false,
                mse: None,
                note: Some(e.to_string()),
            },
        }
    };
    let runs: Vec<RunRecord> = match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            pool.install(|| {
                use rayon::prelude::*;
                indices.par_iter().map(worker).collect()
            })
        }
        None => {
            use rayon::prelude::*;
            indices.par_iter().map(worker).collect()
        }
    };
    Ok(SweepReport::from_runs(runs))
}

fn thread_cap() -> Option<usize> {
    std::env::var("MODBAND_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0)
}

fn check_plan_gate(cfg: &ExperimentConfig) -> Result<()> {
    let band = cfg.band()?;
    let plan = match &cfg.method {
        MethodSpec::Time { .. } => planner::theorem1_range(&band, cfg.wedge),
        MethodSpec::Fourier { set, fold_cap, .. } => {
            let period = cfg
                .signal
                .period()
                .ok_or_else(|| Error::Precondition("capture-file configs need empirical mode".into()))?;
            let k = (period / cfg.sample_period).round() as usize;
            let idx = planner::discrete_indices(period, k, &band, cfg.wedge)?;
            let (outer, inner) =
                planner::theorem3_ranges(period, idx.q_low, idx.q_high, fold_cap.unwrap_or(0), cfg.wedge);
            match set {
                SetChoice::Inner => inner,
                _ => outer,
            }
        }
    };
    if !plan.contains(cfg.sample_period) {
        return Err(Error::InfeasiblePlan {
            reason: format!(
                "T_S = {} outside {:?} interval [{:.6}, {:.6}] (wedge {}): {}",
                cfg.sample_period,
                plan.regime,
                plan.t_min,
                plan.t_max,
                cfg.wedge,
                plan.reason.unwrap_or_else(|| "set empirical = true to proceed".into())
            ),
        });
    }
    Ok(())
}

/// Per-replication RNG: one ChaCha stream per index on the config seed.
fn rep_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn run_single(cfg: &ExperimentConfig, index: usize) -> Result<RunRecord> {
    let mut rng = rep_rng(cfg.seed, index);
    let band = cfg.band()?;

    // draw the threshold first so the stream layout is stable
    let lambda = match &cfg.architecture {
        ArchSpec::Ideal { lambda } | ArchSpec::NonIdealJitter { lambda, .. } => lambda.draw(&mut rng),
        ArchSpec::Generalized { lambda, .. } => *lambda,
    };

    if let SignalSpec::CaptureFile { path } = &cfg.signal {
        return run_capture_file(cfg, index, path, lambda, band);
    }
    let period = cfg.signal.period().expect("synthetic signals carry a period");
    let k = integral_sample_count(period, cfg.sample_period)?;

    let signal_seed: u64 = rng.gen();
    let mut signal = match &cfg.signal {
        SignalSpec::RandomBandpass { omega_low, omega_high, period } => {
            let sig_band = BandSpec::new(*omega_low, *omega_high)?;
            synth_random_bandpass(&sig_band, *period, signal_seed)?
        }
        SignalSpec::Am { amp, omega_msg, phase_msg, omega_carrier, phase_carrier, period } => {
            let p = AmParams {
                amp: *amp,
                omega_msg: *omega_msg,
                phase_msg: *phase_msg,
                omega_carrier: *omega_carrier,
                phase_carrier: *phase_carrier,
            };
            synth_am(&p, *period)?
        }
        SignalSpec::CaptureFile { .. } => unreachable!(),
    };

    // optional amplitude rescale until the circular fold count meets the cap
    let fold_cap = match &cfg.method {
        MethodSpec::Fourier { fold_cap, .. } => *fold_cap,
        _ => None,
    };
    let mut amplitude_scale = 1.0f64;
    let mut capture = build_capture(cfg, &signal, lambda, cfg.sample_period, k, &mut rng)?;
    if let Some(cap) = fold_cap {
        for _ in 0..12 {
            let spikes = circular_fold_count(&capture)?;
            if spikes <= cap {
                break;
            }
            let shrink = (cap as f64 / spikes as f64).min(0.85);
            amplitude_scale *= shrink;
            signal.scale(shrink);
            capture = build_capture(cfg, &signal, lambda, cfg.sample_period, k, &mut rng)?;
        }
    }

    let (_, fold_count) = residue_and_fold_count(&capture)?;
    let spike_count = circular_fold_count(&capture)?;
    let beta = signal.sup_norm(64);

    let report = match &cfg.method {
        MethodSpec::Time { order } => match &cfg.architecture {
            ArchSpec::Generalized { lambda, hysteresis } => {
                let h = HysteresisParams::new(*lambda, *hysteresis, 0.0)?;
                recover_generalized(&capture, &h, beta, &band, cfg.wedge)?
            }
            _ => {
                let us = UsAlgConfig {
                    lambda,
                    beta,
                    order: *order,
                    band,
                    sample_period: cfg.sample_period,
                };
                recover_bandpass_time(&capture, &us, cfg.wedge)?.0
            }
        },
        MethodSpec::Fourier { set, snap, .. } => {
            recover_bandpass_fourier(&capture, period, &band, spike_count, cfg.wedge, *set, *snap)?.0
        }
    };

    Ok(RunRecord {
        index,
        lambda,
        fold_count,
        spike_count_circular: spike_count,
        order_used: report.order_used,
        amplitude_scale,
        success: report.success,
        mse: report.mse,
        note: None,
    })
}

fn run_capture_file(
    cfg: &ExperimentConfig,
    index: usize,
    path: &str,
    lambda_hint: f64,
    band: BandSpec,
) -> Result<RunRecord> {
    let capture = ingest_capture(Path::new(path))?;
    let lambda = match capture.architecture {
        Architecture::Ideal { lambda } if lambda > 0.0 => lambda,
        _ => capture.architecture.lambda().max(lambda_hint),
    };
    let period = capture.sample_period * capture.len() as f64;
    let report = match &cfg.method {
        MethodSpec::Time { order } => {
            let beta = capture
                .ground_truth
                .as_ref()
                .map(|g| g.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
                .unwrap_or(lambda)
                .max(lambda);
            let us = UsAlgConfig {
                lambda,
                beta,
                order: *order,
                band,
                sample_period: capture.sample_period,
            };
            recover_bandpass_time(&capture, &us, cfg.wedge)?.0
        }
        MethodSpec::Fourier { set, snap, fold_cap } => {
            let folds = match (&capture.ground_truth, fold_cap) {
                (Some(_), _) => circular_fold_count(&capture)?,
                (None, Some(cap)) => *cap,
                (None, None) => {
                    return Err(Error::Precondition(
                        "fourier recovery of a capture without ground truth needs fold_cap".into(),
                    ))
                }
            };
            recover_bandpass_fourier(&capture, period, &band, folds, cfg.wedge, *set, *snap)?.0
        }
    };
    let fold_count = capture.ground_truth.as_ref().map(|_| residue_and_fold_count(&capture))
        .transpose()?
        .map(|(_, m)| m)
        .unwrap_or(0);
    Ok(RunRecord {
        index,
        lambda,
        fold_count,
        spike_count_circular: capture.ground_truth.as_ref().map(|_| circular_fold_count(&capture)).transpose()?.unwrap_or(0),
        order_used: report.order_used,
        amplitude_scale: 1.0,
        success: report.success,
        mse: report.mse,
        note: None,
    })
}

fn integral_sample_count(period: f64, sample_period: f64) -> Result<usize> {
    let kf = period / sample_period;
    let k = kf.round();
    if (kf - k).abs() > 1e-6 * kf.max(1.0) || k < 2.0 {
        return Err(Error::GridMismatch { what: "period / sample_period".into(), value: kf, grid: 1.0 });
    }
    Ok(k as usize)
}

/// Fold a signal through the configured architecture and sample one period.
fn build_capture(
    cfg: &ExperimentConfig,
    signal: &PeriodicBandpassSignal,
    lambda: f64,
    t_s: f64,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FoldedCapture> {
    match &cfg.architecture {
        ArchSpec::Ideal { .. } => Ok(fold_signal_ideal(signal, lambda, t_s, k)?),
        ArchSpec::Generalized { lambda, hysteresis } => {
            let h = HysteresisParams::new(*lambda, *hysteresis, 0.0)?;
            fold_signal_generalized(signal, &h, t_s, k)
        }
        ArchSpec::NonIdealJitter { jitter, .. } => {
            fold_signal_nonideal_jitter(signal, lambda, *jitter, t_s, k, rng)
        }
    }
}

/// Ideal capture: pointwise centered modulo of the samples.
pub fn fold_signal_ideal(
    signal: &PeriodicBandpassSignal,
    lambda: f64,
    t_s: f64,
    k: usize,
) -> Result<FoldedCapture> {
    let gamma = signal.sample(t_s, k)?;
    let samples = gamma.iter().map(|&g| fold_ideal(g, lambda)).collect();
    Ok(FoldedCapture {
        samples,
        sample_period: t_s,
        architecture: Architecture::Ideal { lambda },
        ground_truth: Some(gamma),
    })
}

/// Generalized capture: simulate the hysteresis encoder over one period and
/// sample its trace.
pub fn fold_signal_generalized(
    signal: &PeriodicBandpassSignal,
    params: &HysteresisParams,
    t_s: f64,
    k: usize,
) -> Result<FoldedCapture> {
    let horizon = t_s * k as f64;
    let grid = crate::folding::default_event_grid(signal.band.omega_high);
    let sig = signal.clone();
    let g = move |t: f64| sig.evaluate_at(t).expect("synthesized signals evaluate cleanly");
    let fold = fold_generalized(&g, params, horizon, grid)?;
    let gamma = signal.sample(t_s, k)?;
    let samples: Vec<f64> =
        (0..k).map(|i| gamma[i] - fold.residual_at(i as f64 * t_s)).collect();
    Ok(FoldedCapture {
        samples,
        sample_period: t_s,
        architecture: Architecture::Generalized {
            lambda: params.lambda,
            hysteresis: params.hysteresis,
            transient: params.transient,
        },
        ground_truth: Some(gamma),
    })
}

/// Non-ideal capture: residue breakpoints at the ideal fold instants of the
/// samples, each jump perturbed by a factor (1 + δ), δ ~ U(−jitter, jitter).
/// The resulting levels leave the 2λZ grid, which defeats grid-rounding
/// recoveries while the Fourier path still applies.
pub fn fold_signal_nonideal_jitter(
    signal: &PeriodicBandpassSignal,
    lambda: f64,
    jitter: f64,
    t_s: f64,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FoldedCapture> {
    let gamma = signal.sample(t_s, k)?;
    let ideal: Vec<f64> = gamma.iter().map(|&g| g - fold_ideal(g, lambda)).collect();
    let mut breakpoints = Vec::new();
    let mut levels = Vec::new();
    let mut level = 0.0;
    for i in 1..k {
        let jump = ideal[i] - ideal[i - 1];
        if jump.abs() > 1e-9 * lambda {
            let delta: f64 = rng.gen_range(-jitter..jitter);
            level += jump * (1.0 + delta);
            breakpoints.push(i);
            levels.push(level);
        }
    }
    let residue = NonIdealResidue::new(breakpoints, levels)?;
    let samples: Vec<f64> =
        gamma.iter().enumerate().map(|(i, &g)| g - residue.level_at(i)).collect();
    Ok(FoldedCapture {
        samples,
        sample_period: t_s,
        architecture: Architecture::NonIdeal { lambda, residue },
        ground_truth: Some(gamma),
    })
}

/// Largest sample-wise gap between folding the bandpass samples and folding
/// the relocated-baseband samples: the undersampled demodulation identity.
pub fn demod_identity_gap(
    signal: &PeriodicBandpassSignal,
    lambda: f64,
    t_s: f64,
    k: usize,
) -> Result<f64> {
    let omega_s = std::f64::consts::TAU / t_s;
    let base = alias_to_baseband(signal.period, &signal.coeffs, omega_s)?;
    let base = lowpass_extract(signal.period, &base, omega_s);
    let baseband = signal_from_coeffs(signal.period, base, signal.band)?;
    let gamma_bp = signal.sample(t_s, k)?;
    let gamma = baseband.sample(t_s, k)?;
    Ok(gamma_bp
        .iter()
        .zip(&gamma)
        .map(|(&a, &b)| (fold_ideal(a, lambda) - fold_ideal(b, lambda)).abs())
        .fold(0.0, f64::max))
}

/// Probe-based feasibility bracket: run the time-domain recovery on a seeded
/// test signal at every integral sample count inside the bandpass-sampling
/// interval and report the span of periods that actually recover.
pub fn empirical_plan(
    band: &BandSpec,
    period: f64,
    wedge: u32,
    lambda: f64,
    probe_seed: u64,
) -> Result<SamplingPlan> {
    let lemma = planner::lemma1_range(band, wedge);
    if !lemma.feasible {
        return Ok(lemma);
    }
    let t_min = if lemma.t_min > 0.0 { lemma.t_min } else { lemma.t_max / 64.0 };
    let k_low = (period / lemma.t_max).ceil() as usize;
    let k_high = (period / t_min).floor() as usize;
    if k_high < k_low || k_high - k_low > 4096 {
        return Err(Error::Precondition(format!(
            "probe range K ∈ [{k_low}, {k_high}] is unusable"
        )));
    }
    let signal = synth_random_bandpass(band, period, probe_seed)?;
    let beta = signal.sup_norm(64);
    let mut feasible: Vec<f64> = Vec::new();
    for k in k_low..=k_high {
        let t_s = period / k as f64;
        if !lemma.contains(t_s) {
            continue;
        }
        let capture = fold_signal_ideal(&signal, lambda, t_s, k)?;
        let cfg = UsAlgConfig { lambda, beta, order: None, band: *band, sample_period: t_s };
        if let Ok((rep, _)) = recover_bandpass_time(&capture, &cfg, wedge) {
            if rep.success && rep.mse.map(|m| m < 1e-9).unwrap_or(false) {
                feasible.push(t_s);
            }
        }
    }
    if feasible.is_empty() {
        let mut plan = SamplingPlan {
            regime: PlanRegime::Empirical,
            ..planner::lemma1_range(band, wedge)
        };
        plan.feasible = false;
        plan.reason = Some("no probed sampling period recovered".into());
        return Ok(plan);
    }
    let t_lo = feasible.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hi = feasible.iter().copied().fold(0.0f64, f64::max);
    Ok(SamplingPlan {
        t_min: t_lo,
        t_max: t_hi,
        wedge,
        parity: planner::Parity::of(wedge),
        regime: PlanRegime::Empirical,
        baseband_bandwidth: planner::relocated_bandwidth(
            band,
            wedge,
            std::f64::consts::TAU / t_hi,
        ),
        feasible: true,
        reason: None,
    })
}

// ---------------------------------------------------------------------------
// capture files
// ---------------------------------------------------------------------------

/// Write a capture as CSV (`k,t,y[,gamma]`) with a JSON side-car
/// `<path>.json` holding the architecture parameters.
pub fn write_capture(path: &Path, capture: &FoldedCapture) -> Result<()> {
    let mut out = String::new();
    let with_truth = capture.ground_truth.is_some();
    out.push_str(if with_truth { "k,t,y,gamma\n" } else { "k,t,y\n" });
    for (k, &y) in capture.samples.iter().enumerate() {
        let t = k as f64 * capture.sample_period;
        match &capture.ground_truth {
            Some(g) => out.push_str(&format!("{k},{t},{y},{}\n", g[k])),
            None => out.push_str(&format!("{k},{t},{y}\n")),
        }
    }
    std::fs::write(path, out)?;
    let sidecar = serde_json::to_string_pretty(&capture.architecture)
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(sidecar_path(path), sidecar)?;
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    std::path::PathBuf::from(p)
}

/// Read a capture CSV. Row indices must run 0,1,2,…; the time column must be
/// uniformly spaced to 1e-6 relative, and T_S is inferred from it. The
/// side-car architecture file is honored when present; otherwise the capture
/// defaults to an ideal architecture with λ = 1 (override at recovery time).
pub fn ingest_capture(path: &Path) -> Result<FoldedCapture> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty capture file".into()))?;
    let cols: Vec<&str> = header.trim().split(',').map(|c| c.trim()).collect();
    let with_truth = match cols.as_slice() {
        ["k", "t", "y"] => false,
        ["k", "t", "y", "gamma"] => true,
        _ => return Err(Error::Format(format!("unexpected header `{header}`"))),
    };
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut truth = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|f| f.trim()).collect();
        if fields.len() != cols.len() {
            return Err(Error::Format(format!("row {row}: expected {} fields", cols.len())));
        }
        let k: usize =
            fields[0].parse().map_err(|_| Error::Format(format!("row {row}: bad index")))?;
        if k != row {
            return Err(Error::Format(format!("row {row}: indices must run 0,1,2,… (got {k})")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Format(format!("row {row}: bad number `{s}`")))
        };
        times.push(parse(fields[1])?);
        samples.push(parse(fields[2])?);
        if with_truth {
            truth.push(parse(fields[3])?);
        }
    }
    if samples.len() < 2 {
        return Err(Error::Format("capture needs at least two rows".into()));
    }
    let t_s = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if t_s <= 0.0 {
        return Err(Error::Format("time column must increase".into()));
    }
    for (i, w) in times.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if ((gap - t_s) / t_s).abs() > 1e-6 {
            return Err(Error::Format(format!("non-uniform spacing at row {}", i + 1)));
        }
    }
    let architecture = match std::fs::read_to_string(sidecar_path(path)) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?,
        Err(_) => Architecture::Ideal { lambda: 1.0 },
    };
    Ok(FoldedCapture {
        samples,
        sample_period: t_s,
        architecture,
        ground_truth: if with_truth { Some(truth) } else { None },
    })
}

// ---------------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------------

/// Named experiment presets.
pub const PRESET_NAMES: &[&str] =
    &["time-sweep", "unfold-demo", "fourier-sweep", "am-demod", "am-nonideal", "am-hysteresis"];

/// Build one of the shipped presets. Hardware-replica presets snap the
/// nominal tone frequencies onto the harmonic grid of their period, which is
/// why their rates sit in empirical mode.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use std::f64::consts::PI;
    let tau_grid = |period: f64| std::f64::consts::TAU / period;
    match name {
        // random bandpass sweep, time-domain recovery at the wedge-5
        // relocation rate
        "time-sweep" => Ok(ExperimentConfig {
            signal: SignalSpec::RandomBandpass {
                omega_low: 50.0 * PI,
                omega_high: 51.0 * PI,
                period: 2.0,
            },
            architecture: ArchSpec::Ideal { lambda: LambdaSpec::Uniform { low: 0.05, high: 0.1 } },
            sample_period: 0.080,
            wedge: 5,
            method: MethodSpec::Time { order: None },
            seed: 2255,
            replications: 100,
            empirical: true,
            band_override: None,
        }),
        // single instance with a forced difference order of three
        "unfold-demo" => Ok(ExperimentConfig {
            signal: SignalSpec::RandomBandpass {
                omega_low: 50.0 * PI,
                omega_high: 51.0 * PI,
                period: 2.0,
            },
            architecture: ArchSpec::Ideal { lambda: LambdaSpec::Fixed { value: 0.07 } },
            sample_period: 0.080,
            wedge: 5,
            method: MethodSpec::Time { order: Some(3) },
            seed: 7,
            replications: 1,
            empirical: true,
            band_override: None,
        }),
        // random bandpass sweep, Fourier-domain recovery at the wedge-2
        // relocation rate, fold count capped by amplitude scaling
        "fourier-sweep" => Ok(ExperimentConfig {
            signal: SignalSpec::RandomBandpass {
                omega_low: 199.0 * PI,
                omega_high: 200.0 * PI,
                period: 2.0,
            },
            architecture: ArchSpec::Ideal { lambda: LambdaSpec::Uniform { low: 0.02, high: 0.1 } },
            sample_period: 0.010,
            wedge: 2,
            method: MethodSpec::Fourier { set: SetChoice::Auto, snap: false, fold_cap: Some(40) },
            seed: 4477,
            replications: 100,
            empirical: false,
            band_override: None,
        }),
        // AM tone sampled at the carrier rate: folding commutes with the
        // relocation, demodulating by sampling alone
        "am-demod" => {
            let period = 0.2;
            let p = AmParams {
                amp: -2.502,
                omega_msg: 70.0 * PI,
                phase_msg: 1.147,
                omega_carrier: 800.0 * PI,
                phase_carrier: -0.17,
            };
            let sig = synth_am(&p, period)?;
            let lambda = sig.sup_norm(64) / 2.49;
            Ok(ExperimentConfig {
                signal: SignalSpec::Am {
                    amp: p.amp,
                    omega_msg: p.omega_msg,
                    phase_msg: p.phase_msg,
                    omega_carrier: p.omega_carrier,
                    phase_carrier: p.phase_carrier,
                    period,
                },
                architecture: ArchSpec::Ideal { lambda: LambdaSpec::Fixed { value: lambda } },
                sample_period: 2.5e-3,
                wedge: 2,
                method: MethodSpec::Time { order: None },
                seed: 2,
                replications: 1,
                empirical: true,
                band_override: None,
            })
        }
        // AM replica recovered through the Fourier path with the
        // conservative grid-snapped planner band
        "am-nonideal" => {
            let period = 0.299;
            let grid = tau_grid(period);
            Ok(ExperimentConfig {
                signal: SignalSpec::Am {
                    amp: 3.72,
                    omega_msg: 2.0 * grid,
                    phase_msg: 2.644,
                    omega_carrier: 30.0 * grid,
                    phase_carrier: -0.0093,
                    period,
                },
                architecture: ArchSpec::Ideal { lambda: LambdaSpec::Fixed { value: 2.01 } },
                sample_period: period / 30.0,
                wedge: 2,
                method: MethodSpec::Fourier { set: SetChoice::Outer, snap: false, fold_cap: None },
                seed: 3,
                replications: 1,
                empirical: true,
                band_override: Some([27.0 * grid, 32.0 * grid]),
            })
        }
        // AM replica through the hysteresis encoder, time-domain recovery at
        // the effective threshold
        "am-hysteresis" => {
            let period = 0.06;
            let grid = tau_grid(period);
            Ok(ExperimentConfig {
                signal: SignalSpec::Am {
                    amp: 2.47,
                    omega_msg: 2.0 * grid,
                    phase_msg: -0.0157,
                    omega_carrier: 24.0 * grid,
                    phase_carrier: -0.0157,
                    period,
                },
                architecture: ArchSpec::Generalized { lambda: 1.93, hysteresis: 0.88 },
                sample_period: 2.5e-3,
                wedge: 2,
                method: MethodSpec::Time { order: None },
                seed: 4,
                replications: 1,
                empirical: true,
                band_override: None,
            })
        }
        other => Err(Error::Precondition(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Re-run replication zero of a config and emit per-sample traces
/// `t,g,z,y,gtilde` (ground truth, folded trace, capture sample, recovered
/// sample after offset fix) as CSV.
pub fn emit_traces(cfg: &ExperimentConfig) -> Result<String> {
    let mut rng = rep_rng(cfg.seed, 0);
    let band = cfg.band()?;
    let lambda = match &cfg.architecture {
        ArchSpec::Ideal { lambda } | ArchSpec::NonIdealJitter { lambda, .. } => lambda.draw(&mut rng),
        ArchSpec::Generalized { lambda, .. } => *lambda,
    };
    let period = cfg
        .signal
        .period()
        .ok_or_else(|| Error::Precondition("traces need a synthetic signal".into()))?;
    let k = integral_sample_count(period, cfg.sample_period)?;
    let signal_seed: u64 = rng.gen();
    let signal = match &cfg.signal {
        SignalSpec::RandomBandpass { omega_low, omega_high, period } => {
            synth_random_bandpass(&BandSpec::new(*omega_low, *omega_high)?, *period, signal_seed)?
        }
        SignalSpec::Am { amp, omega_msg, phase_msg, omega_carrier, phase_carrier, period } => {
            synth_am(
                &AmParams {
                    amp: *amp,
                    omega_msg: *omega_msg,
                    phase_msg: *phase_msg,
                    omega_carrier: *omega_carrier,
                    phase_carrier: *phase_carrier,
                },
                *period,
            )?
        }
        SignalSpec::CaptureFile { .. } => unreachable!(),
    };
    let capture = build_capture(cfg, &signal, lambda, cfg.sample_period, k, &mut rng)?;
    let beta = signal.sup_norm(64);
    let report = match &cfg.method {
        MethodSpec::Time { order } => match &cfg.architecture {
            ArchSpec::Generalized { lambda, hysteresis } => {
                let h = HysteresisParams::new(*lambda, *hysteresis, 0.0)?;
                recover_generalized(&capture, &h, beta, &band, cfg.wedge)?
            }
            _ => {
                let us = UsAlgConfig {
                    lambda,
                    beta,
                    order: *order,
                    band,
                    sample_period: cfg.sample_period,
                };
                recover_bandpass_time(&capture, &us, cfg.wedge)?.0
            }
        },
        MethodSpec::Fourier { set, snap, .. } => {
            let spikes = circular_fold_count(&capture)?;
            recover_bandpass_fourier(&capture, period, &band, spikes, cfg.wedge, *set, *snap)?.0
        }
    };
    let truth = capture.ground_truth.as_ref().expect("simulated captures carry ground truth");
    let grid_lambda = capture.architecture.offset_grid();
    let fixed = fix_offset(&report.recovered, truth, grid_lambda);
    let mut out = String::from("t,g,z,y,gtilde\n");
    for i in 0..k {
        let t = i as f64 * cfg.sample_period;
        out.push_str(&format!(
            "{t},{},{},{},{}\n",
            truth[i], capture.samples[i], capture.samples[i], fixed[i]
        ));
    }
    Ok(out)
}

/// Baseband periodization of a signal: convenience wrapper combining the
/// aliasing map and lowpass restriction.
pub fn baseband_series(
    signal: &PeriodicBandpassSignal,
    omega_s: f64,
) -> Result<BTreeMap<i64, num_complex::Complex64>> {
    let base = alias_to_baseband(signal.period, &signal.coeffs, omega_s)?;
    Ok(lowpass_extract(signal.period, &base, omega_s))
}
