//! The three folding architectures: ideal centered modulo, generalized
//! (hysteresis + transient) modulo, and the non-ideal piecewise-constant
//! residue model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centered modulo: maps x into [−λ, λ) by subtracting the right member of
/// 2λZ.
pub fn fold_ideal(x: f64, lambda: f64) -> f64 {
    let t = x / (2.0 * lambda) + 0.5;
    2.0 * lambda * (t - t.floor() - 0.5)
}

/// Generalized modulo parameters H = [λ, h, α].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisParams {
    pub lambda: f64,
    pub hysteresis: f64,
    pub transient: f64,
}

impl HysteresisParams {
    pub fn new(lambda: f64, hysteresis: f64, transient: f64) -> Result<Self> {
        if lambda <= 0.0 || hysteresis < 0.0 || hysteresis >= 2.0 * lambda || transient < 0.0 {
            return Err(Error::Precondition(format!(
                "need λ > 0, 0 ≤ h < 2λ, α ≥ 0; got λ={lambda}, h={hysteresis}, α={transient}"
            )));
        }
        Ok(Self { lambda, hysteresis, transient })
    }

    /// Effective threshold λ_h = λ − h/2; residual steps have height 2λ_h.
    pub fn lambda_h(&self) -> f64 {
        self.lambda - self.hysteresis / 2.0
    }
}

/// One reset event of the generalized modulo: time and fold direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldEvent {
    pub time: f64,
    pub sign: f64,
}

/// Event sequence produced by the generalized modulo simulator. The trace is
/// z(t) = g(t) − Σ_p s_p ε₀(t − τ_p) with ε₀ a ramp of height 2λ_h rising
/// over the transient α (a step when α = 0).
#[derive(Debug, Clone)]
pub struct GeneralizedFold {
    pub params: HysteresisParams,
    pub events: Vec<FoldEvent>,
}

impl GeneralizedFold {
    /// Accumulated residual Σ_p s_p ε₀(t − τ_p).
    pub fn residual_at(&self, t: f64) -> f64 {
        let step = 2.0 * self.params.lambda_h();
        let alpha = self.params.transient;
        let mut acc = 0.0;
        for ev in &self.events {
            let dt = t - ev.time;
            if dt < 0.0 {
                break;
            }
            let ramp = if alpha > 0.0 && dt < alpha { dt / alpha } else { 1.0 };
            acc += ev.sign * step * ramp;
        }
        acc
    }

    /// Folded trace value z(t) for the input g.
    pub fn trace_at<F: Fn(f64) -> f64>(&self, g: F, t: f64) -> f64 {
        g(t) - self.residual_at(t)
    }
}

/// Simulate the generalized modulo over [0, horizon].
///
/// Events are located by sign-change bracketing of the defining conditions
/// M_λ(g(t)+λ) = 0 (first event) and M_λ(g(t) − g(τ_p) + h·s_p) = 0
/// (subsequent events), then refined by bisection to grid/1e3. Two events
/// inside one grid step are reported as a resolution error.
pub fn fold_generalized<F: Fn(f64) -> f64>(
    g: F,
    params: &HysteresisParams,
    horizon: f64,
    grid: f64,
) -> Result<GeneralizedFold> {
    if grid <= 0.0 || horizon <= 0.0 {
        return Err(Error::Precondition("horizon and grid must be positive".into()));
    }
    let lambda = params.lambda;
    let h = params.hysteresis;
    let mut events: Vec<FoldEvent> = Vec::new();
    let mut t_prev = 0.0; // τ_p
    let mut g_prev_fold = g(0.0); // g(τ_p); τ_0 = 0
    let mut s_prev = 0.0;
    let max_events = 100_000;

    loop {
        let cond = |t: f64| -> f64 {
            if events.is_empty() {
                fold_ideal(g(t) + lambda, lambda)
            } else {
                fold_ideal(g(t) - g_prev_fold + h * s_prev, lambda)
            }
        };
        let mut found: Option<f64> = None;
        let mut t_a = t_prev + grid;
        if t_a >= horizon {
            break;
        }
        let mut f_a = cond(t_a);
        loop {
            let t_b = t_a + grid;
            if t_b > horizon + grid * 0.5 {
                break;
            }
            let f_b = cond(t_b);
            // a genuine zero crossing is continuous; the wrap discontinuities
            // of the modulo jump by ≈ 2λ and are excluded by the size guard
            if f_a == 0.0 {
                found = Some(t_a);
                break;
            }
            if f_a * f_b < 0.0 && (f_b - f_a).abs() < lambda {
                found = Some(bisect(&cond, t_a, t_b, grid * 1e-3));
                break;
            }
            t_a = t_b;
            f_a = f_b;
        }
        let tau = match found {
            Some(t) => t,
            None => break,
        };
        if let Some(last) = events.last() {
            if tau - last.time < grid {
                return Err(Error::Resolution { time: tau });
            }
        }
        let g_tau = g(tau);
        let mut sign = (g_tau - g_prev_fold).signum();
        if (g_tau - g_prev_fold).abs() < 1e-12 * lambda {
            // degenerate (h = 0) events: take the direction of motion
            let delta = grid * 1e-4;
            sign = (g(tau + delta) - g(tau - delta)).signum();
        }
        if sign == 0.0 {
            return Err(Error::Resolution { time: tau });
        }
        events.push(FoldEvent { time: tau, sign });
        if events.len() >= max_events {
            return Err(Error::Resolution { time: tau });
        }
        t_prev = tau;
        g_prev_fold = g_tau;
        s_prev = sign;
    }
    Ok(GeneralizedFold { params: *params, events })
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Default event-detection grid: 64 points per cycle of the highest input
/// frequency.
pub fn default_event_grid(omega_high: f64) -> f64 {
    std::f64::consts::TAU / (64.0 * omega_high)
}

/// Piecewise-constant non-ideal residue: `levels[m]` applies on the cell
/// `[breakpoints[m], breakpoints[m+1])`; the implicit leading cell
/// `[0, breakpoints[0])` has level zero. Levels may be arbitrary reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonIdealResidue {
    pub breakpoints: Vec<usize>,
    pub levels: Vec<f64>,
}

impl NonIdealResidue {
    pub fn new(breakpoints: Vec<usize>, levels: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != levels.len() {
            return Err(Error::Partition {
                detail: format!("{} breakpoints vs {} levels", breakpoints.len(), levels.len()),
            });
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Partition { detail: "breakpoints must be strictly increasing".into() });
        }
        Ok(Self { breakpoints, levels })
    }

    /// Residue value at sample index k.
    pub fn level_at(&self, k: usize) -> f64 {
        match self.breakpoints.partition_point(|&b| b <= k) {
            0 => 0.0,
            cell => self.levels[cell - 1],
        }
    }
}

/// Folding architecture attached to a capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Architecture {
    Ideal { lambda: f64 },
    Generalized { lambda: f64, hysteresis: f64, transient: f64 },
    NonIdeal { lambda: f64, residue: NonIdealResidue },
}

impl Architecture {
    /// Threshold that defines the 2λZ (or 2λ_hZ) offset grid of recoveries.
    pub fn offset_grid(&self) -> f64 {
        match self {
            Architecture::Ideal { lambda } => *lambda,
            Architecture::Generalized { lambda, hysteresis, .. } => lambda - hysteresis / 2.0,
            Architecture::NonIdeal { lambda, .. } => *lambda,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Architecture::Ideal { lambda }
            | Architecture::Generalized { lambda, .. }
            | Architecture::NonIdeal { lambda, .. } => *lambda,
        }
    }
}

/// Uniform samples of a folded signal plus the architecture that produced
/// them and, when simulated, the unfolded ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedCapture {
    pub samples: Vec<f64>,
    pub sample_period: f64,
    pub architecture: Architecture,
    pub ground_truth: Option<Vec<f64>>,
}

impl FoldedCapture {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Apply a non-ideal residue to ground-truth samples: y[k] = γ[k] − R[k].
pub fn fold_nonideal(
    gamma: &[f64],
    residue: &NonIdealResidue,
    sample_period: f64,
) -> Result<FoldedCapture> {
    if let Some(&last) = residue.breakpoints.last() {
        if last >= gamma.len() {
            return Err(Error::Partition {
                detail: format!("breakpoint {last} outside sample range 0..{}", gamma.len()),
            });
        }
    }
    let samples: Vec<f64> = gamma.iter().enumerate().map(|(k, &g)| g - residue.level_at(k)).collect();
    let lambda_guess = residue.levels.iter().fold(1.0f64, |a, &l| a.max(l.abs() / 2.0));
    Ok(FoldedCapture {
        samples,
        sample_period,
        architecture: Architecture::NonIdeal { lambda: lambda_guess, residue: residue.clone() },
        ground_truth: Some(gamma.to_vec()),
    })
}

/// Residue samples r[k] = γ[k] − y[k] and the count of level changes
/// (indices k with |r[k+1] − r[k]| above 1e-9·λ).
pub fn residue_and_fold_count(capture: &FoldedCapture) -> Result<(Vec<f64>, usize)> {
    let gamma = capture.ground_truth.as_ref().ok_or(Error::MissingGroundTruth)?;
    if gamma.len() != capture.samples.len() {
        return Err(Error::LengthMismatch { left: gamma.len(), right: capture.samples.len() });
    }
    let r: Vec<f64> = gamma.iter().zip(&capture.samples).map(|(g, y)| g - y).collect();
    let tol = 1e-9 * capture.architecture.lambda();
    let m = r.windows(2).filter(|w| (w[1] - w[0]).abs() > tol).count();
    Ok((r, m))
}

/// Level changes of the residue counted circularly (including the wrap from
/// the last sample back to the first). This is the spike count seen by the
/// Fourier-domain recovery, which works on the circular first difference.
pub fn circular_fold_count(capture: &FoldedCapture) -> Result<usize> {
    let (r, m) = residue_and_fold_count(capture)?;
    let tol = 1e-9 * capture.architecture.lambda();
    let wrap = match (r.first(), r.last()) {
        (Some(a), Some(b)) if (a - b).abs() > tol => 1,
        _ => 0,
    };
    Ok(m + wrap)
}
