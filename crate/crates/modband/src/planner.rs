//! Admissible sampling periods for every acquisition regime.
//!
//! Interval endpoints are computed in closed form; a plan is non-empty when
//! `t_min ≤ t_max` (with 1e-15 slack). Infeasible plans carry the inequality
//! that failed instead of being silently clipped.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI, TAU};

use crate::error::{Error, Result};
use crate::signal::BandSpec;

const EMPTY_SLACK: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(wedge: u32) -> Parity {
        if wedge % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanRegime {
    NyquistLemma,
    UnlimitedTime,
    FourierInner,
    FourierOuter,
    AmTime,
    AmFourier,
    UsClassic,
    FpClassic,
    Empirical,
}

/// A sampling-period interval with its wedge index and derived baseband
/// bandwidth Ω_U^g (evaluated at the interval's baseband-relocation end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub t_min: f64,
    pub t_max: f64,
    pub wedge: u32,
    pub parity: Parity,
    pub regime: PlanRegime,
    pub baseband_bandwidth: f64,
    pub feasible: bool,
    pub reason: Option<String>,
}

impl SamplingPlan {
    fn interval(t_min: f64, t_max: f64, wedge: u32, regime: PlanRegime, omega_base: f64) -> Self {
        let feasible = t_min <= t_max + EMPTY_SLACK;
        SamplingPlan {
            t_min,
            t_max,
            wedge,
            parity: Parity::of(wedge),
            regime,
            baseband_bandwidth: omega_base,
            feasible,
            reason: if feasible { None } else { Some(format!("empty interval: {t_min} > {t_max}")) },
        }
    }

    fn infeasible(wedge: u32, regime: PlanRegime, reason: String) -> Self {
        SamplingPlan {
            t_min: f64::NAN,
            t_max: f64::NAN,
            wedge,
            parity: Parity::of(wedge),
            regime,
            baseband_bandwidth: f64::NAN,
            feasible: false,
            reason: Some(reason),
        }
    }

    pub fn contains(&self, t_s: f64) -> bool {
        self.feasible && t_s >= self.t_min - EMPTY_SLACK && t_s <= self.t_max + EMPTY_SLACK
    }

    /// Midpoint of a non-empty interval.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_min + self.t_max)
    }
}

/// Bandwidth Ω_U^g of the relocated baseband signal at sampling rate Ω_S.
pub fn relocated_bandwidth(band: &BandSpec, wedge: u32, omega_s: f64) -> f64 {
    match Parity::of(wedge) {
        Parity::Odd => band.omega_high - (wedge - 1) as f64 / 2.0 * omega_s,
        Parity::Even => wedge as f64 / 2.0 * omega_s - band.omega_low,
    }
}

/// Classic unlimited-sampling rate for an Ω-bandlimited signal:
/// `T_US = 1/(2Ωe)`, and the difference order `n* = ⌈(log λ − log β)/log(T_S Ω e)⌉`
/// at the supplied sampling period (defaults to `T_US`).
pub fn us_classic(omega: f64, lambda: f64, beta: f64, t_s: Option<f64>) -> Result<(f64, i64)> {
    if beta < lambda {
        return Err(Error::Precondition(format!("beta = {beta} must be at least lambda = {lambda}")));
    }
    let t_us = 1.0 / (2.0 * omega * E);
    let t = t_s.unwrap_or(t_us);
    if t > t_us * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("t_s = {t} exceeds T_US = {t_us}")));
    }
    let x = t * omega * E;
    let n = ((lambda.ln() - beta.ln()) / x.ln()).ceil();
    Ok((t_us, n.max(0.0) as i64))
}

/// Fourier-domain rate for a τ-periodic Ω-bandlimited signal folded at most
/// M times: K ≥ 2(⌈Ωτ/2π⌉ + M + 1) samples per period.
pub fn fp_classic(period: f64, omega: f64, folds: usize) -> SamplingPlan {
    let k = 2 * ((omega * period / TAU).ceil() as usize + folds + 1);
    SamplingPlan::interval(0.0, period / k as f64, 1, PlanRegime::FpClassic, omega)
}

/// Bandpass sampling theorem: `π(P−1)/Ω_L ≤ T_S ≤ πP/Ω_U`.
pub fn lemma1_range(band: &BandSpec, wedge: u32) -> SamplingPlan {
    let p = wedge as f64;
    let t_min = if wedge == 1 { 0.0 } else { PI * (p - 1.0) / band.omega_low };
    let t_max = PI * p / band.omega_high;
    let omega_base = plan_omega_base(band, wedge, t_min, t_max);
    SamplingPlan::interval(t_min, t_max, wedge, PlanRegime::NyquistLemma, omega_base)
}

/// Unlimited bandpass sampling theorem (time-domain recovery):
/// odd P: `[π(P−1)/Ω_L, (2πe(P−1)+1)/(2eΩ_U)]`,
/// even P: `[(2πeP−1)/(2eΩ_L), πP/Ω_U]`.
pub fn theorem1_range(band: &BandSpec, wedge: u32) -> SamplingPlan {
    let p = wedge as f64;
    let (t_min, t_max) = match Parity::of(wedge) {
        Parity::Odd => {
            let t_min = if wedge == 1 { 0.0 } else { PI * (p - 1.0) / band.omega_low };
            (t_min, (TAU * E * (p - 1.0) + 1.0) / (2.0 * E * band.omega_high))
        }
        Parity::Even => ((TAU * E * p - 1.0) / (2.0 * E * band.omega_low), PI * p / band.omega_high),
    };
    let omega_base = plan_omega_base(band, wedge, t_min, t_max);
    SamplingPlan::interval(t_min, t_max, wedge, PlanRegime::UnlimitedTime, omega_base)
}

fn plan_omega_base(band: &BandSpec, wedge: u32, t_min: f64, t_max: f64) -> f64 {
    // Ω_U^g at the baseband-relocation end of the interval: t_min for odd
    // wedges above one, t_max otherwise.
    let t = match Parity::of(wedge) {
        Parity::Odd if wedge > 1 => t_min,
        _ => t_max,
    };
    if t <= 0.0 {
        return band.omega_high;
    }
    relocated_bandwidth(band, wedge, TAU / t)
}

/// Largest admissible wedge per parity and overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WedgeBounds {
    pub odd: i64,
    pub even: i64,
    pub overall: i64,
}

pub fn p_max(band: &BandSpec) -> WedgeBounds {
    let width = band.width();
    if width <= 0.0 {
        return WedgeBounds { odd: i64::MAX, even: i64::MAX, overall: i64::MAX };
    }
    let odd = (band.omega_low / (TAU * E * width) + 1.0).floor() as i64;
    let even = (band.omega_high / (TAU * E * width)).floor() as i64;
    WedgeBounds { odd, even, overall: even }
}

/// Sampling rates that alias the passband to minimal bandwidth Ω_UL:
/// odd P: `Ω_S = 2Ω_L/(P−1)`, even P: `Ω_S = 2Ω_U/P`. Returns
/// `(Ω_S, Ω_U^g at that rate)`.
pub fn baseband_relocation(band: &BandSpec, wedge: u32) -> Result<(f64, f64)> {
    let omega_s = match Parity::of(wedge) {
        Parity::Odd => {
            if wedge == 1 {
                return Err(Error::InfeasiblePlan {
                    reason: "no relocation for wedge 1; use lowpass extraction".into(),
                });
            }
            2.0 * band.omega_low / (wedge - 1) as f64
        }
        Parity::Even => 2.0 * band.omega_high / wedge as f64,
    };
    Ok((omega_s, relocated_bandwidth(band, wedge, omega_s)))
}

/// AM rate for the time-domain path: `Ω_S = (Ω_U+Ω_L)/(2P_AM)`, valid when
/// `(Ω_U+Ω_L)/(Ω_U−Ω_L) ≥ 4πe·P_AM`.
pub fn am_time_rate(band: &BandSpec, p_am: u32) -> SamplingPlan {
    let omega_s = (band.omega_high + band.omega_low) / (2.0 * p_am as f64);
    let t = TAU / omega_s;
    let width = band.width();
    let ratio = if width > 0.0 { (band.omega_high + band.omega_low) / width } else { f64::INFINITY };
    let needed = 2.0 * TAU * E * p_am as f64;
    let mut plan =
        SamplingPlan::interval(t, t, 2 * p_am, PlanRegime::AmTime, width / 2.0);
    if ratio < needed {
        plan.feasible = false;
        plan.reason = Some(format!(
            "(omega_high+omega_low)/(omega_high-omega_low) = {ratio:.4} < 4πe·P_AM = {needed:.4}"
        ));
    }
    plan
}

/// AM rate for the Fourier-domain path: same Ω_S, valid when
/// `Ω_UL ≤ Ω_S ≤ 4π(Q_L − M − 1)/(τ(2P_AM − 1))` with `Q_L = ⌊τΩ_L/2π⌋`.
pub fn am_fourier_rate(period: f64, band: &BandSpec, folds: usize, p_am: u32) -> SamplingPlan {
    let omega_s = (band.omega_high + band.omega_low) / (2.0 * p_am as f64);
    let t = TAU / omega_s;
    let q_low = (period * band.omega_low / TAU + 1e-9).floor();
    let upper = 2.0 * TAU * (q_low - folds as f64 - 1.0) / (period * (2.0 * p_am as f64 - 1.0));
    let mut plan =
        SamplingPlan::interval(t, t, 2 * p_am, PlanRegime::AmFourier, band.width() / 2.0);
    if band.width() > omega_s * (1.0 + EMPTY_SLACK) {
        plan.feasible = false;
        plan.reason = Some(format!("omega_s = {omega_s:.4} below passband width {:.4}", band.width()));
    } else if omega_s > upper * (1.0 + 1e-12) {
        plan.feasible = false;
        plan.reason =
            Some(format!("omega_s = {omega_s:.4} above out-of-band budget 4π(Q_L−M−1)/(τ(2P_AM−1)) = {upper:.4}"));
    }
    plan
}

/// Fourier-domain bandpass rates, one plan per partition set.
/// Guards: even-P outer and odd-P (P>1) inner need `Q_L > M+1`; P = 1 inner
/// needs `Q_L ≥ M+1` regardless of the period.
pub fn theorem3_ranges(
    period: f64,
    q_low: i64,
    q_high: i64,
    folds: usize,
    wedge: u32,
) -> (SamplingPlan, SamplingPlan) {
    let p = wedge as f64;
    let m = folds as f64;
    let ql = q_low as f64;
    let qu = q_high as f64;
    let guard = ql - m - 1.0; // Q_L − M − 1
    let omega_base = TAU * (qu - ql) / period;

    let outer = match Parity::of(wedge) {
        Parity::Odd => {
            let t_min = if wedge == 1 { 0.0 } else { (p - 1.0) * period / (2.0 * ql) };
            let t_max = p * period / (2.0 * (qu + m + 1.0));
            SamplingPlan::interval(t_min, t_max, wedge, PlanRegime::FourierOuter, omega_base)
        }
        Parity::Even => {
            if guard <= 0.0 {
                SamplingPlan::infeasible(
                    wedge,
                    PlanRegime::FourierOuter,
                    format!("outer set needs Q_L > M+1 for even wedges (Q_L = {q_low}, M = {folds})"),
                )
            } else {
                let t_min = (p - 1.0) * period / (2.0 * guard);
                let t_max = p * period / (2.0 * qu);
                SamplingPlan::interval(t_min, t_max, wedge, PlanRegime::FourierOuter, omega_base)
            }
        }
    };

    let inner = match Parity::of(wedge) {
        Parity::Odd => {
            if wedge == 1 {
                if ql < m + 1.0 {
                    SamplingPlan::infeasible(
                        wedge,
                        PlanRegime::FourierInner,
                        format!("inner set needs Q_L ≥ M+1 at wedge 1 (Q_L = {q_low}, M = {folds})"),
                    )
                } else {
                    let t_max = p * period / (2.0 * qu);
                    SamplingPlan::interval(0.0, t_max, wedge, PlanRegime::FourierInner, omega_base)
                }
            } else if guard <= 0.0 {
                SamplingPlan::infeasible(
                    wedge,
                    PlanRegime::FourierInner,
                    format!("inner set needs Q_L > M+1 for odd wedges above 1 (Q_L = {q_low}, M = {folds})"),
                )
            } else {
                let t_min = (p - 1.0) * period / (2.0 * guard);
                let t_max = p * period / (2.0 * qu);
                SamplingPlan::interval(t_min, t_max, wedge, PlanRegime::FourierInner, omega_base)
            }
        }
        Parity::Even => {
            let t_min = (p - 1.0) * period / (2.0 * ql);
            let t_max = p * period / (2.0 * (qu + m + 1.0));
            SamplingPlan::interval(t_min, t_max, wedge, PlanRegime::FourierInner, omega_base)
        }
    };
    (outer, inner)
}

/// Discrete passband indices at K samples per period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteBandIndices {
    pub k: usize,
    pub q_low: i64,
    pub q_high: i64,
    pub q_high_base: i64,
    pub q_low_base: i64,
}

/// `Q_L = KΩ_L/Ω_S`, `Q_U = KΩ_U/Ω_S` with `Ω_S = 2πK/τ`, and the relocated
/// indices by the parity branch of the wedge. `q_low_base` may come out
/// negative when the relocated band straddles DC (AM overlap); callers decide
/// whether that is an error.
pub fn discrete_indices(period: f64, k: usize, band: &BandSpec, wedge: u32) -> Result<DiscreteBandIndices> {
    let grid = TAU / period;
    let to_index = |omega: f64, what: &str| -> Result<i64> {
        let q = omega / grid;
        let n = q.round();
        if (q - n).abs() > 1e-6 * q.abs().max(1.0) {
            return Err(Error::GridMismatch { what: what.to_string(), value: omega, grid });
        }
        Ok(n as i64)
    };
    let q_low = to_index(band.omega_low, "q_low")?;
    let q_high = to_index(band.omega_high, "q_high")?;
    let q_high_base = match Parity::of(wedge) {
        Parity::Odd => q_high - (wedge as i64 - 1) / 2 * k as i64,
        Parity::Even => wedge as i64 / 2 * k as i64 - q_low,
    };
    let q_low_base = q_high_base - (q_high - q_low);
    Ok(DiscreteBandIndices { k, q_low, q_high, q_high_base, q_low_base })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(lo: f64, hi: f64) -> BandSpec {
        BandSpec::new(lo, hi).unwrap()
    }

    #[test]
    fn us_classic_point_values() {
        let (t_us, _) = us_classic(51.0 * PI, 0.05, 0.1, None).unwrap();
        assert!((t_us - 1.0 / (102.0 * PI * E)).abs() < 1e-18);
        // log ratio zero when beta equals lambda
        let (_, n) = us_classic(51.0 * PI, 0.08, 0.08, None).unwrap();
        assert_eq!(n, 0);
        let (_, n) = us_classic(PI, 0.07, 1.12, Some(0.08)).unwrap();
        assert_eq!(n, 8);
        assert!(us_classic(PI, 0.5, 0.4, None).is_err());
    }

    #[test]
    fn fp_classic_bounds() {
        let plan = fp_classic(1.0, TAU, 0);
        assert!((plan.t_max - 0.25).abs() < 1e-15);
        // each extra fold adds two samples per period
        let p0 = fp_classic(2.0, 200.0 * PI, 10);
        let p1 = fp_classic(2.0, 200.0 * PI, 11);
        assert!((2.0 / p0.t_max - 2.0 / p1.t_max + 2.0).abs() < 1e-9);
        let p = fp_classic(2.0, 200.0 * PI, 259);
        assert!((2.0 / p.t_max - 920.0).abs() < 1e-9);
    }

    #[test]
    fn lemma1_intervals() {
        let b = band(50.0 * PI, 51.0 * PI);
        let plan = lemma1_range(&b, 5);
        assert!((plan.t_min - 0.08).abs() < 1e-12);
        assert!((plan.t_max - 5.0 / 51.0).abs() < 1e-12);
        assert!(plan.feasible);
        let p1 = lemma1_range(&b, 1);
        assert_eq!(p1.t_min, 0.0);
        assert!((p1.t_max - 1.0 / 51.0).abs() < 1e-12);
    }

    #[test]
    fn theorem1_intervals() {
        let b = band(50.0 * PI, 51.0 * PI);
        let p1 = theorem1_range(&b, 1);
        assert!((p1.t_max - 1.0 / (102.0 * PI * E)).abs() < 1e-15);
        assert!(p1.feasible);

        let p2 = theorem1_range(&b, 2);
        assert!((p2.t_min - (2.0 * TAU * E - 1.0) / (2.0 * E * 50.0 * PI)).abs() < 1e-12);
        assert!((p2.t_max - 2.0 / 51.0).abs() < 1e-12);
        assert!(p2.feasible);

        // the wedge-5 interval closes: lower edge 0.0800 exceeds the upper edge
        let p5 = theorem1_range(&b, 5);
        assert!(!p5.feasible);
        assert!((p5.t_min - 0.08).abs() < 1e-12);
        assert!(p5.t_max < 0.0797 && p5.t_max > 0.0794);
    }

    #[test]
    fn theorem1_inside_lemma1() {
        for (lo, hi) in [(50.0 * PI, 51.0 * PI), (199.0 * PI, 200.0 * PI), (10.0, 14.0)] {
            let b = band(lo, hi);
            for wedge in 1..=8u32 {
                let t1 = theorem1_range(&b, wedge);
                let l1 = lemma1_range(&b, wedge);
                if t1.feasible {
                    assert!(t1.t_min >= l1.t_min - 1e-12);
                    assert!(t1.t_max <= l1.t_max + 1e-12);
                }
            }
        }
    }

    #[test]
    fn wedge_bounds() {
        let b = band(50.0 * PI, 51.0 * PI);
        let w = p_max(&b);
        assert_eq!((w.odd, w.even, w.overall), (3, 2, 2));
        let lp = band(1.0, 2.0); // width equals omega_low
        assert_eq!(p_max(&lp).overall, 0);
        let hw = band(584.33, 672.30);
        assert_eq!(p_max(&hw).even, 0);
    }

    #[test]
    fn relocation_rates() {
        let b = band(50.0 * PI, 51.0 * PI);
        let (omega_s, omega_base) = baseband_relocation(&b, 5).unwrap();
        assert!((omega_s - 25.0 * PI).abs() < 1e-12);
        assert!((TAU / omega_s - 0.08).abs() < 1e-15);
        assert!((omega_base - PI).abs() < 1e-12);

        let b2 = band(199.0 * PI, 200.0 * PI);
        let (omega_s, _) = baseband_relocation(&b2, 2).unwrap();
        assert!((omega_s - 200.0 * PI).abs() < 1e-9);
        assert!((TAU / omega_s - 0.010).abs() < 1e-15);

        assert!(baseband_relocation(&b, 1).is_err());
        // relocation point lies inside the lemma interval
        for wedge in 2..=5u32 {
            let (omega_s, _) = baseband_relocation(&b, wedge).unwrap();
            assert!(lemma1_range(&b, wedge).contains(TAU / omega_s));
        }
    }

    #[test]
    fn am_time_rate_validity() {
        let b = band(584.33, 672.30);
        let plan = am_time_rate(&b, 1);
        assert!((TAU / plan.t_min - 628.315).abs() < 1e-2);
        assert!(!plan.feasible, "ratio 14.29 is below 4πe");
        // sinusoid limit: zero width is always valid
        let tone = band(100.0, 100.0);
        assert!(am_time_rate(&tone, 1).feasible);
        // doubling P_AM halves the rate
        let p2 = am_time_rate(&b, 2);
        assert!((p2.t_min - 2.0 * plan.t_min).abs() < 1e-12);
    }

    #[test]
    fn am_fourier_rate_validity() {
        let b = band(584.33, 672.30);
        let plan = am_fourier_rate(0.299, &b, 4, 1);
        assert!(plan.feasible, "{:?}", plan.reason);
        // the out-of-band budget evaluates near 294π
        let upper = 2.0 * TAU * (27.0 - 5.0) / 0.299;
        assert!((upper - 924.6).abs() < 0.1);
        // exhausting the budget kills the plan
        let dead = am_fourier_rate(0.299, &b, 26, 1);
        assert!(!dead.feasible);
    }

    #[test]
    fn theorem3_intervals() {
        let (outer, _) = theorem3_ranges(2.0, 199, 200, 40, 2);
        assert!((outer.t_min - 2.0 / 316.0).abs() < 1e-12);
        assert!((outer.t_max - 0.010).abs() < 1e-15);
        assert!(outer.feasible);

        // lowpass case reduces to the classic Fourier bound
        let (outer, inner) = theorem3_ranges(1.0, 1, 1, 0, 1);
        let classic = fp_classic(1.0, TAU, 0);
        assert!((outer.t_max - classic.t_max).abs() < 1e-15);
        // wedge-1 inner set needs Q_L ≥ M+1 regardless of the period
        assert!(inner.feasible);
        let (_, inner) = theorem3_ranges(1.0, 1, 1, 1, 1);
        assert!(!inner.feasible);
    }

    #[test]
    fn discrete_index_examples() {
        let b = band(199.0 * PI, 200.0 * PI);
        let idx = discrete_indices(2.0, 200, &b, 2).unwrap();
        assert_eq!((idx.q_low, idx.q_high, idx.q_high_base, idx.q_low_base), (199, 200, 1, 0));

        // wedge 1 leaves the indices unrelocated
        let idx1 = discrete_indices(2.0, 500, &b, 1).unwrap();
        assert_eq!((idx1.q_high_base, idx1.q_low_base), (200, 199));

        // grid-snapped hardware band at 30 samples per period
        let tau = 0.299;
        let hw = BandSpec::new(584.33, 672.30).unwrap().snap_to_grid(tau).unwrap();
        let idx = discrete_indices(tau, 30, &hw, 2).unwrap();
        assert_eq!((idx.q_low, idx.q_high), (27, 32));
        assert_eq!(idx.q_high_base, 3);

        let off = band(50.3 * PI, 51.0 * PI);
        assert!(discrete_indices(2.0, 25, &off, 5).is_err());
    }

    #[test]
    fn theorem1_midpoint_meets_usf_margin() {
        for (lo, hi) in [(50.0 * PI, 51.0 * PI), (30.0, 40.0), (199.0 * PI, 200.0 * PI)] {
            let b = band(lo, hi);
            for wedge in 1..=6u32 {
                let plan = theorem1_range(&b, wedge);
                if !plan.feasible {
                    continue;
                }
                let t = plan.midpoint();
                let omega_base = relocated_bandwidth(&b, wedge, TAU / t);
                assert!(t * omega_base * E < 0.5, "wedge {wedge}: {}", t * omega_base * E);
            }
        }
    }
}
