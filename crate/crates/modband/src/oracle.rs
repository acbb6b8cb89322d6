//! Brute-force references for the test suite. Exhaustive by construction and
//! deliberately slow; production paths never call into this module.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::folding::fold_ideal;
use crate::recovery::fourier::SpikeTrain;

/// A brute-force answer together with the size of the search space examined.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub examined: usize,
}

/// Exhaustive sparse fit: try every support of size ≤ `folds`, least-squares
/// the amplitudes over all bins, keep the residual minimizer.
pub fn exhaustive_spike_fit(
    bins: &BTreeMap<usize, Complex64>,
    k: usize,
    folds: usize,
) -> Result<OracleResult<SpikeTrain>> {
    if k > 16 || folds > 3 {
        return Err(Error::Precondition(format!(
            "exhaustive search bounded to K ≤ 16, folds ≤ 3 (got K = {k}, folds = {folds})"
        )));
    }
    let max_mag = bins.values().map(|c| c.norm()).fold(0.0, f64::max);
    if folds == 0 || max_mag < 1e-14 {
        return Ok(OracleResult { value: SpikeTrain::empty(), examined: 1 });
    }
    let mut best: Option<(f64, SpikeTrain)> = None;
    let mut examined = 0usize;
    let mut supports: Vec<Vec<usize>> = vec![Vec::new()];
    for size in 1..=folds {
        let mut stack = vec![(0usize, Vec::<usize>::new())];
        while let Some((start, partial)) = stack.pop() {
            if partial.len() == size {
                supports.push(partial);
                continue;
            }
            for loc in start..k {
                let mut next = partial.clone();
                next.push(loc);
                stack.push((loc + 1, next));
            }
        }
    }
    for support in &supports {
        examined += 1;
        let (residual, amplitudes) = ls_residual(bins, k, support);
        let candidate = SpikeTrain { locations: support.clone(), amplitudes };
        match &best {
            Some((r, _)) if *r <= residual + 1e-15 => {}
            _ => best = Some((residual, candidate)),
        }
    }
    let (_, mut train) = best.expect("at least the empty support is examined");
    // drop numerically silent spikes so minimal supports win ties
    let peak = train.amplitudes.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let kept: Vec<(usize, f64)> = train
        .locations
        .iter()
        .zip(&train.amplitudes)
        .filter(|(_, a)| a.abs() > 1e-9 * peak.max(1e-30))
        .map(|(&l, &a)| (l, a))
        .collect();
    train.locations = kept.iter().map(|e| e.0).collect();
    train.amplitudes = kept.iter().map(|e| e.1).collect();
    Ok(OracleResult { value: train, examined })
}

fn ls_residual(bins: &BTreeMap<usize, Complex64>, k: usize, support: &[usize]) -> (f64, Vec<f64>) {
    if support.is_empty() {
        let r = bins.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        return (r, Vec::new());
    }
    let rows = 2 * bins.len();
    let cols = support.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, (&n, &val)) in bins.iter().enumerate() {
        for (j, &loc) in support.iter().enumerate() {
            let w = Complex64::from_polar(
                1.0,
                -std::f64::consts::TAU * (n as f64) * (loc as f64) / (k as f64),
            );
            a[(2 * i, j)] = w.re;
            a[(2 * i + 1, j)] = w.im;
        }
        b[2 * i] = val.re;
        b[2 * i + 1] = val.im;
    }
    match a.clone().svd(true, true).solve(&b, 1e-12) {
        Ok(x) => {
            let residual = (&a * &x - &b).norm();
            (residual, x.iter().copied().collect())
        }
        Err(_) => (f64::INFINITY, vec![0.0; cols]),
    }
}

/// Reference residue straight from ground truth: r[k] = γ[k] − M_λ(γ[k]).
pub fn dense_residue(gamma: &[f64], lambda: f64) -> Vec<f64> {
    gamma.iter().map(|&g| g - fold_ideal(g, lambda)).collect()
}
