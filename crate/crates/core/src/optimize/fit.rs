//! Least-squares fit of `S(delta) = S0 + S1 sqrt(delta) [+ S2 delta]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CurvePoint;
use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "S0")]
    pub s0: f64,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "S2")]
    pub s2: Option<f64>,
    pub ratio: f64,
    pub residual_rms: f64,
}

impl FitResult {
    pub fn predict(&self, delta: f64) -> f64 {
        self.s0 + self.s1 * delta.sqrt() + self.s2.unwrap_or(0.0) * delta
    }
}

/// Fits the converged points of a curve; non-converged points are dropped.
pub fn fit_curve(points: &[CurvePoint], n_terms: usize) -> Result<FitResult> {
    let samples: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.converged)
        .map(|p| (p.delta, p.success))
        .collect();
    fit_samples(&samples, n_terms)
}

/// Fits `(delta, S)` samples with 2 or 3 terms.
pub fn fit_samples(samples: &[(f64, f64)], n_terms: usize) -> Result<FitResult> {
    if !(n_terms == 2 || n_terms == 3) {
        return Err(Error::Fit(format!(
            "{n_terms} terms requested; only 2 or 3 are supported"
        )));
    }
    if samples.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} points given, at least {MIN_FIT_POINTS} needed",
            samples.len()
        )));
    }
    if let Some(&(d, _)) = samples.iter().find(|(d, s)| !(*d >= 0.0) || !s.is_finite()) {
        return Err(Error::Fit(format!("invalid sample with delta = {d}")));
    }

    let design = DMatrix::from_fn(samples.len(), n_terms, |i, j| {
        let d = samples[i].0;
        match j {
            0 => 1.0,
            1 => d.sqrt(),
            _ => d,
        }
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));

    let svd = design.clone().svd(true, true);
    let sv_max = svd.singular_values.max();
    let sv_min = svd.singular_values.min();
    if !(sv_min > 1e-12 * sv_max) {
        return Err(Error::Fit(
            "design matrix is rank deficient (too few distinct delta values)".into(),
        ));
    }
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Fit(e.to_string()))?;

    let resid = &design * &coef - &rhs;
    let residual_rms = (resid.norm_squared() / samples.len() as f64).sqrt();
    Ok(FitResult {
        s0: coef[0],
        s1: coef[1],
        s2: (n_terms == 3).then(|| coef[2]),
        ratio: coef[1] / coef[0],
        residual_rms,
    })
}
