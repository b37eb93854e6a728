//! Least-squares fits used by the decay and convergence harnesses.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Straight-line fit `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Half-width of the 95% confidence interval of the slope (`NaN` with
    /// only two points).
    pub slope_ci: f64,
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("length mismatch: {} x values, {} y values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least two points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_ci = if n > 2 {
        let dof = nf - 2.0;
        let se = (sse / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Fit(e.to_string()))?.inverse_cdf(0.975);
        t * se
    } else {
        f64::NAN
    };
    Ok(LinearFit { slope, intercept, r2, slope_ci, points: n })
}

/// Exponential decay fit `value ≈ amplitude·e^{rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    pub r2: f64,
}

/// Fits `log(value)` against `t` over the second half of the samples.
/// Non-positive values are skipped.
pub fn decay_fit(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    if times.len() < 10 {
        return Err(Error::Fit(format!("decay fit needs at least 10 snapshots, got {}", times.len())));
    }
    let start = times.len() / 2;
    let (x, y): (Vec<f64>, Vec<f64>) = times[start..]
        .iter()
        .zip(&values[start..])
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    if x.len() < 4 {
        return Err(Error::Fit(format!("only {} usable points in the tail", x.len())));
    }
    let fit = linear_fit(&x, &y)?;
    Ok(DecayFit { rate: fit.slope, amplitude: fit.intercept.exp(), r2: fit.r2 })
}

/// Slope of `log(err)` against `log(ε)`.
pub fn rate_fit(pairs: &[(f64, f64)]) -> Result<LinearFit> {
    if pairs.len() < 3 {
        return Err(Error::Fit(format!("rate fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(bad) = pairs.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0)) {
        return Err(Error::Fit(format!("rate fit needs positive values, got {bad:?}")));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    linear_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_exponential() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-t).exp()).collect();
        let fit = decay_fit(&t, &v).unwrap();
        assert!((fit.rate + 1.0).abs() < 1e-6);
        assert!((fit.amplitude - 3.0).abs() < 1e-6);
        assert!(fit.r2 > 0.999_999);
    }

    #[test]
    fn decay_fit_needs_data() {
        let t: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let mut v = vec![0.0; 12];
        v[11] = 1.0;
        assert!(matches!(decay_fit(&t, &v), Err(Error::Fit(_))));
        assert!(matches!(decay_fit(&t[..5], &v[..5]), Err(Error::Fit(_))));
    }

    #[test]
    fn power_laws() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let lin: Vec<_> = eps.iter().map(|&e| (e, e)).collect();
        assert!((rate_fit(&lin).unwrap().slope - 1.0).abs() < 1e-10);
        let quarter: Vec<_> = eps.iter().map(|&e| (e, 3.0 * f64::powf(e, 0.25))).collect();
        let fit = rate_fit(&quarter).unwrap();
        assert!((fit.slope - 0.25).abs() < 1e-8);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-8);
        assert!(fit.slope_ci < 1e-6);
    }

    #[test]
    fn rate_fit_rejects_bad_input() {
        assert!(rate_fit(&[(0.1, 1.0), (0.05, 0.5)]).is_err());
        assert!(rate_fit(&[(0.1, 1.0), (0.05, 0.0), (0.02, 0.1)]).is_err());
    }

    #[test]
    fn confidence_interval_matches_textbook() {
        // y = 2x + noise; slope CI from the t distribution with 3 dof.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.1, 3.9, 6.2, 7.8, 10.1];
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope - 1.99).abs() < 1e-12);
        let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - fit.slope * a - fit.intercept).powi(2)).sum();
        let se = (sse / 3.0 / 10.0).sqrt();
        assert!((fit.slope_ci - 3.182446305284263 * se).abs() < 1e-9);
    }
}
