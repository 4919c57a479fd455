use serde::{Deserialize, Serialize};

use super::{CalibrationError, CostModel, CostTerm};

/// Least-squares fit of `y = coef · h^exponent` in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub coef: f64,
    pub r_squared: f64,
    /// Root-mean-square of the log residuals.
    pub residual: f64,
    pub points: usize,
    pub h_min: f64,
    pub h_max: f64,
}

fn check_positive(what: &str, values: &[f64]) -> Result<(), CalibrationError> {
    match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(CalibrationError::Data(format!("{what} must be positive and finite, got {v}"))),
        None => Ok(()),
    }
}

fn distinct(h: &[f64]) -> usize {
    let mut v: Vec<u64> = h.iter().map(|x| x.to_bits()).collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

pub fn fit_power_law(h: &[f64], y: &[f64]) -> Result<PowerFit, CalibrationError> {
    if h.len() != y.len() {
        return Err(CalibrationError::Data(format!("{} mesh sizes for {} values", h.len(), y.len())));
    }
    check_positive("mesh sizes", h)?;
    check_positive("fitted values", y)?;
    if distinct(h) < 2 {
        return Err(CalibrationError::Data("a power law needs at least two distinct mesh sizes".into()));
    }
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PowerFit {
        exponent: slope,
        coef: intercept.exp(),
        r_squared,
        residual: (ss_res / n).sqrt(),
        points: h.len(),
        h_min: h.iter().cloned().fold(f64::INFINITY, f64::min),
        h_max: h.iter().cloned().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationFit {
    pub alpha: f64,
    pub c1: f64,
    pub fit: PowerFit,
}

/// `error ≈ C1 h^α` from `(h, error)` pairs.
pub fn fit_discretization(pairs: &[(f64, f64)]) -> Result<DiscretizationFit, CalibrationError> {
    let (h, e): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
    check_positive("mesh sizes", &h)?;
    check_positive("errors", &e)?;
    if distinct(&h) < 3 {
        return Err(CalibrationError::Data(format!("need at least 3 distinct mesh sizes, got {}", distinct(&h))));
    }
    let fit = fit_power_law(&h, &e)?;
    if fit.h_max < 4.0 * fit.h_min {
        return Err(CalibrationError::Data(format!(
            "mesh sizes span only a factor {:.3}, need at least 4",
            fit.h_max / fit.h_min
        )));
    }
    if !(fit.exponent > 0.0) {
        return Err(CalibrationError::Data(format!("errors do not decrease with h (α = {})", fit.exponent)));
    }
    Ok(DiscretizationFit { alpha: fit.exponent, c1: fit.coef, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelVarianceFit {
    pub beta: f64,
    pub c0: f64,
    pub c00: f64,
    pub fit: PowerFit,
}

/// `C00` is the level-0 standard deviation; `σ_ℓ ≈ C0 h_{ℓ-1}^β` from
/// `(h_{ℓ-1}, σ_ℓ)` pairs of level differences.
pub fn fit_level_variance(sigma0: f64, differences: &[(f64, f64)]) -> Result<LevelVarianceFit, CalibrationError> {
    check_positive("level-0 standard deviation", &[sigma0])?;
    if differences.len() < 3 {
        return Err(CalibrationError::Data(format!("need at least 3 level differences, got {}", differences.len())));
    }
    let (h, s): (Vec<f64>, Vec<f64>) = differences.iter().cloned().unzip();
    let fit = fit_power_law(&h, &s)?;
    if !(fit.exponent > 0.0) {
        return Err(CalibrationError::Data(format!("level differences do not decay with h (β = {})", fit.exponent)));
    }
    Ok(LevelVarianceFit { beta: fit.exponent, c0: fit.coef, c00: sigma0, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRun {
    pub h: f64,
    pub samples: u64,
    /// Total over all samples and all `multiplicity` executions.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTimings {
    pub label: String,
    pub multiplicity: f64,
    pub runs: Vec<TimingRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFit {
    pub model: CostModel,
    pub fits: Vec<PowerFit>,
}

/// Smallest total time per timing run that is trusted.
pub const TIMER_RESOLUTION: f64 = 1e-3;

/// Per component, `seconds / (M · multiplicity) ≈ μ h^{-γ}`.
pub fn fit_cost_model(components: &[ComponentTimings]) -> Result<CostFit, CalibrationError> {
    if components.is_empty() {
        return Err(CalibrationError::Data("no timing components".into()));
    }
    let mut terms = Vec::new();
    let mut fits = Vec::new();
    for c in components {
        let h: Vec<f64> = c.runs.iter().map(|r| r.h).collect();
        if distinct(&h) < 3 {
            return Err(CalibrationError::Data(format!(
                "component '{}' needs at least 3 distinct mesh sizes, got {}",
                c.label,
                distinct(&h)
            )));
        }
        if let Some(r) = c.runs.iter().find(|r| r.seconds < TIMER_RESOLUTION || r.samples == 0) {
            return Err(CalibrationError::Measurement(format!(
                "component '{}' took {:.3e} s over {} samples at h = {}; increase the sample count",
                c.label, r.seconds, r.samples, r.h
            )));
        }
        let per: Vec<f64> = c.runs.iter().map(|r| r.seconds / (r.samples as f64 * c.multiplicity)).collect();
        let fit = fit_power_law(&h, &per)?;
        if !(fit.exponent < 0.0) {
            return Err(CalibrationError::Measurement(format!(
                "component '{}' does not get more expensive on finer meshes (γ = {})",
                c.label, -fit.exponent
            )));
        }
        terms.push(CostTerm {
            label: c.label.clone(),
            mu: fit.coef,
            gamma: -fit.exponent,
            multiplicity: c.multiplicity,
        });
        fits.push(fit);
    }
    Ok(CostFit { model: CostModel { terms }, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_law() {
        let pairs: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125].iter().map(|&h| (h, 2.0 * h)).collect();
        let f = fit_discretization(&pairs).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-12 && (f.c1 - 2.0).abs() < 1e-12);
        assert!((f.fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_order() {
        let pairs: Vec<(f64, f64)> = [2.0f64, 1.0, 0.5, 0.25].iter().map(|&h| (h, 3.0 * h.powf(0.96))).collect();
        let f = fit_discretization(&pairs).unwrap();
        assert!((f.alpha - 0.96).abs() < 1e-10);
    }

    #[test]
    fn discretization_preconditions() {
        assert!(fit_discretization(&[(1.0, 1.0), (0.5, 0.5)]).is_err());
        assert!(fit_discretization(&[(1.0, 1.0), (0.8, 0.8), (0.5, 0.5)]).is_err());
        assert!(fit_discretization(&[(1.0, 1.0), (0.5, 0.0), (0.25, 0.2)]).is_err());
        assert!(fit_discretization(&[(1.0, 1.0), (0.5, 2.0), (0.25, 4.0)]).is_err());
    }

    #[test]
    fn level_variance_law() {
        let d: Vec<(f64, f64)> = [4.0, 2.0, 1.0].iter().map(|&h| (h, 0.5 * h)).collect();
        let f = fit_level_variance(0.2, &d).unwrap();
        assert!((f.beta - 1.0).abs() < 1e-12 && (f.c0 - 0.5).abs() < 1e-12);
        assert_eq!(f.c00, 0.2);
        assert!(fit_level_variance(0.2, &d[..2]).is_err());
    }

    #[test]
    fn cost_law() {
        let runs =
            [1.0f64, 0.5, 0.25].iter().map(|&h| TimingRun { h, samples: 3, seconds: 4.0 * 3.0 * h.powi(-2) }).collect();
        let fit = fit_cost_model(&[ComponentTimings { label: "a".into(), multiplicity: 1.0, runs }]).unwrap();
        let t = &fit.model.terms[0];
        assert!((t.mu - 4.0).abs() < 1e-12 && (t.gamma - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_timings_are_rejected() {
        let runs = [1.0f64, 0.5, 0.25].iter().map(|&h| TimingRun { h, samples: 1, seconds: 1e-5 / h }).collect();
        assert!(matches!(
            fit_cost_model(&[ComponentTimings { label: "a".into(), multiplicity: 1.0, runs }]),
            Err(CalibrationError::Measurement(_))
        ));
    }
}
