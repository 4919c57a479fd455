use serde::{Deserialize, Serialize};

use super::CalibrationError;

/// One component of the per-sample work, `multiplicity · μ · h^{-γ}`
/// seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    pub label: String,
    pub mu: f64,
    pub gamma: f64,
    /// How often the component runs per solve (the two continuity equations
    /// share one fitted term).
    pub multiplicity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub terms: Vec<CostTerm>,
}

impl CostModel {
    pub fn single(mu: f64, gamma: f64) -> Self {
        Self { terms: vec![CostTerm { label: "total".into(), mu, gamma, multiplicity: 1.0 }] }
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        if self.terms.is_empty() {
            return Err(CalibrationError::Data("cost model has no terms".into()));
        }
        for t in &self.terms {
            if !(t.mu > 0.0 && t.gamma > 0.0 && t.multiplicity > 0.0)
                || !(t.mu.is_finite() && t.gamma.is_finite() && t.multiplicity.is_finite())
            {
                return Err(CalibrationError::Data(format!(
                    "cost term '{}' needs μ, γ, multiplicity > 0, got ({}, {}, {})",
                    t.label, t.mu, t.gamma, t.multiplicity
                )));
            }
        }
        Ok(())
    }

    /// Work of one sample at mesh size `h`.
    pub fn per_sample(&self, h: f64) -> f64 {
        self.terms.iter().map(|t| t.multiplicity * t.mu * h.powf(-t.gamma)).sum()
    }

    /// `Σ_k μ_k M h^{-γ_k}`.
    pub fn work(&self, samples: f64, h: f64) -> f64 {
        samples * self.per_sample(h)
    }

    /// `Σ_ℓ M_ℓ · per_sample(h_ℓ)`.
    pub fn hierarchy_work(&self, samples: &[f64], h: &[f64]) -> f64 {
        samples.iter().zip(h).map(|(m, h)| self.work(*m, *h)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.mu *= factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn work_sums_terms_with_multiplicity() {
        let c = CostModel {
            terms: vec![
                CostTerm { label: "a".into(), mu: 2.0, gamma: 2.0, multiplicity: 1.0 },
                CostTerm { label: "b".into(), mu: 1.0, gamma: 1.0, multiplicity: 2.0 },
            ],
        };
        assert_eq!(c.work(3.0, 0.5), 3.0 * (2.0 * 4.0 + 2.0 * 2.0));
        assert_eq!(c.hierarchy_work(&[1.0, 2.0], &[1.0, 0.5]), 4.0 + 2.0 * 12.0);
    }

    #[test]
    fn non_positive_terms_are_rejected() {
        assert!(CostModel::single(0.0, 2.0).validate().is_err());
        assert!(CostModel { terms: vec![] }.validate().is_err());
        CostModel::single(1.0, 2.0).validate().unwrap();
    }
}
