use serde::{Deserialize, Serialize};

use super::EstimationError;

/// Constants of the error model: bias `C1 h^α`, level-0 standard deviation
/// bounded by `C00`, level differences bounded by `C0 h_{ℓ-1}^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub alpha: f64,
    pub c1: f64,
    pub beta: f64,
    pub c0: f64,
    pub c00: f64,
}

impl ErrorModel {
    pub fn validate(&self) -> Result<(), EstimationError> {
        let ok = self.alpha > 0.0
            && self.beta > 0.0
            && self.c1 >= 0.0
            && self.c0 >= 0.0
            && self.c00 >= 0.0
            && [self.alpha, self.beta, self.c1, self.c0, self.c00].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(EstimationError::Plan(format!("invalid error model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    pub h: f64,
    pub samples: u64,
}

impl McPlan {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if self.samples == 0 || !(self.h > 0.0 && self.h.is_finite()) {
            return Err(EstimationError::Plan(format!("invalid MC plan {self:?}")));
        }
        Ok(())
    }
}

/// Mesh-size ratios of a hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratios {
    /// `h_ℓ = h_0 r^{-ℓ}`.
    Geometric(f64),
    /// `h_ℓ = h_{ℓ-1} / r_ℓ` for `ℓ = 1..L`.
    Free(Vec<f64>),
}

/// MLMC hierarchy `(L, {M_ℓ}, h_0, r or {r_ℓ})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcPlan {
    pub levels: usize,
    pub h0: f64,
    pub ratios: Ratios,
    pub samples: Vec<u64>,
}

impl MlmcPlan {
    pub fn single_level(h: f64, samples: u64) -> Self {
        Self { levels: 0, h0: h, ratios: Ratios::Geometric(1.0), samples: vec![samples] }
    }

    pub fn mesh_sizes(&self) -> Vec<f64> {
        mesh_sizes(self.h0, &self.ratios, self.levels)
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        let bad = |m: String| Err(EstimationError::Plan(m));
        if self.samples.len() != self.levels + 1 {
            return bad(format!("{} sample counts for {} levels", self.samples.len(), self.levels + 1));
        }
        if self.samples.contains(&0) {
            return bad("every level needs at least one sample".into());
        }
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return bad(format!("h0 must be positive, got {}", self.h0));
        }
        match &self.ratios {
            Ratios::Geometric(r) if !(*r >= 1.0 && r.is_finite()) => bad(format!("ratio {r} < 1")),
            Ratios::Free(r) if r.len() != self.levels => bad(format!("{} ratios for {} levels", r.len(), self.levels)),
            Ratios::Free(r) if r.iter().any(|x| !(*x >= 1.0 && x.is_finite())) => bad("ratios must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

pub fn mesh_sizes(h0: f64, ratios: &Ratios, levels: usize) -> Vec<f64> {
    let mut h = vec![h0];
    for l in 1..=levels {
        let r = match ratios {
            Ratios::Geometric(r) => *r,
            Ratios::Free(r) => r[l - 1],
        };
        h.push(h[l - 1] / r);
    }
    h
}

/// `C1 h^α + C00 M^{-1/2}`.
pub fn rmse_bound_mc(model: &ErrorModel, plan: &McPlan) -> f64 {
    model.c1 * plan.h.powf(model.alpha) + model.c00 / (plan.samples as f64).sqrt()
}

/// `C1 h_L^α + C00 M_0^{-1/2} + C0 Σ_{ℓ≥1} M_ℓ^{-1/2} h_{ℓ-1}^β`.
pub fn rmse_bound_mlmc(model: &ErrorModel, plan: &MlmcPlan) -> f64 {
    let m: Vec<f64> = plan.samples.iter().map(|&x| x as f64).collect();
    rmse_bound_mlmc_continuous(model, &plan.mesh_sizes(), &m)
}

/// The MLMC bound for real-valued sample counts.
pub fn rmse_bound_mlmc_continuous(model: &ErrorModel, h: &[f64], m: &[f64]) -> f64 {
    let l = h.len() - 1;
    let mut b = model.c1 * h[l].powf(model.alpha) + model.c00 / m[0].sqrt();
    for i in 1..=l {
        b += model.c0 * h[i - 1].powf(model.beta) / m[i].sqrt();
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ErrorModel {
        ErrorModel { alpha: 1.0, c1: 1.0, beta: 1.0, c0: 1.0, c00: 1.0 }
    }

    #[test]
    fn mc_bound_by_hand() {
        assert_eq!(rmse_bound_mc(&unit(), &McPlan { h: 1.0, samples: 4 }), 1.5);
        let b = rmse_bound_mc(&unit(), &McPlan { h: 0.3, samples: 10_000_000_000_000_000 });
        assert!((b - 0.3).abs() <= 1e-6 * 0.3);
    }

    #[test]
    fn mlmc_bound_by_hand() {
        let plan = MlmcPlan { levels: 1, h0: 1.0, ratios: Ratios::Geometric(2.0), samples: vec![4, 4] };
        assert_eq!(rmse_bound_mlmc(&unit(), &plan), 1.5);
        let single = MlmcPlan::single_level(0.7, 9);
        assert_eq!(rmse_bound_mlmc(&unit(), &single), rmse_bound_mc(&unit(), &McPlan { h: 0.7, samples: 9 }));
    }

    #[test]
    fn zero_level_constant_ignores_correction_samples() {
        let m = ErrorModel { c0: 0.0, ..unit() };
        let mut plan = MlmcPlan { levels: 2, h0: 1.0, ratios: Ratios::Free(vec![2.0, 3.0]), samples: vec![5, 1, 1] };
        let b = rmse_bound_mlmc(&m, &plan);
        plan.samples = vec![5, 1000, 7];
        assert_eq!(rmse_bound_mlmc(&m, &plan), b);
        assert_eq!(plan.mesh_sizes(), vec![1.0, 0.5, 0.5 / 3.0]);
    }

    #[test]
    fn plan_validation() {
        let mut p = MlmcPlan { levels: 1, h0: 1.0, ratios: Ratios::Geometric(0.5), samples: vec![1, 1] };
        assert!(p.validate().is_err());
        p.ratios = Ratios::Geometric(2.0);
        p.validate().unwrap();
        p.samples = vec![1, 0];
        assert!(p.validate().is_err());
    }
}
