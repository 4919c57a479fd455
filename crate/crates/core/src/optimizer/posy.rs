use faer::Mat;

use super::ipm::NlpProblem;

/// `c · exp(aᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub coef: f64,
    pub exps: Vec<f64>,
}

impl ExpTerm {
    fn log_value(&self, x: &[f64]) -> f64 {
        self.coef.ln() + self.exps.iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogConstraint {
    /// `1 − Σ_j c_j exp(b_jᵀx) ≥ 0`.
    Budget(Vec<ExpTerm>),
    /// `aᵀx + b ≥ 0`.
    Linear { a: Vec<f64>, b: f64 },
}

/// `min ln Σ_j c_j exp(a_jᵀx)` over log-variables; the objective and the
/// budget constraint are convex and concave respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPosyProblem {
    pub dim: usize,
    pub objective: Vec<ExpTerm>,
    pub constraints: Vec<LogConstraint>,
}

/// Normalised weights `c_j e^{a_jᵀx} / Σ` and `ln Σ`.
fn softmax(terms: &[ExpTerm], x: &[f64]) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = terms.iter().map(|t| t.log_value(x)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let sum: f64 = w.iter().sum();
    (w.iter().map(|w| w / sum).collect(), top + sum.ln())
}

impl LogPosyProblem {
    pub fn work(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|t| t.log_value(x).exp()).sum()
    }
}

impl NlpProblem for LogPosyProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        softmax(&self.objective, x).1
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (w, _) = softmax(&self.objective, x);
        let mut g = vec![0.0; self.dim];
        for (t, w) in self.objective.iter().zip(&w) {
            for (gi, a) in g.iter_mut().zip(&t.exps) {
                *gi += w * a;
            }
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Mat<f64> {
        let (w, _) = softmax(&self.objective, x);
        let g = self.gradient(x);
        let mut h = Mat::from_fn(self.dim, self.dim, |i, j| -g[i] * g[j]);
        for (t, w) in self.objective.iter().zip(&w) {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    h[(i, j)] += w * t.exps[i] * t.exps[j];
                }
            }
        }
        h
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| match c {
                LogConstraint::Budget(terms) => 1.0 - terms.iter().map(|t| t.log_value(x).exp()).sum::<f64>(),
                LogConstraint::Linear { a, b } => a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + b,
            })
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Mat<f64> {
        let mut jac = Mat::zeros(self.constraints.len(), self.dim);
        for (k, c) in self.constraints.iter().enumerate() {
            match c {
                LogConstraint::Budget(terms) => {
                    for t in terms {
                        let v = t.log_value(x).exp();
                        for j in 0..self.dim {
                            jac[(k, j)] -= v * t.exps[j];
                        }
                    }
                }
                LogConstraint::Linear { a, .. } => {
                    for j in 0..self.dim {
                        jac[(k, j)] = a[j];
                    }
                }
            }
        }
        jac
    }

    fn constraint_hessian(&self, x: &[f64], y: &[f64]) -> Mat<f64> {
        let mut h = Mat::zeros(self.dim, self.dim);
        for (c, yk) in self.constraints.iter().zip(y) {
            if let LogConstraint::Budget(terms) = c {
                for t in terms {
                    let v = yk * t.log_value(x).exp();
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            h[(i, j)] -= v * t.exps[i] * t.exps[j];
                        }
                    }
                }
            }
        }
        h
    }
}
