use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::OptimizerError;

/// Smooth inequality-constrained problem `min f(χ) s.t. g_i(χ) ≥ 0`.
pub trait NlpProblem {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> Mat<f64>;
    fn constraints(&self, x: &[f64]) -> Vec<f64>;
    /// `m × n`.
    fn jacobian(&self, x: &[f64]) -> Mat<f64>;
    /// `Σ_i y_i ∇²g_i(χ)`.
    fn constraint_hessian(&self, x: &[f64], y: &[f64]) -> Mat<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IpOptions {
    pub mu0: f64,
    pub mu_factor: f64,
    pub mu_min: f64,
    /// Fraction-to-boundary parameter.
    pub tau: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// A barrier stage ends once its residual drops below `kappa · μ`.
    pub kappa: f64,
}

impl Default for IpOptions {
    fn default() -> Self {
        Self { mu0: 1.0, mu_factor: 0.2, mu_min: 1e-12, tau: 0.995, tol: 1e-8, max_iters: 500, kappa: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpState {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub mu: f64,
    pub upsilon: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `‖∇f − ∇gᵀy‖∞`.
    pub stationarity: f64,
    /// `‖min(g, 0)‖∞`.
    pub primal: f64,
    /// `‖SYe‖∞`.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub mu: f64,
    pub objective: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub multipliers: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `∇f − Jᵀy`.
fn lagrangian_gradient(grad: &[f64], jac: &Mat<f64>, y: &[f64]) -> Vec<f64> {
    let mut r = grad.to_vec();
    for i in 0..jac.nrows() {
        for (j, rj) in r.iter_mut().enumerate() {
            *rj -= jac[(i, j)] * y[i];
        }
    }
    r
}

fn barrier_residual(grad_l: &[f64], c: &[f64], s: &[f64], y: &[f64], mu: f64) -> f64 {
    let comp = s.iter().zip(y).fold(0.0f64, |m, (s, y)| m.max((s * y - mu).abs()));
    inf_norm(grad_l).max(inf_norm(c)).max(comp)
}

fn merit<P: NlpProblem + ?Sized>(p: &P, x: &[f64], s: &[f64], mu: f64, upsilon: f64) -> f64 {
    let g = p.constraints(x);
    let c: Vec<f64> = g.iter().zip(s).map(|(g, s)| g - s).collect();
    p.objective(x) - mu * s.iter().map(|s| s.ln()).sum::<f64>() + 0.5 * upsilon * two_norm(&c)
}

/// Largest `α ∈ (0, 1]` with `v + α dv ≥ (1 − τ) v`.
fn fraction_to_boundary(v: &[f64], dv: &[f64], tau: f64) -> f64 {
    v.iter().zip(dv).fold(1.0f64, |a, (v, dv)| if *dv < 0.0 { a.min(-tau * v / dv) } else { a })
}

/// Solves `(H + δI) dx = rhs`, increasing `δ` until the matrix factors.
fn regularized_solve(h: &Mat<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let diag_scale = (0..n).fold(0.0f64, |m, i| m.max(h[(i, i)].abs())).max(1.0);
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let mut delta = 0.0;
    for _ in 0..40 {
        let shifted = Mat::from_fn(n, n, |i, j| h[(i, j)] + if i == j { delta } else { 0.0 });
        if let Ok(llt) = shifted.llt(Side::Lower) {
            let x = llt.solve(&b);
            let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
            if out.iter().all(|v| v.is_finite()) {
                return Some(out);
            }
        }
        delta = if delta == 0.0 { 1e-10 * diag_scale } else { delta * 10.0 };
    }
    None
}

/// Primal-dual log-barrier interior-point method.
///
/// Slacks turn `g(χ) ≥ 0` into `g(χ) − s = 0, s > 0`; each Newton step
/// solves the reduced system
/// `(H + Jᵀ S⁻¹Y J) Δχ = −∇f + Jᵀ(μ S⁻¹e − S⁻¹Y (g − s))`
/// and recovers `Δs = JΔχ + g − s`, `Δy = μS⁻¹e − y − S⁻¹YΔs`.
pub fn interior_point_solve<P: NlpProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    opts: &IpOptions,
) -> Result<(Vec<f64>, IpDiagnostics), OptimizerError> {
    let n = problem.dim();
    let m = problem.num_constraints();
    if x0.len() != n {
        return Err(OptimizerError::Config(format!("start has {} entries, problem has {n}", x0.len())));
    }
    let g0 = problem.constraints(x0);
    if let Some(i) = g0.iter().position(|g| !(*g > 0.0)) {
        return Err(OptimizerError::Config(format!("start is not strictly feasible: g[{i}] = {}", g0[i])));
    }
    let mut st = IpState {
        x: x0.to_vec(),
        s: g0.clone(),
        y: g0.iter().map(|g| opts.mu0 / g).collect(),
        mu: opts.mu0,
        upsilon: 1.0,
    };
    let mut trace = Vec::new();

    for iter in 0..opts.max_iters {
        let g = problem.constraints(&st.x);
        let jac = problem.jacobian(&st.x);
        let grad = problem.gradient(&st.x);
        let c: Vec<f64> = g.iter().zip(&st.s).map(|(g, s)| g - s).collect();
        let grad_l = lagrangian_gradient(&grad, &jac, &st.y);
        let objective = problem.objective(&st.x);

        let final_stage = st.mu <= opts.mu_min * (1.0 + 1e-12);
        let res = barrier_residual(&grad_l, &c, &st.s, &st.y, st.mu);
        if final_stage && res <= opts.tol {
            let kkt = KktResiduals {
                stationarity: inf_norm(&grad_l),
                primal: g.iter().fold(0.0f64, |a, g| a.max((-g).max(0.0))),
                complementarity: st.s.iter().zip(&st.y).fold(0.0f64, |a, (s, y)| a.max((s * y).abs())),
            };
            trace.push(TraceEntry { iteration: iter, mu: st.mu, objective, residual: res, step: 0.0 });
            return Ok((st.x, IpDiagnostics { iterations: iter, objective, kkt, multipliers: st.y, trace }));
        }
        if !final_stage && res <= opts.kappa * st.mu {
            st.mu = (st.mu * opts.mu_factor).max(opts.mu_min);
            continue;
        }

        // Reduced Newton system.
        let sigma: Vec<f64> = st.y.iter().zip(&st.s).map(|(y, s)| y / s).collect();
        let mut h = problem.hessian(&st.x);
        let hc = problem.constraint_hessian(&st.x, &st.y);
        for i in 0..n {
            for j in 0..n {
                let mut v = h[(i, j)] - hc[(i, j)];
                for k in 0..m {
                    v += jac[(k, i)] * sigma[k] * jac[(k, j)];
                }
                h[(i, j)] = v;
            }
        }
        let w: Vec<f64> = (0..m).map(|k| st.mu / st.s[k] - sigma[k] * c[k]).collect();
        let rhs: Vec<f64> = (0..n).map(|j| -grad[j] + (0..m).map(|k| jac[(k, j)] * w[k]).sum::<f64>()).collect();
        let dx = regularized_solve(&h, &rhs).ok_or_else(|| OptimizerError::NonConvergence {
            iterations: iter,
            residual: res,
            message: "reduced KKT matrix could not be factored".into(),
        })?;
        let ds: Vec<f64> = (0..m).map(|k| (0..n).map(|j| jac[(k, j)] * dx[j]).sum::<f64>() + c[k]).collect();
        let dy: Vec<f64> = (0..m).map(|k| st.mu / st.s[k] - st.y[k] - sigma[k] * ds[k]).collect();

        let alpha_s = fraction_to_boundary(&st.s, &ds, opts.tau);
        let alpha_y = fraction_to_boundary(&st.y, &dy, opts.tau);

        // Penalty large enough for a descent direction on the merit function.
        let c_norm = two_norm(&c);
        let barrier_slope = dot(&grad, &dx) - st.mu * ds.iter().zip(&st.s).map(|(d, s)| d / s).sum::<f64>();
        if c_norm > 0.0 {
            let curvature: f64 = (0..n).map(|i| dx[i] * (0..n).map(|j| h[(i, j)] * dx[j]).sum::<f64>()).sum();
            let needed = 2.0 * (barrier_slope + 0.5 * curvature.max(0.0)) / (0.9 * c_norm);
            if st.upsilon < needed {
                st.upsilon = needed + 1.0;
            }
        }
        let slope = barrier_slope - 0.5 * st.upsilon * c_norm;
        let phi0 = merit(problem, &st.x, &st.s, st.mu, st.upsilon);

        let mut alpha = alpha_s;
        let mut accepted = false;
        for _ in 0..60 {
            let xt: Vec<f64> = st.x.iter().zip(&dx).map(|(x, d)| x + alpha * d).collect();
            let stt: Vec<f64> = st.s.iter().zip(&ds).map(|(s, d)| s + alpha * d).collect();
            let phi = merit(problem, &xt, &stt, st.mu, st.upsilon);
            if phi.is_finite() && phi <= phi0 + 1e-4 * alpha * slope.min(0.0) + 1e-14 * phi0.abs().max(1.0) {
                st.x = xt;
                st.s = stt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(OptimizerError::NonConvergence {
                iterations: iter,
                residual: res,
                message: "line search failed to reduce the merit function".into(),
            });
        }
        for (y, d) in st.y.iter_mut().zip(&dy) {
            *y += alpha_y * d;
        }
        trace.push(TraceEntry { iteration: iter, mu: st.mu, objective, residual: res, step: alpha });
    }
    let g = problem.constraints(&st.x);
    let c: Vec<f64> = g.iter().zip(&st.s).map(|(g, s)| g - s).collect();
    let grad_l = lagrangian_gradient(&problem.gradient(&st.x), &problem.jacobian(&st.x), &st.y);
    Err(OptimizerError::NonConvergence {
        iterations: opts.max_iters,
        residual: barrier_residual(&grad_l, &c, &st.s, &st.y, st.mu),
        message: format!("iteration limit reached at μ = {:e}", st.mu),
    })
}
