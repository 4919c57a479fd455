use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ipm::{interior_point_solve, IpOptions, KktResiduals, TraceEntry};
use super::posy::{ExpTerm, LogConstraint, LogPosyProblem};
use super::OptimizerError;
use crate::calibration::CostModel;
use crate::estimators::{mesh_sizes, rmse_bound_mlmc_continuous, ErrorModel, McPlan, MlmcPlan, Ratios};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Mc,
    Geometric,
    Free,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Mc => "mc",
            Variant::Geometric => "geometric",
            Variant::Free => "free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Smallest admissible mesh size.
    pub xi: f64,
    /// Upper box bound on the coarsest mesh size.
    pub h_max: f64,
    pub starts: usize,
    pub ipm: IpOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { xi: f64::EPSILON, h_max: 1e3, starts: 8, ipm: IpOptions::default() }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.xi > 0.0 && self.h_max > self.xi && self.h_max.is_finite()) || self.starts == 0 {
            return Err(OptimizerError::Config(format!(
                "need 0 < ξ < h_max and at least one start, got ξ = {}, h_max = {}, starts = {}",
                self.xi, self.h_max, self.starts
            )));
        }
        Ok(())
    }
}

/// Continuous optimum before the sample counts are made integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousOptimum {
    pub h0: f64,
    pub ratios: Ratios,
    pub samples: Vec<f64>,
    pub work: f64,
}

impl ContinuousOptimum {
    pub fn levels(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn mesh_sizes(&self) -> Vec<f64> {
        mesh_sizes(self.h0, &self.ratios, self.levels())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub variant: Variant,
    pub epsilon: f64,
    pub levels: usize,
    pub continuous: ContinuousOptimum,
    /// Plan with integral sample counts.
    pub plan: MlmcPlan,
    pub work: f64,
    pub rmse_bound: f64,
    pub kkt: KktResiduals,
    pub iterations: usize,
    pub start: usize,
    pub trace: Vec<TraceEntry>,
}

impl Optimum {
    pub fn mc_plan(&self) -> Option<McPlan> {
        (self.levels == 0).then(|| McPlan { h: self.plan.h0, samples: self.plan.samples[0] })
    }
}

/// Positions of the log-variables `(ln M_0..ln M_L, ln h_0, ln r..)`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    variant: Variant,
    levels: usize,
}

impl Layout {
    fn h(&self) -> usize {
        self.levels + 1
    }

    fn num_ratios(&self) -> usize {
        match (self.variant, self.levels) {
            (_, 0) | (Variant::Mc, _) => 0,
            (Variant::Geometric, _) => 1,
            (Variant::Free, l) => l,
        }
    }

    fn dim(&self) -> usize {
        self.levels + 2 + self.num_ratios()
    }

    /// Coefficients of `ln h_ℓ`.
    fn log_h(&self, level: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.dim()];
        a[self.h()] = 1.0;
        match self.variant {
            Variant::Geometric if level > 0 => a[self.h() + 1] = -(level as f64),
            Variant::Free => (1..=level).for_each(|i| a[self.h() + i] = -1.0),
            _ => {}
        }
        a
    }

    fn unit(&self, j: usize, scale: f64) -> Vec<f64> {
        let mut a = vec![0.0; self.dim()];
        a[j] = scale;
        a
    }

    fn decode(&self, x: &[f64]) -> (f64, Ratios, Vec<f64>) {
        let samples = x[..=self.levels].iter().map(|v| v.exp()).collect();
        let h0 = x[self.h()].exp();
        let ratios = match (self.variant, self.num_ratios()) {
            (Variant::Free, _) => Ratios::Free(x[self.h() + 1..].iter().map(|v| v.exp()).collect()),
            (_, 0) => Ratios::Geometric(1.0),
            _ => Ratios::Geometric(x[self.h() + 1].exp()),
        };
        (h0, ratios, samples)
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

fn build(cost: &CostModel, error: &ErrorModel, eps: f64, layout: Layout, opts: &OptimizerOptions) -> LogPosyProblem {
    let n = layout.dim();
    let mut objective = Vec::new();
    for l in 0..=layout.levels {
        for t in &cost.terms {
            let mut a = layout.unit(l, 1.0);
            axpy(&mut a, -t.gamma, &layout.log_h(l));
            objective.push(ExpTerm { coef: t.multiplicity * t.mu, exps: a });
        }
    }
    let mut budget = Vec::new();
    if error.c00 > 0.0 {
        budget.push(ExpTerm { coef: error.c00 / eps, exps: layout.unit(0, -0.5) });
    }
    if error.c0 > 0.0 {
        for l in 1..=layout.levels {
            let mut a = layout.unit(l, -0.5);
            axpy(&mut a, error.beta, &layout.log_h(l - 1));
            budget.push(ExpTerm { coef: error.c0 / eps, exps: a });
        }
    }
    if error.c1 > 0.0 {
        let mut a = vec![0.0; n];
        axpy(&mut a, error.alpha, &layout.log_h(layout.levels));
        budget.push(ExpTerm { coef: error.c1 / eps, exps: a });
    }
    let mut constraints = vec![LogConstraint::Budget(budget)];
    for l in 0..=layout.levels {
        constraints.push(LogConstraint::Linear { a: layout.unit(l, 1.0), b: 0.0 });
    }
    constraints.push(LogConstraint::Linear { a: layout.unit(layout.h(), 1.0), b: -opts.xi.ln() });
    constraints.push(LogConstraint::Linear { a: layout.unit(layout.h(), -1.0), b: opts.h_max.ln() });
    for i in 0..layout.num_ratios() {
        constraints.push(LogConstraint::Linear { a: layout.unit(layout.h() + 1 + i, 1.0), b: 0.0 });
    }
    LogPosyProblem { dim: n, objective, constraints }
}

/// Coarsest mesh with `C1 h^α = ε/2`, ratios 2, and 90% of the remaining
/// budget split evenly over the levels.
fn initial_point(error: &ErrorModel, eps: f64, layout: Layout, opts: &OptimizerOptions) -> Vec<f64> {
    let margin = 0.05;
    let (lo, hi) = (opts.xi.ln() + margin, opts.h_max.ln() - margin);
    let ln_h0 = if error.c1 > 0.0 { (eps / (2.0 * error.c1)).ln() / error.alpha } else { hi };
    let mut x = vec![0.0; layout.dim()];
    x[layout.h()] = ln_h0.clamp(lo, hi);
    for i in 0..layout.num_ratios() {
        x[layout.h() + 1 + i] = 2f64.ln();
    }
    let ln_h = |l: usize, x: &[f64]| layout.log_h(l).iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
    let bias = error.c1 * ln_h(layout.levels, &x).exp().powf(error.alpha);
    let share = 0.9 * (eps - bias) / (layout.levels + 1) as f64;
    for l in 0..=layout.levels {
        let sigma = if l == 0 { error.c00 } else { error.c0 * ln_h(l - 1, &x).exp().powf(error.beta) };
        let m = if share > 0.0 { (sigma / share).powi(2) } else { 1.0 };
        x[l] = m.ln().max(margin);
    }
    x
}

/// Moves a start towards smaller meshes and more samples, which keeps it
/// feasible.
fn perturb(x: &mut [f64], layout: Layout, opts: &OptimizerOptions, start: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(start as u64);
    for v in x.iter_mut().take(layout.levels + 1) {
        *v += rng.random_range(0.0..1.0);
    }
    let room = 0.5 * (x[layout.h()] - opts.xi.ln());
    x[layout.h()] -= rng.random_range(0.0..1.0) * room.min(1.0);
    for i in 0..layout.num_ratios() {
        x[layout.h() + 1 + i] += rng.random_range(0.0..0.7);
    }
}

fn check_inputs(cost: &CostModel, error: &ErrorModel, eps: f64, opts: &OptimizerOptions) -> Result<(), OptimizerError> {
    cost.validate().map_err(|e| OptimizerError::Config(e.to_string()))?;
    error.validate().map_err(|e| OptimizerError::Config(e.to_string()))?;
    opts.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(OptimizerError::Config(format!("tolerance must be positive, got {eps}")));
    }
    let floor = error.c1 * opts.xi.powf(error.alpha);
    if eps <= floor {
        return Err(OptimizerError::Infeasible { epsilon: eps, floor });
    }
    Ok(())
}

/// `ε − RMSE bound` at real-valued sample counts.
fn budget_slack(error: &ErrorModel, eps: f64, h: &[f64], m: &[f64]) -> f64 {
    eps - rmse_bound_mlmc_continuous(error, h, m)
}

/// Makes the sample counts integral: `M_ℓ ← max(1, ⌊M_ℓ⌋)`, then the
/// increment with the largest bound reduction per unit work is applied
/// until the accuracy constraint holds again.
pub fn floor_samples(continuous: &ContinuousOptimum, cost: &CostModel, error: &ErrorModel, eps: f64) -> MlmcPlan {
    let h = continuous.mesh_sizes();
    let mut m: Vec<f64> = continuous.samples.iter().map(|v| v.floor().max(1.0)).collect();
    let unit_work: Vec<f64> = h.iter().map(|h| cost.per_sample(*h)).collect();
    let mut steps = 0usize;
    while budget_slack(error, eps, &h, &m) < 0.0 {
        if steps >= 1_000_000 {
            m = continuous.samples.iter().map(|v| v.ceil().max(1.0)).collect();
            break;
        }
        let base = rmse_bound_mlmc_continuous(error, &h, &m);
        let mut best = (0usize, f64::NEG_INFINITY);
        for l in 0..m.len() {
            m[l] += 1.0;
            let gain = (base - rmse_bound_mlmc_continuous(error, &h, &m)) / unit_work[l];
            m[l] -= 1.0;
            if gain > best.1 {
                best = (l, gain);
            }
        }
        m[best.0] += 1.0;
        steps += 1;
    }
    MlmcPlan {
        levels: continuous.levels(),
        h0: continuous.h0,
        ratios: continuous.ratios.clone(),
        samples: m.iter().map(|v| *v as u64).collect(),
    }
}

fn solve(
    cost: &CostModel,
    error: &ErrorModel,
    eps: f64,
    layout: Layout,
    opts: &OptimizerOptions,
) -> Result<Optimum, OptimizerError> {
    check_inputs(cost, error, eps, opts)?;
    let problem = build(cost, error, eps, layout, opts);
    let x0 = initial_point(error, eps, layout, opts);
    let runs: Vec<_> = (0..opts.starts)
        .into_par_iter()
        .map(|start| {
            let mut x = x0.clone();
            if start > 0 {
                perturb(&mut x, layout, opts, start);
            }
            interior_point_solve(&problem, &x, &opts.ipm).map(|r| (start, r))
        })
        .collect();
    let mut best: Option<(usize, (Vec<f64>, super::IpDiagnostics))> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok((start, r)) => {
                let better = match &best {
                    None => true,
                    Some((_, (_, d))) => r.1.objective < d.objective - 1e-12 * d.objective.abs().max(1.0),
                };
                if better {
                    best = Some((start, r));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((start, (x, diag))) = best else {
        return Err(first_err.expect("at least one start"));
    };
    let (h0, ratios, samples) = layout.decode(&x);
    let continuous = ContinuousOptimum { h0, ratios, work: problem.work(&x), samples };
    let plan = floor_samples(&continuous, cost, error, eps);
    let h = plan.mesh_sizes();
    let m: Vec<f64> = plan.samples.iter().map(|&v| v as f64).collect();
    Ok(Optimum {
        variant: layout.variant,
        epsilon: eps,
        levels: layout.levels,
        work: cost.hierarchy_work(&m, &h),
        rmse_bound: rmse_bound_mlmc_continuous(error, &h, &m),
        continuous,
        plan,
        kkt: diag.kkt,
        iterations: diag.iterations,
        start,
        trace: diag.trace,
    })
}

/// Single-level hierarchy minimising `Σ_k μ_k M h^{-γ_k}` subject to
/// `C00 M^{-1/2} + C1 h^α ≤ ε`; `M` becomes the smallest feasible integer.
pub fn optimize_mc(
    cost: &CostModel,
    error: &ErrorModel,
    eps: f64,
    opts: &OptimizerOptions,
) -> Result<Optimum, OptimizerError> {
    solve(cost, error, eps, Layout { variant: Variant::Mc, levels: 0 }, opts)
}

/// Hierarchy with `h_ℓ = h_0 r^{-ℓ}`.
pub fn optimize_mlmc_geometric(
    cost: &CostModel,
    error: &ErrorModel,
    eps: f64,
    levels: usize,
    opts: &OptimizerOptions,
) -> Result<Optimum, OptimizerError> {
    solve(cost, error, eps, Layout { variant: Variant::Geometric, levels }, opts)
}

/// Hierarchy with independent ratios `h_ℓ = h_{ℓ-1} / r_ℓ`.
pub fn optimize_mlmc_free(
    cost: &CostModel,
    error: &ErrorModel,
    eps: f64,
    levels: usize,
    opts: &OptimizerOptions,
) -> Result<Optimum, OptimizerError> {
    solve(cost, error, eps, Layout { variant: Variant::Free, levels }, opts)
}

pub fn optimize(
    variant: Variant,
    cost: &CostModel,
    error: &ErrorModel,
    eps: f64,
    levels: usize,
    opts: &OptimizerOptions,
) -> Result<Optimum, OptimizerError> {
    match variant {
        Variant::Mc => optimize_mc(cost, error, eps, opts),
        _ => solve(cost, error, eps, Layout { variant, levels }, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> (CostModel, ErrorModel) {
        (CostModel::single(1.0, 2.0), ErrorModel { alpha: 1.0, c1: 1.0, beta: 2.0, c0: 0.5, c00: 1.0 })
    }

    #[test]
    fn statistics_only_budget() {
        let cost = CostModel::single(1.0, 2.0);
        let error = ErrorModel { alpha: 1.0, c1: 0.0, beta: 1.0, c0: 0.0, c00: 0.3 };
        let opts = OptimizerOptions { h_max: 4.0, ..Default::default() };
        let o = optimize_mc(&cost, &error, 0.01, &opts).unwrap();
        assert_eq!(o.plan.samples[0], 900);
        assert!((o.continuous.h0 - 4.0).abs() < 1e-6, "{}", o.continuous.h0);
    }

    #[test]
    fn mc_matches_one_dimensional_reduction() {
        // For fixed h the optimal M is ((C00/(ε − C1 h))²; minimise over h.
        let (cost, error) = synthetic();
        let eps = 0.1;
        let o = optimize_mc(&cost, &error, eps, &OptimizerOptions::default()).unwrap();
        let work = |h: f64| (error.c00 / (eps - error.c1 * h)).powi(2) * h.powi(-2);
        // d/dh: minimiser of h^{-2}(ε − h)^{-2} is h = ε/2.
        assert!((o.continuous.h0 - 0.05).abs() < 1e-7, "{}", o.continuous.h0);
        assert!((o.continuous.work - work(0.05)).abs() < 1e-6 * work(0.05));
        assert!(o.kkt.max() <= 1e-8, "{:?}", o.kkt);
        assert!(o.rmse_bound <= eps);
    }

    #[test]
    fn zero_levels_reduce_to_mc() {
        let (cost, error) = synthetic();
        let opts = OptimizerOptions::default();
        let mc = optimize_mc(&cost, &error, 0.05, &opts).unwrap();
        let geo = optimize_mlmc_geometric(&cost, &error, 0.05, 0, &opts).unwrap();
        assert!((mc.continuous.work - geo.continuous.work).abs() <= 1e-10 * mc.continuous.work);
        assert!((mc.continuous.h0 - geo.continuous.h0).abs() <= 1e-8 * mc.continuous.h0);
        assert_eq!(mc.plan.samples, geo.plan.samples);
    }

    #[test]
    fn one_level_free_equals_geometric() {
        let (cost, error) = synthetic();
        let opts = OptimizerOptions::default();
        let geo = optimize_mlmc_geometric(&cost, &error, 0.02, 1, &opts).unwrap();
        let free = optimize_mlmc_free(&cost, &error, 0.02, 1, &opts).unwrap();
        assert!((geo.continuous.work - free.continuous.work).abs() <= 1e-8 * geo.continuous.work);
        let (Ratios::Geometric(r), Ratios::Free(rs)) = (&geo.continuous.ratios, &free.continuous.ratios) else {
            panic!("unexpected ratio kinds");
        };
        assert!((r - rs[0]).abs() <= 1e-6 * r);
    }

    #[test]
    fn free_is_no_worse_than_geometric() {
        let (cost, error) = synthetic();
        let opts = OptimizerOptions::default();
        for eps in [0.05, 0.01] {
            let geo = optimize_mlmc_geometric(&cost, &error, eps, 3, &opts).unwrap();
            let free = optimize_mlmc_free(&cost, &error, eps, 3, &opts).unwrap();
            assert!(free.continuous.work <= geo.continuous.work * (1.0 + 1e-6));
            assert!(free.kkt.max() <= 1e-8 && geo.kkt.max() <= 1e-8);
        }
    }

    #[test]
    fn below_error_floor_is_infeasible() {
        let (cost, error) = synthetic();
        let opts = OptimizerOptions { xi: 1e-3, ..Default::default() };
        match optimize_mc(&cost, &error, 5e-4, &opts) {
            Err(OptimizerError::Infeasible { floor, .. }) => assert!((floor - 1e-3).abs() < 1e-15),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn flooring_keeps_feasible_floors() {
        let error = ErrorModel { alpha: 1.0, c1: 0.1, beta: 2.0, c0: 0.1, c00: 0.2 };
        let cost = CostModel::single(1.0, 2.0);
        let cont =
            ContinuousOptimum { h0: 0.3, ratios: Ratios::Geometric(2.5), samples: vec![59.7, 4.2, 1.1], work: 0.0 };
        let eps = rmse_bound_mlmc_continuous(&error, &cont.mesh_sizes(), &[59.0, 4.0, 1.0]) + 1e-9;
        assert_eq!(floor_samples(&cont, &cost, &error, eps).samples, vec![59, 4, 1]);
    }

    #[test]
    fn flooring_repairs_with_one_increment() {
        let error = ErrorModel { alpha: 1.0, c1: 0.1, beta: 2.0, c0: 0.1, c00: 0.2 };
        let cost = CostModel::single(1.0, 2.0);
        let cont =
            ContinuousOptimum { h0: 0.3, ratios: Ratios::Geometric(2.5), samples: vec![59.7, 4.2, 1.1], work: 0.0 };
        let h = cont.mesh_sizes();
        let eps = rmse_bound_mlmc_continuous(&error, &h, &[59.0, 4.0, 1.0]) - 1e-12;
        let plan = floor_samples(&cont, &cost, &error, eps);
        let total: u64 = plan.samples.iter().sum();
        assert_eq!(total, 65);
        let m: Vec<f64> = plan.samples.iter().map(|&v| v as f64).collect();
        assert!(budget_slack(&error, eps, &h, &m) >= 0.0);
    }

    #[test]
    fn integral_samples_are_unchanged() {
        let (cost, error) = synthetic();
        let cont = ContinuousOptimum { h0: 0.1, ratios: Ratios::Geometric(2.0), samples: vec![400.0, 9.0], work: 0.0 };
        let eps = rmse_bound_mlmc_continuous(&error, &cont.mesh_sizes(), &cont.samples);
        assert_eq!(floor_samples(&cont, &cost, &error, eps).samples, vec![400, 9]);
    }
}
