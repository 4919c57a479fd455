#![allow(dead_code)]

use mlmc_ddp::calibration::CostModel;
use mlmc_ddp::estimators::ErrorModel;

/// Least `Σ w_ℓ M_ℓ` with `Σ a_ℓ M_ℓ^{-1/2} ≤ budget` and `M_ℓ ≥ 1`.
/// Unclamped counts follow `M_ℓ ∝ (a_ℓ/w_ℓ)^{2/3}`; counts falling below 1
/// are clamped and the rest re-solved on the remaining budget.
pub fn optimal_samples(a: &[f64], w: &[f64], budget: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut clamped = vec![false; n];
    loop {
        let rest: f64 = budget - (0..n).filter(|&l| clamped[l]).map(|l| a[l]).sum::<f64>();
        let s: f64 = (0..n).filter(|&l| !clamped[l]).map(|l| a[l].powf(2.0 / 3.0) * w[l].powf(1.0 / 3.0)).sum();
        if rest <= 0.0 {
            return None;
        }
        let m: Vec<f64> =
            (0..n).map(|l| if clamped[l] { 1.0 } else { (a[l] / w[l]).powf(2.0 / 3.0) * (s / rest).powi(2) }).collect();
        let newly: Vec<usize> = (0..n).filter(|&l| !clamped[l] && m[l] < 1.0).collect();
        if newly.is_empty() {
            return Some(m);
        }
        for l in newly {
            clamped[l] = true;
        }
    }
}

/// Minimal work for fixed mesh sizes, or `None` when the bias alone
/// exceeds `eps`.
pub fn work_for_meshes(cost: &CostModel, error: &ErrorModel, eps: f64, h: &[f64]) -> Option<f64> {
    let last = h.len() - 1;
    let budget = eps - error.c1 * h[last].powf(error.alpha);
    if budget <= 0.0 {
        return None;
    }
    let a: Vec<f64> =
        (0..h.len()).map(|l| if l == 0 { error.c00 } else { error.c0 * h[l - 1].powf(error.beta) }).collect();
    let w: Vec<f64> = h.iter().map(|h| cost.per_sample(*h)).collect();
    let m = optimal_samples(&a, &w, budget)?;
    Some(m.iter().zip(&w).map(|(m, w)| m * w).sum())
}

/// Box-constrained minimisation of `f` over `lo ≤ z ≤ hi` by a full grid
/// followed by compass search around the best grid point.
pub fn grid_then_refine(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], points: usize) -> (Vec<f64>, f64) {
    let d = lo.len();
    let at = |idx: &[usize]| -> Vec<f64> {
        (0..d).map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (points - 1) as f64).collect()
    };
    let mut idx = vec![0usize; d];
    let mut best = (at(&idx), f64::INFINITY);
    loop {
        let z = at(&idx);
        let v = f(&z);
        if v < best.1 {
            best = (z, v);
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < points {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let mut step: Vec<f64> = (0..d).map(|k| (hi[k] - lo[k]) / (points - 1) as f64).collect();
    while step.iter().any(|s| *s > 1e-10) {
        let mut moved = false;
        for k in 0..d {
            for sign in [-1.0, 1.0] {
                let mut z = best.0.clone();
                z[k] = (z[k] + sign * step[k]).clamp(lo[k], hi[k]);
                let v = f(&z);
                if v < best.1 {
                    best = (z, v);
                    moved = true;
                }
            }
        }
        if !moved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    best
}

/// Independent optimum of the MC problem over `ln h`.
pub fn mc_oracle(cost: &CostModel, error: &ErrorModel, eps: f64, xi: f64, h_max: f64) -> f64 {
    let f = |z: &[f64]| work_for_meshes(cost, error, eps, &[z[0].exp()]).unwrap_or(f64::INFINITY);
    grid_then_refine(&f, &[xi.ln()], &[h_max.ln()], 4001).1
}

/// Independent optimum of the geometric two-correction problem over
/// `(ln h0, ln r)`.
pub fn geometric_oracle(cost: &CostModel, error: &ErrorModel, eps: f64, levels: usize, xi: f64, h_max: f64) -> f64 {
    let f = |z: &[f64]| {
        let (h0, r) = (z[0].exp(), z[1].exp());
        let h: Vec<f64> = (0..=levels).map(|l| h0 / r.powi(l as i32)).collect();
        if h[levels] < xi {
            return f64::INFINITY;
        }
        work_for_meshes(cost, error, eps, &h).unwrap_or(f64::INFINITY)
    };
    grid_then_refine(&f, &[xi.ln(), 0.0], &[h_max.ln(), 6.0], 301).1
}

/// Independent optimum with one ratio per level over `(ln h0, ln r_1..)`.
pub fn free_oracle(cost: &CostModel, error: &ErrorModel, eps: f64, levels: usize, xi: f64, h_max: f64) -> f64 {
    let f = |z: &[f64]| {
        let mut h = vec![z[0].exp()];
        for l in 1..=levels {
            h.push(h[l - 1] / z[l].exp());
        }
        if h[levels] < xi {
            return f64::INFINITY;
        }
        work_for_meshes(cost, error, eps, &h).unwrap_or(f64::INFINITY)
    };
    let mut lo = vec![xi.ln()];
    let mut hi = vec![h_max.ln()];
    lo.extend(std::iter::repeat_n(0.0, levels));
    hi.extend(std::iter::repeat_n(6.0, levels));
    grid_then_refine(&f, &lo, &hi, 41).1
}
