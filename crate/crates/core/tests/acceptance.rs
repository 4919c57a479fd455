//! Acceptance suite: one PASS/FAIL line per criterion plus info lines.
//! Failing criteria are reported, not asserted; the process exits non-zero
//! only if the suite itself cannot run.

mod common;

use std::time::Instant;

use common::{geometric_oracle, mc_oracle};
use mlmc_ddp::calibration::{
    calibrate, discretization_study, fit_cost_model, timing_components, CalibrationConfig, CalibrationReport, CostModel,
};
use mlmc_ddp::estimators::{mc_estimate, mlmc_estimate, ErrorModel, MlmcPlan, Ratios, SeedMode};
use mlmc_ddp::fem::{assemble_semilinear_poisson, QoiKind};
use mlmc_ddp::optimizer::{
    optimize, optimize_mc, optimize_mlmc_free, optimize_mlmc_geometric, select_levels, OptimizerOptions, Variant,
};
use mlmc_ddp::stochastic::{realize_fields, sample_seed, DeviceModel, DeviceSampler, Level};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: Option<bool>,
    detail: String,
}

fn pass(ok: bool, detail: String) -> Outcome {
    Outcome { pass: Some(ok), detail }
}

fn report(n: usize, name: &str, o: &Outcome, seconds: f64) {
    let tag = match o.pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "NOT-EVALUABLE",
    };
    println!("criterion {n:>2} [{tag}] {name}: {} ({seconds:.1} s)", o.detail);
}

fn info(name: &str, detail: String) {
    println!("info [{name}] {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn device(qoi: QoiKind) -> DeviceSampler {
    DeviceSampler::new(DeviceModel { qoi, ..Default::default() }).expect("default device model")
}

fn uniform(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).random::<f64>()
}

fn criterion_1(report: &CalibrationReport) -> Outcome {
    let d = &report.discretization;
    let errs: Vec<String> = d.rows.iter().map(|r| format!("{}:{:.3e}", r.h, r.error)).collect();
    let alpha = d.fit.alpha;
    pass(
        (0.85..=1.1).contains(&alpha),
        format!(
            "alpha = {alpha:.3} (target [0.85, 1.1]), surface field, global seed {}, {} events, h_ref = {}, errors [{}]",
            report.seed,
            d.seeds.len(),
            d.reference_h,
            errs.join(" ")
        ),
    )
}

fn criterion_2() -> Outcome {
    let ms = [100u64, 1_000, 10_000];
    let reps = 200u64;
    let sd: Vec<f64> = ms
        .iter()
        .map(|&m| {
            let means: Vec<f64> = (0..reps)
                .map(|r| mc_estimate(&|_h: f64, s: u64| Ok(uniform(s)), 1.0, m, 1000 + r).unwrap().mean)
                .collect();
            let mu = means.iter().sum::<f64>() / reps as f64;
            (means.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (reps - 1) as f64).sqrt()
        })
        .collect();
    let m: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let s = slope(&m, &sd);
    pass((s + 0.5).abs() <= 0.1, format!("slope = {s:.3} (target -0.5 +- 0.1), sd = [{}], {reps} replicas", sci(&sd)))
}

fn criterion_3() -> Outcome {
    let sampler = |h: f64, s: u64| Ok(uniform(s) + h);
    let plan = MlmcPlan { levels: 3, h0: 1.0, ratios: Ratios::Geometric(2.0), samples: vec![500; 4] };
    let est = mlmc_estimate(&sampler, &plan, 7, SeedMode::Shared).unwrap();
    let h_l = plan.mesh_sizes()[3];
    let mc = mc_estimate(&sampler, h_l, 500, 7).unwrap();
    let diff = (est.mean - mc.mean).abs();
    pass(diff <= 1e-12, format!("|MLMC - MC(h_L)| = {diff:.2e} (tolerance 1e-12)"))
}

fn random_constants(rng: &mut ChaCha8Rng) -> (CostModel, ErrorModel, f64) {
    let error = ErrorModel {
        alpha: rng.random_range(0.5..2.0),
        c1: rng.random_range(0.1..10.0),
        beta: rng.random_range(0.5..3.0),
        c0: rng.random_range(0.01..1.0),
        c00: rng.random_range(0.05..2.0),
    };
    let cost = CostModel::single(rng.random_range(0.01..100.0), rng.random_range(1.0..3.0));
    let eps = rng.random_range(0.005..0.2) * error.c00;
    (cost, error, eps)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = OptimizerOptions::default();
    let sets = 24;
    let (mut worst_gap, mut worst_kkt, mut bad) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..sets {
        let (cost, error, eps) = random_constants(&mut rng);
        let runs = [
            (optimize_mc(&cost, &error, eps, &opts), mc_oracle(&cost, &error, eps, opts.xi, opts.h_max)),
            (
                optimize_mlmc_geometric(&cost, &error, eps, 2, &opts),
                geometric_oracle(&cost, &error, eps, 2, opts.xi, opts.h_max),
            ),
        ];
        for (o, oracle) in runs {
            match o {
                Ok(o) => {
                    let gap = rel(o.continuous.work, oracle);
                    worst_gap = worst_gap.max(gap);
                    worst_kkt = worst_kkt.max(o.kkt.max());
                    if gap > 0.02 || o.kkt.max() > 1e-8 {
                        bad += 1;
                    }
                }
                Err(_) => bad += 1,
            }
        }
    }
    pass(
        bad == 0,
        format!(
            "{sets} constant sets, MC and L = 2: worst gap {worst_gap:.2e}, worst KKT {worst_kkt:.2e}, {bad} misses"
        ),
    )
}

fn eps_grid(c00: f64) -> Vec<f64> {
    [0.1, 0.05, 0.03, 0.02, 0.01, 0.005].iter().map(|r| c00 * r / 0.197).collect()
}

fn min_continuous(cost: &CostModel, error: &ErrorModel, eps: f64, variant: Variant, opts: &OptimizerOptions) -> f64 {
    select_levels(cost, error, eps, variant, 8, opts)
        .map(|s| s.curve.iter().filter_map(|p| p.continuous_work).fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN)
}

fn criterion_5(sets: &[(&str, CostModel, ErrorModel)], opts: &OptimizerOptions) -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    for (name, cost, error) in sets {
        for eps in eps_grid(error.c00) {
            let w: Vec<f64> = [Variant::Free, Variant::Geometric, Variant::Mc]
                .iter()
                .map(|v| min_continuous(cost, error, eps, *v, opts))
                .collect();
            checked += 1;
            if !(w[0] <= w[1] * (1.0 + 1e-6) && w[1] <= w[2] * (1.0 + 1e-6)) {
                violations.push(format!("{name} eps = {eps:.3e}: [{}]", sci(&w)));
            }
        }
    }
    pass(
        violations.is_empty(),
        format!("{checked} (constants, eps) pairs, {} violations {}", violations.len(), violations.join("; ")),
    )
}

fn criterion_6(report: &CalibrationReport, opts: &OptimizerOptions) -> Outcome {
    let (cost, error) = (&report.cost_model, &report.error_model);
    let mut ratios = Vec::new();
    for eps in eps_grid(error.c00) {
        let mc = select_levels(cost, error, eps, Variant::Mc, 0, opts).map(|s| s.best.work);
        let ml = select_levels(cost, error, eps, Variant::Free, 8, opts).map(|s| s.best.work);
        match (mc, ml) {
            (Ok(a), Ok(b)) => ratios.push(a / b),
            (a, b) => return pass(false, format!("eps = {eps:.3e}: optimizer failed ({:?}, {:?})", a.err(), b.err())),
        }
    }
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    pass(
        ratios[0] >= 10.0 && increasing && ratios.len() >= 3,
        format!(
            "work_MC/work_MLMC = {ratios:.3?} for eps/C00 = [0.1 .. 0.005]/0.197; largest-eps ratio >= 10: {}, strictly increasing: {increasing}",
            ratios[0] >= 10.0
        ),
    )
}

fn criterion_7() -> Outcome {
    let cost = CostModel::single(1.0, 2.0);
    let error = ErrorModel { alpha: 1.0, c1: 1.0, beta: 2.0, c0: 0.5, c00: 1.0 };
    let opts = OptimizerOptions::default();
    let levels: Vec<Option<usize>> = [0.1, 0.05, 0.02, 0.01]
        .iter()
        .map(|e| select_levels(&cost, &error, *e, Variant::Geometric, 8, &opts).ok().map(|s| s.best.levels))
        .collect();
    let ok = levels.iter().all(Option::is_some) && levels.windows(2).all(|w| w[1] >= w[0]);
    pass(ok, format!("L = {levels:?} for eps = [0.1, 0.05, 0.02, 0.01]"))
}

/// Closed-form MC optimality for `(h, M)` at `ε`: `C1 h^α = ε − C00/√M`
/// and `γ = 2α C1 h^α / (ε − C1 h^α)`.
fn invert_mc_row(alpha: f64, c00: f64, eps: f64, h: f64, m: f64) -> (f64, f64) {
    let bias = eps - c00 / m.sqrt();
    (bias / h.powf(alpha), 2.0 * alpha * bias / (eps - bias))
}

fn criterion_8() -> Outcome {
    let (alpha, c00, eps) = (0.96, 0.197, 0.1);
    let (c1, gamma) = invert_mc_row(alpha, c00, eps, 0.054, 19.0);
    let error = ErrorModel { alpha, c1, beta: 2.0, c0: 0.276, c00 };
    let cost = CostModel::single(1.0, gamma);
    let opts = OptimizerOptions::default();
    let (Ok(mc), Ok(geo), Ok(free)) = (
        optimize_mc(&cost, &error, eps, &opts),
        optimize_mlmc_geometric(&cost, &error, eps, 2, &opts),
        optimize_mlmc_free(&cost, &error, eps, 2, &opts),
    ) else {
        return Outcome { pass: None, detail: "optimizer failed on the inverted constants".into() };
    };
    let mc_m = mc.continuous.samples[0].floor();
    let residual = rel(mc.continuous.h0, 0.054).max(rel(mc_m, 19.0));
    let r = |rat: &Ratios| match rat {
        Ratios::Geometric(r) => vec![*r],
        Ratios::Free(r) => r.clone(),
    };
    let floors = |s: &[f64]| s.iter().map(|m| m.floor()).collect::<Vec<_>>();
    let mut got1 = vec![geo.continuous.h0];
    got1.extend(r(&geo.continuous.ratios));
    got1.extend(floors(&geo.continuous.samples));
    let mut got2 = vec![free.continuous.h0];
    got2.extend(r(&free.continuous.ratios));
    got2.extend(floors(&free.continuous.samples));
    let want1 = [0.359, 2.650, 59.0, 4.0, 1.0];
    let want2 = [0.366, 2.100, 3.490, 59.0, 6.0, 1.0];
    if residual > 0.05 {
        return Outcome { pass: None, detail: format!("inversion residual {residual:.3} on (h, M) = (0.054, 19)") };
    }
    let worst = |got: &[f64], want: &[f64]| got.iter().zip(want).map(|(g, w)| rel(*g, *w)).fold(0.0, f64::max);
    let (w1, w2) = (worst(&got1, &want1), worst(&got2, &want2));
    pass(
        got1.len() == want1.len() && got2.len() == want2.len() && w1 <= 0.1 && w2 <= 0.1,
        format!(
            "C1 = {c1:.6}, gamma = {gamma:.6}, inversion residual {residual:.2e}; geometric {got1:.3?} (worst {w1:.3}), free {got2:.3?} (worst {w2:.3})"
        ),
    )
}

fn criterion_9(sampler: &DeviceSampler) -> Outcome {
    let n = 200u64;
    let (mut violations, mut failures) = (0usize, 0usize);
    for i in 0..n {
        match sampler.solve(2.5, sample_seed(9, 0, i)) {
            Ok(o) => violations += o.violations,
            Err(_) => failures += 1,
        }
    }
    pass(
        violations == 0 && failures == 0,
        format!("{n} events at h = 2.5: {violations} L-infinity violations, {failures} failed solves"),
    )
}

fn criterion_10(model: &DeviceModel) -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for h in [5.0, 2.5, 1.25, 0.625] {
        let level = Level::new(model, h).unwrap();
        let sample = model.draw(sample_seed(10, 0, 0)).unwrap();
        let fields = realize_fields(&sample, &level.disc, &model.physics, &model.dopants).unwrap();
        let nv = level.disc.num_nodes();
        let zero = vec![0.0; nv];
        let sys = assemble_semilinear_poisson(&level.disc, &fields, &zero, &zero, &model.physics, &level.bc).unwrap();
        let w: Vec<f64> = (0..nv).map(|_| rng.random_range(-0.3..0.3)).collect();
        let jac = sys.jacobian(&w);
        for _ in 0..10 {
            let d: Vec<f64> = (0..nv).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = 1e-6;
            let plus: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w + t * d).collect();
            let minus: Vec<f64> = w.iter().zip(&d).map(|(w, d)| w - t * d).collect();
            let (rp, rm) = (sys.residual(&plus), sys.residual(&minus));
            let jd = jac.mul(&d);
            let num: f64 = jd.iter().zip(rp.iter().zip(&rm)).map(|(j, (p, m))| (j - (p - m) / (2.0 * t)).powi(2)).sum();
            let den: f64 = jd.iter().map(|j| j * j).sum();
            worst = worst.max((num / den).sqrt());
        }
    }
    pass(worst <= 1e-6, format!("worst relative mismatch {worst:.2e} over 10 directions on h = 5, 2.5, 1.25, 0.625"))
}

fn held_out_timing(report: &CalibrationReport) {
    let rows = &report.timing.rows;
    let h_min = rows.iter().map(|r| r.h).fold(f64::INFINITY, f64::min);
    let train: Vec<_> = rows.iter().filter(|r| r.h > h_min).cloned().collect();
    let measured: f64 = rows.iter().filter(|r| r.h == h_min).map(|r| r.median / r.samples as f64).sum();
    match fit_cost_model(&timing_components(&train)) {
        Ok(fit) => {
            let predicted = fit.model.per_sample(h_min);
            let err = rel(predicted, measured);
            info(
                "held-out timing",
                format!(
                    "fit on h > {h_min}, predicted {predicted:.3e} s vs measured {measured:.3e} s at h = {h_min}: {:.1}% ({})",
                    100.0 * err,
                    if err <= 0.3 { "within 30%" } else { "outside 30%" }
                ),
            );
        }
        Err(e) => info("held-out timing", format!("fit failed: {e}")),
    }
}

fn main() {
    let start = Instant::now();
    println!("acceptance suite");
    let opts_cli = OptimizerOptions { h_max: 5.0, ..Default::default() };
    let sampler = device(QoiKind::SurfaceField);
    let cfg = CalibrationConfig::default();

    let t = Instant::now();
    let calibrated = calibrate(&sampler, &cfg, 1).expect("device calibration");
    let t_cal = t.elapsed().as_secs_f64();
    report(1, "discretization order", &criterion_1(&calibrated), t_cal);

    let t = Instant::now();
    report(2, "MC statistical error", &criterion_2(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(3, "telescoping identity", &criterion_3(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(4, "optimizer-oracle equivalence", &criterion_4(), t.elapsed().as_secs_f64());

    let tabulated = ErrorModel { alpha: 0.96, c1: 0.903073, beta: 2.0, c0: 0.276, c00: 0.197 };
    let sets = [
        ("calibrated", calibrated.cost_model.clone(), calibrated.error_model),
        ("tabulated", CostModel::single(1.0, 2.328267), tabulated),
    ];
    let t = Instant::now();
    report(5, "nesting free <= geometric <= MC", &criterion_5(&sets, &opts_cli), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(6, "work ratio with calibrated constants", &criterion_6(&calibrated, &opts_cli), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(7, "level-count trend", &criterion_7(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(8, "table regression", &criterion_8(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(9, "solver invariants", &criterion_9(&sampler), t.elapsed().as_secs_f64());
    let t = Instant::now();
    report(10, "Poisson Jacobian check", &criterion_10(sampler.model()), t.elapsed().as_secs_f64());

    let m = calibrated.error_model;
    info(
        "calibrated constants",
        format!(
            "alpha {:.3}, C1 {:.3e}, beta {:.3}, C0 {:.3e}, C00 {:.3e}; calibration took {t_cal:.1} s",
            m.alpha, m.c1, m.beta, m.c0, m.c00
        ),
    );
    let gammas: Vec<String> =
        calibrated.cost_model.terms.iter().map(|t| format!("{} {:.3}", t.label, t.gamma)).collect();
    info("cost exponents", gammas.join(", "));
    held_out_timing(&calibrated);
    let sigma: Vec<f64> = calibrated.variance.levels.iter().skip(1).map(|l| l.sigma).collect();
    info(
        "level variance",
        format!(
            "sigma of level differences [{}], monotone decreasing: {}",
            sci(&sigma),
            sigma.windows(2).all(|w| w[1] <= w[0])
        ),
    );
    let t = Instant::now();
    match discretization_study(&device(QoiKind::MeanPotential), &cfg, 1) {
        Ok(d) => info(
            "mean potential order",
            format!(
                "alpha = {:.3} for the mean potential over silicon ({:.1} s)",
                d.fit.alpha,
                t.elapsed().as_secs_f64()
            ),
        ),
        Err(e) => info("mean potential order", format!("study failed: {e}")),
    }
    let bound = {
        let e = calibrated.error_model;
        e.c1 * 0.054f64.powf(e.alpha) + e.c00 / 19f64.sqrt()
    };
    info(
        "MC bound at (h, M) = (0.054, 19)",
        format!("{bound:.3e} with calibrated constants (<= 0.1: {})", bound <= 0.1),
    );
    let l_zero = optimize(Variant::Geometric, &sets[1].1, &tabulated, 0.1, 0, &OptimizerOptions::default())
        .map(|o| o.continuous.work);
    info("L = 0 geometric work", format!("{l_zero:?}"));
    println!("acceptance suite finished in {:.1} s", start.elapsed().as_secs_f64());
}
