use std::time::Instant;

use super::boundary::{BoundaryData, LinftyBounds};
use super::continuity::{assemble_continuity, carrier_dirichlet, gather, scatter, Carrier};
use super::fields::{SampleFields, SolutionFields, Timings, Violation};
use super::params::PhysicalParams;
use super::poisson::{assemble_semilinear_poisson, potential_from_w, solve_semilinear_poisson, NewtonOptions};
use super::space::Discretization;
use super::FemError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GummelOptions {
    /// Sup-norm of the update of `(V, U_T ln u, U_T ln v)` in volts.
    pub tol: f64,
    pub max_iters: usize,
    pub newton: NewtonOptions,
}

impl Default for GummelOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 200, newton: NewtonOptions::default() }
    }
}

/// Relative slack allowed when checking the a-priori bounds.
const BOUND_SLACK: f64 = 1e-8;

/// Gummel fixed-point iteration: nonlinear Poisson for `V` given `(u, v)`,
/// then the two linear continuity equations with the recombination
/// denominator frozen at the previous iterate.
pub fn gummel_iterate(
    disc: &Discretization,
    fields: &SampleFields,
    params: &PhysicalParams,
    bc: &BoundaryData,
    opts: &GummelOptions,
) -> Result<SolutionFields, FemError> {
    if !(opts.tol > 0.0) {
        return Err(FemError::Config("Gummel tolerance must be positive".into()));
    }
    params.validate()?;
    fields.validate(disc, params)?;
    let nv = disc.num_nodes();
    let nodal_doping = fields.nodal_doping(disc);
    let bounds = solution_bounds(disc, fields, params, bc)?;
    let mut timings = Timings::default();

    let (mut u, mut v) = initial_carriers(disc, params, bc)?;
    let ln = |x: &[f64]| x.iter().map(|y| if *y > 0.0 { y.ln() } else { 0.0 }).collect::<Vec<_>>();

    let mut w: Option<Vec<f64>> = None;
    let mut potential = vec![0.0; nv];
    let mut history = Vec::new();
    let mut violations = Vec::new();
    let mut newton_total = 0;
    for it in 1..=opts.max_iters {
        let t0 = Instant::now();
        let sys = assemble_semilinear_poisson(disc, fields, &ln(&u), &ln(&v), params, bc)?;
        timings.poisson_assembly += t0.elapsed().as_secs_f64();
        let start = match &w {
            Some(w) => w.clone(),
            None => {
                let t0 = Instant::now();
                let g = sys.initial_guess(&nodal_doping)?;
                timings.poisson_solve += t0.elapsed().as_secs_f64();
                g
            }
        };
        let newton = solve_semilinear_poisson(&sys, &start, &opts.newton)?;
        timings.add(&newton.timings);
        newton_total += newton.iterations;
        let new_potential = potential_from_w(disc, params, &newton.w);

        let (u_new, v_new) = if bc.has_carrier_contact() {
            let solve = |carrier, timings: &mut Timings| -> Result<Vec<f64>, FemError> {
                let t0 = Instant::now();
                let sys = assemble_continuity(disc, &new_potential, carrier, &u, &v, params, bc)?;
                let t1 = Instant::now();
                let start = match carrier {
                    Carrier::N => gather(disc, &u),
                    Carrier::P => gather(disc, &v),
                };
                let x = sys.solve_from(&start)?;
                timings.dd_assembly += (t1 - t0).as_secs_f64();
                timings.dd_solve += t1.elapsed().as_secs_f64();
                Ok(scatter(disc, &x))
            };
            (solve(Carrier::N, &mut timings)?, solve(Carrier::P, &mut timings)?)
        } else {
            (u.clone(), v.clone())
        };

        let mut change = 0.0_f64;
        for i in 0..nv {
            let dv = if w.is_some() { (new_potential[i] - potential[i]).abs() } else { f64::INFINITY };
            change = change.max(dv);
        }
        for &g in disc.si_nodes() {
            change = change
                .max(params.u_t * (u_new[g].ln() - u[g].ln()).abs())
                .max(params.u_t * (v_new[g].ln() - v[g].ln()).abs());
        }
        check_bounds(disc, &bounds, it, &new_potential, &u_new, &v_new, &mut violations);
        history.push(change);
        potential = new_potential;
        u = u_new;
        v = v_new;
        w = Some(newton.w);
        if !change.is_finite() && it > 1 {
            return Err(FemError::Gummel { iterations: it, history });
        }
        if change < opts.tol {
            let n = disc_density(disc, params, &potential, &u, 1.0);
            let p = disc_density(disc, params, &potential, &v, -1.0);
            return Ok(SolutionFields {
                potential,
                u,
                v,
                n,
                p,
                iterations: it,
                history,
                newton_iterations: newton_total,
                bounds,
                violations,
                timings,
            });
        }
    }
    Err(FemError::Gummel { iterations: opts.max_iters, history })
}

fn disc_density(disc: &Discretization, params: &PhysicalParams, potential: &[f64], w: &[f64], sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; disc.num_nodes()];
    for &g in disc.si_nodes() {
        out[g] = params.n_i * (sign * potential[g] / params.u_t).exp() * w[g];
    }
    out
}

/// Quasi-Fermi potential interpolated harmonically between the Ohmic
/// contacts; exact at equilibrium.
fn initial_carriers(
    disc: &Discretization,
    params: &PhysicalParams,
    bc: &BoundaryData,
) -> Result<(Vec<f64>, Vec<f64>), FemError> {
    let nv = disc.num_nodes();
    if !bc.has_carrier_contact() {
        // No carrier contact: intrinsic equilibrium state.
        let mut ones = vec![0.0; nv];
        for &g in disc.si_nodes() {
            ones[g] = 1.0;
        }
        return Ok((ones.clone(), ones));
    }
    let fixed_u = carrier_dirichlet(disc, bc, Carrier::N)?;
    let fixed_phi: Vec<Option<f64>> = fixed_u.iter().map(|f| f.map(|u| -params.u_t * u.ln())).collect();
    let mut a = disc.si_pattern().zeros();
    for (e, &k) in disc.si_triangles().iter().enumerate() {
        a.add_element(e, disc.local_stiffness(k));
    }
    let mut rhs = vec![0.0; fixed_phi.len()];
    a.apply_dirichlet(&fixed_phi, &mut rhs);
    let phi = a.solve(&rhs, true)?;
    let mut u_local: Vec<f64> = phi.iter().map(|x| (-x / params.u_t).exp()).collect();
    let mut v_local: Vec<f64> = phi.iter().map(|x| (x / params.u_t).exp()).collect();
    let fixed_v = carrier_dirichlet(disc, bc, Carrier::P)?;
    for l in 0..u_local.len() {
        if let Some(x) = fixed_u[l] {
            u_local[l] = x;
        }
        if let Some(x) = fixed_v[l] {
            v_local[l] = x;
        }
    }
    Ok((scatter(disc, &u_local), scatter(disc, &v_local)))
}

/// Bounds of the existence theorem evaluated with the discrete data: the
/// Dirichlet potentials, the nodal doping range on silicon, and the range of
/// the interface lift `V_L`.
pub fn solution_bounds(
    disc: &Discretization,
    fields: &SampleFields,
    params: &PhysicalParams,
    bc: &BoundaryData,
) -> Result<LinftyBounds, FemError> {
    let mut vd = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &bc.contacts {
        vd = (vd.0.min(c.v1), vd.1.max(c.v1));
    }
    let doping = fields.nodal_doping(disc);
    let si = gather(disc, &doping);
    let c_range = si.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(*c), hi.max(*c)));
    let c_range = if si.is_empty() { (0.0, 0.0) } else { c_range };
    let vl = interface_lift_range(disc, fields, params)?;
    Ok(LinftyBounds::new(params, bc.k, vd, c_range, vl))
}

/// Range of the solution of the linear problem with zero boundary data and
/// the interface jumps only. Zero when both jumps vanish.
fn interface_lift_range(
    disc: &Discretization,
    fields: &SampleFields,
    params: &PhysicalParams,
) -> Result<(f64, f64), FemError> {
    if params.interface_alpha == 0.0 && params.interface_gamma == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut a = disc.pattern().zeros();
    for (k, eps) in fields.permittivity.iter().enumerate() {
        a.add_element(k, &disc.local_stiffness(k).map(|r| r.map(|x| eps * x)));
    }
    let fixed: Vec<Option<f64>> = disc
        .node_contact()
        .iter()
        .zip(disc.pure_liquid())
        .map(|(c, &liq)| c.map(|_| if liq { -params.interface_alpha } else { 0.0 }))
        .collect();
    let mut rhs: Vec<f64> = disc.interface_load().iter().map(|g| -params.interface_gamma * g).collect();
    a.apply_dirichlet(&fixed, &mut rhs);
    let w = a.solve(&rhs, true)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..w.len() {
        let mut vals = vec![w[i]];
        if disc.mass_liq()[i] > 0.0 {
            vals.push(w[i] + params.interface_alpha);
        }
        if disc.pure_liquid()[i] {
            vals.remove(0);
        }
        for x in vals {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    Ok((lo, hi))
}

fn check_bounds(
    disc: &Discretization,
    b: &LinftyBounds,
    iteration: usize,
    potential: &[f64],
    u: &[f64],
    v: &[f64],
    out: &mut Vec<Violation>,
) {
    let vtol = BOUND_SLACK * (1.0 + b.v_min.abs().max(b.v_max.abs()));
    for (i, &x) in potential.iter().enumerate() {
        if !(x >= b.v_min - vtol) {
            out.push(Violation { iteration, quantity: "V_min".into(), node: i, value: x, bound: b.v_min });
        }
        if !(x <= b.v_max + vtol) {
            out.push(Violation { iteration, quantity: "V_max".into(), node: i, value: x, bound: b.v_max });
        }
    }
    let (lo, hi) = (1.0 / b.k * (1.0 - BOUND_SLACK), b.k * (1.0 + BOUND_SLACK));
    for &g in disc.si_nodes() {
        for (name, x) in [("u", u[g]), ("v", v[g])] {
            if !(x >= lo && x <= hi) {
                let bound = if x < lo { 1.0 / b.k } else { b.k };
                out.push(Violation { iteration, quantity: name.into(), node: g, value: x, bound });
            }
        }
    }
}
