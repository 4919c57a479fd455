use std::time::Instant;

use super::boundary::BoundaryData;
use super::fields::{SampleFields, Timings};
use super::params::PhysicalParams;
use super::space::Discretization;
use super::sparse::SymMatrix;
use super::FemError;

const EXP_CAP: f64 = 700.0;

fn cexp(x: f64) -> f64 {
    x.clamp(-EXP_CAP, EXP_CAP).exp()
}

/// Discrete semilinear Poisson problem for the continuous part `W` of the
/// potential. The potential is `V = W + α` on liquid elements and `V = W`
/// elsewhere, so the interface jump never enters the stiffness.
#[derive(Debug, Clone)]
pub struct PoissonSystem<'a> {
    disc: &'a Discretization,
    params: &'a PhysicalParams,
    stiffness: SymMatrix<'a>,
    fixed: Vec<Option<f64>>,
    ln_u: Vec<f64>,
    ln_v: Vec<f64>,
    /// `λ b_i - γ g_i`.
    load: Vec<f64>,
}

pub fn assemble_semilinear_poisson<'a>(
    disc: &'a Discretization,
    fields: &SampleFields,
    ln_u: &[f64],
    ln_v: &[f64],
    params: &'a PhysicalParams,
    bc: &BoundaryData,
) -> Result<PoissonSystem<'a>, FemError> {
    fields.validate(disc, params)?;
    let nv = disc.num_nodes();
    if ln_u.len() != nv || ln_v.len() != nv {
        return Err(FemError::Assembly("carrier state does not match the mesh".into()));
    }
    let mut stiffness = disc.pattern().zeros();
    for (k, a) in fields.permittivity.iter().enumerate() {
        let kl = disc.local_stiffness(k);
        let scaled = kl.map(|row| row.map(|x| a * x));
        stiffness.add_element(k, &scaled);
    }
    let fixed = potential_dirichlet(disc, params, bc)?;
    let lambda = params.lambda();
    let load = fields
        .doping_load
        .iter()
        .zip(disc.interface_load())
        .map(|(b, g)| lambda * b - params.interface_gamma * g)
        .collect();
    Ok(PoissonSystem { disc, params, stiffness, fixed, ln_u: ln_u.to_vec(), ln_v: ln_v.to_vec(), load })
}

/// Dirichlet values of `W` on contact nodes.
pub fn potential_dirichlet(
    disc: &Discretization,
    params: &PhysicalParams,
    bc: &BoundaryData,
) -> Result<Vec<Option<f64>>, FemError> {
    let fixed: Vec<Option<f64>> = disc
        .node_contact()
        .iter()
        .zip(disc.pure_liquid())
        .map(|(c, &liq)| {
            c.map(|c| {
                let shift = if liq { params.interface_alpha } else { 0.0 };
                bc.contacts[c].v1 - shift
            })
        })
        .collect();
    if fixed.iter().all(Option::is_none) {
        return Err(FemError::Config("the potential has no Dirichlet nodes".into()));
    }
    Ok(fixed)
}

/// Options of the damped Newton method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub max_failed_steps: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iters: 50, max_halvings: 10, max_failed_steps: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub scale: f64,
    /// Step halvings applied in each iteration.
    pub damping: Vec<usize>,
    pub timings: Timings,
}

impl<'a> PoissonSystem<'a> {
    pub fn discretization(&self) -> &'a Discretization {
        self.disc
    }

    pub fn dirichlet(&self) -> &[Option<f64>] {
        &self.fixed
    }

    pub fn stiffness(&self) -> &SymMatrix<'a> {
        &self.stiffness
    }

    /// Value and derivative of the lumped charge terms at node `i`, and the
    /// magnitude of their parts.
    fn reaction(&self, i: usize, w: f64) -> (f64, f64, f64) {
        let p = self.params;
        let lambda = p.lambda();
        let (mut f, mut df, mut mag) = (0.0, 0.0, 0.0);
        let msi = self.disc.mass_si()[i];
        if msi > 0.0 {
            let psi = w / p.u_t;
            let n = cexp(psi + self.ln_u[i]);
            let pp = cexp(-psi + self.ln_v[i]);
            let c = lambda * msi * p.n_i;
            f += c * (n - pp);
            df += c * (n + pp) / p.u_t;
            mag += c * (n + pp);
        }
        let mliq = self.disc.mass_liq()[i];
        if mliq > 0.0 && p.eta > 0.0 {
            let x = (p.beta * (w + p.interface_alpha - p.phi)).clamp(-EXP_CAP, EXP_CAP);
            let c = lambda * mliq * 2.0 * p.eta;
            f += c * x.sinh();
            df += c * p.beta * x.cosh();
            mag += c * x.sinh().abs();
        }
        (f, df, mag)
    }

    /// Residual on every node, Dirichlet rows included.
    pub fn residual(&self, w: &[f64]) -> Vec<f64> {
        let mut r = self.stiffness.mul(w);
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += self.reaction(i, w[i]).0 - self.load[i];
        }
        r
    }

    /// Largest nodal sum of term magnitudes over the free nodes.
    pub fn residual_scale(&self, w: &[f64]) -> f64 {
        let kw = self.stiffness.abs_mul(w);
        (0..w.len())
            .filter(|&i| self.fixed[i].is_none())
            .map(|i| kw[i] + self.reaction(i, w[i]).2 + self.load[i].abs())
            .fold(0.0, f64::max)
    }

    /// Jacobian on every node, Dirichlet rows included.
    pub fn jacobian(&self, w: &[f64]) -> SymMatrix<'a> {
        let mut j = self.stiffness.clone();
        for (i, &wi) in w.iter().enumerate() {
            j.add_diag(i, self.reaction(i, wi).1);
        }
        j
    }

    fn free_norms(&self, r: &[f64]) -> (f64, f64) {
        let mut two = 0.0;
        let mut inf = 0.0_f64;
        for (ri, f) in r.iter().zip(&self.fixed) {
            if f.is_none() {
                two += ri * ri;
                inf = inf.max(ri.abs());
            }
        }
        (two.sqrt(), inf)
    }

    /// Starting point: local charge neutrality on silicon, the electrolyte
    /// Fermi level on liquid nodes, Dirichlet data on contacts and a Laplace
    /// solve in between.
    pub fn initial_guess(&self, nodal_doping: &[f64]) -> Result<Vec<f64>, FemError> {
        let p = self.params;
        let n = self.disc.num_nodes();
        let mut fixed = self.fixed.clone();
        for i in 0..n {
            if fixed[i].is_some() {
                continue;
            }
            if self.disc.mass_si()[i] > 0.0 {
                let c = nodal_doping[i];
                let (lu, lv) = (self.ln_u[i], self.ln_v[i]);
                // n_i u x - n_i v / x = C with x = e^{ψ}.
                let root = (c * c + 4.0 * p.n_i * p.n_i * (lu + lv).exp()).sqrt();
                let ln_x = if c >= 0.0 {
                    ((c + root) / (2.0 * p.n_i)).ln() - lu
                } else {
                    (2.0 * p.n_i / (root - c)).ln() + lv
                };
                fixed[i] = Some(p.u_t * ln_x);
            } else if self.disc.mass_liq()[i] > 0.0 {
                fixed[i] = Some(p.phi - p.interface_alpha);
            }
        }
        let mut a = self.stiffness.clone();
        let mut rhs = vec![0.0; n];
        a.apply_dirichlet(&fixed, &mut rhs);
        a.solve(&rhs, true)
    }
}

pub fn solve_semilinear_poisson(
    sys: &PoissonSystem<'_>,
    initial: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, FemError> {
    if initial.len() != sys.disc.num_nodes() || initial.iter().any(|x| !x.is_finite()) {
        return Err(FemError::Config("initial guess must be finite and match the mesh".into()));
    }
    let mut timings = Timings::default();
    let mut w: Vec<f64> = initial.iter().zip(&sys.fixed).map(|(x, f)| f.unwrap_or(*x)).collect();
    let t0 = Instant::now();
    let mut r = sys.residual(&w);
    let (mut norm2, mut norm_inf) = sys.free_norms(&r);
    let mut scale = sys.residual_scale(&w);
    timings.poisson_assembly += t0.elapsed().as_secs_f64();
    let mut damping = Vec::new();
    let mut failed = 0usize;
    let mut it = 0usize;
    loop {
        if norm_inf <= opts.rel_tol * scale || norm_inf == 0.0 {
            return Ok(NewtonOutcome { w, iterations: it, residual: norm_inf, scale, damping, timings });
        }
        if it >= opts.max_iters {
            return Err(FemError::Newton { iterations: it, residual: norm_inf, last: w });
        }
        it += 1;
        let t0 = Instant::now();
        let mut j = sys.jacobian(&w);
        j.clear_rows(|i| sys.fixed[i].is_some());
        let rhs: Vec<f64> = r.iter().zip(&sys.fixed).map(|(ri, f)| if f.is_some() { 0.0 } else { -ri }).collect();
        timings.poisson_assembly += t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let dw = j.solve(&rhs, true)?;
        timings.poisson_solve += t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let mut step = 1.0;
        let mut halvings = 0;
        let (mut w_new, mut r_new, mut n2_new, mut ninf_new);
        loop {
            w_new = w.iter().zip(&dw).map(|(a, b)| a + step * b).collect::<Vec<_>>();
            r_new = sys.residual(&w_new);
            (n2_new, ninf_new) = sys.free_norms(&r_new);
            if n2_new <= norm2 || halvings >= opts.max_halvings {
                break;
            }
            step *= 0.5;
            halvings += 1;
        }
        damping.push(halvings);
        if n2_new > norm2 {
            failed += 1;
        } else {
            failed = 0;
        }
        let step_small = dw.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            <= 1e-13 * (1.0 + w.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
        w = w_new;
        r = r_new;
        norm2 = n2_new;
        norm_inf = ninf_new;
        scale = sys.residual_scale(&w);
        timings.poisson_assembly += t0.elapsed().as_secs_f64();
        if failed >= opts.max_failed_steps {
            return Err(FemError::Newton { iterations: it, residual: norm_inf, last: w });
        }
        // Round-off floor: the update no longer moves the iterate.
        if step_small && norm_inf <= 1e-6 * scale {
            return Ok(NewtonOutcome { w, iterations: it, residual: norm_inf, scale, damping, timings });
        }
    }
}

/// Nodal potential `V` from `W`.
pub fn potential_from_w(disc: &Discretization, params: &PhysicalParams, w: &[f64]) -> Vec<f64> {
    w.iter().zip(disc.pure_liquid()).map(|(x, &liq)| if liq { x + params.interface_alpha } else { *x }).collect()
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fem::testing::{device, layered};
    use crate::mesh::{ContactSegment, Side, Subdomain};

    #[test]
    fn layered_dielectric_is_piecewise_linear() {
        let params = PhysicalParams { eta: 0.0, ..Default::default() };
        let contacts = vec![ContactSegment::new("b", Side::Bottom, 0.0), ContactSegment::new("t", Side::Top, 1.0)];
        let disc = layered(vec![(Subdomain::Oxide, 10.0), (Subdomain::Liquid, 10.0)], 12.0, contacts, 2.0);
        let bc = BoundaryData::from_mesh(disc.mesh(), &params);
        let fields = SampleFields::nominal(&disc, &params);
        let zero = vec![0.0; disc.num_nodes()];
        let sys = assemble_semilinear_poisson(&disc, &fields, &zero, &zero, &params, &bc).unwrap();
        let out =
            solve_semilinear_poisson(&sys, &sys.initial_guess(&zero).unwrap(), &NewtonOptions::default()).unwrap();
        // a_ox s1 = a_liq s2, 10 (s1 + s2) = 1
        let s1 = 0.1 * params.a_liq / (params.a_ox + params.a_liq);
        let s2 = s1 * params.a_ox / params.a_liq;
        for (x, w) in disc.mesh().vertices().iter().zip(&out.w) {
            let exact = if x[1] <= 10.0 { s1 * x[1] } else { 10.0 * s1 + s2 * (x[1] - 10.0) };
            assert!((w - exact).abs() < 1e-12, "y = {}: {w} vs {exact}", x[1]);
        }
    }

    #[test]
    fn intrinsic_equilibrium_is_flat() {
        let params = PhysicalParams { c_dop: 0.0, ..Default::default() };
        let contacts = vec![ContactSegment::new("l", Side::Left, 0.0), ContactSegment::new("r", Side::Right, 0.0)];
        let disc = layered(vec![(Subdomain::Silicon, 20.0)], 30.0, contacts, 5.0);
        let bc = BoundaryData::from_mesh(disc.mesh(), &params);
        let fields = SampleFields::nominal(&disc, &params);
        let zero = vec![0.0; disc.num_nodes()];
        let sys = assemble_semilinear_poisson(&disc, &fields, &zero, &zero, &params, &bc).unwrap();
        let start: Vec<f64> = (0..disc.num_nodes()).map(|i| 0.05 * (i as f64).sin()).collect();
        let out = solve_semilinear_poisson(&sys, &start, &NewtonOptions::default()).unwrap();
        assert!(out.w.iter().all(|w| w.abs() < 1e-10));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (disc, params, bc) = device(5.0);
        let fields = SampleFields::nominal(&disc, &params);
        let n = disc.num_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ln_u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ln_v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sys = assemble_semilinear_poisson(&disc, &fields, &ln_u, &ln_v, &params, &bc).unwrap();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-0.3..0.3)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jd = sys.jacobian(&w).mul(&d);
        let t = 1e-6;
        let shift = |s: f64| w.iter().zip(&d).map(|(a, b)| a + s * b).collect::<Vec<_>>();
        let (rp, rm) = (sys.residual(&shift(t)), sys.residual(&shift(-t)));
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * t)).collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = jd.iter().zip(&fd).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-6 * norm(&jd), "{} vs {}", norm(&diff), norm(&jd));
    }

    #[test]
    fn newton_converges_on_the_device() {
        let (disc, params, bc) = device(5.0);
        let fields = SampleFields::nominal(&disc, &params);
        let zero = vec![0.0; disc.num_nodes()];
        let sys = assemble_semilinear_poisson(&disc, &fields, &zero, &zero, &params, &bc).unwrap();
        let start = sys.initial_guess(&fields.nodal_doping(&disc)).unwrap();
        let opts = NewtonOptions::default();
        let out = solve_semilinear_poisson(&sys, &start, &opts).unwrap();
        assert!(out.residual <= opts.rel_tol * out.scale);
        assert!(out.iterations < 30);
        for (w, f) in out.w.iter().zip(sys.dirichlet()) {
            if let Some(f) = f {
                assert_eq!(w, f);
            }
        }
    }

    #[test]
    fn wrong_initial_guess_is_rejected() {
        let (disc, params, bc) = device(10.0);
        let fields = SampleFields::nominal(&disc, &params);
        let zero = vec![0.0; disc.num_nodes()];
        let sys = assemble_semilinear_poisson(&disc, &fields, &zero, &zero, &params, &bc).unwrap();
        assert!(solve_semilinear_poisson(&sys, &zero[1..], &NewtonOptions::default()).is_err());
        let mut bad = zero.clone();
        bad[0] = f64::NAN;
        assert!(solve_semilinear_poisson(&sys, &bad, &NewtonOptions::default()).is_err());
    }
}
