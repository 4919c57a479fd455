use serde::{Deserialize, Serialize};

use super::FemError;

/// Vacuum permittivity in F/m.
pub const EPS0: f64 = 8.8541878128e-12;

/// Material and operating parameters. Lengths are in nm, densities in cm⁻³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Elementary charge (C).
    pub q: f64,
    /// Thermal voltage (V).
    pub u_t: f64,
    pub n_i: f64,
    pub tau_n: f64,
    pub tau_p: f64,
    /// Mobilities in cm²/(V·s).
    pub mu_n: f64,
    pub mu_p: f64,
    /// Ionic concentration of the electrolyte.
    pub eta: f64,
    /// Inverse thermal energy q/(k_B T) of the ions (1/V).
    pub beta: f64,
    /// Fermi level of the electrolyte (V).
    pub phi: f64,
    /// Nominal dopant concentration (magnitude).
    pub c_dop: f64,
    /// Charge sign of one dopant atom: -1 for acceptors (boron), +1 for donors.
    pub dopant_sign: f64,
    pub a_si: f64,
    pub a_ox: f64,
    pub a_liq: f64,
    pub a_dop: f64,
    /// Potential jump across the interface (liquid side minus oxide side, V).
    pub interface_alpha: f64,
    /// Jump of the displacement flux across the interface (V/nm, scaled by ε0).
    pub interface_gamma: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        let u_t = 0.025852;
        Self {
            q: 1.602176634e-19,
            u_t,
            n_i: 1.0e10,
            tau_n: 1.0e-7,
            tau_p: 1.0e-7,
            mu_n: 1417.0,
            mu_p: 470.5,
            eta: 6.022e17,
            beta: 1.0 / u_t,
            phi: 0.0,
            c_dop: 2.0e17,
            dopant_sign: -1.0,
            a_si: 11.7,
            a_ox: 3.9,
            a_liq: 78.0,
            a_dop: 4.2,
            interface_alpha: 0.0,
            interface_gamma: 0.0,
        }
    }
}

impl PhysicalParams {
    /// `q/ε0` converted so that `λ · (cm⁻³) · (nm²)` is a potential in V.
    pub fn lambda(&self) -> f64 {
        self.q / EPS0 * 1e-12
    }

    /// Signed nominal net doping `C_dop` (donors positive).
    pub fn net_doping(&self) -> f64 {
        self.dopant_sign * self.c_dop
    }

    /// Diffusivities `U_T μ` in nm²/s.
    pub fn diffusivity_n(&self) -> f64 {
        self.u_t * self.mu_n * 1e14
    }

    pub fn diffusivity_p(&self) -> f64 {
        self.u_t * self.mu_p * 1e14
    }

    pub fn validate(&self) -> Result<(), FemError> {
        let positive = [
            ("q", self.q),
            ("u_t", self.u_t),
            ("n_i", self.n_i),
            ("tau_n", self.tau_n),
            ("tau_p", self.tau_p),
            ("mu_n", self.mu_n),
            ("mu_p", self.mu_p),
            ("beta", self.beta),
            ("a_si", self.a_si),
            ("a_ox", self.a_ox),
            ("a_liq", self.a_liq),
            ("a_dop", self.a_dop),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(FemError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let nonneg = [("eta", self.eta), ("c_dop", self.c_dop)];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(FemError::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.dopant_sign != 1.0 && self.dopant_sign != -1.0 {
            return Err(FemError::Config("dopant_sign must be +1 or -1".into()));
        }
        for (name, v) in
            [("phi", self.phi), ("interface_alpha", self.interface_alpha), ("interface_gamma", self.interface_gamma)]
        {
            if !v.is_finite() {
                return Err(FemError::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}
