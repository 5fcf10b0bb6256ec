//! The nonlinear layer: effective-velocity transform, nonlinear right-hand
//! sides, the local and global fixed-point maps, and the Picard driver with
//! contraction reporting.

mod maps;
mod picard;
mod residual;

pub use maps::{
    effective_momenta, global_map_psi3, hybrid_map_psi4, local_map_psi, nonlinear_rhs_global,
    nonlinear_rhs_local, reconstruct, NonlinearRhs, PicardIterate,
};
pub use picard::{
    bilinear_duhamel_ratio, calibrate, calibration_trajectory, free_evolution, iterate_distance,
    measure_smallness, picard_drive, picard_solve, random_smooth_field, Calibration,
    IterationReport, MapKind, SolveOutcome,
};
pub use residual::{residual_check, ResidualRow};

use crate::error::{Error, Result};
use crate::norms::CarlesonSampling;
use crate::semigroup::LinearParams;

/// Which display defines the grad-div pairing of the second global map: the
/// defining display uses the c2 density diffusion, an alternative later
/// display repeats c1. Both are kept behind this switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Psi2Pairing {
    /// W_{c2, mu, -sqrt(mu^2-kappa^2), beta} (the defining display).
    Eq381,
    /// W_{c1, mu, -sqrt(mu^2-kappa^2), beta} (always degenerate nu = c).
    Eq386,
}

/// Physical parameters of the Korteweg system with a power pressure law
/// P(rho) = a rho^gamma.
#[derive(Debug, Clone, Copy)]
pub struct KortewegParams {
    pub mu: f64,
    pub kappa: f64,
    pub rho_bar: f64,
    pub pressure_a: f64,
    pub pressure_gamma: f64,
}

impl KortewegParams {
    pub fn new(mu: f64, kappa: f64, rho_bar: f64, pressure_a: f64, pressure_gamma: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::domain(format!("mu must be > 0, got {mu}")));
        }
        let k2 = kappa * kappa;
        if !(k2 > 0.0) || k2 > mu * mu {
            return Err(Error::domain(format!(
                "capillarity must satisfy 0 < kappa^2 <= mu^2, got kappa = {kappa}, mu = {mu}"
            )));
        }
        if !(rho_bar > 0.0) {
            return Err(Error::domain(format!("rho_bar must be > 0, got {rho_bar}")));
        }
        if !(pressure_a > 0.0) || !(pressure_gamma >= 1.0) {
            return Err(Error::domain(format!(
                "pressure law needs a > 0 and gamma >= 1, got a = {pressure_a}, gamma = {pressure_gamma}"
            )));
        }
        Ok(KortewegParams {
            mu,
            kappa,
            rho_bar,
            pressure_a,
            pressure_gamma,
        })
    }

    /// sqrt(mu^2 - kappa^2), the half gap between the effective diffusivities.
    pub fn root_gap(&self) -> f64 {
        (self.mu * self.mu - self.kappa * self.kappa).max(0.0).sqrt()
    }

    /// c1 = mu - sqrt(mu^2 - kappa^2).
    pub fn c1(&self) -> f64 {
        self.mu - self.root_gap()
    }

    /// c2 = mu + sqrt(mu^2 - kappa^2).
    pub fn c2(&self) -> f64 {
        self.mu + self.root_gap()
    }

    /// True when kappa^2 = mu^2, where both effective velocities coincide.
    pub fn degenerate(&self) -> bool {
        self.root_gap() < 1e-12 * self.mu
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.pressure_a * rho.powf(self.pressure_gamma)
    }

    pub fn pressure_prime(&self, rho: f64) -> f64 {
        self.pressure_a * self.pressure_gamma * rho.powf(self.pressure_gamma - 1.0)
    }

    /// beta = P'(rho_bar) > 0.
    pub fn beta(&self) -> f64 {
        self.pressure_prime(self.rho_bar)
    }

    /// Linear coefficients of the (q, m1) global map.
    pub fn linear_params_psi1(&self) -> LinearParams {
        LinearParams::new(self.c1(), self.mu, self.root_gap(), self.beta())
            .expect("valid by construction")
    }

    /// Linear coefficients of the (q, m2) global map under the chosen pairing.
    pub fn linear_params_psi2(&self, pairing: Psi2Pairing) -> LinearParams {
        let c = match pairing {
            Psi2Pairing::Eq381 => self.c2(),
            Psi2Pairing::Eq386 => self.c1(),
        };
        LinearParams::new(c, self.mu, -self.root_gap(), self.beta())
            .expect("valid by construction")
    }
}

/// Ball, horizon and stopping parameters of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct FixedPointConfig {
    /// Momentum-norm ball radius.
    pub r: f64,
    /// Short-time ball radius of the hybrid scheme.
    pub r1: f64,
    /// Horizon of the slab.
    pub horizon: f64,
    /// Reciprocal lower density bound: the iteration expects rho >= 1/m_bound.
    pub m_bound: f64,
    /// Weight of the L^inf density term in the iteration metric
    /// (distinct from the pressure coefficient beta).
    pub weight_beta: f64,
    /// Smallness threshold for the initial momenta.
    pub eps1: f64,
    /// Picard stopping tolerance on successive distances.
    pub tol: f64,
    pub max_iter: usize,
    /// Gauss–Lobatto slabs per trajectory interval in the Duhamel integrals.
    pub quad_slabs: usize,
    /// Decay exponent used by the X-norm distance of the global map.
    pub s1: f64,
    /// Sampling resolution of the E_T-type distances.
    pub sampling: CarlesonSampling,
    pub pairing: Psi2Pairing,
}

impl FixedPointConfig {
    pub fn new(horizon: f64) -> Self {
        FixedPointConfig {
            r: 1.0,
            r1: 1.0,
            horizon,
            m_bound: 2.0,
            weight_beta: 4.0,
            eps1: 0.05,
            tol: 1e-8,
            max_iter: 24,
            quad_slabs: 1,
            s1: 0.8,
            sampling: CarlesonSampling {
                center_stride: 8,
                t_levels: 12,
                s_levels: 20,
                subdiv: 1,
            },
            pairing: Psi2Pairing::Eq381,
        }
    }
}
