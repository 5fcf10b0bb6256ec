//! Reference initial data and estimators: Lamb–Oseen vortex fields, shock
//! densities, scaling twins, and decay-exponent fitting.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// Lamb–Oseen vortex initialized at a positive time so the Gaussian core is
/// resolved on the grid; circulation `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct OseenSpec {
    pub alpha: f64,
    pub t0: f64,
    pub center: [f64; 2],
}

impl OseenSpec {
    pub fn new(alpha: f64, t0: f64, center: [f64; 2]) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::domain(format!("t0 must be > 0, got {t0}")));
        }
        Ok(OseenSpec { alpha, t0, center })
    }

    fn check_core(&self, grid: &TorusGrid, t: f64) -> Result<()> {
        if 4.0 * t.sqrt() >= grid.side_length() / 8.0 {
            return Err(Error::domain(format!(
                "Gaussian core too large: 4 sqrt(t) = {} must be < L/8 = {}",
                4.0 * t.sqrt(),
                grid.side_length() / 8.0
            )));
        }
        Ok(())
    }
}

/// Gaussian vorticity profile G(z) = e^{-|z|^2/4} / (4 pi).
fn oseen_g(z_sq: f64) -> f64 {
    (-z_sq / 4.0).exp() / (4.0 * std::f64::consts::PI)
}

/// Samples the self-similar vorticity `(alpha/t) G(x/sqrt t)` at time t,
/// center-shifted with the minimal torus image.
pub fn oseen_reference(spec: &OseenSpec, grid: &TorusGrid, t: f64) -> Result<SpectralField> {
    if grid.dim() != 2 {
        return Err(Error::domain("Oseen fields are two-dimensional"));
    }
    spec.check_core(grid, t)?;
    let total = grid.total_points();
    let mut samples = vec![0.0; total];
    for (flat, v) in samples.iter_mut().enumerate() {
        let d_sq = grid.torus_dist_sq(flat, spec.center);
        *v = spec.alpha / t * oseen_g(d_sq / t);
    }
    SpectralField::from_physical(*grid, 1, &samples)
}

/// Vorticity and velocity of the vortex at its initialization time t0.
///
/// The vorticity is the sampled Gaussian. The velocity is the periodic
/// Biot–Savart field of its mean-free part: on a torus the curl of any
/// periodic field integrates to zero, so the uniform background
/// `alpha / L^2` cannot be represented and `curl u = omega - mean(omega)`.
pub fn oseen_fields(spec: &OseenSpec, grid: &TorusGrid) -> Result<(SpectralField, SpectralField)> {
    let vorticity = oseen_reference(spec, grid, spec.t0)?;
    let total = grid.total_points();
    let mut velocity = SpectralField::zeros(*grid, 2);
    // u_hat = i xi^perp / |xi|^2 * omega_hat
    for flat in 1..total {
        if grid.has_nyquist(flat) {
            continue;
        }
        let xi = grid.xi(flat);
        let xi_sq = grid.xi_sq(flat);
        let w = vorticity.component(0)[flat];
        velocity.component_mut(0)[flat] = Complex64::new(0.0, -xi[1] / xi_sq) * w;
        velocity.component_mut(1)[flat] = Complex64::new(0.0, xi[0] / xi_sq) * w;
    }
    Ok((vorticity, velocity))
}

/// Smoothed density jump: a tanh front of half-width `width_cells * h`
/// between the two plateau values along the first axis, closed periodically
/// by the mirrored front on the opposite side of the box.
pub fn shock_density(
    grid: &TorusGrid,
    rho_left: f64,
    rho_right: f64,
    width_cells: f64,
) -> Result<SpectralField> {
    if !(rho_left > 0.0) || !(rho_right > 0.0) {
        return Err(Error::domain("plateau densities must be positive"));
    }
    if width_cells < 2.0 {
        return Err(Error::domain(format!(
            "unresolved jump: smoothing width must span >= 2 cells, got {width_cells}"
        )));
    }
    let w = width_cells * grid.spacing();
    let length = grid.side_length();
    let total = grid.total_points();
    let jump = rho_right - rho_left;
    let mut samples = vec![0.0; total];
    for (flat, v) in samples.iter_mut().enumerate() {
        let x = grid.point(flat)[0];
        let up = ((x - 0.25 * length) / w).tanh();
        let down = ((x - 0.75 * length) / w).tanh();
        *v = rho_left + 0.5 * jump * (up - down);
    }
    SpectralField::from_physical(*grid, 1, &samples)
}

/// A run geometry that the parabolic rescaling maps onto itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    pub side_length: f64,
    pub horizon: f64,
    pub velocity_scale: f64,
    pub pressure_a: f64,
}

/// The lambda-rescaled twin: x -> lambda x halves the box for lambda = 2,
/// t -> lambda^2 t quarters the horizon, u gains a factor lambda and the
/// pressure coefficient gains lambda^2.
pub fn scaling_twin(config: &ScalingConfig, lambda: f64) -> Result<ScalingConfig> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
    }
    Ok(ScalingConfig {
        side_length: config.side_length / lambda,
        horizon: config.horizon / (lambda * lambda),
        velocity_scale: config.velocity_scale * lambda,
        pressure_a: config.pressure_a * lambda * lambda,
    })
}

/// Fitted power law `value ~ prefactor * t^(-exponent)`.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Least-squares fit of log value against log time.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs >= 8 matched samples, got {}",
            times.len().min(values.len())
        )));
    }
    if values.iter().any(|&v| !(v > 0.0)) || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::domain("decay fit needs positive times and values"));
    }
    let t_min = times.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let t_max = times.iter().fold(0.0_f64, |a, &b| a.max(b));
    if t_max / t_min < 10f64.powf(1.5) {
        return Err(Error::InsufficientData(format!(
            "fit window spans {:.2} decades, need >= 1.5",
            (t_max / t_min).log10()
        )));
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        exponent: -slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}
