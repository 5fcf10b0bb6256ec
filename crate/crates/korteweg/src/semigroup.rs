//! Exact spectral evaluation of the mixed hyperbolic–parabolic semigroup of
//! the linearized system
//!
//! ```text
//!   d/dt q  - c Lap q  + div m = 0
//!   d/dt m  - mu Lap m - alpha grad div m + beta grad q = 0
//! ```
//!
//! Per Fourier mode the pair (qhat, div-m-hat) obeys d/dt u = -A(xi) u with
//! `A(xi) = [[c|xi|^2, 1], [-beta|xi|^2, nu|xi|^2]]`, nu = mu + alpha. The
//! propagator e^{-tA} is evaluated through the trace/deviator split
//! `e^{-tA} = e^{-tm} (coshc(w) I - t sinhc(w) B)` where m is the mean
//! eigenvalue, B = A - m I, and w = t^2 det(-B); a single signed argument w
//! covers the diffusive (w > 0), oscillatory (w < 0) and resonant (w ~ 0)
//! branches without dividing by the eigenvalue gap.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{DyadicDecomposition, SpectralField};

/// Coefficients of the linear system plus derived quantities.
#[derive(Debug, Clone, Copy)]
pub struct LinearParams {
    pub c: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LinearParams {
    pub fn new(c: f64, mu: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = LinearParams { c, mu, alpha, beta };
        if !(c > 0.0) {
            return Err(Error::domain(format!("density diffusion c must be > 0, got {c}")));
        }
        if !(mu > 0.0) {
            return Err(Error::domain(format!("viscosity mu must be > 0, got {mu}")));
        }
        if !(p.nu() > 0.0) {
            return Err(Error::domain(format!(
                "mu + alpha must be > 0, got {}",
                p.nu()
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::domain(format!("pressure coefficient beta must be > 0, got {beta}")));
        }
        Ok(p)
    }

    pub fn nu(&self) -> f64 {
        self.mu + self.alpha
    }

    /// True when nu and c coincide; the eigenvalues are then complex for
    /// every nonzero frequency and no crossover exists.
    pub fn degenerate(&self) -> bool {
        (self.nu() - self.c).abs() < 1e-12
    }

    /// |xi|^2 at which the eigenvalue discriminant vanishes, when it exists.
    pub fn crossover_sq(&self) -> Option<f64> {
        if self.degenerate() {
            None
        } else {
            let gap = self.nu() - self.c;
            Some(4.0 * self.beta / (gap * gap))
        }
    }
}

/// The (q, m) pair evolved by the semigroup.
#[derive(Debug, Clone)]
pub struct LinearState {
    pub q: SpectralField,
    pub m: SpectralField,
}

impl LinearState {
    pub fn new(q: SpectralField, m: SpectralField) -> Result<Self> {
        q.same_grid(&m)?;
        if q.components() != 1 {
            return Err(Error::shape("q must be scalar"));
        }
        if m.components() != q.grid().dim() {
            return Err(Error::shape("m must be a vector field"));
        }
        Ok(LinearState { q, m })
    }

    pub fn zeros(grid: crate::spectral::TorusGrid) -> Self {
        LinearState {
            q: SpectralField::zeros(grid, 1),
            m: SpectralField::zeros(grid, grid.dim()),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        LinearState {
            q: self.q.scaled(a),
            m: self.m.scaled(a),
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        self.q.add_scaled(a, &other.q);
        self.m.add_scaled(a, &other.m);
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    /// Joint L^2 norm of all components.
    pub fn l2_norm(&self) -> f64 {
        (self.q.l2_norm().powi(2) + self.m.l2_norm().powi(2)).sqrt()
    }

    /// One multi-component field (q, m_1, ..., m_dim), e.g. for block norms.
    pub fn stacked(&self) -> SpectralField {
        SpectralField::stack(&[&self.q, &self.m])
    }
}

/// coshc(w) = cosh(sqrt(w)) for w >= 0, cos(sqrt(-w)) for w < 0.
fn coshc(w: f64) -> f64 {
    if w.abs() < 1e-6 {
        1.0 + w * (0.5 + w * (1.0 / 24.0 + w * (1.0 / 720.0 + w / 40320.0)))
    } else if w > 0.0 {
        w.sqrt().cosh()
    } else {
        (-w).sqrt().cos()
    }
}

/// sinhc(w) = sinh(sqrt(w))/sqrt(w) for w >= 0, sin(sqrt(-w))/sqrt(-w) else.
fn sinhc(w: f64) -> f64 {
    if w.abs() < 1e-6 {
        1.0 + w * (1.0 / 6.0 + w * (1.0 / 120.0 + w * (1.0 / 5040.0 + w / 362880.0)))
    } else if w > 0.0 {
        let z = w.sqrt();
        z.sinh() / z
    } else {
        let z = (-w).sqrt();
        z.sin() / z
    }
}

/// Scalar weights (E, S) with e^{-tA} = E I - S B on one mode.
///
/// E = e^{-t m} coshc(w), S = t e^{-t m} sinhc(w). For a large real gap the
/// two exponentials are combined directly so neither factor overflows.
fn coupled_weights(xi_sq: f64, t: f64, p: &LinearParams) -> (f64, f64) {
    let nu = p.nu();
    let mean = 0.5 * (p.c + nu) * xi_sq;
    let gap = 0.5 * (nu - p.c) * xi_sq;
    let disc = gap * gap - p.beta * xi_sq;
    let w = t * t * disc;
    if w > 900.0 {
        // z = t*delta > 30: cosh would overflow before e^{-tm} damps it.
        let z = w.sqrt();
        let delta = z / t;
        let grow = (-t * (mean - delta)).exp();
        let decay = (-t * (mean + delta)).exp();
        (0.5 * (grow + decay), (grow - decay) / (2.0 * delta))
    } else {
        let damp = (-t * mean).exp();
        (damp * coshc(w), t * damp * sinhc(w))
    }
}

/// e^{-tA(xi)} as a real 2x2 matrix acting on (qhat, div-m-hat).
pub fn coupled_matrix(xi_sq: f64, t: f64, p: &LinearParams) -> [[f64; 2]; 2] {
    let (e, s) = coupled_weights(xi_sq, t, p);
    let b11 = 0.5 * (p.c - p.nu()) * xi_sq;
    let b21 = -p.beta * xi_sq;
    [[e - s * b11, -s], [-s * b21, e + s * b11]]
}

/// Evolves one Fourier mode of the coupled pair (qhat, div-m-hat).
pub fn propagate_coupled(
    q0: Complex64,
    divm0: Complex64,
    xi_sq: f64,
    t: f64,
    p: &LinearParams,
) -> Result<(Complex64, Complex64)> {
    if t < 0.0 {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    if xi_sq < 0.0 {
        return Err(Error::domain(format!("|xi|^2 must be >= 0, got {xi_sq}")));
    }
    let m = coupled_matrix(xi_sq, t, p);
    Ok((
        m[0][0] * q0 + m[0][1] * divm0,
        m[1][0] * q0 + m[1][1] * divm0,
    ))
}

/// Eigenvalues of A(xi), largest real part first.
///
/// Above the crossover both roots are real and the smaller one is recovered
/// from the product of roots (citardauq) to avoid cancellation; below it they
/// form a conjugate pair. Both satisfy
/// `lambda^2 - lambda |xi|^2 (c+nu) + c nu |xi|^4 + beta |xi|^2 = 0`.
pub fn eigenvalues(xi_sq: f64, p: &LinearParams) -> (Complex64, Complex64) {
    if xi_sq == 0.0 {
        return (Complex64::default(), Complex64::default());
    }
    let nu = p.nu();
    let mean = 0.5 * (p.c + nu) * xi_sq;
    let gap = 0.5 * (nu - p.c) * xi_sq;
    let disc = gap * gap - p.beta * xi_sq;
    if disc >= 0.0 {
        let delta = disc.sqrt();
        let l1 = mean + delta;
        let det = p.c * nu * xi_sq * xi_sq + p.beta * xi_sq;
        (Complex64::new(l1, 0.0), Complex64::new(det / l1, 0.0))
    } else {
        let sigma = (-disc).sqrt();
        (Complex64::new(mean, sigma), Complex64::new(mean, -sigma))
    }
}

/// Heat flow: multiplies the coefficient at xi by exp(-coeff * t * |xi|^2).
pub fn heat_propagate(f: &SpectralField, t: f64, coeff: f64) -> Result<SpectralField> {
    if t < 0.0 {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    if !(coeff > 0.0) {
        return Err(Error::domain(format!("diffusivity must be > 0, got {coeff}")));
    }
    Ok(f.scale_modes(1.0, |xi_sq| (-coeff * t * xi_sq).exp()))
}

/// Full semigroup W(t) on a (q, m) state: the solenoidal part of m heat-flows
/// with mu, the potential part and q evolve jointly through the coupled 2x2
/// kernel, and the k = 0 coefficients are preserved exactly.
pub fn propagate_full(state: &LinearState, t: f64, p: &LinearParams) -> Result<LinearState> {
    if t < 0.0 {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let grid = *state.q.grid();
    let dim = grid.dim();
    let total = grid.total_points();

    let weights: Vec<(f64, f64, f64)> = {
        use rayon::prelude::*;
        (0..total)
            .into_par_iter()
            .map(|flat| {
                if flat == 0 || grid.has_nyquist(flat) {
                    (0.0, 0.0, 0.0)
                } else {
                    let xi_sq = grid.xi_sq(flat);
                    let (e, s) = coupled_weights(xi_sq, t, p);
                    ((-p.mu * t * xi_sq).exp(), e, s)
                }
            })
            .collect()
    };

    let mut out = LinearState::zeros(grid);
    out.q.component_mut(0)[0] = state.q.mean_mode(0);
    for a in 0..dim {
        out.m.component_mut(a)[0] = state.m.mean_mode(a);
    }

    for flat in 1..total {
        if grid.has_nyquist(flat) {
            continue;
        }
        let xi = grid.xi(flat);
        let xi_sq = grid.xi_sq(flat);
        let (heat, e, s) = weights[flat];
        let b11 = 0.5 * (p.c - p.nu()) * xi_sq;
        let b21 = -p.beta * xi_sq;

        let q0 = state.q.component(0)[flat];
        let mut dot = Complex64::default();
        for a in 0..dim {
            dot += xi[a] * state.m.component(a)[flat];
        }
        let s0 = Complex64::new(0.0, 1.0) * dot;

        let q_t = (e - s * b11) * q0 - s * s0;
        let s_t = -s * b21 * q0 + (e + s * b11) * s0;

        out.q.component_mut(0)[flat] = q_t;
        let qm_scale = -Complex64::new(0.0, 1.0) * s_t / xi_sq;
        for a in 0..dim {
            let qm0 = dot * (xi[a] / xi_sq);
            let pm0 = state.m.component(a)[flat] - qm0;
            out.m.component_mut(a)[flat] = heat * pm0 + xi[a] * qm_scale;
        }
    }
    Ok(out)
}

/// Composite quadrature request for the Duhamel integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRule {
    /// Number of equal slabs of [0, t], each integrated by 4-point
    /// Gauss–Lobatto.
    pub slabs: usize,
    /// When set, doubling the slab count must move the result by less than
    /// this L^2 amount, otherwise the integration fails.
    pub tol: Option<f64>,
}

impl QuadratureRule {
    pub fn with_slabs(slabs: usize) -> Self {
        QuadratureRule { slabs, tol: None }
    }
}

/// Source term sampled on quadrature nodes, linearly interpolated between.
#[derive(Debug, Clone)]
pub struct StateSeries {
    times: Vec<f64>,
    states: Vec<LinearState>,
}

impl StateSeries {
    pub fn new(times: Vec<f64>, states: Vec<LinearState>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::InsufficientData(
                "state series needs one state per time".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("series times must be strictly increasing"));
        }
        Ok(StateSeries { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Linear interpolation, clamped at the ends.
    pub fn sample(&self, s: f64) -> LinearState {
        if s <= self.times[0] {
            return self.states[0].clone();
        }
        let last = self.times.len() - 1;
        if s >= self.times[last] {
            return self.states[last].clone();
        }
        let hi = self.times.partition_point(|&t| t < s).max(1);
        let (t0, t1) = (self.times[hi - 1], self.times[hi]);
        let theta = (s - t0) / (t1 - t0);
        let mut out = self.states[hi - 1].scaled(1.0 - theta);
        out.add_scaled(theta, &self.states[hi]);
        out
    }
}

pub(crate) const LOBATTO4: [(f64, f64); 4] = {
    // Nodes +-1, +-1/sqrt(5) with weights 1/6, 5/6 on [-1, 1].
    let inv_sqrt5 = 0.447_213_595_499_957_94;
    [
        (-1.0, 1.0 / 6.0),
        (-inv_sqrt5, 5.0 / 6.0),
        (inv_sqrt5, 5.0 / 6.0),
        (1.0, 1.0 / 6.0),
    ]
};

/// Composite 4-point Gauss–Lobatto nodes and weights on [0, t].
pub(crate) fn lobatto_nodes(t: f64, slabs: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(4 * slabs);
    let width = t / slabs as f64;
    for k in 0..slabs {
        let a = k as f64 * width;
        let mid = a + 0.5 * width;
        for (node, weight) in LOBATTO4 {
            out.push((mid + 0.5 * width * node, 0.5 * width * weight));
        }
    }
    out
}

fn duhamel_at(series: &StateSeries, p: &LinearParams, t: f64, slabs: usize) -> Result<LinearState> {
    let grid = *series.states[0].q.grid();
    let mut acc = LinearState::zeros(grid);
    for (s, w) in lobatto_nodes(t, slabs) {
        let propagated = propagate_full(&series.sample(s), t - s, p)?;
        acc.add_scaled(w, &propagated);
    }
    Ok(acc)
}

/// Computes the Duhamel convolution `int_0^t W(t-s) source(s) ds`.
///
/// The result is the refined (doubled-slab) quadrature; when a tolerance is
/// requested the coarse/fine difference serves as the Richardson estimate.
pub fn duhamel_integrate(
    source: &StateSeries,
    p: &LinearParams,
    t: f64,
    rule: QuadratureRule,
) -> Result<LinearState> {
    if t < 0.0 {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let grid = *source.states[0].q.grid();
    if t == 0.0 {
        return Ok(LinearState::zeros(grid));
    }
    let slabs = rule.slabs.max(1);
    let fine = duhamel_at(source, p, t, 2 * slabs)?;
    if let Some(tol) = rule.tol {
        let coarse = duhamel_at(source, p, t, slabs)?;
        let estimate = fine.sub(&coarse).l2_norm();
        if estimate > tol {
            return Err(Error::QuadratureTolerance { estimate, tol });
        }
    }
    Ok(fine)
}

/// Parameters of the block Lyapunov functionals: low-frequency blocks use
/// `f_l^2 = beta ||q_l||^2 + ||d_l||^2`, high-frequency blocks
/// `f_l^2 = ||Lam q_l||^2 + A ||d_l||^2 - 2/(c+nu) (Lam q_l, d_l)`,
/// with d = Lam^{-1} div m.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovConfig {
    /// High-frequency weight A.
    pub weight_a: f64,
    /// Young-inequality parameter a.
    pub young_a: f64,
    /// Low/high frequency threshold block.
    pub l0: i32,
    /// Coercivity margin M > 1.
    pub coercivity_m: f64,
}

impl LyapunovConfig {
    /// Checks the admissibility constraints; the error lists each failed one.
    pub fn validate(&self, p: &LinearParams) -> Result<()> {
        let (c, nu, beta) = (p.c, p.nu(), p.beta);
        let cn = c + nu;
        let mut failed = Vec::new();
        if !(self.coercivity_m > 1.0) {
            failed.push(format!("M > 1 required, got {}", self.coercivity_m));
        }
        if !(self.weight_a > 0.0) || !(self.young_a > 0.0) {
            failed.push("A and a must be positive".into());
        }
        let tie = self.weight_a * nu - 2.0 * self.coercivity_m / cn;
        if tie.abs() > 1e-10 * (1.0 + self.weight_a * nu) {
            failed.push(format!("A nu = 2M/(c+nu) violated by {tie:.3e}"));
        }
        let second = beta / cn - self.weight_a * self.young_a * beta / 2.0;
        if second < 0.0 {
            failed.push(format!(
                "beta/(c+nu) - A a beta/2 = {second:.3e} < 0"
            ));
        }
        let third = self.weight_a * nu
            - 1.0 / cn
            - 2f64.powi(-2 * self.l0) * self.weight_a * beta / (2.0 * self.young_a)
            - 0.5 / cn;
        if third < 0.0 {
            failed.push(format!(
                "A nu - 1/(c+nu) - 2^(-2 l0) A beta/(2a) >= 1/(2(c+nu)) violated by {third:.3e}"
            ));
        }
        let coercive = 2.0 * self.coercivity_m / (nu * cn) - 2.0 / (cn * cn) - 0.5;
        if coercive < 0.0 {
            failed.push(format!(
                "2M/(nu(c+nu)) - 2/(c+nu)^2 >= 1/2 violated by {coercive:.3e}"
            ));
        }
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraints { failed })
        }
    }

    /// One concrete admissible choice for the given coefficients.
    ///
    /// M is picked to make the coercivity bound hold, A from the tie
    /// A nu = 2M/(c+nu), a = 1/(A(c+nu)) halved while the Young constraint
    /// fails, and l0 raised (from the crossover octave when one exists) until
    /// the high-frequency margin holds.
    pub fn select(p: &LinearParams) -> Self {
        let (c, nu, beta) = (p.c, p.nu(), p.beta);
        let cn = c + nu;
        let m = (nu * cn / 2.0 * (0.5 + 2.0 / (cn * cn))).max(2.0);
        let weight_a = 2.0 * m / (nu * cn);
        let mut young_a = 1.0 / (weight_a * cn);
        while beta / cn - weight_a * young_a * beta / 2.0 < 0.0 {
            young_a *= 0.5;
        }
        let mut l0 = if p.crossover_sq().is_some() {
            let target = 2.0 * beta.sqrt() / (nu - c).abs() + 1.0;
            target.log2().ceil() as i32
        } else {
            0
        };
        let margin = |l0: i32| {
            weight_a * nu
                - 1.0 / cn
                - 2f64.powi(-2 * l0) * weight_a * beta / (2.0 * young_a)
                - 0.5 / cn
        };
        while margin(l0) < 0.0 {
            l0 += 1;
        }
        LyapunovConfig {
            weight_a,
            young_a,
            l0,
            coercivity_m: m,
        }
    }
}

/// Block Lyapunov functionals f_l of a (q, m) state.
pub fn lyapunov(
    q: &SpectralField,
    m: &SpectralField,
    p: &LinearParams,
    cfg: &LyapunovConfig,
) -> Result<Vec<(i32, f64)>> {
    cfg.validate(p)?;
    q.same_grid(m)?;
    let dec = DyadicDecomposition::for_grid(q.grid());
    let d = m.divergence().lambda_power(-1.0);
    let lam_q = q.lambda_power(1.0);
    let cn = p.c + p.nu();
    let mut out = Vec::new();
    for l in dec.blocks() {
        let value = if l <= cfg.l0 {
            let ql = dec.block(q, l).l2_norm();
            let dl = dec.block(&d, l).l2_norm();
            (p.beta * ql * ql + dl * dl).sqrt()
        } else {
            let lam_ql = dec.block(&lam_q, l);
            let dl = dec.block(&d, l);
            let sq = lam_ql.l2_norm().powi(2) + cfg.weight_a * dl.l2_norm().powi(2)
                - 2.0 / cn * lam_ql.l2_inner(&dl);
            sq.max(0.0).sqrt()
        };
        out.push((l, value));
    }
    Ok(out)
}
