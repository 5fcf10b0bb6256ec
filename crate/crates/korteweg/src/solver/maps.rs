//! Effective-velocity transform, nonlinear right-hand sides, and the
//! fixed-point maps.

use num_complex::Complex64;

use super::{FixedPointConfig, KortewegParams};
use crate::error::{Error, Result};
use crate::semigroup::{heat_propagate, lobatto_nodes, propagate_full, LinearState};
use crate::spectral::SpectralField;
use crate::state::{MildState, Trajectory};

/// One space-time Picard unknown: the data at t = 0 plus the trajectory on
/// the positive-time nodes of the slab.
#[derive(Debug, Clone)]
pub struct PicardIterate {
    pub data: MildState,
    pub traj: Trajectory,
}

impl PicardIterate {
    pub fn sample(&self, t: f64) -> MildState {
        let times = self.traj.times();
        if t <= 0.0 {
            return self.data.clone();
        }
        if t <= times[0] {
            let theta = t / times[0];
            let mut out = self.data.scaled(1.0 - theta);
            out.add_scaled(theta, self.traj.state_at(0));
            return out;
        }
        self.traj.sample(t)
    }

    /// Minimum physical density over the whole iterate.
    pub fn min_density(&self, rho_bar: f64) -> f64 {
        let mut min = min_density_of(&self.data.q, rho_bar);
        for state in self.traj.states() {
            min = min.min(min_density_of(&state.q, rho_bar));
        }
        min
    }
}

fn min_density_of(q: &SpectralField, rho_bar: f64) -> f64 {
    q.to_physical()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(rho_bar + v))
}

/// Builds the mild unknown from primitive variables: q = rho - rho_bar and
/// m_i = rho u + c_i grad rho with the gradient taken spectrally.
pub fn effective_momenta(
    rho: &SpectralField,
    u: &SpectralField,
    p: &KortewegParams,
) -> Result<MildState> {
    rho.same_grid(u)?;
    let grid = *rho.grid();
    let dim = grid.dim();
    if rho.components() != 1 || u.components() != dim {
        return Err(Error::shape("effective_momenta needs scalar rho and vector u"));
    }
    let rho_phys = rho.to_physical();
    let min = rho_phys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min <= 0.0 {
        return Err(Error::Vacuum { min_density: min });
    }
    let total = grid.total_points();
    let u_phys = u.dealias().to_physical();
    let mut rho_u = vec![0.0; dim * total];
    for a in 0..dim {
        for flat in 0..total {
            rho_u[a * total + flat] = rho_phys[flat] * u_phys[a * total + flat];
        }
    }
    let rho_u = SpectralField::from_physical(grid, dim, &rho_u)?.dealias();
    let grad_rho = rho.gradient();

    let mut q = rho.clone();
    let mean = q.mean_mode(0);
    q.set_mean_mode(0, mean - Complex64::new(p.rho_bar, 0.0));

    let mut m1 = rho_u.clone();
    m1.add_scaled(p.c1(), &grad_rho);
    let mut m2 = rho_u;
    m2.add_scaled(p.c2(), &grad_rho);
    MildState::new(q, m1, m2)
}

/// Recovers (rho, u, grad rho) from the mild unknown.
///
/// In the non-degenerate case grad rho = (m2 - m1)/(c2 - c1) and
/// rho u = (c2 m1 - c1 m2)/(c2 - c1); when c1 = c2 the carried q supplies the
/// gradient instead and rho u = m1 - c1 grad rho.
pub fn reconstruct(
    state: &MildState,
    p: &KortewegParams,
) -> Result<(SpectralField, SpectralField, SpectralField)> {
    let grid = *state.grid();
    let mut rho = state.q.clone();
    let mean = rho.mean_mode(0);
    rho.set_mean_mode(0, mean + Complex64::new(p.rho_bar, 0.0));
    let rho_phys = rho.to_physical();
    let min = rho_phys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min <= 0.0 {
        return Err(Error::Vacuum { min_density: min });
    }

    let (grad_rho, rho_u) = if p.degenerate() {
        let grad_rho = rho.gradient();
        let mut rho_u = state.m1.clone();
        rho_u.add_scaled(-p.c1(), &grad_rho);
        (grad_rho, rho_u)
    } else {
        let inv_gap = 1.0 / (p.c2() - p.c1());
        let grad_rho = state.m2.sub(&state.m1).scaled(inv_gap);
        let mut rho_u = state.m1.scaled(p.c2() * inv_gap);
        rho_u.add_scaled(-p.c1() * inv_gap, &state.m2);
        (grad_rho, rho_u)
    };

    let total = grid.total_points();
    let dim = grid.dim();
    let ru_phys = rho_u.dealias().to_physical();
    let mut u_phys = vec![0.0; dim * total];
    for a in 0..dim {
        for flat in 0..total {
            u_phys[a * total + flat] = ru_phys[a * total + flat] / rho_phys[flat];
        }
    }
    let u = SpectralField::from_physical(grid, dim, &u_phys)?.dealias();
    Ok((rho, u, grad_rho))
}

/// Assembled nonlinear sources of the momentum equations.
#[derive(Debug, Clone)]
pub struct NonlinearRhs {
    /// Symmetrized transport term
    /// `F1 = div((m1 (x) m2 + m2 (x) m1) / (2 rho))`.
    pub tensor_div: SpectralField,
    /// Pressure term: `grad P(rho)` (local map) or
    /// `(P'(rho) - P'(rho_bar)) grad rho` (global map).
    pub pressure_grad: SpectralField,
}

impl NonlinearRhs {
    /// F = F1 + pressure term, the full momentum source.
    pub fn total(&self) -> SpectralField {
        let mut f = self.tensor_div.clone();
        f.add_scaled(1.0, &self.pressure_grad);
        f
    }
}

fn assemble_rhs(state: &MildState, p: &KortewegParams, global_pressure: bool) -> Result<NonlinearRhs> {
    let grid = *state.grid();
    let dim = grid.dim();
    let total = grid.total_points();

    let q = state.q.dealias();
    let q_phys = q.to_physical();
    let rho_phys: Vec<f64> = q_phys.iter().map(|v| p.rho_bar + v).collect();
    let min = rho_phys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min <= 0.0 {
        return Err(Error::Vacuum { min_density: min });
    }

    let m1_phys = state.m1.dealias().to_physical();
    let m2_phys = state.m2.dealias().to_physical();

    // T_ij = (m1_i m2_j + m2_i m1_j) / (2 rho), then (div T)_i spectrally.
    let mut tensor = vec![0.0; dim * dim * total];
    for i in 0..dim {
        for j in 0..dim {
            let block = &mut tensor[(i * dim + j) * total..(i * dim + j + 1) * total];
            for flat in 0..total {
                let a = m1_phys[i * total + flat] * m2_phys[j * total + flat];
                let b = m2_phys[i * total + flat] * m1_phys[j * total + flat];
                block[flat] = 0.5 * (a + b) / rho_phys[flat];
            }
        }
    }
    let tensor = SpectralField::from_physical(grid, dim * dim, &tensor)?.dealias();
    let mut tensor_div = SpectralField::zeros(grid, dim);
    for flat in 0..total {
        if grid.has_nyquist(flat) {
            continue;
        }
        let xi = grid.xi(flat);
        for i in 0..dim {
            let mut acc = Complex64::default();
            for j in 0..dim {
                acc += Complex64::new(0.0, xi[j]) * tensor.component(i * dim + j)[flat];
            }
            tensor_div.component_mut(i)[flat] = acc;
        }
    }

    let pressure_grad = if global_pressure {
        let grad_q = q.gradient();
        let grad_phys = grad_q.to_physical();
        let mut src = vec![0.0; dim * total];
        for a in 0..dim {
            for flat in 0..total {
                let factor = p.pressure_prime(rho_phys[flat]) - p.beta();
                src[a * total + flat] = factor * grad_phys[a * total + flat];
            }
        }
        SpectralField::from_physical(grid, dim, &src)?.dealias()
    } else {
        let pressure: Vec<f64> = rho_phys.iter().map(|&r| p.pressure(r)).collect();
        SpectralField::from_physical(grid, 1, &pressure)?.dealias().gradient()
    };

    Ok(NonlinearRhs {
        tensor_div,
        pressure_grad,
    })
}

/// Right-hand side of the local (heat-kernel) map: pressure enters as
/// grad P(rho).
pub fn nonlinear_rhs_local(state: &MildState, p: &KortewegParams) -> Result<NonlinearRhs> {
    assemble_rhs(state, p, false)
}

/// Right-hand side of the global (semigroup) map: pressure enters as
/// (P'(rho) - P'(rho_bar)) grad rho.
pub fn nonlinear_rhs_global(state: &MildState, p: &KortewegParams) -> Result<NonlinearRhs> {
    assemble_rhs(state, p, true)
}

fn lerp(a: &SpectralField, b: &SpectralField, theta: f64) -> SpectralField {
    let mut out = a.scaled(1.0 - theta);
    out.add_scaled(theta, b);
    out
}

/// Piecewise-linear interpolant over node values, with node 0 at t = 0.
struct NodeInterp<'a> {
    times: &'a [f64],
    values: &'a [SpectralField],
}

impl NodeInterp<'_> {
    fn at(&self, s: f64) -> SpectralField {
        if s <= self.times[0] {
            return self.values[0].clone();
        }
        let last = self.times.len() - 1;
        if s >= self.times[last] {
            return self.values[last].clone();
        }
        let hi = self.times.partition_point(|&t| t < s).max(1);
        let theta = (s - self.times[hi - 1]) / (self.times[hi] - self.times[hi - 1]);
        lerp(&self.values[hi - 1], &self.values[hi], theta)
    }
}

/// Quadrature nodes of the interval chain covering [0, t_j]: every
/// inter-node interval is split into `slabs` Gauss–Lobatto panels.
fn chain_nodes(times_from_zero: &[f64], j: usize, slabs: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 0..j {
        let (a, b) = (times_from_zero[k], times_from_zero[k + 1]);
        for (s, w) in lobatto_nodes(b - a, slabs) {
            out.push((a + s, w));
        }
    }
    out
}

/// The local fixed-point map: density part driven by the c1 heat flow minus
/// the Duhamel integral of div m1, momenta by heat flows on the Leray parts
/// minus the Duhamel integrals of the split nonlinearity.
pub fn local_map_psi(
    iterate: &PicardIterate,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
) -> Result<PicardIterate> {
    let times = iterate.traj.times().to_vec();
    let mut times0 = Vec::with_capacity(times.len() + 1);
    times0.push(0.0);
    times0.extend_from_slice(&times);

    // Node sources: div m1, P F1 and Q F at every node (including t = 0).
    let mut div_m1 = Vec::with_capacity(times0.len());
    let mut p_f1 = Vec::with_capacity(times0.len());
    let mut q_f = Vec::with_capacity(times0.len());
    for k in 0..times0.len() {
        let state = if k == 0 {
            iterate.data.clone()
        } else {
            iterate.traj.state_at(k - 1).clone()
        };
        let rhs = nonlinear_rhs_local(&state, p)?;
        let (pf1, _) = rhs.tensor_div.leray_split();
        let f_total = rhs.total();
        let (_, qf) = f_total.leray_split();
        div_m1.push(state.m1.divergence());
        p_f1.push(pf1);
        q_f.push(qf);
    }
    let div_interp = NodeInterp { times: &times0, values: &div_m1 };
    let pf1_interp = NodeInterp { times: &times0, values: &p_f1 };
    let qf_interp = NodeInterp { times: &times0, values: &q_f };

    let (p_m1, q_m1) = iterate.data.m1.leray_split();
    let (p_m2, q_m2) = iterate.data.m2.leray_split();

    let mut states = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let mut q_out = heat_propagate(&iterate.data.q, t, p.c1())?;
        let mut m1_out = heat_propagate(&p_m1, t, p.mu)?;
        m1_out.add_scaled(1.0, &heat_propagate(&q_m1, t, p.c2())?);
        let mut m2_out = heat_propagate(&p_m2, t, p.mu)?;
        m2_out.add_scaled(1.0, &heat_propagate(&q_m2, t, p.c1())?);

        for (s, w) in chain_nodes(&times0, j + 1, cfg.quad_slabs) {
            let dt = t - s;
            q_out.add_scaled(-w, &heat_propagate(&div_interp.at(s), dt, p.c1())?);
            let pf1 = heat_propagate(&pf1_interp.at(s), dt, p.mu)?;
            let qf = qf_interp.at(s);
            m1_out.add_scaled(-w, &pf1);
            m1_out.add_scaled(-w, &heat_propagate(&qf, dt, p.c2())?);
            m2_out.add_scaled(-w, &pf1);
            m2_out.add_scaled(-w, &heat_propagate(&qf, dt, p.c1())?);
        }
        states.push(MildState::new(q_out, m1_out, m2_out)?);
    }
    Ok(PicardIterate {
        data: iterate.data.clone(),
        traj: Trajectory::new(times, states)?,
    })
}

/// The global fixed-point map: (q, m1) and (q, m2) evolve under the two
/// coupled semigroups, plus the Duhamel integral of the momentum source
/// `-(F1 + (P'(rho) - P'(rho_bar)) grad rho)`.
pub fn global_map_psi3(
    iterate: &PicardIterate,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
) -> Result<PicardIterate> {
    let grid = *iterate.data.grid();
    let params1 = p.linear_params_psi1();
    let params2 = p.linear_params_psi2(cfg.pairing);
    let times = iterate.traj.times().to_vec();
    let mut times0 = Vec::with_capacity(times.len() + 1);
    times0.push(0.0);
    times0.extend_from_slice(&times);

    let mut sources = Vec::with_capacity(times0.len());
    for k in 0..times0.len() {
        let state = if k == 0 {
            iterate.data.clone()
        } else {
            iterate.traj.state_at(k - 1).clone()
        };
        let rhs = nonlinear_rhs_global(&state, p)?;
        sources.push(rhs.total().scaled(-1.0));
    }
    let src_interp = NodeInterp { times: &times0, values: &sources };

    let data1 = LinearState::new(iterate.data.q.clone(), iterate.data.m1.clone())?;
    let data2 = LinearState::new(iterate.data.q.clone(), iterate.data.m2.clone())?;

    let mut states = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let mut out1 = propagate_full(&data1, t, &params1)?;
        let mut out2 = propagate_full(&data2, t, &params2)?;
        for (s, w) in chain_nodes(&times0, j + 1, cfg.quad_slabs) {
            let dt = t - s;
            let g = src_interp.at(s);
            let src = LinearState::new(SpectralField::zeros(grid, 1), g)?;
            out1.add_scaled(w, &propagate_full(&src, dt, &params1)?);
            out2.add_scaled(w, &propagate_full(&src, dt, &params2)?);
        }
        states.push(MildState::new(out1.q, out1.m, out2.m)?);
    }
    Ok(PicardIterate {
        data: iterate.data.clone(),
        traj: Trajectory::new(times, states)?,
    })
}

/// Piecewise map: the local map on nodes with t <= t_split, the global map
/// beyond; both branches integrate their Duhamel terms from 0.
pub fn hybrid_map_psi4(
    iterate: &PicardIterate,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    t_split: f64,
) -> Result<PicardIterate> {
    let times = iterate.traj.times().to_vec();
    if t_split >= *times.last().expect("nonempty") {
        return local_map_psi(iterate, p, cfg);
    }
    if t_split <= 0.0 {
        return global_map_psi3(iterate, p, cfg);
    }
    let local = local_map_psi(iterate, p, cfg)?;
    let global = global_map_psi3(iterate, p, cfg)?;
    let states: Vec<MildState> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            if t <= t_split {
                local.traj.state_at(k).clone()
            } else {
                global.traj.state_at(k).clone()
            }
        })
        .collect();
    Ok(PicardIterate {
        data: iterate.data.clone(),
        traj: Trajectory::new(times, states)?,
    })
}
