//! Strong-form residuals of the effective-velocity system along a trajectory.

use super::maps::{nonlinear_rhs_local, PicardIterate};
use super::KortewegParams;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use crate::state::MildState;

/// L^2 residuals of the three equations at one interior time node.
#[derive(Debug, Clone, Copy)]
pub struct ResidualRow {
    pub time: f64,
    pub mass: f64,
    pub momentum1: f64,
    pub momentum2: f64,
}

impl ResidualRow {
    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum1).max(self.momentum2)
    }
}

/// Second-order time-difference residual check of the strong system at every
/// interior node (the data at t = 0 serves as the left neighbor of the first
/// node). Space derivatives are spectral.
pub fn residual_check(iterate: &PicardIterate, p: &KortewegParams) -> Result<Vec<ResidualRow>> {
    let times = iterate.traj.times();
    if times.len() < 3 {
        return Err(Error::InsufficientData(
            "residual check needs at least 3 time nodes".into(),
        ));
    }
    let mut nodes: Vec<(f64, &MildState)> = vec![(0.0, &iterate.data)];
    nodes.extend(times.iter().copied().zip(iterate.traj.states()));

    let root_gap = p.root_gap();
    let mut rows = Vec::new();
    for j in 1..nodes.len() - 1 {
        let (tm, um) = nodes[j - 1];
        let (t0, u0) = nodes[j];
        let (tp, up) = nodes[j + 1];
        let h_minus = t0 - tm;
        let h_plus = tp - t0;
        let wm = -h_plus / (h_minus * (h_minus + h_plus));
        let w0 = (h_plus - h_minus) / (h_minus * h_plus);
        let wp = h_minus / (h_plus * (h_minus + h_plus));

        let dt = |f: fn(&MildState) -> &SpectralField| {
            let mut d = f(um).scaled(wm);
            d.add_scaled(w0, f(u0));
            d.add_scaled(wp, f(up));
            d
        };
        let dq = dt(|s| &s.q);
        let dm1 = dt(|s| &s.m1);
        let dm2 = dt(|s| &s.m2);

        let rhs = nonlinear_rhs_local(u0, p)?;
        let lap = |f: &SpectralField| f.scale_modes(0.0, |xi_sq| -xi_sq);

        // d/dt q - c1 Lap q + div m1 = 0
        let mut r_mass = dq;
        r_mass.add_scaled(-p.c1(), &lap(&u0.q));
        r_mass.add_scaled(1.0, &u0.m1.divergence());

        // d/dt m_i + F1 - mu Lap m_i -+ root_gap grad div m_i + grad P = 0
        let grad_div = |m: &SpectralField| m.divergence().gradient();
        let mut r_m1 = dm1;
        r_m1.add_scaled(1.0, &rhs.tensor_div);
        r_m1.add_scaled(-p.mu, &lap(&u0.m1));
        r_m1.add_scaled(-root_gap, &grad_div(&u0.m1));
        r_m1.add_scaled(1.0, &rhs.pressure_grad);

        let mut r_m2 = dm2;
        r_m2.add_scaled(1.0, &rhs.tensor_div);
        r_m2.add_scaled(-p.mu, &lap(&u0.m2));
        r_m2.add_scaled(root_gap, &grad_div(&u0.m2));
        r_m2.add_scaled(1.0, &rhs.pressure_grad);

        rows.push(ResidualRow {
            time: t0,
            mass: r_mass.l2_norm(),
            momentum1: r_m1.l2_norm(),
            momentum2: r_m2.l2_norm(),
        });
    }
    Ok(rows)
}
