//! Discrete realizations of the critical norms: homogeneous Besov, hybrid
//! Besov, Chemin–Lerner time norms, the caloric bmo_T^-1 norm, the local
//! energy norm E_T, and the composite global-solution norms.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::semigroup::heat_propagate;
use crate::spectral::{DyadicDecomposition, SpectralField, TorusGrid};
use crate::state::Trajectory;

/// Sequence exponent r (or rho) in [1, inf]; `f64::INFINITY` selects the sup.
pub type SeqExponent = f64;

fn seq_norm(values: impl Iterator<Item = f64>, r: SeqExponent) -> f64 {
    if r.is_infinite() {
        values.fold(0.0_f64, f64::max)
    } else {
        values.map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Homogeneous Besov norm: l^r over blocks of 2^{l s} ||Delta_l f||_{L^2}.
pub fn besov_norm(f: &SpectralField, s: f64, r: SeqExponent) -> f64 {
    let dec = DyadicDecomposition::for_grid(f.grid());
    seq_norm(
        dec.blocks()
            .map(|l| 2f64.powi(l).powf(s) * dec.block(f, l).l2_norm()),
        r,
    )
}

/// Hybrid norm: weight 2^{l s_low} up to block l0, 2^{l s_high} above it,
/// sup over blocks.
pub fn hybrid_besov_norm(f: &SpectralField, s_low: f64, s_high: f64, l0: i32) -> f64 {
    let dec = DyadicDecomposition::for_grid(f.grid());
    dec.blocks()
        .map(|l| {
            let s = if l <= l0 { s_low } else { s_high };
            2f64.powi(l).powf(s) * dec.block(f, l).l2_norm()
        })
        .fold(0.0_f64, f64::max)
}

/// Chemin–Lerner norm of a field series: the time L^rho norm is taken of
/// each block trace t -> ||Delta_l f(t)|| (trapezoidal over the given nodes)
/// before the l^r sum over blocks.
pub fn chemin_lerner_norm(
    times: &[f64],
    fields: &[SpectralField],
    rho_exp: SeqExponent,
    s: f64,
    r: SeqExponent,
) -> Result<f64> {
    if times.is_empty() || times.len() != fields.len() {
        return Err(Error::InsufficientData(
            "need one field per sample time".into(),
        ));
    }
    if times.len() == 1 && !rho_exp.is_infinite() {
        return Err(Error::InsufficientData(
            "time integral (rho < inf) needs at least two samples".into(),
        ));
    }
    let dec = DyadicDecomposition::for_grid(fields[0].grid());
    let block_traces: Vec<Vec<f64>> = dec
        .blocks()
        .map(|l| fields.iter().map(|f| dec.block(f, l).l2_norm()).collect())
        .collect();
    let values = dec.blocks().zip(&block_traces).map(|(l, trace)| {
        let time_norm = if rho_exp.is_infinite() {
            trace.iter().fold(0.0_f64, |a, &b| a.max(b))
        } else {
            let mut acc = 0.0;
            for k in 0..times.len() - 1 {
                let dt = times[k + 1] - times[k];
                acc += 0.5 * dt * (trace[k].powf(rho_exp) + trace[k + 1].powf(rho_exp));
            }
            acc.powf(1.0 / rho_exp)
        };
        2f64.powi(l).powf(s) * time_norm
    });
    Ok(seq_norm(values, r))
}

/// Sampling resolution of the Carleson-type sups.
///
/// Ball centers live on a sub-lattice with the given stride; outer times on a
/// dyadic grid T * 2^{-j/subdiv}; the heat-extension time integral uses the
/// same geometric ladder, `s_levels` octaves deep.
#[derive(Debug, Clone, Copy)]
pub struct CarlesonSampling {
    pub center_stride: usize,
    pub t_levels: usize,
    pub s_levels: usize,
    pub subdiv: usize,
}

impl CarlesonSampling {
    /// Centers on an n/8-per-dim sub-lattice, 13 dyadic outer times, a
    /// 20-octave inner ladder.
    pub fn default_for(_grid: &TorusGrid) -> Self {
        CarlesonSampling {
            center_stride: 8,
            t_levels: 12,
            s_levels: 20,
            subdiv: 1,
        }
    }

    /// Doubles center density and time-node density.
    pub fn refined(&self) -> Self {
        CarlesonSampling {
            center_stride: (self.center_stride / 2).max(1),
            t_levels: self.t_levels,
            s_levels: self.s_levels,
            subdiv: self.subdiv * 2,
        }
    }

    fn outer_times(&self, horizon: f64) -> Vec<f64> {
        (0..=self.t_levels * self.subdiv)
            .map(|j| horizon * 2f64.powf(-(j as f64) / self.subdiv as f64))
            .collect()
    }
}

/// Antialiased indicator of the ball B(0, radius) on the torus: full weight
/// inside, linear ramp across one cell at the boundary.
fn ball_kernel(grid: &TorusGrid, radius: f64) -> Vec<f64> {
    let h = grid.spacing();
    (0..grid.total_points())
        .map(|flat| {
            let d = grid.torus_dist_sq(flat, [0.0, 0.0]).sqrt();
            ((radius - d + 0.5 * h) / h).clamp(0.0, 1.0)
        })
        .collect()
}

fn forward_fft(grid: &TorusGrid, samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let shape = vec![grid.points_per_dim(); grid.dim()];
    fft_nd(&mut buf, &shape, false);
    buf
}

/// Circular convolution integral (kernel * g)(x) h^dim from two forward
/// transforms.
fn conv_integral(grid: &TorusGrid, kernel_hat: &[Complex64], g_hat: &[Complex64]) -> Vec<f64> {
    let total = grid.total_points();
    let mut buf: Vec<Complex64> = kernel_hat
        .iter()
        .zip(g_hat)
        .map(|(a, b)| a * b)
        .collect();
    let shape = vec![grid.points_per_dim(); grid.dim()];
    fft_nd(&mut buf, &shape, true);
    let scale = grid.cell_volume() / total as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Physical |u|^2, summed over components.
fn magnitude_sq(f: &SpectralField) -> Vec<f64> {
    let total = f.grid().total_points();
    let phys = f.to_physical();
    let mut out = vec![0.0; total];
    for c in 0..f.components() {
        for (o, v) in out.iter_mut().zip(&phys[c * total..(c + 1) * total]) {
            *o += v * v;
        }
    }
    out
}

fn sup_over_centers(grid: &TorusGrid, field: &[f64], stride: usize) -> f64 {
    let n = grid.points_per_dim();
    let mut best = f64::NEG_INFINITY;
    match grid.dim() {
        1 => {
            for i in (0..n).step_by(stride) {
                best = best.max(field[i]);
            }
        }
        _ => {
            for i in (0..n).step_by(stride) {
                for j in (0..n).step_by(stride) {
                    best = best.max(field[i * n + j]);
                }
            }
        }
    }
    best
}

fn check_ball_fits(grid: &TorusGrid, horizon: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    if horizon.sqrt() >= grid.side_length() / 2.0 {
        return Err(Error::domain(format!(
            "sqrt(T) = {} must be < L/2 = {} so the ball fits the torus",
            horizon.sqrt(),
            grid.side_length() / 2.0
        )));
    }
    Ok(())
}

/// Discrete caloric bmo_T^-1 norm of initial data w0:
/// `sup_{x,0<t<T} ( t^{-dim/2} int_0^t int_{B(x,sqrt t)} |e^{s Lap} w0|^2 )^{1/2}`
/// with the sup over the declared center sub-lattice and dyadic time grid.
pub fn caloric_bmo_norm(w0: &SpectralField, horizon: f64, sampling: &CarlesonSampling) -> Result<f64> {
    let grid = *w0.grid();
    check_ball_fits(&grid, horizon)?;
    let dim = grid.dim() as i32;
    let sub = sampling.subdiv;
    let depth = (sampling.t_levels + sampling.s_levels) * sub;

    // Shared geometric ladder s_k = T 2^{-k/sub}; outer times reuse its head.
    let ladder: Vec<f64> = (0..=depth)
        .map(|k| horizon * 2f64.powf(-(k as f64) / sub as f64))
        .collect();
    let heat_sq_hat: Vec<Vec<Complex64>> = ladder
        .par_iter()
        .map(|&s| {
            let u = heat_propagate(w0, s, 1.0).expect("s >= 0 on the ladder");
            forward_fft(&grid, &magnitude_sq(&u))
        })
        .collect();
    let w0_sq_hat = forward_fft(&grid, &magnitude_sq(w0));

    let per_t: Vec<f64> = (0..=sampling.t_levels * sub)
        .into_par_iter()
        .map(|j| {
            let t = ladder[j];
            let kernel_hat = forward_fft(&grid, &ball_kernel(&grid, t.sqrt()));
            let total = grid.total_points();
            let mut integral = vec![0.0; total];
            // Trapezoid down the ladder from s = t.
            let tail_k = j + sampling.s_levels * sub;
            let mut g_prev = conv_integral(&grid, &kernel_hat, &heat_sq_hat[j]);
            for k in j + 1..=tail_k {
                let g_next = conv_integral(&grid, &kernel_hat, &heat_sq_hat[k]);
                let dt = ladder[k - 1] - ladder[k];
                for (acc, (a, b)) in integral.iter_mut().zip(g_prev.iter().zip(&g_next)) {
                    *acc += 0.5 * dt * (a + b);
                }
                g_prev = g_next;
            }
            // Closure [0, s_min] against the exact s = 0 integrand.
            let g_zero = conv_integral(&grid, &kernel_hat, &w0_sq_hat);
            let s_min = ladder[tail_k];
            for (acc, (a, b)) in integral.iter_mut().zip(g_prev.iter().zip(&g_zero)) {
                *acc += 0.5 * s_min * (a + b);
            }
            let scaled: Vec<f64> = integral
                .iter()
                .map(|v| v * t.powf(-(dim as f64) / 2.0))
                .collect();
            sup_over_centers(&grid, &scaled, sampling.center_stride).max(0.0)
        })
        .collect();

    Ok(per_t.into_iter().fold(0.0_f64, f64::max).sqrt())
}

/// E_T norm of a sampled field trajectory u(t):
/// `sup_t sqrt(t) ||u(t)||_inf + Carleson(u)^{1/2}` with the Carleson part as
/// in [`caloric_bmo_norm`] but integrating |u(s)|^2 along the trajectory
/// (linear interpolation; constant extension below the first sample).
pub fn et_norm(
    times: &[f64],
    fields: &[SpectralField],
    horizon: f64,
    sampling: &CarlesonSampling,
) -> Result<f64> {
    if times.is_empty() || times.len() != fields.len() {
        return Err(Error::InsufficientData("need one field per sample time".into()));
    }
    let grid = *fields[0].grid();
    check_ball_fits(&grid, horizon)?;
    if times[0] <= 0.0 || times.last().copied().unwrap_or(0.0) > horizon * (1.0 + 1e-12) {
        return Err(Error::domain(
            "trajectory times must lie in (0, T]",
        ));
    }
    let dim = grid.dim() as f64;

    let sup_part = times
        .iter()
        .zip(fields)
        .map(|(&t, f)| t.sqrt() * euclidean_linf(f))
        .fold(0.0_f64, f64::max);

    let sq_hat: Vec<Vec<Complex64>> = fields
        .par_iter()
        .map(|f| forward_fft(&grid, &magnitude_sq(f)))
        .collect();

    let outer = sampling.outer_times(horizon);
    let per_t: Vec<f64> = outer
        .par_iter()
        .map(|&t| {
            let kernel_hat = forward_fft(&grid, &ball_kernel(&grid, t.sqrt()));
            let total = grid.total_points();
            let mut integral = vec![0.0; total];

            // Nodes: 0 (constant extension), trajectory times < t, then t.
            let mut nodes: Vec<(f64, Vec<f64>)> = Vec::new();
            let g_first = conv_integral(&grid, &kernel_hat, &sq_hat[0]);
            nodes.push((0.0, g_first));
            for (k, &tk) in times.iter().enumerate() {
                if tk < t * (1.0 - 1e-12) {
                    nodes.push((tk, conv_integral(&grid, &kernel_hat, &sq_hat[k])));
                }
            }
            let u_t = sample_fields(times, fields, t);
            let end_hat = forward_fft(&grid, &magnitude_sq(&u_t));
            nodes.push((t, conv_integral(&grid, &kernel_hat, &end_hat)));

            for pair in nodes.windows(2) {
                let (s0, g0) = &pair[0];
                let (s1, g1) = &pair[1];
                let dt = s1 - s0;
                for (acc, (a, b)) in integral.iter_mut().zip(g0.iter().zip(g1)) {
                    *acc += 0.5 * dt * (a + b);
                }
            }
            let scaled: Vec<f64> = integral.iter().map(|v| v * t.powf(-dim / 2.0)).collect();
            sup_over_centers(&grid, &scaled, sampling.center_stride).max(0.0)
        })
        .collect();

    let carleson = per_t.into_iter().fold(0.0_f64, f64::max).sqrt();
    Ok(sup_part + carleson)
}

fn sample_fields(times: &[f64], fields: &[SpectralField], t: f64) -> SpectralField {
    if t <= times[0] {
        return fields[0].clone();
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return fields[last].clone();
    }
    let hi = times.partition_point(|&u| u < t).max(1);
    let theta = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
    let mut out = fields[hi - 1].scaled(1.0 - theta);
    out.add_scaled(theta, &fields[hi]);
    out
}

/// Pointwise Euclidean magnitude sup of a (possibly vector) field.
fn euclidean_linf(f: &SpectralField) -> f64 {
    let total = f.grid().total_points();
    let phys = f.to_physical();
    let mut best = 0.0_f64;
    for flat in 0..total {
        let mut sq = 0.0;
        for c in 0..f.components() {
            let v = phys[c * total + flat];
            sq += v * v;
        }
        best = best.max(sq);
    }
    best.sqrt()
}

/// Named norm values with optional per-block breakdowns.
#[derive(Debug, Clone, Default)]
pub struct NormReport {
    pub entries: BTreeMap<String, f64>,
    pub blocks: BTreeMap<String, Vec<(i32, f64)>>,
    pub notes: Vec<String>,
}

impl NormReport {
    pub fn insert(&mut self, id: &str, value: f64) {
        debug_assert!(value.is_finite() && value >= 0.0, "{id} = {value}");
        self.entries.insert(id.to_string(), value);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.get(id).copied()
    }
}

/// The composite global-solution norms on a trajectory:
/// the mixed Linf/L1-in-time Besov norm E, the decay-weighted norm
/// `W = sup_t t^{s1/2} ||(q, m1, m2)(t)||_{B^{dim/2-1+s1}}`, the space-time
/// sup of q, and `X = max(E, W) + ||q||_inf`.
pub fn composite_norms(traj: &Trajectory, s1: f64) -> Result<NormReport> {
    let dim = traj.grid().dim() as f64;
    let half = dim / 2.0;
    let times = traj.times().to_vec();
    let q_fields: Vec<SpectralField> = traj.states().iter().map(|s| s.q.clone()).collect();
    let m1_fields: Vec<SpectralField> = traj.states().iter().map(|s| s.m1.clone()).collect();
    let m2_fields: Vec<SpectralField> = traj.states().iter().map(|s| s.m2.clone()).collect();

    let inf = f64::INFINITY;
    let cl = |fields: &[SpectralField], rho: f64, s: f64| -> Result<f64> {
        chemin_lerner_norm(&times, fields, rho, s, inf)
    };

    let q_part = cl(&q_fields, inf, half - 1.0)?
        .max(cl(&q_fields, inf, half)?)
        .max(cl(&q_fields, 1.0, half + 1.0)?)
        .max(cl(&q_fields, 1.0, half + 2.0)?);
    let m1_part = cl(&m1_fields, inf, half - 1.0)?.max(cl(&m1_fields, 1.0, half + 1.0)?);
    let m2_part = cl(&m2_fields, inf, half - 1.0)?.max(cl(&m2_fields, 1.0, half + 1.0)?);
    let e_norm = q_part + m1_part + m2_part;

    let w_norm = traj
        .times()
        .iter()
        .zip(traj.states())
        .map(|(&t, s)| t.powf(s1 / 2.0) * besov_norm(&s.stacked(), half - 1.0 + s1, inf))
        .fold(0.0_f64, f64::max);

    let linf_q = q_fields.iter().map(euclidean_linf).fold(0.0_f64, f64::max);
    let x_norm = e_norm.max(w_norm) + linf_q;

    let mut report = NormReport::default();
    report.insert("E", e_norm);
    report.insert("E_q", q_part);
    report.insert("E_m1", m1_part);
    report.insert("E_m2", m2_part);
    report.insert("W", w_norm);
    report.insert("Linf_q", linf_q);
    report.insert("X", x_norm);
    if !(0.75 < s1 && s1 < 1.0) {
        report
            .notes
            .push(format!("s1 = {s1} outside (3/4, 1); W-norm exponents unsupported there"));
        report.insert("s1_warning", 1.0);
    }
    let dec = DyadicDecomposition::for_grid(traj.grid());
    let last = traj.states().last().expect("nonempty");
    report
        .blocks
        .insert("final_state_profile".into(), dec.profile(&last.stacked()));
    Ok(report)
}
