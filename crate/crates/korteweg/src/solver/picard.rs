//! Picard driver, iteration metrics, and calibration of the fixed-point
//! constants.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::maps::{global_map_psi3, hybrid_map_psi4, local_map_psi, PicardIterate};
use super::{FixedPointConfig, KortewegParams};
use crate::error::{Error, Result};
use crate::norms::{caloric_bmo_norm, composite_norms, et_norm, CarlesonSampling};
use crate::semigroup::{heat_propagate, lobatto_nodes, propagate_full, LinearState};
use crate::spectral::{SpectralField, TorusGrid};
use crate::state::{MildState, Trajectory};

/// Which fixed-point map drives the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    Local,
    Global,
    Hybrid { t_split: f64 },
}

/// Per-iteration record of the Picard run.
#[derive(Debug, Clone, Default)]
pub struct IterationReport {
    /// Successive iterate distances in the iteration metric.
    pub distances: Vec<f64>,
    /// Ratios of consecutive distances.
    pub factors: Vec<f64>,
    /// Geometric contraction factor fitted by least squares on log distances;
    /// reported even when >= 1.
    pub fitted_factor: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    /// Minimum density of each iterate.
    pub min_density: Vec<f64>,
    /// Measured initial smallness (sum of the four caloric bmo norms of the
    /// Leray parts of the momenta).
    pub smallness: f64,
    pub smallness_ok: bool,
    /// Wall-clock seconds per iteration; excluded from deterministic outputs.
    pub wall_seconds: Vec<f64>,
}

impl IterationReport {
    fn fit_factor(&mut self) {
        let usable: Vec<f64> = self
            .distances
            .iter()
            .copied()
            .filter(|&d| d > 1e-300)
            .collect();
        if usable.len() < 2 {
            self.fitted_factor = if self.distances.len() <= 1 { 0.0 } else { 1.0 };
            return;
        }
        let n = usable.len() as f64;
        let mean_x = (usable.len() as f64 - 1.0) / 2.0;
        let mean_y = usable.iter().map(|d| d.ln()).sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, d) in usable.iter().enumerate() {
            let dx = k as f64 - mean_x;
            num += dx * (d.ln() - mean_y);
            den += dx * dx;
        }
        self.fitted_factor = (num / den).exp();
    }
}

/// A finished (or abandoned) Picard run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub data: MildState,
    pub report: IterationReport,
}

/// The linear part of the chosen map applied to the data: the starting
/// iterate of the Picard scheme.
pub fn free_evolution(
    data: &MildState,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    map: MapKind,
    times: &[f64],
) -> Result<PicardIterate> {
    let states: Result<Vec<MildState>> = times
        .iter()
        .map(|&t| free_state(data, p, cfg, map, t))
        .collect();
    Ok(PicardIterate {
        data: data.clone(),
        traj: Trajectory::new(times.to_vec(), states?)?,
    })
}

fn free_state(
    data: &MildState,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    map: MapKind,
    t: f64,
) -> Result<MildState> {
    let local = |t: f64| -> Result<MildState> {
        let q = heat_propagate(&data.q, t, p.c1())?;
        let (pm1, qm1) = data.m1.leray_split();
        let (pm2, qm2) = data.m2.leray_split();
        let mut m1 = heat_propagate(&pm1, t, p.mu)?;
        m1.add_scaled(1.0, &heat_propagate(&qm1, t, p.c2())?);
        let mut m2 = heat_propagate(&pm2, t, p.mu)?;
        m2.add_scaled(1.0, &heat_propagate(&qm2, t, p.c1())?);
        MildState::new(q, m1, m2)
    };
    let global = |t: f64| -> Result<MildState> {
        let out1 = propagate_full(
            &LinearState::new(data.q.clone(), data.m1.clone())?,
            t,
            &p.linear_params_psi1(),
        )?;
        let out2 = propagate_full(
            &LinearState::new(data.q.clone(), data.m2.clone())?,
            t,
            &p.linear_params_psi2(cfg.pairing),
        )?;
        MildState::new(out1.q, out1.m, out2.m)
    };
    match map {
        MapKind::Local => local(t),
        MapKind::Global => global(t),
        MapKind::Hybrid { t_split } => {
            if t <= t_split {
                local(t)
            } else {
                global(t)
            }
        }
    }
}

fn apply_map(
    iterate: &PicardIterate,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    map: MapKind,
) -> Result<PicardIterate> {
    match map {
        MapKind::Local => local_map_psi(iterate, p, cfg),
        MapKind::Global => global_map_psi3(iterate, p, cfg),
        MapKind::Hybrid { t_split } => hybrid_map_psi4(iterate, p, cfg, t_split),
    }
}

/// Distance between two iterates sharing time nodes, in the metric of the
/// chosen map: the weighted E_{R,M,T} norm for the local map
/// (`||dm1||_ET + ||dm2||_ET + ||dq||_inf / weight_beta`), the X-norm for the
/// global and hybrid maps.
pub fn iterate_distance(
    a: &PicardIterate,
    b: &PicardIterate,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    map: MapKind,
) -> Result<f64> {
    let _ = p;
    let diff = a.traj.sub(&b.traj)?;
    match map {
        MapKind::Local => {
            let times = diff.times().to_vec();
            let m1: Vec<SpectralField> = diff.states().iter().map(|s| s.m1.clone()).collect();
            let m2: Vec<SpectralField> = diff.states().iter().map(|s| s.m2.clone()).collect();
            let e1 = et_norm(&times, &m1, cfg.horizon, &cfg.sampling)?;
            let e2 = et_norm(&times, &m2, cfg.horizon, &cfg.sampling)?;
            let q_sup = diff
                .states()
                .iter()
                .map(|s| s.q.linf_norm())
                .fold(0.0_f64, f64::max);
            Ok(e1 + e2 + q_sup / cfg.weight_beta)
        }
        MapKind::Global | MapKind::Hybrid { .. } => {
            let report = composite_norms(&diff, cfg.s1)?;
            Ok(report.get("X").expect("X always present"))
        }
    }
}

/// Sum of the caloric bmo norms of the Leray parts of both initial momenta,
/// the smallness quantity of the local theory.
pub fn measure_smallness(
    data: &MildState,
    horizon: f64,
    sampling: &CarlesonSampling,
) -> Result<f64> {
    let (pm1, qm1) = data.m1.leray_split();
    let (pm2, qm2) = data.m2.leray_split();
    Ok(caloric_bmo_norm(&pm1, horizon, sampling)?
        + caloric_bmo_norm(&qm1, horizon, sampling)?
        + caloric_bmo_norm(&pm2, horizon, sampling)?
        + caloric_bmo_norm(&qm2, horizon, sampling)?)
}

/// Runs the Picard iteration to completion, recording distances and
/// contraction diagnostics. Divergence is flagged in the report rather than
/// raised, so callers can persist the report; [`picard_solve`] is the
/// erroring wrapper.
pub fn picard_drive(
    data: &MildState,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    map: MapKind,
    times: &[f64],
) -> Result<SolveOutcome> {
    if times.is_empty() || times[0] <= 0.0 {
        return Err(Error::domain("picard needs positive time nodes"));
    }
    let mut report = IterationReport::default();
    report.smallness = measure_smallness(data, cfg.horizon, &cfg.sampling)?;
    report.smallness_ok = report.smallness <= cfg.eps1;

    let mut current = free_evolution(data, p, cfg, map, times)?;
    report.min_density.push(current.min_density(p.rho_bar));

    let mut consecutive_bad = 0usize;
    for _ in 0..cfg.max_iter {
        let clock = Instant::now();
        let next = apply_map(&current, p, cfg, map)?;
        let d = iterate_distance(&next, &current, p, cfg, map)?;
        report.wall_seconds.push(clock.elapsed().as_secs_f64());
        report.distances.push(d);
        report.iterations += 1;
        report.min_density.push(next.min_density(p.rho_bar));
        if report.distances.len() >= 2 {
            let prev = report.distances[report.distances.len() - 2];
            let factor = if prev > 0.0 { d / prev } else { 0.0 };
            report.factors.push(factor);
            if factor >= 1.0 {
                consecutive_bad += 1;
            } else {
                consecutive_bad = 0;
            }
        }
        current = next;
        if d < cfg.tol {
            report.converged = true;
            break;
        }
        if consecutive_bad >= 3 {
            report.diverged = true;
            break;
        }
    }
    report.fit_factor();
    Ok(SolveOutcome {
        trajectory: current.traj,
        data: current.data,
        report,
    })
}

/// [`picard_drive`] with divergence promoted to an error.
pub fn picard_solve(
    data: &MildState,
    p: &KortewegParams,
    cfg: &FixedPointConfig,
    map: MapKind,
    times: &[f64],
) -> Result<SolveOutcome> {
    let outcome = picard_drive(data, p, cfg, map, times)?;
    if outcome.report.diverged {
        return Err(Error::Diverged {
            consecutive: 3,
            last_distance: outcome.report.distances.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(outcome)
}

/// Empirical ratio of the heat-kernel bilinear estimate:
/// `|| int_0^t e^{c(t-s)Lap} P div(v (x) w) ds ||_ET / (||v||_ET ||w||_ET)`
/// for vector trajectories v, w on shared nodes.
pub fn bilinear_duhamel_ratio(
    times: &[f64],
    v: &[SpectralField],
    w: &[SpectralField],
    c: f64,
    horizon: f64,
    sampling: &CarlesonSampling,
) -> Result<f64> {
    let grid = *v[0].grid();
    let dim = grid.dim();
    let total = grid.total_points();
    // div(v (x) w)_i = sum_j d_j (v_i w_j), P-projected afterwards.
    let mut sources = Vec::with_capacity(times.len());
    for (vf, wf) in v.iter().zip(w) {
        let vp = vf.dealias().to_physical();
        let wp = wf.dealias().to_physical();
        let mut tensor = vec![0.0; dim * dim * total];
        for i in 0..dim {
            for j in 0..dim {
                let block = &mut tensor[(i * dim + j) * total..(i * dim + j + 1) * total];
                for flat in 0..total {
                    block[flat] = vp[i * total + flat] * wp[j * total + flat];
                }
            }
        }
        let tensor = SpectralField::from_physical(grid, dim * dim, &tensor)?.dealias();
        let mut div = SpectralField::zeros(grid, dim);
        for flat in 0..total {
            if grid.has_nyquist(flat) {
                continue;
            }
            let xi = grid.xi(flat);
            for i in 0..dim {
                let mut acc = num_complex::Complex64::default();
                for j in 0..dim {
                    acc += num_complex::Complex64::new(0.0, xi[j]) * tensor.component(i * dim + j)[flat];
                }
                div.component_mut(i)[flat] = acc;
            }
        }
        let (p_div, _) = div.leray_split();
        sources.push(p_div);
    }

    let mut times0 = Vec::with_capacity(times.len() + 1);
    times0.push(0.0);
    times0.extend_from_slice(times);
    let mut padded = vec![sources[0].clone()];
    padded.extend(sources.iter().cloned());

    let mut outputs = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let mut acc = SpectralField::zeros(grid, dim);
        for k in 0..=j {
            let (a, b) = (times0[k], times0[k + 1]);
            for (s, weight) in lobatto_nodes(b - a, 1) {
                let s_abs = a + s;
                let src = sample_padded(&times0, &padded, s_abs);
                acc.add_scaled(weight, &heat_propagate(&src, t - s_abs, c)?);
            }
        }
        outputs.push(acc);
    }
    let out_norm = et_norm(times, &outputs, horizon, sampling)?;
    let v_norm = et_norm(times, v, horizon, sampling)?;
    let w_norm = et_norm(times, w, horizon, sampling)?;
    Ok(out_norm / (v_norm * w_norm))
}

fn sample_padded(times0: &[f64], values: &[SpectralField], s: f64) -> SpectralField {
    if s <= times0[0] {
        return values[0].clone();
    }
    let last = times0.len() - 1;
    if s >= times0[last] {
        return values[last].clone();
    }
    let hi = times0.partition_point(|&t| t < s).max(1);
    let theta = (s - times0[hi - 1]) / (times0[hi] - times0[hi - 1]);
    let mut out = values[hi - 1].scaled(1.0 - theta);
    out.add_scaled(theta, &values[hi]);
    out
}

/// Measured fixed-point constants and the derived admissibility data.
#[derive(Debug, Clone)]
pub struct Calibration {
    /// Max-principle constant of `|int_0^t e^{c1(t-s)Lap} div m ds|_inf`
    /// against `||m||_ET` over calibration trajectories.
    pub c_linf: f64,
    /// Bilinear Duhamel constant over calibration pairs.
    pub c_bilinear: f64,
    /// Ball radius induced by the data: 4 C1 * (sum of bmo norms).
    pub r: f64,
    /// Largest admissible radius for the measured constants.
    pub r_max: f64,
    /// Value of the contraction expression; < 1 certifies contraction.
    pub contraction_value: f64,
}

/// Heat-evolved random smooth trajectory for calibration corpora.
pub fn calibration_trajectory(
    grid: TorusGrid,
    times: &[f64],
    components: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SpectralField>> {
    let data = random_smooth_field(grid, components, rng);
    times
        .iter()
        .map(|&t| heat_propagate(&data, t, 1.0))
        .collect()
}

/// Random real field with spectrally decaying coefficients (|xi|^-2), zero
/// mean and zeroed Nyquist modes.
pub fn random_smooth_field(grid: TorusGrid, components: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let total = grid.total_points();
    let mut phys = vec![0.0; components * total];
    // Superpose a fixed band of random cosines; smooth by construction.
    let kmax = 4usize.min(grid.points_per_dim() / 4);
    for c in 0..components {
        for _ in 0..12 {
            let k0 = rng.gen_range(-(kmax as i64)..=kmax as i64);
            let k1 = if grid.dim() == 2 {
                rng.gen_range(-(kmax as i64)..=kmax as i64)
            } else {
                0
            };
            if k0 == 0 && k1 == 0 {
                continue;
            }
            let amp = rng.gen_range(-1.0..1.0) / ((k0 * k0 + k1 * k1) as f64);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let base = 2.0 * std::f64::consts::PI / grid.side_length();
            for flat in 0..total {
                let x = grid.point(flat);
                phys[c * total + flat] +=
                    amp * (base * (k0 as f64 * x[0] + k1 as f64 * x[1]) + phase).cos();
            }
        }
    }
    SpectralField::from_physical(grid, components, &phys).expect("shape correct by construction")
}

/// Measures the implementation constants on calibration fields and derives
/// the admissible radius and horizon for the given data.
///
/// The returned config carries the measured radius `r = 4 C1 * smallness`,
/// `1/M = (min rho_0)/2`, a density weight making the contraction expression
/// small, and a horizon shrunk until both the invariance inequalities and the
/// contraction condition hold (the contraction value is reported either way).
pub fn calibrate(
    data: &MildState,
    p: &KortewegParams,
    horizon: f64,
    seed: u64,
) -> Result<(FixedPointConfig, Calibration)> {
    use rand::SeedableRng;
    let grid = *data.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = 8usize;
    let times: Vec<f64> = (1..=nodes)
        .map(|j| horizon * (j as f64 / nodes as f64).powi(2))
        .collect();
    let sampling = CarlesonSampling {
        center_stride: 8,
        t_levels: 8,
        s_levels: 12,
        subdiv: 1,
    };

    let mut c_linf = 0.0_f64;
    let mut c_bilinear = 0.0_f64;
    for _ in 0..3 {
        let m = calibration_trajectory(grid, &times, grid.dim(), &mut rng)?;
        let m_norm = et_norm(&times, &m, horizon, &sampling)?;
        // |int_0^t e^{c1(t-s)Lap} div m ds|_inf over the nodes.
        let mut times0 = vec![0.0];
        times0.extend_from_slice(&times);
        let mut padded = vec![m[0].divergence()];
        padded.extend(m.iter().map(|f| f.divergence()));
        let mut worst = 0.0_f64;
        for (j, &t) in times.iter().enumerate() {
            let mut acc = SpectralField::zeros(grid, 1);
            for k in 0..=j {
                let (a, b) = (times0[k], times0[k + 1]);
                for (s, w) in lobatto_nodes(b - a, 1) {
                    let s_abs = a + s;
                    acc.add_scaled(w, &heat_propagate(&sample_padded(&times0, &padded, s_abs), t - s_abs, p.c1())?);
                }
            }
            worst = worst.max(acc.linf_norm());
        }
        c_linf = c_linf.max(worst / m_norm);

        let v = calibration_trajectory(grid, &times, grid.dim(), &mut rng)?;
        let w = calibration_trajectory(grid, &times, grid.dim(), &mut rng)?;
        c_bilinear = c_bilinear.max(bilinear_duhamel_ratio(
            &times, &v, &w, p.c1(), horizon, &sampling,
        )?);
    }

    let smallness = measure_smallness(data, horizon, &sampling)?;
    let r = 4.0 * c_bilinear * smallness;

    let rho_phys: Vec<f64> = {
        let mut rho = data.q.clone();
        let mean = rho.mean_mode(0);
        rho.set_mean_mode(0, mean + num_complex::Complex64::new(p.rho_bar, 0.0));
        rho.to_physical()
    };
    let rho_min = rho_phys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let rho_max = rho_phys.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if rho_min <= 0.0 {
        return Err(Error::Vacuum { min_density: rho_min });
    }
    let m_bound = 2.0 / rho_min;
    let r_max = (rho_min / 2.0).min(rho_max) / (2.0 * c_linf.max(1e-12));
    let r_max = r_max.min(1.0 / (8.0 * c_bilinear.max(1e-12) * m_bound));

    // Pressure sups over the density range [0, 2 max rho_0].
    let hi = 2.0 * rho_max;
    let m1_sup = p.pressure(hi).max(p.pressure(0.0));
    let m2_sup = p.pressure_prime(hi).max(p.pressure_prime(0.0).abs());

    let weight_beta = 4.0 * c_linf.max(1.0);
    let mut t_pick = horizon;
    let contraction = |t: f64| {
        let c = c_bilinear.max(c_linf);
        c * (m_bound * (r + m_bound * weight_beta * r * r)
            + m2_sup * weight_beta * t
            + 1.0 / weight_beta)
    };
    for _ in 0..60 {
        let invariance = c_bilinear * m1_sup * t_pick <= r / 4.0 || r == 0.0;
        if contraction(t_pick) < 1.0 && invariance {
            break;
        }
        t_pick *= 0.5;
    }
    let contraction_value = contraction(t_pick);

    let mut cfg = FixedPointConfig::new(t_pick);
    cfg.r = r;
    cfg.r1 = r;
    cfg.m_bound = m_bound;
    cfg.weight_beta = weight_beta;
    cfg.eps1 = r_max / (4.0 * c_bilinear.max(1e-12));
    Ok((
        cfg,
        Calibration {
            c_linf,
            c_bilinear,
            r,
            r_max,
            contraction_value,
        },
    ))
}
