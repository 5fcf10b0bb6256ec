//! Batch front-end: plain `key = value` run configurations, one command per
//! process, CSV tables and KWF1 snapshots on disk.
//!
//! Recognized keys and defaults (unknown keys are rejected):
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | command | (required) | solve, semigroup-test, norms, oseen-compare, shock-test, scaling-test, decay-fit |
//! | dim | 2 | spatial dimension (1 or 2) |
//! | n | 64 | grid points per axis (even, >= 8) |
//! | L | 2 pi | box side length |
//! | mu | 1.0 | shear viscosity |
//! | kappa | 0.8 | capillarity, 0 < kappa^2 <= mu^2 |
//! | rho_bar | 1.0 | reference density |
//! | pressure_a, pressure_gamma | 1.0, 1.0 | pressure law P = a rho^gamma |
//! | T | 0.1 | horizon |
//! | T_split | 0.0 | hybrid-map split time |
//! | nodes | 12 | positive time nodes t_j = T (j/nodes)^2 |
//! | tol | 1e-7 | Picard stopping tolerance |
//! | max_iter | 20 | Picard iteration cap |
//! | map | local | local, global or hybrid |
//! | psi2_pairing | eq381 | eq381 or eq386 grad-div pairing of the second global map |
//! | scenario | random | equilibrium, random, shock or oseen initial data |
//! | amplitude | 0.01 | size of the random scenario data |
//! | alpha | 0.05 | Oseen circulation |
//! | t0 | 0.02 | Oseen initialization time |
//! | shock_left, shock_right | 1.0, 1.2 | shock plateau densities |
//! | shock_width | 3.0 | shock smoothing width in cells |
//! | lambda | 2.0 | scaling-test rescaling factor |
//! | s, s1 | 0.0, 1.0 | decay-fit Besov indices |
//! | snapshot_times | (empty) | comma-separated times for KWF1 snapshots |
//! | seed | 0 | RNG seed (CLI --seed overrides) |
//! | out | . | output directory (CLI --out overrides) |
//!
//! Every run writes `manifest.txt` (effective config echo, code version,
//! seed). CSV outputs are byte-deterministic for a fixed config and seed;
//! wall-clock timings go to the separate, non-deterministic `timings.txt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::norms::{caloric_bmo_norm, composite_norms, et_norm, besov_norm, CarlesonSampling};
use crate::scenarios::{fit_decay, oseen_fields, oseen_reference, shock_density, OseenSpec};
use crate::semigroup::{propagate_full, LinearParams, LinearState};
use crate::snapshot::write_snapshot_file;
use crate::solver::{
    effective_momenta, free_evolution, picard_drive, random_smooth_field, residual_check,
    FixedPointConfig, KortewegParams, MapKind, PicardIterate, Psi2Pairing, SolveOutcome,
};
use crate::spectral::{DyadicDecomposition, SpectralField, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    SemigroupTest,
    Norms,
    OseenCompare,
    ShockTest,
    ScalingTest,
    DecayFit,
}

impl Command {
    fn parse(s: &str) -> Option<Command> {
        Some(match s {
            "solve" => Command::Solve,
            "semigroup-test" => Command::SemigroupTest,
            "norms" => Command::Norms,
            "oseen-compare" => Command::OseenCompare,
            "shock-test" => Command::ShockTest,
            "scaling-test" => Command::ScalingTest,
            "decay-fit" => Command::DecayFit,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SemigroupTest => "semigroup-test",
            Command::Norms => "norms",
            Command::OseenCompare => "oseen-compare",
            Command::ShockTest => "shock-test",
            Command::ScalingTest => "scaling-test",
            Command::DecayFit => "decay-fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Equilibrium,
    Random,
    Shock,
    Oseen,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub dim: usize,
    pub n: usize,
    pub side_length: f64,
    pub mu: f64,
    pub kappa: f64,
    pub rho_bar: f64,
    pub pressure_a: f64,
    pub pressure_gamma: f64,
    pub horizon: f64,
    pub t_split: f64,
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub map: MapKind,
    pub pairing: Psi2Pairing,
    pub scenario: Scenario,
    pub amplitude: f64,
    pub alpha: f64,
    pub t0: f64,
    pub shock_left: f64,
    pub shock_right: f64,
    pub shock_width: f64,
    pub lambda: f64,
    pub s: f64,
    pub s1: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Parse result: the config plus any warning lines (duplicate keys).
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "dim",
    "n",
    "L",
    "mu",
    "kappa",
    "rho_bar",
    "pressure_a",
    "pressure_gamma",
    "T",
    "T_split",
    "nodes",
    "tol",
    "max_iter",
    "map",
    "psi2_pairing",
    "scenario",
    "amplitude",
    "alpha",
    "t0",
    "shock_left",
    "shock_right",
    "shock_width",
    "lambda",
    "s",
    "s1",
    "snapshot_times",
    "seed",
    "out",
];

/// Parses `key = value` lines with `#` comments. Unknown keys are rejected
/// with their line number; a duplicated key keeps the last value and emits a
/// warning.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let mut values: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line_no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::config(line_no, "empty key"));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::config(line_no, format!("unknown key {key:?}")));
        }
        if let Some((_, first_line)) = values.get(key) {
            warnings.push(format!(
                "warning: duplicate key {key:?} on line {line_no} overrides line {first_line}"
            ));
        }
        values.insert(key.to_string(), (value.to_string(), line_no));
    }

    let lookup = |key: &str| values.get(key).cloned();
    let f64_key = |key: &str, default: f64| -> Result<f64> {
        match lookup(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse::<f64>()
                .map_err(|_| Error::config(line, format!("{key} expects a number, got {v:?}"))),
        }
    };
    let usize_key = |key: &str, default: usize| -> Result<usize> {
        match lookup(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse::<usize>()
                .map_err(|_| Error::config(line, format!("{key} expects a non-negative integer, got {v:?}"))),
        }
    };

    let (command, command_line) = match lookup("command") {
        None => return Err(Error::config(0, "missing required key \"command\"")),
        Some((v, line)) => (
            Command::parse(&v).ok_or_else(|| {
                Error::config(line, format!("unknown command {v:?}"))
            })?,
            line,
        ),
    };

    let dim = usize_key("dim", 2)?;
    let n = usize_key("n", 64)?;
    let side_length = f64_key("L", std::f64::consts::TAU)?;
    let mu = f64_key("mu", 1.0)?;
    let kappa = f64_key("kappa", 0.8)?;
    let rho_bar = f64_key("rho_bar", 1.0)?;
    let pressure_a = f64_key("pressure_a", 1.0)?;
    let pressure_gamma = f64_key("pressure_gamma", 1.0)?;

    // Physics invariants are enforced before any run starts; cite the line
    // of the key that broke them when we can.
    TorusGrid::new(dim, n, side_length).map_err(|e| {
        let line = lookup("n").or_else(|| lookup("dim")).or_else(|| lookup("L"));
        Error::config(line.map(|(_, l)| l).unwrap_or(command_line), e.to_string())
    })?;
    KortewegParams::new(mu, kappa, rho_bar, pressure_a, pressure_gamma).map_err(|e| {
        let line = lookup("kappa").or_else(|| lookup("mu"));
        Error::config(line.map(|(_, l)| l).unwrap_or(command_line), e.to_string())
    })?;

    let map = match lookup("map") {
        None => MapKind::Local,
        Some((v, line)) => match v.as_str() {
            "local" => MapKind::Local,
            "global" => MapKind::Global,
            "hybrid" => MapKind::Hybrid {
                t_split: f64_key("T_split", 0.0)?,
            },
            other => {
                return Err(Error::config(
                    line,
                    format!("map expects local|global|hybrid, got {other:?}"),
                ))
            }
        },
    };
    let pairing = match lookup("psi2_pairing") {
        None => Psi2Pairing::Eq381,
        Some((v, line)) => match v.as_str() {
            "eq381" => Psi2Pairing::Eq381,
            "eq386" => Psi2Pairing::Eq386,
            other => {
                return Err(Error::config(
                    line,
                    format!("psi2_pairing expects eq381|eq386, got {other:?}"),
                ))
            }
        },
    };
    let scenario = match lookup("scenario") {
        None => Scenario::Random,
        Some((v, line)) => match v.as_str() {
            "equilibrium" => Scenario::Equilibrium,
            "random" => Scenario::Random,
            "shock" => Scenario::Shock,
            "oseen" => Scenario::Oseen,
            other => {
                return Err(Error::config(
                    line,
                    format!("scenario expects equilibrium|random|shock|oseen, got {other:?}"),
                ))
            }
        },
    };

    let snapshot_times = match lookup("snapshot_times") {
        None => Vec::new(),
        Some((v, line)) => v
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::config(line, format!("snapshot_times expects comma-separated numbers, got {s:?}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?,
    };

    let horizon = f64_key("T", 0.1)?;
    if !(horizon > 0.0) {
        let line = lookup("T").map(|(_, l)| l).unwrap_or(command_line);
        return Err(Error::config(line, format!("T must be > 0, got {horizon}")));
    }
    let nodes = usize_key("nodes", 12)?;
    if nodes < 2 {
        let line = lookup("nodes").map(|(_, l)| l).unwrap_or(command_line);
        return Err(Error::config(line, "nodes must be >= 2"));
    }
    let seed = match lookup("seed") {
        None => 0,
        Some((v, line)) => v
            .parse::<u64>()
            .map_err(|_| Error::config(line, format!("seed expects a u64, got {v:?}")))?,
    };

    let config = RunConfig {
        command,
        dim,
        n,
        side_length,
        mu,
        kappa,
        rho_bar,
        pressure_a,
        pressure_gamma,
        horizon,
        t_split: f64_key("T_split", 0.0)?,
        nodes,
        tol: f64_key("tol", 1e-7)?,
        max_iter: usize_key("max_iter", 20)?,
        map,
        pairing,
        scenario,
        amplitude: f64_key("amplitude", 0.01)?,
        alpha: f64_key("alpha", 0.05)?,
        t0: f64_key("t0", 0.02)?,
        shock_left: f64_key("shock_left", 1.0)?,
        shock_right: f64_key("shock_right", 1.2)?,
        shock_width: f64_key("shock_width", 3.0)?,
        lambda: f64_key("lambda", 2.0)?,
        s: f64_key("s", 0.0)?,
        s1: f64_key("s1", 1.0)?,
        snapshot_times,
        seed,
        out: lookup("out")
            .map(|(v, _)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    Ok(ParsedConfig { config, warnings })
}

impl RunConfig {
    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.dim, self.n, self.side_length).expect("validated at parse time")
    }

    pub fn physics(&self) -> KortewegParams {
        KortewegParams::new(
            self.mu,
            self.kappa,
            self.rho_bar,
            self.pressure_a,
            self.pressure_gamma,
        )
        .expect("validated at parse time")
    }

    pub fn time_nodes(&self) -> Vec<f64> {
        (1..=self.nodes)
            .map(|j| self.horizon * (j as f64 / self.nodes as f64).powi(2))
            .collect()
    }

    fn fixed_point_config(&self) -> FixedPointConfig {
        let mut cfg = FixedPointConfig::new(self.horizon);
        cfg.tol = self.tol;
        cfg.max_iter = self.max_iter;
        cfg.s1 = if 0.75 < self.s1 && self.s1 < 1.0 { self.s1 } else { 0.8 };
        cfg.pairing = self.pairing;
        cfg
    }

    /// Effective config echo, sorted by key; the manifest body.
    pub fn echo(&self) -> String {
        let mut pairs: Vec<(String, String)> = vec![
            ("command".into(), self.command.name().into()),
            ("dim".into(), self.dim.to_string()),
            ("n".into(), self.n.to_string()),
            ("L".into(), fmt_f64(self.side_length)),
            ("mu".into(), fmt_f64(self.mu)),
            ("kappa".into(), fmt_f64(self.kappa)),
            ("rho_bar".into(), fmt_f64(self.rho_bar)),
            ("pressure_a".into(), fmt_f64(self.pressure_a)),
            ("pressure_gamma".into(), fmt_f64(self.pressure_gamma)),
            ("T".into(), fmt_f64(self.horizon)),
            ("T_split".into(), fmt_f64(self.t_split)),
            ("nodes".into(), self.nodes.to_string()),
            ("tol".into(), fmt_f64(self.tol)),
            ("max_iter".into(), self.max_iter.to_string()),
            (
                "map".into(),
                match self.map {
                    MapKind::Local => "local".into(),
                    MapKind::Global => "global".into(),
                    MapKind::Hybrid { .. } => "hybrid".into(),
                },
            ),
            (
                "psi2_pairing".into(),
                match self.pairing {
                    Psi2Pairing::Eq381 => "eq381".into(),
                    Psi2Pairing::Eq386 => "eq386".into(),
                },
            ),
            (
                "scenario".into(),
                match self.scenario {
                    Scenario::Equilibrium => "equilibrium".into(),
                    Scenario::Random => "random".into(),
                    Scenario::Shock => "shock".into(),
                    Scenario::Oseen => "oseen".into(),
                },
            ),
            ("amplitude".into(), fmt_f64(self.amplitude)),
            ("alpha".into(), fmt_f64(self.alpha)),
            ("t0".into(), fmt_f64(self.t0)),
            ("shock_left".into(), fmt_f64(self.shock_left)),
            ("shock_right".into(), fmt_f64(self.shock_right)),
            ("shock_width".into(), fmt_f64(self.shock_width)),
            ("lambda".into(), fmt_f64(self.lambda)),
            ("s".into(), fmt_f64(self.s)),
            ("s1".into(), fmt_f64(self.s1)),
            (
                "snapshot_times".into(),
                self.snapshot_times
                    .iter()
                    .map(|t| fmt_f64(*t))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("seed".into(), self.seed.to_string()),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

/// Executes the configured command, writing the manifest and all artifacts
/// into the output directory.
pub fn run(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out)?;
    let manifest = format!(
        "# korteweg run manifest\nversion = {}\nseed = {}\n{}",
        env!("CARGO_PKG_VERSION"),
        config.seed,
        config.echo()
    );
    std::fs::write(config.out.join("manifest.txt"), manifest)?;

    match config.command {
        Command::Solve => run_solve(config),
        Command::SemigroupTest => run_semigroup_test(config),
        Command::Norms => run_norms(config),
        Command::OseenCompare => run_oseen_compare(config),
        Command::ShockTest => run_shock_test(config),
        Command::ScalingTest => run_scaling_test(config),
        Command::DecayFit => run_decay_fit(config),
    }
}

fn write_csv(config: &RunConfig, name: &str, content: &str) -> Result<()> {
    std::fs::write(config.out.join(name), content)?;
    Ok(())
}

/// Initial data for the configured scenario.
pub fn scenario_data(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<crate::state::MildState> {
    let grid = config.grid();
    let p = config.physics();
    match config.scenario {
        Scenario::Equilibrium => Ok(crate::state::MildState::zeros(grid)),
        Scenario::Random => {
            let bump = random_smooth_field(grid, 1, rng).scaled(config.amplitude);
            let mut rho = bump;
            let mean = rho.mean_mode(0);
            rho.set_mean_mode(0, mean + num_complex::Complex64::new(config.rho_bar, 0.0));
            let u = random_smooth_field(grid, grid.dim(), rng).scaled(config.amplitude);
            effective_momenta(&rho, &u, &p)
        }
        Scenario::Shock => {
            let rho = shock_density(&grid, config.shock_left, config.shock_right, config.shock_width)?;
            let u = SpectralField::zeros(grid, grid.dim());
            effective_momenta(&rho, &u, &p)
        }
        Scenario::Oseen => {
            if grid.dim() != 2 {
                return Err(Error::domain("oseen scenario needs dim = 2"));
            }
            let spec = OseenSpec::new(config.alpha, config.t0, [0.0, 0.0])?;
            let (_, velocity) = oseen_fields(&spec, &grid)?;
            let q = SpectralField::zeros(grid, 1);
            crate::state::MildState::new(q, velocity.clone(), velocity)
        }
    }
}

fn solve_outcome_csv(outcome: &SolveOutcome) -> String {
    let mut csv = String::from("iteration,distance,contraction_estimate,min_rho\n");
    for (k, d) in outcome.report.distances.iter().enumerate() {
        let factor = if k == 0 {
            f64::NAN
        } else {
            outcome.report.factors[k - 1]
        };
        let min_rho = outcome.report.min_density[(k + 1).min(outcome.report.min_density.len() - 1)];
        let _ = writeln!(csv, "{},{},{},{}", k + 1, fmt_f64(*d), fmt_f64(factor), fmt_f64(min_rho));
    }
    csv
}

fn run_solve(config: &RunConfig) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = config.physics();
    let data = scenario_data(config, &mut rng)?;
    let cfg = config.fixed_point_config();
    let times = config.time_nodes();
    let outcome = picard_drive(&data, &p, &cfg, config.map, &times)?;

    write_csv(config, "iterations.csv", &solve_outcome_csv(&outcome))?;
    let mut timing = String::from("# wall seconds per iteration (not covered by determinism)\n");
    for (k, w) in outcome.report.wall_seconds.iter().enumerate() {
        let _ = writeln!(timing, "iteration {} {:.6}", k + 1, w);
    }
    std::fs::write(config.out.join("timings.txt"), timing)?;

    let iterate = PicardIterate {
        data: data.clone(),
        traj: outcome.trajectory.clone(),
    };
    if outcome.trajectory.len() >= 3 {
        let rows = residual_check(&iterate, &p)?;
        let mut csv = String::from("t,mass_residual,momentum1_residual,momentum2_residual\n");
        for row in rows {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                fmt_f64(row.time),
                fmt_f64(row.mass),
                fmt_f64(row.momentum1),
                fmt_f64(row.momentum2)
            );
        }
        write_csv(config, "residuals.csv", &csv)?;
    }
    for (idx, &t) in config.snapshot_times.iter().enumerate() {
        let state = iterate.sample(t);
        write_snapshot_file(
            &config.out.join(format!("state_{idx:03}.kwf1")),
            &state.stacked(),
        )?;
    }
    if outcome.report.diverged {
        return Err(Error::Diverged {
            consecutive: 3,
            last_distance: outcome.report.distances.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Per-block decay-bound fits of the semigroup, written as one CSV row per
/// block: fitted kappa and the matching prefactor C.
fn run_semigroup_test(config: &RunConfig) -> Result<()> {
    let grid = config.grid();
    let p = config.physics().linear_params_psi1();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut csv = String::from("block,kappa,prefactor,samples\n");
    for (l, kappa, c, samples) in per_block_decay_fits(&grid, &p, &mut rng)? {
        let _ = writeln!(csv, "{l},{},{},{samples}", fmt_f64(kappa), fmt_f64(c));
    }
    write_csv(config, "block_decay.csv", &csv)
}

/// Shared engine for the per-block decay experiment.
pub fn per_block_decay_fits(
    grid: &TorusGrid,
    p: &LinearParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(i32, f64, f64, usize)>> {
    let dec = DyadicDecomposition::for_grid(grid);
    let (l_min, l_max) = dec.block_range();
    let mut out = Vec::new();
    for l in (l_min + 1)..l_max {
        let data = block_state(grid, &dec, l, rng);
        let base = dec.block(&data.stacked(), l).l2_norm();
        if base < 1e-12 {
            continue;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let t_max = 4.0 * 2f64.powi(-2 * l);
        for i in 1..=8 {
            let t = t_max * i as f64 / 8.0;
            let evolved = propagate_full(&data, t, p)?;
            let norm = dec.block(&evolved.stacked(), l).l2_norm();
            if norm > 1e-300 {
                xs.push(2f64.powi(2 * l) * t);
                ys.push((norm / base).ln());
            }
        }
        let (kappa, c) = decay_bound_fit(&xs, &ys);
        out.push((l, kappa, c, xs.len()));
    }
    Ok(out)
}

/// Random (q, m) data spectrally supported in block l.
pub fn block_state(
    grid: &TorusGrid,
    dec: &DyadicDecomposition,
    l: i32,
    rng: &mut ChaCha8Rng,
) -> LinearState {
    use rand::Rng;
    let total = grid.total_points();
    let mut phys = vec![0.0; (1 + grid.dim()) * total];
    for v in phys.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let q = SpectralField::from_physical(*grid, 1, &phys[..total]).expect("shape ok");
    let m = SpectralField::from_physical(*grid, grid.dim(), &phys[total..]).expect("shape ok");
    LinearState {
        q: dec.block(&q, l),
        m: dec.block(&m, l),
    }
}

/// Least-squares decay fit y ~ ln C - kappa x, with C lifted so the bound
/// holds on every sample.
pub fn decay_bound_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let kappa = -sxy / sxx;
    let log_c = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y + kappa * x)
        .fold(f64::NEG_INFINITY, f64::max);
    (kappa, log_c.exp())
}

fn run_norms(config: &RunConfig) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = config.physics();
    let data = scenario_data(config, &mut rng)?;
    let cfg = config.fixed_point_config();
    let times = config.time_nodes();
    let free = free_evolution(&data, &p, &cfg, config.map, &times)?;

    let sampling = CarlesonSampling::default_for(&config.grid());
    let report = composite_norms(&free.traj, config.s1)?;
    let mut csv = String::from("norm,value\n");
    for (k, v) in &report.entries {
        let _ = writeln!(csv, "{k},{}", fmt_f64(*v));
    }
    let bmo_m1 = caloric_bmo_norm(&data.m1, config.horizon, &sampling)?;
    let _ = writeln!(csv, "bmo_m1,{}", fmt_f64(bmo_m1));
    let m1_fields: Vec<SpectralField> = free.traj.states().iter().map(|s| s.m1.clone()).collect();
    let et_m1 = et_norm(&times, &m1_fields, config.horizon, &sampling)?;
    let _ = writeln!(csv, "et_m1,{}", fmt_f64(et_m1));
    let _ = writeln!(
        csv,
        "besov_q0_half,{}",
        fmt_f64(besov_norm(&data.q, config.dim as f64 / 2.0, f64::INFINITY))
    );
    write_csv(config, "norms.csv", &csv)
}

fn oseen_error(config: &RunConfig, alpha: f64) -> Result<(f64, f64)> {
    let grid = config.grid();
    let p = config.physics();
    let spec = OseenSpec::new(alpha, config.t0, [0.0, 0.0])?;
    let (_, velocity) = oseen_fields(&spec, &grid)?;
    let data = crate::state::MildState::new(
        SpectralField::zeros(grid, 1),
        velocity.clone(),
        velocity,
    )?;
    let mut cfg = config.fixed_point_config();
    cfg.tol = cfg.tol.min(1e-9);
    let times = config.time_nodes();
    let outcome = picard_drive(&data, &p, &cfg, MapKind::Global, &times)?;
    let final_state = outcome.trajectory.states().last().expect("nonempty");
    let curl = final_state.m1.curl2d();
    // Linear prediction: the momentum vorticity heat-flows with coefficient
    // mu, so the Gaussian core sits at t0 + mu * elapsed. The comparison acts
    // on mean-free parts; a torus cannot carry the uniform alpha/L^2
    // background.
    let t_abs = config.t0 + p.mu * config.horizon;
    let reference = oseen_reference(&spec, &grid, t_abs)?.homogeneous_part();
    let err = curl.sub(&reference).l2_norm();
    Ok((err, reference.l2_norm()))
}

fn run_oseen_compare(config: &RunConfig) -> Result<()> {
    let mut csv = String::from("alpha,error_l2,reference_l2\n");
    let (e_full, r_full) = oseen_error(config, config.alpha)?;
    let (e_half, r_half) = oseen_error(config, config.alpha / 2.0)?;
    let _ = writeln!(csv, "{},{},{}", fmt_f64(config.alpha), fmt_f64(e_full), fmt_f64(r_full));
    let _ = writeln!(csv, "{},{},{}", fmt_f64(config.alpha / 2.0), fmt_f64(e_half), fmt_f64(r_half));
    let _ = writeln!(csv, "ratio,{},", fmt_f64(e_full / e_half));
    write_csv(config, "oseen_compare.csv", &csv)
}

fn run_shock_test(config: &RunConfig) -> Result<()> {
    let grid = config.grid();
    let p = config.physics();
    let rho = shock_density(&grid, config.shock_left, config.shock_right, config.shock_width)?;
    let u = SpectralField::zeros(grid, grid.dim());
    let data = effective_momenta(&rho, &u, &p)?;
    let cfg = config.fixed_point_config();
    let times = config.time_nodes();
    let outcome = picard_drive(&data, &p, &cfg, config.map, &times)?;

    let mut csv = String::from("t,grad_rho_linf,sqrt_t_weighted\n");
    for (t, state) in outcome.trajectory.times().iter().zip(outcome.trajectory.states()) {
        let grad = state.q.gradient();
        let linf = euclidean_sup(&grad);
        let _ = writeln!(csv, "{},{},{}", fmt_f64(*t), fmt_f64(linf), fmt_f64(t.sqrt() * linf));
    }
    write_csv(config, "shock_regularization.csv", &csv)
}

fn euclidean_sup(f: &SpectralField) -> f64 {
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

fn run_scaling_test(config: &RunConfig) -> Result<()> {
    if (config.kappa * config.kappa - config.mu * config.mu).abs() > 1e-12 {
        return Err(Error::domain(
            "scaling-test requires the degenerate case kappa^2 = mu^2",
        ));
    }
    let lambda = config.lambda;
    let discrepancy = scaling_twin_discrepancy(config, lambda)?;
    let mut csv = String::from("lambda,rel_l2_q,rel_l2_m1\n");
    let _ = writeln!(
        csv,
        "{},{},{}",
        fmt_f64(lambda),
        fmt_f64(discrepancy.0),
        fmt_f64(discrepancy.1)
    );
    write_csv(config, "scaling_twin.csv", &csv)
}

/// Runs the base configuration and its lambda-twin; returns relative L^2
/// discrepancies of q and m1 on the common lattice at the final time.
pub fn scaling_twin_discrepancy(config: &RunConfig, lambda: f64) -> Result<(f64, f64)> {
    let mut rng_a = ChaCha8Rng::seed_from_u64(config.seed);
    let p_a = config.physics();
    let data_a = scenario_data(config, &mut rng_a)?;
    let cfg_a = config.fixed_point_config();
    let times_a = config.time_nodes();
    let out_a = picard_drive(&data_a, &p_a, &cfg_a, config.map, &times_a)?;

    // Twin: box/lambda, horizon/lambda^2, pressure * lambda^2; the sampled
    // data arrays coincide index-by-index, with u gaining a factor lambda.
    let grid_b = TorusGrid::new(config.dim, config.n, config.side_length / lambda)?;
    let p_b = KortewegParams::new(
        config.mu,
        config.kappa,
        config.rho_bar,
        config.pressure_a * lambda * lambda,
        config.pressure_gamma,
    )?;
    let mut rng_b = ChaCha8Rng::seed_from_u64(config.seed);
    let data_a_again = scenario_data(config, &mut rng_b)?;
    let (rho_a, u_a, _) = crate::solver::reconstruct(&data_a_again, &p_a)?;
    let rho_b = SpectralField::from_physical(grid_b, 1, &rho_a.to_physical())?;
    let u_b = SpectralField::from_physical(grid_b, grid_b.dim(), &u_a.scaled(lambda).to_physical())?;
    let data_b = effective_momenta(&rho_b, &u_b, &p_b)?;

    let mut config_b = config.clone();
    config_b.horizon = config.horizon / (lambda * lambda);
    let mut cfg_b = config_b.fixed_point_config();
    cfg_b.tol = cfg_a.tol / lambda;
    let times_b: Vec<f64> = times_a.iter().map(|t| t / (lambda * lambda)).collect();
    let out_b = picard_drive(&data_b, &p_b, &cfg_b, config.map, &times_b)?;

    let last_a = out_a.trajectory.states().last().expect("nonempty");
    let last_b = out_b.trajectory.states().last().expect("nonempty");
    let q_a = last_a.q.to_physical();
    let q_b = last_b.q.to_physical();
    let rel_q = rel_l2(&q_a, &q_b, 1.0);
    let m_a = last_a.m1.to_physical();
    let m_b = last_b.m1.to_physical();
    let rel_m = rel_l2(&m_a, &m_b, lambda);
    Ok((rel_q, rel_m))
}

fn rel_l2(a: &[f64], b_scaled: &[f64], scale_b: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b_scaled) {
        let yb = y / scale_b;
        num += (x - yb) * (x - yb);
        den += x * x;
    }
    (num / den.max(1e-300)).sqrt()
}

fn run_decay_fit(config: &RunConfig) -> Result<()> {
    let grid = config.grid();
    let p = config.physics().linear_params_psi1();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (times, values, fit) = semigroup_decay_experiment(&grid, &p, config.s, config.s1, &mut rng)?;
    let mut csv = String::from("t,besov_norm\n");
    for (t, v) in times.iter().zip(&values) {
        let _ = writeln!(csv, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    let _ = writeln!(csv, "# exponent,{}", fmt_f64(fit.exponent));
    let _ = writeln!(csv, "# r_squared,{}", fmt_f64(fit.r_squared));
    write_csv(config, "decay_fit.csv", &csv)
}

/// Evolves broadband data with unit B^s_{2,inf} block profile and fits the
/// decay of the B^{s1}_{2,inf} norm over the resolved band.
pub fn semigroup_decay_experiment(
    grid: &TorusGrid,
    p: &LinearParams,
    s: f64,
    s1: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>, crate::scenarios::DecayFit)> {
    let dec = DyadicDecomposition::for_grid(grid);
    let (l_min, l_max) = dec.block_range();
    let data = broadband_state(grid, &dec, s, rng);

    // Fit window where the sup over blocks is resolved: the saturating block
    // 2^{2l} ~ 1/t must sit strictly inside the band.
    let l_lo = l_min + 1;
    let l_hi = l_max - 2;
    let t_min = 2f64.powi(-2 * l_hi);
    let t_max = 2f64.powi(-2 * l_lo);
    let samples = 24;
    let mut times = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = t_min * (t_max / t_min).powf(i as f64 / (samples - 1) as f64);
        let evolved = propagate_full(&data, t, p)?;
        times.push(t);
        values.push(besov_norm(&evolved.stacked(), s1, f64::INFINITY));
    }
    let fit = fit_decay(&times, &values)?;
    Ok((times, values, fit))
}

/// Random data with exact block profile ||Delta_l u|| = 2^{-l s}.
pub fn broadband_state(
    grid: &TorusGrid,
    dec: &DyadicDecomposition,
    s: f64,
    rng: &mut ChaCha8Rng,
) -> LinearState {
    use rand::Rng;
    let total = grid.total_points();
    let dim = grid.dim();
    let mut phys = vec![0.0; (1 + dim) * total];
    for v in phys.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let q_noise = SpectralField::from_physical(*grid, 1, &phys[..total]).expect("shape ok");
    let m_noise = SpectralField::from_physical(*grid, dim, &phys[total..]).expect("shape ok");
    let mut q = SpectralField::zeros(*grid, 1);
    let mut m = SpectralField::zeros(*grid, dim);
    for l in dec.blocks() {
        let ql = dec.block(&q_noise, l);
        let ml = dec.block(&m_noise, l);
        let norm = (ql.l2_norm().powi(2) + ml.l2_norm().powi(2)).sqrt();
        if norm > 1e-12 {
            let target = 2f64.powi(l).powf(-s);
            q.add_scaled(target / norm, &ql);
            m.add_scaled(target / norm, &ml);
        }
    }
    LinearState { q, m }
}
