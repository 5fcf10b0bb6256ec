//! The solver's unknown and time-sampled trajectories of it.

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// The triple (q = rho - rho_bar, m1 = rho v1, m2 = rho v2) at one time.
#[derive(Debug, Clone)]
pub struct MildState {
    pub q: SpectralField,
    pub m1: SpectralField,
    pub m2: SpectralField,
}

impl MildState {
    pub fn new(q: SpectralField, m1: SpectralField, m2: SpectralField) -> Result<Self> {
        q.same_grid(&m1)?;
        q.same_grid(&m2)?;
        let dim = q.grid().dim();
        if q.components() != 1 || m1.components() != dim || m2.components() != dim {
            return Err(Error::shape(
                "mild state needs scalar q and vector m1, m2",
            ));
        }
        Ok(MildState { q, m1, m2 })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        MildState {
            q: SpectralField::zeros(grid, 1),
            m1: SpectralField::zeros(grid, grid.dim()),
            m2: SpectralField::zeros(grid, grid.dim()),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.q.grid()
    }

    pub fn scaled(&self, a: f64) -> Self {
        MildState {
            q: self.q.scaled(a),
            m1: self.m1.scaled(a),
            m2: self.m2.scaled(a),
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        self.q.add_scaled(a, &other.q);
        self.m1.add_scaled(a, &other.m1);
        self.m2.add_scaled(a, &other.m2);
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn l2_norm(&self) -> f64 {
        (self.q.l2_norm().powi(2) + self.m1.l2_norm().powi(2) + self.m2.l2_norm().powi(2)).sqrt()
    }

    /// All components stacked into one field (q, m1, m2).
    pub fn stacked(&self) -> SpectralField {
        SpectralField::stack(&[&self.q, &self.m1, &self.m2])
    }
}

/// States sampled at strictly increasing times in (0, T].
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<MildState>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<MildState>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InsufficientData(
                "trajectory needs one state per time".into(),
            ));
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "trajectory times must be strictly increasing and positive",
            ));
        }
        for s in &states {
            if s.grid() != states[0].grid() {
                return Err(Error::GridMismatch("trajectory states share one grid".into()));
            }
        }
        Ok(Trajectory { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[MildState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> &TorusGrid {
        self.states[0].grid()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty by construction")
    }

    pub fn state_at(&self, idx: usize) -> &MildState {
        &self.states[idx]
    }

    /// Linear interpolation in physical space (coefficients are linear in the
    /// samples, so interpolating them is the same thing). Below the first
    /// sample the first state is extended as a constant.
    pub fn sample(&self, t: f64) -> MildState {
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.states[last].clone();
        }
        let hi = self.times.partition_point(|&u| u < t).max(1);
        let (t0, t1) = (self.times[hi - 1], self.times[hi]);
        let theta = (t - t0) / (t1 - t0);
        let mut out = self.states[hi - 1].scaled(1.0 - theta);
        out.add_scaled(theta, &self.states[hi]);
        out
    }

    pub fn map_states(&self, f: impl Fn(&MildState) -> MildState) -> Self {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(f).collect(),
        }
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-14 * a.abs().max(1.0))
        {
            return Err(Error::domain("trajectories sampled on different nodes"));
        }
        Ok(Trajectory {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .zip(&other.states)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }
}
