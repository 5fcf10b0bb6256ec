//! Periodic grid descriptor.

use crate::error::{Error, Result};

/// An isotropic periodic grid on `[0, L)^dim` with `n` points per axis.
///
/// Wavenumbers per axis are `2*pi*k/L` for signed integer indices
/// `k in [-n/2, n/2)`. The Nyquist index `-n/2` is tracked explicitly and
/// zeroed by every multiplier application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    length: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::domain(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::domain(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::domain(format!("side length must be > 0, got {length}")));
        }
        Ok(TorusGrid { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn side_length(&self) -> f64 {
        self.length
    }

    /// Physical spacing h = L/n.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn total_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume element h^dim of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Signed integer frequency of an axis index.
    pub fn signed_index(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// True when the axis index carries the (zeroed) Nyquist frequency.
    pub fn is_nyquist_index(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    /// Physical wavenumber 2*pi*k/L for an axis index.
    pub fn wavenumber(&self, idx: usize) -> f64 {
         2.0 * std::f64::consts::PI * self.signed_index(idx) as f64 / self.length
    }

    /// Axis indices of a flat row-major mode index.
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    pub fn flat_index(&self, axes: [usize; 2]) -> usize {
        match self.dim {
            1 => axes[0],
            _ => axes[0] * self.n + axes[1],
        }
    }

    /// Wavevector of a flat mode index; trailing entries are 0 for dim 1.
    pub fn xi(&self, flat: usize) -> [f64; 2] {
        let axes = self.axis_indices(flat);
        let mut xi = [0.0; 2];
        for a in 0..self.dim {
            xi[a] = self.wavenumber(axes[a]);
        }
        xi
    }

    pub fn xi_sq(&self, flat: usize) -> f64 {
        let xi = self.xi(flat);
        xi[0] * xi[0] + xi[1] * xi[1]
    }

    pub fn has_nyquist(&self, flat: usize) -> bool {
        let axes = self.axis_indices(flat);
        (0..self.dim).any(|a| self.is_nyquist_index(axes[a]))
    }

    /// Smallest nonzero |xi| on the grid.
    pub fn xi_min(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Largest |xi| over non-Nyquist modes.
    pub fn xi_max(&self) -> f64 {
        let k = (self.n / 2 - 1) as f64;
        self.xi_min() * k * (self.dim as f64).sqrt()
    }

    /// Physical coordinates of a flat grid point.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let axes = self.axis_indices(flat);
        let h = self.spacing();
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = axes[a] as f64 * h;
        }
        x
    }

    /// Signed distance to `center` on the torus (minimal image), per axis.
    pub fn min_image(&self, x: f64, center: f64) -> f64 {
        let mut d = (x - center) % self.length;
        if d > self.length / 2.0 {
            d -= self.length;
        } else if d < -self.length / 2.0 {
            d += self.length;
        }
        d
    }

    /// Squared torus distance between a grid point and a center.
    pub fn torus_dist_sq(&self, flat: usize, center: [f64; 2]) -> f64 {
        let x = self.point(flat);
        let mut d2 = 0.0;
        for a in 0..self.dim {
            let d = self.min_image(x[a], center[a]);
            d2 += d * d;
        }
        d2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(TorusGrid::new(3, 16, 1.0).is_err());
        assert!(TorusGrid::new(2, 15, 1.0).is_err());
        assert!(TorusGrid::new(2, 4, 1.0).is_err());
        assert!(TorusGrid::new(2, 16, 0.0).is_err());
        assert!(TorusGrid::new(2, 16, 1.0).is_ok());
    }

    #[test]
    fn wavenumbers_cover_symmetric_range() {
        let g = TorusGrid::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.signed_index(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!(g.is_nyquist_index(4));
        assert!((g.wavenumber(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_image_wraps() {
        let g = TorusGrid::new(1, 8, 8.0).unwrap();
        assert_eq!(g.min_image(7.0, 0.0), -1.0);
        assert_eq!(g.min_image(1.0, 0.0), 1.0);
    }
}
