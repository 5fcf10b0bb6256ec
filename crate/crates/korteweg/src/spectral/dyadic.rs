//! Littlewood–Paley dyadic blocks.

use super::{SpectralField, TorusGrid};

/// Low-frequency cutoff profile: 1 on [0, 4/3], 0 on [3/2, inf), joined by
/// the quartic smoothstep s(u) = u^3 (4 - 3u), i.e.
/// chi(r) = 1 - s(6r - 8) on (4/3, 3/2).
pub fn cutoff_chi(r: f64) -> f64 {
    if r <= 4.0 / 3.0 {
        1.0
    } else if r >= 1.5 {
        0.0
    } else {
        let u = 6.0 * r - 8.0;
        1.0 - u * u * u * (4.0 - 3.0 * u)
    }
}

/// Dyadic partition of unity on the grid's nonzero frequencies.
///
/// Block multipliers are differences of rescaled cutoffs,
/// `phi_l(xi) = chi(0.75 |xi| / 2^l) - chi(0.75 |xi| / 2^(l-1))`, so that
/// `supp phi_l` lies in the annulus `{2^(l-1) <= |xi| <= 2^(l+1)}` and
/// `sum_l phi_l(xi) = 1` for every nonzero grid wavevector.
#[derive(Debug, Clone, Copy)]
pub struct DyadicDecomposition {
    l_min: i32,
    l_max: i32,
}

impl DyadicDecomposition {
    pub fn new(l_min: i32, l_max: i32) -> Self {
        assert!(l_min <= l_max);
        DyadicDecomposition { l_min, l_max }
    }

    /// Block range covering every nonzero wavevector of the grid.
    pub fn for_grid(grid: &TorusGrid) -> Self {
        // Partition requires 2^(l_min) <= |xi|_min and 2^l_max >= 0.5625 |xi|_max.
        let l_min = grid.xi_min().log2().floor() as i32;
        let l_max = (0.5625 * grid.xi_max()).log2().ceil() as i32;
        DyadicDecomposition::new(l_min, l_max.max(l_min))
    }

    pub fn block_range(&self) -> (i32, i32) {
        (self.l_min, self.l_max)
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.l_min..=self.l_max
    }

    /// Block multiplier phi_l(|xi|).
    pub fn phi(&self, l: i32, xi_abs: f64) -> f64 {
        let scale = 0.75 * xi_abs;
        cutoff_chi(scale / 2f64.powi(l)) - cutoff_chi(scale / 2f64.powi(l - 1))
    }

    /// Delta_l f: coefficients multiplied by phi_l. Outside the block range
    /// this returns the empty (zero) field rather than an error.
    pub fn block(&self, f: &SpectralField, l: i32) -> SpectralField {
        if l < self.l_min || l > self.l_max {
            return SpectralField::zeros(*f.grid(), f.components());
        }
        f.scale_modes(0.0, |xi_sq| self.phi(l, xi_sq.sqrt()))
    }

    /// L^2 norms of all blocks, indexed by l.
    pub fn profile(&self, f: &SpectralField) -> Vec<(i32, f64)> {
        self.blocks().map(|l| (l, self.block(f, l).l2_norm())).collect()
    }

    /// Worst partition-of-unity defect |sum_l phi_l(xi) - 1| over the grid's
    /// nonzero non-Nyquist wavevectors.
    pub fn partition_defect(&self, grid: &TorusGrid) -> f64 {
        let mut worst = 0.0_f64;
        for flat in 1..grid.total_points() {
            if grid.has_nyquist(flat) {
                continue;
            }
            let xi_abs = grid.xi_sq(flat).sqrt();
            let sum: f64 = self.blocks().map(|l| self.phi(l, xi_abs)).sum();
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_is_a_monotone_cutoff() {
        assert_eq!(cutoff_chi(0.0), 1.0);
        assert_eq!(cutoff_chi(4.0 / 3.0), 1.0);
        assert_eq!(cutoff_chi(1.5), 0.0);
        let mut prev = 1.0;
        for i in 0..=100 {
            let r = 4.0 / 3.0 + (1.5 - 4.0 / 3.0) * i as f64 / 100.0;
            let v = cutoff_chi(r);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        // C1 join: the one-sided difference quotients vanish at both ends
        // (a derivative jump would show up at O(1)).
        let eps = 1e-7;
        let d_lo = (cutoff_chi(4.0 / 3.0 + eps) - cutoff_chi(4.0 / 3.0 - eps)) / (2.0 * eps);
        let d_hi = (cutoff_chi(1.5 + eps) - cutoff_chi(1.5 - eps)) / (2.0 * eps);
        assert!(d_lo.abs() < 1e-4);
        assert!(d_hi.abs() < 1e-4);
    }

    #[test]
    fn phi_supported_in_dyadic_annulus() {
        let dec = DyadicDecomposition::new(-4, 12);
        for l in -2..10 {
            let lo = 2f64.powi(l - 1);
            let hi = 2f64.powi(l + 1);
            for i in 1..2000 {
                let xi = 2f64.powi(l) * (0.01 * i as f64);
                let v = dec.phi(l, xi);
                if v.abs() > 0.0 {
                    assert!(xi >= lo - 1e-12 && xi <= hi + 1e-12, "phi_{l}({xi}) = {v}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let grid = TorusGrid::new(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        let dec = DyadicDecomposition::for_grid(&grid);
        assert!(dec.partition_defect(&grid) <= 1e-10);
    }
}
