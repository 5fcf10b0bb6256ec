//! Scalar/vector fields held as Fourier coefficients.

use num_complex::Complex64;

use super::TorusGrid;
use crate::error::{Error, Result};
use crate::fft::fft_nd;

/// A field on a [`TorusGrid`] stored as Fourier coefficients, one coefficient
/// block per component (1 for scalars, `dim` for vectors).
///
/// The coefficient convention is `f(x) = sum_k fhat(k) e^{i xi_k . x}`, so the
/// k = 0 entry is the spatial mean. Operators that are singular at xi = 0
/// (negative Laplacian powers, the Leray `Q` projector) treat the mean mode
/// explicitly: they send it to zero or, for `Q`, assign it wholly to `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, components: usize) -> Self {
        assert!(components >= 1);
        SpectralField {
            grid,
            components,
            coeffs: vec![Complex64::default(); components * grid.total_points()],
        }
    }

    /// Builds a field from physical samples, `components * total_points`
    /// values in component-major row-major order.
    pub fn from_physical(grid: TorusGrid, components: usize, samples: &[f64]) -> Result<Self> {
        let total = grid.total_points();
        if samples.len() != components * total {
            return Err(Error::shape(format!(
                "expected {} samples ({components} component(s) on {} points), got {}",
                components * total,
                total,
                samples.len()
            )));
        }
        let shape = Self::shape_of(&grid);
        let mut coeffs = vec![Complex64::default(); components * total];
        let scale = 1.0 / total as f64;
        for c in 0..components {
            let block = &mut coeffs[c * total..(c + 1) * total];
            for (dst, src) in block.iter_mut().zip(&samples[c * total..(c + 1) * total]) {
                *dst = Complex64::new(*src, 0.0);
            }
            fft_nd(block, &shape, false);
            for v in block.iter_mut() {
                *v *= scale;
            }
        }
        Ok(SpectralField {
            grid,
            components,
            coeffs,
        })
    }

    pub fn from_physical_fn(
        grid: TorusGrid,
        components: usize,
        f: impl Fn(usize, [f64; 2]) -> f64,
    ) -> Self {
        let total = grid.total_points();
        let mut samples = vec![0.0; components * total];
        for c in 0..components {
            for flat in 0..total {
                samples[c * total + flat] = f(c, grid.point(flat));
            }
        }
        Self::from_physical(grid, components, &samples).expect("sample count matches by construction")
    }

    /// Physical samples, component-major.
    pub fn to_physical(&self) -> Vec<f64> {
        let total = self.grid.total_points();
        let shape = Self::shape_of(&self.grid);
        let mut out = vec![0.0; self.components * total];
        let mut scratch = vec![Complex64::default(); total];
        for c in 0..self.components {
            scratch.copy_from_slice(self.component(c));
            fft_nd(&mut scratch, &shape, true);
            for (dst, src) in out[c * total..(c + 1) * total].iter_mut().zip(&scratch) {
                *dst = src.re;
            }
        }
        out
    }

    fn shape_of(grid: &TorusGrid) -> Vec<usize> {
        vec![grid.points_per_dim(); grid.dim()]
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let total = self.grid.total_points();
        &self.coeffs[c * total..(c + 1) * total]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let total = self.grid.total_points();
        &mut self.coeffs[c * total..(c + 1) * total]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// The k = 0 coefficient (spatial mean) of one component.
    pub fn mean_mode(&self, c: usize) -> Complex64 {
        self.component(c)[0]
    }

    pub fn set_mean_mode(&mut self, c: usize, value: Complex64) {
        self.component_mut(c)[0] = value;
    }

    /// Field with the mean modes removed.
    pub fn homogeneous_part(&self) -> Self {
        let mut out = self.clone();
        for c in 0..out.components {
            out.component_mut(c)[0] = Complex64::default();
        }
        out
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Zeroes every mode whose index touches the Nyquist frequency.
    pub fn zero_nyquist(&mut self) {
        let total = self.grid.total_points();
        for flat in 0..total {
            if self.grid.has_nyquist(flat) {
                for c in 0..self.components {
                    self.component_mut(c)[flat] = Complex64::default();
                }
            }
        }
    }

    /// Applies a real radial multiplier `m(|xi|^2)` to every component, with a
    /// separate factor for the mean mode. Nyquist modes are zeroed.
    pub fn scale_modes(&self, mean_factor: f64, multiplier: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        let total = self.grid.total_points();
        let grid = self.grid;
        let mut factors = vec![0.0; total];
        for (flat, f) in factors.iter_mut().enumerate() {
            *f = if flat == 0 {
                mean_factor
            } else if grid.has_nyquist(flat) {
                0.0
            } else {
                multiplier(grid.xi_sq(flat))
            };
        }
        for c in 0..self.components {
            for (v, f) in out.component_mut(c).iter_mut().zip(&factors) {
                *v *= *f;
            }
        }
        out
    }

    /// |xi|^s Fourier multiplier. The mean mode maps to 0 for s != 0; for
    /// s < 0 any nonzero mean is silently dropped (homogeneous-space
    /// convention). See [`SpectralField::lambda_power_strict`].
    pub fn lambda_power(&self, s: f64) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        self.scale_modes(0.0, |xi_sq| xi_sq.powf(s / 2.0))
    }

    /// Like [`SpectralField::lambda_power`] but refuses a negative power on a
    /// field carrying a nonzero mean mode.
    pub fn lambda_power_strict(&self, s: f64) -> Result<Self> {
        if s < 0.0 {
            let scale = self.l2_norm().max(f64::MIN_POSITIVE);
            for c in 0..self.components {
                let mean = self.mean_mode(c).norm();
                if mean > 1e-12 * scale {
                    return Err(Error::SingularOperator {
                        op: "lambda_power",
                        mean,
                    });
                }
            }
        }
        Ok(self.lambda_power(s))
    }

    /// Spectral gradient of a scalar field.
    pub fn gradient(&self) -> Self {
        assert_eq!(self.components, 1, "gradient acts on scalars");
        let dim = self.grid.dim();
        let total = self.grid.total_points();
        let mut out = SpectralField::zeros(self.grid, dim);
        for flat in 0..total {
            if self.grid.has_nyquist(flat) {
                continue;
            }
            let xi = self.grid.xi(flat);
            let v = self.component(0)[flat];
            for a in 0..dim {
                out.component_mut(a)[flat] = Complex64::new(0.0, xi[a]) * v;
            }
        }
        out
    }

    /// Spectral divergence of a vector field.
    pub fn divergence(&self) -> Self {
        assert_eq!(self.components, self.grid.dim(), "divergence acts on vectors");
        let total = self.grid.total_points();
        let mut out = SpectralField::zeros(self.grid, 1);
        for flat in 0..total {
            if self.grid.has_nyquist(flat) {
                continue;
            }
            let xi = self.grid.xi(flat);
            let mut acc = Complex64::default();
            for a in 0..self.components {
                acc += Complex64::new(0.0, xi[a]) * self.component(a)[flat];
            }
            out.component_mut(0)[flat] = acc;
        }
        out
    }

    /// Scalar curl of a 2-D vector field.
    pub fn curl2d(&self) -> Self {
        assert_eq!(self.grid.dim(), 2);
        assert_eq!(self.components, 2);
        let total = self.grid.total_points();
        let mut out = SpectralField::zeros(self.grid, 1);
        for flat in 0..total {
            if self.grid.has_nyquist(flat) {
                continue;
            }
            let xi = self.grid.xi(flat);
            out.component_mut(0)[flat] = Complex64::new(0.0, xi[0]) * self.component(1)[flat]
                - Complex64::new(0.0, xi[1]) * self.component(0)[flat];
        }
        out
    }

    /// Leray split `(P m, Q m)` of a vector field; `Q` has symbol
    /// `xi xi^T / |xi|^2`, and the mean mode is assigned wholly to `P`.
    pub fn leray_split(&self) -> (Self, Self) {
        assert_eq!(self.components, self.grid.dim(), "leray split acts on vectors");
        let total = self.grid.total_points();
        let dim = self.components;
        let mut q = SpectralField::zeros(self.grid, dim);
        let mut p = self.clone();
        p.zero_nyquist();
        for flat in 1..total {
            if self.grid.has_nyquist(flat) {
                continue;
            }
            let xi = self.grid.xi(flat);
            let xi_sq = xi[0] * xi[0] + xi[1] * xi[1];
            let mut dot = Complex64::default();
            for a in 0..dim {
                dot += xi[a] * self.component(a)[flat];
            }
            for a in 0..dim {
                let qa = dot * (xi[a] / xi_sq);
                q.component_mut(a)[flat] = qa;
                p.component_mut(a)[flat] -= qa;
            }
        }
        (p, q)
    }

    /// 2/3-rule truncation: zeroes modes with any |signed index| > n/3.
    pub fn dealias(&self) -> Self {
        let n = self.grid.points_per_dim();
        let cutoff = (n / 3) as i64;
        let total = self.grid.total_points();
        let mut out = self.clone();
        for flat in 0..total {
            let axes = self.grid.axis_indices(flat);
            let drop = (0..self.grid.dim())
                .any(|a| self.grid.signed_index(axes[a]).abs() > cutoff);
            if drop {
                for c in 0..self.components {
                    out.component_mut(c)[flat] = Complex64::default();
                }
            }
        }
        out
    }

    /// L^2 norm over all components with the Parseval weight L^{dim/2}.
    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume()).sqrt()
    }

    /// Real L^2 inner product with the Parseval weight L^dim.
    pub fn l2_inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.components, other.components);
        debug_assert_eq!(self.grid, other.grid);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<f64>()
            * self.grid.volume()
    }

    /// Max norm of the physical samples over all components.
    pub fn linf_norm(&self) -> f64 {
        self.to_physical()
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest relative conjugate-symmetry defect; 0 for exactly real fields.
    pub fn reality_defect(&self) -> f64 {
        let total = self.grid.total_points();
        let n = self.grid.points_per_dim() as i64;
        let scale = self
            .coeffs
            .iter()
            .fold(0.0_f64, |acc, c| acc.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for flat in 0..total {
            let axes = self.grid.axis_indices(flat);
            let mut neg = [0usize; 2];
            for a in 0..self.grid.dim() {
                neg[a] = ((n - axes[a] as i64) % n) as usize;
            }
            let conj_flat = self.grid.flat_index(neg);
            for c in 0..self.components {
                let defect = (self.component(c)[flat] - self.component(c)[conj_flat].conj()).norm();
                worst = worst.max(defect / scale);
            }
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.iter_mut() {
            *v *= a;
        }
        out
    }

    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.components, other.components);
        debug_assert_eq!(self.grid, other.grid);
        for (dst, src) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *dst += a * src;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    /// Pointwise physical-space product of two dealiased scalar views.
    ///
    /// Both inputs are truncated by the 2/3 rule, multiplied on the grid and
    /// the result truncated again.
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        assert_eq!(self.components, 1);
        assert_eq!(other.components, 1);
        let a = self.dealias().to_physical();
        let b = other.dealias().to_physical();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(SpectralField::from_physical(self.grid, 1, &prod)?.dealias())
    }

    /// Extracts one component as a scalar field.
    pub fn extract(&self, c: usize) -> Self {
        SpectralField {
            grid: self.grid,
            components: 1,
            coeffs: self.component(c).to_vec(),
        }
    }

    /// Stacks scalar fields into one multi-component field.
    pub fn stack(parts: &[&Self]) -> Self {
        assert!(!parts.is_empty());
        let grid = parts[0].grid;
        let mut coeffs = Vec::with_capacity(parts.iter().map(|p| p.coeffs.len()).sum());
        let mut components = 0;
        for p in parts {
            assert_eq!(p.grid, grid);
            components += p.components;
            coeffs.extend_from_slice(&p.coeffs);
        }
        SpectralField {
            grid,
            components,
            coeffs,
        }
    }
}
