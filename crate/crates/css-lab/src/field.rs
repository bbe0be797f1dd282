//! Sampled fields on the periodic box and the Fourier-multiplier operators.
//!
//! `ComplexField` carries its grid, its samples in row-major order
//! (`values[i*n + j]` at `x1 = coord(i)`, `x2 = coord(j)`; in Fourier space
//! `k1 = wavenumber(i)`, `k2 = wavenumber(j)`) and a space tag. `RealField`
//! is the physical-space real counterpart used for gauge potentials and
//! densities.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, SpectralGrid};

/// Which representation the samples currently hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Fourier,
}

/// Transform direction for [`ComplexField::transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone)]
pub struct ComplexField {
    grid: Arc<SpectralGrid>,
    space: Space,
    values: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexField")
            .field("n", &self.grid.n())
            .field("space", &self.space)
            .finish()
    }
}

impl ComplexField {
    pub fn zeros(grid: Arc<SpectralGrid>, space: Space) -> Self {
        let n = grid.n();
        Self {
            grid,
            space,
            values: vec![Complex64::default(); n * n],
        }
    }

    pub fn from_values(grid: Arc<SpectralGrid>, space: Space, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, space, values })
    }

    /// Sample a function of the centered coordinates.
    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                values.push(f(x1, grid.coord(j)));
            }
        }
        Self {
            grid,
            space: Space::Physical,
            values,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn require_space(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: space,
                found: self.space,
            })
        }
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid.same_geometry(other.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Explicit-direction transform; transforming a field that is already
    /// in the target space is a structural error.
    pub fn transform(&self, direction: Direction) -> Result<ComplexField> {
        match direction {
            Direction::Forward => {
                self.require_space(Space::Physical)?;
                Ok(self.to_fourier())
            }
            Direction::Inverse => {
                self.require_space(Space::Fourier)?;
                Ok(self.to_physical())
            }
        }
    }

    pub fn to_fourier(&self) -> ComplexField {
        match self.space {
            Space::Fourier => self.clone(),
            Space::Physical => {
                let mut values = self.values.clone();
                self.grid.forward_values(&mut values);
                Self {
                    grid: self.grid.clone(),
                    space: Space::Fourier,
                    values,
                }
            }
        }
    }

    pub fn to_physical(&self) -> ComplexField {
        match self.space {
            Space::Physical => self.clone(),
            Space::Fourier => {
                let mut values = self.values.clone();
                self.grid.inverse_values(&mut values);
                Self {
                    grid: self.grid.clone(),
                    space: Space::Physical,
                    values,
                }
            }
        }
    }

    /// Apply a Fourier multiplier `m(k1, k2, i, j)`; accepts either space
    /// and returns the same space.
    fn apply_multiplier(&self, m: impl Fn(f64, f64, usize, usize) -> Complex64) -> ComplexField {
        let mut hat = self.to_fourier();
        let n = self.grid.n();
        for i in 0..n {
            let k1 = self.grid.wavenumber(i);
            for j in 0..n {
                let k2 = self.grid.wavenumber(j);
                hat.values[i * n + j] *= m(k1, k2, i, j);
            }
        }
        match self.space {
            Space::Fourier => hat,
            Space::Physical => hat.to_physical(),
        }
    }

    /// Spectral partial derivative along `axis` (Nyquist coefficient zeroed).
    pub fn derivative(&self, axis: Axis) -> ComplexField {
        let grid = self.grid.clone();
        match axis {
            Axis::X1 => self.apply_multiplier(|_, _, i, _| {
                Complex64::new(0.0, grid.deriv_wavenumber(i))
            }),
            Axis::X2 => self.apply_multiplier(|_, _, _, j| {
                Complex64::new(0.0, grid.deriv_wavenumber(j))
            }),
        }
    }

    /// `d_j (-Lap)^{-1}`: multiplier `+i k_j / |k|^2` under this crate's
    /// transform convention, zero at `k = 0`, Nyquist derivative zeroed.
    pub fn inv_laplacian_derivative(&self, axis: Axis) -> ComplexField {
        let grid = self.grid.clone();
        self.apply_multiplier(move |k1, k2, i, j| {
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                return Complex64::default();
            }
            let d = match axis {
                Axis::X1 => grid.deriv_wavenumber(i),
                Axis::X2 => grid.deriv_wavenumber(j),
            };
            Complex64::new(0.0, d / ksq)
        })
    }

    /// `(-Lap)^{-1}`: multiplier `1/|k|^2`, zero at `k = 0`.
    pub fn inv_neg_laplacian(&self) -> ComplexField {
        self.apply_multiplier(|k1, k2, _, _| {
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(1.0 / ksq, 0.0)
            }
        })
    }

    /// Laplacian: multiplier `-|k|^2`.
    pub fn laplacian(&self) -> ComplexField {
        self.apply_multiplier(|k1, k2, _, _| Complex64::new(-(k1 * k1 + k2 * k2), 0.0))
    }

    /// Free Schroedinger flow over `dt` (solution map of `du/dt = i Lap u`):
    /// multiplier `exp(-i dt |k|^2)`. `free_propagator(dt)` then
    /// `free_propagator(-dt)` is the identity.
    pub fn free_propagator(&self, dt: f64) -> ComplexField {
        self.apply_multiplier(|k1, k2, _, _| {
            Complex64::from_polar(1.0, -dt * (k1 * k1 + k2 * k2))
        })
    }

    /// Two-thirds-rule dealiasing: zero every mode with `|k_j| > (2/3) k_max`
    /// per axis (`k_max` the Nyquist magnitude). Accepts either space and
    /// returns the same space.
    pub fn dealias(&self) -> ComplexField {
        self.band_limit(self.grid.n() / 3)
    }

    /// Hard spectral cutoff: zero every mode with `|mode_j| > max_mode`.
    /// The result is an exact trigonometric polynomial of that degree, so
    /// pointwise products of few enough factors stay alias-free.
    pub fn band_limit(&self, max_mode: usize) -> ComplexField {
        let keep = max_mode as isize;
        let grid = self.grid.clone();
        self.apply_multiplier(move |_, _, i, j| {
            let mi = grid.mode_number(i).abs();
            let mj = grid.mode_number(j).abs();
            if mi > keep || mj > keep {
                Complex64::default()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// L2 norm with the measure of the field's current space (the two agree
    /// by Parseval).
    pub fn l2_norm(&self) -> f64 {
        let weight = match self.space {
            Space::Physical => self.grid.cell_area(),
            Space::Fourier => self.grid.mode_measure(),
        };
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight).sqrt()
    }

    /// Lp norm by Riemann-sum quadrature with cell weight `(L/n)^2`;
    /// supported p: 2, 3, 4, 6. Physical space required for p != 2.
    pub fn lp_norm(&self, p: u32) -> Result<f64> {
        if p == 2 {
            return Ok(self.l2_norm());
        }
        if !matches!(p, 3 | 4 | 6) {
            return Err(Error::parameter(format!(
                "unsupported Lp exponent {p} (expected 2, 3, 4 or 6)"
            )));
        }
        self.require_space(Space::Physical)?;
        let sum: f64 = self
            .values
            .iter()
            .map(|v| v.norm().powi(p as i32))
            .sum::<f64>()
            * self.grid.cell_area();
        Ok(sum.powf(1.0 / p as f64))
    }

    /// Sup norm (max of absolute values).
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.linf_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn conj(&self) -> ComplexField {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = v.conj();
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.space, other.space);
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.space, other.space);
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v -= w;
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &ComplexField, c: Complex64) {
        debug_assert_eq!(self.space, other.space);
        for (v, w) in self.values.iter_mut().zip(other.values.iter()) {
            *v += c * w;
        }
    }

    /// Pointwise product (physical space).
    pub fn mul_pointwise(&self, other: &ComplexField) -> ComplexField {
        debug_assert_eq!(self.space, Space::Physical);
        debug_assert_eq!(other.space, Space::Physical);
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v *= w;
        }
        out
    }

    /// Pointwise product with a real field (physical space).
    pub fn mul_real(&self, other: &RealField) -> ComplexField {
        debug_assert_eq!(self.space, Space::Physical);
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v *= *w;
        }
        out
    }

    /// Pointwise multiply by the sawtooth coordinate `x_axis`.
    pub fn mul_coord(&self, axis: Axis) -> ComplexField {
        debug_assert_eq!(self.space, Space::Physical);
        let n = self.grid.n();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                let x = match axis {
                    Axis::X1 => self.grid.coord(i),
                    Axis::X2 => self.grid.coord(j),
                };
                out.values[i * n + j] *= x;
            }
        }
        out
    }

    /// `|field|^2` as a real field (physical space).
    pub fn abs_squared(&self) -> RealField {
        debug_assert_eq!(self.space, Space::Physical);
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn real_part(&self) -> RealField {
        debug_assert_eq!(self.space, Space::Physical);
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.re).collect(),
        }
    }

    pub fn imag_part(&self) -> RealField {
        debug_assert_eq!(self.space, Space::Physical);
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.im).collect(),
        }
    }

    /// Charge `int |phi|^2 dx` (physical space).
    pub fn charge(&self) -> f64 {
        debug_assert_eq!(self.space, Space::Physical);
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Mass fraction in the outer strip `|x_j| > L/2 - L/8` on either axis.
    pub fn boundary_mass_fraction(&self) -> f64 {
        debug_assert_eq!(self.space, Space::Physical);
        let n = self.grid.n();
        let cutoff = self.grid.length() * (0.5 - 0.125);
        let mut total = 0.0;
        let mut outer = 0.0;
        for i in 0..n {
            let x1 = self.grid.coord(i);
            for j in 0..n {
                let x2 = self.grid.coord(j);
                let m = self.values[i * n + j].norm_sqr();
                total += m;
                if x1.abs() > cutoff || x2.abs() > cutoff {
                    outer += m;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }
}

/// Real samples on the grid (physical space).
#[derive(Clone)]
pub struct RealField {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl std::fmt::Debug for RealField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealField")
            .field("n", &self.grid.n())
            .finish()
    }
}

impl RealField {
    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.n();
        Self {
            grid,
            values: vec![0.0; n * n],
        }
    }

    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                values.push(f(x1, grid.coord(j)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    /// Real part of a physical-space complex field.
    pub fn from_complex(field: &ComplexField) -> Result<Self> {
        field.require_space(Space::Physical)?;
        Ok(field.real_part())
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            space: Space::Physical,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn derivative(&self, axis: Axis) -> RealField {
        let d = self.to_complex().derivative(axis);
        d.real_part()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn add(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v -= w;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> RealField {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    pub fn mul_pointwise(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v *= w;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::grid::SpectralGrid;
    use proptest::prelude::*;

    fn field_strategy() -> impl Strategy<Value = ComplexField> {
        proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 256).prop_map(|pairs| {
            let grid = SpectralGrid::new(16, 23.0).unwrap();
            let values = pairs
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect();
            ComplexField::from_values(grid, Space::Physical, values).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_is_identity(field in field_strategy()) {
            let back = field.to_fourier().to_physical();
            let scale = field.max_abs().max(1.0);
            let err = field
                .values()
                .iter()
                .zip(back.values().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            prop_assert!(err < 1e-12 * scale);
        }

        #[test]
        fn parseval_identity(field in field_strategy()) {
            let physical = field.l2_norm();
            let fourier = field.to_fourier().l2_norm();
            prop_assert!((physical - fourier).abs() <= 1e-12 * physical.max(1e-300));
        }

        #[test]
        fn dealias_is_an_orthogonal_projection(field in field_strategy()) {
            let once = field.dealias();
            let twice = once.dealias();
            let err = once
                .values()
                .iter()
                .zip(twice.values().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            prop_assert!(err < 1e-12 * field.max_abs().max(1.0));
            // Pythagoras for the removed part.
            let removed = field.l2_norm().powi(2) - once.l2_norm().powi(2);
            prop_assert!(removed >= -1e-9 * field.l2_norm().powi(2).max(1e-300));
        }

        #[test]
        fn propagator_preserves_l2(field in field_strategy(), dt in -5.0f64..5.0) {
            let out = field.free_propagator(dt);
            let norm = field.l2_norm();
            prop_assert!((out.l2_norm() - norm).abs() <= 1e-12 * norm.max(1e-300));
        }
    }
}
