//! Initial-data families and seeded verification fields.
//!
//! The Gaussian is the canonical small, smooth, boundary-concentrated
//! datum; the plane wave is the exact-solution regression datum (its
//! gauge potentials vanish identically); the ring adds a genuinely
//! complex datum with nonzero charge current.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::gauge::make_coulomb_data;
use crate::grid::{Axis, SpectralGrid};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatumKind {
    Gaussian,
    PlaneWave,
    Ring,
    File,
}

#[derive(Debug, Clone)]
pub struct DatumSpec {
    pub kind: DatumKind,
    /// Amplitude knob (the smallness parameter of the data family).
    pub amplitude: f64,
    /// Gaussian / ring width.
    pub width: f64,
    /// Plane-wave momentum in lattice units: `k = (2 pi / L) * momentum`.
    pub momentum: (i64, i64),
    /// Winding number of the ring datum's phase.
    pub phase_twist: i64,
    /// Source checkpoint for `DatumKind::File`.
    pub file: Option<PathBuf>,
}

impl Default for DatumSpec {
    fn default() -> Self {
        Self {
            kind: DatumKind::Gaussian,
            amplitude: 0.05,
            width: 1.0,
            momentum: (3, 0),
            phase_twist: 1,
            file: None,
        }
    }
}

impl DatumSpec {
    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        // Amplitude zero is allowed: it builds the zero field.
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::parameter(format!(
                "datum amplitude must be nonnegative, got {}",
                self.amplitude
            )));
        }
        match self.kind {
            DatumKind::Gaussian | DatumKind::Ring => {
                if !(self.width > 0.0 && self.width.is_finite()) {
                    return Err(Error::parameter(format!(
                        "datum width must be positive, got {}",
                        self.width
                    )));
                }
            }
            DatumKind::PlaneWave => {
                let half = grid.n() as i64 / 2;
                let (mx, my) = self.momentum;
                if mx <= -half || mx >= half || my <= -half || my >= half {
                    return Err(Error::parameter(format!(
                        "plane-wave momentum ({mx}, {my}) is off the wavenumber lattice for n = {}",
                        grid.n()
                    )));
                }
            }
            DatumKind::File => {
                if self.file.is_none() {
                    return Err(Error::parameter(
                        "datum kind 'file' requires a checkpoint path",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The smallness inventory of a datum: the covariant Sobolev norms and the
/// coordinate-weighted norms that measure how small and localized it is.
#[derive(Debug, Clone, Copy)]
pub struct NormInventory {
    pub l2: f64,
    pub cov_grad_l2: f64,
    pub cov_grad2_l2: f64,
    pub weighted_l2: f64,
    pub weighted_cov_grad_l2: f64,
    pub weighted2_l2: f64,
}

impl NormInventory {
    pub fn total(&self) -> f64 {
        self.l2
            + self.cov_grad_l2
            + self.cov_grad2_l2
            + self.weighted_l2
            + self.weighted_cov_grad_l2
            + self.weighted2_l2
    }
}

/// Build the datum and report its smallness inventory.
pub fn build_datum(spec: &DatumSpec, grid: &Arc<SpectralGrid>) -> Result<(ComplexField, NormInventory)> {
    spec.validate(grid)?;
    let phi = match spec.kind {
        DatumKind::Gaussian => {
            let eps = spec.amplitude;
            let inv_two_w2 = 1.0 / (2.0 * spec.width * spec.width);
            ComplexField::from_fn(grid.clone(), |x1, x2| {
                Complex64::new(eps * (-(x1 * x1 + x2 * x2) * inv_two_w2).exp(), 0.0)
            })
        }
        DatumKind::PlaneWave => {
            let base = 2.0 * std::f64::consts::PI / grid.length();
            let k1 = base * spec.momentum.0 as f64;
            let k2 = base * spec.momentum.1 as f64;
            let eps = spec.amplitude;
            ComplexField::from_fn(grid.clone(), |x1, x2| {
                Complex64::from_polar(eps, k1 * x1 + k2 * x2)
            })
        }
        DatumKind::Ring => {
            let eps = spec.amplitude;
            let w = spec.width;
            let m = spec.phase_twist;
            let inv_two_w2 = 1.0 / (2.0 * w * w);
            ComplexField::from_fn(grid.clone(), |x1, x2| {
                let z = Complex64::new(x1 / w, x2 / w);
                let winding = if m >= 0 {
                    z.powi(m as i32)
                } else {
                    z.conj().powi((-m) as i32)
                };
                winding * eps * (-(x1 * x1 + x2 * x2) * inv_two_w2).exp()
            })
        }
        DatumKind::File => {
            let path = spec.file.as_ref().expect("validated above");
            let state = crate::checkpoint::read_checkpoint(path)?;
            if !state.phi.grid().same_geometry(grid) {
                return Err(Error::GridMismatch);
            }
            state.phi
        }
    };
    let inventory = norm_inventory(&phi)?;
    Ok((phi, inventory))
}

/// Covariant and weighted norms of a datum, with the potentials of the
/// constrained initial-data pair.
pub fn norm_inventory(phi: &ComplexField) -> Result<NormInventory> {
    let (gauge, phi) = make_coulomb_data(phi)?;
    let l2 = phi.l2_norm();

    let mut cov: Vec<ComplexField> = Vec::new();
    for axis in Axis::BOTH {
        let a = match axis {
            Axis::X1 => &gauge.a1,
            Axis::X2 => &gauge.a2,
        };
        cov.push(crate::covariant::cov_grad(&phi, a, axis)?);
    }
    let cov_grad_l2 = (cov.iter().map(|f| f.l2_norm().powi(2)).sum::<f64>()).sqrt();

    let mut cov2_sq = 0.0;
    let mut weighted_cov_sq = 0.0;
    for dj in &cov {
        for axis in Axis::BOTH {
            let a = match axis {
                Axis::X1 => &gauge.a1,
                Axis::X2 => &gauge.a2,
            };
            cov2_sq += crate::covariant::cov_grad(dj, a, axis)?.l2_norm().powi(2);
        }
        for axis in Axis::BOTH {
            weighted_cov_sq += dj.mul_coord(axis).l2_norm().powi(2);
        }
    }

    let mut weighted_sq = 0.0;
    let mut weighted2_sq = 0.0;
    let n = phi.grid().n();
    for i in 0..n {
        let x1 = phi.grid().coord(i);
        for j in 0..n {
            let x2 = phi.grid().coord(j);
            let r2 = x1 * x1 + x2 * x2;
            let m = phi.values()[i * n + j].norm_sqr();
            weighted_sq += r2 * m;
            weighted2_sq += r2 * r2 * m;
        }
    }
    let cell = phi.grid().cell_area();

    Ok(NormInventory {
        l2,
        cov_grad_l2,
        cov_grad2_l2: cov2_sq.sqrt(),
        weighted_l2: (weighted_sq * cell).sqrt(),
        weighted_cov_grad_l2: weighted_cov_sq.sqrt(),
        weighted2_l2: (weighted2_sq * cell).sqrt(),
    })
}

/// Random field with Fourier support `|mode_j| <= max_mode`, unit L2 norm,
/// optionally localized by a centered Gaussian envelope of width
/// `envelope_width`. Deterministic in the seed.
pub fn random_band_limited(
    grid: &Arc<SpectralGrid>,
    max_mode: usize,
    envelope_width: Option<f64>,
    seed: u64,
) -> Result<ComplexField> {
    if max_mode >= grid.n() / 2 {
        return Err(Error::parameter(format!(
            "band limit {max_mode} reaches the Nyquist mode of n = {}",
            grid.n()
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let n = grid.n();
    let mut hat = ComplexField::zeros(grid.clone(), Space::Fourier);
    let band = max_mode as isize;
    for i in 0..n {
        let mi = grid.mode_number(i);
        for j in 0..n {
            let mj = grid.mode_number(j);
            if mi.abs() <= band && mj.abs() <= band {
                let (re, im) = rng.next_normal_pair();
                hat.values_mut()[i * n + j] = Complex64::new(re, im);
            }
        }
    }
    let mut field = hat.to_physical();
    if let Some(w) = envelope_width {
        let inv_two_w2 = 1.0 / (2.0 * w * w);
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                let x2 = grid.coord(j);
                field.values_mut()[i * n + j] *= (-(x1 * x1 + x2 * x2) * inv_two_w2).exp();
            }
        }
    }
    let norm = field.l2_norm();
    if norm > 0.0 {
        Ok(field.scaled(Complex64::new(1.0 / norm, 0.0)))
    } else {
        Ok(field)
    }
}
