//! Periodic-box geometry and the discrete Fourier transform contract.
//!
//! The box is `[-L/2, L/2)^2` sampled on `n` points per axis with spacing
//! `h = L/n`; the wavenumber lattice is `k = 2*pi*m/L` for
//! `m in {-n/2, ..., n/2 - 1}`, stored in standard FFT layout.
//!
//! Transform convention (fixed once, everything else is written against it):
//!
//! * forward:  `u_hat(k) = (2*pi)^-1 * h^2 * sum_x u(x) exp(-i k.x)`
//!   (the quadrature of the continuum transform with a `1/(2*pi)` factor),
//! * inverse:  `u(x) = (2*pi/L^2) * sum_k u_hat(k) exp(+i k.x)`,
//! * Parseval: `h^2 * sum_x |u|^2 = (2*pi/L)^2 * sum_k |u_hat|^2`, i.e. the
//!   physical L2 norm equals the Fourier L2 norm taken with the cell
//!   measure `(2*pi/L)^2` per mode.
//!
//! Under this convention `d/dx_j` is the multiplier `+i k_j`, and the free
//! propagator over `dt` (the flow of `du/dt = i Lap u`) is `exp(-i dt |k|^2)`.
//! The Nyquist derivative coefficient is zeroed so spectral differentiation
//! maps real fields to real fields.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::threads;

/// Smooth fields have spectral tails running hundreds of decades below
/// the working scale; x86 processes such subnormals two orders of
/// magnitude slower than normal floats. Transform outputs are flushed at
/// a threshold far beneath every tolerance in the crate.
const FLUSH_THRESHOLD: f64 = 1e-250;

fn flush_tiny(values: &mut [Complex64]) {
    for v in values.iter_mut() {
        if v.re.abs() < FLUSH_THRESHOLD {
            v.re = 0.0;
        }
        if v.im.abs() < FLUSH_THRESHOLD {
            v.im = 0.0;
        }
    }
}

// Freeing megabyte-sized transform buffers hands them back to the OS on
// every call; recycling them per thread keeps the hot loop fault-free.
thread_local! {
    static BUFFER_POOL: std::cell::RefCell<Vec<Vec<Complex64>>> =
        const { std::cell::RefCell::new(Vec::new()) };
}

fn take_buffer(len: usize) -> Vec<Complex64> {
    BUFFER_POOL.with(|pool| {
        let mut pool = pool.borrow_mut();
        if let Some(pos) = pool.iter().position(|b| b.len() == len) {
            pool.swap_remove(pos)
        } else {
            vec![Complex64::default(); len]
        }
    })
}

fn give_buffer(buffer: Vec<Complex64>) {
    BUFFER_POOL.with(|pool| {
        let mut pool = pool.borrow_mut();
        if pool.len() < 8 {
            pool.push(buffer);
        }
    });
}

/// Spatial axis of the box (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }

    pub const BOTH: [Axis; 2] = [Axis::X1, Axis::X2];

    /// The antisymmetric symbol eps_{jk} with eps_{12} = 1.
    pub fn epsilon(j: Axis, k: Axis) -> f64 {
        match (j, k) {
            (Axis::X1, Axis::X2) => 1.0,
            (Axis::X2, Axis::X1) => -1.0,
            _ => 0.0,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X1 => Axis::X2,
            Axis::X2 => Axis::X1,
        }
    }
}

/// Geometry, wavenumber lattice and planned transforms for one grid size.
pub struct SpectralGrid {
    n: usize,
    length: f64,
    coords: Vec<f64>,
    wavenumbers: Vec<f64>,
    deriv_wavenumbers: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

// The solver allocates and frees megabyte-scale field buffers constantly;
// glibc's default mmap threshold hands each one back to the kernel, so
// every transform pays page faults. Raising the thresholds once keeps the
// buffers on the heap free lists.
#[cfg(target_os = "linux")]
fn tune_allocator() {
    static DONE: std::sync::OnceLock<()> = std::sync::OnceLock::new();
    DONE.get_or_init(|| {
        extern "C" {
            fn mallopt(param: i32, value: i32) -> i32;
        }
        const M_TRIM_THRESHOLD: i32 = -1;
        const M_MMAP_THRESHOLD: i32 = -3;
        unsafe {
            mallopt(M_MMAP_THRESHOLD, 1 << 26);
            mallopt(M_TRIM_THRESHOLD, 1 << 26);
        }
    });
}

#[cfg(not(target_os = "linux"))]
fn tune_allocator() {}

impl SpectralGrid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        tune_allocator();
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::parameter(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::parameter(format!(
                "box length must be positive and finite, got {length}"
            )));
        }
        let h = length / n as f64;
        let coords: Vec<f64> = (0..n).map(|m| -0.5 * length + m as f64 * h).collect();
        let base = 2.0 * PI / length;
        let mut wavenumbers = vec![0.0; n];
        let mut deriv_wavenumbers = vec![0.0; n];
        for m in 0..n {
            let signed = if m < n / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            wavenumbers[m] = base * signed as f64;
            // Nyquist mode (m = n/2) has no odd partner; its derivative
            // coefficient is zero to keep real fields real.
            deriv_wavenumbers[m] = if m == n / 2 { 0.0 } else { wavenumbers[m] };
        }
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            n,
            length,
            coords,
            wavenumbers,
            deriv_wavenumbers,
            fft_forward,
            fft_inverse,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one physical cell, `(L/n)^2`.
    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Measure of one Fourier cell, `(2*pi/L)^2`.
    pub fn mode_measure(&self) -> f64 {
        let d = 2.0 * PI / self.length;
        d * d
    }

    /// Centered physical coordinate of sample index `m`.
    pub fn coord(&self, m: usize) -> f64 {
        self.coords[m]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Wavenumber of FFT-layout index `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        self.wavenumbers[m]
    }

    /// Wavenumber with the Nyquist entry zeroed (derivative symbol).
    pub fn deriv_wavenumber(&self, m: usize) -> f64 {
        self.deriv_wavenumbers[m]
    }

    /// Largest wavenumber magnitude on the lattice, `pi*n/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Signed mode number of FFT-layout index `m`.
    pub fn mode_number(&self, m: usize) -> isize {
        if m < self.n / 2 {
            m as isize
        } else {
            m as isize - self.n as isize
        }
    }

    /// FFT-layout index for a signed mode number (reduced mod n).
    pub fn index_of_mode(&self, mode: isize) -> usize {
        mode.rem_euclid(self.n as isize) as usize
    }

    /// Whether a field of `len` samples fits this grid.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n * self.n {
            Ok(())
        } else {
            let found = (len as f64).sqrt().round() as usize;
            Err(Error::DimensionMismatch {
                expected: self.n,
                found,
            })
        }
    }

    pub fn same_geometry(&self, other: &SpectralGrid) -> bool {
        self.n == other.n && self.length == other.length
    }

    /// Unnormalized 2-D FFT over a row-major `n x n` buffer.
    fn fft2_raw(&self, values: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse {
            &self.fft_inverse
        } else {
            &self.fft_forward
        };
        let scratch_len = plan.get_inplace_scratch_len();
        // Rows (contiguous), then columns via transpose. Single-threaded
        // processes whole batches with one scratch buffer; the parallel
        // path keeps per-row scratch so rows stay independent.
        let run_rows = |data: &mut [Complex64]| {
            if threads::thread_count() == 1 {
                let mut scratch = vec![Complex64::default(); scratch_len];
                for row in data.chunks_mut(n) {
                    plan.process_with_scratch(row, &mut scratch);
                }
            } else {
                threads::for_each_row(data, n, |row| {
                    let mut scratch = vec![Complex64::default(); scratch_len];
                    plan.process_with_scratch(row, &mut scratch);
                });
            }
        };
        run_rows(values);
        let mut transposed = take_buffer(n * n);
        transpose::transpose(values, &mut transposed, n, n);
        run_rows(&mut transposed);
        transpose::transpose(&transposed, values, n, n);
        give_buffer(transposed);
    }

    /// Forward transform under the documented convention. The alternating
    /// sign carries the centered origin: `exp(-i k x)` at `x = -L/2 + m h`
    /// is `(-1)^mode` times the raw-DFT phase.
    pub(crate) fn forward_values(&self, values: &mut [Complex64]) {
        self.fft2_raw(values, false);
        let n = self.n;
        let scale = self.cell_area() / (2.0 * PI);
        for i in 0..n {
            for j in 0..n {
                let sign = if (i + j) % 2 == 0 { scale } else { -scale };
                values[i * n + j] *= sign;
            }
        }
        flush_tiny(values);
    }

    /// Inverse transform under the documented convention.
    pub(crate) fn inverse_values(&self, values: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if (i + j) % 2 == 1 {
                    values[i * n + j] = -values[i * n + j];
                }
            }
        }
        self.fft2_raw(values, true);
        let scale = 2.0 * PI / (self.length * self.length);
        for v in values.iter_mut() {
            *v *= scale;
        }
        flush_tiny(values);
    }
}

