//! Fourier-space representation of the gauge cubic term and its null
//! structure.
//!
//! For the profile `f_hat(k) = e^{i t |k|^2} phi_hat(k)`, the gauge cubic
//! term has the trilinear representation
//!
//! ```text
//! T(xi) = sum_{eta, sigma} e^{i t Phi} |eta|^{-2} m
//!         f_hat(xi - sigma) conj_hat(f)(sigma + eta - xi) f_hat(xi - eta),
//! ```
//!
//! with phase `Phi = 2 eta . sigma` and symbol
//! `m(eta, sigma) = sigma_2 eta_1 - sigma_1 eta_2` in the continuum. On the
//! lattice the double sum is evaluated with circular index arithmetic, the
//! symbol built from the same Nyquist-zeroed derivative wavenumbers as the
//! physical-space product route, and the phase from the wrapped
//! representatives, which makes the sum *exactly* the convolution-theorem
//! dual of assembling the term in physical space:
//! `T(xi) = e^{i t |xi|^2} F[N](xi) * (L^2 / 2 pi)^2`.
//!
//! The frequency integration by parts replaces `d_eta f_hat` by the
//! transform of the coordinate-weighted profile (`-i x f` under this
//! crate's convention); the sawtooth coordinate makes that decomposition a
//! refinement-convergent identity rather than an exact one.

use num_complex::Complex64;

use crate::diagnostics::linear_fit;
use crate::error::{Error, Result};
use crate::evolution::{nonlinearity, SimulationState};
use crate::field::{ComplexField, Space};
use crate::grid::Axis;

/// Largest grid for which the O(n^4)-per-frequency sums are allowed.
pub const MAX_TRILINEAR_N: usize = 16;

/// The phase, symbol and kernel of the trilinear representation as
/// continuum functions (used by the pointwise identity checks).
pub struct TrilinearSpec;

impl TrilinearSpec {
    /// `Phi(eta, sigma) = 2 eta . sigma`.
    pub fn phase(eta: [f64; 2], sigma: [f64; 2]) -> f64 {
        2.0 * (eta[0] * sigma[0] + eta[1] * sigma[1])
    }

    /// `m(eta, sigma) = sigma_2 eta_1 - sigma_1 eta_2`.
    pub fn symbol(eta: [f64; 2], sigma: [f64; 2]) -> f64 {
        sigma[1] * eta[0] - sigma[0] * eta[1]
    }

    /// `|eta|^{-2}`, zero at the origin.
    pub fn kernel(eta: [f64; 2]) -> f64 {
        let sq = eta[0] * eta[0] + eta[1] * eta[1];
        if sq == 0.0 {
            0.0
        } else {
            1.0 / sq
        }
    }
}

fn check_trilinear_size(n: usize) -> Result<()> {
    if n > MAX_TRILINEAR_N {
        return Err(Error::parameter(format!(
            "direct trilinear summation is limited to n <= {MAX_TRILINEAR_N}, got {n}"
        )));
    }
    Ok(())
}

struct LatticeTables {
    n: usize,
    freq: Vec<f64>,
    deriv: Vec<f64>,
}

impl LatticeTables {
    fn new(field: &ComplexField) -> Self {
        let grid = field.grid();
        let n = grid.n();
        Self {
            n,
            freq: (0..n).map(|m| grid.wavenumber(m)).collect(),
            deriv: (0..n).map(|m| grid.deriv_wavenumber(m)).collect(),
        }
    }

    #[inline]
    fn wrap(&self, a: isize) -> usize {
        a.rem_euclid(self.n as isize) as usize
    }

    #[inline]
    fn ksq(&self, i: usize, j: usize) -> f64 {
        self.freq[i] * self.freq[i] + self.freq[j] * self.freq[j]
    }
}

/// The lattice trilinear sum at one output frequency (by layout index).
pub fn trilinear_n_hat(f_hat: &ComplexField, t: f64, xi: (usize, usize)) -> Result<Complex64> {
    f_hat.require_space(Space::Fourier)?;
    check_trilinear_size(f_hat.grid().n())?;
    let tables = LatticeTables::new(f_hat);
    Ok(trilinear_at(f_hat, t, xi, &tables))
}

/// The lattice trilinear sum at every output frequency.
pub fn trilinear_n_hat_full(f_hat: &ComplexField, t: f64) -> Result<ComplexField> {
    f_hat.require_space(Space::Fourier)?;
    check_trilinear_size(f_hat.grid().n())?;
    let tables = LatticeTables::new(f_hat);
    let n = tables.n;
    let mut out = ComplexField::zeros(f_hat.grid().clone(), Space::Fourier);
    for xi1 in 0..n {
        for xi2 in 0..n {
            out.values_mut()[xi1 * n + xi2] = trilinear_at(f_hat, t, (xi1, xi2), &tables);
        }
    }
    Ok(out)
}

fn trilinear_at(f_hat: &ComplexField, t: f64, xi: (usize, usize), tb: &LatticeTables) -> Complex64 {
    let n = tb.n;
    let v = f_hat.values();
    let (xi1, xi2) = (xi.0 as isize, xi.1 as isize);
    let ksq_xi = tb.ksq(xi.0, xi.1);
    let mut acc = Complex64::default();
    for e1 in 0..n {
        for e2 in 0..n {
            if e1 == 0 && e2 == 0 {
                continue; // kernel convention: the eta = 0 term is zero
            }
            let eta_sq = tb.ksq(e1, e2);
            let kernel = 1.0 / eta_sq;
            let de1 = tb.deriv[e1];
            let de2 = tb.deriv[e2];
            // w = xi - eta, fixed over the inner loop
            let w1 = tb.wrap(xi1 - e1 as isize);
            let w2 = tb.wrap(xi2 - e2 as isize);
            let fw = v[w1 * n + w2];
            if fw == Complex64::default() {
                continue;
            }
            let ksq_w = tb.ksq(w1, w2);
            let sym_w = de1 * tb.deriv[w2] - de2 * tb.deriv[w1];
            for s1 in 0..n {
                for s2 in 0..n {
                    // u = xi - sigma, so = sigma + eta - xi, v_neg = -so
                    let u1 = tb.wrap(xi1 - s1 as isize);
                    let u2 = tb.wrap(xi2 - s2 as isize);
                    let fu = v[u1 * n + u2];
                    if fu == Complex64::default() {
                        continue;
                    }
                    let so1 = tb.wrap(s1 as isize + e1 as isize - xi1);
                    let so2 = tb.wrap(s2 as isize + e2 as isize - xi2);
                    let vn1 = tb.wrap(-(so1 as isize));
                    let vn2 = tb.wrap(-(so2 as isize));
                    let fv = v[vn1 * n + vn2].conj();

                    let symbol = (tb.deriv[u1] * tb.deriv[so2] - tb.deriv[u2] * tb.deriv[so1])
                        + sym_w;
                    if symbol == 0.0 {
                        continue;
                    }
                    let phase =
                        t * (ksq_xi - tb.ksq(u1, u2) + tb.ksq(so1, so2) - ksq_w);
                    acc += kernel * symbol * Complex64::from_polar(1.0, phase) * fu * fv * fw;
                }
            }
        }
    }
    acc
}

/// Report of the pointwise symbol and kernel-closedness identities.
#[derive(Debug, Clone, Copy)]
pub struct SymbolCheckReport {
    pub checked: usize,
    pub skipped: usize,
    pub max_symbol_residual: f64,
    pub max_closedness_residual: f64,
}

/// Check, at arbitrary real sample points, that the symbol equals
/// `(eta_1 d_{eta_2} Phi - eta_2 d_{eta_1} Phi) / 2` and that the kernel
/// 1-form is closed: `d_{eta_1}(eta_2 |eta|^{-2}) - d_{eta_2}(eta_1
/// |eta|^{-2}) = 0`, both via closed-form partial derivatives.
pub fn null_symbol_checks(samples: &[([f64; 2], [f64; 2])]) -> SymbolCheckReport {
    let mut report = SymbolCheckReport {
        checked: 0,
        skipped: 0,
        max_symbol_residual: 0.0,
        max_closedness_residual: 0.0,
    };
    for &(eta, sigma) in samples {
        if eta == [0.0, 0.0] {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        // d Phi / d eta_j = 2 sigma_j.
        let from_phase = 0.5 * (eta[0] * 2.0 * sigma[1] - eta[1] * 2.0 * sigma[0]);
        let sym = TrilinearSpec::symbol(eta, sigma);
        report.max_symbol_residual = report.max_symbol_residual.max((sym - from_phase).abs());

        let sq = eta[0] * eta[0] + eta[1] * eta[1];
        let d1_of_k2 = -2.0 * eta[0] * eta[1] / (sq * sq);
        let d2_of_k1 = -2.0 * eta[1] * eta[0] / (sq * sq);
        report.max_closedness_residual = report
            .max_closedness_residual
            .max((d1_of_k2 - d2_of_k1).abs());
    }
    report
}

/// The four frequency-integrated-by-parts pieces at sampled frequencies,
/// their recombination, and the exact lattice value for comparison.
#[derive(Debug, Clone)]
pub struct IbpDecomposition {
    pub xis: Vec<(usize, usize)>,
    pub n1: Vec<Complex64>,
    pub n2: Vec<Complex64>,
    pub n3: Vec<Complex64>,
    pub n4: Vec<Complex64>,
    pub recombined: Vec<Complex64>,
    pub exact: Vec<Complex64>,
    /// `max |recombined - exact| / (max |exact| + tiny)` over the samples.
    pub defect: f64,
}

/// Evaluate the integrated-by-parts decomposition of the trilinear sum at
/// the given output frequencies. Requires `t >= 0.5` (the `1/t` prefactor
/// degenerates) and a boundary-concentrated profile.
pub fn ibp_decomposition(
    f_hat: &ComplexField,
    t: f64,
    xis: &[(usize, usize)],
) -> Result<IbpDecomposition> {
    f_hat.require_space(Space::Fourier)?;
    check_trilinear_size(f_hat.grid().n())?;
    if t < 0.5 {
        return Err(Error::parameter(format!(
            "frequency integration by parts requires t >= 0.5, got {t}"
        )));
    }
    let grid = f_hat.grid().clone();
    let n = grid.n();
    let tb = LatticeTables::new(f_hat);

    // d_eta f_hat as the transform of the coordinate-weighted profile.
    let f = f_hat.to_physical();
    let minus_i = Complex64::new(0.0, -1.0);
    let df1 = f.mul_coord(Axis::X1).to_fourier().scaled(minus_i);
    let df2 = f.mul_coord(Axis::X2).to_fourier().scaled(minus_i);

    let fbar = |m: (usize, usize)| -> Complex64 {
        let i = tb.wrap(-(m.0 as isize));
        let j = tb.wrap(-(m.1 as isize));
        f_hat.values()[i * n + j].conj()
    };
    let dfbar = |df: &ComplexField, m: (usize, usize)| -> Complex64 {
        let i = tb.wrap(-(m.0 as isize));
        let j = tb.wrap(-(m.1 as isize));
        -df.values()[i * n + j].conj()
    };

    let mut out = IbpDecomposition {
        xis: xis.to_vec(),
        n1: Vec::with_capacity(xis.len()),
        n2: Vec::with_capacity(xis.len()),
        n3: Vec::with_capacity(xis.len()),
        n4: Vec::with_capacity(xis.len()),
        recombined: Vec::with_capacity(xis.len()),
        exact: Vec::with_capacity(xis.len()),
        defect: 0.0,
    };

    for &xi in xis {
        let (xi1, xi2) = (xi.0 as isize, xi.1 as isize);
        let mut n1 = Complex64::default();
        let mut n2 = Complex64::default();
        let mut n3 = Complex64::default();
        let mut n4 = Complex64::default();
        for e1 in 0..n {
            for e2 in 0..n {
                if e1 == 0 && e2 == 0 {
                    continue;
                }
                let eta = [tb.freq[e1], tb.freq[e2]];
                let kernel = TrilinearSpec::kernel(eta);
                let w = (tb.wrap(xi1 - e1 as isize), tb.wrap(xi2 - e2 as isize));
                let fw = f_hat.values()[w.0 * n + w.1];
                let dfw2 = df2.values()[w.0 * n + w.1];
                let dfw1 = df1.values()[w.0 * n + w.1];
                for s1 in 0..n {
                    for s2 in 0..n {
                        let sigma = [tb.freq[s1], tb.freq[s2]];
                        let u = (tb.wrap(xi1 - s1 as isize), tb.wrap(xi2 - s2 as isize));
                        let fu = f_hat.values()[u.0 * n + u.1];
                        if fu == Complex64::default() {
                            continue;
                        }
                        let so = (
                            tb.wrap(s1 as isize + e1 as isize - xi1),
                            tb.wrap(s2 as isize + e2 as isize - xi2),
                        );
                        let phase = Complex64::from_polar(1.0, t * TrilinearSpec::phase(eta, sigma));
                        let common = kernel * phase * fu;

                        // Middle-factor derivatives (conjugate profile).
                        n1 -= common * eta[0] * dfbar(&df2, so) * fw;
                        n2 += common * eta[1] * dfbar(&df1, so) * fw;
                        // Last-factor derivatives; the chain rule on
                        // xi - eta flips each sign once more.
                        let fv = fbar(so);
                        n3 += common * eta[0] * fv * dfw2;
                        n4 -= common * eta[1] * fv * dfw1;
                    }
                }
            }
        }
        let scale = Complex64::new(0.0, 2.0 * t).finv();
        out.n1.push(n1);
        out.n2.push(n2);
        out.n3.push(n3);
        out.n4.push(n4);
        out.recombined.push((n1 + n2 + n3 + n4) * scale);
        out.exact.push(trilinear_at(f_hat, t, xi, &tb));
    }

    let sup_exact = out.exact.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let sup_err = out
        .recombined
        .iter()
        .zip(out.exact.iter())
        .map(|(r, e)| (r - e).norm())
        .fold(0.0, f64::max);
    out.defect = sup_err / (sup_exact + 1e-300);
    Ok(out)
}

/// Per-checkpoint sup norms of the profile and of the transformed
/// nonlinear terms, with a log-log decay-slope fit helper.
#[derive(Debug, Clone)]
pub struct SupNormSeries {
    pub t: Vec<f64>,
    pub fhat_sup: Vec<f64>,
    pub cubic_gauge_sup: Vec<f64>,
    pub quintic_sup: Vec<f64>,
    pub self_term_sup: Vec<f64>,
}

pub fn nhat_sup_track(states: &[SimulationState]) -> Result<SupNormSeries> {
    let mut series = SupNormSeries {
        t: Vec::new(),
        fhat_sup: Vec::new(),
        cubic_gauge_sup: Vec::new(),
        quintic_sup: Vec::new(),
        self_term_sup: Vec::new(),
    };
    for state in states {
        let (cubic, quintic, self_term) = nonlinearity(&state.phi, &state.gauge, state.g)?;
        series.t.push(state.t);
        series.fhat_sup.push(state.f_hat().linf_norm());
        series.cubic_gauge_sup.push(cubic.to_fourier().linf_norm());
        series.quintic_sup.push(quintic.to_fourier().linf_norm());
        series.self_term_sup.push(self_term.to_fourier().linf_norm());
    }
    Ok(series)
}

/// Slope of `ln(values)` against `ln(1 + t)` over `t` in `[t0, t1]`.
pub fn decay_slope(ts: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in ts.iter().zip(values.iter()) {
        if t >= t0 && t <= t1 && v > 0.0 {
            xs.push((1.0 + t).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::parameter(
            "decay-slope fit needs at least 3 positive samples in the window",
        ));
    }
    Ok(linear_fit(&xs, &ys).0)
}
