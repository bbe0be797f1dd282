//! Covariant operators `D_k = d_k + i A_k`, the Galilean vector fields
//! `J_k = x_k + 2 i t d_k` and `bfJ_k = x_k + 2 i t D_k`, and numerical
//! checks of their commutation and Leibniz identities.
//!
//! The coordinate `x_k` on the torus is the centered sawtooth, so every
//! `J`/`bfJ` check carries the boundary-concentration caveat: callers
//! should keep the mass fraction in the outer strip (see
//! [`ComplexField::boundary_mass_fraction`]) negligible.
//!
//! Sign note: expanding the commutator directly gives
//! `bfJ_j D_k psi - D_k bfJ_j psi = -delta_{jk} psi + t eps_{jk} |phi|^2 psi`
//! (the multiplication rule `[x_j, d_k] = -delta_{jk}` fixes the sign of
//! the first term), and that is the identity checked here. On the torus
//! the curvature constraint pins `d1 A2 - d2 A1` to the mean-free part of
//! `-(1/2)|phi|^2`, so the identity checks use the mean-removed density.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField, Space};
use crate::gauge::{constraint_residual, GaugeConfiguration};
use crate::grid::Axis;

/// Time and gauge configuration an identity check runs against.
#[derive(Clone, Copy)]
pub struct OperatorContext<'a> {
    pub t: f64,
    pub gauge: &'a GaugeConfiguration,
}

/// Relative curl-constraint residual above which a context is rejected.
const OFF_SHELL_LIMIT: f64 = 0.1;

/// `D_axis psi = d_axis psi + i A_axis psi` against an explicit potential.
pub fn cov_grad(psi: &ComplexField, a: &RealField, axis: Axis) -> Result<ComplexField> {
    psi.require_space(Space::Physical)?;
    let mut out = psi.derivative(axis);
    let i = Complex64::new(0.0, 1.0);
    for ((o, p), w) in out
        .values_mut()
        .iter_mut()
        .zip(psi.values().iter())
        .zip(a.values().iter())
    {
        *o += i * *w * p;
    }
    Ok(out)
}

pub fn cov_grad_ctx(psi: &ComplexField, ctx: &OperatorContext, axis: Axis) -> Result<ComplexField> {
    let a = match axis {
        Axis::X1 => &ctx.gauge.a1,
        Axis::X2 => &ctx.gauge.a2,
    };
    cov_grad(psi, a, axis)
}

/// `J_axis psi = x_axis psi + 2 i t d_axis psi`.
pub fn galilean_op(psi: &ComplexField, t: f64, axis: Axis) -> Result<ComplexField> {
    psi.require_space(Space::Physical)?;
    let mut out = psi.mul_coord(axis);
    out.add_assign_scaled(&psi.derivative(axis), Complex64::new(0.0, 2.0 * t));
    Ok(out)
}

/// `bfJ_axis psi = x_axis psi + 2 i t D_axis psi`.
pub fn cov_galilean_op(psi: &ComplexField, ctx: &OperatorContext, axis: Axis) -> Result<ComplexField> {
    let mut out = psi.mul_coord(axis);
    out.add_assign_scaled(
        &cov_grad_ctx(psi, ctx, axis)?,
        Complex64::new(0.0, 2.0 * ctx.t),
    );
    Ok(out)
}

fn require_on_shell(phi: &ComplexField, ctx: &OperatorContext) -> Result<()> {
    let res = constraint_residual(ctx.gauge, phi)?;
    if res.curl_rel > OFF_SHELL_LIMIT || res.div_rel > OFF_SHELL_LIMIT {
        return Err(Error::precondition(format!(
            "gauge configuration is off shell for this phi (div_rel = {:.3e}, curl_rel = {:.3e})",
            res.div_rel, res.curl_rel
        )));
    }
    Ok(())
}

/// Mean-removed density `|phi|^2 - mean`, the curvature the torus gauge
/// actually carries (times -1/2).
fn meanfree_density(phi: &ComplexField) -> RealField {
    let mut rho = phi.abs_squared();
    let mean = rho.mean();
    for v in rho.values_mut() {
        *v -= mean;
    }
    rho
}

/// Max over (j,k) of the L2 residual of
/// `bfJ_j D_k psi - D_k bfJ_j psi = -delta_{jk} psi + t eps_{jk} rho psi`.
pub fn check_commutator_jd(
    psi: &ComplexField,
    phi: &ComplexField,
    ctx: &OperatorContext,
) -> Result<f64> {
    require_on_shell(phi, ctx)?;
    let rho = meanfree_density(phi);
    let mut worst = 0.0f64;
    for j in Axis::BOTH {
        for k in Axis::BOTH {
            let dk_psi = cov_grad_ctx(psi, ctx, k)?;
            let lhs_a = cov_galilean_op(&dk_psi, ctx, j)?;
            let jj_psi = cov_galilean_op(psi, ctx, j)?;
            let lhs_b = cov_grad_ctx(&jj_psi, ctx, k)?;
            let mut lhs = lhs_a.sub(&lhs_b);

            let delta = if j == k { 1.0 } else { 0.0 };
            let eps = Axis::epsilon(j, k);
            for ((l, p), r) in lhs
                .values_mut()
                .iter_mut()
                .zip(psi.values().iter())
                .zip(rho.values().iter())
            {
                *l -= (-delta + ctx.t * eps * r) * p;
            }
            worst = worst.max(lhs.l2_norm());
        }
    }
    Ok(worst)
}

/// Max over k of the L2 residual of the third-order spatial commutation
/// `D_k D_l D_l psi = D_l D_l D_k psi
///    - i eps_{kl} ( rho D_l psi + Re(phi conj(D_l phi)) psi )`,
/// the `Re(..)` standing for `(phi conj(D_l phi) + (D_l phi) conj(phi))/2`.
pub fn check_spatial_commutator(
    psi: &ComplexField,
    phi: &ComplexField,
    ctx: &OperatorContext,
) -> Result<f64> {
    require_on_shell(phi, ctx)?;
    let rho = meanfree_density(phi);
    let i = Complex64::new(0.0, 1.0);

    let d_psi: Vec<ComplexField> = Axis::BOTH
        .iter()
        .map(|&l| cov_grad_ctx(psi, ctx, l))
        .collect::<Result<_>>()?;
    let d_phi: Vec<ComplexField> = Axis::BOTH
        .iter()
        .map(|&l| cov_grad_ctx(phi, ctx, l))
        .collect::<Result<_>>()?;
    // D_l D_l psi
    let mut lap_psi = cov_grad_ctx(&d_psi[0], ctx, Axis::X1)?;
    lap_psi = lap_psi.add(&cov_grad_ctx(&d_psi[1], ctx, Axis::X2)?);

    let mut worst = 0.0f64;
    for k in Axis::BOTH {
        let lhs = cov_grad_ctx(&lap_psi, ctx, k)?;

        // D_l D_l D_k psi
        let dk_psi = &d_psi[k.index()];
        let mut rhs = cov_grad_ctx(&cov_grad_ctx(dk_psi, ctx, Axis::X1)?, ctx, Axis::X1)?;
        rhs = rhs.add(&cov_grad_ctx(
            &cov_grad_ctx(dk_psi, ctx, Axis::X2)?,
            ctx,
            Axis::X2,
        )?);

        for l in Axis::BOTH {
            let eps = Axis::epsilon(k, l);
            if eps == 0.0 {
                continue;
            }
            let dl_psi = &d_psi[l.index()];
            let dl_phi = &d_phi[l.index()];
            for (idx, r) in rhs.values_mut().iter_mut().enumerate() {
                let current = phi.values()[idx] * dl_phi.values()[idx].conj();
                *r -= i * eps
                    * (rho.values()[idx] * dl_psi.values()[idx]
                        + Complex64::new(current.re, 0.0) * psi.values()[idx]);
            }
        }
        worst = worst.max(lhs.sub(&rhs).l2_norm());
    }
    Ok(worst)
}

/// L2 residual of `[D1, D2] psi = i F12 psi` with `F12` the mean-free
/// `-(1/2)|phi|^2` the constraint pins on the torus.
pub fn check_curvature_commutator(
    psi: &ComplexField,
    phi: &ComplexField,
    ctx: &OperatorContext,
) -> Result<f64> {
    require_on_shell(phi, ctx)?;
    let rho = meanfree_density(phi);
    let d2_psi = cov_grad_ctx(psi, ctx, Axis::X2)?;
    let d1_psi = cov_grad_ctx(psi, ctx, Axis::X1)?;
    let lhs = cov_grad_ctx(&d2_psi, ctx, Axis::X1)?.sub(&cov_grad_ctx(&d1_psi, ctx, Axis::X2)?);
    let mut res = lhs;
    let half_i = Complex64::new(0.0, 0.5);
    for ((v, p), r) in res
        .values_mut()
        .iter_mut()
        .zip(psi.values().iter())
        .zip(rho.values().iter())
    {
        // lhs - i F12 psi with F12 = -(1/2) rho
        *v += half_i * *r * p;
    }
    Ok(res.l2_norm())
}

/// Residual of the Galilean Leibniz rule for the cubic product,
/// `J_k (p1 conj(p2) p3) = (J_k p1) conj(p2) p3 - p1 conj(J_k p2) p3
///                          + p1 conj(p2) (J_k p3)`,
/// maximized over k.
pub fn check_leibniz_galilean(
    psi1: &ComplexField,
    psi2: &ComplexField,
    psi3: &ComplexField,
    t: f64,
) -> Result<f64> {
    let product = psi1.mul_pointwise(&psi2.conj()).mul_pointwise(psi3);
    let mut worst = 0.0f64;
    for k in Axis::BOTH {
        let lhs = galilean_op(&product, t, k)?;
        let term1 = galilean_op(psi1, t, k)?.mul_pointwise(&psi2.conj()).mul_pointwise(psi3);
        let term2 = psi1
            .mul_pointwise(&galilean_op(psi2, t, k)?.conj())
            .mul_pointwise(psi3);
        let term3 = psi1
            .mul_pointwise(&psi2.conj())
            .mul_pointwise(&galilean_op(psi3, t, k)?);
        let rhs = term1.sub(&term2).add(&term3);
        worst = worst.max(lhs.sub(&rhs).l2_norm());
    }
    Ok(worst)
}

/// Covariant-gradient Leibniz rule for the cubic product (all plus signs:
/// the conjugated middle factor flips the sign of its `i A` term).
pub fn check_leibniz_cov_grad(
    psi1: &ComplexField,
    psi2: &ComplexField,
    psi3: &ComplexField,
    ctx: &OperatorContext,
) -> Result<f64> {
    let product = psi1.mul_pointwise(&psi2.conj()).mul_pointwise(psi3);
    let mut worst = 0.0f64;
    for k in Axis::BOTH {
        let lhs = cov_grad_ctx(&product, ctx, k)?;
        let term1 = cov_grad_ctx(psi1, ctx, k)?
            .mul_pointwise(&psi2.conj())
            .mul_pointwise(psi3);
        let term2 = psi1
            .mul_pointwise(&cov_grad_ctx(psi2, ctx, k)?.conj())
            .mul_pointwise(psi3);
        let term3 = psi1
            .mul_pointwise(&psi2.conj())
            .mul_pointwise(&cov_grad_ctx(psi3, ctx, k)?);
        let rhs = term1.add(&term2).add(&term3);
        worst = worst.max(lhs.sub(&rhs).l2_norm());
    }
    Ok(worst)
}

/// Covariant Galilean Leibniz rule (minus on the conjugated factor).
pub fn check_leibniz_cov_galilean(
    psi1: &ComplexField,
    psi2: &ComplexField,
    psi3: &ComplexField,
    ctx: &OperatorContext,
) -> Result<f64> {
    let product = psi1.mul_pointwise(&psi2.conj()).mul_pointwise(psi3);
    let mut worst = 0.0f64;
    for k in Axis::BOTH {
        let lhs = cov_galilean_op(&product, ctx, k)?;
        let term1 = cov_galilean_op(psi1, ctx, k)?
            .mul_pointwise(&psi2.conj())
            .mul_pointwise(psi3);
        let term2 = psi1
            .mul_pointwise(&cov_galilean_op(psi2, ctx, k)?.conj())
            .mul_pointwise(psi3);
        let term3 = psi1
            .mul_pointwise(&psi2.conj())
            .mul_pointwise(&cov_galilean_op(psi3, ctx, k)?);
        let rhs = term1.sub(&term2).add(&term3);
        worst = worst.max(lhs.sub(&rhs).l2_norm());
    }
    Ok(worst)
}

/// Interpolation-inequality ratios
/// `||D psi||_4^2 / (||psi||_inf ||D(2) psi||_2)` and the `bfJ` twin,
/// with `||D psi||_4 = (sum_j ||D_j psi||_4^4)^(1/4)` and
/// `||D(2) psi||_2 = (sum_jk ||D_j D_k psi||_2^2)^(1/2)`.
/// The chain of estimates behind the inequality yields the constant 3.
pub fn gagliardo_nirenberg_ratios(psi: &ComplexField, ctx: &OperatorContext) -> Result<(f64, f64)> {
    let sup = psi.linf_norm();
    if sup == 0.0 {
        return Err(Error::parameter(
            "interpolation ratio is undefined for the zero field",
        ));
    }
    let ratio_d = interpolation_ratio(psi, ctx, sup, &cov_grad_ctx)?;
    let ratio_j = interpolation_ratio(psi, ctx, sup, &cov_galilean_op)?;
    Ok((ratio_d, ratio_j))
}

fn interpolation_ratio(
    psi: &ComplexField,
    ctx: &OperatorContext,
    sup: f64,
    op: &dyn Fn(&ComplexField, &OperatorContext, Axis) -> Result<ComplexField>,
) -> Result<f64> {
    let mut p4 = 0.0f64;
    let mut second_sq = 0.0f64;
    for j in Axis::BOTH {
        let first = op(psi, ctx, j)?;
        p4 += first.lp_norm(4)?.powi(4);
        for k in Axis::BOTH {
            second_sq += op(&first, ctx, k)?.l2_norm().powi(2);
        }
    }
    // p4.sqrt() is the squared 4-norm of the gradient vector.
    Ok(p4.sqrt() / (sup * second_sq.sqrt()))
}

/// Sup-norm residual of the chirp conjugation identity
/// `bfJ_k psi = 2 i t e^{i|x|^2/4t} D_k ( e^{-i|x|^2/4t} psi )`,
/// maximized over k. Meaningful for `t` bounded away from zero and
/// boundary-concentrated `psi` (the chirp is differentiated spectrally).
pub fn conjugation_identity_residual(psi: &ComplexField, ctx: &OperatorContext) -> Result<f64> {
    if ctx.t == 0.0 {
        return Err(Error::parameter(
            "conjugation identity degenerates at t = 0",
        ));
    }
    psi.require_space(Space::Physical)?;
    let grid = psi.grid().clone();
    let n = grid.n();
    let quarter_t = 1.0 / (4.0 * ctx.t);
    let mut chirp = vec![Complex64::default(); n * n];
    for i in 0..n {
        let x1 = grid.coord(i);
        for j in 0..n {
            let x2 = grid.coord(j);
            chirp[i * n + j] = Complex64::from_polar(1.0, -(x1 * x1 + x2 * x2) * quarter_t);
        }
    }
    let chirp_field = ComplexField::from_values(grid, Space::Physical, chirp)?;
    let conjugated = chirp_field.mul_pointwise(psi);

    let mut worst = 0.0f64;
    for k in Axis::BOTH {
        let lhs = cov_galilean_op(psi, ctx, k)?;
        let inner = cov_grad_ctx(&conjugated, ctx, k)?;
        let rhs = chirp_field
            .conj()
            .mul_pointwise(&inner)
            .scaled(Complex64::new(0.0, 2.0 * ctx.t));
        worst = worst.max(lhs.sub(&rhs).linf_norm());
    }
    Ok(worst)
}
