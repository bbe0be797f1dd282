//! Time integration of the gauge-covariant Schroedinger system.
//!
//! The stiff linear part is handled exactly by working on the profile
//! `f = exp(-i t Lap) phi` (equivalently `f_hat = exp(+i t |k|^2) phi_hat`),
//! whose equation is
//!
//! ```text
//! d/dt f_hat = exp(i t |k|^2) * F[ N + R + T ](phi(t)),
//! ```
//!
//! integrated with classical four-stage Runge-Kutta. The potentials are
//! recomputed from `phi` at every stage; they are constrained, never
//! evolved. `N` is the gauge cubic term `-i A0_quadratic phi - 2 A_l d_l phi`,
//! `R` the gauge quintic term `-i A0_quartic phi - i A_l A_l phi`, and `T`
//! the self-interaction `i g |phi|^2 phi`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::config::RunConfig;
use crate::datum::build_datum;
use crate::diagnostics::{record_for_state, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::gauge::{solve_gauge, GaugeConfiguration};
use crate::grid::{Axis, SpectralGrid};

/// Which nonlinear terms the integrator assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interactions {
    /// The full right-hand side `N + R + T`.
    Full,
    /// Gauge terms disabled; only the self-interaction `T` remains
    /// (free Schroedinger flow when `g = 0`).
    SelfOnly,
}

#[derive(Clone, Debug)]
pub struct SimulationState {
    pub t: f64,
    pub step_index: u64,
    pub phi: ComplexField,
    pub gauge: GaugeConfiguration,
    pub g: Complex64,
    pub interactions: Interactions,
}

impl SimulationState {
    pub fn new(phi: ComplexField, t: f64, g: Complex64, interactions: Interactions) -> Result<Self> {
        phi.require_space(Space::Physical)?;
        let gauge = solve_gauge(&phi)?;
        Ok(Self {
            t,
            step_index: 0,
            phi,
            gauge,
            g,
            interactions,
        })
    }

    pub fn charge(&self) -> f64 {
        self.phi.charge()
    }

    /// Fourier profile `f_hat = exp(i t |k|^2) phi_hat`.
    pub fn f_hat(&self) -> ComplexField {
        let mut hat = self.phi.to_fourier();
        apply_quadratic_phase(&mut hat, self.t);
        hat
    }

    /// Physical profile `f = exp(-i t Lap) phi`.
    pub fn profile(&self) -> ComplexField {
        self.f_hat().to_physical()
    }
}

/// Multiply a Fourier-space field by `exp(i s |k|^2)` in place.
pub fn apply_quadratic_phase(hat: &mut ComplexField, s: f64) {
    debug_assert_eq!(hat.space(), Space::Fourier);
    let grid = hat.grid().clone();
    let n = grid.n();
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            hat.values_mut()[i * n + j] *= Complex64::from_polar(1.0, s * (k1 * k1 + k2 * k2));
        }
    }
}

/// The three split nonlinear terms for `phi` with its gauge configuration.
///
/// Physical-space fields; their sum is the full right-hand side of the
/// evolution equation minus the linear part.
pub fn nonlinearity(
    phi: &ComplexField,
    gauge: &GaugeConfiguration,
    g: Complex64,
) -> Result<(ComplexField, ComplexField, ComplexField)> {
    phi.require_space(Space::Physical)?;
    if !gauge.matches_phi(phi) {
        return Err(Error::precondition(
            "gauge configuration was not sourced by this phi",
        ));
    }
    let d1 = phi.derivative(Axis::X1);
    let d2 = phi.derivative(Axis::X2);
    let minus_i = Complex64::new(0.0, -1.0);

    let mut cubic = phi.mul_real(&gauge.a0_quadratic).scaled(minus_i);
    cubic.add_assign_scaled(&d1.mul_real(&gauge.a1), Complex64::new(-2.0, 0.0));
    cubic.add_assign_scaled(&d2.mul_real(&gauge.a2), Complex64::new(-2.0, 0.0));

    let a_sq = gauge
        .a1
        .mul_pointwise(&gauge.a1)
        .add(&gauge.a2.mul_pointwise(&gauge.a2));
    let mut quintic = phi.mul_real(&gauge.a0_quartic).scaled(minus_i);
    quintic.add_assign_scaled(&phi.mul_real(&a_sq), minus_i);

    let self_term = phi
        .mul_real(&phi.abs_squared())
        .scaled(Complex64::new(0.0, 1.0) * g);

    Ok((cubic, quintic, self_term))
}

/// Fourier transform of the assembled nonlinearity, computed from the
/// Fourier representation of `phi` with packed real transforms. This is
/// the integrator's stage kernel; it agrees with summing the three parts
/// of [`nonlinearity`] to roundoff.
pub fn nonlinear_rhs_hat(
    phi_hat: &ComplexField,
    g: Complex64,
    interactions: Interactions,
) -> ComplexField {
    debug_assert_eq!(phi_hat.space(), Space::Fourier);
    let grid = phi_hat.grid().clone();
    let n = grid.n();
    let count = n * n;

    let phi = phi_hat.to_physical();
    let rho: Vec<f64> = phi.values().iter().map(|v| v.norm_sqr()).collect();

    if interactions == Interactions::SelfOnly {
        let ig = Complex64::new(0.0, 1.0) * g;
        let mut nl = vec![Complex64::default(); count];
        for idx in 0..count {
            nl[idx] = ig * rho[idx] * phi.values()[idx];
        }
        let mut out = ComplexField::from_values(grid.clone(), Space::Physical, nl)
            .expect("sized buffer");
        out = out.to_fourier();
        return out;
    }

    let mut d1_hat = phi_hat.clone();
    multiply_deriv(&mut d1_hat, &grid, Axis::X1);
    let d1 = d1_hat.to_physical();
    let mut d2_hat = phi_hat.clone();
    multiply_deriv(&mut d2_hat, &grid, Axis::X2);
    let d2 = d2_hat.to_physical();

    // Current source for the quadratic part of A0.
    let s: Vec<f64> = (0..count)
        .map(|idx| (d1.values()[idx] * d2.values()[idx].conj()).im)
        .collect();

    let (rho_hat, s_hat) = forward_real_pair(&grid, &rho, &s);

    // A1, A2 from the density; A0 assembled in Fourier space.
    let mut a1_hat = vec![Complex64::default(); count];
    let mut a2_hat = vec![Complex64::default(); count];
    let mut a0_hat = vec![Complex64::default(); count];
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        let e1 = grid.deriv_wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            let e2 = grid.deriv_wavenumber(j);
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                continue;
            }
            let idx = i * n + j;
            let half_i = Complex64::new(0.0, 0.5 / ksq);
            a1_hat[idx] = -half_i * e2 * rho_hat[idx];
            a2_hat[idx] = half_i * e1 * rho_hat[idx];
            a0_hat[idx] = 2.0 / ksq * s_hat[idx];
        }
    }
    let (a1, a2) = inverse_real_pair(&grid, &a1_hat, &a2_hat);

    // Quartic part of A0: -(-Lap)^{-1} ( d1 (A2 rho) - d2 (A1 rho) ).
    let p1: Vec<f64> = (0..count).map(|idx| a2[idx] * rho[idx]).collect();
    let p2: Vec<f64> = (0..count).map(|idx| a1[idx] * rho[idx]).collect();
    let (p1_hat, p2_hat) = forward_real_pair(&grid, &p1, &p2);
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        let e1 = grid.deriv_wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            let e2 = grid.deriv_wavenumber(j);
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                continue;
            }
            let idx = i * n + j;
            let i_over = Complex64::new(0.0, 1.0 / ksq);
            a0_hat[idx] -= i_over * (e1 * p1_hat[idx] - e2 * p2_hat[idx]);
        }
    }
    let a0 = inverse_real(&grid, &a0_hat);

    let ig = Complex64::new(0.0, 1.0) * g;
    let minus_i = Complex64::new(0.0, -1.0);
    let mut nl = vec![Complex64::default(); count];
    for idx in 0..count {
        let p = phi.values()[idx];
        nl[idx] = minus_i * a0[idx] * p
            - 2.0 * (a1[idx] * d1.values()[idx] + a2[idx] * d2.values()[idx])
            + minus_i * (a1[idx] * a1[idx] + a2[idx] * a2[idx]) * p
            + ig * rho[idx] * p;
    }
    ComplexField::from_values(grid, Space::Physical, nl)
        .expect("sized buffer")
        .to_fourier()
}

fn multiply_deriv(hat: &mut ComplexField, grid: &Arc<SpectralGrid>, axis: Axis) {
    let n = grid.n();
    for i in 0..n {
        for j in 0..n {
            let d = match axis {
                Axis::X1 => grid.deriv_wavenumber(i),
                Axis::X2 => grid.deriv_wavenumber(j),
            };
            hat.values_mut()[i * n + j] *= Complex64::new(0.0, d);
        }
    }
}

/// Forward transform of two real fields packed into one complex FFT.
fn forward_real_pair(grid: &Arc<SpectralGrid>, u: &[f64], v: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n();
    let mut packed: Vec<Complex64> = u
        .iter()
        .zip(v.iter())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    grid.forward_values(&mut packed);
    let mut u_hat = vec![Complex64::default(); n * n];
    let mut v_hat = vec![Complex64::default(); n * n];
    for i in 0..n {
        let ni = if i == 0 { 0 } else { n - i };
        for j in 0..n {
            let nj = if j == 0 { 0 } else { n - j };
            let h = packed[i * n + j];
            let hc = packed[ni * n + nj].conj();
            u_hat[i * n + j] = 0.5 * (h + hc);
            v_hat[i * n + j] = Complex64::new(0.0, -0.5) * (h - hc);
        }
    }
    (u_hat, v_hat)
}

/// Inverse transform of two conjugate-symmetric spectra packed into one
/// complex FFT; returns the two real fields.
fn inverse_real_pair(grid: &Arc<SpectralGrid>, u_hat: &[Complex64], v_hat: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let mut packed: Vec<Complex64> = u_hat
        .iter()
        .zip(v_hat.iter())
        .map(|(&a, &b)| a + Complex64::new(0.0, 1.0) * b)
        .collect();
    grid.inverse_values(&mut packed);
    let u = packed.iter().map(|c| c.re).collect();
    let v = packed.iter().map(|c| c.im).collect();
    (u, v)
}

fn inverse_real(grid: &Arc<SpectralGrid>, u_hat: &[Complex64]) -> Vec<f64> {
    let mut buf = u_hat.to_vec();
    grid.inverse_values(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Advance the Fourier profile by `count` RK4 steps of size `dt` starting
/// at time `t0`. Fails on non-finite values.
fn advance_f_hat(
    f_hat: &mut ComplexField,
    t0: f64,
    dt: f64,
    count: u64,
    step_offset: u64,
    g: Complex64,
    interactions: Interactions,
    dealias: bool,
) -> Result<()> {
    let grid = f_hat.grid().clone();
    let n = grid.n();

    let phase = |s: f64| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n];
        for i in 0..n {
            let k1 = grid.wavenumber(i);
            for j in 0..n {
                let k2 = grid.wavenumber(j);
                out[i * n + j] = Complex64::from_polar(1.0, s * (k1 * k1 + k2 * k2));
            }
        }
        out
    };

    // Advance the unit-modulus phase arrays by half-step recurrences and
    // refresh them exactly every few steps to stop roundoff accumulating.
    let e_half = phase(0.5 * dt);
    let advance = |p: &[Complex64]| -> Vec<Complex64> {
        p.iter().zip(e_half.iter()).map(|(a, b)| a * b).collect()
    };
    const PHASE_REFRESH: u64 = 32;

    let keep = n as isize / 3;
    let mask = |hat: &mut ComplexField| {
        if !dealias {
            return;
        }
        for i in 0..n {
            let mi = grid.mode_number(i).abs();
            for j in 0..n {
                let mj = grid.mode_number(j).abs();
                if mi > keep || mj > keep {
                    hat.values_mut()[i * n + j] = Complex64::default();
                }
            }
        }
    };

    // Stage derivative at time s for profile y: P_s * F[NL](P_s^* y).
    let derivative = |y: &ComplexField, p: &[Complex64]| -> ComplexField {
        let mut phi_hat = y.clone();
        for (v, ph) in phi_hat.values_mut().iter_mut().zip(p.iter()) {
            *v *= ph.conj();
        }
        let mut rhs = nonlinear_rhs_hat(&phi_hat, g, interactions);
        for (v, ph) in rhs.values_mut().iter_mut().zip(p.iter()) {
            *v *= ph;
        }
        mask(&mut rhs);
        rhs
    };

    let mut p0 = phase(t0);
    for step in 0..count {
        let t = t0 + step as f64 * dt;
        if step > 0 && step % PHASE_REFRESH == 0 {
            p0 = phase(t);
        }
        let p_mid = advance(&p0);
        let p_end = advance(&p_mid);

        let k1 = derivative(f_hat, &p0);
        let mut y = f_hat.clone();
        y.add_assign_scaled(&k1, Complex64::new(0.5 * dt, 0.0));
        let k2 = derivative(&y, &p_mid);
        let mut y = f_hat.clone();
        y.add_assign_scaled(&k2, Complex64::new(0.5 * dt, 0.0));
        let k3 = derivative(&y, &p_mid);
        let mut y = f_hat.clone();
        y.add_assign_scaled(&k3, Complex64::new(dt, 0.0));
        let k4 = derivative(&y, &p_end);

        let sixth = dt / 6.0;
        f_hat.add_assign_scaled(&k1, Complex64::new(sixth, 0.0));
        f_hat.add_assign_scaled(&k2, Complex64::new(2.0 * sixth, 0.0));
        f_hat.add_assign_scaled(&k3, Complex64::new(2.0 * sixth, 0.0));
        f_hat.add_assign_scaled(&k4, Complex64::new(sixth, 0.0));

        if !f_hat.is_finite() {
            return Err(Error::IntegrationFailure {
                t: t + dt,
                step: step_offset + step + 1,
                reason: "non-finite profile values (instability or blow-up)".to_string(),
            });
        }
        p0 = p_end;
    }
    Ok(())
}

/// One RK4 step of size `dt` (negative `dt` integrates backwards).
pub fn step(state: &SimulationState, dt: f64) -> Result<SimulationState> {
    steps(state, dt, 1, true)
}

/// `count` RK4 steps; the gauge configuration is re-solved for the
/// returned state (it is elliptically determined, never evolved).
pub fn steps(state: &SimulationState, dt: f64, count: u64, dealias: bool) -> Result<SimulationState> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::parameter(format!("step size must be nonzero and finite, got {dt}")));
    }
    let mut f_hat = state.f_hat();
    advance_f_hat(
        &mut f_hat,
        state.t,
        dt,
        count,
        state.step_index,
        state.g,
        state.interactions,
        dealias,
    )?;
    let t_new = state.t + dt * count as f64;
    apply_quadratic_phase(&mut f_hat, -t_new);
    let phi = f_hat.to_physical();
    let gauge = solve_gauge(&phi)?;
    Ok(SimulationState {
        t: t_new,
        step_index: state.step_index + count,
        phi,
        gauge,
        g: state.g,
        interactions: state.interactions,
    })
}

/// Residual of the space-time commutation identity along a run, with the
/// covariant time derivative discretized by centered differences over
/// three consecutive states:
///
/// ```text
/// (D_t - i D_l D_l) D_k phi = D_k ( i g |phi|^2 phi )
///    + eps_{kl} ( rho D_l phi + phi conj(D_l phi) phi ),
/// ```
///
/// the right-hand side using the field equation for `(D_t - i D_l D_l)
/// phi`, the mean-free density, and the mean-removed current (the parts
/// of the curvature a zero-mean periodic potential can carry). The
/// returned max-over-k L2 residual shrinks at second order in `dt`.
pub fn space_time_commutator_residual(
    prev: &SimulationState,
    mid: &SimulationState,
    next: &SimulationState,
) -> Result<f64> {
    let dt = mid.t - prev.t;
    if !(dt > 0.0) || (next.t - mid.t - dt).abs() > 1e-12 * dt.max(1.0) {
        return Err(Error::parameter(format!(
            "states must be equally spaced in time, got {} {} {}",
            prev.t, mid.t, next.t
        )));
    }
    let ctx_prev = crate::covariant::OperatorContext { t: prev.t, gauge: &prev.gauge };
    let ctx_mid = crate::covariant::OperatorContext { t: mid.t, gauge: &mid.gauge };
    let ctx_next = crate::covariant::OperatorContext { t: next.t, gauge: &next.gauge };

    let a0_mid = mid.gauge.a0_total();
    let phi = &mid.phi;
    let n = phi.grid().n();
    let count = n * n;

    let mut rho = phi.abs_squared();
    let rho_mean = rho.mean();
    for v in rho.values_mut() {
        *v -= rho_mean;
    }

    let d_phi: Vec<ComplexField> = Axis::BOTH
        .iter()
        .map(|&l| crate::covariant::cov_grad_ctx(phi, &ctx_mid, l))
        .collect::<Result<_>>()?;
    // Currents with the mean of the imaginary (charge-flux) part removed.
    let mut currents: Vec<Vec<Complex64>> = Vec::new();
    for dl in &d_phi {
        let mut z: Vec<Complex64> = (0..count)
            .map(|idx| phi.values()[idx] * dl.values()[idx].conj())
            .collect();
        let mean_im = z.iter().map(|c| c.im).sum::<f64>() / count as f64;
        for c in z.iter_mut() {
            c.im -= mean_im;
        }
        currents.push(z);
    }

    let ig = Complex64::new(0.0, 1.0) * mid.g;
    let source = phi.mul_real(&phi.abs_squared()).scaled(ig);

    let mut worst = 0.0f64;
    for k in Axis::BOTH {
        let dk_prev = crate::covariant::cov_grad_ctx(&prev.phi, &ctx_prev, k)?;
        let dk_next = crate::covariant::cov_grad_ctx(&next.phi, &ctx_next, k)?;
        let dk_mid = &d_phi[k.index()];

        // D_t (D_k phi) at the midpoint.
        let mut lhs = dk_next
            .sub(&dk_prev)
            .scaled(Complex64::new(1.0 / (2.0 * dt), 0.0));
        let i = Complex64::new(0.0, 1.0);
        for (v, (d, a)) in lhs
            .values_mut()
            .iter_mut()
            .zip(dk_mid.values().iter().zip(a0_mid.values().iter()))
        {
            *v += i * *a * d;
        }
        // minus i D_l D_l D_k phi
        let mut lap_dk = crate::covariant::cov_grad_ctx(
            &crate::covariant::cov_grad_ctx(dk_mid, &ctx_mid, Axis::X1)?,
            &ctx_mid,
            Axis::X1,
        )?;
        lap_dk = lap_dk.add(&crate::covariant::cov_grad_ctx(
            &crate::covariant::cov_grad_ctx(dk_mid, &ctx_mid, Axis::X2)?,
            &ctx_mid,
            Axis::X2,
        )?);
        lhs.add_assign_scaled(&lap_dk, Complex64::new(0.0, -1.0));

        let mut rhs = crate::covariant::cov_grad_ctx(&source, &ctx_mid, k)?;
        let l = k.other();
        let eps = Axis::epsilon(k, l);
        let dl_mid = &d_phi[l.index()];
        let current = &currents[l.index()];
        for (idx, v) in rhs.values_mut().iter_mut().enumerate() {
            *v += eps
                * (rho.values()[idx] * dl_mid.values()[idx]
                    + current[idx] * phi.values()[idx]);
        }
        worst = worst.max(lhs.sub(&rhs).l2_norm());
    }
    Ok(worst)
}

/// Checkpoint series produced by [`run`].
pub struct RunArtifacts {
    pub records: Vec<DiagnosticsRecord>,
    pub states: Vec<SimulationState>,
    pub initial_charge: f64,
}

/// Integrate the configured problem, emitting a diagnostics record and a
/// checkpoint state every `checkpoint_stride` steps (and at the end).
/// Deterministic for a fixed configuration.
pub fn run(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let grid = SpectralGrid::new(config.n, config.box_length)?;
    let (mut phi0, _inventory) = build_datum(&config.datum, &grid)?;
    if config.dealias {
        phi0 = phi0.dealias();
    }
    let interactions = if config.free {
        Interactions::SelfOnly
    } else {
        Interactions::Full
    };
    let state0 = SimulationState::new(phi0, 0.0, Complex64::new(config.g, 0.0), interactions)?;
    let initial_charge = state0.charge();

    let total_steps = (config.t_end / config.dt).round() as u64;
    let stride = config.checkpoint_stride.max(1) as u64;

    let mut records = Vec::new();
    let mut states = Vec::new();

    let mut f_hat = state0.f_hat();
    records.push(record_for_state(&state0)?);
    states.push(state0.clone());

    let mut done: u64 = 0;
    while done < total_steps {
        let chunk = stride.min(total_steps - done);
        advance_f_hat(
            &mut f_hat,
            done as f64 * config.dt,
            config.dt,
            chunk,
            done,
            Complex64::new(config.g, 0.0),
            interactions,
            config.dealias,
        )?;
        done += chunk;
        let t = done as f64 * config.dt;
        let mut phi_hat = f_hat.clone();
        apply_quadratic_phase(&mut phi_hat, -t);
        let phi = phi_hat.to_physical();
        let gauge = solve_gauge(&phi)?;
        let state = SimulationState {
            t,
            step_index: done,
            phi,
            gauge,
            g: Complex64::new(config.g, 0.0),
            interactions,
        };
        records.push(record_for_state(&state)?);
        states.push(state);
    }

    Ok(RunArtifacts {
        records,
        states,
        initial_charge,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::datum::{build_datum, DatumKind, DatumSpec};
    use crate::field::Space;
    use std::sync::Arc;

    fn grid(n: usize, length: f64) -> Arc<SpectralGrid> {
        SpectralGrid::new(n, length).unwrap()
    }

    fn plane_wave(g: &Arc<SpectralGrid>, eps: f64, mode: i64) -> ComplexField {
        let k = 2.0 * std::f64::consts::PI / g.length() * mode as f64;
        ComplexField::from_fn(g.clone(), |x1, _| Complex64::from_polar(eps, k * x1))
    }

    #[test]
    fn nonlinearity_of_zero_field_vanishes() {
        let g = grid(16, 10.0);
        let phi = ComplexField::zeros(g, Space::Physical);
        let gauge = solve_gauge(&phi).unwrap();
        let (n, r, t) = nonlinearity(&phi, &gauge, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(n.linf_norm(), 0.0);
        assert_eq!(r.linf_norm(), 0.0);
        assert_eq!(t.linf_norm(), 0.0);
    }

    #[test]
    fn nonlinearity_of_plane_wave_is_pure_self_interaction() {
        let g = grid(32, 16.0);
        let eps = 0.2;
        let phi = plane_wave(&g, eps, 2);
        let gauge = solve_gauge(&phi).unwrap();
        let gc = Complex64::new(0.7, 0.0);
        let (n, r, t) = nonlinearity(&phi, &gauge, gc).unwrap();
        assert!(n.linf_norm() < 1e-15);
        assert!(r.linf_norm() < 1e-15);
        let expected = phi.scaled(Complex64::new(0.0, 1.0) * gc * eps * eps);
        assert!(t.sub(&expected).linf_norm() < 1e-14);
    }

    #[test]
    fn gauge_cubic_term_matches_explicit_assembly_for_real_phi() {
        // For real phi the current part vanishes and the gauge cubic term
        // is -2 A_l d_l phi; cross-check against the fully expanded
        // multiplier route
        //   (-Lap)^{-1}(-d1 phi d2 conj - like) phi
        //   + (-Lap)^{-1}(d2 rho) d1 phi - (-Lap)^{-1}(d1 rho) d2 phi.
        let g = grid(64, 20.0);
        let (raw, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Gaussian,
                amplitude: 0.5,
                width: 2.5,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let phi = raw.band_limit(8);
        let gauge = solve_gauge(&phi).unwrap();
        assert!(gauge.a0_quadratic.linf_norm() < 1e-15);
        let (n_term, _, _) = nonlinearity(&phi, &gauge, Complex64::default()).unwrap();

        let d1 = phi.derivative(Axis::X1);
        let d2 = phi.derivative(Axis::X2);
        let mut cross = ComplexField::zeros(g.clone(), Space::Physical);
        for (v, (a, b)) in cross
            .values_mut()
            .iter_mut()
            .zip(d1.values().iter().zip(d2.values().iter()))
        {
            // -d1 phi conj(d2 phi) + d2 phi conj(d1 phi)
            *v = -a * b.conj() + b * a.conj();
        }
        let first = cross.inv_neg_laplacian().mul_pointwise(&phi);
        let rho = phi.abs_squared().to_complex();
        let second = rho
            .derivative(Axis::X2)
            .inv_neg_laplacian()
            .mul_pointwise(&d1);
        let third = rho
            .derivative(Axis::X1)
            .inv_neg_laplacian()
            .mul_pointwise(&d2);
        let explicit = first.add(&second).sub(&third);
        let rel = n_term.sub(&explicit).l2_norm() / explicit.l2_norm();
        assert!(rel < 1e-11, "two assemblies differ by {rel:.3e}");
    }

    #[test]
    fn split_parts_sum_to_raw_reconstruction() {
        let g = grid(64, 20.0);
        let (raw, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Ring,
                amplitude: 0.3,
                width: 2.5,
                phase_twist: 1,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let phi = raw.band_limit(8);
        let gauge = solve_gauge(&phi).unwrap();
        let gc = Complex64::new(1.0, 0.0);
        let (n, r, t) = nonlinearity(&phi, &gauge, gc).unwrap();
        let sum = n.add(&r).add(&t);

        // Reconstruction from raw multiplier/product calls.
        let a0 = gauge.a0_total();
        let d1 = phi.derivative(Axis::X1);
        let d2 = phi.derivative(Axis::X2);
        let minus_i = Complex64::new(0.0, -1.0);
        let mut expected = phi.mul_real(&a0).scaled(minus_i);
        expected.add_assign_scaled(&d1.mul_real(&gauge.a1), Complex64::new(-2.0, 0.0));
        expected.add_assign_scaled(&d2.mul_real(&gauge.a2), Complex64::new(-2.0, 0.0));
        let asq = gauge.a1.mul_pointwise(&gauge.a1).add(&gauge.a2.mul_pointwise(&gauge.a2));
        expected.add_assign_scaled(&phi.mul_real(&asq), minus_i);
        expected.add_assign_scaled(
            &phi.mul_real(&phi.abs_squared()),
            Complex64::new(0.0, 1.0) * gc,
        );
        let rel = sum.sub(&expected).l2_norm() / expected.l2_norm();
        assert!(rel < 1e-12, "split sum differs from reconstruction by {rel:.3e}");

        // The packed stage kernel agrees with the split assembly too.
        let fast = nonlinear_rhs_hat(&phi.to_fourier(), gc, Interactions::Full);
        let rel2 = sum.to_fourier().sub(&fast).l2_norm() / fast.l2_norm();
        assert!(rel2 < 1e-12, "stage kernel differs from split sum by {rel2:.3e}");
    }

    #[test]
    fn mismatched_gauge_is_rejected() {
        let g = grid(16, 10.0);
        let phi = plane_wave(&g, 0.1, 1);
        let other = plane_wave(&g, 0.2, 1);
        let gauge = solve_gauge(&other).unwrap();
        assert!(matches!(
            nonlinearity(&phi, &gauge, Complex64::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_datum_stays_zero() {
        let g = grid(16, 10.0);
        let phi = ComplexField::zeros(g, Space::Physical);
        let state = SimulationState::new(phi, 0.0, Complex64::new(1.0, 0.0), Interactions::Full).unwrap();
        let out = steps(&state, 1e-2, 20, true).unwrap();
        assert_eq!(out.phi.linf_norm(), 0.0);
        assert_eq!(out.step_index, 20);
    }

    #[test]
    fn plane_wave_phase_is_exact() {
        let g = grid(32, 40.0);
        let eps = 0.1;
        let state = SimulationState::new(
            plane_wave(&g, eps, 3),
            0.0,
            Complex64::new(1.0, 0.0),
            Interactions::Full,
        )
        .unwrap();
        let out = steps(&state, 1e-3, 200, true).unwrap();
        let k = 2.0 * std::f64::consts::PI / g.length() * 3.0;
        let omega = -k * k + eps * eps;
        let exact = ComplexField::from_fn(g, |x1, _| {
            Complex64::from_polar(eps, k * x1 + omega * out.t)
        });
        let rel = out.phi.sub(&exact).l2_norm() / exact.l2_norm();
        assert!(rel < 1e-12, "plane-wave error {rel:.3e}");
    }

    #[test]
    fn time_reversal_recovers_datum() {
        let g = grid(64, 40.0);
        let (phi, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Gaussian,
                amplitude: 0.05,
                width: 1.0,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let datum = phi.dealias();
        let state = SimulationState::new(datum.clone(), 0.0, Complex64::new(1.0, 0.0), Interactions::Full).unwrap();
        let fwd = steps(&state, 1e-3, 1000, true).unwrap();
        let back = steps(&fwd, -1e-3, 1000, true).unwrap();
        let rel = back.phi.sub(&datum).l2_norm() / datum.l2_norm();
        assert!(rel < 1e-7, "reversal error {rel:.3e}");
        assert!((back.t).abs() < 1e-12);
    }

    #[test]
    fn imaginary_coupling_damps_charge() {
        // d/dt (charge/2) = -Im(g) || phi ||_4^4, so Im g > 0 loses charge.
        let g = grid(32, 16.0);
        let (phi, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Gaussian,
                amplitude: 0.5,
                width: 2.0,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let state = SimulationState::new(phi, 0.0, Complex64::new(1.0, 0.5), Interactions::Full).unwrap();
        let before = state.charge();
        let out = steps(&state, 1e-2, 50, true).unwrap();
        let after = out.charge();
        assert!(
            after < before * (1.0 - 1e-4),
            "dissipative coupling should shed charge: {before} -> {after}"
        );
    }

    #[test]
    fn step_rejects_degenerate_dt() {
        let g = grid(16, 10.0);
        let phi = ComplexField::zeros(g, Space::Physical);
        let state = SimulationState::new(phi, 0.0, Complex64::default(), Interactions::Full).unwrap();
        assert!(step(&state, 0.0).is_err());
        assert!(step(&state, f64::NAN).is_err());
    }

    #[test]
    fn instability_reports_integration_failure() {
        let g = grid(16, 10.0);
        let (phi, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Gaussian,
                amplitude: 1e4,
                width: 2.0,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let state = SimulationState::new(phi, 0.0, Complex64::new(1.0, 0.0), Interactions::Full).unwrap();
        let result = steps(&state, 10.0, 50, true);
        match result {
            Err(Error::IntegrationFailure { step, .. }) => assert!(step >= 1),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }

    #[test]
    fn run_with_zero_horizon_emits_one_record() {
        let mut cfg = RunConfig::default();
        cfg.n = 16;
        cfg.t_end = 0.0;
        let arts = run(&cfg).unwrap();
        assert_eq!(arts.records.len(), 1);
        assert_eq!(arts.states.len(), 1);
        assert_eq!(arts.records[0].t, 0.0);
    }

    #[test]
    fn run_is_deterministic() {
        let mut cfg = RunConfig::default();
        cfg.n = 32;
        cfg.t_end = 0.05;
        cfg.dt = 1e-3;
        cfg.checkpoint_stride = 10;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        let csv_a = crate::diagnostics::records_to_csv(&a.records);
        let csv_b = crate::diagnostics::records_to_csv(&b.records);
        assert_eq!(csv_a, csv_b);
        for (sa, sb) in a.states.iter().zip(b.states.iter()) {
            assert_eq!(sa.phi.values(), sb.phi.values());
        }
    }

    #[test]
    fn free_run_keeps_profile_sup_constant() {
        let mut cfg = RunConfig::default();
        cfg.n = 64;
        cfg.t_end = 0.5;
        cfg.checkpoint_stride = 100;
        cfg.free = true;
        cfg.g = 0.0;
        let arts = run(&cfg).unwrap();
        let f0 = arts.records[0].fhat_sup;
        for r in &arts.records {
            assert!((r.fhat_sup - f0).abs() < 1e-12 * f0);
        }
    }

    #[test]
    fn plane_wave_sup_norm_does_not_decay() {
        let g = grid(32, 40.0);
        let state = SimulationState::new(
            plane_wave(&g, 0.1, 3),
            0.0,
            Complex64::new(1.0, 0.0),
            Interactions::Full,
        )
        .unwrap();
        let out = steps(&state, 1e-3, 100, true).unwrap();
        let initial = 0.1;
        assert!((out.phi.linf_norm() - initial).abs() < 1e-8 * initial);
    }

    #[test]
    fn plane_wave_curvature_timeslices_vanish() {
        // Every curvature term is a spatial constant for the plane wave,
        // and the mean-free torus constraint annihilates constants.
        let g = grid(32, 40.0);
        let state = SimulationState::new(
            plane_wave(&g, 0.1, 3),
            0.0,
            Complex64::new(1.0, 0.0),
            Interactions::Full,
        )
        .unwrap();
        let dt = 1e-2;
        let prev = steps(&state, dt, 1, true).unwrap();
        let next = steps(&prev, dt, 1, true).unwrap();
        let (r1, r2) =
            crate::gauge::curvature_timeslice_check(&prev.phi, &prev.gauge, &next.phi, &next.gauge, dt)
                .unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "plane-wave curvature residuals ({r1:.3e}, {r2:.3e})");
    }

    #[test]
    fn curvature_timeslices_converge_at_second_order() {
        // Exact convolution semantics: dealiasing off, datum truncated so
        // no product in the constraint chain wraps past Nyquist.
        let g = grid(64, 40.0);
        let (phi, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Ring,
                amplitude: 0.3,
                width: 2.0,
                phase_twist: 1,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let datum = phi.band_limit(10);
        let state = SimulationState::new(datum, 0.0, Complex64::new(1.0, 0.0), Interactions::Full).unwrap();

        let residual_at = |dt: f64| -> f64 {
            let prev = steps(&state, dt, 1, false).unwrap();
            let next = steps(&prev, dt, 1, false).unwrap();
            let (r1, r2) =
                crate::gauge::curvature_timeslice_check(&prev.phi, &prev.gauge, &next.phi, &next.gauge, dt)
                    .unwrap();
            r1.max(r2)
        };
        let coarse = residual_at(2e-2);
        let fine = residual_at(1e-2);
        let ratio = coarse / fine;
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected second-order shrink, got {coarse:.3e} -> {fine:.3e} (ratio {ratio:.2})"
        );
    }

    #[test]
    fn space_time_commutator_converges_at_second_order() {
        let g = grid(64, 40.0);
        let (phi, _) = build_datum(
            &DatumSpec {
                kind: DatumKind::Ring,
                amplitude: 0.3,
                width: 2.0,
                phase_twist: 1,
                ..Default::default()
            },
            &g,
        )
        .unwrap();
        let datum = phi.band_limit(10);
        let state = SimulationState::new(datum, 0.0, Complex64::new(1.0, 0.0), Interactions::Full).unwrap();
        let residual_at = |dt: f64| -> f64 {
            let prev = steps(&state, dt, 1, false).unwrap();
            let mid = steps(&prev, dt, 1, false).unwrap();
            let next = steps(&mid, dt, 1, false).unwrap();
            space_time_commutator_residual(&prev, &mid, &next).unwrap()
        };
        let coarse = residual_at(2e-2);
        let fine = residual_at(1e-2);
        let ratio = coarse / fine;
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected second-order shrink, got {coarse:.3e} -> {fine:.3e} (ratio {ratio:.2})"
        );
    }
}
