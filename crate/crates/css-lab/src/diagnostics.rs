//! Scalar observables per checkpoint and the derived reports: scattering
//! Cauchy differences, the decay interpolation audit, weighted-norm growth
//! fits, and charge/constraint series.
//!
//! Weighted norms are taken through the profile: `J_j phi = e^{i t Lap}
//! (x_j f)` with `f = e^{-i t Lap} phi`, so the sawtooth coordinate acts
//! on the concentrated profile rather than the dispersed field. The
//! `boundary_mass_fraction` column records the profile's outer-strip mass;
//! growth audits skip records where it exceeds 1e-6.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::covariant::cov_grad;
use crate::error::{Error, Result};
use crate::evolution::SimulationState;
use crate::field::ComplexField;
use crate::gauge::constraint_residual;
use crate::grid::Axis;

/// Per-checkpoint scalars, in CSV column order.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub charge: f64,
    pub linf: f64,
    pub decay_q: f64,
    pub fhat_sup: f64,
    pub j_phi_l2: f64,
    pub jd_phi_l2: f64,
    pub j2_phi_l2: f64,
    pub cov_j_phi_l2: f64,
    pub cov_jd_phi_l2: f64,
    pub cov_j2_phi_l2: f64,
    pub phi_l2: f64,
    pub d_phi_l2: f64,
    pub d2_phi_l2: f64,
    pub div_res: f64,
    pub curl_res: f64,
    pub boundary_mass_fraction: f64,
}

pub const CSV_HEADER: &str = "t,charge,linf,decay_q,fhat_sup,j_phi_l2,jd_phi_l2,j2_phi_l2,\
cov_j_phi_l2,cov_jd_phi_l2,cov_j2_phi_l2,phi_l2,d_phi_l2,d2_phi_l2,div_res,curl_res,\
boundary_mass_fraction";

/// `e^{i t Lap} ( x_axis e^{-i t Lap} field )`: the Galilean weight taken
/// through the profile.
fn galilean_profile(field: &ComplexField, t: f64, axis: Axis) -> ComplexField {
    field
        .free_propagator(-t)
        .mul_coord(axis)
        .free_propagator(t)
}

/// `bfJ_axis` of a field through the profile plus the gauge correction
/// `2 i t A_axis field`.
fn cov_galilean_profile(
    field: &ComplexField,
    t: f64,
    a: &crate::field::RealField,
    axis: Axis,
) -> ComplexField {
    let mut out = galilean_profile(field, t, axis);
    out.add_assign_scaled(&field.mul_real(a), Complex64::new(0.0, 2.0 * t));
    out
}

pub fn record_for_state(state: &SimulationState) -> Result<DiagnosticsRecord> {
    let phi = &state.phi;
    let t = state.t;
    let f_hat = state.f_hat();
    let f = f_hat.to_physical();

    let linf = phi.linf_norm();

    let mut j_sq = 0.0;
    let mut j2_sq = 0.0;
    let mut jd_sq = 0.0;
    for j in Axis::BOTH {
        let xf = f.mul_coord(j);
        j_sq += xf.l2_norm().powi(2);
        for k in Axis::BOTH {
            j2_sq += xf.mul_coord(k).l2_norm().powi(2);
            jd_sq += f.derivative(k).mul_coord(j).l2_norm().powi(2);
        }
    }

    let gauge = &state.gauge;
    let mut cov_j_sq = 0.0;
    let mut cov_jd_sq = 0.0;
    let mut cov_j2_sq = 0.0;
    for j in Axis::BOTH {
        let aj = match j {
            Axis::X1 => &gauge.a1,
            Axis::X2 => &gauge.a2,
        };
        let bfj = cov_galilean_profile(phi, t, aj, j);
        cov_j_sq += bfj.l2_norm().powi(2);
        for k in Axis::BOTH {
            let ak = match k {
                Axis::X1 => &gauge.a1,
                Axis::X2 => &gauge.a2,
            };
            let dk = cov_grad(phi, ak, k)?;
            cov_jd_sq += cov_galilean_profile(&dk, t, aj, j).l2_norm().powi(2);
            let bfk = cov_galilean_profile(phi, t, ak, k);
            cov_j2_sq += cov_galilean_profile(&bfk, t, aj, j).l2_norm().powi(2);
        }
    }

    let mut d_sq = 0.0;
    let mut d2_sq = 0.0;
    for j in Axis::BOTH {
        let dj = phi.derivative(j);
        d_sq += dj.l2_norm().powi(2);
        for k in Axis::BOTH {
            d2_sq += dj.derivative(k).l2_norm().powi(2);
        }
    }

    let res = constraint_residual(gauge, phi)?;

    Ok(DiagnosticsRecord {
        t,
        charge: phi.charge(),
        linf,
        decay_q: linf * (1.0 + t),
        fhat_sup: f_hat.linf_norm(),
        j_phi_l2: j_sq.sqrt(),
        jd_phi_l2: jd_sq.sqrt(),
        j2_phi_l2: j2_sq.sqrt(),
        cov_j_phi_l2: cov_j_sq.sqrt(),
        cov_jd_phi_l2: cov_jd_sq.sqrt(),
        cov_j2_phi_l2: cov_j2_sq.sqrt(),
        phi_l2: phi.l2_norm(),
        d_phi_l2: d_sq.sqrt(),
        d2_phi_l2: d2_sq.sqrt(),
        div_res: res.div_rel,
        curl_res: res.curl_rel,
        boundary_mass_fraction: f.boundary_mass_fraction(),
    })
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.charge,
            self.linf,
            self.decay_q,
            self.fhat_sup,
            self.j_phi_l2,
            self.jd_phi_l2,
            self.j2_phi_l2,
            self.cov_j_phi_l2,
            self.cov_jd_phi_l2,
            self.cov_j2_phi_l2,
            self.phi_l2,
            self.d_phi_l2,
            self.d2_phi_l2,
            self.div_res,
            self.curl_res,
            self.boundary_mass_fraction,
        ]
        .iter()
        .map(|x| fmt17(*x))
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn records_to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(records_to_csv(records).as_bytes())?;
    Ok(())
}

/// Sup-norm Cauchy differences of the Fourier profile between checkpoints.
#[derive(Debug, Clone)]
pub struct ScatteringTable {
    /// `(t_i, t_{i+1}, ||f_hat(t_{i+1}) - f_hat(t_i)||_inf)` per pair.
    pub consecutive: Vec<(f64, f64, f64)>,
    /// `(t_i, ||f_hat(t_end) - f_hat(t_i)||_inf)` against the last checkpoint.
    pub against_final: Vec<(f64, f64)>,
}

pub fn scattering_cauchy(states: &[SimulationState]) -> Result<ScatteringTable> {
    if states.len() < 2 {
        return Err(Error::parameter(
            "scattering table needs at least two checkpoints",
        ));
    }
    for w in states.windows(2) {
        if !w[0].phi.grid().same_geometry(w[1].phi.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    let hats: Vec<ComplexField> = states.iter().map(|s| s.f_hat()).collect();
    let sup_diff = |a: &ComplexField, b: &ComplexField| -> f64 {
        a.values()
            .iter()
            .zip(b.values().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    };
    let consecutive = (0..states.len() - 1)
        .map(|i| (states[i].t, states[i + 1].t, sup_diff(&hats[i], &hats[i + 1])))
        .collect();
    let last = hats.len() - 1;
    let against_final = (0..last)
        .map(|i| (states[i].t, sup_diff(&hats[i], &hats[last])))
        .collect();
    Ok(ScatteringTable {
        consecutive,
        against_final,
    })
}

/// Both sides of the dispersive-decay interpolation bound
/// `||phi(t)||_inf <= C ( t^{-1} ||f_hat||_inf + t^{-5/4} sum_{m<=2} ||J^(m) phi||_2 )`.
#[derive(Debug, Clone, Copy)]
pub struct DecayAudit {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs` with constant 1 on the right; 0 for the zero field.
    pub ratio: f64,
}

pub fn decay_interpolation_audit(state: &SimulationState) -> Result<DecayAudit> {
    let t = state.t;
    if t < 1.0 {
        return Err(Error::parameter(format!(
            "decay audit requires t >= 1, got {t}"
        )));
    }
    let record = record_for_state(state)?;
    let lhs = record.linf;
    let weighted = record.phi_l2 + record.j_phi_l2 + record.j2_phi_l2;
    let rhs = record.fhat_sup / t + weighted / t.powf(1.25);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(DecayAudit { t, lhs, rhs, ratio })
}

/// Least-squares line `y = intercept + slope * x`; returns
/// `(slope, intercept, rms_residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let mut res = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let e = y - (intercept + slope * x);
        res += e * e;
    }
    (slope, intercept, (res / n).sqrt())
}

/// Growth audit of the weighted norms over checkpointed records.
#[derive(Debug, Clone, Copy)]
pub struct GrowthFit {
    /// Exponent p of `||J phi||_2 ~ (1+t)^p` (log-log fit).
    pub exponent_p: f64,
    /// Slope of `||J phi||_2` against `log(2+t)`.
    pub slope_vs_log: f64,
    /// Slope of `||J^(2) phi||_2` against `log(2+t)^2`.
    pub slope2_vs_log_sq: f64,
    pub rms_residual: f64,
    pub records_used: usize,
}

/// Boundary-contamination threshold above which a record is skipped.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

pub fn weighted_growth_fit(records: &[DiagnosticsRecord]) -> Result<GrowthFit> {
    let usable: Vec<&DiagnosticsRecord> = records
        .iter()
        .filter(|r| r.t >= 1.0 && r.boundary_mass_fraction < BOUNDARY_MASS_LIMIT)
        .collect();
    if usable.len() < 5 {
        return Err(Error::parameter(format!(
            "growth fit needs at least 5 uncontaminated checkpoints with t >= 1, got {}",
            usable.len()
        )));
    }
    let span = (1.0 + usable.last().unwrap().t) / (1.0 + usable[0].t);
    if span < 4.0 {
        return Err(Error::parameter(format!(
            "growth fit needs the checkpoint times to span a factor >= 4 in (1+t), got {span:.2}"
        )));
    }
    let log1t: Vec<f64> = usable.iter().map(|r| (1.0 + r.t).ln()).collect();
    let logj: Vec<f64> = usable.iter().map(|r| r.j_phi_l2.max(1e-300).ln()).collect();
    let (exponent_p, _, rms_residual) = linear_fit(&log1t, &logj);

    let log2t: Vec<f64> = usable.iter().map(|r| (2.0 + r.t).ln()).collect();
    let j: Vec<f64> = usable.iter().map(|r| r.j_phi_l2).collect();
    let (slope_vs_log, _, _) = linear_fit(&log2t, &j);

    let log2t_sq: Vec<f64> = log2t.iter().map(|x| x * x).collect();
    let j2: Vec<f64> = usable.iter().map(|r| r.j2_phi_l2).collect();
    let (slope2_vs_log_sq, _, _) = linear_fit(&log2t_sq, &j2);

    Ok(GrowthFit {
        exponent_p,
        slope_vs_log,
        slope2_vs_log_sq,
        rms_residual,
        records_used: usable.len(),
    })
}

/// Max drifts and residuals over a record series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesReport {
    pub max_rel_charge_drift: f64,
    pub max_div_res: f64,
    pub max_curl_res: f64,
}

pub fn charge_and_constraint_series(records: &[DiagnosticsRecord]) -> SeriesReport {
    let charge0 = records.first().map(|r| r.charge).unwrap_or(0.0);
    let mut report = SeriesReport {
        max_rel_charge_drift: 0.0,
        max_div_res: 0.0,
        max_curl_res: 0.0,
    };
    for r in records {
        let drift = if charge0 == 0.0 {
            r.charge.abs()
        } else {
            (r.charge - charge0).abs() / charge0
        };
        report.max_rel_charge_drift = report.max_rel_charge_drift.max(drift);
        report.max_div_res = report.max_div_res.max(r.div_res);
        report.max_curl_res = report.max_curl_res.max(r.curl_res);
    }
    report
}

/// Minimal JSON writer for the flat summary objects this crate emits.
pub struct JsonObject {
    entries: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn number(&mut self, key: &str, value: f64) -> &mut Self {
        let rendered = if value.is_finite() {
            fmt17(value)
        } else {
            "null".to_string()
        };
        self.entries.push((key.to_string(), rendered));
        self
    }

    pub fn integer(&mut self, key: &str, value: i64) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn boolean(&mut self, key: &str, value: bool) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn string(&mut self, key: &str, value: &str) -> &mut Self {
        let escaped = value
            .replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', "\\n");
        self.entries.push((key.to_string(), format!("\"{escaped}\"")));
        self
    }

    pub fn render(&self) -> String {
        let body = self
            .entries
            .iter()
            .map(|(k, v)| format!("  \"{k}\": {v}"))
            .collect::<Vec<_>>()
            .join(",\n");
        format!("{{\n{body}\n}}\n")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.render().as_bytes())?;
        Ok(())
    }
}

impl Default for JsonObject {
    fn default() -> Self {
        Self::new()
    }
}
