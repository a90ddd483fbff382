//! Replicator ODE in the reduced (f, z) coordinates:
//!
//! ```text
//! f' = -f(1-f) G(z)
//! z' = (sigma - f(r-1)) z(1-z)(1-z^{N-1})
//! ```
//!
//! Integrated with an adaptive Dormand-Prince 5(4) pair. The system
//! conserves H = H1 + H2 exactly; the recorded drift measures
//! integrator error only. A symplectic scheme does not apply directly
//! here (the Hamiltonian form holds only after time reparameterization
//! by phi), so drift is monitored instead.

use crate::error::{PggError, Result};
use crate::hamiltonian::HamiltonianContext;
use crate::model::{eval_g, eval_g_deriv, interior_fixed_point, ModelParams, OdeState};

/// Time-stamped samples of one trajectory with Hamiltonian values.
#[derive(Debug, Clone)]
pub struct OrbitRecord {
    pub times: Vec<f64>,
    pub states: Vec<OdeState>,
    pub h_values: Vec<f64>,
    pub period: Option<f64>,
    pub params: ModelParams,
    /// max_t |H(t) - H(0)| / |H(0)| over the accepted steps.
    pub h_drift: f64,
}

/// Right-hand side of the replicator system. Vanishes on the boundary
/// faces of the unit square and at the interior fixed point.
pub fn ode_rhs(state: OdeState, params: &ModelParams) -> (f64, f64) {
    let OdeState { f, z } = state;
    let df = -f * (1.0 - f) * eval_g(z, params);
    let dz = (params.sigma() - f * (params.r() - 1.0))
        * z
        * (1.0 - z)
        * (1.0 - z.powi(params.n() as i32 - 1));
    (df, dz)
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `initial` to `t_end` with per-step error tolerance
/// `tol` (absolute and relative), recording every accepted step and the
/// Hamiltonian along it.
pub fn integrate(
    initial: OdeState,
    t_end: f64,
    ctx: &HamiltonianContext,
    tol: f64,
) -> Result<OrbitRecord> {
    let params = ctx.params();
    if !(tol > 0.0) {
        return Err(PggError::InvalidParams(format!("tol = {tol}, need > 0")));
    }
    let on_boundary = initial.f <= 0.0
        || initial.f >= 1.0
        || initial.z <= 0.0
        || initial.z >= 1.0;
    check_square(initial, 0.0)?;

    let eval_h = |s: OdeState| -> f64 {
        if on_boundary {
            f64::NAN
        } else {
            ctx.eval_h(s).unwrap_or(f64::NAN)
        }
    };

    let mut t = 0.0;
    let mut y = initial;
    let h0 = eval_h(y);
    let mut times = vec![0.0];
    let mut states = vec![y];
    let mut h_values = vec![h0];
    let mut drift: f64 = 0.0;

    let mut dt = (t_end / 100.0).min(0.1).max(1e-6);
    let min_dt = 1e-13 * t_end.max(1.0);
    while t < t_end {
        if dt < min_dt {
            return Err(PggError::StepFailure(t));
        }
        if t + dt > t_end {
            dt = t_end - t;
        }
        let mut k = [(0.0, 0.0); 7];
        k[0] = ode_rhs(y, params);
        for i in 0..6 {
            let mut f = y.f;
            let mut z = y.z;
            for (j, kk) in k.iter().enumerate().take(i + 1) {
                f += dt * A[i][j] * kk.0;
                z += dt * A[i][j] * kk.1;
            }
            k[i + 1] = ode_rhs(OdeState::new(f, z), params);
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, kk) in k.iter().enumerate() {
            y5.f += dt * B5[j] * kk.0;
            y5.z += dt * B5[j] * kk.1;
            y4.f += dt * B4[j] * kk.0;
            y4.z += dt * B4[j] * kk.1;
        }
        let scale_f = tol + tol * y.f.abs().max(y5.f.abs());
        let scale_z = tol + tol * y.z.abs().max(y5.z.abs());
        let err = ((y5.f - y4.f) / scale_f)
            .hypot((y5.z - y4.z) / scale_z)
            / 2f64.sqrt();
        if err <= 1.0 {
            t += dt;
            y = y5;
            check_square(y, t)?;
            let h = eval_h(y);
            if h0.is_finite() && h0.abs() > 0.0 {
                drift = drift.max((h - h0).abs() / h0.abs());
            }
            times.push(t);
            states.push(y);
            h_values.push(h);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        dt *= factor;
    }

    Ok(OrbitRecord {
        times,
        states,
        h_values,
        period: None,
        params: params.clone(),
        h_drift: drift,
    })
}

fn check_square(s: OdeState, t: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if s.f < -SLACK || s.f > 1.0 + SLACK || s.z < -SLACK || s.z > 1.0 + SLACK {
        Err(PggError::BoundaryEscape(t))
    } else {
        Ok(())
    }
}

impl OrbitRecord {
    /// State at an arbitrary time inside the recorded span, cubic
    /// Hermite interpolation between the bracketing accepted steps.
    pub fn state_at(&self, t: f64) -> OdeState {
        let times = &self.times;
        let n = times.len();
        if t <= times[0] {
            return self.states[0];
        }
        if t >= times[n - 1] {
            return self.states[n - 1];
        }
        let i = match times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.states[i],
            Err(i) => i - 1,
        };
        let h = times[i + 1] - times[i];
        let s = (t - times[i]) / h;
        let (y0, y1) = (self.states[i], self.states[i + 1]);
        let d0 = ode_rhs(y0, &self.params);
        let d1 = ode_rhs(y1, &self.params);
        let s2 = s * s;
        let s3 = s2 * s;
        let (c0, c1, c2, c3) = (
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        );
        OdeState::new(
            c0 * y0.f + c1 * h * d0.0 + c2 * y1.f + c3 * h * d1.0,
            c0 * y0.z + c1 * h * d0.1 + c2 * y1.z + c3 * h * d1.1,
        )
    }

    /// Resamples the orbit uniformly with `count` points over its span.
    pub fn resample(&self, count: usize) -> Vec<(f64, OdeState)> {
        let t0 = self.times[0];
        let t1 = *self.times.last().unwrap();
        (0..count)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / count as f64;
                (t, self.state_at(t))
            })
            .collect()
    }
}

/// Small-oscillation angular frequency at the interior fixed point.
/// The Jacobian there is antidiagonal with purely imaginary eigenvalues
/// +-i omega, where
/// `omega^2 = f*(1-f*) |G'(z*)| (r-1) z*(1-z*)(1-z*^{N-1})`.
pub fn linearized_frequency(params: &ModelParams) -> Result<f64> {
    let fp = interior_fixed_point(params)?;
    let g_prime = eval_g_deriv(fp.z, params);
    let psi = fp.z * (1.0 - fp.z) * (1.0 - fp.z.powi(params.n() as i32 - 1));
    let omega_sq = fp.f * (1.0 - fp.f) * (-g_prime) * (params.r() - 1.0) * psi;
    if omega_sq <= 0.0 {
        return Err(PggError::InternalError(format!(
            "nonpositive omega^2 = {omega_sq} at the fixed point"
        )));
    }
    Ok(omega_sq.sqrt())
}

/// Mean time between successive upward crossings of the section
/// f = f* (crossing direction df/dt > 0), each crossing located by
/// cubic Hermite interpolation. Needs at least 3 crossings.
pub fn measure_period(record: &mut OrbitRecord) -> Result<f64> {
    let fp = interior_fixed_point(&record.params)?;
    let crossings = section_crossings(record, fp.f);
    if crossings.len() < 3 {
        return Err(PggError::InsufficientData(format!(
            "only {} section crossings, need at least 3",
            crossings.len()
        )));
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let period = gaps.iter().sum::<f64>() / gaps.len() as f64;
    record.period = Some(period);
    Ok(period)
}

fn section_crossings(record: &OrbitRecord, f_star: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..record.states.len() - 1 {
        let a = record.states[i].f - f_star;
        let b = record.states[i + 1].f - f_star;
        if a < 0.0 && b >= 0.0 {
            // upward crossing inside [t_i, t_{i+1}]; bisect the Hermite
            // interpolant of f(t) - f*
            let mut lo = record.times[i];
            let mut hi = record.times[i + 1];
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if record.state_at(mid).f - f_star < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}
