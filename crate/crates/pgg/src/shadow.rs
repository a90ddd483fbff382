//! Shadow system: the d_z -> infinity limit of the reaction-diffusion
//! model. The loner fraction collapses to a spatially constant scalar
//! Z(t) driven by the spatial mean of the cooperation incentive, while
//! F keeps its own diffusion:
//!
//! ```text
//! F_t - d_f lap F = -F(1-F) G(Z)
//! Z'  = (sigma - (r-1) mean F) Z(1-Z)(1-Z^{N-1})
//! ```
//!
//! The stepper mirrors the full PDE one: Strang splitting with Heun
//! half-steps on the coupled (F, Z) reaction and Crank-Nicolson
//! diffusion on F only. The Lyapunov functional keeps both parts,
//! `int H1(F) dx + L H2(Z)`, but only the F gradient dissipates; the
//! reaction contributions cancel exactly in the semi-discrete rate,
//! same as in the full system.

use crate::error::{PggError, Result};
use crate::hamiltonian::{eval_h1, eval_h1_d, HamiltonianContext};
use crate::model::{eval_g, OdeState};
use crate::ode::OrbitRecord;
use crate::pde::{
    golden_min, reaction_lipschitz_bound, CrankNicolson, FieldPair, Grid1D, InitialData,
    PdeDiagnostics, FIELD_SLACK, H_CLAMP, LYAPUNOV_SLACK,
};

/// F profile plus the scalar loner fraction Z.
#[derive(Debug, Clone)]
pub struct ShadowState {
    pub f: Vec<f64>,
    pub z: f64,
    pub time: f64,
}

impl ShadowState {
    pub fn mean_f(&self) -> f64 {
        self.f.iter().sum::<f64>() / self.f.len() as f64
    }

    fn check_bounds(&self) -> Result<()> {
        if self.z < -FIELD_SLACK || self.z > 1.0 + FIELD_SLACK {
            return Err(PggError::BoundsViolation(self.time));
        }
        for v in &self.f {
            if *v < -FIELD_SLACK || *v > 1.0 + FIELD_SLACK {
                return Err(PggError::BoundsViolation(self.time));
            }
        }
        Ok(())
    }
}

/// Builds a shadow state from PDE-style initial data: the F profile is
/// taken as is and Z is the spatial mean of the z profile.
pub fn init_shadow(grid: &Grid1D, spec: &InitialData) -> Result<ShadowState> {
    let fields = crate::pde::init_fields(grid, spec)?;
    let (_, z_mean) = fields.means(grid);
    Ok(ShadowState {
        f: fields.f,
        z: z_mean,
        time: 0.0,
    })
}

pub struct ShadowStepper<'a> {
    pub grid: Grid1D,
    ctx: &'a HamiltonianContext,
    dt: f64,
    cn_f: CrankNicolson,
    scratch: Vec<f64>,
}

impl<'a> ShadowStepper<'a> {
    pub fn new(grid: Grid1D, ctx: &'a HamiltonianContext, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(PggError::InvalidParams(format!("dt = {dt}, need > 0")));
        }
        let dt_react = 0.5 / reaction_lipschitz_bound(ctx.params());
        if dt > dt_react {
            return Err(PggError::InvalidParams(format!(
                "dt = {dt} exceeds the reaction stability bound {dt_react}"
            )));
        }
        let dx2 = grid.dx * grid.dx;
        let cn_f = CrankNicolson::new(grid.n_cells, 0.5 * dt * ctx.params().d_f() / dx2)?;
        Ok(ShadowStepper {
            grid,
            ctx,
            dt,
            cn_f,
            scratch: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Right-hand side of the coupled reaction subsystem.
    fn reaction_rhs(&self, f: &[f64], z: f64, df_out: &mut [f64]) -> f64 {
        let params = self.ctx.params();
        let g = eval_g(z, params);
        let mut mean = 0.0;
        for (out, fi) in df_out.iter_mut().zip(f) {
            *out = -fi * (1.0 - fi) * g;
            mean += fi;
        }
        mean /= f.len() as f64;
        let psi = z * (1.0 - z) * (1.0 - z.powi(params.n() as i32 - 1));
        (params.sigma() - (params.r() - 1.0) * mean) * psi
    }

    fn reaction_half(&self, state: &mut ShadowState) {
        let h = 0.5 * self.dt;
        let n = state.f.len();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let kz1 = self.reaction_rhs(&state.f, state.z, &mut k1);
        for i in 0..n {
            f1[i] = state.f[i] + h * k1[i];
        }
        let z1 = state.z + h * kz1;
        let kz2 = self.reaction_rhs(&f1, z1, &mut k2);
        for i in 0..n {
            state.f[i] += 0.5 * h * (k1[i] + k2[i]);
        }
        state.z += 0.5 * h * (kz1 + kz2);
    }

    pub fn step(&mut self, state: &mut ShadowState) -> Result<()> {
        self.reaction_half(state);
        self.cn_f.step(&mut state.f, &mut self.scratch);
        self.reaction_half(state);
        state.time += self.dt;
        state.check_bounds()
    }
}

fn clamp_h(v: f64) -> f64 {
    v.clamp(H_CLAMP, 1.0 - H_CLAMP)
}

/// Lyapunov functional `sum H1(F_i) dx + L H2(Z)`.
pub fn shadow_lyapunov(state: &ShadowState, grid: &Grid1D, ctx: &HamiltonianContext) -> f64 {
    let params = ctx.params();
    let h1: f64 = state
        .f
        .iter()
        .map(|f| eval_h1(clamp_h(*f), params).unwrap_or(f64::INFINITY))
        .sum();
    h1 * grid.dx + grid.length * ctx.eval_h2(clamp_h(state.z)).unwrap_or(f64::INFINITY)
}

/// Dissipation rate: the F summation-by-parts term only (Z carries no
/// gradient).
pub fn shadow_dissipation(state: &ShadowState, grid: &Grid1D, ctx: &HamiltonianContext) -> f64 {
    let params = ctx.params();
    let mut acc = 0.0;
    for w in state.f.windows(2) {
        let dh1 = eval_h1_d(clamp_h(w[1]), params).unwrap_or(0.0)
            - eval_h1_d(clamp_h(w[0]), params).unwrap_or(0.0);
        acc += dh1 * (w[1] - w[0]);
    }
    params.d_f() * acc / grid.dx
}

fn f_grad_sup(state: &ShadowState, dx: f64) -> f64 {
    state
        .f
        .windows(2)
        .map(|w| ((w[1] - w[0]) / dx).abs())
        .fold(0.0, f64::max)
}

fn f_hess_sup(state: &ShadowState, dx: f64) -> f64 {
    let u = &state.f;
    let n = u.len();
    let dx2 = dx * dx;
    (0..n)
        .map(|i| {
            let left = if i == 0 { u[0] } else { u[i - 1] };
            let right = if i == n - 1 { u[n - 1] } else { u[i + 1] };
            ((left - 2.0 * u[i] + right) / dx2).abs()
        })
        .fold(0.0, f64::max)
}

fn dist_to_state(state: &ShadowState, grid: &Grid1D, target: OdeState) -> f64 {
    let gap_f = state
        .f
        .iter()
        .map(|v| (v - target.f).abs())
        .fold(0.0, f64::max);
    gap_f + (state.z - target.z).abs() + f_grad_sup(state, grid.dx) + f_hess_sup(state, grid.dx)
}

/// Minimum distance from the shadow state to an ODE orbit, where the
/// distance is the F value/gradient/curvature sup gaps plus |Z - z|.
pub fn shadow_dist_to_orbit(state: &ShadowState, grid: &Grid1D, orbit: &OrbitRecord) -> f64 {
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for (i, s) in orbit.states.iter().enumerate() {
        let d = dist_to_state(state, grid, *s);
        if d < best {
            best = d;
            best_idx = i;
        }
    }
    let lo = orbit.times[best_idx.saturating_sub(1)];
    let hi = orbit.times[(best_idx + 1).min(orbit.times.len() - 1)];
    let dist_at = |t: f64| dist_to_state(state, grid, orbit.state_at(t));
    best.min(golden_min(&dist_at, lo, hi, 1e-10))
}

pub fn shadow_diagnostics(
    state: &ShadowState,
    grid: &Grid1D,
    ctx: &HamiltonianContext,
    orbit: Option<&OrbitRecord>,
) -> PdeDiagnostics {
    PdeDiagnostics {
        time: state.time,
        lyapunov: shadow_lyapunov(state, grid, ctx),
        dissipation: shadow_dissipation(state, grid, ctx),
        grad_sup_f: f_grad_sup(state, grid.dx),
        grad_sup_z: 0.0,
        hess_sup_f: f_hess_sup(state, grid.dx),
        hess_sup_z: 0.0,
        dist_to_orbit: orbit.map(|o| shadow_dist_to_orbit(state, grid, o)),
        mean_f: state.mean_f(),
        mean_z: state.z,
    }
}

pub struct ShadowRunOutput {
    pub diagnostics: Vec<PdeDiagnostics>,
    pub snapshots: Vec<ShadowState>,
    pub final_state: ShadowState,
}

/// Advances the shadow system to `t_end`, with the same snapshot and
/// Lyapunov-monotonicity policy as the full PDE run.
pub fn shadow_run(
    grid: &Grid1D,
    initial: ShadowState,
    t_end: f64,
    dt: f64,
    ctx: &HamiltonianContext,
    snapshot_every: f64,
) -> Result<ShadowRunOutput> {
    if !(t_end > 0.0) || !(snapshot_every > 0.0) {
        return Err(PggError::InvalidParams(
            "t_end and snapshot_every must be positive".into(),
        ));
    }
    let mut stepper = ShadowStepper::new(grid.clone(), ctx, dt)?;
    let mut state = initial;
    state.check_bounds()?;
    let steps = (t_end / dt).round() as usize;
    let snap_stride = (snapshot_every / dt).round().max(1.0) as usize;

    let mut diags = vec![shadow_diagnostics(&state, grid, ctx, None)];
    let mut snapshots = vec![state.clone()];
    let mut last_h = diags[0].lyapunov;

    for k in 1..=steps {
        stepper.step(&mut state)?;
        if k % snap_stride == 0 || k == steps {
            let d = shadow_diagnostics(&state, grid, ctx, None);
            if d.lyapunov > last_h + LYAPUNOV_SLACK * (1.0 + last_h.abs()) {
                return Err(PggError::LyapunovViolation(state.time));
            }
            last_h = d.lyapunov;
            diags.push(d);
            snapshots.push(state.clone());
        }
    }

    Ok(ShadowRunOutput {
        diagnostics: diags,
        snapshots,
        final_state: state,
    })
}

/// Converts a shadow state into a [`FieldPair`] with constant z = Z,
/// for reuse of the PDE-side comparison helpers.
pub fn as_field_pair(state: &ShadowState) -> FieldPair {
    FieldPair {
        f: state.f.clone(),
        z: vec![state.z; state.f.len()],
        time: state.time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{interior_fixed_point, reference_params, ModelParams, OdeState};
    use crate::ode::{integrate, ode_rhs};

    fn ctx() -> HamiltonianContext {
        HamiltonianContext::build(reference_params()).unwrap()
    }

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(1.0, n).unwrap()
    }

    #[test]
    fn constant_f_reduces_to_ode() {
        // spatially constant F: the shadow step equals the two-half-step
        // Heun advance of the planar ODE
        let c = ctx();
        let g = grid(32);
        let mut state = ShadowState {
            f: vec![0.6; 32],
            z: 0.47,
            time: 0.0,
        };
        let dt = 1e-3;
        let mut stepper = ShadowStepper::new(g, &c, dt).unwrap();
        stepper.step(&mut state).unwrap();
        let params = c.params();
        let h = 0.5 * dt;
        let mut y = OdeState::new(0.6, 0.47);
        for _ in 0..2 {
            let k1 = ode_rhs(y, params);
            let y1 = OdeState::new(y.f + h * k1.0, y.z + h * k1.1);
            let k2 = ode_rhs(y1, params);
            y = OdeState::new(y.f + 0.5 * h * (k1.0 + k2.0), y.z + 0.5 * h * (k1.1 + k2.1));
        }
        assert!((state.z - y.z).abs() < 1e-14);
        for fi in &state.f {
            assert!((fi - y.f).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_at_f_star_freezes_z() {
        // mean F = sigma/(r-1) makes the Z drive vanish even though the
        // profile is not constant
        let c = ctx();
        let g = grid(64);
        let f_star = c.params().sigma() / (c.params().r() - 1.0);
        let mut f = vec![f_star; 64];
        for (i, v) in f.iter_mut().enumerate() {
            let dev = 1e-3 * (std::f64::consts::PI * (i as f64 + 0.5) / 64.0).cos();
            *v = f_star + dev;
        }
        let state = ShadowState {
            f,
            z: 0.47,
            time: 0.0,
        };
        let stepper = ShadowStepper::new(g, &c, 1e-3).unwrap();
        let mut df = vec![0.0; 64];
        let dz = stepper.reaction_rhs(&state.f, state.z, &mut df);
        assert!(dz.abs() < 1e-16, "dz = {dz}");
    }

    #[test]
    fn boundary_z_is_frozen() {
        let c = ctx();
        let g = grid(32);
        for z0 in [0.0, 1.0] {
            let mut state = ShadowState {
                f: vec![0.6; 32],
                z: z0,
                time: 0.0,
            };
            let mut stepper = ShadowStepper::new(g.clone(), &c, 1e-3).unwrap();
            for _ in 0..100 {
                stepper.step(&mut state).unwrap();
            }
            assert!((state.z - z0).abs() < 1e-15);
        }
    }

    #[test]
    fn run_is_monotone_and_homogenizes_f() {
        let c = ctx();
        let g = grid(64);
        let fp = interior_fixed_point(c.params()).unwrap();
        let initial = init_shadow(
            &g,
            &InitialData::Perturbed {
                f0: fp.f + 0.1,
                z0: fp.z,
                amp_f: 0.05,
                amp_z: 0.0,
                mode: 1,
            },
        )
        .unwrap();
        let out = shadow_run(&g, initial, 30.0, 1e-3, &c, 0.5).unwrap();
        let first = &out.diagnostics[0];
        let last = out.diagnostics.last().unwrap();
        assert!(last.lyapunov <= first.lyapunov);
        assert!(last.grad_sup_f < 1e-3 * first.grad_sup_f);
    }

    #[test]
    fn homogenized_state_tracks_ode_orbit() {
        let c = ctx();
        let g = grid(64);
        let fp = interior_fixed_point(c.params()).unwrap();
        let initial = init_shadow(
            &g,
            &InitialData::Perturbed {
                f0: fp.f + 0.05,
                z0: fp.z,
                amp_f: 0.02,
                amp_z: 0.0,
                mode: 1,
            },
        )
        .unwrap();
        let f_bar0 = initial.mean_f();
        let z0 = initial.z;
        let out = shadow_run(&g, initial, 60.0, 1e-3, &c, 1.0).unwrap();
        let orbit = integrate(OdeState::new(f_bar0, z0), 120.0, &c, 1e-10).unwrap();
        let d = shadow_dist_to_orbit(&out.final_state, &g, &orbit);
        assert!(d < 1e-3, "dist = {d}");
    }

    #[test]
    fn large_sigma_relabeled_params_reject_nothing_extra() {
        // sanity: stepper construction respects the reaction bound for
        // other admissible parameter choices too
        let params = ModelParams::from_f64(4.5, 7, 2.0, 0.05, 0.2).unwrap();
        let c = HamiltonianContext::build(params).unwrap();
        let g = grid(32);
        assert!(ShadowStepper::new(g.clone(), &c, 1e-3).is_ok());
        assert!(ShadowStepper::new(g, &c, 10.0).is_err());
    }
}
