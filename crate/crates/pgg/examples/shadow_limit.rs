//! The shadow system (fast z-diffusion limit): a scalar loner fraction
//! Z driven by the spatial mean of F, with F keeping its diffusion.

use pgg::hamiltonian::HamiltonianContext;
use pgg::model::{interior_fixed_point, reference_params, OdeState};
use pgg::ode::integrate;
use pgg::pde::{Grid1D, InitialData};
use pgg::shadow::{init_shadow, shadow_dist_to_orbit, shadow_run};

fn main() -> pgg::Result<()> {
    let ctx = HamiltonianContext::build(reference_params())?;
    let grid = Grid1D::new(1.0, 128)?;
    let fp = interior_fixed_point(ctx.params())?;
    let initial = init_shadow(
        &grid,
        &InitialData::Perturbed {
            f0: fp.f + 0.1,
            z0: fp.z,
            amp_f: 0.05,
            amp_z: 0.0,
            mode: 1,
        },
    )?;
    let f_bar0 = initial.mean_f();
    let z0 = initial.z;

    let out = shadow_run(&grid, initial, 60.0, 1e-3, &ctx, 10.0)?;
    println!("{:>6} {:>10} {:>10} {:>14} {:>12}", "t", "Z", "mean F", "lyapunov", "grad_sup_F");
    for d in &out.diagnostics {
        println!(
            "{:>6.1} {:>10.6} {:>10.6} {:>14.9} {:>12.3e}",
            d.time, d.mean_z, d.mean_f, d.lyapunov, d.grad_sup_f
        );
    }

    let orbit = integrate(OdeState::new(f_bar0, z0), 120.0, &ctx, 1e-10)?;
    let d = shadow_dist_to_orbit(&out.final_state, &grid, &orbit);
    println!("\ndistance to the ODE orbit from the initial means: {d:.3e}");
    Ok(())
}
