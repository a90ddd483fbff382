//! Integrates the replicator ODE, checks conservation of H, and
//! measures the orbit period against the linearized frequency.

use pgg::hamiltonian::HamiltonianContext;
use pgg::model::{interior_fixed_point, reference_params, OdeState};
use pgg::ode::{integrate, linearized_frequency, measure_period};

fn main() -> pgg::Result<()> {
    let ctx = HamiltonianContext::build(reference_params())?;
    let fp = interior_fixed_point(ctx.params())?;
    println!("fixed point: f* = {:.9}, z* = {:.9}", fp.f, fp.z);

    let omega = linearized_frequency(ctx.params())?;
    println!("linearized frequency omega = {omega:.9} (period {:.6})",
        2.0 * std::f64::consts::PI / omega);

    for amp in [1e-3, 0.05, 0.1, 0.2] {
        let mut orbit = integrate(OdeState::new(fp.f + amp, fp.z), 300.0, &ctx, 1e-10)?;
        let period = measure_period(&mut orbit)?;
        println!(
            "amplitude {amp:>5}: period = {period:.6}, steps = {:>5}, relative H drift = {:.2e}",
            orbit.times.len(),
            orbit.h_drift
        );
    }
    Ok(())
}
