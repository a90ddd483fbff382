//! Estimates the asymptotic phase shift lambda: the inhomogeneous PDE
//! solution locks onto a spatially constant periodic orbit up to a time
//! translation, recovered here by circular cross-correlation.

use pgg::harness::{experiment_phase_shift, parse_config_str};

fn main() -> pgg::Result<()> {
    let config = parse_config_str(
        "kind = phase-shift\n\
         grid_n = 128\n\
         t_end = 120\n\
         snapshot_every = 0.1\n\
         amp_f = 0.05\n\
         amp_z = 0.02\n\
         transient_fraction = 0.5\n",
    )?;
    let report = experiment_phase_shift(&config)?;
    for (k, v) in &report.summary {
        println!("{k} = {v:.9}");
    }
    println!("pass = {}", report.passed);
    Ok(())
}
