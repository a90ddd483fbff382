//! Sweep over the loner diffusivity d_z: the PDE solution converges to
//! the shadow system as d_z grows, uniformly on a fixed time window.

use pgg::harness::{experiment_converge_dz, parse_config_str};

fn main() -> pgg::Result<()> {
    let config = parse_config_str(
        "kind = converge-dz\n\
         grid_n = 128\n\
         t_end = 20\n\
         snapshot_every = 0.5\n\
         amp_f = 0.05\n\
         amp_z = 0\n\
         d_z_list = 1, 10, 100, 1000\n",
    )?;
    let report = experiment_converge_dz(&config)?;
    println!("sup_t discrepancy ||f - F||_C2 + ||z - Z||_C2 per d_z:");
    for (k, v) in &report.summary {
        println!("  {k} = {v:.6e}");
    }
    println!("pass = {}", report.passed);
    Ok(())
}
