//! Certifies positivity of the Hamiltonian Hessian H2'' across the
//! lemma parameter range, and shows the counterexample outside it.

use pgg::hamiltonian::{certify_hessian, HamiltonianContext};
use pgg::model::{reference_params, ModelParams};

fn main() -> pgg::Result<()> {
    let grid = 4000;

    println!("inside the range max{{N/3, 2}} < r < N:");
    for (r, n) in [(3.0, 5), (2.5, 7), (5.0, 12), (11.0, 30)] {
        let params = ModelParams::from_f64(r, n, 0.5, 0.1, 0.1)?;
        let rep = certify_hessian(&params, grid)?;
        println!(
            "  r = {r:>4}, N = {n:>2}: min H2'' = {:>12.6}  at z = {:.4}  certified = {}",
            rep.min_value, rep.argmin_z, rep.certified_positive
        );
    }

    println!("\noutside the range (r = 2, N = 20, relaxed validation):");
    let params = ModelParams::relaxed_from_f64(2.0, 20, 0.5, 0.1, 0.1)?;
    let rep = certify_hessian(&params, grid)?;
    println!(
        "  min H2'' = {:.6} at z = {:.4}: convexity genuinely fails",
        rep.min_value, rep.argmin_z
    );

    // exact certification via Sturm sequences on the numerator polynomial
    let ctx = HamiltonianContext::build(reference_params())?;
    println!(
        "\nexact (Sturm) certificate for the reference parameters: {}",
        ctx.certify_hessian_exact()?
    );
    Ok(())
}
