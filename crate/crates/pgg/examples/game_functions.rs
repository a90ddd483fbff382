//! Exact game-function machinery: the incentive polynomial G, its
//! quotient coefficients b_k, payoffs, and the interior fixed point.

use pgg::model::{
    eval_g, g_quotient_coeffs, interior_fixed_point, mixed_payoffs, reference_params,
};

fn main() -> pgg::Result<()> {
    let params = reference_params();
    println!(
        "params: r = {}, N = {}, sigma = {}",
        params.r(),
        params.n(),
        params.sigma()
    );

    println!("\nG(z) on [0, 1]:");
    for i in 0..=10 {
        let z = i as f64 / 10.0;
        println!("  G({z:.1}) = {:+.6}", eval_g(z, &params));
    }

    let b = g_quotient_coeffs(&params)?.coeffs_f64();
    println!("\nquotient coefficients b_k of -G(z)/(1-z):");
    for (k, bk) in b.iter().enumerate() {
        println!("  b_{k} = {bk:+.6}");
    }
    let sum: f64 = b.iter().sum();
    let expected = (params.r() - 2.0) * (params.n() as f64 - 1.0) / 2.0;
    println!("  sum = {sum:.6} (closed form (r-2)(N-1)/2 = {expected:.6})");

    let fp = interior_fixed_point(&params)?;
    println!("\ninterior fixed point: f* = {:.12}, z* = {:.12}", fp.f, fp.z);
    println!("  check: G(z*) = {:+.3e}", eval_g(fp.z, &params));

    let (pl, pd, pc) = mixed_payoffs(0.3, 0.4, &params)?;
    println!("\npayoffs at cooperator fraction x = 0.3, loner fraction z = 0.4:");
    println!("  cooperator {pc:.6}, defector {pd:.6}, loner {pl:.6}");
    Ok(())
}
