//! The Hamiltonian H = H1(f) + H2(z), its derivatives, the exact
//! Q = (1-z)^2 P factorization behind the bounded remainder R'(z), and
//! numerical/exact certification that the Hessian of H is positive.
//!
//! Closed forms used here:
//!
//! ```text
//! H1(f)   = -sigma log f - (r-1-sigma) log(1-f)
//! H2(z)   = -(1-r/N) log z - (r/2-1) log(1-z) + R(z) + c_R
//! H2'(z)  = -G(z) / (z(1-z)(1-z^{N-1}))  =  B(z) / (z(1-z^{N-1}))
//! H2''(z) = S(z) / (z^2 (1-z^{N-1})^2)
//! R'(z)   = -P(z) / (1 + z + ... + z^{N-2})
//! ```
//!
//! where `B(z) = sum b_k z^k` is the expansion of `-G/(1-z)`,
//! `S(z) = z B'(z)(1-z^{N-1}) - B(z)(1 - N z^{N-1})`, and P comes from
//! dividing Q exactly by `(1-z)^2`. Derivative-level quantities never
//! touch the tabulated R; only H2 values do.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{PggError, Result};
use crate::model::{g_quotient_coeffs, ModelParams, OdeState};
use crate::rational::{horner, ratio, sturm_roots_in, RationalPoly};

const R_TABLE_NODES: usize = 2048;
const C_R_GRID: usize = 10_000;

/// Everything needed to evaluate H2 and its derivatives for one
/// parameter set. Immutable after construction.
#[derive(Debug, Clone)]
pub struct HamiltonianContext {
    params: ModelParams,
    b_poly: RationalPoly,
    q_poly: RationalPoly,
    p_poly: RationalPoly,
    s_poly: RationalPoly,
    b_coeffs: Vec<f64>,
    p_coeffs: Vec<f64>,
    s_coeffs: Vec<f64>,
    /// R(z) sampled on a uniform table over [0,1]; Hermite-interpolated
    /// with the closed-form R' at the nodes.
    r_table: Vec<f64>,
    r_deriv_table: Vec<f64>,
    c_r: f64,
}

/// Outcome of a grid scan of H2'' over [0,1].
#[derive(Debug, Clone)]
pub struct HessianReport {
    pub params: ModelParams,
    pub grid_size: usize,
    pub min_value: f64,
    pub argmin_z: f64,
    pub certified_positive: bool,
    /// Whether the parameters satisfy max{N/3, 2} < r < N.
    pub lemma_range: bool,
}

/// Exact Q(z) of the R' computation:
/// `(r/2)(1-4/N) - (r/N)(z + .. + z^{N-3}) + r(1-2/N) z^{N-2} - (r/2)(1-2/N) z^{N-1}`.
pub fn q_poly(params: &ModelParams) -> RationalPoly {
    let n = params.n();
    let r = params.r_exact();
    let n_rat = BigRational::from(BigInt::from(n));
    let mut coeffs = vec![BigRational::zero(); n];
    coeffs[0] = r / ratio(2, 1) * (BigRational::one() - ratio(4, 1) / &n_rat);
    for c in coeffs.iter_mut().take(n - 2).skip(1) {
        *c = -(r / &n_rat);
    }
    let one_minus_2n = BigRational::one() - ratio(2, 1) / &n_rat;
    coeffs[n - 2] = r * &one_minus_2n;
    coeffs[n - 1] = -(r / ratio(2, 1)) * &one_minus_2n;
    RationalPoly::new(coeffs)
}

/// Exact P with `Q = (1-z)^2 P`; degree N-3.
pub fn p_poly(params: &ModelParams) -> Result<RationalPoly> {
    let one_minus_z = RationalPoly::new(vec![BigRational::one(), -BigRational::one()]);
    let sq = one_minus_z.mul(&one_minus_z);
    q_poly(params).div_exact(&sq)
}

/// Exact numerator S of H2'' = S / (z^2 (1-z^{N-1})^2).
pub fn s_poly(params: &ModelParams) -> Result<RationalPoly> {
    let b = g_quotient_coeffs(params)?;
    let n = params.n();
    // S = z B'(z) (1 - z^{N-1}) - B(z)(1 - N z^{N-1})
    let zbp = {
        let mut coeffs = vec![BigRational::zero(); n - 1];
        for (k, c) in b.coeffs().iter().enumerate() {
            coeffs[k] = c * BigRational::from(BigInt::from(k));
        }
        RationalPoly::new(coeffs)
    };
    let one = RationalPoly::constant(BigRational::one());
    let z_nm1 = RationalPoly::monomial(BigRational::one(), n - 1);
    let n_z_nm1 = z_nm1.scale(&BigRational::from(BigInt::from(n)));
    let s = zbp.mul(&one.sub(&z_nm1)).sub(&b.mul(&one.sub(&n_z_nm1)));
    Ok(s)
}

/// The six-term partial sum S_p of the positivity lemma (defined for N >= 5):
/// `b_{N-2}(N-3) z^{N-2} + b_{N-3}(N-4) z^{N-3} + b_0 (N z^{N-1} - 1)
///  + b_1 (N-1) z^N + 2 b_{N-2} z^{2N-3} + 3 b_{N-3} z^{2(N-2)}`.
pub fn sp_partial(params: &ModelParams) -> Result<RationalPoly> {
    let n = params.n();
    if n < 5 {
        return Err(PggError::InvalidParams(format!(
            "S_p is defined for N >= 5, got N = {n}"
        )));
    }
    let b = g_quotient_coeffs(params)?;
    let big = |k: usize| BigRational::from(BigInt::from(k));
    let mut acc = RationalPoly::monomial(b.coeff(n - 2) * big(n - 3), n - 2);
    acc = acc.add(&RationalPoly::monomial(b.coeff(n - 3) * big(n - 4), n - 3));
    acc = acc.add(&RationalPoly::monomial(b.coeff(0) * big(n), n - 1));
    acc = acc.add(&RationalPoly::constant(-b.coeff(0)));
    acc = acc.add(&RationalPoly::monomial(b.coeff(1) * big(n - 1), n));
    acc = acc.add(&RationalPoly::monomial(b.coeff(n - 2) * big(2), 2 * n - 3));
    acc = acc.add(&RationalPoly::monomial(b.coeff(n - 3) * big(3), 2 * (n - 2)));
    Ok(acc)
}

impl HamiltonianContext {
    /// Builds the exact polynomials, tabulates R by quadrature of the
    /// closed-form R', and pins the integration constant so that the
    /// minimum of H2 over a fine grid is zero.
    pub fn build(params: ModelParams) -> Result<Self> {
        let b_poly = g_quotient_coeffs(&params)?;
        let q = q_poly(&params);
        let p = p_poly(&params)?;
        if p.degree() != Some(params.n() - 3) {
            return Err(PggError::InternalError(format!(
                "deg P = {:?}, expected N-3 = {}",
                p.degree(),
                params.n() - 3
            )));
        }
        let s = s_poly(&params)?;

        let b_coeffs = b_poly.coeffs_f64();
        let p_coeffs = p.coeffs_f64();
        let s_coeffs = s.coeffs_f64();

        let mut ctx = HamiltonianContext {
            params,
            b_poly,
            q_poly: q,
            p_poly: p,
            s_poly: s,
            b_coeffs,
            p_coeffs,
            s_coeffs,
            r_table: Vec::new(),
            r_deriv_table: Vec::new(),
            c_r: 0.0,
        };
        ctx.tabulate_r();
        ctx.calibrate_c_r();
        Ok(ctx)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn b_poly(&self) -> &RationalPoly {
        &self.b_poly
    }
    pub fn q_poly(&self) -> &RationalPoly {
        &self.q_poly
    }
    pub fn p_poly(&self) -> &RationalPoly {
        &self.p_poly
    }
    pub fn s_poly_ref(&self) -> &RationalPoly {
        &self.s_poly
    }
    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    /// R'(z) = -P(z) / (1 + z + ... + z^{N-2}), bounded on [0,1].
    pub fn r_deriv(&self, z: f64) -> f64 {
        let den: f64 = (0..=(self.params.n() - 2)).map(|j| z.powi(j as i32)).sum();
        -horner(&self.p_coeffs, z) / den
    }

    fn tabulate_r(&mut self) {
        let m = R_TABLE_NODES;
        let h = 1.0 / m as f64;
        let mut values = Vec::with_capacity(m + 1);
        let mut derivs = Vec::with_capacity(m + 1);
        values.push(0.0);
        derivs.push(self.r_deriv(0.0));
        let mut acc = 0.0;
        for i in 0..m {
            let a = i as f64 * h;
            acc += adaptive_simpson(&|z| self.r_deriv(z), a, a + h, 1e-12 / m as f64, 20);
            values.push(acc);
            derivs.push(self.r_deriv((i + 1) as f64 * h));
        }
        self.r_table = values;
        self.r_deriv_table = derivs;
    }

    /// R(z) = int_0^z R'(s) ds from the table, cubic Hermite between nodes.
    pub fn r_value(&self, z: f64) -> f64 {
        let m = R_TABLE_NODES;
        let h = 1.0 / m as f64;
        let z = z.clamp(0.0, 1.0);
        let i = ((z * m as f64) as usize).min(m - 1);
        let t = (z - i as f64 * h) / h;
        let (y0, y1) = (self.r_table[i], self.r_table[i + 1]);
        let (d0, d1) = (self.r_deriv_table[i] * h, self.r_deriv_table[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    fn calibrate_c_r(&mut self) {
        let mut min_h2 = f64::INFINITY;
        for i in 1..C_R_GRID {
            let z = i as f64 / C_R_GRID as f64;
            let v = self.h2_raw(z);
            if v < min_h2 {
                min_h2 = v;
            }
        }
        self.c_r = -min_h2;
    }

    fn h2_raw(&self, z: f64) -> f64 {
        let r = self.params.r();
        let n = self.params.n() as f64;
        -(1.0 - r / n) * z.ln() - (r / 2.0 - 1.0) * (1.0 - z).ln() + self.r_value(z)
    }

    /// H2(z), nonnegative by the c_R calibration. Errors at z in {0,1}.
    pub fn eval_h2(&self, z: f64) -> Result<f64> {
        check_open_unit(z, "z")?;
        Ok(self.h2_raw(z) + self.c_r)
    }

    /// H2'(z) via the regularized quotient form B(z)/(z(1-z^{N-1})).
    pub fn eval_h2_d(&self, z: f64) -> Result<f64> {
        check_open_unit(z, "z")?;
        let nm1 = self.params.n() as i32 - 1;
        Ok(horner(&self.b_coeffs, z) / (z * (1.0 - z.powi(nm1))))
    }

    /// H2'(z) via the split form -(1-r/N)/z + (r/2-1)/(1-z) + R'(z).
    /// Algebraically identical to [`eval_h2_d`]; kept for consistency checks.
    pub fn eval_h2_d_split(&self, z: f64) -> Result<f64> {
        check_open_unit(z, "z")?;
        let r = self.params.r();
        let n = self.params.n() as f64;
        Ok(-(1.0 - r / n) / z + (r / 2.0 - 1.0) / (1.0 - z) + self.r_deriv(z))
    }

    /// H2''(z) = S(z) / (z^2 (1-z^{N-1})^2).
    pub fn eval_h2_dd(&self, z: f64) -> Result<f64> {
        check_open_unit(z, "z")?;
        Ok(self.h2_dd_unchecked(z))
    }

    fn h2_dd_unchecked(&self, z: f64) -> f64 {
        let nm1 = self.params.n() as i32 - 1;
        let w = 1.0 - z.powi(nm1);
        horner(&self.s_coeffs, z) / (z * z * w * w)
    }

    /// H(f,z) = H1(f) + H2(z).
    pub fn eval_h(&self, state: OdeState) -> Result<f64> {
        Ok(eval_h1(state.f, &self.params)? + self.eval_h2(state.z)?)
    }

    /// Scans H2'' on a uniform interior grid plus cosine-clustered
    /// points near both endpoints (H2'' has 1/z^2 and 1/(1-z)^2
    /// structure there).
    pub fn certify_hessian(&self, grid_size: usize) -> HessianReport {
        let mut min_value = f64::INFINITY;
        let mut argmin_z = f64::NAN;
        let g = grid_size as f64;
        let consider = |z: f64, min_value: &mut f64, argmin_z: &mut f64| {
            let v = self.h2_dd_unchecked(z);
            if v < *min_value {
                *min_value = v;
                *argmin_z = z;
            }
        };
        for i in 1..grid_size {
            consider(i as f64 / g, &mut min_value, &mut argmin_z);
        }
        for k in 1..grid_size {
            let z = 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / g).cos());
            if z > 0.0 && z < 1.0 {
                consider(z, &mut min_value, &mut argmin_z);
            }
        }
        let n = self.params.n() as f64;
        let r = self.params.r();
        let lemma_range = r > (n / 3.0).max(2.0) && r < n;
        HessianReport {
            params: self.params.clone(),
            grid_size,
            min_value,
            argmin_z,
            certified_positive: min_value > 0.0,
            lemma_range,
        }
    }

    /// Exact certification path: counts the roots of the exact S(z) in
    /// (0,1) with a Sturm sequence and checks the sign at one interior
    /// point. Returns true iff H2'' > 0 on all of (0,1).
    pub fn certify_hessian_exact(&self) -> Result<bool> {
        let roots = sturm_roots_in(&self.s_poly, &ratio(0, 1), &ratio(1, 1))?;
        if roots > 0 {
            return Ok(false);
        }
        Ok(self.s_poly.eval(&ratio(1, 2)).is_positive())
    }
}

/// Convenience: build the context and run the grid certification.
pub fn certify_hessian(params: &ModelParams, grid_size: usize) -> Result<HessianReport> {
    let ctx = HamiltonianContext::build(params.clone())?;
    Ok(ctx.certify_hessian(grid_size))
}

/// H1(f) = -sigma log f - (r-1-sigma) log(1-f), nonnegative on (0,1).
pub fn eval_h1(f: f64, params: &ModelParams) -> Result<f64> {
    check_open_unit(f, "f")?;
    Ok(-params.sigma() * f.ln() - (params.r() - 1.0 - params.sigma()) * (1.0 - f).ln())
}

/// H1'(f) = -sigma/f + (r-1-sigma)/(1-f).
pub fn eval_h1_d(f: f64, params: &ModelParams) -> Result<f64> {
    check_open_unit(f, "f")?;
    Ok(-params.sigma() / f + (params.r() - 1.0 - params.sigma()) / (1.0 - f))
}

/// H1''(f) = sigma/f^2 + (r-1-sigma)/(1-f)^2 > 0.
pub fn eval_h1_dd(f: f64, params: &ModelParams) -> Result<f64> {
    check_open_unit(f, "f")?;
    let omf = 1.0 - f;
    Ok(params.sigma() / (f * f) + (params.r() - 1.0 - params.sigma()) / (omf * omf))
}

fn check_open_unit(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(PggError::DomainError(format!(
            "{name} = {v} outside the open interval (0,1)"
        )))
    }
}

/// Exact value of P(1) = r (N-6)(N-2)(N-1) / (12 N).
pub fn p_at_one_closed_form(params: &ModelParams) -> BigRational {
    let n = params.n() as i64;
    params.r_exact() * ratio((n - 6) * (n - 2) * (n - 1), 12 * n)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_g, interior_fixed_point};
    use crate::rational::rational_to_f64;

    fn params(r_num: i64, r_den: i64, n: usize) -> ModelParams {
        ModelParams::new(ratio(r_num, r_den), n, 0.5, 0.1, 0.1).unwrap()
    }

    fn ctx_3_5() -> HamiltonianContext {
        HamiltonianContext::build(ModelParams::new(ratio(3, 1), 5, 1.0, 0.1, 0.1).unwrap())
            .unwrap()
    }

    #[test]
    fn q_factors_exactly_for_all_n() {
        for n in 3..=30usize {
            for k in 1..4i64 {
                let r = ratio(2, 1) + ratio(k * (n as i64 - 2), 4);
                let r = if r >= ratio(n as i64, 1) { ratio(2 * n as i64 + 2, n as i64) } else { r };
                let p = ModelParams::new(r, n, 0.1, 0.1, 0.1).unwrap();
                let pp = p_poly(&p).unwrap();
                let expected_deg = if n == 3 { 0 } else { n - 3 };
                assert_eq!(pp.degree(), Some(expected_deg), "N = {n}");
                // closed form for P(1)
                assert_eq!(pp.eval(&ratio(1, 1)), p_at_one_closed_form(&p), "N = {n}");
            }
        }
    }

    #[test]
    fn p_at_one_reference_values() {
        // (r=3, N=5): P(1) = 3*(-1)(3)(4)/60 = -3/5
        let p = params(3, 1, 5);
        assert_eq!(p_poly(&p).unwrap().eval(&ratio(1, 1)), ratio(-3, 5));
        // N=6: factor (N-6) makes P(1) = 0
        let p6 = params(3, 1, 6);
        assert!(p_poly(&p6).unwrap().eval(&ratio(1, 1)).is_zero());
    }

    #[test]
    fn r_deriv_closed_form_n3() {
        // N=3, r=3 (relaxed since r = N): R'(z) = (r/6)/(1+z)
        let p = ModelParams::relaxed(ratio(3, 1), 3, 0.5, 0.1, 0.1).unwrap();
        let ctx = HamiltonianContext::build(p).unwrap();
        assert!((ctx.r_deriv(0.0) - 0.5).abs() < 1e-14);
        for i in 0..=10 {
            let z = i as f64 / 10.0;
            assert!((ctx.r_deriv(z) - 0.5 / (1.0 + z)).abs() < 1e-13);
        }
    }

    #[test]
    fn r_deriv_bound_at_one() {
        // |R'(1)| = |P(1)| / (N-1)
        let ctx = ctx_3_5();
        let p1 = rational_to_f64(&ctx.p_poly().eval(&ratio(1, 1)));
        assert!((ctx.r_deriv(1.0).abs() - p1.abs() / 4.0).abs() < 1e-13);
    }

    #[test]
    fn r_table_matches_quadrature() {
        let ctx = ctx_3_5();
        // independent fine-grid trapezoid oracle for R(0.73)
        let z_end = 0.73;
        let m = 200_000;
        let h = z_end / m as f64;
        let mut acc = 0.5 * (ctx.r_deriv(0.0) + ctx.r_deriv(z_end));
        for i in 1..m {
            acc += ctx.r_deriv(i as f64 * h);
        }
        acc *= h;
        assert!((ctx.r_value(z_end) - acc).abs() < 1e-9);
    }

    #[test]
    fn h2_is_calibrated_nonnegative() {
        let ctx = ctx_3_5();
        let mut min = f64::INFINITY;
        for i in 1..2000 {
            let z = i as f64 / 2000.0;
            let v = ctx.eval_h2(z).unwrap();
            assert!(v >= -1e-10);
            min = min.min(v);
        }
        assert!(min.abs() < 1e-6, "min H2 = {min}, expected ~0");
    }

    #[test]
    fn h2_d_forms_agree() {
        let ctx = ctx_3_5();
        for i in 1..1000 {
            let z = i as f64 / 1000.0;
            let a = ctx.eval_h2_d(z).unwrap();
            let b = ctx.eval_h2_d_split(z).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "z = {z}: {a} vs {b}");
        }
    }

    #[test]
    fn h2_d_is_minus_g_over_phi_factor() {
        let ctx = ctx_3_5();
        let p = ctx.params().clone();
        for i in 1..100 {
            let z = i as f64 / 100.0;
            let quotient = -eval_g(z, &p) / (z * (1.0 - z) * (1.0 - z.powi(4)));
            assert!((ctx.eval_h2_d(z).unwrap() - quotient).abs() < 1e-9 * (1.0 + quotient.abs()));
        }
    }

    #[test]
    fn derivative_consistency_finite_differences() {
        // centered differences of H2 converge to H2' at second order,
        // and of H2' to H2''
        let ctx = ctx_3_5();
        let z = 0.37;
        let mut last_err_d = f64::INFINITY;
        let mut last_err_dd = f64::INFINITY;
        for h in [1e-3, 1e-4, 1e-5] {
            let fd = (ctx.eval_h2(z + h).unwrap() - ctx.eval_h2(z - h).unwrap()) / (2.0 * h);
            let err_d = (fd - ctx.eval_h2_d(z).unwrap()).abs();
            let fdd = (ctx.eval_h2_d(z + h).unwrap() - ctx.eval_h2_d(z - h).unwrap()) / (2.0 * h);
            let err_dd = (fdd - ctx.eval_h2_dd(z).unwrap()).abs();
            // each tenfold h reduction should reduce the error ~100x;
            // allow generous slack (R interpolation error floors the first)
            assert!(err_d < last_err_d * 0.2 + 1e-9, "h = {h}: {err_d} vs {last_err_d}");
            assert!(err_dd < last_err_dd * 0.2 + 1e-9);
            last_err_d = err_d;
            last_err_dd = err_dd;
        }
    }

    #[test]
    fn h2_dd_closed_form_n3() {
        // (N=3): H2'' = (1-r/3)/z^2 + (r/2-1)/(1-z)^2 - (r/6)/(1+z)^2
        let p = ModelParams::new(ratio(5, 2), 3, 0.5, 0.1, 0.1).unwrap();
        let r = 2.5;
        let ctx = HamiltonianContext::build(p).unwrap();
        for i in 1..100 {
            let z = i as f64 / 100.0;
            let closed = (1.0 - r / 3.0) / (z * z) + (r / 2.0 - 1.0) / ((1.0 - z) * (1.0 - z))
                - (r / 6.0) / ((1.0 + z) * (1.0 + z));
            let v = ctx.eval_h2_dd(z).unwrap();
            assert!((v - closed).abs() < 1e-9 * (1.0 + closed.abs()));
            assert!(v > 0.0);
        }
    }

    #[test]
    fn h2_dd_positive_n4() {
        let p = ModelParams::new(ratio(7, 2), 4, 0.5, 0.1, 0.1).unwrap();
        let ctx = HamiltonianContext::build(p).unwrap();
        for i in 1..1000 {
            let z = i as f64 / 1000.0;
            assert!(ctx.eval_h2_dd(z).unwrap() > 0.0);
        }
    }

    #[test]
    fn h1_minimum_and_value() {
        let p = ModelParams::new(ratio(3, 1), 5, 1.0, 0.1, 0.1).unwrap();
        assert!(eval_h1_d(0.5, &p).unwrap().abs() < 1e-15);
        assert!((eval_h1(0.5, &p).unwrap() - 2.0 * (2.0f64).ln()).abs() < 1e-12);
        for i in 1..10_000 {
            let f = i as f64 / 10_000.0;
            assert!(eval_h1_dd(f, &p).unwrap() > 0.0);
            assert!(eval_h1(f, &p).unwrap() >= 0.0);
        }
    }

    #[test]
    fn h_is_minimized_at_fixed_point() {
        let ctx = ctx_3_5();
        let fp = interior_fixed_point(ctx.params()).unwrap();
        let h_star = ctx.eval_h(fp).unwrap();
        for i in 1..100 {
            for j in 1..100 {
                let s = OdeState::new(i as f64 / 100.0, j as f64 / 100.0);
                assert!(ctx.eval_h(s).unwrap() + 1e-12 >= h_star);
            }
        }
    }

    #[test]
    fn h_separability_and_divergence() {
        let ctx = ctx_3_5();
        // H(f,z) - H(f',z) independent of z
        let d1 = ctx.eval_h(OdeState::new(0.3, 0.2)).unwrap()
            - ctx.eval_h(OdeState::new(0.6, 0.2)).unwrap();
        let d2 = ctx.eval_h(OdeState::new(0.3, 0.8)).unwrap()
            - ctx.eval_h(OdeState::new(0.6, 0.8)).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        // -sigma log f divergence as f -> 0+
        let fp = interior_fixed_point(ctx.params()).unwrap();
        let h = |f: f64| ctx.eval_h(OdeState::new(f, fp.z)).unwrap();
        assert!(h(1e-6) > h(1e-3) && h(1e-3) > h(0.1));
    }

    #[test]
    fn certify_reference_params() {
        let report = ctx_3_5().certify_hessian(10_000);
        assert!(report.certified_positive);
        assert!(report.lemma_range);
        assert!(report.min_value > 0.0);
    }

    #[test]
    fn certify_counterexample_r2_n20() {
        let p = ModelParams::relaxed(ratio(2, 1), 20, 0.5, 0.1, 0.1).unwrap();
        let report = certify_hessian(&p, 10_000).unwrap();
        assert!(!report.certified_positive);
        assert!(!report.lemma_range);
        assert!(
            (0.6..=0.8).contains(&report.argmin_z),
            "argmin at z = {}",
            report.argmin_z
        );
    }

    #[test]
    fn certify_r2_small_n_still_positive() {
        let p = ModelParams::relaxed(ratio(2, 1), 5, 0.5, 0.1, 0.1).unwrap();
        let report = certify_hessian(&p, 10_000).unwrap();
        assert!(report.certified_positive);
    }

    #[test]
    fn exact_certification_matches_grid() {
        let ctx = ctx_3_5();
        assert!(ctx.certify_hessian_exact().unwrap());
        let bad = HamiltonianContext::build(
            ModelParams::relaxed(ratio(2, 1), 20, 0.5, 0.1, 0.1).unwrap(),
        )
        .unwrap();
        assert!(!bad.certify_hessian_exact().unwrap());
    }

    #[test]
    fn s_poly_matches_expanded_term_form() {
        // S = sum_{k=1}^{N-2} b_k (k-1) z^k + b_0 (N z^{N-1} - 1)
        //     + sum_{k=1}^{N-2} b_k (N-k) z^{N+k-1}
        for n in [3usize, 5, 8, 13] {
            let p = ModelParams::new(ratio(2 * n as i64 + 4, n as i64), n, 0.1, 0.1, 0.1)
                .unwrap_or_else(|_| {
                    ModelParams::new(ratio(5, 2), n, 0.1, 0.1, 0.1).unwrap()
                });
            let b = g_quotient_coeffs(&p).unwrap();
            let big = |k: i64| BigRational::from(BigInt::from(k));
            let mut expected = RationalPoly::constant(-b.coeff(0));
            expected = expected.add(&RationalPoly::monomial(
                b.coeff(0) * big(n as i64),
                n - 1,
            ));
            for k in 1..=(n - 2) {
                expected = expected.add(&RationalPoly::monomial(
                    b.coeff(k) * big(k as i64 - 1),
                    k,
                ));
                expected = expected.add(&RationalPoly::monomial(
                    b.coeff(k) * big(n as i64 - k as i64),
                    n + k - 1,
                ));
            }
            assert_eq!(s_poly(&p).unwrap(), expected, "N = {n}");
        }
    }

    #[test]
    fn s_at_one_closed_form() {
        // S(1) = (r/2 - 1)(N-1)^2: the endpoint value matching the
        // (r/2-1)/(1-z)^2 blowup of H2''
        let p = params(3, 1, 5);
        assert_eq!(s_poly(&p).unwrap().eval(&ratio(1, 1)), ratio(8, 1));
    }

    #[test]
    fn sp_partial_properties() {
        // S_p(0) = -b_0 = 1 - r/N > 0
        let p = params(3, 1, 5);
        let sp = sp_partial(&p).unwrap();
        assert_eq!(sp.eval(&ratio(0, 1)), ratio(2, 5));
        // omitted terms of S are nonnegative for N/2 <= r < N:
        // (r=3.5, N=6) on a grid
        let p6 = ModelParams::new(ratio(7, 2), 6, 0.5, 0.1, 0.1).unwrap();
        let s6 = s_poly(&p6).unwrap();
        let sp6 = sp_partial(&p6).unwrap();
        let omitted = s6.sub(&sp6);
        for i in 0..=100 {
            let z = ratio(i, 100);
            assert!(!omitted.eval(&z).is_negative(), "omitted terms negative at {i}/100");
        }
        assert!(sp_partial(&params(5, 2, 4)).is_err());
    }

    #[test]
    fn lemma_range_certified_sweep() {
        // every (N, r) with max{N/3,2} < r < N certifies positive
        for n in 3..=30usize {
            let lo = (n as f64 / 3.0).max(2.0);
            for k in 1..=4 {
                let r = lo + (n as f64 - lo) * k as f64 / 5.0;
                let num = (r * 1000.0).round() as i64;
                let r_rat = ratio(num, 1000);
                if r_rat <= ratio(2, 1) || r_rat >= ratio(n as i64, 1) {
                    continue;
                }
                let p = ModelParams::new(r_rat, n, 0.05, 0.1, 0.1).unwrap();
                let report = certify_hessian(&p, 1000).unwrap();
                assert!(
                    report.certified_positive,
                    "N = {n}, r = {r}: min = {}",
                    report.min_value
                );
            }
        }
    }
}
