//! The optional public goods game: parameters, the incentive function
//! G(z), the factor phi, payoffs, and the interior fixed point.
//!
//! The polynomial form of G,
//!
//! ```text
//! G(z) = (1 - r/N) - (r/N) (z + ... + z^{N-2}) + (r - 1 - r/N) z^{N-1},
//! ```
//!
//! is the only form ever evaluated: it is regular at z = 1 where the
//! quotient form `1 + (r-1) z^{N-1} - (r/N)(1-z^N)/(1-z)` has a
//! removable singularity. The interest rate r is carried as an exact
//! rational so all identity checks stay exact; dynamics use cached f64
//! coefficients.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, One, Zero};

use crate::error::{PggError, Result};
use crate::rational::{horner, ratio, rational_to_f64, RationalPoly};

/// Game and diffusion parameters `(r, N, sigma, d_f, d_z)`.
///
/// Strict construction enforces `N >= 3`, `2 < r < N`, `0 < sigma < r-1`
/// and positive diffusivities. A relaxed mode (`r` anywhere in `(0, N]`)
/// exists only for evaluation-style studies outside the dynamic range,
/// such as the Hessian counterexample at r = 2.
#[derive(Debug, Clone)]
pub struct ModelParams {
    r: BigRational,
    n: usize,
    sigma: f64,
    d_f: f64,
    d_z: f64,
    r_f64: f64,
    relaxed: bool,
    g_coeffs: Vec<f64>,
    g_deriv_coeffs: Vec<f64>,
}

impl ModelParams {
    /// Strict constructor with an exact rational interest rate.
    pub fn new(r: BigRational, n: usize, sigma: f64, d_f: f64, d_z: f64) -> Result<Self> {
        Self::build(r, n, sigma, d_f, d_z, false)
    }

    /// Strict constructor from a float interest rate (converted exactly).
    pub fn from_f64(r: f64, n: usize, sigma: f64, d_f: f64, d_z: f64) -> Result<Self> {
        let r = BigRational::from_f64(r)
            .ok_or_else(|| PggError::InvalidParams(format!("r = {r} is not finite")))?;
        Self::build(r, n, sigma, d_f, d_z, false)
    }

    /// Evaluation-only mode accepting any `r` in `(0, N]`.
    pub fn relaxed(r: BigRational, n: usize, sigma: f64, d_f: f64, d_z: f64) -> Result<Self> {
        Self::build(r, n, sigma, d_f, d_z, true)
    }

    pub fn relaxed_from_f64(r: f64, n: usize, sigma: f64, d_f: f64, d_z: f64) -> Result<Self> {
        let r = BigRational::from_f64(r)
            .ok_or_else(|| PggError::InvalidParams(format!("r = {r} is not finite")))?;
        Self::build(r, n, sigma, d_f, d_z, true)
    }

    fn build(
        r: BigRational,
        n: usize,
        sigma: f64,
        d_f: f64,
        d_z: f64,
        relaxed: bool,
    ) -> Result<Self> {
        if n < 3 {
            return Err(PggError::InvalidParams(format!("N = {n}, need N >= 3")));
        }
        let n_rat = BigRational::from(BigInt::from(n));
        let r_f64 = rational_to_f64(&r);
        if relaxed {
            if r <= BigRational::zero() || r > n_rat {
                return Err(PggError::InvalidParams(format!(
                    "relaxed mode needs 0 < r <= N, got r = {r_f64}, N = {n}"
                )));
            }
        } else {
            if r <= ratio(2, 1) || r >= n_rat {
                return Err(PggError::InvalidParams(format!(
                    "need 2 < r < N, got r = {r_f64}, N = {n}"
                )));
            }
            if !(sigma > 0.0 && sigma < r_f64 - 1.0) {
                return Err(PggError::InvalidParams(format!(
                    "need 0 < sigma < r - 1, got sigma = {sigma}, r = {r_f64}"
                )));
            }
        }
        if !(d_f > 0.0) || !(d_z > 0.0) {
            return Err(PggError::InvalidParams(format!(
                "need d_f, d_z > 0, got d_f = {d_f}, d_z = {d_z}"
            )));
        }
        let mut params = ModelParams {
            r,
            n,
            sigma,
            d_f,
            d_z,
            r_f64,
            relaxed,
            g_coeffs: Vec::new(),
            g_deriv_coeffs: Vec::new(),
        };
        let g = g_poly_unchecked(&params);
        params.g_deriv_coeffs = g.derivative().coeffs_f64();
        params.g_coeffs = g.coeffs_f64();
        Ok(params)
    }

    /// Same parameters with a different `d_z` (used by the fast-diffusion sweep).
    pub fn with_d_z(&self, d_z: f64) -> Result<Self> {
        Self::build(self.r.clone(), self.n, self.sigma, self.d_f, d_z, self.relaxed)
    }

    pub fn r_exact(&self) -> &BigRational {
        &self.r
    }
    pub fn r(&self) -> f64 {
        self.r_f64
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn d_f(&self) -> f64 {
        self.d_f
    }
    pub fn d_z(&self) -> f64 {
        self.d_z
    }
    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }
}

/// A point `(f, z)` of the reduced state space.
///
/// Interior dynamics require `(0,1)^2`; evaluation-only calls accept the
/// closed square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeState {
    pub f: f64,
    pub z: f64,
}

impl OdeState {
    pub fn new(f: f64, z: f64) -> Self {
        OdeState { f, z }
    }

    pub fn is_interior(&self) -> bool {
        self.f > 0.0 && self.f < 1.0 && self.z > 0.0 && self.z < 1.0
    }
}

fn g_poly_unchecked(params: &ModelParams) -> RationalPoly {
    let n = params.n;
    let r = &params.r;
    let n_rat = BigRational::from(BigInt::from(n));
    let r_over_n = r / &n_rat;
    let mut coeffs = vec![-r_over_n.clone(); n];
    coeffs[0] = BigRational::one() - &r_over_n;
    coeffs[n - 1] = r - BigRational::one() - &r_over_n;
    RationalPoly::new(coeffs)
}

/// The degree-(N-1) polynomial form of G with exact coefficients:
/// constant term `1 - r/N`, then `-r/N` for `z^1 .. z^{N-2}`, and
/// `r - 1 - r/N` for `z^{N-1}`.
pub fn g_poly(params: &ModelParams) -> RationalPoly {
    g_poly_unchecked(params)
}

/// Floating evaluation of G via Horner on the polynomial form.
/// Well defined on all of [0,1]; G(1) = 0 up to rounding.
pub fn eval_g(z: f64, params: &ModelParams) -> f64 {
    horner(&params.g_coeffs, z)
}

/// Derivative G'(z), Horner on the exact derivative coefficients.
pub fn eval_g_deriv(z: f64, params: &ModelParams) -> f64 {
    horner(&params.g_deriv_coeffs, z)
}

/// The expansion `-G(z)/(1-z) = sum b_k z^k` with `b_k = -1 + r(k+1)/N`,
/// degree N-2. Exact: `(1-z) * result = -G` identically.
pub fn g_quotient_coeffs(params: &ModelParams) -> Result<RationalPoly> {
    let n = params.n;
    let r = &params.r;
    let n_rat = BigRational::from(BigInt::from(n));
    let mut coeffs = Vec::with_capacity(n - 1);
    for k in 0..=(n - 2) {
        let b_k = -BigRational::one() + r * BigRational::from(BigInt::from(k + 1)) / &n_rat;
        coeffs.push(b_k);
    }
    let b = RationalPoly::new(coeffs);
    // The identity (1-z) * b = -G is guaranteed by the coefficient
    // formulas; a failure here means a coefficient bug.
    let one_minus_z = RationalPoly::new(vec![BigRational::one(), -BigRational::one()]);
    if one_minus_z.mul(&b) != g_poly(params).neg() {
        return Err(PggError::InternalError(
            "(1-z) * b_k expansion does not reproduce -G".into(),
        ));
    }
    Ok(b)
}

/// `phi(f,z) = f(1-f) z(1-z)(1 - z^{N-1})`, nonnegative on the unit square.
pub fn eval_phi(f: f64, z: f64, params: &ModelParams) -> f64 {
    f * (1.0 - f) * z * (1.0 - z) * (1.0 - z.powi(params.n as i32 - 1))
}

/// Single-round payoffs for `eta_c` cooperators contributing `c` each:
/// `P_c = -c + r c eta_c / N`, `P_d = r c eta_c / N`.
pub fn round_payoffs(eta_c: usize, c: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if eta_c > params.n {
        return Err(PggError::InvalidParams(format!(
            "eta_c = {eta_c} out of range 0..={}",
            params.n
        )));
    }
    let pool = params.r() * c * eta_c as f64 / params.n as f64;
    Ok((-c + pool, pool))
}

/// Mixed-population expected payoffs `(P_l, P_d, P_c)` for cooperator
/// fraction `x` and loner fraction `z`:
/// `P_l = sigma`,
/// `P_d = sigma z^{N-1} + r x/(1-z) (1 - (1-z^N)/(N(1-z)))`,
/// `P_c = P_d - G(z)`.
pub fn mixed_payoffs(x: f64, z: f64, params: &ModelParams) -> Result<(f64, f64, f64)> {
    if !(0.0..1.0).contains(&z) {
        return Err(PggError::DomainError(format!(
            "mixed_payoffs needs z in [0,1), got z = {z}"
        )));
    }
    if x < 0.0 || x + z > 1.0 + 1e-12 {
        return Err(PggError::InvalidParams(format!(
            "need x >= 0 and x + z <= 1, got x = {x}, z = {z}"
        )));
    }
    let n = params.n as f64;
    let nm1 = params.n as i32 - 1;
    let p_l = params.sigma();
    let p_d = params.sigma() * z.powi(nm1)
        + params.r() * x / (1.0 - z) * (1.0 - (1.0 - z.powi(params.n as i32)) / (n * (1.0 - z)));
    let p_c = p_d - eval_g(z, params);
    Ok((p_l, p_d, p_c))
}

/// Interior fixed point `(f*, z*)`: `f* = sigma/(r-1)` from the z-equation
/// and `z*` the unique root of G in (0,1), bracketed by a 10^3-point scan
/// and bisected to absolute tolerance 1e-14.
pub fn interior_fixed_point(params: &ModelParams) -> Result<OdeState> {
    let f_star = params.sigma() / (params.r() - 1.0);
    let z_star = g_root(params)?;
    Ok(OdeState::new(f_star, z_star))
}

fn g_root(params: &ModelParams) -> Result<f64> {
    const SCAN: usize = 1000;
    let mut bracket = None;
    let mut prev_z = 1.0 / (SCAN + 1) as f64;
    let mut prev_g = eval_g(prev_z, params);
    for i in 2..=SCAN {
        let z = i as f64 / (SCAN + 1) as f64;
        let g = eval_g(z, params);
        if prev_g == 0.0 {
            return Ok(prev_z);
        }
        if prev_g * g < 0.0 {
            bracket = Some((prev_z, z));
            break;
        }
        prev_z = z;
        prev_g = g;
    }
    let (mut lo, mut hi) = bracket.ok_or(PggError::NoRoot)?;
    let mut g_lo = eval_g(lo, params);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let g_mid = eval_g(mid, params);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_lo * g_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reference parameter set used across the default experiments:
/// r = 3, N = 5, sigma = 1, d_f = d_z = 0.1.
pub fn reference_params() -> ModelParams {
    ModelParams::new(ratio(3, 1), 5, 1.0, 0.1, 0.1).expect("reference params are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Signed;

    fn params_3_5() -> ModelParams {
        ModelParams::new(ratio(3, 1), 5, 1.0, 0.1, 0.1).unwrap()
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(ModelParams::new(ratio(2, 1), 5, 0.5, 0.1, 0.1).is_err());
        assert!(ModelParams::new(ratio(5, 1), 5, 0.5, 0.1, 0.1).is_err());
        assert!(ModelParams::new(ratio(3, 1), 2, 0.5, 0.1, 0.1).is_err());
        assert!(ModelParams::new(ratio(3, 1), 5, 2.5, 0.1, 0.1).is_err());
        assert!(ModelParams::new(ratio(3, 1), 5, 1.0, 0.0, 0.1).is_err());
        // r = 2 is fine in relaxed mode
        assert!(ModelParams::relaxed(ratio(2, 1), 20, 0.5, 0.1, 0.1).is_ok());
    }

    #[test]
    fn g_poly_constant_term() {
        // (r=3, N=5): constant coefficient 2/5
        let g = g_poly(&params_3_5());
        assert_eq!(g.coeff(0), ratio(2, 5));
        assert_eq!(g.coeff(1), ratio(-3, 5));
        assert_eq!(g.coeff(4), ratio(7, 5));
        assert_eq!(g.degree(), Some(4));
    }

    #[test]
    fn g_vanishes_at_one() {
        for (r, n) in [(ratio(3, 1), 5usize), (ratio(5, 2), 7), (ratio(7, 3), 4)] {
            let p = ModelParams::new(r, n, 0.5, 0.1, 0.1).unwrap();
            assert!(g_poly(&p).eval(&ratio(1, 1)).is_zero());
            assert!(eval_g(1.0, &p).abs() < 1e-14);
        }
    }

    #[test]
    fn g_matches_series_oracle_at_half() {
        // Term-by-term summation of the quotient form at z = 1/2:
        // G(1/2) = 1 + 2*(1/16) - (3/5)(1 - 1/32)/(1/2)
        let p = params_3_5();
        let exact = g_poly(&p).eval(&ratio(1, 2));
        let oracle = ratio(1, 1) + ratio(2, 16) - ratio(3, 5) * (ratio(1, 1) - ratio(1, 32)) * ratio(2, 1);
        assert_eq!(exact, oracle);
    }

    #[test]
    fn g_series_oracle_random_points() {
        // quotient form 1 + (r-1) z^{N-1} - (r/N)(1 + z + ... + z^{N-1})
        // summed term by term must agree exactly with the polynomial form
        let p = params_3_5();
        let g = g_poly(&p);
        for i in 1..20 {
            let z = ratio(i, 20);
            let mut geom = num::BigRational::zero();
            let mut pow = ratio(1, 1);
            for _ in 0..p.n() {
                geom += pow.clone();
                pow *= z.clone();
            }
            let zpow = {
                let mut acc = ratio(1, 1);
                for _ in 0..(p.n() - 1) {
                    acc *= z.clone();
                }
                acc
            };
            let oracle = ratio(1, 1) + (p.r_exact() - ratio(1, 1)) * zpow
                - p.r_exact() / ratio(5, 1) * geom;
            assert_eq!(g.eval(&z), oracle);
        }
    }

    #[test]
    fn g_sign_change_bracket() {
        let p = params_3_5();
        assert!(eval_g(0.4, &p) > 0.0);
        assert!(eval_g(0.6, &p) < 0.0);
        assert!((eval_g(0.0, &p) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn g_has_exactly_one_sign_change_on_grid() {
        let p = params_3_5();
        let mut changes = 0;
        let mut prev = eval_g(1e-3, &p);
        for i in 2..1000 {
            let z = i as f64 / 1000.0;
            let g = eval_g(z, &p);
            if prev * g < 0.0 {
                changes += 1;
            }
            prev = g;
        }
        assert_eq!(changes, 1);
    }

    #[test]
    fn quotient_coeffs_values() {
        let b = g_quotient_coeffs(&params_3_5()).unwrap();
        assert_eq!(b.coeff(0), ratio(-2, 5));
        assert_eq!(b.coeff(3), ratio(7, 5));
        assert_eq!(b.degree(), Some(3));
    }

    #[test]
    fn quotient_coeff_sum_is_lemma_value() {
        // sum b_k = (r-2)(N-1)/2 = 2 for (r=3, N=5)
        let b = g_quotient_coeffs(&params_3_5()).unwrap();
        assert_eq!(b.coeff_sum(), ratio(2, 1));
    }

    #[test]
    fn a_j_relabeling() {
        // a_j = r - 1 - j r / N equals b_{N-1-j}
        let p = params_3_5();
        let b = g_quotient_coeffs(&p).unwrap();
        for j in 1..=(p.n() - 1) {
            let a_j = p.r_exact() - ratio(1, 1)
                - ratio(j as i64, 1) * p.r_exact() / ratio(p.n() as i64, 1);
            assert_eq!(a_j, b.coeff(p.n() - 1 - j));
        }
    }

    #[test]
    fn quotient_sign_structure() {
        for n in 3..=20usize {
            for num in 1..5i64 {
                // r strictly inside (2, n)
                let r = ratio(2, 1) + ratio(num, 5) * ratio(n as i64 - 2, 1) / ratio(5, 1);
                let p = ModelParams::new(r, n, 0.1, 0.1, 0.1).unwrap();
                let b = g_quotient_coeffs(&p).unwrap();
                assert!(b.coeff(0).is_negative());
                assert!(b.coeff(n - 2).is_positive());
                assert_eq!(b.coeff_sign_changes(), 1);
            }
        }
    }

    #[test]
    fn phi_boundary_and_value() {
        let p3 = ModelParams::new(ratio(5, 2), 3, 1.0, 0.1, 0.1).unwrap();
        assert_eq!(eval_phi(0.0, 0.5, &p3), 0.0);
        assert_eq!(eval_phi(1.0, 0.5, &p3), 0.0);
        assert_eq!(eval_phi(0.5, 0.0, &p3), 0.0);
        assert_eq!(eval_phi(0.5, 1.0, &p3), 0.0);
        // (f=1/2, z=1/2, N=3) -> (1/4)(1/4)(3/4) = 3/64
        assert!((eval_phi(0.5, 0.5, &p3) - 3.0 / 64.0).abs() < 1e-16);
    }

    #[test]
    fn round_payoff_cases() {
        let p = params_3_5();
        let (pc, pd) = round_payoffs(0, 1.0, &p).unwrap();
        assert_eq!((pc, pd), (-1.0, 0.0));
        let (pc, pd) = round_payoffs(5, 1.0, &p).unwrap();
        assert!((pc - 2.0).abs() < 1e-15 && (pd - 3.0).abs() < 1e-15);
        for eta in 0..=5 {
            let (pc, pd) = round_payoffs(eta, 1.0, &p).unwrap();
            assert!((pd - pc - 1.0).abs() < 1e-15);
        }
        assert!(round_payoffs(6, 1.0, &p).is_err());
    }

    #[test]
    fn mixed_payoffs_identities() {
        let p = params_3_5();
        // x=0, z=0: P_d = 0, P_c = -G(0) = -(1 - r/N)
        let (_, pd, pc) = mixed_payoffs(0.0, 0.0, &p).unwrap();
        assert!(pd.abs() < 1e-15);
        assert!((pc + 0.4).abs() < 1e-15);
        // P_d - P_c = G(z)
        for i in 0..20 {
            let z = 0.04 * i as f64;
            let x = 0.3 * (1.0 - z) * (i as f64 / 20.0);
            let (_, pd, pc) = mixed_payoffs(x, z, &p).unwrap();
            assert!((pd - pc - eval_g(z, &p)).abs() < 1e-12);
        }
        assert!(mixed_payoffs(0.0, 1.0, &p).is_err());
    }

    #[test]
    fn mixed_payoff_series_oracle() {
        // closed form vs finite-sum expansion of (1 - z^N)/(1 - z)
        let p = params_3_5();
        let (x, z) = (0.3, 0.2);
        let (_, pd, _) = mixed_payoffs(x, z, &p).unwrap();
        let geom: f64 = (0..p.n()).map(|j| z.powi(j as i32)).sum();
        let oracle = p.sigma() * z.powi(4) + p.r() * x / (1.0 - z) * (1.0 - geom / 5.0);
        assert!((pd - oracle).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_reference() {
        let fp = interior_fixed_point(&params_3_5()).unwrap();
        assert!((fp.f - 0.5).abs() < 1e-15);
        assert!(fp.z > 0.4 && fp.z < 0.6);
        assert!(eval_g(fp.z, &params_3_5()).abs() < 1e-12);
    }

    #[test]
    fn no_root_for_r_le_2() {
        let p = ModelParams::relaxed(ratio(2, 1), 5, 0.5, 0.1, 0.1).unwrap();
        assert!(matches!(interior_fixed_point(&p), Err(PggError::NoRoot)));
    }
}
