//! Dense polynomials with exact rational coefficients.
//!
//! All the algebraic identities of the game functions (the quotient
//! expansion of G, the `Q = (1-z)^2 P` factorization, the Hessian
//! numerator S) are checked in exact arithmetic through this type.
//! Coefficients are `BigRational`, so nothing here ever rounds.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};
use std::fmt;

use crate::error::{PggError, Result};

/// Convenience constructor for an exact rational from an integer pair.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Dense polynomial, `coeffs[k]` is the coefficient of `z^k`.
/// Trailing zeros are trimmed; the zero polynomial has an empty
/// coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn zero() -> Self {
        RationalPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `c * z^k`
    pub fn monomial(c: BigRational, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + other.coeff(k));
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) - other.coeff(k));
        }
        Self::new(out)
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division: returns `(quotient, remainder)` with
    /// `self = quotient * divisor + remainder` and
    /// `deg remainder < deg divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        if divisor.is_zero() {
            return Err(PggError::InternalError(
                "polynomial division by zero".into(),
            ));
        }
        let d = divisor.coeffs.len() - 1;
        let lead = divisor.coeffs.last().unwrap().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return Ok((Self::zero(), self.clone()));
        }
        let qlen = rem.len() - d;
        let mut quot = vec![BigRational::zero(); qlen];
        for k in (0..qlen).rev() {
            let c = &rem[k + d] / &lead;
            if !c.is_zero() {
                for (j, b) in divisor.coeffs.iter().enumerate() {
                    let t = &c * b;
                    rem[k + j] -= t;
                }
            }
            quot[k] = c;
        }
        rem.truncate(d);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Exact division; errors if a nonzero remainder is left.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self> {
        let (q, r) = self.div_rem(divisor)?;
        if r.is_zero() {
            Ok(q)
        } else {
            Err(PggError::FactorizationError)
        }
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(c * BigRational::from(BigInt::from(k)));
        }
        Self::new(out)
    }

    /// Exact evaluation at a rational point (Horner).
    pub fn eval(&self, z: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Floating evaluation at `z` (Horner over rounded coefficients).
    pub fn eval_f64(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * z + rational_to_f64(c);
        }
        acc
    }

    /// Coefficients rounded to f64, for fast repeated Horner evaluation.
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    /// Sum of all coefficients, i.e. the exact value at `z = 1`.
    pub fn coeff_sum(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for c in &self.coeffs {
            acc += c;
        }
        acc
    }

    /// Number of strict sign changes in the coefficient sequence,
    /// ignoring zero coefficients.
    pub fn coeff_sign_changes(&self) -> usize {
        let mut changes = 0;
        let mut last: Option<bool> = None;
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            let pos = c.is_positive();
            if let Some(p) = last {
                if p != pos {
                    changes += 1;
                }
            }
            last = Some(pos);
        }
        changes
    }
}

/// Horner evaluation over a pre-rounded coefficient slice.
pub fn horner(coeffs: &[f64], z: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    num::ToPrimitive::to_f64(r).expect("rational out of f64 range")
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "({})*z", c)?,
                _ => write!(f, "({})*z^{}", c, k)?,
            }
        }
        Ok(())
    }
}

/// Number of real roots of `p` in the open interval `(a, b)` counted
/// with a Sturm sequence. Exact, so usable as a certification path for
/// rational-coefficient polynomials.
pub fn sturm_roots_in(p: &RationalPoly, a: &BigRational, b: &BigRational) -> Result<usize> {
    if p.is_zero() {
        return Err(PggError::InternalError("sturm of zero polynomial".into()));
    }
    let mut seq = vec![p.clone(), p.derivative()];
    while !seq.last().unwrap().is_zero() {
        let n = seq.len();
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1])?;
        if r.is_zero() {
            break;
        }
        seq.push(r.neg());
    }
    let sign_changes_at = |x: &BigRational| -> usize {
        let mut changes = 0;
        let mut last: Option<bool> = None;
        for q in &seq {
            let v = q.eval(x);
            if v.is_zero() {
                continue;
            }
            let pos = v.is_positive();
            if let Some(p) = last {
                if p != pos {
                    changes += 1;
                }
            }
            last = Some(pos);
        }
        changes
    };
    let va = sign_changes_at(a);
    let vb = sign_changes_at(b);
    Ok(va.saturating_sub(vb))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(cs: &[(i64, i64)]) -> RationalPoly {
        RationalPoly::new(cs.iter().map(|&(n, d)| ratio(n, d)).collect())
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = poly(&[(1, 1), (0, 1), (0, 1)]);
        assert_eq!(p.degree(), Some(0));
        assert!(RationalPoly::new(vec![]).is_zero());
    }

    #[test]
    fn div_rem_roundtrip() {
        // (z^3 - 1) / (z - 1) = z^2 + z + 1
        let num = poly(&[(-1, 1), (0, 1), (0, 1), (1, 1)]);
        let den = poly(&[(-1, 1), (1, 1)]);
        let (q, r) = num.div_rem(&den).unwrap();
        assert!(r.is_zero());
        assert_eq!(q, poly(&[(1, 1), (1, 1), (1, 1)]));
        assert_eq!(q.mul(&den), num);
    }

    #[test]
    fn div_exact_rejects_remainder() {
        let num = poly(&[(1, 1), (0, 1), (1, 1)]); // z^2 + 1
        let den = poly(&[(-1, 1), (1, 1)]); // z - 1
        assert!(matches!(
            num.div_exact(&den),
            Err(PggError::FactorizationError)
        ));
    }

    #[test]
    fn eval_exact_and_float_agree() {
        let p = poly(&[(2, 5), (-3, 5), (7, 5)]);
        let z = ratio(1, 2);
        let exact = p.eval(&z);
        let float = p.eval_f64(0.5);
        assert!((rational_to_f64(&exact) - float).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_cubic() {
        let p = poly(&[(1, 1), (2, 1), (3, 1), (4, 1)]);
        assert_eq!(p.derivative(), poly(&[(2, 1), (6, 1), (12, 1)]));
    }

    #[test]
    fn sturm_counts_roots() {
        // z^2 - 1/4 has one root in (0,1)
        let p = poly(&[(-1, 4), (0, 1), (1, 1)]);
        let n = sturm_roots_in(&p, &ratio(0, 1), &ratio(1, 1)).unwrap();
        assert_eq!(n, 1);
        // z^2 + 1 has none
        let p = poly(&[(1, 1), (0, 1), (1, 1)]);
        let n = sturm_roots_in(&p, &ratio(-10, 1), &ratio(10, 1)).unwrap();
        assert_eq!(n, 0);
    }
}
