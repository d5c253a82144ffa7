//! Dense univariate polynomials with complex coefficients.
//!
//! Coefficients are stored in ascending order of the power of the basis
//! variable `h`. The representation is canonical: the zero polynomial is the
//! empty vector and otherwise the last coefficient is nonzero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::roots;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl From<Vec<Complex64>> for Poly {
    fn from(coeffs: Vec<Complex64>) -> Self {
        Poly::new(coeffs)
    }
}

impl From<Poly> for Vec<Complex64> {
    fn from(p: Poly) -> Self {
        p.coeffs
    }
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Poly { coeffs };
        p.strip();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(ONE)
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// The basis variable itself, `h`.
    pub fn h() -> Self {
        Poly::monomial(ONE, 1)
    }

    pub fn monomial(c: Complex64, power: usize) -> Self {
        let mut coeffs = vec![ZERO; power + 1];
        coeffs[power] = c;
        Poly::new(coeffs)
    }

    /// `h - r`.
    pub fn linear_factor(r: Complex64) -> Self {
        Poly::new(vec![-r, ONE])
    }

    fn strip(&mut self) {
        while self.coeffs.last().is_some_and(|c| *c == ZERO) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `h^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or(ZERO)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol * (1.0 + c.re.abs()))
    }

    pub fn real_part(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        self.eval(Complex64::new(x, 0.0))
    }

    /// Sum of `|a_k| |z|^k`, the natural scale for rounding error in `eval`.
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Formal derivative `dp/dh`.
    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// x-derivative through the chain rule `(dp/dh) h'` with `h' = sum h1_l h^l`.
    pub fn deriv_x(&self, h1: &Poly) -> Poly {
        &self.derivative() * h1
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::one(), |acc, _| &acc * self)
    }

    /// Long division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.coeffs[dd];
        let Some(nd) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if nd < dd {
            return (Poly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![ZERO; nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= q * dc;
            }
            rem[k + dd] = ZERO;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Divide by `(h - r)` discarding the remainder (synthetic division).
    pub fn deflate(&self, r: Complex64) -> Poly {
        let Some(n) = self.degree() else {
            return Poly::zero();
        };
        if n == 0 {
            return Poly::zero();
        }
        let mut out = vec![ZERO; n];
        let mut acc = ZERO;
        for k in (1..=n).rev() {
            acc = acc * r + self.coeffs[k];
            out[k - 1] = acc;
        }
        Poly::new(out)
    }

    /// Drop trailing coefficients below `rel_tol * max|a_k|`.
    pub fn trim(&self, rel_tol: f64) -> Poly {
        let cutoff = rel_tol * self.max_abs();
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.norm() <= cutoff) {
            coeffs.pop();
        }
        Poly::new(coeffs)
    }

    /// Replace coefficients below `rel_tol * max|a_k|` with exact zeros.
    pub fn chop(&self, rel_tol: f64) -> Poly {
        let cutoff = rel_tol * self.max_abs();
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let re = if c.re.abs() <= cutoff { 0.0 } else { c.re };
                    let im = if c.im.abs() <= cutoff { 0.0 } else { c.im };
                    Complex64::new(re, im)
                })
                .collect(),
        )
    }

    /// Taylor coefficients `a_k` of `p(z0 + t) = sum a_k t^k` for `k <= order`.
    pub fn taylor(&self, z0: Complex64, order: usize) -> Vec<Complex64> {
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(order + 1);
        for _ in 0..=order {
            if work.is_empty() {
                out.push(ZERO);
                continue;
            }
            // one pass of synthetic division by (h - z0): remainder is the
            // current Taylor coefficient, the quotient carries the rest
            let n = work.len();
            let mut acc = ZERO;
            let mut quot = vec![ZERO; n - 1];
            for k in (0..n).rev() {
                acc = acc * z0 + work[k];
                if k > 0 {
                    quot[k - 1] = acc;
                }
            }
            out.push(acc);
            work = quot;
        }
        out
    }

    /// All complex roots with multiplicity.
    pub fn roots(&self) -> Vec<Complex64> {
        roots::roots(self)
    }

    pub fn max_diff(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|i| (self.coeff(i) - other.coeff(i)).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                self.$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            match k {
                0 => {}
                1 => f.write_str("·h")?,
                _ => write!(f, "·h^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn add_examples() {
        let f = Poly::from_real(&[1.0, 0.0, 1.0]);
        let two_h = Poly::from_real(&[0.0, 2.0]);
        assert_eq!(&f + &two_h, Poly::from_real(&[1.0, 2.0, 1.0]));
        assert_eq!(&f + &Poly::zero(), f);
        let p = Poly::from_real(&[1.0, 1.0]);
        assert!((&p + &(-&p)).is_zero());
    }

    #[test]
    fn mul_examples() {
        let f = Poly::from_real(&[1.0, 0.0, 1.0]);
        assert_eq!(&f * &f, Poly::from_real(&[1.0, 0.0, 2.0, 0.0, 1.0]));
        assert_eq!(&f * &Poly::one(), f);
        assert!((&f * &Poly::zero()).is_zero());
    }

    #[test]
    fn deriv_x_examples() {
        let unit = Poly::one();
        assert_eq!(
            Poly::monomial(c(1.0), 2).deriv_x(&unit),
            Poly::from_real(&[0.0, 2.0])
        );
        assert!(Poly::constant(c(5.0)).deriv_x(&unit).is_zero());
        // h' = 2h: d(h^3)/dx = 3h^2 * 2h
        let h1 = Poly::from_real(&[0.0, 2.0]);
        assert_eq!(
            Poly::monomial(c(1.0), 3).deriv_x(&h1),
            Poly::monomial(c(6.0), 3)
        );
    }

    #[test]
    fn zero_has_no_degree() {
        assert_eq!(Poly::zero().degree(), None);
        assert_eq!(Poly::from_real(&[0.0, 0.0]).degree(), None);
        assert_eq!(Poly::from_real(&[1.0, 0.0]).degree(), Some(0));
    }

    #[test]
    fn div_rem_reconstructs() {
        let n = Poly::from_real(&[3.0, -1.0, 4.0, 1.0, 5.0]);
        let d = Poly::from_real(&[1.0, 0.0, 1.0]);
        let (q, r) = n.div_rem(&d);
        assert!(r.degree().unwrap_or(0) < 2);
        assert!((&(&q * &d) + &r).max_diff(&n) < 1e-14);
    }

    #[test]
    fn taylor_coefficients_match_derivatives() {
        let p = Poly::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let z0 = Complex64::new(0.7, -0.2);
        let t = p.taylor(z0, 3);
        assert!((t[0] - p.eval(z0)).norm() < 1e-14);
        assert!((t[1] - p.derivative().eval(z0)).norm() < 1e-14);
        assert!((t[2] - p.derivative().derivative().eval(z0) / 2.0).norm() < 1e-14);
        assert!((t[3] - c(3.0)).norm() < 1e-14);
    }

    #[test]
    fn deflate_removes_root() {
        let p = &Poly::linear_factor(c(2.0)) * &Poly::from_real(&[1.0, 1.0, 1.0]);
        assert!(p.deflate(c(2.0)).max_diff(&Poly::from_real(&[1.0, 1.0, 1.0])) < 1e-14);
    }

    #[test]
    fn serde_as_pairs() {
        let p = Poly::new(vec![Complex64::new(1.0, 2.0), c(0.0), c(-1.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[1.0,2.0],[0.0,0.0],[-1.0,0.0]]");
        let back: Poly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
