//! Truncated Taylor series ("jets") with complex coefficients.
//!
//! A jet of length n holds `a_k` for `f(x0 + t) = sum_{k<n} a_k t^k`.
//! Arithmetic truncates to the shorter operand.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::rational::RationalFn;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet(pub Vec<Complex64>);

impl Jet {
    pub fn constant(c: Complex64, len: usize) -> Jet {
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        if len > 0 {
            v[0] = c;
        }
        Jet(v)
    }

    /// Jet of a rational function at `x0`; `None` at a pole.
    pub fn of_rational(r: &RationalFn, x0: Complex64, len: usize) -> Option<Jet> {
        let num = Jet(r.num().taylor(x0, len - 1));
        let den = Jet(r.den().taylor(x0, len - 1));
        if den.0[0].norm() <= 1e-14 * r.den().eval_scale(x0) {
            return None;
        }
        Some(&num / &den)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value(&self) -> Complex64 {
        self.0[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative_value(&self, k: usize) -> Complex64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.0.get(k).copied().unwrap_or_default() * fact
    }

    /// Jet of the derivative (one coefficient shorter).
    pub fn derivative(&self) -> Jet {
        Jet(self
            .0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect())
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet(self.0.iter().map(|c| c * s).collect())
    }

    /// Taylor polynomial evaluated at offset `t`.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    /// Square root whose value is `root0` (one of the two square roots of
    /// the constant term, which must be nonzero).
    pub fn sqrt_with(&self, root0: Complex64) -> Jet {
        let n = self.len();
        let mut s = vec![Complex64::new(0.0, 0.0); n];
        if n == 0 {
            return Jet(s);
        }
        s[0] = root0;
        for k in 1..n {
            let cross: Complex64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (self.0[k] - cross) / (root0 * 2.0);
        }
        Jet(s)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.len().min(rhs.len());
        Jet((0..n)
            .map(|k| (0..=k).map(|j| self.0[j] * rhs.0[k - j]).sum())
            .collect())
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        let n = self.len().min(rhs.len());
        let mut q = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let acc: Complex64 = (1..=k).map(|j| rhs.0[j] * q[k - j]).sum();
            q[k] = (self.0[k] - acc) / rhs.0[0];
        }
        Jet(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn rational_jet_matches_derivatives() {
        // 1/(1+x^2) at x = 0.5
        let r = RationalFn::new(Poly::one(), Poly::from_real(&[1.0, 0.0, 1.0])).unwrap();
        let j = Jet::of_rational(&r, re(0.5), 4).unwrap();
        let x: f64 = 0.5;
        let d1 = -2.0 * x / (1.0 + x * x).powi(2);
        let d2 = (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3);
        assert!((j.value().re - 0.8).abs() < 1e-15);
        assert!((j.derivative_value(1).re - d1).abs() < 1e-14);
        assert!((j.derivative_value(2).re - d2).abs() < 1e-14);
        assert!(Jet::of_rational(&r, Complex64::new(0.0, 1.0), 3).is_none());
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Jet(vec![re(4.0), re(1.0), re(-0.5), re(0.25)]);
        let s = a.sqrt_with(re(-2.0));
        let back = &s * &s;
        for (x, y) in back.0.iter().zip(&a.0) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn division_inverts_product() {
        let a = Jet(vec![re(1.0), re(2.0), re(3.0)]);
        let b = Jet(vec![re(2.0), re(-1.0), re(0.5)]);
        let q = &(&a * &b) / &b;
        for (x, y) in q.0.iter().zip(&a.0) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}
