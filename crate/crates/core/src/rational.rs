//! Quotients of [`Poly`] values with approximate-GCD canonicalization.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QesError, Result};
use crate::poly::Poly;
use crate::roots::{self, RootCluster};

/// Relative size below which trailing coefficients are treated as rounding noise.
pub const COEFF_NOISE: f64 = 1e-12;

/// Default root-matching tolerance used by [`RationalFn::normalize`].
pub const GCD_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    num: Poly,
    den: Poly,
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() || !den.coeffs().iter().all(|c| c.is_finite()) {
            return Err(QesError::DegenerateDenominator);
        }
        Ok(RationalFn { num, den })
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFn {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let d = self.den.eval(z);
        if d.norm() <= 1e-13 * self.den.eval_scale(z) || d.norm() == 0.0 {
            return Err(QesError::NearPole { z });
        }
        Ok(self.num.eval(z) / d)
    }

    pub fn eval_real(&self, x: f64) -> Result<Complex64> {
        self.eval(Complex64::new(x, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> RationalFn {
        RationalFn {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    pub fn recip(&self) -> Result<RationalFn> {
        RationalFn::new(self.den.clone(), self.num.clone())
    }

    /// Derivative with respect to the basis variable.
    pub fn derivative(&self) -> RationalFn {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RationalFn {
            num,
            den: &self.den * &self.den,
        }
    }

    /// x-derivative through `h' = sum h1_l h^l`.
    pub fn deriv_x(&self, h1: &Poly) -> RationalFn {
        let d = self.derivative();
        RationalFn {
            num: &d.num * h1,
            den: d.den,
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let s = self.den.leading().map(|c| c.conj() / c.norm()).unwrap_or(1.0.into());
        // rotate so the leading denominator coefficient is real before testing
        self.num.scale(s).is_real(tol) && self.den.scale(s).is_real(tol)
    }

    /// Remove common factors by matching clustered roots of numerator and
    /// denominator within `tol` (relative), then make the denominator monic.
    pub fn normalize(&self, tol: f64) -> Result<RationalFn> {
        let den = self.den.trim(COEFF_NOISE);
        if den.is_zero() || den.max_abs() == 0.0 || !den.max_abs().is_finite() {
            return Err(QesError::DegenerateDenominator);
        }
        let mut num = self.num.trim(COEFF_NOISE);
        let mut den = den;
        if num.is_zero() {
            return Ok(RationalFn::from_poly(Poly::zero()));
        }

        let mut num_clusters = roots::clustered_roots(&num);
        let den_clusters = roots::clustered_roots(&den);
        let mut cancelled = false;
        for dc in &den_clusters {
            let best = num_clusters
                .iter_mut()
                .filter(|nc| nc.multiplicity > 0)
                .map(|nc| {
                    let d = (nc.center - dc.center).norm();
                    (d, nc)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let Some((dist, nc)) = best else { continue };
            if dist > tol * dc.center.norm().max(1.0) {
                continue;
            }
            let k = nc.multiplicity.min(dc.multiplicity);
            let r = (nc.center + dc.center) / 2.0;
            for _ in 0..k {
                num = num.deflate(r);
                den = den.deflate(r);
            }
            nc.multiplicity -= k;
            cancelled = true;
        }

        let lead = den.leading().expect("denominator degree checked above");
        if !cancelled && lead == Complex64::new(1.0, 0.0) && num == self.num && den == self.den {
            return Ok(self.clone());
        }
        let inv = lead.inv();
        let (mut num, mut den) = (num.scale(inv), den.scale(inv));
        if cancelled {
            if let Some((n, d)) = refine_cofactors(&self.num, &self.den, &num, &den) {
                num = n;
                den = d;
            }
        }
        // conjugate root pairs cancel imperfectly; a real input stays real
        if self.num.is_real(0.0) && self.den.is_real(0.0) {
            num = num.real_part();
            den = den.real_part();
        }
        // exactly monic, so a second pass recognizes canonical form
        let mut dc = den.coeffs().to_vec();
        if let Some(top) = dc.last_mut() {
            *top = Complex64::new(1.0, 0.0);
        }
        Ok(RationalFn { num, den: Poly::new(dc) })
    }

    pub fn poles(&self) -> Vec<RootCluster> {
        roots::clustered_roots(&self.den.trim(COEFF_NOISE))
    }

    pub fn zeros(&self) -> Vec<RootCluster> {
        roots::clustered_roots(&self.num.trim(COEFF_NOISE))
    }

    /// Largest coefficient difference after bringing both to canonical form.
    pub fn coeff_distance(&self, other: &RationalFn) -> Result<f64> {
        let a = self.normalize(GCD_TOL)?;
        let b = other.normalize(GCD_TOL)?;
        Ok(a.num.max_diff(&b.num).max(a.den.max_diff(&b.den)))
    }

    /// Polynomial part and proper remainder: `num/den = q + r/den`.
    pub fn split_polynomial_part(&self) -> (Poly, RationalFn) {
        let (q, r) = self.num.div_rem(&self.den);
        (
            q,
            RationalFn {
                num: r,
                den: self.den.clone(),
            },
        )
    }
}

impl From<Poly> for RationalFn {
    fn from(p: Poly) -> Self {
        RationalFn::from_poly(p)
    }
}

impl Add for &RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &RationalFn) -> RationalFn {
        if self.den == rhs.den {
            return RationalFn {
                num: &self.num + &rhs.num,
                den: self.den.clone(),
            };
        }
        RationalFn {
            num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
    }
}

impl Sub for &RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &RationalFn) -> RationalFn {
        self + &(-rhs)
    }
}

impl Mul for &RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &RationalFn) -> RationalFn {
        RationalFn {
            num: &self.num * &rhs.num,
            den: &self.den * &rhs.den,
        }
    }
}

impl Div for &RationalFn {
    type Output = Result<RationalFn>;
    fn div(self, rhs: &RationalFn) -> Result<RationalFn> {
        RationalFn::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalFn {
            type Output = RationalFn;
            fn $m(self, rhs: RationalFn) -> RationalFn {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RationalFn> for RationalFn {
            type Output = RationalFn;
            fn $m(self, rhs: &RationalFn) -> RationalFn {
                (&self).$m(rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

/// Least-squares polish of reduced cofactors `(p, q)` of `num/den`, with q
/// monic, from the linear relation `num q - den p = 0`. Deflating by
/// approximate roots leaves errors near the root accuracy; this brings the
/// coefficients back to the conditioning of the relation itself.
fn refine_cofactors(num: &Poly, den: &Poly, p: &Poly, q: &Poly) -> Option<(Poly, Poly)> {
    let (np, nq) = (p.coeffs().len(), q.coeffs().len());
    if nq == 0 || np == 0 {
        return None;
    }
    let (a, b) = (num.coeffs(), den.coeffs());
    let rows = (a.len() + nq).max(b.len() + np) - 1;
    let cols = np + nq - 1;
    let mut m = DMatrix::<Complex64>::zeros(rows, cols);
    let mut rhs = DVector::<Complex64>::zeros(rows);
    // unknowns: p_0..p_{np-1}, then q_0..q_{nq-2}; q_{nq-1} = 1
    for (j, _) in p.coeffs().iter().enumerate() {
        for (i, bi) in b.iter().enumerate() {
            m[(i + j, j)] -= bi;
        }
    }
    for j in 0..nq - 1 {
        for (i, ai) in a.iter().enumerate() {
            m[(i + j, np + j)] += ai;
        }
    }
    for (i, ai) in a.iter().enumerate() {
        rhs[i + nq - 1] -= ai;
    }
    let residual = |pc: &[Complex64], qc: &[Complex64]| {
        let r = &(num * &Poly::new(qc.to_vec())) - &(den * &Poly::new(pc.to_vec()));
        r.max_abs()
    };
    let before = residual(p.coeffs(), q.coeffs());
    let svd = m.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).ok()?;
    let pc: Vec<Complex64> = sol.iter().take(np).copied().collect();
    let mut qc: Vec<Complex64> = sol.iter().skip(np).copied().collect();
    qc.push(Complex64::new(1.0, 0.0));
    if !pc.iter().chain(&qc).all(|c| c.is_finite()) {
        return None;
    }
    (residual(&pc, &qc) < before).then(|| (Poly::new(pc), Poly::new(qc)))
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn exact_common_factor_cancels() {
        let f = Poly::from_real(&[1.0, 0.0, 1.0]);
        let r = RationalFn::new(&Poly::h() * &f, Poly::h()).unwrap();
        let n = r.normalize(GCD_TOL).unwrap();
        assert!(n.num().max_diff(&f) < 1e-14);
        assert_eq!(n.den(), &Poly::one());
    }

    #[test]
    fn coprime_pair_unchanged() {
        let r = RationalFn::new(Poly::from_real(&[1.0, 1.0]), Poly::from_real(&[1.0, 0.0, 1.0]))
            .unwrap();
        assert_eq!(r.normalize(GCD_TOL).unwrap(), r);
    }

    #[test]
    fn denominator_made_monic() {
        let r = RationalFn::new(Poly::from_real(&[2.0]), Poly::from_real(&[2.0, 0.0, 4.0])).unwrap();
        let n = r.normalize(GCD_TOL).unwrap();
        assert_eq!(n.den().leading(), Some(re(1.0)));
        assert!((n.eval_real(0.3).unwrap() - r.eval_real(0.3).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(
            RationalFn::new(Poly::one(), Poly::zero()),
            Err(QesError::DegenerateDenominator)
        );
    }

    #[test]
    fn eval_examples() {
        let k = RationalFn::constant(Complex64::new(2.5, -1.0));
        assert_eq!(k.eval(Complex64::new(7.0, 3.0)).unwrap(), Complex64::new(2.5, -1.0));
        let inv_h = RationalFn::new(Poly::one(), Poly::h()).unwrap();
        assert!(matches!(inv_h.eval(re(0.0)), Err(QesError::NearPole { .. })));
    }

    #[test]
    fn multiple_root_cancellation() {
        // (h-1)^2 (h+2) / ((h-1)^2 (h^2+1))
        let a = Poly::linear_factor(re(1.0));
        let a2 = &a * &a;
        let num = &a2 * &Poly::linear_factor(re(-2.0));
        let den = &a2 * &Poly::from_real(&[1.0, 0.0, 1.0]);
        let n = RationalFn::new(num, den).unwrap().normalize(GCD_TOL).unwrap();
        assert_eq!(n.den().degree(), Some(2));
        assert!(n.num().max_diff(&Poly::from_real(&[2.0, 1.0])) < 1e-10);
    }
}
