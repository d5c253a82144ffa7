//! Potential determined by a ground ansatz with zero energy.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QesError, Result};
use crate::frame::{Ansatz, Frame, Func};
use crate::poly::Poly;
use crate::rational::{RationalFn, GCD_TOL};
use crate::roots;

/// A potential as a rational function of `h`, together with its frame.
#[derive(Clone, Debug)]
pub struct PotentialExpr {
    /// Canonical form (common factors removed, monic denominator).
    pub v: RationalFn,
    /// The uncancelled quotient `numerator / (f² S_L)`.
    pub raw: RationalFn,
    pub frame: Frame,
}

/// Accumulates `value * h^power` into a coefficient vector.
pub(crate) struct Accumulator {
    pub coeffs: Vec<Complex64>,
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator { coeffs: Vec::new() }
    }

    #[inline]
    pub fn add(&mut self, power: isize, value: Complex64) {
        if value == Complex64::new(0.0, 0.0) {
            return;
        }
        debug_assert!(power >= 0, "negative power {power} with nonzero weight");
        let p = power as usize;
        if p >= self.coeffs.len() {
            self.coeffs.resize(p + 1, Complex64::new(0.0, 0.0));
        }
        self.coeffs[p] += value;
    }

    pub fn into_poly(self) -> Poly {
        Poly::new(self.coeffs)
    }
}

/// Nonzero coefficients as `(index, value)` pairs.
pub(crate) fn nz(p: &[Complex64]) -> impl Iterator<Item = (usize, Complex64)> + '_ {
    p.iter()
        .copied()
        .enumerate()
        .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
}

/// Numerator of `V f² S_L` assembled term by term from the expansion
/// coefficients of the frame and the ground coefficients `c`.
pub(crate) fn potential_numerator(frame: &Frame, lambda: Complex64, c: &[Complex64]) -> Poly {
    let g = frame.g1().coeffs();
    let f0 = frame.f0().coeffs();
    let f1 = frame.f1().coeffs();
    let h1 = frame.h1().coeffs();
    let two = Complex64::new(2.0, 0.0);
    let mut acc = Accumulator::new();
    let i = |k: usize| k as isize;

    for (k, fk) in nz(f0) {
        for (l, fl) in nz(f0) {
            let ff = fk * fl;
            for (s, cs) in nz(c) {
                let ffc = ff * cs;
                // (g'/g)^2 part: g_m g_n
                for (m, gm) in nz(g) {
                    for (n, gn) in nz(g) {
                        acc.add(i(k + l + m + n + s), ffc * gm * gn);
                    }
                    for (n, hn) in nz(h1) {
                        // -m g_m h_n: derivative of the weight expansion
                        acc.add(
                            i(k + l + m + n + s) - 1,
                            -ffc * gm * hn * m as f64,
                        );
                        // -2 s g_m h_n: cross term weight x polynomial
                        acc.add(
                            i(k + l + m + n + s) - 1,
                            -two * ffc * gm * hn * s as f64,
                        );
                    }
                }
                // s (s - 1 + m) h_m h_n: second derivative of the polynomial
                for (m, hm) in nz(h1) {
                    for (n, hn) in nz(h1) {
                        let w = (s * (s + m)) as f64 - s as f64;
                        acc.add(i(k + l + m + n + s) - 2, ffc * hm * hn * w);
                    }
                }
            }
        }
    }

    if lambda != Complex64::new(0.0, 0.0) {
        for (s, cs) in nz(c) {
            // lambda l f1_l h_k f0_m: derivative of f'
            for (l, fl) in nz(f1) {
                for (k, hk) in nz(h1) {
                    for (m, fm) in nz(f0) {
                        acc.add(i(k + l + m + s) - 1, lambda * fl * hk * fm * cs * l as f64);
                    }
                }
            }
            // (lambda^2 - lambda) f1_k f1_l
            for (k, fk) in nz(f1) {
                for (l, fl) in nz(f1) {
                    acc.add(i(k + l + s), (lambda * lambda - lambda) * fk * fl * cs);
                }
            }
            for (k, f0k) in nz(f0) {
                for (l, f1l) in nz(f1) {
                    // -2 lambda g_m f0_k f1_l
                    for (m, gm) in nz(g) {
                        acc.add(i(k + l + m + s), -two * lambda * gm * f0k * f1l * cs);
                    }
                    // 2 lambda s f0_k f1_l h_m
                    for (m, hm) in nz(h1) {
                        acc.add(
                            i(k + l + m + s) - 1,
                            two * lambda * f0k * f1l * hm * cs * s as f64,
                        );
                    }
                }
            }
        }
    }
    acc.into_poly()
}

/// Assemble V from the ground state `psi_L = g f^lambda S_L(h)` with `E_L = 0`.
pub fn build_potential(frame: &Frame, ground: &Ansatz) -> Result<PotentialExpr> {
    if ground.energy.norm() > 0.0 {
        return Err(QesError::InvalidInput(
            "the ground ansatz must carry zero energy".into(),
        ));
    }
    let num = potential_numerator(frame, ground.lambda, &ground.c);
    let den = &(frame.f0() * frame.f0()) * &ground.poly();
    if den.is_zero() {
        return Err(QesError::DegenerateDenominator);
    }
    let raw = RationalFn::new(num, den)?;
    let v = raw.normalize(GCD_TOL)?;
    Ok(PotentialExpr {
        v,
        raw,
        frame: frame.clone(),
    })
}

impl PotentialExpr {
    pub fn eval_h(&self, h: Complex64) -> Result<Complex64> {
        self.v.eval(h)
    }

    /// Value at a real point x through the frame's h sampler.
    pub fn eval_x(&self, x: f64) -> Result<Complex64> {
        self.v.eval(self.frame.h_at(x)?)
    }

    /// Sampler in x; NaN at poles. Without frame samplers h = x is assumed.
    pub fn sampler(&self) -> Func {
        let v = self.v.clone();
        let h = self.frame.samplers().map(|s| s.h.clone());
        Arc::new(move |x| {
            let hx = match &h {
                Some(h) => h(x),
                None => Complex64::new(x, 0.0),
            };
            v.eval(hx).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        })
    }
}

/// One term `f^power * poly(h)` of the f-power decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FPiece {
    pub power: i32,
    pub poly: Poly,
}

/// Write `V = sum_k f^k P_k(h)` where the negative powers carry polynomials
/// of degree below deg f and the k = 0 piece is the polynomial part.
pub fn partial_fractions(p: &PotentialExpr) -> Result<Vec<FPiece>> {
    decompose_in_f(&p.v, p.frame.f0())
}

pub(crate) fn decompose_in_f(v: &RationalFn, f: &Poly) -> Result<Vec<FPiece>> {
    let v = v.normalize(GCD_TOL)?;
    let den = v.den();
    let f_deg = f.degree().unwrap_or(0);
    let f_roots = roots::clustered_roots(f);
    for dc in v.poles() {
        let known = f_roots
            .iter()
            .any(|fc| (fc.center - dc.center).norm() <= 1e-6 * fc.center.norm().max(1.0));
        if !known {
            return Err(QesError::NotFExpressible { root: dc.center });
        }
    }
    let den_deg = den.degree().unwrap_or(0);
    if den_deg == 0 {
        let q = v.num().scale(den.coeff(0).inv());
        return Ok(vec![FPiece { power: 0, poly: q }]);
    }
    if f_deg == 0 || den_deg % f_deg != 0 {
        return Err(QesError::NotFExpressible {
            root: v.poles()[0].center,
        });
    }
    let m = den_deg / f_deg;
    let lead = f.leading().unwrap();
    let monic_f = f.scale(lead.inv());
    let expected = monic_f.pow(m as u32);
    if den.max_diff(&expected) > 1e-6 * expected.max_abs() {
        return Err(QesError::NotFExpressible {
            root: v.poles()[0].center,
        });
    }
    // V = num / (f/lead)^m = num lead^m / f^m
    let mut rest = v.num().scale(lead.powu(m as u32));
    let mut pieces = Vec::with_capacity(m + 1);
    for j in 0..m {
        let (q, r) = rest.div_rem(f);
        pieces.push(FPiece {
            power: j as i32 - m as i32,
            poly: r,
        });
        rest = q;
    }
    pieces.push(FPiece {
        power: 0,
        poly: rest,
    });
    pieces.reverse();
    Ok(pieces)
}

/// Sum the pieces back into one rational function.
pub fn recompose(pieces: &[FPiece], f: &Poly) -> Result<RationalFn> {
    let mut total = RationalFn::zero();
    for piece in pieces {
        let term = if piece.power >= 0 {
            RationalFn::from_poly(&piece.poly * &f.pow(piece.power as u32))
        } else {
            RationalFn::new(piece.poly.clone(), f.pow((-piece.power) as u32))?
        };
        total = &total + &term;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::standard_frame;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn flagship_c() -> f64 {
        let t = (109f64.sqrt() / 4.0).atan() / 3.0;
        (-1.0 + 5f64.sqrt() * t.cos()).powi(2)
    }

    /// Closed form c x² - 4c - √c + (8c - 4√c)/(1+x²) - (4c - 8√c + 3)/(1+x²)².
    fn flagship_closed_form(c: f64) -> RationalFn {
        let s = c.sqrt();
        let f = Poly::from_real(&[1.0, 0.0, 1.0]);
        let poly = RationalFn::from_poly(Poly::from_real(&[-4.0 * c - s, 0.0, c]));
        let a = RationalFn::new(Poly::from_real(&[8.0 * c - 4.0 * s]), f.clone()).unwrap();
        let b = RationalFn::new(Poly::from_real(&[-(4.0 * c - 8.0 * s + 3.0)]), &f * &f).unwrap();
        &(&poly + &a) + &b
    }

    #[test]
    fn harmonic_ground_gives_x2_minus_1() {
        let fr = standard_frame("harmonic").unwrap();
        let v = build_potential(&fr, &Ansatz::real(0.0, &[1.0], 0.0).unwrap()).unwrap();
        assert!(v.v.num().max_diff(&Poly::from_real(&[-1.0, 0.0, 1.0])) < 1e-14);
        assert_eq!(v.v.den(), &Poly::one());
    }

    #[test]
    fn flagship_ground_gives_closed_form() {
        let c = flagship_c();
        let s = c.sqrt();
        let fr = standard_frame("rational-x")
            .unwrap()
            .with_g1(Poly::from_real(&[0.0, s]));
        let ground = Ansatz::real(s - 0.5, &[0.0, 1.0], 0.0).unwrap();
        let v = build_potential(&fr, &ground).unwrap();
        let d = v.v.coeff_distance(&flagship_closed_form(c)).unwrap();
        assert!(d < 1e-10, "distance {d}");
        assert_eq!(v.v.den().degree(), Some(4));
    }

    #[test]
    fn generic_ground_matches_uncancelled_form() {
        // V = g_m g_n x^{m+n} - m g_m x^{m-1} + (4λ²-2λ)/(1+x²) - (4λ²-4λ)/(1+x²)²
        //     - 4λ g_m x^{m+1}/(1+x²) + 4λx/((1+x²)(c0+x)) - 2 g_m x^m/(c0+x)
        let (g0, g1, lam, c0) = (0.3, 0.8, 0.45, 0.7);
        let fr = standard_frame("rational-x")
            .unwrap()
            .with_g1(Poly::from_real(&[g0, g1]));
        let v = build_potential(&fr, &Ansatz::real(lam, &[c0, 1.0], 0.0).unwrap()).unwrap();
        for x in [-2.1, -0.4, 0.3, 1.7] {
            let f = 1.0 + x * x;
            let gsum = g0 + g1 * x;
            let expected = gsum * gsum - g1
                + (4.0 * lam * lam - 2.0 * lam) / f
                - (4.0 * lam * lam - 4.0 * lam) / (f * f)
                - 4.0 * lam * (g0 * x + g1 * x * x) / f
                + 4.0 * lam * x / (f * (c0 + x))
                - 2.0 * gsum / (c0 + x);
            let got = v.eval_x(x).unwrap();
            assert!((got.re - expected).abs() < 1e-12 * expected.abs().max(1.0), "x={x}");
            assert!(got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn nonzero_ground_energy_rejected() {
        let fr = standard_frame("harmonic").unwrap();
        assert!(build_potential(&fr, &Ansatz::real(0.0, &[1.0], 1.0).unwrap()).is_err());
    }

    #[test]
    fn flagship_partial_fractions() {
        let c = flagship_c();
        let s = c.sqrt();
        let fr = standard_frame("rational-x")
            .unwrap()
            .with_g1(Poly::from_real(&[0.0, s]));
        let v = build_potential(&fr, &Ansatz::real(s - 0.5, &[0.0, 1.0], 0.0).unwrap()).unwrap();
        let pieces = partial_fractions(&v).unwrap();
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0].power, 0);
        assert!(pieces[0].poly.max_diff(&Poly::from_real(&[-4.0 * c - s, 0.0, c])) < 1e-10);
        assert_eq!(pieces[1].power, -1);
        assert!(pieces[1].poly.max_diff(&Poly::from_real(&[8.0 * c - 4.0 * s])) < 1e-10);
        assert_eq!(pieces[2].power, -2);
        assert!(pieces[2].poly.max_diff(&Poly::from_real(&[-(4.0 * c - 8.0 * s + 3.0)])) < 1e-10);
        let back = recompose(&pieces, fr.f0()).unwrap();
        assert!(back.coeff_distance(&v.v).unwrap() < 1e-10);
    }

    #[test]
    fn polynomial_potential_single_piece() {
        let fr = standard_frame("harmonic").unwrap();
        let v = build_potential(&fr, &Ansatz::real(0.0, &[1.0], 0.0).unwrap()).unwrap();
        let pieces = partial_fractions(&v).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].power, 0);
    }

    #[test]
    fn foreign_pole_rejected() {
        let inv_x = RationalFn::new(Poly::one(), Poly::h()).unwrap();
        let f = Poly::from_real(&[1.0, 0.0, 1.0]);
        assert!(matches!(
            decompose_in_f(&inv_x, &f),
            Err(QesError::NotFExpressible { .. })
        ));
        let _ = re(0.0);
    }
}
