//! Basis-expansion frames and the eigenfunction ansatz.
//!
//! A frame fixes the functions `g`, `f` and `h` through their expansions in
//! powers of `h`:
//!
//! ```text
//! g'(x) = -g(x) sum g1_l h^l      f(x)  = sum f0_l h^l
//! f'(x) =       sum f1_l h^l      h'(x) = sum h1_l h^l
//! ```
//!
//! Every state handled by the crate is `psi = g f^lambda S(h)` with `S` a
//! polynomial in `h`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FrameEquation, QesError, Result};
use crate::poly::Poly;
use crate::quad;
use crate::rational::RationalFn;

pub type Func = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Closed-form evaluators for `f`, `h` and optionally `g`.
///
/// When `g` is absent it is reconstructed from `g1` by quadrature of
/// `-sum g1_l h(t)^l` from 0 to x.
#[derive(Clone)]
pub struct Samplers {
    pub name: String,
    pub f: Func,
    pub h: Func,
    pub g: Option<Func>,
    /// `h(x) = x`, which lets `g` be integrated in closed form.
    pub identity_h: bool,
}

impl fmt::Debug for Samplers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Samplers")
            .field("name", &self.name)
            .field("explicit_g", &self.g.is_some())
            .finish()
    }
}

impl Samplers {
    /// Built-in sampler sets: `rational-x` (f = 1 + x², h = x) and
    /// `harmonic`/`sextic`/`unit` (f = 1, h = x).
    pub fn builtin(name: &str) -> Result<Samplers> {
        let h: Func = Arc::new(|x| Complex64::new(x, 0.0));
        let f: Func = match name {
            "rational-x" => Arc::new(|x| Complex64::new(1.0 + x * x, 0.0)),
            "harmonic" | "sextic" | "unit" => Arc::new(|_| Complex64::new(1.0, 0.0)),
            other => return Err(QesError::UnknownFrame(other.to_string())),
        };
        Ok(Samplers {
            name: name.to_string(),
            f,
            h,
            g: None,
            identity_h: true,
        })
    }

    pub fn with_g(mut self, g: Func) -> Samplers {
        self.g = Some(g);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Frame {
    order: usize,
    g1: Poly,
    f0: Poly,
    f1: Poly,
    h1: Poly,
    samplers: Option<Samplers>,
}

fn degree_or_zero(p: &Poly) -> usize {
    p.degree().unwrap_or(0)
}

impl Frame {
    /// Build a frame; the truncation order M is the largest degree present.
    pub fn new(g1: Poly, f0: Poly, f1: Poly, h1: Poly) -> Result<Frame> {
        let order = [&g1, &f0, &f1, &h1]
            .into_iter()
            .map(degree_or_zero)
            .max()
            .unwrap();
        Frame::with_order(order, g1, f0, f1, h1)
    }

    /// Build a frame with an explicit M, rejecting arrays longer than M + 1.
    pub fn with_order(order: usize, g1: Poly, f0: Poly, f1: Poly, h1: Poly) -> Result<Frame> {
        for (name, p) in [("g1", &g1), ("f0", &f0), ("f1", &f1), ("h1", &h1)] {
            if p.coeffs().len() > order + 1 {
                return Err(QesError::FrameOrder {
                    name,
                    len: p.coeffs().len(),
                    limit: order + 1,
                });
            }
        }
        if f0.is_zero() {
            return Err(QesError::InvalidInput("f must not vanish identically".into()));
        }
        if h1.is_zero() {
            return Err(QesError::InvalidInput("h' must not vanish identically".into()));
        }
        Ok(Frame {
            order,
            g1,
            f0,
            f1,
            h1,
            samplers: None,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn g1(&self) -> &Poly {
        &self.g1
    }
    pub fn f0(&self) -> &Poly {
        &self.f0
    }
    pub fn f1(&self) -> &Poly {
        &self.f1
    }
    pub fn h1(&self) -> &Poly {
        &self.h1
    }
    pub fn samplers(&self) -> Option<&Samplers> {
        self.samplers.as_ref()
    }

    pub fn with_samplers(mut self, samplers: Samplers) -> Frame {
        self.samplers = Some(samplers);
        self
    }

    /// Same f, h (and samplers) with a new weight expansion. M is recomputed.
    pub fn with_g1(&self, g1: Poly) -> Frame {
        let order = self.order.max(degree_or_zero(&g1));
        Frame {
            order,
            g1,
            f0: self.f0.clone(),
            f1: self.f1.clone(),
            h1: self.h1.clone(),
            samplers: self.samplers.clone(),
        }
    }

    /// `G(h) = sum g1_l h^l`, i.e. `-g'/g`.
    pub fn weight_log_derivative(&self) -> &Poly {
        &self.g1
    }

    fn require_samplers(&self) -> Result<&Samplers> {
        self.samplers.as_ref().ok_or(QesError::MissingSamplers)
    }

    pub fn f_at(&self, x: f64) -> Result<Complex64> {
        Ok((self.require_samplers()?.f)(x))
    }

    pub fn h_at(&self, x: f64) -> Result<Complex64> {
        Ok((self.require_samplers()?.h)(x))
    }

    pub fn g_at(&self, x: f64) -> Result<Complex64> {
        let s = self.require_samplers()?;
        if let Some(g) = &s.g {
            return Ok(g(x));
        }
        Ok(self.derived_g(s, x))
    }

    fn derived_g(&self, s: &Samplers, x: f64) -> Complex64 {
        if s.identity_h {
            let z = Complex64::new(x, 0.0);
            let integral: Complex64 = self
                .g1
                .coeffs()
                .iter()
                .enumerate()
                .map(|(l, c)| c * z.powu(l as u32 + 1) / (l + 1) as f64)
                .sum();
            return (-integral).exp();
        }
        let integrand = |t: f64| self.g1.eval((s.h)(t));
        let pieces = (x.abs().ceil() as usize).max(1) * 2;
        let step = x / pieces as f64;
        let integral: Complex64 = (0..pieces)
            .map(|i| {
                let a = step * i as f64;
                quad::gl_fixed(&integrand, a, a + step)
            })
            .sum();
        (-integral).exp()
    }

    /// Sampler of `psi = g f^lambda S(h)`.
    pub fn psi(&self, state: &Ansatz) -> Result<Func> {
        let s = self.require_samplers()?.clone();
        let frame = self.clone();
        let poly = state.poly();
        let lambda = state.lambda;
        Ok(Arc::new(move |x| {
            let g = match &s.g {
                Some(g) => g(x),
                None => frame.derived_g(&s, x),
            };
            let f = (s.f)(x);
            let fl = if lambda == Complex64::new(0.0, 0.0) {
                Complex64::new(1.0, 0.0)
            } else {
                f.powc(lambda)
            };
            g * fl * poly.eval((s.h)(x))
        }))
    }

    /// `psi'/psi = -G + lambda f'/f + S_h h' / S` as a rational function of h.
    pub fn log_derivative(&self, state: &Ansatz) -> Result<RationalFn> {
        let s = state.poly();
        if s.is_zero() {
            return Err(QesError::DegenerateState);
        }
        let weight = RationalFn::from_poly(-&self.g1);
        let fpart = RationalFn::new(self.f1.scale(state.lambda), self.f0.clone())?;
        let spart = RationalFn::new(s.deriv_x(&self.h1), s)?;
        Ok(&(&weight + &fpart) + &spart)
    }

    pub fn descriptor(&self) -> FrameDescriptor {
        FrameDescriptor {
            order: Some(self.order),
            g1: self.g1.clone(),
            f0: self.f0.clone(),
            f1: self.f1.clone(),
            h1: self.h1.clone(),
            samplers: self.samplers.as_ref().map(|s| s.name.clone()),
        }
    }

    pub fn from_descriptor(d: &FrameDescriptor) -> Result<Frame> {
        let frame = match d.order {
            Some(m) => Frame::with_order(m, d.g1.clone(), d.f0.clone(), d.f1.clone(), d.h1.clone())?,
            None => Frame::new(d.g1.clone(), d.f0.clone(), d.f1.clone(), d.h1.clone())?,
        };
        Ok(match &d.samplers {
            Some(name) => frame.with_samplers(Samplers::builtin(name)?),
            None => frame,
        })
    }
}

/// JSON shape of a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default)]
    pub g1: Poly,
    pub f0: Poly,
    #[serde(default)]
    pub f1: Poly,
    pub h1: Poly,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samplers: Option<String>,
}

/// Catalog of standard frames. All use `h = x`.
///
/// `rational-x` has `f = 1 + x²` and an empty weight expansion to be filled
/// in by the caller; `harmonic` (g = exp(-x²/2)) and `sextic`
/// (g = exp(-x⁴/4)) have `f = 1`.
pub fn standard_frame(name: &str) -> Result<Frame> {
    let (g1, f0, f1) = match name {
        "rational-x" => (
            Poly::zero(),
            Poly::from_real(&[1.0, 0.0, 1.0]),
            Poly::from_real(&[0.0, 2.0]),
        ),
        "harmonic" => (Poly::from_real(&[0.0, 1.0]), Poly::one(), Poly::zero()),
        "sextic" => (
            Poly::from_real(&[0.0, 0.0, 0.0, 1.0]),
            Poly::one(),
            Poly::zero(),
        ),
        other => return Err(QesError::UnknownFrame(other.to_string())),
    };
    Ok(Frame::new(g1, f0, f1, Poly::one())?.with_samplers(Samplers::builtin(name)?))
}

/// Per-identity maximum residuals from [`validate_frame`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub g: f64,
    pub f: f64,
    pub f_prime: f64,
    pub h_prime: f64,
}

impl FrameReport {
    pub fn max(&self) -> f64 {
        self.g.max(self.f).max(self.f_prime).max(self.h_prime)
    }
}

const FD_STEP: f64 = 1e-6;

fn central<F: Fn(f64) -> Complex64>(f: F, x: f64) -> Complex64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Check the four expansion identities on `grid` against the samplers.
pub fn validate_frame(frame: &Frame, grid: &[f64], tol: f64) -> Result<FrameReport> {
    let s = frame.require_samplers()?;
    let mut report = FrameReport::default();
    let mut worst: Option<(FrameEquation, f64, f64)> = None;
    let mut record = |eq: FrameEquation, slot: &mut f64, x: f64, r: f64| {
        *slot = slot.max(r);
        if r > tol && worst.is_none_or(|w| r > w.2) {
            worst = Some((eq, x, r));
        }
    };
    for &x in grid {
        let h = (s.h)(x);
        let g = frame.g_at(x)?;
        let dg = central(|t| frame.g_at(t).unwrap(), x);
        let rg = (dg + g * frame.g1.eval(h)).norm();
        record(FrameEquation::WeightLogDerivative, &mut report.g, x, rg);
        let rf = ((s.f)(x) - frame.f0.eval(h)).norm();
        record(FrameEquation::F, &mut report.f, x, rf);
        let rfp = (central(&*s.f, x) - frame.f1.eval(h)).norm();
        record(FrameEquation::FDerivative, &mut report.f_prime, x, rfp);
        let rhp = (central(&*s.h, x) - frame.h1.eval(h)).norm();
        record(FrameEquation::HDerivative, &mut report.h_prime, x, rhp);
    }
    match worst {
        Some((equation, x, residual)) => Err(QesError::ValidationFailed {
            equation,
            x,
            residual,
        }),
        None => Ok(report),
    }
}

/// One eigenfunction `psi_N = g f^lambda sum c_m h^m` with energy `E_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub lambda: Complex64,
    pub c: Vec<Complex64>,
    pub energy: Complex64,
}

impl Ansatz {
    pub fn new(lambda: Complex64, c: Vec<Complex64>, energy: Complex64) -> Result<Ansatz> {
        match c.last() {
            Some(top) if top.norm() > 0.0 => Ok(Ansatz { lambda, c, energy }),
            _ => Err(QesError::InvalidInput(
                "ansatz needs a nonzero top coefficient".into(),
            )),
        }
    }

    pub fn real(lambda: f64, c: &[f64], energy: f64) -> Result<Ansatz> {
        Ansatz::new(
            lambda.into(),
            c.iter().map(|&v| v.into()).collect(),
            energy.into(),
        )
    }

    /// Polynomial degree N of the state.
    pub fn level(&self) -> usize {
        self.c.len() - 1
    }

    pub fn poly(&self) -> Poly {
        Poly::new(self.c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn rational_x_coefficients() {
        let fr = standard_frame("rational-x").unwrap();
        assert_eq!(fr.f0(), &Poly::from_real(&[1.0, 0.0, 1.0]));
        assert_eq!(fr.f1(), &Poly::from_real(&[0.0, 2.0]));
        assert_eq!(fr.h1(), &Poly::from_real(&[1.0]));
        assert_eq!(fr.f_at(2.0).unwrap(), Complex64::new(5.0, 0.0));
        assert_eq!(fr.h_at(2.0).unwrap(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn harmonic_coefficients() {
        let fr = standard_frame("harmonic").unwrap();
        assert_eq!(fr.f0(), &Poly::one());
        assert!(fr.f1().is_zero());
        assert_eq!(fr.h1(), &Poly::one());
    }

    #[test]
    fn unknown_frame() {
        assert!(matches!(
            standard_frame("morse"),
            Err(QesError::UnknownFrame(_))
        ));
    }

    #[test]
    fn gaussian_weight_validates() {
        let sc = 1.119_628_818_033_14_f64.sqrt();
        let g: Func = Arc::new(move |x| Complex64::new((-sc * x * x / 2.0).exp(), 0.0));
        let fr = standard_frame("rational-x")
            .unwrap()
            .with_g1(Poly::from_real(&[0.0, sc]));
        let fr = fr.clone().with_samplers(fr.samplers().unwrap().clone().with_g(g));
        let rep = validate_frame(&fr, &[-2.0, -1.0, 0.5, 1.0, 2.0], 1e-6).unwrap();
        assert!(rep.max() < 1e-6, "{rep:?}");
    }

    #[test]
    fn constant_weight_is_exact() {
        let fr = standard_frame("rational-x").unwrap();
        let g: Func = Arc::new(|_| Complex64::new(1.0, 0.0));
        let fr = fr.clone().with_samplers(fr.samplers().unwrap().clone().with_g(g));
        let rep = validate_frame(&fr, &[-1.0, 0.3, 2.0], 1e-6).unwrap();
        assert_eq!(rep.g, 0.0);
    }

    #[test]
    fn wrong_f1_detected() {
        let good = standard_frame("rational-x").unwrap();
        let bad = Frame::new(
            Poly::zero(),
            good.f0().clone(),
            Poly::from_real(&[0.0, 3.0]),
            Poly::one(),
        )
        .unwrap()
        .with_samplers(good.samplers().unwrap().clone());
        match validate_frame(&bad, &[1.0, 2.0], 1e-6) {
            Err(QesError::ValidationFailed { equation, .. }) => {
                assert_eq!(equation, FrameEquation::FDerivative)
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn catalog_frames_validate_on_dense_grid() {
        let grid = linspace(-3.0, 3.0, 50);
        for name in ["rational-x", "harmonic", "sextic"] {
            let rep = validate_frame(&standard_frame(name).unwrap(), &grid, 1e-6).unwrap();
            assert!(rep.max() < 1e-6, "{name}: {rep:?}");
        }
    }

    #[test]
    fn order_limit_enforced() {
        let err = Frame::with_order(
            1,
            Poly::from_real(&[0.0, 0.0, 1.0]),
            Poly::one(),
            Poly::zero(),
            Poly::one(),
        )
        .unwrap_err();
        assert!(matches!(err, QesError::FrameOrder { name: "g1", .. }));
        let fr = Frame::new(
            Poly::from_real(&[0.0, 0.0, 0.0, 1.0]),
            Poly::one(),
            Poly::zero(),
            Poly::one(),
        )
        .unwrap();
        assert_eq!(fr.order(), 3);
    }

    #[test]
    fn descriptor_json_shape() {
        let fr = standard_frame("rational-x").unwrap();
        let json = serde_json::to_value(fr.descriptor()).unwrap();
        assert_eq!(json["M"], 2);
        assert_eq!(json["f0"], serde_json::json!([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]));
        assert_eq!(json["samplers"], "rational-x");
        let back = Frame::from_descriptor(&serde_json::from_value(json).unwrap()).unwrap();
        assert_eq!(back.f1(), fr.f1());
    }

    #[test]
    fn ansatz_needs_nonzero_top() {
        assert!(Ansatz::real(0.0, &[1.0, 0.0], 0.0).is_err());
        assert_eq!(Ansatz::real(0.0, &[0.0, 1.0], 0.0).unwrap().level(), 1);
    }
}
