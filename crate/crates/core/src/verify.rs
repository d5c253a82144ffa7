//! Independent checks of claimed eigenpairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QesError, Result};
use crate::frame::{Ansatz, Frame};
use crate::potential::PotentialExpr;
use crate::quad;
use crate::rational::RationalFn;

/// Absolute tolerance for the quadratures used here.
pub const QUAD_TOL: f64 = 1e-10;

const GRID_STEP: f64 = 1e-4;
const ENERGY_STEP: f64 = 1e-3;
const RAYLEIGH_REL_TOL: f64 = 1e-9;

/// Fourth-order central second derivative.
pub fn second_derivative<F: Fn(f64) -> Complex64 + ?Sized>(f: &F, x: f64, h: f64) -> Complex64 {
    (-f(x + 2.0 * h) + f(x + h) * 16.0 - f(x) * 30.0 + f(x - h) * 16.0 - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Fourth-order central first derivative.
pub fn first_derivative<F: Fn(f64) -> Complex64 + ?Sized>(f: &F, x: f64, h: f64) -> Complex64 {
    (-f(x + 2.0 * h) + f(x + h) * 8.0 - f(x - h) * 8.0 + f(x - 2.0 * h)) / (12.0 * h)
}

/// `n` equally spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Max numerator coefficient of `P^2 + P' - V + E` with `P = psi'/psi`,
/// after scaling the common denominator to unit max coefficient.
pub fn schrodinger_residual_symbolic(frame: &Frame, v: &RationalFn, state: &Ansatz) -> Result<f64> {
    let p = frame.log_derivative(state)?;
    let r = &(&(&p * &p) + &p.deriv_x(frame.h1())) - v;
    let r = &r + &RationalFn::constant(state.energy);
    let scale = r.den().max_abs();
    if scale == 0.0 {
        return Err(QesError::DegenerateDenominator);
    }
    Ok(r.num().max_abs() / scale)
}

/// Max over the grid of `|-psi'' + (V - E) psi| / |psi|`, skipping nodes of
/// psi and points where V is not finite.
pub fn schrodinger_residual_grid<V, P>(v: &V, psi: &P, energy: Complex64, grid: &[f64]) -> f64
where
    V: Fn(f64) -> Complex64 + ?Sized,
    P: Fn(f64) -> Complex64 + ?Sized,
{
    let peak = grid.iter().map(|&x| psi(x).norm()).fold(0.0, f64::max);
    grid.iter()
        .filter_map(|&x| {
            let p = psi(x);
            let vx = v(x);
            if p.norm() <= 1e-6 * peak || !vx.is_finite() {
                return None;
            }
            let r = -second_derivative(psi, x, GRID_STEP) + (vx - energy) * p;
            Some(r.norm() / p.norm().max(1e-30))
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub normalizable: bool,
    /// Slope of `log|psi|^2` against `x^2` on the slower-decaying tail.
    pub decay_rate: f64,
    pub norm_squared: f64,
}

fn tail_slope<P: Fn(f64) -> Complex64 + ?Sized>(psi: &P, from: f64, to: f64) -> f64 {
    let pts: Vec<(f64, f64)> = linspace(from, to, 21)
        .into_iter()
        .filter_map(|x| {
            let a = psi(x).norm();
            (a > 0.0 && a.is_finite()).then(|| (x * x, 2.0 * a.ln()))
        })
        .collect();
    if pts.len() < 2 {
        // everything underflowed (or overflowed) past the interval end
        let probe = psi(to).norm();
        return if probe == 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Tail decay check on both sides of `[a, b]` (tails sampled over
/// `[b, 2b]` and `[2a, a]`) plus the finite norm on the interval.
pub fn normalizable<P: Fn(f64) -> Complex64 + ?Sized>(psi: &P, interval: (f64, f64)) -> NormReport {
    let (a, b) = interval;
    let right = tail_slope(psi, b, 2.0 * b);
    let left = tail_slope(psi, 2.0 * a, a);
    let rate = right.max(left);
    let norm_squared = quad::integrate(&|x| Complex64::new(psi(x).norm_sqr(), 0.0), a, b, QUAD_TOL).re;
    NormReport {
        normalizable: rate < -1e-3 && norm_squared.is_finite(),
        decay_rate: rate,
        norm_squared,
    }
}

/// `|<a|b>| / (|a| |b|)` with the conjugated inner product.
pub fn orthogonality<A, B>(a: &A, b: &B, interval: (f64, f64)) -> f64
where
    A: Fn(f64) -> Complex64 + ?Sized,
    B: Fn(f64) -> Complex64 + ?Sized,
{
    let (lo, hi) = interval;
    let ab = quad::integrate(&|x| a(x).conj() * b(x), lo, hi, QUAD_TOL);
    let aa = quad::integrate(&|x| Complex64::new(a(x).norm_sqr(), 0.0), lo, hi, QUAD_TOL).re;
    let bb = quad::integrate(&|x| Complex64::new(b(x).norm_sqr(), 0.0), lo, hi, QUAD_TOL).re;
    ab.norm() / (aa * bb).sqrt()
}

/// Max over the grid of `|conj(V(-x)) - V(x)|`.
pub fn pt_symmetry_check<V: Fn(f64) -> Complex64 + ?Sized>(v: &V, grid: &[f64]) -> f64 {
    grid.iter()
        .filter_map(|&x| {
            let d = (v(-x).conj() - v(x)).norm();
            d.is_finite().then_some(d)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    /// `<psi|H psi> / <psi|psi>` by quadrature.
    pub quotient: Complex64,
    /// Median of `(H psi)/psi` over a grid, real and imaginary parts separately.
    pub pointwise: Complex64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn rayleigh_energy<V, P>(v: &V, psi: &P, interval: (f64, f64)) -> EnergyEstimate
where
    V: Fn(f64) -> Complex64 + ?Sized,
    P: Fn(f64) -> Complex64 + ?Sized,
{
    let (a, b) = interval;
    let h_psi = |x: f64| -second_derivative(psi, x, ENERGY_STEP) + v(x) * psi(x);
    let den = quad::integrate(&|x| Complex64::new(psi(x).norm_sqr(), 0.0), a, b, QUAD_TOL);
    // the finite-difference integrand carries rounding noise near 1e-9 |psi|^2,
    // so an absolute target below that only exhausts the panel budget
    let num = quad::integrate(&|x| psi(x).conj() * h_psi(x), a, b, RAYLEIGH_REL_TOL * den.re.max(QUAD_TOL));
    let grid = linspace(a, b, 201);
    let peak = grid.iter().map(|&x| psi(x).norm()).fold(0.0, f64::max);
    let ratios: Vec<Complex64> = grid
        .iter()
        .filter_map(|&x| {
            let p = psi(x);
            if p.norm() <= 1e-3 * peak {
                return None;
            }
            let r = h_psi(x) / p;
            r.is_finite().then_some(r)
        })
        .collect();
    EnergyEstimate {
        quotient: num / den.re,
        pointwise: Complex64::new(
            median(ratios.iter().map(|r| r.re).collect()),
            median(ratios.iter().map(|r| r.im).collect()),
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportionality {
    /// Least-squares `s` in `a ~ s b`.
    pub scale: Complex64,
    /// `max |a - s b| / max |a|`.
    pub max_deviation: f64,
}

/// How well `a` is a constant multiple of `b`, over the finite pairs.
pub fn proportionality(a: &[Complex64], b: &[Complex64]) -> Proportionality {
    let pairs: Vec<(Complex64, Complex64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let num: Complex64 = pairs.iter().map(|(x, y)| y.conj() * x).sum();
    let den: f64 = pairs.iter().map(|(_, y)| y.norm_sqr()).sum();
    let scale = if den > 0.0 { num / den } else { Complex64::new(0.0, 0.0) };
    let peak = pairs.iter().map(|(x, _)| x.norm()).fold(0.0, f64::max);
    let worst = pairs.iter().map(|(x, y)| (x - scale * y).norm()).fold(0.0, f64::max);
    Proportionality {
        scale,
        max_deviation: if peak > 0.0 { worst / peak } else { worst },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenpairReport {
    pub symbolic_residual_max: f64,
    pub grid_residual_max: f64,
    pub normalizable: bool,
    pub decay_rate: f64,
    /// Real-axis poles of V (in the frame variable) and of psi.
    pub pole_report: Vec<f64>,
    pub energy: Complex64,
    pub energy_estimate: EnergyEstimate,
}

/// Real zeros of the frame's f, where `f^lambda` is singular for `Re lambda < 0`.
fn real_roots(p: &crate::poly::Poly) -> Vec<f64> {
    crate::roots::clustered_roots(p)
        .into_iter()
        .filter(|c| c.center.im.abs() < 1e-8 * c.center.norm().max(1.0))
        .map(|c| c.center.re)
        .collect()
}

/// Run every check on one state of a built potential.
pub fn eigenpair_report(
    potential: &PotentialExpr,
    state: &Ansatz,
    interval: (f64, f64),
    grid_points: usize,
) -> Result<EigenpairReport> {
    let frame = &potential.frame;
    let symbolic = schrodinger_residual_symbolic(frame, &potential.v, state)?;
    let psi = frame.psi(state)?;
    let v = potential.sampler();
    let grid = avoid_nodes(&linspace(interval.0, interval.1, grid_points));
    let grid_res = schrodinger_residual_grid(&*v, &*psi, state.energy, &grid);
    let norm = normalizable(&*psi, interval);
    let mut poles = real_roots(potential.v.den());
    if state.lambda.re < 0.0 {
        poles.extend(real_roots(frame.f0()));
    }
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    Ok(EigenpairReport {
        symbolic_residual_max: symbolic,
        grid_residual_max: grid_res,
        normalizable: norm.normalizable,
        decay_rate: norm.decay_rate,
        pole_report: poles,
        energy: state.energy,
        energy_estimate: rayleigh_energy(&*v, &*psi, interval),
    })
}

/// Nudge grid points off exact zero, where odd states and many frames
/// have removable trouble for finite differences.
fn avoid_nodes(grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&x| if x == 0.0 { 1e-3 } else { x })
        .collect()
}
