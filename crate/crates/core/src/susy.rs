//! Superpotential chains, the master function U and branch solving from U.
//!
//! Conventions: `V = W_L^2 - W_L'` with ground energy 0, consecutive
//! superpotentials satisfy `W_k^2 + W_k' + E_k = W_{k+1}^2 - W_{k+1}' + E_{k+1}`,
//! `W+^(k) = W_k + W_{k+1}`, and `U = W+^(L) W+^(L+1)`. All rational
//! functions here are in the frame variable, which is x for the frames
//! shipped with the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QesError, Result};
use crate::frame::{Ansatz, Frame};
use crate::jet::Jet;
use crate::poly::Poly;
use crate::quad;
use crate::rational::{RationalFn, GCD_TOL};
use crate::roots;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const JET_LEN: usize = 5;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superpotential {
    pub w: RationalFn,
}

impl Superpotential {
    pub fn new(w: RationalFn) -> Result<Superpotential> {
        Ok(Superpotential {
            w: w.normalize(GCD_TOL)?,
        })
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        self.w.eval_real(x)
    }

    /// `W^2 - W'`.
    pub fn potential(&self) -> Result<RationalFn> {
        (&(&self.w * &self.w) - &self.w.derivative()).normalize(GCD_TOL)
    }

    /// Distance to another superpotential as canonical coefficient difference.
    pub fn distance(&self, other: &Superpotential) -> Result<f64> {
        self.w.coeff_distance(&other.w)
    }
}

/// `W = -psi'/psi` of a frame state.
pub fn superpotential_from_state(frame: &Frame, state: &Ansatz) -> Result<Superpotential> {
    Superpotential::new(-&frame.log_derivative(state)?)
}

/// `W_L, W_{L+1}, ...` from consecutive eigenstates, by stripping each state
/// with the intertwiners `d/dx + W_j` of the levels below it.
pub fn chain_from_states(frame: &Frame, states: &[Ansatz]) -> Result<Vec<Superpotential>> {
    let mut chain: Vec<Superpotential> = Vec::with_capacity(states.len());
    for state in states {
        let mut q = frame.log_derivative(state)?.normalize(GCD_TOL)?;
        for w in &chain {
            // (d/dx + W) acting on phi multiplies it by s = q + W, so the
            // log-derivative gains s'/s
            let s = (&q + &w.w).normalize(GCD_TOL)?;
            if s.is_zero() {
                return Err(QesError::DegenerateState);
            }
            let ls = (&s.derivative() / &s)?;
            q = (&q + &ls).normalize(GCD_TOL)?;
        }
        chain.push(Superpotential::new(-&q)?);
    }
    Ok(chain)
}

fn max_on_grid(r: &RationalFn, grid: &[f64]) -> f64 {
    grid.iter()
        .filter_map(|&x| r.eval_real(x).ok())
        .map(|v| v.norm())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

/// Max of `|W_k^2 + W_k' + E_k - W_{k+1}^2 + W_{k+1}' - E_{k+1}|` on the grid.
pub fn riccati_residual(
    wk: &Superpotential,
    wk1: &Superpotential,
    ek: Complex64,
    ek1: Complex64,
    grid: &[f64],
) -> f64 {
    let lhs = &(&wk.w * &wk.w) + &wk.w.derivative();
    let rhs = &(&wk1.w * &wk1.w) - &wk1.w.derivative();
    let r = &(&lhs - &rhs) + &RationalFn::constant(ek - ek1);
    max_on_grid(&r, grid)
}

/// `W+^(k) = W_k + W_{k+1}` for each consecutive pair.
pub fn plus_functions(chain: &[Superpotential]) -> Result<Vec<RationalFn>> {
    chain
        .windows(2)
        .map(|p| (&p[0].w + &p[1].w).normalize(GCD_TOL))
        .collect()
}

/// Max over the grid of the two-level master residual
/// `A B (B - A) - (A B)' + (E2 - E1) A + E1 B` with `A = W+^(L)`, `B = W+^(L+1)`.
pub fn master_residual(a: &RationalFn, b: &RationalFn, e1: Complex64, e2: Complex64, grid: &[f64]) -> f64 {
    let ab = a * b;
    let r = &(&(&ab * &(b - a)) - &ab.derivative())
        + &(&a.scale(e2 - e1) + &b.scale(e1));
    max_on_grid(&r, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    pub location: Complex64,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UFunction {
    pub u: RationalFn,
    pub zeros: Vec<RootInfo>,
    pub poles: Vec<RootInfo>,
}

impl UFunction {
    pub fn new(u: RationalFn) -> Result<UFunction> {
        let u = u.normalize(GCD_TOL)?;
        let info = |cl: Vec<roots::RootCluster>| {
            let mut v: Vec<RootInfo> = cl
                .into_iter()
                .map(|k| RootInfo {
                    location: snap(k.center),
                    order: k.multiplicity,
                })
                .collect();
            v.sort_by(|a, b| {
                a.location
                    .re
                    .total_cmp(&b.location.re)
                    .then(a.location.im.total_cmp(&b.location.im))
            });
            v
        };
        Ok(UFunction {
            zeros: info(u.zeros()),
            poles: info(u.poles()),
            u,
        })
    }
}

/// Round components that are pure rounding noise to zero.
fn snap(z: Complex64) -> Complex64 {
    let tiny = 1e-10 * z.norm().max(1.0);
    Complex64::new(
        if z.re.abs() < tiny { 0.0 } else { z.re },
        if z.im.abs() < tiny { 0.0 } else { z.im },
    )
}

/// `U = W+^(L) W+^(L+1)`.
pub fn u_function(w_plus_l: &RationalFn, w_plus_l1: &RationalFn) -> Result<UFunction> {
    UFunction::new(w_plus_l * w_plus_l1)
}

/// With only two levels U is `W+^(L)` itself.
pub fn u_function_two_state(w_plus_l: &RationalFn) -> Result<UFunction> {
    UFunction::new(w_plus_l.clone())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealZero {
    pub x: f64,
    pub order: usize,
    /// Sign of U' at the zero (0 when it vanishes).
    pub derivative_sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UClassification {
    pub real_zeros: Vec<RealZero>,
    /// Sign of U on each segment cut out by the real zeros, left to right.
    pub segment_signs: Vec<i8>,
    pub real_poles: Vec<f64>,
    /// Exactly two simple real zeros, U <= 0 between and > 0 outside,
    /// U' < 0 at the lower zero and > 0 at the upper one, no real poles.
    pub admissible: bool,
}

fn sign(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

fn is_real_root(z: Complex64) -> bool {
    z.im.abs() <= 1e-8 * z.norm().max(1.0)
}

/// Zero structure of a real U on the real axis.
pub fn classify_u(u: &UFunction, interval: (f64, f64)) -> Result<UClassification> {
    let (a, b) = interval;
    for i in 0..=200 {
        let x = a + (b - a) * i as f64 / 200.0;
        if let Ok(v) = u.u.eval_real(x) {
            if v.im.abs() > 1e-10 * v.norm().max(1.0) {
                return Err(QesError::ComplexValuedOnInterval { x, imag: v.im });
            }
        }
    }
    let du = u.u.derivative();
    let real_zeros: Vec<RealZero> = u
        .zeros
        .iter()
        .filter(|z| is_real_root(z.location))
        .map(|z| {
            let x = z.location.re;
            let d = du.eval_real(x).map(|v| v.re).unwrap_or(f64::NAN);
            RealZero {
                x,
                order: z.order,
                derivative_sign: sign(d, 1e-8),
            }
        })
        .collect();
    let real_poles: Vec<f64> = u
        .poles
        .iter()
        .filter(|p| is_real_root(p.location))
        .map(|p| p.location.re)
        .collect();

    let mut probes = Vec::new();
    match (real_zeros.first(), real_zeros.last()) {
        (Some(first), Some(last)) => {
            probes.push(first.x - 1.0);
            for w in real_zeros.windows(2) {
                probes.push(0.5 * (w[0].x + w[1].x));
            }
            probes.push(last.x + 1.0);
        }
        _ => probes.push(0.5 * (a + b)),
    }
    let segment_signs: Vec<i8> = probes
        .iter()
        .map(|&x| u.u.eval_real(x).map(|v| sign(v.re, 0.0)).unwrap_or(0))
        .collect();

    let admissible = real_poles.is_empty()
        && real_zeros.len() == 2
        && real_zeros.iter().all(|z| z.order == 1)
        && segment_signs == [1, -1, 1]
        && real_zeros[0].derivative_sign < 0
        && real_zeros[1].derivative_sign > 0;
    Ok(UClassification {
        real_zeros,
        segment_signs,
        real_poles,
        admissible,
    })
}

/// Which root of the quadratic for `W+^(L)` to start from at the leftmost
/// grid point: `+` or `-` principal square root of the discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SusyOptions {
    pub branch: Branch,
    /// Two levels (U is W+^(L)) or three (U = W+^(L) W+^(L+1)).
    pub levels: usize,
    /// Continue through near-zero discriminants instead of failing.
    pub allow_collision: bool,
}

impl Default for SusyOptions {
    fn default() -> Self {
        SusyOptions {
            branch: Branch::Plus,
            levels: 3,
            allow_collision: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// The tracked root moved to the other sign of the principal square root.
    LabelSwap,
    /// Discriminant vanished; the point is left undefined.
    Collision,
    /// A pole of U or of the tracked root; the point is left undefined.
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchEvent {
    pub x: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WDiagnostics {
    pub index: usize,
    pub poles: Vec<f64>,
    /// W > 0 at the right end and W < 0 at the left end of the grid.
    pub confining: bool,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusyFromU {
    pub x: Vec<f64>,
    pub w_plus: Vec<Complex64>,
    /// `W_L, W_{L+1}` and, with three levels, `W_{L+2}`.
    pub w: Vec<Vec<Complex64>>,
    pub v: Vec<Complex64>,
    pub events: Vec<BranchEvent>,
    /// Disagreement between the two ways of obtaining `W_{L+1}`.
    pub consistency: f64,
    pub diagnostics: Vec<WDiagnostics>,
    pub physical: bool,
    pub quadratic_fit: Option<QuadraticFit>,
}

fn chordal(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
}

/// The two root jets of `A W^2 + B W + C = 0`, `+` sign first, and the
/// discriminant relative to its natural scale.
fn quadratic_roots(u: &Jet, e1: Complex64, e2: Complex64) -> std::result::Result<([Jet; 2], f64), EventKind> {
    let du = u.derivative();
    let n = du.len();
    let trunc = |j: &Jet| Jet(j.0[..n].to_vec());
    let u = trunc(u);
    let a = &Jet::constant(e2 - e1, n) - &u;
    let b = -&du;
    let cc = &(&u * &u) + &u.scale(e1);
    let four_ac = (&a * &cc).scale(c(4.0));
    let disc = &(&b * &b) - &four_ac;
    let scale = b.value().norm_sqr().max(four_ac.value().norm());
    if a.value().norm() <= 1e-12 * (e2 - e1).norm().max(u.value().norm()).max(1e-300) {
        return Err(EventKind::Singular);
    }
    if disc.value().norm() <= 1e-14 * scale || scale == 0.0 {
        return Err(EventKind::Collision);
    }
    let r0 = disc.value().sqrt();
    let two_a = a.scale(c(2.0));
    let plus = &(&(-&b) + &disc.sqrt_with(r0)) / &two_a;
    let minus = &(&(-&b) + &disc.sqrt_with(-r0)) / &two_a;
    Ok(([plus, minus], disc.value().norm() / scale))
}

/// Index of the root at `x` continuing `jet` from `x0`. When the jet
/// prediction does not clearly separate the two roots the step is halved.
#[allow(clippy::too_many_arguments)]
fn follow(u: &RationalFn, e1: Complex64, e2: Complex64, x0: f64, jet: &Jet, x: f64, roots: &[Jet; 2], depth: usize) -> usize {
    let guess = jet.eval(x - x0);
    let d0 = chordal(roots[0].value(), guess);
    let d1 = chordal(roots[1].value(), guess);
    let (near, far) = if d0 <= d1 { (d0, d1) } else { (d1, d0) };
    if near <= 0.1 * far || depth >= 24 {
        return usize::from(d1 < d0);
    }
    let mid = 0.5 * (x0 + x);
    let mid_roots = Jet::of_rational(u, c(mid), JET_LEN).and_then(|j| quadratic_roots(&j, e1, e2).ok());
    let Some((mid_roots, _)) = mid_roots else {
        return usize::from(d1 < d0);
    };
    let k = follow(u, e1, e2, x0, jet, mid, &mid_roots, depth + 1);
    follow(u, e1, e2, mid, &mid_roots[k], x, roots, depth + 1)
}

struct Tracked {
    w_plus: Option<Jet>,
    u: Option<Jet>,
}

/// Track `W+^(L)` across the grid and recover the superpotentials.
///
/// The grid must be increasing and should avoid double zeros of U, where
/// the two roots touch. For real U and real energies both roots must stay
/// real.
pub fn susy_from_u(
    u: &RationalFn,
    e1: Complex64,
    e2: Complex64,
    grid: &[f64],
    opts: &SusyOptions,
) -> Result<SusyFromU> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(QesError::InvalidInput("grid must be increasing with at least two points".into()));
    }
    if opts.levels != 2 && opts.levels != 3 {
        return Err(QesError::InvalidInput("levels must be 2 or 3".into()));
    }
    // probe points either side of every place a W can blow up
    let candidates = singular_candidates(u, e1, e2, opts.levels, grid);
    let mut xs: Vec<(f64, bool)> = grid.iter().map(|&x| (x, true)).collect();
    for &p in &candidates {
        for d in [-1e-2, -1e-3, 1e-3, 1e-2] {
            xs.push((p + d, false));
        }
    }
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    xs.dedup_by(|a, b| a.0 == b.0);

    let real_problem = u.is_real(0.0) && e1.im == 0.0 && e2.im == 0.0;
    let mut events = Vec::new();
    let mut track: Vec<Tracked> = Vec::with_capacity(xs.len());
    let mut prev: Option<(f64, Jet, usize)> = None;

    for &(x, _) in &xs {
        let Some(uj) = Jet::of_rational(u, c(x), JET_LEN) else {
            events.push(BranchEvent { x, kind: EventKind::Singular });
            track.push(Tracked { w_plus: None, u: None });
            continue;
        };
        if opts.levels == 2 {
            track.push(Tracked { w_plus: Some(uj.clone()), u: Some(uj) });
            continue;
        }
        match quadratic_roots(&uj, e1, e2) {
            Err(kind) => {
                if kind == EventKind::Collision && !opts.allow_collision {
                    return Err(QesError::BranchCollision { x });
                }
                events.push(BranchEvent { x, kind });
                track.push(Tracked { w_plus: None, u: Some(uj) });
            }
            Ok((roots, _)) => {
                let w0 = roots[0].value();
                if real_problem && w0.im.abs() > 1e-10 * w0.norm().max(1.0) {
                    return Err(QesError::NoRealBranch { x });
                }
                let pick = match &prev {
                    None => match opts.branch {
                        Branch::Plus => 0,
                        Branch::Minus => 1,
                    },
                    Some((x0, jet, _)) => follow(u, e1, e2, *x0, jet, x, &roots, 0),
                };
                if let Some((_, _, label)) = &prev {
                    if *label != pick {
                        events.push(BranchEvent { x, kind: EventKind::LabelSwap });
                    }
                }
                let chosen = roots[pick].clone();
                prev = Some((x, chosen.clone(), pick));
                track.push(Tracked { w_plus: Some(chosen), u: Some(uj) });
            }
        }
    }

    let nan = Complex64::new(f64::NAN, f64::NAN);
    let levels = opts.levels;
    let mut all_w: Vec<Vec<Complex64>> = vec![Vec::with_capacity(track.len()); levels];
    let mut all_v = Vec::with_capacity(track.len());
    let mut all_wp = Vec::with_capacity(track.len());
    let mut consistency = 0.0f64;
    for t in &track {
        let (Some(wp), Some(uj)) = (&t.w_plus, &t.u) else {
            for w in all_w.iter_mut() {
                w.push(nan);
            }
            all_v.push(nan);
            all_wp.push(nan);
            continue;
        };
        all_wp.push(wp.value());
        let recovered = recover(wp, uj, e1, e2, levels);
        match recovered {
            Some((ws, v, gap)) => {
                for (k, w) in ws.into_iter().enumerate() {
                    all_w[k].push(w);
                }
                all_v.push(v);
                if gap.is_finite() {
                    consistency = consistency.max(gap);
                }
            }
            None => {
                for w in all_w.iter_mut() {
                    w.push(nan);
                }
                all_v.push(nan);
            }
        }
    }

    let diagnostics: Vec<WDiagnostics> = (0..levels)
        .map(|k| diagnose(k, &xs, &all_w[k], &candidates))
        .collect();
    let keep: Vec<usize> = xs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1)
        .map(|(i, _)| i)
        .collect();
    let pick = |v: &Vec<Complex64>| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let out_x: Vec<f64> = keep.iter().map(|&i| xs[i].0).collect();
    let v = pick(&all_v);
    let physical = diagnostics.iter().all(|d| d.poles.is_empty() && d.confining)
        && v.iter().all(|z| z.is_finite());
    Ok(SusyFromU {
        quadratic_fit: fit_quadratic(&out_x, &v),
        x: out_x,
        w_plus: pick(&all_wp),
        w: all_w.iter().map(pick).collect(),
        v,
        events,
        consistency,
        diagnostics,
        physical,
    })
}

/// W_L, W_{L+1}[, W_{L+2}], V and the consistency gap at one point.
fn recover(
    wp: &Jet,
    uj: &Jet,
    e1: Complex64,
    e2: Complex64,
    levels: usize,
) -> Option<(Vec<Complex64>, Complex64, f64)> {
    if wp.value().norm() < 1e-14 {
        return None;
    }
    let dwp = wp.derivative();
    let wm = &(&Jet::constant(e1, dwp.len()) - &dwp) / wp;
    let half = c(0.5);
    let wl = (wp + &wm).scale(half);
    let wl1 = (wp - &wm).scale(half);
    let v = wl.value() * wl.value() - wl.derivative_value(1);
    let mut ws = vec![wl.value(), wl1.value()];
    let mut gap = 0.0;
    if levels == 3 {
        let p = uj / wp;
        let dp = p.derivative();
        let diff = (e2 - e1 - dp.value()) / p.value();
        let wl2 = wl1.value() - diff;
        // W+^(L+1) = W_{L+1} + W_{L+2} must equal P
        let alt = (p.value() + diff) * 0.5;
        gap = (alt - wl1.value()).norm() / wl1.value().norm().max(1.0);
        ws.push(wl2);
    }
    if !v.is_finite() || ws.iter().any(|w| !w.is_finite()) {
        return None;
    }
    Some((ws, v, gap))
}

/// Real points where some W may have a pole: zeros of U, of U + E1 and of
/// E2 - E1 - U, plus real poles of U.
fn singular_candidates(u: &RationalFn, e1: Complex64, e2: Complex64, levels: usize, grid: &[f64]) -> Vec<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut polys: Vec<Poly> = vec![u.num().clone(), u.den().clone()];
    if levels == 3 {
        polys.push(u.num() + &u.den().scale(e1));
        polys.push(&u.den().scale(e2 - e1) - u.num());
    }
    let mut out: Vec<f64> = polys
        .iter()
        .flat_map(|p| roots::clustered_roots(&p.trim(1e-14)))
        .filter(|r| is_real_root(r.center))
        .map(|r| r.center.re)
        .filter(|&x| x > lo && x < hi)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

fn diagnose(index: usize, xs: &[(f64, bool)], w: &[Complex64], candidates: &[f64]) -> WDiagnostics {
    let at = |x: f64| {
        xs.iter()
            .position(|p| p.0 == x)
            .map(|i| w[i])
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    let mut poles = Vec::new();
    for &p in candidates {
        let near = at(p - 1e-3).norm().min(at(p + 1e-3).norm());
        let far = at(p - 1e-2).norm().max(at(p + 1e-2).norm());
        // a simple pole grows tenfold between the two probe distances
        if near.is_nan() || (near > 5.0 * far && near > 1.0) {
            poles.push(p);
        }
    }
    let finite: Vec<(f64, Complex64)> = xs
        .iter()
        .zip(w)
        .filter(|(p, v)| p.1 && v.is_finite())
        .map(|(p, v)| (p.0, *v))
        .collect();
    let max_abs = finite.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    let confining = match (finite.first(), finite.last()) {
        (Some(l), Some(r)) => l.1.re < 0.0 && r.1.re > 0.0,
        _ => false,
    };
    WDiagnostics {
        index,
        poles,
        confining,
        max_abs,
    }
}

/// Least-squares `V ~ a + b x^2` on the finite samples.
pub fn fit_quadratic(x: &[f64], v: &[Complex64]) -> Option<QuadraticFit> {
    let pts: Vec<(f64, Complex64)> = x
        .iter()
        .zip(v)
        .filter(|(_, v)| v.is_finite())
        .map(|(x, v)| (x * x, *v))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.re).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.re - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let max_deviation = pts
        .iter()
        .map(|p| (p.1 - c(a + b * p.0)).norm())
        .fold(0.0, f64::max);
    Some(QuadraticFit { a, b, max_deviation })
}

/// `b(b + 1)` for both root slopes at each real double zero of U: the
/// coefficient of the `1/(x - x0)^2` term the branch would put into V.
pub fn singular_strengths(u: &RationalFn, e1: Complex64, e2: Complex64) -> Vec<(f64, [Complex64; 2])> {
    double_zeros(u)
        .into_iter()
        .filter_map(|x0| {
            let j = Jet::of_rational(u, c(x0), 3)?;
            let u2 = j.0[2];
            // (E2 - E1) a^2 - 2 u2 a + u2 E1 = 0
            let qa = e2 - e1;
            let disc = (u2 * u2 - qa * u2 * e1).sqrt();
            let slopes = [(u2 + disc) / qa, (u2 - disc) / qa];
            let coeff = slopes.map(|a| {
                let b = (e1 - a) / (a * 2.0);
                b * (b + 1.0)
            });
            Some((x0, coeff))
        })
        .collect()
}

fn double_zeros(u: &RationalFn) -> Vec<f64> {
    let mut v: Vec<f64> = roots::clustered_roots(&u.num().trim(1e-14))
        .into_iter()
        .filter(|r| r.multiplicity >= 2 && is_real_root(r.center))
        .map(|r| r.center.re)
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub value: f64,
    pub double_zero: f64,
    pub iterations: usize,
    /// Smallest `|b(b+1)|` over the two slopes after tuning.
    pub singular_strength: f64,
}

/// Adjust a constant in U so that its first real double zero `x0` satisfies
/// `U''(x0)/2 = E1 (E2 - E1)`, the condition under which W_L stays regular
/// there and V picks up no `1/(x - x0)^2` term.
pub fn tune_constant<F>(family: F, e1: f64, e2: f64, guess: f64) -> Result<TuneReport>
where
    F: Fn(f64) -> Result<RationalFn>,
{
    let target = e1 * (e2 - e1);
    let residual = |k: f64| -> Result<(f64, f64)> {
        let u = family(k)?;
        let x0 = *double_zeros(&u).first().ok_or_else(|| {
            QesError::InvalidInput("U has no real double zero to tune".into())
        })?;
        let j = Jet::of_rational(&u, c(x0), 3).ok_or(QesError::NearPole { z: c(x0) })?;
        Ok((j.0[2].re - target, x0))
    };
    let (mut k0, mut k1) = (guess, guess * 1.1 + 0.1);
    let (mut f0, _) = residual(k0)?;
    let (mut f1, mut x0) = residual(k1)?;
    let mut iterations = 0;
    while f1.abs() > 1e-13 * target.abs().max(1.0) && iterations < 60 {
        if f1 == f0 {
            return Err(QesError::NoConvergence { best_residual: f1.abs() });
        }
        let k2 = k1 - f1 * (k1 - k0) / (f1 - f0);
        k0 = k1;
        f0 = f1;
        k1 = k2;
        (f1, x0) = residual(k1)?;
        iterations += 1;
    }
    if f1.abs() > 1e-10 * target.abs().max(1.0) {
        return Err(QesError::NoConvergence { best_residual: f1.abs() });
    }
    let strength = singular_strengths(&family(k1)?, c(e1), c(e2))
        .first()
        .map(|(_, s)| s[0].norm().min(s[1].norm()))
        .unwrap_or(0.0);
    Ok(TuneReport {
        value: k1,
        double_zero: x0,
        iterations,
        singular_strength: strength,
    })
}

/// Samples of `psi_k = (-d/dx + W_0) ... (-d/dx + W_{k-1}) exp(-int W_k)`,
/// up to an overall constant, for `k = level` (0 is the ground state).
///
/// `exp(-int W_k)` keeps real simple poles of `W_k` in closed form
/// (`(x - p)^(-r)`), integrates the regular remainder from 0 by quadrature,
/// and the operator product is applied exactly to the rational prefactor.
pub fn partner_state(chain: &[Superpotential], level: usize, grid: &[f64]) -> Result<Vec<Complex64>> {
    if level >= chain.len() {
        return Err(QesError::InvalidInput(format!(
            "level {level} needs a chain of at least {} superpotentials",
            level + 1
        )));
    }
    let wk = &chain[level].w;
    let mut prefactor = RationalFn::constant(c(1.0));
    for j in (0..level).rev() {
        let mult = &(wk + &chain[j].w) * &prefactor;
        prefactor = (&mult - &prefactor.derivative()).normalize(GCD_TOL)?;
    }

    let mut rest = wk.clone();
    let mut poles: Vec<(f64, Complex64)> = Vec::new();
    let dden = wk.den().derivative();
    for p in wk.poles() {
        if !is_real_root(p.center) {
            continue;
        }
        if p.multiplicity > 1 {
            return Err(QesError::InvalidInput(format!(
                "W has a pole of order {} on the real axis",
                p.multiplicity
            )));
        }
        let x0 = p.center.re;
        let r = wk.num().eval(c(x0)) / dden.eval(c(x0));
        let simple = RationalFn::new(Poly::constant(r), Poly::linear_factor(c(x0)))?;
        rest = (&rest - &simple).normalize(GCD_TOL)?;
        poles.push((x0, r));
    }

    let integrand = |t: f64| rest.eval_real(t).unwrap_or(ZERO);
    grid.iter()
        .map(|&x| {
            let integral = quad::integrate(&integrand, 0.0, x, 1e-13);
            let mut value = (-integral).exp();
            for &(p, r) in &poles {
                let d = x - p;
                let rounded = r.re.round();
                value *= if r.im.abs() < 1e-9 && (r.re - rounded).abs() < 1e-9 {
                    c(d).powi(-(rounded as i32))
                } else {
                    (-r * d.abs().ln()).exp()
                };
            }
            Ok(value * prefactor.eval_real(x)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::standard_frame;

    #[test]
    fn gaussian_ground_gives_linear_w() {
        let fr = standard_frame("harmonic").unwrap();
        let w = superpotential_from_state(&fr, &Ansatz::real(0.0, &[1.0], 0.0).unwrap()).unwrap();
        assert!(w.w.num().max_diff(&Poly::from_real(&[0.0, 1.0])) < 1e-15);
        assert_eq!(w.w.den(), &Poly::one());
    }

    #[test]
    fn equal_w_needs_energy_gap_two() {
        let w = Superpotential::new(Poly::from_real(&[0.0, 1.0]).into()).unwrap();
        let grid = crate::verify::linspace(-2.0, 2.0, 9);
        assert!((riccati_residual(&w, &w, c(0.0), c(0.0), &grid) - 2.0).abs() < 1e-14);
        assert!(riccati_residual(&w, &w, c(0.0), c(2.0), &grid) < 1e-14);
    }

    #[test]
    fn parabola_is_admissible() {
        let u = UFunction::new(Poly::from_real(&[-1.0, 0.0, 1.0]).into()).unwrap();
        let cl = classify_u(&u, (-5.0, 5.0)).unwrap();
        assert!(cl.admissible);
        assert_eq!(cl.segment_signs, [1, -1, 1]);
    }

    #[test]
    fn complex_u_rejected() {
        let u = UFunction::new(Poly::new(vec![Complex64::new(0.0, 1.0), c(1.0)]).into()).unwrap();
        assert!(matches!(
            classify_u(&u, (-1.0, 1.0)),
            Err(QesError::ComplexValuedOnInterval { .. })
        ));
    }

    #[test]
    fn oscillator_ladder_states() {
        let w = Superpotential::new(Poly::from_real(&[0.0, 1.0]).into()).unwrap();
        let chain = vec![w.clone(), w.clone(), w];
        let grid = crate::verify::linspace(-2.0, 2.0, 9);
        let psi1 = partner_state(&chain, 1, &grid).unwrap();
        let psi2 = partner_state(&chain, 2, &grid).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let g = (-x * x / 2.0).exp();
            assert!((psi1[i].re - 2.0 * x * g).abs() < 1e-12);
            assert!((psi2[i].re - (4.0 * x * x - 2.0) * g).abs() < 1e-12);
        }
    }
}
