//! Multi-start damped Gauss–Newton over one or more constraint systems.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSystem;
use crate::error::{QesError, Result};

const DIVERGED: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Damping {
    pub initial: f64,
    pub factor: f64,
    pub max_halvings: usize,
}

impl Default for Damping {
    fn default() -> Self {
        Damping {
            initial: 1.0,
            factor: 0.5,
            max_halvings: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub starts: usize,
    /// Sampling interval used for every unknown without an entry in `bounds`.
    #[serde(rename = "box")]
    pub default_box: (f64, f64),
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub tol_dedup: f64,
    pub damping: Damping,
    pub seed: u64,
    /// Treat every unknown as complex (two real coordinates).
    pub complex: bool,
    /// Explicit starting points tried before the random ones.
    pub initial: Vec<BTreeMap<String, Complex64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            starts: 500,
            default_box: (-3.0, 3.0),
            bounds: BTreeMap::new(),
            max_iter: 100,
            tol_residual: 1e-10,
            tol_dedup: 1e-6,
            damping: Damping::default(),
            seed: 0,
            complex: false,
            initial: Vec::new(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad_box = |(lo, hi): (f64, f64)| !(lo < hi) || !lo.is_finite() || !hi.is_finite();
        if self.starts == 0 && self.initial.is_empty() {
            return Err(QesError::InvalidInput("at least one start is required".into()));
        }
        if !(self.tol_residual > 0.0) || !(self.tol_dedup > 0.0) {
            return Err(QesError::InvalidInput("tolerances must be positive".into()));
        }
        if bad_box(self.default_box) || self.bounds.values().any(|b| bad_box(*b)) {
            return Err(QesError::InvalidInput("sampling intervals must be non-degenerate".into()));
        }
        if !(self.damping.factor > 0.0 && self.damping.factor < 1.0) {
            return Err(QesError::InvalidInput("backtracking factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub assignment: BTreeMap<String, Complex64>,
    /// Values pinned in the systems, kept alongside so the solution is complete.
    pub fixed: BTreeMap<String, Complex64>,
    pub residual_norm: f64,
    pub multiplicity_hint: usize,
    /// Number of (near-)zero singular values of the Jacobian; nonzero means
    /// the point lies on a continuous family.
    pub null_dimension: usize,
    /// Set when a polish was refused because the Jacobian is singular.
    pub singular: bool,
}

impl Solution {
    /// Unknowns and pinned values merged.
    pub fn values(&self) -> BTreeMap<String, Complex64> {
        let mut all = self.fixed.clone();
        all.extend(self.assignment.iter().map(|(k, v)| (k.clone(), *v)));
        all
    }

    pub fn get(&self, name: &str) -> Option<Complex64> {
        self.assignment.get(name).or_else(|| self.fixed.get(name)).copied()
    }
}

/// Several systems sharing unknowns by name.
#[derive(Clone, Debug)]
pub struct JointSystem {
    systems: Vec<ConstraintSystem>,
    unknowns: Vec<String>,
    fixed: BTreeMap<String, Complex64>,
    /// For each system, the global index of each of its unknowns.
    maps: Vec<Vec<usize>>,
}

impl JointSystem {
    pub fn new(systems: &[ConstraintSystem]) -> Result<JointSystem> {
        if systems.is_empty() {
            return Err(QesError::InvalidInput("no systems to solve".into()));
        }
        let mut fixed: BTreeMap<String, Complex64> = BTreeMap::new();
        for sys in systems {
            for (k, v) in sys.fixed() {
                if let Some(old) = fixed.insert(k.clone(), *v) {
                    if old != *v {
                        return Err(QesError::InvalidInput(format!(
                            "{k} is pinned to different values"
                        )));
                    }
                }
            }
        }
        let mut pinned = Vec::with_capacity(systems.len());
        for sys in systems {
            let mut s = sys.clone();
            for (k, v) in &fixed {
                if s.unknowns().iter().any(|u| u == k) {
                    s = s.pin(k, *v)?;
                }
            }
            pinned.push(s);
        }
        let mut unknowns: Vec<String> = Vec::new();
        for s in &pinned {
            for u in s.unknowns() {
                if !unknowns.contains(u) {
                    unknowns.push(u.clone());
                }
            }
        }
        let maps = pinned
            .iter()
            .map(|s| {
                s.unknowns()
                    .iter()
                    .map(|u| unknowns.iter().position(|g| g == u).unwrap())
                    .collect()
            })
            .collect();
        Ok(JointSystem {
            systems: pinned,
            unknowns,
            fixed,
            maps,
        })
    }

    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn fixed(&self) -> &BTreeMap<String, Complex64> {
        &self.fixed
    }

    /// Total number of complex equations.
    pub fn equation_count(&self) -> usize {
        self.systems.iter().map(|s| s.equation_count()).sum()
    }

    /// Stacked residual, real and imaginary parts interleaved.
    pub fn residual(&self, values: &[Complex64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (sys, map) in self.systems.iter().zip(&self.maps) {
            let local: Vec<Complex64> = map.iter().map(|&i| values[i]).collect();
            out.extend(sys.residual_real(&local)?);
        }
        Ok(out)
    }

    fn to_complex(&self, x: &[f64], complex: bool) -> Vec<Complex64> {
        if complex {
            x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
        } else {
            x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
        }
    }

    fn real_residual(&self, x: &[f64], complex: bool) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.residual(&self.to_complex(x, complex))?))
    }

    fn jacobian(&self, x: &[f64], complex: bool, central: bool) -> Result<DMatrix<f64>> {
        let base = self.real_residual(x, complex)?;
        let mut jac = DMatrix::zeros(base.len(), x.len());
        let mut probe = x.to_vec();
        for col in 0..x.len() {
            let step = if central { 1e-5 } else { 1e-7 } * x[col].abs().max(1.0);
            probe[col] = x[col] + step;
            let plus = self.real_residual(&probe, complex)?;
            let column = if central {
                probe[col] = x[col] - step;
                let minus = self.real_residual(&probe, complex)?;
                (plus - minus) / (2.0 * step)
            } else {
                (plus - &base) / step
            };
            jac.set_column(col, &column);
            probe[col] = x[col];
        }
        Ok(jac)
    }

    /// Residual norm of a named assignment (unknowns only).
    pub fn residual_norm(&self, assignment: &BTreeMap<String, Complex64>) -> Result<f64> {
        let values = self
            .unknowns
            .iter()
            .map(|u| {
                assignment
                    .get(u)
                    .copied()
                    .ok_or_else(|| QesError::InvalidInput(format!("no value for {u}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(norm(&self.residual(&values)?))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least-squares Gauss–Newton step `-J^+ r`.
fn gn_step(jac: &DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-13 * smax.max(1e-300);
    svd.solve(&(-r), eps).ok()
}

struct Trajectory {
    x: Vec<f64>,
    residual: f64,
}

fn run_start(
    joint: &JointSystem,
    mut x: Vec<f64>,
    opts: &SolveOptions,
) -> Option<Trajectory> {
    let mut r = joint.real_residual(&x, opts.complex).ok()?;
    let mut f = r.norm();
    for _ in 0..opts.max_iter {
        if f < 1e-2 * opts.tol_residual || !f.is_finite() {
            break;
        }
        let jac = joint.jacobian(&x, opts.complex, false).ok()?;
        let Some(dx) = gn_step(&jac, &r) else { break };
        let slope = (jac.transpose() * &r).dot(&dx);
        let mut alpha = opts.damping.initial;
        let mut accepted = None;
        for _ in 0..=opts.damping.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
            if let Ok(rt) = joint.real_residual(&trial, opts.complex) {
                let ft = rt.norm();
                let armijo = 0.5 * ft * ft <= 0.5 * f * f + 1e-4 * alpha * slope.min(0.0);
                if ft.is_finite() && armijo && ft < f {
                    accepted = Some((trial, rt, ft));
                    break;
                }
            }
            alpha *= opts.damping.factor;
        }
        let Some((xn, rn, fnew)) = accepted else { break };
        let moved = xn
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = xn;
        r = rn;
        f = fnew;
        if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGED) {
            return None;
        }
        if moved < 1e-16 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    Some(Trajectory { x, residual: f })
}

fn starting_point(joint: &JointSystem, opts: &SolveOptions, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let mut x = Vec::new();
    for name in &joint.unknowns {
        let (lo, hi) = opts.bounds.get(name).copied().unwrap_or(opts.default_box);
        x.push(rng.gen_range(lo..hi));
        if opts.complex {
            x.push(rng.gen_range(lo..hi));
        }
    }
    x
}

fn explicit_point(joint: &JointSystem, opts: &SolveOptions, start: &BTreeMap<String, Complex64>) -> Vec<f64> {
    let mut x = Vec::new();
    for name in &joint.unknowns {
        let v = start.get(name).copied().unwrap_or_default();
        x.push(v.re);
        if opts.complex {
            x.push(v.im);
        }
    }
    x
}

fn null_dimension(jac: &DMatrix<f64>) -> usize {
    let sv = jac.clone().svd(false, false).singular_values;
    let smax = sv.max().max(1.0);
    let rank_deficit = jac.ncols().saturating_sub(sv.len());
    rank_deficit + sv.iter().filter(|&&s| s < 1e-6 * smax).count()
}

fn same_point(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).norm() <= tol * x.norm().max(y.norm()).max(1.0))
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Solve the stacked systems from many starts and return deduplicated roots.
pub fn solve(systems: &[ConstraintSystem], opts: &SolveOptions) -> Result<Vec<Solution>> {
    opts.validate()?;
    let joint = JointSystem::new(systems)?;
    if joint.unknowns.is_empty() {
        let r = norm(&joint.residual(&[])?);
        if r < opts.tol_residual {
            return Ok(vec![Solution {
                assignment: BTreeMap::new(),
                fixed: joint.fixed.clone(),
                residual_norm: r,
                multiplicity_hint: 1,
                null_dimension: 0,
                singular: false,
            }]);
        }
        return Err(QesError::NoConvergence { best_residual: r });
    }

    let mut starts: Vec<Vec<f64>> = opts
        .initial
        .iter()
        .map(|s| explicit_point(&joint, opts, s))
        .collect();
    starts.extend((0..opts.starts).map(|i| starting_point(&joint, opts, i)));

    let results: Vec<Option<Trajectory>> = starts
        .into_par_iter()
        .map(|x0| run_start(&joint, x0, opts))
        .collect();

    let best = results
        .iter()
        .flatten()
        .map(|t| t.residual)
        .fold(f64::INFINITY, f64::min);

    let mut clusters: Vec<(Vec<Complex64>, f64, usize)> = Vec::new();
    for t in results.into_iter().flatten() {
        if !(t.residual < opts.tol_residual) {
            continue;
        }
        let point = joint.to_complex(&t.x, opts.complex);
        match clusters
            .iter_mut()
            .find(|(rep, _, _)| same_point(rep, &point, opts.tol_dedup))
        {
            Some(entry) => {
                entry.2 += 1;
                if t.residual < entry.1 {
                    entry.0 = point;
                    entry.1 = t.residual;
                }
            }
            None => clusters.push((point, t.residual, 1)),
        }
    }
    if clusters.is_empty() {
        return Err(QesError::NoConvergence {
            best_residual: best,
        });
    }
    clusters.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lexicographic(&a.0, &b.0)));

    let mut out = Vec::with_capacity(clusters.len());
    for (point, _, count) in clusters {
        // re-check against the stacked systems rather than trusting the iteration
        let residual = norm(&joint.residual(&point)?);
        if !(residual < opts.tol_residual) {
            continue;
        }
        let x: Vec<f64> = flatten(&point, opts.complex);
        let jac = joint.jacobian(&x, opts.complex, true)?;
        out.push(Solution {
            assignment: joint.unknowns.iter().cloned().zip(point).collect(),
            fixed: joint.fixed.clone(),
            residual_norm: residual,
            multiplicity_hint: count,
            null_dimension: null_dimension(&jac),
            singular: false,
        });
    }
    if out.is_empty() {
        return Err(QesError::NoConvergence {
            best_residual: best,
        });
    }
    Ok(out)
}

fn flatten(point: &[Complex64], complex: bool) -> Vec<f64> {
    if complex {
        point.iter().flat_map(|c| [c.re, c.im]).collect()
    } else {
        point.iter().map(|c| c.re).collect()
    }
}

/// Extra Newton steps with a central-difference Jacobian. The solution is
/// returned unchanged, with `singular` set, when the Jacobian has a null
/// direction; otherwise the residual never increases.
pub fn polish(sol: &Solution, systems: &[ConstraintSystem], tol: f64) -> Result<Solution> {
    let joint = JointSystem::new(systems)?;
    let complex = sol.assignment.values().any(|v| v.im != 0.0);
    let point: Vec<Complex64> = joint
        .unknowns
        .iter()
        .map(|u| {
            sol.get(u)
                .ok_or_else(|| QesError::InvalidInput(format!("no value for {u}")))
        })
        .collect::<Result<_>>()?;
    let mut x = flatten(&point, complex);
    let mut r = joint.real_residual(&x, complex)?;
    let mut f = r.norm();
    let start = f;
    let jac = joint.jacobian(&x, complex, true)?;
    if null_dimension(&jac) > 0 {
        return Ok(Solution {
            singular: true,
            null_dimension: null_dimension(&jac),
            residual_norm: start,
            ..sol.clone()
        });
    }
    for _ in 0..20 {
        if f <= tol {
            break;
        }
        let jac = joint.jacobian(&x, complex, true)?;
        let Some(dx) = gn_step(&jac, &r) else { break };
        let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
        let rt = joint.real_residual(&trial, complex)?;
        if !(rt.norm() < f) {
            break;
        }
        x = trial;
        r = rt;
        f = r.norm();
    }
    let values = joint.to_complex(&x, complex);
    let jac = joint.jacobian(&x, complex, true)?;
    Ok(Solution {
        assignment: joint.unknowns.iter().cloned().zip(values).collect(),
        fixed: joint.fixed.clone(),
        residual_norm: f,
        multiplicity_hint: sol.multiplicity_hint,
        null_dimension: null_dimension(&jac),
        singular: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{excited_system, Template};
    use crate::frame::{standard_frame, Ansatz};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn harmonic_linear() -> ConstraintSystem {
        let fr = standard_frame("harmonic").unwrap();
        let ground = Ansatz::real(0.0, &[1.0], 0.0).unwrap();
        excited_system(&Template::fixed(&fr, &ground), 2, true)
            .unwrap()
            .pin("E_2", re(4.0))
            .unwrap()
    }

    #[test]
    fn linear_system_solved_in_one_step() {
        let sys = harmonic_linear();
        let joint = JointSystem::new(std::slice::from_ref(&sys)).unwrap();
        let x0 = vec![2.0, -1.5];
        let r = joint.real_residual(&x0, false).unwrap();
        let jac = joint.jacobian(&x0, false, false).unwrap();
        let dx = gn_step(&jac, &r).unwrap();
        let x1: Vec<f64> = x0.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
        assert!(joint.real_residual(&x1, false).unwrap().norm() < 1e-7);
        assert!((x1[0] + 0.5).abs() < 1e-7 && x1[1].abs() < 1e-7);
    }

    #[test]
    fn linear_system_unique_cluster() {
        let opts = SolveOptions {
            starts: 8,
            ..SolveOptions::default()
        };
        let sols = solve(&[harmonic_linear()], &opts).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].multiplicity_hint, 8);
        assert!((sols[0].assignment["c2_0"] + 0.5).norm() < 1e-10);
        assert_eq!(sols[0].null_dimension, 0);
    }

    #[test]
    fn conflicting_pins_rejected() {
        let a = harmonic_linear();
        let b = harmonic_linear().pin("E_2", re(5.0)).unwrap();
        assert!(JointSystem::new(&[a, b]).is_err());
    }

    #[test]
    fn invalid_options_rejected() {
        let opts = SolveOptions {
            default_box: (1.0, 1.0),
            ..SolveOptions::default()
        };
        assert!(opts.validate().is_err());
    }

    #[test]
    fn polish_keeps_exact_solution() {
        let sols = solve(
            &[harmonic_linear()],
            &SolveOptions {
                starts: 2,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let mut exact = sols[0].clone();
        exact.assignment.insert("c2_0".into(), re(-0.5));
        exact.assignment.insert("c2_1".into(), re(0.0));
        let p = polish(&exact, &[harmonic_linear()], 1e-14).unwrap();
        assert_eq!(p.assignment, exact.assignment);
        assert_eq!(p.residual_norm, 0.0);
    }
}
