//! Algebraic constraint systems obtained by collecting powers of `h` in the
//! Schrödinger equation for excited states and degenerate companions.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QesError, Result};
use crate::frame::{Ansatz, Frame};
use crate::potential::{nz, Accumulator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A coefficient that is either a literal constant or a named symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sym {
    Const(Complex64),
    Var(String),
}

impl Sym {
    pub fn var(name: impl Into<String>) -> Sym {
        Sym::Var(name.into())
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Sym::Var(n) => Some(n),
            Sym::Const(_) => None,
        }
    }
}

impl From<Complex64> for Sym {
    fn from(c: Complex64) -> Sym {
        Sym::Const(c)
    }
}

impl From<f64> for Sym {
    fn from(x: f64) -> Sym {
        Sym::Const(Complex64::new(x, 0.0))
    }
}

pub fn g1_name(l: usize) -> String {
    format!("g1_{l}")
}
pub fn c_name(level: usize, m: usize) -> String {
    format!("c{level}_{m}")
}
pub fn lambda_name(level: usize) -> String {
    format!("lambda_{level}")
}
pub fn energy_name(level: usize) -> String {
    format!("E_{level}")
}
pub fn companion_c_name(level: usize, m: usize) -> String {
    format!("ct{level}_{m}")
}
pub fn companion_lambda_name(level: usize) -> String {
    format!("lambda_t{level}")
}
pub fn companion_energy_name(level: usize) -> String {
    format!("Et{level}")
}

/// Frame plus ground state, with any subset of `g1`, `lambda_L`, `c^(L)`
/// left symbolic.
#[derive(Clone, Debug)]
pub struct Template {
    pub frame: Frame,
    pub level: usize,
    pub g1: Vec<Sym>,
    pub lambda: Sym,
    pub c: Vec<Sym>,
}

impl Template {
    /// Everything free: `g1_0..g1_{g1_len-1}`, `lambda_L`, `cL_0..cL_L`.
    pub fn free(frame: &Frame, level: usize, g1_len: usize) -> Template {
        Template {
            frame: frame.clone(),
            level,
            g1: (0..g1_len).map(|l| Sym::var(g1_name(l))).collect(),
            lambda: Sym::var(lambda_name(level)),
            c: (0..=level).map(|m| Sym::var(c_name(level, m))).collect(),
        }
    }

    /// Everything fixed to the frame's `g1` and the given ground ansatz.
    pub fn fixed(frame: &Frame, ground: &Ansatz) -> Template {
        Template {
            frame: frame.clone(),
            level: ground.level(),
            g1: frame.g1().coeffs().iter().map(|&c| Sym::Const(c)).collect(),
            lambda: Sym::Const(ground.lambda),
            c: ground.c.iter().map(|&c| Sym::Const(c)).collect(),
        }
    }
}

/// Symbols describing one state `g f^lambda S(h)` with energy `energy`.
#[derive(Clone, Debug)]
struct StateSyms {
    lambda: Sym,
    c: Vec<Sym>,
    energy: Option<Sym>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Excited,
    Degenerate,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemKind::Excited => f.write_str("excited"),
            SystemKind::Degenerate => f.write_str("degenerate"),
        }
    }
}

/// How the second state enters the residual.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Form {
    /// Full two-state expression with its own lambda and energy.
    General,
    /// Same lambda as the ground state; the expression divided by f, summed
    /// over antisymmetric coefficient pairs so that `c~ = c` gives exact zeros.
    Antisymmetric,
}

/// Options for [`degenerate_system`].
#[derive(Clone, Debug, Default)]
pub struct DegenerateOptions {
    /// Add the companion energy `Et{L}` as an unknown. Without it the
    /// residual only constrains the coefficients and the energy is recovered
    /// afterwards.
    pub with_energy: bool,
    /// Give the companion its own exponent `lambda_t{L}` of f.
    pub free_lambda: bool,
}

/// A residual generator with named unknowns and pinned values.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    kind: SystemKind,
    level: usize,
    form: Form,
    frame: Frame,
    g1: Vec<Sym>,
    ground: StateSyms,
    other: StateSyms,
    unknowns: Vec<String>,
    fixed: BTreeMap<String, Complex64>,
    /// Every symbol in `all_syms` order, resolved to a constant or an
    /// index into the unknowns.
    slots: Vec<Slot>,
    len: usize,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Value(Complex64),
    Unknown(usize),
}

/// Serializable summary of a system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub kind: SystemKind,
    pub level: usize,
    pub equations: usize,
    pub unknowns: Vec<String>,
    pub fixed: BTreeMap<String, Complex64>,
}

/// Excited state `N` on top of the ground template. `c{N}_{N}` is pinned to 1.
/// With `lambda_shared` the exponent of f is the ground state's.
pub fn excited_system(t: &Template, level: usize, lambda_shared: bool) -> Result<ConstraintSystem> {
    if level <= t.level {
        return Err(QesError::InvalidInput(format!(
            "excited level {level} must exceed the ground level {}",
            t.level
        )));
    }
    let other = StateSyms {
        lambda: if lambda_shared {
            t.lambda.clone()
        } else {
            Sym::var(lambda_name(level))
        },
        c: (0..=level).map(|m| Sym::var(c_name(level, m))).collect(),
        energy: Some(Sym::var(energy_name(level))),
    };
    let mut fixed = BTreeMap::new();
    fixed.insert(c_name(level, level), ONE);
    ConstraintSystem::assemble(t, SystemKind::Excited, level, Form::General, other, fixed)
}

/// Companion state at the ground level with coefficients `ct{L}_m`,
/// `ct{L}_{L}` pinned to 1.
pub fn degenerate_system(t: &Template, opts: &DegenerateOptions) -> Result<ConstraintSystem> {
    if t.level == 0 {
        return Err(QesError::InvalidInput(
            "a degenerate companion needs a ground level of at least 1".into(),
        ));
    }
    let level = t.level;
    let other = StateSyms {
        lambda: if opts.free_lambda {
            Sym::var(companion_lambda_name(level))
        } else {
            t.lambda.clone()
        },
        c: (0..=level).map(|m| Sym::var(companion_c_name(level, m))).collect(),
        energy: opts.with_energy.then(|| Sym::var(companion_energy_name(level))),
    };
    let mut fixed = BTreeMap::new();
    fixed.insert(companion_c_name(level, level), ONE);
    let form = if opts.free_lambda {
        Form::General
    } else {
        Form::Antisymmetric
    };
    ConstraintSystem::assemble(t, SystemKind::Degenerate, level, form, other, fixed)
}

/// The ground top coefficient is pinned to 1 whenever it is symbolic.
fn default_pins(t: &Template, fixed: &mut BTreeMap<String, Complex64>) {
    if let Some(Sym::Var(name)) = t.c.last() {
        fixed.entry(name.clone()).or_insert(ONE);
    }
}

impl ConstraintSystem {
    fn assemble(
        t: &Template,
        kind: SystemKind,
        level: usize,
        form: Form,
        other: StateSyms,
        mut fixed: BTreeMap<String, Complex64>,
    ) -> Result<ConstraintSystem> {
        default_pins(t, &mut fixed);
        let ground = StateSyms {
            lambda: t.lambda.clone(),
            c: t.c.clone(),
            energy: None,
        };
        let mut sys = ConstraintSystem {
            kind,
            level,
            form,
            frame: t.frame.clone(),
            g1: t.g1.clone(),
            ground,
            other,
            unknowns: Vec::new(),
            fixed,
            slots: Vec::new(),
            len: 0,
        };
        sys.refresh();
        Ok(sys)
    }

    fn all_syms(&self) -> impl Iterator<Item = &Sym> {
        self.g1
            .iter()
            .chain(std::iter::once(&self.ground.lambda))
            .chain(&self.ground.c)
            .chain(std::iter::once(&self.other.lambda))
            .chain(&self.other.c)
            .chain(self.other.energy.iter())
    }

    /// Recompute the unknown list and the structural equation count.
    fn refresh(&mut self) {
        let mut seen = Vec::new();
        for name in self.all_syms().filter_map(Sym::name) {
            if !self.fixed.contains_key(name) && !seen.iter().any(|s: &String| s == name) {
                seen.push(name.to_string());
            }
        }
        self.unknowns = seen;
        let slots = self
            .all_syms()
            .map(|s| match s {
                Sym::Const(c) => Slot::Value(*c),
                Sym::Var(name) => match self.fixed.get(name) {
                    Some(v) => Slot::Value(*v),
                    None => Slot::Unknown(self.unknowns.iter().position(|u| u == name).unwrap()),
                },
            })
            .collect();
        self.slots = slots;
        // generic values: every free symbol nonzero, so that only structural
        // zeros drop out of the accumulator
        let generic = vec![Complex64::new(0.7548776662, 0.3102); self.unknowns.len()];
        self.len = self
            .coefficients(&generic)
            .map(|v| v.len())
            .unwrap_or(0);
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn fixed(&self) -> &BTreeMap<String, Complex64> {
        &self.fixed
    }

    /// Number of (complex) equations, one per power of h.
    pub fn equation_count(&self) -> usize {
        self.len
    }

    /// Names of every symbol the residual depends on.
    pub fn symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self.unknowns.clone();
        out.extend(self.fixed.keys().cloned());
        out.sort();
        out
    }

    /// Pin `name` to `value`, removing it from the unknowns.
    pub fn pin(mut self, name: &str, value: Complex64) -> Result<ConstraintSystem> {
        if !self.all_syms().any(|s| s.name() == Some(name)) {
            return Err(QesError::InvalidInput(format!("no symbol named {name}")));
        }
        self.fixed.insert(name.to_string(), value);
        self.refresh();
        Ok(self)
    }

    /// Release a pinned symbol back into the unknowns.
    pub fn unpin(mut self, name: &str) -> ConstraintSystem {
        self.fixed.remove(name);
        self.refresh();
        self
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor {
            kind: self.kind,
            level: self.level,
            equations: self.len,
            unknowns: self.unknowns.clone(),
            fixed: self.fixed.clone(),
        }
    }

    /// Raw coefficient vector (length may be below the structural length).
    fn coefficients(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        if values.len() != self.unknowns.len() {
            return Err(QesError::InvalidInput(format!(
                "expected {} values, got {}",
                self.unknowns.len(),
                values.len()
            )));
        }
        let flat: Vec<Complex64> = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Value(c) => c,
                Slot::Unknown(i) => values[i],
            })
            .collect();
        let (ng, nl, nn) = (self.g1.len(), self.ground.c.len(), self.other.c.len());
        let g = &flat[..ng];
        let lam_l = flat[ng];
        let cl = &flat[ng + 1..ng + 1 + nl];
        let lam_n = flat[ng + 1 + nl];
        let cn = &flat[ng + 2 + nl..ng + 2 + nl + nn];
        let e = flat.get(ng + 2 + nl + nn).copied().unwrap_or(ZERO);
        let parts = Parts {
            f0: self.frame.f0().coeffs(),
            f1: self.frame.f1().coeffs(),
            h1: self.frame.h1().coeffs(),
            g,
        };
        Ok(match self.form {
            Form::General => two_state_coefficients(&parts, lam_l, cl, lam_n, cn, e),
            Form::Antisymmetric => companion_coefficients(&parts, lam_l, cl, cn, e),
        })
    }

    /// Residual in unknown order, padded to the structural length.
    pub fn residual(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut r = self.coefficients(values)?;
        r.resize(self.len.max(r.len()), ZERO);
        Ok(r)
    }

    /// Residual from a name → value map; missing names are an error.
    pub fn residual_named(&self, assignment: &BTreeMap<String, Complex64>) -> Result<Vec<Complex64>> {
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
        self.residual(&values)
    }

    /// Real and imaginary parts interleaved.
    pub fn residual_real(&self, values: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self
            .residual(values)?
            .into_iter()
            .flat_map(|c| [c.re, c.im])
            .collect())
    }

    /// Forward-difference Jacobian of [`residual_real`](Self::residual_real)
    /// with respect to the real unknowns. In complex mode every unknown
    /// contributes a real and an imaginary column.
    pub fn jacobian(&self, values: &[Complex64], complex: bool) -> Result<Vec<Vec<f64>>> {
        let base = self.residual_real(values)?;
        let cols = if complex { 2 * values.len() } else { values.len() };
        let mut jac = vec![vec![0.0; cols]; base.len()];
        let mut probe = values.to_vec();
        for col in 0..cols {
            let (i, imag) = if complex { (col / 2, col % 2 == 1) } else { (col, false) };
            let x = if imag { values[i].im } else { values[i].re };
            let step = 1e-7 * x.abs().max(1.0);
            if imag {
                probe[i].im += step;
            } else {
                probe[i].re += step;
            }
            let r = self.residual_real(&probe)?;
            for (row, (a, b)) in r.iter().zip(&base).enumerate() {
                jac[row][col] = (a - b) / step;
            }
            probe[i] = values[i];
        }
        Ok(jac)
    }
}

struct Parts<'a> {
    f0: &'a [Complex64],
    f1: &'a [Complex64],
    h1: &'a [Complex64],
    g: &'a [Complex64],
}

/// Coefficients of `-(Q_N - Q_L + E) f^2 S_L S_N`, where `Q = psi''/psi`
/// and `S_L`, `S_N` have coefficients `cl`, `cn`.
fn two_state_coefficients(
    p: &Parts,
    lam_l: Complex64,
    cl: &[Complex64],
    lam_n: Complex64,
    cn: &[Complex64],
    e: Complex64,
) -> Vec<Complex64> {
    let i = |k: usize| k as isize;
    let two = Complex64::new(2.0, 0.0);
    let dlam = lam_l - lam_n;
    let mut acc = Accumulator::new();
    for (s, cs) in nz(cl) {
        for (t, ct) in nz(cn) {
            let cc = cs * ct;
            let (sf, tf) = (s as f64, t as f64);
            for (k, f0k) in nz(p.f0) {
                for (l, f0l) in nz(p.f0) {
                    let ff = f0k * f0l * cc;
                    for (m, hm) in nz(p.h1) {
                        for (n, hn) in nz(p.h1) {
                            // second derivatives of both polynomials
                            let w = sf * (sf - 1.0 + m as f64) - tf * (tf - 1.0 + m as f64);
                            acc.add(i(k + l + m + n + s + t) - 2, ff * hm * hn * w);
                        }
                    }
                    for (m, gm) in nz(p.g) {
                        for (n, hn) in nz(p.h1) {
                            // weight times polynomial cross terms
                            acc.add(
                                i(k + l + m + n + s + t) - 1,
                                two * (tf - sf) * ff * gm * hn,
                            );
                        }
                    }
                    acc.add(i(k + l + s + t), -e * ff);
                }
                for (l, f1l) in nz(p.f1) {
                    for (m, hm) in nz(p.h1) {
                        // f-power times polynomial cross terms
                        let w = two * (lam_l * sf - lam_n * tf);
                        acc.add(i(k + l + m + s + t) - 1, w * f0k * f1l * hm * cc);
                        // second derivative of the f-power, difference part
                        acc.add(
                            i(k + l + m + s + t) - 1,
                            dlam * f0k * f1l * hm * cc * l as f64,
                        );
                    }
                    for (m, gm) in nz(p.g) {
                        acc.add(i(k + l + m + s + t), -two * dlam * f0k * gm * f1l * cc);
                    }
                }
            }
            if dlam != ZERO {
                for (k, f1k) in nz(p.f1) {
                    for (l, f1l) in nz(p.f1) {
                        acc.add(
                            i(k + l + s + t),
                            dlam * (lam_l + lam_n - ONE) * f1k * f1l * cc,
                        );
                    }
                }
            }
        }
    }
    acc.coeffs
}

/// The equal-lambda two-state expression divided by f, accumulated over
/// pairs `s < t` with the antisymmetric combination `c_s c~_t - c_t c~_s`.
fn companion_coefficients(
    p: &Parts,
    lam: Complex64,
    cl: &[Complex64],
    ct: &[Complex64],
    e: Complex64,
) -> Vec<Complex64> {
    let i = |k: usize| k as isize;
    let two = Complex64::new(2.0, 0.0);
    let mut acc = Accumulator::new();
    let get = |v: &[Complex64], j: usize| v.get(j).copied().unwrap_or(ZERO);
    let top = cl.len().max(ct.len());
    for t in 0..top {
        for s in 0..t {
            let anti = get(cl, s) * get(ct, t) - get(cl, t) * get(ct, s);
            if anti == ZERO {
                continue;
            }
            let (sf, tf) = (s as f64, t as f64);
            for (k, f0k) in nz(p.f0) {
                for (m, hm) in nz(p.h1) {
                    for (n, hn) in nz(p.h1) {
                        let w = -(tf - sf) * (tf - 1.0 + m as f64 + sf);
                        acc.add(i(k + m + n + s + t) - 2, anti * f0k * hm * hn * w);
                    }
                }
                for (m, gm) in nz(p.g) {
                    for (n, hn) in nz(p.h1) {
                        acc.add(i(k + m + n + s + t) - 1, two * (tf - sf) * anti * f0k * gm * hn);
                    }
                }
            }
            for (k, f1k) in nz(p.f1) {
                for (n, hn) in nz(p.h1) {
                    acc.add(i(k + n + s + t) - 1, -two * lam * (tf - sf) * anti * f1k * hn);
                }
            }
        }
    }
    if e != ZERO {
        for (s, cs) in nz(cl) {
            for (t, ctt) in nz(ct) {
                for (k, f0k) in nz(p.f0) {
                    acc.add(i(k + s + t), -e * f0k * cs * ctt);
                }
            }
        }
    }
    acc.coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::standard_frame;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn flagship_template() -> Template {
        Template::free(&standard_frame("rational-x").unwrap(), 1, 2)
    }

    #[test]
    fn flagship_equation_counts() {
        let t = flagship_template();
        let s2 = excited_system(&t, 2, true).unwrap();
        assert_eq!(s2.equation_count(), 8);
        assert_eq!(
            s2.unknowns(),
            ["g1_0", "g1_1", "lambda_1", "c1_0", "c2_0", "c2_1", "E_2"]
        );
        let s3 = excited_system(&t, 3, false).unwrap();
        assert_eq!(s3.equation_count(), 9);
        assert_eq!(s3.unknowns().len(), 9);
    }

    fn flagship_assignment() -> BTreeMap<String, Complex64> {
        let t = (109f64.sqrt() / 4.0).atan() / 3.0;
        let c = (-1.0 + 5f64.sqrt() * t.cos()).powi(2);
        let s = c.sqrt();
        [
            ("g1_0", 0.0),
            ("g1_1", s),
            ("lambda_1", s - 0.5),
            ("lambda_3", 1.5 - s),
            ("c1_0", 0.0),
            ("c2_0", -1.0),
            ("c2_1", 0.0),
            ("c3_0", 0.0),
            ("c3_1", 1.0 / (4.0 * c / 3.0 - 2.0)),
            ("c3_2", 0.0),
            ("E_2", 2.0 * s),
            ("E_3", -8.0 * c + 12.0 * s),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), re(v)))
        .collect()
    }

    #[test]
    fn flagship_solution_annihilates_both_systems() {
        let t = flagship_template();
        let a = flagship_assignment();
        for sys in [excited_system(&t, 2, true).unwrap(), excited_system(&t, 3, false).unwrap()] {
            let r = sys.residual_named(&a).unwrap();
            let worst = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-9, "level {}: {worst}", sys.level());
        }
    }

    #[test]
    fn excited_level_must_exceed_ground() {
        assert!(excited_system(&flagship_template(), 1, true).is_err());
    }

    #[test]
    fn degenerate_needs_level_one() {
        let t = Template::free(&standard_frame("harmonic").unwrap(), 0, 2);
        assert!(degenerate_system(&t, &DegenerateOptions::default()).is_err());
    }

    #[test]
    fn proportional_companion_gives_exact_zero() {
        let fr = standard_frame("rational-x").unwrap();
        let ground = Ansatz::new(
            Complex64::new(-1.0, 0.0),
            vec![re(3.0), Complex64::new(0.0, 2.0), re(1.0)],
            re(0.0),
        )
        .unwrap();
        let fr = fr.with_g1(crate::poly::Poly::from_real(&[0.0, 1.0 / 6.0]));
        let sys = degenerate_system(&Template::fixed(&fr, &ground), &DegenerateOptions::default())
            .unwrap();
        let r = sys.residual(&[re(3.0), Complex64::new(0.0, 2.0)]).unwrap();
        assert!(r.iter().all(|c| *c == ZERO));
    }

    #[test]
    fn pinning_moves_symbols() {
        let sys = excited_system(&flagship_template(), 2, true)
            .unwrap()
            .pin("g1_0", re(0.0))
            .unwrap();
        assert!(!sys.unknowns().iter().any(|u| u == "g1_0"));
        assert!(sys.clone().pin("nope", re(1.0)).is_err());
        let back = sys.unpin("g1_0");
        assert_eq!(back.unknowns().len(), 7);
    }

    #[test]
    fn jacobian_column_of_linear_unknown() {
        // the energy enters linearly with slope -f0_k c_s c_t
        let sys = excited_system(&flagship_template(), 2, true).unwrap();
        let vals: Vec<Complex64> = (0..sys.unknowns().len()).map(|i| re(0.3 + 0.1 * i as f64)).collect();
        let jac = sys.jacobian(&vals, false).unwrap();
        let e_col = sys.unknowns().iter().position(|u| u == "E_2").unwrap();
        let mut bumped = vals.clone();
        bumped[e_col] += 1.0;
        let a = sys.residual_real(&vals).unwrap();
        let b = sys.residual_real(&bumped).unwrap();
        for (row, (x, y)) in a.iter().zip(&b).enumerate() {
            assert!((jac[row][e_col] - (y - x)).abs() < 1e-6);
        }
    }

    #[test]
    fn unused_unknown_gives_zero_column() {
        // g1_2 multiplies h^2 in the weight but the flagship frame lets us
        // add a symbol the residual never sees by pinning c1_1 and using a
        // constant g1 list plus an extra free variable in the companion slot
        let fr = standard_frame("harmonic").unwrap();
        let t = Template {
            frame: fr.clone(),
            level: 0,
            g1: vec![Sym::Const(re(0.0)), Sym::Const(re(1.0))],
            lambda: Sym::var("lambda_0"),
            c: vec![Sym::Const(re(1.0))],
        };
        // f' = 0 so lambda_0 never appears
        let sys = excited_system(&t, 1, false).unwrap();
        let vals: Vec<Complex64> = (0..sys.unknowns().len()).map(|i| re(0.5 + i as f64)).collect();
        let jac = sys.jacobian(&vals, false).unwrap();
        for name in ["lambda_0", "lambda_1"] {
            let col = sys.unknowns().iter().position(|u| u == name).unwrap();
            assert!(jac.iter().all(|row| row[col] == 0.0), "{name}");
        }
    }
}
