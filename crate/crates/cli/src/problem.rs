//! JSON problem files: a frame, a ground ansatz with unknown markers, and
//! the systems to solve on top of it.

use std::collections::BTreeMap;

use num_complex::Complex64;
use qesforge::catalog::{Fixture, StoredPotential};
use qesforge::constraints::{
    c_name, companion_c_name, companion_energy_name, companion_lambda_name, energy_name, lambda_name, Sym,
};
use qesforge::{
    build_potential, degenerate_system, excited_system, standard_frame, Ansatz, ConstraintSystem, DegenerateOptions,
    Frame, FrameDescriptor, Poly, QesError, Result, SolveOptions, Solution, Template,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrameSpec {
    Named(String),
    Explicit(FrameDescriptor),
}

/// Ground state `g f^lambda S_L`; each entry is a literal `[re, im]` or the
/// name of an unknown. The level is `c.len() - 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundSpec {
    /// Weight coefficients; when absent the frame's own are used.
    #[serde(default)]
    pub g1: Option<Vec<Sym>>,
    pub lambda: Sym,
    pub c: Vec<Sym>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExcitedSpec {
    pub level: usize,
    #[serde(default)]
    pub lambda_shared: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DegenerateSpec {
    #[serde(default)]
    pub with_energy: bool,
    #[serde(default)]
    pub free_lambda: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Excited(Vec<ExcitedSpec>),
    Degenerate(DegenerateSpec),
}

fn default_interval() -> [f64; 2] {
    [-8.0, 8.0]
}

fn default_points() -> usize {
    201
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub frame: FrameSpec,
    pub ground: GroundSpec,
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Values for unknowns, applied to every system.
    #[serde(default)]
    pub pins: BTreeMap<String, Complex64>,
    /// Extra states tabulated and checked by `build`.
    #[serde(default)]
    pub states: Vec<Ansatz>,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default = "default_points")]
    pub plot_points: usize,
    #[serde(default)]
    pub pt_symmetric: bool,
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<ProblemSpec> {
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| QesError::InvalidInput(format!("problem file: {e}")))?;
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.ground.c.is_empty() {
            return Err(QesError::InvalidInput("ground.c must not be empty".into()));
        }
        let [a, b] = self.interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(QesError::InvalidInput("interval must be an increasing finite pair".into()));
        }
        if self.plot_points < 2 {
            return Err(QesError::InvalidInput("plot_points must be at least 2".into()));
        }
        // with a mode, pins are checked against the systems instead
        if self.mode.is_none() {
            let names = self.symbol_names();
            if let Some(k) = self.pins.keys().find(|k| !names.contains(k)) {
                return Err(QesError::InvalidInput(format!("pinned name `{k}` is not a ground symbol")));
            }
        }
        Ok(())
    }

    fn symbol_names(&self) -> Vec<String> {
        let g1 = self.ground.g1.iter().flatten();
        g1.chain(std::iter::once(&self.ground.lambda))
            .chain(&self.ground.c)
            .filter_map(|s| s.name().map(str::to_string))
            .collect()
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| "problem".into())
    }

    pub fn level(&self) -> usize {
        self.ground.c.len() - 1
    }

    pub fn base_frame(&self) -> Result<Frame> {
        match &self.frame {
            FrameSpec::Named(name) => standard_frame(name),
            FrameSpec::Explicit(d) => Frame::from_descriptor(d),
        }
    }

    pub fn template(&self) -> Result<Template> {
        let frame = self.base_frame()?;
        let g1 = match &self.ground.g1 {
            Some(g) => g.clone(),
            None => frame.g1().coeffs().iter().map(|&c| Sym::Const(c)).collect(),
        };
        Ok(Template {
            frame,
            level: self.level(),
            g1,
            lambda: self.ground.lambda.clone(),
            c: self.ground.c.clone(),
        })
    }

    pub fn systems(&self) -> Result<Vec<ConstraintSystem>> {
        let t = self.template()?;
        let mode = self
            .mode
            .as_ref()
            .ok_or_else(|| QesError::InvalidInput("solving needs a `mode`".into()))?;
        let raw = match mode {
            Mode::Excited(list) => {
                if list.is_empty() {
                    return Err(QesError::InvalidInput("mode.excited is empty".into()));
                }
                list.iter()
                    .map(|e| excited_system(&t, e.level, e.lambda_shared))
                    .collect::<Result<Vec<_>>>()?
            }
            Mode::Degenerate(d) => vec![degenerate_system(
                &t,
                &DegenerateOptions {
                    with_energy: d.with_energy,
                    free_lambda: d.free_lambda,
                },
            )?],
        };
        let mut out = Vec::with_capacity(raw.len());
        for mut sys in raw {
            for (k, v) in &self.pins {
                if sys.symbols().iter().any(|s| s == k) {
                    sys = sys.pin(k, *v)?;
                }
            }
            out.push(sys);
        }
        for k in self.pins.keys() {
            if !out.iter().any(|s| s.fixed().contains_key(k)) {
                return Err(QesError::InvalidInput(format!("pinned name `{k}` is not a symbol of any system")));
            }
        }
        Ok(out)
    }

    fn resolve(&self, s: &Sym, values: &BTreeMap<String, Complex64>) -> Result<Complex64> {
        match s {
            Sym::Const(c) => Ok(*c),
            Sym::Var(name) => values
                .get(name)
                .or_else(|| self.pins.get(name))
                .copied()
                .ok_or_else(|| QesError::InvalidInput(format!("`{name}` has no value"))),
        }
    }

    /// Frame with the weight filled in and the ground ansatz, from an
    /// assignment of the unknowns (empty for a fully pinned problem).
    pub fn ground_state(&self, values: &BTreeMap<String, Complex64>) -> Result<(Frame, Ansatz)> {
        let t = self.template()?;
        let g1 = t
            .g1
            .iter()
            .map(|s| self.resolve(s, values))
            .collect::<Result<Vec<_>>>()?;
        let frame = t.frame.with_g1(Poly::new(g1));
        let lambda = self.resolve(&t.lambda, values)?;
        let mut c = Vec::with_capacity(t.c.len());
        for (m, s) in t.c.iter().enumerate() {
            // the top coefficient defaults to 1 when symbolic
            let v = match (s, m + 1 == t.c.len()) {
                (Sym::Var(n), true) if !values.contains_key(n) && !self.pins.contains_key(n) => Complex64::new(1.0, 0.0),
                _ => self.resolve(s, values)?,
            };
            c.push(v);
        }
        Ok((frame, Ansatz::new(lambda, c, Complex64::new(0.0, 0.0))?))
    }

    /// Every state of a solution: the ground state followed by the solved ones.
    pub fn solution_states(&self, sol: &Solution) -> Result<(Frame, Vec<Ansatz>)> {
        let values = sol.values();
        let (frame, ground) = self.ground_state(&values)?;
        let get = |name: String| -> Result<Complex64> {
            values
                .get(&name)
                .copied()
                .ok_or_else(|| QesError::InvalidInput(format!("solution lacks `{name}`")))
        };
        let mut states = vec![ground.clone()];
        match self.mode.as_ref() {
            Some(Mode::Excited(list)) => {
                for e in list {
                    let n = e.level;
                    let lambda = if e.lambda_shared { ground.lambda } else { get(lambda_name(n))? };
                    let c = (0..=n).map(|m| get(c_name(n, m))).collect::<Result<Vec<_>>>()?;
                    states.push(Ansatz::new(lambda, c, get(energy_name(n))?)?);
                }
            }
            Some(Mode::Degenerate(d)) => {
                let l = self.level();
                let lambda = if d.free_lambda { get(companion_lambda_name(l))? } else { ground.lambda };
                let c = (0..=l).map(|m| get(companion_c_name(l, m))).collect::<Result<Vec<_>>>()?;
                let mut st = Ansatz::new(lambda, c, Complex64::new(0.0, 0.0))?;
                st.energy = if d.with_energy {
                    get(companion_energy_name(l))?
                } else {
                    companion_energy(&frame, &ground, &st)?
                };
                states.push(st);
            }
            None => {}
        }
        Ok((frame, states))
    }

    pub fn fixture(&self, id: String, description: String, frame: &Frame, states: Vec<Ansatz>) -> Result<Fixture> {
        let pot = build_potential(frame, &states[0])?;
        Ok(Fixture {
            id,
            description,
            frame: frame.descriptor(),
            potential: StoredPotential {
                num: pot.v.num().clone(),
                den: pot.v.den().clone(),
            },
            states,
            pt_symmetric: self.pt_symmetric,
            interval: self.interval,
        })
    }
}

/// Energy of a companion state: `V - P^2 - P'` is constant for an
/// eigenstate, so read it off at a generic point.
fn companion_energy(frame: &Frame, ground: &Ansatz, st: &Ansatz) -> Result<Complex64> {
    let v = build_potential(frame, ground)?.v;
    let p = frame.log_derivative(st)?;
    let q = &(&(&p * &p) + &p.deriv_x(frame.h1())) - &v;
    let z = Complex64::new(0.318_309_886, 0.1);
    Ok(-q.eval(z)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAGSHIP_FREE: &str = r#"{
        "frame": "rational-x",
        "ground": { "g1": ["g1_0", "g1_1"], "lambda": "lambda_1", "c": ["c1_0", "c1_1"] },
        "mode": { "excited": [ { "level": 2, "lambda_shared": true }, { "level": 3 } ] }
    }"#;

    #[test]
    fn parses_and_builds_systems() {
        let p = ProblemSpec::parse(FLAGSHIP_FREE).unwrap();
        let sys = p.systems().unwrap();
        assert_eq!(sys.len(), 2);
        assert!(sys[0].unknowns().contains(&"E_2".to_string()));
        assert!(sys[0].fixed().contains_key("c1_1"));
    }

    #[test]
    fn unknown_fields_and_bad_pins_rejected() {
        assert!(ProblemSpec::parse(r#"{"frame":"harmonic","ground":{"lambda":[0,0],"c":[[1,0]]},"bogus":1}"#).is_err());
        let p = ProblemSpec::parse(
            r#"{"frame":"harmonic","ground":{"lambda":[0,0],"c":[[1,0]]},
                "mode":{"excited":[{"level":1}]},"pins":{"nope":[1,0]}}"#,
        )
        .unwrap();
        assert!(p.systems().is_err());
    }

    #[test]
    fn pinned_ground_resolves() {
        let p = ProblemSpec::parse(
            r#"{"frame":"rational-x","ground":{"g1":[[0,0],"w"],"lambda":[0.5,0],"c":["a",[1,0]]},
                "pins":{"w":[2,0],"a":[0,0]}}"#,
        )
        .unwrap();
        let (frame, g) = p.ground_state(&BTreeMap::new()).unwrap();
        assert_eq!(frame.g1().coeff(1), Complex64::new(2.0, 0.0));
        assert_eq!(g.c, vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    }
}
