//! Worked potentials with their known eigenstates, and their JSON fixtures.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QesError, Result};
use crate::frame::{standard_frame, Ansatz, Frame, FrameDescriptor};
use crate::poly::Poly;
use crate::potential::{build_potential, PotentialExpr};
use crate::rational::RationalFn;
use crate::verify::{self, EigenpairReport};

/// Identifiers in presentation order.
pub const IDS: [&str; 5] = ["flagship", "pt-complex", "kuliy-tkachuk", "sextic", "harmonic"];

/// Pass thresholds used by [`verify_entry`].
pub const SYMBOLIC_TOL: f64 = 1e-8;
pub const ENERGY_TOL: f64 = 1e-6;
pub const PT_TOL: f64 = 1e-12;
/// Relative tolerance when comparing a stored potential with the rebuilt one.
pub const POTENTIAL_TOL: f64 = 1e-10;

/// Constant `c` of the flagship potential: `sqrt(c) + 1` is the largest
/// root of `t^3 - 15t/4 - 1 = 0`, written in trigonometric form.
pub fn flagship_constant() -> f64 {
    let t = (109f64.sqrt() / 4.0).atan() / 3.0;
    (-1.0 + 5f64.sqrt() * t.cos()).powi(2)
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub description: String,
    pub frame: Frame,
    /// Built from the first state, which has energy 0.
    pub potential: PotentialExpr,
    pub states: Vec<Ansatz>,
    pub pt_symmetric: bool,
    /// Interval used for the grid and quadrature checks.
    pub interval: (f64, f64),
}

impl CatalogEntry {
    fn new(
        id: &str,
        description: &str,
        frame: Frame,
        states: Vec<Ansatz>,
        pt_symmetric: bool,
        interval: (f64, f64),
    ) -> Result<CatalogEntry> {
        let ground = states
            .first()
            .ok_or_else(|| QesError::InvalidInput("entry needs at least one state".into()))?;
        Ok(CatalogEntry {
            id: id.to_string(),
            description: description.to_string(),
            potential: build_potential(&frame, ground)?,
            frame,
            states,
            pt_symmetric,
            interval,
        })
    }

    pub fn energies(&self) -> Vec<Complex64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn fixture(&self) -> Fixture {
        Fixture {
            id: self.id.clone(),
            description: self.description.clone(),
            frame: self.frame.descriptor(),
            potential: StoredPotential {
                num: self.potential.v.num().clone(),
                den: self.potential.v.den().clone(),
            },
            states: self.states.clone(),
            pt_symmetric: self.pt_symmetric,
            interval: [self.interval.0, self.interval.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredPotential {
    pub num: Poly,
    pub den: Poly,
}

/// JSON form of an entry. The potential is stored for reference and
/// rebuilt from the frame and first state when loaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub id: String,
    pub description: String,
    pub frame: FrameDescriptor,
    pub potential: StoredPotential,
    pub states: Vec<Ansatz>,
    #[serde(default)]
    pub pt_symmetric: bool,
    pub interval: [f64; 2],
}

impl Fixture {
    /// Rebuild the entry; also reports how far the stored potential is from
    /// the rebuilt one (relative coefficient distance).
    pub fn into_entry(self) -> Result<(CatalogEntry, f64)> {
        let frame = Frame::from_descriptor(&self.frame)?;
        let entry = CatalogEntry::new(
            &self.id,
            &self.description,
            frame,
            self.states,
            self.pt_symmetric,
            (self.interval[0], self.interval[1]),
        )?;
        let stored = RationalFn::new(self.potential.num, self.potential.den)?;
        let scale = entry.potential.v.num().max_abs().max(1.0);
        let distance = entry.potential.v.coeff_distance(&stored)? / scale;
        Ok((entry, distance))
    }
}

pub fn list() -> Vec<&'static str> {
    IDS.to_vec()
}

pub fn get(id: &str) -> Result<CatalogEntry> {
    let c = Complex64::new;
    let r = |x: f64| c(x, 0.0);
    match id {
        "flagship" => {
            let k = flagship_constant();
            let s = k.sqrt();
            let frame = standard_frame("rational-x")?.with_g1(Poly::from_real(&[0.0, s]));
            CatalogEntry::new(
                id,
                "Three-level potential on f = 1 + x^2 with an odd ground state; \
                 V = c x^2 - 4c - sqrt(c) + (8c - 4 sqrt(c))/(1+x^2) - (4c - 8 sqrt(c) + 3)/(1+x^2)^2",
                frame,
                vec![
                    Ansatz::real(s - 0.5, &[0.0, 1.0], 0.0)?,
                    Ansatz::real(s - 0.5, &[1.0, 0.0, -1.0], 2.0 * s)?,
                    Ansatz::real(1.5 - s, &[0.0, 1.0, 0.0, -(2.0 - 4.0 * k / 3.0)], -8.0 * k + 12.0 * s)?,
                ],
                false,
                (-8.0, 8.0),
            )
        }
        "pt-complex" => {
            let i = Complex64::i();
            let frame = standard_frame("rational-x")?.with_g1(Poly::from_real(&[0.0, 1.0 / 6.0]));
            CatalogEntry::new(
                id,
                "PT-symmetric complex potential x^2/36 - 1/6 + (4 + 2ix)/(3(x+i)^2) \
                 with two states at the same polynomial degree",
                frame,
                vec![
                    Ansatz::new(r(-1.0), vec![r(3.0), 2.0 * i, r(1.0)], r(0.0))?,
                    Ansatz::new(r(0.0), vec![r(-1.0), 2.0 * i, r(1.0)], r(2.0 / 3.0))?,
                ],
                true,
                (-14.0, 14.0),
            )
        }
        "kuliy-tkachuk" => {
            let s3 = 3f64.sqrt();
            let frame = standard_frame("rational-x")?.with_g1(Poly::from_real(&[0.0, s3 / 2.0]));
            CatalogEntry::new(
                id,
                "Reference three-level potential on f = 1 + x^2 with a nodeless ground state",
                frame,
                vec![
                    Ansatz::real((3.0 - s3) / 2.0, &[1.0], 0.0)?,
                    Ansatz::real((s3 - 1.0) / 2.0, &[0.0, 1.0], 6.0 - 3.0 * s3)?,
                    Ansatz::real((s3 - 1.0) / 2.0, &[1.0, 0.0, -1.0], 6.0 - 2.0 * s3)?,
                ],
                false,
                (-8.0, 8.0),
            )
        }
        "sextic" => CatalogEntry::new(
            id,
            "Sextic oscillator x^6 - 11x^2 + 8 with three even states",
            standard_frame("sextic")?,
            vec![
                Ansatz::real(0.0, &[1.0, 0.0, 4.0, 0.0, 2.0], 0.0)?,
                Ansatz::real(0.0, &[-3.0, 0.0, 0.0, 0.0, 2.0], 8.0)?,
                Ansatz::real(0.0, &[1.0, 0.0, -4.0, 0.0, 2.0], 16.0)?,
            ],
            false,
            (-3.5, 3.5),
        ),
        "harmonic" => CatalogEntry::new(
            id,
            "Harmonic oscillator x^2 - 1 with its three lowest states",
            standard_frame("harmonic")?,
            vec![
                Ansatz::real(0.0, &[1.0], 0.0)?,
                Ansatz::real(0.0, &[0.0, 1.0], 2.0)?,
                Ansatz::real(0.0, &[-0.5, 0.0, 1.0], 4.0)?,
            ],
            false,
            (-9.0, 9.0),
        ),
        other => Err(QesError::UnknownEntry(other.to_string())),
    }
}

/// Entries from `dir/<id>.json` for every id found there, sorted by
/// catalog order and then by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Fixture>> {
    let read = std::fs::read_dir(dir)
        .map_err(|e| QesError::InvalidInput(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<_> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = paths
        .iter()
        .map(|p| load_file(p))
        .collect::<Result<Vec<_>>>()?;
    let rank = |id: &str| IDS.iter().position(|x| *x == id).unwrap_or(IDS.len());
    out.sort_by_key(|f| rank(&f.id));
    Ok(out)
}

pub fn load_file(path: &Path) -> Result<Fixture> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QesError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| QesError::InvalidInput(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateCheck {
    pub index: usize,
    pub report: EigenpairReport,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub id: String,
    pub states: Vec<StateCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pt_deviation: Option<f64>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Every check on every state, plus the PT check where it applies.
pub fn verify_entry(entry: &CatalogEntry) -> Result<EntryReport> {
    let mut failures = Vec::new();
    let mut states = Vec::new();
    for (index, st) in entry.states.iter().enumerate() {
        let report = verify::eigenpair_report(&entry.potential, st, entry.interval, 50)?;
        let mut ok = true;
        if !(report.symbolic_residual_max < SYMBOLIC_TOL) {
            failures.push(format!("state {index}: symbolic residual {:.3e}", report.symbolic_residual_max));
            ok = false;
        }
        let de = (report.energy_estimate.quotient - st.energy).norm();
        if !(de < ENERGY_TOL) {
            failures.push(format!("state {index}: energy estimate off by {de:.3e}"));
            ok = false;
        }
        if !report.normalizable {
            failures.push(format!("state {index}: not normalizable"));
            ok = false;
        }
        states.push(StateCheck { index, report, passed: ok });
    }
    let pt_deviation = entry.pt_symmetric.then(|| {
        let grid = verify::linspace(entry.interval.0, entry.interval.1, 201);
        verify::pt_symmetry_check(&*entry.potential.sampler(), &grid)
    });
    if let Some(d) = pt_deviation {
        if !(d < PT_TOL) {
            failures.push(format!("PT deviation {d:.3e}"));
        }
    }
    Ok(EntryReport {
        id: entry.id.clone(),
        passed: failures.is_empty(),
        states,
        pt_deviation,
        failures,
    })
}

/// [`verify_entry`] on a loaded fixture, also failing when the stored
/// potential disagrees with the one rebuilt from its frame and ground state.
pub fn verify_fixture(fixture: Fixture) -> Result<EntryReport> {
    let (entry, distance) = fixture.into_entry()?;
    let mut report = verify_entry(&entry)?;
    if !(distance <= POTENTIAL_TOL) {
        report.failures.push(format!("stored potential differs by {distance:.3e}"));
        report.passed = false;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_id_resolves() {
        for id in list() {
            assert_eq!(get(id).unwrap().id, id);
        }
        assert!(matches!(get("nope"), Err(QesError::UnknownEntry(_))));
    }

    #[test]
    fn flagship_constant_value() {
        let t = flagship_constant().sqrt() + 1.0;
        assert!((t.powi(3) - 3.75 * t - 1.0).abs() < 1e-13);
        // printed to six decimals as 1.119639
        assert!((flagship_constant() - 1.119639).abs() < 1e-4);
    }

    #[test]
    fn fixture_round_trip() {
        let e = get("pt-complex").unwrap();
        let json = serde_json::to_string(&e.fixture()).unwrap();
        let back: Fixture = serde_json::from_str(&json).unwrap();
        let (entry, d) = back.into_entry().unwrap();
        assert!(d < 1e-14);
        assert_eq!(entry.states, e.states);
    }
}
