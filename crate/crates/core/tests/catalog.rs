use std::path::PathBuf;

use num_complex::Complex64;
use qesforge::catalog::{self, Fixture};
use qesforge::verify::linspace;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn every_entry_verifies() {
    for id in catalog::list() {
        let e = catalog::get(id).unwrap();
        let r = catalog::verify_entry(&e).unwrap();
        assert!(r.passed, "{id}: {:?}", r.failures);
    }
}

#[test]
fn potentials_match_closed_forms() {
    let k = catalog::flagship_constant();
    let s = k.sqrt();
    let s3 = 3f64.sqrt();
    let i = Complex64::i();
    let cases: Vec<(&str, Box<dyn Fn(f64) -> Complex64>)> = vec![
        (
            "flagship",
            Box::new(move |x| {
                let f = 1.0 + x * x;
                (k * x * x - 4.0 * k - s + (8.0 * k - 4.0 * s) / f - (4.0 * k - 8.0 * s + 3.0) / (f * f)).into()
            }),
        ),
        (
            "pt-complex",
            Box::new(move |x| {
                let z = Complex64::new(x, 0.0);
                z * z / 36.0 - 1.0 / 6.0 + (4.0 + 2.0 * i * z) / (3.0 * (z + i) * (z + i))
            }),
        ),
        (
            "kuliy-tkachuk",
            Box::new(move |x| {
                let f = 1.0 + x * x;
                (0.75 * x * x + (6.0 - 7.0 * s3) / 2.0 - 2.0 * (s3 - 3.0) / f + 2.0 * (2.0 * s3 - 3.0) / (f * f)).into()
            }),
        ),
        ("sextic", Box::new(|x: f64| (x.powi(6) - 11.0 * x * x + 8.0).into())),
        ("harmonic", Box::new(|x: f64| (x * x - 1.0).into())),
    ];
    for (id, oracle) in cases {
        let e = catalog::get(id).unwrap();
        for x in linspace(-3.0, 3.0, 31) {
            let got = e.potential.eval_x(x).unwrap();
            let want = oracle(x);
            assert!((got - want).norm() < 1e-10 * want.norm().max(1.0), "{id} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn printed_energies() {
    let k = catalog::flagship_constant();
    let s3 = 3f64.sqrt();
    let expect: [(&str, Vec<f64>); 3] = [
        ("flagship", vec![0.0, 2.0 * k.sqrt(), -8.0 * k + 12.0 * k.sqrt()]),
        ("kuliy-tkachuk", vec![0.0, 6.0 - 3.0 * s3, 6.0 - 2.0 * s3]),
        ("sextic", vec![0.0, 8.0, 16.0]),
    ];
    for (id, es) in expect {
        let got = catalog::get(id).unwrap().energies();
        for (g, e) in got.iter().zip(&es) {
            assert!((g - e).norm() < 1e-12, "{id}");
        }
    }
}

/// Regenerate with `QESFORGE_BLESS=1 cargo test -p qesforge-core --test catalog`.
#[test]
fn fixtures_in_sync() {
    let dir = fixtures_dir();
    let bless = std::env::var_os("QESFORGE_BLESS").is_some();
    for id in catalog::list() {
        let fixture = catalog::get(id).unwrap().fixture();
        let path = dir.join(format!("{id}.json"));
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, serde_json::to_string_pretty(&fixture).unwrap() + "\n").unwrap();
            continue;
        }
        let stored: Fixture = catalog::load_file(&path).unwrap();
        assert_eq!(stored.id, fixture.id);
        assert_eq!(stored.description, fixture.description);
        let (entry, distance) = stored.into_entry().unwrap();
        assert!(distance < 1e-12, "{id}: stored potential drifted by {distance:e}");
        for (a, b) in entry.states.iter().zip(&fixture.states) {
            assert!((a.energy - b.energy).norm() < 1e-14, "{id}");
            assert!(a.c.iter().zip(&b.c).all(|(x, y)| (x - y).norm() < 1e-14), "{id}");
        }
    }
}

#[test]
fn load_dir_orders_by_catalog() {
    let ids: Vec<String> = catalog::load_dir(&fixtures_dir())
        .unwrap()
        .into_iter()
        .map(|f| f.id)
        .collect();
    assert_eq!(ids, catalog::list());
}

#[test]
fn tampered_energy_fails() {
    let mut f = catalog::get("flagship").unwrap().fixture();
    f.states[1].energy += 1e-3;
    let r = catalog::verify_fixture(f).unwrap();
    assert!(!r.passed);
    assert!(!r.states[1].passed && r.states[0].passed);
}

#[test]
fn tampered_potential_fails() {
    let mut f = catalog::get("harmonic").unwrap().fixture();
    f.potential.num = qesforge::Poly::from_real(&[-1.0, 0.0, 1.01]);
    assert!(!catalog::verify_fixture(f).unwrap().passed);
}
