use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use qesforge::constraints::{c_name, companion_c_name, energy_name, g1_name, lambda_name};
use qesforge::verify::second_derivative;
use qesforge::*;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn poly(max_len: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec(cplx(), 1..=max_len).prop_map(Poly::new)
}

fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_identities(p in poly(7), q in poly(7), zs in prop::collection::vec(cplx(), 20)) {
        let sum = &p + &q;
        let prod = &p * &q;
        for z in zs {
            prop_assert!(rel_close(sum.eval(z), p.eval(z) + q.eval(z), 1e-12));
            let scale = p.eval_scale(z) * q.eval_scale(z);
            prop_assert!((prod.eval(z) - p.eval(z) * q.eval(z)).norm() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn chain_rule_derivative(p in poly(6), x in -2.0..2.0f64) {
        let frame = standard_frame("rational-x").unwrap();
        let d = p.deriv_x(frame.h1());
        let f = |t: f64| p.eval(re(t));
        let h = 1e-5;
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        prop_assert!((d.eval(re(x)) - fd).norm() <= 1e-6 * p.eval_scale(re(x)).max(1.0));
    }

    #[test]
    fn normalize_idempotent_and_value_preserving(
        num in poly(4),
        den in poly(4),
        common in prop::collection::vec(cplx(), 0..3),
        zs in prop::collection::vec(cplx(), 10),
    ) {
        prop_assume!(den.max_abs() > 0.1 && num.max_abs() > 0.1);
        let factor = common
            .iter()
            .fold(Poly::one(), |acc, r| &acc * &Poly::linear_factor(*r));
        let r = RationalFn::new(&num * &factor, &den * &factor).unwrap();
        let once = r.normalize(1e-8).unwrap();
        let twice = once.normalize(1e-8).unwrap();
        prop_assert_eq!(&once, &twice);
        for z in zs {
            let (Ok(a), Ok(b)) = (r.eval(z), once.eval(z)) else { continue };
            // skip points close to a cancelled or surviving pole
            if r.den().eval(z).norm() < 1e-2 * r.den().eval_scale(z) {
                continue;
            }
            prop_assert!(rel_close(a, b, 1e-10), "{} vs {}", a, b);
        }
    }

    #[test]
    fn potential_homogeneous_in_ground_coefficients(
        c in prop::collection::vec(cplx(), 2..4),
        k in cplx(),
        lam in -1.0..1.0f64,
    ) {
        prop_assume!(k.norm() > 0.1 && c.last().unwrap().norm() > 0.1);
        let frame = standard_frame("rational-x").unwrap().with_g1(Poly::from_real(&[0.0, 0.8]));
        let a = Ansatz::new(re(lam), c.clone(), re(0.0)).unwrap();
        let b = Ansatz::new(re(lam), c.iter().map(|x| x * k).collect(), re(0.0)).unwrap();
        let va = build_potential(&frame, &a).unwrap().v;
        let vb = build_potential(&frame, &b).unwrap().v;
        prop_assert!(va.num().max_diff(vb.num()) < 1e-12 * va.num().max_abs().max(1.0));
        prop_assert!(va.den().max_diff(vb.den()) < 1e-12 * va.den().max_abs().max(1.0));
    }

    #[test]
    fn potential_is_second_log_derivative(
        c in prop::collection::vec(-2.0..2.0f64, 3),
        lam in 0.0..1.5f64,
        w in 0.3..1.5f64,
    ) {
        prop_assume!(c[2].abs() > 0.2);
        let frame = standard_frame("rational-x").unwrap().with_g1(Poly::from_real(&[0.0, w]));
        let ground = Ansatz::real(lam, &c, 0.0).unwrap();
        let v = build_potential(&frame, &ground).unwrap();
        let psi = frame.psi(&ground).unwrap();
        let s = ground.poly();
        for x in qesforge::verify::linspace(-2.0, 2.0, 20) {
            if s.eval(re(x)).norm() < 0.2 * s.eval_scale(re(x)) {
                continue;
            }
            let q = second_derivative(&*psi, x, 1e-3) / psi(x);
            let vx = v.eval_x(x).unwrap();
            prop_assert!((vx - q).norm() < 1e-5 * vx.norm().max(1.0), "x={} {} vs {}", x, vx, q);
        }
    }

    #[test]
    fn residual_is_cleared_schrodinger_expression(
        g in prop::collection::vec(-1.5..1.5f64, 2),
        lam in -1.0..1.0f64,
        cl0 in cplx(),
        cn in prop::collection::vec(cplx(), 2),
        e in cplx(),
        xs in prop::collection::vec(-2.0..2.0f64, 10),
    ) {
        let base = standard_frame("rational-x").unwrap();
        let t = Template::free(&base, 1, 2);
        let sys = excited_system(&t, 2, true).unwrap();
        let mut assignment = BTreeMap::new();
        assignment.insert(g1_name(0), re(g[0]));
        assignment.insert(g1_name(1), re(g[1]));
        assignment.insert(lambda_name(1), re(lam));
        assignment.insert(c_name(1, 0), cl0);
        assignment.insert(c_name(2, 0), cn[0]);
        assignment.insert(c_name(2, 1), cn[1]);
        assignment.insert(energy_name(2), e);
        let r = Poly::new(sys.residual_named(&assignment).unwrap());

        let frame = base.with_g1(Poly::from_real(&g));
        let ground = Ansatz::new(re(lam), vec![cl0, re(1.0)], re(0.0)).unwrap();
        let excited = Ansatz::new(re(lam), vec![cn[0], cn[1], re(1.0)], e).unwrap();
        let q = |a: &Ansatz| {
            let p = frame.log_derivative(a).unwrap();
            &(&p * &p) + &p.derivative()
        };
        let (ql, qn) = (q(&ground), q(&excited));
        for x in xs {
            let z = re(x);
            let (sl, sn) = (ground.poly().eval(z), excited.poly().eval(z));
            if sl.norm() < 0.05 || sn.norm() < 0.05 {
                continue;
            }
            let f = 1.0 + x * x;
            let cleared = -(qn.eval(z).unwrap() - ql.eval(z).unwrap() + e) * f * f * sl * sn;
            prop_assert!(rel_close(r.eval(z), cleared, 1e-8), "{} vs {}", r.eval(z), cleared);
        }
    }

    #[test]
    fn identical_companion_annihilates(
        g in prop::collection::vec(-1.5..1.5f64, 2),
        lam in -1.0..1.0f64,
        c in prop::collection::vec(cplx(), 2),
    ) {
        let t = Template::free(&standard_frame("rational-x").unwrap(), 2, 2);
        let sys = degenerate_system(&t, &DegenerateOptions::default()).unwrap();
        let mut assignment = BTreeMap::new();
        assignment.insert(g1_name(0), re(g[0]));
        assignment.insert(g1_name(1), re(g[1]));
        assignment.insert(lambda_name(2), re(lam));
        for (m, v) in c.iter().enumerate() {
            assignment.insert(c_name(2, m), *v);
            assignment.insert(companion_c_name(2, m), *v);
        }
        let r = sys.residual_named(&assignment).unwrap();
        prop_assert!(r.iter().all(|v| v.norm() == 0.0), "{:?}", r);
    }
}

fn harmonic_excited() -> ConstraintSystem {
    let frame = standard_frame("harmonic").unwrap();
    let ground = Ansatz::real(0.0, &[1.0], 0.0).unwrap();
    excited_system(&Template::fixed(&frame, &ground), 2, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solver_deterministic(seed in any::<u64>()) {
        let systems = [harmonic_excited()];
        let opts = SolveOptions { seed, starts: 12, ..SolveOptions::default() };
        let a = solve(&systems, &opts).unwrap();
        let b = solve(&systems, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), 1);
        prop_assert!((a[0].assignment[&energy_name(2)] - re(4.0)).norm() < 1e-9);
    }
}

#[test]
fn gauge_of_top_coefficient() {
    let entry = catalog::get("flagship").unwrap();
    let t = Template::fixed(&entry.frame, &entry.states[0]);
    let base = excited_system(&t, 3, false).unwrap();
    let scaled = base.clone().pin(&c_name(3, 3), re(2.0)).unwrap();
    let opts = SolveOptions { starts: 60, seed: 3, ..SolveOptions::default() };
    let pick = |sols: Vec<Solution>| -> Solution {
        sols.into_iter()
            .find(|s| s.null_dimension == 0 && (s.assignment[&lambda_name(3)].re - entry.states[2].lambda.re).abs() < 1e-6)
            .expect("isolated solution with the known lambda")
    };
    let a = pick(solve(&[base], &opts).unwrap());
    let b = pick(solve(&[scaled], &opts).unwrap());
    let e = energy_name(3);
    assert!((a.assignment[&e] - b.assignment[&e]).norm() < 1e-9);
    for m in 0..3 {
        let n = c_name(3, m);
        assert!((2.0 * a.assignment[&n] - b.assignment[&n]).norm() < 1e-9, "{n}");
    }
}
