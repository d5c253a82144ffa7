//! Simultaneous polynomial root finding (Aberth–Ehrlich) and root clustering.

use num_complex::Complex64;

use crate::poly::Poly;

const MAX_ITER: usize = 800;

/// All roots of `p`, repeated according to multiplicity. Empty for constants.
pub fn roots(p: &Poly) -> Vec<Complex64> {
    let Some(n) = p.degree() else {
        return Vec::new();
    };
    // exact zero roots are split off first; they are common in practice
    let zeros = p.coeffs().iter().take_while(|c| c.norm() == 0.0).count();
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    let reduced = Poly::new(p.coeffs()[zeros..].to_vec());
    let m = n - zeros;
    match m {
        0 => {}
        1 => {
            let c = reduced.coeffs();
            out.push(-c[0] / c[1]);
        }
        _ => out.extend(aberth(&reduced, m)),
    }
    out
}

fn aberth(p: &Poly, n: usize) -> Vec<Complex64> {
    let lead = p.leading().unwrap();
    let monic: Vec<Complex64> = p.coeffs().iter().map(|c| c / lead).collect();
    let monic = Poly::new(monic);
    let dp = monic.derivative();

    // initial guesses on a circle whose radius is the geometric mean of the
    // root moduli, with an irrational angular offset to break symmetry
    let a0 = monic.coeff(0).norm();
    let radius = if a0 > 0.0 {
        a0.powf(1.0 / n as f64)
    } else {
        1.0
    }
    .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    for _ in 0..MAX_ITER {
        let mut max_rel = 0.0f64;
        for i in 0..n {
            let zi = z[i];
            let pv = monic.eval(zi);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dp.eval(zi);
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = zi - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = Complex64::new(1.0, 0.0) - ratio * sum;
            let w = if denom.norm() == 0.0 || !denom.is_finite() {
                ratio
            } else {
                ratio / denom
            };
            if w.is_finite() {
                z[i] = zi - w;
                max_rel = max_rel.max(w.norm() / (1.0 + zi.norm()));
            }
        }
        if max_rel < 1e-16 {
            break;
        }
    }
    z
}

/// A group of nearly coincident roots.
#[derive(Clone, Debug, PartialEq)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
}

/// Radius (relative to `max(1, |z|)`) inside which roots are merged.
/// An m-fold root splits into a ring of radius about eps^(1/m), so this
/// has to be loose enough to catch fourth-order roots.
pub const CLUSTER_RADIUS: f64 = 1e-3;

/// Roots of `p` grouped into clusters, each center polished by Newton
/// iteration on the (m-1)-th derivative, where an m-fold root is simple.
pub fn clustered_roots(p: &Poly) -> Vec<RootCluster> {
    let mut out = cluster(&roots(p), CLUSTER_RADIUS);
    for cl in &mut out {
        let mut d = p.clone();
        for _ in 1..cl.multiplicity {
            d = d.derivative();
        }
        let dd = d.derivative();
        let mut z = cl.center;
        let mut best = d.eval(z).norm();
        for _ in 0..8 {
            let step = d.eval(z) / dd.eval(z);
            if !step.is_finite() {
                break;
            }
            let next = z - step;
            let val = d.eval(next).norm();
            if val >= best {
                break;
            }
            z = next;
            best = val;
        }
        // only accept a polish that stays inside the cluster
        if (z - cl.center).norm() <= CLUSTER_RADIUS * cl.center.norm().max(1.0) {
            cl.center = z;
        }
    }
    out
}

/// Group roots closer than `radius * max(1, |z|)`; the cluster center is the
/// mean, which is far more accurate than individual members of a multiple root.
pub fn cluster(roots: &[Complex64], radius: f64) -> Vec<RootCluster> {
    let mut assigned = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let mut members = vec![roots[i]];
        // grow transitively so that a ring of m roots around an m-fold root
        // ends up in one cluster
        let mut k = 0;
        while k < members.len() {
            let anchor = members[k];
            for j in 0..roots.len() {
                if !assigned[j] && (roots[j] - anchor).norm() <= radius * anchor.norm().max(1.0) {
                    assigned[j] = true;
                    members.push(roots[j]);
                }
            }
            k += 1;
        }
        let center = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push(RootCluster {
            center,
            multiplicity: members.len(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(rs: &[Complex64]) -> Poly {
        rs.iter()
            .fold(Poly::one(), |acc, &r| &acc * &Poly::linear_factor(r))
    }

    #[test]
    fn simple_roots_recovered() {
        let rs = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0), c(0.25, 0.0)];
        let p = from_roots(&rs);
        let mut found = roots(&p);
        for r in rs {
            let (idx, d) = found
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - r).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(d < 1e-12, "root {r} off by {d}");
            found.remove(idx);
        }
    }

    #[test]
    fn double_roots_cluster_accurately() {
        // (1 + h^2)^2 h
        let f = Poly::from_real(&[1.0, 0.0, 1.0]);
        let p = &(&f * &f) * &Poly::h();
        let cl = clustered_roots(&p);
        assert_eq!(cl.len(), 3);
        for k in &cl {
            let target = if k.center.im > 0.5 {
                c(0.0, 1.0)
            } else if k.center.im < -0.5 {
                c(0.0, -1.0)
            } else {
                c(0.0, 0.0)
            };
            assert!((k.center - target).norm() < 1e-13);
            assert_eq!(k.multiplicity, if target.norm() > 0.0 { 2 } else { 1 });
        }
    }

    #[test]
    fn zero_roots_split_exactly() {
        let p = Poly::from_real(&[0.0, 0.0, -1.0, 0.0, 1.0]);
        let rs = roots(&p);
        assert_eq!(rs.iter().filter(|z| z.norm() == 0.0).count(), 2);
    }
}
