//! Complex polynomial roots via Aberth-Ehrlich simultaneous iteration, with
//! cluster-based multiplicity detection.
//!
//! Degrees stay in the hundreds at desk scale, where the method is robust
//! without factorization. Real-coefficient inputs get their root sets
//! symmetrized so conjugate closure holds exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Roots closer than this are treated as one root with multiplicity.
pub const CLUSTER_RADIUS: f64 = 1e-7;

/// A root with the size of its cluster.
#[derive(Debug, Clone, Copy)]
pub struct RootWithMultiplicity {
    pub z: Complex64,
    pub multiplicity: u32,
}

/// Horner evaluation of p and p' (coefficients ascending).
fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Rounding floor of a Horner evaluation at |z|: eps * sum |c_k| |z|^k.
/// |p(z)| below a few of these is numerically indistinguishable from zero.
fn noise_floor(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let mut acc = 0.0f64;
    for &c in coeffs.iter().rev() {
        acc = acc * r + c.norm();
    }
    f64::EPSILON * acc
}

/// All complex roots of the polynomial with the given ascending coefficients.
///
/// Initial points sit on a Cauchy-bound circle with an irrational angular
/// offset to break symmetry. Iteration stops when every correction falls
/// below `tol * (1 + |z|)`.
pub fn aberth_roots(coeffs: &[Complex64], max_iter: usize, tol: f64) -> Result<Vec<Complex64>> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    if lead.norm() == 0.0 {
        return Err(Error::Validation("leading coefficient is zero".into()));
    }
    // Cauchy bound caps every root; the geometric-mean radius
    // |c_0 / c_n|^{1/n} centers the start circle on the typical root size.
    let cauchy = 1.0
        + coeffs[..degree]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0f64, f64::max);
    let c0 = coeffs
        .iter()
        .find(|c| c.norm() > 0.0)
        .expect("nonzero polynomial")
        .norm();
    let base = (c0 / lead.norm()).powf(1.0 / degree as f64).clamp(1e-3, cauchy);
    let mut zs: Vec<Complex64> = (0..degree)
        .map(|i| {
            let angle = std::f64::consts::TAU * (i as f64 + 0.353) / degree as f64 + 0.61;
            // Slight radius ramp so no guess ring is perfectly symmetric.
            let radius = base * (1.0 + 0.2 * (i as f64 + 1.0) / degree as f64);
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..max_iter {
        let mut max_step = 0.0f64;
        let mut all_settled = true;
        for i in 0..degree {
            let (p, dp) = eval_with_derivative(coeffs, zs[i]);
            // At the rounding floor the residual carries no information;
            // the approximant cannot be improved further.
            if p.norm() <= 8.0 * noise_floor(coeffs, zs[i]) {
                continue;
            }
            all_settled = false;
            let newton = if dp.norm() > 0.0 { p / dp } else { Complex64::new(tol, tol) };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..degree {
                if j != i {
                    let diff = zs[i] - zs[j];
                    if diff.norm() > 1e-300 {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm() > 1e-300 { newton / denom } else { newton };
            zs[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + zs[i].norm()));
        }
        if all_settled || max_step < tol {
            symmetrize_if_real(coeffs, &mut zs);
            return Ok(zs);
        }
    }
    Err(Error::Solver(format!(
        "Aberth iteration did not converge in {max_iter} steps for degree {degree}; \
         coefficients = {:?}",
        summarize(coeffs)
    )))
}

fn summarize(coeffs: &[Complex64]) -> Vec<(usize, f64, f64)> {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() != 0.0)
        .map(|(i, c)| (i, c.re, c.im))
        .collect()
}

/// For real-coefficient polynomials, pair roots with their conjugates and
/// average so the returned set is exactly closed under conjugation.
fn symmetrize_if_real(coeffs: &[Complex64], zs: &mut [Complex64]) {
    if coeffs.iter().any(|c| c.im != 0.0) {
        return;
    }
    let n = zs.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        if zs[i].im.abs() < 1e-9 * (1.0 + zs[i].re.abs()) {
            zs[i].im = 0.0;
            used[i] = true;
            continue;
        }
        // Find the nearest conjugate partner.
        let mut best = None;
        let mut best_dist = f64::INFINITY;
        for j in 0..n {
            if j != i && !used[j] {
                let d = (zs[j] - zs[i].conj()).norm();
                if d < best_dist {
                    best_dist = d;
                    best = Some(j);
                }
            }
        }
        if let Some(j) = best {
            if best_dist < 1e-6 * (1.0 + zs[i].norm()) {
                let avg = 0.5 * (zs[i] + zs[j].conj());
                zs[i] = avg;
                zs[j] = avg.conj();
                used[i] = true;
                used[j] = true;
            }
        }
    }
}

/// Cluster converged roots into distinct roots with multiplicities and
/// Newton-polish each representative (modified Newton for multiple roots).
///
/// Aberth approximants of a root of multiplicity mu only agree to about
/// eps^(1/mu), so clustering runs in two stages: a coarse pass gathers the
/// approximants, the cluster centroid is polished with the modified Newton
/// step mu p/p', and the polished points are validated against the final
/// [`CLUSTER_RADIUS`]. A coarse cluster whose members refuse to collapse is
/// split back into simple roots.
pub fn cluster_roots(coeffs: &[Complex64], roots: &[Complex64]) -> Vec<RootWithMultiplicity> {
    let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let coarse = 1e-4 * scale;
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| {
        (roots[a].re, roots[a].im)
            .partial_cmp(&(roots[b].re, roots[b].im))
            .expect("finite roots")
    });
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for &idx in &order {
        let z = roots[idx];
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|&m| (m - z).norm() < coarse))
        {
            Some(cluster) => cluster.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut result: Vec<RootWithMultiplicity> = Vec::new();
    for cluster in clusters {
        let mu = cluster.len() as u32;
        let centroid = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        let polished = polish(coeffs, centroid, mu);
        // A mu-fold root can only be localized to (noise / |p^(mu)|)^(1/mu);
        // insist the modified-Newton polishes of all members collapse within
        // that limit. Twin simple roots fail this and stay separate.
        let limit = localization_limit(coeffs, polished, mu).max(CLUSTER_RADIUS);
        let collapsed = cluster
            .iter()
            .all(|&m| (polish(coeffs, m, mu) - polished).norm() < limit);
        if mu == 1 || collapsed {
            result.push(RootWithMultiplicity { z: polished, multiplicity: mu });
        } else {
            // Distinct close roots, not a multiple root: keep them simple.
            for &m in &cluster {
                result.push(RootWithMultiplicity { z: polish(coeffs, m, 1), multiplicity: 1 });
            }
        }
    }
    result.sort_by(|a, b| {
        (a.z.im, a.z.re).partial_cmp(&(b.z.im, b.z.re)).expect("finite roots")
    });
    result
}

fn polish(coeffs: &[Complex64], mut z: Complex64, multiplicity: u32) -> Complex64 {
    for _ in 0..12 {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 || p.norm() <= 4.0 * noise_floor(coeffs, z) {
            break;
        }
        let step = multiplicity as f64 * p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() < 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    if z.im.abs() < 1e-12 * (1.0 + z.re.abs()) {
        z.im = 0.0;
    }
    z
}

/// Radius below which a mu-fold root cannot be pinned down in f64:
/// (mu! noise / |p^(mu)|)^(1/mu), padded by an order of magnitude.
fn localization_limit(coeffs: &[Complex64], z: Complex64, mu: u32) -> f64 {
    // p^(mu)(z) via repeated synthetic differentiation.
    let mut work: Vec<Complex64> = coeffs.to_vec();
    let mut factorial = 1.0f64;
    for pass in 0..mu {
        factorial *= (pass + 1) as f64;
        for (k, c) in work.iter_mut().enumerate().skip(1) {
            *c *= k as f64;
        }
        work.remove(0);
        if work.is_empty() {
            return f64::INFINITY;
        }
    }
    let mut dmu = Complex64::new(0.0, 0.0);
    for &c in work.iter().rev() {
        dmu = dmu * z + c;
    }
    if dmu.norm() == 0.0 {
        return f64::INFINITY;
    }
    let noise = noise_floor(coeffs, z);
    10.0 * (factorial * noise / dmu.norm()).powf(1.0 / mu as f64)
}

/// Convenience: solve and cluster in one call.
pub fn roots_with_multiplicity(
    coeffs: &[Complex64],
    max_iter: usize,
    tol: f64,
) -> Result<Vec<RootWithMultiplicity>> {
    let raw = aberth_roots(coeffs, max_iter, tol)?;
    Ok(cluster_roots(coeffs, &raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_poly(cs: &[f64]) -> Vec<Complex64> {
        cs.iter().map(|&c| Complex64::new(c, 0.0)).collect()
    }

    #[test]
    fn quadratic_roots() {
        // z^2 + z - 1: roots 1/phi and -phi.
        let roots = roots_with_multiplicity(&real_poly(&[-1.0, 1.0, 1.0]), 100, 1e-13).unwrap();
        assert_eq!(roots.len(), 2);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut values: Vec<f64> = roots.iter().map(|r| r.z.re).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((values[0] + phi).abs() < 1e-12);
        assert!((values[1] - 1.0 / phi).abs() < 1e-12);
    }

    #[test]
    fn multiple_root_detected() {
        // (z - 1)^3 (z + 2).
        let coeffs = real_poly(&[-2.0, 5.0, -3.0, -1.0, 1.0]);
        let roots = roots_with_multiplicity(&coeffs, 400, 1e-12).unwrap();
        let total: u32 = roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 4);
        let triple = roots
            .iter()
            .find(|r| r.multiplicity == 3)
            .expect("triple root at z = 1");
        assert!((triple.z - Complex64::new(1.0, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn high_degree_trinomial() {
        // z^89 + z^55 = 1, the shape of lattice-surrogate polynomials.
        let mut cs = vec![Complex64::new(0.0, 0.0); 90];
        cs[0] = Complex64::new(-1.0, 0.0);
        cs[55] = Complex64::new(1.0, 0.0);
        cs[89] = Complex64::new(1.0, 0.0);
        let roots = roots_with_multiplicity(&cs, 400, 1e-13).unwrap();
        let total: u32 = roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 89);
        for r in &roots {
            let (p, _) = eval_with_derivative(&cs, r.z);
            assert!(p.norm() < 1e-10, "residual {} at {}", p.norm(), r.z);
        }
        // Real coefficients: conjugate closure is exact.
        for r in &roots {
            assert!(
                roots.iter().any(|other| (other.z - r.z.conj()).norm() == 0.0),
                "missing conjugate of {}",
                r.z
            );
        }
    }

    #[test]
    fn wilkinson_like_spread() {
        // (z-1)(z-2)...(z-8), moderately ill-conditioned.
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for k in 1..=8 {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i] -= c * k as f64;
                next[i + 1] += c;
            }
            coeffs = next;
        }
        let roots = roots_with_multiplicity(&coeffs, 500, 1e-13).unwrap();
        assert_eq!(roots.len(), 8);
        let mut res: Vec<f64> = roots.iter().map(|r| r.z.re).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, r) in res.iter().enumerate() {
            assert!((r - (k + 1) as f64).abs() < 1e-7);
        }
    }
}
