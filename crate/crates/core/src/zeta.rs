//! Closed-form evaluation of the dynamical zeta function of a self-similar
//! flow on the whole complex plane.
//!
//! Everything reduces to the entire function f(s) = 1 - sum_j exp(-w_j s):
//! zeta = 1/f, and -zeta'/zeta = f'/f with f'(s) = sum_j w_j exp(-w_j s).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::FlowSpec;

/// |f| below POLE_TOL * (1 + sum w_j exp(-w_j Re s)) marks a pole; the scale
/// tracks the natural size of f' nearby.
pub const POLE_TOL: f64 = 1e-10;

/// exp(-w s) as exp(-w Re s) * (cos(-w Im s) + i sin(-w Im s)); keeps full
/// accuracy at large |Im s| through the library's argument reduction.
#[inline]
pub fn exp_term(w: f64, s: Complex64) -> Complex64 {
    let modulus = (-w * s.re).exp();
    let phase = -w * s.im;
    Complex64::new(modulus * phase.cos(), modulus * phase.sin())
}

/// f, f' and f'' at s.
pub fn f_and_derivatives(flow: &FlowSpec, s: Complex64) -> (Complex64, Complex64, Complex64) {
    let mut f = Complex64::new(1.0, 0.0);
    let mut fp = Complex64::new(0.0, 0.0);
    let mut fpp = Complex64::new(0.0, 0.0);
    for &w in flow.weights() {
        let t = exp_term(w, s);
        f -= t;
        fp += w * t;
        fpp -= w * w * t;
    }
    (f, fp, fpp)
}

/// |f(s)| alone (cheaper than the full evaluation).
pub fn f_abs(flow: &FlowSpec, s: Complex64) -> f64 {
    let mut f = Complex64::new(1.0, 0.0);
    for &w in flow.weights() {
        f -= exp_term(w, s);
    }
    f.norm()
}

/// Scale used for pole detection and residual bounds at a given s.
pub fn residual_scale(flow: &FlowSpec, re_s: f64) -> f64 {
    1.0 + flow.weights().iter().map(|&w| w * (-w * re_s).exp()).sum::<f64>()
}

/// Zeta data at one point. `zeta` and `neg_log_deriv` are `None` exactly
/// when s is a pole (f vanished to within the pole tolerance); f and its
/// derivatives are always retained.
#[derive(Debug, Clone, Copy)]
pub struct ZetaEvaluation {
    pub s: Complex64,
    pub zeta: Option<Complex64>,
    pub neg_log_deriv: Option<Complex64>,
    pub f_value: Complex64,
    pub f_prime: Complex64,
    pub f_double_prime: Complex64,
    pub is_pole: bool,
}

/// Evaluate zeta, -zeta'/zeta, f, f', f'' at any complex s.
///
/// N = 0 gives zeta = 1 everywhere; N = 1 gives the circle flow's
/// (1 - exp(-s w))^{-1}. Both fall out of the closed form directly.
pub fn evaluate(flow: &FlowSpec, s: Complex64) -> ZetaEvaluation {
    let (f, fp, fpp) = f_and_derivatives(flow, s);
    let is_pole = f.norm() < POLE_TOL * residual_scale(flow, s.re);
    let (zeta, neg_log_deriv) = if is_pole {
        (None, None)
    } else {
        (Some(f.inv()), Some(fp / f))
    };
    ZetaEvaluation { s, zeta, neg_log_deriv, f_value: f, f_prime: fp, f_double_prime: fpp, is_pole }
}

/// Result of a zero-free sweep over a sample grid.
#[derive(Debug, Clone, Copy)]
pub struct ZeroFreeReport {
    pub samples: usize,
    pub poles_skipped: usize,
    /// Minimum |zeta| over non-pole samples.
    pub min_modulus: f64,
    pub min_at: Complex64,
    /// Every non-pole sample satisfied |zeta| >= 1/(1 + sum r_j^{Re s}).
    pub all_above_bound: bool,
}

/// Verify |zeta| >= 1/(1 + sum r_j^{Re s}) > 0 on every sample.
///
/// The bound is the triangle inequality applied to f; a violation would mean
/// the evaluation itself is broken, so it is reported rather than assumed.
pub fn zero_free_sweep(flow: &FlowSpec, samples: &[Complex64]) -> ZeroFreeReport {
    let mut min_modulus = f64::INFINITY;
    let mut min_at = Complex64::new(0.0, 0.0);
    let mut poles = 0usize;
    let mut all_above = true;
    for &s in samples {
        let ev = evaluate(flow, s);
        let Some(z) = ev.zeta else {
            poles += 1;
            continue;
        };
        let modulus = z.norm();
        let denom: f64 =
            1.0 + flow.weights().iter().map(|&w| (-w * s.re).exp()).sum::<f64>();
        if modulus < 1.0 / denom - 1e-12 {
            all_above = false;
        }
        if modulus < min_modulus {
            min_modulus = modulus;
            min_at = s;
        }
    }
    ZeroFreeReport {
        samples: samples.len(),
        poles_skipped: poles,
        min_modulus,
        min_at,
        all_above_bound: all_above,
    }
}

/// -zeta'/zeta at s = 0, which collapses to -(1/(N-1)) sum_j w_j.
pub fn log_deriv_at_zero(flow: &FlowSpec) -> Result<f64> {
    let n = flow.n();
    if n < 2 {
        return Err(Error::Domain(format!(
            "-zeta'/zeta(0) needs N >= 2, got N = {n}"
        )));
    }
    Ok(-flow.weights().iter().sum::<f64>() / (n as f64 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::solve_dimension;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cantor_zeta_at_zero_is_minus_one() {
        let ev = evaluate(&FlowSpec::cantor(), c(0.0, 0.0));
        let z = ev.zeta.unwrap();
        assert!((z - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pole_detected_at_dimension() {
        let flow = FlowSpec::fibonacci();
        let d = solve_dimension(&flow).unwrap().d;
        let ev = evaluate(&flow, c(d, 0.0));
        assert!(ev.is_pole);
        assert!(ev.zeta.is_none());
        assert!(ev.f_value.norm() < 1e-12);
    }

    #[test]
    fn golden_zeta_at_one_finite_positive() {
        let flow = FlowSpec::golden();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let ev = evaluate(&flow, c(1.0, 0.0));
        let z = ev.zeta.unwrap();
        let expected = 1.0 / (1.0 - 0.5 - 2f64.powf(-phi));
        assert!(z.im.abs() < 1e-14);
        assert!(z.re > 0.0);
        assert!((z.re - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn zeta_times_f_is_one_off_poles() {
        let flow = FlowSpec::golden();
        for &s in &[c(2.0, 3.0), c(0.3, -41.0), c(-1.0, 7.7), c(1.5, 1e5), c(0.9, 1e6)] {
            let ev = evaluate(&flow, s);
            let z = ev.zeta.unwrap();
            assert!((z * ev.f_value - c(1.0, 0.0)).norm() < 1e-12);
            let nld = ev.neg_log_deriv.unwrap();
            assert!((nld - ev.f_prime / ev.f_value).norm() < 1e-12 * nld.norm().max(1.0));
        }
    }

    #[test]
    fn reflection_symmetry() {
        let flow = FlowSpec::new(vec![0.4, 1.1, 2.3]).unwrap();
        for &s in &[c(0.7, 5.0), c(-0.2, 17.3), c(1.9, 123.4)] {
            let a = evaluate(&flow, s).zeta.unwrap();
            let b = evaluate(&flow, s.conj()).zeta.unwrap();
            assert!((a.conj() - b).norm() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn f_increasing_on_reals() {
        let flow = FlowSpec::golden();
        let mut prev = f_and_derivatives(&flow, c(-2.0, 0.0)).0.re;
        for i in 1..=80 {
            let s = -2.0 + i as f64 * 0.1;
            let (f, fp, _) = f_and_derivatives(&flow, c(s, 0.0));
            assert!(fp.re > 0.0);
            assert!(f.re > prev);
            prev = f.re;
        }
    }

    #[test]
    fn lattice_periodicity() {
        let flow = FlowSpec::cantor();
        let w = 3f64.ln();
        let shift = c(0.0, std::f64::consts::TAU / w);
        for &s in &[c(0.2, 1.0), c(0.63, -4.0), c(-1.0, 9.0)] {
            let a = evaluate(&flow, s).zeta.unwrap();
            let b = evaluate(&flow, s + shift).zeta.unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn zero_free_sweep_on_grid() {
        for flow in [FlowSpec::cantor(), FlowSpec::golden()] {
            let mut samples = Vec::new();
            for i in 0..100 {
                for j in 0..100 {
                    samples.push(c(-2.0 + 4.0 * i as f64 / 99.0, 50.0 * j as f64 / 99.0));
                }
            }
            let report = zero_free_sweep(&flow, &samples);
            assert!(report.all_above_bound);
            assert!(report.min_modulus > 0.0);
        }
    }

    #[test]
    fn n1_flow_bounded_away_from_zero_off_poles() {
        let flow = FlowSpec::new(vec![1.0]).unwrap();
        let samples: Vec<Complex64> =
            (0..200).map(|i| c(0.5, i as f64 * 0.37)).collect();
        let report = zero_free_sweep(&flow, &samples);
        assert!(report.all_above_bound);
    }

    #[test]
    fn log_deriv_at_zero_closed_form() {
        assert!((log_deriv_at_zero(&FlowSpec::cantor()).unwrap() + 2.0 * 3f64.ln()).abs() < 1e-14);
        assert!(
            (log_deriv_at_zero(&FlowSpec::fibonacci()).unwrap() + 3.0 * 2f64.ln()).abs() < 1e-14
        );
        let sym = FlowSpec::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!((log_deriv_at_zero(&sym).unwrap() + 1.5).abs() < 1e-14);
        assert!(log_deriv_at_zero(&FlowSpec::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn log_deriv_matches_evaluation_at_zero() {
        let flow = FlowSpec::golden();
        let ev = evaluate(&flow, c(0.0, 0.0));
        let closed = log_deriv_at_zero(&flow).unwrap();
        let nld = ev.neg_log_deriv.unwrap();
        assert!(nld.im.abs() < 1e-14);
        assert!((nld.re - closed).abs() < 1e-13);
    }
}
