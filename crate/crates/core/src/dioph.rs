//! Continued fractions, alpha-adic (Ostrowski) numeration and simultaneous
//! Diophantine approximation.
//!
//! Convergents are carried in checked 64-bit integer arithmetic; the
//! expansion stops before overflow, and for binary64 inputs it also stops
//! once q' exceeds the input's resolution (beyond that point the expansion
//! describes the f64 rational, not the intended irrational). Quadratic
//! irrationals can be supplied symbolically ([`Alpha::Golden`],
//! [`Alpha::Sqrt`]) to sidestep the truncation entirely.

use crate::error::{Error, Result};
use crate::flow::FlowSpec;

/// Cap on Q^(N-1) for the simultaneous-approximation scan.
pub const SIMULTANEOUS_SEARCH_CAP: f64 = 1e8;

/// Number being expanded: a symbolic constant or a binary64 literal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    /// The golden ratio (1 + sqrt 5)/2.
    Golden,
    /// sqrt(d) for a nonsquare integer d >= 2.
    Sqrt(u64),
    /// An arbitrary binary64 value, treated as the exact rational it is.
    Literal(f64),
}

impl Alpha {
    pub fn value(&self) -> f64 {
        match *self {
            Alpha::Golden => (1.0 + 5f64.sqrt()) / 2.0,
            Alpha::Sqrt(d) => (d as f64).sqrt(),
            Alpha::Literal(x) => x,
        }
    }
}

/// Exact per-step state of the expansion.
enum CfState {
    /// num/den, the current complete quotient as an exact rational.
    Literal { num: i128, den: i128 },
    Golden,
    /// (P + sqrt d)/Q with the classical invariant Q | d - P^2.
    Sqrt { d: u64, a0: i64, p: i64, q: i64 },
}

impl CfState {
    fn new(kind: Alpha) -> Result<Self> {
        match kind {
            Alpha::Golden => Ok(CfState::Golden),
            Alpha::Sqrt(d) => {
                let r = d.isqrt();
                if r * r == d {
                    return Err(Error::Validation(format!(
                        "sqrt({d}) is rational; use a literal instead"
                    )));
                }
                if d < 2 {
                    return Err(Error::Validation("sqrt(d) requires d >= 2".into()));
                }
                Ok(CfState::Sqrt { d, a0: r as i64, p: 0, q: 1 })
            }
            Alpha::Literal(x) => {
                if !x.is_finite() || x <= 0.0 {
                    return Err(Error::Validation(format!(
                        "continued fraction input {x} must be a finite positive number"
                    )));
                }
                if !(1e-9..=1e15).contains(&x) {
                    return Err(Error::Validation(format!(
                        "continued fraction input {x} outside supported range [1e-9, 1e15]"
                    )));
                }
                let (num, den) = f64_to_exact_fraction(x);
                Ok(CfState::Literal { num, den })
            }
        }
    }

    /// Current complete quotient alpha_n as f64 (accurate to ~1 ulp).
    fn complete_quotient(&self) -> f64 {
        match *self {
            CfState::Literal { num, den } => num as f64 / den as f64,
            CfState::Golden => (1.0 + 5f64.sqrt()) / 2.0,
            CfState::Sqrt { d, p, q, .. } => (p as f64 + (d as f64).sqrt()) / q as f64,
        }
    }

    /// Emit a_n and advance to alpha_{n+1}. Returns None once the expansion
    /// has terminated (rational input fully consumed).
    fn step(&mut self) -> Option<i64> {
        match self {
            CfState::Literal { num, den } => {
                if *den == 0 {
                    return None;
                }
                let a = num.div_euclid(*den);
                let rem = *num - a * *den;
                (*num, *den) = (*den, rem);
                Some(a as i64)
            }
            CfState::Golden => Some(1),
            CfState::Sqrt { d, a0, p, q } => {
                let a = (*p + *a0).div_euclid(*q);
                let p_next = a * *q - *p;
                let q_next = (*d as i64 - p_next * p_next) / *q;
                (*p, *q) = (p_next, q_next);
                Some(a)
            }
        }
    }

    fn is_terminated(&self) -> bool {
        matches!(self, CfState::Literal { den, .. } if *den == 0)
    }
}

/// Decompose a positive finite f64 into an exact fraction num/den in i128.
fn f64_to_exact_fraction(x: f64) -> (i128, i128) {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = (bits & ((1u64 << 52) - 1)) as i128;
    let (m, e) = if exponent == 0 {
        (mantissa, -1074i64)
    } else {
        (mantissa | (1i128 << 52), exponent - 1075)
    };
    if e >= 0 {
        (m << e, 1)
    } else {
        (m, 1i128 << (-e).min(120))
    }
}

/// Continued fraction [[a0, a1, a2, ...]] with convergents and the partial
/// products q'_n = alpha_1 ... alpha_n.
///
/// Convergent recurrences use the seeds p_{-2} = q_{-1} = 0 and
/// p_{-1} = q_{-2} = 1, so q_n alpha - p_n = (-1)^n / q'_{n+1}.
#[derive(Debug, Clone)]
pub struct ContinuedFraction {
    kind: Alpha,
    alpha: f64,
    a: Vec<i64>,
    p: Vec<i64>,
    q: Vec<i64>,
    /// q_prime[k] = q'_k; one entry longer than `a` unless the expansion
    /// stopped early for precision or overflow.
    q_prime: Vec<f64>,
    terminated: bool,
    truncated: bool,
}

impl ContinuedFraction {
    /// Expand to at most `depth` partial quotients.
    ///
    /// Stops earlier when the input is rational (`terminated`), when a
    /// binary64 literal runs out of resolution, or when the convergents
    /// would overflow 64-bit integers (`truncated`).
    pub fn expand(kind: Alpha, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Validation("continued fraction depth must be >= 1".into()));
        }
        let mut state = CfState::new(kind)?;
        let alpha = state.complete_quotient();
        let resolution_limit = match kind {
            Alpha::Literal(x) => 1.0 / (x * f64::EPSILON),
            _ => f64::INFINITY,
        };
        let mut cf = ContinuedFraction {
            kind,
            alpha,
            a: Vec::new(),
            p: Vec::new(),
            q: Vec::new(),
            q_prime: vec![1.0],
            terminated: false,
            truncated: false,
        };
        // Rolling (p_{k-1}, p_{k-2}) and (q_{k-1}, q_{k-2}).
        let (mut p1, mut p2) = (1i64, 0i64);
        let (mut q1, mut q2) = (0i64, 1i64);
        for _ in 0..depth {
            let Some(a) = state.step() else {
                cf.terminated = true;
                break;
            };
            let (Some(pk), Some(qk)) = (
                a.checked_mul(p1).and_then(|v| v.checked_add(p2)),
                a.checked_mul(q1).and_then(|v| v.checked_add(q2)),
            ) else {
                cf.truncated = true;
                break;
            };
            cf.a.push(a);
            cf.p.push(pk);
            cf.q.push(qk);
            (p2, p1) = (p1, pk);
            (q2, q1) = (q1, qk);
            if state.is_terminated() {
                // alpha_{k+1} is infinite: q_k alpha - p_k = 0 exactly.
                cf.q_prime.push(f64::INFINITY);
                cf.terminated = true;
                break;
            }
            let next_quotient = state.complete_quotient();
            let qp = cf.q_prime.last().unwrap() * next_quotient;
            cf.q_prime.push(qp);
            if qp > resolution_limit {
                cf.truncated = true;
                break;
            }
        }
        if cf.a.is_empty() {
            return Err(Error::Solver("continued fraction produced no terms".into()));
        }
        Ok(cf)
    }

    pub fn kind(&self) -> Alpha {
        self.kind
    }

    /// The expanded value as f64.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn partial_quotients(&self) -> &[i64] {
        &self.a
    }

    /// Number of computed partial quotients (indices 0..depth).
    pub fn depth(&self) -> usize {
        self.a.len()
    }

    /// (p_k, q_k).
    pub fn convergent(&self, k: usize) -> (i64, i64) {
        (self.p[k], self.q[k])
    }

    pub fn denominators(&self) -> &[i64] {
        &self.q
    }

    pub fn numerators(&self) -> &[i64] {
        &self.p
    }

    /// q'_k = alpha_1 ... alpha_k; index 0 holds the empty product 1.
    pub fn q_primes(&self) -> &[f64] {
        &self.q_prime
    }

    /// True when the expansion consumed a rational value completely.
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// True when the expansion stopped at binary64 resolution or at the
    /// 64-bit convergent limit before reaching the requested depth.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn max_partial_quotient(&self) -> i64 {
        self.a.iter().skip(1).copied().max().unwrap_or(1).max(1)
    }

    /// q * alpha - p, computed without catastrophic cancellation.
    ///
    /// For quadratic kinds the value (u + v sqrt d)/c is rationalized by its
    /// conjugate so the only rounding is one sqrt, one divide and one
    /// subtraction free of cancellation. For literals the numerator is exact
    /// integer arithmetic.
    pub fn residual(&self, q: i64, p: i64) -> f64 {
        let (qi, pi) = (q as i128, p as i128);
        match self.kind {
            Alpha::Golden => {
                // q phi - p = (u + v sqrt5)/2, u = q - 2p, v = q.
                let u = qi - 2 * pi;
                let v = qi;
                let num = (u * u - 5 * v * v) as f64;
                let den = 2.0 * (u as f64 - v as f64 * 5f64.sqrt());
                num / den
            }
            Alpha::Sqrt(d) => {
                // q sqrt d - p = (d q^2 - p^2)/(q sqrt d + p).
                let num = (d as i128 * qi * qi - pi * pi) as f64;
                let den = q as f64 * (d as f64).sqrt() + p as f64;
                num / den
            }
            Alpha::Literal(x) => {
                let (num, den) = f64_to_exact_fraction(x);
                (qi * num - pi * den) as f64 / den as f64
            }
        }
    }
}

/// alpha-adic expansion n = sum_nu d_nu q_nu with the canonical digit
/// constraints: 0 <= d_nu <= a_{nu+1}; d_nu = a_{nu+1} forces d_{nu-1} = 0;
/// d_0 < a_1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OstrowskiExpansion {
    pub n: u64,
    pub digits: Vec<u32>,
}

/// Greedy division chain producing the alpha-adic digits of n.
pub fn ostrowski(n: u64, cf: &ContinuedFraction) -> Result<OstrowskiExpansion> {
    if n == 0 {
        return Err(Error::Validation("alpha-adic expansion requires n >= 1".into()));
    }
    // Largest l with q_l <= n; the caller must have expanded past it.
    let q = cf.denominators();
    let mut l = None;
    for (k, &qk) in q.iter().enumerate() {
        if qk as u64 <= n {
            l = Some(k);
        }
    }
    let l = l.ok_or_else(|| Error::NumericIntegrity("q_0 = 1 missing".into()))?;
    if l + 1 >= q.len() && !cf.terminated() {
        return Err(Error::Depth { needed: l + 1, available: q.len().saturating_sub(1) });
    }
    let mut digits = vec![0u32; l + 1];
    let mut rem = n;
    for nu in (0..=l).rev() {
        let qnu = q[nu] as u64;
        digits[nu] = (rem / qnu) as u32;
        rem %= qnu;
    }
    debug_assert_eq!(rem, 0);
    let expansion = OstrowskiExpansion { n, digits };
    debug_assert!(expansion.digits_admissible(cf));
    Ok(expansion)
}

impl OstrowskiExpansion {
    /// Reassemble sum d_nu q_nu in exact integer arithmetic.
    pub fn reconstruct(&self, cf: &ContinuedFraction) -> u64 {
        let q = cf.denominators();
        self.digits
            .iter()
            .enumerate()
            .map(|(nu, &d)| d as u128 * q[nu] as u128)
            .sum::<u128>() as u64
    }

    /// Index of the lowest nonzero digit.
    pub fn lowest_nonzero(&self) -> Option<usize> {
        self.digits.iter().position(|&d| d > 0)
    }

    /// Check the three digit constraints against the expansion's quotients.
    pub fn digits_admissible(&self, cf: &ContinuedFraction) -> bool {
        let a = cf.partial_quotients();
        for (nu, &d) in self.digits.iter().enumerate() {
            if nu + 1 >= a.len() {
                // Digits beyond the computed quotients are never produced by
                // the greedy chain when the depth precondition held.
                return d == 0;
            }
            if d as i64 > a[nu + 1] {
                return false;
            }
            if d as i64 == a[nu + 1] && nu > 0 && self.digits[nu - 1] != 0 {
                return false;
            }
        }
        if let Some(&d0) = self.digits.first() {
            if a.len() > 1 && d0 as i64 >= a[1] {
                return false;
            }
        }
        true
    }
}

/// Bracket for n alpha - m from the lowest nonzero alpha-adic digit: the
/// value lies strictly between (-1)^k / q'_{k+2} and (-1)^k / q'_k.
#[derive(Debug, Clone, Copy)]
pub struct ApproximationBracket {
    pub k: usize,
    pub m: i64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Compute m = sum_{nu>=k} d_nu p_nu and verify the strict bracket on
/// n alpha - m. A violation beyond 1e-9 of the bracket width is a numeric
/// integrity failure (the identity is exact over the reals).
pub fn orbit_of_approximation(n: u64, cf: &ContinuedFraction) -> Result<ApproximationBracket> {
    let exp = ostrowski(n, cf)?;
    let k = exp
        .lowest_nonzero()
        .ok_or_else(|| Error::NumericIntegrity("zero expansion for n >= 1".into()))?;
    let p = cf.numerators();
    let mut m: i128 = 0;
    for (nu, &d) in exp.digits.iter().enumerate() {
        m += d as i128 * p[nu] as i128;
    }
    let m = i64::try_from(m)
        .map_err(|_| Error::Resource(format!("m overflows i64 for n = {n}")))?;
    let qp = cf.q_primes();
    if qp.len() <= k + 2 {
        return Err(Error::Depth { needed: k + 2, available: qp.len().saturating_sub(1) });
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let e_inner = sign / qp[k + 2];
    let e_outer = sign / qp[k];
    let (lower, upper) = if e_inner < e_outer { (e_inner, e_outer) } else { (e_outer, e_inner) };
    let value = cf.residual(n as i64, m);
    let slack = 1e-9 * (upper - lower);
    if value < lower - slack || value > upper + slack {
        return Err(Error::NumericIntegrity(format!(
            "n alpha - m = {value} escapes bracket ({lower}, {upper}) for n = {n}, k = {k}"
        )));
    }
    Ok(ApproximationBracket { k, m, value, lower, upper })
}

/// One solution of the simultaneous approximation problem: q < Q^(N-1) with
/// |q w_j - p_j w_1| <= w_1/Q for every j.
#[derive(Debug, Clone)]
pub struct SimultaneousApproximation {
    pub q: u64,
    pub p: Vec<i64>,
    /// |2 pi (q w_j / w_1 - p_j)| per j.
    pub errors: Vec<f64>,
    pub quality: f64,
}

/// Round half away from zero (tie-breaking rule for nearest integers p_j).
fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// Find the smallest q in [1, Q^(N-1)) meeting the approximation bound.
///
/// N = 2 uses convergent denominators of w_2/w_1 (which realize the optimum);
/// N > 2 scans q directly. The scan is capped at
/// [`SIMULTANEOUS_SEARCH_CAP`]; existence below the cap is guaranteed by the
/// Dirichlet box principle.
pub fn simultaneous_approx(flow: &FlowSpec, quality: f64) -> Result<SimultaneousApproximation> {
    let n = flow.n();
    if n < 2 {
        return Err(Error::Domain("simultaneous approximation requires N >= 2".into()));
    }
    if quality <= 1.0 {
        return Err(Error::Validation("quality Q must exceed 1".into()));
    }
    let budget = quality.powi(n as i32 - 1);
    if budget > SIMULTANEOUS_SEARCH_CAP {
        return Err(Error::Resource(format!(
            "Q^(N-1) = {budget:.3e} exceeds the search cap {SIMULTANEOUS_SEARCH_CAP:.0e}; \
             reduce Q"
        )));
    }
    let w1 = flow.weight(0);
    let ratios: Vec<f64> = flow.weights().iter().map(|w| w / w1).collect();

    let q_found = if n == 2 {
        let cf = ContinuedFraction::expand(Alpha::Literal(ratios[1]), 96)?;
        let qp = cf.q_primes();
        let mut found = None;
        for k in 0..cf.depth() {
            // The >= comparison tolerates float fuzz when Q equals q'_{k+1}.
            if k + 1 < qp.len() && qp[k + 1] >= quality * (1.0 - 1e-12) {
                found = Some(cf.convergent(k).1 as u64);
                break;
            }
        }
        found.ok_or_else(|| {
            Error::Resource(format!("continued fraction too short to reach Q = {quality}"))
        })?
    } else {
        let cap = budget.ceil() as u64;
        let mut found = None;
        'scan: for q in 1..=cap {
            for ratio in &ratios[1..] {
                let t = q as f64 * ratio;
                if (t - round_half_away(t)).abs() > 1.0 / quality {
                    continue 'scan;
                }
            }
            found = Some(q);
            break;
        }
        found.ok_or_else(|| {
            Error::NumericIntegrity(format!(
                "no q <= {cap} satisfies the box-principle bound for Q = {quality}"
            ))
        })?
    };

    let p: Vec<i64> = ratios
        .iter()
        .map(|r| round_half_away(q_found as f64 * r) as i64)
        .collect();
    let errors: Vec<f64> = ratios
        .iter()
        .zip(&p)
        .map(|(r, &pj)| (std::f64::consts::TAU * (q_found as f64 * r - pj as f64)).abs())
        .collect();
    // Both Lemma inequalities are part of the contract.
    for (j, (r, &pj)) in ratios.iter().zip(&p).enumerate() {
        let err = (q_found as f64 * r - pj as f64).abs();
        if err > 1.0 / quality + 1e-12 {
            return Err(Error::NumericIntegrity(format!(
                "|q w_{j} - p_{j} w_1| = {} w_1 exceeds w_1/Q = {}",
                err,
                1.0 / quality
            )));
        }
    }
    if (q_found as f64) >= budget && q_found > 1 {
        return Err(Error::NumericIntegrity(format!(
            "q = {q_found} is not below Q^(N-1) = {budget}"
        )));
    }
    Ok(SimultaneousApproximation { q: q_found, p, errors, quality })
}

/// One row of the approximability profile.
#[derive(Debug, Clone, Copy)]
pub struct ApproximationQuality {
    pub q: u64,
    /// e(q) = max_j |q w_j - p_j w_1| over nearest integers p_j.
    pub max_error: f64,
    /// e(q) q^(1/(N-1)) / w_1, the empirical badly-approximable ratio.
    pub bound_ratio: f64,
}

/// Report e(q) and the normalized ratio for q = 1..q_max. Classification
/// thresholds are left to the caller; this is raw data.
pub fn approximability_profile(flow: &FlowSpec, q_max: u64) -> Result<Vec<ApproximationQuality>> {
    let n = flow.n();
    if n < 2 {
        return Err(Error::Domain("approximability profile requires N >= 2".into()));
    }
    let w1 = flow.weight(0);
    let exponent = 1.0 / (n as f64 - 1.0);
    let mut rows = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        let mut e = 0.0f64;
        for j in 1..n {
            let t = q as f64 * flow.weight(j) / w1;
            let err = (t - round_half_away(t)).abs() * w1;
            e = e.max(err);
        }
        rows.push(ApproximationQuality {
            q,
            max_error: e,
            bound_ratio: e * (q as f64).powf(exponent) / w1,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn golden_ratio_expansion() {
        let cf = ContinuedFraction::expand(Alpha::Golden, 12).unwrap();
        assert!(cf.partial_quotients().iter().all(|&a| a == 1));
        // q_k = F_{k+1}: 1, 1, 2, 3, 5, 8, 13, 21, 34, 55, ...
        assert_eq!(&cf.denominators()[..10], &[1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
        assert_eq!(&cf.numerators()[..10], &[1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        // q'_k = phi^k.
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for (k, &qp) in cf.q_primes().iter().enumerate() {
            assert!((qp - phi.powi(k as i32)).abs() < 1e-9 * phi.powi(k as i32));
        }
    }

    #[test]
    fn rational_literal_terminates() {
        let cf = ContinuedFraction::expand(Alpha::Literal(2.5), 10).unwrap();
        assert_eq!(cf.partial_quotients(), &[2, 2]);
        assert!(cf.terminated());
        assert_eq!(cf.convergent(1), (5, 2));
        assert!(cf.q_primes().last().unwrap().is_infinite());
    }

    #[test]
    fn literal_matches_float_floor_recursion() {
        let alpha = 1.0 + 1.0 / std::f64::consts::PI;
        let cf = ContinuedFraction::expand(Alpha::Literal(alpha), 6).unwrap();
        // Independent oracle: plain floor recursion on the float value.
        let mut x = alpha;
        let mut oracle = Vec::new();
        for _ in 0..6 {
            let a = x.floor();
            oracle.push(a as i64);
            x = 1.0 / (x - a);
        }
        assert_eq!(cf.partial_quotients(), &oracle[..]);
    }

    #[test]
    fn approx_identity_residuals() {
        // q_k alpha - p_k = (-1)^k / q'_{k+1} to 1e-9 relative.
        for kind in [Alpha::Golden, Alpha::Sqrt(2), Alpha::Sqrt(7), Alpha::Literal(1.0 + 1.0 / std::f64::consts::E)] {
            let cf = ContinuedFraction::expand(kind, 30).unwrap();
            let qp = cf.q_primes();
            for k in 0..cf.depth() {
                if k + 1 >= qp.len() || !qp[k + 1].is_finite() {
                    break;
                }
                let (p, q) = cf.convergent(k);
                let lhs = cf.residual(q, p);
                let rhs = if k % 2 == 0 { 1.0 } else { -1.0 } / qp[k + 1];
                assert!(
                    (lhs - rhs).abs() < 1e-9 / qp[k + 1],
                    "kind {kind:?} k {k}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn denominators_grow_at_least_like_phi() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for kind in [Alpha::Golden, Alpha::Sqrt(3), Alpha::Literal(std::f64::consts::PI)] {
            let cf = ContinuedFraction::expand(kind, 40).unwrap();
            for (k, &q) in cf.denominators().iter().enumerate() {
                assert!(q as f64 >= phi.powi(k as i32 - 1) - 1e-9);
            }
        }
    }

    #[test]
    fn ostrowski_examples_for_phi() {
        let cf = ContinuedFraction::expand(Alpha::Golden, 20).unwrap();
        // 60 = 55 + 5 = q_9 + q_4.
        let e = ostrowski(60, &cf).unwrap();
        let mut expected = vec![0u32; 10];
        expected[9] = 1;
        expected[4] = 1;
        assert_eq!(e.digits, expected);
        // 50 = 34 + 13 + 3 = q_8 + q_6 + q_3.
        let e = ostrowski(50, &cf).unwrap();
        let mut expected = vec![0u32; 9];
        expected[8] = 1;
        expected[6] = 1;
        expected[3] = 1;
        assert_eq!(e.digits, expected);
        // n = 1 against a_1 = 1: the digit lands at index 1.
        let e = ostrowski(1, &cf).unwrap();
        assert_eq!(e.digits, vec![0, 1]);
    }

    #[test]
    fn ostrowski_base_case_with_a1_greater_than_one() {
        let cf = ContinuedFraction::expand(Alpha::Sqrt(2), 10).unwrap();
        assert!(cf.partial_quotients()[1] > 1);
        let e = ostrowski(1, &cf).unwrap();
        assert_eq!(e.digits, vec![1]);
    }

    #[test]
    fn ostrowski_roundtrip_and_constraints() {
        let kinds = [Alpha::Golden, Alpha::Sqrt(2), Alpha::Sqrt(3), Alpha::Sqrt(7)];
        for kind in kinds {
            let cf = ContinuedFraction::expand(kind, 40).unwrap();
            let mut rng = StdRng::seed_from_u64(17);
            for _ in 0..2000 {
                let n = rng.gen_range(1..=100_000u64);
                let e = ostrowski(n, &cf).unwrap();
                assert_eq!(e.reconstruct(&cf), n);
                assert!(e.digits_admissible(&cf), "{kind:?} n = {n}: {:?}", e.digits);
            }
        }
    }

    #[test]
    fn ostrowski_uniqueness_small_n() {
        // Exhaustive: no other admissible digit string sums to n (n <= 2000).
        let cf = ContinuedFraction::expand(Alpha::Golden, 20).unwrap();
        let q: Vec<u64> = cf.denominators().iter().map(|&v| v as u64).collect();
        let a = cf.partial_quotients();
        let top = q.iter().position(|&v| v > 2000).unwrap();
        for n in 1..=2000u64 {
            let count = count_admissible(&q[..=top], a, n);
            assert_eq!(count, 1, "n = {n} has {count} admissible expansions");
        }
    }

    fn count_admissible(q: &[u64], a: &[i64], n: u64) -> usize {
        // DFS over digit positions from the top; prune on remaining capacity.
        fn rec(q: &[u64], a: &[i64], idx: usize, rem: u64, prev_zero_required: bool) -> usize {
            if idx == 0 {
                // d_0 < a_1, d_0 = rem / q_0 must consume everything.
                let d0 = rem;
                let limit = if a.len() > 1 { (a[1] - 1) as u64 } else { u64::MAX };
                return (d0 <= limit && !(prev_zero_required && d0 != 0)) as usize;
            }
            let mut total = 0;
            let cap = a.get(idx + 1).copied().unwrap_or(i64::MAX) as u64;
            let max_d = (rem / q[idx]).min(cap);
            for d in 0..=max_d {
                if prev_zero_required && d != 0 {
                    continue;
                }
                let next_zero_required = d == cap && cap > 0;
                total += rec(q, a, idx - 1, rem - d * q[idx], next_zero_required);
            }
            total
        }
        rec(q, a, q.len() - 1, n, false)
    }

    #[test]
    fn bracket_examples() {
        let cf = ContinuedFraction::expand(Alpha::Golden, 20).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        // n = 60: k = 4, even bracket.
        let b = orbit_of_approximation(60, &cf).unwrap();
        assert_eq!(b.k, 4);
        assert_eq!(b.m, 97);
        assert!(b.lower < b.value && b.value < b.upper);
        assert!(b.lower > 0.0);
        assert!((b.value - (60.0 * phi - 97.0)).abs() < 1e-9);
        // n = 50: k = 3, negative bracket.
        let b = orbit_of_approximation(50, &cf).unwrap();
        assert_eq!(b.k, 3);
        assert!(b.upper < 0.0);
        assert!(b.lower < b.value && b.value < b.upper);
        // Single digit n = q_k: value is exactly (-1)^k / q'_{k+1}.
        let b = orbit_of_approximation(55, &cf).unwrap();
        assert_eq!(b.k, 9);
        let expected = -1.0 / cf.q_primes()[10];
        assert!((b.value - expected).abs() < 1e-12);
        assert!(b.lower < b.value && b.value < b.upper);
    }

    #[test]
    fn bracket_holds_for_random_n() {
        for kind in [Alpha::Golden, Alpha::Sqrt(2), Alpha::Sqrt(7)] {
            let cf = ContinuedFraction::expand(kind, 40).unwrap();
            let mut rng = StdRng::seed_from_u64(23);
            for _ in 0..2500 {
                let n = rng.gen_range(1..=200_000u64);
                let b = orbit_of_approximation(n, &cf).unwrap();
                assert!(b.lower < b.value && b.value < b.upper, "{kind:?} n = {n}");
            }
        }
    }

    #[test]
    fn simultaneous_two_generators_uses_convergents() {
        let flow = FlowSpec::golden();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        // Q = q'_{k+1} = phi^{k+1} picks q = q_k = F_{k+1}.
        for (k, expect_q) in [(4usize, 5u64), (6, 13), (9, 55)] {
            let q_quality = phi.powi(k as i32 + 1);
            let sa = simultaneous_approx(&flow, q_quality).unwrap();
            assert_eq!(sa.q, expect_q, "k = {k}");
            assert_eq!(sa.p[0] as u64, sa.q);
        }
    }

    #[test]
    fn simultaneous_rational_exact_hit() {
        let flow = FlowSpec::new(vec![1.0, 1.75]).unwrap(); // ratio 7/4
        let sa = simultaneous_approx(&flow, 16.0).unwrap();
        assert_eq!(sa.q, 4);
        assert!(sa.errors[1].abs() < 1e-12);
    }

    #[test]
    fn simultaneous_three_generators_matches_scan_oracle() {
        let flow = FlowSpec::new(vec![2f64.ln(), 3f64.ln(), 5f64.ln()]).unwrap();
        let quality = 20.0;
        let sa = simultaneous_approx(&flow, quality).unwrap();
        assert!((sa.q as f64) < quality * quality);
        for j in 1..3 {
            let t = sa.q as f64 * flow.weight(j) / flow.weight(0);
            assert!((t - t.round()).abs() <= 1.0 / quality + 1e-12);
        }
        // Exhaustive oracle: sa.q is the smallest admissible q.
        for q in 1..sa.q {
            let admissible = (1..3).all(|j| {
                let t = q as f64 * flow.weight(j) / flow.weight(0);
                (t - t.round()).abs() <= 1.0 / quality
            });
            assert!(!admissible, "q = {q} beats reported {}", sa.q);
        }
    }

    #[test]
    fn simultaneous_cap_is_enforced() {
        let flow = FlowSpec::new(vec![2f64.ln(), 3f64.ln(), 5f64.ln()]).unwrap();
        assert!(matches!(
            simultaneous_approx(&flow, 1e6),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn profile_ratio_bounded_for_golden_flow() {
        let rows = approximability_profile(&FlowSpec::golden(), 1000).unwrap();
        // phi has bounded partial quotients: q ||q phi|| stays bounded away
        // from zero (liminf is 1/sqrt 5 ~ 0.447), so the flow classifies as
        // badly approximable.
        let min_ratio = rows.iter().map(|r| r.bound_ratio).fold(f64::INFINITY, f64::min);
        assert!(min_ratio > 0.35, "min ratio {min_ratio}");
        // Convergent denominators realize the near-optimal dips.
        for &qk in &[5u64, 13, 55] {
            let row = &rows[qk as usize - 1];
            assert!(row.bound_ratio < 0.5, "q = {qk}: {}", row.bound_ratio);
        }
    }

    #[test]
    fn profile_hits_zero_on_lattice_flow() {
        let rows = approximability_profile(&FlowSpec::fibonacci(), 50).unwrap();
        for row in rows {
            assert!(row.max_error < 1e-12, "lattice flow should have exact hits");
        }
    }

    #[test]
    fn profile_matches_cf_oracle_for_two_three_flow() {
        let flow = FlowSpec::new(vec![2f64.ln(), 3f64.ln()]).unwrap();
        let alpha = 3f64.ln() / 2f64.ln();
        let rows = approximability_profile(&flow, 1000).unwrap();
        let cf = ContinuedFraction::expand(Alpha::Literal(alpha), 30).unwrap();
        // At convergent denominators the error equals w_1/q'_{k+1}.
        for k in 1..cf.depth() {
            let (p, q) = cf.convergent(k);
            if q as u64 > 1000 {
                break;
            }
            let row = &rows[q as usize - 1];
            let expected = (cf.residual(q, p)).abs() * 2f64.ln();
            assert!(
                (row.max_error - expected).abs() < 1e-9,
                "k = {k}: {} vs {expected}",
                row.max_error
            );
        }
    }
}
