//! Brute-force enumeration of primitive periodic orbits and the exact
//! counting functions psi, theta and pi built on top of it.
//!
//! Primitive orbits are represented by Lyndon words (the lexicographically
//! least rotation), generated by a weight-pruned walk of the Lyndon tree, so
//! the census is the ground truth every explicit-formula claim is measured
//! against.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::zeta::exp_term;

/// Default census memory cap, in records.
pub const DEFAULT_CENSUS_CAP: usize = 100_000_000;

/// Relative tolerance for deciding that log x sits exactly on a jump.
pub const JUMP_REL_TOL: f64 = 1e-12;

/// Jump convention for the counting functions. `Full` takes the whole jump
/// at log x = k w_t (right-continuous step function); `Half` takes half of
/// it, which is the value the pointwise explicit formula converges to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jump {
    Full,
    Half,
}

/// One primitive periodic orbit: its Lyndon representative over the
/// alphabet {1..N}, its length and its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub representative: Vec<u16>,
    pub length: usize,
    pub total_weight: f64,
}

impl OrbitRecord {
    /// Render the representative for CSV export: plain digits when the
    /// alphabet fits, dot-separated letters otherwise.
    pub fn representative_string(&self, alphabet: usize) -> String {
        if alphabet <= 9 {
            self.representative.iter().map(|l| l.to_string()).collect()
        } else {
            let parts: Vec<String> = self.representative.iter().map(|l| l.to_string()).collect();
            parts.join(".")
        }
    }
}

/// All primitive orbits with total weight <= cutoff, weight-sorted.
#[derive(Debug, Clone)]
pub struct OrbitCensus {
    flow: FlowSpec,
    cutoff: f64,
    records: Vec<OrbitRecord>,
}

/// Enumerate every primitive periodic orbit with total weight <= cutoff.
pub fn enumerate_orbits(flow: &FlowSpec, weight_cutoff: f64) -> Result<OrbitCensus> {
    enumerate_orbits_with_cap(flow, weight_cutoff, DEFAULT_CENSUS_CAP)
}

/// As [`enumerate_orbits`] with an explicit record cap.
///
/// A cutoff below w_1 yields an empty census (a verdict, not an error).
/// Exceeding the cap aborts with a resource error reporting the bound.
pub fn enumerate_orbits_with_cap(
    flow: &FlowSpec,
    weight_cutoff: f64,
    cap: usize,
) -> Result<OrbitCensus> {
    if !weight_cutoff.is_finite() || weight_cutoff < 0.0 {
        return Err(Error::Validation(format!(
            "weight cutoff {weight_cutoff} must be finite and nonnegative"
        )));
    }
    let n = flow.n();
    // Cheap a-priori size estimate: pi(e^cutoff) ~ e^(D cutoff)/(D cutoff).
    if n >= 2 {
        if let Ok(pair) = crate::flow::solve_dimension(flow) {
            let exponent = pair.d * weight_cutoff;
            if exponent < 700.0 {
                let estimate = exponent.exp() / exponent.max(1.0);
                if estimate > 4.0 * cap as f64 {
                    return Err(Error::Resource(format!(
                        "census estimated at {estimate:.2e} primitive orbits, \
                         over the {cap} record cap"
                    )));
                }
            } else {
                return Err(Error::Resource(format!(
                    "census estimated at exp({exponent:.0}) primitive orbits, \
                     over the {cap} record cap"
                )));
            }
        }
    }
    let mut records = Vec::new();
    if n > 0 && weight_cutoff >= flow.weight(0) {
        if n > u16::MAX as usize {
            return Err(Error::Capability(format!(
                "alphabet size {n} exceeds the enumeration limit {}",
                u16::MAX
            )));
        }
        let max_len = (weight_cutoff / flow.weight(0)).floor() as usize;
        if max_len > MAX_WORD_LENGTH {
            return Err(Error::Resource(format!(
                "cutoff admits words up to length {max_len}, \
                 over the {MAX_WORD_LENGTH} enumeration depth cap"
            )));
        }
        let mut gen = LyndonGenerator {
            weights: flow.weights(),
            cutoff: weight_cutoff,
            max_len,
            cap,
            word: vec![0u16; max_len],
            records: &mut records,
        };
        gen.run()?;
    }
    // Deterministic order: ascending weight, ties by (length, word).
    records.sort_by(|a, b| {
        a.total_weight
            .partial_cmp(&b.total_weight)
            .expect("finite weights")
            .then(a.length.cmp(&b.length))
            .then(a.representative.cmp(&b.representative))
    });
    Ok(OrbitCensus { flow: flow.clone(), cutoff: weight_cutoff, records })
}

/// Longest word the enumerator will walk; bounds the explicit DFS stack.
pub const MAX_WORD_LENGTH: usize = 1_000_000;

/// Weight-pruned Lyndon-tree walk. A node of the pre-necklace tree whose
/// period equals its length is a Lyndon word; prefix weights only grow, so
/// a branch can be cut as soon as its accumulated weight exceeds the
/// cutoff. The walk keeps its own stack: chains like 1111... can run to
/// depth cutoff/w_1, far beyond what call-stack recursion tolerates.
struct LyndonGenerator<'a> {
    weights: &'a [f64],
    cutoff: f64,
    max_len: usize,
    cap: usize,
    word: Vec<u16>,
    records: &'a mut Vec<OrbitRecord>,
}

impl LyndonGenerator<'_> {
    fn run(&mut self) -> Result<()> {
        let n = self.weights.len() as u16;
        let tol = self.cutoff * (1.0 + JUMP_REL_TOL);
        // periods[t] and acc[t] describe the prefix word[0..=t].
        let mut periods = vec![0usize; self.max_len];
        let mut acc = vec![0.0f64; self.max_len];
        let mut t = 0usize;
        // Next letter to try at position t; descending sets it to 0 so the
        // periodic candidate c0 comes first.
        let mut candidate: u16 = 0;
        loop {
            // Candidates at position t run c0, c0+1, ..., N where c0 repeats
            // the period of the parent prefix. Letters are weight-sorted, so
            // the first overweight candidate prunes the rest.
            let (c0, parent_p, parent_w) = if t == 0 {
                (1u16, 1usize, 0.0)
            } else {
                (self.word[t - periods[t - 1]], periods[t - 1], acc[t - 1])
            };
            let c = candidate.max(c0);
            let placed = c <= n && {
                let w = parent_w + self.weights[(c - 1) as usize];
                if w <= tol {
                    self.word[t] = c;
                    periods[t] = if t > 0 && c == c0 { parent_p } else { t + 1 };
                    acc[t] = w;
                    // Period equal to length: this prefix is a Lyndon word.
                    if periods[t] == t + 1 {
                        self.emit(t + 1, w)?;
                    }
                    true
                } else {
                    false
                }
            };
            if placed && t + 1 < self.max_len {
                t += 1;
                candidate = 0;
            } else if placed {
                candidate = self.word[t] + 1;
            } else if t == 0 {
                break;
            } else {
                t -= 1;
                candidate = self.word[t] + 1;
            }
        }
        Ok(())
    }

    fn emit(&mut self, len: usize, weight: f64) -> Result<()> {
        if self.records.len() >= self.cap {
            return Err(Error::Resource(format!(
                "census exceeds the {} record cap (at least {} primitive orbits below cutoff)",
                self.cap,
                self.records.len() + 1
            )));
        }
        self.records.push(OrbitRecord {
            representative: self.word[..len].to_vec(),
            length: len,
            total_weight: weight,
        });
        Ok(())
    }
}

/// Truncated Euler sum with its convergence flag.
#[derive(Debug, Clone, Copy)]
pub struct EulerSum {
    pub value: Complex64,
    /// Re s > D, where the infinite sum converges absolutely.
    pub in_convergence_region: bool,
}

/// Kahan-compensated complex accumulator. Censuses add millions of tiny
/// terms to an O(1) total; plain summation systematically drops their low
/// bits, which is visible at the 1e-10 scale the identity checks demand.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, term: Complex64) {
        let y = term - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> Complex64 {
        self.sum
    }
}

impl OrbitCensus {
    pub fn flow(&self) -> &FlowSpec {
        &self.flow
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn records(&self) -> &[OrbitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check_in_range(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x <= 1.0 {
            return Err(Error::Validation(format!("counting functions need x > 1, got {x}")));
        }
        let lx = x.ln();
        if lx > self.cutoff * (1.0 + JUMP_REL_TOL) {
            return Err(Error::OutOfCensus { log_x: lx, cutoff: self.cutoff });
        }
        Ok(lx)
    }

    /// psi(x) = sum over pairs (orbit, k >= 1) with k w_t <= log x of w_t.
    ///
    /// Summation runs in ascending weight order for bit-reproducibility.
    pub fn psi(&self, x: f64, jump: Jump) -> Result<f64> {
        let lx = self.check_in_range(x)?;
        let jtol = JUMP_REL_TOL * lx.abs().max(1.0);
        let mut total = 0.0f64;
        for rec in &self.records {
            let w = rec.total_weight;
            if w > lx + jtol {
                break;
            }
            // Largest k with k w <= log x (+ tolerance).
            let k = ((lx + jtol) / w).floor();
            if k < 1.0 {
                continue;
            }
            let at_jump = (k * w - lx).abs() <= jtol;
            let full = match (at_jump, jump) {
                (true, Jump::Half) => k - 0.5,
                _ => k,
            };
            total += w * full;
        }
        Ok(total)
    }

    /// theta(x) = sum of w_t over primitive orbits with w_t <= log x.
    pub fn theta(&self, x: f64, jump: Jump) -> Result<f64> {
        let lx = self.check_in_range(x)?;
        let jtol = JUMP_REL_TOL * lx.abs().max(1.0);
        let mut total = 0.0f64;
        for rec in &self.records {
            let w = rec.total_weight;
            if w > lx + jtol {
                break;
            }
            let at_jump = (w - lx).abs() <= jtol;
            total += match (at_jump, jump) {
                (true, Jump::Half) => 0.5 * w,
                _ => w,
            };
        }
        Ok(total)
    }

    /// pi(x) = number of primitive orbits with w_t <= log x.
    pub fn pi_count(&self, x: f64) -> Result<u64> {
        let lx = self.check_in_range(x)?;
        let jtol = JUMP_REL_TOL * lx.abs().max(1.0);
        Ok(self
            .records
            .iter()
            .take_while(|rec| rec.total_weight <= lx + jtol)
            .count() as u64)
    }

    /// Exact integral of the census step function: int_0^x psi(t) dt
    /// = sum over pairs (orbit, k) of w_t (x - exp(k w_t))^+.
    pub fn psi_integral(&self, x: f64) -> Result<f64> {
        let lx = self.check_in_range(x)?;
        let mut total = 0.0f64;
        for rec in &self.records {
            let w = rec.total_weight;
            if w > lx {
                break;
            }
            let kmax = (lx / w).floor() as i64;
            for k in 1..=kmax {
                total += w * (x - (k as f64 * w).exp()).max(0.0);
            }
        }
        Ok(total)
    }

    /// Truncated Euler sum sum_p sum_{k w_t <= cutoff} w_t exp(-s k w_t),
    /// the census-side estimate of -zeta'/zeta.
    pub fn euler_sum(&self, s: Complex64) -> EulerSum {
        let mut value = CompensatedSum::default();
        let jtol = JUMP_REL_TOL * self.cutoff.max(1.0);
        for rec in &self.records {
            let w = rec.total_weight;
            let kmax = ((self.cutoff + jtol) / w).floor() as i64;
            for k in 1..=kmax {
                value.add(w * exp_term(k as f64 * w, s));
            }
        }
        let d_bound = self.in_convergence_region(s);
        EulerSum { value: value.value(), in_convergence_region: d_bound }
    }

    fn in_convergence_region(&self, s: Complex64) -> bool {
        match crate::flow::solve_dimension(&self.flow) {
            Ok(pair) => s.re > pair.d,
            Err(_) => false,
        }
    }

    /// Both sides of the truncated Euler-product identity over this census:
    /// `log_product` = sum_p -Log(1 - exp(-s w_t)) and `power_sum` =
    /// sum_p sum_k exp(-s k w_t)/k with the k-sum carried to convergence.
    pub fn euler_product_log(&self, s: Complex64) -> (Complex64, Complex64) {
        let mut log_product = CompensatedSum::default();
        let mut power_sum = CompensatedSum::default();
        for rec in &self.records {
            let w = rec.total_weight;
            let z = exp_term(w, s);
            log_product.add(-ln_one_minus(z));
            // Geometric decay: stop once the tail is below f64 noise.
            let decay = (-s.re * w).exp();
            let mut term = z;
            let mut k = 1.0f64;
            loop {
                power_sum.add(term / k);
                if term.norm() < 1e-18 || k > 1e6 {
                    break;
                }
                term *= z;
                k += 1.0;
                if decay >= 1.0 && k > 80.0 {
                    break;
                }
            }
        }
        (log_product.value(), power_sum.value())
    }
}

/// ln(1 - z) without the catastrophic 1 - z rounding at small |z|:
/// |1 - z|^2 = 1 + (|z|^2 - 2 Re z) feeds real ln_1p, the argument comes
/// from atan2 directly. Forming 1 - z first would floor every orbit factor
/// at ulp(1), a bias that adds up across millions of near-equal weights.
fn ln_one_minus(z: Complex64) -> Complex64 {
    Complex64::new(
        0.5 * (z.norm_sqr() - 2.0 * z.re).ln_1p(),
        (-z.im).atan2(1.0 - z.re),
    )
}

/// Moebius function for small n (test oracle for Lyndon counts).
pub fn moebius(n: u64) -> i64 {
    let mut n = n;
    let mut mu = 1i64;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// Count of Lyndon words of length n over an alphabet of size k:
/// (1/n) sum_{d | n} mu(d) k^{n/d}.
pub fn lyndon_count(n: u64, k: u64) -> u64 {
    let mut total = 0i128;
    for d in 1..=n {
        if n.is_multiple_of(d) {
            total += moebius(d) as i128 * (k as i128).pow((n / d) as u32);
        }
    }
    (total / n as i128) as u64
}
