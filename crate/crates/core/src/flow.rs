//! Flow specifications: weights, scaling ratios, lattice/nonlattice
//! classification and the real dimension pair (D, D0).
//!
//! A self-similar flow is described by positive weights w_1 <= ... <= w_N.
//! The derived scaling ratios r_j = exp(-w_j) satisfy 1 > r_1 >= ... >= r_N > 0.
//! The flow dimension D is the unique real solution of sum_j r_j^s = 1, and
//! D0 (the left edge of the strip that contains every complex dimension)
//! solves 1 + sum_{j<=N-m} r_j^s = m r_N^s, where m is the multiplicity of
//! the smallest ratio.

use serde::Deserialize;

use crate::dioph::{Alpha, ContinuedFraction};
use crate::error::{Error, Result};

/// Relative tolerance for declaring a weight ratio rational during lattice
/// detection. binary64 inputs cannot distinguish finer, and the dichotomy is
/// exact only over the reals.
pub const LATTICE_REL_TOL: f64 = 1e-12;

/// Absolute residual target for the D and D0 root solves (relative to the
/// natural scale of each equation).
pub const DIMENSION_RESIDUAL_TOL: f64 = 1e-13;

/// Weights of a self-similar flow, sorted ascending, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    name: Option<String>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct FlowDocument {
    name: Option<String>,
    weights: Option<Vec<f64>>,
    ratios: Option<Vec<f64>>,
}

impl FlowSpec {
    /// Build a flow from weights in natural-log units. Sorts ascending.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Validation(format!(
                    "weights[{i}] = {w} must be a finite positive number"
                )));
            }
        }
        let mut weights = weights;
        weights.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
        Ok(FlowSpec { name: None, weights })
    }

    /// Build a flow from scaling ratios in (0, 1); weights are w = -ln r.
    pub fn from_ratios(ratios: Vec<f64>) -> Result<Self> {
        let mut weights = Vec::with_capacity(ratios.len());
        for (i, &r) in ratios.iter().enumerate() {
            if !r.is_finite() || r <= 0.0 || r >= 1.0 {
                return Err(Error::Validation(format!(
                    "ratios[{i}] = {r} must lie strictly between 0 and 1"
                )));
            }
            weights.push(-r.ln());
        }
        FlowSpec::new(weights)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Parse a flow document. Accepts TOML or JSON with either a `weights`
    /// or a `ratios` array (mutually exclusive) and an optional `name`.
    pub fn from_document_str(text: &str) -> Result<Self> {
        let doc: FlowDocument = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
                .map_err(|e| Error::Validation(format!("flow document (json): {e}")))?
        } else {
            toml::from_str(text)
                .map_err(|e| Error::Validation(format!("flow document (toml): {e}")))?
        };
        let flow = match (doc.weights, doc.ratios) {
            (Some(_), Some(_)) => {
                return Err(Error::Validation(
                    "flow document has both `weights` and `ratios`; supply exactly one".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Validation(
                    "flow document must contain a `weights` or `ratios` array".into(),
                ))
            }
            (Some(w), None) => {
                if w.is_empty() {
                    return Err(Error::Validation("`weights` must be nonempty".into()));
                }
                FlowSpec::new(w)?
            }
            (None, Some(r)) => {
                if r.is_empty() {
                    return Err(Error::Validation("`ratios` must be nonempty".into()));
                }
                FlowSpec::from_ratios(r)?
            }
        };
        Ok(match doc.name {
            Some(n) => flow.with_name(n),
            None => flow,
        })
    }

    /// Load a flow document from disk (TOML or JSON).
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_document_str(&text)
    }

    /// The Cantor flow: two equal weights log 3.
    pub fn cantor() -> Self {
        let w = 3f64.ln();
        FlowSpec { name: Some("cantor".into()), weights: vec![w, w] }
    }

    /// The Fibonacci flow: weights log 2 and 2 log 2.
    pub fn fibonacci() -> Self {
        let w = std::f64::consts::LN_2;
        FlowSpec { name: Some("fibonacci".into()), weights: vec![w, 2.0 * w] }
    }

    /// The golden flow: weights log 2 and phi log 2, phi the golden ratio.
    /// Nonlattice; the second weight is built from phi at full f64 precision
    /// rather than parsed from a decimal literal.
    pub fn golden() -> Self {
        let w = std::f64::consts::LN_2;
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        FlowSpec { name: Some("golden".into()), weights: vec![w, phi * w] }
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Alphabet size N.
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight w_j, 0-indexed.
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    /// Scaling ratio r_j = exp(-w_j), 0-indexed.
    pub fn ratio(&self, j: usize) -> f64 {
        (-self.weights[j]).exp()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.weights.iter().map(|w| (-w).exp()).collect()
    }

    /// Multiplicity m of the smallest scaling ratio (largest weight).
    pub fn smallest_ratio_multiplicity(&self) -> usize {
        let n = self.n();
        if n == 0 {
            return 0;
        }
        let wn = self.weights[n - 1];
        self.weights
            .iter()
            .filter(|&&w| (wn - w).abs() <= LATTICE_REL_TOL * wn)
            .count()
    }

    /// All weights multiplied by c > 0 (rescales D to D/c).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        FlowSpec::new(self.weights.iter().map(|w| w * c).collect())
    }
}

/// Discrete weight structure: w_j = k_j * generator with gcd(k_1..k_N) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeStructure {
    pub generator: f64,
    pub multipliers: Vec<u64>,
}

impl LatticeStructure {
    /// Largest multiplier k_N; degree of the lattice polynomial.
    pub fn degree(&self) -> u64 {
        *self.multipliers.last().expect("nonempty multipliers")
    }

    /// The flow with exactly these weights k_j * generator.
    pub fn to_flow(&self) -> Result<FlowSpec> {
        FlowSpec::new(self.multipliers.iter().map(|&k| k as f64 * self.generator).collect())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Decide whether the weight group is discrete at the given resolution.
///
/// Each ratio w_j/w_1 is declared rational p/q when a continued-fraction
/// convergent with q <= max_denominator reproduces it to relative error
/// below [`LATTICE_REL_TOL`]. Absence is a verdict at this resolution, not
/// an error: a nonlattice flow in floating point is exactly a flow whose
/// ratios resist small-denominator rational approximation.
pub fn classify_lattice(flow: &FlowSpec, max_denominator: u64) -> Option<LatticeStructure> {
    if flow.n() == 0 || max_denominator == 0 {
        return None;
    }
    let w1 = flow.weight(0);
    let mut fractions: Vec<(u64, u64)> = Vec::with_capacity(flow.n());
    for j in 0..flow.n() {
        let ratio = flow.weight(j) / w1;
        let (p, q) = rational_approx(ratio, max_denominator)?;
        fractions.push((p, q));
    }
    // Common denominator L = lcm(q_j); multipliers k_j = p_j * L / q_j.
    let mut lcm: u64 = 1;
    for &(_, q) in &fractions {
        let g = gcd(lcm, q);
        lcm = lcm.checked_mul(q / g)?;
        if lcm > max_denominator {
            return None;
        }
    }
    let mut ks: Vec<u64> = Vec::with_capacity(flow.n());
    for &(p, q) in &fractions {
        ks.push(p.checked_mul(lcm / q)?);
    }
    let g = ks.iter().fold(0u64, |acc, &k| gcd(acc, k));
    for k in &mut ks {
        *k /= g;
    }
    // The lcm-induced multipliers must stay within the detection resolution.
    if *ks.last().unwrap() > max_denominator {
        return None;
    }
    let generator = w1 * g as f64 / lcm as f64;
    // Confirm the reconstruction against the actual weights.
    for (j, &k) in ks.iter().enumerate() {
        let w = flow.weight(j);
        if (w - k as f64 * generator).abs() > LATTICE_REL_TOL * w {
            return None;
        }
    }
    Some(LatticeStructure { generator, multipliers: ks })
}

/// Best rational p/q with q <= max_denominator matching x to relative error
/// below [`LATTICE_REL_TOL`], via continued-fraction convergents of the
/// exact binary64 rational.
fn rational_approx(x: f64, max_denominator: u64) -> Option<(u64, u64)> {
    let cf = ContinuedFraction::expand(Alpha::Literal(x), 64).ok()?;
    for k in 0..cf.depth() {
        let (p, q) = cf.convergent(k);
        if p < 0 || q <= 0 {
            return None;
        }
        let (p, q) = (p as u64, q as u64);
        if q > max_denominator {
            return None;
        }
        if (x - p as f64 / q as f64).abs() < LATTICE_REL_TOL * x {
            return Some((p, q));
        }
    }
    None
}

/// Real dimension D and strip edge D0 of a flow.
///
/// `degenerate` marks N <= 1 flows, for which sum r_j^s = 1 has no positive
/// solution; D = 0 is reported (the N = 1 circle flow has polynomial orbit
/// growth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionPair {
    pub d: f64,
    pub d0: f64,
    pub smallest_ratio_multiplicity: usize,
    pub degenerate: bool,
}

/// Solve for D (sum r_j^s = 1) and D0 (1 + sum_{j<=N-m} r_j^s = m r_N^s).
///
/// Both equations are solved by bisection on a guaranteed bracket followed
/// by a Newton polish; f(s) = 1 - sum r_j^s is strictly increasing on the
/// reals, and the D0 equation becomes strictly monotone after multiplying
/// through by exp(w_N s).
pub fn solve_dimension(flow: &FlowSpec) -> Result<DimensionPair> {
    let n = flow.n();
    if n <= 1 {
        return Ok(DimensionPair {
            d: 0.0,
            d0: 0.0,
            smallest_ratio_multiplicity: n,
            degenerate: true,
        });
    }
    let weights = flow.weights();
    let d = solve_d(weights)?;
    let m = flow.smallest_ratio_multiplicity();
    let d0 = solve_d0(weights, m)?;
    if d0 > d + 1e-9 {
        return Err(Error::NumericIntegrity(format!(
            "D0 = {d0} exceeds D = {d}"
        )));
    }
    Ok(DimensionPair { d, d0: d0.min(d), smallest_ratio_multiplicity: m, degenerate: false })
}

fn solve_d(weights: &[f64]) -> Result<f64> {
    let f = |s: f64| 1.0 - weights.iter().map(|&w| (-w * s).exp()).sum::<f64>();
    let fp = |s: f64| weights.iter().map(|&w| w * (-w * s).exp()).sum::<f64>();
    // f(0) = 1 - N < 0; at s = ln N / w_1, sum r_j^s <= N r_1^s = 1, so f >= 0.
    let mut lo = 0.0;
    let mut hi = (weights.len() as f64).ln() / weights[0];
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Solver(format!(
                "no upper bracket for D below s = {hi}"
            )));
        }
    }
    bisect_newton(f, fp, lo, hi, &mut lo)
}

fn solve_d0(weights: &[f64], m: usize) -> Result<f64> {
    let n = weights.len();
    let wn = weights[n - 1];
    let head = &weights[..n - m];
    // h(s) = m - sum_{j<=N-m} exp((w_N - w_j) s) - exp(w_N s) is strictly
    // decreasing, h(-inf) = m > 0, h(+inf) = -inf; its zero is D0.
    let h = |s: f64| {
        m as f64
            - head.iter().map(|&w| ((wn - w) * s).exp()).sum::<f64>()
            - (wn * s).exp()
    };
    let hp = |s: f64| {
        -head.iter().map(|&w| (wn - w) * ((wn - w) * s).exp()).sum::<f64>()
            - wn * (wn * s).exp()
    };
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut iter = 0;
    while h(lo) <= 0.0 {
        lo *= 2.0;
        iter += 1;
        if iter > 80 {
            return Err(Error::Solver("no lower bracket for D0".into()));
        }
    }
    iter = 0;
    while h(hi) >= 0.0 {
        hi *= 2.0;
        iter += 1;
        if iter > 80 {
            return Err(Error::Solver("no upper bracket for D0".into()));
        }
    }
    // h is decreasing: negate to reuse the increasing-function driver.
    let g = |s: f64| -h(s);
    let gp = |s: f64| -hp(s);
    let mut last = lo;
    let d0 = bisect_newton(g, gp, lo, hi, &mut last)?;
    Ok(d0)
}

/// Bisection to near-convergence followed by Newton steps, for a strictly
/// increasing f with f(lo) <= 0 <= f(hi). `last_bracket` reports the final
/// lower bracket on failure.
fn bisect_newton(
    f: impl Fn(f64) -> f64,
    fp: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    last_bracket: &mut f64,
) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    *last_bracket = lo;
    let mut s = 0.5 * (lo + hi);
    for _ in 0..8 {
        let fs = f(s);
        let d = fp(s);
        if d == 0.0 {
            break;
        }
        let step = fs / d;
        s -= step;
        if !s.is_finite() {
            return Err(Error::Solver(format!(
                "Newton polish diverged from bracket [{lo}, {hi}]"
            )));
        }
        if step.abs() < 1e-16 * (1.0 + s.abs()) {
            break;
        }
    }
    let scale = 1.0 + f(s).abs().max(fp(s).abs());
    if f(s).abs() > DIMENSION_RESIDUAL_TOL * scale {
        return Err(Error::Solver(format!(
            "dimension solve stalled: residual {} at s = {s}, bracket [{lo}, {hi}]",
            f(s)
        )));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn load_weights_document() {
        let flow = FlowSpec::from_document_str(
            "weights = [1.0986122886681098, 1.0986122886681098]\n",
        )
        .unwrap();
        assert_eq!(flow.n(), 2);
        assert!((flow.weight(0) - 3f64.ln()).abs() < 1e-15);
        assert!((flow.weight(1) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn load_ratios_document_converts_to_weights() {
        let flow = FlowSpec::from_document_str("ratios = [0.5, 0.25]\n").unwrap();
        assert!((flow.weight(0) - 2f64.ln()).abs() < 1e-15);
        assert!((flow.weight(1) - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn load_json_document() {
        let flow =
            FlowSpec::from_document_str(r#"{"name": "cf", "weights": [1.0, 2.0]}"#).unwrap();
        assert_eq!(flow.name(), Some("cf"));
        assert_eq!(flow.n(), 2);
    }

    #[test]
    fn load_rejects_empty_and_conflicting_keys() {
        assert!(matches!(
            FlowSpec::from_document_str("weights = []\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            FlowSpec::from_document_str("weights = [1.0]\nratios = [0.5]\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            FlowSpec::from_document_str("weights = [1.0, -2.0]\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            FlowSpec::from_document_str("ratios = [0.5, 1.5]\n"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn weights_sorted_and_ratios_consistent() {
        let flow = FlowSpec::new(vec![2.0, 0.5, 1.0]).unwrap();
        assert_eq!(flow.weights(), &[0.5, 1.0, 2.0]);
        let r = flow.ratios();
        assert!(r[0] > r[1] && r[1] > r[2]);
        assert!(r[0] < 1.0 && r[2] > 0.0);
    }

    #[test]
    fn classify_cantor_and_fibonacci() {
        let lat = classify_lattice(&FlowSpec::cantor(), 1_000_000).unwrap();
        assert_eq!(lat.multipliers, vec![1, 1]);
        assert!((lat.generator - 3f64.ln()).abs() < 1e-14);

        let lat = classify_lattice(&FlowSpec::fibonacci(), 1_000_000).unwrap();
        assert_eq!(lat.multipliers, vec![1, 2]);
        assert!((lat.generator - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn classify_golden_is_nonlattice() {
        assert!(classify_lattice(&FlowSpec::golden(), 1_000_000).is_none());
        assert!(classify_lattice(&FlowSpec::golden(), 10_000).is_none());
    }

    #[test]
    fn classify_recovers_explicit_lattice() {
        let lat = LatticeStructure { generator: 0.37, multipliers: vec![2, 3, 7] };
        let flow = lat.to_flow().unwrap();
        let detected = classify_lattice(&flow, 10_000).unwrap();
        assert_eq!(detected.multipliers, lat.multipliers);
        assert!((detected.generator - lat.generator).abs() < 1e-13);
    }

    #[test]
    fn cantor_dimension_is_log3_2() {
        let pair = solve_dimension(&FlowSpec::cantor()).unwrap();
        assert!((pair.d - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        // Equal weights: the strip degenerates to the line Re s = D.
        assert!((pair.d0 - pair.d).abs() < 1e-12);
        assert_eq!(pair.smallest_ratio_multiplicity, 2);
    }

    #[test]
    fn fibonacci_dimension_is_log2_phi() {
        let pair = solve_dimension(&FlowSpec::fibonacci()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((pair.d - phi.ln() / 2f64.ln()).abs() < 1e-12);
        // D0 = -D for the Fibonacci flow: z^2 + z = 1 has |z_2| = phi.
        assert!((pair.d0 + pair.d).abs() < 1e-10);
    }

    #[test]
    fn golden_dimension_matches_reference() {
        let pair = solve_dimension(&FlowSpec::golden()).unwrap();
        assert!((pair.d - 0.7792119034).abs() < 1e-9);
        let s: f64 = FlowSpec::golden().ratios().iter().map(|r| r.powf(pair.d)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_flows_flagged() {
        let pair = solve_dimension(&FlowSpec::new(vec![1.0]).unwrap()).unwrap();
        assert!(pair.degenerate);
        assert_eq!(pair.d, 0.0);
    }

    #[test]
    fn dimension_residual_and_strip_order_hold_on_random_flows() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let weights: Vec<f64> =
                (0..n).map(|_| rng.gen_range(0.05..4.0)).collect();
            let flow = FlowSpec::new(weights).unwrap();
            let pair = solve_dimension(&flow).unwrap();
            assert!(pair.d > 0.0);
            let s: f64 = flow.ratios().iter().map(|r| r.powf(pair.d)).sum();
            assert!((s - 1.0).abs() < 1e-12, "sum r^D = {s}");
            assert!(pair.d0 <= pair.d + 1e-12);
        }
    }

    #[test]
    fn scaling_weights_rescales_dimension() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..=4);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
            let c = rng.gen_range(0.2..5.0);
            let flow = FlowSpec::new(weights).unwrap();
            let d = solve_dimension(&flow).unwrap().d;
            let d_scaled = solve_dimension(&flow.scaled(c).unwrap()).unwrap().d;
            assert!((d_scaled - d / c).abs() < 1e-10 * (1.0 + d / c));
        }
    }
}
