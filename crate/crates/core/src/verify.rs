//! Executable verification suite: every reproduction criterion as a
//! self-contained check with pinned tolerances, shared by the `acceptance`
//! integration test and the CLI `reproduce` subcommand.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::dims::{
    density_check, lattice_dimensions, nonlattice_dimensions, predict_dimension,
    DimensionWindow, PerturbationSeries, PredictionSource, RESIDUAL_BOUND,
};
use crate::dioph::{
    orbit_of_approximation, ostrowski, simultaneous_approx, Alpha, ContinuedFraction,
};
use crate::error::Result;
use crate::explicit::{
    error_scaling_report, fit_envelope_constant, lattice_psi, psi_level2, ExplicitExpansion,
};
use crate::flow::{classify_lattice, solve_dimension, FlowSpec, LatticeStructure};
use crate::orbits::{enumerate_orbits, Jump};
use crate::zeta;

/// Reference dimension of the golden flow (10 printed digits).
pub const GOLDEN_D_REFERENCE: f64 = 0.7792119034;
/// Tolerance on D.
pub const GOLDEN_D_TOL: f64 = 1e-7;

/// Reference perturbation coefficients of the golden flow (5 decimals).
pub const GOLDEN_SERIES_REFERENCE: [f64; 6] =
    [-0.47862, 0.08812, 0.00450, -0.00205, -0.00039, 0.00004];
pub const GOLDEN_SERIES_TOL: f64 = 1e-4;

/// Reference golden-flow dimensions as (q, Re offset from D, Im). The real
/// parts carry 5-6 printed decimals and get the 2e-3 check directly; the
/// imaginary parts are printed at 1e-2 resolution (and one of them is
/// truncated, not rounded), so they are checked at one print ulp while the
/// 2e-3 requirement is enforced against the perturbation-series location
/// D + 2 pi i q / w_1 + Delta(x), which carries full precision.
pub const GOLDEN_ROOTS_REFERENCE: [(u64, f64, f64); 4] = [
    (5, -0.028499, 45.05),
    (55, -0.00023, 498.58),
    (60, -0.023561, 543.63),
    (50, -0.033919, 453.53),
];
pub const GOLDEN_ROOT_RE_TOL: f64 = 2e-3;
pub const GOLDEN_ROOT_IM_PRINT_TOL: f64 = 1e-2;
pub const GOLDEN_ROOT_SERIES_TOL: f64 = 2e-3;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {}: {} [{}] ({:.2?}) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed,
            self.details
        )
    }
}

fn run(id: u32, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CriterionReport {
    let start = Instant::now();
    let (passed, details) = match body() {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionReport { id, name, passed, details, elapsed: start.elapsed() }
}

/// Run every criterion in order.
pub fn run_all() -> Vec<CriterionReport> {
    (1..=9).map(run_criterion).collect()
}

/// Criteria touching only the golden flow (the `reproduce golden-flow`
/// subset).
pub fn run_golden_subset() -> Vec<CriterionReport> {
    [1, 2, 3].into_iter().map(run_criterion).collect()
}

pub fn run_criterion(id: u32) -> CriterionReport {
    match id {
        1 => run(1, "golden flow dimension", criterion_1),
        2 => run(2, "golden flow perturbation series", criterion_2),
        3 => run(3, "golden flow complex dimensions", criterion_3),
        4 => run(4, "lattice exactness", criterion_4),
        5 => run(5, "euler identities", criterion_5),
        6 => run(6, "diophantine suite", criterion_6),
        7 => run(7, "structure invariants", criterion_7),
        8 => run(8, "nonlattice error behavior", criterion_8),
        9 => run(9, "level-2 consistency", criterion_9),
        other => CriterionReport {
            id: other,
            name: "unknown criterion",
            passed: false,
            details: "valid ids are 1..=9".into(),
            elapsed: Duration::ZERO,
        },
    }
}

fn criterion_1() -> Result<(bool, String)> {
    let pair = solve_dimension(&FlowSpec::golden())?;
    let delta = (pair.d - GOLDEN_D_REFERENCE).abs();
    Ok((
        delta <= GOLDEN_D_TOL,
        format!("D = {:.12}, |D - reference| = {delta:.3e} (tol {GOLDEN_D_TOL:.0e})", pair.d),
    ))
}

fn criterion_2() -> Result<(bool, String)> {
    let series = PerturbationSeries::compute(&FlowSpec::golden(), 6)?;
    let mut worst = 0.0f64;
    for (got, want) in series.coefficients.iter().zip(&GOLDEN_SERIES_REFERENCE) {
        worst = worst.max((got - want).abs());
    }
    Ok((
        worst <= GOLDEN_SERIES_TOL,
        format!(
            "coefficients {:?}, worst deviation {worst:.2e} (tol {GOLDEN_SERIES_TOL:.0e})",
            series.coefficients
        ),
    ))
}

fn criterion_3() -> Result<(bool, String)> {
    let flow = FlowSpec::golden();
    let window = nonlattice_dimensions(&flow, 560.0, None)?;
    let d = solve_dimension(&flow)?.d;
    let cf = ContinuedFraction::expand(Alpha::Golden, 24)?;
    let mut passed = true;
    let mut lines = Vec::new();
    for &(q, re_offset, im_printed) in &GOLDEN_ROOTS_REFERENCE {
        let target_re = d + re_offset;
        let found = window
            .dims()
            .iter()
            .min_by(|a, b| {
                let da = (a.omega.im - im_printed).abs();
                let db = (b.omega.im - im_printed).abs();
                da.partial_cmp(&db).expect("finite")
            })
            .copied()
            .expect("nonempty window");
        let d_re = (found.omega.re - target_re).abs();
        let d_im = (found.omega.im - im_printed).abs();
        let re_ok = d_re <= GOLDEN_ROOT_RE_TOL;
        let im_ok = d_im <= GOLDEN_ROOT_IM_PRINT_TOL;
        // Full-precision cross-check against the series location.
        let predicted = predict_dimension(&flow, q, PredictionSource::ContinuedFraction(&cf))?;
        let d_series = (found.omega - predicted.omega).norm();
        let series_ok = d_series <= GOLDEN_ROOT_SERIES_TOL;
        passed &= re_ok && im_ok && series_ok;
        lines.push(format!(
            "q={q}: dRe={d_re:.1e} dIm={d_im:.1e} |found-series|={d_series:.1e}"
        ));
    }
    Ok((passed, format!("{} dims in window; {}", window.len(), lines.join("; "))))
}

fn criterion_4() -> Result<(bool, String)> {
    let mut passed = true;
    let mut details = Vec::new();
    let x_max_log = 15.0 * 3f64.ln();
    for flow in [FlowSpec::cantor(), FlowSpec::fibonacci()] {
        let lat = classify_lattice(&flow, 1000).expect("lattice fixture");
        let census = enumerate_orbits(&flow, x_max_log + 0.01)?;
        let w = lat.generator;
        let mut rng = StdRng::seed_from_u64(42);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let mut y = rng.gen_range(flow.weight(0)..x_max_log);
            // Off-jump: keep log x away from multiples of the generator.
            let frac = (y / w - (y / w).round()).abs();
            if frac < 1e-3 {
                y += w * 0.31;
            }
            let x = y.exp();
            let formula = lattice_psi(&flow, &lat, x, Jump::Half)?;
            let brute = census.psi(x, Jump::Half)?;
            let rel = (formula - brute).abs() / brute.abs().max(1.0);
            worst = worst.max(rel);
        }
        passed &= worst <= 1e-9;
        details.push(format!("{} worst rel err {worst:.2e}", flow.name().unwrap_or("flow")));
    }
    // Fibonacci multiplicities: periodic sequences of weight n log 2 number
    // F_{n+1}, checked exactly for n <= 25.
    let flow = FlowSpec::fibonacci();
    let w = 2f64.ln();
    let census = enumerate_orbits(&flow, 25.0 * w + 1e-9)?;
    let mut fib = vec![0u64; 27];
    fib[1] = 1;
    for n in 2..27 {
        fib[n] = fib[n - 1] + fib[n - 2];
    }
    let mut mult_ok = true;
    for n in 1..=25usize {
        let mut count = 0u64;
        for rec in census.records() {
            let m = (rec.total_weight / w).round() as usize;
            if m >= 1 && n % m == 0 {
                count += rec.length as u64;
            }
        }
        if count != fib[n + 1] {
            mult_ok = false;
            details.push(format!("weight {n} log2: {count} != F_{} = {}", n + 1, fib[n + 1]));
        }
    }
    passed &= mult_ok;
    if mult_ok {
        details.push("multiplicities F_2..F_26 exact".into());
    }
    Ok((passed, details.join("; ")))
}

fn criterion_5() -> Result<(bool, String)> {
    let mut passed = true;
    let mut worst_sum = 0.0f64;
    let mut worst_product = 0.0f64;
    let mut worst_internal = 0.0f64;
    let mut samples = 0usize;
    let im_values = [0.0, 3.7, -11.0, 29.0];
    for flow in [FlowSpec::cantor(), FlowSpec::fibonacci(), FlowSpec::golden()] {
        let d = solve_dimension(&flow)?.d;
        let cutoff = 25.0 * flow.weight(0);
        let census = enumerate_orbits(&flow, cutoff)?;
        // All sampled Re s >= D + 0.2. The truncation at 25 w_1 leaves a
        // geometric tail of order exp(-(Re s - D) * cutoff); samples start
        // where that tail sits below the 1e-6 target with an order of
        // margin, exactly as the identity is resolvable at this cutoff.
        let sigma_min = d + (0.2f64).max(16.0 / cutoff);
        for i in 0..7 {
            if samples >= 20 {
                break;
            }
            let sigma = sigma_min + 0.25 * i as f64;
            let s = Complex64::new(sigma, im_values[i % im_values.len()]);
            let ev = zeta::evaluate(&flow, s);
            let closed = ev.neg_log_deriv.expect("off poles");
            let sum = census.euler_sum(s);
            passed &= sum.in_convergence_region;
            let rel_sum = (sum.value - closed).norm() / closed.norm();
            // Product side: log of Prod (1 - e^{-s w_t})^{-1} against
            // log zeta = -Log f, f = 1 - sum r_j^s.
            let (log_product, power_sum) = census.euler_product_log(s);
            let closed_log = -ev.f_value.ln();
            let rel_product = (log_product - closed_log).norm() / closed_log.norm().max(1e-6);
            // Internal identity between the two truncated routes.
            let rel_internal =
                (log_product - power_sum).norm() / power_sum.norm().max(1e-6);
            worst_sum = worst_sum.max(rel_sum);
            worst_product = worst_product.max(rel_product);
            worst_internal = worst_internal.max(rel_internal);
            passed &= rel_sum < 1e-6 && rel_product < 1e-6 && rel_internal < 1e-10;
            samples += 1;
        }
    }
    // 7 + 7 + 6: exactly twenty samples across the three flows.
    passed &= samples == 20;
    Ok((
        passed,
        format!(
            "{samples} samples; worst euler-sum rel err {worst_sum:.2e}, \
             worst product rel err {worst_product:.2e} (tol 1e-6), \
             worst truncated-route agreement {worst_internal:.2e} (tol 1e-10)"
        ),
    ))
}

fn criterion_6() -> Result<(bool, String)> {
    let mut passed = true;
    let mut details = Vec::new();
    // phi plus three seeded nonsquare quadratic irrationals.
    let mut rng = StdRng::seed_from_u64(2024);
    let mut ds = Vec::new();
    while ds.len() < 3 {
        let d = rng.gen_range(2u64..60);
        let r = d.isqrt();
        if r * r != d && !ds.contains(&d) {
            ds.push(d);
        }
    }
    let kinds: Vec<Alpha> =
        std::iter::once(Alpha::Golden).chain(ds.iter().map(|&d| Alpha::Sqrt(d))).collect();
    details.push(format!("kinds: golden + sqrt{ds:?}"));

    for &kind in &kinds {
        let cf = ContinuedFraction::expand(kind, 48)?;
        // Roundtrip exact for n <= 1e5.
        for n in 1..=100_000u64 {
            let e = ostrowski(n, &cf)?;
            if e.reconstruct(&cf) != n || !e.digits_admissible(&cf) {
                passed = false;
                details.push(format!("roundtrip failed at n = {n} for {kind:?}"));
                break;
            }
        }
        // Eq. approx residual: q_k alpha - p_k vs (-1)^k / q'_{k+1}.
        let qp = cf.q_primes();
        for k in 0..cf.depth() {
            if k + 1 >= qp.len() || !qp[k + 1].is_finite() {
                break;
            }
            let (p, q) = cf.convergent(k);
            let expected = if k % 2 == 0 { 1.0 } else { -1.0 } / qp[k + 1];
            let got = cf.residual(q, p);
            if (got - expected).abs() > 1e-9 * expected.abs() {
                passed = false;
                details.push(format!("approx identity failed at k = {k} for {kind:?}"));
            }
        }
        // Bracket strictness for 2500 random n per kind (1e4 total).
        let mut rng = StdRng::seed_from_u64(7 + ds.iter().sum::<u64>());
        for _ in 0..2500 {
            let n = rng.gen_range(1..=500_000u64);
            let b = orbit_of_approximation(n, &cf)?;
            if !(b.lower < b.value && b.value < b.upper) {
                passed = false;
                details.push(format!("bracket not strict at n = {n} for {kind:?}"));
                break;
            }
        }
    }
    // Uniqueness, exhaustive for n <= 2000 over phi.
    let cf = ContinuedFraction::expand(Alpha::Golden, 20)?;
    let q: Vec<u64> = cf.denominators().iter().map(|&v| v as u64).collect();
    let a = cf.partial_quotients().to_vec();
    let top = q.iter().position(|&v| v > 2000).expect("expansion deep enough");
    for n in 1..=2000u64 {
        if count_admissible_expansions(&q[..=top], &a, n) != 1 {
            passed = false;
            details.push(format!("nonunique expansion at n = {n}"));
            break;
        }
    }
    // Simultaneous approximation for N = 3 weights (log2, log3, log5).
    let flow = FlowSpec::new(vec![2f64.ln(), 3f64.ln(), 5f64.ln()])?;
    for quality in [5.0, 10.0, 20.0, 50.0] {
        let sa = simultaneous_approx(&flow, quality)?;
        let budget = quality * quality;
        let w1 = flow.weight(0);
        let mut ok = (sa.q as f64) < budget;
        for (j, &p) in sa.p.iter().enumerate() {
            let err = (sa.q as f64 * flow.weight(j) - p as f64 * w1).abs();
            ok &= err <= w1 / quality + 1e-12;
        }
        if !ok {
            passed = false;
            details.push(format!("lemma inequalities failed at Q = {quality}"));
        }
    }
    details.push("roundtrip 1e5 x4, uniqueness 2000, brackets 1e4, lemma Q<=50".into());
    Ok((passed, details.join("; ")))
}

fn count_admissible_expansions(q: &[u64], a: &[i64], n: u64) -> usize {
    fn rec(q: &[u64], a: &[i64], idx: usize, rem: u64, force_zero: bool) -> usize {
        if idx == 0 {
            let limit = if a.len() > 1 { (a[1] - 1).max(0) as u64 } else { u64::MAX };
            return (rem <= limit && !(force_zero && rem != 0)) as usize;
        }
        let cap = a.get(idx + 1).copied().unwrap_or(i64::MAX) as u64;
        let max_d = (rem / q[idx]).min(cap);
        let mut total = 0;
        for d in 0..=max_d {
            if force_zero && d != 0 {
                continue;
            }
            total += rec(q, a, idx - 1, rem - d * q[idx], d == cap && cap > 0);
        }
        total
    }
    rec(q, a, q.len() - 1, n, false)
}

/// The eight fixture flows for the structure criterion.
fn fixture_windows() -> Result<Vec<(FlowSpec, Option<LatticeStructure>, DimensionWindow)>> {
    let mut out = Vec::new();
    let lattice_fixtures = vec![
        FlowSpec::cantor(),
        FlowSpec::fibonacci(),
        FlowSpec::new(vec![0.8, 0.8, 0.8])?,
        FlowSpec::new(vec![2f64.ln(), 2.0 * 2f64.ln(), 3.0 * 2f64.ln()])?,
        FlowSpec::new(vec![1.4, 2.1])?, // k = (2, 3), generator 0.7
    ];
    for flow in lattice_fixtures {
        let lat = classify_lattice(&flow, 10_000)
            .ok_or_else(|| crate::error::Error::Validation("fixture must be lattice".into()))?;
        let window = lattice_dimensions(&flow, &lat, 40.0)?;
        out.push((flow, Some(lat), window));
    }
    let nonlattice_fixtures = vec![
        FlowSpec::golden(),
        FlowSpec::new(vec![2f64.ln(), 3f64.ln()])?,
        FlowSpec::new(vec![2f64.ln(), 3f64.ln(), 5f64.ln()])?,
    ];
    for flow in nonlattice_fixtures {
        let window = nonlattice_dimensions(&flow, 60.0, None)?;
        out.push((flow, None, window));
    }
    Ok(out)
}

fn criterion_7() -> Result<(bool, String)> {
    let mut passed = true;
    let mut details = Vec::new();
    for (flow, lat, window) in fixture_windows()? {
        let name = flow
            .name()
            .map(str::to_owned)
            .unwrap_or_else(|| format!("{:?}", flow.weights()));
        let pair = solve_dimension(&flow)?;
        let mut problems = Vec::new();
        for dim in window.dims() {
            // Conjugate closure.
            if !window
                .dims()
                .iter()
                .any(|o| (o.omega - dim.omega.conj()).norm() < 1e-12)
            {
                problems.push(format!("conjugate of {} missing", dim.omega));
                break;
            }
            // Strip containment.
            if dim.omega.re > pair.d + 1e-9 || dim.omega.re < pair.d0 - 1e-9 {
                problems.push(format!("{} escapes the strip", dim.omega));
            }
            // Residual bound.
            if dim.residual > RESIDUAL_BOUND * zeta::residual_scale(&flow, dim.omega.re) {
                problems.push(format!("residual {} at {}", dim.residual, dim.omega));
            }
            if dim.residue < 1 {
                problems.push(format!("residue {} at {}", dim.residue, dim.omega));
            }
        }
        // Density slack.
        let density = density_check(&window);
        if density.c_min > 3.0 {
            problems.push(format!("density constant C = {:.2} > 3", density.c_min));
        }
        // Lattice periodicity: omega + 2 pi i / w stays in the window set.
        if let Some(lat) = lat {
            let shift = Complex64::new(0.0, std::f64::consts::TAU / lat.generator);
            for dim in window.dims() {
                let target = dim.omega + shift;
                if target.im <= window.half_height()
                    && !window.dims().iter().any(|o| (o.omega - target).norm() < 1e-12)
                {
                    problems.push(format!("period shift of {} missing", dim.omega));
                    break;
                }
            }
        }
        if problems.is_empty() {
            details.push(format!("{name}: {} dims ok (C = {:.2})", window.len(), density.c_min));
        } else {
            passed = false;
            details.push(format!("{name}: {}", problems.join(", ")));
        }
    }
    Ok((passed, details.join("; ")))
}

fn criterion_8() -> Result<(bool, String)> {
    let flow = FlowSpec::golden();
    let census = enumerate_orbits(&flow, 14.05)?;
    let xs: Vec<f64> = (0..40).map(|i| (5.0 + 9.0 * i as f64 / 39.0).exp()).collect();
    let window_500 = nonlattice_dimensions(&flow, 500.0, None)?;
    let rows = error_scaling_report(&flow, &window_500, &census, &xs, 0.25)?;
    // Envelope: |normalized error| below 3x the fitted constant everywhere.
    let c = fit_envelope_constant(&rows);
    let mut worst_ratio = 0.0f64;
    for row in &rows {
        worst_ratio = worst_ratio.max(row.normalized_error.abs() / (c * row.envelope));
    }
    let envelope_ok = worst_ratio <= 3.0;
    // Mean |formula - census| decreases across T = 50, 150, 500.
    let mut means = Vec::new();
    for t in [50.0, 150.0] {
        let window = nonlattice_dimensions(&flow, t, None)?;
        let expansion = ExplicitExpansion::from_window(&window, 1)?;
        let mut total = 0.0;
        for &x in &xs {
            total += (expansion.eval(x) - census.psi(x, Jump::Half)?).abs();
        }
        means.push(total / xs.len() as f64);
    }
    {
        let expansion = ExplicitExpansion::from_window(&window_500, 1)?;
        let mut total = 0.0;
        for &x in &xs {
            total += (expansion.eval(x) - census.psi(x, Jump::Half)?).abs();
        }
        means.push(total / xs.len() as f64);
    }
    let monotone = means[0] > means[1] && means[1] > means[2];
    Ok((
        envelope_ok && monotone,
        format!(
            "fitted c = {c:.3}, worst |err|/(c env) = {worst_ratio:.2} (<= 3); \
             mean |formula - census| at T=50,150,500: {:.3}, {:.3}, {:.3}",
            means[0], means[1], means[2]
        ),
    ))
}

fn criterion_9() -> Result<(bool, String)> {
    let mut passed = true;
    let mut details = Vec::new();
    // Lattice: exact to 1e-6 against the exact census integral.
    for flow in [FlowSpec::cantor(), FlowSpec::fibonacci()] {
        let lat = classify_lattice(&flow, 1000).expect("lattice fixture");
        let window = lattice_dimensions(&flow, &lat, 600_000.0)?;
        let census = enumerate_orbits(&flow, 12.0 * 3f64.ln() + 0.2)?;
        let mut worst = 0.0f64;
        let mut tauberian_ok = true;
        for i in 0..20 {
            let y = 1.0 + (12.0 * 3f64.ln() - 1.3) * i as f64 / 19.0;
            let x = y.exp();
            let formula = psi_level2(&flow, &window, x)?;
            let exact = census.psi_integral(x)?;
            let rel = (formula - exact).abs() / exact.abs().max(1.0);
            worst = worst.max(rel);
            tauberian_ok &= tauberian_bracket(&flow, &window, &census, x, 1e-6)?;
        }
        passed &= worst <= 1e-6 && tauberian_ok;
        details.push(format!(
            "{}: worst rel err {worst:.2e} (tol 1e-6), tauberian {}",
            flow.name().unwrap_or("lattice"),
            if tauberian_ok { "ok" } else { "violated" }
        ));
    }
    // Golden flow at T = 500: 1e-3.
    let flow = FlowSpec::golden();
    let window = nonlattice_dimensions(&flow, 500.0, None)?;
    let census = enumerate_orbits(&flow, 9.0)?;
    let mut worst = 0.0f64;
    let mut tauberian_ok = true;
    for i in 0..20 {
        let y = 2.0 + 6.0 * i as f64 / 19.0;
        let x = y.exp();
        let formula = psi_level2(&flow, &window, x)?;
        let exact = census.psi_integral(x)?;
        let rel = (formula - exact).abs() / exact.abs().max(1.0);
        worst = worst.max(rel);
        tauberian_ok &= tauberian_bracket(&flow, &window, &census, x, 1e-3)?;
    }
    passed &= worst <= 1e-3 && tauberian_ok;
    details.push(format!(
        "golden: worst rel err {worst:.2e} (tol 1e-3), tauberian {}",
        if tauberian_ok { "ok" } else { "violated" }
    ));
    Ok((passed, details.join("; ")))
}

/// Tauberian step: (1/h) int_x^{x+h} psi >= psi(x). The integral difference
/// comes from the level-2 formula; `rel_tol` is that formula's already
/// verified relative accuracy, propagated into an explicit allowance scaled
/// by the formula's main term (the achievable error scale even where the
/// value itself nearly cancels).
fn tauberian_bracket(
    flow: &FlowSpec,
    window: &DimensionWindow,
    census: &crate::orbits::OrbitCensus,
    x: f64,
    rel_tol: f64,
) -> Result<bool> {
    let h = 0.1 * x;
    if ((x + h).ln()) > census.cutoff() {
        return Ok(true);
    }
    let d = solve_dimension(flow)?.d;
    let upper = psi_level2(flow, window, x + h)?;
    let lower = psi_level2(flow, window, x)?;
    let slope = (upper - lower) / h;
    let main = (x + h).powf(d + 1.0) / (d * (d + 1.0));
    let allowance = 2.0 * rel_tol * main / h;
    let psi = census.psi(x, Jump::Full)?;
    // Exact-integral form of the same inequality (pure census, no formula).
    let exact_slope = (census.psi_integral(x + h)? - census.psi_integral(x)?) / h;
    Ok(slope + allowance >= psi && exact_slope >= psi - 1e-9 * psi.abs().max(1.0))
}
