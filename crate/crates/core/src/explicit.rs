//! Prime Orbit Theorem expansions: exact lattice closed forms built from
//! multiplicatively periodic profiles, truncated oscillatory sums for
//! nonlattice windows, the level-2 antiderivative formula, and error
//! scaling reports against the brute-force census.

use num_complex::Complex64;

use crate::dims::DimensionWindow;
use crate::error::{Error, Result};
use crate::flow::{FlowSpec, LatticeStructure};
use crate::orbits::{Jump, OrbitCensus};
use crate::zeta;

/// Relative tolerance on the imaginary residue of an evaluated expansion.
pub const REALNESS_TOL: f64 = 1e-9;

/// Periodic factor of one lattice line: g(y) = (b w / (b - 1)) b^{-{y/w}}
/// with b = exp(w omega), of period w. The power b^{-{y/w}} abbreviates
/// exp(-{y/w} w omega), which is how the closed form arises from summing
/// the line's Fourier series.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicProfile {
    pub omega: Complex64,
    pub period: f64,
    pub multiplier: Complex64,
}

impl PeriodicProfile {
    pub fn new(omega: Complex64, period: f64) -> Self {
        let multiplier = (omega * period).exp();
        PeriodicProfile { omega, period, multiplier }
    }

    /// Right-continuous closed form at y.
    pub fn closed_form(&self, y: f64) -> Complex64 {
        let frac = (y / self.period).fract();
        let frac = if frac < 0.0 { frac + 1.0 } else { frac };
        self.prefactor() * (-self.omega * self.period * frac).exp()
    }

    fn prefactor(&self) -> Complex64 {
        self.multiplier * self.period / (self.multiplier - 1.0)
    }

    /// Symmetric Fourier partial sum sum_{|n| <= n_max} e^{2 pi i n y / w} /
    /// (omega + 2 pi i n / w).
    pub fn fourier_partial(&self, y: f64, n_max: usize) -> Complex64 {
        let beta = std::f64::consts::TAU / self.period;
        let mut acc = self.omega.inv();
        for n in 1..=n_max {
            let rot = Complex64::new(0.0, beta * n as f64);
            let phase = Complex64::new(0.0, beta * n as f64 * y).exp();
            acc += phase / (self.omega + rot) + phase.conj() / (self.omega - rot);
        }
        acc
    }
}

/// Oscillatory expansion assembled from a window: terms (omega, residue)
/// plus the constant res(-x^s zeta'/(s zeta); 0) = -(1/(N-1)) sum w_j.
#[derive(Debug, Clone)]
pub struct ExplicitExpansion {
    /// Dimensions with Im >= 0; conjugates are implied in evaluation.
    terms: Vec<(Complex64, f64)>,
    pub constant_term: f64,
    pub level: u8,
    /// Level-2 constant from the residue at s = -1.
    level2_constant: f64,
}

impl ExplicitExpansion {
    /// Collect the window's terms for evaluation at the given level (1 or 2).
    pub fn from_window(window: &DimensionWindow, level: u8) -> Result<Self> {
        let flow = window.flow();
        if flow.n() < 2 {
            return Err(Error::Domain("explicit expansions need N >= 2".into()));
        }
        if !(level == 1 || level == 2) {
            return Err(Error::Capability(format!("level {level} unsupported (1 or 2)")));
        }
        let mut terms: Vec<(Complex64, f64)> = window
            .dims()
            .iter()
            .filter(|d| d.omega.im >= 0.0)
            .map(|d| (d.omega, d.residue as f64))
            .collect();
        // Ascending |Im| so conjugate pairs accumulate deterministically.
        terms.sort_by(|a, b| {
            (a.0.im.abs(), a.0.re)
                .partial_cmp(&(b.0.im.abs(), b.0.re))
                .expect("finite terms")
        });
        let constant_term = zeta::log_deriv_at_zero(flow)?;
        // res at s = -1 of x^{s+1} (-zeta'/zeta)(s) / (s (s+1)) = -g(-1):
        // g(-1) = sum w_j e^{w_j} / (1 - sum e^{w_j}).
        let num: f64 = flow.weights().iter().map(|&w| w * w.exp()).sum();
        let den: f64 = 1.0 - flow.weights().iter().map(|&w| w.exp()).sum::<f64>();
        let level2_constant = -num / den;
        Ok(ExplicitExpansion { terms, constant_term, level, level2_constant })
    }

    pub fn terms(&self) -> &[(Complex64, f64)] {
        &self.terms
    }

    /// Evaluate at x > 1. Conjugate pairs are combined analytically as
    /// 2 Re(x^omega / omega), so the result is real by construction.
    pub fn eval(&self, x: f64) -> f64 {
        let y = x.ln();
        let mut acc = 0.0f64;
        for &(omega, coeff) in &self.terms {
            let term = match self.level {
                1 => power_term(omega, y) / omega,
                _ => power_term(omega + 1.0, y) / (omega * (omega + 1.0)),
            };
            acc += if omega.im.abs() < 1e-12 { coeff * term.re } else { 2.0 * coeff * term.re };
        }
        match self.level {
            1 => acc + self.constant_term,
            _ => acc + self.constant_term * x + self.level2_constant,
        }
    }
}

/// x^omega as exp(omega ln x), stable for large Im omega.
#[inline]
fn power_term(omega: Complex64, y: f64) -> Complex64 {
    let modulus = (omega.re * y).exp();
    let phase = omega.im * y;
    Complex64::new(modulus * phase.cos(), modulus * phase.sin())
}

/// Exact lattice counting function via the periodic closed forms:
/// psi(x) = sum_u res_u g_u(log x) x^{omega_u} - (1/(N-1)) sum w_j.
///
/// At lattice points (log x / w within 1e-12 of an integer) the `Half`
/// convention evaluates the mean of the two one-sided limits, matching the
/// value the Fourier series converges to; `Full` takes the right-continuous
/// value.
pub fn lattice_psi(
    flow: &FlowSpec,
    lat: &LatticeStructure,
    x: f64,
    jump: Jump,
) -> Result<f64> {
    if !x.is_finite() || x < 1.0 {
        return Err(Error::Validation(format!("lattice_psi needs x >= 1, got {x}")));
    }
    let bases = crate::dims::lattice_line_bases(flow, lat)?;
    let w = lat.generator;
    let y = x.ln();
    let ratio = y / w;
    let nearest = ratio.round();
    let at_jump = (ratio - nearest).abs() <= 1e-12 * ratio.abs().max(1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (omega, residue) in bases {
        let b = (omega * w).exp();
        let prefactor = b * w / (b - 1.0);
        // g_u(log x) x^{omega_u} collapses to prefactor * exp(omega w m)
        // with m = [log x / w]; the fractional parts cancel exactly.
        let line_value = |m: f64| prefactor * (omega * w * m).exp();
        let value = if at_jump {
            match jump {
                Jump::Full => line_value(nearest),
                Jump::Half => 0.5 * (line_value(nearest - 1.0) + line_value(nearest)),
            }
        } else {
            line_value(ratio.floor())
        };
        acc += residue as f64 * value;
    }
    let constant = zeta::log_deriv_at_zero(flow)?;
    let total = acc.re + constant;
    if acc.im.abs() > REALNESS_TOL * acc.re.abs().max(1.0) {
        return Err(Error::NumericIntegrity(format!(
            "lattice expansion at x = {x} has imaginary residue {}",
            acc.im
        )));
    }
    Ok(total)
}

/// Truncated nonlattice expansion with its (heuristic) tail bound.
#[derive(Debug, Clone, Copy)]
pub struct NonlatticePsi {
    pub value: f64,
    /// B x^D / T with B = 2 w_N / pi from the linear density of dimensions.
    /// Heuristic at level 1: the sum is only proved absolutely convergent
    /// at level 2, so this is reported as an indication, not a bound.
    pub tail_bound: f64,
}

/// psi(x) ~ x^D/D + sum_{omega != D} x^omega/omega + constant, truncated to
/// the window, summed in conjugate pairs of ascending |Im|.
pub fn nonlattice_psi(flow: &FlowSpec, window: &DimensionWindow, x: f64) -> Result<NonlatticePsi> {
    let t = window.half_height();
    if t < std::f64::consts::TAU / flow.weight(0) {
        return Err(Error::Precondition(format!(
            "window half-height {t} below one vertical period 2 pi / w_1"
        )));
    }
    let expansion = ExplicitExpansion::from_window(window, 1)?;
    let value = expansion.eval(x);
    let d = crate::flow::solve_dimension(flow)?.d;
    let wn = flow.weight(flow.n() - 1);
    let tail_bound = 2.0 * wn / std::f64::consts::PI * x.powf(d) / t;
    Ok(NonlatticePsi { value, tail_bound })
}

/// Level-2 expansion: the antiderivative of psi,
/// psi2(x) = sum res x^{omega+1}/(omega(omega+1)) + c0 x + c_{-1},
/// absolutely convergent in the window truncation.
pub fn psi_level2(flow: &FlowSpec, window: &DimensionWindow, x: f64) -> Result<f64> {
    if flow.weights() != window.flow().weights() {
        return Err(Error::Validation(
            "window was computed for a different flow".into(),
        ));
    }
    let expansion = ExplicitExpansion::from_window(window, 2)?;
    Ok(expansion.eval(x))
}

/// One row of the error-scaling report.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRow {
    pub x: f64,
    pub psi_census: f64,
    pub psi_formula: f64,
    pub main_term: f64,
    /// (psi_census - x^D/D) / x^D.
    pub normalized_error: f64,
    /// (log log x / log x)^exponent; NaN when x <= e.
    pub envelope: f64,
}

/// Per-x comparison of census, truncated formula and the asymptotic
/// envelope (log log x / log x)^exponent. Purely descriptive: the envelope
/// is an asymptotic claim and is not pass/fail at desk scale.
pub fn error_scaling_report(
    flow: &FlowSpec,
    window: &DimensionWindow,
    census: &OrbitCensus,
    xs: &[f64],
    envelope_exponent: f64,
) -> Result<Vec<ErrorRow>> {
    let d = crate::flow::solve_dimension(flow)?.d;
    let expansion = ExplicitExpansion::from_window(window, 1)?;
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        let psi_census = census.psi(x, Jump::Half)?;
        let psi_formula = expansion.eval(x);
        let xd = x.powf(d);
        let main_term = xd / d;
        let loglog = x.ln().ln();
        let envelope = if loglog > 0.0 {
            (loglog / x.ln()).powf(envelope_exponent)
        } else {
            f64::NAN
        };
        rows.push(ErrorRow {
            x,
            psi_census,
            psi_formula,
            main_term,
            normalized_error: (psi_census - main_term) / xd,
            envelope,
        });
    }
    Ok(rows)
}

/// Envelope constant c fitting the oscillation peaks: the grid is split
/// into bins, each bin contributes its largest |normalized_error|, and c is
/// the least-squares fit of those peaks against the envelope. An envelope
/// bounds peaks, so fitting peak amplitudes (rather than the mean, which
/// the quiet points between oscillations would drag down) is what makes
/// c * envelope an upper profile of the data.
pub fn fit_envelope_constant(rows: &[ErrorRow]) -> f64 {
    let usable: Vec<&ErrorRow> = rows.iter().filter(|r| r.envelope.is_finite()).collect();
    if usable.is_empty() {
        return f64::NAN;
    }
    let bins = 8.min(usable.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for b in 0..bins {
        let lo = b * usable.len() / bins;
        let hi = ((b + 1) * usable.len() / bins).max(lo + 1);
        let peak = usable[lo..hi]
            .iter()
            .max_by(|a, b| {
                a.normalized_error
                    .abs()
                    .partial_cmp(&b.normalized_error.abs())
                    .expect("finite errors")
            })
            .expect("nonempty bin");
        num += peak.normalized_error.abs() * peak.envelope;
        den += peak.envelope * peak.envelope;
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}
