//! Command-line front end: parse flow documents, dispatch subcommands,
//! write CSV/JSON artifacts and run the reproduction suite.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use ssflow::dims::{self, DimensionWindow};
use ssflow::dioph;
use ssflow::explicit;
use ssflow::flow::{classify_lattice, solve_dimension, FlowSpec};
use ssflow::orbits::{self, Jump};
use ssflow::verify;
use ssflow::zeta;
use ssflow::Error;

#[derive(Parser)]
#[command(
    name = "ssflow",
    about = "Complex dimensions, orbit counting and explicit formulas for self-similar flows",
    version
)]
struct Cli {
    /// Directory for output artifacts (created if missing); a manifest.json
    /// listing files and parameters is written alongside.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Format floats with 17 significant digits for bit-exact diffing
    /// (default is the shortest round-trip representation).
    #[arg(long, global = true)]
    float17: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the real dimension D and strip edge D0; classify the weights.
    Dimension {
        /// Flow document path or builtin name (cantor, fibonacci, golden).
        flow: String,
        /// Largest denominator considered during lattice detection.
        #[arg(long, default_value_t = 1_000_000)]
        max_denominator: u64,
    },
    /// Compute the complex dimensions with |Im s| <= T, exported as CSV.
    DimsWindow {
        flow: String,
        /// Window half-height T.
        #[arg(long, short = 't')]
        t: f64,
        /// Simultaneous-approximation quality Q for nonlattice flows
        /// (chosen adaptively when omitted).
        #[arg(long)]
        quality: Option<f64>,
    },
    /// Enumerate primitive periodic orbits up to a total-weight cutoff.
    Orbits {
        flow: String,
        /// Maximum total weight (natural log units).
        #[arg(long)]
        cutoff: f64,
        /// Census record cap.
        #[arg(long, default_value_t = orbits::DEFAULT_CENSUS_CAP)]
        cap: usize,
    },
    /// Tabulate the counting functions psi, theta, pi on an x grid.
    Psi {
        flow: String,
        /// Grid spec MIN:MAX:COUNT[:log|lin].
        #[arg(long)]
        x_grid: String,
        #[command(flatten)]
        jump: JumpArg,
    },
    /// Dynamical zeta function operations.
    Zeta {
        #[command(subcommand)]
        cmd: ZetaCmd,
    },
    /// Diophantine approximation operations.
    Dioph {
        #[command(subcommand)]
        cmd: DiophCmd,
    },
    /// Explicit-formula operations.
    Explicit {
        #[command(subcommand)]
        cmd: ExplicitCmd,
    },
    /// Run the reproduction suite (target: all | golden-flow | 1..9).
    Reproduce {
        #[arg(default_value = "all")]
        target: String,
    },
}

#[derive(Args)]
struct JumpArg {
    /// Jump convention at census jump points: full (right-continuous) or
    /// half (explicit-formula convention).
    #[arg(long, default_value = "full")]
    jump: String,
}

impl JumpArg {
    fn parse(&self) -> Result<Jump, Error> {
        match self.jump.as_str() {
            "full" => Ok(Jump::Full),
            "half" => Ok(Jump::Half),
            other => Err(Error::Validation(format!(
                "jump convention must be `full` or `half`, got `{other}`"
            ))),
        }
    }
}

#[derive(Subcommand)]
enum ZetaCmd {
    /// Evaluate zeta, -zeta'/zeta, f, f', f'' at s = re + i im (JSON).
    Eval {
        flow: String,
        #[arg(long, default_value_t = 0.0)]
        re: f64,
        #[arg(long, default_value_t = 0.0)]
        im: f64,
    },
}

#[derive(Subcommand)]
enum DiophCmd {
    /// Emit q, max_error, ratio for q = 1..q_max as CSV.
    Profile {
        flow: String,
        #[arg(long, default_value_t = 1000)]
        q_max: u64,
    },
}

#[derive(Subcommand)]
enum ExplicitCmd {
    /// Compare census psi against the truncated expansion on an x grid.
    Compare {
        flow: String,
        /// Window half-height T.
        #[arg(long, short = 't')]
        t: f64,
        /// Grid spec MIN:MAX:COUNT[:log|lin].
        #[arg(long)]
        x_grid: String,
        /// Envelope exponent for the error report (defaults to (N-1)/4).
        #[arg(long)]
        envelope_exponent: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(RunError::CriteriaFailed(n)) => {
            eprintln!("error: {n} criterion(s) failed");
            ExitCode::FAILURE
        }
    }
}

enum RunError {
    Lib(Error),
    CriteriaFailed(usize),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Lib(e)
    }
}

struct Output {
    dir: Option<PathBuf>,
    float17: bool,
    files: Vec<String>,
}

impl Output {
    fn prepare(dir: Option<PathBuf>, float17: bool) -> Result<Self, Error> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
            // Confirm writability before doing any compute.
            let probe = d.join(".write-probe");
            std::fs::write(&probe, b"ok")?;
            std::fs::remove_file(&probe)?;
        }
        Ok(Output { dir, float17, files: Vec::new() })
    }

    fn fmt(&self, x: f64) -> String {
        if self.float17 {
            format!("{x:.16e}")
        } else {
            format!("{x}")
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        if let Some(d) = &self.dir {
            std::fs::write(d.join(name), contents)?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    fn finish(&self, command: &str, parameters: serde_json::Value) -> Result<(), Error> {
        if let Some(d) = &self.dir {
            let manifest = serde_json::json!({
                "command": command,
                "parameters": parameters,
                "files": self.files,
                "version": env!("CARGO_PKG_VERSION"),
            });
            std::fs::write(
                d.join("manifest.json"),
                serde_json::to_string_pretty(&manifest).expect("manifest encodes"),
            )?;
        }
        Ok(())
    }
}

fn load_flow(source: &str) -> Result<FlowSpec, Error> {
    match source {
        "cantor" => Ok(FlowSpec::cantor()),
        "fibonacci" => Ok(FlowSpec::fibonacci()),
        "golden" => Ok(FlowSpec::golden()),
        path => FlowSpec::from_path(Path::new(path)),
    }
}

/// Parse MIN:MAX:COUNT[:log|lin] into a grid.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(Error::Validation(format!(
            "grid spec `{spec}` must be MIN:MAX:COUNT[:log|lin]"
        )));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Validation(format!("bad grid minimum `{}`", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Validation(format!("bad grid maximum `{}`", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Validation(format!("bad grid count `{}`", parts[2])))?;
    let log_spacing = match parts.get(3).copied().unwrap_or("log") {
        "log" => true,
        "lin" => false,
        other => {
            return Err(Error::Validation(format!(
                "grid spacing must be `log` or `lin`, got `{other}`"
            )))
        }
    };
    if count == 0 || min <= 0.0 || max <= min {
        return Err(Error::Validation(format!(
            "grid spec `{spec}` needs 0 < MIN < MAX and COUNT >= 1"
        )));
    }
    let mut xs = Vec::with_capacity(count);
    for i in 0..count {
        let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
        let x = if log_spacing {
            (min.ln() + (max.ln() - min.ln()) * t).exp()
        } else {
            min + (max - min) * t
        };
        xs.push(x);
    }
    Ok(xs)
}

fn complex_json(out: &Output, z: Complex64) -> serde_json::Value {
    serde_json::json!({ "re": out.fmt(z.re), "im": out.fmt(z.im) })
}

fn run(cli: Cli) -> Result<(), RunError> {
    let mut out = Output::prepare(cli.out.clone(), cli.float17)?;
    match cli.command {
        Command::Dimension { flow, max_denominator } => {
            let spec = load_flow(&flow)?;
            let pair = solve_dimension(&spec)?;
            println!("flow: {} (N = {})", spec.name().unwrap_or(&flow), spec.n());
            if pair.degenerate {
                println!("degenerate flow (N <= 1): D = 0 by convention");
            } else {
                println!("D  = {}", out.fmt(pair.d));
                println!("D0 = {}", out.fmt(pair.d0));
            }
            match classify_lattice(&spec, max_denominator) {
                Some(lat) => println!(
                    "lattice: generator w = {}, multipliers k = {:?}",
                    out.fmt(lat.generator),
                    lat.multipliers
                ),
                None => println!("nonlattice at resolution max_denominator = {max_denominator}"),
            }
            let doc = serde_json::json!({
                "d": pair.d,
                "d0": pair.d0,
                "degenerate": pair.degenerate,
                "smallest_ratio_multiplicity": pair.smallest_ratio_multiplicity,
            });
            out.write("dimension.json", &serde_json::to_string_pretty(&doc).expect("encodes"))?;
            out.finish(
                "dimension",
                serde_json::json!({ "flow": flow, "max_denominator": max_denominator }),
            )?;
        }
        Command::DimsWindow { flow, t, quality } => {
            let spec = load_flow(&flow)?;
            let window = compute_window(&spec, t, quality)?;
            let csv = window_csv(&out, &window);
            out.write("dims.csv", &csv)?;
            let density = dims::density_check(&window);
            println!(
                "{} dimensions with |Im| <= {t} ({}); density constant C = {:.3}",
                window.len(),
                window.metadata.method,
                density.c_min
            );
            if out.dir.is_none() {
                print!("{csv}");
            }
            out.finish("dims-window", serde_json::json!({ "flow": flow, "t": t, "quality": quality }))?;
        }
        Command::Orbits { flow, cutoff, cap } => {
            let spec = load_flow(&flow)?;
            let census = orbits::enumerate_orbits_with_cap(&spec, cutoff, cap)?;
            if census.is_empty() {
                eprintln!(
                    "warning: cutoff {cutoff} lies below the smallest weight {}; census is empty",
                    spec.weights().first().copied().unwrap_or(f64::NAN)
                );
            }
            let mut csv = String::from("length,total_weight,representative\n");
            for rec in census.records() {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    rec.length,
                    out.fmt(rec.total_weight),
                    rec.representative_string(spec.n())
                );
            }
            out.write("census.csv", &csv)?;
            println!("{} primitive orbits with total weight <= {cutoff}", census.len());
            if out.dir.is_none() {
                print!("{csv}");
            }
            out.finish("orbits", serde_json::json!({ "flow": flow, "cutoff": cutoff, "cap": cap }))?;
        }
        Command::Psi { flow, x_grid, jump } => {
            let spec = load_flow(&flow)?;
            let jump = jump.parse()?;
            let xs = parse_grid(&x_grid)?;
            let cutoff = xs.iter().fold(0.0f64, |a, &x| a.max(x.ln())) + 1e-9;
            let census = orbits::enumerate_orbits(&spec, cutoff)?;
            let mut csv = String::from("x,psi,theta,pi\n");
            for &x in &xs {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    out.fmt(x),
                    out.fmt(census.psi(x, jump)?),
                    out.fmt(census.theta(x, jump)?),
                    census.pi_count(x)?
                );
            }
            out.write("counts.csv", &csv)?;
            println!("{} grid points over census of {} orbits", xs.len(), census.len());
            if out.dir.is_none() {
                print!("{csv}");
            }
            out.finish("psi", serde_json::json!({ "flow": flow, "x_grid": x_grid }))?;
        }
        Command::Zeta { cmd } => match cmd {
            ZetaCmd::Eval { flow, re, im } => {
                let spec = load_flow(&flow)?;
                let ev = zeta::evaluate(&spec, Complex64::new(re, im));
                let doc = serde_json::json!({
                    "s": complex_json(&out, ev.s),
                    "is_pole": ev.is_pole,
                    "zeta": ev.zeta.map(|z| complex_json(&out, z)),
                    "neg_log_deriv": ev.neg_log_deriv.map(|z| complex_json(&out, z)),
                    "f_value": complex_json(&out, ev.f_value),
                    "f_prime": complex_json(&out, ev.f_prime),
                    "f_double_prime": complex_json(&out, ev.f_double_prime),
                });
                let text = serde_json::to_string_pretty(&doc).expect("encodes");
                println!("{text}");
                out.write("zeta.json", &text)?;
                out.finish("zeta eval", serde_json::json!({ "flow": flow, "re": re, "im": im }))?;
            }
        },
        Command::Dioph { cmd } => match cmd {
            DiophCmd::Profile { flow, q_max } => {
                let spec = load_flow(&flow)?;
                let rows = dioph::approximability_profile(&spec, q_max)?;
                let mut csv = String::from("q,max_error,ratio\n");
                for row in &rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{}",
                        row.q,
                        out.fmt(row.max_error),
                        out.fmt(row.bound_ratio)
                    );
                }
                out.write("profile.csv", &csv)?;
                println!("{} rows", rows.len());
                if out.dir.is_none() {
                    print!("{csv}");
                }
                out.finish("dioph profile", serde_json::json!({ "flow": flow, "q_max": q_max }))?;
            }
        },
        Command::Explicit { cmd } => match cmd {
            ExplicitCmd::Compare { flow, t, x_grid, envelope_exponent } => {
                let spec = load_flow(&flow)?;
                let xs = parse_grid(&x_grid)?;
                let exponent = envelope_exponent
                    .unwrap_or((spec.n() as f64 - 1.0) / 4.0);
                let window = compute_window(&spec, t, None)?;
                let cutoff = xs.iter().fold(0.0f64, |a, &x| a.max(x.ln())) + 1e-9;
                let census = orbits::enumerate_orbits(&spec, cutoff)?;
                let rows = explicit::error_scaling_report(&spec, &window, &census, &xs, exponent)?;
                let mut csv =
                    String::from("x,psi_census,psi_formula,main_term,normalized_error,envelope\n");
                for row in &rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        out.fmt(row.x),
                        out.fmt(row.psi_census),
                        out.fmt(row.psi_formula),
                        out.fmt(row.main_term),
                        out.fmt(row.normalized_error),
                        out.fmt(row.envelope)
                    );
                }
                out.write("compare.csv", &csv)?;
                let c = explicit::fit_envelope_constant(&rows);
                println!(
                    "{} rows; fitted envelope constant c = {}",
                    rows.len(),
                    out.fmt(c)
                );
                if out.dir.is_none() {
                    print!("{csv}");
                }
                out.finish(
                    "explicit compare",
                    serde_json::json!({
                        "flow": flow, "t": t, "x_grid": x_grid,
                        "envelope_exponent": exponent,
                    }),
                )?;
            }
        },
        Command::Reproduce { target } => {
            let reports = match target.as_str() {
                "all" => verify::run_all(),
                "golden-flow" => verify::run_golden_subset(),
                other => match other.parse::<u32>() {
                    Ok(id @ 1..=9) => vec![verify::run_criterion(id)],
                    _ => {
                        return Err(Error::Validation(format!(
                            "reproduce target must be `all`, `golden-flow` or 1..9, got `{other}`"
                        ))
                        .into())
                    }
                },
            };
            let mut text = String::new();
            for report in &reports {
                let line = report.summary_line();
                println!("{line}");
                let _ = writeln!(text, "{line}");
            }
            out.write("report.txt", &text)?;
            if target != "all" {
                write_golden_artifacts(&mut out)?;
            }
            out.finish("reproduce", serde_json::json!({ "target": target }))?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(RunError::CriteriaFailed(failed));
            }
        }
    }
    Ok(())
}

fn compute_window(
    spec: &FlowSpec,
    t: f64,
    quality: Option<f64>,
) -> Result<DimensionWindow, Error> {
    match classify_lattice(spec, 1000) {
        Some(lat) => dims::lattice_dimensions(spec, &lat, t),
        None => dims::nonlattice_dimensions(spec, t, quality),
    }
}

fn window_csv(out: &Output, window: &DimensionWindow) -> String {
    let mut csv = String::from("re,im,residue,source,residual\n");
    for dim in window.dims() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            out.fmt(dim.omega.re),
            out.fmt(dim.omega.im),
            dim.residue,
            dim.source.label(),
            out.fmt(dim.residual)
        );
    }
    csv
}

/// The golden-flow reproduction artifacts: D, the perturbation series and
/// the reference dimensions with their achieved deviations.
fn write_golden_artifacts(out: &mut Output) -> Result<(), Error> {
    let flow = FlowSpec::golden();
    let pair = solve_dimension(&flow)?;
    let series = dims::PerturbationSeries::compute(&flow, 6)?;
    let window = dims::nonlattice_dimensions(&flow, 560.0, None)?;

    let mut csv = String::from("quantity,value,reference,deviation\n");
    let _ = writeln!(
        csv,
        "D,{},{},{}",
        out.fmt(pair.d),
        out.fmt(verify::GOLDEN_D_REFERENCE),
        out.fmt((pair.d - verify::GOLDEN_D_REFERENCE).abs())
    );
    for (k, (&c, &r)) in series
        .coefficients
        .iter()
        .zip(&verify::GOLDEN_SERIES_REFERENCE)
        .enumerate()
    {
        let _ = writeln!(
            csv,
            "c{},{},{},{}",
            k + 1,
            out.fmt(c),
            out.fmt(r),
            out.fmt((c - r).abs())
        );
    }
    out.write("golden_series.csv", &csv)?;

    let mut csv = String::from("q,re,im,reference_re,reference_im\n");
    for &(q, re_offset, im) in &verify::GOLDEN_ROOTS_REFERENCE {
        let target_re = pair.d + re_offset;
        let found = window
            .dims()
            .iter()
            .min_by(|a, b| {
                (a.omega.im - im)
                    .abs()
                    .partial_cmp(&(b.omega.im - im).abs())
                    .expect("finite")
            })
            .expect("window nonempty");
        let _ = writeln!(
            csv,
            "{q},{},{},{},{}",
            out.fmt(found.omega.re),
            out.fmt(found.omega.im),
            out.fmt(target_re),
            out.fmt(im)
        );
    }
    out.write("golden_dims.csv", &csv)?;
    Ok(())
}
