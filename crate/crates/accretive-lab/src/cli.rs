//! Command-line driver: verify / generate / trotter / sweep / nr-dump.
//!
//! Exit codes: 0 = all hard checks passed; 1 = a hard check failed (the
//! report is still written); 2 = input or usage error. Audits never
//! affect the exit code.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::io::{read_matrix, write_matrix};
use crate::numerics::{numerical_range_boundary, CMatrix, ToleranceConfig};
use crate::perturbation::{
    derive_seed, generate_pair, verify_lemma, BValue, Family, GenParams, OperatorPair,
    VerifyConfig,
};
use crate::report::{write_report, ReportDocument, RunManifest, TOOL_VERSION};
use crate::trotter::{check_thm_hypotheses, run_experiment, TrotterExperiment};

#[derive(Parser)]
#[command(name = "accretive-lab", version, about = "numerical laboratory for accretive-operator perturbation bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Path to the unperturbed operator T (Matrix Market or JSON)
    #[arg(long)]
    t: Option<PathBuf>,
    /// Path to the perturbation A (Matrix Market or JSON)
    #[arg(long)]
    a: Option<PathBuf>,
    /// Generator family: diagonal | scalar-multiple | rotated | adversarial
    #[arg(long)]
    family: Option<Family>,
    /// Dimension for generated instances
    #[arg(long)]
    dim: Option<usize>,
    /// Generator parameter, K=V; known keys: target_b, gamma
    #[arg(long = "param")]
    params: Vec<String>,
    /// Master seed for generation
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the perturbation bounds on one operator pair
    Verify {
        #[command(flatten)]
        input: InputArgs,
        /// Tolerance override for eig_tol and rank_tol
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Generate an operator pair and write it as Matrix Market files
    Generate {
        #[command(flatten)]
        input: InputArgs,
        /// Output prefix; writes <prefix>_t.mtx and <prefix>_a.mtx
        #[arg(long, default_value = "pair")]
        out: PathBuf,
    },
    /// Measure Trotter product-formula errors and fit the rate
    Trotter {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated n values (default 2,4,...,1024)
        #[arg(long = "n-grid")]
        n_grid: Option<String>,
        /// Comma-separated t values (default 0.5,1,2,4)
        #[arg(long = "t-grid")]
        t_grid: Option<String>,
        /// Run the experiment even if the theorem hypotheses fail
        #[arg(long)]
        waiver: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Verify generated families across a grid of target b values
    Sweep {
        /// Grid start:stop:count, e.g. 1.1:10:20
        #[arg(long = "b-grid")]
        b_grid: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Dump the numerical-range boundary polyline as CSV
    NrDump {
        #[command(flatten)]
        input: InputArgs,
        /// Number of support-function angles
        #[arg(long, default_value_t = 720)]
        angles: usize,
        #[arg(long, default_value = "boundary.csv")]
        out: PathBuf,
    },
}

pub fn run() -> ! {
    std::process::exit(run_with_args(std::env::args_os()));
}

pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with code 0
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(msg) = validate_thread_env() {
        eprintln!("error: {msg}");
        return 2;
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Parallelism bound; the implementation is sequential, so any valid
/// bound is respected trivially, but an invalid value is a usage error.
fn validate_thread_env() -> Result<(), String> {
    match std::env::var("ACCRETIVE_LAB_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(format!("ACCRETIVE_LAB_THREADS must be a positive integer, got '{v}'")),
        },
        Err(_) => Ok(()),
    }
}

fn tolerance(tol: Option<f64>) -> Result<ToleranceConfig, Error> {
    let mut cfg = ToleranceConfig::default();
    if let Some(x) = tol {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::OutOfDomain(format!("--tol must lie in (0, 1), got {x}")));
        }
        cfg.eig_tol = x;
        cfg.rank_tol = x;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_gen_params(raw: &[String]) -> Result<GenParams, Error> {
    let mut p = GenParams::default();
    for item in raw {
        let (k, v) = item.split_once('=').ok_or_else(|| {
            Error::OutOfDomain(format!("--param expects K=V, got '{item}'"))
        })?;
        let value: f64 = v
            .parse()
            .map_err(|_| Error::OutOfDomain(format!("bad numeric value in '{item}'")))?;
        match k {
            "target_b" | "target-b" => p.target_b = value,
            "gamma" => p.gamma = value,
            _ => return Err(Error::OutOfDomain(format!("unknown parameter '{k}'"))),
        }
    }
    Ok(p)
}

fn load_pair(input: &InputArgs, tol: &ToleranceConfig) -> Result<OperatorPair, Error> {
    match (&input.t, &input.a, input.family) {
        (Some(tp), Some(ap), None) => {
            OperatorPair::new(read_matrix(tp)?, read_matrix(ap)?, Family::User, None)
        }
        (None, None, Some(family)) => {
            let dim = input.dim.ok_or_else(|| {
                Error::OutOfDomain("--family requires --dim".into())
            })?;
            let params = parse_gen_params(&input.params)?;
            let seed = input.seed.unwrap_or(0);
            generate_pair(family, dim, &params, seed, tol)
        }
        _ => Err(Error::OutOfDomain(
            "provide either --t and --a, or --family with --dim".into(),
        )),
    }
}

fn input_paths(input: &InputArgs) -> Vec<String> {
    [&input.t, &input.a]
        .iter()
        .filter_map(|p| p.as_ref().map(|p| p.display().to_string()))
        .collect()
}

fn manifest(command: &str, seed: u64, tol: &ToleranceConfig, inputs: Vec<String>, out: &Path) -> RunManifest {
    RunManifest {
        command: command.into(),
        master_seed: seed,
        tolerance: *tol,
        input_paths: inputs,
        output_path: out.display().to_string(),
        tool_version: TOOL_VERSION.into(),
    }
}

fn parse_grid_f64(raw: &str) -> Result<Vec<f64>, Error> {
    let values: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| Error::OutOfDomain(format!("bad grid '{raw}'")))?;
    if values.is_empty() || values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::OutOfDomain("grid values must be positive".into()));
    }
    Ok(values)
}

fn parse_grid_u32(raw: &str) -> Result<Vec<u32>, Error> {
    let values: Result<Vec<u32>, _> = raw.split(',').map(|s| s.trim().parse::<u32>()).collect();
    let values = values.map_err(|_| Error::OutOfDomain(format!("bad grid '{raw}'")))?;
    if values.is_empty() || values.iter().any(|&n| n < 1) {
        return Err(Error::OutOfDomain("n grid values must be >= 1".into()));
    }
    Ok(values)
}

fn parse_b_grid(raw: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::OutOfDomain(format!(
            "--b-grid expects start:stop:count, got '{raw}'"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::OutOfDomain("bad b-grid start".into()))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| Error::OutOfDomain("bad b-grid stop".into()))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::OutOfDomain("bad b-grid count".into()))?;
    if count < 1 || !(start > 0.0) || stop < start {
        return Err(Error::OutOfDomain("b-grid must satisfy 0 < start <= stop, count >= 1".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn dispatch(command: Command) -> Result<i32, Error> {
    match command {
        Command::Verify { input, tol, out } => cmd_verify(input, tol, &out),
        Command::Generate { input, out } => cmd_generate(input, &out),
        Command::Trotter {
            input,
            n_grid,
            t_grid,
            waiver,
            tol,
            out,
        } => cmd_trotter(input, n_grid, t_grid, waiver, tol, &out),
        Command::Sweep {
            b_grid,
            seed,
            dim,
            tol,
            out,
        } => cmd_sweep(&b_grid, seed, dim, tol, &out),
        Command::NrDump { input, angles, out } => cmd_nr_dump(input, angles, &out),
    }
}

fn cmd_verify(input: InputArgs, tol: Option<f64>, out: &Path) -> Result<i32, Error> {
    let tol = tolerance(tol)?;
    let pair = load_pair(&input, &tol)?;
    let config = VerifyConfig {
        tol,
        seed: input.seed.unwrap_or(0),
        ..VerifyConfig::default()
    };
    let mut doc = ReportDocument::new(manifest(
        "verify",
        input.seed.unwrap_or(0),
        &tol,
        input_paths(&input),
        out,
    ));
    let cert = match verify_lemma(&pair, &config) {
        Ok(cert) => cert,
        Err(Error::CertificateFailure { certificate, .. }) => *certificate,
        Err(e) => return Err(e),
    };
    let failed = cert.hard_checks_failed;
    doc.certificates.push(cert);
    doc.finalize();
    write_report(&doc, out)?;
    println!(
        "hard checks: {} passed, {} failed; audits violated: {}",
        doc.summary.hard_checks_passed, doc.summary.hard_checks_failed, doc.summary.audits_violated
    );
    Ok(if failed > 0 { 1 } else { 0 })
}

fn cmd_generate(input: InputArgs, out: &Path) -> Result<i32, Error> {
    let tol = ToleranceConfig::default();
    if input.family.is_none() {
        return Err(Error::OutOfDomain("generate requires --family and --dim".into()));
    }
    let pair = load_pair(&input, &tol)?;
    let prefix = out.display().to_string();
    let t_path = PathBuf::from(format!("{prefix}_t.mtx"));
    let a_path = PathBuf::from(format!("{prefix}_a.mtx"));
    write_matrix(&pair.t, &t_path)?;
    write_matrix(&pair.a, &a_path)?;
    match crate::perturbation::compute_b(&pair, &tol)? {
        BValue::Finite(b) => println!("wrote {} and {}; b = {b}", t_path.display(), a_path.display()),
        other => println!("wrote {} and {}; b = {other:?}", t_path.display(), a_path.display()),
    }
    Ok(0)
}

fn cmd_trotter(
    input: InputArgs,
    n_grid: Option<String>,
    t_grid: Option<String>,
    waiver: bool,
    tol: Option<f64>,
    out: &Path,
) -> Result<i32, Error> {
    let tol = tolerance(tol)?;
    let pair = load_pair(&input, &tol)?;
    let n_grid = match n_grid {
        Some(raw) => parse_grid_u32(&raw)?,
        None => crate::trotter::default_n_grid(),
    };
    let t_grid = match t_grid {
        Some(raw) => parse_grid_f64(&raw)?,
        None => crate::trotter::default_t_grid(),
    };
    let mut doc = ReportDocument::new(manifest(
        "trotter",
        input.seed.unwrap_or(0),
        &tol,
        input_paths(&input),
        out,
    ));

    let hypothesis_report = check_thm_hypotheses(&pair.t, &pair.a, &tol)?;
    let code = if !hypothesis_report.all_pass() && !waiver {
        // record the failure in the report instead of refusing to write one
        doc.experiments.push(TrotterExperiment {
            dim: pair.dim(),
            t_grid,
            n_grid,
            errors: vec![],
            adjoint_errors: vec![],
            sup_errors: vec![],
            fit: None,
            fit_skipped_reason: Some(format!(
                "hypothesis failed: {}",
                hypothesis_report.failing_clause().unwrap_or("unknown")
            )),
            hypothesis_report,
            hypothesis_waived: false,
            alpha_flagged: false,
        });
        1
    } else {
        let exp = run_experiment(&pair.t, &pair.a, &t_grid, &n_grid, waiver, &tol)?;
        doc.experiments.push(exp);
        0
    };
    doc.finalize();
    write_report(&doc, out)?;
    if let Some(fit) = doc.experiments[0].fit {
        println!("fitted alpha = {:.6}, L = {:.6}, residual = {:.3e}", fit.alpha, fit.l, fit.residual);
    } else if let Some(reason) = &doc.experiments[0].fit_skipped_reason {
        println!("fit skipped: {reason}");
    }
    Ok(code)
}

fn cmd_sweep(b_grid: &str, seed: u64, dim: usize, tol: Option<f64>, out: &Path) -> Result<i32, Error> {
    let tol = tolerance(tol)?;
    let grid = parse_b_grid(b_grid)?;
    let families = [Family::Diagonal, Family::ScalarMultiple, Family::Rotated];
    let mut doc = ReportDocument::new(manifest("sweep", seed, &tol, vec![], out));
    let mut any_failed = false;
    let mut index = 0u64;
    for &target in &grid {
        for &family in &families {
            let params = GenParams {
                target_b: target,
                gamma: 1.0 / target,
            };
            let instance_seed = derive_seed(seed, index);
            index += 1;
            let pair = generate_pair(family, dim, &params, instance_seed, &tol)?;
            let config = VerifyConfig {
                tol,
                seed: instance_seed,
                ..VerifyConfig::default()
            };
            let cert = match verify_lemma(&pair, &config) {
                Ok(cert) => cert,
                Err(Error::CertificateFailure { certificate, .. }) => *certificate,
                Err(e) => return Err(e),
            };
            any_failed |= cert.hard_checks_failed > 0;
            doc.certificates.push(cert);
        }
    }
    doc.finalize();
    write_report(&doc, out)?;
    println!(
        "{} certificates; hard checks: {} passed, {} failed; audits violated: {}",
        doc.certificates.len(),
        doc.summary.hard_checks_passed,
        doc.summary.hard_checks_failed,
        doc.summary.audits_violated
    );
    Ok(if any_failed { 1 } else { 0 })
}

fn cmd_nr_dump(input: InputArgs, angles: usize, out: &Path) -> Result<i32, Error> {
    if angles < 8 {
        return Err(Error::OutOfDomain("--angles must be >= 8".into()));
    }
    let tol = ToleranceConfig::default();
    let m: CMatrix = match (&input.t, input.family) {
        (Some(tp), None) => read_matrix(tp)?,
        _ => load_pair(&input, &tol)?.sum(),
    };
    let boundary = numerical_range_boundary(&m, angles);
    let mut csv = String::from("re,im\n");
    for z in &boundary {
        csv.push_str(&format!("{:?},{:?}\n", z.re, z.im));
    }
    std::fs::write(out, csv)?;
    println!("wrote {} boundary points to {}", boundary.len(), out.display());
    Ok(0)
}
