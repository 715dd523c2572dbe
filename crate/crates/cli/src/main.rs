//! Command-line front end: solve single instances, warm-start them across
//! process invocations, run the decoding pipelines, and reproduce the
//! benchmark tables.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure,
//! 3 acceptance failure in `bench`/`selftest`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l1h::bench::{
    run_experiment, table_one_config, table_three_config, table_two_config, ExperimentReport,
    Scale,
};
use l1h::bpdn::{bpdn_kkt, solve_bpdn, BpdnState};
use l1h::dantzig::{ds_kkt, solve_ds};
use l1h::decode::{decode_init, recovery_check};
use l1h::dynamic_seq::{bpdn_add_measurement, bpdn_remove_measurement};
use l1h::dynamic_x::update_bpdn_signal;
use l1h::linalg::io::{read_matrix_file, write_binary, write_csv, BINARY_MAGIC};
use l1h::linalg::{norm_inf, norm2, DenseMatrix};
use l1h::oracle::{bpdn_brute, ds_brute, l1_regression_brute};
use l1h::problems::{corrupt_codeword, gaussian_matrix, CorruptionMode, Rng};
use l1h::robust_decode::{decode_message, robust_add_measurements, robust_init};

const STATE_MAGIC: &[u8; 8] = b"L1HSTA00";

#[derive(Parser)]
#[command(
    name = "l1h",
    about = "Dynamic l1-minimization solvers with homotopy warm starts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance from matrix and measurement files.
    Solve {
        #[command(subcommand)]
        which: SolveCmd,
    },
    /// Warm-start an update from a saved solver state.
    Update {
        #[command(subcommand)]
        which: UpdateCmd,
    },
    /// Run an encode/corrupt/decode pipeline on a synthetic instance.
    Decode {
        #[command(subcommand)]
        which: DecodeCmd,
    },
    /// Reproduce a benchmark table protocol and write the report.
    Bench(BenchArgs),
    /// Column-slice reconstruction of a PGM image with warm starts between
    /// neighbouring slices.
    Slices {
        /// Plain or binary PGM image (P2/P5).
        #[arg(long)]
        image: PathBuf,
        /// Wavelet family: haar or daub8.
        #[arg(long, default_value = "haar")]
        wavelet: String,
        #[arg(long, default_value_t = 0.005)]
        tau_ratio: f64,
        /// Measurements per column as a fraction of the column length.
        #[arg(long, default_value_t = 0.5)]
        undersampling: f64,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Run the oracle-equivalence and optimality-certificate suites.
    Selftest,
}

#[derive(Args)]
struct SolveCommon {
    /// Measurement matrix (CSV or binary).
    #[arg(long)]
    matrix: PathBuf,
    /// Measurement vector (CSV or binary, one row or one column).
    #[arg(long)]
    rhs: PathBuf,
    /// Relaxation as a fraction of ||A'y||_inf.
    #[arg(long, default_value_t = 0.1)]
    tau_ratio: f64,
    /// Absolute relaxation; overrides --tau-ratio.
    #[arg(long)]
    tau: Option<f64>,
    /// Write the solution vector here (CSV).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a resumable solver state here.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Basis pursuit denoising.
    Bpdn(SolveCommon),
    /// Dantzig selector.
    Ds(SolveCommon),
}

#[derive(Subcommand)]
enum UpdateCmd {
    /// Update a saved BPDN state after the measurement vector changed.
    DynamicX {
        #[arg(long)]
        state: PathBuf,
        /// The new measurement vector.
        #[arg(long)]
        new_rhs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        state_out: Option<PathBuf>,
    },
    /// Update a saved BPDN state after appending or removing one row.
    DynamicSeq {
        #[arg(long)]
        state: PathBuf,
        /// Appended measurement row (vector file).
        #[arg(long)]
        new_row: Option<PathBuf>,
        /// Appended measurement value.
        #[arg(long)]
        new_value: Option<f64>,
        /// Remove this measurement row instead of appending.
        #[arg(long)]
        remove_row: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        state_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DecodeCmd {
    /// Exact decoding of a corrupted codeword (sparse gross errors).
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Number of zeroed codeword entries.
        #[arg(long)]
        errors: usize,
        /// Codeword growth block size.
        #[arg(long, default_value_t = 1)]
        block: usize,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Robust decoding with gross errors plus dense noise.
    Robust {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        errors: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 1)]
        block: usize,
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        #[arg(long)]
        seed: Option<String>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// tableI, tableII or tableIII.
    table: String,
    #[arg(long, default_value = "desk")]
    scale: String,
    /// Trials per row; defaults to 500 at full scale, 50 at desk scale.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<String>,
    /// Write the JSON report (an array of per-row reports) here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the aggregate CSV rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Restrict tableI/tableII to one relaxation ratio.
    #[arg(long)]
    lambda: Option<f64>,
    /// Restrict tableIII to one block size.
    #[arg(long)]
    block: Option<usize>,
    /// Worker threads for the trials; 1 keeps logs bit-stable.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl From<l1h::SolverError> for CliError {
    fn from(e: l1h::SolverError) -> Self {
        match e {
            l1h::SolverError::Config { .. } | l1h::SolverError::InvalidArgument { .. } => {
                CliError::config(e.to_string())
            }
            other => CliError::solver(other.to_string()),
        }
    }
}

impl From<l1h::linalg::io::MatrixIoError> for CliError {
    fn from(e: l1h::linalg::io::MatrixIoError) -> Self {
        CliError::config(e.to_string())
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve { which } => cmd_solve(which),
        Command::Update { which } => cmd_update(which),
        Command::Decode { which } => cmd_decode(which),
        Command::Bench(args) => cmd_bench(args),
        Command::Slices {
            image,
            wavelet,
            tau_ratio,
            undersampling,
            seed,
        } => cmd_slices(image, wavelet, tau_ratio, undersampling, seed),
        Command::Selftest => cmd_selftest(),
    }
}

/// Seeds accept decimal or 0x-prefixed hex, with L1H_SEED as the fallback.
fn resolve_seed(cli_seed: &Option<String>) -> Result<u64, CliError> {
    let text = match cli_seed {
        Some(s) => s.clone(),
        None => match std::env::var("L1H_SEED") {
            Ok(s) => s,
            Err(_) => return Ok(0),
        },
    };
    parse_seed(&text).ok_or_else(|| CliError::config(format!("cannot parse seed {text:?}")))
}

fn parse_seed(text: &str) -> Option<u64> {
    let t = text.trim();
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else {
        t.parse().ok()
    }
}

fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let m = read_matrix_file(path)?;
    if m.rows() != 1 && m.cols() != 1 {
        return Err(CliError::config(format!(
            "{} is {}x{}, expected a vector",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.data().to_vec())
}

/// All outputs are written to a temporary sibling and renamed into place.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp-l1h");
    fs::write(&tmp, bytes).map_err(|e| CliError::solver(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::solver(format!("rename to {}: {e}", path.display())))?;
    Ok(())
}

fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let m = DenseMatrix::new(v.len(), 1, v.to_vec()).map_err(CliError::from)?;
    let mut buf = Vec::new();
    write_csv(&m, &mut buf)?;
    atomic_write(path, &buf)
}

/// Binary state container: magic, tau, then three binary matrix sections
/// (matrix, measurements, solution) and the support with its signs.
fn save_state(path: &Path, a: &DenseMatrix, y: &[f64], state: &BpdnState) -> Result<(), CliError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(STATE_MAGIC);
    buf.extend_from_slice(&state.tau().to_le_bytes());
    // Homotopy parameter at rest.
    buf.extend_from_slice(&1.0f64.to_le_bytes());
    write_binary(a, &mut buf)?;
    let ym = DenseMatrix::new(1, y.len(), y.to_vec()).map_err(CliError::from)?;
    write_binary(&ym, &mut buf)?;
    let xm = DenseMatrix::new(1, state.x().len(), state.x().to_vec()).map_err(CliError::from)?;
    write_binary(&xm, &mut buf)?;
    buf.extend_from_slice(&(state.support().len() as u64).to_le_bytes());
    for (&j, &z) in state.support().iter().zip(state.active().signs()) {
        buf.extend_from_slice(&(j as u64).to_le_bytes());
        buf.extend_from_slice(&z.to_le_bytes());
    }
    atomic_write(path, &buf)
}

fn load_state(path: &Path) -> Result<(DenseMatrix, Vec<f64>, BpdnState), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut at = 0usize;
    let take = |at: &mut usize, len: usize| -> Result<&[u8], CliError> {
        if bytes.len() < *at + len {
            return Err(CliError::config("truncated state file"));
        }
        let s = &bytes[*at..*at + len];
        *at += len;
        Ok(s)
    };
    if take(&mut at, 8)? != STATE_MAGIC {
        return Err(CliError::config("not a solver state file"));
    }
    let tau = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let _eps = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let mut cursor = &bytes[at..];
    let before = cursor.len();
    let a = l1h::linalg::io::read_binary(&mut cursor)?;
    let y = l1h::linalg::io::read_binary(&mut cursor)?;
    let x = l1h::linalg::io::read_binary(&mut cursor)?;
    at += before - cursor.len();
    let k = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    // Support and signs are stored for inspection; the factorization is
    // rebuilt from the solution vector (exact zeros stay off support).
    for _ in 0..k {
        take(&mut at, 16)?;
    }
    let state = BpdnState::from_solution(&a, y.data(), tau, x.data().to_vec())
        .map_err(CliError::from)?;
    let report = bpdn_kkt(&a, y.data(), tau, state.x());
    if !report.pass {
        return Err(CliError::solver(
            "saved state fails its optimality check against the stored data",
        ));
    }
    Ok((a, y.data().to_vec(), state))
}

fn cmd_solve(which: SolveCmd) -> Result<ExitCode, CliError> {
    let (common, is_ds) = match which {
        SolveCmd::Bpdn(c) => (c, false),
        SolveCmd::Ds(c) => (c, true),
    };
    let a = read_matrix_file(&common.matrix)?;
    let y = read_vector(&common.rhs)?;
    if y.len() != a.rows() {
        return Err(CliError::config(format!(
            "rhs has {} entries for a {}-row matrix",
            y.len(),
            a.rows()
        )));
    }
    let tau = match common.tau {
        Some(t) => t,
        None => {
            if common.tau_ratio <= 0.0 {
                return Err(CliError::config("--tau-ratio must be positive"));
            }
            common.tau_ratio * norm_inf(&a.apply_t(&y))
        }
    };
    if is_ds {
        let state = solve_ds(&a, &y, tau)?;
        let report = ds_kkt(&a, &y, tau, state.x(), state.lambda());
        println!(
            "ds: tau {:.6e}, support {}, kkt pass {}",
            tau,
            state.primal_support().len(),
            report.pass
        );
        if let Some(out) = &common.out {
            write_vector(out, state.x())?;
        }
        if common.state_out.is_some() {
            return Err(CliError::config(
                "--state-out currently stores BPDN states only",
            ));
        }
    } else {
        let state = solve_bpdn(&a, &y, tau)?;
        let report = bpdn_kkt(&a, &y, tau, state.x());
        println!(
            "bpdn: tau {:.6e}, support {}, kkt pass {}",
            tau,
            state.support().len(),
            report.pass
        );
        if let Some(out) = &common.out {
            write_vector(out, state.x())?;
        }
        if let Some(state_out) = &common.state_out {
            save_state(state_out, &a, &y, &state)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_update(which: UpdateCmd) -> Result<ExitCode, CliError> {
    match which {
        UpdateCmd::DynamicX {
            state,
            new_rhs,
            out,
            state_out,
        } => {
            let (a, y_old, old) = load_state(&state)?;
            let y_new = read_vector(&new_rhs)?;
            let (next, trace) = update_bpdn_signal(&old, &a, &y_old, &y_new)?;
            println!(
                "dynamic-x: {} steps, {} products, support {} -> {}",
                trace.steps.len(),
                trace.gram_products,
                old.support().len(),
                next.support().len()
            );
            if let Some(out) = &out {
                write_vector(out, next.x())?;
            }
            if let Some(state_out) = &state_out {
                save_state(state_out, &a, &y_new, &next)?;
            }
        }
        UpdateCmd::DynamicSeq {
            state,
            new_row,
            new_value,
            remove_row,
            out,
            state_out,
        } => {
            let (a, y_old, old) = load_state(&state)?;
            match (new_row, new_value, remove_row) {
                (Some(row_path), Some(w), None) => {
                    let b = read_vector(&row_path)?;
                    let (next, trace) = bpdn_add_measurement(&old, &a, &y_old, &b, w)?;
                    println!(
                        "dynamic-seq: appended one row in {} steps, {} products",
                        trace.steps.len(),
                        trace.gram_products
                    );
                    let stacked = a
                        .vstack(&DenseMatrix::new(1, b.len(), b).map_err(CliError::from)?)
                        .map_err(CliError::from)?;
                    let mut ys = y_old.clone();
                    ys.push(w);
                    if let Some(out) = &out {
                        write_vector(out, next.x())?;
                    }
                    if let Some(state_out) = &state_out {
                        save_state(state_out, &stacked, &ys, &next)?;
                    }
                }
                (None, None, Some(row)) => {
                    let (next, trace) = bpdn_remove_measurement(&old, &a, &y_old, row)?;
                    println!(
                        "dynamic-seq: removed row {row} in {} steps, {} products",
                        trace.steps.len(),
                        trace.gram_products
                    );
                    let reduced = a.without_row(row).map_err(CliError::from)?;
                    let mut ys = y_old.clone();
                    ys.remove(row);
                    if let Some(out) = &out {
                        write_vector(out, next.x())?;
                    }
                    if let Some(state_out) = &state_out {
                        save_state(state_out, &reduced, &ys, &next)?;
                    }
                }
                _ => {
                    return Err(CliError::config(
                        "use either --new-row with --new-value, or --remove-row",
                    ))
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_decode(which: DecodeCmd) -> Result<ExitCode, CliError> {
    match which {
        DecodeCmd::Run {
            n,
            m,
            errors,
            block,
            seed,
        } => {
            let seed = resolve_seed(&seed)?;
            if m <= n {
                return Err(CliError::config("decoding needs m > n"));
            }
            if errors >= m {
                return Err(CliError::config("cannot corrupt every entry"));
            }
            if block == 0 {
                return Err(CliError::config("--block must be positive"));
            }
            let a = gaussian_matrix(m, n, seed);
            let mut rng = Rng::derive(seed, 1);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let (y, support) =
                corrupt_codeword(&a.apply(&x), CorruptionMode::ZeroK(errors), seed ^ 0xc0de);

            let m0 = (n + block).min(m);
            let head = DenseMatrix::from_fn(m0, n, |i, j| a.get(i, j));
            let (mut state, trace0) = decode_init(&head, &y[..m0])?;
            let mut steps = trace0.iterations;
            let mut at = m0;
            while at < m {
                let hi = (at + block).min(m);
                let b = DenseMatrix::from_fn(hi - at, n, |i, j| a.get(at + i, j));
                let (next, trace) = decode_add_or_fail(&state, &b, &y[at..hi])?;
                steps += trace;
                state = next;
                at = hi;
            }
            let err = state
                .x()
                .iter()
                .zip(&x)
                .fold(0.0f64, |mx, (p, q)| mx.max((p - q).abs()));
            println!(
                "decode: n {n}, m {m}, {} corrupted, block {block}: {} homotopy iterations, recovered {}, max message error {:.3e}",
                support.len(),
                steps,
                recovery_check(&state),
                err
            );
        }
        DecodeCmd::Robust {
            n,
            m,
            errors,
            noise,
            block,
            tau,
            seed,
        } => {
            let seed = resolve_seed(&seed)?;
            if m <= n {
                return Err(CliError::config("decoding needs m > n"));
            }
            let mut a = gaussian_matrix(m, n, seed);
            a.orthonormalize_columns().map_err(CliError::from)?;
            let mut rng = Rng::derive(seed, 2);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let (mut y, _) =
                corrupt_codeword(&a.apply(&x), CorruptionMode::ZeroK(errors), seed ^ 0xfeed);
            for v in y.iter_mut() {
                *v += rng.normal(0.0, noise);
            }
            let state = robust_init(&a, &y, tau)?;
            let sd = 1.0 / (m as f64).sqrt();
            let b = DenseMatrix::from_fn(block, n, |_, _| rng.normal(0.0, sd));
            let mut w = b.apply(&x);
            for v in w.iter_mut() {
                if rng.uniform() < 0.1 {
                    *v = 0.0;
                }
                *v += rng.normal(0.0, noise);
            }
            let (next, trace) = robust_add_measurements(&state, &b, &w)?;
            let decoded = decode_message(&next);
            let rel = {
                let diff: Vec<f64> = decoded.iter().zip(&x).map(|(p, q)| p - q).collect();
                norm2(&diff) / norm2(&x)
            };
            println!(
                "robust decode: n {n}, m {m}+{block}, tau {tau}: init support {}, update took {} steps (lucky breakdown {}), relative message error {:.3e}",
                state.support().len(),
                trace.steps.len(),
                trace.lucky_breakdown,
                rel
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn decode_add_or_fail(
    state: &l1h::decode::DecodeState,
    b: &DenseMatrix,
    w: &[f64],
) -> Result<(l1h::decode::DecodeState, usize), CliError> {
    let (next, trace) = l1h::decode::decode_add_measurements(state, b, w)?;
    Ok((next, trace.iterations))
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    let scale = Scale::parse(&args.scale)?;
    let seed = resolve_seed(&args.seed)?;
    let trials = args.trials.unwrap_or(match scale {
        Scale::Full => 500,
        Scale::Desk => 50,
    });
    let mut reports: Vec<ExperimentReport> = Vec::new();
    match args.table.as_str() {
        "tableI" | "table1" | "tablei" => {
            let lambdas = args.lambda.map(|l| vec![l]).unwrap_or(vec![0.5, 0.1, 0.05, 0.01]);
            for lambda in lambdas {
                let mut c = table_one_config(scale, lambda, trials, seed);
                c.jobs = args.jobs;
                reports.push(run_experiment(&c)?);
            }
        }
        "tableII" | "table2" | "tableii" => {
            let lambdas = args.lambda.map(|l| vec![l]).unwrap_or(vec![0.5, 0.1, 0.05, 0.01]);
            for lambda in lambdas {
                let mut c = table_two_config(scale, lambda, trials, seed);
                c.jobs = args.jobs;
                reports.push(run_experiment(&c)?);
            }
        }
        "tableIII" | "table3" | "tableiii" => {
            let blocks = args.block.map(|b| vec![b]).unwrap_or(vec![1, 2, 5, 10]);
            for block in blocks {
                let mut c = table_three_config(scale, block, trials, seed);
                c.jobs = args.jobs;
                reports.push(run_experiment(&c)?);
            }
        }
        other => {
            return Err(CliError::config(format!(
                "unknown table {other:?}: expected tableI, tableII or tableIII"
            )))
        }
    }

    for r in &reports {
        println!(
            "{} lambda={} block={}: warm nProdAtA {:.2} (steps {:.2}), cold {:.2} (steps {:.2}), all_ok {}",
            r.config.kind.name(),
            r.config.lambda,
            r.config.block,
            r.mean_warm_products,
            r.mean_warm_steps,
            r.mean_cold_products,
            r.mean_cold_steps,
            r.all_ok
        );
    }
    if let Some(path) = &args.report {
        let json = format!(
            "[\n{}\n]\n",
            reports
                .iter()
                .map(|r| r.to_json())
                .collect::<Vec<_>>()
                .join(",\n")
        );
        atomic_write(path, json.as_bytes())?;
    }
    if let Some(path) = &args.csv {
        let mut body = String::new();
        for (i, r) in reports.iter().enumerate() {
            let csv = r.to_csv();
            if i == 0 {
                body.push_str(&csv);
            } else {
                // Skip the repeated header.
                body.push_str(csv.split_once('\n').map(|x| x.1).unwrap_or(""));
            }
        }
        atomic_write(path, body.as_bytes())?;
    }
    if reports.iter().all(|r| r.all_ok) {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("bench: warm and cold arms disagreed in at least one trial");
        Ok(ExitCode::from(3))
    }
}

fn cmd_slices(
    image: PathBuf,
    wavelet: String,
    tau_ratio: f64,
    undersampling: f64,
    seed: Option<String>,
) -> Result<ExitCode, CliError> {
    let seed = resolve_seed(&seed)?;
    let bytes =
        fs::read(&image).map_err(|e| CliError::config(format!("{}: {e}", image.display())))?;
    let img = l1h::problems::read_pgm(&bytes)?;
    let family = match wavelet.as_str() {
        "haar" => l1h::problems::WaveletFamily::Haar,
        "daub8" => l1h::problems::WaveletFamily::Daub8,
        other => {
            return Err(CliError::config(format!(
                "unknown wavelet {other:?} (expected haar or daub8)"
            )))
        }
    };
    let report = l1h::bench::run_image_slices(&img, family, tau_ratio, undersampling, seed)?;
    println!(
        "slices: {} columns of {} rows, {} measurements each: warm nProdAtA {:.2} vs cold {:.2}, mean relative error {:.3e}",
        report.columns,
        report.rows,
        report.measurements,
        report.mean_warm_products,
        report.mean_cold_products,
        report.mean_relative_error
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest() -> Result<ExitCode, CliError> {
    let mut failures = 0usize;
    let mut check = |name: &str, pass: bool| {
        println!("{}: {}", name, if pass { "PASS" } else { "FAIL" });
        if !pass {
            failures += 1;
        }
    };

    // BPDN homotopy against the enumeration oracle.
    {
        let mut worst: f64 = 0.0;
        for seed in 0..25u64 {
            let a = gaussian_matrix(6, 8, 100 + seed);
            let mut rng = Rng::derive(200, seed);
            let y: Vec<f64> = (0..6).map(|_| rng.normal(0.0, 1.0)).collect();
            let tau = 0.2 * norm_inf(&a.apply_t(&y));
            let s = solve_bpdn(&a, &y, tau).map_err(CliError::from)?;
            let b = bpdn_brute(&a, &y, tau).map_err(CliError::from)?;
            worst = worst.max(
                s.x()
                    .iter()
                    .zip(&b)
                    .fold(0.0f64, |m, (p, q)| m.max((p - q).abs())),
            );
        }
        check("bpdn vs enumeration oracle (25 instances)", worst <= 1e-7);
    }
    // Dantzig selector against its oracle.
    {
        let mut worst: f64 = 0.0;
        for seed in 0..15u64 {
            let a = gaussian_matrix(7, 5, 300 + seed);
            let mut rng = Rng::derive(400, seed);
            let y: Vec<f64> = (0..7).map(|_| rng.normal(0.0, 1.0)).collect();
            let tau = 0.25 * norm_inf(&a.apply_t(&y));
            let s = solve_ds(&a, &y, tau).map_err(CliError::from)?;
            let (xb, _) = ds_brute(&a, &y, tau).map_err(CliError::from)?;
            worst = worst.max(
                s.x()
                    .iter()
                    .zip(&xb)
                    .fold(0.0f64, |m, (p, q)| m.max((p - q).abs())),
            );
        }
        check("dantzig vs enumeration oracle (15 instances)", worst <= 1e-7);
    }
    // Decoder against the subset-enumeration oracle.
    {
        let mut worst: f64 = 0.0;
        for seed in 0..15u64 {
            let a = gaussian_matrix(9, 3, 500 + seed);
            let mut rng = Rng::derive(600, seed);
            let x: Vec<f64> = (0..3).map(|_| rng.normal(0.0, 1.0)).collect();
            let mut y = a.apply(&x);
            y[(seed as usize) % 9] += 3.0;
            let (state, _) = decode_init(&a, &y).map_err(CliError::from)?;
            let b = l1_regression_brute(&a, &y).map_err(CliError::from)?;
            worst = worst.max(
                state
                    .x()
                    .iter()
                    .zip(&b)
                    .fold(0.0f64, |m, (p, q)| m.max((p - q).abs())),
            );
        }
        check("decode vs l1-regression oracle (15 instances)", worst <= 1e-7);
    }
    // Optimality certificates across mixed random instances.
    {
        let mut all = true;
        for seed in 0..25u64 {
            let a = gaussian_matrix(12, 20, 700 + seed);
            let mut rng = Rng::derive(800, seed);
            let y: Vec<f64> = (0..12).map(|_| rng.normal(0.0, 1.0)).collect();
            let tau = 0.15 * norm_inf(&a.apply_t(&y));
            let s = solve_bpdn(&a, &y, tau).map_err(CliError::from)?;
            all &= bpdn_kkt(&a, &y, tau, s.x()).pass;
        }
        check("optimality certificates (25 instances)", all);
    }
    // Wavelet orthonormality.
    {
        let mut rng = Rng::seed_from(3);
        let x: Vec<f64> = (0..128).map(|_| rng.normal(0.0, 1.0)).collect();
        let mut pass = true;
        for family in [
            l1h::problems::WaveletFamily::Haar,
            l1h::problems::WaveletFamily::Daub8,
        ] {
            let c = l1h::problems::wavelet_analysis(&x, family).map_err(CliError::from)?;
            let back = l1h::problems::wavelet_synthesis(&c, family).map_err(CliError::from)?;
            let err = x
                .iter()
                .zip(&back)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            pass &= err <= 1e-12 && (norm2(&c) - norm2(&x)).abs() <= 1e-12;
        }
        check("wavelet orthonormality and roundtrip", pass);
    }

    if failures == 0 {
        println!("selftest: all suites passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("selftest: {failures} suite(s) failed");
        Ok(ExitCode::from(3))
    }
}

// Sanity anchor for the state container layout.
#[allow(dead_code)]
const _: () = assert!(STATE_MAGIC.len() == BINARY_MAGIC.len());
