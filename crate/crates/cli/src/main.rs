//! Pipeline driver. Subcommands mirror the experiment: `prepare` builds the
//! WWbar state from its gate sequence, `filter` runs the seeded filtration
//! ensemble, `tomo` simulates detection-setting readouts and inverts them,
//! `reconstruct` rebuilds the joint state from two-party marginals,
//! `fidelity` compares two artifacts, and `report` tabulates a directory of
//! artifacts.
//!
//! Exit codes: 0 success, 2 unreadable or malformed file, 3 structurally
//! valid input of the wrong kind or size, 4 invalid configuration, 5
//! marginal data inconsistent beyond tolerance. Identical invocations
//! produce byte-identical files and stdout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wwbar_cli::statefile::{FileError, StateFile, StateKind};
use wwbar_core::circuit::{run_with_checkpoints, wwbar_circuit, wwbar_nmr_variant};
use wwbar_core::filtration::{run_ensemble, EnsembleStats};
use wwbar_core::marginals::{reconstruct_from_marginals, ReconstructOptions};
use wwbar_core::metrics;
use wwbar_core::rng::stream;
use wwbar_core::state::StateVector;
use wwbar_core::tomography::{
    complete_settings, depolarize, detection_settings_2q, detection_settings_3q,
    reconstruct_linear_inversion, simulate_readout, DetectionSetting, TwoQubitScheme,
};
use wwbar_core::{DensityMatrix, Error};

#[derive(Parser)]
#[command(name = "wwbar", version, about = "WWbar preparation, filtration, tomography, and marginal reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the WWbar state and write it as a pure state file.
    Prepare {
        /// Gate sequence to run: `gate` or `nmr`.
        #[arg(long, default_value = "gate")]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run seeded filtration attempts and write the summary statistics CSV.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// Simulate detection-setting readouts and reconstruct the density
    /// matrix by linear inversion.
    Tomo {
        #[arg(long = "in")]
        input: PathBuf,
        /// Detection scheme: `3q`, `2q-ab`, or `2q-bc`.
        #[arg(long, default_value = "3q")]
        scheme: String,
        /// Depolarizing weight applied to the state before readout.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        noise_p: f64,
        /// Gaussian noise level on each observation quadrature.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Raw observation dump; defaults to `<out>` with a `records.json`
        /// extension.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Rebuild a three-qubit pure state from its AB and BC marginals.
    Reconstruct {
        #[arg(long)]
        rho_ab: PathBuf,
        #[arg(long)]
        rho_bc: PathBuf,
        /// Largest tolerated disagreement between the shared single-qubit
        /// reductions of the two marginals.
        #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the fidelity between two state files to six decimals.
    Fidelity {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Tabulate every state artifact in a directory against the prepared
    /// reference.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Optional file copy of the table; `.csv` extension selects CSV,
        /// anything else markdown.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn file(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn wrong_kind(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }

    fn config(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }

    fn inconsistent(message: impl Into<String>) -> Self {
        CliError { code: 5, message: message.into() }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::file(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InconsistentMarginals { .. } | Error::SpectraMismatch { .. } => {
                CliError::inconsistent(e.to_string())
            }
            other => CliError::config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Prepare { variant, out } => cmd_prepare(&variant, &out),
        Command::Filter { input, trials, seed, out_csv } => {
            cmd_filter(&input, trials, seed, &out_csv)
        }
        Command::Tomo { input, scheme, noise_p, sigma, seed, out, records } => {
            cmd_tomo(&input, &scheme, noise_p, sigma, seed, &out, records.as_deref())
        }
        Command::Reconstruct { rho_ab, rho_bc, tolerance, out } => {
            cmd_reconstruct(&rho_ab, &rho_bc, tolerance, &out)
        }
        Command::Fidelity { a, b } => cmd_fidelity(&a, &b),
        Command::Report { dir, out } => cmd_report(&dir, out.as_deref()),
    }
}

/// Exact textual form that parses back to the same f64; scientific notation
/// keeps near-zero diagnostics readable.
fn format_float(x: f64) -> String {
    format!("{x:e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::file(format!("cannot write {}: {e}", path.display())))
}

fn cmd_prepare(variant: &str, out: &Path) -> Result<(), CliError> {
    let program = match variant {
        "gate" => wwbar_circuit(),
        "nmr" => wwbar_nmr_variant(),
        other => {
            return Err(CliError::config(format!(
                "unknown variant `{other}` (expected gate or nmr)"
            )))
        }
    };
    let initial = StateVector::basis(3, 0).expect("three-qubit basis state");
    let run = run_with_checkpoints(&program, &initial)?;
    let max_dev = run.deviations.iter().cloned().fold(0.0_f64, f64::max);
    let mut file = StateFile::from_pure(&run.final_state);
    file.metadata.insert("stage".into(), "prepare".into());
    file.metadata.insert("variant".into(), variant.into());
    file.metadata.insert("checkpoints".into(), run.deviations.len().to_string());
    file.metadata.insert("max_checkpoint_deviation".into(), format_float(max_dev));
    file.save(out)?;
    println!(
        "[prepare] variant {variant}: {} checkpoints, max deviation {max_dev:.3e}",
        run.deviations.len()
    );
    println!("[prepare] wrote {}", out.display());
    Ok(())
}

fn cmd_filter(input: &Path, trials: u64, seed: u64, out_csv: &Path) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::config("trials must be positive"));
    }
    let file = StateFile::load(input)?;
    if file.kind != StateKind::Pure {
        return Err(CliError::wrong_kind("filtration takes a pure state input"));
    }
    let state = file.to_pure()?;
    if state.n_qubits() != 3 {
        return Err(CliError::wrong_kind(format!(
            "filtration is defined on 3 qubits, got {}",
            state.n_qubits()
        )));
    }
    let stats = run_ensemble(&state, trials, seed)?;
    write_text(
        out_csv,
        &format!("{}\n{}\n", EnsembleStats::csv_header(), stats.csv_row()),
    )?;
    println!(
        "[filter] retained {}/{} (fraction {}), mean fidelity to GHZ {:.6}",
        stats.retained, stats.trials, stats.retained_fraction, stats.mean_fidelity_to_ghz
    );
    println!("[filter] wrote {}", out_csv.display());
    Ok(())
}

enum Scheme {
    Full,
    Pair(TwoQubitScheme),
}

fn parse_scheme(text: &str) -> Result<Scheme, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "3q" => Ok(Scheme::Full),
        "2q-ab" => Ok(Scheme::Pair(TwoQubitScheme::AB)),
        "2q-bc" => Ok(Scheme::Pair(TwoQubitScheme::BC)),
        other => Err(CliError::config(format!(
            "unknown scheme `{other}` (expected 3q, 2q-ab, or 2q-bc)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_tomo(
    input: &Path,
    scheme_text: &str,
    noise_p: f64,
    sigma: f64,
    seed: u64,
    out: &Path,
    records_path: Option<&Path>,
) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&noise_p) {
        return Err(CliError::config("noise-p must lie in [0, 1]"));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(CliError::config("sigma must be finite and nonnegative"));
    }
    let scheme = parse_scheme(scheme_text)?;
    let file = StateFile::load(input)?;
    let loaded = file.to_density()?;
    let rho = match &scheme {
        Scheme::Full => {
            if loaded.n_qubits() != 3 {
                return Err(CliError::wrong_kind(format!(
                    "scheme 3q needs a 3-qubit state, got {} qubits",
                    loaded.n_qubits()
                )));
            }
            loaded
        }
        Scheme::Pair(pair) => match loaded.n_qubits() {
            2 => loaded,
            3 => {
                let keep: &[usize] = match pair {
                    TwoQubitScheme::AB => &[1, 2],
                    TwoQubitScheme::BC => &[2, 3],
                };
                loaded.partial_trace(keep)?
            }
            n => {
                return Err(CliError::wrong_kind(format!(
                    "scheme {scheme_text} needs a 2- or 3-qubit state, got {n} qubits"
                )))
            }
        },
    };
    let rho = depolarize(&rho, noise_p)?;
    let base: Vec<DetectionSetting> = match &scheme {
        Scheme::Full => detection_settings_3q(),
        Scheme::Pair(pair) => detection_settings_2q(*pair),
    };
    let (problem, added) = complete_settings(rho.n_qubits(), &base)?;
    let mut rng = stream(seed, "tomography-readout", 0);
    let records: Vec<_> = problem
        .settings()
        .iter()
        .map(|setting| simulate_readout(&rho, setting, sigma, &mut rng))
        .collect::<Result<_, _>>()?;
    let result = reconstruct_linear_inversion(&problem, &records)?;

    let records_file = records_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("records.json"));
    let mut records_text =
        serde_json::to_string_pretty(&records).map_err(|e| CliError::file(e.to_string()))?;
    records_text.push('\n');
    write_text(&records_file, &records_text)?;

    let scheme_label = scheme_text.to_ascii_lowercase();
    let mut out_file = StateFile::from_density(&result.rho);
    out_file.metadata.insert("stage".into(), "tomo".into());
    out_file.metadata.insert("scheme".into(), scheme_label.clone());
    out_file.metadata.insert("seed".into(), seed.to_string());
    out_file.metadata.insert("sigma".into(), format_float(sigma));
    out_file.metadata.insert("noise_p".into(), format_float(noise_p));
    out_file.metadata.insert("rank".into(), result.rank.to_string());
    out_file.metadata.insert("residual".into(), format_float(result.residual));
    out_file.metadata.insert("projected".into(), result.projected.to_string());
    out_file.metadata.insert(
        "augmented".into(),
        if added.is_empty() { "none".into() } else { added.join("+") },
    );
    out_file.save(out)?;

    println!(
        "[tomo] scheme {scheme_label}: rank {} of {}, residual {:.3e}",
        result.rank,
        problem.n_parameters(),
        result.residual
    );
    if !added.is_empty() {
        println!("[tomo] augmented settings: {}", added.join(" "));
    }
    println!("[tomo] wrote {} and {}", out.display(), records_file.display());
    Ok(())
}

fn load_marginal(path: &Path, name: &str) -> Result<DensityMatrix, CliError> {
    let file = StateFile::load(path)?;
    if file.kind != StateKind::Density || file.n_qubits != 2 {
        return Err(CliError::wrong_kind(format!(
            "{name} must be a 2-qubit density state file"
        )));
    }
    Ok(file.to_density()?)
}

fn cmd_reconstruct(
    rho_ab_path: &Path,
    rho_bc_path: &Path,
    tolerance: f64,
    out: &Path,
) -> Result<(), CliError> {
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(CliError::config("tolerance must be finite and positive"));
    }
    let rho_ab = load_marginal(rho_ab_path, "rho-ab")?;
    let rho_bc = load_marginal(rho_bc_path, "rho-bc")?;
    let options = ReconstructOptions {
        consistency_tol: tolerance,
        spectra_tol: tolerance.max(1e-5),
    };
    let result = reconstruct_from_marginals(&rho_ab, &rho_bc, options)?;
    let mut file = StateFile::from_pure(&result.state);
    file.metadata.insert("stage".into(), "reconstruct".into());
    file.metadata.insert("residual".into(), format_float(result.residual));
    file.metadata.insert("unique".into(), result.unique.to_string());
    file.metadata.insert(
        "consistency_deviation".into(),
        format_float(result.consistency_deviation),
    );
    file.metadata.insert("tolerance".into(), format_float(tolerance));
    file.save(out)?;
    println!(
        "[reconstruct] consistency deviation {:.3e}, residual {:.3e}, unique {}",
        result.consistency_deviation, result.residual, result.unique
    );
    println!("[reconstruct] wrote {}", out.display());
    Ok(())
}

fn cmd_fidelity(a: &Path, b: &Path) -> Result<(), CliError> {
    let rho_a = StateFile::load(a)?.to_density()?;
    let rho_b = StateFile::load(b)?.to_density()?;
    if rho_a.n_qubits() != rho_b.n_qubits() {
        return Err(CliError::wrong_kind(format!(
            "qubit counts differ: {} vs {}",
            rho_a.n_qubits(),
            rho_b.n_qubits()
        )));
    }
    let report = metrics::fidelity(&rho_a, &rho_b)?;
    println!("{:.6}", report.value);
    Ok(())
}

struct ReportRow {
    stage: String,
    file: String,
    fidelity: String,
    residual: String,
    rank: String,
}

/// Fidelity of an artifact against the prepared reference: direct for
/// matching sizes, against the reduced reference for 2-qubit artifacts that
/// name their pair.
fn reference_fidelity(
    artifact: &StateFile,
    reference: Option<&DensityMatrix>,
) -> Result<Option<f64>, CliError> {
    let Some(reference) = reference else {
        return Ok(None);
    };
    let rho = artifact.to_density()?;
    if rho.n_qubits() == reference.n_qubits() {
        return Ok(Some(metrics::fidelity(&rho, reference)?.value));
    }
    if rho.n_qubits() == 2 && reference.n_qubits() == 3 {
        let keep: &[usize] = match artifact.metadata.get("scheme").map(String::as_str) {
            Some("2q-ab") => &[1, 2],
            Some("2q-bc") => &[2, 3],
            _ => return Ok(None),
        };
        let reduced = reference.partial_trace(keep)?;
        return Ok(Some(metrics::fidelity(&rho, &reduced)?.value));
    }
    Ok(None)
}

fn cmd_report(dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let mut names: Vec<String> = Vec::new();
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::file(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::file(e.to_string()))?;
        if entry.path().extension().is_some_and(|ext| ext == "json") {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();

    // Artifacts that fail to parse as state files (observation dumps) are
    // skipped rather than rejected.
    let mut artifacts: Vec<(String, StateFile)> = Vec::new();
    for name in names {
        if let Ok(file) = StateFile::load(&dir.join(&name)) {
            artifacts.push((name, file));
        }
    }

    let reference = artifacts
        .iter()
        .find(|(_, f)| f.metadata.get("stage").map(String::as_str) == Some("prepare"))
        .map(|(_, f)| f.to_density())
        .transpose()?;

    let mut rows = Vec::new();
    let mut stage_fidelity: BTreeMap<String, f64> = BTreeMap::new();
    for (name, file) in &artifacts {
        let stage = file.metadata.get("stage").cloned().unwrap_or_else(|| "-".into());
        let fidelity = reference_fidelity(file, reference.as_ref())?;
        if let Some(value) = fidelity {
            let key = match (stage.as_str(), file.metadata.get("scheme").map(String::as_str)) {
                ("tomo", Some("3q")) => Some("tomo-3q"),
                ("reconstruct", _) => Some("reconstruct"),
                _ => None,
            };
            if let Some(key) = key {
                stage_fidelity.entry(key.into()).or_insert(value);
            }
        }
        rows.push(ReportRow {
            stage,
            file: name.clone(),
            fidelity: fidelity.map_or_else(|| "-".into(), |v| format!("{v:.6}")),
            residual: file.metadata.get("residual").cloned().unwrap_or_else(|| "-".into()),
            rank: file.metadata.get("rank").cloned().unwrap_or_else(|| "-".into()),
        });
    }

    let mut table = String::from("| stage | file | fidelity | residual | rank |\n");
    table.push_str("|---|---|---|---|---|\n");
    let mut csv = String::from("stage,file,fidelity,residual,rank\n");
    for row in &rows {
        table.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            row.stage, row.file, row.fidelity, row.residual, row.rank
        ));
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.stage, row.file, row.fidelity, row.residual, row.rank
        ));
    }

    let mut summary = String::new();
    if let (Some(tomo), Some(recon)) =
        (stage_fidelity.get("tomo-3q"), stage_fidelity.get("reconstruct"))
    {
        let delta = (tomo - recon).abs();
        summary.push_str(&format!(
            "pipeline fidelity delta |tomo - reconstruct| = {delta:.6} (within 0.05: {})\n",
            delta <= 0.05
        ));
    }

    print!("{table}");
    if !summary.is_empty() {
        print!("{summary}");
    }
    if let Some(path) = out {
        let is_csv = path.extension().is_some_and(|ext| ext == "csv");
        let mut text = if is_csv { csv } else { table };
        if !is_csv && !summary.is_empty() {
            text.push('\n');
            text.push_str(&summary);
        }
        write_text(path, &text)?;
        println!("[report] wrote {}", path.display());
    }
    Ok(())
}
