use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpke_core::error::Error;
use qpke_core::harness::{
    merge_reports, run_apqc_suite, run_attack_suite, run_auth_suite, run_global_mixture_check,
    run_lemma_property_suite, run_pqc_perfect_security, run_qpke_roundtrip, run_register_distance,
    ApqcSetParams, AuthParams, LemmaCounts, SecurityReport, DEFAULT_TRIALS,
};
use serde::Serialize;

/// Simulation harness for quantum public-key encryption and authentication.
#[derive(Debug, Parser)]
#[command(name = "qpke-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for every random choice; required so that runs are replayable.
    #[arg(long)]
    seed: u64,
    /// JSON report path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Replaces the 1e-9 tolerance of exact checks.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Refuse to simulate registers wider than this many qubits.
    #[arg(long, default_value_t = 10)]
    max_qubits: usize,
    /// Directory for CSV copies of the report tables.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key-averaged exact pad equals I/2^n.
    PqcVerify {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Search a small-bias set and run the approximate-pad checks.
    ApqcSearch {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Set size; 2^(n-1) when omitted.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Round trips through the public-key scheme.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Encrypt and decrypt random messages with issued public keys.
    QpkeRoundtrip {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Bit-cipher register distances; adds the full mixture check for n = 2.
    QpkeSecurity {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        n: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Many-copy trapdoor recovery statistics.
    AttackStats {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Authenticate and verify random messages through the public-key layer.
    AuthRoundtrip {
        #[command(flatten)]
        auth: AuthFlags,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Random Pauli tampering against the family's epsilon.
    AuthTamper {
        #[command(flatten)]
        auth: AuthFlags,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Random-case distance inequalities.
    LemmaSuite {
        /// Cases per property; the built-in counts when omitted.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Combine report files into one document.
    ReportMerge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct AuthFlags {
    /// Logical qubits per message.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Syndrome bits; several values are compared for epsilon.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    t: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    family_size: usize,
    /// Register size of the public keys.
    #[arg(long, default_value_t = 2)]
    key_n: usize,
    /// Codes drawn per family search.
    #[arg(long, default_value_t = 600)]
    budget: usize,
}

impl AuthFlags {
    fn params(&self, tamper_trials: usize, completeness_trials: usize) -> AuthParams {
        AuthParams {
            n_log: self.n,
            t_values: self.t.clone(),
            family_size: self.family_size,
            key_n: self.key_n,
            tamper_trials,
            completeness_trials,
            search_budget: self.budget,
        }
    }

    fn widest(&self) -> usize {
        self.n + self.t.iter().copied().max().unwrap_or(0)
    }
}

enum Failure {
    Usage(String),
    Assertion(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } | Error::InvalidParameter(_) | Error::Io(_) | Error::Json(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn guard(what: &str, qubits: usize, cap: usize) -> Result<(), Failure> {
    if qubits > cap {
        return Err(Failure::Usage(format!(
            "{what} needs {qubits} qubits; --max-qubits is {cap}"
        )));
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)? + "\n";
    match output {
        Some(path) => std::fs::write(path, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_csv(report: &SecurityReport, dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    for (name, table) in &report.tables {
        let file = format!("{}-{}.csv", report.experiment_id, name.replace('/', "-"));
        std::fs::write(dir.join(file), table.to_csv()).map_err(Error::from)?;
    }
    Ok(())
}

fn finish(report: SecurityReport, common: &Common) -> Result<(), Failure> {
    let report = match common.tolerance {
        Some(tol) if tol.is_finite() && tol >= 0.0 => report.with_exact_tolerance(tol),
        Some(tol) => {
            return Err(Failure::Usage(format!(
                "tolerance {tol} must be finite and non-negative"
            )))
        }
        None => report,
    };
    write_json(&report, common.output.as_deref())?;
    if let Some(dir) = &common.csv {
        write_csv(&report, dir)?;
    }
    for c in report.failed_checks() {
        eprintln!(
            "FAIL {}: measured {} vs {:?} {} (tolerance {})",
            c.name, c.measured, c.comparison, c.expected, c.tolerance
        );
    }
    if report.pass {
        eprintln!(
            "{}: all {} checks pass",
            report.experiment_id,
            report.checks.len()
        );
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "{} failed",
            report.experiment_id
        )))
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::PqcVerify { n, trials, common } => {
            guard(
                "exact pad verification",
                n.iter().copied().max().unwrap_or(0),
                common.max_qubits,
            )?;
            finish(run_pqc_perfect_security(&n, trials, common.seed)?, &common)
        }
        Command::ApqcSearch {
            n,
            size,
            delta,
            trials,
            common,
        } => {
            guard("approximate pad suite", n, common.max_qubits)?;
            let params = ApqcSetParams {
                size,
                delta,
                roundtrip_trials: trials,
                ..ApqcSetParams::default()
            };
            finish(run_apqc_suite(n, &params, common.seed)?, &common)
        }
        Command::QpkeRoundtrip { n, trials, common } => {
            guard(
                "round trip register",
                n.iter().copied().max().unwrap_or(0),
                common.max_qubits,
            )?;
            finish(run_qpke_roundtrip(&n, trials, common.seed)?, &common)
        }
        Command::QpkeSecurity { n, common } => {
            guard(
                "register distance",
                n.iter().copied().max().unwrap_or(0),
                common.max_qubits,
            )?;
            let started = std::time::Instant::now();
            let mut report = run_register_distance(&n)?;
            if n.contains(&2) {
                guard("full ciphertext mixture", 10, common.max_qubits)?;
                report.absorb("global", run_global_mixture_check(common.seed)?);
                report.param("seed", common.seed);
                report = report.finish(started);
            }
            finish(report, &common)
        }
        Command::AttackStats { n, trials, common } => {
            guard("public-key register", n, common.max_qubits)?;
            finish(run_attack_suite(n, trials, common.seed)?, &common)
        }
        Command::AuthRoundtrip {
            auth,
            trials,
            common,
        } => {
            guard("authentication code", auth.widest(), common.max_qubits)?;
            finish(
                run_auth_suite(&auth.params(0, trials), common.seed)?,
                &common,
            )
        }
        Command::AuthTamper {
            auth,
            trials,
            common,
        } => {
            guard("authentication code", auth.widest(), common.max_qubits)?;
            finish(
                run_auth_suite(&auth.params(trials, 20), common.seed)?,
                &common,
            )
        }
        Command::LemmaSuite { trials, common } => {
            let counts = match trials {
                Some(k) => LemmaCounts {
                    factor_two: k,
                    convexity: k,
                    tensor: k,
                    composition: k,
                    triangle: k,
                    unitary: k,
                },
                None => LemmaCounts::default(),
            };
            finish(run_lemma_property_suite(counts, common.seed)?, &common)
        }
        Command::ReportMerge { inputs, output } => {
            let mut reports = Vec::with_capacity(inputs.len());
            for path in &inputs {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                let report: SecurityReport = serde_json::from_str(&text)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                reports.push(report);
            }
            let merged = merge_reports(reports);
            write_json(&merged, output.as_deref())?;
            if merged.pass {
                Ok(())
            } else {
                Err(Failure::Assertion(format!(
                    "failed checks: {:?}",
                    merged.failed
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
