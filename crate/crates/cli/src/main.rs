//! `walshlab`: command-line front end for the lacunary Walsh series laboratory.
//!
//! Exit codes: 0 success, 1 a `verify`/`project-verify` check failed,
//! 2 bad arguments, 3 I/O failure.

mod emit;
mod input;
mod reports;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use walshlab::khintchine::{
    equidistribution_tables, find_local_n, majorization_constant, scan_constants, scan_samples,
    Direction, SearchMode,
};
use walshlab::norms::{norm, NormSpec, EXP_NORMALIZATION_NOTE};
use walshlab::projection::{
    basis_constant_estimate, operator_norm_estimate, verify_averaging_identity, OperatorMatrix,
};
use walshlab::walsh::{l2_norm, min_order, synthesize, theta_matrix, validate_lacunary, walsh};
use walshlab::DyadicSet;

use reports::*;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
}

impl From<walshlab::Error> for Failure {
    fn from(e: walshlab::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Search {
    Random,
    Ascent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MajorizeDirection {
    WalshByRademacher,
    RademacherByWalsh,
}

#[derive(Parser)]
#[command(name = "walshlab", version, about = "Lacunary Walsh series laboratory")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell values of Σ a_k w_{n_k}.
    WalshEval {
        #[arg(long)]
        indices: String,
        /// Defaults to all ones.
        #[arg(long)]
        coeffs: Option<String>,
        /// Defaults to the smallest order that resolves every index.
        #[arg(long)]
        order: Option<u32>,
    },
    /// The sign matrix θ_{j,k} = w_k(I^n_j).
    Theta {
        #[arg(long)]
        order: u32,
    },
    /// Norm of Σ a_k w_{n_k} next to its ℓ² coefficient norm.
    Norm {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        indices: String,
        #[arg(long)]
        coeffs: String,
        #[arg(long)]
        order: Option<u32>,
    },
    /// Empirical Khintchine constants over sampled lacunary sequences.
    KhintchineScan {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        q: f64,
        #[arg(long = "M", visible_alias = "m", default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Search::Random)]
        search: Search,
        /// Also emit every (sample_index, ratio) pair.
        #[arg(long)]
        per_sample: bool,
    },
    /// Exact identity checks; exit code 1 when a check fails.
    Verify {
        #[command(subcommand)]
        check: VerifyCheck,
    },
    /// Heuristic search for the local threshold N(E, q).
    LocalFindN {
        #[arg(long)]
        set: String,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        spec: String,
        #[arg(long = "M", visible_alias = "m", default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Required band [floor, 1/floor] for the local ratio.
        #[arg(long, default_value_t = 0.5)]
        floor: f64,
    },
    /// Averaging identity for Q_n plus sampled operator norms.
    ProjectVerify {
        #[arg(long)]
        order: u32,
        #[arg(long)]
        selected: String,
        /// row:column:coeff triples added to Q_n.
        #[arg(long)]
        perturb: Option<String>,
        #[arg(long, default_value = "lp:2")]
        spec: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also estimate the basis constant of the selected Walsh functions.
        #[arg(long)]
        basis_constant: bool,
    },
    /// Distributional majorization constant between W = Σ a_k w_{n_k} and R = Σ a_k r_k.
    Majorize {
        #[arg(long)]
        indices: String,
        #[arg(long)]
        coeffs: String,
        /// Candidate constants, all > 1. Defaults to 1.1, 1.2, …, 4.0.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value_t = MajorizeDirection::WalshByRademacher)]
        direction: MajorizeDirection,
    },
}

#[derive(Subcommand)]
enum VerifyCheck {
    /// Σ a_k w_{n_k} and Σ a_k r_k have equal distributions (2-lacunary indices).
    Equidistribution {
        #[arg(long)]
        indices: String,
        #[arg(long)]
        coeffs: String,
    },
    /// θ = θᵀ and θθᵀ = 2^n I.
    Theta {
        #[arg(long)]
        order: u32,
    },
    /// w_i w_j = w_{i⊕j} for all i, j < 2^order.
    Xor {
        #[arg(long, default_value_t = 8)]
        order: u32,
    },
    /// P_n = 2^{-n} Σ_j T_j Q_n T_j.
    Averaging {
        /// Required unless --matrix is given.
        #[arg(long)]
        order: Option<u32>,
        #[arg(long)]
        selected: String,
        #[arg(long)]
        perturb: Option<String>,
        /// Q_n as operator JSON {"n", "basis", "entries"}.
        #[arg(long, conflicts_with = "perturb")]
        matrix: Option<PathBuf>,
    },
}

struct Output {
    bytes: Vec<u8>,
    passed: bool,
}

/// Top-level scalars as one CSV row; nested values are written as JSON.
fn flat_csv<T: Serialize>(report: &T) -> io::Result<Vec<u8>> {
    let value = serde_json::to_value(report).map_err(io::Error::other)?;
    let Value::Object(map) = value else {
        return Err(io::Error::other("report is not an object"));
    };
    let header: Vec<&str> = map.keys().map(String::as_str).collect();
    let mut row = Vec::with_capacity(map.len());
    for v in map.values() {
        row.push(match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_f64() => emit::format_f64(n.as_f64().unwrap_or(f64::NAN)),
            other => {
                let mut s = String::from_utf8(emit::json(other)?).map_err(io::Error::other)?;
                s.pop();
                s
            }
        });
    }
    emit::csv(&header, &[row])
}

fn render<T: Serialize>(report: &T, format: Format) -> Result<Vec<u8>, Failure> {
    let bytes = match format {
        Format::Json => emit::json(report),
        Format::Csv => flat_csv(report),
    };
    bytes.map_err(|e| Failure::Io(e.to_string()))
}

fn ok<T: Serialize>(report: &T, format: Format) -> Result<Output, Failure> {
    Ok(Output {
        bytes: render(report, format)?,
        passed: true,
    })
}

fn checked<T: Serialize>(report: &T, format: Format, status: Status) -> Result<Output, Failure> {
    Ok(Output {
        bytes: render(report, format)?,
        passed: status.passed(),
    })
}

fn exp_note(spec: &NormSpec) -> Option<String> {
    matches!(spec.base(), NormSpec::OrliczExp(_)).then(|| EXP_NORMALIZATION_NOTE.to_string())
}

fn coeffs_for(raw: Option<&str>, count: usize) -> Result<Vec<f64>, Failure> {
    let coeffs = match raw {
        Some(raw) => input::list(raw, "coeffs")?,
        None => vec![1.0; count],
    };
    if coeffs.len() != count {
        return Err(Failure::Usage(format!(
            "{} coefficients for {count} indices",
            coeffs.len()
        )));
    }
    Ok(coeffs)
}

fn resolve_order(indices: &[u64], order: Option<u32>) -> Result<u32, Failure> {
    let needed = min_order(indices);
    input::check_order(needed)?;
    let order = order.unwrap_or(needed);
    input::check_order(order)?;
    Ok(order)
}

fn run(cli: Cli) -> Result<Output, Failure> {
    let format = cli.format;
    match cli.command {
        Command::WalshEval {
            indices,
            coeffs,
            order,
        } => {
            let indices: Vec<u64> = input::list(&indices, "indices")?;
            let coeffs = coeffs_for(coeffs.as_deref(), indices.len())?;
            let order = resolve_order(&indices, order)?;
            let f = synthesize(&coeffs, &indices, order)?;
            let report = WalshEvalReport {
                order,
                indices,
                coeffs,
                values: f.into_values(),
            };
            if format == Format::Csv {
                let rows: Vec<Vec<String>> = report
                    .values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| vec![j.to_string(), emit::format_f64(*v)])
                    .collect();
                let bytes =
                    emit::csv(&["cell", "value"], &rows).map_err(|e| Failure::Io(e.to_string()))?;
                return Ok(Output {
                    bytes,
                    passed: true,
                });
            }
            ok(&report, format)
        }
        Command::Theta { order } => {
            input::check_order(order)?;
            let theta = theta_matrix(order)?;
            let report = ThetaReport {
                order,
                entries: theta.to_rows(),
                symmetric: theta.is_symmetric(),
                orthogonal: theta.is_orthogonal(),
            };
            ok(&report, format)
        }
        Command::Norm {
            spec,
            indices,
            coeffs,
            order,
        } => {
            let spec = input::spec(&spec)?;
            let indices: Vec<u64> = input::list(&indices, "indices")?;
            let coeffs = coeffs_for(Some(&coeffs), indices.len())?;
            let order = resolve_order(&indices, order)?;
            let f = synthesize(&coeffs, &indices, order)?;
            let value = norm(&f, &spec)?;
            let l2 = l2_norm(&coeffs);
            let report = NormReport {
                note: exp_note(&spec),
                spec,
                indices,
                coeffs,
                order,
                norm: value,
                l2,
                ratio: value / l2,
            };
            ok(&report, format)
        }
        Command::KhintchineScan {
            spec,
            q,
            m,
            samples,
            seed,
            search,
            per_sample,
        } => {
            let spec = input::spec(&spec)?;
            let mode = match search {
                Search::Random => SearchMode::Random,
                Search::Ascent => SearchMode::Ascent,
            };
            let report = scan_constants(&spec, q, m, samples, seed, mode)?;
            let records = if per_sample {
                Some(scan_samples(&spec, q, m, samples, seed)?)
            } else {
                None
            };
            match (format, records) {
                (Format::Csv, Some(records)) => {
                    let rows: Vec<Vec<String>> = records
                        .iter()
                        .map(|r| vec![r.sample_index.to_string(), emit::format_f64(r.ratio)])
                        .collect();
                    let bytes = emit::csv(&["sample_index", "ratio"], &rows)
                        .map_err(|e| Failure::Io(e.to_string()))?;
                    Ok(Output {
                        bytes,
                        passed: true,
                    })
                }
                (_, records) => ok(
                    &ScanOutput {
                        report,
                        per_sample: records,
                    },
                    format,
                ),
            }
        }
        Command::Verify { check } => verify(check, format),
        Command::LocalFindN {
            set,
            q,
            spec,
            m,
            samples,
            seed,
            floor,
        } => {
            let set: DyadicSet = set
                .parse()
                .map_err(|e| Failure::Usage(format!("bad --set: {e}")))?;
            input::check_order(set.order())?;
            let spec = input::spec(&spec)?;
            let report = find_local_n(&set, q, &spec, m, samples, seed, floor)?;
            ok(&report, format)
        }
        Command::ProjectVerify {
            order,
            selected,
            perturb,
            spec,
            samples,
            seed,
            basis_constant,
        } => {
            input::check_order(order)?;
            let selected: Vec<u64> = input::list(&selected, "selected")?;
            let perturbation = match perturb {
                Some(raw) => input::perturbations(&raw)?,
                None => Vec::new(),
            };
            let spec = input::spec(&spec)?;
            let q = OperatorMatrix::build_qn(order, &selected, &perturbation)?;
            let p = OperatorMatrix::projection(order, &selected)?;
            let identity = verify_averaging_identity(order, &selected, &q)?;
            let basis_constant = if basis_constant {
                Some(basis_constant_estimate(&selected, &spec, samples, seed)?)
            } else {
                None
            };
            let mut note =
                String::from("operator norms are sampled lower bounds, not computed norms");
            if let Some(extra) = exp_note(&spec) {
                note.push_str("; ");
                note.push_str(&extra);
            }
            let status = Status::from_bool(identity.holds);
            let report = ProjectReport {
                order,
                p_norm_lower_bound: operator_norm_estimate(&p, &spec, samples, seed)?,
                q_norm_lower_bound: operator_norm_estimate(&q, &spec, samples, seed)?,
                selected,
                perturbation,
                spec,
                samples,
                seed,
                max_residual: identity.residual,
                identity,
                status,
                basis_constant,
                note,
            };
            checked(&report, format, status)
        }
        Command::Majorize {
            indices,
            coeffs,
            grid,
            direction,
        } => {
            let indices: Vec<u64> = input::list(&indices, "indices")?;
            resolve_order(&indices, None)?;
            let coeffs = coeffs_for(Some(&coeffs), indices.len())?;
            let grid: Vec<f64> = match grid {
                Some(raw) => input::list(&raw, "grid")?,
                None => (11..=40).map(|c| c as f64 / 10.0).collect(),
            };
            let direction = match direction {
                MajorizeDirection::WalshByRademacher => Direction::WalshByRademacher,
                MajorizeDirection::RademacherByWalsh => Direction::RademacherByWalsh,
            };
            let report = majorization_constant(&coeffs, &indices, &grid, direction)?;
            ok(&report, format)
        }
    }
}

fn verify(check: VerifyCheck, format: Format) -> Result<Output, Failure> {
    match check {
        VerifyCheck::Equidistribution { indices, coeffs } => {
            let indices: Vec<u64> = input::list(&indices, "indices")?;
            resolve_order(&indices, None)?;
            let coeffs = coeffs_for(Some(&coeffs), indices.len())?;
            let (lacunary, _) = validate_lacunary(&indices, 2.0)?;
            if !lacunary || indices.is_empty() {
                return Err(Failure::Usage(format!(
                    "indices {indices:?} are not 2-lacunary"
                )));
            }
            let (w, r) = equidistribution_tables(&coeffs, &indices)?;
            let equal = w == r;
            let status = Status::from_bool(equal);
            let report = EquidistributionReport {
                check: "equidistribution".into(),
                equal,
                status,
                indices,
                coeffs,
                walsh_table: w,
                rademacher_table: r,
            };
            checked(&report, format, status)
        }
        VerifyCheck::Theta { order } => {
            input::check_order(order)?;
            let theta = theta_matrix(order)?;
            let dim = theta.dim();
            let gram = theta.gram();
            let max_residual = (0..dim * dim)
                .map(|idx| {
                    let expected = if idx / dim == idx % dim {
                        dim as i64
                    } else {
                        0
                    };
                    (gram[idx] - expected).unsigned_abs()
                })
                .max()
                .unwrap_or(0) as f64;
            let symmetric = theta.is_symmetric();
            let orthogonal = max_residual == 0.0;
            let status = Status::from_bool(symmetric && orthogonal);
            let report = ThetaCheckReport {
                check: "theta".into(),
                order,
                symmetric,
                orthogonal,
                status,
                max_residual,
            };
            checked(&report, format, status)
        }
        VerifyCheck::Xor { order } => {
            input::check_order(order)?;
            let fns = (0..1u64 << order)
                .map(|k| walsh(k, order))
                .collect::<Result<Vec<_>, _>>()?;
            let (mut failures, mut max_residual) = (0u64, 0f64);
            for (i, wi) in fns.iter().enumerate() {
                for (j, wj) in fns.iter().enumerate() {
                    let product = wi * wj;
                    let target = &fns[i ^ j];
                    let residual = product
                        .values()
                        .iter()
                        .zip(target.values())
                        .fold(0f64, |m, (a, b)| m.max((a - b).abs()));
                    if residual > 0.0 {
                        failures += 1;
                    }
                    max_residual = max_residual.max(residual);
                }
            }
            let status = Status::from_bool(failures == 0);
            let report = XorCheckReport {
                check: "xor".into(),
                order,
                pairs_checked: (fns.len() * fns.len()) as u64,
                failures,
                status,
                max_residual,
            };
            checked(&report, format, status)
        }
        VerifyCheck::Averaging {
            order,
            selected,
            perturb,
            matrix,
        } => {
            let selected: Vec<u64> = input::list(&selected, "selected")?;
            let q = match matrix {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))?;
                    let q: OperatorMatrix = serde_json::from_str(&text)
                        .map_err(|e| Failure::Usage(format!("bad operator JSON: {e}")))?;
                    if order.is_some_and(|n| n != q.order()) {
                        return Err(Failure::Usage("--order disagrees with the matrix".into()));
                    }
                    q
                }
                None => {
                    let order = order.ok_or_else(|| {
                        Failure::Usage("--order is required without --matrix".into())
                    })?;
                    input::check_order(order)?;
                    let perturbation = match perturb {
                        Some(raw) => input::perturbations(&raw)?,
                        None => Vec::new(),
                    };
                    OperatorMatrix::build_qn(order, &selected, &perturbation)?
                }
            };
            input::check_order(q.order())?;
            let identity = verify_averaging_identity(q.order(), &selected, &q)?;
            let status = Status::from_bool(identity.holds);
            let report = AveragingCheckReport {
                check: "averaging".into(),
                order: q.order(),
                selected,
                exact: identity.exact,
                status,
                max_residual: identity.residual,
            };
            checked(&report, format, status)
        }
    }
}

fn write_output(bytes: &[u8], out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out = cli.out.clone();
    match run(cli) {
        Ok(output) => {
            if let Err(e) = write_output(&output.bytes, out.as_ref()) {
                eprintln!("walshlab: {e}");
                return ExitCode::from(3);
            }
            if output.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("walshlab: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("walshlab: {msg}");
            ExitCode::from(3)
        }
    }
}
