//! Command-line front end. `main.rs` only parses arguments and maps errors
//! to exit codes, so everything here can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brute::brute_force_optimize;
use crate::codec::{build_coding_map, exact_capacity_bits, MessageBits};
use crate::error::{Error, Result};
use crate::imaging::{
    abs_error_histogram, choose_n, decode, encode, mse_psnr, read_pgm, write_pgm,
};
use crate::milp::{iterate_optimize_with, IterateOptions};
use crate::model::{AbsErrorHistogram, LinkVector, ProblemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "revcode", version, about = "Optimal reversible steganographic coding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Absolute prediction-error histogram of a PGM image, as CSV.
    Histogram {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterative MILP optimisation of the link vector.
    Optimize {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = crate::milp::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimisation of the link vector.
    Brute {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum distortion over a grid of payloads.
    Curve {
        #[arg(long)]
        histogram: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: u32,
        /// `start:stop:step` in bits, stop inclusive.
        #[arg(long)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Method::Milp)]
        method: Method,
        #[arg(long, default_value_t = crate::milp::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hide a message in a PGM image.
    Embed(EmbedArgs),
    /// Recover the cover and the message from a stego PGM image.
    Extract {
        #[arg(long)]
        image: PathBuf,
        /// Coding sidecar written by `embed`.
        #[arg(long, conflicts_with = "x")]
        coding: Option<PathBuf>,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        message_out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub histogram: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub theta: u32,
    #[arg(long)]
    pub payload: f64,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, required_unless_present = "random_bits")]
    pub message: Option<PathBuf>,
    /// Embed this many seeded random bits instead of a message file.
    #[arg(long, conflicts_with = "message")]
    pub random_bits: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Link vector such as `2,1,0`, or `auto` to optimise it for this image.
    #[arg(long, default_value = "auto")]
    pub x: String,
    #[arg(long, default_value_t = 2)]
    pub theta: u32,
    /// Largest mapped magnitude for `auto`; chosen from the histogram if absent.
    #[arg(long)]
    pub n: Option<usize>,
    /// Payload handed to the optimiser for `auto`; defaults to the framed
    /// message length.
    #[arg(long)]
    pub payload: Option<f64>,
    #[arg(long, default_value_t = crate::milp::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the coding sidecar (JSON).
    #[arg(long)]
    pub coding: Option<PathBuf>,
    /// Where to write the embedded bits, useful with `--random-bits`.
    #[arg(long)]
    pub message_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Milp,
}

/// Shared coding parameters, kept next to the stego image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodingSidecar {
    pub x: LinkVector,
    pub theta: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub method: Method,
    pub n: usize,
    pub theta: u32,
    pub payload: f64,
    pub x: LinkVector,
    pub capacity: f64,
    pub distortion: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluated: Option<u64>,
}

/// One row of a payload-distortion curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub payload: f64,
    pub distortion: Option<f64>,
    pub distortion_per_query: Option<f64>,
    pub x: String,
    pub method: Method,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedReport {
    pub x: LinkVector,
    pub n: usize,
    pub theta: u32,
    pub bits_embedded: usize,
    pub capacity_bits: u64,
    pub query_pixels: u64,
    pub mse: f64,
    /// `null` when the stego image equals the cover.
    pub psnr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub bits_extracted: usize,
    pub x: LinkVector,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::CapacityExceeded { .. }
        | Error::EmbeddingOverflow { .. }
        | Error::NonEmptyReservedBins { .. } => EXIT_CAPACITY,
        Error::Io(_)
        | Error::Pgm { .. }
        | Error::Csv(_)
        | Error::HistogramCsv(_)
        | Error::Json(_)
        | Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::ImageTooSmall { .. }
        | Error::CorruptStream(_) => EXIT_IO,
        _ => EXIT_INTERNAL,
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn read_histogram(path: &Path) -> Result<AbsErrorHistogram> {
    AbsErrorHistogram::read_csv(read_file(path)?.as_slice())
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

/// Parses `start:stop:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("grid `{spec}` is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && start >= 0.0 && stop >= start) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn milp_opts(max_iter: usize) -> IterateOptions {
    IterateOptions {
        max_iter,
        ..IterateOptions::default()
    }
}

pub fn solve(spec: &ProblemSpec, method: Method, max_iter: usize) -> Result<SolutionReport> {
    let mut report = SolutionReport {
        method,
        n: spec.n,
        theta: spec.theta,
        payload: spec.payload,
        x: LinkVector::zeros(spec.n + 1),
        capacity: 0.0,
        distortion: 0.0,
        iterations: None,
        converged: None,
        evaluated: None,
    };
    match method {
        Method::Brute => {
            let r = brute_force_optimize(spec)?;
            report.x = r.x;
            report.capacity = r.eval.capacity;
            report.distortion = r.eval.distortion;
            report.evaluated = Some(r.evaluated_count);
        }
        Method::Milp => {
            let r = iterate_optimize_with(spec, &milp_opts(max_iter))?;
            report.x = r.x;
            report.capacity = r.eval.capacity;
            report.distortion = r.eval.distortion;
            report.iterations = Some(r.iterations);
            report.converged = Some(r.converged);
        }
    }
    Ok(report)
}

/// Solves every payload of the grid independently. Failures are recorded in
/// the `status` column; rows come back sorted by payload.
pub fn curve(
    hist: &AbsErrorHistogram,
    n: usize,
    theta: u32,
    grid: &[f64],
    method: Method,
    max_iter: usize,
) -> Result<Vec<CurvePoint>> {
    let base = ProblemSpec::new(hist.clone(), n, theta, 0.0)?;
    let queries = hist.total().max(1) as f64;
    let mut rows: Vec<CurvePoint> = grid
        .par_iter()
        .map(|&payload| {
            let spec = base.with_payload(payload);
            match solve(&spec, method, max_iter) {
                Ok(r) => CurvePoint {
                    payload,
                    distortion: Some(r.distortion),
                    distortion_per_query: Some(r.distortion / queries),
                    x: format_x(&r.x),
                    method,
                    status: "ok".into(),
                },
                Err(e) => CurvePoint {
                    payload,
                    distortion: None,
                    distortion_per_query: None,
                    x: String::new(),
                    method,
                    status: match e {
                        Error::Infeasible { .. } => "infeasible".into(),
                        other => format!("error: {other}"),
                    },
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.payload.total_cmp(&b.payload));
    Ok(rows)
}

pub fn format_x(x: &LinkVector) -> String {
    x.as_slice()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn embed(args: &EmbedArgs, stdout: &mut dyn Write) -> Result<()> {
    let cover = read_pgm(&read_file(&args.image)?)?;
    let message = match (&args.message, args.random_bits) {
        (Some(path), _) => MessageBits::from_bytes(&read_file(path)?),
        (None, Some(len)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            MessageBits::random(&mut rng, len)
        }
        (None, None) => return Err(Error::InvalidInput("no message given".into())),
    };
    let hist = abs_error_histogram(&cover)?;
    let x = if args.x.trim() == "auto" {
        let n = args
            .n
            .unwrap_or_else(|| choose_n(&hist, args.theta, 0.999));
        let payload = args.payload.unwrap_or(message.framed_len() as f64);
        let spec = ProblemSpec::new(hist.padded_to(n + 1), n, args.theta, payload)?;
        let r = iterate_optimize_with(&spec, &milp_opts(args.max_iter))?;
        log::info!("auto coding {:?} after {} iterations", r.x, r.iterations);
        r.x
    } else {
        LinkVector::parse_list(&args.x)?
    };
    let stego = encode(&cover, &x, &message)?;
    fs::write(&args.out, write_pgm(&stego))?;
    if let Some(p) = &args.coding {
        let sidecar = CodingSidecar {
            x: x.clone(),
            theta: args.theta,
        };
        fs::write(p, json_line(&sidecar)?)?;
    }
    if let Some(p) = &args.message_out {
        fs::write(p, message.to_bytes())?;
    }
    let (mse, psnr) = mse_psnr(&cover, &stego)?;
    let report = EmbedReport {
        n: x.max_magnitude(),
        capacity_bits: exact_capacity_bits(&build_coding_map(&x), &hist),
        x,
        theta: args.theta,
        bits_embedded: message.len(),
        query_pixels: hist.total(),
        mse,
        psnr: psnr.is_finite().then_some(psnr),
    };
    stdout.write_all(&json_line(&report)?)?;
    Ok(())
}

/// Runs one parsed command, writing reports to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Histogram { image, out } => {
            let grid = read_pgm(&read_file(&image)?)?;
            let hist = abs_error_histogram(&grid)?;
            let mut buf = Vec::new();
            hist.write_csv(&mut buf)?;
            emit(out.as_deref(), stdout, &buf)
        }
        Command::Optimize {
            problem,
            max_iter,
            out,
        } => {
            let spec = problem_spec(&problem)?;
            let report = solve(&spec, Method::Milp, max_iter)?;
            emit(out.as_deref(), stdout, &json_line(&report)?)
        }
        Command::Brute { problem, out } => {
            let spec = problem_spec(&problem)?;
            let report = solve(&spec, Method::Brute, 0)?;
            emit(out.as_deref(), stdout, &json_line(&report)?)
        }
        Command::Curve {
            histogram,
            n,
            theta,
            grid,
            method,
            max_iter,
            out,
        } => {
            let hist = read_histogram(&histogram)?;
            let rows = curve(&hist, n, theta, &parse_grid(&grid)?, method, max_iter)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row)?;
            }
            let buf = w
                .into_inner()
                .map_err(|e| Error::Io(e.into_error()))?;
            emit(out.as_deref(), stdout, &buf)
        }
        Command::Embed(args) => embed(&args, stdout),
        Command::Extract {
            image,
            coding,
            x,
            out,
            message_out,
        } => {
            let x = match (coding, x) {
                (Some(p), _) => {
                    serde_json::from_slice::<CodingSidecar>(&read_file(&p)?)?.x
                }
                (None, Some(s)) => LinkVector::parse_list(&s)?,
                (None, None) => {
                    return Err(Error::InvalidInput("need --coding or --x".into()))
                }
            };
            let stego = read_pgm(&read_file(&image)?)?;
            let (cover, message) = decode(&stego, &x)?;
            fs::write(&out, write_pgm(&cover))?;
            fs::write(&message_out, message.to_bytes())?;
            let report = ExtractReport {
                bits_extracted: message.len(),
                x,
            };
            stdout.write_all(&json_line(&report)?)?;
            Ok(())
        }
    }
}

fn problem_spec(p: &ProblemArgs) -> Result<ProblemSpec> {
    ProblemSpec::new(read_histogram(&p.histogram)?, p.n, p.theta, p.payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:4:2").unwrap(), vec![0.0, 2.0, 4.0]);
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0:0.3:0.1").unwrap().len(), 4);
        assert!(parse_grid("0:4").is_err());
        assert!(parse_grid("0:4:0").is_err());
        assert!(parse_grid("4:0:1").is_err());
    }

    #[test]
    fn exit_codes() {
        let inf = Error::Infeasible {
            payload: 1.0,
            max_capacity: 0.0,
        };
        assert_eq!(exit_code(&inf), EXIT_INFEASIBLE);
        let cap = Error::CapacityExceeded {
            needed: 2,
            available: 1,
        };
        assert_eq!(exit_code(&cap), EXIT_CAPACITY);
        assert_eq!(exit_code(&Error::Solver("x".into())), EXIT_INTERNAL);
        assert_eq!(
            exit_code(&Error::Io(std::io::Error::other("x"))),
            EXIT_IO
        );
    }

    #[test]
    fn curve_rows_sorted_and_monotone() {
        let hist = AbsErrorHistogram::new(vec![4, 1, 3]);
        let rows = curve(&hist, 2, 2, &parse_grid("0:9:1").unwrap(), Method::Brute, 20).unwrap();
        assert_eq!(rows.len(), 10);
        let ok: Vec<f64> = rows.iter().filter_map(|r| r.distortion).collect();
        assert!(ok.windows(2).all(|w| w[0] <= w[1]));
        assert!(rows.windows(2).all(|w| w[0].payload < w[1].payload));
        assert_eq!(rows.last().unwrap().status, "infeasible");
    }
}
