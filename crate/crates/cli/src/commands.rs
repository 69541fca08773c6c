//! Command-line interface: argument definitions and command runners.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use curveband::curve_model::{
    project_to_zero_set, random_nonempty_curve, sample_curve, FrequencySupport, PointSet, Rect, SamplingStrategy,
    DEFAULT_GRID_RES,
};
use curveband::denoise::{add_gaussian_noise, klr_denoise, point_cloud_mse, point_cloud_snr, IrlsConfig};
use curveband::recovery::{chamfer_distance, nullspace_basis, rank_bound, recover_curve, TolerancePolicy};
use curveband::segmentation::{level_set_phantom, segment, SegmentConfig, DEFAULT_LAMBDA};
use curveband::{io, Error};

use crate::experiments::{derive_seed, phase_csv, phase_svg, phase_transition};

#[derive(Debug, Parser, Serialize)]
#[command(name = "curveband", version, about = "Band-limited curve recovery, denoising and segmentation")]
pub struct Cli {
    /// Base seed; every random draw is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving all outputs (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for trial-parallel commands (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Draw a random curve, sample it and optionally rasterize a phantom.
    Synth(SynthArgs),
    /// Recover a curve from sample points.
    Recover(RecoverArgs),
    /// Success frequency of known-support recovery over (k, N).
    PhaseTransition(PhaseArgs),
    /// Kernel low-rank denoising of a point cloud.
    Denoise(DenoiseArgs),
    /// Structured low-rank edge detection on a PGM image.
    Segment(SegmentArgs),
    /// Compare two outputs.
    Eval(EvalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Support of the curve, e.g. 5x5.
    #[arg(long, default_value = "5x5")]
    pub support: String,
    #[arg(long, default_value_t = DEFAULT_GRID_RES)]
    pub grid_res: usize,
    /// Number of sample points.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Sample only the left half of the curve's bounding box.
    #[arg(long)]
    pub half: bool,
    /// Move samples from the traced contour onto the exact zero set.
    #[arg(long)]
    pub project: bool,
    /// Standard deviation of additive Gaussian noise on the samples.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Side length of a binary phantom image of the curve's interior.
    #[arg(long)]
    pub phantom_size: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct RecoverArgs {
    #[arg(long)]
    pub points: PathBuf,
    /// Assumed support, e.g. 7x7.
    #[arg(long)]
    pub gamma: String,
    /// True support, used only for the rank bound in the report.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub grid_res: usize,
    /// Relative singular-value threshold; the default suits points sampled
    /// from a contour traced on the default grid.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Coefficient JSON of the true curve, for a Chamfer score.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long = "k", value_delimiter = ',', default_values_t = [3usize, 5, 7, 9])]
    pub ks: Vec<usize>,
    #[arg(long = "n", value_delimiter = ',', default_values_t = [5usize, 10, 20, 40, 60, 80, 120, 160, 240, 320])]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub points: PathBuf,
    /// `key = value` file overriding the default IRLS parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Clean points, for MSE and SNR before and after.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// One rank, or a comma-separated list for a sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rank: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value = "5x5")]
    pub filter: String,
    #[arg(long, default_value_t = 10)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Chamfer distance between two polyline CSVs.
    Chamfer,
    /// SNR (dB) of point CSV `b` against reference `a`.
    Snr,
    /// Mean squared error of point CSV `b` against reference `a`.
    Mse,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Error::Numerical(_) | Error::AmbiguousSupport { .. }) => EXIT_NUMERICAL,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_support(text: &str, flag: &str) -> CliResult<FrequencySupport> {
    text.parse().map_err(|e: Error| usage(format!("--{flag}: {e}")))
}

fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    Ok(io::write_text(&out_path(dir, name), text)?)
}

fn metrics_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("metric,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Runs the parsed command and returns the lines to print on stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::Io {
        path: cli.out_dir.clone(),
        source: e,
    })?;
    let name = match &cli.command {
        Command::Synth(_) => "synth",
        Command::Recover(_) => "recover",
        Command::PhaseTransition(_) => "phase-transition",
        Command::Denoise(_) => "denoise",
        Command::Segment(_) => "segment",
        Command::Eval(_) => "eval",
    };
    let spec = serde_json::to_string_pretty(cli).map_err(Error::from)?;
    write(&cli.out_dir, &format!("{name}.spec.json"), &(spec + "\n"))?;
    let dir = cli.out_dir.as_path();
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed, dir),
        Command::Recover(a) => recover(a, dir),
        Command::PhaseTransition(a) => phase(a, cli.seed, cli.threads, dir),
        Command::Denoise(a) => denoise(a, dir),
        Command::Segment(a) => segment_cmd(a, dir),
        Command::Eval(a) => eval(a, dir),
    }
}

fn synth(a: &SynthArgs, seed: u64, dir: &Path) -> CliResult<String> {
    let support = parse_support(&a.support, "support")?;
    if a.noise < 0.0 || !a.noise.is_finite() {
        return Err(usage("--noise must be a non-negative number"));
    }
    let (used_seed, poly, line) = random_nonempty_curve(support, seed, a.grid_res)?;
    let strategy = if a.half {
        let rect = Rect::left_half_of(&line).ok_or(Error::NoSamplesAvailable)?;
        SamplingStrategy::Restricted(rect)
    } else {
        SamplingStrategy::UniformArclength
    };
    let mut pts = sample_curve(&line, a.samples, strategy, derive_seed(seed, &[1]))?;
    if a.project {
        pts = project_to_zero_set(&poly, &pts)?;
    }
    write(dir, "curve.json", &io::coefficients_to_json(&poly)?)?;
    write(dir, "curve.csv", &io::polyline_to_csv(&line))?;
    write(dir, "curve.svg", &io::polyline_to_svg(&line))?;
    io::write_points(&out_path(dir, "points.csv"), &pts)?;
    let mut msg = format!(
        "curve {support} (seed {used_seed}): {} vertices, {} samples\n",
        line.vertex_count(),
        pts.len()
    );
    if a.noise > 0.0 {
        let noisy = add_gaussian_noise(&pts, a.noise, derive_seed(seed, &[2]))?;
        io::write_points(&out_path(dir, "noisy.csv"), &noisy)?;
        let _ = writeln!(msg, "noisy samples: std {}", a.noise);
    }
    if let Some(side) = a.phantom_size {
        let img = level_set_phantom(&poly, side, side)?;
        io::write_pgm(&out_path(dir, "phantom.pgm"), &img)?;
        let _ = writeln!(msg, "phantom: {side}x{side}");
    }
    Ok(msg)
}

fn recover(a: &RecoverArgs, dir: &Path) -> CliResult<String> {
    let gamma = parse_support(&a.gamma, "gamma")?;
    let lambda = a.lambda.as_deref().map(|s| parse_support(s, "lambda")).transpose()?;
    let tol = match a.tolerance {
        Some(t) if t > 0.0 && t < 1.0 => TolerancePolicy::with_relative(t),
        Some(t) => return Err(usage(format!("--tolerance must lie in (0, 1), got {t}"))),
        None => TolerancePolicy::default(),
    };
    let pts = io::read_points(&a.points)?;
    let basis = nullspace_basis(&pts, gamma, tol)?;
    let bound = lambda.map(|l| rank_bound(gamma, l)).transpose()?;
    let line = recover_curve(&pts, gamma, a.grid_res, tol)?;
    write(dir, "recovered.csv", &io::polyline_to_csv(&line))?;
    write(dir, "recovered.svg", &io::polyline_to_svg(&line))?;
    write(dir, "nullspace.json", &io::nullspace_to_json(&basis)?)?;
    let row = io::RankRow {
        gamma,
        lambda,
        n: pts.len(),
        measured_rank: basis.rank(),
        bound,
    };
    write(dir, "rank_report.csv", &io::rank_report_csv(&[row]))?;
    let mut rows = vec![
        ("N", pts.len().to_string()),
        ("rank", basis.rank().to_string()),
        ("nullspace_dim", basis.dim().to_string()),
        ("vertices", line.vertex_count().to_string()),
    ];
    let mut msg = format!(
        "gamma {gamma}: N {}, rank {}, null space {}\n",
        pts.len(),
        basis.rank(),
        basis.dim()
    );
    if let Some(path) = &a.truth {
        let truth = io::coefficients_from_json(&io::read_text(path)?)?;
        let truth_line = curveband::curve_model::extract_zero_level_set(&truth, a.grid_res)?;
        let d = if line.is_empty() {
            f64::INFINITY
        } else {
            chamfer_distance(&truth_line, &line)?
        };
        rows.push(("chamfer", d.to_string()));
        let _ = writeln!(msg, "chamfer {d}");
    }
    write(dir, "recover_report.csv", &metrics_csv(&rows))?;
    Ok(msg)
}

fn phase(a: &PhaseArgs, seed: u64, threads: usize, dir: &Path) -> CliResult<String> {
    if a.ks.is_empty() || a.ns.is_empty() || a.trials == 0 {
        return Err(usage("--k, --n and --trials must be non-empty"));
    }
    let mut ns = a.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("--threads: {e}")))?;
    let cells = pool.install(|| phase_transition(&a.ks, &ns, a.trials, seed))?;
    write(dir, "phase_transition.csv", &phase_csv(&cells))?;
    write(dir, "phase_transition.svg", &phase_svg(&cells, &a.ks, &ns))?;
    Ok(format!("{} cells x {} trials\n", cells.len(), a.trials))
}

fn denoise(a: &DenoiseArgs, dir: &Path) -> CliResult<String> {
    let cfg = match &a.config {
        Some(p) => io::read_config(p)?,
        None => IrlsConfig::default(),
    };
    let noisy = io::read_points(&a.points)?;
    let (clean, trace) = klr_denoise(&noisy, &cfg)?;
    io::write_points(&out_path(dir, "denoised.csv"), &clean)?;
    write(dir, "trace.csv", &io::trace_to_csv(&trace))?;
    let mut rows = vec![
        ("iterations", trace.records.len().to_string()),
        ("converged", trace.converged.to_string()),
    ];
    let mut msg = format!(
        "{} points, {} iterations, converged {}\n",
        noisy.len(),
        trace.records.len(),
        trace.converged
    );
    if let Some(path) = &a.truth {
        let truth: PointSet = io::read_points(path)?;
        let (snr_in, snr_out) = (point_cloud_snr(&truth, &noisy)?, point_cloud_snr(&truth, &clean)?);
        rows.push(("mse_in", point_cloud_mse(&truth, &noisy)?.to_string()));
        rows.push(("mse_out", point_cloud_mse(&truth, &clean)?.to_string()));
        rows.push(("snr_in", snr_in.to_string()));
        rows.push(("snr_out", snr_out.to_string()));
        let _ = writeln!(msg, "snr {snr_in:.2} dB -> {snr_out:.2} dB");
    }
    write(dir, "snr.csv", &metrics_csv(&rows))?;
    Ok(msg)
}

fn segment_cmd(a: &SegmentArgs, dir: &Path) -> CliResult<String> {
    let filter = parse_support(&a.filter, "filter")?;
    if a.rank.is_empty() {
        return Err(usage("--rank needs at least one value"));
    }
    let img = io::read_pgm(&a.image)?;
    let sweep = a.rank.len() > 1;
    let mut table = String::from("rank,edge_fraction,final_energy,iterations,not_converged\n");
    let mut msg = String::new();
    for &r in &a.rank {
        let mut cfg = SegmentConfig::new(r, filter);
        cfg.lambda = a.lambda;
        cfg.max_iters = a.max_iters;
        let seg = segment(&img, &cfg)?;
        let suffix = if sweep { format!("_r{r}") } else { String::new() };
        io::write_pgm(&out_path(dir, &format!("f{suffix}.pgm")), &seg.image)?;
        io::write_pgm(&out_path(dir, &format!("edges{suffix}.pgm")), &seg.edge_map.normalized())?;
        let contour = seg.edge_contour();
        write(
            dir,
            &format!("edges{suffix}.svg"),
            &io::edges_to_svg(&contour, img.width(), img.height()),
        )?;
        let final_energy = seg.energies.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            table,
            "{r},{},{final_energy},{},{}",
            seg.edge_fraction(),
            seg.iterations,
            seg.not_converged
        );
        let _ = writeln!(
            msg,
            "rank {r}: edge fraction {:.4}, {} iterations{}",
            seg.edge_fraction(),
            seg.iterations,
            if seg.not_converged { " (not converged)" } else { "" }
        );
    }
    write(dir, "rank_sweep.csv", &table)?;
    Ok(msg)
}

fn eval(a: &EvalArgs, dir: &Path) -> CliResult<String> {
    let value = match a.metric {
        Metric::Chamfer => {
            let la = io::polyline_from_csv(&io::read_text(&a.a)?)?;
            let lb = io::polyline_from_csv(&io::read_text(&a.b)?)?;
            chamfer_distance(&la, &lb)?
        }
        Metric::Snr => point_cloud_snr(&io::read_points(&a.a)?, &io::read_points(&a.b)?)?,
        Metric::Mse => point_cloud_mse(&io::read_points(&a.a)?, &io::read_points(&a.b)?)?,
    };
    let name = format!("{:?}", a.metric).to_lowercase();
    write(dir, "eval.csv", &metrics_csv(&[(name.as_str(), value.to_string())]))?;
    Ok(format!("{name} {value}\n"))
}
