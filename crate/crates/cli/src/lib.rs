//! The `nutpose` command line: synthesize scenes, segment point clouds,
//! estimate nut yaws against a photo and draw overlays.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use nutpose_core::cloud::{format_frame, frame_file_name, read_frame_dir, Cluster, Label};
use nutpose_core::config::PipelineConfig;
use nutpose_core::geometry::Point3;
use nutpose_core::imaging::{decode_pgm, encode_pgm, encode_ppm_overlay};
use nutpose_core::matching::{reports_from_json, reports_to_json, MatchReport};
use nutpose_core::pipeline::Estimator;
use nutpose_core::synth::{nut_truth, render_edge_photo, render_frames, NoiseSpec, SceneGenerator};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    MalformedInput = 2,
    NoNuts = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
        }
    }
}

impl From<nutpose_core::Error> for CliError {
    fn from(e: nutpose_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl CliError {
    fn status(&self) -> ExitStatus {
        match self {
            CliError::Usage(_) => ExitStatus::Usage,
            CliError::Input(_) => ExitStatus::MalformedInput,
        }
    }
}

fn io_context(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "nutpose",
    version,
    about = "Hex-nut yaw estimation from point clouds and a photo"
)]
pub struct Cli {
    /// Key-value config file; unspecified keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (synth only).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file, or directory for `synth`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the effective configuration to stdout.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: scene.json, frames, photo.pgm, truth.json.
    Synth(SynthArgs),
    /// Segment a directory of frame_NNN.xyz files into clusters.json.
    Preprocess { frames_dir: PathBuf },
    /// Score every Nut cluster against a photo and write report.json.
    Estimate { clusters: PathBuf, photo: PathBuf },
    /// Paint the best-yaw model edges of a report onto the photo (PPM).
    Overlay { report: PathBuf, photo: PathBuf },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub nuts: usize,
    /// Screws, washers and placeholder blocks, in rotation.
    #[arg(long, default_value_t = 0)]
    pub distractors: usize,
    /// Gaussian jitter of every cloud point, meters.
    #[arg(long, default_value_t = 0.0)]
    pub point_sigma: f64,
    /// Fraction of cloud points dropped per frame.
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Fraction of photo pixels overwritten with random intensities.
    #[arg(long, default_value_t = 0.0)]
    pub speckle: f64,
}

/// One row of clusters.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: usize,
    pub points: usize,
    pub centroid: [f64; 3],
    pub bbox_dims: [f64; 3],
    pub label: Label,
}

impl ClusterRecord {
    pub fn from_cluster(id: usize, c: &Cluster) -> Self {
        Self {
            id,
            points: c.points.len(),
            centroid: [c.centroid.x, c.centroid.y, c.centroid.z],
            bbox_dims: [c.bbox_dims.x, c.bbox_dims.y, c.bbox_dims.z],
            label: c.label,
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Success
            };
            let _ = e.print();
            return code.code();
        }
    };
    match run(&cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("nutpose: {e}");
            e.status().code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<ExitStatus, CliError> {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.dump_config {
        print!("{}", config.dump());
    }
    let Some(command) = &cli.command else {
        if cli.dump_config {
            return Ok(ExitStatus::Success);
        }
        return Err(CliError::Usage(
            "a subcommand is required (see --help)".into(),
        ));
    };
    let out = |default: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match command {
        Command::Synth(args) => synth(&config, args, cli.seed, &out(".")),
        Command::Preprocess { frames_dir } => {
            preprocess(&config, frames_dir, &out("clusters.json"))
        }
        Command::Estimate { clusters, photo } => {
            estimate(&config, clusters, photo, &out("report.json"))
        }
        Command::Overlay { report, photo } => overlay(&config, report, photo, &out("overlay.ppm")),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_context(path))
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_context(path))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Input(e.to_string()))
}

fn synth(
    config: &PipelineConfig,
    args: &SynthArgs,
    seed: u64,
    dir: &Path,
) -> Result<ExitStatus, CliError> {
    let noise = NoiseSpec {
        point_sigma: args.point_sigma,
        dropout: args.dropout,
        speckle_density: args.speckle,
    };
    noise
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let camera = config.camera.camera()?;
    let generator = SceneGenerator::new(config.filter.table_height, camera, config.nut);
    let scene = generator.generate(args.nuts, args.distractors, seed)?;
    let frames = render_frames(&scene, config.filter.n_frames, &noise)?;
    let photo = render_edge_photo(&scene, &noise)?;

    fs::create_dir_all(dir).map_err(io_context(dir))?;
    write(&dir.join("scene.json"), scene.to_json()? + "\n")?;
    for frame in &frames {
        write(
            &dir.join(frame_file_name(frame.frame_index)),
            format_frame(frame),
        )?;
    }
    write(&dir.join("photo.pgm"), encode_pgm(&photo))?;
    write(&dir.join("truth.json"), to_json(&nut_truth(&scene))?)?;
    eprintln!(
        "wrote {} objects, {} frames and a {}x{} photo to {}",
        scene.objects.len(),
        frames.len(),
        photo.width(),
        photo.height(),
        dir.display()
    );
    Ok(ExitStatus::Success)
}

fn preprocess(
    config: &PipelineConfig,
    frames_dir: &Path,
    out: &Path,
) -> Result<ExitStatus, CliError> {
    let estimator = Estimator::new(*config)?;
    let frames = read_frame_dir(frames_dir)?;
    let seg = estimator.preprocess(&frames)?;
    if seg.short_input {
        eprintln!(
            "warning: only {} of {} frames available",
            seg.frames_used, config.filter.n_frames
        );
    }
    let records: Vec<ClusterRecord> = seg
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| ClusterRecord::from_cluster(i, c))
        .collect();
    write(out, to_json(&records)?)?;
    let nuts = records.iter().filter(|r| r.label == Label::Nut).count();
    eprintln!("{} clusters, {} labelled Nut", records.len(), nuts);
    Ok(if nuts == 0 {
        ExitStatus::NoNuts
    } else {
        ExitStatus::Success
    })
}

fn estimate(
    config: &PipelineConfig,
    clusters: &Path,
    photo: &Path,
    out: &Path,
) -> Result<ExitStatus, CliError> {
    let estimator = Estimator::new(*config)?;
    let records: Vec<ClusterRecord> = serde_json::from_str(&read_to_string(clusters)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", clusters.display())))?;
    let photo = decode_pgm(&fs::read(photo).map_err(io_context(photo))?)?;
    let edges = estimator.edges(&photo)?;
    let reports = records
        .iter()
        .filter(|r| r.label == Label::Nut)
        .map(|r| estimator.estimate_one(r.id, &Point3::from(r.centroid), &edges))
        .collect::<Result<Vec<MatchReport>, _>>()?;
    write(out, reports_to_json(&reports)? + "\n")?;
    for r in &reports {
        eprintln!("nut {}: yaw {:.2} score {:.3}", r.nut_id, r.yaw, r.score);
    }
    Ok(if reports.is_empty() {
        ExitStatus::NoNuts
    } else {
        ExitStatus::Success
    })
}

fn overlay(
    config: &PipelineConfig,
    report: &Path,
    photo: &Path,
    out: &Path,
) -> Result<ExitStatus, CliError> {
    let estimator = Estimator::new(*config)?;
    let reports = reports_from_json(&read_to_string(report)?)?;
    let photo = decode_pgm(&fs::read(photo).map_err(io_context(photo))?)?;
    let mut painted = Vec::new();
    for r in &reports {
        painted.extend(
            estimator
                .best_pose_edges(r)?
                .into_iter()
                .map(|p| (p.pixel, p.class)),
        );
    }
    write(out, encode_ppm_overlay(&photo, &painted))?;
    Ok(ExitStatus::Success)
}
