//! skelbench command line: dataset generation and scoring for the
//! skeleton benchmark toolkit.
//!
//! Subcommands cover the whole ground-truth pipeline (skeletonize,
//! parametrize, rasterize, sample, label, split, pipeline), the three
//! evaluation tracks, and an SVG figure renderer. Settings resolve in the
//! order: command-line flag, then `SKELBENCH_SEED` (for the seed), then the
//! TOML file given by `--config`, then built-in defaults.
//!
//! Exit status: 0 on success, 1 when any file failed while others were
//! processed, 2 on usage or configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use skelbench_core::contour::extract_contour;
use skelbench_core::datagen::{
    label_skeleton_points, points_to_pts, read_pts_file, render_skeleton_image, resample_cloud,
    sample_point_cloud, make_split, split_to_manifest, NoiseKind, RenderTransform,
    SamplingConfig, SplitRatios,
};
use skelbench_core::geom::Point2;
use skelbench_core::metrics::{batch_evaluate, Track};
use skelbench_core::parametrize::{parametrize_graph, MergeTolerances};
use skelbench_core::raster::BinaryImage;
use skelbench_core::skeleton::SkeletonGraph;
use skelbench_core::skeletonize::{clean_shape, prune, skeletonize_auto, voronoi_medial_axis, PruneThreshold};

#[derive(Parser)]
#[command(name = "skelbench", version, about = "Skeleton benchmark toolkit")]
struct Cli {
    /// TOML settings file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base random seed (overrides SKELBENCH_SEED and the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-shape parallel work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    None,
    Uniform,
    Gaussian,
}

impl From<NoiseArg> for NoiseKind {
    fn from(a: NoiseArg) -> Self {
        match a {
            NoiseArg::None => NoiseKind::None,
            NoiseArg::Uniform => NoiseKind::Uniform,
            NoiseArg::Gaussian => NoiseKind::Gaussian,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract pruned skeleton graphs from PNG shapes.
    Skeletonize {
        /// PNG file or directory of PNGs.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Pruning threshold in pixels; picked automatically when omitted.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Fit ordered Bezier branches to skeleton graphs.
    Parametrize {
        /// .skel file or directory.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Relative WEDF gap that still merges branches at a junction.
        #[arg(long)]
        tau_wedf: Option<f64>,
        /// Relative WEDF gap under which sibling branches count as equals.
        #[arg(long)]
        tau_eq: Option<f64>,
    },
    /// Draw skeleton graphs as 1 px rasters on their shapes' canvases.
    Rasterize {
        /// .skel file or directory.
        #[arg(long)]
        skeletons: PathBuf,
        /// Directory of matching shape PNGs.
        #[arg(long)]
        shapes: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample shapes into boundary-plus-lattice point clouds.
    Sample {
        /// PNG file or directory of PNGs.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Sampling pitch in pixels.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_enum)]
        noise: Option<NoiseArg>,
        /// Noise amplitude as a fraction of h.
        #[arg(long)]
        noise_scale: Option<f64>,
        /// Density factor: keep a subset (< 1) or append jittered points (> 1).
        #[arg(long)]
        factor: Option<f64>,
    },
    /// Label cloud points as skeleton (1) or background (2).
    Label {
        /// .pts file or directory.
        #[arg(long)]
        clouds: PathBuf,
        /// Directory of matching .skel files.
        #[arg(long)]
        skeletons: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Distance threshold in pixels.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Write a stratified train/val/test split manifest.
    Split {
        /// Directory whose PNG stems become shape ids (class = stem up to
        /// the last dash).
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Tab-separated `shape_id<TAB>class` index file.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        train: Option<f64>,
        #[arg(long)]
        val: Option<f64>,
        #[arg(long)]
        test: Option<f64>,
    },
    /// Score skeleton rasters by pixel F1.
    EvaluatePixel {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Scores CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score point clouds by symmetric Chamfer distance.
    EvaluatePoint {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score parametric skeletons by control-point distance.
    EvaluateParametric {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole ground-truth pipeline over a directory of shapes.
    Pipeline {
        /// Directory of shape PNGs.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_enum)]
        noise: Option<NoiseArg>,
        #[arg(long)]
        noise_scale: Option<f64>,
    },
    /// Render a skeleton, optionally over its shape, as an SVG figure.
    Render {
        /// .skel file.
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Shape PNG drawn underneath.
        #[arg(long)]
        shape: Option<PathBuf>,
    },
}

/// Marker for errors caused by how the tool was invoked rather than by the
/// data it processed; these exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    h: Option<f64>,
    noise: Option<String>,
    noise_scale: Option<f64>,
    tau_wedf: Option<f64>,
    tau_eq: Option<f64>,
    jobs: Option<usize>,
}

/// Fully resolved settings shared by the subcommands.
struct Settings {
    seed: u64,
    h: f64,
    noise: NoiseKind,
    noise_scale: f64,
    tol: MergeTolerances,
    jobs: Option<usize>,
}

fn parse_noise_name(name: &str) -> Result<NoiseKind> {
    match name {
        "none" => Ok(NoiseKind::None),
        "uniform" => Ok(NoiseKind::Uniform),
        "gaussian" => Ok(NoiseKind::Gaussian),
        other => Err(usage(format!(
            "unknown noise kind {other:?} (expected none, uniform, or gaussian)"
        ))),
    }
}

fn resolve_settings(cli: &Cli) -> Result<Settings> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| usage(format!("cannot parse config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let env_seed = match std::env::var("SKELBENCH_SEED") {
        Ok(v) => Some(v.parse::<u64>().map_err(|_| {
            usage(format!("SKELBENCH_SEED must be an unsigned integer, got {v:?}"))
        })?),
        Err(_) => None,
    };
    let noise = match &file.noise {
        Some(name) => parse_noise_name(name)?,
        None => NoiseKind::Uniform,
    };
    let defaults = MergeTolerances::default();
    Ok(Settings {
        seed: cli.seed.or(env_seed).or(file.seed).unwrap_or(0),
        h: file.h.unwrap_or(1.0),
        noise,
        noise_scale: file.noise_scale.unwrap_or(0.25),
        tol: MergeTolerances {
            tau_wedf: file.tau_wedf.unwrap_or(defaults.tau_wedf),
            tau_eq: file.tau_eq.unwrap_or(defaults.tau_eq),
        },
        jobs: cli.jobs.or(file.jobs),
    })
}

static LOG: Mutex<()> = Mutex::new(());

fn log(msg: &str) {
    let _guard = LOG.lock().unwrap();
    eprintln!("{msg}");
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("shape")
        .to_string()
}

/// One file, or every file with the extension inside a directory, sorted.
fn collect_inputs(path: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("cannot list {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(ext))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .{ext} files under {}", path.display());
    }
    Ok(files)
}

/// Writes through a sibling temp file so concurrent readers never observe a
/// half-written artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot finalize {}", path.display()))?;
    Ok(())
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Per-shape seed derivation: stable under reordering and parallelism.
fn shape_seed(base: u64, stem: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in stem.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    base ^ h
}

/// Runs `work` over every file on the worker pool, logging per-file
/// failures and carrying on. Returns how many files failed.
fn for_each_input<F>(files: &[PathBuf], work: F) -> usize
where
    F: Fn(&Path) -> Result<String> + Sync,
{
    let failures = AtomicUsize::new(0);
    files.par_iter().for_each(|path| match work(path) {
        Ok(msg) => log(&msg),
        Err(e) => {
            failures.fetch_add(1, Ordering::SeqCst);
            log(&format!("{}: error: {e:#}", path.display()));
        }
    });
    failures.load(Ordering::SeqCst)
}

fn exit_for(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn identity_transform() -> RenderTransform {
    RenderTransform {
        scale: 1.0,
        offset: Point2::new(0.0, 0.0),
    }
}

fn skeletonize_one(img: &BinaryImage, epsilon: Option<f64>) -> Result<(BinaryImage, SkeletonGraph, f64, bool)> {
    let (cleaned, _) = clean_shape(img)?;
    match epsilon {
        Some(eps) => {
            let contour = extract_contour(&cleaned)?;
            let graph = voronoi_medial_axis(&contour, 1.0)?;
            let pruned = prune(&graph, &cleaned, PruneThreshold::new(eps)?);
            Ok((cleaned, pruned, eps, false))
        }
        None => {
            let auto = skeletonize_auto(img)?;
            Ok((cleaned, auto.graph, auto.epsilon, auto.needs_review))
        }
    }
}

fn cmd_skeletonize(input: &Path, out_dir: &Path, epsilon: Option<f64>) -> Result<ExitCode> {
    let files = collect_inputs(input, "png")?;
    fs::create_dir_all(out_dir)?;
    let failures = for_each_input(&files, |path| {
        let stem = stem_of(path);
        let img = BinaryImage::load_png(path)?;
        let (_, graph, eps, review) = skeletonize_one(&img, epsilon)?;
        write_atomic(
            &out_dir.join(format!("{stem}.skel")),
            graph.to_text().as_bytes(),
        )?;
        let mark = if review { " (needs review)" } else { "" };
        Ok(format!(
            "{stem}: nodes={} edges={} epsilon={eps}{mark}",
            graph.nodes.len(),
            graph.edges.len()
        ))
    });
    Ok(exit_for(failures))
}

fn cmd_parametrize(input: &Path, out_dir: &Path, tol: MergeTolerances) -> Result<ExitCode> {
    let files = collect_inputs(input, "skel")?;
    fs::create_dir_all(out_dir)?;
    let failures = for_each_input(&files, |path| {
        let stem = stem_of(path);
        let graph = SkeletonGraph::read_text_file(path)?;
        let parametric = parametrize_graph(&graph, &tol)?;
        write_atomic(
            &out_dir.join(format!("{stem}.csv")),
            parametric.to_csv_string().as_bytes(),
        )?;
        Ok(format!("{stem}: branches={}", parametric.branches.len()))
    });
    Ok(exit_for(failures))
}

fn cmd_rasterize(skeletons: &Path, shapes: &Path, out_dir: &Path) -> Result<ExitCode> {
    let files = collect_inputs(skeletons, "skel")?;
    fs::create_dir_all(out_dir)?;
    let failures = for_each_input(&files, |path| {
        let stem = stem_of(path);
        let graph = SkeletonGraph::read_text_file(path)?;
        let shape_path = shapes.join(format!("{stem}.png"));
        let shape = BinaryImage::load_png(&shape_path)?;
        let raster = render_skeleton_image(&graph, &identity_transform(), &shape)?;
        write_atomic(
            &out_dir.join(format!("{stem}.png")),
            &raster.to_png_bytes()?,
        )?;
        Ok(format!("{stem}: {} skeleton pixels", raster.foreground_count()))
    });
    Ok(exit_for(failures))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    input: &Path,
    out_dir: &Path,
    settings: &Settings,
    h: Option<f64>,
    noise: Option<NoiseArg>,
    noise_scale: Option<f64>,
    factor: Option<f64>,
) -> Result<ExitCode> {
    let files = collect_inputs(input, "png")?;
    fs::create_dir_all(out_dir)?;
    let failures = for_each_input(&files, |path| {
        let stem = stem_of(path);
        let img = BinaryImage::load_png(path)?;
        let (cleaned, _) = clean_shape(&img)?;
        let contour = extract_contour(&cleaned)?;
        let cfg = SamplingConfig {
            h: h.unwrap_or(settings.h),
            noise: noise.map(NoiseKind::from).unwrap_or(settings.noise),
            noise_scale: noise_scale.unwrap_or(settings.noise_scale),
            seed: shape_seed(settings.seed, &stem),
        };
        let mut cloud = sample_point_cloud(&contour, &cfg)?;
        if let Some(f) = factor {
            cloud = resample_cloud(&cloud, f, shape_seed(settings.seed, &stem).rotate_left(17))?;
        }
        write_atomic(
            &out_dir.join(format!("{stem}.pts")),
            points_to_pts(&cloud, None).as_bytes(),
        )?;
        Ok(format!("{stem}: {} points", cloud.len()))
    });
    Ok(exit_for(failures))
}

fn cmd_label(
    clouds: &Path,
    skeletons: &Path,
    out_dir: &Path,
    settings: &Settings,
    h: Option<f64>,
) -> Result<ExitCode> {
    let files = collect_inputs(clouds, "pts")?;
    fs::create_dir_all(out_dir)?;
    let threshold = h.unwrap_or(settings.h);
    let failures = for_each_input(&files, |path| {
        let stem = stem_of(path);
        let (points, _) = read_pts_file(path)?;
        let graph = SkeletonGraph::read_text_file(skeletons.join(format!("{stem}.skel")))?;
        if graph.is_empty() {
            log(&format!("{stem}: warning: empty skeleton, everything labeled background"));
        }
        let labels = label_skeleton_points(&points, &graph, threshold);
        write_atomic(
            &out_dir.join(format!("{stem}.pts")),
            points_to_pts(&points, Some(&labels)).as_bytes(),
        )?;
        let on = labels.iter().filter(|&&l| l == 1).count();
        Ok(format!("{stem}: {on}/{} skeleton points", labels.len()))
    });
    Ok(exit_for(failures))
}

/// Class of a shape id: everything before the last dash, or the whole id.
fn class_of(stem: &str) -> String {
    match stem.rfind('-') {
        Some(i) if i > 0 => stem[..i].to_string(),
        _ => stem.to_string(),
    }
}

fn read_index_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read index {}", path.display()))?;
    let mut index = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(class), None) => index.push((id.to_string(), class.to_string())),
            _ => bail!("index line {}: expected shape_id<TAB>class", lineno + 1),
        }
    }
    Ok(index)
}

fn index_from_dir(dir: &Path) -> Result<Vec<(String, String)>> {
    let files = collect_inputs(dir, "png")?;
    Ok(files
        .iter()
        .map(|p| {
            let stem = stem_of(p);
            let class = class_of(&stem);
            (stem, class)
        })
        .collect())
}

fn split_ratios(train: Option<f64>, val: Option<f64>, test: Option<f64>) -> SplitRatios {
    let d = SplitRatios::default();
    SplitRatios {
        train: train.unwrap_or(d.train),
        val: val.unwrap_or(d.val),
        test: test.unwrap_or(d.test),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_split(
    dir: Option<&Path>,
    index: Option<&Path>,
    out: &Path,
    settings: &Settings,
    train: Option<f64>,
    val: Option<f64>,
    test: Option<f64>,
) -> Result<ExitCode> {
    let index = match (dir, index) {
        (Some(d), None) => index_from_dir(d)?,
        (None, Some(f)) => read_index_file(f)?,
        _ => return Err(usage("pass exactly one of --dir or --index")),
    };
    let rows = make_split(&index, &split_ratios(train, val, test), settings.seed)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_atomic(out, split_to_manifest(&rows).as_bytes())?;
    log(&format!("{} shapes split into {}", rows.len(), out.display()));
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(track: Track, pred: &Path, gt: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let report = batch_evaluate(track, pred, gt)?;
    let csv = report.to_csv_string();
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            write_atomic(path, csv.as_bytes())?;
        }
        None => print!("{csv}"),
    }
    log(&format!(
        "aggregate {} = {} over {} shapes ({} errors)",
        track.metric_name(),
        report.aggregate,
        report.rows.len(),
        report.errors
    ));
    Ok(exit_for(report.errors))
}

#[allow(clippy::too_many_arguments)]
fn cmd_pipeline(
    input: &Path,
    out_dir: &Path,
    settings: &Settings,
    epsilon: Option<f64>,
    h: Option<f64>,
    noise: Option<NoiseArg>,
    noise_scale: Option<f64>,
) -> Result<ExitCode> {
    let files = collect_inputs(input, "png")?;
    for sub in ["shapes", "skeletons", "rasters", "clouds", "parametric"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }
    let failures = for_each_input(&files, |path| {
        let stem = stem_of(path);
        let img = BinaryImage::load_png(path)?;
        let (cleaned, graph, eps, review) = skeletonize_one(&img, epsilon)?;

        write_atomic(
            &out_dir.join("shapes").join(format!("{stem}.png")),
            &cleaned.to_png_bytes()?,
        )?;
        write_atomic(
            &out_dir.join("skeletons").join(format!("{stem}.skel")),
            graph.to_text().as_bytes(),
        )?;
        let raster = render_skeleton_image(&graph, &identity_transform(), &cleaned)?;
        write_atomic(
            &out_dir.join("rasters").join(format!("{stem}.png")),
            &raster.to_png_bytes()?,
        )?;

        let contour = extract_contour(&cleaned)?;
        let cfg = SamplingConfig {
            h: h.unwrap_or(settings.h),
            noise: noise.map(NoiseKind::from).unwrap_or(settings.noise),
            noise_scale: noise_scale.unwrap_or(settings.noise_scale),
            seed: shape_seed(settings.seed, &stem),
        };
        let cloud = sample_point_cloud(&contour, &cfg)?;
        let labels = label_skeleton_points(&cloud, &graph, cfg.h);
        write_atomic(
            &out_dir.join("clouds").join(format!("{stem}.pts")),
            points_to_pts(&cloud, Some(&labels)).as_bytes(),
        )?;

        let parametric = parametrize_graph(&graph, &settings.tol)?;
        write_atomic(
            &out_dir.join("parametric").join(format!("{stem}.csv")),
            parametric.to_csv_string().as_bytes(),
        )?;

        let mark = if review { " (needs review)" } else { "" };
        Ok(format!(
            "{stem}: epsilon={eps} nodes={} branches={} points={}{mark}",
            graph.nodes.len(),
            parametric.branches.len(),
            cloud.len()
        ))
    });

    // split over the shapes that made it through
    match index_from_dir(&out_dir.join("shapes")) {
        Ok(index) => match make_split(&index, &SplitRatios::default(), settings.seed) {
            Ok(rows) => {
                write_atomic(&out_dir.join("split.tsv"), split_to_manifest(&rows).as_bytes())?;
                log(&format!("split.tsv: {} shapes", rows.len()));
            }
            Err(e) => log(&format!("split skipped: {e}")),
        },
        Err(e) => log(&format!("split skipped: {e}")),
    }
    Ok(exit_for(failures))
}

/// Static SVG figure: the shape silhouette, faint medial disks, skeleton
/// edges, and nodes.
fn skeleton_svg(graph: &SkeletonGraph, shape: Option<&BinaryImage>) -> Result<String> {
    let (view, outline) = match shape {
        Some(img) => {
            let contour = extract_contour(img)?;
            let pts: String = contour
                .vertices()
                .iter()
                .map(|p| format!("{},{}", p.x, p.y))
                .collect::<Vec<_>>()
                .join(" ");
            (
                format!("0 0 {} {}", img.width(), img.height()),
                Some(pts),
            )
        }
        None => {
            let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
            let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for m in &graph.nodes {
                min_x = min_x.min(m.pos.x - m.r);
                min_y = min_y.min(m.pos.y - m.r);
                max_x = max_x.max(m.pos.x + m.r);
                max_y = max_y.max(m.pos.y + m.r);
            }
            if graph.nodes.is_empty() {
                (String::from("0 0 1 1"), None)
            } else {
                (
                    format!(
                        "{} {} {} {}",
                        min_x - 4.0,
                        min_y - 4.0,
                        max_x - min_x + 8.0,
                        max_y - min_y + 8.0
                    ),
                    None,
                )
            }
        }
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{view}\">\n"
    );
    if let Some(points) = outline {
        svg.push_str(&format!(
            "  <polygon points=\"{points}\" fill=\"#e8e8e8\" stroke=\"#888888\" stroke-width=\"1\"/>\n"
        ));
    }
    svg.push_str("  <g fill=\"#f2a65a\" fill-opacity=\"0.12\">\n");
    for m in &graph.nodes {
        svg.push_str(&format!(
            "    <circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n",
            m.pos.x, m.pos.y, m.r
        ));
    }
    svg.push_str("  </g>\n  <g stroke=\"#2d6da3\" stroke-width=\"1.5\" stroke-linecap=\"round\">\n");
    for &(a, b) in &graph.edges {
        let (pa, pb) = (graph.nodes[a].pos, graph.nodes[b].pos);
        svg.push_str(&format!(
            "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
            pa.x, pa.y, pb.x, pb.y
        ));
    }
    svg.push_str("  </g>\n  <g fill=\"#b23a2e\">\n");
    for m in &graph.nodes {
        svg.push_str(&format!(
            "    <circle cx=\"{}\" cy=\"{}\" r=\"1.4\"/>\n",
            m.pos.x, m.pos.y
        ));
    }
    svg.push_str("  </g>\n</svg>\n");
    Ok(svg)
}

fn cmd_render(skeleton: &Path, out: &Path, shape: Option<&Path>) -> Result<ExitCode> {
    let graph = SkeletonGraph::read_text_file(skeleton)?;
    let img = match shape {
        Some(p) => Some(BinaryImage::load_png(p)?),
        None => None,
    };
    let svg = skeleton_svg(&graph, img.as_ref())?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_atomic(out, svg.as_bytes())?;
    log(&format!("wrote {}", out.display()));
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let settings = resolve_settings(&cli)?;
    if let Some(jobs) = settings.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    match &cli.cmd {
        Cmd::Skeletonize {
            input,
            out_dir,
            epsilon,
        } => cmd_skeletonize(input, out_dir, *epsilon),
        Cmd::Parametrize {
            input,
            out_dir,
            tau_wedf,
            tau_eq,
        } => {
            let tol = MergeTolerances {
                tau_wedf: tau_wedf.unwrap_or(settings.tol.tau_wedf),
                tau_eq: tau_eq.unwrap_or(settings.tol.tau_eq),
            };
            cmd_parametrize(input, out_dir, tol)
        }
        Cmd::Rasterize {
            skeletons,
            shapes,
            out_dir,
        } => cmd_rasterize(skeletons, shapes, out_dir),
        Cmd::Sample {
            input,
            out_dir,
            h,
            noise,
            noise_scale,
            factor,
        } => cmd_sample(input, out_dir, &settings, *h, *noise, *noise_scale, *factor),
        Cmd::Label {
            clouds,
            skeletons,
            out_dir,
            h,
        } => cmd_label(clouds, skeletons, out_dir, &settings, *h),
        Cmd::Split {
            dir,
            index,
            out,
            train,
            val,
            test,
        } => cmd_split(
            dir.as_deref(),
            index.as_deref(),
            out,
            &settings,
            *train,
            *val,
            *test,
        ),
        Cmd::EvaluatePixel { pred, gt, out } => {
            cmd_evaluate(Track::Pixel, pred, gt, out.as_deref())
        }
        Cmd::EvaluatePoint { pred, gt, out } => {
            cmd_evaluate(Track::Point, pred, gt, out.as_deref())
        }
        Cmd::EvaluateParametric { pred, gt, out } => {
            cmd_evaluate(Track::Parametric, pred, gt, out.as_deref())
        }
        Cmd::Pipeline {
            input,
            out_dir,
            epsilon,
            h,
            noise,
            noise_scale,
        } => cmd_pipeline(
            input,
            out_dir,
            &settings,
            *epsilon,
            *h,
            *noise,
            *noise_scale,
        ),
        Cmd::Render {
            skeleton,
            out,
            shape,
        } => cmd_render(skeleton, out, shape.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
