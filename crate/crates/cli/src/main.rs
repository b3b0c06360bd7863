//! Command-line front end: track a sequence, evaluate batches, synthesize
//! test sequences, and inspect frames or model snapshots.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

mod draw;

use clap::{Parser, Subcommand};
use spikes_track::evaluation::{
    self, load_sequence, run_ope, write_curve_svg, write_curves_csv, write_summary_csv,
};
use spikes_track::synthdata::{generate, ScenarioSpec};
use spikes_track::tracker::{ModelSnapshot, SpikesTracker};
use spikes_track::{
    plan_for_box_density, segment, BoundingBox, FeatureBackend, GradientFeatures, TrackerConfig,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "spikes-track", version, about = "Superpixel-keypoint part tracker")]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a target through a directory of numbered frames.
    Track {
        /// Sequence directory (zero-padded PNG/JPG frames).
        seq: PathBuf,
        /// Initial box `x,y,w,h`; defaults to the first groundtruth line.
        #[arg(long)]
        init: Option<String>,
        /// Tracker configuration file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "track_out")]
        output: PathBuf,
        /// Write annotated overlay PNGs (box, votes, matched centers).
        #[arg(long)]
        overlay: bool,
        /// Write a model snapshot JSON after every frame.
        #[arg(long)]
        snapshots: bool,
        /// Restrict segmentation and detection to a window around the
        /// last center.
        #[arg(long)]
        search_window: bool,
        /// Groundtruth coordinates are 1-indexed.
        #[arg(long)]
        one_indexed: bool,
    },
    /// One-pass evaluation over a list of sequences.
    Eval {
        /// Text file naming one sequence directory per line.
        list: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "eval_out")]
        output: PathBuf,
        /// Echo groundtruth instead of tracking (harness self-check).
        #[arg(long)]
        oracle: bool,
        /// Also write precision.svg and success.svg plots.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        one_indexed: bool,
    },
    /// Render a synthetic sequence with exact groundtruth.
    Synth {
        /// Scenario spec JSON; omit when using --demo.
        spec: Option<PathBuf>,
        /// Builtin scenario: translate, occlude, illum, deform, clutter.
        #[arg(long)]
        demo: Option<String>,
        #[arg(long, default_value = "synth_out")]
        output: PathBuf,
    },
    /// Diagnostic dumps for a frame or a model snapshot.
    Inspect {
        /// Frame image: writes overlay.png, labels.pgm, spikes.jsonl,
        /// keypoints.csv.
        #[arg(long)]
        frame: Option<PathBuf>,
        /// Model snapshot JSON: writes model.csv.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Box `x,y,w,h` used for segmentation planning in frame mode;
        /// defaults to a centered quarter-frame box.
        #[arg(long)]
        init: Option<String>,
        #[arg(long, default_value = "inspect_out")]
        output: PathBuf,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CliResult = Result<(), Failure>;

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            std::process::exit(1);
        }
    }
    let result = match cli.command {
        Command::Track {
            seq,
            init,
            config,
            output,
            overlay,
            snapshots,
            search_window,
            one_indexed,
        } => cmd_track(
            &seq,
            init.as_deref(),
            config.as_deref(),
            &output,
            overlay,
            snapshots,
            search_window,
            one_indexed,
        ),
        Command::Eval {
            list,
            config,
            output,
            oracle,
            svg,
            one_indexed,
        } => cmd_eval(&list, config.as_deref(), &output, oracle, svg, one_indexed),
        Command::Synth { spec, demo, output } => cmd_synth(spec.as_deref(), demo.as_deref(), &output),
        Command::Inspect {
            frame,
            snapshot,
            config,
            init,
            output,
        } => cmd_inspect(
            frame.as_deref(),
            snapshot.as_deref(),
            config.as_deref(),
            init.as_deref(),
            &output,
        ),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}

fn load_config(path: Option<&Path>) -> Result<TrackerConfig, Failure> {
    match path {
        None => Ok(TrackerConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            TrackerConfig::parse(&text).map_err(|e| usage(e.to_string()))
        }
    }
}

fn parse_box(text: &str) -> Result<BoundingBox, Failure> {
    let fields: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--init expects `x,y,w,h`, got `{text}`")))?;
    if fields.len() != 4 {
        return Err(usage(format!("--init expects 4 fields, got {}", fields.len())));
    }
    if fields[2] <= 0.0 || fields[3] <= 0.0 {
        return Err(usage("--init box dimensions must be positive"));
    }
    Ok(BoundingBox::new(fields[0], fields[1], fields[2], fields[3]))
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let read = |d: &Path| -> std::io::Result<Vec<PathBuf>> {
        let mut frames: Vec<PathBuf> = std::fs::read_dir(d)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                    .unwrap_or(false)
            })
            .collect();
        frames.sort();
        Ok(frames)
    };
    let mut frames =
        read(dir).map_err(|e| usage(format!("cannot read sequence {}: {e}", dir.display())))?;
    if frames.is_empty() && dir.join("img").is_dir() {
        frames = read(&dir.join("img"))
            .map_err(|e| usage(format!("cannot read sequence {}: {e}", dir.display())))?;
    }
    if frames.len() < 2 {
        return Err(usage(format!(
            "{}: need at least 2 frames, found {}",
            dir.display(),
            frames.len()
        )));
    }
    Ok(frames)
}

#[allow(clippy::too_many_arguments)]
fn cmd_track(
    seq: &Path,
    init: Option<&str>,
    config_path: Option<&Path>,
    output: &Path,
    overlay: bool,
    snapshots: bool,
    search_window: bool,
    one_indexed: bool,
) -> CliResult {
    let mut config = load_config(config_path)?;
    if search_window {
        config.search_window = true;
    }
    let frames = list_frames(seq)?;
    let init_box = match init {
        Some(text) => parse_box(text)?,
        None => {
            let gt_path = seq.join("groundtruth_rect.txt");
            let text = std::fs::read_to_string(&gt_path).map_err(|e| {
                usage(format!(
                    "no --init and cannot read {}: {e}",
                    gt_path.display()
                ))
            })?;
            let boxes = evaluation::parse_groundtruth(&text, one_indexed)
                .map_err(|e| usage(e.to_string()))?;
            *boxes
                .first()
                .ok_or_else(|| usage(format!("{}: empty groundtruth", gt_path.display())))?
        }
    };

    std::fs::create_dir_all(output).map_err(|e| runtime(e.to_string()))?;
    let first = evaluation::load_frame(&frames[0], 0).map_err(|e| runtime(e.to_string()))?;
    let mut tracker =
        SpikesTracker::init(&first, &init_box, config).map_err(|e| runtime(e.to_string()))?;

    let mut csv = String::from("frame,x,y,w,h,occluded,n_matches\n");
    let center0 = init_box.center();
    let _ = writeln!(
        csv,
        "0,{},{},{},{},0,0",
        init_box.x, init_box.y, init_box.w, init_box.h
    );
    if snapshots {
        write_snapshot(&tracker.model.snapshot(), output, 1)?;
    }
    if overlay {
        let mut img = first.to_rgb_image();
        draw::draw_box(&mut img, &init_box, [220, 40, 40]);
        draw::draw_cross(&mut img, center0, 3, [40, 220, 220]);
        img.save(output.join("overlay_0001.png"))
            .map_err(|e| runtime(e.to_string()))?;
    }

    for (k, path) in frames.iter().enumerate().skip(1) {
        let frame = evaluation::load_frame(path, k).map_err(|e| runtime(e.to_string()))?;
        let outcome = tracker.step(&frame);
        let _ = writeln!(
            csv,
            "{k},{},{},{},{},{},{}",
            outcome.bbox.x,
            outcome.bbox.y,
            outcome.bbox.w,
            outcome.bbox.h,
            outcome.occluded as u8,
            outcome.n_valid_matches
        );
        if snapshots {
            write_snapshot(&tracker.model.snapshot(), output, k + 1)?;
        }
        if overlay {
            let mut img = frame.to_rgb_image();
            draw::draw_box(&mut img, &outcome.bbox, [220, 40, 40]);
            for vote in &outcome.votes {
                draw::draw_cross(&mut img, vote.position, 2, [40, 220, 220]);
            }
            for ms in &tracker.model.model_spikes {
                draw::draw_dot(&mut img, ms.spikes.center(), [60, 220, 60]);
            }
            img.save(output.join(format!("overlay_{:04}.png", k + 1)))
                .map_err(|e| runtime(e.to_string()))?;
        }
    }
    std::fs::write(output.join("boxes.csv"), csv).map_err(|e| runtime(e.to_string()))?;
    println!("tracked {} frames into {}", frames.len(), output.display());
    Ok(())
}

fn write_snapshot(snapshot: &ModelSnapshot, output: &Path, number: usize) -> CliResult {
    let text = serde_json::to_string_pretty(snapshot).map_err(|e| runtime(e.to_string()))?;
    std::fs::write(output.join(format!("model_{number:04}.json")), text)
        .map_err(|e| runtime(e.to_string()))
}

fn cmd_eval(
    list: &Path,
    config_path: Option<&Path>,
    output: &Path,
    oracle: bool,
    svg: bool,
    one_indexed: bool,
) -> CliResult {
    let config = load_config(config_path)?;
    let text = std::fs::read_to_string(list)
        .map_err(|e| usage(format!("cannot read list {}: {e}", list.display())))?;
    let dirs: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if dirs.is_empty() {
        return Err(usage(format!("{}: no sequences listed", list.display())));
    }

    let mut sequences = Vec::new();
    let mut load_errors = Vec::new();
    for dir in dirs {
        match load_sequence(Path::new(dir), one_indexed) {
            Ok(seq) => sequences.push(seq),
            Err(e) => load_errors.push((dir.to_string(), e.to_string())),
        }
    }
    for (name, err) in &load_errors {
        eprintln!("skipping {name}: {err}");
    }
    if sequences.is_empty() {
        return Err(runtime("every listed sequence failed to load"));
    }

    let report = run_ope(&sequences, &config, oracle);
    std::fs::create_dir_all(output).map_err(|e| runtime(e.to_string()))?;

    let mut curves = Vec::new();
    write_curves_csv(&report.pooled, &mut curves).map_err(|e| runtime(e.to_string()))?;
    std::fs::write(output.join("curves.csv"), curves).map_err(|e| runtime(e.to_string()))?;

    let mut summary = Vec::new();
    write_summary_csv(&report, &mut summary).map_err(|e| runtime(e.to_string()))?;
    let mut summary = String::from_utf8(summary).map_err(|e| runtime(e.to_string()))?;
    for (name, err) in &load_errors {
        let _ = writeln!(summary, "{name},load error: {},", err.replace(',', ";"));
    }
    std::fs::write(output.join("summary.csv"), summary).map_err(|e| runtime(e.to_string()))?;

    if svg {
        let mut buf = Vec::new();
        write_curve_svg(&report.pooled.precision, 50.0, "precision vs location error", &mut buf)
            .map_err(|e| runtime(e.to_string()))?;
        std::fs::write(output.join("precision.svg"), buf).map_err(|e| runtime(e.to_string()))?;
        let mut buf = Vec::new();
        write_curve_svg(&report.pooled.success, 1.0, "success vs overlap threshold", &mut buf)
            .map_err(|e| runtime(e.to_string()))?;
        std::fs::write(output.join("success.svg"), buf).map_err(|e| runtime(e.to_string()))?;
    }

    println!(
        "pooled precision@20 {:.4}, AUC {:.4} over {} sequences ({} failed)",
        report.pooled.precision_at_20,
        report.pooled.auc,
        report.per_sequence.len(),
        load_errors.len()
    );
    Ok(())
}

fn cmd_synth(spec_path: Option<&Path>, demo: Option<&str>, output: &Path) -> CliResult {
    let spec = match (spec_path, demo) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read spec {}: {e}", path.display())))?;
            serde_json::from_str::<ScenarioSpec>(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => match name {
            "translate" => ScenarioSpec::translate_demo(),
            "occlude" => ScenarioSpec::occlude_demo(),
            "illum" => ScenarioSpec::illum_demo(),
            "deform" => ScenarioSpec::deform_demo(),
            "clutter" => ScenarioSpec::clutter_demo(),
            _ => {
                return Err(usage(format!(
                    "unknown demo `{name}` (expected translate, occlude, illum, deform, clutter)"
                )))
            }
        },
        _ => return Err(usage("synth needs a spec file or --demo NAME")),
    };

    let rendered = generate(&spec, output).map_err(|e| match e {
        spikes_track::Error::Scenario(_) | spikes_track::Error::Json(_) => usage(e.to_string()),
        other => runtime(other.to_string()),
    })?;
    println!(
        "wrote {} frames + groundtruth + manifest to {}",
        rendered.frames.len(),
        output.display()
    );
    Ok(())
}

fn cmd_inspect(
    frame: Option<&Path>,
    snapshot: Option<&Path>,
    config_path: Option<&Path>,
    init: Option<&str>,
    output: &Path,
) -> CliResult {
    match (frame, snapshot) {
        (Some(frame_path), None) => inspect_frame(frame_path, config_path, init, output),
        (None, Some(snapshot_path)) => inspect_snapshot(snapshot_path, output),
        _ => Err(usage("inspect needs exactly one of --frame or --snapshot")),
    }
}

fn inspect_frame(
    path: &Path,
    config_path: Option<&Path>,
    init: Option<&str>,
    output: &Path,
) -> CliResult {
    let config = load_config(config_path)?;
    let frame = evaluation::load_frame(path, 0).map_err(|e| usage(e.to_string()))?;
    let bbox = match init {
        Some(text) => parse_box(text)?,
        None => BoundingBox::from_center(
            spikes_track::Vec2::new(frame.width() as f64 / 2.0, frame.height() as f64 / 2.0),
            (frame.width() as f64 / 4.0, frame.height() as f64 / 4.0),
        ),
    };

    let plan = plan_for_box_density(frame.dims(), (bbox.w, bbox.h), config.superpixels_per_box);
    let (superpixels, labels) = segment(&frame, &plan, config.compactness);
    let detector = GradientFeatures::new((plan.diameter / 2.0).round().max(2.0) as u32);
    let described = detector.detect_and_describe(&frame, config.max_keypoints);
    let radius = config.structure_radius_factor * plan.diameter;
    let spikes = spikes_track::build_spikes(superpixels, &described.keypoints, radius);

    std::fs::create_dir_all(output).map_err(|e| runtime(e.to_string()))?;

    let mut img = frame.to_rgb_image();
    draw::draw_superpixel_boundaries(&mut img, &labels, [0, 0, 0]);
    for kp in &described.keypoints {
        draw::draw_dot(&mut img, kp.position, [220, 40, 40]);
    }
    img.save(output.join("overlay.png")).map_err(|e| runtime(e.to_string()))?;

    let mut pgm = Vec::new();
    labels.write_pgm(&mut pgm).map_err(|e| runtime(e.to_string()))?;
    std::fs::write(output.join("labels.pgm"), pgm).map_err(|e| runtime(e.to_string()))?;

    let mut jsonl = Vec::new();
    spikes_track::spikes::write_jsonl(&spikes, &mut jsonl).map_err(|e| runtime(e.to_string()))?;
    std::fs::write(output.join("spikes.jsonl"), jsonl).map_err(|e| runtime(e.to_string()))?;

    let mut kp_csv = String::from("x,y,orientation,response\n");
    for kp in &described.keypoints {
        let _ = writeln!(
            kp_csv,
            "{},{},{},{}",
            kp.position.x, kp.position.y, kp.orientation, kp.response
        );
    }
    std::fs::write(output.join("keypoints.csv"), kp_csv).map_err(|e| runtime(e.to_string()))?;

    println!(
        "{} superpixels, {} keypoints -> {}",
        spikes.len(),
        described.keypoints.len(),
        output.display()
    );
    Ok(())
}

fn inspect_snapshot(path: &Path, output: &Path) -> CliResult {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read snapshot {}: {e}", path.display())))?;
    let snapshot: ModelSnapshot =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;

    std::fs::create_dir_all(output).map_err(|e| runtime(e.to_string()))?;
    let mut csv = String::from("center_x,center_y,vote_x,vote_y,persistence,predictive,age,n_links\n");
    for s in &snapshot.spikes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            s.center[0], s.center[1], s.vote[0], s.vote[1], s.persistence, s.predictive, s.age, s.n_links
        );
    }
    std::fs::write(output.join("model.csv"), csv).map_err(|e| runtime(e.to_string()))?;
    println!(
        "{} parts, pools {}/{}, box {}x{} -> {}",
        snapshot.spikes.len(),
        snapshot.fg_pool_size,
        snapshot.bg_pool_size,
        snapshot.bbox_dims.0,
        snapshot.bbox_dims.1,
        output.display()
    );
    Ok(())
}
