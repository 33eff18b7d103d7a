//! `radar4d` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, config or scene file),
//! 2 data error (unreadable or malformed streams, misaligned inputs).

mod args;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use radar4d::io::{
    cluster_label_writer, read_detections, read_frames, read_ground_truth, read_reports, write_cluster_labels,
    write_frame, write_ground_truth, write_summary, DetectionWriter, FrameIoError, ReportWriter, FRAME_HEADER,
};
use radar4d::metrics::{bench, evaluate, LatencyStats};
use radar4d::pipeline::duration_ms;
use radar4d::sim::simulate_sweep;
use radar4d::{
    classify_frame, extract_clusters, filter_frame, process_frame, simulate, Frame, FrameDetections, FrameReport,
    KdTree, PipelineConfig, SceneSpec,
};

use args::{
    BenchArgs, ClassifyArgs, Cli, ClusterArgs, ClusterOverrides, Command, EvaluateArgs, FilterArgs, FilterOverrides,
    PipelineArgs, SimulateArgs,
};

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn data(e: impl Display) -> Failure {
    Failure::Data(e.to_string())
}

fn stream(e: FrameIoError) -> Failure {
    Failure::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (e.g. `| head`) is not a failure.
        Err(Failure::Data(msg)) if msg.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Data(msg)) = &f;
            eprintln!("radar4d: {msg}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let path = cli.config.as_deref();
    let config = || load_config(path);
    match cli.command {
        Command::Simulate(a) => simulate_cmd(a, cli.seed),
        Command::Filter(a) => filter_cmd(a, &config()?),
        Command::Cluster(a) => cluster_cmd(a, &config()?),
        Command::Classify(a) => classify_cmd(a, &config()?),
        Command::Pipeline(a) => pipeline_cmd(a, &config()?),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Bench(a) => bench_cmd(a, &config()?, cli.seed.unwrap_or(0)),
        Command::Rules => {
            print!("{}", config()?.classify.rules);
            Ok(())
        }
        Command::DefaultConfig => {
            print!("{}", PipelineConfig::shipped_default_text());
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(path) => PipelineConfig::load(path).map_err(usage),
        None => Ok(PipelineConfig::shipped_default()),
    }
}

fn apply_filter(cfg: &mut PipelineConfig, o: &FilterOverrides) -> Outcome {
    let f = &mut cfg.filter;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut f.rcs_min, o.rcs_min);
    set(&mut f.rcs_max, o.rcs_max);
    set(&mut f.az_min, o.az_min_deg.map(f64::to_radians));
    set(&mut f.az_max, o.az_max_deg.map(f64::to_radians));
    set(&mut f.el_min, o.el_min_deg.map(f64::to_radians));
    set(&mut f.el_max, o.el_max_deg.map(f64::to_radians));
    set(&mut f.v_abs_max, o.v_abs_max);
    set(&mut f.static_band, o.static_band);
    set(&mut f.static_range_min, o.static_range_min);
    set(&mut f.static_range_max, o.static_range_max);
    if let Some(on) = o.static_gate {
        f.enable_static_gate = on;
    }
    cfg.validate().map_err(usage)
}

fn apply_cluster(cfg: &mut PipelineConfig, o: &ClusterOverrides) -> Outcome {
    if let Some(r) = o.radius {
        cfg.cluster.radius = r;
    }
    if let Some(n) = o.min_size {
        cfg.cluster.min_cluster_size = n;
    }
    cfg.validate().map_err(usage)
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>, Failure> {
    if path == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file = File::open(path).map_err(|e| data(format!("cannot open {path}: {e}")))?;
    Ok(Box::new(BufReader::new(file)))
}

fn open_output(path: &str) -> Result<Box<dyn Write>, Failure> {
    if path == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).map_err(|e| data(format!("cannot create {path}: {e}")))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn single_stdin(paths: &[&str]) -> Outcome {
    if paths.iter().filter(|p| **p == "-").count() > 1 {
        return Err(usage("at most one input can be read from stdin"));
    }
    Ok(())
}

/// Frame stream honouring the config's ingest validation.
fn frames(path: &str, cfg: &PipelineConfig) -> Result<impl Iterator<Item = Result<Frame, FrameIoError>>, Failure> {
    let reader = read_frames(open_input(path)?);
    Ok(if cfg.io.validate_input {
        reader.validating(cfg.io.angle_tolerance)
    } else {
        reader
    })
}

fn simulate_cmd(a: SimulateArgs, seed: Option<u64>) -> Outcome {
    let mut spec = match &a.scene {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            SceneSpec::from_toml(&text).map_err(usage)?
        }
        None => SceneSpec::default_scene(),
    };
    if let Some(seed) = seed {
        spec.rng_seed = seed;
    }
    if let Some(n) = a.frames {
        spec.frame_count = n;
    }
    let scene: Box<dyn Iterator<Item = _>> = match &a.levels {
        Some(levels) => Box::new(simulate_sweep(&spec, levels).map_err(usage)?),
        None => Box::new(simulate(spec).map_err(usage)?),
    };

    let mut out = open_output(&a.output)?;
    let mut truth = a.truth.as_deref().map(open_output).transpose()?;
    writeln!(out, "{FRAME_HEADER}").map_err(data)?;
    for (frame, gt) in scene {
        write_frame(&mut out, &frame).map_err(stream)?;
        if let Some(t) = truth.as_mut() {
            write_ground_truth(t, &gt).map_err(stream)?;
        }
    }
    out.flush().map_err(data)?;
    if let Some(mut t) = truth {
        t.flush().map_err(data)?;
    }
    Ok(())
}

fn filter_cmd(a: FilterArgs, cfg: &PipelineConfig) -> Outcome {
    let mut cfg = cfg.clone();
    apply_filter(&mut cfg, &a.filter)?;
    let mut out = open_output(&a.io.output)?;
    let mut reports = a.report.as_deref().map(open_output).transpose()?.map(ReportWriter::new);
    writeln!(out, "{FRAME_HEADER}").map_err(data)?;
    for frame in frames(&a.io.input, &cfg)? {
        let frame = frame.map_err(stream)?;
        let start = Instant::now();
        let (kept, report) = filter_frame(&frame, &cfg.filter);
        let latency_ms = duration_ms(start.elapsed());
        write_frame(&mut out, &kept).map_err(stream)?;
        if let Some(w) = reports.as_mut() {
            w.write(&FrameReport {
                seq: frame.seq,
                timestamp: frame.timestamp,
                dust_level: None,
                filter: report,
                clusters: 0,
                pedestrians: 0,
                latency_ms,
            })
            .map_err(stream)?;
        }
    }
    out.flush().map_err(data)?;
    if let Some(w) = reports {
        w.finish().map_err(stream)?.flush().map_err(data)?;
    }
    Ok(())
}

fn cluster_cmd(a: ClusterArgs, cfg: &PipelineConfig) -> Outcome {
    let mut cfg = cfg.clone();
    apply_cluster(&mut cfg, &a.cluster)?;
    let mut w = cluster_label_writer(open_output(&a.io.output)?).map_err(stream)?;
    for frame in frames(&a.io.input, &cfg)? {
        let frame = frame.map_err(stream)?;
        let tree = KdTree::build(&frame);
        let clustering =
            extract_clusters(&frame, &tree, cfg.cluster.radius, cfg.cluster.min_cluster_size).map_err(data)?;
        write_cluster_labels(&mut w, frame.seq, &clustering).map_err(stream)?;
    }
    w.flush().map_err(data)?;
    Ok(())
}

fn classify_cmd(a: ClassifyArgs, cfg: &PipelineConfig) -> Outcome {
    let mut cfg = cfg.clone();
    apply_cluster(&mut cfg, &a.cluster)?;
    let mut w = DetectionWriter::new(open_output(&a.io.output)?).map_err(stream)?;
    for frame in frames(&a.io.input, &cfg)? {
        let frame = frame.map_err(stream)?;
        let tree = KdTree::build(&frame);
        let clustering =
            extract_clusters(&frame, &tree, cfg.cluster.radius, cfg.cluster.min_cluster_size).map_err(data)?;
        let detections =
            classify_frame(&frame, &clustering, &cfg.classify.rules, cfg.classify.rcs_bin_width).map_err(data)?;
        w.write(&FrameDetections {
            seq: frame.seq,
            detections,
        })
        .map_err(stream)?;
    }
    w.finish().map_err(stream)?.flush().map_err(data)?;
    Ok(())
}

fn pipeline_cmd(a: PipelineArgs, cfg: &PipelineConfig) -> Outcome {
    let mut cfg = cfg.clone();
    apply_filter(&mut cfg, &a.filter)?;
    apply_cluster(&mut cfg, &a.cluster)?;
    let mut inputs = vec![a.io.input.as_str()];
    inputs.extend(a.truth.as_deref());
    single_stdin(&inputs)?;

    let dust: Option<BTreeMap<u64, usize>> = match &a.truth {
        Some(path) => Some(
            read_ground_truth(open_input(path)?)
                .map_err(stream)?
                .into_iter()
                .map(|t| (t.seq, t.dust_level))
                .collect(),
        ),
        None => None,
    };

    let mut dets = DetectionWriter::new(open_output(&a.io.output)?).map_err(stream)?;
    let mut reports = a
        .reports
        .as_deref()
        .map(open_output)
        .transpose()?
        .map(ReportWriter::new);
    let mut latencies = Vec::new();
    for frame in frames(&a.io.input, &cfg)? {
        let frame = frame.map_err(stream)?;
        let mut out = process_frame(&frame, &cfg).map_err(data)?;
        if let Some(dust) = &dust {
            let level = dust
                .get(&frame.seq)
                .ok_or_else(|| data(format!("frame {} has no ground truth", frame.seq)))?;
            out.report.dust_level = Some(*level);
        }
        latencies.push(out.report.latency_ms);
        dets.write(&out.detections).map_err(stream)?;
        if let Some(w) = reports.as_mut() {
            w.write(&out.report).map_err(stream)?;
        }
    }
    dets.finish().map_err(stream)?.flush().map_err(data)?;
    if let Some(w) = reports {
        w.finish().map_err(stream)?.flush().map_err(data)?;
    }
    let lat = LatencyStats::from_samples(&latencies);
    eprintln!(
        "{} frames; latency p50 {:.3} ms, p95 {:.3} ms, p99 {:.3} ms",
        latencies.len(),
        lat.p50_ms,
        lat.p95_ms,
        lat.p99_ms
    );
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Outcome {
    single_stdin(&[&a.detections, &a.reports, &a.truth])?;
    if a.match_radius.is_nan() || a.match_radius < 0.0 {
        return Err(usage("--match-radius must be non-negative"));
    }
    let detections = read_detections(open_input(&a.detections)?).map_err(stream)?;
    let reports = read_reports(open_input(&a.reports)?).map_err(stream)?;
    let truth = read_ground_truth(open_input(&a.truth)?).map_err(stream)?;
    let summary = evaluate(&detections, &reports, &truth, a.match_radius).map_err(data)?;
    if let Some(path) = &a.csv {
        write_summary(open_output(path)?, &summary)
            .map_err(stream)?
            .flush()
            .map_err(data)?;
    }
    let mut out = io::stdout().lock();
    write!(out, "{}", summary.render()).map_err(data)?;
    out.flush().map_err(data)
}

fn bench_cmd(a: BenchArgs, cfg: &PipelineConfig, seed: u64) -> Outcome {
    if a.sizes.is_empty() || a.frames == 0 {
        return Err(usage("bench needs at least one size and one frame"));
    }
    let rows = bench(&a.sizes, a.frames, seed, cfg).map_err(data)?;
    let mut out = open_output(&a.output)?;
    let io = |e: io::Error| data(e);
    writeln!(
        out,
        "points,frames,filter_median_ms,pipeline_p50_ms,pipeline_p95_ms,pipeline_p99_ms"
    )
    .map_err(io)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.points, r.frames, r.filter_median_ms, r.pipeline.p50_ms, r.pipeline.p95_ms, r.pipeline.p99_ms
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}
