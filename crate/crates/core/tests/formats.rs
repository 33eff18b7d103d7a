use std::io::BufReader;

use radar4d::io::{
    read_detections, read_frames, read_ground_truth, read_reports, write_detections, write_frames, write_ground_truth,
    write_reports, FrameIoError,
};
use radar4d::point::SIM_ANGLE_TOLERANCE;
use radar4d::{run_pipeline, simulate, Frame, GroundTruth, PipelineConfig, SceneSpec};

fn scene(frames: usize, dust: usize) -> (Vec<Frame>, Vec<GroundTruth>) {
    let mut spec = SceneSpec::default_scene();
    spec.frame_count = frames;
    spec.dust_level = dust;
    simulate(spec).unwrap().unzip()
}

#[test]
fn simulated_stream_survives_the_text_format() {
    let (frames, _) = scene(30, 2);
    let mut buf = Vec::new();
    write_frames(&mut buf, &frames).unwrap();
    let back: Vec<Frame> = read_frames(BufReader::new(&buf[..]))
        .validating(SIM_ANGLE_TOLERANCE)
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(back.len(), frames.len());
    for (a, b) in frames.iter().zip(&back) {
        assert_eq!(a.seq, b.seq);
        assert_eq!(a.timestamp, b.timestamp);
        assert_eq!(a.len(), b.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!([p.x, p.y, p.z, p.rcs, p.v], [q.x, q.y, q.z, q.rcs, q.v]);
            assert!((p.azimuth - q.azimuth).abs() <= 1e-12);
            assert!((p.elevation - q.elevation).abs() <= 1e-12);
        }
    }
}

#[test]
fn ground_truth_round_trips_as_json_lines() {
    let (_, truth) = scene(10, 1);
    let mut buf = Vec::new();
    for t in &truth {
        write_ground_truth(&mut buf, t).unwrap();
    }
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 10);
    assert_eq!(read_ground_truth(&buf[..]).unwrap(), truth);
}

#[test]
fn detection_and_report_tables_round_trip() {
    let (frames, _) = scene(40, 1);
    let out = run_pipeline(&frames, &PipelineConfig::shipped_default()).unwrap();

    let table = write_detections(Vec::new(), &out.detections).unwrap();
    let header = std::str::from_utf8(&table).unwrap().lines().next().unwrap().to_owned();
    assert!(header.starts_with("seq,cluster_id,label,rule,size"));
    let back = read_detections(&table[..]).unwrap();
    let non_empty: Vec<_> = out
        .detections
        .iter()
        .filter(|f| !f.detections.is_empty())
        .cloned()
        .collect();
    assert_eq!(back, non_empty);

    let table = write_reports(Vec::new(), &out.reports).unwrap();
    assert_eq!(read_reports(&table[..]).unwrap(), out.reports);
}

#[test]
fn reader_reports_line_numbers() {
    let text = "# header\n0,0.0\n1,0.1,1,2\n";
    let err = read_frames(text.as_bytes()).collect::<Result<Vec<_>, _>>().unwrap_err();
    assert!(matches!(err, FrameIoError::Parse { line: 3, .. }), "{err}");

    let text = "5,0.5\n5,0.6\n";
    let err = read_frames(text.as_bytes()).collect::<Result<Vec<_>, _>>().unwrap_err();
    assert!(matches!(err, FrameIoError::NonMonotonicSeq { line: 2, .. }), "{err}");
}

#[test]
fn shipped_config_file_loads_from_disk() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/pipeline.toml");
    assert_eq!(PipelineConfig::load(path).unwrap(), PipelineConfig::shipped_default());
    assert!(PipelineConfig::load("/nonexistent/pipeline.toml").is_err());
}
