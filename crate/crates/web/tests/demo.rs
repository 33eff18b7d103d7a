use radar4d_web::Demo;
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn frame_view_is_consistent() {
    let demo = Demo::new();
    let scene = parse(&demo.scene_json());
    assert_eq!(scene["frames"], 100);

    let f = parse(&demo.frame_json(10).unwrap());
    let n = f["points"].as_array().unwrap().len();
    assert_eq!(f["source"].as_array().unwrap().len(), n);
    assert_eq!(f["kept"].as_array().unwrap().len(), n);
    assert_eq!(f["cluster"].as_array().unwrap().len(), n);

    let kept = f["kept"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|k| k.as_bool().unwrap())
        .count();
    let rejected: u64 = f["rejected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_u64().unwrap())
        .sum();
    assert_eq!(kept as u64 + rejected, n as u64);

    // Clustered points are always kept points.
    for (c, k) in f["cluster"]
        .as_array()
        .unwrap()
        .iter()
        .zip(f["kept"].as_array().unwrap())
    {
        if c.as_i64().unwrap() >= 0 {
            assert!(k.as_bool().unwrap());
        }
    }
    let pedestrians = f["detections"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|d| d["label"] == "Pedestrian")
        .count();
    assert_eq!(pedestrians, 2);
}

#[test]
fn parameters_change_the_result() {
    let mut demo = Demo::new();
    let before = parse(&demo.frame_json(0).unwrap());
    demo.set_cluster(0.5, 1000).unwrap();
    let after = parse(&demo.frame_json(0).unwrap());
    assert!(!before["detections"].as_array().unwrap().is_empty());
    assert!(after["detections"].as_array().unwrap().is_empty());

    demo.set_cluster(0.5, 5).unwrap();
    demo.set_filter(-100.0, 100.0, 90.0, 90.0, false).unwrap();
    let open = parse(&demo.frame_json(0).unwrap());
    assert!(open["kept"].as_array().unwrap().iter().all(|k| k.as_bool().unwrap()));
}

#[test]
fn simulate_and_sweep() {
    let mut demo = Demo::new();
    let scene = parse(&demo.simulate(4, 12, 3, true).unwrap());
    assert_eq!(scene["frames"], 12);
    assert_eq!(scene["dust_level"], 4);

    let rows = parse(&demo.sweep_json(20).unwrap());
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let raw: Vec<f64> = rows.iter().map(|r| r["raw"].as_f64().unwrap()).collect();
    assert!(raw.windows(2).all(|w| w[1] > w[0]));
    assert!(rows.iter().all(|r| r["recall"].as_f64().unwrap() >= 0.95));
    assert!(demo.rules().contains("otherwise -> Unknown"));
}
