use fibrescan::config::*;
use fibrescan::pipeline::*;
use fibrescan::report::{emit_report, Format};
use fibrescan::Error;

fn small_config(layout: &str, seed: u64) -> PipelineConfig {
    let text = format!(
        "seed = {seed}
simulation.layout = \"{layout}\"
simulation.dims = [150, 150, 150]
simulation.volume_fraction = 0.1
grid.cell_edge = 6
grid.window = 5
test.directions = {{ offset = 2, step = 2, min_extent = 6, gamma0 = 0.05, gamma1 = 0.5, m = 5, sigma2 = 0.2, m0 = 0.5 }}
test.entropy = {{ offset = 1, step = 1, min_extent = 1, gamma0 = 0.05, gamma1 = 0.5, m = 1, sigma2 = 0.5, m0 = 0.7071 }}
cluster.mode = \"always\"
cluster.fields = 50
"
    );
    PipelineConfig::parse(&text).unwrap()
}

#[test]
fn identical_seeds_give_identical_reports_and_files() {
    let a_dir = tempfile::tempdir().unwrap();
    let b_dir = tempfile::tempdir().unwrap();
    let mut a = small_config("layered", 3);
    a.out = Some(a_dir.path().to_path_buf());
    let mut b = a.clone();
    b.out = Some(b_dir.path().to_path_buf());
    let ra = run_pipeline(&a).unwrap().without_timings();
    let rb = run_pipeline(&b).unwrap().without_timings();
    let strip = |mut r: fibrescan::report::Report| {
        r.config.out = None;
        emit_report(&r, Format::Json).unwrap()
    };
    assert_eq!(strip(ra), strip(rb));
    for name in [
        FIBRES_FILE,
        DIRECTIONS_FILE,
        ENTROPY_FILE,
        FIELD_FILES[0],
        POSTERIORS_FILE,
        TEST_FILE,
    ] {
        let x = std::fs::read(a_dir.path().join(name)).unwrap();
        let y = std::fs::read(b_dir.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn separate_stages_reproduce_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config("layered", 5);
    cfg.out = Some(dir.path().to_path_buf());
    let report = run_pipeline(&cfg).unwrap();
    let fields = load_fields(dir.path(), &cfg.entropy).unwrap();
    let suite = run_tests(&fields, &cfg.test).unwrap();
    for (a, b) in suite.results.iter().zip(&report.suite.results) {
        assert_eq!(a.argmax, b.argmax);
        assert_eq!(a.reject, b.reject);
        assert!((a.statistic - b.statistic).abs() < 1e-9);
    }
    let c = cluster(&fields, &cfg.cluster, cfg.seed).unwrap().summary();
    assert_eq!(c.windows, report.clustering.windows);
    assert_eq!(c.anomaly_windows, report.clustering.anomaly_windows);
}

#[test]
fn report_renders_four_rows_and_round_trips() {
    let r = run_pipeline(&small_config("homogeneous", 1)).unwrap();
    let text = emit_report(&r, Format::Text).unwrap();
    for a in ["x ", "y ", "z ", "entropy "] {
        assert_eq!(
            text.lines().filter(|l| l.starts_with(a)).count(),
            1,
            "{text}"
        );
    }
    let json = emit_report(&r, Format::Json).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let back: fibrescan::report::Report = serde_json::from_value(value.clone()).unwrap();
    assert_eq!(back.suite.reject, r.suite.reject);
    assert_eq!(back.clustering.anomaly_box, r.clustering.anomaly_box);
    assert_eq!(serde_json::to_value(&back).unwrap(), value);
}

#[test]
fn tiny_p_values_stay_in_scientific_notation() {
    let mut r = run_pipeline(&small_config("homogeneous", 2)).unwrap();
    r.suite.results[0].p_bound = 4.6e-30;
    let text = emit_report(&r, Format::Text).unwrap();
    assert!(text.contains("4.600e-30"), "{text}");
}

#[test]
fn zero_alpha_is_an_invalid_argument() {
    let mut cfg = small_config("homogeneous", 1);
    cfg.test.alpha = 0.0;
    assert!(matches!(run_pipeline(&cfg), Err(Error::InvalidArgument(_))));
}

#[test]
fn stage_failures_name_the_stage() {
    let mut cfg = small_config("homogeneous", 1);
    cfg.test.entropy.min_extent = 100;
    match run_pipeline(&cfg) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "test"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn cluster_data_follows_the_attribute_selection() {
    use fibrescan::field::WindowAggregate;
    let w = vec![
        WindowAggregate {
            window: [0, 0, 0],
            count: 3,
            mld: [0.1, 0.2, 0.3],
            entropy: Some(1.5),
        },
        WindowAggregate {
            window: [1, 0, 0],
            count: 3,
            mld: [0.4, 0.5, 0.6],
            entropy: None,
        },
    ];
    assert_eq!(cluster_data(&w, AttributeSet::Mld).1.len(), 2);
    let (idx, rows) = cluster_data(&w, AttributeSet::Combined);
    assert_eq!(idx, vec![[0, 0, 0]]);
    assert_eq!(rows, vec![vec![1.5, 0.1, 0.2, 0.3]]);
    assert_eq!(cluster_data(&w, AttributeSet::Entropy).1, vec![vec![1.5]]);
}

#[test]
fn slab_truth_uses_window_centres() {
    let w = [[0, 0, 0], [0, 0, 1], [0, 0, 2]];
    assert_eq!(slab_truth(&w, 10.0, (10.0, 20.0)), vec![false, true, false]);
}
