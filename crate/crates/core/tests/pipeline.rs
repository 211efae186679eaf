use std::fs;

use ecl_core::baselines::KMeansConfig;
use ecl_core::bench::{
    compare_methods, export_report, generate_synthetic, BenchConfig, BenchData, Method, RunReport,
    SyntheticFeature, SyntheticSpec,
};
use ecl_core::contrastive::{
    detect_anomalies, embed, score_against_reference, train, EncoderModel, PairPolicy, PairScope,
    TrainConfig,
};
use ecl_core::timeseries::{load_csv, select_features, write_csv, IngestConfig};
use ecl_core::{Error, ErrorKind};

fn small_train() -> (TrainConfig, PairPolicy) {
    (
        TrainConfig {
            epochs: 3,
            window: 12,
            hidden_size: 4,
            embedding_size: 4,
            ..Default::default()
        },
        PairPolicy {
            negative_min_gap: 48,
            ..Default::default()
        },
    )
}

fn small_spec() -> SyntheticSpec {
    let mut spec = SyntheticSpec::default_scenario();
    spec.length = 480;
    spec.injections.truncate(2);
    spec
}

#[test]
fn csv_round_trip_feeds_training_and_detection() {
    let (m, _) = generate_synthetic(&small_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_csv(&m, fs::File::create(&path).unwrap()).unwrap();
    let loaded = load_csv(&path, &IngestConfig::default()).unwrap();
    assert_eq!(loaded, m);

    let ranking = select_features(&loaded, "Energy", 2).unwrap();
    assert_eq!(ranking.entries.len(), 2);
    assert!(ranking.entries[0].1 >= ranking.entries[1].1);

    let (cfg, policy) = small_train();
    let (model, losses) = train(&loaded, "Energy", &cfg, &policy).unwrap();
    assert_eq!(losses.len(), 3);

    let ckpt = dir.path().join("model.json");
    model.save(&ckpt).unwrap();
    let reloaded = EncoderModel::load(&ckpt).unwrap();
    assert_eq!(fs::read_to_string(&ckpt).unwrap(), reloaded.to_json());

    let pairs = detect_anomalies(
        "Energy",
        &reloaded,
        &loaded,
        0.5,
        &policy,
        PairScope::Similar,
    )
    .unwrap();
    let windows = reloaded.windows_for(&loaded).unwrap();
    assert_eq!(pairs.len(), windows.len() - 1);
    assert!(matches!(
        detect_anomalies(
            "Power",
            &reloaded,
            &loaded,
            0.5,
            &policy,
            PairScope::Similar
        ),
        Err(Error::IncompatibleModel(_))
    ));
}

#[test]
fn reference_scoring_of_training_windows_is_zero() {
    let (m, _) = generate_synthetic(&small_spec()).unwrap();
    let (cfg, policy) = small_train();
    let (model, _) = train(&m, "Energy", &cfg, &policy).unwrap();
    let reference = embed(&model, &model.windows_for(&m).unwrap()).unwrap();
    let r = score_against_reference(&model, &m, &reference, 0.5).unwrap();
    assert!(r.scores.iter().all(|&s| s == 0.0));
    assert_eq!(r.flagged_count(), 0);
    assert!(matches!(
        score_against_reference(&model, &m, &[], 0.5),
        Err(Error::EmptyReference)
    ));
}

fn small_bench() -> (BenchData, BenchConfig) {
    let mut spec = small_spec();
    spec.features
        .retain(|f: &SyntheticFeature| f.name == "Energy" || f.name == "Voltage");
    let (cfg, policy) = small_train();
    let config = BenchConfig {
        train: cfg,
        policy,
        kmeans: KMeansConfig {
            window: 12,
            ..Default::default()
        },
        ..Default::default()
    };
    (BenchData::from_spec(&spec).unwrap(), config)
}

#[test]
fn export_layout_and_reexport_is_byte_identical() {
    let (data, config) = small_bench();
    let features = vec!["Energy".to_string(), "Voltage".to_string()];
    let report = compare_methods(&data, &features, &Method::ALL, &[0, 1], &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let written = export_report(&report, &a).unwrap();
    export_report(&report, &b).unwrap();
    let mut names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "config.json",
            "counts.csv",
            "losses_Energy.csv",
            "losses_Energy.svg",
            "losses_Voltage.csv",
            "losses_Voltage.svg",
            "metrics.csv",
            "table1.csv"
        ]
    );
    for n in &names {
        assert_eq!(
            fs::read(a.join(n)).unwrap(),
            fs::read(b.join(n)).unwrap(),
            "{n}"
        );
    }
    let losses = fs::read_to_string(a.join("losses_Energy.csv")).unwrap();
    assert_eq!(losses.lines().count(), 1 + config.train.epochs);
    assert!(losses.starts_with("epoch,loss,seed_0,seed_1\n"));
    let metrics = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 * 3 * 2);
    let counts = fs::read_to_string(a.join("counts.csv")).unwrap();
    assert!(counts
        .lines()
        .any(|l| l.starts_with("Energy,contrastive,pair,")));
    assert!(counts
        .lines()
        .any(|l| l.starts_with("Energy,kmeans,instance,")));
}

#[test]
fn empty_report_exports_headers_only() {
    let report = RunReport {
        source: "none".into(),
        rows: 0,
        features: vec![],
        methods: vec![Method::Kmeans, Method::Skewness],
        seeds: vec![0],
        config: BenchConfig::default(),
        has_truth: true,
        cells: vec![],
        losses: vec![],
    };
    let dir = tempfile::tempdir().unwrap();
    export_report(&report, dir.path()).unwrap();
    for name in ["table1.csv", "counts.csv", "metrics.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
    }
    assert_eq!(
        fs::read_to_string(dir.path().join("table1.csv")).unwrap(),
        "feature,K-Means,Skewness\n"
    );
}

#[test]
fn export_to_unwritable_location_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let (data, config) = small_bench();
    let report = compare_methods(
        &data,
        &["Energy".into()],
        &[Method::Skewness],
        &[0],
        &config,
    )
    .unwrap();
    let err = export_report(&report, blocker.join("sub")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Io);
}
