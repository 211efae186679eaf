use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ecl_core::baselines::{kmeans_detect, skewness_anomalies};
use ecl_core::bench::{
    compare_methods, export_report, generate_synthetic, table1_csv, BenchData, Method,
    SyntheticSpec,
};
use ecl_core::contrastive::{
    detect_anomalies, embed, score_against_reference, train as train_encoder, DetectionResult,
    EncoderModel,
};
use ecl_core::timeseries::{format_timestamp, load_csv, select_features, write_csv, FeatureMatrix};
use ecl_core::{Error, Result};

use crate::config::CliConfig;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Creates `cfg.out` and echoes the effective configuration into it.
fn prepare_out(cfg: &CliConfig) -> Result<&Path> {
    let out = cfg.out.as_path();
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_file(&out.join("effective_config.json"), &cfg.to_json())?;
    Ok(out)
}

fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "--{flag} is required (flag or config key `{}`)",
            flag.replace('-', "_")
        ))
    })
}

fn load_input(cfg: &CliConfig) -> Result<FeatureMatrix> {
    load_csv(require(&cfg.input, "input")?, &cfg.ingest())
}

fn load_spec(path: Option<&PathBuf>) -> Result<SyntheticSpec> {
    match path {
        None => Ok(SyntheticSpec::default_scenario()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn write_detections(path: &Path, result: &DetectionResult) -> Result<()> {
    let mut w = create(path)?;
    result.write_csv(&mut w)?;
    w.flush().map_err(io_err(path))
}

pub fn features(cfg: &CliConfig) -> Result<()> {
    let m = load_input(cfg)?;
    let ranking = select_features(&m, require(&cfg.target, "target")?, cfg.k)?;
    println!("rank,feature,abs_pearson");
    for (rank, (name, score)) in ranking.entries.iter().enumerate() {
        println!("{},{name},{score:.6}", rank + 1);
    }
    Ok(())
}

pub fn train(cfg: &CliConfig) -> Result<()> {
    let m = load_input(cfg)?;
    let feature = require(&cfg.feature, "feature")?;
    let (model, losses) = train_encoder(&m, feature, &cfg.train(), &cfg.policy())?;
    let out = prepare_out(cfg)?;
    model.save(out.join("model.json"))?;
    let mut text = String::from("epoch,loss\n");
    for (e, l) in losses.iter().enumerate() {
        text.push_str(&format!("{},{l}\n", e + 1));
    }
    write_file(&out.join("losses.csv"), &text)?;
    println!(
        "trained `{feature}` for {} epochs: loss {:.6} -> {:.6}; model {}",
        losses.len(),
        losses.first().copied().unwrap_or(f64::NAN),
        losses.last().copied().unwrap_or(f64::NAN),
        model.id()
    );
    Ok(())
}

pub fn detect(cfg: &CliConfig) -> Result<()> {
    let m = load_input(cfg)?;
    let model = EncoderModel::load(require(&cfg.model, "model")?)?;
    let out = prepare_out(cfg)?;
    match &cfg.reference {
        Some(reference_path) => {
            let reference = load_csv(reference_path, &cfg.ingest())?;
            let emb = embed(&model, &model.windows_for(&reference)?)?;
            let result = score_against_reference(&model, &m, &emb, cfg.threshold)?;
            write_detections(&out.join("detections.csv"), &result)?;
            println!(
                "{} of {} windows scored above {} against {} reference windows",
                result.flagged_count(),
                result.len(),
                cfg.threshold,
                emb.len()
            );
        }
        None => {
            let pairs = detect_anomalies(
                &model.feature,
                &model,
                &m,
                cfg.threshold,
                &model.policy,
                cfg.pairs,
            )?;
            let windows = model.windows_for(&m)?;
            let instances = pairs.to_instances(windows.len())?;
            let rows = instances.instances_to_rows(&windows, m.row_count())?;
            write_detections(&out.join("detections.csv"), &pairs)?;
            write_detections(&out.join("instances.csv"), &instances)?;
            write_detections(&out.join("rows.csv"), &rows)?;
            println!(
                "flagged {} of {} pairs, {} of {} windows, {} rows (threshold {})",
                pairs.flagged_count(),
                pairs.len(),
                instances.flagged_count(),
                instances.len(),
                rows.flagged_count(),
                cfg.threshold
            );
        }
    }
    Ok(())
}

pub fn baseline(cfg: &CliConfig) -> Result<()> {
    let m = load_input(cfg)?;
    let feature = require(&cfg.feature, "feature")?;
    let (instances, rows) = match require(&cfg.method, "method")?.as_str() {
        "kmeans" => {
            let (windows, instances) = kmeans_detect(&m, feature, &cfg.kmeans(), cfg.seed)?;
            let rows = instances.instances_to_rows(&windows, m.row_count())?;
            (instances, rows)
        }
        "skewness" => {
            let report = skewness_anomalies(&m, feature, cfg.baseline_window, cfg.skewness_cutoff)?;
            (report.window_result()?, report.row_result()?)
        }
        other => return Err(Error::Config(format!("unknown baseline method `{other}`"))),
    };
    let out = prepare_out(cfg)?;
    write_detections(&out.join("detections.csv"), &instances)?;
    write_detections(&out.join("rows.csv"), &rows)?;
    println!(
        "flagged {} of {} windows, {} rows",
        instances.flagged_count(),
        instances.len(),
        rows.flagged_count()
    );
    Ok(())
}

pub fn bench(cfg: &CliConfig) -> Result<()> {
    let data = match (&cfg.input, &cfg.spec) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either --input or --spec, not both".into(),
            ))
        }
        (Some(path), None) => BenchData {
            matrix: load_input(cfg)?,
            truth: None,
            source: path.display().to_string(),
        },
        (None, spec) => {
            let mut d = BenchData::from_spec(&load_spec(spec.as_ref())?)?;
            d.source = match spec {
                Some(p) => format!("synthetic:{}", p.display()),
                None => "synthetic:default".into(),
            };
            d
        }
    };
    let features = if !cfg.features.is_empty() {
        cfg.features.clone()
    } else if let Some(target) = &cfg.target {
        select_features(&data.matrix, target, cfg.k)?.names()
    } else {
        data.matrix.feature_names().to_vec()
    };
    let methods = cfg
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<Vec<_>>>()?;
    let report = compare_methods(&data, &features, &methods, &cfg.seeds, &cfg.bench())?;
    let out = prepare_out(cfg)?;
    export_report(&report, out)?;
    print!("{}", table1_csv(&report));
    Ok(())
}

pub fn generate(cfg: &CliConfig) -> Result<()> {
    let spec = load_spec(cfg.spec.as_ref())?;
    let (m, truth) = generate_synthetic(&spec)?;
    let out = prepare_out(cfg)?;
    let data_path = out.join("data.csv");
    let mut w = create(&data_path)?;
    write_csv(&m, &mut w)?;
    w.flush().map_err(io_err(&data_path))?;
    let mut text = String::from("timestamp,anomaly\n");
    for (t, &a) in m.timestamps().iter().zip(&truth) {
        text.push_str(&format!("{},{}\n", format_timestamp(*t), u8::from(a)));
    }
    write_file(&out.join("truth.csv"), &text)?;
    let mut spec_json = serde_json::to_string_pretty(&spec).expect("spec serializes");
    spec_json.push('\n');
    write_file(&out.join("spec.json"), &spec_json)?;
    println!(
        "wrote {} rows x {} features to {}",
        m.row_count(),
        m.feature_count(),
        data_path.display()
    );
    Ok(())
}
