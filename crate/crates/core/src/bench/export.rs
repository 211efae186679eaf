//! Report directory writer.
//!
//! ```text
//! table1.csv            feature x method, "mean ± std" of flagged rows
//! counts.csv            long form: every counting unit with mean, std and per-seed values
//! metrics.csv           per feature/method/seed confusion metrics (ground truth only)
//! losses_<feature>.csv  epoch, mean loss over seeds, one column per seed
//! losses_<feature>.svg  the same curves as a line plot
//! config.json           report configuration snapshot
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::compare::{CountUnit, Method, RunReport};
use crate::error::{Error, Result};

pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{mean:.1} ± {std:.1}")
}

pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(fields).expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 fields")
}

pub fn table1_csv(report: &RunReport) -> String {
    let mut header = vec!["feature".to_string()];
    header.extend(report.methods.iter().map(|m| m.display_name().to_string()));
    let mut out = csv_line(&header);
    for feature in &report.features {
        let mut row = vec![feature.clone()];
        for &m in &report.methods {
            let text = match report
                .cell(feature, m)
                .and_then(|c| c.summary(CountUnit::Row))
            {
                Some(s) if s.failed > 0 => format!("failed ({}/{})", s.failed, s.ok + s.failed),
                Some(s) => format_cell(s.mean, s.std),
                None => String::new(),
            };
            row.push(text);
        }
        out.push_str(&csv_line(&row));
    }
    out
}

pub fn counts_csv(report: &RunReport) -> String {
    let mut out = csv_line(
        &[
            "feature", "method", "unit", "mean", "std", "ok", "failed", "per_seed",
        ]
        .map(String::from),
    );
    for cell in &report.cells {
        let units: &[CountUnit] = if cell.method == Method::Contrastive {
            &[CountUnit::Pair, CountUnit::Instance, CountUnit::Row]
        } else {
            &[CountUnit::Instance, CountUnit::Row]
        };
        for &unit in units {
            let Some(s) = cell.summary(unit) else {
                continue;
            };
            let per_seed: Vec<String> = cell
                .runs
                .iter()
                .map(|r| match r.counts {
                    Some(c) => match unit {
                        CountUnit::Pair => c.pairs.map(|v| v.to_string()).unwrap_or_default(),
                        CountUnit::Instance => c.instances.to_string(),
                        CountUnit::Row => c.rows.to_string(),
                    },
                    None => "failed".into(),
                })
                .collect();
            out.push_str(&csv_line(&[
                cell.feature.clone(),
                cell.method.to_string(),
                unit.name().into(),
                s.mean.to_string(),
                s.std.to_string(),
                s.ok.to_string(),
                s.failed.to_string(),
                per_seed.join(";"),
            ]));
        }
    }
    out
}

pub fn metrics_csv(report: &RunReport) -> String {
    let mut out = csv_line(
        &[
            "feature",
            "method",
            "seed",
            "tp",
            "fp",
            "tn",
            "fn",
            "precision",
            "recall",
            "false_positive_rate",
            "precision_defined",
            "recall_defined",
        ]
        .map(String::from),
    );
    for cell in &report.cells {
        for run in &cell.runs {
            let Some(m) = run.metrics else { continue };
            out.push_str(&csv_line(&[
                cell.feature.clone(),
                cell.method.to_string(),
                run.seed.to_string(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.tn.to_string(),
                m.fn_.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.false_positive_rate.to_string(),
                m.precision_defined.to_string(),
                m.recall_defined.to_string(),
            ]));
        }
    }
    out
}

/// Per-epoch mean over seeds plus one column per seed.
pub fn losses_csv(report: &RunReport, feature: &str) -> String {
    let hist = report.losses_for(feature);
    let mut header = vec!["epoch".to_string(), "loss".to_string()];
    header.extend(hist.iter().map(|h| format!("seed_{}", h.seed)));
    let mut out = csv_line(&header);
    let epochs = hist.iter().map(|h| h.losses.len()).max().unwrap_or(0);
    for e in 0..epochs {
        let vals: Vec<f64> = hist
            .iter()
            .filter_map(|h| h.losses.get(e).copied())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let mut row = vec![(e + 1).to_string(), mean.to_string()];
        row.extend(
            hist.iter()
                .map(|h| h.losses.get(e).map(|v| v.to_string()).unwrap_or_default()),
        );
        out.push_str(&csv_line(&row));
    }
    out
}

#[derive(Serialize)]
struct ConfigSnapshot<'a> {
    source: &'a str,
    rows: usize,
    features: &'a [String],
    methods: &'a [Method],
    seeds: &'a [u64],
    has_truth: bool,
    config: &'a super::compare::BenchConfig,
    counted_unit_in_table1: &'static str,
}

pub fn config_json(report: &RunReport) -> String {
    let snap = ConfigSnapshot {
        source: &report.source,
        rows: report.rows,
        features: &report.features,
        methods: &report.methods,
        seeds: &report.seeds,
        has_truth: report.has_truth,
        config: &report.config,
        counted_unit_in_table1: "row",
    };
    let mut s = serde_json::to_string_pretty(&snap).expect("snapshot serializes");
    s.push('\n');
    s
}

/// Writes the report directory; returns the written paths in write order.
pub fn export_report(report: &RunReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir.join("table1.csv"), table1_csv(report))?,
        write(dir.join("counts.csv"), counts_csv(report))?,
    ];
    if report.has_truth {
        written.push(write(dir.join("metrics.csv"), metrics_csv(report))?);
    }
    if report.methods.contains(&Method::Contrastive) {
        for feature in &report.features {
            let stem = format!("losses_{}", sanitize(feature));
            written.push(write(
                dir.join(format!("{stem}.csv")),
                losses_csv(report, feature),
            )?);
            let series: Vec<(String, Vec<f64>)> = report
                .losses_for(feature)
                .into_iter()
                .map(|h| (format!("seed {}", h.seed), h.losses.clone()))
                .collect();
            let svg = super::svg::line_plot(
                &format!("Training loss: {feature}"),
                "epoch",
                "loss",
                &series,
            );
            written.push(write(dir.join(format!("{stem}.svg")), svg)?);
        }
    }
    written.push(write(dir.join("config.json"), config_json(report))?);
    Ok(written)
}
