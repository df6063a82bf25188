use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fleetmix_core::model::Instance;
use fleetmix_core::saa::MixResult;
use fleetmix_core::{Error, Result};
use serde_json::json;

use crate::config::RunConfig;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// A CSV writer whose file starts with the resolved config and seed as
/// comment lines.
pub fn csv_writer(path: &Path, config: &RunConfig) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config: {}", config.to_line()).map_err(|e| io_err(path, e))?;
    writeln!(w, "# seed: {}", config.seed()).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(w))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Run metadata kept apart from the deterministic outputs.
pub fn write_meta(dir: &Path, command: &str, config: &RunConfig, elapsed_secs: f64) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time": now,
        "elapsed_secs": elapsed_secs,
        "config": config,
        "seed": config.seed(),
    });
    write_json(&dir.join("meta.json"), &meta)
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| io_err(path, e))
}

fn mix_header(instance: &Instance, lead: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    h.push("rank".into());
    h.push("mix".into());
    h.extend(instance.vehicle_types.iter().map(|t| t.name.clone()));
    h.extend(
        [
            "acquisition",
            "mean_cost",
            "half_width",
            "n",
            "periods",
            "tco",
            "fill_rate",
            "unserved_mean",
            "failures",
        ]
        .map(String::from),
    );
    h
}

fn mix_row(lead: &[String], rank: usize, r: &MixResult) -> Vec<String> {
    let e = &r.evaluation;
    let mut row = lead.to_vec();
    row.push((rank + 1).to_string());
    row.push(e.index.to_string());
    row.extend(e.counts.iter().map(|c| c.to_string()));
    row.extend([
        e.acquisition.to_string(),
        e.mean.to_string(),
        e.half_width.to_string(),
        e.n.to_string(),
        e.periods.to_string(),
        e.tco.to_string(),
        e.fill_rate.to_string(),
        e.unserved_mean.to_string(),
        e.failures.to_string(),
    ]);
    row
}

const SAMPLE_HEADER: [&str; 10] = [
    "mix",
    "sample",
    "scenario_index",
    "temperature",
    "requested",
    "cost",
    "served_demand",
    "capacity_used",
    "unserved",
    "failures",
];

fn sample_rows<'a>(lead: &[String], r: &'a MixResult) -> impl Iterator<Item = Vec<String>> + 'a {
    let lead = lead.to_vec();
    r.samples.iter().map(move |s| {
        let mut row = lead.clone();
        row.extend([
            r.evaluation.index.to_string(),
            s.sample.to_string(),
            s.scenario_index.to_string(),
            s.temperature.to_string(),
            s.requested.to_string(),
            s.cost.to_string(),
            s.served_demand.to_string(),
            s.capacity_used.to_string(),
            s.unserved.to_string(),
            s.failures.to_string(),
        ]);
        row
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| io_err(path, e)
}

/// `mixes.csv` ranked by TCO and `samples.csv` with every solved period.
pub fn write_optimize(dir: &Path, config: &RunConfig, instance: &Instance, results: &[MixResult]) -> Result<()> {
    let path = dir.join("mixes.csv");
    let mut w = csv_writer(&path, config)?;
    w.write_record(mix_header(instance, &[])).map_err(csv_err(&path))?;
    for (rank, r) in results.iter().enumerate() {
        w.write_record(mix_row(&[], rank, r)).map_err(csv_err(&path))?;
    }
    finish(w, &path)?;

    let path = dir.join("samples.csv");
    let mut w = csv_writer(&path, config)?;
    w.write_record(SAMPLE_HEADER).map_err(csv_err(&path))?;
    let mut by_index: Vec<&MixResult> = results.iter().collect();
    by_index.sort_by_key(|r| r.evaluation.index);
    for r in by_index {
        for row in sample_rows(&[], r) {
            w.write_record(row).map_err(csv_err(&path))?;
        }
    }
    finish(w, &path)
}

/// One `sweep_<k>.csv` per grid point and a long-format `sweep.csv`.
pub fn write_sweep(
    dir: &Path,
    config: &RunConfig,
    instance: &Instance,
    points: &[fleetmix_core::saa::SweepPoint],
) -> Result<()> {
    let long = dir.join("sweep.csv");
    let mut all = csv_writer(&long, config)?;
    all.write_record(mix_header(instance, &["value"])).map_err(csv_err(&long))?;
    for (k, p) in points.iter().enumerate() {
        let path = dir.join(format!("sweep_{k}.csv"));
        let mut w = csv_writer(&path, config)?;
        w.write_record(mix_header(instance, &["value"])).map_err(csv_err(&path))?;
        let lead = [p.value.to_string()];
        for (rank, r) in p.results.iter().enumerate() {
            let row = mix_row(&lead, rank, r);
            w.write_record(&row).map_err(csv_err(&path))?;
            all.write_record(&row).map_err(csv_err(&long))?;
        }
        finish(w, &path)?;
    }
    finish(all, &long)?;

    let path = dir.join("sweep_samples.csv");
    let mut w = csv_writer(&path, config)?;
    let mut header = vec!["value"];
    header.extend(SAMPLE_HEADER);
    w.write_record(header).map_err(csv_err(&path))?;
    for p in points {
        let lead = [p.value.to_string()];
        let mut by_index: Vec<&MixResult> = p.results.iter().collect();
        by_index.sort_by_key(|r| r.evaluation.index);
        for r in by_index {
            for row in sample_rows(&lead, r) {
                w.write_record(row).map_err(csv_err(&path))?;
            }
        }
    }
    finish(w, &path)
}
