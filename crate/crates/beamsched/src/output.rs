//! Output tree: `<out>/<density>_<ratio%>/<policy>/` with gnuplot-ready
//! `.dat` files, a JSON summary and a copy of the manifest, plus top-level
//! summary and gain tables.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use beamsched_core::metrics::{BoxStats, MetricsReport};
use serde::Serialize;

use crate::config::RunManifest;
use crate::runner::{CellResult, RawDump};

fn box_dat(stats: Option<&BoxStats>) -> String {
    let mut s = String::from("# p5 p25 median p75 p95 mean count\n");
    if let Some(b) = stats {
        writeln!(s, "{} {} {} {} {} {} {}", b.p5, b.p25, b.median, b.p75, b.p95, b.mean, b.count).unwrap();
    }
    s
}

fn cdf_dat(report: &MetricsReport) -> String {
    let mut s = String::from("# beamwidth_deg cumulative_fraction\n");
    for (bw, f) in &report.beamwidth_cdf {
        writeln!(s, "{} {}", bw.0, f).unwrap();
    }
    s
}

fn throughput_dat(report: &MetricsReport) -> String {
    let mut s = String::from("# aggregated_throughput_mbps delivered_packets duration_s mean_receivers_per_interval\n");
    let rpi = report.mean_receivers_per_interval.map_or("nan".to_string(), |v| v.to_string());
    writeln!(
        s,
        "{} {} {} {}",
        report.aggregated_throughput_mbps, report.delivered_packets, report.duration_s, rpi
    )
    .unwrap();
    s
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

fn write_raw(dir: &Path, raw: &RawDump) -> io::Result<()> {
    write_csv(&dir.join("topology.csv"), &raw.topology)?;
    write_csv(&dir.join("events.csv"), &raw.events)?;
    write_csv(&dir.join("links.csv"), &raw.links)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("records.ndjson"))?);
    for rec in &raw.records {
        for t in &rec.transmitters {
            let line = serde_json::json!({
                "replication": rec.replication,
                "period": rec.period,
                "record": t,
            });
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()
}

#[derive(Serialize)]
struct GainRow {
    density_per_km: f64,
    tx_ratio: f64,
    gain_percent: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    reports: Vec<&'a MetricsReport>,
    gains: Vec<GainRow>,
}

/// Writes the whole tree under `out`; existing files are overwritten.
pub fn write_tree(out: &Path, manifest: &RunManifest, results: &[CellResult]) -> io::Result<()> {
    fs::create_dir_all(out)?;
    let manifest_text = manifest.to_toml();
    for cell in results {
        for run in &cell.runs {
            let dir = out.join(cell.cell.dir_name()).join(run.policy.as_str());
            fs::create_dir_all(&dir)?;
            let r = &run.report;
            fs::write(dir.join("contacted_box.dat"), box_dat(r.contacted.as_ref()))?;
            fs::write(dir.join("beamwidth_cdf.dat"), cdf_dat(r))?;
            fs::write(dir.join("pdr_box.dat"), box_dat(r.pdr.as_ref()))?;
            fs::write(dir.join("throughput.dat"), throughput_dat(r))?;
            fs::write(dir.join("summary.json"), serde_json::to_string_pretty(r)? + "\n")?;
            fs::write(dir.join("manifest.toml"), &manifest_text)?;
            if let Some(raw) = &run.raw {
                write_raw(&dir, raw)?;
            }
        }
    }

    let gains: Vec<GainRow> = results
        .iter()
        .map(|c| GainRow {
            density_per_km: c.cell.density_per_km,
            tx_ratio: c.cell.tx_ratio,
            gain_percent: c.gain_percent().and_then(|g| g.ok()),
        })
        .collect();
    let mut dat = String::from("# density_per_km tx_ratio adaptive_mbps baseline_mbps gain_percent\n");
    for c in results {
        let (Some(a), Some(b)) = (
            c.report(beamsched_core::Policy::Adaptive),
            c.report(beamsched_core::Policy::Baseline),
        ) else {
            continue;
        };
        let g = c.gain_percent().and_then(|g| g.ok()).map_or("nan".to_string(), |g| g.to_string());
        writeln!(
            dat,
            "{} {} {} {} {}",
            c.cell.density_per_km, c.cell.tx_ratio, a.aggregated_throughput_mbps, b.aggregated_throughput_mbps, g
        )
        .unwrap();
    }
    fs::write(out.join("gains.dat"), dat)?;
    let summary = Summary {
        reports: results.iter().flat_map(|c| c.runs.iter().map(|r| &r.report)).collect(),
        gains,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    fs::write(out.join("manifest.toml"), manifest_text)?;
    Ok(())
}
