//! Synthetic trace generation command.

use crate::commands::eval::TRACE_SALT;
use crate::config::ExperimentConfig;
use crate::svg::{line_chart, Series};
use crate::util::mix64;
use anyhow::{Context as _, Result};
use std::fs::File;
use std::io::BufWriter;
use vransim_core::scalar::Real;
use vransim_core::traces::{gen_slice_traces_shaped, TraceShape};

pub fn cmd_traces<F: Real>(cfg: &ExperimentConfig) -> Result<()> {
    let out_dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let ranges = cfg.context_ranges::<F>();
    let seed = cfg.run.seed;
    // Same derivation as `eval --mode traces`, so the file on disk is the
    // exact timeline the replay walks.
    let ts = gen_slice_traces_shaped::<F>(
        cfg.traces.days,
        cfg.traces.interval_secs,
        &ranges,
        mix64(seed ^ TRACE_SALT),
        TraceShape {
            valley_lift: cfg.traces.valley_lift,
        },
    )?;

    let path = out_dir.join("traces.csv");
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    ts.write_csv(
        &mut w,
        &[
            format!("config_hash={:016x}", cfg.config_hash()),
            format!("seed={seed}"),
        ],
    )?;

    let mut series: Vec<Series> = (1..=4u8)
        .map(|id| Series {
            label: format!("slice {id} dl Mbps"),
            points: Vec::new(),
        })
        .collect();
    for pt in &ts.points {
        series[pt.slice_id as usize - 1]
            .points
            .push((pt.t_secs as f64 / 3600.0, pt.d_dl_mbps.as_f64()));
    }
    line_chart(
        &out_dir.join("traces.svg"),
        "slice downlink demand",
        "hours",
        "Mbps",
        &series,
    )?;

    println!(
        "traces: {} points over {} days at {}s intervals",
        ts.points.len(),
        cfg.traces.days,
        cfg.traces.interval_secs
    );
    println!(
        "traces: wrote traces.csv, traces.svg in {}",
        out_dir.display()
    );
    Ok(())
}
