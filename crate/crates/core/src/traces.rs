//! Synthetic multi-day load traces for four network slices.
//!
//! Slice 1 follows a diurnal sinusoid (residential broadband), slice 2 a
//! working-hours plateau (office), slices 3 and 4 are machine-type slices
//! that alternate between on epochs with constant demand and off epochs
//! where the slice detaches entirely. Slices 1 and 2 are always attached,
//! so the number of active vBS instances varies between 2 and 4.

use crate::context::{ContextRanges, VbsContext};
use crate::error::{CoreError, Result};
use crate::scalar::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub const N_SLICES: u8 = 4;
const SECS_PER_HOUR: u64 = 3600;
const SECS_PER_DAY: u64 = 24 * SECS_PER_HOUR;

/// Demand jitter applied to the deterministic load patterns.
const DEMAND_JITTER_SIGMA: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<F> {
    /// Seconds since the trace start.
    pub t_secs: u64,
    /// Slice identifier, 1..=4.
    pub slice_id: u8,
    pub d_dl_mbps: F,
    pub d_ul_mbps: F,
    pub cqi_dl: u8,
    pub snr_ul_db: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSet<F> {
    pub interval_secs: u32,
    /// Points sorted by (t_secs, slice_id); absent slices are detached.
    pub points: Vec<TracePoint<F>>,
}

/// One decision interval: timestamp plus the attached (slice id, context) pairs.
pub type SliceEpisode<F> = (u64, Vec<(u8, VbsContext<F>)>);

impl<F: Real> TraceSet<F> {
    /// Groups points into per-interval episodes of attached-slice contexts.
    pub fn to_episodes(&self, prb_total: u32) -> Result<Vec<SliceEpisode<F>>> {
        let mut episodes: Vec<SliceEpisode<F>> = Vec::new();
        for pt in &self.points {
            let ctx = VbsContext::from_demand(
                pt.d_dl_mbps,
                pt.cqi_dl,
                pt.d_ul_mbps,
                pt.snr_ul_db,
                prb_total,
            )?;
            match episodes.last_mut() {
                Some((t, slices)) if *t == pt.t_secs => slices.push((pt.slice_id, ctx)),
                _ => episodes.push((pt.t_secs, vec![(pt.slice_id, ctx)])),
            }
        }
        Ok(episodes)
    }

    /// Writes the trace as CSV. `header_comments` lines are emitted first,
    /// each prefixed with `# `.
    pub fn write_csv<W: Write>(
        &self,
        w: &mut W,
        header_comments: &[String],
    ) -> std::io::Result<()> {
        for line in header_comments {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# interval_secs={}", self.interval_secs)?;
        writeln!(w, "t,slice_id,d_dl_mbps,d_ul_mbps,cqi_dl,snr_ul_db")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p.t_secs, p.slice_id, p.d_dl_mbps, p.d_ul_mbps, p.cqi_dl, p.snr_ul_db
            )?;
        }
        Ok(())
    }

    /// Reads a trace written by [`TraceSet::write_csv`], ignoring comment
    /// lines except for the embedded interval length.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut interval_secs = 0u32;
        let mut points = Vec::new();
        let mut saw_header = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| CoreError::Parse(format!("line {lineno}: {e}")))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("interval_secs=") {
                    interval_secs = v
                        .parse()
                        .map_err(|e| CoreError::Parse(format!("interval_secs: {e}")))?;
                }
                continue;
            }
            if !saw_header {
                if !line.starts_with("t,") {
                    return Err(CoreError::Parse(format!(
                        "expected column header, got: {line}"
                    )));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(CoreError::Parse(format!(
                    "line {lineno}: expected 6 fields, got {}",
                    fields.len()
                )));
            }
            let parse_f = |s: &str| -> Result<F> {
                s.parse::<f64>()
                    .map(F::of_f64)
                    .map_err(|e| CoreError::Parse(format!("line {lineno}: {e}")))
            };
            points.push(TracePoint {
                t_secs: fields[0]
                    .parse()
                    .map_err(|e| CoreError::Parse(format!("line {lineno}: {e}")))?,
                slice_id: fields[1]
                    .parse()
                    .map_err(|e| CoreError::Parse(format!("line {lineno}: {e}")))?,
                d_dl_mbps: parse_f(fields[2])?,
                d_ul_mbps: parse_f(fields[3])?,
                cqi_dl: fields[4]
                    .parse()
                    .map_err(|e| CoreError::Parse(format!("line {lineno}: {e}")))?,
                snr_ul_db: parse_f(fields[5])?,
            });
        }
        if interval_secs == 0 {
            return Err(CoreError::Parse("missing interval_secs header".into()));
        }
        Ok(Self {
            interval_secs,
            points,
        })
    }
}

/// Fraction of peak load for slice 1: sinusoid with its trough at 04:00.
fn diurnal_frac(hour: f64) -> f64 {
    let phase = (hour - 4.0) / 24.0 * std::f64::consts::TAU;
    0.10 + 0.90 * 0.5 * (1.0 - phase.cos())
}

/// Fraction of peak load for slice 2: office plateau 09:00..17:00 with
/// one-hour cosine ramps, 5% floor elsewhere.
fn office_frac(hour: f64) -> f64 {
    const LO: f64 = 0.05;
    const HI: f64 = 0.90;
    let ramp = |x: f64| LO + (HI - LO) * 0.5 * (1.0 - (std::f64::consts::PI * x).cos());
    match hour {
        h if (9.0..17.0).contains(&h) => HI,
        h if (8.0..9.0).contains(&h) => ramp(h - 8.0),
        h if (17.0..18.0).contains(&h) => ramp(1.0 - (h - 17.0)),
        _ => LO,
    }
}

/// On/off epoch schedule: alternating durations drawn uniformly from the
/// given hour ranges, starting in the off state.
fn epoch_schedule(
    rng: &mut ChaCha8Rng,
    horizon_secs: u64,
    on_hours: (f64, f64),
    off_hours: (f64, f64),
) -> Vec<(u64, u64)> {
    let mut on_windows = Vec::new();
    let mut t = 0u64;
    let mut on = false;
    while t < horizon_secs {
        let (lo, hi) = if on { on_hours } else { off_hours };
        let dur = (rng.gen_range(lo..=hi) * SECS_PER_HOUR as f64) as u64;
        let end = (t + dur).min(horizon_secs);
        if on {
            on_windows.push((t, end));
        }
        t = end;
        on = !on;
    }
    on_windows
}

/// Generates the four-slice trace. Pure function of `(horizon_days,
/// interval_secs, ranges, seed)`.
pub fn gen_slice_traces<F: Real>(
    horizon_days: u32,
    interval_secs: u32,
    ranges: &ContextRanges<F>,
    seed: u64,
) -> Result<TraceSet<F>> {
    gen_slice_traces_shaped(
        horizon_days,
        interval_secs,
        ranges,
        seed,
        TraceShape::default(),
    )
}

/// Load-shape controls for the synthetic traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceShape {
    /// Lifts the diurnal and office curves' valleys without moving their
    /// peaks: a load fraction f becomes lift + (1 - lift) * f. Deployments
    /// differ widely in how far traffic drops overnight, so this is the one
    /// tunable of the otherwise fixed shapes. Must sit in [0, 1).
    pub valley_lift: f64,
}

impl Default for TraceShape {
    fn default() -> Self {
        Self { valley_lift: 0.0 }
    }
}

pub fn gen_slice_traces_shaped<F: Real>(
    horizon_days: u32,
    interval_secs: u32,
    ranges: &ContextRanges<F>,
    seed: u64,
    shape: TraceShape,
) -> Result<TraceSet<F>> {
    if horizon_days == 0 || interval_secs == 0 || u64::from(interval_secs) > SECS_PER_DAY {
        return Err(CoreError::Parse(
            "horizon and interval must be positive (interval at most one day)".into(),
        ));
    }
    if !(0.0..1.0).contains(&shape.valley_lift) {
        return Err(CoreError::Parse("valley_lift must be in [0, 1)".into()));
    }
    ranges.validate()?;
    let horizon_secs = u64::from(horizon_days) * SECS_PER_DAY;
    let d_dl_max = ranges.d_dl_max_mbps.as_f64();
    let d_ul_max = ranges.d_ul_max_mbps.as_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sched_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let iot_a = epoch_schedule(&mut sched_rng, horizon_secs, (2.0, 6.0), (2.0, 6.0));
    let iot_b = epoch_schedule(&mut sched_rng, horizon_secs, (1.0, 4.0), (3.0, 8.0));
    let active_in = |windows: &[(u64, u64)], t: u64| windows.iter().any(|&(s, e)| t >= s && t < e);

    let mut points = Vec::new();
    let mut t = 0u64;
    while t < horizon_secs {
        let hour = (t % SECS_PER_DAY) as f64 / SECS_PER_HOUR as f64;
        for slice_id in 1..=N_SLICES {
            // One channel draw per slice per interval keeps the RNG stream
            // independent of which slices are attached.
            let cqi = rng.gen_range(ranges.cqi_dl_min..=ranges.cqi_dl_max);
            let snr = rng.gen_range(ranges.snr_ul_min_db.as_f64()..=ranges.snr_ul_max_db.as_f64());
            let jitter = 1.0 + DEMAND_JITTER_SIGMA * gaussian(&mut rng);
            let lift = |f: f64| shape.valley_lift + (1.0 - shape.valley_lift) * f;
            let load = match slice_id {
                1 => Some((lift(diurnal_frac(hour)), 0.55 * lift(diurnal_frac(hour)))),
                2 => Some((lift(office_frac(hour)), 0.40 * lift(office_frac(hour)))),
                3 if active_in(&iot_a, t) => Some((0.15, 0.45)),
                4 if active_in(&iot_b, t) => Some((0.10, 0.30)),
                _ => None,
            };
            let Some((dl_frac, ul_frac)) = load else {
                continue;
            };
            let d_dl = (dl_frac * d_dl_max * jitter).clamp(0.0, d_dl_max);
            let d_ul = (ul_frac * d_ul_max * jitter).clamp(0.0, d_ul_max);
            points.push(TracePoint {
                t_secs: t,
                slice_id,
                d_dl_mbps: F::of_f64(d_dl),
                d_ul_mbps: F::of_f64(d_ul),
                cqi_dl: cqi,
                snr_ul_db: F::of_f64(snr),
            });
        }
        t += u64::from(interval_secs);
    }
    Ok(TraceSet {
        interval_secs,
        points,
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1.0e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}


#[cfg(test)]
mod tests {
    use super::*;

    fn hourly_trace(days: u32, seed: u64) -> TraceSet<f64> {
        gen_slice_traces(days, 3600, &ContextRanges::default(), seed).unwrap()
    }

    fn slice_series(trace: &TraceSet<f64>, slice_id: u8) -> Vec<(u64, f64)> {
        trace
            .points
            .iter()
            .filter(|p| p.slice_id == slice_id)
            .map(|p| (p.t_secs, p.d_dl_mbps))
            .collect()
    }

    fn autocorr(series: &[f64], lag: usize) -> f64 {
        let n = series.len() - lag;
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / series.len() as f64;
        let cov: f64 = (0..n)
            .map(|i| (series[i] - mean) * (series[i + lag] - mean))
            .sum::<f64>()
            / n as f64;
        cov / var
    }

    #[test]
    fn diurnal_slice_peaks_daily() {
        let trace = hourly_trace(5, 7);
        let series: Vec<f64> = slice_series(&trace, 1).iter().map(|&(_, d)| d).collect();
        assert_eq!(series.len(), 5 * 24);
        let day = autocorr(&series, 24);
        for lag in [6usize, 12, 18, 30, 36] {
            assert!(
                day > autocorr(&series, lag),
                "24h autocorrelation must dominate lag {lag}h"
            );
        }
        assert!(day > 0.8, "diurnal structure too weak: {day}");
    }

    #[test]
    fn office_slice_is_quiet_at_night() {
        let trace = hourly_trace(5, 7);
        let series = slice_series(&trace, 2);
        let peak = series.iter().map(|&(_, d)| d).fold(0.0, f64::max);
        for &(t, d) in &series {
            if (t % SECS_PER_DAY) / SECS_PER_HOUR == 3 {
                assert!(d <= 0.10 * peak, "03:00 load {d} above 10% of peak {peak}");
            }
        }
        let busy: Vec<f64> = series
            .iter()
            .filter(|&&(t, _)| {
                let h = (t % SECS_PER_DAY) / SECS_PER_HOUR;
                (10..16).contains(&h)
            })
            .map(|&(_, d)| d)
            .collect();
        let floor: Vec<f64> = series
            .iter()
            .filter(|&&(t, _)| (t % SECS_PER_DAY) / SECS_PER_HOUR == 3)
            .map(|&(_, d)| d)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&busy) > 5.0 * mean(&floor));
    }

    #[test]
    fn machine_slices_hold_constant_demand_while_active() {
        let trace = hourly_trace(5, 7);
        for slice_id in [3u8, 4] {
            let series: Vec<f64> = slice_series(&trace, slice_id)
                .iter()
                .map(|&(_, d)| d)
                .collect();
            assert!(!series.is_empty(), "slice {slice_id} never activates");
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            let sd = (series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / series.len() as f64)
                .sqrt();
            assert!(
                sd <= 2.0 * DEMAND_JITTER_SIGMA * mean,
                "slice {slice_id} demand varies beyond its noise band: sd {sd}, mean {mean}"
            );
        }
    }

    #[test]
    fn attached_slice_count_varies_over_the_horizon() {
        let trace = hourly_trace(5, 7);
        let episodes = trace.to_episodes(50).unwrap();
        let counts: Vec<usize> = episodes.iter().map(|(_, s)| s.len()).collect();
        let min = *counts.iter().min().unwrap();
        let max = *counts.iter().max().unwrap();
        assert!(min >= 2, "slices 1 and 2 are always attached");
        assert_eq!(max, 4, "all four slices must coincide at some point");
        assert!(min < max, "attachment count must vary");
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        assert_eq!(hourly_trace(2, 9), hourly_trace(2, 9));
        assert_ne!(hourly_trace(2, 9), hourly_trace(2, 10));
    }

    #[test]
    fn csv_round_trip_preserves_the_trace() {
        let trace = hourly_trace(2, 3);
        let mut buf = Vec::new();
        trace
            .write_csv(&mut buf, &["config_hash=deadbeef".into(), "seed=3".into()])
            .unwrap();
        let back = TraceSet::<f64>::read_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let missing_interval = "t,slice_id,d_dl_mbps,d_ul_mbps,cqi_dl,snr_ul_db\n0,1,1,1,9,12\n";
        assert!(TraceSet::<f64>::read_csv(missing_interval.as_bytes()).is_err());
        let bad_fields =
            "# interval_secs=60\nt,slice_id,d_dl_mbps,d_ul_mbps,cqi_dl,snr_ul_db\n0,1,1\n";
        assert!(TraceSet::<f64>::read_csv(bad_fields.as_bytes()).is_err());
    }

    #[test]
    fn demands_stay_inside_the_configured_ranges() {
        let ranges = ContextRanges::<f64>::default();
        let trace = gen_slice_traces(3, 900, &ranges, 21).unwrap();
        for p in &trace.points {
            assert!(p.d_dl_mbps >= 0.0 && p.d_dl_mbps <= ranges.d_dl_max_mbps);
            assert!(p.d_ul_mbps >= 0.0 && p.d_ul_mbps <= ranges.d_ul_max_mbps);
        }
    }
}
