//! Model inputs derived from raw readings: time of day, current THI, mean THI
//! of the previous night, and the running mean of THI since 07:00.

use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::dataset::{DayRecord, RawObservation};
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 4;
pub const FEATURE_NAMES: [&str; N_FEATURES] =
    ["time_hours", "thi_current", "thi_night_prev", "thi_accum"];
pub const FEATURE_CSV_HEADER: [&str; 6] = [
    "date",
    "time_hours",
    "thi_current",
    "thi_night_prev",
    "thi_accum",
    "cow_count",
];

/// Dry-bulb temperature in Fahrenheit, `1.8 T + 32`, evaluated as `9T/5 + 32`.
pub fn fahrenheit(temperature_c: f64) -> f64 {
    temperature_c * 9.0 / 5.0 + 32.0
}

/// NRC temperature-humidity index, relative humidity in percent.
///
/// `(1.8T + 32) - (0.55 - 0.0055 RH)(1.8T - 26)`, rearranged as
/// `F - 0.0055 (100 - RH)(F - 58)` so the correction term is exactly zero
/// at `RH = 100` or `F = 58`.
pub fn thi(temperature_c: f64, relative_humidity_pct: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&relative_humidity_pct) {
        return Err(Error::Domain(relative_humidity_pct));
    }
    let f = fahrenheit(temperature_c);
    Ok(f - 0.0055 * (100.0 - relative_humidity_pct) * (f - 58.0))
}

pub fn observation_thi(obs: &RawObservation) -> Result<f64> {
    thi(obs.temperature_c, obs.relative_humidity_pct)
}

/// Fractional hours since local midnight.
pub fn time_to_real(timestamp: NaiveDateTime) -> f64 {
    let t = timestamp.time();
    f64::from(t.hour())
        + f64::from(t.minute()) / 60.0
        + (f64::from(t.second()) + f64::from(t.nanosecond()) * 1e-9) / 3600.0
}

/// Mean THI over a night window.
pub fn night_mean_thi(night_obs: &[RawObservation]) -> Result<f64> {
    if night_obs.is_empty() {
        return Err(Error::EmptyNight(None));
    }
    let mut sum = 0.0;
    for o in night_obs {
        sum += observation_thi(o)?;
    }
    Ok(sum / night_obs.len() as f64)
}

/// Prefix means: element `i` is the mean of `day_thi[..=i]`.
pub fn accumulate_thi(day_thi: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(day_thi.len());
    let (mut mean, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &x) in day_thi.iter().enumerate() {
        lo = lo.min(x);
        hi = hi.max(x);
        mean = if i == 0 {
            x
        } else {
            mean + (x - mean) / (i + 1) as f64
        };
        // incremental update can round one ulp past the prefix range
        mean = mean.clamp(lo, hi);
        out.push(mean);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub time_hours: f64,
    pub thi_current: f64,
    pub thi_night_prev: f64,
    pub thi_accum: f64,
}

impl FeatureVector {
    /// Model input order, matching [`FEATURE_NAMES`].
    pub fn to_row(&self) -> [f64; N_FEATURES] {
        [
            self.time_hours,
            self.thi_current,
            self.thi_night_prev,
            self.thi_accum,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub date: NaiveDate,
    pub features: FeatureVector,
    pub target: f64,
}

/// One example per daytime observation, in time order.
pub fn build_examples(day: &DayRecord) -> Result<Vec<LabeledExample>> {
    if day.night_obs_prev.is_empty() {
        return Err(Error::EmptyNight(Some(day.date)));
    }
    let night = night_mean_thi(&day.night_obs_prev)?;
    let current = day
        .day_obs
        .iter()
        .map(observation_thi)
        .collect::<Result<Vec<_>>>()?;
    let accum = accumulate_thi(&current);
    day.day_obs
        .iter()
        .zip(current.iter().zip(&accum))
        .map(|(o, (&thi_current, &thi_accum))| {
            let count = o.cow_count.ok_or(Error::InvalidConfig(format!(
                "daytime observation at {} has no cow count",
                o.timestamp
            )))?;
            Ok(LabeledExample {
                date: day.date,
                features: FeatureVector {
                    time_hours: time_to_real(o.timestamp),
                    thi_current,
                    thi_night_prev: night,
                    thi_accum,
                },
                target: f64::from(count),
            })
        })
        .collect()
}

pub fn build_all(days: &[DayRecord]) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for d in days {
        out.extend(build_examples(d)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureCsvRow {
    date: NaiveDate,
    time_hours: f64,
    thi_current: f64,
    thi_night_prev: f64,
    thi_accum: f64,
    cow_count: f64,
}

/// Writes the audit table. Floats use shortest round-trip formatting, so
/// [`read_feature_csv`] reproduces the examples bit for bit.
pub fn write_feature_csv<W: Write>(out: W, examples: &[LabeledExample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in examples {
        w.serialize(FeatureCsvRow {
            date: e.date,
            time_hours: e.features.time_hours,
            thi_current: e.features.thi_current,
            thi_night_prev: e.features.thi_night_prev,
            thi_accum: e.features.thi_accum,
            cow_count: e.target,
        })?;
    }
    w.flush().map_err(|e| Error::io("<feature csv>", e))?;
    Ok(())
}

/// Reads a feature table; lines starting with `#` are provenance comments.
pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<LabeledExample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    for name in FEATURE_CSV_HEADER {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.into()));
        }
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: FeatureCsvRow = row?;
        out.push(LabeledExample {
            date: r.date,
            features: FeatureVector {
                time_hours: r.time_hours,
                thi_current: r.thi_current,
                thi_night_prev: r.thi_night_prev,
                thi_accum: r.thi_accum,
            },
            target: r.cow_count,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}
