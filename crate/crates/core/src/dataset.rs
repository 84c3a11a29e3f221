//! Sensor-log ingestion, day/night grouping and day-grouped fold plans.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DAY_START_HOUR: u32 = 7;
pub const NIGHT_START_HOUR: u32 = 21;
pub const DEFAULT_HERD_SIZE: u32 = 80;

/// One timestamped sensor reading. `cow_count` is absent for night rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub timestamp: NaiveDateTime,
    pub temperature_c: f64,
    pub relative_humidity_pct: f64,
    pub cow_count: Option<u32>,
}

/// Header names for the four input columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub timestamp: String,
    pub temperature_c: String,
    pub relative_humidity_pct: String,
    pub cow_count: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            timestamp: "timestamp".into(),
            temperature_c: "temperature_c".into(),
            relative_humidity_pct: "relative_humidity_pct".into(),
            cow_count: "cow_count".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub herd_size: u32,
    /// Abort when more than this fraction of data rows is rejected.
    pub max_reject_fraction: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            herd_size: DEFAULT_HERD_SIZE,
            max_reject_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    UnparseableTimestamp { value: String },
    UnparseableNumber { column: String, value: String },
    OutOfRange { column: String, value: String },
    NonIncreasingTimestamp { previous: NaiveDateTime },
    WrongFieldCount { found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub observations: Vec<RawObservation>,
    pub rejected: Vec<RejectedRow>,
    pub total_rows: usize,
}

pub fn ingest_csv(path: &Path, schema: &ColumnSchema, config: &IngestConfig) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema, config)
}

pub fn ingest_reader<R: Read>(
    reader: R,
    schema: &ColumnSchema,
    config: &IngestConfig,
) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile);
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_col = column(&schema.timestamp)?;
    let t_col = column(&schema.temperature_c)?;
    let rh_col = column(&schema.relative_humidity_pct)?;
    let count_col = column(&schema.cow_count)?;
    let width = headers.len();

    let mut observations = Vec::new();
    let mut rejected = Vec::new();
    let mut total_rows = 0usize;
    let mut last: Option<NaiveDateTime> = None;

    for record in rdr.records() {
        let record = record?;
        total_rows += 1;
        let line = record.position().map_or(0, |p| p.line());
        let mut reject = |reason| rejected.push(RejectedRow { line, reason });

        if record.len() != width {
            reject(RejectReason::WrongFieldCount {
                found: record.len(),
            });
            continue;
        }
        let parsed = parse_row(
            &record,
            [ts_col, t_col, rh_col, count_col],
            schema,
            config.herd_size,
        );
        match parsed {
            Err(reason) => reject(reason),
            Ok(obs) => {
                if let Some(prev) = last {
                    if obs.timestamp <= prev {
                        reject(RejectReason::NonIncreasingTimestamp { previous: prev });
                        continue;
                    }
                }
                last = Some(obs.timestamp);
                observations.push(obs);
            }
        }
    }

    if total_rows == 0 {
        return Err(Error::EmptyFile);
    }
    if rejected.len() as f64 > config.max_reject_fraction * total_rows as f64 {
        return Err(Error::TooManyRejects {
            rejected: rejected.len(),
            total: total_rows,
            max_fraction: config.max_reject_fraction,
        });
    }
    Ok(Ingested {
        observations,
        rejected,
        total_rows,
    })
}

fn parse_row(
    record: &csv::StringRecord,
    [ts_col, t_col, rh_col, count_col]: [usize; 4],
    schema: &ColumnSchema,
    herd_size: u32,
) -> std::result::Result<RawObservation, RejectReason> {
    let timestamp = parse_timestamp(&record[ts_col]).ok_or_else(|| {
        RejectReason::UnparseableTimestamp {
            value: record[ts_col].to_string(),
        }
    })?;
    let number = |col: usize, name: &str| {
        let raw = &record[col];
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| RejectReason::UnparseableNumber {
                column: name.to_string(),
                value: raw.to_string(),
            })
    };
    let temperature_c = number(t_col, &schema.temperature_c)?;
    let relative_humidity_pct = number(rh_col, &schema.relative_humidity_pct)?;
    if !(0.0..=100.0).contains(&relative_humidity_pct) {
        return Err(RejectReason::OutOfRange {
            column: schema.relative_humidity_pct.clone(),
            value: record[rh_col].to_string(),
        });
    }
    let raw_count = &record[count_col];
    let cow_count = if raw_count.is_empty() {
        None
    } else {
        let n = raw_count
            .parse::<i64>()
            .map_err(|_| RejectReason::UnparseableNumber {
                column: schema.cow_count.clone(),
                value: raw_count.to_string(),
            })?;
        if n < 0 || n > i64::from(herd_size) {
            return Err(RejectReason::OutOfRange {
                column: schema.cow_count.clone(),
                value: raw_count.to_string(),
            });
        }
        Some(n as u32)
    };
    Ok(RawObservation {
        timestamp,
        temperature_c,
        relative_humidity_pct,
        cow_count,
    })
}

/// ISO 8601 local date-time, `T` or space separated, seconds optional.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Observations for one modeled day: its daytime rows and the preceding night.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub day_obs: Vec<RawObservation>,
    pub night_obs_prev: Vec<RawObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingConfig {
    pub min_day_obs: usize,
    pub require_night: bool,
    /// Dates known to be incorrectly recorded.
    #[serde(default)]
    pub flagged_dates: BTreeSet<NaiveDate>,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            min_day_obs: 30,
            require_night: true,
            flagged_dates: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayExclusion {
    NoDaytimeObservations,
    TooFewDaytimeObservations { found: usize, required: usize },
    NoNightObservations,
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedDay {
    pub date: NaiveDate,
    pub reason: DayExclusion,
    pub n_day_obs: usize,
    pub n_night_obs: usize,
}

/// A daytime observation that cannot be used as a labeled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrphanObservation {
    pub timestamp: NaiveDateTime,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grouping {
    pub days: Vec<DayRecord>,
    pub excluded_days: Vec<ExcludedDay>,
    pub orphans: Vec<OrphanObservation>,
}

/// The modeled date an observation belongs to, and whether it is a day row.
///
/// Day window `[07:00, 21:00)` of its own date; night rows from
/// `[21:00 of d, 07:00 of d+1)` belong to date `d+1`.
pub fn slot_of(ts: NaiveDateTime) -> (NaiveDate, bool) {
    let day_start = NaiveTime::from_hms_opt(DAY_START_HOUR, 0, 0).unwrap();
    let night_start = NaiveTime::from_hms_opt(NIGHT_START_HOUR, 0, 0).unwrap();
    let t = ts.time();
    if t < day_start {
        (ts.date(), false)
    } else if t < night_start {
        (ts.date(), true)
    } else {
        (ts.date() + Duration::days(1), false)
    }
}

pub fn group_days(obs: &[RawObservation], config: &GroupingConfig) -> Grouping {
    #[derive(Default)]
    struct Slots {
        day: Vec<RawObservation>,
        night: Vec<RawObservation>,
    }
    let mut by_date: BTreeMap<NaiveDate, Slots> = BTreeMap::new();
    let mut orphans = Vec::new();

    for o in obs {
        let (date, is_day) = slot_of(o.timestamp);
        let slots = by_date.entry(date).or_default();
        if is_day {
            if o.cow_count.is_some() {
                slots.day.push(o.clone());
            } else {
                orphans.push(OrphanObservation {
                    timestamp: o.timestamp,
                    reason: "daytime row without cow count".into(),
                });
            }
        } else {
            slots.night.push(o.clone());
        }
    }

    let mut grouping = Grouping {
        orphans,
        ..Grouping::default()
    };
    for (date, slots) in by_date {
        let (n_day_obs, n_night_obs) = (slots.day.len(), slots.night.len());
        let reason = if config.flagged_dates.contains(&date) {
            Some(DayExclusion::Flagged)
        } else if slots.day.is_empty() {
            Some(DayExclusion::NoDaytimeObservations)
        } else if slots.day.len() < config.min_day_obs {
            Some(DayExclusion::TooFewDaytimeObservations {
                found: n_day_obs,
                required: config.min_day_obs,
            })
        } else if config.require_night && slots.night.is_empty() {
            Some(DayExclusion::NoNightObservations)
        } else {
            None
        };
        match reason {
            Some(reason) => grouping.excluded_days.push(ExcludedDay {
                date,
                reason,
                n_day_obs,
                n_night_obs,
            }),
            None => grouping.days.push(DayRecord {
                date,
                day_obs: slots.day,
                night_obs_prev: slots.night,
            }),
        }
    }
    grouping
}

/// JSON-serializable summary of everything dropped on the way to modeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub total_rows: usize,
    pub accepted_rows: usize,
    pub rejected_rows: Vec<RejectedRow>,
    pub usable_days: usize,
    pub excluded_days: Vec<ExcludedDay>,
    pub orphan_observations: Vec<OrphanObservation>,
}

impl ExclusionReport {
    pub fn new(ingested: &Ingested, grouping: &Grouping) -> Self {
        ExclusionReport {
            total_rows: ingested.total_rows,
            accepted_rows: ingested.observations.len(),
            rejected_rows: ingested.rejected.clone(),
            usable_days: grouping.days.len(),
            excluded_days: grouping.excluded_days.clone(),
            orphan_observations: grouping.orphans.clone(),
        }
    }
}

/// Partition of usable dates into `k` test folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Vec<NaiveDate>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn test_dates(&self, fold: usize) -> BTreeSet<NaiveDate> {
        self.folds[fold].iter().copied().collect()
    }

    /// Union of every other fold.
    pub fn train_dates(&self, fold: usize) -> BTreeSet<NaiveDate> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }

    pub fn all_dates(&self) -> BTreeSet<NaiveDate> {
        self.folds.iter().flatten().copied().collect()
    }
}

/// Shuffles the sorted dates with the `folds` stream of `seed`, then cuts the
/// sequence into `k` contiguous runs whose sizes differ by at most one.
pub fn make_folds(dates: &BTreeSet<NaiveDate>, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fold count must be >= 2, got {k}")));
    }
    if dates.len() < k {
        return Err(Error::TooFewDays {
            n_dates: dates.len(),
            k,
        });
    }
    let mut order: Vec<NaiveDate> = dates.iter().copied().collect();
    order.shuffle(&mut rng::stream(seed, Purpose::FoldShuffle, 0));

    let (base, extra) = (order.len() / k, order.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut rest = order.as_slice();
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let (head, tail) = rest.split_at(size);
        let mut fold = head.to_vec();
        fold.sort();
        folds.push(fold);
        rest = tail;
    }
    Ok(FoldPlan { seed, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn obs(s: &str, count: Option<u32>) -> RawObservation {
        RawObservation {
            timestamp: ts(s),
            temperature_c: 25.0,
            relative_humidity_pct: 50.0,
            cow_count: count,
        }
    }

    const HEADER: &str = "timestamp,temperature_c,relative_humidity_pct,cow_count\n";

    fn ingest_str(body: &str) -> Result<Ingested> {
        let text = format!("{HEADER}{body}");
        ingest_reader(text.as_bytes(), &ColumnSchema::default(), &IngestConfig {
            max_reject_fraction: 1.0,
            ..IngestConfig::default()
        })
    }

    #[test]
    fn three_valid_rows_pass_through() {
        let got = ingest_str(
            "2023-07-11T08:00:00,20.5,60,10\n\
             2023-07-11T08:07:30,20.9,59.5,12\n\
             2023-07-11T22:00,18.0,70,\n",
        )
        .unwrap();
        assert_eq!(got.observations.len(), 3);
        assert!(got.rejected.is_empty());
        assert_eq!(got.observations[2].cow_count, None);
        assert_eq!(got.observations[1].relative_humidity_pct, 59.5);
    }

    #[test]
    fn humidity_out_of_range_rejected_with_line() {
        let got = ingest_str(
            "2023-07-11T08:00:00,20.5,60,10\n\
             2023-07-11T08:10:00,20.5,140,10\n",
        )
        .unwrap();
        assert_eq!(got.observations.len(), 1);
        assert_eq!(got.rejected.len(), 1);
        assert_eq!(got.rejected[0].line, 3);
        assert!(matches!(got.rejected[0].reason, RejectReason::OutOfRange { .. }));
    }

    #[test]
    fn bad_rows_are_reported_by_kind() {
        let got = ingest_str(
            "yesterday,20,50,1\n\
             2023-07-11T08:00:00,warm,50,1\n\
             2023-07-11T08:05:00,20,50,81\n\
             2023-07-11T08:06:00,20,50,-1\n\
             2023-07-11T08:07:00,20,50,3\n\
             2023-07-11T08:07:00,20,50,3\n",
        )
        .unwrap();
        assert_eq!(got.observations.len(), 1);
        let kinds: Vec<_> = got.rejected.iter().map(|r| &r.reason).collect();
        assert!(matches!(kinds[0], RejectReason::UnparseableTimestamp { .. }));
        assert!(matches!(kinds[1], RejectReason::UnparseableNumber { .. }));
        assert!(matches!(kinds[2], RejectReason::OutOfRange { .. }));
        assert!(matches!(kinds[3], RejectReason::OutOfRange { .. }));
        assert!(matches!(kinds[4], RejectReason::NonIncreasingTimestamp { .. }));
    }

    #[test]
    fn missing_column_and_empty_file() {
        let err = ingest_reader(
            "timestamp,temperature_c,cow_count\n2023-07-11T08:00,1,1\n".as_bytes(),
            &ColumnSchema::default(),
            &IngestConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "relative_humidity_pct"));
        assert!(matches!(ingest_str(""), Err(Error::EmptyFile)));
        assert!(matches!(
            ingest_reader("".as_bytes(), &ColumnSchema::default(), &IngestConfig::default()),
            Err(Error::EmptyFile)
        ));
    }

    #[test]
    fn reject_threshold_aborts() {
        let text = format!(
            "{HEADER}2023-07-11T08:00,20,50,1\n2023-07-11T08:01,20,500,1\n"
        );
        let err = ingest_reader(text.as_bytes(), &ColumnSchema::default(), &IngestConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::TooManyRejects { rejected: 1, total: 2, .. }));
    }

    #[test]
    fn boundary_rows_land_in_the_right_slot() {
        let d = NaiveDate::from_ymd_opt(2023, 7, 12).unwrap();
        assert_eq!(slot_of(ts("2023-07-12T06:59:00")), (d, false));
        assert_eq!(slot_of(ts("2023-07-12T07:00:00")), (d, true));
        assert_eq!(slot_of(ts("2023-07-12T20:59:59")), (d, true));
        assert_eq!(
            slot_of(ts("2023-07-12T21:00:00")),
            (d + Duration::days(1), false)
        );
    }

    #[test]
    fn grouping_assigns_nights_to_following_day() {
        let rows = vec![
            obs("2023-07-11T21:00:00", None),
            obs("2023-07-12T06:59:00", None),
            obs("2023-07-12T07:00:00", Some(3)),
            obs("2023-07-12T12:00:00", Some(5)),
            obs("2023-07-12T13:00:00", None),
            obs("2023-07-12T21:00:00", None),
        ];
        let cfg = GroupingConfig {
            min_day_obs: 1,
            ..GroupingConfig::default()
        };
        let g = group_days(&rows, &cfg);
        assert_eq!(g.days.len(), 1);
        let day = &g.days[0];
        assert_eq!(day.date, NaiveDate::from_ymd_opt(2023, 7, 12).unwrap());
        assert_eq!(day.day_obs.len(), 2);
        assert_eq!(day.night_obs_prev.len(), 2);
        assert_eq!(g.orphans.len(), 1);
        // the 21:00 row on the 12th opens the night of the 13th, which has no day rows
        assert_eq!(g.excluded_days.len(), 1);
        assert_eq!(g.excluded_days[0].reason, DayExclusion::NoDaytimeObservations);
        assert_eq!(g.excluded_days[0].n_night_obs, 1);
    }

    #[test]
    fn invalid_days_are_excluded_with_reasons() {
        let mut rows = vec![obs("2023-07-12T08:00:00", Some(1))];
        rows.push(obs("2023-07-12T22:00:00", None));
        rows.push(obs("2023-07-13T08:00:00", Some(1)));
        rows.push(obs("2023-07-13T08:10:00", Some(1)));
        let cfg = GroupingConfig {
            min_day_obs: 2,
            ..GroupingConfig::default()
        };
        let g = group_days(&rows, &cfg);
        assert_eq!(g.days.len(), 1);
        let reasons: Vec<_> = g.excluded_days.iter().map(|e| e.reason.clone()).collect();
        assert_eq!(
            reasons,
            vec![DayExclusion::TooFewDaytimeObservations { found: 1, required: 2 }]
        );

        let mut flagged = cfg.clone();
        flagged.flagged_dates.insert(NaiveDate::from_ymd_opt(2023, 7, 13).unwrap());
        let g = group_days(&rows, &flagged);
        assert!(g.days.is_empty());
        assert_eq!(g.excluded_days[1].reason, DayExclusion::Flagged);

        let rows = vec![obs("2023-07-13T08:00:00", Some(1)), obs("2023-07-13T08:10:00", Some(1))];
        let g = group_days(&rows, &cfg);
        assert_eq!(g.excluded_days[0].reason, DayExclusion::NoNightObservations);
    }

    fn dates(n: usize) -> BTreeSet<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2023, 7, 11).unwrap();
        (0..n).map(|i| start + Duration::days(i as i64)).collect()
    }

    #[test]
    fn seventy_five_days_give_fifteen_per_fold() {
        let plan = make_folds(&dates(75), 5, 42).unwrap();
        assert!(plan.folds.iter().all(|f| f.len() == 15));
        assert_eq!(plan.all_dates(), dates(75));
    }

    #[test]
    fn ten_days_even_split_and_determinism() {
        let a = make_folds(&dates(10), 5, 7).unwrap();
        assert!(a.folds.iter().all(|f| f.len() == 2));
        assert_eq!(a, make_folds(&dates(10), 5, 7).unwrap());
        assert_ne!(a, make_folds(&dates(10), 5, 8).unwrap());
    }

    #[test]
    fn too_few_days() {
        assert!(matches!(
            make_folds(&dates(4), 5, 0),
            Err(Error::TooFewDays { n_dates: 4, k: 5 })
        ));
        assert!(make_folds(&dates(4), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_dates(n in 2usize..120, k in 2usize..10, seed: u64) {
            prop_assume!(n >= k);
            let all = dates(n);
            let plan = make_folds(&all, k, seed).unwrap();
            prop_assert_eq!(plan.k(), k);
            let total: usize = plan.folds.iter().map(Vec::len).sum();
            prop_assert_eq!(total, n);
            prop_assert_eq!(plan.all_dates(), all);
            let sizes: Vec<_> = plan.folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for i in 0..k {
                prop_assert!(plan.test_dates(i).is_disjoint(&plan.train_dates(i)));
            }
        }

        #[test]
        fn grouping_is_total(offsets in proptest::collection::btree_set(0i64..(6 * 24 * 60), 1..200)) {
            let start = ts("2023-07-11T00:00:00");
            let rows: Vec<_> = offsets
                .iter()
                .map(|&m| {
                    let t = start + Duration::minutes(m);
                    let is_day = slot_of(t).1;
                    RawObservation {
                        timestamp: t,
                        temperature_c: 20.0,
                        relative_humidity_pct: 50.0,
                        cow_count: if is_day && m % 7 != 0 { Some(1) } else { None },
                    }
                })
                .collect();
            let g = group_days(&rows, &GroupingConfig::default());
            let placed: usize = g.days.iter().map(|d| d.day_obs.len() + d.night_obs_prev.len()).sum();
            let excluded: usize = g.excluded_days.iter().map(|d| d.n_day_obs + d.n_night_obs).sum();
            prop_assert_eq!(placed + excluded + g.orphans.len(), rows.len());
        }

        #[test]
        fn ingestion_preserves_order(gaps in proptest::collection::vec(1i64..600, 1..50)) {
            let start = ts("2023-07-11T08:00:00");
            let mut t = start;
            let mut body = String::new();
            let mut expected = Vec::new();
            for (i, g) in gaps.iter().enumerate() {
                t += Duration::seconds(*g);
                let rh = if i % 5 == 3 { 150.0 } else { 40.0 };
                body.push_str(&format!("{},21.0,{rh},4\n", t.format("%Y-%m-%dT%H:%M:%S")));
                if rh <= 100.0 {
                    expected.push(t);
                }
            }
            let got = ingest_str(&body).unwrap();
            let stamps: Vec<_> = got.observations.iter().map(|o| o.timestamp).collect();
            prop_assert_eq!(stamps, expected);
        }
    }
}
