//! RMSE, day-grouped cross-validation, per-day error summaries and the model
//! comparison table.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DayRecord, FoldPlan};
use crate::error::{Error, Result};
use crate::features::{build_examples, LabeledExample};
use crate::forest::ForestConfig;
use crate::model::{fit_model, ModelSpec, Regressor};
use crate::nn::NetConfig;
use crate::numeric::CompensatedSum;
use crate::tree::TreeConfig;

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    let se: CompensatedSum = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .collect();
    Ok((se.value() / actual.len() as f64).sqrt())
}

/// RMSE of `model` over a set of examples.
pub fn rmse_on<M: Regressor + ?Sized>(model: &M, examples: &[&LabeledExample]) -> Result<f64> {
    let mut actual = Vec::with_capacity(examples.len());
    let mut predicted = Vec::with_capacity(examples.len());
    for e in examples {
        actual.push(e.target);
        predicted.push(model.predict(&e.features.to_row())?);
    }
    rmse(&actual, &predicted)
}

/// Unweighted mean of per-fold values.
pub fn mean_of_folds(per_fold: &[f64]) -> f64 {
    per_fold.iter().sum::<f64>() / per_fold.len() as f64
}

/// Train/test example sets for every fold of `folds`.
///
/// Training rows come from the union of the other folds. Fails with
/// `InvalidFoldPlan` when an example's date belongs to no fold and with
/// `FoldLeak` when a test date also occurs among the training rows.
pub fn fold_split<'a>(
    examples: &'a [LabeledExample],
    folds: &FoldPlan,
) -> Result<Vec<(Vec<&'a LabeledExample>, Vec<&'a LabeledExample>)>> {
    if folds.k() < 2 {
        return Err(Error::InvalidFoldPlan("need at least two folds".into()));
    }
    let planned = folds.all_dates();
    if let Some(e) = examples.iter().find(|e| !planned.contains(&e.date)) {
        return Err(Error::InvalidFoldPlan(format!("date {} is in no fold", e.date)));
    }
    let mut out = Vec::with_capacity(folds.k());
    for fold in 0..folds.k() {
        let test_dates = folds.test_dates(fold);
        let train_dates = folds.train_dates(fold);
        let test: Vec<&LabeledExample> = examples.iter().filter(|e| test_dates.contains(&e.date)).collect();
        let train: Vec<&LabeledExample> = examples.iter().filter(|e| train_dates.contains(&e.date)).collect();
        if let Some(e) = train.iter().find(|e| test_dates.contains(&e.date)) {
            return Err(Error::FoldLeak { fold, date: e.date });
        }
        if test.is_empty() {
            return Err(Error::InvalidFoldPlan(format!("fold {fold} has no test examples")));
        }
        out.push((train, test));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `(n - 1) p` (the R type 7 convention).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Result<QuartileSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(QuartileSummary {
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        min: v[0],
        max: v[v.len() - 1],
    })
}

pub fn quartile_summary(per_day_rmse: &BTreeMap<NaiveDate, f64>) -> Result<QuartileSummary> {
    quartiles(&per_day_rmse.values().copied().collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_days: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub config: ModelSpec,
    pub fold_seed: u64,
    pub per_fold: Vec<FoldResult>,
    #[serde(rename = "per_fold_rmse")]
    pub per_fold_rmse: Vec<f64>,
    #[serde(rename = "overall")]
    pub overall_rmse: f64,
    /// RMSE over all held-out residuals pooled across folds.
    #[serde(rename = "pooled")]
    pub pooled_rmse: f64,
    pub per_day: BTreeMap<NaiveDate, DayError>,
    pub quartiles: QuartileSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayError {
    pub fold: usize,
    pub n_obs: usize,
    pub rmse: f64,
}

impl CvReport {
    pub fn per_day_rmse(&self) -> BTreeMap<NaiveDate, f64> {
        self.per_day.iter().map(|(d, e)| (*d, e.rmse)).collect()
    }
}

/// Runs the fold protocol: for each fold, fit on the other folds' days and
/// score the held-out days. Folds are evaluated in parallel; each stochastic
/// model gets a seed derived from its configured seed and the fold index.
pub fn cross_validate(examples: &[LabeledExample], folds: &FoldPlan, spec: &ModelSpec) -> Result<CvReport> {
    let split = fold_split(examples, folds)?;

    struct FoldOutput {
        result: FoldResult,
        residuals: Vec<f64>,
        days: Vec<(NaiveDate, DayError)>,
    }

    let outputs = split
        .par_iter()
        .enumerate()
        .map(|(fold, (train, test))| -> Result<FoldOutput> {
            let train_rows: Vec<LabeledExample> = train.iter().map(|e| **e).collect();
            let model = fit_model(&spec.for_fold(fold), &train_rows)?;
            let mut by_day: BTreeMap<NaiveDate, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            let mut residuals = Vec::with_capacity(test.len());
            for e in test {
                let p = model.predict(&e.features.to_row())?;
                residuals.push(e.target - p);
                let slot = by_day.entry(e.date).or_default();
                slot.0.push(e.target);
                slot.1.push(p);
            }
            let zeros = vec![0.0; residuals.len()];
            let days = by_day
                .into_iter()
                .map(|(d, (a, p))| {
                    Ok((d, DayError { fold, n_obs: a.len(), rmse: rmse(&a, &p)? }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FoldOutput {
                result: FoldResult {
                    fold,
                    n_train: train.len(),
                    n_test: test.len(),
                    test_days: days.len(),
                    rmse: rmse(&residuals, &zeros)?,
                },
                residuals,
                days,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_fold_rmse: Vec<f64> = outputs.iter().map(|o| o.result.rmse).collect();
    let all_residuals: Vec<f64> = outputs.iter().flat_map(|o| o.residuals.iter().copied()).collect();
    let per_day: BTreeMap<NaiveDate, DayError> = outputs.iter().flat_map(|o| o.days.iter().copied()).collect();
    let per_day_values: Vec<f64> = per_day.values().map(|d| d.rmse).collect();
    Ok(CvReport {
        model: spec.name().to_string(),
        config: *spec,
        fold_seed: folds.seed,
        overall_rmse: mean_of_folds(&per_fold_rmse),
        pooled_rmse: rmse(&all_residuals, &vec![0.0; all_residuals.len()])?,
        per_fold_rmse,
        per_fold: outputs.into_iter().map(|o| o.result).collect(),
        quartiles: quartiles(&per_day_values)?,
        per_day,
    })
}

pub fn write_per_day_csv<W: Write>(out: W, report: &CvReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "fold", "n_obs", "rmse"])?;
    for (d, e) in &report.per_day {
        w.write_record([d.to_string(), e.fold.to_string(), e.n_obs.to_string(), e.rmse.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<per-day csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_hours: f64,
    pub actual: f64,
    pub predicted: f64,
    pub thi_current: f64,
    pub thi_accum: f64,
    pub thi_night_prev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTrace {
    pub date: NaiveDate,
    pub rows: Vec<TraceRow>,
}

pub fn day_trace<M: Regressor + ?Sized>(model: &M, day: &DayRecord) -> Result<DayTrace> {
    let examples = build_examples(day)?;
    day_trace_examples(model, day.date, &examples)
}

/// Trace for `date` built from a feature table; the rows of other dates are
/// ignored.
pub fn day_trace_examples<M: Regressor + ?Sized>(
    model: &M,
    date: NaiveDate,
    examples: &[LabeledExample],
) -> Result<DayTrace> {
    let mut rows = examples
        .iter()
        .filter(|e| e.date == date)
        .map(|e| {
            Ok(TraceRow {
                time_hours: e.features.time_hours,
                actual: e.target,
                predicted: model.predict(&e.features.to_row())?,
                thi_current: e.features.thi_current,
                thi_accum: e.features.thi_accum,
                thi_night_prev: e.features.thi_night_prev,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::UnknownDate(date));
    }
    rows.sort_by(|a, b| a.time_hours.total_cmp(&b.time_hours));
    Ok(DayTrace { date, rows })
}

pub fn write_day_trace_csv<W: Write>(out: W, trace: &DayTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trace.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

/// The three models compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpecs {
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub nn: NetConfig,
}

impl Default for ComparisonSpecs {
    fn default() -> Self {
        ComparisonSpecs {
            tree: TreeConfig::with_depth(5),
            forest: ForestConfig::default(),
            nn: NetConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub rmse: f64,
    pub pooled_rmse: f64,
    pub interpretability: String,
    pub explainability: String,
}

pub fn compare_models(
    examples: &[LabeledExample],
    folds: &FoldPlan,
    specs: &ComparisonSpecs,
) -> Result<Vec<ComparisonRow>> {
    let entries = [
        ("Decision Tree", ModelSpec::Tree(specs.tree), "Very High", "High"),
        ("Random Forest", ModelSpec::Forest(specs.forest), "Medium/High", "Medium"),
        ("Neural Network", ModelSpec::Nn(specs.nn), "Low", "Low"),
    ];
    entries
        .iter()
        .map(|(name, spec, interp, expl)| {
            let report = cross_validate(examples, folds, spec)?;
            Ok(ComparisonRow {
                model: name.to_string(),
                rmse: report.overall_rmse,
                pooled_rmse: report.pooled_rmse,
                interpretability: interp.to_string(),
                explainability: expl.to_string(),
            })
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<comparison csv>", e))?;
    Ok(())
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut s = format!("{:<16} {:>8}  {:<16} {}\n", "Model", "RMSE", "Interpretability", "Explainability");
    for r in rows {
        s.push_str(&format!(
            "{:<16} {:>8.3}  {:<16} {}\n",
            r.model, r.rmse, r.interpretability, r.explainability
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSweepRow {
    pub depth: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

/// Cross-validated tree RMSE per maximum depth.
pub fn sweep_tree(
    examples: &[LabeledExample],
    depths: &[usize],
    folds: &FoldPlan,
    base: &TreeConfig,
) -> Result<Vec<TreeSweepRow>> {
    if depths.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    depths
        .iter()
        .map(|&depth| {
            let spec = ModelSpec::Tree(TreeConfig { max_depth: Some(depth), ..*base });
            let report = cross_validate(examples, folds, &spec)?;
            Ok(TreeSweepRow {
                depth,
                rmse_mean: report.overall_rmse,
                rmse_std: crate::numeric::std_devs(&report.per_fold_rmse).1,
            })
        })
        .collect()
}

pub fn write_tree_sweep_csv<W: Write>(out: W, rows: &[TreeSweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}

/// All dates referenced by a set of examples.
pub fn example_dates(examples: &[LabeledExample]) -> BTreeSet<NaiveDate> {
    examples.iter().map(|e| e.date).collect()
}
