//! Seeded synthetic farm logs, and brute-force reference computations used to
//! check the tree and network code.
//!
//! Nothing here calls into `features`, `tree` or `nn` arithmetic: the oracles
//! re-derive their results from the definitions.

use std::io::Write;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{RawObservation, DEFAULT_HERD_SIZE};
use crate::error::{Error, Result};
use crate::nn::{Activation, Gradients, LayerGradient, Network};
use crate::rng::{self, Purpose};
use crate::tree::{SplitWeighting, TIE_TOLERANCE};

/// Diurnal weather model. Temperature follows a cosine peaking at
/// `temp_peak_hour`; humidity moves opposite to it. The daily mean temperature
/// is an AR(1) process around `temp_mean_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherConfig {
    pub temp_mean_c: f64,
    pub temp_amplitude_c: f64,
    pub temp_peak_hour: f64,
    pub rh_mean_pct: f64,
    pub rh_amplitude_pct: f64,
    pub drift_std_c: f64,
    pub drift_persistence: f64,
    pub temp_jitter_c: f64,
    pub rh_jitter_pct: f64,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        WeatherConfig {
            temp_mean_c: 26.0,
            temp_amplitude_c: 7.0,
            temp_peak_hour: 15.0,
            rh_mean_pct: 55.0,
            rh_amplitude_pct: 20.0,
            drift_std_c: 1.5,
            drift_persistence: 0.8,
            temp_jitter_c: 0.3,
            rh_jitter_pct: 2.0,
        }
    }
}

/// Latent shade-seeking rule: a logistic response in an effective THI,
/// gated to the middle of the day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorKernel {
    pub thi_threshold: f64,
    pub thi_scale: f64,
    /// Weight of the accumulated THI in the effective THI.
    pub accum_weight: f64,
    /// Weight of the previous night's deviation from `night_reference`.
    pub night_weight: f64,
    pub night_reference: f64,
    pub rise_hour: f64,
    pub fall_hour: f64,
    pub gate_scale_hours: f64,
    /// Fraction of the herd in the shade at full gate and low THI.
    pub base_fraction: f64,
}

impl Default for BehaviorKernel {
    fn default() -> Self {
        BehaviorKernel {
            thi_threshold: 80.0,
            thi_scale: 2.0,
            accum_weight: 0.3,
            night_weight: 0.2,
            night_reference: 68.0,
            rise_hour: 11.0,
            fall_hour: 17.0,
            gate_scale_hours: 0.75,
            base_fraction: 0.1,
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl BehaviorKernel {
    /// Expected number of cows in the shade, in `[0, herd_size]`.
    pub fn expected(&self, time_hours: f64, thi_current: f64, thi_accum: f64, thi_night_prev: f64, herd_size: u32) -> f64 {
        let thi_eff = thi_current
            + self.accum_weight * (thi_accum - thi_current)
            + self.night_weight * (thi_night_prev - self.night_reference);
        let heat = logistic((thi_eff - self.thi_threshold) / self.thi_scale);
        let gate = logistic((time_hours - self.rise_hour) / self.gate_scale_hours)
            * logistic((self.fall_hour - time_hours) / self.gate_scale_hours);
        let frac = gate * (self.base_fraction + (1.0 - self.base_fraction) * heat);
        (herd_size as f64 * frac).clamp(0.0, herd_size as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_days: usize,
    pub first_day: NaiveDate,
    pub cadence_minutes: f64,
    pub herd_size: u32,
    pub noise_std: f64,
    pub seed: u64,
    pub weather: WeatherConfig,
    pub kernel: BehaviorKernel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_days: 75,
            first_day: NaiveDate::from_ymd_opt(2023, 7, 11).unwrap(),
            cadence_minutes: 7.5,
            herd_size: DEFAULT_HERD_SIZE,
            noise_std: 8.0,
            seed: 42,
            weather: WeatherConfig::default(),
            kernel: BehaviorKernel::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(Error::InvalidConfig("n_days must be at least 1".into()));
        }
        if !(self.cadence_minutes > 0.0 && self.cadence_minutes <= 60.0) {
            return Err(Error::InvalidConfig("cadence_minutes must be in (0, 60]".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig("noise_std must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub observations: Vec<RawObservation>,
    /// Kernel value for each daytime observation (`None` at night), aligned
    /// with `observations`.
    pub expected: Vec<Option<f64>>,
}

/// THI written out from the NRC definition, RH in percent.
fn nrc_thi(t: f64, rh: f64) -> f64 {
    (1.8 * t + 32.0) - (0.55 - 0.0055 * rh) * (1.8 * t - 26.0)
}

fn hours(ts: NaiveDateTime) -> f64 {
    ts.hour() as f64 + ts.minute() as f64 / 60.0 + ts.second() as f64 / 3600.0
}

/// Generates a log from 21:00 on the eve of `first_day` up to (excluding)
/// 21:00 of the last day, so every day has a complete preceding night.
pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let w = &config.weather;
    let start = (config.first_day - Duration::days(1)).and_time(NaiveTime::from_hms_opt(21, 0, 0).unwrap());
    let end = (config.first_day + Duration::days(config.n_days as i64 - 1))
        .and_time(NaiveTime::from_hms_opt(21, 0, 0).unwrap());
    let step_s = config.cadence_minutes * 60.0;

    // Daily mean-temperature offsets, one per calendar date touched.
    let mut weather_rng = rng::stream(config.seed, Purpose::Weather, 0);
    let drift = Normal::new(0.0, w.drift_std_c).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut offsets = Vec::with_capacity(config.n_days + 1);
    let mut level = 0.0;
    for _ in 0..=config.n_days {
        level = w.drift_persistence * level + drift.sample(&mut weather_rng);
        offsets.push(level);
    }
    let temp_jitter = Normal::new(0.0, w.temp_jitter_c).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let rh_jitter = Normal::new(0.0, w.rh_jitter_pct).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut behavior_rng = rng::stream(config.seed, Purpose::Behavior, 0);

    let mut observations = Vec::new();
    let mut expected = Vec::new();
    let mut night_thi: Vec<f64> = Vec::new();
    let mut night_mean = w.temp_mean_c;
    let mut day_sum = 0.0;
    let mut day_n = 0usize;

    for k in 0.. {
        let ts = start + Duration::milliseconds((k as f64 * step_s * 1000.0).round() as i64);
        if ts >= end {
            break;
        }
        let ts = ts.with_nanosecond(0).unwrap();
        let h = hours(ts);
        let idx = (ts.date() - config.first_day).num_days() + 1;
        let offset = offsets[idx.clamp(0, config.n_days as i64) as usize];
        let phase = 2.0 * std::f64::consts::PI * (h - w.temp_peak_hour) / 24.0;
        let temperature_c = w.temp_mean_c + offset + w.temp_amplitude_c * phase.cos() + temp_jitter.sample(&mut weather_rng);
        let relative_humidity_pct = (w.rh_mean_pct - w.rh_amplitude_pct * phase.cos() + rh_jitter.sample(&mut weather_rng))
            .clamp(5.0, 100.0);
        let thi = nrc_thi(temperature_c, relative_humidity_pct);

        let is_day = (7.0..21.0).contains(&h);
        if is_day {
            if !night_thi.is_empty() {
                night_mean = night_thi.iter().sum::<f64>() / night_thi.len() as f64;
                night_thi.clear();
                day_sum = 0.0;
                day_n = 0;
            }
            day_sum += thi;
            day_n += 1;
            let accum = day_sum / day_n as f64;
            let e = config.kernel.expected(h, thi, accum, night_mean, config.herd_size);
            let noisy = e + if config.noise_std > 0.0 { noise.sample(&mut behavior_rng) } else { 0.0 };
            let count = noisy.round().clamp(0.0, config.herd_size as f64) as u32;
            observations.push(RawObservation { timestamp: ts, temperature_c, relative_humidity_pct, cow_count: Some(count) });
            expected.push(Some(e));
        } else {
            night_thi.push(thi);
            observations.push(RawObservation { timestamp: ts, temperature_c, relative_humidity_pct, cow_count: None });
            expected.push(None);
        }
    }
    Ok(SynthData { observations, expected })
}

/// Writes observations in the ingestion schema.
pub fn write_observations_csv<W: Write>(out: W, observations: &[RawObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "temperature_c", "relative_humidity_pct", "cow_count"])?;
    for o in observations {
        w.write_record([
            o.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            o.temperature_c.to_string(),
            o.relative_humidity_pct.to_string(),
            o.cow_count.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<observations csv>", e))?;
    Ok(())
}

/// Uniform random regression data for oracle comparisons.
pub fn random_dataset<R: Rng>(rng: &mut R, n_rows: usize, n_features: usize, distinct_levels: Option<u32>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let draw = |rng: &mut R| match distinct_levels {
        Some(l) => rng.random_range(0..l) as f64,
        None => rng.random_range(-10.0..10.0),
    };
    let rows: Vec<Vec<f64>> = (0..n_rows).map(|_| (0..n_features).map(|_| draw(rng)).collect()).collect();
    let targets = (0..n_rows).map(|_| draw(rng)).collect();
    (rows, targets)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub objective: f64,
}

fn two_pass_sse(ys: &[f64]) -> f64 {
    let m = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - m) * (y - m)).sum()
}

fn oracle_term(weighting: SplitWeighting, ys: &[f64]) -> f64 {
    let sse = two_pass_sse(ys);
    match weighting {
        SplitWeighting::SizeWeighted => sse,
        SplitWeighting::Unweighted => sse / ys.len() as f64,
    }
}

/// Exhaustive split search: every midpoint between distinct consecutive
/// values of every feature in `subset`, each child's error recomputed from
/// scratch. Candidates are visited feature-ascending, threshold-ascending, and
/// a later candidate wins only if it is lower by more than the tie tolerance.
/// Returns `None` when no split improves on the unsplit node.
pub fn oracle_best_split(rows: &[Vec<f64>], targets: &[f64], subset: &[usize], weighting: SplitWeighting) -> Option<OracleSplit> {
    if targets.len() < 2 {
        return None;
    }
    let parent = oracle_term(weighting, targets);
    let tol = TIE_TOLERANCE * parent.abs().max(f64::MIN_POSITIVE);
    let mut features = subset.to_vec();
    features.sort_unstable();
    features.dedup();
    let mut best: Option<OracleSplit> = None;
    for &f in &features {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            let left: Vec<f64> = rows.iter().zip(targets).filter(|(r, _)| r[f] <= t).map(|(_, y)| *y).collect();
            let right: Vec<f64> = rows.iter().zip(targets).filter(|(r, _)| r[f] > t).map(|(_, y)| *y).collect();
            let objective = oracle_term(weighting, &left) + oracle_term(weighting, &right);
            if best.is_none_or(|b| objective < b.objective - tol) {
                best = Some(OracleSplit { feature: f, threshold: t, objective });
            }
        }
    }
    best.filter(|b| b.objective < parent - tol)
}

/// Network output evaluated index by index from the stored parameters.
pub fn oracle_forward(net: &Network, row: &[f64]) -> f64 {
    let s = &net.input_standardizer;
    let mut a: Vec<f64> = (0..row.len()).map(|j| (row[j] - s.means[j]) / s.stds[j]).collect();
    for layer in &net.layers {
        let mut next = vec![0.0; layer.n_out];
        for (i, out) in next.iter_mut().enumerate() {
            let mut z = layer.biases[i];
            for (j, x) in a.iter().enumerate() {
                z += layer.weights[i * layer.n_in + j] * x;
            }
            *out = match layer.activation {
                Activation::Relu => {
                    if z > 0.0 {
                        z
                    } else {
                        0.0
                    }
                }
                Activation::Linear => z,
            };
        }
        a = next;
    }
    a[0]
}

/// Mean squared error of the raw network output over a batch.
pub fn oracle_loss(net: &Network, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    let total: f64 = rows.iter().zip(targets).map(|(r, y)| (oracle_forward(net, r) - y).powi(2)).sum();
    total / rows.len() as f64
}

fn param_mut(net: &mut Network, layer: usize, k: usize, is_bias: bool) -> &mut f64 {
    let l = &mut net.layers[layer];
    if is_bias {
        &mut l.biases[k]
    } else {
        &mut l.weights[k]
    }
}

/// Central differences of [`oracle_loss`] with respect to every weight and
/// bias.
pub fn oracle_fd_gradient(net: &Network, rows: &[Vec<f64>], targets: &[f64], step: f64) -> Gradients {
    let mut probe = net.clone();
    let mut diff = |l: usize, k: usize, is_bias: bool| {
        let orig = *param_mut(&mut probe, l, k, is_bias);
        *param_mut(&mut probe, l, k, is_bias) = orig + step;
        let up = oracle_loss(&probe, rows, targets);
        *param_mut(&mut probe, l, k, is_bias) = orig - step;
        let down = oracle_loss(&probe, rows, targets);
        *param_mut(&mut probe, l, k, is_bias) = orig;
        (up - down) / (2.0 * step)
    };
    let layers = net
        .layers
        .iter()
        .enumerate()
        .map(|(l, layer)| LayerGradient {
            weights: (0..layer.weights.len()).map(|k| diff(l, k, false)).collect(),
            biases: (0..layer.biases.len()).map(|k| diff(l, k, true)).collect(),
        })
        .collect();
    Gradients { layers }
}

/// Largest elementwise relative difference between two gradient structures,
/// `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &Gradients, b: &Gradients, floor: f64) -> f64 {
    a.flatten()
        .iter()
        .zip(b.flatten())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{group_days, ingest_reader, ColumnSchema, GroupingConfig, IngestConfig};
    use crate::nn::{backprop_grads, DenseLayer, NetConfig, Standardizer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> SynthConfig {
        SynthConfig { n_days: 6, ..SynthConfig::default() }
    }

    #[test]
    fn generator_round_trips_through_ingestion() {
        let cfg = small();
        let data = generate(&cfg).unwrap();
        let mut buf = Vec::new();
        write_observations_csv(&mut buf, &data.observations).unwrap();
        let ing = ingest_reader(&buf[..], &ColumnSchema::default(), &IngestConfig::default()).unwrap();
        assert!(ing.rejected.is_empty());
        assert_eq!(ing.observations, data.observations);
        let g = group_days(&ing.observations, &GroupingConfig::default());
        assert_eq!(g.days.len(), 6);
        assert!(g.excluded_days.is_empty() && g.orphans.is_empty());
        for d in &g.days {
            assert_eq!(d.day_obs.len(), 112);
            assert_eq!(d.night_obs_prev.len(), 80);
        }
    }

    #[test]
    fn default_size_and_ranges() {
        let data = generate(&SynthConfig::default()).unwrap();
        let day_rows = data.observations.iter().filter(|o| o.cow_count.is_some()).count();
        assert_eq!(day_rows, 75 * 112);
        for (o, e) in data.observations.iter().zip(&data.expected) {
            assert!((0.0..=100.0).contains(&o.relative_humidity_pct));
            assert_eq!(o.cow_count.is_some(), e.is_some());
            if let (Some(c), Some(e)) = (o.cow_count, e) {
                assert!(c <= 80 && (0.0..=80.0).contains(e));
            }
        }
    }

    #[test]
    fn noiseless_targets_are_rounded_kernel() {
        let data = generate(&SynthConfig { noise_std: 0.0, ..small() }).unwrap();
        for (o, e) in data.observations.iter().zip(&data.expected) {
            if let (Some(c), Some(e)) = (o.cow_count, e) {
                assert_eq!(c as f64, e.round());
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        assert_ne!(generate(&small()).unwrap(), generate(&SynthConfig { seed: 7, ..small() }).unwrap());
    }

    #[test]
    fn kernel_shape() {
        let k = BehaviorKernel::default();
        assert!(k.expected(8.0, 85.0, 85.0, 68.0, 80) < 5.0);
        assert!(k.expected(14.0, 85.0, 85.0, 68.0, 80) > 60.0);
        assert!(k.expected(14.0, 70.0, 70.0, 68.0, 80) < 15.0);
        assert!(k.expected(20.0, 85.0, 85.0, 68.0, 80) < 5.0);
    }

    #[test]
    fn oracle_split_small_cases() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let s = oracle_best_split(&rows, &[0.0, 0.0, 10.0, 10.0], &[0], SplitWeighting::SizeWeighted).unwrap();
        assert_eq!((s.feature, s.threshold, s.objective), (0, 2.5, 0.0));
        assert!(oracle_best_split(&rows, &[3.0; 4], &[0], SplitWeighting::SizeWeighted).is_none());
        assert!(oracle_best_split(&rows, &[3.0; 4], &[0], SplitWeighting::Unweighted).is_none());
    }

    #[test]
    fn oracle_forward_small_net() {
        let mut l1 = DenseLayer::zeros(2, 2, Activation::Relu);
        l1.weights = vec![1.0, -1.0, 0.5, 2.0];
        l1.biases = vec![0.0, -1.0];
        let mut l2 = DenseLayer::zeros(2, 1, Activation::Linear);
        l2.weights = vec![3.0, 1.0];
        l2.biases = vec![0.5];
        let net = Network::from_layers(vec![l1, l2], Standardizer::identity(2)).unwrap();
        // hidden = relu([1 - 2, 0.5 + 4 - 1]) = [0, 3.5]
        assert_eq!(oracle_forward(&net, &[1.0, 2.0]), 4.0);
        assert_eq!(oracle_forward(&net, &[1.0, 2.0]), net.output(&[1.0, 2.0]));
    }

    #[test]
    fn fd_gradient_of_linear_net_is_least_squares_gradient() {
        let mut l = DenseLayer::zeros(3, 1, Activation::Linear);
        l.weights = vec![0.5, -1.0, 2.0];
        l.biases = vec![0.25];
        let net = Network::from_layers(vec![l], Standardizer::identity(3)).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let (rows, targets) = random_dataset(&mut r, 10, 3, None);
        let g = oracle_fd_gradient(&net, &rows, &targets, 1e-6);
        let n = rows.len() as f64;
        let res: Vec<f64> = rows.iter().zip(&targets).map(|(x, y)| oracle_forward(&net, x) - y).collect();
        for j in 0..3 {
            let exact = 2.0 / n * rows.iter().zip(&res).map(|(x, e)| e * x[j]).sum::<f64>();
            assert!((g.layers[0].weights[j] - exact).abs() < 1e-6 * (1.0 + exact.abs()));
        }
        let exact_b = 2.0 / n * res.iter().sum::<f64>();
        assert!((g.layers[0].biases[0] - exact_b).abs() < 1e-6 * (1.0 + exact_b.abs()));
    }

    #[test]
    fn fd_gradient_zero_at_zero_residual() {
        let net = Network::init(2, &NetConfig { hidden_layers: 1, width: 4, ..NetConfig::default() }, Standardizer::identity(2)).unwrap();
        let rows = vec![vec![0.3, -0.2], vec![1.0, 0.5]];
        let targets: Vec<f64> = rows.iter().map(|r| oracle_forward(&net, r)).collect();
        assert!(oracle_fd_gradient(&net, &rows, &targets, 1e-6).flatten().iter().all(|g| g.abs() < 1e-9));
        let bp = backprop_grads(&net, &rows, &targets).unwrap();
        assert!(bp.flatten().iter().all(|&g| g == 0.0));
    }
}
