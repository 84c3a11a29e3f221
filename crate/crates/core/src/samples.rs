//! Dense row-major design matrix with regression targets.

use crate::error::{Error, Result};
use crate::features::{LabeledExample, FEATURE_NAMES, N_FEATURES};

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n_features: usize,
    feature_names: Vec<String>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Samples {
    pub fn new(n_features: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidConfig("samples need at least one feature".into()));
        }
        if x.len() != n_features * y.len() {
            return Err(Error::ArityMismatch {
                expected: n_features * y.len(),
                got: x.len(),
            });
        }
        if !x.iter().chain(&y).all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("samples contain non-finite values".into()));
        }
        Ok(Samples {
            n_features,
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
            x,
            y,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                actual: targets.len(),
                predicted: rows.len(),
            });
        }
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::ArityMismatch {
                expected: n_features,
                got: bad.len(),
            });
        }
        Samples::new(n_features, rows.concat(), targets.to_vec())
    }

    pub fn from_examples<'a>(examples: impl IntoIterator<Item = &'a LabeledExample>) -> Self {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for e in examples {
            x.extend_from_slice(&e.features.to_row());
            y.push(e.target);
        }
        Samples {
            n_features: N_FEATURES,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            x,
            y,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                got: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.n_features)
    }

    #[inline]
    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.x[i * self.n_features + feature]
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    /// Copy of the listed rows, duplicates allowed.
    pub fn select(&self, indices: &[usize]) -> Samples {
        let mut x = Vec::with_capacity(indices.len() * self.n_features);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Samples {
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
            x,
            y,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        let s = Samples::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[5.0, 6.0]).unwrap();
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert_eq!(s.value(0, 1), 2.0);
        assert_eq!(s.select(&[1, 1]).targets(), &[6.0, 6.0]);
        assert!(Samples::from_rows(&[vec![1.0], vec![1.0, 2.0]], &[0.0, 0.0]).is_err());
        assert!(Samples::from_rows(&[vec![f64::NAN]], &[0.0]).is_err());
        assert!(Samples::new(2, vec![1.0; 3], vec![0.0; 2]).is_err());
    }
}
