use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Oracle,
}

/// Irreducible correlations per level `k = 2..=n`, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpectrum {
    pub sites: usize,
    pub values: BTreeMap<usize, f64>,
    pub total: f64,
    pub method: Method,
    /// Free-form remarks such as merged levels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CorrelationSpectrum {
    /// All levels `2..=sites` set to zero.
    pub fn zeros(sites: usize, method: Method) -> Self {
        Self {
            sites,
            values: (2..=sites).map(|k| (k, 0.0)).collect(),
            total: 0.0,
            method,
            notes: Vec::new(),
        }
    }

    pub fn value(&self, level: usize) -> f64 {
        self.values.get(&level).copied().unwrap_or(0.0)
    }

    /// Adds `amount` to `level`; levels outside `2..=sites` are ignored.
    pub fn add(&mut self, level: usize, amount: f64) {
        if let Some(v) = self.values.get_mut(&level) {
            *v += amount;
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    /// Levels whose magnitude exceeds `tol`.
    pub fn nonzero_levels(&self, tol: f64) -> Vec<usize> {
        self.values
            .iter()
            .filter(|(_, v)| v.abs() > tol)
            .map(|(&k, _)| k)
            .collect()
    }

    /// Largest level-wise `|self - other|`.
    pub fn max_deviation(&self, other: &CorrelationSpectrum) -> f64 {
        (2..=self.sites.max(other.sites))
            .map(|k| (self.value(k) - other.value(k)).abs())
            .fold(0.0, f64::max)
    }
}
