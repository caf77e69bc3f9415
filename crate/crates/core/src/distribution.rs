// Copyright 2026 The DataSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Bar charts and equi-width histograms, and the discretization they induce.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Column;

pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bins {
    /// One bar per category label, sorted lexicographically.
    BarChart { labels: Vec<String> },
    /// `edges.len() == bins + 1`; bin `i` is `[edges[i], edges[i+1])`, and
    /// the last bin also holds its upper edge.
    Histogram { edges: Vec<f64> },
}

impl Bins {
    pub fn len(&self) -> usize {
        match self {
            Bins::BarChart { labels } => labels.len(),
            Bins::Histogram { edges } => edges.len().saturating_sub(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_bar_chart(&self) -> bool {
        matches!(self, Bins::BarChart { .. })
    }

    /// `[lo, hi)` of histogram bin `i`.
    pub fn interval(&self, i: usize) -> Option<(f64, f64)> {
        match self {
            Bins::Histogram { edges } if i + 1 < edges.len() => Some((edges[i], edges[i + 1])),
            _ => None,
        }
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        match self {
            Bins::BarChart { labels } => labels.get(i).map(String::as_str),
            Bins::Histogram { .. } => None,
        }
    }

    /// Human-readable name of bin `i` (`BS`, `[10, 20)`).
    pub fn describe_bin(&self, i: usize) -> String {
        match self {
            Bins::BarChart { labels } => labels[i].clone(),
            Bins::Histogram { edges } => format!("[{}, {})", edges[i], edges[i + 1]),
        }
    }

    /// Bin index of a numeric value; out-of-range values go to the nearest
    /// edge bin. `None` for bar charts.
    pub fn bin_of_value(&self, v: f64) -> Option<usize> {
        match self {
            Bins::Histogram { edges } => {
                let bins = edges.len() - 1;
                let idx = edges.partition_point(|e| *e <= v);
                Some(idx.saturating_sub(1).min(bins - 1))
            }
            Bins::BarChart { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Bins::BarChart { labels } => {
                if labels.is_empty() {
                    return Err(Error::InvalidDistribution("bar chart has no labels".into()));
                }
                let mut sorted = labels.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != labels.len() {
                    return Err(Error::InvalidDistribution("duplicate labels".into()));
                }
            }
            Bins::Histogram { edges } => {
                if edges.len() < 2 {
                    return Err(Error::InvalidDistribution("histogram needs at least 2 edges".into()));
                }
                if edges.iter().any(|e| !e.is_finite()) {
                    return Err(Error::InvalidDistribution("non-finite edge".into()));
                }
                if edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidDistribution("edges not strictly increasing".into()));
                }
                let width = (edges[edges.len() - 1] - edges[0]) / (edges.len() - 1) as f64;
                for w in edges.windows(2) {
                    if ((w[1] - w[0]) - width).abs() > 1e-9 * width.abs().max(1.0) {
                        return Err(Error::InvalidDistribution("bins are not equal width".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    #[serde(flatten)]
    pub bins: Bins,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn new(bins: Bins, probabilities: Vec<f64>) -> Result<Self> {
        let d = Distribution { bins, probabilities };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(bins: Bins) -> Self {
        let m = bins.len();
        Distribution {
            bins,
            probabilities: vec![1.0 / m as f64; m],
        }
    }

    /// Normalizes raw non-negative weights; all-zero weights give the uniform
    /// distribution.
    pub fn from_weights(bins: Bins, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            Distribution {
                bins,
                probabilities: weights.into_iter().map(|w| w / total).collect(),
            }
        } else {
            Distribution::uniform(bins)
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.bins.validate()?;
        if self.bins.len() != self.probabilities.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} bins but {} probabilities",
                self.bins.len(),
                self.probabilities.len()
            )));
        }
        if self.probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite probability".into()));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(())
    }

    pub fn sample_bin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probabilities, rng)
    }
}

/// Draws an index with probability proportional to `weights`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Bar chart over the observed distinct values of a categorical column.
pub fn build_frequency(column: &Column) -> Result<Distribution> {
    if !column.categorical {
        return Err(Error::NotCategorical(column.name.clone()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in column.non_missing() {
        *counts.entry(v).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::UntypableColumn(column.name.clone()));
    }
    let labels = counts.keys().map(|s| s.to_string()).collect();
    let probabilities = counts.values().map(|c| *c as f64 / total as f64).collect();
    Ok(Distribution {
        bins: Bins::BarChart { labels },
        probabilities,
    })
}

/// Equal-width edges over `[min, max]`; a degenerate range becomes `[c, c+1)`.
pub fn histogram_edges(min: f64, max: f64, bins: usize) -> Vec<f64> {
    if min >= max {
        return vec![min, min + 1.0];
    }
    let bins = bins.max(1);
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
    edges.push(max);
    edges
}

/// Equi-width histogram of a numeric or datetime column.
pub fn build_histogram(column: &Column, bins: usize) -> Result<Distribution> {
    if !column.data_type.is_numeric() {
        return Err(Error::InvalidParameter(format!(
            "histogram requires a numeric column, `{}` is {}",
            column.name, column.data_type
        )));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram size must be positive".into()));
    }
    let values: Vec<f64> = column.numeric_cells().into_iter().flatten().collect();
    if values.is_empty() {
        return Err(Error::UntypableColumn(column.name.clone()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = Bins::Histogram {
        edges: histogram_edges(min, max, bins),
    };
    let mut counts = vec![0usize; bins.len()];
    for v in &values {
        counts[bins.bin_of_value(*v).expect("histogram")] += 1;
    }
    let total = values.len() as f64;
    Ok(Distribution {
        bins,
        probabilities: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// Exact (noise-free) distribution of a column: bar chart when categorical,
/// histogram when numeric, `None` for free-text strings or empty columns.
pub fn fit_distribution(column: &Column, histogram_size: usize) -> Option<Distribution> {
    if column.non_missing_count() == 0 {
        return None;
    }
    if column.categorical {
        build_frequency(column).ok()
    } else if column.data_type.is_numeric() {
        build_histogram(column, histogram_size).ok()
    } else {
        None
    }
}

/// Maps cells to bin codes under a fixed bin structure.
#[derive(Debug, Clone)]
pub struct Discretizer {
    bins: Bins,
    label_index: HashMap<String, usize>,
}

impl Discretizer {
    pub fn new(bins: &Bins) -> Self {
        let label_index = match bins {
            Bins::BarChart { labels } => labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), i))
                .collect(),
            Bins::Histogram { .. } => HashMap::new(),
        };
        Discretizer {
            bins: bins.clone(),
            label_index,
        }
    }

    pub fn bins(&self) -> &Bins {
        &self.bins
    }

    pub fn cardinality(&self) -> usize {
        self.bins.len()
    }

    /// Code of one cell; `None` for missing cells, unknown labels and
    /// unparseable numerics.
    pub fn code(&self, column: &Column, cell: Option<&str>) -> Option<u32> {
        let cell = cell?;
        match &self.bins {
            Bins::BarChart { .. } => self.label_index.get(cell).map(|i| *i as u32),
            Bins::Histogram { .. } => crate::ingest::parse_numeric(column.data_type, cell)
                .and_then(|v| self.bins.bin_of_value(v))
                .map(|i| i as u32),
        }
    }

    pub fn discretize(&self, column: &Column) -> DiscreteColumn {
        DiscreteColumn {
            codes: column
                .cells
                .iter()
                .map(|c| self.code(column, c.as_deref()))
                .collect(),
            cardinality: self.cardinality(),
        }
    }
}

/// Bin codes of one attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteColumn {
    pub codes: Vec<Option<u32>>,
    pub cardinality: usize,
}

impl DiscreteColumn {
    pub fn new(codes: Vec<Option<u32>>, cardinality: usize) -> Self {
        DiscreteColumn { codes, cardinality }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cardinality];
        for c in self.codes.iter().flatten() {
            counts[*c as usize] += 1;
        }
        counts
    }
}
