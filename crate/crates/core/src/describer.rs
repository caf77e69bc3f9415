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

//! Dataset descriptions: what the generator is allowed to know about the
//! private input.
//!
//! Independent mode releases each attribute's distribution with
//! Laplace(0, 1/(n·ε)) noise on every probability (negatives clipped to 0,
//! then renormalized, uniform if everything clipped) and the missing rate
//! with the same noise. String length ranges and numeric domains are
//! released as-is in every mode; they are a disclosure channel the
//! budget does not cover.

use std::fmt;
use std::path::Path;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayesnet::{self, BudgetSplit, DiscreteTable, NetworkModel, DEFAULT_MAX_PARENTS};
use crate::distribution::{build_frequency, build_histogram, Bins, Distribution};
use crate::error::{Error, Result};
use crate::ingest::{Column, DataType, DatetimeFormat, Table, DEFAULT_CATEGORICAL_THRESHOLD};
use crate::rng::{frequency_noise_scale, laplace, Purpose, Seeder};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_HISTOGRAM_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Random,
    Independent,
    Correlated,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Random => "random",
            Mode::Independent => "independent",
            Mode::Correlated => "correlated",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Mode::Random),
            "independent" => Ok(Mode::Independent),
            "correlated" => Ok(Mode::Correlated),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrivacyParams {
    /// 0 disables noise.
    pub epsilon: f64,
    pub histogram_size: usize,
    pub categorical_threshold: usize,
    /// Maximum parents per network node.
    pub k: usize,
}

impl Default for PrivacyParams {
    fn default() -> Self {
        PrivacyParams {
            epsilon: DEFAULT_EPSILON,
            histogram_size: DEFAULT_HISTOGRAM_SIZE,
            categorical_threshold: DEFAULT_CATEGORICAL_THRESHOLD,
            k: DEFAULT_MAX_PARENTS,
        }
    }
}

impl PrivacyParams {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be a non-negative number, got {}",
                self.epsilon
            )));
        }
        if self.histogram_size == 0 {
            return Err(Error::InvalidParameter("histogram size must be positive".into()));
        }
        if self.categorical_threshold == 0 {
            return Err(Error::InvalidParameter("categorical threshold must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDescription {
    pub name: String,
    pub data_type: DataType,
    pub categorical: bool,
    pub missing_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Distribution>,
    /// `[min, max]` character length, for string attributes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_range: Option<[usize; 2]>,
    /// `[min, max]` observed value (epoch seconds for datetimes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datetime_format: Option<DatetimeFormat>,
}

impl AttributeDescription {
    /// Whether the attribute can take part in a Bayesian network.
    pub fn is_discretizable(&self) -> bool {
        self.distribution.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return Err(Error::InvalidParameter(format!(
                "missing rate of `{}` is {}",
                self.name, self.missing_rate
            )));
        }
        if let Some([lo, hi]) = self.length_range {
            if lo > hi {
                return Err(Error::InvalidParameter(format!("length range of `{}` is inverted", self.name)));
            }
        }
        if self.data_type == DataType::String && !self.categorical && self.length_range.is_none() {
            return Err(Error::InvalidParameter(format!("`{}` has no length range", self.name)));
        }
        if let Some(d) = &self.distribution {
            d.validate()?;
            let expected_bar = self.categorical;
            if d.bins.is_bar_chart() != expected_bar {
                return Err(Error::InvalidDistribution(format!(
                    "`{}` needs a {}",
                    self.name,
                    if expected_bar { "bar chart" } else { "histogram" }
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescription {
    pub format_version: u32,
    pub mode: Mode,
    /// Input row count.
    pub n: usize,
    pub privacy: PrivacyParams,
    pub attributes: Vec<AttributeDescription>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DatasetDescription {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDescription> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let mut names: Vec<&str> = self.names();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateColumn(w[0].to_string()));
        }
        for a in &self.attributes {
            a.validate()?;
        }
        match (&self.network, self.mode) {
            (Some(model), Mode::Correlated) => {
                model.network.validate()?;
                for node in &model.network.nodes {
                    let attr = self
                        .attribute(&node.child)
                        .ok_or_else(|| Error::UnknownAttribute(node.child.clone()))?;
                    let bins = attr.distribution.as_ref().ok_or_else(|| {
                        Error::InvalidNetwork(format!("`{}` has no distribution", node.child))
                    })?;
                    let cpt = model.conditional(&node.child).ok_or_else(|| {
                        Error::InvalidNetwork(format!("no conditional table for `{}`", node.child))
                    })?;
                    cpt.validate(bins.len())?;
                    for (p, card) in cpt.parents.iter().zip(&cpt.parent_cardinalities) {
                        let pb = self.attribute(p).and_then(|a| a.distribution.as_ref()).map(|d| d.len());
                        if pb != Some(*card) {
                            return Err(Error::InvalidNetwork(format!(
                                "parent `{p}` of `{}` does not match its bins",
                                node.child
                            )));
                        }
                    }
                }
            }
            (None, Mode::Correlated) => {
                return Err(Error::InvalidNetwork("correlated description without a network".into()))
            }
            (Some(_), _) => return Err(Error::InvalidNetwork(format!("{} description carries a network", self.mode))),
            (None, _) => {}
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: DatasetDescription = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Adds Laplace(0, 1/(n·ε)) to every probability, clips at 0 and
/// renormalizes. `epsilon == 0` returns the input unchanged.
pub fn add_laplace_noise<R: Rng + ?Sized>(dist: &Distribution, epsilon: f64, n: usize, rng: &mut R) -> Distribution {
    if epsilon == 0.0 {
        return dist.clone();
    }
    let scale = frequency_noise_scale(n, epsilon);
    let weights = dist
        .probabilities
        .iter()
        .map(|p| (p + laplace(rng, scale)).max(0.0))
        .collect();
    Distribution::from_weights(dist.bins.clone(), weights)
}

pub fn noisy_missing_rate<R: Rng + ?Sized>(rate: f64, epsilon: f64, n: usize, rng: &mut R) -> f64 {
    if epsilon == 0.0 {
        return rate;
    }
    (rate + laplace(rng, frequency_noise_scale(n, epsilon))).clamp(0.0, 1.0)
}

fn length_range(column: &Column) -> [usize; 2] {
    let mut lens = column.non_missing().map(|s| s.chars().count());
    match lens.next() {
        None => [0, 0],
        Some(first) => lens.fold([first, first], |[lo, hi], l| [lo.min(l), hi.max(l)]),
    }
}

fn numeric_domain(column: &Column) -> Option<[f64; 2]> {
    let values: Vec<f64> = column.numeric_cells().into_iter().flatten().collect();
    if values.is_empty() {
        return None;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some([lo, hi])
}

fn exact_distribution(column: &Column, histogram_size: usize) -> Result<Option<Distribution>> {
    if column.non_missing_count() == 0 {
        return Ok(None);
    }
    if column.categorical {
        build_frequency(column).map(Some)
    } else if column.data_type.is_numeric() {
        build_histogram(column, histogram_size).map(Some)
    } else {
        Ok(None)
    }
}

fn describe_attribute(
    index: usize,
    column: &Column,
    mode: Mode,
    privacy: &PrivacyParams,
    epsilon: f64,
    n: usize,
    seeder: &Seeder,
) -> Result<AttributeDescription> {
    let mut attr = AttributeDescription {
        name: column.name.clone(),
        data_type: column.data_type,
        categorical: column.categorical,
        missing_rate: 0.0,
        distribution: None,
        length_range: (column.data_type == DataType::String).then(|| length_range(column)),
        numeric_domain: if column.data_type.is_numeric() {
            numeric_domain(column)
        } else {
            None
        },
        datetime_format: column.datetime_format,
    };
    if mode == Mode::Random {
        return Ok(attr);
    }
    let mut rng = seeder.stream(Purpose::AttributeNoise, index as u64);
    attr.distribution = exact_distribution(column, privacy.histogram_size)?
        .map(|d| add_laplace_noise(&d, epsilon, n, &mut rng));
    attr.missing_rate = noisy_missing_rate(column.missing_rate()?, epsilon, n, &mut rng);
    Ok(attr)
}

/// Builds a description of `table`. All noise is drawn from streams of
/// `seed`, so the same seed reproduces the same description.
pub fn describe(table: &Table, mode: Mode, privacy: &PrivacyParams, seed: u64) -> Result<DatasetDescription> {
    privacy.validate()?;
    if table.row_count() == 0 || table.column_count() == 0 {
        return Err(Error::EmptyTable);
    }
    let n = table.row_count();
    let seeder = Seeder::new(seed);
    let mut warnings = Vec::new();

    let mut mode = mode;
    if mode == Mode::Correlated {
        let eligible = table
            .columns
            .iter()
            .filter(|c| c.non_missing_count() > 0 && (c.categorical || c.data_type.is_numeric()))
            .count();
        if eligible < 2 {
            let msg = format!(
                "correlated mode needs at least 2 discretizable attributes, found {eligible}; \
                 fell back to independent mode"
            );
            warn!("{msg}");
            warnings.push(msg);
            mode = Mode::Independent;
        }
    }

    let budget = BudgetSplit::even(privacy.epsilon);
    let marginal_epsilon = match mode {
        Mode::Correlated => budget.conditionals,
        _ => privacy.epsilon,
    };

    let attributes = table
        .columns
        .par_iter()
        .enumerate()
        .map(|(i, c)| describe_attribute(i, c, mode, privacy, marginal_epsilon, n, &seeder))
        .collect::<Result<Vec<_>>>()?;

    let network = if mode == Mode::Correlated {
        let data = DiscreteTable::from_table(
            table,
            attributes.iter().filter_map(|a| {
                a.distribution
                    .as_ref()
                    .map(|d| (a.name.as_str(), &d.bins, d.probabilities.clone()))
            }),
        )?;
        Some(bayesnet::learn_model(&data, privacy.k, privacy.epsilon, &seeder)?)
    } else {
        None
    };

    let description = DatasetDescription {
        format_version: FORMAT_VERSION,
        mode,
        n,
        privacy: *privacy,
        attributes,
        network,
        warnings,
    };
    Ok(description)
}

/// Bins of an attribute, if it has a distribution.
pub fn attribute_bins(attr: &AttributeDescription) -> Option<&Bins> {
    attr.distribution.as_ref().map(|d| &d.bins)
}
