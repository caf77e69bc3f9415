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

//! Adversarial test data: distribution edits, pathological cells and
//! clusters of near-identical rows with a controlled protected attribute.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayesnet::ConditionRow;
use crate::describer::{DatasetDescription, Mode, FORMAT_VERSION};
use crate::distribution::{Bins, Distribution, PROBABILITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::generator::{generate, GenerationRequest};
use crate::ingest::{distinct_count, format_datetime, format_float, parse_numeric, Column, DataType, DatetimeFormat, Table};
use crate::rng::{Purpose, Seeder};

pub const TYPE_INCONSISTENT_TOKEN: &str = "N/A";
pub const CLUSTER_ID_COLUMN: &str = "cluster_id";

fn check_compatible(attr: &crate::describer::AttributeDescription, dist: &Distribution) -> Result<()> {
    match &dist.bins {
        Bins::BarChart { labels } => {
            if attr.data_type != DataType::String {
                if let Some(bad) = labels.iter().find(|l| parse_numeric(attr.data_type, l).is_none()) {
                    return Err(Error::InvalidDistribution(format!(
                        "label `{bad}` is not a valid {} for `{}`",
                        attr.data_type, attr.name
                    )));
                }
            }
        }
        Bins::Histogram { .. } => {
            if !attr.data_type.is_numeric() {
                return Err(Error::InvalidDistribution(format!(
                    "histogram override on {} attribute `{}`",
                    attr.data_type, attr.name
                )));
            }
        }
    }
    Ok(())
}

/// Replaces one attribute's distribution. In a correlated description an
/// edited parent drops the network (independent mode, with a warning); an
/// edited leaf has every condition row set to the new distribution.
pub fn override_distribution(desc: &DatasetDescription, attribute: &str, dist: Distribution) -> Result<DatasetDescription> {
    let idx = desc
        .attribute_index(attribute)
        .ok_or_else(|| Error::UnknownAttribute(attribute.to_string()))?;
    dist.validate()?;
    check_compatible(&desc.attributes[idx], &dist)?;
    if desc.mode == Mode::Random {
        return Err(Error::ModeMismatch {
            built: Mode::Random,
            requested: Mode::Independent,
        });
    }

    let mut out = desc.clone();
    if let Some(model) = out.network.as_mut() {
        if model.network.is_parent(attribute) {
            out.network = None;
            out.mode = Mode::Independent;
            out.warnings.push(format!(
                "override of `{attribute}` invalidated the conditional tables; downgraded to independent mode"
            ));
        } else if let Some(table) = model.conditionals.iter_mut().find(|t| t.child == attribute) {
            for row in table.conditions.iter_mut() {
                *row = ConditionRow {
                    parent_bins: row.parent_bins.clone(),
                    probabilities: dist.probabilities.clone(),
                };
            }
        }
    }
    out.attributes[idx].distribution = Some(dist);
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    HeavyTail,
    PointMass,
    BimodalExtremes,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::HeavyTail, Preset::PointMass, Preset::BimodalExtremes];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HeavyTail => "heavy-tail",
            Preset::PointMass => "point-mass",
            Preset::BimodalExtremes => "bimodal-extremes",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Preset::HeavyTail => "bin i gets weight 1/(i+1)",
            Preset::PointMass => "all mass on the most probable bin",
            Preset::BimodalExtremes => "half the mass on the first bin, half on the last",
        }
    }

    /// The preset mass laid over the bins of `base`.
    pub fn apply(self, base: &Distribution) -> Distribution {
        let m = base.len();
        let weights: Vec<f64> = match self {
            Preset::HeavyTail => (0..m).map(|i| 1.0 / (i + 1) as f64).collect(),
            Preset::PointMass => {
                let top = base
                    .probabilities
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, p)| if *p > base.probabilities[best] { i } else { best });
                (0..m).map(|i| if i == top { 1.0 } else { 0.0 }).collect()
            }
            Preset::BimodalExtremes => (0..m).map(|i| if i == 0 || i == m - 1 { 1.0 } else { 0.0 }).collect(),
        };
        Distribution::from_weights(base.bins.clone(), weights)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathologyKind {
    Missing,
    TypeInconsistent,
    Extreme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologyRule {
    pub attribute: String,
    pub kind: PathologyKind,
    pub rate: f64,
}

fn extreme_value(column: &Column) -> Result<String> {
    let values: Vec<f64> = column.numeric_cells().into_iter().flatten().collect();
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("`{}` has no observed domain", column.name)));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = max - min;
    let v = if width > 0.0 { min - 2.0 * width } else { min - 2.0 };
    Ok(match column.data_type {
        DataType::Integer => (v.round() as i64).to_string(),
        DataType::Datetime => format_datetime(
            v.round() as i64,
            column.datetime_format.unwrap_or(DatetimeFormat::DateTime),
        ),
        _ => format_float(v),
    })
}

/// Replaces cells rule by rule, each cell independently with the rule's
/// rate. Rule `i` draws from its own stream.
pub fn inject_pathology(table: &Table, rules: &[PathologyRule], seed: u64) -> Result<Table> {
    let mut replacements = Vec::with_capacity(rules.len());
    for rule in rules {
        let col = table
            .column_index(&rule.attribute)
            .ok_or_else(|| Error::UnknownAttribute(rule.attribute.clone()))?;
        if !(0.0..=1.0).contains(&rule.rate) {
            return Err(Error::InvalidParameter(format!("pathology rate {} outside [0, 1]", rule.rate)));
        }
        let column = &table.columns[col];
        let value = match rule.kind {
            PathologyKind::Missing => None,
            PathologyKind::TypeInconsistent => Some(TYPE_INCONSISTENT_TOKEN.to_string()),
            PathologyKind::Extreme => {
                if !column.data_type.is_numeric() {
                    return Err(Error::ExtremeOnString(rule.attribute.clone()));
                }
                Some(extreme_value(column)?)
            }
        };
        replacements.push((col, value));
    }

    let seeder = Seeder::new(seed);
    let mut out = table.clone();
    for (i, (rule, (col, value))) in rules.iter().zip(replacements).enumerate() {
        let mut rng = seeder.stream(Purpose::Pathology, i as u64);
        let cells = &mut out.columns[col].cells;
        for cell in cells.iter_mut() {
            if rng.random::<f64>() < rule.rate {
                *cell = value.clone();
            }
        }
    }
    for (col, orig) in out.columns.iter_mut().zip(&table.columns) {
        if col.cells != orig.cells {
            col.distinct_count = distinct_count(&col.cells);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    #[serde(default)]
    pub id: u64,
    pub center: BTreeMap<String, CenterValue>,
    /// Per-attribute jitter half-width; absent attributes get 0.
    #[serde(default)]
    pub radius: BTreeMap<String, f64>,
    pub size: usize,
    pub protected_attribute: String,
    pub protected_mix: BTreeMap<String, f64>,
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidParameter("cluster size must be at least 1".into()));
        }
        if self.protected_mix.values().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidParameter("protected mix has a negative fraction".into()));
        }
        let total: f64 = self.protected_mix.values().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::MixNotNormalized(total));
        }
        if let Some((name, r)) = self.radius.iter().find(|(_, r)| r.is_nan() || **r < 0.0) {
            return Err(Error::InvalidParameter(format!("radius {r} for `{name}` is negative")));
        }
        if self.center.contains_key(&self.protected_attribute) {
            return Err(Error::InvalidParameter(format!(
                "`{}` is both a center attribute and the protected attribute",
                self.protected_attribute
            )));
        }
        Ok(())
    }

    /// Attribute names in output order: center attributes, then the
    /// protected one.
    pub fn attributes(&self) -> Vec<String> {
        self.center.keys().cloned().chain([self.protected_attribute.clone()]).collect()
    }
}

/// Label counts for `size` rows by largest-remainder rounding; ties go to
/// the earlier label.
pub fn largest_remainder(mix: &BTreeMap<String, f64>, size: usize) -> Vec<(String, usize)> {
    let quotas: Vec<(String, f64)> = mix.iter().map(|(l, p)| (l.clone(), p * size as f64)).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|(_, q)| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|a, b| {
        let ra = quotas[*a].1 - quotas[*a].1.floor();
        let rb = quotas[*b].1 - quotas[*b].1.floor();
        rb.total_cmp(&ra).then(a.cmp(b))
    });
    for i in order.into_iter().take(size.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    quotas.into_iter().map(|(l, _)| l).zip(counts).collect()
}

fn cluster_columns(spec: &ClusterSpec, integers: &HashSet<&str>, seed: u64) -> Result<Vec<(String, Vec<Option<String>>)>> {
    spec.validate()?;
    let mut rng = Seeder::new(seed).stream(Purpose::Cluster, spec.id);
    let mut columns = Vec::new();
    for (name, center) in &spec.center {
        let r = spec.radius.get(name).copied().unwrap_or(0.0);
        let cells: Vec<Option<String>> = match center {
            CenterValue::Text(t) => vec![Some(t.clone()); spec.size],
            CenterValue::Number(c) => {
                let whole = integers.contains(name.as_str()) || (c.fract() == 0.0 && r.fract() == 0.0);
                (0..spec.size)
                    .map(|_| {
                        Some(if whole {
                            let (c, r) = (c.round() as i64, r.floor() as i64);
                            rng.random_range(c - r..=c + r).to_string()
                        } else if r > 0.0 {
                            format_float(rng.random_range(c - r..=c + r))
                        } else {
                            format_float(*c)
                        })
                    })
                    .collect()
            }
        };
        columns.push((name.clone(), cells));
    }
    let mut protected: Vec<Option<String>> = largest_remainder(&spec.protected_mix, spec.size)
        .into_iter()
        .flat_map(|(label, count)| std::iter::repeat_n(Some(label), count))
        .collect();
    protected.shuffle(&mut rng);
    columns.push((spec.protected_attribute.clone(), protected));
    Ok(columns)
}

/// `size` rows around `center`, with the protected attribute drawn per the
/// mix and a `cluster_id` column holding `spec.id`.
pub fn generate_fairness_cluster(spec: &ClusterSpec, seed: u64) -> Result<Table> {
    let mut columns: Vec<Column> = cluster_columns(spec, &HashSet::new(), seed)?
        .into_iter()
        .map(|(name, cells)| Column::new(name, cells, crate::ingest::LoadOptions::default().categorical_threshold))
        .collect();
    columns.push(cluster_id_column(spec.size, Some(spec.id)));
    Table::new(columns)
}

fn cluster_id_column(rows: usize, id: Option<u64>) -> Column {
    let cells = vec![id.map(|i| i.to_string()); rows];
    Column {
        name: CLUSTER_ID_COLUMN.to_string(),
        distinct_count: distinct_count(&cells),
        cells,
        data_type: DataType::Integer,
        categorical: true,
        datetime_format: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverrideSource {
    Distribution { distribution: Distribution },
    Preset { preset: Preset },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionOverride {
    pub attribute: String,
    #[serde(flatten)]
    pub source: OverrideSource,
}

/// A probe document: edits applied to a base description, then generation,
/// clusters and pathological cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub format_version: u32,
    /// Background rows; defaults to the description's `n`.
    pub size: Option<usize>,
    pub overrides: Vec<DistributionOverride>,
    pub pathologies: Vec<PathologyRule>,
    pub clusters: Vec<ClusterSpec>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            format_version: FORMAT_VERSION,
            size: None,
            overrides: Vec::new(),
            pathologies: Vec::new(),
            clusters: Vec::new(),
        }
    }
}

impl ProbeConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ProbeConfig = serde_json::from_str(s)?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: cfg.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOutput {
    pub description: DatasetDescription,
    pub table: Table,
}

/// Applies every override in order.
pub fn apply_overrides(desc: &DatasetDescription, overrides: &[DistributionOverride]) -> Result<DatasetDescription> {
    let mut out = desc.clone();
    for o in overrides {
        let dist = match &o.source {
            OverrideSource::Distribution { distribution } => distribution.clone(),
            OverrideSource::Preset { preset } => {
                let attr = out
                    .attribute(&o.attribute)
                    .ok_or_else(|| Error::UnknownAttribute(o.attribute.clone()))?;
                let base = attr.distribution.as_ref().ok_or_else(|| {
                    Error::InvalidParameter(format!("`{}` has no distribution for preset {preset}", o.attribute))
                })?;
                preset.apply(base)
            }
        };
        out = override_distribution(&out, &o.attribute, dist)?;
    }
    Ok(out)
}

/// Runs a probe: overrides, background generation, cluster rows (other
/// attributes sampled from the description), then pathologies over the
/// whole table.
pub fn run_probe(desc: &DatasetDescription, config: &ProbeConfig, seed: u64) -> Result<ProbeOutput> {
    let description = apply_overrides(desc, &config.overrides)?;
    let seeder = Seeder::new(seed);
    let size = config.size.unwrap_or(description.n);

    let mut columns: Vec<Vec<Option<String>>> = vec![Vec::new(); description.attributes.len()];
    let mut cluster_ids: Vec<Option<String>> = Vec::new();
    if size > 0 {
        let base = generate(&GenerationRequest::new(&description, seeder.derive_seed(Purpose::Probe, 0)).size(size))?;
        for (dst, src) in columns.iter_mut().zip(base.columns) {
            *dst = src.cells;
        }
        cluster_ids.resize(size, None);
    }

    let integers: HashSet<&str> = description
        .attributes
        .iter()
        .filter(|a| matches!(a.data_type, DataType::Integer | DataType::Datetime))
        .map(|a| a.name.as_str())
        .collect();
    for (ci, spec) in config.clusters.iter().enumerate() {
        for name in spec.attributes() {
            if description.attribute(&name).is_none() {
                return Err(Error::UnknownAttribute(name));
            }
        }
        let fixed = cluster_columns(spec, &integers, seeder.derive_seed(Purpose::Probe, 1))?;
        let filler = generate(
            &GenerationRequest::new(&description, seeder.derive_seed(Purpose::Probe, 2 + ci as u64))
                .size(spec.size)
                .inject_missing(false),
        )?;
        for ((attr, dst), fill) in description.attributes.iter().zip(columns.iter_mut()).zip(filler.columns) {
            match fixed.iter().find(|(n, _)| *n == attr.name) {
                Some((_, cells)) => dst.extend(cells.iter().cloned()),
                None => dst.extend(fill.cells),
            }
        }
        cluster_ids.extend(std::iter::repeat_n(Some(spec.id.to_string()), spec.size));
    }
    if cluster_ids.is_empty() {
        return Err(Error::InvalidParameter("probe produces no rows".into()));
    }

    let mut table_columns: Vec<Column> = description
        .attributes
        .iter()
        .zip(columns)
        .map(|(a, cells)| Column {
            name: a.name.clone(),
            distinct_count: distinct_count(&cells),
            cells,
            data_type: a.data_type,
            categorical: a.categorical,
            datetime_format: a.datetime_format,
        })
        .collect();
    if !config.clusters.is_empty() {
        let mut ids = cluster_id_column(0, None);
        ids.distinct_count = distinct_count(&cluster_ids);
        ids.cells = cluster_ids;
        table_columns.push(ids);
    }
    let table = Table::new(table_columns)?;
    let table = inject_pathology(&table, &config.pathologies, seeder.derive_seed(Purpose::Pathology, 0))?;
    Ok(ProbeOutput { description, table })
}
