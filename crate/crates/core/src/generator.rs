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

//! Synthetic table generation from a dataset description.
//!
//! Row `r` is generated entirely from stream `Purpose::Rows`/`r` of the
//! request seed, so the output is a pure function of
//! (description, size, seed, uniform attributes) however rows are
//! scheduled across threads.

use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rayon::prelude::*;

use crate::describer::{AttributeDescription, DatasetDescription, Mode};
use crate::distribution::{sample_index, Bins, Distribution};
use crate::error::{Error, Result};
use crate::ingest::{format_datetime, format_float, Column, DataType, DatetimeFormat, Table};
use crate::rng::{Purpose, Seeder, StreamRng};

const RANDOM_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone)]
pub struct GenerationRequest<'a> {
    pub description: &'a DatasetDescription,
    /// Defaults to the input row count recorded in the description.
    pub size: Option<usize>,
    pub seed: u64,
    /// Attributes sampled uniformly from their domain.
    pub uniform: BTreeSet<String>,
    /// Lower-fidelity mode to generate in; defaults to the description's.
    pub mode: Option<Mode>,
    pub inject_missing: bool,
}

impl<'a> GenerationRequest<'a> {
    pub fn new(description: &'a DatasetDescription, seed: u64) -> Self {
        GenerationRequest {
            description,
            size: None,
            seed,
            uniform: BTreeSet::new(),
            mode: None,
            inject_missing: true,
        }
    }

    pub fn size(mut self, size: usize) -> Self {
        self.size = Some(size);
        self
    }

    pub fn uniform<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.uniform.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn inject_missing(mut self, on: bool) -> Self {
        self.inject_missing = on;
        self
    }

    pub fn effective_size(&self) -> usize {
        self.size.unwrap_or(self.description.n)
    }

    pub fn effective_mode(&self) -> Mode {
        self.mode.unwrap_or(self.description.mode)
    }

    pub fn validate(&self) -> Result<()> {
        let built = self.description.mode;
        let requested = self.effective_mode();
        if requested > built {
            return Err(Error::ModeMismatch { built, requested });
        }
        if self.effective_size() == 0 {
            return Err(Error::InvalidParameter("output size must be positive".into()));
        }
        for name in &self.uniform {
            if self.description.attribute(name).is_none() {
                return Err(Error::UnknownAttribute(name.clone()));
            }
        }
        Ok(())
    }
}

/// What a sampled number turns into when written out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueKind {
    pub data_type: DataType,
    pub datetime_format: Option<DatetimeFormat>,
}

impl From<&AttributeDescription> for ValueKind {
    fn from(a: &AttributeDescription) -> Self {
        ValueKind {
            data_type: a.data_type,
            datetime_format: a.datetime_format,
        }
    }
}

impl ValueKind {
    fn render_whole(&self, v: i64) -> String {
        match self.data_type {
            DataType::Datetime => {
                let fmt = self.datetime_format.unwrap_or(DatetimeFormat::DateTime);
                let v = match fmt {
                    DatetimeFormat::Date => v - v.rem_euclid(SECONDS_PER_DAY),
                    DatetimeFormat::DateTime => v,
                };
                format_datetime(v, fmt)
            }
            _ => v.to_string(),
        }
    }
}

/// Integer in the bin `[lo, hi)`: uniform over `[ceil(lo), ceil(hi) - 1]`,
/// or the nearest integer to a uniform draw when the bin holds none.
fn integer_in_bin<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> i64 {
    let first = lo.ceil() as i64;
    let last = hi.ceil() as i64 - 1;
    if first <= last {
        rng.random_range(first..=last)
    } else {
        rng.random_range(lo..hi).round() as i64
    }
}

fn materialize<R: Rng + ?Sized>(bins: &Bins, bin: usize, kind: ValueKind, rng: &mut R) -> String {
    match bins {
        Bins::BarChart { labels } => labels[bin].clone(),
        Bins::Histogram { .. } => {
            let (lo, hi) = bins.interval(bin).expect("bin in range");
            match kind.data_type {
                DataType::Float | DataType::String => format_float(rng.random_range(lo..hi)),
                DataType::Integer | DataType::Datetime => kind.render_whole(integer_in_bin(lo, hi, rng)),
            }
        }
    }
}

/// One value from `dist`: a label for bar charts, a uniform draw inside the
/// chosen bin for histograms.
pub fn sample_value<R: Rng + ?Sized>(dist: &Distribution, kind: ValueKind, rng: &mut R) -> String {
    let bin = dist.sample_bin(rng);
    materialize(&dist.bins, bin, kind, rng)
}

fn random_string<R: Rng + ?Sized>(range: [usize; 2], rng: &mut R) -> String {
    let len = rng.random_range(range[0]..=range[1]);
    (0..len)
        .map(|_| RANDOM_ALPHABET[rng.random_range(0..RANDOM_ALPHABET.len())] as char)
        .collect()
}

/// Type-consistent value drawn uniformly from the recorded domain.
fn random_value<R: Rng + ?Sized>(attr: &AttributeDescription, rng: &mut R) -> Option<String> {
    let kind = ValueKind::from(attr);
    match attr.data_type {
        DataType::String => Some(random_string(attr.length_range.unwrap_or([0, 0]), rng)),
        DataType::Float => {
            let [lo, hi] = attr.numeric_domain?;
            let v = if lo < hi { rng.random_range(lo..hi) } else { lo };
            Some(format_float(v))
        }
        DataType::Integer | DataType::Datetime => {
            let [lo, hi] = attr.numeric_domain?;
            let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
            Some(kind.render_whole(rng.random_range(lo..=hi.max(lo))))
        }
    }
}

/// Uniform draw over the attribute's domain, with its bin when it has one.
fn uniform_value<R: Rng + ?Sized>(attr: &AttributeDescription, rng: &mut R) -> (Option<String>, Option<usize>) {
    match &attr.distribution {
        Some(d) => match &d.bins {
            Bins::BarChart { labels } => {
                let i = rng.random_range(0..labels.len());
                (Some(labels[i].clone()), Some(i))
            }
            Bins::Histogram { edges } => {
                let (lo, hi) = (edges[0], edges[edges.len() - 1]);
                let kind = ValueKind::from(attr);
                let (text, v) = match attr.data_type {
                    DataType::Integer | DataType::Datetime => {
                        let v = integer_in_bin(lo, hi, rng);
                        (kind.render_whole(v), v as f64)
                    }
                    _ => {
                        let v = rng.random_range(lo..hi);
                        (format_float(v), v)
                    }
                };
                (Some(text), d.bins.bin_of_value(v))
            }
        },
        None => (random_value(attr, rng), None),
    }
}

enum Source<'d> {
    Random,
    Uniform,
    Marginal(&'d Distribution),
    Conditional {
        table: &'d crate::bayesnet::ConditionalTable,
        parents: Vec<usize>,
        bins: &'d Bins,
    },
}

struct Plan<'d> {
    /// (attribute index, source) in sampling order.
    steps: Vec<(usize, Source<'d>)>,
    missing: Vec<f64>,
}

fn plan<'d>(req: &GenerationRequest<'d>) -> Result<Plan<'d>> {
    let desc = req.description;
    let mode = req.effective_mode();
    let mut order: Vec<usize> = Vec::with_capacity(desc.attributes.len());
    if mode == Mode::Correlated {
        let model = desc
            .network
            .as_ref()
            .ok_or_else(|| Error::InvalidNetwork("correlated description without a network".into()))?;
        for node in &model.network.nodes {
            order.push(
                desc.attribute_index(&node.child)
                    .ok_or_else(|| Error::UnknownAttribute(node.child.clone()))?,
            );
        }
    }
    let in_network: HashSet<usize> = order.iter().copied().collect();
    order.extend((0..desc.attributes.len()).filter(|i| !in_network.contains(i)));

    let mut steps = Vec::with_capacity(order.len());
    for i in order {
        let attr = &desc.attributes[i];
        let source = if mode == Mode::Random {
            Source::Random
        } else if req.uniform.contains(&attr.name) {
            Source::Uniform
        } else if in_network.contains(&i) {
            let model = desc.network.as_ref().expect("correlated");
            let table = model
                .conditional(&attr.name)
                .ok_or_else(|| Error::InvalidNetwork(format!("no conditional table for `{}`", attr.name)))?;
            let parents = table
                .parents
                .iter()
                .map(|p| desc.attribute_index(p).ok_or_else(|| Error::UnknownAttribute(p.clone())))
                .collect::<Result<Vec<_>>>()?;
            let bins = attr
                .distribution
                .as_ref()
                .map(|d| &d.bins)
                .ok_or_else(|| Error::InvalidNetwork(format!("`{}` has no bins", attr.name)))?;
            Source::Conditional { table, parents, bins }
        } else if let Some(d) = &attr.distribution {
            Source::Marginal(d)
        } else {
            Source::Random
        };
        steps.push((i, source));
    }
    let missing = desc
        .attributes
        .iter()
        .map(|a| if req.inject_missing { a.missing_rate } else { 0.0 })
        .collect();
    Ok(Plan { steps, missing })
}

fn generate_row(plan: &Plan<'_>, desc: &DatasetDescription, rng: &mut StreamRng) -> Vec<Option<String>> {
    let d = desc.attributes.len();
    let mut values: Vec<Option<String>> = vec![None; d];
    let mut sampled_bins: Vec<Option<usize>> = vec![None; d];
    for (i, source) in &plan.steps {
        let attr = &desc.attributes[*i];
        let (value, bin) = match source {
            Source::Random => (random_value(attr, rng), None),
            Source::Uniform => uniform_value(attr, rng),
            Source::Marginal(dist) => {
                let bin = dist.sample_bin(rng);
                (Some(materialize(&dist.bins, bin, attr.into(), rng)), Some(bin))
            }
            Source::Conditional { table, parents, bins } => {
                let parent_bins: Vec<usize> = parents
                    .iter()
                    .map(|p| sampled_bins[*p].expect("parents sampled first"))
                    .collect();
                let bin = sample_index(table.probabilities(&parent_bins), rng);
                (Some(materialize(bins, bin, attr.into(), rng)), Some(bin))
            }
        };
        values[*i] = value;
        sampled_bins[*i] = bin;
    }
    for (v, rate) in values.iter_mut().zip(&plan.missing) {
        if *rate > 0.0 && rng.random::<f64>() < *rate {
            *v = None;
        }
    }
    values
}

/// Generates a synthetic table. Honors the caller's rayon pool; results do
/// not depend on its size.
pub fn generate(req: &GenerationRequest<'_>) -> Result<Table> {
    req.validate()?;
    let desc = req.description;
    let plan = plan(req)?;
    let seeder = Seeder::new(req.seed);
    let rows: Vec<Vec<Option<String>>> = (0..req.effective_size())
        .into_par_iter()
        .map(|r| {
            let mut rng = seeder.stream(Purpose::Rows, r as u64);
            generate_row(&plan, desc, &mut rng)
        })
        .collect();

    let mut columns: Vec<Vec<Option<String>>> = (0..desc.attributes.len())
        .map(|_| Vec::with_capacity(rows.len()))
        .collect();
    for row in rows {
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    let columns = desc
        .attributes
        .iter()
        .zip(columns)
        .map(|(a, cells)| Column {
            name: a.name.clone(),
            distinct_count: crate::ingest::distinct_count(&cells),
            cells,
            data_type: a.data_type,
            categorical: a.categorical,
            datetime_format: a.datetime_format,
        })
        .collect();
    Table::new(columns)
}
