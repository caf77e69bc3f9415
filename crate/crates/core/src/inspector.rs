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

//! Similarity measures between an input table and a synthetic one.

use std::collections::HashMap;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayesnet::{entropy, greedy_bayes, mutual_information, DiscreteTable};
use crate::describer::{attribute_bins, DatasetDescription, DEFAULT_HISTOGRAM_SIZE, FORMAT_VERSION};
use crate::distribution::{fit_distribution, Bins, DiscreteColumn, Discretizer, Distribution};
use crate::error::{Error, Result};
use crate::ingest::{parse_numeric, Column, Table};
use crate::rng::StreamRng;

pub const HEAD_TAIL_COUNT: usize = 5;
pub const KL_SMOOTHING: f64 = 1e-6;
const ENTROPY_FLOOR: f64 = 1e-12;
const SYNTHETIC_FIT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSample {
    pub head: Vec<Vec<Option<String>>>,
    pub tail: Vec<Vec<Option<String>>>,
}

impl RowSample {
    fn of(t: &Table, count: usize) -> Self {
        let n = t.row_count();
        let take = count.min(n);
        let row = |i: usize| t.row(i).into_iter().map(|c| c.map(str::to_string)).collect();
        RowSample {
            head: (0..take).map(row).collect(),
            tail: (n - take..n).map(row).collect(),
        }
    }
}

/// First and last rows of both tables, aligned by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadTail {
    pub columns: Vec<String>,
    pub input: RowSample,
    pub synthetic: RowSample,
}

fn check_same_columns(a: &Table, b: &Table) -> Result<()> {
    if a.names() != b.names() {
        return Err(Error::SchemaMismatch(format!(
            "columns [{}] vs [{}]",
            a.names().join(", "),
            b.names().join(", ")
        )));
    }
    Ok(())
}

pub fn head_tail(a: &Table, b: &Table, count: usize) -> Result<HeadTail> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    check_same_columns(a, b)?;
    Ok(HeadTail {
        columns: a.names().into_iter().map(str::to_string).collect(),
        input: RowSample::of(a, count),
        synthetic: RowSample::of(b, count),
    })
}

/// KL(p || q) in bits after mixing both with the uniform distribution at
/// weight `KL_SMOOTHING`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.bins != q.bins || p.probabilities.len() != q.probabilities.len() {
        return Err(Error::InvalidDistribution("KL divergence needs identical bins".into()));
    }
    let m = p.probabilities.len() as f64;
    let smooth = |x: f64| (1.0 - KL_SMOOTHING) * x + KL_SMOOTHING / m;
    let kl: f64 = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(pi, qi)| {
            let (pi, qi) = (smooth(*pi), smooth(*qi));
            pi * (pi / qi).log2()
        })
        .sum();
    Ok(kl.max(0.0))
}

/// Normalized MI over the discretizable attributes of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Attributes with zero entropy; their rows and columns are 0.
    pub constant: Vec<String>,
}

impl MiMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

fn mi_from_columns(names: Vec<String>, columns: &[DiscreteColumn]) -> MiMatrix {
    let d = columns.len();
    let h: Vec<f64> = columns.par_iter().map(entropy).collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let upper: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if h[i] == 0.0 || h[j] == 0.0 {
                return 0.0;
            }
            let mi = mutual_information(&columns[i], &[&columns[j]]).expect("equal lengths");
            (mi / h[i].min(h[j]).max(ENTROPY_FLOOR)).clamp(0.0, 1.0)
        })
        .collect();
    let mut values = vec![vec![0.0; d]; d];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = if h[i] > 0.0 { 1.0 } else { 0.0 };
    }
    for (&(i, j), v) in pairs.iter().zip(upper) {
        values[i][j] = v;
        values[j][i] = v;
    }
    let constant = (0..d).filter(|i| h[*i] == 0.0).map(|i| names[i].clone()).collect();
    MiMatrix { names, values, constant }
}

/// MI matrix under caller-supplied bins.
pub fn mi_matrix_with_bins(table: &Table, bins: &[(String, Bins)]) -> Result<MiMatrix> {
    let columns = bins
        .par_iter()
        .map(|(name, b)| {
            let col = table.column(name).ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
            Ok(Discretizer::new(b).discretize(col))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mi_from_columns(bins.iter().map(|(n, _)| n.clone()).collect(), &columns))
}

/// Exact bins for each discretizable column, in column order.
pub fn table_bins(table: &Table, histogram_size: usize) -> Vec<(String, Bins)> {
    table
        .columns
        .iter()
        .filter_map(|c| fit_distribution(c, histogram_size).map(|d| (c.name.clone(), d.bins)))
        .collect()
}

/// MI matrix with bins fit to the table itself. Free-text columns are left
/// out.
pub fn mi_matrix(table: &Table) -> MiMatrix {
    mi_matrix_with_bins(table, &table_bins(table, DEFAULT_HISTOGRAM_SIZE)).expect("bins come from the table")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    CramersV,
    CorrelationRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub kind: CorrelationKind,
    pub value: f64,
    pub degenerate: bool,
}

impl Correlation {
    fn degenerate(kind: CorrelationKind) -> Self {
        Correlation { kind, value: 0.0, degenerate: true }
    }
}

fn is_nominal(c: &Column) -> bool {
    c.categorical || !c.data_type.is_numeric()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Correlation {
    let n = xs.len().min(ys.len());
    if n == 0 {
        return Correlation::degenerate(CorrelationKind::Pearson);
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Correlation::degenerate(CorrelationKind::Pearson);
    }
    Correlation {
        kind: CorrelationKind::Pearson,
        value: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

fn cramers_v(xs: &[&str], ys: &[&str]) -> Correlation {
    let kind = CorrelationKind::CramersV;
    let index = |vals: &[&str]| {
        let mut m: HashMap<&str, usize> = HashMap::new();
        let codes: Vec<usize> = vals
            .iter()
            .map(|v| {
                let next = m.len();
                *m.entry(v).or_insert(next)
            })
            .collect();
        (codes, m.len())
    };
    let (cx, r) = index(xs);
    let (cy, c) = index(ys);
    if r < 2 || c < 2 {
        return Correlation::degenerate(kind);
    }
    let n = cx.len() as f64;
    let mut table = vec![0usize; r * c];
    let (mut rows, mut cols) = (vec![0usize; r], vec![0usize; c]);
    for (a, b) in cx.iter().zip(&cy) {
        table[a * c + b] += 1;
        rows[*a] += 1;
        cols[*b] += 1;
    }
    let mut chi2 = 0.0;
    for a in 0..r {
        for b in 0..c {
            let e = rows[a] as f64 * cols[b] as f64 / n;
            let o = table[a * c + b] as f64;
            chi2 += (o - e) * (o - e) / e;
        }
    }
    let v = (chi2 / (n * (r.min(c) - 1) as f64)).sqrt();
    Correlation { kind, value: v.clamp(0.0, 1.0), degenerate: false }
}

fn correlation_ratio(categories: &[&str], values: &[f64]) -> Correlation {
    let kind = CorrelationKind::CorrelationRatio;
    let n = values.len();
    if n == 0 {
        return Correlation::degenerate(kind);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut groups: HashMap<&str, (f64, usize)> = HashMap::new();
    for (c, v) in categories.iter().zip(values) {
        let g = groups.entry(c).or_default();
        g.0 += v;
        g.1 += 1;
    }
    let total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if total <= 0.0 || groups.len() < 2 {
        return Correlation::degenerate(kind);
    }
    let between: f64 = groups
        .values()
        .map(|(s, k)| {
            let m = s / *k as f64;
            *k as f64 * (m - mean) * (m - mean)
        })
        .sum();
    Correlation { kind, value: (between / total).sqrt().clamp(0.0, 1.0), degenerate: false }
}

/// Correlation of a kind matching the column types: Pearson for two
/// numeric columns, Cramér's V for two categorical ones, the correlation
/// ratio for a mixed pair. Computed over rows where both cells are present.
pub fn correlation_coefficient(x: &Column, y: &Column) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let numeric = |c: &Column, cell: &str| parse_numeric(c.data_type, cell);
    let pairs = x.cells.iter().zip(&y.cells).filter_map(|(a, b)| Some((a.as_deref()?, b.as_deref()?)));
    Ok(match (is_nominal(x), is_nominal(y)) {
        (false, false) => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
                .filter_map(|(a, b)| Some((numeric(x, a)?, numeric(y, b)?)))
                .unzip();
            pearson(&xs, &ys)
        }
        (true, true) => {
            let (xs, ys): (Vec<&str>, Vec<&str>) = pairs.unzip();
            cramers_v(&xs, &ys)
        }
        (true, false) => {
            let (cs, vs): (Vec<&str>, Vec<f64>) = pairs.filter_map(|(a, b)| Some((a, numeric(y, b)?))).unzip();
            correlation_ratio(&cs, &vs)
        }
        (false, true) => {
            let (vs, cs): (Vec<f64>, Vec<&str>) = pairs.filter_map(|(a, b)| Some((numeric(x, a)?, b))).unzip();
            correlation_ratio(&cs, &vs)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeComparison {
    pub attribute: String,
    pub input: Distribution,
    pub synthetic: Distribution,
    pub kl_divergence: f64,
    /// Pearson correlation of the two probability vectors.
    pub correlation: Correlation,
    /// Synthetic non-missing cells that fit no input bin (unseen labels).
    pub unmatched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub correlation: Correlation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: String,
    pub child: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    pub samples: HeadTail,
    pub attributes: Vec<AttributeComparison>,
    /// Free-text attributes with no bins to compare on.
    pub not_compared: Vec<String>,
    pub input_mi: MiMatrix,
    pub synthetic_mi: MiMatrix,
    pub input_correlations: Vec<PairCorrelation>,
    pub synthetic_correlations: Vec<PairCorrelation>,
    pub input_network: Option<Vec<Edge>>,
    pub synthetic_network: Option<Vec<Edge>>,
}

impl ComparisonReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeComparison> {
        self.attributes.iter().find(|a| a.attribute == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Counts of a column under fixed bins, plus the number of cells that fit
/// none of them.
pub fn rebin(column: &Column, bins: &Bins) -> (Vec<usize>, usize) {
    let disc = Discretizer::new(bins);
    let mut counts = vec![0usize; bins.len()];
    let mut unmatched = 0;
    for cell in column.cells.iter().flatten() {
        match disc.code(column, Some(cell)) {
            Some(c) => counts[c as usize] += 1,
            None => unmatched += 1,
        }
    }
    (counts, unmatched)
}

fn counts_to_distribution(bins: &Bins, counts: &[usize]) -> Distribution {
    Distribution::from_weights(bins.clone(), counts.iter().map(|c| *c as f64).collect())
}

fn pair_correlations(table: &Table, names: &[String]) -> Vec<PairCorrelation> {
    let pairs: Vec<(&String, &String)> = names
        .iter()
        .enumerate()
        .flat_map(|(i, a)| names[i + 1..].iter().map(move |b| (a, b)))
        .collect();
    pairs
        .par_iter()
        .map(|(a, b)| PairCorrelation {
            a: (*a).clone(),
            b: (*b).clone(),
            correlation: correlation_coefficient(table.column(a).expect("known"), table.column(b).expect("known"))
                .expect("same table"),
        })
        .collect()
}

fn edges_of(network: &crate::bayesnet::BayesianNetwork) -> Vec<Edge> {
    network
        .edges()
        .into_iter()
        .map(|(parent, child)| Edge { parent, child })
        .collect()
}

/// Compares an input table with a synthetic table generated from
/// `description`. Numeric synthetic values are re-binned with the input's
/// bin edges.
pub fn compare(input: &Table, synthetic: &Table, description: &DatasetDescription) -> Result<ComparisonReport> {
    check_same_columns(input, synthetic)?;
    if input.names() != description.names() {
        return Err(Error::SchemaMismatch("input columns differ from the description".into()));
    }
    let samples = head_tail(input, synthetic, HEAD_TAIL_COUNT)?;

    let mut bins: Vec<(String, Bins)> = Vec::new();
    let mut not_compared = Vec::new();
    for (attr, col) in description.attributes.iter().zip(&input.columns) {
        let b = attribute_bins(attr)
            .cloned()
            .or_else(|| fit_distribution(col, description.privacy.histogram_size).map(|d| d.bins));
        match b {
            Some(b) => bins.push((attr.name.clone(), b)),
            None => not_compared.push(attr.name.clone()),
        }
    }

    let attributes = bins
        .par_iter()
        .map(|(name, b)| {
            let (ic, _) = rebin(input.column(name).expect("checked"), b);
            let (sc, unmatched) = rebin(synthetic.column(name).expect("checked"), b);
            let p = counts_to_distribution(b, &ic);
            let q = counts_to_distribution(b, &sc);
            Ok(AttributeComparison {
                attribute: name.clone(),
                kl_divergence: kl_divergence(&p, &q)?,
                correlation: pearson(&p.probabilities, &q.probabilities),
                input: p,
                synthetic: q,
                unmatched,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (input_mi, synthetic_mi) =
        rayon::join(|| mi_matrix_with_bins(input, &bins), || mi_matrix_with_bins(synthetic, &bins));
    let names: Vec<String> = bins.iter().map(|(n, _)| n.clone()).collect();

    let (input_network, synthetic_network) = match &description.network {
        Some(model) => {
            let members: Vec<(&str, &Bins, Vec<f64>)> = model
                .network
                .nodes
                .iter()
                .map(|node| {
                    let b = &bins.iter().find(|(n, _)| *n == node.child).expect("network attributes have bins").1;
                    (node.child.as_str(), b, vec![1.0 / b.len() as f64; b.len()])
                })
                .collect();
            let data = DiscreteTable::from_table(synthetic, members)?;
            let mut rng = StreamRng::seed_from_u64(SYNTHETIC_FIT_SEED);
            let fit = greedy_bayes(&data, model.network.k, 0.0, &mut rng)?;
            (Some(edges_of(&model.network)), Some(edges_of(&fit)))
        }
        None => (None, None),
    };

    Ok(ComparisonReport {
        format_version: FORMAT_VERSION,
        samples,
        attributes,
        not_compared,
        input_mi: input_mi?,
        synthetic_mi: synthetic_mi?,
        input_correlations: pair_correlations(input, &names),
        synthetic_correlations: pair_correlations(synthetic, &names),
        input_network,
        synthetic_network,
    })
}
