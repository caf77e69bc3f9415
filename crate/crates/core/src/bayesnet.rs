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

//! Differentially private Bayesian network learning.
//!
//! Structure is learned greedily: a random root, then at every step the
//! (child, parent set) pair with the largest mutual information is added,
//! where the parent set is any `min(k, |visited|)`-subset of the visited
//! attributes. Conditional tables are then counted from the data and
//! perturbed with Laplace noise.
//!
//! # Privacy budget
//!
//! The total budget `epsilon` is split evenly:
//!
//! * `epsilon / 2` for structure: every candidate score at every step gets
//!   Laplace noise of scale `(d - 1) * S(n) / (epsilon / 2)` where
//!   `S(n) = 2 log2(n) / n + (n - 1) / n * log2(n / (n - 1))` bounds the
//!   sensitivity of one mutual-information evaluation.
//! * `epsilon / 2` for the conditional tables: each joint probability gets
//!   Laplace noise of scale `4 (d - k) / (n * epsilon / 2)`.
//!
//! This is an approximation of PrivBayes' accounting, not a proof of it.
//! With `epsilon == 0` noise is disabled and learning is exact.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{Bins, DiscreteColumn, Discretizer};
use crate::error::{Error, Result};
use crate::ingest::Table;
use crate::rng::{laplace, Purpose, Seeder};

pub const DEFAULT_MAX_PARENTS: usize = 4;

/// Largest conditional table (parent-bin combinations x child bins) we build.
pub const MAX_CONDITIONAL_CELLS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub child: String,
    pub parents: Vec<String>,
}

/// Nodes in sampling order: every parent appears as an earlier child.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BayesianNetwork {
    pub k: usize,
    pub nodes: Vec<NetworkNode>,
}

impl BayesianNetwork {
    pub fn d(&self) -> usize {
        self.nodes.len()
    }

    /// `(parent, child)` pairs, for drawing the network.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(move |p| (p.clone(), n.child.clone())))
            .collect()
    }

    pub fn node(&self, child: &str) -> Option<&NetworkNode> {
        self.nodes.iter().find(|n| n.child == child)
    }

    pub fn is_parent(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n.parents.iter().any(|p| p == name))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<&str> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            if seen.contains(&node.child.as_str()) {
                return Err(Error::InvalidNetwork(format!("`{}` appears twice", node.child)));
            }
            if node.parents.len() > self.k.min(i) {
                return Err(Error::InvalidNetwork(format!(
                    "node {i} (`{}`) has {} parents, at most {} allowed",
                    node.child,
                    node.parents.len(),
                    self.k.min(i)
                )));
            }
            for p in &node.parents {
                if !seen.contains(&p.as_str()) {
                    return Err(Error::InvalidNetwork(format!(
                        "parent `{p}` of `{}` is not an earlier node",
                        node.child
                    )));
                }
            }
            seen.push(&node.child);
        }
        Ok(())
    }
}

/// Even split of the budget between structure and conditional tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub structure: f64,
    pub conditionals: f64,
}

impl BudgetSplit {
    pub fn even(total: f64) -> Self {
        BudgetSplit {
            structure: total / 2.0,
            conditionals: total / 2.0,
        }
    }
}

/// Sensitivity bound of one mutual-information evaluation on `n` rows.
pub fn mi_sensitivity(n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    let n = n as f64;
    2.0 * n.log2() / n + (n - 1.0) / n * (n / (n - 1.0)).log2()
}

pub fn structure_noise_scale(d: usize, n: usize, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    (d.saturating_sub(1)) as f64 * mi_sensitivity(n) / epsilon
}

/// `4 (d - k) / (n * epsilon)`; `k` is capped at `d - 1` so a full-degree
/// network still receives noise.
pub fn conditional_noise_scale(d: usize, k: usize, n: usize, epsilon: f64) -> f64 {
    if epsilon == 0.0 || n == 0 {
        return 0.0;
    }
    let k = k.min(d.saturating_sub(1));
    4.0 * (d - k) as f64 / (n as f64 * epsilon)
}

/// Attributes reduced to bin codes, plus each one's unconditioned
/// distribution (the fallback for conditions without support).
#[derive(Debug, Clone)]
pub struct DiscreteTable {
    pub names: Vec<String>,
    pub columns: Vec<DiscreteColumn>,
    pub fallbacks: Vec<Vec<f64>>,
    pub rows: usize,
}

impl DiscreteTable {
    /// Discretizes the named columns of `table` with the given bins.
    pub fn from_table<'a>(
        table: &Table,
        attributes: impl IntoIterator<Item = (&'a str, &'a Bins, Vec<f64>)>,
    ) -> Result<Self> {
        let mut names = Vec::new();
        let mut columns = Vec::new();
        let mut fallbacks = Vec::new();
        for (name, bins, fallback) in attributes {
            let column = table
                .column(name)
                .ok_or_else(|| Error::UnknownAttribute(name.to_string()))?;
            columns.push(Discretizer::new(bins).discretize(column));
            names.push(name.to_string());
            fallbacks.push(fallback);
        }
        Ok(DiscreteTable {
            names,
            columns,
            fallbacks,
            rows: table.row_count(),
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Entropy in bits of the non-missing codes.
pub fn entropy(x: &DiscreteColumn) -> f64 {
    let counts = x.counts();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|c| **c > 0)
        .map(|c| {
            let p = *c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

fn joint_key(parents: &[&DiscreteColumn], row: usize) -> Option<u128> {
    let mut key: u128 = 0;
    for p in parents {
        key = key * p.cardinality as u128 + p.codes[row]? as u128;
    }
    Some(key)
}

/// I(X; Π) in bits, with the parents treated as one joint variable.
/// Rows where any involved cell is missing are skipped.
pub fn mutual_information(x: &DiscreteColumn, parents: &[&DiscreteColumn]) -> Result<f64> {
    for p in parents {
        if p.len() != x.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: p.len(),
            });
        }
    }
    if parents.is_empty() {
        return Ok(0.0);
    }
    let mut joint: HashMap<(u128, u32), usize> = HashMap::new();
    let mut parent_counts: HashMap<u128, usize> = HashMap::new();
    let mut child_counts = vec![0usize; x.cardinality];
    let mut total = 0usize;
    for row in 0..x.len() {
        let Some(xc) = x.codes[row] else { continue };
        let Some(key) = joint_key(parents, row) else { continue };
        *joint.entry((key, xc)).or_default() += 1;
        *parent_counts.entry(key).or_default() += 1;
        child_counts[xc as usize] += 1;
        total += 1;
    }
    if total == 0 {
        return Ok(0.0);
    }
    let total = total as f64;
    let mut mi = 0.0;
    for ((key, xc), c) in joint {
        let pxy = c as f64 / total;
        let px = child_counts[xc as usize] as f64 / total;
        let py = parent_counts[&key] as f64 / total;
        mi += pxy * (pxy / (px * py)).log2();
    }
    Ok(mi.max(0.0))
}

fn combinations(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < size - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, size, 0, &mut Vec::with_capacity(size), &mut out);
    out
}

struct Candidate {
    child: usize,
    parents: Vec<usize>,
    tie_key: (String, Vec<String>),
}

/// Greedy structure learning. `epsilon` is the structure budget; 0 gives
/// exact scores.
pub fn greedy_bayes<R: Rng + ?Sized>(
    data: &DiscreteTable,
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<BayesianNetwork> {
    let d = data.names.len();
    if d < 2 {
        return Err(Error::TooFewAttributes(d));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let noise_scale = structure_noise_scale(d, data.rows, epsilon);

    let root = rng.random_range(0..d);
    let mut visited = vec![root];
    let mut nodes = vec![NetworkNode {
        child: data.names[root].clone(),
        parents: Vec::new(),
    }];

    while visited.len() < d {
        let p = k.min(visited.len());
        let parent_sets = combinations(&visited, p);
        let candidates: Vec<Candidate> = (0..d)
            .filter(|x| !visited.contains(x))
            .flat_map(|x| {
                parent_sets.iter().map(move |ps| {
                    let mut sorted: Vec<String> = ps.iter().map(|i| data.names[*i].clone()).collect();
                    sorted.sort();
                    Candidate {
                        child: x,
                        parents: ps.clone(),
                        tie_key: (data.names[x].clone(), sorted),
                    }
                })
            })
            .collect();

        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|c| {
                let parents: Vec<&DiscreteColumn> = c.parents.iter().map(|i| &data.columns[*i]).collect();
                mutual_information(&data.columns[c.child], &parents)
            })
            .collect::<Result<_>>()?;

        let mut best: Option<(f64, &Candidate)> = None;
        for (c, s) in candidates.iter().zip(scores) {
            let s = s + laplace(rng, noise_scale);
            best = match best {
                None => Some((s, c)),
                Some((bs, bc)) if s > bs || (s == bs && c.tie_key < bc.tie_key) => Some((s, c)),
                keep => keep,
            };
        }
        let (_, chosen) = best.expect("at least one unvisited attribute");
        visited.push(chosen.child);
        nodes.push(NetworkNode {
            child: data.names[chosen.child].clone(),
            parents: chosen.parents.iter().map(|i| data.names[*i].clone()).collect(),
        });
    }

    Ok(BayesianNetwork { k, nodes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    /// One bin index per parent, in the node's parent order.
    pub parent_bins: Vec<usize>,
    /// Distribution over the child's bins.
    pub probabilities: Vec<f64>,
}

/// Child distribution for every combination of parent bins. Rows are in
/// mixed-radix order with the last parent varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub child: String,
    pub parents: Vec<String>,
    pub parent_cardinalities: Vec<usize>,
    pub conditions: Vec<ConditionRow>,
}

impl ConditionalTable {
    pub fn row_index(&self, parent_bins: &[usize]) -> usize {
        parent_bins
            .iter()
            .zip(&self.parent_cardinalities)
            .fold(0, |acc, (b, card)| acc * card + b)
    }

    pub fn probabilities(&self, parent_bins: &[usize]) -> &[f64] {
        &self.conditions[self.row_index(parent_bins)].probabilities
    }

    pub fn validate(&self, child_bins: usize) -> Result<()> {
        let expected: usize = self.parent_cardinalities.iter().product();
        if self.conditions.len() != expected || self.parents.len() != self.parent_cardinalities.len() {
            return Err(Error::InvalidNetwork(format!(
                "conditional table for `{}` has {} rows, expected {expected}",
                self.child,
                self.conditions.len()
            )));
        }
        for (i, row) in self.conditions.iter().enumerate() {
            if self.row_index(&row.parent_bins) != i {
                return Err(Error::InvalidNetwork(format!(
                    "conditional table for `{}` is out of order at row {i}",
                    self.child
                )));
            }
            let sum: f64 = row.probabilities.iter().sum();
            if row.probabilities.len() != child_bins
                || row.probabilities.iter().any(|p| *p < 0.0 || !p.is_finite())
                || (sum - 1.0).abs() > crate::distribution::PROBABILITY_TOLERANCE
            {
                return Err(Error::InvalidNetwork(format!(
                    "conditional table for `{}` row {i} is not a distribution",
                    self.child
                )));
            }
        }
        Ok(())
    }
}

fn decode_mixed_radix(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}

/// Noisy conditional tables for every node. `epsilon` is the budget for
/// the tables; node `i` draws its noise from `Purpose::Conditionals` stream `i`.
pub fn conditional_distributions(
    data: &DiscreteTable,
    network: &BayesianNetwork,
    epsilon: f64,
    seeder: &Seeder,
) -> Result<Vec<ConditionalTable>> {
    network.validate()?;
    let scale = conditional_noise_scale(network.d(), network.k, data.rows, epsilon);
    let n = data.rows.max(1) as f64;

    let prepared = network
        .nodes
        .iter()
        .map(|node| {
            let child = data
                .index_of(&node.child)
                .ok_or_else(|| Error::UnknownAttribute(node.child.clone()))?;
            let parents = node
                .parents
                .iter()
                .map(|p| data.index_of(p).ok_or_else(|| Error::UnknownAttribute(p.clone())))
                .collect::<Result<Vec<_>>>()?;
            let cards: Vec<usize> = parents.iter().map(|p| data.columns[*p].cardinality).collect();
            let cells = cards.iter().fold(data.columns[child].cardinality as u128, |a, c| a * *c as u128);
            if cells > MAX_CONDITIONAL_CELLS {
                return Err(Error::ConditionalTableTooLarge {
                    child: node.child.clone(),
                    cells,
                    limit: MAX_CONDITIONAL_CELLS,
                });
            }
            Ok((node, child, parents, cards))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(prepared
        .into_par_iter()
        .enumerate()
        .map(|(i, (node, child, parents, cards))| {
            let mut rng = seeder.stream(Purpose::Conditionals, i as u64);
            let x = &data.columns[child];
            let parent_cols: Vec<&DiscreteColumn> = parents.iter().map(|p| &data.columns[*p]).collect();
            let conditions: usize = cards.iter().product();
            let m = x.cardinality;
            let mut counts = vec![0usize; conditions * m];
            for row in 0..x.len() {
                let Some(xc) = x.codes[row] else { continue };
                let Some(key) = joint_key(&parent_cols, row) else { continue };
                counts[key as usize * m + xc as usize] += 1;
            }
            let rows = (0..conditions)
                .map(|c| {
                    let weights: Vec<f64> = counts[c * m..(c + 1) * m]
                        .iter()
                        .map(|cnt| (*cnt as f64 / n + laplace(&mut rng, scale)).max(0.0))
                        .collect();
                    let total: f64 = weights.iter().sum();
                    let probabilities = if total > 0.0 {
                        weights.iter().map(|w| w / total).collect()
                    } else {
                        data.fallbacks[child].clone()
                    };
                    ConditionRow {
                        parent_bins: decode_mixed_radix(c, &cards),
                        probabilities,
                    }
                })
                .collect();
            ConditionalTable {
                child: node.child.clone(),
                parents: node.parents.clone(),
                parent_cardinalities: cards,
                conditions: rows,
            }
        })
        .collect())
}

/// Learned network plus its conditional tables and the noise actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub network: BayesianNetwork,
    pub conditionals: Vec<ConditionalTable>,
    pub structure_epsilon: f64,
    pub conditional_epsilon: f64,
    pub structure_noise_scale: f64,
    pub conditional_noise_scale: f64,
}

impl NetworkModel {
    pub fn conditional(&self, child: &str) -> Option<&ConditionalTable> {
        self.conditionals.iter().find(|c| c.child == child)
    }
}

/// Structure and conditional tables under an even budget split.
pub fn learn_model(data: &DiscreteTable, k: usize, epsilon: f64, seeder: &Seeder) -> Result<NetworkModel> {
    let budget = BudgetSplit::even(epsilon);
    let mut rng = seeder.stream(Purpose::Structure, 0);
    let network = greedy_bayes(data, k, budget.structure, &mut rng)?;
    let conditionals = conditional_distributions(data, &network, budget.conditionals, seeder)?;
    Ok(NetworkModel {
        structure_noise_scale: structure_noise_scale(network.d(), data.rows, budget.structure),
        conditional_noise_scale: conditional_noise_scale(network.d(), k, data.rows, budget.conditionals),
        network,
        conditionals,
        structure_epsilon: budget.structure,
        conditional_epsilon: budget.conditionals,
    })
}
