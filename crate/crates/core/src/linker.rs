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

//! N-gram signatures, join-size estimation and linked table generation.
//!
//! Signature exchange carries no formal privacy guarantee.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::describer::{DatasetDescription, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::generator::{generate, GenerationRequest};
use crate::ingest::{Column, DataType, Table};
use crate::rng::{Purpose, Seeder};

pub const DEFAULT_NGRAM: usize = 3;
pub const DEFAULT_SIGNATURE_LEN: usize = 20;
pub const DEFAULT_SEPARATOR: char = '|';
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const LINK_ID_COLUMN: &str = "link_id";

/// Sorted, de-duplicated n-grams of a tuple, truncated to `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature(pub Vec<String>);

impl Signature {
    pub fn grams(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureParams {
    pub n: usize,
    pub k: usize,
    pub separator: char,
}

impl Default for SignatureParams {
    fn default() -> Self {
        SignatureParams {
            n: DEFAULT_NGRAM,
            k: DEFAULT_SIGNATURE_LEN,
            separator: DEFAULT_SEPARATOR,
        }
    }
}

impl SignatureParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("n-gram size and signature length must be positive".into()));
        }
        Ok(())
    }

    /// Missing cells count as empty text.
    pub fn sign(&self, row: &[Option<&str>]) -> Result<Signature> {
        self.validate()?;
        if row.is_empty() {
            return Err(Error::EmptyRow);
        }
        let mut joined = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                joined.push(self.separator);
            }
            joined.push_str(cell.unwrap_or(""));
        }
        let chars: Vec<char> = joined.chars().collect();
        let mut grams: Vec<String> = if chars.is_empty() {
            Vec::new()
        } else if chars.len() <= self.n {
            vec![joined]
        } else {
            chars.windows(self.n).map(|w| w.iter().collect()).collect()
        };
        grams.sort();
        grams.dedup();
        grams.truncate(self.k);
        Ok(Signature(grams))
    }

    pub fn sign_table(&self, table: &Table) -> Result<Vec<Signature>> {
        self.validate()?;
        (0..table.row_count())
            .into_par_iter()
            .map(|r| self.sign(&table.row(r)))
            .collect()
    }
}

pub fn lsh_signature(row: &[Option<&str>], n: usize, k: usize) -> Result<Signature> {
    SignatureParams { n, k, separator: DEFAULT_SEPARATOR }.sign(row)
}

/// Jaccard similarity of two signatures; 0 when both are empty.
pub fn jaccard(a: &Signature, b: &Signature) -> f64 {
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.0.len() && j < b.0.len() {
        match a.0[i].cmp(&b.0[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.0.len() + b.0.len() - shared;
    if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    }
}

/// Join sizes: `h` left-only tuples, `e` right-only tuples, `he` linked pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinEstimate {
    pub h: usize,
    pub e: usize,
    pub he: usize,
}

impl JoinEstimate {
    pub fn left_size(&self) -> usize {
        self.h + self.he
    }

    pub fn right_size(&self) -> usize {
        self.e + self.he
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&EstimateDocument {
            format_version: FORMAT_VERSION,
            estimate: *self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: EstimateDocument = serde_json::from_str(s)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: doc.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(doc.estimate)
    }
}

#[derive(Serialize, Deserialize)]
struct EstimateDocument {
    format_version: u32,
    #[serde(flatten)]
    estimate: JoinEstimate,
}

/// Matches right signatures to left ones when their Jaccard similarity is
/// at least `threshold`, greedily by descending similarity, one to one.
pub fn estimate_join(left: &[Signature], right: &[Signature], threshold: f64) -> Result<JoinEstimate> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!("match threshold must be in (0, 1], got {threshold}")));
    }
    let mut index: HashMap<&str, Vec<u32>> = HashMap::new();
    for (j, sig) in right.iter().enumerate() {
        for g in &sig.0 {
            index.entry(g.as_str()).or_default().push(j as u32);
        }
    }
    let mut pairs: Vec<(f64, u32, u32)> = left
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, sig)| {
            let mut shared: HashMap<u32, usize> = HashMap::new();
            for g in &sig.0 {
                if let Some(js) = index.get(g.as_str()) {
                    for j in js {
                        *shared.entry(*j).or_default() += 1;
                    }
                }
            }
            let mut out: Vec<(f64, u32, u32)> = shared
                .into_iter()
                .filter_map(|(j, s)| {
                    let union = sig.0.len() + right[j as usize].0.len() - s;
                    let sim = s as f64 / union as f64;
                    (sim >= threshold).then_some((sim, i as u32, j))
                })
                .collect();
            out.sort_by_key(|p| p.2);
            out.into_iter()
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut left_used = vec![false; left.len()];
    let mut right_used = vec![false; right.len()];
    let mut he = 0;
    for (_, i, j) in pairs {
        let (i, j) = (i as usize, j as usize);
        if !left_used[i] && !right_used[j] {
            left_used[i] = true;
            right_used[j] = true;
            he += 1;
        }
    }
    Ok(JoinEstimate {
        h: left.len() - he,
        e: right.len() - he,
        he,
    })
}

fn with_ids(mut table: Table, ids: &[u64]) -> Result<Table> {
    let cells: Vec<Option<String>> = ids.iter().map(|v| Some(v.to_string())).collect();
    table.columns.push(Column {
        name: LINK_ID_COLUMN.to_string(),
        distinct_count: ids.len(),
        cells,
        data_type: DataType::Integer,
        categorical: false,
        datetime_format: None,
    });
    Table::new(table.columns)
}

/// Generates a left table of `h + he` rows and a right table of `e + he`
/// rows, each with a `link_id` column. Exactly `he` ids occur on both sides.
pub fn generate_linked(
    left: &DatasetDescription,
    right: &DatasetDescription,
    estimate: JoinEstimate,
    seed: u64,
) -> Result<(Table, Table)> {
    if estimate.left_size() == 0 || estimate.right_size() == 0 {
        return Err(Error::InvalidParameter("both linked tables need at least one row".into()));
    }
    let seeder = Seeder::new(seed);
    let total = estimate.h + estimate.e + estimate.he;
    let mut ids: Vec<u64> = (0..total as u64).collect();
    let mut rng = seeder.stream(Purpose::Linking, 0);
    ids.shuffle(&mut rng);
    let (shared, rest) = ids.split_at(estimate.he);
    let (left_only, right_only) = rest.split_at(estimate.h);
    let mut left_ids: Vec<u64> = shared.iter().chain(left_only).copied().collect();
    let mut right_ids: Vec<u64> = shared.iter().chain(right_only).copied().collect();
    left_ids.shuffle(&mut rng);
    right_ids.shuffle(&mut rng);

    let l = generate(&GenerationRequest::new(left, seeder.derive_seed(Purpose::Linking, 1)).size(left_ids.len()))?;
    let r = generate(&GenerationRequest::new(right, seeder.derive_seed(Purpose::Linking, 2)).size(right_ids.len()))?;
    Ok((with_ids(l, &left_ids)?, with_ids(r, &right_ids)?))
}

fn escape(gram: &str) -> String {
    let mut out = String::with_capacity(gram.len());
    for c in gram.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(field: &str, line: usize) -> Result<String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next() {
            Some('\\') => '\\',
            Some('t') => '\t',
            Some('n') => '\n',
            Some('r') => '\r',
            other => {
                return Err(Error::MalformedSignature {
                    line,
                    reason: format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default()),
                })
            }
        });
    }
    Ok(out)
}

/// One signature per line, n-grams separated by tabs, with `\\`, `\t`,
/// `\n` and `\r` escaped.
pub fn write_signatures<W: Write>(signatures: &[Signature], mut writer: W) -> std::io::Result<()> {
    for sig in signatures {
        let line: Vec<String> = sig.0.iter().map(|g| escape(g)).collect();
        writeln!(writer, "{}", line.join("\t"))?;
    }
    writer.flush()
}

pub fn read_signatures<R: BufRead>(reader: R) -> Result<Vec<Signature>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedSignature { line: i + 1, reason: e.to_string() })?;
        if line.is_empty() {
            out.push(Signature(Vec::new()));
            continue;
        }
        let grams = line.split('\t').map(|f| unescape(f, i + 1)).collect::<Result<Vec<_>>>()?;
        if grams.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedSignature {
                line: i + 1,
                reason: "n-grams are not sorted and unique".into(),
            });
        }
        out.push(Signature(grams));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(row: &[&str], n: usize, k: usize) -> Signature {
        let row: Vec<Option<&str>> = row.iter().map(|c| Some(*c)).collect();
        lsh_signature(&row, n, k).unwrap()
    }

    fn grams(v: &[&str]) -> Signature {
        Signature(v.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn single_window() {
        assert_eq!(sig(&["ab"], 2, 10), grams(&["ab"]));
        assert_eq!(sig(&["a"], 3, 10), grams(&["a"]));
    }

    #[test]
    fn hand_enumerated_windows() {
        assert_eq!(sig(&["abc", "xy"], 2, 3), grams(&["ab", "bc", "c|"]));
        assert_eq!(sig(&["abc", "xy"], 2, 10), grams(&["ab", "bc", "c|", "xy", "|x"]));
    }

    #[test]
    fn empty_row_and_params() {
        assert!(matches!(lsh_signature(&[], 2, 2), Err(Error::EmptyRow)));
        assert!(lsh_signature(&[Some("a")], 0, 2).is_err());
        assert!(lsh_signature(&[Some("a")], 2, 0).is_err());
        assert_eq!(lsh_signature(&[None], 2, 2).unwrap(), Signature(vec![]));
    }

    #[test]
    fn multibyte_text_splits_on_chars() {
        assert_eq!(sig(&["äöü"], 2, 10), grams(&["äö", "öü"]));
    }

    #[test]
    fn jaccard_values() {
        assert_eq!(jaccard(&grams(&["a", "b"]), &grams(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&grams(&["a", "b"]), &grams(&["b", "c"])), 1.0 / 3.0);
        assert_eq!(jaccard(&grams(&[]), &grams(&[])), 0.0);
    }

    #[test]
    fn estimate_disjoint_and_identical() {
        let left: Vec<Signature> = (0..5).map(|i| sig(&[&format!("abc{i}")], 2, 20)).collect();
        let right: Vec<Signature> = (0..7).map(|i| sig(&[&format!("XYZ{i}")], 2, 20)).collect();
        assert_eq!(estimate_join(&left, &right, 0.5).unwrap(), JoinEstimate { h: 5, e: 7, he: 0 });
        assert_eq!(estimate_join(&left, &left, 1.0).unwrap(), JoinEstimate { h: 0, e: 0, he: 5 });
        assert_eq!(estimate_join(&[], &[], 0.5).unwrap(), JoinEstimate { h: 0, e: 0, he: 0 });
        assert!(estimate_join(&left, &left, 0.0).is_err());
        assert!(estimate_join(&left, &left, 1.5).is_err());
    }

    #[test]
    fn estimate_json_is_versioned() {
        let e = JoinEstimate { h: 1, e: 2, he: 3 };
        let json = e.to_json().unwrap();
        assert!(json.contains("\"format_version\": 1"));
        assert_eq!(JoinEstimate::from_json(&json).unwrap(), e);
        assert!(JoinEstimate::from_json(r#"{"format_version": 9, "h": 0, "e": 0, "he": 0}"#).is_err());
    }

    #[test]
    fn greedy_is_one_to_one() {
        let a = grams(&["a", "b", "c"]);
        let left = vec![a.clone(), a.clone()];
        let right = vec![a];
        assert_eq!(estimate_join(&left, &right, 0.5).unwrap(), JoinEstimate { h: 1, e: 0, he: 1 });
    }

    #[test]
    fn signature_file_round_trip() {
        let sigs = vec![grams(&["a\tb", "c\\d", "e\nf"]), grams(&[]), grams(&["x|y"])];
        let mut buf = Vec::new();
        write_signatures(&sigs, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|b| **b == b'\n').count(), 3);
        assert_eq!(read_signatures(&buf[..]).unwrap(), sigs);
        assert!(matches!(
            read_signatures(&b"ok\nbad\\q\n"[..]),
            Err(Error::MalformedSignature { line: 2, .. })
        ));
        assert!(read_signatures(&b"b\ta\n"[..]).is_err());
    }
}
