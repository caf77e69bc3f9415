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

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("column `{0}` has no non-missing cells")]
    UntypableColumn(String),

    #[error("column `{column}` cannot be forced to {data_type}: cell `{cell}` does not parse")]
    OverrideTypeMismatch {
        column: String,
        data_type: crate::ingest::DataType,
        cell: String,
    },

    #[error("column is empty")]
    EmptyColumn,

    #[error("table has no rows")]
    EmptyTable,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("attribute `{0}` is not categorical")]
    NotCategorical(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("Bayesian network needs at least 2 attributes, got {0}")]
    TooFewAttributes(usize),

    #[error(
        "conditional table for `{child}` would have {cells} cells (limit {limit}); \
         lower k or the histogram size"
    )]
    ConditionalTableTooLarge {
        child: String,
        cells: u128,
        limit: u128,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("description built in {built} mode cannot serve a {requested} request")]
    ModeMismatch {
        built: crate::describer::Mode,
        requested: crate::describer::Mode,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("empty row")]
    EmptyRow,

    #[error("malformed signature file at line {line}: {reason}")]
    MalformedSignature { line: usize, reason: String },

    #[error("extreme-value rule is not defined for string attribute `{0}`")]
    ExtremeOnString(String),

    #[error("protected mix sums to {0}, expected 1")]
    MixNotNormalized(f64),

    #[error("unsupported format_version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
