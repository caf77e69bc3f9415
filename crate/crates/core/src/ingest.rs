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

//! CSV ingestion and per-column type inference.
//!
//! A column is `Integer` when every non-missing cell is a canonical signed
//! 64-bit integer, `Float` when every cell is a finite number, `Datetime`
//! when every cell is an ISO-8601 date or date-time, and `String` otherwise.
//! Integer-looking cells outside the `i64` range demote the column to
//! `String`. Inference is unanimous: a single odd cell changes the type.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CATEGORICAL_THRESHOLD: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Integer,
    Float,
    String,
    Datetime,
}

impl DataType {
    /// Integer, Float and Datetime share the numeric histogram path.
    pub fn is_numeric(self) -> bool {
        !matches!(self, DataType::String)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DataType::Integer => "integer",
            DataType::Float => "float",
            DataType::String => "string",
            DataType::Datetime => "datetime",
        };
        f.write_str(s)
    }
}

/// Rendering of datetime cells: date-only columns stay date-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatetimeFormat {
    Date,
    DateTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// `None` is a missing cell.
    pub cells: Vec<Option<String>>,
    pub data_type: DataType,
    pub categorical: bool,
    pub distinct_count: usize,
    pub datetime_format: Option<DatetimeFormat>,
}

impl Column {
    /// Builds a column and runs inference on it.
    pub fn new(name: impl Into<String>, cells: Vec<Option<String>>, threshold: usize) -> Self {
        let mut column = Column {
            name: name.into(),
            cells,
            data_type: DataType::String,
            categorical: false,
            distinct_count: 0,
            datetime_format: None,
        };
        column.infer(threshold);
        column
    }

    fn infer(&mut self, threshold: usize) {
        self.data_type = infer_type(&self.cells).unwrap_or(DataType::String);
        self.distinct_count = distinct_count(&self.cells);
        self.categorical = self.distinct_count <= threshold;
        self.datetime_format = datetime_format_of(self.data_type, &self.cells);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn non_missing(&self) -> impl Iterator<Item = &str> {
        self.cells.iter().filter_map(|c| c.as_deref())
    }

    pub fn non_missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Numeric view of every cell under the column's type (epoch seconds for
    /// datetimes). Cells that do not parse read as `None`.
    pub fn numeric_cells(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| c.as_deref().and_then(|s| parse_numeric(self.data_type, s)))
            .collect()
    }

    pub fn missing_rate(&self) -> Result<f64> {
        missing_rate(&self.cells)
    }
}

/// Forces a type and/or the categorical flag on one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeOverride {
    pub name: String,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub data_type: Option<DataType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categorical: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub categorical_threshold: usize,
    /// Tokens read as missing, compared ASCII case-insensitively. The empty
    /// cell is always missing.
    pub missing_tokens: Vec<String>,
    pub overrides: Vec<AttributeOverride>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            categorical_threshold: DEFAULT_CATEGORICAL_THRESHOLD,
            missing_tokens: vec!["N/A".to_string()],
            overrides: Vec::new(),
        }
    }
}

impl LoadOptions {
    pub fn is_missing(&self, cell: &str) -> bool {
        cell.is_empty() || self.missing_tokens.iter().any(|t| t.eq_ignore_ascii_case(cell))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    rows: usize,
}

impl Table {
    /// Assembles a table from already-inferred columns.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let rows = columns.first().map_or(0, Column::len);
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    left: rows,
                    right: c.len(),
                });
            }
        }
        Ok(Table { columns, rows })
    }

    /// Builds a table from a header and raw rows, marking missing tokens and
    /// running inference and overrides.
    pub fn from_records(
        header: Vec<String>,
        records: Vec<Vec<String>>,
        options: &LoadOptions,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &header {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.len() != header.len() {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: header.len(),
                    found: r.len(),
                });
            }
        }
        let threshold = options.categorical_threshold.max(1);
        let columns: Vec<Column> = header
            .into_par_iter()
            .enumerate()
            .map(|(j, name)| {
                let cells = records
                    .iter()
                    .map(|r| {
                        let cell = &r[j];
                        (!options.is_missing(cell)).then(|| cell.clone())
                    })
                    .collect();
                Column::new(name, cells, threshold)
            })
            .collect();
        let mut table = Table {
            rows: records.len(),
            columns,
        };
        table.apply_overrides(&options.overrides)?;
        Ok(table)
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn row(&self, i: usize) -> Vec<Option<&str>> {
        self.columns.iter().map(|c| c.cells[i].as_deref()).collect()
    }

    /// Re-runs inference on the raw cells with a new threshold and overrides.
    pub fn reconfigure(&mut self, categorical_threshold: usize, overrides: &[AttributeOverride]) -> Result<()> {
        let threshold = categorical_threshold.max(1);
        self.columns.par_iter_mut().for_each(|c| c.infer(threshold));
        self.apply_overrides(overrides)
    }

    pub fn apply_overrides(&mut self, overrides: &[AttributeOverride]) -> Result<()> {
        for o in overrides {
            if self.column(&o.name).is_none() {
                return Err(Error::UnknownAttribute(o.name.clone()));
            }
        }
        for o in overrides {
            let column = self
                .columns
                .iter_mut()
                .find(|c| c.name == o.name)
                .expect("checked above");
            if let Some(t) = o.data_type {
                if let Some(bad) = column.non_missing().find(|s| !parses_as(t, s)) {
                    return Err(Error::OverrideTypeMismatch {
                        column: column.name.clone(),
                        data_type: t,
                        cell: bad.to_string(),
                    });
                }
                column.data_type = t;
                column.datetime_format = datetime_format_of(t, &column.cells);
            }
            if let Some(flag) = o.categorical {
                column.categorical = flag;
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.rows {
            w.write_record(self.columns.iter().map(|c| c.cells[i].as_deref().unwrap_or("")))?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv writer emits UTF-8"))
    }
}

/// Reads a CSV file (header row required) into a typed table.
pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &LoadOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        records.push(rec.iter().map(str::to_string).collect());
    }
    Table::from_records(header, records, options)
}

/// Infers the type of a column; `None` when every cell is missing.
pub fn infer_type(cells: &[Option<String>]) -> Option<DataType> {
    let mut all_integer = true;
    let mut all_numeric = true;
    let mut all_datetime = true;
    let mut any = false;
    for cell in cells.iter().flatten() {
        any = true;
        match integer_cell(cell) {
            IntegerCell::Canonical => {
                all_datetime = false;
                continue;
            }
            IntegerCell::Overflow => return Some(DataType::String),
            IntegerCell::No => all_integer = false,
        }
        if all_numeric && parse_float(cell).is_none() {
            all_numeric = false;
        }
        if all_datetime && parse_datetime(cell).is_none() {
            all_datetime = false;
        }
    }
    if !any {
        return None;
    }
    Some(if all_integer {
        DataType::Integer
    } else if all_numeric {
        DataType::Float
    } else if all_datetime {
        DataType::Datetime
    } else {
        DataType::String
    })
}

/// True iff the number of distinct non-missing values is at most `threshold`.
pub fn detect_categorical(cells: &[Option<String>], threshold: usize) -> bool {
    distinct_count(cells) <= threshold
}

pub fn distinct_count(cells: &[Option<String>]) -> usize {
    cells.iter().flatten().map(String::as_str).collect::<HashSet<_>>().len()
}

/// Fraction of missing cells, before any noise.
pub fn missing_rate(cells: &[Option<String>]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::EmptyColumn);
    }
    let missing = cells.iter().filter(|c| c.is_none()).count();
    Ok(missing as f64 / cells.len() as f64)
}

enum IntegerCell {
    Canonical,
    Overflow,
    No,
}

fn integer_cell(s: &str) -> IntegerCell {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return IntegerCell::No;
    }
    match s.parse::<i64>() {
        Ok(v) if v.to_string() == s => IntegerCell::Canonical,
        Ok(_) => IntegerCell::No,
        // only canonical-looking tokens count as overflow
        Err(_) if !digits.starts_with('0') => IntegerCell::Overflow,
        Err(_) => IntegerCell::No,
    }
}

pub fn parse_integer(s: &str) -> Option<i64> {
    match integer_cell(s) {
        IntegerCell::Canonical => s.parse().ok(),
        _ => None,
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    if !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses an ISO-8601 date or date-time into seconds since the Unix epoch,
/// also reporting whether a time component was present.
pub fn parse_datetime(s: &str) -> Option<(i64, bool)> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some((d.and_hms_opt(0, 0, 0)?.and_utc().timestamp(), false));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some((dt.and_utc().timestamp(), true));
        }
    }
    DateTime::parse_from_rfc3339(s).ok().map(|dt| (dt.timestamp(), true))
}

pub fn format_datetime(seconds: i64, format: DatetimeFormat) -> String {
    let dt = DateTime::from_timestamp(seconds, 0).unwrap_or_default().naive_utc();
    match format {
        DatetimeFormat::Date => dt.format("%Y-%m-%d").to_string(),
        DatetimeFormat::DateTime => dt.format("%Y-%m-%dT%H:%M:%S").to_string(),
    }
}

/// Renders a float so that it never reads back as an integer.
pub fn format_float(v: f64) -> String {
    let s = v.to_string();
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Numeric value of a cell under a type; datetimes map to epoch seconds.
pub fn parse_numeric(data_type: DataType, s: &str) -> Option<f64> {
    match data_type {
        DataType::Integer => parse_integer(s).map(|v| v as f64),
        DataType::Float => parse_float(s),
        DataType::Datetime => parse_datetime(s).map(|(t, _)| t as f64),
        DataType::String => None,
    }
}

fn parses_as(data_type: DataType, s: &str) -> bool {
    match data_type {
        DataType::String => true,
        t => parse_numeric(t, s).is_some(),
    }
}

fn datetime_format_of(data_type: DataType, cells: &[Option<String>]) -> Option<DatetimeFormat> {
    if data_type != DataType::Datetime {
        return None;
    }
    let has_time = cells
        .iter()
        .flatten()
        .any(|c| parse_datetime(c).is_some_and(|(_, t)| t));
    Some(if has_time {
        DatetimeFormat::DateTime
    } else {
        DatetimeFormat::Date
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(v: &[&str]) -> Vec<Option<String>> {
        v.iter().map(|s| Some(s.to_string())).collect()
    }

    #[test]
    fn integer_column() {
        assert_eq!(infer_type(&cells(&["31", "45", "28"])), Some(DataType::Integer));
        let c = Column::new("age", cells(&["31", "45", "28"]), 10);
        assert!(c.categorical);
        assert_eq!(c.distinct_count, 3);
    }

    #[test]
    fn float_and_promotion() {
        assert_eq!(infer_type(&cells(&["3.5", "2.0"])), Some(DataType::Float));
        assert_eq!(infer_type(&cells(&["1", "2.5"])), Some(DataType::Float));
        assert_eq!(infer_type(&cells(&["007"])), Some(DataType::Float));
        assert_eq!(infer_type(&cells(&["1e3", "-4"])), Some(DataType::Float));
    }

    #[test]
    fn strings() {
        assert_eq!(infer_type(&cells(&["1", "x"])), Some(DataType::String));
        assert_eq!(infer_type(&cells(&["inf", "NaN"])), Some(DataType::String));
        assert_eq!(infer_type(&cells(&["2020-01-01", "3"])), Some(DataType::String));
    }

    #[test]
    fn datetimes() {
        assert_eq!(
            infer_type(&cells(&["2020-01-01", "1999-12-31"])),
            Some(DataType::Datetime)
        );
        assert_eq!(
            infer_type(&cells(&["2020-01-01T10:00:00", "2020-01-01 11:30:00", "2021-05-05T01:02:03Z"])),
            Some(DataType::Datetime)
        );
        assert_eq!(parse_datetime("1970-01-02"), Some((86_400, false)));
        assert_eq!(format_datetime(86_400, DatetimeFormat::Date), "1970-01-02");
        assert_eq!(
            format_datetime(86_401, DatetimeFormat::DateTime),
            "1970-01-02T00:00:01"
        );
    }

    #[test]
    fn missing_ignored_and_untypable() {
        let mut v = cells(&["1", "2"]);
        v.push(None);
        assert_eq!(infer_type(&v), Some(DataType::Integer));
        assert_eq!(infer_type(&[None, None]), None);
    }

    #[test]
    fn overflow_demotes_to_string() {
        assert_eq!(
            infer_type(&cells(&["1", "99999999999999999999"])),
            Some(DataType::String)
        );
        assert_eq!(
            infer_type(&cells(&["9223372036854775807", "-9223372036854775808"])),
            Some(DataType::Integer)
        );
    }

    #[test]
    fn categorical_threshold() {
        let degree = cells(&["BS", "BA", "MS", "PhD", "BS", "MS"]);
        assert!(detect_categorical(&degree, 10));
        let countries: Vec<Option<String>> = (0..200).map(|i| Some(format!("country{i}"))).collect();
        assert!(!detect_categorical(&countries, 10));
        let eleven: Vec<Option<String>> = (0..11).map(|i| Some(i.to_string())).collect();
        assert!(!detect_categorical(&eleven, 10));
        assert!(detect_categorical(&eleven[..10], 10));
    }

    #[test]
    fn missing_rates() {
        let mut v: Vec<Option<String>> = (0..100).map(|i| Some(i.to_string())).collect();
        assert_eq!(missing_rate(&v).unwrap(), 0.0);
        for c in v.iter_mut().take(5) {
            *c = None;
        }
        assert_eq!(missing_rate(&v).unwrap(), 0.05);
        let all: Vec<Option<String>> = vec![None; 100];
        assert_eq!(missing_rate(&all).unwrap(), 1.0);
        assert!(matches!(missing_rate(&[]), Err(Error::EmptyColumn)));
    }

    #[test]
    fn csv_errors() {
        let opts = LoadOptions::default();
        let ragged = "a,b\n1,2\n3\n";
        assert!(matches!(
            read_csv(ragged.as_bytes(), &opts),
            Err(Error::RaggedRow { row: 2, expected: 2, found: 1 })
        ));
        let dup = "a,a\n1,2\n";
        assert!(matches!(read_csv(dup.as_bytes(), &opts), Err(Error::DuplicateColumn(_))));
        let mut bad = opts.clone();
        bad.overrides.push(AttributeOverride {
            name: "zzz".into(),
            data_type: None,
            categorical: Some(true),
        });
        assert!(matches!(
            read_csv("a\n1\n".as_bytes(), &bad),
            Err(Error::UnknownAttribute(_))
        ));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", &opts),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn missing_tokens_and_overrides() {
        let csv = "age,country\n31,n/a\n,US\n45,FR\n";
        let opts = LoadOptions {
            overrides: vec![
                AttributeOverride {
                    name: "age".into(),
                    data_type: Some(DataType::Float),
                    categorical: Some(false),
                },
            ],
            ..LoadOptions::default()
        };
        let t = read_csv(csv.as_bytes(), &opts).unwrap();
        assert_eq!(t.row_count(), 3);
        let age = t.column("age").unwrap();
        assert_eq!(age.data_type, DataType::Float);
        assert!(!age.categorical);
        assert_eq!(age.cells[1], None);
        let country = t.column("country").unwrap();
        assert_eq!(country.cells[0], None);
        assert_eq!(country.data_type, DataType::String);
        assert!(country.categorical);

        let bad = LoadOptions {
            overrides: vec![AttributeOverride {
                name: "country".into(),
                data_type: Some(DataType::Integer),
                categorical: None,
            }],
            ..LoadOptions::default()
        };
        assert!(matches!(
            read_csv(csv.as_bytes(), &bad),
            Err(Error::OverrideTypeMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip_keeps_missing_empty() {
        let csv = "a,b\n1,\"x,y\"\n,z\n";
        let t = read_csv(csv.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1,\"x,y\"\n,z\n");
    }

    #[test]
    fn float_rendering_never_looks_integer() {
        assert_eq!(format_float(3.0), "3.0");
        assert_eq!(format_float(2.5), "2.5");
        assert_eq!(infer_type(&cells(&[&format_float(3.0)])), Some(DataType::Float));
    }
}
