//! Face-milling experiment records: the embedded 27-run case study, CSV
//! ingestion and bounds validation.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Names of the three design variables in fixed order.
pub const VARIABLE_NAMES: [&str; 3] = ["vc", "fz", "t"];

/// One experimental run: cutting speed (m/min), feed rate (mm/tooth), depth
/// of cut (mm) and the measured responses Ra (μm) and MRR (mm³/min).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord<T> {
    pub vc: T,
    pub fz: T,
    pub t: T,
    pub ra: T,
    pub mrr: T,
}

impl<T: Scalar> ExperimentRecord<T> {
    pub fn new(vc: T, fz: T, t: T, ra: T, mrr: T) -> Self {
        Self { vc, fz, t, ra, mrr }
    }

    pub fn design(&self) -> [T; 3] {
        [self.vc, self.fz, self.t]
    }

    fn fields(&self) -> [(&'static str, T); 5] {
        [
            ("vc", self.vc),
            ("fz", self.fz),
            ("t", self.t),
            ("ra", self.ra),
            ("mrr", self.mrr),
        ]
    }
}

/// Box limits on (vc, fz, t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Bounds<T> {
    lower: [T; 3],
    upper: [T; 3],
}

#[derive(Deserialize)]
struct RawBounds<T> {
    lower: [T; 3],
    upper: [T; 3],
}

impl<T: Scalar> TryFrom<RawBounds<T>> for Bounds<T> {
    type Error = Error;

    fn try_from(raw: RawBounds<T>) -> Result<Self> {
        Bounds::new(raw.lower, raw.upper)
    }
}

impl<T: Scalar> Bounds<T> {
    pub fn new(lower: [T; 3], upper: [T; 3]) -> Result<Self> {
        for i in 0..3 {
            if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
                return Err(Error::InvalidBounds(format!(
                    "{}: lower {} must be below upper {}",
                    VARIABLE_NAMES[i], lower[i], upper[i]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The machining limits 78 ≤ vc ≤ 314, 0.04 ≤ fz ≤ 0.16, 0.2 ≤ t ≤ 0.6.
    pub fn case_study() -> Self {
        Self {
            lower: [T::of(78.0), T::of(0.04), T::of(0.2)],
            upper: [T::of(314.0), T::of(0.16), T::of(0.6)],
        }
    }

    pub fn lower(&self) -> [T; 3] {
        self.lower
    }

    pub fn upper(&self) -> [T; 3] {
        self.upper
    }

    pub fn range(&self) -> [T; 3] {
        std::array::from_fn(|i| self.upper[i] - self.lower[i])
    }

    pub fn center(&self) -> [T; 3] {
        std::array::from_fn(|i| (self.lower[i] + self.upper[i]) / T::of(2.0))
    }

    pub fn contains(&self, x: &[T; 3]) -> bool {
        (0..3).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    /// Maps a design point onto the unit cube.
    pub fn to_unit(&self, x: &[T; 3]) -> [T; 3] {
        std::array::from_fn(|i| (x[i] - self.lower[i]) / (self.upper[i] - self.lower[i]))
    }

    /// Inverse of [`Bounds::to_unit`]. Unit coordinates of exactly 0 or 1 map
    /// onto the stored bounds without rounding.
    pub fn from_unit(&self, u: &[T; 3]) -> [T; 3] {
        std::array::from_fn(|i| {
            if u[i] <= T::zero() {
                self.lower[i]
            } else if u[i] >= T::one() {
                self.upper[i]
            } else {
                self.lower[i] + u[i] * (self.upper[i] - self.lower[i])
            }
        })
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, x: &[T; 3]) -> [T; 3] {
        std::array::from_fn(|i| x[i].max(self.lower[i]).min(self.upper[i]))
    }
}

/// Column names of the experiment CSV, in the order vc, fz, t, ra, mrr.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub columns: [String; 5],
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            columns: ["vc", "fz", "t", "ra", "mrr"].map(String::from),
        }
    }
}

/// Table of runs for face milling of AISI 1040 steel. Row 9's MRR of 5760 is
/// kept as recorded.
const CASE_STUDY: [[f64; 5]; 27] = [
    [78.0, 0.04, 0.2, 2.23, 730.0],
    [78.0, 0.04, 0.4, 2.29, 1460.0],
    [78.0, 0.04, 0.6, 2.32, 2190.0],
    [78.0, 0.08, 0.2, 2.37, 1460.0],
    [78.0, 0.08, 0.4, 2.4, 2920.0],
    [78.0, 0.08, 0.6, 2.42, 4380.0],
    [78.0, 0.16, 0.2, 2.58, 2920.0],
    [78.0, 0.16, 0.4, 2.6, 5840.0],
    [78.0, 0.16, 0.6, 2.62, 5760.0],
    [157.0, 0.04, 0.2, 1.5, 1460.0],
    [157.0, 0.04, 0.4, 1.54, 2920.0],
    [157.0, 0.04, 0.6, 1.55, 4380.0],
    [157.0, 0.08, 0.2, 1.59, 2920.0],
    [157.0, 0.08, 0.4, 1.6, 5840.0],
    [157.0, 0.08, 0.6, 1.61, 8760.0],
    [157.0, 0.16, 0.2, 1.62, 5840.0],
    [157.0, 0.16, 0.4, 1.64, 11680.0],
    [157.0, 0.16, 0.6, 1.65, 17520.0],
    [314.0, 0.04, 0.2, 0.5, 2920.0],
    [314.0, 0.04, 0.4, 0.48, 5840.0],
    [314.0, 0.04, 0.6, 0.51, 8760.0],
    [314.0, 0.08, 0.2, 0.55, 5840.0],
    [314.0, 0.08, 0.4, 0.6, 11680.0],
    [314.0, 0.08, 0.6, 0.62, 17520.0],
    [314.0, 0.16, 0.2, 0.65, 11680.0],
    [314.0, 0.16, 0.4, 0.76, 23360.0],
    [314.0, 0.16, 0.6, 0.82, 35040.0],
];

/// The embedded 27-run face-milling dataset.
pub fn builtin_case_study<T: Scalar>() -> Vec<ExperimentRecord<T>> {
    CASE_STUDY
        .iter()
        .map(|r| ExperimentRecord::new(T::of(r[0]), T::of(r[1]), T::of(r[2]), T::of(r[3]), T::of(r[4])))
        .collect()
}

pub fn load_experiments<T: Scalar>(path: &Path, schema: &Schema) -> Result<Vec<ExperimentRecord<T>>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_experiments(file, schema)
}

/// Parses experiment CSV from any reader. Rows are numbered from 1 (the first
/// data row after the header) in error messages.
pub fn read_experiments<T: Scalar, R: Read>(reader: R, schema: &Schema) -> Result<Vec<ExperimentRecord<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    for h in headers.iter() {
        if !schema.columns.iter().any(|c| c == h) {
            return Err(Error::UnexpectedColumn(h.to_string()));
        }
    }
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(&schema.columns) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Csv(e.to_string()))?;
        let mut vals = [T::zero(); 5];
        for (k, (&col, name)) in index.iter().zip(&schema.columns).enumerate() {
            let cell = row.get(col).unwrap_or("");
            let parsed: f64 = cell.parse().map_err(|_| Error::ParseCell {
                row: i + 1,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            vals[k] = T::of(parsed);
        }
        records.push(ExperimentRecord::new(vals[0], vals[1], vals[2], vals[3], vals[4]));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(records)
}

/// Writes records with the default `vc,fz,t,ra,mrr` header. Values use the
/// shortest representation that parses back to the same number.
pub fn write_experiments<T: Scalar, W: Write>(records: &[ExperimentRecord<T>], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    wtr.write_record(["vc", "fz", "t", "ra", "mrr"]).map_err(csv_err)?;
    for r in records {
        wtr.write_record(r.fields().map(|(_, v)| v.to_string())).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite,
    NonPositive,
    BelowLowerBound,
    AboveUpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Zero-based record index.
    pub index: usize,
    pub field: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::NonFinite => "not finite",
            ViolationKind::NonPositive => "not positive",
            ViolationKind::BelowLowerBound => "below lower bound",
            ViolationKind::AboveUpperBound => "above upper bound",
        };
        write!(f, "record {}: {} {}", self.index + 1, self.field, what)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_records<T: Scalar>(records: &[ExperimentRecord<T>], bounds: &Bounds<T>) -> ValidationReport {
    let mut violations = Vec::new();
    for (index, r) in records.iter().enumerate() {
        for (k, (field, v)) in r.fields().into_iter().enumerate() {
            let kind = if !v.is_finite() {
                Some(ViolationKind::NonFinite)
            } else if k < 3 && v < bounds.lower[k] {
                Some(ViolationKind::BelowLowerBound)
            } else if k < 3 && v > bounds.upper[k] {
                Some(ViolationKind::AboveUpperBound)
            } else if k >= 3 && v <= T::zero() {
                Some(ViolationKind::NonPositive)
            } else {
                None
            };
            if let Some(kind) = kind {
                violations.push(Violation { index, field, kind });
            }
        }
    }
    ValidationReport {
        records: records.len(),
        violations,
    }
}
