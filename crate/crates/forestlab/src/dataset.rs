//! Row-major numeric datasets and their CSV form.
//!
//! The on-disk format is a plain CSV with a header row naming the feature
//! columns followed by the response column, e.g. `x1,...,x10,y`. Floats are
//! written in Rust's shortest round-trip decimal form, so a write/read cycle
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A table of `n` rows with `d` numeric features and one numeric response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    response: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset from a flat row-major feature buffer and a response vector.
    ///
    /// Rejects empty data, shape mismatches, and non-finite values.
    pub fn new(
        features: Vec<f64>,
        response: Vec<f64>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::InvalidParams("dataset must have at least one row".into()));
        }
        let d = column_names.len();
        if d == 0 {
            return Err(Error::InvalidParams("dataset must have at least one feature".into()));
        }
        if features.len() != n * d {
            return Err(Error::InvalidParams(format!(
                "feature buffer holds {} values, expected {} ({} rows x {} columns)",
                features.len(),
                n * d,
                n,
                d
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature value at row {}, column {}",
                i / d,
                i % d
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response value at row {i}")));
        }
        Ok(Dataset { n, d, features, response, column_names })
    }

    /// Default column names `x1..xd`.
    pub fn default_names(d: usize) -> Vec<String> {
        (1..=d).map(|j| format!("x{j}")).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Feature row `i` as a slice of length `d`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Copy of feature column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.features[i * self.d + j]).collect()
    }

    /// Resolve a column by name (`x3`) or 1-based position printed in headers.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// New dataset containing the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(rows.len() * self.d);
        let mut response = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            response.push(self.response[r]);
        }
        Dataset::new(features, response, self.column_names.clone())
    }

    /// Serialize as CSV: header `name1,...,named,y`, one row per observation.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for name in &self.column_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("y\n");
        for i in 0..self.n {
            for v in self.row(i) {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", self.response[i]);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_csv_string().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Parse the CSV format produced by [`Dataset::to_csv_string`].
    ///
    /// The last column is the response; all others are features.
    pub fn from_csv_str(text: &str) -> Result<Dataset> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV document".into()))?;
        let mut names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if names.len() < 2 {
            return Err(Error::Parse("header needs at least one feature and a response".into()));
        }
        names.pop(); // response column
        let d = names.len();
        let mut features = Vec::new();
        let mut response = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut count = 0usize;
            for cell in line.split(',') {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::Parse(format!("line {}: bad number {cell:?}", lineno + 1))
                })?;
                count += 1;
                if count <= d {
                    features.push(v);
                } else {
                    response.push(v);
                }
            }
            if count != d + 1 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} cells, found {count}",
                    lineno + 1,
                    d + 1
                )));
            }
        }
        Dataset::new(features, response, names)
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        Dataset::from_csv_str(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dataset {
        Dataset::new(
            vec![0.1, 2.0, -0.25, 4.0, 1e-17, 6.0],
            vec![1.5, -2.5, 0.0625],
            vec!["x1".into(), "x2".into()],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Dataset::new(vec![], vec![], Dataset::default_names(2)).is_err());
        assert!(Dataset::new(vec![1.0], vec![1.0, 2.0], Dataset::default_names(1)).is_err());
        assert!(Dataset::new(vec![f64::NAN], vec![1.0], Dataset::default_names(1)).is_err());
        assert!(Dataset::new(vec![1.0], vec![f64::INFINITY], Dataset::default_names(1)).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = small();
        let text = data.to_csv_string();
        assert!(text.starts_with("x1,x2,y\n"));
        let back = Dataset::from_csv_str(&text).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = Dataset::from_csv_str("x1,y\n1.0,2.0\noops,3.0\n").unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }
}
