//! Small helpers for the header-checked CSV formats used across the crate.

use std::io::Read;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("missing header row")]
    NoHeader,
    #[error("missing column `{column}` (header: {found})")]
    MissingColumn { column: String, found: String },
    #[error("line {line}, column `{column}`: {message}")]
    Field { line: u64, column: String, message: String },
}

pub type Result<T> = std::result::Result<T, TableError>;

/// A CSV reader whose header has been checked against a required column list.
pub struct Table<R: Read> {
    reader: csv::Reader<R>,
    columns: Vec<(String, usize)>,
    headers: csv::StringRecord,
}

pub struct Row<'a> {
    record: csv::StringRecord,
    line: u64,
    table_columns: &'a [(String, usize)],
    headers: &'a csv::StringRecord,
}

impl<R: Read> Table<R> {
    pub fn new(input: R, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(TableError::NoHeader);
        }
        let mut columns = Vec::with_capacity(required.len());
        for &name in required {
            let pos = headers.iter().position(|h| h == name).ok_or_else(|| TableError::MissingColumn {
                column: name.to_string(),
                found: headers.iter().collect::<Vec<_>>().join(","),
            })?;
            columns.push((name.to_string(), pos));
        }
        Ok(Self { reader, columns, headers })
    }

    pub fn headers(&self) -> &csv::StringRecord {
        &self.headers
    }

    /// Visits each data row in file order.
    pub fn for_each_row(&mut self, mut f: impl FnMut(&Row<'_>) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        while self.reader.read_record(&mut record)? {
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let row = Row {
                record: std::mem::take(&mut record),
                line,
                table_columns: &self.columns,
                headers: &self.headers,
            };
            f(&row)?;
            record = row.record;
        }
        Ok(())
    }
}

impl Row<'_> {
    pub fn line(&self) -> u64 {
        self.line
    }

    /// Raw text of a required column.
    pub fn str(&self, column: &str) -> &str {
        let pos = self
            .table_columns
            .iter()
            .find(|(c, _)| c == column)
            .map(|(_, p)| *p)
            .expect("column was declared as required");
        self.record.get(pos).unwrap_or("")
    }

    /// Raw text of any header column, if present.
    pub fn optional(&self, column: &str) -> Option<&str> {
        let pos = self.headers.iter().position(|h| h == column)?;
        self.record.get(pos)
    }

    pub fn parse<T: FromStr>(&self, column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let text = self.str(column);
        text.parse().map_err(|e: T::Err| self.field_error(column, format!("{e} ({text:?})")))
    }

    pub fn field_error(&self, column: &str, message: impl Into<String>) -> TableError {
        TableError::Field { line: self.line, column: column.to_string(), message: message.into() }
    }
}

/// Formats a float for CSV output with a fixed number of decimals, mapping
/// negative zero to zero.
pub fn fmt_fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_column_is_named() {
        let err = Table::new("a,b\n1,2\n".as_bytes(), &["a", "c"]).err().unwrap();
        assert!(err.to_string().contains("`c`"), "{err}");
    }

    #[test]
    fn parse_error_reports_line_and_column() {
        let mut t = Table::new("a,b\n1,2\n3,x\n".as_bytes(), &["a", "b"]).unwrap();
        let mut seen = Vec::new();
        let err = t
            .for_each_row(|r| {
                seen.push(r.parse::<i32>("b")?);
                Ok(())
            })
            .unwrap_err();
        assert_eq!(seen, vec![2]);
        assert!(matches!(err, TableError::Field { line: 3, ref column, .. } if column == "b"), "{err}");
    }

    #[test]
    fn fixed_format_drops_negative_zero() {
        assert_eq!(fmt_fixed(-0.0000001, 3), "0.000");
        assert_eq!(fmt_fixed(-1.5, 1), "-1.5");
    }
}
