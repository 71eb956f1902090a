//! Result tables and their on-disk form.
//!
//! Each table is written as `<name>.csv` (header row, `.` decimals, `\n`
//! line endings) next to `<name>.json`, a provenance record holding the seed,
//! the replication count, the tool version and the resolved run file. Output
//! is a pure function of the table, so identical runs give identical bytes.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TOOL_NAME: &str = "coauthor-sim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("row {row} has {got} cells, schema `{schema}` has {expected} columns")]
    Ragged {
        schema: Schema,
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("{path}: header does not match any known schema")]
    UnknownSchema { path: PathBuf },
    #[error("{path}: row {row}: cannot read `{value}` as a number")]
    BadNumber { path: PathBuf, row: usize, value: String },
}

/// The documented table layouts. Column order is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Fig1,
    Fig2a,
    Fig2b,
    Fig2c,
    Fig3,
    Run,
    Events,
}

impl Schema {
    pub const ALL: [Schema; 7] = [
        Schema::Fig1,
        Schema::Fig2a,
        Schema::Fig2b,
        Schema::Fig2c,
        Schema::Fig3,
        Schema::Run,
        Schema::Events,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Schema::Fig1 => "fig1",
            Schema::Fig2a => "fig2a",
            Schema::Fig2b => "fig2b",
            Schema::Fig2c => "fig2c",
            Schema::Fig3 => "fig3",
            Schema::Run => "run",
            Schema::Events => "events",
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Schema::Fig1 => &["authors", "u_width", "c_width", "iau_rate", "n"],
            Schema::Fig2a => &["authors", "duration_weeks", "mean", "std", "n"],
            Schema::Fig2b => &["authors", "progress", "mean", "std", "n"],
            Schema::Fig2c => &["authors", "position", "rate", "n"],
            Schema::Fig3 => &["case", "mean", "std", "n"],
            Schema::Run => &["iau_rate", "std", "n"],
            Schema::Events => &["rep", "round", "issuer", "from", "to", "outcome"],
        }
    }

    pub fn from_header<S: AsRef<str>>(header: &[S]) -> Option<Schema> {
        Schema::ALL.into_iter().find(|s| {
            s.columns().len() == header.len() && s.columns().iter().zip(header).all(|(a, b)| *a == b.as_ref())
        })
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Real(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // shortest representation that round-trips
            Value::Real(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(u64::from(v))
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub reps: u64,
    /// Resolved run file; feeding it back reproduces the table.
    pub config: String,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, reps: u64, config: String) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            reps,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub schema: Schema,
    /// File stem; usually the schema id.
    pub name: String,
    pub rows: Vec<Vec<Value>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(schema: Schema, provenance: Provenance) -> Self {
        Self {
            schema,
            name: schema.id().to_string(),
            rows: Vec::new(),
            provenance,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn push(&mut self, row: Vec<Value>) {
        self.rows.push(row);
    }

    pub fn validate(&self) -> Result<(), ResultsError> {
        let expected = self.schema.columns().len();
        for (row, cells) in self.rows.iter().enumerate() {
            if cells.len() != expected {
                return Err(ResultsError::Ragged {
                    schema: self.schema,
                    row,
                    got: cells.len(),
                    expected,
                });
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, ResultsError> {
        self.validate()?;
        let mut out = String::new();
        out.push_str(&self.schema.columns().join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| quote(&v.to_string())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Writes `<dir>/<name>.csv` and its provenance `<dir>/<name>.json`,
/// creating `dir` if needed. Returns the CSV path.
pub fn write_results(table: &ResultTable, dir: &Path) -> Result<PathBuf, ResultsError> {
    let csv = table.to_csv_string()?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ResultsError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join(format!("{}.csv", table.name));
    fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;
    let json_path = dir.join(format!("{}.json", table.name));
    let mut json = serde_json::to_string_pretty(&ProvenanceFile {
        schema: table.schema,
        columns: table.schema.columns(),
        rows: table.rows.len(),
        provenance: &table.provenance,
    })
    .expect("provenance serializes");
    json.push('\n');
    fs::write(&json_path, json).map_err(io_err(&json_path))?;
    Ok(csv_path)
}

#[derive(Serialize)]
struct ProvenanceFile<'a> {
    schema: Schema,
    columns: &'a [&'a str],
    rows: usize,
    provenance: &'a Provenance,
}

/// A CSV read back as numbers, with its schema recognized from the header.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub schema: Schema,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.columns().iter().position(|c| *c == name)
    }
}

/// Reads a numeric result table (any schema without text columns).
pub fn read_numeric_table(path: &Path) -> Result<NumericTable, ResultsError> {
    let csv_err = |source| ResultsError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let schema = Schema::from_header(&header).ok_or_else(|| ResultsError::UnknownSchema {
        path: path.to_path_buf(),
    })?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| ResultsError::BadNumber {
                    path: path.to_path_buf(),
                    row: i + 1,
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(NumericTable { schema, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3_table() -> ResultTable {
        let mut t = ResultTable::new(Schema::Fig3, Provenance::new("fig3", 7, 100, "seed = 7\n".into()));
        for k in 1..=12 {
            t.push(vec![
                format!("case{k}").into(),
                (k as f64 / 13.0).into(),
                0.5.into(),
                100u64.into(),
            ]);
        }
        t
    }

    #[test]
    fn fig3_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_results(&fig3_table(), dir.path()).unwrap();
        assert_eq!(path.file_name().unwrap(), "fig3.csv");
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "case,mean,std,n");
        assert_eq!(lines.len(), 13);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("fig3.json")).unwrap()).unwrap();
        assert_eq!(json["provenance"]["seed"], 7);
        assert_eq!(json["provenance"]["reps"], 100);
        assert_eq!(json["rows"], 12);
    }

    #[test]
    fn writes_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_results(&fig3_table(), dir.path()).unwrap();
        let first = fs::read(&p).unwrap();
        let first_json = fs::read(dir.path().join("fig3.json")).unwrap();
        write_results(&fig3_table(), dir.path()).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        assert_eq!(fs::read(dir.path().join("fig3.json")).unwrap(), first_json);
    }

    #[test]
    fn unwritable_dir_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_results(&fig3_table(), &blocker.join("sub")).unwrap_err();
        assert!(matches!(err, ResultsError::Io { .. }));
        assert!(err.to_string().contains("file"));
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut t = fig3_table();
        t.rows[3].pop();
        assert!(matches!(t.validate(), Err(ResultsError::Ragged { row: 3, .. })));
    }

    #[test]
    fn schema_detection_and_numeric_read() {
        assert_eq!(
            Schema::from_header(&["authors", "position", "rate", "n"]),
            Some(Schema::Fig2c)
        );
        assert_eq!(Schema::from_header(&["authors", "rate"]), None);

        let dir = tempfile::tempdir().unwrap();
        let mut t = ResultTable::new(Schema::Fig1, Provenance::new("fig1", 1, 2, String::new()));
        t.push(vec![5usize.into(), 1.0.into(), 2.5.into(), 0.25.into(), 2u64.into()]);
        let path = write_results(&t, dir.path()).unwrap();
        let back = read_numeric_table(&path).unwrap();
        assert_eq!(back.schema, Schema::Fig1);
        assert_eq!(back.rows, vec![vec![5.0, 1.0, 2.5, 0.25, 2.0]]);
        assert_eq!(back.column("iau_rate"), Some(3));
    }

    #[test]
    fn text_cells_are_quoted() {
        assert_eq!(quote("a,b"), "\"a,b\"");
        assert_eq!(quote("plain"), "plain");
    }
}
