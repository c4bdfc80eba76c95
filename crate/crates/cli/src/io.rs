//! CSV tables in, CSV tables and JSON models out.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use pqsq::regression::RegressionProblem;
use pqsq::DataMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

const MISSING: [&str; 6] = ["", "NA", "N/A", "NaN", "nan", "?"];

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Number(f64),
    Text(String),
}

/// A numeric table read from CSV. Rows with a missing cell are dropped on
/// read; cells that are present but not numbers are kept so that only the
/// selected columns have to be numeric.
#[derive(Debug, Clone)]
pub struct CsvTable {
    path: PathBuf,
    header: Option<Vec<String>>,
    width: usize,
    rows: Vec<(u64, Vec<Cell>)>,
    dropped: usize,
}

/// A column given by header name or by zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        }
    }

    pub fn parse_list(s: &str) -> Vec<Self> {
        s.split(',').filter(|c| !c.trim().is_empty()).map(Self::parse).collect()
    }
}

fn parse_cell(raw: &str) -> Option<Cell> {
    let t = raw.trim();
    if MISSING.contains(&t) {
        return None;
    }
    Some(match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Number(v),
        _ => Cell::Text(t.to_string()),
    })
}

fn looks_like_header(record: &csv::StringRecord) -> bool {
    record.iter().any(|c| matches!(parse_cell(c), Some(Cell::Text(_))))
}

pub fn read_csv(path: &Path) -> CliResult<CsvTable> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_csv(path, &text)
}

pub fn parse_csv(path: &Path, text: &str) -> CliResult<CsvTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut header = None;
    let mut width = None;
    let mut rows = Vec::new();
    let mut dropped = 0;
    for (j, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::csv(path, e.to_string()))?;
        let line = record.position().map_or(j as u64 + 1, |p| p.line());
        if j == 0 && looks_like_header(&record) {
            header = Some(record.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() > w {
            return Err(CliError::csv(path, format!("line {line}: expected {w} fields, found {}", record.len())));
        }
        let cells: Option<Vec<Cell>> = record.iter().map(parse_cell).collect();
        match cells {
            Some(cells) if cells.len() == w => rows.push((line, cells)),
            _ => dropped += 1,
        }
    }
    let width = width.ok_or_else(|| CliError::csv(path, "file is empty"))?;
    if rows.is_empty() {
        return Err(CliError::csv(path, format!("no complete rows ({dropped} dropped for missing values)")));
    }
    Ok(CsvTable { path: path.to_path_buf(), header, width, rows, dropped })
}

impl CsvTable {
    pub fn header(&self) -> Option<&[String]> {
        self.header.as_deref()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows removed because a cell was missing.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn resolve(&self, column: &ColumnRef) -> CliResult<usize> {
        match column {
            ColumnRef::Index(i) if *i < self.width => Ok(*i),
            ColumnRef::Index(i) => Err(CliError::csv(
                &self.path,
                format!("column index {i} out of range, the file has {} columns", self.width),
            )),
            ColumnRef::Name(name) => {
                let header = self.header.as_ref().ok_or_else(|| {
                    CliError::csv(&self.path, format!("column `{name}` requested but the file has no header"))
                })?;
                header.iter().position(|h| h == name).ok_or_else(|| {
                    CliError::csv(&self.path, format!("no column named `{name}`, available: {}", header.join(", ")))
                })
            }
        }
    }

    pub fn column_name(&self, k: usize) -> String {
        self.header.as_ref().map_or_else(|| format!("x{k}"), |h| h[k].clone())
    }

    /// Numeric matrix of the selected columns, all columns when `columns` is empty.
    pub fn matrix(&self, columns: &[ColumnRef]) -> CliResult<DataMatrix> {
        let idx = if columns.is_empty() {
            (0..self.width).collect()
        } else {
            columns.iter().map(|c| self.resolve(c)).collect::<CliResult<Vec<_>>>()?
        };
        self.matrix_at(&idx)
    }

    fn matrix_at(&self, idx: &[usize]) -> CliResult<DataMatrix> {
        let mut values = Vec::with_capacity(self.rows.len() * idx.len());
        for (line, cells) in &self.rows {
            for &k in idx {
                match &cells[k] {
                    Cell::Number(v) => values.push(*v),
                    Cell::Text(t) => {
                        return Err(CliError::csv(
                            &self.path,
                            format!("line {line}: column `{}` holds non-numeric value `{t}`", self.column_name(k)),
                        ))
                    }
                }
            }
        }
        Ok(DataMatrix::new(self.rows.len(), idx.len(), values)?)
    }

    /// Response column plus predictors, every other column by default.
    pub fn regression(
        &self,
        response: &ColumnRef,
        predictors: &[ColumnRef],
        standardize: bool,
    ) -> CliResult<(RegressionProblem, Vec<String>)> {
        let r = self.resolve(response)?;
        let idx: Vec<usize> = if predictors.is_empty() {
            (0..self.width).filter(|&k| k != r).collect()
        } else {
            predictors.iter().map(|c| self.resolve(c)).collect::<CliResult<_>>()?
        };
        if idx.contains(&r) {
            return Err(CliError::Usage("the response column is also listed as a predictor".into()));
        }
        if idx.is_empty() {
            return Err(CliError::Usage("no predictor columns".into()));
        }
        let y = self.matrix_at(&[r])?.values().to_vec();
        let x = self.matrix_at(&idx)?;
        let names = idx.iter().map(|&k| self.column_name(k)).collect();
        Ok((RegressionProblem::new(x, y, standardize)?, names))
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Sends `bytes` to `path`, or to stdout without one.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => match std::io::stdout().write_all(bytes) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
        },
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("models serialize");
    out.push(b'\n');
    out
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let file = File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

/// A table of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Shortest representation that reads back to the same double.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn matrix_table(data: &DataMatrix, names: &[String]) -> Table {
    let mut t = Table { header: names.to_vec(), rows: Vec::with_capacity(data.rows()) };
    for i in 0..data.rows() {
        t.rows.push(data.row(i).iter().map(|&v| num(v)).collect());
    }
    t
}
