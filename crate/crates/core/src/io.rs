//! Run configuration records and artifact writers.
//!
//! Data files are deterministic functions of their inputs: reals are written
//! at 17 significant digits, JSON objects keep insertion order, and the only
//! wall-clock value lives in [`RunMetadata`]. Every writer stages its output
//! in a sibling file and renames it into place, so a failed write leaves no
//! partial artifact behind.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{invalid, Error, Result};

/// Value type of a table column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ColumnKind {
    /// One `f64` column.
    Real,
    /// Two `f64` columns, `<name>_re` and `<name>_im`.
    Complex,
    /// One `i64` column.
    Integer,
    /// One free-text column.
    Text,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Real value.
    Real(f64),
    /// Complex value.
    Complex(Complex64),
    /// Integer value.
    Integer(i64),
    /// Text value.
    Text(String),
}

impl Cell {
    fn kind(&self) -> ColumnKind {
        match self {
            Cell::Real(_) => ColumnKind::Real,
            Cell::Complex(_) => ColumnKind::Complex,
            Cell::Integer(_) => ColumnKind::Integer,
            Cell::Text(_) => ColumnKind::Text,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Complex64> for Cell {
    fn from(z: Complex64) -> Self {
        Cell::Complex(z)
    }
}

impl From<i64> for Cell {
    fn from(k: i64) -> Self {
        Cell::Integer(k)
    }
}

impl From<u64> for Cell {
    fn from(k: u64) -> Self {
        Cell::Integer(k as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

/// Typed table; every row matches the column kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<(String, ColumnKind)>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Empty table with the given columns.
    pub fn new<S: AsRef<str>>(columns: &[(S, ColumnKind)]) -> Result<Self> {
        if columns.is_empty() {
            return Err(invalid("columns", "a table needs at least one column"));
        }
        let columns: Vec<(String, ColumnKind)> = columns.iter().map(|(n, k)| (n.as_ref().to_owned(), *k)).collect();
        let table = Self {
            columns,
            rows: Vec::new(),
        };
        let header = table.header();
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
            return Err(invalid("columns", format!("duplicate header `{dup}`")));
        }
        Ok(table)
    }

    /// Appends a row after checking its arity and cell kinds.
    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(invalid(
                "row",
                format!("expected {} cells, got {}", self.columns.len(), row.len()),
            ));
        }
        for ((name, kind), cell) in self.columns.iter().zip(&row) {
            if cell.kind() != *kind {
                return Err(invalid("row", format!("column `{name}` holds {kind:?}, got {:?}", cell.kind())));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Logical columns.
    pub fn columns(&self) -> &[(String, ColumnKind)] {
        &self.columns
    }

    /// Rows in insertion order.
    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Whether the table has no rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV header; complex columns expand to `_re`/`_im` pairs.
    pub fn header(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, kind) in &self.columns {
            if *kind == ColumnKind::Complex {
                out.push(format!("{name}_re"));
                out.push(format!("{name}_im"));
            } else {
                out.push(name.clone());
            }
        }
        out
    }

    fn record(row: &[Cell]) -> Vec<String> {
        let mut out = Vec::with_capacity(row.len() + 2);
        for cell in row {
            match cell {
                Cell::Real(x) => out.push(format_real(*x)),
                Cell::Complex(z) => {
                    out.push(format_real(z.re));
                    out.push(format_real(z.im));
                }
                Cell::Integer(k) => out.push(k.to_string()),
                Cell::Text(s) => out.push(s.clone()),
            }
        }
        out
    }
}

/// Formats a real with 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a staging file that is renamed into place on success and
/// removed on failure.
fn write_staged<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| invalid("path", format!("`{}` names no file", path.display())))?;
    let mut staged_name = std::ffi::OsString::from(".");
    staged_name.push(name);
    staged_name.push(".partial");
    let staged = path.with_file_name(staged_name);
    let result = (|| {
        let file = File::create(&staged).map_err(|e| io_error(path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        let file = w.into_inner().map_err(|e| io_error(path, e.into_error()))?;
        file.sync_all().map_err(|e| io_error(path, e))?;
        fs::rename(&staged, path).map_err(|e| io_error(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&staged);
    }
    result
}

/// Writes `table` as CSV with a header row.
pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    write_staged(path, |w| {
        let mut csv = csv::WriterBuilder::new().from_writer(w);
        let ser = |e: csv::Error| Error::Serialize {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        csv.write_record(table.header()).map_err(ser)?;
        for row in &table.rows {
            csv.write_record(Table::record(row)).map_err(ser)?;
        }
        csv.flush().map_err(|e| io_error(path, e))
    })
}

/// Reads a CSV written by [`write_csv`] back into a table with `columns`.
pub fn read_csv<S: AsRef<str>>(path: &Path, columns: &[(S, ColumnKind)]) -> Result<Table> {
    let mut table = Table::new(columns)?;
    let ser = |message: String| Error::Serialize {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_error(path, io),
        other => ser(format!("{other:?}")),
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| ser(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != table.header() {
        return Err(ser(format!("header {header:?} does not match {:?}", table.header())));
    }
    let kinds: Vec<ColumnKind> = table.columns.iter().map(|c| c.1).collect();
    for record in reader.records() {
        let record = record.map_err(|e| ser(e.to_string()))?;
        let mut fields = record.iter();
        let mut next = || fields.next().ok_or_else(|| ser("short record".into()));
        let real = |s: &str| s.parse::<f64>().map_err(|e| ser(format!("`{s}`: {e}")));
        let mut row = Vec::with_capacity(kinds.len());
        for kind in &kinds {
            row.push(match kind {
                ColumnKind::Real => Cell::Real(real(next()?)?),
                ColumnKind::Complex => {
                    let re = real(next()?)?;
                    Cell::Complex(Complex64::new(re, real(next()?)?))
                }
                ColumnKind::Integer => {
                    let s = next()?;
                    Cell::Integer(s.parse().map_err(|e| ser(format!("`{s}`: {e}")))?)
                }
                ColumnKind::Text => Cell::Text(next()?.to_owned()),
            });
        }
        table.push_row(row)?;
    }
    Ok(table)
}

/// Writes `value` as a pretty-printed JSON object in field order.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let ser = |message: String| Error::Serialize {
        path: path.to_path_buf(),
        message,
    };
    let value = serde_json::to_value(value).map_err(|e| ser(e.to_string()))?;
    if !value.is_object() {
        return Err(ser("top-level JSON value must be an object".into()));
    }
    let text = serde_json::to_string_pretty(&value).map_err(|e| ser(e.to_string()))?;
    write_staged(path, |w| {
        w.write_all(text.as_bytes()).map_err(|e| io_error(path, e))?;
        w.write_all(b"\n").map_err(|e| io_error(path, e))
    })
}

/// Renders `points` as one polyline in the unit `viewBox`, aspect preserved,
/// `y` pointing up, without axes.
pub fn svg_polyline(points: &[[f64; 2]]) -> Result<String> {
    if points.len() < 2 {
        return Err(invalid("points", "a polyline needs at least two points"));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("points", "all coordinates must be finite"));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if span > 0.0 { 0.9 / span } else { 0.0 };
    // Center the bounding box inside a 5% margin.
    let offset = [0.5 - 0.5 * (hi[0] - lo[0]) * scale, 0.5 - 0.5 * (hi[1] - lo[1]) * scale];
    let coords: Vec<String> = points
        .iter()
        .map(|p| {
            let x = offset[0] + (p[0] - lo[0]) * scale;
            let y = 1.0 - (offset[1] + (p[1] - lo[1]) * scale);
            format!("{x:.6},{y:.6}")
        })
        .collect();
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\">\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.002\" points=\"{}\"/>\n\
         </svg>\n",
        coords.join(" ")
    ))
}

/// Writes [`svg_polyline`] of `points` to `path`.
pub fn write_svg_polyline(points: &[[f64; 2]], path: &Path) -> Result<()> {
    let text = svg_polyline(points)?;
    write_staged(path, |w| w.write_all(text.as_bytes()).map_err(|e| io_error(path, e)))
}

fn ordered_pairs<S: Serializer>(pairs: &[(String, String)], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(pairs.len()))?;
    for (k, v) in pairs {
        map.serialize_entry(k, v)?;
    }
    map.end()
}

/// Parsed command line: group, verb and the parameters as typed by the user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    /// Command group, for example `theta`.
    pub group: String,
    /// Verb within the group, for example `eval`.
    pub verb: String,
    /// Every parameter with its verbatim value, defaults included.
    #[serde(serialize_with = "ordered_pairs")]
    pub parameters: Vec<(String, String)>,
    /// Directory receiving the artifacts.
    pub output_dir: PathBuf,
    /// Whether an SVG figure is emitted as well.
    pub svg: bool,
}

impl RunConfig {
    /// Artifact path `<output_dir>/<group>_<verb><suffix>`.
    pub fn artifact(&self, suffix: &str) -> PathBuf {
        self.output_dir.join(format!("{}_{}{}", self.group, self.verb, suffix))
    }
}

/// Companion record of every data file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    /// `<group> <verb>`.
    pub command: String,
    /// Parameters echoed verbatim.
    #[serde(serialize_with = "ordered_pairs")]
    pub parameters: Vec<(String, String)>,
    /// Crate version of the build.
    pub version: String,
    /// Seconds since the Unix epoch at completion.
    pub timestamp: u64,
    /// File names of the data written by the run.
    pub data_files: Vec<String>,
    /// Tolerances and accuracy figures actually achieved.
    pub tolerances: Map<String, Value>,
}

impl RunMetadata {
    /// Metadata echoing `config`, stamped now.
    pub fn new(config: &RunConfig) -> Self {
        Self {
            command: format!("{} {}", config.group, config.verb),
            parameters: config.parameters.clone(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            data_files: Vec::new(),
            tolerances: Map::new(),
        }
    }

    /// Records an achieved tolerance or accuracy figure.
    pub fn tolerance<T: Serialize>(&mut self, key: &str, value: T) -> &mut Self {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.tolerances.insert(key.to_owned(), value);
        self
    }

    /// Records a data file by its file name.
    pub fn data_file(&mut self, path: &Path) -> &mut Self {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.data_files.push(name);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("riemannlab-io-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn columns() -> Vec<(&'static str, ColumnKind)> {
        vec![
            ("t", ColumnKind::Real),
            ("value", ColumnKind::Complex),
            ("k", ColumnKind::Integer),
            ("tag", ColumnKind::Text),
        ]
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = scratch("round");
        let mut table = Table::new(&columns()).unwrap();
        let awkward = [0.1, 1.0 / 3.0, -0.0, 5e-324, f64::MAX, std::f64::consts::PI, 1e-300];
        for (i, &x) in awkward.iter().enumerate() {
            let z = Complex64::new(x.sqrt().max(-x), -x * 7.0);
            table.push_row(vec![x.into(), z.into(), (i as i64 - 3).into(), "a,b \"q\"".into()]).unwrap();
        }
        let path = dir.join("t.csv");
        write_csv(&table, &path).unwrap();
        let back = read_csv(&path, &columns()).unwrap();
        for (a, b) in table.rows().iter().zip(back.rows()) {
            for (x, y) in a.iter().zip(b) {
                match (x, y) {
                    (Cell::Real(x), Cell::Real(y)) => assert_eq!(x.to_bits(), y.to_bits()),
                    (Cell::Complex(x), Cell::Complex(y)) => {
                        assert_eq!(x.re.to_bits(), y.re.to_bits());
                        assert_eq!(x.im.to_bits(), y.im.to_bits());
                    }
                    _ => assert_eq!(x, y),
                }
            }
        }
        assert_eq!(back.len(), table.len());
    }

    #[test]
    fn empty_table_writes_header_only() {
        let dir = scratch("empty");
        let table = Table::new(&columns()).unwrap();
        let path = dir.join("e.csv");
        write_csv(&table, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "t,value_re,value_im,k,tag\n");
    }

    #[test]
    fn rows_are_type_checked() {
        let mut table = Table::new(&[("x", ColumnKind::Real)]).unwrap();
        assert!(table.push_row(vec![Cell::Integer(1)]).is_err());
        assert!(table.push_row(vec![]).is_err());
        assert!(Table::new(&[("v", ColumnKind::Complex), ("v_re", ColumnKind::Real)]).is_err());
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = scratch("fail");
        let path = dir.join("missing").join("x.csv");
        let err = write_csv(&Table::new(&columns()).unwrap(), &path).unwrap_err();
        assert!(matches!(err, Error::Io { ref path, .. } if path.ends_with("missing/x.csv")));
        // A JSON value that is not an object is rejected before touching disk.
        let path = dir.join("scalar.json");
        assert!(write_json(&3.0, &path).is_err());
        assert!(!path.exists());
        let leftovers: Vec<_> = fs::read_dir(&dir).unwrap().flatten().map(|e| e.file_name()).collect();
        assert!(leftovers.iter().all(|n| !n.to_string_lossy().ends_with(".partial")));
    }

    #[test]
    fn json_keeps_field_order() {
        let dir = scratch("json");
        let config = RunConfig {
            group: "theta".into(),
            verb: "eval".into(),
            parameters: vec![("zeta".into(), "1".into()), ("alpha".into(), "2/3".into())],
            output_dir: dir.clone(),
            svg: false,
        };
        let mut meta = RunMetadata::new(&config);
        meta.tolerance("tail_bound", 1e-9);
        let path = config.artifact(".meta.json");
        write_json(&meta, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let order = ["command", "parameters", "zeta", "alpha", "version", "timestamp", "tolerances"];
        let pos: Vec<usize> = order.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert!(text.contains("\"2/3\""));
    }

    #[test]
    fn svg_is_one_polyline_in_unit_box() {
        let pts: Vec<[f64; 2]> = (0..100).map(|k| [(k as f64).cos() * 3.0, (k as f64).sin() + 10.0]).collect();
        let svg = svg_polyline(&pts).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("viewBox=\"0 0 1 1\""));
        let start = svg.find("points=\"").unwrap() + 8;
        let body = &svg[start..start + svg[start..].find('"').unwrap()];
        for pair in body.split(' ') {
            for v in pair.split(',') {
                let v: f64 = v.parse().unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert!(svg_polyline(&pts[..1]).is_err());
    }
}
