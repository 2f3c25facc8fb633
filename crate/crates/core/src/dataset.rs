//! Dataset records and their line-delimited JSON format.
//!
//! A dataset file starts with a header line `{"schema_version": 1}` followed
//! by one record object per line:
//!
//! ```json
//! {"id": "...", "primitives": [{"class": 0, "scale": [..], "rotation": [..], "translation": [..]}],
//!  "points": [[x, y, z], ...]}
//! ```
//!
//! Instead of inline `points` a record may name a `points_file` relative to
//! the dataset file: either little-endian `f32` xyz triples (`.bin`) or ASCII
//! PLY (`.ply`). Files without the header line are accepted as version 1.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{assembly_surface, Assembly, PointCloud, Primitive};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// One shape: its id, ground-truth assembly and the surface cloud used as
/// the model condition. `labels` keeps the per-point source primitive when
/// the cloud was sampled from the assembly.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub assembly: Assembly,
    pub points: Option<PointCloud>,
    pub labels: Option<Vec<u32>>,
}

impl DatasetRecord {
    pub fn point_count(&self) -> usize {
        self.points.as_ref().map_or(0, PointCloud::len)
    }

    /// Condition cloud with the instance labels attached, when both exist.
    pub fn labeled_points(&self) -> Option<PointCloud> {
        let points = self.points.as_ref()?;
        let labels = self.labels.clone()?;
        PointCloud::with_labels(points.points().to_vec(), labels).ok()
    }
}

/// Samples the condition cloud of `assembly`.
pub fn build_record<R: Rng + ?Sized>(
    id: String,
    assembly: Assembly,
    n_points: usize,
    rng: &mut R,
) -> Result<DatasetRecord> {
    let (points, labels) = assembly_surface(&assembly, n_points, rng)?.into_parts();
    Ok(DatasetRecord {
        id,
        assembly,
        points: Some(PointCloud::new(points)?),
        labels,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u64,
}

impl From<&DatasetRecord> for RecordLine {
    fn from(r: &DatasetRecord) -> Self {
        RecordLine {
            id: r.id.clone(),
            primitives: r.assembly.primitives.clone(),
            points: r.points.as_ref().map(|p| p.points().to_vec()),
            points_file: None,
            labels: r.labels.clone(),
        }
    }
}

impl RecordLine {
    fn into_record(self, base: &Path) -> Result<DatasetRecord> {
        let points = match (self.points, self.points_file) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(
                    "record has both `points` and `points_file`".into(),
                ))
            }
            (Some(p), None) => Some(PointCloud::new(p)?),
            (None, Some(file)) => Some(read_point_file(&base.join(file))?),
            (None, None) => None,
        };
        if let (Some(p), Some(l)) = (&points, &self.labels) {
            if p.len() != l.len() {
                return Err(Error::InvalidInput(format!(
                    "{} labels for {} points",
                    l.len(),
                    p.len()
                )));
            }
        }
        Ok(DatasetRecord {
            id: self.id,
            assembly: Assembly::new(self.primitives),
            points,
            labels: self.labels,
        })
    }
}

/// Serializes one record as a single JSON line (no trailing newline).
pub fn record_to_json(record: &DatasetRecord) -> String {
    serde_json::to_string(&RecordLine::from(record)).expect("records always serialize")
}

pub fn write_dataset(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = serde_json::to_string(&Header {
        schema_version: SCHEMA_VERSION,
    })
    .expect("header serializes");
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(out, "{}", record_to_json(r)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a dataset file. Point files are resolved relative to its directory.
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut records = Vec::new();
    let mut seen_content = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
            if value.get("schema_version").is_some() {
                let header: Header =
                    serde_json::from_value(value).map_err(|e| parse_err(lineno, e.to_string()))?;
                if header.schema_version != SCHEMA_VERSION {
                    return Err(Error::Version {
                        found: header.schema_version,
                        expected: SCHEMA_VERSION,
                    });
                }
                continue;
            }
        }
        let record: RecordLine =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        records.push(
            record
                .into_record(&base)
                .map_err(|e| parse_err(lineno, e.to_string()))?,
        );
    }
    Ok(records)
}

/// Reads a single record stored as one (possibly pretty-printed) JSON object.
pub fn read_record_file(path: &Path) -> Result<DatasetRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record: RecordLine = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    record.into_record(&base)
}

pub fn write_record_file(record: &DatasetRecord, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&RecordLine::from(record)).expect("records always serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Loads every record under `dir`: `*.jsonl` dataset files and single-record
/// `*.json` files, in file-name order.
pub fn read_record_dir(dir: &Path) -> Result<Vec<DatasetRecord>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        match p.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => out.extend(read_dataset(&p)?),
            Some("json") => out.push(read_record_file(&p)?),
            _ => {}
        }
    }
    Ok(out)
}

/// Reads a point file by extension: `.bin` (LE f32 triples), `.ply` (ASCII),
/// or `.json` / `.jsonl` (the `points` of the first record).
pub fn read_point_file(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_f32_points(path),
        Some("ply") => read_ascii_ply(path),
        Some("json") => read_record_file(path)?
            .points
            .ok_or_else(|| Error::InvalidInput(format!("{} has no points", path.display()))),
        Some("jsonl") => read_dataset(path)?
            .into_iter()
            .next()
            .and_then(|r| r.points)
            .ok_or_else(|| Error::InvalidInput(format!("{} has no points", path.display()))),
        _ => Err(Error::InvalidInput(format!(
            "unsupported point file {}",
            path.display()
        ))),
    }
}

fn read_f32_points(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 12 != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{} bytes is not a whole number of f32 triples", bytes.len()),
        });
    }
    let points = bytes
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes([c[k], c[k + 1], c[k + 2], c[k + 3]]) as f64;
            [f(0), f(4), f(8)]
        })
        .collect();
    PointCloud::new(points)
}

pub fn write_f32_points(points: &[[f64; 3]], path: &Path) -> Result<()> {
    let bytes: Vec<u8> = points
        .iter()
        .flat_map(|p| p.iter().flat_map(|&v| (v as f32).to_le_bytes()))
        .collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_ascii_ply(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l.trim()) != Some("ply") {
        return Err(err(1, "missing `ply` magic"));
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut properties: Vec<String> = Vec::new();
    let mut header_end = None;
    for (i, line) in lines.by_ref() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(err(i + 1, "only ASCII PLY is supported"))
            }
            ["element", "vertex", n] => {
                vertex_count = Some(n.parse::<usize>().map_err(|_| err(i + 1, "bad vertex count"))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", .., name] if in_vertex => properties.push(name.to_string()),
            ["end_header"] => {
                header_end = Some(i + 1);
                break;
            }
            _ => {}
        }
    }
    let header_end = header_end.ok_or_else(|| err(0, "missing end_header"))?;
    let n = vertex_count.ok_or_else(|| err(header_end, "no vertex element"))?;
    let column = |axis: &str| {
        properties
            .iter()
            .position(|p| p == axis)
            .ok_or_else(|| err(header_end, &format!("vertex has no `{axis}` property")))
    };
    let (cx, cy, cz) = (column("x")?, column("y")?, column("z")?);
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines.take(n) {
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(i + 1, "non-numeric vertex value"))?;
        if values.len() < properties.len() {
            return Err(err(i + 1, "truncated vertex line"));
        }
        points.push([values[cx], values[cy], values[cz]]);
    }
    if points.len() != n {
        return Err(err(0, &format!("expected {n} vertices, found {}", points.len())));
    }
    PointCloud::new(points)
}

pub fn write_ascii_ply(points: &[[f64; 3]], path: &Path) -> Result<()> {
    let mut text = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        points.len()
    );
    for p in points {
        text.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
