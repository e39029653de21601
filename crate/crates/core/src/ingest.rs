//! Canonical trial logs and the column-mapped adapter for foreign datasets.
//!
//! The canonical format is JSON-lines: one [`Trial`] object per line, points
//! as `[x, y]`, `level_type` as `0`/`1`. An optional first line of the form
//! `{"dataset": {"source_tag": ..., "cleanup_history": [...]}}` carries
//! dataset provenance; it is written only when there is something to record,
//! so an empty collected dataset serializes to an empty file.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::trial::{CleanupRecord, Dataset, LevelType, Point2, SourceTag, Trial};

const TRIAL_FIELDS: [&str; 12] = [
    "session_id",
    "participant_id",
    "level_type",
    "level_label",
    "target_width_px",
    "start",
    "end",
    "target_center",
    "mt_s",
    "miss_clicks",
    "trajectory",
    "amplitude_px",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

/// A problem found while reading input. `line` is 1-based; 0 refers to the
/// input as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn warning(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    fn error(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            severity: Severity::Error,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// A parsed dataset plus everything noticed on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome {
    pub dataset: Dataset,
    pub diagnostics: Vec<Diagnostic>,
    /// Rows dropped by mapping filters; not counted as errors.
    pub filtered: usize,
}

impl ReadOutcome {
    /// Number of input records that were rejected.
    pub fn rejected(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct DatasetHeader {
    #[serde(default)]
    source_tag: SourceTag,
    #[serde(default)]
    cleanup_history: Vec<CleanupRecord>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    dataset: DatasetHeader,
}

fn parse_trial_line(line: &str) -> std::result::Result<(Trial, Vec<String>), String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    let Value::Object(map) = &value else {
        return Err("expected a JSON object".into());
    };
    let unknown: Vec<String> = map
        .keys()
        .filter(|k| !TRIAL_FIELDS.contains(&k.as_str()))
        .map(|k| format!("unknown field `{k}` ignored"))
        .collect();
    let trial: Trial = serde_json::from_value(value).map_err(|e| e.to_string())?;
    trial.validate().map_err(|e| e.to_string())?;
    Ok((trial, unknown))
}

/// Parses canonical JSON-lines text.
///
/// Invalid lines become error diagnostics and are skipped; with `strict`
/// the first invalid line aborts with [`Error::Parse`].
pub fn parse_canonical(text: &str, strict: bool) -> Result<ReadOutcome> {
    let mut header = DatasetHeader::default();
    let mut trials = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen_record = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !seen_record && line.starts_with("{\"dataset\"") {
            seen_record = true;
            match serde_json::from_str::<HeaderLine>(line) {
                Ok(h) => {
                    header = h.dataset;
                    continue;
                }
                Err(e) => {
                    let message = format!("malformed dataset header: {e}");
                    if strict {
                        return Err(Error::Parse { line: line_no, message });
                    }
                    diagnostics.push(Diagnostic::error(line_no, message));
                    continue;
                }
            }
        }
        seen_record = true;
        match parse_trial_line(line) {
            Ok((trial, warnings)) => {
                diagnostics.extend(warnings.into_iter().map(|w| Diagnostic::warning(line_no, w)));
                trials.push(trial);
            }
            Err(message) => {
                if strict {
                    return Err(Error::Parse { line: line_no, message });
                }
                diagnostics.push(Diagnostic::error(line_no, message));
            }
        }
    }
    if !seen_record {
        diagnostics.push(Diagnostic::warning(0, "input contains no trials"));
    }
    Ok(ReadOutcome {
        dataset: Dataset {
            trials,
            source_tag: header.source_tag,
            cleanup_history: header.cleanup_history,
        },
        diagnostics,
        filtered: 0,
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a canonical `.trials.jsonl` file. See [`parse_canonical`].
pub fn read_canonical(path: impl AsRef<Path>, strict: bool) -> Result<ReadOutcome> {
    parse_canonical(&read_text(path.as_ref())?, strict)
}

/// Serializes a dataset to canonical JSON-lines. Field order is fixed and
/// floats use the shortest representation that parses back exactly.
pub fn to_canonical_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    if dataset.source_tag != SourceTag::Collected || !dataset.cleanup_history.is_empty() {
        let header = HeaderLine {
            dataset: DatasetHeader {
                source_tag: dataset.source_tag,
                cleanup_history: dataset.cleanup_history.clone(),
            },
        };
        out.push_str(&serde_json::to_string(&header).expect("header serializes"));
        out.push('\n');
    }
    for trial in &dataset.trials {
        out.push_str(&serde_json::to_string(trial).expect("trial serializes"));
        out.push('\n');
    }
    out
}

pub fn write_canonical(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(to_canonical_string(dataset).as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}

/// Layout of a foreign input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    #[default]
    Delimited,
    Jsonl,
}

/// Where one canonical field comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FieldSource {
    Column {
        column: String,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    /// 0-based column position, for files without a header row.
    Index {
        index: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    Constant {
        constant: toml::Value,
    },
}

fn one() -> f64 {
    1.0
}

/// Keeps only rows whose `column` equals `equals` (string comparison after
/// trimming).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub equals: String,
}

/// Describes how to turn a foreign file into canonical trials.
///
/// Field keys are the canonical names, with points split into `_x`/`_y`
/// pairs: `start_x`, `start_y`, `end_x`, `end_y`, `target_x`, `target_y`.
/// A `trajectory` column must hold a JSON array of `[x, y]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    #[serde(default)]
    pub format: SourceFormat,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub skip_rows: usize,
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default)]
    pub source_tag: SourceTag,
    pub fields: BTreeMap<String, FieldSource>,
    #[serde(default, rename = "filter")]
    pub filters: Vec<RowFilter>,
}

fn default_delimiter() -> char {
    ','
}

fn default_true() -> bool {
    true
}

const REQUIRED_FIELDS: [&str; 8] = [
    "session_id",
    "participant_id",
    "level_type",
    "level_label",
    "target_width_px",
    "mt_s",
    "start_x",
    "start_y",
];

const OPTIONAL_FIELDS: [&str; 9] = [
    "end_x",
    "end_y",
    "target_x",
    "target_y",
    "miss_clicks",
    "trajectory",
    "amplitude_px",
    // accepted so a mapping can document a column it deliberately ignores
    "ignored",
    "notes",
];

impl ColumnMapping {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mapping: Self = toml::from_str(text).map_err(|e| Error::Mapping(e.to_string()))?;
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&read_text(path.as_ref())?)
    }

    pub fn validate(&self) -> Result<()> {
        for name in REQUIRED_FIELDS {
            if !self.fields.contains_key(name) {
                return Err(Error::Mapping(format!("unmapped required field: {name}")));
            }
        }
        for name in self.fields.keys() {
            if !REQUIRED_FIELDS.contains(&name.as_str()) && !OPTIONAL_FIELDS.contains(&name.as_str()) {
                return Err(Error::Mapping(format!("unknown canonical field: {name}")));
            }
        }
        for (a, b) in [("end_x", "end_y"), ("target_x", "target_y")] {
            if self.fields.contains_key(a) != self.fields.contains_key(b) {
                return Err(Error::Mapping(format!("{a} and {b} must be mapped together")));
            }
        }
        if self.format == SourceFormat::Jsonl && self.fields.values().any(|s| matches!(s, FieldSource::Index { .. })) {
            return Err(Error::Mapping("index sources need delimited input".into()));
        }
        Ok(())
    }

    fn referenced_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self
            .fields
            .values()
            .filter_map(|s| match s {
                FieldSource::Column { column, .. } => Some(column.as_str()),
                _ => None,
            })
            .chain(self.filters.iter().map(|f| f.column.as_str()))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// One input row, addressable by column name or position.
struct Row<'a> {
    by_name: &'a HashMap<String, usize>,
    cells: Vec<String>,
}

impl Row<'_> {
    fn cell(&self, column: &str) -> Option<&str> {
        self.by_name
            .get(column)
            .and_then(|&i| self.cells.get(i))
            .map(|s| s.trim())
    }

    fn at(&self, index: usize) -> Option<&str> {
        self.cells.get(index).map(|s| s.trim())
    }
}

fn constant_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Raw text and affine transform of a field in one row; `None` when the
/// field is unmapped or the cell is empty.
fn raw_field(
    mapping: &ColumnMapping,
    row: &Row<'_>,
    name: &str,
) -> std::result::Result<Option<(String, f64, f64)>, String> {
    let Some(source) = mapping.fields.get(name) else {
        return Ok(None);
    };
    let (text, scale, offset) = match source {
        FieldSource::Column { column, scale, offset } => match row.cell(column) {
            Some(t) => (t.to_string(), *scale, *offset),
            None => return Err(format!("column `{column}` missing from row")),
        },
        FieldSource::Index { index, scale, offset } => match row.at(*index) {
            Some(t) => (t.to_string(), *scale, *offset),
            None => return Err(format!("column {index} missing from row")),
        },
        FieldSource::Constant { constant } => (constant_text(constant), 1.0, 0.0),
    };
    Ok(if text.is_empty() {
        None
    } else {
        Some((text, scale, offset))
    })
}

fn number(mapping: &ColumnMapping, row: &Row<'_>, name: &str) -> std::result::Result<Option<f64>, String> {
    match raw_field(mapping, row, name)? {
        None => Ok(None),
        Some((text, scale, offset)) => {
            let v: f64 = text.parse().map_err(|_| format!("{name}: not a number: {text:?}"))?;
            if !v.is_finite() {
                return Err(format!("{name}: non-finite value {text:?}"));
            }
            Ok(Some(v * scale + offset))
        }
    }
}

fn required<T>(value: Option<T>, name: &str) -> std::result::Result<T, String> {
    value.ok_or_else(|| format!("{name}: empty cell"))
}

fn text(mapping: &ColumnMapping, row: &Row<'_>, name: &str) -> std::result::Result<Option<String>, String> {
    Ok(raw_field(mapping, row, name)?.map(|(t, _, _)| t))
}

fn level_type(s: &str) -> std::result::Result<LevelType, String> {
    match s.to_ascii_lowercase().as_str() {
        "0" | "homogeneous" | "homo" => Ok(LevelType::Homogeneous),
        "1" | "heterogeneous" | "hetero" => Ok(LevelType::Heterogeneous),
        _ => Err(format!("level_type: unrecognized value {s:?}")),
    }
}

fn point(mapping: &ColumnMapping, row: &Row<'_>, prefix: &str) -> std::result::Result<Option<Point2>, String> {
    let x = number(mapping, row, &format!("{prefix}_x"))?;
    let y = number(mapping, row, &format!("{prefix}_y"))?;
    match (x, y) {
        (Some(x), Some(y)) => Ok(Some(Point2::new(x, y))),
        (None, None) => Ok(None),
        _ => Err(format!("{prefix}: only one coordinate present")),
    }
}

fn build_trial(mapping: &ColumnMapping, row: &Row<'_>) -> std::result::Result<Trial, String> {
    let start = required(point(mapping, row, "start")?, "start")?;
    let trajectory = match text(mapping, row, "trajectory")? {
        None => None,
        Some(t) => Some(serde_json::from_str::<Vec<Point2>>(&t).map_err(|e| format!("trajectory: {e}"))?),
    };
    let miss_clicks = match number(mapping, row, "miss_clicks")? {
        None => 0,
        Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => v as u32,
        Some(v) => return Err(format!("miss_clicks: not a count: {v}")),
    };
    let trial = Trial {
        session_id: required(text(mapping, row, "session_id")?, "session_id")?,
        participant_id: required(text(mapping, row, "participant_id")?, "participant_id")?,
        level_type: level_type(&required(text(mapping, row, "level_type")?, "level_type")?)?,
        level_label: required(text(mapping, row, "level_label")?, "level_label")?,
        target_width_px: required(number(mapping, row, "target_width_px")?, "target_width_px")?,
        start,
        end: point(mapping, row, "end")?,
        target_center: point(mapping, row, "target")?,
        movement_time_s: required(number(mapping, row, "mt_s")?, "mt_s")?,
        miss_clicks,
        trajectory,
        amplitude_px: number(mapping, row, "amplitude_px")?,
    };
    trial.validate().map_err(|e| e.to_string())?;
    if trial.trajectory.is_none() && trial.amplitude_px.is_none() && trial.end.is_none() {
        return Err("no trajectory, amplitude_px or end coordinate to derive amplitude from".into());
    }
    Ok(trial)
}

/// Data rows, each with its 1-based physical line number.
type NumberedRows = Vec<(usize, Vec<String>)>;

/// Header and rows of the foreign file.
fn foreign_rows(text: &str, mapping: &ColumnMapping) -> Result<(Vec<String>, NumberedRows)> {
    let mut offset = 0;
    for _ in 0..mapping.skip_rows {
        match text[offset..].find('\n') {
            Some(i) => offset += i + 1,
            None => offset = text.len(),
        }
    }
    let body = &text[offset..];
    match mapping.format {
        SourceFormat::Delimited => {
            if !mapping.delimiter.is_ascii() {
                return Err(Error::Mapping("delimiter must be a single ASCII character".into()));
            }
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(mapping.delimiter as u8)
                .has_headers(false)
                .flexible(true)
                .from_reader(body.as_bytes());
            let mut header = Vec::new();
            let mut rows = Vec::new();
            for (i, record) in reader.records().enumerate() {
                let record = record.map_err(|e| Error::Parse {
                    line: mapping.skip_rows + e.position().map_or(0, |p| p.line() as usize),
                    message: e.to_string(),
                })?;
                let line = mapping.skip_rows + record.position().map_or(i + 1, |p| p.line() as usize);
                let cells: Vec<String> = record.iter().map(str::to_string).collect();
                if i == 0 && mapping.header {
                    header = cells.into_iter().map(|c| c.trim().to_string()).collect();
                } else {
                    rows.push((line, cells));
                }
            }
            Ok((header, rows))
        }
        SourceFormat::Jsonl => {
            let columns = mapping.referenced_columns();
            let mut rows = Vec::new();
            for (i, raw) in body.lines().enumerate() {
                let line = mapping.skip_rows + i + 1;
                if raw.trim().is_empty() {
                    continue;
                }
                let cells = match serde_json::from_str::<serde_json::Map<String, Value>>(raw) {
                    Ok(obj) => columns
                        .iter()
                        .map(|c| match obj.get(*c) {
                            None | Some(Value::Null) => String::new(),
                            Some(Value::String(s)) => s.clone(),
                            Some(other) => other.to_string(),
                        })
                        .collect(),
                    // surfaces as a per-row diagnostic below
                    Err(_) => Vec::new(),
                };
                rows.push((line, cells));
            }
            Ok((columns.into_iter().map(str::to_string).collect(), rows))
        }
    }
}

/// Applies `mapping` to foreign text. Deterministic in `(text, mapping)`.
pub fn convert_text(text: &str, mapping: &ColumnMapping, strict: bool) -> Result<ReadOutcome> {
    mapping.validate()?;
    let (header, rows) = foreign_rows(text, mapping)?;
    let by_name: HashMap<String, usize> = header.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    if mapping.format == SourceFormat::Delimited && !rows.is_empty() {
        for column in mapping.referenced_columns() {
            if !by_name.contains_key(column) {
                return Err(Error::Mapping(format!("mapped column `{column}` not found in input")));
            }
        }
    }
    let mut trials = Vec::new();
    let mut diagnostics = Vec::new();
    let mut filtered = 0;
    for (line, cells) in rows {
        if mapping.format == SourceFormat::Jsonl && cells.is_empty() {
            let message = "malformed JSON object".to_string();
            if strict {
                return Err(Error::Parse { line, message });
            }
            diagnostics.push(Diagnostic::error(line, message));
            continue;
        }
        let row = Row {
            by_name: &by_name,
            cells,
        };
        if !mapping
            .filters
            .iter()
            .all(|f| row.cell(&f.column) == Some(f.equals.trim()))
        {
            filtered += 1;
            continue;
        }
        match build_trial(mapping, &row) {
            Ok(t) => trials.push(t),
            Err(message) => {
                if strict {
                    return Err(Error::Parse { line, message });
                }
                diagnostics.push(Diagnostic::error(line, message));
            }
        }
    }
    if trials.is_empty() && diagnostics.is_empty() {
        diagnostics.push(Diagnostic::warning(0, "input contains no trials"));
    }
    Ok(ReadOutcome {
        dataset: Dataset::new(trials, mapping.source_tag),
        diagnostics,
        filtered,
    })
}

/// Reads a foreign file through `mapping`. See [`convert_text`].
pub fn convert(path: impl AsRef<Path>, mapping: &ColumnMapping, strict: bool) -> Result<ReadOutcome> {
    convert_text(&read_text(path.as_ref())?, mapping, strict)
}
