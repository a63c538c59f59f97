//! Dataset CSV: five meta columns, the 48 features, then the three targets.
//! Floats carry 9 significant digits; an empty field is a missing value.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use reflow_shift::features::{feature_names, feature_schema, ComponentKind, RecordMeta, SizeClass, SCHEMA_VERSION};
use reflow_shift::preprocess::{Dataset, RawRow, SampleMeta};
use reflow_shift::Target;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const META_COLUMNS: [&str; 5] = ["board_id", "combination_id", "replicate_id", "component_type", "size_class"];

pub fn header(with_targets: bool) -> Vec<String> {
    let mut h: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend(feature_names().iter().map(|s| s.to_string()));
    if with_targets {
        h.extend(Target::ALL.iter().map(|t| t.name().to_string()));
    }
    h
}

pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Meta and feature cells of one row, then its target cells.
pub fn row_cells(row: &RawRow<f64>) -> (Vec<String>, Vec<String>) {
    let m = &row.meta;
    let mut cells = vec![
        m.record.board_id.to_string(),
        m.record.combination_id.to_string(),
        m.record.replicate_id.to_string(),
        m.kind.letter().to_string(),
        m.size.label().to_string(),
    ];
    cells.extend(row.features.iter().map(|v| format_opt(*v)));
    (cells, row.targets.iter().map(|v| format_opt(*v)).collect())
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_rows(path: &Path, rows: &[RawRow<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header(true)).map_err(|e| csv_err(path, e))?;
    for r in rows {
        let (mut cells, targets) = row_cells(r);
        cells.extend(targets);
        w.write_record(&cells).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn dataset_rows(d: &Dataset<f64>) -> Vec<RawRow<f64>> {
    d.rows
        .iter()
        .map(|s| RawRow {
            meta: s.meta,
            features: s.features.iter().map(|&v| Some(v)).collect(),
            targets: s.targets.map(Some),
        })
        .collect()
}

pub fn write_dataset(path: &Path, d: &Dataset<f64>) -> CliResult<()> {
    write_rows(path, &dataset_rows(d))
}

/// Rows of a dataset CSV. The target columns may be absent altogether, in
/// which case every target is missing.
pub fn read_rows(path: &Path) -> CliResult<(Vec<RawRow<f64>>, bool)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let got: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(|s| s.to_string()).collect();
    let with_targets = if got == header(true) {
        true
    } else if got == header(false) {
        false
    } else {
        return Err(CliError::SchemaMismatch(format!(
            "{}: header does not match the {SCHEMA_VERSION} column layout",
            path.display()
        )));
    };
    let names = header(true);
    let n_feat = feature_names().len();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let fail = |col: usize, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            column: names[col].clone(),
            message,
        };
        let int = |col: usize| -> CliResult<u32> {
            rec[col].trim().parse().map_err(|_| fail(col, format!("expected an integer, got `{}`", &rec[col])))
        };
        let num = |col: usize| -> CliResult<Option<f64>> {
            let s = rec[col].trim();
            if s.is_empty() {
                return Ok(None);
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(fail(col, format!("expected a finite number, got `{s}`"))),
            }
        };
        let kind = ComponentKind::from_letter(rec[3].trim()).ok_or_else(|| fail(3, format!("unknown component type `{}`", &rec[3])))?;
        let size = SizeClass::from_label(rec[4].trim()).ok_or_else(|| fail(4, format!("unknown size class `{}`", &rec[4])))?;
        let meta = SampleMeta {
            record: RecordMeta {
                board_id: int(0)?,
                combination_id: int(1)?,
                replicate_id: int(2)?,
            },
            kind,
            size,
        };
        let features = (0..n_feat).map(|j| num(5 + j)).collect::<CliResult<Vec<_>>>()?;
        let targets = if with_targets {
            let t0 = 5 + n_feat;
            [num(t0)?, num(t0 + 1)?, num(t0 + 2)?]
        } else {
            [None; 3]
        };
        rows.push(RawRow { meta, features, targets });
    }
    Ok((rows, with_targets))
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnInfo {
    pub name: String,
    pub role: &'static str,
    pub unit: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<&'static str>,
    pub definition: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemaFile {
    pub schema_version: &'static str,
    pub float_format: &'static str,
    pub missing_value: &'static str,
    pub columns: Vec<ColumnInfo>,
}

pub fn schema() -> SchemaFile {
    let meta = [
        ("board_id", "", "board identifier"),
        ("combination_id", "", "design point, 1-based"),
        ("replicate_id", "", "replicate within design point and type, 1-based"),
        ("component_type", "", "R (resistor) or C (capacitor)"),
        ("size_class", "", "body size code: 1005, 0603 or 0402"),
    ];
    let mut columns: Vec<ColumnInfo> = meta
        .iter()
        .map(|&(name, unit, definition)| ColumnInfo {
            name: name.to_string(),
            role: "meta",
            unit,
            category: None,
            definition,
        })
        .collect();
    columns.extend(feature_schema().iter().map(|f| ColumnInfo {
        name: f.name.to_string(),
        role: "feature",
        unit: f.unit,
        category: Some(f.category.label()),
        definition: f.definition,
    }));
    let targets = [
        "x shift of the component center after reflow minus before",
        "y shift of the component center after reflow minus before",
        "rotation after reflow minus before",
    ];
    columns.extend(Target::ALL.iter().zip(targets).map(|(t, d)| ColumnInfo {
        name: t.name().to_string(),
        role: "target",
        unit: t.unit(),
        category: None,
        definition: d,
    }));
    SchemaFile {
        schema_version: SCHEMA_VERSION,
        float_format: "scientific, 9 significant digits",
        missing_value: "empty field",
        columns,
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(s.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `data.csv` → `data.csv.schema.json`.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".schema.json");
    s.into()
}
