use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnMeta, Table};
use crate::error::{Error, Result};

pub const TABLE_META_VERSION: u32 = 1;

/// JSON sidecar describing column kinds and categorical code maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub format_version: u32,
    pub columns: Vec<ColumnMeta>,
}

impl TableMeta {
    pub fn of(table: &Table) -> Self {
        TableMeta {
            format_version: TABLE_META_VERSION,
            columns: table.columns().to_vec(),
        }
    }
}

/// `data.csv` → `data.meta.json`
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn load_csv(path: &Path, kind_overrides: &HashMap<String, ColumnKind>) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, kind_overrides, None)
}

/// Loads a CSV, honouring its sidecar when one sits next to it.
pub fn load_csv_with_sidecar(path: &Path) -> Result<Table> {
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: TableMeta = serde_json::from_str(&text)?;
        if meta.format_version != TABLE_META_VERSION {
            return Err(Error::FormatVersion {
                found: meta.format_version,
                expected: TABLE_META_VERSION,
            });
        }
        Some(meta)
    } else {
        None
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &HashMap::new(), meta.as_ref())
}

/// Parses CSV text. Column kinds come from, in priority order, the override
/// map, the sidecar metadata, then inference from the cells.
pub fn read_csv<R: Read>(
    reader: R,
    kind_overrides: &HashMap<String, ColumnKind>,
    meta: Option<&TableMeta>,
) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let n_cols = header.len();

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); n_cols];
    let mut n_rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != n_cols {
            return Err(Error::Parse {
                row: i + 1,
                column: None,
                message: format!("expected {n_cols} cells, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            raw[c].push(cell.trim().to_string());
        }
        n_rows += 1;
    }

    let mut columns = Vec::with_capacity(n_cols);
    let mut col_values: Vec<Vec<Option<f64>>> = Vec::with_capacity(n_cols);
    for (c, name) in header.iter().enumerate() {
        let known = meta.and_then(|m| m.columns.iter().find(|col| &col.name == name));
        let kind = kind_overrides
            .get(name)
            .copied()
            .or(known.map(|k| k.kind))
            .unwrap_or_else(|| infer_kind(&raw[c]));
        let mut categories = known
            .filter(|k| k.kind == ColumnKind::Categorical)
            .map(|k| k.categories.clone())
            .unwrap_or_default();
        let cells = parse_column(name, kind, &raw[c], &mut categories)?;
        columns.push(ColumnMeta {
            name: name.clone(),
            kind,
            categories,
        });
        col_values.push(cells);
    }

    let mut values = Vec::with_capacity(n_rows * n_cols);
    let mut missing = Vec::with_capacity(n_rows * n_cols);
    for r in 0..n_rows {
        for cells in &col_values {
            values.push(cells[r].unwrap_or(f64::NAN));
            missing.push(cells[r].is_none());
        }
    }
    Table::new(columns, n_rows, values, missing)
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

fn infer_kind(cells: &[String]) -> ColumnKind {
    let present: Vec<&String> = cells.iter().filter(|s| !s.is_empty()).collect();
    if present.iter().all(|s| parse_number(s).is_some()) {
        ColumnKind::Continuous
    } else if present.iter().all(|s| parse_bool(s).is_some()) {
        ColumnKind::Boolean
    } else {
        ColumnKind::Categorical
    }
}

fn parse_column(
    name: &str,
    kind: ColumnKind,
    cells: &[String],
    categories: &mut Vec<String>,
) -> Result<Vec<Option<f64>>> {
    let mut codes: HashMap<String, usize> = categories
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    cells
        .iter()
        .enumerate()
        .map(|(r, s)| {
            if s.is_empty() {
                return Ok(None);
            }
            let bad = |what: &str| Error::Parse {
                row: r + 1,
                column: Some(name.to_string()),
                message: format!("cannot parse '{s}' as {what}"),
            };
            match kind {
                ColumnKind::Continuous => parse_number(s).map(Some).ok_or_else(|| bad("a number")),
                ColumnKind::Boolean => parse_bool(s)
                    .or_else(|| match parse_number(s) {
                        Some(v) if v == 0.0 => Some(false),
                        Some(v) if v == 1.0 => Some(true),
                        _ => None,
                    })
                    .map(|b| Some(if b { 1.0 } else { 0.0 }))
                    .ok_or_else(|| bad("a boolean")),
                ColumnKind::Categorical => {
                    let next = codes.len();
                    let code = *codes.entry(s.clone()).or_insert_with(|| {
                        categories.push(s.clone());
                        next
                    });
                    Ok(Some(code as f64))
                }
            }
        })
        .collect()
}

/// Writes the table as CSV plus its JSON sidecar.
pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(table.column_names())?;
    for r in 0..table.n_rows() {
        let row: Vec<String> = (0..table.n_cols())
            .map(|c| table.token(r, c).unwrap_or_default())
            .collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let side = sidecar_path(path);
    let mut f = File::create(&side).map_err(|e| Error::io(&side, e))?;
    let text = serde_json::to_string_pretty(&TableMeta::of(table))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Table> {
        read_csv(text.as_bytes(), &HashMap::new(), None)
    }

    #[test]
    fn clean_numeric_rows() {
        let t = parse("a,b,c\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (2, 3));
        assert!(t.missing_mask().iter().all(|&m| !m));
        assert_eq!(t.get(1, 2), Some(6.0));
    }

    #[test]
    fn empty_cell_is_missing() {
        let t = parse("id,hba1c,sbp\n1,,120\n2,5.4,130\n").unwrap();
        let mask: Vec<bool> = t.missing_mask().to_vec();
        assert_eq!(mask, vec![false, true, false, false, false, false]);
    }

    #[test]
    fn ragged_row_names_row_number() {
        let err = parse("a,b,c\n1,2,3\n4,5,6\n7,8\n").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cell_in_declared_continuous_column() {
        let mut kinds = HashMap::new();
        kinds.insert("b".to_string(), ColumnKind::Continuous);
        let err = read_csv("a,b\n1,2\n3,oops\n".as_bytes(), &kinds, None).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column.as_deref(), Some("b"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn categorical_codes_follow_first_appearance() {
        let t = parse("sex,smoker\nm,true\nf,false\nm,\n").unwrap();
        assert_eq!(t.columns()[0].kind, ColumnKind::Categorical);
        assert_eq!(t.columns()[0].categories, vec!["m", "f"]);
        assert_eq!(t.columns()[1].kind, ColumnKind::Boolean);
        assert_eq!(t.get(1, 0), Some(1.0));
        assert!(t.is_missing(2, 1));
    }

    #[test]
    fn write_then_load_preserves_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = parse("x,grade,flag\n0.1,b,true\n,a,\n-3.25e-7,b,false\n").unwrap();
        write_csv(&t, &path).unwrap();
        let back = load_csv_with_sidecar(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn sidecar_keeps_codes_stable_across_files() {
        let dir = tempfile::tempdir().unwrap();
        let train = parse("grade\na\nb\n").unwrap();
        let path = dir.path().join("test.csv");
        // test file lists b first; the sidecar from train fixes the codes
        std::fs::write(&path, "grade\nb\nc\n").unwrap();
        let meta = TableMeta::of(&train);
        std::fs::write(sidecar_path(&path), serde_json::to_string(&meta).unwrap()).unwrap();
        let t = load_csv_with_sidecar(&path).unwrap();
        assert_eq!(t.get(0, 0), Some(1.0));
        assert_eq!(t.columns()[0].categories, vec!["a", "b", "c"]);
    }
}
