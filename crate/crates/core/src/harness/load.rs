use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::LabelColumn;
use crate::error::{Error, Result};
use crate::example::{FeatureKind, LabeledExample, Schema};

/// Examples read from a CSV file, in file order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: Arc<Schema>,
    pub examples: Vec<LabeledExample>,
    /// Header names of the feature columns.
    pub feature_names: Vec<String>,
    /// For each categorical feature, its symbols in code order.
    pub symbols: Vec<Vec<String>>,
}

/// Reads a headed CSV file. A column is real-valued when every value parses
/// as a number and categorical otherwise; categorical symbols get codes in
/// order of first appearance. Rows whose label equals `positive` are
/// labeled 1, all others 0.
pub fn load_stream(path: &Path, label: &LabelColumn, positive: &str) -> Result<Dataset> {
    let mut reader = ReaderBuilder::new().trim(Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    let label_idx = match label {
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(Error::UnknownColumn(i.to_string())),
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
    };
    if header.len() < 2 {
        return Err(Error::InvalidParams(
            "need at least one feature column besides the label".into(),
        ));
    }

    let mut rows: Vec<(usize, StringRecord)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let record = record.map_err(|e| Error::Row {
            row,
            reason: e.to_string(),
        })?;
        if let Some(col) = record.iter().position(|v| v.is_empty()) {
            return Err(Error::Row {
                row,
                reason: format!("missing value in column {:?}", &header[col]),
            });
        }
        rows.push((row, record));
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != label_idx).collect();
    let kinds: Vec<FeatureKind> = feature_cols
        .iter()
        .map(|&c| {
            let numeric = rows
                .iter()
                .all(|(_, r)| r[c].parse::<f64>().is_ok_and(|v| !v.is_nan()));
            if numeric {
                FeatureKind::Real
            } else {
                FeatureKind::Categorical
            }
        })
        .collect();
    let schema = Schema::new(kinds.clone())?;

    let mut interners: Vec<HashMap<String, u32>> = vec![HashMap::new(); feature_cols.len()];
    let mut symbols: Vec<Vec<String>> = vec![Vec::new(); feature_cols.len()];
    let mut examples = Vec::with_capacity(rows.len());
    for (row, record) in &rows {
        let mut x = Vec::with_capacity(feature_cols.len());
        for (j, &c) in feature_cols.iter().enumerate() {
            let v = &record[c];
            x.push(match kinds[j] {
                FeatureKind::Real => v.parse::<f64>().expect("checked numeric"),
                FeatureKind::Categorical => {
                    let next = interners[j].len() as u32;
                    let code = *interners[j].entry(v.to_string()).or_insert_with(|| {
                        symbols[j].push(v.to_string());
                        next
                    });
                    code as f64
                }
            });
        }
        let y = u8::from(&record[label_idx] == positive);
        let e = LabeledExample::new(x, y).map_err(|e| Error::Row {
            row: *row,
            reason: e.to_string(),
        })?;
        schema.validate(e.features()).map_err(|e| Error::Row {
            row: *row,
            reason: e.to_string(),
        })?;
        examples.push(e);
    }

    let feature_names = feature_cols
        .iter()
        .map(|&c| header[c].to_string())
        .collect();
    Ok(Dataset {
        schema,
        examples,
        feature_names,
        symbols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn numeric_rows_in_order() {
        let f = file("a,b,y\n1.5,2,1\n0,3,0\n-1,4,1\n");
        let d = load_stream(f.path(), &LabelColumn::Name("y".into()), "1").unwrap();
        assert_eq!(d.examples.len(), 3);
        assert_eq!(d.examples[0].features(), &[1.5, 2.0]);
        assert_eq!(d.examples[2].features(), &[-1.0, 4.0]);
        let labels: Vec<_> = d.examples.iter().map(|e| e.label()).collect();
        assert_eq!(labels, vec![1, 0, 1]);
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.schema.kinds(), &[FeatureKind::Real, FeatureKind::Real]);
    }

    #[test]
    fn categorical_columns_are_interned() {
        let f = file("day,price,class\nmon,0.1,UP\ntue,0.2,DOWN\nmon,0.3,UP\n");
        let d = load_stream(f.path(), &LabelColumn::Index(2), "UP").unwrap();
        assert_eq!(
            d.schema.kinds(),
            &[FeatureKind::Categorical, FeatureKind::Real]
        );
        assert_eq!(d.examples[0].feature(0), 0.0);
        assert_eq!(d.examples[1].feature(0), 1.0);
        assert_eq!(d.examples[2].feature(0), 0.0);
        assert_eq!(d.symbols[0], vec!["mon", "tue"]);
        assert_eq!(
            d.examples.iter().map(|e| e.label()).collect::<Vec<_>>(),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn missing_field_reports_row() {
        let f = file("a,b,y\n1,2,1\n3,,0\n");
        match load_stream(f.path(), &LabelColumn::Name("y".into()), "1") {
            Err(Error::Row { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = file("a,b,y\n1,2,1\n3,0\n");
        assert!(matches!(
            load_stream(f.path(), &LabelColumn::Name("y".into()), "1"),
            Err(Error::Row { row: 3, .. })
        ));
    }

    #[test]
    fn unknown_label_column() {
        let f = file("a,y\n1,1\n");
        assert!(matches!(
            load_stream(f.path(), &LabelColumn::Name("class".into()), "1"),
            Err(Error::UnknownColumn(_))
        ));
        assert!(load_stream(f.path(), &LabelColumn::Index(5), "1").is_err());
    }
}
