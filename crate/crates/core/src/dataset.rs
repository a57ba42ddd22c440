//! Facility records and the row/column transforms applied before training:
//! serial-number removal, object-type redistribution, missing-row cleaning
//! and the seeded train/test split.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{DatasetSchema, ObjectType, Value, SERIAL_COLUMN, TYPE_COLUMN};

/// One record, aligned to the schema. `None` is a missing cell.
pub type Row = Vec<Option<Value>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: DatasetSchema,
    rows: Vec<Row>,
}

impl Dataset {
    /// Validates every row against the schema. Cells are normalized through
    /// [`crate::schema::ColumnSpec::coerce`].
    pub fn new(schema: DatasetSchema, rows: Vec<Row>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(r, row)| {
                if row.len() != schema.len() {
                    return Err(Error::ArityError {
                        row: r + 1,
                        expected: schema.len(),
                        found: row.len(),
                    });
                }
                row.iter()
                    .zip(schema.columns())
                    .map(|(cell, spec)| cell.as_ref().map(|v| spec.coerce(v)).transpose())
                    .collect::<Result<Row>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { schema, rows })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Target values of every row; missing targets are skipped.
    pub fn targets(&self) -> Vec<f64> {
        let t = self.schema.target_index();
        self.rows
            .iter()
            .filter_map(|r| r[t].as_ref().and_then(Value::as_f64))
            .collect()
    }

    fn with_rows(&self, rows: Vec<Row>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows,
        }
    }

    fn keep_columns(&self, keep: &[usize]) -> Result<Dataset> {
        let schema = self.schema.project(keep)?;
        let rows = self
            .rows
            .iter()
            .map(|row| keep.iter().map(|&i| row[i].clone()).collect())
            .collect();
        Ok(Dataset { schema, rows })
    }

    /// Writes the dataset as CSV with a header row; missing cells become
    /// empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(self.schema.names()).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .map(|c| c.as_ref().map(ToString::to_string).unwrap_or_default()),
            )
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Reads a headed CSV document against `schema`.
pub fn load_csv<R: Read>(source: R, schema: &DatasetSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected: Vec<String> = schema.names().map(str::to_string).collect();
    if header != expected {
        return Err(Error::HeaderMismatch {
            expected,
            found: header,
        });
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != schema.len() {
            return Err(Error::ArityError {
                row: row_no,
                expected: schema.len(),
                found: record.len(),
            });
        }
        let row = record
            .iter()
            .zip(schema.columns())
            .map(|(text, spec)| {
                spec.parse_cell(text).map_err(|reason| Error::CellParseError {
                    row: row_no,
                    column: spec.name.clone(),
                    text: text.to_string(),
                    reason,
                })
            })
            .collect::<Result<Row>>()?;
        rows.push(row);
    }
    Ok(Dataset {
        schema: schema.clone(),
        rows,
    })
}

/// Drops the `Num` serial-number column.
pub fn select_feature_columns(ds: &Dataset) -> Result<Dataset> {
    let num = ds
        .schema
        .index_of(SERIAL_COLUMN)
        .ok_or_else(|| Error::MissingColumn(SERIAL_COLUMN.into()))?;
    let keep: Vec<usize> = (0..ds.schema.len()).filter(|&i| i != num).collect();
    ds.keep_columns(&keep)
}

/// Restricts a dataset to one object type.
///
/// Rows whose `isCGP` flag disagrees with `object_type` are removed (rows
/// with a missing flag cannot be attributed and are removed too), columns
/// that belong only to the other type are removed, and finally `isCGP`
/// itself is dropped. A dataset without `isCGP` is taken to be type-pure
/// already and only loses the other type's columns.
pub fn redistribute(ds: &Dataset, object_type: ObjectType) -> Result<Dataset> {
    let flag = ds.schema.index_of(TYPE_COLUMN);
    let rows: Vec<Row> = match flag {
        Some(f) => ds
            .rows
            .iter()
            .filter(|row| matches!(&row[f], Some(Value::Bool(b)) if *b == object_type.is_cgp()))
            .cloned()
            .collect(),
        None => ds.rows.clone(),
    };
    if rows.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no {object_type} rows in the dataset"
        )));
    }
    let keep: Vec<usize> = ds
        .schema
        .columns()
        .iter()
        .enumerate()
        .filter(|(i, c)| Some(*i) != flag && object_type.admits(c.applicability))
        .map(|(i, _)| i)
        .collect();
    ds.with_rows(rows).keep_columns(&keep)
}

/// Removes every row that has at least one missing cell.
pub fn clean_missing(ds: &Dataset) -> Result<Dataset> {
    let rows: Vec<Row> = ds
        .rows
        .iter()
        .filter(|row| row.iter().all(Option::is_some))
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyResult(
            "every row has at least one missing cell".into(),
        ));
    }
    Ok(ds.with_rows(rows))
}

// keeps the split permutation independent of weight initialization when
// both are seeded with the same value
const SPLIT_STREAM: u64 = 0x5_0117;

/// Number of rows assigned to training: `floor(fraction * n)`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    // tolerance absorbs representation error such as 0.29 * 100 = 28.999...
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Seeded train/test partition. Both parts keep the original row order.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::BadFraction(train_fraction));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &i in &order[..train_size(n, train_fraction)] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = ds
        .rows
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    Ok((
        ds.with_rows(train.into_iter().map(|(r, _)| r).collect()),
        ds.with_rows(test.into_iter().map(|(r, _)| r).collect()),
    ))
}
