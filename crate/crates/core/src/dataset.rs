//! Datasets of schema-encoded rows, trip records, and the delimited text
//! format used for input files.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::Histogram;
use crate::schema::{Attribute, DomainSchema, Mode, Point, MINUTES_PER_DAY};

/// A multiset of rows conforming to a schema. One row is one trip (or, for
/// non-trip data, one record).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    schema: Arc<DomainSchema>,
    rows: Vec<Point>,
}

impl Dataset {
    pub fn new(schema: Arc<DomainSchema>, rows: Vec<Point>) -> Result<Self> {
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, p)| !schema.contains(p)) {
            return Err(Error::Validation {
                row: i + 1,
                column: String::new(),
                message: "point outside the schema".into(),
            });
        }
        Ok(Dataset { schema, rows })
    }

    pub fn empty(schema: Arc<DomainSchema>) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
        }
    }

    pub(crate) fn from_parts(schema: Arc<DomainSchema>, rows: Vec<Point>) -> Self {
        Dataset { schema, rows }
    }

    pub fn schema(&self) -> &Arc<DomainSchema> {
        &self.schema
    }

    pub fn rows(&self) -> &[Point] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn histogram(&self) -> Histogram {
        Histogram::from_points(self.schema.clone(), self.rows.iter().cloned())
    }

    /// Read comma-separated text with a header row naming the schema's
    /// attributes in order. Errors carry the 1-based data row number.
    pub fn read_csv<R: Read>(reader: R, schema: Arc<DomainSchema>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let expected = schema.names();
        if header != expected {
            return Err(Error::Header {
                expected,
                found: header,
            });
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Validation {
                row,
                column: String::new(),
                message: e.to_string(),
            })?;
            let values: Vec<&str> = record.iter().collect();
            let point = schema
                .encode(&values)
                .map_err(|(column, message)| Error::Validation { row, column, message })?;
            rows.push(point);
        }
        Ok(Dataset { schema, rows })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.names())?;
        for p in &self.rows {
            w.write_record(self.schema.decode(p))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Read a dataset file against `schema`.
pub fn ingest(path: &Path, schema: Arc<DomainSchema>) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::read_csv(std::io::BufReader::new(f), schema)
}

/// Column names of the standard trip layout.
pub mod columns {
    pub const DATE: &str = "date";
    pub const MODE: &str = "mode";
    pub const TAP_ON_STOP: &str = "tap_on_stop";
    pub const TAP_ON_TIME: &str = "tap_on_time";
    pub const TAP_OFF_STOP: &str = "tap_off_stop";
    pub const TAP_OFF_TIME: &str = "tap_off_time";
}

/// One tap-on/tap-off trip.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    pub date: String,
    pub mode: Mode,
    pub tap_on_stop: String,
    /// Minutes since midnight.
    pub tap_on_time: u32,
    pub tap_off_stop: String,
    pub tap_off_time: u32,
}

impl TripRecord {
    fn values(&self) -> [String; 6] {
        [
            self.date.clone(),
            self.mode.as_str().to_string(),
            self.tap_on_stop.clone(),
            self.tap_on_time.to_string(),
            self.tap_off_stop.clone(),
            self.tap_off_time.to_string(),
        ]
    }
}

/// The six-column trip schema at one-minute resolution.
pub fn trip_schema<D, S>(dates: D, stops: S) -> Result<DomainSchema>
where
    D: IntoIterator,
    D::Item: Into<String>,
    S: IntoIterator,
    S::Item: Into<String>,
{
    let stops: Vec<String> = stops.into_iter().map(Into::into).collect();
    DomainSchema::new(vec![
        Attribute::date(columns::DATE, dates),
        Attribute::mode(columns::MODE),
        Attribute::categorical(columns::TAP_ON_STOP, stops.clone()),
        Attribute::time(columns::TAP_ON_TIME, 1),
        Attribute::categorical(columns::TAP_OFF_STOP, stops),
        Attribute::time(columns::TAP_OFF_TIME, 1),
    ])
}

impl Dataset {
    /// Encode trips against a trip-layout schema.
    pub fn from_trips(schema: Arc<DomainSchema>, trips: &[TripRecord]) -> Result<Self> {
        let mut rows = Vec::with_capacity(trips.len());
        for (i, t) in trips.iter().enumerate() {
            if t.tap_on_time >= MINUTES_PER_DAY || t.tap_off_time >= MINUTES_PER_DAY {
                return Err(Error::Validation {
                    row: i + 1,
                    column: "time".into(),
                    message: "time outside [0, 1440)".into(),
                });
            }
            let p = schema
                .encode(&t.values())
                .map_err(|(column, message)| Error::Validation {
                    row: i + 1,
                    column,
                    message,
                })?;
            rows.push(p);
        }
        Ok(Dataset { schema, rows })
    }

    /// Decode rows back into trips. Requires the six trip columns.
    pub fn trips(&self) -> Result<Vec<TripRecord>> {
        use columns::*;
        let col = |n: &str| {
            self.schema
                .position(n)
                .ok_or_else(|| Error::Schema(format!("dataset has no `{n}` column")))
        };
        let idx = [
            col(DATE)?,
            col(MODE)?,
            col(TAP_ON_STOP)?,
            col(TAP_ON_TIME)?,
            col(TAP_OFF_STOP)?,
            col(TAP_OFF_TIME)?,
        ];
        let minutes = |s: &str| s.parse::<u32>().map_err(|e| Error::Schema(e.to_string()));
        self.rows
            .iter()
            .map(|p| {
                let v = self.schema.decode(p);
                Ok(TripRecord {
                    date: v[idx[0]].clone(),
                    mode: Mode::parse(&v[idx[1]]).ok_or_else(|| Error::Schema("bad mode".into()))?,
                    tap_on_stop: v[idx[2]].clone(),
                    tap_on_time: minutes(&v[idx[3]])?,
                    tap_off_stop: v[idx[4]].clone(),
                    tap_off_time: minutes(&v[idx[5]])?,
                })
            })
            .collect()
    }
}
