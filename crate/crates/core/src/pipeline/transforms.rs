use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{columns, Dataset};
use crate::error::{Error, Result};
use crate::schema::{Attribute, AttributeKind, DomainSchema, Point, MINUTES_PER_DAY};

/// Floor every time attribute to multiples of `bin_width_minutes`.
///
/// The new width must divide 1440 and be a multiple of each time
/// attribute's current width, so that every coarse bin covers a whole number
/// of existing bins.
pub fn bin_times(ds: &Dataset, bin_width_minutes: u32) -> Result<Dataset> {
    let w = bin_width_minutes;
    if w == 0 || !MINUTES_PER_DAY.is_multiple_of(w) {
        return Err(Error::param(format!("bin width {w} does not divide {MINUTES_PER_DAY}")));
    }
    let mut schema = (**ds.schema()).clone();
    let mut factors = vec![1u32; schema.len()];
    for (i, attr) in ds.schema().attributes().iter().enumerate() {
        if let AttributeKind::Time { bin_width_minutes: current } = attr.kind {
            if !w.is_multiple_of(current) {
                return Err(Error::param(format!(
                    "bin width {w} is not a multiple of `{}`'s current width {current}",
                    attr.name
                )));
            }
            factors[i] = w / current;
            schema = schema.with_attribute(i, Attribute::time(&attr.name, w))?;
        }
    }
    let rows = ds
        .rows()
        .iter()
        .map(|p| Point(p.0.iter().zip(&factors).map(|(&v, &f)| v / f).collect()))
        .collect();
    Ok(Dataset::from_parts(Arc::new(schema), rows))
}

/// Total map from fine stop ids onto a coarse stop set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationMap {
    mapping: BTreeMap<String, String>,
}

impl AggregationMap {
    pub fn new(mapping: BTreeMap<String, String>) -> Self {
        AggregationMap { mapping }
    }

    pub fn identity<S: AsRef<str>>(stops: impl IntoIterator<Item = S>) -> Self {
        stops
            .into_iter()
            .map(|s| (s.as_ref().to_string(), s.as_ref().to_string()))
            .collect()
    }

    /// Consecutive runs of `group_size` stops share one coarse id,
    /// `<prefix><run index>`.
    pub fn blocks<S: AsRef<str>>(stops: &[S], group_size: usize, prefix: &str) -> Self {
        assert!(group_size > 0);
        stops
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_ref().to_string(), format!("{prefix}{:04}", i / group_size)))
            .collect()
    }

    pub fn get(&self, stop: &str) -> Option<&str> {
        self.mapping.get(stop).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Two-column delimited text with a header row (`stop,aggregate`).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut mapping = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Validation {
                    row: i + 1,
                    column: String::new(),
                    message: format!("expected 2 columns, found {}", rec.len()),
                });
            }
            if mapping.insert(rec[0].to_string(), rec[1].to_string()).is_some() {
                return Err(Error::Validation {
                    row: i + 1,
                    column: "stop".into(),
                    message: format!("stop `{}` mapped twice", &rec[0]),
                });
            }
        }
        Ok(AggregationMap { mapping })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["stop", "aggregate"])?;
        for (k, v) in &self.mapping {
            w.write_record([k, v])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

impl FromIterator<(String, String)> for AggregationMap {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        AggregationMap {
            mapping: iter.into_iter().collect(),
        }
    }
}

/// Categorical attributes whose name ends in `stop`.
pub fn stop_columns(schema: &DomainSchema) -> Vec<String> {
    schema
        .attributes()
        .iter()
        .filter(|a| a.name.ends_with("stop") && matches!(a.kind, AttributeKind::Categorical { .. }))
        .map(|a| a.name.clone())
        .collect()
}

/// Replace stop ids in every stop column by their aggregate.
pub fn aggregate_stops(ds: &Dataset, map: &AggregationMap) -> Result<Dataset> {
    let cols = stop_columns(ds.schema());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    aggregate_columns(ds, map, &cols)
}

/// Replace the values of the named categorical columns by their images.
///
/// The new range lists images in order of first appearance along the old
/// range, followed by any remaining map images in sorted order, so an
/// identity map reproduces the schema exactly.
pub fn aggregate_columns(ds: &Dataset, map: &AggregationMap, cols: &[&str]) -> Result<Dataset> {
    let mut schema = (**ds.schema()).clone();
    let mut remaps: Vec<Option<Vec<Option<u32>>>> = vec![None; schema.len()];
    for name in cols {
        let i = schema
            .position(name)
            .ok_or_else(|| Error::Schema(format!("no attribute named `{name}`")))?;
        let AttributeKind::Categorical { values } = &schema.attributes()[i].kind else {
            return Err(Error::Schema(format!("`{name}` is not categorical")));
        };
        let mut coarse: Vec<String> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut remap = Vec::with_capacity(values.len());
        for v in values {
            match map.get(v) {
                Some(image) => {
                    if seen.insert(image.to_string()) {
                        coarse.push(image.to_string());
                    }
                    remap.push(Some(coarse.iter().position(|c| c == image).unwrap() as u32));
                }
                None => remap.push(None),
            }
        }
        let rest: BTreeSet<&str> = map.mapping.values().map(String::as_str).filter(|v| !seen.contains(*v)).collect();
        coarse.extend(rest.into_iter().map(str::to_string));
        if coarse.is_empty() {
            return Err(Error::param("aggregation map is empty"));
        }
        schema = schema.with_attribute(i, Attribute::categorical(name, coarse))?;
        remaps[i] = Some(remap);
    }
    let fine = ds.schema();
    let mut rows = Vec::with_capacity(ds.len());
    for p in ds.rows() {
        let mut coords = p.0.clone();
        for (i, remap) in remaps.iter().enumerate() {
            if let Some(remap) = remap {
                coords[i] = remap[p.0[i] as usize]
                    .ok_or_else(|| Error::UnmappedStop(fine.attributes()[i].label(p.0[i])))?;
            }
        }
        rows.push(Point(coords));
    }
    Ok(Dataset::from_parts(Arc::new(schema), rows))
}

/// Project a dataset onto a subset of its columns, keeping every row.
pub fn project(ds: &Dataset, names: &[&str]) -> Result<Dataset> {
    let (schema, cols) = ds.schema().project(names)?;
    let rows = ds.rows().iter().map(|p| p.project(&cols)).collect();
    Ok(Dataset::from_parts(Arc::new(schema), rows))
}

/// Split trips into a tap-on view and a tap-off view, each holding only its
/// (stop, time) pair. Both views keep all n rows; the pairing between them
/// is dropped.
pub fn decouple(ds: &Dataset) -> Result<(Dataset, Dataset)> {
    let on = project(ds, &[columns::TAP_ON_STOP, columns::TAP_ON_TIME])?;
    let off = project(ds, &[columns::TAP_OFF_STOP, columns::TAP_OFF_TIME])?;
    Ok((on, off))
}

/// Values of the grouping attributes, as `(attribute, value)` pairs.
pub type GroupKey = Vec<(String, String)>;

/// Disjoint cover of the rows by the values of the `by` attributes. Every
/// combination of the attributes' ranges gets an entry, empty or not; the
/// grouping columns are kept in the member datasets.
pub fn partition(ds: &Dataset, by: &[&str]) -> Result<BTreeMap<GroupKey, Dataset>> {
    let schema = ds.schema();
    let cols = by
        .iter()
        .map(|n| {
            schema
                .position(n)
                .ok_or_else(|| Error::Schema(format!("no attribute named `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if by.is_empty() {
        return Ok(BTreeMap::from([(GroupKey::new(), ds.clone())]));
    }
    let (group_schema, _) = schema.project(by)?;
    let mut groups: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
    for i in 0..group_schema.domain_size()? {
        groups.insert(group_schema.point_at(i), Vec::new());
    }
    for row in ds.rows() {
        groups.get_mut(&row.project(&cols)).expect("row inside schema").push(row.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(g, rows)| {
            let key = group_schema
                .names()
                .into_iter()
                .zip(group_schema.decode(&g))
                .collect();
            (key, Dataset::from_parts(schema.clone(), rows))
        })
        .collect())
}

/// Record and cell counts relative to the domain size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub n: usize,
    pub distinct_points: usize,
    pub domain_size: u128,
    /// Records per domain cell, n / |X|.
    pub rho: f64,
    /// Fraction of cells occupied, distinct / |X|.
    pub occupancy: f64,
}

pub const DEFAULT_OCCUPANCY_WARNING: f64 = 1e-3;

pub fn density(ds: &Dataset) -> Result<DensityReport> {
    let domain_size = ds.schema().domain_size()?;
    if domain_size == 0 {
        return Err(Error::param("domain size is zero"));
    }
    let distinct_points = ds.rows().iter().collect::<BTreeSet<_>>().len();
    Ok(DensityReport {
        n: ds.len(),
        distinct_points,
        domain_size,
        rho: ds.len() as f64 / domain_size as f64,
        occupancy: distinct_points as f64 / domain_size as f64,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::{trip_schema, TripRecord};
    use crate::schema::Mode;

    fn stops(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i:04}")).collect()
    }

    fn trips(n: usize, nstops: usize, seed: u64) -> Dataset {
        let schema = Arc::new(trip_schema(["d1", "d2"], stops(nstops)).unwrap());
        let mut s = seed;
        let mut next = move |m: u64| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) % m
        };
        let st = stops(nstops);
        let rows: Vec<TripRecord> = (0..n)
            .map(|_| TripRecord {
                date: if next(2) == 0 { "d1".into() } else { "d2".into() },
                mode: Mode::ALL[next(2) as usize],
                tap_on_stop: st[next(nstops as u64) as usize].clone(),
                tap_on_time: next(1440) as u32,
                tap_off_stop: st[next(nstops as u64) as usize].clone(),
                tap_off_time: next(1440) as u32,
            })
            .collect();
        Dataset::from_trips(schema, &rows).unwrap()
    }

    #[test]
    fn binning_floors() {
        let ds = trips(50, 5, 1);
        let binned = bin_times(&ds, 15).unwrap();
        for (a, b) in ds.trips().unwrap().iter().zip(binned.trips().unwrap()) {
            assert_eq!(b.tap_on_time, a.tap_on_time / 15 * 15);
            assert_eq!(b.tap_off_time, a.tap_off_time / 15 * 15);
        }
        let schema = Arc::new(trip_schema(["d"], ["A"]).unwrap());
        let one = Dataset::from_trips(
            schema,
            &[TripRecord {
                date: "d".into(),
                mode: Mode::Bus,
                tap_on_stop: "A".into(),
                tap_on_time: 487,
                tap_off_stop: "A".into(),
                tap_off_time: 500,
            }],
        )
        .unwrap();
        assert_eq!(bin_times(&one, 15).unwrap().trips().unwrap()[0].tap_on_time, 480);
    }

    #[test]
    fn binning_edge_widths() {
        let ds = trips(50, 5, 2);
        assert_eq!(bin_times(&ds, 1).unwrap(), ds);
        let day = bin_times(&ds, 1440).unwrap();
        assert!(day.trips().unwrap().iter().all(|t| t.tap_on_time == 0 && t.tap_off_time == 0));
        let before = ds.schema().domain_size().unwrap();
        assert_eq!(day.schema().domain_size().unwrap() * 1440 * 1440, before);
        assert!(bin_times(&ds, 0).is_err());
        assert!(bin_times(&ds, 7).is_err());
        let b15 = bin_times(&ds, 15).unwrap();
        assert!(bin_times(&b15, 20).is_err());
        assert_eq!(bin_times(&b15, 60).unwrap(), bin_times(&ds, 60).unwrap());
    }

    #[test]
    fn identity_map_is_identity() {
        let ds = trips(100, 20, 3);
        let map = AggregationMap::identity(stops(20));
        assert_eq!(aggregate_stops(&ds, &map).unwrap(), ds);
    }

    #[test]
    fn block_map_shrinks_domain() {
        let ds = trips(100, 1000, 4);
        let map = AggregationMap::blocks(&stops(1000), 10, "G");
        let coarse = aggregate_stops(&ds, &map).unwrap();
        assert_eq!(
            coarse.schema().domain_size().unwrap() * 100,
            ds.schema().domain_size().unwrap()
        );
        assert_eq!(coarse.len(), ds.len());
    }

    #[test]
    fn unmapped_stop_is_an_error() {
        let ds = trips(100, 20, 5);
        let mut partial = AggregationMap::identity(stops(20));
        partial.mapping.remove("S0003");
        let used = ds.trips().unwrap().iter().any(|t| t.tap_on_stop == "S0003" || t.tap_off_stop == "S0003");
        assert!(used);
        match aggregate_stops(&ds, &partial).unwrap_err() {
            Error::UnmappedStop(s) => assert_eq!(s, "S0003"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn map_csv_round_trip() {
        let map = AggregationMap::blocks(&stops(30), 7, "G");
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        assert_eq!(AggregationMap::read_csv(buf.as_slice()).unwrap(), map);
        assert!(AggregationMap::read_csv("stop,aggregate\nA,B\nA,C\n".as_bytes()).is_err());
    }

    #[test]
    fn decouple_keeps_cardinality() {
        let ds = trips(100, 10, 6);
        let (on, off) = decouple(&ds).unwrap();
        assert_eq!((on.len(), off.len()), (100, 100));
        assert_eq!(on.schema().names(), vec!["tap_on_stop", "tap_on_time"]);
        let empty = Dataset::empty(ds.schema().clone());
        let (a, b) = decouple(&empty).unwrap();
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn partition_enumerates_all_groups() {
        let ds = trips(1000, 10, 7);
        let parts = partition(&ds, &["date", "mode"]).unwrap();
        // 2 dates x 4 modes, the generator only uses two modes
        assert_eq!(parts.len(), 8);
        assert_eq!(parts.values().map(Dataset::len).sum::<usize>(), 1000);
        let nonempty: Vec<usize> = parts.values().map(Dataset::len).filter(|&n| n > 0).collect();
        assert_eq!(nonempty.len(), 4);
        for n in nonempty {
            assert!((200..300).contains(&n), "{n}");
        }
        let single = partition(&ds, &[]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.values().next().unwrap(), &ds);
    }

    #[test]
    fn density_basics() {
        let schema = Arc::new(DomainSchema::new(vec![Attribute::categorical("x", ["a", "b", "c"])]).unwrap());
        let empty = density(&Dataset::empty(schema.clone())).unwrap();
        assert_eq!((empty.rho, empty.occupancy), (0.0, 0.0));
        let full = Dataset::new(schema.clone(), (0..3).map(|i| schema.point_at(i)).collect()).unwrap();
        let r = density(&full).unwrap();
        assert_eq!((r.n, r.distinct_points, r.domain_size, r.occupancy, r.rho), (3, 3, 3, 1.0, 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decoupled_views_are_denser(n in 0usize..300, nstops in 1usize..15, seed in any::<u64>()) {
            let ds = trips(n, nstops, seed);
            let joined = project(&ds, &["tap_on_stop", "tap_on_time", "tap_off_stop", "tap_off_time"]).unwrap();
            let (on, off) = decouple(&ds).unwrap();
            let j = density(&joined).unwrap().occupancy;
            prop_assert!(density(&on).unwrap().occupancy >= j);
            prop_assert!(density(&off).unwrap().occupancy >= j);
        }

        #[test]
        fn binning_scales_rho(n in 1usize..300, seed in any::<u64>(), w in prop::sample::select(vec![2u32, 3, 5, 15, 60, 1440])) {
            let ds = trips(n, 8, seed);
            let binned = bin_times(&ds, w).unwrap();
            let (a, b) = (density(&ds).unwrap(), density(&binned).unwrap());
            // two time attributes
            let factor = (w as f64).powi(2);
            prop_assert!((b.rho / a.rho / factor - 1.0).abs() < 1e-9);
            prop_assert!(b.occupancy >= a.occupancy);
        }

        #[test]
        fn balanced_stop_merges_raise_occupancy(n in 1usize..300, seed in any::<u64>(), g in prop::sample::select(vec![1usize, 2, 3, 4, 6, 12])) {
            let ds = bin_times(&trips(n, 12, seed), 60).unwrap();
            let coarse = aggregate_stops(&ds, &AggregationMap::blocks(&stops(12), g, "G")).unwrap();
            prop_assert!(density(&coarse).unwrap().occupancy >= density(&ds).unwrap().occupancy);
        }

        #[test]
        fn partition_is_a_disjoint_cover(n in 0usize..400, seed in any::<u64>()) {
            let ds = trips(n, 5, seed);
            let parts = partition(&ds, &["date", "mode"]).unwrap();
            prop_assert_eq!(parts.values().map(Dataset::len).sum::<usize>(), n);
            for (key, part) in &parts {
                let want: Vec<&str> = key.iter().map(|(_, v)| v.as_str()).collect();
                for t in part.trips().unwrap() {
                    prop_assert_eq!(vec![t.date.as_str(), t.mode.as_str()], want.clone());
                }
            }
        }
    }
}
