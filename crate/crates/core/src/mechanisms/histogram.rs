use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::PrivacyParams;
use crate::schema::{DomainSchema, Point};

/// Exact point counts over a schema. Only the support is stored; a point
/// absent from the map has count zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    schema: Arc<DomainSchema>,
    counts: BTreeMap<Point, u64>,
}

impl Histogram {
    pub fn new(schema: Arc<DomainSchema>) -> Self {
        Histogram {
            schema,
            counts: BTreeMap::new(),
        }
    }

    pub fn from_points(schema: Arc<DomainSchema>, points: impl IntoIterator<Item = Point>) -> Self {
        let mut h = Histogram::new(schema);
        for p in points {
            *h.counts.entry(p).or_insert(0) += 1;
        }
        h
    }

    /// Build from text-valued points and their counts. Zero counts are dropped.
    pub fn from_counts<S: AsRef<str>>(
        schema: Arc<DomainSchema>,
        counts: impl IntoIterator<Item = (Vec<S>, u64)>,
    ) -> Result<Self> {
        let mut h = Histogram::new(schema);
        for (values, c) in counts {
            let p = h.schema.point(&values)?;
            h.set(p, c)?;
        }
        Ok(h)
    }

    pub fn set(&mut self, point: Point, count: u64) -> Result<()> {
        if !self.schema.contains(&point) {
            return Err(Error::Schema(format!("point {:?} is outside the schema", point.0)));
        }
        if count == 0 {
            self.counts.remove(&point);
        } else {
            self.counts.insert(point, count);
        }
        Ok(())
    }

    pub fn schema(&self) -> &Arc<DomainSchema> {
        &self.schema
    }

    pub fn count(&self, point: &Point) -> u64 {
        self.counts.get(point).copied().unwrap_or(0)
    }

    /// Count of a point given as text values; unknown values count zero.
    pub fn count_of<S: AsRef<str>>(&self, values: &[S]) -> u64 {
        self.schema.point(values).map(|p| self.count(&p)).unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, u64)> {
        self.counts.iter().map(|(p, &c)| (p, c))
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// How released SBH values are presented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round to the nearest integer, clamped below at 1.
    #[default]
    Nearest,
    Raw,
}

impl Rounding {
    pub fn apply(self, value: f64) -> f64 {
        match self {
            Rounding::Nearest => value.round().max(1.0),
            Rounding::Raw => value,
        }
    }
}

/// Which mechanism produced a [`NoisyHistogram`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "snake_case")]
pub enum MechanismKind {
    Sbh { params: PrivacyParams, threshold: f64 },
    Laplace { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyHistogram {
    pub(crate) schema: Arc<DomainSchema>,
    pub(crate) entries: BTreeMap<Point, f64>,
    pub(crate) mechanism: MechanismKind,
    pub(crate) noise_scale: f64,
    pub(crate) rounding: Rounding,
    pub(crate) seed: u64,
    pub(crate) stream_id: u64,
}

impl NoisyHistogram {
    /// Rebuild a released histogram from its published parts.
    pub fn from_parts(
        schema: Arc<DomainSchema>,
        entries: BTreeMap<Point, f64>,
        mechanism: MechanismKind,
        rounding: Rounding,
        seed: u64,
        stream_id: u64,
    ) -> Self {
        let noise_scale = match mechanism {
            MechanismKind::Sbh { params, .. } => super::sbh_noise_scale(&params),
            MechanismKind::Laplace { epsilon } => 1.0 / epsilon,
        };
        NoisyHistogram {
            schema,
            entries,
            mechanism,
            noise_scale,
            rounding,
            seed,
            stream_id,
        }
    }

    pub fn schema(&self) -> &Arc<DomainSchema> {
        &self.schema
    }

    pub fn get(&self, point: &Point) -> Option<f64> {
        self.entries.get(point).copied()
    }

    pub fn value_of<S: AsRef<str>>(&self, values: &[S]) -> Option<f64> {
        self.schema.point(values).ok().and_then(|p| self.get(&p))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.entries.iter().map(|(p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mechanism(&self) -> MechanismKind {
        self.mechanism
    }

    /// SBH threshold the release was filtered against, if any.
    pub fn threshold_used(&self) -> Option<f64> {
        match self.mechanism {
            MechanismKind::Sbh { threshold, .. } => Some(threshold),
            MechanismKind::Laplace { .. } => None,
        }
    }

    /// Scale b of the Laplace noise added to each released value.
    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn min_value(&self) -> Option<f64> {
        self.entries.values().copied().reduce(f64::min)
    }
}
