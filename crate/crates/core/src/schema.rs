//! Finite attribute domains and the index encoding of domain points.
//!
//! A [`DomainSchema`] is an ordered list of attributes, each with a finite
//! range. A [`Point`] stores, per attribute, the index of its value within that
//! range, so points order lexicographically in the same order as mixed-radix
//! domain indices (first attribute most significant).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: u32 = 1440;

/// Transport mode of a trip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bus,
    Train,
    Ferry,
    LightRail,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Bus, Mode::Train, Mode::Ferry, Mode::LightRail];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Bus => "bus",
            Mode::Train => "train",
            Mode::Ferry => "ferry",
            Mode::LightRail => "lightrail",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical { values: Vec<String> },
    /// Minutes since midnight, floored to multiples of `bin_width_minutes`.
    Time { bin_width_minutes: u32 },
    Date { values: Vec<String> },
    Mode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn categorical<S: Into<String>>(name: &str, values: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.to_string(),
            kind: AttributeKind::Categorical {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn time(name: &str, bin_width_minutes: u32) -> Self {
        Attribute {
            name: name.to_string(),
            kind: AttributeKind::Time { bin_width_minutes },
        }
    }

    pub fn date<S: Into<String>>(name: &str, values: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.to_string(),
            kind: AttributeKind::Date {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn mode(name: &str) -> Self {
        Attribute {
            name: name.to_string(),
            kind: AttributeKind::Mode,
        }
    }

    /// Number of distinct values in this attribute's range.
    pub fn range_size(&self) -> u32 {
        match &self.kind {
            AttributeKind::Categorical { values } | AttributeKind::Date { values } => {
                values.len() as u32
            }
            AttributeKind::Time { bin_width_minutes } => MINUTES_PER_DAY / bin_width_minutes,
            AttributeKind::Mode => Mode::ALL.len() as u32,
        }
    }

    pub fn label(&self, index: u32) -> String {
        match &self.kind {
            AttributeKind::Categorical { values } | AttributeKind::Date { values } => {
                values[index as usize].clone()
            }
            AttributeKind::Time { bin_width_minutes } => (index * bin_width_minutes).to_string(),
            AttributeKind::Mode => Mode::ALL[index as usize].as_str().to_string(),
        }
    }

    pub fn is_time(&self) -> bool {
        matches!(self.kind, AttributeKind::Time { .. })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "SchemaRepr", into = "SchemaRepr")]
pub struct DomainSchema {
    attributes: Vec<Attribute>,
    // value -> index, for categorical and date attributes
    lookup: Vec<HashMap<String, u32>>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    attributes: Vec<Attribute>,
}

impl From<SchemaRepr> for DomainSchema {
    fn from(repr: SchemaRepr) -> Self {
        DomainSchema::build(repr.attributes)
    }
}

impl From<DomainSchema> for SchemaRepr {
    fn from(schema: DomainSchema) -> Self {
        SchemaRepr {
            attributes: schema.attributes,
        }
    }
}

impl PartialEq for DomainSchema {
    fn eq(&self, other: &Self) -> bool {
        self.attributes == other.attributes
    }
}

impl Eq for DomainSchema {}

impl DomainSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
            }
            match &a.kind {
                AttributeKind::Categorical { values } | AttributeKind::Date { values } => {
                    if values.is_empty() {
                        return Err(Error::Schema(format!("attribute `{}` has an empty range", a.name)));
                    }
                    for (j, v) in values.iter().enumerate() {
                        if values[..j].contains(v) {
                            return Err(Error::Schema(format!(
                                "attribute `{}` lists value `{v}` twice",
                                a.name
                            )));
                        }
                    }
                }
                AttributeKind::Time { bin_width_minutes } => {
                    let w = *bin_width_minutes;
                    if w == 0 || !MINUTES_PER_DAY.is_multiple_of(w) {
                        return Err(Error::Schema(format!(
                            "attribute `{}`: bin width {w} does not divide {MINUTES_PER_DAY}",
                            a.name
                        )));
                    }
                }
                AttributeKind::Mode => {}
            }
        }
        Ok(Self::build(attributes))
    }

    fn build(attributes: Vec<Attribute>) -> Self {
        let lookup = attributes
            .iter()
            .map(|a| match &a.kind {
                AttributeKind::Categorical { values } | AttributeKind::Date { values } => values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), i as u32))
                    .collect(),
                _ => HashMap::new(),
            })
            .collect();
        DomainSchema { attributes, lookup }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// |X|, the product of the attribute range sizes.
    pub fn domain_size(&self) -> Result<u128> {
        self.attributes.iter().try_fold(1u128, |acc, a| {
            acc.checked_mul(a.range_size() as u128)
                .ok_or(Error::DomainOverflow)
        })
    }

    /// Index of a single attribute value given as text.
    pub fn encode_value(&self, attr: usize, text: &str) -> std::result::Result<u32, String> {
        let a = &self.attributes[attr];
        match &a.kind {
            AttributeKind::Categorical { .. } | AttributeKind::Date { .. } => self.lookup[attr]
                .get(text)
                .copied()
                .ok_or_else(|| format!("unknown value `{text}`")),
            AttributeKind::Time { bin_width_minutes } => {
                let minute: u32 = text
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{text}` is not a minute count"))?;
                if minute >= MINUTES_PER_DAY {
                    return Err(format!("time {minute} outside [0, {MINUTES_PER_DAY})"));
                }
                if !minute.is_multiple_of(*bin_width_minutes) {
                    return Err(format!(
                        "time {minute} is not on a {bin_width_minutes}-minute bin boundary"
                    ));
                }
                Ok(minute / bin_width_minutes)
            }
            AttributeKind::Mode => Mode::parse(text)
                .map(|m| m as u32)
                .ok_or_else(|| format!("unknown mode `{text}`")),
        }
    }

    /// Encode a full row of text values. On failure returns the offending
    /// column name and a message.
    pub fn encode<S: AsRef<str>>(&self, values: &[S]) -> std::result::Result<Point, (String, String)> {
        if values.len() != self.attributes.len() {
            return Err((
                String::new(),
                format!("expected {} values, found {}", self.attributes.len(), values.len()),
            ));
        }
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.encode_value(i, v.as_ref())
                    .map_err(|msg| (self.attributes[i].name.clone(), msg))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Point)
    }

    /// Like [`encode`](Self::encode) but with a plain error, for building
    /// points in code.
    pub fn point<S: AsRef<str>>(&self, values: &[S]) -> Result<Point> {
        self.encode(values)
            .map_err(|(col, msg)| Error::Schema(format!("{col}: {msg}")))
    }

    pub fn decode(&self, point: &Point) -> Vec<String> {
        point
            .0
            .iter()
            .zip(&self.attributes)
            .map(|(&i, a)| a.label(i))
            .collect()
    }

    pub fn contains(&self, point: &Point) -> bool {
        point.0.len() == self.attributes.len()
            && point
                .0
                .iter()
                .zip(&self.attributes)
                .all(|(&i, a)| i < a.range_size())
    }

    /// The point at mixed-radix `index` (first attribute most significant).
    pub fn point_at(&self, mut index: u128) -> Point {
        let mut coords = vec![0u32; self.attributes.len()];
        for (slot, a) in coords.iter_mut().zip(&self.attributes).rev() {
            let r = a.range_size() as u128;
            *slot = (index % r) as u32;
            index /= r;
        }
        Point(coords)
    }

    /// Sub-schema over the named attributes, in the given order.
    pub fn project(&self, names: &[&str]) -> Result<(DomainSchema, Vec<usize>)> {
        let cols = names
            .iter()
            .map(|n| {
                self.position(n)
                    .ok_or_else(|| Error::Schema(format!("no attribute named `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let attrs = cols.iter().map(|&c| self.attributes[c].clone()).collect();
        Ok((DomainSchema::new(attrs)?, cols))
    }

    /// Replace one attribute, keeping the others.
    pub(crate) fn with_attribute(&self, attr: usize, replacement: Attribute) -> Result<DomainSchema> {
        let mut attrs = self.attributes.clone();
        attrs[attr] = replacement;
        DomainSchema::new(attrs)
    }
}

/// A domain point: one value index per schema attribute.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point(pub Vec<u32>);

impl Point {
    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn project(&self, cols: &[usize]) -> Point {
        Point(cols.iter().map(|&c| self.0[c]).collect())
    }
}
