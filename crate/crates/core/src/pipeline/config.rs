use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{PrivacyParams, Rounding};
use crate::pipeline::AggregationMap;
use crate::schema::{Attribute, AttributeKind, DomainSchema, MINUTES_PER_DAY};

pub const DEFAULT_BIN_WIDTH_MINUTES: u32 = 15;

/// How the configured (ε, δ) is spread over the release's queries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Allocation {
    /// Every query is charged the configured (ε, δ).
    #[default]
    PerQuery,
    /// The configured (ε, δ) is the total, split evenly over the queries.
    SplitTotal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub allocation: Allocation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<PrivacyParams>,
}

/// A named group of columns released as its own dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewConfig {
    pub name: String,
    pub columns: Vec<String>,
}

/// Everything a release needs besides the input data.
#[derive(Clone, Debug, PartialEq)]
pub struct ReleaseConfig {
    pub schema: Arc<DomainSchema>,
    /// `None` leaves times as they are.
    pub bin_width_minutes: Option<u32>,
    pub aggregation_map: Option<AggregationMap>,
    /// Columns the aggregation map applies to; empty means every stop column.
    pub aggregate_columns: Vec<String>,
    pub partition_by: Vec<String>,
    /// Restricts partition attributes to these values. Rows outside are an
    /// error.
    pub partition_values: BTreeMap<String, Vec<String>>,
    /// Empty means one view holding every non-partition column.
    pub views: Vec<ViewConfig>,
    /// Also release each partition's total row count as a separate query.
    pub release_totals: bool,
    pub rounding: Rounding,
    pub budget: BudgetConfig,
    pub seed: Option<u64>,
    pub occupancy_warning: f64,
}

impl ReleaseConfig {
    /// A config with one view over every column, no preprocessing.
    pub fn simple(schema: DomainSchema, params: PrivacyParams) -> Self {
        ReleaseConfig {
            schema: Arc::new(schema),
            bin_width_minutes: None,
            aggregation_map: None,
            aggregate_columns: Vec::new(),
            partition_by: Vec::new(),
            partition_values: BTreeMap::new(),
            views: Vec::new(),
            release_totals: false,
            rounding: Rounding::Nearest,
            budget: BudgetConfig {
                epsilon: params.epsilon(),
                delta: params.delta(),
                allocation: Allocation::PerQuery,
                cap: None,
            },
            seed: None,
            occupancy_warning: super::DEFAULT_OCCUPANCY_WARNING,
        }
    }

    /// Trip release partitioned by date and mode, decoupled into tap-on and
    /// tap-off views. With one date and three modes this yields six
    /// partitions.
    pub fn trip_preset(schema: DomainSchema, modes: &[crate::schema::Mode], params: PrivacyParams) -> Self {
        let mut cfg = ReleaseConfig::simple(schema, params);
        cfg.bin_width_minutes = Some(DEFAULT_BIN_WIDTH_MINUTES);
        cfg.partition_by = vec!["date".into(), "mode".into()];
        cfg.partition_values
            .insert("mode".into(), modes.iter().map(|m| m.as_str().to_string()).collect());
        cfg.views = vec![
            ViewConfig {
                name: "tap_on".into(),
                columns: vec!["tap_on_stop".into(), "tap_on_time".into()],
            },
            ViewConfig {
                name: "tap_off".into(),
                columns: vec!["tap_off_stop".into(), "tap_off_time".into()],
            },
        ];
        cfg
    }

    /// Parse a TOML config. Relative file references resolve against
    /// `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.resolve(base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn params(&self) -> Result<PrivacyParams> {
        PrivacyParams::new(self.budget.epsilon, self.budget.delta)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    schema: SchemaSection,
    #[serde(default)]
    preprocess: PreprocessSection,
    #[serde(default)]
    release: ReleaseSection,
    budget: BudgetConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaSection {
    attributes: Vec<AttributeConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeConfig {
    name: String,
    kind: String,
    #[serde(default)]
    values: Option<Vec<String>>,
    /// One value per line.
    #[serde(default)]
    values_file: Option<PathBuf>,
    #[serde(default)]
    bin_width_minutes: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreprocessSection {
    #[serde(default = "default_bin_width")]
    bin_width_minutes: u32,
    aggregation_map: Option<PathBuf>,
    #[serde(default)]
    aggregate_columns: Vec<String>,
}

fn default_bin_width() -> u32 {
    DEFAULT_BIN_WIDTH_MINUTES
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            bin_width_minutes: DEFAULT_BIN_WIDTH_MINUTES,
            aggregation_map: None,
            aggregate_columns: Vec::new(),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ReleaseSection {
    #[serde(default)]
    partition_by: Vec<String>,
    #[serde(default)]
    partition_values: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    views: Vec<ViewConfig>,
    #[serde(default)]
    release_totals: bool,
    #[serde(default)]
    rounding: Rounding,
    occupancy_warning: Option<f64>,
}

impl ConfigFile {
    fn resolve(self, base: &Path) -> Result<ReleaseConfig> {
        let attributes = self
            .schema
            .attributes
            .into_iter()
            .map(|a| a.resolve(base))
            .collect::<Result<Vec<_>>>()?;
        let schema = DomainSchema::new(attributes)?;
        let has_time = schema.attributes().iter().any(Attribute::is_time);
        let width = self.preprocess.bin_width_minutes;
        if width == 0 || !MINUTES_PER_DAY.is_multiple_of(width) {
            return Err(Error::Config(format!("bin_width_minutes = {width} does not divide 1440")));
        }
        let aggregation_map = match self.preprocess.aggregation_map {
            Some(p) => Some(AggregationMap::read_file(&base.join(p))?),
            None => None,
        };
        let params = PrivacyParams::new(self.budget.epsilon, self.budget.delta)?;
        let mut cfg = ReleaseConfig::simple(schema, params);
        cfg.bin_width_minutes = has_time.then_some(width);
        cfg.aggregation_map = aggregation_map;
        cfg.aggregate_columns = self.preprocess.aggregate_columns;
        cfg.partition_by = self.release.partition_by;
        cfg.partition_values = self.release.partition_values;
        cfg.views = self.release.views;
        cfg.release_totals = self.release.release_totals;
        cfg.rounding = self.release.rounding;
        cfg.budget = self.budget;
        cfg.seed = self.seed;
        if let Some(w) = self.release.occupancy_warning {
            cfg.occupancy_warning = w;
        }
        Ok(cfg)
    }
}

impl AttributeConfig {
    fn resolve(self, base: &Path) -> Result<Attribute> {
        let values = || -> Result<Vec<String>> {
            match (&self.values, &self.values_file) {
                (Some(v), None) => Ok(v.clone()),
                (None, Some(p)) => {
                    let path = base.join(p);
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
                }
                _ => Err(Error::Config(format!(
                    "attribute `{}` needs exactly one of `values` or `values_file`",
                    self.name
                ))),
            }
        };
        let kind = match self.kind.as_str() {
            "categorical" => AttributeKind::Categorical { values: values()? },
            "date" => AttributeKind::Date { values: values()? },
            "mode" => AttributeKind::Mode,
            "time" => AttributeKind::Time {
                bin_width_minutes: self.bin_width_minutes.unwrap_or(1),
            },
            other => return Err(Error::Config(format!("unknown attribute kind `{other}`"))),
        };
        Ok(Attribute { name: self.name, kind })
    }
}
