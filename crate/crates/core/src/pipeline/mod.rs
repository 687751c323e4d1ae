//! Ingestion-side preprocessing and the end-to-end release.
//!
//! The release runs bin → aggregate → partition → decouple, builds a
//! support-only histogram for every (partition, view) pair, charges the
//! accountant for each query, and only then draws noise.

mod bundle;
mod config;
mod transforms;

use std::sync::Arc;

pub use bundle::{
    file_name_for, render_histogram, sha256_hex, Manifest, PartitionKey, PartitionManifest, PartitionRole,
    ReleaseBundle, ReleasedPartition, COUNT_COLUMN, MANIFEST_FILE,
};
pub use config::{Allocation, BudgetConfig, ReleaseConfig, ViewConfig, DEFAULT_BIN_WIDTH_MINUTES};
pub use transforms::{
    aggregate_columns, aggregate_stops, bin_times, decouple, density, partition, project, stop_columns,
    AggregationMap, DensityReport, GroupKey, DEFAULT_OCCUPANCY_WARNING,
};

use crate::accountant::{compose, split_evenly, BudgetLedger};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{sbh_release_with, sbh_threshold, Histogram, PrivacyParams};
use crate::rng::RandomSource;
use crate::schema::{Attribute, DomainSchema};

pub const TOTAL_ATTRIBUTE: &str = "total";
pub const TOTAL_VALUE: &str = "all";

/// One SBH query planned by the pipeline.
struct Query {
    label: String,
    key: PartitionKey,
    role: PartitionRole,
    hist: Histogram,
}

/// Output of [`release_pipeline`] plus curator-side diagnostics that are not
/// part of the published bundle.
#[derive(Clone, Debug)]
pub struct ReleaseOutcome {
    pub bundle: ReleaseBundle,
    /// Density of each released view before noise. Computed from raw data;
    /// not for publication.
    pub density: Vec<(String, DensityReport)>,
    pub warnings: Vec<String>,
}

fn total_schema() -> Arc<DomainSchema> {
    Arc::new(DomainSchema::new(vec![Attribute::categorical(TOTAL_ATTRIBUTE, [TOTAL_VALUE])]).expect("static schema"))
}

/// Run the whole release on `ds`.
pub fn release_pipeline(ds: &Dataset, config: &ReleaseConfig) -> Result<ReleaseBundle> {
    release_pipeline_with_diagnostics(ds, config).map(|o| o.bundle)
}

pub fn release_pipeline_with_diagnostics(ds: &Dataset, config: &ReleaseConfig) -> Result<ReleaseOutcome> {
    let seed = config
        .seed
        .ok_or_else(|| Error::param("release config carries no master seed"))?;
    let base_params = config.params()?;
    if **ds.schema() != *config.schema {
        return Err(Error::Schema("dataset schema differs from the release config schema".into()));
    }

    let mut data = ds.clone();
    if let Some(w) = config.bin_width_minutes {
        data = bin_times(&data, w)?;
    }
    if let Some(map) = &config.aggregation_map {
        data = if config.aggregate_columns.is_empty() {
            aggregate_stops(&data, map)?
        } else {
            let cols: Vec<&str> = config.aggregate_columns.iter().map(String::as_str).collect();
            aggregate_columns(&data, map, &cols)?
        };
    }

    let by: Vec<&str> = config.partition_by.iter().map(String::as_str).collect();
    for name in config.partition_values.keys() {
        if !config.partition_by.contains(name) {
            return Err(Error::Config(format!("partition_values names `{name}`, which is not in partition_by")));
        }
    }
    let views: Vec<ViewConfig> = if config.views.is_empty() {
        vec![ViewConfig {
            name: "all".into(),
            columns: data
                .schema()
                .names()
                .into_iter()
                .filter(|n| !config.partition_by.contains(n))
                .collect(),
        }]
    } else {
        config.views.clone()
    };

    let mut queries = Vec::new();
    let mut density_reports = Vec::new();
    let mut warnings = Vec::new();
    for (groups, part) in partition(&data, &by)? {
        let allowed = groups.iter().all(|(k, v)| {
            config
                .partition_values
                .get(k)
                .is_none_or(|vals| vals.iter().any(|x| x == v))
        });
        if !allowed {
            if !part.is_empty() {
                let label: Vec<String> = groups.iter().map(|(k, v)| format!("{k}={v}")).collect();
                return Err(Error::Config(format!(
                    "{} rows fall in partition {} outside partition_values",
                    part.len(),
                    label.join("/")
                )));
            }
            continue;
        }
        for view in &views {
            let cols: Vec<&str> = view.columns.iter().map(String::as_str).collect();
            let projected = project(&part, &cols)?;
            let key = PartitionKey {
                groups: groups.clone(),
                view: view.name.clone(),
            };
            let label = key.label();
            let report = density(&projected)?;
            if report.occupancy < config.occupancy_warning && !projected.is_empty() {
                warnings.push(format!(
                    "{label}: occupancy {:.3e} below {:.0e}; few points will clear the threshold",
                    report.occupancy, config.occupancy_warning
                ));
            }
            density_reports.push((label.clone(), report));
            let n = projected.len() as u64;
            queries.push(Query {
                label: label.clone(),
                key: key.clone(),
                role: PartitionRole::Detail,
                hist: projected.histogram(),
            });
            if config.release_totals {
                let schema = total_schema();
                let mut hist = Histogram::new(schema.clone());
                hist.set(schema.point_at(0), n)?;
                queries.push(Query {
                    label: format!("{label}#total"),
                    key,
                    role: PartitionRole::Total { of: label },
                    hist,
                });
            }
        }
    }

    let shares: Vec<PrivacyParams> = match config.budget.allocation {
        Allocation::PerQuery => vec![base_params; queries.len()],
        Allocation::SplitTotal if queries.is_empty() => Vec::new(),
        Allocation::SplitTotal => split_evenly(base_params, queries.len())?,
    };
    let mut ledger = match config.budget.cap {
        Some(cap) => BudgetLedger::with_cap(cap),
        None => BudgetLedger::new(),
    };
    for (q, params) in queries.iter().zip(&shares) {
        ledger = ledger.charge(&q.label, *params)?;
    }
    let composed = compose(&ledger);

    let mut partitions = Vec::with_capacity(queries.len());
    let mut manifests = Vec::with_capacity(queries.len());
    for (q, params) in queries.into_iter().zip(shares) {
        let mut source = RandomSource::for_label(seed, &q.label);
        let histogram = sbh_release_with(&q.hist, &params, &mut source, config.rounding);
        let file = file_name_for(&q.label);
        manifests.push(PartitionManifest {
            label: q.label.clone(),
            key: q.key.clone(),
            role: q.role.clone(),
            file_digest: sha256_hex(&render_histogram(&histogram)?),
            file,
            schema: (**histogram.schema()).clone(),
            epsilon: params.epsilon(),
            delta: params.delta(),
            threshold: sbh_threshold(&params),
            noise_scale: histogram.noise_scale(),
            stream_id: source.stream_id(),
            released_points: histogram.len(),
        });
        partitions.push(ReleasedPartition {
            label: q.label,
            key: q.key,
            role: q.role,
            histogram,
        });
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mechanism: "stability-based histogram".to_string(),
        config_digest: None,
        input_digest: None,
        master_seed: seed,
        rounding: config.rounding,
        partitions: manifests,
        ledger,
        composed,
        source_date_epoch: None,
    };
    Ok(ReleaseOutcome {
        bundle: ReleaseBundle { manifest, partitions },
        density: density_reports,
        warnings,
    })
}
