//! Released bundles: per-partition noisy histograms plus the manifest that
//! discloses how they were produced.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::accountant::{BudgetLedger, Totals};
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismKind, NoisyHistogram, PrivacyParams, Rounding};
use crate::pipeline::GroupKey;
use crate::schema::DomainSchema;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const COUNT_COLUMN: &str = "count";

/// Identifies one released dataset: the partition group and the view.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartitionKey {
    pub groups: GroupKey,
    pub view: String,
}

impl PartitionKey {
    pub fn label(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.groups {
            let _ = write!(s, "{k}={v}/");
        }
        let _ = write!(s, "view={}", self.view);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum PartitionRole {
    Detail,
    /// Noisy row count of the partition labelled `of`.
    Total { of: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReleasedPartition {
    pub label: String,
    pub key: PartitionKey,
    pub role: PartitionRole,
    pub histogram: NoisyHistogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub label: String,
    pub key: PartitionKey,
    #[serde(flatten)]
    pub role: PartitionRole,
    pub file: String,
    pub file_digest: String,
    pub schema: DomainSchema,
    pub epsilon: f64,
    pub delta: f64,
    pub threshold: f64,
    pub noise_scale: f64,
    pub stream_id: u64,
    pub released_points: usize,
}

/// Disclosure record for a release.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mechanism: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub master_seed: u64,
    pub rounding: Rounding,
    pub partitions: Vec<PartitionManifest>,
    pub ledger: BudgetLedger,
    pub composed: Totals,
    /// Build time taken from `SOURCE_DATE_EPOCH`, when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_date_epoch: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReleaseBundle {
    pub manifest: Manifest,
    pub partitions: Vec<ReleasedPartition>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// File name for a partition label: `/` becomes `__`, `=` becomes `-`, `#`
/// becomes `.`, anything else outside `[A-Za-z0-9_.-]` becomes `_`.
pub fn file_name_for(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        match c {
            '/' => out.push_str("__"),
            '=' => out.push('-'),
            '#' => out.push('.'),
            c if c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-') => out.push(c),
            _ => out.push('_'),
        }
    }
    out.push_str(".csv");
    out
}

/// Delimited text for one released histogram: the view's columns plus
/// `count`, rows in domain order.
pub fn render_histogram(h: &NoisyHistogram) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = h.schema().names();
    header.push(COUNT_COLUMN.to_string());
    w.write_record(&header)?;
    for (p, v) in h.iter() {
        let mut rec = h.schema().decode(p);
        rec.push(match h.rounding() {
            Rounding::Nearest => format!("{v:.0}"),
            Rounding::Raw => format!("{v}"),
        });
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))
}

fn parse_histogram(bytes: &[u8], pm: &PartitionManifest, manifest: &Manifest) -> Result<NoisyHistogram> {
    let bad = |msg: String| Error::MalformedBundle(format!("{}: {msg}", pm.file));
    let schema = Arc::new(pm.schema.clone());
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let mut expected = schema.names();
    expected.push(COUNT_COLUMN.to_string());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(bad(format!("header {header:?}, expected {expected:?}")));
    }
    let mut entries = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let n = schema.len();
        let values: Vec<&str> = rec.iter().take(n).collect();
        let point = schema
            .encode(&values)
            .map_err(|(c, m)| bad(format!("row {}: {c}: {m}", i + 1)))?;
        let v: f64 = rec
            .get(n)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("row {}: bad count", i + 1)))?;
        entries.insert(point, v);
    }
    let params = PrivacyParams::new(pm.epsilon, pm.delta).map_err(|e| bad(e.to_string()))?;
    Ok(NoisyHistogram::from_parts(
        schema,
        entries,
        MechanismKind::Sbh {
            params,
            threshold: pm.threshold,
        },
        manifest.rounding,
        manifest.master_seed,
        pm.stream_id,
    ))
}

impl ReleaseBundle {
    pub fn partition(&self, label: &str) -> Option<&ReleasedPartition> {
        self.partitions.iter().find(|p| p.label == label)
    }

    pub fn released_points(&self) -> usize {
        self.partitions.iter().map(|p| p.histogram.len()).sum()
    }

    pub fn manifest_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.manifest)?;
        s.push('\n');
        Ok(s)
    }

    /// Write every partition file and the manifest into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (p, pm) in self.partitions.iter().zip(&self.manifest.partitions) {
            let path = dir.join(&pm.file);
            std::fs::write(&path, render_histogram(&p.histogram)?).map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest_json()?).map_err(|e| Error::io(&path, e))
    }

    /// Load a bundle, checking every partition file against its digest.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::MalformedBundle(format!("{MANIFEST_FILE}: {e}")))?;
        let mut partitions = Vec::with_capacity(manifest.partitions.len());
        for pm in &manifest.partitions {
            let path = dir.join(&pm.file);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let digest = sha256_hex(&bytes);
            if digest != pm.file_digest {
                return Err(Error::MalformedBundle(format!(
                    "{}: digest {digest} does not match manifest {}",
                    pm.file, pm.file_digest
                )));
            }
            partitions.push(ReleasedPartition {
                label: pm.label.clone(),
                key: pm.key.clone(),
                role: pm.role.clone(),
                histogram: parse_histogram(&bytes, pm, &manifest)?,
            });
        }
        Ok(ReleaseBundle { manifest, partitions })
    }
}
