//! Inference attacks against a released bundle.
//!
//! The auditor sees only what was published (partition files and manifest)
//! plus declared side information: a listing of feasible domain points, an
//! assumed δ, candidate input histograms. It never touches raw data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{Histogram, MechanismKind, NoisyHistogram};
use crate::pipeline::{PartitionRole, ReleaseBundle};
use crate::schema::Point;

/// A noisy total and the Laplace scale of the noise on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisyTotal {
    pub value: f64,
    pub noise_scale: f64,
}

impl NoisyTotal {
    /// The single released value of a total-count histogram.
    pub fn from_histogram(h: &NoisyHistogram) -> Result<Self> {
        match h.len() {
            1 => Ok(NoisyTotal {
                value: h.sum(),
                noise_scale: h.noise_scale(),
            }),
            0 => Err(Error::NoData("total view released nothing".into())),
            n => Err(Error::param(format!("total view has {n} cells, expected 1"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuppressedEstimate {
    pub cell: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub released_cells: usize,
}

/// Estimate the mass hidden by suppression: noisy total minus the sum of the
/// released detail counts.
///
/// The standard error uses the exact Laplace variance 2b² for the total and
/// for each of the k released detail values.
pub fn infer_suppressed(total: NoisyTotal, detail: &NoisyHistogram) -> SuppressedEstimate {
    let k = detail.len();
    let var_total = 2.0 * total.noise_scale * total.noise_scale;
    let var_detail = 2.0 * detail.noise_scale() * detail.noise_scale();
    SuppressedEstimate {
        cell: String::new(),
        estimate: total.value - detail.sum(),
        standard_error: (var_total + k as f64 * var_detail).sqrt(),
        released_cells: k,
    }
}

/// Feasible domain points per partition label, as text values in the
/// partition's column order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainListing {
    pub partitions: BTreeMap<String, Vec<Vec<String>>>,
}

impl DomainListing {
    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionFlag {
    pub partition: String,
    /// Value of the slicing attribute, or `*` when the view has no time column.
    pub slice: String,
    pub point: Vec<String>,
    /// Released value of the only feasible point, if it was released.
    pub released: Option<f64>,
    pub constraint: String,
}

/// Flag every time slice of a partition in which exactly one domain point is
/// feasible. There the slice total is that point's count: a released value
/// pins it, and suppression reveals it is below the threshold.
///
/// Slices are keyed by the view's first time attribute; a view without one
/// is a single slice.
pub fn detect_exhaustion(bundle: &ReleaseBundle, listing: &DomainListing) -> Result<Vec<ExhaustionFlag>> {
    let mut flags = Vec::new();
    for (label, points) in &listing.partitions {
        let part = bundle
            .partition(label)
            .ok_or_else(|| Error::param(format!("listing names unknown partition `{label}`")))?;
        let h = &part.histogram;
        let schema = h.schema();
        let slice_col = schema.attributes().iter().position(|a| a.is_time());
        let mut slices: BTreeMap<String, BTreeSet<Point>> = BTreeMap::new();
        for values in points {
            let p = schema
                .point(values)
                .map_err(|e| Error::param(format!("listing for `{label}`: {e}")))?;
            let slice = match slice_col {
                Some(c) => values[c].clone(),
                None => "*".to_string(),
            };
            slices.entry(slice).or_default().insert(p);
        }
        for (slice, feasible) in slices {
            if feasible.len() != 1 {
                continue;
            }
            let p = feasible.into_iter().next().unwrap();
            let released = h.get(&p);
            let values = schema.decode(&p);
            let constraint = match (released, h.threshold_used()) {
                (Some(v), _) => format!("only feasible point; released value {v} pins the slice total"),
                (None, Some(t)) => format!("only feasible point; suppressed, so its count is below {t:.2}"),
                (None, None) => "only feasible point; not released".to_string(),
            };
            flags.push(ExhaustionFlag {
                partition: label.clone(),
                slice,
                point: values,
                released,
                constraint,
            });
        }
    }
    Ok(flags)
}

/// Threshold formula `T = offset + (multiplier/ε)·ln(numerator/δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFormula {
    pub offset: f64,
    pub multiplier: f64,
    pub numerator: f64,
}

impl Default for ThresholdFormula {
    /// `1 + (2/ε)·ln(2/δ)`, the formula the mechanism uses.
    fn default() -> Self {
        ThresholdFormula {
            offset: 1.0,
            multiplier: 2.0,
            numerator: 2.0,
        }
    }
}

impl ThresholdFormula {
    pub fn threshold(&self, epsilon: f64, delta: f64) -> f64 {
        self.offset + self.multiplier / epsilon * (self.numerator / delta).ln()
    }

    /// ε that yields threshold `t` at the given δ; `None` when no positive ε does.
    pub fn solve_epsilon(&self, t: f64, delta: f64) -> Option<f64> {
        let eps = self.multiplier * (self.numerator / delta).ln() / (t - self.offset);
        (eps > 0.0 && eps.is_finite()).then_some(eps)
    }
}

/// Fewer released values than this within one unit of the minimum marks the
/// threshold estimate as low-confidence.
pub const NEAR_MINIMUM_SUPPORT: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterInference {
    /// Minimum released value: an upper bound on the threshold.
    pub threshold: f64,
    pub epsilon: Option<f64>,
    pub assumed_delta: f64,
    pub released_values: usize,
    /// Released values within one unit of the minimum.
    pub near_minimum: usize,
    pub low_confidence: bool,
}

/// Estimate the threshold as the smallest released value across all SBH
/// partitions, then solve the threshold formula for ε at `assumed_delta`.
pub fn infer_parameters(bundle: &ReleaseBundle, assumed_delta: f64) -> Result<ParameterInference> {
    infer_parameters_with(bundle, assumed_delta, ThresholdFormula::default())
}

pub fn infer_parameters_with(
    bundle: &ReleaseBundle,
    assumed_delta: f64,
    formula: ThresholdFormula,
) -> Result<ParameterInference> {
    let histograms: Vec<&NoisyHistogram> = bundle.partitions.iter().map(|p| &p.histogram).collect();
    infer_from_histograms(&histograms, assumed_delta, formula)
}

pub fn infer_from_histograms(
    histograms: &[&NoisyHistogram],
    assumed_delta: f64,
    formula: ThresholdFormula,
) -> Result<ParameterInference> {
    if !(assumed_delta > 0.0) {
        return Err(Error::param(format!("assumed delta must be positive, got {assumed_delta}")));
    }
    let values: Vec<f64> = histograms
        .iter()
        .filter(|h| matches!(h.mechanism(), MechanismKind::Sbh { .. }))
        .flat_map(|h| h.iter().map(|(_, v)| v))
        .collect();
    let threshold = values
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::NoData("bundle has no released values".into()))?;
    let near_minimum = values.iter().filter(|&&v| v <= threshold + 1.0).count();
    Ok(ParameterInference {
        threshold,
        epsilon: formula.solve_epsilon(threshold, assumed_delta),
        assumed_delta,
        released_values: values.len(),
        near_minimum,
        low_confidence: near_minimum < NEAR_MINIMUM_SUPPORT,
    })
}

/// Indices of candidates ruled out by the release: SBH never releases a point
/// absent from its input, so a candidate with zero count at any released
/// point cannot have produced it.
pub fn excluded_by_release(released: &NoisyHistogram, candidates: &[Histogram]) -> Vec<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| released.iter().any(|(p, _)| c.count(p) == 0))
        .map(|(i, _)| i)
        .collect()
}

/// [`excluded_by_release`] against one partition of a bundle.
pub fn zero_exclusion_check(bundle: &ReleaseBundle, partition: &str, candidates: &[Histogram]) -> Result<Vec<usize>> {
    let part = bundle
        .partition(partition)
        .ok_or_else(|| Error::param(format!("no partition `{partition}`")))?;
    Ok(excluded_by_release(&part.histogram, candidates))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub suppressed_estimates: Vec<SuppressedEstimate>,
    pub exhaustion_flags: Vec<ExhaustionFlag>,
    pub inferred_threshold: Option<f64>,
    pub inferred_epsilon: Option<f64>,
    pub assumed_delta: f64,
    pub threshold_low_confidence: bool,
    pub notes: Vec<String>,
}

/// Run every attack the bundle supports.
pub fn audit(bundle: &ReleaseBundle, assumed_delta: f64, listing: Option<&DomainListing>) -> Result<AuditReport> {
    let inference = infer_parameters(bundle, assumed_delta)?;
    let mut suppressed_estimates = Vec::new();
    for part in &bundle.partitions {
        if let PartitionRole::Total { of } = &part.role {
            let detail = bundle
                .partition(of)
                .ok_or_else(|| Error::MalformedBundle(format!("total `{}` refers to missing `{of}`", part.label)))?;
            let Ok(total) = NoisyTotal::from_histogram(&part.histogram) else {
                continue;
            };
            let mut est = infer_suppressed(total, &detail.histogram);
            est.cell = format!("{of}: suppressed cells");
            suppressed_estimates.push(est);
        }
    }
    let exhaustion_flags = match listing {
        Some(l) => detect_exhaustion(bundle, l)?,
        None => Vec::new(),
    };
    let mut notes = vec![
        "threshold estimate is the minimum released value (an upper bound on the true threshold)".to_string(),
        format!(
            "epsilon solves T = 1 + (2/eps) ln(2/delta) at the assumed delta = {assumed_delta:e}"
        ),
    ];
    if inference.low_confidence {
        notes.push(format!(
            "only {} released value(s) lie within 1 of the minimum; the threshold bound may be loose",
            inference.near_minimum
        ));
    }
    Ok(AuditReport {
        suppressed_estimates,
        exhaustion_flags,
        inferred_threshold: Some(inference.threshold),
        inferred_epsilon: inference.epsilon,
        assumed_delta,
        threshold_low_confidence: inference.low_confidence,
        notes,
    })
}

impl AuditReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "parameter inference (assumed delta = {:e})", self.assumed_delta);
        match self.inferred_threshold {
            Some(t) => {
                let _ = writeln!(
                    s,
                    "  threshold <= {t}{}",
                    if self.threshold_low_confidence { "  (low confidence)" } else { "" }
                );
            }
            None => s.push_str("  threshold: n/a\n"),
        }
        match self.inferred_epsilon {
            Some(e) => {
                let _ = writeln!(s, "  epsilon   ~ {e:.4}");
            }
            None => s.push_str("  epsilon: n/a\n"),
        }
        if !self.suppressed_estimates.is_empty() {
            let _ = writeln!(s, "suppressed mass");
            let w = self.suppressed_estimates.iter().map(|e| e.cell.len()).max().unwrap_or(0);
            let _ = writeln!(s, "  {:<w$} {:>10} {:>8} {:>6}", "cell", "estimate", "stderr", "k");
            for e in &self.suppressed_estimates {
                let _ = writeln!(
                    s,
                    "  {:<w$} {:>10.2} {:>8.2} {:>6}",
                    e.cell, e.estimate, e.standard_error, e.released_cells
                );
            }
        }
        if !self.exhaustion_flags.is_empty() {
            let _ = writeln!(s, "domain exhaustion");
            for f in &self.exhaustion_flags {
                let _ = writeln!(s, "  {} @ {} -> {}: {}", f.partition, f.slice, f.point.join("/"), f.constraint);
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
