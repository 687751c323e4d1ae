//! Worked examples re-run end to end and compared with their published
//! values.

use crate::auditor::{infer_suppressed, NoisyTotal};
use crate::datagen::{gender_fixture, gender_schema, generate, GeneratorSpec};
use crate::error::{Error, Result};
use crate::mechanisms::{group_release_probability, sbh_threshold, singleton_release_probability, PrivacyParams};
use crate::pipeline::{release_pipeline, ReleaseBundle, ReleaseConfig};
use crate::schema::Mode;

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl AnchorCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        AnchorCheck {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Outcome of repeated releases of the gender fixture with a noisy total.
#[derive(Clone, Debug, PartialEq)]
pub struct GenderTrialStats {
    pub trials: u64,
    pub male_released: u64,
    pub female_released: u64,
    /// Mean and sample standard deviation of total minus released cells.
    pub mean_estimate: f64,
    pub std_estimate: f64,
    /// First trial, for illustration: (released Male, noisy total).
    pub first: (Option<f64>, f64),
}

const DETAIL: &str = "view=all";
const TOTAL: &str = "view=all#total";

pub(crate) fn gender_config(seed: u64) -> ReleaseConfig {
    let params = PrivacyParams::new(1.0, 2f64.powi(-24)).expect("static parameters");
    let mut cfg = ReleaseConfig::simple(gender_schema(), params);
    cfg.release_totals = true;
    cfg.seed = Some(seed);
    cfg
}

fn gender_release(seed: u64) -> Result<ReleaseBundle> {
    release_pipeline(&gender_fixture(), &gender_config(seed))
}

/// Release the gender fixture `trials` times (master seeds `seed`,
/// `seed + 1`, ...) and subtract the released cells from the noisy total.
pub fn gender_trials(trials: u64, seed: u64) -> Result<GenderTrialStats> {
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let ds = gender_fixture();
    let mut male_released = 0;
    let mut female_released = 0;
    let (mut mean, mut m2) = (0.0, 0.0);
    let mut first = (None, 0.0);
    for i in 0..trials {
        let bundle = release_pipeline(&ds, &gender_config(seed.wrapping_add(i)))?;
        let detail = &bundle.partition(DETAIL).expect("detail partition").histogram;
        let total = NoisyTotal::from_histogram(&bundle.partition(TOTAL).expect("total partition").histogram)?;
        let male = detail.value_of(&["Male"]);
        male_released += u64::from(male.is_some());
        female_released += u64::from(detail.value_of(&["Female"]).is_some());
        if i == 0 {
            first = (male, total.value);
        }
        let x = infer_suppressed(total, detail).estimate;
        let k = (i + 1) as f64;
        let d = x - mean;
        mean += d / k;
        m2 += d * (x - mean);
    }
    let std = if trials > 1 { (m2 / (trials - 1) as f64).sqrt() } else { 0.0 };
    Ok(GenderTrialStats {
        trials,
        male_released,
        female_released,
        mean_estimate: mean,
        std_estimate: std,
        first,
    })
}

/// Release config text for generated trip data: one view per tap side,
/// partitioned by date and mode, (2, 2^-23) per partition.
pub(crate) fn trip_config_toml(dates: &[String], modes: &str) -> String {
    let dates: Vec<String> = dates.iter().map(|d| format!("\"{d}\"")).collect();
    format!(
        r#"# (2, 2^-23) per released partition.
seed = 1

[[schema.attributes]]
name = "date"
kind = "date"
values = [{dates}]

[[schema.attributes]]
name = "mode"
kind = "mode"

[[schema.attributes]]
name = "tap_on_stop"
kind = "categorical"
values_file = "stops.txt"

[[schema.attributes]]
name = "tap_on_time"
kind = "time"

[[schema.attributes]]
name = "tap_off_stop"
kind = "categorical"
values_file = "stops.txt"

[[schema.attributes]]
name = "tap_off_time"
kind = "time"

[preprocess]
bin_width_minutes = 15
# aggregation_map = "stop_map.csv"

[release]
partition_by = ["date", "mode"]
partition_values = {{ mode = [{modes}] }}
views = [
  {{ name = "tap_on", columns = ["tap_on_stop", "tap_on_time"] }},
  {{ name = "tap_off", columns = ["tap_off_stop", "tap_off_time"] }},
]

[budget]
epsilon = 2.0
delta = 1.1920928955078125e-07
"#,
        dates = dates.join(", ")
    )
}

fn close(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Run every anchor. `trials` sets the size of the gender simulation;
/// its suppression and moment checks tighten as it grows.
pub fn run_anchor_checks(trials: u64, seed: u64) -> Result<Vec<AnchorCheck>> {
    let mut checks = Vec::new();
    let p = |e: f64, k: i32| PrivacyParams::new(e, 2f64.powi(-k));

    let t = sbh_threshold(&p(2.0, 23)?);
    checks.push(AnchorCheck::new(
        "threshold (2, 2^-23)",
        close(t, 17.64, 0.01) && t.round() == 18.0,
        format!("T = {t:.4}, expected 17.64, rounds to 18"),
    ));
    let t = sbh_threshold(&p(1.0, 24)?);
    checks.push(AnchorCheck::new(
        "threshold (1, 2^-24)",
        close(t, 35.0, 1.0),
        format!("T = {t:.4}, expected about 35"),
    ));
    let t = sbh_threshold(&p(2.0, 24)?);
    checks.push(AnchorCheck::new(
        "threshold (2, 2^-24)",
        close(t, 18.0, 1.0),
        format!("T = {t:.4}, expected about 18"),
    ));

    let params = p(2.0, 23)?;
    let single = singleton_release_probability(&params);
    let g5 = group_release_probability(5, &params)?;
    checks.push(AnchorCheck::new(
        "singleton and small-group release",
        single <= 2f64.powi(-24) && g5 < 1e-5,
        format!("P[singleton] = {single:e} (2^{:.1}), P[group of 5] = {g5:e}", single.log2()),
    ));

    let spec = GeneratorSpec::commuter(20_000, seed);
    let modes = [Mode::Bus, Mode::Train, Mode::Ferry];
    let mut cfg = ReleaseConfig::trip_preset(spec.schema()?, &modes, params);
    cfg.seed = Some(seed);
    let bundle = release_pipeline(&generate(&spec)?, &cfg)?;
    let m = &bundle.manifest;
    let delta = m.composed.delta;
    checks.push(AnchorCheck::new(
        "six-partition composition",
        m.partitions.len() == 6 && delta == 6.0 * 2f64.powi(-23) && delta < 2f64.powi(-20) && delta < 1e-6,
        format!(
            "{} partitions, composed epsilon = {}, delta = {delta:e} (2^{:.3})",
            m.partitions.len(),
            m.composed.epsilon,
            delta.log2()
        ),
    ));

    let g = gender_release(seed)?;
    let c = g.manifest.composed;
    checks.push(AnchorCheck::new(
        "two-query gender budget",
        c.epsilon == 2.0 && c.delta == 2f64.powi(-23),
        format!("composed epsilon = {}, delta = 2^{}", c.epsilon, c.delta.log2()),
    ));

    let stats = gender_trials(trials, seed)?;
    let n = stats.trials as f64;
    let q = group_release_probability(10, &p(1.0, 24)?)?;
    let allowed = n * q + 4.0 * (n * q).sqrt() + 1.0;
    checks.push(AnchorCheck::new(
        "gender suppression",
        stats.male_released == stats.trials && (stats.female_released as f64) <= allowed,
        format!(
            "Male released in {}/{} runs; Female released in {} (expected {:.2e}, allowed {:.1})",
            stats.male_released,
            stats.trials,
            stats.female_released,
            n * q,
            allowed
        ),
    ));
    let tol = 4.0 * 4.0 / n.sqrt();
    checks.push(AnchorCheck::new(
        "suppressed-mass estimate",
        close(stats.mean_estimate, 10.0, tol) && close(stats.std_estimate, 4.0, 0.4),
        format!(
            "mean {:.3} (10 +/- {tol:.3}), std {:.3} (4 +/- 0.4); first run released Male {} with total {}",
            stats.mean_estimate,
            stats.std_estimate,
            stats.first.0.map_or("-".into(), |v| v.to_string()),
            stats.first.1
        ),
    ));
    Ok(checks)
}
