//! 110 people, 100 Male and 10 Female, released as a histogram and a noisy
//! total, each at (1, 2^-24). The Female cell is suppressed, but total minus
//! the released cells recovers it up to noise.
//!
//! ```text
//! cargo run --example gender_example -- 2024
//! ```

use tripdp::accountant::compose;
use tripdp::auditor::{infer_suppressed, NoisyTotal};
use tripdp::cli::gender_trials;
use tripdp::datagen::{gender_fixture, gender_schema};
use tripdp::mechanisms::PrivacyParams;
use tripdp::pipeline::{release_pipeline, ReleaseConfig};

fn main() -> tripdp::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let mut cfg = ReleaseConfig::simple(gender_schema(), PrivacyParams::new(1.0, 2f64.powi(-24))?);
    cfg.release_totals = true;
    cfg.seed = Some(seed);
    let bundle = release_pipeline(&gender_fixture(), &cfg)?;

    let detail = &bundle.partition("view=all").expect("detail").histogram;
    let total = NoisyTotal::from_histogram(&bundle.partition("view=all#total").expect("total").histogram)?;
    for g in ["Male", "Female"] {
        match detail.value_of(&[g]) {
            Some(v) => println!("{g:<7} {v}"),
            None => println!("{g:<7} suppressed"),
        }
    }
    println!("total   {}", total.value);
    let est = infer_suppressed(total, detail);
    println!("suppressed mass ~ {} +/- {:.2}", est.estimate, est.standard_error);
    let c = compose(&bundle.manifest.ledger);
    println!("budget spent: epsilon {}, delta 2^{}", c.epsilon, c.delta.log2());

    let stats = gender_trials(10_000, seed)?;
    println!(
        "over {} releases: mean {:.3}, std {:.3}; Female released {} times",
        stats.trials, stats.mean_estimate, stats.std_estimate, stats.female_released
    );
    Ok(())
}
