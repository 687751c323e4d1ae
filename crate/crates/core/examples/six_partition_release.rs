//! One day of synthetic trips released as six partitions: bus, train and
//! ferry, each split into tap-on and tap-off views, at (2, 2^-23) apiece.
//!
//! ```text
//! cargo run --example six_partition_release -- /tmp/bundle
//! ```

use tripdp::datagen::{generate, GeneratorSpec};
use tripdp::mechanisms::PrivacyParams;
use tripdp::pipeline::{release_pipeline_with_diagnostics, ReleaseBundle, ReleaseConfig};
use tripdp::schema::Mode;

fn main() -> tripdp::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let spec = GeneratorSpec::commuter(100_000, 7);
    let trips = generate(&spec)?;
    let params = PrivacyParams::new(2.0, 2f64.powi(-23))?;
    let mut cfg = ReleaseConfig::trip_preset(spec.schema()?, &[Mode::Bus, Mode::Train, Mode::Ferry], params);
    cfg.seed = Some(7);

    let outcome = release_pipeline_with_diagnostics(&trips, &cfg)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for ((label, d), p) in outcome.density.iter().zip(&outcome.bundle.partitions) {
        println!(
            "{label:<42} n={:<6} occupied={:<5} released={:<5} occupancy={:.2e}",
            d.n,
            d.distinct_points,
            p.histogram.len(),
            d.occupancy
        );
    }
    let m = &outcome.bundle.manifest;
    println!("composed: epsilon {}, delta {:e} < 2^-20", m.composed.epsilon, m.composed.delta);

    if let Some(dir) = out {
        outcome.bundle.write_dir(&dir)?;
        let back = ReleaseBundle::read_dir(&dir)?;
        println!("wrote {} partitions to {}", back.partitions.len(), dir.display());
    }
    Ok(())
}
