//! Write a synthetic trip CSV and read it back against its schema.
//!
//! ```text
//! cargo run --example generate_trips -- trips.csv 100000 42
//! ```

use std::sync::Arc;

use tripdp::datagen::{generate, GeneratorSpec};
use tripdp::dataset::ingest;

fn main() -> tripdp::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "trips.csv".into());
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);

    let spec = GeneratorSpec {
        stop_popularity: 1.2,
        ..GeneratorSpec::commuter(n, seed)
    };
    let trips = generate(&spec)?;
    trips.write_csv_file(path.as_ref())?;
    let back = ingest(path.as_ref(), Arc::new(spec.schema()?))?;
    assert_eq!(back, trips);
    let h = trips.histogram();
    println!("{n} trips written to {path}; {} distinct journeys", h.support_len());
    for t in trips.trips()?.iter().take(3) {
        println!("  {t:?}");
    }
    Ok(())
}
