//! How binning time, merging stops and decoupling tap-on from tap-off change
//! the density of a trip histogram.

use tripdp::datagen::{generate, GeneratorSpec};
use tripdp::pipeline::{aggregate_stops, bin_times, decouple, density, AggregationMap, DensityReport};

fn show(name: &str, d: DensityReport) {
    println!(
        "{name:<34} |X| = {:>16}  distinct = {:>6}  rho = {:.2e}  occupancy = {:.2e}",
        d.domain_size, d.distinct_points, d.rho, d.occupancy
    );
}

fn main() -> tripdp::Result<()> {
    let spec = GeneratorSpec::commuter(50_000, 11);
    let trips = generate(&spec)?;
    show("raw, 1-minute times", density(&trips)?);
    for w in [15, 60] {
        show(&format!("{w}-minute bins"), density(&bin_times(&trips, w)?)?);
    }
    let hourly = bin_times(&trips, 60)?;
    let map = AggregationMap::blocks(&spec.stops(), 10, "area-");
    let coarse = aggregate_stops(&hourly, &map)?;
    show("60-minute bins, 10 stops per area", density(&coarse)?);
    let (on, off) = decouple(&coarse)?;
    show("  tap-on view", density(&on)?);
    show("  tap-off view", density(&off)?);
    Ok(())
}
