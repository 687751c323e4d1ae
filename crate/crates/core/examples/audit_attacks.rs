//! Attacks that use only the released bundle: parameter inference,
//! suppressed-mass recovery, exhaustion over a feasibility listing, and
//! ruling out candidate datasets.

use std::collections::BTreeMap;

use tripdp::auditor::{audit, zero_exclusion_check, DomainListing};
use tripdp::datagen::{generate, GeneratorSpec};
use tripdp::mechanisms::{Histogram, PrivacyParams};
use tripdp::pipeline::{release_pipeline, ReleaseConfig};
use tripdp::schema::Mode;

fn main() -> tripdp::Result<()> {
    let spec = GeneratorSpec::commuter(60_000, 5);
    let trips = generate(&spec)?;
    let delta = 2f64.powi(-23);
    let mut cfg = ReleaseConfig::trip_preset(spec.schema()?, &[Mode::Bus, Mode::Train, Mode::Ferry], PrivacyParams::new(2.0, delta)?);
    cfg.release_totals = true;
    cfg.seed = Some(5);
    let bundle = release_pipeline(&trips, &cfg)?;

    // a timetable says only one wharf runs a ferry at 04:00
    let ferry = "date=2016-07-25/mode=ferry/view=tap_on";
    let listing = DomainListing {
        partitions: BTreeMap::from([(
            ferry.to_string(),
            vec![
                vec!["ferry-0000".into(), "240".into()],
                vec!["ferry-0000".into(), "480".into()],
                vec!["ferry-0001".into(), "480".into()],
            ],
        )]),
    };
    let report = audit(&bundle, delta, Some(&listing))?;
    print!("{}", report.to_table());

    // which of these could have produced the ferry release?
    let part = &bundle.partition(ferry).expect("ferry partition").histogram;
    let schema = part.schema().clone();
    let mut everything = Histogram::new(schema.clone());
    let mut nothing = Histogram::new(schema.clone());
    for (p, _) in part.iter() {
        everything.set(p.clone(), 30)?;
    }
    nothing.set(schema.point_at(0), 1)?;
    let excluded = zero_exclusion_check(&bundle, ferry, &[everything, nothing])?;
    println!("candidates ruled out: {excluded:?}");
    Ok(())
}
