use std::collections::{BTreeMap, BTreeSet};

use super::histogram::{Histogram, MechanismKind, NoisyHistogram, Rounding};
use super::laplace::draw;
use super::params::check_epsilon;
use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::schema::Point;

/// Largest domain [`full_domain_laplace`] will enumerate.
pub const DEFAULT_FEASIBILITY_CAP: u128 = 10_000_000;

/// Laplace(1/ε) noise on every cell of the histogram's domain, zero counts
/// included. Fails with [`Error::Infeasible`] above [`DEFAULT_FEASIBILITY_CAP`].
pub fn full_domain_laplace(hist: &Histogram, epsilon: f64, source: &mut RandomSource) -> Result<NoisyHistogram> {
    full_domain_laplace_capped(hist, epsilon, source, DEFAULT_FEASIBILITY_CAP)
}

pub fn full_domain_laplace_capped(
    hist: &Histogram,
    epsilon: f64,
    source: &mut RandomSource,
    cap: u128,
) -> Result<NoisyHistogram> {
    check_epsilon(epsilon)?;
    let schema = hist.schema();
    let cells = schema.domain_size()?;
    if cells > cap {
        return Err(Error::Infeasible {
            cells,
            log2: (cells as f64).log2(),
            cap,
        });
    }
    let scale = 1.0 / epsilon;
    let radices: Vec<u32> = schema.attributes().iter().map(|a| a.range_size()).collect();
    let mut coords = vec![0u32; radices.len()];
    let mut entries = Vec::with_capacity(cells as usize);
    for _ in 0..cells {
        let point = Point(coords.clone());
        let value = hist.count(&point) as f64 + draw(source, scale);
        entries.push((point, value));
        // odometer step, last attribute fastest
        for (c, &r) in coords.iter_mut().zip(&radices).rev() {
            *c += 1;
            if *c < r {
                break;
            }
            *c = 0;
        }
    }
    Ok(laplace_output(hist, entries.into_iter().collect(), epsilon, source))
}

/// Laplace(1/ε) noise on exactly the points of `dictionary`, present in the
/// data or not. Points outside the dictionary never appear in the output.
pub fn restricted_dictionary_laplace(
    hist: &Histogram,
    dictionary: &[Point],
    epsilon: f64,
    source: &mut RandomSource,
) -> Result<NoisyHistogram> {
    check_epsilon(epsilon)?;
    if dictionary.is_empty() {
        return Err(Error::param("dictionary is empty"));
    }
    let schema = hist.schema();
    if let Some(bad) = dictionary.iter().find(|p| !schema.contains(p)) {
        return Err(Error::param(format!("dictionary point {:?} is outside the schema", bad.0)));
    }
    let scale = 1.0 / epsilon;
    let points: BTreeSet<&Point> = dictionary.iter().collect();
    let entries = points
        .into_iter()
        .map(|p| (p.clone(), hist.count(p) as f64 + draw(source, scale)))
        .collect();
    Ok(laplace_output(hist, entries, epsilon, source))
}

fn laplace_output(
    hist: &Histogram,
    entries: BTreeMap<Point, f64>,
    epsilon: f64,
    source: &RandomSource,
) -> NoisyHistogram {
    NoisyHistogram {
        schema: hist.schema().clone(),
        entries,
        mechanism: MechanismKind::Laplace { epsilon },
        noise_scale: 1.0 / epsilon,
        rounding: Rounding::Raw,
        seed: source.seed(),
        stream_id: source.stream_id(),
    }
}
