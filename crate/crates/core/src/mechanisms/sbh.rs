use std::collections::BTreeMap;

use super::histogram::{Histogram, MechanismKind, NoisyHistogram, Rounding};
use super::laplace::{draw, laplace_tail};
use super::PrivacyParams;
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Release threshold `T = 1 + (2/ε)·ln(2/δ)`.
///
/// At (2, 2^-23) this is 17.64 and at (1, 2^-24) it is 35.66.
pub fn sbh_threshold(params: &PrivacyParams) -> f64 {
    1.0 + (2.0 / params.epsilon()) * (2.0 / params.delta()).ln()
}

/// Laplace scale used by SBH, `2/ε`.
pub fn sbh_noise_scale(params: &PrivacyParams) -> f64 {
    2.0 / params.epsilon()
}

/// Probability that a point with true count `count` survives SBH.
/// Count zero is never released.
pub fn release_probability(count: u64, params: &PrivacyParams) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let gap = sbh_threshold(params) - count as f64;
    // P[count + L > T] = P[L > T - count]
    laplace_tail(gap, sbh_noise_scale(params))
}

/// Probability that a point shared by `group_size` records is released.
pub fn group_release_probability(group_size: u64, params: &PrivacyParams) -> Result<f64> {
    if group_size == 0 {
        return Err(Error::param("group size must be at least 1"));
    }
    Ok(release_probability(group_size, params))
}

/// Probability that a count-1 point is released. Equals δ/4.
pub fn singleton_release_probability(params: &PrivacyParams) -> f64 {
    release_probability(1, params)
}

/// SBH with the default presentation (rounded, clamped at 1).
pub fn sbh_release(hist: &Histogram, params: &PrivacyParams, source: &mut RandomSource) -> NoisyHistogram {
    sbh_release_with(hist, params, source, Rounding::Nearest)
}

pub fn sbh_release_with(
    hist: &Histogram,
    params: &PrivacyParams,
    source: &mut RandomSource,
    rounding: Rounding,
) -> NoisyHistogram {
    let threshold = sbh_threshold(params);
    let scale = sbh_noise_scale(params);
    let mut entries = BTreeMap::new();
    for (point, count) in hist.iter() {
        let noisy = count as f64 + draw(source, scale);
        // ties at exactly T are suppressed
        if noisy > threshold {
            entries.insert(point.clone(), rounding.apply(noisy));
        }
    }
    NoisyHistogram {
        schema: hist.schema().clone(),
        entries,
        mechanism: MechanismKind::Sbh {
            params: *params,
            threshold,
        },
        noise_scale: scale,
        rounding,
        seed: source.seed(),
        stream_id: source.stream_id(),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::schema::{Attribute, DomainSchema};

    fn p(eps: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(eps, delta).unwrap()
    }

    fn gender() -> Arc<DomainSchema> {
        Arc::new(DomainSchema::new(vec![Attribute::categorical("gender", ["Male", "Female"])]).unwrap())
    }

    #[test]
    fn threshold_anchors() {
        let t18 = sbh_threshold(&p(2.0, 2f64.powi(-23)));
        assert!((t18 - 17.64).abs() < 0.01, "{t18}");
        assert_eq!(t18.round(), 18.0);
        let t35 = sbh_threshold(&p(1.0, 2f64.powi(-24)));
        assert!((t35 - 35.66).abs() < 0.01, "{t35}");
        assert!((t35 - 35.0).abs() <= 1.0);
        // doubled budget for the gender counts: (2, 2^-24)
        let t = sbh_threshold(&p(2.0, 2f64.powi(-24)));
        assert!((t - 18.33).abs() < 0.01, "{t}");
        let one = sbh_threshold(&PrivacyParams::calibration(1.0, 2.0).unwrap());
        assert_eq!(one, 1.0);
    }

    #[test]
    fn singleton_is_quarter_delta() {
        for (eps, delta) in [(2.0, 2f64.powi(-23)), (1.0, 0.1), (0.5, 1e-9), (3.0, 0.5)] {
            let q = singleton_release_probability(&p(eps, delta));
            assert!((q / (delta / 4.0) - 1.0).abs() < 1e-9, "{eps} {delta}");
            assert!(q <= delta / 2.0);
        }
        let q = singleton_release_probability(&p(2.0, 2f64.powi(-23)));
        assert!((q / 2f64.powi(-25) - 1.0).abs() < 1e-9);
        assert_eq!(singleton_release_probability(&PrivacyParams::calibration(1.7, 2.0).unwrap()), 0.5);
    }

    #[test]
    fn group_probabilities() {
        let params = p(2.0, 2f64.powi(-23));
        let g5 = group_release_probability(5, &params).unwrap();
        let t = sbh_threshold(&params);
        assert!((g5 - 0.5 * (-(t - 5.0)).exp()).abs() < 1e-18);
        assert!((g5 - 1.6e-6).abs() < 0.05e-6, "{g5}");
        assert_eq!(group_release_probability(1, &params).unwrap(), singleton_release_probability(&params));
        assert!(group_release_probability(0, &params).is_err());
        assert!(group_release_probability(10_000, &params).unwrap() > 1.0 - 1e-12);
        let mut prev = 0.0;
        for g in 1..100 {
            let q = group_release_probability(g, &params).unwrap();
            assert!(q > prev || q == 1.0);
            prev = q;
        }
    }

    #[test]
    fn small_single_check_monte_carlo() {
        // ε=1, δ=0.1 -> δ/4 = 0.025
        let params = p(1.0, 0.1);
        assert!((singleton_release_probability(&params) - 0.025).abs() < 1e-12);
        let schema = Arc::new(DomainSchema::new(vec![Attribute::categorical("x", (0..1000).map(|i| i.to_string()))]).unwrap());
        let hist = Histogram::from_points(schema.clone(), (0..1000).map(|i| schema.point_at(i)));
        let mut released = 0usize;
        let reps = 10_000;
        for seed in 0..reps {
            let mut src = RandomSource::new(99, seed);
            released += sbh_release(&hist, &params, &mut src).len();
        }
        let freq = released as f64 / (reps * 1000) as f64;
        assert!((freq - 0.025).abs() < 0.0005, "{freq}");
    }

    #[test]
    fn empty_input_empty_output() {
        let h = Histogram::new(gender());
        let out = sbh_release(&h, &p(1.0, 1e-6), &mut RandomSource::from_seed(1));
        assert!(out.is_empty());
    }

    #[test]
    fn gender_female_suppressed() {
        let params = p(1.0, 2f64.powi(-24));
        let h = Histogram::from_counts(gender(), [(vec!["Male"], 100), (vec!["Female"], 10)]).unwrap();
        let fail = release_probability(10, &params);
        assert!((fail - 1.34e-6).abs() < 0.01e-6, "{fail}");
        for seed in 0..2000 {
            let out = sbh_release(&h, &params, &mut RandomSource::from_seed(seed));
            assert!(out.value_of(&["Male"]).is_some());
            assert!(out.value_of(&["Female"]).is_none());
        }
    }

    #[test]
    fn large_count_released() {
        let params = p(2.0, 2f64.powi(-23));
        let schema = Arc::new(DomainSchema::new(vec![Attribute::categorical("x", ["x"])]).unwrap());
        let h = Histogram::from_counts(schema, [(vec!["x"], 1000)]).unwrap();
        for seed in 0..1000 {
            let out = sbh_release(&h, &params, &mut RandomSource::from_seed(seed));
            assert_eq!(out.len(), 1);
        }
    }

    #[test]
    fn released_values_clear_threshold() {
        let params = p(1.0, 1e-3);
        let t = sbh_threshold(&params);
        let schema = Arc::new(DomainSchema::new(vec![Attribute::categorical("x", (0..50).map(|i| i.to_string()))]).unwrap());
        let mut h = Histogram::new(schema.clone());
        for i in 0..50u64 {
            h.set(schema.point_at(i as u128), i + 1).unwrap();
        }
        for seed in 0..200 {
            let raw = sbh_release_with(&h, &params, &mut RandomSource::from_seed(seed), Rounding::Raw);
            assert!(raw.iter().all(|(_, v)| v > t));
            let rounded = sbh_release(&h, &params, &mut RandomSource::from_seed(seed));
            assert_eq!(raw.len(), rounded.len());
            assert!(rounded.iter().all(|(_, v)| v.fract() == 0.0 && v >= 1.0));
        }
    }

    #[test]
    fn neighbouring_counts_satisfy_approximate_dp() {
        for (eps, delta) in [(1.0, 2f64.powi(-24)), (2.0, 2f64.powi(-23))] {
            let params = p(eps, delta);
            for c in 0..40u64 {
                let a = release_probability(c, &params);
                let b = release_probability(c + 1, &params);
                let k = eps.exp();
                assert!(a <= k * b + delta && b <= k * a + delta, "c={c}");
                // suppression events
                assert!((1.0 - a) <= k * (1.0 - b) + delta && (1.0 - b) <= k * (1.0 - a) + delta);
            }
        }
    }
}
