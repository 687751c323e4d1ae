use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An (epsilon, delta) privacy guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    epsilon: f64,
    delta: f64,
}

impl TryFrom<RawParams> for PrivacyParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        PrivacyParams::new(raw.epsilon, raw.delta)
    }
}

impl PrivacyParams {
    /// Requires `epsilon > 0` (finite) and `0 < delta < 1`.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    /// Parameters for threshold arithmetic only, admitting `0 < delta <= 2`.
    ///
    /// At `delta = 2` the threshold collapses to 1, the boundary case of the
    /// calibration. Such values are not a privacy guarantee and the
    /// accountant refuses them.
    pub fn calibration(epsilon: f64, delta: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(Error::param(format!("delta must lie in (0, 2], got {delta}")));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// True when this is a genuine approximate-DP guarantee (delta < 1).
    pub fn is_guarantee(&self) -> bool {
        self.delta < 1.0
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PrivacyParams::new(1.0, 0.5).is_ok());
        assert!(PrivacyParams::new(0.0, 0.5).is_err());
        assert!(PrivacyParams::new(-1.0, 0.5).is_err());
        assert!(PrivacyParams::new(f64::INFINITY, 0.5).is_err());
        assert!(PrivacyParams::new(1.0, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, f64::NAN).is_err());
        assert!(PrivacyParams::calibration(1.0, 2.0).is_ok());
        assert!(PrivacyParams::calibration(1.0, 2.5).is_err());
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<PrivacyParams>(r#"{"epsilon":1.0,"delta":1e-6}"#).is_ok());
        assert!(serde_json::from_str::<PrivacyParams>(r#"{"epsilon":1.0,"delta":2.0}"#).is_err());
    }
}
