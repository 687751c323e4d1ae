//! Privacy budget ledger under basic composition.
//!
//! Charges are summed exactly: every `f64` is a dyadic rational, so the sum
//! is kept as an integer multiple of 2^-1074 and rounded once, to nearest,
//! when a total is read out. Tiny δ values never vanish into a large sum.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::PrivacyParams;

/// Exact accumulator for non-negative finite `f64` values.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExactSum {
    // units of 2^-1074
    units: BigUint,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        assert!(x >= 0.0 && x.is_finite(), "ExactSum takes non-negative finite values, got {x}");
        self.units += units_of(x);
    }

    pub fn value(&self) -> f64 {
        units_to_f64(&self.units)
    }

    /// Exact comparison against a single `f64`.
    pub fn exceeds(&self, bound: f64) -> bool {
        self.units > units_of(bound)
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn units_of(x: f64) -> BigUint {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as u32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        BigUint::from(frac)
    } else {
        BigUint::from(frac | (1u64 << 52)) << (exp - 1)
    }
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

fn units_to_f64(units: &BigUint) -> f64 {
    if units.is_zero() {
        return 0.0;
    }
    let bits = units.bits();
    if bits <= 53 {
        // n * 2^-1074 is representable for n < 2^53
        return units.to_u64().unwrap() as f64 * f64::from_bits(1);
    }
    let shift = bits - 53;
    let mut top = (units >> shift).to_u64().unwrap();
    let rem = units - (BigUint::from(top) << shift);
    let half = BigUint::from(1u8) << (shift - 1);
    if rem > half || (rem == half && top & 1 == 1) {
        top += 1;
    }
    let k = shift as i64 - 1074;
    if k > 1023 {
        return f64::INFINITY;
    }
    let k = k as i32;
    if k < -1022 {
        top as f64 * pow2(-1022) * pow2(k + 1022)
    } else {
        top as f64 * pow2(k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
    pub delta: f64,
}

/// Composed (ε, δ) totals. May be (0, 0) for an empty ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
    cap: Option<PrivacyParams>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cap(cap: PrivacyParams) -> Self {
        BudgetLedger {
            entries: Vec::new(),
            cap: Some(cap),
        }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn cap(&self) -> Option<PrivacyParams> {
        self.cap
    }

    /// Returns a new ledger with the charge appended, or an error naming the
    /// totals that would break the cap. `self` is never modified.
    pub fn charge(&self, label: &str, params: PrivacyParams) -> Result<BudgetLedger> {
        if !params.is_guarantee() {
            return Err(Error::param(format!(
                "cannot charge delta = {} (must be below 1)",
                params.delta()
            )));
        }
        let mut next = self.clone();
        next.entries.push(LedgerEntry {
            label: label.to_string(),
            epsilon: params.epsilon(),
            delta: params.delta(),
        });
        if let Some(cap) = self.cap {
            let (eps, delta) = next.exact_totals();
            if eps.exceeds(cap.epsilon()) || delta.exceeds(cap.delta()) {
                return Err(Error::BudgetExceeded {
                    epsilon: eps.value(),
                    delta: delta.value(),
                    cap_epsilon: cap.epsilon(),
                    cap_delta: cap.delta(),
                });
            }
        }
        Ok(next)
    }

    fn exact_totals(&self) -> (ExactSum, ExactSum) {
        (
            self.entries.iter().map(|e| e.epsilon).collect(),
            self.entries.iter().map(|e| e.delta).collect(),
        )
    }
}

/// Basic composition: (Σ ε_j, Σ δ_j), summed exactly and rounded once.
pub fn compose(ledger: &BudgetLedger) -> Totals {
    let (eps, delta) = ledger.exact_totals();
    Totals {
        epsilon: eps.value(),
        delta: delta.value(),
    }
}

/// Divide `total` over `k` partitions so that the shares compose back to
/// `total` exactly.
///
/// Shares are `(ε/k, δ/k)`. When `k` rounded copies of a quotient cannot sum
/// to the total in floating point, the last share carries the exact
/// remainder, which differs from the others by a few ulps.
pub fn split_evenly(total: PrivacyParams, k: usize) -> Result<Vec<PrivacyParams>> {
    if k == 0 {
        return Err(Error::param("cannot split a budget over zero partitions"));
    }
    let eps = split_component(total.epsilon(), k);
    let delta = split_component(total.delta(), k);
    eps.into_iter()
        .zip(delta)
        .map(|(e, d)| PrivacyParams::new(e, d))
        .collect()
}

fn split_component(total: f64, k: usize) -> Vec<f64> {
    let quotient = total / k as f64;
    let composes = |share: f64| {
        let s: ExactSum = std::iter::repeat_n(share, k).collect();
        s.value() == total
    };
    let mut candidates = vec![quotient];
    let (mut up, mut down) = (quotient, quotient);
    for _ in 0..4 {
        up = up.next_up();
        down = down.next_down();
        candidates.push(up);
        candidates.push(down);
    }
    if let Some(share) = candidates.into_iter().find(|&s| s > 0.0 && composes(s)) {
        return vec![share; k];
    }
    // exact remainder: total - (k-1)·quotient is always representable here
    let mut head: ExactSum = std::iter::repeat_n(quotient, k - 1).collect();
    let total_units = units_of(total);
    let rest = &total_units - &head.units;
    head.units = rest;
    let last = head.value();
    let mut shares = vec![quotient; k - 1];
    shares.push(last);
    shares
}
