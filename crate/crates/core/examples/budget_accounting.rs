//! Exact sequential composition, even splits and caps.

use tripdp::accountant::{compose, split_evenly, BudgetLedger, ExactSum};
use tripdp::mechanisms::PrivacyParams;
use tripdp::Error;

fn main() -> tripdp::Result<()> {
    let mut ledger = BudgetLedger::with_cap(PrivacyParams::new(12.0, 1e-6)?);
    for mode in ["bus", "train", "ferry"] {
        for view in ["tap_on", "tap_off"] {
            ledger = ledger.charge(&format!("{mode}/{view}"), PrivacyParams::new(2.0, 2f64.powi(-23))?)?;
        }
    }
    let t = compose(&ledger);
    println!("six partitions: epsilon {}, delta {:e} (2^{:.3})", t.epsilon, t.delta, t.delta.log2());

    match ledger.charge("one more", PrivacyParams::new(0.1, 1e-9)?) {
        Err(Error::BudgetExceeded { epsilon, .. }) => println!("seventh charge refused: epsilon would be {epsilon}"),
        other => panic!("cap not enforced: {other:?}"),
    }

    let shares = split_evenly(PrivacyParams::new(1.0, 1e-6)?, 7)?;
    let mut split = BudgetLedger::new();
    for (i, s) in shares.iter().enumerate() {
        split = split.charge(&format!("query {i}"), *s)?;
    }
    let back = compose(&split);
    println!("1.0 split seven ways composes back to {} and {:e}", back.epsilon, back.delta);

    let naive: f64 = std::iter::repeat_n(0.1, 10).sum();
    let exact: ExactSum = std::iter::repeat_n(0.1, 10).collect();
    println!("ten 0.1 charges: naive {naive}, exact {}", exact.value());
    Ok(())
}
