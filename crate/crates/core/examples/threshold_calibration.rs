//! Threshold and release probabilities of the stability-based histogram.
//!
//! ```text
//! cargo run --example threshold_calibration
//! ```

use tripdp::mechanisms::{
    group_release_probability, sbh_noise_scale, sbh_threshold, singleton_release_probability, PrivacyParams,
};

fn main() -> tripdp::Result<()> {
    let settings = [(2.0, -23), (1.0, -24), (2.0, -24), (1.0, -20), (0.5, -30)];
    println!("{:>5} {:>8} {:>9} {:>6} {:>12} {:>12}", "eps", "delta", "T", "b", "P[count 1]", "P[count 5]");
    for (eps, k) in settings {
        let p = PrivacyParams::new(eps, 2f64.powi(k))?;
        println!(
            "{eps:>5} {:>8} {:>9.3} {:>6} {:>12.3e} {:>12.3e}",
            format!("2^{k}"),
            sbh_threshold(&p),
            sbh_noise_scale(&p),
            singleton_release_probability(&p),
            group_release_probability(5, &p)?
        );
    }

    // delta = 2 is the degenerate end of the calibration: T = 1
    let edge = PrivacyParams::calibration(2.0, 2.0)?;
    println!("\ncalibration edge (2, 2): T = {}", sbh_threshold(&edge));
    assert!(PrivacyParams::new(2.0, 2.0).is_err());
    Ok(())
}
