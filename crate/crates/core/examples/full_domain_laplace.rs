//! The classic Laplace histogram perturbs every domain cell, which stops
//! scaling long before a trip domain does. A fixed dictionary bounds the work
//! but only covers the points it lists.

use std::sync::Arc;

use tripdp::mechanisms::{full_domain_laplace, restricted_dictionary_laplace, Histogram};
use tripdp::rng::RandomSource;
use tripdp::schema::{Attribute, DomainSchema};
use tripdp::Error;

fn attr(name: &str, n: usize) -> Attribute {
    Attribute::categorical(name, (0..n).map(|i| format!("{name}{i}")))
}

fn main() -> tripdp::Result<()> {
    let mut source = RandomSource::for_label(3, "full-domain example");

    let big = Arc::new(DomainSchema::new((0..4).map(|i| attr(&format!("a{i}_"), 1000)).collect())?);
    match full_domain_laplace(&Histogram::new(big), 1.0, &mut source) {
        Err(Error::Infeasible { cells, log2, cap }) => {
            println!("4 x 1000: {cells} cells (2^{log2:.1}) is over the cap of {cap}")
        }
        other => panic!("expected refusal, got {other:?}"),
    }

    let small = Arc::new(DomainSchema::new(vec![attr("stop", 4), attr("hour", 3)])?);
    let h = Histogram::from_counts(small.clone(), [(vec!["stop0", "hour1"], 12), (vec!["stop3", "hour2"], 1)])?;
    let noisy = full_domain_laplace(&h, 1.0, &mut source)?;
    println!("\nfull domain, {} cells:", noisy.len());
    for (p, v) in noisy.iter() {
        println!("  {:?} true {:>2} noisy {v:>7.2}", small.decode(p), h.count(p));
    }

    let dictionary = vec![small.point(&["stop0", "hour1"])?, small.point(&["stop1", "hour1"])?];
    let noisy = restricted_dictionary_laplace(&h, &dictionary, 1.0, &mut source)?;
    println!("\ndictionary of {}:", dictionary.len());
    for (p, v) in noisy.iter() {
        println!("  {:?} noisy {v:.2}", small.decode(p));
    }
    Ok(())
}
