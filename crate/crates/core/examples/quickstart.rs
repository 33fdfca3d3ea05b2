//! Minimal end-to-end use of the library: build an instance, run the exact
//! oracle, and compare it with the dominant-pole estimate.

use tailpole::distkit::SourceDistribution;
use tailpole::scaling::derive_params;
use tailpole::{dpa, exact, roots};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 180 Bernoulli(1/2) sources served 100 per slot.
    let dist = SourceDistribution::from_pmf(&[0.5, 0.5])?;
    let params = derive_params(180, 100, dist)?;

    // Exact stationary tail via the Lindley iteration.
    let q = exact::stationary_lindley(&params)?;
    let exact_tail = exact::tail_exact(&q, 10)?;

    // Dominant-pole estimate from the root inventory.
    let poles = roots::find_poles(&params, 3)?;
    let ff0 = dpa::front_factor_exact(&params, &poles, 0);
    let est = dpa::tail_dpa(&ff0, poles.z0(), 10);

    let rel = (est.value - exact_tail).abs() / exact_tail;
    println!("P(Q > 10) exact     = {exact_tail:.12e}");
    println!("P(Q > 10) dom. pole = {:.12e}  (rel err {rel:.2e})", est.value);
    Ok(())
}
