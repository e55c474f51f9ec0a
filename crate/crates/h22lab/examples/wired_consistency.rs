//! Exact consistency of the closed-form Laplace transform across nested
//! wired collapses, and the crossing-weight bookkeeping behind it.
//!
//! ```text
//! cargo run --example wired_consistency
//! ```

use h22lab::graph::{HostExhaustion, HostGraph};
use h22lab::identities::consistency_check;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let host = HostGraph::build(
        &[1, 2, 3, 4, 5, 6],
        &[
            (1, 2, 0.8),
            (2, 3, 1.3),
            (3, 4, 0.5),
            (2, 5, 2.0),
            (5, 6, 0.9),
            (1, 5, 0.4),
        ],
    )?;
    let exhaustion = HostExhaustion::new(host, vec![vec![1, 2], vec![1, 2, 3, 5]])?;

    for n in 1..=exhaustion.num_levels() {
        let g = exhaustion.wired_collapse(n)?;
        println!(
            "level {n}: {:?} wired onto boundary {}",
            exhaustion.level(n)?,
            g.pin_id()
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    println!("\nL_1(lambda) vs L_2(lambda) for parameters supported in level 1:");
    for _ in 0..5 {
        let mut lambda = DVector::zeros(6);
        for &v in exhaustion.level(1)? {
            lambda[exhaustion.host().index_of(v).unwrap()] = rng.random_range(-0.6..3.0);
        }
        let v = consistency_check(&exhaustion, 1, &lambda, 1e-12)?;
        println!(
            "  lambda ({:+.3}, {:+.3}): {:.12} vs {:.12}  rel {:.1e} -> {}",
            lambda[0],
            lambda[1],
            v.lhs.value(),
            v.rhs.value(),
            v.score.value(),
            if v.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
