//! The Ward identities: alternating moments of `(u, s)` whose expectation is
//! exactly one, and the exponential identity.
//!
//! ```text
//! cargo run --example ward_identities
//! ```

use h22lab::graph::PinnedGraph;
use h22lab::identities::{exp_ward_check, ward_identity_check, CheckConfig};
use h22lab::sampler::ChainConfig;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph =
        PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])?;
    let cfg = CheckConfig {
        chain: ChainConfig {
            seed: 7,
            burn_in: 10_000,
            samples: 80_000,
            thinning: 3,
            ..ChainConfig::default()
        },
        s_draws_per_u: 4,
        z_threshold: 3.0,
    };

    for indices in [vec![0], vec![0, 1], vec![0, 1, 2]] {
        let v = ward_identity_check(&graph, &indices, &cfg)?;
        println!(
            "{}: estimate {:.5} (target 1), z {:+.2} -> {}",
            v.name,
            v.lhs.value(),
            v.score.value(),
            if v.pass { "ok" } else { "FAIL" }
        );
    }

    let theta = DVector::from_vec(vec![-0.8, -0.5, -0.3]);
    for v in exp_ward_check(&graph, &theta, &cfg)? {
        println!(
            "{}: estimate {:.5} (target {:.5}), z {:+.2} -> {}",
            v.name,
            v.lhs.value(),
            v.rhs.value(),
            v.score.value(),
            if v.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
