//! The martingale hierarchy across wired collapses of a path host: the
//! expectation of each hierarchy term, tilted by `exp(-<lambda, beta>)`
//! with `lambda` supported in the lower level, agrees between consecutive
//! levels.
//!
//! ```text
//! cargo run --example martingale_hierarchy
//! ```

use h22lab::graph::{HostExhaustion, HostGraph};
use h22lab::identities::{martingale_step_check, CheckConfig, MartingaleObservable};
use h22lab::sampler::ChainConfig;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let host = HostGraph::build(
        &[1, 2, 3, 4, 5],
        &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)],
    )?;
    let exhaustion = HostExhaustion::new(host, vec![vec![1, 2], vec![1, 2, 3]])?;

    let cfg = CheckConfig {
        chain: ChainConfig {
            seed: 5,
            burn_in: 10_000,
            samples: 60_000,
            thinning: 5,
            ..ChainConfig::default()
        },
        s_draws_per_u: 0,
        z_threshold: 3.0,
    };

    // tilt supported in the lower level
    let mut lambda = DVector::zeros(5);
    lambda[0] = 1.0;

    let singles = [vec![1], vec![3]];
    let pair = vec![1, 3];
    let theta_host = DVector::from_element(5, -0.5);
    let observables = [
        MartingaleObservable::Hierarchy(&singles[0]),
        MartingaleObservable::Hierarchy(&singles[1]),
        MartingaleObservable::Hierarchy(&pair),
        MartingaleObservable::Generating(&theta_host),
    ];

    for obs in observables {
        for v in martingale_step_check(&exhaustion, 1, &obs, &lambda, &cfg)? {
            println!(
                "{:<55} lhs {:.6} rhs {:.6} z {:+.2} -> {}",
                v.name,
                v.lhs.value(),
                v.rhs.value(),
                v.score.value(),
                if v.pass { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
