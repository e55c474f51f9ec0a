//! Sampler diagnostics on the single-edge graph: the empirical law of `u`
//! against the quadrature CDF, and the calibration of the reported standard
//! errors across independent seeds.
//!
//! ```text
//! cargo run --example sampler_selftest
//! ```

use h22lab::identities::CheckConfig;
use h22lab::sampler::{batch_means, run_chain, ChainConfig};
use h22lab::suites::{ks_distance_single_edge, sampler_selftest_suite, single_edge_graph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = single_edge_graph();
    let chain = ChainConfig {
        seed: 3,
        burn_in: 10_000,
        samples: 100_000,
        thinning: 8,
        ..ChainConfig::default()
    };
    let run = run_chain(&graph, &chain)?;
    println!(
        "chain: acceptance {:.3}, step size {:.3}",
        run.acceptance[0], run.step_sizes[0]
    );
    let values: Vec<f64> = run.samples.iter().map(|u| u[0]).collect();
    let summary = batch_means(&values);
    println!(
        "retained {} samples, effective size {:.0}",
        summary.n, summary.ess
    );
    println!(
        "Kolmogorov-Smirnov distance to the quadrature CDF: {:.5}",
        ks_distance_single_edge(1.0, &values)
    );

    println!("\nfull self-test suite (KS, z-calibration, conditional moments):");
    let cfg = CheckConfig {
        chain,
        s_draws_per_u: 1,
        z_threshold: 3.0,
    };
    for v in sampler_selftest_suite(&cfg)? {
        println!(
            "  {:<50} score {:+.4} -> {}",
            v.name,
            v.score.value(),
            if v.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
