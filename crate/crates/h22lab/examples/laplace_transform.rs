//! Monte Carlo Laplace transform of the environment field against the
//! closed form, plain and generalized.
//!
//! ```text
//! cargo run --example laplace_transform
//! ```

use h22lab::fields::{green_function, ScalingParams};
use h22lab::identities::generating_term;
use h22lab::measure::{beta_tilt, laplace_closed_form};
use h22lab::graph::PinnedGraph;
use h22lab::sampler::{mc_expectation, ChainConfig};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.0)])?;
    let cfg = ChainConfig {
        seed: 42,
        burn_in: 10_000,
        samples: 60_000,
        thinning: 5,
        ..ChainConfig::default()
    };

    println!("plain transform E[exp(-<lambda, beta>)] on the 3-vertex path:");
    for lam_raw in [vec![3.0, 0.0], vec![0.5, 1.5], vec![-0.4, 2.0]] {
        let lambda = ScalingParams::from_interior(&graph, &DVector::from_vec(lam_raw.clone()))?;
        let est = mc_expectation(&graph, &cfg, 0, |fc| {
            (-beta_tilt(&graph, &lambda, fc.u())).exp()
        })?;
        let exact = laplace_closed_form(&graph, &lambda);
        println!(
            "  lambda {:>12?}: mc {:.6} +- {:.1e}, closed form {:.6}, z {:+.2}",
            lam_raw,
            est.mean,
            est.std_error,
            exact,
            est.z_score(exact)
        );
    }

    println!("\ngeneralized transform with the observable weights theta:");
    let theta = DVector::from_vec(vec![-1.0, -0.5, -0.2]);
    let lambda = ScalingParams::from_interior(&graph, &DVector::from_vec(vec![1.0, 0.5]))?;
    let est = mc_expectation(&graph, &cfg, 0, |fc| {
        let green = green_function(&graph, fc.u()).unwrap();
        generating_term(&theta, fc.u(), &green) * (-beta_tilt(&graph, &lambda, fc.u())).exp()
    })?;
    let exact = laplace_closed_form(&graph, &lambda) * theta.dot(&lambda.sqrt_one_plus()).exp();
    println!(
        "  mc {:.6} +- {:.1e}, closed form {:.6}, z {:+.2}",
        est.mean,
        est.std_error,
        exact,
        est.z_score(exact)
    );
    Ok(())
}
