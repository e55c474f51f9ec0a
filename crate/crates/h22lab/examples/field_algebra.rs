//! Exercise the deterministic field algebra: Laplacian, environment field,
//! Green's function, field reconstruction, and the rank-one decomposition.
//!
//! ```text
//! cargo run --example field_algebra
//! ```

use h22lab::fields::{
    assemble_laplacian, beta_field, green_function, green_rank1_split, h_matrix, reconstruct_u,
};
use h22lab::graph::PinnedGraph;
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.0)])?;
    let u = DVector::from_vec(vec![0.4, -0.7, 0.0]);

    println!("Laplacian at u = {:?}:", u.as_slice());
    println!("{:.4}", assemble_laplacian(&graph, &u));

    let beta = beta_field(&graph, &u);
    println!("environment field beta = {:.6}", beta.values().transpose());

    let green = green_function(&graph, &u)?;
    println!("Green's function (interior block):");
    println!("{:.6}", green.interior_block());

    let residual = green.interior_block() * h_matrix(&graph, &beta)
        - DMatrix::<f64>::identity(2, 2);
    println!("|G H - I|_max = {:.2e}", residual.amax());

    let recovered = reconstruct_u(&graph, &beta)?;
    println!(
        "field recovered from beta, max deviation {:.2e}",
        (recovered - &u).amax()
    );

    let split = green_rank1_split(&graph, &u)?;
    let rebuilt = split.reassemble();
    println!(
        "rank-one split: coupling {:.6}, reassembly deviation {:.2e}",
        split.coupling,
        (rebuilt - green.interior_block()).amax()
    );
    Ok(())
}
