//! Deterministic verification of the positive-definite-cone integral and of
//! the single-edge conditional-expectation closed form.
//!
//! ```text
//! cargo run --example letac_formula
//! ```

use h22lab::graph::PinnedGraph;
use h22lab::quadrature::{
    cond_exp_closed_form_check, letac_lhs, letac_rhs, QuadratureSpec,
};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = QuadratureSpec::default();

    println!("one interior vertex: quadrature vs (pi/2)^(1/2) e^(-phi theta)/phi");
    let single = PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0)])?;
    for (p, t) in [(1.0, 1.0), (2.0, 1.0), (0.5, 4.0), (8.0, 0.5)] {
        let phi = DVector::from_vec(vec![p]);
        let theta = DVector::from_vec(vec![t]);
        let lhs = letac_lhs(&single, &phi, &theta, &spec)?;
        let rhs = letac_rhs(&phi, &theta)?;
        println!(
            "  phi {p:>4}, theta {t:>4}: {lhs:.9}  vs  {rhs:.9}  (rel {:.1e})",
            (lhs - rhs).abs() / rhs
        );
    }

    println!("\ntwo interior vertices coupled by w = 1:");
    let two = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.0)])?;
    for (p, t) in [([1.0, 1.0], [1.0, 1.0]), ([2.0, 0.7], [0.5, 1.2])] {
        let phi = DVector::from_vec(p.to_vec());
        let theta = DVector::from_vec(t.to_vec());
        let lhs = letac_lhs(&two, &phi, &theta, &spec)?;
        let rhs = letac_rhs(&phi, &theta)?;
        println!(
            "  phi {p:?}, theta {t:?}: {lhs:.8}  vs  {rhs:.8}  (rel {:.1e})",
            (lhs - rhs).abs() / rhs
        );
    }

    println!("\nconditional expectation E[exp(-c e^u)] vs closed form:");
    for (w, c) in [(1.0, 1.5), (1.0, 4.0), (0.3, 2.0), (5.0, 0.7)] {
        let v = cond_exp_closed_form_check(w, c, &spec, 1e-8)?;
        println!(
            "  w {w:>4}, c {c:>4}: quadrature {:.10}, closed {:.10} (rel {:.1e})",
            v.lhs.value(),
            v.rhs.value(),
            v.score.value()
        );
    }
    Ok(())
}
