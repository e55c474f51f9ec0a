//! Deterministic verification of the positive-definite-cone integral and the
//! single-edge conditional-expectation closed form.
//!
//! For one interior vertex the cone `{H_b > 0}` is the half line `b > 0`;
//! for two interior vertices joined by weight `w` it is
//! `b_1 > 0, b_2 > w^2 / (4 b_1)`. Both are mapped onto the unit box with
//! `t = x / (1 - x)` before adaptive integration, which removes the infinite
//! tails and places the boundary singularity of `(det H_b)^{-1/2}` at a box
//! face that the quadrature nodes never touch.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::PinnedGraph;
use crate::integrate::{integrate, integrate_real_line, IntegrateError};
use crate::report::IdentityVerdict;

/// Quadrature failures.
#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("phi and theta must be strictly positive and finite")]
    BadParameters,
    #[error("cone quadrature supports one or two interior vertices, got {0}")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Controls for the adaptive cone quadrature.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    /// Relative tolerance of the integrator.
    pub rel_tol: f64,
    /// Panel budget per one-dimensional pass.
    pub max_segments: usize,
    /// Scales the squared coupling in the boundary-defining determinant
    /// `4 b_1 b_2 - scale * w^2`, moving the cone boundary and the matching
    /// determinant singularity together; the exact cone is 1.0. Sensitivity
    /// knob for mutation tests. A purely geometric shift of the boundary
    /// curve would be invisible here because the integrand vanishes to all
    /// orders at the boundary; misplacing the determinant's zero set is what
    /// an off-by-1% cone actually does to the integral. It does not move the
    /// one-dimensional boundary `b > 0`.
    pub cone_boundary_scale: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_segments: 4000,
            cone_boundary_scale: 1.0,
        }
    }
}

fn check_positive(v: &DVector<f64>) -> Result<(), QuadratureError> {
    if v.iter().all(|&x| x.is_finite() && x > 0.0) {
        Ok(())
    } else {
        Err(QuadratureError::BadParameters)
    }
}

/// Cone integral for one interior vertex:
/// `int_0^inf exp(-b phi^2 - theta^2/(4b)) / sqrt(2b) db`.
pub fn letac_lhs_dim1(phi: f64, theta: f64, spec: &QuadratureSpec) -> Result<f64, QuadratureError> {
    let out = integrate(
        |x| {
            let d = 1.0 - x;
            let b = x / d;
            let v = (-b * phi * phi - theta * theta / (4.0 * b)).exp() / (2.0 * b).sqrt();
            let v = v / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        spec.rel_tol,
        0.0,
        spec.max_segments,
    )?;
    Ok(out.value)
}

/// Cone integral for two interior vertices with interior coupling `w`.
pub fn letac_lhs_dim2(
    w: f64,
    phi: &DVector<f64>,
    theta: &DVector<f64>,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    assert_eq!(phi.len(), 2);
    assert_eq!(theta.len(), 2);
    let scale = spec.cone_boundary_scale;
    let w2_boundary = scale * w * w;
    let inner_tol = spec.rel_tol * 0.1;
    let integrand = move |b1: f64, b2: f64| -> f64 {
        let det = 4.0 * b1 * b2 - w2_boundary;
        if det <= 0.0 {
            return 0.0;
        }
        let quad_phi = 2.0 * b1 * phi[0] * phi[0] - 2.0 * w * phi[0] * phi[1]
            + 2.0 * b2 * phi[1] * phi[1];
        let quad_theta = (2.0 * b2 * theta[0] * theta[0]
            + 2.0 * w * theta[0] * theta[1]
            + 2.0 * b1 * theta[1] * theta[1])
            / det;
        let v = (-0.5 * (quad_phi + quad_theta)).exp() / det.sqrt();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let out = integrate(
        |x| {
            let dx = 1.0 - x;
            let b1 = x / dx;
            let floor = w2_boundary / (4.0 * b1);
            let inner = integrate(
                |y| {
                    let dy = 1.0 - y;
                    let b2 = floor + y / dy;
                    integrand(b1, b2) / (dy * dy)
                },
                0.0,
                1.0,
                inner_tol,
                1e-16,
                spec.max_segments,
            );
            match inner {
                Ok(res) => res.value / (dx * dx),
                Err(_) => f64::NAN,
            }
        },
        0.0,
        1.0,
        spec.rel_tol,
        0.0,
        spec.max_segments,
    )?;
    Ok(out.value)
}

/// Cone integral of `exp(-(<phi, H_b phi> + <theta, H_b^{-1} theta>)/2)
/// (det H_b)^{-1/2}` over `{H_b > 0}`, for a graph with one or two interior
/// vertices. Only interior weights enter.
pub fn letac_lhs(
    graph: &PinnedGraph,
    phi: &DVector<f64>,
    theta: &DVector<f64>,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError> {
    check_positive(phi)?;
    check_positive(theta)?;
    let nv = graph.n_interior();
    if phi.len() != nv || theta.len() != nv {
        return Err(QuadratureError::BadParameters);
    }
    match nv {
        1 => letac_lhs_dim1(phi[0], theta[0], spec),
        2 => letac_lhs_dim2(graph.weight(0, 1), phi, theta, spec),
        other => Err(QuadratureError::UnsupportedDimension(other)),
    }
}

/// Closed form `(pi/2)^{|V|/2} e^{-<phi, theta>} / prod_i phi_i`.
pub fn letac_rhs(phi: &DVector<f64>, theta: &DVector<f64>) -> Result<f64, QuadratureError> {
    check_positive(phi)?;
    check_positive(theta)?;
    if phi.len() != theta.len() {
        return Err(QuadratureError::BadParameters);
    }
    let half = phi.len() as f64 / 2.0;
    let prod: f64 = phi.iter().product();
    Ok((std::f64::consts::PI / 2.0).powf(half) * (-phi.dot(theta)).exp() / prod)
}

/// Reduce a cone integral with general `phi` to the `phi = 1` case: returns
/// the transformed observable weights `phi * theta` (componentwise) and the
/// rescaled coupling matrix `diag(phi) W diag(phi)`.
pub fn scaling_reduction(
    phi: &DVector<f64>,
    theta: &DVector<f64>,
    w: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let theta_new = theta.component_mul(phi);
    let n = w.nrows();
    let w_new = DMatrix::from_fn(n, n, |i, j| phi[i] * w[(i, j)] * phi[j]);
    (theta_new, w_new)
}

/// Compare the quadrature of `E[e^{-c e^t}]` under the single-edge field
/// density with the closed form `e^{w (1 - sqrt(1 + 2c/w))}`.
pub fn cond_exp_closed_form_check(
    w_edge: f64,
    c: f64,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<IdentityVerdict, QuadratureError> {
    assert!(w_edge > 0.0, "edge weight must be positive");
    assert!(c >= 0.0, "coefficient must be non-negative");
    let norm = (w_edge / (2.0 * std::f64::consts::PI)).sqrt();
    let out = integrate_real_line(
        |t| norm * (-c * t.exp() - w_edge * (t.cosh() - 1.0) - 0.5 * t).exp(),
        spec.rel_tol.min(1e-10),
        0.0,
        spec.max_segments,
    )?;
    let closed = (w_edge * (1.0 - (1.0 + 2.0 * c / w_edge).sqrt())).exp();
    Ok(IdentityVerdict::exact(
        format!("conditional expectation, w = {w_edge}, c = {c}"),
        "E[e^{-c e^u}] = e^{w(1 - sqrt(1 + 2c/w))}",
        out.value,
        closed,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn single_edge() -> PinnedGraph {
        PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0)]).unwrap()
    }

    fn two_interior(w: f64) -> PinnedGraph {
        PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, w)]).unwrap()
    }

    #[test]
    fn dim1_matches_closed_form() {
        let spec = QuadratureSpec::default();
        let g = single_edge();
        let phi = DVector::from_vec(vec![1.0]);
        let theta = DVector::from_vec(vec![1.0]);
        let lhs = letac_lhs(&g, &phi, &theta, &spec).unwrap();
        let rhs = letac_rhs(&phi, &theta).unwrap();
        assert_relative_eq!(rhs, (PI / 2.0).sqrt() * (-1.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-7);
        assert!((lhs - 0.46108).abs() < 1e-4);

        let phi = DVector::from_vec(vec![2.0]);
        let lhs = letac_lhs(&g, &phi, &theta, &spec).unwrap();
        let rhs = letac_rhs(&phi, &theta).unwrap();
        assert_relative_eq!(rhs, (PI / 2.0).sqrt() * (-2.0_f64).exp() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-7);
    }

    #[test]
    fn dim2_matches_closed_form() {
        let spec = QuadratureSpec::default();
        let g = two_interior(1.0);
        let phi = DVector::from_vec(vec![1.0, 1.0]);
        let theta = DVector::from_vec(vec![1.0, 1.0]);
        let lhs = letac_lhs(&g, &phi, &theta, &spec).unwrap();
        let rhs = letac_rhs(&phi, &theta).unwrap();
        assert_relative_eq!(rhs, (PI / 2.0) * (-2.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-5);
    }

    #[test]
    fn rhs_limits_and_scaling() {
        let phi = DVector::from_vec(vec![1.0, 1.0]);
        let tiny = DVector::from_vec(vec![1e-12, 1e-12]);
        assert_relative_eq!(
            letac_rhs(&phi, &tiny).unwrap(),
            PI / 2.0,
            max_relative = 1e-9
        );
        // rhs(phi, theta) = rhs(1, phi*theta) / prod(phi)
        let phi = DVector::from_vec(vec![2.0, 3.0]);
        let theta = DVector::from_vec(vec![0.5, 1.5]);
        let ones = DVector::from_vec(vec![1.0, 1.0]);
        let scaled = theta.component_mul(&phi);
        assert_relative_eq!(
            letac_rhs(&phi, &theta).unwrap(),
            letac_rhs(&ones, &scaled).unwrap() / 6.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn scaling_reduction_matrix_identity() {
        // diag(phi) H_b diag(phi) = H_{b'} with b' = phi^2 b and W' rescaled
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.3, 1.3, 0.0]);
        let phi = DVector::from_vec(vec![2.0, 3.0]);
        let theta = DVector::from_vec(vec![1.0, 1.0]);
        let b = DVector::from_vec(vec![0.8, 1.7]);
        let (_, w_new) = scaling_reduction(&phi, &theta, &w);
        let h = DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                2.0 * b[i]
            } else {
                -w[(i, j)]
            }
        });
        let h_new = DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                2.0 * phi[i] * phi[i] * b[i]
            } else {
                -w_new[(i, j)]
            }
        });
        let lhs = DMatrix::from_diagonal(&phi) * h * DMatrix::from_diagonal(&phi);
        assert!((lhs - h_new).amax() < 1e-12);
    }

    #[test]
    fn scaling_reduction_integral_agreement_dim1() {
        let spec = QuadratureSpec::default();
        let phi = 2.0;
        let theta = 1.0;
        // lhs(phi, theta) = lhs(1, phi*theta) / phi (1D; the weight matrix is empty)
        let full = letac_lhs_dim1(phi, theta, &spec).unwrap();
        let reduced = letac_lhs_dim1(1.0, phi * theta, &spec).unwrap() / phi;
        assert_relative_eq!(full, reduced, max_relative = 1e-6);
    }

    #[test]
    fn jacobian_factor_of_the_reduction() {
        // |db/db'| = prod(phi)^{-2}
        let phi = [2.0, 3.0];
        let jac: f64 = phi.iter().map(|p| p * p).product::<f64>().recip();
        assert_relative_eq!(jac, 1.0 / 36.0, max_relative = 1e-15);
    }

    #[test]
    fn cond_exp_examples() {
        let spec = QuadratureSpec::default();
        let v = cond_exp_closed_form_check(1.0, 0.0, &spec, 1e-8).unwrap();
        assert!(v.pass);
        assert_relative_eq!(v.rhs.value(), 1.0, max_relative = 1e-14);

        let v = cond_exp_closed_form_check(1.0, 1.5, &spec, 1e-8).unwrap();
        assert!(v.pass, "rel err = {}", v.score.value());
        assert_relative_eq!(v.rhs.value(), (-1.0_f64).exp(), max_relative = 1e-14);

        let v = cond_exp_closed_form_check(1.0, 4.0, &spec, 1e-8).unwrap();
        assert!(v.pass);
        assert_relative_eq!(v.rhs.value(), (-2.0_f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn perturbed_cone_boundary_breaks_the_identity() {
        let spec = QuadratureSpec {
            cone_boundary_scale: 1.01,
            ..QuadratureSpec::default()
        };
        let g = two_interior(1.0);
        let phi = DVector::from_vec(vec![1.0, 1.0]);
        let theta = DVector::from_vec(vec![1.0, 1.0]);
        let lhs = letac_lhs(&g, &phi, &theta, &spec).unwrap();
        let rhs = letac_rhs(&phi, &theta).unwrap();
        let rel = (lhs - rhs).abs() / rhs;
        assert!(rel > 1e-4, "rel = {rel}");
    }

    #[test]
    fn rejects_unsupported_dimension() {
        let g = PinnedGraph::build(
            &[0, 1, 2, 3],
            0,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let v = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(matches!(
            letac_lhs(&g, &v, &v, &QuadratureSpec::default()),
            Err(QuadratureError::UnsupportedDimension(3))
        ));
    }
}
