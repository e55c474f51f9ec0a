//! Deterministic field algebra on pinned graphs.
//!
//! Everything here is a pure function of its inputs: the weighted Laplacian
//! `A(u)` with conductances `W_ij e^{u_i+u_j}`, the environment field
//! `beta_i = (1/2) sum_j W_ij e^{u_j-u_i}`, the pin-clamped Green's function,
//! the matrix `H_b = 2 b_i delta_ij - W_ij` together with the reconstruction
//! of `u` from `beta`, the local scaling transformation of `(u, s)` and of
//! the weights, and the rank-one decomposition of the Green's function when
//! the pin hangs off a single vertex.
//!
//! Vectors over the full vertex set follow the graph's internal order
//! (interior first, pin last); vectors over the interior are the leading
//! block of that order.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::graph::PinnedGraph;

/// Failures of field-level operations.
#[derive(Debug, Error)]
pub enum FieldError {
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("pinned entry must be zero, got {0}")]
    PinNotZero(f64),
    #[error("scaling entry {value} at index {idx} is not > -1")]
    ScalingOutOfRange { idx: usize, value: f64 },
    #[error("beta outside the support: H_beta is not positive definite")]
    OutsideSupportNotPd,
    #[error("beta outside the support: solve produced a non-positive entry")]
    OutsideSupportNonPositive,
    #[error("pin must have exactly one neighbor, found {0}")]
    PinDegreeNotOne(usize),
    #[error("need at least two interior vertices, found {0}")]
    TooFewInterior(usize),
    #[error("symmetric factorization failed on a matrix that should be positive definite")]
    Factorization,
}

/// A point `(u, s)` of the field space, with both components clamped to zero
/// at the pin.
#[derive(Debug, Clone)]
pub struct FieldConfig {
    u: DVector<f64>,
    s: DVector<f64>,
}

impl FieldConfig {
    /// Validate a `(u, s)` pair against a graph.
    pub fn new(graph: &PinnedGraph, u: DVector<f64>, s: DVector<f64>) -> Result<Self, FieldError> {
        let n = graph.n_total();
        for v in [&u, &s] {
            if v.len() != n {
                return Err(FieldError::DimensionMismatch {
                    got: v.len(),
                    expected: n,
                });
            }
            if v[graph.pin_index()] != 0.0 {
                return Err(FieldError::PinNotZero(v[graph.pin_index()]));
            }
        }
        Ok(Self { u, s })
    }

    /// The zero configuration.
    pub fn zeros(graph: &PinnedGraph) -> Self {
        let n = graph.n_total();
        Self {
            u: DVector::zeros(n),
            s: DVector::zeros(n),
        }
    }

    pub(crate) fn from_parts_unchecked(u: DVector<f64>, s: DVector<f64>) -> Self {
        Self { u, s }
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }
}

/// The environment field over the interior vertices.
#[derive(Debug, Clone)]
pub struct BetaField {
    values: DVector<f64>,
}

impl BetaField {
    /// Wrap raw interior values.
    pub fn new(graph: &PinnedGraph, values: DVector<f64>) -> Result<Self, FieldError> {
        if values.len() != graph.n_interior() {
            return Err(FieldError::DimensionMismatch {
                got: values.len(),
                expected: graph.n_interior(),
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// The pin-clamped Green's function: zero row and column at the pin, and a
/// symmetric positive definite interior block.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    g: DMatrix<f64>,
    pin: usize,
}

impl GreenMatrix {
    /// The full matrix over all vertices.
    pub fn full(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Single entry.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    /// Index of the pinned (zero) row/column.
    pub fn pin_index(&self) -> usize {
        self.pin
    }

    /// The interior block as an owned matrix.
    pub fn interior_block(&self) -> DMatrix<f64> {
        self.g.view((0, 0), (self.pin, self.pin)).into_owned()
    }

    /// The quadratic form `<theta, G theta>` over the full vertex set.
    pub fn quad_form(&self, theta: &DVector<f64>) -> f64 {
        theta.dot(&(&self.g * theta))
    }

    /// Scale every entry; diagnostic hook for sensitivity tests.
    pub fn scaled(&self, factor: f64) -> GreenMatrix {
        GreenMatrix {
            g: &self.g * factor,
            pin: self.pin,
        }
    }
}

/// Componentwise scaling parameters over the full vertex set: every entry is
/// greater than -1 and the pin entry is exactly zero.
#[derive(Debug, Clone)]
pub struct ScalingParams {
    values: DVector<f64>,
}

impl ScalingParams {
    /// Validate a parameter vector over the full vertex set.
    pub fn new(graph: &PinnedGraph, values: DVector<f64>) -> Result<Self, FieldError> {
        if values.len() != graph.n_total() {
            return Err(FieldError::DimensionMismatch {
                got: values.len(),
                expected: graph.n_total(),
            });
        }
        if values[graph.pin_index()] != 0.0 {
            return Err(FieldError::PinNotZero(values[graph.pin_index()]));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v > -1.0) {
                return Err(FieldError::ScalingOutOfRange { idx, value: v });
            }
        }
        Ok(Self { values })
    }

    /// All-zero parameters (the identity transformation).
    pub fn zeros(graph: &PinnedGraph) -> Self {
        Self {
            values: DVector::zeros(graph.n_total()),
        }
    }

    /// Parameters from interior values, pin entry set to zero.
    pub fn from_interior(graph: &PinnedGraph, interior: &DVector<f64>) -> Result<Self, FieldError> {
        if interior.len() != graph.n_interior() {
            return Err(FieldError::DimensionMismatch {
                got: interior.len(),
                expected: graph.n_interior(),
            });
        }
        let mut values = DVector::zeros(graph.n_total());
        values.rows_mut(0, interior.len()).copy_from(interior);
        Self::new(graph, values)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Componentwise `sqrt(1 + lambda)`.
    pub fn sqrt_one_plus(&self) -> DVector<f64> {
        self.values.map(|v| (1.0 + v).sqrt())
    }

    /// True when every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn assert_pinned_field(graph: &PinnedGraph, u: &DVector<f64>) {
    assert_eq!(u.len(), graph.n_total(), "field length mismatch");
    assert_eq!(u[graph.pin_index()], 0.0, "field not clamped at the pin");
}

/// The weighted (negative) graph Laplacian with conductances
/// `W_ij e^{u_i+u_j}`, over the full vertex set. Rows sum to zero.
pub fn assemble_laplacian(graph: &PinnedGraph, u: &DVector<f64>) -> DMatrix<f64> {
    assert_pinned_field(graph, u);
    let n = graph.n_total();
    let mut a = DMatrix::zeros(n, n);
    for &(i, j, w) in graph.edges() {
        let c = w * (u[i] + u[j]).exp();
        a[(i, j)] -= c;
        a[(j, i)] -= c;
        a[(i, i)] += c;
        a[(j, j)] += c;
    }
    a
}

/// The environment field `beta_i = (1/2) sum_{j ~ i} W_ij e^{u_j - u_i}` over
/// the interior vertices.
pub fn beta_field(graph: &PinnedGraph, u: &DVector<f64>) -> BetaField {
    assert_pinned_field(graph, u);
    let nv = graph.n_interior();
    let values = DVector::from_fn(nv, |i, _| {
        0.5 * graph
            .neighbors(i)
            .iter()
            .map(|&(j, w)| w * (u[j] - u[i]).exp())
            .sum::<f64>()
    });
    BetaField { values }
}

fn interior_laplacian(graph: &PinnedGraph, u: &DVector<f64>) -> DMatrix<f64> {
    let nv = graph.n_interior();
    let mut a = DMatrix::zeros(nv, nv);
    for &(i, j, w) in graph.edges() {
        let c = w * (u[i] + u[j]).exp();
        if i < nv {
            a[(i, i)] += c;
        }
        if j < nv {
            a[(j, j)] += c;
        }
        if i < nv && j < nv {
            a[(i, j)] -= c;
            a[(j, i)] -= c;
        }
    }
    a
}

pub(crate) fn interior_cholesky(
    graph: &PinnedGraph,
    u: &DVector<f64>,
) -> Result<Cholesky<f64, Dyn>, FieldError> {
    Cholesky::new(interior_laplacian(graph, u)).ok_or(FieldError::Factorization)
}

/// The Green's function `e^{u_i} (A_VV(u)^{-1})_ij e^{u_j}` on the interior,
/// extended by a zero row and column at the pin.
pub fn green_function(graph: &PinnedGraph, u: &DVector<f64>) -> Result<GreenMatrix, FieldError> {
    assert_pinned_field(graph, u);
    let nv = graph.n_interior();
    let chol = interior_cholesky(graph, u)?;
    let inv = chol.inverse();
    let n = graph.n_total();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..nv {
        for j in 0..nv {
            g[(i, j)] = (u[i] + u[j]).exp() * inv[(i, j)];
        }
    }
    Ok(GreenMatrix {
        g,
        pin: graph.pin_index(),
    })
}

/// The interior matrix `H_b = 2 b_i delta_ij - W_ij`.
pub fn h_matrix(graph: &PinnedGraph, beta: &BetaField) -> DMatrix<f64> {
    let nv = graph.n_interior();
    let mut h = DMatrix::zeros(nv, nv);
    for i in 0..nv {
        h[(i, i)] = 2.0 * beta.get(i);
    }
    for (i, j, w) in graph.interior_edges() {
        h[(i, j)] -= w;
        h[(j, i)] -= w;
    }
    h
}

/// Recover the pinned field `u` from its environment field by solving
/// `H_beta e^u = W_{V,pin}` and taking logs. Fails with an out-of-support
/// error when `H_beta` is not positive definite or the solve produces a
/// non-positive entry.
pub fn reconstruct_u(graph: &PinnedGraph, beta: &BetaField) -> Result<DVector<f64>, FieldError> {
    let h = h_matrix(graph, beta);
    let chol = Cholesky::new(h).ok_or(FieldError::OutsideSupportNotPd)?;
    let rhs = graph.pin_weights();
    let exp_u = chol.solve(&rhs);
    if exp_u.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(FieldError::OutsideSupportNonPositive);
    }
    let mut u = DVector::zeros(graph.n_total());
    for i in 0..graph.n_interior() {
        u[i] = exp_u[i].ln();
    }
    Ok(u)
}

/// Shift `u` by `log sqrt(1 + lambda)` componentwise, leaving `s` unchanged.
/// The pin stays clamped because the pin entry of `lambda` is zero.
pub fn scale_transform(config: &FieldConfig, lambda: &ScalingParams) -> FieldConfig {
    assert_eq!(config.u.len(), lambda.values().len(), "length mismatch");
    let u = DVector::from_fn(config.u.len(), |i, _| {
        config.u[i] + (1.0 + lambda.get(i)).sqrt().ln()
    });
    FieldConfig {
        u,
        s: config.s.clone(),
    }
}

/// Rescale every edge weight to `sqrt(1+lambda_i) sqrt(1+lambda_j) W_ij`,
/// keeping the topology.
pub fn rescale_weights(graph: &PinnedGraph, lambda: &ScalingParams) -> PinnedGraph {
    let factors = lambda.sqrt_one_plus();
    let weights: Vec<(usize, usize, f64)> = graph
        .edges()
        .iter()
        .map(|&(i, j, w)| (i, j, factors[i] * factors[j] * w))
        .collect();
    graph
        .with_weights(&weights)
        .expect("rescaling preserves validity")
}

/// The pieces of the rank-one decomposition of the Green's function for a
/// graph whose pin has a single neighbor.
#[derive(Debug, Clone)]
pub struct RankOneSplit {
    /// `W_{l,pin} e^{-u_l}`, the inverse weight of the rank-one part.
    pub coupling: f64,
    /// `e^{u_i - u_l}` over the interior, in the parent graph's order.
    pub shifted_exp: DVector<f64>,
    /// Green's function of the reduced graph (pin moved to `l`), as an
    /// interior-by-interior matrix in the parent order; row and column at
    /// `l` are zero.
    pub reduced_green: DMatrix<f64>,
    /// Interior index of the pin's unique neighbor `l`.
    pub anchor: usize,
}

impl RankOneSplit {
    /// Reassemble the interior Green's function from the pieces.
    pub fn reassemble(&self) -> DMatrix<f64> {
        let outer = &self.shifted_exp * self.shifted_exp.transpose() / self.coupling;
        outer + &self.reduced_green
    }
}

/// Split the interior Green's function into a rank-one part carried by the
/// pin edge and the Green's function of the reduced graph in which the pin's
/// unique neighbor becomes the new pin.
pub fn green_rank1_split(
    graph: &PinnedGraph,
    u: &DVector<f64>,
) -> Result<RankOneSplit, FieldError> {
    assert_pinned_field(graph, u);
    let nv = graph.n_interior();
    if nv < 2 {
        return Err(FieldError::TooFewInterior(nv));
    }
    let pin = graph.pin_index();
    let pin_neighbors = graph.neighbors(pin);
    if pin_neighbors.len() != 1 {
        return Err(FieldError::PinDegreeNotOne(pin_neighbors.len()));
    }
    let (anchor, w_pin) = pin_neighbors[0];

    let shifted_exp = DVector::from_fn(nv, |i, _| (u[i] - u[anchor]).exp());

    // Reduced graph: interior vertices only, anchored at l.
    let interior_ids: Vec<_> = (0..nv).map(|i| graph.id_of(i)).collect();
    let interior_edges: Vec<_> = graph
        .interior_edges()
        .map(|(i, j, w)| (graph.id_of(i), graph.id_of(j), w))
        .collect();
    let reduced = PinnedGraph::build(&interior_ids, graph.id_of(anchor), &interior_edges)
        .expect("interior of a single-neighbor pinned graph stays valid");

    let mut u_reduced = DVector::zeros(reduced.n_total());
    for (k, &id) in reduced.vertex_ids().iter().enumerate() {
        let parent = graph.index_of(id).expect("shared vertex id");
        u_reduced[k] = u[parent] - u[anchor];
    }
    let green_reduced = green_function(&reduced, &u_reduced)?;

    let mut reduced_green = DMatrix::zeros(nv, nv);
    for (a, &ida) in reduced.vertex_ids().iter().enumerate() {
        let pa = graph.index_of(ida).unwrap();
        for (b, &idb) in reduced.vertex_ids().iter().enumerate() {
            let pb = graph.index_of(idb).unwrap();
            reduced_green[(pa, pb)] = green_reduced.entry(a, b);
        }
    }

    Ok(RankOneSplit {
        coupling: w_pin * (-u[anchor]).exp(),
        shifted_exp,
        reduced_green,
        anchor,
    })
}
