//! Densities and closed forms of the field measure.
//!
//! The measure factorizes over `(u, s)`: integrating the Gaussian `s` sector
//! out leaves an explicit (log-)density for `u`, and conditionally on `u` the
//! vector `s` is centered Gaussian with covariance `A_VV(u)^{-1}`. This
//! module evaluates that marginal, draws exact conditional `s` samples,
//! and provides the closed-form Laplace transform, the Radon–Nikodym factor
//! of the local scaling transformation, the environment density on the
//! unpinned interior graph, and the restriction of boundary observables to a
//! wired collapse.

use nalgebra::{DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::fields::{beta_field, interior_cholesky, FieldError, ScalingParams};
use crate::graph::{GraphError, HostExhaustion, PinnedGraph};

/// Errors from measure-level operations.
#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("theta entry {value} at index {idx} must be non-positive")]
    ThetaPositive { idx: usize, value: f64 },
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A log-scale density value. `normalized` records whether the additive
/// constant is included, i.e. whether `exp(value)` is a probability density.
#[derive(Debug, Clone, Copy)]
pub struct LogDensity {
    pub value: f64,
    pub normalized: bool,
}

impl LogDensity {
    /// False when the input lies outside the support.
    pub fn in_support(&self) -> bool {
        self.value > f64::NEG_INFINITY
    }
}

fn half_logdet(chol: &nalgebra::Cholesky<f64, Dyn>) -> f64 {
    chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum()
}

/// Unnormalized log-density of the `u` marginal:
/// `(1/2) logdet A_VV(u) - sum_edges W_ij [cosh(u_i - u_j) - 1] - sum_V u_i`.
/// Returns minus infinity when the evaluation leaves the double-precision
/// range, which rejects such states cleanly in Monte Carlo use.
pub fn log_density_u(graph: &PinnedGraph, u: &DVector<f64>) -> LogDensity {
    let value = log_density_u_value(graph, u);
    LogDensity {
        value,
        normalized: false,
    }
}

fn log_density_u_value(graph: &PinnedGraph, u: &DVector<f64>) -> f64 {
    if u.iter().any(|x| !x.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let chol = match interior_cholesky(graph, u) {
        Ok(c) => c,
        Err(_) => return f64::NEG_INFINITY,
    };
    let mut value = half_logdet(&chol);
    for &(i, j, w) in graph.edges() {
        value -= w * ((u[i] - u[j]).cosh() - 1.0);
    }
    for i in 0..graph.n_interior() {
        value -= u[i];
    }
    if value.is_nan() {
        f64::NEG_INFINITY
    } else {
        value
    }
}

/// Normalized log-density of the `u` marginal; adds the constant
/// `-(|V|/2) log(2 pi)` to [`log_density_u`].
pub fn log_density_u_normalized(graph: &PinnedGraph, u: &DVector<f64>) -> LogDensity {
    let base = log_density_u_value(graph, u);
    let nv = graph.n_interior() as f64;
    LogDensity {
        value: base - 0.5 * nv * (2.0 * std::f64::consts::PI).ln(),
        normalized: true,
    }
}

/// Factorized conditional sampler for `s` given `u`: a centered Gaussian on
/// the interior with covariance `A_VV(u)^{-1}`, extended by zero at the pin.
pub struct SConditional {
    upper: nalgebra::DMatrix<f64>,
    n_total: usize,
}

impl SConditional {
    /// Factor the interior Laplacian once; subsequent draws are cheap.
    pub fn new(graph: &PinnedGraph, u: &DVector<f64>) -> Result<Self, MeasureError> {
        let chol = interior_cholesky(graph, u)?;
        Ok(Self {
            upper: chol.l().transpose(),
            n_total: graph.n_total(),
        })
    }

    /// Draw one conditional `s` vector over the full vertex set.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let nv = self.upper.nrows();
        let z = DVector::from_fn(nv, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = self
            .upper
            .solve_upper_triangular(&z)
            .expect("triangular factor has positive diagonal");
        let mut s = DVector::zeros(self.n_total);
        s.rows_mut(0, nv).copy_from(&x);
        s
    }
}

/// Draw a single `s` sample given `u`; see [`SConditional`] for repeated
/// draws at the same `u`.
pub fn sample_s_given_u<R: Rng + ?Sized>(
    graph: &PinnedGraph,
    u: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>, MeasureError> {
    Ok(SConditional::new(graph, u)?.draw(rng))
}

/// Closed-form Laplace transform of the environment field:
/// `prod_edges exp(W_ij (1 - sqrt(1+l_i) sqrt(1+l_j))) * prod_V (1+l_i)^{-1/2}`.
pub fn laplace_closed_form(graph: &PinnedGraph, lambda: &ScalingParams) -> f64 {
    let f = lambda.sqrt_one_plus();
    let mut log = 0.0;
    for &(i, j, w) in graph.edges() {
        log += w * (1.0 - f[i] * f[j]);
    }
    for i in 0..graph.n_interior() {
        log -= f[i].ln();
    }
    log.exp()
}

/// The tilt exponent `<lambda_V, beta(u)>` over the interior vertices.
pub fn beta_tilt(graph: &PinnedGraph, lambda: &ScalingParams, u: &DVector<f64>) -> f64 {
    let beta = beta_field(graph, u);
    (0..graph.n_interior())
        .map(|i| lambda.get(i) * beta.get(i))
        .sum()
}

/// Radon–Nikodym factor of the image of the rescaled-weight measure under
/// the local scaling shift, relative to the base measure:
/// `prod_edges exp(W^l_ij - W_ij) * prod_V sqrt(1+l_j) exp(-l_j beta_j(u))`.
pub fn rn_derivative(graph: &PinnedGraph, lambda: &ScalingParams, u: &DVector<f64>) -> f64 {
    let f = lambda.sqrt_one_plus();
    let beta = beta_field(graph, u);
    let mut log = 0.0;
    for &(i, j, w) in graph.edges() {
        log += w * (f[i] * f[j] - 1.0);
    }
    for j in 0..graph.n_interior() {
        log += f[j].ln() - lambda.get(j) * beta.get(j);
    }
    log.exp()
}

/// Log-density of the environment measure on the unpinned interior graph:
/// `(|V|/2) log(2/pi) - <1, beta> + sum_E W_ij - (1/2) logdet H_beta` on the
/// cone where `H_beta` is positive definite, minus infinity outside. The pin
/// row of the graph only fixes which edges count as interior.
pub fn nu_log_density(graph: &PinnedGraph, beta: &crate::fields::BetaField) -> LogDensity {
    let h = crate::fields::h_matrix(graph, beta);
    let chol = match nalgebra::Cholesky::new(h) {
        Some(c) => c,
        None => {
            return LogDensity {
                value: f64::NEG_INFINITY,
                normalized: true,
            }
        }
    };
    let nv = graph.n_interior() as f64;
    let mut value = 0.5 * nv * (2.0 / std::f64::consts::PI).ln();
    value -= beta.values().sum();
    for (_, _, w) in graph.interior_edges() {
        value += w;
    }
    value -= half_logdet(&chol);
    LogDensity {
        value,
        normalized: true,
    }
}

/// Restrict a non-positive observable-weight vector on the host to a wired
/// collapse: interior entries are copied and the boundary vertex absorbs the
/// total weight outside the level. The output follows the collapse ordering
/// (level vertices first, boundary last).
pub fn theta_restriction(
    theta_host: &DVector<f64>,
    exhaustion: &HostExhaustion,
    n: usize,
) -> Result<DVector<f64>, MeasureError> {
    let host = exhaustion.host();
    if theta_host.len() != host.len() {
        return Err(MeasureError::DimensionMismatch {
            got: theta_host.len(),
            expected: host.len(),
        });
    }
    for (idx, &v) in theta_host.iter().enumerate() {
        if !(v.is_finite() && v <= 0.0) {
            return Err(MeasureError::ThetaPositive { idx, value: v });
        }
    }
    let level = exhaustion.level(n)?;
    let mut inside = vec![false; host.len()];
    for &v in level {
        inside[host.index_of(v).expect("validated level vertex")] = true;
    }
    let mut out = DVector::zeros(level.len() + 1);
    for (k, &v) in level.iter().enumerate() {
        out[k] = theta_host[host.index_of(v).unwrap()];
    }
    let boundary: f64 = (0..host.len())
        .filter(|&j| !inside[j])
        .map(|j| theta_host[j])
        .sum();
    out[level.len()] = boundary;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BetaField;
    use crate::graph::{HostExhaustion, HostGraph, PinnedGraph};
    use crate::integrate::integrate_real_line;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_edge(w: f64) -> PinnedGraph {
        PinnedGraph::build(&[0, 1], 0, &[(0, 1, w)]).unwrap()
    }

    fn path3() -> PinnedGraph {
        PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn log_density_at_zero_is_half_logdet() {
        let g = path3();
        let d = log_density_u(&g, &DVector::zeros(3));
        // A_VV(0) = [[2,-1],[-1,1]], det = 1
        assert_relative_eq!(d.value, 0.0, epsilon = 1e-14);
        assert!(!d.normalized);
    }

    #[test]
    fn single_edge_density_matches_explicit_form() {
        let w = 1.3;
        let g = single_edge(w);
        for &t in &[-1.7, -0.2, 0.0, 0.4, 2.1] {
            let u = DVector::from_vec(vec![t, 0.0]);
            let d = log_density_u_normalized(&g, &u);
            let explicit =
                0.5 * (w / (2.0 * std::f64::consts::PI)).ln() - w * (t.cosh() - 1.0) - 0.5 * t;
            assert_relative_eq!(d.value, explicit, max_relative = 1e-12);
        }
    }

    #[test]
    fn normalized_single_edge_density_integrates_to_one() {
        let g = single_edge(1.0);
        let out = integrate_real_line(
            |t| {
                log_density_u_normalized(&g, &DVector::from_vec(vec![t, 0.0]))
                    .value
                    .exp()
            },
            1e-12,
            0.0,
            2000,
        )
        .unwrap();
        assert!((out.value - 1.0).abs() < 1e-8, "mass = {}", out.value);
    }

    #[test]
    fn laplace_closed_form_examples() {
        let g = single_edge(1.0);
        assert_eq!(laplace_closed_form(&g, &ScalingParams::zeros(&g)), 1.0);

        let lam = ScalingParams::new(&g, DVector::from_vec(vec![3.0, 0.0])).unwrap();
        assert_relative_eq!(
            laplace_closed_form(&g, &lam),
            (-1.0_f64).exp() / 2.0,
            max_relative = 1e-14
        );

        let p = path3();
        let lam = ScalingParams::new(&p, DVector::from_vec(vec![3.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(
            laplace_closed_form(&p, &lam),
            (-2.0_f64).exp() / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn rn_derivative_examples() {
        let g = single_edge(1.0);
        let u = DVector::zeros(2);
        assert_eq!(rn_derivative(&g, &ScalingParams::zeros(&g), &u), 1.0);

        let lam = ScalingParams::new(&g, DVector::from_vec(vec![3.0, 0.0])).unwrap();
        assert_relative_eq!(
            rn_derivative(&g, &lam, &u),
            2.0 * (-0.5_f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn rn_derivative_matches_inverse_laplace_form() {
        // RN factor equals L(lambda)^{-1} e^{-<lambda, beta>}
        let p = path3();
        let lam = ScalingParams::new(&p, DVector::from_vec(vec![0.8, 2.5, 0.0])).unwrap();
        let u = DVector::from_vec(vec![0.3, -0.6, 0.0]);
        let beta = beta_field(&p, &u);
        let dot: f64 = (0..2).map(|i| lam.get(i) * beta.get(i)).sum();
        let expect = (-dot).exp() / laplace_closed_form(&p, &lam);
        assert_relative_eq!(rn_derivative(&p, &lam, &u), expect, max_relative = 1e-12);
    }

    #[test]
    fn rn_derivative_integrates_to_one() {
        // the image measure is a probability measure, so the factor has
        // expectation one
        let p = path3();
        let lam = ScalingParams::new(&p, DVector::from_vec(vec![1.2, 0.4, 0.0])).unwrap();
        let cfg = crate::sampler::ChainConfig {
            seed: 29,
            burn_in: 5_000,
            samples: 40_000,
            thinning: 4,
            ..Default::default()
        };
        let est = crate::sampler::mc_expectation(&p, &cfg, 0, |fc| {
            rn_derivative(&p, &lam, fc.u())
        })
        .unwrap();
        assert!(est.z_score(1.0).abs() <= 3.0, "z = {}", est.z_score(1.0));
    }

    #[test]
    fn conditional_s_covariance_on_path() {
        let g = path3();
        let u = DVector::zeros(3);
        let cond = SConditional::new(&g, &u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut acc = [[0.0_f64; 2]; 2];
        for _ in 0..n {
            let s = cond.draw(&mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += s[i] * s[j];
                }
            }
        }
        // covariance A_VV^{-1} = [[1,1],[1,2]]; entry SE ~ sqrt(var/n) ~ 0.01
        let expect = [[1.0, 1.0], [1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                let mean = acc[i][j] / n as f64;
                let tol = 3.0 * 3.0 / (n as f64).sqrt();
                assert!(
                    (mean - expect[i][j]).abs() < tol,
                    "cov[{i}][{j}] = {mean}, expected {}",
                    expect[i][j]
                );
            }
        }
    }

    #[test]
    fn nu_log_density_single_vertex() {
        let g = single_edge(1.0);
        let beta = BetaField::new(&g, DVector::from_vec(vec![0.7])).unwrap();
        let d = nu_log_density(&g, &beta);
        let expect = 0.5 * (2.0 / std::f64::consts::PI).ln() - 0.7 - 0.5 * (2.0 * 0.7_f64).ln();
        assert_relative_eq!(d.value, expect, max_relative = 1e-13);
        assert!(d.in_support());

        let bad = BetaField::new(&g, DVector::from_vec(vec![-0.4])).unwrap();
        assert!(!nu_log_density(&g, &bad).in_support());
    }

    #[test]
    fn theta_restriction_examples() {
        let host = HostGraph::build(&[1, 2, 3], &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let exh = HostExhaustion::new(host, vec![vec![1], vec![1, 2]]).unwrap();

        let theta = DVector::from_vec(vec![-1.0, -1.0, -1.0]);
        let r1 = theta_restriction(&theta, &exh, 1).unwrap();
        assert_eq!(r1.as_slice(), &[-1.0, -2.0]);

        // supported inside the level: boundary entry vanishes
        let theta_in = DVector::from_vec(vec![-1.0, 0.0, 0.0]);
        let r = theta_restriction(&theta_in, &exh, 1).unwrap();
        assert_eq!(r.as_slice(), &[-1.0, 0.0]);

        // total mass is conserved across levels
        let r2 = theta_restriction(&theta, &exh, 2).unwrap();
        assert_eq!(r1.sum(), r2.sum());

        let bad = DVector::from_vec(vec![0.5, 0.0, 0.0]);
        assert!(matches!(
            theta_restriction(&bad, &exh, 1),
            Err(MeasureError::ThetaPositive { idx: 0, .. })
        ));
    }

    #[test]
    fn overflowing_field_has_zero_density() {
        let g = single_edge(1.0);
        let u = DVector::from_vec(vec![800.0, 0.0]);
        assert!(!log_density_u(&g, &u).in_support());
    }
}
