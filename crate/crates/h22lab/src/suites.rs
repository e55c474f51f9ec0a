//! Named verification suites.
//!
//! Each suite bundles related identity checks into a list of verdicts. The
//! exact suites (`exact-algebra`, `consistency`) are deterministic given the
//! seed; the statistical suites run Monte Carlo chains whose seeds derive
//! from the configured seed, so a full run is reproducible bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fields::{
    assemble_laplacian, beta_field, green_function, green_rank1_split, h_matrix, reconstruct_u,
    rescale_weights, BetaField, ScalingParams,
};
use crate::graph::{HostExhaustion, HostGraph, PinnedGraph, VertexId};
use crate::identities::{
    consistency_check, exp_ward_check, generalized_laplace_check, importance_identity_check,
    laplace_transform_check, martingale_step_check, martingale_term, ward_identity_check,
    CheckConfig, IdentityError, MartingaleObservable,
};
use crate::integrate::{integrate, integrate_real_line};
use crate::measure::{nu_log_density, SConditional};
use crate::quadrature::{
    cond_exp_closed_form_check, letac_lhs, letac_lhs_dim1, letac_rhs, QuadratureError,
    QuadratureSpec,
};
use crate::report::IdentityVerdict;
use crate::sampler::{batch_means, derive_seed, mc_expectation, run_chain, ChainConfig};

/// The built-in single-edge graph (one interior vertex, unit weight) used by
/// graph-free suites.
pub fn single_edge_graph() -> PinnedGraph {
    PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0)]).unwrap()
}

/// Seeded random connected pinned graph with at most `max_interior` interior
/// vertices: a random spanning tree plus a sprinkling of extra edges, weights
/// uniform in `[0.3, 2.0]`.
pub fn random_pinned_graph<R: Rng + ?Sized>(rng: &mut R, max_interior: usize) -> PinnedGraph {
    let nv = rng.random_range(1..=max_interior.max(1));
    let n = nv + 1;
    let ids: Vec<VertexId> = (0..n as VertexId).collect();
    let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::new();
    for k in 1..n {
        let parent = rng.random_range(0..k);
        edges.push((
            ids[parent],
            ids[k],
            rng.random_range(0.3..2.0),
        ));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let on_tree = edges
                .iter()
                .any(|&(x, y, _)| (x, y) == (ids[a], ids[b]) || (x, y) == (ids[b], ids[a]));
            if !on_tree && rng.random::<f64>() < 0.25 {
                edges.push((ids[a], ids[b], rng.random_range(0.3..2.0)));
            }
        }
    }
    // pin is vertex 0
    PinnedGraph::build(&ids, 0, &edges).expect("construction yields a valid graph")
}

/// Seeded random graph whose pin has exactly one neighbor (as required by
/// the rank-one decomposition): a random interior graph with the pin hung
/// off one interior vertex.
pub fn random_single_neighbor_pin_graph<R: Rng + ?Sized>(
    rng: &mut R,
    max_interior: usize,
) -> PinnedGraph {
    let base = random_pinned_graph(rng, max_interior.max(2));
    // interpret the base's full vertex set as the interior of a new graph
    let n = base.n_total();
    let mut edges: Vec<(VertexId, VertexId, f64)> = base
        .edges()
        .iter()
        .map(|&(i, j, w)| (base.id_of(i) + 1, base.id_of(j) + 1, w))
        .collect();
    let anchor = rng.random_range(1..=n as VertexId);
    edges.push((0, anchor, rng.random_range(0.3..2.0)));
    let mut ids: Vec<VertexId> = (1..=n as VertexId).collect();
    ids.push(0);
    PinnedGraph::build(&ids, 0, &edges).expect("construction yields a valid graph")
}

/// Seeded random pinned field over the full vertex set.
pub fn random_field<R: Rng + ?Sized>(rng: &mut R, graph: &PinnedGraph, scale: f64) -> DVector<f64> {
    let mut u = DVector::zeros(graph.n_total());
    for i in 0..graph.n_interior() {
        u[i] = rng.random_range(-scale..scale);
    }
    u
}

/// Seeded random host exhaustion: a connected host on 4..=8 vertices with
/// two or three strictly nested levels.
pub fn random_exhaustion<R: Rng + ?Sized>(rng: &mut R) -> HostExhaustion {
    loop {
        let n = rng.random_range(4..=8usize);
        let ids: Vec<VertexId> = (0..n as VertexId).collect();
        let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::new();
        for k in 1..n {
            let parent = rng.random_range(0..k);
            edges.push((ids[parent], ids[k], rng.random_range(0.3..2.0)));
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let on_tree = edges
                    .iter()
                    .any(|&(x, y, _)| (x, y) == (ids[a], ids[b]) || (x, y) == (ids[b], ids[a]));
                if !on_tree && rng.random::<f64>() < 0.2 {
                    edges.push((ids[a], ids[b], rng.random_range(0.3..2.0)));
                }
            }
        }
        let host = HostGraph::build(&ids, &edges).expect("spanning tree keeps host connected");
        let mut order: Vec<VertexId> = ids.clone();
        // Fisher-Yates
        for k in (1..order.len()).rev() {
            let j = rng.random_range(0..=k);
            order.swap(k, j);
        }
        let k1 = rng.random_range(1..n - 1);
        let k2 = rng.random_range(k1 + 1..n);
        let levels = vec![order[..k1].to_vec(), order[..k2].to_vec()];
        match HostExhaustion::new(host, levels) {
            Ok(exh) => return exh,
            Err(_) => continue,
        }
    }
}

fn max_rel(diff: &DMatrix<f64>, scale: f64) -> f64 {
    diff.amax() / scale.max(f64::MIN_POSITIVE)
}

/// Exact-algebra suite: six identity families checked on `instances` random
/// graphs each. `tol` bounds the inverse, round-trip, rescaling, and
/// rank-one families; the pure-arithmetic scaling-covariance and pin-append
/// families are held to `1e-12`.
pub fn exact_algebra_suite(seed: u64, instances: usize, tol: f64) -> Vec<IdentityVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xea01));
    let tight = 1e-12;
    let mut worst = [0.0_f64; 6];
    for _ in 0..instances {
        let graph = random_pinned_graph(&mut rng, 8);
        let nv = graph.n_interior();
        let n = graph.n_total();
        let u = random_field(&mut rng, &graph, 1.2);

        // Green's function inverts H_beta
        let green = green_function(&graph, &u).expect("valid graph");
        let beta = beta_field(&graph, &u);
        let prod = green.interior_block() * h_matrix(&graph, &beta);
        let resid = prod - DMatrix::<f64>::identity(nv, nv);
        worst[0] = worst[0].max(resid.amax());

        // u <-> beta round trip, both directions
        let u_back = reconstruct_u(&graph, &beta).expect("beta lies in the support");
        let du = (&u_back - &u).amax() / u.amax().max(1.0);
        let beta_back = beta_field(&graph, &u_back);
        let db = (beta_back.values() - beta.values()).amax() / beta.values().amax().max(1.0);
        worst[1] = worst[1].max(du.max(db));

        // rescaled weights + shifted field leave the Laplacian invariant
        let lam_raw = DVector::from_fn(nv, |_, _| rng.random_range(-0.5..2.5));
        let lambda = ScalingParams::from_interior(&graph, &lam_raw).unwrap();
        let scaled = rescale_weights(&graph, &lambda);
        let u_tilde = DVector::from_fn(n, |i, _| u[i] - (1.0 + lambda.get(i)).sqrt().ln());
        let a = assemble_laplacian(&graph, &u);
        let a_scaled = assemble_laplacian(&scaled, &u_tilde);
        worst[2] = worst[2].max(max_rel(&(&a - &a_scaled), a.amax()));

        // rank-one decomposition on a single-neighbor-pin graph
        let hang = random_single_neighbor_pin_graph(&mut rng, 7);
        let u_hang = random_field(&mut rng, &hang, 1.2);
        let split = green_rank1_split(&hang, &u_hang).expect("pin has one neighbor");
        let g_full = green_function(&hang, &u_hang).unwrap().interior_block();
        worst[3] = worst[3].max(max_rel(&(split.reassemble() - &g_full), g_full.amax()));

        // diagonal scaling covariance of H_b
        let b = BetaField::new(
            &graph,
            DVector::from_fn(nv, |_, _| rng.random_range(0.5..2.0)),
        )
        .unwrap();
        let phi = DVector::from_fn(nv, |_, _| rng.random_range(0.5..2.0));
        let lam_phi =
            ScalingParams::from_interior(&graph, &phi.map(|p: f64| p * p - 1.0)).unwrap();
        let graph_phi = rescale_weights(&graph, &lam_phi);
        let b_phi = BetaField::new(
            &graph,
            DVector::from_fn(nv, |i, _| phi[i] * phi[i] * b.get(i)),
        )
        .unwrap();
        let h = h_matrix(&graph, &b);
        let h_phi = h_matrix(&graph_phi, &b_phi);
        let lhs = DMatrix::from_diagonal(&phi) * h * DMatrix::from_diagonal(&phi);
        worst[4] = worst[4].max(max_rel(&(lhs - &h_phi), h_phi.amax()));

        // appending the pin to a hierarchy term leaves it unchanged
        let m = rng.random_range(1..=3usize);
        let indices: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
        let base = martingale_term(&indices, &u, &green);
        let mut extended = indices.clone();
        extended.push(graph.pin_index());
        let appended = martingale_term(&extended, &u, &green);
        let scale = base.abs().max(appended.abs()).max(1.0);
        worst[5] = worst[5].max((base - appended).abs() / scale);
    }

    let families: [(&str, &'static str, f64); 6] = [
        (
            "Green's function inverts H_beta",
            "G_VV(u) H_beta(u) = I",
            tol,
        ),
        (
            "u <-> beta round trip",
            "reconstruct(beta(u)) = u and beta(reconstruct(b)) = b",
            tol,
        ),
        (
            "rescaled Laplacian invariance",
            "A^{W^lambda}(u - log sqrt(1+lambda)) = A^W(u)",
            tol,
        ),
        (
            "rank-one Green decomposition",
            "G_VV = e^{t}(e^{t})^T / (W e^{-u_l}) + G_reduced",
            tol,
        ),
        (
            "diagonal scaling covariance",
            "diag(phi) H_b^W diag(phi) = H_{b'}^{W'}",
            tight,
        ),
        (
            "pin-appended hierarchy reduction",
            "M_{i_1..i_m, pin} = M_{i_1..i_m}",
            tight,
        ),
    ];
    families
        .iter()
        .enumerate()
        .map(|(k, &(name, anchor, bound))| {
            IdentityVerdict::bounded(
                format!("{name} ({instances} random graphs)"),
                anchor,
                worst[k],
                bound,
            )
        })
        .collect()
}

/// Consistency suite on a given exhaustion: the closed-form Laplace
/// transform agrees exactly across consecutive levels, for the zero
/// parameter and `checks_per_level` random parameters supported inside the
/// lower level.
pub fn consistency_suite(
    exhaustion: &HostExhaustion,
    seed: u64,
    tol: f64,
    checks_per_level: usize,
) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xc025));
    let host_len = exhaustion.host().len();
    let mut verdicts = Vec::new();
    for n in 1..exhaustion.num_levels() {
        verdicts.push(consistency_check(
            exhaustion,
            n,
            &DVector::zeros(host_len),
            tol,
        )?);
        for _ in 0..checks_per_level {
            let mut lambda = DVector::zeros(host_len);
            for &v in exhaustion.level(n)? {
                let idx = exhaustion.host().index_of(v).unwrap();
                lambda[idx] = rng.random_range(-0.6..3.0);
            }
            verdicts.push(consistency_check(exhaustion, n, &lambda, tol)?);
        }
    }
    Ok(verdicts)
}

fn lambda_grid(graph: &PinnedGraph, point: usize) -> ScalingParams {
    let nv = graph.n_interior();
    let patterns = [3.0, 0.5, -0.4, 1.5];
    let interior = match point {
        0 => DVector::zeros(nv),
        4 => DVector::from_element(nv, 0.8),
        k => DVector::from_fn(nv, |i, _| patterns[(k + i) % patterns.len()]),
    };
    ScalingParams::from_interior(graph, &interior).unwrap()
}

/// Laplace suite: the Monte Carlo transform of the environment field matches
/// the closed form on five parameter points, plus the single-edge relation
/// between the pinned-graph law and the unpinned environment density.
pub fn laplace_suite(
    graph: &PinnedGraph,
    cfg: &CheckConfig,
) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let mut verdicts: Vec<IdentityVerdict> = (0..5usize)
        .into_par_iter()
        .map(|k| {
            let lambda = lambda_grid(graph, k);
            let mut point_cfg = cfg.clone();
            point_cfg.chain.seed = derive_seed(cfg.chain.seed, 0x1a00 + k as u64);
            laplace_transform_check(graph, &lambda, &point_cfg).map(|mut v| {
                v.name = format!("Laplace transform, point {k}");
                v
            })
        })
        .collect::<Result<_, _>>()?;
    verdicts.push(nu_relation_check(cfg)?);
    Ok(verdicts)
}

/// Single-edge check of the relation between the Laplace transforms of the
/// environment field under the pinned-graph measure and under the unpinned
/// environment density: the two differ by the factor
/// `exp(-W (1 - sqrt(1 + lambda_l)))`. The unpinned side integrates the
/// density by quadrature; the pinned side is a Monte Carlo run.
pub fn nu_relation_check(cfg: &CheckConfig) -> Result<IdentityVerdict, IdentityError> {
    let graph = single_edge_graph();
    let w = 1.0;
    let lam = 1.3_f64;

    // quadrature of E_nu[e^{-lambda beta}] with beta = r^2 to tame the
    // inverse-square-root factor at the origin
    let quad = integrate(
        |x| {
            let d = 1.0 - x;
            let r = x / d;
            let beta = BetaField::new(&graph, DVector::from_vec(vec![r * r])).unwrap();
            let v = (-lam * r * r + nu_log_density(&graph, &beta).value).exp() * 2.0 * r;
            let v = v / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        1e-10,
        0.0,
        4000,
    )?;

    let mut chain = cfg.chain.clone();
    chain.seed = derive_seed(cfg.chain.seed, 0x7e57);
    let est = mc_expectation(&graph, &chain, 0, |fc| {
        (-lam * beta_field(&graph, fc.u()).get(0)).exp()
    })?;
    let factor = (-w * (1.0 - (1.0 + lam).sqrt())).exp();
    let scaled = crate::sampler::McEstimate {
        mean: est.mean * factor,
        std_error: est.std_error * factor,
        ess: est.ess,
        n: est.n,
    };
    Ok(IdentityVerdict::statistical(
        format!("environment-density relation, lambda = {lam}"),
        "E_nu[e^{-<lambda,beta>}] = E_mu[e^{-<lambda,beta>}] e^{-W(1-sqrt(1+lambda_l))}",
        scaled,
        quad.value,
        cfg.z_threshold,
    ))
}

fn theta_pattern(graph: &PinnedGraph, kind: usize) -> DVector<f64> {
    let n = graph.n_total();
    match kind {
        0 => DVector::zeros(n),
        1 => DVector::from_element(n, -0.5),
        2 => DVector::from_fn(n, |i, _| if i % 2 == 0 { -1.0 } else { -0.2 }),
        _ => DVector::from_fn(n, |i, _| -0.3 - 0.1 * (i as f64)),
    }
}

/// Generalized Laplace suite: five `(theta, lambda)` pairs including both
/// degenerations.
pub fn generalized_laplace_suite(
    graph: &PinnedGraph,
    cfg: &CheckConfig,
) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let pairs: Vec<(usize, usize)> = vec![(0, 1), (1, 0), (1, 2), (2, 3), (3, 4)];
    pairs
        .into_par_iter()
        .enumerate()
        .map(|(k, (tk, lk))| {
            let theta = theta_pattern(graph, tk);
            let lambda = lambda_grid(graph, lk);
            let mut point_cfg = cfg.clone();
            point_cfg.chain.seed = derive_seed(cfg.chain.seed, 0x61a0 + k as u64);
            generalized_laplace_check(graph, &theta, &lambda, &point_cfg).map(|mut v| {
                v.name = format!("generalized Laplace, pair {k}");
                v
            })
        })
        .collect()
}

/// Ward suite: the order 1..3 identities (including a repeated index) and
/// both parts of the exponential identity.
pub fn ward_suite(
    graph: &PinnedGraph,
    cfg: &CheckConfig,
) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let nv = graph.n_interior();
    let pin = graph.pin_index();
    let i0 = 0usize;
    let i1 = if nv >= 2 { 1 } else { pin };
    let index_sets: Vec<Vec<usize>> =
        vec![vec![i0], vec![i0, i1], vec![i0, i0], vec![i0, i1, pin]];

    let mut verdicts: Vec<IdentityVerdict> = index_sets
        .into_par_iter()
        .enumerate()
        .map(|(k, indices)| {
            let mut point_cfg = cfg.clone();
            point_cfg.chain.seed = derive_seed(cfg.chain.seed, 0x3a9d + k as u64);
            ward_identity_check(graph, &indices, &point_cfg)
        })
        .collect::<Result<_, _>>()?;

    let theta = DVector::from_element(graph.n_total(), -0.7);
    let mut exp_cfg = cfg.clone();
    exp_cfg.chain.seed = derive_seed(cfg.chain.seed, 0x3b00);
    verdicts.extend(exp_ward_check(graph, &theta, &exp_cfg)?);
    Ok(verdicts)
}

/// Image-measure suite: the importance-sampling identity for the constant,
/// the exponential-field, and the order-two hierarchy observables.
pub fn image_measure_suite(
    graph: &PinnedGraph,
    cfg: &CheckConfig,
) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let nv = graph.n_interior();
    let lambda = {
        let mut v = DVector::from_element(nv, 0.5);
        v[0] = 1.5;
        ScalingParams::from_interior(graph, &v).unwrap()
    };
    let j = 0usize;
    let k = if nv >= 2 { 1 } else { graph.pin_index() };

    type Observable = Box<dyn Fn(&crate::fields::FieldConfig) -> f64 + Sync + Send>;
    let graph_a = graph.clone();
    let graph_c = graph.clone();
    let jobs: Vec<(String, Observable)> = vec![
        ("1".to_string(), Box::new(|_fc| 1.0)),
        (
            format!("e^u at {}", graph.id_of(j)),
            Box::new(move |fc| fc.u()[j].exp()),
        ),
        (
            format!("e^{{u_j+u_k}} - G_jk at ({}, {})", graph_a.id_of(j), graph_a.id_of(k)),
            Box::new(move |fc| {
                let u = fc.u();
                let green = green_function(&graph_c, u)
                    .expect("interior Laplacian is positive definite on retained samples");
                (u[j] + u[k]).exp() - green.entry(j, k)
            }),
        ),
    ];

    jobs.into_par_iter()
        .enumerate()
        .map(|(idx, (name, g))| {
            let mut point_cfg = cfg.clone();
            point_cfg.chain.seed = derive_seed(cfg.chain.seed, 0x51de + idx as u64);
            importance_identity_check(graph, &lambda, g, &name, &point_cfg)
        })
        .collect()
}

/// Martingale suite on an exhaustion: cross-level agreement of the order
/// 1..3 hierarchy terms (inside and outside the lower level) and of the
/// generating observable, with the closed-form side checks where they exist.
pub fn martingale_suite(
    exhaustion: &HostExhaustion,
    cfg: &CheckConfig,
) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let n = 1usize;
    let level_n = exhaustion.level(n)?.to_vec();
    let level_next = exhaustion.level(n + 1)?.to_vec();
    let host_len = exhaustion.host().len();

    let mut lambda = DVector::zeros(host_len);
    lambda[exhaustion.host().index_of(level_n[0]).unwrap()] = 1.0;

    let inside = level_n[0];
    let outside = *level_next
        .iter()
        .find(|v| !level_n.contains(v))
        .expect("strict nesting provides a fresh vertex");
    let trio: Vec<VertexId> = {
        let mut t = vec![inside, outside];
        if let Some(&third) = level_next.iter().find(|v| **v != inside && **v != outside) {
            t.push(third);
        } else {
            t.push(inside);
        }
        t
    };
    let theta_host = DVector::from_fn(host_len, |i, _| {
        let id = exhaustion.host().vertex_ids()[i];
        if level_next.contains(&id) {
            -0.6
        } else {
            -0.4
        }
    });

    let singles = [vec![inside], vec![outside]];
    let pair = vec![trio[0], trio[1]];

    let jobs: Vec<(u64, MartingaleObservable<'_>)> = vec![
        (0x9a10, MartingaleObservable::Hierarchy(&singles[0])),
        (0x9a21, MartingaleObservable::Hierarchy(&singles[1])),
        (0x9a32, MartingaleObservable::Hierarchy(&pair)),
        (0x9a43, MartingaleObservable::Hierarchy(&trio)),
        (0x9a54, MartingaleObservable::Generating(&theta_host)),
    ];

    let results: Vec<Vec<IdentityVerdict>> = jobs
        .into_par_iter()
        .map(|(tag, obs)| {
            let mut point_cfg = cfg.clone();
            point_cfg.chain.seed = derive_seed(cfg.chain.seed, tag);
            martingale_step_check(exhaustion, n, &obs, &lambda, &point_cfg)
        })
        .collect::<Result<_, _>>()?;
    Ok(results.into_iter().flatten().collect())
}

/// Letac suite: cone quadrature against the closed form for one interior
/// vertex on a 5x5 parameter grid (tolerance `1e-6`), for two interior
/// vertices on a small coupling/parameter grid (tolerance `1e-4`), the
/// scaling reduction, and the conditional-expectation closed form
/// (tolerance `1e-8`).
pub fn letac_suite(spec: &QuadratureSpec) -> Result<Vec<IdentityVerdict>, QuadratureError> {
    let grid = [0.5, 1.0, 2.0, 4.0, 8.0];
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &p in &grid {
        for &t in &grid {
            points.push((p, t));
        }
    }
    let mut verdicts: Vec<IdentityVerdict> = points
        .par_iter()
        .map(|&(p, t)| -> Result<IdentityVerdict, QuadratureError> {
            let phi = DVector::from_vec(vec![p]);
            let theta = DVector::from_vec(vec![t]);
            let lhs = letac_lhs(&single_edge_graph(), &phi, &theta, spec)?;
            let rhs = letac_rhs(&phi, &theta)?;
            Ok(IdentityVerdict::exact(
                format!("cone integral |V|=1, phi={p}, theta={t}"),
                "int_{H_b>0} = (pi/2)^{|V|/2} e^{-<phi,theta>}/prod(phi)",
                lhs,
                rhs,
                1e-6,
            ))
        })
        .collect::<Result<_, _>>()?;

    let dim2: Vec<(f64, [f64; 2], [f64; 2])> = vec![
        (1.0, [1.0, 1.0], [1.0, 1.0]),
        (0.6, [1.5, 0.8], [0.7, 1.2]),
        (2.5, [1.0, 2.0], [2.0, 0.5]),
        (1.0, [0.7, 0.7], [3.0, 1.0]),
    ];
    let two: Vec<IdentityVerdict> = dim2
        .par_iter()
        .map(|&(w, p, t)| -> Result<IdentityVerdict, QuadratureError> {
            let graph =
                PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, w)]).unwrap();
            let phi = DVector::from_vec(p.to_vec());
            let theta = DVector::from_vec(t.to_vec());
            let lhs = letac_lhs(&graph, &phi, &theta, spec)?;
            let rhs = letac_rhs(&phi, &theta)?;
            Ok(IdentityVerdict::exact(
                format!("cone integral |V|=2, w={w}, phi={p:?}, theta={t:?}"),
                "int_{H_b>0} = (pi/2)^{|V|/2} e^{-<phi,theta>}/prod(phi)",
                lhs,
                rhs,
                1e-4,
            ))
        })
        .collect::<Result<_, _>>()?;
    verdicts.extend(two);

    // scaling reduction: the general-phi integral equals the phi = 1
    // integral of the rescaled problem divided by prod(phi)
    let full = letac_lhs_dim1(2.0, 1.0, spec)?;
    let reduced = letac_lhs_dim1(1.0, 2.0, spec)? / 2.0;
    verdicts.push(IdentityVerdict::exact(
        "scaling reduction |V|=1, phi=2",
        "lhs(W, phi, theta) = lhs(W', 1, phi theta)/prod(phi)",
        full,
        reduced,
        1e-6,
    ));
    let graph = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.4)]).unwrap();
    let phi = DVector::from_vec(vec![2.0, 0.8]);
    let theta = DVector::from_vec(vec![0.9, 1.1]);
    let full = letac_lhs(&graph, &phi, &theta, spec)?;
    let w_scaled = 1.4 * phi[0] * phi[1];
    let graph_scaled =
        PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, w_scaled)]).unwrap();
    let ones = DVector::from_vec(vec![1.0, 1.0]);
    let theta_scaled = theta.component_mul(&phi);
    let reduced =
        letac_lhs(&graph_scaled, &ones, &theta_scaled, spec)? / (phi[0] * phi[1]);
    verdicts.push(IdentityVerdict::exact(
        "scaling reduction |V|=2",
        "lhs(W, phi, theta) = lhs(W', 1, phi theta)/prod(phi)",
        full,
        reduced,
        1e-4,
    ));
    Ok(verdicts)
}

/// Conditional-expectation suite: quadrature against the closed form on a
/// log-spaced grid of edge weights and coefficients.
pub fn cond_exp_suite(spec: &QuadratureSpec) -> Result<Vec<IdentityVerdict>, QuadratureError> {
    let weights = [0.1, 0.31622776601683794, 1.0, 3.1622776601683795, 10.0];
    let coefficients = [0.0, 0.01, 0.1, 1.0, 10.0];
    let mut jobs = Vec::new();
    for &w in &weights {
        for &c in &coefficients {
            jobs.push((w, c));
        }
    }
    jobs.par_iter()
        .map(|&(w, c)| cond_exp_closed_form_check(w, c, spec, 1e-8))
        .collect()
}

/// Kolmogorov–Smirnov distance between sampled interior values of the
/// single-edge field and the quadrature CDF of its density.
pub fn ks_distance_single_edge(w: f64, samples: &[f64]) -> f64 {
    let norm = (w / (2.0 * std::f64::consts::PI)).sqrt();
    let density = |t: f64| norm * (-w * (t.cosh() - 1.0) - 0.5 * t).exp();
    let (lo, hi, panels) = (-14.0f64, 14.0f64, 4000usize);
    let width = (hi - lo) / panels as f64;
    let mut cum = Vec::with_capacity(panels + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let out = integrate(density, a, a + width, 1e-9, 1e-16, 64)
            .expect("smooth panel integral converges");
        acc += out.value;
        cum.push(acc);
    }
    let total = acc;
    let cdf = |t: f64| -> f64 {
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        let pos = (t - lo) / width;
        let idx = (pos.floor() as usize).min(panels - 1);
        let frac = pos - idx as f64;
        ((1.0 - frac) * cum[idx] + frac * cum[idx + 1]) / total
    };

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut dist: f64 = 0.0;
    for (i, &t) in sorted.iter().enumerate() {
        let f = cdf(t);
        dist = dist.max((f - (i + 1) as f64 / n).abs());
        dist = dist.max((f - i as f64 / n).abs());
    }
    dist
}

/// Sampler self-test suite: Kolmogorov–Smirnov agreement with the quadrature
/// CDF, standard-error calibration across independent seeds, and the
/// conditional Gaussian moments of `s` against the Green's function.
pub fn sampler_selftest_suite(cfg: &CheckConfig) -> Result<Vec<IdentityVerdict>, IdentityError> {
    let graph = single_edge_graph();
    let mut verdicts = Vec::new();

    // KS distance at high effective sample size
    {
        let chain = ChainConfig {
            seed: derive_seed(cfg.chain.seed, 0x4b51),
            burn_in: cfg.chain.burn_in.max(10_000),
            samples: cfg.chain.samples.max(150_000),
            thinning: cfg.chain.thinning.max(8),
            ..cfg.chain.clone()
        };
        let run = run_chain(&graph, &chain)?;
        let values: Vec<f64> = run.samples.iter().map(|u| u[0]).collect();
        let dist = ks_distance_single_edge(1.0, &values);
        verdicts.push(IdentityVerdict::bounded(
            format!("KS distance at {} retained samples", values.len()),
            "empirical CDF of u matches the quadrature CDF",
            dist,
            0.01,
        ));
    }

    // z-score calibration across 50 seeds
    {
        let truth = integrate_real_line(
            |t| {
                (t - (t.cosh() - 1.0) - 0.5 * t).exp()
                    * (1.0 / (2.0 * std::f64::consts::PI)).sqrt()
            },
            1e-12,
            0.0,
            4000,
        )
        .expect("smooth density integral converges")
        .value;
        let zs: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|k| {
                let chain = ChainConfig {
                    seed: derive_seed(cfg.chain.seed, 0x2ca1_0000 + k),
                    burn_in: 4_000,
                    samples: 40_000,
                    thinning: 4,
                    ..ChainConfig::default()
                };
                let est = mc_expectation(&graph, &chain, 0, |fc| fc.u()[0].exp())
                    .expect("chain on the single-edge graph runs");
                est.z_score(truth)
            })
            .collect();
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        let sd = (zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (zs.len() as f64 - 1.0))
            .sqrt();
        verdicts.push(IdentityVerdict::in_interval(
            "z-score calibration over 50 seeds",
            "standard errors are honest: SD of z lies in [0.6, 1.6]",
            sd,
            0.6,
            1.6,
        ));
    }

    // conditional Gaussian moments at a fixed field against the Green's
    // function, on the three-vertex path
    {
        let path = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let u = DVector::from_vec(vec![0.35, -0.55, 0.0]);
        let green = green_function(&path, &u).unwrap();
        let cond = SConditional::new(&path, &u)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.chain.seed, 0x6a0e));
        let n = 200_000usize;
        let mut m00 = Vec::with_capacity(n);
        let mut m01 = Vec::with_capacity(n);
        let mut m11 = Vec::with_capacity(n);
        let theta = DVector::from_vec(vec![0.8, -0.6, 0.3]);
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for _ in 0..n {
            let s = cond.draw(&mut rng);
            m00.push(s[0] * s[0] * (2.0 * u[0]).exp());
            m01.push(s[0] * s[1] * (u[0] + u[1]).exp());
            m11.push(s[1] * s[1] * (2.0 * u[1]).exp());
            let phase: f64 = (0..3).map(|i| theta[i] * s[i] * u[i].exp()).sum();
            re.push(phase.cos());
            im.push(phase.sin());
        }
        for (name, series, target) in [
            ("E[s_0^2 e^{2u_0} | u]", &m00, green.entry(0, 0)),
            ("E[s_0 s_1 e^{u_0+u_1} | u]", &m01, green.entry(0, 1)),
            ("E[s_1^2 e^{2u_1} | u]", &m11, green.entry(1, 1)),
        ] {
            verdicts.push(IdentityVerdict::statistical(
                name,
                "E[s_i s_j e^{u_i+u_j} | u] = G_ij(u)",
                batch_means(series),
                target,
                cfg.z_threshold,
            ));
        }
        let target = (-0.5 * green.quad_form(&theta)).exp();
        verdicts.push(IdentityVerdict::statistical(
            "conditional characteristic function, real part",
            "E[e^{i<theta, s e^u>} | u] = e^{-<theta, G theta>/2}",
            batch_means(&re),
            target,
            cfg.z_threshold,
        ));
        verdicts.push(IdentityVerdict::statistical(
            "conditional characteristic function, imaginary part",
            "Im E[e^{i<theta, s e^u>} | u] = 0",
            batch_means(&im),
            0.0,
            cfg.z_threshold,
        ));
    }

    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_graphs_are_valid_and_varied() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sizes = std::collections::HashSet::new();
        for _ in 0..40 {
            let g = random_pinned_graph(&mut rng, 8);
            sizes.insert(g.n_interior());
            assert!(g.n_interior() >= 1 && g.n_interior() <= 8);
        }
        assert!(sizes.len() > 3);
    }

    #[test]
    fn single_neighbor_graph_has_pin_degree_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_single_neighbor_pin_graph(&mut rng, 6);
            assert_eq!(g.neighbors(g.pin_index()).len(), 1);
            assert!(g.n_interior() >= 2);
        }
    }

    #[test]
    fn random_exhaustions_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let exh = random_exhaustion(&mut rng);
            assert_eq!(exh.num_levels(), 2);
            for n in 1..=2 {
                exh.wired_collapse(n).unwrap();
            }
        }
    }

    #[test]
    fn exact_algebra_suite_passes_quickly() {
        let verdicts = exact_algebra_suite(5, 25, 1e-10);
        assert_eq!(verdicts.len(), 6);
        for v in &verdicts {
            assert!(v.pass, "{}: err {}", v.name, v.score.value());
        }
    }

    #[test]
    fn consistency_suite_on_random_exhaustions() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for k in 0..10 {
            let exh = random_exhaustion(&mut rng);
            let verdicts = consistency_suite(&exh, 100 + k, 1e-12, 3).unwrap();
            for v in verdicts {
                assert!(v.pass, "{}: err {}", v.name, v.score.value());
            }
        }
    }

    #[test]
    fn ks_distance_detects_wrong_law() {
        // standard normal samples against the single-edge CDF: far apart
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let wrong: Vec<f64> = (0..20_000)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        assert!(ks_distance_single_edge(1.0, &wrong) > 0.05);
    }
}
