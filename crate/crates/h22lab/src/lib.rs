//! Numerical laboratory for the bosonic sector of the H^{2|2} hyperbolic
//! sigma model on finite pinned graphs.
//!
//! The model assigns to a finite connected weighted graph with a pin vertex
//! a probability measure over field pairs `(u, s)` clamped to zero at the
//! pin. Its exact structure makes every claim testable: a closed-form
//! Laplace transform of the environment field `beta`, Ward identities, a
//! local scaling transformation with an explicit Radon-Nikodym factor, a
//! hierarchy of martingale observables across wired-boundary collapses, and
//! a closed-form integral over the cone of positive definite `H_b`
//! matrices. This crate implements the objects and turns each identity into
//! an exact or statistical verification with reproducible seeds.
//!
//! Module map:
//!
//! - [`graph`]: pinned weighted graphs, host exhaustions, wired collapses,
//!   and their JSON file formats.
//! - [`fields`]: Laplacian assembly, the environment field, the Green's
//!   function, `H_b`, field reconstruction, the local scaling
//!   transformation, and the rank-one Green decomposition.
//! - [`measure`]: the `u`-marginal log-density, exact conditional `s`
//!   sampling, the closed-form Laplace transform, the Radon–Nikodym factor,
//!   the unpinned environment density, and boundary restriction of
//!   observables.
//! - [`sampler`]: adaptive componentwise Metropolis over the `u` marginal
//!   and batch-means estimation.
//! - [`identities`]: Ward, Laplace, importance-sampling, consistency, and
//!   cross-level martingale checks.
//! - [`quadrature`]: deterministic cone integrals and the single-edge
//!   conditional-expectation closed form.
//! - [`suites`]: named bundles of checks with seeded instance generation.
//! - [`cli`]: run configuration and report emission behind the `verify`
//!   binary.
//!
//! The `examples/` directory holds one runnable program per capability; the
//! `verify` binary drives the suites from the command line.

pub mod cli;
pub mod fields;
pub mod graph;
pub mod identities;
pub mod integrate;
pub mod measure;
pub mod quadrature;
pub mod report;
pub mod sampler;
pub mod suites;
