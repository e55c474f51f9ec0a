//! Markov chain Monte Carlo over the `u` marginal and generic estimation.
//!
//! The chain is componentwise random-walk Metropolis targeting
//! [`crate::measure::log_density_u`]. Step sizes adapt per coordinate during
//! burn-in toward a fixed acceptance rate and are frozen afterwards, so the
//! sampling phase leaves the target invariant. Everything is deterministic
//! given the seed.
//!
//! [`estimate`] evaluates a functional of `(u, s)` along the chain, drawing
//! fresh conditional `s` samples for every retained `u`, and reports an
//! autocorrelation-aware standard error from batch means.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::fields::FieldConfig;
use crate::graph::PinnedGraph;
use crate::measure::{log_density_u, MeasureError, SConditional};

/// Sampler failures.
#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("functional returned non-finite value {value} at sample {index}")]
    NonFiniteFunctional { index: usize, value: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Configuration of a single chain.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub samples: usize,
    pub thinning: usize,
    pub initial_step_size: f64,
    pub target_accept: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            burn_in: 20_000,
            samples: 200_000,
            thinning: 1,
            initial_step_size: 1.0,
            target_accept: 0.44,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.samples == 0 {
            return Err(SamplerError::InvalidConfig("samples must be >= 1"));
        }
        if self.thinning == 0 {
            return Err(SamplerError::InvalidConfig("thinning must be >= 1"));
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return Err(SamplerError::InvalidConfig("step size must be positive"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(SamplerError::InvalidConfig(
                "target acceptance must lie in (0, 1)",
            ));
        }
        Ok(())
    }

    /// Same configuration with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Output of a chain: retained `u` vectors (over the full vertex set, pin
/// entry zero) plus per-coordinate diagnostics from the sampling phase.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub samples: Vec<DVector<f64>>,
    pub acceptance: Vec<f64>,
    pub step_sizes: Vec<f64>,
}

/// Stable seed derivation for independent streams (splitmix64 over the pair).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// Burned-in chain state with frozen step sizes.
struct ChainState<'g> {
    graph: &'g PinnedGraph,
    rng: ChaCha8Rng,
    u: DVector<f64>,
    logp: f64,
    log_step: Vec<f64>,
    accepted: Vec<u64>,
    sweeps: u64,
}

impl<'g> ChainState<'g> {
    // Initialize at u = 0 and adapt the per-coordinate step sizes during
    // burn-in by a Robbins–Monro recursion on the acceptance probability
    // (lower adaptation noise than the accept indicator).
    fn burn_in(graph: &'g PinnedGraph, cfg: &ChainConfig) -> Result<Self, SamplerError> {
        cfg.validate()?;
        let nv = graph.n_interior();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut u = DVector::zeros(graph.n_total());
        let mut logp = log_density_u(graph, &u).value;
        let mut log_step = vec![cfg.initial_step_size.ln(); nv];
        for t in 0..cfg.burn_in {
            let gamma = (t as f64 + 1.0).powf(-0.6);
            for i in 0..nv {
                let old = u[i];
                let noise: f64 = rng.sample(StandardNormal);
                u[i] = old + log_step[i].exp() * noise;
                let proposed = log_density_u(graph, &u).value;
                let accept_prob = (proposed - logp).exp().min(1.0);
                if rng.random::<f64>() < accept_prob {
                    logp = proposed;
                } else {
                    u[i] = old;
                }
                log_step[i] += gamma * (accept_prob - cfg.target_accept);
                log_step[i] = log_step[i].clamp(-20.0, 20.0);
            }
        }
        Ok(Self {
            graph,
            rng,
            u,
            logp,
            log_step,
            accepted: vec![0; nv],
            sweeps: 0,
        })
    }

    // One frozen-step Metropolis sweep over the coordinates.
    fn sweep(&mut self) {
        let nv = self.log_step.len();
        for i in 0..nv {
            let old = self.u[i];
            let noise: f64 = self.rng.sample(StandardNormal);
            self.u[i] = old + self.log_step[i].exp() * noise;
            let proposed = log_density_u(self.graph, &self.u).value;
            let accept_prob = (proposed - self.logp).exp().min(1.0);
            if self.rng.random::<f64>() < accept_prob {
                self.logp = proposed;
                self.accepted[i] += 1;
            } else {
                self.u[i] = old;
            }
        }
        self.sweeps += 1;
    }

    fn acceptance(&self) -> Vec<f64> {
        self.accepted
            .iter()
            .map(|&a| a as f64 / self.sweeps.max(1) as f64)
            .collect()
    }
}

/// Run a componentwise random-walk Metropolis chain on the `u` marginal.
/// During burn-in each coordinate's log step size follows a Robbins–Monro
/// recursion toward the target acceptance; afterwards the steps are frozen.
pub fn run_chain(graph: &PinnedGraph, cfg: &ChainConfig) -> Result<ChainRun, SamplerError> {
    let mut state = ChainState::burn_in(graph, cfg)?;
    let mut samples = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thinning {
            state.sweep();
        }
        samples.push(state.u.clone());
    }
    Ok(ChainRun {
        samples,
        acceptance: state.acceptance(),
        step_sizes: state.log_step.iter().map(|l| l.exp()).collect(),
    })
}

/// A Monte Carlo mean with a batch-means standard error and the implied
/// effective sample size.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ess: f64,
    pub n: usize,
}

impl McEstimate {
    /// Standardized deviation from a reference value. Zero standard error
    /// gives zero when the deviation vanishes and infinity otherwise.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Standardized difference between two independent estimates.
    pub fn z_against(&self, other: &McEstimate) -> f64 {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        let diff = self.mean - other.mean;
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Batch-means summary of a (possibly autocorrelated) scalar series, using
/// about `sqrt(n)` batches.
pub fn batch_means(values: &[f64]) -> McEstimate {
    let n = values.len();
    assert!(n > 0, "empty sample sequence");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return McEstimate {
            mean,
            std_error: 0.0,
            ess: 1.0,
            n,
        };
    }
    let var_all = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);

    let b = (n as f64).sqrt().floor() as usize;
    let b = b.max(2);
    let len = n / b;
    let used = b * len;
    let mut batch_var = 0.0;
    let used_mean = values[..used].iter().sum::<f64>() / used as f64;
    for k in 0..b {
        let bm = values[k * len..(k + 1) * len].iter().sum::<f64>() / len as f64;
        batch_var += (bm - used_mean).powi(2);
    }
    batch_var /= b as f64 - 1.0;
    let std_error = (batch_var / b as f64).sqrt();
    let ess = if std_error > 0.0 {
        (var_all / std_error.powi(2)).clamp(1.0, n as f64)
    } else {
        n as f64
    };
    McEstimate {
        mean,
        std_error,
        ess,
        n,
    }
}

/// Evaluate a functional of `(u, s)` along retained `u` samples. For each
/// retained `u`, `s_draws_per_u` fresh conditional `s` vectors are drawn and
/// the functional values are averaged before entering the time series; zero
/// draws evaluates the functional at `s = 0` (for `u`-only functionals).
pub fn estimate<F>(
    graph: &PinnedGraph,
    samples: &[DVector<f64>],
    s_draws_per_u: usize,
    seed: u64,
    f: F,
) -> Result<McEstimate, SamplerError>
where
    F: Fn(&FieldConfig) -> f64,
{
    assert!(!samples.is_empty(), "no samples to estimate from");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x735f));
    let zero_s = DVector::zeros(graph.n_total());
    let mut values = Vec::with_capacity(samples.len());
    for (index, u) in samples.iter().enumerate() {
        let value = if s_draws_per_u == 0 {
            let fc = FieldConfig::from_parts_unchecked(u.clone(), zero_s.clone());
            f(&fc)
        } else {
            let cond = SConditional::new(graph, u)?;
            let mut acc = 0.0;
            for _ in 0..s_draws_per_u {
                let s = cond.draw(&mut rng);
                let fc = FieldConfig::from_parts_unchecked(u.clone(), s);
                acc += f(&fc);
            }
            acc / s_draws_per_u as f64
        };
        if !value.is_finite() {
            return Err(SamplerError::NonFiniteFunctional { index, value });
        }
        values.push(value);
    }
    Ok(batch_means(&values))
}

/// Run a fresh chain and estimate one functional on it without retaining
/// the field vectors, so large budgets stay cheap in memory. Produces the
/// same numbers as [`run_chain`] followed by [`estimate`] with the chain's
/// seed, because the chain and the conditional draws use independent
/// streams.
pub fn mc_expectation<F>(
    graph: &PinnedGraph,
    cfg: &ChainConfig,
    s_draws_per_u: usize,
    f: F,
) -> Result<McEstimate, SamplerError>
where
    F: Fn(&FieldConfig) -> f64,
{
    let mut state = ChainState::burn_in(graph, cfg)?;
    let mut rng_s = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x735f));
    let zero_s = DVector::zeros(graph.n_total());
    let mut values = Vec::with_capacity(cfg.samples);
    for index in 0..cfg.samples {
        for _ in 0..cfg.thinning {
            state.sweep();
        }
        let value = if s_draws_per_u == 0 {
            let fc = FieldConfig::from_parts_unchecked(state.u.clone(), zero_s.clone());
            f(&fc)
        } else {
            let cond = SConditional::new(graph, &state.u)?;
            let mut acc = 0.0;
            for _ in 0..s_draws_per_u {
                let s = cond.draw(&mut rng_s);
                let fc = FieldConfig::from_parts_unchecked(state.u.clone(), s);
                acc += f(&fc);
            }
            acc / s_draws_per_u as f64
        };
        if !value.is_finite() {
            return Err(SamplerError::NonFiniteFunctional { index, value });
        }
        values.push(value);
    }
    Ok(batch_means(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PinnedGraph;

    fn single_edge() -> PinnedGraph {
        PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0)]).unwrap()
    }

    fn quick_cfg(seed: u64) -> ChainConfig {
        ChainConfig {
            seed,
            burn_in: 2_000,
            samples: 20_000,
            thinning: 2,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn equal_seeds_give_identical_streams() {
        let g = single_edge();
        let cfg = quick_cfg(7);
        let a = run_chain(&g, &cfg).unwrap();
        let b = run_chain(&g, &cfg).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn expectation_of_exp_u_is_one() {
        let g = single_edge();
        let est = mc_expectation(&g, &quick_cfg(3), 0, |fc| fc.u()[0].exp()).unwrap();
        assert!(
            est.z_score(1.0).abs() <= 3.0,
            "z = {}, mean = {}",
            est.z_score(1.0),
            est.mean
        );
    }

    #[test]
    fn constant_functional_has_zero_se() {
        let g = single_edge();
        let run = run_chain(&g, &quick_cfg(5)).unwrap();
        let est = estimate(&g, &run.samples, 0, 5, |_| 1.0).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.z_score(1.0), 0.0);
        assert_eq!(est.ess, est.n as f64);
    }

    #[test]
    fn streaming_and_compositional_paths_agree() {
        let g = single_edge();
        let cfg = quick_cfg(17);
        let run = run_chain(&g, &cfg).unwrap();
        let via_samples =
            estimate(&g, &run.samples, 2, cfg.seed, |fc| fc.u()[0] * fc.s()[0]).unwrap();
        let streamed = mc_expectation(&g, &cfg, 2, |fc| fc.u()[0] * fc.s()[0]).unwrap();
        assert_eq!(via_samples.mean, streamed.mean);
        assert_eq!(via_samples.std_error, streamed.std_error);
    }

    #[test]
    fn acceptance_is_near_target() {
        let g = single_edge();
        let run = run_chain(&g, &quick_cfg(11)).unwrap();
        assert!(
            (run.acceptance[0] - 0.44).abs() < 0.06,
            "acceptance = {}",
            run.acceptance[0]
        );
    }

    #[test]
    fn non_finite_functional_is_reported() {
        let g = single_edge();
        let run = run_chain(&g, &quick_cfg(1)).unwrap();
        let err = estimate(&g, &run.samples, 0, 1, |fc| 1.0 / (fc.u()[0] - fc.u()[0]))
            .unwrap_err();
        assert!(matches!(err, SamplerError::NonFiniteFunctional { .. }));
    }

    #[test]
    fn lag_two_crossing_counts_balance_under_reversibility() {
        // On a two-set discretization of the state, equality of the lag-2
        // crossing frequencies is implied by reversibility of the frozen
        // kernel but not by stationarity alone.
        let g = single_edge();
        let run = run_chain(&g, &quick_cfg(13)).unwrap();
        let flags: Vec<bool> = run.samples.iter().map(|u| u[0] > 0.0).collect();
        let diffs: Vec<f64> = flags
            .windows(3)
            .map(|w| match (w[0], w[2]) {
                (false, true) => 1.0,
                (true, false) => -1.0,
                _ => 0.0,
            })
            .collect();
        let est = batch_means(&diffs);
        assert!(est.z_score(0.0).abs() <= 3.0, "z = {}", est.z_score(0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = ChainConfig {
            thinning: 0,
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
