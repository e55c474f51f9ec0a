//! Verdicts and suite summaries.
//!
//! Every check reduces to an [`IdentityVerdict`]: the two sides of an
//! identity (a Monte Carlo estimate or an exact number each), a score (a
//! z-score for statistical comparisons, a relative error for exact ones),
//! and a pass flag. Suites aggregate verdicts into a [`SuiteSummary`] whose
//! pass logic allows the number of z-score exceedances expected from the
//! chosen threshold.

use serde::Serialize;

use crate::sampler::McEstimate;

/// One side of an identity: either an exact number or an estimate.
#[derive(Debug, Clone, Copy)]
pub enum Side {
    Exact(f64),
    Estimate(McEstimate),
}

impl Side {
    /// The numeric value carried by this side.
    pub fn value(&self) -> f64 {
        match self {
            Side::Exact(v) => *v,
            Side::Estimate(e) => e.mean,
        }
    }

    /// Effective sample size when this side is an estimate.
    pub fn ess(&self) -> Option<f64> {
        match self {
            Side::Exact(_) => None,
            Side::Estimate(e) => Some(e.ess),
        }
    }
}

/// The comparison score of a verdict.
#[derive(Debug, Clone, Copy)]
pub enum Score {
    /// Standardized deviation for statistical comparisons.
    Z(f64),
    /// Relative error for exact comparisons.
    RelErr(f64),
}

impl Score {
    pub fn value(&self) -> f64 {
        match self {
            Score::Z(z) => *z,
            Score::RelErr(r) => *r,
        }
    }
}

/// Outcome of a single identity check.
#[derive(Debug, Clone)]
pub struct IdentityVerdict {
    /// Short human-readable instance label.
    pub name: String,
    /// Stable label of the identity being tested, shared by all instances.
    pub anchor: &'static str,
    pub lhs: Side,
    pub rhs: Side,
    pub score: Score,
    pub pass: bool,
}

impl IdentityVerdict {
    /// Statistical verdict: estimate against an exact value.
    pub fn statistical(
        name: impl Into<String>,
        anchor: &'static str,
        estimate: McEstimate,
        target: f64,
        z_threshold: f64,
    ) -> Self {
        let z = estimate.z_score(target);
        IdentityVerdict {
            name: name.into(),
            anchor,
            lhs: Side::Estimate(estimate),
            rhs: Side::Exact(target),
            score: Score::Z(z),
            pass: z.abs() <= z_threshold,
        }
    }

    /// Statistical verdict comparing two independent estimates.
    pub fn two_run(
        name: impl Into<String>,
        anchor: &'static str,
        lhs: McEstimate,
        rhs: McEstimate,
        z_threshold: f64,
    ) -> Self {
        let z = lhs.z_against(&rhs);
        IdentityVerdict {
            name: name.into(),
            anchor,
            lhs: Side::Estimate(lhs),
            rhs: Side::Estimate(rhs),
            score: Score::Z(z),
            pass: z.abs() <= z_threshold,
        }
    }

    /// Exact verdict: two deterministic numbers compared in relative error.
    pub fn exact(
        name: impl Into<String>,
        anchor: &'static str,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let rel = (lhs - rhs).abs() / scale;
        IdentityVerdict {
            name: name.into(),
            anchor,
            lhs: Side::Exact(lhs),
            rhs: Side::Exact(rhs),
            score: Score::RelErr(rel),
            pass: rel <= tol,
        }
    }

    /// Verdict on a non-negative discrepancy against an upper bound.
    pub fn bounded(
        name: impl Into<String>,
        anchor: &'static str,
        value: f64,
        bound: f64,
    ) -> Self {
        IdentityVerdict {
            name: name.into(),
            anchor,
            lhs: Side::Exact(value),
            rhs: Side::Exact(0.0),
            score: Score::RelErr(value),
            pass: value <= bound,
        }
    }

    /// Verdict on a quantity required to lie in a closed interval.
    pub fn in_interval(
        name: impl Into<String>,
        anchor: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    ) -> Self {
        let mid = 0.5 * (lo + hi);
        IdentityVerdict {
            name: name.into(),
            anchor,
            lhs: Side::Exact(value),
            rhs: Side::Exact(mid),
            score: Score::RelErr((value - mid).abs()),
            pass: (lo..=hi).contains(&value),
        }
    }

    /// True when the score is a z-score.
    pub fn is_statistical(&self) -> bool {
        matches!(self.score, Score::Z(_))
    }
}

/// Serialized verdict record: one JSON object per line of the report.
#[derive(Debug, Serialize)]
pub struct VerdictRecord {
    pub suite: String,
    pub name: String,
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub kind: &'static str,
    pub z_or_relerr: f64,
    pub pass: bool,
}

impl VerdictRecord {
    pub fn new(suite: &str, v: &IdentityVerdict) -> Self {
        VerdictRecord {
            suite: suite.to_string(),
            name: v.name.clone(),
            anchor: v.anchor.to_string(),
            lhs: v.lhs.value(),
            rhs: v.rhs.value(),
            kind: if v.is_statistical() { "statistical" } else { "exact" },
            z_or_relerr: v.score.value(),
            pass: v.pass,
        }
    }
}

/// Trailing per-suite summary record.
#[derive(Debug, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub total: usize,
    pub failures: usize,
    pub max_abs_z: Option<f64>,
    pub z_above_threshold: usize,
    pub statistical_total: usize,
    pub binomial_consistent: bool,
    pub pass: bool,
}

/// Tail probability `P[X >= c]` for `X ~ Binomial(k, p)`.
fn binomial_tail(k: usize, c: usize, p: f64) -> f64 {
    if c == 0 {
        return 1.0;
    }
    let mut tail = 0.0;
    let q = 1.0 - p;
    // log-space binomial pmf to stay accurate for larger k
    let ln_p = p.ln();
    let ln_q = q.ln();
    let mut ln_choose = 0.0; // ln C(k, 0)
    for i in 0..=k {
        if i >= c {
            tail += (ln_choose + i as f64 * ln_p + (k - i) as f64 * ln_q).exp();
        }
        if i < k {
            ln_choose += ((k - i) as f64).ln() - (i as f64 + 1.0).ln();
        }
    }
    tail.min(1.0)
}

/// Statistical exceedances above the per-verdict threshold are tolerated as
/// long as their count is consistent with chance, but no |z| may exceed this
/// ceiling: a 5-sigma deviation has probability ~6e-7 and indicates a defect
/// rather than an unlucky draw.
pub const Z_CEILING: f64 = 5.0;

impl SuiteSummary {
    /// Aggregate a suite's verdicts. Exact verdicts must all pass; the count
    /// of |z| exceedances among statistical verdicts must be consistent with
    /// a Binomial(k, 0.0027) at the 1% level and no |z| may exceed
    /// [`Z_CEILING`].
    pub fn aggregate(suite: &str, verdicts: &[IdentityVerdict]) -> Self {
        let total = verdicts.len();
        let failures = verdicts.iter().filter(|v| !v.pass).count();
        let zs: Vec<f64> = verdicts
            .iter()
            .filter_map(|v| match v.score {
                Score::Z(z) => Some(z.abs()),
                Score::RelErr(_) => None,
            })
            .collect();
        let statistical_total = zs.len();
        let max_abs_z = zs.iter().copied().fold(None, |acc: Option<f64>, z| {
            Some(acc.map_or(z, |m| m.max(z)))
        });
        let z_above_threshold = verdicts
            .iter()
            .filter(|v| v.is_statistical() && !v.pass)
            .count();
        let exact_failures = verdicts
            .iter()
            .filter(|v| !v.is_statistical() && !v.pass)
            .count();
        let binomial_consistent =
            binomial_tail(statistical_total, z_above_threshold, 0.0027) >= 0.01;
        let below_ceiling = max_abs_z.is_none_or(|z| z <= Z_CEILING);
        SuiteSummary {
            suite: suite.to_string(),
            total,
            failures,
            max_abs_z,
            z_above_threshold,
            statistical_total,
            binomial_consistent,
            pass: exact_failures == 0 && binomial_consistent && below_ceiling,
        }
    }
}
