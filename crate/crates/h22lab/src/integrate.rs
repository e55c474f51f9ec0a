//! Adaptive one-dimensional quadrature on finite intervals.
//!
//! Gauss–Kronrod 15(7) panels with greedy bisection of the worst interval.
//! All nodes are interior, so integrands may be singular at the endpoints as
//! long as they extend continuously by zero.

use thiserror::Error;

// Kronrod-15 abscissae (positive half) and weights; the Gauss-7 rule reuses
// the odd-indexed abscissae. Kept at full published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Quadrature failures.
#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFiniteIntegrand(f64),
    #[error(
        "tolerance not reached within {max_segments} segments (value {value:e}, error {abs_error:e})"
    )]
    BudgetExhausted {
        max_segments: usize,
        value: f64,
        abs_error: f64,
    },
}

/// Converged integral with its error estimate and the number of panels used.
#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    pub value: f64,
    pub abs_error: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, IntegrateError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for k in 0..8 {
        let (lo, hi) = (center - half * XGK[k], center + half * XGK[k]);
        let flo = f(lo);
        if !flo.is_finite() {
            return Err(IntegrateError::NonFiniteIntegrand(lo));
        }
        let pair = if k == 7 {
            flo
        } else {
            let fhi = f(hi);
            if !fhi.is_finite() {
                return Err(IntegrateError::NonFiniteIntegrand(hi));
            }
            flo + fhi
        };
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Segment {
        a,
        b,
        value,
        error,
    })
}

/// Integrate `f` over `[a, b]` until the summed panel error drops below
/// `max(abs_tol, rel_tol * |value|)`, bisecting the worst panel at each step.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadOutcome, IntegrateError> {
    assert!(b > a, "empty integration interval");
    let initial = 8usize.min(max_segments.max(1));
    let mut segments = Vec::with_capacity(64);
    let width = (b - a) / initial as f64;
    for k in 0..initial {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == initial { b } else { lo + width };
        segments.push(gk15(&f, lo, hi)?);
    }
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadOutcome {
                value: total,
                abs_error: err,
                segments: segments.len(),
            });
        }
        if segments.len() >= max_segments {
            return Err(IntegrateError::BudgetExhausted {
                max_segments,
                value: total,
                abs_error: err,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty segment list");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        segments.push(gk15(&f, seg.a, mid)?);
        segments.push(gk15(&f, mid, seg.b)?);
    }
}

/// Integrate over the whole real line through the substitution
/// `t = x / (1 - x^2)`, `x` in `(-1, 1)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadOutcome, IntegrateError> {
    integrate(
        move |x| {
            let d = 1.0 - x * x;
            let t = x / d;
            let jac = (1.0 + x * x) / (d * d);
            let v = f(t) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
        rel_tol,
        abs_tol,
        max_segments,
    )
}

/// Integrate over `(0, inf)` through the substitution `t = x / (1 - x)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadOutcome, IntegrateError> {
    integrate(
        move |x| {
            let d = 1.0 - x;
            let t = x / d;
            let v = f(t) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
        max_segments,
    )
}
