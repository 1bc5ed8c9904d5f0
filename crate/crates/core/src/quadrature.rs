//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands and a
//! cycle-summed Fourier-cosine integral over a semi-infinite range.

#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

// 21-point Kronrod abscissae (non-negative half) and weights; the odd
// entries are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452710,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// One Gauss–Kronrod panel: Kronrod estimate and `|K − G|`.
fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::default();
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    ((kronrod * half), ((kronrod - gauss) * half).norm())
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[a, b]`: the panel with the largest
/// error estimate is bisected until the summed estimate is below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_panels: usize) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!("infinite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: Complex64::default(), abs_error: 0.0, evaluations: 0 });
    }
    let (value, error) = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::QuadratureFailure("integrand is not finite".into()));
        }
        if total_err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(QuadResult { value: total, abs_error: total_err, evaluations });
        }
        if heap.len() >= max_panels {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {total_err:e} above tolerance after {max_panels} panels"
            )));
        }
        let Some(worst) = heap.pop() else { unreachable!() };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureFailure("panel width underflow".into()));
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        // avoid drift of the running sums
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// `∫_a^∞ f(x) dx` via `x = a + s/(1 − s)` on `[0, 1)`. Suitable for
/// integrands decaying at least as `1/x²`.
pub fn integrate_semi_infinite<F: Fn(f64) -> Complex64>(f: F, a: f64, abs_tol: f64) -> Result<QuadResult> {
    let g = |s: f64| {
        if s >= 1.0 {
            return Complex64::default();
        }
        let u = 1.0 - s;
        f(a + s / u) / (u * u)
    };
    integrate(g, 0.0, 1.0, abs_tol, 0.0, 4096)
}

/// Wynn epsilon extrapolation of a sequence of partial sums.
fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    if n < 3 {
        return *sums.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = *sums.last().unwrap();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 {
                return if col % 2 == 0 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            best = *cur.last().unwrap();
        }
    }
    best
}

/// `∫_a^∞ f(x) cos(ωx) dx` for `f` decaying to zero: the range is cut into
/// half-periods `π/|ω|`, each integrated adaptively, and the resulting
/// alternating partial sums are accelerated by the epsilon algorithm.
pub fn integrate_cos_tail<F: Fn(f64) -> Complex64>(f: F, a: f64, omega: f64, abs_tol: f64) -> Result<QuadResult> {
    if omega == 0.0 {
        return integrate_semi_infinite(f, a, abs_tol);
    }
    const MIN_CYCLES: usize = 12;
    const MAX_CYCLES: usize = 2000;
    let w = omega.abs();
    let half_period = PI / w;
    // start the cycles on a zero of cos(ωx) beyond a
    let first_zero = ((a * w / PI - 0.5).ceil() + 0.5) * half_period;
    let g = |x: f64| f(x) * (w * x).cos();
    let head = integrate(g, a, first_zero, abs_tol * 0.1, 0.0, 1024)?;
    let mut evaluations = head.evaluations;
    let (mut re_sums, mut im_sums) = (Vec::new(), Vec::new());
    let mut acc = head.value;
    let mut last_estimate: Option<Complex64> = None;
    let mut stable = 0;
    for n in 0..MAX_CYCLES {
        let lo = first_zero + n as f64 * half_period;
        let part = integrate(g, lo, lo + half_period, abs_tol * 0.01, 0.0, 1024)?;
        evaluations += part.evaluations;
        acc += part.value;
        re_sums.push(acc.re);
        im_sums.push(acc.im);
        if n + 1 < MIN_CYCLES {
            continue;
        }
        // extrapolate from a bounded window of recent partial sums
        let from = re_sums.len().saturating_sub(24);
        let estimate = Complex64::new(wynn_epsilon(&re_sums[from..]), wynn_epsilon(&im_sums[from..]));
        if let Some(prev) = last_estimate {
            let change = (estimate - prev).norm();
            if change < 0.1 * abs_tol {
                stable += 1;
                if stable >= 3 {
                    return Ok(QuadResult { value: estimate, abs_error: change.max(head.abs_error), evaluations });
                }
            } else {
                stable = 0;
            }
        }
        last_estimate = Some(estimate);
    }
    Err(Error::QuadratureFailure(format!("Fourier tail did not converge in {MAX_CYCLES} cycles")))
}
