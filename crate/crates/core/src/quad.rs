//! Adaptive Gauss-Kronrod quadrature plus the endpoint substitutions used
//! throughout the crate for integrands with algebraic singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and the subdivision budget for one integral evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 400,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::OutOfRange(format!(
                "quadrature tolerances must be strictly positive, got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        Ok(())
    }
}

// 15-point Kronrod abscissae on [-1,1] and the matching Gauss-7 weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 panel; returns (kronrod value, error estimate, absolute integral).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0_f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err, res_abs)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive integration of `f` over `[a, b]`. The integrand must be finite
/// on the open interval; endpoint singularities belong in the `*_algebraic`
/// variants below.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, qs: &QuadratureSettings) -> Result<f64> {
    qs.validate()?;
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration bounds must be finite".into()));
    }

    let (v, e, _) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        err: e,
    });
    let mut total = v;
    let mut total_err = e;

    for _ in 0..qs.max_subdivisions {
        if total_err <= qs.abs_tol.max(qs.rel_tol * total.abs()) {
            break;
        }
        let worst = heap.pop().expect("heap never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in f64; keep its estimate
            total_err -= worst.err;
            total_err += worst.err * 1e-3;
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        let (v1, e1, _) = gk15(&f, worst.a, mid);
        let (v2, e2, _) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }

    if total_err > qs.abs_tol.max(qs.rel_tol * total.abs()) * 10.0 {
        return Err(Error::Quadrature(format!(
            "error estimate {:.3e} above tolerance after {} subdivisions (value {:.6e})",
            total_err, qs.max_subdivisions, total
        )));
    }
    if !total.is_finite() {
        return Err(Error::Quadrature("integral evaluated to a non-finite value".into()));
    }
    Ok(total)
}

/// Computes `int_a^b (u-a)^{c-1} * smooth(u) du` for `c` in `(0, 1]` by the
/// substitution `t = (u-a)^c`, which removes the endpoint singularity:
/// the transformed integrand is `smooth(a + t^{1/c}) / c` on `[0, (b-a)^c]`.
pub fn integrate_left_algebraic<F: Fn(f64) -> f64>(
    smooth: F,
    a: f64,
    b: f64,
    c: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if b < a {
        return Err(Error::Domain(format!("bad bounds [{a}, {b}]")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("singularity exponent c = {c} must be positive")));
    }
    let upper = (b - a).powf(c);
    let inv_c = 1.0 / c;
    integrate(|t| smooth(a + t.powf(inv_c)), 0.0, upper, qs).map(|v| v / c)
}

/// Mirror of [`integrate_left_algebraic`]: `int_a^b (b-u)^{c-1} * smooth(u) du`.
pub fn integrate_right_algebraic<F: Fn(f64) -> f64>(
    smooth: F,
    a: f64,
    b: f64,
    c: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if b < a {
        return Err(Error::Domain(format!("bad bounds [{a}, {b}]")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("singularity exponent c = {c} must be positive")));
    }
    let upper = (b - a).powf(c);
    let inv_c = 1.0 / c;
    integrate(|t| smooth(b - t.powf(inv_c)), 0.0, upper, qs).map(|v| v / c)
}

/// Integration over a wide positive range `[a, b]`, `0 < a < b`, in
/// logarithmic coordinates `u = e^s`. Suited to slowly varying power-law
/// integrands where `b/a` spans many decades.
pub fn integrate_logscale<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::Domain(format!("logscale bounds must satisfy 0 < a <= b, got [{a}, {b}]")));
    }
    integrate(|s| { let u = s.exp(); f(u) * u }, a.ln(), b.ln(), qs)
}
