//! Closed-form hitting distributions: the point of closest reach for
//! `alpha < 1`, the first entrance law into the centered interval for
//! `alpha >= 1`, the closest reach under the point-avoiding measure for
//! `alpha > 1`, and the asymptotic constants tying each of them to the
//! harmonic functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::harmonic::{self, ExteriorPoint, HarmonicKind};
use crate::model::StableParams;
use crate::quad::{self, QuadratureSettings};
use crate::special::{self, ExponentSide};

/// Side of the interval an event window sits on, seen from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
    Both,
}

/// Window `(a, b)` on the chosen side(s): the event `{target in (a, b)}`
/// on the positive side, `{target in (-b, -a)}` on the negative side, or
/// their union.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingWindow {
    a: f64,
    b: f64,
    pub side: Side,
}

impl HittingWindow {
    /// `0 <= a < b`. A zero `a` denotes a window reaching down to the
    /// origin, which is what the total-mass normalizations integrate over.
    pub fn new(a: f64, b: f64, side: Side) -> Result<Self> {
        if !(a >= 0.0 && b > a) || !b.is_finite() {
            return Err(Error::Domain(format!("window needs 0 <= a < b, got ({a}, {b})")));
        }
        Ok(Self { a, b, side })
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
}

const Z_SPLIT: f64 = 2.0;

/// `int (1 +- 1/z) psi_{Rho}(z) dz` over `(z_lo, z_hi)`, `z_hi = None`
/// meaning infinity. The `z = 1` endpoint singularity and the heavy tail
/// are both removed by algebraic substitutions.
fn z_integral(
    p: &StableParams,
    plus: bool,
    z_lo: f64,
    z_hi: Option<f64>,
    qs: &QuadratureSettings,
) -> Result<f64> {
    let c = p.alpha_rho_hat();
    let d = p.alpha_rho();
    let sgn = if plus { 1.0 } else { -1.0 };
    let kernel = move |z: f64| {
        (1.0 + sgn / z) * (z - 1.0).powf(c - 1.0) * (z + 1.0).powf(d - 1.0)
    };

    let mut total = 0.0;
    let split = Z_SPLIT.max(z_lo);
    let head_hi = z_hi.map_or(split, |h| h.min(split));
    if head_hi > z_lo {
        total += if z_lo == 1.0 {
            quad::integrate_left_algebraic(
                move |z: f64| (1.0 + sgn / z) * (z + 1.0).powf(d - 1.0),
                1.0,
                head_hi,
                c,
                qs,
            )?
        } else {
            quad::integrate(kernel, z_lo, head_hi, qs)?
        };
    }
    match z_hi {
        Some(h) if h > split => total += quad::integrate_logscale(kernel, split, h, qs)?,
        None => {
            // w = 1/z turns the tail into an integrable power at w = 0
            total += quad::integrate_left_algebraic(
                move |w: f64| {
                    (1.0 + sgn * w) * (1.0 - w).powf(c - 1.0) * (1.0 + w).powf(d - 1.0)
                },
                0.0,
                1.0 / split,
                1.0 - p.alpha(),
                qs,
            )?;
        }
        _ => {}
    }
    Ok(total)
}

fn closest_reach_prefactor(p: &StableParams) -> f64 {
    2.0_f64.powf(-p.alpha()) * special::gamma(1.0 - p.alpha_rho())
        / (special::gamma(1.0 - p.alpha()) * special::gamma(p.alpha_rho_hat()))
}

/// Law of the point of closest reach for the free process (`alpha < 1`):
/// probability that it falls in the window. Start points below `-1` are
/// handled through the reflection symmetry.
pub fn closest_reach_mass(
    p: &StableParams,
    x: ExteriorPoint,
    w: &HittingWindow,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if p.alpha() >= 1.0 {
        return Err(Error::Scope(format!(
            "closest reach law requires alpha < 1, got {}",
            p.alpha()
        )));
    }
    let (p, xv, side) = if x.get() > 1.0 {
        (*p, x.get(), w.side)
    } else {
        let side = match w.side {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
            Side::Both => Side::Both,
        };
        (p.reflected(), -x.get(), side)
    };
    let same_side_limit = match side {
        Side::Negative => false,
        _ => true,
    };
    if same_side_limit && w.b > xv * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "same-side window top {} exceeds |x| = {xv}",
            w.b
        )));
    }
    let z_lo = xv / w.b.min(xv);
    let z_hi = if w.a > 0.0 { Some(xv / w.a) } else { None };
    let pref = closest_reach_prefactor(&p);
    let mass = match side {
        Side::Positive => pref * z_integral(&p, true, z_lo, z_hi, qs)?,
        Side::Negative => pref * z_integral(&p, false, z_lo, z_hi, qs)?,
        Side::Both => {
            pref * (z_integral(&p, true, z_lo, z_hi, qs)? + z_integral(&p, false, z_lo, z_hi, qs)?)
        }
    };
    Ok(mass)
}

/// Cross-check form of [`closest_reach_mass`] integrating the density in the
/// original coordinates instead of the substituted ones.
pub fn closest_reach_mass_direct(
    p: &StableParams,
    x: ExteriorPoint,
    w: &HittingWindow,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if p.alpha() >= 1.0 {
        return Err(Error::Scope("alpha < 1 required".into()));
    }
    let (p, xv, side) = if x.get() > 1.0 {
        (*p, x.get(), w.side)
    } else {
        let side = match w.side {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
            Side::Both => Side::Both,
        };
        (p.reflected(), -x.get(), side)
    };
    let pref = closest_reach_prefactor(&p);
    let alpha = p.alpha();
    let arh = p.alpha_rho_hat();
    let ar = p.alpha_rho();
    let hi = w.b.min(xv);

    let one_side = |same: bool| -> Result<f64> {
        // same side: w^{-alpha} (x-w)^{arh-1} (x+w)^{ar}
        // opposite:  w^{-alpha} (x-w)^{arh}   (x+w)^{ar-1}
        let smooth = move |u: f64| {
            if same {
                (xv - u).powf(arh - 1.0) * (xv + u).powf(ar)
            } else {
                (xv - u).powf(arh) * (xv + u).powf(ar - 1.0)
            }
        };
        let mut total = 0.0;
        let mid = 0.5 * (w.a + hi);
        // the left endpoint carries the u^{-alpha} singularity when a = 0
        if w.a == 0.0 {
            total += quad::integrate_left_algebraic(smooth, 0.0, mid, 1.0 - alpha, qs)?;
        } else {
            total += quad::integrate(move |u: f64| smooth(u) * u.powf(-alpha), w.a, mid, qs)?;
        }
        if same && hi == xv {
            total += quad::integrate_right_algebraic(
                move |u: f64| u.powf(-alpha) * (xv + u).powf(ar),
                mid,
                hi,
                arh,
                qs,
            )?;
        } else {
            total += quad::integrate(move |u: f64| smooth(u) * u.powf(-alpha), mid, hi, qs)?;
        }
        Ok(pref * total)
    };

    match side {
        Side::Positive => one_side(true),
        Side::Negative => one_side(false),
        Side::Both => Ok(one_side(true)? + one_side(false)?),
    }
}

/// The constant in front of `v` in the closest-reach window asymptotics:
/// `Gamma(1-a rho) Gamma(1-a rhohat) / (2^a pi Gamma(1-a))`.
fn closest_reach_constant(p: &StableParams) -> f64 {
    special::gamma(1.0 - p.alpha_rho()) * special::gamma(1.0 - p.alpha_rho_hat())
        / (2.0_f64.powf(p.alpha()) * PI * special::gamma(1.0 - p.alpha()))
}

/// Predicted limit of `closest_reach_mass(x, (1, 1+eps)) / eps` as the
/// window shrinks (`alpha < 1`).
pub fn closest_reach_asymptote(p: &StableParams, x: ExteriorPoint, side: Side) -> Result<f64> {
    if p.alpha() >= 1.0 {
        return Err(Error::Scope(format!(
            "closest reach asymptote requires alpha < 1, got {}",
            p.alpha()
        )));
    }
    let v = match side {
        Side::Positive => harmonic::v1(p, x)?,
        Side::Negative => harmonic::v_minus1(p, x)?,
        Side::Both => harmonic::v_total(p, x)?,
    };
    Ok(closest_reach_constant(p) * v)
}

/// Density of the position at first entrance into `(-1, 1)` from `X`
/// outside the interval (`alpha >= 1`). Start points below `-1` use the
/// reflected formula.
pub fn first_entrance_density(
    p: &StableParams,
    x_start: f64,
    y: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if p.alpha() < 1.0 {
        return Err(Error::Scope(format!(
            "first entrance law requires alpha >= 1, got {}",
            p.alpha()
        )));
    }
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::Domain(format!("interior point required, got y = {y}")));
    }
    if x_start.abs() <= 1.0 {
        return Err(Error::Domain(format!("start point must be exterior, got {x_start}")));
    }
    let (p, xs, yy) = if x_start > 1.0 {
        (*p, x_start, y)
    } else {
        (p.reflected(), -x_start, -y)
    };
    let ar = p.alpha_rho();
    let arh = p.alpha_rho_hat();
    let boundary = (1.0 + yy).powf(-ar) * (1.0 - yy).powf(-arh);
    let head = (xs + 1.0).powf(ar) * (xs - 1.0).powf(arh) / (xs - yy);
    let tail = if p.alpha() > 1.0 {
        (p.alpha() - 1.0) * special::psi_primitive(&p, ExponentSide::Rho, xs, qs)?
    } else {
        0.0
    };
    Ok(p.sin_pi_alpha_rho_hat() / PI * boundary * (head - tail))
}

fn entrance_one_side(
    p: &StableParams,
    x: f64,
    eps: f64,
    positive: bool,
    qs: &QuadratureSettings,
) -> Result<f64> {
    // scaling reduction: start x/(1+eps), window (1/(1+eps), 1) or mirror
    let (p, x) = if x > 1.0 {
        (*p, x)
    } else {
        (p.reflected(), -x)
    };
    let (p, positive) = (p, positive);
    let xs = x / (1.0 + eps);
    let ar = p.alpha_rho();
    let arh = p.alpha_rho_hat();
    let s = p.sin_pi_alpha_rho_hat() / PI;
    let tail = if p.alpha() > 1.0 {
        (p.alpha() - 1.0) * special::psi_primitive(&p, ExponentSide::Rho, xs, qs)?
    } else {
        0.0
    };
    let head_const = (xs + 1.0).powf(ar) * (xs - 1.0).powf(arh);
    let lo = 1.0 / (1.0 + eps);
    if positive {
        // (1 - y)^{-arh} singular at 1; substitution exponent 1 - arh
        quad::integrate_right_algebraic(
            move |y: f64| s * (1.0 + y).powf(-ar) * (head_const / (xs - y) - tail),
            lo,
            1.0,
            1.0 - arh,
            qs,
        )
    } else {
        quad::integrate_left_algebraic(
            move |y: f64| s * (1.0 - y).powf(-arh) * (head_const / (xs - y) - tail),
            -1.0,
            -lo,
            1.0 - ar,
            qs,
        )
    }
}

/// `P^x( xi at first entrance into (-(1+eps), 1+eps) lies in (1, 1+eps) )`
/// (positive side), the mirror window, or their union (`alpha >= 1`).
pub fn entrance_window_mass(
    p: &StableParams,
    x: ExteriorPoint,
    eps: f64,
    side: Side,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if p.alpha() < 1.0 {
        return Err(Error::Scope(format!(
            "entrance window law requires alpha >= 1, got {}",
            p.alpha()
        )));
    }
    if !(eps > 0.0) || x.get().abs() <= 1.0 + eps {
        return Err(Error::Domain(format!(
            "need |x| > 1 + eps, got x = {}, eps = {eps}",
            x.get()
        )));
    }
    // reflection for x < -1 swaps the window side
    let (positive_first, xv) = (x.get() > 1.0, x.get());
    let one = |want_positive: bool| -> Result<f64> {
        if positive_first {
            entrance_one_side(p, xv, eps, want_positive, qs)
        } else {
            entrance_one_side(&p.reflected(), -xv, eps, !want_positive, qs)
        }
    };
    match side {
        Side::Positive => one(true),
        Side::Negative => one(false),
        Side::Both => Ok(one(true)? + one(false)?),
    }
}

/// The predicted entrance-window asymptote: the limit of
/// `eps^{a rhohat - 1} * mass_positive` is `2^{-a rho} v1(x) / (pi (1 - a rhohat))`,
/// and the negative-side mirror swaps the exponent roles and uses `v_{-1}`.
pub fn entrance_window_asymptote(p: &StableParams, x: ExteriorPoint, side: Side) -> Result<f64> {
    if p.alpha() < 1.0 {
        return Err(Error::Scope("alpha >= 1 required".into()));
    }
    match side {
        Side::Positive => Ok(2.0_f64.powf(-p.alpha_rho()) * harmonic::v1(p, x)?
            / (PI * (1.0 - p.alpha_rho_hat()))),
        Side::Negative => Ok(2.0_f64.powf(-p.alpha_rho_hat()) * harmonic::v_minus1(p, x)?
            / (PI * (1.0 - p.alpha_rho()))),
        Side::Both => Err(Error::Domain(
            "the two sides scale with different powers of eps; no joint asymptote".into(),
        )),
    }
}

/// Closest-reach window law under the point-avoiding measure (`alpha > 1`):
/// `(alpha-1)/(2 sin(pi a rhohat)) * int w^{-alpha} v_kind(w) dw` over the
/// window mapped into `w = x/z` coordinates. `V1` is the positive-side
/// window, `VMinus1` the negative one, `V` their union.
pub fn circ_closest_reach_mass(
    p: &StableParams,
    x: ExteriorPoint,
    w: &HittingWindow,
    kind: HarmonicKind,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if p.alpha() <= 1.0 {
        return Err(Error::Scope(format!(
            "point-avoiding closest reach requires alpha > 1, got {}",
            p.alpha()
        )));
    }
    let (p, xv, kind) = if x.get() > 1.0 {
        (*p, x.get(), kind)
    } else {
        let kind = match kind {
            HarmonicKind::V1 => HarmonicKind::VMinus1,
            HarmonicKind::VMinus1 => HarmonicKind::V1,
            HarmonicKind::V => HarmonicKind::V,
            HarmonicKind::H => {
                return Err(Error::Domain("kind must be V1, VMinus1 or V".into()))
            }
        };
        (p.reflected(), -x.get(), kind)
    };
    if matches!(kind, HarmonicKind::H) {
        return Err(Error::Domain("kind must be V1, VMinus1 or V".into()));
    }
    if w.b > xv * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "window top {} exceeds |x| = {xv}",
            w.b
        )));
    }
    let alpha = p.alpha();
    let arh = p.alpha_rho_hat();
    // inner evaluations run at the default tolerance; the outer pass stays
    // above their noise floor
    let outer = QuadratureSettings {
        rel_tol: qs.rel_tol.max(1e-9),
        abs_tol: qs.abs_tol.max(1e-13),
        max_subdivisions: qs.max_subdivisions,
    };
    let hk = move |u: f64| harmonic::h_of(&p, kind, u).unwrap_or(f64::NAN);

    let lo = (xv / w.b).max(1.0);
    let hi = if w.a > 0.0 { Some(xv / w.a) } else { None };
    let mut total = 0.0;
    let split = Z_SPLIT.max(lo);
    let head_hi = hi.map_or(split, |h| h.min(split));
    if head_hi > lo {
        total += if lo == 1.0 {
            // v1 and v carry the (u-1)^{arh-1} pole at the lower endpoint
            quad::integrate_left_algebraic(
                move |u: f64| u.powf(-alpha) * hk(u) * (u - 1.0).powf(1.0 - arh),
                1.0,
                head_hi,
                arh,
                &outer,
            )?
        } else {
            quad::integrate(move |u: f64| u.powf(-alpha) * hk(u), lo, head_hi, &outer)?
        };
    }
    match hi {
        Some(h) if h > split => {
            total += quad::integrate_logscale(
                move |u: f64| u.powf(-alpha) * hk(u),
                split,
                h,
                &outer,
            )?;
        }
        None => {
            // w = 1/u: integrable power alpha - 2 at w = 0
            total += quad::integrate_left_algebraic(
                move |t: f64| hk(1.0 / t),
                0.0,
                1.0 / split,
                alpha - 1.0,
                &outer,
            )?;
        }
        _ => {}
    }
    Ok((p.alpha() - 1.0) / (2.0 * p.sin_pi_alpha_rho_hat()) * total)
}

/// The Prop-3.6-style asymptote for the point-avoiding closest reach:
/// `(e(x)/eps) * mass(1, 1+eps)` converges to `(alpha-1)/2 * v_side(x)`.
pub fn circ_asymptote(p: &StableParams, x: ExteriorPoint, kind: HarmonicKind) -> Result<f64> {
    if p.alpha() <= 1.0 {
        return Err(Error::Scope("alpha > 1 required".into()));
    }
    let v = match kind {
        HarmonicKind::V1 => harmonic::v1(p, x)?,
        HarmonicKind::VMinus1 => harmonic::v_minus1(p, x)?,
        HarmonicKind::V => harmonic::v_total(p, x)?,
        HarmonicKind::H => return Err(Error::Domain("kind must be V1, VMinus1 or V".into())),
    };
    Ok((p.alpha() - 1.0) / 2.0 * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;

    fn pt(x: f64) -> ExteriorPoint {
        ExteriorPoint::new(x).unwrap()
    }
    fn win(a: f64, b: f64, side: Side) -> HittingWindow {
        HittingWindow::new(a, b, side).unwrap()
    }

    #[test]
    fn window_invariants() {
        assert!(HittingWindow::new(1.0, 1.0, Side::Both).is_err());
        assert!(HittingWindow::new(-0.1, 1.0, Side::Both).is_err());
        assert!(HittingWindow::new(0.0, 3.0, Side::Both).is_ok());
    }

    #[test]
    fn closest_reach_total_mass_is_one() {
        let qs = QuadratureSettings::default();
        for (alpha, rho, x) in [(0.5, 0.5, 3.0f64), (0.5, 0.3, 2.0), (0.5, 0.3, -2.0)] {
            let p = validate_params(alpha, rho).unwrap();
            let w = win(0.0, x.abs(), Side::Both);
            let m = closest_reach_mass(&p, pt(x), &w, &qs).unwrap();
            assert!(
                (m - 1.0).abs() < 1e-8,
                "({alpha},{rho},{x}): total mass {m}"
            );
        }
    }

    #[test]
    fn closest_reach_window_reference_value() {
        // 40-digit reference for (0.5, 0.5, x = 3), window (1, 1.5) positive
        let qs = QuadratureSettings::default();
        let p = validate_params(0.5, 0.5).unwrap();
        let m = closest_reach_mass(&p, pt(3.0), &win(1.0, 1.5, Side::Positive), &qs).unwrap();
        assert!(((m - 0.05724049311877498) / m).abs() < 1e-9, "{m}");
    }

    #[test]
    fn closest_reach_substituted_matches_direct_density() {
        let qs = QuadratureSettings::default();
        for (alpha, rho, x) in [(0.5, 0.5, 3.0f64), (0.5, 0.3, 2.0), (0.7, 0.4, -4.0)] {
            let p = validate_params(alpha, rho).unwrap();
            for w in [
                win(1.0, 1.5, Side::Positive),
                win(1.0, 1.5, Side::Negative),
                win(0.5, 1.2, Side::Both),
                win(0.0, x.abs(), Side::Both),
            ] {
                let a = closest_reach_mass(&p, pt(x), &w, &qs).unwrap();
                let b = closest_reach_mass_direct(&p, pt(x), &w, &qs).unwrap();
                assert!(
                    ((a - b) / a).abs() < 1e-7,
                    "({alpha},{rho},{x},{w:?}): {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn symmetric_both_side_collapse() {
        // rho = 1/2: both-side integrand collapses to 2 psi
        let qs = QuadratureSettings::default();
        let p = validate_params(0.5, 0.5).unwrap();
        let x = 3.0;
        let eps = 0.2;
        let m = closest_reach_mass(&p, pt(x), &win(1.0, 1.0 + eps, Side::Both), &qs).unwrap();
        let direct = 2.0
            * closest_reach_prefactor(&p)
            * special::psi_primitive(&p, ExponentSide::Rho, x, &qs).unwrap()
            - 2.0
                * closest_reach_prefactor(&p)
                * special::psi_primitive(&p, ExponentSide::Rho, x / (1.0 + eps), &qs).unwrap();
        assert!(((m - direct) / m).abs() < 1e-9, "{m} vs {direct}");
    }

    #[test]
    fn closest_reach_asymptote_consistency() {
        let qs = QuadratureSettings::default();
        let eps = 1e-5;
        for (alpha, rho, x) in [(0.5, 0.5, 3.0), (0.5, 0.3, -2.0), (0.5, 0.3, 2.0)] {
            let p = validate_params(alpha, rho).unwrap();
            let m =
                closest_reach_mass(&p, pt(x), &win(1.0, 1.0 + eps, Side::Positive), &qs).unwrap();
            let asym = closest_reach_asymptote(&p, pt(x), Side::Positive).unwrap();
            let gap = ((m / eps - asym) / asym).abs();
            assert!(gap < 1e-3, "({alpha},{rho},{x}): gap {gap}");
        }
    }

    #[test]
    fn asymptote_additivity_and_scope() {
        let p = validate_params(0.5, 0.3).unwrap();
        let a = closest_reach_asymptote(&p, pt(2.0), Side::Positive).unwrap();
        let b = closest_reach_asymptote(&p, pt(2.0), Side::Negative).unwrap();
        let c = closest_reach_asymptote(&p, pt(2.0), Side::Both).unwrap();
        assert!(((a + b - c) / c).abs() < 1e-14);
        let p = validate_params(1.5, 0.5).unwrap();
        assert!(matches!(
            closest_reach_asymptote(&p, pt(2.0), Side::Both),
            Err(Error::Scope(_))
        ));
        let qs = QuadratureSettings::default();
        assert!(matches!(
            closest_reach_mass(&p, pt(2.0), &win(1.0, 1.5, Side::Both), &qs),
            Err(Error::Scope(_))
        ));
    }

    #[test]
    fn masses_bounded_and_monotone() {
        let qs = QuadratureSettings::default();
        let p = validate_params(0.5, 0.3).unwrap();
        let small = closest_reach_mass(&p, pt(3.0), &win(1.0, 1.4, Side::Both), &qs).unwrap();
        let large = closest_reach_mass(&p, pt(3.0), &win(0.5, 2.0, Side::Both), &qs).unwrap();
        assert!(small > 0.0 && small <= 1.0);
        assert!(large <= 1.0 && large >= small);
    }

    #[test]
    fn first_entrance_normalizes_to_one() {
        let qs = QuadratureSettings::default();
        // the outer pass integrates a quadrature-valued density, so its
        // tolerance sits above the inner noise floor; the combined error
        // stays orders of magnitude under the 1e-8 gate
        let outer = QuadratureSettings {
            rel_tol: 3e-9,
            abs_tol: 1e-12,
            max_subdivisions: 800,
        };
        for (alpha, rho, xs) in [(1.5, 0.5, 2.0), (1.5, 0.45, 3.0), (1.0, 0.5, 2.0), (1.5, 0.45, -2.0)] {
            let p = validate_params(alpha, rho).unwrap();
            // the boundary factors (1+y)^{-ar} (1-y)^{-arh} are tied to the
            // interval endpoints and do not swap with the start side
            let ar_eff = p.alpha_rho();
            let arh_eff = p.alpha_rho_hat();
            // strip the two boundary singularities by substitution; the
            // clamp keeps substituted nodes from rounding onto +-1 exactly
            let clamp = |y: f64| y.clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            let left = quad::integrate_left_algebraic(
                |y: f64| {
                    let y = clamp(y);
                    first_entrance_density(&p, xs, y, &qs).unwrap() * (1.0 + y).powf(ar_eff)
                },
                -1.0,
                0.0,
                1.0 - ar_eff,
                &outer,
            )
            .unwrap();
            let right = quad::integrate_right_algebraic(
                |y: f64| {
                    let y = clamp(y);
                    first_entrance_density(&p, xs, y, &qs).unwrap() * (1.0 - y).powf(arh_eff)
                },
                0.0,
                1.0,
                1.0 - arh_eff,
                &outer,
            )
            .unwrap();
            let total = left + right;
            assert!(
                (total - 1.0).abs() < 1e-8,
                "({alpha},{rho},X={xs}): normalization {total}"
            );
        }
    }

    #[test]
    fn first_entrance_reference_and_cauchy() {
        let qs = QuadratureSettings::default();
        let p = validate_params(1.5, 0.45).unwrap();
        let d = first_entrance_density(&p, 3.0, 0.25, &qs).unwrap();
        assert!(((d - 0.1588795264253497) / d).abs() < 1e-10, "{d}");
        // alpha = 1: the (alpha - 1) term vanishes, leaving the pure kernel
        let p = validate_params(1.0, 0.5).unwrap();
        let d = first_entrance_density(&p, 2.0, 0.3, &qs).unwrap();
        let want = (3.0f64.sqrt() / PI) / ((1.3f64 * 0.7).sqrt() * 1.7);
        assert!(((d - want) / want).abs() < 1e-13);
        // scope checks
        let p05 = validate_params(0.5, 0.5).unwrap();
        assert!(matches!(
            first_entrance_density(&p05, 2.0, 0.0, &qs),
            Err(Error::Scope(_))
        ));
        assert!(first_entrance_density(&p, 2.0, 1.0, &qs).is_err());
    }

    #[test]
    fn entrance_window_asymptote_consistency() {
        let qs = QuadratureSettings::default();
        let eps = 1e-4;
        for (alpha, rho, x) in [(1.5, 0.45, 2.0), (1.0, 0.5, 2.0), (1.5, 0.45, -2.0), (1.0, 0.5, -2.0)] {
            let p = validate_params(alpha, rho).unwrap();
            let m = entrance_window_mass(&p, pt(x), eps, Side::Positive, &qs).unwrap();
            let scaled = m * eps.powf(p.alpha_rho_hat() - 1.0);
            let asym = entrance_window_asymptote(&p, pt(x), Side::Positive).unwrap();
            let gap = ((scaled - asym) / asym).abs();
            assert!(gap < 1e-3, "({alpha},{rho},{x}): gap {gap}");
        }
    }

    #[test]
    fn entrance_mass_decreases_with_eps() {
        let qs = QuadratureSettings::default();
        let p = validate_params(1.5, 0.45).unwrap();
        let mut last = 1.0;
        for eps in [0.3, 0.1, 0.03, 0.01] {
            let m = entrance_window_mass(&p, pt(2.0), eps, Side::Both, &qs).unwrap();
            assert!(m > 0.0 && m <= last, "eps {eps}: {m} vs {last}");
            last = m;
        }
    }

    #[test]
    fn side_selection_slope() {
        // negative/positive mass ratio decays like eps^{alpha (rhohat - rho)}
        let qs = QuadratureSettings::default();
        let p = validate_params(1.5, 0.45).unwrap();
        let epss = [1e-2, 1e-3, 1e-4];
        let mut lx = [0.0; 3];
        let mut ly = [0.0; 3];
        for (i, &eps) in epss.iter().enumerate() {
            let pos = entrance_window_mass(&p, pt(2.0), eps, Side::Positive, &qs).unwrap();
            let neg = entrance_window_mass(&p, pt(2.0), eps, Side::Negative, &qs).unwrap();
            lx[i] = eps.ln();
            ly[i] = (neg / pos).ln();
        }
        let n = 3.0;
        let (sx, sy): (f64, f64) = (lx.iter().sum(), ly.iter().sum());
        let sxx: f64 = lx.iter().map(|v| v * v).sum();
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let target = p.alpha() * (p.rho_hat() - p.rho());
        assert!(
            ((slope - target) / target).abs() < 0.10,
            "slope {slope} target {target}"
        );
    }

    #[test]
    fn circ_additivity_and_asymptote() {
        let qs = QuadratureSettings::default();
        let p = validate_params(1.5, 0.5).unwrap();
        let w = win(1.2, 2.4, Side::Both);
        let v1m = circ_closest_reach_mass(&p, pt(3.0), &w, HarmonicKind::V1, &qs).unwrap();
        let vm1m = circ_closest_reach_mass(&p, pt(3.0), &w, HarmonicKind::VMinus1, &qs).unwrap();
        let vm = circ_closest_reach_mass(&p, pt(3.0), &w, HarmonicKind::V, &qs).unwrap();
        assert!(((v1m + vm1m - vm) / vm).abs() < 1e-9);

        let eps = 1e-5;
        for x in [3.0, -2.0] {
            let m = circ_closest_reach_mass(
                &p,
                pt(x),
                &win(1.0, 1.0 + eps, Side::Positive),
                HarmonicKind::V1,
                &qs,
            )
            .unwrap();
            let e = harmonic::avoid_zero_e(&p, x).unwrap();
            let asym = circ_asymptote(&p, pt(x), HarmonicKind::V1).unwrap();
            let gap = ((e / eps * m - asym) / asym).abs();
            assert!(gap < 1e-3, "x = {x}: gap {gap}");
        }
    }

    #[test]
    fn circ_total_mass_is_one() {
        let qs = QuadratureSettings::default();
        for (alpha, rho, x) in [(1.5, 0.5, 3.0), (1.8, 0.52, 2.0)] {
            let p = validate_params(alpha, rho).unwrap();
            let w = win(0.0, x, Side::Both);
            let m = circ_closest_reach_mass(&p, pt(x), &w, HarmonicKind::V, &qs).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "({alpha},{rho},{x}): total {m}");
        }
    }

    #[test]
    fn circ_scope_error_below_one() {
        let qs = QuadratureSettings::default();
        let p = validate_params(1.0, 0.5).unwrap();
        assert!(matches!(
            circ_closest_reach_mass(&p, pt(2.0), &win(1.0, 1.5, Side::Both), HarmonicKind::V, &qs),
            Err(Error::Scope(_))
        ));
    }

    #[test]
    fn reflection_covariance_of_laws() {
        let qs = QuadratureSettings::default();
        // closest reach, alpha < 1
        let p = validate_params(0.5, 0.3).unwrap();
        let q = p.reflected();
        let a = closest_reach_mass(&p, pt(2.0), &win(1.0, 1.5, Side::Positive), &qs).unwrap();
        let b = closest_reach_mass(&q, pt(-2.0), &win(1.0, 1.5, Side::Negative), &qs).unwrap();
        assert!(((a - b) / a).abs() < 1e-10);
        // entrance, alpha >= 1
        let p = validate_params(1.5, 0.45).unwrap();
        let q = p.reflected();
        let a = entrance_window_mass(&p, pt(2.0), 1e-2, Side::Positive, &qs).unwrap();
        let b = entrance_window_mass(&q, pt(-2.0), 1e-2, Side::Negative, &qs).unwrap();
        assert!(((a - b) / a).abs() < 1e-10);
        // point-avoiding, alpha > 1
        let a = circ_closest_reach_mass(&p, pt(2.0), &win(1.1, 1.6, Side::Both), HarmonicKind::V1, &qs)
            .unwrap();
        let b = circ_closest_reach_mass(&q, pt(-2.0), &win(1.1, 1.6, Side::Both), HarmonicKind::VMinus1, &qs)
            .unwrap();
        assert!(((a - b) / a).abs() < 1e-10);
    }
}
