//! The named harmonic functions of the killed process, the avoid-zero
//! function, the killed-process Green's function with its branch closure,
//! and the deterministic identity probes built on them.

use crate::error::{Error, Result};
use crate::model::StableParams;
use crate::quad::{self, QuadratureSettings};
use crate::special::{self, ExponentSide};

/// A point strictly outside `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorPoint(f64);

impl ExteriorPoint {
    pub fn new(x: f64) -> Result<Self> {
        if !x.is_finite() || x.abs() <= 1.0 {
            return Err(Error::Domain(format!(
                "point must lie strictly outside [-1, 1], got {x}"
            )));
        }
        Ok(Self(x))
    }
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Which of the named functions weights an h-transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicKind {
    V1,
    VMinus1,
    V,
    /// Invariant function of the interval-avoiding transform; `alpha > 1` only.
    H,
}

/// Which formula or symmetry path produced a Green's function value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenBranch {
    XGtYGt1,
    XNegYPos,
    SwappedViaDuality,
    Reflected,
}

pub(crate) const DEFAULT_NEAR_DIAGONAL_CUTOFF: f64 = 1e-8;

fn default_qs() -> QuadratureSettings {
    QuadratureSettings::default()
}

/// `(alpha - 1)_+ * int_1^x psi` — the correction term active only for
/// `alpha > 1`.
fn primitive_term(p: &StableParams, side: ExponentSide, x: f64, qs: &QuadratureSettings) -> Result<f64> {
    if p.alpha() <= 1.0 {
        return Ok(0.0);
    }
    Ok((p.alpha() - 1.0) * special::psi_primitive(p, side, x, qs)?)
}

/// Harmonic function with pole at `+1`:
/// `sin(pi a rhohat) [ (x+1) psi_{Rho}(x) - (a-1)_+ int_1^x psi_{Rho} ]` for
/// `x > 1`, the `rho <-> rhohat` mirror for `x < -1`.
pub fn v1(p: &StableParams, x: ExteriorPoint) -> Result<f64> {
    let qs = default_qs();
    let x = x.get();
    if x > 1.0 {
        let body = (x + 1.0) * special::psi(p, ExponentSide::Rho, x)?
            - primitive_term(p, ExponentSide::Rho, x, &qs)?;
        Ok(p.sin_pi_alpha_rho_hat() * body)
    } else {
        let ax = -x;
        let body = (ax - 1.0) * special::psi(p, ExponentSide::RhoHat, ax)?
            - primitive_term(p, ExponentSide::RhoHat, ax, &qs)?;
        Ok(p.sin_pi_alpha_rho() * body)
    }
}

/// Harmonic function with pole at `-1`; mirror of [`v1`] with the roles of
/// the endpoints swapped.
pub fn v_minus1(p: &StableParams, x: ExteriorPoint) -> Result<f64> {
    let qs = default_qs();
    let x = x.get();
    if x > 1.0 {
        let body = (x - 1.0) * special::psi(p, ExponentSide::Rho, x)?
            - primitive_term(p, ExponentSide::Rho, x, &qs)?;
        Ok(p.sin_pi_alpha_rho_hat() * body)
    } else {
        let ax = -x;
        let body = (ax + 1.0) * special::psi(p, ExponentSide::RhoHat, ax)?
            - primitive_term(p, ExponentSide::RhoHat, ax, &qs)?;
        Ok(p.sin_pi_alpha_rho() * body)
    }
}

/// `v = v1 + v_{-1}`, the two-sided harmonic function.
pub fn v_total(p: &StableParams, x: ExteriorPoint) -> Result<f64> {
    Ok(v1(p, x)? + v_minus1(p, x)?)
}

/// The invariant function of the process conditioned to avoid the interval
/// (`alpha > 1`), up to its multiplicative constant:
/// `sin(pi a rhohat) int_1^x psi_{Rho}` on `x > 1`, mirrored below.
pub fn invariant_h(p: &StableParams, x: ExteriorPoint) -> Result<f64> {
    if p.alpha() <= 1.0 {
        return Err(Error::Scope(format!(
            "invariant function requires alpha > 1, got {}",
            p.alpha()
        )));
    }
    let qs = default_qs();
    let x = x.get();
    if x > 1.0 {
        Ok(p.sin_pi_alpha_rho_hat() * special::psi_primitive(p, ExponentSide::Rho, x, &qs)?)
    } else {
        Ok(p.sin_pi_alpha_rho() * special::psi_primitive(p, ExponentSide::RhoHat, -x, &qs)?)
    }
}

/// Invariant function of the point-avoiding transform:
/// `e(x) = sin(pi a rhohat) x^{alpha-1}` for `x > 0`, the `rho` mirror below.
pub fn avoid_zero_e(p: &StableParams, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("avoid-zero function undefined at {x}")));
    }
    let s = if x > 0.0 {
        p.sin_pi_alpha_rho_hat()
    } else {
        p.sin_pi_alpha_rho()
    };
    Ok(s * x.abs().powf(p.alpha() - 1.0))
}

/// Evaluates either of the two printed branches of the Green's function.
/// Requires `x > y > 1` or `x < -1, y > 1`.
fn green_direct(p: &StableParams, x: f64, y: f64, qs: &QuadratureSettings) -> Result<f64> {
    let z = special::z_point(x, y)?;
    let pref = 2.0_f64.powf(1.0 - p.alpha())
        / (special::gamma(p.alpha_rho()) * special::gamma(p.alpha_rho_hat()));
    let tail = special::psi_primitive(p, ExponentSide::RhoHat, z, qs)?;
    let cross = if p.alpha() > 1.0 {
        (p.alpha() - 1.0) * special::psi_primitive(p, ExponentSide::RhoHat, y, qs)?
    } else {
        0.0
    };
    if x > y && y > 1.0 {
        let cross = if p.alpha() > 1.0 {
            cross * special::psi_primitive(p, ExponentSide::Rho, x, qs)?
        } else {
            0.0
        };
        Ok(pref * ((x - y).powf(p.alpha() - 1.0) * tail - cross))
    } else if x < -1.0 && y > 1.0 {
        let cross = if p.alpha() > 1.0 {
            cross * special::psi_primitive(p, ExponentSide::RhoHat, -x, qs)?
        } else {
            0.0
        };
        let ratio = p.sin_pi_alpha_rho() / p.sin_pi_alpha_rho_hat();
        Ok(pref * ((y - x).powf(p.alpha() - 1.0) * tail - cross) * ratio)
    } else {
        Err(Error::Domain(format!(
            "direct green branch needs x > y > 1 or x < -1, y > 1; got ({x}, {y})"
        )))
    }
}

pub(crate) fn green_value(
    p: &StableParams,
    x: f64,
    y: f64,
    qs: &QuadratureSettings,
) -> Result<(f64, GreenBranch)> {
    if x > 1.0 && y > 1.0 {
        if x > y {
            Ok((green_direct(p, x, y, qs)?, GreenBranch::XGtYGt1))
        } else {
            // duality: u with rho at (x, y) equals u with rhohat at (y, x)
            Ok((
                green_direct(&p.reflected(), y, x, qs)?,
                GreenBranch::SwappedViaDuality,
            ))
        }
    } else if x < -1.0 && y > 1.0 {
        Ok((green_direct(p, x, y, qs)?, GreenBranch::XNegYPos))
    } else if x > 1.0 && y < -1.0 {
        Ok((
            green_direct(&p.reflected(), y, x, qs)?,
            GreenBranch::SwappedViaDuality,
        ))
    } else {
        // both negative: reflect, then reuse the positive-side closure
        let (v, _) = green_value(&p.reflected(), -x, -y, qs)?;
        Ok((v, GreenBranch::Reflected))
    }
}

/// Potential density of the killed process. Diagonal values are defined to
/// be zero; for `alpha <= 1`, evaluation closer to the diagonal than the
/// built-in cutoff is refused because of the pole there.
pub fn green_u(
    p: &StableParams,
    x: ExteriorPoint,
    y: ExteriorPoint,
    qs: &QuadratureSettings,
) -> Result<(f64, GreenBranch)> {
    green_u_with_cutoff(p, x, y, qs, DEFAULT_NEAR_DIAGONAL_CUTOFF)
}

/// [`green_u`] with an explicit near-diagonal cutoff.
pub fn green_u_with_cutoff(
    p: &StableParams,
    x: ExteriorPoint,
    y: ExteriorPoint,
    qs: &QuadratureSettings,
    cutoff: f64,
) -> Result<(f64, GreenBranch)> {
    let (x, y) = (x.get(), y.get());
    if x == y {
        let branch = if x > 1.0 {
            GreenBranch::XGtYGt1
        } else {
            GreenBranch::Reflected
        };
        return Ok((0.0, branch));
    }
    if p.alpha() <= 1.0 && (x - y).abs() < cutoff {
        return Err(Error::NearDiagonal((x - y).abs()));
    }
    green_value(p, x, y, qs)
}

/// The Lemma 3.1 identity: the right-hand side written in `u`, `g`, the
/// correction integral and the `(alpha-1)_+` terms, minus `v1(x)`. Valid on
/// `x > y > 1` or `x < -1, y > 1`; the analytic value is zero.
pub fn lemma31_residual(
    p: &StableParams,
    x: ExteriorPoint,
    y: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    let xv = x.get();
    if !(y > 1.0) || !(xv > y || xv < -1.0) {
        return Err(Error::Domain(format!(
            "lemma identity requires x > y > 1 or x < -1, y > 1; got ({xv}, {y})"
        )));
    }
    let u = green_direct(p, xv, y, qs)?;
    let g = special::boundary_factor_g(p, y)?;
    let z = special::z_point(xv, y)?;
    let s = if xv > 1.0 {
        p.sin_pi_alpha_rho_hat()
    } else {
        p.sin_pi_alpha_rho()
    };

    let term1 = 2.0_f64.powf(p.alpha_rho_hat() - 1.0)
        * special::norm_constant(p, ExponentSide::Rho)
        * u
        / g;
    let term2 = s * (1.0 - p.alpha_rho_hat()) * (xv - y).abs().powf(p.alpha() - 1.0) / g
        * special::correction_integral(p, z, qs)?;
    let term3 = if p.alpha() > 1.0 {
        let ipsi = if xv > 1.0 {
            special::psi_primitive(p, ExponentSide::Rho, xv, qs)?
        } else {
            special::psi_primitive(p, ExponentSide::RhoHat, -xv, qs)?
        };
        (p.alpha() - 1.0)
            * s
            * ipsi
            * (p.alpha_rho() / g * special::psi_primitive(p, ExponentSide::RhoHat, y, qs)? - 1.0)
    } else {
        0.0
    };

    Ok(term1 - term2 + term3 - v1(p, x)?)
}

/// `c_{a rho} * u(x, 1 + delta) / delta^{a rho}`; converges to `v1(x)` as
/// `delta` goes to zero.
pub fn green_boundary_ratio(
    p: &StableParams,
    x: ExteriorPoint,
    delta: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if !(delta > 0.0) || 1.0 + delta >= x.get().abs() {
        return Err(Error::Domain(format!(
            "need 0 < delta with 1 + delta < |x|, got delta = {delta}, x = {}",
            x.get()
        )));
    }
    let u = green_direct(p, x.get(), 1.0 + delta, qs)?;
    Ok(special::norm_constant(p, ExponentSide::Rho) * u / delta.powf(p.alpha_rho()))
}

pub(crate) fn h_of(p: &StableParams, kind: HarmonicKind, x: f64) -> Result<f64> {
    let pt = ExteriorPoint::new(x)?;
    match kind {
        HarmonicKind::V1 => v1(p, pt),
        HarmonicKind::VMinus1 => v_minus1(p, pt),
        HarmonicKind::V => v_total(p, pt),
        HarmonicKind::H => invariant_h(p, pt),
    }
}

/// Expected occupation of `[-b, -1) u (1, b]` by the h-process:
/// `int h(y) u(x, y) dy / h(x)`. The boundary singularities of the weight
/// and the near-diagonal pole are absorbed by algebraic substitutions.
pub fn potential_mass(
    p: &StableParams,
    h_kind: HarmonicKind,
    x: ExteriorPoint,
    b: f64,
    qs: &QuadratureSettings,
) -> Result<f64> {
    if !matches!(h_kind, HarmonicKind::V1 | HarmonicKind::V) {
        return Err(Error::Scope(
            "potential mass is defined for the V1 and V weights".into(),
        ));
    }
    if !(b > 1.0) {
        return Err(Error::Domain(format!("need b > 1, got {b}")));
    }
    let xv = x.get();
    let alpha = p.alpha();
    // the integrand is itself quadrature-valued, so the outer pass runs at a
    // tolerance above the inner noise floor
    let outer = QuadratureSettings {
        rel_tol: qs.rel_tol.max(1e-7),
        abs_tol: qs.abs_tol.max(1e-12),
        max_subdivisions: qs.max_subdivisions,
    };
    let weighted = |y: f64| -> f64 {
        if y == xv {
            return 0.0;
        }
        let h = h_of(p, h_kind, y).unwrap_or(0.0);
        let u = green_value(p, xv, y, qs).map(|(u, _)| u).unwrap_or(f64::NAN);
        h * u
    };

    // integrand ~ (y -+ 1)^{alpha-1} at the interval boundary and
    // ~ |y - x|^{alpha-1} at the diagonal; both removed by exponent alpha
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for side in [1.0, -1.0] {
        let pole = if side > 0.0 { xv } else { -xv };
        let mut cuts = vec![1.0, b];
        if pole > 1.0 && pole < b {
            cuts.insert(1, pole);
        }
        for w in cuts.windows(2) {
            segments.push((side * w[0], side * w[1]));
        }
    }

    let mut total = 0.0;
    for (a0, b0) in segments {
        let (lo, hi) = if a0 < b0 { (a0, b0) } else { (b0, a0) };
        // each endpoint is either the interval boundary or the diagonal
        let sing_left = lo.abs() == 1.0 || lo == xv;
        let sing_right = hi.abs() == 1.0 || hi == xv;
        let part = match (sing_left, sing_right) {
            (true, false) => quad::integrate_left_algebraic(
                |y: f64| weighted(y) * (y - lo).powf(1.0 - alpha),
                lo,
                hi,
                alpha,
                &outer,
            )?,
            (false, true) => quad::integrate_right_algebraic(
                |y: f64| weighted(y) * (hi - y).powf(1.0 - alpha),
                lo,
                hi,
                alpha,
                &outer,
            )?,
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                quad::integrate_left_algebraic(
                    |y: f64| weighted(y) * (y - lo).powf(1.0 - alpha),
                    lo,
                    mid,
                    alpha,
                    &outer,
                )? + quad::integrate_right_algebraic(
                    |y: f64| weighted(y) * (hi - y).powf(1.0 - alpha),
                    mid,
                    hi,
                    alpha,
                    &outer,
                )?
            }
            (false, false) => quad::integrate(weighted, lo, hi, &outer)?,
        };
        total += part;
    }

    let denom = h_of(p, h_kind, xv)?;
    let mass = total / denom;
    if !mass.is_finite() {
        return Err(Error::Quadrature("potential mass evaluated non-finite".into()));
    }
    Ok(mass)
}
