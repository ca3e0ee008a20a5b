//! Process parameters, the jump intensity, the rho/skewness bridge and
//! sampling of stable increments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::special::gamma;

/// Validated `(alpha, rho, rhohat)` triple. `rhohat` is stored, not
/// recomputed, so `rho + rhohat == 1` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    rho: f64,
    rho_hat: f64,
}

impl StableParams {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn rho_hat(&self) -> f64 {
        self.rho_hat
    }
    pub fn alpha_rho(&self) -> f64 {
        self.alpha * self.rho
    }
    pub fn alpha_rho_hat(&self) -> f64 {
        self.alpha * self.rho_hat
    }
    /// `sin(pi * alpha * rho)`, evaluated directly (never via complements).
    pub fn sin_pi_alpha_rho(&self) -> f64 {
        (PI * self.alpha * self.rho).sin()
    }
    pub fn sin_pi_alpha_rho_hat(&self) -> f64 {
        (PI * self.alpha * self.rho_hat).sin()
    }
    /// Parameters with the roles of `rho` and `rhohat` swapped; the law of
    /// the reflected process `-xi`.
    pub fn reflected(&self) -> StableParams {
        StableParams {
            alpha: self.alpha,
            rho: self.rho_hat,
            rho_hat: self.rho,
        }
    }
    /// `cos(pi alpha (rho - 1/2))`: the `|theta|^alpha` coefficient in the
    /// real part of the characteristic exponent under the normalization used
    /// here (see [`sample_increment`]). Equal to 1 in the symmetric case.
    pub fn time_scale(&self) -> f64 {
        (PI * self.alpha * (self.rho - 0.5)).cos()
    }
}

/// Checks the admissible parameter region and builds a [`StableParams`].
pub fn validate_params(alpha: f64, rho: f64) -> Result<StableParams> {
    if !alpha.is_finite() || !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::OutOfRange(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !rho.is_finite() {
        return Err(Error::OutOfRange(format!("rho must be finite, got {rho}")));
    }
    if alpha == 1.0 {
        if rho != 0.5 {
            return Err(Error::CauchyAsymmetric(rho));
        }
    } else if alpha < 1.0 {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::OneSidedJumps { alpha, rho });
        }
    } else {
        let lo = 1.0 - 1.0 / alpha;
        let hi = 1.0 / alpha;
        if !(rho > lo && rho < hi) {
            return Err(Error::OneSidedJumps { alpha, rho });
        }
    }
    let p = StableParams {
        alpha,
        rho,
        rho_hat: 1.0 - rho,
    };
    if !(p.alpha_rho() > 0.0 && p.alpha_rho() < 1.0 && p.alpha_rho_hat() > 0.0 && p.alpha_rho_hat() < 1.0) {
        return Err(Error::OutOfRange(format!(
            "derived exponents escaped (0,1): alpha*rho = {}, alpha*rhohat = {}",
            p.alpha_rho(),
            p.alpha_rho_hat()
        )));
    }
    Ok(p)
}

/// Jump intensity of the process at `x != 0`:
/// `Gamma(alpha+1)/pi * sin(pi alpha rho) / x^{alpha+1}` on the positive side
/// and the `rhohat` mirror on the negative side.
pub fn levy_density(p: &StableParams, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("levy density undefined at x = {x}")));
    }
    let pref = gamma(p.alpha() + 1.0) / PI;
    let s = if x > 0.0 {
        p.sin_pi_alpha_rho()
    } else {
        p.sin_pi_alpha_rho_hat()
    };
    Ok(pref * s / x.abs().powf(p.alpha() + 1.0))
}

/// Bridge from the positivity parameter to the skewness parameter of the
/// standard polar sampler: `beta = tan(pi alpha (rho - 1/2)) / tan(pi alpha / 2)`
/// for `alpha != 1`, zero for the symmetric Cauchy.
pub fn skewness_from_rho(p: &StableParams) -> f64 {
    if p.alpha() == 1.0 {
        return 0.0;
    }
    (PI * p.alpha() * (p.rho() - 0.5)).tan() / (PI * p.alpha() / 2.0).tan()
}

/// Reproducible substream handle: identical `(seed, stream_id)` always
/// produces identical draws, and distinct stream ids are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derived stream for worker `k`; composition-safe via hashing.
    pub fn substream(&self, k: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(k)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }
}

/// Precomputed polar-method sampler for increments of a fixed `(params, dt)`.
///
/// The sampled law is strictly stable with characteristic exponent
/// `|theta|^alpha * exp(i pi alpha (1/2 - rho) sgn theta)` per unit time,
/// the same normalization as the jump intensity [`levy_density`]. For
/// `rho = 1/2` this is exactly `exp(-|theta|^alpha)`; for `rho != 1/2` the
/// modulus carries the extra factor `cos(pi alpha (rho - 1/2))`, which the
/// sampler folds into its scale so that closed-form laws and sampled paths
/// share one convention.
#[derive(Debug, Clone, Copy)]
pub struct IncrementSampler {
    alpha: f64,
    inv_alpha: f64,
    exp_ratio: f64,
    shift: f64,
    scale: f64,
    cauchy: bool,
}

impl IncrementSampler {
    pub fn new(p: &StableParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::OutOfRange(format!("dt must be positive, got {dt}")));
        }
        let alpha = p.alpha();
        let unit_scale = p.time_scale().powf(1.0 / alpha);
        if alpha == 1.0 {
            return Ok(Self {
                alpha,
                inv_alpha: 1.0,
                exp_ratio: 0.0,
                shift: 0.0,
                scale: dt * unit_scale,
                cauchy: true,
            });
        }
        let beta = skewness_from_rho(p);
        let tan_half = (PI * alpha / 2.0).tan();
        let bt = beta * tan_half;
        let shift = (bt).atan() / alpha;
        let s_ab = (1.0 + bt * bt).powf(0.5 / alpha);
        Ok(Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            exp_ratio: (1.0 - alpha) / alpha,
            shift,
            scale: dt.powf(1.0 / alpha) * unit_scale * s_ab,
            cauchy: false,
        })
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let v = PI * (rng.gen::<f64>() - 0.5);
        if self.cauchy {
            return self.scale * v.tan();
        }
        let w = -rng.gen::<f64>().ln();
        let av = self.alpha * (v + self.shift);
        // cos(v - av) expanded so one sin_cos pair serves both factors, and
        // the two power terms collapse into a single exponential
        let (sin_v, cos_v) = v.sin_cos();
        let (sin_av, cos_av) = av.sin_cos();
        let cos_rest = cos_v * cos_av + sin_v * sin_av;
        let x = sin_av
            * (self.exp_ratio * (cos_rest / w).ln() - self.inv_alpha * cos_v.ln()).exp();
        self.scale * x
    }
}

/// One draw of `xi_{dt} - xi_0`. For repeated draws at a fixed `dt` build an
/// [`IncrementSampler`] once instead.
pub fn sample_increment(p: &StableParams, dt: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(IncrementSampler::new(p, dt)?.sample(rng))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::quad::{self, QuadratureSettings};

    #[test]
    fn validates_symmetric_admissible_case() {
        let p = validate_params(1.5, 0.5).unwrap();
        assert_eq!(p.alpha_rho(), 0.75);
        assert_eq!(p.alpha_rho_hat(), 0.75);
        assert_eq!(p.rho() + p.rho_hat(), 1.0);
    }

    #[test]
    fn rejects_one_sided_and_cauchy_asymmetric() {
        assert!(matches!(
            validate_params(1.5, 2.0 / 3.0),
            Err(Error::OneSidedJumps { .. })
        ));
        assert!(matches!(
            validate_params(1.0, 0.6),
            Err(Error::CauchyAsymmetric(_))
        ));
        assert!(matches!(validate_params(2.0, 0.5), Err(Error::OutOfRange(_))));
        assert!(matches!(validate_params(0.0, 0.5), Err(Error::OutOfRange(_))));
        assert!(matches!(
            validate_params(0.5, 0.0),
            Err(Error::OneSidedJumps { .. })
        ));
        assert!(matches!(
            validate_params(0.5, 1.0),
            Err(Error::OneSidedJumps { .. })
        ));
    }

    #[test]
    fn validation_is_idempotent() {
        let p = validate_params(1.2, 0.45).unwrap();
        let q = validate_params(p.alpha(), p.rho()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn levy_density_reference_value() {
        // (0.5, 0.5, x=1): Gamma(1.5) sin(pi/4) / pi
        let p = validate_params(0.5, 0.5).unwrap();
        let got = levy_density(&p, 1.0).unwrap();
        assert!(((got - 0.19947114020071634) / got).abs() < 1e-13);
        assert!(levy_density(&p, 0.0).is_err());
    }

    #[test]
    fn levy_density_symmetry_and_scaling() {
        let p = validate_params(0.7, 0.5).unwrap();
        for x in [0.1, 1.0, 7.3] {
            let a = levy_density(&p, x).unwrap();
            let b = levy_density(&p, -x).unwrap();
            assert!(((a - b) / a).abs() < 1e-15);
            let c = levy_density(&p, 2.0 * x).unwrap();
            assert!(((c / a) - 2.0_f64.powf(-(p.alpha() + 1.0))).abs() < 1e-13);
        }
    }

    #[test]
    fn levy_density_integrates_one_wedge_x_squared() {
        let p = validate_params(1.5, 0.45).unwrap();
        let qs = QuadratureSettings::default();
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            let inner = quad::integrate_logscale(
                |x| x * x * levy_density(&p, sign * x).unwrap(),
                1e-6,
                1.0,
                &qs,
            )
            .unwrap();
            let outer = quad::integrate_logscale(
                |x| levy_density(&p, sign * x).unwrap(),
                1.0,
                1e6,
                &qs,
            )
            .unwrap();
            total += inner + outer;
        }
        assert!(total.is_finite() && total > 0.0);
    }

    #[test]
    fn skewness_values() {
        let p = validate_params(0.7, 0.5).unwrap();
        assert_eq!(skewness_from_rho(&p), 0.0);
        let p = validate_params(1.0, 0.5).unwrap();
        assert_eq!(skewness_from_rho(&p), 0.0);
        let p = validate_params(0.5, 0.3).unwrap();
        let got = skewness_from_rho(&p);
        assert!(((got + 0.32491969623290632) / got).abs() < 1e-13);
    }

    #[test]
    fn rng_stream_is_deterministic_and_splits() {
        let s = RngStream::new(42, 7);
        let a: Vec<f64> = (0..8).map({ let mut r = s.rng(); move |_| r.gen() }).collect();
        let b: Vec<f64> = (0..8).map({ let mut r = s.rng(); move |_| r.gen() }).collect();
        assert_eq!(a, b);
        let c: Vec<f64> = (0..8)
            .map({ let mut r = s.substream(1).rng(); move |_| r.gen() })
            .collect();
        assert_ne!(a, c);
        assert_eq!(s.substream(3), s.substream(3));
        assert_ne!(s.substream(3), s.substream(4));
    }

    /// Two-sample Kolmogorov-Smirnov statistic.
    pub(crate) fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j) = (0usize, 0usize);
        let mut d: f64 = 0.0;
        while i < n && j < m {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        d
    }

    /// Critical KS distance at level 1e-3.
    pub(crate) fn ks_critical(n: usize, m: usize) -> f64 {
        1.9495 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
    }

    #[test]
    fn sampler_positivity_matches_rho() {
        for (alpha, rho) in [(0.5, 0.3), (1.5, 0.45), (1.0, 0.5), (1.8, 0.52)] {
            let p = validate_params(alpha, rho).unwrap();
            let sampler = IncrementSampler::new(&p, 1.0).unwrap();
            let mut rng = RngStream::new(7, 0).rng();
            let n = 1_000_000;
            let mut pos = 0usize;
            for _ in 0..n {
                if sampler.sample(&mut rng) >= 0.0 {
                    pos += 1;
                }
            }
            let freq = pos as f64 / n as f64;
            let se = (rho * (1.0 - rho) / n as f64).sqrt();
            assert!(
                (freq - rho).abs() < 3.0 * se,
                "({alpha},{rho}): freq {freq} vs rho {rho} (se {se})"
            );
        }
    }

    #[test]
    fn sampler_symmetric_median_near_zero() {
        let p = validate_params(0.5, 0.5).unwrap();
        let sampler = IncrementSampler::new(&p, 1.0).unwrap();
        let mut rng = RngStream::new(11, 0).rng();
        let n = 1_000_000;
        let mut draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        draws.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let median = draws[n / 2];
        // density at 0 is Gamma(1 + 1/alpha)/pi, so se(median) ~ 1/(2 f(0) sqrt(n))
        let f0 = gamma(1.0 + 1.0 / p.alpha()) / PI;
        let se = 1.0 / (2.0 * f0 * (n as f64).sqrt());
        assert!(median.abs() < 3.0 * se, "median {median} se {se}");
    }

    #[test]
    fn sampler_scaling_property() {
        // c * sample(dt) and sample(c^alpha dt) agree in distribution
        let p = validate_params(1.5, 0.45).unwrap();
        let c = 1.7f64;
        let dt = 0.3;
        let s1 = IncrementSampler::new(&p, dt).unwrap();
        let s2 = IncrementSampler::new(&p, c.powf(p.alpha()) * dt).unwrap();
        let mut r1 = RngStream::new(5, 1).rng();
        let mut r2 = RngStream::new(5, 2).rng();
        let n = 100_000;
        let mut a: Vec<f64> = (0..n).map(|_| c * s1.sample(&mut r1)).collect();
        let mut b: Vec<f64> = (0..n).map(|_| s2.sample(&mut r2)).collect();
        let d = ks_statistic(&mut a, &mut b);
        assert!(d < ks_critical(n, n), "KS {d} crit {}", ks_critical(n, n));
    }

    #[test]
    fn sampler_convolution_property() {
        // sum of 4 quarter-time increments vs one unit-time increment
        let p = validate_params(0.5, 0.3).unwrap();
        let s4 = IncrementSampler::new(&p, 0.25).unwrap();
        let s1 = IncrementSampler::new(&p, 1.0).unwrap();
        let mut r1 = RngStream::new(9, 1).rng();
        let mut r2 = RngStream::new(9, 2).rng();
        let n = 100_000;
        let mut a: Vec<f64> = (0..n)
            .map(|_| (0..4).map(|_| s4.sample(&mut r1)).sum())
            .collect();
        let mut b: Vec<f64> = (0..n).map(|_| s1.sample(&mut r2)).collect();
        let d = ks_statistic(&mut a, &mut b);
        assert!(d < ks_critical(n, n), "KS {d} crit {}", ks_critical(n, n));
    }

    #[test]
    fn cauchy_case_is_standard() {
        let p = validate_params(1.0, 0.5).unwrap();
        let s = IncrementSampler::new(&p, 1.0).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let n = 200_000;
        let inside: usize = (0..n)
            .filter(|_| s.sample(&mut rng).abs() <= 1.0)
            .count();
        // P(|Cauchy| <= 1) = 1/2
        let freq = inside as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }
}
