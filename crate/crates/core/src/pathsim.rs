//! Monte Carlo engine: killed-path simulation on a time grid, h-transform
//! weighted functionals, an approximate sampler for the conditioned chain,
//! closest-reach extraction and rejection-based conditional laws.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::StableDensityTable;
use crate::error::{Error, Result};
use crate::harmonic::{ExteriorPoint, HarmonicKind};
use crate::model::{IncrementSampler, RngStream, StableParams};
use crate::quad::QuadratureSettings;
use crate::special::{self, ExponentSide};

/// One simulated trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub killed: bool,
    /// Grid index of the first position inside `[-1, 1]`; absent when the
    /// path was not killed or (for conditioned chains) absorption happened
    /// at the boundary without entering the interval.
    pub kill_index: Option<usize>,
    pub truncated: bool,
}

/// Grid, budget and stream configuration for one simulation batch.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub rng: RngStream,
    pub boundary_cutoff: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt < self.horizon) {
            return Err(Error::OutOfRange(format!(
                "need 0 < dt < horizon, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::OutOfRange("n_paths must be at least 1".into()));
        }
        if !(self.boundary_cutoff > 0.0) {
            return Err(Error::OutOfRange("boundary cutoff must be positive".into()));
        }
        Ok(())
    }
}

/// Point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl EstimateWithCI {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n as f64 - 1.0).max(1.0);
        Self {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }
}

fn par_paths<F>(c: &SimConfig, per_path: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (0..c.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = c.rng.substream(i as u64).rng();
            per_path(&mut rng)
        })
        .collect()
}

/// Fast evaluator of the harmonic weights, backed by a log-grid table of the
/// kernel primitives when `alpha > 1` needs them.
pub(crate) struct HTable {
    p: StableParams,
    kind: HarmonicKind,
    prim: Option<[LogPrimTable; 2]>, // [Rho, RhoHat]
}

struct LogPrimTable {
    ln_lo: f64,
    inv_step: f64,
    vals: Vec<f64>,
    exponent: f64, // primitive ~ (x-1)^{exponent} below the grid
}

impl LogPrimTable {
    fn build(p: &StableParams, side: ExponentSide) -> Result<Self> {
        let qs = QuadratureSettings::default();
        let (lo, hi, n) = (1e-9f64, 1e5f64, 1400usize);
        let ln_lo = lo.ln();
        let step = (hi.ln() - ln_lo) / (n - 1) as f64;
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let s = (ln_lo + step * i as f64).exp();
            vals.push(special::psi_primitive(p, side, 1.0 + s, &qs)?);
        }
        let exponent = match side {
            ExponentSide::Rho => p.alpha_rho_hat(),
            ExponentSide::RhoHat => p.alpha_rho(),
        };
        Ok(Self {
            ln_lo,
            inv_step: 1.0 / step,
            vals,
            exponent,
        })
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        let s = x - 1.0;
        if s <= 0.0 {
            return 0.0;
        }
        let t = (s.ln() - self.ln_lo) * self.inv_step;
        if t <= 0.0 {
            // power extrapolation from the lowest node
            return self.vals[0] * (t * (1.0 / self.inv_step) * self.exponent).exp();
        }
        let imax = self.vals.len() - 1;
        if t >= imax as f64 {
            return self.vals[imax];
        }
        let i = t as usize;
        let frac = t - i as f64;
        self.vals[i] * (1.0 - frac) + self.vals[i + 1] * frac
    }
}

impl HTable {
    pub(crate) fn build(p: &StableParams, kind: HarmonicKind) -> Result<Self> {
        if matches!(kind, HarmonicKind::H) && p.alpha() <= 1.0 {
            return Err(Error::Scope(
                "the invariant weight requires alpha > 1".into(),
            ));
        }
        let prim = if p.alpha() > 1.0 {
            Some([
                LogPrimTable::build(p, ExponentSide::Rho)?,
                LogPrimTable::build(p, ExponentSide::RhoHat)?,
            ])
        } else {
            None
        };
        Ok(Self { p: *p, kind, prim })
    }

    #[inline]
    fn prim(&self, side: ExponentSide, x: f64) -> f64 {
        match (&self.prim, side) {
            (Some(t), ExponentSide::Rho) => t[0].eval(x),
            (Some(t), ExponentSide::RhoHat) => t[1].eval(x),
            (None, _) => 0.0,
        }
    }

    /// Weight at an exterior point; zero inside the interval.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let p = &self.p;
        let ax = x.abs();
        if ax <= 1.0 {
            return 0.0;
        }
        let am1 = (p.alpha() - 1.0).max(0.0);
        let (s_here, side, plus_sign) = if x > 0.0 {
            (p.sin_pi_alpha_rho_hat(), ExponentSide::Rho, true)
        } else {
            (p.sin_pi_alpha_rho(), ExponentSide::RhoHat, false)
        };
        let psi = (ax - 1.0).powf(
            if plus_sign { p.alpha_rho_hat() } else { p.alpha_rho() } - 1.0,
        ) * (ax + 1.0).powf(
            if plus_sign { p.alpha_rho() } else { p.alpha_rho_hat() } - 1.0,
        );
        let prim = if am1 > 0.0 { self.prim(side, ax) } else { 0.0 };
        match self.kind {
            HarmonicKind::V1 => {
                let edge = if x > 0.0 { ax + 1.0 } else { ax - 1.0 };
                s_here * (edge * psi - am1 * prim)
            }
            HarmonicKind::VMinus1 => {
                let edge = if x > 0.0 { ax - 1.0 } else { ax + 1.0 };
                s_here * (edge * psi - am1 * prim)
            }
            HarmonicKind::V => s_here * (2.0 * ax * psi - 2.0 * am1 * prim),
            HarmonicKind::H => s_here * prim,
        }
    }
}

/// Simulates one path on the grid from `x`, marking it killed at the first
/// grid point inside `[-1, 1]` or truncated at the horizon. Excursions into
/// the interval between grid points are invisible at this resolution; the
/// halved-step comparison in the verification suites bounds that bias.
pub fn simulate_killed_path(
    p: &StableParams,
    x: ExteriorPoint,
    c: &SimConfig,
) -> Result<PathSample> {
    c.validate()?;
    let sampler = IncrementSampler::new(p, c.dt)?;
    let n_steps = (c.horizon / c.dt).ceil() as usize;
    let mut rng = c.rng.rng();
    let mut times = Vec::with_capacity(n_steps.min(1 << 22) + 1);
    let mut positions = Vec::with_capacity(times.capacity());
    let mut pos = x.get();
    times.push(0.0);
    positions.push(pos);
    for k in 1..=n_steps {
        pos += sampler.sample(&mut rng);
        times.push(k as f64 * c.dt);
        positions.push(pos);
        if pos.abs() <= 1.0 {
            return Ok(PathSample {
                times,
                positions,
                killed: true,
                kill_index: Some(k),
                truncated: false,
            });
        }
    }
    Ok(PathSample {
        times,
        positions,
        killed: false,
        kill_index: None,
        truncated: true,
    })
}

/// Weighted time-`t` estimator: `E^x[ 1_{t < T} payoff(xi_t) h(xi_t) ] / h(x)`,
/// the h-transform expectation of the payoff. Killed-before-`t` paths
/// contribute zero.
pub fn weighted_time_t_estimator<F>(
    p: &StableParams,
    x: ExteriorPoint,
    t: f64,
    h_kind: HarmonicKind,
    payoff: F,
    c: &SimConfig,
) -> Result<EstimateWithCI>
where
    F: Fn(f64) -> f64 + Sync,
{
    weighted_time_t_with_radius(p, x, t, h_kind, 1.0, |pos| payoff(pos), c)
}

/// Same estimator with killing on the enlarged interval `(-r, r)`; used by
/// the conditioning comparisons where survival of the `delta`-interval is
/// part of the event.
pub fn weighted_time_t_with_radius<F>(
    p: &StableParams,
    x: ExteriorPoint,
    t: f64,
    h_kind: HarmonicKind,
    kill_radius: f64,
    payoff: F,
    c: &SimConfig,
) -> Result<EstimateWithCI>
where
    F: Fn(f64) -> f64 + Sync,
{
    c.validate()?;
    if !(t > 0.0 && t < c.horizon) {
        return Err(Error::OutOfRange(format!("need 0 < t < horizon, got t = {t}")));
    }
    if kill_radius < 1.0 {
        return Err(Error::Domain("kill radius below the unit interval".into()));
    }
    let htab = HTable::build(p, h_kind)?;
    let hx = htab.eval(x.get());
    if !(hx > 0.0) {
        return Err(Error::Domain(format!("weight vanishes at the start point {}", x.get())));
    }
    let sampler = IncrementSampler::new(p, c.dt)?;
    let n_steps = (t / c.dt).round().max(1.0) as usize;
    let x0 = x.get();
    let values = par_paths(c, |rng| {
        let mut pos = x0;
        for _ in 0..n_steps {
            pos += sampler.sample(rng);
            if pos.abs() <= kill_radius {
                return 0.0;
            }
        }
        payoff(pos) * htab.eval(pos) / hx
    });
    Ok(EstimateWithCI::from_values(&values))
}

/// A compact union of two closed intervals on either side of `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct CompactPair {
    pub neg: (f64, f64),
    pub pos: (f64, f64),
}

impl CompactPair {
    pub fn new(neg: (f64, f64), pos: (f64, f64)) -> Result<Self> {
        if !(neg.0 <= neg.1 && neg.1 < -1.0) || !(pos.1 >= pos.0 && pos.0 > 1.0) {
            return Err(Error::Domain(format!(
                "intervals must be ordered and exterior, got {neg:?}, {pos:?}"
            )));
        }
        Ok(Self { neg, pos })
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        (x >= self.neg.0 && x <= self.neg.1) || (x >= self.pos.0 && x <= self.pos.1)
    }

    fn interior_contains(&self, x: f64) -> bool {
        (x > self.neg.0 && x < self.neg.1) || (x > self.pos.0 && x < self.pos.1)
    }
}

/// Outcome of one path of the exit experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitOutcome {
    /// Entered `[-1, 1]` while still inside `K`.
    Killed,
    /// Left `K` before the interval; carries the exit position.
    Exited(f64),
    /// Horizon reached unresolved.
    Truncated,
}

/// Simulates the exit experiment once per path at step `dt/2` and reports
/// the outcome at both resolutions: the coarse view reads every second grid
/// point of the same trajectory, so the pair isolates the discretization
/// effect from Monte Carlo noise.
pub fn exit_outcome_pairs(
    p: &StableParams,
    x: ExteriorPoint,
    k_set: &CompactPair,
    c: &SimConfig,
) -> Result<Vec<(ExitOutcome, ExitOutcome)>> {
    c.validate()?;
    if !k_set.interior_contains(x.get()) {
        return Err(Error::Domain(format!(
            "start point {} not in the interior of K",
            x.get()
        )));
    }
    let sampler = IncrementSampler::new(p, 0.5 * c.dt)?;
    let n_fine = (2.0 * c.horizon / c.dt).ceil() as usize;
    let x0 = x.get();
    let outcomes: Vec<(ExitOutcome, ExitOutcome)> = (0..c.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = c.rng.substream(i as u64).rng();
            let mut pos = x0;
            let mut fine: Option<ExitOutcome> = None;
            let mut coarse: Option<ExitOutcome> = None;
            let classify = |pos: f64| -> Option<ExitOutcome> {
                if pos.abs() <= 1.0 {
                    Some(ExitOutcome::Killed)
                } else if !k_set.contains(pos) {
                    Some(ExitOutcome::Exited(pos))
                } else {
                    None
                }
            };
            for step in 1..=n_fine {
                pos += sampler.sample(&mut rng);
                if fine.is_none() {
                    fine = classify(pos);
                }
                if step % 2 == 0 && coarse.is_none() {
                    coarse = classify(pos);
                }
                if fine.is_some() && coarse.is_some() {
                    break;
                }
            }
            (
                fine.unwrap_or(ExitOutcome::Truncated),
                coarse.unwrap_or(ExitOutcome::Truncated),
            )
        })
        .collect();
    Ok(outcomes)
}

/// Turns exit outcomes into the weighted estimator value for one weight.
pub fn weight_exit_outcomes(
    p: &StableParams,
    x: ExteriorPoint,
    h_kind: HarmonicKind,
    outcomes: &[ExitOutcome],
) -> Result<EstimateWithCI> {
    let htab = HTable::build(p, h_kind)?;
    let hx = htab.eval(x.get());
    let values: Vec<f64> = outcomes
        .iter()
        .map(|o| match o {
            ExitOutcome::Exited(pos) => htab.eval(*pos) / hx,
            _ => 0.0,
        })
        .collect();
    Ok(EstimateWithCI::from_values(&values))
}

/// `E^x[ 1_{T_{K^C} < T_{[-1,1]}} h(xi at exit) ] / h(x)`; equals one in
/// expectation when `h` is harmonic.
pub fn weighted_exit_estimator(
    p: &StableParams,
    x: ExteriorPoint,
    k_set: &CompactPair,
    h_kind: HarmonicKind,
    c: &SimConfig,
) -> Result<EstimateWithCI> {
    let pairs = exit_outcome_pairs(p, x, k_set, c)?;
    let fine: Vec<ExitOutcome> = pairs.iter().map(|(f, _)| *f).collect();
    weight_exit_outcomes(p, x, h_kind, &fine)
}

/// Signed position of minimal absolute value over the grid of an unkilled
/// path. Truncation at the horizon biases the value upward; the sampling
/// drivers below track that explicitly.
pub fn empirical_closest_reach(path: &PathSample) -> Result<f64> {
    if path.killed {
        return Err(Error::KilledPath);
    }
    let mut best = path.positions[0];
    for &p in &path.positions {
        if p.abs() < best.abs() {
            best = p;
        }
    }
    Ok(best)
}

/// One closest-reach draw: the running minimum is accepted once it has been
/// stable for the latter half of the elapsed time, extending the horizon up
/// to fourfold before giving up.
pub(crate) fn closest_reach_draw(
    sampler: &IncrementSampler,
    x0: f64,
    dt: f64,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, bool) {
    let mut pos = x0;
    let mut best = x0;
    let mut best_step = 0usize;
    let mut step = 0usize;
    let min_steps = (horizon / dt) as usize;
    let max_steps = 4 * min_steps;
    loop {
        step += 1;
        pos += sampler.sample(rng);
        if pos.abs() < best.abs() {
            best = pos;
            best_step = step;
        }
        if step >= min_steps && best_step * 2 <= step {
            return (best, true);
        }
        if step >= max_steps {
            return (best, false);
        }
    }
}

/// Batch of closest-reach samples; the second member is the fraction of
/// paths whose running minimum was still moving when the extended horizon
/// ran out (the residual bias indicator).
pub fn closest_reach_samples(
    p: &StableParams,
    x: ExteriorPoint,
    c: &SimConfig,
) -> Result<(Vec<f64>, f64)> {
    c.validate()?;
    if p.alpha() >= 1.0 {
        return Err(Error::Scope(
            "closest reach sampling needs the transient regime alpha < 1".into(),
        ));
    }
    let sampler = IncrementSampler::new(p, c.dt)?;
    let x0 = x.get();
    let draws: Vec<(f64, bool)> = (0..c.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = c.rng.substream(i as u64).rng();
            closest_reach_draw(&sampler, x0, c.dt, c.horizon, &mut rng)
        })
        .collect();
    let unstable = draws.iter().filter(|(_, s)| !s).count() as f64 / draws.len() as f64;
    Ok((draws.into_iter().map(|(v, _)| v).collect(), unstable))
}

/// Conditioning event of the rejection estimator.
#[derive(Debug, Clone, Copy)]
pub enum Conditioning {
    /// `{ closest reach in (1, 1+eps) }`, transient regime.
    ClosestReachWindow(f64),
    /// `{ position at first entrance into the eps-interval lies in (1, 1+eps) }`,
    /// recurrent regime.
    EntranceWindow(f64),
}

const ACCEPTANCE_FLOOR: usize = 100;

/// Crude rejection estimate of
/// `P^x(event(xi_t), t < T_{(-(1+delta), 1+delta)} | conditioning)`.
pub fn conditional_law_estimator<F>(
    p: &StableParams,
    x: ExteriorPoint,
    t: f64,
    event: F,
    conditioning: Conditioning,
    delta: f64,
    c: &SimConfig,
) -> Result<EstimateWithCI>
where
    F: Fn(f64) -> bool + Sync,
{
    c.validate()?;
    if !(delta > 0.0 && t > 0.0) {
        return Err(Error::OutOfRange("need positive t and delta".into()));
    }
    match conditioning {
        Conditioning::ClosestReachWindow(_) if p.alpha() >= 1.0 => {
            return Err(Error::Scope(
                "closest-reach conditioning requires alpha < 1".into(),
            ))
        }
        Conditioning::EntranceWindow(_) if p.alpha() < 1.0 => {
            return Err(Error::Scope(
                "entrance-window conditioning requires alpha >= 1".into(),
            ))
        }
        _ => {}
    }
    let sampler = IncrementSampler::new(p, c.dt)?;
    let x0 = x.get();
    let t_steps = (t / c.dt).round().max(1.0) as usize;
    let r_delta = 1.0 + delta;

    // per path: Some(event && survived delta-interval) when accepted
    let flags: Vec<Option<bool>> = (0..c.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = c.rng.substream(i as u64).rng();
            let mut pos = x0;
            let mut alive_delta = true;
            let mut pos_t = f64::NAN;
            let mut step = 0usize;
            let max_steps = (4.0 * c.horizon / c.dt) as usize;
            match conditioning {
                Conditioning::ClosestReachWindow(eps) => {
                    let mut best = x0;
                    let mut best_step = 0usize;
                    let min_steps = (c.horizon / c.dt) as usize;
                    loop {
                        step += 1;
                        pos += sampler.sample(&mut rng);
                        if step <= t_steps && pos.abs() <= r_delta {
                            alive_delta = false;
                        }
                        if step == t_steps {
                            pos_t = pos;
                        }
                        if pos.abs() < best.abs() {
                            best = pos;
                            best_step = step;
                        }
                        let stable = step >= min_steps && best_step * 2 <= step;
                        if (stable || step >= max_steps) && step >= t_steps {
                            let accepted = best > 1.0 && best < 1.0 + eps;
                            return if accepted {
                                Some(event(pos_t) && alive_delta)
                            } else {
                                None
                            };
                        }
                    }
                }
                Conditioning::EntranceWindow(eps) => {
                    let r_eps = 1.0 + eps;
                    let mut entry: Option<f64> = None;
                    loop {
                        step += 1;
                        pos += sampler.sample(&mut rng);
                        if step <= t_steps && pos.abs() <= r_delta {
                            alive_delta = false;
                        }
                        if step == t_steps {
                            pos_t = pos;
                        }
                        if entry.is_none() && pos.abs() < r_eps {
                            entry = Some(pos);
                        }
                        if (entry.is_some() && step >= t_steps) || step >= max_steps {
                            return match entry {
                                Some(e) if e > 1.0 && e < r_eps => {
                                    Some(event(pos_t) && alive_delta)
                                }
                                _ => None,
                            };
                        }
                    }
                }
            }
        })
        .collect();

    let accepted: Vec<f64> = flags
        .iter()
        .filter_map(|f| f.map(|b| if b { 1.0 } else { 0.0 }))
        .collect();
    if accepted.len() < ACCEPTANCE_FLOOR {
        return Err(Error::InsufficientAcceptance {
            accepted: accepted.len(),
            floor: ACCEPTANCE_FLOOR,
        });
    }
    Ok(EstimateWithCI::from_values(&accepted))
}

// ---------------------------------------------------------------------------
// Conditioned-chain sampler
// ---------------------------------------------------------------------------

const GRID_BOUNDARY_WIDTH: f64 = 0.5;
const GRID_BOUNDARY_POINTS: usize = 40;
const GRID_WINDOW_HALF: usize = 30;
const GRID_FAR_POINTS: usize = 30;
const GRID_FAR_CAP: f64 = 400.0;
const MASS_COLLAPSE_FRACTION: f64 = 1e-3;
const KILL_POSITION_FACTOR: f64 = 10.0;

/// Step-by-step sampler of the conditioned process: each transition draws
/// from the normalized density `(stable dt-increment) x h(next)` restricted
/// to the exterior, tabulated on a grid refined near the interval boundary
/// down to `boundary_cutoff`. The chain is declared absorbed once it sits
/// within a few cutoffs of the boundary and the proposal mass collapses
/// below the resolvable scale.
pub struct DoobSampler {
    p: StableParams,
    kind: HarmonicKind,
    table: StableDensityTable,
    htab: HTable,
    c: SimConfig,
    inv_s: f64,
    exps: BoundaryExponents,
    // position-independent part of the grid: boundary refinements and the
    // far field, with their weight integrals precomputed
    static_nodes: Vec<f64>,
    static_mid: Vec<f64>,
    static_h: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct BoundaryExponents {
    pos: f64,
    neg: f64,
}

impl DoobSampler {
    pub fn new(p: &StableParams, kind: HarmonicKind, c: &SimConfig) -> Result<Self> {
        c.validate()?;
        let table = StableDensityTable::build(p)?;
        let htab = HTable::build(p, kind)?;
        let arh = p.alpha_rho_hat();
        let ar = p.alpha_rho();
        let exps = match kind {
            HarmonicKind::V1 => BoundaryExponents { pos: arh - 1.0, neg: ar },
            HarmonicKind::VMinus1 => BoundaryExponents { pos: arh, neg: ar - 1.0 },
            HarmonicKind::V => BoundaryExponents { pos: arh - 1.0, neg: ar - 1.0 },
            HarmonicKind::H => BoundaryExponents { pos: arh, neg: ar },
        };
        let mut sampler = Self {
            p: *p,
            kind,
            table,
            htab,
            c: *c,
            inv_s: c.dt.powf(-1.0 / p.alpha()),
            exps,
            static_nodes: Vec::new(),
            static_mid: Vec::new(),
            static_h: Vec::new(),
        };
        let nodes = sampler.static_grid(c.boundary_cutoff);
        let (mid, h): (Vec<f64>, Vec<f64>) = nodes
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                if w[0] < 0.0 && w[1] > 0.0 {
                    (m, 0.0)
                } else {
                    (m, sampler.cell_weight(w[0], w[1], m))
                }
            })
            .unzip();
        sampler.static_nodes = nodes;
        sampler.static_mid = mid;
        sampler.static_h = h;
        Ok(sampler)
    }

    fn static_grid(&self, cutoff: f64) -> Vec<f64> {
        let mut nodes: Vec<f64> =
            Vec::with_capacity(2 * GRID_BOUNDARY_POINTS + 2 * GRID_FAR_POINTS + 4);
        let ratio = (GRID_BOUNDARY_WIDTH / cutoff).powf(1.0 / GRID_BOUNDARY_POINTS as f64);
        let mut d = cutoff;
        for _ in 0..=GRID_BOUNDARY_POINTS {
            nodes.push(1.0 + d);
            nodes.push(-1.0 - d);
            d *= ratio;
        }
        let start = 1.0 + GRID_BOUNDARY_WIDTH;
        let fr = (GRID_FAR_CAP / start).powf(1.0 / GRID_FAR_POINTS as f64);
        let mut y = start;
        for _ in 0..=GRID_FAR_POINTS {
            nodes.push(y);
            nodes.push(-y);
            y *= fr;
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        nodes
    }

    fn grid(&self, pos: f64, cutoff: f64) -> Vec<f64> {
        // fallback grid for positions beyond the cached far field
        let mut nodes = self.static_grid(cutoff);
        let s = 1.0 / self.inv_s;
        for k in -(GRID_WINDOW_HALF as i64)..=(GRID_WINDOW_HALF as i64) {
            let y = pos + k as f64 * s;
            if y.abs() > 1.0 + cutoff {
                nodes.push(y);
            }
        }
        // bridge from the far cap out to the window
        let cap = GRID_FAR_CAP;
        if pos.abs() > cap {
            let sgn = pos.signum();
            let hi = pos.abs() + GRID_WINDOW_HALF as f64 * s;
            let fr = (hi / cap).powf(1.0 / 8.0);
            let mut y = cap;
            for _ in 0..=8 {
                nodes.push(sgn * y);
                y *= fr;
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        nodes
    }

    /// One transition. `Ok(None)` signals absorption at the boundary.
    pub fn step(&self, pos: f64, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
        let cutoff = self.c.boundary_cutoff;
        let s = 1.0 / self.inv_s;
        let w_half = GRID_WINDOW_HALF as f64 * s;
        let (mut nodes_buf, mut masses);
        let nodes: &[f64];
        let mut total = 0.0f64;
        if pos.abs() + w_half >= GRID_FAR_CAP {
            // rare far excursion: fall back to a fully dynamic grid
            nodes_buf = self.grid(pos, cutoff);
            masses = Vec::with_capacity(nodes_buf.len() - 1);
            for w in nodes_buf.windows(2) {
                let (a, b) = (w[0], w[1]);
                let m = if a < 0.0 && b > 0.0 {
                    0.0
                } else {
                    let mid = 0.5 * (a + b);
                    let f = self.table.eval_scaled(self.inv_s, mid - pos);
                    (f * self.cell_weight(a, b, mid)).max(0.0)
                };
                masses.push(m);
                total += m;
            }
            nodes = &nodes_buf;
        } else {
            // static cells outside the moving window keep their cached
            // weight integrals; only the cells the window touches are fresh
            let sn = &self.static_nodes;
            let w_lo = pos - w_half;
            let w_hi = pos + w_half;
            let lo_idx = sn.partition_point(|&n| n <= w_lo).max(1);
            let hi_idx = sn.partition_point(|&n| n < w_hi).min(sn.len() - 1);
            let mut merged: Vec<f64> = Vec::with_capacity(hi_idx - lo_idx + 64);
            merged.extend_from_slice(&sn[lo_idx - 1..=hi_idx]);
            for k in -(GRID_WINDOW_HALF as i64)..=(GRID_WINDOW_HALF as i64) {
                let y = pos + k as f64 * s;
                if y.abs() > 1.0 + cutoff && y > sn[lo_idx - 1] && y < sn[hi_idx] {
                    merged.push(y);
                }
            }
            merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
            merged.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

            let n_cells = (lo_idx - 1) + (merged.len() - 1) + (sn.len() - 1 - hi_idx);
            nodes_buf = Vec::with_capacity(n_cells + 1);
            masses = Vec::with_capacity(n_cells);
            for j in 0..lo_idx - 1 {
                nodes_buf.push(sn[j]);
                let m = (self.table.eval_scaled(self.inv_s, self.static_mid[j] - pos)
                    * self.static_h[j])
                    .max(0.0);
                masses.push(m);
                total += m;
            }
            for w in merged.windows(2) {
                let (a, b) = (w[0], w[1]);
                nodes_buf.push(a);
                let m = if a < 0.0 && b > 0.0 {
                    0.0
                } else {
                    let mid = 0.5 * (a + b);
                    let f = self.table.eval_scaled(self.inv_s, mid - pos);
                    (f * self.cell_weight(a, b, mid)).max(0.0)
                };
                masses.push(m);
                total += m;
            }
            for j in hi_idx..sn.len() - 1 {
                nodes_buf.push(sn[j]);
                let m = (self.table.eval_scaled(self.inv_s, self.static_mid[j] - pos)
                    * self.static_h[j])
                    .max(0.0);
                masses.push(m);
                total += m;
            }
            nodes_buf.push(sn[sn.len() - 1]);
            nodes = &nodes_buf;
        }
        // unresolvable sliver below the cutoff on each side
        let below = self.below_cutoff_mass(pos, cutoff);
        let grand = total + below;
        if !(grand > 0.0) || !grand.is_finite() {
            return Err(Error::GridFailure(format!(
                "transition mass from {pos} not resolvable (total {grand})"
            )));
        }
        let near_boundary = pos.abs() - 1.0 <= KILL_POSITION_FACTOR * cutoff;
        if near_boundary && below > MASS_COLLAPSE_FRACTION * grand {
            return Ok(None);
        }

        // draw a cell, then a point within it from the local shape
        let mut u = rand::Rng::gen::<f64>(rng) * total;
        let mut idx = masses.len() - 1;
        for (i, m) in masses.iter().enumerate() {
            if u < *m {
                idx = i;
                break;
            }
            u -= m;
        }
        let (a, b) = (nodes[idx], nodes[idx + 1]);
        let v: f64 = rand::Rng::gen(rng);
        let y = match self.cell_exponent(a, b) {
            Some(e) => {
                // power-shaped draw anchored at the boundary
                let (d0, d1, sign, base) = if a >= 1.0 {
                    (a - 1.0, b - 1.0, 1.0, 1.0)
                } else {
                    (-1.0 - b, -1.0 - a, -1.0, -1.0)
                };
                let q = e + 1.0;
                let t = (v * (d1.powf(q) - d0.powf(q)) + d0.powf(q)).powf(1.0 / q);
                base + sign * t
            }
            None => a + v * (b - a),
        };
        Ok(Some(y))
    }

    fn cell_exponent(&self, a: f64, b: f64) -> Option<f64> {
        if a >= 1.0 && b <= 1.0 + GRID_BOUNDARY_WIDTH {
            Some(self.exps.pos)
        } else if b <= -1.0 && a >= -1.0 - GRID_BOUNDARY_WIDTH {
            Some(self.exps.neg)
        } else {
            None
        }
    }

    fn cell_weight(&self, a: f64, b: f64, mid: f64) -> f64 {
        match self.cell_exponent(a, b) {
            Some(e) => {
                let (d0, d1, dm) = if a >= 1.0 {
                    (a - 1.0, b - 1.0, mid - 1.0)
                } else {
                    (-1.0 - b, -1.0 - a, -1.0 - mid)
                };
                let q = e + 1.0;
                let integral = (d1.powf(q) - d0.powf(q)) / q;
                self.htab.eval(mid) * integral / dm.powf(e)
            }
            None => self.htab.eval(mid) * (b - a),
        }
    }

    fn below_cutoff_mass(&self, pos: f64, cutoff: f64) -> f64 {
        let mut m = 0.0;
        // anchor the power shape at the innermost resolvable node
        for (sign, e) in [(1.0, self.exps.pos), (-1.0, self.exps.neg)] {
            let y_edge = sign * (1.0 + cutoff);
            let f = self.table.eval_scaled(self.inv_s, y_edge - pos);
            let h_edge = self.htab.eval(y_edge);
            let q = e + 1.0;
            // h(y) ~ h_edge * (d/cutoff)^e on d < cutoff
            m += f * h_edge * cutoff / q;
        }
        m
    }

    /// Runs one chain from `x`, recording the trajectory until absorption or
    /// the horizon. For absorbed chains the final entry is the pre-killing
    /// position; `kill_index` stays empty because the chain never enters the
    /// interval.
    pub fn simulate(&self, x: ExteriorPoint, stream: RngStream) -> Result<PathSample> {
        let n_steps = (self.c.horizon / self.c.dt).ceil() as usize;
        let mut rng = stream.rng();
        let mut times = vec![0.0];
        let mut positions = vec![x.get()];
        let mut pos = x.get();
        for k in 1..=n_steps {
            match self.step(pos, &mut rng)? {
                Some(next) => {
                    pos = next;
                    times.push(k as f64 * self.c.dt);
                    positions.push(pos);
                }
                None => {
                    return Ok(PathSample {
                        times,
                        positions,
                        killed: true,
                        kill_index: None,
                        truncated: false,
                    });
                }
            }
        }
        Ok(PathSample {
            times,
            positions,
            killed: false,
            kill_index: None,
            truncated: true,
        })
    }

    pub fn kind(&self) -> HarmonicKind {
        self.kind
    }
    pub fn params(&self) -> &StableParams {
        &self.p
    }
}

/// One-off conditioned chain; batch callers should build a [`DoobSampler`]
/// once and reuse it, the density tabulation dominates the setup cost.
pub fn simulate_doob_chain(
    p: &StableParams,
    x: ExteriorPoint,
    h_kind: HarmonicKind,
    c: &SimConfig,
) -> Result<PathSample> {
    DoobSampler::new(p, h_kind, c)?.simulate(x, c.rng)
}
