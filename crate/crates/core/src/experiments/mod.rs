//! Suite runner: declarative configs in, one CSV of check rows per suite
//! out. Checks run concurrently on per-check substreams; failed quadrature
//! or starved acceptance becomes a failed row with a reason, never a crash.

pub mod config;
pub mod report;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{Suite, SuiteConfig, Tolerances};
pub use report::{from_csv, to_csv, write_results, CheckResult, CSV_HEADER};

use crate::error::{Error, Result};
use crate::harmonic::{self, ExteriorPoint, HarmonicKind};
use crate::hitting::{self, HittingWindow, Side};
use crate::model::{validate_params, IncrementSampler, StableParams};
use crate::pathsim::{
    self, CompactPair, DoobSampler, EstimateWithCI, ExitOutcome, SimConfig,
};
use crate::quad::QuadratureSettings;

fn qs() -> QuadratureSettings {
    QuadratureSettings::default()
}

fn pt(x: f64) -> Result<ExteriorPoint> {
    ExteriorPoint::new(x)
}

/// Stable per-check stream id derived from the check id text.
fn stream_of(id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in id.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

struct Row {
    check_id: String,
    alpha: f64,
    rho: f64,
    x: f64,
    eps_or_delta: f64,
    expected: f64,
    observed: f64,
    std_error: f64,
    tolerance: f64,
    passed: bool,
    reason: String,
}

impl Row {
    fn finish(self, runtime_ms: u64) -> CheckResult {
        CheckResult {
            check_id: self.check_id,
            alpha: self.alpha,
            rho: self.rho,
            x: self.x,
            eps_or_delta: self.eps_or_delta,
            expected: self.expected,
            observed: self.observed,
            std_error: self.std_error,
            tolerance: self.tolerance,
            passed: self.passed,
            runtime_ms,
            reason: self.reason,
        }
    }
}

fn failed_row(id: &str, p: &StableParams, x: f64, err: &Error) -> Row {
    Row {
        check_id: id.to_string(),
        alpha: p.alpha(),
        rho: p.rho(),
        x,
        eps_or_delta: f64::NAN,
        expected: f64::NAN,
        observed: f64::NAN,
        std_error: 0.0,
        tolerance: f64::NAN,
        passed: false,
        reason: format!("{err}"),
    }
}

fn skipped_row(id: &str, p: &StableParams, x: f64, why: &str) -> Row {
    Row {
        check_id: id.to_string(),
        alpha: p.alpha(),
        rho: p.rho(),
        x,
        eps_or_delta: f64::NAN,
        expected: f64::NAN,
        observed: f64::NAN,
        std_error: 0.0,
        tolerance: f64::NAN,
        passed: true,
        reason: format!("skipped: {why}"),
    }
}

type CheckFn = Box<dyn Fn() -> Vec<Row> + Sync + Send>;
type Check = (String, CheckFn);

fn execute(checks: Vec<Check>) -> Vec<CheckResult> {
    let mut results: Vec<CheckResult> = checks
        .par_iter()
        .flat_map(|(_, c)| {
            let start = Instant::now();
            let rows = c();
            let ms = start.elapsed().as_millis() as u64;
            rows.into_iter()
                .map(|r| r.finish(ms))
                .collect::<Vec<_>>()
        })
        .collect();
    results.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    results
}

/// Runs the configured suite and writes its CSV into the output directory.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    cfg.validate()?;
    let results = match cfg.suite {
        Suite::Identity => run_identity_suite(cfg)?,
        Suite::Asymptotics => run_asymptotics_suite(cfg)?,
        Suite::HarmonicityMc => run_harmonicity_mc_suite(cfg)?,
        Suite::Absorption => run_absorption_suite(cfg)?,
        Suite::Conditioning => run_conditioning_suite(cfg)?,
    };
    write_results(&cfg.out_dir, cfg.suite.name(), &results)?;
    Ok(results)
}

// ---------------------------------------------------------------------------
// identity suite
// ---------------------------------------------------------------------------

pub fn run_identity_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    Ok(execute(build_identity(cfg)?))
}

fn build_identity(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    if cfg.y_points.is_empty() || cfg.delta_ladder.is_empty() {
        return Err(Error::Config("identity suite needs y points and a delta ladder".into()));
    }
    let tol = cfg.tol;
    let mut checks: Vec<Check> = Vec::new();

    for &(alpha, rho) in &cfg.params {
        let p = validate_params(alpha, rho)?;
        for &x in &cfg.points {
            for &y in &cfg.y_points {
                if !(x > y && y > 1.0 || x < -1.0 && y > 1.0) {
                    continue;
                }
                let id = format!("lemma31/a{alpha}_r{rho}/x{x}/y{y}");
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    match harmonic::lemma31_residual(&p, xp, y, &qs()) {
                        Ok(res) => {
                            let scale = harmonic::v1(&p, xp).map(|v| v.max(1.0)).unwrap_or(1.0);
                            vec![Row {
                                check_id: id.clone(),
                                alpha,
                                rho,
                                x,
                                eps_or_delta: y,
                                expected: 0.0,
                                observed: res,
                                std_error: 0.0,
                                tolerance: tol.identity * scale,
                                passed: res.abs() <= tol.identity * scale,
                                reason: String::new(),
                            }]
                        }
                        Err(e) => vec![failed_row(&id, &p, x, &e)],
                    }
                })));
            }

            // boundary-ratio ladder, monotone decay with the gate at the
            // smallest delta
            let deltas = {
                let mut d = cfg.delta_ladder.clone();
                d.sort_by(|a, b| b.partial_cmp(a).unwrap());
                d
            };
            let id_base = format!("cor32/a{alpha}_r{rho}/x{x}");
            let listing_id = id_base.clone();
            checks.push((listing_id, Box::new(move || {
                let xp = match pt(x) {
                    Ok(v) => v,
                    Err(e) => return vec![failed_row(&id_base, &p, x, &e)],
                };
                let target = match harmonic::v1(&p, xp) {
                    Ok(v) => v,
                    Err(e) => return vec![failed_row(&id_base, &p, x, &e)],
                };
                let mut rows = Vec::new();
                let mut prev_gap: Option<f64> = None;
                for (k, &d) in deltas.iter().enumerate() {
                    let id = format!("{id_base}/d{d:.0e}");
                    match harmonic::green_boundary_ratio(&p, xp, d, &qs()) {
                        Ok(ratio) => {
                            let gap = ((ratio - target) / target).abs();
                            let last = k + 1 == deltas.len();
                            let (tolv, pass, why) = if last {
                                (tol.ratio, gap < tol.ratio, String::new())
                            } else if let Some(pg) = prev_gap {
                                (pg, gap < pg, "pass = decay vs previous delta".to_string())
                            } else {
                                (1.0, gap < 1.0, "coarse ladder entry".to_string())
                            };
                            rows.push(Row {
                                check_id: id,
                                alpha,
                                rho,
                                x,
                                eps_or_delta: d,
                                expected: target,
                                observed: ratio,
                                std_error: 0.0,
                                tolerance: tolv,
                                passed: pass,
                                reason: why,
                            });
                            prev_gap = Some(gap);
                        }
                        Err(e) => rows.push(failed_row(&id, &p, x, &e)),
                    }
                }
                rows
            })));
        }
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// asymptotics suite
// ---------------------------------------------------------------------------

fn ladder_rows<F>(
    id_base: &str,
    p: &StableParams,
    x: f64,
    epss: &[f64],
    target: f64,
    tol_final: f64,
    mut eval: F,
) -> Vec<Row>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut rows = Vec::new();
    let mut prev_gap: Option<f64> = None;
    for (k, &eps) in epss.iter().enumerate() {
        let id = format!("{id_base}/e{eps:.0e}");
        match eval(eps) {
            Ok(scaled) => {
                let gap = ((scaled - target) / target).abs();
                let last = k + 1 == epss.len();
                let (tolv, pass, why) = if last {
                    (tol_final, gap < tol_final, String::new())
                } else if let Some(pg) = prev_gap {
                    (pg, gap < pg, "pass = decay vs previous eps".to_string())
                } else {
                    (1.0, gap < 1.0, "coarse ladder entry".to_string())
                };
                rows.push(Row {
                    check_id: id,
                    alpha: p.alpha(),
                    rho: p.rho(),
                    x,
                    eps_or_delta: eps,
                    expected: target,
                    observed: scaled,
                    std_error: 0.0,
                    tolerance: tolv,
                    passed: pass,
                    reason: why,
                });
                prev_gap = Some(gap);
            }
            Err(e) => rows.push(failed_row(&id, p, x, &e)),
        }
    }
    rows
}

pub fn run_asymptotics_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    Ok(execute(build_asymptotics(cfg)?))
}

fn build_asymptotics(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let tol = cfg.tol;
    let mut checks: Vec<Check> = Vec::new();

    for &(alpha, rho) in &cfg.params {
        let p = validate_params(alpha, rho)?;
        for &x in &cfg.points {
            if p.alpha() < 1.0 {
                // closest-reach window asymptote and normalization
                let epss = if cfg.eps_ladder.is_empty() {
                    vec![1e-3, 1e-4, 1e-5]
                } else {
                    cfg.eps_ladder.clone()
                };
                let id = format!("prop31/a{alpha}_r{rho}/x{x}");
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let target = match hitting::closest_reach_asymptote(&p, xp, Side::Positive) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    ladder_rows(&id, &p, x, &epss, target, tol.ratio, |eps| {
                        let w = HittingWindow::new(1.0, 1.0 + eps, Side::Positive)?;
                        Ok(hitting::closest_reach_mass(&p, xp, &w, &qs())? / eps)
                    })
                })));
                let id = format!("norm_cr/a{alpha}_r{rho}/x{x}");
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let total = HittingWindow::new(0.0, x.abs(), Side::Both)
                        .and_then(|w| hitting::closest_reach_mass(&p, xp, &w, &qs()));
                    match total {
                        Ok(m) => vec![Row {
                            check_id: id.clone(),
                            alpha,
                            rho,
                            x,
                            eps_or_delta: f64::NAN,
                            expected: 1.0,
                            observed: m,
                            std_error: 0.0,
                            tolerance: tol.normalization,
                            passed: (m - 1.0).abs() < tol.normalization,
                            reason: String::new(),
                        }],
                        Err(e) => vec![failed_row(&id, &p, x, &e)],
                    }
                })));
            } else {
                // entrance-window asymptote and entrance normalization
                let epss = if cfg.eps_ladder.is_empty() {
                    vec![1e-2, 1e-3, 1e-4]
                } else {
                    cfg.eps_ladder.clone()
                };
                let id = format!("prop34/a{alpha}_r{rho}/x{x}");
                let arh = p.alpha_rho_hat();
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let target = match hitting::entrance_window_asymptote(&p, xp, Side::Positive) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    ladder_rows(&id, &p, x, &epss, target, tol.ratio, |eps| {
                        Ok(hitting::entrance_window_mass(&p, xp, eps, Side::Positive, &qs())?
                            * eps.powf(arh - 1.0))
                    })
                })));
                let id = format!("norm_fe/a{alpha}_r{rho}/x{x}");
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    match entrance_normalization(&p, x) {
                        Ok(total) => vec![Row {
                            check_id: id.clone(),
                            alpha,
                            rho,
                            x,
                            eps_or_delta: f64::NAN,
                            expected: 1.0,
                            observed: total,
                            std_error: 0.0,
                            tolerance: tol.normalization,
                            passed: (total - 1.0).abs() < tol.normalization,
                            reason: String::new(),
                        }],
                        Err(e) => vec![failed_row(&id, &p, x, &e)],
                    }
                })));
            }

            // point-avoiding closest reach: alpha > 1 only
            let id = format!("prop36/a{alpha}_r{rho}/x{x}");
            if p.alpha() > 1.0 {
                let epss = if cfg.eps_ladder.is_empty() {
                    vec![1e-3, 1e-4, 1e-5]
                } else {
                    cfg.eps_ladder.clone()
                };
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let target = match hitting::circ_asymptote(&p, xp, HarmonicKind::V1) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let e_of_x = match harmonic::avoid_zero_e(&p, x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    ladder_rows(&id, &p, x, &epss, target, tol.ratio, |eps| {
                        let w = HittingWindow::new(1.0, 1.0 + eps, Side::Positive)?;
                        Ok(
                            hitting::circ_closest_reach_mass(&p, xp, &w, HarmonicKind::V1, &qs())?
                                * e_of_x
                                / eps,
                        )
                    })
                })));
                let id = format!("norm_circ/a{alpha}_r{rho}/x{x}");
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let total = HittingWindow::new(0.0, x.abs(), Side::Both).and_then(|w| {
                        hitting::circ_closest_reach_mass(&p, xp, &w, HarmonicKind::V, &qs())
                    });
                    match total {
                        Ok(m) => vec![Row {
                            check_id: id.clone(),
                            alpha,
                            rho,
                            x,
                            eps_or_delta: f64::NAN,
                            expected: 1.0,
                            observed: m,
                            std_error: 0.0,
                            tolerance: tol.normalization_circ,
                            passed: (m - 1.0).abs() < tol.normalization_circ,
                            reason: String::new(),
                        }],
                        Err(e) => vec![failed_row(&id, &p, x, &e)],
                    }
                })));
            } else if p.alpha() == 1.0 {
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    vec![skipped_row(
                        &id,
                        &p,
                        x,
                        "point-avoiding conditioning needs alpha > 1",
                    )]
                })));
            }

            // side-selection slope for asymmetric recurrent parameters
            if p.alpha() >= 1.0 && p.rho() != 0.5 && x > 1.0 {
                let id = format!("thm28_slope/a{alpha}_r{rho}/x{x}");
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let epss = [1e-2, 1e-3, 1e-4];
                    let mut lx = Vec::new();
                    let mut ly = Vec::new();
                    for &eps in &epss {
                        let pos = hitting::entrance_window_mass(&p, xp, eps, Side::Positive, &qs());
                        let neg = hitting::entrance_window_mass(&p, xp, eps, Side::Negative, &qs());
                        match (pos, neg) {
                            (Ok(pm), Ok(nm)) => {
                                lx.push(eps.ln());
                                ly.push((nm / pm).ln());
                            }
                            (Err(e), _) | (_, Err(e)) => {
                                return vec![failed_row(&id, &p, x, &e)]
                            }
                        }
                    }
                    let n = lx.len() as f64;
                    let sx: f64 = lx.iter().sum();
                    let sy: f64 = ly.iter().sum();
                    let sxx: f64 = lx.iter().map(|v| v * v).sum();
                    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
                    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                    let target = p.alpha() * (p.rho_hat() - p.rho());
                    vec![Row {
                        check_id: id.clone(),
                        alpha,
                        rho,
                        x,
                        eps_or_delta: f64::NAN,
                        expected: target,
                        observed: slope,
                        std_error: 0.0,
                        tolerance: tol.slope * target.abs(),
                        passed: (slope - target).abs() < tol.slope * target.abs(),
                        reason: String::new(),
                    }]
                })));
            }
        }
    }
    Ok(checks)
}

/// Integral of the first-entrance density over `(-1, 1)` with both boundary
/// singularities removed by substitution.
pub fn entrance_normalization(p: &StableParams, x_start: f64) -> Result<f64> {
    let quad_outer = QuadratureSettings {
        rel_tol: 3e-9,
        abs_tol: 1e-12,
        max_subdivisions: 800,
    };
    let inner = qs();
    let ar = p.alpha_rho();
    let arh = p.alpha_rho_hat();
    let clamp = |y: f64| y.clamp(-1.0 + 1e-12, 1.0 - 1e-12);
    let left = crate::quad::integrate_left_algebraic(
        |y: f64| {
            let y = clamp(y);
            hitting::first_entrance_density(p, x_start, y, &inner).unwrap_or(f64::NAN)
                * (1.0 + y).powf(ar)
        },
        -1.0,
        0.0,
        1.0 - ar,
        &quad_outer,
    )?;
    let right = crate::quad::integrate_right_algebraic(
        |y: f64| {
            let y = clamp(y);
            hitting::first_entrance_density(p, x_start, y, &inner).unwrap_or(f64::NAN)
                * (1.0 - y).powf(arh)
        },
        0.0,
        1.0,
        1.0 - arh,
        &quad_outer,
    )?;
    Ok(left + right)
}

// ---------------------------------------------------------------------------
// harmonicity suite
// ---------------------------------------------------------------------------

pub fn run_harmonicity_mc_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    Ok(execute(build_harmonicity_mc(cfg)?))
}

fn build_harmonicity_mc(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let tol = cfg.tol;
    let k_set = CompactPair::new((-3.0, -1.2), (1.2, 3.0))?;
    let mut checks: Vec<Check> = Vec::new();

    for &(alpha, rho) in &cfg.params {
        let p = validate_params(alpha, rho)?;
        for &x in &cfg.points {
            let base = format!("a{alpha}_r{rho}/x{x}");
            let sim = cfg.sim;
            let idb = base.clone();
            let listing_id = idb.clone();
            checks.push((listing_id, Box::new(move || {
                let xp = match pt(x) {
                    Ok(v) => v,
                    Err(e) => return vec![failed_row(&format!("exit/{idb}"), &p, x, &e)],
                };
                let sim = SimConfig {
                    rng: sim.rng.substream(stream_of(&format!("exit/{idb}"))),
                    ..sim
                };
                let pairs = match pathsim::exit_outcome_pairs(&p, xp, &k_set, &sim) {
                    Ok(v) => v,
                    Err(e) => return vec![failed_row(&format!("exit/{idb}"), &p, x, &e)],
                };
                let fine: Vec<ExitOutcome> = pairs.iter().map(|(f, _)| *f).collect();
                let coarse: Vec<ExitOutcome> = pairs.iter().map(|(_, c)| *c).collect();
                let mut rows = Vec::new();
                for (kind, kname) in [
                    (HarmonicKind::V1, "v1"),
                    (HarmonicKind::VMinus1, "vm1"),
                    (HarmonicKind::V, "v"),
                ] {
                    let idf = format!("exit_{kname}/{idb}");
                    let est_f = pathsim::weight_exit_outcomes(&p, xp, kind, &fine);
                    let est_c = pathsim::weight_exit_outcomes(&p, xp, kind, &coarse);
                    match (est_f, est_c) {
                        (Ok(f), Ok(c)) => {
                            rows.push(Row {
                                check_id: idf.clone(),
                                alpha,
                                rho,
                                x,
                                eps_or_delta: sim.dt / 2.0,
                                expected: 1.0,
                                observed: f.value,
                                std_error: f.std_error,
                                tolerance: tol.mc_sigma * f.std_error,
                                passed: (f.value - 1.0).abs() <= tol.mc_sigma * f.std_error,
                                reason: String::new(),
                            });
                            let drift = (f.value - c.value).abs() / f.value.abs().max(1e-12);
                            rows.push(Row {
                                check_id: format!("exit_drift_{kname}/{idb}"),
                                alpha,
                                rho,
                                x,
                                eps_or_delta: sim.dt,
                                expected: 0.0,
                                observed: drift,
                                std_error: 0.0,
                                tolerance: tol.dt_drift,
                                passed: drift < tol.dt_drift,
                                reason: "coarse view of the same trajectories".into(),
                            });
                        }
                        (Err(e), _) | (_, Err(e)) => rows.push(failed_row(&idf, &p, x, &e)),
                    }
                }
                // negative control: a constant weight is not harmonic for
                // the recurrent regime, where killing before exit has mass
                if p.alpha() >= 1.0 {
                    let vals: Vec<f64> = fine
                        .iter()
                        .map(|o| match o {
                            ExitOutcome::Exited(_) => 1.0,
                            _ => 0.0,
                        })
                        .collect();
                    let est = EstimateWithCI::from_values(&vals);
                    rows.push(Row {
                        check_id: format!("exit_negctrl/{idb}"),
                        alpha,
                        rho,
                        x,
                        eps_or_delta: f64::NAN,
                        expected: 1.0,
                        observed: est.value,
                        std_error: est.std_error,
                        tolerance: tol.mc_sigma * est.std_error,
                        passed: est.value + tol.mc_sigma * est.std_error < 1.0,
                        reason: "control: must fall strictly below one".into(),
                    });
                }
                rows
            })));

            // excessiveness at fixed times and (alpha > 1) exact invariance
            for t in [0.1, 0.5] {
                let id = format!("excess_v/{base}/t{t}");
                let sim = cfg.sim;
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let sim = SimConfig {
                        rng: sim.rng.substream(stream_of(&id)),
                        ..sim
                    };
                    match pathsim::weighted_time_t_estimator(&p, xp, t, HarmonicKind::V, |_| 1.0, &sim)
                    {
                        Ok(est) => vec![Row {
                            check_id: id.clone(),
                            alpha,
                            rho,
                            x,
                            eps_or_delta: t,
                            expected: 1.0,
                            observed: est.value,
                            std_error: est.std_error,
                            tolerance: tol.mc_sigma * est.std_error,
                            passed: est.value <= 1.0 + tol.mc_sigma * est.std_error,
                            reason: "one-sided excessiveness bound".into(),
                        }],
                        Err(e) => vec![failed_row(&id, &p, x, &e)],
                    }
                })));
            }
            if p.alpha() > 1.0 {
                let id = format!("invariance_h/{base}/t0.25");
                let sim = cfg.sim;
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    let xp = match pt(x) {
                        Ok(v) => v,
                        Err(e) => return vec![failed_row(&id, &p, x, &e)],
                    };
                    let sim = SimConfig {
                        rng: sim.rng.substream(stream_of(&id)),
                        ..sim
                    };
                    match pathsim::weighted_time_t_estimator(
                        &p,
                        xp,
                        0.25,
                        HarmonicKind::H,
                        |_| 1.0,
                        &sim,
                    ) {
                        Ok(est) => vec![Row {
                            check_id: id.clone(),
                            alpha,
                            rho,
                            x,
                            eps_or_delta: 0.25,
                            expected: 1.0,
                            observed: est.value,
                            std_error: est.std_error,
                            tolerance: tol.mc_sigma * est.std_error + 0.01,
                            passed: (est.value - 1.0).abs()
                                <= tol.mc_sigma * est.std_error + 0.01,
                            reason: "invariant weight; 1% grid allowance".into(),
                        }],
                        Err(e) => vec![failed_row(&id, &p, x, &e)],
                    }
                })));
            }
        }
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// absorption suite
// ---------------------------------------------------------------------------

struct ChainStats {
    killed_frac: f64,
    killed_frac_quarter_horizon: f64,
    top_window_frac: f64,
    top_side_frac: f64,
    negative_shell_visits: usize,
    n: usize,
}

fn chain_stats(
    p: &StableParams,
    kind: HarmonicKind,
    starts: &[f64],
    sim: &SimConfig,
) -> Result<ChainStats> {
    let sampler = DoobSampler::new(p, kind, sim)?;
    let n = sim.n_paths;
    let quarter = sim.horizon / 4.0;
    let per: Vec<(bool, f64, f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0 = starts[i % starts.len()];
            let r = sampler
                .simulate(ExteriorPoint::new(x0).unwrap(), sim.rng.substream(i as u64))
                .unwrap();
            let last = *r.positions.last().unwrap();
            let t_end = *r.times.last().unwrap();
            let tail_start = r.positions.len().saturating_sub(r.positions.len() / 10 + 1);
            let shell = r.positions[tail_start..]
                .iter()
                .any(|&y| -1.01 < y && y < -1.0);
            (r.killed, t_end, last, shell)
        })
        .collect();
    let killed: Vec<&(bool, f64, f64, bool)> = per.iter().filter(|t| t.0).collect();
    let killed_frac = killed.len() as f64 / n as f64;
    let killed_quarter = per.iter().filter(|t| t.0 && t.1 <= quarter).count() as f64 / n as f64;
    let top_window = killed
        .iter()
        .filter(|t| t.2 > 1.0 && t.2 < 1.1)
        .count() as f64
        / killed.len().max(1) as f64;
    let top_side = killed.iter().filter(|t| t.2 > 0.0).count() as f64 / killed.len().max(1) as f64;
    let shell_visits = per.iter().filter(|t| t.3).count();
    Ok(ChainStats {
        killed_frac,
        killed_frac_quarter_horizon: killed_quarter,
        top_window_frac: top_window,
        top_side_frac: top_side,
        negative_shell_visits: shell_visits,
        n,
    })
}

pub fn run_absorption_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    Ok(execute(build_absorption(cfg)?))
}

fn build_absorption(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let tol = cfg.tol;
    let mut checks: Vec<Check> = Vec::new();

    for &(alpha, rho) in &cfg.params {
        let p = validate_params(alpha, rho)?;
        let x = *cfg
            .points
            .first()
            .ok_or_else(|| Error::Config("absorption suite needs a start point".into()))?;
        let base = format!("a{alpha}_r{rho}/x{x}");
        let sim = cfg.sim;

        // refinement ladder: the configured cutoff and one coarser level
        let cutoffs = [sim.boundary_cutoff * 10.0, sim.boundary_cutoff];
        let idb = base.clone();
        let listing_id = idb.clone();
        checks.push((listing_id, Box::new(move || {
            let mut rows = Vec::new();
            let mut fracs = Vec::new();
            for (lvl, &cut) in cutoffs.iter().enumerate() {
                let id = format!("doob_v1/{idb}/cut{cut:.0e}");
                let sim_l = SimConfig {
                    boundary_cutoff: cut,
                    rng: sim.rng.substream(stream_of(&id)),
                    ..sim
                };
                let stats = match chain_stats(&p, HarmonicKind::V1, &[x], &sim_l) {
                    Ok(s) => s,
                    Err(e) => {
                        rows.push(failed_row(&id, &p, x, &e));
                        continue;
                    }
                };
                let se_bin = |f: f64| (f * (1.0 - f) / stats.n as f64).sqrt();
                if lvl + 1 == cutoffs.len() {
                    // killed-fraction gate at the stated threshold; the true
                    // absorption time has a heavy excursion tail, so this
                    // row documents the measured fraction honestly
                    rows.push(Row {
                        check_id: format!("doob_killed/{idb}"),
                        alpha,
                        rho,
                        x,
                        eps_or_delta: cut,
                        expected: 0.99,
                        observed: stats.killed_frac,
                        std_error: se_bin(stats.killed_frac),
                        tolerance: 0.0,
                        passed: stats.killed_frac >= 0.99,
                        reason: "threshold check: killed fraction within the horizon".into(),
                    });
                    rows.push(Row {
                        check_id: format!("doob_horizon_trend/{idb}"),
                        alpha,
                        rho,
                        x,
                        eps_or_delta: cut,
                        expected: stats.killed_frac,
                        observed: stats.killed_frac_quarter_horizon,
                        std_error: se_bin(stats.killed_frac),
                        tolerance: 0.0,
                        passed: stats.killed_frac_quarter_horizon < stats.killed_frac,
                        reason: "killed fraction grows with the horizon (finite lifetime)"
                            .into(),
                    });
                    rows.push(Row {
                        check_id: format!("doob_one_sided/{idb}"),
                        alpha,
                        rho,
                        x,
                        eps_or_delta: cut,
                        expected: 0.0,
                        observed: stats.negative_shell_visits as f64,
                        std_error: 0.0,
                        tolerance: 0.0,
                        passed: stats.negative_shell_visits == 0,
                        reason: "no late visits to the lower boundary shell under v1".into(),
                    });
                }
                rows.push(Row {
                    check_id: format!("doob_top_window/{idb}/cut{cut:.0e}"),
                    alpha,
                    rho,
                    x,
                    eps_or_delta: cut,
                    expected: 0.95,
                    observed: stats.top_window_frac,
                    std_error: se_bin(stats.top_window_frac),
                    tolerance: 0.0,
                    passed: stats.top_window_frac >= 0.95,
                    reason: "pre-killing position in (1, 1.1)".into(),
                });
                fracs.push(stats.top_window_frac);
            }
            if fracs.len() == 2 {
                rows.push(Row {
                    check_id: format!("doob_refine_trend/{idb}"),
                    alpha,
                    rho,
                    x,
                    eps_or_delta: sim.boundary_cutoff,
                    expected: fracs[0],
                    observed: fracs[1],
                    std_error: 0.0,
                    tolerance: 0.01,
                    passed: fracs[1] >= fracs[0] - 0.01,
                    reason: "in-window fraction non-decreasing under refinement".into(),
                });
            }
            rows
        })));

        // two-sided absorption under v: side split over symmetrized starts
        if rho == 0.5 {
            let id = format!("doob_v_split/{base}");
            let listing_id = id.clone();
            checks.push((listing_id, Box::new(move || {
                let sim_l = SimConfig {
                    rng: sim.rng.substream(stream_of(&id)),
                    n_paths: sim.n_paths,
                    ..sim
                };
                match chain_stats(&p, HarmonicKind::V, &[x, -x], &sim_l) {
                    Ok(stats) => {
                        let se = 0.5 / (stats.n as f64).sqrt();
                        vec![Row {
                            check_id: id.clone(),
                            alpha,
                            rho,
                            x,
                            eps_or_delta: f64::NAN,
                            expected: 0.5,
                            observed: stats.top_side_frac,
                            std_error: se,
                            tolerance: tol.mc_sigma * se,
                            passed: (stats.top_side_frac - 0.5).abs() <= tol.mc_sigma * se,
                            reason: "absorption side split over starts {x, -x}".into(),
                        }]
                    }
                    Err(e) => vec![failed_row(&id, &p, x, &e)],
                }
            })));
        }
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// conditioning suite
// ---------------------------------------------------------------------------

struct PathProbe {
    pos_t: f64,
    alive_delta: bool,
    best: f64,
    weight_anchor: f64,
}

/// Simulates the closest-reach ensemble once; every window of the ladder is
/// then evaluated on the same paths (the acceptance windows nest). A path
/// whose running minimum dips below 1 can never be accepted and stops as
/// soon as its time-t state is known.
fn conditioning_ensemble(
    p: &StableParams,
    x: f64,
    t: f64,
    delta: f64,
    sim: &SimConfig,
) -> Vec<PathProbe> {
    let sampler = IncrementSampler::new(p, sim.dt).unwrap();
    let t_steps = (t / sim.dt).round().max(1.0) as usize;
    let r_delta = 1.0 + delta;
    let min_steps = (sim.horizon / sim.dt) as usize;
    let max_steps = 4 * min_steps;
    (0..sim.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = sim.rng.substream(i as u64).rng();
            let mut pos = x;
            let mut alive = true;
            let mut pos_t = f64::NAN;
            let mut best = x;
            let mut best_step = 0usize;
            let mut step = 0usize;
            loop {
                step += 1;
                pos += sampler.sample(&mut rng);
                if step <= t_steps && pos.abs() <= r_delta {
                    alive = false;
                }
                if step == t_steps {
                    pos_t = pos;
                }
                if pos.abs() < best.abs() {
                    best = pos;
                    best_step = step;
                }
                // only |best| < 1 is absorbing for the rejection decision;
                // a negative-side minimum can still be displaced by a later
                // smaller positive one
                let rejected = best.abs() < 1.0;
                let stable = step >= min_steps && best_step * 2 <= step;
                if step >= t_steps && (rejected || stable || step >= max_steps) {
                    return PathProbe {
                        pos_t,
                        alive_delta: alive,
                        best,
                        weight_anchor: pos,
                    };
                }
            }
        })
        .collect()
}

pub fn run_conditioning_suite(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    Ok(execute(build_conditioning(cfg)?))
}

fn build_conditioning(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let tol = cfg.tol;
    let delta = *cfg.delta_ladder.first().unwrap_or(&0.1);
    let t = 0.5;
    let event_level = 2.0;
    let mut checks: Vec<Check> = Vec::new();

    for &(alpha, rho) in &cfg.params {
        let p = validate_params(alpha, rho)?;
        let x = if p.alpha() < 1.0 {
            *cfg.points.first().unwrap_or(&3.0)
        } else {
            *cfg.points.get(1).unwrap_or(&2.0)
        };
        let epss = {
            let mut e = cfg.eps_ladder.clone();
            e.sort_by(|a, b| b.partial_cmp(a).unwrap());
            e
        };
        let sim = cfg.sim;
        let base = format!("a{alpha}_r{rho}/x{x}");

        if p.alpha() < 1.0 {
            let id = format!("thm23/{base}");
            let epss = epss.clone();
            let listing_id = id.clone();
            checks.push((listing_id, Box::new(move || {
                conditioning_ladder_rows(
                    &id, &p, x, t, delta, event_level, &epss, true, None, &sim, &tol,
                )
            })));
        } else {
            let id = format!("thm24/{base}");
            let epss_l = epss.clone();
            let listing_id = id.clone();
            checks.push((listing_id, Box::new(move || {
                conditioning_ladder_rows(
                    &id, &p, x, t, delta, event_level, &epss_l, false, None, &sim, &tol,
                )
            })));
            if p.alpha() > 1.0 {
                let id = format!("thm26/{base}");
                let epss_l = epss.clone();
                let listing_id = id.clone();
                checks.push((listing_id, Box::new(move || {
                    conditioning_ladder_rows(
                        &id,
                        &p,
                        x,
                        t,
                        delta,
                        event_level,
                        &epss_l,
                        true,
                        Some(HarmonicKind::V1),
                        &sim,
                        &tol,
                    )
                })));
            }
        }
    }
    Ok(checks)
}

#[allow(clippy::too_many_arguments)]
fn conditioning_ladder_rows(
    id_base: &str,
    p: &StableParams,
    x: f64,
    t: f64,
    delta: f64,
    event_level: f64,
    epss: &[f64],
    closest_reach: bool,
    avoid_zero: Option<HarmonicKind>,
    sim: &SimConfig,
    tol: &Tolerances,
) -> Vec<Row> {
    let xp = match pt(x) {
        Ok(v) => v,
        Err(e) => return vec![failed_row(id_base, p, x, &e)],
    };
    // h-transform prediction: the weighted estimator restricted to survival
    // of the delta-interval
    let sim_w = SimConfig {
        rng: sim.rng.substream(stream_of(&format!("{id_base}/weighted"))),
        ..*sim
    };
    let target = match pathsim::weighted_time_t_with_radius(
        p,
        xp,
        t,
        HarmonicKind::V1,
        1.0 + delta,
        |y| if y > event_level { 1.0 } else { 0.0 },
        &sim_w,
    ) {
        Ok(est) => est,
        Err(e) => return vec![failed_row(id_base, p, x, &e)],
    };

    let sim_r = SimConfig {
        rng: sim.rng.substream(stream_of(&format!("{id_base}/rejection"))),
        ..*sim
    };
    // for the entrance conditioning the ensemble needs each path's entry
    // position into every ladder radius; rebuild per eps (the recurrent
    // paths are short)
    let mut rows = Vec::new();
    let mut prev_gap: Option<f64> = None;
    let probes = if closest_reach {
        Some(conditioning_ensemble(p, x, t, delta, &sim_r))
    } else {
        None
    };
    for (k, &eps) in epss.iter().enumerate() {
        let id = format!("{id_base}/e{eps}");
        let (acc_count, acc_sum, acc_event) = if let Some(probes) = &probes {
            let mut count = 0usize;
            let mut wsum = 0.0;
            let mut esum = 0.0;
            for pr in probes {
                let accepted = pr.best > 1.0 && pr.best < 1.0 + eps;
                if !accepted {
                    continue;
                }
                count += 1;
                let w = match avoid_zero {
                    Some(_) => {
                        let e_anchor = harmonic::avoid_zero_e(p, pr.weight_anchor)
                            .unwrap_or(0.0);
                        let e_x = harmonic::avoid_zero_e(p, x).unwrap_or(1.0);
                        e_anchor / e_x
                    }
                    None => 1.0,
                };
                wsum += w;
                if pr.alive_delta && pr.pos_t > event_level {
                    esum += w;
                }
            }
            (count, wsum, esum)
        } else {
            // entrance conditioning: rerun the walk with this radius
            let sampler = IncrementSampler::new(p, sim.dt).unwrap();
            let t_steps = (t / sim.dt).round().max(1.0) as usize;
            let r_delta = 1.0 + delta;
            let r_eps = 1.0 + eps;
            let max_steps = (4.0 * sim.horizon / sim.dt) as usize;
            let sim_e = SimConfig {
                rng: sim_r.rng.substream(stream_of(&id)),
                ..sim_r
            };
            let pairs: Vec<(f64, f64)> = (0..sim.n_paths)
                .into_par_iter()
                .map(|i| {
                    let mut rng = sim_e.rng.substream(i as u64).rng();
                    let mut pos = x;
                    let mut alive = true;
                    let mut pos_t = f64::NAN;
                    let mut entry = f64::NAN;
                    let mut step = 0usize;
                    loop {
                        step += 1;
                        pos += sampler.sample(&mut rng);
                        if step <= t_steps && pos.abs() <= r_delta {
                            alive = false;
                        }
                        if step == t_steps {
                            pos_t = pos;
                        }
                        if entry.is_nan() && pos.abs() < r_eps {
                            entry = pos;
                        }
                        if (!entry.is_nan() && step >= t_steps) || step >= max_steps {
                            break;
                        }
                    }
                    if entry > 1.0 && entry < r_eps {
                        (1.0, if alive && pos_t > event_level { 1.0 } else { 0.0 })
                    } else {
                        (0.0, 0.0)
                    }
                })
                .collect();
            let c: f64 = pairs.iter().map(|v| v.0).sum();
            (c as usize, c, pairs.iter().map(|v| v.1).sum())
        };

        if acc_count < 100 {
            rows.push(failed_row(
                &id,
                p,
                x,
                &Error::InsufficientAcceptance {
                    accepted: acc_count,
                    floor: 100,
                },
            ));
            continue;
        }
        let estimate = acc_event / acc_sum;
        let se = (estimate * (1.0 - estimate) / acc_count as f64).sqrt();
        let gap = (estimate - target.value).abs();
        let extra = if avoid_zero.is_some() { 2.0 } else { 1.0 };
        let band = tol.mc_sigma * (se * se + target.std_error * target.std_error).sqrt()
            + extra * tol.eps_budget * eps;
        let last = k + 1 == epss.len();
        let trend_ok = prev_gap.map_or(true, |pg| gap <= pg + 2.0 * se);
        rows.push(Row {
            check_id: id,
            alpha: p.alpha(),
            rho: p.rho(),
            x,
            eps_or_delta: eps,
            expected: target.value,
            observed: estimate,
            std_error: se,
            tolerance: band,
            passed: if last { gap <= band } else { gap <= band && trend_ok },
            reason: if avoid_zero.is_some() {
                "point-avoiding weights; approximate anchor at path end".into()
            } else {
                String::new()
            },
        });
        prev_gap = Some(gap);
    }
    // explicit end-to-end trend row
    if epss.len() >= 2 {
        if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
            if first.passed || last.passed {
                let improved = last.observed.is_finite()
                    && first.observed.is_finite()
                    && ((last.observed - last.expected).abs()
                        <= (first.observed - first.expected).abs()
                            + 2.0 * (last.std_error + first.std_error));
                rows.push(Row {
                    check_id: format!("{id_base}/trend"),
                    alpha: p.alpha(),
                    rho: p.rho(),
                    x,
                    eps_or_delta: f64::NAN,
                    expected: 0.0,
                    observed: f64::NAN,
                    std_error: 0.0,
                    tolerance: 0.0,
                    passed: improved,
                    reason: "gap at the smallest eps within noise of the largest".into(),
                });
            }
        }
    }
    rows
}

pub fn summary(results: &[(String, Vec<CheckResult>)]) -> String {
    let mut out = String::new();
    let mut all_pass = true;
    for (name, rows) in results {
        out.push_str(&report::summary_line(name, rows));
        out.push('\n');
        for r in rows.iter().filter(|r| !r.passed) {
            out.push_str(&format!(
                "  FAIL {}: observed {} expected {} (tol {}) {}\n",
                r.check_id, r.observed, r.expected, r.tolerance, r.reason
            ));
            all_pass = false;
        }
    }
    out.push_str(if all_pass { "ALL PASS\n" } else { "FAILURES PRESENT\n" });
    out
}

/// Enumerates the check ids the configuration would run. Ladder checks are
/// listed under their base id.
pub fn list_check_ids(cfg: &SuiteConfig) -> Vec<String> {
    let built = match cfg.suite {
        Suite::Identity => build_identity(cfg),
        Suite::Asymptotics => build_asymptotics(cfg),
        Suite::HarmonicityMc => build_harmonicity_mc(cfg),
        Suite::Absorption => build_absorption(cfg),
        Suite::Conditioning => build_conditioning(cfg),
    };
    built
        .map(|checks| checks.into_iter().map(|(id, _)| id).collect())
        .unwrap_or_default()
}
