//! From matched phases to an executable plan: the integer iteration count,
//! the certainty condition, the final-state phase, and the phase
//! adjustment that makes the real-valued iteration function hit an integer
//! exactly.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, kernel_angle_w, kernel_power_closed, kernel_power_iterative};
use crate::matching::{
    self, matched_sample, matching_residual, MatchingInputs, MATCHED_TOLERANCE,
};
use crate::su2::{wrap_angle, PhasePair, TAU};

/// |cos(mw + arcsin S)| above this and the plan is not a certainty plan;
/// final-phase prediction is refused.
pub const CERTAINTY_TOLERANCE: f64 = 1e-6;

/// theta-grid resolution for bracketing roots of f - m and for locating
/// the curve minimum.
const GRID_STEP: f64 = 1e-3;

/// Distance kept from the excluded endpoints 0 and 2pi when scanning.
const THETA_MARGIN: f64 = 1e-4;

/// A fully specified certainty search: phases, iteration count, predicted
/// final phase of the marked amplitude, and the f-value behind the count.
///
/// `delta` is the certainty prediction when `exact` holds; otherwise it is
/// the phase of the marked amplitude after `m` iterations (still
/// well-defined, just not a pure-state phase).
#[derive(Debug, Clone, Copy)]
pub struct SearchPlan {
    pub phases: PhasePair,
    pub m: u64,
    pub delta: f64,
    pub f_value: f64,
    pub predicted_success: f64,
    pub exact: bool,
}

/// How to choose theta when planning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Keep this theta, match phi to it, round f up to m.
    FixedTheta(f64),
    /// Adjust both phases so f lands exactly on the minimal integer m.
    Optimal,
}

/// Numbers behind an optimal plan, for reporting: the closed-form count
/// estimate next to the oracle-backed one, and the curve minimum they both
/// come from.
#[derive(Debug, Clone)]
pub struct OptimalDiagnostics {
    pub closed_form_m: u64,
    pub oracle_m: u64,
    pub min_f: f64,
    pub theta_at_min: f64,
    pub solutions: Vec<PhasePair>,
}

/// Ceiling that treats values within 1e-9 of an integer as that integer.
/// Exact boundaries (f an integer) arrive smeared by floating point; a
/// plain ceil would bump their fp image up a whole count.
fn snap_ceiling(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// Smallest integer >= f, with exact integers mapping to themselves
/// (certainty is satisfiable exactly when f is an integer, so a strict
/// "greater than" would discard exact solutions).
pub fn iteration_count(f: f64) -> Result<u64> {
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::domain(format!(
            "iteration count needs finite f > 0, got {f}"
        )));
    }
    if f > 1e12 {
        return Err(Error::domain(format!("f = {f} beyond any sane plan size")));
    }
    Ok(snap_ceiling(f).max(1))
}

fn require_matched(phases: &PhasePair, inputs: &MatchingInputs) -> Result<()> {
    let residual = matching_residual(phases, inputs);
    if residual.abs() > MATCHED_TOLERANCE {
        return Err(Error::NotMatched {
            residual,
            tolerance: MATCHED_TOLERANCE,
        });
    }
    Ok(())
}

/// cos(mw + arcsin(sin(beta0) sin(delta))): zero exactly when m iterations
/// leave nothing on |II>.
pub fn certainty_residual(m: u64, phases: &PhasePair, inputs: &MatchingInputs) -> Result<f64> {
    require_matched(phases, inputs)?;
    let w = kernel_angle_w(phases, inputs.geometry().beta());
    let s = inputs.latitude_sine(phases.phi());
    Ok((m as f64 * w + s.asin()).cos())
}

/// Phase delta of the final state G^m|s> = e^{i delta}|tau> for a
/// certainty plan, wrapped to [0, 2pi). Includes the initial state's
/// global phase.
///
/// delta = m(pi + (phi+theta)/2) + Omega + k pi + global_phase, with
/// Omega = atan2(cos(delta_az), sin(delta_az)) and the winding index
/// k = round((mw + arcsin S - pi/2)/pi). The k term covers certainty
/// configurations that overshoot by whole half-turns; plans produced by
/// adjust_phases always have k = 0.
pub fn final_phase(m: u64, phases: &PhasePair, inputs: &MatchingInputs) -> Result<f64> {
    let residual = certainty_residual(m, phases, inputs)?;
    if residual.abs() > CERTAINTY_TOLERANCE {
        return Err(Error::NotCertain { m, residual });
    }
    let w = kernel_angle_w(phases, inputs.geometry().beta());
    let s = inputs.latitude_sine(phases.phi());
    let delta_az = inputs.delta(phases.phi());
    let omega = delta_az.cos().atan2(delta_az.sin());
    let k = ((m as f64 * w + s.asin() - FRAC_PI_2) / PI).round();
    let sigma = (phases.phi() + phases.theta()) / 2.0;
    Ok(wrap_angle(
        m as f64 * (PI + sigma) + omega + k * PI + inputs.initial_state().global_phase(),
        0.0,
    ))
}

/// Closed-form estimate of the minimal iteration count:
/// ceil((pi/2 - arcsin(sin(beta0) cos(alpha+u))) / (2 beta)).
///
/// 2 beta bounds the per-iteration rotation w from above, so this is the
/// count the most favorable matched curve would need. Can be 0 when the
/// initial state is already the marked state.
pub fn optimal_iterations(inputs: &MatchingInputs) -> u64 {
    let numerator =
        FRAC_PI_2 - (inputs.initial_state().beta0().sin() * inputs.alpha_plus_u().cos()).asin();
    snap_ceiling(numerator / (2.0 * inputs.geometry().beta()))
}

/// Closed-form optimal plan for a self-search (beta0 = beta, alpha+u = 0):
/// m_op = ceil((pi/2 - beta)/(2 beta)) and the common phase
/// phi_op = theta_op = 2 arcsin(sin(pi/(4 m_op + 2)) / sin(beta)).
pub fn closed_form_optimal(beta: f64) -> Result<(u64, f64)> {
    if !(beta.is_finite() && beta > 0.0 && beta < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "beta must lie in the open interval (0, pi/2), got {beta}"
        )));
    }
    let m_op = snap_ceiling((FRAC_PI_2 - beta) / (2.0 * beta)).max(1);
    let ratio = (PI / (4.0 * m_op as f64 + 2.0)).sin() / beta.sin();
    if ratio > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "arcsin argument {ratio} > 1 in the closed-form optimum"
        )));
    }
    Ok((m_op, 2.0 * ratio.clamp(-1.0, 1.0).asin()))
}

/// f on the matched curve, None where the curve is not evaluable.
fn f_on_curve(theta: f64, inputs: &MatchingInputs) -> Option<f64> {
    matched_sample(theta, inputs).ok().map(|p| p.f)
}

/// Grid of thetas walking outward from pi: descending on the left side,
/// ascending on the right. Both start at pi itself.
fn side_grid(left: bool) -> impl Iterator<Item = f64> {
    (0..).map_while(move |k| {
        let theta = if left {
            PI - k as f64 * GRID_STEP
        } else {
            PI + k as f64 * GRID_STEP
        };
        (THETA_MARGIN..=TAU - THETA_MARGIN)
            .contains(&theta)
            .then_some(theta)
    })
}

struct CurveScan {
    /// (theta, f) at every evaluable grid point, walking outward from pi.
    left: Vec<(f64, f64)>,
    right: Vec<(f64, f64)>,
    min_f: f64,
    theta_at_min: f64,
}

fn scan_curve(inputs: &MatchingInputs) -> Result<CurveScan> {
    // Uniform theta walk plus phi-uniform points mapped backwards through
    // the curve. Near beta0 = pi/2 the curve compresses all f variation
    // into theta slivers of width ~cos(beta0) at the curve ends, invisible
    // to any fixed theta stride; the same slivers are evenly spread in phi.
    let mut left_thetas: Vec<f64> = side_grid(true).collect();
    let mut right_thetas: Vec<f64> = side_grid(false).collect();
    let mut k = 1;
    while (k as f64) * GRID_STEP < TAU {
        let phi = k as f64 * GRID_STEP;
        if let Some(theta) = matching::theta_for_phi(phi, inputs) {
            if theta < PI {
                left_thetas.push(theta);
            } else {
                right_thetas.push(theta);
            }
        }
        k += 1;
    }
    // outward from pi on both sides
    left_thetas.sort_by(|a, b| b.total_cmp(a));
    right_thetas.sort_by(|a, b| a.total_cmp(b));
    left_thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    right_thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut min_f = f64::INFINITY;
    let mut theta_at_min = f64::NAN;
    let mut evaluate = |thetas: Vec<f64>| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for theta in thetas {
            if let Some(f) = f_on_curve(theta, inputs) {
                if f < min_f {
                    min_f = f;
                    theta_at_min = theta;
                }
                out.push((theta, f));
            }
        }
        out
    };
    let left = evaluate(left_thetas);
    let right = evaluate(right_thetas);
    if left.is_empty() && right.is_empty() {
        return Err(Error::domain(
            "matched curve is nowhere evaluable on the theta grid".to_string(),
        ));
    }
    Ok(CurveScan {
        left,
        right,
        min_f,
        theta_at_min,
    })
}

/// Bisects h(theta) = f(theta) - m inside a bracket with a sign change,
/// then polishes with secant steps. Converges on |h| <= 1e-10; the secant
/// tail matters on steep crossings (slope ~1/cos(beta0) near the pole)
/// where the bisection width floor of 1e-14 alone stops short.
fn bisect_root(
    mut lo: f64,
    mut h_lo: f64,
    mut hi: f64,
    m: u64,
    inputs: &MatchingInputs,
) -> Result<f64> {
    let target = m as f64;
    let mut mid = lo;
    let mut h_mid = h_lo;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        h_mid = match f_on_curve(mid, inputs) {
            Some(f) => f - target,
            None => {
                return Err(Error::domain(format!(
                    "matched curve lost inside bracket at theta = {mid}"
                )))
            }
        };
        if h_mid.abs() <= 1e-10 || (hi - lo).abs() <= 1e-14 {
            break;
        }
        if (h_mid > 0.0) == (h_lo > 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    let (mut best_t, mut best_h) = (mid, h_mid);
    let (mut t0, mut h0) = (lo, h_lo);
    let (mut t1, mut h1) = (mid, h_mid);
    for _ in 0..30 {
        if h1.abs() <= 1e-12 || h1 == h0 {
            break;
        }
        let t2 = t1 - h1 * (t1 - t0) / (h1 - h0);
        if !t2.is_finite() {
            break;
        }
        let h2 = match f_on_curve(t2, inputs) {
            Some(f) => f - target,
            None => break,
        };
        (t0, h0) = (t1, h1);
        (t1, h1) = (t2, h2);
        if h1.abs() < best_h.abs() {
            (best_t, best_h) = (t1, h1);
        }
    }
    Ok(best_t)
}

/// All sign-change brackets along one side, nearest pi first.
fn side_brackets(side: &[(f64, f64)], m: u64) -> Vec<(f64, f64, f64)> {
    let target = m as f64;
    side.windows(2)
        .filter_map(|pair| {
            let (t0, f0) = pair[0];
            let (t1, f1) = pair[1];
            let (h0, h1) = (f0 - target, f1 - target);
            (h0 == 0.0 || (h0 > 0.0) != (h1 > 0.0)).then_some((t0, h0, t1))
        })
        .collect()
}

/// Solves f(matched_phi(theta), theta) = m for theta, returning the (up to
/// two) solutions nearest pi with their matched phis, sorted by theta.
///
/// When f already equals m at theta = pi within 1e-9 the two branches
/// coincide and a single pair is returned. Every returned pair satisfies
/// |matching residual| < 1e-10 and |f - m| < 1e-9.
pub fn adjust_phases(m: u64, inputs: &MatchingInputs) -> Result<Vec<PhasePair>> {
    let scan = scan_curve(inputs)?;
    if let Some(f_pi) = f_on_curve(PI, inputs) {
        if (f_pi - m as f64).abs() < 1e-9 {
            let pair = finished_pair(PI, m, inputs)?;
            return Ok(vec![pair]);
        }
    }

    let left = side_brackets(&scan.left, m);
    let right = side_brackets(&scan.right, m);
    let mut chosen: Vec<(f64, f64, f64)> = Vec::new();
    match (left.first(), right.first()) {
        (Some(&a), Some(&b)) => {
            chosen.push(a);
            chosen.push(b);
        }
        // one side never crosses (off-center minimum): take the two
        // crossings nearest pi on the crossing side
        (Some(_), None) => chosen.extend(left.into_iter().take(2)),
        (None, Some(_)) => chosen.extend(right.into_iter().take(2)),
        (None, None) => {
            return Err(Error::NoSolution {
                m,
                min_f: scan.min_f,
            })
        }
    }

    let mut out = Vec::with_capacity(chosen.len());
    for (lo, h_lo, hi) in chosen {
        let root = bisect_root(lo, h_lo, hi, m, inputs)?;
        out.push(finished_pair(root, m, inputs)?);
    }
    out.sort_by(|a, b| a.theta().total_cmp(&b.theta()));
    out.dedup_by(|a, b| (a.theta() - b.theta()).abs() < 1e-9);
    Ok(out)
}

/// Builds the matched pair at a solved theta and enforces the solver
/// postconditions. Failing them means the curve is too ill-conditioned in
/// 64-bit arithmetic (w below ~1e-3), which is reported, not papered over.
fn finished_pair(theta: f64, m: u64, inputs: &MatchingInputs) -> Result<PhasePair> {
    let point = matched_sample(theta, inputs)?;
    let pair = PhasePair::new(point.phi, theta)?;
    if point.residual.abs() >= 1e-10 || (point.f - m as f64).abs() >= 1e-9 {
        return Err(Error::domain(format!(
            "solution at theta = {theta} failed to polish: residual {:.3e}, |f - m| = {:.3e}",
            point.residual,
            (point.f - m as f64).abs()
        )));
    }
    Ok(pair)
}

/// Marked-state amplitude after m iterations, from the closed-form power.
fn marked_amplitude_closed(
    m: u64,
    phases: &PhasePair,
    inputs: &MatchingInputs,
) -> Result<num_complex::Complex64> {
    let power = kernel_power_closed(phases, inputs.geometry(), m)?;
    Ok(power.apply(&inputs.initial_state().state_vector()).a1)
}

fn build_plan(phases: PhasePair, m: u64, f: f64, inputs: &MatchingInputs) -> Result<SearchPlan> {
    let amp = marked_amplitude_closed(m, &phases, inputs)?;
    let exact = (f - m as f64).abs() < 1e-9;
    let delta = if exact {
        final_phase(m, &phases, inputs)?
    } else {
        wrap_angle(amp.arg(), 0.0)
    };
    Ok(SearchPlan {
        phases,
        m,
        delta,
        f_value: f,
        predicted_success: amp.norm_sqr().clamp(0.0, 1.0),
        exact,
    })
}

/// Plans a certainty search.
///
/// FixedTheta matches phi to the given theta and rounds f up (the plan may
/// be inexact, with predicted_success < 1). Optimal finds the minimal
/// integer m any matched curve point can realize and adjusts both phases
/// so f = m exactly.
pub fn plan_search(inputs: &MatchingInputs, strategy: Strategy) -> Result<SearchPlan> {
    match strategy {
        Strategy::FixedTheta(theta) => {
            let point = matched_sample(theta, inputs)?;
            let phases = PhasePair::new(point.phi, theta)?;
            let m = iteration_count(point.f)?;
            build_plan(phases, m, point.f, inputs)
        }
        Strategy::Optimal => plan_optimal_with_diagnostics(inputs).map(|(plan, _)| plan),
    }
}

/// Optimal planning, also reporting the closed-form count estimate next to
/// the oracle-backed count and the scanned curve minimum.
pub fn plan_optimal_with_diagnostics(
    inputs: &MatchingInputs,
) -> Result<(SearchPlan, OptimalDiagnostics)> {
    let scan = scan_curve(inputs)?;
    // ceil with a guard against the grid minimum sitting a hair above an
    // integer that the true minimum dips just below
    let m_start = ((scan.min_f - 1e-6).ceil() as i64).max(1) as u64;
    let mut last_err = None;
    for m in m_start..m_start + 3 {
        match adjust_phases(m, inputs) {
            Ok(solutions) => {
                let phases = solutions[0];
                let f = matched_sample(phases.theta(), inputs)?.f;
                let plan = build_plan(phases, m, f, inputs)?;
                let diagnostics = OptimalDiagnostics {
                    closed_form_m: optimal_iterations(inputs),
                    oracle_m: m,
                    min_f: scan.min_f,
                    theta_at_min: scan.theta_at_min,
                    solutions,
                };
                return Ok((plan, diagnostics));
            }
            Err(e @ Error::NoSolution { .. }) => {
                // keep the first failure: it names the smallest integer
                // the curve minimum cannot reach
                last_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::domain("optimal planning failed without a NoSolution diagnosis".to_string())
    }))
}

/// Success probability of a plan under the brute-force iterated kernel,
/// never the closed form. The independent check exact plans must pass.
pub fn iterated_success(plan: &SearchPlan, inputs: &MatchingInputs) -> f64 {
    let g = build_kernel(&plan.phases, inputs.geometry());
    let power = kernel_power_iterative(&g, plan.m);
    power
        .apply(&inputs.initial_state().state_vector())
        .a1
        .norm_sqr()
}
