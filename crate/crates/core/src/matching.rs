//! The phase-matching condition: which deflection phase phi pairs with a
//! given rotation phase theta so that repeated iterations drive the initial
//! state exactly onto the marked state.
//!
//! Matching means the initial state lies on the great circle swept by the
//! kernel's rotation through the marked state. On the matched set the
//! number of iterations to certainty is the (real-valued) iteration
//! function f; certainty is reachable exactly when f crosses an integer.

use crate::error::{Error, Result};
use crate::kernel::{self, kernel_angle_w, DEGENERACY_THRESHOLD};
use crate::su2::{wrap_angle, InitialStateParams, PhasePair, SearchGeometry, TAU};
use std::f64::consts::FRAC_PI_2;

/// |residual| above this means the pair is not on the matched curve and
/// matched-only quantities (f, certainty planning) are refused.
pub const MATCHED_TOLERANCE: f64 = 1e-8;

/// Everything the matching condition depends on besides (phi, theta):
/// the overlap geometry and the initial state.
#[derive(Debug, Clone, Copy)]
pub struct MatchingInputs {
    geom: SearchGeometry,
    init: InitialStateParams,
}

impl MatchingInputs {
    pub fn new(geom: SearchGeometry, init: InitialStateParams) -> Self {
        MatchingInputs { geom, init }
    }

    pub fn geometry(&self) -> &SearchGeometry {
        &self.geom
    }

    pub fn initial_state(&self) -> &InitialStateParams {
        &self.init
    }

    /// alpha + u wrapped to [0, 2pi): the only combination in which the
    /// two azimuthal angles ever enter the matching analysis.
    pub fn alpha_plus_u(&self) -> f64 {
        wrap_angle(self.geom.alpha() + self.init.u(), 0.0)
    }

    /// delta = phi/2 - alpha - u, the azimuth of the initial state seen
    /// from the rotation axis. Deliberately unwrapped.
    pub fn delta(&self, phi: f64) -> f64 {
        phi / 2.0 - self.geom.alpha() - self.init.u()
    }

    /// sin(beta0) sin(delta): sine of the initial latitude above the
    /// rotation equator. Drives both f and the certainty condition.
    pub fn latitude_sine(&self, phi: f64) -> f64 {
        (self.init.beta0().sin() * self.delta(phi).sin()).clamp(-1.0, 1.0)
    }
}

/// Defect of the matching condition at (phi, theta); zero exactly on the
/// matched curve. In the notation of the kernel module this is
/// C cos(beta0) - B cos(delta) sin(beta0).
pub fn matching_residual(phases: &PhasePair, inputs: &MatchingInputs) -> f64 {
    let beta = inputs.geom.beta();
    let c = kernel::axis_offset(phases.phi(), phases.theta(), beta);
    let b = kernel::mixing_numerator(phases.theta(), beta);
    let delta = inputs.delta(phases.phi());
    c * inputs.init.beta0().cos() - b * delta.cos() * inputs.init.beta0().sin()
}

/// Numerator and denominator of tan(phi/2) on the matched curve. The
/// residual factors exactly as d sin(phi/2) - n cos(phi/2).
fn matched_tangent_parts(theta: f64, inputs: &MatchingInputs) -> (f64, f64) {
    let beta = inputs.geom.beta();
    let (sb0, cb0) = (inputs.init.beta0().sin(), inputs.init.beta0().cos());
    let (s2b, c2b) = (2.0 * beta).sin_cos();
    let (sau, cau) = inputs.alpha_plus_u().sin_cos();
    let (sh, ch) = (theta / 2.0).sin_cos();
    let n = sh * (c2b * cb0 + s2b * sb0 * cau);
    let d = ch * cb0 - sb0 * sh * s2b * sau;
    (n, d)
}

/// Inverse of the curve map: the theta whose matched phi equals `phi`,
/// reading the Moebius relation tan(phi/2) = n/d backwards. None when the
/// inverse lands on the excluded theta endpoints (including the whole
/// beta0 = pi/2 family, where theta drops out of the relation).
pub(crate) fn theta_for_phi(phi: f64, inputs: &MatchingInputs) -> Option<f64> {
    let beta = inputs.geom.beta();
    let (sb0, cb0) = (inputs.init.beta0().sin(), inputs.init.beta0().cos());
    let (s2b, c2b) = (2.0 * beta).sin_cos();
    let (sau, cau) = inputs.alpha_plus_u().sin_cos();
    let k = c2b * cb0 + s2b * sb0 * cau;
    let m = sb0 * s2b * sau;
    let (sh, ch) = (phi / 2.0).sin_cos();
    let (y, x) = (sh * cb0, ch * k + sh * m);
    if y == 0.0 && x == 0.0 {
        return None;
    }
    let theta = 2.0 * y.atan2(x);
    (theta > 0.0 && theta < TAU).then_some(theta)
}

/// The unique phi in (0, 2pi) matched to `theta`, when one exists.
///
/// Solves tan(phi/2) = n/d in closed form. When the numerator vanishes
/// identically the only candidate roots sit at the excluded endpoints;
/// the doubly degenerate case (residual identically zero in phi) returns
/// the canonical representative phi = pi.
pub fn matched_phi(theta: f64, inputs: &MatchingInputs) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0 && theta < TAU) {
        return Err(Error::domain(format!(
            "theta must lie in the open interval (0, 2pi), got {theta}"
        )));
    }
    let (n, d) = matched_tangent_parts(theta, inputs);
    let phi = wrap_angle(2.0 * n.atan2(d), 0.0);
    if phi > 0.0 && phi < TAU {
        return Ok(phi);
    }
    // No interior root. If the condition is vacuous (n = d = 0) every phi
    // is matched; the residual at pi decides which case we are in.
    let midpoint = PhasePair::new(std::f64::consts::PI, theta).expect("pi is in range");
    let residual = matching_residual(&midpoint, inputs);
    if residual.abs() <= 1e-10 {
        Ok(std::f64::consts::PI)
    } else {
        Err(Error::NoMatchedPhase { theta, residual })
    }
}

/// Matched phi for a real-positive marked amplitude at the start
/// (beta0 = 0): tan(phi/2) = tan(theta/2) cos(2 beta), the classic
/// matching condition. Continuous through theta = pi.
pub fn hoyer_phi(theta: f64, beta: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0 && theta < TAU) {
        return Err(Error::domain(format!(
            "theta must lie in the open interval (0, 2pi), got {theta}"
        )));
    }
    if !(beta.is_finite() && beta > 0.0 && beta < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "beta must lie in the open interval (0, pi/2), got {beta}"
        )));
    }
    let n = (theta / 2.0).sin() * (2.0 * beta).cos();
    let d = (theta / 2.0).cos();
    let phi = wrap_angle(2.0 * n.atan2(d), 0.0);
    if phi > 0.0 && phi < TAU {
        Ok(phi)
    } else if n == 0.0 && d == 0.0 {
        // beta = pi/4 and theta = pi: any phi is matched, return the center.
        Ok(std::f64::consts::PI)
    } else {
        Err(Error::NoMatchedPhase {
            theta,
            residual: d,
        })
    }
}

/// The distinguished matched pair where the initial latitude is extremal
/// (delta = pi/2): phi = pi + 2(alpha + u), with theta solved from the
/// classic condition. Matched for every beta0, not just beta0 = 0.
pub fn hoyer_point(inputs: &MatchingInputs) -> Result<PhasePair> {
    let phi = wrap_angle(std::f64::consts::PI + 2.0 * inputs.alpha_plus_u(), 0.0);
    if !(phi > 0.0 && phi < TAU) {
        return Err(Error::domain(format!(
            "distinguished phi = {phi} degenerates at alpha + u = {}",
            inputs.alpha_plus_u()
        )));
    }
    // invert tan(phi/2) = tan(theta/2) cos(2 beta) for theta
    let (sh, ch) = (phi / 2.0).sin_cos();
    let theta = wrap_angle(2.0 * sh.atan2(ch * (2.0 * inputs.geom.beta()).cos()), 0.0);
    PhasePair::new(phi, theta)
}

/// Real-valued iteration count to certainty on the matched curve:
/// f = (pi/2 - arcsin(sin(beta0) sin(delta))) / w.
///
/// Refuses pairs off the matched curve (NotMatched) and degenerate
/// spectra (DegenerateKernel).
pub fn iteration_function_f(phases: &PhasePair, inputs: &MatchingInputs) -> Result<f64> {
    let residual = matching_residual(phases, inputs);
    if residual.abs() > MATCHED_TOLERANCE {
        return Err(Error::NotMatched {
            residual,
            tolerance: MATCHED_TOLERANCE,
        });
    }
    let w = kernel_angle_w(phases, inputs.geom.beta());
    if w.sin() <= DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateKernel { sin_w: w.sin() });
    }
    Ok((FRAC_PI_2 - inputs.latitude_sine(phases.phi()).asin()) / w)
}

/// f along the equal-phase family phi = theta, which is matched when the
/// initial state is the overlap state itself (beta0 = beta, alpha + u = 0).
/// There w = 2 arcsin(sin(theta/2) sin(beta)) and f collapses to
/// pi/(2w) - 1/2.
pub fn special_case_f_equal_phases(theta: f64, beta: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0 && theta < TAU) {
        return Err(Error::domain(format!(
            "theta must lie in the open interval (0, 2pi), got {theta}"
        )));
    }
    if !(beta.is_finite() && beta > 0.0 && beta < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "beta must lie in the open interval (0, pi/2), got {beta}"
        )));
    }
    let w = 2.0 * ((theta / 2.0).sin() * beta.sin()).asin();
    if w.sin() <= DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateKernel { sin_w: w.sin() });
    }
    Ok(std::f64::consts::PI / (2.0 * w) - 0.5)
}

/// One point of the matched curve at a given theta.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub phi: f64,
    pub f: f64,
    pub w: f64,
    pub residual: f64,
}

/// A sample of the matched curve; per-theta failures are carried inline so
/// a sweep never aborts halfway.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub theta: f64,
    pub outcome: std::result::Result<CurvePoint, Error>,
}

/// Matched phi, f, w and the achieved residual at one theta.
pub fn matched_sample(theta: f64, inputs: &MatchingInputs) -> Result<CurvePoint> {
    let phi = matched_phi(theta, inputs)?;
    let phases = PhasePair::new(phi, theta)?;
    let residual = matching_residual(&phases, inputs);
    let f = iteration_function_f(&phases, inputs)?;
    let w = kernel_angle_w(&phases, inputs.geometry().beta());
    Ok(CurvePoint {
        phi,
        f,
        w,
        residual,
    })
}

/// Samples the matched curve on an inclusive, uniform theta grid.
pub fn trace_curve(
    inputs: &MatchingInputs,
    theta_min: f64,
    theta_max: f64,
    steps: usize,
) -> Result<Vec<CurveSample>> {
    if !(theta_min.is_finite() && theta_max.is_finite()) || theta_min >= theta_max {
        return Err(Error::domain(format!(
            "need theta_min < theta_max, got [{theta_min}, {theta_max}]"
        )));
    }
    if theta_min <= 0.0 || theta_max >= TAU {
        return Err(Error::domain(format!(
            "theta grid [{theta_min}, {theta_max}] must stay inside (0, 2pi)"
        )));
    }
    if steps < 2 {
        return Err(Error::domain(format!("need at least 2 steps, got {steps}")));
    }
    let span = theta_max - theta_min;
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let theta = if k == steps - 1 {
            theta_max
        } else {
            theta_min + span * k as f64 / (steps - 1) as f64
        };
        out.push(CurveSample {
            theta,
            outcome: matched_sample(theta, inputs),
        });
    }
    Ok(out)
}
