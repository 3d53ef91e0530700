//! End-to-end orchestration: plan a search from reduced parameters, verify
//! the plan against the brute-force oracles, and assemble reports whose
//! oracle fields never come from closed forms.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, kernel_power_closed, kernel_power_iterative};
use crate::matching::{
    iteration_function_f, matched_sample, trace_curve, MatchingInputs,
};
use crate::ndim::{extract_reduction, run_search, success_probability, NState, NUnitary};
use crate::planner::{
    adjust_phases, final_phase, iteration_count, iterated_success, optimal_iterations,
    plan_optimal_with_diagnostics, plan_search, SearchPlan, Strategy,
};
use crate::su2::{wrap_angle, PhasePair, TAU};

/// Extremes of the matched curve over a fine sweep, used for feasibility
/// analysis in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveStats {
    pub min_f: f64,
    pub theta_at_min_f: f64,
    pub max_w: f64,
    /// evaluable points out of the sweep size
    pub evaluable: usize,
}

/// Sweeps the matched curve on a 4001-point grid and records min f and
/// max w among evaluable points.
pub fn curve_stats(inputs: &MatchingInputs) -> Result<CurveStats> {
    let samples = trace_curve(inputs, 1e-4, TAU - 1e-4, 4000)?;
    let mut stats = CurveStats {
        min_f: f64::INFINITY,
        theta_at_min_f: f64::NAN,
        max_w: 0.0,
        evaluable: 0,
    };
    for sample in &samples {
        if let Ok(point) = sample.outcome {
            stats.evaluable += 1;
            stats.max_w = stats.max_w.max(point.w);
            if point.f < stats.min_f {
                stats.min_f = point.f;
                stats.theta_at_min_f = sample.theta;
            }
        }
    }
    if stats.evaluable == 0 {
        return Err(Error::domain(
            "matched curve is nowhere evaluable on the sweep grid".to_string(),
        ));
    }
    Ok(stats)
}

/// A planned search together with its brute-force verification. The oracle
/// fields are produced by iterated products only.
#[derive(Debug, Clone)]
pub struct PlanReport {
    pub plan: SearchPlan,
    /// iteration-count estimate from the closed formula
    pub closed_form_m: u64,
    /// minimal m the bracketed solver realized on the curve (equals plan.m
    /// for the optimal strategy)
    pub oracle_m: u64,
    /// success probability of the plan under the iterated 2-D kernel
    pub oracle_success: f64,
    /// marked-amplitude phase under the iterated 2-D kernel
    pub oracle_delta: f64,
    pub curve: CurveStats,
    /// both adjusted solutions when the optimal strategy found two
    pub solutions: Vec<PhasePair>,
    pub notes: Vec<String>,
}

/// Plans with the given strategy and verifies against the iterated kernel.
pub fn plan_report(inputs: &MatchingInputs, strategy: Strategy) -> Result<PlanReport> {
    let curve = curve_stats(inputs)?;
    let (plan, closed_form_m, oracle_m, solutions) = match strategy {
        Strategy::Optimal => {
            let (plan, diag) = plan_optimal_with_diagnostics(inputs)?;
            (plan, diag.closed_form_m, diag.oracle_m, diag.solutions)
        }
        Strategy::FixedTheta(_) => {
            let plan = plan_search(inputs, strategy)?;
            let m = plan.m;
            (plan, optimal_iterations(inputs), m, vec![plan.phases])
        }
    };

    let oracle_success = iterated_success(&plan, inputs);
    let oracle_delta = iterated_phase(&plan.phases, plan.m, inputs);
    let mut notes = Vec::new();
    if closed_form_m != oracle_m {
        notes.push(format!(
            "closed-form count estimate {closed_form_m} differs from the solver minimum \
             {oracle_m}; the estimate assumes the most favorable rotation w = 2 beta, \
             which the matched curve attains only at theta = pi with delta = pi/2"
        ));
    }
    notes.extend(infeasibility_notes(oracle_m, &curve, inputs));
    if !plan.exact {
        notes.push(format!(
            "f = {:.6} is not an integer at the selected theta, so m = {} over-rotates; \
             predicted success {:.12} < 1",
            plan.f_value, plan.m, plan.predicted_success
        ));
    }
    Ok(PlanReport {
        plan,
        closed_form_m,
        oracle_m,
        oracle_success,
        oracle_delta,
        curve,
        solutions,
        notes,
    })
}

/// Why each count below `m` cannot reach certainty on this curve.
fn infeasibility_notes(m: u64, curve: &CurveStats, inputs: &MatchingInputs) -> Vec<String> {
    let beta0 = inputs.initial_state().beta0();
    let mut notes = Vec::new();
    for lower in 1..m {
        if (lower as f64) < curve.min_f {
            let needed = (FRAC_PI_2 - beta0) / lower as f64;
            let mut note = format!(
                "m = {lower} is infeasible: f never drops to {lower} (curve minimum \
                 {:.6} at theta = {:.6})",
                curve.min_f, curve.theta_at_min_f
            );
            if curve.max_w < needed {
                note.push_str(&format!(
                    "; equivalently certainty in {lower} iteration(s) needs a rotation \
                     w >= {needed:.6} per step, but the curve's maximum w is {:.6}",
                    curve.max_w
                ));
            }
            notes.push(note);
        }
    }
    notes
}

/// arg of the marked amplitude after m iterated kernel applications.
fn iterated_phase(phases: &PhasePair, m: u64, inputs: &MatchingInputs) -> f64 {
    let g = build_kernel(phases, inputs.geometry());
    let amp = kernel_power_iterative(&g, m)
        .apply(&inputs.initial_state().state_vector())
        .a1;
    wrap_angle(amp.arg(), 0.0)
}

/// Closed-form success and phase prediction for an arbitrary (phases, m),
/// falling back to the iterated product at degenerate spectra.
fn closed_prediction(
    phases: &PhasePair,
    m: u64,
    inputs: &MatchingInputs,
) -> Result<(f64, f64)> {
    let power = match kernel_power_closed(phases, inputs.geometry(), m) {
        Ok(p) => p,
        Err(Error::DegenerateKernel { .. }) => {
            kernel_power_iterative(&build_kernel(phases, inputs.geometry()), m)
        }
        Err(e) => return Err(e),
    };
    let amp = power.apply(&inputs.initial_state().state_vector()).a1;
    Ok((amp.norm_sqr().clamp(0.0, 1.0), wrap_angle(amp.arg(), 0.0)))
}

/// How cmd-level simulation chooses its phases and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimulateMode {
    /// extract, adjust phases to the minimal integer m, run
    Auto,
    /// phases fixed by the caller; m from the iteration function, which
    /// requires the phases to sit on the matched curve
    Phases(PhasePair),
    /// m fixed by the caller; phases adjusted so f = m exactly
    Iterations(u64),
    /// both fixed; just run and report
    Explicit(PhasePair, u64),
}

/// An N-dimensional run with its reduction echo. Oracle fields come from
/// the statevector evolution, never from closed forms.
#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub dim: usize,
    pub eta: usize,
    pub tau: usize,
    pub beta: f64,
    pub alpha: f64,
    pub beta0: f64,
    pub u_phase: f64,
    pub global_phase: f64,
    pub plan: SearchPlan,
    pub closed_form_m: u64,
    pub oracle_m: u64,
    /// |<tau|result>|^2 from the statevector run
    pub oracle_success: f64,
    /// arg<tau|result> from the statevector run
    pub oracle_delta: f64,
    pub notes: Vec<String>,
}

/// Runs the search on U with s = U|eta> and reports the statevector
/// outcome next to the 2-D plan that produced the phases.
pub fn simulate(u: &NUnitary, eta: usize, tau: usize, mode: SimulateMode) -> Result<SimulateReport> {
    let n = u.dim();
    let s = u.apply(&NState::basis(n, eta)?)?;
    let reduction = extract_reduction(u, eta, tau, &s)?;
    let inputs = reduction.matching_inputs()?;

    let (plan, closed_form_m, mut notes) = match mode {
        SimulateMode::Auto => {
            let report = plan_report(&inputs, Strategy::Optimal)?;
            (report.plan, report.closed_form_m, report.notes)
        }
        SimulateMode::Iterations(m) => {
            let solutions = adjust_phases(m, &inputs)?;
            let plan = certainty_plan(solutions[0], m, &inputs)?;
            (plan, optimal_iterations(&inputs), Vec::new())
        }
        SimulateMode::Phases(phases) => {
            let f = iteration_function_f(&phases, &inputs)?;
            let m = iteration_count(f)?;
            let plan = explicit_plan(phases, m, f, &inputs)?;
            (plan, optimal_iterations(&inputs), Vec::new())
        }
        SimulateMode::Explicit(phases, m) => {
            let f = iteration_function_f(&phases, &inputs).unwrap_or(f64::NAN);
            let plan = explicit_plan(phases, m, f, &inputs)?;
            (plan, optimal_iterations(&inputs), Vec::new())
        }
    };

    let out = run_search(u, eta, tau, &s, &plan.phases, plan.m)?;
    let oracle_success = success_probability(&out, tau);
    let oracle_delta = wrap_angle(out.amplitude(tau).arg(), 0.0);
    if !plan.exact {
        notes.push(format!(
            "not a certainty plan: predicted success {:.12}",
            plan.predicted_success
        ));
    }
    Ok(SimulateReport {
        dim: n,
        eta,
        tau,
        beta: reduction.beta,
        alpha: reduction.alpha,
        beta0: reduction.beta0,
        u_phase: reduction.u,
        global_phase: reduction.global_phase,
        oracle_m: plan.m,
        plan,
        closed_form_m,
        oracle_success,
        oracle_delta,
        notes,
    })
}

/// Plan for phases known to solve f = m exactly (from adjust_phases).
fn certainty_plan(phases: PhasePair, m: u64, inputs: &MatchingInputs) -> Result<SearchPlan> {
    let f = matched_sample(phases.theta(), inputs)?.f;
    let delta = final_phase(m, &phases, inputs)?;
    let (predicted_success, _) = closed_prediction(&phases, m, inputs)?;
    Ok(SearchPlan {
        phases,
        m,
        delta,
        f_value: f,
        predicted_success,
        exact: true,
    })
}

/// Plan wrapper for caller-fixed phases: exact when the certainty
/// prediction holds, otherwise an honest partial plan.
fn explicit_plan(phases: PhasePair, m: u64, f: f64, inputs: &MatchingInputs) -> Result<SearchPlan> {
    let (predicted_success, closed_arg) = closed_prediction(&phases, m, inputs)?;
    match final_phase(m, &phases, inputs) {
        Ok(delta) => Ok(SearchPlan {
            phases,
            m,
            delta,
            f_value: f,
            predicted_success,
            exact: true,
        }),
        Err(Error::NotCertain { .. }) | Err(Error::NotMatched { .. }) => Ok(SearchPlan {
            phases,
            m,
            delta: closed_arg,
            f_value: f,
            predicted_success,
            exact: false,
        }),
        Err(e) => Err(e),
    }
}
