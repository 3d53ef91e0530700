//! Seeded property suites behind the `verify` command. Each check samples
//! the parameter space, measures the worst deviation of one contract
//! invariant, and compares it against that invariant's pinned tolerance.
//! The tolerance scale exists for negative controls: scaling below 1 must
//! make honest floating-point residue fail the checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::kernel::{
    build_kernel, eigen_decompose, kernel_power_closed, kernel_power_iterative,
};
use crate::matching::{
    hoyer_phi, matched_phi, matched_sample, matching_residual, MatchingInputs,
};
use crate::ndim::{build_random_unitary, compare_with_2d, run_search, NState};
use crate::pipeline::curve_stats;
use crate::planner::{adjust_phases, iterated_success, plan_optimal_with_diagnostics};
use crate::su2::{wrap_angle, InitialStateParams, PhasePair, SearchGeometry, TAU};

/// Result of one property check: worst measured deviation over `samples`
/// draws against the scaled tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl CheckOutcome {
    fn measure(name: &str, worst: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            name: name.to_string(),
            pass: worst.is_finite() && worst <= tolerance,
            worst,
            tolerance,
            samples,
        }
    }
}

/// Which property suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Kernel,
    Matching,
    Planner,
    Ndim,
    All,
}

/// Runs the selected suite with `samples` draws per check from a seeded
/// stream. `tolerance_scale` multiplies every pinned tolerance; 1.0 is the
/// real contract, smaller values are negative controls.
pub fn run_suite(
    suite: Suite,
    samples: usize,
    seed: u64,
    tolerance_scale: f64,
) -> Result<Vec<CheckOutcome>> {
    if samples == 0 {
        return Err(Error::domain("samples must be >= 1".to_string()));
    }
    if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        return Err(Error::domain(format!(
            "tolerance scale must be finite and positive, got {tolerance_scale}"
        )));
    }
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Kernel => kernel_suite(&mut out, samples, &mut rng, tolerance_scale),
        Suite::Matching => matching_suite(&mut out, samples, &mut rng, tolerance_scale),
        Suite::Planner => planner_suite(&mut out, samples, &mut rng, tolerance_scale),
        Suite::Ndim => ndim_suite(&mut out, samples, &mut rng, tolerance_scale),
        Suite::All => {
            kernel_suite(&mut out, samples, &mut rng, tolerance_scale);
            matching_suite(&mut out, samples, &mut rng, tolerance_scale);
            planner_suite(&mut out, samples, &mut rng, tolerance_scale);
            ndim_suite(&mut out, samples, &mut rng, tolerance_scale);
        }
    }
    Ok(out)
}

fn draw_phases(rng: &mut ChaCha8Rng) -> PhasePair {
    loop {
        let phi = rng.gen_range(1e-3..TAU - 1e-3);
        let theta = rng.gen_range(1e-3..TAU - 1e-3);
        if let Ok(pair) = PhasePair::new(phi, theta) {
            return pair;
        }
    }
}

fn draw_geometry(rng: &mut ChaCha8Rng) -> SearchGeometry {
    let beta = rng.gen_range(0.02..FRAC_PI_2 - 0.02);
    let alpha = rng.gen_range(0.0..TAU);
    SearchGeometry::new(beta, alpha).unwrap()
}

fn draw_inputs(rng: &mut ChaCha8Rng) -> MatchingInputs {
    let geom = draw_geometry(rng);
    let beta0 = rng.gen_range(0.0..FRAC_PI_2 - 1e-3);
    let u = rng.gen_range(0.0..TAU);
    let g = rng.gen_range(0.0..TAU);
    MatchingInputs::new(geom, InitialStateParams::new(beta0, u, g).unwrap())
}

fn angle_gap(a: f64, b: f64) -> f64 {
    wrap_angle(a - b, -PI).abs()
}

fn kernel_suite(out: &mut Vec<CheckOutcome>, samples: usize, rng: &mut ChaCha8Rng, scale: f64) {
    let mut worst_unitarity: f64 = 0.0;
    let mut worst_modulus: f64 = 0.0;
    let mut worst_phase_sum: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    let mut spectra = 0;
    for _ in 0..samples {
        let phases = draw_phases(rng);
        let geom = draw_geometry(rng);
        let g = build_kernel(&phases, &geom);
        worst_unitarity = worst_unitarity.max(g.unitarity_deviation());

        if let Ok(spectrum) = eigen_decompose(&phases, &geom) {
            spectra += 1;
            for lambda in [spectrum.lambda1, spectrum.lambda2] {
                worst_modulus = worst_modulus.max((lambda.norm() - 1.0).abs());
            }
            let product = spectrum.lambda1 * spectrum.lambda2;
            worst_phase_sum = worst_phase_sum
                .max(angle_gap(product.arg(), phases.phi() + phases.theta()));
            worst_gap = worst_gap.max(angle_gap(
                spectrum.lambda1.arg() - spectrum.lambda2.arg(),
                2.0 * spectrum.w,
            ));
            for (lambda, vector) in [
                (spectrum.lambda1, spectrum.g1),
                (spectrum.lambda2, spectrum.g2),
            ] {
                let image = g.apply(&vector);
                let residual = image.sub(&vector.scaled(lambda)).norm();
                worst_residual = worst_residual.max(residual);
            }
            for m in [1u64, 2, 5, 10, 100, 1000] {
                let closed = kernel_power_closed(&phases, &geom, m).unwrap();
                let iterated = kernel_power_iterative(&g, m);
                let deviation = closed.max_abs_diff(&iterated);
                // power tolerance grows with m; normalize to the m = 1000
                // bound so one worst-case number is reportable
                let bound = 1e-9f64.max(m as f64 * 1e-13);
                worst_power = worst_power.max(deviation * (1e-9 / bound));
            }
        }
    }
    out.push(CheckOutcome::measure(
        "kernel-unitarity",
        worst_unitarity,
        1e-12 * scale,
        samples,
    ));
    out.push(CheckOutcome::measure(
        "kernel-eigenvalue-modulus",
        worst_modulus,
        1e-12 * scale,
        spectra,
    ));
    out.push(CheckOutcome::measure(
        "kernel-total-eigenphase",
        worst_phase_sum,
        1e-10 * scale,
        spectra,
    ));
    out.push(CheckOutcome::measure(
        "kernel-eigenphase-gap",
        worst_gap,
        1e-10 * scale,
        spectra,
    ));
    out.push(CheckOutcome::measure(
        "kernel-eigen-residual",
        worst_residual,
        1e-11 * scale,
        spectra,
    ));
    out.push(CheckOutcome::measure(
        "kernel-power-equivalence",
        worst_power,
        1e-9 * scale,
        spectra,
    ));
}

fn matching_suite(out: &mut Vec<CheckOutcome>, samples: usize, rng: &mut ChaCha8Rng, scale: f64) {
    let mut worst_residual: f64 = 0.0;
    let mut residual_points = 0;
    let mut worst_equal_phase: f64 = 0.0;
    let mut worst_hoyer: f64 = 0.0;
    let mut hoyer_points = 0;
    let mut worst_two_forms: f64 = 0.0;
    let mut two_form_points = 0;
    let mut worst_min_offset: f64 = 0.0;
    let mut min_curves = 0;
    for k in 0..samples {
        let inputs = draw_inputs(rng);
        let theta = rng.gen_range(0.05..TAU - 0.05);
        if let Ok(phi) = matched_phi(theta, &inputs) {
            let pair = PhasePair::new(phi, theta).unwrap();
            worst_residual = worst_residual.max(matching_residual(&pair, &inputs).abs());
            residual_points += 1;

            // the closed tangent form against a bisection solve of the
            // residual in phi, away from the theta = pi branch seam
            if (theta / 2.0).cos().abs() > 1e-6 {
                if let Some(independent) = bisect_residual_in_phi(theta, &inputs) {
                    worst_two_forms = worst_two_forms.max((independent - phi).abs());
                    two_form_points += 1;
                }
            }
        }

        // equal-phase recovery on the self-search family
        let beta = rng.gen_range(0.02..FRAC_PI_2 - 0.02);
        let alpha = rng.gen_range(0.0..TAU);
        let self_inputs = MatchingInputs::new(
            SearchGeometry::new(beta, alpha).unwrap(),
            InitialStateParams::new(beta, wrap_angle(-alpha, 0.0), 0.0).unwrap(),
        );
        if let Ok(phi) = matched_phi(theta, &self_inputs) {
            worst_equal_phase = worst_equal_phase.max((phi - theta).abs());
        }

        // the quarter-offset family solves the matching when beta0 = 0
        let equator = MatchingInputs::new(
            SearchGeometry::new(beta, alpha).unwrap(),
            InitialStateParams::new(0.0, 0.0, 0.0).unwrap(),
        );
        if let Ok(phi) = hoyer_phi(theta, beta) {
            if let Ok(pair) = PhasePair::new(phi, theta) {
                worst_hoyer = worst_hoyer.max(matching_residual(&pair, &equator).abs());
                hoyer_points += 1;
            }
        }

        // grid minimum of f at the point nearest pi, on the family where
        // that is a theorem: zero combined azimuth and beta < pi/4. With
        // azimuth the minimum shifts off pi, and over-rotating curves
        // have f decreasing toward the ends instead; the acceptance
        // suite carries the literal global claim
        if k < samples.min(8) {
            let sym_inputs = MatchingInputs::new(
                SearchGeometry::new(rng.gen_range(0.05..FRAC_PI_4 - 0.02), alpha)
                    .unwrap(),
                InitialStateParams::new(
                    rng.gen_range(0.0..FRAC_PI_2 - 1e-3),
                    wrap_angle(-alpha, 0.0),
                    0.0,
                )
                .unwrap(),
            );
            if let Some(offset) = grid_min_offset_from_pi(&sym_inputs) {
                worst_min_offset = worst_min_offset.max(offset);
                min_curves += 1;
            }
        }
    }
    out.push(CheckOutcome::measure(
        "matching-residual-on-curve",
        worst_residual,
        1e-10 * scale,
        residual_points,
    ));
    out.push(CheckOutcome::measure(
        "matching-equal-phase-recovery",
        worst_equal_phase,
        1e-12 * scale,
        samples,
    ));
    out.push(CheckOutcome::measure(
        "matching-hoyer-consistency",
        worst_hoyer,
        1e-10 * scale,
        hoyer_points,
    ));
    out.push(CheckOutcome::measure(
        "matching-two-formulations-agree",
        worst_two_forms,
        1e-9 * scale,
        two_form_points,
    ));
    out.push(CheckOutcome::measure(
        "matching-f-minimum-at-pi",
        worst_min_offset,
        // offset measured in grid steps of the 1e-3-resolution scan;
        // anything within one step of pi passes
        1.0 * scale,
        min_curves,
    ));
}

/// Independent root of the residual in phi by bracketed bisection.
fn bisect_residual_in_phi(theta: f64, inputs: &MatchingInputs) -> Option<f64> {
    let h = |phi: f64| -> Option<f64> {
        let pair = PhasePair::new(phi, theta).ok()?;
        Some(matching_residual(&pair, inputs))
    };
    let grid = 64;
    let lo_limit = 1e-9;
    let hi_limit = TAU - 1e-9;
    let mut prev = (lo_limit, h(lo_limit)?);
    for k in 1..=grid {
        let phi = lo_limit + (hi_limit - lo_limit) * k as f64 / grid as f64;
        let value = h(phi)?;
        if value == 0.0 {
            return Some(phi);
        }
        if (prev.1 > 0.0) != (value > 0.0) {
            let (mut lo, mut hi) = (prev.0, phi);
            let mut h_lo = prev.1;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let h_mid = h(mid)?;
                // drive the bracket width down instead of exiting on a
                // small residual: near-degenerate (n, d) make the
                // residual tiny far from the root
                if h_mid == 0.0 || (hi - lo) < 1e-15 {
                    return Some(mid);
                }
                if (h_mid > 0.0) == (h_lo > 0.0) {
                    lo = mid;
                    h_lo = h_mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = (phi, value);
    }
    None
}

/// Grid-argmin distance from pi in units of the grid step, on a
/// 1e-3-resolution scan centered at pi.
fn grid_min_offset_from_pi(inputs: &MatchingInputs) -> Option<f64> {
    let step = 1e-3;
    let half = 3000;
    let mut best: Option<(f64, f64)> = None;
    for k in -half..=half {
        let theta = PI + k as f64 * step;
        if theta <= 0.0 || theta >= TAU {
            continue;
        }
        if let Ok(point) = matched_sample(theta, inputs) {
            if best.is_none_or(|(_, f)| point.f < f) {
                best = Some((theta, point.f));
            }
        }
    }
    best.map(|(theta, _)| (theta - PI).abs() / step)
}

fn planner_suite(out: &mut Vec<CheckOutcome>, samples: usize, rng: &mut ChaCha8Rng, scale: f64) {
    let mut worst_success: f64 = 0.0;
    let mut worst_phase: f64 = 0.0;
    let mut plans = 0;
    let mut worst_symmetry: f64 = 0.0;
    let mut symmetric_pairs = 0;
    let mut worst_minimality: f64 = 0.0;
    let mut minimality_checks = 0;
    let mut worst_argmin: f64 = 0.0;
    let mut argmin_curves = 0;
    for k in 0..samples {
        let inputs = draw_inputs(rng);
        // over-rotating draws legitimately have no certainty plan; skip
        if let Ok((plan, diag)) = plan_optimal_with_diagnostics(&inputs) {
            plans += 1;
            let success = iterated_success(&plan, &inputs);
            worst_success = worst_success.max((1.0 - success).abs());
            let arg = iterated_marked_arg(&plan.phases, plan.m, &inputs);
            worst_phase = worst_phase.max(angle_gap(arg, plan.delta));

            // brute minimality: no smaller m admits an adjustment;
            // bounded to keep the curve rescans affordable
            if minimality_checks < 10 && diag.oracle_m <= 12 {
                let mut violations = 0.0f64;
                for m in 1..diag.oracle_m {
                    if adjust_phases(m, &inputs).is_ok() {
                        violations = 1.0;
                        break;
                    }
                }
                worst_minimality = worst_minimality.max(violations);
                minimality_checks += 1;
            }
        }

        // two-sided symmetry about pi on the zero-azimuth family
        let beta = rng.gen_range(0.05..FRAC_PI_2 - 0.05);
        let alpha = rng.gen_range(0.0..TAU);
        let beta0 = rng.gen_range(0.0..FRAC_PI_2 - 0.05);
        let sym = MatchingInputs::new(
            SearchGeometry::new(beta, alpha).unwrap(),
            InitialStateParams::new(beta0, wrap_angle(-alpha, 0.0), 0.0).unwrap(),
        );
        if let Ok(stats) = curve_stats(&sym) {
            let m = stats.min_f.ceil() as u64 + 1;
            if let Ok(solutions) = adjust_phases(m, &sym) {
                if solutions.len() == 2 {
                    let mid = 0.5 * (solutions[0].theta() + solutions[1].theta());
                    worst_symmetry = worst_symmetry.max((mid - PI).abs());
                    symmetric_pairs += 1;
                }
            }
        }

        // monotone structure as a grid-argmin claim, on the same scoped
        // family as the matching suite (see the comment there)
        if k < samples.min(4) {
            let mono = MatchingInputs::new(
                SearchGeometry::new(rng.gen_range(0.05..FRAC_PI_4 - 0.02), alpha)
                    .unwrap(),
                InitialStateParams::new(
                    rng.gen_range(0.0..FRAC_PI_2 - 1e-3),
                    wrap_angle(-alpha, 0.0),
                    0.0,
                )
                .unwrap(),
            );
            if let Some(offset) = grid_min_offset_from_pi(&mono) {
                worst_argmin = worst_argmin.max(offset);
                argmin_curves += 1;
            }
        }
    }
    out.push(CheckOutcome::measure(
        "planner-exact-plans-reach-certainty",
        worst_success,
        1e-9 * scale,
        plans,
    ));
    out.push(CheckOutcome::measure(
        "planner-final-phase-prediction",
        worst_phase,
        1e-8 * scale,
        plans,
    ));
    out.push(CheckOutcome::measure(
        "planner-solutions-symmetric-about-pi",
        worst_symmetry,
        1e-9 * scale,
        symmetric_pairs,
    ));
    out.push(CheckOutcome::measure(
        "planner-oracle-minimality",
        worst_minimality,
        0.0,
        minimality_checks,
    ));
    out.push(CheckOutcome::measure(
        "planner-curve-argmin-near-pi",
        worst_argmin,
        1.0 * scale,
        argmin_curves,
    ));
}

fn iterated_marked_arg(phases: &PhasePair, m: u64, inputs: &MatchingInputs) -> f64 {
    let g = build_kernel(phases, inputs.geometry());
    kernel_power_iterative(&g, m)
        .apply(&inputs.initial_state().state_vector())
        .a1
        .arg()
}

fn ndim_suite(out: &mut Vec<CheckOutcome>, samples: usize, rng: &mut ChaCha8Rng, scale: f64) {
    let mut worst_leakage: f64 = 0.0;
    let mut worst_deviation: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut worst_haar: f64 = 0.0;
    let mut runs = 0;
    for k in 0..samples {
        let n = [4usize, 8, 16][k % 3];
        let seed = rng.gen::<u64>();
        let u = build_random_unitary(n, seed).unwrap();
        worst_haar = worst_haar.max(
            crate::ndim::unitarity_deviation(&u.to_dense().unwrap()),
        );

        let eta = rng.gen_range(0..n);
        let tau = rng.gen_range(0..n);
        let s = u.apply(&NState::basis(n, eta).unwrap()).unwrap();
        let phases = draw_phases(rng);
        let m = rng.gen_range(1..=50u64);
        // a degenerate overlap draw is not a 2-D configuration; skip
        if let Ok(report) = compare_with_2d(&u, eta, tau, &s, &phases, m) {
            runs += 1;
            worst_leakage = worst_leakage.max(report.max_leakage);
            worst_deviation = worst_deviation.max(report.max_deviation);
        }
        let evolved = run_search(&u, eta, tau, &s, &phases, m).unwrap();
        worst_norm = worst_norm.max((evolved.norm() - 1.0).abs());
    }
    out.push(CheckOutcome::measure(
        "ndim-span-leakage",
        worst_leakage,
        1e-12 * scale,
        runs,
    ));
    out.push(CheckOutcome::measure(
        "ndim-reduction-equivalence",
        worst_deviation,
        1e-9 * scale,
        runs,
    ));
    out.push(CheckOutcome::measure(
        "ndim-norm-conservation",
        worst_norm,
        1e-11 * scale,
        samples,
    ));
    out.push(CheckOutcome::measure(
        "ndim-haar-sanity",
        worst_haar,
        1e-10 * scale,
        samples,
    ));
}
