//! The search iteration operator ("kernel") in the {|I>, |II>} basis, its
//! closed-form spectrum, and its m-th power by two independent routes.
//!
//! One iteration is G = -G_eta G_tau, where G_tau multiplies the marked
//! state by e^{i phi} and G_eta multiplies U|eta> by e^{i theta}. The
//! leading minus sign is part of the convention used throughout the crate;
//! it makes G's eigenvalues -e^{i((phi+theta)/2 +- w)} and keeps every
//! downstream phase formula free of (-1)^m bookkeeping.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::su2::{cis, Mat2, PhasePair, SearchGeometry, Vec2, TAU};

/// Spectrum threshold: below this sin(w) the eigenvector normalization
/// divides by ~0 and the closed-form power is unusable.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Closed-form eigensystem of the kernel.
///
/// `w` is the half-gap between the two eigenphases; `x` the mixing angle of
/// the eigenvectors in {|I>, |II>}; `l_m` the squared normalization of the
/// unnormalized first eigenvector.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpectrum {
    pub w: f64,
    pub x: f64,
    pub l_m: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub g1: Vec2,
    pub g2: Vec2,
}

/// arccos with the argument clamped when it overshoots [-1, 1] by at most
/// floating-point noise. Larger excursions are logic errors, not roundoff.
fn checked_acos(c: f64) -> f64 {
    assert!(c.abs() <= 1.0 + 1e-15, "acos argument {c} out of range");
    c.clamp(-1.0, 1.0).acos()
}

/// sin(theta/2) sin(2 beta): the off-diagonal coupling that one iteration
/// induces between |I> and |II>. Strictly positive on the valid ranges.
pub(crate) fn mixing_numerator(theta: f64, beta: f64) -> f64 {
    (theta / 2.0).sin() * (2.0 * beta).sin()
}

/// sin((phi-theta)/2) + 2 cos(phi/2) sin(theta/2) sin^2(beta): the
/// axis-tilt term. Equals sin(w) cos(2x) on the valid ranges.
pub(crate) fn axis_offset(phi: f64, theta: f64, beta: f64) -> f64 {
    let sb = beta.sin();
    ((phi - theta) / 2.0).sin() + 2.0 * (phi / 2.0).cos() * (theta / 2.0).sin() * sb * sb
}

/// Marked-state phase rotation diag(e^{i phi}, 1).
pub fn build_g_tau(phi: f64) -> Result<Mat2> {
    if !(phi.is_finite() && phi > 0.0 && phi < TAU) {
        return Err(Error::domain(format!(
            "phi must lie in the open interval (0, 2pi), got {phi}"
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Ok(Mat2::new([[cis(phi), zero], [zero, one]]))
}

/// Phase rotation about the overlap state: I + (e^{i theta} - 1) v v-dagger
/// with v = (sin(beta) e^{i alpha}, cos(beta)).
pub fn build_g_eta(theta: f64, geom: &SearchGeometry) -> Result<Mat2> {
    if !(theta.is_finite() && theta > 0.0 && theta < TAU) {
        return Err(Error::domain(format!(
            "theta must lie in the open interval (0, 2pi), got {theta}"
        )));
    }
    let k = cis(theta) - 1.0;
    let (sb, cb) = (geom.beta().sin(), geom.beta().cos());
    let v1 = cis(geom.alpha()) * sb;
    let v2 = Complex64::new(cb, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Ok(Mat2::new([
        [one + k * v1 * v1.conj(), k * v1 * v2.conj()],
        [k * v2 * v1.conj(), one + k * v2 * v2.conj()],
    ]))
}

/// One full search iteration G = -G_eta G_tau, written entrywise.
///
/// The direct entrywise form is the production path; agreement with the
/// explicit -G_eta*G_tau product is asserted by the test suite.
pub fn build_kernel(phases: &PhasePair, geom: &SearchGeometry) -> Mat2 {
    let (phi, theta) = (phases.phi(), phases.theta());
    let (sb, cb) = (geom.beta().sin(), geom.beta().cos());
    let k = cis(theta) - 1.0;
    let ephi = cis(phi);
    let ea = cis(geom.alpha());
    Mat2::new([
        [
            -(ephi * (1.0 + k * sb * sb)),
            -(k * sb * cb * ea),
        ],
        [
            -(ephi * k * sb * cb * ea.conj()),
            -(1.0 + k * cb * cb),
        ],
    ])
}

/// Half-gap w between the kernel's two eigenphases:
/// cos(w) = cos((phi-theta)/2) - 2 sin(phi/2) sin(theta/2) sin^2(beta),
/// taken in [0, pi].
pub fn kernel_angle_w(phases: &PhasePair, beta: f64) -> f64 {
    let sb = beta.sin();
    let c = ((phases.phi() - phases.theta()) / 2.0).cos()
        - 2.0 * (phases.phi() / 2.0).sin() * (phases.theta() / 2.0).sin() * sb * sb;
    checked_acos(c)
}

/// Closed-form eigenvalues and eigenvectors of the kernel.
pub fn eigen_decompose(phases: &PhasePair, geom: &SearchGeometry) -> Result<KernelSpectrum> {
    let w = kernel_angle_w(phases, geom.beta());
    let sin_w = w.sin();
    if sin_w <= DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateKernel { sin_w });
    }
    let (phi, theta) = (phases.phi(), phases.theta());
    let b = mixing_numerator(theta, geom.beta());
    let c = axis_offset(phi, theta, geom.beta());
    // a >= 0 because sin^2(w) = b^2 + c^2 on these ranges, so sin(w) >= |c|.
    let a = sin_w + c;
    let l_m = a * a + b * b;
    // x in [0, pi/2]: b >= 0 and cos(x) = a / sqrt(l_m) >= 0.
    let x = (b / l_m.sqrt()).clamp(-1.0, 1.0).asin();

    let sigma = (phi + theta) / 2.0;
    let lambda1 = -cis(sigma + w);
    let lambda2 = -cis(sigma - w);
    let phase1 = cis(-phi / 2.0 + geom.alpha());
    let (sx, cx) = (x.sin(), x.cos());
    let g1 = Vec2::new(phase1 * cx, Complex64::new(sx, 0.0));
    let g2 = Vec2::new(Complex64::new(-sx, 0.0), phase1.conj() * cx);
    Ok(KernelSpectrum {
        w,
        x,
        l_m,
        lambda1,
        lambda2,
        g1,
        g2,
    })
}

/// m-th kernel power from the closed-form spectrum, built from
/// (w, x, phi, alpha, m) only. Exact up to rounding for any m.
pub fn kernel_power_closed(phases: &PhasePair, geom: &SearchGeometry, m: u64) -> Result<Mat2> {
    let spec = eigen_decompose(phases, geom)?;
    let mf = m as f64;
    let sigma = (phases.phi() + phases.theta()) / 2.0;
    // (-1)^m e^{i m sigma} = e^{i m (pi + sigma)}
    let pre = cis(mf * (std::f64::consts::PI + sigma));
    let (mw_sin, mw_cos) = (mf * spec.w).sin_cos();
    let cos2x = (2.0 * spec.x).cos();
    let sin2x = (2.0 * spec.x).sin();
    let i = Complex64::new(0.0, 1.0);
    let diag_osc = i * mw_sin * cos2x;
    let p11 = Complex64::new(mw_cos, 0.0) + diag_osc;
    let p22 = Complex64::new(mw_cos, 0.0) - diag_osc;
    let off = i * mw_sin * sin2x;
    let phase1 = cis(-phases.phi() / 2.0 + geom.alpha());
    let p12 = phase1 * off;
    let p21 = phase1.conj() * off;
    Ok(Mat2::new([[p11, p12], [p21, p22]]).scaled(pre))
}

/// m-th power by m repeated multiplications. The brute-force ground truth
/// for the closed form; never uses the spectrum.
pub fn kernel_power_iterative(g: &Mat2, m: u64) -> Mat2 {
    let mut acc = Mat2::identity();
    for _ in 0..m {
        acc = acc.mul(g);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent 2x2 eigenvalue oracle: roots of the characteristic
    /// polynomial by the complex quadratic formula.
    fn eig2(m: &Mat2) -> (Complex64, Complex64) {
        let a = &m.rows;
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = (tr * tr - 4.0 * det).sqrt();
        ((tr + disc) / 2.0, (tr - disc) / 2.0)
    }

    fn sample_inputs() -> Vec<(PhasePair, SearchGeometry)> {
        // deterministic sweep covering all four quadrants of (phi, theta)
        let mut out = Vec::new();
        for i in 1..8 {
            for j in 1..8 {
                let phi = i as f64 * TAU / 8.0;
                let theta = j as f64 * TAU / 8.0 + 0.013;
                let beta = 0.11 + 0.17 * ((i * j) as f64 % 7.0);
                let beta = beta % (FRAC_PI_2 - 0.02) + 0.01;
                let alpha = (i as f64 * 0.9 + j as f64 * 1.7) % TAU;
                out.push((
                    PhasePair::new(phi, theta % TAU).unwrap(),
                    SearchGeometry::new(beta, alpha).unwrap(),
                ));
            }
        }
        out
    }

    #[test]
    fn g_tau_at_pi_is_the_reflection() {
        let g = build_g_tau(PI).unwrap();
        assert!((g.rows[0][0] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((g.rows[1][1] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(g.rows[0][1], c(0.0, 0.0));
    }

    #[test]
    fn g_tau_at_half_pi_is_diag_i_1() {
        let g = build_g_tau(FRAC_PI_2).unwrap();
        assert!((g.rows[0][0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((g.rows[1][1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn g_tau_is_unitary_across_the_range() {
        for k in 1..100 {
            let phi = k as f64 * TAU / 100.0;
            assert!(build_g_tau(phi).unwrap().unitarity_deviation() < 1e-15);
        }
    }

    #[test]
    fn g_tau_rejects_out_of_range() {
        assert!(build_g_tau(0.0).is_err());
        assert!(build_g_tau(TAU).is_err());
        assert!(build_g_tau(-1.0).is_err());
        assert!(build_g_tau(f64::NAN).is_err());
    }

    #[test]
    fn g_eta_reflection_hand_value() {
        // theta = pi, beta = pi/6, alpha = 0: I - 2vv+ with v = (1/2, sqrt3/2)
        let geom = SearchGeometry::new(PI / 6.0, 0.0).unwrap();
        let g = build_g_eta(PI, &geom).unwrap();
        let s3 = 3.0f64.sqrt() / 2.0;
        let expect = Mat2::new([[c(0.5, 0.0), c(-s3, 0.0)], [c(-s3, 0.0), c(-0.5, 0.0)]]);
        assert!(g.max_abs_diff(&expect) < 1e-15);
        // reflection property: v is flipped
        let v = Vec2::new(c(0.5, 0.0), c(s3, 0.0));
        let gv = g.apply(&v);
        assert!((gv.a1 + v.a1).norm() < 1e-15 && (gv.a2 + v.a2).norm() < 1e-15);
    }

    #[test]
    fn g_eta_small_theta_is_near_identity() {
        let geom = SearchGeometry::new(0.8, 1.3).unwrap();
        let g = build_g_eta(1e-12, &geom).unwrap();
        assert!(g.max_abs_diff(&Mat2::identity()) < 1e-11);
    }

    #[test]
    fn g_eta_eigenvalues_are_phase_and_unity() {
        for (phases, geom) in sample_inputs().into_iter().step_by(5) {
            let theta = phases.theta();
            let g = build_g_eta(theta, &geom).unwrap();
            let (l1, l2) = eig2(&g);
            let expect = cis(theta);
            let one = c(1.0, 0.0);
            let direct = (l1 - expect).norm().max((l2 - one).norm());
            let swapped = (l1 - one).norm().max((l2 - expect).norm());
            assert!(direct.min(swapped) < 1e-10, "theta={theta}");
        }
    }

    #[test]
    fn kernel_hand_value_and_product_agreement() {
        let phases = PhasePair::new(PI, PI).unwrap();
        let geom = SearchGeometry::new(PI / 6.0, 0.0).unwrap();
        let g = build_kernel(&phases, &geom);
        let s3 = 3.0f64.sqrt() / 2.0;
        let expect = Mat2::new([[c(0.5, 0.0), c(s3, 0.0)], [c(-s3, 0.0), c(0.5, 0.0)]]);
        assert!(g.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn kernel_matches_negated_product_everywhere() {
        for (phases, geom) in sample_inputs() {
            let direct = build_kernel(&phases, &geom);
            let product = build_g_eta(phases.theta(), &geom)
                .unwrap()
                .mul(&build_g_tau(phases.phi()).unwrap())
                .scaled(c(-1.0, 0.0));
            assert!(direct.max_abs_diff(&product) < 1e-14);
        }
    }

    #[test]
    fn kernel_at_pi_pi_is_a_real_rotation() {
        for k in 1..=20 {
            let beta = k as f64 * FRAC_PI_2 / 21.0;
            let phases = PhasePair::new(PI, PI).unwrap();
            let geom = SearchGeometry::new(beta, 0.0).unwrap();
            let g = build_kernel(&phases, &geom);
            let (s2b, c2b) = (2.0 * beta).sin_cos();
            let rot = Mat2::new([[c(c2b, 0.0), c(s2b, 0.0)], [c(-s2b, 0.0), c(c2b, 0.0)]]);
            assert!(g.max_abs_diff(&rot) < 1e-14);
        }
    }

    #[test]
    fn kernel_determinant_is_total_phase() {
        for (phases, geom) in sample_inputs() {
            let a = &build_kernel(&phases, &geom).rows;
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let expect = cis(phases.phi() + phases.theta());
            assert!((det - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn angle_w_special_values() {
        let geom_beta = 0.37;
        let phases = PhasePair::new(PI, PI).unwrap();
        assert!((kernel_angle_w(&phases, geom_beta) - 2.0 * geom_beta).abs() < 1e-13);

        let tiny = PhasePair::new(1e-6, 1e-6).unwrap();
        assert!(kernel_angle_w(&tiny, 0.4) < 1e-5);
    }

    #[test]
    fn angle_w_matches_numeric_eigenphases() {
        let phases = PhasePair::new(FRAC_PI_2, FRAC_PI_3).unwrap();
        let geom = SearchGeometry::new(0.4, 0.0).unwrap();
        let w = kernel_angle_w(&phases, geom.beta());
        let (l1, l2) = eig2(&build_kernel(&phases, &geom));
        let sigma = (phases.phi() + phases.theta()) / 2.0;
        // each eigenphase is pi + sigma +- w up to 2pi wrapping
        let w1 = crate::su2::wrap_angle(l1.arg() - PI - sigma, -PI).abs();
        let w2 = crate::su2::wrap_angle(l2.arg() - PI - sigma, -PI).abs();
        assert!((w1 - w).abs() < 1e-10, "w={w} w1={w1}");
        assert!((w2 - w).abs() < 1e-10, "w={w} w2={w2}");
    }

    #[test]
    fn spectrum_example_and_residuals() {
        let phases = PhasePair::new(PI, PI).unwrap();
        let geom = SearchGeometry::new(PI / 6.0, 0.0).unwrap();
        let spec = eigen_decompose(&phases, &geom).unwrap();
        assert!((spec.lambda1 - cis(FRAC_PI_3)).norm() < 1e-13);
        assert!((spec.lambda2 - cis(-FRAC_PI_3)).norm() < 1e-13);

        let g = build_kernel(&phases, &geom);
        for (lambda, vec) in [(spec.lambda1, spec.g1), (spec.lambda2, spec.g2)] {
            let resid = g.apply(&vec).sub(&vec.scaled(lambda)).norm();
            assert!(resid < 1e-12);
        }
    }

    #[test]
    fn spectrum_invariants_across_samples() {
        for (phases, geom) in sample_inputs() {
            let spec = match eigen_decompose(&phases, &geom) {
                Ok(s) => s,
                Err(Error::DegenerateKernel { .. }) => continue,
                Err(e) => panic!("unexpected error {e}"),
            };
            assert!((spec.lambda1.norm() - 1.0).abs() < 1e-12);
            assert!((spec.lambda2.norm() - 1.0).abs() < 1e-12);
            assert!(spec.g1.dot(&spec.g2).norm() < 1e-12);
            assert!((spec.g1.norm() - 1.0).abs() < 1e-12);
            assert!((spec.g2.norm() - 1.0).abs() < 1e-12);
            assert!((0.0..=PI).contains(&spec.w));
            assert!(spec.l_m >= 0.0);

            // the two printed normalization forms must agree
            let b = mixing_numerator(phases.theta(), geom.beta());
            let cc = axis_offset(phases.phi(), phases.theta(), geom.beta());
            let product_form = 2.0 * spec.w.sin() * (spec.w.sin() + cc);
            assert!((spec.l_m - product_form).abs() < 1e-10);
            let _ = b;

            let g = build_kernel(&phases, &geom);
            for (lambda, vec) in [(spec.lambda1, spec.g1), (spec.lambda2, spec.g2)] {
                assert!(g.apply(&vec).sub(&vec.scaled(lambda)).norm() <= 1e-11);
            }
        }
    }

    #[test]
    fn spectrum_degenerate_configuration_is_an_error() {
        let phases = PhasePair::new(1e-12, 1e-12).unwrap();
        let geom = SearchGeometry::new(0.3, 0.0).unwrap();
        match eigen_decompose(&phases, &geom) {
            Err(Error::DegenerateKernel { sin_w }) => assert!(sin_w <= 1e-10),
            other => panic!("expected DegenerateKernel, got {other:?}"),
        }
        assert!(kernel_power_closed(&phases, &geom, 5).is_err());
    }

    #[test]
    fn closed_power_identity_and_single_step() {
        let phases = PhasePair::new(2.2, 0.9).unwrap();
        let geom = SearchGeometry::new(0.6, 5.1).unwrap();
        let p0 = kernel_power_closed(&phases, &geom, 0).unwrap();
        assert!(p0.max_abs_diff(&Mat2::identity()) < 1e-14);
        let p1 = kernel_power_closed(&phases, &geom, 1).unwrap();
        assert!(p1.max_abs_diff(&build_kernel(&phases, &geom)) < 1e-12);
    }

    #[test]
    fn closed_power_matches_iterated_at_m_137() {
        for (phases, geom) in sample_inputs().into_iter().step_by(7) {
            let closed = match kernel_power_closed(&phases, &geom, 137) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let iterated = kernel_power_iterative(&build_kernel(&phases, &geom), 137);
            assert!(closed.max_abs_diff(&iterated) < 1e-9);
        }
    }

    #[test]
    fn iterated_power_basics() {
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let swap = Mat2::new([[zero, one], [one, zero]]);
        assert_eq!(kernel_power_iterative(&swap, 0), Mat2::identity());
        assert_eq!(kernel_power_iterative(&swap, 2), Mat2::identity());
    }

    #[test]
    fn iterated_power_stays_unitary_at_m_10000() {
        let phases = PhasePair::new(1.1, 4.4).unwrap();
        let geom = SearchGeometry::new(0.51, 2.2).unwrap();
        let g = build_kernel(&phases, &geom);
        let p = kernel_power_iterative(&g, 10_000);
        assert!(p.unitarity_deviation() < 1e-9);
    }

    proptest! {
        #[test]
        fn kernel_is_unitary(
            phi in 1e-3f64..(TAU - 1e-3),
            theta in 1e-3f64..(TAU - 1e-3),
            beta in 1e-3f64..(FRAC_PI_2 - 1e-3),
            alpha in 0.0f64..TAU,
        ) {
            let phases = PhasePair::new(phi, theta).unwrap();
            let geom = SearchGeometry::new(beta, alpha).unwrap();
            prop_assert!(build_kernel(&phases, &geom).unitarity_deviation() < 1e-12);
        }

        #[test]
        fn total_eigenphase_is_phi_plus_theta(
            phi in 1e-2f64..(TAU - 1e-2),
            theta in 1e-2f64..(TAU - 1e-2),
            beta in 5e-2f64..(FRAC_PI_2 - 5e-2),
            alpha in 0.0f64..TAU,
        ) {
            let phases = PhasePair::new(phi, theta).unwrap();
            let geom = SearchGeometry::new(beta, alpha).unwrap();
            if let Ok(spec) = eigen_decompose(&phases, &geom) {
                let total = (spec.lambda1 * spec.lambda2).arg();
                let diff = crate::su2::wrap_angle(total - (phi + theta), -PI).abs();
                prop_assert!(diff < 1e-10);
            }
        }

        #[test]
        fn closed_and_iterated_powers_agree(
            phi in 1e-2f64..(TAU - 1e-2),
            theta in 1e-2f64..(TAU - 1e-2),
            beta in 5e-2f64..(FRAC_PI_2 - 5e-2),
            alpha in 0.0f64..TAU,
            m in 0u64..40,
        ) {
            let phases = PhasePair::new(phi, theta).unwrap();
            let geom = SearchGeometry::new(beta, alpha).unwrap();
            if let Ok(closed) = kernel_power_closed(&phases, &geom, m) {
                let iterated = kernel_power_iterative(&build_kernel(&phases, &geom), m);
                prop_assert!(closed.max_abs_diff(&iterated) < 1e-10);
            }
        }
    }
}
