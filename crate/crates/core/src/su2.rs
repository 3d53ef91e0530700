//! Two-dimensional complex Hilbert-space arithmetic and the validated
//! angle parameters shared by the whole crate.
//!
//! The search analysis lives in the plane spanned by the marked state
//! |I> = |tau> and its orthogonal complement |II> inside span{|tau>, U|eta>}.
//! Everything here is a plain value type; all operations are pure.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// e^{i angle} as a complex number.
#[inline]
pub fn cis(angle: f64) -> Complex64 {
    Complex64::cis(angle)
}

fn require_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}

/// Wraps `x` into the half-open interval [lo, lo + 2pi).
///
/// Idempotent: values already in range are returned bit-for-bit unchanged.
pub fn wrap_angle(x: f64, lo: f64) -> f64 {
    assert!(x.is_finite() && lo.is_finite(), "wrap_angle: non-finite input");
    if x >= lo && x < lo + TAU {
        return x;
    }
    let mut y = (x - lo).rem_euclid(TAU) + lo;
    // rem_euclid can round up to the full period when x - lo is a tiny
    // negative number; fold that case back to the lower endpoint.
    if y >= lo + TAU {
        y = lo;
    }
    y
}

/// Amplitudes on the ordered basis {|I>, |II>}, with |I> the marked state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    /// Amplitude on |I> = |tau>.
    pub a1: Complex64,
    /// Amplitude on |II>.
    pub a2: Complex64,
}

impl Vec2 {
    pub fn new(a1: Complex64, a2: Complex64) -> Self {
        assert!(
            a1.re.is_finite() && a1.im.is_finite() && a2.re.is_finite() && a2.im.is_finite(),
            "Vec2: non-finite amplitude"
        );
        Vec2 { a1, a2 }
    }

    pub fn norm_sq(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Hermitian inner product <self|other>.
    pub fn dot(&self, other: &Vec2) -> Complex64 {
        self.a1.conj() * other.a1 + self.a2.conj() * other.a2
    }

    pub fn scaled(&self, z: Complex64) -> Vec2 {
        Vec2::new(self.a1 * z, self.a2 * z)
    }

    pub fn sub(&self, other: &Vec2) -> Vec2 {
        Vec2::new(self.a1 - other.a1, self.a2 - other.a2)
    }
}

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub rows: [[Complex64; 2]; 2],
}

impl Mat2 {
    pub fn new(rows: [[Complex64; 2]; 2]) -> Self {
        for row in &rows {
            for z in row {
                assert!(z.re.is_finite() && z.im.is_finite(), "Mat2: non-finite entry");
            }
        }
        Mat2 { rows }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2::new([[one, zero], [zero, one]])
    }

    /// Matrix product self * other.
    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.rows;
        let b = &other.rows;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2::new(out)
    }

    /// Matrix-vector product self * v.
    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let a = &self.rows;
        Vec2::new(
            a[0][0] * v.a1 + a[0][1] * v.a2,
            a[1][0] * v.a1 + a[1][1] * v.a2,
        )
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Mat2 {
        let a = &self.rows;
        Mat2::new([
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ])
    }

    pub fn scaled(&self, z: Complex64) -> Mat2 {
        let a = &self.rows;
        Mat2::new([[a[0][0] * z, a[0][1] * z], [a[1][0] * z, a[1][1] * z]])
    }

    /// Largest entrywise |self - other|.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.rows[i][j] - other.rows[i][j]).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation of M-dagger * M from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        self.dagger().mul(self).max_abs_diff(&Mat2::identity())
    }
}

/// The two rotation phases (phi, theta) of one search iteration.
///
/// Both are restricted to the open interval (0, 2pi); at the endpoints the
/// iteration degenerates to a global phase and the spectrum collapses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    phi: f64,
    theta: f64,
}

impl PhasePair {
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        let phi = require_finite("phi", phi)?;
        let theta = require_finite("theta", theta)?;
        for (name, v) in [("phi", phi), ("theta", theta)] {
            if !(v > 0.0 && v < TAU) {
                return Err(Error::domain(format!(
                    "{name} must lie in the open interval (0, 2pi), got {v}"
                )));
            }
        }
        Ok(PhasePair { phi, theta })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Overlap geometry of the search: U_{tau,eta} = sin(beta) e^{i alpha}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGeometry {
    beta: f64,
    alpha: f64,
}

impl SearchGeometry {
    pub fn new(beta: f64, alpha: f64) -> Result<Self> {
        let beta = require_finite("beta", beta)?;
        let alpha = require_finite("alpha", alpha)?;
        if !(beta > 0.0 && beta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::domain(format!(
                "beta must lie in the open interval (0, pi/2), got {beta}"
            )));
        }
        Ok(SearchGeometry {
            beta,
            alpha: wrap_angle(alpha, 0.0),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Parameters of the initial state
/// e^{i g} (sin(beta0)|I> + cos(beta0) e^{iu}|II>).
///
/// The overall factor e^{i g} (`global_phase`) is tracked explicitly so
/// that states whose marked amplitude is not real-positive still fit the
/// parametrization and final-phase predictions stay checkable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialStateParams {
    beta0: f64,
    u: f64,
    global_phase: f64,
}

impl InitialStateParams {
    pub fn new(beta0: f64, u: f64, global_phase: f64) -> Result<Self> {
        let beta0 = require_finite("beta0", beta0)?;
        let u = require_finite("u", u)?;
        let global_phase = require_finite("global_phase", global_phase)?;
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&beta0) {
            return Err(Error::domain(format!(
                "beta0 must lie in the closed interval [0, pi/2], got {beta0}"
            )));
        }
        Ok(InitialStateParams {
            beta0,
            u: wrap_angle(u, 0.0),
            global_phase: wrap_angle(global_phase, 0.0),
        })
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    /// The reconstructed two-level state, global phase included.
    pub fn state_vector(&self) -> Vec2 {
        let g = cis(self.global_phase);
        Vec2::new(
            g * self.beta0.sin(),
            g * cis(self.u) * self.beta0.cos(),
        )
    }
}
