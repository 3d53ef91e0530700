//! Full N-dimensional statevector simulation of the search.
//!
//! Everything the closed 2x2 machinery claims is re-derivable here by
//! brute force: build the two selective-phase operators as N x N unitaries,
//! iterate them on a statevector, and project onto the invariant plane
//! spanned by the marked state and U|eta>. This module is the end-to-end
//! ground truth the rest of the crate is checked against.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::kernel::build_kernel;
use crate::matching::MatchingInputs;
use crate::su2::{wrap_angle, InitialStateParams, PhasePair, SearchGeometry, Vec2};

/// Largest qubit count the matrix-free Walsh-Hadamard path accepts.
pub const MAX_QUBITS: usize = 14;
/// Largest dimension for dense unitaries.
pub const MAX_DENSE_DIM: usize = 4096;
/// Iteration cap for the statevector runner.
pub const MAX_ITERATIONS: u64 = 1_000_000;

const UNITARITY_TOLERANCE: f64 = 1e-10;
const SPAN_TOLERANCE: f64 = 1e-10;
const OVERLAP_EPSILON: f64 = 1e-12;

/// Normalized N-dimensional statevector, N >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct NState {
    amps: Vec<Complex64>,
}

impl NState {
    /// Validated constructor: N >= 2 and unit norm within 1e-12.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::domain(format!(
                "statevector needs at least 2 amplitudes, got {}",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "statevector norm {norm} deviates from 1 by more than 1e-12"
            )));
        }
        Ok(Self { amps })
    }

    /// Basis vector |index> in dimension n.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n < 2 || index >= n {
            return Err(Error::domain(format!(
                "basis state index {index} out of range for dimension {n}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Internal constructor for states produced by unitary evolution, whose
    /// norm is conserved up to rounding that can exceed the 1e-12 gate after
    /// very long runs.
    pub(crate) fn from_evolution(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>.
    pub fn inner(&self, other: &NState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// N x N unitary. Dense matrices carry their entries; the Walsh-Hadamard
/// transform and single-entry phase shifts stay matrix-free and apply in
/// O(N log N) and O(N).
#[derive(Debug, Clone)]
pub enum NUnitary {
    Dense(Array2<Complex64>),
    WalshHadamard { qubits: usize },
    SelectivePhase { dim: usize, target: usize, angle: f64 },
}

impl NUnitary {
    /// Validated dense constructor: square, 2 <= N <= 4096, U'U = I
    /// entrywise within `tolerance`.
    pub fn from_matrix_with_tolerance(matrix: Array2<Complex64>, tolerance: f64) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::domain(format!(
                "unitary must be square, got {rows} x {cols}"
            )));
        }
        if !(2..=MAX_DENSE_DIM).contains(&rows) {
            return Err(Error::domain(format!(
                "dense unitary dimension {rows} outside [2, {MAX_DENSE_DIM}]"
            )));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation.is_nan() || deviation > tolerance {
            return Err(Error::domain(format!(
                "matrix is not unitary: max |U'U - I| = {deviation:.3e} > {tolerance:.0e}"
            )));
        }
        Ok(Self::Dense(matrix))
    }

    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        Self::from_matrix_with_tolerance(matrix, UNITARITY_TOLERANCE)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows(),
            Self::WalshHadamard { qubits } => 1 << qubits,
            Self::SelectivePhase { dim, .. } => *dim,
        }
    }

    /// Entry (row, col), computed on demand for the matrix-free variants.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            Self::Dense(m) => m[(row, col)],
            Self::WalshHadamard { qubits } => {
                let n = 1usize << qubits;
                let sign = if (row & col).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                Complex64::new(sign / (n as f64).sqrt(), 0.0)
            }
            Self::SelectivePhase { target, angle, .. } => {
                if row == col {
                    if row == *target {
                        Complex64::from_polar(1.0, *angle)
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Materializes the entries; guarded by the dense dimension cap.
    pub fn to_dense(&self) -> Result<Array2<Complex64>> {
        let n = self.dim();
        if n > MAX_DENSE_DIM {
            return Err(Error::domain(format!(
                "refusing to materialize a {n} x {n} matrix"
            )));
        }
        Ok(match self {
            Self::Dense(m) => m.clone(),
            _ => Array2::from_shape_fn((n, n), |(r, c)| self.entry(r, c)),
        })
    }

    pub fn apply(&self, state: &NState) -> Result<NState> {
        if state.dim() != self.dim() {
            return Err(Error::domain(format!(
                "dimension mismatch: operator {} vs state {}",
                self.dim(),
                state.dim()
            )));
        }
        Ok(NState::from_evolution(self.apply_vec(&state.amps)))
    }

    fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            Self::Dense(m) => dense_matvec(m, v, false),
            Self::WalshHadamard { .. } => {
                let mut out = v.to_vec();
                fwht(&mut out);
                out
            }
            Self::SelectivePhase { target, angle, .. } => {
                let mut out = v.to_vec();
                out[*target] *= Complex64::from_polar(1.0, *angle);
                out
            }
        }
    }

    /// U' v. The Walsh-Hadamard transform is real symmetric, hence its own
    /// adjoint; a selective phase conjugates its angle.
    fn apply_adjoint_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            Self::Dense(m) => dense_matvec(m, v, true),
            Self::WalshHadamard { .. } => self.apply_vec(v),
            Self::SelectivePhase { target, angle, .. } => {
                let mut out = v.to_vec();
                out[*target] *= Complex64::from_polar(1.0, -angle);
                out
            }
        }
    }
}

/// Row-major matrix-vector product with a fixed accumulation order, so
/// results are bitwise reproducible. `adjoint` computes U' v instead.
fn dense_matvec(m: &Array2<Complex64>, v: &[Complex64], adjoint: bool) -> Vec<Complex64> {
    let n = v.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, out_i) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            let entry = if adjoint { m[(j, i)].conj() } else { m[(i, j)] };
            acc += entry * vj;
        }
        *out_i = acc;
    }
    out
}

/// In-place fast Walsh-Hadamard transform, normalized by 1/sqrt(N).
fn fwht(v: &mut [Complex64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for z in v.iter_mut() {
        *z *= scale;
    }
}

/// max |U'U - I| entrywise.
pub fn unitarity_deviation(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += m[(k, i)].conj() * m[(k, j)];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// The 2-D reduction parameters read off an N-dimensional configuration,
/// plus the second basis vector |II> spanning the invariant plane with the
/// marked state |I> = |tau>.
#[derive(Debug, Clone)]
pub struct ReductionData {
    pub beta: f64,
    pub alpha: f64,
    pub beta0: f64,
    pub u: f64,
    pub global_phase: f64,
    pub basis_ii: NState,
}

impl ReductionData {
    pub fn geometry(&self) -> Result<SearchGeometry> {
        SearchGeometry::new(self.beta, self.alpha)
    }

    pub fn initial_state(&self) -> Result<InitialStateParams> {
        InitialStateParams::new(self.beta0, self.u, self.global_phase)
    }

    pub fn matching_inputs(&self) -> Result<MatchingInputs> {
        Ok(MatchingInputs::new(self.geometry()?, self.initial_state()?))
    }
}

/// Walsh-Hadamard transform on `n_qubits` qubits: entries are +-1/sqrt(N)
/// by the parity of popcount(row AND col). Matrix-free.
pub fn build_walsh_hadamard(n_qubits: usize) -> Result<NUnitary> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::domain(format!(
            "qubit count {n_qubits} outside [1, {MAX_QUBITS}]"
        )));
    }
    Ok(NUnitary::WalshHadamard { qubits: n_qubits })
}

/// Haar-distributed random unitary, deterministic per seed.
///
/// Fills an N x N matrix with standard complex Gaussians (Box-Muller over
/// a ChaCha8 stream, so the bytes never depend on platform or library
/// internals) and orthonormalizes the columns by double-pass modified
/// Gram-Schmidt. The R factor of that decomposition has a positive real
/// diagonal by construction, which is exactly the phase convention that
/// makes Q Haar-distributed.
pub fn build_random_unitary(n: usize, seed: u64) -> Result<NUnitary> {
    if !(2..=MAX_DENSE_DIM).contains(&n) {
        return Err(Error::domain(format!(
            "random unitary dimension {n} outside [2, {MAX_DENSE_DIM}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = || {
        // Box-Muller; 1 - u keeps the log argument in (0, 1]
        let u: f64 = 1.0 - rng.gen::<f64>();
        let v: f64 = rng.gen();
        let r = (-2.0 * u.ln()).sqrt();
        Complex64::new(r * (TAU * v).cos(), r * (TAU * v).sin())
    };
    let mut m = Array2::from_shape_simple_fn((n, n), &mut gaussian);

    // double-pass modified Gram-Schmidt over columns
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    proj += m[(r, i)].conj() * m[(r, j)];
                }
                for r in 0..n {
                    let correction = proj * m[(r, i)];
                    m[(r, j)] -= correction;
                }
            }
        }
        let norm: f64 = (0..n).map(|r| m[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-150 {
            return Err(Error::domain(
                "Gaussian sample produced a numerically singular matrix".to_string(),
            ));
        }
        for r in 0..n {
            m[(r, j)] /= norm;
        }
    }
    NUnitary::from_matrix(m)
}

/// Identity with entry (target, target) replaced by e^{i angle}.
pub fn build_selective_phase(n: usize, target: usize, angle: f64) -> Result<NUnitary> {
    if n < 2 {
        return Err(Error::domain(format!("dimension {n} below 2")));
    }
    if target >= n {
        return Err(Error::domain(format!(
            "target index {target} out of range for dimension {n}"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::domain(format!("phase angle must be finite, got {angle}")));
    }
    Ok(NUnitary::SelectivePhase {
        dim: n,
        target,
        angle,
    })
}

/// Reads the 2-D reduction off (U, eta, tau, s): beta and alpha from the
/// overlap <tau|U|eta>, beta0 / u / global_phase from the components of s
/// in the plane spanned by |tau> and U|eta>.
pub fn extract_reduction(
    u: &NUnitary,
    eta: usize,
    tau: usize,
    s: &NState,
) -> Result<ReductionData> {
    let n = u.dim();
    check_indices(n, eta, tau, s)?;

    let column = u.apply(&NState::basis(n, eta)?)?;
    let overlap = column.amplitude(tau);
    let a = overlap.norm();
    if a <= OVERLAP_EPSILON || a >= 1.0 - OVERLAP_EPSILON {
        return Err(Error::DegenerateOverlap { overlap: a });
    }
    let beta = a.asin();
    let alpha = wrap_angle(overlap.arg(), 0.0);

    // |II> = (U|eta> - U_te |tau>) / l, unit and orthogonal to |tau>
    let l = (1.0 - a * a).sqrt();
    let mut ii = column.amplitudes().to_vec();
    ii[tau] = Complex64::new(0.0, 0.0);
    for z in ii.iter_mut() {
        *z /= l;
    }
    let basis_ii = NState::from_evolution(ii);

    let c_tau = s.amplitude(tau);
    let c_ii = basis_ii.inner(s);
    let residual = span_residual(s, tau, &basis_ii, c_tau, c_ii);
    if residual > SPAN_TOLERANCE {
        return Err(Error::OutOfSpan { residual });
    }

    let beta0 = c_tau.norm().clamp(0.0, 1.0).asin();
    let global_phase = if c_tau.norm() > OVERLAP_EPSILON {
        wrap_angle(c_tau.arg(), 0.0)
    } else {
        wrap_angle(c_ii.arg(), 0.0)
    };
    let u_phase = if c_ii.norm() > OVERLAP_EPSILON {
        wrap_angle(c_ii.arg() - global_phase, 0.0)
    } else {
        0.0
    };

    Ok(ReductionData {
        beta,
        alpha,
        beta0,
        u: u_phase,
        global_phase,
        basis_ii,
    })
}

/// || s - <tau|s>|tau> - <II|s>|II> ||.
fn span_residual(
    s: &NState,
    tau: usize,
    basis_ii: &NState,
    c_tau: Complex64,
    c_ii: Complex64,
) -> f64 {
    let mut acc = 0.0;
    for (k, (sk, iik)) in s
        .amplitudes()
        .iter()
        .zip(basis_ii.amplitudes())
        .enumerate()
    {
        let mut recon = c_ii * iik;
        if k == tau {
            recon += c_tau;
        }
        acc += (sk - recon).norm_sqr();
    }
    acc.sqrt()
}

fn check_indices(n: usize, eta: usize, tau: usize, s: &NState) -> Result<()> {
    if eta >= n || tau >= n {
        return Err(Error::domain(format!(
            "indices eta = {eta}, tau = {tau} out of range for dimension {n}"
        )));
    }
    if s.dim() != n {
        return Err(Error::domain(format!(
            "state dimension {} does not match operator dimension {n}",
            s.dim()
        )));
    }
    Ok(())
}

/// One iteration of G = -G_eta G_tau on a raw amplitude vector:
/// phase phi on |tau>, then U S_eta(theta) U', then the global minus sign.
fn step(
    u: &NUnitary,
    eta: usize,
    tau: usize,
    phases: &PhasePair,
    amps: &mut Vec<Complex64>,
) {
    amps[tau] *= Complex64::from_polar(1.0, phases.phi());
    let mut rotated = u.apply_adjoint_vec(amps);
    rotated[eta] *= Complex64::from_polar(1.0, phases.theta());
    *amps = u.apply_vec(&rotated);
    for z in amps.iter_mut() {
        *z = -*z;
    }
}

/// Applies (-G_eta G_tau)^m to s by m successive matrix-vector products,
/// never by matrix powers. Keeping the global minus sign makes the N-dim
/// phases directly comparable to the 2-D convention.
pub fn run_search(
    u: &NUnitary,
    eta: usize,
    tau: usize,
    s: &NState,
    phases: &PhasePair,
    m: u64,
) -> Result<NState> {
    check_indices(u.dim(), eta, tau, s)?;
    if m > MAX_ITERATIONS {
        return Err(Error::domain(format!(
            "iteration count {m} beyond the cap of {MAX_ITERATIONS}"
        )));
    }
    let mut amps = s.amplitudes().to_vec();
    for _ in 0..m {
        step(u, eta, tau, phases, &mut amps);
    }
    Ok(NState::from_evolution(amps))
}

/// |<tau|state>|^2. The index must be within the state's dimension.
pub fn success_probability(state: &NState, tau: usize) -> f64 {
    state.amplitude(tau).norm_sqr()
}

/// Outcome of checking the N-dim run against the 2-D kernel step by step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison2D {
    /// max over k <= m of || P state_k - (2-D state)_k || with P the
    /// projection onto span{|tau>, |II>}
    pub max_deviation: f64,
    /// max over k <= m of the out-of-span norm of state_k
    pub max_leakage: f64,
}

/// Runs the N-dim evolution and the 2-D kernel side by side from the same
/// starting point and records the worst disagreement and span leakage.
pub fn compare_with_2d(
    u: &NUnitary,
    eta: usize,
    tau: usize,
    s: &NState,
    phases: &PhasePair,
    m: u64,
) -> Result<Comparison2D> {
    if m > MAX_ITERATIONS {
        return Err(Error::domain(format!(
            "iteration count {m} beyond the cap of {MAX_ITERATIONS}"
        )));
    }
    let reduction = extract_reduction(u, eta, tau, s)?;
    let geometry = reduction.geometry()?;
    let kernel = build_kernel(phases, &geometry);

    let mut amps = s.amplitudes().to_vec();
    let mut plane = Vec2::new(s.amplitude(tau), reduction.basis_ii.inner(s));
    let mut worst = Comparison2D {
        max_deviation: 0.0,
        max_leakage: 0.0,
    };
    let mut record = |amps: &[Complex64], plane: &Vec2| {
        let state = NState::from_evolution(amps.to_vec());
        let c_tau = state.amplitude(tau);
        let c_ii = reduction.basis_ii.inner(&state);
        let deviation = ((c_tau - plane.a1).norm_sqr() + (c_ii - plane.a2).norm_sqr()).sqrt();
        let leakage = span_residual(&state, tau, &reduction.basis_ii, c_tau, c_ii);
        worst.max_deviation = worst.max_deviation.max(deviation);
        worst.max_leakage = worst.max_leakage.max(leakage);
    };
    record(&amps, &plane);
    for _ in 0..m {
        step(u, eta, tau, phases, &mut amps);
        plane = kernel.apply(&plane);
        record(&amps, &plane);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan_search, Strategy};
    use std::f64::consts::{FRAC_PI_6, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// In-span state e^{ig}(sin(b0)|tau> + cos(b0) e^{iu}|II>) built
    /// directly from U's eta column.
    fn in_span_state(
        u: &NUnitary,
        eta: usize,
        tau: usize,
        beta0: f64,
        u_phase: f64,
        global: f64,
    ) -> NState {
        let n = u.dim();
        let column = u.apply(&NState::basis(n, eta).unwrap()).unwrap();
        let overlap = column.amplitude(tau);
        let l = (1.0 - overlap.norm_sqr()).sqrt();
        let mut amps = vec![c(0.0, 0.0); n];
        let lead = Complex64::from_polar(1.0, global);
        for (k, col_k) in column.amplitudes().iter().enumerate() {
            let ii_k = if k == tau {
                c(0.0, 0.0)
            } else {
                col_k / l
            };
            amps[k] = lead * (beta0.cos() * Complex64::from_polar(1.0, u_phase) * ii_k);
            if k == tau {
                amps[k] += lead * beta0.sin();
            }
        }
        NState::new(amps).unwrap()
    }

    #[test]
    fn state_constructor_enforces_norm_and_size() {
        assert!(NState::new(vec![c(1.0, 0.0)]).is_err());
        assert!(NState::new(vec![c(0.7, 0.0), c(0.7, 0.0)]).is_err());
        let s = NState::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert_eq!(s.dim(), 2);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn walsh_hadamard_hand_matrices() {
        let w1 = build_walsh_hadamard(1).unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        for (row, col, want) in [(0, 0, r), (0, 1, r), (1, 0, r), (1, 1, -r)] {
            assert!((w1.entry(row, col) - c(want, 0.0)).norm() < 1e-15);
        }

        let w2 = build_walsh_hadamard(2).unwrap();
        for col in 0..4 {
            assert!((w2.entry(0, col) - c(0.5, 0.0)).norm() < 1e-15, "row 0 all +1/2");
        }
        for row in 0..4usize {
            for col in 0..4usize {
                let parity = (row & col).count_ones() % 2;
                let want = if parity == 0 { 0.5 } else { -0.5 };
                assert!((w2.entry(row, col) - c(want, 0.0)).norm() < 1e-15);
            }
        }

        assert!(build_walsh_hadamard(0).is_err());
        assert!(build_walsh_hadamard(15).is_err());
    }

    #[test]
    fn walsh_hadamard_is_self_inverse() {
        for qubits in [1, 3, 6] {
            let w = build_walsh_hadamard(qubits).unwrap();
            let n = w.dim();
            let mut amps: Vec<Complex64> = (0..n)
                .map(|k| c((k as f64 + 1.0).sin(), (k as f64).cos()))
                .collect();
            let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in amps.iter_mut() {
                *z /= norm;
            }
            let s = NState::new(amps.clone()).unwrap();
            let twice = w.apply(&w.apply(&s).unwrap()).unwrap();
            let worst = twice
                .amplitudes()
                .iter()
                .zip(&amps)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-12, "W^2 != I at {qubits} qubits: {worst}");
        }
    }

    #[test]
    fn fast_transform_matches_entrywise_matrix() {
        let w = build_walsh_hadamard(3).unwrap();
        let dense = NUnitary::Dense(w.to_dense().unwrap());
        let s = in_span_state(&w, 0, 5, 0.3, 1.1, 0.2);
        let fast = w.apply(&s).unwrap();
        let slow = dense.apply(&s).unwrap();
        for (a, b) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        for n in [2, 3, 17, 64] {
            let u = build_random_unitary(n, 42).unwrap();
            let m = u.to_dense().unwrap();
            assert!(unitarity_deviation(&m) <= 1e-10, "n = {n}");
        }
        let a = build_random_unitary(9, 7).unwrap().to_dense().unwrap();
        let b = build_random_unitary(9, 7).unwrap().to_dense().unwrap();
        assert_eq!(a, b, "same seed must reproduce bitwise");
        let other = build_random_unitary(9, 8).unwrap().to_dense().unwrap();
        assert_ne!(a, other);

        assert!(build_random_unitary(1, 0).is_err());
        assert!(build_random_unitary(4097, 0).is_err());
    }

    #[test]
    fn haar_moment_for_qubit_dimension() {
        // E |<tau|U|eta>|^2 = 1/N for Haar; N = 2 gives 1/2
        let mut mean = 0.0;
        for seed in 0..200 {
            let u = build_random_unitary(2, seed).unwrap();
            mean += u.entry(1, 0).norm_sqr();
        }
        mean /= 200.0;
        assert!((mean - 0.5).abs() < 0.05, "Haar moment off: {mean}");
    }

    #[test]
    fn selective_phase_examples() {
        let refl = build_selective_phase(3, 1, PI).unwrap();
        let d = refl.to_dense().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = match (i, j) {
                    (1, 1) => c(-1.0, 0.0),
                    (a, b) if a == b => c(1.0, 0.0),
                    _ => c(0.0, 0.0),
                };
                assert!((d[(i, j)] - want).norm() < 1e-15);
            }
        }
        let near_identity = build_selective_phase(3, 2, 1e-14).unwrap();
        let d = near_identity.to_dense().unwrap();
        assert!((d[(2, 2)] - c(1.0, 0.0)).norm() < 1e-13);

        assert!(build_selective_phase(3, 3, 1.0).is_err());
        assert!(build_selective_phase(1, 0, 1.0).is_err());
    }

    #[test]
    fn conjugated_phase_matches_rank_one_update() {
        // U S_eta(theta) U' = I + (e^{i theta} - 1) (U|eta>)(U|eta>)'
        let n = 5;
        let theta = 2.3;
        let u = build_random_unitary(n, 11).unwrap();
        let column = u.apply(&NState::basis(n, 2).unwrap()).unwrap();
        let phase = build_selective_phase(n, 2, theta).unwrap();

        let factor = Complex64::from_polar(1.0, theta) - 1.0;
        for probe in 0..n {
            let e = NState::basis(n, probe).unwrap();
            let lhs = u
                .apply(&NState::from_evolution(
                    phase.apply_vec(&u.apply_adjoint_vec(e.amplitudes())),
                ))
                .unwrap();
            let coeff = column.amplitude(probe).conj();
            for (k, lhs_k) in lhs.amplitudes().iter().enumerate() {
                let mut want = factor * coeff * column.amplitude(k);
                if k == probe {
                    want += 1.0;
                }
                assert!((lhs_k - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn extraction_reads_off_walsh_hadamard_angles() {
        let w4 = build_walsh_hadamard(2).unwrap();
        let s = w4.apply(&NState::basis(4, 0).unwrap()).unwrap();
        let red = extract_reduction(&w4, 0, 2, &s).unwrap();
        assert!((red.beta - FRAC_PI_6).abs() < 1e-12, "arcsin(1/2)");
        assert!((red.beta0 - FRAC_PI_6).abs() < 1e-12);
        assert!(red.alpha.abs() < 1e-12);
        assert!(red.u.abs() < 1e-12);
        assert!(red.global_phase.abs() < 1e-12);

        let w16 = build_walsh_hadamard(4).unwrap();
        let s = w16.apply(&NState::basis(16, 0).unwrap()).unwrap();
        let red = extract_reduction(&w16, 0, 5, &s).unwrap();
        assert!((red.beta - 0.25f64.asin()).abs() < 1e-12, "arcsin(1/4)");
    }

    #[test]
    fn extraction_round_trips_generic_states() {
        let u = build_random_unitary(12, 3).unwrap();
        for (beta0, u_phase, global) in [(0.4, 1.3, 0.7), (0.0, 0.0, 2.2), (1.4, 5.9, 0.0)] {
            let s = in_span_state(&u, 1, 7, beta0, u_phase, global);
            let red = extract_reduction(&u, 1, 7, &s).unwrap();
            assert!((red.beta0 - beta0).abs() < 1e-10);
            if beta0 > 0.0 {
                assert!((wrap_angle(red.u - u_phase, -PI)).abs() < 1e-9);
                assert!((wrap_angle(red.global_phase - global, -PI)).abs() < 1e-9);
            }

            // reconstruction against the raw amplitudes
            let lead = Complex64::from_polar(1.0, red.global_phase);
            let mut worst: f64 = 0.0;
            for (k, sk) in s.amplitudes().iter().enumerate() {
                let mut want = lead
                    * red.beta0.cos()
                    * Complex64::from_polar(1.0, red.u)
                    * red.basis_ii.amplitude(k);
                if k == 7 {
                    want += lead * red.beta0.sin();
                }
                worst = worst.max((sk - want).norm());
            }
            assert!(worst < 1e-10, "reconstruction drift {worst}");
        }
    }

    #[test]
    fn extraction_rejects_degenerate_and_out_of_span() {
        // identity has <tau|U|eta> = 0 for tau != eta and 1 for tau = eta
        let eye = NUnitary::from_matrix(Array2::from_shape_fn((4, 4), |(i, j)| {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
        .unwrap();
        let s = NState::basis(4, 0).unwrap();
        assert!(matches!(
            extract_reduction(&eye, 0, 2, &s),
            Err(Error::DegenerateOverlap { .. })
        ));
        assert!(matches!(
            extract_reduction(&eye, 1, 1, &s),
            Err(Error::DegenerateOverlap { .. })
        ));

        let w = build_walsh_hadamard(2).unwrap();
        let mut amps = in_span_state(&w, 0, 2, 0.5, 0.3, 0.0)
            .amplitudes()
            .to_vec();
        // push weight onto a direction orthogonal to the span: |1> - |3>
        // has equal W-column components, so subtracting them cancels in II
        amps[1] += c(0.05, 0.0);
        amps[3] -= c(0.05, 0.0);
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in amps.iter_mut() {
            *z /= norm;
        }
        let bad = NState::new(amps).unwrap();
        assert!(matches!(
            extract_reduction(&w, 0, 2, &bad),
            Err(Error::OutOfSpan { .. })
        ));
    }

    #[test]
    fn classic_n4_run_reaches_certainty_with_zero_phase() {
        let w = build_walsh_hadamard(2).unwrap();
        let s = w.apply(&NState::basis(4, 0).unwrap()).unwrap();
        let phases = PhasePair::new(PI, PI).unwrap();
        let m0 = run_search(&w, 0, 3, &s, &phases, 0).unwrap();
        assert_eq!(m0.amplitudes(), s.amplitudes(), "m = 0 leaves s untouched");

        let out = run_search(&w, 0, 3, &s, &phases, 1).unwrap();
        assert!((success_probability(&out, 3) - 1.0).abs() < 1e-12);
        // final phase for the self-search quartet is 0: amplitude exactly +1
        assert!((out.amplitude(3) - c(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn walsh_n16_pipeline_hits_planned_certainty() {
        let w = build_walsh_hadamard(4).unwrap();
        let s = w.apply(&NState::basis(16, 0).unwrap()).unwrap();
        let red = extract_reduction(&w, 0, 11, &s).unwrap();
        let plan = plan_search(&red.matching_inputs().unwrap(), Strategy::Optimal).unwrap();
        assert_eq!(plan.m, 3);
        assert!((plan.phases.phi() - 2.195057699090115).abs() < 1e-9);
        assert!(plan.exact);

        let out = run_search(&w, 0, 11, &s, &plan.phases, plan.m).unwrap();
        assert!((success_probability(&out, 11) - 1.0).abs() < 1e-9);
        let achieved = out.amplitude(11).arg();
        assert!((wrap_angle(achieved - plan.delta, -PI)).abs() < 1e-9);
    }

    #[test]
    fn iterates_conserve_norm() {
        let u = build_random_unitary(32, 19).unwrap();
        let s = in_span_state(&u, 3, 20, 0.8, 2.0, 1.0);
        let phases = PhasePair::new(1.9, 4.4).unwrap();
        for m in [1, 10, 1000] {
            let out = run_search(&u, 3, 20, &s, &phases, m).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-11, "m = {m}");
        }
        assert!(run_search(&u, 3, 20, &s, &phases, MAX_ITERATIONS + 1).is_err());
    }

    #[test]
    fn two_dimensional_reduction_tracks_full_simulation() {
        let u = build_random_unitary(16, 5).unwrap();
        let s = in_span_state(&u, 2, 9, 0.6, 0.9, 0.4);
        let phases = PhasePair::new(2.7, 1.2).unwrap();
        let report = compare_with_2d(&u, 2, 9, &s, &phases, 50).unwrap();
        assert!(report.max_deviation < 1e-10, "{report:?}");
        assert!(report.max_leakage < 1e-12, "{report:?}");

        let trivial = compare_with_2d(&u, 2, 9, &s, &phases, 0).unwrap();
        assert!(trivial.max_deviation == 0.0);
    }

    #[test]
    fn larger_dimension_keeps_reduction_tight() {
        let u = build_random_unitary(64, 23).unwrap();
        let s = u.apply(&NState::basis(64, 0).unwrap()).unwrap();
        let phases = PhasePair::new(0.8, 5.1).unwrap();
        let report = compare_with_2d(&u, 0, 40, &s, &phases, 200).unwrap();
        assert!(report.max_deviation < 1e-9, "{report:?}");
        assert!(report.max_leakage < 1e-12, "{report:?}");
    }
}
