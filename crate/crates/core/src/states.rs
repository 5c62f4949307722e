//! Kets, Bell pairs, and density matrices for up to three polarization qubits.
//!
//! Conventions used everywhere: |0> = |H>, |1> = |V>, tensor components are
//! ordered lexicographically, and the lower-numbered photon is the most
//! significant label. An 8-dimensional amplitude vector is therefore indexed
//! by the bit pattern (q1 q2 q3).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for normalization, Hermiticity, and unitarity checks.
pub const TOL: f64 = 1e-12;

/// Eigenvalues of a density matrix may sit this far below zero before the
/// matrix is rejected as non-positive.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Constructors accept this much drift in the squared norm and then snap the
/// state back to unit length.
const NORM_SLACK: f64 = 1e-9;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn check_dim(dim: usize) -> Result<()> {
    if matches!(dim, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Normalized ket over 1, 2, or 3 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from amplitudes that are already normalized to within 1e-9,
    /// snapping them to exact unit norm.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        if !all_finite(&amps) {
            return Err(Error::NonFinite);
        }
        let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if n2 == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if (n2 - 1.0).abs() > NORM_SLACK {
            return Err(Error::NotNormalized(n2));
        }
        let mut state = PureState { amps };
        state.renormalize();
        Ok(state)
    }

    /// Builds a state from any nonzero amplitude vector by normalizing it.
    pub fn from_unnormalized(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        if !all_finite(&amps) {
            return Err(Error::NonFinite);
        }
        let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let mut state = PureState { amps };
        state.renormalize();
        Ok(state)
    }

    /// Computational basis state |index> of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::DimensionMismatch(index, dim));
        }
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = cr(1.0);
        Ok(PureState { amps })
    }

    /// Single qubit a0|0> + a1|1>.
    pub fn qubit(a0: Complex64, a1: Complex64) -> Result<Self> {
        Self::new(vec![a0, a1])
    }

    /// Haar-random state: complex Gaussian amplitudes, normalized.
    pub fn haar_random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im)
            })
            .collect();
        Self::from_unnormalized(amps)
    }

    /// Trusted constructor for amplitudes known to be unit-norm by algebra.
    pub(crate) fn from_raw(amps: Vec<Complex64>) -> Self {
        debug_assert!(matches!(amps.len(), 2 | 4 | 8));
        PureState { amps }
    }

    fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        for a in &mut self.amps {
            *a /= norm;
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product <self|other>.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(other.dim(), self.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Tensor product a (x) b; the product dimension must stay within 8.
pub fn kron(a: &PureState, b: &PureState) -> Result<PureState> {
    let dim = a.dim() * b.dim();
    if dim > 8 {
        return Err(Error::DimensionOverflow(a.dim(), b.dim()));
    }
    let mut amps = Vec::with_capacity(dim);
    for x in a.amps() {
        for y in b.amps() {
            amps.push(x * y);
        }
    }
    Ok(PureState::from_raw(amps))
}

/// |<a|b>|^2 for states of equal dimension.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// 2x2 unitary acting on one polarization qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    /// Validates U!U = I to within 1e-12.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        for row in &m {
            if !all_finite(row) {
                return Err(Error::NonFinite);
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let mut s = c(0.0, 0.0);
                for row in &m {
                    s += row[i].conj() * row[j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                if (s - cr(want)).norm() > TOL {
                    return Err(Error::NotUnitary);
                }
            }
        }
        Ok(Unitary2 { m })
    }

    pub fn identity() -> Self {
        Unitary2 {
            m: [[cr(1.0), cr(0.0)], [cr(0.0), cr(1.0)]],
        }
    }

    pub fn pauli_x() -> Self {
        Unitary2 {
            m: [[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]],
        }
    }

    pub fn pauli_z() -> Self {
        Unitary2 {
            m: [[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]],
        }
    }

    /// The product X.Z = [[0, -1], [1, 0]].
    pub fn pauli_xz() -> Self {
        Unitary2 {
            m: [[cr(0.0), cr(-1.0)], [cr(1.0), cr(0.0)]],
        }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    /// U|s> for a single-qubit state.
    pub fn apply(&self, s: &PureState) -> Result<PureState> {
        if s.dim() != 2 {
            return Err(Error::DimensionMismatch(s.dim(), 2));
        }
        let a0 = self.m[0][0] * s.amp(0) + self.m[0][1] * s.amp(1);
        let a1 = self.m[1][0] * s.amp(0) + self.m[1][1] * s.amp(1);
        Ok(PureState::from_raw(vec![a0, a1]))
    }

    /// U rho U! for a single-qubit density matrix.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(rho.dim(), 2));
        }
        let mut out = vec![c(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                let mut s = c(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        s += self.m[i][k] * rho.entry(k, l) * self.m[j][l].conj();
                    }
                }
                out[i * 2 + j] = s;
            }
        }
        Ok(DensityMatrix::from_raw(2, out))
    }
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Canonical ket: Phi+- = (|00> +- |11>)/sqrt2, Psi+- = (|01> +- |10>)/sqrt2.
    pub fn vector(self) -> PureState {
        let r = cr(std::f64::consts::FRAC_1_SQRT_2);
        let z = c(0.0, 0.0);
        let amps = match self {
            BellState::PhiPlus => vec![r, z, z, r],
            BellState::PhiMinus => vec![r, z, z, -r],
            BellState::PsiPlus => vec![z, r, r, z],
            BellState::PsiMinus => vec![z, r, -r, z],
        };
        PureState::from_raw(amps)
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "PhiPlus",
            BellState::PhiMinus => "PhiMinus",
            BellState::PsiPlus => "PsiPlus",
            BellState::PsiMinus => "PsiMinus",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Convenience alias for [`BellState::vector`].
pub fn bell_vector(b: BellState) -> PureState {
    b.vector()
}

/// One Bell-basis branch of a three-photon ket: the unnormalized photon-3
/// amplitude pair left after projecting photons 1 and 2 onto `bell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobBranch {
    pub bell: BellState,
    pub amps: [Complex64; 2],
}

impl BobBranch {
    pub fn norm_sqr(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[1].norm_sqr()
    }

    /// Branch renormalized into a proper single-qubit state.
    pub fn normalized(&self) -> Result<PureState> {
        PureState::from_unnormalized(self.amps.to_vec())
    }
}

/// Expands an 8-dimensional ket in the Bell basis of photons 1 and 2.
///
/// Branch amplitudes are `<bell, x|s>` for x in {0, 1}; their squared norms
/// sum to 1 and [`bell_reassemble`] inverts the expansion exactly.
pub fn bell_decompose(s: &PureState) -> Result<[BobBranch; 4]> {
    if s.dim() != 8 {
        return Err(Error::DimensionMismatch(s.dim(), 8));
    }
    let mut out = [BobBranch {
        bell: BellState::PhiPlus,
        amps: [c(0.0, 0.0); 2],
    }; 4];
    for (slot, bell) in BellState::ALL.into_iter().enumerate() {
        let b = bell.vector();
        let mut amps = [c(0.0, 0.0); 2];
        for (x, amp) in amps.iter_mut().enumerate() {
            let mut acc = c(0.0, 0.0);
            for ij in 0..4 {
                acc += b.amp(ij).conj() * s.amp(ij * 2 + x);
            }
            *amp = acc;
        }
        out[slot] = BobBranch { bell, amps };
    }
    Ok(out)
}

/// Rebuilds the three-photon ket as the sum over |bell> (x) branch.
pub fn bell_reassemble(branches: &[BobBranch; 4]) -> Result<PureState> {
    let mut amps = vec![c(0.0, 0.0); 8];
    for branch in branches {
        let b = branch.bell.vector();
        for ij in 0..4 {
            for x in 0..2 {
                amps[ij * 2 + x] += b.amp(ij) * branch.amps[x];
            }
        }
    }
    PureState::new(amps)
}

/// Hermitian, trace-one, positive semidefinite matrix over 1 to 3 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-12), and eigenvalues
    /// above -1e-10.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::BadEntryCount {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if !all_finite(&entries) {
            return Err(Error::NonFinite);
        }
        let rho = DensityMatrix { dim, entries };
        rho.validate()?;
        Ok(rho)
    }

    /// |s><s|.
    pub fn from_pure(s: &PureState) -> Self {
        let dim = s.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(s.amp(i) * s.amp(j).conj());
            }
        }
        DensityMatrix { dim, entries }
    }

    /// Trusted constructor for matrices valid by construction.
    pub(crate) fn from_raw(dim: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        DensityMatrix { dim, entries }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = cr(1.0 / dim as f64);
        }
        Ok(DensityMatrix { dim, entries })
    }

    /// Convex mixture of equal-dimension density matrices; weights must be
    /// nonnegative and sum to 1 within 1e-9.
    pub fn mix(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let dim = match parts.first() {
            Some((_, rho)) => rho.dim,
            None => return Err(Error::ZeroNorm),
        };
        let mut total = 0.0;
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        for (w, rho) in parts {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::NotPositive(*w));
            }
            if rho.dim != dim {
                return Err(Error::DimensionMismatch(rho.dim, dim));
            }
            total += w;
            for (dst, src) in entries.iter_mut().zip(&rho.entries) {
                *dst += cr(*w) * src;
            }
        }
        if (total - 1.0).abs() > NORM_SLACK {
            return Err(Error::BadTrace(total));
        }
        Ok(DensityMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Real part of the trace; diagonals of a Hermitian matrix are real.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    /// tr(rho^2); 1 for pure states, 1/dim for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self.entry(i, j) * self.entry(j, i)).re;
            }
        }
        acc
    }

    pub fn validate(&self) -> Result<()> {
        if !all_finite(&self.entries) {
            return Err(Error::NonFinite);
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                if (self.entry(i, j) - self.entry(j, i).conj()).norm() > TOL {
                    return Err(Error::NotHermitian);
                }
            }
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TOL {
            return Err(Error::BadTrace(tr));
        }
        let min = self
            .eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < EIGENVALUE_FLOOR {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    fn to_na(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j))
    }

    /// Eigenvalues sorted in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.to_na().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        vals
    }

    /// (eigenvalue, eigenvector) pairs sorted by descending eigenvalue, with
    /// negative rounding noise clamped to zero.
    pub fn eigen_pairs(&self) -> Vec<(f64, PureState)> {
        let eig = self.to_na().symmetric_eigen();
        let mut pairs: Vec<(f64, PureState)> = (0..self.dim)
            .map(|k| {
                let val = eig.eigenvalues[k].max(0.0);
                let vec: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
                let state = PureState::from_unnormalized(vec)
                    .expect("eigenvectors of a Hermitian matrix are nonzero");
                (val, state)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
        pairs
    }

    /// <ket|rho|ket>, the overlap with a pure state.
    pub fn expectation(&self, ket: &PureState) -> Result<f64> {
        if ket.dim() != self.dim {
            return Err(Error::DimensionMismatch(ket.dim(), self.dim));
        }
        let mut acc = c(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += ket.amp(i).conj() * self.entry(i, j) * ket.amp(j);
            }
        }
        Ok(acc.re)
    }

    /// Tensor product a (x) b; the product dimension must stay within 8.
    pub fn kron(a: &Self, b: &Self) -> Result<Self> {
        let dim = a.dim * b.dim;
        if dim > 8 {
            return Err(Error::DimensionOverflow(a.dim, b.dim));
        }
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        for i1 in 0..a.dim {
            for j1 in 0..a.dim {
                for i2 in 0..b.dim {
                    for j2 in 0..b.dim {
                        let i = i1 * b.dim + i2;
                        let j = j1 * b.dim + j2;
                        entries[i * dim + j] = a.entry(i1, j1) * b.entry(i2, j2);
                    }
                }
            }
        }
        Ok(DensityMatrix { dim, entries })
    }

    /// Traces out the leading tensor factor, keeping the trailing subsystem
    /// of dimension `keep_dim`.
    pub fn trace_out_front(&self, keep_dim: usize) -> Result<Self> {
        check_dim(keep_dim)?;
        if !self.dim.is_multiple_of(keep_dim) || self.dim == keep_dim {
            return Err(Error::DimensionMismatch(keep_dim, self.dim));
        }
        let front = self.dim / keep_dim;
        let mut entries = vec![c(0.0, 0.0); keep_dim * keep_dim];
        for x in 0..keep_dim {
            for y in 0..keep_dim {
                let mut acc = c(0.0, 0.0);
                for k in 0..front {
                    acc += self.entry(k * keep_dim + x, k * keep_dim + y);
                }
                entries[x * keep_dim + y] = acc;
            }
        }
        Ok(DensityMatrix {
            dim: keep_dim,
            entries,
        })
    }
}
