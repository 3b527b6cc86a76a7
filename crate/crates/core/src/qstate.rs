//! Dense density matrices, Pauli operators and the distance measures used to
//! evaluate every security claim.
//!
//! States are stored as full `2^q x 2^q` complex matrices. Qubit 0 is the most
//! significant bit of the basis index (see [`crate::bits`]).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bits::BitString;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance for every equality and invariant check unless a caller
/// passes its own.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest register the simulator will materialize.
pub const MAX_QUBITS: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn check_capacity(what: &'static str, qubits: usize, limit: usize) -> Result<()> {
    if qubits > limit {
        return Err(Error::Capacity {
            what,
            requested: qubits,
            limit,
        });
    }
    Ok(())
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

// ---------------------------------------------------------------------------
// Pauli operators
// ---------------------------------------------------------------------------

/// Global phase `i^k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Phase {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn value(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

/// `phase · X^x Z^z` on `x.len()` qubits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliOp {
    x: BitString,
    z: BitString,
    phase: Phase,
}

impl PauliOp {
    pub fn new(x: BitString, z: BitString, phase: Phase) -> Self {
        assert_eq!(x.len(), z.len(), "x and z masks must have equal length");
        Self { x, z, phase }
    }

    pub fn identity(qubits: usize) -> Self {
        Self::new(
            BitString::zeros(qubits),
            BitString::zeros(qubits),
            Phase::ONE,
        )
    }

    /// The Hermitian representative `i^{|x∧z|} X^x Z^z` (so `Y = iXZ`).
    pub fn hermitian(x: BitString, z: BitString) -> Self {
        let overlap = (x.value() & z.value()).count_ones();
        Self::new(x, z, Phase::from_power(overlap))
    }

    /// Parses a string such as `"XIZ"` or `"-YY"` into a Hermitian Pauli.
    pub fn parse(s: &str) -> Result<Self> {
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let mut xs = Vec::with_capacity(body.len());
        let mut zs = Vec::with_capacity(body.len());
        for c in body.chars() {
            let (x, z) = match c {
                'I' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "not a Pauli letter: {other:?}"
                    )))
                }
            };
            xs.push(x);
            zs.push(z);
        }
        let p = Self::hermitian(BitString::from_bits(&xs), BitString::from_bits(&zs));
        Ok(if negative {
            p.with_phase(p.phase * Phase::MINUS_ONE)
        } else {
            p
        })
    }

    pub fn with_phase(self, phase: Phase) -> Self {
        Self { phase, ..self }
    }

    pub fn qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x_mask(&self) -> BitString {
        self.x
    }

    pub fn z_mask(&self) -> BitString {
        self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero() && self.phase == Phase::ONE
    }

    /// True when the operator is a multiple of the identity.
    pub fn is_scalar(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn weight(&self) -> u32 {
        (self.x.value() | self.z.value()).count_ones()
    }

    /// Symplectic form: `true` iff the two operators anticommute.
    pub fn anticommutes_with(&self, other: &PauliOp) -> bool {
        self.x.dot(&other.z) ^ self.z.dot(&other.x)
    }

    pub fn commutes_with(&self, other: &PauliOp) -> bool {
        !self.anticommutes_with(other)
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &PauliOp) -> PauliOp {
        // Z^z1 X^x2 = (-1)^{z1·x2} X^x2 Z^z1
        let sign = if self.z.dot(&other.x) {
            Phase::MINUS_ONE
        } else {
            Phase::ONE
        };
        PauliOp::new(
            self.x.xor(&other.x),
            self.z.xor(&other.z),
            self.phase * other.phase * sign,
        )
    }

    /// Phase-free `(x, z)` label packed into one integer.
    pub fn symplectic_index(&self) -> usize {
        ((self.x.value() << self.qubits()) | self.z.value()) as usize
    }

    pub fn from_symplectic_index(qubits: usize, index: usize) -> Self {
        let z = index as u64 & ((1u64 << qubits) - 1);
        let x = (index as u64) >> qubits;
        Self::hermitian(BitString::new(qubits, x), BitString::new(qubits, z))
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let dim = 1usize << self.qubits();
        let phase = self.phase.value();
        let x = self.x.index();
        DMatrix::from_fn(dim, dim, |row, col| {
            if row == col ^ x {
                if BitString::new(self.qubits(), col as u64).dot(&self.z) {
                    -phase
                } else {
                    phase
                }
            } else {
                ZERO
            }
        })
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let herm = PauliOp::hermitian(self.x, self.z).phase;
        let rel = Phase::from_power((self.phase.0 + 4 - herm.0) as u32);
        f.write_str(match rel.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })?;
        for (x, z) in self.x.bits().zip(self.z.bits()) {
            f.write_str(match (x, z) {
                (false, false) => "I",
                (true, false) => "X",
                (true, true) => "Y",
                (false, true) => "Z",
            })?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    data: DMatrix<C64>,
}

/// Outcome of a computational-basis measurement.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: BitString,
    pub post_state: DensityMatrix,
    /// Probability of each outcome, indexed by the outcome's integer value.
    pub distribution: Vec<f64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at [`DEFAULT_TOL`].
    pub fn from_matrix(data: DMatrix<C64>) -> Result<Self> {
        Self::from_matrix_with_tol(data, DEFAULT_TOL)
    }

    pub fn from_matrix_with_tol(data: DMatrix<C64>, tol: f64) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare(data.nrows(), data.ncols()));
        }
        let qubits = log2_exact(data.nrows())?;
        check_capacity("density matrix qubits", qubits, MAX_QUBITS)?;
        let state = Self { qubits, data };
        state.validate(tol)?;
        Ok(state)
    }

    /// Wraps a matrix that is a valid state by construction.
    pub(crate) fn assume_valid(data: DMatrix<C64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        let qubits = data.nrows().trailing_zeros() as usize;
        Self { qubits, data }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = max_abs(&(&self.data - self.data.adjoint()));
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.data.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = self
            .eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }

    /// `|index⟩⟨index|`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        check_capacity("density matrix qubits", qubits, MAX_QUBITS)?;
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, size: dim });
        }
        let mut data = DMatrix::zeros(dim, dim);
        data[(index, index)] = ONE;
        Ok(Self { qubits, data })
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_capacity("density matrix qubits", qubits, MAX_QUBITS)?;
        let dim = 1usize << qubits;
        Ok(Self {
            qubits,
            data: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        })
    }

    /// The zero-qubit state, the unit for [`tensor`].
    pub fn unit() -> Self {
        Self {
            qubits: 0,
            data: DMatrix::from_element(1, 1, ONE),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.data)
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalue is NaN"));
        ev
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    /// Diagonal of the matrix: the computational-basis distribution.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self, other)?;
        Ok(max_abs(&(&self.data - &other.data)))
    }

    /// `u · ρ · u†` after checking `u` is unitary.
    pub fn apply_unitary(&self, u: &DMatrix<C64>) -> Result<DensityMatrix> {
        self.apply_unitary_with_tol(u, DEFAULT_TOL)
    }

    pub fn apply_unitary_with_tol(&self, u: &DMatrix<C64>, tol: f64) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        let dev = unitarity_deviation(u);
        if dev > tol {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            qubits: self.qubits,
            data: u * &self.data * u.adjoint(),
        })
    }

    /// Applies a unitary acting on the listed qubits (first listed = most
    /// significant qubit of `u`).
    pub fn apply_local_unitary(
        &self,
        targets: &[usize],
        u: &DMatrix<C64>,
    ) -> Result<DensityMatrix> {
        let full = expand_operator(self.qubits, targets, u)?;
        self.apply_unitary(&full)
    }

    /// `P ρ P†` computed by index permutation; the phase of `P` cancels.
    pub fn apply_pauli(&self, p: &PauliOp) -> Result<DensityMatrix> {
        if p.qubits() != self.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                got: p.qubits(),
            });
        }
        let x = p.x_mask().index();
        let z = p.z_mask().value();
        let sign = |j: usize| {
            if (j as u64 & z).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let dim = self.dim();
        let data = DMatrix::from_fn(dim, dim, |r, c| {
            let (rs, cs) = (r ^ x, c ^ x);
            self.data[(rs, cs)] * (sign(rs) * sign(cs))
        });
        Ok(Self {
            qubits: self.qubits,
            data,
        })
    }

    /// Samples a computational-basis measurement of `subset`. Outcome bit `j`
    /// belongs to `subset[j]`.
    pub fn measure_computational<R: Rng + ?Sized>(
        &self,
        subset: &[usize],
        rng: &mut R,
    ) -> Result<Measurement> {
        check_subset(self.qubits, subset)?;
        let distribution = self.outcome_distribution(subset)?;
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (o, &p) in distribution.iter().enumerate() {
            acc += p;
            if p > 0.0 && draw < acc {
                chosen = Some(o);
                break;
            }
        }
        // Round-off can leave `acc` a hair under 1; fall back to the last
        // outcome with weight.
        let outcome = chosen.unwrap_or_else(|| {
            distribution
                .iter()
                .rposition(|&p| p > 0.0)
                .expect("distribution has no support")
        });
        let post_state = self.project_outcome(subset, outcome, distribution[outcome]);
        Ok(Measurement {
            outcome: BitString::new(subset.len(), outcome as u64),
            post_state,
            distribution,
        })
    }

    /// Probability of every outcome of measuring `subset`.
    pub fn outcome_distribution(&self, subset: &[usize]) -> Result<Vec<f64>> {
        check_subset(self.qubits, subset)?;
        let mut dist = vec![0.0; 1usize << subset.len()];
        for j in 0..self.dim() {
            let o = self.outcome_of(j, subset);
            dist[o] += self.data[(j, j)].re.max(0.0);
        }
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|p| *p /= total);
        Ok(dist)
    }

    fn outcome_of(&self, basis: usize, subset: &[usize]) -> usize {
        subset.iter().fold(0usize, |acc, &q| {
            (acc << 1) | ((basis >> (self.qubits - 1 - q)) & 1)
        })
    }

    fn project_outcome(&self, subset: &[usize], outcome: usize, prob: f64) -> DensityMatrix {
        let dim = self.dim();
        let keep: Vec<bool> = (0..dim)
            .map(|j| self.outcome_of(j, subset) == outcome)
            .collect();
        let scale = C64::new(1.0 / prob, 0.0);
        let data = DMatrix::from_fn(dim, dim, |r, c| {
            if keep[r] && keep[c] {
                self.data[(r, c)] * scale
            } else {
                ZERO
            }
        });
        Self {
            qubits: self.qubits,
            data,
        }
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, reference: &[C64]) -> Result<f64> {
        if reference.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: reference.len(),
            });
        }
        let psi = DVector::from_column_slice(reference);
        let norm = psi.norm();
        if (norm - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        let value = (psi.adjoint() * &self.data * &psi)[(0, 0)];
        Ok(value.re)
    }

    /// Reduced state on `keep` (ascending qubit indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        check_subset(self.qubits, keep)?;
        if keep.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "kept qubits must be ascending".into(),
            ));
        }
        let traced: Vec<usize> = (0..self.qubits).filter(|q| !keep.contains(q)).collect();
        let dim_k = 1usize << keep.len();
        let mut out = DMatrix::zeros(dim_k, dim_k);
        for r in 0..self.dim() {
            let rt = self.outcome_of(r, &traced);
            let rk = self.outcome_of(r, keep);
            for c in 0..self.dim() {
                if self.outcome_of(c, &traced) == rt {
                    out[(rk, self.outcome_of(c, keep))] += self.data[(r, c)];
                }
            }
        }
        Ok(Self::assume_valid(out))
    }
}

/// `|ψ⟩⟨ψ|` for a unit-norm amplitude vector of power-of-two length.
pub fn pure_state(amplitudes: &[C64]) -> Result<DensityMatrix> {
    let qubits = log2_exact(amplitudes.len())?;
    check_capacity("density matrix qubits", qubits, MAX_QUBITS)?;
    let psi = DVector::from_column_slice(amplitudes);
    let norm = psi.norm();
    if (norm - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::NotNormalized((norm - 1.0).abs()));
    }
    Ok(DensityMatrix {
        qubits,
        data: &psi * psi.adjoint(),
    })
}

/// `½ Σ|λ_i|` over the eigenvalues of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let diff = hermitian_part(&(&a.data - &b.data));
    let sum: f64 = diff.symmetric_eigenvalues().iter().map(|l| l.abs()).sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

/// Kronecker product; `a` occupies the leading qubits.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let qubits = a.qubits + b.qubits;
    check_capacity("density matrix qubits", qubits, MAX_QUBITS)?;
    Ok(DensityMatrix {
        qubits,
        data: a.data.kronecker(&b.data),
    })
}

/// Tensor product of a sequence, in order.
pub fn tensor_all<'a, I>(states: I) -> Result<DensityMatrix>
where
    I: IntoIterator<Item = &'a DensityMatrix>,
{
    states
        .into_iter()
        .try_fold(DensityMatrix::unit(), |acc, s| tensor(&acc, s))
}

/// Uniform average of equally sized states, accumulated in iteration order.
pub fn uniform_mixture<I>(states: I) -> Result<DensityMatrix>
where
    I: IntoIterator<Item = DensityMatrix>,
{
    let mut iter = states.into_iter();
    let first = iter.next().ok_or(Error::EmptySet)?;
    let mut acc = first.data;
    let mut count = 1usize;
    for s in iter {
        if s.data.nrows() != acc.nrows() {
            return Err(Error::DimensionMismatch {
                expected: acc.nrows(),
                got: s.data.nrows(),
            });
        }
        acc += s.data;
        count += 1;
    }
    acc /= C64::new(count as f64, 0.0);
    Ok(DensityMatrix::assume_valid(acc))
}

/// Weighted average `Σ p_k ρ_k`; weights must sum to one.
pub fn weighted_mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<DensityMatrix> {
    if weights.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            got: weights.len(),
        });
    }
    let first = states.first().ok_or(Error::EmptySet)?;
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > DEFAULT_TOL || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "weights must form a distribution (sum {total})"
        )));
    }
    let mut acc = DMatrix::zeros(first.dim(), first.dim());
    for (w, s) in weights.iter().zip(states) {
        same_dim(first, s)?;
        acc += &s.data * C64::new(*w, 0.0);
    }
    Ok(DensityMatrix::assume_valid(acc))
}

/// Full `2^total` operator for `u` acting on `targets`.
pub fn expand_operator(total: usize, targets: &[usize], u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_subset(total, targets)?;
    let k = targets.len();
    if u.nrows() != 1 << k || u.ncols() != 1 << k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            got: u.nrows(),
        });
    }
    let dim = 1usize << total;
    let target_mask: usize = targets.iter().map(|&q| 1usize << (total - 1 - q)).sum();
    let local = |j: usize| {
        targets
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((j >> (total - 1 - q)) & 1))
    };
    let scatter = |base: usize, l: usize| {
        targets
            .iter()
            .enumerate()
            .fold(base & !target_mask, |acc, (pos, &q)| {
                let bit = (l >> (k - 1 - pos)) & 1;
                acc | (bit << (total - 1 - q))
            })
    };
    let mut full = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = local(col);
        for lr in 0..(1usize << k) {
            let v = u[(lr, lc)];
            if v != ZERO {
                full[(scatter(col, lr), col)] = v;
            }
        }
    }
    Ok(full)
}

pub fn hadamard() -> DMatrix<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
        ],
    )
}

/// Controlled-NOT with the first qubit as control.
pub fn cnot() -> DMatrix<C64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    max_abs(&(u * u.adjoint() - DMatrix::<C64>::identity(n, n)))
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

fn check_subset(qubits: usize, subset: &[usize]) -> Result<()> {
    let mut seen = 0u64;
    for &q in subset {
        if q >= qubits {
            return Err(Error::QubitOutOfRange { index: q, qubits });
        }
        if seen & (1 << q) != 0 {
            return Err(Error::DuplicateQubit(q));
        }
        seen |= 1 << q;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Random states
// ---------------------------------------------------------------------------

/// Normalized complex Gaussian amplitudes (Haar-random pure state).
pub fn random_amplitudes<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Vec<C64> {
    let dim = 1usize << qubits;
    let raw: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure_state<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> DensityMatrix {
    pure_state(&random_amplitudes(qubits, rng)).expect("random amplitudes are normalized")
}

/// Random full-rank mixed state `G G† / tr(G G†)` with Gaussian `G`.
pub fn random_mixed_state<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> DensityMatrix {
    let dim = 1usize << qubits;
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::assume_valid(m / tr)
}

/// Unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[c(h, 0.0), c(h, 0.0)]).unwrap()
    }

    fn minus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[c(h, 0.0), c(-h, 0.0)]).unwrap()
    }

    #[test]
    fn pure_state_examples() {
        let zero = pure_state(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(zero.diagonal(), vec![1.0, 0.0]);
        let p = plus();
        assert!(p.matrix().iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-12));

        // outer product of (0.6, 0.8i) worked by hand
        let s = pure_state(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.36, 0.0), c(0.0, -0.48), c(0.0, 0.48), c(0.64, 0.0)],
        );
        assert!(max_abs(&(s.matrix() - expected)) < 1e-12);
        s.validate(DEFAULT_TOL).unwrap();
    }

    #[test]
    fn pure_state_errors() {
        assert!(matches!(
            pure_state(&[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            pure_state(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::NotPowerOfTwo(3))
        ));
    }

    #[test]
    fn from_matrix_rejects_invalid() {
        let not_psd =
            DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::from_matrix(not_psd),
            Err(Error::NotPsd(_))
        ));
        let not_herm =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::from_matrix(not_herm),
            Err(Error::NotHermitian(_))
        ));
        let bad_trace =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)]);
        assert!(matches!(
            DensityMatrix::from_matrix(bad_trace),
            Err(Error::InvalidTrace(_))
        ));
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(
            DensityMatrix::maximally_mixed(MAX_QUBITS + 1),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn apply_unitary_examples() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let id = DMatrix::<C64>::identity(2, 2);
        assert_eq!(zero.apply_unitary(&id).unwrap(), zero);
        let x = PauliOp::parse("X").unwrap().matrix();
        assert_eq!(
            zero.apply_unitary(&x).unwrap(),
            DensityMatrix::basis(1, 1).unwrap()
        );
        let z = PauliOp::parse("Z").unwrap().matrix();
        assert!(
            plus()
                .apply_unitary(&z)
                .unwrap()
                .max_abs_diff(&minus())
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn apply_unitary_errors() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let not_unitary = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(
            zero.apply_unitary(&not_unitary),
            Err(Error::NotUnitary(_))
        ));
        let big = DMatrix::<C64>::identity(4, 4);
        assert!(matches!(
            zero.apply_unitary(&big),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_pauli_examples() {
        let s = DensityMatrix::basis(2, 0).unwrap();
        let xi = PauliOp::parse("XI").unwrap();
        assert_eq!(
            s.apply_pauli(&xi).unwrap(),
            DensityMatrix::basis(2, 0b10).unwrap()
        );

        let mut rng = seeded(3);
        let r = random_mixed_state(2, &mut rng);
        assert!(
            r.apply_pauli(&PauliOp::identity(2))
                .unwrap()
                .max_abs_diff(&r)
                .unwrap()
                < 1e-15
        );

        let minus_z = PauliOp::parse("-Z").unwrap();
        assert!(
            plus()
                .apply_pauli(&minus_z)
                .unwrap()
                .max_abs_diff(&minus())
                .unwrap()
                < 1e-12
        );
        assert!(s.apply_pauli(&PauliOp::identity(3)).is_err());
    }

    #[test]
    fn apply_pauli_matches_matrix_conjugation() {
        let mut rng = seeded(5);
        let r = random_mixed_state(3, &mut rng);
        for idx in 0..64 {
            let p = PauliOp::from_symplectic_index(3, idx);
            let fast = r.apply_pauli(&p).unwrap();
            let slow = r.apply_unitary(&p.matrix()).unwrap();
            assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12, "{p}");
        }
    }

    #[test]
    fn pauli_algebra() {
        let x = PauliOp::parse("X").unwrap();
        let z = PauliOp::parse("Z").unwrap();
        let y = PauliOp::parse("Y").unwrap();
        assert!(x.anticommutes_with(&z));
        assert!(x.commutes_with(&x));
        // XZ = -iY
        let xz = x.compose(&z);
        let m = x.matrix() * z.matrix();
        assert!(max_abs(&(xz.matrix() - m)) < 1e-15);
        assert!(max_abs(&(y.matrix() - y.matrix().adjoint())) < 1e-15);
        assert!(PauliOp::identity(2).is_identity());
        assert!(!PauliOp::identity(2)
            .with_phase(Phase::MINUS_ONE)
            .is_identity());
        assert_eq!(PauliOp::parse("XYZI").unwrap().to_string(), "+XYZI");
    }

    #[test]
    fn trace_distance_examples() {
        let mut rng = seeded(11);
        let r = random_mixed_state(2, &mut rng);
        assert!(trace_distance(&r, &r).unwrap() < 1e-12);
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let one = DensityMatrix::basis(1, 1).unwrap();
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        // |0⟩⟨0| - |+⟩⟨+| = [[1/2, -1/2], [-1/2, -1/2]], eigenvalues ±1/√2
        let d = trace_distance(&zero, &plus()).unwrap();
        assert!((d - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert!(trace_distance(&zero, &r).is_err());
    }

    #[test]
    fn tensor_examples() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let one = DensityMatrix::basis(1, 1).unwrap();
        assert_eq!(
            tensor(&zero, &one).unwrap(),
            DensityMatrix::basis(2, 0b01).unwrap()
        );
        let mut rng = seeded(2);
        let r = random_mixed_state(2, &mut rng);
        assert_eq!(tensor(&r, &DensityMatrix::unit()).unwrap(), r);
        let s = random_mixed_state(1, &mut rng);
        let t = tensor(&r, &s).unwrap();
        assert!((t.trace().re - 1.0).abs() < 1e-12);
        assert_eq!(t.qubits(), 3);
    }

    #[test]
    fn measurement_examples() {
        let mut rng = seeded(0);
        let one = DensityMatrix::basis(1, 1).unwrap();
        let m = one.measure_computational(&[0], &mut rng).unwrap();
        assert_eq!(m.outcome.value(), 1);
        assert_eq!(m.distribution, vec![0.0, 1.0]);

        let d = plus().outcome_distribution(&[0]).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);

        // ρ_{k,i} with k = 01, i = 00: (|00⟩ + |01⟩)/√2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = pure_state(&[c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let d = rho.outcome_distribution(&[0, 1]).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);
        assert!(d[2].abs() < 1e-12 && d[3].abs() < 1e-12);
        let m = rho.measure_computational(&[0, 1], &mut rng).unwrap();
        assert!(m.outcome.value() <= 1);
        let expected = DensityMatrix::basis(2, m.outcome.index()).unwrap();
        assert!(m.post_state.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn measurement_subset_order_and_errors() {
        let s = DensityMatrix::basis(3, 0b011).unwrap();
        let mut rng = seeded(1);
        let m = s.measure_computational(&[2, 0], &mut rng).unwrap();
        assert_eq!(m.outcome.to_string(), "10");
        assert!(matches!(
            s.measure_computational(&[3], &mut rng),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            s.measure_computational(&[1, 1], &mut rng),
            Err(Error::DuplicateQubit(1))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        assert!(
            (zero
                .fidelity_with_pure(&[c(1.0, 0.0), c(0.0, 0.0)])
                .unwrap()
                - 1.0)
                .abs()
                < 1e-12
        );
        assert!(
            zero.fidelity_with_pure(&[c(0.0, 0.0), c(1.0, 0.0)])
                .unwrap()
                .abs()
                < 1e-12
        );
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(
            (mixed
                .fidelity_with_pure(&[c(1.0, 0.0), c(0.0, 0.0)])
                .unwrap()
                - 0.5)
                .abs()
                < 1e-12
        );
        assert!(zero.fidelity_with_pure(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = seeded(4);
        let a = random_mixed_state(1, &mut rng);
        let b = random_mixed_state(2, &mut rng);
        let ab = tensor(&a, &b).unwrap();
        assert!(ab.partial_trace(&[0]).unwrap().max_abs_diff(&a).unwrap() < 1e-12);
        assert!(ab.partial_trace(&[1, 2]).unwrap().max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn local_gates_expand_correctly() {
        // CNOT(1 -> 0) on |01⟩ gives |11⟩
        let s = DensityMatrix::basis(2, 0b01).unwrap();
        let out = s.apply_local_unitary(&[1, 0], &cnot()).unwrap();
        assert_eq!(out, DensityMatrix::basis(2, 0b11).unwrap());
        let h = s.apply_local_unitary(&[1], &hadamard()).unwrap();
        let d = h.outcome_distribution(&[1]).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12);
    }
}
