//! Small stabilizer codes with syndrome-coset encoding, and families of codes
//! used as purity tests.
//!
//! Pauli classes are handled as symplectic rows `x << n | z` (phase dropped).
//! Generators and logical operators carry the canonical Hermitian phase.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::qstate::{check_capacity, DensityMatrix, PauliOp, C64};

/// Largest physical size for family evaluation and search (4^6 classes).
pub const MAX_FAMILY_QUBITS: usize = 6;
/// Largest physical size for a single code.
pub const MAX_CODE_QUBITS: usize = 10;
/// Default weight threshold for accepting a state as inside a coset.
pub const DECODE_TOL: f64 = 1e-6;

fn row_of(p: &PauliOp) -> u64 {
    (p.x_mask().value() << p.qubits()) | p.z_mask().value()
}

fn pauli_of(n: usize, row: u64) -> PauliOp {
    let mask = (1u64 << n) - 1;
    PauliOp::hermitian(BitString::new(n, row >> n), BitString::new(n, row & mask))
}

/// Symplectic form: 1 iff the classes anticommute.
fn symplectic(n: usize, a: u64, b: u64) -> bool {
    let mask = (1u64 << n) - 1;
    let (ax, az, bx, bz) = (a >> n, a & mask, b >> n, b & mask);
    ((ax & bz).count_ones() + (az & bx).count_ones()) % 2 == 1
}

fn gf2_rank(rows: &[u64]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in (0..64).rev() {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Solves `⟨v, c_j⟩ = b_j` for all constraints; free variables set to zero.
fn solve_symplectic(n: usize, constraints: &[(u64, bool)]) -> Option<u64> {
    let mask = (1u64 << n) - 1;
    // Linear functional ⟨·, c⟩ has coefficient vector (c_z, c_x).
    let mut rows: Vec<(u64, bool)> = constraints
        .iter()
        .map(|&(c, b)| (((c & mask) << n) | (c >> n), b))
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for bit in (0..2 * n).rev() {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r].0 >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r].0 >> bit & 1 == 1 {
                rows[r].0 ^= rows[rank].0;
                rows[r].1 ^= rows[rank].1;
            }
        }
        pivots.push(bit);
        rank += 1;
    }
    if rows[rank..].iter().any(|&(_, b)| b) {
        return None;
    }
    Some(
        pivots
            .iter()
            .zip(&rows)
            .filter(|(_, &(_, b))| b)
            .fold(0u64, |v, (&bit, _)| v | 1 << bit),
    )
}

/// Sparse form of a Pauli: column `j` has one entry at row `j ⊕ x`.
fn pauli_columns(p: &PauliOp) -> Vec<(usize, C64)> {
    let m = p.matrix();
    let x = p.x_mask().index();
    (0..m.ncols()).map(|j| (j ^ x, m[(j ^ x, j)])).collect()
}

fn left_mul(cols: &[(usize, C64)], m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (j, &(r, v)) in cols.iter().enumerate() {
        for c in 0..m.ncols() {
            out[(r, c)] = v * m[(j, c)];
        }
    }
    out
}

fn right_mul(m: &DMatrix<C64>, cols: &[(usize, C64)]) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (j, &(r, v)) in cols.iter().enumerate() {
        for row in 0..m.nrows() {
            out[(row, j)] = m[(row, r)] * v;
        }
    }
    out
}

/// An `[[n_phys, n_log]]` stabilizer code with a fixed encoding circuit.
#[derive(Clone, Debug)]
pub struct StabilizerCode {
    n_phys: usize,
    n_log: usize,
    generators: Vec<PauliOp>,
    logical_x: Vec<PauliOp>,
    logical_z: Vec<PauliOp>,
    /// `D_i` flips generator `i` only and commutes with every logical.
    destabilizers: Vec<PauliOp>,
    /// Columns are the syndrome-zero codewords `|x̄⟩`.
    encoder: DMatrix<C64>,
}

impl PartialEq for StabilizerCode {
    fn eq(&self, other: &Self) -> bool {
        self.n_phys == other.n_phys
            && self.generators == other.generators
            && self.logical_x == other.logical_x
            && self.logical_z == other.logical_z
    }
}

impl StabilizerCode {
    pub fn new(
        generators: Vec<PauliOp>,
        logical_x: Vec<PauliOp>,
        logical_z: Vec<PauliOp>,
    ) -> Result<Self> {
        let n_log = logical_x.len();
        if n_log == 0 || logical_z.len() != n_log {
            return Err(Error::InvalidCode(format!(
                "need matching nonempty logical X/Z lists, got {} and {}",
                n_log,
                logical_z.len()
            )));
        }
        let n_phys = logical_x[0].qubits();
        check_capacity("stabilizer code qubits", n_phys, MAX_CODE_QUBITS)?;
        if generators.len() + n_log != n_phys {
            return Err(Error::InvalidCode(format!(
                "{} generators and {} logical qubits on {} physical qubits",
                generators.len(),
                n_log,
                n_phys
            )));
        }
        let all = generators.iter().chain(&logical_x).chain(&logical_z);
        for p in all.clone() {
            if p.qubits() != n_phys {
                return Err(Error::InvalidCode(format!("{p} has wrong size")));
            }
            if *p != pauli_of(n_phys, row_of(p)) {
                return Err(Error::InvalidCode(format!(
                    "{p} lacks the canonical Hermitian phase"
                )));
            }
        }
        let g: Vec<u64> = generators.iter().map(row_of).collect();
        let lx: Vec<u64> = logical_x.iter().map(row_of).collect();
        let lz: Vec<u64> = logical_z.iter().map(row_of).collect();
        let anti = |a: u64, b: u64| symplectic(n_phys, a, b);
        for (i, &a) in g.iter().enumerate() {
            if g[i + 1..].iter().any(|&b| anti(a, b)) {
                return Err(Error::InvalidCode("generators do not commute".into()));
            }
            if lx.iter().chain(&lz).any(|&l| anti(a, l)) {
                return Err(Error::InvalidCode(
                    "a logical operator anticommutes with a generator".into(),
                ));
            }
        }
        if gf2_rank(&g) != g.len() {
            return Err(Error::InvalidCode("generators are dependent".into()));
        }
        for i in 0..n_log {
            for j in 0..n_log {
                if anti(lx[i], lz[j]) != (i == j) {
                    return Err(Error::InvalidCode(format!(
                        "bad logical pairing at ({i}, {j})"
                    )));
                }
                if anti(lx[i], lx[j]) || anti(lz[i], lz[j]) {
                    return Err(Error::InvalidCode(
                        "logical operators of one type must commute".into(),
                    ));
                }
            }
        }

        let logicals: Vec<(u64, bool)> = lx.iter().chain(&lz).map(|&l| (l, false)).collect();
        let destabilizers = (0..g.len())
            .map(|i| {
                let mut cons: Vec<(u64, bool)> =
                    g.iter().enumerate().map(|(j, &gj)| (gj, i == j)).collect();
                cons.extend(&logicals);
                solve_symplectic(n_phys, &cons)
                    .map(|row| pauli_of(n_phys, row))
                    .ok_or_else(|| Error::InvalidCode("no destabilizer exists".into()))
            })
            .collect::<Result<Vec<_>>>()?;

        let d = 1usize << n_phys;
        let mut proj = DMatrix::<C64>::identity(d, d);
        let half = C64::new(0.5, 0.0);
        for p in generators.iter().chain(&logical_z) {
            proj = (&proj + &proj * p.matrix()) * half;
        }
        let col = (0..d)
            .max_by(|&a, &b| proj.column(a).norm().total_cmp(&proj.column(b).norm()))
            .expect("nonempty");
        let mut zero = proj.column(col).into_owned();
        zero /= C64::new(zero.norm(), 0.0);
        let lead = zero
            .iter()
            .copied()
            .find(|a| a.norm() > 1e-8)
            .expect("codeword is nonzero");
        zero *= lead.conj() / C64::new(lead.norm(), 0.0);

        let k = 1usize << n_log;
        let mut encoder = DMatrix::<C64>::zeros(d, k);
        for x in 0..k {
            let mut v = zero.clone();
            for (j, lxj) in logical_x.iter().enumerate() {
                if (x >> (n_log - 1 - j)) & 1 == 1 {
                    v = lxj.matrix() * v;
                }
            }
            encoder.set_column(x, &v);
        }

        Ok(Self {
            n_phys,
            n_log,
            generators,
            logical_x,
            logical_z,
            destabilizers,
            encoder,
        })
    }

    /// Canonical code: `Z` on the last `t` qubits, logicals on the first
    /// `n_log`.
    pub fn canonical(n_log: usize, t: usize) -> Result<Self> {
        let rows = canonical_rows(n_log, t);
        Self::from_rows(
            n_log + t,
            &rows.generators,
            &rows.logical_x,
            &rows.logical_z,
        )
    }

    fn from_rows(n: usize, g: &[u64], lx: &[u64], lz: &[u64]) -> Result<Self> {
        let to_ops = |rows: &[u64]| rows.iter().map(|&r| pauli_of(n, r)).collect();
        Self::new(to_ops(g), to_ops(lx), to_ops(lz))
    }

    pub fn n_phys(&self) -> usize {
        self.n_phys
    }

    pub fn n_log(&self) -> usize {
        self.n_log
    }

    pub fn syndrome_bits(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[PauliOp] {
        &self.generators
    }

    pub fn logical_x(&self) -> &[PauliOp] {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &[PauliOp] {
        &self.logical_z
    }

    pub fn destabilizers(&self) -> &[PauliOp] {
        &self.destabilizers
    }

    /// Syndrome of a Pauli error: bit `i` set iff it anticommutes with `g_i`.
    pub fn syndrome_of(&self, e: &PauliOp) -> BitString {
        let bits: Vec<bool> = self
            .generators
            .iter()
            .map(|g| g.anticommutes_with(e))
            .collect();
        BitString::from_bits(&bits)
    }

    /// True iff `e` (up to phase) lies in the stabilizer group.
    pub fn in_stabilizer_group(&self, e: &PauliOp) -> bool {
        let g: Vec<u64> = self.generators.iter().map(row_of).collect();
        let mut with = g.clone();
        with.push(row_of(e));
        gf2_rank(&with) == g.len()
    }

    /// True iff `e` passes syndrome checks but acts nontrivially on the code.
    pub fn is_undetected_logical(&self, e: &PauliOp) -> bool {
        self.syndrome_of(e).is_zero() && !self.in_stabilizer_group(e)
    }

    fn check_syndrome(&self, syndrome: &BitString) -> Result<()> {
        if syndrome.len() != self.syndrome_bits() {
            return Err(Error::DimensionMismatch {
                expected: self.syndrome_bits(),
                got: syndrome.len(),
            });
        }
        Ok(())
    }

    /// Isometry onto the coset with syndrome `y`.
    pub fn coset_isometry(&self, syndrome: &BitString) -> Result<DMatrix<C64>> {
        self.check_syndrome(syndrome)?;
        let shift = self
            .destabilizers
            .iter()
            .zip(syndrome.bits())
            .filter(|(_, b)| *b)
            .fold(PauliOp::identity(self.n_phys), |acc, (d, _)| acc.compose(d));
        Ok(shift.matrix() * &self.encoder)
    }

    fn physical(&self, state: &DensityMatrix) -> Result<()> {
        if state.qubits() != self.n_phys {
            return Err(Error::DimensionMismatch {
                expected: self.n_phys,
                got: state.qubits(),
            });
        }
        Ok(())
    }
}

pub fn encode(
    code: &StabilizerCode,
    syndrome: &BitString,
    logical_state: &DensityMatrix,
) -> Result<DensityMatrix> {
    if logical_state.qubits() != code.n_log {
        return Err(Error::DimensionMismatch {
            expected: code.n_log,
            got: logical_state.qubits(),
        });
    }
    let w = code.coset_isometry(syndrome)?;
    DensityMatrix::from_matrix(&w * logical_state.matrix() * w.adjoint())
}

#[derive(Clone, Debug)]
pub struct SyndromeMeasurement {
    pub syndrome: BitString,
    pub post_state: DensityMatrix,
    /// Probability of the observed outcome.
    pub probability: f64,
}

/// Measures each generator in turn, projecting after each outcome.
pub fn measure_syndrome<R: Rng + ?Sized>(
    code: &StabilizerCode,
    state: &DensityMatrix,
    rng: &mut R,
) -> Result<SyndromeMeasurement> {
    code.physical(state)?;
    let mut rho = state.matrix().clone();
    let mut bits = Vec::with_capacity(code.syndrome_bits());
    let mut probability = 1.0;
    for g in &code.generators {
        let cols = pauli_columns(g);
        let expectation: f64 = cols
            .iter()
            .enumerate()
            .map(|(j, &(r, v))| (v * rho[(j, r)]).re)
            .sum();
        let p1 = ((1.0 - expectation) / 2.0).clamp(0.0, 1.0);
        let bit = rng.random::<f64>() < p1;
        let p = if bit { p1 } else { 1.0 - p1 };
        let sign = C64::new(if bit { -1.0 } else { 1.0 }, 0.0);
        let g_rho = left_mul(&cols, &rho);
        let rho_g = right_mul(&rho, &cols);
        let g_rho_g = right_mul(&g_rho, &cols);
        rho = (&rho + (g_rho + rho_g) * sign + g_rho_g) * C64::new(0.25 / p, 0.0);
        probability *= p;
        bits.push(bit);
    }
    Ok(SyndromeMeasurement {
        syndrome: BitString::from_bits(&bits),
        post_state: DensityMatrix::from_matrix_with_tol(rho, 1e-7)?,
        probability,
    })
}

/// Exact probability of every syndrome, indexed by its value.
pub fn syndrome_distribution(code: &StabilizerCode, state: &DensityMatrix) -> Result<Vec<f64>> {
    code.physical(state)?;
    let t = code.syndrome_bits();
    (0..1u64 << t)
        .map(|y| {
            let w = code.coset_isometry(&BitString::new(t, y))?;
            Ok((w.adjoint() * state.matrix() * &w).trace().re)
        })
        .collect()
}

pub fn decode(
    code: &StabilizerCode,
    syndrome: &BitString,
    state: &DensityMatrix,
) -> Result<DensityMatrix> {
    decode_with_tol(code, syndrome, state, DECODE_TOL)
}

/// Fails unless at least `1 - tol` of the state's weight lies in the coset.
pub fn decode_with_tol(
    code: &StabilizerCode,
    syndrome: &BitString,
    state: &DensityMatrix,
    tol: f64,
) -> Result<DensityMatrix> {
    code.physical(state)?;
    let w = code.coset_isometry(syndrome)?;
    let inner = w.adjoint() * state.matrix() * &w;
    let weight = inner.trace().re;
    if weight < 1.0 - tol {
        return Err(Error::DecodeFailure(format!(
            "only {weight:.6} of the state lies in syndrome coset {syndrome}"
        )));
    }
    DensityMatrix::from_matrix_with_tol(inner / C64::new(weight, 0.0), tol.max(1e-9))
}

/// Undetected-logical indicator for every Pauli class of one code.
fn undetected_classes(code: &StabilizerCode) -> Vec<bool> {
    let n = code.n_phys;
    let g: Vec<u64> = code.generators.iter().map(row_of).collect();
    let mut group = vec![false; 1 << (2 * n)];
    for subset in 0..1u64 << g.len() {
        let row = g
            .iter()
            .enumerate()
            .filter(|(i, _)| subset >> i & 1 == 1)
            .fold(0u64, |acc, (_, &r)| acc ^ r);
        group[row as usize] = true;
    }
    (0..1u64 << (2 * n))
        .map(|e| !group[e as usize] && g.iter().all(|&gi| !symplectic(n, e, gi)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDetail {
    pub epsilon: f64,
    /// A Pauli class attaining the maximum.
    pub worst_pauli: String,
    pub worst_count: usize,
    pub family_size: usize,
}

fn check_family(codes: &[StabilizerCode]) -> Result<(usize, usize)> {
    let first = codes.first().ok_or(Error::EmptySet)?;
    let (n, k) = (first.n_phys, first.n_log);
    check_capacity("family evaluation qubits", n, MAX_FAMILY_QUBITS)?;
    if codes.iter().any(|c| c.n_phys != n || c.n_log != k) {
        return Err(Error::InvalidCode("family codes differ in size".into()));
    }
    Ok((n, k))
}

fn counts_of(codes: &[StabilizerCode]) -> Vec<u32> {
    let n = codes[0].n_phys;
    let mut counts = vec![0u32; 1 << (2 * n)];
    for code in codes {
        for (e, hit) in undetected_classes(code).into_iter().enumerate() {
            counts[e] += hit as u32;
        }
    }
    counts
}

pub fn family_epsilon_detail(codes: &[StabilizerCode]) -> Result<EpsilonDetail> {
    let (n, _) = check_family(codes)?;
    let counts = counts_of(codes);
    let (worst, &count) = counts
        .iter()
        .enumerate()
        .skip(1)
        .max_by_key(|&(e, c)| (*c, std::cmp::Reverse(e)))
        .expect("at least one non-identity class");
    Ok(EpsilonDetail {
        epsilon: count as f64 / codes.len() as f64,
        worst_pauli: pauli_of(n, worst as u64).to_string(),
        worst_count: count as usize,
        family_size: codes.len(),
    })
}

/// Largest fraction of codes for which one non-identity Pauli class is an
/// undetected logical operator.
pub fn family_epsilon(codes: &[StabilizerCode]) -> Result<f64> {
    Ok(family_epsilon_detail(codes)?.epsilon)
}

struct CodeRows {
    generators: Vec<u64>,
    logical_x: Vec<u64>,
    logical_z: Vec<u64>,
}

fn canonical_rows(n_log: usize, t: usize) -> CodeRows {
    let n = n_log + t;
    let z = |q: usize| 1u64 << (n - 1 - q);
    let x = |q: usize| 1u64 << (2 * n - 1 - q);
    CodeRows {
        generators: (n_log..n).map(z).collect(),
        logical_x: (0..n_log).map(x).collect(),
        logical_z: (0..n_log).map(z).collect(),
    }
}

/// Conjugates the canonical code by a random Clifford circuit.
pub fn random_code<R: Rng + ?Sized>(n_log: usize, t: usize, rng: &mut R) -> Result<StabilizerCode> {
    let n = n_log + t;
    check_capacity("stabilizer code qubits", n, MAX_CODE_QUBITS)?;
    let mut rows = canonical_rows(n_log, t);
    let xb = |q: usize| 2 * n - 1 - q;
    let zb = |q: usize| n - 1 - q;
    let get = |r: u64, b: usize| r >> b & 1;
    for _ in 0..20 * n * n {
        let gate = rng.random_range(0..3);
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n.max(2))) % n;
        for r in rows
            .generators
            .iter_mut()
            .chain(&mut rows.logical_x)
            .chain(&mut rows.logical_z)
        {
            match gate {
                0 => {
                    let (xa, za) = (get(*r, xb(a)), get(*r, zb(a)));
                    if xa != za {
                        *r ^= (1 << xb(a)) | (1 << zb(a));
                    }
                }
                1 => *r ^= get(*r, xb(a)) << zb(a),
                _ if n > 1 => {
                    *r ^= get(*r, xb(a)) << xb(b);
                    *r ^= get(*r, zb(b)) << zb(a);
                }
                _ => {}
            }
        }
    }
    StabilizerCode::from_rows(n, &rows.generators, &rows.logical_x, &rows.logical_z)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CodeRecord", try_from = "CodeRecord")]
pub struct SerdeCode(pub StabilizerCode);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeRecord {
    pub n_phys: usize,
    pub n_log: usize,
    pub generators: Vec<String>,
    pub logical_x: Vec<String>,
    pub logical_z: Vec<String>,
}

impl From<&StabilizerCode> for CodeRecord {
    fn from(c: &StabilizerCode) -> Self {
        let hex = |ops: &[PauliOp]| {
            ops.iter()
                .map(|p| BitString::new(2 * c.n_phys, row_of(p)).to_hex())
                .collect()
        };
        Self {
            n_phys: c.n_phys,
            n_log: c.n_log,
            generators: hex(&c.generators),
            logical_x: hex(&c.logical_x),
            logical_z: hex(&c.logical_z),
        }
    }
}

impl From<SerdeCode> for CodeRecord {
    fn from(c: SerdeCode) -> Self {
        CodeRecord::from(&c.0)
    }
}

impl TryFrom<CodeRecord> for SerdeCode {
    type Error = Error;

    fn try_from(r: CodeRecord) -> Result<Self> {
        StabilizerCode::try_from(&r).map(SerdeCode)
    }
}

impl TryFrom<&CodeRecord> for StabilizerCode {
    type Error = Error;

    fn try_from(r: &CodeRecord) -> Result<Self> {
        check_capacity("stabilizer code qubits", r.n_phys, MAX_CODE_QUBITS)?;
        let parse = |rows: &[String]| -> Result<Vec<u64>> {
            rows.iter()
                .map(|h| BitString::from_hex(2 * r.n_phys, h).map(|b| b.value()))
                .collect()
        };
        let code = StabilizerCode::from_rows(
            r.n_phys,
            &parse(&r.generators)?,
            &parse(&r.logical_x)?,
            &parse(&r.logical_z)?,
        )?;
        if code.n_log != r.n_log {
            return Err(Error::InvalidCode(
                "recorded logical count disagrees with rows".into(),
            ));
        }
        Ok(code)
    }
}

/// An indexed family of codes with its measured purity-testing parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct SptcFamily {
    codes: Vec<StabilizerCode>,
    epsilon: f64,
    seed: Option<u64>,
    budget: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub n_log: usize,
    pub syndrome_bits: usize,
    pub epsilon: f64,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub codes: Vec<CodeRecord>,
}

impl SptcFamily {
    pub fn new(codes: Vec<StabilizerCode>) -> Result<Self> {
        if codes.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a family needs at least 2 codes, got {}",
                codes.len()
            )));
        }
        let epsilon = family_epsilon(&codes)?;
        Ok(Self {
            codes,
            epsilon,
            seed: None,
            budget: None,
        })
    }

    pub fn with_provenance(mut self, seed: Option<u64>, budget: Option<usize>) -> Self {
        self.seed = seed;
        self.budget = budget;
        self
    }

    pub fn codes(&self) -> &[StabilizerCode] {
        &self.codes
    }

    pub fn code(&self, z: usize) -> Result<&StabilizerCode> {
        self.codes.get(z).ok_or(Error::IndexOutOfRange {
            index: z,
            size: self.codes.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_log(&self) -> usize {
        self.codes[0].n_log
    }

    pub fn n_phys(&self) -> usize {
        self.codes[0].n_phys
    }

    pub fn syndrome_bits(&self) -> usize {
        self.codes[0].syndrome_bits()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn id(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.codes {
            for p in c.generators.iter().chain(&c.logical_x).chain(&c.logical_z) {
                h.update(row_of(p).to_le_bytes());
            }
        }
        let digest = h.finalize();
        let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "sptc-k{}-t{}-z{}-{hex}",
            self.n_log(),
            self.syndrome_bits(),
            self.len()
        )
    }

    pub fn to_record(&self) -> FamilyRecord {
        FamilyRecord {
            n_log: self.n_log(),
            syndrome_bits: self.syndrome_bits(),
            epsilon: self.epsilon,
            seed: self.seed,
            budget: self.budget,
            codes: self.codes.iter().map(CodeRecord::from).collect(),
        }
    }

    pub fn from_record(r: &FamilyRecord) -> Result<Self> {
        let codes = r
            .codes
            .iter()
            .map(StabilizerCode::try_from)
            .collect::<Result<Vec<_>>>()?;
        let family = Self::new(codes)?.with_provenance(r.seed, r.budget);
        if (family.epsilon - r.epsilon).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "recorded epsilon {} disagrees with recomputed {}",
                r.epsilon, family.epsilon
            )));
        }
        Ok(family)
    }
}

#[derive(Clone, Debug)]
pub struct SptcSearch {
    pub family: SptcFamily,
    pub target_met: bool,
    pub evaluations: usize,
}

/// (worst count, classes at the worst count, sum of squared counts).
fn family_score(counts: &[u32]) -> (u32, usize, u64) {
    let worst = counts[1..].iter().copied().max().unwrap_or(0);
    let at_worst = counts[1..].iter().filter(|&&c| c == worst).count();
    let energy = counts[1..].iter().map(|&c| (c as u64).pow(2)).sum();
    (worst, at_worst, energy)
}

/// Random initial family followed by greedy single-code replacements.
///
/// `trial_budget` counts candidate codes drawn, including the initial ones.
pub fn build_sptc_family<R: Rng + ?Sized>(
    n_log: usize,
    t: usize,
    family_size: usize,
    epsilon_target: f64,
    rng: &mut R,
    trial_budget: usize,
) -> Result<SptcSearch> {
    if n_log == 0 || t == 0 {
        return Err(Error::InvalidParameter(
            "need at least one logical qubit and one check".into(),
        ));
    }
    check_capacity("family evaluation qubits", n_log + t, MAX_FAMILY_QUBITS)?;
    if family_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "family size {family_size} < 2"
        )));
    }
    let mut codes = Vec::with_capacity(family_size);
    let mut classes = Vec::with_capacity(family_size);
    for _ in 0..family_size {
        let c = random_code(n_log, t, rng)?;
        classes.push(undetected_classes(&c));
        codes.push(c);
    }
    let mut counts = counts_of(&codes);
    let mut score = family_score(&counts);
    let mut evaluations = family_size;
    let target_count = (epsilon_target * family_size as f64 + 1e-9).floor() as u32;
    while evaluations < trial_budget && score.0 > target_count {
        let slot = rng.random_range(0..family_size);
        let candidate = random_code(n_log, t, rng)?;
        let cand_classes = undetected_classes(&candidate);
        evaluations += 1;
        let mut trial = counts.clone();
        for (e, c) in trial.iter_mut().enumerate() {
            *c = *c - classes[slot][e] as u32 + cand_classes[e] as u32;
        }
        let trial_score = family_score(&trial);
        if trial_score < score {
            counts = trial;
            score = trial_score;
            codes[slot] = candidate;
            classes[slot] = cand_classes;
        }
    }
    let family = SptcFamily::new(codes)?.with_provenance(None, Some(trial_budget));
    let target_met = family.epsilon <= epsilon_target + 1e-12;
    Ok(SptcSearch {
        family,
        target_met,
        evaluations,
    })
}
