//! Quantum one-time pad and its approximate, small-key variant.
//!
//! The exact channel conjugates by `X^α Z^β` under a uniformly random 2n-bit
//! key. The approximate channel draws `a` uniformly from `{0,1}^n` and `b`
//! from a small-bias set `B`, and conjugates by `X^a Z^{a²} Z^b`, with `a²`
//! computed in GF(2^n).

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{bits_for, BitString};
use crate::error::{Error, Result};
use crate::gf2n;
use crate::qstate::{check_capacity, uniform_mixture, DensityMatrix, PauliOp};

/// Largest message size for which the 4^n-term mixture is enumerated.
pub const MAX_MIXTURE_QUBITS: usize = 5;
/// Largest element length accepted by bias measurement and set search.
pub const MAX_SET_BITS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PqcKey {
    n: usize,
    bits: BitString,
}

impl PqcKey {
    pub fn new(n: usize, bits: BitString) -> Result<Self> {
        if bits.len() != 2 * n {
            return Err(Error::KeyLength {
                expected: 2 * n,
                got: bits.len(),
            });
        }
        Ok(Self { n, bits })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            bits: BitString::zeros(2 * n),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            n,
            bits: BitString::random(2 * n, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> BitString {
        self.bits
    }

    /// X mask.
    pub fn alpha(&self) -> BitString {
        self.bits.split_at(self.n).0
    }

    /// Z mask.
    pub fn beta(&self) -> BitString {
        self.bits.split_at(self.n).1
    }

    pub fn xor(&self, other: &PqcKey) -> Result<PqcKey> {
        PqcKey::new(self.n, self.bits.xor(&other.bits))
    }

    pub fn pauli(&self) -> PauliOp {
        PauliOp::hermitian(self.alpha(), self.beta()).with_phase(crate::qstate::Phase::ONE)
    }
}

fn check_message(n: usize, message: &DensityMatrix) -> Result<()> {
    if message.qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: message.qubits(),
        });
    }
    Ok(())
}

pub fn pqc_encrypt(key: &PqcKey, message: &DensityMatrix) -> Result<DensityMatrix> {
    check_message(key.n, message)?;
    message.apply_pauli(&key.pauli())
}

/// Conjugation by a Pauli is an involution up to phase.
pub fn pqc_decrypt(key: &PqcKey, cipher: &DensityMatrix) -> Result<DensityMatrix> {
    check_message(key.n, cipher)?;
    cipher.apply_pauli(&key.pauli())
}

/// Average of `pqc_encrypt` over all 4^n keys.
pub fn pqc_mixture(message: &DensityMatrix) -> Result<DensityMatrix> {
    let n = message.qubits();
    check_capacity("one-time pad mixture qubits", n, MAX_MIXTURE_QUBITS)?;
    let keys = (0..1u64 << (2 * n)).map(|v| PqcKey::new(n, BitString::new(2 * n, v)));
    let terms = keys
        .map(|k| pqc_encrypt(&k?, message))
        .collect::<Result<Vec<_>>>()?;
    uniform_mixture(terms)
}

/// Largest absolute character sum `|Σ_b (-1)^{b·x}|` over nonzero `x`.
fn max_character_sum(n: usize, elements: &[u64]) -> i64 {
    (1u64..1 << n)
        .map(|x| {
            elements
                .iter()
                .map(|&b| {
                    if (b & x).count_ones() % 2 == 0 {
                        1i64
                    } else {
                        -1
                    }
                })
                .sum::<i64>()
                .abs()
        })
        .max()
        .unwrap_or(0)
}

fn check_elements(candidate: &[BitString]) -> Result<usize> {
    let first = candidate.first().ok_or(Error::EmptySet)?;
    let n = first.len();
    check_capacity("bias set element bits", n, MAX_SET_BITS)?;
    let mut sorted = candidate.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0].len() != w[1].len() {
            return Err(Error::InvalidParameter("elements differ in length".into()));
        }
        if w[0] == w[1] {
            return Err(Error::DuplicateElement(w[0].to_string()));
        }
    }
    if sorted.last().map(BitString::len) != Some(n) {
        return Err(Error::InvalidParameter("elements differ in length".into()));
    }
    Ok(n)
}

/// Exact maximum over nonzero `x` of `|mean_b (-1)^{b·x}|`.
pub fn measure_bias(candidate: &[BitString]) -> Result<f64> {
    let n = check_elements(candidate)?;
    let values: Vec<u64> = candidate.iter().map(BitString::value).collect();
    Ok(max_character_sum(n, &values) as f64 / values.len() as f64)
}

/// A set of n-bit strings kept in sorted order, so an index is a rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "DeltaBiasedSetRecord", try_from = "DeltaBiasedSetRecord")]
pub struct DeltaBiasedSet {
    n: usize,
    elements: Vec<BitString>,
    measured_bias: f64,
    search_seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DeltaBiasedSetRecord {
    n: usize,
    elements: Vec<String>,
    measured_bias: f64,
    search_seed: Option<u64>,
}

impl From<DeltaBiasedSet> for DeltaBiasedSetRecord {
    fn from(set: DeltaBiasedSet) -> Self {
        Self {
            n: set.n,
            elements: set.elements.iter().map(BitString::to_hex).collect(),
            measured_bias: set.measured_bias,
            search_seed: set.search_seed,
        }
    }
}

impl TryFrom<DeltaBiasedSetRecord> for DeltaBiasedSet {
    type Error = Error;

    fn try_from(r: DeltaBiasedSetRecord) -> Result<Self> {
        let elements = r
            .elements
            .iter()
            .map(|h| BitString::from_hex(r.n, h))
            .collect::<Result<Vec<_>>>()?;
        let set = DeltaBiasedSet::new(elements)?.with_seed(r.search_seed);
        if (set.measured_bias - r.measured_bias).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "recorded bias {} disagrees with recomputed {}",
                r.measured_bias, set.measured_bias
            )));
        }
        Ok(set)
    }
}

impl DeltaBiasedSet {
    pub fn new(mut elements: Vec<BitString>) -> Result<Self> {
        let measured_bias = measure_bias(&elements)?;
        let n = elements[0].len();
        elements.sort();
        Ok(Self {
            n,
            elements,
            measured_bias,
            search_seed: None,
        })
    }

    pub fn full(n: usize) -> Result<Self> {
        check_capacity("bias set element bits", n, MAX_SET_BITS)?;
        Self::new((0..1u64 << n).map(|v| BitString::new(n, v)).collect())
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.search_seed = seed;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BitString] {
        &self.elements
    }

    pub fn measured_bias(&self) -> f64 {
        self.measured_bias
    }

    pub fn search_seed(&self) -> Option<u64> {
        self.search_seed
    }

    pub fn is_full(&self) -> bool {
        self.elements.len() == 1 << self.n
    }

    pub fn element(&self, b_index: usize) -> Result<BitString> {
        self.elements
            .get(b_index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: b_index,
                size: self.elements.len(),
            })
    }

    /// Bits needed to address an element.
    pub fn index_bits(&self) -> usize {
        bits_for(self.elements.len())
    }

    /// Content fingerprint used to tie ciphertexts to the set they need.
    pub fn id(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for e in &self.elements {
            h.update(e.value().to_le_bytes());
        }
        let digest = h.finalize();
        let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
        format!("dbs-n{}-s{}-{hex}", self.n, self.elements.len())
    }
}

#[derive(Clone, Debug)]
pub struct DeltaBiasedSearch {
    pub set: DeltaBiasedSet,
    pub target_met: bool,
    pub evaluations: usize,
}

/// Lexicographic search objective: worst character sum, then total energy.
fn objective(n: usize, elements: &[u64]) -> (i64, i64) {
    let mut worst = 0;
    let mut energy = 0;
    for x in 1u64..1 << n {
        let s: i64 = elements
            .iter()
            .map(|&b| {
                if (b & x).count_ones() % 2 == 0 {
                    1i64
                } else {
                    -1
                }
            })
            .sum();
        worst = worst.max(s.abs());
        energy += s * s;
    }
    (worst, energy)
}

/// Random restarts with single-element swap hill climbing.
///
/// `trial_budget` counts objective evaluations. The best set seen is returned
/// even when `delta_target` is not reached.
pub fn find_delta_biased_set<R: Rng + ?Sized>(
    n: usize,
    size_target: usize,
    delta_target: f64,
    rng: &mut R,
    trial_budget: usize,
) -> Result<DeltaBiasedSearch> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "element length must be positive".into(),
        ));
    }
    check_capacity("bias set element bits", n, MAX_SET_BITS)?;
    let universe = 1usize << n;
    if size_target == 0 || size_target > universe {
        return Err(Error::InvalidParameter(format!(
            "set size {size_target} not in 1..={universe}"
        )));
    }
    let target_sum = (delta_target * size_target as f64 + 1e-9).floor() as i64;
    let finish = |elements: Vec<u64>, evaluations: usize| -> Result<DeltaBiasedSearch> {
        let set =
            DeltaBiasedSet::new(elements.into_iter().map(|v| BitString::new(n, v)).collect())?;
        let target_met = set.measured_bias <= delta_target + 1e-12;
        Ok(DeltaBiasedSearch {
            set,
            target_met,
            evaluations,
        })
    };
    if size_target == universe {
        return finish((0..universe as u64).collect(), 1);
    }

    let stall_limit = 4 * size_target.max(universe - size_target);
    let mut best: Option<(Vec<u64>, (i64, i64))> = None;
    let mut evaluations = 0;
    while evaluations < trial_budget.max(1) {
        let mut current: Vec<u64> = index::sample(rng, universe, size_target)
            .into_iter()
            .map(|v| v as u64)
            .collect();
        let mut score = objective(n, &current);
        evaluations += 1;
        let mut stall = 0;
        while stall < stall_limit && evaluations < trial_budget && score.0 > target_sum {
            let slot = rng.random_range(0..size_target);
            let replacement = rng.random_range(0..universe as u64);
            if current.contains(&replacement) {
                stall += 1;
                continue;
            }
            let old = current[slot];
            current[slot] = replacement;
            let candidate = objective(n, &current);
            evaluations += 1;
            if candidate < score {
                score = candidate;
                stall = 0;
            } else {
                current[slot] = old;
                stall += 1;
            }
        }
        if best.as_ref().is_none_or(|(_, s)| score < *s) {
            best = Some((current, score));
        }
        if best.as_ref().is_some_and(|(_, s)| s.0 <= target_sum) {
            break;
        }
    }
    let (elements, _) = best.expect("at least one restart runs");
    finish(elements, evaluations)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ApqcKey {
    pub a: BitString,
    pub b_index: usize,
}

impl ApqcKey {
    pub fn new(a: BitString, b_index: usize) -> Self {
        Self { a, b_index }
    }

    pub fn random<R: Rng + ?Sized>(set: &DeltaBiasedSet, rng: &mut R) -> Self {
        Self {
            a: BitString::random(set.n(), rng),
            b_index: rng.random_range(0..set.len()),
        }
    }

    /// Key as `a || index`, with `index_bits` bits for the index.
    pub fn to_bits(&self, set: &DeltaBiasedSet) -> BitString {
        self.a
            .concat(&BitString::new(set.index_bits(), self.b_index as u64))
    }

    /// Inverse of `to_bits`; out-of-range indices wrap modulo |B|.
    pub fn from_bits(bits: &BitString, set: &DeltaBiasedSet) -> Result<Self> {
        let expected = set.n() + set.index_bits();
        if bits.len() != expected {
            return Err(Error::KeyLength {
                expected,
                got: bits.len(),
            });
        }
        let (a, idx) = bits.split_at(set.n());
        Ok(Self {
            a,
            b_index: idx.index() % set.len(),
        })
    }
}

/// The three conjugation layers applied in encryption order.
fn apqc_layers(key: &ApqcKey, set: &DeltaBiasedSet) -> Result<[PauliOp; 3]> {
    let n = set.n();
    if key.a.len() != n {
        return Err(Error::KeyLength {
            expected: n,
            got: key.a.len(),
        });
    }
    let b = set.element(key.b_index)?;
    let a_sq = BitString::new(n, gf2n::square(key.a.value(), n)?);
    let zeros = BitString::zeros(n);
    Ok([
        PauliOp::hermitian(zeros, b),
        PauliOp::hermitian(zeros, a_sq),
        PauliOp::hermitian(key.a, zeros),
    ])
}

/// Single Pauli equal to the full encryption conjugation up to phase.
pub fn apqc_pauli(key: &ApqcKey, set: &DeltaBiasedSet) -> Result<PauliOp> {
    let [u_b, z_sq, x_a] = apqc_layers(key, set)?;
    Ok(x_a.compose(&z_sq).compose(&u_b))
}

pub fn apqc_encrypt(
    key: &ApqcKey,
    set: &DeltaBiasedSet,
    message: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_message(set.n(), message)?;
    let mut state = message.clone();
    for layer in apqc_layers(key, set)? {
        state = state.apply_pauli(&layer)?;
    }
    Ok(state)
}

pub fn apqc_decrypt(
    key: &ApqcKey,
    set: &DeltaBiasedSet,
    cipher: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_message(set.n(), cipher)?;
    let mut state = cipher.clone();
    for layer in apqc_layers(key, set)?.iter().rev() {
        state = state.apply_pauli(layer)?;
    }
    Ok(state)
}

/// Average of `apqc_encrypt` over all `a` and every element of the set.
pub fn apqc_mixture(message: &DensityMatrix, set: &DeltaBiasedSet) -> Result<DensityMatrix> {
    let n = set.n();
    check_message(n, message)?;
    check_capacity("approximate pad mixture qubits", n, MAX_MIXTURE_QUBITS)?;
    let keys = (0..1u64 << n)
        .flat_map(|a| (0..set.len()).map(move |b| ApqcKey::new(BitString::new(n, a), b)));
    let terms = keys
        .map(|k| apqc_encrypt(&k, set, message))
        .collect::<Result<Vec<_>>>()?;
    uniform_mixture(terms)
}

/// Messages always added to the gap sample: every basis state, `|+⟩^n`, and
/// `|+i⟩^n`.
pub fn standard_gap_probes(n: usize) -> Result<Vec<DensityMatrix>> {
    use crate::qstate::{pure_state, tensor_all, C64};
    let mut probes = (0..1usize << n)
        .map(|i| DensityMatrix::basis(n, i))
        .collect::<Result<Vec<_>>>()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = pure_state(&[C64::new(h, 0.0), C64::new(h, 0.0)])?;
    let plus_i = pure_state(&[C64::new(h, 0.0), C64::new(0.0, h)])?;
    probes.push(tensor_all(std::iter::repeat_n(&plus, n))?);
    probes.push(tensor_all(std::iter::repeat_n(&plus_i, n))?);
    Ok(probes)
}

/// Largest sampled `D(apqc_mixture(σ), I/2^n)`.
///
/// This is a lower bound on the worst case over all messages. The standard
/// probes are always included alongside `sample_messages`.
pub fn apqc_security_gap(
    set: &DeltaBiasedSet,
    n: usize,
    sample_messages: &[DensityMatrix],
) -> Result<f64> {
    if set.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: set.n(),
        });
    }
    let reference = DensityMatrix::maximally_mixed(n)?;
    let mut gap: f64 = 0.0;
    for sigma in standard_gap_probes(n)?.iter().chain(sample_messages) {
        let mix = apqc_mixture(sigma, set)?;
        gap = gap.max(crate::qstate::trace_distance(&mix, &reference)?);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{pure_state, random_mixed_state, random_pure_state, trace_distance, C64};
    use crate::rng::seeded;
    use nalgebra::DMatrix;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    fn plus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    fn minus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[C64::new(h, 0.0), C64::new(-h, 0.0)]).unwrap()
    }

    fn close(a: &DensityMatrix, b: &DensityMatrix) -> bool {
        a.max_abs_diff(b).unwrap() < 1e-9
    }

    #[test]
    fn pad_examples() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let one = DensityMatrix::basis(1, 1).unwrap();
        let kx = PqcKey::new(1, bs("10")).unwrap();
        let kz = PqcKey::new(1, bs("01")).unwrap();
        assert!(close(&pqc_encrypt(&kx, &zero).unwrap(), &one));
        assert!(close(&pqc_encrypt(&kz, &plus()).unwrap(), &minus()));
        assert!(close(&pqc_decrypt(&kx, &one).unwrap(), &zero));
        assert!(close(
            &pqc_encrypt(&PqcKey::zero(1), &plus()).unwrap(),
            &plus()
        ));
        assert!(PqcKey::new(2, bs("101")).is_err());
        assert!(pqc_encrypt(&kx, &DensityMatrix::basis(2, 0).unwrap()).is_err());
    }

    #[test]
    fn pad_round_trip_all_keys_two_qubits() {
        let mut rng = seeded(3);
        let sigma = random_mixed_state(2, &mut rng);
        for v in 0..16 {
            let k = PqcKey::new(2, BitString::new(4, v)).unwrap();
            let back = pqc_decrypt(&k, &pqc_encrypt(&k, &sigma).unwrap()).unwrap();
            assert!(close(&back, &sigma));
        }
    }

    #[test]
    fn pad_mixture_is_maximally_mixed() {
        let mut rng = seeded(5);
        for n in 1..=3 {
            let target = DensityMatrix::maximally_mixed(n).unwrap();
            for _ in 0..4 {
                let sigma = random_pure_state(n, &mut rng);
                assert!(close(&pqc_mixture(&sigma).unwrap(), &target));
            }
        }
        let half = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(close(
            &pqc_mixture(&DensityMatrix::basis(1, 0).unwrap()).unwrap(),
            &half
        ));
        assert!(close(&pqc_mixture(&half).unwrap(), &half));
        assert!(pqc_mixture(&DensityMatrix::maximally_mixed(6).unwrap()).is_err());
    }

    /// Direct enumeration of the character sums.
    fn bias_oracle(set: &[&str]) -> f64 {
        let n = set[0].len();
        let mut worst: f64 = 0.0;
        for x in 1..(1u64 << n) {
            let mut s = 0.0;
            for b in set {
                let b = u64::from_str_radix(b, 2).unwrap();
                s += if (b & x).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
            }
            worst = worst.max((s / set.len() as f64).abs());
        }
        worst
    }

    #[test]
    fn bias_examples() {
        let full: Vec<BitString> = (0..8).map(|v| BitString::new(3, v)).collect();
        assert_eq!(measure_bias(&full).unwrap(), 0.0);
        assert_eq!(measure_bias(&[bs("000")]).unwrap(), 1.0);
        assert_eq!(measure_bias(&[bs("00"), bs("11")]).unwrap(), 1.0);
        assert_eq!(bias_oracle(&["00", "11"]), 1.0);
        let quad = ["000", "001", "010", "100"];
        let quad_bits: Vec<BitString> = quad.iter().map(|s| bs(s)).collect();
        assert_eq!(measure_bias(&quad_bits).unwrap(), bias_oracle(&quad));
        assert_eq!(measure_bias(&quad_bits).unwrap(), 0.5);
        assert!(matches!(measure_bias(&[]), Err(Error::EmptySet)));
        assert!(matches!(
            measure_bias(&[bs("01"), bs("01")]),
            Err(Error::DuplicateElement(_))
        ));
        assert!(measure_bias(&[bs("01"), bs("011")]).is_err());
    }

    #[test]
    fn search_examples() {
        let mut rng = seeded(11);
        let full = find_delta_biased_set(3, 8, 0.0, &mut rng, 10).unwrap();
        assert!(full.target_met);
        assert_eq!(full.set.measured_bias(), 0.0);
        assert!(full.set.is_full());

        let found = find_delta_biased_set(4, 8, 0.5, &mut rng, 5_000).unwrap();
        assert!(found.target_met);
        assert_eq!(found.set.len(), 8);
        assert!(found.set.measured_bias() <= 0.5);
        assert_eq!(
            measure_bias(found.set.elements()).unwrap(),
            found.set.measured_bias()
        );

        let single = find_delta_biased_set(2, 1, 0.9, &mut rng, 50).unwrap();
        assert!(!single.target_met);
        assert_eq!(single.set.measured_bias(), 1.0);
        assert!(find_delta_biased_set(2, 5, 0.5, &mut rng, 10).is_err());
    }

    #[test]
    fn search_is_deterministic() {
        let a = find_delta_biased_set(5, 8, 0.25, &mut seeded(2), 2_000).unwrap();
        let b = find_delta_biased_set(5, 8, 0.25, &mut seeded(2), 2_000).unwrap();
        assert_eq!(a.set, b.set);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn set_json_round_trip() {
        let set = DeltaBiasedSet::new(vec![bs("100"), bs("000"), bs("010"), bs("001")])
            .unwrap()
            .with_seed(Some(4));
        assert_eq!(set.elements()[0], bs("000"));
        let json = serde_json::to_value(&set).unwrap();
        assert_eq!(json["elements"][3], "4");
        assert_eq!(json["measured_bias"], 0.5);
        let back: DeltaBiasedSet = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(back, set);
        let mut bad = json;
        bad["measured_bias"] = serde_json::json!(0.1);
        assert!(serde_json::from_value::<DeltaBiasedSet>(bad).is_err());
        assert_ne!(set.id(), DeltaBiasedSet::full(3).unwrap().id());
    }

    #[test]
    fn apqc_examples() {
        let full1 = DeltaBiasedSet::full(1).unwrap();
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let k = ApqcKey::new(bs("0"), 0);
        assert!(close(&apqc_encrypt(&k, &full1, &plus()).unwrap(), &plus()));

        // a = 1, b = 0: explicit X Z conjugation.
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| C64::new(v, 0.0)));
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(|v| C64::new(v, 0.0)));
        let u = &x * &z;
        let expected = u.clone() * zero.matrix() * u.adjoint();
        let got = apqc_encrypt(&ApqcKey::new(bs("1"), 0), &full1, &zero).unwrap();
        assert!((got.matrix() - expected).iter().all(|e| e.norm() < 1e-12));
        assert!(close(&got, &DensityMatrix::basis(1, 1).unwrap()));

        // U_b with b = 11 puts phase -1 on |01⟩.
        let set = DeltaBiasedSet::new(vec![bs("11")]).unwrap();
        let u_b = apqc_pauli(&ApqcKey::new(bs("00"), 0), &set)
            .unwrap()
            .matrix();
        assert!((u_b[(1, 1)] - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((u_b[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);

        assert!(apqc_encrypt(
            &ApqcKey::new(bs("00"), 1),
            &set,
            &DensityMatrix::basis(2, 0).unwrap()
        )
        .is_err());
    }

    #[test]
    fn apqc_round_trip_exhaustive() {
        let mut rng = seeded(8);
        let set = find_delta_biased_set(2, 2, 1.0, &mut rng, 100).unwrap().set;
        let sigma = random_mixed_state(2, &mut rng);
        for a in 0..4 {
            for b in 0..set.len() {
                let k = ApqcKey::new(BitString::new(2, a), b);
                let c = apqc_encrypt(&k, &set, &sigma).unwrap();
                assert!(close(&apqc_decrypt(&k, &set, &c).unwrap(), &sigma));
                let k2 = ApqcKey::random(&set, &mut rng);
                let cc = apqc_encrypt(&k2, &set, &c).unwrap();
                let back = apqc_decrypt(&k, &set, &apqc_decrypt(&k2, &set, &cc).unwrap()).unwrap();
                assert!(close(&back, &sigma));
            }
        }
    }

    #[test]
    fn apqc_key_bits_wrap_modulo_set_size() {
        let set = DeltaBiasedSet::new(vec![bs("000"), bs("011"), bs("101")]).unwrap();
        let k = ApqcKey::new(bs("110"), 2);
        let bits = k.to_bits(&set);
        assert_eq!(bits.len(), 5);
        assert_eq!(ApqcKey::from_bits(&bits, &set).unwrap(), k);
        let wrapped = ApqcKey::from_bits(&bs("11011"), &set).unwrap();
        assert_eq!(wrapped.b_index, 0);
    }

    /// Sum over keys built from explicit 2×2 factors.
    fn apqc_mixture_oracle(sigma: &DensityMatrix, set: &DeltaBiasedSet) -> DMatrix<C64> {
        let n = set.n();
        let d = 1usize << n;
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for a in 0..(1u64 << n) {
            let a_sq = gf2n::square(a, n).unwrap();
            for b in set.elements() {
                let zmask = a_sq ^ b.value();
                let mut u = DMatrix::<C64>::zeros(d, d);
                for col in 0..d as u64 {
                    let sign = if (zmask & col).count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    u[((col ^ a) as usize, col as usize)] = C64::new(sign, 0.0);
                }
                acc += &u * sigma.matrix() * u.adjoint();
            }
        }
        acc / C64::new(((1usize << n) * set.len()) as f64, 0.0)
    }

    #[test]
    fn apqc_mixture_matches_oracle() {
        let mut rng = seeded(21);
        let sigma = random_mixed_state(2, &mut rng);
        for set in [
            DeltaBiasedSet::full(2).unwrap(),
            DeltaBiasedSet::new(vec![bs("01"), bs("10")]).unwrap(),
        ] {
            let got = apqc_mixture(&sigma, &set).unwrap();
            let want = apqc_mixture_oracle(&sigma, &set);
            assert!((got.matrix() - want).iter().all(|e| e.norm() < 1e-12));
        }
        let full = DeltaBiasedSet::full(2).unwrap();
        let target = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(close(&apqc_mixture(&sigma, &full).unwrap(), &target));
        assert!(close(&apqc_mixture(&target, &full).unwrap(), &target));
    }

    #[test]
    fn gap_examples() {
        let mut rng = seeded(4);
        let samples: Vec<_> = (0..3).map(|_| random_pure_state(2, &mut rng)).collect();
        let full = DeltaBiasedSet::full(2).unwrap();
        assert!(apqc_security_gap(&full, 2, &samples).unwrap() < 1e-9);

        // Singleton {0}: the plus state is hidden by the squaring term; the
        // Y eigenstate survives untouched, at distance 1/2 from I/2.
        let single = DeltaBiasedSet::new(vec![bs("0")]).unwrap();
        let half = DensityMatrix::maximally_mixed(1).unwrap();
        let d_plus = trace_distance(&apqc_mixture(&plus(), &single).unwrap(), &half).unwrap();
        assert!(d_plus < 1e-12);
        let gap = apqc_security_gap(&single, 1, &[plus()]).unwrap();
        assert!((gap - 0.5).abs() < 1e-12);

        let set = DeltaBiasedSet::new(vec![bs("01"), bs("10")]).unwrap();
        let sigma = random_pure_state(2, &mut rng);
        let d = trace_distance(
            &apqc_mixture(&sigma, &set).unwrap(),
            &DensityMatrix::maximally_mixed(2).unwrap(),
        )
        .unwrap();
        assert!(d <= apqc_security_gap(&set, 2, &[sigma]).unwrap() + 1e-12);
        assert!(apqc_security_gap(&set, 3, &[]).is_err());
    }

    #[test]
    fn gap_shrinks_along_nested_sets() {
        let mut rng = seeded(31);
        let samples: Vec<_> = (0..5).map(|_| random_pure_state(2, &mut rng)).collect();
        let chain = [
            vec![bs("00")],
            vec![bs("00"), bs("01"), bs("10")],
            vec![bs("00"), bs("01"), bs("10"), bs("11")],
        ];
        let gaps: Vec<f64> = chain
            .into_iter()
            .map(|els| apqc_security_gap(&DeltaBiasedSet::new(els).unwrap(), 2, &samples).unwrap())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
        assert!(gaps[2] < 1e-9);
    }
}
