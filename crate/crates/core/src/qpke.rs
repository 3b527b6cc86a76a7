//! Public-key encryption of classical bits with two-branch key states, and of
//! quantum messages by sending a one-time-pad key under those bit ciphers.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{bits_for, BitString};
use crate::error::{Error, Result};
use crate::pqc::{
    apqc_decrypt, apqc_encrypt, pqc_decrypt, pqc_encrypt, ApqcKey, DeltaBiasedSet, PqcKey,
};
use crate::qstate::{
    check_capacity, cnot, hadamard, pure_state, tensor_all, uniform_mixture, DensityMatrix,
    PauliOp, C64, MAX_QUBITS,
};

/// Attempts at drawing `s` with odd-parity `F(s)` before giving up.
pub const REJECTION_BUDGET: usize = 64;
/// Largest register size for which the full key-space mixture is built.
pub const MAX_MIXTURE_REGISTER: usize = 6;

pub fn is_odd_parity(k: &BitString) -> bool {
    k.is_odd_parity()
}

/// All n-bit strings of odd weight, ascending.
pub fn odd_parity_strings(n: usize) -> Vec<BitString> {
    (0..1u64 << n)
        .map(|v| BitString::new(n, v))
        .filter(BitString::is_odd_parity)
        .collect()
}

/// The secret map from public tags `s` to trapdoors `k`.
///
/// Realized as SHA-256 over a domain label, the seed and `s`, truncated to `n`
/// bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKeyF {
    n: usize,
    s_bits: usize,
    seed: u64,
}

pub fn keygen_private(n: usize, seed: u64) -> Result<PrivateKeyF> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "register size {n} < 2 leaves a single trapdoor"
        )));
    }
    check_capacity("key register qubits", n, 32)?;
    Ok(PrivateKeyF {
        n,
        s_bits: 2 * n,
        seed,
    })
}

impl PrivateKeyF {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s_bits(&self) -> usize {
        self.s_bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn eval(&self, s: &BitString) -> Result<BitString> {
        if s.len() != self.s_bits {
            return Err(Error::KeyLength {
                expected: self.s_bits,
                got: s.len(),
            });
        }
        let mut h = Sha256::new();
        h.update(b"qpke-lab/F");
        h.update(self.seed.to_le_bytes());
        h.update((self.s_bits as u64).to_le_bytes());
        h.update(s.value().to_le_bytes());
        let digest = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        Ok(BitString::new(
            self.n,
            u64::from_be_bytes(word) >> (64 - self.n),
        ))
    }
}

/// `½(|i⟩ + |i⊕k⟩)(⟨i| + ⟨i⊕k|)`.
pub fn public_key_state(k: &BitString, i: &BitString) -> Result<DensityMatrix> {
    if k.len() != i.len() {
        return Err(Error::KeyLength {
            expected: i.len(),
            got: k.len(),
        });
    }
    if k.is_zero() {
        return Err(Error::InvalidParameter("trapdoor must be nonzero".into()));
    }
    let n = k.len();
    check_capacity("key register qubits", n, MAX_QUBITS)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[i.index()] = C64::new(h, 0.0);
    amps[i.xor(k).index()] = C64::new(h, 0.0);
    pure_state(&amps)
}

/// `(⊗Z)^l`.
pub fn phase_flip_operator(n: usize, l: bool) -> PauliOp {
    let z = if l {
        BitString::ones(n)
    } else {
        BitString::zeros(n)
    };
    PauliOp::hermitian(BitString::zeros(n), z)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyLedgerEntry {
    #[serde(with = "hex_bits")]
    pub s: BitString,
    #[serde(with = "hex_bits")]
    pub k: BitString,
    #[serde(with = "hex_bits")]
    pub i: BitString,
    pub issued: bool,
}

/// Serializes a bit string as `{len, hex}`.
pub(crate) mod hex_bits {
    use super::BitString;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        len: usize,
        hex: String,
    }

    pub fn serialize<S: Serializer>(b: &BitString, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            len: b.len(),
            hex: b.to_hex(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BitString, D::Error> {
        let r = Repr::deserialize(d)?;
        BitString::from_hex(r.len, &r.hex).map_err(serde::de::Error::custom)
    }
}

/// Holds `F` and the ledger; the only place public keys are minted.
#[derive(Debug)]
pub struct KeyIssuer {
    f: PrivateKeyF,
    ledger: Vec<KeyLedgerEntry>,
    pairs: HashSet<(BitString, BitString)>,
    per_s: HashMap<BitString, usize>,
}

/// The single quantum copy of a public key. Deliberately not `Clone`.
#[derive(Debug)]
pub struct PublicKey {
    n: usize,
    s: BitString,
    state: DensityMatrix,
    used: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKeyTag {
    pub n: usize,
    pub s: String,
    pub used: bool,
}

/// Secret material, written only to a dedicated file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SecretLedger {
    pub n: usize,
    pub s_bits: usize,
    pub seed: u64,
    pub entries: Vec<KeyLedgerEntry>,
}

impl KeyIssuer {
    pub fn new(f: PrivateKeyF) -> Self {
        Self {
            f,
            ledger: Vec::new(),
            pairs: HashSet::new(),
            per_s: HashMap::new(),
        }
    }

    pub fn private_key(&self) -> &PrivateKeyF {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.n
    }

    pub fn ledger(&self) -> &[KeyLedgerEntry] {
        &self.ledger
    }

    /// Draws `s` until `F(s)` has odd weight, draws a fresh `i`, and prepares
    /// the one copy of `ρ_{k,i}`.
    ///
    /// The returned entry is marked issued; the issuer never releases a
    /// second copy for it. Tags whose every `i` is taken count as rejections.
    pub fn issue_public_key<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<(PublicKey, KeyLedgerEntry)> {
        let n = self.f.n;
        check_capacity("key register qubits", n, MAX_QUBITS)?;
        let full = |s: &BitString| self.per_s.get(s).copied().unwrap_or(0) >= 1usize << n;
        let (s, k) = (0..REJECTION_BUDGET)
            .find_map(|_| {
                let s = BitString::random(self.f.s_bits, rng);
                let k = self.f.eval(&s).ok()?;
                (k.is_odd_parity() && !full(&s)).then_some((s, k))
            })
            .ok_or(Error::RejectionBudgetExhausted(REJECTION_BUDGET))?;
        let i = loop {
            let i = BitString::random(n, rng);
            if !self.pairs.contains(&(s, i)) {
                break i;
            }
        };
        let state = public_key_state(&k, &i)?;
        let entry = KeyLedgerEntry {
            s,
            k,
            i,
            issued: true,
        };
        self.pairs.insert((s, i));
        *self.per_s.entry(s).or_default() += 1;
        self.ledger.push(entry.clone());
        let pk = PublicKey {
            n,
            s,
            state,
            used: false,
        };
        Ok((pk, entry))
    }

    pub fn issue_many<R: Rng + ?Sized>(
        &mut self,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<PublicKey>> {
        (0..count)
            .map(|_| self.issue_public_key(rng).map(|(pk, _)| pk))
            .collect()
    }

    pub fn secret_ledger(&self) -> SecretLedger {
        SecretLedger {
            n: self.f.n,
            s_bits: self.f.s_bits,
            seed: self.f.seed,
            entries: self.ledger.clone(),
        }
    }
}

impl PublicKey {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> BitString {
        self.s
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    pub fn tag(&self) -> PublicKeyTag {
        PublicKeyTag {
            n: self.n,
            s: self.s.to_hex(),
            used: self.used,
        }
    }

    pub(crate) fn into_state(self) -> DensityMatrix {
        self.state
    }
}

/// Applies `(⊗Z)^l` to the key state and consumes the key.
pub fn encrypt_bit(pk: &mut PublicKey, l: bool) -> Result<DensityMatrix> {
    if pk.used {
        return Err(Error::KeyReused(pk.s.to_hex()));
    }
    pk.used = true;
    pk.state.apply_pauli(&phase_flip_operator(pk.n, l))
}

/// Trapdoor measurement given `k` directly.
///
/// CNOTs from the lowest set bit `p` of `k` onto its other set bits make the
/// two branches differ only at `p`; a Hadamard there turns the relative sign
/// into the outcome.
pub fn decrypt_bit_with_trapdoor(k: &BitString, cipher: &DensityMatrix) -> Result<bool> {
    let n = k.len();
    if cipher.qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cipher.qubits(),
        });
    }
    if !k.is_odd_parity() {
        return Err(Error::EvenParityKey(k.to_string()));
    }
    let diag = cipher.diagonal();
    let support = pair_support(cipher, 1e-6);
    let paired = support.len() == 2
        && support[0] ^ support[1] == k.index()
        && support.iter().all(|&j| (diag[j] - 0.5).abs() <= 1e-6);
    if !paired {
        return Err(Error::DecodeFailure(format!(
            "register not supported on a pair differing by {k}"
        )));
    }
    let pivot = (0..n)
        .find(|&j| k.bit(j))
        .expect("odd weight implies a set bit");
    let mut state = cipher.clone();
    for q in (0..n).filter(|&q| q != pivot && k.bit(q)) {
        state = state.apply_local_unitary(&[pivot, q], &cnot())?;
    }
    state = state.apply_local_unitary(&[pivot], &hadamard())?;
    let p1 = state.outcome_distribution(&[pivot])?[1];
    if p1 >= 1.0 - 1e-6 {
        Ok(true)
    } else if p1 <= 1e-6 {
        Ok(false)
    } else {
        Err(Error::DecodeFailure(format!(
            "trapdoor measurement not deterministic (p1 = {p1:.6})"
        )))
    }
}

pub fn decrypt_bit(f: &PrivateKeyF, s: &BitString, cipher: &DensityMatrix) -> Result<bool> {
    let k = f.eval(s)?;
    if !k.is_odd_parity() {
        return Err(Error::EvenParityKey(k.to_string()));
    }
    decrypt_bit_with_trapdoor(&k, cipher)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CipherMode {
    Pqc,
    Apqc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumCiphertext {
    pub mode: CipherMode,
    pub s_list: Vec<BitString>,
    pub bit_registers: Vec<DensityMatrix>,
    pub message_register: DensityMatrix,
    pub apqc_set_ref: Option<String>,
}

impl QuantumCiphertext {
    pub fn total_qubits(&self) -> usize {
        self.bit_registers
            .iter()
            .map(DensityMatrix::qubits)
            .sum::<usize>()
            + self.message_register.qubits()
    }
}

/// Register dump as row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegisterDump {
    pub qubits: usize,
    pub entries: Vec<[f64; 2]>,
}

impl RegisterDump {
    pub fn of(state: &DensityMatrix) -> Self {
        let m = state.matrix();
        let d = state.dim();
        let entries = (0..d)
            .flat_map(|r| (0..d).map(move |c| [m[(r, c)].re, m[(r, c)].im]))
            .collect();
        Self {
            qubits: state.qubits(),
            entries,
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        let d = 1usize << self.qubits;
        if self.entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: self.entries.len(),
            });
        }
        let m = nalgebra::DMatrix::from_fn(d, d, |r, c| {
            let [re, im] = self.entries[r * d + c];
            C64::new(re, im)
        });
        DensityMatrix::from_matrix(m)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CiphertextRecord {
    pub mode: CipherMode,
    pub s_bits: usize,
    pub s_list: Vec<String>,
    pub bit_registers: Vec<RegisterDump>,
    pub message_register: RegisterDump,
    pub apqc_set_ref: Option<String>,
}

impl QuantumCiphertext {
    pub fn to_record(&self) -> CiphertextRecord {
        CiphertextRecord {
            mode: self.mode,
            s_bits: self.s_list.first().map_or(0, BitString::len),
            s_list: self.s_list.iter().map(BitString::to_hex).collect(),
            bit_registers: self.bit_registers.iter().map(RegisterDump::of).collect(),
            message_register: RegisterDump::of(&self.message_register),
            apqc_set_ref: self.apqc_set_ref.clone(),
        }
    }

    pub fn from_record(r: &CiphertextRecord) -> Result<Self> {
        Ok(Self {
            mode: r.mode,
            s_list: r
                .s_list
                .iter()
                .map(|h| BitString::from_hex(r.s_bits, h))
                .collect::<Result<_>>()?,
            bit_registers: r
                .bit_registers
                .iter()
                .map(RegisterDump::to_state)
                .collect::<Result<_>>()?,
            message_register: r.message_register.to_state()?,
            apqc_set_ref: r.apqc_set_ref.clone(),
        })
    }
}

/// Checks key count and freshness before any key is consumed.
fn check_keys(pks: &[PublicKey], n: usize, needed: usize) -> Result<()> {
    if pks.len() != needed {
        return Err(Error::InsufficientKeys {
            needed,
            got: pks.len(),
        });
    }
    if let Some(pk) = pks.iter().find(|pk| pk.n != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pk.n,
        });
    }
    if let Some(pk) = pks.iter().find(|pk| pk.used) {
        return Err(Error::KeyReused(pk.s.to_hex()));
    }
    Ok(())
}

/// Encrypts each bit of `key_bits` under one key; consumes every key.
pub fn encrypt_bits(
    pks: &mut [PublicKey],
    key_bits: &BitString,
) -> Result<(Vec<BitString>, Vec<DensityMatrix>)> {
    let n = pks.first().map_or(0, |pk| pk.n);
    check_keys(pks, n, key_bits.len())?;
    let mut registers = Vec::with_capacity(pks.len());
    for (pk, l) in pks.iter_mut().zip(key_bits.bits()) {
        registers.push(encrypt_bit(pk, l)?);
    }
    Ok((pks.iter().map(|pk| pk.s).collect(), registers))
}

/// Recovers the encrypted classical string, reporting the first failing bit.
pub fn decrypt_bits(
    f: &PrivateKeyF,
    s_list: &[BitString],
    registers: &[DensityMatrix],
) -> Result<BitString> {
    if s_list.len() != registers.len() {
        return Err(Error::DimensionMismatch {
            expected: s_list.len(),
            got: registers.len(),
        });
    }
    let bits = s_list
        .iter()
        .zip(registers)
        .enumerate()
        .map(|(position, (s, reg))| {
            decrypt_bit(f, s, reg).map_err(|e| Error::BitDecodeFailure {
                position,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BitString::from_bits(&bits))
}

pub fn encrypt_message<R: Rng + ?Sized>(
    pks: &mut [PublicKey],
    message: &DensityMatrix,
    rng: &mut R,
) -> Result<QuantumCiphertext> {
    let key = PqcKey::random(message.qubits(), rng);
    encrypt_message_with_key(pks, message, &key)
}

/// `encrypt_message` with the pad key supplied by the caller.
pub fn encrypt_message_with_key(
    pks: &mut [PublicKey],
    message: &DensityMatrix,
    key: &PqcKey,
) -> Result<QuantumCiphertext> {
    let n = message.qubits();
    check_keys(pks, n, 2 * n)?;
    let message_register = pqc_encrypt(key, message)?;
    let (s_list, bit_registers) = encrypt_bits(pks, &key.bits())?;
    Ok(QuantumCiphertext {
        mode: CipherMode::Pqc,
        s_list,
        bit_registers,
        message_register,
        apqc_set_ref: None,
    })
}

pub fn decrypt_message(f: &PrivateKeyF, ct: &QuantumCiphertext) -> Result<DensityMatrix> {
    if ct.mode != CipherMode::Pqc {
        return Err(Error::InvalidParameter(
            "ciphertext uses the approximate pad; call decrypt_message_apqc".into(),
        ));
    }
    let n = ct.message_register.qubits();
    if ct.s_list.len() != 2 * n {
        return Err(Error::KeyLength {
            expected: 2 * n,
            got: ct.s_list.len(),
        });
    }
    let bits = decrypt_bits(f, &ct.s_list, &ct.bit_registers)?;
    pqc_decrypt(&PqcKey::new(n, bits)?, &ct.message_register)
}

/// Key length for the approximate pad: `n + ceil(log2 |B|)`.
pub fn apqc_key_bits(set: &DeltaBiasedSet) -> usize {
    set.n() + bits_for(set.len())
}

pub fn encrypt_message_apqc<R: Rng + ?Sized>(
    pks: &mut [PublicKey],
    message: &DensityMatrix,
    set: &DeltaBiasedSet,
    rng: &mut R,
) -> Result<QuantumCiphertext> {
    let key = ApqcKey::random(set, rng);
    encrypt_message_apqc_with_key(pks, message, set, &key)
}

pub fn encrypt_message_apqc_with_key(
    pks: &mut [PublicKey],
    message: &DensityMatrix,
    set: &DeltaBiasedSet,
    key: &ApqcKey,
) -> Result<QuantumCiphertext> {
    let n = message.qubits();
    if set.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: set.n(),
        });
    }
    check_keys(pks, n, apqc_key_bits(set))?;
    let message_register = apqc_encrypt(key, set, message)?;
    let (s_list, bit_registers) = encrypt_bits(pks, &key.to_bits(set))?;
    Ok(QuantumCiphertext {
        mode: CipherMode::Apqc,
        s_list,
        bit_registers,
        message_register,
        apqc_set_ref: Some(set.id()),
    })
}

pub fn decrypt_message_apqc(
    f: &PrivateKeyF,
    ct: &QuantumCiphertext,
    set: &DeltaBiasedSet,
) -> Result<DensityMatrix> {
    if ct.mode != CipherMode::Apqc {
        return Err(Error::InvalidParameter(
            "ciphertext uses the exact pad".into(),
        ));
    }
    if ct.apqc_set_ref.as_deref() != Some(set.id().as_str()) {
        return Err(Error::InvalidParameter(format!(
            "ciphertext refers to set {:?}, not {}",
            ct.apqc_set_ref,
            set.id()
        )));
    }
    let bits = decrypt_bits(f, &ct.s_list, &ct.bit_registers)?;
    let key = ApqcKey::from_bits(&bits, set)?;
    apqc_decrypt(&key, set, &ct.message_register)
}

/// Uniform mixture of `ρ_{k,i}^{(l)}` over all odd-weight `k` and all `i`.
pub fn bit_cipher_mixture(n: usize, l: bool) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("register size {n} < 2")));
    }
    check_capacity("bit cipher mixture register", n, MAX_MIXTURE_REGISTER)?;
    let v = phase_flip_operator(n, l);
    let mut terms = Vec::with_capacity(1 << (2 * n - 1));
    for k in odd_parity_strings(n) {
        for i in 0..1u64 << n {
            terms.push(public_key_state(&k, &BitString::new(n, i))?.apply_pauli(&v)?);
        }
    }
    uniform_mixture(terms)
}

/// `⊗_j M(l_j)` for a classical key string `l`.
pub fn bit_register_mixture(n: usize, l: &BitString) -> Result<DensityMatrix> {
    let m0 = bit_cipher_mixture(n, false)?;
    let m1 = bit_cipher_mixture(n, true)?;
    tensor_all(l.bits().map(|b| if b { &m1 } else { &m0 }))
}

/// The eavesdropper's view of a full ciphertext, averaged over pad keys and
/// key states. Only `n = 2` fits.
pub fn global_cipher_mixture(message: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    if n != 2 {
        return Err(Error::Capacity {
            what: "global ciphertext mixture register size",
            requested: n,
            limit: 2,
        });
    }
    if message.qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: message.qubits(),
        });
    }
    let m = [bit_cipher_mixture(n, false)?, bit_cipher_mixture(n, true)?];
    let mut terms = Vec::with_capacity(1 << (2 * n));
    for l in 0..1u64 << (2 * n) {
        let key = PqcKey::new(n, BitString::new(2 * n, l))?;
        let registers = tensor_all(key.bits().bits().map(|b| &m[b as usize]))?;
        terms.push(crate::qstate::tensor(
            &registers,
            &pqc_encrypt(&key, message)?,
        )?);
    }
    uniform_mixture(terms)
}

/// Basis indices carrying more than `tol` probability.
pub fn pair_support(cipher: &DensityMatrix, tol: f64) -> Vec<usize> {
    let diag = cipher.diagonal();
    (0..diag.len()).filter(|&j| diag[j] > tol).collect()
}
