//! Authentication of quantum messages: pad-encrypt, then encode into a secret
//! syndrome coset of a secret code from a family. The public-key variant
//! sends the secret `u = x || z || y` under bit ciphers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{bits_for, BitString};
use crate::error::{Error, Result};
use crate::pqc::{
    apqc_decrypt, apqc_encrypt, pqc_decrypt, pqc_encrypt, ApqcKey, DeltaBiasedSet, PqcKey,
};
use crate::qpke::{decrypt_bits, encrypt_bits, CipherMode, PrivateKeyF, PublicKey, RegisterDump};
use crate::qstate::{uniform_mixture, DensityMatrix};
use crate::stabilizer::{decode, encode, measure_syndrome, SptcFamily};

/// Largest parameters for which `auth_mixture` enumerates every key.
pub const MIXTURE_MAX_LOGICAL: usize = 2;
pub const MIXTURE_MAX_CHECKS: usize = 2;
pub const MIXTURE_MAX_FAMILY: usize = 4;

/// Pad applied to the message before encoding.
#[derive(Clone, Copy, Debug)]
pub enum MessageLayer<'a> {
    Pqc,
    Apqc(&'a DeltaBiasedSet),
}

impl MessageLayer<'_> {
    pub fn mode(&self) -> CipherMode {
        match self {
            MessageLayer::Pqc => CipherMode::Pqc,
            MessageLayer::Apqc(_) => CipherMode::Apqc,
        }
    }

    pub fn key_bits(&self, n: usize) -> usize {
        match self {
            MessageLayer::Pqc => 2 * n,
            MessageLayer::Apqc(set) => set.n() + bits_for(set.len()),
        }
    }

    fn set_ref(&self) -> Option<String> {
        match self {
            MessageLayer::Pqc => None,
            MessageLayer::Apqc(set) => Some(set.id()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKey {
    Pqc(PqcKey),
    Apqc(ApqcKey),
}

impl MessageKey {
    fn encrypt(&self, layer: &MessageLayer, sigma: &DensityMatrix) -> Result<DensityMatrix> {
        match (self, layer) {
            (MessageKey::Pqc(k), MessageLayer::Pqc) => pqc_encrypt(k, sigma),
            (MessageKey::Apqc(k), MessageLayer::Apqc(set)) => apqc_encrypt(k, set, sigma),
            _ => Err(Error::InvalidParameter(
                "key does not match the message layer".into(),
            )),
        }
    }

    fn decrypt(&self, layer: &MessageLayer, cipher: &DensityMatrix) -> Result<DensityMatrix> {
        match (self, layer) {
            (MessageKey::Pqc(k), MessageLayer::Pqc) => pqc_decrypt(k, cipher),
            (MessageKey::Apqc(k), MessageLayer::Apqc(set)) => apqc_decrypt(k, set, cipher),
            _ => Err(Error::InvalidParameter(
                "key does not match the message layer".into(),
            )),
        }
    }

    fn to_bits(self, layer: &MessageLayer) -> BitString {
        match (self, layer) {
            (MessageKey::Pqc(k), _) => k.bits(),
            (MessageKey::Apqc(k), MessageLayer::Apqc(set)) => k.to_bits(set),
            (MessageKey::Apqc(k), MessageLayer::Pqc) => k.a,
        }
    }
}

/// `u = x || z || y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuthKey {
    pub x: MessageKey,
    pub z: usize,
    pub y: BitString,
}

/// Bits of `u` for a family and layer: `|x| + ceil(log2 |K|) + t`.
pub fn auth_key_bits(family: &SptcFamily, layer: &MessageLayer) -> usize {
    layer.key_bits(family.n_log()) + bits_for(family.len()) + family.syndrome_bits()
}

impl AuthKey {
    pub fn random<R: Rng + ?Sized>(family: &SptcFamily, layer: &MessageLayer, rng: &mut R) -> Self {
        let x = match layer {
            MessageLayer::Pqc => MessageKey::Pqc(PqcKey::random(family.n_log(), rng)),
            MessageLayer::Apqc(set) => MessageKey::Apqc(ApqcKey::random(set, rng)),
        };
        Self {
            x,
            z: rng.random_range(0..family.len()),
            y: BitString::random(family.syndrome_bits(), rng),
        }
    }

    pub fn to_bits(&self, family: &SptcFamily, layer: &MessageLayer) -> BitString {
        self.x
            .to_bits(layer)
            .concat(&BitString::new(bits_for(family.len()), self.z as u64))
            .concat(&self.y)
    }

    /// Inverse of `to_bits`. Out-of-range indices wrap modulo the family or
    /// set size.
    pub fn from_bits(bits: &BitString, family: &SptcFamily, layer: &MessageLayer) -> Result<Self> {
        let expected = auth_key_bits(family, layer);
        if bits.len() != expected {
            return Err(Error::KeyLength {
                expected,
                got: bits.len(),
            });
        }
        let n = family.n_log();
        let (x_bits, rest) = bits.split_at(layer.key_bits(n));
        let (z_bits, y) = rest.split_at(bits_for(family.len()));
        let x = match layer {
            MessageLayer::Pqc => MessageKey::Pqc(PqcKey::new(n, x_bits)?),
            MessageLayer::Apqc(set) => MessageKey::Apqc(ApqcKey::from_bits(&x_bits, set)?),
        };
        Ok(Self {
            x,
            z: z_bits.index() % family.len(),
            y,
        })
    }
}

fn check_layer(family: &SptcFamily, layer: &MessageLayer) -> Result<()> {
    if let MessageLayer::Apqc(set) = layer {
        if set.n() != family.n_log() {
            return Err(Error::DimensionMismatch {
                expected: family.n_log(),
                got: set.n(),
            });
        }
    }
    Ok(())
}

pub fn auth_encode(
    u: &AuthKey,
    family: &SptcFamily,
    layer: &MessageLayer,
    message: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_layer(family, layer)?;
    let code = family.code(u.z)?;
    encode(code, &u.y, &u.x.encrypt(layer, message)?)
}

#[derive(Clone, Debug)]
pub struct AuthVerdict {
    pub accepted: bool,
    pub message: Option<DensityMatrix>,
    pub observed_syndrome: Option<BitString>,
    pub diagnostic: Option<String>,
}

impl AuthVerdict {
    fn reject(observed: Option<BitString>, diagnostic: String) -> Self {
        Self {
            accepted: false,
            message: None,
            observed_syndrome: observed,
            diagnostic: Some(diagnostic),
        }
    }
}

/// Measures the syndrome of code `z`; accepts iff it equals `y`.
pub fn auth_verify_decode<R: Rng + ?Sized>(
    u: &AuthKey,
    family: &SptcFamily,
    layer: &MessageLayer,
    received: &DensityMatrix,
    rng: &mut R,
) -> Result<AuthVerdict> {
    check_layer(family, layer)?;
    let code = family.code(u.z)?;
    let m = measure_syndrome(code, received, rng)?;
    if m.syndrome != u.y {
        return Ok(AuthVerdict::reject(
            Some(m.syndrome),
            format!("syndrome {} differs from key syndrome {}", m.syndrome, u.y),
        ));
    }
    let inner = decode(code, &u.y, &m.post_state)?;
    Ok(AuthVerdict {
        accepted: true,
        message: Some(u.x.decrypt(layer, &inner)?),
        observed_syndrome: Some(m.syndrome),
        diagnostic: None,
    })
}

#[derive(Clone, Debug)]
pub struct AuthBundle {
    pub mode: CipherMode,
    pub family_id: String,
    pub apqc_set_ref: Option<String>,
    pub s_list: Vec<BitString>,
    pub bit_registers: Vec<DensityMatrix>,
    pub payload: DensityMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuthBundleRecord {
    pub mode: CipherMode,
    pub family_id: String,
    pub apqc_set_ref: Option<String>,
    pub s_bits: usize,
    pub s_list: Vec<String>,
    pub bit_registers: Vec<RegisterDump>,
    pub payload: RegisterDump,
}

impl AuthBundle {
    pub fn to_record(&self) -> AuthBundleRecord {
        AuthBundleRecord {
            mode: self.mode,
            family_id: self.family_id.clone(),
            apqc_set_ref: self.apqc_set_ref.clone(),
            s_bits: self.s_list.first().map_or(0, BitString::len),
            s_list: self.s_list.iter().map(BitString::to_hex).collect(),
            bit_registers: self.bit_registers.iter().map(RegisterDump::of).collect(),
            payload: RegisterDump::of(&self.payload),
        }
    }

    pub fn from_record(r: &AuthBundleRecord) -> Result<Self> {
        Ok(Self {
            mode: r.mode,
            family_id: r.family_id.clone(),
            apqc_set_ref: r.apqc_set_ref.clone(),
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
            payload: r.payload.to_state()?,
        })
    }
}

/// Samples `u`, authenticates the message, and encrypts `u` bit by bit.
pub fn pk_authenticate<R: Rng + ?Sized>(
    pks: &mut [PublicKey],
    family: &SptcFamily,
    layer: &MessageLayer,
    message: &DensityMatrix,
    rng: &mut R,
) -> Result<AuthBundle> {
    let u = AuthKey::random(family, layer, rng);
    pk_authenticate_with_key(pks, family, layer, message, &u)
}

pub fn pk_authenticate_with_key(
    pks: &mut [PublicKey],
    family: &SptcFamily,
    layer: &MessageLayer,
    message: &DensityMatrix,
    u: &AuthKey,
) -> Result<AuthBundle> {
    let h = auth_key_bits(family, layer);
    if pks.len() != h {
        return Err(Error::InsufficientKeys {
            needed: h,
            got: pks.len(),
        });
    }
    let payload = auth_encode(u, family, layer, message)?;
    let (s_list, bit_registers) = encrypt_bits(pks, &u.to_bits(family, layer))?;
    Ok(AuthBundle {
        mode: layer.mode(),
        family_id: family.id(),
        apqc_set_ref: layer.set_ref(),
        s_list,
        bit_registers,
        payload,
    })
}

/// Recovers `u` with `F`, then verifies. A bit that fails to decode is a
/// rejection, not an error.
pub fn pk_verify<R: Rng + ?Sized>(
    f: &PrivateKeyF,
    family: &SptcFamily,
    layer: &MessageLayer,
    bundle: &AuthBundle,
    rng: &mut R,
) -> Result<AuthVerdict> {
    if bundle.family_id != family.id() {
        return Ok(AuthVerdict::reject(
            None,
            format!("bundle names family {}", bundle.family_id),
        ));
    }
    if bundle.apqc_set_ref != layer.set_ref() {
        return Ok(AuthVerdict::reject(
            None,
            "bundle uses a different message layer".into(),
        ));
    }
    let bits = match decrypt_bits(f, &bundle.s_list, &bundle.bit_registers) {
        Ok(bits) => bits,
        Err(e @ Error::BitDecodeFailure { .. }) => {
            return Ok(AuthVerdict::reject(None, e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let u = AuthKey::from_bits(&bits, family, layer)?;
    auth_verify_decode(&u, family, layer, &bundle.payload, rng)
}

/// Uniform mixture of `auth_encode` over every `(x, z, y)`.
pub fn auth_mixture(
    family: &SptcFamily,
    layer: &MessageLayer,
    message: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_layer(family, layer)?;
    let (n, t) = (family.n_log(), family.syndrome_bits());
    for (what, requested, limit) in [
        (
            "authentication mixture logical qubits",
            n,
            MIXTURE_MAX_LOGICAL,
        ),
        ("authentication mixture checks", t, MIXTURE_MAX_CHECKS),
        (
            "authentication mixture family size",
            family.len(),
            MIXTURE_MAX_FAMILY,
        ),
    ] {
        if requested > limit {
            return Err(Error::Capacity {
                what,
                requested,
                limit,
            });
        }
    }
    let xs: Vec<MessageKey> = match layer {
        MessageLayer::Pqc => (0..1u64 << (2 * n))
            .map(|v| PqcKey::new(n, BitString::new(2 * n, v)).map(MessageKey::Pqc))
            .collect::<Result<_>>()?,
        MessageLayer::Apqc(set) => (0..1u64 << n)
            .flat_map(|a| {
                (0..set.len()).map(move |b| MessageKey::Apqc(ApqcKey::new(BitString::new(n, a), b)))
            })
            .collect(),
    };
    let mut terms = Vec::with_capacity((xs.len() * family.len()) << t);
    for x in &xs {
        for z in 0..family.len() {
            for y in 0..1u64 << t {
                let u = AuthKey {
                    x: *x,
                    z,
                    y: BitString::new(t, y),
                };
                terms.push(auth_encode(&u, family, layer, message)?);
            }
        }
    }
    uniform_mixture(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pqc::apqc_security_gap;
    use crate::qpke::{keygen_private, phase_flip_operator, KeyIssuer};
    use crate::qstate::{random_pure_state, trace_distance, PauliOp};
    use crate::rng::seeded;
    use crate::stabilizer::build_sptc_family;

    fn family(t: usize, size: usize, seed: u64) -> SptcFamily {
        build_sptc_family(1, t, size, 0.0, &mut seeded(seed), 200)
            .unwrap()
            .family
    }

    fn close(a: &DensityMatrix, b: &DensityMatrix) -> bool {
        a.max_abs_diff(b).unwrap() < 1e-9
    }

    #[test]
    fn key_bits_round_trip() {
        let fam = family(2, 3, 1);
        let mut rng = seeded(2);
        assert_eq!(auth_key_bits(&fam, &MessageLayer::Pqc), 2 + 2 + 2);
        for _ in 0..20 {
            let u = AuthKey::random(&fam, &MessageLayer::Pqc, &mut rng);
            let bits = u.to_bits(&fam, &MessageLayer::Pqc);
            assert_eq!(
                AuthKey::from_bits(&bits, &fam, &MessageLayer::Pqc).unwrap(),
                u
            );
        }
        // z = 3 wraps to 0 for a family of three.
        let wrapped = AuthKey::from_bits(
            &BitString::parse("001100").unwrap(),
            &fam,
            &MessageLayer::Pqc,
        )
        .unwrap();
        assert_eq!(wrapped.z, 0);
    }

    #[test]
    fn encode_verify_round_trip() {
        let fam = family(2, 4, 3);
        let mut rng = seeded(4);
        for _ in 0..10 {
            let sigma = random_pure_state(1, &mut rng);
            let u = AuthKey::random(&fam, &MessageLayer::Pqc, &mut rng);
            let payload = auth_encode(&u, &fam, &MessageLayer::Pqc, &sigma).unwrap();
            assert_eq!(payload.qubits(), 3);
            let v = auth_verify_decode(&u, &fam, &MessageLayer::Pqc, &payload, &mut rng).unwrap();
            assert!(v.accepted);
            assert!(
                v.message
                    .unwrap()
                    .fidelity_with_pure(&pure_amplitudes(&sigma))
                    .unwrap()
                    > 1.0 - 1e-9
            );
        }
        let u = AuthKey {
            x: MessageKey::Pqc(PqcKey::zero(1)),
            z: 1,
            y: BitString::parse("01").unwrap(),
        };
        let sigma = random_pure_state(1, &mut rng);
        let want = encode(fam.code(1).unwrap(), &u.y, &sigma).unwrap();
        assert!(close(
            &auth_encode(&u, &fam, &MessageLayer::Pqc, &sigma).unwrap(),
            &want
        ));
    }

    fn pure_amplitudes(rho: &DensityMatrix) -> Vec<crate::qstate::C64> {
        let m = rho.matrix();
        let col = (0..rho.dim())
            .max_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re))
            .unwrap();
        let norm = m[(col, col)].re.sqrt();
        (0..rho.dim()).map(|r| m[(r, col)] / norm).collect()
    }

    #[test]
    fn tamper_outcomes_follow_code_structure() {
        let fam = family(2, 4, 5);
        let mut rng = seeded(6);
        let sigma = random_pure_state(1, &mut rng);
        let u = AuthKey::random(&fam, &MessageLayer::Pqc, &mut rng);
        let code = fam.code(u.z).unwrap();
        let payload = auth_encode(&u, &fam, &MessageLayer::Pqc, &sigma).unwrap();
        for idx in 1..64 {
            let e = PauliOp::from_symplectic_index(3, idx);
            let v = auth_verify_decode(
                &u,
                &fam,
                &MessageLayer::Pqc,
                &payload.apply_pauli(&e).unwrap(),
                &mut rng,
            )
            .unwrap();
            if !code.syndrome_of(&e).is_zero() {
                assert!(!v.accepted);
                assert!(v.message.is_none());
            } else if code.in_stabilizer_group(&e) {
                assert!(v.accepted);
                assert!(close(&v.message.unwrap(), &sigma));
            } else {
                assert!(v.accepted);
            }
        }
    }

    #[test]
    fn public_key_round_trip() {
        let fam = family(2, 4, 7);
        let mut rng = seeded(8);
        let mut issuer = KeyIssuer::new(keygen_private(3, 9).unwrap());
        let h = auth_key_bits(&fam, &MessageLayer::Pqc);
        for _ in 0..5 {
            let sigma = random_pure_state(1, &mut rng);
            let mut pks = issuer.issue_many(h, &mut rng).unwrap();
            let bundle =
                pk_authenticate(&mut pks, &fam, &MessageLayer::Pqc, &sigma, &mut rng).unwrap();
            assert_eq!(bundle.s_list.len(), h);
            assert_eq!(bundle.bit_registers.len(), h);
            assert_eq!(bundle.payload.qubits(), 3);
            let v = pk_verify(
                issuer.private_key(),
                &fam,
                &MessageLayer::Pqc,
                &bundle,
                &mut rng,
            )
            .unwrap();
            assert!(v.accepted);
            assert!(close(&v.message.unwrap(), &sigma));
        }
        let mut few = issuer.issue_many(h - 1, &mut rng).unwrap();
        assert!(pk_authenticate(
            &mut few,
            &fam,
            &MessageLayer::Pqc,
            &DensityMatrix::basis(1, 0).unwrap(),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn forced_key_is_recovered_by_key_holder() {
        let fam = family(1, 2, 9);
        let mut rng = seeded(10);
        let mut issuer = KeyIssuer::new(keygen_private(2, 1).unwrap());
        let u = AuthKey::random(&fam, &MessageLayer::Pqc, &mut rng);
        let h = auth_key_bits(&fam, &MessageLayer::Pqc);
        let mut pks = issuer.issue_many(h, &mut rng).unwrap();
        let sigma = DensityMatrix::basis(1, 1).unwrap();
        let bundle =
            pk_authenticate_with_key(&mut pks, &fam, &MessageLayer::Pqc, &sigma, &u).unwrap();
        let bits =
            decrypt_bits(issuer.private_key(), &bundle.s_list, &bundle.bit_registers).unwrap();
        assert_eq!(bits, u.to_bits(&fam, &MessageLayer::Pqc));
    }

    #[test]
    fn register_tamper_changes_the_key() {
        let fam = family(1, 2, 11);
        let mut rng = seeded(12);
        let mut issuer = KeyIssuer::new(keygen_private(2, 2).unwrap());
        let h = auth_key_bits(&fam, &MessageLayer::Pqc);
        let mut pks = issuer.issue_many(h, &mut rng).unwrap();
        let sigma = random_pure_state(1, &mut rng);
        let mut bundle =
            pk_authenticate(&mut pks, &fam, &MessageLayer::Pqc, &sigma, &mut rng).unwrap();
        let last = h - 1;
        bundle.bit_registers[last] = bundle.bit_registers[last]
            .apply_pauli(&phase_flip_operator(2, true))
            .unwrap();
        // The last bit is the syndrome bit: the verifier expects the other coset.
        let v = pk_verify(
            issuer.private_key(),
            &fam,
            &MessageLayer::Pqc,
            &bundle,
            &mut rng,
        )
        .unwrap();
        assert!(!v.accepted);
        bundle.bit_registers[0] = DensityMatrix::maximally_mixed(2).unwrap();
        let v = pk_verify(
            issuer.private_key(),
            &fam,
            &MessageLayer::Pqc,
            &bundle,
            &mut rng,
        )
        .unwrap();
        assert!(!v.accepted);
        assert!(v.diagnostic.unwrap().contains("position 0"));
    }

    #[test]
    fn bundle_record_round_trip() {
        let fam = family(1, 2, 13);
        let mut rng = seeded(14);
        let mut issuer = KeyIssuer::new(keygen_private(2, 3).unwrap());
        let h = auth_key_bits(&fam, &MessageLayer::Pqc);
        let mut pks = issuer.issue_many(h, &mut rng).unwrap();
        let sigma = random_pure_state(1, &mut rng);
        let bundle = pk_authenticate(&mut pks, &fam, &MessageLayer::Pqc, &sigma, &mut rng).unwrap();
        let json = serde_json::to_string(&bundle.to_record()).unwrap();
        let back = AuthBundle::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        let v = pk_verify(
            issuer.private_key(),
            &fam,
            &MessageLayer::Pqc,
            &back,
            &mut rng,
        )
        .unwrap();
        assert!(v.accepted);
    }

    #[test]
    fn payload_mixture_hides_the_message() {
        let fam = family(2, 4, 15);
        let mut rng = seeded(16);
        let a = random_pure_state(1, &mut rng);
        let b = DensityMatrix::basis(1, 0).unwrap();
        let ma = auth_mixture(&fam, &MessageLayer::Pqc, &a).unwrap();
        let mb = auth_mixture(&fam, &MessageLayer::Pqc, &b).unwrap();
        assert!(trace_distance(&ma, &mb).unwrap() < 1e-9);

        let full = DeltaBiasedSet::full(1).unwrap();
        let fa = auth_mixture(&fam, &MessageLayer::Apqc(&full), &a).unwrap();
        let fb = auth_mixture(&fam, &MessageLayer::Apqc(&full), &b).unwrap();
        assert!(trace_distance(&fa, &fb).unwrap() < 1e-9);

        let single = DeltaBiasedSet::new(vec![BitString::parse("1").unwrap()]).unwrap();
        let layer = MessageLayer::Apqc(&single);
        let gap = apqc_security_gap(&single, 1, &[a.clone(), b.clone()]).unwrap();
        let d = trace_distance(
            &auth_mixture(&fam, &layer, &a).unwrap(),
            &auth_mixture(&fam, &layer, &b).unwrap(),
        )
        .unwrap();
        assert!(d <= 2.0 * gap + 1e-9);
        assert!(auth_mixture(&family(3, 2, 1), &MessageLayer::Pqc, &a).is_err());
    }

    #[test]
    fn apqc_layer_round_trip() {
        let fam = family(2, 4, 17);
        let set = DeltaBiasedSet::full(1).unwrap();
        let layer = MessageLayer::Apqc(&set);
        let mut rng = seeded(18);
        let mut issuer = KeyIssuer::new(keygen_private(2, 4).unwrap());
        let h = auth_key_bits(&fam, &layer);
        assert_eq!(h, 1 + 1 + 2 + 2);
        let mut pks = issuer.issue_many(h, &mut rng).unwrap();
        let sigma = random_pure_state(1, &mut rng);
        let bundle = pk_authenticate(&mut pks, &fam, &layer, &sigma, &mut rng).unwrap();
        let v = pk_verify(issuer.private_key(), &fam, &layer, &bundle, &mut rng).unwrap();
        assert!(v.accepted);
        assert!(close(&v.message.unwrap(), &sigma));
        let v = pk_verify(
            issuer.private_key(),
            &fam,
            &MessageLayer::Pqc,
            &bundle,
            &mut rng,
        )
        .unwrap();
        assert!(!v.accepted);
    }
}
