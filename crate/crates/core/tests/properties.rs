use proptest::prelude::*;

use qpke_core::adversary::{
    copy_attack, optimal_distinguish_advantage, AdversarialMode, CopyOracle,
};
use qpke_core::bits::BitString;
use qpke_core::pqc::{
    apqc_decrypt, apqc_encrypt, apqc_mixture, measure_bias, pqc_encrypt, ApqcKey, DeltaBiasedSet,
    PqcKey,
};
use qpke_core::qauth::{auth_key_bits, pk_authenticate, pk_verify, MessageLayer};
use qpke_core::qpke::{decrypt_bit, encrypt_bit, keygen_private, KeyIssuer};
use qpke_core::qstate::{
    random_amplitudes, random_mixed_state, random_pure_state, random_unitary, tensor,
    trace_distance, DensityMatrix, PauliOp,
};
use qpke_core::rng::seeded;
use qpke_core::stabilizer::{
    build_sptc_family, encode, measure_syndrome, random_code, syndrome_distribution,
};

const TOL: f64 = 1e-9;

fn state(q: usize, seed: u64) -> DensityMatrix {
    let mut rng = seeded(seed);
    if seed.is_multiple_of(2) {
        random_pure_state(q, &mut rng)
    } else {
        random_mixed_state(q, &mut rng)
    }
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangle_inequality(q in 1usize..=3, s in any::<u64>()) {
        let (a, b, c) = (state(q, s), state(q, s ^ 1), state(q, s.wrapping_add(2)));
        let ac = trace_distance(&a, &c).unwrap();
        prop_assert!(ac <= trace_distance(&a, &b).unwrap() + trace_distance(&b, &c).unwrap() + TOL);
    }

    #[test]
    fn convexity_towards_fixed_state(q in 1usize..=2, s in any::<u64>(), w in 0.0f64..=1.0) {
        let tau = state(q, s);
        let (r1, r2) = (state(q, s ^ 3), state(q, s ^ 5));
        let eps = trace_distance(&r1, &tau).unwrap().max(trace_distance(&r2, &tau).unwrap());
        let mix = qpke_core::qstate::weighted_mixture(&[w, 1.0 - w], &[r1, r2]).unwrap();
        prop_assert!(trace_distance(&mix, &tau).unwrap() <= eps + TOL);
    }

    #[test]
    fn tensor_subadditivity(qa in 1usize..=2, qb in 1usize..=2, s in any::<u64>()) {
        let (a, a2) = (state(qa, s), state(qa, s ^ 7));
        let (b, b2) = (state(qb, s ^ 9), state(qb, s ^ 11));
        let lhs = trace_distance(&tensor(&a, &b).unwrap(), &tensor(&a2, &b2).unwrap()).unwrap();
        prop_assert!(lhs <= trace_distance(&a, &a2).unwrap() + trace_distance(&b, &b2).unwrap() + TOL);
    }

    #[test]
    fn unitaries_preserve_distance_and_validity(q in 1usize..=3, s in any::<u64>()) {
        let (a, b) = (state(q, s), state(q, s ^ 13));
        let u = random_unitary(1 << q, &mut seeded(s));
        let (ua, ub) = (a.apply_unitary(&u).unwrap(), b.apply_unitary(&u).unwrap());
        prop_assert!(ua.validate(TOL).is_ok());
        let before = trace_distance(&a, &b).unwrap();
        prop_assert!((trace_distance(&ua, &ub).unwrap() - before).abs() <= TOL);
    }

    #[test]
    fn advantage_is_affine_in_distance(q in 1usize..=2, s in any::<u64>()) {
        let (a, b) = (state(q, s), state(q, s ^ 17));
        let d = trace_distance(&a, &b).unwrap();
        prop_assert!((optimal_distinguish_advantage(&a, &b).unwrap() - (0.5 + 0.5 * d)).abs() <= 1e-12);
    }

    #[test]
    fn pad_keys_compose_by_xor(n in 1usize..=3, k1 in any::<u64>(), k2 in any::<u64>(), s in any::<u64>()) {
        let mask = (1u64 << (2 * n)) - 1;
        let a = PqcKey::new(n, BitString::new(2 * n, k1 & mask)).unwrap();
        let b = PqcKey::new(n, BitString::new(2 * n, k2 & mask)).unwrap();
        let sigma = state(n, s);
        let twice = pqc_encrypt(&b, &pqc_encrypt(&a, &sigma).unwrap()).unwrap();
        let once = pqc_encrypt(&a.xor(&b).unwrap(), &sigma).unwrap();
        prop_assert!(twice.max_abs_diff(&once).unwrap() <= TOL);
    }

    #[test]
    fn full_set_approximate_pad_is_perfect(n in 1usize..=3, s in any::<u64>()) {
        let full = DeltaBiasedSet::full(n).unwrap();
        prop_assert!(measure_bias(full.elements()).unwrap() == 0.0);
        let mix = apqc_mixture(&state(n, s), &full).unwrap();
        prop_assert!(mix.max_abs_diff(&DensityMatrix::maximally_mixed(n).unwrap()).unwrap() <= TOL);
    }

    #[test]
    fn approximate_pad_inverts(n in 1usize..=3, a in any::<u64>(), idx in any::<usize>(), s in any::<u64>()) {
        let full = DeltaBiasedSet::full(n).unwrap();
        let key = ApqcKey::new(BitString::new(n, a & ((1 << n) - 1)), idx % full.len());
        let sigma = state(n, s);
        let back = apqc_decrypt(&key, &full, &apqc_encrypt(&key, &full, &sigma).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&sigma).unwrap() <= TOL);
        let bits = key.to_bits(&full);
        prop_assert_eq!(ApqcKey::from_bits(&bits, &full).unwrap(), key);
    }

    #[test]
    fn bit_encryption_round_trips_once(n in 2usize..=5, l in any::<bool>(), s in any::<u64>()) {
        let mut rng = seeded(s);
        let mut issuer = KeyIssuer::new(keygen_private(n, s).unwrap());
        let (mut pk, entry) = issuer.issue_public_key(&mut rng).unwrap();
        let cipher = encrypt_bit(&mut pk, l).unwrap();
        prop_assert_eq!(decrypt_bit(issuer.private_key(), &entry.s, &cipher).unwrap(), l);
        prop_assert!(encrypt_bit(&mut pk, l).is_err());
    }

    #[test]
    fn copy_attack_never_returns_a_wrong_trapdoor(n in 2usize..=5, s in any::<u64>()) {
        let mut rng = seeded(s);
        let mut issuer = KeyIssuer::new(keygen_private(n, s).unwrap());
        let (_, entry) = issuer.issue_public_key(&mut rng).unwrap();
        let mode = AdversarialMode::enable();
        let mut oracle = CopyOracle::new(&mode, &entry).unwrap();
        let out = copy_attack(&mut oracle, &mut rng, 64).unwrap();
        if let Some(k) = out.k_estimate {
            prop_assert_eq!(k, entry.k);
        }
    }

    #[test]
    fn bit_strings_split_and_hex_round_trip(len in 1usize..=64, v in any::<u64>(), at in 0usize..=64) {
        let b = BitString::new(len, if len == 64 { v } else { v & ((1 << len) - 1) });
        let at = at.min(len);
        let (x, y) = b.split_at(at);
        prop_assert_eq!(x.concat(&y), b);
        prop_assert_eq!(BitString::from_hex(len, &b.to_hex()).unwrap(), b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_codes_are_valid_and_encode_faithfully(
        n_log in 1usize..=2,
        t in 1usize..=3,
        s in any::<u64>(),
        y in any::<u64>(),
    ) {
        let mut rng = seeded(s);
        let code = random_code(n_log, t, &mut rng).unwrap();
        let g = code.generators();
        for (i, a) in g.iter().enumerate() {
            for b in &g[i + 1..] {
                prop_assert!(a.commutes_with(b));
            }
        }
        let y = BitString::new(t, y & ((1 << t) - 1));
        let sigma = state(n_log, s);
        let enc = encode(&code, &y, &sigma).unwrap();
        prop_assert!((enc.trace().re - 1.0).abs() <= TOL);
        let (a, b) = (sorted_desc(enc.eigenvalues()), sorted_desc(sigma.eigenvalues()));
        for (i, ev) in a.iter().enumerate() {
            let want = b.get(i).copied().unwrap_or(0.0);
            prop_assert!((ev - want).abs() <= 1e-8);
        }
        let m = measure_syndrome(&code, &enc, &mut rng).unwrap();
        prop_assert_eq!(&m.syndrome, &y);
        prop_assert!((m.probability - 1.0).abs() <= TOL);
    }

    #[test]
    fn detection_matches_symplectic_arithmetic(
        t in 1usize..=3,
        s in any::<u64>(),
        e in any::<usize>(),
    ) {
        let mut rng = seeded(s);
        let code = random_code(1, t, &mut rng).unwrap();
        let q = code.n_phys();
        let err = PauliOp::from_symplectic_index(q, e % (1 << (2 * q)));
        let y = BitString::random(t, &mut rng);
        let hit = encode(&code, &y, &state(1, s)).unwrap().apply_pauli(&err).unwrap();
        let dist = syndrome_distribution(&code, &hit).unwrap();
        let expected = y.xor(&code.syndrome_of(&err));
        prop_assert!((dist[expected.index()] - 1.0).abs() <= TOL);
        let m = measure_syndrome(&code, &hit, &mut rng).unwrap();
        let anticommutes = code.generators().iter().any(|g| g.anticommutes_with(&err));
        prop_assert_eq!(m.syndrome != y, anticommutes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn honest_authentication_is_accepted(t in 1usize..=2, s in any::<u64>()) {
        let mut rng = seeded(s);
        let family = build_sptc_family(1, t, 4, 0.0, &mut rng, 20).unwrap().family;
        let layer = MessageLayer::Pqc;
        let mut issuer = KeyIssuer::new(keygen_private(3, s).unwrap());
        let amps = random_amplitudes(1, &mut rng);
        let sigma = qpke_core::qstate::pure_state(&amps).unwrap();
        let mut pks = issuer.issue_many(auth_key_bits(&family, &layer), &mut rng).unwrap();
        let bundle = pk_authenticate(&mut pks, &family, &layer, &sigma, &mut rng).unwrap();
        let verdict = pk_verify(issuer.private_key(), &family, &layer, &bundle, &mut rng).unwrap();
        prop_assert!(verdict.accepted);
        prop_assert!(verdict.message.unwrap().fidelity_with_pure(&amps).unwrap() >= 1.0 - TOL);
    }
}
