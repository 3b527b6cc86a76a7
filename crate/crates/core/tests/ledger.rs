use std::collections::HashSet;

use qpke_core::error::Error;
use qpke_core::qpke::{keygen_private, KeyIssuer};
use qpke_core::rng::seeded;

#[test]
fn small_ledger_runs_dry_without_reissuing() {
    let mut issuer = KeyIssuer::new(keygen_private(2, 8).unwrap());
    let mut rng = seeded(8);
    let mut seen = HashSet::new();
    let err = loop {
        match issuer.issue_public_key(&mut rng) {
            Ok((_, entry)) => {
                assert!(entry.k.is_odd_parity());
                assert!(seen.insert((entry.s, entry.i)), "pair issued twice");
            }
            Err(e) => break e,
        }
        assert!(seen.len() <= 64, "more pairs than exist");
    };
    assert!(matches!(err, Error::RejectionBudgetExhausted(_)));
    assert_eq!(issuer.ledger().len(), seen.len());
    assert!(issuer.ledger().iter().all(|e| e.issued));
}

#[test]
fn secret_ledger_round_trips_through_json() {
    let mut issuer = KeyIssuer::new(keygen_private(3, 4).unwrap());
    issuer.issue_many(5, &mut seeded(4)).unwrap();
    let ledger = issuer.secret_ledger();
    let text = serde_json::to_string(&ledger).unwrap();
    let back: qpke_core::qpke::SecretLedger = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}
