//! Eavesdropper models: the many-copy trapdoor recovery attack, single-copy
//! measurement, Pauli tampering, and the optimal one-shot distinguisher.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::qpke::{keygen_private, public_key_state, KeyIssuer, KeyLedgerEntry, PublicKey};
use crate::qstate::{trace_distance, DensityMatrix, PauliOp};
use crate::rng;

/// Copies drawn per trial before `copy_attack_stats` gives up.
pub const STATS_MAX_COPIES: usize = 64;
pub const MIN_STATS_TRIALS: usize = 1000;

/// Capability token for operations that break the one-copy rule.
#[derive(Debug)]
pub struct AdversarialMode {
    _private: (),
}

impl AdversarialMode {
    pub fn enable() -> Self {
        Self { _private: () }
    }
}

/// Unlimited fresh copies of one issued key state.
#[derive(Debug)]
pub struct CopyOracle {
    state: DensityMatrix,
    drawn: usize,
}

impl CopyOracle {
    pub fn new(_mode: &AdversarialMode, entry: &KeyLedgerEntry) -> Result<Self> {
        Ok(Self {
            state: public_key_state(&entry.k, &entry.i)?,
            drawn: 0,
        })
    }

    pub fn draw(&mut self) -> DensityMatrix {
        self.drawn += 1;
        self.state.clone()
    }

    pub fn copies_drawn(&self) -> usize {
        self.drawn
    }

    pub fn qubits(&self) -> usize {
        self.state.qubits()
    }
}

/// First index `t` with `r_t ≠ r_1`, and the XOR of the two outcomes.
pub fn infer_trapdoor(outcomes: &[BitString]) -> Option<(BitString, usize)> {
    let first = outcomes.first()?;
    outcomes
        .iter()
        .position(|r| r != first)
        .map(|t| (first.xor(&outcomes[t]), t + 1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyAttackOutcome {
    pub k_estimate: Option<BitString>,
    pub n_used: usize,
}

/// Measures copies in the computational basis until two outcomes differ.
pub fn copy_attack<R: Rng + ?Sized>(
    oracle: &mut CopyOracle,
    rng: &mut R,
    max_copies: usize,
) -> Result<CopyAttackOutcome> {
    let all: Vec<usize> = (0..oracle.qubits()).collect();
    let mut outcomes = Vec::new();
    for _ in 0..max_copies {
        outcomes.push(oracle.draw().measure_computational(&all, rng)?.outcome);
        if let Some((k, t)) = infer_trapdoor(&outcomes) {
            return Ok(CopyAttackOutcome {
                k_estimate: Some(k),
                n_used: t,
            });
        }
    }
    Ok(CopyAttackOutcome {
        k_estimate: None,
        n_used: max_copies,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackStats {
    pub n: usize,
    pub trials: usize,
    pub max_copies: usize,
    pub n_samples: Vec<usize>,
    /// Trials that ended after exactly `t` copies.
    pub histogram: BTreeMap<usize, usize>,
    /// Fraction of trials that recovered the trapdoor within `c` copies.
    pub success_by_copies: BTreeMap<usize, f64>,
    pub k_recovered_correct: usize,
    pub k_recovered_wrong: usize,
    pub not_found: usize,
}

impl AttackStats {
    /// Empirical `Pr(N = t)`.
    pub fn pr_n(&self, t: usize) -> f64 {
        self.histogram.get(&t).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    /// Binomial standard error of `pr_n(t)`.
    pub fn pr_n_se(&self, t: usize) -> f64 {
        let p = self.pr_n(t);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn mean_n(&self) -> f64 {
        self.n_samples.iter().sum::<usize>() as f64 / self.trials as f64
    }

    pub fn mean_n_se(&self) -> f64 {
        let m = self.mean_n();
        let var = self
            .n_samples
            .iter()
            .map(|&x| (x as f64 - m).powi(2))
            .sum::<f64>()
            / (self.trials as f64 - 1.0);
        (var / self.trials as f64).sqrt()
    }
}

/// Runs `copy_attack` on a key from a fresh issuer per trial.
///
/// Each trial draws from its own stream derived from one seed taken from
/// `rng`, so results do not depend on trial order.
pub fn copy_attack_stats<R: Rng + ?Sized>(
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<AttackStats> {
    if trials < MIN_STATS_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "{trials} trials; at least {MIN_STATS_TRIALS} required"
        )));
    }
    let base: u64 = rng.random();
    let mode = AdversarialMode::enable();
    let mut stats = AttackStats {
        n,
        trials,
        max_copies: STATS_MAX_COPIES,
        n_samples: Vec::with_capacity(trials),
        histogram: BTreeMap::new(),
        success_by_copies: BTreeMap::new(),
        k_recovered_correct: 0,
        k_recovered_wrong: 0,
        not_found: 0,
    };
    for trial in 0..trials {
        let mut trial_rng = rng::derived(base, trial as u64);
        let mut issuer = KeyIssuer::new(keygen_private(n, trial_rng.random())?);
        let (_pk, entry) = issuer.issue_public_key(&mut trial_rng)?;
        let mut oracle = CopyOracle::new(&mode, &entry)?;
        let out = copy_attack(&mut oracle, &mut trial_rng, STATS_MAX_COPIES)?;
        stats.n_samples.push(out.n_used);
        match out.k_estimate {
            Some(k) if k == entry.k => {
                stats.k_recovered_correct += 1;
                *stats.histogram.entry(out.n_used).or_default() += 1;
            }
            Some(_) => stats.k_recovered_wrong += 1,
            None => stats.not_found += 1,
        }
    }
    let mut cumulative = 0;
    let last = stats.histogram.keys().next_back().copied().unwrap_or(1);
    for c in 1..=last {
        cumulative += stats.histogram.get(&c).copied().unwrap_or(0);
        stats
            .success_by_copies
            .insert(c, cumulative as f64 / trials as f64);
    }
    Ok(stats)
}

/// Measures the only copy of a public key; the key is gone afterwards.
pub fn single_copy_measure<R: Rng + ?Sized>(pk: PublicKey, rng: &mut R) -> Result<BitString> {
    let state = pk.into_state();
    let all: Vec<usize> = (0..state.qubits()).collect();
    Ok(state.measure_computational(&all, rng)?.outcome)
}

pub fn pauli_tamper(state: &DensityMatrix, p: &PauliOp) -> Result<DensityMatrix> {
    state.apply_pauli(p)
}

/// Best single-shot success probability for telling two states apart.
pub fn optimal_distinguish_advantage(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    Ok(0.5 + 0.5 * trace_distance(rho0, rho1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpke::bit_cipher_mixture;
    use crate::qstate::random_mixed_state;
    use crate::rng::seeded;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn xor_rule() {
        assert_eq!(infer_trapdoor(&[bs("00"), bs("01")]), Some((bs("01"), 2)));
        assert_eq!(
            infer_trapdoor(&[bs("10"), bs("10"), bs("11")]),
            Some((bs("01"), 3))
        );
        assert_eq!(infer_trapdoor(&[bs("10"), bs("10")]), None);
        assert_eq!(infer_trapdoor(&[]), None);
    }

    #[test]
    fn attack_recovers_ledger_trapdoor() {
        let mode = AdversarialMode::enable();
        let mut issuer = KeyIssuer::new(keygen_private(4, 1).unwrap());
        let mut rng = seeded(2);
        for _ in 0..1000 {
            let (_, entry) = issuer.issue_public_key(&mut rng).unwrap();
            let mut oracle = CopyOracle::new(&mode, &entry).unwrap();
            let out = copy_attack(&mut oracle, &mut rng, 64).unwrap();
            let k = out.k_estimate.unwrap();
            assert_eq!(k, entry.k);
            assert!(k.is_odd_parity());
            assert_eq!(oracle.copies_drawn(), out.n_used);
        }
    }

    #[test]
    fn one_copy_never_suffices() {
        let mode = AdversarialMode::enable();
        let mut issuer = KeyIssuer::new(keygen_private(3, 1).unwrap());
        let mut rng = seeded(3);
        for _ in 0..50 {
            let (_, entry) = issuer.issue_public_key(&mut rng).unwrap();
            let mut oracle = CopyOracle::new(&mode, &entry).unwrap();
            let out = copy_attack(&mut oracle, &mut rng, 1).unwrap();
            assert_eq!(
                out,
                CopyAttackOutcome {
                    k_estimate: None,
                    n_used: 1
                }
            );
        }
    }

    #[test]
    fn stats_follow_geometric_law() {
        let stats = copy_attack_stats(4, 10_000, &mut seeded(4)).unwrap();
        assert_eq!(stats.k_recovered_wrong, 0);
        assert!((stats.pr_n(2) - 0.5).abs() < 0.02);
        assert!((stats.pr_n(3) - 0.25).abs() < 0.02);
        assert!((stats.mean_n() - 3.0).abs() < 0.05);
        for t in 2..=6 {
            let p = 0.5f64.powi(t as i32 - 1);
            assert!((stats.pr_n(t) - p).abs() <= 3.0 * (p * (1.0 - p) / 1e4).sqrt());
        }
        assert!(stats.success_by_copies[&2] >= 0.45);
        assert!(copy_attack_stats(4, 10, &mut seeded(4)).is_err());
    }

    #[test]
    fn stats_are_reproducible() {
        let a = copy_attack_stats(3, 1000, &mut seeded(5)).unwrap();
        let b = copy_attack_stats(3, 1000, &mut seeded(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_copy_sees_one_branch_uniformly() {
        let mut issuer = KeyIssuer::new(keygen_private(3, 6).unwrap());
        let mut rng = seeded(7);
        let (_, entry) = issuer.issue_public_key(&mut rng).unwrap();
        let mode = AdversarialMode::enable();
        let mut oracle = CopyOracle::new(&mode, &entry).unwrap();
        let mut hits_i = 0;
        for _ in 0..10_000 {
            let copy = oracle.draw();
            let r = copy
                .measure_computational(&[0, 1, 2], &mut rng)
                .unwrap()
                .outcome;
            assert!(r == entry.i || r == entry.i.xor(&entry.k));
            hits_i += (r == entry.i) as usize;
        }
        assert!((hits_i as f64 / 1e4 - 0.5).abs() < 0.02);
        for _ in 0..20 {
            let (pk, entry) = issuer.issue_public_key(&mut rng).unwrap();
            let r = single_copy_measure(pk, &mut rng).unwrap();
            assert!(r == entry.i || r == entry.i.xor(&entry.k));
        }
    }

    #[test]
    fn advantage_examples() {
        let mut rng = seeded(8);
        let rho = random_mixed_state(2, &mut rng);
        assert!((optimal_distinguish_advantage(&rho, &rho).unwrap() - 0.5).abs() < 1e-12);
        let (a, b) = (
            DensityMatrix::basis(1, 0).unwrap(),
            DensityMatrix::basis(1, 1).unwrap(),
        );
        assert!((optimal_distinguish_advantage(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let m0 = bit_cipher_mixture(3, false).unwrap();
        let m1 = bit_cipher_mixture(3, true).unwrap();
        assert!((optimal_distinguish_advantage(&m0, &m1).unwrap() - 0.625).abs() < 1e-9);
        let p = PauliOp::identity(2);
        assert_eq!(pauli_tamper(&rho, &p).unwrap(), rho);
    }
}
