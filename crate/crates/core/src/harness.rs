//! Verification experiments and the JSON reports they produce.
//!
//! Every experiment takes an explicit seed and derives one stream per
//! sub-task, so a report is a pure function of its parameters. Each measured
//! value is stored next to the bound or oracle value it is judged against.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adversary::{copy_attack_stats, optimal_distinguish_advantage};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::pqc::{
    apqc_encrypt, apqc_security_gap, find_delta_biased_set, pqc_encrypt, pqc_mixture, ApqcKey,
    DeltaBiasedSet, PqcKey,
};
use crate::qauth::{
    auth_encode, auth_key_bits, auth_mixture, auth_verify_decode, pk_authenticate, pk_verify,
    AuthKey, MessageLayer,
};
use crate::qpke::{
    apqc_key_bits, bit_cipher_mixture, bit_register_mixture, decrypt_message, decrypt_message_apqc,
    encrypt_bit, encrypt_message, encrypt_message_apqc, global_cipher_mixture, keygen_private,
    KeyIssuer,
};
use crate::qstate::{
    check_capacity, random_amplitudes, random_mixed_state, random_pure_state, random_unitary,
    tensor, tensor_all, trace_distance, uniform_mixture, weighted_mixture, DensityMatrix, PauliOp,
    C64,
};
use crate::rng::{derived, SimRng};
use crate::stabilizer::{build_sptc_family, family_epsilon_detail, SptcFamily};

pub const SCHEMA: &str = "qpke-lab-report/1";

/// Equality tolerance for exact identities.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for agreement between two independent summation orders.
pub const ORACLE_TOL: f64 = 1e-8;
/// Distinguishes an altered decoded message from the original.
pub const ALTERED_TOL: f64 = 1e-6;
pub const DEFAULT_TRIALS: usize = 10_000;

pub const PQC_VERIFY_MAX_N: usize = 3;
pub const REGISTER_DISTANCE_MAX_N: usize = 6;
pub const APQC_SUITE_MAX_N: usize = 3;
pub const AUTH_MAX_LOGICAL: usize = 2;
pub const AUTH_MAX_CHECKS: usize = 3;

pub const NOTE_FIELD: &str =
    "a^2 is squaring in GF(2^n) modulo the smallest irreducible polynomial of degree n";
pub const NOTE_KEY_PRIOR: &str = "public-key pairs (k, i) are uniform over odd-weight k and all i";
pub const NOTE_SYNDROMES: &str = "the syndrome set is every t-bit string";
pub const NOTE_AUTH_PRIOR: &str = "authentication keys (x, z, y) are uniform and independent";
pub const NOTE_GAP: &str =
    "the approximate-pad gap is a maximum over sampled messages, a lower bound on the worst case";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    LessThan,
    Near,
}

/// What the expected value is: an analytic bound or an independent computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Bound,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// NaN is written as `null` and always fails.
    #[serde(deserialize_with = "null_as_nan")]
    pub measured: f64,
    pub comparison: Comparison,
    #[serde(deserialize_with = "null_as_nan")]
    pub expected: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub tolerance: f64,
    pub reference: Reference,
    /// Short statement of the claim being tested.
    pub source: String,
    /// The bound is at least 1 and so holds for any pair of states.
    pub vacuous_at_scale: bool,
    pub pass: bool,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        comparison: Comparison,
        expected: f64,
        tolerance: f64,
        reference: Reference,
        source: impl Into<String>,
    ) -> Self {
        let pass = match comparison {
            Comparison::AtMost => measured <= expected + tolerance,
            Comparison::AtLeast => measured >= expected - tolerance,
            Comparison::LessThan => measured < expected,
            Comparison::Near => (measured - expected).abs() <= tolerance,
        };
        Self {
            name: name.into(),
            measured,
            comparison,
            expected,
            tolerance,
            reference,
            source: source.into(),
            vacuous_at_scale: false,
            pass,
        }
    }

    pub fn vacuous(mut self, flag: bool) -> Self {
        self.vacuous_at_scale = flag;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub schema: String,
    pub experiment_id: String,
    pub parameters: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub details: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub tables: BTreeMap<String, Table>,
    pub pass: bool,
    pub runtime_ms: u64,
}

impl SecurityReport {
    pub fn new(experiment_id: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA.into(),
            experiment_id: experiment_id.into(),
            parameters: BTreeMap::new(),
            checks: Vec::new(),
            details: BTreeMap::new(),
            notes: Vec::new(),
            tables: BTreeMap::new(),
            pass: true,
            runtime_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.into(), json!(value));
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.details.insert(key.into(), json!(value));
        self
    }

    pub fn note(&mut self, note: &str) -> &mut Self {
        if !self.notes.iter().any(|n| n == note) {
            self.notes.push(note.into());
        }
        self
    }

    pub fn push(&mut self, check: Check) -> &mut Self {
        self.pass &= check.pass;
        self.checks.push(check);
        self
    }

    pub fn table(&mut self, name: &str, table: Table) -> &mut Self {
        self.tables.insert(name.into(), table);
        self
    }

    /// Appends another report's checks under a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: SecurityReport) -> &mut Self {
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.push(c);
        }
        for (k, v) in other.details {
            self.details.insert(format!("{prefix}/{k}"), v);
        }
        for (k, t) in other.tables {
            self.tables.insert(format!("{prefix}/{k}"), t);
        }
        for n in other.notes {
            self.note(&n);
        }
        self
    }

    /// Re-judges every check that uses the exact tolerance with `tol`.
    pub fn with_exact_tolerance(mut self, tol: f64) -> Self {
        for c in self.checks.iter_mut().filter(|c| c.tolerance == EXACT_TOL) {
            let rejudged = Check::new(
                std::mem::take(&mut c.name),
                c.measured,
                c.comparison,
                c.expected,
                tol,
                c.reference,
                std::mem::take(&mut c.source),
            );
            *c = rejudged.vacuous(c.vacuous_at_scale);
        }
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        self.param("tolerance_override", tol);
        self
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The report with `runtime_ms` zeroed, for byte comparison.
    pub fn without_runtime(&self) -> Self {
        Self {
            runtime_ms: 0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Recomputes `pass` and stamps the elapsed time.
    pub fn finish(mut self, started: Instant) -> Self {
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        self.runtime_ms = started.elapsed().as_millis() as u64;
        self
    }
}

/// Several reports combined into one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub schema: String,
    pub experiment_id: String,
    pub total_checks: usize,
    pub failed: Vec<String>,
    pub pass: bool,
    pub reports: Vec<SecurityReport>,
}

pub fn merge_reports(reports: Vec<SecurityReport>) -> MergedReport {
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.failed_checks()
                .into_iter()
                .map(move |c| format!("{}/{}", r.experiment_id, c.name))
        })
        .collect();
    MergedReport {
        schema: SCHEMA.into(),
        experiment_id: "merged".into(),
        total_checks: reports.iter().map(|r| r.checks.len()).sum(),
        pass: !reports.is_empty() && reports.iter().all(|r| r.pass),
        failed,
        reports,
    }
}

/// Runs independent experiments on their own threads and returns the reports
/// in input order.
pub fn run_concurrently<F>(jobs: Vec<F>) -> Vec<Result<SecurityReport>>
where
    F: FnOnce() -> Result<SecurityReport> + Send,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.into_iter().map(|job| scope.spawn(job)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment thread panicked"))
            .collect()
    })
}

fn stream(seed: u64, experiment: &str, label: u64) -> SimRng {
    let tag = experiment.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    });
    derived(seed ^ tag, label)
}

fn distance_bound(name: impl Into<String>, measured: f64, bound: f64, source: &str) -> Check {
    Check::new(
        name,
        measured,
        Comparison::AtMost,
        bound,
        EXACT_TOL,
        Reference::Bound,
        source,
    )
    .vacuous(bound >= 1.0)
}

/// Alternates random pure and random mixed messages.
fn random_message(n: usize, index: usize, rng: &mut SimRng) -> DensityMatrix {
    if index.is_multiple_of(2) {
        random_pure_state(n, rng)
    } else {
        random_mixed_state(n, rng)
    }
}

fn sorted_unique(mut list: Vec<usize>) -> Vec<usize> {
    list.sort_unstable();
    list.dedup();
    list
}

/// Key-averaged exact pad equals `I/2^n` for random messages, plus a mutant
/// average that omits the identity key and must be caught.
pub fn run_pqc_perfect_security(
    n_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SecurityReport> {
    let started = Instant::now();
    let n_list = sorted_unique(n_list.to_vec());
    if n_list.is_empty() || n_list[0] == 0 || trials == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 1 and at least one trial".into(),
        ));
    }
    check_capacity(
        "exact pad verification qubits",
        n_list[n_list.len() - 1],
        PQC_VERIFY_MAX_N,
    )?;
    let mut report = SecurityReport::new("pqc-perfect-security");
    report
        .param("n_list", &n_list)
        .param("trials", trials)
        .param("seed", seed);
    let mut table = Table::new(&["n", "max_deviation", "mutant_deviation"]);
    for &n in &n_list {
        let mut rng = stream(seed, "pqc", n as u64);
        let reference = DensityMatrix::maximally_mixed(n)?;
        let mut worst: f64 = 0.0;
        for trial in 0..trials {
            let sigma = random_message(n, trial, &mut rng);
            worst = worst.max(pqc_mixture(&sigma)?.max_abs_diff(&reference)?);
        }
        report.push(Check::new(
            format!("n{n}/mixture_max_deviation"),
            worst,
            Comparison::AtMost,
            0.0,
            EXACT_TOL,
            Reference::Bound,
            "averaging the exact pad over all keys yields I/2^n for every message",
        ));

        let zero = DensityMatrix::basis(n, 0)?;
        let mutant = uniform_mixture(
            (1..1u64 << (2 * n))
                .map(|l| pqc_encrypt(&PqcKey::new(n, BitString::new(2 * n, l))?, &zero))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let mutant_dev = mutant.max_abs_diff(&reference)?;
        let dim = (1u64 << n) as f64;
        report.push(Check::new(
            format!("n{n}/mutant_deviation"),
            mutant_dev,
            Comparison::Near,
            1.0 / dim - 1.0 / (dim + 1.0),
            EXACT_TOL,
            Reference::Oracle,
            "dropping the identity key leaves 1/(2^n+1) in the |0..0> corner",
        ));
        report.push(Check::new(
            format!("n{n}/mutant_detected"),
            mutant_dev,
            Comparison::AtLeast,
            EXACT_TOL * 1e3,
            0.0,
            Reference::Oracle,
            "the deviation check rejects an incomplete key average",
        ));
        table.push(vec![n as f64, worst, mutant_dev]);
    }
    report.table("deviation_vs_n", table);
    Ok(report.finish(started))
}

/// Distance between the two key-averaged bit ciphers for each register size.
pub fn run_register_distance(n_list: &[usize]) -> Result<SecurityReport> {
    let started = Instant::now();
    let n_list = sorted_unique(n_list.to_vec());
    if n_list.is_empty() || n_list[0] < 2 {
        return Err(Error::InvalidParameter(
            "register sizes must be at least 2".into(),
        ));
    }
    check_capacity(
        "register distance qubits",
        n_list[n_list.len() - 1],
        REGISTER_DISTANCE_MAX_N,
    )?;
    let mut report = SecurityReport::new("register-distance");
    report.param("n_list", &n_list);
    report.note(NOTE_KEY_PRIOR);
    let mut table = Table::new(&["n", "distance", "expected", "advantage"]);
    let mut distances = Vec::new();
    for &n in &n_list {
        let m0 = bit_cipher_mixture(n, false)?;
        let m1 = bit_cipher_mixture(n, true)?;
        let d = trace_distance(&m0, &m1)?;
        let expected = 0.5f64.powi(n as i32 - 1);
        let adv = optimal_distinguish_advantage(&m0, &m1)?;
        report.push(Check::new(
            format!("n{n}/distance"),
            d,
            Comparison::Near,
            expected,
            EXACT_TOL,
            Reference::Bound,
            "the two bit-cipher mixtures are 1/2^(n-1) apart",
        ));
        report.push(Check::new(
            format!("n{n}/advantage"),
            adv,
            Comparison::Near,
            0.5 + 0.5 * expected,
            EXACT_TOL,
            Reference::Oracle,
            "optimal single-shot success is 1/2 + D/2",
        ));
        table.push(vec![n as f64, d, expected, adv]);
        distances.push(d);
    }
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    report.push(Check::new(
        "distance_strictly_decreasing",
        decreasing as u8 as f64,
        Comparison::Near,
        1.0,
        0.0,
        Reference::Oracle,
        "per-register distinguishability shrinks as n grows",
    ));
    report.table("distance_vs_n", table);
    Ok(report.finish(started))
}

/// Entry of the key-averaged bit cipher from its closed form.
fn closed_form_register(n: usize, l: bool, r: usize, c: usize) -> f64 {
    let diag = if r == c {
        1.0 / (1u64 << n) as f64
    } else {
        0.0
    };
    let off = if (r ^ c).count_ones() % 2 == 1 {
        let v = 2f64.powi(1 - 2 * n as i32);
        if l {
            -v
        } else {
            v
        }
    } else {
        0.0
    };
    diag + off
}

/// The full ciphertext mixture built entry by entry, keys summed in
/// descending order.
fn summation_oracle(sigma: &DensityMatrix) -> DMatrix<C64> {
    let n = sigma.qubits();
    let regs = 2 * n;
    let total = regs * n + n;
    let dim = 1usize << total;
    let mask = (1usize << n) - 1;
    let s = sigma.matrix();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for l in (0..1usize << regs).rev() {
        let alpha = l >> n;
        let beta = l & mask;
        for r in 0..dim {
            for c in 0..dim {
                let mut reg = 1.0;
                for j in 0..regs {
                    let shift = n * (regs - 1 - j) + n;
                    let bit = (l >> (regs - 1 - j)) & 1 == 1;
                    reg *= closed_form_register(n, bit, (r >> shift) & mask, (c >> shift) & mask);
                    if reg == 0.0 {
                        break;
                    }
                }
                if reg == 0.0 {
                    continue;
                }
                let (rm, cm) = (r & mask, c & mask);
                let sign = (beta & (rm ^ alpha)).count_ones() + (beta & (cm ^ alpha)).count_ones();
                let v = s[(rm ^ alpha, cm ^ alpha)] * reg;
                out[(r, c)] += if sign.is_multiple_of(2) { v } else { -v };
            }
        }
    }
    out / C64::new((1u64 << regs) as f64, 0.0)
}

fn max_entry_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Brute-force full ciphertext mixture at n = 2, checked against an
/// independent summation and against per-register composition bounds.
pub fn run_global_mixture_check(seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    let n = 2;
    let mut report = SecurityReport::new("global-mixture");
    report.param("n", n).param("pairs", 5).param("seed", seed);
    report.note(NOTE_KEY_PRIOR);
    let mut rng = stream(seed, "global", 0);
    let mut pairs = vec![(DensityMatrix::basis(n, 0)?, DensityMatrix::basis(n, 3)?)];
    for _ in 0..4 {
        pairs.push((
            random_pure_state(n, &mut rng),
            random_mixed_state(n, &mut rng),
        ));
    }

    let m = [bit_cipher_mixture(n, false)?, bit_cipher_mixture(n, true)?];
    let per_register = trace_distance(&m[0], &m[1])?;
    let r0 = bit_register_mixture(n, &BitString::zeros(2 * n))?;
    let mut register_dist = Vec::new();
    let mut lemma_excess: f64 = f64::NEG_INFINITY;
    let mut composed_sum = 0.0;
    for l in 0..1u64 << (2 * n) {
        let lb = BitString::new(2 * n, l);
        let d = trace_distance(&bit_register_mixture(n, &lb)?, &r0)?;
        let sum = lb.count_ones() as f64 * per_register;
        lemma_excess = lemma_excess.max(d - sum);
        composed_sum += sum;
        register_dist.push(d);
    }
    let keys = register_dist.len() as f64;
    let avg_register = register_dist.iter().sum::<f64>() / keys;
    let composed_bound = 2.0 * composed_sum / keys;
    report.push(Check::new(
        "register_tensor_subadditivity_excess",
        lemma_excess,
        Comparison::AtMost,
        0.0,
        EXACT_TOL,
        Reference::Oracle,
        "D(R(l), R(0)) is at most the sum of per-register distances",
    ));
    report.detail("per_register_distance", per_register);
    report.detail("avg_key_register_distance", avg_register);
    report.detail("composed_pair_bound", composed_bound);

    let fixed = tensor(&r0, &DensityMatrix::maximally_mixed(n)?)?;
    let prop_bound = n as f64 / 2f64.powi(n as i32 - 2);
    let pair_bound = 2.0 * prop_bound;
    let mut oracle_entry: f64 = 0.0;
    let mut pair_rows = Vec::new();
    for (p, (a, b)) in pairs.iter().enumerate() {
        let (ga, gb) = (global_cipher_mixture(a, n)?, global_cipher_mixture(b, n)?);
        let (oa, ob) = (summation_oracle(a), summation_oracle(b));
        oracle_entry = oracle_entry
            .max(max_entry_diff(ga.matrix(), &oa))
            .max(max_entry_diff(gb.matrix(), &ob));
        let brute = trace_distance(&ga, &gb)?;
        let oracle = trace_distance(
            &DensityMatrix::from_matrix_with_tol(oa, ORACLE_TOL)?,
            &DensityMatrix::from_matrix_with_tol(ob, ORACLE_TOL)?,
        )?;
        let to_fixed = [trace_distance(&ga, &fixed)?, trace_distance(&gb, &fixed)?];
        report.push(distance_bound(
            format!("pair{p}/distance_vs_bound"),
            brute,
            pair_bound,
            "two full ciphertexts are within 2n/2^(n-2)",
        ));
        report.push(Check::new(
            format!("pair{p}/oracle_distance_diff"),
            (brute - oracle).abs(),
            Comparison::AtMost,
            0.0,
            ORACLE_TOL,
            Reference::Oracle,
            "brute-force distance matches the entrywise summation",
        ));
        report.push(distance_bound(
            format!("pair{p}/composed_register_bound"),
            brute,
            composed_bound,
            "twice the averaged per-register sum bounds the pair distance",
        ));
        report.push(distance_bound(
            format!("pair{p}/measured_register_bound"),
            brute,
            to_fixed[0] + to_fixed[1],
            "triangle inequality through R(0) x I/2^n",
        ));
        for (side, d) in ["a", "b"].iter().zip(to_fixed) {
            report.push(distance_bound(
                format!("pair{p}/{side}_to_fixed_vs_registers"),
                d,
                avg_register,
                "distance to R(0) x I/2^n is at most the averaged key-register distance",
            ));
            report.push(distance_bound(
                format!("pair{p}/{side}_to_fixed_vs_bound"),
                d,
                prop_bound,
                "a full ciphertext is within n/2^(n-2) of a fixed state",
            ));
        }
        pair_rows.push(vec![p as f64, brute, oracle, to_fixed[0], to_fixed[1]]);
    }
    report.push(Check::new(
        "oracle_max_entry_diff",
        oracle_entry,
        Comparison::AtMost,
        0.0,
        ORACLE_TOL,
        Reference::Oracle,
        "brute-force mixture matches the entrywise summation",
    ));
    report.table(
        "pairs",
        Table {
            columns: ["pair", "distance", "oracle", "a_to_fixed", "b_to_fixed"]
                .map(String::from)
                .to_vec(),
            rows: pair_rows,
        },
    );
    Ok(report.finish(started))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCounts {
    pub factor_two: usize,
    pub convexity: usize,
    pub tensor: usize,
    pub composition: usize,
    pub triangle: usize,
    pub unitary: usize,
}

impl Default for LemmaCounts {
    fn default() -> Self {
        Self {
            factor_two: 200,
            convexity: 200,
            tensor: 500,
            composition: 100,
            triangle: 200,
            unitary: 200,
        }
    }
}

fn random_state_up_to(max_qubits: usize, qubits: usize, rng: &mut SimRng) -> DensityMatrix {
    let q = qubits.min(max_qubits);
    if rng.random_bool(0.5) {
        random_pure_state(q, rng)
    } else {
        random_mixed_state(q, rng)
    }
}

/// `ρ` pulled toward `τ` by a random amount, so that distances to `τ` vary.
fn near(tau: &DensityMatrix, rng: &mut SimRng) -> Result<DensityMatrix> {
    let other = random_state_up_to(tau.qubits(), tau.qubits(), rng);
    let w: f64 = rng.random();
    weighted_mixture(&[1.0 - w, w], &[tau.clone(), other])
}

struct Tally {
    cases: usize,
    violations: usize,
    worst_excess: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
        }
    }

    /// Records `lhs ≤ rhs` up to the exact tolerance.
    fn record(&mut self, lhs: f64, rhs: f64) {
        self.cases += 1;
        let excess = lhs - rhs;
        self.violations += (excess.is_nan() || excess > EXACT_TOL) as usize;
        self.worst_excess = self.worst_excess.max(excess);
    }

    fn push_into(&self, report: &mut SecurityReport, name: &str, source: &str) {
        report.push(Check::new(
            format!("{name}/violations"),
            self.violations as f64,
            Comparison::AtMost,
            0.0,
            0.0,
            Reference::Bound,
            source,
        ));
        report.detail(&format!("{name}/cases"), self.cases);
        report.detail(&format!("{name}/worst_excess"), self.worst_excess);
    }
}

/// Random-case checks of the distance inequalities every bound relies on.
pub fn run_lemma_property_suite(counts: LemmaCounts, seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    let mut report = SecurityReport::new("lemma-suite");
    report
        .param("counts", counts)
        .param("seed", seed)
        .param("tolerance", EXACT_TOL);

    let mut rng = stream(seed, "lemma", 0);
    let mut tally = Tally::new();
    for _ in 0..counts.factor_two {
        let q = rng.random_range(1..=3);
        let tau = random_state_up_to(q, q, &mut rng);
        let (r1, r2) = (near(&tau, &mut rng)?, near(&tau, &mut rng)?);
        let eps = trace_distance(&r1, &tau)?.max(trace_distance(&r2, &tau)?);
        tally.record(trace_distance(&r1, &r2)?, 2.0 * eps);
    }
    tally.push_into(
        &mut report,
        "factor_two",
        "states within eps of a common state are within 2 eps of each other",
    );

    let mut rng = stream(seed, "lemma", 1);
    let mut tally = Tally::new();
    for _ in 0..counts.convexity {
        let q = rng.random_range(1..=3);
        let tau = random_state_up_to(q, q, &mut rng);
        let parts = rng.random_range(2..=5);
        let states = (0..parts)
            .map(|_| near(&tau, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut weights: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut eps: f64 = 0.0;
        for s in &states {
            eps = eps.max(trace_distance(s, &tau)?);
        }
        tally.record(
            trace_distance(&weighted_mixture(&weights, &states)?, &tau)?,
            eps,
        );
    }
    tally.push_into(
        &mut report,
        "convexity",
        "a mixture of states within eps of a fixed state stays within eps",
    );

    let mut rng = stream(seed, "lemma", 2);
    let mut tally = Tally::new();
    for _ in 0..counts.tensor {
        let (qa, qb) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let a = random_state_up_to(qa, qa, &mut rng);
        let a2 = random_state_up_to(qa, qa, &mut rng);
        let b = random_state_up_to(qb, qb, &mut rng);
        let b2 = random_state_up_to(qb, qb, &mut rng);
        let lhs = trace_distance(&tensor(&a, &b)?, &tensor(&a2, &b2)?)?;
        tally.record(lhs, trace_distance(&a, &a2)? + trace_distance(&b, &b2)?);
    }
    tally.push_into(
        &mut report,
        "tensor_subadditivity",
        "distance of products is at most the sum of factor distances",
    );

    let mut rng = stream(seed, "lemma", 3);
    let mut tally = Tally::new();
    for _ in 0..counts.composition {
        tally_composition_case(&mut tally, &mut rng)?;
    }
    tally.push_into(
        &mut report,
        "composition",
        "key registers within eps1 and a pad within eps2 compose to eps1 + eps2",
    );

    let mut rng = stream(seed, "lemma", 4);
    let mut tally = Tally::new();
    for _ in 0..counts.triangle {
        let q = rng.random_range(1..=3);
        let a = random_state_up_to(q, q, &mut rng);
        let b = random_state_up_to(q, q, &mut rng);
        let c = random_state_up_to(q, q, &mut rng);
        tally.record(
            trace_distance(&a, &c)?,
            trace_distance(&a, &b)? + trace_distance(&b, &c)?,
        );
    }
    tally.push_into(
        &mut report,
        "triangle",
        "trace distance obeys the triangle inequality",
    );

    let mut rng = stream(seed, "lemma", 5);
    let mut tally = Tally::new();
    for _ in 0..counts.unitary {
        let q = rng.random_range(1..=3);
        let a = random_state_up_to(q, q, &mut rng);
        let b = random_state_up_to(q, q, &mut rng);
        let u = random_unitary(1 << q, &mut rng);
        let before = trace_distance(&a, &b)?;
        let after = trace_distance(&a.apply_unitary(&u)?, &b.apply_unitary(&u)?)?;
        tally.record((after - before).abs(), 0.0);
    }
    tally.push_into(
        &mut report,
        "unitary_invariance",
        "unitaries preserve trace distance",
    );
    Ok(report.finish(started))
}

/// One synthetic scheme: per-key register states near `τ1` and a pad over a
/// random subset of one-qubit Paulis.
fn tally_composition_case(tally: &mut Tally, rng: &mut SimRng) -> Result<()> {
    let key_qubits = rng.random_range(1..=2);
    let tau1 = random_state_up_to(key_qubits, key_qubits, rng);
    let tau2 = DensityMatrix::maximally_mixed(1)?;
    let mut keys: Vec<u64> = (0..4).filter(|_| rng.random_bool(0.7)).collect();
    if keys.is_empty() {
        keys.push(rng.random_range(0..4));
    }
    let sigma = random_state_up_to(1, 1, rng);
    let mut registers = Vec::new();
    let mut padded = Vec::new();
    let mut eps1: f64 = 0.0;
    for &l in &keys {
        let reg = near(&tau1, rng)?;
        eps1 = eps1.max(trace_distance(&reg, &tau1)?);
        registers.push(reg);
        padded.push(pqc_encrypt(&PqcKey::new(1, BitString::new(2, l))?, &sigma)?);
    }
    let eps2 = trace_distance(&uniform_mixture(padded.clone())?, &tau2)?;
    let joint = uniform_mixture(
        registers
            .iter()
            .zip(&padded)
            .map(|(r, p)| tensor(r, p))
            .collect::<Result<Vec<_>>>()?,
    )?;
    tally.record(trace_distance(&joint, &tensor(&tau1, &tau2)?)?, eps1 + eps2);
    Ok(())
}

/// Copy-attack statistics against the geometric law of the stopping time.
pub fn run_attack_suite(n: usize, trials: usize, seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    if trials < DEFAULT_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "{trials} trials; the attack suite needs at least {DEFAULT_TRIALS}"
        )));
    }
    let mut report = SecurityReport::new("attack-stats");
    report
        .param("n", n)
        .param("trials", trials)
        .param("seed", seed);
    report.note(NOTE_KEY_PRIOR);
    let stats = copy_attack_stats(n, trials, &mut stream(seed, "attack", 0))?;

    let pr2 = stats.pr_n(2);
    let se2 = stats.pr_n_se(2);
    report.push(Check::new(
        "pr_n2_band",
        pr2,
        Comparison::Near,
        0.5,
        0.02,
        Reference::Bound,
        "two copies reveal the trapdoor with probability 1/2",
    ));
    report.push(Check::new(
        "pr_n2_3se",
        pr2,
        Comparison::Near,
        0.5,
        3.0 * se2,
        Reference::Bound,
        "two copies reveal the trapdoor with probability 1/2",
    ));
    let mean = stats.mean_n();
    let mean_se = stats.mean_n_se();
    report.push(Check::new(
        "mean_copies_band",
        mean,
        Comparison::Near,
        3.0,
        0.05,
        Reference::Bound,
        "three copies are needed on average",
    ));
    report.push(Check::new(
        "mean_copies_3se",
        mean,
        Comparison::Near,
        3.0,
        3.0 * mean_se,
        Reference::Bound,
        "three copies are needed on average",
    ));
    let mut table = Table::new(&["t", "count", "empirical", "expected", "se"]);
    for t in 2..=6 {
        let p = 0.5f64.powi(t as i32 - 1);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        report.push(Check::new(
            format!("pr_n{t}_geometric"),
            stats.pr_n(t),
            Comparison::Near,
            p,
            3.0 * se,
            Reference::Oracle,
            "the stopping time is geometric with ratio 1/2",
        ));
        table.push(vec![
            t as f64,
            stats.histogram.get(&t).copied().unwrap_or(0) as f64,
            stats.pr_n(t),
            p,
            se,
        ]);
    }
    report.push(Check::new(
        "wrong_trapdoors",
        stats.k_recovered_wrong as f64,
        Comparison::AtMost,
        0.0,
        0.0,
        Reference::Oracle,
        "the XOR of two distinct outcomes is always the trapdoor",
    ));
    report.push(Check::new(
        "success_within_two_copies",
        stats.success_by_copies.get(&2).copied().unwrap_or(0.0),
        Comparison::AtLeast,
        0.5,
        3.0 * se2,
        Reference::Bound,
        "the trapdoor leaks with probability at least 1/2 from two copies",
    ));
    report.detail("mean_se", mean_se);
    report.detail("not_found", stats.not_found);
    report.detail("max_copies", stats.max_copies);
    report.detail("success_by_copies", &stats.success_by_copies);
    report.table("stopping_time", table);
    Ok(report.finish(started))
}

/// Full public-key encryption round trips with the exact pad.
pub fn run_qpke_roundtrip(n_list: &[usize], trials: usize, seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    let n_list = sorted_unique(n_list.to_vec());
    if n_list.is_empty() || n_list[0] < 2 || trials == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 2 and at least one trial".into(),
        ));
    }
    let mut report = SecurityReport::new("qpke-roundtrip");
    report
        .param("n_list", &n_list)
        .param("trials", trials)
        .param("seed", seed);
    report.note(NOTE_KEY_PRIOR);
    for &n in &n_list {
        let mut rng = stream(seed, "qpke-roundtrip", n as u64);
        let mut worst: f64 = 0.0;
        let mut shape_ok = true;
        for _ in 0..trials {
            let mut issuer = KeyIssuer::new(keygen_private(n, rng.random())?);
            let amps = random_amplitudes(n, &mut rng);
            let sigma = crate::qstate::pure_state(&amps)?;
            let mut pks = issuer.issue_many(2 * n, &mut rng)?;
            let ct = encrypt_message(&mut pks, &sigma, &mut rng)?;
            shape_ok &= ct.total_qubits() == 2 * n * n + n && ct.bit_registers.len() == 2 * n;
            let back = decrypt_message(issuer.private_key(), &ct)?;
            worst = worst.max(1.0 - back.fidelity_with_pure(&amps)?);
        }
        report.push(Check::new(
            format!("n{n}/fidelity_loss"),
            worst,
            Comparison::AtMost,
            0.0,
            EXACT_TOL,
            Reference::Oracle,
            "decryption with F recovers the message",
        ));
        report.push(Check::new(
            format!("n{n}/ciphertext_shape"),
            shape_ok as u8 as f64,
            Comparison::Near,
            1.0,
            0.0,
            Reference::Oracle,
            "a ciphertext has 2n key registers of n qubits and one message register",
        ));

        let mixed = DensityMatrix::maximally_mixed(n)?;
        let mut issuer = KeyIssuer::new(keygen_private(n, rng.random())?);
        let mut pks = issuer.issue_many(2 * n, &mut rng)?;
        let ct = encrypt_message(&mut pks, &mixed, &mut rng)?;
        let fixed = ct.message_register.max_abs_diff(&mixed)?;
        let back = decrypt_message(issuer.private_key(), &ct)?.max_abs_diff(&mixed)?;
        report.push(Check::new(
            format!("n{n}/maximally_mixed_fixed_point"),
            fixed.max(back),
            Comparison::AtMost,
            0.0,
            EXACT_TOL,
            Reference::Oracle,
            "the pad leaves I/2^n unchanged",
        ));
        let reused = encrypt_bit(&mut pks[0], false).is_err();
        report.push(Check::new(
            format!("n{n}/used_key_refused"),
            reused as u8 as f64,
            Comparison::Near,
            1.0,
            0.0,
            Reference::Oracle,
            "a public-key copy encrypts exactly one bit",
        ));
    }
    Ok(report.finish(started))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthParams {
    pub n_log: usize,
    pub t_values: Vec<usize>,
    pub family_size: usize,
    /// Register size of the public keys that carry `u`.
    pub key_n: usize,
    pub tamper_trials: usize,
    pub completeness_trials: usize,
    /// Codes drawn per family search; the same for every `t`.
    pub search_budget: usize,
}

impl Default for AuthParams {
    fn default() -> Self {
        Self {
            n_log: 1,
            t_values: vec![1, 2, 3],
            family_size: 16,
            key_n: 2,
            tamper_trials: DEFAULT_TRIALS,
            completeness_trials: 20,
            search_budget: 600,
        }
    }
}

/// Family size and check count for the payload-mixture test.
const MIXTURE_FAMILY_SIZE: usize = 4;
const MIXTURE_CHECKS: usize = 2;

fn non_identity_pauli(qubits: usize, rng: &mut SimRng) -> PauliOp {
    PauliOp::from_symplectic_index(qubits, rng.random_range(1..1usize << (2 * qubits)))
}

/// Fraction of codes in which a uniform non-identity Pauli is an undetected
/// non-trivial logical.
fn expected_tamper_rate(family: &SptcFamily) -> f64 {
    let q = family.n_phys();
    let classes = (1usize << (2 * q)) - 1;
    let hits: usize = family
        .codes()
        .iter()
        .map(|c| {
            (1..=classes)
                .filter(|&e| c.is_undetected_logical(&PauliOp::from_symplectic_index(q, e)))
                .count()
        })
        .sum();
    hits as f64 / (classes * family.len()) as f64
}

/// Completeness, tamper resistance, and key-independence of authentication.
///
/// `tamper_trials = 0` skips the tampering experiment.
pub fn run_auth_suite(params: &AuthParams, seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    let t_values = sorted_unique(params.t_values.clone());
    if params.n_log == 0 || t_values.is_empty() || t_values[0] == 0 {
        return Err(Error::InvalidParameter("need n_log >= 1 and t >= 1".into()));
    }
    check_capacity(
        "authentication logical qubits",
        params.n_log,
        AUTH_MAX_LOGICAL,
    )?;
    check_capacity(
        "authentication checks",
        t_values[t_values.len() - 1],
        AUTH_MAX_CHECKS,
    )?;
    if params.completeness_trials == 0 {
        return Err(Error::InvalidParameter(
            "need at least one completeness trial".into(),
        ));
    }
    let mut report = SecurityReport::new("auth-suite");
    report
        .param("params", params)
        .param("seed", seed)
        .note(NOTE_SYNDROMES)
        .note(NOTE_AUTH_PRIOR)
        .note(NOTE_KEY_PRIOR);
    let layer = MessageLayer::Pqc;
    let mut eps_table = if params.tamper_trials > 0 {
        Table::new(&[
            "t",
            "epsilon",
            "evaluations",
            "tamper_rate",
            "expected_rate",
        ])
    } else {
        Table::new(&["t", "epsilon", "evaluations"])
    };
    let mut epsilons = Vec::new();
    let mut key_bits = Vec::new();
    for &t in &t_values {
        let mut rng = stream(seed, "auth-family", t as u64);
        let search = build_sptc_family(
            params.n_log,
            t,
            params.family_size,
            0.0,
            &mut rng,
            params.search_budget,
        )?;
        let family = search.family;
        let detail = family_epsilon_detail(family.codes())?;
        epsilons.push(detail.epsilon);
        report.detail(&format!("t{t}/family_id"), family.id());
        report.detail(&format!("t{t}/epsilon_detail"), &detail);

        let mut rng = stream(seed, "auth-complete", t as u64);
        let h = auth_key_bits(&family, &layer);
        let mut worst: f64 = 0.0;
        let mut rejected = 0usize;
        for _ in 0..params.completeness_trials {
            let mut issuer = KeyIssuer::new(keygen_private(params.key_n, rng.random())?);
            let amps = random_amplitudes(params.n_log, &mut rng);
            let sigma = crate::qstate::pure_state(&amps)?;
            let mut pks = issuer.issue_many(h, &mut rng)?;
            let bundle = pk_authenticate(&mut pks, &family, &layer, &sigma, &mut rng)?;
            let verdict = pk_verify(issuer.private_key(), &family, &layer, &bundle, &mut rng)?;
            match verdict.message {
                Some(m) if verdict.accepted => {
                    worst = worst.max(1.0 - m.fidelity_with_pure(&amps)?)
                }
                _ => rejected += 1,
            }
        }
        report.push(Check::new(
            format!("t{t}/honest_rejections"),
            rejected as f64,
            Comparison::AtMost,
            0.0,
            0.0,
            Reference::Oracle,
            "an untampered authenticated message is accepted",
        ));
        report.push(Check::new(
            format!("t{t}/honest_fidelity_loss"),
            worst,
            Comparison::AtMost,
            0.0,
            EXACT_TOL,
            Reference::Oracle,
            "an accepted honest message is recovered exactly",
        ));

        let mut row = vec![t as f64, detail.epsilon, search.evaluations as f64];
        if params.tamper_trials > 0 {
            let (rate, expected) =
                tamper_checks(&mut report, &family, params, t, detail.epsilon, seed)?;
            row.extend([rate, expected]);
        }
        eps_table.push(row);

        report.detail(&format!("t{t}/key_bits"), h);
        key_bits.push((t, h));
    }
    for (w, pair) in t_values.windows(2).zip(epsilons.windows(2)) {
        report.push(Check::new(
            format!("epsilon_t{}_below_t{}", w[1], w[0]),
            pair[1],
            Comparison::LessThan,
            pair[0],
            0.0,
            Reference::Bound,
            "epsilon shrinks as checks are added",
        ));
    }
    report.table("epsilon_vs_t", eps_table);

    let per_register = register_composition_checks(&mut report, params, seed)?;
    if params.n_log == 1 {
        let independence = run_auth_independence(seed)?;
        let payload = independence
            .check("pqc_distance")
            .map_or(f64::NAN, |c| c.measured);
        report.absorb("payload_mixture", independence);
        let bound_per_register = 0.5f64.powi(params.key_n as i32 - 1);
        for (t, h) in key_bits {
            report.push(distance_bound(
                format!("t{t}/composed_full_state"),
                h as f64 * per_register + payload,
                h as f64 * bound_per_register,
                "key registers plus a message-independent payload stay within h/2^(n-1)",
            ));
        }
    }
    Ok(report.finish(started))
}

/// Random non-identity Pauli errors on the payload; returns the altered-and-
/// accepted rate and its exact expectation.
fn tamper_checks(
    report: &mut SecurityReport,
    family: &SptcFamily,
    params: &AuthParams,
    t: usize,
    eps: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let layer = MessageLayer::Pqc;
    let mut rng = stream(seed, "auth-tamper", t as u64);
    let mut altered = 0usize;
    for _ in 0..params.tamper_trials {
        let sigma = random_pure_state(params.n_log, &mut rng);
        let u = AuthKey::random(family, &layer, &mut rng);
        let sent = auth_encode(&u, family, &layer, &sigma)?;
        let e = non_identity_pauli(family.n_phys(), &mut rng);
        let verdict = auth_verify_decode(&u, family, &layer, &sent.apply_pauli(&e)?, &mut rng)?;
        if let (true, Some(m)) = (verdict.accepted, verdict.message) {
            altered += (trace_distance(&m, &sigma)? > ALTERED_TOL) as usize;
        }
    }
    let trials = params.tamper_trials as f64;
    let rate = altered as f64 / trials;
    let se_eps = (eps * (1.0 - eps) / trials).sqrt();
    report.push(Check::new(
        format!("t{t}/tamper_rate_vs_epsilon"),
        rate,
        Comparison::AtMost,
        eps,
        3.0 * se_eps,
        Reference::Bound,
        "a non-trivial Pauli alters an accepted message with probability at most epsilon",
    ));
    let expected = expected_tamper_rate(family);
    let se_exp = (expected * (1.0 - expected) / trials).sqrt();
    report.push(Check::new(
        format!("t{t}/tamper_rate_vs_exact"),
        rate,
        Comparison::Near,
        expected,
        3.0 * se_exp,
        Reference::Oracle,
        "tamper acceptance matches the family's undetected-logical fraction",
    ));
    Ok((rate, expected))
}

/// Key registers carrying `u`: a few registers measured directly against the
/// per-register sum.
fn register_composition_checks(
    report: &mut SecurityReport,
    params: &AuthParams,
    seed: u64,
) -> Result<f64> {
    let n = params.key_n;
    let m0 = bit_cipher_mixture(n, false)?;
    let m1 = bit_cipher_mixture(n, true)?;
    let per_register = trace_distance(&m0, &m1)?;
    report.push(Check::new(
        "key_register/per_register_distance",
        per_register,
        Comparison::Near,
        0.5f64.powi(n as i32 - 1),
        EXACT_TOL,
        Reference::Bound,
        "each key register leaks at most 1/2^(n-1)",
    ));
    let regs = (12 / n).clamp(1, 3);
    let mut rng = stream(seed, "auth-registers", 0);
    let mut excess: f64 = f64::NEG_INFINITY;
    for _ in 0..8 {
        let a = BitString::random(regs, &mut rng);
        let b = BitString::random(regs, &mut rng);
        let d = trace_distance(&bit_register_mixture(n, &a)?, &bit_register_mixture(n, &b)?)?;
        excess = excess.max(d - a.xor(&b).count_ones() as f64 * per_register);
    }
    report.push(Check::new(
        "key_register/composition_excess",
        excess,
        Comparison::AtMost,
        0.0,
        EXACT_TOL,
        Reference::Oracle,
        "registers for two keys differ by at most the per-register sum",
    ));
    Ok(per_register)
}

/// Payload mixtures over all `u` for two different messages, with the exact
/// pad and with a one-element approximate pad.
pub fn run_auth_independence(seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    let mut report = SecurityReport::new("auth-independence");
    report
        .param("n_log", 1)
        .param("t", MIXTURE_CHECKS)
        .param("family_size", MIXTURE_FAMILY_SIZE)
        .param("seed", seed)
        .note(NOTE_AUTH_PRIOR)
        .note(NOTE_SYNDROMES);
    let mut rng = stream(seed, "auth-mixture", 0);
    let search = build_sptc_family(1, MIXTURE_CHECKS, MIXTURE_FAMILY_SIZE, 0.0, &mut rng, 64)?;
    let family = search.family;
    let sigma = random_pure_state(1, &mut rng);
    let other = random_mixed_state(1, &mut rng);
    let d_pqc = trace_distance(
        &auth_mixture(&family, &MessageLayer::Pqc, &sigma)?,
        &auth_mixture(&family, &MessageLayer::Pqc, &other)?,
    )?;
    report.push(Check::new(
        "pqc_distance",
        d_pqc,
        Comparison::AtMost,
        0.0,
        EXACT_TOL,
        Reference::Bound,
        "with the exact pad the averaged payload does not depend on the message",
    ));
    let set = DeltaBiasedSet::new(vec![BitString::zeros(1)])?;
    let layer = MessageLayer::Apqc(&set);
    let d_apqc = trace_distance(
        &auth_mixture(&family, &layer, &sigma)?,
        &auth_mixture(&family, &layer, &other)?,
    )?;
    let gap = apqc_security_gap(&set, 1, &[sigma, other])?;
    report.push(distance_bound(
        "apqc_distance",
        d_apqc,
        2.0 * gap,
        "with an approximate pad the averaged payloads differ by at most twice its gap",
    ));
    report.detail("family_id", family.id());
    report.detail("apqc_set", set.id());
    report.detail("apqc_gap", gap);
    report.note(NOTE_GAP).note(NOTE_FIELD);
    Ok(report.finish(started))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApqcSetParams {
    /// Defaults to `2^(n-1)`, the largest size that still shortens the cipher.
    pub size: Option<usize>,
    pub delta: f64,
    pub search_budget: usize,
    pub roundtrip_trials: usize,
    pub gap_samples: usize,
}

impl Default for ApqcSetParams {
    fn default() -> Self {
        Self {
            size: None,
            delta: 0.5,
            search_budget: 2000,
            roundtrip_trials: 20,
            gap_samples: 10,
        }
    }
}

/// Approximate-pad variant: set search, gap, cipher length, and round trips.
pub fn run_apqc_suite(n: usize, set_params: &ApqcSetParams, seed: u64) -> Result<SecurityReport> {
    let started = Instant::now();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "the approximate pad needs n >= 2".into(),
        ));
    }
    check_capacity("approximate pad suite qubits", n, APQC_SUITE_MAX_N)?;
    let size = set_params.size.unwrap_or(1 << (n - 1));
    let mut report = SecurityReport::new("apqc-suite");
    report
        .param("n", n)
        .param("set_params", set_params)
        .param("seed", seed)
        .note(NOTE_FIELD)
        .note(NOTE_GAP)
        .note(NOTE_KEY_PRIOR);

    let mut rng = stream(seed, "apqc-search", n as u64);
    let search = find_delta_biased_set(
        n,
        size,
        set_params.delta,
        &mut rng,
        set_params.search_budget,
    )?;
    let set = search.set.with_seed(Some(seed));
    report.detail("set_id", set.id());
    report.detail(
        "set_elements",
        set.elements()
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>(),
    );
    report.detail("set_bias", set.measured_bias());
    report.detail("bias_target_met", search.target_met);
    report.detail("search_evaluations", search.evaluations);

    let m = apqc_key_bits(&set);
    let exact_qubits = 2 * n * n + n;
    report.detail("key_bits", m);
    report.push(Check::new(
        "key_bits_below_exact",
        m as f64,
        Comparison::LessThan,
        (2 * n) as f64,
        0.0,
        Reference::Bound,
        "the approximate pad needs fewer than 2n key bits",
    ));
    report.push(Check::new(
        "cipher_qubits_formula",
        (n * (m + 1)) as f64,
        Comparison::LessThan,
        exact_qubits as f64,
        0.0,
        Reference::Bound,
        "the shortened cipher has n(m+1) < 2n^2+n qubits",
    ));

    let mut rng = stream(seed, "apqc-messages", n as u64);
    let samples: Vec<DensityMatrix> = (0..set_params.gap_samples)
        .map(|i| random_message(n, i, &mut rng))
        .collect();
    let gap = apqc_security_gap(&set, n, &samples)?;
    report.detail("gap", gap);
    let full_gap = apqc_security_gap(&DeltaBiasedSet::full(n)?, n, &samples)?;
    report.push(Check::new(
        "full_set_gap",
        full_gap,
        Comparison::AtMost,
        0.0,
        EXACT_TOL,
        Reference::Oracle,
        "with every b the approximate pad is exact",
    ));

    let mut rng = stream(seed, "apqc-roundtrip", n as u64);
    let mut worst: f64 = 0.0;
    let mut cipher_qubits = 0;
    for _ in 0..set_params.roundtrip_trials {
        let mut issuer = KeyIssuer::new(keygen_private(n, rng.random())?);
        let amps = random_amplitudes(n, &mut rng);
        let sigma = crate::qstate::pure_state(&amps)?;
        let mut pks = issuer.issue_many(m, &mut rng)?;
        let ct = encrypt_message_apqc(&mut pks, &sigma, &set, &mut rng)?;
        cipher_qubits = ct.total_qubits();
        let back = decrypt_message_apqc(issuer.private_key(), &ct, &set)?;
        worst = worst.max(1.0 - back.fidelity_with_pure(&amps)?);
    }
    report.push(Check::new(
        "roundtrip_fidelity_loss",
        worst,
        Comparison::AtMost,
        0.0,
        EXACT_TOL,
        Reference::Oracle,
        "decryption recovers the message under the approximate pad",
    ));
    report.push(Check::new(
        "cipher_qubits_measured",
        cipher_qubits as f64,
        Comparison::LessThan,
        exact_qubits as f64,
        0.0,
        Reference::Bound,
        "an actual ciphertext is shorter than the exact-pad ciphertext",
    ));

    let per_register = trace_distance(
        &bit_cipher_mixture(n, false)?,
        &bit_cipher_mixture(n, true)?,
    )?;
    report.detail("register_bound", m as f64 * per_register);
    report.push(Check::new(
        "register_bound_below_exact_bound",
        m as f64 * per_register,
        Comparison::LessThan,
        n as f64 / 2f64.powi(n as i32 - 2),
        0.0,
        Reference::Bound,
        "m key registers leak less than the 2n registers of the exact scheme",
    ));
    if n == 2 {
        let probes = [samples[0].clone(), samples[1].clone()];
        let gap_pair = apqc_security_gap(&set, n, &probes)?;
        let d = trace_distance(
            &apqc_global_mixture(&probes[0], &set)?,
            &apqc_global_mixture(&probes[1], &set)?,
        )?;
        report.push(distance_bound(
            "global_pair_distance",
            d,
            2.0 * (m as f64 * per_register + gap_pair),
            "full approximate-pad ciphertexts differ by at most 2(m/2^(n-1) + gap)",
        ));
    }
    Ok(report.finish(started))
}

/// Eavesdropper's view of an approximate-pad ciphertext, averaged over keys.
fn apqc_global_mixture(message: &DensityMatrix, set: &DeltaBiasedSet) -> Result<DensityMatrix> {
    let n = message.qubits();
    let m = [bit_cipher_mixture(n, false)?, bit_cipher_mixture(n, true)?];
    let mut terms = Vec::new();
    for a in 0..1u64 << n {
        for b in 0..set.len() {
            let key = ApqcKey::new(BitString::new(n, a), b);
            let registers = tensor_all(key.to_bits(set).bits().map(|bit| &m[bit as usize]))?;
            terms.push(tensor(&registers, &apqc_encrypt(&key, set, message)?)?);
        }
    }
    uniform_mixture(terms)
}
