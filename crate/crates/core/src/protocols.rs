//! Two-party protocols with explicit classical-channel accounting.
//!
//! PR boxes inside protocols are realized at the hidden-variable level: each
//! instance draws a fresh key `λ`, Alice receives `λ` and Bob receives
//! `(x·y) ⊕ λ`. Instances are one-time: a pool refuses to reuse one within
//! a run, the same way a one-time pad refuses to reuse key material.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Zero;

use crate::analysis::Direction;
use crate::boxes::{CorrelationTable, EmpiricalTable, OtpBoxSpec, BITS};
use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};
use crate::rng::SeedState;

/// Largest `m + n` accepted when building a truth table.
pub const MAX_FUNCTION_BITS: usize = 24;
/// Largest `m + n` accepted by exhaustive enumeration.
pub const MAX_EXHAUSTIVE_BITS: usize = 20;
/// Largest Bob input count for exact pool enumeration in the OTP simulation.
pub const MAX_SIMULATED_BOB_INPUTS: usize = 16;

/// A string of bits, leftmost bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Big-endian binary expansion of `value` over `len` bits.
    pub fn from_index(value: usize, len: usize) -> Self {
        Self(
            (0..len)
                .map(|i| (value >> (len - 1 - i)) & 1 == 1)
                .collect(),
        )
    }

    /// Big-endian value: the leftmost bit is the most significant.
    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &bit| (acc << 1) | bit as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Domain(format!(
                "bit strings of lengths {} and {} cannot be combined",
                self.len(),
                other.len()
            )));
        }
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.0 {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Malformed(format!("not a bit string: {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

pub fn otp_encrypt(message: &BitString, key: &BitString) -> Result<BitString> {
    message.xor(key)
}

pub fn otp_decrypt(ciphertext: &BitString, key: &BitString) -> Result<BitString> {
    ciphertext.xor(key)
}

/// Combining two ciphertexts by XOR and decrypting with the XOR of their
/// keys recovers the XOR of the plaintexts.
pub fn xor_homomorphism_check(
    m1: &BitString,
    m2: &BitString,
    k1: &BitString,
    k2: &BitString,
) -> Result<bool> {
    let combined = otp_encrypt(m1, k1)?.xor(&otp_encrypt(m2, k2)?)?;
    let recovered = otp_decrypt(&combined, &k1.xor(k2)?)?;
    Ok(recovered == m1.xor(m2)?)
}

/// A binary function of Alice's `m`-bit and Bob's `n`-bit strings, stored as
/// a row-major truth table indexed by `x_dec · 2^n + y_dec`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistributedFunction {
    m: usize,
    n: usize,
    table: Vec<bool>,
}

impl DistributedFunction {
    pub fn new(m: usize, n: usize, table: Vec<bool>) -> Result<Self> {
        Self::check_size(m, n)?;
        if table.len() != 1 << (m + n) {
            return Err(Error::Malformed(format!(
                "truth table has {} entries, expected 2^{}",
                table.len(),
                m + n
            )));
        }
        Ok(Self { m, n, table })
    }

    pub fn from_fn(m: usize, n: usize, f: impl Fn(&BitString, &BitString) -> bool) -> Result<Self> {
        Self::check_size(m, n)?;
        let mut table = Vec::with_capacity(1 << (m + n));
        for xi in 0..1usize << m {
            let x = BitString::from_index(xi, m);
            for yi in 0..1usize << n {
                table.push(f(&x, &BitString::from_index(yi, n)));
            }
        }
        Ok(Self { m, n, table })
    }

    fn check_size(m: usize, n: usize) -> Result<()> {
        if m == 0 || n == 0 {
            return Err(Error::Malformed(
                "both parties need at least one input bit".into(),
            ));
        }
        if m + n > MAX_FUNCTION_BITS {
            return Err(Error::Resource(format!(
                "truth table over {} input bits exceeds the {MAX_FUNCTION_BITS}-bit limit",
                m + n
            )));
        }
        Ok(())
    }

    /// `x ∧ y` on single bits.
    pub fn and() -> Self {
        Self::from_fn(1, 1, |x, y| x.get(0) & y.get(0)).expect("1+1 bits")
    }

    /// `IP_k(x, y) = ⊕ᵢ xᵢ·yᵢ`.
    pub fn inner_product(k: usize) -> Result<Self> {
        Self::from_fn(k, k, |x, y| {
            x.bits()
                .iter()
                .zip(y.bits())
                .fold(false, |acc, (a, b)| acc ^ (a & b))
        })
    }

    /// Uniformly random truth table drawn from `seed`.
    pub fn random(m: usize, n: usize, seed: &mut SeedState) -> Result<Self> {
        Self::check_size(m, n)?;
        Ok(Self {
            m,
            n,
            table: (0..1usize << (m + n)).map(|_| seed.next_bit()).collect(),
        })
    }

    pub fn constant(m: usize, n: usize, value: bool) -> Result<Self> {
        Self::from_fn(m, n, |_, _| value)
    }

    /// `f(x, y) = x₁`, Alice's leftmost bit.
    pub fn first_alice_bit(m: usize, n: usize) -> Result<Self> {
        Self::from_fn(m, n, |x, _| x.get(0))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval_index(&self, x: usize, y: usize) -> bool {
        self.table[(x << self.n) | y]
    }

    pub fn eval(&self, x: &BitString, y: &BitString) -> Result<bool> {
        self.check_inputs(x, y)?;
        Ok(self.eval_index(x.to_index(), y.to_index()))
    }

    fn check_inputs(&self, x: &BitString, y: &BitString) -> Result<()> {
        if x.len() != self.m || y.len() != self.n {
            return Err(Error::Domain(format!(
                "inputs of lengths {}+{} for a function of {}+{} bits",
                x.len(),
                y.len(),
                self.m,
                self.n
            )));
        }
        Ok(())
    }
}

/// Outputs of one PR-box use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxEvent {
    pub instance: usize,
    pub alice_input: bool,
    pub alice_output: bool,
    pub bob_input: bool,
    pub bob_output: bool,
}

/// Independent one-time PR boxes; each key is drawn when the instance is used.
#[derive(Debug, Clone)]
pub struct PrBoxPool {
    used: Vec<bool>,
}

impl PrBoxPool {
    pub fn new(count: usize) -> Self {
        Self {
            used: vec![false; count],
        }
    }

    pub fn count(&self) -> usize {
        self.used.len()
    }

    /// Marks every instance fresh again, starting a new run.
    pub fn reset(&mut self) {
        self.used.iter_mut().for_each(|u| *u = false);
    }

    pub fn use_instance(
        &mut self,
        instance: usize,
        alice_input: bool,
        bob_input: bool,
        seed: &mut SeedState,
    ) -> Result<BoxEvent> {
        let count = self.used.len();
        let used = self.used.get_mut(instance).ok_or_else(|| {
            Error::Domain(format!("PR instance {instance} outside a pool of {count}"))
        })?;
        if *used {
            return Err(Error::Precondition(format!(
                "PR instance {instance} used twice in one run"
            )));
        }
        *used = true;
        let key = seed.next_bit();
        Ok(BoxEvent {
            instance,
            alice_input,
            alice_output: key,
            bob_input,
            bob_output: (alice_input & bob_input) ^ key,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub direction: Direction,
    pub bit: bool,
}

/// Record of one protocol run, in temporal order: every box use, then the
/// classical messages, then Bob's answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolTranscript {
    box_events: Vec<BoxEvent>,
    messages: Vec<Message>,
    bits_alice_to_bob: usize,
    bits_bob_to_alice: usize,
    result: Option<bool>,
}

impl ProtocolTranscript {
    fn new() -> Self {
        Self {
            box_events: Vec::new(),
            messages: Vec::new(),
            bits_alice_to_bob: 0,
            bits_bob_to_alice: 0,
            result: None,
        }
    }

    fn record_box(&mut self, event: BoxEvent) -> Result<()> {
        if self.box_events.iter().any(|e| e.instance == event.instance) {
            return Err(Error::Precondition(format!(
                "transcript already references PR instance {}",
                event.instance
            )));
        }
        self.box_events.push(event);
        Ok(())
    }

    fn send(&mut self, direction: Direction, bit: bool) {
        match direction {
            Direction::AliceToBob => self.bits_alice_to_bob += 1,
            Direction::BobToAlice => self.bits_bob_to_alice += 1,
        }
        self.messages.push(Message { direction, bit });
    }

    pub fn box_events(&self) -> &[BoxEvent] {
        &self.box_events
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn bits_alice_to_bob(&self) -> usize {
        self.bits_alice_to_bob
    }

    pub fn bits_bob_to_alice(&self) -> usize {
        self.bits_bob_to_alice
    }

    /// Bob's output; `None` only while the run is in progress.
    pub fn result(&self) -> Option<bool> {
        self.result
    }
}

/// One-bit computation of `f(x, y)` over `2^n` PR boxes.
///
/// Alice feeds `f(x, yᵢ)` into instance `i` for every `yᵢ`; Bob feeds `1`
/// into instance `y_dec` (big-endian) and `0` elsewhere. Alice sends
/// `c = ⊕ᵢ aᵢ`, Bob answers `(⊕ᵢ bᵢ) ⊕ c`. The keys cancel, so the answer
/// is `f(x, y)` on every run.
pub fn vandam_run(
    df: &DistributedFunction,
    x: &BitString,
    y: &BitString,
    seed: &mut SeedState,
) -> Result<ProtocolTranscript> {
    df.check_inputs(x, y)?;
    let mut pool = PrBoxPool::new(1 << df.n());
    vandam_run_in(df, x.to_index(), y.to_index(), &mut pool, seed)
}

fn vandam_run_in(
    df: &DistributedFunction,
    x: usize,
    y: usize,
    pool: &mut PrBoxPool,
    seed: &mut SeedState,
) -> Result<ProtocolTranscript> {
    let mut transcript = ProtocolTranscript::new();
    for i in 0..pool.count() {
        let event = pool.use_instance(i, df.eval_index(x, i), i == y, seed)?;
        transcript.record_box(event)?;
    }
    let key = transcript
        .box_events
        .iter()
        .fold(false, |acc, e| acc ^ e.alice_output);
    transcript.send(Direction::AliceToBob, key);
    let ciphertext = transcript
        .box_events
        .iter()
        .fold(false, |acc, e| acc ^ e.bob_output);
    transcript.result = Some(ciphertext ^ key);
    Ok(transcript)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VanDamReport {
    pub runs: usize,
    pub successes: usize,
    pub pool_size: usize,
    pub max_bits_alice_to_bob: usize,
    pub min_bits_alice_to_bob: usize,
    pub max_bits_bob_to_alice: usize,
}

impl VanDamReport {
    pub fn all_correct(&self) -> bool {
        self.successes == self.runs
    }
}

/// Runs every `(x, y)` pair once.
pub fn vandam_exhaustive(df: &DistributedFunction, seed: &mut SeedState) -> Result<VanDamReport> {
    vandam_exhaustive_with(df, seed, |_, _, _| {})
}

/// Like [`vandam_exhaustive`], handing each finished transcript to `visit`
/// in `(x_dec, y_dec)` order.
pub fn vandam_exhaustive_with(
    df: &DistributedFunction,
    seed: &mut SeedState,
    mut visit: impl FnMut(&BitString, &BitString, &ProtocolTranscript),
) -> Result<VanDamReport> {
    if df.m() + df.n() > MAX_EXHAUSTIVE_BITS {
        return Err(Error::Resource(format!(
            "exhaustive run over {} input bits exceeds the {MAX_EXHAUSTIVE_BITS}-bit guard",
            df.m() + df.n()
        )));
    }
    let pool_size = 1 << df.n();
    let mut pool = PrBoxPool::new(pool_size);
    let mut report = VanDamReport {
        runs: 0,
        successes: 0,
        pool_size,
        max_bits_alice_to_bob: 0,
        min_bits_alice_to_bob: usize::MAX,
        max_bits_bob_to_alice: 0,
    };
    for xi in 0..1usize << df.m() {
        let x = BitString::from_index(xi, df.m());
        for yi in 0..pool_size {
            pool.reset();
            let t = vandam_run_in(df, xi, yi, &mut pool, seed)?;
            report.runs += 1;
            if t.result() == Some(df.eval_index(xi, yi)) {
                report.successes += 1;
            }
            report.max_bits_alice_to_bob = report.max_bits_alice_to_bob.max(t.bits_alice_to_bob());
            report.min_bits_alice_to_bob = report.min_bits_alice_to_bob.min(t.bits_alice_to_bob());
            report.max_bits_bob_to_alice = report.max_bits_bob_to_alice.max(t.bits_bob_to_alice());
            visit(&x, &BitString::from_index(yi, df.n()), &t);
        }
    }
    Ok(report)
}

/// Exact and sampled behaviour of an OTP box simulated with PR boxes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtpSimulation {
    /// Distribution induced by the wiring, enumerated over all pool keys.
    pub exact: CorrelationTable,
    pub empirical: EmpiricalTable,
}

/// Simulates a uniform-key OTP box with `n` PR boxes and no communication.
///
/// Alice feeds `f(x, yᵢ)` into instance `i` and outputs `g(x) ⊕ (⊕ᵢ aᵢ)`;
/// Bob feeds `[i = y]` into instance `i` and outputs `⊕ᵢ bᵢ`.
pub fn simulate_otp_via_pr(
    spec: &OtpBoxSpec,
    trials: u64,
    seed: &mut SeedState,
) -> Result<OtpSimulation> {
    if !spec.key().is_uniform() {
        return Err(Error::Precondition(
            "only uniform-key OTP boxes are no-signaling and can be simulated".into(),
        ));
    }
    let s = spec.scenario();
    if s.n() > MAX_SIMULATED_BOB_INPUTS {
        return Err(Error::Resource(format!(
            "{} Bob inputs exceed the {MAX_SIMULATED_BOB_INPUTS}-input simulation limit",
            s.n()
        )));
    }

    let wiring = |x: usize, y: usize, keys: &mut dyn FnMut(usize, bool, bool) -> (bool, bool)| {
        let (mut a, mut b) = (spec.g(x), false);
        for i in 0..s.n() {
            let (ai, bi) = keys(i, spec.f(x, i), i == y);
            a ^= ai;
            b ^= bi;
        }
        (a, b)
    };

    let assignments = 1u64 << s.n();
    let weight = ratio(1, assignments as i64);
    let exact = CorrelationTable::from_fn(s, |a, b, x, y| {
        let mut total = Rational::zero();
        for keys in 0..assignments {
            let outputs = wiring(x, y, &mut |i, alice_in, bob_in| {
                let key = (keys >> i) & 1 == 1;
                (key, (alice_in & bob_in) ^ key)
            });
            if outputs == (a, b) {
                total += &weight;
            }
        }
        total
    })?;

    let mut empirical = EmpiricalTable::new(s);
    let mut pool = PrBoxPool::new(s.n());
    let mut failure = None;
    for (x, y) in s.input_pairs() {
        for _ in 0..trials {
            pool.reset();
            let (a, b) = wiring(x, y, &mut |i, alice_in, bob_in| match pool
                .use_instance(i, alice_in, bob_in, seed)
            {
                Ok(e) => (e.alice_output, e.bob_output),
                Err(e) => {
                    failure = Some(e);
                    (false, false)
                }
            });
            if let Some(e) = failure.take() {
                return Err(e);
            }
            empirical.record(a, b, x, y);
        }
    }
    Ok(OtpSimulation { exact, empirical })
}

/// Output pairs the PR box can produce on inputs `(x, y)`.
pub fn pr_support(x: bool, y: bool) -> Vec<(bool, bool)> {
    BITS.iter().map(|&a| (a, a ^ (x & y))).collect()
}

/// Parses a function name: `AND`, `IP<k>`, `CONST0`, `CONST1`, `FIRST`
/// (Alice's leftmost bit) or `RANDOM:<seed>`. `m`/`n` size the families that
/// need them.
pub fn named_function(
    name: &str,
    m: Option<usize>,
    n: Option<usize>,
) -> Result<DistributedFunction> {
    let sized = |what: &str| -> Result<(usize, usize)> {
        match (m, n) {
            (Some(m), Some(n)) => Ok((m, n)),
            _ => Err(Error::Domain(format!("{what} needs explicit m and n"))),
        }
    };
    if name == "AND" {
        return Ok(DistributedFunction::and());
    }
    if let Some(k) = name.strip_prefix("IP") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::Domain(format!("unknown function {name:?}")))?;
        return DistributedFunction::inner_product(k);
    }
    if let Some(seed) = name.strip_prefix("RANDOM:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::Domain(format!("bad seed in {name:?}")))?;
        let (m, n) = sized("RANDOM")?;
        return DistributedFunction::random(m, n, &mut SeedState::from_seed(seed));
    }
    match name {
        "CONST0" | "CONST1" => {
            let (m, n) = sized(name)?;
            DistributedFunction::constant(m, n, name == "CONST1")
        }
        "FIRST" => {
            let (m, n) = sized(name)?;
            DistributedFunction::first_alice_bit(m, n)
        }
        _ => Err(Error::Domain(format!("unknown function {name:?}"))),
    }
}
