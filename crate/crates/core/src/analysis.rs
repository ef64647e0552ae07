//! No-signaling checks, CHSH functionals, and recovery of one-time-pad models
//! from correlation tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::boxes::{
    evaluate_otp, CorrelationTable, JointKeyDist, KeyDist, NOtpBoxSpec, OtpBoxSpec, Scenario, BITS,
};
use crate::error::{Error, Result};
use crate::rational::{half, int, is_probability, Rational};
use crate::rng::SeedState;

/// Direction in which a marginal could carry a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Bob's marginal depends on Alice's input.
    AliceToBob,
    /// Alice's marginal depends on Bob's input.
    BobToAlice,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::AliceToBob => "alice_to_bob",
            Direction::BobToAlice => "bob_to_alice",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A receiver marginal that differs between two sender inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalingWitness {
    pub direction: Direction,
    /// The receiver's input, held fixed.
    pub local_input: usize,
    /// The receiver's output whose probability moves.
    pub output: bool,
    /// The two sender inputs being compared.
    pub remote_inputs: (usize, usize),
    /// Receiver marginal under each of `remote_inputs`.
    pub marginals: (Rational, Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsReport {
    pub alice_to_bob_ns: bool,
    pub bob_to_alice_ns: bool,
    pub witnesses: Vec<SignalingWitness>,
}

impl NsReport {
    pub fn is_ns(&self) -> bool {
        self.alice_to_bob_ns && self.bob_to_alice_ns
    }
}

/// Exact no-signaling test in both directions. Every pair of sender inputs
/// whose receiver marginals differ is reported.
pub fn ns_check(table: &CorrelationTable) -> NsReport {
    let s = table.scenario();
    let mut witnesses = Vec::new();
    for y in 0..s.n() {
        for b in BITS {
            let marginals: Vec<Rational> =
                (0..s.m()).map(|x| table.bob_marginal(b, x, y)).collect();
            collect_witnesses(&mut witnesses, Direction::AliceToBob, y, b, &marginals);
        }
    }
    for x in 0..s.m() {
        for a in BITS {
            let marginals: Vec<Rational> =
                (0..s.n()).map(|y| table.alice_marginal(a, x, y)).collect();
            collect_witnesses(&mut witnesses, Direction::BobToAlice, x, a, &marginals);
        }
    }
    let clean = |d: Direction| !witnesses.iter().any(|w| w.direction == d);
    NsReport {
        alice_to_bob_ns: clean(Direction::AliceToBob),
        bob_to_alice_ns: clean(Direction::BobToAlice),
        witnesses,
    }
}

fn collect_witnesses(
    out: &mut Vec<SignalingWitness>,
    direction: Direction,
    local_input: usize,
    output: bool,
    marginals: &[Rational],
) {
    for i in 0..marginals.len() {
        for j in i + 1..marginals.len() {
            if marginals[i] != marginals[j] {
                out.push(SignalingWitness {
                    direction,
                    local_input,
                    output,
                    remote_inputs: (i, j),
                    marginals: (marginals[i].clone(), marginals[j].clone()),
                });
            }
        }
    }
}

/// The three facts tied together by the uniform-key criterion for OTP boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformKeyVerdict {
    pub f_depends_on_x: bool,
    pub ns: bool,
    pub key_uniform: bool,
}

impl UniformKeyVerdict {
    /// When `f` depends on `x`, no-signaling holds exactly when the key is
    /// uniform; otherwise it holds for every key.
    pub fn is_consistent(&self) -> bool {
        if self.f_depends_on_x {
            self.ns == self.key_uniform
        } else {
            self.ns
        }
    }
}

pub fn uniform_key_verdict(spec: &OtpBoxSpec) -> UniformKeyVerdict {
    UniformKeyVerdict {
        f_depends_on_x: spec.f_depends_on_x(),
        ns: ns_check(&evaluate_otp(spec)).is_ns(),
        key_uniform: spec.key().is_uniform(),
    }
}

/// One member of the CHSH family for the 2,2 scenario.
///
/// The sign pattern has a single negative term at `negative`. `flipped`
/// negates the whole functional, which is the same as relabelling one
/// party's outputs. Names are `chsh-neg-XY`, with a `-flip` suffix for the
/// negated member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChshVariant {
    pub negative: (usize, usize),
    pub flipped: bool,
}

impl ChshVariant {
    /// `E00 + E01 + E10 − E11`.
    pub const CANONICAL: Self = Self {
        negative: (1, 1),
        flipped: false,
    };

    pub fn all() -> [Self; 8] {
        let mut out = [Self::CANONICAL; 8];
        let mut i = 0;
        for flipped in [false, true] {
            for x in 0..2 {
                for y in 0..2 {
                    out[i] = Self {
                        negative: (x, y),
                        flipped,
                    };
                    i += 1;
                }
            }
        }
        out
    }

    pub fn name(&self) -> String {
        let (x, y) = self.negative;
        if self.flipped {
            format!("chsh-neg-{x}{y}-flip")
        } else {
            format!("chsh-neg-{x}{y}")
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown CHSH variant {name:?}"));
        let rest = name.strip_prefix("chsh-neg-").ok_or_else(bad)?;
        let (digits, flipped) = match rest.strip_suffix("-flip") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        match digits.as_bytes() {
            [x @ b'0'..=b'1', y @ b'0'..=b'1'] => Ok(Self {
                negative: ((x - b'0') as usize, (y - b'0') as usize),
                flipped,
            }),
            _ => Err(bad()),
        }
    }

    fn sign(&self, x: usize, y: usize) -> i64 {
        let s = if (x, y) == self.negative { -1 } else { 1 };
        if self.flipped {
            -s
        } else {
            s
        }
    }
}

fn require_two_by_two(table: &CorrelationTable) -> Result<()> {
    let s = table.scenario();
    if !s.is_two_by_two() {
        return Err(Error::Domain(format!(
            "CHSH needs the 2x2 input scenario, got {}x{}",
            s.m(),
            s.n()
        )));
    }
    Ok(())
}

/// `E(x, y) = Σ_{a,b} (−1)^{a⊕b} P(a, b | x, y)`.
pub fn correlator(table: &CorrelationTable, x: usize, y: usize) -> Rational {
    let mut e = Rational::zero();
    for a in BITS {
        for b in BITS {
            if a ^ b {
                e -= table.get(a, b, x, y);
            } else {
                e += table.get(a, b, x, y);
            }
        }
    }
    e
}

pub fn chsh_value(table: &CorrelationTable, variant: ChshVariant) -> Result<Rational> {
    require_two_by_two(table)?;
    let mut s = Rational::zero();
    for x in 0..2 {
        for y in 0..2 {
            s += int(variant.sign(x, y)) * correlator(table, x, y);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityVerdict {
    pub is_local: bool,
    /// Largest `|S|` over the family.
    pub max_chsh: Rational,
    /// First variant attaining `max_chsh`.
    pub attained_by: ChshVariant,
}

/// Locality test for no-signaling 2,2 boxes: local iff every CHSH variant
/// satisfies `|S| ≤ 2`.
pub fn local_2222(table: &CorrelationTable) -> Result<LocalityVerdict> {
    require_two_by_two(table)?;
    if !ns_check(table).is_ns() {
        return Err(Error::Precondition(
            "locality test is only defined for no-signaling tables".into(),
        ));
    }
    let mut best: Option<(Rational, ChshVariant)> = None;
    for variant in ChshVariant::all() {
        let s = chsh_value(table, variant)?.abs();
        if best.as_ref().is_none_or(|(m, _)| s > *m) {
            best = Some((s, variant));
        }
    }
    let (max_chsh, attained_by) = best.expect("family is nonempty");
    Ok(LocalityVerdict {
        is_local: max_chsh <= int(2),
        max_chsh,
        attained_by,
    })
}

/// Correlation pattern `h(x, y)` of a full-output vertex: outputs agree when
/// `h = 0` and disagree when `h = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexStructure {
    scenario: Scenario,
    h: Vec<bool>,
}

impl VertexStructure {
    /// `h` in row-major `(x, y)` order.
    pub fn new(scenario: Scenario, h: Vec<bool>) -> Result<Self> {
        if h.len() != scenario.m() * scenario.n() {
            return Err(Error::Malformed(format!(
                "h covers {} of {} input pairs",
                h.len(),
                scenario.m() * scenario.n()
            )));
        }
        Ok(Self { scenario, h })
    }

    pub fn from_fn(scenario: Scenario, h: impl Fn(usize, usize) -> bool) -> Self {
        Self {
            scenario,
            h: scenario.input_pairs().map(|(x, y)| h(x, y)).collect(),
        }
    }

    pub fn random(scenario: Scenario, seed: &mut SeedState) -> Self {
        Self {
            scenario,
            h: scenario.input_pairs().map(|_| seed.next_bit()).collect(),
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn h(&self, x: usize, y: usize) -> bool {
        self.h[x * self.scenario.n() + y]
    }

    /// The table `½·δ(a ⊕ b, h(x, y))`.
    pub fn table(&self) -> CorrelationTable {
        CorrelationTable::from_fn(self.scenario, |a, b, x, y| {
            if a ^ b == self.h(x, y) {
                half()
            } else {
                Rational::zero()
            }
        })
        .expect("parity tables are normalized")
    }
}

/// Why a table is not a full-output vertex. Conditions are checked in the
/// order of the variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexRejection {
    EntryNotZeroOrHalf {
        a: bool,
        b: bool,
        x: usize,
        y: usize,
        value: Rational,
    },
    NoFixedParity {
        x: usize,
        y: usize,
    },
    MarginalNotHalf {
        direction: Direction,
        x: usize,
        y: usize,
        value: Rational,
    },
}

impl VertexRejection {
    pub fn reason(&self) -> &'static str {
        match self {
            VertexRejection::EntryNotZeroOrHalf { .. } => "entries not in {0,1/2}",
            VertexRejection::NoFixedParity { .. } => {
                "outputs not strictly correlated or anti-correlated"
            }
            VertexRejection::MarginalNotHalf { .. } => "single-party marginal not 1/2",
        }
    }
}

impl fmt::Display for VertexRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexRejection::EntryNotZeroOrHalf { a, b, x, y, value } => write!(
                f,
                "{}: P({},{}|{x},{y}) = {value}",
                self.reason(),
                *a as u8,
                *b as u8
            ),
            VertexRejection::NoFixedParity { x, y } => {
                write!(f, "{} at inputs ({x},{y})", self.reason())
            }
            VertexRejection::MarginalNotHalf {
                direction,
                x,
                y,
                value,
            } => {
                let party = match direction {
                    Direction::AliceToBob => "Bob",
                    Direction::BobToAlice => "Alice",
                };
                write!(
                    f,
                    "{}: {party} marginal at ({x},{y}) is {value}",
                    self.reason()
                )
            }
        }
    }
}

impl core::error::Error for VertexRejection {}

/// Recognizes a full-output vertex and extracts its parity pattern `h`.
///
/// Accepts iff every entry is exactly `0` or `½`, each input pair has
/// exactly two `½` entries sharing one parity `a ⊕ b`, and every
/// single-party marginal is `½`.
pub fn full_output_vertex_structure(
    table: &CorrelationTable,
) -> core::result::Result<VertexStructure, VertexRejection> {
    let s = table.scenario();
    let h_half = half();
    for (x, y) in s.input_pairs() {
        for a in BITS {
            for b in BITS {
                let value = table.get(a, b, x, y);
                if !value.is_zero() && *value != h_half {
                    return Err(VertexRejection::EntryNotZeroOrHalf {
                        a,
                        b,
                        x,
                        y,
                        value: value.clone(),
                    });
                }
            }
        }
    }
    let mut h = Vec::with_capacity(s.m() * s.n());
    for (x, y) in s.input_pairs() {
        let parities: Vec<bool> = BITS
            .iter()
            .flat_map(|&a| BITS.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| !table.get(a, b, x, y).is_zero())
            .map(|(a, b)| a ^ b)
            .collect();
        match parities.as_slice() {
            [p, q] if p == q => h.push(*p),
            _ => return Err(VertexRejection::NoFixedParity { x, y }),
        }
    }
    for (x, y) in s.input_pairs() {
        for (direction, value) in [
            (Direction::BobToAlice, table.alice_marginal(false, x, y)),
            (Direction::AliceToBob, table.bob_marginal(false, x, y)),
        ] {
            if value != h_half {
                return Err(VertexRejection::MarginalNotHalf {
                    direction,
                    x,
                    y,
                    value,
                });
            }
        }
    }
    Ok(VertexStructure { scenario: s, h })
}

/// OTP model of a vertex: `g ≡ 0`, `f = h`, uniform key.
pub fn otp_model_from_vertex(vs: &VertexStructure) -> OtpBoxSpec {
    OtpBoxSpec::from_fn(
        vs.scenario(),
        |_| false,
        |x, y| vs.h(x, y),
        KeyDist::uniform(),
    )
}

/// N-OTP model of `q·PR + (1 − q)·anti-PR`: `g ≡ 0`, `f = xy`, and keys
/// `½·[q·δ(λ₁, λ₂) + (1 − q)·δ(λ₁ ⊕ 1, λ₂)]`.
pub fn notp_model_from_isotropic(q: &Rational) -> Result<NOtpBoxSpec> {
    if !is_probability(q) {
        return Err(Error::Domain(format!("isotropic weight {q} outside [0,1]")));
    }
    Ok(NOtpBoxSpec::from_fn(
        Scenario::two_by_two(),
        |_| false,
        |x, y| x & y == 1,
        JointKeyDist::correlated_family(q)?,
    ))
}
