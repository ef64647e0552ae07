//! Box specifications and their exact correlation tables.
//!
//! Inputs are 0-based indices; in the 2,2-input scenario they coincide with
//! the bits `x, y`. Outputs are always bits. Every table entry is an exact
//! [`Rational`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{half, is_probability, Rational};
use crate::rng::SeedState;

/// Both output values, in index order.
pub const BITS: [bool; 2] = [false, true];

/// Input alphabet sizes: `m` inputs for Alice, `n` for Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    m: usize,
    n: usize,
}

impl Scenario {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Malformed(format!(
                "scenario needs at least one input per party, got {m}x{n}"
            )));
        }
        Ok(Self { m, n })
    }

    /// The 2,2-input scenario of the CHSH setting.
    pub const fn two_by_two() -> Self {
        Self { m: 2, n: 2 }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_two_by_two(&self) -> bool {
        self.m == 2 && self.n == 2
    }

    /// All input pairs `(x, y)` in row-major order.
    pub fn input_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m).flat_map(move |x| (0..self.n).map(move |y| (x, y)))
    }

    fn check_inputs(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.m || y >= self.n {
            return Err(Error::Domain(format!(
                "input pair ({x},{y}) outside the {}x{} scenario",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

/// Distribution of the single hidden key `λ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyDist {
    p0: Rational,
}

impl KeyDist {
    pub fn new(p0: Rational) -> Result<Self> {
        if !is_probability(&p0) {
            return Err(Error::Domain(format!("key probability {p0} outside [0,1]")));
        }
        Ok(Self { p0 })
    }

    pub fn uniform() -> Self {
        Self { p0: half() }
    }

    /// `p(λ = 0)`.
    pub fn p0(&self) -> &Rational {
        &self.p0
    }

    pub fn p(&self, lambda: bool) -> Rational {
        if lambda {
            Rational::one() - &self.p0
        } else {
            self.p0.clone()
        }
    }

    /// `r = 2·p(0) − 1`, so that `p(0) = (1 + r)/2`.
    pub fn bias(&self) -> Rational {
        &self.p0 + &self.p0 - Rational::one()
    }

    pub fn is_uniform(&self) -> bool {
        self.p0 == half()
    }
}

/// Joint distribution `p(λ₁, λ₂)` of Alice's and Bob's keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointKeyDist {
    table: [Rational; 4],
}

impl JointKeyDist {
    /// `table[l1][l2] = p(λ₁ = l1, λ₂ = l2)`.
    pub fn new(table: [[Rational; 2]; 2]) -> Result<Self> {
        let [[p00, p01], [p10, p11]] = table;
        let flat = [p00, p01, p10, p11];
        if flat.iter().any(Signed::is_negative) {
            return Err(Error::Malformed("negative key probability".into()));
        }
        let total: Rational = flat.iter().sum();
        if !total.is_one() {
            return Err(Error::Malformed(format!(
                "key probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { table: flat })
    }

    /// `(1/2)·δ(λ₁, λ₂)`: the keys coincide and the box is a plain OTP box.
    pub fn perfectly_correlated() -> Self {
        Self::correlated_family(&Rational::one()).expect("endpoint of the family")
    }

    /// `(1/2)·[q·δ(λ₁, λ₂) + (1 − q)·δ(λ₁ ⊕ 1, λ₂)]` for `q ∈ [0, 1]`.
    pub fn correlated_family(q: &Rational) -> Result<Self> {
        if !is_probability(q) {
            return Err(Error::Domain(format!("key correlation {q} outside [0,1]")));
        }
        let same = q * half();
        let flip = (Rational::one() - q) * half();
        Ok(Self {
            table: [same.clone(), flip.clone(), flip, same],
        })
    }

    pub fn p(&self, lambda1: bool, lambda2: bool) -> &Rational {
        &self.table[2 * lambda1 as usize + lambda2 as usize]
    }

    pub fn lambda1_marginal(&self, lambda1: bool) -> Rational {
        self.p(lambda1, false) + self.p(lambda1, true)
    }

    pub fn lambda2_marginal(&self, lambda2: bool) -> Rational {
        self.p(false, lambda2) + self.p(true, lambda2)
    }

    /// Bob's key marginal is uniform, which makes every N-OTP box built on
    /// these keys no-signaling.
    pub fn is_ns_admissible(&self) -> bool {
        self.lambda2_marginal(false) == half()
    }
}

fn check_output_maps(scenario: Scenario, g: &[bool], f: &[Vec<bool>]) -> Result<Vec<bool>> {
    if g.len() != scenario.m() {
        return Err(Error::Malformed(format!(
            "g covers {} of {} Alice inputs",
            g.len(),
            scenario.m()
        )));
    }
    if f.len() != scenario.m() {
        return Err(Error::Malformed(format!(
            "f has {} rows, expected {}",
            f.len(),
            scenario.m()
        )));
    }
    let mut flat = Vec::with_capacity(scenario.m() * scenario.n());
    for (x, row) in f.iter().enumerate() {
        if row.len() != scenario.n() {
            return Err(Error::Malformed(format!(
                "f row {x} covers {} of {} Bob inputs",
                row.len(),
                scenario.n()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}

/// One-time-pad box: Alice gets `g(x) ⊕ λ`, Bob gets `f(x, y) ⊕ λ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OtpBoxSpec {
    scenario: Scenario,
    g: Vec<bool>,
    f: Vec<bool>,
    key: KeyDist,
}

impl OtpBoxSpec {
    /// `f[x][y]` is Bob's plaintext for inputs `(x, y)`.
    pub fn new(scenario: Scenario, g: Vec<bool>, f: Vec<Vec<bool>>, key: KeyDist) -> Result<Self> {
        let f = check_output_maps(scenario, &g, &f)?;
        Ok(Self {
            scenario,
            g,
            f,
            key,
        })
    }

    pub fn from_fn(
        scenario: Scenario,
        g: impl Fn(usize) -> bool,
        f: impl Fn(usize, usize) -> bool,
        key: KeyDist,
    ) -> Self {
        Self {
            scenario,
            g: (0..scenario.m()).map(g).collect(),
            f: scenario.input_pairs().map(|(x, y)| f(x, y)).collect(),
            key,
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn g(&self, x: usize) -> bool {
        self.g[x]
    }

    pub fn f(&self, x: usize, y: usize) -> bool {
        self.f[x * self.scenario.n() + y]
    }

    pub fn key(&self) -> &KeyDist {
        &self.key
    }

    /// Whether some Bob input sees `f` change with Alice's input.
    pub fn f_depends_on_x(&self) -> bool {
        (0..self.scenario.n()).any(|y| {
            let first = self.f(0, y);
            (1..self.scenario.m()).any(|x| self.f(x, y) != first)
        })
    }

    pub fn with_key(&self, key: KeyDist) -> Self {
        Self {
            key,
            ..self.clone()
        }
    }
}

/// Noisy one-time-pad box: Alice gets `g(x) ⊕ λ₁`, Bob gets `f(x, y) ⊕ λ₂`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NOtpBoxSpec {
    scenario: Scenario,
    g: Vec<bool>,
    f: Vec<bool>,
    keys: JointKeyDist,
}

impl NOtpBoxSpec {
    pub fn new(
        scenario: Scenario,
        g: Vec<bool>,
        f: Vec<Vec<bool>>,
        keys: JointKeyDist,
    ) -> Result<Self> {
        let f = check_output_maps(scenario, &g, &f)?;
        Ok(Self {
            scenario,
            g,
            f,
            keys,
        })
    }

    pub fn from_fn(
        scenario: Scenario,
        g: impl Fn(usize) -> bool,
        f: impl Fn(usize, usize) -> bool,
        keys: JointKeyDist,
    ) -> Self {
        Self {
            scenario,
            g: (0..scenario.m()).map(g).collect(),
            f: scenario.input_pairs().map(|(x, y)| f(x, y)).collect(),
            keys,
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn g(&self, x: usize) -> bool {
        self.g[x]
    }

    pub fn f(&self, x: usize, y: usize) -> bool {
        self.f[x * self.scenario.n() + y]
    }

    pub fn keys(&self) -> &JointKeyDist {
        &self.keys
    }
}

/// Exact conditional distribution `P(a, b | x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorrelationTable {
    scenario: Scenario,
    entries: Vec<Rational>,
}

fn slot(n: usize, a: bool, b: bool, x: usize, y: usize) -> usize {
    ((x * n + y) << 2) | ((a as usize) << 1) | b as usize
}

impl CorrelationTable {
    /// Builds a table from `entry(a, b, x, y)`, checking nonnegativity and
    /// per-input normalization.
    pub fn from_fn(
        scenario: Scenario,
        mut entry: impl FnMut(bool, bool, usize, usize) -> Rational,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(4 * scenario.m() * scenario.n());
        for (x, y) in scenario.input_pairs() {
            for a in BITS {
                for b in BITS {
                    entries.push(entry(a, b, x, y));
                }
            }
        }
        Self::from_entries(scenario, entries)
    }

    /// `entries` in the order `(x, y, a, b)`, `b` fastest.
    pub fn from_entries(scenario: Scenario, entries: Vec<Rational>) -> Result<Self> {
        let expected = 4 * scenario.m() * scenario.n();
        if entries.len() != expected {
            return Err(Error::Malformed(format!(
                "table has {} entries, expected {expected}",
                entries.len()
            )));
        }
        for (cell, chunk) in entries.chunks(4).enumerate() {
            let (x, y) = (cell / scenario.n(), cell % scenario.n());
            if chunk.iter().any(Signed::is_negative) {
                return Err(Error::Malformed(format!(
                    "negative probability at inputs ({x},{y})"
                )));
            }
            let total: Rational = chunk.iter().sum();
            if !total.is_one() {
                return Err(Error::Malformed(format!(
                    "entries at inputs ({x},{y}) sum to {total}, not 1"
                )));
            }
        }
        Ok(Self { scenario, entries })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `P(a, b | x, y)`. Panics if `(x, y)` is outside the scenario.
    pub fn get(&self, a: bool, b: bool, x: usize, y: usize) -> &Rational {
        assert!(
            x < self.scenario.m() && y < self.scenario.n(),
            "inputs out of range"
        );
        &self.entries[slot(self.scenario.n(), a, b, x, y)]
    }

    /// The four outcome probabilities at `(x, y)`, ordered `00, 01, 10, 11`.
    pub fn cell(&self, x: usize, y: usize) -> &[Rational] {
        let start = slot(self.scenario.n(), false, false, x, y);
        &self.entries[start..start + 4]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    /// `P_A(a | x, y) = Σ_b P(a, b | x, y)`.
    pub fn alice_marginal(&self, a: bool, x: usize, y: usize) -> Rational {
        self.get(a, false, x, y) + self.get(a, true, x, y)
    }

    /// `P_B(b | x, y) = Σ_a P(a, b | x, y)`.
    pub fn bob_marginal(&self, b: bool, x: usize, y: usize) -> Rational {
        self.get(false, b, x, y) + self.get(true, b, x, y)
    }

    /// Convex combination `weight·self + (1 − weight)·other`.
    pub fn mix(&self, other: &Self, weight: &Rational) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::Domain(
                "mixing tables from different scenarios".into(),
            ));
        }
        if !is_probability(weight) {
            return Err(Error::Domain(format!(
                "mixture weight {weight} outside [0,1]"
            )));
        }
        let rest = Rational::one() - weight;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(p, q)| weight * p + &rest * q)
            .collect();
        Ok(Self {
            scenario: self.scenario,
            entries,
        })
    }
}

/// Exact evaluation of `Σ_λ p(λ)·[a = g(x) ⊕ λ]·[b = f(x, y) ⊕ λ]`.
pub fn evaluate_otp(spec: &OtpBoxSpec) -> CorrelationTable {
    CorrelationTable::from_fn(spec.scenario(), |a, b, x, y| {
        BITS.iter()
            .filter(|&&lambda| a == spec.g(x) ^ lambda && b == spec.f(x, y) ^ lambda)
            .map(|&lambda| spec.key().p(lambda))
            .sum()
    })
    .expect("key distributions are normalized")
}

/// Exact evaluation of `Σ_{λ₁,λ₂} p(λ₁,λ₂)·[a = g(x) ⊕ λ₁]·[b = f(x, y) ⊕ λ₂]`.
pub fn evaluate_notp(spec: &NOtpBoxSpec) -> CorrelationTable {
    // Each output pair pins both keys, so exactly one term survives.
    CorrelationTable::from_fn(spec.scenario(), |a, b, x, y| {
        spec.keys().p(a ^ spec.g(x), b ^ spec.f(x, y)).clone()
    })
    .expect("key distributions are normalized")
}

/// `P(a, b | x, y) = ½·[a ⊕ b = h(x, y)]`.
fn parity_box(scenario: Scenario, h: impl Fn(usize, usize) -> bool) -> CorrelationTable {
    CorrelationTable::from_fn(scenario, |a, b, x, y| {
        if a ^ b == h(x, y) {
            half()
        } else {
            Rational::zero()
        }
    })
    .expect("parity boxes are normalized")
}

/// The PR box `½·δ(a ⊕ b, xy)`.
pub fn pr_box() -> CorrelationTable {
    parity_box(Scenario::two_by_two(), |x, y| x & y == 1)
}

/// The anti-PR box `½·δ(a ⊕ b, xy ⊕ 1)`.
pub fn anti_pr_box() -> CorrelationTable {
    parity_box(Scenario::two_by_two(), |x, y| x & y == 0)
}

/// `q·PR + (1 − q)·anti-PR`.
pub fn isotropic(q: &Rational) -> Result<CorrelationTable> {
    if !is_probability(q) {
        return Err(Error::Domain(format!("isotropic weight {q} outside [0,1]")));
    }
    pr_box().mix(&anti_pr_box(), q)
}

/// PR box whose hidden signal `x` reaches Bob through a bit-flip channel that
/// flips with probability `1 − μ`:
///
/// `μ·½Σ_λ[a=λ][b=xy⊕λ] + (1−μ)·½Σ_λ[a=λ][b=(x⊕1)y⊕λ]`.
pub fn noisy_ontic_box(mu: &Rational) -> Result<CorrelationTable> {
    if !is_probability(mu) {
        return Err(Error::Domain(format!(
            "channel fidelity {mu} outside [0,1]"
        )));
    }
    let flipped = Rational::one() - mu;
    Ok(
        CorrelationTable::from_fn(Scenario::two_by_two(), |a, b, x, y| {
            let (x, y) = (x == 1, y == 1);
            let mut total = Rational::zero();
            for lambda in BITS {
                if a == lambda && b == (x & y) ^ lambda {
                    total += mu * half();
                }
                if a == lambda && b == (!x & y) ^ lambda {
                    total += &flipped * half();
                }
            }
            total
        })
        .expect("noisy ontic boxes are normalized"),
    )
}

/// Product of two deterministic strategies `a = alice[x]`, `b = bob[y]`.
pub fn local_deterministic(
    scenario: Scenario,
    alice: &[bool],
    bob: &[bool],
) -> Result<CorrelationTable> {
    if alice.len() != scenario.m() || bob.len() != scenario.n() {
        return Err(Error::Malformed(format!(
            "strategies cover {}x{} inputs, scenario is {}x{}",
            alice.len(),
            bob.len(),
            scenario.m(),
            scenario.n()
        )));
    }
    CorrelationTable::from_fn(scenario, |a, b, x, y| {
        if a == alice[x] && b == bob[y] {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

/// Draws `(a, b)` from `P(·, · | x, y)`.
pub fn sample_outcome(
    table: &CorrelationTable,
    x: usize,
    y: usize,
    seed: &mut SeedState,
) -> Result<(bool, bool)> {
    table.scenario().check_inputs(x, y)?;
    let i = seed.sample_weighted(table.cell(x, y));
    Ok((i & 2 != 0, i & 1 != 0))
}

/// A box described by its hidden-variable response: for inputs `(x, y)`, the
/// weighted list of output pairs produced by each hidden-variable value.
///
/// Summing the responses gives a second route to the correlation table that
/// does not go through the closed-form evaluators.
pub trait HiddenVariableBox {
    fn scenario(&self) -> Scenario;

    /// `(weight, a, b)` for every hidden-variable value.
    fn responses(&self, x: usize, y: usize) -> Vec<(Rational, bool, bool)>;

    fn correlation_table(&self) -> CorrelationTable {
        CorrelationTable::from_fn(self.scenario(), |a, b, x, y| {
            self.responses(x, y)
                .into_iter()
                .filter(|&(_, ra, rb)| ra == a && rb == b)
                .map(|(w, _, _)| w)
                .sum()
        })
        .expect("hidden-variable weights are normalized")
    }
}

impl HiddenVariableBox for OtpBoxSpec {
    fn scenario(&self) -> Scenario {
        self.scenario
    }

    fn responses(&self, x: usize, y: usize) -> Vec<(Rational, bool, bool)> {
        BITS.iter()
            .map(|&lambda| {
                (
                    self.key.p(lambda),
                    self.g(x) ^ lambda,
                    self.f(x, y) ^ lambda,
                )
            })
            .collect()
    }
}

impl HiddenVariableBox for NOtpBoxSpec {
    fn scenario(&self) -> Scenario {
        self.scenario
    }

    fn responses(&self, x: usize, y: usize) -> Vec<(Rational, bool, bool)> {
        let mut out = Vec::with_capacity(4);
        for l1 in BITS {
            for l2 in BITS {
                out.push((
                    self.keys.p(l1, l2).clone(),
                    self.g(x) ^ l1,
                    self.f(x, y) ^ l2,
                ));
            }
        }
        out
    }
}

/// The PR box's OTP model with Alice's input sent to Bob over a bit-flip
/// channel of fidelity `μ`. Hidden variables: the key `λ` and the flip bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyOnticBox {
    mu: Rational,
}

impl NoisyOnticBox {
    pub fn new(mu: Rational) -> Result<Self> {
        if !is_probability(&mu) {
            return Err(Error::Domain(format!(
                "channel fidelity {mu} outside [0,1]"
            )));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> &Rational {
        &self.mu
    }
}

impl HiddenVariableBox for NoisyOnticBox {
    fn scenario(&self) -> Scenario {
        Scenario::two_by_two()
    }

    fn responses(&self, x: usize, y: usize) -> Vec<(Rational, bool, bool)> {
        let (x, y) = (x == 1, y == 1);
        let mut out = Vec::with_capacity(4);
        for lambda in BITS {
            for flip in BITS {
                let channel = if flip {
                    Rational::one() - &self.mu
                } else {
                    self.mu.clone()
                };
                let received = x ^ flip;
                out.push((channel * half(), lambda, (received & y) ^ lambda));
            }
        }
        out
    }
}

/// Outcome counts collected by sampling a box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalTable {
    scenario: Scenario,
    counts: Vec<u64>,
}

impl EmpiricalTable {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            counts: vec![0; 4 * scenario.m() * scenario.n()],
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn record(&mut self, a: bool, b: bool, x: usize, y: usize) {
        self.counts[slot(self.scenario.n(), a, b, x, y)] += 1;
    }

    pub fn count(&self, a: bool, b: bool, x: usize, y: usize) -> u64 {
        self.counts[slot(self.scenario.n(), a, b, x, y)]
    }

    pub fn trials(&self, x: usize, y: usize) -> u64 {
        let start = slot(self.scenario.n(), false, false, x, y);
        self.counts[start..start + 4].iter().sum()
    }

    pub fn frequency(&self, a: bool, b: bool, x: usize, y: usize) -> f64 {
        let trials = self.trials(x, y);
        if trials == 0 {
            return 0.0;
        }
        self.count(a, b, x, y) as f64 / trials as f64
    }

    /// Pearson goodness of fit against `exact`, cell by cell.
    pub fn goodness_of_fit(&self, exact: &CorrelationTable) -> Result<GoodnessOfFit> {
        if exact.scenario() != self.scenario {
            return Err(Error::Domain(
                "empirical and exact tables differ in scenario".into(),
            ));
        }
        let mut fit = GoodnessOfFit::default();
        for (x, y) in self.scenario.input_pairs() {
            let trials = self.trials(x, y) as f64;
            if trials == 0.0 {
                continue;
            }
            let mut support = 0usize;
            for a in BITS {
                for b in BITS {
                    let p = crate::rational::to_f64(exact.get(a, b, x, y));
                    let observed = self.count(a, b, x, y) as f64;
                    if p == 0.0 {
                        if observed > 0.0 {
                            fit.support_violations += 1;
                        }
                        continue;
                    }
                    support += 1;
                    let expected = trials * p;
                    fit.chi_square += (observed - expected) * (observed - expected) / expected;
                    if p < 1.0 {
                        let sigma = libm::sqrt(p * (1.0 - p) / trials);
                        let z = libm::fabs(observed / trials - p) / sigma;
                        fit.max_abs_z = fit.max_abs_z.max(z);
                    }
                }
            }
            fit.degrees_of_freedom += support.saturating_sub(1);
        }
        Ok(fit)
    }
}

/// Summary of an empirical-versus-exact comparison.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GoodnessOfFit {
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    /// Largest per-entry binomial z-score.
    pub max_abs_z: f64,
    /// Draws of outcomes that have exact probability zero.
    pub support_violations: u64,
}

impl GoodnessOfFit {
    /// Normal deviate equivalent to the pooled chi-square statistic
    /// (Wilson–Hilferty cube-root transform). Zero degrees of freedom give 0.
    pub fn chi_square_z(&self) -> f64 {
        if self.degrees_of_freedom == 0 {
            return 0.0;
        }
        let k = self.degrees_of_freedom as f64;
        let c = 2.0 / (9.0 * k);
        (libm::cbrt(self.chi_square / k) - (1.0 - c)) / libm::sqrt(c)
    }

    /// Passes when no impossible outcome was drawn and the pooled statistic
    /// lies within `sigmas` standard deviations.
    pub fn passes(&self, sigmas: f64) -> bool {
        self.support_violations == 0 && self.chi_square_z() <= sigmas
    }
}
