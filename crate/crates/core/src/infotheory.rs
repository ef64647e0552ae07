//! Shannon quantities and the random-access-code test of information
//! causality.
//!
//! Joint distributions are assembled exactly by enumerating inputs and hidden
//! variables; floating point enters only when taking logarithms. All
//! logarithms are base 2 with `0·log 0 = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::analysis::{chsh_value, ChshVariant};
use crate::boxes::{
    evaluate_notp, HiddenVariableBox, JointKeyDist, NOtpBoxSpec, NoisyOnticBox, Scenario, BITS,
};
use crate::error::{Error, Result};
use crate::rational::{is_probability, ratio, to_f64, Rational};

/// Tolerance for comparing simulated and closed-form information values.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-9;
/// Target accuracy of the information-causality threshold search.
pub const THRESHOLD_TOLERANCE: f64 = 1e-12;

/// `h(μ) = −μ log μ − (1 − μ) log(1 − μ)`.
pub fn binary_entropy(mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!(
            "binary entropy argument {mu} outside [0,1]"
        )));
    }
    Ok(plogp(mu) + plogp(1.0 - mu))
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * libm::log2(p)
    }
}

/// Exact joint probability table over labelled finite variables, row-major
/// with the last variable fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    labels: Vec<String>,
    arities: Vec<usize>,
    probs: Vec<Rational>,
}

impl JointDistribution {
    pub fn new(labels: Vec<String>, arities: Vec<usize>, probs: Vec<Rational>) -> Result<Self> {
        if labels.len() != arities.len() {
            return Err(Error::Malformed("one arity per variable label".into()));
        }
        let size: usize = arities.iter().product();
        if probs.len() != size {
            return Err(Error::Malformed(format!(
                "joint table has {} entries, expected {size}",
                probs.len()
            )));
        }
        if probs.iter().any(Signed::is_negative) {
            return Err(Error::Malformed("negative joint probability".into()));
        }
        let total: Rational = probs.iter().sum();
        if total != ratio(1, 1) {
            return Err(Error::Malformed(format!(
                "joint probabilities sum to {total}"
            )));
        }
        Ok(Self {
            labels,
            arities,
            probs,
        })
    }

    /// Two binary variables, `table[u][v]`.
    pub fn binary_pair(first: &str, second: &str, table: [[Rational; 2]; 2]) -> Result<Self> {
        let [[p00, p01], [p10, p11]] = table;
        Self::new(
            vec![first.into(), second.into()],
            vec![2, 2],
            vec![p00, p01, p10, p11],
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, outcome: &[usize]) -> &Rational {
        &self.probs[self.index(outcome)]
    }

    fn index(&self, outcome: &[usize]) -> usize {
        assert_eq!(outcome.len(), self.arities.len(), "outcome arity");
        outcome.iter().zip(&self.arities).fold(0, |acc, (&v, &k)| {
            assert!(v < k, "outcome value out of range");
            acc * k + v
        })
    }

    fn outcome(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.arities.len()];
        for (slot, &k) in out.iter_mut().zip(&self.arities).rev() {
            *slot = index % k;
            index /= k;
        }
        out
    }

    /// Marginal over the variables at `keep`, in that order.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        if keep.iter().any(|&v| v >= self.arities.len()) {
            return Err(Error::Domain("marginal over an unknown variable".into()));
        }
        let arities: Vec<usize> = keep.iter().map(|&v| self.arities[v]).collect();
        let mut probs = vec![Rational::zero(); arities.iter().product()];
        for (i, p) in self.probs.iter().enumerate() {
            let full = self.outcome(i);
            let j = keep
                .iter()
                .zip(&arities)
                .fold(0, |acc, (&v, &k)| acc * k + full[v]);
            probs[j] += p;
        }
        Ok(Self {
            labels: keep.iter().map(|&v| self.labels[v].clone()).collect(),
            arities,
            probs,
        })
    }
}

pub fn entropy(dist: &JointDistribution) -> f64 {
    dist.probs.iter().map(|p| plogp(to_f64(p))).sum()
}

/// `I(U : V) = H(U) + H(V) − H(U, V)` for a joint over exactly two
/// variables, clamped at zero against rounding.
pub fn mutual_information(dist: &JointDistribution) -> Result<f64> {
    if dist.arities.len() != 2 {
        return Err(Error::Precondition(format!(
            "mutual information needs two variables, got {}",
            dist.arities.len()
        )));
    }
    let hu = entropy(&dist.marginal(&[0])?);
    let hv = entropy(&dist.marginal(&[1])?);
    Ok((hu + hv - entropy(dist)).max(0.0))
}

/// Outcome of a random-access-code experiment judged against information
/// causality.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationReport {
    /// `I(x_k : z | y = k)` for each target bit `k`.
    pub mutual_informations: Vec<f64>,
    /// `I_n = Σ_k I(x_k : z | y = k)`.
    pub i_n: f64,
    /// Classical bits sent from Alice to Bob.
    pub classical_bits: u32,
    /// `I_n ≤ classical_bits`.
    pub ic_satisfied: bool,
    pub closed_form: Option<f64>,
    pub discrepancy: Option<f64>,
}

impl InformationReport {
    fn new(mutual_informations: Vec<f64>, classical_bits: u32, closed_form: Option<f64>) -> Self {
        let i_n: f64 = mutual_informations.iter().sum();
        Self {
            ic_satisfied: i_n <= classical_bits as f64,
            discrepancy: closed_form.map(|c| libm::fabs(i_n - c)),
            mutual_informations,
            i_n,
            classical_bits,
            closed_form,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RacOutcome {
    /// `P(x_k, z | y = k)` for `k = 0, 1`.
    pub joints: [JointDistribution; 2],
    pub report: InformationReport,
    /// Canonical CHSH value of the box used, for comparison with `I₂`.
    pub chsh: Rational,
}

/// Box families whose RAC performance has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RacFamily {
    /// Isotropic boxes as N-OTP boxes with keys correlated with fidelity `μ`.
    NoisyKeys,
    /// The PR box's OTP model with a bit-flip channel of fidelity `μ`.
    NoisyOntic,
}

impl RacFamily {
    pub fn name(&self) -> &'static str {
        match self {
            RacFamily::NoisyKeys => "notp",
            RacFamily::NoisyOntic => "noisy-ontic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "notp" => Ok(RacFamily::NoisyKeys),
            "noisy-ontic" => Ok(RacFamily::NoisyOntic),
            _ => Err(Error::Domain(format!("unknown RAC family {name:?}"))),
        }
    }

    pub fn run(&self, mu: &Rational) -> Result<RacOutcome> {
        match self {
            RacFamily::NoisyKeys => rac_run_notp(mu),
            RacFamily::NoisyOntic => rac_run_noisy_ontic(mu),
        }
    }

    /// `2 − 2h(μ)` for noisy keys, `2 − h(μ)` for the noisy channel.
    pub fn closed_form(&self, mu: f64) -> Result<f64> {
        let h = binary_entropy(mu)?;
        Ok(match self {
            RacFamily::NoisyKeys => 2.0 - 2.0 * h,
            RacFamily::NoisyOntic => 2.0 - h,
        })
    }
}

/// The 2→1 random access code with one classical bit: Alice holds
/// `x₀x₁`, inputs `x₀ ⊕ x₁`, and sends `a ⊕ x₀`; Bob inputs `y` and guesses
/// `z = b ⊕ message`. Returns `P(x_y, z | y)` for both `y`, enumerated over
/// uniform `x₀, x₁` and every hidden-variable value of the box.
fn rac_joints(bx: &impl HiddenVariableBox) -> Result<[JointDistribution; 2]> {
    let quarter = ratio(1, 4);
    let mut joints = Vec::with_capacity(2);
    for k in [0usize, 1] {
        let mut table: [[Rational; 2]; 2] = Default::default();
        for x0 in BITS {
            for x1 in BITS {
                for (weight, a, b) in bx.responses((x0 ^ x1) as usize, k) {
                    let message = a ^ x0;
                    let z = b ^ message;
                    let target = if k == 0 { x0 } else { x1 };
                    table[target as usize][z as usize] += &weight * &quarter;
                }
            }
        }
        joints.push(JointDistribution::binary_pair(
            &format!("x{k}"),
            "z",
            table,
        )?);
    }
    let [j0, j1]: [JointDistribution; 2] = joints.try_into().expect("two target bits");
    Ok([j0, j1])
}

fn rac_run(bx: &impl HiddenVariableBox, mu: &Rational, family: RacFamily) -> Result<RacOutcome> {
    let joints = rac_joints(bx)?;
    let informations = joints
        .iter()
        .map(mutual_information)
        .collect::<Result<Vec<_>>>()?;
    let closed_form = family.closed_form(to_f64(mu))?;
    Ok(RacOutcome {
        report: InformationReport::new(informations, 1, Some(closed_form)),
        chsh: chsh_value(&bx.correlation_table(), ChshVariant::CANONICAL)?,
        joints,
    })
}

fn check_mu(mu: &Rational) -> Result<()> {
    if !is_probability(mu) {
        return Err(Error::Domain(format!("fidelity {mu} outside [0,1]")));
    }
    Ok(())
}

/// RAC over the isotropic N-OTP box whose keys agree with probability `μ`.
pub fn rac_run_notp(mu: &Rational) -> Result<RacOutcome> {
    check_mu(mu)?;
    let spec = NOtpBoxSpec::from_fn(
        Scenario::two_by_two(),
        |_| false,
        |x, y| x & y == 1,
        JointKeyDist::correlated_family(mu)?,
    );
    debug_assert_eq!(evaluate_notp(&spec), spec.correlation_table());
    rac_run(&spec, mu, RacFamily::NoisyKeys)
}

/// RAC over the PR box's OTP model whose hidden channel has fidelity `μ`.
pub fn rac_run_noisy_ontic(mu: &Rational) -> Result<RacOutcome> {
    check_mu(mu)?;
    rac_run(&NoisyOnticBox::new(mu.clone())?, mu, RacFamily::NoisyOntic)
}

/// `μ* ∈ (½, 1)` with `h(μ*) = ½`, found by bisection. Noisy-key boxes
/// violate information causality exactly when `μ > μ*` or `μ < 1 − μ*`.
pub fn ic_threshold_notp() -> f64 {
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // h is decreasing on (½, 1).
        if plogp(mid) + plogp(1.0 - mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyInformation {
    /// `I(λ₁ : λ₂)`.
    pub mutual_information: f64,
    /// `I(λ₁ : λ₂) > ½`, the condition under which the key pair lets the
    /// RAC protocol violate information causality.
    pub violates_ic: bool,
}

pub fn key_mutual_information(keys: &JointKeyDist) -> Result<KeyInformation> {
    if !keys.is_ns_admissible() {
        return Err(Error::Precondition(
            "Bob's key marginal must be uniform".into(),
        ));
    }
    let table = [
        [keys.p(false, false).clone(), keys.p(false, true).clone()],
        [keys.p(true, false).clone(), keys.p(true, true).clone()],
    ];
    let mi = mutual_information(&JointDistribution::binary_pair(
        "lambda1", "lambda2", table,
    )?)?;
    Ok(KeyInformation {
        mutual_information: mi,
        violates_ic: mi > 0.5,
    })
}
