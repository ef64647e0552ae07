//! Named boxes usable wherever a table or spec is expected.
//!
//! `pr`, `anti-pr`, `iso:<q>` and `noisy-ontic:<mu>`; the parameter accepts
//! `num/den`, an integer or a decimal.

use otplab_core::boxes::{anti_pr_box, isotropic, noisy_ontic_box, pr_box};
use otplab_core::rational::parse_rational;
use otplab_core::{CorrelationTable, KeyDist, OtpBoxSpec, Scenario};

use crate::error::CliError;

pub const NAMES: &str = "pr, anti-pr, iso:<q>, noisy-ontic:<mu>";

fn unknown(name: &str) -> CliError {
    CliError::Parse(format!("unknown preset {name:?} (expected one of {NAMES})"))
}

pub fn table(name: &str) -> Result<CorrelationTable, CliError> {
    match name {
        "pr" => return Ok(pr_box()),
        "anti-pr" => return Ok(anti_pr_box()),
        _ => {}
    }
    if let Some(q) = name.strip_prefix("iso:") {
        return Ok(isotropic(&parse_rational(q)?)?);
    }
    if let Some(mu) = name.strip_prefix("noisy-ontic:") {
        return Ok(noisy_ontic_box(&parse_rational(mu)?)?);
    }
    Err(unknown(name))
}

/// The uniform-key OTP model of a preset, for presets that have one.
pub fn otp_spec(name: &str) -> Result<OtpBoxSpec, CliError> {
    let flip = match name {
        "pr" => false,
        "anti-pr" => true,
        _ => {
            table(name)?;
            return Err(CliError::Domain(format!(
                "preset {name:?} is not a single-key OTP box; use pr, anti-pr or a spec file"
            )));
        }
    };
    Ok(OtpBoxSpec::from_fn(
        Scenario::two_by_two(),
        |_| false,
        move |x, y| (x & y == 1) ^ flip,
        KeyDist::uniform(),
    ))
}
