//! Hex truth tables for distributed functions.
//!
//! ```text
//! # lines starting with '#' are comments
//! 2 2
//! 0007
//! ```
//!
//! The first non-comment line holds `m n`. The remaining text is hex digits
//! (whitespace ignored) encoding `f` at bit index `x_dec·2ⁿ + y_dec`, most
//! significant bit of each digit first. Exactly `⌈2^(m+n)/4⌉` digits are
//! expected and padding bits must be zero.

use otplab_core::protocols::{DistributedFunction, MAX_FUNCTION_BITS};

use crate::error::CliError;

const DIGITS_PER_LINE: usize = 64;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Parse(format!("truth table: {}", msg.into()))
}

pub fn parse(text: &str) -> Result<DistributedFunction, CliError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("missing \"m n\" header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad header {header:?}"))))
        .collect::<Result<_, _>>()?;
    let [m, n] = dims[..] else {
        return Err(bad(format!("header {header:?} must be \"m n\"")));
    };
    if m + n > MAX_FUNCTION_BITS {
        return Err(CliError::Domain(format!(
            "truth table over {} input bits exceeds the {MAX_FUNCTION_BITS}-bit limit",
            m + n
        )));
    }
    let size = 1usize << (m + n);
    let mut table = Vec::with_capacity(size);
    let mut digits = 0usize;
    for c in lines.flat_map(str::chars).filter(|c| !c.is_whitespace()) {
        let v = c
            .to_digit(16)
            .ok_or_else(|| bad(format!("{c:?} is not a hex digit")))?;
        digits += 1;
        for shift in (0..4).rev() {
            let bit = (v >> shift) & 1 == 1;
            if table.len() < size {
                table.push(bit);
            } else if bit {
                return Err(bad("nonzero padding bits"));
            }
        }
    }
    let expected = size.div_ceil(4);
    if digits != expected {
        return Err(bad(format!(
            "expected {expected} hex digits for {m}x{n} inputs, found {digits}"
        )));
    }
    Ok(DistributedFunction::new(m, n, table)?)
}

pub fn render(df: &DistributedFunction) -> String {
    let mut out = format!("{} {}\n", df.m(), df.n());
    let hex: Vec<char> = df
        .table()
        .chunks(4)
        .map(|chunk| {
            let v = chunk
                .iter()
                .chain(std::iter::repeat(&false))
                .take(4)
                .fold(0u32, |acc, &b| (acc << 1) | b as u32);
            char::from_digit(v, 16).expect("nibble")
        })
        .collect();
    for line in hex.chunks(DIGITS_PER_LINE) {
        out.extend(line);
        out.push('\n');
    }
    out
}
