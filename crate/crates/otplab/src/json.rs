//! JSON documents for tables, box specifications and analysis reports.
//!
//! Rationals are written as canonical `"num/den"` strings, bits as `0`/`1`,
//! and table entries are keyed `"a,b|x,y"` in `(x, y, a, b)` order. Keys are
//! emitted in a fixed order so serialization is byte-stable.

use serde_json::{json, Map, Value};

use otplab_core::analysis::{NsReport, SignalingWitness, VertexRejection, VertexStructure};
use otplab_core::boxes::{EmpiricalTable, GoodnessOfFit, BITS};
use otplab_core::infotheory::InformationReport;
use otplab_core::protocols::ProtocolTranscript;
use otplab_core::rational::{format_rational, parse_rational};
use otplab_core::{
    CorrelationTable, JointKeyDist, KeyDist, NOtpBoxSpec, OtpBoxSpec, Rational, Scenario,
};

use crate::error::CliError;

pub fn rational(value: &Rational) -> Value {
    Value::String(format_rational(value))
}

fn bit(b: bool) -> Value {
    Value::from(b as u8)
}

pub fn entry_key(a: bool, b: bool, x: usize, y: usize) -> String {
    format!("{},{}|{x},{y}", a as u8, b as u8)
}

pub fn table_to_json(table: &CorrelationTable) -> Value {
    let s = table.scenario();
    let mut entries = Map::new();
    for (x, y) in s.input_pairs() {
        for a in BITS {
            for b in BITS {
                entries.insert(entry_key(a, b, x, y), rational(table.get(a, b, x, y)));
            }
        }
    }
    json!({ "m": s.m(), "n": s.n(), "entries": entries })
}

pub fn empirical_to_json(table: &EmpiricalTable) -> Value {
    let s = table.scenario();
    let mut counts = Map::new();
    for (x, y) in s.input_pairs() {
        for a in BITS {
            for b in BITS {
                counts.insert(entry_key(a, b, x, y), Value::from(table.count(a, b, x, y)));
            }
        }
    }
    json!({ "m": s.m(), "n": s.n(), "counts": counts })
}

fn f_rows(scenario: Scenario, f: impl Fn(usize, usize) -> bool) -> Value {
    Value::Array(
        (0..scenario.m())
            .map(|x| Value::Array((0..scenario.n()).map(|y| bit(f(x, y))).collect()))
            .collect(),
    )
}

pub fn otp_spec_to_json(spec: &OtpBoxSpec) -> Value {
    let s = spec.scenario();
    json!({
        "m": s.m(),
        "n": s.n(),
        "g": (0..s.m()).map(|x| bit(spec.g(x))).collect::<Vec<_>>(),
        "f": f_rows(s, |x, y| spec.f(x, y)),
        "key": rational(spec.key().p0()),
    })
}

pub fn notp_spec_to_json(spec: &NOtpBoxSpec) -> Value {
    let s = spec.scenario();
    let k = spec.keys();
    json!({
        "m": s.m(),
        "n": s.n(),
        "g": (0..s.m()).map(|x| bit(spec.g(x))).collect::<Vec<_>>(),
        "f": f_rows(s, |x, y| spec.f(x, y)),
        "keys": [
            [rational(k.p(false, false)), rational(k.p(false, true))],
            [rational(k.p(true, false)), rational(k.p(true, true))],
        ],
    })
}

/// A box specification document: `"key"` marks an OTP box, `"keys"` an
/// N-OTP box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoxSpec {
    Otp(OtpBoxSpec),
    NOtp(NOtpBoxSpec),
}

impl BoxSpec {
    pub fn to_json(&self) -> Value {
        match self {
            BoxSpec::Otp(s) => otp_spec_to_json(s),
            BoxSpec::NOtp(s) => notp_spec_to_json(s),
        }
    }
}

fn malformed(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn object<'a>(value: &'a Value, what: &str) -> Result<&'a Map<String, Value>, CliError> {
    value
        .as_object()
        .ok_or_else(|| malformed(format!("{what} must be a JSON object")))
}

fn only_fields(obj: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<(), CliError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(malformed(format!("unexpected field {k:?} in {what}"))),
        None => Ok(()),
    }
}

fn count_field(obj: &Map<String, Value>, name: &str) -> Result<usize, CliError> {
    obj.get(name)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| malformed(format!("field {name:?} must be a nonnegative integer")))
}

fn rational_value(value: &Value, what: &str) -> Result<Rational, CliError> {
    let text = value
        .as_str()
        .ok_or_else(|| malformed(format!("{what} must be a \"num/den\" string")))?;
    Ok(parse_rational(text)?)
}

fn bit_value(value: &Value, what: &str) -> Result<bool, CliError> {
    match value.as_u64() {
        Some(0) => Ok(false),
        Some(1) => Ok(true),
        _ => Err(malformed(format!("{what} must be 0 or 1"))),
    }
}

fn scenario_of(obj: &Map<String, Value>) -> Result<Scenario, CliError> {
    Ok(Scenario::new(
        count_field(obj, "m")?,
        count_field(obj, "n")?,
    )?)
}

fn bit_array(value: Option<&Value>, what: &str) -> Result<Vec<bool>, CliError> {
    value
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(format!("{what} must be an array of bits")))?
        .iter()
        .map(|v| bit_value(v, what))
        .collect()
}

fn output_maps(obj: &Map<String, Value>) -> Result<(Vec<bool>, Vec<Vec<bool>>), CliError> {
    let g = bit_array(obj.get("g"), "g")?;
    let f = obj
        .get("f")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("f must be an array of bit rows"))?
        .iter()
        .map(|row| bit_array(Some(row), "f row"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((g, f))
}

pub fn spec_from_json(value: &Value) -> Result<BoxSpec, CliError> {
    let obj = object(value, "box spec")?;
    let scenario = scenario_of(obj)?;
    let (g, f) = output_maps(obj)?;
    match (obj.get("key"), obj.get("keys")) {
        (Some(key), None) => {
            only_fields(obj, &["m", "n", "g", "f", "key"], "OTP spec")?;
            let key = KeyDist::new(rational_value(key, "key")?)?;
            Ok(BoxSpec::Otp(OtpBoxSpec::new(scenario, g, f, key)?))
        }
        (None, Some(keys)) => {
            only_fields(obj, &["m", "n", "g", "f", "keys"], "N-OTP spec")?;
            let rows = keys
                .as_array()
                .filter(|r| r.len() == 2)
                .ok_or_else(|| malformed("keys must be a 2x2 array"))?;
            let mut table: [[Rational; 2]; 2] = Default::default();
            for (l1, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .filter(|r| r.len() == 2)
                    .ok_or_else(|| malformed("keys must be a 2x2 array"))?;
                for (l2, v) in row.iter().enumerate() {
                    table[l1][l2] = rational_value(v, "key probability")?;
                }
            }
            Ok(BoxSpec::NOtp(NOtpBoxSpec::new(
                scenario,
                g,
                f,
                JointKeyDist::new(table)?,
            )?))
        }
        _ => Err(malformed(
            "box spec needs exactly one of \"key\" or \"keys\"",
        )),
    }
}

fn parse_entry_key(key: &str) -> Option<(bool, bool, usize, usize)> {
    let (outputs, inputs) = key.split_once('|')?;
    let (a, b) = outputs.split_once(',')?;
    let (x, y) = inputs.split_once(',')?;
    let out_bit = |s: &str| match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    };
    let index = |s: &str| {
        (!s.is_empty()
            && s.bytes().all(|c| c.is_ascii_digit())
            && (s == "0" || !s.starts_with('0')))
        .then(|| s.parse().ok())
        .flatten()
    };
    Some((out_bit(a)?, out_bit(b)?, index(x)?, index(y)?))
}

pub fn table_from_json(value: &Value) -> Result<CorrelationTable, CliError> {
    let obj = object(value, "correlation table")?;
    only_fields(obj, &["m", "n", "entries"], "correlation table")?;
    let scenario = scenario_of(obj)?;
    let entries = obj
        .get("entries")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("entries must be an object keyed \"a,b|x,y\""))?;
    let mut slots: Vec<Option<Rational>> = vec![None; 4 * scenario.m() * scenario.n()];
    for (key, v) in entries {
        let (a, b, x, y) =
            parse_entry_key(key).ok_or_else(|| malformed(format!("bad entry key {key:?}")))?;
        if x >= scenario.m() || y >= scenario.n() {
            return Err(malformed(format!("entry {key:?} outside the scenario")));
        }
        let slot = (((x * scenario.n() + y) * 2 + a as usize) * 2) + b as usize;
        slots[slot] = Some(rational_value(v, key)?);
    }
    let values = slots
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| malformed("table is missing entries"))?;
    Ok(CorrelationTable::from_entries(scenario, values)?)
}

fn witness_to_json(w: &SignalingWitness) -> Value {
    json!({
        "direction": w.direction.as_str(),
        "local_input": w.local_input,
        "output": bit(w.output),
        "remote_inputs": [w.remote_inputs.0, w.remote_inputs.1],
        "marginals": [rational(&w.marginals.0), rational(&w.marginals.1)],
    })
}

pub fn ns_report_to_json(report: &NsReport) -> Value {
    json!({
        "alice_to_bob_ns": report.alice_to_bob_ns,
        "bob_to_alice_ns": report.bob_to_alice_ns,
        "witnesses": report.witnesses.iter().map(witness_to_json).collect::<Vec<_>>(),
    })
}

pub fn vertex_h_to_json(vs: &VertexStructure) -> Value {
    f_rows(vs.scenario(), |x, y| vs.h(x, y))
}

pub fn rejection_to_json(r: &VertexRejection) -> Value {
    json!({ "reason": r.reason(), "detail": r.to_string() })
}

pub fn fit_to_json(fit: &GoodnessOfFit, sigmas: f64) -> Value {
    json!({
        "chi_square": fit.chi_square,
        "degrees_of_freedom": fit.degrees_of_freedom,
        "chi_square_z": fit.chi_square_z(),
        "max_abs_z": fit.max_abs_z,
        "support_violations": fit.support_violations,
        "sigmas": sigmas,
        "passes": fit.passes(sigmas),
    })
}

pub fn information_report_to_json(report: &InformationReport) -> Value {
    json!({
        "mutual_informations": report.mutual_informations,
        "I_n": report.i_n,
        "classical_bits": report.classical_bits,
        "ic_satisfied": report.ic_satisfied,
        "closed_form": report.closed_form,
        "discrepancy": report.discrepancy,
    })
}

/// Transcript as JSON lines: one line per box use, per message, and a final
/// result line. `run` numbers the protocol run.
pub fn transcript_lines(run: usize, x: &str, y: &str, t: &ProtocolTranscript) -> Vec<String> {
    let mut lines = Vec::with_capacity(t.box_events().len() + t.messages().len() + 1);
    for e in t.box_events() {
        lines.push(
            json!({
                "run": run,
                "event": "box",
                "instance": e.instance,
                "alice_input": bit(e.alice_input),
                "alice_output": bit(e.alice_output),
                "bob_input": bit(e.bob_input),
                "bob_output": bit(e.bob_output),
            })
            .to_string(),
        );
    }
    for m in t.messages() {
        lines.push(
            json!({
                "run": run,
                "event": "message",
                "direction": m.direction.as_str(),
                "bit": bit(m.bit),
            })
            .to_string(),
        );
    }
    lines.push(
        json!({
            "run": run,
            "event": "result",
            "x": x,
            "y": y,
            "result": t.result().map(bit),
            "bits_alice_to_bob": t.bits_alice_to_bob(),
            "bits_bob_to_alice": t.bits_bob_to_alice(),
        })
        .to_string(),
    );
    lines
}

/// Pretty-printed with a trailing newline.
pub fn render(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}
