//! Command dispatch and report rendering.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use otplab_core::analysis::{
    chsh_value, full_output_vertex_structure, local_2222, ns_check, otp_model_from_vertex,
    ChshVariant, NsReport, VertexStructure,
};
use otplab_core::boxes::{evaluate_notp, evaluate_otp, EmpiricalTable, BITS};
use otplab_core::infotheory::{binary_entropy, ic_threshold_notp, RacFamily};
use otplab_core::protocols::{
    named_function, simulate_otp_via_pr, vandam_exhaustive_with, vandam_run, BitString,
    ProtocolTranscript,
};
use otplab_core::rational::{format_rational, int, parse_rational, ratio, to_f64};
use otplab_core::{CorrelationTable, Rational, Scenario, SeedState};

use crate::error::{read_input, write_output, CliError};
use crate::json::{self, BoxSpec};
use crate::{presets, truth_table};

const MAX_GRID_STEPS: usize = 100_001;

#[derive(Debug, Parser)]
#[command(
    name = "otplab",
    version,
    about = "No-signaling boxes as one-time-pad crypto-systems"
)]
pub struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<String>,
    /// Seed for sampling commands.
    #[arg(long, global = true, env = "OTPLAB_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pretty,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a box to its exact correlation table.
    #[command(subcommand)]
    Box(BoxCommand),
    /// Test a box for no-signaling in both directions (exit 4 if it signals).
    NsCheck(TableSource),
    /// CHSH values and, for no-signaling boxes, the locality verdict.
    Chsh(ChshArgs),
    /// Full-output vertex recognition and generation.
    #[command(subcommand)]
    Vertex(VertexCommand),
    /// Compute a distributed function with PR boxes and one bit.
    Vandam(VandamArgs),
    /// Simulate a uniform-key OTP box with a pool of PR boxes.
    SimulateOtp(SimulateArgs),
    /// Random access code sweep against information causality.
    Ic(IcArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Subcommand)]
pub enum BoxCommand {
    Eval(TableSource),
}

#[derive(Debug, Subcommand)]
pub enum VertexCommand {
    /// Recognize a full-output vertex and rebuild it from its OTP model
    /// (exit 4 if rejected).
    Analyze(TableSource),
    /// Emit the table document of a random full-output vertex.
    Random {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TableSource {
    /// pr, anti-pr, iso:<q> or noisy-ontic:<mu>.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON box spec file.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<String>,
    /// JSON correlation table file.
    #[arg(long, value_name = "PATH")]
    pub table: Option<String>,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[command(flatten)]
    pub source: TableSource,
    /// Variant name such as chsh-neg-11 or chsh-neg-01-flip; all eight by default.
    #[arg(long)]
    pub variant: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VandamArgs {
    /// AND, IP<k>, RANDOM:<seed>, CONST0, CONST1 or FIRST.
    #[arg(
        long = "fn",
        value_name = "NAME",
        required_unless_present = "fn_file",
        conflicts_with = "fn_file"
    )]
    pub function: Option<String>,
    /// Hex truth-table file.
    #[arg(long, value_name = "PATH")]
    pub fn_file: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Run every input pair.
    #[arg(long, conflicts_with_all = ["x", "y"])]
    pub exhaustive: bool,
    /// Alice's input bits, big-endian.
    #[arg(long, requires = "y", required_unless_present = "exhaustive")]
    pub x: Option<String>,
    /// Bob's input bits, big-endian.
    #[arg(long, requires = "x")]
    pub y: Option<String>,
    /// Write JSON-lines transcripts here.
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SpecSource,
    /// Samples per input pair.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Gate width for the goodness-of-fit test.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SpecSource {
    /// pr or anti-pr.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON OTP spec file.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<String>,
}

#[derive(Debug, Args)]
pub struct IcArgs {
    /// notp or noisy-ontic.
    #[arg(long)]
    pub family: String,
    /// start:stop:steps over the fidelity μ, endpoints included.
    #[arg(long, default_value = "0:1:101")]
    pub grid: String,
}

/// A rendered command result. `negative` marks an analysis-negative verdict.
pub struct Report {
    pub json: Value,
    pub pretty: String,
    pub csv: Option<Vec<Vec<String>>>,
    pub negative: bool,
}

/// Parses `args` (program name first), runs the command, and writes the
/// report. Errors go to standard error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run_cli(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("otplab: {e}");
            e.into()
        }
    }
}

fn run_cli(cli: &Cli) -> Result<u8, CliError> {
    let report = execute(cli)?;
    let text = match cli.format {
        Format::Json => json::render(&report.json),
        Format::Pretty => report.pretty,
        Format::Csv => {
            let rows = report.csv.ok_or_else(|| {
                CliError::Parse("CSV output is not available for this command".into())
            })?;
            render_csv(&rows)
        }
    };
    match &cli.output {
        Some(path) => write_output(path, &text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                    input: false,
                })?;
        }
    }
    Ok(if report.negative { 4 } else { 0 })
}

fn render_csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV of UTF-8 fields")
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Box(BoxCommand::Eval(src)) => box_eval(src),
        Command::NsCheck(src) => ns_check_cmd(src),
        Command::Chsh(args) => chsh_cmd(args),
        Command::Vertex(VertexCommand::Analyze(src)) => vertex_analyze(src),
        Command::Vertex(VertexCommand::Random { m, n }) => {
            vertex_random(*m, *n, require_seed(cli, "vertex random")?)
        }
        Command::Vandam(args) => vandam_cmd(args, cli.seed.unwrap_or(0)),
        Command::SimulateOtp(args) => simulate_cmd(args, require_seed(cli, "simulate-otp")?),
        Command::Ic(args) => ic_cmd(args),
        Command::Version => Ok(version()),
    }
}

fn require_seed(cli: &Cli, command: &str) -> Result<u64, CliError> {
    cli.seed.ok_or_else(|| {
        CliError::Parse(format!(
            "{command} samples randomness: pass --seed or set OTPLAB_SEED"
        ))
    })
}

fn approx(q: &Rational) -> String {
    let s = format_rational(q);
    if q.is_integer() {
        s
    } else {
        format!("{s} ≈{:.6}", to_f64(q))
    }
}

fn bitc(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

struct Loaded {
    source: Value,
    spec: Option<BoxSpec>,
    table: CorrelationTable,
}

fn parse_json_file(path: &str) -> Result<Value, CliError> {
    serde_json::from_str(&read_input(path)?).map_err(|e| CliError::Parse(format!("{path}: {e}")))
}

fn load(src: &TableSource) -> Result<Loaded, CliError> {
    if let Some(name) = &src.preset {
        return Ok(Loaded {
            source: json!({ "kind": "preset", "name": name }),
            spec: None,
            table: presets::table(name)?,
        });
    }
    if let Some(path) = &src.spec {
        let spec = json::spec_from_json(&parse_json_file(path)?)?;
        let table = match &spec {
            BoxSpec::Otp(s) => evaluate_otp(s),
            BoxSpec::NOtp(s) => evaluate_notp(s),
        };
        return Ok(Loaded {
            source: json!({ "kind": "spec", "path": path }),
            spec: Some(spec),
            table,
        });
    }
    let path = src.table.as_deref().expect("clap enforces one source");
    Ok(Loaded {
        source: json!({ "kind": "table", "path": path }),
        spec: None,
        table: json::table_from_json(&parse_json_file(path)?)?,
    })
}

fn describe_source(source: &Value) -> String {
    match source["kind"].as_str() {
        Some("preset") => format!("preset {}", source["name"].as_str().unwrap_or("")),
        Some(kind) => format!("{kind} {}", source["path"].as_str().unwrap_or("")),
        None => String::new(),
    }
}

fn pretty_table(out: &mut String, table: &CorrelationTable) {
    let s = table.scenario();
    let _ = writeln!(out, "scenario {}x{}", s.m(), s.n());
    for (x, y) in s.input_pairs() {
        for a in BITS {
            for b in BITS {
                let _ = writeln!(
                    out,
                    "  P({},{}|{x},{y}) = {}",
                    bitc(a),
                    bitc(b),
                    approx(table.get(a, b, x, y))
                );
            }
        }
    }
}

fn pretty_ns(out: &mut String, report: &NsReport) {
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(
        out,
        "no-signaling: alice_to_bob {}, bob_to_alice {}",
        yes_no(report.alice_to_bob_ns),
        yes_no(report.bob_to_alice_ns)
    );
    for w in &report.witnesses {
        let _ = writeln!(
            out,
            "  witness {}: local input {}, output {}, remote inputs {} vs {}: {} vs {}",
            w.direction.as_str(),
            w.local_input,
            bitc(w.output),
            w.remote_inputs.0,
            w.remote_inputs.1,
            approx(&w.marginals.0),
            approx(&w.marginals.1)
        );
    }
}

fn table_csv(table: &CorrelationTable) -> Vec<Vec<String>> {
    let mut rows = vec![["x", "y", "a", "b", "p"].map(String::from).to_vec()];
    let s = table.scenario();
    for (x, y) in s.input_pairs() {
        for a in BITS {
            for b in BITS {
                rows.push(vec![
                    x.to_string(),
                    y.to_string(),
                    (a as u8).to_string(),
                    (b as u8).to_string(),
                    format_rational(table.get(a, b, x, y)),
                ]);
            }
        }
    }
    rows
}

fn box_eval(src: &TableSource) -> Result<Report, CliError> {
    let loaded = load(src)?;
    let ns = ns_check(&loaded.table);
    let mut pretty = format!("box from {}\n", describe_source(&loaded.source));
    pretty_table(&mut pretty, &loaded.table);
    pretty_ns(&mut pretty, &ns);
    Ok(Report {
        json: json!({
            "command": "box eval",
            "source": loaded.source,
            "spec": loaded.spec.as_ref().map(BoxSpec::to_json),
            "table": json::table_to_json(&loaded.table),
            "ns": json::ns_report_to_json(&ns),
        }),
        pretty,
        csv: Some(table_csv(&loaded.table)),
        negative: false,
    })
}

fn ns_check_cmd(src: &TableSource) -> Result<Report, CliError> {
    let loaded = load(src)?;
    let ns = ns_check(&loaded.table);
    let verdict = if ns.is_ns() {
        "no-signaling"
    } else {
        "signaling"
    };
    let mut pretty = format!(
        "box from {}\nverdict: {verdict}\n",
        describe_source(&loaded.source)
    );
    pretty_ns(&mut pretty, &ns);
    let mut rows = vec![[
        "direction",
        "local_input",
        "output",
        "remote_input_0",
        "remote_input_1",
        "marginal_0",
        "marginal_1",
    ]
    .map(String::from)
    .to_vec()];
    for w in &ns.witnesses {
        rows.push(vec![
            w.direction.as_str().to_string(),
            w.local_input.to_string(),
            (w.output as u8).to_string(),
            w.remote_inputs.0.to_string(),
            w.remote_inputs.1.to_string(),
            format_rational(&w.marginals.0),
            format_rational(&w.marginals.1),
        ]);
    }
    Ok(Report {
        json: json!({
            "command": "ns-check",
            "source": loaded.source,
            "verdict": verdict,
            "ns": json::ns_report_to_json(&ns),
        }),
        pretty,
        csv: Some(rows),
        negative: !ns.is_ns(),
    })
}

fn chsh_cmd(args: &ChshArgs) -> Result<Report, CliError> {
    let loaded = load(&args.source)?;
    let variants = if args.variant.is_empty() {
        ChshVariant::all().to_vec()
    } else {
        args.variant
            .iter()
            .map(|v| ChshVariant::from_name(v).map_err(|e| CliError::Parse(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let values = variants
        .iter()
        .map(|&v| Ok((v, chsh_value(&loaded.table, v)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let ns = ns_check(&loaded.table).is_ns();
    let locality = if ns {
        Some(local_2222(&loaded.table)?)
    } else {
        None
    };

    let mut pretty = format!("box from {}\n", describe_source(&loaded.source));
    let mut rows = vec![vec!["variant".to_string(), "value".to_string()]];
    for (v, s) in &values {
        let _ = writeln!(pretty, "  {:<18} {}", v.name(), approx(s));
        rows.push(vec![v.name(), format_rational(s)]);
    }
    match &locality {
        Some(l) => {
            let _ = writeln!(
                pretty,
                "{}: max |S| = {} ({})",
                if l.is_local { "local" } else { "nonlocal" },
                approx(&l.max_chsh),
                l.attained_by.name()
            );
        }
        None => pretty.push_str("signaling box: locality verdict not defined\n"),
    }
    Ok(Report {
        json: json!({
            "command": "chsh",
            "source": loaded.source,
            "ns": ns,
            "values": values
                .iter()
                .map(|(v, s)| json!({ "variant": v.name(), "value": json::rational(s) }))
                .collect::<Vec<_>>(),
            "locality": locality.as_ref().map(|l| json!({
                "is_local": l.is_local,
                "max_chsh": json::rational(&l.max_chsh),
                "attained_by": l.attained_by.name(),
            })),
        }),
        pretty,
        csv: Some(rows),
        negative: false,
    })
}

fn vertex_analyze(src: &TableSource) -> Result<Report, CliError> {
    let loaded = load(src)?;
    let mut pretty = format!("box from {}\n", describe_source(&loaded.source));
    let report = match full_output_vertex_structure(&loaded.table) {
        Ok(vs) => {
            let model = otp_model_from_vertex(&vs);
            let round_trip = evaluate_otp(&model) == loaded.table;
            let _ = writeln!(pretty, "verdict: full-output vertex");
            pretty_h(&mut pretty, &vs);
            let _ = writeln!(pretty, "OTP model: g = 0, f = h, key uniform");
            let _ = writeln!(
                pretty,
                "round trip: {}",
                if round_trip { "OK" } else { "FAILED" }
            );
            json!({
                "command": "vertex analyze",
                "source": loaded.source,
                "accepted": true,
                "reason": null,
                "detail": null,
                "h": json::vertex_h_to_json(&vs),
                "otp_spec": json::otp_spec_to_json(&model),
                "round_trip": round_trip,
            })
        }
        Err(rejection) => {
            let _ = writeln!(
                pretty,
                "verdict: not a full-output vertex ({})",
                rejection.reason()
            );
            let _ = writeln!(pretty, "  {rejection}");
            let r = json::rejection_to_json(&rejection);
            json!({
                "command": "vertex analyze",
                "source": loaded.source,
                "accepted": false,
                "reason": r["reason"],
                "detail": r["detail"],
                "h": null,
                "otp_spec": null,
                "round_trip": null,
            })
        }
    };
    let negative = !(report["accepted"] == true && report["round_trip"] == true);
    Ok(Report {
        json: report,
        pretty,
        csv: None,
        negative,
    })
}

fn pretty_h(out: &mut String, vs: &VertexStructure) {
    let s = vs.scenario();
    let _ = writeln!(out, "h(x,y), rows x, columns y:");
    for x in 0..s.m() {
        let row: String = (0..s.n()).map(|y| bitc(vs.h(x, y))).collect();
        let _ = writeln!(out, "  {row}");
    }
}

fn vertex_random(m: usize, n: usize, seed: u64) -> Result<Report, CliError> {
    let scenario = Scenario::new(m, n)?;
    let vs = VertexStructure::random(scenario, &mut SeedState::from_seed(seed));
    let doc = json::table_to_json(&vs.table());
    Ok(Report {
        pretty: json::render(&doc),
        csv: Some(table_csv(&vs.table())),
        json: doc,
        negative: false,
    })
}

fn vandam_cmd(args: &VandamArgs, seed: u64) -> Result<Report, CliError> {
    let (df, function) = match (&args.function, &args.fn_file) {
        (Some(name), _) => (
            named_function(name, args.m, args.n)?,
            json!({ "name": name }),
        ),
        (None, Some(path)) => (
            truth_table::parse(&read_input(path)?)?,
            json!({ "file": path }),
        ),
        (None, None) => unreachable!("clap requires a function"),
    };
    for (given, actual, which) in [(args.m, df.m(), "m"), (args.n, df.n(), "n")] {
        if given.is_some_and(|g| g != actual) {
            return Err(CliError::Domain(format!(
                "--{which} {} does not match the function's {actual}",
                given.unwrap()
            )));
        }
    }
    let mut rng = SeedState::from_seed(seed);
    let mut transcript = String::new();
    let mut run_index = 0usize;
    let mut record = |x: &BitString, y: &BitString, t: &ProtocolTranscript| {
        if args.transcript.is_some() {
            for line in json::transcript_lines(run_index, &x.to_string(), &y.to_string(), t) {
                transcript.push_str(&line);
                transcript.push('\n');
            }
        }
        run_index += 1;
    };

    let pool_size = 1usize << df.n();
    let (summary, single) = if args.exhaustive {
        let r = vandam_exhaustive_with(&df, &mut rng, &mut record)?;
        (
            (
                r.runs,
                r.successes,
                r.min_bits_alice_to_bob,
                r.max_bits_alice_to_bob,
                r.max_bits_bob_to_alice,
            ),
            None,
        )
    } else {
        let x: BitString = args.x.as_deref().expect("clap requires x").parse()?;
        let y: BitString = args.y.as_deref().expect("clap requires y").parse()?;
        let expected = df.eval(&x, &y)?;
        let t = vandam_run(&df, &x, &y, &mut rng)?;
        record(&x, &y, &t);
        let ok = t.result() == Some(expected);
        let (ab, ba) = (t.bits_alice_to_bob(), t.bits_bob_to_alice());
        (
            (1, ok as usize, ab, ab, ba),
            Some(json!({
                "x": x.to_string(),
                "y": y.to_string(),
                "result": t.result().map(|b| b as u8),
                "expected": expected as u8,
            })),
        )
    };
    let (runs, successes, min_ab, max_ab, max_ba) = summary;
    if let Some(path) = &args.transcript {
        write_output(path, &transcript)?;
    }

    let mut pretty = String::new();
    let _ = writeln!(
        pretty,
        "function {}x{} from {}",
        df.m(),
        df.n(),
        function
            .as_object()
            .and_then(|o| o.values().next())
            .and_then(Value::as_str)
            .unwrap_or("")
    );
    if let Some(s) = &single {
        let _ = writeln!(
            pretty,
            "x = {}, y = {}: result {}, expected {}",
            s["x"].as_str().unwrap_or(""),
            s["y"].as_str().unwrap_or(""),
            s["result"],
            s["expected"]
        );
    }
    let _ = writeln!(pretty, "correct: {successes}/{runs}");
    let _ = writeln!(pretty, "PR boxes per run: {pool_size}");
    let _ = writeln!(
        pretty,
        "bits alice->bob per run: min {min_ab}, max {max_ab}; bits bob->alice: max {max_ba}"
    );
    if let Some(path) = &args.transcript {
        let _ = writeln!(pretty, "transcript written to {path}");
    }

    let csv = vec![
        [
            "runs",
            "successes",
            "pool_size",
            "min_bits_alice_to_bob",
            "max_bits_alice_to_bob",
            "max_bits_bob_to_alice",
        ]
        .map(String::from)
        .to_vec(),
        [runs, successes, pool_size, min_ab, max_ab, max_ba]
            .map(|v| v.to_string())
            .to_vec(),
    ];
    Ok(Report {
        json: json!({
            "command": "vandam",
            "function": function,
            "m": df.m(),
            "n": df.n(),
            "seed": seed,
            "mode": if args.exhaustive { "exhaustive" } else { "single" },
            "pool_size": pool_size,
            "runs": runs,
            "successes": successes,
            "success_rate": json::rational(&ratio(successes as i64, runs as i64)),
            "bits_alice_to_bob": { "min": min_ab, "max": max_ab },
            "bits_bob_to_alice": { "max": max_ba },
            "run": single,
        }),
        pretty,
        csv: Some(csv),
        negative: successes != runs,
    })
}

fn simulate_cmd(args: &SimulateArgs, seed: u64) -> Result<Report, CliError> {
    let (source, spec) = if let Some(name) = &args.source.preset {
        (
            json!({ "kind": "preset", "name": name }),
            presets::otp_spec(name)?,
        )
    } else {
        let path = args
            .source
            .spec
            .as_deref()
            .expect("clap enforces one source");
        match json::spec_from_json(&parse_json_file(path)?)? {
            BoxSpec::Otp(s) => (json!({ "kind": "spec", "path": path }), s),
            BoxSpec::NOtp(_) => {
                return Err(CliError::Domain(
                    "PR-pool simulation takes a single-key OTP spec".into(),
                ));
            }
        }
    };
    if !(args.sigmas.is_finite() && args.sigmas > 0.0) {
        return Err(CliError::Domain(format!(
            "gate width {} must be positive",
            args.sigmas
        )));
    }
    let sim = simulate_otp_via_pr(&spec, args.trials, &mut SeedState::from_seed(seed))?;
    let direct = evaluate_otp(&spec);
    let matches = sim.exact == direct;
    let fit = sim.empirical.goodness_of_fit(&sim.exact)?;
    let ns = ns_check(&sim.exact);
    let passes = fit.passes(args.sigmas);

    let mut pretty = format!("box from {}\n", describe_source(&source));
    let _ = writeln!(
        pretty,
        "exact table of the PR-pool wiring (matches direct evaluation: {}):",
        if matches { "yes" } else { "no" }
    );
    pretty_table(&mut pretty, &sim.exact);
    pretty_ns(&mut pretty, &ns);
    let _ = writeln!(
        pretty,
        "{} trials per input pair: chi-square {:.3} on {} dof (z {:.3}), max entry z {:.3}, impossible draws {}",
        args.trials,
        fit.chi_square,
        fit.degrees_of_freedom,
        fit.chi_square_z(),
        fit.max_abs_z,
        fit.support_violations
    );
    let _ = writeln!(
        pretty,
        "{}σ gate: {}",
        args.sigmas,
        if passes { "pass" } else { "FAIL" }
    );

    Ok(Report {
        json: json!({
            "command": "simulate-otp",
            "source": source,
            "seed": seed,
            "trials_per_input": args.trials,
            "spec": json::otp_spec_to_json(&spec),
            "exact": json::table_to_json(&sim.exact),
            "matches_direct_evaluation": matches,
            "ns": json::ns_report_to_json(&ns),
            "empirical": json::empirical_to_json(&sim.empirical),
            "fit": json::fit_to_json(&fit, args.sigmas),
        }),
        pretty,
        csv: Some(simulation_csv(&sim.exact, &sim.empirical)),
        negative: !(matches && passes),
    })
}

fn simulation_csv(exact: &CorrelationTable, empirical: &EmpiricalTable) -> Vec<Vec<String>> {
    let mut rows = vec![["x", "y", "a", "b", "p_exact", "count", "frequency"]
        .map(String::from)
        .to_vec()];
    for (x, y) in exact.scenario().input_pairs() {
        for a in BITS {
            for b in BITS {
                rows.push(vec![
                    x.to_string(),
                    y.to_string(),
                    (a as u8).to_string(),
                    (b as u8).to_string(),
                    format_rational(exact.get(a, b, x, y)),
                    empirical.count(a, b, x, y).to_string(),
                    empirical.frequency(a, b, x, y).to_string(),
                ]);
            }
        }
    }
    rows
}

/// `start:stop:steps` with both endpoints included.
pub fn parse_grid(text: &str) -> Result<Vec<Rational>, CliError> {
    let bad = || CliError::Parse(format!("grid {text:?} must be start:stop:steps"));
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, steps] = parts[..] else {
        return Err(bad());
    };
    let start = parse_rational(start)?;
    let stop = parse_rational(stop)?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if steps == 0 {
        return Err(CliError::Parse("grid needs at least one step".into()));
    }
    if steps > MAX_GRID_STEPS {
        return Err(CliError::Domain(format!(
            "grid of {steps} points exceeds the {MAX_GRID_STEPS}-point limit"
        )));
    }
    if steps == 1 {
        if start != stop {
            return Err(CliError::Parse(
                "a one-point grid needs start = stop".into(),
            ));
        }
        return Ok(vec![start]);
    }
    let width = (&stop - &start) / int(steps as i64 - 1);
    Ok((0..steps)
        .map(|i| &start + &width * int(i as i64))
        .collect())
}

fn ic_cmd(args: &IcArgs) -> Result<Report, CliError> {
    let family = RacFamily::from_name(&args.family).map_err(|e| CliError::Parse(e.to_string()))?;
    let grid = parse_grid(&args.grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut csv = vec![[
        "mu",
        "I2_simulated",
        "I2_closed_form",
        "discrepancy",
        "ic_satisfied",
    ]
    .map(String::from)
    .to_vec()];
    let mut pretty = format!("random access code, family {}\n", family.name());
    let _ = writeln!(
        pretty,
        "  {:<24} {:>12} {:>12} {:>10}  IC",
        "mu", "I2", "closed form", "CHSH"
    );
    for mu in &grid {
        let outcome = family.run(mu)?;
        let r = &outcome.report;
        let closed = r.closed_form.expect("both families have closed forms");
        let discrepancy = r.discrepancy.expect("both families have closed forms");
        let _ = writeln!(
            pretty,
            "  {:<24} {:>12.9} {:>12.9} {:>10.6}  {}",
            approx(mu),
            r.i_n,
            closed,
            to_f64(&outcome.chsh),
            if r.ic_satisfied {
                "satisfied"
            } else {
                "violated"
            }
        );
        csv.push(vec![
            format_rational(mu),
            r.i_n.to_string(),
            closed.to_string(),
            discrepancy.to_string(),
            r.ic_satisfied.to_string(),
        ]);
        rows.push(json!({
            "mu": json::rational(mu),
            "I2_simulated": r.i_n,
            "I2_closed_form": closed,
            "discrepancy": discrepancy,
            "ic_satisfied": r.ic_satisfied,
            "mutual_informations": r.mutual_informations,
            "classical_bits": r.classical_bits,
            "chsh": json::rational(&outcome.chsh),
        }));
    }
    let threshold = match family {
        RacFamily::NoisyKeys => {
            let mu_star = ic_threshold_notp();
            let h = binary_entropy(mu_star)?;
            let _ = writeln!(
                pretty,
                "threshold: I2 > 1 for mu > mu* ≈{mu_star:.6} or mu < 1 - mu* ≈{:.6} (CHSH at mu* ≈{:.6})",
                1.0 - mu_star,
                4.0 * (2.0 * mu_star - 1.0)
            );
            csv.insert(0, vec![format!("# mu_star={mu_star}")]);
            Some(json!({
                "mu_star": mu_star,
                "mirror": 1.0 - mu_star,
                "binary_entropy_at_mu_star": h,
                "chsh_at_mu_star": 4.0 * (2.0 * mu_star - 1.0),
            }))
        }
        RacFamily::NoisyOntic => None,
    };
    Ok(Report {
        json: json!({
            "command": "ic",
            "family": family.name(),
            "grid": args.grid,
            "rows": rows,
            "threshold": threshold,
        }),
        pretty,
        csv: Some(csv),
        negative: false,
    })
}

fn version() -> Report {
    let v = env!("CARGO_PKG_VERSION");
    Report {
        json: json!({ "command": "version", "name": "otplab", "version": v }),
        pretty: format!("otplab {v}\n"),
        csv: Some(vec![
            vec!["name".into(), "version".into()],
            vec!["otplab".into(), v.into()],
        ]),
        negative: false,
    }
}
