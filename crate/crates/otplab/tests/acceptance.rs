//! End-to-end acceptance checks, one line of output per criterion.
//!
//! Run with `cargo test -p otplab --test acceptance`. Every random case is
//! drawn from fixed seeds, so a run is reproducible bit for bit.

use std::process::{Command, ExitCode};
use std::time::Instant;

use otplab_core::analysis::{
    chsh_value, full_output_vertex_structure, local_2222, notp_model_from_isotropic, ns_check,
    otp_model_from_vertex, uniform_key_verdict, ChshVariant, VertexStructure,
};
use otplab_core::boxes::{
    anti_pr_box, evaluate_notp, evaluate_otp, isotropic, local_deterministic, pr_box, BITS,
};
use otplab_core::infotheory::{ic_threshold_notp, rac_run_noisy_ontic, rac_run_notp};
use otplab_core::protocols::{
    named_function, simulate_otp_via_pr, vandam_exhaustive_with, xor_homomorphism_check, BitString,
    DistributedFunction,
};
use otplab_core::rational::{half, int, ratio};
use otplab_core::{CorrelationTable, KeyDist, OtpBoxSpec, Rational, Scenario, SeedState};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn below(rng: &mut SeedState, bound: usize) -> usize {
    rng.next_below(bound as u64) as usize
}

fn random_scenario(rng: &mut SeedState, min_m: usize) -> Scenario {
    Scenario::new(min_m + below(rng, 5 - min_m), 1 + below(rng, 4)).unwrap()
}

fn random_bits(rng: &mut SeedState, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.next_bit()).collect()
}

fn random_f(rng: &mut SeedState, s: Scenario) -> Vec<Vec<bool>> {
    (0..s.m()).map(|_| random_bits(rng, s.n())).collect()
}

/// A key in [0, 1] with a small denominator; one draw in four is exactly 1/2.
fn random_key(rng: &mut SeedState) -> Rational {
    if below(rng, 4) == 0 {
        return half();
    }
    let den = 1 + below(rng, 16) as i64;
    ratio(below(rng, den as usize + 1) as i64, den)
}

fn f_depends_on_x(f: &[Vec<bool>]) -> bool {
    f.iter().any(|row| row != &f[0])
}

/// `Σ_λ p(λ)[a = g ⊕ λ][b = f ⊕ λ]`, written out directly.
fn otp_oracle(g: &[bool], f: &[Vec<bool>], p0: &Rational) -> CorrelationTable {
    let s = Scenario::new(g.len(), f[0].len()).unwrap();
    CorrelationTable::from_fn(s, |a, b, x, y| {
        let mut total = int(0);
        for lambda in BITS {
            let weight = if lambda { int(1) - p0 } else { p0.clone() };
            if a == g[x] ^ lambda && b == f[x][y] ^ lambda {
                total += weight;
            }
        }
        total
    })
    .unwrap()
}

fn marginals_independent_of_remote_input(t: &CorrelationTable) -> bool {
    let s = t.scenario();
    let bob_ok = (0..s.n()).all(|y| {
        BITS.iter()
            .all(|&b| (1..s.m()).all(|x| t.bob_marginal(b, x, y) == t.bob_marginal(b, 0, y)))
    });
    let alice_ok = (0..s.m()).all(|x| {
        BITS.iter()
            .all(|&a| (1..s.n()).all(|y| t.alice_marginal(a, x, y) == t.alice_marginal(a, x, 0)))
    });
    bob_ok && alice_ok
}

fn uniform_key_characterization() -> Check {
    let mut rng = SeedState::from_seed(0x1e);
    let (mut dependent, mut uniform_hits) = (0, 0);
    while dependent < 500 {
        let s = random_scenario(&mut rng, 2);
        let g = random_bits(&mut rng, s.m());
        let f = random_f(&mut rng, s);
        if !f_depends_on_x(&f) {
            continue;
        }
        dependent += 1;
        let p0 = random_key(&mut rng);
        let spec =
            OtpBoxSpec::new(s, g.clone(), f.clone(), KeyDist::new(p0.clone()).unwrap()).unwrap();
        let table = evaluate_otp(&spec);
        ensure(table == otp_oracle(&g, &f, &p0), || {
            format!("table mismatch for {spec:?}")
        })?;
        let ns = ns_check(&table).is_ns();
        let uniform = p0 == half();
        uniform_hits += uniform as usize;
        ensure(ns == uniform, || {
            format!("ns = {ns} with key {p0} for {spec:?}")
        })?;
        ensure(ns == marginals_independent_of_remote_input(&table), || {
            "ns_check disagrees with marginals".into()
        })?;
        ensure(uniform_key_verdict(&spec).is_consistent(), || {
            "inconsistent verdict".into()
        })?;
    }
    for _ in 0..200 {
        let s = random_scenario(&mut rng, 1);
        let g = random_bits(&mut rng, s.m());
        let row = random_bits(&mut rng, s.n());
        let f = vec![row; s.m()];
        let p0 = random_key(&mut rng);
        let spec = OtpBoxSpec::new(s, g, f, KeyDist::new(p0.clone()).unwrap()).unwrap();
        ensure(ns_check(&evaluate_otp(&spec)).is_ns(), || {
            format!("f constant in x but signaling with key {p0}")
        })?;
    }
    Ok(format!(
        "500 x-dependent specs ({uniform_hits} uniform keys), 200 x-constant specs"
    ))
}

fn bob_marginal_formula() -> Check {
    let mut rng = SeedState::from_seed(0xa2);
    for _ in 0..100 {
        let s = random_scenario(&mut rng, 1);
        let f = random_f(&mut rng, s);
        let p0 = random_key(&mut rng);
        let spec = OtpBoxSpec::new(
            s,
            vec![false; s.m()],
            f.clone(),
            KeyDist::new(p0.clone()).unwrap(),
        )
        .unwrap();
        let table = evaluate_otp(&spec);
        let r = int(2) * &p0 - int(1);
        for (x, y) in s.input_pairs() {
            let fv = int(f[x][y] as i64);
            let fbar = int(1) - &fv;
            let expected = half() + (&fv - &fbar) * &r / int(2);
            let got = table.bob_marginal(true, x, y);
            ensure(got == expected, || {
                format!("P_B(1|{x},{y}) = {got}, expected {expected} (p0 = {p0})")
            })?;
        }
    }
    Ok("100 (f, p0) pairs exact".into())
}

fn vertex_round_trip() -> Check {
    let mut rng = SeedState::from_seed(0x3b);
    for _ in 0..200 {
        let s = random_scenario(&mut rng, 1);
        let vs = VertexStructure::random(s, &mut rng);
        let table = vs.table();
        let found =
            full_output_vertex_structure(&table).map_err(|e| format!("vertex rejected: {e}"))?;
        ensure(found == vs, || "recovered a different h".into())?;
        ensure(
            evaluate_otp(&otp_model_from_vertex(&found)) == table,
            || "round trip changed the table".into(),
        )?;
    }
    let pr = full_output_vertex_structure(&pr_box()).map_err(|e| e.to_string())?;
    ensure(
        pr == VertexStructure::from_fn(Scenario::two_by_two(), |x, y| x & y == 1),
        || "PR h is not xy".into(),
    )?;
    Ok("200 random vertices, PR gives h = xy".into())
}

fn isotropic_oracle(q: &Rational) -> CorrelationTable {
    CorrelationTable::from_fn(Scenario::two_by_two(), |a, b, x, y| {
        if a ^ b == (x & y == 1) {
            q / int(2)
        } else {
            (int(1) - q) / int(2)
        }
    })
    .unwrap()
}

fn isotropic_notp_model() -> Check {
    for i in 0..=100 {
        let q = ratio(i, 100);
        let via_model = evaluate_notp(&notp_model_from_isotropic(&q).map_err(|e| e.to_string())?);
        ensure(via_model == isotropic(&q).unwrap(), || {
            format!("mismatch at q = {q}")
        })?;
        ensure(via_model == isotropic_oracle(&q), || {
            format!("oracle mismatch at q = {q}")
        })?;
    }
    Ok("101-point q grid exact".into())
}

fn chsh_values() -> Check {
    let canonical =
        |t: &CorrelationTable| chsh_value(t, ChshVariant::CANONICAL).map_err(|e| e.to_string());
    ensure(canonical(&pr_box())? == int(4), || "PR".into())?;
    ensure(canonical(&anti_pr_box())? == int(-4), || "anti-PR".into())?;
    for i in 0..=100 {
        let q = ratio(i, 100);
        let expected = int(4) * (int(2) * &q - int(1));
        ensure(canonical(&isotropic(&q).unwrap())? == expected, || {
            format!("isotropic at q = {q}")
        })?;
    }
    for strategy in 0..16 {
        let alice = [strategy & 1 == 1, strategy & 2 == 2];
        let bob = [strategy & 4 == 4, strategy & 8 == 8];
        let table = local_deterministic(Scenario::two_by_two(), &alice, &bob).unwrap();
        let verdict = local_2222(&table).map_err(|e| e.to_string())?;
        ensure(verdict.max_chsh == int(2) && verdict.is_local, || {
            format!("strategy {strategy}: max {}", verdict.max_chsh)
        })?;
    }
    Ok("PR 4, anti-PR -4, isotropic 4(2q-1), 16 deterministic boxes max 2".into())
}

fn one_bit_computation() -> Check {
    let mut functions: Vec<(String, DistributedFunction)> = vec![
        ("AND".into(), DistributedFunction::and()),
        ("IP2".into(), DistributedFunction::inner_product(2).unwrap()),
        ("IP3".into(), DistributedFunction::inner_product(3).unwrap()),
    ];
    for seed in 1..=5 {
        let name = format!("RANDOM:{seed}");
        functions.push((
            name.clone(),
            named_function(&name, Some(3), Some(3)).unwrap(),
        ));
    }
    let mut rng = SeedState::from_seed(0x6d);
    let mut total = 0;
    for (name, df) in &functions {
        let mut problems = Vec::new();
        let report = vandam_exhaustive_with(df, &mut rng, |x, y, t| {
            let mut instances: Vec<usize> = t.box_events().iter().map(|e| e.instance).collect();
            instances.sort_unstable();
            instances.dedup();
            let want = df.eval(x, y).unwrap();
            if t.result() != Some(want)
                || t.bits_alice_to_bob() != 1
                || t.bits_bob_to_alice() != 0
                || instances.len() != t.box_events().len()
            {
                problems.push(format!("{name} at x={x} y={y}"));
            }
        })
        .map_err(|e| e.to_string())?;
        ensure(problems.is_empty(), || problems.join(", "))?;
        let runs = 1 << (df.m() + df.n());
        ensure(report.runs == runs && report.successes == runs, || {
            format!("{name}: {}/{}", report.successes, report.runs)
        })?;
        ensure(report.pool_size == 1 << df.n(), || {
            format!("{name}: pool {}", report.pool_size)
        })?;
        total += runs;
    }
    Ok(format!(
        "{} functions, {total} runs all correct with one bit",
        functions.len()
    ))
}

fn pr_pool_simulation() -> Check {
    const TRIALS: u64 = 100_000;
    const SIGMAS: f64 = 3.0;
    let mut rng = SeedState::from_seed(0x07);
    let mut sampler = SeedState::from_seed(2026);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100 {
        let s = random_scenario(&mut rng, 1);
        let g = random_bits(&mut rng, s.m());
        let f = random_f(&mut rng, s);
        let spec = OtpBoxSpec::new(s, g.clone(), f.clone(), KeyDist::uniform()).unwrap();
        let sim = simulate_otp_via_pr(&spec, TRIALS, &mut sampler).map_err(|e| e.to_string())?;
        ensure(sim.exact == evaluate_otp(&spec), || {
            format!("spec {i}: exact table differs")
        })?;
        ensure(sim.exact == otp_oracle(&g, &f, &half()), || {
            format!("spec {i}: oracle differs")
        })?;
        let fit = sim
            .empirical
            .goodness_of_fit(&sim.exact)
            .map_err(|e| e.to_string())?;
        ensure(
            (0..s.m()).all(|x| (0..s.n()).all(|y| sim.empirical.trials(x, y) == TRIALS)),
            || "trial count".into(),
        )?;
        ensure(fit.passes(SIGMAS), || {
            format!(
                "spec {i} ({}x{}): chi-square z {:.3}, impossible draws {}",
                s.m(),
                s.n(),
                fit.chi_square_z(),
                fit.support_violations
            )
        })?;
        worst = worst.max(fit.chi_square_z());
    }
    Ok(format!(
        "100 specs exact; 1e5 trials per input pair, largest chi-square z {worst:.3} <= 3"
    ))
}

fn entropy_oracle(p: f64) -> f64 {
    [p, 1.0 - p]
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum()
}

fn grid() -> impl Iterator<Item = (Rational, f64)> {
    (0..=100).map(|i| (ratio(i, 100), i as f64 / 100.0))
}

fn rac_noisy_keys() -> Check {
    let mu_star = ic_threshold_notp();
    ensure((entropy_oracle(mu_star) - 0.5).abs() < 1e-12, || {
        format!("h(mu*) - 1/2 = {}", entropy_oracle(mu_star) - 0.5)
    })?;
    ensure((mu_star - 0.88997).abs() < 5e-6, || {
        format!("mu* = {mu_star}")
    })?;
    let mut worst = 0f64;
    for (mu, m) in grid() {
        let report = rac_run_notp(&mu).map_err(|e| e.to_string())?.report;
        let d = (report.i_n - (2.0 - 2.0 * entropy_oracle(m))).abs();
        ensure(d < 1e-9, || {
            format!("mu = {mu}: |I2 - closed form| = {d:e}")
        })?;
        worst = worst.max(d);
        let inside = m <= mu_star && m >= 1.0 - mu_star;
        ensure(report.ic_satisfied == inside, || {
            format!("mu = {mu}: verdict {}", report.ic_satisfied)
        })?;
    }
    let at = |mu: Rational| {
        rac_run_notp(&mu)
            .map(|o| o.report)
            .map_err(|e| e.to_string())
    };
    ensure(at(int(1))?.i_n == 2.0, || "I2(1) != 2".into())?;
    ensure(at(half())?.i_n == 0.0, || "I2(1/2) != 0".into())?;
    let below_star = Rational::from_float(mu_star - 1e-9).unwrap();
    let above_star = Rational::from_float(mu_star + 1e-9).unwrap();
    ensure(
        at(below_star)?.ic_satisfied && !at(above_star)?.ic_satisfied,
        || "verdict does not flip at mu*".into(),
    )?;
    Ok(format!(
        "max deviation {worst:.1e}; I2(1) = 2, I2(1/2) = 0; mu* = {mu_star:.6}"
    ))
}

fn rac_noisy_channel() -> Check {
    let mut worst = 0f64;
    for (mu, m) in grid() {
        let report = rac_run_noisy_ontic(&mu).map_err(|e| e.to_string())?.report;
        let d = (report.i_n - (2.0 - entropy_oracle(m))).abs();
        ensure(d < 1e-9, || {
            format!("mu = {mu}: |I2 - closed form| = {d:e}")
        })?;
        worst = worst.max(d);
        if mu == half() {
            ensure(report.i_n == 1.0, || format!("I2(1/2) = {}", report.i_n))?;
        } else {
            ensure(report.i_n > 1.0, || {
                format!("mu = {mu}: I2 = {}", report.i_n)
            })?;
        }
    }
    Ok(format!(
        "max deviation {worst:.1e}; I2 > 1 off 1/2, I2(1/2) = 1"
    ))
}

fn xor_homomorphism() -> Check {
    // lengths up to 2 are required; 3 and 4 widen the sweep to 65,536 tuples
    // at the top length
    let mut counts = Vec::new();
    for len in 0..=4usize {
        let mut cases = 0u64;
        let words: Vec<BitString> = (0..1usize << len)
            .map(|v| BitString::from_index(v, len))
            .collect();
        for m1 in &words {
            for m2 in &words {
                for k1 in &words {
                    for k2 in &words {
                        ensure(xor_homomorphism_check(m1, m2, k1, k2) == Ok(true), || {
                            format!("{m1} {m2} {k1} {k2}")
                        })?;
                        let enc = |m: &BitString, k: &BitString| m.xor(k).unwrap();
                        let lhs = enc(m1, k1).xor(&enc(m2, k2)).unwrap();
                        let rhs = enc(&m1.xor(m2).unwrap(), &k1.xor(k2).unwrap());
                        ensure(lhs == rhs, || "oracle".into())?;
                        cases += 1;
                    }
                }
            }
        }
        counts.push(cases);
    }
    ensure(counts[2] == 256 && counts[4] == 65_536, || {
        format!("case counts {counts:?}")
    })?;
    Ok(format!(
        "all message/key tuples for lengths 0..=4, {counts:?} cases"
    ))
}

fn cli_determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("otplab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{"m": 2, "n": 3, "g": [1, 0], "f": [[0, 1, 1], [1, 0, 1]], "key": "1/2"}"#,
    )
    .map_err(|e| e.to_string())?;
    let spec = spec.to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["box", "eval", "--preset", "iso:3/4"],
        vec!["box", "eval", "--spec", &spec],
        vec!["ns-check", "--preset", "noisy-ontic:2/3"],
        vec!["chsh", "--preset", "pr"],
        vec!["vertex", "analyze", "--preset", "pr"],
        vec!["vertex", "random", "--m", "4", "--n", "4", "--seed", "7"],
        vec!["vandam", "--fn", "IP3", "--exhaustive", "--seed", "1"],
        vec![
            "vandam", "--fn", "AND", "--x", "1", "--y", "1", "--seed", "9",
        ],
        vec![
            "simulate-otp",
            "--spec",
            &spec,
            "--trials",
            "20000",
            "--seed",
            "5",
        ],
        vec!["ic", "--family", "notp", "--grid", "0.5:1:51"],
        vec!["ic", "--family", "noisy-ontic", "--grid", "0:1:21"],
        vec!["version"],
    ];
    let run = |args: &[&str], tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let transcript = dir.join(format!("transcript-{tag}.jsonl"));
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--format", "json"]);
        let transcript_str = transcript.to_str().unwrap().to_string();
        if args[0] == "vandam" {
            full.extend(["--transcript", &transcript_str]);
        }
        let out = Command::new(env!("CARGO_BIN_EXE_otplab"))
            .args(&full)
            .env_remove("OTPLAB_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?} exited with {:?}", out.status.code()));
        }
        let t = std::fs::read(&transcript).unwrap_or_default();
        Ok((out.stdout, t))
    };
    for args in &commands {
        let first = run(args, "a")?;
        let second = run(args, "b")?;
        ensure(!first.0.is_empty(), || format!("{args:?}: empty output"))?;
        ensure(first == second, || format!("{args:?}: outputs differ"))?;
    }
    let with_env = Command::new(env!("CARGO_BIN_EXE_otplab"))
        .args([
            "vertex", "random", "--m", "4", "--n", "4", "--format", "json",
        ])
        .env("OTPLAB_SEED", "7")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(with_env.stdout == run(&commands[5], "c")?.0, || {
        "OTPLAB_SEED differs from --seed".into()
    })?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "{} commands byte-identical across repeated runs",
        commands.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("uniform key iff no-signaling", uniform_key_characterization),
        ("Bob marginal bias formula", bob_marginal_formula),
        ("vertex to OTP model round trip", vertex_round_trip),
        ("isotropic boxes from correlated keys", isotropic_notp_model),
        ("CHSH values", chsh_values),
        ("one-bit distributed computation", one_bit_computation),
        ("OTP boxes from PR-box pools", pr_pool_simulation),
        ("RAC with noisy keys", rac_noisy_keys),
        ("RAC with noisy channel", rac_noisy_channel),
        ("XOR homomorphism", xor_homomorphism),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match check() {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed += 1;
                ("FAIL", detail)
            }
        };
        println!(
            "{status} {:>2} {name}: {detail} ({:.2?})",
            i + 1,
            start.elapsed()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
