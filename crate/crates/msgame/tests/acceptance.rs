//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits 0 after reporting, so known failures stay visible without
//! breaking the workspace run. Set ACCEPTANCE_STRICT=1 to exit 1 on any FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use msgame::formulas::{separates, spoiler_from_formula, synthesize};
use msgame::game::{run_strategy, GameState, Pattern, Quantifier, Reduction, RunOptions, RunOutcome};
use msgame::oracle::{counting_lower_bounds, is_winnable_msl, min_rounds, OracleOptions, OracleValue};
use msgame::order_strategies::{
    alternating_separator, budget, cma_pattern, cma_player, exact_length_instance, exact_length_separator,
    golden_diffs, msl_instance, q_star, q_star_of, qtable, MslSpec,
};
use msgame::string_strategies::{complement, measure_constants, sep_one_vs_all, thirds_depth, StringInstance};
use msgame::structures::{BinaryString, PebbledBoard, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E: Quantifier = Quantifier::Exists;
const A: Quantifier = Quantifier::Forall;

/// Round-trip tallies for criterion 6.
#[derive(Default)]
struct Synthesis {
    checked: usize,
    failures: Vec<String>,
}

impl Synthesis {
    fn check(&mut self, label: &str, state: &GameState, out: &RunOutcome, opts: &RunOptions) {
        self.checked += 1;
        if let Err(why) = round_trip(state, out, opts) {
            self.failures.push(format!("{label}: {why}"));
        }
    }
}

fn round_trip(state: &GameState, out: &RunOutcome, opts: &RunOptions) -> Result<(), String> {
    let f = synthesize(&out.transcript).map_err(|e| e.to_string())?;
    let r = out.pattern.len();
    if f.quantifier_count() != r {
        return Err(format!("{} quantifiers for {r} rounds", f.quantifier_count()));
    }
    if f.signature() != out.pattern {
        return Err(format!("signature {} vs pattern {}", f.signature(), out.pattern));
    }
    separates(&f, &state.left, &state.right).map_err(|e| e.to_string())?;
    let replay = spoiler_from_formula(f, state).map_err(|e| e.to_string())?;
    let again = run_strategy(state, &replay, r, opts).map_err(|e| e.to_string())?;
    if !again.won || again.pattern.len() != r {
        return Err("replay lost".into());
    }
    Ok(())
}

fn quotient() -> RunOptions {
    RunOptions { reduction: Reduction::RankQuotient, check_branches: true, ..Default::default() }
}

struct Suite {
    passed: usize,
    failed: usize,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, limit: Option<Duration>, body: impl FnOnce() -> (bool, String)) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(body));
        let took = start.elapsed();
        let (mut ok, mut detail) = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if let Some(limit) = limit {
            if took > limit {
                ok = false;
                detail.push_str(&format!("; over the {limit:?} limit"));
            }
        }
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} criterion {id:>2} {name}: {detail} [{took:.2?}]", if ok { "PASS" } else { "FAIL" });
    }
}

fn criterion_1() -> (bool, String) {
    let rows = qtable(127);
    let diffs = golden_diffs(&rows);
    let detail = diffs
        .iter()
        .map(|(b, p)| {
            format!(
                "l={} computed ({}, {}, {}, {}) published ({}, {}, {}, {})",
                b.length, b.q_star_forall, b.q_star_exists, b.q_star, b.r_of_l, p.0, p.1, p.2, p.3
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    if diffs.is_empty() {
        (true, "all published rows reproduced".into())
    } else {
        (false, format!("{} row(s) differ: {detail}", diffs.len()))
    }
}

fn criterion_2() -> (bool, String) {
    let bad: Vec<u32> = (1..=4096)
        .filter(|&l| {
            let b = budget(l);
            !(b.r_of_l <= b.q_star && b.q_star <= b.r_of_l + 1)
        })
        .collect();
    (bad.is_empty(), format!("{} violations for l in 1..=4096", bad.len()))
}

fn criterion_3(syn: &mut Synthesis) -> (bool, String) {
    let opts = quotient();
    let mut bad = Vec::new();
    for l in 1..=64 {
        for q in [E, A] {
            let k = q_star_of(q, l);
            let p = cma_player(MslSpec::new(q, k, l)).expect("defined");
            let state = msl_instance(l, k);
            let out = run_strategy(&state, &p, k as usize, &opts).expect("plays");
            let want = cma_pattern(q, l);
            if !out.won || out.pattern.len() != k as usize || out.pattern != want || out.pattern.0.first() != Some(&q) {
                bad.push(format!("l={l} {}: {}", q.letter(), out.pattern));
            } else {
                syn.check(&format!("cma l={l} {}", q.letter()), &state, &out, &opts);
            }
        }
    }
    let five = cma_pattern(E, 5) == Pattern(vec![E, A, E, A]);
    if !five {
        bad.push("l=5 E pattern is not EAEA".into());
    }
    (bad.is_empty(), if bad.is_empty() { "128 runs won with the expected patterns".into() } else { bad.join("; ") })
}

fn criterion_4(syn: &mut Synthesis) -> (bool, String) {
    let opts = quotient();
    let mut bad = Vec::new();
    for l in 1..=64 {
        let k = q_star(l);
        let s = alternating_separator(l).expect("defined");
        let state = msl_instance(l, k);
        let out = run_strategy(&state, &s, k as usize, &opts).expect("plays");
        let shape = out.pattern.strictly_alternates() && out.pattern.0.last() == Some(&A) && out.pattern.len() == k as usize;
        if out.won && shape {
            syn.check(&format!("alternating l={l}"), &state, &out, &opts);
        } else {
            bad.push(format!("alternating l={l}: {}", out.pattern));
        }
    }
    for l in 1..=32 {
        let e = exact_length_separator(l).expect("defined");
        let r = e.pattern().len();
        let state = exact_length_instance(l, r as u32);
        let out = run_strategy(&state, e.as_ref(), r, &opts).expect("plays");
        if out.won && r <= q_star(l) as usize + 2 {
            syn.check(&format!("exact l={l}"), &state, &out, &opts);
        } else {
            bad.push(format!("exact l={l}: {r} rounds"));
        }
    }
    (bad.is_empty(), if bad.is_empty() { "64 alternating and 32 exact-length runs won".into() } else { bad.join("; ") })
}

fn criterion_5(syn: &mut Synthesis) -> (bool, String) {
    let opts = RunOptions::default();
    let mut bad = Vec::new();
    let mut runs = 0;
    for n in 1..=10 {
        let d = thirds_depth(n);
        let want = Pattern::parse(&"EEA".repeat(d)).expect("pattern");
        for w in BinaryString::all_of_length(n) {
            let p = sep_one_vs_all(&w);
            let right = complement(&[w.clone()], n);
            let state = StringInstance::new(vec![w.clone()], right).expect("disjoint").game();
            let out = run_strategy(&state, &p, 3 * d, &opts).expect("plays");
            runs += 1;
            if out.won && out.pattern == want {
                syn.check(&format!("one-vs-all {w}"), &state, &out, &opts);
            } else {
                bad.push(format!("{w}: {}", out.pattern));
            }
        }
    }
    (bad.is_empty(), if bad.is_empty() { format!("{runs} strings, full complements, all won") } else { bad.join("; ") })
}

fn criterion_6(syn: &Synthesis) -> (bool, String) {
    if syn.failures.is_empty() {
        (syn.checked > 0, format!("{} transcripts round-tripped", syn.checked))
    } else {
        (false, format!("{} of {} failed: {}", syn.failures.len(), syn.checked, syn.failures.join("; ")))
    }
}

fn criterion_7() -> (bool, String) {
    let opts = OracleOptions::default();
    let mut bad = Vec::new();
    let mut values = Vec::new();
    for l in 1..=6 {
        let b = budget(l);
        let state = msl_instance(l, b.q_star);
        let v = min_rounds(&state, b.q_star as usize, None, &opts).expect("within caps").value;
        match v {
            OracleValue::Exactly(k) if b.r_of_l as usize <= k && k <= b.q_star as usize => values.push(k.to_string()),
            _ => bad.push(format!("l={l}: {v:?} outside [{}, {}]", b.r_of_l, b.q_star)),
        }
    }
    for (q, r, l, want) in [(A, 1, 1, true), (E, 2, 1, true), (A, 2, 2, true), (A, 3, 2, true), (E, 1, 1, false)] {
        let got = is_winnable_msl(MslSpec::new(q, r, l), &opts).expect("within caps");
        if got != want {
            bad.push(format!("MSL {} r={r} l={l}: {got}", q.letter()));
        }
    }
    let pair = StringInstance::new(vec![BinaryString::parse("001000").unwrap()], vec![BinaryString::parse("000100").unwrap()])
        .unwrap()
        .game();
    let v = min_rounds(&pair, 4, None, &opts).expect("within caps").value;
    if !v.at_least(2) {
        bad.push(format!("001000 vs 000100: {v:?}"));
    }
    (
        bad.is_empty(),
        if bad.is_empty() { format!("min rounds for l=1..6: {}; base cases hold; pair needs {v:?}", values.join(" ")) } else { bad.join("; ") },
    )
}

fn random_board(rng: &mut ChaCha8Rng) -> PebbledBoard {
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=4);
        PebbledBoard::new(BinaryString::new((0..n).map(|_| rng.gen()).collect()).unwrap())
    } else {
        PebbledBoard::order(rng.gen_range(1..=6)).unwrap()
    }
}

fn criterion_8() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let variants = [(true, true), (true, false), (false, true), (false, false)];
    let mut bad = Vec::new();
    let mut instances = 0;
    while instances < 120 {
        let strings = rng.gen_bool(0.5);
        let side = |rng: &mut ChaCha8Rng| -> Vec<PebbledBoard> {
            let count = rng.gen_range(1..=3);
            (0..count)
                .map(|_| loop {
                    let b = random_board(rng);
                    if strings == matches!(b.base(), Structure::Str(_)) {
                        break b;
                    }
                })
                .collect()
        };
        let (left, right) = (side(&mut rng), side(&mut rng));
        let Ok(state) = GameState::new(left, right) else { continue };
        if state.left.iter().any(|b| state.right.contains(b)) {
            continue;
        }
        instances += 1;
        let values: Vec<OracleValue> = variants
            .iter()
            .map(|&(discard, dedup)| {
                let opts = OracleOptions { discard, dedup, ..Default::default() };
                min_rounds(&state, 3, None, &opts).expect("tiny").value
            })
            .collect();
        if values.iter().any(|v| *v != values[0]) {
            bad.push(format!("instance {instances}: {values:?}"));
        }
    }
    (bad.is_empty(), format!("{instances} instances, {} disagreements{}", bad.len(), if bad.is_empty() { String::new() } else { format!(": {}", bad.join("; ")) }))
}

fn criterion_9() -> (bool, String) {
    let rows = counting_lower_bounds(16..=1024);
    let bad: Vec<u32> = rows.iter().filter(|&&(n, k)| (k as f64) < n as f64 / (n as f64).log2()).map(|&(n, _)| n).collect();
    let (_, k_last) = rows[rows.len() - 1];
    (bad.is_empty(), format!("{} values of n, {} violations; k(1024) = {k_last}", rows.len(), bad.len()))
}

fn criterion_10() -> (bool, String) {
    let table = measure_constants(&[8, 16, 32, 64], 1.0, 0).expect("measures");
    let mut ok = true;
    let mut parts = Vec::new();
    for rc in &table {
        let cs: Vec<String> = rc.measurements.iter().map(|m| format!("{:.2}", m.constant)).collect();
        let pass = rc.passes();
        ok &= pass;
        parts.push(format!("row {} [{}]{}", rc.row, cs.join(" "), if pass { "" } else { " not bounded" }));
    }
    (ok, parts.join("; "))
}

fn main() {
    let mut suite = Suite { passed: 0, failed: 0 };
    let mut syn = Synthesis::default();
    suite.run(1, "golden q* table", Some(Duration::from_secs(1)), criterion_1);
    suite.run(2, "sandwich r <= q* <= r+1", Some(Duration::from_secs(1)), criterion_2);
    suite.run(3, "CMA strategies", Some(Duration::from_secs(120)), || criterion_3(&mut syn));
    suite.run(4, "alternation suites", None, || criterion_4(&mut syn));
    suite.run(5, "one-vs-all exhaustive n <= 10", None, || criterion_5(&mut syn));
    suite.run(6, "synthesis round trip", None, || criterion_6(&syn));
    suite.run(7, "oracle brackets", None, criterion_7);
    suite.run(8, "discard and dedup soundness", None, criterion_8);
    suite.run(9, "counting bound", Some(Duration::from_secs(10)), criterion_9);
    suite.run(10, "measured constants", None, criterion_10);
    println!("{} passed, {} failed", suite.passed, suite.failed);
    if suite.failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
