use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use msgame::formulas::{render, separates, spoiler_from_formula, synthesize, Formula};
use msgame::game::{run_strategy, GameState, Quantifier, Reduction, RunOptions, RunOutcome, StrategyPlayer};
use msgame::oracle::{counting_lower_bounds, min_rounds, OracleCaps, OracleOptions, OracleValue};
use msgame::order_strategies::{
    alternating_separator, budget, cma_player, exact_length_instance, exact_length_separator, golden_diffs,
    msl_instance, q_star, q_star_of, qtable, MslSpec,
};
use msgame::string_strategies::{
    anylen_instance, budget_table, complement, measure_constants, measure_row, sep_any_vs_any, sep_many_vs_all,
    sep_many_vs_many, sep_one_vs_all, sep_one_vs_all_anylen, sep_one_vs_many, sep_one_vs_one_anylen, wins_each,
    BudgetRow, StringInstance, StringPlan,
};
use msgame::structures::{BinaryString, PebbledBoard};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "msgame", version, about = "Multi-structural game engine")]
struct Cli {
    /// Print the JSON report on stdout; the text report goes to stderr.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall-clock times in the JSON report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// q* values and r(l), optionally diffed against the published table.
    Qtable {
        #[arg(long, default_value_t = 127)]
        max_l: u32,
        #[arg(long)]
        golden: bool,
    },
    /// Plays the order strategies for every l in range.
    VerifyLinear {
        #[arg(long, default_value_t = 1)]
        min_l: u32,
        #[arg(long, default_value_t = 64)]
        max_l: u32,
        #[arg(long, value_enum, default_value_t = Side::Both)]
        q: Side,
        /// Largest l for the exact-length separator.
        #[arg(long, default_value_t = 32)]
        max_exact: u32,
    },
    /// Plays a string strategy and checks the synthesized sentence.
    VerifyString(StringArgs),
    /// Prints the sentence read off a winning play.
    Synthesize {
        #[arg(long)]
        l: u32,
        #[arg(long, value_enum, default_value_t = Side::E)]
        q: Side,
        #[arg(long, value_enum, default_value_t = LinearKind::Cma)]
        kind: LinearKind,
    },
    /// Exact least number of rounds on a small instance.
    Oracle(OracleArgs),
    /// Upper-bound formulas for given side sizes, optionally with measured rounds.
    Bounds {
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Side sizes as "f,g": integers, "all", "n^k" or "2^k".
        #[arg(long, default_value = "1,all")]
        sizes: String,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Play each row's strategy at this n.
        #[arg(long)]
        measure: bool,
        /// Measure every row at n = 8, 16, 32, 64 and check the constants.
        #[arg(long)]
        constants: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Counting lower bound for all-vs-all string games.
    Counting {
        #[arg(long, default_value_t = 16)]
        from: u32,
        #[arg(long, default_value_t = 1024)]
        to: u32,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    E,
    A,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinearKind {
    Cma,
    Alternating,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    OneVsOne,
    OneVsAll,
    OneVsMany,
    ManyVsMany,
    ManyVsAll,
    AnyVsAny,
}

#[derive(Args)]
struct StringArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    n: Option<usize>,
    /// File with one bit string per line, or inline comma-separated strings.
    #[arg(long)]
    left: Option<String>,
    #[arg(long)]
    right: Option<String>,
    /// Random side sizes when no files are given.
    #[arg(long, default_value_t = 2)]
    left_size: usize,
    #[arg(long, default_value_t = 4)]
    right_size: usize,
    #[arg(long, default_value_t = 2)]
    t: u64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One-vs-all: every w of length n.
    #[arg(long)]
    exhaustive: bool,
    /// One-vs-all: also play against other lengths up to this one.
    #[arg(long)]
    max_other_len: Option<usize>,
    /// One-vs-one: bracket the strategy with the exact oracle value.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Orders of length at most l against the longer ones.
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    left: Option<String>,
    #[arg(long)]
    right: Option<String>,
    /// Side of the first move.
    #[arg(long, value_enum)]
    first: Option<Side>,
    /// Largest round count to try.
    #[arg(long, default_value_t = 4)]
    cap: usize,
    #[arg(long)]
    cap_boards: Option<usize>,
    #[arg(long)]
    cap_universe: Option<usize>,
    #[arg(long)]
    cap_depth: Option<usize>,
    #[arg(long)]
    cap_nodes: Option<u64>,
    #[arg(long)]
    no_discard: bool,
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    no_quotient: bool,
}

struct Report {
    text: String,
    json: Value,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match &cli.command {
        Command::Qtable { max_l, golden } => cmd_qtable(*max_l, *golden),
        Command::VerifyLinear { min_l, max_l, q, max_exact } => cmd_verify_linear(*min_l, *max_l, *q, *max_exact),
        Command::VerifyString(args) => cmd_verify_string(args),
        Command::Synthesize { l, q, kind } => cmd_synthesize(*l, *q, *kind),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bounds { n, sizes, epsilon, measure, constants, seed } => {
            cmd_bounds(*n, sizes, *epsilon, *measure, *constants, *seed)
        }
        Command::Counting { from, to } => cmd_counting(*from, *to),
    };
    match result {
        Ok(mut report) => {
            if cli.timing {
                report.json["wall_time_ms"] = json!(started.elapsed().as_millis() as u64);
            }
            report.json["ok"] = json!(report.ok);
            if cli.json {
                eprint!("{}", report.text);
                println!("{}", serde_json::to_string_pretty(&report.json).expect("serializable"));
            } else {
                print!("{}", report.text);
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn quantifiers(q: Side) -> Vec<Quantifier> {
    match q {
        Side::E => vec![Quantifier::Exists],
        Side::A => vec![Quantifier::Forall],
        Side::Both => vec![Quantifier::Exists, Quantifier::Forall],
    }
}

fn quotient() -> RunOptions {
    RunOptions { reduction: Reduction::RankQuotient, check_branches: true, ..Default::default() }
}

fn cmd_qtable(max_l: u32, golden: bool) -> Result<Report> {
    if max_l == 0 {
        bail!("--max-l must be at least 1");
    }
    let rows = qtable(max_l.max(if golden { 127 } else { 1 }));
    let shown = &rows[..max_l as usize];
    let mut text = String::from("    l  q*_A  q*_E    q*  r(l)\n");
    for b in shown {
        writeln!(text, "{:>5} {:>5} {:>5} {:>5} {:>5}", b.length, b.q_star_forall, b.q_star_exists, b.q_star, b.r_of_l)?;
    }
    let mut json = json!({
        "rows": shown.iter().map(|b| json!({
            "l": b.length, "q_star_forall": b.q_star_forall, "q_star_exists": b.q_star_exists,
            "q_star": b.q_star, "r": b.r_of_l,
        })).collect::<Vec<_>>(),
    });
    let mut ok = true;
    if golden {
        let diffs = golden_diffs(&rows[..127]);
        writeln!(text, "golden diffs against the published table (l = 1..127): {}", diffs.len())?;
        for (b, (fa, ex, q, r)) in &diffs {
            writeln!(
                text,
                "  l={}: computed ({}, {}, {}, {}), published ({fa}, {ex}, {q}, {r})",
                b.length, b.q_star_forall, b.q_star_exists, b.q_star, b.r_of_l
            )?;
        }
        json["golden_diffs"] = json!(diffs
            .iter()
            .map(|(b, p)| json!({"l": b.length, "computed": [b.q_star_forall, b.q_star_exists, b.q_star, b.r_of_l], "published": [p.0, p.1, p.2, p.3]}))
            .collect::<Vec<_>>());
        ok = diffs.is_empty();
    }
    Ok(Report { text, json, ok })
}

#[derive(Serialize)]
struct LinearRow {
    l: u32,
    strategy: String,
    rounds: usize,
    bound: usize,
    pattern: String,
    won: bool,
    branch_collisions: usize,
}

fn cmd_verify_linear(min_l: u32, max_l: u32, q: Side, max_exact: u32) -> Result<Report> {
    if min_l == 0 || min_l > max_l {
        bail!("need 1 <= --min-l <= --max-l");
    }
    let mut rows = Vec::new();
    for l in min_l..=max_l {
        for q in quantifiers(q) {
            let k = q_star_of(q, l);
            let p = cma_player(MslSpec::new(q, k, l))?;
            let out = run_strategy(&msl_instance(l, k), &p, k as usize, &quotient())?;
            rows.push(linear_row(l, format!("cma {}", q.letter()), k as usize, &out));
        }
        let s = alternating_separator(l)?;
        let k = q_star(l);
        let out = run_strategy(&msl_instance(l, k), &s, k as usize, &quotient())?;
        let alternates = out.pattern.strictly_alternates() && out.pattern.0.last() == Some(&Quantifier::Forall);
        let mut row = linear_row(l, "alternating".into(), k as usize, &out);
        row.won &= alternates;
        rows.push(row);
        if l <= max_exact {
            let e = exact_length_separator(l)?;
            let r = e.pattern().len();
            let out = run_strategy(&exact_length_instance(l, r as u32), e.as_ref(), r, &quotient())?;
            rows.push(linear_row(l, "exact-length".into(), q_star(l) as usize + 2, &out));
        }
    }
    let mut text = String::new();
    for r in &rows {
        writeln!(
            text,
            "l={:<3} {:<13} rounds={:<2} bound={:<2} {:<8} {}",
            r.l,
            r.strategy,
            r.rounds,
            r.bound,
            r.pattern,
            if r.won { "won" } else { "LOST" }
        )?;
    }
    let ok = rows.iter().all(|r| r.won && r.rounds <= r.bound && r.branch_collisions == 0);
    writeln!(text, "{} plays, {}", rows.len(), if ok { "all won" } else { "FAILURES" })?;
    Ok(Report { text, json: json!({ "plays": rows }), ok })
}

fn linear_row(l: u32, strategy: String, bound: usize, out: &RunOutcome) -> LinearRow {
    LinearRow {
        l,
        strategy,
        rounds: out.pattern.len(),
        bound,
        pattern: out.pattern.to_string(),
        won: out.won,
        branch_collisions: out.transcript.branch_collisions,
    }
}

/// One bit string per line with `#` comments, or inline comma-separated strings.
fn read_strings(arg: &str) -> Result<Vec<BinaryString>> {
    let inline = !arg.is_empty() && arg.chars().all(|c| c == '0' || c == '1' || c == ',');
    let text = if inline {
        arg.replace(',', "\n")
    } else {
        std::fs::read_to_string(Path::new(arg)).with_context(|| format!("reading {arg}"))?
    };
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            out.push(BinaryString::parse(line).with_context(|| format!("bad bit string {line:?}"))?);
        }
    }
    Ok(out)
}

fn random_strings(rng: &mut ChaCha8Rng, n: usize, count: usize, avoid: &BTreeSet<BinaryString>) -> Vec<BinaryString> {
    let room = if n < 64 { ((1u128 << n) as usize).saturating_sub(avoid.len()) } else { usize::MAX };
    let mut out = BTreeSet::new();
    while out.len() < count.min(room) {
        let w = BinaryString::new((0..n).map(|_| rng.gen()).collect()).expect("nonempty");
        if !avoid.contains(&w) {
            out.insert(w);
        }
    }
    out.into_iter().collect()
}

#[derive(Serialize)]
struct StringRow {
    strategy: String,
    n: usize,
    sizes: [usize; 2],
    budget_formula: String,
    budget_value: f64,
    rounds_used: usize,
    pattern: String,
    won: bool,
    fallback: bool,
    sentence_checked: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<String>,
}

fn best_row(n: usize, f: usize, g: usize, epsilon: f64) -> BudgetRow {
    budget_table(n, f as u128, g as u128, epsilon).into_iter().find(|r| r.best).expect("one row applies")
}

/// Synthesizes the sentence of a won play and model checks it on both sides.
fn sentence_holds(out: &RunOutcome, g: &GameState) -> Option<bool> {
    if !out.won {
        return None;
    }
    let f = synthesize(&out.transcript).ok()?;
    Some(f.quantifier_count() == out.pattern.len() && f.signature() == out.pattern && separates(&f, &g.left, &g.right).is_ok())
}

fn cmd_verify_string(a: &StringArgs) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let n = a.n.unwrap_or(6);
    let given = |s: &Option<String>| s.as_deref().map(read_strings).transpose();
    let (left, right) = (given(&a.left)?, given(&a.right)?);
    let n = left.as_ref().and_then(|l| l.first()).map_or(n, BinaryString::len);
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let mut rows = Vec::new();
    match a.mode {
        Mode::OneVsOne => {
            let w = left.map(|l| l[0].clone()).unwrap_or_else(|| random_strings(&mut rng, n, 1, &BTreeSet::new())[0].clone());
            let w2 = match right {
                Some(r) => r[0].clone(),
                None => random_strings(&mut rng, n, 1, &[w.clone()].into())[0].clone(),
            };
            let p = sep_one_vs_one_anylen(&w, &w2)?;
            let inst = StringInstance::new(vec![w.clone()], vec![w2.clone()])?;
            let g = inst.game();
            let r = p.pattern().len();
            let out = run_strategy(&g, &p, r, &RunOptions::default())?;
            let oracle = if a.oracle {
                let opts = OracleOptions { caps: OracleCaps { depth: r.max(1), ..Default::default() }, ..Default::default() };
                Some(min_rounds(&g, r, None, &opts)?.value)
            } else {
                None
            };
            let b = best_row(n, 1, 1, a.epsilon);
            rows.push(StringRow {
                strategy: "one-vs-one".into(),
                n,
                sizes: [1, 1],
                budget_formula: b.formula.into(),
                budget_value: b.main_term,
                rounds_used: r,
                pattern: out.pattern.to_string(),
                won: out.won,
                fallback: false,
                sentence_checked: sentence_holds(&out, &g),
                oracle,
                left: Some(format!("{w} vs {w2}")),
            });
        }
        Mode::OneVsAll => {
            let ws: Vec<BinaryString> = match (&left, a.exhaustive) {
                (Some(l), _) => l.clone(),
                (None, true) => {
                    if n > 12 {
                        bail!("exhaustive one-vs-all is capped at n <= 12");
                    }
                    BinaryString::all_of_length(n)
                }
                (None, false) => random_strings(&mut rng, n, a.left_size, &BTreeSet::new()),
            };
            for w in ws {
                rows.push(one_vs_all_row(&w, a, &mut rng)?);
            }
        }
        Mode::OneVsMany | Mode::ManyVsMany | Mode::ManyVsAll | Mode::AnyVsAny => {
            let lsize = if a.mode == Mode::OneVsMany { 1 } else { a.left_size };
            let left = match left {
                Some(l) => l,
                None => random_strings(&mut rng, n, lsize, &BTreeSet::new()),
            };
            let avoid: BTreeSet<BinaryString> = left.iter().cloned().collect();
            let plan: StringPlan = match a.mode {
                Mode::ManyVsAll => sep_many_vs_all(&left, n, a.t)?,
                _ => {
                    let right = match right {
                        Some(r) => r,
                        None => random_strings(&mut rng, n, a.right_size, &avoid),
                    };
                    match a.mode {
                        Mode::OneVsMany => sep_one_vs_many(&left[0], &right, a.t)?,
                        Mode::ManyVsMany => sep_many_vs_many(&left, &right, a.t)?,
                        _ => sep_any_vs_any(&left, &right, a.epsilon)?,
                    }
                }
            };
            rows.push(plan_row(&plan, a.epsilon)?);
        }
    }
    let ok = rows.iter().all(|r| r.won && r.sentence_checked != Some(false));
    let mut text = String::new();
    for r in &rows {
        write!(
            text,
            "{} n={} sizes={:?} rounds={} budget {}={:.2} {} {}",
            r.strategy,
            r.n,
            r.sizes,
            r.rounds_used,
            r.budget_formula,
            r.budget_value,
            r.pattern,
            if r.won { "won" } else { "LOST" }
        )?;
        if r.fallback {
            text.push_str(" (walk-code fallback)");
        }
        match r.sentence_checked {
            Some(true) => text.push_str(" sentence ok"),
            Some(false) => text.push_str(" SENTENCE FAILED"),
            None => {}
        }
        if let Some(v) = r.oracle {
            match v {
                OracleValue::Exactly(k) => write!(text, " oracle={k} bracket=[{k}, {}]", r.rounds_used)?,
                OracleValue::MoreThan(c) => write!(text, " oracle>{c}")?,
            }
        }
        if let Some(l) = &r.left {
            write!(text, " [{l}]")?;
        }
        text.push('\n');
    }
    writeln!(text, "{} instances, {}", rows.len(), if ok { "all won" } else { "FAILURES" })?;
    Ok(Report { text, json: json!({ "seed": a.seed, "instances": rows }), ok })
}

fn one_vs_all_row(w: &BinaryString, a: &StringArgs, rng: &mut ChaCha8Rng) -> Result<StringRow> {
    let n = w.len();
    let (player, right): (Arc<dyn StrategyPlayer>, Vec<BinaryString>) = match a.max_other_len {
        Some(m) => {
            let inst = anylen_instance(w, m).context("no other strings")?;
            (Arc::new(sep_one_vs_all_anylen(w)), inst.right)
        }
        None if n <= 12 => (Arc::new(sep_one_vs_all(w)), complement(&[w.clone()], n)),
        None => (Arc::new(sep_one_vs_all(w)), random_strings(rng, n, a.right_size, &[w.clone()].into())),
    };
    let r = player.pattern().len();
    let whole = right.len() <= 1024;
    let (won, sentence) = if whole {
        let g = StringInstance::new(vec![w.clone()], right.clone())?.game();
        let out = run_strategy(&g, player.as_ref(), r, &RunOptions::default())?;
        (out.won, sentence_holds(&out, &g))
    } else {
        (wins_each(&[w.clone()], &right, player.as_ref(), r)?, None)
    };
    let b = best_row(n, 1, right.len(), a.epsilon);
    Ok(StringRow {
        strategy: if a.max_other_len.is_some() { "one-vs-all-anylen" } else { "one-vs-all" }.into(),
        n,
        sizes: [1, right.len()],
        budget_formula: b.formula.into(),
        budget_value: b.main_term,
        rounds_used: r,
        pattern: player.pattern().to_string(),
        won,
        fallback: false,
        sentence_checked: sentence,
        oracle: None,
        left: Some(w.to_string()),
    })
}

fn plan_row(plan: &StringPlan, epsilon: f64) -> Result<StringRow> {
    let n = plan.instance.n().context("strings of one length")?;
    let sizes = [plan.instance.left.len(), plan.instance.right.len()];
    let g = plan.instance.game();
    let (won, sentence) = if g.left.len() * g.right.len() <= 4096 {
        let out = plan.run(&RunOptions::default())?;
        (out.won, sentence_holds(&out, &g))
    } else {
        (plan.check_parts()?.won, None)
    };
    let b = best_row(n, sizes[0], sizes[1], epsilon);
    Ok(StringRow {
        strategy: plan.strategy.into(),
        n,
        sizes,
        budget_formula: b.formula.into(),
        budget_value: b.main_term,
        rounds_used: plan.rounds(),
        pattern: plan.pattern().to_string(),
        won,
        fallback: plan.fallback(),
        sentence_checked: sentence,
        oracle: None,
        left: None,
    })
}

fn cmd_synthesize(l: u32, q: Side, kind: LinearKind) -> Result<Report> {
    if l == 0 {
        bail!("--l must be at least 1");
    }
    let (player, rounds, state): (Arc<dyn StrategyPlayer>, usize, GameState) = match kind {
        LinearKind::Cma => {
            let q = *quantifiers(q).first().expect("one side");
            let k = q_star_of(q, l);
            (Arc::new(cma_player(MslSpec::new(q, k, l))?), k as usize, msl_instance(l, k))
        }
        LinearKind::Alternating => {
            let k = q_star(l);
            (Arc::new(alternating_separator(l)?), k as usize, msl_instance(l, k))
        }
        LinearKind::Exact => {
            let e = exact_length_separator(l)?;
            let r = e.pattern().len();
            (e, r, exact_length_instance(l, r as u32))
        }
    };
    let out = run_strategy(&state, player.as_ref(), rounds, &quotient())?;
    if !out.won {
        bail!("the strategy lost; nothing to synthesize");
    }
    let f: Formula = synthesize(&out.transcript)?;
    let checked = separates(&f, &state.left, &state.right).is_ok();
    let replay = spoiler_from_formula(f.clone(), &state)?;
    let again = run_strategy(&state, &replay, rounds, &quotient())?.won;
    let text = format!(
        "{}\nquantifiers: {}  signature: {}  separates: {checked}  replay wins: {again}\n",
        render(&f),
        f.quantifier_count(),
        f.signature()
    );
    let json = json!({
        "l": l,
        "sentence": render(&f),
        "ast": f,
        "quantifiers": f.quantifier_count(),
        "signature": f.signature().to_string(),
        "separates": checked,
        "replay_wins": again,
    });
    Ok(Report { text, json, ok: checked && again })
}

fn cmd_oracle(a: &OracleArgs) -> Result<Report> {
    let mut caps = OracleCaps::default();
    caps.boards_per_side = a.cap_boards.unwrap_or(caps.boards_per_side);
    caps.universe = a.cap_universe.unwrap_or(caps.universe);
    caps.depth = a.cap_depth.unwrap_or(caps.depth);
    caps.nodes = a.cap_nodes.unwrap_or(caps.nodes);
    let opts = OracleOptions { caps, discard: !a.no_discard, dedup: !a.no_dedup, quotient: !a.no_quotient };
    let (state, label) = match (a.l, &a.left, &a.right) {
        (Some(l), None, None) => (msl_instance(l, a.cap as u32), format!("orders <= {l} vs longer")),
        (None, Some(lf), Some(rf)) => {
            let (l, r) = (read_strings(lf)?, read_strings(rf)?);
            let label = format!("{:?} vs {:?}", l.iter().map(|w| w.to_string()).collect::<Vec<_>>(), r.iter().map(|w| w.to_string()).collect::<Vec<_>>());
            let board = |w: &BinaryString| PebbledBoard::new(w.clone());
            (GameState::new(l.iter().map(board).collect(), r.iter().map(board).collect())?, label)
        }
        _ => bail!("give either --l or both --left and --right"),
    };
    let first = match a.first {
        None | Some(Side::Both) => None,
        Some(Side::E) => Some(Quantifier::Exists),
        Some(Side::A) => Some(Quantifier::Forall),
    };
    let report = min_rounds(&state, a.cap, first, &opts)?;
    let value = match report.value {
        OracleValue::Exactly(k) => k.to_string(),
        OracleValue::MoreThan(c) => format!("more than {c}"),
    };
    let mut text = format!("{label}: {value} (nodes expanded {})\n", report.nodes_expanded);
    if let Some(l) = a.l {
        let b = budget(l);
        writeln!(text, "r(l) = {}, q*(l) = {}", b.r_of_l, b.q_star)?;
    }
    let json = json!({
        "instance": label,
        "cap": a.cap,
        "value": report.value,
        "nodes_expanded": report.nodes_expanded,
        "options": opts,
    });
    Ok(Report { text, json, ok: true })
}

fn parse_size(token: &str, n: usize) -> Result<u128> {
    let t = token.trim();
    let pow = |base: u128, e: &str| -> Result<u128> {
        let e: u32 = e.parse().with_context(|| format!("bad exponent in {t:?}"))?;
        base.checked_pow(e).context("size overflows")
    };
    Ok(match t {
        "all" => (1u128 << n.min(127)) - 1,
        "n" => n as u128,
        _ if t.starts_with("n^") => pow(n as u128, &t[2..])?,
        _ if t.starts_with("2^") => pow(2, &t[2..])?,
        _ => t.parse().with_context(|| format!("bad size {t:?}"))?,
    })
}

fn cmd_bounds(n: usize, sizes: &str, epsilon: f64, measure: bool, constants: bool, seed: u64) -> Result<Report> {
    if !(epsilon > 0.0) {
        bail!("--epsilon must be positive");
    }
    let (f, g) = sizes.split_once(',').context("--sizes takes \"f,g\"")?;
    let (f, g) = (parse_size(f, n)?, parse_size(g, n)?);
    let rows = budget_table(n, f, g, epsilon);
    let mut text = format!("n={n} sizes=({f}, {g}) epsilon={epsilon}\n");
    let mut ok = true;
    let mut measured = Vec::new();
    for r in &rows {
        write!(text, "{} {:<36} {:<18} {:>8.2}", if r.best { '*' } else { ' ' }, r.sides, r.formula, r.main_term)?;
        if measure {
            let m = measure_row(r.row, n, epsilon, seed)?;
            ok &= m.won;
            write!(text, "  rounds {:>3} constant {:>6.2} {:?}", m.rounds, m.constant, m.check)?;
            measured.push(m);
        }
        text.push('\n');
    }
    let mut json = json!({ "n": n, "sizes": [f.to_string(), g.to_string()], "epsilon": epsilon, "rows": rows });
    if measure {
        json["measured"] = json!(measured);
    }
    if constants {
        let table = measure_constants(&[8, 16, 32, 64], epsilon, seed)?;
        writeln!(text, "constants at n = 8, 16, 32, 64:")?;
        for rc in &table {
            let cs: Vec<String> = rc.measurements.iter().map(|m| format!("{:.2}", m.constant)).collect();
            writeln!(text, "  row {} {:<18} {}  {}", rc.row, rc.formula, cs.join(" "), if rc.passes() { "ok" } else { "not monotone-bounded" })?;
            ok &= rc.passes();
        }
        json["constants"] = json!(table);
    }
    json["seed"] = json!(seed);
    Ok(Report { text, json, ok })
}

fn cmd_counting(from: u32, to: u32) -> Result<Report> {
    if from < 2 || from > to {
        bail!("need 2 <= --from <= --to");
    }
    let rows: Vec<Value> = counting_lower_bounds(from..=to)
        .into_iter()
        .map(|(n, k)| {
            let floor = n as f64 / (n as f64).log2();
            json!({ "n": n, "k_min": k, "n_over_log2_n": floor, "ok": k as f64 >= floor })
        })
        .collect();
    let ok = rows.iter().all(|r| r["ok"] == json!(true));
    let mut text = String::new();
    for r in &rows {
        writeln!(text, "n={:<5} k_min={:<4} n/log2 n={:.2}", r["n"], r["k_min"], r["n_over_log2_n"].as_f64().unwrap_or(0.0))?;
    }
    writeln!(text, "{}", if ok { "k_min >= n/log2 n throughout" } else { "VIOLATION" })?;
    Ok(Report { text, json: json!({ "rows": rows }), ok })
}
