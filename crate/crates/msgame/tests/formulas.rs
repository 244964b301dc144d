use msgame::formulas::*;
use msgame::game::{run_strategy, GameState, Quantifier, Reduction, RunOptions};
use msgame::order_strategies::*;
use msgame::structures::{PebbledBoard, Pos};
use proptest::prelude::*;

fn orders(range: std::ops::RangeInclusive<u32>) -> Vec<PebbledBoard> {
    range.map(|m| PebbledBoard::order(m).unwrap()).collect()
}

#[test]
fn sigma_five() {
    let spec = MslSpec::new(Quantifier::Exists, 4, 5);
    let p = cma_player(spec).unwrap();
    let out = run_strategy(&msl_instance(5, 4), &p, 4, &RunOptions::default()).unwrap();
    let f = synthesize(&out.transcript).unwrap();
    assert_eq!(f.quantifier_count(), 4);
    assert_eq!(f.signature().to_string(), "EAEA");
    for b in orders(1..=5) {
        assert!(model_check(&f, &b).unwrap(), "{b}");
    }
    for b in orders(6..=32) {
        assert!(!model_check(&f, &b).unwrap(), "{b}");
    }
}

#[test]
fn base_case_one() {
    let p = cma_player(MslSpec::new(Quantifier::Forall, 1, 1)).unwrap();
    let inst = msl_instance(1, 1);
    let out = run_strategy(&inst, &p, 1, &RunOptions::default()).unwrap();
    let f = synthesize(&out.transcript).unwrap();
    assert_eq!(f.signature().to_string(), "A");
    assert!(model_check(&f, &PebbledBoard::order(1).unwrap()).unwrap());
    for b in orders(2..=40) {
        assert!(!model_check(&f, &b).unwrap());
    }
}

#[test]
fn zero_round_transcript() {
    let inst = GameState::new(
        vec![PebbledBoard::string("01").unwrap()],
        vec![PebbledBoard::string("10").unwrap(), PebbledBoard::string("11").unwrap()],
    )
    .unwrap();
    let p = spoiler_from_formula(parse("!S(min)").unwrap(), &inst).unwrap();
    let out = run_strategy(&inst, &p, 0, &RunOptions::default()).unwrap();
    assert!(out.won);
    let f = synthesize(&out.transcript).unwrap();
    assert_eq!(f.quantifier_count(), 0);
    separates(&f, &inst.left, &inst.right).unwrap();
}

#[test]
fn round_trip_through_formula_player() {
    let opts = RunOptions { reduction: Reduction::RankQuotient, ..Default::default() };
    for l in 1..=12 {
        for q in [Quantifier::Exists, Quantifier::Forall] {
            let k = q_star_of(q, l);
            let inst = msl_instance(l, k);
            let p = cma_player(MslSpec::new(q, k, l)).unwrap();
            let out = run_strategy(&inst, &p, k as usize, &opts).unwrap();
            let f = synthesize(&out.transcript).unwrap();
            assert_eq!(f.signature(), out.pattern);
            let replay = spoiler_from_formula(f.clone(), &inst).unwrap();
            let again = run_strategy(&inst, &replay, k as usize, &opts).unwrap();
            assert!(again.won, "l={l} q={q:?}");
            let dummy = spoiler_from_formula(f.with_leading_dummy(Quantifier::Forall), &inst).unwrap();
            let padded = run_strategy(&inst, &dummy, k as usize + 1, &opts).unwrap();
            assert!(padded.won);
        }
    }
}

#[test]
fn exact_length_sentences() {
    let opts = RunOptions { reduction: Reduction::RankQuotient, ..Default::default() };
    for l in 1..=8 {
        let e = exact_length_separator(l).unwrap();
        let r = e.pattern().len();
        let inst = exact_length_instance(l, r as u32);
        let out = run_strategy(&inst, e.as_ref(), r, &opts).unwrap();
        let f = synthesize(&out.transcript).unwrap();
        for b in orders(1..=3 * l + 4) {
            assert_eq!(model_check(&f, &b).unwrap(), b.max_elem() == l, "l={l} {b}");
        }
    }
}

#[test]
fn rejects_non_separating() {
    let inst = msl_instance(3, 3);
    let f = parse("A x1 . min < x1 -> x1 = max").unwrap();
    assert!(matches!(spoiler_from_formula(f, &inst), Err(FormulaError::FalseOnLeft(_))));
    let lost = run_strategy(&inst, &cma_player(MslSpec::new(Quantifier::Forall, 3, 3)).unwrap(), 2, &RunOptions::default())
        .unwrap();
    assert!(!lost.won);
    assert_eq!(synthesize(&lost.transcript), Err(FormulaError::NotWon));
}

#[test]
fn json_round_trip() {
    let f = parse("E x1 . A x2 . (x1 < x2 | x1 = max) & !S(x2)").unwrap();
    let text = serde_json::to_string(&f).unwrap();
    assert!(text.contains("\"lt\""));
    let back: Formula = serde_json::from_str(&text).unwrap();
    assert_eq!(back, f);
}

/// Plain evaluation over every element, no gap capping.
fn naive(f: &Formula, b: &PebbledBoard, env: &mut Vec<Pos>) -> bool {
    let i = env.len();
    if i == f.quantifier_count() {
        return eval(f.matrix(), f, b, env);
    }
    let exists = f.prefix()[i].0 == Quantifier::Exists;
    for p in b.min_elem()..=b.max_elem() {
        env.push(p);
        let v = naive(f, b, env);
        env.pop();
        if v == exists {
            return exists;
        }
    }
    !exists
}

fn eval(m: &Matrix, f: &Formula, b: &PebbledBoard, env: &[Pos]) -> bool {
    let term = |t: Term| match t {
        Term::Min => b.min_elem(),
        Term::Max => b.max_elem(),
        Term::Var(v) => env[f.prefix().iter().position(|&(_, u)| u == v).unwrap()],
    };
    match m {
        Matrix::True => true,
        Matrix::False => false,
        Matrix::Atom(Atom::Lt(x, y)) => term(*x) < term(*y),
        Matrix::Atom(Atom::Eq(x, y)) => term(*x) == term(*y),
        Matrix::Atom(Atom::S(x)) => b.base().s_bit(term(*x)).unwrap(),
        Matrix::Not(inner) => !eval(inner, f, b, env),
        Matrix::And(ms) => ms.iter().all(|c| eval(c, f, b, env)),
        Matrix::Or(ms) => ms.iter().any(|c| eval(c, f, b, env)),
    }
}

fn term_strategy(vars: u32) -> impl Strategy<Value = Term> {
    prop_oneof![Just(Term::Min), Just(Term::Max), (1..=vars).prop_map(Term::Var)]
}

fn matrix_strategy(vars: u32, strings: bool) -> impl Strategy<Value = Matrix> {
    let atom = prop_oneof![
        (term_strategy(vars), term_strategy(vars)).prop_map(|(a, b)| Matrix::Atom(Atom::Lt(a, b))),
        (term_strategy(vars), term_strategy(vars)).prop_map(|(a, b)| Matrix::Atom(Atom::Eq(a, b))),
        term_strategy(vars).prop_map(move |a| if strings { Matrix::Atom(Atom::S(a)) } else { Matrix::True }),
    ];
    atom.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Matrix::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Matrix::And),
            prop::collection::vec(inner, 2..4).prop_map(Matrix::Or),
        ]
    })
}

fn formula_strategy(strings: bool) -> impl Strategy<Value = Formula> {
    (prop::collection::vec(any::<bool>(), 1..4)).prop_flat_map(move |qs| {
        let vars = qs.len() as u32;
        matrix_strategy(vars, strings).prop_map(move |m| {
            let prefix = qs
                .iter()
                .enumerate()
                .map(|(i, &e)| (if e { Quantifier::Exists } else { Quantifier::Forall }, i as u32 + 1))
                .collect();
            Formula::new(prefix, m).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn render_parse_identity(f in formula_strategy(true)) {
        prop_assert_eq!(parse(&render(&f)).unwrap(), f);
    }

    #[test]
    fn capped_check_agrees_on_orders(f in formula_strategy(false), len in 1u32..40) {
        let b = PebbledBoard::order(len).unwrap();
        prop_assert_eq!(model_check(&f, &b).unwrap(), naive(&f, &b, &mut Vec::new()));
    }

    #[test]
    fn check_agrees_on_strings(f in formula_strategy(true), bits in prop::collection::vec(any::<bool>(), 1..9)) {
        let text: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let b = PebbledBoard::string(&text).unwrap();
        prop_assert_eq!(model_check(&f, &b).unwrap(), naive(&f, &b, &mut Vec::new()));
    }
}
