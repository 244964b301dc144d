use msgame::formulas::{separates, synthesize};
use msgame::game::{run_strategy, RunOptions, StrategyPlayer};
use msgame::order_strategies::q_star;
use msgame::string_strategies::*;
use msgame::structures::BinaryString;
use proptest::prelude::*;

fn s(text: &str) -> BinaryString {
    BinaryString::parse(text).unwrap()
}

fn checked() -> RunOptions {
    RunOptions { check_branches: true, ..Default::default() }
}

fn play(left: &[BinaryString], right: &[BinaryString], p: &dyn StrategyPlayer) -> msgame::game::RunOutcome {
    let inst = StringInstance::new(left.to_vec(), right.to_vec()).unwrap();
    run_strategy(&inst.game(), p, p.pattern().len(), &checked()).unwrap()
}

#[test]
fn one_vs_one_examples() {
    let out = play(&[s("01")], &[s("10")], &sep_one_vs_one(&s("01"), &s("10")).unwrap());
    assert!(out.won);
    let p = sep_one_vs_one(&s("001000"), &s("000100")).unwrap();
    assert!(play(&[s("001000")], &[s("000100")], &p).won);
    assert!(p.pattern().len() >= 2);
    assert_eq!(sep_one_vs_one(&s("0"), &s("1")).unwrap().pattern().len(), 0);
    assert!(matches!(sep_one_vs_one(&s("01"), &s("01")), Err(StringError::Equal)));
}

#[test]
fn one_vs_one_all_pairs() {
    for n in 1..=6 {
        let all = BinaryString::all_of_length(n);
        for a in &all {
            for b in all.iter().filter(|b| *b != a) {
                let p = sep_one_vs_one(a, b).unwrap();
                let out = play(&[a.clone()], &[b.clone()], &p);
                assert!(out.won, "{a} {b}");
                assert_eq!(out.transcript.branch_collisions, 0);
                let i = (1..=n as u32).find(|&i| a.bit(i) != b.bit(i)).unwrap();
                if i > 1 {
                    assert!(p.pattern().len() as u32 <= 1 + q_star(i) + 3);
                }
            }
        }
    }
}

#[test]
fn one_vs_one_other_lengths() {
    for (a, b) in [("00", "000"), ("01100110", "011001101"), ("1", "10"), ("101", "1")] {
        let p = sep_one_vs_one_anylen(&s(a), &s(b)).unwrap();
        assert!(play(&[s(a)], &[s(b)], &p).won, "{a} {b}");
    }
}

#[test]
fn one_vs_all_exhaustive_up_to_8() {
    for n in 1..=8 {
        let d = thirds_depth(n);
        for w in BinaryString::all_of_length(n) {
            let p = sep_one_vs_all(&w);
            assert_eq!(p.pattern().to_string(), "EEA".repeat(d));
            if n == 1 {
                continue;
            }
            let out = play(&[w.clone()], &complement(&[w.clone()], n), &p);
            assert!(out.won, "{w}");
            assert_eq!(out.transcript.branch_collisions, 0, "{w}");
        }
    }
    assert_eq!(sep_one_vs_all(&s("010011101")).pattern().len(), 6);
    assert_eq!(sep_one_vs_all(&s("010")).pattern().len(), 3);
}

#[test]
fn one_vs_all_synthesis() {
    for w in BinaryString::all_of_length(5) {
        let right = complement(&[w.clone()], 5);
        let out = play(&[w.clone()], &right, &sep_one_vs_all(&w));
        let f = synthesize(&out.transcript).unwrap();
        let inst = StringInstance::new(vec![w.clone()], right).unwrap();
        separates(&f, &inst.game().left, &inst.game().right).unwrap();
    }
}

#[test]
fn one_vs_all_any_length() {
    let w = s("10");
    let p = sep_one_vs_all_anylen(&w);
    assert!(p.pattern().len() <= 3 * thirds_depth(2) + 4);
    let inst = anylen_instance(&w, 3).unwrap();
    assert!(play(&inst.left, &inst.right, &p).won);
    for w in BinaryString::all_of_length(4) {
        let inst = anylen_instance(&w, 6).unwrap();
        assert!(play(&inst.left, &inst.right, &sep_one_vs_all_anylen(&w)).won, "{w}");
    }
    assert!(anylen_instance(&s("0"), 0).is_none());
}

#[test]
fn code_examples() {
    let three = vec![s("0011"), s("0101"), s("0110")];
    let Code::Instructional(c) = preprocess_instructional(&three, 4).unwrap() else { panic!() };
    assert_eq!(c.bits, 2);
    let Code::Instructional(one) = preprocess_instructional(&[s("01")], 2).unwrap() else { panic!() };
    assert_eq!(one.bits, 0);
    let Code::Permutation(p) = preprocess_permutations(&[s("00"), s("11")], 2, 2).unwrap() else { panic!() };
    assert_eq!(p.assignment.values().cloned().collect::<Vec<_>>(), vec![vec![1, 2], vec![2, 1]]);
    let all: Vec<_> = BinaryString::all_of_length(4).into_iter().take(7).collect();
    assert!(matches!(preprocess_permutations(&all, 3, 4), Err(StringError::TooFewPermutations { .. })));
    assert!(matches!(preprocess_permutations(&all[..2], 3, 2), Err(StringError::TooManyPebbles { .. })));
}

#[test]
fn one_vs_many_examples() {
    let all = BinaryString::all_of_length(8);
    let plan = sep_one_vs_many(&all[0], &all[1..5], 2).unwrap();
    assert!(plan.fallback());
    assert!(plan.run(&checked()).unwrap().won);
    let all = BinaryString::all_of_length(12);
    let plan = sep_one_vs_many(&all[0], &all[1..7], 2).unwrap();
    assert!(!plan.fallback());
    assert!(matches!(&plan.codes[0].1, Code::Permutation(c) if c.m == 3));
    assert!(plan.check_parts().unwrap().won);
}

#[test]
fn many_vs_many_examples() {
    let left = vec![s("001011"), s("110100")];
    let right = vec![s("001111"), s("010110")];
    let plan = sep_many_vs_many(&left, &right, 2).unwrap();
    let out = plan.run(&checked()).unwrap();
    assert!(out.won);
    assert_eq!(out.transcript.branch_collisions, 0);
    let swapped = sep_many_vs_many(&right, &left, 2).unwrap();
    assert_eq!(swapped.rounds(), plan.rounds());
    assert!(swapped.run(&checked()).unwrap().won);
    let f = synthesize(&out.transcript).unwrap();
    separates(&f, &plan.instance.game().left, &plan.instance.game().right).unwrap();
}

#[test]
fn many_vs_all_examples() {
    let left = vec![s("001011"), s("110100")];
    let plan = sep_many_vs_all(&left, 6, 2).unwrap();
    assert_eq!(plan.instance.right.len(), 62);
    assert!(plan.run(&checked()).unwrap().won);
    let rest = complement(&[s("0110")], 4);
    let plan = sep_many_vs_all(&rest, 4, 2).unwrap();
    assert_eq!(plan.instance.right, vec![s("0110")]);
    assert!(plan.run(&checked()).unwrap().won);
}

#[test]
fn any_vs_any_examples() {
    let (l, r): (Vec<_>, Vec<_>) = BinaryString::all_of_length(4).into_iter().partition(|w| w.bit(1));
    let plan = sep_any_vs_any(&l, &r, 1.0).unwrap();
    assert!(plan.run(&checked()).unwrap().won);
    assert_eq!(any_vs_any_pebbles(16, 1.0), 5);
    assert!(matches!(sep_any_vs_any(&l, &r, 0.0), Err(StringError::BadEpsilon)));
}

#[test]
fn budget_rows() {
    let rows = budget_table(64, 1, 1, 1.0);
    assert_eq!(rows[0].main_term, 6.0);
    assert!(rows[0].best);
    let rows = budget_table(64, 1 << 63, 1 << 63, 1.0);
    assert!((rows[6].main_term - 2.0 * 64.0 / 6.0).abs() < 1e-9);
    assert!(rows[6].best && rows.iter().filter(|r| r.best).count() == 1);
    assert_eq!(bounded_base(3), 2);
    for r in budget_table(1, 1, 1, 1.0) {
        assert!(r.main_term.is_finite());
    }
}

fn string_set(n: usize, max: usize) -> impl Strategy<Value = Vec<BinaryString>> {
    prop::collection::btree_set(prop::collection::vec(any::<bool>(), n), 1..max)
        .prop_map(|set| set.into_iter().map(|b| BinaryString::new(b).unwrap()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codes_give_distinct_types(side in string_set(7, 40), m in 1usize..6) {
        let code = preprocess(&side, m, 7).unwrap();
        prop_assert!(code_separates(&code, &side));
        if m > 0 && (1..=m).product::<usize>() >= side.len() {
            prop_assert!(!code.is_fallback());
        }
    }

    #[test]
    fn many_vs_many_random(left in string_set(5, 4), right in string_set(5, 4)) {
        let right: Vec<_> = right.into_iter().filter(|w| !left.contains(w)).collect();
        prop_assume!(!right.is_empty());
        let plan = sep_many_vs_many(&left, &right, 2).unwrap();
        prop_assert!(plan.check_parts().unwrap().won);
        prop_assert!(plan.run(&RunOptions::default()).unwrap().won);
    }

    #[test]
    fn one_vs_all_random_12(bits in prop::collection::vec(any::<bool>(), 12), sample in string_set(12, 30)) {
        let w = BinaryString::new(bits).unwrap();
        let right: Vec<_> = sample.into_iter().filter(|x| *x != w).collect();
        prop_assume!(!right.is_empty());
        let p = sep_one_vs_all(&w);
        prop_assert!(wins_each(&[w.clone()], &right, &p, 9).unwrap());
    }
}
