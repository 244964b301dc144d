use msgame::game::{run_strategy, Pattern, Quantifier, Reduction, RunOptions, StrategyPlayer};
use msgame::order_strategies::*;
use proptest::prelude::*;

const E: Quantifier = Quantifier::Exists;
const A: Quantifier = Quantifier::Forall;

fn quotient() -> RunOptions {
    RunOptions { reduction: Reduction::RankQuotient, check_branches: true, ..Default::default() }
}

#[test]
fn hand_computed_values() {
    // q*_A(1)=1, q*_E(1)=2, q*_A(2)=2, then the halving recurrences by hand.
    let expected = [(1, 1, 2), (2, 2, 2), (3, 3, 3), (4, 3, 3), (5, 3, 4), (6, 4, 4), (10, 5, 4), (19, 5, 6)];
    for (l, fa, ex) in expected {
        assert_eq!((q_star_forall(l), q_star_exists(l)), (fa, ex), "l={l}");
    }
    assert_eq!(q_rank(1), 1);
    assert_eq!(q_rank(5), 3);
    assert_eq!(q_rank(86), 7);
    for k in 1..=10 {
        assert_eq!(q_star_forall(1 << k), k + 1);
    }
}

#[test]
fn table_matches_published_rows_except_75() {
    let rows = qtable(127);
    assert_eq!(rows.len(), 127);
    let diffs = golden_diffs(&rows);
    let lengths: Vec<u32> = diffs.iter().map(|d| d.0.length).collect();
    assert_eq!(lengths, vec![75]);
    for row in &rows {
        assert_eq!(*row, budget(row.length));
    }
    let first = rows[0];
    assert_eq!((first.r_of_l, first.q_star_forall, first.q_star_exists, first.q_star), (1, 1, 2, 1));
    let tenth = rows[9];
    assert_eq!((tenth.r_of_l, tenth.q_star_forall, tenth.q_star_exists, tenth.q_star), (4, 5, 4, 4));
}

#[test]
fn sandwich_up_to_4096() {
    for row in qtable(4096) {
        assert!(row.r_of_l <= row.q_star && row.q_star <= row.r_of_l + 1, "{row:?}");
        assert!(row.q_star_forall <= row.r_of_l + 1 && row.q_star_exists <= row.r_of_l + 1, "{row:?}");
    }
}

#[test]
fn quarter_recurrences() {
    for l in 5..=4096u32 {
        assert_eq!(q_star_exists(l), 2 + q_star_exists((l + 1) / 4), "l={l}");
    }
    for l in 3..=4096u32 {
        assert_eq!(q_star_forall(l), 2 + q_star_forall((l + 2) / 4), "l={l}");
    }
}

#[test]
fn plans_exist_up_to_4096() {
    for l in 1..=4096 {
        for q in [E, A] {
            let k = q_star_of(q, l);
            let p = cma_player(MslSpec::new(q, k, l)).unwrap();
            assert_eq!(p.pattern().len(), k as usize);
            assert_eq!(p.pattern().0[0], q);
        }
        let s = alternating_separator(l).unwrap();
        let pat = s.pattern();
        assert!(pat.strictly_alternates());
        assert_eq!(pat.len(), q_star(l) as usize);
        assert_eq!(*pat.0.last().unwrap(), A);
    }
}

#[test]
fn refuses_short_budgets() {
    assert!(cma_player(MslSpec::new(E, 3, 5)).is_err());
    assert!(cma_player(MslSpec::new(A, 2, 3)).is_err());
    assert!(cma_player(MslSpec::new(A, 0, 1)).is_err());
}

#[test]
fn split_law_table() {
    assert_eq!(split(MslSpec::new(E, 3, 6)).unwrap(), (MslSpec::new(A, 2, 3), MslSpec::new(A, 2, 3)));
    assert_eq!(split(MslSpec::new(A, 4, 7)).unwrap(), (MslSpec::new(E, 3, 3), MslSpec::new(E, 3, 3)));
    assert_eq!(split(MslSpec::new(A, 4, 6)).unwrap(), (MslSpec::new(E, 3, 3), MslSpec::new(E, 3, 2)));
    assert!(split(MslSpec::new(A, 1, 1)).is_err());
    assert!(split(MslSpec::new(E, 2, 1)).is_err());
}

#[test]
fn figure_two_pattern() {
    assert_eq!(cma_pattern(E, 5), Pattern::parse("EAEA").unwrap());
    let p = cma_player(MslSpec::new(E, 4, 5)).unwrap();
    let out = run_strategy(&msl_instance(5, 4), &p, 4, &RunOptions::default()).unwrap();
    assert!(out.won);
    assert_eq!(out.pattern.to_string(), "EAEA");
}

#[test]
fn cma_wins_without_reduction_small() {
    for l in 1..=10 {
        for q in [E, A] {
            let k = q_star_of(q, l);
            let p = cma_player(MslSpec::new(q, k, l)).unwrap();
            let opts = RunOptions { check_branches: true, ..Default::default() };
            let out = run_strategy(&msl_instance(l, k), &p, k as usize, &opts).unwrap();
            assert!(out.won, "l={l} q={q:?}");
            assert_eq!(out.transcript.branch_collisions, 0);
        }
    }
}

#[test]
fn cma_wins_with_spare_rounds() {
    for l in 1..=12 {
        for q in [E, A] {
            let k = q_star_of(q, l) + 2;
            let p = cma_player(MslSpec::new(q, k, l)).unwrap();
            let out = run_strategy(&msl_instance(l, k), &p, k as usize, &quotient()).unwrap();
            assert!(out.won, "l={l} q={q:?}");
        }
    }
}

#[test]
fn cma_wins_up_to_64() {
    for l in 1..=64 {
        for q in [E, A] {
            let k = q_star_of(q, l);
            let p = cma_player(MslSpec::new(q, k, l)).unwrap();
            let out = run_strategy(&msl_instance(l, k), &p, k as usize, &quotient()).unwrap();
            assert!(out.won, "l={l} q={q:?}");
            assert_eq!(out.transcript.branch_collisions, 0, "l={l} q={q:?}");
        }
    }
}

#[test]
fn alternating_ten() {
    let s = alternating_separator(10).unwrap();
    assert_eq!(s.pattern().to_string(), "EAEA");
    let out = run_strategy(&msl_instance(10, 4), &s, 4, &RunOptions::default()).unwrap();
    assert!(out.won);
}

#[test]
fn exact_length_small_cases() {
    for (l, limit) in [(4u32, 5usize), (5, 5), (1, 3)] {
        let e = exact_length_separator(l).unwrap();
        let r = e.pattern().len();
        assert!(r <= limit, "l={l} r={r}");
        assert!(e.pattern().strictly_alternates());
        assert_eq!(e.pattern().0[0], A);
        assert_eq!(*e.pattern().0.last().unwrap(), A);
        let out = run_strategy(&exact_length_instance(l, r as u32), e.as_ref(), r, &RunOptions::default()).unwrap();
        assert!(out.won, "l={l}");
    }
}

#[test]
fn exact_length_up_to_32() {
    for l in 1..=32 {
        let e = exact_length_separator(l).unwrap();
        let r = e.pattern().len();
        assert!(r <= q_star(l) as usize + 2);
        let out = run_strategy(&exact_length_instance(l, r as u32), e.as_ref(), r, &quotient()).unwrap();
        assert!(out.won, "l={l}");
        assert_eq!(out.transcript.branch_collisions, 0, "l={l}");
    }
}

fn wins_in(player: &dyn StrategyPlayer, l: u32, k: u32) -> bool {
    run_strategy(&msl_instance(l, k), player, k as usize, &RunOptions::default()).unwrap().won
}

#[test]
fn truncated_play_does_not_win() {
    // One round short of the plan leaves a matching pair.
    for l in 2..=8 {
        let p = cma_player(MslSpec::new(E, q_star_exists(l), l)).unwrap();
        assert!(!wins_in(&p, l, q_star_exists(l) - 1), "l={l}");
    }
}

proptest! {
    #[test]
    fn split_children_fit(l in 3u32..1_000_000, exists in any::<bool>()) {
        let q = if exists { E } else { A };
        let k = q_star_of(q, l);
        let (big, small) = split(MslSpec::new(q, k, l)).unwrap();
        prop_assert!(big.length >= small.length);
        prop_assert_eq!(big.length + small.length + u32::from(q == A), l);
        prop_assert!(q_star_of(big.q, big.length) < k);
        prop_assert!(q_star_of(small.q, small.length) < k);
    }

    #[test]
    fn recurrence_monotone(l in 1u32..1_000_000) {
        prop_assert!(q_star_forall(l) <= q_star_forall(l + 1));
        prop_assert!(q_star_exists(l) <= q_star_exists(l + 1));
        let q = q_star(l);
        prop_assert!(q_rank(l) <= q && q <= q_rank(l) + 1);
    }

    #[test]
    fn alternating_plans_exist(l in 1u32..200_000) {
        prop_assert!(alternating_separator(l).is_ok());
        prop_assert!(exact_length_separator(l).is_ok());
    }
}
