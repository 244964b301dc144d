//! Exhaustive search for the least number of rounds Spoiler needs, plus
//! the counting lower bound for all-vs-all string games.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::game::{rank_cap, GameError, GameState, Quantifier, Side};
use crate::order_strategies::{msl_instance, MslSpec};
use crate::structures::{atomic_type, AtomicType, PebbledBoard, Structure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{side:?} side has {count} boards, cap is {cap}")]
    TooManyBoards { side: Side, count: usize, cap: usize },
    #[error("universe of size {size} exceeds cap {cap}")]
    UniverseTooLarge { size: usize, cap: usize },
    #[error("round cap {cap} exceeds depth cap {limit}")]
    TooDeep { cap: usize, limit: usize },
    #[error("node budget of {0} exhausted")]
    NodeBudget(u64),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleCaps {
    pub boards_per_side: usize,
    pub universe: usize,
    pub depth: usize,
    pub nodes: u64,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { boards_per_side: 24, universe: 65, depth: 6, nodes: 5_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleOptions {
    pub caps: OracleCaps,
    /// Drop boards with no partner of the same type after every move.
    pub discard: bool,
    /// Collapse identical boards.
    pub dedup: bool,
    /// Cap order gaps at `2^remaining`.
    pub quotient: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { caps: OracleCaps::default(), discard: true, dedup: true, quotient: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleValue {
    Exactly(usize),
    MoreThan(usize),
}

impl OracleValue {
    pub fn at_most(self, r: usize) -> bool {
        matches!(self, OracleValue::Exactly(v) if v <= r)
    }

    pub fn at_least(self, r: usize) -> bool {
        match self {
            OracleValue::Exactly(v) => v >= r,
            OracleValue::MoreThan(c) => c + 1 >= r,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub value: OracleValue,
    pub nodes_expanded: u64,
}

type Key = (Vec<PebbledBoard>, Vec<PebbledBoard>, usize, Option<Side>);

struct Search<'a> {
    opts: &'a OracleOptions,
    memo: HashMap<Key, bool>,
    nodes: u64,
}

impl Search<'_> {
    fn cap(&self, k: usize) -> Option<u32> {
        if self.opts.quotient {
            rank_cap(k as u32)
        } else {
            None
        }
    }

    fn normalize(&self, boards: Vec<PebbledBoard>, k: usize) -> Vec<PebbledBoard> {
        let mut out: Vec<PebbledBoard> = match self.cap(k) {
            Some(c) => boards.into_iter().map(|b| b.cap_gaps(c)).collect(),
            None => boards,
        };
        if self.opts.dedup {
            out.sort_unstable();
            out.dedup();
        }
        out
    }

    fn wins(&mut self, left: Vec<PebbledBoard>, right: Vec<PebbledBoard>, k: usize, forced: Option<Side>) -> Result<bool, OracleError> {
        self.nodes += 1;
        if self.nodes > self.opts.caps.nodes {
            return Err(OracleError::NodeBudget(self.opts.caps.nodes));
        }
        let mut left = self.normalize(left, k);
        let mut right = self.normalize(right, k);
        let lt: HashSet<AtomicType> = left.iter().map(atomic_type).collect();
        let rt: HashSet<AtomicType> = right.iter().map(atomic_type).collect();
        if lt.is_disjoint(&rt) {
            return Ok(true);
        }
        if k == 0 {
            return Ok(false);
        }
        if self.opts.discard {
            left.retain(|b| rt.contains(&atomic_type(b)));
            right.retain(|b| lt.contains(&atomic_type(b)));
        }
        // A board equal to one across the aisle (after capping) can be
        // copied move for move by Duplicator.
        if self.opts.quotient || self.opts.dedup {
            let set: HashSet<&PebbledBoard> = left.iter().collect();
            if right.iter().any(|b| set.contains(b)) {
                return Ok(false);
            }
        }
        let key = (left, right, k, forced);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let (left, right, _, _) = &key;
        let sides: &[Side] = match forced {
            Some(Side::Left) => &[Side::Left],
            Some(Side::Right) => &[Side::Right],
            None => &[Side::Left, Side::Right],
        };
        let mut won = false;
        for &side in sides {
            let (movers, others) = if side == Side::Left { (left, right) } else { (right, left) };
            if self.side_wins(movers, others, side, k)? {
                won = true;
                break;
            }
        }
        self.memo.insert(key, won);
        Ok(won)
    }

    fn side_wins(&mut self, movers: &[PebbledBoard], others: &[PebbledBoard], side: Side, k: usize) -> Result<bool, OracleError> {
        let cap = self.cap(k - 1);
        let mut expanded = Vec::new();
        for b in others {
            for p in b.representative_positions(cap) {
                expanded.push(b.place(p).expect("in range"));
            }
        }
        let expanded = self.normalize(expanded, k - 1);
        let blocked: HashSet<&PebbledBoard> = expanded.iter().collect();
        let mut choices: Vec<Vec<PebbledBoard>> = Vec::with_capacity(movers.len());
        for b in movers {
            let mut opts: Vec<PebbledBoard> = b
                .representative_positions(cap)
                .into_iter()
                .map(|p| {
                    let nb = b.place(p).expect("in range");
                    match cap {
                        Some(c) => nb.cap_gaps(c),
                        None => nb,
                    }
                })
                .filter(|nb| !blocked.contains(nb))
                .collect();
            opts.sort_unstable();
            opts.dedup();
            if opts.is_empty() {
                return Ok(false);
            }
            choices.push(opts);
        }
        choices.sort_by_key(Vec::len);
        let mut picked = Vec::with_capacity(choices.len());
        self.pick(&choices, 0, &mut picked, &expanded, side, k)
    }

    /// Chooses one option per mover. A set that already loses can only get
    /// worse as boards are added, so every prefix is checked as it grows,
    /// and an option already in the set is taken without branching.
    fn pick(
        &mut self,
        choices: &[Vec<PebbledBoard>],
        i: usize,
        picked: &mut Vec<PebbledBoard>,
        expanded: &[PebbledBoard],
        side: Side,
        k: usize,
    ) -> Result<bool, OracleError> {
        if i == choices.len() {
            return Ok(true);
        }
        if choices[i].iter().any(|c| picked.binary_search(c).is_ok()) {
            return self.pick(choices, i + 1, picked, expanded, side, k);
        }
        for c in &choices[i] {
            let at = picked.binary_search(c).unwrap_err();
            picked.insert(at, c.clone());
            let (l, r) = if side == Side::Left {
                (picked.clone(), expanded.to_vec())
            } else {
                (expanded.to_vec(), picked.clone())
            };
            let ok = self.wins(l, r, k - 1, None)? && self.pick(choices, i + 1, picked, expanded, side, k)?;
            picked.remove(at);
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn check_caps(state: &GameState, caps: &OracleCaps, opts: &OracleOptions, rounds: usize) -> Result<(), OracleError> {
    for side in [Side::Left, Side::Right] {
        let mut boards = state.side(side).to_vec();
        if opts.quotient {
            if let Some(c) = rank_cap(rounds as u32) {
                boards = boards.into_iter().map(|b| b.cap_gaps(c)).collect();
            }
        }
        if opts.dedup {
            boards.sort_unstable();
            boards.dedup();
        }
        if boards.len() > caps.boards_per_side {
            return Err(OracleError::TooManyBoards { side, count: boards.len(), cap: caps.boards_per_side });
        }
        if let Some(size) = boards.iter().map(|b| b.base().universe_size()).max() {
            if size > caps.universe {
                return Err(OracleError::UniverseTooLarge { size, cap: caps.universe });
            }
        }
    }
    Ok(())
}

/// Least `r <= cap` for which Spoiler wins the `r`-round game, trying both
/// sides every round (only `forced_first` in round one).
pub fn min_rounds(
    state: &GameState,
    cap: usize,
    forced_first: Option<Quantifier>,
    opts: &OracleOptions,
) -> Result<OracleReport, OracleError> {
    if cap > opts.caps.depth {
        return Err(OracleError::TooDeep { cap, limit: opts.caps.depth });
    }
    let mut search = Search { opts, memo: HashMap::new(), nodes: 0 };
    for r in 0..=cap {
        check_caps(state, &opts.caps, opts, r)?;
        let forced = if r == 0 { None } else { forced_first.map(Quantifier::side) };
        if search.wins(state.left.clone(), state.right.clone(), r, forced)? {
            return Ok(OracleReport { value: OracleValue::Exactly(r), nodes_expanded: search.nodes });
        }
    }
    Ok(OracleReport { value: OracleValue::MoreThan(cap), nodes_expanded: search.nodes })
}

/// Whether Spoiler wins the given MSL game within its round budget with the
/// forced first move, against orders up to the surrogate bound above `l`.
pub fn is_winnable_msl(spec: MslSpec, opts: &OracleOptions) -> Result<bool, OracleError> {
    let state = msl_instance(spec.length, spec.rounds);
    let r = spec.rounds as usize;
    let report = min_rounds(&state, r, Some(spec.q), opts)?;
    Ok(report.value.at_most(r))
}

/// Plain EF game on one pair of boards, all positions tried.
pub fn ef_equivalent(a: &PebbledBoard, b: &PebbledBoard, k: usize) -> bool {
    if atomic_type(a) != atomic_type(b) {
        return false;
    }
    if k == 0 {
        return true;
    }
    let covers = |x: &PebbledBoard, y: &PebbledBoard, flip: bool| {
        (x.min_elem()..=x.max_elem()).all(|p| {
            let xp = x.place(p).expect("in range");
            (y.min_elem()..=y.max_elem()).any(|q| {
                let yq = y.place(q).expect("in range");
                if flip {
                    ef_equivalent(&yq, &xp, k - 1)
                } else {
                    ef_equivalent(&xp, &yq, k - 1)
                }
            })
        })
    };
    covers(a, b, false) && covers(b, a, true)
}

/// Least `k >= 1` with `k + k^k >= 2^n - 1`, the number of sentences with
/// `k` quantifiers needed to name every left set.
pub fn counting_lower_bound(n: u32) -> u32 {
    let target = (BigUint::one() << n) - BigUint::one();
    let mut k = 1u32;
    while BigUint::from(k) + BigUint::from(k).pow(k) < target {
        k += 1;
    }
    k
}

/// `counting_lower_bound` for every `n` in the range, reusing the previous
/// answer as the starting point.
pub fn counting_lower_bounds(ns: std::ops::RangeInclusive<u32>) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut k = 1u32;
    for n in ns {
        let target = (BigUint::one() << n) - BigUint::one();
        while BigUint::from(k) + BigUint::from(k).pow(k) < target {
            k += 1;
        }
        out.push((n, k));
    }
    out
}

/// Whether the board is a linear order.
pub fn is_order(b: &PebbledBoard) -> bool {
    matches!(b.base(), Structure::Order(_))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_small() {
        // 1+1 < 3, 2+4 >= 3
        assert_eq!(counting_lower_bound(2), 2);
        // 2+4 < 15, 3+27 >= 15
        assert_eq!(counting_lower_bound(4), 3);
    }
}
