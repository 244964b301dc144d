//! Spoiler strategies on binary strings: one-vs-one through prefix
//! lengths, the thirds recursion against all other strings, preprocessing
//! codes that split a game into parallel sub-games, and budget formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::game::{
    run_strategy, schedule_parallel, BranchId, GameError, GameState, Pattern, Quantifier, Router, RunOptions,
    RunOutcome, Sequence, SharedPlayer, Side, StrategyPlayer, SubGame,
};
use crate::order_strategies::{exact_length_separator, OrderError};
use crate::structures::{atomic_type, BinaryString, PebbledBoard, Pos, Segment, Structure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StringError {
    #[error("both sides must be nonempty")]
    EmptySide,
    #[error("string {0} appears on both sides")]
    NotDisjoint(BinaryString),
    #[error("strings must all have length {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("the two strings are equal")]
    Equal,
    #[error("{bits}-bit codes do not fit strings of length {n}")]
    CodeOverflow { bits: usize, n: usize },
    #[error("{m}! orderings cannot name {size} strings")]
    TooFewPermutations { m: usize, size: usize },
    #[error("{m} preprocessing pebbles exceed string length {n}")]
    TooManyPebbles { m: usize, n: usize },
    #[error("t must be at least 2")]
    BadBase,
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Game(#[from] GameError),
}

fn string_of(b: &PebbledBoard) -> &BinaryString {
    match b.base() {
        Structure::Str(w) => w,
        Structure::Order(_) => panic!("string strategy handed a linear order"),
    }
}

/// Two disjoint nonempty sets of strings.
#[derive(Clone, Debug, Serialize)]
pub struct StringInstance {
    pub left: Vec<BinaryString>,
    pub right: Vec<BinaryString>,
}

impl StringInstance {
    pub fn new(left: Vec<BinaryString>, right: Vec<BinaryString>) -> Result<Self, StringError> {
        let left: Vec<_> = left.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let right: Vec<_> = right.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if left.is_empty() || right.is_empty() {
            return Err(StringError::EmptySide);
        }
        if let Some(w) = left.iter().find(|w| right.binary_search(w).is_ok()) {
            return Err(StringError::NotDisjoint(w.clone()));
        }
        Ok(StringInstance { left, right })
    }

    /// Common length of every string, if there is one.
    pub fn n(&self) -> Option<usize> {
        let n = self.left[0].len();
        self.left.iter().chain(&self.right).all(|w| w.len() == n).then_some(n)
    }

    fn same_length(&self) -> Result<usize, StringError> {
        let n = self.left[0].len();
        match self.left.iter().chain(&self.right).find(|w| w.len() != n) {
            Some(w) => Err(StringError::LengthMismatch { expected: n, found: w.len() }),
            None => Ok(n),
        }
    }

    pub fn game(&self) -> GameState {
        let boards = |ws: &[BinaryString]| ws.iter().map(|w| PebbledBoard::new(w.clone())).collect();
        GameState::new(boards(&self.left), boards(&self.right)).expect("unpebbled boards")
    }
}

/// Every `n`-bit string not in `left`.
pub fn complement(left: &[BinaryString], n: usize) -> Vec<BinaryString> {
    let skip: BTreeSet<&BinaryString> = left.iter().collect();
    BinaryString::all_of_length(n).into_iter().filter(|w| !skip.contains(w)).collect()
}

/// Smallest `m` with `t^m >= x`.
pub fn ceil_log(t: u64, x: u64) -> usize {
    let mut m = 0;
    let mut p: u128 = 1;
    while p < x as u128 {
        p *= t as u128;
        m += 1;
    }
    m
}

fn factorial_at_least(m: usize, size: usize) -> bool {
    let mut f: u128 = 1;
    for i in 2..=m as u128 {
        f = f.saturating_mul(i);
        if f >= size as u128 {
            return true;
        }
    }
    f >= size as u128
}

/// Walk codes: pebble 1 on position 1, then one pebble per code bit that
/// stays (0) or steps right (1).
#[derive(Clone, Debug, Serialize)]
pub struct InstructionalCode {
    pub bits: usize,
    pub assignment: BTreeMap<BinaryString, Vec<bool>>,
}

/// Each string names a distinct ordering of `m` pebbles on positions `1..=m`.
#[derive(Clone, Debug, Serialize)]
pub struct PermutationCode {
    pub m: usize,
    pub assignment: BTreeMap<BinaryString, Vec<u32>>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Code {
    Instructional(InstructionalCode),
    Permutation(PermutationCode),
}

impl Code {
    pub fn rounds(&self) -> usize {
        match self {
            Code::Instructional(c) => c.bits + 1,
            Code::Permutation(c) => c.m,
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, Code::Instructional(_))
    }

    pub fn positions(&self, w: &BinaryString) -> Option<Vec<Pos>> {
        match self {
            Code::Instructional(c) => {
                let code = c.assignment.get(w)?;
                let mut out = vec![1];
                for &bit in code {
                    out.push(out.last().unwrap() + u32::from(bit));
                }
                Some(out)
            }
            Code::Permutation(c) => c.assignment.get(w).cloned(),
        }
    }

    /// Key read off the order type of the code pebbles.
    fn signature(&self, pebbles: &[Pos]) -> Option<Vec<u32>> {
        match self {
            Code::Instructional(_) => pebbles
                .windows(2)
                .map(|p| match p[1].cmp(&p[0]) {
                    std::cmp::Ordering::Equal => Some(0),
                    std::cmp::Ordering::Greater => Some(1),
                    std::cmp::Ordering::Less => None,
                })
                .collect(),
            Code::Permutation(_) => {
                let mut sorted = pebbles.to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != pebbles.len() {
                    return None;
                }
                Some(pebbles.iter().map(|p| sorted.binary_search(p).unwrap() as u32 + 1).collect())
            }
        }
    }

    fn decoder(&self) -> BTreeMap<Vec<u32>, BinaryString> {
        let mut out = BTreeMap::new();
        let strings: Vec<&BinaryString> = match self {
            Code::Instructional(c) => c.assignment.keys().collect(),
            Code::Permutation(c) => c.assignment.keys().collect(),
        };
        for w in strings {
            let pos = self.positions(w).expect("assigned");
            out.insert(self.signature(&pos).expect("valid code"), w.clone());
        }
        out
    }
}

/// Codes for `side`, assigned in lexicographic order. At most `n` bits;
/// the all-ones code is never used when the code is `n` bits long.
pub fn preprocess_instructional(side: &[BinaryString], n: usize) -> Result<Code, StringError> {
    let sorted: BTreeSet<&BinaryString> = side.iter().collect();
    let bits = ceil_log(2, sorted.len() as u64);
    if bits > n {
        return Err(StringError::CodeOverflow { bits, n });
    }
    let mut assignment = BTreeMap::new();
    for (v, w) in sorted.into_iter().enumerate() {
        let code: Vec<bool> = (0..bits).map(|i| (v >> (bits - 1 - i)) & 1 == 1).collect();
        if bits == n && code.iter().all(|&b| b) {
            return Err(StringError::CodeOverflow { bits, n });
        }
        assignment.insert(w.clone(), code);
    }
    Ok(Code::Instructional(InstructionalCode { bits, assignment }))
}

fn next_permutation(p: &mut [u32]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Permutations of `1..=m` assigned in lexicographic order.
pub fn preprocess_permutations(side: &[BinaryString], m: usize, n: usize) -> Result<Code, StringError> {
    let sorted: BTreeSet<&BinaryString> = side.iter().collect();
    if m > n {
        return Err(StringError::TooManyPebbles { m, n });
    }
    if !factorial_at_least(m, sorted.len()) {
        return Err(StringError::TooFewPermutations { m, size: sorted.len() });
    }
    let mut perm: Vec<u32> = (1..=m as u32).collect();
    let mut assignment = BTreeMap::new();
    for (i, w) in sorted.into_iter().enumerate() {
        if i > 0 {
            next_permutation(&mut perm);
        }
        assignment.insert(w.clone(), perm.clone());
    }
    Ok(Code::Permutation(PermutationCode { m, assignment }))
}

/// Shape of the code chosen for a side of `size` strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeShape {
    Permutation { m: usize },
    Instructional { bits: usize },
}

impl CodeShape {
    pub fn rounds(self) -> usize {
        match self {
            CodeShape::Permutation { m } => m,
            CodeShape::Instructional { bits } => bits + 1,
        }
    }
}

/// Permutation code with `m` pebbles when `m <= n` and `m! >= size`, else
/// walk codes when they fit.
pub fn code_shape(size: u128, m: usize, n: usize) -> Option<CodeShape> {
    let f = (2..=m as u128).try_fold(1u128, |a, i| a.checked_mul(i)).unwrap_or(u128::MAX);
    if m <= n && f >= size {
        return Some(CodeShape::Permutation { m });
    }
    let bits = (128 - size.saturating_sub(1).leading_zeros()) as usize;
    (bits < n || (bits == n && size < 1u128 << n.min(127))).then_some(CodeShape::Instructional { bits })
}

/// Permutation code with `m` pebbles, falling back to walk codes.
pub fn preprocess(side: &[BinaryString], m: usize, n: usize) -> Result<Code, StringError> {
    let size = side.iter().collect::<BTreeSet<_>>().len();
    match code_shape(size as u128, m, n) {
        Some(CodeShape::Permutation { m }) => preprocess_permutations(side, m, n),
        Some(CodeShape::Instructional { .. }) => preprocess_instructional(side, n),
        None => Err(StringError::CodeOverflow { bits: ceil_log(2, size as u64), n }),
    }
}

/// Boards of `side` after the code moves, checked for pairwise distinct types.
pub fn code_separates(code: &Code, side: &[BinaryString]) -> bool {
    let mut seen = BTreeSet::new();
    side.iter().all(|w| {
        let Some(pos) = code.positions(w) else { return false };
        let board = PebbledBoard::with_pebbles(Arc::new(Structure::Str(w.clone())), pos).expect("in range");
        seen.insert(atomic_type(&board))
    })
}

/// Plays a code on its own side.
pub struct CodePlayer {
    code: Code,
    q: Quantifier,
}

impl StrategyPlayer for CodePlayer {
    fn pattern(&self) -> Pattern {
        Pattern(vec![self.q; self.code.rounds()])
    }

    fn place(&self, board: &PebbledBoard, _side: Side, round: usize) -> Result<Pos, GameError> {
        Ok(self.code.positions(string_of(board)).map_or(board.min_elem(), |p| p[round]))
    }

    fn name(&self) -> String {
        format!("code[{}]", self.code.rounds())
    }
}

fn first_types_differ(a: &BinaryString, b: &BinaryString) -> bool {
    atomic_type(&PebbledBoard::new(a.clone())) != atomic_type(&PebbledBoard::new(b.clone()))
}

/// Existential move on the first differing bit, then the exact-length
/// separator on the prefix up to that bit.
pub struct OneVsOnePlayer {
    first: Option<Pos>,
    inner: Option<SharedPlayer>,
    label: String,
}

impl StrategyPlayer for OneVsOnePlayer {
    fn pattern(&self) -> Pattern {
        match &self.inner {
            None => Pattern::default(),
            Some(p) if self.first.is_some() => Pattern(vec![Quantifier::Exists]).concat(&p.pattern()),
            Some(p) => p.pattern(),
        }
    }

    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        let Some(inner) = &self.inner else { return Ok(board.min_elem()) };
        let (lo, hi, skip) = match self.first {
            Some(i) if round == 0 => return Ok(i),
            Some(_) => (board.min_elem(), board.pebbles()[0], 1),
            None => (board.min_elem(), board.max_elem(), 0),
        };
        if hi <= lo {
            return Ok(board.min_elem());
        }
        let keep: Vec<usize> = (skip..board.pebble_count()).collect();
        let view = board.order_view(Segment { lo, hi }, &keep)?;
        Ok(inner.place(&view, side, round - skip)? + lo)
    }

    fn branch(&self, board: &PebbledBoard, side: Side) -> Option<BranchId> {
        let inner = self.inner.as_ref()?;
        let (lo, hi, skip) = match self.first {
            Some(_) if board.pebble_count() == 0 => return Some(Vec::new()),
            Some(_) => (board.min_elem(), board.pebbles()[0], 1),
            None => (board.min_elem(), board.max_elem(), 0),
        };
        if hi <= lo {
            return None;
        }
        let keep: Vec<usize> = (skip..board.pebble_count()).collect();
        inner.branch(&board.order_view(Segment { lo, hi }, &keep).ok()?, side)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// Separates `{w}` from `{w2}` for equal-length strings.
pub fn sep_one_vs_one(w: &BinaryString, w2: &BinaryString) -> Result<OneVsOnePlayer, StringError> {
    if w.len() != w2.len() {
        return Err(StringError::LengthMismatch { expected: w.len(), found: w2.len() });
    }
    if w == w2 {
        return Err(StringError::Equal);
    }
    let label = format!("one-vs-one({w},{w2})");
    if first_types_differ(w, w2) {
        return Ok(OneVsOnePlayer { first: None, inner: None, label });
    }
    let i = (1..=w.len() as Pos).find(|&i| w.bit(i) != w2.bit(i)).expect("strings differ");
    let inner = exact_length_separator(i - 1)?;
    Ok(OneVsOnePlayer { first: Some(i), inner: Some(inner), label })
}

/// Separates `{w}` from `{w2}` of any lengths; unequal lengths are told
/// apart by the exact-length separator on the whole string.
pub fn sep_one_vs_one_anylen(w: &BinaryString, w2: &BinaryString) -> Result<OneVsOnePlayer, StringError> {
    if w.len() == w2.len() {
        return sep_one_vs_one(w, w2);
    }
    let label = format!("one-vs-one({w},{w2})");
    if first_types_differ(w, w2) {
        return Ok(OneVsOnePlayer { first: None, inner: None, label });
    }
    let inner = exact_length_separator(w.len() as u32 - 1)?;
    Ok(OneVsOnePlayer { first: None, inner: Some(inner), label })
}

/// Which right windows the universal move of the thirds recursion points at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Shorter than the left third, or as long with other bits.
    Shorter,
    /// Longer than the left third, or as long with other bits.
    Longer,
}

#[derive(Clone, Copy, Debug)]
struct Window {
    lo: Pos,
    end: Pos,
}

impl Window {
    fn size(self) -> u32 {
        self.end.saturating_sub(self.lo)
    }
}

fn left_thirds(win: Window) -> [Window; 3] {
    let m = win.size();
    let a = win.lo + m / 3;
    let b = win.lo + 2 * m / 3;
    [Window { lo: win.lo, end: a }, Window { lo: a, end: b }, Window { lo: b, end: win.end }]
}

fn right_thirds(win: Window, r: Pos, b: Pos) -> Option<[Window; 3]> {
    (win.lo <= r && r <= b && b < win.end)
        .then_some([Window { lo: win.lo, end: r }, Window { lo: r, end: b }, Window { lo: b, end: win.end }])
}

fn bits(w: &BinaryString, win: Window) -> &[bool] {
    &w.bits()[(win.lo - 1) as usize..(win.end - 1) as usize]
}

/// Thirds recursion for one string `w`: two existential moves cut the
/// active window of `w` into thirds, a universal move marks the start of
/// the leftmost violated third on each right board.
pub struct ThirdsPlayer {
    w: BinaryString,
    depth: usize,
    mode: Violation,
    cleanup: bool,
}

struct Replay {
    left: Window,
    right: Window,
    path: Vec<u32>,
    stray: bool,
}

impl ThirdsPlayer {
    fn replay(&self, board: &PebbledBoard, side: Side, levels: usize) -> Replay {
        let p = board.pebbles();
        let n = self.w.len() as Pos;
        let mut st = Replay {
            left: Window { lo: 1, end: n + 1 },
            right: Window { lo: board.min_elem(), end: board.max_elem() + 1 },
            path: Vec::new(),
            stray: false,
        };
        for j in 0..levels {
            let lt = left_thirds(st.left);
            let g = p[3 * j + 2];
            let starts = match side {
                Side::Left => lt,
                Side::Right => match right_thirds(st.right, p[3 * j], p[3 * j + 1]) {
                    Some(rt) => rt,
                    None => {
                        st.stray = true;
                        return st;
                    }
                },
            };
            let Some(k) = (0..3).rev().find(|&k| starts[k].lo == g) else {
                st.stray = true;
                return st;
            };
            st.left = lt[k];
            st.right = starts[k];
            st.path.push(k as u32);
        }
        st
    }

    fn violated(&self, w2: &BinaryString, left: Window, right: Window) -> bool {
        let (ls, rs) = (left.size(), right.size());
        let differs = || bits(&self.w, left) != bits(w2, right);
        match self.mode {
            Violation::Shorter => rs < ls || (rs == ls && differs()),
            Violation::Longer => rs > ls || (rs == ls && differs()),
        }
    }

    fn thirds_pattern(depth: usize) -> Pattern {
        Pattern::parse(&"EEA".repeat(depth)).expect("literal")
    }
}

impl StrategyPlayer for ThirdsPlayer {
    fn pattern(&self) -> Pattern {
        let mut p = Self::thirds_pattern(self.depth);
        if self.cleanup {
            p.0.push(Quantifier::Forall);
        }
        p
    }

    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        let clamp = |x: Pos| x.clamp(board.min_elem(), board.max_elem());
        if round == 3 * self.depth {
            let st = self.replay(board, side, self.depth);
            return Ok(if st.stray { board.min_elem() } else { clamp(st.right.lo + 1) });
        }
        let (level, phase) = (round / 3, round % 3);
        let st = self.replay(board, side, level);
        if st.stray {
            return Ok(board.min_elem());
        }
        let lt = left_thirds(st.left);
        Ok(match phase {
            0 => clamp(lt[1].lo),
            1 => clamp(lt[2].lo),
            _ => {
                let p = board.pebbles();
                let Some(rt) = right_thirds(st.right, p[3 * level], p[3 * level + 1]) else {
                    return Ok(board.min_elem());
                };
                let w2 = string_of(board);
                (0..3).find(|&k| self.violated(w2, lt[k], rt[k])).map_or(board.min_elem(), |k| rt[k].lo)
            }
        })
    }

    fn branch(&self, board: &PebbledBoard, side: Side) -> Option<BranchId> {
        let levels = (board.pebble_count() / 3).min(self.depth);
        let st = self.replay(board, side, levels);
        (!st.stray).then_some(st.path)
    }

    fn name(&self) -> String {
        format!("thirds({})", self.w)
    }
}

/// `ceil(log3 n)`.
pub fn thirds_depth(n: usize) -> usize {
    ceil_log(3, n as u64)
}

/// Separates `w` from every other string of its length with
/// `(E E A)^ceil(log3 n)`.
pub fn sep_one_vs_all(w: &BinaryString) -> ThirdsPlayer {
    ThirdsPlayer { w: w.clone(), depth: thirds_depth(w.len()), mode: Violation::Shorter, cleanup: false }
}

/// Separates `w` from strings of other lengths as well: a universal move
/// on min (not longer) or max (longer) picks one of two thirds games, and
/// the longer one ends with a universal move on a spare element.
pub struct AnyLengthPlayer {
    n: usize,
    shorter: ThirdsPlayer,
    longer: ThirdsPlayer,
}

impl AnyLengthPlayer {
    fn pick(&self, board: &PebbledBoard) -> Option<&ThirdsPlayer> {
        let g = *board.pebbles().first()?;
        if g == board.min_elem() {
            Some(&self.shorter)
        } else if g == board.max_elem() {
            Some(&self.longer)
        } else {
            None
        }
    }
}

impl StrategyPlayer for AnyLengthPlayer {
    fn pattern(&self) -> Pattern {
        if self.n <= 1 {
            return Pattern::default();
        }
        Pattern(vec![Quantifier::Forall]).concat(&self.longer.pattern())
    }

    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        if round == 0 {
            return Ok(if string_of(board).len() <= self.n { board.min_elem() } else { board.max_elem() });
        }
        let Some(sub) = self.pick(board) else { return Ok(board.min_elem()) };
        if !sub.cleanup && round == 3 * sub.depth + 1 {
            return Ok(board.min_elem());
        }
        let keep: Vec<usize> = (1..board.pebble_count()).collect();
        sub.place(&board.restrict(&keep), side, round - 1)
    }

    fn branch(&self, board: &PebbledBoard, side: Side) -> Option<BranchId> {
        let sub = self.pick(board)?;
        let keep: Vec<usize> = (1..board.pebble_count()).collect();
        let mut id = vec![u32::from(sub.cleanup)];
        id.extend(sub.branch(&board.restrict(&keep), side)?);
        Some(id)
    }

    fn name(&self) -> String {
        format!("one-vs-all-anylen({})", self.shorter.w)
    }
}

pub fn sep_one_vs_all_anylen(w: &BinaryString) -> AnyLengthPlayer {
    let depth = thirds_depth(w.len());
    AnyLengthPlayer {
        n: w.len(),
        shorter: ThirdsPlayer { w: w.clone(), depth, mode: Violation::Shorter, cleanup: false },
        longer: ThirdsPlayer { w: w.clone(), depth, mode: Violation::Longer, cleanup: true },
    }
}

/// `{w}` against every other string of length `1..=max_other_len`.
pub fn anylen_instance(w: &BinaryString, max_other_len: usize) -> Option<StringInstance> {
    let right: Vec<BinaryString> =
        (1..=max_other_len).flat_map(BinaryString::all_of_length).filter(|x| x != w).collect();
    StringInstance::new(vec![w.clone()], right).ok()
}

/// One sub-game of a preprocessed parallel strategy, on unpebbled strings.
pub struct Part {
    pub left: Vec<BinaryString>,
    pub right: Vec<BinaryString>,
    pub player: SharedPlayer,
}

/// A string strategy with the pieces needed to check it.
pub struct StringPlan {
    pub strategy: &'static str,
    pub instance: StringInstance,
    pub player: SharedPlayer,
    /// Preprocessing codes in play order, with the side each is played on.
    pub codes: Vec<(Quantifier, Code)>,
    pub parts: Vec<Part>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionalCheck {
    pub codes_distinct: bool,
    pub parts_won: usize,
    pub parts: usize,
    pub max_part_rounds: usize,
    pub won: bool,
}

impl StringPlan {
    pub fn pattern(&self) -> Pattern {
        self.player.pattern()
    }

    pub fn rounds(&self) -> usize {
        self.pattern().len()
    }

    pub fn fallback(&self) -> bool {
        self.codes.iter().any(|(_, c)| c.is_fallback())
    }

    /// Plays the whole instance against the oblivious Duplicator.
    pub fn run(&self, opts: &RunOptions) -> Result<RunOutcome, GameError> {
        run_strategy(&self.instance.game(), self.player.as_ref(), self.rounds(), opts)
    }

    /// Checks the parallel composition piecewise: every code gives its side
    /// pairwise distinct types and every sub-game is won on its own.
    pub fn check_parts(&self) -> Result<CompositionalCheck, GameError> {
        self.check_some_parts(usize::MAX)
    }

    /// As [`StringPlan::check_parts`], playing at most `limit` evenly spaced
    /// sub-games. Round counts still cover every sub-game.
    pub fn check_some_parts(&self, limit: usize) -> Result<CompositionalCheck, GameError> {
        let codes_distinct = self.codes.iter().all(|(q, c)| {
            let side = if *q == Quantifier::Exists { &self.instance.left } else { &self.instance.right };
            code_separates(c, side)
        });
        let mut parts_won = 0;
        let mut max_part_rounds = 0;
        let total = self.parts.len();
        let played = total.min(limit.max(1));
        for (i, part) in self.parts.iter().enumerate() {
            let r = part.player.pattern().len();
            max_part_rounds = max_part_rounds.max(r);
            // Indices i * played / total step once per chosen part.
            if (i * played) / total != ((i + 1) * played) / total
                && wins_each(&part.left, &part.right, part.player.as_ref(), r)?
            {
                parts_won += 1;
            }
        }
        Ok(CompositionalCheck { codes_distinct, parts_won, parts: played, max_part_rounds, won: codes_distinct && parts_won == played })
    }
}

/// A play against the oblivious Duplicator is won exactly when it is won
/// against each right board alone, and one board at a time stays small.
pub fn wins_each(
    left: &[BinaryString],
    right: &[BinaryString],
    player: &dyn StrategyPlayer,
    rounds: usize,
) -> Result<bool, GameError> {
    let lefts: Vec<PebbledBoard> = left.iter().map(|w| PebbledBoard::new(w.clone())).collect();
    for b in right {
        let g = GameState::new(lefts.clone(), vec![PebbledBoard::new(b.clone())])?;
        if !run_strategy(&g, player, rounds, &RunOptions::default())?.won {
            return Ok(false);
        }
    }
    Ok(true)
}

fn longest(patterns: impl Iterator<Item = Pattern>) -> Pattern {
    patterns.max_by_key(|p| p.len()).unwrap_or_default()
}

fn prelude_of(codes: &[(Quantifier, Code)]) -> Option<SharedPlayer> {
    let mut players = codes
        .iter()
        .map(|(q, c)| -> SharedPlayer { Arc::new(CodePlayer { code: c.clone(), q: *q }) });
    let first = players.next()?;
    Some(players.fold(first, |acc, p| Arc::new(Sequence { first: acc, second: p })))
}

/// Router that reads each code's class off the board's code pebbles and
/// maps the tuple of classes to a sub-game.
fn code_router(codes: &[(Quantifier, Code)], index: BTreeMap<Vec<BinaryString>, usize>) -> Router {
    let decoders: Vec<(Code, BTreeMap<Vec<u32>, BinaryString>)> =
        codes.iter().map(|(_, c)| (c.clone(), c.decoder())).collect();
    Arc::new(move |b: &PebbledBoard, _side: Side| {
        let mut key = Vec::with_capacity(decoders.len());
        let mut at = 0;
        for (code, dec) in &decoders {
            let r = code.rounds();
            let sig = code.signature(b.pebbles().get(at..at + r)?)?;
            key.push(dec.get(&sig)?.clone());
            at += r;
        }
        index.get(&key).copied()
    })
}

fn assemble(
    strategy: &'static str,
    instance: StringInstance,
    codes: Vec<(Quantifier, Code)>,
    keyed: Vec<(Vec<BinaryString>, Part)>,
) -> Result<StringPlan, StringError> {
    let master = longest(keyed.iter().map(|(_, p)| p.player.pattern()));
    let subs = keyed
        .iter()
        .map(|(_, p)| SubGame { player: p.player.clone(), pattern: p.player.pattern(), start: 0 })
        .collect();
    let index = keyed.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
    let router = code_router(&codes, index);
    let player = Arc::new(schedule_parallel(prelude_of(&codes), subs, master, router)?);
    let parts = keyed.into_iter().map(|(_, p)| p).collect();
    Ok(StringPlan { strategy, instance, player, codes, parts })
}

fn code_for(side: &[BinaryString], t: u64, n: usize) -> Result<Code, StringError> {
    preprocess(side, ceil_log(t, side.len() as u64), n)
}

/// Universal code moves name each right string, then one-vs-one games run in parallel.
pub fn sep_one_vs_many(w: &BinaryString, right: &[BinaryString], t: u64) -> Result<StringPlan, StringError> {
    if t < 2 {
        return Err(StringError::BadBase);
    }
    let inst = StringInstance::new(vec![w.clone()], right.to_vec())?;
    let n = inst.same_length()?;
    let code = code_for(&inst.right, t, n)?;
    let mut keyed = Vec::new();
    for b in &inst.right {
        let player: SharedPlayer = Arc::new(sep_one_vs_one(w, b)?);
        keyed.push((vec![b.clone()], Part { left: vec![w.clone()], right: vec![b.clone()], player }));
    }
    assemble("one-vs-many", inst, vec![(Quantifier::Forall, code)], keyed)
}

/// Existential codes on the left, universal codes on the right, then one
/// one-vs-one game per pair.
pub fn sep_many_vs_many(left: &[BinaryString], right: &[BinaryString], t: u64) -> Result<StringPlan, StringError> {
    if t < 2 {
        return Err(StringError::BadBase);
    }
    let inst = StringInstance::new(left.to_vec(), right.to_vec())?;
    let n = inst.same_length()?;
    let ca = code_for(&inst.left, t, n)?;
    let cb = code_for(&inst.right, t, n)?;
    let mut keyed = Vec::new();
    for a in &inst.left {
        for b in &inst.right {
            let player: SharedPlayer = Arc::new(sep_one_vs_one(a, b)?);
            keyed.push((vec![a.clone(), b.clone()], Part { left: vec![a.clone()], right: vec![b.clone()], player }));
        }
    }
    assemble("many-vs-many", inst, vec![(Quantifier::Exists, ca), (Quantifier::Forall, cb)], keyed)
}

fn many_vs_rest(
    strategy: &'static str,
    inst: StringInstance,
    code: Code,
) -> Result<StringPlan, StringError> {
    let keyed = inst
        .left
        .iter()
        .map(|a| {
            let player: SharedPlayer = Arc::new(sep_one_vs_all(a));
            (vec![a.clone()], Part { left: vec![a.clone()], right: inst.right.clone(), player })
        })
        .collect();
    assemble(strategy, inst, vec![(Quantifier::Exists, code)], keyed)
}

/// Existential codes on the left, then one thirds game per left string
/// against the full complement.
pub fn sep_many_vs_all(left: &[BinaryString], n: usize, t: u64) -> Result<StringPlan, StringError> {
    if t < 2 {
        return Err(StringError::BadBase);
    }
    sep_many_vs_others(left, &complement(left, n), t)
}

/// As [`sep_many_vs_all`] with an explicit right side.
pub fn sep_many_vs_others(left: &[BinaryString], right: &[BinaryString], t: u64) -> Result<StringPlan, StringError> {
    if t < 2 {
        return Err(StringError::BadBase);
    }
    let inst = StringInstance::new(left.to_vec(), right.to_vec())?;
    let n = inst.same_length()?;
    let code = code_for(&inst.left, t, n)?;
    many_vs_rest("many-vs-all", inst, code)
}

/// `ceil(n / log_r n)` with `r = 2^(1 + eps/4)`.
pub fn any_vs_any_pebbles(n: usize, epsilon: f64) -> usize {
    if n <= 1 {
        return 1;
    }
    let x = n as f64 * (1.0 + epsilon / 4.0) / (n as f64).log2();
    (x - 1e-9).ceil() as usize
}

/// `m = ceil(n / log_r n)` existential code moves on the left, then one
/// thirds game per left string.
pub fn sep_any_vs_any(left: &[BinaryString], right: &[BinaryString], epsilon: f64) -> Result<StringPlan, StringError> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(StringError::BadEpsilon);
    }
    let inst = StringInstance::new(left.to_vec(), right.to_vec())?;
    let n = inst.same_length()?;
    let m = any_vs_any_pebbles(n, epsilon);
    if m > n {
        return Err(StringError::TooManyPebbles { m, n });
    }
    let code = preprocess(&inst.left, m, n)?;
    many_vs_rest("any-vs-any", inst, code)
}

/// Size class of one side, relative to the string length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    One,
    Bounded,
    Polynomial,
    SuperPolynomial,
}

/// `1`, below `n`, up to `n^4`, above `n^4`.
pub fn size_class(s: u128, n: usize) -> SizeClass {
    let n = n.max(2) as u128;
    match s {
        0 | 1 => SizeClass::One,
        s if s < n => SizeClass::Bounded,
        s if s <= n.pow(4) => SizeClass::Polynomial,
        _ => SizeClass::SuperPolynomial,
    }
}

/// Largest integer `t >= 2` with `t^(e t) <= big_n`, or 2 when none is.
pub fn bounded_base(big_n: u128) -> u64 {
    let ok = |t: u64| (t as f64) * std::f64::consts::E * (t as f64).log2() <= (big_n as f64).log2();
    let mut t = 2;
    while ok(t + 1) {
        t += 1;
    }
    t
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetRow {
    pub row: usize,
    pub sides: &'static str,
    pub formula: &'static str,
    pub main_term: f64,
    pub applicable: bool,
    pub best: bool,
}

/// Main terms of the upper-bound rows for `n`-bit strings and side sizes
/// `(f, g)`; the row matching the size classes is flagged best.
pub fn budget_table(n: usize, f: u128, g: u128, epsilon: f64) -> Vec<BudgetRow> {
    let nf = n.max(1) as f64;
    let lg = nf.log2();
    let l3 = nf.ln() / 3f64.ln();
    let (a, b) = {
        let (x, y) = (size_class(f, n), size_class(g, n));
        (x.min(y), x.max(y))
    };
    use SizeClass::*;
    let poly = |c: SizeClass| c <= Polynomial;
    let big_n = f.max(g);
    let t = bounded_base(big_n);
    let rows: [(&'static str, &'static str, f64, bool); 7] = [
        ("1 vs 1", "log2 n", lg, a == One && b == One),
        ("1 vs f bounded", "log2 n + log_t N", lg + (big_n.max(1) as f64).log2() / (t as f64).log2(), a == One && b == Bounded),
        ("1 vs f polynomial", "(1+eps) log2 n", (1.0 + epsilon) * lg, a == One && b == Polynomial),
        ("1 vs f super-polynomial", "3 log3 n", 3.0 * l3, a == One && b == SuperPolynomial),
        ("f vs g polynomial", "(1+eps) log2 n", (1.0 + epsilon) * lg, a != One && poly(b)),
        ("f vs g polynomial/super-polynomial", "(3+eps) log3 n", (3.0 + epsilon) * l3, a != One && poly(a) && b == SuperPolynomial),
        ("f vs g super-polynomial", "(1+eps) n/log2 n", if n > 1 { (1.0 + epsilon) * nf / lg } else { 1.0 }, a == SuperPolynomial),
    ];
    rows.into_iter()
        .enumerate()
        .map(|(i, (sides, formula, main_term, applicable))| BudgetRow {
            row: i + 1,
            sides,
            formula,
            main_term,
            applicable,
            best: applicable,
        })
        .collect()
}

/// Base `2^ceil(1/eps)`, enough for `log_t n <= eps log2 n`.
pub fn base_for_epsilon(epsilon: f64) -> u64 {
    1u64 << ((1.0 / epsilon).ceil() as u32).clamp(1, 16)
}

/// How a measured strategy was checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Whole instance played out.
    Whole,
    /// Codes and every sub-game checked separately.
    Parts,
    /// Sub-games checked against a sample of the right side.
    SampledParts,
}

/// Measured round count of one upper-bound row at one length.
#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub row: usize,
    pub n: usize,
    pub left_size: String,
    pub right_size: String,
    pub main_term: f64,
    pub rounds: usize,
    pub constant: f64,
    pub check: CheckKind,
    pub won: bool,
}

fn random_string(rng: &mut impl rand::Rng, n: usize) -> BinaryString {
    BinaryString::new((0..n).map(|_| rng.gen()).collect()).expect("nonempty")
}

fn random_distinct(rng: &mut impl rand::Rng, n: usize, count: usize, avoid: &BTreeSet<BinaryString>) -> Vec<BinaryString> {
    generate_distinct(rng, count, avoid, |r| random_string(r, n))
}

fn generate_distinct<R: rand::Rng>(
    rng: &mut R,
    count: usize,
    avoid: &BTreeSet<BinaryString>,
    mut gen: impl FnMut(&mut R) -> BinaryString,
) -> Vec<BinaryString> {
    let mut out = BTreeSet::new();
    let mut misses = 0;
    while out.len() < count && misses < 10_000 {
        let w = gen(rng);
        if avoid.contains(&w) || !out.insert(w) {
            misses += 1;
        }
    }
    out.into_iter().collect()
}

/// Agrees with `w` up to a flipped bit in the second half and on the last bit.
fn late_variant(rng: &mut impl rand::Rng, w: &BinaryString) -> BinaryString {
    let n = w.len();
    let p = rng.gen_range(n / 2..n - 1);
    let mut bits = w.bits().to_vec();
    bits[p] = !bits[p];
    for b in &mut bits[p + 1..n - 1] {
        *b = rng.gen();
    }
    BinaryString::new(bits).expect("nonempty")
}

/// Shares `prefix` and ends in 0.
fn with_prefix(rng: &mut impl rand::Rng, prefix: &[bool], n: usize) -> BinaryString {
    let mut bits = prefix.to_vec();
    bits.extend((prefix.len()..n - 1).map(|_| rng.gen::<bool>()));
    bits.push(false);
    BinaryString::new(bits).expect("nonempty")
}

/// Random strings plus single-bit flips at random positions of `w`.
fn right_sample(rng: &mut impl rand::Rng, w: &BinaryString, avoid: &BTreeSet<BinaryString>, count: usize) -> Vec<BinaryString> {
    let n = w.len();
    let mut out: BTreeSet<BinaryString> = random_distinct(rng, n, count, avoid).into_iter().collect();
    for _ in 0..count {
        let mut bits = w.bits().to_vec();
        let i = rng.gen_range(0..n);
        bits[i] = !bits[i];
        let x = BinaryString::new(bits).expect("nonempty");
        if !avoid.contains(&x) {
            out.insert(x);
        }
    }
    out.into_iter().collect()
}

/// Thirds games of a few left strings against sampled right strings.
fn sampled_thirds(rng: &mut impl rand::Rng, left: &[BinaryString]) -> Result<bool, StringError> {
    let avoid: BTreeSet<BinaryString> = left.iter().cloned().collect();
    for w in left.iter().take(SAMPLED_LEFT) {
        let p = sep_one_vs_all(w);
        let right = right_sample(rng, w, &avoid, SAMPLED_RIGHT);
        if !wins_each(std::slice::from_ref(w), &right, &p, p.pattern().len())? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_plan(plan: &StringPlan, whole: bool, sampled: bool) -> Result<(CheckKind, bool), StringError> {
    if whole {
        return Ok((CheckKind::Whole, plan.run(&RunOptions::default())?.won));
    }
    let many = plan.parts.len() > PART_LIMIT && plan.instance.n().is_some_and(|n| n > 16);
    let kind = if sampled || many { CheckKind::SampledParts } else { CheckKind::Parts };
    let limit = if many { PART_LIMIT } else { usize::MAX };
    Ok((kind, plan.check_some_parts(limit)?.won))
}

const WHOLE_LIMIT: usize = 8;
const EXHAUSTIVE_LIMIT: usize = 10;
const SAMPLED_LEFT: usize = 3;
const PART_LIMIT: usize = 24;
const SAMPLED_RIGHT: usize = 6;

/// Plays the strategy of upper-bound row `row` on a seeded family of
/// `n`-bit instances and reports rounds minus the row's main term.
pub fn measure_row(row: usize, n: usize, epsilon: f64, seed: u64) -> Result<Measurement, StringError> {
    use rand::SeedableRng;
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(StringError::BadEpsilon);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ ((row as u64) << 32) ^ n as u64);
    let nf = n as f64;
    let lg = nf.log2();
    let l3 = nf.ln() / 3f64.ln();
    let w = random_string(&mut rng, n);
    let just_w: BTreeSet<BinaryString> = [w.clone()].into();
    let t = base_for_epsilon(epsilon);
    let (left_size, right_size, main_term, rounds, check, won) = match row {
        1 => {
            let mut rounds = 0;
            let mut won = true;
            for i in 2..n {
                let mut bits = w.bits().to_vec();
                bits[i - 1] = !bits[i - 1];
                let w2 = BinaryString::new(bits).expect("nonempty");
                let p = sep_one_vs_one(&w, &w2)?;
                let r = p.pattern().len();
                let inst = StringInstance::new(vec![w.clone()], vec![w2])?;
                won &= run_strategy(&inst.game(), &p, r, &RunOptions::default())?.won;
                rounds = rounds.max(r);
            }
            ("1".into(), "1".into(), lg, rounds, CheckKind::Whole, won)
        }
        2 => {
            let big_n = 3usize;
            let right = generate_distinct(&mut rng, big_n, &just_w, |r| late_variant(r, &w));
            let tb = bounded_base(big_n as u128);
            let plan = sep_one_vs_many(&w, &right, tb)?;
            let (check, won) = check_plan(&plan, true, false)?;
            let main = lg + (big_n as f64).log2() / (tb as f64).log2();
            ("1".into(), big_n.to_string(), main, plan.rounds(), check, won)
        }
        3 => {
            let right = generate_distinct(&mut rng, n, &just_w, |r| late_variant(r, &w));
            let plan = sep_one_vs_many(&w, &right, t)?;
            let (check, won) = check_plan(&plan, n <= WHOLE_LIMIT, false)?;
            ("1".into(), "n".into(), (1.0 + epsilon) * lg, plan.rounds(), check, won)
        }
        4 => {
            let p = sep_one_vs_all(&w);
            let r = p.pattern().len();
            let (check, won) = if n <= EXHAUSTIVE_LIMIT {
                (CheckKind::Whole, wins_each(&[w.clone()], &complement(&[w.clone()], n), &p, r)?)
            } else {
                (CheckKind::SampledParts, sampled_thirds(&mut rng, &[w.clone()])?)
            };
            ("1".into(), "2^n-1".into(), 3.0 * l3, r, check, won)
        }
        5 => {
            let prefix = &w.bits()[..n / 2 - 1];
            let left = generate_distinct(&mut rng, n, &BTreeSet::new(), |r| with_prefix(r, prefix, n));
            let right = generate_distinct(&mut rng, n, &left.iter().cloned().collect(), |r| with_prefix(r, prefix, n));
            let plan = sep_many_vs_many(&left, &right, t)?;
            let (check, won) = check_plan(&plan, n <= WHOLE_LIMIT, false)?;
            ("n".into(), "n".into(), (1.0 + epsilon) * lg, plan.rounds(), check, won)
        }
        6 | 7 => {
            // Rounds follow from the code size and n alone; sub-games are
            // thirds games, checked on samples once the sides are large.
            let (size, m, main, sizes) = if row == 6 {
                (n as u128, ceil_log(t, n as u64), (3.0 + epsilon) * l3, ("n", "2^n-n"))
            } else {
                let main = if n > 1 { (1.0 + epsilon) * nf / lg } else { 1.0 };
                (1u128 << (n - 1), any_vs_any_pebbles(n, epsilon), main, ("2^(n-1)", "2^(n-1)"))
            };
            let shape = code_shape(size, m, n).ok_or(StringError::TooManyPebbles { m, n })?;
            let rounds = shape.rounds() + 3 * thirds_depth(n);
            let (check, won) = if n <= WHOLE_LIMIT {
                let plan = if row == 6 {
                    sep_many_vs_all(&random_distinct(&mut rng, n, n, &BTreeSet::new()), n, t)?
                } else {
                    let (l, r): (Vec<_>, Vec<_>) = BinaryString::all_of_length(n)
                        .into_iter()
                        .partition(|x| x.bits().iter().filter(|&&b| b).count() % 2 == 0);
                    sep_any_vs_any(&l, &r, epsilon)?
                };
                debug_assert_eq!(plan.rounds(), rounds);
                check_plan(&plan, false, false)?
            } else {
                let left = random_distinct(&mut rng, n, SAMPLED_LEFT, &BTreeSet::new());
                (CheckKind::SampledParts, sampled_thirds(&mut rng, &left)?)
            };
            (sizes.0.into(), sizes.1.into(), main, rounds, check, won)
        }
        _ => return Err(StringError::Game(GameError::Refused(format!("no upper-bound row {row}")))),
    };
    Ok(Measurement { row, n, left_size, right_size, main_term, rounds, constant: rounds as f64 - main_term, check, won })
}

/// Measured constants of one row across several lengths.
#[derive(Clone, Debug, Serialize)]
pub struct RowConstants {
    pub row: usize,
    pub formula: &'static str,
    pub measurements: Vec<Measurement>,
    /// Rounds over main term at the largest length is at most that at the smallest.
    pub ratio_non_increasing: bool,
    /// The constant at the largest length stays within the largest seen before.
    pub constant_bounded: bool,
    pub all_won: bool,
}

impl RowConstants {
    pub fn passes(&self) -> bool {
        self.ratio_non_increasing && self.constant_bounded && self.all_won
    }
}

const SLACK: f64 = 1e-9;

/// Measures every upper-bound row at each length in `ns` (ascending).
pub fn measure_constants(ns: &[usize], epsilon: f64, seed: u64) -> Result<Vec<RowConstants>, StringError> {
    let formulas = budget_table(ns.first().copied().unwrap_or(8), 1, 1, epsilon);
    let mut out = Vec::new();
    for row in 1..=7 {
        let measurements = ns.iter().map(|&n| measure_row(row, n, epsilon, seed)).collect::<Result<Vec<_>, _>>()?;
        let ratio = |m: &Measurement| m.rounds as f64 / m.main_term;
        let (first, last) = (&measurements[0], &measurements[measurements.len() - 1]);
        let before = measurements[..measurements.len() - 1].iter().map(|m| m.constant).fold(f64::NEG_INFINITY, f64::max);
        out.push(RowConstants {
            row,
            formula: formulas[row - 1].formula,
            ratio_non_increasing: ratio(last) <= ratio(first) + SLACK,
            constant_bounded: measurements.len() < 2 || last.constant <= before + SLACK,
            all_won: measurements.iter().all(|m| m.won),
            measurements,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> BinaryString {
        BinaryString::parse(text).unwrap()
    }

    #[test]
    fn codes() {
        let side = vec![s("0011"), s("0101"), s("0110")];
        let Code::Instructional(c) = preprocess_instructional(&side, 4).unwrap() else { panic!() };
        let codes: Vec<String> =
            c.assignment.values().map(|v| v.iter().map(|&b| if b { '1' } else { '0' }).collect()).collect();
        assert_eq!(codes, ["00", "01", "10"]);
        assert!(preprocess_permutations(&vec![s("0"); 1], 0, 1).is_ok());
        let six: Vec<BinaryString> = BinaryString::all_of_length(3).into_iter().take(6).collect();
        assert!(code_separates(&preprocess_permutations(&six, 3, 3).unwrap(), &six));
        let seven: Vec<BinaryString> = BinaryString::all_of_length(3).into_iter().take(7).collect();
        assert!(matches!(preprocess_permutations(&seven, 3, 3), Err(StringError::TooFewPermutations { .. })));
    }

    #[test]
    fn thirds_depths() {
        assert_eq!(thirds_depth(9), 2);
        assert_eq!(thirds_depth(10), 3);
        assert_eq!(thirds_depth(3), 1);
        assert_eq!(thirds_depth(2), 1);
        assert_eq!(thirds_depth(1), 0);
    }
}
