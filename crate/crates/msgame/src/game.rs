//! Multi-structural game semantics against the oblivious Duplicator.
//!
//! A [`GameState`] holds two deduplicated board sets. Spoiler places one
//! pebble on every board of one side, Duplicator answers by copying each
//! board on the other side once per universe element, and boards whose
//! atomic type has no partner on the opposite side are discarded.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::structures::{atomic_type, AtomicType, PebbledBoard, Pos, StructureError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("color {0} is already in use")]
    ColorReused(u32),
    #[error("expected color {expected}, got {got}")]
    ColorOutOfOrder { expected: u32, got: u32 },
    #[error("placement covers {got} boards but the side holds {expected}")]
    PlacementSize { expected: usize, got: usize },
    #[error("a half-round is already pending")]
    HalfRoundPending,
    #[error("no pending half-round for the expanded side")]
    NoPendingMove,
    #[error("boards carry different pebble counts")]
    RaggedBoards,
    #[error("pattern of length {len} cannot drive {rounds} rounds")]
    PatternTooShort { len: usize, rounds: usize },
    #[error("sub-pattern {sub} does not embed in master {master}")]
    NotEmbeddable { sub: Pattern, master: Pattern },
    #[error("strategy refused: {0}")]
    Refused(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl Serialize for Side {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn side(self) -> Side {
        match self {
            Quantifier::Exists => Side::Left,
            Quantifier::Forall => Side::Right,
        }
    }

    pub fn from_side(side: Side) -> Self {
        match side {
            Side::Left => Quantifier::Exists,
            Side::Right => Quantifier::Forall,
        }
    }

    pub fn dual(self) -> Self {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Quantifier::Exists => 'E',
            Quantifier::Forall => 'A',
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Quantifier::Exists => '∃',
            Quantifier::Forall => '∀',
        }
    }
}

impl Serialize for Quantifier {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.letter().to_string())
    }
}

impl<'de> Deserialize<'de> for Quantifier {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "E" => Ok(Quantifier::Exists),
            "A" => Ok(Quantifier::Forall),
            other => Err(serde::de::Error::custom(format!("unknown quantifier {other:?}"))),
        }
    }
}

/// Quantifier sequence. Displays with ASCII letters: `EAEA`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(pub Vec<Quantifier>);

impl Pattern {
    pub fn parse(text: &str) -> Option<Pattern> {
        text.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'E' | 'e' | '∃' => Some(Quantifier::Exists),
                'A' | 'a' | '∀' => Some(Quantifier::Forall),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Pattern)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> String {
        self.0.iter().map(|q| q.symbol()).collect()
    }

    pub fn dual(&self) -> Pattern {
        Pattern(self.0.iter().map(|q| q.dual()).collect())
    }

    pub fn concat(&self, other: &Pattern) -> Pattern {
        Pattern(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    /// True when consecutive quantifiers always differ.
    pub fn strictly_alternates(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }

    /// Alternating sequence of length `len` whose last entry is `last`.
    pub fn alternating_ending(last: Quantifier, len: usize) -> Pattern {
        let mut v = Vec::with_capacity(len);
        let mut q = last;
        for _ in 0..len {
            v.push(q);
            q = q.dual();
        }
        v.reverse();
        Pattern(v)
    }

    /// Alternating sequence of length `len` whose first entry is `first`.
    pub fn alternating_from(first: Quantifier, len: usize) -> Pattern {
        let mut v = Vec::with_capacity(len);
        let mut q = first;
        for _ in 0..len {
            v.push(q);
            q = q.dual();
        }
        Pattern(v)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.0 {
            write!(f, "{}", q.letter())?;
        }
        Ok(())
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Greedy leftmost embedding of `sub` into `master[start..]`; returns the
/// master indices used.
pub fn embed(sub: &Pattern, master: &Pattern, start: usize) -> Option<Vec<usize>> {
    let mut slots = Vec::with_capacity(sub.len());
    let mut i = start;
    for &q in &sub.0 {
        while i < master.len() && master.0[i] != q {
            i += 1;
        }
        if i >= master.len() {
            return None;
        }
        slots.push(i);
        i += 1;
    }
    Some(slots)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    pub left: Vec<PebbledBoard>,
    pub right: Vec<PebbledBoard>,
    pub round: u32,
    pub history: Vec<(Side, u32)>,
    pending: Option<(Side, u32)>,
}

fn normalize(mut boards: Vec<PebbledBoard>) -> Vec<PebbledBoard> {
    boards.sort_unstable();
    boards.dedup();
    boards
}

impl GameState {
    /// Fresh state; all boards must carry the same number of pebbles, which
    /// becomes the starting round.
    pub fn new(left: Vec<PebbledBoard>, right: Vec<PebbledBoard>) -> Result<Self, GameError> {
        let counts: HashSet<usize> = left.iter().chain(&right).map(|b| b.pebble_count()).collect();
        if counts.len() > 1 {
            return Err(GameError::RaggedBoards);
        }
        let round = counts.into_iter().next().unwrap_or(0) as u32;
        Ok(GameState {
            left: normalize(left),
            right: normalize(right),
            round,
            history: Vec::new(),
            pending: None,
        })
    }

    pub fn side(&self, side: Side) -> &[PebbledBoard] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut Vec<PebbledBoard> {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }

    pub fn pending(&self) -> Option<(Side, u32)> {
        self.pending
    }

    pub fn board_count(&self) -> usize {
        self.left.len() + self.right.len()
    }
}

/// Placement is aligned with the (sorted) boards of `side`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpoilerMove {
    pub side: Side,
    pub color: u32,
    pub placement: Vec<Pos>,
}

pub fn apply_spoiler_move(s: &GameState, m: &SpoilerMove) -> Result<GameState, GameError> {
    if s.pending.is_some() {
        return Err(GameError::HalfRoundPending);
    }
    if m.color <= s.round {
        return Err(GameError::ColorReused(m.color));
    }
    if m.color != s.round + 1 {
        return Err(GameError::ColorOutOfOrder { expected: s.round + 1, got: m.color });
    }
    let boards = s.side(m.side);
    if boards.len() != m.placement.len() {
        return Err(GameError::PlacementSize { expected: boards.len(), got: m.placement.len() });
    }
    let placed = boards
        .iter()
        .zip(&m.placement)
        .map(|(b, &p)| b.place(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut next = s.clone();
    *next.side_mut(m.side) = normalize(placed);
    next.pending = Some((m.side, m.color));
    Ok(next)
}

pub fn oblivious_expand(s: &GameState, side: Side, color: u32) -> Result<GameState, GameError> {
    expand_with(s, side, color, None)
}

fn expand_with(s: &GameState, side: Side, color: u32, cap: Option<u32>) -> Result<GameState, GameError> {
    match s.pending {
        Some((played, c)) if played == side.other() && c == color => {}
        _ => return Err(GameError::NoPendingMove),
    }
    let mut children = Vec::new();
    for b in s.side(side) {
        for p in b.representative_positions(cap) {
            children.push(b.place(p)?);
        }
    }
    let mut next = s.clone();
    *next.side_mut(side) = normalize(children);
    next.round += 1;
    next.history.push((side.other(), color));
    next.pending = None;
    Ok(next)
}

/// Types removed from each side by one discard.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiscardLog {
    pub left: BTreeSet<AtomicType>,
    pub right: BTreeSet<AtomicType>,
    pub kept: BTreeSet<AtomicType>,
}

pub fn discard_unmatched(s: &GameState) -> GameState {
    discard_logged(s).0
}

pub fn discard_logged(s: &GameState) -> (GameState, DiscardLog) {
    let lt: Vec<AtomicType> = s.left.iter().map(atomic_type).collect();
    let rt: Vec<AtomicType> = s.right.iter().map(atomic_type).collect();
    let lset: HashSet<&AtomicType> = lt.iter().collect();
    let rset: HashSet<&AtomicType> = rt.iter().collect();
    let mut log = DiscardLog::default();
    let mut next = s.clone();
    next.left.clear();
    next.right.clear();
    for (b, t) in s.left.iter().zip(&lt) {
        if rset.contains(t) {
            next.left.push(b.clone());
            log.kept.insert(t.clone());
        } else {
            log.left.insert(t.clone());
        }
    }
    for (b, t) in s.right.iter().zip(&rt) {
        if lset.contains(t) {
            next.right.push(b.clone());
        } else {
            log.right.insert(t.clone());
        }
    }
    (next, log)
}

pub fn has_matching_pair(s: &GameState) -> bool {
    let lset: HashSet<AtomicType> = s.left.iter().map(atomic_type).collect();
    s.right.iter().any(|b| lset.contains(&atomic_type(b)))
}

/// Keeps one board per class of rank-`k` equivalent linear-order boards
/// (gaps capped at `2^k`). String boards are untouched.
pub fn rank_quotient(boards: Vec<PebbledBoard>, k: u32) -> Vec<PebbledBoard> {
    let Some(cap) = rank_cap(k) else { return boards };
    let mut seen = HashSet::new();
    boards.into_iter().filter(|b| seen.insert(b.cap_gaps(cap))).collect()
}

/// Gap cap for rank `k`, or `None` when no order in practice reaches it.
pub fn rank_cap(k: u32) -> Option<u32> {
    (k < 30).then(|| 1u32 << k)
}

pub type BranchId = Vec<u32>;

/// A Spoiler strategy that decides each board independently.
///
/// At round `t` (0-based) the board handed to [`place`](Self::place)
/// carries exactly `t` pebbles from this player's own play.
pub trait StrategyPlayer: Send + Sync {
    fn pattern(&self) -> Pattern;
    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError>;
    fn branch(&self, _board: &PebbledBoard, _side: Side) -> Option<BranchId> {
        None
    }
    fn name(&self) -> String;
}

pub type SharedPlayer = Arc<dyn StrategyPlayer>;

/// Plays `first` for its pattern, then `second` on boards stripped of the
/// first phase's pebbles.
pub struct Sequence {
    pub first: SharedPlayer,
    pub second: SharedPlayer,
}

impl StrategyPlayer for Sequence {
    fn pattern(&self) -> Pattern {
        self.first.pattern().concat(&self.second.pattern())
    }

    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        let k = self.first.pattern().len();
        if round < k {
            return self.first.place(board, side, round);
        }
        let keep: Vec<usize> = (k..board.pebble_count()).collect();
        self.second.place(&board.restrict(&keep), side, round - k)
    }

    fn branch(&self, board: &PebbledBoard, side: Side) -> Option<BranchId> {
        let k = self.first.pattern().len();
        if board.pebble_count() < k {
            return None;
        }
        let keep: Vec<usize> = (k..board.pebble_count()).collect();
        self.second.branch(&board.restrict(&keep), side)
    }

    fn name(&self) -> String {
        format!("{} ; {}", self.first.name(), self.second.name())
    }
}

/// Places every pebble at one fixed role on each board.
pub struct FixedMoves {
    pub pattern: Pattern,
    pub at: fn(&PebbledBoard) -> Pos,
    pub label: &'static str,
}

impl StrategyPlayer for FixedMoves {
    fn pattern(&self) -> Pattern {
        self.pattern.clone()
    }

    fn place(&self, board: &PebbledBoard, _side: Side, _round: usize) -> Result<Pos, GameError> {
        Ok((self.at)(board))
    }

    fn name(&self) -> String {
        self.label.to_string()
    }
}

pub type Router = Arc<dyn Fn(&PebbledBoard, Side) -> Option<usize> + Send + Sync>;

/// One sub-game of a parallel composition.
pub struct SubGame {
    pub player: SharedPlayer,
    pub pattern: Pattern,
    /// First master round the sub-game may use.
    pub start: usize,
}

pub struct ParallelPlayer {
    prelude: Option<SharedPlayer>,
    master: Pattern,
    subs: Vec<(SubGame, Vec<usize>)>,
    router: Router,
}

/// Plays the sub-games in lockstep on `master`. Rounds a sub-game skips get
/// a dummy pebble on min. The router assigns a board to a sub-game from the
/// full board, prelude pebbles included; sub-players only see the pebbles
/// of their own rounds.
pub fn schedule_parallel(
    prelude: Option<SharedPlayer>,
    subs: Vec<SubGame>,
    master: Pattern,
    router: Router,
) -> Result<ParallelPlayer, GameError> {
    let mut placed = Vec::with_capacity(subs.len());
    for sub in subs {
        let slots = embed(&sub.pattern, &master, sub.start).ok_or_else(|| GameError::NotEmbeddable {
            sub: sub.pattern.clone(),
            master: master.clone(),
        })?;
        placed.push((sub, slots));
    }
    Ok(ParallelPlayer { prelude, master, subs: placed, router })
}

impl ParallelPlayer {
    fn offset(&self) -> usize {
        self.prelude.as_ref().map_or(0, |p| p.pattern().len())
    }

    fn view(&self, board: &PebbledBoard, slots: &[usize]) -> PebbledBoard {
        let off = self.offset();
        let keep: Vec<usize> = slots
            .iter()
            .map(|s| s + off)
            .take_while(|&i| i < board.pebble_count())
            .collect();
        board.restrict(&keep)
    }

    pub fn master(&self) -> &Pattern {
        &self.master
    }
}

impl StrategyPlayer for ParallelPlayer {
    fn pattern(&self) -> Pattern {
        match &self.prelude {
            Some(p) => p.pattern().concat(&self.master),
            None => self.master.clone(),
        }
    }

    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        let off = self.offset();
        if round < off {
            return self.prelude.as_ref().expect("prelude").place(board, side, round);
        }
        let t = round - off;
        let Some(idx) = (self.router)(board, side) else {
            return Ok(board.min_elem());
        };
        let (sub, slots) = &self.subs[idx];
        match slots.iter().position(|&s| s == t) {
            Some(j) => sub.player.place(&self.view(board, slots), side, j),
            None => Ok(board.min_elem()),
        }
    }

    fn branch(&self, board: &PebbledBoard, side: Side) -> Option<BranchId> {
        if board.pebble_count() <= self.offset() {
            return None;
        }
        let idx = (self.router)(board, side)?;
        let (sub, slots) = &self.subs[idx];
        let mut id = vec![idx as u32];
        if let Some(inner) = sub.player.branch(&self.view(board, slots), side) {
            id.extend(inner);
        }
        Some(id)
    }

    fn name(&self) -> String {
        format!("parallel[{}]", self.subs.len())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// Plain oblivious expansion.
    #[default]
    None,
    /// Keep one board per rank-equivalence class of linear orders, with the
    /// rank set to the number of rounds still to play.
    RankQuotient,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub reduction: Reduction,
    pub record_moves: bool,
    pub check_branches: bool,
}

/// Board census and type bookkeeping after one discard.
#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub left_before: usize,
    pub right_before: usize,
    pub left: usize,
    pub right: usize,
    pub kept_types: Vec<AtomicType>,
    pub discarded_left: Vec<AtomicType>,
    pub discarded_right: Vec<AtomicType>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Placement {
    pub board: PebbledBoard,
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub side: Side,
    pub color: u32,
    pub placements: Vec<Placement>,
    pub census: Census,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Census {
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub player: String,
    pub initial_left: Vec<PebbledBoard>,
    pub initial_right: Vec<PebbledBoard>,
    pub pattern: Pattern,
    /// `levels[0]` is the discard before any move, `levels[i]` follows round `i`.
    pub levels: Vec<Level>,
    pub rounds: Vec<RoundRecord>,
    pub won: bool,
    pub branch_collisions: usize,
}

impl Transcript {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("transcript serializes")
    }

    pub fn max_boards(&self) -> usize {
        self.levels.iter().map(|l| l.left_before + l.right_before).max().unwrap_or(0)
    }
}

impl Serialize for AtomicType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Serialize for PebbledBoard {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub won: bool,
    pub pattern: Pattern,
    pub transcript: Transcript,
}

fn level_from(before: &GameState, after: &GameState, log: DiscardLog) -> Level {
    Level {
        left_before: before.left.len(),
        right_before: before.right.len(),
        left: after.left.len(),
        right: after.right.len(),
        kept_types: log.kept.into_iter().collect(),
        discarded_left: log.left.into_iter().collect(),
        discarded_right: log.right.into_iter().collect(),
    }
}

fn count_collisions(s: &GameState, player: &dyn StrategyPlayer) -> usize {
    let mut by_type: HashMap<AtomicType, Vec<BranchId>> = HashMap::new();
    for (side, boards) in [(Side::Left, &s.left), (Side::Right, &s.right)] {
        for b in boards {
            if let Some(id) = player.branch(b, side) {
                let ids = by_type.entry(atomic_type(b)).or_default();
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
        }
    }
    let comparable = |a: &BranchId, b: &BranchId| a.starts_with(b) || b.starts_with(a);
    by_type
        .values()
        .filter(|ids| {
            ids.iter()
                .enumerate()
                .any(|(i, a)| ids[i + 1..].iter().any(|b| !comparable(a, b)))
        })
        .count()
}

fn reduce(s: GameState, opts: &RunOptions, remaining: usize) -> GameState {
    if opts.reduction == Reduction::None {
        return s;
    }
    let k = remaining as u32;
    GameState {
        left: rank_quotient(s.left, k),
        right: rank_quotient(s.right, k),
        ..s
    }
}

/// Plays `rounds` rounds of `player` against the oblivious Duplicator,
/// discarding to the fixed point after every round.
pub fn run_strategy(
    initial: &GameState,
    player: &dyn StrategyPlayer,
    rounds: usize,
    opts: &RunOptions,
) -> Result<RunOutcome, GameError> {
    let pattern = player.pattern();
    if pattern.len() < rounds {
        return Err(GameError::PatternTooShort { len: pattern.len(), rounds });
    }
    let pattern = Pattern(pattern.0[..rounds].to_vec());
    let start = reduce(initial.clone(), opts, rounds);
    let (mut state, log) = discard_logged(&start);
    let mut levels = vec![level_from(&start, &state, log)];
    let mut records = Vec::with_capacity(rounds);
    let mut collisions = 0;
    for (t, q) in pattern.0.iter().enumerate() {
        let side = q.side();
        let color = state.round + 1;
        let boards = state.side(side);
        let placement = boards
            .iter()
            .map(|b| player.place(b, side, t))
            .collect::<Result<Vec<_>, _>>()?;
        let placements = if opts.record_moves {
            boards
                .iter()
                .zip(&placement)
                .map(|(b, &pos)| Placement { board: b.clone(), pos })
                .collect()
        } else {
            Vec::new()
        };
        let moved = apply_spoiler_move(&state, &SpoilerMove { side, color, placement })?;
        let remaining = rounds - t - 1;
        let cap = match opts.reduction {
            Reduction::None => None,
            Reduction::RankQuotient => rank_cap(remaining as u32),
        };
        let expanded = reduce(expand_with(&moved, side.other(), color, cap)?, opts, remaining);
        let (next, log) = discard_logged(&expanded);
        levels.push(level_from(&expanded, &next, log));
        if opts.check_branches {
            collisions += count_collisions(&next, player);
        }
        records.push(RoundRecord {
            round: t + 1,
            side,
            color,
            placements,
            census: Census { left: next.left.len(), right: next.right.len() },
        });
        state = next;
    }
    let won = !has_matching_pair(&state);
    Ok(RunOutcome {
        won,
        pattern: pattern.clone(),
        transcript: Transcript {
            player: player.name(),
            initial_left: initial.left.clone(),
            initial_right: initial.right.clone(),
            pattern,
            levels,
            rounds: records,
            won,
            branch_collisions: collisions,
        },
    })
}
