//! Quantifier-count recurrences and Spoiler strategies on linear orders:
//! closest-to-midpoint play with alternation, finite stand-ins for the set
//! of longer orders, and the alternating and exact-length separators.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::game::{
    schedule_parallel, BranchId, FixedMoves, GameError, GameState, Pattern, Quantifier, Router, Sequence,
    Side, StrategyPlayer, SubGame,
};
use crate::structures::{closest_to_midpoint, PebbledBoard, Pos, Segment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("length must be at least 1")]
    ZeroLength,
    #[error("{0} is irreducible and must be played as a base case")]
    Irreducible(MslSpec),
    #[error("{spec} needs at least {needed} rounds")]
    TooFewRounds { spec: MslSpec, needed: u32 },
    #[error("no plan fits {length} into pattern {pattern}")]
    NoPlan { length: u32, pattern: Pattern },
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<OrderError> for GameError {
    fn from(e: OrderError) -> Self {
        match e {
            OrderError::Game(g) => g,
            other => GameError::Refused(other.to_string()),
        }
    }
}

/// The game on `(L_{<=length}, L_{>length})` with `rounds` rounds and a
/// forced first side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MslSpec {
    pub q: Quantifier,
    pub rounds: u32,
    pub length: u32,
}

impl MslSpec {
    pub fn new(q: Quantifier, rounds: u32, length: u32) -> Self {
        MslSpec { q, rounds, length }
    }
}

impl std::fmt::Display for MslSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.q.symbol(), self.rounds, self.length)
    }
}

/// `1 + floor(log2 l)`.
pub fn q_rank(l: u32) -> u32 {
    assert!(l >= 1, "length must be positive");
    32 - l.leading_zeros()
}

pub fn q_star_forall(l: u32) -> u32 {
    assert!(l >= 1, "length must be positive");
    match l {
        1 => 1,
        2 => 2,
        _ => q_star_exists(l / 2) + 1,
    }
}

pub fn q_star_exists(l: u32) -> u32 {
    assert!(l >= 1, "length must be positive");
    match l {
        1 => 2,
        _ => q_star_forall(l.div_ceil(2)) + 1,
    }
}

pub fn q_star_of(q: Quantifier, l: u32) -> u32 {
    match q {
        Quantifier::Exists => q_star_exists(l),
        Quantifier::Forall => q_star_forall(l),
    }
}

pub fn q_star(l: u32) -> u32 {
    q_star_exists(l).min(q_star_forall(l))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub length: u32,
    pub r_of_l: u32,
    pub q_star_forall: u32,
    pub q_star_exists: u32,
    pub q_star: u32,
}

pub fn budget(l: u32) -> Budget {
    Budget {
        length: l,
        r_of_l: q_rank(l),
        q_star_forall: q_star_forall(l),
        q_star_exists: q_star_exists(l),
        q_star: q_star(l),
    }
}

/// Memo of budgets for `1..=max_l`, filled bottom-up.
pub fn qtable(max_l: u32) -> Vec<Budget> {
    let n = max_l as usize;
    let mut fa = vec![0u32; n + 1];
    let mut ex = vec![0u32; n + 1];
    for l in 1..=n {
        fa[l] = match l {
            1 => 1,
            2 => 2,
            _ => ex[l / 2] + 1,
        };
        ex[l] = if l == 1 { 2 } else { fa[l.div_ceil(2)] + 1 };
    }
    (1..=n)
        .map(|l| Budget {
            length: l as u32,
            r_of_l: q_rank(l as u32),
            q_star_forall: fa[l],
            q_star_exists: ex[l],
            q_star: fa[l].min(ex[l]),
        })
        .collect()
}

/// Published values for lengths 1..=127 as `(from, to, q*_A, q*_E, q*, r)`.
pub const PUBLISHED_TABLE: [(u32, u32, u32, u32, u32, u32); 18] = [
    (1, 1, 1, 2, 1, 1),
    (2, 2, 2, 2, 2, 2),
    (3, 3, 3, 3, 3, 2),
    (4, 4, 3, 3, 3, 3),
    (5, 5, 3, 4, 3, 3),
    (6, 7, 4, 4, 4, 3),
    (8, 9, 4, 4, 4, 4),
    (10, 10, 5, 4, 4, 4),
    (11, 15, 5, 5, 5, 4),
    (16, 18, 5, 5, 5, 5),
    (19, 21, 5, 6, 5, 5),
    (22, 31, 6, 6, 6, 5),
    (32, 37, 6, 6, 6, 6),
    (38, 42, 7, 6, 6, 6),
    (43, 63, 7, 7, 7, 6),
    (64, 75, 7, 7, 7, 7),
    (76, 85, 7, 8, 7, 7),
    (86, 127, 8, 8, 8, 7),
];

/// Rows of [`qtable`] that disagree with [`PUBLISHED_TABLE`].
pub fn golden_diffs(rows: &[Budget]) -> Vec<(Budget, (u32, u32, u32, u32))> {
    let mut out = Vec::new();
    for row in rows {
        let Some(&(_, _, fa, ex, q, r)) =
            PUBLISHED_TABLE.iter().find(|g| g.0 <= row.length && row.length <= g.1)
        else {
            continue;
        };
        if (row.q_star_forall, row.q_star_exists, row.q_star, row.r_of_l) != (fa, ex, q, r) {
            out.push((*row, (fa, ex, q, r)));
        }
    }
    out
}

/// Splits a reducible game into its two sub-games, larger length first.
pub fn split(spec: MslSpec) -> Result<(MslSpec, MslSpec), OrderError> {
    let MslSpec { q, rounds, length } = spec;
    let reducible = rounds >= 2
        && match q {
            Quantifier::Exists => length >= 2,
            Quantifier::Forall => length >= 3,
        };
    if !reducible {
        return Err(OrderError::Irreducible(spec));
    }
    let (la, lb) = child_lengths(q, length);
    let k = rounds - 1;
    Ok((MslSpec::new(q.dual(), k, lb), MslSpec::new(q.dual(), k, la)))
}

/// Bounds for the part left of the split pebble and the part right of it.
fn child_lengths(q: Quantifier, l: u32) -> (u32, u32) {
    match q {
        Quantifier::Exists => (l / 2, l.div_ceil(2)),
        Quantifier::Forall => ((l + 1) / 2 - 1, (l + 1).div_ceil(2) - 1),
    }
}

/// Pattern of the optimal closest-to-midpoint strategy for `(q, l)`.
pub fn cma_pattern(q: Quantifier, l: u32) -> Pattern {
    use Quantifier::*;
    match (q, l) {
        (Forall, 1) => Pattern(vec![Forall]),
        (Exists, 1) => Pattern(vec![Exists, Forall]),
        (Forall, 2) => Pattern(vec![Forall, Forall]),
        _ => {
            let (la, lb) = child_lengths(q, l);
            let big = if q_star_of(q.dual(), lb) >= q_star_of(q.dual(), la) { lb } else { la };
            Pattern(vec![q]).concat(&cma_pattern(q.dual(), big))
        }
    }
}

/// Pattern used with `rounds` rounds: the optimal one, except that base
/// case `(A, 2)` with a spare round becomes `A E A`, then alternating
/// dummy rounds.
pub fn cma_pattern_with_rounds(spec: MslSpec) -> Result<Pattern, OrderError> {
    let needed = q_star_of(spec.q, spec.length);
    if spec.rounds < needed {
        return Err(OrderError::TooFewRounds { spec, needed });
    }
    let mut base = if spec.q == Quantifier::Forall && spec.length == 2 && spec.rounds >= 3 {
        Pattern::parse("AEA").expect("literal")
    } else {
        cma_pattern(spec.q, spec.length)
    };
    while base.len() < spec.rounds as usize {
        let last = *base.0.last().expect("nonempty");
        base.0.push(last.dual());
    }
    Ok(base)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Short,
    Long,
}

#[derive(Clone, Debug)]
enum Node {
    Split { q: Quantifier, first: usize, la: u32, kids: Box<[Node; 2]> },
    /// One universal move strictly inside the segment.
    Interior { slot: usize },
    /// A dummy existential move on the segment start, then one interior
    /// universal move.
    DummyThenInterior { slot: usize },
    /// Two distinct interior universal moves.
    TwoInterior { slots: [usize; 2] },
}

fn next_forall(p: &Pattern, from: usize) -> Option<usize> {
    (from..p.len()).find(|&j| p.0[j] == Quantifier::Forall)
}

/// Plans `(q, l)` starting at master index `at`, nesting sub-games into
/// the rest of `master` leftmost-first.
fn plan(q: Quantifier, l: u32, master: &Pattern, at: usize) -> Option<Node> {
    use Quantifier::*;
    if master.0.get(at) != Some(&q) {
        return None;
    }
    match (q, l) {
        (Forall, 1) => Some(Node::Interior { slot: at }),
        (Exists, 1) => Some(Node::DummyThenInterior { slot: next_forall(master, at + 1)? }),
        (Forall, 2) => Some(Node::TwoInterior { slots: [at, next_forall(master, at + 1)?] }),
        _ => {
            let (la, lb) = child_lengths(q, l);
            let a = plan(q.dual(), la, master, at + 1)?;
            let b = plan(q.dual(), lb, master, at + 1)?;
            Some(Node::Split { q, first: at, la, kids: Box::new([a, b]) })
        }
    }
}

enum Where<'a> {
    Active(&'a Node, Segment),
    Pending(&'a Node, Segment, Pos),
    Stray,
}

/// Stateless closest-to-midpoint player. Each board's sub-game and active
/// segment are recovered by replaying its pebbles through the plan.
pub struct CmaPlayer {
    root: Node,
    master: Pattern,
    short: Side,
    label: String,
}

impl CmaPlayer {
    fn role(&self, side: Side) -> Role {
        if side == self.short {
            Role::Short
        } else {
            Role::Long
        }
    }

    /// Side on which a quantifier of the plan is played.
    fn plays_on(&self, q: Quantifier) -> Role {
        match q {
            Quantifier::Exists => Role::Short,
            Quantifier::Forall => Role::Long,
        }
    }

    fn locate(&self, board: &PebbledBoard, role: Role) -> (Where<'_>, BranchId, bool) {
        let mut here = Where::Active(&self.root, Segment { lo: board.min_elem(), hi: board.max_elem() });
        let mut id = Vec::new();
        let mut tentative = false;
        for (u, &y) in board.pebbles().iter().enumerate() {
            tentative = false;
            // Copies waiting on the split pebble learn their part from the
            // children's first move, which is also that child's own split round.
            if let Where::Pending(node, seg, p) = here {
                let Node::Split { kids, .. } = node else { unreachable!() };
                here = if !seg.contains(y) {
                    Where::Stray
                } else if y < p {
                    id.push(0);
                    Where::Active(&kids[0], Segment { lo: seg.lo, hi: p })
                } else {
                    id.push(1);
                    Where::Active(&kids[1], Segment { lo: p, hi: seg.hi })
                };
            }
            let Where::Active(node, seg) = here else { continue };
            let Node::Split { q, first, la, kids } = node else { continue };
            if *first != u {
                continue;
            }
            here = if self.plays_on(*q) == role {
                Where::Pending(node, seg, y)
            } else if !seg.contains(y) {
                Where::Stray
            } else {
                let left_len = y - seg.lo;
                let to_a = match q {
                    Quantifier::Exists => left_len > *la,
                    Quantifier::Forall => left_len <= *la,
                };
                tentative = true;
                if to_a {
                    id.push(0);
                    Where::Active(&kids[0], Segment { lo: seg.lo, hi: y })
                } else {
                    id.push(1);
                    Where::Active(&kids[1], Segment { lo: y, hi: seg.hi })
                }
            };
        }
        (here, id, tentative)
    }

    pub fn master(&self) -> &Pattern {
        &self.master
    }
}

fn interior(seg: Segment) -> Pos {
    closest_to_midpoint(seg).unwrap_or(seg.lo)
}

impl StrategyPlayer for CmaPlayer {
    fn pattern(&self) -> Pattern {
        match self.short {
            Side::Left => self.master.clone(),
            Side::Right => self.master.dual(),
        }
    }

    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        let (here, _, _) = self.locate(board, self.role(side));
        let t = round;
        Ok(match here {
            Where::Stray => board.min_elem(),
            Where::Pending(_, seg, _) => seg.lo,
            Where::Active(node, seg) => match node {
                Node::Split { first, .. } if *first == t => interior(seg),
                Node::Interior { slot } if *slot == t => interior(seg),
                Node::DummyThenInterior { slot, .. } if *slot == t => interior(seg),
                Node::TwoInterior { slots } if slots[0] == t => (seg.lo + 1).min(seg.hi),
                Node::TwoInterior { slots } if slots[1] == t => (seg.lo + 2).min(seg.hi),
                _ => seg.lo,
            },
        })
    }

    fn branch(&self, board: &PebbledBoard, side: Side) -> Option<BranchId> {
        let (here, mut id, tentative) = self.locate(board, self.role(side));
        match here {
            Where::Stray => None,
            _ => {
                if tentative {
                    id.pop();
                }
                Some(id)
            }
        }
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// Closest-to-midpoint player for `spec`, refusing budgets below q*.
pub fn cma_player(spec: MslSpec) -> Result<CmaPlayer, OrderError> {
    if spec.length == 0 {
        return Err(OrderError::ZeroLength);
    }
    let master = cma_pattern_with_rounds(spec)?;
    let root = plan(spec.q, spec.length, &master, 0)
        .ok_or_else(|| OrderError::NoPlan { length: spec.length, pattern: master.clone() })?;
    Ok(CmaPlayer { root, master, short: Side::Left, label: format!("cma{spec}") })
}

/// `{L_m : l+1 <= m <= max(2l+2, 2^(r+1))}`.
pub fn surrogate_above(l: u32, rounds: u32) -> Vec<PebbledBoard> {
    let top = (2 * l + 2).max(1u32 << (rounds + 1).min(31));
    (l + 1..=top).map(|m| PebbledBoard::order(m).expect("positive")).collect()
}

pub fn orders_up_to(l: u32) -> Vec<PebbledBoard> {
    (1..=l).map(|m| PebbledBoard::order(m).expect("positive")).collect()
}

/// The instance `(L_{<=l}, surrogate_above(l, rounds))`.
pub fn msl_instance(l: u32, rounds: u32) -> GameState {
    GameState::new(orders_up_to(l), surrogate_above(l, rounds)).expect("unpebbled")
}

/// Plan for `(L_{<=l}, L_{>l})` fitted to an alternating pattern of length
/// q*(l) that ends with a universal move, with an optional leading dummy.
fn alternating_plan(l: u32, lead_dummy: bool, short: Side, label: String) -> Result<CmaPlayer, OrderError> {
    let q = q_star(l) as usize;
    let len = q + usize::from(lead_dummy);
    let master = Pattern::alternating_ending(Quantifier::Forall, len);
    let at = usize::from(lead_dummy);
    let root = plan(master.0[at], l, &master, at)
        .ok_or_else(|| OrderError::NoPlan { length: l, pattern: master.clone() })?;
    Ok(CmaPlayer { root, master, short, label })
}

/// Strictly alternating separator of `L_{<=l}` from longer orders with
/// q*(l) rounds, ending with a universal move.
pub fn alternating_separator(l: u32) -> Result<CmaPlayer, OrderError> {
    if l == 0 {
        return Err(OrderError::ZeroLength);
    }
    alternating_plan(l, false, Side::Left, format!("alternating({l})"))
}

/// The instance `({L_l}, L_{<l} ∪ surrogate_above(l, rounds))`.
pub fn exact_length_instance(l: u32, rounds: u32) -> GameState {
    let mut right = orders_up_to(l - 1);
    right.extend(surrogate_above(l, rounds));
    GameState::new(vec![PebbledBoard::order(l).expect("positive")], right).expect("unpebbled")
}

fn on_max(b: &PebbledBoard) -> Pos {
    b.max_elem()
}

/// Separator of `L_l` from every other length: alternating, starts and
/// ends with a universal move, at most q*(l)+2 rounds.
pub fn exact_length_separator(l: u32) -> Result<Arc<dyn StrategyPlayer>, OrderError> {
    if l == 0 {
        return Err(OrderError::ZeroLength);
    }
    if l == 1 {
        return Ok(Arc::new(alternating_separator(1)?));
    }
    let q = q_star(l);
    let pad = q > q_star(l - 1);
    // Strategy for the shorter orders, played with the short orders on the right.
    let s1 = alternating_plan(l - 1, pad, Side::Right, format!("below({})", l - 1))?;
    let s2 = alternating_separator(l)?;
    let p1 = s1.pattern();
    let p2 = s2.pattern();
    let mark = || -> Arc<dyn StrategyPlayer> {
        Arc::new(FixedMoves { pattern: Pattern(vec![Quantifier::Forall]), at: on_max, label: "mark-max" })
    };
    let s1: Arc<dyn StrategyPlayer> = Arc::new(s1);
    let s2: Arc<dyn StrategyPlayer> = Arc::new(s2);
    // Sub-game 0 holds the shorter orders, sub-game 1 the longer ones.
    let (master, subs, marked) = if p1.0[0] == Quantifier::Forall {
        let master = Pattern(vec![Quantifier::Forall]).concat(&p2);
        let second = Arc::new(Sequence { first: mark(), second: s2 });
        let subs = vec![
            SubGame { pattern: p1, player: s1, start: 0 },
            SubGame { pattern: second.pattern(), player: second, start: 0 },
        ];
        (master, subs, 1usize)
    } else {
        let mut master = Pattern(vec![Quantifier::Forall]).concat(&p1);
        master.0.push(Quantifier::Forall);
        let first = Arc::new(Sequence { first: mark(), second: s1 });
        let subs = vec![
            SubGame { pattern: first.pattern(), player: first, start: 0 },
            SubGame { pattern: p2, player: s2, start: 0 },
        ];
        (master, subs, 0usize)
    };
    let router: Router = Arc::new(move |b: &PebbledBoard, side: Side| {
        let len = b.max_elem() - b.min_elem();
        match side {
            Side::Right if len < l => Some(0),
            Side::Right => Some(1),
            Side::Left => {
                let first = b.position_of(1)?;
                Some(if first == b.max_elem() { marked } else { 1 - marked })
            }
        }
    });
    Ok(Arc::new(schedule_parallel(None, subs, master, router)?))
}
