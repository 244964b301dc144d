//! Prenex first-order sentences over orders and strings: parsing,
//! rendering, model checking, synthesis from won transcripts and
//! formula-driven Spoiler play.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameError, GameState, Pattern, Quantifier, Side, StrategyPlayer, Transcript};
use crate::structures::{atomic_type, AtomicType, Member, PebbledBoard, Pos, Structure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable x{0} is bound twice")]
    Rebound(u32),
    #[error("variable x{0} is not bound")]
    Unbound(u32),
    #[error("S-atom evaluated on a linear order")]
    SOnOrder,
    #[error("board carries {pebbles} pebbles but the sentence has {quantifiers} quantifiers")]
    TooManyPebbles { pebbles: usize, quantifiers: usize },
    #[error("transcript is not a win")]
    NotWon,
    #[error("sentence is false on left board {0}")]
    FalseOnLeft(String),
    #[error("sentence is true on right board {0}")]
    TrueOnRight(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Var(u32),
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Lt(Term, Term),
    Eq(Term, Term),
    S(Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matrix {
    True,
    False,
    Atom(Atom),
    Not(Box<Matrix>),
    And(Vec<Matrix>),
    Or(Vec<Matrix>),
}

impl Matrix {
    pub fn atom(a: Atom) -> Matrix {
        Matrix::Atom(a)
    }

    pub fn not(m: Matrix) -> Matrix {
        match m {
            Matrix::True => Matrix::False,
            Matrix::False => Matrix::True,
            other => Matrix::Not(Box::new(other)),
        }
    }

    /// Conjunction with constants folded and a single conjunct unwrapped.
    pub fn and(items: Vec<Matrix>) -> Matrix {
        let mut out = Vec::with_capacity(items.len());
        for m in items {
            match m {
                Matrix::True => {}
                Matrix::False => return Matrix::False,
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Matrix::True,
            1 => out.pop().expect("one item"),
            _ => Matrix::And(out),
        }
    }

    pub fn or(items: Vec<Matrix>) -> Matrix {
        let mut out = Vec::with_capacity(items.len());
        for m in items {
            match m {
                Matrix::False => {}
                Matrix::True => return Matrix::True,
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Matrix::False,
            1 => out.pop().expect("one item"),
            _ => Matrix::Or(out),
        }
    }

    fn visit_terms(&self, f: &mut impl FnMut(Term)) {
        match self {
            Matrix::True | Matrix::False => {}
            Matrix::Atom(Atom::Lt(a, b) | Atom::Eq(a, b)) => {
                f(*a);
                f(*b);
            }
            Matrix::Atom(Atom::S(a)) => f(*a),
            Matrix::Not(m) => m.visit_terms(f),
            Matrix::And(ms) | Matrix::Or(ms) => ms.iter().for_each(|m| m.visit_terms(f)),
        }
    }

    /// Number of atom occurrences.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit_terms(&mut |_| n += 1);
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    prefix: Vec<(Quantifier, u32)>,
    matrix: Matrix,
}

impl Formula {
    pub fn new(prefix: Vec<(Quantifier, u32)>, matrix: Matrix) -> Result<Formula, FormulaError> {
        let mut seen = Vec::with_capacity(prefix.len());
        for &(_, v) in &prefix {
            if seen.contains(&v) {
                return Err(FormulaError::Rebound(v));
            }
            seen.push(v);
        }
        let mut unbound = None;
        matrix.visit_terms(&mut |t| {
            if let Term::Var(v) = t {
                if !seen.contains(&v) && unbound.is_none() {
                    unbound = Some(v);
                }
            }
        });
        match unbound {
            Some(v) => Err(FormulaError::Unbound(v)),
            None => Ok(Formula { prefix, matrix }),
        }
    }

    pub fn prefix(&self) -> &[(Quantifier, u32)] {
        &self.prefix
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn quantifier_count(&self) -> usize {
        self.prefix.len()
    }

    pub fn signature(&self) -> Pattern {
        Pattern(self.prefix.iter().map(|&(q, _)| q).collect())
    }

    /// The same sentence behind one extra unused quantifier.
    pub fn with_leading_dummy(&self, q: Quantifier) -> Formula {
        let fresh = self.prefix.iter().map(|&(_, v)| v).max().unwrap_or(0) + 1;
        let mut prefix = vec![(q, fresh)];
        prefix.extend_from_slice(&self.prefix);
        Formula { prefix, matrix: self.matrix.clone() }
    }
}

fn term_text(t: Term) -> String {
    match t {
        Term::Var(v) => format!("x{v}"),
        Term::Min => "min".into(),
        Term::Max => "max".into(),
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Lt(a, b) => write!(f, "{} < {}", term_text(*a), term_text(*b)),
            Atom::Eq(a, b) => write!(f, "{} = {}", term_text(*a), term_text(*b)),
            Atom::S(a) => write!(f, "S({})", term_text(*a)),
        }
    }
}

fn render_matrix(m: &Matrix, out: &mut String) {
    let wrapped = |child: &Matrix, parent_and: bool| match child {
        Matrix::And(_) => parent_and,
        Matrix::Or(_) => true,
        _ => false,
    };
    match m {
        Matrix::True => out.push_str("true"),
        Matrix::False => out.push_str("false"),
        Matrix::Atom(a) => out.push_str(&a.to_string()),
        Matrix::Not(inner) => {
            out.push('!');
            match **inner {
                Matrix::And(_) | Matrix::Or(_) | Matrix::Atom(Atom::Lt(..) | Atom::Eq(..)) => {
                    out.push('(');
                    render_matrix(inner, out);
                    out.push(')');
                }
                _ => render_matrix(inner, out),
            }
        }
        Matrix::And(ms) | Matrix::Or(ms) => {
            let is_and = matches!(m, Matrix::And(_));
            for (i, child) in ms.iter().enumerate() {
                if i > 0 {
                    out.push_str(if is_and { " & " } else { " | " });
                }
                let paren = if is_and { wrapped(child, true) } else { matches!(child, Matrix::Or(_)) };
                if paren {
                    out.push('(');
                }
                render_matrix(child, out);
                if paren {
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render_matrix(self, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(q, v) in &self.prefix {
            write!(f, "{} x{v} . ", q.letter())?;
        }
        write!(f, "{}", self.matrix)
    }
}

pub fn render(f: &Formula) -> String {
    f.to_string()
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax { offset: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), FormulaError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(format!("expected `{tok}`"))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let n = rest.find(|c: char| !c.is_ascii_alphanumeric() && c != '_').unwrap_or(rest.len());
        self.pos += n;
        &rest[..n]
    }

    fn peek_word(&mut self) -> &'a str {
        let save = self.pos;
        let w = self.word();
        self.pos = save;
        w
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        let start = self.pos;
        let w = self.word();
        match w {
            "min" => Ok(Term::Min),
            "max" => Ok(Term::Max),
            _ => match w.strip_prefix('x').and_then(|d| d.parse::<u32>().ok()) {
                Some(v) => Ok(Term::Var(v)),
                None => {
                    self.pos = start;
                    self.err("expected a variable, `min` or `max`")
                }
            },
        }
    }

    fn variable(&mut self) -> Result<u32, FormulaError> {
        match self.term()? {
            Term::Var(v) => Ok(v),
            _ => self.err("expected a variable"),
        }
    }

    fn implication(&mut self) -> Result<Matrix, FormulaError> {
        let lhs = self.disjunction()?;
        if self.eat("->") {
            let rhs = self.implication()?;
            return Ok(Matrix::or(vec![Matrix::not(lhs), rhs]));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Matrix, FormulaError> {
        let mut items = vec![self.conjunction()?];
        while self.eat("|") {
            items.push(self.conjunction()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { Matrix::Or(items) })
    }

    fn conjunction(&mut self) -> Result<Matrix, FormulaError> {
        let mut items = vec![self.unary()?];
        while self.eat("&") {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { Matrix::And(items) })
    }

    fn unary(&mut self) -> Result<Matrix, FormulaError> {
        if self.eat("!") {
            return Ok(Matrix::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let inner = self.implication()?;
            self.expect(")")?;
            return Ok(inner);
        }
        match self.peek_word() {
            "true" => {
                self.word();
                Ok(Matrix::True)
            }
            "false" => {
                self.word();
                Ok(Matrix::False)
            }
            "S" => {
                self.word();
                self.expect("(")?;
                let t = self.term()?;
                self.expect(")")?;
                Ok(Matrix::Atom(Atom::S(t)))
            }
            _ => {
                let a = self.term()?;
                if self.eat("<") {
                    Ok(Matrix::Atom(Atom::Lt(a, self.term()?)))
                } else if self.eat("=") {
                    Ok(Matrix::Atom(Atom::Eq(a, self.term()?)))
                } else {
                    self.err("expected `<` or `=`")
                }
            }
        }
    }
}

/// Parses `E x1 . A x2 . matrix` with connectives `! & | ->`.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser { text, pos: 0 };
    let mut prefix = Vec::new();
    loop {
        let save = p.pos;
        let q = match p.word() {
            "E" => Quantifier::Exists,
            "A" => Quantifier::Forall,
            _ => {
                p.pos = save;
                break;
            }
        };
        let v = p.variable()?;
        p.expect(".")?;
        prefix.push((q, v));
    }
    let matrix = p.implication()?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.err("trailing input");
    }
    Formula::new(prefix, matrix)
}

/// Evaluation context: values of the first `bound` prefix variables.
struct Env<'a> {
    base: &'a Structure,
    slot: &'a HashMap<u32, usize>,
    values: &'a [Pos],
}

impl Env<'_> {
    fn term(&self, t: Term) -> Option<Pos> {
        match t {
            Term::Min => Some(self.base.min_elem()),
            Term::Max => Some(self.base.max_elem()),
            Term::Var(v) => self.values.get(self.slot[&v]).copied(),
        }
    }

    /// Kleene evaluation: `None` when an unbound variable decides the value.
    fn eval(&self, m: &Matrix) -> Result<Option<bool>, FormulaError> {
        Ok(match m {
            Matrix::True => Some(true),
            Matrix::False => Some(false),
            Matrix::Atom(a) => match *a {
                Atom::Lt(x, y) => self.term(x).zip(self.term(y)).map(|(x, y)| x < y),
                Atom::Eq(x, y) => self.term(x).zip(self.term(y)).map(|(x, y)| x == y),
                Atom::S(x) => match self.term(x) {
                    None => None,
                    Some(p) => Some(self.base.s_bit(p).ok_or(FormulaError::SOnOrder)?),
                },
            },
            Matrix::Not(inner) => self.eval(inner)?.map(|b| !b),
            Matrix::And(ms) => {
                let mut unknown = false;
                for c in ms {
                    match self.eval(c)? {
                        Some(false) => return Ok(Some(false)),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                (!unknown).then_some(true)
            }
            Matrix::Or(ms) => {
                let mut unknown = false;
                for c in ms {
                    match self.eval(c)? {
                        Some(true) => return Ok(Some(true)),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                (!unknown).then_some(false)
            }
        })
    }
}

fn gap_cap(remaining: usize) -> Option<u32> {
    (remaining < 30).then(|| 1u32 << remaining)
}

/// Suffix values by gap-capped board, and matrix values by atomic type
/// (the matrix only sees the type).
#[derive(Default)]
struct Memo {
    boards: HashMap<PebbledBoard, bool>,
    types: HashMap<AtomicType, Option<bool>>,
}

/// Evaluator for one sentence, memoized on gap-capped boards.
struct Checker<'a> {
    f: &'a Formula,
    slot: HashMap<u32, usize>,
}

impl<'a> Checker<'a> {
    fn new(f: &'a Formula) -> Self {
        let slot = f.prefix.iter().enumerate().map(|(i, &(_, v))| (v, i)).collect();
        Checker { f, slot }
    }

    /// Truth of the quantifier suffix after `board.pebble_count()` bound variables.
    fn holds(&self, board: &PebbledBoard, memo: &mut Memo) -> Result<bool, FormulaError> {
        let level = board.pebble_count();
        let r = self.f.prefix.len();
        if level > r {
            return Err(FormulaError::TooManyPebbles { pebbles: level, quantifiers: r });
        }
        let t = atomic_type(board);
        let direct = match memo.types.get(&t) {
            Some(&v) => v,
            None => {
                let env = Env { base: board.base(), slot: &self.slot, values: board.pebbles() };
                let v = env.eval(&self.f.matrix)?;
                memo.types.insert(t, v);
                v
            }
        };
        if let Some(v) = direct {
            return Ok(v);
        }
        let key = match (board.base(), gap_cap(r - level)) {
            (Structure::Order(_), Some(cap)) => board.cap_gaps(cap),
            _ => board.clone(),
        };
        if let Some(&v) = memo.boards.get(&key) {
            return Ok(v);
        }
        let want = self.f.prefix[level].0 == Quantifier::Exists;
        let mut value = !want;
        for p in key.representative_positions(gap_cap(r - level - 1)) {
            if self.holds(&key.place(p).expect("in universe"), memo)? == want {
                value = want;
                break;
            }
        }
        memo.boards.insert(key, value);
        Ok(value)
    }
}

/// Truth of `f` on `b`, with `b`'s pebbles instantiating the leading
/// quantified variables in order.
pub fn model_check(f: &Formula, b: &PebbledBoard) -> Result<bool, FormulaError> {
    Checker::new(f).holds(b, &mut Memo::default())
}

/// Checks `f` on a whole instance, sharing one memo per side.
pub fn separates(f: &Formula, left: &[PebbledBoard], right: &[PebbledBoard]) -> Result<(), FormulaError> {
    let c = Checker::new(f);
    let mut memo = Memo::default();
    for b in left {
        if !c.holds(b, &mut memo)? {
            return Err(FormulaError::FalseOnLeft(b.to_string()));
        }
    }
    for b in right {
        if c.holds(b, &mut memo)? {
            return Err(FormulaError::TrueOnRight(b.to_string()));
        }
    }
    Ok(())
}

fn member_term(m: Member) -> Term {
    match m {
        Member::Min => Term::Min,
        Member::Max => Term::Max,
        Member::Color(c) => Term::Var(c),
    }
}

/// Conjunction describing one complete atomic type; color `c` is `x_c`.
pub fn type_formula(t: &AtomicType) -> Matrix {
    let blocks = t.blocks();
    let mut atoms = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        let head = member_term(b.members[0]);
        for &m in &b.members[1..] {
            atoms.push(Matrix::Atom(Atom::Eq(head, member_term(m))));
        }
        if let Some(next) = blocks.get(i + 1) {
            atoms.push(Matrix::Atom(Atom::Lt(head, member_term(next.members[0]))));
        }
        match b.s {
            Some(true) => atoms.push(Matrix::Atom(Atom::S(head))),
            Some(false) => atoms.push(Matrix::not(Matrix::Atom(Atom::S(head)))),
            None => {}
        }
    }
    Matrix::and(atoms)
}

fn types_formula(ts: &[AtomicType]) -> Matrix {
    Matrix::or(ts.iter().map(type_formula).collect())
}

/// Separating sentence read off a won transcript. Variable `x_i` is bound
/// by round `i`. The matrix walks the levels: a left board either dies at
/// some level (its type is among that level's discarded left types) or
/// keeps a surviving type, and the last level has no survivors.
pub fn synthesize(t: &Transcript) -> Result<Formula, FormulaError> {
    if !t.won {
        return Err(FormulaError::NotWon);
    }
    let mut m = Matrix::False;
    for (i, level) in t.levels.iter().enumerate().rev() {
        let tail = if i + 1 == t.levels.len() { Matrix::False } else { m };
        m = Matrix::or(vec![
            types_formula(&level.discarded_left),
            Matrix::and(vec![types_formula(&level.kept_types), tail]),
        ]);
    }
    let prefix = t.pattern.0.iter().enumerate().map(|(i, &q)| (q, i as u32 + 1)).collect();
    Formula::new(prefix, m)
}

/// Spoiler playing witnesses of a separating sentence.
pub struct FormulaPlayer {
    f: Formula,
    slot: HashMap<u32, usize>,
    memo: Mutex<Memo>,
}

/// Player for `f`, after checking that `f` separates `instance`.
pub fn spoiler_from_formula(f: Formula, instance: &GameState) -> Result<FormulaPlayer, FormulaError> {
    separates(&f, &instance.left, &instance.right)?;
    let slot = Checker::new(&f).slot;
    Ok(FormulaPlayer { f, slot, memo: Mutex::new(Memo::default()) })
}

impl FormulaPlayer {
    pub fn formula(&self) -> &Formula {
        &self.f
    }
}

impl StrategyPlayer for FormulaPlayer {
    fn pattern(&self) -> Pattern {
        self.f.signature()
    }

    /// Smallest element keeping the rest of the sentence true on the left
    /// (false on the right); boards without one get min.
    fn place(&self, board: &PebbledBoard, side: Side, round: usize) -> Result<Pos, GameError> {
        if board.pebble_count() != round || round >= self.f.prefix.len() {
            return Err(GameError::Refused(format!("{board} at round {round}")));
        }
        let want = side == Side::Left;
        let checker = Checker { f: &self.f, slot: self.slot.clone() };
        let mut memo = self.memo.lock().expect("memo lock");
        for p in board.min_elem()..=board.max_elem() {
            let next = board.place(p).map_err(GameError::from)?;
            let v = checker.holds(&next, &mut memo).map_err(|e| GameError::Refused(e.to_string()))?;
            if v == want {
                return Ok(p);
            }
        }
        Ok(board.min_elem())
    }

    fn name(&self) -> String {
        format!("formula[{}]", self.f.signature())
    }
}
