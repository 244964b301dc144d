//! Finite linear orders and binary strings, pebbled boards, segments and
//! the matching-pair test.
//!
//! Linear orders use positions `0..=len`, binary strings use `1..=n`.
//! Pebble colors are numbered from 1 in play order, so a board stores its
//! placements as a plain vector: entry `i` holds the position of color `i + 1`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Pos = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("linear order length must be at least 1")]
    ZeroLength,
    #[error("binary string must be nonempty")]
    EmptyString,
    #[error("invalid bit character {0:?}")]
    BadBit(char),
    #[error("empty segment [{0}, {0}]")]
    EmptySegment(Pos),
    #[error("segment bounds out of order: [{lo}, {hi}]")]
    BadSegment { lo: Pos, hi: Pos },
    #[error("position {pos} outside universe of {board}")]
    OutOfUniverse { pos: Pos, board: String },
    #[error("boards carry different color sets ({0} vs {1} pebbles)")]
    ColorMismatch(usize, usize),
    #[error("boards come from different vocabularies")]
    VocabularyMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vocabulary {
    Order,
    String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinearOrder {
    length: u32,
}

impl LinearOrder {
    pub fn length(&self) -> u32 {
        self.length
    }
}

pub fn make_linear_order(length: u32) -> Result<LinearOrder, StructureError> {
    if length == 0 {
        return Err(StructureError::ZeroLength);
    }
    Ok(LinearOrder { length })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryString {
    bits: Vec<bool>,
}

impl BinaryString {
    pub fn new(bits: Vec<bool>) -> Result<Self, StructureError> {
        if bits.is_empty() {
            return Err(StructureError::EmptyString);
        }
        Ok(BinaryString { bits })
    }

    pub fn parse(text: &str) -> Result<Self, StructureError> {
        let bits = text
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(StructureError::BadBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> Vec<BinaryString> {
        assert!(n >= 1 && n < 31);
        (0u32..(1 << n))
            .map(|v| BinaryString {
                bits: (0..n).map(|i| (v >> (n - 1 - i)) & 1 == 1).collect(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bit at 1-based position `i`.
    pub fn bit(&self, i: Pos) -> bool {
        self.bits[(i - 1) as usize]
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BinaryString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BinaryString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        BinaryString::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    Order(LinearOrder),
    Str(BinaryString),
}

impl Structure {
    pub fn vocabulary(&self) -> Vocabulary {
        match self {
            Structure::Order(_) => Vocabulary::Order,
            Structure::Str(_) => Vocabulary::String,
        }
    }

    pub fn min_elem(&self) -> Pos {
        match self {
            Structure::Order(_) => 0,
            Structure::Str(_) => 1,
        }
    }

    pub fn max_elem(&self) -> Pos {
        match self {
            Structure::Order(o) => o.length,
            Structure::Str(w) => w.len() as Pos,
        }
    }

    pub fn universe_size(&self) -> usize {
        (self.max_elem() - self.min_elem() + 1) as usize
    }

    pub fn contains(&self, p: Pos) -> bool {
        p >= self.min_elem() && p <= self.max_elem()
    }

    /// `S(p)` for strings, `None` for orders.
    pub fn s_bit(&self, p: Pos) -> Option<bool> {
        match self {
            Structure::Order(_) => None,
            Structure::Str(w) => Some(w.bit(p)),
        }
    }

    /// Length in edges: `max - min`.
    pub fn span(&self) -> u32 {
        self.max_elem() - self.min_elem()
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::Order(o) => write!(f, "L({})", o.length),
            Structure::Str(w) => write!(f, "S({w})"),
        }
    }
}

impl From<LinearOrder> for Structure {
    fn from(o: LinearOrder) -> Self {
        Structure::Order(o)
    }
}

impl From<BinaryString> for Structure {
    fn from(w: BinaryString) -> Self {
        Structure::Str(w)
    }
}

/// Conventional short names: 1, 2, 3 are r, b, g.
pub fn color_name(color: u32) -> String {
    match color {
        1 => "r".into(),
        2 => "b".into(),
        3 => "g".into(),
        c => format!("c{c}"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PebbledBoard {
    base: Arc<Structure>,
    pebbles: Vec<Pos>,
}

impl PartialOrd for PebbledBoard {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PebbledBoard {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.base, &other.base) {
            return self.pebbles.cmp(&other.pebbles);
        }
        self.base
            .cmp(&other.base)
            .then_with(|| self.pebbles.cmp(&other.pebbles))
    }
}

impl PebbledBoard {
    pub fn new(base: impl Into<Structure>) -> Self {
        PebbledBoard { base: Arc::new(base.into()), pebbles: Vec::new() }
    }

    pub fn order(length: u32) -> Result<Self, StructureError> {
        Ok(Self::new(make_linear_order(length)?))
    }

    pub fn string(text: &str) -> Result<Self, StructureError> {
        Ok(Self::new(BinaryString::parse(text)?))
    }

    pub fn with_pebbles(base: Arc<Structure>, pebbles: Vec<Pos>) -> Result<Self, StructureError> {
        for &p in &pebbles {
            if !base.contains(p) {
                return Err(StructureError::OutOfUniverse { pos: p, board: base.to_string() });
            }
        }
        Ok(PebbledBoard { base, pebbles })
    }

    pub fn base(&self) -> &Structure {
        &self.base
    }

    pub fn base_arc(&self) -> &Arc<Structure> {
        &self.base
    }

    pub fn pebbles(&self) -> &[Pos] {
        &self.pebbles
    }

    pub fn pebble_count(&self) -> usize {
        self.pebbles.len()
    }

    /// Position of `color` (1-based), if placed.
    pub fn position_of(&self, color: u32) -> Option<Pos> {
        self.pebbles.get((color as usize).checked_sub(1)?).copied()
    }

    pub fn min_elem(&self) -> Pos {
        self.base.min_elem()
    }

    pub fn max_elem(&self) -> Pos {
        self.base.max_elem()
    }

    pub fn vocabulary(&self) -> Vocabulary {
        self.base.vocabulary()
    }

    /// A copy with one more pebble at `pos`.
    pub fn place(&self, pos: Pos) -> Result<Self, StructureError> {
        if !self.base.contains(pos) {
            return Err(StructureError::OutOfUniverse { pos, board: self.to_string() });
        }
        let mut pebbles = Vec::with_capacity(self.pebbles.len() + 1);
        pebbles.extend_from_slice(&self.pebbles);
        pebbles.push(pos);
        Ok(PebbledBoard { base: self.base.clone(), pebbles })
    }

    /// Same base, only the pebbles at the given indices (0-based), renumbered.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        PebbledBoard {
            base: self.base.clone(),
            pebbles: keep.iter().filter_map(|&i| self.pebbles.get(i).copied()).collect(),
        }
    }

    /// The induced linear order on `seg`, with pebbles clamped into the
    /// segment and shifted so that `seg.lo` becomes 0.
    pub fn order_view(&self, seg: Segment, keep: &[usize]) -> Result<Self, StructureError> {
        let length = seg.hi - seg.lo;
        let base = Arc::new(Structure::Order(make_linear_order(length)?));
        let pebbles = keep
            .iter()
            .filter_map(|&i| self.pebbles.get(i))
            .map(|&p| p.clamp(seg.lo, seg.hi) - seg.lo)
            .collect();
        Ok(PebbledBoard { base, pebbles })
    }

    /// Sorted, deduplicated positions of min, max and every pebble.
    pub fn points(&self) -> Vec<Pos> {
        let mut pts = Vec::with_capacity(self.pebbles.len() + 2);
        pts.push(self.min_elem());
        pts.push(self.max_elem());
        pts.extend_from_slice(&self.pebbles);
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// Shrinks every gap between consecutive points of a linear order to at
    /// most `cap` edges. Strings are returned unchanged.
    pub fn cap_gaps(&self, cap: u32) -> Self {
        let Structure::Order(order) = &*self.base else {
            return self.clone();
        };
        let pts = self.points();
        let mut mapped = Vec::with_capacity(pts.len());
        let mut acc = 0u32;
        mapped.push(0u32);
        for w in pts.windows(2) {
            acc += (w[1] - w[0]).min(cap);
            mapped.push(acc);
        }
        if acc == order.length {
            return self.clone();
        }
        let map = |p: Pos| mapped[pts.binary_search(&p).expect("point present")];
        PebbledBoard {
            base: Arc::new(Structure::Order(LinearOrder { length: acc })),
            pebbles: self.pebbles.iter().map(|&p| map(p)).collect(),
        }
    }

    /// Positions that cover every class of one-pebble extension modulo gap
    /// capping at `cap`: the points themselves, the first and last `cap`
    /// elements inside each gap and one element from the middle.
    pub fn representative_positions(&self, cap: Option<u32>) -> Vec<Pos> {
        let (Some(cap), Structure::Order(_)) = (cap, &*self.base) else {
            return (self.min_elem()..=self.max_elem()).collect();
        };
        let pts = self.points();
        let mut out = Vec::new();
        for (i, &p) in pts.iter().enumerate() {
            out.push(p);
            let Some(&q) = pts.get(i + 1) else { break };
            let interior = q - p - 1;
            if interior <= 2 * cap + 1 {
                out.extend(p + 1..q);
            } else {
                out.extend(p + 1..=p + cap);
                out.push(p + cap + 1);
                out.extend(q - cap..q);
            }
        }
        out
    }
}

impl fmt::Display for PebbledBoard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.base)?;
        for (i, p) in self.pebbles.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}@{}", color_name(i as u32 + 1), p)?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub lo: Pos,
    pub hi: Pos,
}

impl Segment {
    pub fn new(lo: Pos, hi: Pos) -> Result<Self, StructureError> {
        if lo > hi {
            return Err(StructureError::BadSegment { lo, hi });
        }
        Ok(Segment { lo, hi })
    }

    pub fn len(&self) -> u32 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains(&self, p: Pos) -> bool {
        self.lo <= p && p <= self.hi
    }
}

pub fn closest_to_midpoint(seg: Segment) -> Result<Pos, StructureError> {
    if seg.hi <= seg.lo {
        return Err(StructureError::EmptySegment(seg.lo));
    }
    Ok(seg.lo + (seg.hi - seg.lo) / 2)
}

/// Member of an atomic-type block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Member {
    Min,
    Max,
    Color(u32),
}

impl Member {
    fn code(self) -> u32 {
        match self {
            Member::Min => 0,
            Member::Max => 1,
            Member::Color(c) => c + 1,
        }
    }

    fn from_code(code: u32) -> Self {
        match code {
            0 => Member::Min,
            1 => Member::Max,
            c => Member::Color(c - 1),
        }
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Member::Min => f.write_str("min"),
            Member::Max => f.write_str("max"),
            Member::Color(c) => f.write_str(&color_name(*c)),
        }
    }
}

const BLOCK_PLAIN: u32 = u32::MAX;
const BLOCK_S0: u32 = u32::MAX - 1;
const BLOCK_S1: u32 = u32::MAX - 2;

/// Complete quantifier-free type of the pebbled elements and constants.
///
/// Encoded as a flat token list: each block starts with a header token
/// (carrying the S-bit for strings) followed by member codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicType(Box<[u32]>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeBlock {
    pub members: Vec<Member>,
    pub s: Option<bool>,
}

impl AtomicType {
    pub fn blocks(&self) -> Vec<TypeBlock> {
        let mut out: Vec<TypeBlock> = Vec::new();
        for &tok in self.0.iter() {
            let s = match tok {
                BLOCK_PLAIN => Some(None),
                BLOCK_S0 => Some(Some(false)),
                BLOCK_S1 => Some(Some(true)),
                _ => None,
            };
            match s {
                Some(s) => out.push(TypeBlock { members: Vec::new(), s }),
                None => out.last_mut().expect("header first").members.push(Member::from_code(tok)),
            }
        }
        out
    }

    /// Number of pebble colors mentioned.
    pub fn colors(&self) -> usize {
        self.0.iter().filter(|&&t| t >= 2 && t < BLOCK_S1).count()
    }
}

impl fmt::Display for AtomicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = self.blocks();
        for (i, b) in blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(" < ")?;
            }
            for (j, m) in b.members.iter().enumerate() {
                if j > 0 {
                    f.write_str(" = ")?;
                }
                write!(f, "{m}")?;
            }
        }
        for b in &blocks {
            if let Some(s) = b.s {
                write!(f, ", S({})={}", b.members[0], u8::from(s))?;
            }
        }
        Ok(())
    }
}

pub fn atomic_type(b: &PebbledBoard) -> AtomicType {
    let mut items: Vec<(Pos, u32)> = Vec::with_capacity(b.pebbles.len() + 2);
    items.push((b.min_elem(), Member::Min.code()));
    items.push((b.max_elem(), Member::Max.code()));
    for (i, &p) in b.pebbles.iter().enumerate() {
        items.push((p, Member::Color(i as u32 + 1).code()));
    }
    items.sort_unstable();
    let mut tokens = Vec::with_capacity(items.len() * 2);
    let mut last = None;
    for (p, code) in items {
        if last != Some(p) {
            tokens.push(match b.base.s_bit(p) {
                None => BLOCK_PLAIN,
                Some(false) => BLOCK_S0,
                Some(true) => BLOCK_S1,
            });
            last = Some(p);
        }
        tokens.push(code);
    }
    AtomicType(tokens.into_boxed_slice())
}

/// Direct check that pebbles and constants induce a partial isomorphism.
pub fn is_matching_pair(a: &PebbledBoard, b: &PebbledBoard) -> Result<bool, StructureError> {
    if a.vocabulary() != b.vocabulary() {
        return Err(StructureError::VocabularyMismatch);
    }
    if a.pebble_count() != b.pebble_count() {
        return Err(StructureError::ColorMismatch(a.pebble_count(), b.pebble_count()));
    }
    let pa: Vec<Pos> = [a.min_elem(), a.max_elem()].into_iter().chain(a.pebbles.iter().copied()).collect();
    let pb: Vec<Pos> = [b.min_elem(), b.max_elem()].into_iter().chain(b.pebbles.iter().copied()).collect();
    for i in 0..pa.len() {
        if a.base.s_bit(pa[i]) != b.base.s_bit(pb[i]) {
            return Ok(false);
        }
        for j in 0..pa.len() {
            if pa[i].cmp(&pa[j]) != pb[i].cmp(&pb[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
