//! Exact set algebra on finite unions of subintervals of `[0, 1]`.
//!
//! Every endpoint is a [`Rational`] carrying an open/closed flag, so sets such
//! as `(0,1/4]` and `[0,1/4]` are distinguished exactly. An [`IntervalSet`] is
//! always kept in canonical form: pieces sorted, pairwise disjoint and
//! maximal, with degenerate pieces only as closed singletons. Two sets are
//! equal as subsets of `[0, 1]` iff their canonical forms are identical.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

/// One end of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Boundary {
    pub value: Rational,
    pub closed: bool,
}

impl Boundary {
    pub fn closed(value: Rational) -> Self {
        Boundary { value, closed: true }
    }

    pub fn open(value: Rational) -> Self {
        Boundary { value, closed: false }
    }

    // As a lower bound, a closed endpoint starts before an open one at the same value.
    fn cmp_lower(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then_with(|| other.closed.cmp(&self.closed))
    }

    // As an upper bound, a closed endpoint ends after an open one at the same value.
    fn cmp_upper(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then_with(|| self.closed.cmp(&other.closed))
    }
}

/// A single (possibly empty) interval `lo .. hi` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Boundary,
    pub hi: Boundary,
}

impl Interval {
    pub fn new(lo: Boundary, hi: Boundary) -> Result<Self> {
        for b in [&lo, &hi] {
            if b.value.is_negative() || b.value > Rational::one() {
                return Err(Error::Domain(format!("endpoint {} outside [0,1]", b.value)));
            }
        }
        if lo.value > hi.value {
            return Err(Error::Domain(format!(
                "interval endpoints reversed: {} > {}",
                lo.value, hi.value
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn closed(a: Rational, b: Rational) -> Result<Self> {
        Self::new(Boundary::closed(a), Boundary::closed(b))
    }

    pub fn open(a: Rational, b: Rational) -> Result<Self> {
        Self::new(Boundary::open(a), Boundary::open(b))
    }

    pub fn point(x: Rational) -> Result<Self> {
        Self::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.value.cmp(&self.hi.value) {
            Ordering::Less => false,
            Ordering::Equal => !(self.lo.closed && self.hi.closed),
            Ordering::Greater => true,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo.value == self.hi.value && self.lo.closed && self.hi.closed
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = match self.lo.value.cmp(x) {
            Ordering::Less => true,
            Ordering::Equal => self.lo.closed,
            Ordering::Greater => false,
        };
        let below = match x.cmp(&self.hi.value) {
            Ordering::Less => true,
            Ordering::Equal => self.hi.closed,
            Ordering::Greater => false,
        };
        above && below
    }

    pub fn length(&self) -> Rational {
        if self.is_empty() {
            Rational::zero()
        } else {
            self.hi.value - self.lo.value
        }
    }

    fn intersect(&self, other: &Self) -> Interval {
        let lo = if self.lo.cmp_lower(&other.lo) == Ordering::Less {
            other.lo
        } else {
            self.lo
        };
        let hi = if self.hi.cmp_upper(&other.hi) == Ordering::Greater {
            other.hi
        } else {
            self.hi
        };
        Interval { lo, hi }
    }

    /// True when `self ∪ next` is a single interval (`next` starting no earlier than `self`).
    fn touches(&self, next: &Self) -> bool {
        match next.lo.value.cmp(&self.hi.value) {
            Ordering::Less => true,
            Ordering::Equal => self.hi.closed || next.lo.closed,
            Ordering::Greater => false,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_singleton() {
            return write!(f, "{{{}}}", self.lo.value);
        }
        write!(
            f,
            "{}{},{}{}",
            if self.lo.closed { '[' } else { '(' },
            self.lo.value,
            self.hi.value,
            if self.hi.closed { ']' } else { ')' }
        )
    }
}

/// A finite union of intervals in `[0, 1]`, held in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    pieces: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn unit() -> Self {
        IntervalSet {
            pieces: vec![Interval {
                lo: Boundary::closed(Rational::zero()),
                hi: Boundary::closed(Rational::one()),
            }],
        }
    }

    pub fn point(x: Rational) -> Result<Self> {
        Ok(IntervalSet {
            pieces: vec![Interval::point(x)?],
        })
    }

    pub fn closed(a: Rational, b: Rational) -> Result<Self> {
        Self::normalize(&[Interval::closed(a, b)?])
    }

    pub fn open(a: Rational, b: Rational) -> Result<Self> {
        Self::normalize(&[Interval::open(a, b)?])
    }

    /// Canonical form of an arbitrary list of raw intervals.
    pub fn normalize(raw: &[Interval]) -> Result<Self> {
        for iv in raw {
            Interval::new(iv.lo, iv.hi)?;
        }
        let mut sorted: Vec<Interval> = raw.iter().filter(|iv| !iv.is_empty()).copied().collect();
        sorted.sort_by(|a, b| a.lo.cmp_lower(&b.lo).then_with(|| a.hi.cmp_upper(&b.hi)));
        let mut pieces: Vec<Interval> = Vec::with_capacity(sorted.len());
        for iv in sorted {
            match pieces.last_mut() {
                Some(cur) if cur.touches(&iv) => {
                    if iv.hi.cmp_upper(&cur.hi) == Ordering::Greater {
                        cur.hi = iv.hi;
                    }
                }
                _ => pieces.push(iv),
            }
        }
        Ok(IntervalSet { pieces })
    }

    /// Builds the set of `x ∈ [0,1]` satisfying `member`, given that membership
    /// is constant on every open gap between consecutive `critical` points.
    ///
    /// `member` is evaluated once at each critical point (plus 0 and 1) and once
    /// at the midpoint of each gap.
    pub fn from_predicate<I, F>(critical: I, mut member: F) -> Self
    where
        I: IntoIterator<Item = Rational>,
        F: FnMut(&Rational) -> bool,
    {
        let mut pts: Vec<Rational> = critical
            .into_iter()
            .filter(|x| !x.is_negative() && *x <= Rational::one())
            .collect();
        pts.push(Rational::zero());
        pts.push(Rational::one());
        pts.sort();
        pts.dedup();

        let mut raw = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            if member(p) {
                raw.push(Interval {
                    lo: Boundary::closed(*p),
                    hi: Boundary::closed(*p),
                });
            }
            if let Some(q) = pts.get(i + 1) {
                let mid = (p + q) / Rational::from_integer(2);
                if member(&mid) {
                    raw.push(Interval {
                        lo: Boundary::open(*p),
                        hi: Boundary::open(*q),
                    });
                }
            }
        }
        Self::normalize(&raw).expect("atoms lie in [0,1]")
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        *self == Self::unit()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        // pieces are sorted; find the last piece whose lower value is <= x
        let idx = self.pieces.partition_point(|iv| iv.lo.value <= *x);
        idx > 0 && self.pieces[idx - 1].contains(x)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.pieces, &other.pieces);
        let (mut i, mut j) = (0, 0);
        let mut pieces = Vec::new();
        while i < a.len() && j < b.len() {
            let iv = a[i].intersect(&b[j]);
            if !iv.is_empty() {
                pieces.push(iv);
            }
            if a[i].hi.cmp_upper(&b[j].hi) == Ordering::Less {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { pieces }
    }

    /// Complement within `[0, 1]`.
    pub fn complement(&self) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() + 1);
        let mut lo = Boundary::closed(Rational::zero());
        for iv in &self.pieces {
            let gap = Interval {
                lo,
                hi: Boundary {
                    value: iv.lo.value,
                    closed: !iv.lo.closed,
                },
            };
            if !gap.is_empty() {
                pieces.push(gap);
            }
            lo = Boundary {
                value: iv.hi.value,
                closed: !iv.hi.closed,
            };
        }
        let tail = Interval {
            lo,
            hi: Boundary::closed(Rational::one()),
        };
        if !tail.is_empty() {
            pieces.push(tail);
        }
        IntervalSet { pieces }
    }

    pub fn union(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let mut raw = self.pieces.clone();
        raw.extend_from_slice(&other.pieces);
        Self::normalize(&raw).expect("canonical inputs")
    }

    pub fn difference(&self, other: &Self) -> Self {
        if other.is_empty() {
            return self.clone();
        }
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersect(other).is_empty()
    }

    /// Lebesgue measure: the sum of piece lengths.
    pub fn lebesgue(&self) -> Rational {
        self.pieces.iter().map(Interval::length).sum()
    }

    /// Open relative to `[0, 1]`: no singleton pieces, and every boundary open
    /// except a closed `0` on the left or a closed `1` on the right.
    pub fn is_relatively_open(&self) -> bool {
        self.pieces.iter().all(|iv| {
            !iv.is_singleton()
                && (!iv.lo.closed || iv.lo.value.is_zero())
                && (!iv.hi.closed || iv.hi.value.is_one())
        })
    }

    /// Every endpoint value, in order (duplicates possible for singletons).
    pub fn endpoints(&self) -> impl Iterator<Item = Rational> + '_ {
        self.pieces.iter().flat_map(|iv| [iv.lo.value, iv.hi.value])
    }

    /// Distance from `y` to the closure of the set; `None` for the empty set.
    pub fn distance_to(&self, y: &Rational) -> Option<Rational> {
        self.pieces
            .iter()
            .map(|iv| {
                if *y < iv.lo.value {
                    iv.lo.value - y
                } else if *y > iv.hi.value {
                    y - iv.hi.value
                } else {
                    Rational::zero()
                }
            })
            .min()
    }

    /// Smallest closed interval containing the set.
    pub fn hull(&self) -> Option<(Rational, Rational)> {
        Some((self.pieces.first()?.lo.value, self.pieces.last()?.hi.value))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, iv) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " u ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

impl FromStr for IntervalSet {
    type Err = Error;

    /// Parses literals such as `[0,1/4] u (1/2,3/4) u {1}`. `{}` is the empty
    /// set and `{a, b}` a finite set of points; `∪` and `U` also separate terms.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Cursor { src: s, pos: 0 };
        let mut raw = Vec::new();
        loop {
            p.skip_ws();
            raw.extend(p.term()?);
            p.skip_ws();
            if p.at_end() {
                break;
            }
            if !(p.eat("u") || p.eat("U") || p.eat("∪")) {
                return Err(p.err("expected 'u' between terms"));
            }
        }
        IntervalSet::normalize(&raw)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `p/q`, `p`, or `-p/q` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let mut c = Cursor { src: s.trim(), pos: 0 };
    let r = c.rational()?;
    if !c.at_end() {
        return Err(c.err("trailing input after rational"));
    }
    Ok(r)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        self.skip_ws();
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{tok}'")))
        }
    }

    fn integer(&mut self) -> Result<i128> {
        let digits: usize = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return Err(self.err("expected digits"));
        }
        let v = self.rest()[..digits]
            .parse::<i128>()
            .map_err(|_| self.err("integer out of range"))?;
        self.pos += digits;
        Ok(v)
    }

    fn rational(&mut self) -> Result<Rational> {
        self.skip_ws();
        let neg = self.eat("-");
        let num = self.integer()?;
        let den = if self.eat("/") { self.integer()? } else { 1 };
        if den == 0 {
            return Err(self.err("zero denominator"));
        }
        let r = Rational::new(num, den);
        Ok(if neg { -r } else { r })
    }

    fn term(&mut self) -> Result<Vec<Interval>> {
        if self.eat("∅") {
            return Ok(Vec::new());
        }
        if self.eat("{") {
            self.skip_ws();
            if self.eat("}") {
                return Ok(Vec::new());
            }
            let mut pts = Vec::new();
            loop {
                let x = self.rational()?;
                pts.push(Interval::point(x).map_err(|e| self.err(&e.to_string()))?);
                self.skip_ws();
                if self.eat("}") {
                    return Ok(pts);
                }
                self.expect(",")?;
            }
        }
        let lo_closed = if self.eat("[") {
            true
        } else if self.eat("(") {
            false
        } else {
            return Err(self.err("expected '[', '(' or '{'"));
        };
        let a = self.rational()?;
        self.expect(",")?;
        let b = self.rational()?;
        self.skip_ws();
        let hi_closed = if self.eat("]") {
            true
        } else if self.eat(")") {
            false
        } else {
            return Err(self.err("expected ']' or ')'"));
        };
        let iv = Interval::new(
            Boundary { value: a, closed: lo_closed },
            Boundary { value: b, closed: hi_closed },
        )
        .map_err(|e| self.err(&e.to_string()))?;
        Ok(vec![iv])
    }
}
