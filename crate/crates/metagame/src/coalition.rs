//! Coalitions as bit patterns.
//!
//! A coalition over `d` players (1 <= d <= 63) is a `u64` whose bit `k`
//! (least significant = player 0) says whether player `k` is present. All
//! coalition traversals in this crate run in ascending bit-pattern order so
//! floating-point reductions are reproducible run to run.

use crate::error::{Error, Result};

pub const MAX_PLAYERS: usize = 63;

/// Set of players encoded as a bit pattern, tagged with the player count it
/// was built for so dimension mismatches are caught early.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u64,
    d: u32,
}

impl std::fmt::Debug for Coalition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Coalition({:#b}, d={})", self.bits, self.d)?;
        Ok(())
    }
}

impl Coalition {
    /// The empty coalition over `d` players.
    pub fn empty(d: usize) -> Self {
        assert!((1..=MAX_PLAYERS).contains(&d), "player count {d} out of range");
        Coalition { bits: 0, d: d as u32 }
    }

    /// The grand coalition `[d]`.
    pub fn full(d: usize) -> Self {
        assert!((1..=MAX_PLAYERS).contains(&d), "player count {d} out of range");
        Coalition { bits: (1u64 << d) - 1, d: d as u32 }
    }

    /// Builds a coalition from a raw bit pattern, rejecting bits >= 2^d.
    pub fn from_bits(bits: u64, d: usize) -> Result<Self> {
        if !(1..=MAX_PLAYERS).contains(&d) {
            return Err(Error::invalid(format!("player count {d} out of range 1..=63")));
        }
        if bits >> d != 0 {
            return Err(Error::invalid(format!(
                "coalition bits {bits:#b} reference players outside 0..{d}"
            )));
        }
        Ok(Coalition { bits, d: d as u32 })
    }

    /// Builds a coalition from explicit player indices.
    pub fn from_players(players: &[usize], d: usize) -> Result<Self> {
        let mut c = Coalition::empty(d);
        for &p in players {
            if p >= d {
                return Err(Error::invalid(format!("player {p} out of range 0..{d}")));
            }
            c.bits |= 1 << p;
        }
        Ok(c)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn player_count(&self) -> usize {
        self.d as usize
    }

    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits == (1u64 << self.d) - 1
    }

    pub fn contains(&self, player: usize) -> bool {
        debug_assert!(player < self.d as usize);
        self.bits >> player & 1 == 1
    }

    /// The coalition with `player` added.
    pub fn with(&self, player: usize) -> Self {
        debug_assert!(player < self.d as usize);
        Coalition { bits: self.bits | 1 << player, d: self.d }
    }

    /// The coalition with `player` removed.
    pub fn without(&self, player: usize) -> Self {
        debug_assert!(player < self.d as usize);
        Coalition { bits: self.bits & !(1 << player), d: self.d }
    }

    pub fn union(&self, other: Coalition) -> Self {
        debug_assert_eq!(self.d, other.d);
        Coalition { bits: self.bits | other.bits, d: self.d }
    }

    pub fn intersection(&self, other: Coalition) -> Self {
        debug_assert_eq!(self.d, other.d);
        Coalition { bits: self.bits & other.bits, d: self.d }
    }

    pub fn minus(&self, other: Coalition) -> Self {
        debug_assert_eq!(self.d, other.d);
        Coalition { bits: self.bits & !other.bits, d: self.d }
    }

    pub fn complement(&self) -> Self {
        Coalition { bits: !self.bits & ((1u64 << self.d) - 1), d: self.d }
    }

    pub fn is_subset_of(&self, other: Coalition) -> bool {
        self.bits & !other.bits == 0
    }

    /// Players in the coalition, ascending.
    pub fn players(&self) -> impl Iterator<Item = usize> + '_ {
        let d = self.d as usize;
        (0..d).filter(move |&p| self.contains(p))
    }

    /// All subsets of this coalition in ascending bit-pattern order
    /// (carry-rippler enumeration; includes the empty set and `self`).
    pub fn subsets(&self) -> SubsetIter {
        SubsetIter { mask: self.bits, current: 0, d: self.d, done: false }
    }

    /// Index of `self \ {player}` in a dense table over the remaining d-1
    /// players: bit `player` is squeezed out and higher bits shift down.
    pub fn squeezed_index(&self, player: usize) -> usize {
        debug_assert!(player < self.d as usize);
        let low = self.bits & ((1u64 << player) - 1);
        let high = (self.bits >> (player + 1)) << player;
        (low | high) as usize
    }

    /// Inverse of [`squeezed_index`]: re-inserts a zero bit at `player` into a
    /// bit pattern over d-1 players and returns the d-player coalition.
    pub fn unsqueeze(squeezed: u64, player: usize, d: usize) -> Self {
        debug_assert!(player < d);
        let low = squeezed & ((1u64 << player) - 1);
        let high = (squeezed >> player) << (player + 1);
        Coalition { bits: low | high, d: d as u32 }
    }
}

/// Subsets of a fixed mask, ascending bit-pattern order.
pub struct SubsetIter {
    mask: u64,
    current: u64,
    d: u32,
    done: bool,
}

impl Iterator for SubsetIter {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        if self.done {
            return None;
        }
        let out = Coalition { bits: self.current, d: self.d };
        if self.current == self.mask {
            self.done = true;
        } else {
            self.current = self.current.wrapping_sub(self.mask) & self.mask;
        }
        Some(out)
    }
}

/// All 2^d coalitions over `d` players, ascending bit pattern.
pub fn all_coalitions(d: usize) -> impl Iterator<Item = Coalition> {
    assert!((1..=MAX_PLAYERS).contains(&d), "player count {d} out of range");
    (0u64..1 << d).map(move |bits| Coalition { bits, d: d as u32 })
}
