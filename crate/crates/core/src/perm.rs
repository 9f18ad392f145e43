use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deck state: which card sits at each position, with the inverse map kept
/// in sync.
///
/// Positions and card labels are 1-based at the interface. Storage is
/// 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("deck size must be at least 2, got {n}")));
        }
        let forward: Vec<u32> = (0..n as u32).collect();
        Ok(Self {
            inverse: forward.clone(),
            forward,
        })
    }

    /// Builds a deck from the 1-based card labels listed top to bottom.
    pub fn from_cards(cards: &[usize]) -> Result<Self> {
        let n = cards.len();
        if n < 2 {
            return Err(Error::param(format!("deck size must be at least 2, got {n}")));
        }
        let mut inverse = vec![u32::MAX; n];
        let mut forward = Vec::with_capacity(n);
        for (pos, &card) in cards.iter().enumerate() {
            if card == 0 || card > n {
                return Err(Error::param(format!("card label {card} outside 1..={n}")));
            }
            if inverse[card - 1] != u32::MAX {
                return Err(Error::param(format!("card label {card} appears twice")));
            }
            inverse[card - 1] = pos as u32;
            forward.push((card - 1) as u32);
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Card label at a 1-based position.
    pub fn card_at(&self, position: usize) -> usize {
        self.forward[position - 1] as usize + 1
    }

    /// 1-based position of a card label.
    pub fn position_of(&self, card: usize) -> usize {
        self.inverse[card - 1] as usize + 1
    }

    /// Card labels from top to bottom.
    pub fn cards(&self) -> Vec<usize> {
        self.forward.iter().map(|&c| c as usize + 1).collect()
    }

    /// Positions of the given cards, in the order given.
    pub fn positions_of(&self, cards: &[usize]) -> Vec<usize> {
        cards.iter().map(|&c| self.position_of(c)).collect()
    }

    /// Swaps the cards at two 1-based positions.
    #[inline]
    pub fn transpose_positions(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (a, b) = (a - 1, b - 1);
        self.forward.swap(a, b);
        self.inverse[self.forward[a] as usize] = a as u32;
        self.inverse[self.forward[b] as usize] = b as u32;
    }

    /// Checks that forward and inverse are mutually inverse bijections.
    pub fn is_consistent(&self) -> bool {
        let n = self.forward.len();
        if self.inverse.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for (pos, &card) in self.forward.iter().enumerate() {
            let c = card as usize;
            if c >= n || seen[c] || self.inverse[c] as usize != pos {
                return false;
            }
            seen[c] = true;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_tiny_and_malformed_decks() {
        assert!(Permutation::identity(1).is_err());
        assert!(Permutation::from_cards(&[1, 1, 2]).is_err());
        assert!(Permutation::from_cards(&[0, 1]).is_err());
        assert!(Permutation::from_cards(&[1, 4, 2]).is_err());
    }

    #[test]
    fn transpose_end_cards() {
        let mut p = Permutation::identity(3).unwrap();
        p.transpose_positions(1, 3);
        assert_eq!(p.cards(), vec![3, 2, 1]);
        assert_eq!(p.position_of(3), 1);
        assert_eq!(p.position_of(1), 3);
    }

    proptest! {
        #[test]
        fn swaps_keep_bijection(n in 2usize..40, swaps in prop::collection::vec((0usize..1000, 0usize..1000), 0..200)) {
            let mut p = Permutation::identity(n).unwrap();
            for (a, b) in swaps {
                p.transpose_positions(a % n + 1, b % n + 1);
                prop_assert!(p.is_consistent());
            }
            for pos in 1..=n {
                prop_assert_eq!(p.position_of(p.card_at(pos)), pos);
            }
        }
    }
}
