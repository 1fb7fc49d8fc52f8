//! Spin words: tensor products of single-site operators {E, Ix, Iy, Iz}.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AlgebraError;

/// Single-site letter. `E` is the 2x2 identity; `X`/`Y`/`Z` are the spin-1/2
/// operators `I^a = sigma^a / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Letter {
    E = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Letter {
    pub fn from_char(ch: char) -> Option<Letter> {
        match ch.to_ascii_uppercase() {
            'E' | 'I' => Some(Letter::E),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::E => 'E',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    /// Index into the (X, Y, Z) axis triple; `None` for the identity.
    pub fn axis_index(self) -> Option<usize> {
        match self {
            Letter::E => None,
            Letter::X => Some(0),
            Letter::Y => Some(1),
            Letter::Z => Some(2),
        }
    }

    pub fn from_axis_index(i: usize) -> Letter {
        match i {
            0 => Letter::X,
            1 => Letter::Y,
            2 => Letter::Z,
            _ => panic!("axis index out of range"),
        }
    }
}

/// A length-n product of single-site letters, one per spin.
///
/// The all-`E` word denotes the global identity with unit weight (not a
/// 1/2-per-site normalization).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinWord {
    letters: Vec<Letter>,
}

impl SpinWord {
    pub fn identity(n: usize) -> SpinWord {
        SpinWord { letters: vec![Letter::E; n] }
    }

    pub fn from_letters(letters: Vec<Letter>) -> SpinWord {
        SpinWord { letters }
    }

    /// Word with a single non-identity letter at `site`.
    pub fn single(n: usize, site: usize, letter: Letter) -> Result<SpinWord, AlgebraError> {
        if site >= n {
            return Err(AlgebraError::SiteOutOfRange { site, n });
        }
        let mut letters = vec![Letter::E; n];
        letters[site] = letter;
        Ok(SpinWord { letters })
    }

    /// Word with non-identity letters at two distinct sites.
    pub fn pair(
        n: usize,
        a: (usize, Letter),
        b: (usize, Letter),
    ) -> Result<SpinWord, AlgebraError> {
        if a.0 >= n {
            return Err(AlgebraError::SiteOutOfRange { site: a.0, n });
        }
        if b.0 >= n {
            return Err(AlgebraError::SiteOutOfRange { site: b.0, n });
        }
        let mut letters = vec![Letter::E; n];
        letters[a.0] = a.1;
        letters[b.0] = b.1;
        Ok(SpinWord { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == Letter::E)
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != Letter::E).count()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn letter(&self, site: usize) -> Letter {
        self.letters[site]
    }

    pub fn with_letter(&self, site: usize, letter: Letter) -> SpinWord {
        let mut letters = self.letters.clone();
        letters[site] = letter;
        SpinWord { letters }
    }
}

impl fmt::Display for SpinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for SpinWord {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters: Option<Vec<Letter>> = s.chars().map(Letter::from_char).collect();
        letters
            .map(SpinWord::from_letters)
            .ok_or_else(|| AlgebraError::BadWord { text: s.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_round_trip() {
        let w: SpinWord = "EXYZ".parse().unwrap();
        assert_eq!(w.to_string(), "EXYZ");
        assert_eq!(w.weight(), 3);
        assert_eq!(w.len(), 4);
    }

    #[test]
    fn identity_word() {
        let w = SpinWord::identity(3);
        assert!(w.is_identity());
        assert_eq!(w.weight(), 0);
    }

    #[test]
    fn bad_letter_rejected() {
        assert!("XQ".parse::<SpinWord>().is_err());
    }
}
