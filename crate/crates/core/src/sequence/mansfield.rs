//! Mansfield cycle notation: bracketed triples of signed axis labels naming
//! the toggling frames a subcycle visits, e.g. `[Z,Y,X][Z,-Y,-X]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::Axis;

/// A signed coordinate axis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedAxis {
    pub axis: Axis,
    pub neg: bool,
}

impl SignedAxis {
    pub const Z: SignedAxis = SignedAxis { axis: Axis::Z, neg: false };

    pub fn vector(self) -> [i8; 3] {
        let mut v = [0i8; 3];
        v[self.axis.index()] = if self.neg { -1 } else { 1 };
        v
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.neg {
            write!(f, "-")?;
        }
        write!(f, "{}", self.axis.as_char())
    }
}

/// A parsed cycle: one or more brackets of exactly three signed axes, the
/// first of which must be Z (all cycles start in the untoggled frame).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSpec {
    brackets: Vec<[SignedAxis; 3]>,
}

impl CycleSpec {
    pub fn brackets(&self) -> &[[SignedAxis; 3]] {
        &self.brackets
    }

    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }
}

impl fmt::Display for CycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.brackets {
            write!(f, "[{},{},{}]", b[0], b[1], b[2])?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MansfieldError {
    #[error("col {col}: expected {expected}, found {found:?}")]
    Syntax { col: usize, expected: &'static str, found: Option<char> },
    #[error("col {col}: bracket has {got} entries, expected 3")]
    Arity { col: usize, got: usize },
    #[error("col {col}: first frame of a bracket must be +/-Z, found {found}")]
    FirstFrameNotZ { col: usize, found: SignedAxis },
    #[error("empty cycle specification")]
    Empty,
}

impl MansfieldError {
    /// Column (1-based character position) associated with the error, when any.
    pub fn column(&self) -> Option<usize> {
        match self {
            MansfieldError::Syntax { col, .. }
            | MansfieldError::Arity { col, .. }
            | MansfieldError::FirstFrameNotZ { col, .. } => Some(*col),
            MansfieldError::Empty => None,
        }
    }
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    len: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Scanner<'a> {
        Scanner { chars: text.char_indices().peekable(), len: text.chars().count() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    /// 1-based column of the next character (or one past the end).
    fn col(&mut self) -> usize {
        match self.chars.peek() {
            Some((i, _)) => *i + 1,
            None => self.len + 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn next(&mut self) -> Option<char> {
        self.chars.next().map(|(_, c)| c)
    }
}

/// Parse the bracket grammar. Whitespace-insensitive, case-insensitive;
/// negative axes are written with a leading `-`.
pub fn parse_mansfield(text: &str) -> Result<CycleSpec, MansfieldError> {
    let mut sc = Scanner::new(text);
    let mut brackets = Vec::new();
    loop {
        sc.skip_ws();
        match sc.peek() {
            None => break,
            Some('[') => {
                sc.next();
                brackets.push(parse_bracket(&mut sc)?);
            }
            found => {
                return Err(MansfieldError::Syntax { col: sc.col(), expected: "'['", found });
            }
        }
    }
    if brackets.is_empty() {
        return Err(MansfieldError::Empty);
    }
    Ok(CycleSpec { brackets })
}

fn parse_bracket(sc: &mut Scanner<'_>) -> Result<[SignedAxis; 3], MansfieldError> {
    let open_col = sc.col();
    let mut axes: Vec<(usize, SignedAxis)> = Vec::new();
    loop {
        sc.skip_ws();
        let col = sc.col();
        let ax = parse_axis(sc)?;
        axes.push((col, ax));
        sc.skip_ws();
        match sc.next() {
            Some(',') => continue,
            Some(']') => break,
            found => {
                return Err(MansfieldError::Syntax { col: sc.col(), expected: "',' or ']'", found });
            }
        }
    }
    if axes.len() != 3 {
        return Err(MansfieldError::Arity { col: open_col, got: axes.len() });
    }
    let (first_col, first) = axes[0];
    if first.axis != Axis::Z {
        return Err(MansfieldError::FirstFrameNotZ { col: first_col, found: first });
    }
    Ok([axes[0].1, axes[1].1, axes[2].1])
}

fn parse_axis(sc: &mut Scanner<'_>) -> Result<SignedAxis, MansfieldError> {
    let mut neg = false;
    if sc.peek() == Some('-') {
        sc.next();
        neg = true;
        sc.skip_ws();
    }
    let col = sc.col();
    let found = sc.next();
    let axis = match found.map(|c| c.to_ascii_uppercase()) {
        Some('X') => Axis::X,
        Some('Y') => Axis::Y,
        Some('Z') => Axis::Z,
        _ => return Err(MansfieldError::Syntax { col, expected: "axis letter X, Y or Z", found }),
    };
    Ok(SignedAxis { axis, neg })
}

impl FromStr for CycleSpec {
    type Err = MansfieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_mansfield(s)
    }
}
