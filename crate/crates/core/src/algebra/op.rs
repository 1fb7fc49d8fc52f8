//! Complex-weighted sums of spin words: the representation of every
//! Hamiltonian and average in the crate.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::rotation::{FrameRotation, Mat3, SiteRotation};
use super::word::{Letter, SpinWord};
use super::AlgebraError;
use crate::scalar::{default_prune, r, Real, C};

/// Sum of spin words with complex coefficients (units: rad/s with hbar = 1).
///
/// Coefficients with magnitude below the prune threshold are dropped, so the
/// zero operator is the empty sum. Terms are kept in a `BTreeMap` for
/// deterministic iteration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSum<T: Real> {
    n: usize,
    terms: BTreeMap<SpinWord, C<T>>,
}

impl<T: Real> OperatorSum<T> {
    pub fn zero(n: usize) -> OperatorSum<T> {
        OperatorSum { n, terms: BTreeMap::new() }
    }

    /// The identity word scaled by `coeff`.
    pub fn identity(n: usize, coeff: C<T>) -> OperatorSum<T> {
        let mut op = OperatorSum::zero(n);
        op.add_term(SpinWord::identity(n), coeff);
        op
    }

    /// A single spin operator `coeff * I^letter_site`.
    pub fn single(
        n: usize,
        site: usize,
        letter: Letter,
        coeff: C<T>,
    ) -> Result<OperatorSum<T>, AlgebraError> {
        let mut op = OperatorSum::zero(n);
        op.add_term(SpinWord::single(n, site, letter)?, coeff);
        Ok(op)
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<OperatorSum<T>, AlgebraError>
    where
        I: IntoIterator<Item = (SpinWord, C<T>)>,
    {
        let mut op = OperatorSum::zero(n);
        for (w, c) in terms {
            if w.len() != n {
                return Err(AlgebraError::DimensionMismatch { left: n, right: w.len() });
            }
            op.add_term(w, c);
        }
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SpinWord, &C<T>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &SpinWord) -> C<T> {
        self.terms.get(word).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Add `coeff * word`, pruning the entry if it falls below threshold.
    pub fn add_term(&mut self, word: SpinWord, coeff: C<T>) {
        debug_assert_eq!(word.len(), self.n);
        let thr = default_prune::<T>();
        let entry = self.terms.entry(word);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if coeff.norm_sqr() > thr * thr {
                    v.insert(coeff);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let new = *o.get() + coeff;
                if new.norm_sqr() > thr * thr {
                    *o.get_mut() = new;
                } else {
                    o.remove();
                }
            }
        }
    }

    fn check_dims(&self, other: &OperatorSum<T>) -> Result<(), AlgebraError> {
        if self.n != other.n {
            return Err(AlgebraError::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    /// Termwise sum.
    pub fn add(&self, other: &OperatorSum<T>) -> Result<OperatorSum<T>, AlgebraError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorSum<T>) -> Result<OperatorSum<T>, AlgebraError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -*c);
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: C<T>) -> OperatorSum<T> {
        let mut out = OperatorSum::zero(self.n);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), *c * factor);
        }
        out
    }

    pub fn scaled_real(&self, factor: T) -> OperatorSum<T> {
        self.scaled(Complex::new(factor, T::zero()))
    }

    /// Divide every coefficient by a real scalar (one rounding per entry).
    pub fn div_real(&self, d: T) -> OperatorSum<T> {
        let mut out = OperatorSum::zero(self.n);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), Complex::new(c.re / d, c.im / d));
        }
        out
    }

    /// Operator product, expanded with the single-site table
    /// `I^a I^b = delta_ab/4 E + (i/2) eps_abc I^c`.
    pub fn mul(&self, other: &OperatorSum<T>) -> Result<OperatorSum<T>, AlgebraError> {
        self.check_dims(other)?;
        let mut out = OperatorSum::zero(self.n);
        let half = r::<T>(0.5);
        let quarter = r::<T>(0.25);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let mut coeff = *ca * *cb;
                let mut letters = Vec::with_capacity(self.n);
                for s in 0..self.n {
                    let (factor, l) = letter_product::<T>(wa.letter(s), wb.letter(s), half, quarter);
                    coeff *= factor;
                    letters.push(l);
                }
                out.add_term(SpinWord::from_letters(letters), coeff);
            }
        }
        Ok(out)
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &OperatorSum<T>) -> Result<OperatorSum<T>, AlgebraError> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        ab.sub(&ba)
    }

    /// Hermiticity: every word is Hermitian, so the sum is Hermitian iff all
    /// coefficients are real (within the prune threshold).
    pub fn is_hermitian(&self) -> bool {
        let thr = default_prune::<T>();
        self.terms.values().all(|c| c.im.abs() <= thr)
    }

    /// Frobenius norm of the dense realization, computed from word
    /// orthogonality: `sqrt(sum |c_w|^2 * 2^n / 4^weight(w))`.
    pub fn norm(&self) -> T {
        let two = r::<T>(2.0);
        let quarter = r::<T>(0.25);
        let mut acc = T::zero();
        for (w, c) in &self.terms {
            let mut scale = two.powi(self.n as i32);
            for _ in 0..w.weight() {
                scale *= quarter;
            }
            acc += c.norm_sqr() * scale;
        }
        acc.sqrt()
    }

    /// Conjugation `U^dag (self) U` by the delta rotation `U = exp(-i theta n.I)`.
    pub fn rotate_conj(&self, rot: &SiteRotation<T>) -> Result<OperatorSum<T>, AlgebraError> {
        let mut frame = FrameRotation::identity(self.n);
        frame.push(rot)?;
        Ok(self.transform(&frame))
    }

    /// Apply an accumulated frame (per-site coefficient matrices).
    pub fn transform(&self, frame: &FrameRotation<T>) -> OperatorSum<T> {
        debug_assert_eq!(frame.n(), self.n);
        let mut out = OperatorSum::zero(self.n);
        for (word, coeff) in &self.terms {
            expand_term(&mut out, word, *coeff, frame);
        }
        out
    }

    /// Copy with every coefficient below `threshold` removed (the default
    /// threshold applies automatically during construction; this supports
    /// coarser post-hoc pruning).
    pub fn pruned(&self, threshold: T) -> OperatorSum<T> {
        let mut out = OperatorSum::zero(self.n);
        for (w, c) in &self.terms {
            if c.norm_sqr() > threshold * threshold {
                out.terms.insert(w.clone(), *c);
            }
        }
        out
    }

    /// Strict structural equality of the pruned term maps.
    pub fn exact_eq(&self, other: &OperatorSum<T>) -> bool {
        self.n == other.n && self.terms == other.terms
    }

    /// `||self - other||` (Frobenius).
    pub fn distance(&self, other: &OperatorSum<T>) -> Result<T, AlgebraError> {
        Ok(self.sub(other)?.norm())
    }
}

fn letter_product<T: Real>(a: Letter, b: Letter, half: T, quarter: T) -> (C<T>, Letter) {
    let one = Complex::new(T::one(), T::zero());
    match (a.axis_index(), b.axis_index()) {
        (None, _) => (one, b),
        (_, None) => (one, a),
        (Some(i), Some(j)) if i == j => (Complex::new(quarter, T::zero()), Letter::E),
        (Some(i), Some(j)) => {
            // eps_ijk: cyclic (0,1,2) -> +1
            let k = 3 - i - j;
            let sign = if (j + 3 - i) % 3 == 1 { T::one() } else { -T::one() };
            (Complex::new(T::zero(), sign * half), Letter::from_axis_index(k))
        }
    }
}

/// Expand one term through per-site coefficient matrices. Signed-permutation
/// sites map to a single word; generic sites branch into up to three letters.
fn expand_term<T: Real>(
    out: &mut OperatorSum<T>,
    word: &SpinWord,
    coeff: C<T>,
    frame: &FrameRotation<T>,
) {
    let n = word.len();
    // fast path: every non-identity letter maps through a signed permutation
    let mut fast = Vec::with_capacity(n);
    let mut fast_ok = true;
    for s in 0..n {
        let l = word.letter(s);
        match l.axis_index() {
            None => fast.push((l, T::one())),
            Some(j) => match frame.site(s).signed_permutation_column(j) {
                Some((i, sign)) => fast.push((Letter::from_axis_index(i), sign)),
                None => {
                    fast_ok = false;
                    break;
                }
            },
        }
    }
    if fast_ok {
        let mut c = coeff;
        let mut letters = Vec::with_capacity(n);
        for (l, sign) in fast {
            c = Complex::new(c.re * sign, c.im * sign);
            letters.push(l);
        }
        out.add_term(SpinWord::from_letters(letters), c);
        return;
    }
    // general path: cartesian expansion over matrix columns
    let mut partial: Vec<(Vec<Letter>, C<T>)> = vec![(Vec::with_capacity(n), coeff)];
    for s in 0..n {
        let l = word.letter(s);
        match l.axis_index() {
            None => {
                for p in &mut partial {
                    p.0.push(Letter::E);
                }
            }
            Some(j) => {
                let col: [T; 3] = column_of(frame.site(s), j);
                let mut next = Vec::with_capacity(partial.len() * 3);
                for (letters, c) in &partial {
                    for (i, &ci) in col.iter().enumerate() {
                        if ci == T::zero() {
                            continue;
                        }
                        let mut ls = letters.clone();
                        ls.push(Letter::from_axis_index(i));
                        next.push((ls, Complex::new(c.re * ci, c.im * ci)));
                    }
                }
                partial = next;
            }
        }
    }
    for (letters, c) in partial {
        out.add_term(SpinWord::from_letters(letters), c);
    }
}

fn column_of<T: Real>(m: &Mat3<T>, j: usize) -> [T; 3] {
    m.column(j)
}

impl<T: Real> fmt::Display for OperatorSum<T>
where
    T: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{}{}i)*{}", c.re, if c.im >= T::zero() { "+" } else { "-" }, c.im.abs(), w)?;
        }
        Ok(())
    }
}
