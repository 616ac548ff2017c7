//! Pauli (Hilbert–Schmidt) basis representation of Hermitian operators on
//! small qubit tensor products.
//!
//! Letters are `0 = 1`, `1 = σ₁`, `2 = σ₂`, `3 = σ₃`. In dense form the first
//! letter of a word is the most significant tensor factor, and basis state
//! `|0⟩` is spin up (the `+1` eigenvector of `σ₃`).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Slack allowed when validating `‖x‖ ≤ 1`.
pub const NORM_SLACK: f64 = 1e-12;

/// A tensor product of Pauli matrices, one letter per qubit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord(Vec<u8>);

impl PauliWord {
    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l > 3) {
            return Err(Error::InvalidLetter(bad));
        }
        Ok(Self(letters))
    }

    pub fn identity(arity: usize) -> Self {
        Self(vec![0; arity])
    }

    /// Single-qubit word.
    pub fn single(letter: u8) -> Result<Self> {
        Self::new(vec![letter])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&l| l == 0)
    }

    /// Occurrence counts of `(σ₁, σ₂, σ₃)`.
    pub fn class(&self) -> [u32; 3] {
        let mut k = [0u32; 3];
        for &l in &self.0 {
            if l > 0 {
                k[(l - 1) as usize] += 1;
            }
        }
        k
    }

    /// Parses words such as `"XXIZ"` or `"1103"`.
    pub fn parse(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'I' | 'i' | '0' => Ok(0),
                'X' | 'x' | '1' => Ok(1),
                'Y' | 'y' | '2' => Ok(2),
                'Z' | 'z' | '3' => Ok(3),
                other => Err(Error::Parse(format!("unknown Pauli letter '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self(letters))
    }

    /// Column of the nonzero entry in row `row` of the dense matrix, and its value.
    ///
    /// Every Pauli word is a monomial matrix, so each row has exactly one entry.
    pub fn row_entry(&self, row: usize) -> (usize, Complex64) {
        let n = self.0.len();
        let mut col = row;
        let mut phase = Complex64::new(1.0, 0.0);
        for (q, &l) in self.0.iter().enumerate() {
            let bit = (row >> (n - 1 - q)) & 1;
            match l {
                1 => col ^= 1 << (n - 1 - q),
                2 => {
                    col ^= 1 << (n - 1 - q);
                    // σ₂ = [[0, -i], [i, 0]]
                    phase *= if bit == 0 {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                }
                3 => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                _ => {}
            }
        }
        (col, phase)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.0.len();
        let mut m = DMatrix::zeros(dim, dim);
        for row in 0..dim {
            let (col, v) = self.row_entry(row);
            m[(row, col)] = v;
        }
        m
    }

    /// Iterates over all `4^arity` words in lexicographic order.
    pub fn all(arity: usize) -> impl Iterator<Item = PauliWord> {
        let total = 1usize << (2 * arity);
        (0..total).map(move |mut code| {
            let mut letters = vec![0u8; arity];
            for slot in letters.iter_mut().rev() {
                *slot = (code & 3) as u8;
                code >>= 2;
            }
            PauliWord(letters)
        })
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            f.write_str(["I", "X", "Y", "Z"][l as usize])?;
        }
        Ok(())
    }
}

/// 2×2 Pauli matrix for a letter.
pub fn pauli_matrix(letter: u8) -> DMatrix<Complex64> {
    PauliWord(vec![letter]).to_dense()
}

/// Kronecker product of a list of dense operators (first factor most significant).
pub fn kron_all(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

/// Hermitian operator as a sparse real combination of Pauli words.
#[derive(Clone, Debug, PartialEq)]
pub struct HsOperator {
    arity: usize,
    coeffs: BTreeMap<PauliWord, f64>,
}

impl HsOperator {
    pub fn zero(arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Contract("operator arity must be positive".into()));
        }
        Ok(Self {
            arity,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn identity(arity: usize) -> Result<Self> {
        let mut op = Self::zero(arity)?;
        op.add_term(PauliWord::identity(arity), 1.0)?;
        Ok(op)
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (PauliWord, f64)>) -> Result<Self> {
        let mut op = Self::zero(arity)?;
        for (w, c) in terms {
            op.add_term(w, c)?;
        }
        Ok(op)
    }

    /// Adds `c · word`; exact cancellations remove the entry.
    pub fn add_term(&mut self, word: PauliWord, c: f64) -> Result<()> {
        if word.arity() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: word.arity(),
            });
        }
        let entry = self.coeffs.entry(word).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.retain(|_, v| *v != 0.0);
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeff(&self, word: &PauliWord) -> f64 {
        self.coeffs.get(word).copied().unwrap_or(0.0)
    }

    pub fn identity_coeff(&self) -> f64 {
        self.coeff(&PauliWord::identity(self.arity))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, f64)> {
        self.coeffs.iter().map(|(w, &c)| (w, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `(σ₁, σ₂, σ₃)` coefficients of a single-qubit operator.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        if self.arity != 1 {
            return Err(Error::ArityMismatch {
                expected: 1,
                found: self.arity,
            });
        }
        Ok([1u8, 2, 3].map(|l| self.coeff(&PauliWord(vec![l]))))
    }

    /// Euclidean norm of the traceless part of a single-qubit operator.
    ///
    /// For arity one this equals the operator norm of `op − c₀·1`.
    pub fn traceless_norm(&self) -> Result<f64> {
        let b = self.bloch()?;
        Ok(b.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            arity: self.arity,
            coeffs: self
                .coeffs
                .iter()
                .filter_map(|(w, &c)| (c * s != 0.0).then(|| (w.clone(), c * s)))
                .collect(),
        }
    }

    /// Largest coefficient difference against another operator of the same arity.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (w, c) in &self.coeffs {
            worst = worst.max((c - other.coeff(w)).abs());
        }
        for (w, c) in &other.coeffs {
            if !self.coeffs.contains_key(w) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.arity;
        let mut m = DMatrix::zeros(dim, dim);
        for (w, &c) in &self.coeffs {
            for row in 0..dim {
                let (col, v) = w.row_entry(row);
                m[(row, col)] += v * c;
            }
        }
        m
    }

    /// Pauli decomposition of a dense Hermitian matrix; coefficients with
    /// magnitude at most `tol` are dropped.
    pub fn from_dense(m: &DMatrix<Complex64>, tol: f64) -> Result<Self> {
        let dim = m.nrows();
        if dim != m.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::Contract(format!(
                "dense operator must be square with power-of-two dimension, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let arity = dim.trailing_zeros() as usize;
        let mut op = Self::zero(arity)?;
        for w in PauliWord::all(arity) {
            // Tr(σ_w M) / 2^n
            let mut tr = Complex64::new(0.0, 0.0);
            for row in 0..dim {
                let (col, v) = w.row_entry(row);
                tr += v * m[(col, row)];
            }
            let c = tr.re / dim as f64;
            if c.abs() > tol {
                op.coeffs.insert(w, c);
            }
        }
        Ok(op)
    }
}

/// Real 3-vector with `‖x‖₂ ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(x: [f64; 3]) -> Result<Self> {
        let n = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !n.is_finite() || n > 1.0 + NORM_SLACK {
            return Err(Error::NormExceeded(n));
        }
        Ok(Self(x))
    }

    pub fn zero() -> Self {
        Self([0.0; 3])
    }

    /// `t · e_axis` with `axis ∈ {1, 2, 3}`.
    pub fn along(axis: u8, t: f64) -> Result<Self> {
        if !(1..=3).contains(&axis) {
            return Err(Error::InvalidLetter(axis));
        }
        let mut x = [0.0; 3];
        x[(axis - 1) as usize] = t;
        Self::new(x)
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Dense `1 + sign · x·σ`.
    pub fn site_matrix(&self, sign: f64) -> DMatrix<Complex64> {
        let mut m = pauli_matrix(0);
        for (i, &c) in self.0.iter().enumerate() {
            if c != 0.0 {
                m += pauli_matrix(i as u8 + 1) * Complex64::new(sign * c, 0.0);
            }
        }
        m
    }
}

/// The product boundary `⊗_sites (1 + s_site · x·σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBoundary {
    x: BlochVector,
    signs: Vec<i8>,
}

impl ProductBoundary {
    pub fn uniform(x: BlochVector, sites: usize) -> Self {
        Self {
            x,
            signs: vec![1; sites],
        }
    }

    pub fn with_signs(x: BlochVector, signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Contract("boundary signs must be ±1".into()));
        }
        Ok(Self { x, signs })
    }

    pub fn x(&self) -> BlochVector {
        self.x
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sites(&self) -> usize {
        self.signs.len()
    }

    /// Every Pauli word with a nonzero coefficient in the expansion of the
    /// tensor product, together with that coefficient.
    pub fn expand(&self) -> Vec<(PauliWord, f64)> {
        let x = self.x.components();
        let mut terms: Vec<(Vec<u8>, f64)> = vec![(Vec::with_capacity(self.sites()), 1.0)];
        for &s in &self.signs {
            let mut next = Vec::with_capacity(terms.len() * 4);
            for (letters, c) in &terms {
                let mut w = letters.clone();
                w.push(0);
                next.push((w, *c));
                for axis in 0..3 {
                    if x[axis] != 0.0 {
                        let mut w = letters.clone();
                        w.push(axis as u8 + 1);
                        next.push((w, c * f64::from(s) * x[axis]));
                    }
                }
            }
            terms = next;
        }
        terms.into_iter().map(|(l, c)| (PauliWord(l), c)).collect()
    }

    pub fn to_operator(&self) -> Result<HsOperator> {
        HsOperator::from_terms(self.sites(), self.expand())
    }

    /// Dense Kronecker product of the per-site matrices.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let factors: Vec<_> = self
            .signs
            .iter()
            .map(|&s| self.x.site_matrix(f64::from(s)))
            .collect();
        kron_all(&factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn word(s: &str) -> PauliWord {
        PauliWord::parse(s).unwrap()
    }

    #[test]
    fn traceless_norm_examples() {
        let id = HsOperator::identity(1).unwrap();
        assert_eq!(id.traceless_norm().unwrap(), 0.0);

        let op = HsOperator::from_terms(1, [(word("I"), 1.0), (word("Z"), 0.25)]).unwrap();
        assert_eq!(op.traceless_norm().unwrap(), 0.25);

        // Operator norm of 3/5 σ₁ + 4/5 σ₂ from its eigenvalues ±|x|.
        let op = HsOperator::from_terms(1, [(word("X"), 0.6), (word("Y"), 0.8)]).unwrap();
        let eig = op.to_dense().map(|c| c).symmetric_eigenvalues();
        let spectral = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        assert!((spectral - 1.0).abs() < 1e-12);
        assert!((op.traceless_norm().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn traceless_norm_rejects_wider_operators() {
        let op = HsOperator::identity(2).unwrap();
        assert!(matches!(op.traceless_norm(), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn word_validation() {
        assert!(matches!(PauliWord::new(vec![0, 4]), Err(Error::InvalidLetter(4))));
        assert!(PauliWord::parse("XQ").is_err());
        assert_eq!(word("XYZI").class(), [1, 1, 1]);
        assert_eq!(word("XYZI").to_string(), "XYZI");
        assert_eq!(PauliWord::all(2).count(), 16);
    }

    #[test]
    fn add_term_rejects_arity_mismatch() {
        let mut op = HsOperator::zero(2).unwrap();
        assert!(op.add_term(word("X"), 1.0).is_err());
    }

    #[test]
    fn expand_single_site() {
        let x = BlochVector::new([0.4, 0.0, 0.0]).unwrap();
        let terms = ProductBoundary::uniform(x, 1).expand();
        assert_eq!(terms, vec![(word("I"), 1.0), (word("X"), 0.4)]);
    }

    #[test]
    fn expand_with_sign_flip() {
        let t = 0.3;
        let x = BlochVector::new([t, 0.0, 0.0]).unwrap();
        let b = ProductBoundary::with_signs(x, vec![1, -1]).unwrap();
        let op = b.to_operator().unwrap();
        assert_eq!(op.len(), 4);
        assert_eq!(op.coeff(&word("II")), 1.0);
        assert_eq!(op.coeff(&word("XI")), t);
        assert_eq!(op.coeff(&word("IX")), -t);
        assert_eq!(op.coeff(&word("XX")), -t * t);
    }

    #[test]
    fn expand_multinomial_cross_term() {
        let (a, b) = (0.5, 0.25);
        let x = BlochVector::new([a, b, 0.0]).unwrap();
        let op = ProductBoundary::uniform(x, 2).to_operator().unwrap();
        assert_eq!(op.coeff(&word("XY")), a * b);
        assert_eq!(op.coeff(&word("YX")), a * b);
        assert_eq!(op.coeff(&word("YY")), b * b);
        assert_eq!(op.len(), 9);
    }

    #[test]
    fn bloch_vector_validation() {
        assert!(BlochVector::new([1.0, 1.0, 0.0]).is_err());
        assert!(BlochVector::along(4, 0.1).is_err());
        assert!(BlochVector::new([0.6, 0.8, 0.0]).is_ok());
    }

    #[test]
    fn dense_roundtrip() {
        let op = HsOperator::from_terms(
            2,
            [(word("XY"), 0.3), (word("ZI"), -0.7), (word("II"), 1.0), (word("YY"), 0.1)],
        )
        .unwrap();
        let back = HsOperator::from_dense(&op.to_dense(), 1e-14).unwrap();
        assert!(op.max_abs_diff(&back) < 1e-15);
    }

    fn ball_vector() -> impl Strategy<Value = [f64; 3]> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| {
            let n = (a * a + b * b + c * c).sqrt();
            if n > 1.0 {
                [a / n, b / n, c / n]
            } else {
                [a, b, c]
            }
        })
    }

    proptest! {
        #[test]
        fn expansion_matches_dense_kronecker(
            x in ball_vector(),
            signs in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 1..=4),
        ) {
            let b = ProductBoundary::with_signs(BlochVector::new(x).unwrap(), signs).unwrap();
            let resummed = b.to_operator().unwrap().to_dense();
            let direct = b.to_dense();
            let diff = (resummed - direct).iter().fold(0.0f64, |a, c| a.max(c.norm()));
            prop_assert!(diff < 1e-12);
        }

        #[test]
        fn single_site_traceless_norm_is_bloch_norm(x in ball_vector()) {
            let v = BlochVector::new(x).unwrap();
            let mut op = ProductBoundary::uniform(v, 1).to_operator().unwrap();
            op.add_term(PauliWord::identity(1), -1.0).unwrap();
            prop_assert!((op.traceless_norm().unwrap() - v.norm()).abs() < 1e-14);
        }
    }
}
