//! The single-site transfer map of a degree-`d` AKLT vertex.
//!
//! A site has one outgoing slot (towards the parent) and `d − 1` ingoing
//! slots. The normalized map `F̃(Y) = 2/(d+1) · Σ_k W_k Y W_kᵀ` sends
//! operators on the ingoing slots to operators on the outgoing edge, with
//! `W_k = S·P_k` and `S = |↑⟩⟨↓| − |↓⟩⟨↑|`. The map is unital.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, Matrix2};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{BlochVector, HsOperator, PauliWord};
use crate::rational::{binomial, multinomial, rat_int, serialize_rational, to_f64, RatPoly, Rational};

/// Vertex degree `d ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SiteDegree(u32);

impl SiteDegree {
    pub fn new(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::Contract(format!("site degree must be at least 2, got {d}")));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Number of ingoing slots.
    pub fn inputs(self) -> usize {
        self.0 as usize - 1
    }
}

/// One nonzero Pauli-basis matrix element of the unital site map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransferCoefficient {
    pub class: [u32; 3],
    #[serde(serialize_with = "serialize_rational")]
    pub value: Rational,
    #[serde(serialize_with = "serialize_word")]
    pub output: PauliWord,
}

fn serialize_word<S: serde::Serializer>(w: &PauliWord, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    Covered(TransferCoefficient),
    /// Two or more odd indices; only the dense backend evaluates these.
    NotCovered,
}

fn coefficient_cache() -> &'static Mutex<HashMap<[u32; 3], ClosedForm>> {
    static CACHE: OnceLock<Mutex<HashMap<[u32; 3], ClosedForm>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn closed_form_uncached(k: [u32; 3]) -> ClosedForm {
    let odd: Vec<usize> = (0..3).filter(|&i| k[i] % 2 == 1).collect();
    if odd.len() > 1 {
        return ClosedForm::NotCovered;
    }
    let kp: Vec<u64> = k.iter().map(|&ki| u64::from(ki + ki % 2)).collect();
    let total: u64 = kp.iter().sum();
    let half: Vec<u64> = kp.iter().map(|&ki| ki / 2).collect();
    let mut value = Rational::new(
        BigInt::from(multinomial(&half)),
        BigInt::from(multinomial(&kp)) * BigInt::from(total + 1),
    );
    let output = match odd.first() {
        Some(&i) => {
            value = -value;
            PauliWord::new(vec![i as u8 + 1]).expect("letter in range")
        }
        None => PauliWord::identity(1),
    };
    ClosedForm::Covered(TransferCoefficient {
        class: k,
        value,
        output,
    })
}

/// Closed-form image of any word in the Pauli class `(k₁, k₂, k₃)`.
///
/// The value does not depend on `d` beyond the precondition `k ≤ d − 1`.
pub fn closed_form_coefficient(d: SiteDegree, k1: u32, k2: u32, k3: u32) -> Result<ClosedForm> {
    let k = k1 + k2 + k3;
    if k as usize > d.inputs() {
        return Err(Error::Contract(format!(
            "class weight {k} exceeds d - 1 = {}",
            d.inputs()
        )));
    }
    let key = [k1, k2, k3];
    let mut cache = coefficient_cache().lock().expect("coefficient cache poisoned");
    Ok(cache.entry(key).or_insert_with(|| closed_form_uncached(key)).clone())
}

/// Dense intertwiners `W_0, …, W_d`, each a `2 × 2^(d−1)` real matrix.
#[derive(Clone, Debug)]
pub struct Intertwiner {
    d: SiteDegree,
    w: Vec<DMatrix<f64>>,
    support: Vec<Vec<(usize, usize, f64)>>,
}

impl Intertwiner {
    pub fn new(d: SiteDegree) -> Self {
        let n = d.inputs();
        let dim = 1usize << n;
        let dd = u64::from(d.get());
        let mut w = Vec::with_capacity(d.get() as usize + 1);
        let mut support = Vec::with_capacity(d.get() as usize + 1);
        for k in 0..=d.get() {
            let norm = 1.0 / to_f64(&Rational::from_integer(BigInt::from(binomial(dd, u64::from(k))))).sqrt();
            let mut m = DMatrix::zeros(2, dim);
            let mut sup = Vec::new();
            for col in 0..dim {
                // Bit value 0 is spin up.
                let ups = n as u32 - (col as u32).count_ones();
                if ups + 1 == k {
                    // Outgoing slot up, then S|↑⟩ = −|↓⟩.
                    m[(1, col)] = -norm;
                    sup.push((1, col, -norm));
                }
                if ups == k {
                    // Outgoing slot down, then S|↓⟩ = |↑⟩.
                    m[(0, col)] = norm;
                    sup.push((0, col, norm));
                }
            }
            w.push(m);
            support.push(sup);
        }
        Self { d, w, support }
    }

    /// Shared instance for degree `d`.
    pub fn shared(d: SiteDegree) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Intertwiner>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("intertwiner cache poisoned");
        guard
            .entry(d.get())
            .or_insert_with(|| Arc::new(Self::new(d)))
            .clone()
    }

    pub fn degree(&self) -> SiteDegree {
        self.d
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.w
    }

    fn prefactor(&self) -> f64 {
        2.0 / f64::from(self.d.get() + 1)
    }

    /// Operator-norm deviation of `2/(d+1) Σ W_k W_kᵀ` from the identity.
    pub fn normalization_error(&self) -> f64 {
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for m in &self.w {
            acc += m * m.transpose();
        }
        acc *= self.prefactor();
        (acc - DMatrix::identity(2, 2)).abs().max()
    }

    /// Image of a dense operator on the ingoing slots.
    pub fn apply_dense(&self, y: &DMatrix<Complex64>) -> Result<Matrix2<Complex64>> {
        let dim = 1usize << self.d.inputs();
        if y.nrows() != dim || y.ncols() != dim {
            return Err(Error::ArityMismatch {
                expected: self.d.inputs(),
                found: y.nrows().trailing_zeros() as usize,
            });
        }
        let mut r = Matrix2::<Complex64>::zeros();
        for sup in &self.support {
            for &(row, i, v) in sup {
                for &(row2, j, v2) in sup {
                    r[(row, row2)] += y[(i, j)] * (v * v2);
                }
            }
        }
        Ok(r * Complex64::new(self.prefactor(), 0.0))
    }

    /// Pauli coefficients `[c₀, c₁, c₂, c₃]` of the image of a Pauli word.
    pub fn apply_word(&self, word: &PauliWord) -> Result<[f64; 4]> {
        if word.arity() != self.d.inputs() {
            return Err(Error::ArityMismatch {
                expected: self.d.inputs(),
                found: word.arity(),
            });
        }
        let mut r = Matrix2::<Complex64>::zeros();
        for (k, sup) in self.support.iter().enumerate() {
            let wk = &self.w[k];
            for &(row, i, v) in sup {
                let (j, phase) = word.row_entry(i);
                for row2 in 0..2 {
                    let v2 = wk[(row2, j)];
                    if v2 != 0.0 {
                        r[(row, row2)] += phase * (v * v2);
                    }
                }
            }
        }
        Ok(pauli_coefficients(&(r * Complex64::new(self.prefactor(), 0.0))))
    }

    /// Image of a product operator `⊗_q ops[q]` without forming the tensor product.
    ///
    /// `W_k` is supported on inputs with a fixed number of up spins, so only
    /// the sums `E[m][m'] = Σ_{|i|=m, |j|=m'} ∏_q Y_q[i_q, j_q]` are needed.
    pub fn apply_product(&self, ops: &[Matrix2<Complex64>]) -> Result<Matrix2<Complex64>> {
        let n = self.d.inputs();
        if ops.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                found: ops.len(),
            });
        }
        let mut e = vec![vec![Complex64::zero(); n + 1]; n + 1];
        e[0][0] = Complex64::one();
        for (q, y) in ops.iter().enumerate() {
            let mut next = vec![vec![Complex64::zero(); n + 1]; n + 1];
            for m in 0..=q {
                for mp in 0..=q {
                    let cur = e[m][mp];
                    if cur == Complex64::zero() {
                        continue;
                    }
                    // Index 0 is up: it raises the up count.
                    next[m + 1][mp + 1] += cur * y[(0, 0)];
                    next[m + 1][mp] += cur * y[(0, 1)];
                    next[m][mp + 1] += cur * y[(1, 0)];
                    next[m][mp] += cur * y[(1, 1)];
                }
            }
            e = next;
        }
        let dd = u64::from(self.d.get());
        let mut r = Matrix2::<Complex64>::zeros();
        for k in 0..=self.d.get() as usize {
            let inv = 1.0 / to_f64(&Rational::from_integer(BigInt::from(binomial(dd, k as u64))));
            // Row 0 (up) reads inputs with k ups, row 1 reads k − 1 ups with sign −1.
            let rows = [(0usize, k as isize, 1.0), (1usize, k as isize - 1, -1.0)];
            for &(r1, u1, s1) in &rows {
                for &(r2, u2, s2) in &rows {
                    if u1 < 0 || u2 < 0 || u1 as usize > n || u2 as usize > n {
                        continue;
                    }
                    r[(r1, r2)] += e[u1 as usize][u2 as usize] * (s1 * s2 * inv);
                }
            }
        }
        Ok(r * Complex64::new(self.prefactor(), 0.0))
    }
}

/// `[c₀, c₁, c₂, c₃]` with `M = Σ c_a σ_a` for a 2×2 matrix.
pub fn pauli_coefficients(m: &Matrix2<Complex64>) -> [f64; 4] {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    [
        ((a + d) * 0.5).re,
        ((b + c) * 0.5).re,
        // Tr(σ₂ M)/2 = i(b − c)/2
        ((b - c) * Complex64::new(0.0, 0.5)).re,
        ((a - d) * 0.5).re,
    ]
}

/// `c₀ 1 + c·σ` as a 2×2 matrix.
pub fn from_pauli_coefficients(c: [f64; 4]) -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(c[0] + c[3], 0.0),
        Complex64::new(c[1], -c[2]),
        Complex64::new(c[1], c[2]),
        Complex64::new(c[0] - c[3], 0.0),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    ClosedForm,
    Dense,
}

fn coeffs_to_operator(c: [f64; 4]) -> Result<HsOperator> {
    HsOperator::from_terms(
        1,
        (0..4u8)
            .filter(|&a| c[a as usize] != 0.0)
            .map(|a| (PauliWord::new(vec![a]).expect("letter in range"), c[a as usize])),
    )
}

/// Unital site map applied to an operator on the `d − 1` ingoing slots.
pub fn apply_site_transfer(d: SiteDegree, input: &HsOperator, backend: Backend) -> Result<HsOperator> {
    if input.arity() != d.inputs() {
        return Err(Error::ArityMismatch {
            expected: d.inputs(),
            found: input.arity(),
        });
    }
    let dense = Intertwiner::shared(d);
    let mut acc = [0.0f64; 4];
    for (word, c) in input.terms() {
        let image = match backend {
            Backend::Dense => dense.apply_word(word)?,
            Backend::ClosedForm => {
                let [k1, k2, k3] = word.class();
                match closed_form_coefficient(d, k1, k2, k3)? {
                    ClosedForm::Covered(tc) => {
                        let mut out = [0.0; 4];
                        out[tc.output.letters()[0] as usize] = to_f64(&tc.value);
                        out
                    }
                    ClosedForm::NotCovered => dense.apply_word(word)?,
                }
            }
        };
        for a in 0..4 {
            acc[a] += c * image[a];
        }
    }
    coeffs_to_operator(acc)
}

/// The boundary traces of `F̃(B(x))` for `B(x) = (1 + x·σ)^⊗(d−1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryTrace {
    /// Identity coefficient `f_d(‖x‖)`.
    pub scalar: f64,
    /// Coefficients on `(σ₁, σ₂, σ₃)`.
    pub sigma: [f64; 3],
}

/// `f_d(t) = Σ_{k even ≤ d−1} C(d−1, k) t^k / (k + 1)` as an exact even polynomial.
pub fn f_poly(d: SiteDegree) -> RatPoly {
    let n = u64::from(d.get() - 1);
    let mut c = vec![Rational::zero(); n as usize + 1];
    for k in (0..=n).step_by(2) {
        c[k as usize] = Rational::new(BigInt::from(binomial(n, k)), BigInt::from(k + 1));
    }
    RatPoly::new(c)
}

/// `−f′_{d+1}(t) / d`, the signed magnitude of the σ-component, as an odd polynomial.
pub fn sigma_poly(d: SiteDegree) -> RatPoly {
    let next = SiteDegree(d.get() + 1);
    f_poly(next).derivative().scale(&(-Rational::one() / rat_int(i64::from(d.get()))))
}

/// Closed form `((1+t)^d − (1−t)^d) / (2dt)`, valid for `t ≠ 0`.
pub fn f_closed(d: SiteDegree, t: f64) -> f64 {
    let d = f64::from(d.get());
    ((1.0 + t).powf(d) - (1.0 - t).powf(d)) / (2.0 * d * t)
}

/// Identity and σ coefficients of the normalized image of `B(x)`.
pub fn boundary_trace(d: SiteDegree, x: BlochVector) -> BoundaryTrace {
    let t = x.norm();
    let scalar = f_poly(d).eval_f64(t);
    if t == 0.0 {
        return BoundaryTrace {
            scalar: 1.0,
            sigma: [0.0; 3],
        };
    }
    // The odd polynomial divided by t stays regular at the origin.
    let g = sigma_poly(d);
    let reduced = RatPoly::new(g.coeffs().iter().skip(1).cloned().collect());
    let s = reduced.eval_f64(t);
    let xs = x.components();
    BoundaryTrace {
        scalar,
        sigma: [xs[0] * s, xs[1] * s, xs[2] * s],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::ProductBoundary;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn deg(d: u32) -> SiteDegree {
        SiteDegree::new(d).unwrap()
    }

    fn covered(d: u32, k: [u32; 3]) -> TransferCoefficient {
        match closed_form_coefficient(deg(d), k[0], k[1], k[2]).unwrap() {
            ClosedForm::Covered(c) => c,
            ClosedForm::NotCovered => panic!("class {k:?} not covered"),
        }
    }

    #[test]
    fn closed_form_examples() {
        let c = covered(5, [2, 0, 0]);
        assert_eq!((c.value, c.output.to_string()), (rat(1, 3), "I".to_string()));
        let c = covered(5, [1, 0, 0]);
        assert_eq!((c.value, c.output.to_string()), (rat(-1, 3), "X".to_string()));
        let c = covered(7, [2, 2, 0]);
        assert_eq!((c.value, c.output.to_string()), (rat(1, 15), "I".to_string()));
        assert_eq!(closed_form_coefficient(deg(5), 1, 1, 0).unwrap(), ClosedForm::NotCovered);
        assert!(closed_form_coefficient(deg(3), 2, 1, 0).is_err());
        assert!(SiteDegree::new(1).is_err());
    }

    #[test]
    fn odd_single_axis_is_minus_one_over_k_plus_two() {
        for k in (1..8).step_by(2) {
            let c = covered(9, [0, 0, k]);
            assert_eq!(c.value, rat(-1, i64::from(k) + 2));
            assert_eq!(c.output.to_string(), "Z");
        }
    }

    #[test]
    fn coefficients_do_not_depend_on_degree() {
        for d in 4..9 {
            assert_eq!(covered(d, [2, 1, 0]), covered(8, [2, 1, 0]));
            assert_eq!(covered(d, [0, 2, 0]), covered(3, [0, 2, 0]));
        }
    }

    #[test]
    fn intertwiners_are_normalized() {
        for d in 2..=8 {
            assert!(Intertwiner::new(deg(d)).normalization_error() < 1e-14);
        }
    }

    #[test]
    fn apply_examples() {
        let id = HsOperator::identity(4).unwrap();
        for backend in [Backend::ClosedForm, Backend::Dense] {
            let out = apply_site_transfer(deg(5), &id, backend).unwrap();
            assert!((out.identity_coeff() - 1.0).abs() < 1e-14);
            assert!(out.traceless_norm().unwrap() < 1e-14);

            let xx = HsOperator::from_terms(4, [(PauliWord::parse("XXII").unwrap(), 1.0)]).unwrap();
            let out = apply_site_transfer(deg(5), &xx, backend).unwrap();
            assert!((out.identity_coeff() - 1.0 / 3.0).abs() < 1e-14);

            let y = HsOperator::from_terms(2, [(PauliWord::parse("YI").unwrap(), 1.0)]).unwrap();
            let out = apply_site_transfer(deg(3), &y, backend).unwrap();
            assert!((out.coeff(&PauliWord::parse("Y").unwrap()) + 1.0 / 3.0).abs() < 1e-14);
            assert!(out.identity_coeff().abs() < 1e-14);
        }
        assert!(apply_site_transfer(deg(5), &HsOperator::identity(3).unwrap(), Backend::Dense).is_err());
    }

    #[test]
    fn backends_agree_on_every_word_small_degrees() {
        for d in 2..=6 {
            let d = deg(d);
            for w in PauliWord::all(d.inputs()) {
                let op = HsOperator::from_terms(d.inputs(), [(w.clone(), 1.0)]).unwrap();
                let a = apply_site_transfer(d, &op, Backend::ClosedForm).unwrap();
                let b = apply_site_transfer(d, &op, Backend::Dense).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12, "d={} word {w}", d.get());
            }
        }
    }

    #[test]
    fn two_odd_classes_vanish_under_dense_backend() {
        let it = Intertwiner::new(deg(6));
        for w in ["XYII", "XZYY", "XYZI", "XXXYI", "YZZZI"] {
            let w = PauliWord::parse(&format!("{w}IIIII")[..5]).unwrap();
            let c = it.apply_word(&w).unwrap();
            if w.class().iter().filter(|&&k| k % 2 == 1).count() > 1 {
                assert!(c.iter().all(|v| v.abs() < 1e-14), "{w}: {c:?}");
            }
        }
    }

    #[test]
    fn product_and_dense_paths_agree() {
        let d = deg(5);
        let it = Intertwiner::new(d);
        let ops: Vec<_> = [[1.0, 0.2, -0.1, 0.4], [1.0, 0.0, 0.5, 0.0], [0.7, -0.3, 0.0, 0.1], [1.0, 0.0, 0.0, -0.9]]
            .iter()
            .map(|&c| from_pauli_coefficients(c))
            .collect();
        let mut dense = DMatrix::from_element(1, 1, Complex64::one());
        for op in &ops {
            dense = dense.kronecker(&DMatrix::from_fn(2, 2, |r, s| op[(r, s)]));
        }
        let a = it.apply_product(&ops).unwrap();
        let b = it.apply_dense(&dense).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn boundary_trace_examples() {
        let zero = boundary_trace(deg(4), BlochVector::zero());
        assert_eq!((zero.scalar, zero.sigma), (1.0, [0.0; 3]));

        let unit = BlochVector::along(1, 1.0).unwrap();
        assert!((boundary_trace(deg(2), unit).scalar - 1.0).abs() < 1e-15);

        for t in [0.25, 0.5, 1.0] {
            let bt = boundary_trace(deg(3), BlochVector::along(3, t).unwrap());
            let ratio = bt.sigma[2] / bt.scalar;
            assert!((ratio + 2.0 * t / (3.0 + t * t)).abs() < 1e-15);
        }
    }

    #[test]
    fn f_closed_matches_polynomial() {
        for d in 2..=12 {
            for t in [0.1, 0.5, 0.9, 1.0] {
                assert!((f_closed(deg(d), t) - f_poly(deg(d)).eval_f64(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_trace_matches_dense_contraction() {
        for d in 2..=8 {
            let d = deg(d);
            let it = Intertwiner::new(d);
            for x in [[0.1, 0.0, 0.0], [0.3, -0.4, 0.2], [0.0, 0.0, 1.0], [0.5, 0.5, 0.5]] {
                let x = BlochVector::new(x).unwrap();
                let b = ProductBoundary::uniform(x, d.inputs());
                let out = pauli_coefficients(&it.apply_dense(&b.to_dense()).unwrap());
                let bt = boundary_trace(d, x);
                assert!((out[0] - bt.scalar).abs() < 1e-12);
                for i in 0..3 {
                    assert!((out[i + 1] - bt.sigma[i]).abs() < 1e-12);
                }
            }
        }
    }

    fn ball_vector() -> impl Strategy<Value = [f64; 3]> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| {
            let n = (a * a + b * b + c * c).sqrt().max(1.0);
            [a / n, b / n, c / n]
        })
    }

    proptest! {
        #[test]
        fn normalized_image_stays_in_the_ball(
            x in ball_vector(),
            d in 2u32..=7,
            flips in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 6),
        ) {
            let d = deg(d);
            let b = ProductBoundary::with_signs(BlochVector::new(x).unwrap(), flips[..d.inputs()].to_vec()).unwrap();
            let out = apply_site_transfer(d, &b.to_operator().unwrap(), Backend::ClosedForm).unwrap();
            let norm = out.scaled(1.0 / out.identity_coeff()).traceless_norm().unwrap();
            prop_assert!(norm <= 1.0 + 1e-12);
        }
    }
}
