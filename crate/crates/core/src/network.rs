//! Brute-force valence-bond network contraction.
//!
//! A network is a set of sites, each carrying `deg` spin-1/2 slots that are
//! projected onto their symmetric subspace. Every slot is either half of a
//! singlet bond to another site, an output leg (the slot followed by the
//! singlet map `S = |↑⟩⟨↓| − |↓⟩⟨↑|`), or an open input leg. Contracting the
//! physical spins yields a completely positive map from operators on the
//! input legs to operators on the output legs,
//!
//! `R(X) = Σ_m ∏_v C(deg_v, m_v)⁻¹ · A_m X A_mᵀ`,
//!
//! where `m` runs over per-site up-spin counts and `A_m` has integer entries.
//! Nothing here relies on closed-form coefficients.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix2};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::pauli::PauliWord;
use crate::rational::{binomial, Rational};

/// Largest number of slot configurations enumerated during compilation.
pub const MAX_ASSIGNMENTS: u64 = 1 << 24;

/// Topology of a valence-bond network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    degrees: Vec<u32>,
    bonds: Vec<(usize, usize)>,
    outputs: Vec<usize>,
    inputs: Vec<usize>,
}

impl Network {
    /// Every site's degree must equal its number of bond ends plus legs.
    pub fn new(
        degrees: Vec<u32>,
        bonds: Vec<(usize, usize)>,
        outputs: Vec<usize>,
        inputs: Vec<usize>,
    ) -> Result<Self> {
        let n = degrees.len();
        let mut used = vec![0u32; n];
        for &(u, v) in &bonds {
            if u >= n || v >= n || u == v {
                return Err(Error::Contract(format!("bad bond ({u}, {v})")));
            }
            used[u] += 1;
            used[v] += 1;
        }
        for &s in outputs.iter().chain(inputs.iter()) {
            if s >= n {
                return Err(Error::Contract(format!("leg references missing site {s}")));
            }
            used[s] += 1;
        }
        if let Some(v) = (0..n).find(|&v| used[v] != degrees[v]) {
            return Err(Error::Contract(format!(
                "site {v} has degree {} but {} attached slots",
                degrees[v], used[v]
            )));
        }
        if outputs.is_empty() {
            return Err(Error::Contract("network needs at least one output".into()));
        }
        Ok(Self {
            degrees,
            bonds,
            outputs,
            inputs,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.degrees.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Number of slot configurations compilation would enumerate.
    pub fn assignment_count(&self) -> u128 {
        1u128 << (self.bonds.len() + self.outputs.len() + self.inputs.len())
    }

    pub fn compile(&self) -> Result<CompiledNetwork> {
        self.compile_with_budget(MAX_ASSIGNMENTS)
    }

    pub fn compile_with_budget(&self, budget: u64) -> Result<CompiledNetwork> {
        let count = self.assignment_count();
        if count > u128::from(budget) {
            return Err(Error::BudgetExceeded(format!(
                "{count} slot configurations exceed the budget of {budget}"
            )));
        }
        let n_sites = self.degrees.len();
        let (ne, no, ni) = (self.bonds.len(), self.outputs.len(), self.inputs.len());
        let mut groups: HashMap<Vec<u8>, HashMap<(u32, u32), i64>> = HashMap::new();
        let mut ups = vec![0u8; n_sites];
        // Input configurations are enumerated innermost; their up counts are additive.
        let input_ups: Vec<Vec<(usize, u8)>> = (0..1usize << ni)
            .map(|code| {
                let mut acc: HashMap<usize, u8> = HashMap::new();
                for (q, &s) in self.inputs.iter().enumerate() {
                    if (code >> (ni - 1 - q)) & 1 == 0 {
                        *acc.entry(s).or_default() += 1;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        for outer in 0..1usize << (ne + no) {
            ups.iter_mut().for_each(|u| *u = 0);
            let mut sign = 1i64;
            for (e, &(u, v)) in self.bonds.iter().enumerate() {
                if (outer >> e) & 1 == 0 {
                    ups[u] += 1;
                } else {
                    ups[v] += 1;
                    sign = -sign;
                }
            }
            let mut out = 0u32;
            for (q, &s) in self.outputs.iter().enumerate() {
                let site_end_up = (outer >> (ne + q)) & 1 == 0;
                out <<= 1;
                if site_end_up {
                    // S|↑⟩ = −|↓⟩
                    ups[s] += 1;
                    out |= 1;
                    sign = -sign;
                }
            }
            for (code, extra) in input_ups.iter().enumerate() {
                let mut key = ups.clone();
                for &(s, k) in extra {
                    key[s] += k;
                }
                *groups
                    .entry(key)
                    .or_default()
                    .entry((out, code as u32))
                    .or_insert(0) += sign;
            }
        }
        let mut compiled: Vec<Group> = groups
            .into_iter()
            .filter_map(|(key, entries)| {
                let entries: Vec<(u32, u32, i64)> = entries
                    .into_iter()
                    .filter(|&(_, a)| a != 0)
                    .map(|((o, i), a)| (o, i, a))
                    .collect();
                if entries.is_empty() {
                    return None;
                }
                let mut denom = BigInt::one();
                for (v, &m) in key.iter().enumerate() {
                    denom *= BigInt::from(binomial(u64::from(self.degrees[v]), u64::from(m)));
                }
                let weight = BigRational::new(BigInt::one(), denom);
                Some(Group::new(key, weight, entries))
            })
            .collect();
        compiled.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(CompiledNetwork {
            n_out: no,
            n_in: ni,
            groups: compiled,
        })
    }
}

#[derive(Clone, Debug)]
struct Group {
    key: Vec<u8>,
    weight: Rational,
    weight_f64: f64,
    entries: Vec<(u32, u32, i64)>,
    lookup: HashMap<(u32, u32), i64>,
}

impl Group {
    fn new(key: Vec<u8>, weight: Rational, mut entries: Vec<(u32, u32, i64)>) -> Self {
        entries.sort_unstable();
        let lookup = entries.iter().map(|&(o, i, a)| ((o, i), a)).collect();
        let weight_f64 = crate::rational::to_f64(&weight);
        Self {
            key,
            weight,
            weight_f64,
            entries,
            lookup,
        }
    }
}

/// The contracted map `X ↦ Σ_m w_m A_m X A_mᵀ` in sparse form.
#[derive(Clone, Debug)]
pub struct CompiledNetwork {
    n_out: usize,
    n_in: usize,
    groups: Vec<Group>,
}

impl CompiledNetwork {
    pub fn n_inputs(&self) -> usize {
        self.n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.n_out
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Applies the unnormalized map to a dense input operator.
    pub fn apply_dense(&self, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let din = 1usize << self.n_in;
        let dout = 1usize << self.n_out;
        if x.nrows() != din || x.ncols() != din {
            return Err(Error::ArityMismatch {
                expected: self.n_in,
                found: x.nrows().trailing_zeros() as usize,
            });
        }
        let mut r = DMatrix::<Complex64>::zeros(dout, dout);
        let mut y = DMatrix::<Complex64>::zeros(dout, din);
        for g in &self.groups {
            y.fill(Complex64::zero());
            for &(o, i, a) in &g.entries {
                let a = a as f64;
                for c in 0..din {
                    y[(o as usize, c)] += x[(i as usize, c)] * a;
                }
            }
            for &(o2, i, a) in &g.entries {
                let a = a as f64 * g.weight_f64;
                for o1 in 0..dout {
                    r[(o1, o2 as usize)] += y[(o1, i as usize)] * a;
                }
            }
        }
        Ok(r)
    }

    /// Applies the unnormalized map to a product input `⊗_q ops[q]`.
    pub fn apply_product(&self, ops: &[Matrix2<Complex64>]) -> Result<DMatrix<Complex64>> {
        if ops.len() != self.n_in {
            return Err(Error::ArityMismatch {
                expected: self.n_in,
                found: ops.len(),
            });
        }
        let n = self.n_in;
        let dout = 1usize << self.n_out;
        let entry = |i1: u32, i2: u32| -> Complex64 {
            let mut acc = Complex64::new(1.0, 0.0);
            for (q, op) in ops.iter().enumerate() {
                let s = n - 1 - q;
                acc *= op[(((i1 >> s) & 1) as usize, ((i2 >> s) & 1) as usize)];
                if acc == Complex64::zero() {
                    break;
                }
            }
            acc
        };
        let mut r = DMatrix::<Complex64>::zeros(dout, dout);
        for g in &self.groups {
            for &(o1, i1, a1) in &g.entries {
                for &(o2, i2, a2) in &g.entries {
                    r[(o1 as usize, o2 as usize)] += entry(i1, i2) * ((a1 * a2) as f64 * g.weight_f64);
                }
            }
        }
        Ok(r)
    }

    /// Exact map applied to a product of integer 2×2 matrices.
    pub fn apply_product_int(&self, ops: &[[[i64; 2]; 2]]) -> Result<Vec<Vec<Rational>>> {
        if ops.len() != self.n_in {
            return Err(Error::ArityMismatch {
                expected: self.n_in,
                found: ops.len(),
            });
        }
        let n = self.n_in;
        let dout = 1usize << self.n_out;
        let entry = |i1: u32, i2: u32| -> BigInt {
            let mut acc = BigInt::one();
            for (q, op) in ops.iter().enumerate() {
                let s = n - 1 - q;
                acc *= op[((i1 >> s) & 1) as usize][((i2 >> s) & 1) as usize];
                if acc.is_zero() {
                    break;
                }
            }
            acc
        };
        let mut r = vec![vec![Rational::zero(); dout]; dout];
        for g in &self.groups {
            let mut block = vec![vec![BigInt::zero(); dout]; dout];
            for &(o1, i1, a1) in &g.entries {
                for &(o2, i2, a2) in &g.entries {
                    block[o1 as usize][o2 as usize] += entry(i1, i2) * (a1 * a2);
                }
            }
            for (row, brow) in r.iter_mut().zip(block) {
                for (c, b) in row.iter_mut().zip(brow) {
                    if !b.is_zero() {
                        *c += &g.weight * Rational::from_integer(b);
                    }
                }
            }
        }
        Ok(r)
    }

    /// Exact Pauli-basis matrix element: the `σ_out` coefficient of the
    /// unnormalized image of `σ_in`.
    pub fn pauli_element(&self, out: &PauliWord, input: &PauliWord) -> Result<Rational> {
        if out.arity() != self.n_out {
            return Err(Error::ArityMismatch {
                expected: self.n_out,
                found: out.arity(),
            });
        }
        if input.arity() != self.n_in {
            return Err(Error::ArityMismatch {
                expected: self.n_in,
                found: input.arity(),
            });
        }
        // Tr(σ_u A σ_w Aᵀ) = Σ σ_u[a, b] A[b, i] σ_w[i, j] A[a, j]. Pauli phases are
        // powers of i, so the sum is tracked as a Gaussian integer.
        let dout = 1usize << self.n_out;
        let out_rows: Vec<(u32, (i64, i64))> = (0..dout)
            .map(|a| {
                let (b, ph) = out.row_entry(a);
                (b as u32, (ph.re.round() as i64, ph.im.round() as i64))
            })
            .collect();
        // Inverse lookup: for column b of σ_u, the row a and phase.
        let mut by_col = vec![(0u32, (0i64, 0i64)); dout];
        for (a, &(b, ph)) in out_rows.iter().enumerate() {
            by_col[b as usize] = (a as u32, ph);
        }
        let mut total = Rational::zero();
        for g in &self.groups {
            let (mut re, mut im) = (0i128, 0i128);
            for &(b, i, amp) in &g.entries {
                let (j, phw) = input.row_entry(i as usize);
                let phw = (phw.re.round() as i64, phw.im.round() as i64);
                let (a, phu) = by_col[b as usize];
                if let Some(&amp2) = g.lookup.get(&(a, j as u32)) {
                    let pr = phu.0 * phw.0 - phu.1 * phw.1;
                    let pi = phu.0 * phw.1 + phu.1 * phw.0;
                    let s = i128::from(amp) * i128::from(amp2);
                    re += s * i128::from(pr);
                    im += s * i128::from(pi);
                }
            }
            if im != 0 {
                return Err(Error::Numerical(format!(
                    "imaginary Pauli element {im} for {out} <- {input}"
                )));
            }
            if re != 0 {
                total += &g.weight * Rational::from_integer(BigInt::from(re));
            }
        }
        Ok(total / Rational::from_integer(BigInt::from(dout as u64)))
    }

    /// Floating-point value of [`Self::pauli_element`].
    pub fn pauli_element_f64(&self, out: &PauliWord, input: &PauliWord) -> Result<f64> {
        Ok(self.pauli_element(out, input)?.to_f64().unwrap_or(f64::NAN))
    }

    /// Identity coefficient of the image of the identity input.
    pub fn identity_gain(&self) -> Result<Rational> {
        self.pauli_element(
            &PauliWord::identity(self.n_out),
            &PauliWord::identity(self.n_in),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{HsOperator, pauli_matrix};
    use crate::rational::rat;

    fn m2(letter: u8) -> Matrix2<Complex64> {
        let d = pauli_matrix(letter);
        Matrix2::new(d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)])
    }

    #[test]
    fn degree_bookkeeping_is_validated() {
        assert!(Network::new(vec![3], vec![], vec![0], vec![0]).is_err());
        assert!(Network::new(vec![2, 2], vec![(0, 0)], vec![0], vec![1]).is_err());
        assert!(Network::new(vec![2], vec![], vec![0], vec![0]).is_ok());
    }

    #[test]
    fn budget_is_enforced() {
        let net = Network::new(vec![21], vec![], vec![0], vec![0; 20]).unwrap();
        assert!(matches!(net.compile_with_budget(1 << 10), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn single_site_degree_three_star() {
        // One site, two inputs: σ₁⊗1 maps to −σ₁/3 after identity normalization.
        let c = Network::new(vec![3], vec![], vec![0], vec![0, 0]).unwrap().compile().unwrap();
        let gain = c.identity_gain().unwrap();
        let x = PauliWord::parse("X").unwrap();
        let v = c.pauli_element(&x, &PauliWord::parse("XI").unwrap()).unwrap() / &gain;
        assert_eq!(v, rat(-1, 3));
        let v = c.pauli_element(&x, &PauliWord::parse("XX").unwrap()).unwrap() / &gain;
        assert_eq!(v, rat(0, 1));
        let id = PauliWord::identity(1);
        let v = c.pauli_element(&id, &PauliWord::parse("XX").unwrap()).unwrap() / &gain;
        assert_eq!(v, rat(1, 3));
    }

    #[test]
    fn dense_product_and_exact_paths_agree() {
        // Two sites joined by a bond (a chain segment), three inputs.
        let net = Network::new(vec![3, 3], vec![(0, 1)], vec![0], vec![0, 1, 1]).unwrap();
        let c = net.compile().unwrap();
        let ops = [
            m2(0) + m2(1) * Complex64::new(0.3, 0.0),
            m2(0) + m2(3) * Complex64::new(-0.5, 0.0),
            m2(0) + m2(2) * Complex64::new(0.2, 0.0),
        ];
        let prod = c.apply_product(&ops).unwrap();
        let mut dense = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for op in &ops {
            let d = DMatrix::from_fn(2, 2, |r, s| op[(r, s)]);
            dense = dense.kronecker(&d);
        }
        let via_dense = c.apply_dense(&dense).unwrap();
        assert!((prod.clone() - via_dense).norm() < 1e-13);

        // Pauli elements reproduce the dense image linearly.
        let input = HsOperator::from_dense(&dense, 1e-15).unwrap();
        let mut coeffs = [0.0; 4];
        for (w, cw) in input.terms() {
            for (u, slot) in coeffs.iter_mut().enumerate() {
                *slot += cw * c.pauli_element_f64(&PauliWord::new(vec![u as u8]).unwrap(), w).unwrap();
            }
        }
        let out = HsOperator::from_dense(&prod, 0.0).unwrap();
        for (u, cu) in coeffs.iter().enumerate() {
            let w = PauliWord::new(vec![u as u8]).unwrap();
            assert!((out.coeff(&w) - cu).abs() < 1e-13);
        }

        let int_ops = [[[10, 3], [3, 10]], [[10, 0], [0, 10]], [[1, 0], [0, 1]]];
        let exact = c.apply_product_int(&int_ops).unwrap();
        let f_ops = [
            m2(0) * Complex64::new(10.0, 0.0) + m2(1) * Complex64::new(3.0, 0.0),
            m2(0) * Complex64::new(10.0, 0.0),
            m2(0),
        ];
        let float = c.apply_product(&f_ops).unwrap();
        for r in 0..2 {
            for s in 0..2 {
                assert!((crate::rational::to_f64(&exact[r][s]) - float[(r, s)].re).abs() < 1e-11);
            }
        }
    }
}
