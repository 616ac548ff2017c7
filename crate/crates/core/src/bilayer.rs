//! Bilayer nodes: two sites joined by a rung, acting on a two-qubit edge pair.
//!
//! Site `L` and site `U` each have degree `g + 2`: one rung slot, one
//! parent slot, and `g` child slots. The map sends `g` child pairs
//! `(L_j, U_j)` to the parent pair `(L, U)`, `L` being the more significant
//! qubit. Coefficients are held in the staggered frame: the physical
//! coefficient of `σ_k ⊗ σ_l` is `ε_l x_kl` with `ε = (1, −1, −1, −1)`,
//! which absorbs the sign between the two layers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CompiledNetwork, Network};
use crate::pauli::{kron_all, pauli_matrix, PauliWord};
use crate::rational::{to_f64, MPoly, Rational};
use crate::reference::{self, PrintedSystem};

/// Largest splitting number the dense map is built for.
pub const MAX_DENSE_G: u32 = 4;
/// PSD eigenvalue floor.
pub const PSD_FLOOR: f64 = -1e-12;
const EPS: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

pub const NEWTON_FD_STEP: f64 = 1e-7;
pub const NEWTON_MAX_HALVINGS: u32 = 30;
pub const NEWTON_MAX_ITER: usize = 200;
pub const NEWTON_TOL: f64 = 1e-14;
pub const DEDUP_TOL: f64 = 1e-8;
pub const DENSE_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_STARTS: usize = 128;
pub const START_RADIUS: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SplittingNumber(u32);

impl SplittingNumber {
    pub fn new(g: u32) -> Result<Self> {
        if g == 0 {
            return Err(Error::Contract("splitting number must be at least 1".into()));
        }
        Ok(Self(g))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Site degree `g + 2`.
    pub fn site_degree(self) -> u32 {
        self.0 + 2
    }
}

/// Staggered coefficients `x_kl`; `x[0][0]` is fixed to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BilayerVector {
    pub x: [[f64; 4]; 4],
}

impl BilayerVector {
    pub fn zero() -> Self {
        let mut x = [[0.0; 4]; 4];
        x[0][0] = 1.0;
        Self { x }
    }

    /// Physical operator `1⊗1 + Σ ε_l x_kl σ_k⊗σ_l`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(4, 4);
        for k in 0..4 {
            for l in 0..4 {
                let c = if (k, l) == (0, 0) { 1.0 } else { EPS[l] * self.x[k][l] };
                if c != 0.0 {
                    m += kron_all(&[pauli_matrix(k as u8), pauli_matrix(l as u8)]) * Complex64::new(c, 0.0);
                }
            }
        }
        m
    }

    /// Staggered coefficients of `m`, normalized by its identity coefficient.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        let c = pair_coefficients(m);
        if c[0][0].abs() < f64::MIN_POSITIVE {
            return Err(Error::Numerical("operator has vanishing trace".into()));
        }
        let mut x = [[0.0; 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                x[k][l] = EPS[l] * c[k][l] / c[0][0];
            }
        }
        Ok(Self { x })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_dense()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= PSD_FLOOR
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..4 {
            for l in 0..4 {
                m = m.max((self.x[k][l] - other.x[k][l]).abs());
            }
        }
        m
    }

    /// Projection onto the symmetric subspace and the distance from it.
    pub fn symmetric_part(&self) -> (SymmetricBilayerVector, f64) {
        let x1 = self.x[0][1];
        let x2 = self.x[1][2];
        let x3 = self.x[1][1];
        let s = SymmetricBilayerVector::new(x1, x2, x3);
        (s, self.max_abs_diff(&s.embed()))
    }
}

/// Real Pauli-pair coefficients `Tr(σ_k⊗σ_l m)/4`.
pub fn pair_coefficients(m: &DMatrix<Complex64>) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for k in 0..4 {
        for l in 0..4 {
            let p = kron_all(&[pauli_matrix(k as u8), pauli_matrix(l as u8)]);
            c[k][l] = (p * m).trace().re / 4.0;
        }
    }
    c
}

/// `x1 = x_0i = x_i0`, `x2 = x_ij (i ≠ j)`, `x3 = x_ii`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricBilayerVector {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl SymmetricBilayerVector {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn embed(self) -> BilayerVector {
        let mut x = [[0.0; 4]; 4];
        x[0][0] = 1.0;
        for i in 1..4 {
            x[0][i] = self.x1;
            x[i][0] = self.x1;
            for j in 1..4 {
                x[i][j] = if i == j { self.x3 } else { self.x2 };
            }
        }
        BilayerVector { x }
    }
}

/// Symmetric-class index of a staggered coefficient `(k, l)`: 0 for the identity.
fn class_of(k: usize, l: usize) -> usize {
    match (k, l) {
        (0, 0) => 0,
        (0, _) | (_, 0) => 1,
        (a, b) if a != b => 2,
        _ => 3,
    }
}

/// The contracted bilayer node.
#[derive(Clone, Debug)]
pub struct BilayerMap {
    g: SplittingNumber,
    net: CompiledNetwork,
}

impl BilayerMap {
    pub fn new(g: SplittingNumber) -> Result<Self> {
        if g.get() > MAX_DENSE_G {
            return Err(Error::BudgetExceeded(format!(
                "bilayer maps are built for g ≤ {MAX_DENSE_G}, got {}",
                g.get()
            )));
        }
        let d = g.site_degree();
        let inputs = (0..g.get() as usize).flat_map(|_| [0usize, 1]).collect();
        let net = Network::new(vec![d, d], vec![(0, 1)], vec![0, 1], inputs)?;
        Ok(Self { g, net: net.compile()? })
    }

    pub fn splitting(&self) -> SplittingNumber {
        self.g
    }

    pub fn network(&self) -> &CompiledNetwork {
        &self.net
    }

    /// Unnormalized image of a dense operator on the `2g` child qubits.
    pub fn apply_dense(&self, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.net.apply_dense(x)
    }

    /// Normalized image of the product boundary `B(x)^⊗g`.
    pub fn step(&self, b: &BilayerVector) -> Result<BilayerVector> {
        let m = b.to_dense();
        let factors = vec![m; self.g.get() as usize];
        BilayerVector::from_dense(&self.apply_dense(&kron_all(&factors))?)
    }

    pub fn step_symmetric(&self, x: SymmetricBilayerVector) -> Result<BilayerVector> {
        self.step(&x.embed())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cycle {
    Period1,
    Period2,
}

impl Cycle {
    /// Target signs applied to `(x1, x2, x3)`.
    pub fn signs(self) -> [f64; 3] {
        match self {
            Cycle::Period1 => [1.0, 1.0, 1.0],
            Cycle::Period2 => [-1.0, 1.0, 1.0],
        }
    }

    pub fn partner(self, x: SymmetricBilayerVector) -> SymmetricBilayerVector {
        let s = self.signs();
        SymmetricBilayerVector::new(s[0] * x.x1, s[1] * x.x2, s[2] * x.x3)
    }
}

/// `f_c = num[c] / f0` on the symmetric subspace, normalized to `f0(0) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BilayerSystem {
    pub g: SplittingNumber,
    pub f0: MPoly,
    pub num: [MPoly; 3],
    /// Whether every staggered output coefficient matched its class polynomial exactly.
    pub closed: bool,
}

/// Staggered monomial of one input pair `σ_k ⊗ σ_l`.
fn pair_monomial(k: usize, l: usize) -> (i64, [u32; 3]) {
    let sign = if l == 0 { 1 } else { -1 };
    match class_of(k, l) {
        0 => (1, [0, 0, 0]),
        1 => (sign, [1, 0, 0]),
        2 => (sign, [0, 1, 0]),
        _ => (sign, [0, 0, 1]),
    }
}

/// Exact polynomial system from the Pauli matrix elements of the bilayer node.
pub fn extract_system(g: SplittingNumber) -> Result<BilayerSystem> {
    let map = BilayerMap::new(g)?;
    let n_in = 2 * g.get() as usize;
    let outs: Vec<(usize, usize)> = (0..4).flat_map(|k| (0..4).map(move |l| (k, l))).collect();
    let words: Vec<PauliWord> = PauliWord::all(n_in).collect();
    let partial: Vec<Vec<MPoly>> = words
        .par_iter()
        .map(|w| -> Result<Vec<MPoly>> {
            let mut sign = 1i64;
            let mut exps = [0u32; 3];
            for pair in w.letters().chunks(2) {
                let (s, e) = pair_monomial(pair[0] as usize, pair[1] as usize);
                sign *= s;
                for v in 0..3 {
                    exps[v] += e[v];
                }
            }
            outs.iter()
                .map(|&(k, l)| {
                    let out = PauliWord::new(vec![k as u8, l as u8])?;
                    let c = map.net.pauli_element(&out, w)?;
                    let eps = if l == 0 { 1 } else { -1 };
                    Ok(MPoly::term(c * Rational::from_integer((sign * eps).into()), exps))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![MPoly::zero(); 16];
    for row in partial {
        for (a, p) in acc.iter_mut().zip(row) {
            *a = a.add(&p);
        }
    }
    let c0 = acc[0].coeff([0, 0, 0]);
    if c0.is_zero() {
        return Err(Error::Numerical("bilayer denominator vanishes at the origin".into()));
    }
    let s = c0.recip();
    let acc: Vec<MPoly> = acc.iter().map(|p| p.scale(&s)).collect();
    let rep = [acc[1].clone(), acc[4 + 2].clone(), acc[4 + 1].clone()];
    let closed = outs.iter().enumerate().all(|(i, &(k, l))| match class_of(k, l) {
        0 => true,
        c => acc[i] == rep[c - 1],
    });
    Ok(BilayerSystem {
        g,
        f0: acc[0].clone(),
        num: rep,
        closed,
    })
}

impl BilayerSystem {
    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let d = self.f0.eval_f64(x);
        [0, 1, 2].map(|c| self.num[c].eval_f64(x) / d)
    }

    /// `f(x) − s·x` for the target signs of `cycle`.
    pub fn residual(&self, x: [f64; 3], cycle: Cycle) -> [f64; 3] {
        let f = self.eval(x);
        let s = cycle.signs();
        [0, 1, 2].map(|c| f[c] - s[c] * x[c])
    }

    /// Cleared residual polynomials `num_c − s_c x_c f0`.
    pub fn cycle_polynomials(&self, cycle: Cycle) -> [MPoly; 3] {
        let s = cycle.signs();
        [0, 1, 2].map(|c| {
            let sc = Rational::from_integer((s[c] as i64).into());
            self.num[c].sub(&MPoly::var(c).mul(&self.f0).scale(&sc))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonomialDiff {
    pub equation: String,
    pub monomial: [u32; 3],
    #[serde(serialize_with = "crate::rational::serialize_rational")]
    pub oracle: Rational,
    #[serde(serialize_with = "crate::rational::serialize_rational")]
    pub printed: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemComparison {
    pub g: u32,
    pub printed: PrintedSystem,
    /// Factor applied to each printed polynomial before comparison.
    pub scales: Vec<Option<String>>,
    pub diffs: Vec<MonomialDiff>,
}

fn compare_poly(name: &str, oracle: &MPoly, printed: &MPoly, rescale: bool, diffs: &mut Vec<MonomialDiff>) -> Option<Rational> {
    // Rescaled comparisons match the printed coefficient of largest
    // magnitude among monomials both sides share.
    let scale = if rescale {
        printed
            .terms()
            .filter(|(e, _)| !oracle.coeff(**e).is_zero())
            .max_by(|a, b| num_traits::Signed::abs(a.1).cmp(&num_traits::Signed::abs(b.1)))
            .map(|(e, c)| oracle.coeff(*e) / c)
    } else {
        Some(Rational::one())
    };
    let printed = printed.scale(scale.as_ref().unwrap_or(&Rational::one()));
    let mut keys: Vec<[u32; 3]> = oracle.terms().map(|(e, _)| *e).chain(printed.terms().map(|(e, _)| *e)).collect();
    keys.sort();
    keys.dedup();
    for e in keys {
        let (a, b) = (oracle.coeff(e), printed.coeff(e));
        if a != b {
            diffs.push(MonomialDiff {
                equation: name.to_string(),
                monomial: e,
                oracle: a,
                printed: b,
            });
        }
    }
    scale
}

/// Coefficient-level differences between the extracted and the reference system.
pub fn compare_with_printed(sys: &BilayerSystem) -> Option<SystemComparison> {
    let printed = reference::bilayer_system(sys.g.get())?;
    let mut diffs = Vec::new();
    let mut scales = Vec::new();
    match &printed {
        PrintedSystem::Ratio { num, den } => {
            compare_poly("f0", &sys.f0, den, false, &mut diffs);
            for c in 0..3 {
                compare_poly(&format!("f{}", c + 1), &sys.num[c], &num[c], false, &mut diffs);
            }
            scales.extend(std::iter::repeat_n(Some("1".to_string()), 4));
        }
        PrintedSystem::Combined { polys } => {
            let ours = sys.cycle_polynomials(Cycle::Period2);
            for c in 0..3 {
                let s = compare_poly(&format!("f{}", c + 1), &ours[c], &polys[c], true, &mut diffs);
                scales.push(s.map(|r| crate::rational::rational_string(&r)));
            }
        }
    }
    Some(SystemComparison {
        g: sys.g.get(),
        printed,
        scales,
        diffs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BilayerSolution {
    pub g: u32,
    pub cycle: Cycle,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub residual: f64,
}

impl BilayerSolution {
    pub fn x(&self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub starts: usize,
    pub seed: u64,
    pub radius: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            seed: 0,
            radius: START_RADIUS,
        }
    }
}

fn inf_norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let v = nalgebra::Vector3::from_column_slice(&b);
    m.lu().solve(&v).map(|s| [s[0], s[1], s[2]])
}

/// Damped Newton with a forward-difference Jacobian.
pub fn newton(f: impl Fn([f64; 3]) -> [f64; 3], x0: [f64; 3]) -> Option<[f64; 3]> {
    let mut x = x0;
    let mut r = f(x);
    for _ in 0..NEWTON_MAX_ITER {
        let rn = inf_norm(&r);
        if !rn.is_finite() {
            return None;
        }
        if rn < NEWTON_TOL {
            return Some(x);
        }
        let mut jac = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut xh = x;
            xh[j] += NEWTON_FD_STEP;
            let rh = f(xh);
            for i in 0..3 {
                jac[i][j] = (rh[i] - r[i]) / NEWTON_FD_STEP;
            }
        }
        let step = solve3(jac, r.map(|v| -v))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let xn = [0, 1, 2].map(|i| x[i] + lambda * step[i]);
            let rn_new = f(xn);
            if inf_norm(&rn_new) < rn {
                x = xn;
                r = rn_new;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // No descent: converged to roundoff or stuck.
            return (rn < 1e-11).then_some(x);
        }
        if inf_norm(&step) * lambda < 1e-16 {
            return (inf_norm(&r) < 1e-11).then_some(x);
        }
    }
    (inf_norm(&r) < 1e-11).then_some(x)
}

/// Two-cycle residual against the dense map, over all fifteen coefficients.
pub fn dense_residual(map: &BilayerMap, x: SymmetricBilayerVector, cycle: Cycle) -> Result<f64> {
    let img = map.step_symmetric(x)?;
    Ok(img.max_abs_diff(&cycle.partner(x).embed()))
}

/// Multi-start Newton on the extracted system, each root re-verified on the dense map.
pub fn solve_fixed_points(
    sys: &BilayerSystem,
    map: &BilayerMap,
    cycle: Cycle,
    opts: SolveOptions,
) -> Result<Vec<BilayerSolution>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<[f64; 3]> = (0..opts.starts)
        .map(|_| [0; 3].map(|_| rng.gen_range(-opts.radius..=opts.radius)))
        .collect();
    let roots: Vec<Option<[f64; 3]>> = starts
        .par_iter()
        .map(|&x0| newton(|x| sys.residual(x, cycle), x0))
        .collect();
    let mut found: Vec<BilayerSolution> = Vec::new();
    for x in roots.into_iter().flatten() {
        if inf_norm(&x) > 1.0 || found.iter().any(|s| inf_norm(&[0, 1, 2].map(|i| s.x()[i] - x[i])) < DEDUP_TOL) {
            continue;
        }
        let residual = dense_residual(map, SymmetricBilayerVector::from_array(x), cycle)?;
        if residual < DENSE_RESIDUAL_TOL {
            found.push(BilayerSolution {
                g: sys.g.get(),
                cycle,
                x1: x[0],
                x2: x[1],
                x3: x[2],
                residual,
            });
        }
    }
    found.sort_by(|a, b| a.x().partial_cmp(&b.x()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(found)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FullSolution {
    pub g: u32,
    pub cycle: Cycle,
    pub x: [[f64; 4]; 4],
    pub residual: f64,
    /// Distance from the symmetric subspace.
    pub asymmetry: f64,
}

/// Undamped fixed-point iteration on the full fifteen-component space from
/// random PSD starts; converged points are reported with their distance from
/// the symmetric subspace.
pub fn search_full_space(map: &BilayerMap, cycle: Cycle, opts: SolveOptions, steps: usize) -> Result<Vec<FullSolution>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out: Vec<FullSolution> = Vec::new();
    let flip = |b: &BilayerVector| {
        let mut b = *b;
        if cycle == Cycle::Period2 {
            for i in 1..4 {
                b.x[0][i] = -b.x[0][i];
                b.x[i][0] = -b.x[i][0];
            }
        }
        b
    };
    for _ in 0..opts.starts {
        let mut b = BilayerVector::zero();
        for k in 0..4 {
            for l in 0..4 {
                if (k, l) != (0, 0) {
                    b.x[k][l] = rng.gen_range(-opts.radius..=opts.radius) / 3.0;
                }
            }
        }
        if !b.is_psd() {
            continue;
        }
        for _ in 0..steps {
            b = flip(&map.step(&b)?);
        }
        let residual = flip(&map.step(&b)?).max_abs_diff(&b);
        if residual < DENSE_RESIDUAL_TOL && !out.iter().any(|s| BilayerVector { x: s.x }.max_abs_diff(&b) < 1e-6) {
            out.push(FullSolution {
                g: map.g.get(),
                cycle,
                x: b.x,
                residual,
                asymmetry: b.symmetric_part().1,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationReport {
    pub limit: [f64; 3],
    pub steps: usize,
    /// Geometric mean of successive distance ratios to the limit.
    pub contraction: f64,
}

/// Iterates `x ↦ f(x)` on the symmetric subspace until successive iterates agree to `tol`.
pub fn iterate_symmetric(sys: &BilayerSystem, x0: [f64; 3], tol: f64, max_steps: usize) -> Result<IterationReport> {
    let mut traj = vec![x0];
    for _ in 0..max_steps {
        let x = *traj.last().unwrap();
        let y = sys.eval(x);
        traj.push(y);
        if inf_norm(&[0, 1, 2].map(|i| y[i] - x[i])) < tol {
            break;
        }
    }
    let limit = *traj.last().unwrap();
    let steps = traj.len() - 1;
    let dist: Vec<f64> = traj.iter().map(|x| inf_norm(&[0, 1, 2].map(|i| x[i] - limit[i]))).collect();
    // Ratios are taken while distances are well above roundoff.
    let ratios: Vec<f64> = dist
        .windows(2)
        .filter(|w| w[0] > 1e-9 && w[1] > 1e-12)
        .map(|w| w[1] / w[0])
        .collect();
    if steps == max_steps && dist.len() > 1 && dist[dist.len() - 2] > tol {
        return Err(Error::Numerical(format!("iteration did not settle in {max_steps} steps")));
    }
    let contraction = if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
    };
    Ok(IterationReport {
        limit,
        steps,
        contraction,
    })
}

/// Serializable view of a system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemReport {
    pub g: u32,
    pub f0: String,
    pub f1: String,
    pub f2: String,
    pub f3: String,
    pub closed: bool,
}

impl From<&BilayerSystem> for SystemReport {
    fn from(s: &BilayerSystem) -> Self {
        Self {
            g: s.g.get(),
            f0: s.f0.to_string(),
            f1: s.num[0].to_string(),
            f2: s.num[1].to_string(),
            f3: s.num[2].to_string(),
            closed: s.closed,
        }
    }
}

/// `f64` view of a rational coefficient, for reports.
pub fn coeff_f64(p: &MPoly, e: [u32; 3]) -> f64 {
    to_f64(&p.coeff(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn g(n: u32) -> SplittingNumber {
        SplittingNumber::new(n).unwrap()
    }

    fn poly(terms: &[(i64, i64, [u32; 3])]) -> MPoly {
        let mut p = MPoly::zero();
        for &(n, d, e) in terms {
            p.add_term(e, rat(n, d));
        }
        p
    }

    #[test]
    fn identity_input_has_casimir_component() {
        let map = BilayerMap::new(g(1)).unwrap();
        let out = map.step(&BilayerVector::zero()).unwrap();
        assert!((out.x[1][1] - 1.0 / 9.0).abs() < 1e-14);
        assert_eq!(out.x[1][1], out.x[2][2]);
        assert!(out.x[0][1].abs() < 1e-15 && out.x[1][2].abs() < 1e-15);
    }

    #[test]
    fn g1_system_is_frozen() {
        let sys = extract_system(g(1)).unwrap();
        assert!(sys.closed);
        assert_eq!(sys.f0, poly(&[(1, 1, [0, 0, 0]), (1, 3, [0, 0, 1])]));
        assert_eq!(sys.num[0], poly(&[(-4, 9, [1, 0, 0])]));
        assert_eq!(sys.num[1], poly(&[(1, 9, [0, 1, 0])]));
        assert_eq!(sys.num[2], poly(&[(1, 9, [0, 0, 0]), (1, 9, [0, 0, 1])]));
    }

    #[test]
    fn g2_system_is_frozen() {
        let sys = extract_system(g(2)).unwrap();
        assert!(sys.closed);
        assert_eq!(
            sys.f0,
            poly(&[(1, 1, [0, 0, 0]), (8, 3, [2, 0, 0]), (2, 3, [0, 2, 0]), (1, 3, [0, 0, 2]), (2, 3, [0, 0, 1])])
        );
        assert_eq!(sys.num[0], poly(&[(-28, 45, [1, 1, 0]), (-4, 9, [1, 0, 1]), (-8, 9, [1, 0, 0])]));
        assert_eq!(
            sys.num[1],
            poly(&[(14, 45, [2, 0, 0]), (2, 75, [0, 2, 0]), (2, 25, [0, 1, 1]), (2, 9, [0, 1, 0])])
        );
        assert_eq!(
            sys.num[2],
            poly(&[(4, 9, [2, 0, 0]), (2, 25, [0, 2, 0]), (1, 15, [0, 0, 2]), (2, 9, [0, 0, 1]), (1, 9, [0, 0, 0])])
        );
    }

    #[test]
    fn extracted_system_matches_dense_map() {
        for n in 1..=3 {
            let sys = extract_system(g(n)).unwrap();
            let map = BilayerMap::new(g(n)).unwrap();
            for x in [[0.1, -0.05, 0.2], [-0.2, 0.1, -0.1], [0.0, 0.0, 0.3]] {
                let dense = map.step_symmetric(SymmetricBilayerVector::from_array(x)).unwrap();
                let (sym, off) = dense.symmetric_part();
                assert!(off < 1e-12, "g={n} closure defect {off}");
                let f = sys.eval(x);
                for (a, b) in f.iter().zip(sym.to_array()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn g1_fixed_point() {
        let sys = extract_system(g(1)).unwrap();
        let map = BilayerMap::new(g(1)).unwrap();
        let sols = solve_fixed_points(&sys, &map, Cycle::Period1, SolveOptions::default()).unwrap();
        assert_eq!(sols.len(), 1);
        let s = &sols[0];
        assert!((3.0 * s.x3 - (19f64.sqrt() - 4.0)).abs() < 1e-10);
        assert!(s.x1.abs() < 1e-12 && s.x2.abs() < 1e-12);
    }

    #[test]
    fn g1_iteration_contracts() {
        let sys = extract_system(g(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x0 = [0; 3].map(|_| rng.gen_range(-0.3..0.3));
            let rep = iterate_symmetric(&sys, x0, 1e-14, 500).unwrap();
            assert!((3.0 * rep.limit[2] - (19f64.sqrt() - 4.0)).abs() < 1e-12);
            assert!(rep.contraction < 1.0);
        }
    }

    #[test]
    fn printed_g1_differs_only_in_constant() {
        let sys = extract_system(g(1)).unwrap();
        let cmp = compare_with_printed(&sys).unwrap();
        assert_eq!(cmp.diffs.len(), 1);
        assert_eq!(cmp.diffs[0].monomial, [0, 0, 0]);
        assert_eq!(cmp.diffs[0].oracle, rat(1, 9));
    }

    #[test]
    fn full_space_search_finds_symmetric_point_for_g1() {
        let map = BilayerMap::new(g(1)).unwrap();
        let opts = SolveOptions {
            starts: 8,
            seed: 3,
            radius: 0.9,
        };
        let found = search_full_space(&map, Cycle::Period1, opts, 200).unwrap();
        assert!(!found.is_empty());
        for s in found {
            assert!(s.asymmetry < 1e-9);
        }
    }

    #[test]
    fn splitting_number_validation() {
        assert!(SplittingNumber::new(0).is_err());
        assert!(BilayerMap::new(g(5)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn symmetric_subspace_is_invariant(x1 in -0.3f64..0.3, x2 in -0.3f64..0.3, x3 in -0.3f64..0.3, n in 1u32..=3) {
            let map = BilayerMap::new(g(n)).unwrap();
            let out = map.step_symmetric(SymmetricBilayerVector::new(x1, x2, x3)).unwrap();
            prop_assert!(out.symmetric_part().1 < 1e-12);
        }
    }
}
