//! Finite-volume contraction of the valence-bond state on finite trees.
//!
//! The sweep applies one site intertwiner per vertex, leaves first, and
//! returns the auxiliary operator on the root's open edge. The dense path
//! contracts the whole tree at once through [`Network`], enumerating every
//! slot configuration, and shares no code with the sweep beyond the tree.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilayer::{BilayerMap, BilayerVector, SplittingNumber};
use crate::cell::{cell_tree, CellGraph};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::pauli::BlochVector;
use crate::site::{from_pauli_coefficients, pauli_coefficients, Intertwiner, SiteDegree};
use crate::transfer::{DegreeSequence, TransferFunction};
use crate::tree::FiniteTree;

/// Largest tree the sweep accepts.
pub const MAX_SWEEP_VERTICES: usize = 1 << 22;
/// Largest tree the dense contraction accepts.
pub const MAX_DENSE_SPINS: usize = 10;
/// Slot-configuration budget of the dense contraction.
pub const DENSE_ASSIGNMENT_BUDGET: u64 = 1 << 22;
pub const PSD_FLOOR: f64 = -1e-12;
/// Allowed gap between the sweep and the scalar recursion in scans.
pub const SCAN_TOL: f64 = 1e-10;
/// Successive-depth difference below which a sequence has converged.
pub const DEPTH_TOL: f64 = 1e-9;

/// One 2×2 operator per boundary leg, in [`FiniteTree::legs`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryAssignment {
    ops: Vec<Matrix2<Complex64>>,
}

fn check_psd(op: &Matrix2<Complex64>) -> Result<()> {
    let herm = (op - op.adjoint()).norm();
    if herm > 1e-12 {
        return Err(Error::Contract(format!("boundary operator is not Hermitian (defect {herm})")));
    }
    let c = pauli_coefficients(op);
    let min = c[0] - (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
    if min < PSD_FLOOR {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

impl BoundaryAssignment {
    pub fn new(tree: &FiniteTree, ops: Vec<Matrix2<Complex64>>) -> Result<Self> {
        let legs = tree.total_boundary_legs();
        if ops.len() != legs {
            return Err(Error::ArityMismatch {
                expected: legs,
                found: ops.len(),
            });
        }
        ops.iter().try_for_each(check_psd)?;
        Ok(Self { ops })
    }

    /// `1 + x·σ` on every leg.
    pub fn uniform(tree: &FiniteTree, x: BlochVector) -> Result<Self> {
        let c = x.components();
        Self::new(tree, vec![from_pauli_coefficients([1.0, c[0], c[1], c[2]]); tree.total_boundary_legs()])
    }

    /// `1 + (−1)^depth(v) x·σ` on a leg of vertex `v`.
    pub fn neel(tree: &FiniteTree, x: BlochVector) -> Result<Self> {
        let c = x.components();
        let ops = tree
            .legs()
            .into_iter()
            .map(|v| {
                let s = if tree.depth(v) % 2 == 0 { 1.0 } else { -1.0 };
                from_pauli_coefficients([1.0, s * c[0], s * c[1], s * c[2]])
            })
            .collect();
        Self::new(tree, ops)
    }

    /// Independent `1 + y·σ` per leg with `y` uniform in the unit ball.
    pub fn random(tree: &FiniteTree, rng: &mut impl Rng) -> Result<Self> {
        let ops = (0..tree.total_boundary_legs())
            .map(|_| loop {
                let y = [0; 3].map(|_| rng.gen_range(-1.0..=1.0f64));
                if y.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                    break from_pauli_coefficients([1.0, y[0], y[1], y[2]]);
                }
            })
            .collect();
        Self::new(tree, ops)
    }

    pub fn ops(&self) -> &[Matrix2<Complex64>] {
        &self.ops
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Identity,
    /// `σ_i` at the root, `i ∈ {1, 2, 3}`.
    Pauli(u8),
}

fn normalized(c: [f64; 4]) -> Result<[f64; 4]> {
    if !(c[0].is_finite() && c[0] > 0.0) {
        return Err(Error::Numerical(format!("root operator has trace coefficient {}", c[0])));
    }
    Ok(c.map(|v| v / c[0]))
}

fn select(c: [f64; 4], obs: Observable) -> Result<f64> {
    match obs {
        Observable::Identity => Ok(c[0]),
        Observable::Pauli(i @ 1..=3) => Ok(c[i as usize]),
        Observable::Pauli(i) => Err(Error::InvalidLetter(i)),
    }
}

/// Normalized Pauli coefficients `[1, y₁, y₂, y₃]` of the root operator, by sweep.
pub fn sweep_root(tree: &FiniteTree, b: &BoundaryAssignment) -> Result<[f64; 4]> {
    if tree.len() > MAX_SWEEP_VERTICES {
        return Err(Error::BudgetExceeded(format!(
            "{} vertices exceed the sweep budget of {MAX_SWEEP_VERTICES}",
            tree.len()
        )));
    }
    if b.ops.len() != tree.total_boundary_legs() {
        return Err(Error::ArityMismatch {
            expected: tree.total_boundary_legs(),
            found: b.ops.len(),
        });
    }
    let mut offset = vec![0usize; tree.len() + 1];
    for v in 0..tree.len() {
        offset[v + 1] = offset[v] + tree.boundary_legs(v);
    }
    let mut out: Vec<Option<Matrix2<Complex64>>> = vec![None; tree.len()];
    for v in tree.postorder() {
        let mut inputs: Vec<Matrix2<Complex64>> = tree
            .children(v)
            .iter()
            .map(|&c| out[c].take().expect("children are swept first"))
            .collect();
        inputs.extend_from_slice(&b.ops[offset[v]..offset[v + 1]]);
        let w = Intertwiner::shared(SiteDegree::new(tree.degree(v))?);
        let r = w.apply_product(&inputs)?;
        // Each vertex output is rescaled to unit trace coefficient.
        let c = normalized(pauli_coefficients(&r))?;
        out[v] = Some(from_pauli_coefficients(c));
    }
    normalized(pauli_coefficients(&out[0].expect("root is swept")))
}

/// Root Pauli coefficients by one-shot contraction of the whole tree.
pub fn dense_root(tree: &FiniteTree, b: &BoundaryAssignment) -> Result<[f64; 4]> {
    if tree.len() > MAX_DENSE_SPINS {
        return Err(Error::BudgetExceeded(format!(
            "{} spins exceed the dense limit of {MAX_DENSE_SPINS}",
            tree.len()
        )));
    }
    let bonds = (1..tree.len()).map(|v| (tree.parent(v).expect("non-root"), v)).collect();
    let net = Network::new(tree.degrees().to_vec(), bonds, vec![0], tree.legs())?;
    let compiled = net.compile_with_budget(DENSE_ASSIGNMENT_BUDGET)?;
    let r = compiled.apply_product(b.ops())?;
    let m = Matrix2::new(r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]);
    normalized(pauli_coefficients(&m))
}

/// Expectation of a root observable in the finite-volume state.
pub fn contract_expectation(tree: &FiniteTree, b: &BoundaryAssignment, obs: Observable) -> Result<f64> {
    select(sweep_root(tree, b)?, obs)
}

pub fn contract_expectation_dense(tree: &FiniteTree, b: &BoundaryAssignment, obs: Observable) -> Result<f64> {
    select(dense_root(tree, b)?, obs)
}

/// Composition of the scalar transfer functions over a list of layer degrees, deepest first.
pub fn scalar_map(layer_degrees: &[u32], t: f64) -> Result<f64> {
    let mut v = t;
    for &d in layer_degrees.iter().rev() {
        v = TransferFunction::of_degree(d)?.eval(v)?;
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Cayley { d: u32 },
    Decorated { d: u32, g: usize },
    Layered { prefix: Vec<u32>, tail: Vec<u32> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cayley { .. } => "cayley",
            Family::Decorated { .. } => "decorated",
            Family::Layered { .. } => "layered",
        }
    }

    pub fn params(&self) -> String {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        match self {
            Family::Cayley { d } => format!("d={d}"),
            Family::Decorated { d, g } => format!("d={d};g={g}"),
            Family::Layered { prefix, tail } => format!("prefix=[{}];tail=[{}]", join(prefix), join(tail)),
        }
    }

    /// Tree of the family at `depth`: layers for Cayley and layered
    /// families, base layers for decorated ones.
    pub fn tree(&self, depth: usize) -> Result<FiniteTree> {
        match self {
            Family::Cayley { d } => FiniteTree::cayley(*d, depth),
            Family::Decorated { d, g } => FiniteTree::decorated(*d, *g, depth),
            Family::Layered { prefix, tail } => {
                FiniteTree::layered(&DegreeSequence::new(prefix.clone(), tail.clone())?, depth)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub family: String,
    pub params: String,
    pub t: f64,
    pub depth: usize,
    pub expectation: f64,
    pub scalar_map_value: f64,
}

/// Root `σ₃` expectation under `B(t e₃)` for every `(t, depth)` pair, with
/// the scalar recursion alongside.
pub fn order_parameter_scan(family: &Family, ts: &[f64], depths: &[usize]) -> Result<Vec<ScanRow>> {
    let jobs: Vec<(f64, usize)> = depths.iter().flat_map(|&n| ts.iter().map(move |&t| (t, n))).collect();
    jobs.par_iter()
        .map(|&(t, depth)| {
            let tree = family.tree(depth)?;
            let layers = tree
                .layer_degrees()
                .ok_or_else(|| Error::InvalidTree("scan trees must have uniform layers".into()))?;
            let b = BoundaryAssignment::uniform(&tree, BlochVector::along(3, t)?)?;
            let expectation = contract_expectation(&tree, &b, Observable::Pauli(3))?;
            let scalar_map_value = scalar_map(&layers, t)?;
            if (expectation - scalar_map_value).abs() > SCAN_TOL {
                return Err(Error::Numerical(format!(
                    "sweep {expectation} and scalar map {scalar_map_value} disagree at t={t}, depth={depth}"
                )));
            }
            Ok(ScanRow {
                family: family.name().to_string(),
                params: family.params(),
                t,
                depth,
                expectation,
                scalar_map_value,
            })
        })
        .collect()
}

/// First depth at which the staggered root expectation `(−1)^depth ⟨σ₃⟩`
/// moves by less than `tol`.
pub fn depth_convergence(family: &Family, t: f64, max_depth: usize, tol: f64) -> Result<Option<usize>> {
    let mut prev: Option<f64> = None;
    for depth in 1..=max_depth {
        let tree = family.tree(depth)?;
        let b = BoundaryAssignment::uniform(&tree, BlochVector::along(3, t)?)?;
        let e = contract_expectation(&tree, &b, Observable::Pauli(3))?;
        let staggered = if tree.layers() % 2 == 0 { e } else { -e };
        if let Some(p) = prev {
            if (staggered - p).abs() < tol {
                return Ok(Some(depth));
            }
        }
        prev = Some(staggered);
    }
    Ok(None)
}

/// Tree grown from copies of a tree cell.
pub fn from_cell(cell: &CellGraph, depth: usize) -> Result<FiniteTree> {
    cell_tree(cell, depth)
}

/// Uniform bilayer Cayley tree: every bilayer node has `g` child pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BilayerTree {
    pub g: SplittingNumber,
    pub depth: usize,
}

impl BilayerTree {
    pub fn bilayer_cayley(g: SplittingNumber, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidTree("at least one layer is required".into()));
        }
        Ok(Self { g, depth })
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        let g = self.g.get() as usize;
        2 * (0..self.depth).map(|k| g.pow(k as u32)).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Root-pair operator under the product boundary `B` on every leaf pair.
    pub fn contract(&self, map: &BilayerMap, b: &BilayerVector) -> Result<BilayerVector> {
        if map.splitting() != self.g {
            return Err(Error::Contract("bilayer map and tree have different splitting numbers".into()));
        }
        if !b.is_psd() {
            return Err(Error::NotPsd(b.min_eigenvalue()));
        }
        let mut cur = *b;
        for _ in 0..self.depth {
            cur = map.step(&cur)?;
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::fixed_point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t5() -> f64 {
        fixed_point(SiteDegree::new(5).unwrap()).t_star.unwrap()
    }

    #[test]
    fn identity_boundary_normalizes() {
        let tree = FiniteTree::cayley(3, 3).unwrap();
        let b = BoundaryAssignment::uniform(&tree, BlochVector::zero()).unwrap();
        assert_eq!(contract_expectation(&tree, &b, Observable::Identity).unwrap(), 1.0);
        assert!(contract_expectation(&tree, &b, Observable::Pauli(3)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_dense_on_small_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trees = [
            FiniteTree::cayley(3, 3).unwrap(),
            FiniteTree::decorated(3, 1, 2).unwrap(),
            FiniteTree::from_parents(vec![None, Some(0), Some(0), Some(1)], vec![4, 2, 3, 3]).unwrap(),
        ];
        for tree in &trees {
            for _ in 0..5 {
                let b = BoundaryAssignment::random(tree, &mut rng).unwrap();
                let (s, d) = (sweep_root(tree, &b).unwrap(), dense_root(tree, &b).unwrap());
                for i in 0..4 {
                    assert!((s[i] - d[i]).abs() < 1e-10, "{s:?} vs {d:?}");
                }
            }
        }
    }

    #[test]
    fn axis_alignment() {
        let tree = FiniteTree::cayley(4, 3).unwrap();
        for axis in 1..=3u8 {
            let b = BoundaryAssignment::uniform(&tree, BlochVector::along(axis, 0.7).unwrap()).unwrap();
            let c = sweep_root(&tree, &b).unwrap();
            for j in 1..=3u8 {
                if j != axis {
                    assert!(c[j as usize].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn depth_parity_alternates() {
        let t = t5();
        let mut last = None;
        for depth in 1..=5 {
            let tree = FiniteTree::cayley(5, depth).unwrap();
            let b = BoundaryAssignment::uniform(&tree, BlochVector::along(3, t).unwrap()).unwrap();
            let e = contract_expectation(&tree, &b, Observable::Pauli(3)).unwrap();
            assert!((e.abs() - t).abs() < 1e-10);
            if let Some(p) = last {
                assert!(e * p < 0.0);
            }
            last = Some(e);
        }
    }

    #[test]
    fn scan_examples() {
        let t = t5();
        let rows = order_parameter_scan(&Family::Cayley { d: 2 }, &[0.6], &[10]).unwrap();
        assert!((rows[0].expectation.abs() - 0.6 / 3f64.powi(10)).abs() < 1e-15);
        let rows = order_parameter_scan(
            &Family::Layered {
                prefix: vec![2, 2],
                tail: vec![5],
            },
            &[t],
            &[6],
        )
        .unwrap();
        assert!((rows[0].expectation.abs() - t / 9.0).abs() < 1e-10);
        let rows = order_parameter_scan(&Family::Decorated { d: 3, g: 1 }, &[0.5, 0.9], &[1, 2, 3]).unwrap();
        assert_eq!(rows.len(), 6);
    }

    #[test]
    fn convergence_is_detected() {
        let fam = Family::Cayley { d: 5 };
        assert_eq!(depth_convergence(&fam, t5(), 4, DEPTH_TOL).unwrap(), Some(2));
        assert_eq!(depth_convergence(&Family::Cayley { d: 4 }, 0.9, 3, DEPTH_TOL).unwrap(), None);
    }

    #[test]
    fn boundary_validation() {
        let tree = FiniteTree::cayley(3, 1).unwrap();
        let bad = from_pauli_coefficients([1.0, 0.0, 0.0, 1.5]);
        assert!(matches!(BoundaryAssignment::new(&tree, vec![bad; 2]), Err(Error::NotPsd(_))));
        assert!(BoundaryAssignment::new(&tree, vec![bad]).is_err());
        let big = FiniteTree::cayley(3, 5).unwrap();
        let b = BoundaryAssignment::uniform(&big, BlochVector::zero()).unwrap();
        assert!(matches!(dense_root(&big, &b), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn bilayer_tree_iterates_node_map() {
        let g = SplittingNumber::new(1).unwrap();
        let tree = BilayerTree::bilayer_cayley(g, 40).unwrap();
        let map = BilayerMap::new(g).unwrap();
        let root = tree.contract(&map, &BilayerVector::zero()).unwrap();
        assert!((3.0 * root.x[1][1] - (19f64.sqrt() - 4.0)).abs() < 1e-12);
        assert_eq!(BilayerTree::bilayer_cayley(SplittingNumber::new(2).unwrap(), 3).unwrap().len(), 14);
    }

    #[test]
    fn cell_generated_tree_matches_decorated_tree() {
        let tree = from_cell(&CellGraph::decorated_star(3, 1).unwrap(), 2).unwrap();
        let b = BoundaryAssignment::uniform(&tree, BlochVector::along(3, 0.8).unwrap()).unwrap();
        let e = contract_expectation(&tree, &b, Observable::Pauli(3)).unwrap();
        assert!((e - scalar_map(&[2, 3, 2, 3], 0.8).unwrap()).abs() < 1e-12);
    }
}
