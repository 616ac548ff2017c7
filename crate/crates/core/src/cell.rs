//! Finite bipartite cells, their loop diagrams, and exact transfer polynomials.
//!
//! A cell has a root placeholder `0̄` joined by a single edge to the output
//! site. Every other vertex is an AKLT site whose degree is its cell degree
//! plus the number of times it occurs in the boundary list; each occurrence
//! is one ingoing leg. With the boundary `⊗_legs (1 + s_leg t σ₁)`, where
//! `s_leg = −1` on vertices in the root's class, the normalized cell map
//! returns `1 + (p(t)/q(t)) σ₁`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::network::{CompiledNetwork, Network};
use crate::rational::{rat, rat_int, to_f64, RatPoly, Rational};
use crate::transfer::smallest_crossing;
use crate::tree::FiniteTree;

/// Default cap on the number of edges of the augmented cell.
pub const EDGE_CAP: usize = 32;
/// Largest cycle-space dimension enumerated.
pub const MAX_CYCLE_DIM: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellGraph {
    ids: Vec<Value>,
    edges: Vec<(usize, usize)>,
    root: usize,
    boundary: Vec<usize>,
    side: Vec<Side>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    vertices: Vec<Value>,
    edges: Vec<(Value, Value)>,
    root: Value,
    boundary: Vec<Value>,
    bipartition: Bipartition,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Bipartition {
    #[serde(rename = "A")]
    a: Vec<Value>,
    #[serde(rename = "B")]
    b: Vec<Value>,
}

fn id_key(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(format!("s:{s}")),
        Value::Number(n) => Ok(format!("n:{n}")),
        other => Err(Error::InvalidCell(format!("vertex id must be a string or number, got {other}"))),
    }
}

impl CellGraph {
    /// Validates and builds a cell from vertex ids given as JSON values.
    pub fn new(
        ids: Vec<Value>,
        edges: Vec<(Value, Value)>,
        root: Value,
        boundary: Vec<Value>,
        side_a: Vec<Value>,
        side_b: Vec<Value>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in ids.iter().enumerate() {
            if index.insert(id_key(v)?, i).is_some() {
                return Err(Error::InvalidCell(format!("duplicate vertex id {v}")));
            }
        }
        let look = |v: &Value, what: &str| -> Result<usize> {
            index
                .get(&id_key(v)?)
                .copied()
                .ok_or_else(|| Error::InvalidCell(format!("{what} references unknown vertex {v}")))
        };
        let n = ids.len();
        let mut e = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (u, v) in &edges {
            let (u, v) = (look(u, "edge")?, look(v, "edge")?);
            if u == v {
                return Err(Error::InvalidCell(format!("self-loop at {}", ids[u])));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidCell(format!("duplicate edge ({}, {})", ids[u], ids[v])));
            }
            e.push((u, v));
        }
        let root = look(&root, "root")?;
        let boundary = boundary
            .iter()
            .map(|b| look(b, "boundary"))
            .collect::<Result<Vec<_>>>()?;
        let mut side = vec![None; n];
        for (list, s) in [(&side_a, Side::A), (&side_b, Side::B)] {
            for v in list {
                let i = look(v, "bipartition")?;
                if side[i].replace(s).is_some() {
                    return Err(Error::InvalidCell(format!("vertex {v} appears twice in the bipartition")));
                }
            }
        }
        let side = side
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::InvalidCell(format!("vertex {} has no bipartition label", ids[i]))))
            .collect::<Result<Vec<_>>>()?;
        let cell = Self {
            ids,
            edges: e,
            root,
            boundary,
            side,
        };
        cell.validate()?;
        Ok(cell)
    }

    fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        for &(u, v) in &self.edges {
            if self.side[u] == self.side[v] {
                return Err(Error::InvalidCell(format!(
                    "not bipartite: edge ({}, {}) joins two {:?} vertices",
                    self.ids[u], self.ids[v], self.side[u]
                )));
            }
        }
        let adj = self.adjacency();
        if adj[self.root].len() != 1 {
            return Err(Error::InvalidCell(format!(
                "root must have degree 1, has {}",
                adj[self.root].len()
            )));
        }
        if self.boundary.contains(&self.root) {
            return Err(Error::InvalidCell("root cannot be a boundary vertex".into()));
        }
        if self.boundary.is_empty() {
            return Err(Error::InvalidCell("boundary is empty".into()));
        }
        let dist = self.distances();
        if let Some(v) = (0..n).find(|&v| dist[v].is_none()) {
            return Err(Error::InvalidCell(format!("not connected: {} unreachable from root", self.ids[v])));
        }
        for v in 0..n {
            if v != self.root && self.site_degree(v) < 2 {
                return Err(Error::InvalidCell(format!(
                    "vertex {} would be a site of degree {}",
                    self.ids[v],
                    self.site_degree(v)
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: CellFile = serde_json::from_str(text).map_err(|e| Error::InvalidCell(format!("malformed cell file: {e}")))?;
        Self::new(f.vertices, f.edges, f.root, f.boundary, f.bipartition.a, f.bipartition.b)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Value {
        let f = CellFile {
            vertices: self.ids.clone(),
            edges: self.edges.iter().map(|&(u, v)| (self.ids[u].clone(), self.ids[v].clone())).collect(),
            root: self.ids[self.root].clone(),
            boundary: self.boundary.iter().map(|&b| self.ids[b].clone()).collect(),
            bipartition: Bipartition {
                a: (0..self.ids.len()).filter(|&v| self.side[v] == Side::A).map(|v| self.ids[v].clone()).collect(),
                b: (0..self.ids.len()).filter(|&v| self.side[v] == Side::B).map(|v| self.ids[v].clone()).collect(),
            },
        };
        serde_json::to_value(f).expect("cell serializes")
    }

    fn numbered(n: usize, edges: &[(usize, usize)], boundary: &[usize]) -> Result<Self> {
        // Vertex 0 is the root; sides follow BFS parity.
        let ids: Vec<Value> = (0..n).map(|i| Value::from(i as u64)).collect();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut parity = vec![None; n];
        parity[0] = Some(0usize);
        let mut q = VecDeque::from([0]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if parity[v].is_none() {
                    parity[v] = Some(1 - parity[u].unwrap());
                    q.push_back(v);
                }
            }
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, p) in parity.iter().enumerate() {
            match p {
                Some(0) => a.push(ids[i].clone()),
                _ => b.push(ids[i].clone()),
            }
        }
        Self::new(
            ids.clone(),
            edges.iter().map(|&(u, v)| (ids[u].clone(), ids[v].clone())).collect(),
            ids[0].clone(),
            boundary.iter().map(|&x| ids[x].clone()).collect(),
            a,
            b,
        )
    }

    /// Single site of degree `d`: `0̄ - c` with `d − 1` legs on `c`.
    pub fn star(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidCell(format!("star degree must be at least 2, got {d}")));
        }
        Self::numbered(2, &[(0, 1)], &vec![1; d as usize - 1])
    }

    /// `0̄ - c` with one leg on `c`.
    pub fn single_edge() -> Result<Self> {
        Self::star(2)
    }

    /// A chain of `g` degree-2 sites between the root and a degree-`d` site.
    pub fn decorated_star(d: u32, g: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidCell(format!("star degree must be at least 2, got {d}")));
        }
        let edges: Vec<(usize, usize)> = (0..=g).map(|i| (i, i + 1)).collect();
        Self::numbered(g + 2, &edges, &vec![g + 1; d as usize - 1])
    }

    /// Root attached to one corner of a 4-cycle; the other three corners carry one leg each.
    pub fn square() -> Result<Self> {
        Self::numbered(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 1)], &[2, 3, 4])
    }

    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn id(&self, v: usize) -> &Value {
        &self.ids[v]
    }

    pub fn side(&self, v: usize) -> Side {
        self.side[v]
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.ids.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Graph distance from the root.
    pub fn distances(&self) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.ids.len()];
        dist[self.root] = Some(0);
        let mut q = VecDeque::from([self.root]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    q.push_back(v);
                }
            }
        }
        dist
    }

    /// The site adjacent to the root.
    pub fn output_site(&self) -> usize {
        self.adjacency()[self.root][0]
    }

    /// Cell degree plus boundary multiplicity.
    pub fn site_degree(&self, v: usize) -> u32 {
        let cell = self.edges.iter().filter(|&&(a, b)| a == v || b == v).count();
        let legs = self.boundary.iter().filter(|&&b| b == v).count();
        (cell + legs) as u32
    }

    /// `−1` for legs on vertices in the root's class, `+1` otherwise.
    pub fn leg_signs(&self) -> Vec<i8> {
        self.boundary
            .iter()
            .map(|&v| if self.side[v] == self.side[self.root] { -1 } else { 1 })
            .collect()
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.ids.len()
    }

    /// The valence-bond network of the cell's sites.
    pub fn network(&self) -> Result<Network> {
        let sites: Vec<usize> = (0..self.ids.len()).filter(|&v| v != self.root).collect();
        let pos: HashMap<usize, usize> = sites.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let degrees = sites.iter().map(|&v| self.site_degree(v)).collect();
        let bonds = self
            .edges
            .iter()
            .filter(|&&(u, v)| u != self.root && v != self.root)
            .map(|&(u, v)| (pos[&u], pos[&v]))
            .collect();
        let inputs = self.boundary.iter().map(|b| pos[b]).collect();
        Network::new(degrees, bonds, vec![pos[&self.output_site()]], inputs)
    }
}

/// Cell plus one pendant vertex per boundary leg.
#[derive(Clone, Debug)]
pub struct AugmentedCell {
    pub cell: CellGraph,
    /// Cell edges first, then pendant edges `(pendant, boundary vertex)`.
    pub edges: Vec<(usize, usize)>,
    pub n_pendants: usize,
}

impl AugmentedCell {
    pub fn new(cell: &CellGraph) -> Self {
        let n = cell.n_vertices();
        let mut edges = cell.edges.clone();
        for (k, &x) in cell.boundary.iter().enumerate() {
            edges.push((n + k, x));
        }
        Self {
            cell: cell.clone(),
            edges,
            n_pendants: cell.boundary.len(),
        }
    }

    fn is_open(&self, v: usize) -> bool {
        v == self.cell.root || v >= self.cell.n_vertices()
    }

    pub fn root_edge(&self) -> usize {
        self.edges
            .iter()
            .position(|&(u, v)| u == self.cell.root || v == self.cell.root)
            .expect("root has an edge")
    }

    fn diagram(&self, mask: u64) -> LoopDiagram {
        let n = self.cell.n_vertices();
        let mut touched = 0usize;
        for (e, &(u, _)) in self.edges.iter().enumerate().skip(self.cell.edges.len()) {
            if mask >> e & 1 == 1 && u >= n {
                touched += 1;
            }
        }
        LoopDiagram {
            mask,
            class: touched,
        }
    }

    /// Γ-degree of every vertex of the augmented graph.
    pub fn degrees_in(&self, mask: u64) -> Vec<usize> {
        let mut deg = vec![0; self.cell.n_vertices() + self.n_pendants];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                deg[u] += 1;
                deg[v] += 1;
            }
        }
        deg
    }

    /// Product over touched internal sites of `−1/(deg_Γ + 1)`.
    pub fn diagram_weight(&self, mask: u64) -> Rational {
        let deg = self.degrees_in(mask);
        let mut w = Rational::one();
        for v in 0..self.cell.n_vertices() {
            if !self.is_open(v) && deg[v] > 0 {
                w *= rat(-1, deg[v] as i64 + 1);
            }
        }
        w
    }
}

/// Edge subset of the augmented cell with even degree at every internal site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LoopDiagram {
    pub mask: u64,
    /// Number of pendant vertices touched.
    pub class: usize,
}

impl LoopDiagram {
    pub fn parity(&self) -> usize {
        self.class % 2
    }

    pub fn edge_count(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.mask >> edge & 1 == 1
    }
}

/// Diagrams grouped by class: `by_class[k]` is `𝒢_k`.
#[derive(Clone, Debug, Serialize)]
pub struct DiagramSets {
    pub by_class: Vec<Vec<LoopDiagram>>,
}

impl DiagramSets {
    pub fn class(&self, k: usize) -> &[LoopDiagram] {
        self.by_class.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn total(&self) -> usize {
        self.by_class.iter().map(Vec::len).sum()
    }
}

pub fn enumerate_diagrams(cell: &CellGraph) -> Result<DiagramSets> {
    enumerate_diagrams_with_cap(cell, EDGE_CAP)
}

/// Enumerates the cycle space of the augmented cell with all open vertices
/// (root and pendants) merged into one; this is exactly the set of edge
/// subsets with even degree at every internal site.
pub fn enumerate_diagrams_with_cap(cell: &CellGraph, cap: usize) -> Result<DiagramSets> {
    let aug = AugmentedCell::new(cell);
    let m = aug.edges.len();
    if m > cap.min(64) {
        return Err(Error::CapExceeded { edges: m, cap });
    }
    let merged = |v: usize| if aug.is_open(v) { usize::MAX } else { v };
    // Spanning forest of the merged multigraph via BFS from the open vertex.
    let mut adj: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (e, &(u, v)) in aug.edges.iter().enumerate() {
        let (u, v) = (merged(u), merged(v));
        adj.entry(u).or_default().push((v, e));
        adj.entry(v).or_default().push((u, e));
    }
    let mut parent_edge: HashMap<usize, Option<usize>> = HashMap::from([(usize::MAX, None)]);
    let mut parent_vertex: HashMap<usize, usize> = HashMap::new();
    let mut tree_edges = vec![false; m];
    let mut q = VecDeque::from([usize::MAX]);
    while let Some(u) = q.pop_front() {
        for &(v, e) in adj.get(&u).map_or(&[][..], Vec::as_slice) {
            if let std::collections::hash_map::Entry::Vacant(slot) = parent_edge.entry(v) {
                slot.insert(Some(e));
                parent_vertex.insert(v, u);
                tree_edges[e] = true;
                q.push_back(v);
            }
        }
    }
    let path_to_root = |mut v: usize| -> u64 {
        let mut mask = 0u64;
        while let Some(Some(e)) = parent_edge.get(&v) {
            mask ^= 1 << e;
            v = parent_vertex[&v];
        }
        mask
    };
    let basis: Vec<u64> = (0..m)
        .filter(|&e| !tree_edges[e])
        .map(|e| {
            let (u, v) = aug.edges[e];
            (1u64 << e) ^ path_to_root(merged(u)) ^ path_to_root(merged(v))
        })
        .collect();
    if basis.len() > MAX_CYCLE_DIM {
        return Err(Error::BudgetExceeded(format!(
            "cycle space of dimension {} exceeds {MAX_CYCLE_DIM}",
            basis.len()
        )));
    }
    let mut by_class: Vec<Vec<LoopDiagram>> = vec![Vec::new(); aug.n_pendants + 1];
    // Gray-code walk: step i flips the basis element at the lowest set bit of i.
    let mut mask = 0u64;
    by_class[0].push(aug.diagram(0));
    for i in 1u64..(1u64 << basis.len()) {
        mask ^= basis[i.trailing_zeros() as usize];
        let d = aug.diagram(mask);
        by_class[d.class].push(d);
    }
    for class in &mut by_class {
        class.sort();
    }
    Ok(DiagramSets { by_class })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Diagram,
    Oracle,
}

/// `F(t) = p(t)/q(t)` with `p` odd and `q` even.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransferPoly {
    pub p: RatPoly,
    pub q: RatPoly,
}

impl TransferPoly {
    pub fn new(p: RatPoly, q: RatPoly) -> Result<Self> {
        if q.coeff(0).is_zero() {
            return Err(Error::Numerical("q(0) vanishes".into()));
        }
        Ok(Self { p, q })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.p.eval_f64(t) / self.q.eval_f64(t)
    }

    /// Divides both parts by `q(0)`.
    pub fn normalized(&self) -> Self {
        let s = self.q.coeff(0).recip();
        Self {
            p: self.p.scale(&s),
            q: self.q.scale(&s),
        }
    }

    pub fn has_parity(&self) -> bool {
        self.p.is_odd() && self.q.is_even()
    }

    /// Whether `self` and `other` define the same rational function.
    pub fn same_function(&self, other: &Self) -> bool {
        self.p.mul(&other.q) == other.p.mul(&self.q)
    }
}

fn diagram_polynomials(cell: &CellGraph) -> Result<TransferPoly> {
    let sets = enumerate_diagrams(cell)?;
    let aug = AugmentedCell::new(cell);
    let mut p = vec![Rational::zero(); aug.n_pendants + 1];
    let mut q = vec![Rational::zero(); aug.n_pendants + 1];
    for (k, class) in sets.by_class.iter().enumerate() {
        for d in class {
            let w = aug.diagram_weight(d.mask);
            if k % 2 == 1 {
                p[k] += w;
            } else {
                q[k] += w;
            }
        }
    }
    TransferPoly::new(RatPoly::new(p), RatPoly::new(q))
}

/// Exact `(q(t), p(t))` samples of the unnormalized cell map at `t = j / n`.
fn oracle_samples(cell: &CellGraph, net: &CompiledNetwork) -> Result<Vec<(Rational, Rational, Rational)>> {
    let signs = cell.leg_signs();
    let n = signs.len() as i64;
    (0..=n)
        .into_par_iter()
        .map(|j| {
            let ops: Vec<[[i64; 2]; 2]> = signs
                .iter()
                .map(|&s| {
                    let off = i64::from(s) * j;
                    [[n, off], [off, n]]
                })
                .collect();
            let r = net.apply_product_int(&ops)?;
            let half = rat(1, 2);
            let q = (&r[0][0] + &r[1][1]) * &half;
            let p = (&r[0][1] + &r[1][0]) * &half;
            Ok((rat(j, n), q, p))
        })
        .collect()
}

fn oracle_polynomials(cell: &CellGraph) -> Result<TransferPoly> {
    let net = cell.network()?.compile()?;
    let samples = oracle_samples(cell, &net)?;
    let q_pts: Vec<_> = samples.iter().map(|(t, q, _)| (t.clone(), q.clone())).collect();
    let p_pts: Vec<_> = samples.iter().map(|(t, _, p)| (t.clone(), p.clone())).collect();
    let tp = TransferPoly::new(RatPoly::interpolate(&p_pts), RatPoly::interpolate(&q_pts))?;
    Ok(tp.normalized())
}

pub fn transfer_polynomials(cell: &CellGraph, convention: Convention) -> Result<TransferPoly> {
    match convention {
        Convention::Diagram => diagram_polynomials(cell),
        Convention::Oracle => oracle_polynomials(cell),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientDiff {
    pub part: char,
    pub power: usize,
    #[serde(serialize_with = "crate::rational::serialize_rational")]
    pub oracle: Rational,
    #[serde(serialize_with = "crate::rational::serialize_rational")]
    pub other: Rational,
}

/// Coefficients of two transfer polynomials, each normalized to `q(0) = 1`, that differ.
pub fn coefficient_diff(oracle: &TransferPoly, other: &TransferPoly) -> Vec<CoefficientDiff> {
    let (a, b) = (oracle.normalized(), other.normalized());
    let mut out = Vec::new();
    for (part, x, y) in [('p', &a.p, &b.p), ('q', &a.q, &b.q)] {
        let len = x.coeffs().len().max(y.coeffs().len());
        for k in 0..len {
            if x.coeff(k) != y.coeff(k) {
                out.push(CoefficientDiff {
                    part,
                    power: k,
                    oracle: x.coeff(k),
                    other: y.coeff(k),
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PolynomialReport {
    pub oracle: TransferPoly,
    pub diagram_rule: TransferPoly,
    pub diff: Vec<CoefficientDiff>,
}

/// Oracle polynomials together with the diagram-rule polynomials and their differences.
pub fn polynomial_report(cell: &CellGraph) -> Result<PolynomialReport> {
    let oracle = transfer_polynomials(cell, Convention::Oracle)?;
    let diagram_rule = transfer_polynomials(cell, Convention::Diagram)?;
    let diff = coefficient_diff(&oracle, &diagram_rule);
    Ok(PolynomialReport {
        oracle,
        diagram_rule,
        diff,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    #[serde(serialize_with = "crate::rational::serialize_rational")]
    pub slope: Rational,
    pub breaks: bool,
    pub t_lambda: Option<f64>,
}

/// `p′(0)/q(0) < −1` on the oracle polynomials, with the smallest fixed point of `F = −t`.
pub fn breaking_criterion(cell: &CellGraph) -> Result<CriterionResult> {
    criterion_from_poly(&transfer_polynomials(cell, Convention::Oracle)?)
}

pub fn criterion_from_poly(tp: &TransferPoly) -> Result<CriterionResult> {
    let slope = tp.p.coeff(1) / tp.q.coeff(0);
    let breaks = slope < rat_int(-1);
    let t_lambda = if breaks {
        smallest_crossing(|t| tp.eval(t) + t, 4096).map(|(t, _, _)| t)
    } else {
        None
    };
    Ok(CriterionResult {
        slope,
        breaks,
        t_lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Ordered,
    Unique,
    Boundary,
}

/// Compares `d` with `3^(g+1) + 1`.
pub fn decorated_threshold(d: u64, g: u32) -> Result<Threshold> {
    if d < 2 {
        return Err(Error::Contract(format!("degree must be at least 2, got {d}")));
    }
    let limit = BigUint::from(3u32).pow(g + 1) + BigUint::one();
    let d = BigUint::from(d);
    Ok(match d.cmp(&limit) {
        std::cmp::Ordering::Greater => Threshold::Ordered,
        std::cmp::Ordering::Less => Threshold::Unique,
        std::cmp::Ordering::Equal => Threshold::Boundary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeCellResult {
    #[serde(serialize_with = "crate::rational::serialize_rational")]
    pub sum: Rational,
    pub breaks: bool,
}

/// `Σ_γ (1/3)^|γ|` over root-to-leg paths, `|γ|` counting the sites on the path.
pub fn tree_cell_condition(cell: &CellGraph) -> Result<TreeCellResult> {
    if !cell.is_tree() {
        return Err(Error::InvalidCell("tree-cell condition needs a cell that is a tree".into()));
    }
    let dist = cell.distances();
    let mut sum = Rational::zero();
    for &b in cell.boundary() {
        let sites = dist[b].expect("connected") as u32;
        sum += Rational::new(BigInt::one(), BigInt::from(3u32).pow(sites));
    }
    let breaks = sum > Rational::one();
    Ok(TreeCellResult { sum, breaks })
}

/// Tree generated by gluing copies of a tree cell: every boundary leg of a
/// copy above the last layer receives the output site of a new copy.
pub fn cell_tree(cell: &CellGraph, copies: usize) -> Result<FiniteTree> {
    if !cell.is_tree() {
        return Err(Error::InvalidCell("only tree cells generate trees".into()));
    }
    if copies == 0 {
        return Err(Error::InvalidTree("at least one copy is required".into()));
    }
    let dist = cell.distances();
    let mut order: Vec<usize> = (0..cell.n_vertices()).filter(|&v| v != cell.root()).collect();
    order.sort_by_key(|&v| dist[v]);
    let adj = cell.adjacency();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut degree: Vec<u32> = Vec::new();
    // (attachment vertex, copy layer)
    let mut pending: VecDeque<(Option<usize>, usize)> = VecDeque::from([(None, 1)]);
    while let Some((attach, layer)) = pending.pop_front() {
        let mut map = BTreeMap::new();
        for &v in &order {
            let up = adj[v].iter().copied().find(|&u| dist[u] < dist[v]).expect("tree cell");
            let p = if up == cell.root() { attach } else { Some(map[&up]) };
            parent.push(p);
            degree.push(cell.site_degree(v));
            map.insert(v, parent.len() - 1);
        }
        if layer < copies {
            for &b in cell.boundary() {
                pending.push_back((Some(map[&b]), layer + 1));
            }
        }
    }
    FiniteTree::from_parents(parent, degree)
}

/// Magnitude of a rational slope, for comparisons.
pub fn abs_rational(r: &Rational) -> Rational {
    r.abs()
}

/// `f64` view of the slope.
pub fn slope_f64(c: &CriterionResult) -> f64 {
    to_f64(&c.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::site::{f_poly, sigma_poly, SiteDegree};

    fn brute_force(cell: &CellGraph) -> Vec<Vec<u64>> {
        let aug = AugmentedCell::new(cell);
        let m = aug.edges.len();
        let mut out = vec![Vec::new(); aug.n_pendants + 1];
        for mask in 0u64..(1 << m) {
            let deg = aug.degrees_in(mask);
            let ok = (0..cell.n_vertices()).all(|v| aug.is_open(v) || deg[v] % 2 == 0);
            if ok {
                out[aug.diagram(mask).class].push(mask);
            }
        }
        out
    }

    fn star_poly(d: u32) -> TransferPoly {
        let d = SiteDegree::new(d).unwrap();
        TransferPoly::new(sigma_poly(d), f_poly(d)).unwrap()
    }

    #[test]
    fn star_enumeration() {
        let sets = enumerate_diagrams(&CellGraph::star(3).unwrap()).unwrap();
        assert_eq!(
            (sets.class(0).len(), sets.class(1).len(), sets.class(2).len()),
            (1, 2, 1)
        );
        assert_eq!(sets.class(0)[0].mask, 0);
        let single = enumerate_diagrams(&CellGraph::single_edge().unwrap()).unwrap();
        assert_eq!(single.class(1).len(), 1);
    }

    #[test]
    fn square_enumeration() {
        let cell = CellGraph::square().unwrap();
        let sets = enumerate_diagrams(&cell).unwrap();
        let cycle: u64 = 0b11110; // edges 1..=4 form the 4-cycle
        assert!(sets.class(0).iter().any(|d| d.mask == 0));
        assert!(sets.class(0).iter().any(|d| d.mask == cycle));
        let closed: Vec<_> = sets.class(0).iter().filter(|d| d.mask != 0).collect();
        assert_eq!(closed.len(), 1);
    }

    #[test]
    fn gray_code_matches_brute_force() {
        for cell in [
            CellGraph::square().unwrap(),
            CellGraph::star(5).unwrap(),
            CellGraph::decorated_star(3, 2).unwrap(),
        ] {
            let sets = enumerate_diagrams(&cell).unwrap();
            let brute = brute_force(&cell);
            for (k, masks) in brute.iter().enumerate() {
                let mut got: Vec<u64> = sets.class(k).iter().map(|d| d.mask).collect();
                got.sort();
                assert_eq!(&got, masks, "class {k}");
            }
        }
    }

    #[test]
    fn odd_diagrams_use_the_root_edge() {
        let cell = CellGraph::square().unwrap();
        let aug = AugmentedCell::new(&cell);
        let sets = enumerate_diagrams(&cell).unwrap();
        for class in sets.by_class.iter() {
            for d in class {
                assert_eq!(d.parity() == 1, d.contains(aug.root_edge()));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let cell = CellGraph::star(40).unwrap();
        assert!(matches!(enumerate_diagrams(&cell), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn star_cells_reduce_to_f_d() {
        for d in 3..=6 {
            let tp = transfer_polynomials(&CellGraph::star(d).unwrap(), Convention::Oracle).unwrap();
            assert!(tp.has_parity());
            assert!(tp.same_function(&star_poly(d)), "d={d}");
        }
        let tp = transfer_polynomials(&CellGraph::star(3).unwrap(), Convention::Oracle).unwrap();
        assert_eq!(tp.q.coeffs(), &[rat(1, 1), rat(0, 1), rat(1, 3)]);
        assert_eq!(tp.p.coeffs(), &[rat(0, 1), rat(-2, 3)]);
    }

    #[test]
    fn decorated_cells_scale_by_powers_of_three() {
        for d in [3, 5] {
            for g in 0..=2usize {
                let tp = transfer_polynomials(&CellGraph::decorated_star(d, g).unwrap(), Convention::Oracle).unwrap();
                let base = star_poly(d);
                let scaled = TransferPoly::new(base.p.scale(&Rational::new(BigInt::one(), BigInt::from(3u32).pow(g as u32))), base.q).unwrap();
                assert!(tp.same_function(&scaled), "d={d} g={g}");
            }
        }
    }

    #[test]
    fn square_cell_polynomials() {
        let tp = transfer_polynomials(&CellGraph::square().unwrap(), Convention::Oracle).unwrap();
        assert_eq!(tp.q.coeffs(), &[rat(1, 1), rat(0, 1), rat(13, 42)]);
        assert_eq!(tp.p.coeffs(), &[rat(0, 1), rat(-13, 42), rat(0, 1), rat(-1, 42)]);
        let diagram = transfer_polynomials(&CellGraph::square().unwrap(), Convention::Diagram).unwrap();
        assert_eq!(diagram.q.coeff(0), rat(82, 81));
        assert!(!polynomial_report(&CellGraph::square().unwrap()).unwrap().diff.is_empty());
    }

    #[test]
    fn criterion_examples() {
        let sq = breaking_criterion(&CellGraph::square().unwrap()).unwrap();
        assert!(!sq.breaks);
        let s5 = breaking_criterion(&CellGraph::star(5).unwrap()).unwrap();
        assert_eq!(s5.slope, rat(-4, 3));
        assert!(s5.breaks);
        let t5 = crate::transfer::fixed_point(SiteDegree::new(5).unwrap()).t_star.unwrap();
        assert!((s5.t_lambda.unwrap() - t5).abs() < 1e-12);
        let s4 = breaking_criterion(&CellGraph::star(4).unwrap()).unwrap();
        assert_eq!((s4.slope, s4.breaks), (rat(-1, 1), false));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(decorated_threshold(14, 1).unwrap(), Threshold::Ordered);
        assert_eq!(decorated_threshold(10, 1).unwrap(), Threshold::Boundary);
        assert_eq!(decorated_threshold(5, 0).unwrap(), Threshold::Ordered);
        assert_eq!(decorated_threshold(2, 1).unwrap(), Threshold::Unique);
        assert!(decorated_threshold(1, 0).is_err());
    }

    #[test]
    fn tree_cell_examples() {
        let r = tree_cell_condition(&CellGraph::decorated_star(3, 1).unwrap()).unwrap();
        assert_eq!((r.sum, r.breaks), (rat(2, 9), false));
        for b in 1..=6u32 {
            let r = tree_cell_condition(&CellGraph::star(b + 1).unwrap()).unwrap();
            assert_eq!(r.sum, rat(i64::from(b), 3));
            assert_eq!(r.breaks, b >= 4);
        }
        let r = tree_cell_condition(&CellGraph::single_edge().unwrap()).unwrap();
        assert_eq!((r.sum, r.breaks), (rat(1, 3), false));
        assert!(tree_cell_condition(&CellGraph::square().unwrap()).is_err());
    }

    #[test]
    fn tree_cell_sum_is_slope_magnitude() {
        for cell in [
            CellGraph::decorated_star(3, 1).unwrap(),
            CellGraph::decorated_star(5, 2).unwrap(),
            CellGraph::star(4).unwrap(),
        ] {
            let sum = tree_cell_condition(&cell).unwrap().sum;
            assert_eq!(abs_rational(&breaking_criterion(&cell).unwrap().slope), sum);
        }
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let cell = CellGraph::square().unwrap();
        let text = cell.to_json().to_string();
        assert_eq!(CellGraph::from_json_str(&text).unwrap(), cell);

        let named = r#"{"vertices":["r","a","b"],"edges":[["r","a"],["a","b"]],"root":"r",
            "boundary":["b","b"],"bipartition":{"A":["r","b"],"B":["a"]}}"#;
        let c = CellGraph::from_json_str(named).unwrap();
        assert_eq!(c.leg_signs(), vec![-1, -1]);

        let bad_bip = r#"{"vertices":[0,1,2],"edges":[[0,1],[1,2]],"root":0,"boundary":[2],
            "bipartition":{"A":[0,1],"B":[2]}}"#;
        assert!(matches!(CellGraph::from_json_str(bad_bip), Err(Error::InvalidCell(m)) if m.contains("bipartite")));
        let root_deg = r#"{"vertices":[0,1,2],"edges":[[0,1],[0,2],[1,2]],"root":0,"boundary":[2],
            "bipartition":{"A":[0],"B":[1,2]}}"#;
        assert!(CellGraph::from_json_str(root_deg).is_err());
        let root_boundary = r#"{"vertices":[0,1],"edges":[[0,1]],"root":0,"boundary":[0,1],
            "bipartition":{"A":[0],"B":[1]}}"#;
        assert!(matches!(CellGraph::from_json_str(root_boundary), Err(Error::InvalidCell(m)) if m.contains("root")));
        let disconnected = r#"{"vertices":[0,1,2,3],"edges":[[0,1],[2,3]],"root":0,"boundary":[1,2,3],
            "bipartition":{"A":[0,2],"B":[1,3]}}"#;
        assert!(matches!(CellGraph::from_json_str(disconnected), Err(Error::InvalidCell(m)) if m.contains("connected")));
        assert!(CellGraph::from_json_str("{\"vertices\":[]}").is_err());
    }

    #[test]
    fn cell_tree_shapes() {
        let t = cell_tree(&CellGraph::decorated_star(3, 1).unwrap(), 2).unwrap();
        assert_eq!(t.len(), 2 + 2 * 2);
        assert_eq!(t.layer_degrees(), Some(vec![2, 3, 2, 3]));
    }
}
