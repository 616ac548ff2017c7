//! Finite rooted trees whose vertices are AKLT sites.
//!
//! Vertex 0 is the root. Its outgoing slot is the open output edge; every
//! other vertex sends its outgoing slot to its parent. Ingoing slots not
//! used by children are boundary legs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::transfer::DegreeSequence;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteTree {
    parent: Vec<Option<usize>>,
    degree: Vec<u32>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl FiniteTree {
    /// Builds a tree from a parent map; vertex 0 must be the unique root.
    pub fn from_parents(parent: Vec<Option<usize>>, degree: Vec<u32>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no vertices".into()));
        }
        if degree.len() != n {
            return Err(Error::InvalidTree(format!(
                "{} degrees for {n} vertices",
                degree.len()
            )));
        }
        if parent[0].is_some() {
            return Err(Error::InvalidTree("vertex 0 must be the root".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate().skip(1) {
            match *p {
                None => return Err(Error::InvalidTree(format!("vertex {v} is a second root"))),
                Some(p) if p >= n => {
                    return Err(Error::InvalidTree(format!("vertex {v} has missing parent {p}")))
                }
                Some(p) if p == v => return Err(Error::InvalidTree(format!("vertex {v} is its own parent"))),
                Some(p) => children[p].push(v),
            }
        }
        // Breadth-first from the root reaches every vertex exactly when the map is acyclic.
        let mut depth = vec![usize::MAX; n];
        depth[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                queue.push_back(c);
            }
        }
        if let Some(v) = depth.iter().position(|&d| d == usize::MAX) {
            return Err(Error::InvalidTree(format!("vertex {v} lies on a cycle")));
        }
        for v in 0..n {
            if degree[v] < 2 {
                return Err(Error::InvalidTree(format!("vertex {v} has degree {} < 2", degree[v])));
            }
            if children[v].len() + 1 > degree[v] as usize {
                return Err(Error::InvalidTree(format!(
                    "vertex {v} has {} children but degree {}",
                    children[v].len(),
                    degree[v]
                )));
            }
        }
        Ok(Self {
            parent,
            degree,
            children,
            depth,
        })
    }

    /// Tree with one degree per layer; layer 1 is the root.
    pub fn layered(seq: &DegreeSequence, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidTree("at least one layer is required".into()));
        }
        let mut parent = vec![None];
        let mut degree = vec![seq.get(1)?];
        let mut frontier = vec![0usize];
        for layer in 2..=layers {
            let d = seq.get(layer)?;
            let mut next = Vec::new();
            for &v in &frontier {
                for _ in 0..degree[v] - 1 {
                    parent.push(Some(v));
                    degree.push(d);
                    next.push(parent.len() - 1);
                }
            }
            frontier = next;
        }
        Self::from_parents(parent, degree)
    }

    /// Cayley tree of degree `d` with `layers` layers of sites.
    pub fn cayley(d: u32, layers: usize) -> Result<Self> {
        Self::layered(&DegreeSequence::constant(d)?, layers)
    }

    /// Cayley tree of degree `d` with `g` degree-2 sites inserted below every
    /// base vertex on each child edge; `base_layers` counts base vertices on a
    /// root-to-leaf path.
    pub fn decorated(d: u32, g: usize, base_layers: usize) -> Result<Self> {
        if base_layers == 0 {
            return Err(Error::InvalidTree("at least one base layer is required".into()));
        }
        Self::layered(&Self::decorated_sequence(d, g)?, (base_layers - 1) * (g + 1) + 1)
    }

    /// Layer degrees `d, 2 (×g), d, 2 (×g), …` of a decorated tree.
    pub fn decorated_sequence(d: u32, g: usize) -> Result<DegreeSequence> {
        let mut tail = vec![d];
        tail.extend(std::iter::repeat(2).take(g));
        DegreeSequence::new(Vec::new(), tail)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Distance from the root (root has depth 0).
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Number of layers of sites.
    pub fn layers(&self) -> usize {
        self.depth.iter().max().map_or(0, |d| d + 1)
    }

    /// Ingoing slots of `v` not used by children.
    pub fn boundary_legs(&self, v: usize) -> usize {
        self.degree[v] as usize - 1 - self.children[v].len()
    }

    pub fn total_boundary_legs(&self) -> usize {
        (0..self.len()).map(|v| self.boundary_legs(v)).sum()
    }

    /// Boundary legs in canonical order: by vertex id, then slot.
    pub fn legs(&self) -> Vec<usize> {
        (0..self.len())
            .flat_map(|v| std::iter::repeat(v).take(self.boundary_legs(v)))
            .collect()
    }

    /// Per-layer degree when each layer is uniform.
    pub fn layer_degrees(&self) -> Option<Vec<u32>> {
        let mut out: Vec<Option<u32>> = vec![None; self.layers()];
        for v in 0..self.len() {
            let slot = &mut out[self.depth[v]];
            match slot {
                None => *slot = Some(self.degree[v]),
                Some(d) if *d != self.degree[v] => return None,
                _ => {}
            }
        }
        // Uniform layers also need every non-final vertex to branch fully.
        let last = self.layers() - 1;
        for v in 0..self.len() {
            let full = self.degree[v] as usize - 1;
            let branching = self.children[v].len();
            if (self.depth[v] < last && branching != full) || (self.depth[v] == last && branching != 0) {
                return None;
            }
        }
        out.into_iter().collect()
    }

    /// Vertices ordered so that every child precedes its parent.
    pub fn postorder(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(self.depth[v]));
        order
    }
}
