//! The scalar transfer function `F_d`, its fixed points, compositions along
//! degree sequences, and growth classifiers for irregular trees.
//!
//! For a rotation-symmetric product boundary `B(t·n̂)` the normalized site map
//! returns `1 + F_d(t) n̂·σ` with
//! `F_d(t) = −(1/(d+1)) (d coth(d atanh t) − 1/t) = −f′_{d+1}(t) / (d f_d(t))`.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::site::{f_poly, sigma_poly, SiteDegree};
use crate::tree::FiniteTree;

/// Below this magnitude the coth form is replaced by the rational form.
pub const COTH_CUTOFF: f64 = 1e-4;
/// Bisection width on `t`.
pub const BISECTION_TOL: f64 = 1e-13;
pub const BISECTION_MAX_ITER: usize = 200;
/// Left end of the fixed-point search interval.
pub const SEARCH_EPS: f64 = 1e-6;
/// Default half-width of the band around `ln μ = 0` treated as inconclusive.
pub const GROWTH_BAND: f64 = 1e-3;

/// Evaluator for `F_d` holding both polynomial parts in floating point.
#[derive(Clone, Debug)]
pub struct TransferFunction {
    d: SiteDegree,
    num: Vec<f64>,
    den: Vec<f64>,
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

impl TransferFunction {
    pub fn new(d: SiteDegree) -> Self {
        let num = sigma_poly(d).coeffs().iter().map(to_f64).collect();
        let den = f_poly(d).coeffs().iter().map(to_f64).collect();
        Self { d, num, den }
    }

    pub fn of_degree(d: u32) -> Result<Self> {
        Ok(Self::new(SiteDegree::new(d)?))
    }

    pub fn degree(&self) -> SiteDegree {
        self.d
    }

    fn check(t: f64) -> Result<()> {
        if !(t.abs() <= 1.0) {
            return Err(Error::Contract(format!("F_d is defined on [-1, 1], got t = {t}")));
        }
        Ok(())
    }

    /// Rational form; regular on the whole interval.
    pub fn eval_rational(&self, t: f64) -> f64 {
        horner(&self.num, t) / horner(&self.den, t)
    }

    /// Coth form, switching to the rational form for `|t| < COTH_CUTOFF`.
    pub fn eval_coth(&self, t: f64) -> f64 {
        if t.abs() < COTH_CUTOFF {
            return self.eval_rational(t);
        }
        let d = f64::from(self.d.get());
        let x = d * t.atanh();
        let coth = if x.is_infinite() { x.signum() } else { 1.0 / x.tanh() };
        -(d * coth - 1.0 / t) / (d + 1.0)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Self::check(t)?;
        Ok(self.eval_rational(t))
    }

    /// Both forms at `t`: `(coth, rational)`.
    pub fn eval_both(&self, t: f64) -> Result<(f64, f64)> {
        Self::check(t)?;
        Ok((self.eval_coth(t), self.eval_rational(t)))
    }

    /// Bounds `−((d−1)/3) t ≤ F_d(t) ≤ −(3/((d−1)t) + 1)⁻¹` on `(0, 1]`.
    pub fn bounds(&self, t: f64) -> (f64, f64) {
        let s = f64::from(self.d.get() - 1);
        (-(s / 3.0) * t, -1.0 / (3.0 / (s * t) + 1.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub d: u32,
    pub t_star: Option<f64>,
    pub residual: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub iterations: usize,
}

/// Bisection on `g` over `[a, b]` with `g(a) < 0 ≤ g(b)`.
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, usize) {
    let mut it = 0;
    while b - a > BISECTION_TOL && it < BISECTION_MAX_ITER {
        let m = 0.5 * (a + b);
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        it += 1;
    }
    (0.5 * (a + b), it)
}

/// Smallest positive root of `g` on `[SEARCH_EPS, 1]` where `g` crosses from
/// negative to nonnegative, located by a grid scan then bisection.
pub fn smallest_crossing(g: impl Fn(f64) -> f64, grid: usize) -> Option<(f64, (f64, f64), usize)> {
    let pts: Vec<f64> = (0..=grid)
        .map(|i| SEARCH_EPS + (1.0 - SEARCH_EPS) * i as f64 / grid as f64)
        .collect();
    let mut prev = (pts[0], g(pts[0]));
    for &t in &pts[1..] {
        let v = g(t);
        if prev.1 < 0.0 && v >= 0.0 {
            let (root, it) = bisect(&g, prev.0, t);
            return Some((root, (prev.0, t), it));
        }
        prev = (t, v);
    }
    None
}

/// Smallest `t* ∈ (0, 1]` with `F_d(t*) = −t*`.
pub fn fixed_point(d: SiteDegree) -> FixedPointResult {
    let f = TransferFunction::new(d);
    let g = |t: f64| f.eval_rational(t) + t;
    match smallest_crossing(g, 4096) {
        Some((t, bracket, iterations)) => FixedPointResult {
            d: d.get(),
            t_star: Some(t),
            residual: Some(g(t).abs()),
            bracket: Some(bracket),
            iterations,
        },
        None => FixedPointResult {
            d: d.get(),
            t_star: None,
            residual: None,
            bracket: None,
            iterations: 0,
        },
    }
}

/// Layer degrees `d_1, d_2, …`: a finite prefix followed by an optional periodic tail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeSequence {
    prefix: Vec<u32>,
    tail: Vec<u32>,
}

impl DegreeSequence {
    pub fn new(prefix: Vec<u32>, tail: Vec<u32>) -> Result<Self> {
        if prefix.is_empty() && tail.is_empty() {
            return Err(Error::Contract("degree sequence is empty".into()));
        }
        if let Some(&d) = prefix.iter().chain(tail.iter()).find(|&&d| d < 2) {
            return Err(Error::Contract(format!("degree {d} < 2 in sequence")));
        }
        Ok(Self { prefix, tail })
    }

    pub fn constant(d: u32) -> Result<Self> {
        Self::new(Vec::new(), vec![d])
    }

    pub fn finite(prefix: Vec<u32>) -> Result<Self> {
        Self::new(prefix, Vec::new())
    }

    /// `N` layers of degree 2 followed by degree 5 forever.
    pub fn counterexample(n: usize) -> Result<Self> {
        Self::new(vec![2; n], vec![5])
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn tail(&self) -> &[u32] {
        &self.tail
    }

    pub fn is_periodic(&self) -> bool {
        !self.tail.is_empty()
    }

    /// Degree of layer `i ≥ 1`.
    pub fn get(&self, i: usize) -> Result<u32> {
        if i == 0 {
            return Err(Error::Contract("layers are indexed from 1".into()));
        }
        if i <= self.prefix.len() {
            return Ok(self.prefix[i - 1]);
        }
        if self.tail.is_empty() {
            return Err(Error::Contract(format!(
                "layer {i} is past the end of a finite sequence of length {}",
                self.prefix.len()
            )));
        }
        Ok(self.tail[(i - 1 - self.prefix.len()) % self.tail.len()])
    }

    /// First `n` degrees.
    pub fn take(&self, n: usize) -> Result<Vec<u32>> {
        (1..=n).map(|i| self.get(i)).collect()
    }

    /// One integer per line; a final `repeat k` marks the last `k` entries as periodic.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        let mut repeat = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if repeat.is_some() {
                return Err(Error::Parse(format!(
                    "line {}: nothing may follow the repeat directive",
                    lineno + 1
                )));
            }
            if let Some(rest) = line.strip_prefix("repeat") {
                let k: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad repeat count '{}'", lineno + 1, rest.trim())))?;
                repeat = Some(k);
                continue;
            }
            let d: u32 = line
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: expected an integer, got '{line}'", lineno + 1)))?;
            values.push(d);
        }
        let k = repeat.unwrap_or(0);
        if k > values.len() || (repeat.is_some() && k == 0) {
            return Err(Error::Parse(format!(
                "repeat {k} does not fit a sequence of length {}",
                values.len()
            )));
        }
        let tail = values.split_off(values.len() - k);
        Self::new(values, tail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionStep {
    pub layer: usize,
    pub degree: u32,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionTrace {
    pub t0: f64,
    pub layers: usize,
    /// Values after applying layers `n, n−1, …, 1`.
    pub steps: Vec<CompositionStep>,
    pub value: f64,
    pub lower_bound: f64,
    pub respects_bound: bool,
}

/// Relative slack for floating-point comparisons against analytic bounds.
pub const BOUND_SLACK: f64 = 1e-12;

/// `a_n = ∏_{i ≤ n} 3/(d_i − 1)` for a list of degrees.
pub fn partial_products(degrees: &[u32]) -> Vec<f64> {
    let mut acc = 1.0;
    degrees
        .iter()
        .map(|&d| {
            acc *= 3.0 / f64::from(d - 1);
            acc
        })
        .collect()
}

/// `F_{d_1} ∘ … ∘ F_{d_n}(t₀)`; layer `n` is applied first.
pub fn compose_sequence(seq: &DegreeSequence, t0: f64, n: usize) -> Result<CompositionTrace> {
    if !(0.0..=1.0).contains(&t0) {
        return Err(Error::Contract(format!("t0 must lie in [0, 1], got {t0}")));
    }
    let degrees = seq.take(n)?;
    let mut value = t0;
    let mut steps = Vec::with_capacity(n);
    let mut cache: std::collections::HashMap<u32, TransferFunction> = Default::default();
    for layer in (1..=n).rev() {
        let d = degrees[layer - 1];
        let f = match cache.entry(d) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(TransferFunction::of_degree(d)?),
        };
        value = f.eval(value)?;
        steps.push(CompositionStep {
            layer,
            degree: d,
            value,
        });
    }
    let a = partial_products(&degrees);
    let lower_bound = if t0 == 0.0 || n == 0 {
        if n == 0 { t0 } else { 0.0 }
    } else {
        let inner: f64 = a[..n - 1].iter().sum();
        1.0 / (a[n - 1] / t0 + 1.0 + inner)
    };
    let respects_bound = value.abs() >= lower_bound * (1.0 - BOUND_SLACK);
    Ok(CompositionTrace {
        t0,
        layers: n,
        steps,
        value,
        lower_bound,
        respects_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Ordered,
    Unique,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthStats {
    pub partial_products: Vec<f64>,
    pub ln_mu: f64,
    pub mu: f64,
    pub classification: Growth,
    /// Whether the classification follows exactly from a periodic tail.
    pub exact: bool,
}

/// `ln x` for a big integer, stable beyond the `f64` range.
fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return to_f64(&crate::rational::Rational::from_integer(x.clone().into())).ln();
    }
    let shift = bits - 900;
    let head = x >> shift;
    to_f64(&crate::rational::Rational::from_integer(head.into())).ln() + shift as f64 * LN_2
}

pub fn classify_growth(seq: &DegreeSequence) -> GrowthStats {
    classify_growth_with_band(seq, GROWTH_BAND)
}

/// Classifies `ln μ = lim (1/n) Σ ln((d_i − 1)/3)`.
///
/// A periodic tail fixes the sign exactly by comparing `∏ (d_i − 1)` with
/// `3^period`; a finite sequence uses its running mean and is inconclusive
/// inside `±band`.
pub fn classify_growth_with_band(seq: &DegreeSequence, band: f64) -> GrowthStats {
    let window: Vec<u32> = seq.prefix().iter().chain(seq.tail().iter()).copied().collect();
    let partial = partial_products(&window);
    if seq.is_periodic() {
        let mut prod = BigUint::one();
        for &d in seq.tail() {
            prod *= BigUint::from(d - 1);
        }
        let three = BigUint::from(3u32).pow(seq.tail().len() as u32);
        let ln_mu = (big_ln(&prod) - big_ln(&three)) / seq.tail().len() as f64;
        let classification = if prod > three { Growth::Ordered } else { Growth::Unique };
        return GrowthStats {
            partial_products: partial,
            ln_mu,
            mu: ln_mu.exp(),
            classification,
            exact: true,
        };
    }
    let ln_mu = window.iter().map(|&d| (f64::from(d - 1) / 3.0).ln()).sum::<f64>() / window.len() as f64;
    let classification = if ln_mu.abs() < band {
        Growth::Inconclusive
    } else if ln_mu > 0.0 {
        Growth::Ordered
    } else {
        Growth::Unique
    };
    GrowthStats {
        partial_products: partial,
        ln_mu,
        mu: ln_mu.exp(),
        classification,
        exact: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafpathBound {
    pub satisfied: bool,
    pub lower_bound: Option<f64>,
    /// Smallest `∏ (d−1)/3 / (C μ^n)` over all path prefixes.
    pub worst_ratio: f64,
    /// Vertex at which the worst ratio occurs.
    pub worst_vertex: usize,
}

/// Checks `∏_{k ≤ n} (d_{i_k} − 1)/3 ≥ C μ^n` along every root-to-leaf path,
/// with the root as `k = 1`. When it holds, every composition is bounded
/// below by `(C μ⁻¹ / (1 − μ⁻¹) + 1)⁻¹`.
pub fn leafpath_bound(tree: &FiniteTree, c: f64, mu: f64) -> Result<LeafpathBound> {
    if !(c > 0.0) {
        return Err(Error::Contract(format!("C must be positive, got {c}")));
    }
    if !(mu > 1.0) {
        return Err(Error::Contract(format!("mu must exceed 1, got {mu}")));
    }
    let mut prod = vec![0.0f64; tree.len()];
    let mut worst = (f64::INFINITY, 0usize);
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let here = f64::from(tree.degree(v) - 1) / 3.0;
        prod[v] = match tree.parent(v) {
            Some(p) => prod[p] * here,
            None => here,
        };
        let n = tree.depth(v) as i32 + 1;
        let ratio = prod[v] / (c * mu.powi(n));
        if ratio < worst.0 {
            worst = (ratio, v);
        }
        stack.extend_from_slice(tree.children(v));
    }
    let satisfied = worst.0 >= 1.0 - BOUND_SLACK;
    let inv = 1.0 / mu;
    Ok(LeafpathBound {
        satisfied,
        lower_bound: satisfied.then(|| 1.0 / (c * inv / (1.0 - inv) + 1.0)),
        worst_ratio: worst.0,
        worst_vertex: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(d: u32) -> TransferFunction {
        TransferFunction::of_degree(d).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(tf(5).eval(0.0).unwrap(), 0.0);
        assert!((tf(3).eval(0.5).unwrap() + 4.0 / 13.0).abs() < 1e-15);
        assert!(tf(3).eval(1.5).is_err());
        let h = 1e-6;
        let slope = (tf(5).eval(h).unwrap() - tf(5).eval(-h).unwrap()) / (2.0 * h);
        assert!((slope + 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn forms_agree() {
        for d in [2, 3, 5, 8, 20, 64] {
            let f = tf(d);
            for i in 1..=1000 {
                let t = i as f64 / 1000.0;
                let (a, b) = f.eval_both(t).unwrap();
                assert!((a - b).abs() < 1e-12, "d={d} t={t}: {a} vs {b}");
                let (a, b) = f.eval_both(-t).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn endpoint_value() {
        for d in 2..10 {
            let v = tf(d).eval(1.0).unwrap();
            assert!((v + f64::from(d - 1) / f64::from(d + 1)).abs() < 1e-14);
            assert!((tf(d).eval_coth(1.0) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(fixed_point(SiteDegree::new(4).unwrap()).t_star, None);
        let r = fixed_point(SiteDegree::new(5).unwrap());
        let t = r.t_star.unwrap();
        assert!(t > 0.25 && t < 1.0);
        assert!(r.residual.unwrap() < 1e-12);
        let t20 = fixed_point(SiteDegree::new(20).unwrap()).t_star.unwrap();
        assert!(t20 >= 16.0 / 19.0);
    }

    #[test]
    fn sequence_parsing() {
        let s = DegreeSequence::parse("2\n2\n# tail\n5\nrepeat 1\n").unwrap();
        assert_eq!(s.prefix(), &[2, 2]);
        assert_eq!(s.tail(), &[5]);
        assert_eq!(s.take(5).unwrap(), vec![2, 2, 5, 5, 5]);
        assert!(DegreeSequence::parse("2\nrepeat 3").is_err());
        assert!(DegreeSequence::parse("1\n").is_err());
        assert!(DegreeSequence::parse("x\n").is_err());
        assert!(DegreeSequence::parse("3\nrepeat 1\n4").is_err());
        let f = DegreeSequence::parse("3\n4").unwrap();
        assert!(!f.is_periodic());
        assert!(f.get(3).is_err());
    }

    #[test]
    fn composition_examples() {
        let all2 = DegreeSequence::constant(2).unwrap();
        let tr = compose_sequence(&all2, 1.0, 30).unwrap();
        assert!(tr.value.abs() < 1e-13);
        assert!(tr.respects_bound);
        assert!((tr.value.abs() - 3f64.powi(-30)).abs() < 1e-25);

        let t5 = fixed_point(SiteDegree::new(5).unwrap()).t_star.unwrap();
        let ce = DegreeSequence::counterexample(1).unwrap();
        for n in [10, 11] {
            let tr = compose_sequence(&ce, t5, n).unwrap();
            assert!((tr.value.abs() - t5 / 3.0).abs() < 1e-10);
            assert!(tr.respects_bound);
        }
        let a = compose_sequence(&ce, t5, 10).unwrap().value;
        let b = compose_sequence(&ce, t5, 11).unwrap().value;
        assert!(a * b < 0.0);

        let all5 = DegreeSequence::constant(5).unwrap();
        for n in 1..40 {
            let tr = compose_sequence(&all5, 1.0, n).unwrap();
            assert!(tr.value.abs() >= 0.25);
            assert!(tr.respects_bound);
        }
    }

    #[test]
    fn growth_examples() {
        let g = classify_growth(&DegreeSequence::constant(5).unwrap());
        assert_eq!(g.classification, Growth::Ordered);
        assert!((g.mu - 4.0 / 3.0).abs() < 1e-14);
        let g = classify_growth(&DegreeSequence::constant(4).unwrap());
        assert_eq!(g.classification, Growth::Unique);
        assert_eq!(g.ln_mu, 0.0);
        let g = classify_growth(&DegreeSequence::new(vec![], vec![2, 11]).unwrap());
        assert_eq!(g.classification, Growth::Ordered);
        assert!((g.mu - 10f64.sqrt() / 3.0).abs() < 1e-14);
        let g = classify_growth(&DegreeSequence::finite(vec![4, 4, 4]).unwrap());
        assert_eq!(g.classification, Growth::Inconclusive);
        let g = classify_growth(&DegreeSequence::finite(vec![2, 3]).unwrap());
        assert_eq!(g.classification, Growth::Unique);
    }

    #[test]
    fn huge_period_is_classified_exactly() {
        // (4·4·…·4·1) vs 3^n with n large, beyond f64 range.
        let mut tail = vec![5u32; 3000];
        tail.push(2);
        let g = classify_growth(&DegreeSequence::new(vec![], tail).unwrap());
        assert_eq!(g.classification, Growth::Ordered);
        assert!(g.ln_mu.is_finite());
    }

    #[test]
    fn leafpath_examples() {
        let t = FiniteTree::cayley(5, 6).unwrap();
        let r = leafpath_bound(&t, 1.0, 4.0 / 3.0).unwrap();
        assert!(r.satisfied);
        assert!((r.lower_bound.unwrap() - 0.25).abs() < 1e-12);

        // A degree-2 spine below the root.
        let t = FiniteTree::from_parents(
            vec![None, Some(0), Some(1), Some(2), Some(3)],
            vec![2, 2, 2, 2, 2],
        )
        .unwrap();
        let r = leafpath_bound(&t, 0.01, 1.01).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.lower_bound, None);

        let mixed = FiniteTree::from_parents(
            vec![None, Some(0), Some(0), Some(1), Some(2), Some(2)],
            vec![5, 7, 6, 5, 9, 5],
        )
        .unwrap();
        assert!(leafpath_bound(&mixed, 1.0, 4.0 / 3.0).unwrap().satisfied);
        assert!(leafpath_bound(&mixed, 1.0, 0.9).is_err());
    }
}
