//! Newton polyhedron of a support set: exact facet enumeration over the
//! candidate normals generated by exterior products of support differences,
//! plus face/facet/vertex-cone queries.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::arith::{exterior_product, primitive, IntMat, Rat, RatMat};
use crate::poly::Exp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyhedronError {
    EmptySupport,
    NegativeExponent,
    /// Candidate enumeration is combinatorial in n; inputs beyond the
    /// documented desk scale are rejected rather than ground through.
    SupportTooLarge { n: usize, points: usize },
    ZeroVector,
    NegativeComponent,
    NotAVertex,
}

impl fmt::Display for PolyhedronError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyhedronError::EmptySupport => write!(f, "support set is empty"),
            PolyhedronError::NegativeExponent => write!(f, "support points must lie in N^n"),
            PolyhedronError::SupportTooLarge { n, points } => {
                write!(f, "support too large for facet enumeration: n={n}, |supp|={points}")
            }
            PolyhedronError::ZeroVector => write!(f, "face query needs a nonzero vector"),
            PolyhedronError::NegativeComponent => {
                write!(f, "face query vectors must be componentwise nonnegative")
            }
            PolyhedronError::NotAVertex => write!(f, "point is not a vertex of the polyhedron"),
        }
    }
}

/// A finite support set in N^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    n: usize,
    points: Vec<Exp>,
}

impl Support {
    pub fn new(n: usize, points: Vec<Exp>) -> Result<Self, PolyhedronError> {
        if points.is_empty() {
            return Err(PolyhedronError::EmptySupport);
        }
        let mut set = BTreeSet::new();
        for p in &points {
            assert_eq!(p.len(), n, "support point arity mismatch");
            if p.iter().any(|&x| x < 0) {
                return Err(PolyhedronError::NegativeExponent);
            }
            set.insert(p.clone());
        }
        Ok(Support { n, points: set.into_iter().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[Exp] {
        &self.points
    }
}

/// A face of the polyhedron: the support points attaining the minimum of a
/// query vector, together with the generator set of its facial cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub exponents: Vec<Exp>,
    pub generators: Vec<Vec<i64>>,
}

/// Facet description of `conv(supp) + R_+^n`: primitive inner normals with
/// their offsets, the vertex set, and the support it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolyhedron {
    n: usize,
    normals: Vec<Vec<i64>>,
    offsets: Vec<i64>,
    vertices: Vec<Exp>,
    support: Vec<Exp>,
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl NewtonPolyhedron {
    /// Facet enumeration by exterior products over support differences and
    /// coordinate rays. Deterministic: normals are sorted lexicographically.
    pub fn build(support: &Support) -> Result<Self, PolyhedronError> {
        let n = support.n();
        let points = support.points();
        // candidate enumeration is C(|pool|, n-1) over pairwise
        // differences, so the caps shrink with the dimension
        let cap = match n {
            0 => return Err(PolyhedronError::EmptySupport),
            1 | 2 => 220,
            3 => 60,
            4 => 14,
            _ => 0,
        };
        if points.len() > cap {
            return Err(PolyhedronError::SupportTooLarge { n, points: points.len() });
        }

        if n == 1 {
            let v = points.iter().map(|p| p[0]).min().unwrap();
            return Ok(NewtonPolyhedron {
                n,
                normals: vec![vec![1]],
                offsets: vec![v],
                vertices: vec![vec![v]],
                support: points.to_vec(),
            });
        }

        // direction pool: primitive sign-canonical pairwise differences plus
        // the standard basis
        let mut pool: BTreeSet<Vec<i64>> = BTreeSet::new();
        for (i, p) in points.iter().enumerate() {
            for q in points.iter().skip(i + 1) {
                let mut d: Vec<i64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
                if d.iter().all(|&x| x == 0) {
                    continue;
                }
                if d.iter().find(|&&x| x != 0).map(|&x| x < 0).unwrap_or(false) {
                    d.iter_mut().for_each(|x| *x = -*x);
                }
                pool.insert(primitive(&d));
            }
        }
        for j in 0..n {
            let mut e = vec![0i64; n];
            e[j] = 1;
            pool.insert(e);
        }
        let pool: Vec<Vec<i64>> = pool.into_iter().collect();

        // candidate normals: nonnegative primitive exterior products of all
        // (n-1)-subsets of the pool
        let mut candidates: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut subset = vec![0usize; n - 1];
        enumerate_subsets(pool.len(), n - 1, &mut subset, 0, 0, &mut |idx| {
            let vs: Vec<Vec<i64>> = idx.iter().map(|&i| pool[i].clone()).collect();
            if let Ok(v) = exterior_product(&vs) {
                if v.iter().all(|&x| x == 0) {
                    return;
                }
                let v = if v.iter().all(|&x| x <= 0) {
                    v.iter().map(|&x| -x).collect::<Vec<i64>>()
                } else {
                    v
                };
                if v.iter().all(|&x| x >= 0) {
                    candidates.insert(primitive(&v));
                }
            }
        });
        for j in 0..n {
            let mut e = vec![0i64; n];
            e[j] = 1;
            candidates.insert(e);
        }

        // keep the candidates whose face has dimension n-1
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for v in candidates {
            let c = points.iter().map(|p| dot(&v, p)).min().unwrap();
            let argmin: Vec<&Exp> = points.iter().filter(|p| dot(&v, p) == c).collect();
            let base = argmin[0];
            let mut dirs: Vec<Vec<i64>> = argmin[1..]
                .iter()
                .map(|p| p.iter().zip(base.iter()).map(|(a, b)| a - b).collect())
                .collect();
            for (j, &vj) in v.iter().enumerate() {
                if vj == 0 {
                    let mut e = vec![0i64; n];
                    e[j] = 1;
                    dirs.push(e);
                }
            }
            let rank = if dirs.is_empty() {
                0
            } else {
                let rows = dirs.len();
                let flat: Vec<i64> = dirs.iter().flatten().copied().collect();
                IntMat::from_i64(rows, n, &flat).rank()
            };
            if rank == n - 1 {
                normals.push(v);
                offsets.push(c);
            }
        }

        // vertices: support points where the incident normals have full rank
        let mut vertices = Vec::new();
        for p in points {
            let incident: Vec<&Vec<i64>> = normals
                .iter()
                .zip(&offsets)
                .filter(|(v, &c)| dot(v, p) == c)
                .map(|(v, _)| v)
                .collect();
            if incident.len() < n {
                continue;
            }
            let flat: Vec<i64> = incident.iter().flat_map(|v| v.iter().copied()).collect();
            if IntMat::from_i64(incident.len(), n, &flat).rank() == n {
                vertices.push(p.clone());
            }
        }

        Ok(NewtonPolyhedron { n, normals, offsets, vertices, support: points.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn normals(&self) -> &[Vec<i64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn vertices(&self) -> &[Exp] {
        &self.vertices
    }

    pub fn support(&self) -> &[Exp] {
        &self.support
    }

    pub fn offset_of(&self, normal: &[i64]) -> Option<i64> {
        self.normals.iter().position(|v| v == normal).map(|i| self.offsets[i])
    }

    /// Face associated with a nonnegative rational vector: the support points
    /// attaining the minimum together with the generator set of the facial
    /// cone.
    pub fn face_of(&self, w: &[Rat]) -> Result<Face, PolyhedronError> {
        assert_eq!(w.len(), self.n);
        if w.iter().all(|x| x.is_zero()) {
            return Err(PolyhedronError::ZeroVector);
        }
        if w.iter().any(|x| x < &Rat::zero()) {
            return Err(PolyhedronError::NegativeComponent);
        }
        let dot_q = |p: &Exp| -> Rat {
            p.iter()
                .zip(w)
                .map(|(&a, b)| Rat::from_integer(a.into()) * b)
                .fold(Rat::zero(), |acc, t| acc + t)
        };
        let min = self.support.iter().map(&dot_q).min().unwrap();
        let exponents: Vec<Exp> =
            self.support.iter().filter(|p| dot_q(p) == min).cloned().collect();
        let w_zero: Vec<usize> =
            (0..self.n).filter(|&j| w[j].is_zero()).collect();
        let mut generators = Vec::new();
        for (v, &c) in self.normals.iter().zip(&self.offsets) {
            let contains_points = exponents.iter().all(|p| dot(v, p) == c);
            let contains_rays = w_zero.iter().all(|&j| v[j] == 0);
            if contains_points && contains_rays {
                generators.push(v.clone());
            }
        }
        Ok(Face { exponents, generators })
    }

    pub fn is_vertex(&self, a: &[i64]) -> bool {
        self.vertices.iter().any(|v| v == a)
    }

    /// Generator set of the vertex cone: the normals whose facets pass
    /// through the vertex.
    pub fn vertex_generators(&self, a: &[i64]) -> Result<Vec<Vec<i64>>, PolyhedronError> {
        if !self.is_vertex(a) {
            return Err(PolyhedronError::NotAVertex);
        }
        Ok(self
            .normals
            .iter()
            .zip(&self.offsets)
            .filter(|(v, &c)| dot(v, a) == c)
            .map(|(v, _)| v.clone())
            .collect())
    }
}

fn enumerate_subsets(
    pool: usize,
    k: usize,
    buf: &mut Vec<usize>,
    depth: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        f(buf);
        return;
    }
    for i in start..pool {
        buf[depth] = i;
        enumerate_subsets(pool, k, buf, depth + 1, i + 1, f);
    }
}

/// Exact membership of `w` in the cone generated by `gens` (lattice vectors),
/// via Caratheodory: some full-rank square subsystem solves with nonnegative
/// coefficients.
pub fn in_cone(gens: &[Vec<i64>], w: &[Rat]) -> bool {
    if w.iter().all(|x| x.is_zero()) {
        return true;
    }
    let n = w.len();
    let r = {
        let flat: Vec<i64> = gens.iter().flat_map(|v| v.iter().copied()).collect();
        if gens.is_empty() {
            return false;
        }
        IntMat::from_i64(gens.len(), n, &flat).rank()
    };
    let mut found = false;
    let mut subset = vec![0usize; r];
    enumerate_subsets(gens.len(), r, &mut subset, 0, 0, &mut |idx| {
        if found {
            return;
        }
        if let Some(lambda) = solve_cone_coeffs(gens, idx, w) {
            if lambda.iter().all(|l| l >= &Rat::zero()) {
                found = true;
            }
        }
    });
    found
}

/// Solves `sum_i lambda_i gens[idx[i]] = w` exactly when the subsystem is
/// uniquely solvable; `None` if singular or inconsistent.
fn solve_cone_coeffs(gens: &[Vec<i64>], idx: &[usize], w: &[Rat]) -> Option<Vec<Rat>> {
    let n = w.len();
    let k = idx.len();
    // columns are the chosen generators; least-squares-free exact solve by
    // Gaussian elimination on the (n x k) system
    let mut a = RatMat::zero(n, k + 1);
    for (col, &gi) in idx.iter().enumerate() {
        for row in 0..n {
            a.set(row, col, Rat::from_integer(gens[gi][row].into()));
        }
    }
    for row in 0..n {
        a.set(row, k, w[row].clone());
    }
    // forward elimination
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0usize;
    let mut m = a;
    for col in 0..k {
        let p = (row..n).find(|&r| !m.at(r, col).is_zero());
        let Some(p) = p else { continue };
        if p != row {
            for c in 0..=k {
                let tmp = m.at(row, c).clone();
                m.set(row, c, m.at(p, c).clone());
                m.set(p, c, tmp);
            }
        }
        let pv = m.at(row, col).clone();
        for r in 0..n {
            if r == row {
                continue;
            }
            let f = m.at(r, col) / &pv;
            if f.is_zero() {
                continue;
            }
            for c in 0..=k {
                let v = m.at(r, c) - &f * m.at(row, c);
                m.set(r, c, v);
            }
        }
        pivots.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    // inconsistent rows
    for r in row..n {
        if !m.at(r, k).is_zero() {
            return None;
        }
    }
    if pivots.len() < k {
        return None; // underdetermined subset; another subset will be square
    }
    let mut lambda = vec![Rat::zero(); k];
    for (r, &col) in pivots.iter().enumerate() {
        lambda[col] = m.at(r, k) / m.at(r, col);
    }
    Some(lambda)
}
