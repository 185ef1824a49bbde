//! Unimodular simplicial refinement of the vertex cones of a Newton
//! polyhedron, the section complex with its Euler characteristics, adjoint
//! and conjugate variables, and the adjoint-sector covering certificate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{exterior_product, primitive, IntMat, Rat};
use crate::poly::Exp;
use crate::polyhedron::NewtonPolyhedron;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FanError {
    RankDeficient,
    /// The decreasing-determinant search ran past its exhaustion bound;
    /// indicates a bug rather than an input condition.
    RefinementStuck,
    SampleOutsideDomain,
}

impl fmt::Display for FanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FanError::RankDeficient => write!(f, "cone does not span the ambient space"),
            FanError::RefinementStuck => write!(f, "unimodular refinement failed to progress"),
            FanError::SampleOutsideDomain => {
                write!(f, "sample must have nonzero coordinates of absolute value at most 1")
            }
        }
    }
}

/// Convex polyhedral cone given by a minimal generator set of primitive
/// lattice vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    pub generators: Vec<Vec<i64>>,
}

impl Cone {
    pub fn new(generators: Vec<Vec<i64>>) -> Self {
        Cone { generators: generators.iter().map(|g| primitive(g)).collect() }
    }
}

/// One unimodular chart cone: `det(matrix) = +1` with the generators as
/// columns, attached to the polyhedron vertex it refines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedVertexCone {
    pub vertex: Exp,
    pub generators: Vec<Vec<i64>>,
    pub matrix: IntMat,
}

/// Abstract section complex of a refined fan: rays are shared vertices, each
/// refined cone contributes an (n-1)-simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionComplex {
    pub n: usize,
    pub rays: Vec<Vec<i64>>,
    /// sorted ray-index lists, one per refined cone
    pub simplices: Vec<Vec<usize>>,
}

/// Face counts and Euler characteristics of the section complex and its
/// boundary subcomplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerReport {
    pub b_total: Vec<u64>,
    pub b_boundary: Vec<u64>,
    pub b_interior: Vec<u64>,
    pub chi_total: i64,
    pub chi_boundary: i64,
}

/// The two adjoint variables across an interior facet are exact negatives of
/// each other, hence reciprocal monomials on the torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugatePair {
    pub facet_rays: Vec<Vec<i64>>,
    pub cones: (usize, usize),
    pub adjoint_vectors: (Vec<i64>, Vec<i64>),
    pub variable_indices: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedFan {
    pub n: usize,
    pub cones: Vec<RefinedVertexCone>,
    pub section: SectionComplex,
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn det_abs_i64(m: &IntMat) -> i64 {
    m.det().expect("square").abs().to_i64().expect("desk-scale determinant")
}

/// Barycentric coordinates of `w` in the simplicial cone with generator
/// columns `m`: returns `adj(m) * w` and `det(m)` so that
/// `lambda_j = num[j] / det` exactly.
fn cone_coords(m: &IntMat, w: &[i64]) -> (Vec<BigInt>, BigInt) {
    let adj = m.adjugate().expect("square");
    let det = m.det().expect("square");
    let n = w.len();
    let mut num = Vec::with_capacity(n);
    for r in 0..n {
        let mut acc = BigInt::zero();
        for (c, &wc) in w.iter().enumerate() {
            acc += adj.at(r, c) * BigInt::from(wc);
        }
        num.push(acc);
    }
    (num, det)
}

/// Does the (full-dimensional simplicial) cone contain `w`?
fn simplicial_contains(m: &IntMat, w: &[i64]) -> bool {
    let (num, det) = cone_coords(m, w);
    let neg = det.is_negative();
    num.iter().all(|x| if neg { !x.is_positive() } else { !x.is_negative() })
}

/// Lex-smallest nonzero lattice point of minimal coordinate sum in the
/// half-open parallelepiped `{ sum lambda_j v_j : 0 <= lambda_j < 1 }`.
fn min_parallelepiped_point(m: &IntMat) -> Option<Vec<i64>> {
    let n = m.rows();
    let (adj, det) = (m.adjugate().ok()?, m.det().ok()?);
    if det.is_zero() {
        return None;
    }
    let neg = det.is_negative();
    let in_box = |z: &[i64]| -> bool {
        for r in 0..n {
            let mut acc = BigInt::zero();
            for (c, &zc) in z.iter().enumerate() {
                acc += adj.at(r, c) * BigInt::from(zc);
            }
            // need 0 <= acc/det < 1
            let acc = if neg { -acc } else { acc.clone() };
            let d = if neg { -det.clone() } else { det.clone() };
            if acc.is_negative() || acc >= d {
                return false;
            }
        }
        true
    };
    // a nonzero box point has coordinate sum below the sum over generators
    let bound: i64 = (0..n).map(|r| (0..n).map(|c| m.at(r, c)).sum::<BigInt>())
        .map(|s| s.to_i64().unwrap_or(i64::MAX / 4))
        .sum();
    let mut z = vec![0i64; n];
    for s in 1..=bound.max(1) {
        if search_compositions(&mut z, 0, s, &in_box) {
            return Some(z);
        }
    }
    None
}

/// Depth-first lexicographic search over compositions of `s`; returns true
/// as soon as the predicate accepts, leaving the witness in `z`.
fn search_compositions(z: &mut Vec<i64>, pos: usize, rest: i64, pred: &impl Fn(&[i64]) -> bool) -> bool {
    if pos + 1 == z.len() {
        z[pos] = rest;
        return pred(z);
    }
    for v in 0..=rest {
        z[pos] = v;
        if search_compositions(z, pos + 1, rest - v, pred) {
            return true;
        }
    }
    false
}

/// Pulling triangulation of a full-dimensional cone with a minimal generator
/// set, recursing on faces by the global lexicographic ray order so that the
/// induced subdivision of a shared face is identical on both sides.
fn triangulate_cone(gens: &[Vec<i64>], orth: &[Vec<i64>], n: usize) -> Vec<Vec<Vec<i64>>> {
    let k = n - orth.len();
    let mut gens: Vec<Vec<i64>> = gens.to_vec();
    gens.sort();
    gens.dedup();
    if gens.len() <= k {
        return vec![gens];
    }
    let v0 = gens[0].clone();
    // facets of the k-dimensional cone: kernels of exterior products of
    // (k-1)-subsets of generators together with the fixed orthogonals
    let mut facets: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    let m = gens.len();
    let mut idx = vec![0usize; k - 1];
    enumerate_subsets(m, k - 1, &mut idx, 0, 0, &mut |chosen| {
        let mut vs: Vec<Vec<i64>> = chosen.iter().map(|&i| gens[i].clone()).collect();
        vs.extend(orth.iter().cloned());
        let Ok(h) = exterior_product(&vs) else { return };
        if h.iter().all(|&x| x == 0) {
            return;
        }
        let sgn: i64 = match gens.iter().map(|g| dot(&h, g)).find(|&d| d != 0) {
            Some(d) => {
                if d > 0 {
                    1
                } else {
                    -1
                }
            }
            None => return,
        };
        let h: Vec<i64> = h.iter().map(|&x| x * sgn).collect();
        if gens.iter().any(|g| dot(&h, g) < 0) {
            return;
        }
        let on: Vec<Vec<i64>> = gens.iter().filter(|g| dot(&h, g) == 0).cloned().collect();
        if !on.is_empty() {
            facets.insert(on);
        }
    });
    let mut out = Vec::new();
    for facet in facets {
        if facet.contains(&v0) {
            continue;
        }
        // defining normal of this facet inside the current span
        let mut vs = independent_subset(&facet, k - 1, n);
        vs.extend(orth.iter().cloned());
        let h = exterior_product(&vs).expect("facet normal");
        let mut orth2 = orth.to_vec();
        orth2.push(primitive(&h));
        for mut simplex in triangulate_cone(&facet, &orth2, n) {
            simplex.push(v0.clone());
            simplex.sort();
            out.push(simplex);
        }
    }
    out
}

/// Picks `k` linearly independent vectors from the list (exists by caller
/// invariants).
fn independent_subset(vs: &[Vec<i64>], k: usize, n: usize) -> Vec<Vec<i64>> {
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    for v in vs {
        if chosen.len() == k {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(v.clone());
        let flat: Vec<i64> = trial.iter().flatten().copied().collect();
        if IntMat::from_i64(trial.len(), n, &flat).rank() == trial.len() {
            chosen = trial;
        }
    }
    chosen
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

/// Column matrix with deterministic orientation: generators sorted, and the
/// last two columns swapped when the determinant comes out negative.
fn oriented_matrix(gens: &[Vec<i64>]) -> (Vec<Vec<i64>>, IntMat) {
    let mut gens = gens.to_vec();
    gens.sort();
    let m = IntMat::from_columns(&gens);
    let det = m.det().expect("square");
    if det.is_negative() {
        let k = gens.len();
        gens.swap(k - 2, k - 1);
    }
    let m = IntMat::from_columns(&gens);
    debug_assert_eq!(m.det().unwrap(), BigInt::from(1));
    (gens.to_vec(), m)
}

/// Unimodular simplicial refinement of a single vertex cone; the fragments
/// tile the cone, pairwise interiors disjoint, every determinant +1.
pub fn refine_vertex_cone(cone: &Cone, n: usize) -> Result<Vec<RefinedVertexCone>, FanError> {
    let flat: Vec<i64> = cone.generators.iter().flatten().copied().collect();
    if cone.generators.len() < n
        || IntMat::from_i64(cone.generators.len(), n, &flat).rank() != n
    {
        return Err(FanError::RankDeficient);
    }
    let simplices = triangulate_cone(&cone.generators, &[], n);
    let tagged: Vec<(usize, Vec<Vec<i64>>)> = simplices.into_iter().map(|s| (0, s)).collect();
    let refined = unimodularize(tagged)?;
    Ok(refined
        .into_iter()
        .map(|(_, gens)| {
            let (gens, matrix) = oriented_matrix(&gens);
            RefinedVertexCone { vertex: Vec::new(), generators: gens, matrix }
        })
        .collect())
}

/// Star subdivisions at minimal parallelepiped points of worst cones until
/// every cone is unimodular. Works on the whole fan so shared faces stay
/// common faces.
fn unimodularize(
    mut cones: Vec<(usize, Vec<Vec<i64>>)>,
) -> Result<Vec<(usize, Vec<Vec<i64>>)>, FanError> {
    // generous exhaustion bound: the determinant multiset strictly decreases
    let mut budget = 100_000usize;
    loop {
        budget = budget.checked_sub(1).ok_or(FanError::RefinementStuck)?;
        let mut worst: Option<(usize, i64)> = None;
        for (i, (_, gens)) in cones.iter().enumerate() {
            let d = det_abs_i64(&IntMat::from_columns(gens));
            if d > 1 {
                let better = match worst {
                    None => true,
                    Some((wi, wd)) => {
                        d > wd || (d == wd && (&cones[i].0, gens) < (&cones[wi].0, &cones[wi].1))
                    }
                };
                if better {
                    worst = Some((i, d));
                }
            }
        }
        let Some((wi, _)) = worst else { return Ok(cones) };
        let m = IntMat::from_columns(&cones[wi].1);
        let w = min_parallelepiped_point(&m).ok_or(FanError::RefinementStuck)?;
        let w = primitive(&w);
        let mut next: Vec<(usize, Vec<Vec<i64>>)> = Vec::with_capacity(cones.len() + 2);
        for (tag, gens) in cones.into_iter() {
            let m = IntMat::from_columns(&gens);
            if !simplicial_contains(&m, &w) {
                next.push((tag, gens));
                continue;
            }
            let (num, det) = cone_coords(&m, &w);
            let neg = det.is_negative();
            let mut touched = false;
            for (j, lam) in num.iter().enumerate() {
                let positive = if neg { lam.is_negative() } else { lam.is_positive() };
                if !positive {
                    continue;
                }
                touched = true;
                let mut child = gens.clone();
                child[j] = w.clone();
                child.sort();
                next.push((tag, child));
            }
            if !touched {
                // w sits on a proper face spanned by none of the positive
                // coefficients: impossible for a nonzero point
                return Err(FanError::RefinementStuck);
            }
        }
        cones = next;
    }
}

/// Builds the refined fan of a Newton polyhedron: pulls the vertex cones
/// apart into a compatible triangulation, then refines to determinant one.
pub fn refine_fan(np: &NewtonPolyhedron) -> Result<RefinedFan, FanError> {
    let n = np.n();
    let mut vertices: Vec<Exp> = np.vertices().to_vec();
    vertices.sort();
    let mut tagged: Vec<(usize, Vec<Vec<i64>>)> = Vec::new();
    for (vi, v) in vertices.iter().enumerate() {
        let gens = np.vertex_generators(v).expect("vertex of its own polyhedron");
        for simplex in triangulate_cone(&gens, &[], n) {
            tagged.push((vi, simplex));
        }
    }
    let refined = unimodularize(tagged)?;
    let mut cones: Vec<RefinedVertexCone> = refined
        .into_iter()
        .map(|(vi, gens)| {
            let (gens, matrix) = oriented_matrix(&gens);
            RefinedVertexCone { vertex: vertices[vi].clone(), generators: gens, matrix }
        })
        .collect();
    cones.sort_by(|a, b| (&a.vertex, &a.generators).cmp(&(&b.vertex, &b.generators)));

    // section complex over deduplicated rays
    let mut ray_ids: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut rays: Vec<Vec<i64>> = Vec::new();
    let mut simplices = Vec::with_capacity(cones.len());
    for c in &cones {
        let mut s: Vec<usize> = c
            .generators
            .iter()
            .map(|g| {
                *ray_ids.entry(g.clone()).or_insert_with(|| {
                    rays.push(g.clone());
                    rays.len() - 1
                })
            })
            .collect();
        s.sort_unstable();
        simplices.push(s);
    }
    let section = SectionComplex { n, rays, simplices };
    Ok(RefinedFan { n, cones, section })
}

impl SectionComplex {
    /// All distinct faces, keyed by ray-index subsets.
    fn faces(&self) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for s in &self.simplices {
            let m = s.len();
            for mask in 1..(1u32 << m) {
                let face: Vec<usize> =
                    (0..m).filter(|&i| mask & (1 << i) != 0).map(|i| s[i]).collect();
                out.insert(face);
            }
        }
        out
    }

    fn face_in_boundary(&self, face: &[usize]) -> bool {
        (0..self.n).any(|j| face.iter().all(|&r| self.rays[r][j] == 0))
    }
}

/// Face counts by dimension and the two Euler characteristics.
pub fn euler_characteristics(sc: &SectionComplex) -> EulerReport {
    let dim = sc.n - 1;
    let mut b_total = vec![0u64; dim + 1];
    let mut b_boundary = vec![0u64; dim + 1];
    for face in sc.faces() {
        let d = face.len() - 1;
        b_total[d] += 1;
        if sc.face_in_boundary(&face) {
            b_boundary[d] += 1;
        }
    }
    let b_interior: Vec<u64> =
        b_total.iter().zip(&b_boundary).map(|(t, b)| t - b).collect();
    let chi = |b: &[u64]| -> i64 {
        b.iter().enumerate().map(|(j, &c)| if j % 2 == 0 { c as i64 } else { -(c as i64) }).sum()
    };
    EulerReport {
        chi_total: chi(&b_total),
        chi_boundary: chi(&b_boundary),
        b_total,
        b_boundary,
        b_interior,
    }
}

/// Adjoint vectors of a refined cone: the rows of the adjugate of its
/// exponential matrix, so that `<v_l*, v_m> = delta_lm`.
pub fn adjoint_vectors(rc: &RefinedVertexCone) -> Vec<Vec<i64>> {
    let adj = rc.matrix.adjugate().expect("square");
    let n = rc.matrix.rows();
    (0..n)
        .map(|r| adj.row(r).iter().map(|x| x.to_i64().expect("desk-scale adjoint")).collect())
        .collect()
}

/// One conjugate pair per interior facet of the refined fan.
pub fn conjugate_pairs(fan: &RefinedFan) -> Vec<ConjugatePair> {
    let mut by_facet: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for (ci, s) in fan.section.simplices.iter().enumerate() {
        for drop in 0..s.len() {
            let facet: Vec<usize> =
                s.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &r)| r).collect();
            by_facet.entry(facet).or_default().push((ci, drop));
        }
    }
    let mut out = Vec::new();
    for (facet, owners) in by_facet {
        if fan.section.face_in_boundary(&facet) {
            debug_assert_eq!(owners.len(), 1, "boundary facet must belong to one cone");
            continue;
        }
        debug_assert_eq!(owners.len(), 2, "interior facet must be shared by two cones");
        let (ca, _) = owners[0];
        let (cb, _) = owners[1];
        let facet_rays: Vec<Vec<i64>> =
            facet.iter().map(|&r| fan.section.rays[r].clone()).collect();
        let dual_index = |ci: usize| -> usize {
            fan.cones[ci]
                .generators
                .iter()
                .position(|g| !facet_rays.contains(g))
                .expect("exactly one generator off the facet")
        };
        let ja = dual_index(ca);
        let jb = dual_index(cb);
        let va = adjoint_vectors(&fan.cones[ca])[ja].clone();
        let vb = adjoint_vectors(&fan.cones[cb])[jb].clone();
        out.push(ConjugatePair {
            facet_rays,
            cones: (ca, cb),
            adjoint_vectors: (va, vb),
            variable_indices: (ja, jb),
        });
    }
    out
}

fn rat_abs(r: &Rat) -> Rat {
    if r < &Rat::zero() {
        -r.clone()
    } else {
        r.clone()
    }
}

fn rat_pow(base: &Rat, e: i64) -> Rat {
    let mut acc = Rat::from_integer(1.into());
    let b = if e >= 0 { base.clone() } else { base.recip() };
    for _ in 0..e.unsigned_abs() {
        acc *= &b;
    }
    acc
}

/// Evaluates the monomial `x^v` exactly at a rational point with nonzero
/// coordinates.
pub fn monomial_value(x: &[Rat], v: &[i64]) -> Rat {
    x.iter().zip(v).fold(Rat::from_integer(1.into()), |acc, (xi, &e)| acc * rat_pow(xi, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringReport {
    /// witness cone index per sample
    pub witnesses: Vec<usize>,
    pub samples: usize,
}

/// Certifies that every sample of the punctured unit box lies in some
/// adjoint sector: all adjoint monomials of the witness cone have absolute
/// value at most one at the sample. Exact evaluation.
pub fn covering_check(fan: &RefinedFan, samples: &[Vec<Rat>]) -> Result<CoveringReport, FanError> {
    let one = Rat::from_integer(1.into());
    let mut witnesses = Vec::with_capacity(samples.len());
    for x in samples {
        if x.len() != fan.n
            || x.iter().any(|c| c.is_zero())
            || x.iter().any(|c| rat_abs(c) > one)
        {
            return Err(FanError::SampleOutsideDomain);
        }
        let mut witness = None;
        'cones: for (ci, rc) in fan.cones.iter().enumerate() {
            for v in adjoint_vectors(rc) {
                if rat_abs(&monomial_value(x, &v)) > one {
                    continue 'cones;
                }
            }
            witness = Some(ci);
            break;
        }
        // the covering identity: a witness always exists
        let w = witness.ok_or(FanError::SampleOutsideDomain)?;
        witnesses.push(w);
    }
    Ok(CoveringReport { witnesses, samples: samples.len() })
}

/// Exhaustive pairwise fan-property check: the intersection of any two cones
/// is the cone generated by their common generators. Exact, via extreme-ray
/// enumeration of the halfspace intersection.
pub fn fan_property_holds(fan: &RefinedFan) -> bool {
    let n = fan.n;
    for i in 0..fan.cones.len() {
        for j in i + 1..fan.cones.len() {
            let a = &fan.cones[i];
            let b = &fan.cones[j];
            let common: Vec<Vec<i64>> = a
                .generators
                .iter()
                .filter(|g| b.generators.contains(g))
                .cloned()
                .collect();
            let rays = intersection_rays(a, b, n);
            let mut want: BTreeSet<Vec<i64>> = common.into_iter().collect();
            let got: BTreeSet<Vec<i64>> = rays.into_iter().collect();
            if want != got {
                return false;
            }
            want.clear();
        }
    }
    true
}

/// Extreme rays of the intersection of two full-dimensional simplicial
/// cones, each described by its adjugate halfspaces.
fn intersection_rays(a: &RefinedVertexCone, b: &RefinedVertexCone, n: usize) -> Vec<Vec<i64>> {
    let halfspaces = |c: &RefinedVertexCone| -> Vec<Vec<i64>> {
        let adj = c.matrix.adjugate().expect("square");
        let det = c.matrix.det().expect("square");
        let sgn = if det.is_negative() { -1i64 } else { 1 };
        (0..n)
            .map(|r| {
                adj.row(r)
                    .iter()
                    .map(|x| sgn * x.to_i64().expect("desk-scale"))
                    .collect()
            })
            .collect()
    };
    let mut rows: Vec<Vec<i64>> = halfspaces(a);
    rows.extend(halfspaces(b));
    let mut rays: BTreeSet<Vec<i64>> = BTreeSet::new();
    let m = rows.len();
    let mut idx = vec![0usize; n - 1];
    enumerate_subsets(m, n - 1, &mut idx, 0, 0, &mut |chosen| {
        let vs: Vec<Vec<i64>> = chosen.iter().map(|&i| rows[i].clone()).collect();
        let Ok(z) = exterior_product(&vs) else { return };
        if z.iter().all(|&x| x == 0) {
            return;
        }
        for cand in [z.clone(), z.iter().map(|&x| -x).collect::<Vec<i64>>()] {
            if rows.iter().all(|r| dot(r, &cand) >= 0) {
                rays.insert(primitive(&cand));
            }
        }
    });
    rays.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use crate::polyhedron::Support;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build(n: usize, pts: &[&[i64]]) -> RefinedFan {
        let s = Support::new(n, pts.iter().map(|p| p.to_vec()).collect()).unwrap();
        let np = NewtonPolyhedron::build(&s).unwrap();
        refine_fan(&np).unwrap()
    }

    fn cusp_fan() -> RefinedFan {
        build(2, &[&[2, 0], &[0, 3]])
    }

    #[test]
    fn refine_single_cones() {
        let sorted_gens = |frags: &[RefinedVertexCone]| -> BTreeSet<Vec<Vec<i64>>> {
            frags
                .iter()
                .map(|f| {
                    let mut g = f.generators.clone();
                    g.sort();
                    g
                })
                .collect()
        };
        let frags = refine_vertex_cone(&Cone::new(vec![vec![3, 2], vec![0, 1]]), 2).unwrap();
        let gens = sorted_gens(&frags);
        assert!(gens.contains(&vec![vec![1, 1], vec![3, 2]]));
        assert!(gens.contains(&vec![vec![0, 1], vec![1, 1]]));
        assert_eq!(frags.len(), 2);

        let frags = refine_vertex_cone(&Cone::new(vec![vec![3, 2], vec![1, 0]]), 2).unwrap();
        assert_eq!(frags.len(), 2);
        let all: BTreeSet<Vec<i64>> =
            frags.iter().flat_map(|f| f.generators.clone()).collect();
        assert!(all.contains(&vec![2, 1]));

        let frags =
            refine_vertex_cone(&Cone::new(vec![vec![1, 0], vec![0, 1]]), 2).unwrap();
        assert_eq!(frags.len(), 1);

        assert!(refine_vertex_cone(&Cone::new(vec![vec![1, 0, 0], vec![0, 1, 0]]), 3).is_err());
    }

    #[test]
    fn cusp_fan_shape() {
        let fan = cusp_fan();
        assert_eq!(fan.cones.len(), 4);
        let rays: BTreeSet<Vec<i64>> = fan.section.rays.iter().cloned().collect();
        let expect: BTreeSet<Vec<i64>> =
            [vec![1, 0], vec![2, 1], vec![3, 2], vec![1, 1], vec![0, 1]].into_iter().collect();
        assert_eq!(rays, expect);
        for c in &fan.cones {
            assert_eq!(c.matrix.det().unwrap(), BigInt::from(1));
        }
        assert!(fan_property_holds(&fan));
    }

    #[test]
    fn orthant_fan_trivial() {
        let fan = build(2, &[&[1, 0]]);
        assert_eq!(fan.cones.len(), 1);
        assert_eq!(fan.cones[0].matrix, IntMat::identity(2));
        assert!(conjugate_pairs(&fan).is_empty());
        let rep = euler_characteristics(&fan.section);
        assert_eq!(rep.chi_total, 1);
    }

    #[test]
    fn three_dim_fan() {
        let fan = build(3, &[&[2, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        for c in &fan.cones {
            assert_eq!(c.matrix.det().unwrap(), BigInt::from(1));
        }
        assert!(fan_property_holds(&fan));
        let rep = euler_characteristics(&fan.section);
        assert_eq!(rep.chi_total, 1);
        assert_eq!(rep.chi_boundary, 0); // 1 + (-1)^3

        // pair count equals the interior facet count of the section complex
        let pairs = conjugate_pairs(&fan);
        assert_eq!(pairs.len() as u64, rep.b_interior[1]);
    }

    #[test]
    fn euler_characteristics_cusp() {
        let rep = euler_characteristics(&cusp_fan().section);
        assert_eq!(rep.chi_total, 1);
        assert_eq!(rep.chi_boundary, 2); // 1 + (-1)^2
    }

    #[test]
    fn adjoint_vector_examples() {
        let id = RefinedVertexCone {
            vertex: vec![],
            generators: vec![vec![1, 0], vec![0, 1]],
            matrix: IntMat::identity(2),
        };
        assert_eq!(adjoint_vectors(&id), vec![vec![1, 0], vec![0, 1]]);

        let m = IntMat::from_i64(2, 2, &[3, 1, 2, 1]);
        let rc = RefinedVertexCone {
            vertex: vec![],
            generators: vec![vec![3, 2], vec![1, 1]],
            matrix: m,
        };
        assert_eq!(adjoint_vectors(&rc), vec![vec![1, -1], vec![-2, 3]]);
    }

    #[test]
    fn adjoint_orthogonality_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(2..=4usize);
            // random unimodular matrix from elementary column operations
            let mut m = IntMat::identity(n);
            for _ in 0..rng.gen_range(1..=6) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b {
                    continue;
                }
                let k = rng.gen_range(0..=2i64);
                for r in 0..n {
                    let v = m.at(r, a).clone() + BigInt::from(k) * m.at(r, b);
                    m.set(r, a, v);
                }
            }
            if m.det().unwrap() != BigInt::from(1) {
                continue;
            }
            let gens: Vec<Vec<i64>> = (0..n)
                .map(|c| m.column(c).iter().map(|x| x.to_i64().unwrap()).collect())
                .collect();
            let rc = RefinedVertexCone { vertex: vec![], generators: gens.clone(), matrix: m };
            let adj = adjoint_vectors(&rc);
            for l in 0..n {
                for k in 0..n {
                    let d = dot(&adj[l], &gens[k]);
                    assert_eq!(d, if l == k { 1 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn conjugate_pairs_cusp() {
        let fan = cusp_fan();
        let pairs = conjugate_pairs(&fan);
        assert_eq!(pairs.len(), 3);
        for p in &pairs {
            let (va, vb) = &p.adjoint_vectors;
            let neg: Vec<i64> = vb.iter().map(|x| -x).collect();
            assert_eq!(*va, neg);
        }
        let interior: BTreeSet<Vec<i64>> =
            pairs.iter().flat_map(|p| p.facet_rays.clone()).collect();
        let expect: BTreeSet<Vec<i64>> =
            [vec![2, 1], vec![3, 2], vec![1, 1]].into_iter().collect();
        assert_eq!(interior, expect);
    }

    #[test]
    fn covering_examples() {
        let fan = cusp_fan();
        let all_ones = vec![vec![rat_int(1), rat_int(1)]];
        let rep = covering_check(&fan, &all_ones).unwrap();
        assert_eq!(rep.witnesses.len(), 1);

        let x = vec![vec![rat(1, 2), rat(1, 3)]];
        assert!(covering_check(&fan, &x).is_ok());

        // outside the domain
        assert!(covering_check(&fan, &[vec![rat_int(0), rat_int(1)]]).is_err());
        assert!(covering_check(&fan, &[vec![rat_int(2), rat_int(1)]]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut samples = Vec::new();
        for _ in 0..200 {
            samples.push(vec![
                rat(rng.gen_range(1..=16) * if rng.gen_bool(0.5) { 1 } else { -1 }, 16),
                rat(rng.gen_range(1..=16) * if rng.gen_bool(0.5) { 1 } else { -1 }, 16),
            ]);
        }
        let rep = covering_check(&fan, &samples).unwrap();
        assert_eq!(rep.witnesses.len(), 200);
    }

    #[test]
    fn random_fans_are_unimodular_and_fans() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..25 {
            let n = rng.gen_range(2..=3usize);
            let count = rng.gen_range(1..=6);
            let pts: Vec<Vec<i64>> =
                (0..count).map(|_| (0..n).map(|_| rng.gen_range(0..=8i64)).collect()).collect();
            let s = Support::new(n, pts).unwrap();
            let np = NewtonPolyhedron::build(&s).unwrap();
            let fan = refine_fan(&np).unwrap();
            for c in &fan.cones {
                assert_eq!(c.matrix.det().unwrap(), BigInt::from(1));
            }
            assert!(fan_property_holds(&fan));
            let rep = euler_characteristics(&fan.section);
            assert_eq!(rep.chi_total, 1);
            assert_eq!(rep.chi_boundary, 1 + if n % 2 == 0 { 1 } else { -1 });
        }
    }
}
