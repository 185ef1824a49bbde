//! The resolution driver: per-chart steps for regular, irregular (latent
//! variable) and inconsistent singularities with a strictly decreasing
//! singularity-height ledger. The closed loop runs for n <= 3; the
//! exponential-matrix machinery it calls works for general n.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{IntMat, Rat, RatMat};
use crate::canonical::{
    canonical_reduce, decompose_interim, inconsistent_form, is_consistent, is_consistent_rat,
    permute_poly_coords, synthesize, CanonicalReduction, ExceptionalIndexSet,
};
use crate::fan::refine_fan;
use crate::poly::{branch_points_univariate, Coeff, Exp, PolyError, SparsePoly};
use crate::polyhedron::{NewtonPolyhedron, PolyhedronError, Support};
use crate::weierstrass::{
    complete_power, default_tau, preliminary_reduction, weierstrass_prepare, WeierstrassError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ResolveError {
    ZeroInput,
    UnsupportedDimension(usize),
    Weierstrass(WeierstrassError),
    Polyhedron(PolyhedronError),
    Poly(PolyError),
    /// A structural invariant failed; signals a bug, not an input condition.
    InvariantViolation(&'static str),
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::ZeroInput => write!(f, "cannot resolve the zero polynomial"),
            ResolveError::UnsupportedDimension(n) => {
                write!(f, "full resolution loop supports n <= 3, got {n}")
            }
            ResolveError::Weierstrass(e) => write!(f, "{e}"),
            ResolveError::Polyhedron(e) => write!(f, "{e}"),
            ResolveError::Poly(e) => write!(f, "{e}"),
            ResolveError::InvariantViolation(s) => write!(f, "invariant violation: {s}"),
        }
    }
}

impl From<WeierstrassError> for ResolveError {
    fn from(e: WeierstrassError) -> Self {
        ResolveError::Weierstrass(e)
    }
}
impl From<PolyhedronError> for ResolveError {
    fn from(e: PolyhedronError) -> Self {
        ResolveError::Polyhedron(e)
    }
}
impl From<PolyError> for ResolveError {
    fn from(e: PolyError) -> Self {
        ResolveError::Poly(e)
    }
}

/// Driver configuration; everything has a reproducible default.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolveConfig {
    /// truncation order for Weierstrass reductions (default per level)
    pub tau: Option<i64>,
    /// hard cap on resolution rounds along any lineage
    pub max_steps: usize,
    /// global chart budget
    pub max_charts: usize,
    /// sampled rational slices per two-dimensional exceptional branch
    pub slice_count: usize,
    /// extra user-supplied branch points, checked exactly before use
    pub user_points: Vec<Vec<Rat>>,
    /// half-width of the sampled box of the deficient-contraction certificate
    pub contraction_radius: (i64, i64),
}

impl Default for ResolveConfig {
    fn default() -> Self {
        ResolveConfig {
            tau: None,
            max_steps: 64,
            max_charts: 4096,
            slice_count: 3,
            user_points: Vec::new(),
            contraction_radius: (1, 8),
        }
    }
}

/// Per-coordinate role inside a local problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Role<C: Coeff> {
    Active,
    /// carries an exceptional divisor created by the parent chart
    ExceptionalBorn,
    /// irregular-latency variable: kept symbolic, localization postponed
    LatentPinned { value: C, prior_height: i64, lineage: usize },
    /// inconsistent-latency variable: an honest chart coordinate whose
    /// height bookkeeping is suspended
    LatentPrimary { nesting: u32, prior_height: i64, lineage: usize },
}

/// Leaf disposition of a problem node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemStatus {
    /// expanded into charts
    Expanded,
    /// local order <= 1
    Resolved,
    /// exact mode hit non-rational branch points; listed ones were resolved
    AlgebraicBranchPoints,
    /// lineage step cap
    StepCapExceeded,
    /// a transform outgrew the desk-scale polyhedron bounds
    ScaleCapExceeded,
    /// continuation certified by the synthetic-matrix analysis instead of a
    /// functional transform (non-trivial inconsistent lineage)
    SyntheticAnalysis,
}

/// What happened on one exceptional index set of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumReport {
    /// chart-variable positions of the exceptional set
    pub i0: Vec<usize>,
    pub consistent: bool,
    pub det_d: Option<BigInt>,
    pub f_matrix: Option<IntMat>,
    /// deficient index set of the reduced chart, when nonempty
    pub deficient: Vec<usize>,
    /// children spawned from this stratum
    pub children: Vec<usize>,
    pub note: StratumNote,
    /// synthetic-matrix analysis for inconsistent strata
    pub synthetic: Option<SyntheticReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StratumNote {
    /// codimension zero: proper transform is a unit
    Codim0,
    Plain,
    /// exact root search was incomplete (algebraic branch points exist)
    AlgebraicIncomplete,
    /// two-dimensional branch enumeration is sample-based
    Sampled,
}

/// Matrix-level record of an inconsistent stratum: the interim
/// decomposition and, per chart of the next round, the synthesized matrix
/// with the revival verdict for each latent primary variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticReport {
    pub n_bar: IntMat,
    pub s_bar: RatMat,
    pub t_bar: RatMat,
    /// verdicts (nesting level, consistent-with-synthetic) for the next
    /// round's first chart, in nesting priority order
    pub verdicts: Vec<(u32, bool)>,
    pub nesting_degree: u32,
    /// true when some latent primary revives on the analyzed chart
    pub revival: bool,
}

/// Ledger events recorded on problem nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum LedgerEvent {
    Height { lineage: usize, height: i64 },
    LatentBegin { lineage: usize, prior_height: i64 },
    Revival { lineage: usize, prior_height: i64, residual_order: i64 },
    SyntheticRevival { lineage: usize, prior_height: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeBody<C: Coeff> {
    Problem {
        f: SparsePoly<C>,
        roles: Vec<Role<C>>,
        lineage: usize,
        height: i64,
        depth: usize,
        status: ProblemStatus,
        events: Vec<LedgerEvent>,
        /// interim matrix pending synthesis (inconsistent lineages)
        t_hat: Option<RatMat>,
        /// deficient-contraction certificate carried from the parent chart
        deficiency_certified: Option<bool>,
        /// the localization that created this problem, when any
        branch_point: Option<Vec<(usize, C)>>,
        /// the Weierstrass polynomial prepared during this round
        weierstrass: Option<SparsePoly<C>>,
    },
    Chart {
        vertex: Exp,
        matrix: IntMat,
        strata: Vec<StratumReport>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionNode<C: Coeff> {
    pub id: usize,
    pub parent: Option<usize>,
    pub body: NodeBody<C>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionTree<C: Coeff> {
    pub nodes: Vec<ResolutionNode<C>>,
}

impl<C: Coeff> ResolutionTree<C> {
    pub fn problem_leaves(&self) -> impl Iterator<Item = &ResolutionNode<C>> {
        self.nodes.iter().filter(|n| {
            matches!(
                n.body,
                NodeBody::Problem { ref status, .. } if *status != ProblemStatus::Expanded
            )
        })
    }

    pub fn all_resolved(&self) -> bool {
        self.problem_leaves().all(|n| {
            matches!(n.body, NodeBody::Problem { ref status, .. } if *status == ProblemStatus::Resolved)
        })
    }

    pub fn chart_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.body, NodeBody::Chart { .. })).count()
    }

    /// Validates the height ledger over the whole tree: along every lineage
    /// the non-latent heights strictly decrease and every revival entry
    /// records a residual order below the prior height.
    pub fn validate_ledger(&self) -> Result<(), String> {
        use alloc::format;
        for node in &self.nodes {
            let NodeBody::Problem { lineage, height, ref events, .. } = node.body else {
                continue;
            };
            // latency boundaries suspend the lineage bookkeeping; the
            // height may temporarily increase across them
            let crosses_latency = events
                .iter()
                .any(|e| matches!(e, LedgerEvent::LatentBegin { .. }));
            // find the nearest problem ancestor on the same lineage
            let mut cur = node.parent;
            while let Some(pid) = cur {
                let p = &self.nodes[pid];
                if let NodeBody::Problem { lineage: pl, height: ph, .. } = p.body {
                    if pl == lineage && !crosses_latency && height >= ph {
                        return Err(format!(
                            "node {}: height {} did not decrease from {}",
                            node.id, height, ph
                        ));
                    }
                    break;
                }
                cur = p.parent;
            }
            for ev in events {
                if let LedgerEvent::Revival { prior_height, residual_order, .. } = ev {
                    if residual_order >= prior_height {
                        return Err(format!(
                            "node {}: residual order {} not below prior height {}",
                            node.id, residual_order, prior_height
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact product of the ideal generators; resolving it resolves all
/// generators simultaneously.
pub fn product_of_generators<C: Coeff>(fs: &[SparsePoly<C>]) -> SparsePoly<C> {
    let n = fs.first().map_or(0, |f| f.nvars());
    let mut out = SparsePoly::constant(n, C::one());
    for f in fs {
        out = out.mul(f);
    }
    out
}

/// Regular / irregular classification of a localized proper transform: the
/// branch point is regular when the restriction to the primary axis stays
/// nonzero.
pub fn classify_branch_point<C: Coeff>(
    localized_proper: &SparsePoly<C>,
    _primary: usize,
    other_active: &[usize],
) -> bool {
    !localized_proper.set_zero(other_active).is_zero()
}

/// Ambient extension of a chart-dimension matrix: the block acts on the
/// listed coordinate slots, everything else stays fixed.
fn embed_int(m: &IntMat, coords: &[usize], n_total: usize) -> IntMat {
    let mut out = IntMat::identity(n_total);
    for (ri, &r) in coords.iter().enumerate() {
        for c in 0..n_total {
            if !coords.contains(&c) {
                out.set(r, c, BigInt::zero());
            }
        }
        for (ci, &c) in coords.iter().enumerate() {
            out.set(r, c, m.at(ri, ci).clone());
        }
    }
    out
}

fn embed_rat(m: &RatMat, coords: &[usize], n_total: usize) -> RatMat {
    let mut out = RatMat::identity(n_total);
    for (ri, &r) in coords.iter().enumerate() {
        for (ci, &c) in coords.iter().enumerate() {
            out.set(r, c, m.at(ri, ci).clone());
        }
    }
    for &r in coords {
        for c in 0..n_total {
            if !coords.contains(&c) {
                out.set(r, c, <Rat as Zero>::zero());
            }
        }
    }
    out
}

/// Componentwise minimum of the support on the given coordinates.
fn min_exponents<C: Coeff>(f: &SparsePoly<C>, coords: &[usize]) -> Vec<i64> {
    let n = f.nvars();
    let mut gamma = vec![0i64; n];
    for &j in coords {
        gamma[j] = f.terms().map(|(e, _)| e[j]).min().unwrap_or(0);
    }
    gamma
}

/// Deterministic rational slice values 1, -1, 1/2, -1/2, 2, -2, ...
fn slice_values(count: usize) -> Vec<Rat> {
    let seq = [(1i64, 1i64), (-1, 1), (1, 2), (-1, 2), (2, 1), (-2, 1), (1, 3), (-1, 3)];
    seq.iter()
        .take(count.min(seq.len()))
        .map(|&(p, q)| Rat::new(BigInt::from(p), BigInt::from(q)))
        .collect()
}

struct Driver<C: Coeff> {
    cfg: ResolveConfig,
    nodes: Vec<ResolutionNode<C>>,
    lineages: usize,
    algebraic_flag: bool,
}

/// A freshly materialized local problem, before it becomes a node.
struct PendingProblem<C: Coeff> {
    f: SparsePoly<C>,
    roles: Vec<Role<C>>,
    lineage: usize,
    height_bound: Option<i64>, // parent height on the same lineage
    depth: usize,
    events: Vec<LedgerEvent>,
    t_hat: Option<RatMat>,
    deficiency_certified: Option<bool>,
    branch_point: Option<Vec<(usize, C)>>,
}

/// Full resolution of a hypersurface germ at the origin. Every leaf is
/// either resolved (local order <= 1) or carries an explicit stop reason.
pub fn resolve<C: Coeff>(
    f: &SparsePoly<C>,
    cfg: &ResolveConfig,
) -> Result<ResolutionTree<C>, ResolveError> {
    if f.is_zero() {
        return Err(ResolveError::ZeroInput);
    }
    if f.nvars() > 3 {
        return Err(ResolveError::UnsupportedDimension(f.nvars()));
    }
    let mut driver = Driver {
        cfg: cfg.clone(),
        nodes: Vec::new(),
        lineages: 1,
        algebraic_flag: false,
    };
    let roles = vec![Role::Active; f.nvars()];
    let root = PendingProblem {
        f: f.clone(),
        roles,
        lineage: 0,
        height_bound: None,
        depth: 0,
        events: Vec::new(),
        t_hat: None,
        deficiency_certified: None,
        branch_point: None,
    };
    let root_id = driver.push_problem(None, root)?;
    let mut queue = vec![root_id];
    while let Some(pid) = queue.pop() {
        if driver.nodes.len() > driver.cfg.max_charts {
            // out of budget: every pending problem becomes an explicit
            // capped leaf instead of an error
            driver.set_status(pid, ProblemStatus::ScaleCapExceeded);
            for &q in &queue {
                driver.set_status(q, ProblemStatus::ScaleCapExceeded);
            }
            break;
        }
        let spawned = driver.process_problem(pid)?;
        queue.extend(spawned);
    }
    Ok(ResolutionTree { nodes: driver.nodes })
}

impl<C: Coeff> Driver<C> {
    fn push_problem(
        &mut self,
        parent: Option<usize>,
        mut pending: PendingProblem<C>,
    ) -> Result<usize, ResolveError> {
        // revive pinned latents whose residual polynomial became visible
        loop {
            let pinned: Vec<usize> = pending
                .roles
                .iter()
                .enumerate()
                .filter(|(_, r)| matches!(r, Role::LatentPinned { .. }))
                .map(|(i, _)| i)
                .collect();
            if pinned.is_empty() {
                break;
            }
            let others: Vec<usize> =
                (0..pending.roles.len()).filter(|i| !pinned.contains(i)).collect();
            let mut revived = false;
            for &j in pinned.iter().rev() {
                let mut rest: Vec<usize> = others.clone();
                rest.extend(pinned.iter().copied().filter(|&i| i != j));
                let residual = pending.f.set_zero(&rest);
                if residual.is_zero() {
                    continue;
                }
                let Role::LatentPinned { value, prior_height, lineage } =
                    pending.roles[j].clone()
                else {
                    unreachable!()
                };
                let shifted = residual.localize(&[(j, value.clone())])?;
                let residual_order = shifted.deg_in(j).map_or(0, |_| {
                    shifted.terms().map(|(e, _)| e[j]).min().unwrap_or(0)
                });
                if residual_order >= prior_height {
                    return Err(ResolveError::InvariantViolation(
                        "residual order must fall below the prior height",
                    ));
                }
                pending.f = pending.f.localize(&[(j, value)])?;
                pending.roles[j] = Role::Active;
                pending.lineage = lineage;
                pending.height_bound = Some(prior_height);
                pending.events.push(LedgerEvent::Revival {
                    lineage,
                    prior_height,
                    residual_order,
                });
                revived = true;
                break;
            }
            if !revived {
                break;
            }
        }

        let height = self.entry_height(&pending)?;
        if let Some(bound) = pending.height_bound {
            if height >= bound {
                return Err(ResolveError::InvariantViolation(
                    "lineage height failed to decrease",
                ));
            }
        }
        let mut events = pending.events.clone();
        events.push(LedgerEvent::Height { lineage: pending.lineage, height });
        let id = self.nodes.len();
        self.nodes.push(ResolutionNode {
            id,
            parent,
            body: NodeBody::Problem {
                f: pending.f,
                roles: pending.roles,
                lineage: pending.lineage,
                height,
                depth: pending.depth,
                status: ProblemStatus::Expanded,
                events,
                t_hat: pending.t_hat,
                deficiency_certified: pending.deficiency_certified,
                branch_point: pending.branch_point,
                weierstrass: None,
            },
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        Ok(id)
    }

    /// Entry height of a problem: order of the proper restriction over the
    /// active coordinates (latent-primary and exceptional-born coordinates
    /// zeroed, pinned latents excluded from the degree count).
    fn entry_height(&self, p: &PendingProblem<C>) -> Result<i64, ResolveError> {
        let mut zero: Vec<usize> = Vec::new();
        let mut active: Vec<usize> = Vec::new();
        for (i, r) in p.roles.iter().enumerate() {
            match r {
                Role::Active => active.push(i),
                Role::ExceptionalBorn | Role::LatentPrimary { .. } => zero.push(i),
                Role::LatentPinned { .. } => {}
            }
        }
        let has_latents = p
            .roles
            .iter()
            .any(|r| matches!(r, Role::LatentPinned { .. } | Role::LatentPrimary { .. }));
        let base = if has_latents { p.f.set_zero(&zero) } else { p.f.clone() };
        if base.is_zero() {
            return Err(ResolveError::InvariantViolation("proper restriction vanished"));
        }
        let coords: Vec<usize> = if has_latents {
            active
        } else {
            active.iter().copied().chain(zero.iter().copied()).collect()
        };
        base.ord_on(&coords)
            .ok_or(ResolveError::InvariantViolation("empty support"))
    }

    fn set_status(&mut self, pid: usize, status: ProblemStatus) {
        if let NodeBody::Problem { status: s, .. } = &mut self.nodes[pid].body {
            *s = status;
        }
    }

    /// One resolution round on a problem node; returns newly created
    /// problem ids.
    fn process_problem(&mut self, pid: usize) -> Result<Vec<usize>, ResolveError> {
        let (f, roles, lineage, height, depth, t_hat) = match &self.nodes[pid].body {
            NodeBody::Problem { f, roles, lineage, height, depth, t_hat, .. } => (
                f.clone(),
                roles.clone(),
                *lineage,
                *height,
                *depth,
                t_hat.clone(),
            ),
            _ => return Ok(Vec::new()),
        };
        if depth >= self.cfg.max_steps {
            self.set_status(pid, ProblemStatus::StepCapExceeded);
            return Ok(Vec::new());
        }
        // desk-scale growth guard: term counts and coefficient sizes bound
        // the cost of every downstream operation of this round
        let too_big = f.num_terms() > 300
            || f.terms().any(|(_, c)| c.bit_size() > 512);
        if too_big {
            self.set_status(pid, ProblemStatus::ScaleCapExceeded);
            return Ok(Vec::new());
        }

        let pinned: Vec<usize> = roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Role::LatentPinned { .. }))
            .map(|(i, _)| i)
            .collect();
        let primaries: Vec<usize> = roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Role::LatentPrimary { .. }))
            .map(|(i, _)| i)
            .collect();
        let eborn: Vec<usize> = roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Role::ExceptionalBorn))
            .map(|(i, _)| i)
            .collect();
        let actives: Vec<usize> = roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Role::Active))
            .map(|(i, _)| i)
            .collect();
        let has_latents = !pinned.is_empty() || !primaries.is_empty();
        let nonlatent: Vec<usize> = (0..roles.len())
            .filter(|i| !pinned.contains(i) && !primaries.contains(i))
            .collect();

        // smoothness: order over everything near zero (pinned latents are
        // evaluated at their pinned values for the test)
        let mut smooth_test = f.clone();
        for &j in &pinned {
            if let Role::LatentPinned { value, .. } = &roles[j] {
                smooth_test = smooth_test.localize(&[(j, value.clone())])?;
            }
        }
        let smooth_ord = smooth_test.ord().unwrap_or(0);
        if smooth_ord <= 1 {
            self.set_status(pid, ProblemStatus::Resolved);
            return Ok(Vec::new());
        }

        // latent rounds at height one on an orthant polyhedron are smooth
        // divisor charts (unit times coordinate)
        // -- handled implicitly: the apex form below has d' = 1 and its
        // polyhedron is an orthant, giving a codim-aware trivial fan; the
        // residual revival in child creation fires otherwise.

        // ---- preparation -------------------------------------------------
        let shear_active: Vec<usize> = if has_latents { actives.clone() } else { nonlatent.clone() };
        if shear_active.is_empty() {
            // nothing active: all information sits in latent coordinates;
            // the revival loop in push_problem has already run, so stop
            self.set_status(pid, ProblemStatus::Resolved);
            return Ok(Vec::new());
        }
        let zeroed: Vec<usize> = if has_latents {
            eborn.iter().copied().chain(primaries.iter().copied()).collect()
        } else {
            Vec::new()
        };
        let apex = preliminary_reduction(&f, &shear_active, &zeroed)?;
        let d = apex.height;
        debug_assert_eq!(d, height, "entry height must match the apex height");

        // gradation for latent rounds: split off the reducible class
        let (w_poly, unit_poly, transform_obj) = if has_latents {
            let apex_primary = apex.primary;
            // apex coefficient class exponents on the latent coordinates
            let mut apex_class = apex.poly.clone();
            for &j in &zeroed {
                apex_class = apex_class.set_zero(&[j]);
            }
            let apex_slice: Vec<(Exp, C)> = apex_class
                .terms()
                .filter(|(e, _)| {
                    e[apex_primary] == d
                        && shear_active.iter().all(|&a| a == apex_primary || e[a] == 0)
                })
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect();
            if apex_slice.is_empty() {
                return Err(ResolveError::InvariantViolation("missing apex class"));
            }
            let mut grad = vec![0i64; f.nvars()];
            for &j in &pinned {
                // gradation index: top degree of the apex coefficient
                let m = apex_slice.iter().map(|(e, _)| e[j]).max().unwrap();
                if let Role::LatentPinned { prior_height, .. } = &roles[j] {
                    if m >= prior_height - 1 {
                        return Err(ResolveError::InvariantViolation(
                            "gradation index must stay below prior height minus one",
                        ));
                    }
                }
                grad[j] = m;
            }
            for &j in &primaries {
                let exps: Vec<i64> = apex_slice.iter().map(|(e, _)| e[j]).collect();
                let a0 = exps[0];
                if exps.iter().any(|&x| x != a0) {
                    return Err(ResolveError::InvariantViolation(
                        "latent primary exponent must be constant on the apex class",
                    ));
                }
                grad[j] = a0;
            }
            // reducible part: exact latent-exponent match, divided by the
            // gradation monomial
            let mut f0 = SparsePoly::zero(f.nvars());
            let mut phi = SparsePoly::zero(f.nvars());
            let latcoords: Vec<usize> =
                pinned.iter().copied().chain(primaries.iter().copied()).collect();
            for (e, c) in apex.poly.terms() {
                if latcoords.iter().all(|&j| e[j] == grad[j]) {
                    let mut ne = e.clone();
                    for &j in &latcoords {
                        ne[j] = 0;
                    }
                    f0.add_term(ne, c.clone());
                } else {
                    phi.add_term(e.clone(), c.clone());
                }
            }
            let sub_apex = crate::weierstrass::ApexForm {
                poly: f0,
                primary: apex_primary,
                height: d,
                shear: Vec::new(),
            };
            let tau = self.cfg.tau.unwrap_or_else(|| default_tau(&apex.poly, d));
            let wf = match weierstrass_prepare(&sub_apex, &nonlatent, tau) {
                Ok(wf) => complete_power(&wf),
                Err(WeierstrassError::ScaleExceeded { .. }) => {
                    self.set_status(pid, ProblemStatus::ScaleCapExceeded);
                    return Ok(Vec::new());
                }
                Err(e) => return Err(e.into()),
            };
            // the full apex form with the reducible part in Weierstrass form
            let mut graded = wf.w.mul_trunc(wf.unit.poly(), tau);
            graded = graded.shift_exponents(&grad);
            let obj = graded.add(&phi);
            (wf.w.clone(), wf.unit.poly().clone(), obj)
        } else {
            let tau = self.cfg.tau.unwrap_or_else(|| default_tau(&apex.poly, d));
            let wf = match weierstrass_prepare(&apex, &nonlatent, tau) {
                Ok(wf) => complete_power(&wf),
                Err(WeierstrassError::ScaleExceeded { .. }) => {
                    self.set_status(pid, ProblemStatus::ScaleCapExceeded);
                    return Ok(Vec::new());
                }
                Err(e) => return Err(e.into()),
            };
            (wf.w.clone(), wf.unit.poly().clone(), wf.w.clone())
        };
        if let NodeBody::Problem { weierstrass, .. } = &mut self.nodes[pid].body {
            *weierstrass = Some(w_poly.clone());
        }

        // ---- charts -------------------------------------------------------
        // Newton polyhedron over the non-pinned exponents of the transform
        // object (latent primary coordinates participate)
        let chartvars: Vec<usize> =
            (0..roles.len()).filter(|i| !pinned.contains(i)).collect();
        let supp: Vec<Exp> = transform_obj
            .support()
            .into_iter()
            .map(|e| chartvars.iter().map(|&j| e[j]).collect())
            .collect();
        let support = Support::new(chartvars.len(), supp)?;
        let np = match NewtonPolyhedron::build(&support) {
            Ok(np) => np,
            Err(PolyhedronError::SupportTooLarge { .. }) => {
                self.set_status(pid, ProblemStatus::ScaleCapExceeded);
                return Ok(Vec::new());
            }
            Err(e) => return Err(e.into()),
        };
        let fan = refine_fan(&np).map_err(|_| {
            ResolveError::InvariantViolation("fan refinement failed")
        })?;

        let mut spawned = Vec::new();
        let fan_cones = fan.cones.clone();
        drop(fan);
        for rc in &fan_cones {
            let chart_id = self.nodes.len();
            self.nodes.push(ResolutionNode {
                id: chart_id,
                parent: Some(pid),
                body: NodeBody::Chart {
                    vertex: rc.vertex.clone(),
                    matrix: rc.matrix.clone(),
                    strata: Vec::new(),
                },
                children: Vec::new(),
            });
            self.nodes[pid].children.push(chart_id);
            let mut strata = Vec::new();
            let nv = chartvars.len();
            for mask in 1..(1u32 << nv) {
                let i0: Vec<usize> = (0..nv).filter(|&j| mask & (1 << j) != 0).collect();
                let report = self.process_stratum(
                    chart_id,
                    &f,
                    &roles,
                    lineage,
                    d,
                    depth,
                    &t_hat,
                    rc,
                    &i0,
                    &chartvars,
                    &pinned,
                    &primaries,
                    &apex,
                    &w_poly,
                    &unit_poly,
                    &transform_obj,
                    &mut spawned,
                )?;
                strata.push(report);
            }
            if let NodeBody::Chart { strata: s, .. } = &mut self.nodes[chart_id].body {
                *s = strata;
            }
        }
        if self.algebraic_flag {
            self.set_status(pid, ProblemStatus::AlgebraicBranchPoints);
            self.algebraic_flag = false;
            if !spawned.is_empty() {
                self.set_status(pid, ProblemStatus::Expanded);
                // keep the flag visible on the node events instead
            }
        }
        Ok(spawned)
    }

    /// Handles one (chart, exceptional index set) stratum.
    #[allow(clippy::too_many_arguments)]
    fn process_stratum(
        &mut self,
        chart_id: usize,
        f: &SparsePoly<C>,
        roles: &[Role<C>],
        lineage: usize,
        d: i64,
        depth: usize,
        t_hat: &Option<RatMat>,
        rc: &crate::fan::RefinedVertexCone,
        i0: &[usize],
        chartvars: &[usize],
        pinned: &[usize],
        primaries: &[usize],
        apex: &crate::weierstrass::ApexForm<C>,
        w_poly: &SparsePoly<C>,
        unit_poly: &SparsePoly<C>,
        transform_obj: &SparsePoly<C>,
        spawned: &mut Vec<usize>,
    ) -> Result<StratumReport, ResolveError> {
        let nv = chartvars.len();
        let k = nv - i0.len();
        let mut report = StratumReport {
            i0: i0.to_vec(),
            consistent: true,
            det_d: None,
            f_matrix: None,
            deficient: Vec::new(),
            children: Vec::new(),
            note: StratumNote::Plain,
            synthetic: None,
        };
        if k == 0 {
            report.note = StratumNote::Codim0;
            return Ok(report);
        }
        let prim_pos = chartvars
            .iter()
            .position(|&j| j == apex.primary)
            .expect("primary is a chart variable");
        let iset = ExceptionalIndexSet::new(nv, i0.to_vec());
        let consistent = is_consistent(&rc.matrix, &iset, prim_pos);
        report.consistent = consistent;

        if consistent {
            let cr = canonical_reduce(&rc.matrix, &iset, prim_pos)
                .map_err(|_| ResolveError::InvariantViolation("canonical reduction failed"))?;
            report.det_d = Some(cr.det_d.clone());
            report.f_matrix = Some(cr.f_matrix.clone());
            self.handle_consistent_stratum(
                chart_id, f, roles, lineage, d, depth, t_hat, rc, &cr, chartvars, pinned,
                primaries, w_poly, unit_poly, transform_obj, &mut report, spawned,
            )?;
        } else {
            self.handle_inconsistent_stratum(
                chart_id, f, roles, lineage, d, depth, &rc.matrix, &iset, prim_pos, chartvars,
                pinned, primaries, w_poly, transform_obj, &mut report, spawned,
            )?;
        }
        Ok(report)
    }

    /// Regular/irregular processing of a consistent stratum via the
    /// canonical reduction, including the synthetic revival test for latent
    /// primary variables.
    #[allow(clippy::too_many_arguments)]
    fn handle_consistent_stratum(
        &mut self,
        chart_id: usize,
        f: &SparsePoly<C>,
        roles: &[Role<C>],
        lineage: usize,
        d: i64,
        depth: usize,
        t_hat: &Option<RatMat>,
        rc: &crate::fan::RefinedVertexCone,
        cr: &CanonicalReduction,
        chartvars: &[usize],
        pinned: &[usize],
        primaries: &[usize],
        w_poly: &SparsePoly<C>,
        unit_poly: &SparsePoly<C>,
        transform_obj: &SparsePoly<C>,
        report: &mut StratumReport,
        spawned: &mut Vec<usize>,
    ) -> Result<(), ResolveError> {
        let n_total = f.nvars();
        let k = cr.k;
        let nv = chartvars.len();
        let perm_total = ambient_perm(n_total, chartvars, &cr.row_perm);
        let n_emb = embed_int(&cr.n_matrix, chartvars, n_total);
        let exc_ambient: Vec<usize> = (k..nv).map(|p| chartvars[p]).collect();
        let stars: Vec<usize> = (0..k).map(|p| chartvars[p]).collect();
        let lat_all: Vec<usize> =
            pinned.iter().copied().chain(primaries.iter().copied()).collect();

        // ---- synthetic verdicts for latent primaries ----------------------
        // the effective ambient exponent map of this chart, as a matrix
        let mut revival: Option<usize> = None; // ambient slot of the revived latent
        let mut q_total: Option<RatMat> = None;
        if !primaries.is_empty() {
            let p_mat = permutation_matrix(&perm_total);
            let n_eff = p_mat
                .mul(&n_emb.to_rat())
                .map_err(|_| ResolveError::InvariantViolation("bad embedding"))?;
            let q = match t_hat {
                Some(th) => synthesize(th, &n_eff)
                    .map_err(|_| ResolveError::InvariantViolation("synthesis failed"))?,
                None => n_eff,
            };
            let mut verdicts = Vec::new();
            let mut prim_sorted: Vec<usize> = primaries.to_vec();
            prim_sorted.sort_by_key(|&j| match &roles[j] {
                Role::LatentPrimary { nesting, .. } => *nesting,
                _ => u32::MAX,
            });
            for &j in &prim_sorted {
                let Role::LatentPrimary { nesting, .. } = &roles[j] else { continue };
                // the latent slot may have been relabeled by this chart's
                // row permutation: test on the pre-permutation slot
                let ok = is_consistent_rat(&q, &exc_ambient, j);
                verdicts.push((*nesting, ok));
                if ok && revival.is_none() {
                    revival = Some(j);
                }
            }
            report.synthetic = Some(SyntheticReport {
                n_bar: cr.n_matrix.clone(),
                s_bar: RatMat::identity(nv),
                t_bar: t_hat.clone().unwrap_or_else(|| RatMat::identity(n_total)),
                verdicts,
                nesting_degree: prim_sorted.len() as u32,
                revival: revival.is_some(),
            });
            q_total = Some(q);
        }

        if let (Some(lat_slot), Some(q)) = (revival, q_total.clone()) {
            // revival chart: resolve through the canonical reduction of the
            // synthetic matrix, with the revived latent as the new primary
            return self.spawn_revival_children(
                chart_id, f, roles, depth, &q, lat_slot, &exc_ambient, transform_obj, report,
                spawned,
            );
        }

        // ---- canonical transform of the working objects -------------------
        let w_perm = permute_poly_coords(w_poly, &perm_total);
        let obj_perm = permute_poly_coords(transform_obj, &perm_total);
        let unit_perm = permute_poly_coords(unit_poly, &perm_total);
        let roles_perm = permute_roles(roles, &perm_total);

        let w_total = w_perm.monomial_transform(&n_emb)?;
        let obj_total = obj_perm.monomial_transform(&n_emb)?;
        let gamma_w = min_exponents(&w_total, &exc_ambient);
        let q_w = w_total.extract_factor(&gamma_w, &exc_ambient)?;
        let gamma_o = min_exponents(&obj_total, &exc_ambient);
        let q_obj = obj_total.extract_factor(&gamma_o, &exc_ambient)?;

        // sustained latency through a chart that does not keep every latent
        // coordinate pure: certified by the synthetic record instead of a
        // functional child
        let lat_perm: Vec<usize> = primaries
            .iter()
            .map(|&j| perm_total.iter().position(|&src| src == j).unwrap_or(j))
            .collect();
        let pure = lat_perm.iter().all(|&row| unit_row(&n_emb, row));

        // term-structure invariants of the canonical transform on the
        // Weierstrass side: unique primary-degree-d exponent, none at d-1
        let prim_slot = chartvars[0];
        {
            let q_check = q_w.set_zero(&lat_all);
            let at_d: Vec<&Exp> =
                q_check.terms().map(|(e, _)| e).filter(|e| e[prim_slot] == d).collect();
            if at_d.len() != 1 {
                return Err(ResolveError::InvariantViolation(
                    "transformed apex must be the unique primary-degree-d exponent",
                ));
            }
            if q_check.terms().any(|(e, _)| e[prim_slot] == d - 1) {
                return Err(ResolveError::InvariantViolation(
                    "no exponent of primary degree d-1 may survive",
                ));
            }
        }

        // deficiency of the reduced chart
        let redundant = unit_perm.sub(&SparsePoly::constant(
            n_total,
            unit_perm.coeff(&vec![0; n_total]),
        ));
        let ev = cr.exceptional_columns();
        let zero_rows: Vec<usize> = (0..cr.n)
            .filter(|&r| (0..ev.cols()).all(|c| ev.at(r, c).is_zero()))
            .collect();
        report.deficient = zero_rows.clone();

        // ---- branch points -------------------------------------------------
        // Reduced-chart roots are reduced branch points directly; in exact
        // mode the cone chart is swept as well and its roots reduced through
        // the exponent identity z^detD = y^F, falling back to a cone-chart
        // localization when the reduced point leaves the field (the
        // localized orders agree across the covering).
        let proper_w = q_w.set_zero(&exc_ambient).set_zero(&lat_all);
        if proper_w.is_zero() {
            return Err(ResolveError::InvariantViolation("zero proper transform"));
        }
        let mut branch_points: Vec<(Vec<(usize, C)>, bool)> = Vec::new();
        if k == 1 {
            let direct = branch_points_univariate(&proper_w, stars[0])?;
            let mut seen: Vec<C> = Vec::new();
            for (root, _m) in direct.roots {
                seen.push(root.clone());
                branch_points.push((vec![(stars[0], root)], false));
            }
            if C::EXACT {
                let m_emb = embed_int(&rc.matrix, chartvars, n_total);
                let w_total_m = w_poly.monomial_transform(&m_emb)?;
                let i0_ambient: Vec<usize> =
                    report.i0.iter().map(|&p| chartvars[p]).collect();
                let gamma_m = min_exponents(&w_total_m, &i0_ambient);
                let qm = w_total_m.extract_factor(&gamma_m, &i0_ambient)?;
                let proper_m = qm.set_zero(&i0_ambient).set_zero(&lat_all);
                let m_star: Vec<usize> = chartvars
                    .iter()
                    .copied()
                    .filter(|j| !i0_ambient.contains(j))
                    .collect();
                if !proper_m.is_zero() {
                    let rs_m = branch_points_univariate(&proper_m, m_star[0])?;
                    if !rs_m.complete {
                        report.note = StratumNote::AlgebraicIncomplete;
                        self.algebraic_flag = true;
                    }
                    for (root, _m) in rs_m.roots {
                        match reduce_branch_point(&[root.clone()], &cr.f_matrix, &cr.det_d) {
                            Some(red) => {
                                if !seen.contains(&red[0]) {
                                    seen.push(red[0].clone());
                                    branch_points
                                        .push((vec![(stars[0], red[0].clone())], false));
                                }
                            }
                            None => branch_points.push((vec![(m_star[0], root)], true)),
                        }
                    }
                }
            }
        } else {
            report.note = StratumNote::Sampled;
            for v in slice_values(self.cfg.slice_count) {
                let cval = C::from_rat(&v);
                let sliced = proper_w.eval_partial(&[(stars[1], cval.clone())]);
                if sliced.is_zero() {
                    continue;
                }
                if let Ok(rs) = branch_points_univariate(&sliced, stars[0]) {
                    for (root, _m) in rs.roots {
                        branch_points
                            .push((vec![(stars[0], root), (stars[1], cval.clone())], false));
                    }
                }
            }
            for up in &self.cfg.user_points.clone() {
                if up.len() != k {
                    continue;
                }
                let assign: Vec<(usize, C)> =
                    stars.iter().copied().zip(up.iter().map(C::from_rat)).collect();
                if assign.iter().any(|(_, v)| v.is_zero()) {
                    continue;
                }
                if proper_w.eval_partial(&assign).is_zero() {
                    branch_points.push((assign, false));
                }
            }
            branch_points.dedup();
        }

        for (bp, m_fallback) in branch_points {
            if !primaries.is_empty() && !pure && !m_fallback {
                // sustained latency with a mixing chart: leaf certified by
                // the synthetic analysis
                let child = PendingProblem {
                    f: q_obj.localize(&bp)?,
                    roles: roles_perm.clone(),
                    lineage,
                    height_bound: None,
                    depth: self.cfg.max_steps,
                    events: vec![LedgerEvent::LatentBegin { lineage, prior_height: d }],
                    t_hat: t_hat.clone(),
                    deficiency_certified: None,
                    branch_point: Some(bp.clone()),
                };
                let cid = self.push_problem(Some(chart_id), child)?;
                self.set_status(cid, ProblemStatus::SyntheticAnalysis);
                report.children.push(cid);
                continue;
            }
            // classification at the reduced branch point (cone-chart
            // fallback points occur only at k = 1, where every branch point
            // is regular)
            let regular = if m_fallback {
                true
            } else {
                let localized_proper = proper_w.localize(&bp)?;
                let others: Vec<usize> = stars[1..].to_vec();
                classify_branch_point(&localized_proper, stars[0], &others)
            };

            let mut cert = None;
            if !zero_rows.is_empty() && !redundant.is_zero() {
                let chart_coord_slots: Vec<usize> = (0..nv).map(|p| chartvars[p]).collect();
                cert = Some(self.deficiency_certificate(
                    &redundant,
                    &zero_rows,
                    &chart_coord_slots,
                    &bp,
                ));
            }

            if regular {
                let (localized, exc_for_child, base_roles) = if m_fallback {
                    let m_emb = embed_int(&rc.matrix, chartvars, n_total);
                    let obj_total_m = transform_obj.monomial_transform(&m_emb)?;
                    let i0_ambient: Vec<usize> =
                        report.i0.iter().map(|&p| chartvars[p]).collect();
                    let gamma_m = min_exponents(&obj_total_m, &i0_ambient);
                    let qm = obj_total_m.extract_factor(&gamma_m, &i0_ambient)?;
                    (qm.localize(&bp)?, i0_ambient, roles.to_vec())
                } else {
                    (q_obj.localize(&bp)?, exc_ambient.clone(), roles_perm.clone())
                };
                let mut child_roles = base_roles;
                // a localized latent-primary star coordinate is revived by
                // the localization itself
                let mut extra_events = Vec::new();
                for (j, _) in &bp {
                    if let Role::LatentPrimary { prior_height, lineage: ll, .. } =
                        child_roles[*j].clone()
                    {
                        child_roles[*j] = Role::Active;
                        extra_events.push(LedgerEvent::SyntheticRevival {
                            lineage: ll,
                            prior_height,
                        });
                    }
                }
                for (i, r) in child_roles.iter_mut().enumerate() {
                    if matches!(r, Role::ExceptionalBorn) && !exc_for_child.contains(&i) {
                        *r = Role::Active;
                    }
                }
                for &e in &exc_for_child {
                    if !matches!(child_roles[e], Role::LatentPrimary { .. }) {
                        child_roles[e] = Role::ExceptionalBorn;
                    }
                }
                let child = PendingProblem {
                    f: localized,
                    roles: child_roles,
                    lineage,
                    height_bound: Some(d),
                    depth: depth + 1,
                    events: extra_events,
                    t_hat: if primaries.is_empty() { None } else { t_hat.clone() },
                    deficiency_certified: cert,
                    branch_point: Some(bp.clone()),
                };
                let cid = self.push_problem(Some(chart_id), child)?;
                report.children.push(cid);
                spawned.push(cid);
            } else {
                // irregular: postpone the primary-lineage coordinate, pin it
                // at its branch value, and localize the remaining stars
                let pin_coord = stars[0];
                let pin_value = bp
                    .iter()
                    .find(|(j, _)| *j == pin_coord)
                    .map(|(_, v)| v.clone())
                    .expect("primary star has a branch value");
                let rest: Vec<(usize, C)> =
                    bp.iter().filter(|(j, _)| *j != pin_coord).cloned().collect();
                let partial = q_obj.localize(&rest)?;
                let mut child_roles = roles_perm.clone();
                for (i, r) in child_roles.iter_mut().enumerate() {
                    if matches!(r, Role::ExceptionalBorn) && !exc_ambient.contains(&i) {
                        *r = Role::Active;
                    }
                }
                for &e in &exc_ambient {
                    if !matches!(child_roles[e], Role::LatentPrimary { .. }) {
                        child_roles[e] = Role::ExceptionalBorn;
                    }
                }
                child_roles[pin_coord] = Role::LatentPinned {
                    value: pin_value,
                    prior_height: d,
                    lineage,
                };
                let new_lineage = self.lineages;
                self.lineages += 1;
                let child = PendingProblem {
                    f: partial,
                    roles: child_roles,
                    lineage: new_lineage,
                    height_bound: None,
                    depth: depth + 1,
                    events: vec![LedgerEvent::LatentBegin { lineage, prior_height: d }],
                    t_hat: if primaries.is_empty() { None } else { t_hat.clone() },
                    deficiency_certified: cert,
                    branch_point: Some(bp.clone()),
                };
                let cid = self.push_problem(Some(chart_id), child)?;
                report.children.push(cid);
                spawned.push(cid);
            }
        }
        Ok(())
    }

    /// Revival of a latent primary variable: resolve through the canonical
    /// reduction of the synthetic exponential matrix, with the latent
    /// coordinate leading the permuted chart.
    #[allow(clippy::too_many_arguments)]
    fn spawn_revival_children(
        &mut self,
        chart_id: usize,
        f: &SparsePoly<C>,
        roles: &[Role<C>],
        depth: usize,
        q: &RatMat,
        lat_slot: usize,
        exc_ambient: &[usize],
        transform_obj: &SparsePoly<C>,
        report: &mut StratumReport,
        spawned: &mut Vec<usize>,
    ) -> Result<(), ResolveError> {
        use crate::canonical::canonical_reduce_rat;
        let n_total = f.nvars();
        let (prior_height, lat_lineage) = match &roles[lat_slot] {
            Role::LatentPrimary { prior_height, lineage, .. } => (*prior_height, *lineage),
            _ => return Err(ResolveError::InvariantViolation("revival of a non-latent slot")),
        };
        let rcq = canonical_reduce_rat(q, exc_ambient, lat_slot)
            .map_err(|_| ResolveError::InvariantViolation("synthetic reduction failed"))?;
        // chart order: rcq.row_perm over the full ambient space
        let perm_total: Vec<usize> = rcq.row_perm.clone();
        let n_eff = rcq.n_matrix.clone();
        let kq = rcq.k;
        let new_exc: Vec<usize> = (kq..n_total).collect();
        let obj_perm = permute_poly_coords(transform_obj, &perm_total);
        let roles_perm = permute_roles(roles, &perm_total);
        let obj_total = obj_perm.monomial_transform_rat(&n_eff)?;
        let gamma = min_exponents(&obj_total, &new_exc);
        let q_obj = obj_total.extract_factor(&gamma, &new_exc)?;
        // stars: non-exceptional, non-pinned coordinates; the revived
        // variable (chart position 0) leads
        let pinned_now: Vec<usize> = roles_perm
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Role::LatentPinned { .. }))
            .map(|(i, _)| i)
            .collect();
        let stars: Vec<usize> =
            (0..kq).filter(|p| !pinned_now.contains(p)).collect();
        let proper = q_obj.set_zero(&new_exc).set_zero(&pinned_now);
        if proper.is_zero() {
            return Err(ResolveError::InvariantViolation("zero proper transform at revival"));
        }
        let mut branch_points: Vec<Vec<(usize, C)>> = Vec::new();
        if stars.len() == 1 {
            let rs = branch_points_univariate(&proper, stars[0])?;
            if !rs.complete {
                report.note = StratumNote::AlgebraicIncomplete;
                self.algebraic_flag = true;
            }
            for (root, _m) in rs.roots {
                branch_points.push(vec![(stars[0], root)]);
            }
        } else if stars.len() >= 2 {
            report.note = StratumNote::Sampled;
            for v in slice_values(self.cfg.slice_count) {
                let cval = C::from_rat(&v);
                let sliced = proper.eval_partial(&[(stars[1], cval.clone())]);
                if sliced.is_zero() {
                    continue;
                }
                if let Ok(rs) = branch_points_univariate(&sliced, stars[0]) {
                    for (root, _m) in rs.roots {
                        branch_points.push(vec![(stars[0], root), (stars[1], cval.clone())]);
                    }
                }
            }
        }
        for bp in branch_points {
            let localized = q_obj.localize(&bp)?;
            let mut child_roles = roles_perm.clone();
            // the revived latent becomes an active coordinate again; deeper
            // latents keep their tags
            let lat_new_slot = slot_of(&perm_total, lat_slot);
            child_roles[lat_new_slot] = Role::Active;
            for (i, r) in child_roles.iter_mut().enumerate() {
                if matches!(r, Role::ExceptionalBorn) && !new_exc.contains(&i) {
                    *r = Role::Active;
                }
            }
            for &e in &new_exc {
                if !matches!(
                    child_roles[e],
                    Role::LatentPrimary { .. } | Role::LatentPinned { .. }
                ) {
                    child_roles[e] = Role::ExceptionalBorn;
                }
            }
            let child = PendingProblem {
                f: localized,
                roles: child_roles,
                lineage: lat_lineage,
                height_bound: Some(prior_height),
                depth: depth + 1,
                events: vec![LedgerEvent::SyntheticRevival {
                    lineage: lat_lineage,
                    prior_height,
                }],
                t_hat: None,
                deficiency_certified: None,
                branch_point: Some(bp.clone()),
            };
            let cid = self.push_problem(Some(chart_id), child)?;
            report.children.push(cid);
            spawned.push(cid);
        }
        Ok(())
    }

    /// Inconsistent stratum: builds the canonical inconsistent form; trivial
    /// forms continue functionally with a latent primary coordinate, the
    /// rest are certified by the interim/synthetic matrix analysis.
    #[allow(clippy::too_many_arguments)]
    fn handle_inconsistent_stratum(
        &mut self,
        chart_id: usize,
        f: &SparsePoly<C>,
        roles: &[Role<C>],
        lineage: usize,
        d: i64,
        depth: usize,
        matrix: &IntMat,
        iset: &ExceptionalIndexSet,
        prim_pos: usize,
        chartvars: &[usize],
        pinned: &[usize],
        primaries: &[usize],
        w_poly: &SparsePoly<C>,
        transform_obj: &SparsePoly<C>,
        report: &mut StratumReport,
        spawned: &mut Vec<usize>,
    ) -> Result<(), ResolveError> {
        let n_total = f.nvars();
        let nf = inconsistent_form(matrix, iset, prim_pos)
            .map_err(|_| ResolveError::InvariantViolation("inconsistent form failed"))?;
        let (s_bar, t_bar) = decompose_interim(&nf);
        let trivial = nf.n_bar == IntMat::identity(nf.n);

        report.synthetic = Some(SyntheticReport {
            n_bar: nf.n_bar.clone(),
            s_bar: s_bar.clone(),
            t_bar: t_bar.clone(),
            verdicts: Vec::new(),
            nesting_degree: (primaries.len() + 1) as u32,
            revival: false,
        });

        // branch points on the reduced chart (the inconsistent reduction is
        // an integer matrix; extraction at the chart vertex is valid)
        let perm_total = ambient_perm(n_total, chartvars, &nf.row_perm);
        let n_emb = embed_int(&nf.n_bar, chartvars, n_total);
        let w_perm = permute_poly_coords(w_poly, &perm_total);
        let roles_perm = permute_roles(roles, &perm_total);
        let w_total = w_perm.monomial_transform(&n_emb)?;
        let k = nf.k;
        let nv = chartvars.len();
        let exc_ambient: Vec<usize> = (k..nv).map(|p| chartvars[p]).collect();
        let lat_all: Vec<usize> =
            pinned.iter().copied().chain(primaries.iter().copied()).collect();
        let gamma_w = min_exponents(&w_total, &exc_ambient);
        let q_w = w_total.extract_factor(&gamma_w, &exc_ambient)?;
        let stars: Vec<usize> = (0..k).map(|p| chartvars[p]).collect();
        let proper_w = q_w.set_zero(&exc_ambient).set_zero(&lat_all);
        if proper_w.is_zero() {
            return Err(ResolveError::InvariantViolation("zero proper transform"));
        }
        let mut branch_points: Vec<Vec<(usize, C)>> = Vec::new();
        if k == 1 {
            let rs = branch_points_univariate(&proper_w, stars[0])?;
            if !rs.complete {
                report.note = StratumNote::AlgebraicIncomplete;
                self.algebraic_flag = true;
            }
            for (root, _m) in rs.roots {
                branch_points.push(vec![(stars[0], root)]);
            }
        } else {
            report.note = StratumNote::Sampled;
            for v in slice_values(self.cfg.slice_count) {
                let cval = C::from_rat(&v);
                let sliced = proper_w.eval_partial(&[(stars[1], cval.clone())]);
                if sliced.is_zero() {
                    continue;
                }
                if let Ok(rs) = branch_points_univariate(&sliced, stars[0]) {
                    for (root, _m) in rs.roots {
                        branch_points.push(vec![(stars[0], root), (stars[1], cval.clone())]);
                    }
                }
            }
        }
        if branch_points.is_empty() {
            return Ok(());
        }

        let obj_perm = permute_poly_coords(transform_obj, &perm_total);
        let obj_total = obj_perm.monomial_transform(&n_emb)?;
        let gamma_o = min_exponents(&obj_total, &exc_ambient);
        let q_obj = obj_total.extract_factor(&gamma_o, &exc_ambient)?;

        if !trivial {
            // non-trivial inconsistency: localized points that come out
            // smooth finish functionally; anything still singular is
            // certified by the synthetic calculus rather than recursed
            for bp in branch_points {
                let localized = q_obj.localize(&bp)?;
                let mut smooth_test = localized.clone();
                for (j, r) in roles_perm.iter().enumerate() {
                    if let Role::LatentPinned { value, .. } = r {
                        smooth_test = smooth_test.localize(&[(j, value.clone())])?;
                    }
                }
                if smooth_test.ord().unwrap_or(0) <= 1 {
                    let mut child_roles = roles_perm.clone();
                    for (i, r) in child_roles.iter_mut().enumerate() {
                        if matches!(r, Role::ExceptionalBorn) && !exc_ambient.contains(&i) {
                            *r = Role::Active;
                        }
                    }
                    for &e in &exc_ambient {
                        if !matches!(child_roles[e], Role::LatentPrimary { .. }) {
                            child_roles[e] = Role::ExceptionalBorn;
                        }
                    }
                    let child = PendingProblem {
                        f: localized,
                        roles: child_roles,
                        lineage,
                        height_bound: Some(d),
                        depth: depth + 1,
                        events: Vec::new(),
                        t_hat: None,
                        deficiency_certified: None,
                        branch_point: Some(bp.clone()),
                    };
                    let cid = self.push_problem(Some(chart_id), child)?;
                    report.children.push(cid);
                    spawned.push(cid);
                } else {
                    let child = PendingProblem {
                        f: localized,
                        roles: roles_perm.clone(),
                        lineage,
                        height_bound: None,
                        depth: self.cfg.max_steps,
                        events: vec![LedgerEvent::LatentBegin { lineage, prior_height: d }],
                        t_hat: Some(embed_rat(&t_bar, chartvars, n_total)),
                        deficiency_certified: None,
                        branch_point: Some(bp.clone()),
                    };
                    let cid = self.push_problem(Some(chart_id), child)?;
                    self.set_status(cid, ProblemStatus::SyntheticAnalysis);
                    report.children.push(cid);
                }
            }
            return Ok(());
        }

        // trivial inconsistency: the chart transform is a relabeling; the
        // primary variable becomes a latent primary coordinate
        let lat_prim_slot = chartvars[nv - 1];
        for bp in branch_points {
            let localized = q_obj.localize(&bp)?;
            let mut child_roles = roles_perm.clone();
            for (i, r) in child_roles.iter_mut().enumerate() {
                if matches!(r, Role::ExceptionalBorn) && !exc_ambient.contains(&i) {
                    *r = Role::Active;
                }
            }
            for &e in &exc_ambient {
                if !matches!(child_roles[e], Role::LatentPrimary { .. }) {
                    child_roles[e] = Role::ExceptionalBorn;
                }
            }
            let nesting = primaries.len() as u32 + 1;
            child_roles[lat_prim_slot] = Role::LatentPrimary {
                nesting,
                prior_height: d,
                lineage,
            };
            let new_lineage = self.lineages;
            self.lineages += 1;
            let child = PendingProblem {
                f: localized,
                roles: child_roles,
                lineage: new_lineage,
                height_bound: None,
                depth: depth + 1,
                events: vec![LedgerEvent::LatentBegin { lineage, prior_height: d }],
                t_hat: Some(embed_rat(&t_bar, chartvars, n_total)),
                deficiency_certified: None,
                branch_point: Some(bp.clone()),
            };
            let cid = self.push_problem(Some(chart_id), child)?;
            report.children.push(cid);
            spawned.push(cid);
        }
        Ok(())
    }

    /// Nonvanishing of the deficient function at the branch point and on a
    /// sampled rational box around it.
    fn deficiency_certificate(
        &self,
        redundant: &SparsePoly<C>,
        zero_rows: &[usize],
        chart_coords: &[usize],
        bp: &[(usize, C)],
    ) -> bool {
        // deficient function lives on the chart coordinates indexed by the
        // zero rows; c + r_I0 evaluated at the branch point and box samples
        let n = redundant.nvars();
        let mut deficient = SparsePoly::zero(n);
        let allowed: Vec<usize> = zero_rows.iter().map(|&r| chart_coords[r]).collect();
        for (e, c) in redundant.terms() {
            let nz: Vec<usize> = (0..n).filter(|&j| e[j] != 0).collect();
            if nz.iter().all(|j| allowed.contains(j)) {
                deficient.add_term(e.clone(), c.clone());
            }
        }
        let c0 = C::one();
        let total = deficient.add(&SparsePoly::constant(n, c0));
        let (rn, rd) = self.cfg.contraction_radius;
        let radius = Rat::new(BigInt::from(rn), BigInt::from(rd));
        let offsets = [<Rat as Zero>::zero(), radius.clone(), -radius];
        let bp_map: BTreeMap<usize, C> = bp.iter().cloned().collect();
        // every allowed coordinate ranges over point +- radius (or the box
        // around zero for coordinates without a branch value)
        let mut all_ok = true;
        let mut assignments = vec![BTreeMap::<usize, C>::new()];
        for &j in &allowed {
            let mut next = Vec::new();
            for base in &assignments {
                for off in &offsets {
                    let center = bp_map.get(&j).cloned().unwrap_or_else(C::zero);
                    let v = center.add_ref(&C::from_rat(off));
                    let mut m = base.clone();
                    m.insert(j, v);
                    next.push(m);
                }
            }
            assignments = next;
        }
        for m in assignments {
            let assign: Vec<(usize, C)> = m.into_iter().collect();
            let val = total.eval_partial(&assign);
            let constant = val.coeff(&vec![0; n]);
            if constant.is_zero() && val.used_vars().is_empty() {
                all_ok = false;
            }
        }
        all_ok
    }
}

/// Reduced branch point from a cone-chart branch point through
/// `z_i^detD = prod_j y_j^(F_ij)`; `None` when no exact root exists in the
/// field.
fn reduce_branch_point<C: Coeff>(r: &[C], f_matrix: &IntMat, det_d: &BigInt) -> Option<Vec<C>> {
    let k = f_matrix.rows();
    let e = det_d.abs().to_u32()?;
    let negative = det_d.is_negative();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut target = C::one();
        for (j, rj) in r.iter().enumerate() {
            let exp = f_matrix.at(i, j).to_i64()?;
            let base = if exp >= 0 { rj.clone() } else { rj.inv()? };
            for _ in 0..exp.unsigned_abs() {
                target = target.mul_ref(&base);
            }
        }
        if negative {
            target = target.inv()?;
        }
        out.push(target.nth_root_exact(e)?);
    }
    Some(out)
}

/// Role relabeling matching `permute_poly_coords`.
fn permute_roles<C: Coeff>(roles: &[Role<C>], perm: &[usize]) -> Vec<Role<C>> {
    perm.iter().map(|&old| roles[old].clone()).collect()
}

/// Permutation matrix `P` with `e * P = permuted e` for the ambient
/// relabeling convention used here.
fn permutation_matrix(perm: &[usize]) -> RatMat {
    let n = perm.len();
    let mut p = RatMat::zero(n, n);
    for (new, &old) in perm.iter().enumerate() {
        p.set(old, new, Rat::from_integer(1.into()));
    }
    p
}

/// Is the ambient row of the embedded matrix a standard basis vector?
fn unit_row(m: &IntMat, row: usize) -> bool {
    let mut ones = 0;
    for c in 0..m.cols() {
        let v = m.at(row, c);
        if v.is_zero() {
            continue;
        }
        if *v == BigInt::from(1) {
            ones += 1;
        } else {
            return false;
        }
    }
    ones == 1
}

fn slot_of(perm: &[usize], slot: usize) -> usize {
    perm.iter().position(|&src| src == slot).unwrap_or(slot)
}

/// Ambient permutation vector implementing the chart relabeling: slot
/// `nonlatent[i]` receives the exponent of `nonlatent[row_perm[i]]`.
fn ambient_perm(n_total: usize, nonlatent: &[usize], row_perm: &[usize]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n_total).collect();
    for (i, &p) in row_perm.iter().enumerate() {
        perm[nonlatent[i]] = nonlatent[p];
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat_int;
    use crate::poly::CF64;

    fn qp(n: usize, terms: &[(i64, &[i64])]) -> SparsePoly<Rat> {
        let owned: Vec<(Rat, &[i64])> = terms.iter().map(|(c, e)| (rat_int(*c), *e)).collect();
        SparsePoly::from_terms(n, &owned)
    }

    #[test]
    fn smooth_input_resolves_immediately() {
        let f = qp(2, &[(1, &[1, 0]), (1, &[0, 2])]);
        let tree = resolve(&f, &ResolveConfig::default()).unwrap();
        assert!(tree.all_resolved());
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn cusp_resolves_exactly() {
        let f = qp(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        let tree = resolve(&f, &ResolveConfig::default()).unwrap();
        assert!(tree.all_resolved(), "cusp must resolve in exact mode");
        tree.validate_ledger().unwrap();
        // the refined fan of the cusp has four chart cones at the root
        let root_charts = tree.nodes[0].children.len();
        assert_eq!(root_charts, 4);
        // every problem node below the root has height <= 1
        for node in tree.nodes.iter().skip(1) {
            if let NodeBody::Problem { height, .. } = node.body {
                assert!(height <= 1, "heights must drop from 2 to <= 1");
            }
        }
    }

    #[test]
    fn a1_surface_resolves_in_approx_mode() {
        let one = CF64::new(1.0, 0.0);
        let f: SparsePoly<CF64> = SparsePoly::from_terms(
            3,
            &[(one, &[2, 0, 0][..]), (one, &[0, 2, 0][..]), (one, &[0, 0, 2][..])],
        );
        let tree = resolve(&f, &ResolveConfig::default()).unwrap();
        assert!(tree.all_resolved());
        tree.validate_ledger().unwrap();
    }

    #[test]
    fn product_of_generators_examples() {
        let x1 = qp(2, &[(1, &[1, 0])]);
        let x2 = qp(2, &[(1, &[0, 1])]);
        assert_eq!(product_of_generators(&[x1.clone(), x2]), qp(2, &[(1, &[1, 1])]));
        let f = qp(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        let one = qp(2, &[(1, &[0, 0])]);
        assert_eq!(product_of_generators(&[f.clone(), one]), f);
    }


    #[test]
    fn trivial_inconsistency_with_revival() {
        // x1^2 - x2^6 (1 - x2)^2: the chart containing the first coordinate
        // ray hits a trivially inconsistent stratum with a genuine branch
        // point at x2 = 1; the primary goes latent there and must revive
        // (at the rational branch points +-1 of the revived chart)
        let f = qp(2, &[(1, &[2, 0]), (-1, &[0, 6]), (2, &[0, 7]), (-1, &[0, 8])]);
        let tree = resolve(&f, &ResolveConfig::default()).unwrap();
        tree.validate_ledger().unwrap();
        // the latent machinery must have fired
        let latent_events: usize = tree
            .nodes
            .iter()
            .filter_map(|n| match &n.body {
                NodeBody::Problem { events, .. } => Some(events.clone()),
                _ => None,
            })
            .flatten()
            .filter(|e| matches!(e, LedgerEvent::LatentBegin { .. }))
            .count();
        assert!(latent_events > 0, "expected a latent episode");
        let revivals: usize = tree
            .nodes
            .iter()
            .filter_map(|n| match &n.body {
                NodeBody::Problem { events, .. } => Some(events.clone()),
                _ => None,
            })
            .flatten()
            .filter(|e| matches!(e, LedgerEvent::SyntheticRevival { .. } | LedgerEvent::Revival { .. }))
            .count();
        assert!(revivals > 0, "expected the latent primary to revive");
        assert!(tree.all_resolved(), "every leaf must be resolved");
    }

    #[test]
    fn irregular_point_goes_latent_and_revives() {
        // Whitney-umbrella-like surface: x1^2 - x2^2 x3 has an irregular
        // branch point on the chart along the third axis
        let f = qp(3, &[(1, &[2, 0, 0]), (-1, &[0, 2, 1])]);
        let tree = resolve(&f, &ResolveConfig::default()).unwrap();
        tree.validate_ledger().unwrap();
        assert!(tree.all_resolved());
    }


    #[test]
    fn algebraic_branch_points_stop_honestly_in_exact_mode() {
        // x1^2 + x2^6 (1 - x2)^2 revives onto a chart whose branch points
        // are +-i; exact mode stops there with an explicit reason
        let f = qp(2, &[(1, &[2, 0]), (1, &[0, 6]), (-2, &[0, 7]), (1, &[0, 8])]);
        let tree = resolve(&f, &ResolveConfig::default()).unwrap();
        assert!(!tree.all_resolved());
        let stopped = tree.problem_leaves().any(|n| {
            matches!(
                n.body,
                NodeBody::Problem { ref status, .. }
                    if *status == ProblemStatus::AlgebraicBranchPoints
            )
        });
        assert!(stopped, "expected an explicit algebraic stop reason");
    }

    #[test]
    fn unsupported_dimension_is_reported() {
        let f: SparsePoly<Rat> =
            SparsePoly::from_terms(4, &[(rat_int(1), &[2, 0, 0, 0][..])]);
        assert!(matches!(
            resolve(&f, &ResolveConfig::default()),
            Err(ResolveError::UnsupportedDimension(4))
        ));
    }
}
