//! JSON report shapes. Rationals travel as `p` / `p/q` strings, matrices as
//! row arrays; field order is fixed so identical inputs give identical
//! bytes.

use serde::Serialize;
use singres_core::arith::{IntMat, Rat, RatMat};
use singres_core::fan::{ConjugatePair, EulerReport, RefinedFan};
use singres_core::poly::{Coeff, SparsePoly};
use singres_core::polyhedron::NewtonPolyhedron;
use singres_core::resolve::{
    LedgerEvent, NodeBody, ProblemStatus, ResolutionTree, Role, StratumNote, StratumReport,
};

use crate::format::rat_string;

#[derive(Serialize)]
pub struct PolyhedronDump {
    pub n: usize,
    pub normals: Vec<Vec<i64>>,
    pub offsets: Vec<i64>,
    pub vertices: Vec<Vec<i64>>,
}

impl PolyhedronDump {
    pub fn new(np: &NewtonPolyhedron) -> Self {
        PolyhedronDump {
            n: np.n(),
            normals: np.normals().to_vec(),
            offsets: np.offsets().to_vec(),
            vertices: np.vertices().to_vec(),
        }
    }
}

#[derive(Serialize)]
pub struct TermDump {
    pub c: String,
    pub e: Vec<i64>,
}

#[derive(Serialize)]
pub struct PolyDump {
    pub n: usize,
    pub terms: Vec<TermDump>,
}

pub fn poly_dump<C: Coeff>(p: &SparsePoly<C>, show: &dyn Fn(&C) -> String) -> PolyDump {
    PolyDump {
        n: p.nvars(),
        terms: p.terms().map(|(e, c)| TermDump { c: show(c), e: e.clone() }).collect(),
    }
}

pub fn rat_poly_dump(p: &SparsePoly<Rat>) -> PolyDump {
    poly_dump(p, &|c| rat_string(c))
}

pub fn int_mat_rows(m: &IntMat) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|x| x.to_string()).collect())
        .collect()
}

pub fn rat_mat_rows(m: &RatMat) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(rat_string).collect())
        .collect()
}

#[derive(Serialize)]
pub struct ConeDump {
    pub vertex: Vec<i64>,
    pub generators: Vec<Vec<i64>>,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Serialize)]
pub struct PairDump {
    pub facet: Vec<Vec<i64>>,
    pub cones: (usize, usize),
    pub adjoint: (Vec<i64>, Vec<i64>),
    /// 1-based adjoint variable indices within each chart
    pub variables: (usize, usize),
}

#[derive(Serialize)]
pub struct ChiDump {
    pub chi: i64,
    pub chi_boundary: i64,
    pub b_total: Vec<u64>,
    pub b_boundary: Vec<u64>,
    pub b_interior: Vec<u64>,
}

#[derive(Serialize)]
pub struct FanDump {
    pub cones: Vec<ConeDump>,
    pub pairs: Vec<PairDump>,
    pub chi: ChiDump,
}

impl FanDump {
    pub fn new(fan: &RefinedFan, pairs: &[ConjugatePair], chi: &EulerReport) -> Self {
        FanDump {
            cones: fan
                .cones
                .iter()
                .map(|c| ConeDump {
                    vertex: c.vertex.clone(),
                    generators: c.generators.clone(),
                    matrix: int_mat_rows(&c.matrix),
                })
                .collect(),
            pairs: pairs
                .iter()
                .map(|p| PairDump {
                    facet: p.facet_rays.clone(),
                    cones: p.cones,
                    adjoint: p.adjoint_vectors.clone(),
                    variables: (p.variable_indices.0 + 1, p.variable_indices.1 + 1),
                })
                .collect(),
            chi: ChiDump {
                chi: chi.chi_total,
                chi_boundary: chi.chi_boundary,
                b_total: chi.b_total.clone(),
                b_boundary: chi.b_boundary.clone(),
                b_interior: chi.b_interior.clone(),
            },
        }
    }
}

#[derive(Serialize)]
pub struct SyntheticDump {
    pub n_bar: Vec<Vec<String>>,
    pub s_bar: Vec<Vec<String>>,
    pub t_bar: Vec<Vec<String>>,
    pub verdicts: Vec<(u32, bool)>,
    pub nesting_degree: u32,
    pub revival: bool,
}

#[derive(Serialize)]
pub struct StratumDump {
    /// 1-based chart variable indices
    pub i0: Vec<usize>,
    pub consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_d: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction_matrix: Option<Vec<Vec<String>>>,
    pub deficient: Vec<usize>,
    pub children: Vec<usize>,
    pub note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticDump>,
}

fn stratum_dump(s: &StratumReport) -> StratumDump {
    StratumDump {
        i0: s.i0.iter().map(|&j| j + 1).collect(),
        consistent: s.consistent,
        det_d: s.det_d.as_ref().map(|d| d.to_string()),
        reduction_matrix: s.f_matrix.as_ref().map(int_mat_rows),
        deficient: s.deficient.clone(),
        children: s.children.clone(),
        note: match s.note {
            StratumNote::Codim0 => "codim0".into(),
            StratumNote::Plain => "plain".into(),
            StratumNote::AlgebraicIncomplete => "algebraic-incomplete".into(),
            StratumNote::Sampled => "sampled".into(),
        },
        synthetic: s.synthetic.as_ref().map(|q| SyntheticDump {
            n_bar: int_mat_rows(&q.n_bar),
            s_bar: rat_mat_rows(&q.s_bar),
            t_bar: rat_mat_rows(&q.t_bar),
            verdicts: q.verdicts.clone(),
            nesting_degree: q.nesting_degree,
            revival: q.revival,
        }),
    }
}

#[derive(Serialize)]
pub struct EventDump {
    pub kind: String,
    pub lineage: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_height: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_order: Option<i64>,
}

fn event_dump(e: &LedgerEvent) -> EventDump {
    match e {
        LedgerEvent::Height { lineage, height } => EventDump {
            kind: "height".into(),
            lineage: *lineage,
            height: Some(*height),
            prior_height: None,
            residual_order: None,
        },
        LedgerEvent::LatentBegin { lineage, prior_height } => EventDump {
            kind: "latent-begin".into(),
            lineage: *lineage,
            height: None,
            prior_height: Some(*prior_height),
            residual_order: None,
        },
        LedgerEvent::Revival { lineage, prior_height, residual_order } => EventDump {
            kind: "revival".into(),
            lineage: *lineage,
            height: None,
            prior_height: Some(*prior_height),
            residual_order: Some(*residual_order),
        },
        LedgerEvent::SyntheticRevival { lineage, prior_height } => EventDump {
            kind: "synthetic-revival".into(),
            lineage: *lineage,
            height: None,
            prior_height: Some(*prior_height),
            residual_order: None,
        },
    }
}

#[derive(Serialize)]
pub struct NodeDump {
    pub id: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    pub kind: String,
    pub children: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lineage: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roles: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<PolyDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weierstrass: Option<PolyDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_point: Option<Vec<(usize, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<EventDump>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deficiency_certified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strata: Option<Vec<StratumDump>>,
}

#[derive(Serialize)]
pub struct TreeDump {
    pub mode: String,
    pub resolved: bool,
    pub charts: usize,
    pub nodes: Vec<NodeDump>,
}

pub fn status_string(s: &ProblemStatus) -> String {
    match s {
        ProblemStatus::Expanded => "expanded".into(),
        ProblemStatus::Resolved => "resolved".into(),
        ProblemStatus::AlgebraicBranchPoints => "algebraic-branch-points".into(),
        ProblemStatus::StepCapExceeded => "step-cap-exceeded".into(),
        ProblemStatus::ScaleCapExceeded => "scale-cap-exceeded".into(),
        ProblemStatus::SyntheticAnalysis => "synthetic-analysis".into(),
    }
}

pub fn tree_dump<C: Coeff>(
    tree: &ResolutionTree<C>,
    mode: &str,
    show: &dyn Fn(&C) -> String,
) -> TreeDump {
    let nodes = tree
        .nodes
        .iter()
        .map(|n| match &n.body {
            NodeBody::Problem {
                f,
                roles,
                lineage,
                height,
                status,
                events,
                deficiency_certified,
                branch_point,
                weierstrass,
                ..
            } => NodeDump {
                id: n.id,
                parent: n.parent,
                kind: "problem".into(),
                children: n.children.clone(),
                status: Some(status_string(status)),
                lineage: Some(*lineage),
                height: Some(*height),
                roles: Some(
                    roles
                        .iter()
                        .map(|r| match r {
                            Role::Active => "active".into(),
                            Role::ExceptionalBorn => "exceptional".into(),
                            Role::LatentPinned { prior_height, .. } => {
                                format!("latent-pinned(prior={prior_height})")
                            }
                            Role::LatentPrimary { nesting, prior_height, .. } => {
                                format!("latent-primary(nesting={nesting},prior={prior_height})")
                            }
                        })
                        .collect(),
                ),
                transform: Some(poly_dump(f, show)),
                weierstrass: weierstrass.as_ref().map(|w| poly_dump(w, show)),
                branch_point: branch_point.as_ref().map(|bp| {
                    bp.iter().map(|(j, v)| (j + 1, show(v))).collect()
                }),
                events: Some(events.iter().map(event_dump).collect()),
                deficiency_certified: *deficiency_certified,
                vertex: None,
                matrix: None,
                strata: None,
            },
            NodeBody::Chart { vertex, matrix, strata } => NodeDump {
                id: n.id,
                parent: n.parent,
                kind: "chart".into(),
                children: n.children.clone(),
                status: None,
                lineage: None,
                height: None,
                roles: None,
                transform: None,
                weierstrass: None,
                branch_point: None,
                events: None,
                deficiency_certified: None,
                vertex: Some(vertex.clone()),
                matrix: Some(int_mat_rows(matrix)),
                strata: Some(strata.iter().map(stratum_dump).collect()),
            },
        })
        .collect();
    TreeDump {
        mode: mode.into(),
        resolved: tree.all_resolved(),
        charts: tree.chart_count(),
        nodes,
    }
}

#[derive(Serialize)]
pub struct CoveringDump {
    pub cones: usize,
    pub samples: usize,
    pub covered: usize,
    pub complete: bool,
    pub witnesses: Vec<usize>,
}

#[derive(Serialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct CheckDump {
    pub pass: bool,
    pub checks: Vec<CheckItem>,
}
