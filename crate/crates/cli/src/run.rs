//! Command-line front end: parse inputs, run the pipelines, emit JSON, DOT
//! or text reports. Outputs are byte-identical for identical inputs and
//! flags.

use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use singres_core::arith::{IntMat, Rat};
use singres_core::canonical::{
    canonical_reduce, is_consistent, verify_reduction_identity, ExceptionalIndexSet,
};
use singres_core::fan::{
    conjugate_pairs, covering_check, euler_characteristics, fan_property_holds, refine_fan,
    RefinedFan,
};
use singres_core::poly::{Coeff, SparsePoly};
use singres_core::polyhedron::{NewtonPolyhedron, Support};
use singres_core::resolve::{resolve, NodeBody, ResolveConfig, ResolutionTree};
use singres_core::weierstrass::{
    complete_power, default_tau, preliminary_reduction, weierstrass_prepare,
};

use crate::format::{complex_string, parse_poly, rat_string, to_complex};
use crate::report::{
    rat_poly_dump, tree_dump, CheckDump, CheckItem, CoveringDump,
    FanDump, PolyhedronDump,
};

/// Process outcome; the caller prints and exits.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn ok(stdout: String) -> Outcome {
    Outcome { code: 0, stdout, stderr: String::new() }
}

fn domain_err(msg: String) -> Outcome {
    Outcome { code: 1, stdout: String::new(), stderr: msg }
}

#[derive(Parser)]
#[command(name = "singres", version, about = "Exact local resolution toolkit: Newton polyhedra, unimodular fans, Weierstrass preparation, resolution trees and covering certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Approx,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Dot,
    Text,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PolySource {
    /// inline polynomial, e.g. "x1^2 + x2^3"
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    /// file containing the polynomial in the same grammar
    #[arg(long)]
    input: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct PolyInput {
    #[command(flatten)]
    source: PolySource,
    /// ambient variable count override
    #[arg(long)]
    nvars: Option<usize>,
}

impl PolyInput {
    fn load(&self) -> Result<SparsePoly<Rat>, String> {
        let text = match (&self.source.poly, &self.source.input) {
            (Some(p), None) => p.clone(),
            (None, Some(path)) => std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?,
            _ => unreachable!("clap enforces the source group"),
        };
        parse_poly(&text, self.nvars).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the Newton polyhedron and dump its facet description
    Polyhedron {
        #[command(flatten)]
        poly: PolyInput,
        #[arg(long)]
        pretty: bool,
    },
    /// Unimodular refinement of the vertex cones with Euler characteristics
    /// and conjugate pairs
    Fan {
        #[command(flatten)]
        poly: PolyInput,
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
        #[arg(long)]
        pretty: bool,
    },
    /// Apply an exponential matrix and partially factorize the total
    /// transform
    Transform {
        #[command(flatten)]
        poly: PolyInput,
        /// row-major integer matrix, e.g. "[[3,1],[2,1]]"
        #[arg(long)]
        matrix: String,
        /// exceptional indices (1-based, comma separated), e.g. "1,2"
        #[arg(long)]
        i0: String,
        /// chart vertex, e.g. "[2,0]"; defaults to the componentwise
        /// minimizer
        #[arg(long)]
        vertex: Option<String>,
        #[arg(long)]
        pretty: bool,
    },
    /// Preliminary reduction to apex form plus Weierstrass preparation
    Prepare {
        #[command(flatten)]
        poly: PolyInput,
        #[arg(long)]
        tau: Option<i64>,
        #[arg(long)]
        pretty: bool,
    },
    /// Full resolution tree
    Resolve {
        #[command(flatten)]
        poly: PolyInput,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long)]
        tau: Option<i64>,
        /// step cap per lineage; falls back to SINGRES_MAX_STEPS
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, default_value = "3")]
        slices: usize,
        /// extra branch-point candidate, comma-separated rational
        /// coordinates (repeatable), e.g. --point "1/2,-1"
        #[arg(long = "point", allow_hyphen_values = true)]
        points: Vec<String>,
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
        #[arg(long)]
        pretty: bool,
    },
    /// Covering certificate: sampled points of the punctured unit box are
    /// assigned witness adjoint sectors
    Partition {
        #[command(flatten)]
        poly: PolyInput,
        #[arg(long, default_value = "10000")]
        samples: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long)]
        pretty: bool,
    },
    /// Run the invariant suite on an input
    Check {
        #[command(flatten)]
        poly: PolyInput,
        #[arg(long)]
        pretty: bool,
    },
}

fn to_json<T: Serialize>(value: &T, pretty: bool) -> String {
    let mut s = if pretty {
        serde_json::to_string_pretty(value).expect("serializable")
    } else {
        serde_json::to_string(value).expect("serializable")
    };
    s.push('\n');
    s
}

pub fn run<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap help/version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            return Outcome { code, stdout: String::new(), stderr: e.to_string() };
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => outcome,
        Err(msg) => domain_err(msg),
    }
}

fn build_fan(p: &SparsePoly<Rat>) -> Result<(NewtonPolyhedron, RefinedFan), String> {
    let support =
        Support::new(p.nvars(), p.support()).map_err(|e| e.to_string())?;
    let np = NewtonPolyhedron::build(&support).map_err(|e| e.to_string())?;
    let fan = refine_fan(&np).map_err(|e| e.to_string())?;
    Ok((np, fan))
}

fn dispatch(cmd: Command) -> Result<Outcome, String> {
    match cmd {
        Command::Polyhedron { poly, pretty } => {
            let p = poly.load()?;
            let support =
                Support::new(p.nvars(), p.support()).map_err(|e| e.to_string())?;
            let np = NewtonPolyhedron::build(&support).map_err(|e| e.to_string())?;
            Ok(ok(to_json(&PolyhedronDump::new(&np), pretty)))
        }
        Command::Fan { poly, output, pretty } => {
            let p = poly.load()?;
            let (_, fan) = build_fan(&p)?;
            let pairs = conjugate_pairs(&fan);
            let chi = euler_characteristics(&fan.section);
            match output {
                Output::Dot => Ok(ok(fan_dual_dot(&fan, &pairs))),
                _ => Ok(ok(to_json(&FanDump::new(&fan, &pairs, &chi), pretty))),
            }
        }
        Command::Transform { poly, matrix, i0, vertex, pretty } => {
            let p = poly.load()?;
            let n = p.nvars();
            let rows: Vec<Vec<i64>> =
                serde_json::from_str(&matrix).map_err(|e| format!("bad --matrix: {e}"))?;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(format!("matrix must be {n}x{n}"));
            }
            let flat: Vec<i64> = rows.iter().flatten().copied().collect();
            let m = IntMat::from_i64(n, n, &flat);
            let i0: Vec<usize> = i0
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .ok()
                        .and_then(|v| v.checked_sub(1))
                        .ok_or_else(|| format!("bad --i0 entry `{t}`"))
                })
                .collect::<Result<_, _>>()?;
            if i0.iter().any(|&j| j >= n) {
                return Err("--i0 index out of range".into());
            }
            let total = p.monomial_transform(&m).map_err(|e| e.to_string())?;
            let gamma_full: Vec<i64> = match vertex {
                Some(v) => {
                    let a: Vec<i64> =
                        serde_json::from_str(&v).map_err(|e| format!("bad --vertex: {e}"))?;
                    if a.len() != n {
                        return Err(format!("vertex must have {n} entries"));
                    }
                    m.apply_row(&a).map_err(|e| e.to_string())?
                }
                None => (0..n)
                    .map(|j| total.terms().map(|(e, _)| e[j]).min().unwrap_or(0))
                    .collect(),
            };
            let partial =
                total.extract_factor(&gamma_full, &i0).map_err(|e| e.to_string())?;
            let proper = partial.set_zero(&i0);
            #[derive(Serialize)]
            struct TransformDump {
                total: crate::report::PolyDump,
                exceptional_indices: Vec<usize>,
                exceptional_exponents: Vec<i64>,
                partial: crate::report::PolyDump,
                proper: crate::report::PolyDump,
            }
            let dump = TransformDump {
                total: rat_poly_dump(&total),
                exceptional_indices: i0.iter().map(|&j| j + 1).collect(),
                exceptional_exponents: i0.iter().map(|&j| gamma_full[j]).collect(),
                partial: rat_poly_dump(&partial),
                proper: rat_poly_dump(&proper),
            };
            Ok(ok(to_json(&dump, pretty)))
        }
        Command::Prepare { poly, tau, pretty } => {
            let p = poly.load()?;
            let vars: Vec<usize> = (0..p.nvars()).collect();
            let apex = preliminary_reduction(&p, &vars, &[]).map_err(|e| e.to_string())?;
            let tau = tau.unwrap_or_else(|| default_tau(&p, apex.height));
            let wf = weierstrass_prepare(&apex, &vars, tau).map_err(|e| e.to_string())?;
            let done = complete_power(&wf);
            #[derive(Serialize)]
            struct PrepareDump {
                height: i64,
                shear: Vec<(usize, i64)>,
                apex_form: crate::report::PolyDump,
                w: crate::report::PolyDump,
                unit: crate::report::PolyDump,
                completion_shift: crate::report::PolyDump,
                tau: i64,
            }
            let dump = PrepareDump {
                height: apex.height,
                shear: apex.shear.iter().map(|&(j, t)| (j + 1, t)).collect(),
                apex_form: rat_poly_dump(&apex.poly),
                w: rat_poly_dump(&done.w),
                unit: rat_poly_dump(done.unit.poly()),
                completion_shift: rat_poly_dump(&done.completion_shift),
                tau,
            };
            Ok(ok(to_json(&dump, pretty)))
        }
        Command::Resolve { poly, mode, tau, max_steps, slices, points, output, pretty } => {
            let p = poly.load()?;
            let max_steps = max_steps
                .or_else(|| {
                    std::env::var("SINGRES_MAX_STEPS").ok().and_then(|v| v.parse().ok())
                })
                .unwrap_or(64);
            let user_points: Vec<Vec<Rat>> = points
                .iter()
                .map(|spec| {
                    spec.split(',')
                        .map(|t| crate::format::parse_rat(t).map_err(|e| e.to_string()))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?;
            let cfg = ResolveConfig {
                tau,
                max_steps,
                slice_count: slices,
                user_points,
                ..ResolveConfig::default()
            };
            match mode {
                Mode::Exact => {
                    let tree = resolve(&p, &cfg).map_err(|e| e.to_string())?;
                    emit_tree(&tree, "exact", &|c: &Rat| rat_string(c), output, pretty)
                }
                Mode::Approx => {
                    let pc = to_complex(&p);
                    let tree = resolve(&pc, &cfg).map_err(|e| e.to_string())?;
                    emit_tree(&tree, "approx", &complex_string, output, pretty)
                }
            }
        }
        Command::Partition { poly, samples, seed, pretty } => {
            let p = poly.load()?;
            let (_, fan) = build_fan(&p)?;
            let pts = sample_torus_box(p.nvars(), samples, seed);
            let rep = covering_check(&fan, &pts).map_err(|e| e.to_string())?;
            let dump = CoveringDump {
                cones: fan.cones.len(),
                samples: rep.samples,
                covered: rep.witnesses.len(),
                complete: rep.witnesses.len() == rep.samples,
                witnesses: rep.witnesses,
            };
            Ok(ok(to_json(&dump, pretty)))
        }
        Command::Check { poly, pretty } => {
            let p = poly.load()?;
            let dump = run_checks(&p)?;
            let code = if dump.pass { 0 } else { 1 };
            Ok(Outcome { code, stdout: to_json(&dump, pretty), stderr: String::new() })
        }
    }
}

fn emit_tree<C: Coeff>(
    tree: &ResolutionTree<C>,
    mode: &str,
    show: &dyn Fn(&C) -> String,
    output: Output,
    pretty: bool,
) -> Result<Outcome, String> {
    match output {
        Output::Json => Ok(ok(to_json(&tree_dump(tree, mode, show), pretty))),
        Output::Dot => Ok(ok(tree_dot(tree))),
        Output::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "resolution tree: {} nodes, {} charts, resolved: {}",
                tree.nodes.len(),
                tree.chart_count(),
                tree.all_resolved()
            );
            for n in &tree.nodes {
                match &n.body {
                    NodeBody::Problem { height, lineage, status, .. } => {
                        let _ = writeln!(
                            s,
                            "problem {} (parent {:?}): lineage {}, height {}, {}",
                            n.id,
                            n.parent,
                            lineage,
                            height,
                            crate::report::status_string(status)
                        );
                    }
                    NodeBody::Chart { vertex, strata, .. } => {
                        let live: usize = strata.iter().map(|st| st.children.len()).sum();
                        let _ = writeln!(
                            s,
                            "chart {} (parent {:?}): vertex {:?}, {} strata, {} children",
                            n.id,
                            n.parent,
                            vertex,
                            strata.len(),
                            live
                        );
                    }
                }
            }
            Ok(ok(s))
        }
    }
}

/// Deterministic rational samples of the punctured unit box.
pub fn sample_torus_box(n: usize, count: usize, seed: u64) -> Vec<Vec<Rat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = Vec::with_capacity(n);
        for _ in 0..n {
            let num: i64 = rng.gen_range(1..=64);
            let sign: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
            x.push(Rat::new(BigInt::from(sign * num), BigInt::from(64)));
        }
        out.push(x);
    }
    out
}

/// DOT rendering of the section complex's dual graph: one node per refined
/// cone, one edge per conjugate pair.
pub fn fan_dual_dot(fan: &RefinedFan, pairs: &[singres_core::fan::ConjugatePair]) -> String {
    let mut s = String::from("graph section_dual {\n");
    for (i, c) in fan.cones.iter().enumerate() {
        let gens: Vec<String> = c.generators.iter().map(|g| format!("{g:?}")).collect();
        let _ = writeln!(s, "  c{} [label=\"{}\"];", i, gens.join(" "));
    }
    for p in pairs {
        let _ = writeln!(s, "  c{} -- c{};", p.cones.0, p.cones.1);
    }
    s.push_str("}\n");
    s
}

/// DOT rendering of a resolution tree.
pub fn tree_dot<C: Coeff>(tree: &ResolutionTree<C>) -> String {
    let mut s = String::from("digraph resolution {\n");
    for n in &tree.nodes {
        match &n.body {
            NodeBody::Problem { height, status, .. } => {
                let _ = writeln!(
                    s,
                    "  n{} [shape=ellipse label=\"P{} h={} {}\"];",
                    n.id,
                    n.id,
                    height,
                    crate::report::status_string(status)
                );
            }
            NodeBody::Chart { vertex, .. } => {
                let _ = writeln!(
                    s,
                    "  n{} [shape=box label=\"chart {} v={:?}\"];",
                    n.id, n.id, vertex
                );
            }
        }
    }
    for n in &tree.nodes {
        for &c in &n.children {
            let _ = writeln!(s, "  n{} -> n{};", n.id, c);
        }
    }
    s.push_str("}\n");
    s
}

/// The invariant suite of the `check` subcommand.
fn run_checks(p: &SparsePoly<Rat>) -> Result<CheckDump, String> {
    let mut checks: Vec<CheckItem> = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(CheckItem { name: name.into(), pass, detail });
    };

    let support = Support::new(p.nvars(), p.support()).map_err(|e| e.to_string())?;
    let np = NewtonPolyhedron::build(&support).map_err(|e| e.to_string())?;
    let fan = refine_fan(&np).map_err(|e| e.to_string())?;
    let n = np.n();

    // halfspace reconstruction
    {
        let s2 = Support::new(n, np.vertices().to_vec()).map_err(|e| e.to_string())?;
        let np2 = NewtonPolyhedron::build(&s2).map_err(|e| e.to_string())?;
        let pass = np2.normals() == np.normals() && np2.offsets() == np.offsets();
        push("halfspace-reconstruction", pass, format!("{} normals", np.normals().len()));
    }

    // unimodularity
    {
        let pass = fan
            .cones
            .iter()
            .all(|c| c.matrix.det().map(|d| d == BigInt::from(1)).unwrap_or(false));
        push("unimodular-refinement", pass, format!("{} cones", fan.cones.len()));
    }

    // fan property
    {
        let pass = fan_property_holds(&fan);
        push("fan-property", pass, "pairwise common-face intersections".into());
    }

    // Euler characteristics
    {
        let chi = euler_characteristics(&fan.section);
        let want = 1 + if n % 2 == 0 { 1 } else { -1 };
        let pass = chi.chi_total == 1 && chi.chi_boundary == want;
        push(
            "euler-characteristics",
            pass,
            format!("chi={} boundary={} (want 1, {})", chi.chi_total, chi.chi_boundary, want),
        );
    }

    // conjugate pairs
    {
        let pairs = conjugate_pairs(&fan);
        let chi = euler_characteristics(&fan.section);
        let interior = if n >= 2 { chi.b_interior[n - 2] } else { 0 };
        let neg_ok = pairs.iter().all(|pr| {
            pr.adjoint_vectors.0.iter().zip(&pr.adjoint_vectors.1).all(|(a, b)| *a == -b)
        });
        let pass = neg_ok && pairs.len() as u64 == interior;
        push(
            "conjugate-pairs",
            pass,
            format!("{} pairs over {} interior facets", pairs.len(), interior),
        );
    }

    // covering certificate on a seeded batch
    {
        let samples = sample_torus_box(n, 200, 0);
        let pass = covering_check(&fan, &samples)
            .map(|r| r.witnesses.len() == 200)
            .unwrap_or(false);
        push("adjoint-sector-covering", pass, "200 seeded samples".into());
    }

    // Weierstrass multiply-back
    {
        let vars: Vec<usize> = (0..n).collect();
        match preliminary_reduction(p, &vars, &[]) {
            Err(e) => push("weierstrass-multiply-back", false, e.to_string()),
            Ok(apex) => {
                let tau = default_tau(p, apex.height);
                match weierstrass_prepare(&apex, &vars, tau) {
                    Err(e) => push("weierstrass-multiply-back", false, e.to_string()),
                    Ok(wf) => {
                        let done = complete_power(&wf);
                        let back = wf.w.mul_trunc(wf.unit.poly(), tau);
                        let monic_ok = {
                            let mut apex_e = vec![0i64; n];
                            apex_e[done.primary] = done.height;
                            done.w.coeff(&apex_e) == <Rat as Coeff>::one()
                        };
                        let no_dm1 = done.w.coeff_of_power(done.primary, done.height - 1).is_zero();
                        let pass = back == apex.poly.truncate(tau) && monic_ok && no_dm1;
                        push(
                            "weierstrass-multiply-back",
                            pass,
                            format!("tau={tau}, height={}", apex.height),
                        );
                    }
                }
            }
        }
    }

    // canonical-reduction identities on every consistent chart stratum
    {
        let mut tested = 0usize;
        let mut pass = true;
        for rc in &fan.cones {
            for mask in 1u32..(1 << n) {
                let i0: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
                if i0.len() == n {
                    continue;
                }
                let iset = ExceptionalIndexSet::new(n, i0);
                if !is_consistent(&rc.matrix, &iset, 0) {
                    continue;
                }
                match canonical_reduce(&rc.matrix, &iset, 0) {
                    Ok(cr) => {
                        tested += 1;
                        if cr.det_d.is_zero()
                            || cr.f_matrix.det().map(|d| d.is_zero()).unwrap_or(true)
                            || !verify_reduction_identity(&cr)
                        {
                            pass = false;
                        }
                    }
                    Err(_) => pass = false,
                }
            }
        }
        push("canonical-reduction-identities", pass, format!("{tested} strata"));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(CheckDump { pass, checks })
}

use num_traits::Zero;
