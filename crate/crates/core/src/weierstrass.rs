//! Preliminary reduction (shear to apex form) and Weierstrass reduction
//! (formal preparation to a truncation order, then completion of perfect
//! power).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::poly::{Coeff, PolyError, SparsePoly, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeierstrassError {
    /// The shear search ran past its cap; cannot happen for nonzero input
    /// over an infinite field, so this signals a bug.
    SearchExhausted,
    /// The division outgrew the desk-scale term budget.
    ScaleExceeded { terms: usize },
    /// `tau` below the `2d` threshold the division needs.
    TauTooSmall { tau: i64, need: i64 },
    ZeroInput,
    NotPrepared,
}

impl fmt::Display for WeierstrassError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeierstrassError::SearchExhausted => write!(f, "shear enumeration exhausted"),
            WeierstrassError::ScaleExceeded { terms } => {
                write!(f, "preparation outgrew the desk-scale term budget ({terms} terms)")
            }
            WeierstrassError::TauTooSmall { tau, need } => {
                write!(f, "truncation order {tau} below required {need}")
            }
            WeierstrassError::ZeroInput => write!(f, "zero input"),
            WeierstrassError::NotPrepared => write!(f, "input lacks the required apex term"),
        }
    }
}

impl From<PolyError> for WeierstrassError {
    fn from(_: PolyError) -> Self {
        WeierstrassError::ZeroInput
    }
}

/// Apex form: after the recorded shear, the coefficient of
/// `x_primary^height` (all other active variables zero) is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct ApexForm<C: Coeff> {
    pub poly: SparsePoly<C>,
    pub primary: usize,
    pub height: i64,
    /// `x_j <- x_j + t_j * x_primary` for the active variables `j`, in the
    /// order of `active`; invertible by negating.
    pub shear: Vec<(usize, i64)>,
}

/// Weierstrass form `poly = w * unit (mod tau)`: `w` monic of degree
/// `height` in the primary variable with coefficients vanishing at the
/// origin; the unit has a nonzero constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassForm<C: Coeff> {
    pub w: SparsePoly<C>,
    pub unit: TruncatedSeries<C>,
    pub tau: i64,
    pub primary: usize,
    pub height: i64,
    /// completion-of-perfect-power substitution `x_p <- x_p + shift`
    /// already applied to `w` and `unit` (zero when untouched)
    pub completion_shift: SparsePoly<C>,
}

/// Finds a shear making the coefficient of `x_p^d` nonzero, where
/// `d = ord(f over the active coordinates after zeroing `zeroed`)`, and the
/// primary is `active[0]`. Variables outside `active` and `zeroed` (latent
/// coefficients) ride along untouched.
pub fn preliminary_reduction<C: Coeff>(
    f: &SparsePoly<C>,
    active: &[usize],
    zeroed: &[usize],
) -> Result<ApexForm<C>, WeierstrassError> {
    let primary = active[0];
    let base = f.set_zero(zeroed);
    if base.is_zero() {
        return Err(WeierstrassError::ZeroInput);
    }
    let d = base.ord_on(active).expect("nonzero");
    let others: Vec<usize> = active[1..].to_vec();

    // lowest active-degree form of the zeroed restriction
    let lowest: Vec<(Vec<i64>, C)> = base
        .terms()
        .filter(|(e, _)| others.iter().map(|&j| e[j]).sum::<i64>() + e[primary] == d)
        .map(|(e, c)| (e.clone(), c.clone()))
        .collect();

    let apex_reached = |t: &[i64]| -> bool {
        // after x_j <- x_j + t_j x_p the coefficient of active-exponent
        // d*e_p groups by the exponents outside `active`; some group must
        // survive
        let mut groups: BTreeMap<Vec<i64>, C> = BTreeMap::new();
        for (e, c) in &lowest {
            let mut weight = c.clone();
            for (k, &j) in others.iter().enumerate() {
                for _ in 0..e[j] {
                    weight = weight.mul_ref(&C::from_i64(t[k]));
                }
            }
            if weight.is_zero() {
                continue;
            }
            let mut key = e.clone();
            key[primary] = 0;
            for &j in &others {
                key[j] = 0;
            }
            let entry = groups.entry(key).or_insert_with(C::zero);
            *entry = entry.add_ref(&weight);
        }
        groups.values().any(|v| !v.is_zero())
    };

    let mut shear_t = vec![0i64; others.len()];
    if !apex_reached(&shear_t) {
        let mut found = false;
        'search: for total in 1..=60i64 {
            let mut t = vec![0i64; others.len()];
            if signed_compositions(&mut t, 0, total, &apex_reached) {
                shear_t = t;
                found = true;
                break 'search;
            }
        }
        if !found {
            return Err(WeierstrassError::SearchExhausted);
        }
    }

    let mut poly = f.clone();
    let n = f.nvars();
    for (k, &j) in others.iter().enumerate() {
        if shear_t[k] == 0 {
            continue;
        }
        let g = SparsePoly::variable(n, j).add(&SparsePoly::monomial(
            n,
            {
                let mut e = vec![0; n];
                e[primary] = 1;
                e
            },
            C::from_i64(shear_t[k]),
        ));
        poly = poly.substitute(j, &g);
    }
    Ok(ApexForm {
        poly,
        primary,
        height: d,
        shear: others.iter().copied().zip(shear_t).collect(),
    })
}

/// Graded-lex enumeration over signed integer vectors with |t|_1 = total.
fn signed_compositions(
    t: &mut Vec<i64>,
    pos: usize,
    rest: i64,
    pred: &impl Fn(&[i64]) -> bool,
) -> bool {
    if t.is_empty() {
        return false;
    }
    if pos + 1 == t.len() {
        for cand in [rest, -rest] {
            t[pos] = cand;
            if pred(t) {
                return true;
            }
            if rest == 0 {
                break;
            }
        }
        t[pos] = 0;
        return false;
    }
    for mag in 0..=rest {
        for sign in [1i64, -1] {
            if mag == 0 && sign < 0 {
                continue;
            }
            t[pos] = sign * mag;
            if signed_compositions(t, pos + 1, rest - mag, pred) {
                return true;
            }
        }
    }
    t[pos] = 0;
    false
}

/// Splits a polynomial by total degree over the coordinates other than the
/// primary (the latent coordinates must not occur, enforced by the caller).
fn grade_by_secondary<C: Coeff>(
    f: &SparsePoly<C>,
    primary: usize,
    vars: &[usize],
) -> BTreeMap<i64, SparsePoly<C>> {
    let mut out: BTreeMap<i64, SparsePoly<C>> = BTreeMap::new();
    let secondary: Vec<usize> = vars.iter().copied().filter(|&j| j != primary).collect();
    for (e, c) in f.terms() {
        let m: i64 = secondary.iter().map(|&j| e[j]).sum();
        out.entry(m)
            .or_insert_with(|| SparsePoly::zero(f.nvars()))
            .add_term(e.clone(), c.clone());
    }
    out
}

/// Reciprocal of a polynomial in the primary variable alone with invertible
/// constant term, as a truncated series up to `x_p^bound`.
fn primary_series_inverse<C: Coeff>(
    u0: &SparsePoly<C>,
    primary: usize,
    bound: i64,
) -> SparsePoly<C> {
    let n = u0.nvars();
    let c0 = u0.coeff(&vec![0; n]);
    let c0_inv = c0.inv().expect("unit constant term");
    // direct recurrence on coefficients: inv_k determined by convolution
    // with u0
    let mut coeffs: Vec<C> = vec![C::zero(); (bound + 1) as usize];
    coeffs[0] = c0_inv.clone();
    let u_coeff = |k: i64| -> C {
        let mut e = vec![0; n];
        e[primary] = k;
        u0.coeff(&e)
    };
    for k in 1..=bound {
        let mut acc = C::zero();
        for i in 0..k {
            let c = coeffs[i as usize].clone();
            if c.is_zero() {
                continue;
            }
            acc = acc.add_ref(&c.mul_ref(&u_coeff(k - i)));
        }
        coeffs[k as usize] = acc.neg_ref().mul_ref(&c0_inv);
    }
    let mut inv = SparsePoly::zero(n);
    for (k, c) in coeffs.iter().enumerate() {
        if !c.is_zero() {
            let mut e = vec![0; n];
            e[primary] = k as i64;
            inv.add_term(e, c.clone());
        }
    }
    inv
}

/// Weierstrass preparation of an apex form to order `tau`: returns `w`
/// monic of degree `d` in the primary variable and the unit series, with
/// `poly = w * unit (mod total degree tau)`, unique to that order.
pub fn weierstrass_prepare<C: Coeff>(
    apex: &ApexForm<C>,
    vars: &[usize],
    tau: i64,
) -> Result<WeierstrassForm<C>, WeierstrassError> {
    let d = apex.height;
    if tau < 2 * d {
        return Err(WeierstrassError::TauTooSmall { tau, need: 2 * d });
    }
    let p = apex.primary;
    let n = apex.poly.nvars();
    let f = apex.poly.truncate(tau);
    let graded = grade_by_secondary(&f, p, vars);

    // degree-zero layer: pure powers of the primary variable
    let f0 = graded.get(&0).cloned().unwrap_or_else(|| SparsePoly::zero(n));
    let mut apex_exp = vec![0i64; n];
    apex_exp[p] = d;
    if f0.coeff(&apex_exp).is_zero() || f0.terms().any(|(e, _)| e[p] < d) {
        return Err(WeierstrassError::NotPrepared);
    }
    let u0 = f0.shift_exponents(&{
        let mut delta = vec![0i64; n];
        delta[p] = -d;
        delta
    });
    let u0_inv = primary_series_inverse(&u0, p, tau);

    let mut w_layers: BTreeMap<i64, SparsePoly<C>> = BTreeMap::new();
    let mut u_layers: BTreeMap<i64, SparsePoly<C>> = BTreeMap::new();
    u_layers.insert(0, u0.clone());
    let mut stored_terms = 0usize;
    const TERM_BUDGET: usize = 4000;

    let trunc_p = |g: &SparsePoly<C>| -> SparsePoly<C> {
        let mut out = SparsePoly::zero(n);
        for (e, c) in g.terms() {
            if e[p] <= tau {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    };

    for m in 1..=tau {
        let mut g = graded.get(&m).cloned().unwrap_or_else(|| SparsePoly::zero(n));
        for i in 1..m {
            let (Some(ui), Some(wj)) = (u_layers.get(&i), w_layers.get(&(m - i))) else {
                continue;
            };
            g = g.sub(&trunc_p(&ui.mul(wj)));
        }
        if g.is_zero() {
            continue;
        }
        let h = trunc_p(&u0_inv.mul(&g));
        // w layer: primary degree < d
        let mut w_m = SparsePoly::zero(n);
        for (e, c) in h.terms() {
            if e[p] < d {
                w_m.add_term(e.clone(), c.clone());
            }
        }
        let residue = g.sub(&trunc_p(&u0.mul(&w_m)));
        // residue is divisible by x_p^d up to the working truncation
        let mut u_m = SparsePoly::zero(n);
        for (e, c) in residue.terms() {
            if e[p] >= d {
                let mut ne = e.clone();
                ne[p] -= d;
                u_m.add_term(ne, c.clone());
            }
        }
        stored_terms += w_m.num_terms() + u_m.num_terms();
        let fat = w_m
            .terms()
            .chain(u_m.terms())
            .any(|(_, c)| c.bit_size() > 2048);
        if stored_terms > TERM_BUDGET || fat {
            return Err(WeierstrassError::ScaleExceeded { terms: stored_terms });
        }
        if !w_m.is_zero() {
            w_layers.insert(m, w_m);
        }
        if !u_m.is_zero() {
            u_layers.insert(m, u_m);
        }
    }

    let mut w = SparsePoly::monomial(n, apex_exp, C::one());
    // monic normalization: the degree-zero layer contributes u0 entirely to
    // the unit, so w's pure part is exactly x_p^d
    for layer in w_layers.values() {
        w = w.add(layer);
    }
    let mut u = SparsePoly::zero(n);
    for layer in u_layers.values() {
        u = u.add(layer);
    }
    let w = w.truncate(tau);
    let u = u.truncate(tau);
    Ok(WeierstrassForm {
        w,
        unit: TruncatedSeries::new(u, tau),
        tau,
        primary: p,
        height: d,
        completion_shift: SparsePoly::zero(n),
    })
}

/// Completion of perfect power: the substitution
/// `x_p <- x_p - c_1(x')/d` kills the primary-degree `d-1` term; applied to
/// both `w` and the unit and recorded for invertibility.
pub fn complete_power<C: Coeff>(wf: &WeierstrassForm<C>) -> WeierstrassForm<C> {
    let p = wf.primary;
    let d = wf.height;
    let n = wf.w.nvars();
    let c1 = wf.w.coeff_of_power(p, d - 1);
    if c1.is_zero() || d == 0 {
        return wf.clone();
    }
    let inv_d = C::from_i64(d).inv().expect("char 0");
    let shift = c1.scale(&inv_d).neg();
    let g = SparsePoly::variable(n, p).add(&shift);
    let w = wf.w.substitute_trunc(p, &g, wf.tau);
    let unit = TruncatedSeries::new(wf.unit.poly().substitute_trunc(p, &g, wf.tau), wf.tau);
    debug_assert!(w.coeff_of_power(p, d - 1).is_zero());
    WeierstrassForm {
        w,
        unit,
        tau: wf.tau,
        primary: p,
        height: d,
        completion_shift: shift,
    }
}

/// Default truncation order: enough to expose every resolution-relevant
/// term at desk scale.
pub fn default_tau<C: Coeff>(f: &SparsePoly<C>, d: i64) -> i64 {
    let deg = f.deg().unwrap_or(0);
    (4 * d).max(2 * deg).max(4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int, Rat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qp(n: usize, terms: &[(i64, &[i64])]) -> SparsePoly<Rat> {
        let owned: Vec<(Rat, &[i64])> = terms.iter().map(|(c, e)| (rat_int(*c), *e)).collect();
        SparsePoly::from_terms(n, &owned)
    }

    #[test]
    fn preliminary_reduction_examples() {
        // already apex
        let f = qp(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        assert_eq!(a.height, 2);
        assert!(a.shear.iter().all(|&(_, t)| t == 0));
        assert_eq!(a.poly, f);

        // x1 x2: shear x2 <- x2 + x1 gives x1^2 + x1 x2
        let f = qp(2, &[(1, &[1, 1])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        assert_eq!(a.height, 2);
        assert_eq!(a.poly.coeff(&[2, 0]), rat_int(1));

        // x2^2 alone: full linear search reaches the apex
        let f = qp(2, &[(1, &[0, 2])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        assert_eq!(a.height, 2);
        assert!(!a.poly.coeff(&[2, 0]).is_zero());
    }

    #[test]
    fn prepare_examples() {
        // already prepared: unit 1
        let f = qp(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        let wf = weierstrass_prepare(&a, &[0, 1], 12).unwrap();
        assert_eq!(wf.w, f);
        assert_eq!(wf.unit.poly(), &qp(2, &[(1, &[0, 0])]));

        // (1+x2) x1^2 + x2^3: w = x1^2 + x2^3 - x2^4 + x2^5 - ..., unit = 1 + x2
        let f = qp(2, &[(1, &[2, 0]), (1, &[2, 1]), (1, &[0, 3])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        let tau = 8;
        let wf = weierstrass_prepare(&a, &[0, 1], tau).unwrap();
        assert_eq!(wf.unit.poly(), &qp(2, &[(1, &[0, 0]), (1, &[0, 1])]));
        let expect = qp(
            2,
            &[(1, &[2, 0]), (1, &[0, 3]), (-1, &[0, 4]), (1, &[0, 5]), (-1, &[0, 6]), (1, &[0, 7])],
        );
        assert_eq!(wf.w, expect);

        // multiply-back modulo tau
        let back = wf.w.mul_trunc(wf.unit.poly(), tau);
        assert_eq!(back, f.truncate(tau));
    }

    #[test]
    fn prepare_multiply_back_x1sq_x1x2sq_x2_5() {
        let f = qp(2, &[(1, &[2, 0]), (1, &[1, 2]), (1, &[0, 5])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        let tau = 14;
        let wf = weierstrass_prepare(&a, &[0, 1], tau).unwrap();
        // monic, coefficients vanish at the origin
        assert_eq!(wf.w.coeff(&[2, 0]), rat_int(1));
        assert!(wf.w.coeff_of_power(0, 2).num_terms() == 1);
        for j in 1..=2 {
            let cj = wf.w.coeff_of_power(0, 2 - j);
            assert!(cj.coeff(&[0, 0]).is_zero());
        }
        let back = wf.w.mul_trunc(wf.unit.poly(), tau);
        assert_eq!(back, f.truncate(tau));
    }

    #[test]
    fn tau_threshold_enforced() {
        let f = qp(2, &[(1, &[2, 0]), (1, &[0, 3])]);
        let a = preliminary_reduction(&f, &[0, 1], &[]).unwrap();
        assert!(matches!(
            weierstrass_prepare(&a, &[0, 1], 3),
            Err(WeierstrassError::TauTooSmall { .. })
        ));
    }

    #[test]
    fn complete_power_examples() {
        // x1^2 + 2 x2 x1 + x2^3 -> shift by -x2: x1^2 + (x2^3 - x2^2)
        let w = qp(2, &[(1, &[2, 0]), (2, &[1, 1]), (1, &[0, 3])]);
        let wf = WeierstrassForm {
            w,
            unit: TruncatedSeries::new(qp(2, &[(1, &[0, 0])]), 12),
            tau: 12,
            primary: 0,
            height: 2,
            completion_shift: SparsePoly::zero(2),
        };
        let done = complete_power(&wf);
        assert_eq!(done.w, qp(2, &[(1, &[2, 0]), (1, &[0, 3]), (-1, &[0, 2])]));
        assert_eq!(done.completion_shift, qp(2, &[(-1, &[0, 1])]));

        // already completed: unchanged
        let again = complete_power(&done);
        assert_eq!(again.w, done.w);

        // cubic: x1^3 + 3 x2 x1^2 + x2^2 -> no x1^2 term after shift by -x2
        let w = qp(2, &[(1, &[3, 0]), (3, &[2, 1]), (1, &[0, 2])]);
        let wf = WeierstrassForm {
            w,
            unit: TruncatedSeries::new(qp(2, &[(1, &[0, 0])]), 12),
            tau: 12,
            primary: 0,
            height: 3,
            completion_shift: SparsePoly::zero(2),
        };
        let done = complete_power(&wf);
        assert!(done.w.coeff_of_power(0, 2).is_zero());
    }

    #[test]
    fn idempotence_and_random_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let n = rng.gen_range(2..=3usize);
            let d = rng.gen_range(1..=3i64);
            // random polynomial with a guaranteed apex term
            let mut f = SparsePoly::<Rat>::zero(n);
            let mut apex = vec![0i64; n];
            apex[0] = d;
            f.add_term(apex, rat(rng.gen_range(1..=3), 1));
            for _ in 0..rng.gen_range(0..=5) {
                let e: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
                if e.iter().sum::<i64>() < d {
                    continue;
                }
                f.add_term(e, rat_int(rng.gen_range(-3..=3)));
            }
            if f.ord().unwrap_or(0) != d {
                continue;
            }
            let vars: Vec<usize> = (0..n).collect();
            let Ok(a) = preliminary_reduction(&f, &vars, &[]) else { continue };
            if a.height != d {
                continue;
            }
            let tau = 2 * default_tau(&f, d);
            let Ok(wf) = weierstrass_prepare(&a, &vars, tau) else { continue };
            let back = wf.w.mul_trunc(wf.unit.poly(), tau);
            assert_eq!(back, a.poly.truncate(tau));

            // idempotence: preparing w again returns it with unit 1
            let wa = ApexForm {
                poly: wf.w.clone(),
                primary: 0,
                height: d,
                shear: Vec::new(),
            };
            let wf2 = weierstrass_prepare(&wa, &vars, tau).unwrap();
            assert_eq!(wf2.w, wf.w);
            assert_eq!(wf2.unit.poly(), &SparsePoly::constant(n, rat_int(1)));

            // completion kills the d-1 layer and multiply-back survives
            let done = complete_power(&wf);
            assert!(done.w.coeff_of_power(0, d - 1).is_zero());
            let lhs = done.w.mul_trunc(done.unit.poly(), tau);
            // the completed product equals the sheared input with the same
            // substitution applied
            let g = SparsePoly::variable(n, 0).add(&done.completion_shift);
            let rhs = a.poly.substitute(0, &g).truncate(tau);
            assert_eq!(lhs, rhs.truncate(tau));
        }
    }
}
