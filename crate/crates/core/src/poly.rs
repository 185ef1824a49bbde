//! Sparse exact multivariate polynomials / truncated series and the
//! transform-side operations: monomial substitution, partial factorization,
//! proper transforms, localization (exact Taylor shift) and univariate
//! branch-point extraction.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{ArithError, IntMat, Rat, RatMat};

/// Exponent vectors are dense `i64` rows; desk-scale inputs never approach
/// the overflow bound and intermediate Laurent exponents stay representable.
pub type Exp = Vec<i64>;

pub type CF64 = Complex<f64>;

/// Zero tolerance of the approximate complex mode.
pub const APPROX_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    Dimension { expected: usize, got: usize },
    ZeroPolynomial,
    /// A rational exponential matrix sent a support point to a fractional image.
    FractionalExponent,
    /// Partial factorization asked for a vertex that is not minimal on the chart.
    ChartMismatch,
    ZeroAssignment,
    NotUnivariate,
    Arith(ArithError),
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            PolyError::ZeroPolynomial => write!(f, "operation undefined for the zero polynomial"),
            PolyError::FractionalExponent => {
                write!(f, "monomial transform produced a fractional exponent")
            }
            PolyError::ChartMismatch => {
                write!(f, "vertex is not componentwise-minimal on the exceptional columns")
            }
            PolyError::ZeroAssignment => write!(f, "branch points must have nonzero coordinates"),
            PolyError::NotUnivariate => write!(f, "polynomial is not univariate"),
            PolyError::Arith(e) => write!(f, "{e}"),
        }
    }
}

impl From<ArithError> for PolyError {
    fn from(e: ArithError) -> Self {
        PolyError::Arith(e)
    }
}

/// Outcome of nonzero-root extraction for a univariate polynomial. In exact
/// mode `complete == false` flags that algebraic (non-rational) roots exist
/// beyond the ones listed.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSearch<C> {
    pub roots: Vec<(C, usize)>,
    pub complete: bool,
}

/// Field scalar for polynomial coefficients; implemented by exact rationals
/// and by complex doubles with the fixed tolerance [`APPROX_EPS`].
pub trait Coeff: Clone + PartialEq + fmt::Debug + 'static {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;
    fn from_rat(r: &Rat) -> Self;
    fn from_i64(v: i64) -> Self;
    /// All nonzero roots of `coeffs[0] + coeffs[1] y + ...`, with multiplicity.
    fn nonzero_univariate_roots(coeffs: &[Self]) -> RootSearch<Self>;
    /// An exact `e`-th root within the field, when one exists (`None` in
    /// the approximate mode, where the reduction detour is not taken).
    fn nth_root_exact(&self, e: u32) -> Option<Self>;
    /// Storage size in bits, for desk-scale growth guards.
    fn bit_size(&self) -> usize;
}

impl Coeff for Rat {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self.clone()
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn from_i64(v: i64) -> Self {
        Rat::from_integer(BigInt::from(v))
    }
    fn nonzero_univariate_roots(coeffs: &[Self]) -> RootSearch<Self> {
        rational_nonzero_roots(coeffs)
    }
    fn bit_size(&self) -> usize {
        (self.numer().bits() + self.denom().bits()) as usize
    }
    fn nth_root_exact(&self, e: u32) -> Option<Self> {
        if e == 0 {
            return None;
        }
        if e == 1 {
            return Some(self.clone());
        }
        let num = self.numer();
        let den = self.denom();
        if num.is_negative() && e % 2 == 0 {
            return None;
        }
        let pn = num.abs().nth_root(e);
        let pd = den.nth_root(e);
        if num_traits::pow(pn.clone(), e as usize) != num.abs()
            || num_traits::pow(pd.clone(), e as usize) != *den
        {
            return None;
        }
        let signed = if num.is_negative() { -pn } else { pn };
        Some(Rat::new(signed, pd))
    }
}

impl Coeff for CF64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.norm_sqr() <= APPROX_EPS * APPROX_EPS
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            None
        } else {
            Some(Complex::new(1.0, 0.0) / self)
        }
    }
    fn from_rat(r: &Rat) -> Self {
        let num = r.numer().to_f64().unwrap_or(f64::NAN);
        let den = r.denom().to_f64().unwrap_or(f64::NAN);
        Complex::new(num / den, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }
    fn nonzero_univariate_roots(coeffs: &[Self]) -> RootSearch<Self> {
        complex_nonzero_roots(coeffs)
    }
    fn nth_root_exact(&self, _e: u32) -> Option<Self> {
        None
    }
    fn bit_size(&self) -> usize {
        128
    }
}

/// Sparse multivariate polynomial with deterministic (lexicographic) term
/// order. Input polynomials have exponents in N^n; Laurent exponents show up
/// only transiently inside rational monomial transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoly<C: Coeff> {
    n: usize,
    terms: BTreeMap<Exp, C>,
}

impl<C: Coeff> SparsePoly<C> {
    pub fn zero(n: usize) -> Self {
        SparsePoly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: C) -> Self {
        let mut p = Self::zero(n);
        if !c.is_zero() {
            p.terms.insert(vec![0; n], c);
        }
        p
    }

    pub fn monomial(n: usize, exp: Exp, c: C) -> Self {
        assert_eq!(exp.len(), n);
        let mut p = Self::zero(n);
        if !c.is_zero() {
            p.terms.insert(exp, c);
        }
        p
    }

    pub fn variable(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        Self::monomial(n, e, C::one())
    }

    pub fn from_terms(n: usize, terms: &[(C, &[i64])]) -> Self {
        let mut p = Self::zero(n);
        for (c, e) in terms {
            assert_eq!(e.len(), n);
            p.add_term(e.to_vec(), c.clone());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &[i64]) -> C {
        self.terms.get(exp).cloned().unwrap_or_else(C::zero)
    }

    pub fn support(&self) -> Vec<Exp> {
        self.terms.keys().cloned().collect()
    }

    pub fn has_negative_exponents(&self) -> bool {
        self.terms.keys().any(|e| e.iter().any(|&x| x < 0))
    }

    pub fn add_term(&mut self, exp: Exp, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(existing) => {
                let sum = existing.add_ref(&c);
                if sum.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.neg_ref());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c.neg_ref());
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.n);
        if c.is_zero() {
            return out;
        }
        for (e, v) in &self.terms {
            let w = v.mul_ref(c);
            if !w.is_zero() {
                out.terms.insert(e.clone(), w);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.mul_ref(cb));
            }
        }
        out
    }

    /// Product truncated at total degree `tau` (terms of degree >= tau drop).
    pub fn mul_trunc(&self, other: &Self, tau: i64) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            let da: i64 = ea.iter().sum();
            for (eb, cb) in &other.terms {
                let db: i64 = eb.iter().sum();
                if da + db >= tau {
                    continue;
                }
                let e: Exp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.mul_ref(cb));
            }
        }
        out
    }

    pub fn truncate(&self, tau: i64) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e.iter().sum::<i64>() < tau {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn shift_exponents(&self, delta: &[i64]) -> Self {
        assert_eq!(delta.len(), self.n);
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            let ne: Exp = e.iter().zip(delta).map(|(a, b)| a + b).collect();
            out.terms.insert(ne, c.clone());
        }
        out
    }

    /// Minimal total degree over the support; the zero polynomial has none.
    pub fn ord(&self) -> Result<i64, PolyError> {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<i64>())
            .min()
            .ok_or(PolyError::ZeroPolynomial)
    }

    pub fn deg(&self) -> Result<i64, PolyError> {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<i64>())
            .max()
            .ok_or(PolyError::ZeroPolynomial)
    }

    /// Minimal total degree counting only the listed coordinates.
    pub fn ord_on(&self, coords: &[usize]) -> Option<i64> {
        self.terms
            .keys()
            .map(|e| coords.iter().map(|&j| e[j]).sum::<i64>())
            .min()
    }

    /// Degree in a single variable.
    pub fn deg_in(&self, j: usize) -> Option<i64> {
        self.terms.keys().map(|e| e[j]).max()
    }

    /// Coefficient of `x_j^k` as a polynomial in the remaining variables
    /// (same ambient variable count; coordinate `j` flattened to zero).
    pub fn coeff_of_power(&self, j: usize, k: i64) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[j] == k {
                let mut ne = e.clone();
                ne[j] = 0;
                out.terms.insert(ne, c.clone());
            }
        }
        out
    }

    /// Keeps the terms whose exponent at `j` equals `k` (exponent retained).
    pub fn slice_power(&self, j: usize, k: i64) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[j] == k {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn derivative(&self, j: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[j] -= 1;
            out.add_term(ne, c.mul_ref(&C::from_i64(e[j])));
        }
        out
    }

    /// Exponent action of an integer exponential matrix: `e -> e * m`.
    pub fn monomial_transform(&self, m: &IntMat) -> Result<Self, PolyError> {
        if m.rows() != self.n {
            return Err(PolyError::Dimension { expected: self.n, got: m.rows() });
        }
        let mut out = Self::zero(m.cols());
        for (e, c) in &self.terms {
            out.add_term(m.apply_row(e)?, c.clone());
        }
        Ok(out)
    }

    /// Exponent action of a rational exponential matrix; every support point
    /// must land on an integer image.
    pub fn monomial_transform_rat(&self, m: &RatMat) -> Result<Self, PolyError> {
        if m.rows() != self.n {
            return Err(PolyError::Dimension { expected: self.n, got: m.rows() });
        }
        let mut out = Self::zero(m.cols());
        for (e, c) in &self.terms {
            match m.apply_row_integral(e)? {
                Some(ne) => out.add_term(ne, c.clone()),
                None => return Err(PolyError::FractionalExponent),
            }
        }
        Ok(out)
    }

    /// Splits `self = x_I0^(gamma|I0) * p`: subtracts `gamma` on the `i0`
    /// coordinates after checking that `gamma` is componentwise minimal there.
    pub fn extract_factor(&self, gamma: &[i64], i0: &[usize]) -> Result<Self, PolyError> {
        if gamma.len() != self.n {
            return Err(PolyError::Dimension { expected: self.n, got: gamma.len() });
        }
        for e in self.terms.keys() {
            if i0.iter().any(|&j| e[j] < gamma[j]) {
                return Err(PolyError::ChartMismatch);
            }
        }
        let mut delta = vec![0i64; self.n];
        for &j in i0 {
            delta[j] = -gamma[j];
        }
        Ok(self.shift_exponents(&delta))
    }

    /// Sets the listed coordinates to zero: drops every term with a positive
    /// exponent there.
    pub fn set_zero(&self, coords: &[usize]) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if coords.iter().all(|&j| e[j] == 0) {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Substitutes the polynomial `g` for the variable `x_j`, treating `self`
    /// as a univariate polynomial in `x_j` and evaluating by Horner.
    pub fn substitute(&self, j: usize, g: &Self) -> Self {
        assert_eq!(self.n, g.n);
        let dmax = match self.deg_in(j) {
            None => return self.clone(),
            Some(d) => d,
        };
        debug_assert!(dmax >= 0, "substitution requires nonnegative exponents in x_j");
        let mut acc = Self::zero(self.n);
        for k in (0..=dmax).rev() {
            acc = acc.mul(g);
            acc = acc.add(&self.coeff_of_power(j, k));
        }
        acc
    }

    /// Horner substitution with truncation at total degree `tau` after each
    /// step; exact modulo degree `tau` because substituted monomials never
    /// lower total degree.
    pub fn substitute_trunc(&self, j: usize, g: &Self, tau: i64) -> Self {
        assert_eq!(self.n, g.n);
        let dmax = match self.deg_in(j) {
            None => return self.truncate(tau),
            Some(d) => d,
        };
        let mut acc = Self::zero(self.n);
        for k in (0..=dmax).rev() {
            acc = acc.mul_trunc(g, tau);
            acc = acc.add(&self.coeff_of_power(j, k).truncate(tau));
        }
        acc
    }

    /// Exact Taylor shift `x_j <- x_j + value` on every assigned coordinate;
    /// branch points live in the torus, so zero values are rejected.
    pub fn localize(&self, assign: &[(usize, C)]) -> Result<Self, PolyError> {
        let mut out = self.clone();
        for (j, value) in assign {
            if value.is_zero() {
                return Err(PolyError::ZeroAssignment);
            }
            let shift = Self::variable(self.n, *j).add(&Self::constant(self.n, value.clone()));
            out = out.substitute(*j, &shift);
        }
        Ok(out)
    }

    /// Partial evaluation: fixes the assigned coordinates at the given values
    /// (zeros allowed), leaving the ambient variable count unchanged.
    pub fn eval_partial(&self, assign: &[(usize, C)]) -> Self {
        let mut out = self.clone();
        for (j, value) in assign {
            let g = Self::constant(self.n, value.clone());
            out = out.substitute(*j, &g);
        }
        out
    }

    /// Coefficient vector of a polynomial that only involves variable `j`.
    pub fn univariate_coeffs(&self, j: usize) -> Result<Vec<C>, PolyError> {
        let mut deg = 0i64;
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if i != j && x != 0 {
                    return Err(PolyError::NotUnivariate);
                }
            }
            deg = deg.max(e[j]);
        }
        let mut out = vec![C::zero(); (deg + 1) as usize];
        for (e, c) in &self.terms {
            out[e[j] as usize] = c.clone();
        }
        Ok(out)
    }

    /// The variables that actually occur.
    pub fn used_vars(&self) -> Vec<usize> {
        let mut used = vec![false; self.n];
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if x != 0 {
                    used[i] = true;
                }
            }
        }
        (0..self.n).filter(|&i| used[i]).collect()
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> SparsePoly<D> {
        let mut out = SparsePoly::zero(self.n);
        for (e, c) in &self.terms {
            let d = f(c);
            if !d.is_zero() {
                out.terms.insert(e.clone(), d);
            }
        }
        out
    }
}

/// Dominance relations on exponent vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance<'a> {
    Plain,
    Strict,
    Exceptional(&'a [usize]),
    NonExceptional(&'a [usize]),
}

/// `beta` dominates `alpha` in the requested sense.
pub fn dominates(beta: &[i64], alpha: &[i64], variant: Dominance<'_>) -> Result<bool, PolyError> {
    if beta.len() != alpha.len() {
        return Err(PolyError::Dimension { expected: beta.len(), got: alpha.len() });
    }
    let all: Vec<usize> = (0..beta.len()).collect();
    let strict_on = |idx: &[usize]| idx.iter().all(|&j| beta[j] > alpha[j]);
    let equal_on = |idx: &[usize]| idx.iter().all(|&j| beta[j] == alpha[j]);
    Ok(match variant {
        Dominance::Plain => all.iter().all(|&j| beta[j] >= alpha[j]),
        Dominance::Strict => strict_on(&all),
        Dominance::Exceptional(i0) => strict_on(i0),
        Dominance::NonExceptional(i0) => {
            let rest: Vec<usize> = all.iter().copied().filter(|j| !i0.contains(j)).collect();
            equal_on(i0) && strict_on(&rest)
        }
    })
}

/// Exceptional support: the support points lying on `face(v_j)` for every
/// exceptional column `v_j` of the exponential matrix.
pub fn exceptional_support<C: Coeff>(w: &SparsePoly<C>, m: &IntMat, i0: &[usize]) -> Vec<Exp> {
    let supp = w.support();
    if supp.is_empty() {
        return Vec::new();
    }
    let mut keep: Vec<bool> = vec![true; supp.len()];
    for &j in i0 {
        let col = m.column(j);
        let dot = |e: &Exp| -> BigInt { e.iter().zip(&col).map(|(&a, b)| BigInt::from(a) * b).sum() };
        let min = supp.iter().map(&dot).min().unwrap();
        for (i, e) in supp.iter().enumerate() {
            if dot(e) != min {
                keep[i] = false;
            }
        }
    }
    supp.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect()
}

/// Partial factorization of a total transform at a chart vertex: splits
/// off the exceptional monomial `X_I0^(gamma|I0)` with `gamma = a * m`,
/// returning the exceptional exponents (restricted to `i0`) and the
/// partial-transform cofactor.
pub fn partial_factorize<C: Coeff>(
    total: &SparsePoly<C>,
    a: &[i64],
    m: &IntMat,
    i0: &[usize],
) -> Result<(Vec<i64>, SparsePoly<C>), PolyError> {
    let gamma = m.apply_row(a)?;
    let partial = total.extract_factor(&gamma, i0)?;
    Ok((i0.iter().map(|&j| gamma[j]).collect(), partial))
}

/// Proper transform: the partial transform with every exceptional variable
/// set to zero.
pub fn proper_transform<C: Coeff>(partial: &SparsePoly<C>, i0: &[usize]) -> SparsePoly<C> {
    partial.set_zero(i0)
}

/// Truncated formal series: a polynomial known modulo total degree `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<C: Coeff> {
    poly: SparsePoly<C>,
    tau: i64,
}

impl<C: Coeff> TruncatedSeries<C> {
    pub fn new(poly: SparsePoly<C>, tau: i64) -> Self {
        TruncatedSeries { poly: poly.truncate(tau), tau }
    }

    pub fn poly(&self) -> &SparsePoly<C> {
        &self.poly
    }

    pub fn tau(&self) -> i64 {
        self.tau
    }

    pub fn add(&self, other: &Self) -> Self {
        let tau = self.tau.min(other.tau);
        TruncatedSeries::new(self.poly.add(&other.poly), tau)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let tau = self.tau.min(other.tau);
        TruncatedSeries { poly: self.poly.mul_trunc(&other.poly, tau), tau }
    }
}

// ---------------------------------------------------------------------------
// Univariate machinery: gcd, squarefree part, root extraction.
// ---------------------------------------------------------------------------

/// Quotient and remainder of dense univariate division over a field.
pub fn uni_divmod<C: Coeff>(num: &[C], den: &[C]) -> (Vec<C>, Vec<C>) {
    let dd = uni_deg(den).expect("division by zero polynomial");
    let lead_inv = den[dd].inv().expect("leading coefficient must be invertible");
    let mut rem: Vec<C> = num.to_vec();
    let nd = match uni_deg(&rem) {
        None => return (Vec::new(), Vec::new()),
        Some(d) => d,
    };
    if nd < dd {
        uni_trim(&mut rem);
        return (Vec::new(), rem);
    }
    let mut quot = vec![C::zero(); nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem.get(dd + k).cloned().unwrap_or_else(C::zero);
        if c.is_zero() {
            continue;
        }
        let q = c.mul_ref(&lead_inv);
        quot[k] = q.clone();
        for i in 0..=dd {
            let t = rem[i + k].sub_ref(&q.mul_ref(&den[i]));
            rem[i + k] = t;
        }
    }
    uni_trim(&mut rem);
    (quot, rem)
}

pub fn uni_deg<C: Coeff>(p: &[C]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

fn uni_trim<C: Coeff>(p: &mut Vec<C>) {
    while let Some(last) = p.last() {
        if last.is_zero() {
            p.pop();
        } else {
            break;
        }
    }
}

fn uni_monic<C: Coeff>(p: &[C]) -> Vec<C> {
    match uni_deg(p) {
        None => Vec::new(),
        Some(d) => {
            let inv = p[d].inv().expect("nonzero leading coefficient");
            p[..=d].iter().map(|c| c.mul_ref(&inv)).collect()
        }
    }
}

/// Monic gcd of two univariate polynomials over a field; exact over `Rat`.
pub fn univariate_gcd<C: Coeff>(a: &[C], b: &[C]) -> Vec<C> {
    let mut a = uni_monic(a);
    let mut b = uni_monic(b);
    while !b.is_empty() {
        let (_, r) = uni_divmod(&a, &b);
        a = b;
        b = uni_monic(&r);
    }
    a
}

pub fn uni_derivative<C: Coeff>(p: &[C]) -> Vec<C> {
    if p.len() <= 1 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(p.len() - 1);
    for (k, c) in p.iter().enumerate().skip(1) {
        out.push(c.mul_ref(&C::from_i64(k as i64)));
    }
    uni_trim(&mut out);
    out
}

/// Squarefree part `p / gcd(p, p')`, monic.
pub fn squarefree_part<C: Coeff>(p: &[C]) -> Vec<C> {
    let g = univariate_gcd(p, &uni_derivative(p));
    if uni_deg(&g).unwrap_or(0) == 0 {
        return uni_monic(p);
    }
    let (q, r) = uni_divmod(&uni_monic(p), &g);
    debug_assert!(r.is_empty(), "gcd must divide exactly");
    uni_monic(&q)
}

fn uni_eval<C: Coeff>(p: &[C], x: &C) -> C {
    let mut acc = C::zero();
    for c in p.iter().rev() {
        acc = acc.mul_ref(x).add_ref(c);
    }
    acc
}

/// Multiplicity of `r` as a root of `p` by repeated exact division.
fn root_multiplicity<C: Coeff>(p: &[C], r: &C) -> usize {
    let lin = vec![r.neg_ref(), C::one()];
    let mut mult = 0;
    let mut cur = p.to_vec();
    loop {
        if !uni_eval(&cur, r).is_zero() {
            return mult;
        }
        let (q, rem) = uni_divmod(&cur, &lin);
        if !rem.is_empty() && C::EXACT {
            return mult;
        }
        cur = q;
        mult += 1;
        if uni_deg(&cur).is_none() {
            return mult;
        }
    }
}

/// Durand-Kerner simultaneous iteration on a complex polynomial.
fn durand_kerner(coeffs: &[CF64]) -> Vec<CF64> {
    let d = match uni_deg_f(coeffs) {
        None | Some(0) => return Vec::new(),
        Some(d) => d,
    };
    let lead = coeffs[d];
    let monic: Vec<CF64> = coeffs[..=d].iter().map(|c| c / lead).collect();
    let eval = |x: CF64| -> CF64 {
        let mut acc = CF64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    let seed = CF64::new(0.4, 0.9);
    let mut zs: Vec<CF64> = Vec::with_capacity(d);
    let mut z = CF64::new(1.0, 0.0);
    for _ in 0..d {
        z *= seed;
        zs.push(z);
    }
    for _ in 0..400 {
        let mut delta: f64 = 0.0;
        for i in 0..d {
            let mut denom = CF64::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    denom *= zs[i] - zs[j];
                }
            }
            if denom.norm_sqr() == 0.0 {
                zs[i] += CF64::new(1e-6, 1e-6);
                continue;
            }
            let step = eval(zs[i]) / denom;
            zs[i] -= step;
            delta = delta.max(step.norm_sqr());
        }
        if delta < 1e-28 {
            break;
        }
    }
    zs
}

fn uni_deg_f(p: &[CF64]) -> Option<usize> {
    p.iter().rposition(|c| c.norm_sqr() > 0.0)
}

/// `f64::floor` without std (the range here is far inside i64).
fn floor64(x: f64) -> f64 {
    let t = x as i64 as f64;
    if x < t {
        t - 1.0
    } else {
        t
    }
}

/// Continued-fraction reconstruction of a rational from a float.
fn rational_from_f64(x: f64, max_den: i64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, floor64(x) as i64, 1i64);
    let mut frac = x - floor64(x);
    for _ in 0..64 {
        if q1 > max_den {
            return None;
        }
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() < 1e-9 * (1.0 + x.abs()) {
            return Some(Rat::new(BigInt::from(p1), BigInt::from(q1)));
        }
        if frac.abs() < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = floor64(inv);
        frac = inv - a;
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

/// Nonzero rational roots with multiplicity. Candidates come from a numeric
/// pass over the exact squarefree part; every candidate is verified by exact
/// evaluation and multiplicities by exact division, so the listed roots are
/// exact. `complete == false` when non-rational roots remain.
fn rational_nonzero_roots(coeffs: &[Rat]) -> RootSearch<Rat> {
    let mut p = coeffs.to_vec();
    uni_trim(&mut p);
    let Some(deg) = uni_deg(&p) else {
        return RootSearch { roots: Vec::new(), complete: true };
    };
    if deg == 0 {
        return RootSearch { roots: Vec::new(), complete: true };
    }
    // strip the root at zero
    let k0 = p.iter().position(|c| !Coeff::is_zero(c)).unwrap();
    let p: Vec<Rat> = p[k0..].to_vec();
    let sf = squarefree_part(&p);
    let sf_deg = uni_deg(&sf).unwrap_or(0);
    if sf_deg == 0 {
        return RootSearch { roots: Vec::new(), complete: true };
    }
    let approx: Vec<CF64> = sf
        .iter()
        .map(|c| {
            CF64::new(
                c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN),
                0.0,
            )
        })
        .collect();
    let numeric = durand_kerner(&approx);
    let mut found: Vec<(Rat, usize)> = Vec::new();
    let mut confirmed = 0usize;
    for z in numeric {
        if z.im.abs() > 1e-6 {
            continue;
        }
        let Some(cand) = rational_from_f64(z.re, 1 << 30) else { continue };
        if Coeff::is_zero(&cand) {
            continue;
        }
        if found.iter().any(|(r, _)| *r == cand) {
            continue;
        }
        if Coeff::is_zero(&uni_eval(&sf, &cand)) {
            let mult = root_multiplicity(&p, &cand);
            debug_assert!(mult >= 1);
            confirmed += 1;
            found.push((cand, mult));
        }
    }
    // deterministic report order
    found.sort_by(|a, b| a.0.cmp(&b.0));
    RootSearch { roots: found, complete: confirmed == sf_deg }
}

/// Nonzero complex roots with multiplicity (cluster size), tolerance 1e-9.
fn complex_nonzero_roots(coeffs: &[CF64]) -> RootSearch<CF64> {
    let mut p = coeffs.to_vec();
    while let Some(last) = p.last() {
        if Coeff::is_zero(last) {
            p.pop();
        } else {
            break;
        }
    }
    if p.len() <= 1 {
        return RootSearch { roots: Vec::new(), complete: true };
    }
    let roots = durand_kerner(&p);
    let mut clusters: Vec<(CF64, usize)> = Vec::new();
    'outer: for z in roots {
        if z.norm_sqr() <= APPROX_EPS * APPROX_EPS {
            continue;
        }
        for (c, m) in clusters.iter_mut() {
            if (z - *c).norm_sqr() < 1e-12 {
                *m += 1;
                continue 'outer;
            }
        }
        clusters.push((z, 1));
    }
    clusters.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    RootSearch { roots: clusters, complete: true }
}

/// Branch points of a univariate polynomial: its nonzero roots.
pub fn branch_points_univariate<C: Coeff>(
    p: &SparsePoly<C>,
    j: usize,
) -> Result<RootSearch<C>, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let coeffs = p.univariate_coeffs(j)?;
    Ok(C::nonzero_univariate_roots(&coeffs))
}
