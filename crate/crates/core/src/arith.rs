//! Exact scalars and the small dense matrix algebra used everywhere else:
//! big rationals, integer matrices with fraction-free elimination, and
//! rational matrices for the interim/synthetic calculus.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;

use num_traits::{One, Zero};

/// Exact rational scalar. `num_rational` keeps the invariants we need:
/// reduced, positive denominator, zero stored as 0/1.
pub type Rat = num_rational::BigRational;

/// Parse-free constructors used all over the tests.
pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Formats a rational as `p` or `p/q`; the wire format for every JSON and
/// text surface of the project.
pub fn rat_to_string(r: &Rat) -> String {
    use alloc::format;
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArithError {
    /// Shape mismatch: expected vs got, in whatever unit the operation uses.
    Dimension { expected: usize, got: usize },
    NonSquare { rows: usize, cols: usize },
    Singular,
}

impl fmt::Display for ArithError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithError::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ArithError::NonSquare { rows, cols } => {
                write!(f, "matrix is not square: {rows}x{cols}")
            }
            ArithError::Singular => write!(f, "matrix is singular"),
        }
    }
}

/// Dense integer matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMat {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        IntMat { rows, cols, entries }
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        Self::new(rows, cols, entries.iter().map(|&v| BigInt::from(v)).collect())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<i64>]) -> Self {
        let n = cols.first().map_or(0, |c| c.len());
        let mut entries = Vec::with_capacity(n * cols.len());
        for r in 0..n {
            for c in cols {
                assert_eq!(c.len(), n, "all columns must have equal length");
                entries.push(BigInt::from(c[r]));
            }
        }
        IntMat::new(n, cols.len(), entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        IntMat::new(n, n, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &BigInt {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> IntMat {
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.at(r, c).clone());
            }
        }
        IntMat::new(self.cols, self.rows, entries)
    }

    pub fn mul(&self, other: &IntMat) -> Result<IntMat, ArithError> {
        if self.cols != other.rows {
            return Err(ArithError::Dimension { expected: self.cols, got: other.rows });
        }
        let mut entries = vec![BigInt::zero(); self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    entries[r * other.cols + c] += a * other.at(k, c);
                }
            }
        }
        Ok(IntMat::new(self.rows, other.cols, entries))
    }

    /// Submatrix picked by explicit row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> IntMat {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                entries.push(self.at(r, c).clone());
            }
        }
        IntMat::new(rows.len(), cols.len(), entries)
    }

    /// Exact determinant by Bareiss fraction-free elimination.
    pub fn det(&self) -> Result<BigInt, ArithError> {
        if !self.is_square() {
            return Err(ArithError::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m = self.entries.clone();
        let mut sign = 1i8;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k * n + k].is_zero() {
                let pivot = (k + 1..n).find(|&r| !m[r * n + k].is_zero());
                match pivot {
                    None => return Ok(BigInt::zero()),
                    Some(r) => {
                        for c in 0..n {
                            m.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                    m[i * n + j] = num / &prev;
                }
                m[i * n + k] = BigInt::zero();
            }
            prev = m[k * n + k].clone();
        }
        let d = m[(n - 1) * n + (n - 1)].clone();
        Ok(if sign < 0 { -d } else { d })
    }

    /// Exact adjugate: `m * adjugate(m) = det(m) * I`. Cofactor expansion is
    /// fine at the sizes this project sees (n <= 8).
    pub fn adjugate(&self) -> Result<IntMat, ArithError> {
        if !self.is_square() {
            return Err(ArithError::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(IntMat::new(0, 0, Vec::new()));
        }
        let idx: Vec<usize> = (0..n).collect();
        let mut entries = vec![BigInt::zero(); n * n];
        for r in 0..n {
            let minor_rows: Vec<usize> = idx.iter().copied().filter(|&i| i != r).collect();
            for c in 0..n {
                let minor_cols: Vec<usize> = idx.iter().copied().filter(|&j| j != c).collect();
                let minor = self.submatrix(&minor_rows, &minor_cols).det()?;
                let cof = if (r + c) % 2 == 0 { minor } else { -minor };
                // adj[c][r] = cofactor(r, c)
                entries[c * n + r] = cof;
            }
        }
        Ok(IntMat::new(n, n, entries))
    }

    /// Exact rank via fraction-free elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.entries.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        let mut row = 0;
        for col in 0..cols {
            if row == rows {
                break;
            }
            let pivot = (row..rows).find(|&r| !m[r * cols + col].is_zero());
            let Some(p) = pivot else { continue };
            if p != row {
                for c in 0..cols {
                    m.swap(row * cols + c, p * cols + c);
                }
            }
            for r in row + 1..rows {
                let a = m[r * cols + col].clone();
                if a.is_zero() {
                    continue;
                }
                let b = m[row * cols + col].clone();
                for c in 0..cols {
                    let v = &m[r * cols + c] * &b - &a * &m[row * cols + c];
                    m[r * cols + c] = v;
                }
            }
            row += 1;
            rank += 1;
        }
        rank
    }

    /// Action on an exponent row vector: `e * M`, exact.
    pub fn apply_row(&self, exps: &[i64]) -> Result<Vec<i64>, ArithError> {
        if exps.len() != self.rows {
            return Err(ArithError::Dimension { expected: self.rows, got: exps.len() });
        }
        let mut out = Vec::with_capacity(self.cols);
        for c in 0..self.cols {
            let mut acc = BigInt::zero();
            for (r, &e) in exps.iter().enumerate() {
                if e != 0 {
                    acc += BigInt::from(e) * self.at(r, c);
                }
            }
            out.push(big_to_i64(&acc));
        }
        Ok(out)
    }

    pub fn to_rat(&self) -> RatMat {
        RatMat {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| Rat::from_integer(e.clone())).collect(),
        }
    }
}

fn big_to_i64(v: &BigInt) -> i64 {
    use num_traits::ToPrimitive;
    v.to_i64().expect("exponent arithmetic exceeded i64 (desk-scale bound)")
}

/// Exterior product of n-1 integer n-vectors; component `l` (1-based) is
/// `(-1)^l` times the determinant of the matrix of the inputs as columns
/// with row `l` deleted. Multilinear and antisymmetric.
pub fn exterior_product(vs: &[Vec<i64>]) -> Result<Vec<i64>, ArithError> {
    let n = vs.len() + 1;
    for v in vs {
        if v.len() != n {
            return Err(ArithError::Dimension { expected: n, got: v.len() });
        }
    }
    let cols: Vec<Vec<i64>> = vs.to_vec();
    let mat = IntMat::from_columns(&cols); // n x (n-1)
    let all: Vec<usize> = (0..n).collect();
    let col_idx: Vec<usize> = (0..n - 1).collect();
    let mut out = Vec::with_capacity(n);
    for l in 0..n {
        let rows: Vec<usize> = all.iter().copied().filter(|&r| r != l).collect();
        let d = mat.submatrix(&rows, &col_idx).det()?;
        let signed = if l % 2 == 0 { -d } else { d };
        out.push(big_to_i64(&signed));
    }
    Ok(out)
}

/// Divides a vector by the gcd of its components; zero vectors pass through.
pub fn primitive(v: &[i64]) -> Vec<i64> {
    let mut g: i64 = 0;
    for &x in v {
        g = gcd_i64(g, x.abs());
    }
    if g <= 1 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / g).collect()
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Dense rational matrix; the interim and synthetic exponential matrices of
/// the canonical calculus live here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl RatMat {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rat>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        RatMat { rows, cols, entries }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMat::new(rows, cols, vec![Rat::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMat::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &Rat {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> RatMat {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                entries.push(self.at(r, c).clone());
            }
        }
        RatMat::new(rows.len(), cols.len(), entries)
    }

    pub fn mul(&self, other: &RatMat) -> Result<RatMat, ArithError> {
        if self.cols != other.rows {
            return Err(ArithError::Dimension { expected: self.cols, got: other.rows });
        }
        let mut out = RatMat::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k).clone();
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.at(r, c) + &a * other.at(k, c);
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Exact determinant via Gaussian elimination over the rationals.
    pub fn det(&self) -> Result<Rat, ArithError> {
        if self.rows != self.cols {
            return Err(ArithError::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut m = self.entries.clone();
        let mut det = Rat::one();
        for k in 0..n {
            let pivot = (k..n).find(|&r| !m[r * n + k].is_zero());
            let Some(p) = pivot else { return Ok(Rat::zero()) };
            if p != k {
                for c in 0..n {
                    m.swap(k * n + c, p * n + c);
                }
                det = -det;
            }
            let pv = m[k * n + k].clone();
            det *= &pv;
            for r in k + 1..n {
                let factor = &m[r * n + k] / &pv;
                if factor.is_zero() {
                    continue;
                }
                for c in k..n {
                    let v = &m[r * n + c] - &factor * &m[k * n + c];
                    m[r * n + c] = v;
                }
            }
        }
        Ok(det)
    }

    /// Exact inverse; `Err(Singular)` when the determinant vanishes.
    pub fn inverse(&self) -> Result<RatMat, ArithError> {
        if self.rows != self.cols {
            return Err(ArithError::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut m = self.entries.clone();
        let mut inv = RatMat::identity(n);
        for k in 0..n {
            let pivot = (k..n).find(|&r| !m[r * n + k].is_zero());
            let Some(p) = pivot else { return Err(ArithError::Singular) };
            if p != k {
                for c in 0..n {
                    m.swap(k * n + c, p * n + c);
                }
                for c in 0..n {
                    let tmp = inv.at(k, c).clone();
                    inv.set(k, c, inv.at(p, c).clone());
                    inv.set(p, c, tmp);
                }
            }
            let pv = m[k * n + k].clone();
            for c in 0..n {
                m[k * n + c] = &m[k * n + c] / &pv;
                let v = inv.at(k, c) / &pv;
                inv.set(k, c, v);
            }
            for r in 0..n {
                if r == k {
                    continue;
                }
                let factor = m[r * n + k].clone();
                if factor.is_zero() {
                    continue;
                }
                for c in 0..n {
                    m[r * n + c] = &m[r * n + c] - &factor * &m[k * n + c];
                    let v = inv.at(r, c) - &factor * inv.at(k, c);
                    inv.set(r, c, v);
                }
            }
        }
        Ok(inv)
    }

    /// Action on an exponent row vector; `None` when some image component is
    /// not an integer (the caller decides whether that is an error).
    pub fn apply_row_integral(&self, exps: &[i64]) -> Result<Option<Vec<i64>>, ArithError> {
        if exps.len() != self.rows {
            return Err(ArithError::Dimension { expected: self.rows, got: exps.len() });
        }
        let mut out = Vec::with_capacity(self.cols);
        for c in 0..self.cols {
            let mut acc = Rat::zero();
            for (r, &e) in exps.iter().enumerate() {
                if e != 0 {
                    acc += Rat::from_integer(BigInt::from(e)) * self.at(r, c);
                }
            }
            if !acc.denom().is_one() {
                return Ok(None);
            }
            out.push(big_to_i64(acc.numer()));
        }
        Ok(Some(out))
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|e| e.denom().is_one())
    }

    pub fn to_int(&self) -> Option<IntMat> {
        if !self.is_integral() {
            return None;
        }
        Some(IntMat::new(
            self.rows,
            self.cols,
            self.entries.iter().map(|e| e.numer().clone()).collect(),
        ))
    }
}
