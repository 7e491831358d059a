//! Dense symmetric linear algebra and certified real-root extraction.
//!
//! Everything here is sized for coefficient matrices of order <= 8: the
//! eigensolver is a cyclic Jacobi iteration, the linear solver is a
//! rank-revealing solve built on it, and univariate roots come from Sturm
//! sequence isolation with bisection refinement and Newton polish. Sturm
//! counting is what certifies the "all roots real" decision; no imaginary
//! part heuristics are involved.

use crate::poly::UnivariatePolynomial;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Cluster radius: roots closer than `CLUSTER_TOL * (1+|rho|)` merge into one
/// root with multiplicity.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Default residual tolerance for root acceptance.
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;

/// Errors from the numeric substrate.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Not every root of the polynomial is real; carries how many real roots
    /// (with multiplicity) were certified, out of `degree`.
    NotAllReal { real_count: usize, degree: usize },
    /// A root at (numerical) zero where a nonzero root is required.
    ZeroRoot,
    /// Root extraction needs a nonconstant polynomial.
    ConstantPolynomial,
    /// Degree exceeds the requested matrix order.
    DegreeTooLarge { degree: usize, order: usize },
    /// Constant term must be 1 for a monic representation source.
    NotMonicConstant { value: f64 },
    /// Matrix rows of unequal length or not square where required.
    BadShape,
    /// Input violates the symmetry/orthogonality storage contract.
    NotSymmetric,
    NotOrthogonal { defect: f64 },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotAllReal { real_count, degree } => {
                write!(f, "only {real_count} of {degree} roots are real")
            }
            LinalgError::ZeroRoot => write!(f, "unexpected zero root"),
            LinalgError::ConstantPolynomial => write!(f, "polynomial is constant"),
            LinalgError::DegreeTooLarge { degree, order } => {
                write!(f, "degree {degree} exceeds order {order}")
            }
            LinalgError::NotMonicConstant { value } => {
                write!(f, "constant term {value} is not 1")
            }
            LinalgError::BadShape => write!(f, "bad matrix shape"),
            LinalgError::NotSymmetric => write!(f, "matrix is not symmetric"),
            LinalgError::NotOrthogonal { defect } => {
                write!(f, "matrix is not orthogonal (defect {defect:.3e})")
            }
        }
    }
}

impl std::error::Error for LinalgError {}

// ---------------------------------------------------------------------------
// Matrix types
// ---------------------------------------------------------------------------

/// Dense real symmetric matrix. The constructor symmetrizes its input, so
/// `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymmetricMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        SymmetricMatrix { order, data: vec![0.0; order * order] }
    }

    /// Builds from full rows; entries further than `1e-9 * scale` from
    /// symmetric are rejected, closer ones are averaged into exact symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(LinalgError::BadShape);
        }
        let scale = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let mut m = SymmetricMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                if (rows[i][j] - rows[j][i]).abs() > 1e-9 * scale {
                    return Err(LinalgError::NotSymmetric);
                }
                m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(m)
    }

    pub fn from_diagonal(diag: &DiagonalMatrix) -> Self {
        let mut m = SymmetricMatrix::zeros(diag.order());
        for (i, &v) in diag.diag().iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    /// Sets entry (i, j) and its mirror.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Max absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.order, other.order);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<SymmetricMatrix> for Vec<Vec<f64>> {
    fn from(m: SymmetricMatrix) -> Self {
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymmetricMatrix {
    type Error = LinalgError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        SymmetricMatrix::from_rows(&rows)
    }
}

/// Diagonal matrix, stored as its diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMatrix {
    diag: Vec<f64>,
}

impl DiagonalMatrix {
    pub fn new(diag: Vec<f64>) -> Self {
        DiagonalMatrix { diag }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// True when all entries are pairwise distinct under the cluster radius.
    pub fn has_distinct_entries(&self) -> bool {
        for i in 0..self.diag.len() {
            for j in i + 1..self.diag.len() {
                let gap = (self.diag[i] - self.diag[j]).abs();
                if gap <= CLUSTER_TOL * (1.0 + self.diag[i].abs().max(self.diag[j].abs())) {
                    return false;
                }
            }
        }
        true
    }
}

/// Dense orthogonal matrix; the constructor checks `||V V^T - I||_F <= 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    order: usize,
    data: Vec<f64>,
}

impl OrthogonalMatrix {
    pub fn identity(order: usize) -> Self {
        let mut data = vec![0.0; order * order];
        for i in 0..order {
            data[i * order + i] = 1.0;
        }
        OrthogonalMatrix { order, data }
    }

    pub fn from_mat(m: Mat) -> Result<Self, LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::BadShape);
        }
        let defect = m.mul(&m.transpose()).sub(&Mat::identity(m.rows)).frobenius_norm();
        if defect > 1e-10 {
            return Err(LinalgError::NotOrthogonal { defect });
        }
        Ok(OrthogonalMatrix { order: m.rows, data: m.data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> OrthogonalMatrix {
        OrthogonalMatrix { order: self.order, data: self.as_mat().transpose().data }
    }

    pub fn as_mat(&self) -> Mat {
        Mat { rows: self.order, cols: self.order, data: self.data.clone() }
    }
}

/// Minimal dense rectangular matrix used internally.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        if r == 0 {
            return Err(LinalgError::BadShape);
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::BadShape);
        }
        Ok(Mat { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().copied()).collect() })
    }

    pub fn from_sym(m: &SymmetricMatrix) -> Self {
        Mat { rows: m.order, cols: m.order, data: m.data.clone() }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Solves the square system `self * x = rhs` by Gaussian elimination with
    /// partial pivoting; `None` when (numerically) singular.
    pub fn solve_partial_pivot(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(self.rows, self.cols, "square system");
        assert_eq!(rhs.len(), self.rows);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a[i * n + k].abs() > a[piv * n + k].abs() {
                    piv = i;
                }
            }
            if a[piv * n + k].abs() <= 1e-14 * scale {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                b.swap(k, piv);
            }
            for i in k + 1..n {
                let factor = a[i * n + k] / a[k * n + k];
                for j in k..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
                b[i] -= factor * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        Some(x)
    }

    /// Determinant by LU with partial pivoting; square only.
    pub fn det_lu(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a[i * n + k].abs() > a[piv * n + k].abs() {
                    piv = i;
                }
            }
            if a[piv * n + k] == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            det *= a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / a[k * n + k];
                for j in k..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
            }
        }
        det
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// Elementary symmetric functions
// ---------------------------------------------------------------------------

/// k-th elementary symmetric function of `values`.
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    assert!(k <= values.len(), "k out of range");
    // coefficients of prod (1 + v t), degree-k coefficient
    let mut coeffs = vec![0.0; k + 1];
    coeffs[0] = 1.0;
    for &v in values {
        for j in (1..=k).rev() {
            coeffs[j] += v * coeffs[j - 1];
        }
    }
    coeffs[k]
}

// ---------------------------------------------------------------------------
// Real roots: Sturm isolation + bisection + Newton polish
// ---------------------------------------------------------------------------

fn poly_trim(mut c: Vec<f64>) -> Vec<f64> {
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = 1e-12 * max;
    while c.len() > 1 && c.last().map(|v| v.abs() <= cut).unwrap_or(false) {
        c.pop();
    }
    c
}

fn poly_scale_inf(mut c: Vec<f64>) -> Vec<f64> {
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        for v in &mut c {
            *v /= max;
        }
    }
    c
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, &v)| v * k as f64).collect()
}

/// Quotient of a / b (both const-first, b with nonzero leading coefficient),
/// dropping the remainder.
fn poly_div(a: &[f64], b: &[f64]) -> Vec<f64> {
    let db = b.len() - 1;
    if a.len() - 1 < db {
        return vec![0.0];
    }
    let mut r = a.to_vec();
    let mut q = vec![0.0; a.len() - db];
    let lead = b[db];
    for k in (0..q.len()).rev() {
        let factor = r[k + db] / lead;
        q[k] = factor;
        for j in 0..=db {
            r[k + j] -= factor * b[j];
        }
    }
    q
}

/// Remainder of a / b (both const-first, b with nonzero leading coefficient).
fn poly_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db && r.len() > 1 {
        let dr = r.len() - 1;
        let factor = r[dr] / lead;
        for j in 0..=db {
            r[dr - db + j] -= factor * b[j];
        }
        r.pop(); // the leading term cancels by construction
        // drop garbage leading coefficients created by cancellation
        let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        while r.len() > 1 && r.last().map(|v| v.abs() <= 1e-13 * max.max(1e-300)).unwrap_or(false) {
            r.pop();
        }
        if r.len() - 1 < db {
            break;
        }
    }
    r
}

struct SturmChain {
    polys: Vec<Vec<f64>>,
    /// True when the remainder sequence ended on a nonconstant gcd, i.e. the
    /// polynomial has multiple roots.
    gcd_nonconstant: bool,
}

impl SturmChain {
    fn new(p: &[f64]) -> Self {
        let p0 = poly_scale_inf(poly_trim(p.to_vec()));
        let p1 = poly_scale_inf(poly_trim(poly_deriv(&p0)));
        let mut polys = vec![p0, p1];
        let mut gcd_nonconstant = false;
        loop {
            let k = polys.len();
            if polys[k - 1].len() <= 1 && polys[k - 1][0] == 0.0 {
                polys.pop();
                break;
            }
            if polys[k - 1].len() == 1 {
                break;
            }
            let rem = poly_rem(&polys[k - 2], &polys[k - 1]);
            let max = rem.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max <= 1e-12 {
                // numerically zero remainder: chain ends at a gcd
                gcd_nonconstant = polys[k - 1].len() > 1;
                break;
            }
            let next: Vec<f64> = poly_scale_inf(poly_trim(rem)).iter().map(|v| -v).collect();
            polys.push(next);
        }
        SturmChain { polys, gcd_nonconstant }
    }

    /// Square-free part of the original polynomial: itself when the chain ran
    /// to a constant, otherwise the quotient by the terminal gcd. Every root
    /// of the result is simple.
    fn square_free_part(&self) -> Vec<f64> {
        if !self.gcd_nonconstant {
            return self.polys[0].clone();
        }
        let gcd = self.polys.last().unwrap();
        poly_scale_inf(poly_div(&self.polys[0], gcd))
    }

    fn variations(&self, x: f64) -> usize {
        let mut count = 0;
        let mut last: Option<bool> = None;
        for p in &self.polys {
            let scale: f64 = p
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * x.abs().max(1.0).powi(k as i32))
                .sum();
            let v = poly_eval(p, x);
            if v.abs() <= 1e-12 * scale.max(1e-300) {
                continue; // treat as zero, skip
            }
            let sign = v > 0.0;
            if let Some(prev) = last {
                if prev != sign {
                    count += 1;
                }
            }
            last = Some(sign);
        }
        count
    }

    /// Number of distinct real roots in (a, b].
    fn count(&self, a: f64, b: f64) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }
}

/// All real roots of `p` with multiplicities, sorted descending, when every
/// root (counted with multiplicity) is real; `NotAllReal` otherwise. `tol`
/// scales the residual bound `|p(rho)| <= tol * sum|c_i| * max(1,|rho|)^deg`
/// accepted during multiplicity deflation.
pub fn real_roots(
    p: &UnivariatePolynomial,
    tol: f64,
) -> Result<Vec<(f64, usize)>, LinalgError> {
    let deg = p.degree();
    let roots = real_roots_partial(p, tol)?;
    let found: usize = roots.iter().map(|(_, m)| m).sum();
    if found == deg {
        Ok(roots)
    } else {
        Err(LinalgError::NotAllReal { real_count: found, degree: deg })
    }
}

/// The real roots of `p` with multiplicities, sorted descending — however
/// many there are. Complex pairs are simply absent from the result.
pub fn real_roots_partial(
    p: &UnivariatePolynomial,
    tol: f64,
) -> Result<Vec<(f64, usize)>, LinalgError> {
    if p.is_constant() {
        return Err(LinalgError::ConstantPolynomial);
    }
    let coeffs = poly_scale_inf(poly_trim(p.coeffs().to_vec()));
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let bound = 1.0 + coeffs[..deg].iter().fold(0.0f64, |m, c| m.max((c / lead).abs()));
    let chain = SturmChain::new(&coeffs);

    let lo = -bound - 1.0;
    let hi = bound + 1.0;
    let total = chain.count(lo, hi);
    if total == 0 {
        return Ok(Vec::new());
    }

    // isolate: subdivide until each interval holds one distinct root, or is
    // narrower than the cluster floor (then it is one clustered root)
    let mut stack = vec![(lo, hi, total)];
    let mut isolated: Vec<(f64, f64, usize)> = Vec::new();
    while let Some((a, b, c)) = stack.pop() {
        if c == 0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        if c == 1 || b - a <= 1e-13 * (1.0 + mid.abs()) {
            isolated.push((a, b, c));
            continue;
        }
        let cl = chain.count(a, mid);
        stack.push((a, mid, cl));
        stack.push((mid, b, c - cl));
    }

    // refine on the square-free part, where every root is simple: Sturm
    // counting only narrows coarsely (it degrades near multiple roots), then
    // sign bisection and Newton polishing take over
    let sqfree = chain.square_free_part();
    let dsqfree = poly_deriv(&sqfree);
    let mut roots: Vec<(f64, usize)> = Vec::new();
    for (mut a, mut b, c) in isolated {
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if b - a <= 1e-4 * (1.0 + mid.abs()) {
                break;
            }
            if chain.count(a, mid) >= 1 {
                b = mid;
            } else {
                a = mid;
            }
        }
        if poly_eval(&sqfree, a) * poly_eval(&sqfree, b) < 0.0 {
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if b - a <= 1e-15 * (1.0 + mid.abs()) {
                    break;
                }
                if poly_eval(&sqfree, a) * poly_eval(&sqfree, mid) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
        }
        let mut rho = 0.5 * (a + b);
        for _ in 0..30 {
            let f = poly_eval(&sqfree, rho);
            let df = poly_eval(&dsqfree, rho);
            if f == 0.0 || df.abs() < 1e-300 {
                break;
            }
            let next = rho - f / df;
            if !next.is_finite() || poly_eval(&sqfree, next).abs() >= f.abs() {
                break;
            }
            rho = next;
        }
        roots.push((rho, c));
    }
    roots.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

    // cluster pass: merge near-coincident distinct roots
    let mut clustered: Vec<(f64, usize)> = Vec::new();
    for (rho, c) in roots {
        if let Some(last) = clustered.last_mut() {
            if (last.0 - rho).abs() <= CLUSTER_TOL * (1.0 + rho.abs()) {
                last.0 = (last.0 * last.1 as f64 + rho * c as f64) / (last.1 + c) as f64;
                last.1 += c;
                continue;
            }
        }
        clustered.push((rho, c));
    }

    // multiplicities by deflation: at least the Sturm count per cluster, plus
    // any further numerically-exact factors
    let mut q = coeffs;
    let mut out: Vec<(f64, usize)> = Vec::new();
    for (rho, sturm_count) in clustered {
        let mut mult = 0;
        loop {
            if q.len() <= 1 {
                break;
            }
            let scale: f64 = q
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * rho.abs().max(1.0).powi(k as i32))
                .sum();
            let forced = mult < sturm_count;
            if !forced && poly_eval(&q, rho).abs() > tol * scale {
                break;
            }
            // synthetic division by (x - rho)
            let mut next = vec![0.0; q.len() - 1];
            let mut carry = q[q.len() - 1];
            for k in (0..q.len() - 1).rev() {
                next[k] = carry;
                carry = q[k] + carry * rho;
            }
            q = next;
            mult += 1;
        }
        if mult > 0 {
            out.push((rho, mult));
        }
    }
    Ok(out)
}

/// Negative reciprocals of the roots of `p`, padded with zeros up to length
/// `d` and sorted descending. This is the eigenvalue vector of the
/// coefficient matrix whose axis restriction is `p`.
pub fn negative_reciprocal_eigs(
    p: &UnivariatePolynomial,
    d: usize,
    tol: f64,
) -> Result<Vec<f64>, LinalgError> {
    if p.degree() > d {
        return Err(LinalgError::DegreeTooLarge { degree: p.degree(), order: d });
    }
    if (p.coeff(0) - 1.0).abs() > 1e-9 {
        return Err(LinalgError::NotMonicConstant { value: p.coeff(0) });
    }
    if p.is_constant() {
        return Ok(vec![0.0; d]);
    }
    let roots = real_roots(p, tol)?;
    let mut eigs = Vec::with_capacity(d);
    for (rho, mult) in roots {
        if rho.abs() <= 1e-12 {
            return Err(LinalgError::ZeroRoot);
        }
        for _ in 0..mult {
            eigs.push(-1.0 / rho);
        }
    }
    eigs.resize(d, 0.0);
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs)
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition `A = V diag(lambda) V^T` with eigenvalues descending.
/// Sign convention: in each eigenvector the entry of largest magnitude is
/// positive (ties break to the lowest index).
pub fn sym_eigen(a: &SymmetricMatrix) -> (Vec<f64>, OrthogonalMatrix) {
    let n = a.order();
    let mut m = Mat::from_sym(a);
    let mut v = Mat::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    let off = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j) * m.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..60 {
        if off(&m) <= 1e-12 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rows/cols p and q of m
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i), i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut eigs = Vec::with_capacity(n);
    let mut vs = Mat::zeros(n, n);
    for (col, (lambda, src)) in pairs.into_iter().enumerate() {
        eigs.push(lambda);
        // sign convention on the copied column
        let mut best = 0;
        for i in 1..n {
            if v.get(i, src).abs() > v.get(best, src).abs() {
                best = i;
            }
        }
        let flip = if v.get(best, src) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vs.set(i, col, flip * v.get(i, src));
        }
    }
    let v = OrthogonalMatrix::from_mat(vs).expect("Jacobi rotations stay orthogonal");
    (eigs, v)
}

// ---------------------------------------------------------------------------
// Rank-revealing linear solve
// ---------------------------------------------------------------------------

/// Outcome of a rank-revealing solve of `G y = z`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolve {
    /// Full column rank and consistent.
    Unique { solution: Vec<f64>, residual: f64 },
    /// Consistent with a nontrivial null space; `particular` is the
    /// least-squares/minimum-norm solution and `kernel` an orthonormal basis.
    Parameterized { particular: Vec<f64>, kernel: Vec<Vec<f64>>, residual: f64 },
    /// No y satisfies `||G y - z||_inf <= tol`.
    Inconsistent { residual: f64 },
}

impl LinearSolve {
    pub fn residual(&self) -> f64 {
        match self {
            LinearSolve::Unique { residual, .. }
            | LinearSolve::Parameterized { residual, .. }
            | LinearSolve::Inconsistent { residual } => *residual,
        }
    }
}

/// Rank-revealing solve of `G y = z` (rectangular allowed). The solution is
/// the least-squares minimum-norm one; `Inconsistent` when its infinity-norm
/// residual exceeds `tol`.
pub fn solve_linear(g: &Mat, z: &[f64], tol: f64) -> LinearSolve {
    assert_eq!(g.rows, z.len(), "rhs length");
    let n = g.cols;
    let gt = g.transpose();
    let gram_mat = gt.mul(g);
    let mut gram = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            gram.set(i, j, 0.5 * (gram_mat.get(i, j) + gram_mat.get(j, i)));
        }
    }
    let (eigs, v) = sym_eigen(&gram);
    let lmax = eigs.first().copied().unwrap_or(0.0).max(0.0);
    let rank_cut = lmax * 1e-12 * (g.rows.max(n) as f64);
    let gtz = gt.mul_vec(z);
    let mut y = vec![0.0; n];
    let mut kernel = Vec::new();
    for (k, &lambda) in eigs.iter().enumerate() {
        let col = v.column(k);
        if lambda > rank_cut && lambda > 0.0 {
            let proj: f64 = col.iter().zip(&gtz).map(|(a, b)| a * b).sum();
            let w = proj / lambda;
            for i in 0..n {
                y[i] += w * col[i];
            }
        } else {
            kernel.push(col);
        }
    }
    let residual = inf_norm(
        &g.mul_vec(&y)
            .iter()
            .zip(z)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    if residual > tol {
        LinearSolve::Inconsistent { residual }
    } else if kernel.is_empty() {
        LinearSolve::Unique { solution: y, residual }
    } else {
        LinearSolve::Parameterized { particular: y, kernel, residual }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expression;

    fn uni(coeffs: &[f64]) -> UnivariatePolynomial {
        UnivariatePolynomial::new(coeffs.to_vec())
    }

    #[test]
    fn real_roots_cubic_reciprocals() {
        // 6x^3 + 11x^2 + 6x + 1 = (x+1)(2x+1)(3x+1)
        let p = uni(&[1.0, 6.0, 11.0, 6.0]);
        let roots = real_roots(&p, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(roots.len(), 3);
        let expect = [-1.0 / 3.0, -0.5, -1.0];
        for ((r, m), e) in roots.iter().zip(expect) {
            assert_eq!(*m, 1);
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn real_roots_rejects_complex_pair() {
        let p = uni(&[1.0, 0.0, 1.0]); // x^2 + 1
        assert_eq!(
            real_roots(&p, DEFAULT_ROOT_TOL),
            Err(LinalgError::NotAllReal { real_count: 0, degree: 2 })
        );
    }

    #[test]
    fn real_roots_double_root() {
        // (x-2)^2 (x+1) = x^3 - 3x^2 + 4
        let p = uni(&[4.0, 0.0, -3.0, 1.0]);
        let roots = real_roots(&p, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - 2.0).abs() < 1e-9);
        assert_eq!(roots[0].1, 2);
        assert!((roots[1].0 + 1.0).abs() < 1e-9);
        assert_eq!(roots[1].1, 1);
    }

    #[test]
    fn real_roots_residual_bound() {
        let p = uni(&[-1.0, 3.0, 0.5, -4.0, 1.0]);
        if let Ok(roots) = real_roots(&p, DEFAULT_ROOT_TOL) {
            let total: usize = roots.iter().map(|(_, m)| m).sum();
            assert_eq!(total, 4);
            let sum_abs: f64 = p.coeffs().iter().map(|c| c.abs()).sum();
            for (r, _) in roots {
                let bound = DEFAULT_ROOT_TOL * sum_abs * r.abs().max(1.0).powi(4);
                assert!(p.evaluate(r).abs() <= bound);
            }
        }
    }

    #[test]
    fn negative_reciprocals_examples() {
        let p = uni(&[1.0, 6.0, 11.0, 6.0]);
        let eigs = negative_reciprocal_eigs(&p, 3, DEFAULT_ROOT_TOL).unwrap();
        for (e, w) in eigs.iter().zip([3.0, 2.0, 1.0]) {
            assert!((e - w).abs() < 1e-10);
        }

        let p = uni(&[1.0, 18.0, 99.0, 162.0]);
        let eigs = negative_reciprocal_eigs(&p, 3, DEFAULT_ROOT_TOL).unwrap();
        for (e, w) in eigs.iter().zip([9.0, 6.0, 3.0]) {
            assert!((e - w).abs() < 1e-9, "{e} vs {w}");
        }

        // 1/2 x^4 - 1.5 x^2 + 1: roots +-1, +-sqrt(2)
        let p = uni(&[1.0, 0.0, -1.5, 0.0, 0.5]);
        let eigs = negative_reciprocal_eigs(&p, 4, DEFAULT_ROOT_TOL).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        for (e, w) in eigs.iter().zip([1.0, s, -s, -1.0]) {
            assert!((e - w).abs() < 1e-10, "{e} vs {w}");
        }
    }

    #[test]
    fn negative_reciprocals_pads_zero_eigs() {
        let p = uni(&[1.0, 1.0]); // 1 + x, degree 1 below order 2
        let eigs = negative_reciprocal_eigs(&p, 2, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(eigs, vec![1.0, 0.0]);
    }

    #[test]
    fn sym_eigen_identity_and_diag() {
        let (eigs, v) = sym_eigen(&SymmetricMatrix::from_diagonal(&DiagonalMatrix::new(vec![
            1.0, 1.0, 1.0,
        ])));
        assert_eq!(eigs, vec![1.0, 1.0, 1.0]);
        for i in 0..3 {
            assert!((v.get(i, i) - 1.0).abs() < 1e-12);
        }

        let d = SymmetricMatrix::from_diagonal(&DiagonalMatrix::new(vec![3.0, 2.0, 1.0]));
        let (eigs, v) = sym_eigen(&d);
        assert_eq!(eigs, vec![3.0, 2.0, 1.0]);
        for i in 0..3 {
            assert!((v.get(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_eigen_reconstructs_random() {
        // pseudo-random symmetric matrices via a tiny LCG
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for n in 2..=5 {
            let mut a = SymmetricMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    a.set(i, j, next());
                }
            }
            let (eigs, v) = sym_eigen(&a);
            // descending
            for w in eigs.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            // V orthogonal (constructor checked) and A = V diag V^T
            let vm = v.as_mat();
            let mut lam = Mat::zeros(n, n);
            for i in 0..n {
                lam.set(i, i, eigs[i]);
            }
            let rec = vm.mul(&lam).mul(&vm.transpose());
            let defect = rec.sub(&Mat::from_sym(&a)).frobenius_norm();
            assert!(defect <= 1e-9 * (1.0 + a.frobenius_norm()), "defect {defect}");
        }
    }

    #[test]
    fn solve_linear_paper_diag_system() {
        // G per the elementary-symmetric pattern for r = (3,2,1)
        let g = Mat::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![3.0, 4.0, 5.0],
            vec![2.0, 3.0, 6.0],
        ])
        .unwrap();
        let z = [11.0, 42.0, 36.0];
        match solve_linear(&g, &z, 1e-8) {
            LinearSolve::Unique { solution, residual } => {
                assert!(residual <= 1e-9);
                for (s, w) in solution.iter().zip([4.5, 4.0, 2.5]) {
                    assert!((s - w).abs() < 1e-9, "{s} vs {w}");
                }
            }
            other => panic!("expected unique, got {other:?}"),
        }
    }

    #[test]
    fn solve_linear_parameterized_matches_affine_set() {
        let g = Mat::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]]).unwrap();
        let z = [3.25, 4.5];
        match solve_linear(&g, &z, 1e-8) {
            LinearSolve::Parameterized { particular, kernel, residual } => {
                assert!(residual <= 1e-10);
                assert_eq!(kernel.len(), 1);
                // kernel spans (1,-2,1)
                let k = &kernel[0];
                let reference = [1.0, -2.0, 1.0];
                let scale = k[0] / reference[0];
                for (a, b) in k.iter().zip(reference) {
                    assert!((a - b * scale).abs() < 1e-10);
                }
                // particular differs from (2.5,.25,.5) by a kernel multiple
                let diff: Vec<f64> =
                    particular.iter().zip([2.5, 0.25, 0.5]).map(|(a, b)| a - b).collect();
                let t = diff[0] / k[0];
                for (d, kk) in diff.iter().zip(k) {
                    assert!((d - t * kk).abs() < 1e-9);
                }
            }
            other => panic!("expected parameterized, got {other:?}"),
        }
    }

    #[test]
    fn solve_linear_trivial_and_inconsistent() {
        let g = Mat::identity(2);
        match solve_linear(&g, &[0.0, 0.0], 1e-10) {
            LinearSolve::Unique { solution, .. } => assert_eq!(solution, vec![0.0, 0.0]),
            other => panic!("{other:?}"),
        }
        let g = Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        match solve_linear(&g, &[0.0, 1.0], 1e-8) {
            LinearSolve::Inconsistent { residual } => assert!(residual > 0.4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn elementary_symmetric_basics() {
        assert_eq!(elementary_symmetric(&[3.0, 2.0, 1.0], 1), 6.0);
        assert_eq!(elementary_symmetric(&[3.0, 2.0, 1.0], 3), 6.0);
        assert_eq!(elementary_symmetric(&[3.0, 2.0, 1.0], 0), 1.0);
        // S_2 equals the sum of 2x2 principal minors of diag(r)
        let r = [1.7, -0.3, 2.2, 0.9];
        let mut minors = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                minors += r[i] * r[j];
            }
        }
        assert!((elementary_symmetric(&r, 2) - minors).abs() < 1e-12);
    }

    #[test]
    fn det_g_matches_vandermonde_product() {
        // G built from elementary symmetric functions with one value omitted
        let r = [2.9, 1.3, -0.4, 0.7];
        let d = r.len();
        let mut g = Mat::zeros(d, d);
        for row in 0..d {
            for col in 0..d {
                let omitted: Vec<f64> =
                    r.iter().enumerate().filter(|(i, _)| *i != col).map(|(_, &v)| v).collect();
                g.set(row, col, elementary_symmetric(&omitted, row));
            }
        }
        let mut prod = 1.0;
        for i in 0..d {
            for j in i + 1..d {
                prod *= r[i] - r[j];
            }
        }
        let det = g.det_lu();
        assert!((det - prod).abs() <= 1e-9 * prod.abs(), "{det} vs {prod}");
    }

    #[test]
    fn restriction_roots_reject_axis() {
        let f = parse_expression("1 + x1^2 + x2", 2).unwrap();
        let r = f.restrict_axis(1);
        assert!(matches!(
            real_roots(&r, DEFAULT_ROOT_TOL),
            Err(LinalgError::NotAllReal { real_count: 0, .. })
        ));
    }
}
