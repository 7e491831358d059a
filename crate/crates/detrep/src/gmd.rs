//! Generalized mixed discriminants and the determinant expansion they induce.
//!
//! The mixed discriminant of a multiset of order-`d` matrices `(A_1 with
//! multiplicity m_1, ..., A_n with multiplicity m_n)`, `k = sum m_i <= d`,
//! is the sum over strictly increasing row-index subsets `alpha` of size `k`
//! and over distinct assignments `sigma` of the multiset to those rows of the
//! `k x k` determinant whose row `i` is row `alpha_i` of matrix
//! `sigma(i)`, restricted to columns `alpha`.
//!
//! Two consequences drive this crate: [`expand_det`] recovers every
//! coefficient of `det(I + x_1 A_1 + ... + x_n A_n)` as such a discriminant
//! of the coefficient matrices, and [`coefficient_system`] runs the same
//! sum over a symbolic ring to produce the polynomial system a candidate
//! representation must satisfy.
//!
//! Enumeration order is deterministic: subsets in lexicographic order,
//! multiset assignments in lexicographic order. Numeric minors go through LU,
//! symbolic minors through cofactor expansion (orders here are <= 8).

use crate::linalg::{DiagonalMatrix, Mat, SymmetricMatrix};
use crate::poly::Polynomial;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GmdError {
    OrderMismatch { expected: usize, got: usize },
    KOutOfRange { k: usize, order: usize },
    UnknownCollision { name: String },
    EmptyTuple,
    MissingCoefficient { monomial: Vec<u32> },
}

impl fmt::Display for GmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GmdError::OrderMismatch { expected, got } => {
                write!(f, "matrix order {got}, expected {expected}")
            }
            GmdError::KOutOfRange { k, order } => {
                write!(f, "total multiplicity {k} outside 1..={order}")
            }
            GmdError::UnknownCollision { name } => {
                write!(f, "unknown name {name:?} used for two entries")
            }
            GmdError::EmptyTuple => write!(f, "empty matrix tuple"),
            GmdError::MissingCoefficient { monomial } => {
                write!(f, "target has no coefficient slot for monomial {monomial:?}")
            }
        }
    }
}

impl std::error::Error for GmdError {}

// ---------------------------------------------------------------------------
// Coefficient ring
// ---------------------------------------------------------------------------

/// Element of the coefficient ring: a plain number, or a sparse polynomial
/// over a fixed ordered list of unknowns. Numbers embed into the symbolic
/// side whenever the two meet.
#[derive(Debug, Clone, PartialEq)]
pub enum RingElement {
    Num(f64),
    Sym(Polynomial),
}

impl RingElement {
    pub fn zero() -> Self {
        RingElement::Num(0.0)
    }

    fn promote(&self, nvars: usize) -> Polynomial {
        match self {
            RingElement::Num(c) => Polynomial::constant(nvars, *c),
            RingElement::Sym(p) => p.clone(),
        }
    }

    pub fn add(&self, other: &RingElement) -> RingElement {
        match (self, other) {
            (RingElement::Num(a), RingElement::Num(b)) => RingElement::Num(a + b),
            (RingElement::Sym(p), _) => {
                RingElement::Sym(p.add(&other.promote(p.nvars())).expect("same unknowns"))
            }
            (_, RingElement::Sym(q)) => {
                RingElement::Sym(self.promote(q.nvars()).add(q).expect("same unknowns"))
            }
        }
    }

    pub fn mul(&self, other: &RingElement) -> RingElement {
        match (self, other) {
            (RingElement::Num(a), RingElement::Num(b)) => RingElement::Num(a * b),
            (RingElement::Sym(p), _) => {
                RingElement::Sym(p.mul(&other.promote(p.nvars())).expect("same unknowns"))
            }
            (_, RingElement::Sym(q)) => {
                RingElement::Sym(self.promote(q.nvars()).mul(q).expect("same unknowns"))
            }
        }
    }

    pub fn neg(&self) -> RingElement {
        match self {
            RingElement::Num(a) => RingElement::Num(-a),
            RingElement::Sym(p) => RingElement::Sym(p.scale(-1.0)),
        }
    }

    pub fn sub(&self, other: &RingElement) -> RingElement {
        self.add(&other.neg())
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            RingElement::Num(c) => Some(*c),
            RingElement::Sym(_) => None,
        }
    }
}

/// Square matrix over the coefficient ring.
#[derive(Debug, Clone)]
pub struct GenericMatrix {
    order: usize,
    entries: Vec<RingElement>,
}

impl GenericMatrix {
    pub fn from_entries(order: usize, entries: Vec<RingElement>) -> Self {
        assert_eq!(entries.len(), order * order);
        GenericMatrix { order, entries }
    }

    pub fn from_symmetric(a: &SymmetricMatrix) -> Self {
        let d = a.order();
        let entries = (0..d * d)
            .map(|idx| RingElement::Num(a.get(idx / d, idx % d)))
            .collect();
        GenericMatrix { order: d, entries }
    }

    pub fn from_diagonal(d: &DiagonalMatrix) -> Self {
        Self::from_symmetric(&SymmetricMatrix::from_diagonal(d))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> &RingElement {
        &self.entries[i * self.order + j]
    }

    fn is_numeric(&self) -> bool {
        self.entries.iter().all(|e| matches!(e, RingElement::Num(_)))
    }
}

// ---------------------------------------------------------------------------
// The mixed discriminant
// ---------------------------------------------------------------------------

/// Multiset of matrices with multiplicities; the discriminant argument.
#[derive(Debug, Clone)]
pub struct GmdTuple {
    order: usize,
    slots: Vec<(GenericMatrix, usize)>,
}

impl GmdTuple {
    pub fn new(slots: Vec<(GenericMatrix, usize)>) -> Result<Self, GmdError> {
        let order = slots.first().map(|(m, _)| m.order()).ok_or(GmdError::EmptyTuple)?;
        for (m, _) in &slots {
            if m.order() != order {
                return Err(GmdError::OrderMismatch { expected: order, got: m.order() });
            }
        }
        let k: usize = slots.iter().map(|(_, mu)| mu).sum();
        if k < 1 || k > order {
            return Err(GmdError::KOutOfRange { k, order });
        }
        Ok(GmdTuple { order, slots })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> usize {
        self.slots.iter().map(|(_, mu)| mu).sum()
    }
}

/// Generalized mixed discriminant of the tuple.
pub fn gmd(t: &GmdTuple) -> RingElement {
    let d = t.order;
    let k = t.k();
    // multiset of slot indices, lexicographically smallest arrangement first
    let mut v: Vec<usize> = Vec::with_capacity(k);
    for (slot, (_, mu)) in t.slots.iter().enumerate() {
        for _ in 0..*mu {
            v.push(slot);
        }
    }
    let numeric = t.slots.iter().all(|(m, _)| m.is_numeric());
    let mut numeric_terms: Vec<f64> = Vec::new();
    let mut total = RingElement::zero();
    let mut alpha: Vec<usize> = (0..k).collect();
    loop {
        // all distinct assignments of the multiset to rows, lexicographic
        let mut sigma = v.clone();
        loop {
            let term = minor_det(t, &alpha, &sigma, numeric);
            if numeric {
                numeric_terms.push(term.as_num().unwrap());
            } else {
                total = total.add(&term);
            }
            if !next_multiset_permutation(&mut sigma) {
                break;
            }
        }
        if !next_combination(&mut alpha, d) {
            break;
        }
    }
    if numeric {
        // sorted summation: the result is invariant under slot permutation
        numeric_terms.sort_by(f64::total_cmp);
        RingElement::Num(numeric_terms.iter().sum())
    } else {
        total
    }
}

fn minor_det(t: &GmdTuple, alpha: &[usize], sigma: &[usize], numeric: bool) -> RingElement {
    let k = alpha.len();
    if numeric {
        let mut m = Mat::zeros(k, k);
        for (i, &row) in alpha.iter().enumerate() {
            let mat = &t.slots[sigma[i]].0;
            for (j, &col) in alpha.iter().enumerate() {
                m.set(i, j, mat.get(row, col).as_num().unwrap());
            }
        }
        RingElement::Num(m.det_lu())
    } else {
        let entries: Vec<Vec<RingElement>> = alpha
            .iter()
            .enumerate()
            .map(|(i, &row)| {
                let mat = &t.slots[sigma[i]].0;
                alpha.iter().map(|&col| mat.get(row, col).clone()).collect()
            })
            .collect();
        cofactor_det(&entries)
    }
}

fn cofactor_det(m: &[Vec<RingElement>]) -> RingElement {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = RingElement::zero();
    for j in 0..n {
        let minor: Vec<Vec<RingElement>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = m[0][j].mul(&cofactor_det(&minor));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// Advances `alpha` to the next k-subset of `0..d` in lexicographic order.
fn next_combination(alpha: &mut [usize], d: usize) -> bool {
    let k = alpha.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if alpha[i] < d - k + i {
            alpha[i] += 1;
            for j in i + 1..k {
                alpha[j] = alpha[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Advances to the next distinct permutation of a multiset, lexicographically.
fn next_multiset_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

// ---------------------------------------------------------------------------
// Determinant expansion
// ---------------------------------------------------------------------------

/// Expands `det(I + x_1 A_1 + ... + x_n A_n)` into a polynomial in
/// `x_1..x_n`. The coefficient of each monomial of total degree `k <= d` is
/// the mixed discriminant of the tuple with the monomial's exponents as
/// multiplicities; the constant term is exactly 1, and no monomial of total
/// degree above `d` appears.
pub fn expand_det(matrices: &[SymmetricMatrix]) -> Result<Polynomial, GmdError> {
    let n = matrices.len();
    let d = matrices.first().map(|m| m.order()).ok_or(GmdError::EmptyTuple)?;
    for m in matrices {
        if m.order() != d {
            return Err(GmdError::OrderMismatch { expected: d, got: m.order() });
        }
    }
    let generic: Vec<GenericMatrix> = matrices.iter().map(GenericMatrix::from_symmetric).collect();
    let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0; n], 1.0)];
    for exps in compositions(n, d) {
        let slots: Vec<(GenericMatrix, usize)> = exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (generic[i].clone(), e as usize))
            .collect();
        let tuple = GmdTuple::new(slots)?;
        let c = gmd(&tuple).as_num().expect("numeric tuple");
        terms.push((exps, c));
    }
    Ok(Polynomial::from_terms(n, terms).expect("consistent widths"))
}

/// Convenience wrapper for the usual shape: a diagonal first matrix plus the
/// remaining symmetric coefficient matrices.
pub fn expand_det_lmp(d1: &DiagonalMatrix, rest: &[SymmetricMatrix]) -> Result<Polynomial, GmdError> {
    let mut all = vec![SymmetricMatrix::from_diagonal(d1)];
    all.extend_from_slice(rest);
    expand_det(&all)
}

/// All exponent vectors of length `n` with total degree in `1..=d`.
fn compositions(n: usize, d: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
        if pos == cur.len() {
            if cur.iter().any(|&e| e > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for e in 0..=remaining {
            cur[pos] = e;
            rec(out, cur, pos + 1, remaining - e);
        }
        cur[pos] = 0;
    }
    rec(&mut out, &mut cur, 0, d as u32);
    out
}

// ---------------------------------------------------------------------------
// Symbolic coefficient systems
// ---------------------------------------------------------------------------

/// Symmetric matrix template whose entries are numbers or named unknowns.
#[derive(Debug, Clone)]
pub struct MatrixTemplate {
    order: usize,
    entries: Vec<TemplateEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateEntry {
    Value(f64),
    Unknown(String),
}

impl MatrixTemplate {
    pub fn zeros(order: usize) -> Self {
        MatrixTemplate { order, entries: vec![TemplateEntry::Value(0.0); order * order] }
    }

    pub fn from_symmetric(a: &SymmetricMatrix) -> Self {
        let d = a.order();
        let entries = (0..d * d)
            .map(|idx| TemplateEntry::Value(a.get(idx / d, idx % d)))
            .collect();
        MatrixTemplate { order: d, entries }
    }

    pub fn from_diagonal(d: &DiagonalMatrix) -> Self {
        Self::from_symmetric(&SymmetricMatrix::from_diagonal(d))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Sets entry (i, j) and its mirror.
    pub fn set(&mut self, i: usize, j: usize, e: TemplateEntry) {
        self.entries[i * self.order + j] = e.clone();
        self.entries[j * self.order + i] = e;
    }

    pub fn get(&self, i: usize, j: usize) -> &TemplateEntry {
        &self.entries[i * self.order + j]
    }

    /// Template with the given diagonal and unknowns `"{prefix}{i}{j}"`
    /// (1-indexed) on the off-diagonal.
    pub fn with_unknown_offdiag(diag: &[f64], prefix: &str) -> Self {
        let d = diag.len();
        let mut t = MatrixTemplate::zeros(d);
        for (i, &v) in diag.iter().enumerate() {
            t.set(i, i, TemplateEntry::Value(v));
        }
        for i in 0..d {
            for j in i + 1..d {
                t.set(i, j, TemplateEntry::Unknown(format!("{prefix}{}{}", i + 1, j + 1)));
            }
        }
        t
    }
}

/// A square polynomial system in named unknowns: `generators[i] = 0`.
#[derive(Debug, Clone)]
pub struct CoefficientSystem {
    pub unknowns: Vec<String>,
    pub generators: Vec<Polynomial>,
    pub monomials: Vec<Vec<u32>>,
}

impl CoefficientSystem {
    pub fn evaluate(&self, point: &[f64]) -> Vec<f64> {
        self.generators.iter().map(|g| g.evaluate(point)).collect()
    }
}

/// Builds the polynomial system expressing "the determinant expansion of the
/// templates matches `target` on the given monomials". For each requested
/// monomial the generator is `gmd(tuple) - coefficient(target, monomial)`,
/// a polynomial in the templates' unknowns. Unknown names must be distinct
/// across all templates; templates[i] is the coefficient matrix of `x_{i+1}`.
pub fn coefficient_system(
    templates: &[MatrixTemplate],
    target: &Polynomial,
    monomials: &[Vec<u32>],
) -> Result<CoefficientSystem, GmdError> {
    let n = templates.len();
    let d = templates.first().map(|t| t.order()).ok_or(GmdError::EmptyTuple)?;
    for t in templates {
        if t.order() != d {
            return Err(GmdError::OrderMismatch { expected: d, got: t.order() });
        }
    }
    // collect unknowns in deterministic order: template by template, upper
    // triangle row-major
    let mut unknowns: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for t in templates {
        for i in 0..d {
            for j in i..d {
                if let TemplateEntry::Unknown(name) = t.get(i, j) {
                    if !seen.insert(name.clone()) {
                        return Err(GmdError::UnknownCollision { name: name.clone() });
                    }
                    unknowns.push(name.clone());
                }
            }
        }
    }
    let nv = unknowns.len();
    let index_of = |name: &str| unknowns.iter().position(|u| u == name).unwrap();

    let generic: Vec<GenericMatrix> = templates
        .iter()
        .map(|t| {
            let entries = (0..d * d)
                .map(|idx| match t.get(idx / d, idx % d) {
                    TemplateEntry::Value(v) => RingElement::Num(*v),
                    TemplateEntry::Unknown(name) => {
                        RingElement::Sym(Polynomial::variable(nv, index_of(name) + 1))
                    }
                })
                .collect();
            GenericMatrix::from_entries(d, entries)
        })
        .collect();

    let mut generators = Vec::with_capacity(monomials.len());
    for m in monomials {
        if m.len() != n {
            return Err(GmdError::MissingCoefficient { monomial: m.clone() });
        }
        let slots: Vec<(GenericMatrix, usize)> = m
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (generic[i].clone(), e as usize))
            .collect();
        let tuple = GmdTuple::new(slots)?;
        let expansion = gmd(&tuple).promote(nv);
        let gen = expansion
            .sub(&Polynomial::constant(nv, target.coefficient(m)))
            .expect("same unknowns");
        generators.push(gen);
    }
    Ok(CoefficientSystem { unknowns, generators, monomials: monomials.to_vec() })
}
