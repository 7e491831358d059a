//! Signature-matrix equivalence of representations: orbit generation,
//! canonical forms, class partitioning, and transition-matrix recovery.
//!
//! Conjugating a coefficient matrix by a diagonal +-1 matrix leaves the
//! diagonal untouched and flips off-diagonal signs, so representations that
//! differ only by such a conjugation describe the same polynomial. The
//! all-minus signature acts like the all-plus one, which is why orbits are
//! enumerated with the first sign pinned to +1.

use crate::bivariate::Msdr;
use crate::linalg::{sym_eigen, DiagonalMatrix, OrthogonalMatrix, SymmetricMatrix};

/// Diagonal matrix with +-1 entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureMatrix {
    signs: Vec<i8>,
}

impl SignatureMatrix {
    pub fn new(signs: Vec<i8>) -> Self {
        assert!(signs.iter().all(|s| *s == 1 || *s == -1), "signs must be +-1");
        SignatureMatrix { signs }
    }

    pub fn identity(order: usize) -> Self {
        SignatureMatrix { signs: vec![1; order] }
    }

    pub fn order(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// All 2^d signatures.
    pub fn all(order: usize) -> Vec<SignatureMatrix> {
        (0..1u32 << order)
            .map(|bits| {
                SignatureMatrix::new(
                    (0..order).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect(),
                )
            })
            .collect()
    }

    /// The 2^{d-1} signatures with the first sign fixed to +1; these reach
    /// every distinct conjugation once.
    pub fn half_orbit(order: usize) -> Vec<SignatureMatrix> {
        SignatureMatrix::all(order)
            .into_iter()
            .filter(|s| s.signs[0] == 1)
            .collect()
    }
}

/// `D A D` for the signature matrix `D`: entry (i, j) scaled by `s_i s_j`.
pub fn conjugate(a: &SymmetricMatrix, s: &SignatureMatrix) -> SymmetricMatrix {
    assert_eq!(a.order(), s.order(), "order mismatch");
    let d = a.order();
    let mut out = SymmetricMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            out.set(i, j, a.get(i, j) * (s.signs[i] * s.signs[j]) as f64);
        }
    }
    out
}

fn conjugate_all(mats: &[SymmetricMatrix], s: &SignatureMatrix) -> Vec<SymmetricMatrix> {
    mats.iter().map(|a| conjugate(a, s)).collect()
}

fn flatten(mats: &[SymmetricMatrix]) -> Vec<f64> {
    let mut v = Vec::new();
    for m in mats {
        for i in 0..m.order() {
            for j in 0..m.order() {
                v.push(m.get(i, j));
            }
        }
    }
    v
}

fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Normal form of a representation under the joint signature action: among
/// the 2^{d-1} orbit members the one with the lexicographically greatest
/// flattened entry sequence. Idempotent; sign flips are exact, so all orbit
/// members canonicalize to bitwise-identical output.
pub fn canonicalize(rep: &Msdr) -> Msdr {
    let d = rep.d1.order();
    let mut best = rep.matrices.clone();
    let mut best_key = flatten(&best);
    for s in SignatureMatrix::half_orbit(d).into_iter().skip(1) {
        let cand = conjugate_all(&rep.matrices, &s);
        let key = flatten(&cand);
        if lex_greater(&key, &best_key) {
            best = cand;
            best_key = key;
        }
    }
    Msdr { d1: rep.d1.clone(), matrices: best, residual: rep.residual, verified: rep.verified }
}

/// Partition of representations (sharing one diagonal factor) into signature
/// classes, comparing canonical forms entrywise within `tol`.
pub fn classes(reps: &[Msdr], tol: f64) -> Vec<Vec<Msdr>> {
    let mut keys: Vec<Vec<f64>> = Vec::new();
    let mut groups: Vec<Vec<Msdr>> = Vec::new();
    for rep in reps {
        let canon = canonicalize(rep);
        let key = flatten(&canon.matrices);
        let found = keys.iter().position(|k| {
            k.len() == key.len()
                && k.iter().zip(&key).all(|(a, b)| (a - b).abs() <= tol)
        });
        match found {
            Some(idx) => groups[idx].push(rep.clone()),
            None => {
                keys.push(key);
                groups.push(vec![rep.clone()]);
            }
        }
    }
    groups
}

/// Eigendecomposition `A = V D V^T` with `D` descending; `V` is the
/// transition matrix from the diagonal factor to `A`, fixed up to signature
/// by the eigenvector sign convention.
pub fn recover_transition(a: &SymmetricMatrix) -> (DiagonalMatrix, OrthogonalMatrix) {
    let (eigs, v) = sym_eigen(a);
    (DiagonalMatrix::new(eigs), v)
}

/// Nearest signature matrix to `w` in Frobenius norm, and the distance. The
/// minimizer takes each diagonal sign independently.
pub fn nearest_signature(w: &OrthogonalMatrix) -> (SignatureMatrix, f64) {
    let d = w.order();
    let signs: Vec<i8> = (0..d).map(|i| if w.get(i, i) < 0.0 { -1 } else { 1 }).collect();
    let mut dist2 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { signs[i] as f64 } else { 0.0 };
            dist2 += (w.get(i, j) - target).powi(2);
        }
    }
    (SignatureMatrix::new(signs), dist2.sqrt())
}
