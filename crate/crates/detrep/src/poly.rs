//! Sparse multivariate polynomials over `f64`, the expression parser, and the
//! canonical JSON form used by the CLI.
//!
//! A [`Polynomial`] maps exponent vectors (one entry per variable) to real
//! coefficients. Variables are 1-indexed as `x1..xn` in text form. On
//! construction, coefficients at or below [`NORMALIZE_EPS`] relative to the
//! largest coefficient magnitude are dropped, so a polynomial never stores
//! explicit (or effectively-zero) terms. Values are immutable after
//! construction; every operation returns a fresh polynomial.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// Relative threshold below which coefficients are dropped during normalization.
pub const NORMALIZE_EPS: f64 = 1e-14;

/// Errors from polynomial ring operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    /// Two operands disagree on the number of variables.
    NvarsMismatch { left: usize, right: usize },
    /// An exponent vector has the wrong length.
    BadExponentLength { expected: usize, got: usize },
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::NvarsMismatch { left, right } => {
                write!(f, "operands have {left} and {right} variables")
            }
            PolyError::BadExponentLength { expected, got } => {
                write!(f, "exponent vector of length {got}, expected {expected}")
            }
        }
    }
}

impl std::error::Error for PolyError {}

/// Sparse multivariate polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    /// The zero polynomial in `nvars` variables.
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    /// The constant polynomial `c`.
    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The single variable `x_{index}` (1-indexed).
    pub fn variable(nvars: usize, index: usize) -> Self {
        assert!(index >= 1 && index <= nvars, "variable index out of range");
        let mut exp = vec![0u32; nvars];
        exp[index - 1] = 1;
        let mut p = Polynomial::zero(nvars);
        p.terms.insert(exp, 1.0);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing
    /// duplicates and normalizing away negligible coefficients.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exp, c) in terms {
            if exp.len() != nvars {
                return Err(PolyError::BadExponentLength { expected: nvars, got: exp.len() });
            }
            *map.entry(exp).or_insert(0.0) += c;
        }
        let mut p = Polynomial { nvars, terms: map };
        p.normalize();
        Ok(p)
    }

    fn normalize(&mut self) {
        let max = self.max_abs_coefficient();
        let cut = NORMALIZE_EPS * max;
        self.terms.retain(|_, c| c.abs() > cut && *c != 0.0);
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of the given exponent vector (0 if absent).
    pub fn coefficient(&self, exp: &[u32]) -> f64 {
        assert_eq!(exp.len(), self.nvars, "exponent length");
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude; 0 for the zero polynomial.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Iterates terms in the map's (plain lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    /// Terms sorted in graded lexicographic order (total degree, then lex).
    pub fn graded_terms(&self) -> Vec<(Vec<u32>, f64)> {
        let mut v: Vec<(Vec<u32>, f64)> = self.terms.iter().map(|(e, &c)| (e.clone(), c)).collect();
        v.sort_by(|(a, _), (b, _)| {
            let da: u64 = a.iter().map(|&k| k as u64).sum();
            let db: u64 = b.iter().map(|&k| k as u64).sum();
            da.cmp(&db).then_with(|| a.cmp(b))
        });
        v
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        let mut map = self.terms.clone();
        for (e, c) in &other.terms {
            *map.entry(e.clone()).or_insert(0.0) += c;
        }
        let mut p = Polynomial { nvars: self.nvars, terms: map };
        p.normalize();
        Ok(p)
    }

    /// `self - other`; the residual-forming operation.
    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        let mut p = Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        };
        p.normalize();
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *map.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        let mut p = Polynomial { nvars: self.nvars, terms: map };
        p.normalize();
        Ok(p)
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same nvars");
        }
        out
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars, "point length");
        let mut sum = 0.0;
        for (exp, c) in &self.terms {
            let mut t = *c;
            for (x, &k) in point.iter().zip(exp) {
                t *= x.powi(k as i32);
            }
            sum += t;
        }
        sum
    }

    /// Partial derivative with respect to variable `var` (0-indexed).
    pub fn derivative(&self, var: usize) -> Polynomial {
        assert!(var < self.nvars, "variable index");
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exp, c) in &self.terms {
            if exp[var] == 0 {
                continue;
            }
            let mut e = exp.clone();
            let k = e[var];
            e[var] = k - 1;
            *map.entry(e).or_insert(0.0) += c * k as f64;
        }
        let mut p = Polynomial { nvars: self.nvars, terms: map };
        p.normalize();
        p
    }

    /// Restriction along axis `i` (1-indexed): all other variables set to zero.
    pub fn restrict_axis(&self, i: usize) -> UnivariatePolynomial {
        assert!(i >= 1 && i <= self.nvars, "axis index out of range");
        let vi = i - 1;
        let mut coeffs = vec![0.0; self.degree() + 1];
        for (exp, c) in &self.terms {
            if exp.iter().enumerate().all(|(j, &k)| j == vi || k == 0) {
                coeffs[exp[vi] as usize] += c;
            }
        }
        UnivariatePolynomial::new(coeffs)
    }

    /// Restriction to the plane of variables `i < j` (1-indexed), relabeled to
    /// a 2-variable polynomial with `x_i` first.
    pub fn restrict_pair(&self, i: usize, j: usize) -> Polynomial {
        assert!(i >= 1 && j <= self.nvars && i < j, "pair indices out of range");
        let (vi, vj) = (i - 1, j - 1);
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exp, c) in &self.terms {
            if exp.iter().enumerate().all(|(t, &k)| t == vi || t == vj || k == 0) {
                *map.entry(vec![exp[vi], exp[vj]]).or_insert(0.0) += c;
            }
        }
        let mut p = Polynomial { nvars: 2, terms: map };
        p.normalize();
        p
    }

    /// Substitutes the affine map `u = offset + directions^T t` for the
    /// variables of `self`, returning a polynomial in the `t` parameters.
    /// `offset` has one entry per current variable; `directions[k]` is the
    /// coefficient vector of parameter `t_k`.
    pub fn compose_affine(&self, offset: &[f64], directions: &[Vec<f64>]) -> Polynomial {
        assert_eq!(offset.len(), self.nvars);
        for d in directions {
            assert_eq!(d.len(), self.nvars);
        }
        let m = directions.len();
        // affine polynomial for each original variable
        let subs: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                let mut terms = vec![(vec![0u32; m], offset[i])];
                for (k, dir) in directions.iter().enumerate() {
                    let mut e = vec![0u32; m];
                    e[k] = 1;
                    terms.push((e, dir[i]));
                }
                Polynomial::from_terms(m, terms).expect("consistent widths")
            })
            .collect();
        let mut out = Polynomial::zero(m);
        for (exp, c) in &self.terms {
            let mut t = Polynomial::constant(m, *c);
            for (i, &k) in exp.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&subs[i].pow(k)).expect("same nvars");
                }
            }
            out = out.add(&t).expect("same nvars");
        }
        out
    }

    /// Restriction to the first `k` variables: terms involving later
    /// variables are dropped and the width shrinks to `k`.
    pub fn restrict_prefix(&self, k: usize) -> Polynomial {
        assert!(k >= 1 && k <= self.nvars);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[k..].iter().all(|&x| x == 0))
            .map(|(e, &c)| (e[..k].to_vec(), c));
        Polynomial::from_terms(k, terms).expect("prefix width")
    }

    /// Relabels variables: new variable `i` is old variable `perm[i]`
    /// (0-indexed); `perm` must be a permutation of `0..nvars`.
    pub fn permute_vars(&self, perm: &[usize]) -> Polynomial {
        assert_eq!(perm.len(), self.nvars);
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| (perm.iter().map(|&src| e[src]).collect::<Vec<u32>>(), c));
        Polynomial::from_terms(self.nvars, terms).expect("permutation preserves width")
    }

    /// Approximate equality on all coefficients (absolute tolerance).
    pub fn approx_eq(&self, other: &Polynomial, tol: f64) -> bool {
        self.nvars == other.nvars
            && self.sub(other).map(|d| d.max_abs_coefficient() <= tol).unwrap_or(false)
    }

    /// Renders the polynomial in the expression grammar; parsing the result
    /// reproduces the polynomial exactly.
    pub fn to_expression_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        let mut terms = self.graded_terms();
        terms.reverse(); // highest degree first
        for (idx, (exp, c)) in terms.iter().enumerate() {
            let neg = *c < 0.0;
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mag = c.abs();
            let factors: Vec<String> = exp
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, k)
                    }
                })
                .collect();
            if factors.is_empty() {
                out.push_str(&format!("{mag}"));
            } else if mag == 1.0 {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&format!("{mag}*{}", factors.join("*")));
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expression_string())
    }
}

impl Polynomial {
    fn check_nvars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    nvars: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            nvars: self.nvars,
            terms: self
                .graded_terms()
                .into_iter()
                .map(|(exp, coef)| TermRepr { exp, coef })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Polynomial::from_terms(repr.nvars, repr.terms.into_iter().map(|t| (t.exp, t.coef)))
            .map_err(D::Error::custom)
    }
}

/// Dense univariate polynomial, constant term first. The leading stored
/// coefficient is nonzero (relative to the largest coefficient), so
/// `coeffs.len() - 1` is the degree.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariatePolynomial {
    coeffs: Vec<f64>,
}

impl UnivariatePolynomial {
    /// Builds from coefficients (index = power), trimming a negligible tail.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = UnivariatePolynomial { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cut = NORMALIZE_EPS * max;
        while let Some(&last) = self.coeffs.last() {
            if self.coeffs.len() > 1 && last.abs() <= cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Horner evaluation.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> UnivariatePolynomial {
        if self.is_constant() {
            return UnivariatePolynomial::new(vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        UnivariatePolynomial::new(coeffs)
    }
}

impl fmt::Display for UnivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(k, c)| **c != 0.0 || *k == 0 && self.is_zero())
            .map(|(k, c)| match k {
                0 => format!("{c}"),
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

// ---------------------------------------------------------------------------
// Expression parser
// ---------------------------------------------------------------------------

/// Parse failure, carrying the byte position in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Syntax { pos: usize, expected: String, found: String },
    VariableOutOfRange { pos: usize, var: u64, nvars: usize },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { pos, expected, found } => {
                write!(f, "syntax error at {pos}: expected {expected}, found {found}")
            }
            ParseError::VariableOutOfRange { pos, var, nvars } => {
                write!(f, "variable x{var} at {pos} out of range for {nvars} variables")
            }
        }
    }
}

impl std::error::Error for ParseError {}

/// Parses an expression over `x1..x{nvars}` with `+ - * ^`, integer, decimal
/// and `p/q` rational literals, and parentheses. Implicit multiplication is
/// not accepted. The result is expanded and normalized.
pub fn parse_expression(text: &str, nvars: usize) -> Result<Polynomial, ParseError> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0, nvars };
    p.skip_ws();
    let poly = p.parse_expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.syntax("end of input"));
    }
    Ok(poly)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r')) {
            self.pos += 1;
        }
    }

    fn syntax(&self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Some(b) => format!("{:?}", b as char),
            None => "end of input".to_string(),
        };
        ParseError::Syntax { pos: self.pos, expected: expected.to_string(), found }
    }

    // expr := ['+'|'-'] term (('+'|'-') term)*
    fn parse_expr(&mut self) -> Result<Polynomial, ParseError> {
        self.skip_ws();
        let mut sign = 1.0;
        if let Some(b) = self.peek() {
            if b == b'+' || b == b'-' {
                self.pos += 1;
                if b == b'-' {
                    sign = -1.0;
                }
            }
        }
        let mut acc = self.parse_term()?.scale(sign);
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.add(&t).expect("same nvars");
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.sub(&t).expect("same nvars");
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := factor ('*' factor)*
    fn parse_term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                let f = self.parse_factor()?;
                acc = acc.mul(&f).expect("same nvars");
            } else {
                return Ok(acc);
            }
        }
    }

    // factor := base ('^' uint)?
    fn parse_factor(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.parse_base()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.parse_uint("exponent")?;
            if k > 255 {
                return Err(ParseError::Syntax {
                    pos: self.pos,
                    expected: "exponent <= 255".to_string(),
                    found: format!("{k}"),
                });
            }
            Ok(base.pow(k as u32))
        } else {
            Ok(base)
        }
    }

    // base := number | variable | '(' expr ')'
    fn parse_base(&mut self) -> Result<Polynomial, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.skip_ws();
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(self.syntax("')'"))
                }
            }
            Some(b'x') => {
                let start = self.pos;
                self.pos += 1;
                let var = self.parse_uint("variable index")?;
                if var < 1 || var as usize > self.nvars {
                    return Err(ParseError::VariableOutOfRange {
                        pos: start,
                        var,
                        nvars: self.nvars,
                    });
                }
                Ok(Polynomial::variable(self.nvars, var as usize))
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                let value = self.parse_number()?;
                Ok(Polynomial::constant(self.nvars, value))
            }
            _ => Err(self.syntax("number, variable, or '('")),
        }
    }

    // number := int | decimal | int '/' uint
    fn parse_number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while self.peek().map(|b| b.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().map(|b| b.is_ascii_digit()).unwrap_or(false) {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
            if text == "." {
                return Err(self.syntax("digits"));
            }
            return text.parse::<f64>().map_err(|_| self.syntax("decimal literal"));
        }
        if self.pos == start {
            return Err(self.syntax("digits"));
        }
        let int_text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let numerator: f64 = int_text.parse().map_err(|_| self.syntax("integer literal"))?;
        // rational p/q: '/' must be followed by digits, with no intervening space
        if self.peek() == Some(b'/') {
            let save = self.pos;
            self.pos += 1;
            if self.peek().map(|b| b.is_ascii_digit()).unwrap_or(false) {
                let denom = self.parse_uint("denominator")?;
                if denom == 0 {
                    return Err(ParseError::Syntax {
                        pos: save,
                        expected: "nonzero denominator".to_string(),
                        found: "0".to_string(),
                    });
                }
                return Ok(numerator / denom as f64);
            }
            self.pos = save;
        }
        Ok(numerator)
    }

    fn parse_uint(&mut self, what: &str) -> Result<u64, ParseError> {
        let start = self.pos;
        while self.peek().map(|b| b.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.syntax(what))
    }
}
