//! Command implementations behind the `detrep` binary: polynomial input
//! handling, the solve/verify/gmd/rz-check/random commands, exit-code
//! mapping, and the JSON report shapes.
//!
//! Exit codes: 0 found / passed, 1 input error, 2 certified impossible
//! (complex restricted roots, inconsistent diagonal system, or an empty real
//! variety in the closed form), 3 search budget or compatibility exhausted.

use crate::bivariate::{
    residual_scale, solve_bivariate, verify_residual, Msdr, SolveConfig, SolveReport, SolveStatus,
};
use crate::gmd::{expand_det_lmp, gmd, GenericMatrix, GmdTuple};
use crate::linalg::{
    negative_reciprocal_eigs, real_roots, sym_eigen, DiagonalMatrix, LinalgError, SymmetricMatrix,
    DEFAULT_ROOT_TOL,
};
use crate::multivariate::solve_multivariate;
use crate::poly::{parse_expression, Polynomial};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_IMPOSSIBLE: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;

/// CLI-level configuration; thin wrapper over [`SolveConfig`] plus output
/// options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tol_verify: f64,
    pub tol_linear: f64,
    pub tol_compat: f64,
    pub newton_starts: Option<usize>,
    pub normalize_constant: bool,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Text,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolveConfig::default();
        RunConfig {
            seed: s.seed,
            tol_verify: s.tol_verify,
            tol_linear: s.tol_linear,
            tol_compat: s.tol_compat,
            newton_starts: None,
            normalize_constant: false,
            format: OutputFormat::Text,
        }
    }
}

impl RunConfig {
    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            seed: self.seed,
            tol_verify: self.tol_verify,
            tol_linear: self.tol_linear,
            tol_compat: self.tol_compat,
            newton_starts: self.newton_starts,
            ..SolveConfig::default()
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

// ---------------------------------------------------------------------------
// JSON shapes
// ---------------------------------------------------------------------------

/// The representation interchange format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationJson {
    pub d: usize,
    #[serde(rename = "D1")]
    pub d1: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    pub residual: f64,
    pub classes: usize,
}

impl RepresentationJson {
    pub fn from_msdr(m: &Msdr, classes: usize) -> Self {
        RepresentationJson {
            d: m.order(),
            d1: m.d1.diag().to_vec(),
            a: m.matrices.iter().map(|a| a.to_rows()).collect(),
            residual: m.residual,
            classes,
        }
    }

    pub fn to_parts(&self) -> Result<(DiagonalMatrix, Vec<SymmetricMatrix>), CliError> {
        if self.d1.len() != self.d {
            return Err(input_err(format!(
                "D1 has {} entries, expected {}",
                self.d1.len(),
                self.d
            )));
        }
        let mut mats = Vec::new();
        for rows in &self.a {
            let m = SymmetricMatrix::from_rows(rows)
                .map_err(|e| input_err(format!("bad coefficient matrix: {e}")))?;
            if m.order() != self.d {
                return Err(input_err(format!(
                    "coefficient matrix of order {}, expected {}",
                    m.order(),
                    self.d
                )));
            }
            mats.push(m);
        }
        Ok((DiagonalMatrix::new(self.d1.clone()), mats))
    }
}

#[derive(Debug, Serialize)]
pub struct SolveOutput {
    pub status: SolveStatus,
    pub classes: usize,
    pub representations: Vec<RepresentationJson>,
    pub diagnostics: crate::bivariate::Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_by: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct VerifyOutput {
    pub residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Serialize)]
pub struct RandomOutput {
    pub polynomial: Polynomial,
    pub representation: RepresentationJson,
}

// ---------------------------------------------------------------------------
// Input handling
// ---------------------------------------------------------------------------

/// Polynomial input: a JSON file (canonical polynomial format) or an
/// expression string with an optional explicit variable count.
pub enum PolyInput {
    File(String),
    Expr { text: String, nvars: Option<usize> },
}

pub fn load_polynomial(input: &PolyInput) -> Result<Polynomial, CliError> {
    match input {
        PolyInput::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_err(format!("cannot read {path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| input_err(format!("bad polynomial JSON: {e}")))
        }
        PolyInput::Expr { text, nvars } => {
            let n = match nvars {
                Some(n) => *n,
                None => max_variable_index(text)?,
            };
            if n == 0 {
                return Err(input_err("expression uses no variables; pass --nvars"));
            }
            parse_expression(text, n).map_err(|e| input_err(e.to_string()))
        }
    }
}

fn max_variable_index(text: &str) -> Result<usize, CliError> {
    let bytes = text.as_bytes();
    let mut max = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'x' {
            let mut j = i + 1;
            let mut val = 0usize;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                val = val * 10 + (bytes[j] - b'0') as usize;
                j += 1;
            }
            if j > i + 1 {
                max = max.max(val);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    Ok(max)
}

/// Normalizes the constant term to 1 when allowed; returns the divisor used.
fn normalize_input(f: Polynomial, config: &RunConfig) -> Result<(Polynomial, Option<f64>), CliError> {
    let f0 = f.coefficient(&vec![0; f.nvars()]);
    if (f0 - 1.0).abs() <= 1e-9 {
        return Ok((f, None));
    }
    if config.normalize_constant && f0 > 0.0 {
        eprintln!("warning: dividing input by f(0) = {f0}; the result represents f/f(0)");
        return Ok((f.scale(1.0 / f0), Some(f0)));
    }
    Err(input_err(format!(
        "constant term is {f0}, not 1; a monic representation needs f(0) = 1 \
         (pass --normalize to divide by f(0) when positive)"
    )))
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Dispatches by variable count and degree; returns the report and its exit
/// code. Degree-1 and univariate inputs are handled directly.
pub fn cmd_solve(input: &PolyInput, config: &RunConfig) -> Result<(SolveOutput, i32), CliError> {
    let f = load_polynomial(input)?;
    let (f, normalized_by) = normalize_input(f, config)?;
    let n = f.nvars();
    let d = f.degree();
    if d == 0 {
        return Err(input_err("constant polynomial has the trivial empty representation"));
    }
    let report = if d == 1 {
        solve_linear_polynomial(&f)
    } else if n == 1 {
        solve_univariate(&f)
    } else if n == 2 {
        if !(2..=6).contains(&d) {
            return Err(input_err(format!("bivariate degree {d} outside the supported 2..=6")));
        }
        solve_bivariate(&f, &config.solve_config())
    } else {
        if !(2..=4).contains(&d) {
            return Err(input_err(format!(
                "multivariate degree {d} outside the supported 2..=4"
            )));
        }
        if n > 6 {
            return Err(input_err(format!("{n} variables outside the supported 2..=6")));
        }
        solve_multivariate(&f, &config.solve_config())
    };
    let code = match report.status {
        SolveStatus::Found => EXIT_OK,
        ref s if s.is_certified_impossible() => EXIT_IMPOSSIBLE,
        _ => EXIT_EXHAUSTED,
    };
    let classes = report.representations.len();
    Ok((
        SolveOutput {
            status: report.status,
            classes,
            representations: report
                .representations
                .iter()
                .map(|m| RepresentationJson::from_msdr(m, classes))
                .collect(),
            diagnostics: report.diagnostics,
            normalized_by,
        },
        code,
    ))
}

/// Degree-1 polynomials are determinants of 1x1 matrices.
fn solve_linear_polynomial(f: &Polynomial) -> SolveReport {
    let n = f.nvars();
    let mut exp = vec![0u32; n];
    exp[0] = 1;
    let d1 = DiagonalMatrix::new(vec![f.coefficient(&exp)]);
    let mats: Vec<SymmetricMatrix> = (2..=n)
        .map(|i| {
            let mut e = vec![0u32; n];
            e[i - 1] = 1;
            let mut m = SymmetricMatrix::zeros(1);
            m.set(0, 0, f.coefficient(&e));
            m
        })
        .collect();
    let residual = verify_residual(f, &d1, &mats);
    let verified = residual <= 1e-9 * residual_scale(f);
    let status = if verified { SolveStatus::Found } else { SolveStatus::BudgetExhausted };
    let reps =
        if verified { vec![Msdr { d1, matrices: mats, residual, verified }] } else { vec![] };
    SolveReport { status, representations: reps, diagnostics: Default::default() }
}

/// Univariate polynomials factor through their root set: `D1` holds the
/// negative reciprocal roots.
fn solve_univariate(f: &Polynomial) -> SolveReport {
    let d = f.degree();
    match negative_reciprocal_eigs(&f.restrict_axis(1), d, DEFAULT_ROOT_TOL) {
        Ok(eigs) => {
            let d1 = DiagonalMatrix::new(eigs);
            let residual = verify_residual(f, &d1, &[]);
            let verified = residual <= 1e-8 * residual_scale(f);
            let status =
                if verified { SolveStatus::Found } else { SolveStatus::BudgetExhausted };
            let reps = if verified {
                vec![Msdr { d1, matrices: vec![], residual, verified }]
            } else {
                vec![]
            };
            SolveReport { status, representations: reps, diagnostics: Default::default() }
        }
        Err(_) => SolveReport {
            status: SolveStatus::NoRealEigs { axis: 1 },
            representations: vec![],
            diagnostics: Default::default(),
        },
    }
}

pub fn cmd_verify(
    input: &PolyInput,
    rep_path: &str,
    config: &RunConfig,
) -> Result<(VerifyOutput, i32), CliError> {
    let f = load_polynomial(input)?;
    let (f, _) = normalize_input(f, config)?;
    let text = std::fs::read_to_string(rep_path)
        .map_err(|e| input_err(format!("cannot read {rep_path}: {e}")))?;
    let rep: RepresentationJson =
        serde_json::from_str(&text).map_err(|e| input_err(format!("bad representation JSON: {e}")))?;
    let (d1, mats) = rep.to_parts()?;
    if f.nvars() != mats.len() + 1 {
        return Err(input_err(format!(
            "representation has {} coefficient matrices for a {}-variable polynomial",
            mats.len() + 1,
            f.nvars()
        )));
    }
    let residual = verify_residual(&f, &d1, &mats);
    let tolerance = config.tol_verify * residual_scale(&f);
    let ok = residual <= tolerance;
    let code = if ok { EXIT_OK } else { EXIT_EXHAUSTED };
    Ok((VerifyOutput { residual, tolerance, ok }, code))
}

#[derive(Debug, Deserialize)]
pub struct GmdInput {
    pub order: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub multiplicities: Vec<usize>,
}

pub fn cmd_gmd(path: &str) -> Result<f64, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {path}: {e}")))?;
    let input: GmdInput =
        serde_json::from_str(&text).map_err(|e| input_err(format!("bad gmd JSON: {e}")))?;
    if input.matrices.len() != input.multiplicities.len() {
        return Err(input_err("matrices and multiplicities must have equal length"));
    }
    let mut slots = Vec::new();
    for (rows, &mu) in input.matrices.iter().zip(&input.multiplicities) {
        let m = SymmetricMatrix::from_rows(rows)
            .map_err(|e| input_err(format!("bad matrix: {e}")))?;
        if m.order() != input.order {
            return Err(input_err(format!(
                "matrix of order {}, expected {}",
                m.order(),
                input.order
            )));
        }
        if mu > 0 {
            slots.push((GenericMatrix::from_symmetric(&m), mu));
        }
    }
    let tuple = GmdTuple::new(slots).map_err(|e| input_err(e.to_string()))?;
    Ok(gmd(&tuple).as_num().expect("numeric tuple"))
}

/// Checks the necessary condition only: every axis restriction must have all
/// real roots. Passing says nothing about sufficiency.
pub fn cmd_rz_check(input: &PolyInput, config: &RunConfig) -> Result<(Vec<String>, i32), CliError> {
    let f = load_polynomial(input)?;
    let (f, _) = normalize_input(f, config)?;
    let mut lines = Vec::new();
    let mut code = EXIT_OK;
    for i in 1..=f.nvars() {
        let r = f.restrict_axis(i);
        if r.is_constant() {
            lines.push(format!("axis {i}: constant restriction, vacuously real"));
            continue;
        }
        match real_roots(&r, DEFAULT_ROOT_TOL) {
            Ok(roots) => {
                let total: usize = roots.iter().map(|(_, m)| m).sum();
                lines.push(format!("axis {i}: all {total} roots real"));
            }
            Err(LinalgError::NotAllReal { real_count, degree }) => {
                lines.push(format!("axis {i}: only {real_count} of {degree} roots real"));
                code = EXIT_IMPOSSIBLE;
            }
            Err(e) => return Err(input_err(e.to_string())),
        }
    }
    lines.push(if code == EXIT_OK {
        "necessary condition passed (this does not certify a representation exists)".to_string()
    } else {
        "necessary condition failed: no monic symmetric representation exists".to_string()
    });
    Ok((lines, code))
}

/// Samples a random determinantal instance: symmetric matrices with entries
/// uniform in [-1, 1], the first one diagonalized (resampling until its
/// eigenvalues are well separated), and the expanded polynomial.
pub fn cmd_random(d: usize, n: usize, seed: u64) -> Result<RandomOutput, CliError> {
    if d == 0 || d > 6 {
        return Err(input_err("degree must be in 1..=6"));
    }
    if n == 0 || n > 6 {
        return Err(input_err("variable count must be in 1..=6"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d1 = loop {
        let mut a = SymmetricMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let (eigs, _) = sym_eigen(&a);
        let min_gap = eigs
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        if d == 1 || min_gap > 1e-3 {
            break DiagonalMatrix::new(eigs);
        }
    };
    let mats: Vec<SymmetricMatrix> = (1..n)
        .map(|_| {
            let mut a = SymmetricMatrix::zeros(d);
            for i in 0..d {
                for j in i..d {
                    a.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            a
        })
        .collect();
    let f = expand_det_lmp(&d1, &mats).map_err(|e| input_err(e.to_string()))?;
    let residual = verify_residual(&f, &d1, &mats);
    let rep = Msdr { d1, matrices: mats, residual, verified: true };
    Ok(RandomOutput {
        polynomial: f,
        representation: RepresentationJson::from_msdr(&rep, 1),
    })
}

// ---------------------------------------------------------------------------
// Text rendering
// ---------------------------------------------------------------------------

pub fn render_solve_text(out: &SolveOutput) -> String {
    let mut s = String::new();
    s.push_str(&format!("status: {}\n", out.status));
    s.push_str(&format!("equivalence classes: {}\n", out.classes));
    if let Some(f0) = out.normalized_by {
        s.push_str(&format!("input divided by f(0) = {f0}\n"));
    }
    for (i, rep) in out.representations.iter().enumerate() {
        s.push_str(&format!("\nrepresentation {} (residual {:.3e}):\n", i + 1, rep.residual));
        s.push_str(&format!("  D1 = {:?}\n", rep.d1));
        for (j, m) in rep.a.iter().enumerate() {
            s.push_str(&format!("  A1{} =\n", j + 2));
            for row in m {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
                s.push_str(&format!("    [{}]\n", cells.join(", ")));
            }
        }
    }
    if !out.diagnostics.log.is_empty() {
        s.push_str("\ndiagnostics:\n");
        for line in &out.diagnostics.log {
            s.push_str(&format!("  {line}\n"));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(text: &str, nvars: usize) -> PolyInput {
        PolyInput::Expr { text: text.to_string(), nvars: Some(nvars) }
    }

    #[test]
    fn solve_worked_cubic_exit_zero() {
        let (out, code) = cmd_solve(
            &expr(
                "6*x1^3 + 36*x1^2*x2 + 11*x1^2 + 66*x1*x2^2 + 42*x1*x2 + 6*x1 + 36*x2^3 + 36*x2^2 + 11*x2 + 1",
                2,
            ),
            &RunConfig::default(),
        )
        .unwrap();
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.classes, 2);
    }

    #[test]
    fn solve_complex_axis_exit_two() {
        let (out, code) = cmd_solve(&expr("1 + x1^2 + x2", 2), &RunConfig::default()).unwrap();
        assert_eq!(code, EXIT_IMPOSSIBLE);
        assert_eq!(out.classes, 0);
    }

    #[test]
    fn solve_then_verify_round_trip() {
        let (out, code) =
            cmd_solve(&expr("(1+x1)*(1+2*x1+3*x2)*(1-1*x1+x2)", 2), &RunConfig::default())
                .unwrap();
        assert_eq!(code, EXIT_OK);
        let dir = std::env::temp_dir().join(format!("detrep-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rep_path = dir.join("rep.json");
        std::fs::write(&rep_path, serde_json::to_string(&out.representations[0]).unwrap())
            .unwrap();
        let (v, code) = cmd_verify(
            &expr("(1+x1)*(1+2*x1+3*x2)*(1-1*x1+x2)", 2),
            rep_path.to_str().unwrap(),
            &RunConfig::default(),
        )
        .unwrap();
        assert_eq!(code, EXIT_OK);
        assert!(v.ok && v.residual <= v.tolerance);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn verify_perturbed_entry_fails() {
        let (out, _) = cmd_solve(
            &expr(
                "6*x1^3 + 36*x1^2*x2 + 11*x1^2 + 66*x1*x2^2 + 42*x1*x2 + 6*x1 + 36*x2^3 + 36*x2^2 + 11*x2 + 1",
                2,
            ),
            &RunConfig::default(),
        )
        .unwrap();
        let mut rep = out.representations[0].clone();
        rep.a[0][0][1] += 0.1;
        rep.a[0][1][0] += 0.1;
        let dir = std::env::temp_dir().join(format!("detrep-test-v-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rep_path = dir.join("rep.json");
        std::fs::write(&rep_path, serde_json::to_string(&rep).unwrap()).unwrap();
        let (v, code) = cmd_verify(
            &expr(
                "6*x1^3 + 36*x1^2*x2 + 11*x1^2 + 66*x1*x2^2 + 42*x1*x2 + 6*x1 + 36*x2^3 + 36*x2^2 + 11*x2 + 1",
                2,
            ),
            rep_path.to_str().unwrap(),
            &RunConfig::default(),
        )
        .unwrap();
        assert_ne!(code, EXIT_OK);
        assert!(!v.ok);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rz_check_examples() {
        let (_, code) = cmd_rz_check(
            &expr(
                "6*x1^3 + 36*x1^2*x2 + 11*x1^2 + 66*x1*x2^2 + 42*x1*x2 + 6*x1 + 36*x2^3 + 36*x2^2 + 11*x2 + 1",
                2,
            ),
            &RunConfig::default(),
        )
        .unwrap();
        assert_eq!(code, EXIT_OK);
        let (_, code) = cmd_rz_check(&expr("1 + x1^2", 1), &RunConfig::default()).unwrap();
        assert_eq!(code, EXIT_IMPOSSIBLE);
    }

    #[test]
    fn random_reproducible_and_verified() {
        let a = cmd_random(3, 2, 99).unwrap();
        let b = cmd_random(3, 2, 99).unwrap();
        assert_eq!(
            serde_json::to_string(&a.polynomial).unwrap(),
            serde_json::to_string(&b.polynomial).unwrap()
        );
        assert!(a.representation.residual <= 1e-10 * residual_scale(&a.polynomial));
        // degree 1: product of linear forms
        let lin = cmd_random(1, 3, 5).unwrap();
        assert_eq!(lin.polynomial.degree(), 1);
    }

    #[test]
    fn degree_one_and_univariate_paths() {
        let (out, code) = cmd_solve(&expr("1 + 2*x1 + 3*x2 - 1*x3", 3), &RunConfig::default())
            .unwrap();
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.representations[0].d, 1);

        let (out, code) = cmd_solve(&expr("(1+x1)*(1+2*x1)", 1), &RunConfig::default()).unwrap();
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.representations[0].d1.len(), 2);

        let err = cmd_solve(&expr("2 + x1", 1), &RunConfig::default());
        assert!(err.is_err());
        let cfg = RunConfig { normalize_constant: true, ..RunConfig::default() };
        let (out, code) = cmd_solve(&expr("2 + x1", 1), &cfg).unwrap();
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.normalized_by, Some(2.0));
    }

    #[test]
    fn nvars_inference_from_expression() {
        let input = PolyInput::Expr { text: "1 + x1*x3".to_string(), nvars: None };
        let f = load_polynomial(&input).unwrap();
        assert_eq!(f.nvars(), 3);
    }
}
