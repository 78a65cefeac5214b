//! Non-negative least squares.
//!
//! Solves `min_{γ ≥ 0} ‖B γ + σ² 1 − q‖²` by moving the noise floor into the
//! data, `y = q − σ² 1`. The reference solver is Lawson–Hanson active set;
//! problems with more than [`ACTIVE_SET_MAX_COLS`] unknowns go to an
//! accelerated projected-gradient method with the same contract.
//!
//! The solver works either on the dense design matrix (least-squares
//! subproblems by QR) or on the normal equations `BᵀB`, `Bᵀy` (subproblems
//! by Cholesky). The Gram form is what the simulator uses: it can be grown one
//! measurement row at a time.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::codebook::SensingMatrix;
use crate::error::{invalid_input, Result};
use crate::measure::PowerMeasurements;

/// Largest problem handed to the active-set method by [`Method::Auto`].
pub const ACTIVE_SET_MAX_COLS: usize = 4096;

/// Relative KKT tolerance used when none is given.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    ActiveSet,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsOptions {
    /// Absolute KKT tolerance. `None` means `1e-9 · ‖Bᵀ(q − σ²1)‖∞`.
    pub tol: Option<f64>,
    /// Outer-iteration cap. `None` means `3 · cols` (active set) or
    /// `50 000` (projected gradient).
    pub max_iter: Option<usize>,
    pub method: Method,
    /// Record the objective after every iteration.
    pub record_objective: bool,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        Self { tol: None, max_iter: None, method: Method::Auto, record_objective: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NnlsStatus {
    Converged,
    IterationCapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub gamma: DVector<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub status: NnlsStatus,
    /// Columns that are identically zero; their entries are fixed at 0.
    pub excluded: Vec<usize>,
    /// `‖B γ − y‖²` after each outer iteration, when requested.
    pub objective_trace: Vec<f64>,
}

/// `BᵀB`, `Bᵀy` and `‖y‖²` for a growing set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    y_norm_sq: f64,
    rows: usize,
}

impl NormalEquations {
    pub fn new(cols: usize) -> Self {
        Self { gram: DMatrix::zeros(cols, cols), rhs: DVector::zeros(cols), y_norm_sq: 0.0, rows: 0 }
    }

    pub fn from_dense(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(invalid_input("matrix rows and data length differ"));
        }
        Ok(Self { gram: a.transpose() * a, rhs: a.transpose() * y, y_norm_sq: y.norm_squared(), rows: a.nrows() })
    }

    /// Append a 0/1 row given by the columns of its ones.
    pub fn push_binary_row(&mut self, ones: &[usize], y: f64) {
        for &a in ones {
            self.rhs[a] += y;
            for &b in ones {
                self.gram[(a, b)] += 1.0;
            }
        }
        self.y_norm_sq += y * y;
        self.rows += 1;
    }

    pub fn cols(&self) -> usize {
        self.rhs.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Gradient of `-½‖Bx − y‖²`, i.e. `Bᵀ(y − Bx)`.
    pub fn neg_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rhs - &self.gram * x
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        (self.y_norm_sq - 2.0 * self.rhs.dot(x) + x.dot(&(&self.gram * x))).max(0.0)
    }
}

/// Dense data for the QR-based subproblems.
struct Dense<'a> {
    a: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
}

enum Problem<'a> {
    Dense(Dense<'a>),
    Gram(&'a NormalEquations),
}

impl Problem<'_> {
    fn cols(&self) -> usize {
        match self {
            Problem::Dense(d) => d.a.ncols(),
            Problem::Gram(g) => g.cols(),
        }
    }

    fn neg_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Problem::Dense(d) => d.a.tr_mul(&(d.y - d.a * x)),
            Problem::Gram(g) => g.neg_gradient(x),
        }
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        match self {
            Problem::Dense(d) => (d.a * x - d.y).norm_squared(),
            Problem::Gram(g) => g.objective(x),
        }
    }

    fn column_norm_sq(&self, j: usize) -> f64 {
        match self {
            Problem::Dense(d) => d.a.column(j).norm_squared(),
            Problem::Gram(g) => g.gram[(j, j)],
        }
    }

    /// Unconstrained least squares restricted to `passive`; `None` if the
    /// selected columns are numerically dependent.
    fn restricted_ls(&self, passive: &[usize]) -> Option<DVector<f64>> {
        let p = passive.len();
        match self {
            Problem::Dense(d) => {
                if p > d.a.nrows() {
                    return None;
                }
                let sub = d.a.select_columns(passive);
                let qr = sub.qr();
                let r = qr.r();
                let rmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
                if (0..p).any(|i| r[(i, i)].abs() <= 1e-12 * rmax.max(f64::MIN_POSITIVE)) {
                    return None;
                }
                let qty = qr.q().tr_mul(d.y);
                r.solve_upper_triangular(&qty)
            }
            Problem::Gram(g) => {
                let sub = DMatrix::from_fn(p, p, |a, b| g.gram[(passive[a], passive[b])]);
                let rhs = DVector::from_fn(p, |a, _| g.rhs[passive[a]]);
                let chol = sub.cholesky()?;
                let l = chol.l_dirty();
                let dmax = (0..p).map(|i| l[(i, i)]).fold(0.0, f64::max);
                if (0..p).any(|i| l[(i, i)] <= 1e-7 * dmax) {
                    return None;
                }
                Some(chol.solve(&rhs))
            }
        }
    }
}

/// KKT residual of `x` for `min_{x ≥ 0} ‖Bx − y‖²` from the negative gradient.
fn kkt_from_gradient(x: &DVector<f64>, w: &DVector<f64>) -> f64 {
    x.iter()
        .zip(w.iter())
        .map(|(&xi, &wi)| if xi > 0.0 { wi.abs() } else { wi.max(0.0) })
        .fold(0.0, f64::max)
}

/// Solve against a binary sensing matrix and its power measurements.
pub fn nnls_solve(
    b: &SensingMatrix,
    q: &PowerMeasurements,
    noise_var: f64,
    options: &NnlsOptions,
) -> Result<NnlsSolution> {
    if b.nrows() != q.len() {
        return Err(invalid_input(format!("B has {} rows but q has {} entries", b.nrows(), q.len())));
    }
    if !(noise_var >= 0.0) {
        return Err(invalid_input("noise variance must be non-negative"));
    }
    let mut ne = NormalEquations::new(b.ncols());
    for (row, &qv) in b.rows().zip(q.values()) {
        ne.push_binary_row(row, qv - noise_var);
    }
    nnls_normal(&ne, options, None)
}

/// Solve `min_{x ≥ 0} ‖A x + σ² 1 − q‖²` for a dense `A`.
pub fn nnls_dense(a: &DMatrix<f64>, q: &DVector<f64>, noise_var: f64, options: &NnlsOptions) -> Result<NnlsSolution> {
    if a.nrows() != q.len() {
        return Err(invalid_input("matrix rows and data length differ"));
    }
    if !(noise_var >= 0.0) {
        return Err(invalid_input("noise variance must be non-negative"));
    }
    let y = q.add_scalar(-noise_var);
    let problem = Problem::Dense(Dense { a, y: &y });
    solve(&problem, options, None)
}

/// Solve from normal equations, optionally warm-started from a feasible point.
pub fn nnls_normal(ne: &NormalEquations, options: &NnlsOptions, warm_start: Option<&DVector<f64>>) -> Result<NnlsSolution> {
    if let Some(x0) = warm_start {
        if x0.len() != ne.cols() || x0.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid_input("warm start must be a non-negative vector of the right length"));
        }
    }
    solve(&Problem::Gram(ne), options, warm_start)
}

fn solve(problem: &Problem<'_>, options: &NnlsOptions, warm_start: Option<&DVector<f64>>) -> Result<NnlsSolution> {
    let n = problem.cols();
    let w0 = problem.neg_gradient(&DVector::zeros(n));
    let tol = options.tol.unwrap_or(DEFAULT_REL_TOL * w0.amax());
    let excluded: Vec<usize> = (0..n).filter(|&j| problem.column_norm_sq(j) == 0.0).collect();
    let method = match options.method {
        Method::Auto if n > ACTIVE_SET_MAX_COLS => Method::ProjectedGradient,
        Method::Auto => Method::ActiveSet,
        m => m,
    };
    let mut sol = match method {
        Method::ProjectedGradient => projected_gradient(problem, options, tol, &excluded, warm_start),
        _ => active_set(problem, options, tol, &excluded, warm_start),
    };
    sol.excluded = excluded;
    Ok(sol)
}

fn active_set(
    problem: &Problem<'_>,
    options: &NnlsOptions,
    tol: f64,
    excluded: &[usize],
    warm_start: Option<&DVector<f64>>,
) -> NnlsSolution {
    let n = problem.cols();
    let max_iter = options.max_iter.unwrap_or(3 * n.max(1));
    let mut x = DVector::<f64>::zeros(n);
    let mut in_passive = vec![false; n];
    let mut blocked = vec![false; n];
    for &j in excluded {
        blocked[j] = true;
    }
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut capped = false;

    if let Some(x0) = warm_start {
        for j in 0..n {
            if x0[j] > 0.0 && !blocked[j] {
                x[j] = x0[j];
                in_passive[j] = true;
            }
        }
        restore_feasibility(problem, &mut x, &mut in_passive, None);
    }
    let mut w = problem.neg_gradient(&x);

    loop {
        // Column with the most positive dual among the zero set.
        let mut t = None;
        let mut best = tol;
        for j in 0..n {
            if !in_passive[j] && !blocked[j] && w[j] > best {
                best = w[j];
                t = Some(j);
            }
        }
        let Some(t) = t else { break };
        if iterations >= max_iter {
            capped = true;
            break;
        }
        iterations += 1;

        in_passive[t] = true;
        if restore_feasibility(problem, &mut x, &mut in_passive, Some(t)) {
            blocked.iter_mut().enumerate().for_each(|(j, b)| *b = excluded.binary_search(&j).is_ok());
        } else {
            // Rounding made the entering column useless; skip it until the
            // passive set changes.
            in_passive[t] = false;
            blocked[t] = true;
        }
        w = problem.neg_gradient(&x);
        if options.record_objective {
            trace.push(problem.objective(&x));
        }
    }

    let kkt_residual = kkt_from_gradient(&x, &w);
    let status = if !capped && kkt_residual <= tol { NnlsStatus::Converged } else { NnlsStatus::IterationCapped };
    NnlsSolution { gamma: x, iterations, kkt_residual, status, excluded: Vec::new(), objective_trace: trace }
}

/// Lawson–Hanson inner loop: solve on the passive set and step back toward
/// the previous iterate until the solution is strictly positive.
///
/// Returns `false` when `entering` cannot take a positive value, in which
/// case `x` is left unchanged.
fn restore_feasibility(
    problem: &Problem<'_>,
    x: &mut DVector<f64>,
    in_passive: &mut [bool],
    entering: Option<usize>,
) -> bool {
    let n = x.len();
    let mut first = true;
    loop {
        let passive: Vec<usize> = (0..n).filter(|&j| in_passive[j]).collect();
        if passive.is_empty() {
            return true;
        }
        let z = match problem.restricted_ls(&passive) {
            Some(z) => z,
            None => {
                if first {
                    if let Some(t) = entering {
                        in_passive[t] = false;
                        return false;
                    }
                }
                // Dependent warm-start support: drop the smallest coordinate.
                let (k, _) = passive
                    .iter()
                    .enumerate()
                    .min_by(|a, b| x[*a.1].total_cmp(&x[*b.1]))
                    .expect("non-empty");
                x[passive[k]] = 0.0;
                in_passive[passive[k]] = false;
                continue;
            }
        };
        if first {
            if let Some(t) = entering {
                let pos = passive.binary_search(&t).expect("entering column is passive");
                if z[pos] <= 0.0 {
                    in_passive[t] = false;
                    return false;
                }
            }
            first = false;
        }
        if z.iter().all(|&v| v > 0.0) {
            for (k, &j) in passive.iter().enumerate() {
                x[j] = z[k];
            }
            return true;
        }
        // Largest step keeping every passive coordinate non-negative.
        let mut alpha = f64::INFINITY;
        for (k, &j) in passive.iter().enumerate() {
            if z[k] <= 0.0 {
                let denom = x[j] - z[k];
                let a = if denom > 0.0 { x[j] / denom } else { 0.0 };
                alpha = alpha.min(a);
            }
        }
        let alpha = alpha.clamp(0.0, 1.0);
        for (k, &j) in passive.iter().enumerate() {
            x[j] += alpha * (z[k] - x[j]);
        }
        let mut moved = false;
        for (k, &j) in passive.iter().enumerate() {
            if x[j] <= 0.0 || (z[k] <= 0.0 && x[j] <= f64::EPSILON * 10.0 * x.amax()) {
                x[j] = 0.0;
                in_passive[j] = false;
                moved = true;
            }
        }
        if !moved {
            // alpha hit a coordinate only up to rounding; force it out.
            let (k, _) = passive
                .iter()
                .enumerate()
                .filter(|(k, _)| z[*k] <= 0.0)
                .min_by(|a, b| x[*a.1].total_cmp(&x[*b.1]))
                .expect("some coordinate is non-positive");
            x[passive[k]] = 0.0;
            in_passive[passive[k]] = false;
        }
    }
}

/// Largest eigenvalue of the Gram matrix by power iteration (upper bound padded by 1%).
fn lipschitz(problem: &Problem<'_>) -> f64 {
    let n = problem.cols();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..100 {
        let gv = match problem {
            Problem::Dense(d) => d.a.tr_mul(&(d.a * &v)),
            Problem::Gram(g) => &g.gram * &v,
        };
        let norm = gv.norm();
        if norm == 0.0 {
            return 1.0;
        }
        let next = gv / norm;
        let diff = (&next - &v).norm();
        v = next;
        lambda = norm;
        if diff < 1e-10 {
            break;
        }
    }
    lambda * 1.01
}

/// FISTA on the non-negative orthant with adaptive restart.
fn projected_gradient(
    problem: &Problem<'_>,
    options: &NnlsOptions,
    tol: f64,
    excluded: &[usize],
    warm_start: Option<&DVector<f64>>,
) -> NnlsSolution {
    let n = problem.cols();
    let max_iter = options.max_iter.unwrap_or(50_000);
    let step = 1.0 / lipschitz(problem);
    let mut x = warm_start.cloned().unwrap_or_else(|| DVector::zeros(n));
    for &j in excluded {
        x[j] = 0.0;
    }
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut f_prev = problem.objective(&x);
    let mut w = problem.neg_gradient(&x);
    let mut kkt = kkt_from_gradient(&x, &w);
    while kkt > tol && iterations < max_iter {
        iterations += 1;
        let wy = problem.neg_gradient(&y);
        let mut next = &y + wy * step;
        next.iter_mut().for_each(|v| *v = v.max(0.0));
        for &j in excluded {
            next[j] = 0.0;
        }
        let f_next = problem.objective(&next);
        if f_next > f_prev && t > 1.0 {
            // restart momentum from the last accepted iterate
            y = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &x) * ((t - 1.0) / t_next);
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        x = next;
        t = t_next;
        f_prev = f_next;
        w = problem.neg_gradient(&x);
        kkt = kkt_from_gradient(&x, &w);
        if options.record_objective {
            trace.push(f_next);
        }
    }
    let status = if kkt <= tol { NnlsStatus::Converged } else { NnlsStatus::IterationCapped };
    NnlsSolution { gamma: x, iterations, kkt_residual: kkt, status, excluded: Vec::new(), objective_trace: trace }
}

/// KKT residual of `gamma` for the power-measurement problem.
///
/// With `r = (q − σ²1) − Bγ` and `g = Bᵀr`, this is the larger of
/// `max |g_i|` over `γ_i > 0` and `max(0, g_i)` over `γ_i = 0`.
pub fn kkt_residual(b: &DMatrix<f64>, q: &DVector<f64>, noise_var: f64, gamma: &DVector<f64>) -> Result<f64> {
    if b.nrows() != q.len() || b.ncols() != gamma.len() {
        return Err(invalid_input("dimensions of B, q and gamma disagree"));
    }
    let r = q.add_scalar(-noise_var) - b * gamma;
    Ok(kkt_from_gradient(gamma, &b.tr_mul(&r)))
}

/// Indices whose recovered power exceeds `threshold`, strongest first.
pub fn support_above(gamma: &DVector<f64>, threshold: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i] > threshold).collect();
    idx.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
    idx
}
