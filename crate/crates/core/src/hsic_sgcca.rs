//! HSIC-SGCCA: sparse generalized CCA maximizing pairwise HSIC between
//! one-dimensional view projections under unit-variance constraints.
//!
//! Each coefficient vector `u_k` is relaxed to a trace-one PSD matrix
//! `Pi_k`. The solver runs block prox-linear (BPL) outer iterations: each
//! block minimizes a linearized-plus-proximal surrogate of the negated
//! pairwise-HSIC objective, solved by linearized ADMM with closed-form
//! updates. The output is the top eigenvector of each final `Pi_k`, scaled
//! to unit sample variance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, ViewSample};
use crate::error::{Error, Result};
use crate::kernel::center_matrix;
use crate::linalg::{
    max_norm, project_trace_one_psd, psd_sqrt, soft_threshold, spectral_norm, sym_eigen, SymMatrix,
};

/// Entries of `u` below this magnitude count as zero for variable selection.
pub const SELECTION_THRESHOLD: f64 = 1e-8;

/// Solver parameters. Defaults: tolerance `1e-6`, 100 outer iterations, 50
/// inner iterations, AL parameter 1, and a BPL step factor of 2 on the
/// Lipschitz bound. The outer tolerance is applied to the max-norm change of
/// the `Pi_k` iterates; the conservative Lipschitz bound makes individual
/// BPL steps small (max-norm changes around `1e-4` on typical standardized
/// data), so a loose tolerance would stop the solver long before the
/// thresholding has identified the active variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HsicSgccaConfig {
    /// Per-view l1 penalties on `Pi_k`.
    pub lambda: Vec<f64>,
    pub epsilon_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub al_rho: f64,
    pub bpl_factor: f64,
}

impl HsicSgccaConfig {
    pub fn new(lambda: Vec<f64>) -> Self {
        Self {
            lambda,
            epsilon_tol: 1e-6,
            max_outer: 100,
            max_inner: 50,
            al_rho: 1.0,
            bpl_factor: 2.0,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.lambda.len() != k {
            return Err(Error::InvalidInput(format!(
                "expected {k} lambda values, got {}",
                self.lambda.len()
            )));
        }
        if self.lambda.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(Error::InvalidInput("lambda must be nonnegative".into()));
        }
        if self.epsilon_tol <= 0.0 || self.al_rho <= 0.0 || self.bpl_factor <= 0.0 {
            return Err(Error::InvalidInput(
                "tolerance, AL parameter and BPL factor must be positive".into(),
            ));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidInput("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a fit: per-view coefficient vectors, selected variable indices,
/// the objective value per outer iteration, and the convergence flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalSolution {
    pub u: Vec<Vec<f64>>,
    pub selected: Vec<Vec<usize>>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl CanonicalSolution {
    pub fn u_vector(&self, k: usize) -> DVector<f64> {
        DVector::from_row_slice(&self.u[k])
    }

    /// The final objective value.
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::INFINITY)
    }
}

/// Regularized covariance `(1 - eps) S + eps I` with
/// `eps = 1e-4 ||S||_F / ||I - S||_F` when `S` is singular, else `eps = 0`.
/// Singularity is declared when `p > n` or the smallest eigenvalue is below
/// `1e-10 ||S||_2`.
pub fn regularized_covariance(view: &ViewSample) -> Result<SymMatrix> {
    let cov = sample_covariance(view)?;
    let p = cov.dim();
    let eig = sym_eigen(&cov)?;
    let top = eig.values[0].max(0.0);
    let singular = view.p() > view.n() || eig.values[p - 1] < 1e-10 * top;
    if !singular {
        return Ok(cov);
    }
    let id = DMatrix::identity(p, p);
    let denom = (&id - cov.as_matrix()).norm();
    let eps = if denom > 0.0 {
        1e-4 * cov.as_matrix().norm() / denom
    } else {
        0.0
    };
    SymMatrix::symmetrize(cov.as_matrix() * (1.0 - eps) + id * eps)
}

/// Sample covariance of a view (denominator `n - 1`).
pub fn sample_covariance(view: &ViewSample) -> Result<SymMatrix> {
    let centered = view.centered();
    let n = view.n() as f64;
    let s = centered.data() * centered.data().transpose() / (n - 1.0);
    if s.norm() == 0.0 {
        return Err(Error::DegenerateData("constant view has zero covariance".into()));
    }
    SymMatrix::symmetrize(s)
}

/// Per-view constants reused across all iterations of a fit.
struct ViewCache {
    /// Centered data, `p x n`.
    x: DMatrix<f64>,
    /// Pairwise squared distances between samples.
    sqdist: DMatrix<f64>,
    sample_cov: SymMatrix,
    sigma_hat: SymMatrix,
    sigma_sqrt: DMatrix<f64>,
    /// LADMM parameter `tau = 4 rho ||Sigma_hat||_2^2` at `rho = 1`; scaled
    /// by the configured `al_rho` at solve time.
    sigma_spec_sq: f64,
}

impl ViewCache {
    fn build(view: &ViewSample) -> Result<Self> {
        let centered = view.centered();
        let sqdist = crate::kernel::squared_distances(centered.data());
        let sample_cov = sample_covariance(view)?;
        let sigma_hat = regularized_covariance(view)?;
        let sigma_sqrt = psd_sqrt(&sigma_hat)?.into_matrix();
        let spec = spectral_norm(&sigma_hat)?;
        Ok(Self {
            x: centered.data().clone(),
            sqdist,
            sample_cov,
            sigma_hat,
            sigma_sqrt,
            sigma_spec_sq: spec * spec,
        })
    }
}

/// Solver state: cached per-view constants, current `Pi_k` iterates, and the
/// kernel Gram matrices they induce.
pub struct HsicSgccaState {
    caches: Vec<ViewCache>,
    pi: Vec<DMatrix<f64>>,
    grams: Vec<DMatrix<f64>>,
    n: usize,
}

impl HsicSgccaState {
    /// Builds the state with the default initialization: `Pi_k = v v^T /
    /// (v^T Sigma_hat v)` with `v` the top eigenvector of `Sigma_hat_k`,
    /// which lies in the feasible set by construction.
    pub fn new(data: &MultiViewDataset) -> Result<Self> {
        let caches = data
            .views()
            .iter()
            .map(ViewCache::build)
            .collect::<Result<Vec<_>>>()?;
        let mut init = Vec::with_capacity(caches.len());
        for cache in &caches {
            let eig = sym_eigen(&cache.sigma_hat)?;
            let v = eig.vectors.column(0).clone_owned();
            init.push(feasible_rank_one(&v, &cache.sigma_hat));
        }
        Self::with_init(data, init)
    }

    /// Builds the state from explicit initial `Pi_k` matrices.
    pub fn with_init(data: &MultiViewDataset, init: Vec<DMatrix<f64>>) -> Result<Self> {
        let caches = data
            .views()
            .iter()
            .map(ViewCache::build)
            .collect::<Result<Vec<_>>>()?;
        if init.len() != caches.len() {
            return Err(Error::InvalidInput("one initial Pi per view required".into()));
        }
        for (cache, pi) in caches.iter().zip(&init) {
            if pi.nrows() != cache.x.nrows() || pi.ncols() != cache.x.nrows() {
                return Err(Error::InvalidInput("initial Pi dimension mismatch".into()));
            }
        }
        let n = data.n();
        let grams = caches
            .iter()
            .zip(&init)
            .map(|(cache, pi)| gram_for_pi(&cache.x, pi))
            .collect();
        Ok(Self { caches, pi: init, grams, n })
    }

    /// Builds the state from per-view direction vectors, each turned into the
    /// feasible rank-one matrix `v v^T / (v^T Sigma_hat v)`.
    pub fn from_directions(data: &MultiViewDataset, directions: &[DVector<f64>]) -> Result<Self> {
        let caches = data
            .views()
            .iter()
            .map(ViewCache::build)
            .collect::<Result<Vec<_>>>()?;
        if directions.len() != caches.len() {
            return Err(Error::InvalidInput("one direction per view required".into()));
        }
        let init = caches
            .iter()
            .zip(directions)
            .map(|(cache, v)| feasible_rank_one(v, &cache.sigma_hat))
            .collect();
        Self::with_init(data, init)
    }

    pub fn k(&self) -> usize {
        self.caches.len()
    }

    pub fn pi(&self, k: usize) -> &DMatrix<f64> {
        &self.pi[k]
    }

    pub fn sigma_hat(&self, k: usize) -> &SymMatrix {
        &self.caches[k].sigma_hat
    }

    pub fn sample_cov(&self, k: usize) -> &SymMatrix {
        &self.caches[k].sample_cov
    }

    /// Replaces `Pi_k` and refreshes its Gram matrix.
    pub fn set_pi(&mut self, k: usize, pi: DMatrix<f64>) {
        self.grams[k] = gram_for_pi(&self.caches[k].x, &pi);
        self.pi[k] = pi;
    }

    /// The smooth objective `f = -sum_{s<t} tr(K_s H K_t H) / n^2`.
    pub fn smooth_objective(&self) -> f64 {
        let n2 = (self.n * self.n) as f64;
        let centered: Vec<DMatrix<f64>> = self.grams.iter().map(center_matrix).collect();
        let mut total = 0.0;
        for s in 0..self.grams.len() {
            for t in (s + 1)..self.grams.len() {
                total += centered[s].dot(&centered[t]);
            }
        }
        -total / n2
    }

    /// The full penalized objective `f + sum_k lambda_k ||Pi_k||_1`.
    pub fn objective(&self, lambda: &[f64]) -> f64 {
        let penalty: f64 = self
            .pi
            .iter()
            .zip(lambda)
            .map(|(pi, &l)| l * pi.iter().map(|v| v.abs()).sum::<f64>())
            .sum();
        self.smooth_objective() + penalty
    }

    /// Centered sum of the other views' Gram matrices,
    /// `H (sum_{l != k} K_l) H`.
    fn ktilde_minus(&self, k: usize) -> DMatrix<f64> {
        let n = self.n;
        let mut sum = DMatrix::zeros(n, n);
        for (l, gram) in self.grams.iter().enumerate() {
            if l != k {
                sum += gram;
            }
        }
        center_matrix(&sum)
    }

    /// Gradient of the smooth objective in block `k` at the current iterate:
    /// `(1/2n^2) sum_{ij} exp(-<Pi, Z_ij>/2) Ktilde_ij Z_ij`, evaluated via
    /// the rank-one structure of `Z_ij` as `X (D - C) X^T / n^2`.
    pub fn bpl_gradient(&self, k: usize) -> DMatrix<f64> {
        let ktilde = self.ktilde_minus(k);
        self.gradient_with_ktilde(k, &self.pi[k], &ktilde)
    }

    fn gradient_with_ktilde(
        &self,
        k: usize,
        pi: &DMatrix<f64>,
        ktilde: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let cache = &self.caches[k];
        let n = self.n;
        let kernel = gram_for_pi(&cache.x, pi);
        let c = kernel.component_mul(ktilde);
        let mut laplacian = -c.clone();
        for i in 0..n {
            let row_sum: f64 = c.row(i).iter().sum();
            laplacian[(i, i)] += row_sum;
        }
        let grad = &cache.x * laplacian * cache.x.transpose() / (n * n) as f64;
        (&grad + grad.transpose()) * 0.5
    }

    /// Lipschitz bound of the block gradient:
    /// `(1/4n^2) sum_{ij} |Ktilde_ij| ||x_i - x_j||^4`.
    pub fn lipschitz_bound(&self, k: usize) -> Result<f64> {
        let ktilde = self.ktilde_minus(k);
        let bound = self.lipschitz_with_ktilde(k, &ktilde);
        if bound <= 0.0 {
            return Err(Error::DegenerateData("zero Lipschitz bound: no informative sample pairs".into()));
        }
        Ok(bound)
    }

    fn lipschitz_with_ktilde(&self, k: usize, ktilde: &DMatrix<f64>) -> f64 {
        let cache = &self.caches[k];
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d2 = cache.sqdist[(i, j)];
                total += ktilde[(i, j)].abs() * d2 * d2;
            }
        }
        total / (4.0 * (n * n) as f64)
    }

    /// Solves the block surrogate subproblem by linearized ADMM and returns
    /// the new `Pi_k` iterate together with the inner convergence flag.
    pub fn ladmm_solve_subproblem(
        &self,
        k: usize,
        grad: &DMatrix<f64>,
        l: f64,
        cfg: &HsicSgccaConfig,
    ) -> Result<LadmmOutcome> {
        if l <= 0.0 {
            return Err(Error::InvalidInput("BPL step constant must be positive".into()));
        }
        let cache = &self.caches[k];
        let lambda = cfg.lambda[k];
        let rho = cfg.al_rho;
        let tau = 4.0 * rho * cache.sigma_spec_sq;
        let sigma = cache.sigma_hat.as_matrix();
        let sigma_sqrt = &cache.sigma_sqrt;

        // Target of the proximal quadratic: Pi^(r) - grad / L.
        let target = &self.pi[k] - grad / l;
        let mut pi = self.pi[k].clone();
        let mut h = sigma_sqrt * &pi * sigma_sqrt;
        let mut gamma = DMatrix::zeros(pi.nrows(), pi.ncols());

        let w_prox = tau / (l + tau);
        let w_target = l / (l + tau);
        let threshold = lambda / (l + tau);

        let mut converged = false;
        let mut inner = 0;
        for j in 0..cfg.max_inner {
            inner = j + 1;
            let prox_term = &pi - (sigma * &pi * sigma) * (rho / tau)
                + (sigma_sqrt * (&h - &gamma) * sigma_sqrt) * (rho / tau);
            let pi_new = soft_threshold(&(prox_term * w_prox + &target * w_target), threshold)?;
            let mapped = sigma_sqrt * &pi_new * sigma_sqrt;
            let h_new = project_trace_one_psd(&SymMatrix::symmetrize(&mapped + &gamma)?)?
                .into_matrix();
            gamma += &mapped - &h_new;
            if pi_new.iter().any(|v| !v.is_finite()) || gamma.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "non-finite LADMM iterate at inner iteration {inner}"
                )));
            }
            let primal = max_norm(&(&pi_new - &pi));
            let feas = max_norm(&(&mapped - &h_new));
            pi = pi_new;
            h = h_new;
            if primal.max(feas) <= cfg.epsilon_tol {
                converged = true;
                break;
            }
        }
        Ok(LadmmOutcome { pi, inner_iterations: inner, converged })
    }

    /// Value of the block surrogate
    /// `<Pi - Pi^(r), grad> + (L/2) ||Pi - Pi^(r)||_F^2 + lambda ||Pi||_1`.
    fn surrogate_value(
        &self,
        k: usize,
        candidate: &DMatrix<f64>,
        grad: &DMatrix<f64>,
        l: f64,
        lambda: f64,
    ) -> f64 {
        let delta = candidate - &self.pi[k];
        delta.dot(grad)
            + 0.5 * l * delta.norm_squared()
            + lambda * candidate.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Output of one LADMM subproblem solve.
pub struct LadmmOutcome {
    pub pi: DMatrix<f64>,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Builds feasible rank-one initial `Pi_k` matrices from per-view direction
/// vectors, for multi-start fitting.
pub fn rank_one_init(data: &MultiViewDataset, directions: &[DVector<f64>]) -> Result<Vec<DMatrix<f64>>> {
    if directions.len() != data.k() {
        return Err(Error::InvalidInput("one direction per view required".into()));
    }
    data.views()
        .iter()
        .zip(directions)
        .map(|(view, v)| {
            if v.len() != view.p() {
                return Err(Error::InvalidInput("direction dimension mismatch".into()));
            }
            let sigma = regularized_covariance(view)?;
            Ok(feasible_rank_one(v, &sigma))
        })
        .collect()
}

/// `v v^T / (v^T Sigma v)`, feasible for the trace constraint.
pub fn feasible_rank_one(v: &DVector<f64>, sigma: &SymMatrix) -> DMatrix<f64> {
    let denom = (sigma.as_matrix() * v).dot(v);
    let outer = v * v.transpose();
    if denom > 0.0 {
        outer / denom
    } else {
        outer
    }
}

/// Gram matrix of the projection kernel induced by `Pi`:
/// `K[i,j] = exp(-(x_i - x_j)^T Pi (x_i - x_j) / 2)`.
pub fn gram_for_pi(x: &DMatrix<f64>, pi: &DMatrix<f64>) -> DMatrix<f64> {
    let a = x.transpose() * pi * x;
    let n = x.ncols();
    // The quadratic form is a squared distance for PSD `Pi`; intermediate
    // iterates can be slightly indefinite, so clamp at zero to keep the
    // kernel in (0, 1].
    DMatrix::from_fn(n, n, |i, j| {
        (-0.5 * (a[(i, i)] + a[(j, j)] - 2.0 * a[(i, j)]).max(0.0)).exp()
    })
}

/// Indices with `|u_i| > threshold`.
pub fn variable_selection(u: &DVector<f64>, threshold: f64) -> Vec<usize> {
    u.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Runs the full HSIC-SGCCA fit.
///
/// Outer BPL iterations sweep the views in order; each block update is kept
/// only if it does not increase the surrogate, which preserves the monotone
/// decrease of the penalized objective under inexact inner solves.
pub fn fit_hsic_sgcca(
    data: &MultiViewDataset,
    cfg: &HsicSgccaConfig,
    init: Option<Vec<DMatrix<f64>>>,
) -> Result<CanonicalSolution> {
    fit_hsic_sgcca_with_state(data, cfg, init).map(|(solution, _)| solution)
}

/// Like [`fit_hsic_sgcca`] but also returns the solver state, exposing the
/// final `Pi_k` iterates and cached covariances for feasibility checks.
pub fn fit_hsic_sgcca_with_state(
    data: &MultiViewDataset,
    cfg: &HsicSgccaConfig,
    init: Option<Vec<DMatrix<f64>>>,
) -> Result<(CanonicalSolution, HsicSgccaState)> {
    cfg.validate(data.k())?;
    let mut state = match init {
        Some(init) => HsicSgccaState::with_init(data, init)?,
        None => HsicSgccaState::new(data)?,
    };
    let k_views = state.k();
    let mut objective_trace = vec![state.objective(&cfg.lambda)];
    let mut converged = false;

    // Per-view backtracking step constants. The global bound is orders of
    // magnitude looser than the local gradient Lipschitz constant on typical
    // data, so a fixed 1/L step crawls; each block instead starts from its
    // last accepted constant and grows it until the quadratic model
    // dominates the smooth objective, which keeps the descent guarantee.
    let mut step: Vec<Option<f64>> = vec![None; k_views];
    let n2 = (data.n() * data.n()) as f64;

    for _ in 0..cfg.max_outer {
        let previous: Vec<DMatrix<f64>> = state.pi.clone();
        for k in 0..k_views {
            let ktilde = state.ktilde_minus(k);
            let lipschitz = state.lipschitz_with_ktilde(k, &ktilde);
            if lipschitz <= 0.0 {
                // No informative coupling with the other views; the gradient
                // is zero and the surrogate keeps the block fixed.
                continue;
            }
            let grad = state.gradient_with_ktilde(k, &state.pi[k], &ktilde);
            let l_cap = cfg.bpl_factor * lipschitz;
            let f_old = -state.grams[k].dot(&ktilde) / n2;
            let mut l = step[k].map_or(l_cap / 4096.0, |s| s / 2.0).min(l_cap);
            let outcome = loop {
                // A too-small step constant can destabilize the inner solve;
                // treat a failed solve like a failed descent check.
                let outcome = match state.ladmm_solve_subproblem(k, &grad, l, cfg) {
                    Ok(outcome) => outcome,
                    Err(_) if l < l_cap => {
                        l = (l * 4.0).min(l_cap);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if l >= l_cap {
                    break outcome;
                }
                let delta = &outcome.pi - &state.pi[k];
                let f_new = -gram_for_pi(&state.caches[k].x, &outcome.pi).dot(&ktilde) / n2;
                let model = f_old + grad.dot(&delta) + 0.5 * l * delta.norm_squared();
                if f_new <= model + 1e-12 * (1.0 + f_old.abs()) {
                    break outcome;
                }
                l = (l * 4.0).min(l_cap);
            };
            step[k] = Some(l);
            let incumbent = cfg.lambda[k] * state.pi[k].iter().map(|v| v.abs()).sum::<f64>();
            let candidate = state.surrogate_value(k, &outcome.pi, &grad, l, cfg.lambda[k]);
            if candidate <= incumbent {
                state.set_pi(k, outcome.pi);
            }
        }
        objective_trace.push(state.objective(&cfg.lambda));
        let max_change = (0..k_views)
            .map(|k| max_norm(&(&state.pi[k] - &previous[k])))
            .fold(0.0f64, f64::max);
        if max_change <= cfg.epsilon_tol {
            converged = true;
            break;
        }
    }

    let mut u = Vec::with_capacity(k_views);
    let mut selected = Vec::with_capacity(k_views);
    for k in 0..k_views {
        let coef = extract_scaled_top_eigenvector(&state.pi[k], &state.caches[k].sample_cov)?;
        selected.push(variable_selection(&coef, SELECTION_THRESHOLD));
        u.push(coef.iter().copied().collect());
    }
    Ok((CanonicalSolution { u, selected, objective_trace, converged }, state))
}

/// Top eigenvector of `Pi`, scaled to `u^T S u = 1` and sign-fixed so the
/// largest-magnitude entry is positive. A vanished `Pi` (fully thresholded)
/// yields the zero vector.
fn extract_scaled_top_eigenvector(pi: &DMatrix<f64>, s: &SymMatrix) -> Result<DVector<f64>> {
    let p = pi.nrows();
    if max_norm(pi) < 1e-12 {
        return Ok(DVector::zeros(p));
    }
    let eig = sym_eigen(&SymMatrix::symmetrize(pi.clone())?)?;
    let mut v = eig.vectors.column(0).clone_owned();
    // Sign convention: largest-magnitude entry positive.
    let lead = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    if v[lead] < 0.0 {
        v = -v;
    }
    // Entries that are numerically zero in Pi stay zero in u.
    for i in 0..p {
        if pi.row(i).amax() < 1e-12 && v[i].abs() < 1e-8 {
            v[i] = 0.0;
        }
    }
    let scale = (s.as_matrix() * &v).dot(&v);
    if scale > 1e-300 {
        v /= scale.sqrt();
    }
    Ok(v)
}
