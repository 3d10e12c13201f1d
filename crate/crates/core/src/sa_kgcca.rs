//! SA-KGCCA: sparse additive kernel GCCA via block coordinate descent over
//! per-variable dual coefficient blocks.
//!
//! Each view `k` carries one coefficient vector `alpha_kj` per variable with
//! fitted score `f_k = sum_j Ktilde_kj alpha_kj`. The fit maximizes
//! `sum_{s<t} f_s^T f_t / n` subject, per view, to the regularized-variance
//! constraint `||f_k||^2/n + eps_k sum_j alpha_kj^T Ktilde_kj alpha_kj <= 1`
//! and the group budget `sum_j ||Ktilde_kj alpha_kj||_2 / sqrt(n) <= s_k`.
//!
//! Each block subproblem (linear objective, the two convex constraints) is
//! solved by projected gradient ascent in the reduced eigen-coordinates of
//! the centered Grams, with Dykstra's alternating projections onto the
//! ellipsoid and the group-l1 ball. In those coordinates `b_j` with
//! `V_j b_j = Ktilde_kj alpha_kj / sqrt(n)`, the variance constraint is the
//! ellipsoid `b^T (B^T B + eps n D^-1) b <= 1` and the budget is
//! `sum_j ||b_j|| <= s_k`, both of which project cheaply.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, ViewSample};
use crate::error::{Error, Result};
use crate::kernel::{center_matrix, median_abs_diff_bandwidth, KernelGram};
use crate::linalg::{sym_eigen, EigenPairs, SymMatrix};

/// Relative eigenvalue cutoff below which a centered Gram direction is
/// treated as null and dropped from the reduced coordinates.
const RANK_TOL: f64 = 1e-8;

/// Group norms below this fraction of the view's largest group norm count as
/// unselected.
pub const SA_SELECTION_REL_THRESHOLD: f64 = 1e-6;

/// Solver parameters; reference settings are `eps_reg = 0.02`, tolerance
/// `1e-5`, 10 sweeps, 100 inner iterations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaKgccaConfig {
    pub s: Vec<f64>,
    pub eps_reg: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl SaKgccaConfig {
    pub fn new(s: Vec<f64>) -> Self {
        Self { s, eps_reg: 0.02, tol: 1e-5, max_outer: 10, max_inner: 100 }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.s.len() != k {
            return Err(Error::InvalidInput(format!(
                "expected {k} budgets, got {}",
                self.s.len()
            )));
        }
        if self.s.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput("budgets must be positive".into()));
        }
        if self.eps_reg <= 0.0 || self.tol <= 0.0 || self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidInput("parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Centered per-variable Gaussian Grams of a view, median bandwidth per
/// variable. A constant variable yields the zero matrix and contributes
/// nothing downstream.
pub fn centered_per_variable_grams(view: &ViewSample) -> Result<Vec<KernelGram>> {
    let n = view.n();
    (0..view.p())
        .into_par_iter()
        .map(|j| {
            let xs = view.variable(j);
            let entries = match median_abs_diff_bandwidth(&xs) {
                Ok(sigma) => {
                    let inv = 1.0 / (2.0 * sigma * sigma);
                    let gram =
                        DMatrix::from_fn(n, n, |a, b| (-(xs[a] - xs[b]).powi(2) * inv).exp());
                    center_matrix(&gram)
                }
                Err(_) => DMatrix::zeros(n, n),
            };
            KernelGram::from_entries(entries, f64::NAN, true)
        })
        .collect()
}

/// Reduced eigenfactor of one centered Gram: columns of `vectors` span its
/// range, `values` are the positive eigenvalues.
#[derive(Debug, Clone)]
pub struct VariableBasis {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

fn reduced_basis(gram: &DMatrix<f64>) -> Result<VariableBasis> {
    let n = gram.nrows();
    let eig = sym_eigen(&SymMatrix::symmetrize(gram.clone())?)?;
    let top = eig.values[0].max(0.0);
    let rank = eig.values.iter().take_while(|&&v| v > RANK_TOL * top).count();
    let mut vectors = DMatrix::zeros(n, rank);
    let mut values = DVector::zeros(rank);
    for r in 0..rank {
        vectors.set_column(r, &eig.vectors.column(r));
        values[r] = eig.values[r];
    }
    Ok(VariableBasis { vectors, values })
}

/// Per-view solver data, constant across sweeps: reduced bases, the
/// eigendecomposition of the ellipsoid's quadratic form, and the group
/// offsets into the stacked coordinate vector.
pub struct SaViewSolver {
    bases: Vec<VariableBasis>,
    offsets: Vec<usize>,
    dim: usize,
    q_eigen: EigenPairs,
    /// Step scale for projected gradient: a bound on the feasible radius.
    radius: f64,
}

impl SaViewSolver {
    pub fn build(view: &ViewSample, eps_reg: f64, budget: f64) -> Result<Self> {
        let grams = centered_per_variable_grams(view)?;
        let bases = grams
            .par_iter()
            .map(|g| reduced_basis(g.entries()))
            .collect::<Result<Vec<_>>>()?;
        drop(grams);
        let n = view.n();
        let mut offsets = Vec::with_capacity(bases.len() + 1);
        let mut dim = 0;
        for basis in &bases {
            offsets.push(dim);
            dim += basis.values.len();
        }
        offsets.push(dim);
        if dim == 0 {
            return Err(Error::DegenerateData("all variables constant in view".into()));
        }
        // Q = B^T B + eps n D^-1 over the stacked coordinates.
        let mut b_stack = DMatrix::zeros(n, dim);
        for (j, basis) in bases.iter().enumerate() {
            b_stack.view_mut((0, offsets[j]), (n, basis.values.len())).copy_from(&basis.vectors);
        }
        let mut q = b_stack.transpose() * &b_stack;
        for (j, basis) in bases.iter().enumerate() {
            for r in 0..basis.values.len() {
                q[(offsets[j] + r, offsets[j] + r)] += eps_reg * n as f64 / basis.values[r];
            }
        }
        let q_eigen = sym_eigen(&SymMatrix::symmetrize(q)?)?;
        let lambda_min = q_eigen.values[dim - 1].max(f64::MIN_POSITIVE);
        let radius = (1.0 / lambda_min.sqrt()).min(budget);
        Ok(Self { bases, offsets, dim, q_eigen, radius })
    }

    pub fn p(&self) -> usize {
        self.bases.len()
    }

    fn group(&self, b: &DVector<f64>, j: usize) -> DVector<f64> {
        b.rows(self.offsets[j], self.offsets[j + 1] - self.offsets[j]).clone_owned()
    }

    fn group_norms(&self, b: &DVector<f64>) -> Vec<f64> {
        (0..self.p()).map(|j| self.group(b, j).norm()).collect()
    }

    /// The view score `phi = f / sqrt(n) = sum_j V_j b_j`.
    pub fn score(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.bases.iter().map(|basis| basis.vectors.nrows()).next().unwrap_or(0);
        let mut phi = DVector::zeros(n);
        for (j, basis) in self.bases.iter().enumerate() {
            phi += &basis.vectors * self.group(b, j);
        }
        phi
    }

    /// Linear coefficient of the subproblem for target score `g`.
    fn linear_coefficient(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim);
        for (j, basis) in self.bases.iter().enumerate() {
            c.rows_mut(self.offsets[j], basis.values.len())
                .copy_from(&(basis.vectors.transpose() * g));
        }
        c
    }

    fn quad_value(&self, b: &DVector<f64>) -> f64 {
        let z = self.q_eigen.vectors.transpose() * b;
        z.iter().zip(self.q_eigen.values.iter()).map(|(zi, li)| li * zi * zi).sum()
    }

    fn budget_value(&self, b: &DVector<f64>) -> f64 {
        self.group_norms(b).iter().sum()
    }

    /// Euclidean projection onto the ellipsoid `b^T Q b <= 1`, computed in
    /// the eigenbasis of `Q` by 1-D root finding on the secular equation.
    pub fn project_ellipsoid(&self, y: &DVector<f64>) -> DVector<f64> {
        let z = self.q_eigen.vectors.transpose() * y;
        let value: f64 = z
            .iter()
            .zip(self.q_eigen.values.iter())
            .map(|(zi, li)| li * zi * zi)
            .sum();
        if value <= 1.0 + 1e-12 {
            return y.clone();
        }
        // phi(mu) = sum lambda z^2 / (1 + mu lambda)^2 - 1 is decreasing and
        // convex in mu >= 0; bracket then bisect.
        let phi = |mu: f64| -> f64 {
            z.iter()
                .zip(self.q_eigen.values.iter())
                .map(|(zi, li)| li * zi * zi / (1.0 + mu * li).powi(2))
                .sum::<f64>()
                - 1.0
        };
        let mut hi = 1.0;
        while phi(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e18 {
                break;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + hi) {
                break;
            }
        }
        let mu = 0.5 * (lo + hi);
        let scaled = DVector::from_fn(self.dim, |i, _| z[i] / (1.0 + mu * self.q_eigen.values[i]));
        &self.q_eigen.vectors * scaled
    }

    /// Euclidean projection onto the group-l1 ball `sum_j ||b_j|| <= s` via
    /// the sorted-threshold rule on the group norms.
    pub fn project_group_ball(&self, y: &DVector<f64>, s: f64) -> DVector<f64> {
        let norms = self.group_norms(y);
        let total: f64 = norms.iter().sum();
        if total <= s + 1e-12 {
            return y.clone();
        }
        let mut sorted = norms.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut theta = 0.0;
        let mut cumulative = 0.0;
        for (idx, &g) in sorted.iter().enumerate() {
            cumulative += g;
            let candidate = (cumulative - s) / (idx + 1) as f64;
            if g > candidate {
                theta = candidate;
            }
        }
        let mut out = y.clone();
        for j in 0..self.p() {
            let len = self.offsets[j + 1] - self.offsets[j];
            let scale = if norms[j] > 0.0 {
                (norms[j] - theta).max(0.0) / norms[j]
            } else {
                0.0
            };
            out.rows_mut(self.offsets[j], len).scale_mut(scale);
        }
        out
    }

    /// Dykstra's alternating projections onto the intersection of the
    /// ellipsoid and the group ball.
    pub fn project_feasible(&self, y: &DVector<f64>, s: f64) -> DVector<f64> {
        let mut x = y.clone();
        let mut p_corr = DVector::zeros(self.dim);
        let mut q_corr = DVector::zeros(self.dim);
        for _ in 0..200 {
            let x1 = self.project_ellipsoid(&(&x + &p_corr));
            p_corr = &x + &p_corr - &x1;
            let x2 = self.project_group_ball(&(&x1 + &q_corr), s);
            q_corr = &x1 + &q_corr - &x2;
            let change = (&x2 - &x).amax();
            x = x2;
            if change < 1e-12 {
                break;
            }
        }
        // Dykstra converges from outside; the final iterate can sit a hair
        // outside either set. Pull it inside deterministically.
        let quad = self.quad_value(&x);
        if quad > 1.0 {
            x /= quad.sqrt().max(1.0 + 1e-15);
        }
        let budget = self.budget_value(&x);
        if budget > s {
            x *= s / budget;
        }
        x
    }

    pub fn is_feasible(&self, b: &DVector<f64>, s: f64, slack: f64) -> bool {
        self.quad_value(b) <= 1.0 + slack && self.budget_value(b) <= s + slack
    }

    /// Maximizes `c^T b` over the feasible set by projected gradient ascent
    /// with diminishing steps and best-iterate tracking, starting from the
    /// incoming feasible point. A radial rescaling of the best iterate to the
    /// nearest active constraint sharpens the final answer.
    pub fn solve_subproblem(
        &self,
        incoming: &DVector<f64>,
        g: &DVector<f64>,
        s: f64,
        max_inner: usize,
    ) -> Result<DVector<f64>> {
        let c = self.linear_coefficient(g);
        let c_norm = c.norm();
        if c_norm <= 1e-10 * g.norm().max(1.0) {
            return Err(Error::DegenerateData("zero linear term".into()));
        }
        let mut b = self.project_feasible(incoming, s);
        let mut best = b.clone();
        let mut best_val = c.dot(&best);
        let step0 = self.radius / c_norm;
        for t in 1..=max_inner {
            let step = step0 / (t as f64).sqrt();
            b = self.project_feasible(&(&b + &c * step), s);
            let val = c.dot(&b);
            if val > best_val {
                best_val = val;
                best = b.clone();
            }
        }
        // Radial boost: along a fixed direction the objective grows linearly,
        // so scaling to the first active constraint cannot hurt.
        if best_val > 0.0 {
            let quad = self.quad_value(&best);
            let budget = self.budget_value(&best);
            let mut scale = f64::INFINITY;
            if quad > 0.0 {
                scale = scale.min(1.0 / quad.sqrt());
            }
            if budget > 0.0 {
                scale = scale.min(s / budget);
            }
            if scale.is_finite() && scale > 1.0 {
                let boosted = &best * scale;
                if self.is_feasible(&boosted, s, 1e-9) {
                    best = boosted;
                }
            }
        }
        Ok(best)
    }

    /// Recovers per-variable dual coefficients `alpha_kj` from the reduced
    /// coordinates by a ridge-regularized pseudo-inverse of each Gram.
    pub fn recover_alphas(&self, b: &DVector<f64>, n: usize) -> Vec<DVector<f64>> {
        let sqrt_n = (n as f64).sqrt();
        self.bases
            .iter()
            .enumerate()
            .map(|(j, basis)| {
                let bj = self.group(b, j);
                let scaled = DVector::from_fn(bj.len(), |r, _| {
                    sqrt_n * bj[r] / (basis.values[r] + 1e-10)
                });
                &basis.vectors * scaled
            })
            .collect()
    }
}

/// Fit output: per-variable group-norm scores, the selection they imply, the
/// dual coefficients, view scores `f_k / sqrt(n)`, and the objective trace.
#[derive(Debug, Clone)]
pub struct SaKgccaSolution {
    pub norm_scores: Vec<Vec<f64>>,
    pub selected: Vec<Vec<usize>>,
    pub alphas: Vec<Vec<DVector<f64>>>,
    pub scores: Vec<DVector<f64>>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl SaKgccaSolution {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

fn pairwise_score_objective(scores: &[DVector<f64>]) -> f64 {
    let mut total = 0.0;
    for s in 0..scores.len() {
        for t in (s + 1)..scores.len() {
            total += scores[s].dot(&scores[t]);
        }
    }
    total
}

/// Deterministic feasible initialization: each group points along its top
/// Gram eigendirection; the stacked vector is scaled onto the tighter
/// constraint.
fn default_init(solver: &SaViewSolver, s: f64) -> DVector<f64> {
    let mut b = DVector::zeros(solver.dim);
    for j in 0..solver.p() {
        b[solver.offsets[j]] = 1.0;
    }
    scale_feasible(solver, b, s)
}

fn scale_feasible(solver: &SaViewSolver, mut b: DVector<f64>, s: f64) -> DVector<f64> {
    let quad = solver.quad_value(&b);
    let budget = solver.budget_value(&b);
    let mut scale = f64::INFINITY;
    if quad > 0.0 {
        scale = scale.min(1.0 / quad.sqrt());
    }
    if budget > 0.0 {
        scale = scale.min(s / budget);
    }
    if scale.is_finite() {
        b *= scale;
    }
    b
}

/// Random feasible initialization for multi-start.
pub fn random_init(solver: &SaViewSolver, s: f64, rng: &mut impl rand::Rng) -> DVector<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let b = DVector::from_fn(solver.dim, |_, _| StandardNormal.sample(rng));
    scale_feasible(solver, b, s)
}

/// Runs the BCD fit. `init` supplies one stacked coordinate vector per view;
/// by default each view starts from its top Gram eigendirections.
pub fn fit_sa_kgcca(
    data: &MultiViewDataset,
    cfg: &SaKgccaConfig,
    init: Option<Vec<DVector<f64>>>,
) -> Result<SaKgccaSolution> {
    cfg.validate(data.k())?;
    let solvers = data
        .views()
        .iter()
        .zip(&cfg.s)
        .map(|(view, &s)| SaViewSolver::build(view, cfg.eps_reg, s))
        .collect::<Result<Vec<_>>>()?;
    fit_sa_kgcca_with(&solvers, data.n(), cfg, init)
}

/// BCD fit over prebuilt per-view solvers (reused across CV grid points).
pub fn fit_sa_kgcca_with(
    solvers: &[SaViewSolver],
    n: usize,
    cfg: &SaKgccaConfig,
    init: Option<Vec<DVector<f64>>>,
) -> Result<SaKgccaSolution> {
    cfg.validate(solvers.len())?;
    let k_views = solvers.len();
    let mut b: Vec<DVector<f64>> = match init {
        Some(init) => {
            if init.len() != k_views {
                return Err(Error::InvalidInput("one initial vector per view required".into()));
            }
            init.into_iter()
                .zip(solvers)
                .zip(&cfg.s)
                .map(|((v, solver), &s)| {
                    if v.len() != solver.dim {
                        return Err(Error::InvalidInput(
                            "initial vector dimension mismatch".into(),
                        ));
                    }
                    Ok(solver.project_feasible(&v, s))
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => solvers
            .iter()
            .zip(&cfg.s)
            .map(|(solver, &s)| default_init(solver, s))
            .collect(),
    };
    let mut scores: Vec<DVector<f64>> =
        solvers.iter().zip(&b).map(|(solver, bk)| solver.score(bk)).collect();
    let mut objective_trace = vec![pairwise_score_objective(&scores)];
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        let mut max_change = 0.0f64;
        for k in 0..k_views {
            let mut target = DVector::zeros(n);
            for (t, score) in scores.iter().enumerate() {
                if t != k {
                    target += score;
                }
            }
            let updated = match solvers[k].solve_subproblem(&b[k], &target, cfg.s[k], cfg.max_inner)
            {
                Ok(updated) => updated,
                // Zero linear term: the block stays unchanged.
                Err(Error::DegenerateData(_)) => continue,
                Err(e) => return Err(e),
            };
            // No regression: keep the incumbent when the inexact inner solve
            // fails to improve the block's linear objective.
            let c_dot = |v: &DVector<f64>| {
                solvers[k].score(v).dot(&{
                    let mut g = DVector::zeros(n);
                    for (t, score) in scores.iter().enumerate() {
                        if t != k {
                            g += score;
                        }
                    }
                    g
                })
            };
            if c_dot(&updated) >= c_dot(&b[k]) - 1e-8 {
                let new_score = solvers[k].score(&updated);
                max_change = max_change.max((&new_score - &scores[k]).amax());
                scores[k] = new_score;
                b[k] = updated;
            }
        }
        objective_trace.push(pairwise_score_objective(&scores));
        if max_change <= cfg.tol {
            converged = true;
            break;
        }
    }

    let mut norm_scores = Vec::with_capacity(k_views);
    let mut selected = Vec::with_capacity(k_views);
    let mut alphas = Vec::with_capacity(k_views);
    for (k, solver) in solvers.iter().enumerate() {
        let norms = solver.group_norms(&b[k]);
        let top = norms.iter().cloned().fold(0.0f64, f64::max);
        let chosen: Vec<usize> = norms
            .iter()
            .enumerate()
            .filter(|(_, &g)| top > 0.0 && g > SA_SELECTION_REL_THRESHOLD * top)
            .map(|(j, _)| j)
            .collect();
        alphas.push(solver.recover_alphas(&b[k], n));
        norm_scores.push(norms);
        selected.push(chosen);
    }
    Ok(SaKgccaSolution {
        norm_scores,
        selected,
        alphas,
        scores,
        objective_trace,
        converged,
    })
}

/// Evaluates a fitted view's additive score on held-out samples.
///
/// Each variable's kernel column means come from the training Gram, so the
/// centering matches the one baked into the training-fold coefficients:
/// `Ktilde*(a, i) = K*(a, i) - rowmean_a - traincolmean_i + traingrand`.
pub fn holdout_score_vector(
    train: &ViewSample,
    test: &ViewSample,
    alphas: &[DVector<f64>],
) -> Result<DVector<f64>> {
    if train.p() != test.p() {
        return Err(Error::InvalidInput("train/test views disagree on p".into()));
    }
    if alphas.len() != train.p() {
        return Err(Error::InvalidInput("one alpha per variable required".into()));
    }
    let n_train = train.n();
    let n_test = test.n();
    let mut f = DVector::zeros(n_test);
    for j in 0..train.p() {
        let xs = train.variable(j);
        let sigma = match median_abs_diff_bandwidth(&xs) {
            Ok(sigma) => sigma,
            Err(_) => continue,
        };
        let inv = 1.0 / (2.0 * sigma * sigma);
        let zs = test.variable(j);
        let k_train = DMatrix::from_fn(n_train, n_train, |a, b| {
            (-(xs[a] - xs[b]).powi(2) * inv).exp()
        });
        let col_means: Vec<f64> = (0..n_train)
            .map(|i| k_train.column(i).iter().sum::<f64>() / n_train as f64)
            .collect();
        let grand = col_means.iter().sum::<f64>() / n_train as f64;
        let cross = DMatrix::from_fn(n_test, n_train, |a, i| (-(zs[a] - xs[i]).powi(2) * inv).exp());
        for a in 0..n_test {
            let row_mean = cross.row(a).iter().sum::<f64>() / n_train as f64;
            let mut acc = 0.0;
            for i in 0..n_train {
                acc += (cross[(a, i)] - row_mean - col_means[i] + grand) * alphas[j][i];
            }
            f[a] += acc;
        }
    }
    Ok(f)
}
