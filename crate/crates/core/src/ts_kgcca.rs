//! TS-KGCCA screening stage: block coordinate descent over per-variable
//! kernel weights.
//!
//! For each pair of views, the matrix `M_st[i,j] = tr(K_si H K_tj H) / n^2`
//! collects empirical HSIC values between single variables. The weights
//! `u_k` maximize `sum_{s<t} u_s^T M_st u_t` under `||u_k||_2 <= 1` and
//! `||u_k||_1 <= s_k`; each block update has the closed form of normalized
//! soft-thresholding.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, ViewSample};
use crate::error::{Error, Result};
use crate::hsic_sgcca::{variable_selection, CanonicalSolution, SELECTION_THRESHOLD};
use crate::kernel::{center_matrix, median_abs_diff_bandwidth};

/// Matrix of empirical HSIC values between single variables of two views.
#[derive(Debug, Clone)]
pub struct PairwiseHsicMatrix {
    entries: DMatrix<f64>,
}

impl PairwiseHsicMatrix {
    /// Wraps precomputed entries; negative values are rejected since each
    /// entry is an inner product of centered PSD Gram matrices.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "pairwise HSIC entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Solver parameters; reference settings are budgets in `[1, sqrt(p_k)]`,
/// tolerance `5e-2`, 10 outer sweeps, and 1000 binary-search steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsKgccaConfig {
    pub s: Vec<f64>,
    pub tol: f64,
    pub max_outer: usize,
    pub max_binary_search: usize,
}

impl TsKgccaConfig {
    pub fn new(s: Vec<f64>) -> Self {
        Self { s, tol: 5e-2, max_outer: 10, max_binary_search: 1000 }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.s.len() != k {
            return Err(Error::InvalidInput(format!(
                "expected {k} budgets, got {}",
                self.s.len()
            )));
        }
        if self.s.iter().any(|&s| s < 1.0 || !s.is_finite()) {
            return Err(Error::InvalidInput("budgets must satisfy s_k >= 1".into()));
        }
        if self.tol <= 0.0 || self.max_outer == 0 || self.max_binary_search == 0 {
            return Err(Error::InvalidInput("tolerance and limits must be positive".into()));
        }
        Ok(())
    }
}

/// Centered per-variable Gaussian Gram matrices of a view, median-bandwidth
/// per variable; constant variables yield the zero matrix.
fn centered_variable_grams(view: &ViewSample) -> Vec<DMatrix<f64>> {
    let n = view.n();
    (0..view.p())
        .into_par_iter()
        .map(|j| {
            let xs = view.variable(j);
            match median_abs_diff_bandwidth(&xs) {
                Ok(sigma) => {
                    let inv = 1.0 / (2.0 * sigma * sigma);
                    let gram = DMatrix::from_fn(n, n, |a, b| {
                        (-(xs[a] - xs[b]).powi(2) * inv).exp()
                    });
                    center_matrix(&gram)
                }
                // Constant variable: all-ones Gram centers to zero.
                Err(_) => DMatrix::zeros(n, n),
            }
        })
        .collect()
}

/// Builds `M_st` with `M[i,j] = <Ktilde_si, Ktilde_tj>_F / n^2`, the
/// empirical HSIC between variable `i` of view `s` and variable `j` of
/// view `t`.
pub fn pairwise_hsic_matrix(view_s: &ViewSample, view_t: &ViewSample) -> Result<PairwiseHsicMatrix> {
    if view_s.n() != view_t.n() {
        return Err(Error::InvalidInput("views disagree on sample count".into()));
    }
    let n2 = (view_s.n() * view_s.n()) as f64;
    let grams_s = centered_variable_grams(view_s);
    let grams_t = centered_variable_grams(view_t);
    let p_t = view_t.p();
    let rows: Vec<Vec<f64>> = grams_s
        .par_iter()
        .map(|gs| {
            (0..p_t)
                .map(|j| (gs.dot(&grams_t[j]) / n2).max(0.0))
                .collect()
        })
        .collect();
    let entries = DMatrix::from_fn(view_s.p(), p_t, |i, j| rows[i][j]);
    PairwiseHsicMatrix::from_entries(entries)
}

/// All `M_st` for `s < t`.
pub struct PairwiseHsicSet {
    k: usize,
    /// `pairs[idx]` holds `M_st` for the `idx`-th pair in `(s, t)` order.
    pairs: Vec<((usize, usize), PairwiseHsicMatrix)>,
}

impl PairwiseHsicSet {
    pub fn build(data: &MultiViewDataset) -> Result<Self> {
        let k = data.k();
        let mut pairs = Vec::new();
        for s in 0..k {
            for t in (s + 1)..k {
                pairs.push(((s, t), pairwise_hsic_matrix(data.view(s), data.view(t))?));
            }
        }
        Ok(Self { k, pairs })
    }

    pub fn from_pairs(k: usize, pairs: Vec<((usize, usize), PairwiseHsicMatrix)>) -> Result<Self> {
        let expected = k * (k - 1) / 2;
        if pairs.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} pair matrices for {k} views"
            )));
        }
        Ok(Self { k, pairs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, s: usize, t: usize) -> Option<&PairwiseHsicMatrix> {
        self.pairs
            .iter()
            .find(|((a, b), _)| (*a, *b) == (s.min(t), s.max(t)))
            .map(|(_, m)| m)
    }

    /// `sum_{s<t} u_s^T M_st u_t`.
    pub fn objective(&self, u: &[DVector<f64>]) -> f64 {
        self.pairs
            .iter()
            .map(|((s, t), m)| (u[*s].transpose() * m.entries() * &u[*t])[(0, 0)])
            .sum()
    }

    /// Linear coefficient of block `k`: `sum_{t != k} M_kt u_t`.
    fn linear_term(&self, k: usize, u: &[DVector<f64>]) -> DVector<f64> {
        let mut c: Option<DVector<f64>> = None;
        for ((s, t), m) in &self.pairs {
            let contrib = if *s == k {
                m.entries() * &u[*t]
            } else if *t == k {
                m.entries().transpose() * &u[*s]
            } else {
                continue;
            };
            c = Some(match c {
                Some(acc) => acc + contrib,
                None => contrib,
            });
        }
        c.expect("every view appears in at least one pair")
    }

    fn all_zero(&self) -> bool {
        self.pairs.iter().all(|(_, m)| m.entries().amax() == 0.0)
    }
}

/// Maximizes `u^T c` over `||u||_2 <= 1`, `||u||_1 <= s` by soft-thresholding
/// `c` and normalizing, with a binary search on the threshold to hit the
/// l1 budget within `1e-6`.
pub fn normalized_soft_threshold_solve(
    c: &DVector<f64>,
    s: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    if c.amax() == 0.0 {
        return Err(Error::DegenerateData("zero linear term".into()));
    }
    if s < 1.0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    let solve_at = |delta: f64| -> DVector<f64> {
        let thresholded = c.map(|v| v.signum() * (v.abs() - delta).max(0.0));
        let norm = thresholded.norm();
        if norm > 0.0 {
            thresholded / norm
        } else {
            thresholded
        }
    };
    let u = solve_at(0.0);
    if u.lp_norm(1) <= s + 1e-6 {
        return Ok(u);
    }
    let mut lo = 0.0;
    let mut hi = c.amax();
    let mut best = u;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let cand = solve_at(mid);
        let l1 = cand.lp_norm(1);
        if cand.norm() > 0.0 {
            best = cand;
        }
        if (l1 - s).abs() <= 1e-6 {
            break;
        }
        if l1 > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// BCD fit over precomputed pairwise HSIC matrices.
pub fn fit_ts_kgcca_with(
    set: &PairwiseHsicSet,
    dims: &[usize],
    cfg: &TsKgccaConfig,
    init: Option<Vec<DVector<f64>>>,
) -> Result<CanonicalSolution> {
    cfg.validate(set.k())?;
    if set.all_zero() {
        return Err(Error::DegenerateData("all pairwise HSIC matrices are zero".into()));
    }
    let raw_init: Vec<DVector<f64>> = match init {
        Some(init) => {
            if init.len() != set.k() {
                return Err(Error::InvalidInput("one initial u per view required".into()));
            }
            init
        }
        None => dims
            .iter()
            .map(|&p| DVector::from_element(p, 1.0 / (p as f64).sqrt()))
            .collect(),
    };
    // Feasibilize the starting point (unit l2, then shrink onto the l1
    // budget) so the objective trace is monotone from its first entry.
    let mut u: Vec<DVector<f64>> = raw_init
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let norm = v.norm();
            let mut v = if norm > 0.0 { v / norm } else { v };
            let l1 = v.lp_norm(1);
            if l1 > cfg.s[k] {
                v *= cfg.s[k] / l1;
            }
            v
        })
        .collect();
    let mut objective_trace = vec![set.objective(&u)];
    let mut converged = false;
    for _ in 0..cfg.max_outer {
        let mut max_change = 0.0f64;
        for k in 0..set.k() {
            let c = set.linear_term(k, &u);
            if c.amax() == 0.0 {
                continue;
            }
            let updated = normalized_soft_threshold_solve(&c, cfg.s[k], cfg.max_binary_search)?;
            // Ties in |c| can defeat the thresholding form; keep the
            // incumbent if the exactness of the block maximization slipped.
            if c.dot(&updated) < c.dot(&u[k]) {
                continue;
            }
            max_change = max_change.max((&updated - &u[k]).amax());
            u[k] = updated;
        }
        objective_trace.push(set.objective(&u));
        if max_change <= cfg.tol {
            converged = true;
            break;
        }
    }
    let selected = u
        .iter()
        .map(|uk| variable_selection(uk, SELECTION_THRESHOLD))
        .collect();
    Ok(CanonicalSolution {
        u: u.iter().map(|uk| uk.iter().copied().collect()).collect(),
        selected,
        objective_trace,
        converged,
    })
}

/// Builds the pairwise HSIC matrices and runs the BCD fit.
pub fn fit_ts_kgcca(
    data: &MultiViewDataset,
    cfg: &TsKgccaConfig,
    init: Option<Vec<DVector<f64>>>,
) -> Result<CanonicalSolution> {
    let set = PairwiseHsicSet::build(data)?;
    let dims: Vec<usize> = data.views().iter().map(|v| v.p()).collect();
    fit_ts_kgcca_with(&set, &dims, cfg, init)
}
