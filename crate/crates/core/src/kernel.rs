//! Gaussian kernel Gram matrices, empirical HSIC, the Gaussian closed-form
//! HSIC, and bandwidth heuristics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n x n` Gaussian kernel Gram matrix with its bandwidth record.
#[derive(Debug, Clone)]
pub struct KernelGram {
    entries: DMatrix<f64>,
    bandwidth: f64,
    centered: bool,
}

impl KernelGram {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Returns the doubly centered Gram `H K H`.
    pub fn centered(&self) -> KernelGram {
        if self.centered {
            return self.clone();
        }
        KernelGram {
            entries: center_matrix(&self.entries),
            bandwidth: self.bandwidth,
            centered: true,
        }
    }

    /// Wraps an externally built Gram matrix. Used for projection kernels in
    /// cross-validation and for the constant-variable (all-ones) case.
    pub fn from_entries(entries: DMatrix<f64>, bandwidth: f64, centered: bool) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidInput("Gram matrix must be square and nonempty".into()));
        }
        Ok(Self { entries, bandwidth, centered })
    }
}

/// `H K H` computed entrywise: subtract row and column means, add back the
/// grand mean.
pub(crate) fn center_matrix(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).iter().sum::<f64>() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - row_means[j] + grand)
}

/// Gaussian Gram matrix `exp(-||x_i - x_j||^2 / (2 sigma^2))` for the points
/// given as columns of `points`.
pub fn gaussian_gram(points: &DMatrix<f64>, sigma: f64) -> Result<KernelGram> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {sigma}")));
    }
    let n = points.ncols();
    if n == 0 {
        return Err(Error::InvalidInput("no points".into()));
    }
    let sq = squared_distances(points);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let entries = DMatrix::from_fn(n, n, |i, j| (-sq[(i, j)] * inv).exp());
    Ok(KernelGram { entries, bandwidth: sigma, centered: false })
}

/// Gaussian Gram matrix for scalar observations.
pub fn gaussian_gram_scalar(xs: &[f64], sigma: f64) -> Result<KernelGram> {
    let m = DMatrix::from_row_slice(1, xs.len(), xs);
    gaussian_gram(&m, sigma)
}

/// Gram matrix of a single variable under its median-bandwidth Gaussian
/// kernel. A constant variable yields the all-ones Gram (zero distances make
/// the bandwidth irrelevant), which centers to the zero matrix downstream.
pub fn per_variable_gram(xs: &[f64]) -> Result<KernelGram> {
    match median_abs_diff_bandwidth(xs) {
        Ok(sigma) => gaussian_gram_scalar(xs, sigma),
        Err(Error::DegenerateData(_)) => {
            KernelGram::from_entries(DMatrix::from_element(xs.len(), xs.len(), 1.0), f64::NAN, false)
        }
        Err(e) => Err(e),
    }
}

/// Pairwise squared Euclidean distances between the columns of `points`.
pub fn squared_distances(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.ncols();
    let gram = points.transpose() * points;
    DMatrix::from_fn(n, n, |i, j| {
        (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0)
    })
}

/// Lower median of a sample (deterministic for even counts).
fn lower_median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[(values.len() - 1) / 2]
}

/// Bandwidth rule for multivariate view kernels: `sigma^2` is the median of
/// squared pairwise Euclidean distances between observations (columns).
pub fn median_sq_dist_bandwidth(points: &DMatrix<f64>) -> Result<f64> {
    let n = points.ncols();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let sq = squared_distances(points);
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push(sq[(i, j)]);
        }
    }
    let med = lower_median(pairs);
    if med <= 0.0 {
        return Err(Error::DegenerateData("median pairwise distance is zero".into()));
    }
    Ok(med.sqrt())
}

/// Bandwidth rule for per-variable kernels: `sigma` is the median of pairwise
/// absolute differences between scalar observations.
pub fn median_abs_diff_bandwidth(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let mut pairs = Vec::with_capacity(xs.len() * (xs.len() - 1) / 2);
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            pairs.push((xs[i] - xs[j]).abs());
        }
    }
    let med = lower_median(pairs);
    if med <= 0.0 {
        return Err(Error::DegenerateData("median pairwise difference is zero".into()));
    }
    Ok(med)
}

/// Alternative heuristic: `sigma^2` equals the trace of the sample covariance
/// matrix of the observations. Exposed for completeness; no solver uses it by
/// default.
pub fn trace_cov_bandwidth(points: &DMatrix<f64>) -> Result<f64> {
    let n = points.ncols();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    let nf = n as f64;
    let mut trace = 0.0;
    for row in points.row_iter() {
        let mean = row.iter().sum::<f64>() / nf;
        trace += row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    }
    if trace <= 0.0 {
        return Err(Error::DegenerateData("zero-variance data".into()));
    }
    Ok(trace.sqrt())
}

/// Empirical HSIC `tr(K1 H K2 H) / n^2`.
pub fn empirical_hsic(g1: &KernelGram, g2: &KernelGram) -> Result<f64> {
    if g1.n() != g2.n() {
        return Err(Error::InvalidInput(format!(
            "Gram sizes differ: {} vs {}",
            g1.n(),
            g2.n()
        )));
    }
    let n = g1.n() as f64;
    Ok(centered_trace(g1, g2) / (n * n))
}

/// `tr(K1 H K2 H)` with centering applied as needed.
fn centered_trace(g1: &KernelGram, g2: &KernelGram) -> f64 {
    // tr(K1 H K2 H) = <H K1 H, H K2 H>_F since H is idempotent.
    match (g1.centered, g2.centered) {
        (true, true) => g1.entries.dot(&g2.entries),
        (true, false) => g1.entries.dot(&center_matrix(&g2.entries)),
        (false, true) => center_matrix(&g1.entries).dot(&g2.entries),
        (false, false) => center_matrix(&g1.entries).dot(&g2.entries),
    }
}

/// Closed-form HSIC between two jointly Gaussian scalars with variances
/// `sigma1sq`, `sigma2sq` and correlation `rho`, under unit-bandwidth
/// Gaussian kernels.
pub fn gaussian_hsic_closed_form(sigma1sq: f64, sigma2sq: f64, rho: f64) -> Result<f64> {
    if sigma1sq <= 0.0 || sigma2sq <= 0.0 {
        return Err(Error::InvalidInput("variances must be positive".into()));
    }
    if rho.abs() > 1.0 {
        return Err(Error::InvalidInput(format!("|rho| must be <= 1, got {rho}")));
    }
    let (a, b, r2) = (sigma1sq, sigma2sq, rho * rho);
    let term1 = 1.0 / (1.0 + 2.0 * a + 2.0 * b + 4.0 * a * b * (1.0 - r2)).sqrt();
    let term2 = 1.0 / ((1.0 + 2.0 * a) * (1.0 + 2.0 * b)).sqrt();
    let term3 = -2.0 / ((1.0 + 2.0 * a) * (1.0 + 2.0 * b) - a * b * r2).sqrt();
    Ok(term1 + term2 + term3)
}

/// Sum of pairwise centered trace terms `tr(K_s H K_t H) / n` over view pairs
/// `s < t`. This is the held-out tuning objective's per-fold contribution.
pub fn hsic_cross_objective(grams: &[KernelGram]) -> Result<f64> {
    if grams.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 Gram matrices".into()));
    }
    let n = grams[0].n();
    if grams.iter().any(|g| g.n() != n) {
        return Err(Error::InvalidInput("Gram sizes differ".into()));
    }
    let centered: Vec<KernelGram> = grams.iter().map(|g| g.centered()).collect();
    let mut total = 0.0;
    for s in 0..centered.len() {
        for t in (s + 1)..centered.len() {
            total += centered[s].entries.dot(&centered[t].entries);
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn gram_identical_points() {
        let g = gaussian_gram_scalar(&[2.5, 2.5], 1.0).unwrap();
        for v in g.entries().iter() {
            assert_relative_eq!(*v, 1.0);
        }
    }

    #[test]
    fn gram_scalar_direct_value() {
        let g = gaussian_gram_scalar(&[0.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(g.entries()[(0, 1)], (-0.5f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(g.entries()[(0, 0)], 1.0);
    }

    #[test]
    fn gram_matches_naive_loop() {
        let mut rng = StdRng::seed_from_u64(1);
        let points = DMatrix::from_fn(3, 5, |_, _| rng.gen_range(-2.0..2.0));
        let sigma = median_sq_dist_bandwidth(&points).unwrap();
        let g = gaussian_gram(&points, sigma).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d2: f64 = (0..3)
                    .map(|r| (points[(r, i)] - points[(r, j)]).powi(2))
                    .sum();
                let expected = (-d2 / (2.0 * sigma * sigma)).exp();
                assert_relative_eq!(g.entries()[(i, j)], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gram_rejects_bad_sigma() {
        assert!(gaussian_gram_scalar(&[0.0, 1.0], 0.0).is_err());
        assert!(gaussian_gram_scalar(&[0.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn median_bandwidth_hand_cases() {
        // |diffs| of {0,1,2} are {1,1,2}; median 1.
        assert_relative_eq!(median_abs_diff_bandwidth(&[0.0, 1.0, 2.0]).unwrap(), 1.0);
        // Two points at distance d: sigma^2 = d^2 under the squared rule.
        let pts = DMatrix::from_row_slice(1, 2, &[0.0, 3.0]);
        assert_relative_eq!(median_sq_dist_bandwidth(&pts).unwrap(), 3.0);
        assert!(matches!(
            median_abs_diff_bandwidth(&[1.0, 1.0, 1.0]),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn hsic_two_by_two_closed_form() {
        // For n=2 with off-diagonals a and b: tr(K1 H K2 H)/4 = (1-a)(1-b)/4.
        let a = 0.3;
        let b = 0.8;
        let g1 = KernelGram::from_entries(
            DMatrix::from_row_slice(2, 2, &[1.0, a, a, 1.0]),
            1.0,
            false,
        )
        .unwrap();
        let g2 = KernelGram::from_entries(
            DMatrix::from_row_slice(2, 2, &[1.0, b, b, 1.0]),
            1.0,
            false,
        )
        .unwrap();
        let h = empirical_hsic(&g1, &g2).unwrap();
        assert_relative_eq!(h, (1.0 - a) * (1.0 - b) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn hsic_constant_variable_is_zero() {
        let g1 = gaussian_gram_scalar(&[0.0, 1.0, -1.0], 1.0).unwrap();
        let ones = KernelGram::from_entries(DMatrix::from_element(3, 3, 1.0), 1.0, false).unwrap();
        assert_relative_eq!(empirical_hsic(&g1, &ones).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hsic_symmetric_and_self_nonnegative() {
        let g1 = gaussian_gram_scalar(&[0.3, -0.2, 1.5, 0.0], 1.0).unwrap();
        let g2 = gaussian_gram_scalar(&[1.0, 0.5, -0.4, 2.0], 1.0).unwrap();
        assert_relative_eq!(
            empirical_hsic(&g1, &g2).unwrap(),
            empirical_hsic(&g2, &g1).unwrap()
        );
        assert!(empirical_hsic(&g1, &g1).unwrap() >= 0.0);
    }

    #[test]
    fn hsic_size_mismatch() {
        let g1 = gaussian_gram_scalar(&[0.0, 1.0], 1.0).unwrap();
        let g2 = gaussian_gram_scalar(&[0.0, 1.0, 2.0], 1.0).unwrap();
        assert!(empirical_hsic(&g1, &g2).is_err());
    }

    #[test]
    fn independent_scalars_hsic_shrinks_with_n() {
        // For independent data the empirical HSIC is a small positive bias
        // term decreasing with n.
        let mut rng = StdRng::seed_from_u64(42);
        let mean_hsic = |n: usize, rng: &mut StdRng| {
            let trials = 200;
            let mut total = 0.0;
            for _ in 0..trials {
                let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let ys: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let g1 = gaussian_gram_scalar(&xs, 1.0).unwrap();
                let g2 = gaussian_gram_scalar(&ys, 1.0).unwrap();
                total += empirical_hsic(&g1, &g2).unwrap();
            }
            total / trials as f64
        };
        let m50 = mean_hsic(50, &mut rng);
        let m200 = mean_hsic(200, &mut rng);
        assert!(m50 > 0.0);
        assert!(m200 < m50, "bias should shrink with n: {m200} vs {m50}");
        assert!(m50 < 0.05, "bias at n=50 unexpectedly large: {m50}");
    }

    #[test]
    fn closed_form_hand_values() {
        assert_relative_eq!(gaussian_hsic_closed_form(1.0, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        let expected = 1.0 / 5.0f64.sqrt() + 1.0 / 3.0 - 2.0 / 8.0f64.sqrt();
        assert_relative_eq!(gaussian_hsic_closed_form(1.0, 1.0, 1.0).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.0734401476, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_even_in_rho() {
        let plus = gaussian_hsic_closed_form(0.8, 1.3, 0.6).unwrap();
        let minus = gaussian_hsic_closed_form(0.8, 1.3, -0.6).unwrap();
        assert_relative_eq!(plus, minus);
        assert!(gaussian_hsic_closed_form(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn scale_rule_leaves_gram_unchanged() {
        let mut rng = StdRng::seed_from_u64(9);
        let points = DMatrix::from_fn(2, 6, |_, _| rng.gen_range(-1.0..1.0));
        let sigma = 0.7;
        let c = 3.5;
        let g = gaussian_gram(&points, sigma).unwrap();
        let g_scaled = gaussian_gram(&(&points * c), sigma * c).unwrap();
        assert!((g.entries() - g_scaled.entries()).amax() < 1e-12);
    }

    #[test]
    fn cross_objective_consistency() {
        let g1 = gaussian_gram_scalar(&[0.3, -0.2, 1.5, 0.0], 1.0).unwrap();
        let g2 = gaussian_gram_scalar(&[1.0, 0.5, -0.4, 2.0], 1.0).unwrap();
        let g3 = gaussian_gram_scalar(&[0.1, 0.2, 0.3, -0.9], 1.0).unwrap();
        // K=2 reduces to empirical HSIC times n.
        let pair = hsic_cross_objective(&[g1.clone(), g2.clone()]).unwrap();
        assert_relative_eq!(pair, empirical_hsic(&g1, &g2).unwrap() * 4.0, epsilon = 1e-12);
        // K=3 equals the sum of the three pair calls.
        let triple = hsic_cross_objective(&[g1.clone(), g2.clone(), g3.clone()]).unwrap();
        let sum = hsic_cross_objective(&[g1.clone(), g2.clone()]).unwrap()
            + hsic_cross_objective(&[g1.clone(), g3.clone()]).unwrap()
            + hsic_cross_objective(&[g2, g3.clone()]).unwrap();
        assert_relative_eq!(triple, sum, epsilon = 1e-12);
        // An all-ones Gram contributes nothing.
        let ones = KernelGram::from_entries(DMatrix::from_element(4, 4, 1.0), 1.0, false).unwrap();
        let with_ones = hsic_cross_objective(&[g1.clone(), ones]).unwrap();
        assert_relative_eq!(with_ones, 0.0, epsilon = 1e-13);
    }
}
