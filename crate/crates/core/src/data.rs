//! Multi-view data containers.
//!
//! A view stores its observations as a `p x n` matrix: one row per variable,
//! one column per sample, with all views sharing the same `n` samples.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One data view: `p` variables observed on `n` samples.
#[derive(Debug, Clone)]
pub struct ViewSample {
    data: DMatrix<f64>,
}

impl ViewSample {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() < 2 {
            return Err(Error::InvalidInput(format!(
                "view needs p >= 1 and n >= 2, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite view entry".into()));
        }
        Ok(Self { data })
    }

    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// The observations of variable `j` across samples.
    pub fn variable(&self, j: usize) -> Vec<f64> {
        self.data.row(j).iter().copied().collect()
    }

    /// Returns the view with each variable shifted to zero sample mean.
    pub fn centered(&self) -> ViewSample {
        let n = self.n() as f64;
        let mut data = self.data.clone();
        for mut row in data.row_iter_mut() {
            let mean = row.iter().sum::<f64>() / n;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        ViewSample { data }
    }

    /// Restricts the view to the given sample indices.
    pub fn subset(&self, indices: &[usize]) -> Result<ViewSample> {
        if indices.len() < 2 {
            return Err(Error::InvalidInput("subset needs at least 2 samples".into()));
        }
        let mut data = DMatrix::zeros(self.p(), indices.len());
        for (dst, &src) in indices.iter().enumerate() {
            if src >= self.n() {
                return Err(Error::InvalidInput(format!("sample index {src} out of range")));
            }
            data.set_column(dst, &self.data.column(src));
        }
        Ok(ViewSample { data })
    }

    /// Projections `u^T x^(i)` for every sample.
    pub fn project(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.p() {
            return Err(Error::InvalidInput(format!(
                "coefficient length {} does not match p = {}",
                u.len(),
                self.p()
            )));
        }
        Ok((u.transpose() * &self.data).transpose())
    }
}

/// `K` views over the same `n` samples.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<ViewSample>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<ViewSample>) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::InvalidInput("need at least 2 views".into()));
        }
        let n = views[0].n();
        if views.iter().any(|v| v.n() != n) {
            return Err(Error::InvalidInput("views disagree on sample count".into()));
        }
        Ok(Self { views })
    }

    pub fn k(&self) -> usize {
        self.views.len()
    }

    pub fn n(&self) -> usize {
        self.views[0].n()
    }

    pub fn views(&self) -> &[ViewSample] {
        &self.views
    }

    pub fn view(&self, k: usize) -> &ViewSample {
        &self.views[k]
    }

    pub fn centered(&self) -> MultiViewDataset {
        MultiViewDataset {
            views: self.views.iter().map(|v| v.centered()).collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Result<MultiViewDataset> {
        let views = self
            .views
            .iter()
            .map(|v| v.subset(indices))
            .collect::<Result<Vec<_>>>()?;
        MultiViewDataset::new(views)
    }
}
