//! Nonlinear sparse generalized canonical correlation analysis for
//! multi-view data.
//!
//! Three solvers select variables jointly across `K >= 2` data views by
//! maximizing kernel-based dependence between one-dimensional projections:
//!
//! - [`hsic_sgcca`]: block prox-linear outer iterations with linearized ADMM
//!   inner iterations over trace-one PSD relaxations of rank-one projection
//!   matrices.
//! - [`ts_kgcca`]: block coordinate descent over per-variable kernel weights
//!   with normalized soft-thresholding.
//! - [`sa_kgcca`]: block coordinate descent over sparse additive kernel
//!   expansions under a regularized-variance and a group-norm budget.
//!
//! Supporting modules provide shared dense linear algebra ([`linalg`]),
//! kernels and HSIC estimators ([`kernel`]), cross-validated tuning
//! ([`model_selection`]), synthetic benchmark generators ([`simulate`]), and
//! selection / cluster-separation metrics ([`metrics`]).

pub mod data;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod model_selection;
pub mod hsic_sgcca;
pub mod sa_kgcca;
pub mod simulate;
pub mod ts_kgcca;

pub use data::{MultiViewDataset, ViewSample};
pub use error::{Error, Result};
