//! Eigenvector overlap statistics of non-Hermitian random matrices, by
//! Monte Carlo and by large-N analytic formulas.

pub mod analytic;
pub mod compare;
pub mod ensembles;
pub mod estimators;
pub mod numcore;
pub mod overlaps;
pub mod qsolver;
