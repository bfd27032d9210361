//! Numerical tolerances shared by every module.

/// Hermiticity and unitarity, max-abs elementwise.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Smallest admissible eigenvalue of a positive semidefinite operator.
pub const TOL_PSD: f64 = 1e-10;
/// Operator equality, max-abs elementwise.
pub const TOL_EQ: f64 = 1e-9;
/// Trace-preservation residual of a Kraus set or Choi matrix.
pub const TOL_TP: f64 = 1e-9;
/// Relative eigenvalue threshold for the Kraus rank.
pub const TOL_RANK: f64 = 1e-9;
/// Default singular-value threshold of the extremality test.
pub const TOL_EXTREME: f64 = 1e-8;
/// Eigenvalues below this count as exact kernel membership.
pub const TOL_KERNEL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub psd: f64,
    pub eq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: TOL_HERMITIAN,
            psd: TOL_PSD,
            eq: TOL_EQ,
        }
    }
}
