//! Quantile engine and confidence-interval constructors.

pub mod cache;
pub mod coupling;
pub mod intervals;

pub use cache::{beta_grid, TableCache, CACHE_DIR_ENV, DEFAULT_TABLE_SEED, DEFAULT_TABLE_SIZE};
pub use coupling::{coupling_draws, coupling_sample, BoundMethod, CouplingKind, CouplingLaw, DrawFn, QuantileTable};
pub use intervals::{
    ci_boundary_gauss, ci_fixed_k, ci_fixed_k_feasible, ci_large_k_gauss, ci_large_k_stable, fixed_k_interval,
    ConfidenceInterval, Target, Transform,
};

/// Convenience wrapper: the `(L, U)` bounds of a fixed-k table.
pub fn fixed_k_bounds(table: &QuantileTable, alpha: f64, method: BoundMethod) -> crate::Result<(f64, f64)> {
    if !table.law.kind.is_fixed_k() {
        return Err(crate::Error::Mismatch(format!("{} is not a fixed-k law", table.law.kind)));
    }
    table.bounds(alpha, method)
}
