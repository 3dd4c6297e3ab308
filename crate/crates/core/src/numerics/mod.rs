//! Shared numerical kernels: log-domain reals, windowed quadrature, root
//! finding, finite differences and golden-section search.

pub mod diff;
pub mod logreal;
pub mod optimize;
pub mod quadrature;
pub mod roots;

pub use diff::{central_diff, derivative};
pub use logreal::{log_sum_exp, log_sum_exp_raw, signed_log_sum_exp, LogReal};
pub use optimize::{golden_max, golden_min};
pub use quadrature::{gauss_legendre, integrate_logspace, QuadratureSpec};
pub use roots::{find_root_monotone, newton_bracketed};
