#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convexity;
pub mod curves;
pub mod error;
pub mod kernels;
pub mod mc_oracle;
pub mod repo_pricing;

pub use convexity::{
    b_function, compute_adjustments, convexity_adjustment, forwardness_adjustment,
    liquidity_adjustment, maturity_adjustment, Adjustments, Maturity, ModelParams, RepoSchedule,
};
pub use curves::{strip_bond_curve_from_spot_repos, DiscountCurve, RepoQuote};
pub use error::{Error, Result};
pub use repo_pricing::RepoCurveView;
pub use mc_oracle::{
    calibrate_shifts, mc_convexity, mc_repo_rate, quadrature_covariance, Execution, ShiftFunctions, SimConfig,
    SimResult,
};
