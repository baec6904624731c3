//! Independent checks of the closed forms: quadrature of the covariance
//! integral and exact-transition Monte Carlo of the correlated factor pair.

mod engine;
pub mod quadrature;
pub mod sampler;
mod shifts;

pub use engine::{Execution, SimConfig, SimResult, LEAF_PATHS};
pub use quadrature::quadrature_covariance;
pub use sampler::PathSampler;
pub use shifts::{calibrate_shifts, calibrate_shifts_with_knots, ShiftFunctions};

use crate::convexity::{ModelParams, RepoSchedule};
use crate::curves::DiscountCurve;
use crate::error::{Error, Result};
use crate::kernels::{decay_integral, decay_product_integral};

/// Convexity adjustment estimated from its definition as a log-ratio of expectations.
///
/// With `R = ∫x`, `B = ∫y` over `[t, e]` and `Π` the ratio of bond prices at
/// `e` and `s`,
///
/// ```text
/// C = ln E[e^{-R-B} Π] + ln E[e^{-R}] - ln E[e^{-R-B}] - ln E[e^{-R} Π]
/// ```
///
/// Deterministic shifts cancel from every ratio, so the factors start at zero.
pub fn mc_convexity(params: &ModelParams, schedule: &RepoSchedule, config: &SimConfig) -> Result<SimResult> {
    params.validate()?;
    schedule.validate()?;
    let sampler = PathSampler::new(
        params,
        schedule.fix,
        schedule.start,
        schedule.end,
        config.steps_per_segment,
    );
    let dur_s = decay_integral(params.theta, schedule.bond_maturity - schedule.start);
    let dur_e = decay_integral(params.theta, schedule.bond_maturity - schedule.end);
    let moments = engine::simulate(config, |rng| {
        let (s, e) = sampler.sample(rng);
        let bond = (-e.int_x).exp();
        let both = (-e.int_x - e.int_y).exp();
        let payoff = (dur_s * s.x - dur_e * e.x).exp();
        [bond, bond * payoff, both, both * payoff]
    })?;
    let m: [f64; 4] = std::array::from_fn(|i| moments.mean(i));
    let estimate = (m[3] / m[1]).ln() - (m[2] / m[0]).ln();
    let std_error = moments.linear_std_error([1.0 / m[0], -1.0 / m[1], -1.0 / m[2], 1.0 / m[3]]);
    Ok(SimResult {
        estimate,
        std_error,
        n_paths: moments.count() as usize,
    })
}

/// Fair repo rate from the zero-price condition, by simulation.
///
/// ```text
/// f = (E[D_e p̄_e^T / p̄_s^T] / E[D_e] - 1) / δ,    D_e = exp(-∫_t^e (r̄ + b))
/// ```
///
/// The fixing must be the valuation time of both curves; bond prices come from
/// the Hull-White log-price formula under the calibrated shifts.
pub fn mc_repo_rate(
    bond_curve: &DiscountCurve,
    derivative_curve: &DiscountCurve,
    params: &ModelParams,
    schedule: &RepoSchedule,
    config: &SimConfig,
) -> Result<SimResult> {
    params.validate()?;
    schedule.validate()?;
    if schedule.fix != bond_curve.valuation_time() {
        return Err(Error::Unsupported(format!(
            "simulation needs the fixing time {} to equal the valuation time {}",
            schedule.fix,
            bond_curve.valuation_time()
        )));
    }
    let RepoSchedule {
        start,
        end,
        bond_maturity,
        accrual,
        ..
    } = *schedule;
    let shifts = calibrate_shifts_with_knots(bond_curve, derivative_curve, params, &[start, end, bond_maturity])?;

    let log_bond_intercept = |u: f64| -> Result<f64> {
        let tau = bond_maturity - u;
        let variance = params.sigma * params.sigma * decay_product_integral(params.theta, params.theta, tau);
        Ok(-(shifts.integrated_bond_shift(bond_maturity)? - shifts.integrated_bond_shift(u)?) + 0.5 * variance)
    };
    let drift = log_bond_intercept(end)? - log_bond_intercept(start)?;
    let dur_s = decay_integral(params.theta, bond_maturity - start);
    let dur_e = decay_integral(params.theta, bond_maturity - end);
    let discount = shifts.integrated_bond_shift(end)? + shifts.integrated_basis_shift(end)?;

    let sampler = PathSampler::new(params, schedule.fix, start, end, config.steps_per_segment);
    let moments = engine::simulate(config, |rng| {
        let (s, e) = sampler.sample(rng);
        let d = (-discount - e.int_x - e.int_y).exp();
        let ratio = (drift - dur_e * e.x + dur_s * s.x).exp();
        [d, d * ratio]
    })?;
    let (md, mdp) = (moments.mean(0), moments.mean(1));
    let growth = mdp / md;
    let std_error = moments.linear_std_error([-growth / md, 1.0 / md]) / accrual;
    Ok(SimResult {
        estimate: (growth - 1.0) / accrual,
        std_error,
        n_paths: moments.count() as usize,
    })
}
