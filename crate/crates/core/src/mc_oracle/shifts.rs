//! Deterministic shifts that make the two-factor model reprice the input curves.
//!
//! The bond short rate is `φ_r(u) + x(u)` and the basis is `φ_b(u) + y(u)`, with
//! `x`, `y` zero-mean Ornstein-Uhlenbeck factors started at zero. Both shifts are
//! piecewise constant between knots, and their integrals are fixed at the knots
//! by the Gaussian expectations
//!
//! ```text
//! P̄(v) = exp(-Φ_r(v) + ½ Var ∫x)
//! P(v) = exp(-Φ_r(v) - Φ_b(v) + ½ Var ∫(x + y))
//! ```

use crate::convexity::ModelParams;
use crate::curves::DiscountCurve;
use crate::error::{Error, Result};
use crate::kernels::decay_product_integral;

const CALIBRATION_TOL: f64 = 1e-10;

/// A piecewise-constant rate and its running integral from the origin.
#[derive(Debug, Clone, PartialEq)]
struct PiecewiseRate {
    // knots[0] is the origin
    knots: Vec<f64>,
    integrals: Vec<f64>,
    rates: Vec<f64>,
}

impl PiecewiseRate {
    fn from_integrals(knots: Vec<f64>, integrals: Vec<f64>) -> Self {
        let rates = knots
            .windows(2)
            .zip(integrals.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect();
        PiecewiseRate {
            knots,
            integrals,
            rates,
        }
    }

    fn last(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn check(&self, time: f64) -> Result<()> {
        if time >= self.knots[0] && time <= self.last() {
            Ok(())
        } else {
            Err(Error::OutOfSpan {
                time,
                start: self.knots[0],
                end: self.last(),
            })
        }
    }

    fn segment(&self, time: f64) -> usize {
        let i = self.knots.partition_point(|&k| k <= time);
        i.clamp(1, self.rates.len()) - 1
    }

    fn rate(&self, time: f64) -> Result<f64> {
        self.check(time)?;
        if self.rates.is_empty() {
            return Ok(0.0);
        }
        Ok(self.rates[self.segment(time)])
    }

    fn integral(&self, time: f64) -> Result<f64> {
        self.check(time)?;
        if self.rates.is_empty() {
            return Ok(0.0);
        }
        let i = self.segment(time);
        if time == self.knots[i + 1] {
            return Ok(self.integrals[i + 1]);
        }
        Ok(self.integrals[i] + self.rates[i] * (time - self.knots[i]))
    }
}

/// Calibrated bond-rate and basis shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFunctions {
    params: ModelParams,
    bond: PiecewiseRate,
    basis: PiecewiseRate,
}

impl ShiftFunctions {
    pub fn valuation_time(&self) -> f64 {
        self.bond.knots[0]
    }

    /// Knots of the bond shift, starting at the valuation time.
    pub fn bond_knots(&self) -> &[f64] {
        &self.bond.knots
    }

    /// Knots of the basis shift, starting at the valuation time.
    pub fn basis_knots(&self) -> &[f64] {
        &self.basis.knots
    }

    /// Bond-rate shift `φ_r` at `time`; right-continuous at knots.
    pub fn bond_shift(&self, time: f64) -> Result<f64> {
        self.bond.rate(time)
    }

    /// Basis shift `φ_b` at `time`; right-continuous at knots.
    pub fn basis_shift(&self, time: f64) -> Result<f64> {
        self.basis.rate(time)
    }

    /// `∫ φ_r` from the valuation time to `time`.
    pub fn integrated_bond_shift(&self, time: f64) -> Result<f64> {
        self.bond.integral(time)
    }

    /// `∫ φ_b` from the valuation time to `time`.
    pub fn integrated_basis_shift(&self, time: f64) -> Result<f64> {
        self.basis.integral(time)
    }

    /// Model bond discount factor `E[exp(-∫ r̄)]`.
    pub fn model_bond_df(&self, time: f64) -> Result<f64> {
        let tau = time - self.valuation_time();
        Ok((-self.bond.integral(time)? + 0.5 * bond_variance(&self.params, tau)).exp())
    }

    /// Model derivative discount factor `E[exp(-∫ (r̄ + b))]`.
    pub fn model_derivative_df(&self, time: f64) -> Result<f64> {
        let tau = time - self.valuation_time();
        let phi = self.bond.integral(time)? + self.basis.integral(time)?;
        Ok((-phi + 0.5 * total_variance(&self.params, tau)).exp())
    }
}

fn bond_variance(p: &ModelParams, tau: f64) -> f64 {
    p.sigma * p.sigma * decay_product_integral(p.theta, p.theta, tau)
}

fn total_variance(p: &ModelParams, tau: f64) -> f64 {
    bond_variance(p, tau)
        + p.epsilon * p.epsilon * decay_product_integral(p.kappa, p.kappa, tau)
        + 2.0 * p.covariance_scale() * decay_product_integral(p.theta, p.kappa, tau)
}

/// Calibrates shifts with knots at the pillars of both curves.
pub fn calibrate_shifts(
    bond_curve: &DiscountCurve,
    derivative_curve: &DiscountCurve,
    params: &ModelParams,
) -> Result<ShiftFunctions> {
    calibrate_shifts_with_knots(bond_curve, derivative_curve, params, &[])
}

/// Calibrates shifts, adding `extra_knots` to the pillar knots.
///
/// Extra knots past the derivative curve are used for the bond shift only.
pub fn calibrate_shifts_with_knots(
    bond_curve: &DiscountCurve,
    derivative_curve: &DiscountCurve,
    params: &ModelParams,
    extra_knots: &[f64],
) -> Result<ShiftFunctions> {
    params.validate()?;
    let origin = bond_curve.valuation_time();
    if derivative_curve.valuation_time() != origin {
        return Err(Error::param(
            "derivative_curve",
            "must share the bond curve valuation time",
        ));
    }
    if derivative_curve.last_time() > bond_curve.last_time() {
        return Err(Error::OutOfSpan {
            time: derivative_curve.last_time(),
            start: origin,
            end: bond_curve.last_time(),
        });
    }
    for &k in extra_knots {
        if !bond_curve.contains(k) {
            return Err(Error::OutOfSpan {
                time: k,
                start: origin,
                end: bond_curve.last_time(),
            });
        }
    }

    let mut knots: Vec<f64> = std::iter::once(origin)
        .chain(bond_curve.pillar_times().iter().copied())
        .chain(derivative_curve.pillar_times().iter().copied())
        .chain(extra_knots.iter().copied())
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let bond_integrals = knots
        .iter()
        .map(|&k| Ok(-bond_curve.log_discount_factor(k)? + 0.5 * bond_variance(params, k - origin)))
        .collect::<Result<Vec<_>>>()?;

    let basis_knots: Vec<f64> = knots
        .iter()
        .copied()
        .filter(|&k| k <= derivative_curve.last_time())
        .collect();
    let basis_integrals = basis_knots
        .iter()
        .zip(&bond_integrals)
        .map(|(&k, &phi_r)| {
            Ok(-derivative_curve.log_discount_factor(k)? + 0.5 * total_variance(params, k - origin) - phi_r)
        })
        .collect::<Result<Vec<_>>>()?;

    let shifts = ShiftFunctions {
        params: *params,
        bond: PiecewiseRate::from_integrals(knots, bond_integrals),
        basis: PiecewiseRate::from_integrals(basis_knots, basis_integrals),
    };
    verify(&shifts, bond_curve, derivative_curve)?;
    Ok(shifts)
}

fn verify(shifts: &ShiftFunctions, bond: &DiscountCurve, derivative: &DiscountCurve) -> Result<()> {
    let check = |time: f64, model: f64, market: f64| {
        let residual = (model / market - 1.0).abs();
        if residual > CALIBRATION_TOL || !residual.is_finite() {
            Err(Error::Calibration {
                time,
                residual,
                tolerance: CALIBRATION_TOL,
            })
        } else {
            Ok(())
        }
    };
    for (time, df) in bond.pillars() {
        check(time, shifts.model_bond_df(time)?, df)?;
    }
    for (time, df) in derivative.pillars() {
        check(time, shifts.model_derivative_df(time)?, df)?;
    }
    Ok(())
}
