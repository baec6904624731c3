//! Closed-form convexity adjustments under correlated Hull-White dynamics
//! for the bond discount rate and the discount basis.
//!
//! With `A(a, h) = (1 - e^{-a h}) / a` and the divided difference
//! `D(θ, κ, h) = (A(θ, h) - A(θ+κ, h)) / κ`, the adjustments are
//!
//! ```text
//! M(t, e, T)    = ρσε · A(θ, T-e) · D(θ, κ, e-t)
//! F(t, s, e, T) = -ρσε · A(θ, T-s) · A(κ, e-s) · A(θ+κ, s-t)
//! C(t, s, e, T) = ρσε · B[s-t, e-s, T-e; θ, κ] = M(t,e,T) - M(t,s,T) + F(t,s,e,T)
//! ```
//!
//! `A` and `D` come from [`crate::kernels`] and stay finite as θ, κ or θ+κ go
//! to zero, so every function here is valid on the closed parameter domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{decay_integral, weighted_decay_integral};

/// Parameters of the two-factor Hull-White basis model.
///
/// Rates and volatilities are absolute per-annum decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Normal volatility of the bond discount rate.
    pub sigma: f64,
    /// Normal volatility of the discount basis.
    pub epsilon: f64,
    /// Mean reversion of the bond discount rate.
    pub theta: f64,
    /// Mean reversion of the discount basis.
    pub kappa: f64,
    /// Correlation between the two driving Brownian motions.
    pub rho: f64,
}

impl ModelParams {
    pub fn new(sigma: f64, epsilon: f64, theta: f64, kappa: f64, rho: f64) -> Result<Self> {
        let p = ModelParams {
            sigma,
            epsilon,
            theta,
            kappa,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
            ("theta", self.theta),
            ("kappa", self.kappa),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::param(
                "rho",
                format!("must lie in [-1, 1], got {}", self.rho),
            ));
        }
        Ok(())
    }

    /// `ρσε`, the common prefactor of every convexity term.
    pub fn covariance_scale(&self) -> f64 {
        self.rho * self.sigma * self.epsilon
    }

    pub fn with_rho(self, rho: f64) -> Self {
        ModelParams { rho, ..self }
    }
}

/// Repo dates `t ≤ s < e ≤ T` with accrual fraction `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepoSchedule {
    /// Rate fixing time `t`.
    pub fix: f64,
    /// Start of the repo period `s`.
    pub start: f64,
    /// End of the repo period `e`.
    pub end: f64,
    /// Maturity `T` of the collateral bond.
    pub bond_maturity: f64,
    /// Accrual fraction for the repo period.
    pub accrual: f64,
}

impl RepoSchedule {
    pub fn new(fix: f64, start: f64, end: f64, bond_maturity: f64, accrual: f64) -> Result<Self> {
        let s = RepoSchedule {
            fix,
            start,
            end,
            bond_maturity,
            accrual,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.fix, self.start, self.end, self.bond_maturity, self.accrual]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidSchedule("dates must be finite".into()));
        }
        if !(self.fix <= self.start && self.start < self.end && self.end <= self.bond_maturity) {
            return Err(Error::InvalidSchedule(format!(
                "need t <= s < e <= T, got t={} s={} e={} T={}",
                self.fix, self.start, self.end, self.bond_maturity
            )));
        }
        if !(self.accrual > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "accrual must be positive, got {}",
                self.accrual
            )));
        }
        Ok(())
    }

    /// `s - t`
    pub fn forwardness(&self) -> f64 {
        self.start - self.fix
    }

    /// `e - s`
    pub fn period(&self) -> f64 {
        self.end - self.start
    }

    /// `T - e`
    pub fn residual_maturity(&self) -> f64 {
        self.bond_maturity - self.end
    }
}

/// Bond maturity for the maturity adjustment; `Infinite` selects the analytic
/// `T → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Maturity {
    Finite(f64),
    Infinite,
}

/// The adjustments for one repo, in log units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustments {
    pub liquidity: f64,
    /// `M(t, e, T)`
    pub maturity_end: f64,
    /// `M(t, s, T)`
    pub maturity_start: f64,
    pub forwardness: f64,
    pub total: f64,
}

impl Adjustments {
    /// `|C - ((M_e - M_s) + F)|`
    pub fn decomposition_residual(&self) -> f64 {
        (self.total - ((self.maturity_end - self.maturity_start) + self.forwardness)).abs()
    }
}

fn check_nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// `B[τ, δ, μ; θ, κ]`, the parameter-free part of the convexity adjustment.
pub fn b_function(tau: f64, delta: f64, mu: f64, theta: f64, kappa: f64) -> Result<f64> {
    check_nonnegative("tau", tau)?;
    check_nonnegative("mu", mu)?;
    check_nonnegative("theta", theta)?;
    check_nonnegative("kappa", kappa)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    Ok(b_unchecked(tau, delta, mu, theta, kappa))
}

fn b_unchecked(tau: f64, delta: f64, mu: f64, theta: f64, kappa: f64) -> f64 {
    if tau == 0.0 && mu == 0.0 {
        // spot-starting repo to maturity
        return 0.0;
    }
    // A(θ,μ) D(θ,κ,τ+δ) - A(θ,δ+μ) [D(θ,κ,τ) + A(κ,δ) A(θ+κ,τ)], regrouped with
    // A(θ,δ+μ) = A(θ,δ) + e^{-θδ} A(θ,μ) so that both terms are O(δ) instead of O(1)
    let period_term = decay_integral(theta, mu) * weighted_decay_integral(theta, kappa, delta);
    let forward_term = decay_integral(theta, delta)
        * (weighted_decay_integral(theta, kappa, tau)
            + decay_integral(kappa, delta) * decay_integral(theta + kappa, tau));
    period_term - forward_term
}

/// Total convexity adjustment `C = ρσε · B[s-t, e-s, T-e; θ, κ]`.
pub fn convexity_adjustment(params: &ModelParams, schedule: &RepoSchedule) -> f64 {
    params.covariance_scale()
        * b_unchecked(
            schedule.forwardness(),
            schedule.period(),
            schedule.residual_maturity(),
            params.theta,
            params.kappa,
        )
}

/// Maturity adjustment `M(t, e, T)`, zero when `e = T`.
///
/// The infinite-maturity limit `ρσε · D(θ, κ, e-t) / θ` needs `θ > 0`
/// unless `ρσε = 0`.
pub fn maturity_adjustment(params: &ModelParams, fix: f64, end: f64, maturity: Maturity) -> Result<f64> {
    if !(fix <= end) {
        return Err(Error::InvalidSchedule(format!(
            "maturity adjustment needs t <= e, got t={fix} e={end}"
        )));
    }
    let scale = params.covariance_scale();
    match maturity {
        Maturity::Finite(bond_maturity) => {
            if !(end <= bond_maturity) {
                return Err(Error::InvalidSchedule(format!(
                    "bond maturity {bond_maturity} precedes repo end {end}"
                )));
            }
            if end == bond_maturity || scale == 0.0 {
                return Ok(0.0);
            }
            Ok(scale
                * decay_integral(params.theta, bond_maturity - end)
                * weighted_decay_integral(params.theta, params.kappa, end - fix))
        }
        Maturity::Infinite => {
            if scale == 0.0 {
                return Ok(0.0);
            }
            if params.theta == 0.0 {
                return Err(Error::Unsupported(
                    "infinite-maturity adjustment diverges when theta = 0".into(),
                ));
            }
            Ok(scale * weighted_decay_integral(params.theta, params.kappa, end - fix) / params.theta)
        }
    }
}

/// Forwardness adjustment `F(t, s, e, T)`, zero when `s = t`.
pub fn forwardness_adjustment(
    params: &ModelParams,
    fix: f64,
    start: f64,
    end: f64,
    bond_maturity: f64,
) -> Result<f64> {
    if !(fix <= start && start < end && end <= bond_maturity) {
        return Err(Error::InvalidSchedule(format!(
            "need t <= s < e <= T, got t={fix} s={start} e={end} T={bond_maturity}"
        )));
    }
    let scale = params.covariance_scale();
    if fix == start || scale == 0.0 {
        return Ok(0.0);
    }
    Ok(-scale
        * decay_integral(params.theta, bond_maturity - start)
        * decay_integral(params.kappa, end - start)
        * decay_integral(params.theta + params.kappa, start - fix))
}

/// The `s - t → ∞` limit of the forwardness adjustment,
/// `-ρσε · A(θ, T-s) · A(κ, e-s) / (θ+κ)`. Needs `θ + κ > 0` unless `ρσε = 0`.
pub fn infinite_forwardness_adjustment(
    params: &ModelParams,
    start: f64,
    end: f64,
    bond_maturity: f64,
) -> Result<f64> {
    if !(start < end && end <= bond_maturity) {
        return Err(Error::InvalidSchedule(format!(
            "need s < e <= T, got s={start} e={end} T={bond_maturity}"
        )));
    }
    let scale = params.covariance_scale();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let decay = params.theta + params.kappa;
    if decay == 0.0 {
        return Err(Error::Unsupported(
            "infinite forwardness diverges when theta + kappa = 0".into(),
        ));
    }
    Ok(-scale
        * decay_integral(params.theta, bond_maturity - start)
        * decay_integral(params.kappa, end - start)
        / decay)
}

/// Liquidity adjustment from the moments of the integrated liquidity basis,
/// `L = μ_S + σ_S² / 2`.
pub fn liquidity_adjustment(mean: f64, std_dev: f64) -> Result<f64> {
    if !(std_dev >= 0.0) || !mean.is_finite() || !std_dev.is_finite() {
        return Err(Error::param(
            "liquidity_std",
            format!("need finite mean and std >= 0, got mean={mean} std={std_dev}"),
        ));
    }
    Ok(mean + 0.5 * std_dev * std_dev)
}

pub fn compute_adjustments(
    params: &ModelParams,
    schedule: &RepoSchedule,
    liquidity_mean: f64,
    liquidity_std: f64,
) -> Result<Adjustments> {
    params.validate()?;
    schedule.validate()?;
    let RepoSchedule {
        fix,
        start,
        end,
        bond_maturity,
        ..
    } = *schedule;
    let adj = Adjustments {
        liquidity: liquidity_adjustment(liquidity_mean, liquidity_std)?,
        maturity_end: maturity_adjustment(params, fix, end, Maturity::Finite(bond_maturity))?,
        maturity_start: maturity_adjustment(params, fix, start, Maturity::Finite(bond_maturity))?,
        forwardness: forwardness_adjustment(params, fix, start, end, bond_maturity)?,
        total: convexity_adjustment(params, schedule),
    };
    debug_assert!(
        adj.decomposition_residual() <= 1e-14 * adj.total.abs().max(1.0),
        "decomposition residual {:e}",
        adj.decomposition_residual()
    );
    Ok(adj)
}
