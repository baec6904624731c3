//! Repo discount factors, repo rates and repo-curve extrapolation.
//!
//! A repo discount factor is the bond discount factor with the maturity
//! adjustment applied, `p̂(e, T) = p̄(e) · exp(-M(t, e, T))`, and the repo rate
//! for a schedule is
//!
//! ```text
//! 1 + f·δ = p̂(s, T) / p̂(e, T) · exp(F(t, s, e, T))
//! ```
//!
//! The valuation time of the bond curve plays the role of `t` for discount
//! factors and forwards; repo rates use the schedule's own fixing time with
//! valuation-time curve ratios.

use crate::convexity::{
    forwardness_adjustment, infinite_forwardness_adjustment, maturity_adjustment, Maturity,
    ModelParams, RepoSchedule,
};
use crate::curves::DiscountCurve;
use crate::error::{Error, Result};
use crate::kernels::{decay_integral, weighted_decay_integral};

#[derive(Debug, Clone)]
pub struct RepoCurveView {
    bond_curve: DiscountCurve,
    params: ModelParams,
    observed_repo_curve: Option<DiscountCurve>,
    horizon_basis: Option<f64>,
}

impl RepoCurveView {
    pub fn new(bond_curve: DiscountCurve, params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(RepoCurveView {
            bond_curve,
            params,
            observed_repo_curve: None,
            horizon_basis: None,
        })
    }

    /// Attaches the market repo curve, observed up to its last pillar `E`.
    pub fn with_observed_repo_curve(mut self, curve: DiscountCurve) -> Result<Self> {
        if curve.valuation_time() != self.bond_curve.valuation_time() {
            return Err(Error::param(
                "repo_curve",
                "valuation time differs from the bond curve",
            ));
        }
        if curve.is_empty() {
            return Err(Error::param("repo_curve", "observed repo curve has no pillars"));
        }
        if curve.last_time() > self.bond_curve.last_time() {
            return Err(Error::param(
                "repo_curve",
                format!(
                    "observed horizon {} extends past the bond curve ({})",
                    curve.last_time(),
                    self.bond_curve.last_time()
                ),
            ));
        }
        self.observed_repo_curve = Some(curve);
        Ok(self)
    }

    /// Overrides the repo-minus-bond forward basis at the observation horizon.
    pub fn with_horizon_basis(mut self, basis: f64) -> Self {
        self.horizon_basis = Some(basis);
        self
    }

    pub fn bond_curve(&self) -> &DiscountCurve {
        &self.bond_curve
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn observed_repo_curve(&self) -> Option<&DiscountCurve> {
        self.observed_repo_curve.as_ref()
    }

    fn valuation_time(&self) -> f64 {
        self.bond_curve.valuation_time()
    }

    /// Infinite-maturity repo discount factor `p̂(e) = p̄(e) · exp(-M(t, e, ∞))`.
    pub fn repo_df_infinite(&self, end: f64) -> Result<f64> {
        self.repo_df_finite(end, Maturity::Infinite)
    }

    /// Repo discount factor `p̂(e, T) = p̄(e) · exp(-M(t, e, T))`.
    pub fn repo_df_finite(&self, end: f64, maturity: Maturity) -> Result<f64> {
        let log_bond = self.bond_curve.log_discount_factor(end)?;
        let m = maturity_adjustment(&self.params, self.valuation_time(), end, maturity)?;
        Ok((log_bond - m).exp())
    }

    /// Finite-maturity repo discount factor as the geometric interpolation
    /// `p̄(e)^w · p̂(e)^{1-w}` with `w = exp(-θ(T-e))`.
    pub fn repo_df_interpolated(&self, end: f64, bond_maturity: f64) -> Result<f64> {
        if !(bond_maturity >= end) {
            return Err(Error::InvalidSchedule(format!(
                "bond maturity {bond_maturity} precedes repo end {end}"
            )));
        }
        // interpolate the logs; p̂(e) alone underflows for slow mean reversion
        let log_bond = self.bond_curve.log_discount_factor(end)?;
        let log_repo = log_bond
            - maturity_adjustment(&self.params, self.valuation_time(), end, Maturity::Infinite)?;
        let weight = (-self.params.theta * (bond_maturity - end)).exp();
        let complement = -(-self.params.theta * (bond_maturity - end)).exp_m1();
        Ok((weight * log_bond + complement * log_repo).exp())
    }

    /// `ln p̂_t^{xT}` as a valuation-time curve ratio.
    fn log_forward_repo_df(&self, fix: f64, x: f64, bond_maturity: f64) -> Result<f64> {
        let log_ratio =
            self.bond_curve.log_discount_factor(x)? - self.bond_curve.log_discount_factor(fix)?;
        let m = maturity_adjustment(&self.params, fix, x, Maturity::Finite(bond_maturity))?;
        Ok(log_ratio - m)
    }

    fn check_schedule(&self, schedule: &RepoSchedule) -> Result<()> {
        schedule.validate()?;
        for time in [schedule.fix, schedule.start, schedule.end] {
            if !self.bond_curve.contains(time) {
                return Err(Error::OutOfSpan {
                    time,
                    start: self.bond_curve.valuation_time(),
                    end: self.bond_curve.last_time(),
                });
            }
        }
        Ok(())
    }

    /// `ln(p̂_t^{sT} / p̂_t^{eT})`
    fn log_repo_df_ratio(&self, schedule: &RepoSchedule) -> Result<f64> {
        let RepoSchedule {
            fix,
            start,
            end,
            bond_maturity,
            ..
        } = *schedule;
        Ok(self.log_forward_repo_df(fix, start, bond_maturity)?
            - self.log_forward_repo_df(fix, end, bond_maturity)?)
    }

    /// Fair repo rate `f = (p̂(s,T)/p̂(e,T) · exp(F) - 1) / δ`.
    pub fn repo_rate(&self, schedule: &RepoSchedule) -> Result<f64> {
        self.check_schedule(schedule)?;
        let RepoSchedule {
            fix,
            start,
            end,
            bond_maturity,
            accrual,
        } = *schedule;
        let forwardness = forwardness_adjustment(&self.params, fix, start, end, bond_maturity)?;
        Ok((self.log_repo_df_ratio(schedule)? + forwardness).exp_m1() / accrual)
    }

    /// Rates at the two forwardness extremes with the same discount-factor
    /// ratio: no forwardness adjustment, and its `s - t → ∞` limit.
    ///
    /// The schedule's own rate interpolates between them geometrically in
    /// `1 + f·δ` with weight `exp(-(θ+κ)(s-t))`.
    pub fn repo_rate_forwardness_limits(&self, schedule: &RepoSchedule) -> Result<(f64, f64)> {
        self.check_schedule(schedule)?;
        let log_ratio = self.log_repo_df_ratio(schedule)?;
        let infinite = infinite_forwardness_adjustment(
            &self.params,
            schedule.start,
            schedule.end,
            schedule.bond_maturity,
        )?;
        Ok((
            log_ratio.exp_m1() / schedule.accrual,
            (log_ratio + infinite).exp_m1() / schedule.accrual,
        ))
    }

    /// Model repo-minus-bond forward basis `ρσε/(θκ) · e^{-θ(e-t)} (1 - e^{-κ(e-t)})`.
    pub fn model_basis(&self, end: f64) -> Result<f64> {
        let t = self.valuation_time();
        if !(end >= t) {
            return Err(Error::OutOfSpan {
                time: end,
                start: t,
                end: self.bond_curve.last_time(),
            });
        }
        let scale = self.params.covariance_scale();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let ModelParams { theta, kappa, .. } = self.params;
        if theta == 0.0 {
            return Err(Error::Unsupported(
                "infinite-maturity repo forwards diverge when theta = 0".into(),
            ));
        }
        let a = end - t;
        Ok(scale * (-theta * a).exp() * decay_integral(kappa, a) / theta)
    }

    fn bond_forward(&self, time: f64) -> Result<f64> {
        if time == self.bond_curve.last_time() {
            self.bond_curve.instantaneous_forward_left(time)
        } else {
            self.bond_curve.instantaneous_forward(time)
        }
    }

    /// Instantaneous forward of the infinite-maturity repo curve.
    pub fn repo_forward_rate(&self, end: f64) -> Result<f64> {
        Ok(self.bond_curve.instantaneous_forward(end)? + self.model_basis(end)?)
    }

    fn observed(&self) -> Result<&DiscountCurve> {
        self.observed_repo_curve
            .as_ref()
            .ok_or_else(|| Error::Unsupported("no observed repo curve attached".into()))
    }

    /// End `E` of the observed repo curve.
    pub fn horizon(&self) -> Option<f64> {
        self.observed_repo_curve.as_ref().map(|c| c.last_time())
    }

    /// Repo-minus-bond forward basis at the horizon `E`.
    pub fn horizon_basis(&self) -> Result<f64> {
        let observed = self.observed()?;
        if let Some(b) = self.horizon_basis {
            return Ok(b);
        }
        let horizon = observed.last_time();
        Ok(observed.instantaneous_forward_left(horizon)?
            - self.bond_curve.instantaneous_forward_left(horizon)?)
    }

    /// Extrapolated basis `b(E) · e^{-θ(e-E)} · (1 - e^{-κ(e-t)}) / (1 - e^{-κ(E-t)})`.
    pub fn extrapolated_basis(&self, end: f64) -> Result<f64> {
        let horizon = self.observed()?.last_time();
        if !(end > horizon) {
            return Err(Error::param(
                "end",
                format!("extrapolation needs e > E = {horizon}, got {end}"),
            ));
        }
        let t = self.valuation_time();
        let ModelParams { theta, kappa, .. } = self.params;
        Ok(self.horizon_basis()?
            * (-theta * (end - horizon)).exp()
            * (decay_integral(kappa, end - t) / decay_integral(kappa, horizon - t)))
    }

    /// Repo forward beyond the observed horizon, using bond forwards as reference.
    pub fn extrapolate_repo_forward(&self, end: f64) -> Result<f64> {
        let basis = self.extrapolated_basis(end)?;
        Ok(self.bond_forward(end)? + basis)
    }

    /// `∫_E^x` of the extrapolated basis.
    fn extrapolated_basis_integral(&self, horizon: f64, x: f64) -> Result<f64> {
        let t = self.valuation_time();
        let ModelParams { theta, kappa, .. } = self.params;
        let span = x - horizon;
        let anchor = decay_integral(kappa, horizon - t);
        Ok(self.horizon_basis()?
            * (decay_integral(theta, span)
                + (-kappa * (horizon - t)).exp() * weighted_decay_integral(theta, kappa, span)
                    / anchor))
    }

    /// Extends the observed repo curve with pillars beyond `E`.
    ///
    /// `df(x) = p̂(E) · p̄(x)/p̄(E) · exp(-∫_E^x basis)`, with the basis integral
    /// in closed form; the curve is continuous at `E` by construction.
    pub fn build_extrapolated_repo_curve(&self, pillar_times: &[f64]) -> Result<DiscountCurve> {
        let observed = self.observed()?;
        if pillar_times.is_empty() {
            return Ok(observed.clone());
        }
        let horizon = observed.last_time();
        let log_repo_horizon = observed.log_discount_factor(horizon)?;
        let log_bond_horizon = self.bond_curve.log_discount_factor(horizon)?;
        let mut pillars: Vec<(f64, f64)> = observed.pillars().collect();
        for &x in pillar_times {
            if !(x > horizon) {
                return Err(Error::param(
                    "pillar_times",
                    format!("extrapolation pillar {x} is not beyond E = {horizon}"),
                ));
            }
            let log_df = log_repo_horizon + self.bond_curve.log_discount_factor(x)?
                - log_bond_horizon
                - self.extrapolated_basis_integral(horizon, x)?;
            pillars.push((x, log_df.exp()));
        }
        DiscountCurve::new(self.valuation_time(), &pillars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn flat_curve(rate: f64, last: usize) -> DiscountCurve {
        let pillars: Vec<_> = (1..=last)
            .map(|i| (i as f64, (-rate * i as f64).exp()))
            .collect();
        DiscountCurve::new(0.0, &pillars).unwrap()
    }

    fn sloped_curve() -> DiscountCurve {
        let pillars: Vec<_> = [0.5f64, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0]
            .iter()
            .map(|&t| (t, (-(0.015 + 0.001 * t) * t).exp()))
            .collect();
        DiscountCurve::new(0.0, &pillars).unwrap()
    }

    fn view(rho: f64) -> RepoCurveView {
        let p = ModelParams::new(0.01, 0.005, 0.03, 0.1, rho).unwrap();
        RepoCurveView::new(sloped_curve(), p).unwrap()
    }

    #[test]
    fn zero_correlation_repo_df_is_bond_df() {
        let v = view(0.0);
        for e in [0.3, 1.0, 4.2, 29.0] {
            let bond = v.bond_curve().discount_factor(e).unwrap();
            assert_eq!(v.repo_df_infinite(e).unwrap(), bond);
            assert_eq!(v.repo_df_finite(e, Maturity::Finite(30.0)).unwrap(), bond);
        }
        assert_eq!(v.repo_df_infinite(0.0).unwrap(), 1.0);
        assert_eq!(view(-0.5).repo_df_infinite(0.0).unwrap(), 1.0);
    }

    #[test]
    fn infinite_df_matches_far_maturity() {
        let v = view(-0.5);
        for e in [0.7, 3.0, 12.5] {
            let inf = v.repo_df_infinite(e).unwrap();
            let far = v.repo_df_finite(e, Maturity::Finite(e + 1e6)).unwrap();
            assert!(rel(far, inf) < 1e-14);
        }
        assert!(v.repo_df_infinite(31.0).is_err());
    }

    #[test]
    fn geometric_interpolation_matches_adjusted_df() {
        let v = view(-0.5);
        for e in [0.5, 2.2, 9.0] {
            for mu in [0.0, 0.3, 5.0, 40.0] {
                let t_mat = e + mu;
                let geo = v.repo_df_interpolated(e, t_mat).unwrap();
                let adj = v.repo_df_finite(e, Maturity::Finite(t_mat)).unwrap();
                assert!(rel(geo, adj) < 1e-12, "e={e} mu={mu}");
            }
            assert_eq!(
                v.repo_df_interpolated(e, e).unwrap(),
                v.bond_curve().discount_factor(e).unwrap()
            );
        }
    }

    #[test]
    fn spot_repo_to_maturity_is_bond_forward() {
        let v = view(-0.5);
        let s = RepoSchedule::new(1.0, 1.0, 3.0, 3.0, 2.0).unwrap();
        let bc = v.bond_curve();
        let want = (bc.discount_factor(1.0).unwrap() / bc.discount_factor(3.0).unwrap() - 1.0) / 2.0;
        assert!(rel(v.repo_rate(&s).unwrap(), want) < 1e-14);
    }

    #[test]
    fn spot_finite_maturity_has_no_forwardness() {
        let v = view(-0.5);
        let s = RepoSchedule::new(0.0, 0.0, 0.5, 10.0, 0.5).unwrap();
        let want = (1.0 / v.repo_df_finite(0.5, Maturity::Finite(10.0)).unwrap() - 1.0) / 0.5;
        assert!(rel(v.repo_rate(&s).unwrap(), want) < 1e-13);
    }

    #[test]
    fn forwardness_geometric_interpolation() {
        let v = view(-0.5);
        let theta_kappa: f64 = 0.13;
        for (t, s, e, big_t) in [(0.0, 1.0, 1.25, 10.0), (0.5, 3.0, 4.0, 4.0), (0.0, 10.0, 10.5, 29.0)] {
            let sched = RepoSchedule::new(t, s, e, big_t, e - s).unwrap();
            let f = v.repo_rate(&sched).unwrap();
            let (spot, inf) = v.repo_rate_forwardness_limits(&sched).unwrap();
            let w = (-theta_kappa * (s - t)).exp();
            let d = sched.accrual;
            let interp = (1.0 + spot * d).powf(w) * (1.0 + inf * d).powf(1.0 - w);
            assert!(rel(1.0 + f * d, interp) < 1e-12);
        }
    }

    #[test]
    fn zero_correlation_rate_is_bond_formula() {
        let v = view(0.0);
        let s = RepoSchedule::new(0.0, 2.0, 2.5, 10.0, 0.5).unwrap();
        let bc = v.bond_curve();
        let want = (bc.discount_factor(2.0).unwrap() / bc.discount_factor(2.5).unwrap() - 1.0) / 0.5;
        assert!(rel(v.repo_rate(&s).unwrap(), want) < 1e-13);
    }

    #[test]
    fn repo_rate_span_errors() {
        let v = view(-0.5);
        assert!(matches!(
            v.repo_rate(&RepoSchedule::new(0.0, 29.5, 30.5, 31.0, 1.0).unwrap()),
            Err(Error::OutOfSpan { .. })
        ));
        // bond maturity may lie beyond the curve
        assert!(v.repo_rate(&RepoSchedule::new(0.0, 29.0, 30.0, 40.0, 1.0).unwrap()).is_ok());
        let bad = RepoSchedule {
            fix: 2.0,
            start: 1.0,
            end: 3.0,
            bond_maturity: 5.0,
            accrual: 2.0,
        };
        assert!(v.repo_rate(&bad).is_err());
    }

    #[test]
    fn repo_forward_matches_finite_difference() {
        let v = view(-0.5);
        let h = 1e-5;
        for e in [0.25, 1.5, 4.0, 12.0, 25.0] {
            let fd = -(v.repo_df_infinite(e + h).unwrap().ln() - v.repo_df_infinite(e - h).unwrap().ln())
                / (2.0 * h);
            assert!((fd - v.repo_forward_rate(e).unwrap()).abs() < 1e-6, "e={e}");
        }
        let zero = view(0.0);
        assert_eq!(
            zero.repo_forward_rate(3.3).unwrap(),
            zero.bond_curve().instantaneous_forward(3.3).unwrap()
        );
        assert_eq!(
            v.repo_forward_rate(0.0).unwrap(),
            v.bond_curve().instantaneous_forward(0.0).unwrap()
        );
    }

    fn model_view(horizon: usize) -> RepoCurveView {
        let base = view(-0.5);
        let pillars: Vec<_> = (1..=horizon)
            .map(|i| (i as f64, base.repo_df_infinite(i as f64).unwrap()))
            .collect();
        let observed = DiscountCurve::new(0.0, &pillars).unwrap();
        let basis = base.model_basis(horizon as f64).unwrap();
        base.with_observed_repo_curve(observed)
            .unwrap()
            .with_horizon_basis(basis)
    }

    #[test]
    fn extrapolation_reproduces_model_basis() {
        let v = model_view(5);
        for k in 1..=250 {
            let e = 5.0 + 0.1 * k as f64;
            let want = v.model_basis(e).unwrap();
            assert!(rel(v.extrapolated_basis(e).unwrap(), want) < 1e-13, "e={e}");
        }
        let near = v.extrapolate_repo_forward(5.0 + 1e-13).unwrap();
        let anchor = v.bond_curve().instantaneous_forward(5.0).unwrap() + v.horizon_basis().unwrap();
        assert!((near - anchor).abs() < 1e-15);
    }

    #[test]
    fn extrapolated_curve_matches_model_repo_dfs() {
        let v = model_view(5);
        let times: Vec<f64> = (6..=30).map(|i| i as f64).collect();
        let curve = v.build_extrapolated_repo_curve(&times).unwrap();
        for &x in &times {
            let want = v.repo_df_infinite(x).unwrap();
            assert!(rel(curve.discount_factor(x).unwrap(), want) < 1e-12, "x={x}");
        }
        // observed part untouched
        for x in 1..=5 {
            let x = x as f64;
            assert_eq!(
                curve.discount_factor(x).unwrap(),
                v.observed_repo_curve().unwrap().discount_factor(x).unwrap()
            );
        }
    }

    #[test]
    fn zero_basis_extrapolation_follows_bond_curve() {
        let base = view(-0.5);
        let bond = base.bond_curve().clone();
        let observed = DiscountCurve::new(
            0.0,
            &[(1.0, 0.985), (2.0, 0.97), (3.0, 0.955)],
        )
        .unwrap();
        let v = base
            .with_observed_repo_curve(observed)
            .unwrap()
            .with_horizon_basis(0.0);
        let scale = 0.955 / bond.discount_factor(3.0).unwrap();
        let times = [4.0, 6.5, 10.0, 30.0];
        let curve = v.build_extrapolated_repo_curve(&times).unwrap();
        for x in times {
            let want = bond.discount_factor(x).unwrap() * scale;
            assert!(rel(curve.discount_factor(x).unwrap(), want) < 1e-14);
            assert_eq!(
                v.extrapolate_repo_forward(x).unwrap(),
                if x < 30.0 {
                    bond.instantaneous_forward(x).unwrap()
                } else {
                    bond.instantaneous_forward_left(x).unwrap()
                }
            );
        }
    }

    #[test]
    fn extrapolation_anchor_from_observed_forwards() {
        let bond = flat_curve(0.02, 30);
        let p = ModelParams::new(0.01, 0.005, 0.03, 0.1, -0.5).unwrap();
        let observed = DiscountCurve::new(0.0, &[(1.0, (-0.022f64).exp()), (2.0, (-0.0445f64).exp())])
            .unwrap();
        let v = RepoCurveView::new(bond, p)
            .unwrap()
            .with_observed_repo_curve(observed)
            .unwrap();
        assert!((v.horizon_basis().unwrap() - 0.0025).abs() < 1e-15);
        let near = v.extrapolate_repo_forward(2.0 + 1e-12).unwrap();
        assert!((near - 0.0225).abs() < 1e-13);
        let curve = v.build_extrapolated_repo_curve(&[]).unwrap();
        assert_eq!(&curve, v.observed_repo_curve().unwrap());
        // splice continuity at E
        let spliced = v.build_extrapolated_repo_curve(&[2.0 + 1e-9, 5.0]).unwrap();
        let at_e = spliced.discount_factor(2.0).unwrap();
        let just_after = spliced.discount_factor(2.0 + 1e-9).unwrap();
        // slope at E⁺ is the anchored forward 0.0225
        let predicted = at_e * (-0.0225f64 * 1e-9).exp();
        assert!((just_after - predicted).abs() < 1e-14);
    }

    #[test]
    fn extrapolation_errors() {
        let v = view(-0.5);
        assert!(v.extrapolate_repo_forward(10.0).is_err());
        assert!(v.build_extrapolated_repo_curve(&[10.0]).is_err());
        let v = model_view(5);
        assert!(v.extrapolate_repo_forward(5.0).is_err());
        assert!(v.extrapolate_repo_forward(4.0).is_err());
        assert!(v.build_extrapolated_repo_curve(&[4.5]).is_err());
        assert!(v.build_extrapolated_repo_curve(&[31.0]).is_err());
        assert!(v.build_extrapolated_repo_curve(&[8.0, 7.0]).is_err());
        let long_repo = DiscountCurve::new(0.0, &[(40.0, 0.5)]).unwrap();
        assert!(view(-0.5).with_observed_repo_curve(long_repo).is_err());
    }

    #[test]
    fn extrapolation_kappa_zero_limit() {
        let bond = flat_curve(0.02, 30);
        let p = ModelParams::new(0.01, 0.005, 0.03, 0.0, -0.5).unwrap();
        let observed = DiscountCurve::new(0.0, &[(5.0, (-0.105f64).exp())]).unwrap();
        let v = RepoCurveView::new(bond, p)
            .unwrap()
            .with_observed_repo_curve(observed)
            .unwrap()
            .with_horizon_basis(0.001);
        let got = v.extrapolated_basis(10.0).unwrap();
        let want = 0.001 * (-0.03f64 * 5.0).exp() * 10.0 / 5.0;
        assert!(rel(got, want) < 1e-14);
    }

    #[test]
    fn repo_rate_decreases_in_rho_when_forward_starting() {
        let bond = sloped_curve();
        let sched = RepoSchedule::new(0.0, 2.0, 2.5, 10.0, 0.5).unwrap();
        let mut last = f64::INFINITY;
        for k in -10..=10 {
            let rho = k as f64 / 10.0;
            let p = ModelParams::new(0.01, 0.005, 0.03, 0.1, rho).unwrap();
            let v = RepoCurveView::new(bond.clone(), p).unwrap();
            let f = v.repo_rate(&sched).unwrap();
            assert!(f < last);
            last = f;
        }
    }
}
