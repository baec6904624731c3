use anyhow::Result;
use repo_convexity::{
    convexity_adjustment, mc_convexity, mc_repo_rate, quadrature_covariance, DiscountCurve, ModelParams,
    RepoCurveView, RepoSchedule, SimConfig, SimResult,
};
use serde::Serialize;

use crate::report::{json, num, short, Table};

pub const QUADRATURE_TOL: f64 = 1e-10;
pub const MC_SIGMAS: f64 = 3.0;

pub struct VerifyInputs {
    pub params: Vec<ModelParams>,
    pub schedules: Vec<RepoSchedule>,
    pub bond_curve: DiscountCurve,
    pub derivative_curve: DiscountCurve,
    pub paths: usize,
    pub seed: u64,
}

pub fn default_params() -> Vec<ModelParams> {
    [
        (0.01, 0.005, 0.03, 0.10, -0.5),
        (0.01, 0.005, 0.03, 0.10, 0.0),
        (0.012, 0.008, 1e-8, 1e-4, 0.6),
        (0.015, 0.01, 0.5, 0.03, 0.8),
        (0.008, 0.006, 0.0, 0.0, -0.3),
    ]
    .into_iter()
    .map(|(s, e, th, k, r)| ModelParams::new(s, e, th, k, r).expect("default grid is valid"))
    .collect()
}

pub fn default_schedules() -> Vec<RepoSchedule> {
    [
        (0.0, 1.0, 1.25, 10.0, 0.25),
        (0.0, 0.0, 0.5, 5.0, 0.5),
        (0.0, 2.0, 2.25, 2.25, 0.25),
        (0.0, 0.5, 1.5, 30.0, 1.0),
    ]
    .into_iter()
    .map(|(t, s, e, m, d)| RepoSchedule::new(t, s, e, m, d).expect("default grid is valid"))
    .collect()
}

pub fn flat_curve(rate: f64) -> DiscountCurve {
    let pillars: Vec<(f64, f64)> = [0.25, 0.5, 1.0, 1.25, 1.5, 2.0, 2.25, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0]
        .into_iter()
        .map(|t| (t, (-rate * t).exp()))
        .collect();
    DiscountCurve::new(0.0, &pillars).expect("flat curve is valid")
}

#[derive(Serialize)]
struct Row {
    kind: &'static str,
    params: ModelParams,
    schedule: RepoSchedule,
    closed_form: f64,
    quadrature: Option<f64>,
    quadrature_rel_error: Option<f64>,
    mc_estimate: f64,
    mc_std_error: f64,
    mc_z_score: f64,
    pass: bool,
}

#[derive(Serialize)]
pub struct VerifyReport {
    command: &'static str,
    seed: u64,
    paths: usize,
    passed: bool,
    rows: Vec<Row>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.passed
    }
}

fn z_score(mc: &SimResult, closed: f64) -> f64 {
    let diff = mc.estimate - closed;
    if diff == 0.0 {
        0.0
    } else {
        diff / mc.std_error
    }
}

/// Closed form against quadrature and Monte Carlo for every params/schedule pair.
///
/// Repo-rate rows are produced for schedules fixing at the curve valuation time.
pub fn run(inputs: &VerifyInputs) -> Result<VerifyReport> {
    let config = SimConfig::new(inputs.paths, inputs.seed)?;
    let vt = inputs.bond_curve.valuation_time();
    let mut rows = Vec::new();
    for p in &inputs.params {
        for s in &inputs.schedules {
            let closed = convexity_adjustment(p, s);
            let quad = quadrature_covariance(p, s);
            let rel = (closed - quad).abs() / closed.abs().max(1e-16);
            let mc = mc_convexity(p, s, &config)?;
            rows.push(Row {
                kind: "convexity",
                params: *p,
                schedule: *s,
                closed_form: closed,
                quadrature: Some(quad),
                quadrature_rel_error: Some(rel),
                mc_estimate: mc.estimate,
                mc_std_error: mc.std_error,
                mc_z_score: z_score(&mc, closed),
                pass: rel < QUADRATURE_TOL && mc.within(closed, MC_SIGMAS),
            });
        }
        let view = RepoCurveView::new(inputs.bond_curve.clone(), *p)?;
        for s in inputs.schedules.iter().filter(|s| s.fix == vt) {
            let closed = view.repo_rate(s)?;
            let mc = mc_repo_rate(&inputs.bond_curve, &inputs.derivative_curve, p, s, &config)?;
            rows.push(Row {
                kind: "repo_rate",
                params: *p,
                schedule: *s,
                closed_form: closed,
                quadrature: None,
                quadrature_rel_error: None,
                mc_estimate: mc.estimate,
                mc_std_error: mc.std_error,
                mc_z_score: z_score(&mc, closed),
                pass: mc.within(closed, MC_SIGMAS),
            });
        }
    }
    Ok(VerifyReport {
        command: "verify",
        seed: inputs.seed,
        paths: inputs.paths,
        passed: rows.iter().all(|r| r.pass),
        rows,
    })
}

pub fn render(report: &VerifyReport, as_json: bool) -> Result<String> {
    if as_json {
        return json(report);
    }
    let mut table = Table::new(&[
        "kind", "theta", "kappa", "rho", "t", "s", "e", "T", "closed_form", "quad_rel_err", "mc_estimate", "mc_se",
        "z", "status",
    ]);
    for r in &report.rows {
        let (p, s) = (&r.params, &r.schedule);
        table.push(vec![
            r.kind.to_string(),
            short(p.theta),
            short(p.kappa),
            short(p.rho),
            short(s.fix),
            short(s.start),
            short(s.end),
            short(s.bond_maturity),
            num(r.closed_form),
            r.quadrature_rel_error.map_or_else(|| "-".to_string(), |e| format!("{e:.2e}")),
            num(r.mc_estimate),
            format!("{:.3e}", r.mc_std_error),
            format!("{:.2}", r.mc_z_score),
            if r.pass { "pass" } else { "FAIL" }.to_string(),
        ]);
    }
    let mut out = format!("seed {}  paths {}\n", report.seed, report.paths);
    out.push_str(&table.render());
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    out.push_str(&format!(
        "{} rows, {} failed: {}\n",
        report.rows.len(),
        failed,
        if report.passed { "PASS" } else { "FAIL" }
    ));
    Ok(out)
}
