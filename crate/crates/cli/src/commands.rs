use anyhow::{Context, Result};
use repo_convexity::{
    compute_adjustments, convexity_adjustment, strip_bond_curve_from_spot_repos, Adjustments, DiscountCurve,
    ModelParams, RepoCurveView, RepoQuote, RepoSchedule,
};
use serde::Serialize;

use crate::report::{json, num, short, Table};

#[derive(Serialize)]
struct AdjustRow {
    schedule: RepoSchedule,
    #[serde(flatten)]
    adjustments: Adjustments,
    residual: f64,
}

#[derive(Serialize)]
struct AdjustReport {
    command: &'static str,
    params: ModelParams,
    rows: Vec<AdjustRow>,
}

fn schedule_cells(s: &RepoSchedule) -> Vec<String> {
    [s.fix, s.start, s.end, s.bond_maturity, s.accrual]
        .into_iter()
        .map(short)
        .collect()
}

const SCHEDULE_HEADERS: [&str; 5] = ["t", "s", "e", "T", "delta"];

pub fn adjust(
    params: &ModelParams,
    schedules: &[RepoSchedule],
    liquidity_mean: f64,
    liquidity_std: f64,
    as_json: bool,
) -> Result<String> {
    let rows = schedules
        .iter()
        .map(|s| {
            let adjustments = compute_adjustments(params, s, liquidity_mean, liquidity_std)?;
            Ok(AdjustRow {
                schedule: *s,
                residual: adjustments.decomposition_residual(),
                adjustments,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if as_json {
        return json(&AdjustReport {
            command: "adjust",
            params: *params,
            rows,
        });
    }
    let mut headers = SCHEDULE_HEADERS.to_vec();
    headers.extend(["liquidity", "maturity_start", "maturity_end", "forwardness", "convexity", "residual"]);
    let mut table = Table::new(&headers);
    for r in &rows {
        let a = &r.adjustments;
        let mut cells = schedule_cells(&r.schedule);
        cells.extend(
            [a.liquidity, a.maturity_start, a.maturity_end, a.forwardness, a.total, r.residual]
                .into_iter()
                .map(num),
        );
        table.push(cells);
    }
    Ok(table.render())
}

#[derive(Serialize)]
struct PriceRow {
    schedule: RepoSchedule,
    repo_rate: f64,
    zero_correlation_rate: f64,
    convexity: f64,
}

#[derive(Serialize)]
struct PriceReport {
    command: &'static str,
    params: ModelParams,
    rows: Vec<PriceRow>,
}

pub fn price(params: &ModelParams, bond: DiscountCurve, schedules: &[RepoSchedule], as_json: bool) -> Result<String> {
    let view = RepoCurveView::new(bond.clone(), *params)?;
    let uncorrelated = RepoCurveView::new(bond, params.with_rho(0.0))?;
    let rows = schedules
        .iter()
        .map(|s| {
            Ok(PriceRow {
                schedule: *s,
                repo_rate: view.repo_rate(s).with_context(|| format!("pricing schedule {s:?}"))?,
                zero_correlation_rate: uncorrelated.repo_rate(s)?,
                convexity: convexity_adjustment(params, s),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if as_json {
        return json(&PriceReport {
            command: "price",
            params: *params,
            rows,
        });
    }
    let mut headers = SCHEDULE_HEADERS.to_vec();
    headers.extend(["repo_rate", "zero_correlation_rate", "convexity"]);
    let mut table = Table::new(&headers);
    for r in &rows {
        let mut cells = schedule_cells(&r.schedule);
        cells.extend([r.repo_rate, r.zero_correlation_rate, r.convexity].into_iter().map(num));
        table.push(cells);
    }
    Ok(table.render())
}

#[derive(Serialize)]
struct Pillar {
    time: f64,
    df: f64,
}

#[derive(Serialize)]
struct CurveReport {
    command: &'static str,
    valuation_time: f64,
    pillars: Vec<Pillar>,
}

fn render_curve(command: &'static str, curve: &DiscountCurve, as_json: bool) -> Result<String> {
    if as_json {
        return json(&CurveReport {
            command,
            valuation_time: curve.valuation_time(),
            pillars: curve.pillars().map(|(time, df)| Pillar { time, df }).collect(),
        });
    }
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn strip(valuation_time: f64, quotes: &[RepoQuote], as_json: bool) -> Result<String> {
    let curve = strip_bond_curve_from_spot_repos(valuation_time, quotes)?;
    render_curve("strip", &curve, as_json)
}

pub fn extrapolate(
    params: &ModelParams,
    bond: DiscountCurve,
    observed: DiscountCurve,
    pillars: &[f64],
    horizon_basis: Option<f64>,
    as_json: bool,
) -> Result<String> {
    let mut view = RepoCurveView::new(bond, *params)?.with_observed_repo_curve(observed)?;
    if let Some(b) = horizon_basis {
        view = view.with_horizon_basis(b);
    }
    let curve = view.build_extrapolated_repo_curve(pillars)?;
    render_curve("extrapolate", &curve, as_json)
}
