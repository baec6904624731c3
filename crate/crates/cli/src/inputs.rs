use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use repo_convexity::{DiscountCurve, ModelParams, RepoQuote, RepoSchedule};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    sigma: f64,
    epsilon: f64,
    theta: f64,
    kappa: f64,
    rho: f64,
}

/// Reads model parameters from a JSON object with keys `sigma`, `epsilon`, `theta`, `kappa`, `rho`.
pub fn load_params(path: &Path) -> Result<ModelParams> {
    let file = File::open(path).with_context(|| format!("opening params file {}", path.display()))?;
    let raw: ParamsFile =
        serde_json::from_reader(file).with_context(|| format!("parsing params file {}", path.display()))?;
    ModelParams::new(raw.sigma, raw.epsilon, raw.theta, raw.kappa, raw.rho)
        .with_context(|| format!("params file {}", path.display()))
}

pub fn load_curve(path: &Path, valuation_time: f64) -> Result<DiscountCurve> {
    let file = File::open(path).with_context(|| format!("opening curve file {}", path.display()))?;
    DiscountCurve::read_csv(file, valuation_time).with_context(|| format!("curve file {}", path.display()))
}

pub fn load_quotes(path: &Path) -> Result<Vec<RepoQuote>> {
    let file = File::open(path).with_context(|| format!("opening quote file {}", path.display()))?;
    RepoQuote::read_csv(file).with_context(|| format!("quote file {}", path.display()))
}

/// Parses `t,s,e,T,delta`.
pub fn parse_schedule(text: &str) -> Result<RepoSchedule> {
    let fields = parse_list(text).with_context(|| format!("schedule `{text}`"))?;
    let [fix, start, end, maturity, accrual] = fields[..] else {
        anyhow::bail!("schedule `{text}` needs five fields t,s,e,T,delta");
    };
    RepoSchedule::new(fix, start, end, maturity, accrual).with_context(|| format!("schedule `{text}`"))
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|field| {
            let field = field.trim();
            let value: f64 = field.parse().with_context(|| format!("`{field}` is not a number"))?;
            anyhow::ensure!(value.is_finite(), "`{field}` is not finite");
            Ok(value)
        })
        .collect()
}
