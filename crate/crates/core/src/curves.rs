//! Pillar-based discount curves.
//!
//! Curves interpolate linearly in log discount factor, so instantaneous
//! forwards are piecewise constant between pillars. The valuation time is an
//! implicit pillar with discount factor one. Querying past the last pillar is
//! an error; the only extrapolation in the crate is the repo-curve
//! extrapolation in [`crate::repo_pricing`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    valuation_time: f64,
    // times[0] is the valuation time anchor
    times: Vec<f64>,
    dfs: Vec<f64>,
    log_dfs: Vec<f64>,
}

impl DiscountCurve {
    /// Builds a curve from `(time, df)` pillars.
    ///
    /// A pillar at the valuation time is accepted only with a discount factor
    /// of exactly one, and is merged into the implicit anchor.
    pub fn new(valuation_time: f64, pillars: &[(f64, f64)]) -> Result<Self> {
        if !valuation_time.is_finite() {
            return Err(Error::param("valuation_time", "must be finite"));
        }
        let mut times = vec![valuation_time];
        let mut dfs = vec![1.0];
        for (index, &(time, df)) in pillars.iter().enumerate() {
            if !(df > 0.0 && df.is_finite()) {
                return Err(Error::NonPositiveDf { time, df });
            }
            if index == 0 && time == valuation_time {
                if df != 1.0 {
                    return Err(Error::param(
                        "pillars",
                        format!("df at the valuation time must be 1, got {df}"),
                    ));
                }
                continue;
            }
            let last = *times.last().unwrap();
            if !(time > last && time.is_finite()) {
                return Err(Error::NonIncreasingTimes { index });
            }
            times.push(time);
            dfs.push(df);
        }
        let log_dfs = dfs.iter().map(|d| d.ln()).collect();
        Ok(DiscountCurve {
            valuation_time,
            times,
            dfs,
            log_dfs,
        })
    }

    pub fn valuation_time(&self) -> f64 {
        self.valuation_time
    }

    /// Last pillar time, or the valuation time for an empty curve.
    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// The user pillars, without the valuation-time anchor.
    pub fn pillars(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times[1..]
            .iter()
            .copied()
            .zip(self.dfs[1..].iter().copied())
    }

    pub fn pillar_times(&self) -> &[f64] {
        &self.times[1..]
    }

    pub fn is_empty(&self) -> bool {
        self.times.len() == 1
    }

    pub fn contains(&self, time: f64) -> bool {
        time >= self.valuation_time && time <= self.last_time()
    }

    fn out_of_span(&self, time: f64) -> Error {
        Error::OutOfSpan {
            time,
            start: self.valuation_time,
            end: self.last_time(),
        }
    }

    pub fn discount_factor(&self, time: f64) -> Result<f64> {
        Ok(match self.locate(time)? {
            Location::Pillar(i) => self.dfs[i],
            Location::Between(l) => l.exp(),
        })
    }

    /// Natural log of the discount factor.
    pub fn log_discount_factor(&self, time: f64) -> Result<f64> {
        Ok(match self.locate(time)? {
            Location::Pillar(i) => self.log_dfs[i],
            Location::Between(l) => l,
        })
    }

    fn locate(&self, time: f64) -> Result<Location> {
        if !self.contains(time) {
            return Err(self.out_of_span(time));
        }
        let i = self.times.partition_point(|&x| x <= time) - 1;
        if self.times[i] == time {
            return Ok(Location::Pillar(i));
        }
        let (a, b) = (self.times[i], self.times[i + 1]);
        let w = (time - a) / (b - a);
        Ok(Location::Between(
            self.log_dfs[i] + w * (self.log_dfs[i + 1] - self.log_dfs[i]),
        ))
    }

    fn segment_forward(&self, i: usize) -> f64 {
        -(self.log_dfs[i + 1] - self.log_dfs[i]) / (self.times[i + 1] - self.times[i])
    }

    /// Instantaneous forward rate; at a pillar the right-hand interval wins.
    pub fn instantaneous_forward(&self, time: f64) -> Result<f64> {
        if !(time >= self.valuation_time && time < self.last_time()) {
            return Err(self.out_of_span(time));
        }
        let i = self.times.partition_point(|&x| x <= time) - 1;
        Ok(self.segment_forward(i))
    }

    /// Instantaneous forward rate taking the left-hand interval at a pillar.
    ///
    /// Defined on `(valuation_time, last_time]`; used to read the forward at
    /// the end of an observed curve.
    pub fn instantaneous_forward_left(&self, time: f64) -> Result<f64> {
        if !(time > self.valuation_time && time <= self.last_time()) {
            return Err(self.out_of_span(time));
        }
        let i = self.times.partition_point(|&x| x < time) - 1;
        Ok(self.segment_forward(i))
    }

    /// Reads the `time,df` CSV format. The valuation time is taken as given.
    pub fn read_csv<R: Read>(reader: R, valuation_time: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["time", "df"] {
            return Err(Error::Csv(format!(
                "expected header `time,df`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pillars = Vec::new();
        for row in rdr.deserialize() {
            let row: PillarRow = row?;
            pillars.push((row.time, row.df));
        }
        DiscountCurve::new(valuation_time, &pillars)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for (time, df) in self.pillars() {
            wtr.serialize(PillarRow { time, df })?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

enum Location {
    Pillar(usize),
    // interpolated log df
    Between(f64),
}

#[derive(Debug, Serialize, Deserialize)]
struct PillarRow {
    time: f64,
    df: f64,
}

/// A simple-rate quote `1 + rate·accrual = df(start) / df(end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepoQuote {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
    pub accrual: f64,
}

impl RepoQuote {
    pub fn new(start: f64, end: f64, rate: f64, accrual: f64) -> Result<Self> {
        let q = RepoQuote {
            start,
            end,
            rate,
            accrual,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start < self.end) {
            return Err(Error::InvalidQuote(format!(
                "start {} must precede end {}",
                self.start, self.end
            )));
        }
        if !(self.accrual > 0.0) {
            return Err(Error::InvalidQuote(format!(
                "accrual must be positive, got {}",
                self.accrual
            )));
        }
        if !(1.0 + self.rate * self.accrual > 0.0) {
            return Err(Error::InvalidQuote(format!(
                "rate {} over accrual {} implies a non-positive discount factor",
                self.rate, self.accrual
            )));
        }
        Ok(())
    }

    /// Reads the `start,end,rate,accrual` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RepoQuote>> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["start", "end", "rate", "accrual"] {
            return Err(Error::Csv(format!(
                "expected header `start,end,rate,accrual`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        rdr.deserialize()
            .map(|row| {
                let q: RepoQuote = row?;
                q.validate()?;
                Ok(q)
            })
            .collect()
    }
}

/// Inverts spot-starting repo quotes into bond discount factors,
/// `df(end) = 1 / (1 + rate·accrual)`.
pub fn strip_bond_curve_from_spot_repos(
    valuation_time: f64,
    quotes: &[RepoQuote],
) -> Result<DiscountCurve> {
    let mut pillars = Vec::with_capacity(quotes.len());
    for q in quotes {
        q.validate()?;
        if q.start != valuation_time {
            return Err(Error::InvalidQuote(format!(
                "quote starting at {} is not spot-starting at {}",
                q.start, valuation_time
            )));
        }
        pillars.push((q.end, 1.0 / (1.0 + q.rate * q.accrual)));
    }
    pillars.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = pillars.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateQuote(w[0].0));
    }
    DiscountCurve::new(valuation_time, &pillars)
}
