//! Survey-based forecasts: a nowcast posterior with its information content
//! shrunk according to the distance to election day.
//!
//! With horizon `h` days and scale `tau`, the pseudo-counts above the prior
//! are multiplied by `s(h) = 1 / (1 + h / tau)`. The posterior mean barely
//! moves while every marginal variance grows with `h`. This widens bands
//! for the passage of time only. Shocks such as late scandals or other
//! unforeseeable events are not modelled and cannot be, so a forecast band
//! is a lower bound on the real uncertainty.

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PartyId, Poll};
use crate::kde::nearest_rank;
use crate::poe::{estimate_poe, seat_distribution, EventSpec, Model, PoEResult, SeatShareDistribution, Series};
use crate::posterior::{sample_shares, DirichletPosterior};

pub const DEFAULT_TAU_DAYS: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastSpec {
    pub election_date: NaiveDate,
    pub as_of: NaiveDate,
    pub tau: f64,
}

impl ForecastSpec {
    pub fn new(as_of: NaiveDate, election_date: NaiveDate, tau: f64) -> Result<Self> {
        let spec = ForecastSpec { election_date, as_of, tau };
        spec.horizon_days()?;
        Ok(spec)
    }

    pub fn horizon_days(&self) -> Result<i64> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau must be positive, got {}", self.tau)));
        }
        let h = (self.election_date - self.as_of).num_days();
        if h < 0 {
            return Err(Error::PastElection { as_of: self.as_of, election_date: self.election_date });
        }
        Ok(h)
    }

    pub fn shrink(&self) -> Result<f64> {
        Ok(shrink_factor(self.horizon_days()? as f64, self.tau))
    }
}

/// `1 / (1 + h / tau)`: 1 at h = 0, 1/2 at h = tau, tending to 0.
pub fn shrink_factor(horizon_days: f64, tau: f64) -> f64 {
    1.0 / (1.0 + horizon_days / tau)
}

/// `alpha'_k = prior_k + s(h) (alpha_k - prior_k)`; returns the input
/// unchanged at zero horizon.
pub fn inflate(posterior: &DirichletPosterior, spec: &ForecastSpec, prior_alpha: &[f64]) -> Result<DirichletPosterior> {
    let h = spec.horizon_days()?;
    if prior_alpha.len() != posterior.alpha().len() {
        return Err(Error::BadPrior("prior does not match the registry".into()));
    }
    if let Some((party, _)) = posterior
        .registry()
        .parties()
        .iter()
        .zip(posterior.alpha().iter().zip(prior_alpha))
        .find(|(_, (a, p))| a < p)
    {
        return Err(Error::BadPrior(format!("posterior for {} lies below the prior", party.id)));
    }
    if h == 0 {
        return Ok(posterior.clone());
    }
    let s = shrink_factor(h as f64, spec.tau);
    let alpha = posterior.alpha().iter().zip(prior_alpha).map(|(a, p)| p + s * (a - p)).collect();
    posterior.with_alpha(alpha)
}

/// Nowcast at `spec.as_of`, inflated to election day, then the PoE.
pub fn forecast_poe(
    model: &Model,
    polls: &[Poll],
    event: &EventSpec,
    spec: &ForecastSpec,
    m: usize,
    seed: u64,
) -> Result<PoEResult> {
    let nowcast = model.nowcast(polls, spec.as_of)?;
    let forecast = inflate(&nowcast, spec, &model.prior_alpha)?;
    estimate_poe(&forecast, &model.rules, event, m, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FanPoint {
    pub date: NaiveDate,
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl FanPoint {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Per-party bands from the first poll to election day. Dates up to `as_of`
/// carry that day's nowcast; later dates carry the `as_of` nowcast inflated
/// to that date.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanChart {
    pub parties: Vec<PartyId>,
    /// `bands[party][date]`
    pub bands: Vec<Vec<FanPoint>>,
    pub as_of: NaiveDate,
    pub election_date: NaiveDate,
    pub skipped: Vec<NaiveDate>,
}

pub fn fan_chart_data(
    model: &Model,
    polls: &[Poll],
    spec: &ForecastSpec,
    grid_days: u32,
    m: usize,
    seed: u64,
) -> Result<FanChart> {
    spec.horizon_days()?;
    if grid_days == 0 {
        return Err(Error::Parameter("grid_days must be positive".into()));
    }
    if m == 0 {
        return Err(Error::EmptyRequest);
    }
    let first = polls
        .iter()
        .map(|p| p.publish_date)
        .min()
        .ok_or(Error::NoPolls { as_of: spec.as_of, window_days: model.pooling.window_days })?;
    let now = model.nowcast(polls, spec.as_of)?;

    // history steps forward from the first poll; the future steps from as_of
    let step = Duration::days(i64::from(grid_days));
    let mut dates: Vec<NaiveDate> =
        std::iter::successors(Some(first), |d| Some(*d + step)).take_while(|d| *d < spec.as_of).collect();
    dates.extend(std::iter::successors(Some(spec.as_of), |d| Some(*d + step)).take_while(|d| *d < spec.election_date));
    dates.push(spec.election_date);
    dates.dedup();

    let k = model.registry.len();
    let mut bands = vec![Vec::with_capacity(dates.len()); k];
    let mut skipped = Vec::new();
    for date in dates {
        let posterior = if date <= spec.as_of {
            match model.nowcast(polls, date) {
                Ok(p) => p,
                Err(Error::NoPolls { .. }) => {
                    skipped.push(date);
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            inflate(&now, &ForecastSpec { election_date: date, ..*spec }, &model.prior_alpha)?
        };
        let draws = sample_shares(&posterior, m, seed)?;
        let mean = posterior.mean();
        let points: Vec<FanPoint> = (0..k)
            .into_par_iter()
            .map(|party| {
                let mut column: Vec<f64> = draws.iter_rows().map(|r| r[party]).collect();
                column.sort_by(f64::total_cmp);
                FanPoint {
                    date,
                    mean: mean[party],
                    low: nearest_rank(&column, 0.025),
                    high: nearest_rank(&column, 0.975),
                }
            })
            .collect();
        for (band, point) in bands.iter_mut().zip(points) {
            band.push(point);
        }
    }

    Ok(FanChart {
        parties: model.registry.parties().iter().map(|p| p.id.clone()).collect(),
        bands,
        as_of: spec.as_of,
        election_date: spec.election_date,
        skipped,
    })
}

/// For every date, the nowcast of that date inflated to election day and
/// turned into a coalition seat-share distribution.
#[allow(clippy::too_many_arguments)]
pub fn forecast_distribution_series<S: AsRef<str>>(
    model: &Model,
    polls: &[Poll],
    dates: &[NaiveDate],
    coalition: &[S],
    election_date: NaiveDate,
    tau: f64,
    m: usize,
    seed: u64,
) -> Result<Series<SeatShareDistribution>> {
    if dates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter("series dates must be ascending".into()));
    }
    let mut out = Series { points: Vec::new(), skipped: Vec::new() };
    for &date in dates {
        let nowcast = match model.nowcast(polls, date) {
            Ok(p) => p,
            Err(Error::NoPolls { .. }) => {
                out.skipped.push(date);
                continue;
            }
            Err(e) => return Err(e),
        };
        let spec = ForecastSpec::new(date, election_date, tau)?;
        let forecast = inflate(&nowcast, &spec, &model.prior_alpha)?;
        out.points.push((date, seat_distribution(&forecast, &model.rules, coalition, m, seed)?));
    }
    if out.points.is_empty() {
        return Err(Error::NoData);
    }
    Ok(out)
}
