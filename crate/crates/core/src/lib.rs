//! Election poll nowcasting and forecasting.
//!
//! Published polls are pooled into pseudo-counts, turned into a Dirichlet
//! posterior over party shares and pushed through a German-style electoral
//! system (5% threshold, Sainte-Laguë seats) by Monte-Carlo simulation. The
//! result is a set of probabilities of events such as "this coalition holds
//! a seat majority", plus the distributions behind them and SVG figures.

pub mod electoral;
mod error;
pub mod forecast;
pub mod ingest;
pub mod kde;
pub mod poe;
pub mod pooling;
pub mod posterior;
pub mod viz;

pub use electoral::{
    allocate_seats, apply_threshold, coalition_seats, has_majority, subset_sufficient, Apportionment,
    Coalition, Eligibility, ElectionRules, SeatAllocation,
};
pub use error::{Error, Result};
pub use forecast::{DEFAULT_TAU_DAYS, fan_chart_data, forecast_distribution_series, forecast_poe, inflate, FanChart, FanPoint, ForecastSpec};
pub use ingest::{parse_polls, serialize_polls, validate_poll, IngestError, Party, PartyId, PartyRegistry, Poll, PollIssue, Rgb};
pub use pooling::{pool, PooledSample, PoolingConfig};
pub use posterior::{DEFAULT_DRAWS, DEFAULT_PRIOR_ALPHA, posterior_from, sample_shares, symmetric_prior, DirichletPosterior, DrawMatrix, ShareSource};
pub use poe::{
    distribution_series, estimate_poe, estimate_poe_batch, evaluate_events, poe_series, sample_parliaments, seat_distribution,
    strongest_member, EventKind, EventSpec, Model, PoEBatch, PoEResult, SeatShareDistribution, Series,
};
pub use viz::{PoeAxis, Provenance, SvgDocument, Theme};
