//! Poll-of-polls aggregation.
//!
//! The newest poll of each pollster inside the window contributes integer
//! pseudo-counts (its sample size split by largest remainder). The summed
//! counts can be deflated by a dependence factor, which stands in for the
//! unknown correlation between pollsters; it is a user knob, not an
//! estimated quantity.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Poll;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolingConfig {
    pub window_days: u32,
    pub dependence_factor: f64,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        PoolingConfig { window_days: 14, dependence_factor: 1.0 }
    }
}

impl PoolingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days == 0 {
            return Err(Error::Parameter("window_days must be positive".into()));
        }
        if !(self.dependence_factor > 0.0 && self.dependence_factor <= 1.0) {
            return Err(Error::Parameter(format!(
                "dependence_factor must lie in (0, 1], got {}",
                self.dependence_factor
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PollRef {
    pub pollster: String,
    pub publish_date: NaiveDate,
}

/// Aggregated pseudo-counts, indexed in registry order. `counts` always sums
/// to `n_eff`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PooledSample {
    pub as_of: NaiveDate,
    pub window_days: u32,
    pub counts: Vec<u64>,
    pub n_eff: u64,
    pub polls_used: Vec<PollRef>,
}

/// Integers summing to `target`, proportional to `quotas`.
///
/// Each entry gets the floor of its scaled quota; the remaining units go to
/// the largest fractional parts, ties to the lower index.
pub fn largest_remainder(quotas: &[f64], target: u64) -> Vec<u64> {
    let total: f64 = quotas.iter().sum();
    if quotas.is_empty() || total <= 0.0 {
        let mut out = vec![0; quotas.len()];
        if let Some(first) = out.first_mut() {
            *first = target;
        }
        return out;
    }
    let scaled: Vec<f64> = quotas.iter().map(|q| q / total * target as f64).collect();
    let mut out: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // stable sort keeps the lower index first among equal remainders
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra)
    });
    let assigned: u64 = out.iter().sum();
    if assigned <= target {
        for &i in order.iter().cycle().take((target - assigned) as usize) {
            out[i] += 1;
        }
    } else {
        // only reachable through float round-off in the floors
        let mut excess = assigned - target;
        for &i in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if out[i] > 0 {
                out[i] -= 1;
                excess -= 1;
            }
        }
    }
    out
}

/// Integer counts of one poll, summing to its sample size.
pub fn poll_counts(poll: &Poll) -> Vec<u64> {
    largest_remainder(&poll.shares, u64::from(poll.sample_size))
}

/// Pools the newest poll per pollster with `as_of - window < date <= as_of`.
pub fn pool(polls: &[Poll], as_of: NaiveDate, config: &PoolingConfig) -> Result<PooledSample> {
    config.validate()?;
    let start = as_of - Duration::days(i64::from(config.window_days));
    let mut newest: BTreeMap<&str, &Poll> = BTreeMap::new();
    for poll in polls.iter().filter(|p| p.publish_date > start && p.publish_date <= as_of) {
        let slot = newest.entry(poll.pollster.as_str()).or_insert(poll);
        if poll.publish_date > slot.publish_date || (poll.publish_date == slot.publish_date && newer_tiebreak(poll, slot)) {
            *slot = poll;
        }
    }
    if newest.is_empty() {
        return Err(Error::NoPolls { as_of, window_days: config.window_days });
    }

    let width = newest.values().next().map_or(0, |p| p.shares.len());
    let mut summed = vec![0u64; width];
    let mut total_n = 0u64;
    let mut used: Vec<&Poll> = newest.into_values().collect();
    used.sort_by(|a, b| a.publish_date.cmp(&b.publish_date).then_with(|| a.pollster.cmp(&b.pollster)));
    for poll in &used {
        if poll.shares.len() != width {
            return Err(Error::Parameter("polls disagree on the number of parties".into()));
        }
        for (acc, c) in summed.iter_mut().zip(poll_counts(poll)) {
            *acc += c;
        }
        total_n += u64::from(poll.sample_size);
    }

    let (counts, n_eff) = if config.dependence_factor == 1.0 {
        (summed, total_n)
    } else {
        let target = ((config.dependence_factor * total_n as f64).round() as u64).max(1);
        let quotas: Vec<f64> = summed.iter().map(|&c| c as f64).collect();
        (largest_remainder(&quotas, target), target)
    };

    Ok(PooledSample {
        as_of,
        window_days: config.window_days,
        counts,
        n_eff,
        polls_used: used
            .iter()
            .map(|p| PollRef { pollster: p.pollster.clone(), publish_date: p.publish_date })
            .collect(),
    })
}

/// Same-pollster, same-day duplicates: keep a deterministic one regardless of
/// input order (larger sample, then lexicographically smaller shares).
fn newer_tiebreak(candidate: &Poll, current: &Poll) -> bool {
    match candidate.sample_size.cmp(&current.sample_size) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => candidate
            .shares
            .iter()
            .zip(&current.shares)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .is_some_and(|o| o.is_lt()),
    }
}
