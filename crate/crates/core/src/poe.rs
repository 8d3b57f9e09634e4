//! Monte-Carlo probabilities of events.
//!
//! Each draw runs share vector -> threshold -> seat allocation -> event
//! predicates. All events of one call are evaluated on the same draws, so
//! identities such as `P(E) + P(not E) = 1` and coalition monotonicity hold
//! exactly, not just in expectation.
//!
//! The "subset suffices" probability counts draws in which a proper subset
//! of the coalition already has a majority. Because seats are non-negative
//! the full coalition then has one too, so it makes no difference whether
//! this is read as "subset majority" or "subset and coalition majority".

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electoral::{apportion_into, has_majority, proper_subset_majority, seats_of, threshold_into, ElectionRules, SeatAllocation};
use crate::error::{Error, Result};
use crate::ingest::{PartyId, PartyRegistry, Poll};
use crate::kde::{nearest_rank, reflected_kde, Density};
use crate::pooling::{pool, PoolingConfig};
use crate::posterior::{posterior_from, DirichletPosterior, DirichletSampler, ShareSource};

/// Fewer draws than this give standard errors too large to report.
pub const MIN_DRAWS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    CoalitionMajority,
    PartyAboveThreshold,
    StrongestParty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSpec {
    pub kind: EventKind,
    pub parties: Vec<PartyId>,
    #[serde(default)]
    pub negated: bool,
}

impl EventSpec {
    pub fn coalition_majority<S: AsRef<str>>(parties: &[S]) -> Self {
        Self::new(EventKind::CoalitionMajority, parties)
    }

    pub fn above_threshold(party: &str) -> Self {
        Self::new(EventKind::PartyAboveThreshold, &[party])
    }

    pub fn strongest(party: &str) -> Self {
        Self::new(EventKind::StrongestParty, &[party])
    }

    fn new<S: AsRef<str>>(kind: EventKind, parties: &[S]) -> Self {
        EventSpec { kind, parties: parties.iter().map(|p| PartyId::new(p.as_ref())).collect(), negated: false }
    }

    pub fn complement(&self) -> Self {
        EventSpec { negated: !self.negated, ..self.clone() }
    }

    fn resolve(&self, registry: &PartyRegistry) -> Result<ResolvedEvent> {
        if self.parties.is_empty() {
            return Err(Error::BadEvent("event names no party".into()));
        }
        if self.kind != EventKind::CoalitionMajority && self.parties.len() != 1 {
            return Err(Error::BadEvent(format!("{:?} takes exactly one party", self.kind)));
        }
        let mut members = Vec::with_capacity(self.parties.len());
        for id in &self.parties {
            let i = registry.require(id.as_str())?;
            if members.contains(&i) {
                return Err(Error::BadEvent(format!("party `{id}` listed twice")));
            }
            members.push(i);
        }
        Ok(ResolvedEvent { kind: self.kind, members, negated: self.negated })
    }
}

struct ResolvedEvent {
    kind: EventKind,
    members: Vec<usize>,
    negated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoEResult {
    pub probability: f64,
    /// `sqrt(p (1 - p) / m)`
    pub mc_stderr: f64,
    /// Only for (non-negated) coalition majorities.
    pub subset_probability: Option<f64>,
    pub hits: u64,
    pub m: usize,
    pub seed: u64,
}

impl PoEResult {
    fn from_counts(hits: u64, subset_hits: Option<u64>, m: usize, seed: u64) -> Self {
        let p = hits as f64 / m as f64;
        PoEResult {
            probability: p,
            mc_stderr: (p * (1.0 - p) / m as f64).sqrt(),
            subset_probability: subset_hits.map(|s| s as f64 / m as f64),
            hits,
            m,
            seed,
        }
    }
}

/// Results for several events evaluated on one shared set of draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoEBatch {
    pub results: Vec<PoEResult>,
    /// Draws in which no party passed the threshold.
    pub hung_draws: u64,
    pub m: usize,
    pub seed: u64,
}

impl PoEBatch {
    pub fn hung_fraction(&self) -> f64 {
        self.hung_draws as f64 / self.m as f64
    }
}

/// Per-worker buffers for one draw.
struct Scratch {
    shares: Vec<f64>,
    weights: Vec<f64>,
    eligible: Vec<bool>,
    seats: Vec<u32>,
}

impl Scratch {
    fn new(width: usize) -> Self {
        Scratch { shares: vec![0.0; width], weights: vec![0.0; width], eligible: vec![false; width], seats: vec![0; width] }
    }

    /// Fills the buffers for draw `index`; returns true if the parliament is hung.
    #[inline]
    fn simulate<S: ShareSource>(&mut self, source: &S, index: u64, other: usize, rules: &ElectionRules) -> bool {
        source.fill(index, &mut self.shares);
        threshold_into(&self.shares, other, rules.threshold, &mut self.weights, &mut self.eligible);
        !apportion_into(&self.weights, &self.eligible, rules.house_size, rules.method, &mut self.seats)
    }
}

fn check_draws(m: usize) -> Result<()> {
    if m < MIN_DRAWS {
        return Err(Error::InsufficientDraws { requested: m, minimum: MIN_DRAWS });
    }
    Ok(())
}

/// Probability of one event from `m` posterior draws.
pub fn estimate_poe(
    posterior: &DirichletPosterior,
    rules: &ElectionRules,
    event: &EventSpec,
    m: usize,
    seed: u64,
) -> Result<PoEResult> {
    let batch = estimate_poe_batch(posterior, rules, std::slice::from_ref(event), m, seed)?;
    Ok(batch.results.into_iter().next().expect("one event in, one result out"))
}

/// Probabilities of several events on shared draws.
pub fn estimate_poe_batch(
    posterior: &DirichletPosterior,
    rules: &ElectionRules,
    events: &[EventSpec],
    m: usize,
    seed: u64,
) -> Result<PoEBatch> {
    check_draws(m)?;
    let sampler = DirichletSampler::new(posterior, seed);
    evaluate_events(&sampler, posterior.registry(), rules, events, m, seed)
}

/// Evaluates events on the first `m` draws of any share source, for example
/// a fixed [`DrawMatrix`](crate::DrawMatrix).
pub fn evaluate_events<S: ShareSource>(
    source: &S,
    registry: &PartyRegistry,
    rules: &ElectionRules,
    events: &[EventSpec],
    m: usize,
    seed: u64,
) -> Result<PoEBatch> {
    rules.validate()?;
    if m == 0 {
        return Err(Error::EmptyRequest);
    }
    if source.width() != registry.len() {
        return Err(Error::Parameter("share source does not match the registry".into()));
    }
    let resolved = events.iter().map(|e| e.resolve(registry)).collect::<Result<Vec<_>>>()?;
    let other = registry.other_index();
    let width = registry.len();
    // layout: [hits per event, subset hits per event, hung]
    let slots = 2 * resolved.len() + 1;

    let counts = (0..m as u64)
        .into_par_iter()
        .fold(
            || (Scratch::new(width), vec![0u64; slots]),
            |(mut s, mut acc), i| {
                let hung = s.simulate(source, i, other, rules);
                for (e, event) in resolved.iter().enumerate() {
                    let (hit, subset) = predicate(event, &s, hung, other, rules);
                    acc[e] += u64::from(hit != event.negated);
                    acc[resolved.len() + e] += u64::from(subset);
                }
                acc[slots - 1] += u64::from(hung);
                (s, acc)
            },
        )
        .map(|(_, acc)| acc)
        .reduce(|| vec![0u64; slots], |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });

    let results = resolved
        .iter()
        .enumerate()
        .map(|(e, event)| {
            let subset = (event.kind == EventKind::CoalitionMajority && !event.negated).then(|| counts[resolved.len() + e]);
            PoEResult::from_counts(counts[e], subset, m, seed)
        })
        .collect();
    Ok(PoEBatch { results, hung_draws: counts[slots - 1], m, seed })
}

/// (event holds, a proper subset already holds it) for one simulated draw.
#[inline]
fn predicate(event: &ResolvedEvent, s: &Scratch, hung: bool, other: usize, rules: &ElectionRules) -> (bool, bool) {
    match event.kind {
        EventKind::CoalitionMajority => {
            if hung {
                return (false, false);
            }
            let full = has_majority(seats_of(&s.seats, &event.members), rules);
            let subset = full && proper_subset_majority(&s.seats, &event.members, rules.house_size);
            (full, subset)
        }
        EventKind::PartyAboveThreshold => (s.eligible[event.members[0]], false),
        EventKind::StrongestParty => {
            // first maximum among named parties wins ties
            let mut best = 0;
            for k in 1..other {
                if s.shares[k] > s.shares[best] {
                    best = k;
                }
            }
            (other > 0 && best == event.members[0], false)
        }
    }
}

/// Joint seat share of a coalition across draws, with its density.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeatShareDistribution {
    pub coalition: Vec<PartyId>,
    /// `coalition seats / house size` per draw, in draw order; 0 when hung.
    pub draws: Vec<f64>,
    pub density: Density,
    /// Nearest-rank 2.5% and 97.5% quantiles.
    pub ci95: (f64, f64),
    /// Fraction of draws with a strict seat majority.
    pub majority_mass: f64,
    pub hung_draws: u64,
    pub m: usize,
    pub seed: u64,
}

pub fn seat_distribution<S: AsRef<str>>(
    posterior: &DirichletPosterior,
    rules: &ElectionRules,
    coalition: &[S],
    m: usize,
    seed: u64,
) -> Result<SeatShareDistribution> {
    check_draws(m)?;
    rules.validate()?;
    let registry = posterior.registry();
    let event = EventSpec::coalition_majority(coalition).resolve(registry)?;
    let sampler = DirichletSampler::new(posterior, seed);
    let other = registry.other_index();
    let width = registry.len();

    let per_draw: Vec<(u32, bool)> = (0..m as u64)
        .into_par_iter()
        .map_init(
            || Scratch::new(width),
            |s, i| {
                let hung = s.simulate(&sampler, i, other, rules);
                (if hung { 0 } else { seats_of(&s.seats, &event.members) }, hung)
            },
        )
        .collect();

    let house = f64::from(rules.house_size);
    let draws: Vec<f64> = per_draw.iter().map(|&(seats, _)| f64::from(seats) / house).collect();
    let majorities = per_draw.iter().filter(|&&(seats, hung)| !hung && has_majority(seats, rules)).count();
    let hung_draws = per_draw.iter().filter(|&&(_, hung)| hung).count() as u64;
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);

    Ok(SeatShareDistribution {
        coalition: coalition.iter().map(|c| PartyId::new(c.as_ref())).collect(),
        density: reflected_kde(&sorted),
        ci95: (nearest_rank(&sorted, 0.025), nearest_rank(&sorted, 0.975)),
        majority_mass: majorities as f64 / m as f64,
        draws,
        hung_draws,
        m,
        seed,
    })
}

/// The first `k` draws of the stream, each turned into a full parliament.
pub fn sample_parliaments(
    posterior: &DirichletPosterior,
    rules: &ElectionRules,
    k: usize,
    seed: u64,
) -> Result<Vec<SeatAllocation>> {
    if k == 0 {
        return Err(Error::EmptyRequest);
    }
    rules.validate()?;
    let sampler = DirichletSampler::new(posterior, seed);
    let other = posterior.registry().other_index();
    let mut s = Scratch::new(posterior.registry().len());
    Ok((0..k as u64)
        .map(|i| {
            let hung = s.simulate(&sampler, i, other, rules);
            SeatAllocation { seats: s.seats.clone(), eligible: s.eligible.clone(), hung }
        })
        .collect())
}

/// Everything needed to go from a poll table to a posterior on a given day.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub registry: PartyRegistry,
    pub rules: ElectionRules,
    pub pooling: PoolingConfig,
    pub prior_alpha: Vec<f64>,
}

impl Model {
    pub fn nowcast(&self, polls: &[Poll], as_of: NaiveDate) -> Result<DirichletPosterior> {
        let pooled = pool(polls, as_of, &self.pooling)?;
        posterior_from(&pooled, &self.registry, &self.prior_alpha)
    }
}

/// Per-date values plus the dates that had no polls in their window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series<T> {
    pub points: Vec<(NaiveDate, T)>,
    pub skipped: Vec<NaiveDate>,
}

fn series<T>(
    model: &Model,
    polls: &[Poll],
    dates: &[NaiveDate],
    mut f: impl FnMut(&DirichletPosterior) -> Result<T>,
) -> Result<Series<T>> {
    if dates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter("series dates must be ascending".into()));
    }
    let mut out = Series { points: Vec::new(), skipped: Vec::new() };
    for &date in dates {
        match model.nowcast(polls, date) {
            Ok(posterior) => out.points.push((date, f(&posterior)?)),
            Err(Error::NoPolls { .. }) => out.skipped.push(date),
            Err(e) => return Err(e),
        }
    }
    if out.points.is_empty() {
        return Err(Error::NoData);
    }
    Ok(out)
}

/// PoE of one event over time, one nowcast per date.
pub fn poe_series(
    model: &Model,
    polls: &[Poll],
    dates: &[NaiveDate],
    event: &EventSpec,
    m: usize,
    seed: u64,
) -> Result<Series<PoEResult>> {
    check_draws(m)?;
    series(model, polls, dates, |post| estimate_poe(post, &model.rules, event, m, seed))
}

/// Seat-share distribution of one coalition over time.
pub fn distribution_series<S: AsRef<str>>(
    model: &Model,
    polls: &[Poll],
    dates: &[NaiveDate],
    coalition: &[S],
    m: usize,
    seed: u64,
) -> Result<Series<SeatShareDistribution>> {
    check_draws(m)?;
    series(model, polls, dates, |post| seat_distribution(post, &model.rules, coalition, m, seed))
}

/// Coalition member with the highest posterior-mean share (first on ties).
pub fn strongest_member<S: AsRef<str>>(posterior: &DirichletPosterior, coalition: &[S]) -> Result<PartyId> {
    let registry = posterior.registry();
    let mean = posterior.mean();
    let mut best: Option<usize> = None;
    for id in coalition {
        let i = registry.require(id.as_ref())?;
        if best.is_none_or(|b| mean[i] > mean[b]) {
            best = Some(i);
        }
    }
    best.map(|i| registry.party(i).id.clone()).ok_or_else(|| Error::BadEvent("empty coalition".into()))
}
