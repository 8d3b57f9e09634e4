//! Threshold, highest-averages seat allocation and majority tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PartyId, PartyRegistry};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Apportionment {
    /// Divisors 1, 3, 5, ...
    #[default]
    SainteLague,
    /// Divisors 1, 2, 3, ...
    DHondt,
}

impl Apportionment {
    #[inline]
    fn divisor(self, seats: u32) -> f64 {
        match self {
            Apportionment::SainteLague => f64::from(2 * seats + 1),
            Apportionment::DHondt => f64::from(seats + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectionRules {
    pub threshold: f64,
    pub house_size: u32,
    pub method: Apportionment,
}

impl Default for ElectionRules {
    fn default() -> Self {
        ElectionRules { threshold: 0.05, house_size: 598, method: Apportionment::SainteLague }
    }
}

impl ElectionRules {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.threshold) {
            return Err(Error::Parameter(format!("threshold must lie in [0, 0.5), got {}", self.threshold)));
        }
        if self.house_size == 0 {
            return Err(Error::Parameter("house_size must be positive".into()));
        }
        Ok(())
    }
}

/// Shares of the parties that passed the threshold, renormalized to sum to
/// one. Ineligible entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Eligibility {
    pub shares: Vec<f64>,
    pub eligible: Vec<bool>,
    pub hung: bool,
}

/// Removes the residual bucket and every party strictly below the threshold
/// (or with no votes at all), then renormalizes what is left. An empty result
/// is flagged as hung rather than treated as an error.
pub fn apply_threshold(shares: &[f64], other: usize, rules: &ElectionRules) -> Eligibility {
    let mut out = Eligibility { shares: vec![0.0; shares.len()], eligible: vec![false; shares.len()], hung: true };
    threshold_into(shares, other, rules.threshold, &mut out.shares, &mut out.eligible);
    out.hung = !out.eligible.iter().any(|&e| e);
    out
}

#[inline]
pub(crate) fn threshold_into(shares: &[f64], other: usize, threshold: f64, out: &mut [f64], eligible: &mut [bool]) -> bool {
    let mut total = 0.0;
    for (i, (&s, e)) in shares.iter().zip(eligible.iter_mut()).enumerate() {
        *e = i != other && s > 0.0 && s >= threshold;
        if *e {
            total += s;
        }
    }
    for ((&s, &e), o) in shares.iter().zip(eligible.iter()).zip(out.iter_mut()) {
        *o = if e { s / total } else { 0.0 };
    }
    total > 0.0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeatAllocation {
    pub seats: Vec<u32>,
    pub eligible: Vec<bool>,
    pub hung: bool,
}

impl SeatAllocation {
    pub fn total(&self) -> u32 {
        self.seats.iter().sum()
    }
}

/// Highest-averages allocation of `rules.house_size` seats. Ties between
/// equal quotients go to the party listed first in the registry.
pub fn allocate_seats(eligibility: &Eligibility, rules: &ElectionRules) -> SeatAllocation {
    let mut seats = vec![0; eligibility.shares.len()];
    let hung = !apportion_into(&eligibility.shares, &eligibility.eligible, rules.house_size, rules.method, &mut seats);
    SeatAllocation { seats, eligible: eligibility.eligible.clone(), hung }
}

/// Writes the allocation into `seats`; returns false (all zeros) when no
/// party is eligible.
///
/// The result is the set of the `house` best quotients `w_i / d(j)` under the
/// order (quotient descending, party index ascending), which is exactly what
/// awarding seats one at a time produces. Starting from the rounded quota
/// and repairing locally avoids walking through every seat.
pub(crate) fn apportion_into(weights: &[f64], eligible: &[bool], house: u32, method: Apportionment, seats: &mut [u32]) -> bool {
    seats.iter_mut().for_each(|s| *s = 0);
    let total: f64 = weights.iter().zip(eligible).filter(|(_, &e)| e).map(|(w, _)| w).sum();
    if total.is_nan() || total <= 0.0 {
        return false;
    }
    let offset = match method {
        Apportionment::SainteLague => 0.5,
        Apportionment::DHondt => 0.0,
    };
    let mut assigned: u32 = 0;
    for ((s, &w), &e) in seats.iter_mut().zip(weights).zip(eligible) {
        if e {
            *s = ((w / total * f64::from(house) + offset).floor() as u32).min(house);
            assigned += *s;
        }
    }

    let next = |seats: &[u32]| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (&w, &e)) in weights.iter().zip(eligible).enumerate() {
            if !e {
                continue;
            }
            let q = w / method.divisor(seats[i]);
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((i, q));
            }
        }
        best
    };
    let last = |seats: &[u32]| -> Option<(usize, f64)> {
        let mut worst: Option<(usize, f64)> = None;
        for (i, (&w, &e)) in weights.iter().zip(eligible).enumerate() {
            if !e || seats[i] == 0 {
                continue;
            }
            let q = w / method.divisor(seats[i] - 1);
            if worst.is_none_or(|(_, wq)| q <= wq) {
                worst = Some((i, q));
            }
        }
        worst
    };

    while assigned < house {
        let (i, _) = next(seats).expect("an eligible party exists");
        seats[i] += 1;
        assigned += 1;
    }
    while assigned > house {
        let (i, _) = last(seats).expect("some party holds a seat");
        seats[i] -= 1;
        assigned -= 1;
    }
    // swap while the best excluded quotient outranks the worst included one
    while let (Some((bi, bq)), Some((wi, wq))) = (next(seats), last(seats)) {
        let outranks = bq > wq || (bq == wq && bi < wi);
        if !outranks || bi == wi {
            break;
        }
        seats[bi] += 1;
        seats[wi] -= 1;
    }
    true
}

/// Coalition resolved against a registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coalition {
    ids: Vec<PartyId>,
    members: Vec<usize>,
}

impl Coalition {
    pub fn resolve<S: AsRef<str>>(registry: &PartyRegistry, ids: &[S]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::BadEvent("coalition has no members".into()));
        }
        let mut members = Vec::with_capacity(ids.len());
        let mut resolved = Vec::with_capacity(ids.len());
        for id in ids {
            let i = registry.require(id.as_ref())?;
            if members.contains(&i) {
                return Err(Error::BadEvent(format!("party `{}` listed twice", id.as_ref())));
            }
            members.push(i);
            resolved.push(registry.party(i).id.clone());
        }
        Ok(Coalition { ids: resolved, members })
    }

    pub fn ids(&self) -> &[PartyId] {
        &self.ids
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn coalition_seats(alloc: &SeatAllocation, coalition: &Coalition) -> u32 {
    seats_of(&alloc.seats, coalition.members())
}

#[inline]
pub(crate) fn seats_of(seats: &[u32], members: &[usize]) -> u32 {
    members.iter().map(|&i| seats[i]).sum()
}

/// Strict majority: more than half of the house.
#[inline]
pub fn has_majority(seats: u32, rules: &ElectionRules) -> bool {
    u64::from(seats) * 2 > u64::from(rules.house_size)
}

/// Whether some proper subset of the coalition already holds a majority.
pub fn subset_sufficient(alloc: &SeatAllocation, coalition: &Coalition, rules: &ElectionRules) -> bool {
    proper_subset_majority(&alloc.seats, coalition.members(), rules.house_size)
}

/// Enumerates every proper subset. Since seats are non-negative the maximum
/// is always "all members but the weakest", but the enumeration is kept as
/// the definition; coalitions are small.
pub(crate) fn proper_subset_majority(seats: &[u32], members: &[usize], house: u32) -> bool {
    let k = members.len();
    assert!(k < 32, "coalitions are limited to 31 members");
    let full = (1u32 << k) - 1;
    (0..full).any(|mask| {
        let sum: u64 = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| u64::from(seats[members[b]])).sum();
        sum * 2 > u64::from(house)
    })
}
