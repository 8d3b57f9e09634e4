//! JSON reports. Keys come out sorted because `serde_json::Map` is a
//! `BTreeMap`; every float is rounded to six decimals.

use chrono::NaiveDate;
use koalition::kde::nearest_rank;
use koalition::{sample_shares, DirichletPosterior, Model, PartyId, PoEBatch, SeatAllocation};
use serde_json::{json, Map, Value};

use crate::config::Config;

pub(crate) fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_all(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => json!(round6(n.as_f64().unwrap_or(0.0))),
        Value::Array(items) => Value::Array(items.into_iter().map(round_all).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_all(v))).collect()),
        other => other,
    }
}

pub(crate) fn to_json_bytes(value: Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&round_all(value)).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

/// Nearest-rank 2.5% and 97.5% quantiles of each party's share.
pub(crate) fn share_intervals(posterior: &DirichletPosterior, m: usize, seed: u64) -> koalition::Result<Vec<(f64, f64)>> {
    let draws = sample_shares(posterior, m, seed)?;
    let mut column = vec![0.0; draws.rows()];
    Ok((0..posterior.registry().len())
        .map(|k| {
            for (slot, row) in column.iter_mut().zip(draws.iter_rows()) {
                *slot = row[k];
            }
            column.sort_by(f64::total_cmp);
            (nearest_rank(&column, 0.025), nearest_rank(&column, 0.975))
        })
        .collect())
}

pub(crate) struct ReportInput<'a> {
    pub config: &'a Config,
    pub as_of: NaiveDate,
    pub seed: u64,
    pub m: usize,
    pub nowcast: &'a DirichletPosterior,
    pub posterior: &'a DirichletPosterior,
    pub batch: &'a PoEBatch,
    pub leaders: &'a [PartyId],
    pub intervals: &'a [(f64, f64)],
}

fn run_header(config: &Config, as_of: NaiveDate, seed: u64, m: usize) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("as_of".into(), json!(as_of));
    map.insert("seed".into(), json!(seed));
    map.insert("m".into(), json!(m));
    map.insert("window_days".into(), json!(config.pooling.window_days));
    map.insert("dependence_factor".into(), json!(config.pooling.dependence_factor));
    map.insert("prior_alpha".into(), json!(config.prior_alpha));
    map.insert("rules".into(), json!(config.rules));
    map
}

/// Report of `nowcast` and, with `horizon` set, of `forecast`.
pub(crate) fn poe_report(input: &ReportInput, horizon: Option<(NaiveDate, f64)>) -> Value {
    let mut map = run_header(input.config, input.as_of, input.seed, input.m);
    map.insert("command".into(), json!(if horizon.is_some() { "forecast" } else { "nowcast" }));

    let coalitions: Vec<Value> = input
        .config
        .coalitions
        .iter()
        .zip(&input.batch.results)
        .zip(input.leaders)
        .map(|((c, r), leader)| {
            json!({
                "name": c.name,
                "parties": c.parties,
                "probability": r.probability,
                "mc_stderr": r.mc_stderr,
                "subset_probability": r.subset_probability,
                "hits": r.hits,
                "strongest": leader,
            })
        })
        .collect();
    map.insert("coalitions".into(), Value::Array(coalitions));

    let mean = input.posterior.mean();
    let parties: Vec<Value> = input
        .posterior
        .registry()
        .parties()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (lo, hi) = input.intervals[k];
            json!({ "id": p.id, "mean": mean[k], "ci95": [lo, hi] })
        })
        .collect();
    map.insert("parties".into(), Value::Array(parties));

    let source = input.nowcast.source();
    let polls_used: Vec<Value> = source
        .map(|s| s.polls_used.iter().map(|p| json!({ "pollster": p.pollster, "date": p.publish_date })).collect())
        .unwrap_or_default();
    map.insert(
        "diagnostics".into(),
        json!({
            "polls_used": polls_used,
            "n_eff": source.map(|s| s.n_eff),
            "hung_draws": input.batch.hung_draws,
            "hung_fraction": input.batch.hung_fraction(),
        }),
    );

    if let Some((election, tau)) = horizon {
        let h = (election - input.as_of).num_days();
        map.insert("election_date".into(), json!(election));
        map.insert("horizon_days".into(), json!(h));
        map.insert("tau".into(), json!(tau));
        map.insert("shrink".into(), json!(koalition::forecast::shrink_factor(h as f64, tau)));
    }
    Value::Object(map)
}

pub(crate) fn parliaments_report(model: &Model, as_of: NaiveDate, seed: u64, allocs: &[SeatAllocation]) -> Value {
    let named = model.registry.named();
    let rows: Vec<Value> = allocs
        .iter()
        .map(|a| {
            let seats: Map<String, Value> = named.iter().zip(&a.seats).map(|(p, s)| (p.id.to_string(), json!(s))).collect();
            json!({ "hung": a.hung, "seats": seats })
        })
        .collect();
    json!({
        "as_of": as_of,
        "seed": seed,
        "k": allocs.len(),
        "house_size": model.rules.house_size,
        "allocations": rows,
    })
}
