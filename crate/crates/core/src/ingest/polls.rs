use std::fmt;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use super::registry::PartyRegistry;

/// Slack allowed when published shares add up to slightly more than 100%.
pub const OVERSUM_TOLERANCE: f64 = 1e-6;

/// One published survey. `shares` is indexed in registry order; the last
/// entry is the residual "other" share.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Poll {
    pub pollster: String,
    pub publish_date: NaiveDate,
    pub sample_size: u32,
    pub shares: Vec<f64>,
}

impl Poll {
    pub fn share(&self, registry: &PartyRegistry, id: &str) -> Option<f64> {
        registry.index_of(id).map(|i| self.shares[i])
    }
}

/// A violated poll invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum PollIssue {
    Oversum { sum: f64 },
    Negative { party: String, share: f64 },
    BadSize { sample_size: i64 },
    Shape { expected: usize, found: usize },
}

impl PollIssue {
    pub fn code(&self) -> &'static str {
        match self {
            PollIssue::Oversum { .. } => "oversum",
            PollIssue::Negative { .. } => "negative",
            PollIssue::BadSize { .. } => "badsize",
            PollIssue::Shape { .. } => "shape",
        }
    }
}

impl fmt::Display for PollIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PollIssue::Oversum { sum } => write!(f, "oversum: shares add up to {sum}"),
            PollIssue::Negative { party, share } => write!(f, "negative: {party} has share {share}"),
            PollIssue::BadSize { sample_size } => write!(f, "badsize: sample size {sample_size}"),
            PollIssue::Shape { expected, found } => {
                write!(f, "shape: expected {expected} shares, found {found}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("line {line}: header must start with `pollster,date,n`")]
    Header { line: u64 },
    #[error("line {line}: column `{column}` is not a registered party")]
    UnknownColumn { line: u64, column: String },
    #[error("line {line}: no column for party `{party}`")]
    MissingColumn { line: u64, party: String },
    #[error("line {line}: duplicate column `{column}`")]
    DuplicateColumn { line: u64, column: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {}", join_issues(.issues))]
    Invalid { line: u64, issues: Vec<PollIssue> },
}

impl IngestError {
    pub fn line(&self) -> u64 {
        match self {
            IngestError::Header { line }
            | IngestError::UnknownColumn { line, .. }
            | IngestError::MissingColumn { line, .. }
            | IngestError::DuplicateColumn { line, .. }
            | IngestError::Malformed { line, .. }
            | IngestError::Invalid { line, .. } => *line,
        }
    }
}

fn join_issues(issues: &[PollIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks the poll invariants and routes the residual share to the "other"
/// bucket. Returns every violated invariant on failure.
///
/// The incoming other-bucket entry is treated as part of the reported total;
/// after normalization it holds `1 - sum(named shares)`.
pub fn validate_poll(poll: Poll, registry: &PartyRegistry) -> Result<Poll, Vec<PollIssue>> {
    validate_parts(poll.pollster, poll.publish_date, i64::from(poll.sample_size), poll.shares, registry)
}

fn validate_parts(
    pollster: String,
    publish_date: NaiveDate,
    sample_size: i64,
    mut shares: Vec<f64>,
    registry: &PartyRegistry,
) -> Result<Poll, Vec<PollIssue>> {
    let mut issues = Vec::new();
    if shares.len() != registry.len() {
        return Err(vec![PollIssue::Shape { expected: registry.len(), found: shares.len() }]);
    }
    if sample_size < 1 || sample_size > i64::from(u32::MAX) {
        issues.push(PollIssue::BadSize { sample_size });
    }
    for (party, &share) in registry.parties().iter().zip(&shares) {
        if share < 0.0 || share.is_nan() {
            issues.push(PollIssue::Negative { party: party.id.to_string(), share });
        }
    }
    let other = registry.other_index();
    let named: f64 = shares[..other].iter().sum();
    let total = named + shares[other];
    if total > 1.0 + OVERSUM_TOLERANCE {
        issues.push(PollIssue::Oversum { sum: total });
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    shares[other] = (1.0 - named).max(0.0);
    Ok(Poll { pollster, publish_date, sample_size: sample_size as u32, shares })
}

/// Parses a poll table: a `pollster,date,n` header followed by one column
/// per party id. Values are read as percentages if any share cell in the
/// file exceeds 1, otherwise as fractions. Output is sorted by date (stable).
pub fn parse_polls(text: &str, registry: &PartyRegistry) -> Result<Vec<Poll>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(csv_error(e)),
        None => return Err(IngestError::Header { line: 1 }),
    };
    let header_line = header.position().map_or(1, |p| p.line());
    if header.len() < 3 || &header[0] != "pollster" || &header[1] != "date" || &header[2] != "n" {
        return Err(IngestError::Header { line: header_line });
    }
    let mut columns = Vec::with_capacity(header.len() - 3);
    for name in header.iter().skip(3) {
        let index = registry.index_of(name).ok_or_else(|| IngestError::UnknownColumn {
            line: header_line,
            column: name.to_owned(),
        })?;
        if columns.contains(&index) {
            return Err(IngestError::DuplicateColumn { line: header_line, column: name.to_owned() });
        }
        columns.push(index);
    }
    if let Some(missing) = registry.named().iter().enumerate().find(|(i, _)| !columns.contains(i)) {
        return Err(IngestError::MissingColumn { line: header_line, party: missing.1.id.to_string() });
    }

    struct Row {
        line: u64,
        pollster: String,
        date: NaiveDate,
        n: i64,
        values: Vec<f64>,
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != header.len() {
            return Err(IngestError::Malformed {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[1], "%Y-%m-%d").map_err(|_| {
            IngestError::Malformed { line, message: format!("malformed date `{}`", &record[1]) }
        })?;
        let n = record[2].parse::<i64>().map_err(|_| IngestError::Malformed {
            line,
            message: format!("malformed sample size `{}`", &record[2]),
        })?;
        let mut values = vec![0.0; registry.len()];
        for (cell, &index) in record.iter().skip(3).zip(&columns) {
            values[index] = if cell.is_empty() {
                0.0
            } else {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    IngestError::Malformed { line, message: format!("malformed share `{cell}`") }
                })?
            };
        }
        rows.push(Row { line, pollster: record[0].to_owned(), date, n, values });
    }

    let percent = rows.iter().flat_map(|r| &r.values).any(|&v| v > 1.0);
    let mut polls = Vec::with_capacity(rows.len());
    for row in rows {
        let shares = if percent {
            row.values.into_iter().map(|v| v / 100.0).collect()
        } else {
            row.values
        };
        let poll = validate_parts(row.pollster, row.date, row.n, shares, registry)
            .map_err(|issues| IngestError::Invalid { line: row.line, issues })?;
        polls.push(poll);
    }
    polls.sort_by_key(|p| p.publish_date);
    Ok(polls)
}

/// Writes polls as a fraction-valued table that `parse_polls` reads back
/// into identical records. The residual bucket is not written; it is
/// recomputed on parse.
pub fn serialize_polls(polls: &[Poll], registry: &PartyRegistry) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["pollster".to_owned(), "date".to_owned(), "n".to_owned()];
    header.extend(registry.named().iter().map(|p| p.id.to_string()));
    writer.write_record(&header).expect("in-memory write");
    for poll in polls {
        let mut row = vec![
            poll.pollster.clone(),
            poll.publish_date.format("%Y-%m-%d").to_string(),
            poll.sample_size.to_string(),
        ];
        row.extend(poll.shares[..registry.other_index()].iter().map(|s| s.to_string()));
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::Malformed { line, message: e.to_string() }
}
