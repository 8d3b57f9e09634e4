//! Poll tables and the party registry they are keyed on.

mod polls;
mod registry;

pub use polls::{parse_polls, serialize_polls, validate_poll, IngestError, Poll, PollIssue, OVERSUM_TOLERANCE};
pub use registry::{Party, PartyId, PartyRegistry, Rgb};
