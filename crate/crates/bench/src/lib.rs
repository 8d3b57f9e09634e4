//! Inputs shared by the benchmarks.

use koalition::{DirichletPosterior, Party, PartyId, PartyRegistry, Rgb};

/// Seven-bucket registry shaped like a German federal election.
pub fn registry() -> PartyRegistry {
    let party = |id: &str| Party { id: PartyId::new(id), name: id.to_owned(), color: Rgb(0x55, 0x55, 0x55) };
    PartyRegistry::new(["CDU", "SPD", "GRUENE", "FDP", "AFD", "LINKE"].map(party).to_vec(), party("other")).unwrap()
}

/// Roughly 10 000 pooled respondents with one party near the threshold.
pub fn posterior() -> DirichletPosterior {
    DirichletPosterior::new(registry(), vec![2250.5, 2500.5, 1600.5, 1150.5, 1100.5, 500.5, 900.5]).unwrap()
}
