use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Short party identifier, e.g. `SPD`. Compared case-sensitively.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(String);

impl PartyId {
    pub fn new(id: impl Into<String>) -> Self {
        PartyId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PartyId {
    fn from(s: &str) -> Self {
        PartyId(s.to_owned())
    }
}

/// 24-bit RGB color, written as `#rrggbb`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::Registry(format!("`{s}` is not a 6-digit hex color")));
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("validated hex");
        Ok(Rgb(byte(0), byte(2), byte(4)))
    }
}

impl Serialize for Rgb {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Party {
    pub id: PartyId,
    pub name: String,
    pub color: Rgb,
}

/// Ordered list of parties. The residual "other" bucket is always the last
/// entry; all share, count and seat vectors in the crate are indexed in this
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyRegistry {
    parties: Vec<Party>,
}

impl PartyRegistry {
    /// Builds a registry from the named parties plus the residual bucket,
    /// which is appended last.
    pub fn new(named: Vec<Party>, other: Party) -> Result<Self> {
        let mut parties = named;
        parties.push(other);
        Self::from_ordered(parties)
    }

    /// Builds a registry whose last entry is the residual bucket.
    pub fn from_ordered(parties: Vec<Party>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::Registry("registry needs at least the other bucket".into()));
        }
        for (i, p) in parties.iter().enumerate() {
            if p.id.as_str().is_empty() {
                return Err(Error::Registry(format!("party #{i} has an empty id")));
            }
            if parties[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::Registry(format!("duplicate party id `{}`", p.id)));
            }
        }
        Ok(PartyRegistry { parties })
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn party(&self, index: usize) -> &Party {
        &self.parties[index]
    }

    pub fn other_index(&self) -> usize {
        self.parties.len() - 1
    }

    pub fn other(&self) -> &Party {
        &self.parties[self.other_index()]
    }

    /// Parties excluding the residual bucket.
    pub fn named(&self) -> &[Party] {
        &self.parties[..self.other_index()]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.id.as_str() == id)
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownParty(id.to_owned()))
    }

    /// Same parties with the named ones reordered by `order` (a permutation
    /// of `0..named().len()`); the residual bucket stays last.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let named = self.named();
        let mut seen = vec![false; named.len()];
        if order.len() != named.len() {
            return Err(Error::Registry("permutation has the wrong length".into()));
        }
        for &i in order {
            if i >= named.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Registry("not a permutation".into()));
            }
        }
        let reordered = order.iter().map(|&i| named[i].clone()).collect();
        Self::new(reordered, self.other().clone())
    }
}
