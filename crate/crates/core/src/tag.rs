use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid tag id {0:?}: expected 8 hexadecimal characters")]
pub struct InvalidTagId(pub String);

/// RFID tag id: 4-byte UID rendered as 8 lowercase hex characters.
///
/// Input is accepted in either case and normalized to lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TagId(String);

impl TagId {
    pub fn parse(s: &str) -> Result<Self, InvalidTagId> {
        let lower = s.trim().to_ascii_lowercase();
        if lower.len() == 8 && lower.bytes().all(|b| b.is_ascii_hexdigit()) {
            Ok(TagId(lower))
        } else {
            Err(InvalidTagId(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_u32(&self) -> u32 {
        u32::from_str_radix(&self.0, 16).expect("validated hex")
    }
}

impl FromStr for TagId {
    type Err = InvalidTagId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TagId::parse(s)
    }
}

impl TryFrom<String> for TagId {
    type Error = InvalidTagId;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        TagId::parse(&s)
    }
}

impl From<TagId> for String {
    fn from(t: TagId) -> Self {
        t.0
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_case() {
        assert_eq!(TagId::parse("DEADBEEF").unwrap().as_str(), "deadbeef");
        assert_eq!(TagId::parse("0000002a").unwrap().to_u32(), 42);
    }

    #[test]
    fn rejects_bad_ids() {
        for bad in ["XYZ", "", "1234567", "123456789", "zzzzzzzz", "12 45678"] {
            assert!(TagId::parse(bad).is_err(), "{bad}");
        }
    }
}
