use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A four-digit category code such as `7510`.
///
/// Stored numerically; the textual form is always zero-padded to four digits,
/// so numeric order and lexicographic order coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassCode(u16);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("class code {0:?} is not exactly four decimal digits")]
pub struct ClassCodeError(pub String);

impl ClassCode {
    pub const MAX: u16 = 9999;

    pub fn new(value: u16) -> Option<Self> {
        (value <= Self::MAX).then_some(ClassCode(value))
    }

    pub fn value(self) -> u16 {
        self.0
    }
}

impl FromStr for ClassCode {
    type Err = ClassCodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() != 4 || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(ClassCodeError(s.to_string()));
        }
        let value = bytes.iter().fold(0u16, |acc, b| acc * 10 + u16::from(b - b'0'));
        Ok(ClassCode(value))
    }
}

impl fmt::Display for ClassCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.0)
    }
}

impl Serialize for ClassCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClassCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
