use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Variable identifier: a symbol character plus an unsigned index, printed as `x1`.
///
/// Keys order by symbol first, then index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    symbol: char,
    index: u64,
}

impl Key {
    pub const fn new(symbol: char, index: u64) -> Self {
        Self { symbol, index }
    }

    pub fn symbol(&self) -> char {
        self.symbol
    }

    pub fn index(&self) -> u64 {
        self.index
    }
}

/// Shorthand for [`Key::new`].
pub const fn key(symbol: char, index: u64) -> Key {
    Key::new(symbol, index)
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.symbol, self.index)
    }
}

impl FromStr for Key {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let symbol = chars.next().ok_or_else(|| Error::InvalidParameter("empty key".into()))?;
        let index = chars
            .as_str()
            .parse::<u64>()
            .map_err(|_| Error::InvalidParameter(format!("malformed key '{s}'")))?;
        Ok(Key::new(symbol, index))
    }
}
