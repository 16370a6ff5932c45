use std::fmt;
use std::ops::{BitAnd, BitXor, Not};

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A classical bit. Serializes as the integer `0` or `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Bit(bool);

impl Bit {
    pub const ZERO: Bit = Bit(false);
    pub const ONE: Bit = Bit(true);

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Bit(rng.gen())
    }

    pub fn as_u8(self) -> u8 {
        self.0 as u8
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    pub fn is_one(self) -> bool {
        self.0
    }

    /// `(-1)^bit` as a float.
    pub fn sign(self) -> f64 {
        if self.0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        Bit(b)
    }
}

impl From<Bit> for u8 {
    fn from(b: Bit) -> u8 {
        b.as_u8()
    }
}

impl From<Bit> for bool {
    fn from(b: Bit) -> bool {
        b.0
    }
}

/// Error for integers other than 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{0} is not a bit")]
pub struct NotABit(pub u8);

impl TryFrom<u8> for Bit {
    type Error = NotABit;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Bit::ZERO),
            1 => Ok(Bit::ONE),
            other => Err(NotABit(other)),
        }
    }
}

impl BitXor for Bit {
    type Output = Bit;

    fn bitxor(self, rhs: Bit) -> Bit {
        Bit(self.0 ^ rhs.0)
    }
}

impl BitAnd for Bit {
    type Output = Bit;

    fn bitand(self, rhs: Bit) -> Bit {
        Bit(self.0 & rhs.0)
    }
}

impl Not for Bit {
    type Output = Bit;

    fn not(self) -> Bit {
        Bit(!self.0)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_and_table() {
        for a in [Bit::ZERO, Bit::ONE] {
            for b in [Bit::ZERO, Bit::ONE] {
                assert_eq!((a ^ b).as_u8(), a.as_u8() ^ b.as_u8());
                assert_eq!((a & b).as_u8(), a.as_u8() & b.as_u8());
            }
        }
    }

    #[test]
    fn serde_as_integer() {
        assert_eq!(serde_json::to_string(&Bit::ONE).unwrap(), "1");
        assert_eq!(serde_json::from_str::<Bit>("0").unwrap(), Bit::ZERO);
        assert!(serde_json::from_str::<Bit>("2").is_err());
    }
}
