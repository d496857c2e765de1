use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The four-point permission lattice: `No < R < Rw`, `No < W < Rw`, `R` and `W` incomparable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Permission {
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "R")]
    R,
    #[serde(rename = "W")]
    W,
    #[serde(rename = "RW")]
    Rw,
}

impl Permission {
    pub const ALL: [Permission; 4] = [Permission::No, Permission::R, Permission::W, Permission::Rw];

    fn bits(self) -> u8 {
        match self {
            Permission::No => 0b00,
            Permission::R => 0b01,
            Permission::W => 0b10,
            Permission::Rw => 0b11,
        }
    }

    fn from_bits(b: u8) -> Self {
        match b & 0b11 {
            0b00 => Permission::No,
            0b01 => Permission::R,
            0b10 => Permission::W,
            _ => Permission::Rw,
        }
    }

    pub fn glb(self, other: Self) -> Self {
        Self::from_bits(self.bits() & other.bits())
    }

    pub fn lub(self, other: Self) -> Self {
        Self::from_bits(self.bits() | other.bits())
    }

    pub fn leq(self, other: Self) -> bool {
        self.glb(other) == self
    }

    pub fn is_readable(self) -> bool {
        matches!(self, Permission::R | Permission::Rw)
    }

    pub fn is_writable(self) -> bool {
        matches!(self, Permission::W | Permission::Rw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Permission::No => "NO",
            Permission::R => "R",
            Permission::W => "W",
            Permission::Rw => "RW",
        }
    }
}

impl PartialOrd for Permission {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self == other {
            Some(Ordering::Equal)
        } else if self.leq(*other) {
            Some(Ordering::Less)
        } else if other.leq(*self) {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Permission {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NO" => Ok(Permission::No),
            "R" => Ok(Permission::R),
            "W" => Ok(Permission::W),
            "RW" => Ok(Permission::Rw),
            _ => Err(format!("unknown permission `{s}`")),
        }
    }
}
