use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{cyclic_parity_check, AssignmentMatrix, CodeError, Gf2Poly};

/// Built-in assignment matrices.
///
/// The cyclic presets are parity-check matrices in cyclic-shift form. Their
/// generators (coefficient of `x^i` at bit `i`):
///
/// | preset        | generator                                   | groups x size | privacy |
/// |---------------|---------------------------------------------|---------------|---------|
/// | `bch15_7`     | `x^8+x^7+x^6+x^4+1` = m1(x) m3(x), GF(16)   | 8 x 4         | 4       |
/// | `cyclic15_9`  | `x^6+x^5+x^4+x^3+1` = m1(x) m5(x), GF(16)   | 6 x 6         | 6       |
/// | `cyclic15_11` | `x^4+x+1` (Hamming code)                    | 4 x 8         | 8       |
/// | `bch31_21`    | `x^10+x^9+x^8+x^6+x^5+x^3+1` = m1 m3, GF(32) | 10 x 12       | 12      |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Preset {
    Bch15_7,
    Cyclic15_9,
    Cyclic15_11,
    Bch31_21,
    Identity(usize),
    AllOnes(usize),
}

impl Preset {
    pub const CYCLIC: [Preset; 4] = [Preset::Bch15_7, Preset::Cyclic15_9, Preset::Cyclic15_11, Preset::Bch31_21];

    /// Block length and generator polynomial, for the cyclic presets.
    pub fn generator(self) -> Option<(usize, Gf2Poly)> {
        let (n, mask) = match self {
            Preset::Bch15_7 => (15, 0b1_1101_0001),
            Preset::Cyclic15_9 => (15, 0b111_1001),
            Preset::Cyclic15_11 => (15, 0b1_0011),
            Preset::Bch31_21 => (31, 0b111_0110_1001),
            Preset::Identity(_) | Preset::AllOnes(_) => return None,
        };
        Some((n, Gf2Poly::from_mask(mask)))
    }

    pub fn matrix(self) -> Result<AssignmentMatrix, CodeError> {
        match self {
            Preset::Identity(n) => AssignmentMatrix::identity(n),
            Preset::AllOnes(n) => AssignmentMatrix::all_ones(n),
            cyclic => {
                let (n, g) = cyclic.generator().expect("cyclic preset");
                cyclic_parity_check(n, &g)
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Bch15_7 => f.write_str("bch15_7"),
            Preset::Cyclic15_9 => f.write_str("cyclic15_9"),
            Preset::Cyclic15_11 => f.write_str("cyclic15_11"),
            Preset::Bch31_21 => f.write_str("bch31_21"),
            Preset::Identity(n) => write!(f, "identity({n})"),
            Preset::AllOnes(n) => write!(f, "allones({n})"),
        }
    }
}

impl FromStr for Preset {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let sized = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.trim().parse().ok()
        };
        match s {
            "bch15_7" => Ok(Preset::Bch15_7),
            "cyclic15_9" => Ok(Preset::Cyclic15_9),
            "cyclic15_11" => Ok(Preset::Cyclic15_11),
            "bch31_21" => Ok(Preset::Bch31_21),
            _ => sized("identity")
                .map(Preset::Identity)
                .or_else(|| sized("allones").map(Preset::AllOnes))
                .ok_or_else(|| CodeError::UnknownPreset(s.to_string())),
        }
    }
}

impl TryFrom<String> for Preset {
    type Error = CodeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Preset> for String {
    fn from(p: Preset) -> Self {
        p.to_string()
    }
}
