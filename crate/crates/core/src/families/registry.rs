//! String keys naming the supported families.
//!
//! ```text
//! otfkm:m=4,k=2,signs=+-    OT-FKM from a Clifford system (signs default to all +)
//! cartan3:O                 g = 3 over R, C, H or O
//! grassmann22               the (2,2) family on Lambda^2 R^5
//! geodesic2:p=2,q=3         great spheres S^p and S^q
//! ```

use std::fmt;
use std::str::FromStr;

use crate::clifford::build_clifford_system;
use crate::division::DivisionAlgebra;
use crate::error::{Error, Result};

use super::{cartan_g3_family, geodesic_sphere_g2_family, grassmann_g4_22_family, otfkm_family, IsoparFamily};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FamilyKey {
    Otfkm { m: usize, k: usize, signs: Vec<i8> },
    Cartan3(DivisionAlgebra),
    Grassmann22,
    Geodesic2 { p: usize, q: usize },
}

impl FamilyKey {
    pub fn build(&self) -> Result<IsoparFamily> {
        match self {
            FamilyKey::Otfkm { m, k, signs } => Ok(otfkm_family(build_clifford_system(*m, *k, signs)?)),
            FamilyKey::Cartan3(alg) => cartan_g3_family(*alg),
            FamilyKey::Grassmann22 => grassmann_g4_22_family(),
            FamilyKey::Geodesic2 { p, q } => geodesic_sphere_g2_family(*p, *q),
        }
    }
}

impl fmt::Display for FamilyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKey::Otfkm { m, k, signs } => {
                let s: String = signs.iter().map(|s| if *s > 0 { '+' } else { '-' }).collect();
                write!(f, "otfkm:m={m},k={k},signs={s}")
            }
            FamilyKey::Cartan3(alg) => write!(f, "cartan3:{alg}"),
            FamilyKey::Grassmann22 => f.write_str("grassmann22"),
            FamilyKey::Geodesic2 { p, q } => write!(f, "geodesic2:p={p},q={q}"),
        }
    }
}

fn params(body: &str, key: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::UnknownFamily(format!("{key} (expected name=value, got `{kv}`)")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn int_param(list: &[(String, String)], name: &str, key: &str) -> Result<usize> {
    let (_, v) = list
        .iter()
        .find(|(k, _)| k == name)
        .ok_or_else(|| Error::UnknownFamily(format!("{key} (missing `{name}`)")))?;
    v.parse().map_err(|_| Error::UnknownFamily(format!("{key} (`{name}` is not an integer)")))
}

impl FromStr for FamilyKey {
    type Err = Error;

    fn from_str(key: &str) -> Result<Self> {
        let (head, body) = key.split_once(':').unwrap_or((key, ""));
        match head {
            "grassmann22" if body.is_empty() => Ok(FamilyKey::Grassmann22),
            "cartan3" => Ok(FamilyKey::Cartan3(body.parse().map_err(|_| Error::UnknownFamily(key.to_string()))?)),
            "geodesic2" => {
                let list = params(body, key)?;
                Ok(FamilyKey::Geodesic2 { p: int_param(&list, "p", key)?, q: int_param(&list, "q", key)? })
            }
            "otfkm" => {
                let list = params(body, key)?;
                let m = int_param(&list, "m", key)?;
                let k = int_param(&list, "k", key)?;
                let signs = match list.iter().find(|(n, _)| n == "signs") {
                    None => vec![1; k],
                    Some((_, s)) => s
                        .chars()
                        .map(|c| match c {
                            '+' => Ok(1),
                            '-' => Ok(-1),
                            _ => Err(Error::UnknownFamily(format!("{key} (bad sign `{c}`)"))),
                        })
                        .collect::<Result<_>>()?,
                };
                Ok(FamilyKey::Otfkm { m, k, signs })
            }
            _ => Err(Error::UnknownFamily(key.to_string())),
        }
    }
}

/// Parses a key and builds the family.
pub fn family_from_key(key: &str) -> Result<IsoparFamily> {
    key.parse::<FamilyKey>()?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip() {
        for key in ["otfkm:m=4,k=2,signs=+-", "cartan3:O", "grassmann22", "geodesic2:p=2,q=3"] {
            assert_eq!(key.parse::<FamilyKey>().unwrap().to_string(), key);
        }
        assert_eq!("otfkm:m=1,k=4".parse::<FamilyKey>().unwrap().to_string(), "otfkm:m=1,k=4,signs=++++");
    }

    #[test]
    fn built_family_reports_its_canonical_key() {
        let fam = family_from_key("otfkm:m=4,k=2,signs=+-").unwrap();
        assert_eq!(fam.key, "otfkm:m=4,k=2,signs=+-");
        assert_eq!(family_from_key("geodesic2:p=2,q=3").unwrap().key, "geodesic2:p=2,q=3");
    }

    #[test]
    fn bad_keys_are_rejected() {
        for key in ["nope", "cartan3:X", "otfkm:m=1", "otfkm:m=1,k=2,signs=+*", "grassmann22:x"] {
            assert!(matches!(key.parse::<FamilyKey>(), Err(Error::UnknownFamily(_))), "{key}");
        }
        assert!(matches!(family_from_key("otfkm:m=1,k=2,signs=++"), Err(Error::Inadmissible { .. })));
    }
}
