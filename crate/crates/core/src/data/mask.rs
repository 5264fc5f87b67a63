use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    /// High-level audio descriptors.
    Hh,
    /// Low-level audio features.
    Ll,
    /// Lyric embeddings.
    Lr,
    /// Social metadata.
    M,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Hh, Modality::Ll, Modality::Lr, Modality::M];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn tag(self) -> &'static str {
        match self {
            Modality::Hh => "HH",
            Modality::Ll => "LL",
            Modality::Lr => "LR",
            Modality::M => "M",
        }
    }
}

/// Subset of feature groups fed to the fusion regressor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModalityMask(u8);

impl ModalityMask {
    pub const EMPTY: ModalityMask = ModalityMask(0);
    pub const FULL: ModalityMask = ModalityMask(0b1111);

    pub fn of(modalities: &[Modality]) -> Self {
        Self(modalities.iter().fold(0, |acc, m| acc | m.bit()))
    }

    pub fn contains(self, m: Modality) -> bool {
        self.0 & m.bit() != 0
    }

    pub fn with(self, m: Modality) -> Self {
        Self(self.0 | m.bit())
    }

    pub fn without(self, m: Modality) -> Self {
        Self(self.0 & !m.bit())
    }

    pub fn union(self, other: ModalityMask) -> Self {
        ModalityMask(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_proper_subset_of(self, other: ModalityMask) -> bool {
        self != other && self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn modalities(self) -> impl Iterator<Item = Modality> {
        Modality::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    /// Every non-empty mask, full mask first.
    pub fn all_nonempty() -> Vec<ModalityMask> {
        let mut v: Vec<_> = (1..16u8).map(ModalityMask).collect();
        v.sort_by_key(|m| (core::cmp::Reverse(m.len()), m.0));
        v
    }

    /// Parses a `;`-separated list of masks such as `HH,LL,LR,M;HH,LL,M;LR,M`.
    pub fn parse_list(s: &str) -> Result<Vec<ModalityMask>, Error> {
        s.split(';').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for ModalityMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<&str> = self.modalities().map(Modality::tag).collect();
        f.write_str(&tags.join(","))
    }
}

impl fmt::Debug for ModalityMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModalityMask({self})")
    }
}

impl FromStr for ModalityMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut mask = ModalityMask::EMPTY;
        for tag in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m = Modality::ALL
                .into_iter()
                .find(|m| m.tag().eq_ignore_ascii_case(tag))
                .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown modality `{tag}`")))?;
            mask = mask.with(m);
        }
        if mask.is_empty() {
            return Err(Error::InvalidArgument(alloc::format!("empty modality mask `{s}`")));
        }
        Ok(mask)
    }
}

impl Serialize for ModalityMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&alloc::format!("{self}"))
    }
}

impl<'de> Deserialize<'de> for ModalityMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
