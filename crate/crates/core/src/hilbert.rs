//! Computational basis of an `L`-site spin-1/2 chain.
//!
//! A basis state is a bit string: bit `i` set means site `i` points up along
//! `z`. Site 0 is the least significant bit, so the basis index of a
//! configuration is simply its bit pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SITES: usize = 24;

/// Configuration of `len` spins in the `z` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    bits: u32,
    len: usize,
}

impl SpinConfiguration {
    pub fn new(bits: u32, len: usize) -> Result<Self> {
        check_len(len)?;
        if (bits as u64) >> len != 0 {
            return Err(Error::InvalidParameter(format!(
                "bit pattern {bits:#b} has bits beyond site {len}"
            )));
        }
        Ok(Self { bits, len })
    }

    /// Builds a configuration from per-site spins, `true` meaning up.
    pub fn from_spins(spins: &[bool]) -> Result<Self> {
        let bits = spins
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &up)| acc | (u32::from(up) << i));
        Self::new(bits, spins.len())
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_up(&self, site: usize) -> bool {
        self.bits >> site & 1 == 1
    }

    pub fn up_count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Total `s^z` in units of ħ.
    pub fn magnetization(&self) -> f64 {
        self.up_count() as f64 - self.len as f64 / 2.0
    }
}

pub fn config_to_index(c: &SpinConfiguration) -> usize {
    c.bits as usize
}

pub fn index_to_config(index: usize, len: usize) -> Result<SpinConfiguration> {
    check_len(len)?;
    if index >= 1usize << len {
        return Err(Error::InvalidParameter(format!(
            "index {index} outside 0..2^{len}"
        )));
    }
    SpinConfiguration::new(index as u32, len)
}

pub fn check_len(len: usize) -> Result<()> {
    if (1..=MAX_SITES).contains(&len) {
        Ok(())
    } else {
        Err(Error::ChainLength(len))
    }
}

/// One fixed-magnetization block of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub up_count: u32,
    /// Basis indices in ascending order.
    pub indices: Vec<usize>,
}

impl Sector {
    pub fn magnetization(&self, len: usize) -> f64 {
        self.up_count as f64 - len as f64 / 2.0
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Partition of the full basis into total-`s^z` sectors, ordered by
/// increasing magnetization.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorDecomposition {
    len: usize,
    sectors: Vec<Sector>,
    /// position of each basis index inside its own sector
    local: Vec<u32>,
}

impl SectorDecomposition {
    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn chain_len(&self) -> usize {
        self.len
    }

    pub fn dim(&self) -> usize {
        1 << self.len
    }

    /// Index of `basis_index` within its sector.
    pub fn local_index(&self, basis_index: usize) -> usize {
        self.local[basis_index] as usize
    }

    pub fn sector_of(&self, basis_index: usize) -> usize {
        basis_index.count_ones() as usize
    }
}

pub fn sector_decomposition(len: usize) -> Result<SectorDecomposition> {
    check_len(len)?;
    let dim = 1usize << len;
    let mut sectors: Vec<Sector> = (0..=len as u32)
        .map(|k| Sector {
            up_count: k,
            indices: Vec::with_capacity(binomial(len as u64, k as u64) as usize),
        })
        .collect();
    let mut local = vec![0u32; dim];
    for index in 0..dim {
        let sector = &mut sectors[index.count_ones() as usize];
        local[index] = sector.indices.len() as u32;
        sector.indices.push(index);
    }
    Ok(SectorDecomposition {
        len,
        sectors,
        local,
    })
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
