//! PRS sequence generation and comb-structured resource grid mapping.
//!
//! The pseudo-random sequence is the length-31 Gold sequence of 3GPP
//! TS 38.211 clause 5.2.1: two 31-bit LFSRs, the first initialized to
//! `1, 0, ..., 0`, the second from the 31-bit seed, both fast-forwarded by
//! 1600 steps. Each pair of bits maps to one QPSK symbol.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Fast-forward applied to both registers before the first output bit.
pub const GOLD_FAST_FORWARD: usize = 1600;

const REGISTER_MASK: u32 = 0x7fff_ffff;

/// Frequency-domain comb sizes supported for PRS resources.
pub const SUPPORTED_COMB_SIZES: [usize; 4] = [2, 4, 6, 12];

/// Subcarriers per physical resource block.
pub const SUBCARRIERS_PER_PRB: usize = 12;

/// Normal cyclic prefix duration for numerology mu = 3 (120 kHz), seconds:
/// 144 * 64 * 2^-3 basic time units of 1 / (480 kHz * 4096).
pub const NORMAL_CP_120KHZ: f64 = 1152.0 / (480e3 * 4096.0);

/// Two-register Gold sequence generator.
#[derive(Debug, Clone)]
pub struct GoldGenerator {
    x1: u32,
    x2: u32,
}

impl GoldGenerator {
    /// Creates a generator already advanced past the 1600-step fast-forward.
    ///
    /// The seed initializes the second register and must be a nonzero 31-bit
    /// value.
    pub fn new(seed: u32) -> Result<Self> {
        if seed == 0 || seed > REGISTER_MASK {
            return Err(Error::DegenerateSeed(seed));
        }
        let mut g = Self { x1: 1, x2: seed };
        for _ in 0..GOLD_FAST_FORWARD {
            g.step();
        }
        Ok(g)
    }

    /// Current contents of the seed-independent first register.
    pub fn x1_state(&self) -> u32 {
        self.x1
    }

    pub fn x2_state(&self) -> u32 {
        self.x2
    }

    fn step(&mut self) {
        // x1(n+31) = x1(n+3) + x1(n)
        let f1 = ((self.x1 >> 3) ^ self.x1) & 1;
        // x2(n+31) = x2(n+3) + x2(n+2) + x2(n+1) + x2(n)
        let f2 = ((self.x2 >> 3) ^ (self.x2 >> 2) ^ (self.x2 >> 1) ^ self.x2) & 1;
        self.x1 = ((self.x1 >> 1) | (f1 << 30)) & REGISTER_MASK;
        self.x2 = ((self.x2 >> 1) | (f2 << 30)) & REGISTER_MASK;
    }

    pub fn next_bit(&mut self) -> u8 {
        let bit = ((self.x1 ^ self.x2) & 1) as u8;
        self.step();
        bit
    }
}

impl Iterator for GoldGenerator {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.next_bit())
    }
}

/// First `length` bits `c(0..length)` of the Gold sequence for `seed`.
pub fn gold_sequence(seed: u32, length: usize) -> Result<Vec<u8>> {
    Ok(GoldGenerator::new(seed)?.take(length).collect())
}

/// Maps bits `(c(2m), c(2m+1))` to the unit-modulus QPSK symbol.
pub fn qpsk_symbol(b0: u8, b1: u8) -> Complex64 {
    let re = FRAC_1_SQRT_2 * (1.0 - 2.0 * f64::from(b0));
    let im = FRAC_1_SQRT_2 * (1.0 - 2.0 * f64::from(b1));
    Complex64::new(re, im)
}

/// `count` PRS symbols generated from the Gold sequence of `seed`.
pub fn prs_symbols(seed: u32, count: usize) -> Result<Vec<Complex64>> {
    let mut gen = GoldGenerator::new(seed)?;
    Ok((0..count)
        .map(|_| {
            let b0 = gen.next_bit();
            let b1 = gen.next_bit();
            qpsk_symbol(b0, b1)
        })
        .collect())
}

/// OFDM numerology of the sensing signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmConfig {
    /// Subcarrier spacing, Hz.
    pub subcarrier_spacing: f64,
    /// Number of subcarriers M (12 per PRB).
    pub num_subcarriers: usize,
    /// Number of OFDM symbols N.
    pub num_symbols: usize,
    pub comb_size: usize,
    /// Carrier frequency, Hz. Metadata only.
    pub carrier_frequency: f64,
    /// Cyclic prefix duration, seconds.
    pub cyclic_prefix: f64,
}

impl Default for OfdmConfig {
    /// 28 GHz FR2 carrier, 120 kHz spacing, 66 PRBs (100 MHz), comb 12, one slot.
    fn default() -> Self {
        Self {
            subcarrier_spacing: 120e3,
            num_subcarriers: 66 * SUBCARRIERS_PER_PRB,
            num_symbols: 14,
            comb_size: 12,
            carrier_frequency: 28e9,
            cyclic_prefix: NORMAL_CP_120KHZ,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.subcarrier_spacing.is_finite() && self.subcarrier_spacing > 0.0) {
            return Err(Error::Config(format!(
                "subcarrier spacing must be positive, got {}",
                self.subcarrier_spacing
            )));
        }
        if self.num_subcarriers == 0 || !self.num_subcarriers.is_multiple_of(SUBCARRIERS_PER_PRB) {
            return Err(Error::Config(format!(
                "subcarrier count must be a positive multiple of 12, got {}",
                self.num_subcarriers
            )));
        }
        if self.num_symbols == 0 {
            return Err(Error::Config("symbol count must be positive".into()));
        }
        if !SUPPORTED_COMB_SIZES.contains(&self.comb_size) {
            return Err(Error::Config(format!(
                "comb size must be one of {SUPPORTED_COMB_SIZES:?}, got {}",
                self.comb_size
            )));
        }
        if !(self.cyclic_prefix.is_finite() && self.cyclic_prefix >= 0.0) {
            return Err(Error::Config("cyclic prefix must be nonnegative".into()));
        }
        Ok(())
    }

    /// Width of one delay bin in meters, `c0 / (df * M)`.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (self.subcarrier_spacing * self.num_subcarriers as f64)
    }

    /// Useful symbol duration `1 / df`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Total symbol duration including the cyclic prefix.
    pub fn total_symbol_duration(&self) -> f64 {
        self.cyclic_prefix + self.symbol_duration()
    }

    /// Number of delay bins before the comb-induced alias repeats, `M / comb`.
    pub fn alias_period(&self) -> usize {
        self.num_subcarriers / self.comb_size
    }

    /// Largest bistatic range that maps to a unique delay bin.
    pub fn unambiguous_range(&self) -> f64 {
        self.alias_period() as f64 * self.range_resolution()
    }

    /// Largest bistatic range whose nearest delay bin still lies inside the
    /// search window, so that quantization never wraps onto an alias.
    pub fn max_unwrapped_range(&self) -> f64 {
        (self.alias_period() as f64 - 0.5) * self.range_resolution()
    }

    /// Nonzero subcarriers per symbol column.
    pub fn prs_subcarriers(&self) -> usize {
        self.num_subcarriers / self.comb_size
    }
}

/// PRS resource of one transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrsAllocation {
    pub transmitter_id: usize,
    pub comb_offset: usize,
    pub sequence_seed: u32,
}

/// Assigns comb offset `s` and seed `base_seed + s` to transmitters `0..count`.
pub fn allocate_transmitters(count: usize, config: &OfdmConfig, base_seed: u32) -> Result<Vec<PrsAllocation>> {
    if count > config.comb_size {
        return Err(Error::Config(format!(
            "{count} transmitters cannot share comb {} with distinct offsets",
            config.comb_size
        )));
    }
    (0..count)
        .map(|s| {
            let seed = base_seed
                .checked_add(s as u32)
                .filter(|v| *v <= REGISTER_MASK)
                .ok_or_else(|| Error::Config(format!("PRS seed {base_seed} + {s} overflows 31 bits")))?;
            Ok(PrsAllocation {
                transmitter_id: s,
                comb_offset: s,
                sequence_seed: seed,
            })
        })
        .collect()
}

/// Dense M x N matrix of complex symbols, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl SymbolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Number of subcarriers M.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of symbols N.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[n * self.rows + m]
    }

    pub fn set(&mut self, m: usize, n: usize, v: Complex64) {
        self.data[n * self.rows + m] = v;
    }

    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.rows..(n + 1) * self.rows]
    }

    pub fn column_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.data[n * self.rows..(n + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &SymbolMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Writes `m,n,re,im` rows for every entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,n,re,im")?;
        for n in 0..self.cols {
            for m in 0..self.rows {
                let v = self.get(m, n);
                writeln!(out, "{m},{n},{},{}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Transmit grid of one gNB: PRS on its comb, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub symbols: SymbolMatrix,
    pub allocation: PrsAllocation,
    comb_size: usize,
}

impl ResourceGrid {
    pub fn comb_size(&self) -> usize {
        self.comb_size
    }

    pub fn is_occupied(&self, m: usize) -> bool {
        m % self.comb_size == self.allocation.comb_offset
    }
}

/// Places PRS symbols column by column on the comb `m mod comb == offset`.
pub fn build_grid(config: &OfdmConfig, alloc: &PrsAllocation) -> Result<ResourceGrid> {
    config.validate()?;
    if alloc.comb_offset >= config.comb_size {
        return Err(Error::Config(format!(
            "comb offset {} out of range for comb size {}",
            alloc.comb_offset, config.comb_size
        )));
    }
    let per_col = config.prs_subcarriers();
    let seq = prs_symbols(alloc.sequence_seed, per_col * config.num_symbols)?;
    let mut symbols = SymbolMatrix::zeros(config.num_subcarriers, config.num_symbols);
    for (n, chunk) in seq.chunks_exact(per_col).enumerate() {
        let col = symbols.column_mut(n);
        for (j, v) in chunk.iter().enumerate() {
            col[alloc.comb_offset + j * config.comb_size] = *v;
        }
    }
    Ok(ResourceGrid {
        symbols,
        allocation: *alloc,
        comb_size: config.comb_size,
    })
}
