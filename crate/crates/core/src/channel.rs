//! Symbol-domain multistatic echo channel.
//!
//! Each UE receives the sum over transmitters of the transmit grid, delayed
//! (a linear phase ramp across subcarriers), Doppler shifted (a phase ramp
//! across symbols) and scaled, plus complex AWGN:
//!
//! ```text
//! rx_k(m, n) = sum_s beta_sk * exp(j 2 pi n T0 fd_sk) * exp(-j 2 pi m df tau_sk) * v_s(m, n) + p(m, n)
//! ```

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bistatic_range, Point2};
use crate::prs::{OfdmConfig, ResourceGrid, SymbolMatrix};
use crate::SPEED_OF_LIGHT;

/// One transmitter -> target -> receiver echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPath {
    pub transmitter_id: usize,
    pub receiver_id: usize,
    pub attenuation: Complex64,
    /// Propagation delay, seconds.
    pub delay: f64,
    /// Doppler shift, Hz.
    pub doppler: f64,
}

impl ChannelPath {
    /// Unit-gain static echo with the given delay.
    pub fn static_echo(transmitter_id: usize, receiver_id: usize, delay: f64) -> Self {
        Self {
            transmitter_id,
            receiver_id,
            attenuation: Complex64::new(1.0, 0.0),
            delay,
            doppler: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Variance of each real component; the complex noise variance is twice this.
    pub variance_per_component: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            variance_per_component: 0.0,
            rng_seed: 0,
        }
    }

    /// Noise level for the given per-resource-element SNR relative to
    /// unit-power PRS symbols.
    pub fn from_snr_db(snr_db: f64, rng_seed: u64) -> Self {
        Self {
            variance_per_component: 0.5 * 10f64.powf(-snr_db / 10.0),
            rng_seed,
        }
    }
}

/// Symbols received by one UE after the FFT.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedGrid {
    pub receiver_id: usize,
    pub symbols: SymbolMatrix,
}

/// Bistatic propagation delay in seconds, including any NLoS excess path
/// length in meters.
pub fn bistatic_delay(target: Point2, gnb: Point2, ue: Point2, excess: f64) -> f64 {
    (bistatic_range(target, gnb, ue) + excess) / SPEED_OF_LIGHT
}

/// Applies every path to its transmitter's grid and returns one received
/// grid per distinct receiver, ordered by receiver id.
///
/// Noise for receiver `k` comes from ChaCha stream `k` of the noise seed, so
/// results do not depend on evaluation order.
pub fn apply_channel(
    grids: &[ResourceGrid],
    paths: &[ChannelPath],
    config: &OfdmConfig,
    noise: &NoiseSpec,
) -> Result<Vec<ReceivedGrid>> {
    config.validate()?;
    if !(noise.variance_per_component.is_finite() && noise.variance_per_component >= 0.0) {
        return Err(Error::Config(format!(
            "noise variance must be nonnegative, got {}",
            noise.variance_per_component
        )));
    }
    let (m_count, n_count) = (config.num_subcarriers, config.num_symbols);
    for g in grids {
        if g.symbols.rows() != m_count || g.symbols.cols() != n_count {
            return Err(Error::Config(format!(
                "grid of transmitter {} is {}x{}, expected {m_count}x{n_count}",
                g.allocation.transmitter_id,
                g.symbols.rows(),
                g.symbols.cols()
            )));
        }
    }
    let window = config.symbol_duration();
    let mut resolved = Vec::with_capacity(paths.len());
    for p in paths {
        let grid = grids
            .iter()
            .find(|g| g.allocation.transmitter_id == p.transmitter_id)
            .ok_or_else(|| Error::Scenario(format!("path references unknown transmitter {}", p.transmitter_id)))?;
        if !(p.delay.is_finite() && p.delay >= 0.0 && p.delay < window) {
            return Err(Error::Scenario(format!(
                "delay {} s of path {}->{} outside [0, {window})",
                p.delay, p.transmitter_id, p.receiver_id
            )));
        }
        resolved.push((p, grid));
    }
    let receivers: Vec<usize> = paths
        .iter()
        .map(|p| p.receiver_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let t0 = config.total_symbol_duration();
    let df = config.subcarrier_spacing;
    Ok(receivers
        .into_par_iter()
        .map(|k| {
            let mut rx = SymbolMatrix::zeros(m_count, n_count);
            for (p, grid) in resolved.iter().filter(|(p, _)| p.receiver_id == k) {
                let delay_ramp: Vec<Complex64> = (0..m_count)
                    .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 * df * p.delay))
                    .collect();
                for n in 0..n_count {
                    let doppler = Complex64::from_polar(1.0, 2.0 * PI * n as f64 * t0 * p.doppler);
                    let gain = p.attenuation * doppler;
                    let tx = grid.symbols.column(n);
                    for ((out, v), ramp) in rx.column_mut(n).iter_mut().zip(tx).zip(&delay_ramp) {
                        if v.re != 0.0 || v.im != 0.0 {
                            *out += gain * ramp * v;
                        }
                    }
                }
            }
            if noise.variance_per_component > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
                rng.set_stream(k as u64);
                let normal = Normal::new(0.0, noise.variance_per_component.sqrt()).expect("finite nonnegative std dev");
                for v in rx.as_mut_slice() {
                    let re = normal.sample(&mut rng);
                    let im = normal.sample(&mut rng);
                    *v += Complex64::new(re, im);
                }
            }
            ReceivedGrid {
                receiver_id: k,
                symbols: rx,
            }
        })
        .collect())
}
