//! Periodogram range estimation.
//!
//! The transmitted PRS is divided out of the received symbols on the
//! transmitter's comb, every symbol column is taken through an M-point
//! inverse DFT, and the magnitudes are averaged over columns. The peak bin
//! inside the comb's unambiguous window gives the bistatic range.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::channel::ReceivedGrid;
use crate::error::{Error, Result};
use crate::prs::{OfdmConfig, ResourceGrid, SymbolMatrix};

/// Averaged IFFT magnitude per delay bin.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub values: Vec<f64>,
    /// Meters per bin.
    pub bin_width: f64,
}

impl RangeProfile {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin,range_m,value")?;
        for (l, v) in self.values.iter().enumerate() {
            writeln!(out, "{l},{},{v}", l as f64 * self.bin_width)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEstimate {
    pub transmitter_id: usize,
    pub receiver_id: usize,
    pub peak_index: usize,
    /// Bistatic range, meters.
    pub range: f64,
}

/// Pointwise division of received by transmitted symbols; zero wherever the
/// transmitter sent nothing.
pub fn extract_and_divide(received: &ReceivedGrid, transmit: &ResourceGrid) -> Result<SymbolMatrix> {
    let (rx, tx) = (&received.symbols, &transmit.symbols);
    if !rx.same_shape(tx) {
        return Err(Error::Config(format!(
            "received grid {}x{} does not match transmit grid {}x{}",
            rx.rows(),
            rx.cols(),
            tx.rows(),
            tx.cols()
        )));
    }
    let mut out = SymbolMatrix::zeros(tx.rows(), tx.cols());
    for ((o, r), t) in out.as_mut_slice().iter_mut().zip(rx.as_slice()).zip(tx.as_slice()) {
        if t.re != 0.0 || t.im != 0.0 {
            *o = r / t;
        }
    }
    Ok(out)
}

/// Reusable M-point inverse FFT for range profiles.
pub struct Periodogram {
    ifft: Arc<dyn Fft<f64>>,
    size: usize,
}

impl Periodogram {
    pub fn new(num_subcarriers: usize) -> Self {
        let ifft = FftPlanner::new().plan_fft_inverse(num_subcarriers);
        Self {
            ifft,
            size: num_subcarriers,
        }
    }

    /// Mean over columns of the unnormalized inverse-DFT magnitude.
    pub fn profile(&self, g: &SymbolMatrix, bin_width: f64) -> Result<RangeProfile> {
        if g.rows() != self.size {
            return Err(Error::Config(format!(
                "matrix has {} rows, periodogram expects {}",
                g.rows(),
                self.size
            )));
        }
        let mut values = vec![0.0; self.size];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.ifft.get_inplace_scratch_len()];
        for n in 0..g.cols() {
            buf.copy_from_slice(g.column(n));
            self.ifft.process_with_scratch(&mut buf, &mut scratch);
            for (acc, v) in values.iter_mut().zip(&buf) {
                *acc += v.norm();
            }
        }
        if g.cols() > 0 {
            let inv = 1.0 / g.cols() as f64;
            values.iter_mut().for_each(|v| *v *= inv);
        }
        Ok(RangeProfile { values, bin_width })
    }
}

pub fn range_profile(g: &SymbolMatrix, bin_width: f64) -> Result<RangeProfile> {
    Periodogram::new(g.rows()).profile(g, bin_width)
}

/// Index of the first maximum in bins `[0, M / comb)`.
pub fn peak_in_window(profile: &RangeProfile, window: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (l, &v) in profile.values.iter().take(window).enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((l, v));
        }
    }
    best.filter(|(_, v)| *v > 0.0).map(|(l, _)| l)
}

pub fn estimate_range(
    profile: &RangeProfile,
    config: &OfdmConfig,
    transmitter_id: usize,
    receiver_id: usize,
) -> Result<RangeEstimate> {
    if profile.values.len() != config.num_subcarriers {
        return Err(Error::Config(format!(
            "profile has {} bins, expected {}",
            profile.values.len(),
            config.num_subcarriers
        )));
    }
    let peak = peak_in_window(profile, config.alias_period()).ok_or(Error::NoDetection {
        transmitter: transmitter_id,
        receiver: receiver_id,
    })?;
    Ok(RangeEstimate {
        transmitter_id,
        receiver_id,
        peak_index: peak,
        range: peak as f64 * config.range_resolution(),
    })
}
