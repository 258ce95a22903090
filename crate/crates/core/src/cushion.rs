//! Cushion time: seconds from the start of the precipitating event to the
//! end of the final evasive maneuver, and its four-interval abstraction.

use crate::error::{Error, Result};

/// Frame rate of the naturalistic driving video, frames per second.
pub const DEFAULT_FRAME_RATE: f64 = 7.5;

/// Upper (exclusive) bounds of bins 0..=2; everything at or above the last
/// bound falls into bin 3.
pub const BIN_EDGES: [f64; 3] = [7.0, 14.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoFrameSpan {
    pub f_start: u64,
    pub f_end: u64,
    pub rate: f64,
}

impl VideoFrameSpan {
    pub fn new(f_start: u64, f_end: u64, rate: f64) -> Self {
        Self {
            f_start,
            f_end,
            rate,
        }
    }
}

pub fn compute_cushion_time(span: VideoFrameSpan) -> Result<f64> {
    if span.f_end < span.f_start || span.rate <= 0.0 || !span.rate.is_finite() {
        return Err(Error::InvalidSpan {
            f_start: span.f_start,
            f_end: span.f_end,
            rate: span.rate,
        });
    }
    Ok((span.f_end - span.f_start) as f64 / span.rate)
}

/// Half-open bins `[0,7) [7,14) [14,20) [20,inf)`.
pub fn bin_cushion_time(seconds: f64) -> Result<u8> {
    if seconds.is_nan() || seconds < 0.0 {
        return Err(Error::NegativeDuration(seconds));
    }
    Ok(BIN_EDGES
        .iter()
        .take_while(|&&edge| seconds >= edge)
        .count() as u8)
}
