//! Event-stream and frame-sequence primitives shared by the whole crate.
//!
//! An event stream is kept in canonical `(t, y, x, polarity)` order so that
//! downstream consumers (serialization, histogramming, evaluation) can rely
//! on a single deterministic total order.

use crate::error::{Error, Result};

/// Sign of a brightness change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Polarity {
    Negative = 0,
    Positive = 1,
}

impl Polarity {
    #[inline]
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }
}

/// A single polarity spike: pixel coordinates, nanosecond timestamp, sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    /// Timestamp in nanoseconds.
    pub t: u64,
    /// Column, `0 <= x < W`.
    pub x: u16,
    /// Row, `0 <= y < H`.
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    /// Key for the canonical stream order.
    #[inline]
    pub fn sort_key(&self) -> (u64, u16, u16, u8) {
        (self.t, self.y, self.x, self.polarity.as_u8())
    }
}

/// Sorts a stream into canonical `(t, y, x, polarity)` order.
pub fn sort_canonical(events: &mut [Event]) {
    events.sort_unstable_by_key(Event::sort_key);
}

/// True when the stream is in canonical nondecreasing order.
pub fn is_canonical(events: &[Event]) -> bool {
    events.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key())
}

/// One grayscale frame: nanosecond timestamp plus row-major 8-bit samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub t_ns: u64,
    pub pixels: Vec<u8>,
}

/// An ordered grayscale frame sequence with sensor geometry.
///
/// `frame_rate_hz` and `fov_deg` are render-time metadata; they are `None`
/// when the sequence was read back from a container that does not store them.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    pub width: u16,
    pub height: u16,
    pub frame_rate_hz: Option<f64>,
    pub fov_deg: Option<f64>,
    pub frames: Vec<Frame>,
}

impl FrameSequence {
    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Checks frame sizes and strict timestamp monotonicity.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter(
                "frame geometry must be nonzero".into(),
            ));
        }
        let n = self.pixel_count();
        for (i, frame) in self.frames.iter().enumerate() {
            if frame.pixels.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "frame {i} has {} samples, expected {n}",
                    frame.pixels.len()
                )));
            }
            if i > 0 && frame.t_ns <= self.frames[i - 1].t_ns {
                return Err(Error::NonMonotonicTimestamps { index: i });
            }
        }
        Ok(())
    }
}
