//! Deterministic DVS transduction from grayscale frame sequences to event
//! streams, plus the built-in registry of sensor configurations.
//!
//! The pixel model: each pixel holds a reference log intensity. When the log
//! intensity changes by at least one contrast threshold relative to the
//! reference, the pixel emits events of the corresponding polarity at
//! timestamps interpolated linearly in log intensity across the frame
//! interval. A refractory period suppresses emissions that follow the
//! previous one too closely; suppressed crossings do not advance the
//! reference, so pent-up change is released once the pixel may fire again.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{sort_canonical, Event, FrameSequence, Polarity};

/// Guard added inside the log so a zero sample stays finite.
pub const LOG_EPSILON: f64 = 1e-3;

/// Log intensity of an 8-bit grayscale sample: `ln(i/255 + 1e-3)`.
///
/// Strictly increasing in `i`; total on the whole sample range.
#[inline]
pub fn log_intensity(i: u8) -> f64 {
    (f64::from(i) / 255.0 + LOG_EPSILON).ln()
}

/// Which setting a registered configuration varies relative to the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    Baseline,
    Threshold,
    Refractory,
    FieldOfView,
    Joint,
    Custom,
}

/// One sensor parameter tuple: contrast thresholds, refractory period, and
/// horizontal field of view, plus an identifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub id: String,
    /// Positive log-intensity threshold, > 0.
    pub th_p: f64,
    /// Negative log-intensity threshold, > 0.
    pub th_n: f64,
    /// Refractory period in milliseconds, >= 0, at most 2 fractional digits.
    pub refractory_ms: f64,
    /// Horizontal field of view in degrees, in (0, 180) exclusive.
    pub fov_deg: f64,
    #[serde(default = "ParamGroup::custom")]
    pub group: ParamGroup,
}

impl ParamGroup {
    fn custom() -> Self {
        ParamGroup::Custom
    }
}

impl SensorConfig {
    /// Builds a custom configuration, validating every field.
    pub fn new(id: &str, th_p: f64, th_n: f64, refractory_ms: f64, fov_deg: f64) -> Result<Self> {
        let cfg = SensorConfig {
            id: id.to_string(),
            th_p,
            th_n,
            refractory_ms,
            fov_deg,
            group: ParamGroup::Custom,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.th_p <= 0.0 || !self.th_p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "th_p must be > 0, got {}",
                self.th_p
            )));
        }
        if self.th_n <= 0.0 || !self.th_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "th_n must be > 0, got {}",
                self.th_n
            )));
        }
        if self.refractory_ms < 0.0 || !self.refractory_ms.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "refractory period must be >= 0 ms, got {}",
                self.refractory_ms
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidParameter(format!(
                "field of view must lie in (0, 180) degrees, got {}",
                self.fov_deg
            )));
        }
        Ok(())
    }

    /// Refractory period in integer nanoseconds.
    ///
    /// Decimal-millisecond inputs with at most two fractional digits scale
    /// exactly under round-to-nearest.
    #[inline]
    pub fn refractory_ns(&self) -> u64 {
        (self.refractory_ms * 1e6).round() as u64
    }

    /// True when both tuples hold the same parameter values (id and group
    /// aside).
    pub fn params_equal(&self, other: &SensorConfig) -> bool {
        self.th_p == other.th_p
            && self.th_n == other.th_n
            && self.refractory_ms == other.refractory_ms
            && self.fov_deg == other.fov_deg
    }

    /// Number of settings on which two tuples differ.
    ///
    /// A symmetric threshold pair (`th_p == th_n` on both sides) that changes
    /// as a whole counts as a single varied setting, matching how the
    /// registry's threshold family is constructed.
    pub fn varied_settings(&self, other: &SensorConfig) -> usize {
        let p_diff = self.th_p != other.th_p;
        let n_diff = self.th_n != other.th_n;
        let coupled =
            p_diff && n_diff && self.th_p == self.th_n && other.th_p == other.th_n;
        let threshold_count = if coupled {
            1
        } else {
            usize::from(p_diff) + usize::from(n_diff)
        };
        threshold_count
            + usize::from(self.refractory_ms != other.refractory_ms)
            + usize::from(self.fov_deg != other.fov_deg)
    }
}

/// Identifiers of the 14 built-in configurations, in registry order.
pub const CONFIG_IDS: [&str; 14] = [
    "base", "e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8", "e9", "e10", "e11", "e12", "e13",
];

fn registry() -> &'static [SensorConfig; 14] {
    static REGISTRY: OnceLock<[SensorConfig; 14]> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        use ParamGroup::*;
        let cfg = |id: &str, th_p: f64, th_n: f64, tr: f64, fov: f64, group: ParamGroup| {
            SensorConfig {
                id: id.to_string(),
                th_p,
                th_n,
                refractory_ms: tr,
                fov_deg: fov,
                group,
            }
        };
        [
            // The baseline refractory period is 0.01 ms: the default of the
            // family that varies one setting at a time (e4..e6 then own it).
            cfg("base", 0.5, 0.5, 0.01, 90.0, Baseline),
            cfg("e1", 0.25, 0.25, 0.01, 90.0, Threshold),
            cfg("e2", 0.75, 0.75, 0.01, 90.0, Threshold),
            cfg("e3", 1.0, 1.0, 0.01, 90.0, Threshold),
            cfg("e4", 0.5, 0.5, 10.0, 90.0, Refractory),
            cfg("e5", 0.5, 0.5, 25.0, 90.0, Refractory),
            cfg("e6", 0.5, 0.5, 50.0, 90.0, Refractory),
            cfg("e7", 0.5, 0.5, 0.01, 45.0, FieldOfView),
            cfg("e8", 0.5, 0.5, 0.01, 135.0, FieldOfView),
            cfg("e9", 0.5, 0.5, 0.01, 160.0, FieldOfView),
            cfg("e10", 0.25, 0.25, 50.0, 45.0, Joint),
            cfg("e11", 1.0, 0.5, 25.0, 90.0, Joint),
            cfg("e12", 0.7, 0.7, 20.0, 65.0, Joint),
            cfg("e13", 0.3, 0.9, 15.0, 130.0, Joint),
        ]
    })
}

/// All built-in configurations in registry order.
pub fn builtin_configs() -> &'static [SensorConfig] {
    registry()
}

/// Looks up a built-in configuration by id.
pub fn config_by_id(id: &str) -> Result<&'static SensorConfig> {
    registry()
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownConfig {
            id: id.to_string(),
            valid: CONFIG_IDS.join(", "),
        })
}

/// Per-pixel transduction state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelState {
    /// Reference log intensity; always finite.
    pub log_ref: f64,
    /// Timestamp of the last emitted event, if any. Never decreases.
    pub last_emit_ns: Option<u64>,
}

impl PixelState {
    /// State referencing the given sample, with no prior emission.
    pub fn from_sample(i: u8) -> Self {
        PixelState {
            log_ref: log_intensity(i),
            last_emit_ns: None,
        }
    }
}

/// Transduces one pixel across one frame interval `[t0, t1]`.
///
/// `l_new` is the log intensity at `t1`. Threshold crossings between the
/// reference and `l_new` become candidate events with timestamps interpolated
/// linearly in log intensity. A candidate is emitted iff the pixel has never
/// fired or at least the refractory period has elapsed since the last
/// emission; each emitted candidate `i` (1-based) moves the reference to the
/// crossing level `log_ref + sign * i * th`. Suppressed candidates leave the
/// reference untouched.
///
/// Emitted events are appended to `out` in time order.
#[allow(clippy::too_many_arguments)]
pub fn transduce_pixel_interval(
    state: &mut PixelState,
    l_new: f64,
    x: u16,
    y: u16,
    t0: u64,
    t1: u64,
    config: &SensorConfig,
    out: &mut Vec<Event>,
) -> Result<()> {
    if !l_new.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite log intensity {l_new}"
        )));
    }
    if t0 >= t1 {
        return Err(Error::InvalidParameter(format!(
            "interval start {t0} must precede end {t1}"
        )));
    }

    let delta = l_new - state.log_ref;
    let (th, polarity, magnitude, sign) = if delta > 0.0 {
        (config.th_p, Polarity::Positive, delta, 1.0)
    } else {
        (config.th_n, Polarity::Negative, -delta, -1.0)
    };

    let crossings = (magnitude / th).floor();
    if crossings < 1.0 {
        return Ok(());
    }
    let crossings = crossings as u64;

    let dt = (t1 - t0) as f64;
    let refractory = config.refractory_ns();
    let mut last_emitted_index = 0u64;
    for i in 1..=crossings {
        let t = t0 + ((i as f64 * th / magnitude) * dt).round() as u64;
        let allowed = match state.last_emit_ns {
            None => true,
            Some(last) => t.saturating_sub(last) >= refractory,
        };
        if allowed {
            out.push(Event { t, x, y, polarity });
            state.last_emit_ns = Some(t);
            last_emitted_index = i;
        }
    }
    if last_emitted_index > 0 {
        state.log_ref += sign * last_emitted_index as f64 * th;
    }
    Ok(())
}

/// Transduces a whole frame sequence into a canonical-order event stream.
///
/// The reference of every pixel is initialized from frame 0; each consecutive
/// frame pair is then transduced per pixel. Output is deterministic:
/// byte-identical streams for identical inputs.
pub fn transduce_sequence(seq: &FrameSequence, config: &SensorConfig) -> Result<Vec<Event>> {
    seq.validate()?;
    config.validate()?;
    if seq.frames.len() < 2 {
        return Err(Error::InsufficientInput(format!(
            "transduction needs at least 2 frames, got {}",
            seq.frames.len()
        )));
    }

    let mut log_lut = [0.0f64; 256];
    for (i, slot) in log_lut.iter_mut().enumerate() {
        *slot = log_intensity(i as u8);
    }

    let width = seq.width as usize;
    let mut states: Vec<PixelState> = seq.frames[0]
        .pixels
        .iter()
        .map(|&p| PixelState {
            log_ref: log_lut[p as usize],
            last_emit_ns: None,
        })
        .collect();

    let min_th = config.th_p.min(config.th_n);
    let mut events = Vec::new();
    for pair in seq.frames.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        for (idx, &sample) in next.pixels.iter().enumerate() {
            let state = &mut states[idx];
            let l_new = log_lut[sample as usize];
            // Fast path: below the smaller threshold nothing can fire and no
            // state changes.
            if (l_new - state.log_ref).abs() < min_th {
                continue;
            }
            let x = (idx % width) as u16;
            let y = (idx / width) as u16;
            transduce_pixel_interval(
                state, l_new, x, y, prev.t_ns, next.t_ns, config, &mut events,
            )?;
        }
    }
    sort_canonical(&mut events);
    Ok(events)
}
