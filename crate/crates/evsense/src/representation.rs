//! Stacked-histogram representation: per-window, per-polarity, per-temporal-bin
//! saturating event counts.
//!
//! A window of length `window_len_ns` is divided into `n_bins` equal bins.
//! The tensor has `2 * n_bins` channels of `H x W` cells: channels
//! `0..n_bins` hold negative-polarity bins in time order, channels
//! `n_bins..2*n_bins` the positive ones. Cells saturate at `clip`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Event, Polarity};

/// Parameters of the stacked-histogram tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationSpec {
    /// Window length in nanoseconds; must be divisible by `n_bins`.
    pub window_len_ns: u64,
    pub n_bins: u32,
    pub width: u16,
    pub height: u16,
    /// Saturation ceiling per cell.
    pub clip: u8,
}

/// Default window length: 50 ms.
pub const DEFAULT_WINDOW_LEN_NS: u64 = 50_000_000;
/// Default temporal bin count.
pub const DEFAULT_N_BINS: u32 = 10;

impl RepresentationSpec {
    /// Spec with the default 50 ms window, 10 bins, and clip 255.
    pub fn new(width: u16, height: u16) -> Self {
        RepresentationSpec {
            window_len_ns: DEFAULT_WINDOW_LEN_NS,
            n_bins: DEFAULT_N_BINS,
            width,
            height,
            clip: u8::MAX,
        }
    }

    pub fn with_window_len_ns(mut self, window_len_ns: u64) -> Self {
        self.window_len_ns = window_len_ns;
        self
    }

    pub fn with_n_bins(mut self, n_bins: u32) -> Self {
        self.n_bins = n_bins;
        self
    }

    pub fn with_clip(mut self, clip: u8) -> Self {
        self.clip = clip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(Error::InvalidParameter("n_bins must be >= 1".into()));
        }
        if self.n_bins > u32::from(u16::MAX) / 2 {
            return Err(Error::InvalidParameter(format!(
                "n_bins {} exceeds the container channel limit",
                self.n_bins
            )));
        }
        if self.window_len_ns == 0 || !self.window_len_ns.is_multiple_of(u64::from(self.n_bins)) {
            return Err(Error::InvalidParameter(format!(
                "window length {} ns is not divisible into {} equal bins",
                self.window_len_ns, self.n_bins
            )));
        }
        if self.clip == 0 {
            return Err(Error::InvalidParameter("clip must be >= 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("tensor geometry must be nonzero".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn bin_width_ns(&self) -> u64 {
        self.window_len_ns / u64::from(self.n_bins)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        2 * self.n_bins as usize
    }

    pub fn cell_count(&self) -> usize {
        self.channels() * self.height as usize * self.width as usize
    }
}

/// Temporal bin of a timestamp within the half-open window
/// `[window_start, window_start + window_len)`; `None` outside it.
#[inline]
pub fn bin_index(t: u64, window_start: u64, spec: &RepresentationSpec) -> Option<u32> {
    if t < window_start {
        return None;
    }
    let offset = t - window_start;
    if offset >= spec.window_len_ns {
        return None;
    }
    Some((offset / spec.bin_width_ns()) as u32)
}

/// One built tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackedHistogram {
    pub spec: RepresentationSpec,
    pub window_start: u64,
    data: Vec<u8>,
}

impl StackedHistogram {
    /// All-zero tensor for the given window.
    pub fn zeroed(spec: RepresentationSpec, window_start: u64) -> Result<Self> {
        spec.validate()?;
        Ok(StackedHistogram {
            data: vec![0; spec.cell_count()],
            spec,
            window_start,
        })
    }

    /// Wraps raw channel-major row-major cells, validating the length.
    pub fn from_raw(spec: RepresentationSpec, window_start: u64, data: Vec<u8>) -> Result<Self> {
        spec.validate()?;
        if data.len() != spec.cell_count() {
            return Err(Error::Malformed(format!(
                "tensor holds {} cells, expected {}",
                data.len(),
                spec.cell_count()
            )));
        }
        Ok(StackedHistogram { spec, window_start, data })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.spec.channels()
    }

    /// Channel of a polarity/bin pair: negative bins first, then positive.
    #[inline]
    pub fn channel_of(&self, polarity: Polarity, bin: u32) -> usize {
        match polarity {
            Polarity::Negative => bin as usize,
            Polarity::Positive => self.spec.n_bins as usize + bin as usize,
        }
    }

    #[inline]
    fn cell_index(&self, channel: usize, y: u16, x: u16) -> usize {
        (channel * self.spec.height as usize + y as usize) * self.spec.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, channel: usize, y: u16, x: u16) -> u8 {
        self.data[self.cell_index(channel, y, x)]
    }

    /// Raw channel-major row-major cells.
    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Sum over all cells, in a wide counter.
    pub fn total_count(&self) -> u64 {
        self.data.iter().map(|&v| u64::from(v)).sum()
    }

    fn accumulate(&mut self, e: &Event) -> Result<()> {
        if e.x >= self.spec.width || e.y >= self.spec.height {
            return Err(Error::CoordOutOfBounds {
                x: e.x,
                y: e.y,
                width: self.spec.width,
                height: self.spec.height,
            });
        }
        if let Some(bin) = bin_index(e.t, self.window_start, &self.spec) {
            let channel = self.channel_of(e.polarity, bin);
            let idx = self.cell_index(channel, e.y, e.x);
            let cell = &mut self.data[idx];
            if *cell < self.spec.clip {
                *cell += 1;
            }
        }
        Ok(())
    }
}

/// Builds the tensor for one window from a canonical-order event stream.
///
/// Out-of-window events are ignored; in-window events increment their cell,
/// saturating at `spec.clip`.
pub fn build_stacked_histogram(
    events: &[Event],
    window_start: u64,
    spec: &RepresentationSpec,
) -> Result<StackedHistogram> {
    let mut h = StackedHistogram::zeroed(*spec, window_start)?;
    for e in events {
        h.accumulate(e)?;
    }
    Ok(h)
}

/// One label-aligned accumulation window: `[start, label_t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelWindow {
    pub start: u64,
    /// Label timestamp; the exclusive end of the window.
    pub label_t: u64,
}

/// Window plan for a labeled sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowPlan {
    pub windows: Vec<LabelWindow>,
    /// Number of label gaps shorter than the window length; such windows
    /// overlap their predecessors but are still emitted.
    pub overlapping: usize,
}

/// Plans one window per label timestamp, ending at that timestamp.
///
/// Windows near the stream start are clamped to `[0, label)`.
pub fn plan_windows(label_timestamps: &[u64], spec: &RepresentationSpec) -> Result<WindowPlan> {
    spec.validate()?;
    let mut overlapping = 0;
    let mut windows = Vec::with_capacity(label_timestamps.len());
    for (i, &t) in label_timestamps.iter().enumerate() {
        if i > 0 {
            let prev = label_timestamps[i - 1];
            if t <= prev {
                return Err(Error::InvalidParameter(format!(
                    "label timestamps must be strictly increasing (index {i})"
                )));
            }
            if t - prev < spec.window_len_ns {
                overlapping += 1;
            }
        }
        windows.push(LabelWindow {
            start: t.saturating_sub(spec.window_len_ns),
            label_t: t,
        });
    }
    if overlapping > 0 {
        log::warn!(
            "{overlapping} label gap(s) shorter than the {} ns window overlap",
            spec.window_len_ns
        );
    }
    Ok(WindowPlan { windows, overlapping })
}

/// Builds one histogram per labeled frame from a canonical-order stream.
pub fn windows_for_sequence(
    events: &[Event],
    label_timestamps: &[u64],
    spec: &RepresentationSpec,
) -> Result<(Vec<StackedHistogram>, WindowPlan)> {
    let plan = plan_windows(label_timestamps, spec)?;
    let mut histograms = Vec::with_capacity(plan.windows.len());
    for w in &plan.windows {
        // Slice the canonical stream to [start, label_t).
        let lo = events.partition_point(|e| e.t < w.start);
        let hi = events.partition_point(|e| e.t < w.label_t);
        histograms.push(build_stacked_histogram(&events[lo..hi], w.start, spec)?);
    }
    Ok((histograms, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::sort_canonical;
    use proptest::prelude::*;

    const MS: u64 = 1_000_000;

    fn ev(t: u64, x: u16, y: u16, p: Polarity) -> Event {
        Event { t, x, y, polarity: p }
    }

    fn defaults(w: u16, h: u16) -> RepresentationSpec {
        RepresentationSpec::new(w, h)
    }

    #[test]
    fn bin_index_examples() {
        let spec = defaults(8, 8);
        assert_eq!(bin_index(12 * MS, 0, &spec), Some(2));
        assert_eq!(bin_index(0, 0, &spec), Some(0));
        assert_eq!(bin_index(50 * MS, 0, &spec), None); // half-open window
        assert_eq!(bin_index(5, 10, &spec), None); // before the window
    }

    #[test]
    fn indivisible_window_is_rejected() {
        let spec = defaults(8, 8).with_window_len_ns(50 * MS).with_n_bins(7);
        assert!(spec.validate().is_err());
        assert!(defaults(8, 8).with_n_bins(0).validate().is_err());
    }

    #[test]
    fn empty_stream_builds_all_zero_default_tensor() {
        let h = build_stacked_histogram(&[], 0, &defaults(8, 6)).unwrap();
        assert_eq!(h.channels(), 20);
        assert_eq!(h.data().len(), 20 * 6 * 8);
        assert!(h.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn single_positive_event_lands_in_channel_12() {
        let h = build_stacked_histogram(
            &[ev(12 * MS, 3, 4, Polarity::Positive)],
            0,
            &defaults(8, 8),
        )
        .unwrap();
        assert_eq!(h.get(12, 4, 3), 1);
        assert_eq!(h.total_count(), 1);
    }

    #[test]
    fn repeated_cell_saturates_at_clip() {
        let events: Vec<Event> = (0..300)
            .map(|i| ev(i * 1000, 2, 2, Polarity::Positive))
            .collect();
        let spec = defaults(4, 4).with_window_len_ns(10_000_000_000).with_n_bins(10);
        let h = build_stacked_histogram(&events, 0, &spec).unwrap();
        assert_eq!(h.get(10, 2, 2), 255);
    }

    #[test]
    fn out_of_window_events_are_ignored() {
        let spec = defaults(4, 4);
        let events = vec![
            ev(10 * MS, 0, 0, Polarity::Positive),
            ev(50 * MS, 1, 1, Polarity::Positive), // at the exclusive end
            ev(80 * MS, 2, 2, Polarity::Negative),
        ];
        let h = build_stacked_histogram(&events, 0, &spec).unwrap();
        assert_eq!(h.total_count(), 1);
    }

    #[test]
    fn out_of_bounds_coordinate_is_an_input_error() {
        let spec = defaults(4, 4);
        let events = vec![ev(10 * MS, 4, 0, Polarity::Positive)];
        assert!(matches!(
            build_stacked_histogram(&events, 0, &spec),
            Err(Error::CoordOutOfBounds { .. })
        ));
    }

    #[test]
    fn polarities_stay_in_their_channel_halves() {
        let events = vec![
            ev(MS, 0, 0, Polarity::Negative),
            ev(26 * MS, 1, 0, Polarity::Positive),
        ];
        let h = build_stacked_histogram(&events, 0, &defaults(4, 4)).unwrap();
        for chan in 0..10 {
            for y in 0..4 {
                for x in 0..4 {
                    if h.get(chan, y, x) > 0 {
                        assert!(chan < 10 && h.channel_of(Polarity::Negative, 0) == 0);
                    }
                }
            }
        }
        assert_eq!(h.get(0, 0, 0), 1); // negative, bin 0
        assert_eq!(h.get(15, 0, 1), 1); // positive, bin 5
    }

    #[test]
    fn window_plan_matches_label_alignment() {
        let spec = defaults(4, 4);
        let plan = plan_windows(&[50 * MS, 100 * MS, 150 * MS], &spec).unwrap();
        assert_eq!(plan.overlapping, 0);
        assert_eq!(
            plan.windows,
            vec![
                LabelWindow { start: 0, label_t: 50 * MS },
                LabelWindow { start: 50 * MS, label_t: 100 * MS },
                LabelWindow { start: 100 * MS, label_t: 150 * MS },
            ]
        );

        let single = plan_windows(&[70 * MS], &spec).unwrap();
        assert_eq!(single.windows.len(), 1);
        assert_eq!(single.windows[0], LabelWindow { start: 20 * MS, label_t: 70 * MS });
    }

    #[test]
    fn five_hundred_labels_make_five_hundred_windows() {
        let labels: Vec<u64> = (0..500).map(|k| k * 50 * MS).collect();
        let plan = plan_windows(&labels, &defaults(4, 4)).unwrap();
        assert_eq!(plan.windows.len(), 500);
        assert_eq!(plan.overlapping, 0);
    }

    #[test]
    fn close_labels_are_flagged_but_still_emitted() {
        let plan = plan_windows(&[10 * MS, 20 * MS, 60 * MS, 140 * MS], &defaults(4, 4)).unwrap();
        assert_eq!(plan.windows.len(), 4);
        assert_eq!(plan.overlapping, 2); // the 10 ms and 40 ms gaps
    }

    #[test]
    fn nondecreasing_labels_are_rejected() {
        assert!(plan_windows(&[10, 10], &defaults(4, 4)).is_err());
        assert!(plan_windows(&[20, 10], &defaults(4, 4)).is_err());
    }

    #[test]
    fn sequence_windows_slice_the_stream() {
        let spec = defaults(4, 4);
        let mut events = vec![
            ev(10 * MS, 0, 0, Polarity::Positive),
            ev(60 * MS, 1, 1, Polarity::Negative),
            ev(99 * MS, 2, 2, Polarity::Positive),
        ];
        sort_canonical(&mut events);
        let (hists, plan) =
            windows_for_sequence(&events, &[50 * MS, 100 * MS], &spec).unwrap();
        assert_eq!(plan.windows.len(), 2);
        assert_eq!(hists[0].total_count(), 1);
        assert_eq!(hists[1].total_count(), 2);
    }

    // Without saturation the tensor conserves counts.
    #[test]
    fn conservation_below_saturation() {
        let mut events: Vec<Event> = (0..200u64)
            .map(|i| {
                ev(
                    i * 250_000,
                    (i % 4) as u16,
                    (i / 50) as u16,
                    if i % 3 == 0 { Polarity::Negative } else { Polarity::Positive },
                )
            })
            .collect();
        sort_canonical(&mut events);
        let h = build_stacked_histogram(&events, 0, &defaults(4, 4)).unwrap();
        assert_eq!(h.total_count(), 200);
    }

    proptest! {
        #[test]
        fn permutation_invariance(
            raw in proptest::collection::vec((0u64..60_000_000, 0u16..4, 0u16..4, 0u8..2), 0..120),
            rotate in 0usize..120,
        ) {
            let spec = defaults(4, 4);
            let mut events: Vec<Event> = raw
                .into_iter()
                .map(|(t, x, y, p)| ev(t, x, y, Polarity::from_u8(p).unwrap()))
                .collect();
            sort_canonical(&mut events);
            let reference = build_stacked_histogram(&events, 0, &spec).unwrap();

            let mut shuffled = events.clone();
            if !shuffled.is_empty() {
                let k = rotate % shuffled.len();
                shuffled.rotate_left(k);
            }
            sort_canonical(&mut shuffled);
            let rebuilt = build_stacked_histogram(&shuffled, 0, &spec).unwrap();
            prop_assert_eq!(reference.data(), rebuilt.data());
        }
    }
}
