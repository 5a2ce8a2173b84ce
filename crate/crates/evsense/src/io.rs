//! Bit-exact binary containers: EVT1 event streams, FRM1 frame sequences,
//! and SHR1 histogram tensors.
//!
//! All multi-byte fields are little-endian and fixed-width so files can be
//! scanned sequentially or memory-mapped. Readers validate magic, version,
//! declared counts, bounds, and ordering, and fail with typed errors rather
//! than returning partial data.
//!
//! Layouts:
//!
//! ```text
//! EVT1:  "EVT1" | version u16 | width u16 | height u16 | count u64
//!        then per event (14 bytes):
//!        t_ns u64 | x u16 | y u16 | polarity u8 (0=neg, 1=pos) | reserved u8
//! FRM1:  "FRM1" | version u16 | width u16 | height u16 | frame_count u32
//!        then per frame: t_ns u64 | W*H row-major u8 samples
//! SHR1:  "SHR1" | version u16 | channels u16 | height u16 | width u16
//!        | window_start_ns u64 | window_len_ns u64
//!        then channel-major row-major u8 counts
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::events::{Event, Frame, FrameSequence, Polarity};
use crate::representation::{RepresentationSpec, StackedHistogram};

pub const EVT_MAGIC: [u8; 4] = *b"EVT1";
pub const FRM_MAGIC: [u8; 4] = *b"FRM1";
pub const SHR_MAGIC: [u8; 4] = *b"SHR1";
pub const FORMAT_VERSION: u16 = 1;

/// Size of one serialized event record.
pub const EVENT_RECORD_BYTES: u64 = 14;
/// Size of the EVT1 header.
pub const EVT_HEADER_BYTES: u64 = 18;
/// Size of the FRM1 header.
pub const FRM_HEADER_BYTES: u64 = 14;

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn new(inner: R) -> Self {
        CountingReader { inner, offset: 0 }
    }

    /// Reads exactly `buf.len()` bytes or reports the offset of the shortfall.
    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        let mut done = 0;
        while done < buf.len() {
            match self.inner.read(&mut buf[done..]) {
                Ok(0) => {
                    return Err(Error::Truncated { offset: self.offset + done as u64 });
                }
                Ok(n) => done += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u16_le(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.fill(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    fn u32_le(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64_le(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let mut found = [0u8; 4];
        self.fill(&mut found)?;
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    fn version(&mut self, format: &'static str) -> Result<()> {
        let found = self.u16_le()?;
        if found != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion { format, found });
        }
        Ok(())
    }
}

/// Writes a canonical-order event stream; returns the byte count.
pub fn write_events<W: Write>(
    events: &[Event],
    width: u16,
    height: u16,
    mut sink: W,
) -> Result<u64> {
    for (i, pair) in events.windows(2).enumerate() {
        if pair[0].sort_key() > pair[1].sort_key() {
            return Err(Error::OrderViolation { index: i as u64 + 1 });
        }
    }
    for e in events {
        if e.x >= width || e.y >= height {
            return Err(Error::CoordOutOfBounds { x: e.x, y: e.y, width, height });
        }
    }

    sink.write_all(&EVT_MAGIC)?;
    sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
    sink.write_all(&width.to_le_bytes())?;
    sink.write_all(&height.to_le_bytes())?;
    sink.write_all(&(events.len() as u64).to_le_bytes())?;
    let mut record = [0u8; EVENT_RECORD_BYTES as usize];
    for e in events {
        record[0..8].copy_from_slice(&e.t.to_le_bytes());
        record[8..10].copy_from_slice(&e.x.to_le_bytes());
        record[10..12].copy_from_slice(&e.y.to_le_bytes());
        record[12] = e.polarity.as_u8();
        record[13] = 0;
        sink.write_all(&record)?;
    }
    Ok(EVT_HEADER_BYTES + events.len() as u64 * EVENT_RECORD_BYTES)
}

/// Reads an EVT1 stream back: `(width, height, events)`.
pub fn read_events<R: Read>(source: R) -> Result<(u16, u16, Vec<Event>)> {
    let mut r = CountingReader::new(source);
    r.magic(EVT_MAGIC)?;
    r.version("EVT1")?;
    let width = r.u16_le()?;
    let height = r.u16_le()?;
    let count = r.u64_le()?;

    let mut events = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut record = [0u8; EVENT_RECORD_BYTES as usize];
    let mut prev_key: Option<(u64, u16, u16, u8)> = None;
    for i in 0..count {
        r.fill(&mut record)?;
        let t = u64::from_le_bytes(record[0..8].try_into().unwrap());
        let x = u16::from_le_bytes(record[8..10].try_into().unwrap());
        let y = u16::from_le_bytes(record[10..12].try_into().unwrap());
        let polarity = Polarity::from_u8(record[12]).ok_or_else(|| {
            Error::Malformed(format!("record {i}: invalid polarity {}", record[12]))
        })?;
        if x >= width || y >= height {
            return Err(Error::CoordOutOfBounds { x, y, width, height });
        }
        let e = Event { t, x, y, polarity };
        if let Some(prev) = prev_key {
            if prev > e.sort_key() {
                return Err(Error::OrderViolation { index: i });
            }
        }
        prev_key = Some(e.sort_key());
        events.push(e);
    }
    Ok((width, height, events))
}

/// Writes a frame sequence; returns the byte count. Frame-rate and FoV
/// metadata are not part of the container.
pub fn write_frames<W: Write>(seq: &FrameSequence, mut sink: W) -> Result<u64> {
    seq.validate()?;
    let frame_count = u32::try_from(seq.frames.len())
        .map_err(|_| Error::InvalidParameter("too many frames for FRM1".into()))?;
    sink.write_all(&FRM_MAGIC)?;
    sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
    sink.write_all(&seq.width.to_le_bytes())?;
    sink.write_all(&seq.height.to_le_bytes())?;
    sink.write_all(&frame_count.to_le_bytes())?;
    for frame in &seq.frames {
        sink.write_all(&frame.t_ns.to_le_bytes())?;
        sink.write_all(&frame.pixels)?;
    }
    Ok(FRM_HEADER_BYTES + seq.frames.len() as u64 * (8 + seq.pixel_count() as u64))
}

/// Reads a FRM1 file. The returned sequence carries no frame-rate or FoV
/// metadata.
pub fn read_frames<R: Read>(source: R) -> Result<FrameSequence> {
    let mut r = CountingReader::new(source);
    r.magic(FRM_MAGIC)?;
    r.version("FRM1")?;
    let width = r.u16_le()?;
    let height = r.u16_le()?;
    let frame_count = r.u32_le()?;
    let pixel_count = width as usize * height as usize;

    let mut frames = Vec::with_capacity(frame_count.min(1 << 20) as usize);
    let mut prev_t: Option<u64> = None;
    for i in 0..frame_count {
        let t_ns = r.u64_le()?;
        if let Some(prev) = prev_t {
            if t_ns <= prev {
                return Err(Error::NonMonotonicTimestamps { index: i as usize });
            }
        }
        prev_t = Some(t_ns);
        let mut pixels = vec![0u8; pixel_count];
        r.fill(&mut pixels)?;
        frames.push(Frame { t_ns, pixels });
    }
    Ok(FrameSequence {
        width,
        height,
        frame_rate_hz: None,
        fov_deg: None,
        frames,
    })
}

/// Writes one histogram tensor; returns the byte count.
pub fn write_histogram<W: Write>(h: &StackedHistogram, mut sink: W) -> Result<u64> {
    let channels = u16::try_from(h.channels())
        .map_err(|_| Error::InvalidParameter("too many channels for SHR1".into()))?;
    sink.write_all(&SHR_MAGIC)?;
    sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
    sink.write_all(&channels.to_le_bytes())?;
    sink.write_all(&h.spec.height.to_le_bytes())?;
    sink.write_all(&h.spec.width.to_le_bytes())?;
    sink.write_all(&h.window_start.to_le_bytes())?;
    sink.write_all(&h.spec.window_len_ns.to_le_bytes())?;
    sink.write_all(h.data())?;
    Ok(4 + 2 + 2 + 2 + 2 + 8 + 8 + h.data().len() as u64)
}

/// Reads one SHR1 tensor. The saturation ceiling is not stored; the returned
/// spec uses the maximum cell capacity.
pub fn read_histogram<R: Read>(source: R) -> Result<StackedHistogram> {
    let mut r = CountingReader::new(source);
    r.magic(SHR_MAGIC)?;
    r.version("SHR1")?;
    let channels = r.u16_le()?;
    let height = r.u16_le()?;
    let width = r.u16_le()?;
    let window_start = r.u64_le()?;
    let window_len = r.u64_le()?;
    if channels == 0 || channels % 2 != 0 {
        return Err(Error::Malformed(format!(
            "channel count {channels} is not an even polarity split"
        )));
    }
    let n_bins = u32::from(channels) / 2;
    let spec = RepresentationSpec::new(width, height)
        .with_window_len_ns(window_len)
        .with_n_bins(n_bins)
        .with_clip(u8::MAX);
    spec.validate()?;
    let mut data = vec![0u8; channels as usize * height as usize * width as usize];
    r.fill(&mut data)?;
    StackedHistogram::from_raw(spec, window_start, data)
}

pub fn write_events_file(events: &[Event], width: u16, height: u16, path: &Path) -> Result<u64> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = write_events(events, width, height, &mut w)?;
    w.flush()?;
    Ok(n)
}

pub fn read_events_file(path: &Path) -> Result<(u16, u16, Vec<Event>)> {
    read_events(BufReader::new(File::open(path)?))
}

pub fn write_frames_file(seq: &FrameSequence, path: &Path) -> Result<u64> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = write_frames(seq, &mut w)?;
    w.flush()?;
    Ok(n)
}

pub fn read_frames_file(path: &Path) -> Result<FrameSequence> {
    read_frames(BufReader::new(File::open(path)?))
}

pub fn write_histogram_file(h: &StackedHistogram, path: &Path) -> Result<u64> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = write_histogram(h, &mut w)?;
    w.flush()?;
    Ok(n)
}

pub fn read_histogram_file(path: &Path) -> Result<StackedHistogram> {
    read_histogram(BufReader::new(File::open(path)?))
}
