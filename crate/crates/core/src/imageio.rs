//! PGM (P2/P5) codec and the fixed-DPG 14-bit to 8-bit conversion.
//!
//! Thermal frames arrive as 14-bit graylevels where one step is a fixed
//! temperature increment (degrees per graylevel, DPG). [`scale_dpg`] maps
//! them to 8 bits around the frame median with a constant factor, so the
//! output DPG is the same for every frame of a sequence regardless of the
//! scene's temperature span.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degrees Celsius per raw graylevel of the thermal sensor.
pub const RAW_DPG: f64 = 0.01;

/// Largest sample of a 14-bit raw frame.
pub const MAX_14BIT: u16 = 16383;

/// Raw sensor frame of 16-bit graylevels (14 significant bits in practice).
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    width: usize,
    height: usize,
    data: Vec<u16>,
    dpg: f64,
}

impl RawFrame {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        Self::with_dpg(width, height, data, RAW_DPG)
    }

    pub fn with_dpg(width: usize, height: usize, data: Vec<u16>, dpg: f64) -> Result<Self> {
        check_len(width, height, data.len())?;
        if !(dpg.is_finite() && dpg > 0.0) {
            return Err(Error::param(format!("dpg must be positive, got {dpg}")));
        }
        Ok(Self {
            width,
            height,
            data,
            dpg,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn dpg(&self) -> f64 {
        self.dpg
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }
}

/// 8-bit grayscale frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    match width.checked_mul(height) {
        Some(n) if n == len => Ok(()),
        _ => Err(Error::param(format!(
            "data length {len} does not match {width}x{height}"
        ))),
    }
}

/// Either kind of frame a PGM file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Raw(RawFrame),
    Gray(GrayFrame),
}

impl Frame {
    pub fn width(&self) -> usize {
        match self {
            Frame::Raw(f) => f.width,
            Frame::Gray(f) => f.width,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Frame::Raw(f) => f.height,
            Frame::Gray(f) => f.height,
        }
    }
}

impl From<RawFrame> for Frame {
    fn from(f: RawFrame) -> Self {
        Frame::Raw(f)
    }
}

impl From<GrayFrame> for Frame {
    fn from(f: GrayFrame) -> Self {
        Frame::Gray(f)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_ws_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| Error::pgm(start, format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.bytes.len() {
                Error::pgm(start, format!("truncated while reading {what}"))
            } else {
                Error::pgm(start, format!("expected decimal {what}"))
            });
        }
        if let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_whitespace() && b != b'#' {
                return Err(Error::pgm(self.pos, format!("unexpected byte after {what}")));
            }
        }
        Ok(value)
    }
}

/// Parses a P2 or P5 PGM image.
///
/// Returns [`Frame::Gray`] when maxval fits in a byte and [`Frame::Raw`]
/// otherwise. Binary samples wider than a byte are read most significant
/// byte first.
pub fn read_pgm(bytes: &[u8]) -> Result<Frame> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(_) => return Err(Error::pgm(0, "bad magic, expected P2 or P5")),
        None => return Err(Error::pgm(0, "truncated magic")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        Some(_) => return Err(Error::pgm(2, "bad magic, expected P2 or P5")),
        None => return Err(Error::pgm(2, "truncated header")),
    }

    cur.skip_ws_and_comments();
    let width_at = cur.pos;
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(Error::pgm(width_at, "zero image dimension"));
    }
    cur.skip_ws_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::pgm(maxval_at, format!("maxval {maxval} out of range 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::pgm(width_at, "image dimensions overflow"))?;

    let mut samples: Vec<u16> = Vec::with_capacity(count.min(bytes.len()));
    if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::pgm(cur.pos, "truncated header")),
        }
        let wide = maxval > 255;
        let sample_bytes = if wide { 2 } else { 1 };
        let needed = count * sample_bytes;
        let raster = &bytes[cur.pos..];
        if raster.len() < needed {
            return Err(Error::pgm(
                bytes.len(),
                format!("truncated payload: need {needed} bytes, have {}", raster.len()),
            ));
        }
        for i in 0..count {
            let v = if wide {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]])
            } else {
                u16::from(raster[i])
            };
            if u64::from(v) > maxval {
                return Err(Error::pgm(
                    cur.pos + i * sample_bytes,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            samples.push(v);
        }
    } else {
        for _ in 0..count {
            let at = cur.pos;
            let v = cur.number("sample")?;
            if v > maxval {
                return Err(Error::pgm(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v as u16);
        }
    }

    if maxval <= 255 {
        let data = samples.into_iter().map(|v| v as u8).collect();
        Ok(Frame::Gray(GrayFrame::new(width, height, data)?))
    } else {
        Ok(Frame::Raw(RawFrame::new(width, height, samples)?))
    }
}

/// Encodes a frame as binary P5.
///
/// Gray frames use maxval 255. Raw frames use 16383 when every sample fits
/// in 14 bits and 65535 otherwise, so decoding always reproduces the data.
pub fn write_pgm(frame: &Frame) -> Result<Vec<u8>> {
    if frame.width() == 0 || frame.height() == 0 {
        return Err(Error::EmptyFrame);
    }
    let mut out = Vec::new();
    match frame {
        Frame::Gray(f) => {
            out.extend_from_slice(format!("P5\n{} {}\n255\n", f.width, f.height).as_bytes());
            out.extend_from_slice(&f.data);
        }
        Frame::Raw(f) => {
            let max = f.data.iter().copied().max().unwrap_or(0);
            let maxval = if max <= MAX_14BIT { MAX_14BIT } else { u16::MAX };
            out.extend_from_slice(format!("P5\n{} {}\n{}\n", f.width, f.height, maxval).as_bytes());
            out.reserve(f.data.len() * 2);
            for v in &f.data {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
    }
    Ok(out)
}

/// Linear map from raw graylevels to 8 bits around the frame median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleConfig {
    pub factor: f64,
    pub offset: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            offset: 127.0,
        }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.factor.is_finite() && self.factor > 0.0) {
            return Err(Error::param(format!("scale factor must be > 0, got {}", self.factor)));
        }
        if !(0.0..=255.0).contains(&self.offset) {
            return Err(Error::param(format!(
                "scale offset must be in [0, 255], got {}",
                self.offset
            )));
        }
        Ok(())
    }

    /// DPG of the 8-bit output for an input of the given DPG.
    pub fn output_dpg(&self, input_dpg: f64) -> f64 {
        input_dpg / self.factor
    }
}

/// Lower median: for an even count the smaller of the two middle samples.
pub fn lower_median(data: &[u16]) -> Option<u16> {
    if data.is_empty() {
        return None;
    }
    let mut buf = data.to_vec();
    let mid = (buf.len() - 1) / 2;
    let (_, m, _) = buf.select_nth_unstable(mid);
    Some(*m)
}

/// Converts a raw frame to 8 bits with a fixed DPG.
///
/// `out = clamp(round((raw - median) * factor + offset), 0, 255)`, rounding
/// half away from zero.
pub fn scale_dpg(frame: &RawFrame, cfg: &ScaleConfig) -> Result<GrayFrame> {
    cfg.validate()?;
    let median = f64::from(lower_median(&frame.data).ok_or(Error::EmptyFrame)?);
    let data = frame
        .data
        .iter()
        .map(|&r| {
            let v = ((f64::from(r) - median) * cfg.factor + cfg.offset).round();
            v.clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayFrame::new(frame.width, frame.height, data)
}

/// Temperature span of the frame in degrees Celsius.
pub fn temperature_range(frame: &RawFrame) -> Result<f64> {
    let min = frame.data.iter().copied().min().ok_or(Error::EmptyFrame)?;
    let max = frame.data.iter().copied().max().ok_or(Error::EmptyFrame)?;
    Ok(f64::from(max - min) * frame.dpg)
}
