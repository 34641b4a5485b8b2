//! Grayscale images, Scharr gradients, binarization and netpbm codecs.

use crate::geometry::Pixel;
use crate::model::EdgeClass;
use crate::{Error, Result};

/// Default binarization threshold on raw Scharr magnitude.
pub const DEFAULT_EDGE_THRESHOLD: f32 = 600.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::invalid(format!(
                "{width}x{height} image needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
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

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientImage {
    width: usize,
    height: usize,
    magnitude: Vec<f32>,
}

impl GradientImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.magnitude[y * self.width + x]
    }

    pub fn magnitudes(&self) -> &[f32] {
        &self.magnitude
    }

    pub fn max(&self) -> f32 {
        self.magnitude.iter().copied().fold(0.0, f32::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryEdgeImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryEdgeImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width * height != bits.len() {
            return Err(Error::invalid("bit count does not match image size"));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bit at (x, y); anything outside the image reads as no edge.
    pub fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.bits[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Scharr gradient magnitude `sqrt(gx² + gy²)` with the 3-10-3 kernel and
/// an unnormalized response. The outermost pixel ring is zero.
pub fn scharr_magnitude(img: &GrayImage) -> Result<GradientImage> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!(
            "Scharr needs at least 3x3 pixels, got {w}x{h}"
        )));
    }
    let mut magnitude = vec![0.0f32; w * h];
    let px = |x: usize, y: usize| i32::from(img.data[y * w + x]);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = 3 * (px(x + 1, y - 1) - px(x - 1, y - 1))
                + 10 * (px(x + 1, y) - px(x - 1, y))
                + 3 * (px(x + 1, y + 1) - px(x - 1, y + 1));
            let gy = 3 * (px(x - 1, y + 1) - px(x - 1, y - 1))
                + 10 * (px(x, y + 1) - px(x, y - 1))
                + 3 * (px(x + 1, y + 1) - px(x + 1, y - 1));
            magnitude[y * w + x] = ((gx * gx + gy * gy) as f32).sqrt();
        }
    }
    Ok(GradientImage {
        width: w,
        height: h,
        magnitude,
    })
}

/// Bit is set iff the magnitude reaches `t`.
pub fn threshold(grad: &GradientImage, t: f32) -> BinaryEdgeImage {
    BinaryEdgeImage {
        width: grad.width,
        height: grad.height,
        bits: grad.magnitude.iter().map(|&m| m >= t).collect(),
    }
}

/// Scharr followed by thresholding.
pub fn edge_image(img: &GrayImage, t: f32) -> Result<BinaryEdgeImage> {
    Ok(threshold(&scharr_magnitude(img)?, t))
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse_offset(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse_offset(start, format!("{what} out of range")))
    }
}

/// Decodes an ASCII (P2) or binary (P5) graymap with maxval ≤ 255.
/// Sample values are kept as stored, without rescaling to 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let ascii = match bytes.get(..2) {
        Some(b"P2") => true,
        Some(b"P5") => false,
        _ => return Err(Error::parse_offset(0, "not a P2/P5 graymap")),
    };
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")? as usize;
    let height = r.number("height")? as usize;
    let maxval_at = r.pos;
    let maxval = r.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse_offset(
            maxval_at,
            format!("unsupported maxval {maxval}"),
        ));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if ascii {
        for _ in 0..n {
            let at = r.pos;
            let v = r.number("sample")?;
            if v > maxval {
                return Err(Error::parse_offset(
                    at,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            data.push(v as u8);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(r.pos) {
            Some(c) if c.is_ascii_whitespace() => r.pos += 1,
            _ => return Err(Error::parse_offset(r.pos, "missing separator after maxval")),
        }
        let raster = bytes.get(r.pos..r.pos + n).ok_or_else(|| {
            Error::parse_offset(bytes.len(), format!("truncated raster, need {n} bytes"))
        })?;
        if let Some(i) = raster.iter().position(|&v| u32::from(v) > maxval) {
            return Err(Error::parse_offset(r.pos + i, "sample exceeds maxval"));
        }
        data.extend_from_slice(raster);
    }
    GrayImage::new(width, height, data)
}

/// Binary P5 with maxval 255.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn class_color(class: EdgeClass) -> [u8; 3] {
    match class {
        EdgeClass::Boundary => [0, 0, 255],
        EdgeClass::Occluding => [0, 255, 0],
        EdgeClass::Occluded => [255, 0, 0],
        EdgeClass::HighCurvature => [255, 255, 0],
    }
}

/// P6 color image of the photo in gray with classified edge pixels painted
/// in their class color. Later points overwrite earlier ones; pixels off
/// the image are skipped.
pub fn encode_ppm_overlay(photo: &GrayImage, classified: &[(Pixel, EdgeClass)]) -> Vec<u8> {
    let mut rgb: Vec<u8> = photo.data.iter().flat_map(|&g| [g, g, g]).collect();
    for &(px, class) in classified {
        if px.u < 0 || px.v < 0 || px.u as usize >= photo.width || px.v as usize >= photo.height {
            continue;
        }
        let i = 3 * (px.v as usize * photo.width + px.u as usize);
        rgb[i..i + 3].copy_from_slice(&class_color(class));
    }
    let mut out = format!("P6\n{} {}\n255\n", photo.width, photo.height).into_bytes();
    out.extend_from_slice(&rgb);
    out
}
