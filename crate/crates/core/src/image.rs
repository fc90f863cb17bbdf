//! Grayscale raster with intensities in `[0, 1]`, binary PGM (P5) I/O and
//! clamp-to-edge bilinear sampling.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major pixels.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput(format!("image is {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image border.
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[cy * self.width + cx]
    }

    /// Bilinear interpolation at a sub-pixel position. Pixel centers sit at
    /// integer coordinates; positions outside the image take the nearest
    /// border value.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as isize;
        let y0 = y.floor() as isize;
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.get_clamped(x0, y0);
        let p10 = self.get_clamped(x0 + 1, y0);
        let p01 = self.get_clamped(x0, y0 + 1);
        let p11 = self.get_clamped(x0 + 1, y0 + 1);
        let top = p00 + fx * (p10 - p00);
        let bottom = p01 + fx * (p11 - p01);
        top + fy * (bottom - top)
    }

    /// Rescales the width by `factor` (bilinear), leaving the height alone.
    /// The new width is `round(width * factor)`, at least 1.
    pub fn rescale_width(&self, factor: f64) -> Result<GrayImage> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidValue(format!(
                "width scale factor must be positive, got {factor}"
            )));
        }
        let new_width = ((self.width as f64 * factor).round() as usize).max(1);
        let ratio = self.width as f64 / new_width as f64;
        GrayImage::from_fn(new_width, self.height, |x, y| {
            let sx = (x as f64 + 0.5) * ratio - 0.5;
            self.sample_bilinear(sx, y as f64)
        })
    }

    /// Reads a binary PGM (P5). Both 8-bit and 16-bit (big-endian) samples
    /// are accepted; values are divided by maxval.
    pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
        let mut cursor = PgmCursor { bytes, pos: 0 };
        let magic = cursor.token()?;
        if magic != b"P5" {
            return Err(Error::format(1, "not a binary PGM (expected P5)"));
        }
        let width = cursor.number()?;
        let height = cursor.number()?;
        let maxval = cursor.number()?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::format(1, format!("invalid maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        cursor.pos += 1;
        let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
        let needed = width * height * bytes_per_sample;
        let data = bytes
            .get(cursor.pos..cursor.pos + needed)
            .ok_or_else(|| Error::format(1, "truncated PGM raster"))?;
        let max = maxval as f64;
        let pixels = if bytes_per_sample == 1 {
            data.iter().map(|&b| (b as f64 / max).min(1.0)).collect()
        } else {
            data.chunks_exact(2)
                .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64 / max).min(1.0))
                .collect()
        };
        GrayImage::new(width, height, pixels)
    }

    /// Writes an 8-bit binary PGM.
    pub fn write_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|&v| (v * 255.0).round() as u8));
        out
    }
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
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

    fn token(&mut self) -> Result<&[u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(1, "truncated PGM header"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize> {
        let token = self.token()?;
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(1, "non-numeric PGM header field"))
    }
}
