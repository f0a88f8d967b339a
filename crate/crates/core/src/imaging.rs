//! Greyscale images, the chequered context/query split and the end-to-end
//! embed and extract pipeline.
//!
//! Interior pixels with `(row + col)` even are query pixels and carry the
//! message. Everything else, the border included, is context and is never
//! touched, so the decoder sees the same predictions as the encoder. Query
//! pixels are visited in raster order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codec::{build_coding_map, demodulate, modulate, MessageBits};
use crate::error::{Error, Result};
use crate::model::{AbsErrorHistogram, LinkVector};

/// An 8-bit greyscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Pgm {
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&b) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if b == b'\n' || b == b'\r' {
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

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm {
                offset: start,
                msg: format!("{what} out of range"),
            })
    }
}

/// Parses a binary (P5) PGM with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut cur = Cursor { bytes, pos: 0 };
    if !bytes.starts_with(b"P5") {
        return Err(cur.err("missing P5 magic number"));
    }
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_space();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Pgm {
            offset: maxval_at,
            msg: format!("maxval {maxval} unsupported, only 255"),
        });
    }
    if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(cur.err("expected a single whitespace before the raster"));
    }
    cur.pos += 1;
    if width == 0 || height == 0 {
        return Err(cur.err("zero image dimension"));
    }
    let need = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < need {
        return Err(Error::Pgm {
            offset: bytes.len(),
            msg: format!("truncated raster: expected {need} bytes, found {}", raster.len()),
        });
    }
    ImageGrid::new(width, height, raster[..need].to_vec())
}

pub fn write_pgm(grid: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.extend_from_slice(&grid.pixels);
    out
}

/// Context and query masks of a chequered split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelPartition {
    width: usize,
    height: usize,
    query: Vec<usize>,
}

impl PixelPartition {
    /// Raster indices of the query pixels, in scan order.
    pub fn query_indices(&self) -> &[usize] {
        &self.query
    }

    pub fn query_count(&self) -> usize {
        self.query.len()
    }

    pub fn context_count(&self) -> usize {
        self.width * self.height - self.query.len()
    }

    pub fn is_query(&self, row: usize, col: usize) -> bool {
        is_query_cell(self.width, self.height, row, col)
    }

    pub fn query_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.width * self.height];
        for &i in &self.query {
            mask[i] = true;
        }
        mask
    }
}

fn is_query_cell(width: usize, height: usize, row: usize, col: usize) -> bool {
    row > 0 && col > 0 && row + 1 < height && col + 1 < width && (row + col) % 2 == 0
}

pub fn split_chequered(grid: &ImageGrid) -> Result<PixelPartition> {
    let (width, height) = (grid.width, grid.height);
    if width < 3 || height < 3 {
        return Err(Error::ImageTooSmall { width, height });
    }
    let query = (1..height - 1)
        .flat_map(|r| (1..width - 1).map(move |c| (r, c)))
        .filter(|&(r, c)| (r + c) % 2 == 0)
        .map(|(r, c)| r * width + c)
        .collect();
    Ok(PixelPartition {
        width,
        height,
        query,
    })
}

/// Mean of the four orthogonal neighbours, rounded half up, for every query
/// pixel in scan order.
pub fn predict(grid: &ImageGrid, partition: &PixelPartition) -> Vec<u8> {
    let w = grid.width;
    let px = &grid.pixels;
    partition
        .query
        .par_iter()
        .map(|&i| {
            let sum = px[i - w] as u32 + px[i + w] as u32 + px[i - 1] as u32 + px[i + 1] as u32;
            ((sum + 2) / 4) as u8
        })
        .collect()
}

/// Signed prediction errors `q - q̃` of the query pixels.
pub fn prediction_errors(grid: &ImageGrid, partition: &PixelPartition) -> Vec<i32> {
    predict(grid, partition)
        .iter()
        .zip(&partition.query)
        .map(|(&p, &i)| grid.pixels[i] as i32 - p as i32)
        .collect()
}

pub fn abs_error_histogram(grid: &ImageGrid) -> Result<AbsErrorHistogram> {
    let partition = split_chequered(grid)?;
    Ok(AbsErrorHistogram::from_magnitudes(
        prediction_errors(grid, &partition)
            .into_iter()
            .map(i32::unsigned_abs),
    ))
}

/// Hides `message` in the query pixels of `cover`.
pub fn encode(cover: &ImageGrid, x: &LinkVector, message: &MessageBits) -> Result<ImageGrid> {
    let partition = split_chequered(cover)?;
    let preds = predict(cover, &partition);
    let errors: Vec<i32> = preds
        .iter()
        .zip(&partition.query)
        .map(|(&p, &i)| cover.pixels[i] as i32 - p as i32)
        .collect();
    let map = build_coding_map(x);
    let stego_errors = modulate(&errors, &map, message)?;
    let mut stego = cover.clone();
    for ((&p, &i), &e) in preds.iter().zip(&partition.query).zip(&stego_errors) {
        let value = p as i32 + e;
        if !(0..=255).contains(&value) {
            return Err(Error::EmbeddingOverflow { index: i, value });
        }
        stego.pixels[i] = value as u8;
    }
    Ok(stego)
}

/// Restores the cover and the message from a stego image.
pub fn decode(stego: &ImageGrid, x: &LinkVector) -> Result<(ImageGrid, MessageBits)> {
    let partition = split_chequered(stego)?;
    let preds = predict(stego, &partition);
    let errors: Vec<i32> = preds
        .iter()
        .zip(&partition.query)
        .map(|(&p, &i)| stego.pixels[i] as i32 - p as i32)
        .collect();
    let map = build_coding_map(x);
    let (cover_errors, message) = demodulate(&errors, &map)?;
    let mut cover = stego.clone();
    for ((&p, &i), &e) in preds.iter().zip(&partition.query).zip(&cover_errors) {
        let value = p as i32 + e;
        if !(0..=255).contains(&value) {
            return Err(Error::CorruptStream(format!(
                "restored pixel {i} would be {value}"
            )));
        }
        cover.pixels[i] = value as u8;
    }
    Ok((cover, message))
}

/// Mean squared error over all pixels and the PSNR in dB. Identical images
/// give a PSNR of `f64::INFINITY`.
pub fn mse_psnr(a: &ImageGrid, b: &ImageGrid) -> Result<(f64, f64)> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch {
            expected: a.pixels.len(),
            found: b.pixels.len(),
        });
    }
    let sse: u64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&p, &q)| {
            let d = p as i64 - q as i64;
            (d * d) as u64
        })
        .sum();
    let mse = sse as f64 / a.pixels.len() as f64;
    let psnr = if sse == 0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    };
    Ok((mse, psnr))
}

/// Smallest `n` keeping at least `mass` of the histogram in `0..=n` with
/// bins `n+1 ..= n+theta` empty.
pub fn choose_n(hist: &AbsErrorHistogram, theta: u32, mass: f64) -> usize {
    let total = hist.total() as f64;
    let mut acc = 0u64;
    for n in 0..hist.len() {
        acc += hist.count(n);
        let enough = total == 0.0 || acc as f64 >= mass * total;
        let gap_empty = (n + 1..=n + theta as usize).all(|m| hist.count(m) == 0);
        if enough && gap_empty {
            return n;
        }
    }
    hist.len() - 1
}

/// A smooth gradient with seeded noise, kept inside `[30, 225]` so moderate
/// embedding never leaves the pixel range.
pub fn synthetic_image(width: usize, height: usize, seed: u64, noise: u8) -> Result<ImageGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (angle.cos(), angle.sin());
    let ripple: f64 = rng.gen_range(0.0..12.0);
    let span = (width.max(height)).max(1) as f64;
    let amp = noise as i32;
    let mut pixels = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let (u, v) = (c as f64 / span, r as f64 / span);
            let base = 127.5
                + 70.0 * (dx * (u - 0.5) + dy * (v - 0.5))
                + ripple * (6.0 * u).sin() * (5.0 * v).cos();
            let jitter = rng.gen_range(-amp..=amp) + rng.gen_range(-amp..=amp);
            let value = (base.round() as i32 + jitter).clamp(30, 225);
            pixels.push(value as u8);
        }
    }
    ImageGrid::new(width, height, pixels)
}
