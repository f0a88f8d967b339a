//! Reversible modulation of prediction errors under a link vector.
//!
//! Magnitude `v <= n` owns the stego interval `[v + y_v, v + y_v + x_v]`.
//! The intervals tile `[0, n + Σx]` in order, so every stego magnitude in
//! that range names exactly one cover magnitude and one digit. Larger
//! magnitudes are left alone; the bins `n+1 ..= n+Σx` of the cover must be
//! empty so nothing collides with the shifted values.
//!
//! The message is framed as a 32-bit big-endian bit count followed by the
//! bits, read as one big integer `M` (most significant bit first), and
//! spread over the carriers as mixed-radix digits: the carrier with base
//! `b = x_v + 1` takes `M mod b` and `M` becomes `M div b`.

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cumulative_deviations, AbsErrorHistogram, LinkVector};

/// Width of the length header in bits.
pub const FRAME_HEADER_BITS: u64 = 32;

/// An ordered bit string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MessageBits(Vec<bool>);

impl MessageBits {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Unpacks bytes, most significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self(
            bytes
                .iter()
                .flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1 == 1))
                .collect(),
        )
    }

    /// Packs into bytes, most significant bit first. A trailing partial byte
    /// is padded with zeros.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &bit)| acc | ((bit as u8) << (7 - k)))
            })
            .collect()
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self((0..len).map(|_| rng.gen()).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Length on the wire, header included.
    pub fn framed_len(&self) -> u64 {
        FRAME_HEADER_BITS + self.0.len() as u64
    }

    /// The framed message as a big integer.
    pub fn to_framed_integer(&self) -> Result<BigUint> {
        let len = u32::try_from(self.0.len())
            .map_err(|_| Error::InvalidInput("message longer than 2^32 - 1 bits".into()))?;
        let header = (0..32).rev().map(|k| (len >> k) & 1 == 1);
        let framed: Vec<bool> = header.chain(self.0.iter().copied()).collect();
        let pad = (8 - framed.len() % 8) % 8;
        let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(framed).collect();
        Ok(BigUint::from_bytes_be(&MessageBits(padded).to_bytes()))
    }

    /// Inverse of [`MessageBits::to_framed_integer`].
    pub fn from_framed_integer(m: &BigUint) -> Result<Self> {
        if m.is_zero() {
            return Ok(Self::empty());
        }
        let total = m.bits();
        for k in 1..=FRAME_HEADER_BITS {
            if k > total {
                break;
            }
            let len = total - k;
            let header = m >> len;
            if header.bits() == k && header.to_u64() == Some(len) {
                let bits = (0..len).rev().map(|i| m.bit(i)).collect();
                return Ok(Self(bits));
            }
        }
        Err(Error::CorruptStream(format!(
            "frame header does not match the {total}-bit stream"
        )))
    }
}

impl From<Vec<bool>> for MessageBits {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

/// A concrete cover-to-stego mapping realising a link vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingMap {
    x: Vec<u32>,
    starts: Vec<u32>,
    /// For each stego magnitude in `0..=max_stego`, the cover magnitude.
    owner: Vec<u32>,
}

pub fn build_coding_map(x: &LinkVector) -> CodingMap {
    let x: Vec<u32> = if x.is_empty() {
        vec![0]
    } else {
        x.as_slice().to_vec()
    };
    let y = cumulative_deviations(&LinkVector::new(x.clone()));
    let starts: Vec<u32> = y.iter().enumerate().map(|(v, &yv)| v as u32 + yv as u32).collect();
    let mut owner = Vec::new();
    for (v, &xv) in x.iter().enumerate() {
        owner.extend(std::iter::repeat_n(v as u32, xv as usize + 1));
    }
    CodingMap { x, starts, owner }
}

impl CodingMap {
    /// Largest mapped cover magnitude.
    pub fn n(&self) -> u32 {
        self.x.len() as u32 - 1
    }

    pub fn link_vector(&self) -> LinkVector {
        LinkVector::new(self.x.clone())
    }

    /// Total number of extra links, which is also the number of reserved bins.
    pub fn shift(&self) -> u32 {
        self.x.iter().sum()
    }

    /// `n + Σx`, the largest stego magnitude an interval can reach.
    pub fn max_stego(&self) -> u32 {
        self.n() + self.shift()
    }

    /// Number of states a carrier of magnitude `v` can take.
    pub fn base(&self, v: u32) -> u32 {
        self.x.get(v as usize).map_or(1, |&xv| xv + 1)
    }

    /// Stego values available to cover magnitude `v`.
    pub fn interval(&self, v: u32) -> RangeInclusive<u32> {
        match self.x.get(v as usize) {
            Some(&xv) => {
                let s = self.starts[v as usize];
                s..=s + xv
            }
            None => v..=v,
        }
    }

    /// Maps a stego magnitude back to `(cover magnitude, digit)`.
    pub fn locate(&self, s: u32) -> (u32, u32) {
        match self.owner.get(s as usize) {
            Some(&v) => (v, s - self.starts[v as usize]),
            None => (s, 0),
        }
    }
}

/// `floor(log2 Π (x_v + 1)^{a_v})`, or 0 when the product is 1.
pub fn exact_capacity_bits(map: &CodingMap, hist: &AbsErrorHistogram) -> u64 {
    let mut product = BigUint::from(1u32);
    for (v, &xv) in map.x.iter().enumerate() {
        let a = hist.count(v);
        if xv > 0 && a > 0 {
            product *= num_traits::pow(BigUint::from(xv + 1), a as usize);
        }
    }
    product.bits() - 1
}

fn split_sign(e: i32) -> (u32, bool) {
    (e.unsigned_abs(), e < 0)
}

fn join_sign(magnitude: u32, negative: bool) -> i32 {
    let m = magnitude as i32;
    if negative {
        -m
    } else {
        m
    }
}

/// Embeds `message` into a sequence of signed prediction errors.
pub fn modulate(errors: &[i32], map: &CodingMap, message: &MessageBits) -> Result<Vec<i32>> {
    let n = map.n();
    let shift = map.shift();
    if let Some(bad) = errors
        .iter()
        .map(|e| e.unsigned_abs())
        .find(|&m| m > n && m <= n + shift)
    {
        return Err(Error::NonEmptyReservedBins { magnitude: bad });
    }
    let hist = AbsErrorHistogram::from_magnitudes(
        errors.iter().map(|e| e.unsigned_abs()).filter(|&m| m <= n),
    );
    let available = exact_capacity_bits(map, &hist);
    // An empty message is the integer 0 and fits any coding.
    let needed = message.framed_len();
    if !message.is_empty() && needed > available {
        return Err(Error::CapacityExceeded { needed, available });
    }

    let mut m = message.to_framed_integer()?;
    let mut out = Vec::with_capacity(errors.len());
    for &e in errors {
        let (v, negative) = split_sign(e);
        if v > n {
            out.push(e);
            continue;
        }
        let b = map.base(v);
        let digit = if b > 1 && !m.is_zero() {
            let (q, r) = m.div_rem(&BigUint::from(b));
            m = q;
            r.to_u32().expect("digit below base")
        } else {
            0
        };
        out.push(join_sign(map.interval(v).start() + digit, negative));
    }
    debug_assert!(m.is_zero());
    Ok(out)
}

/// Recovers the cover errors and the message from modulated errors.
pub fn demodulate(stego: &[i32], map: &CodingMap) -> Result<(Vec<i32>, MessageBits)> {
    let max_stego = map.max_stego();
    let mut cover = Vec::with_capacity(stego.len());
    let mut digits = Vec::new();
    for &s in stego {
        let (magnitude, negative) = split_sign(s);
        if magnitude > max_stego {
            cover.push(s);
            continue;
        }
        let (v, digit) = map.locate(magnitude);
        let b = map.base(v);
        if b > 1 {
            digits.push((digit, b));
        }
        cover.push(join_sign(v, negative && v > 0));
    }
    let mut m = BigUint::zero();
    for &(digit, b) in digits.iter().rev() {
        m = m * b + digit;
    }
    let message = MessageBits::from_framed_integer(&m)?;
    Ok((cover, message))
}
