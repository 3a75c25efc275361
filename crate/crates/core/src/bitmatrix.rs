//! Sample-major bit-packed binary matrices.
//!
//! Every mask in the crate (concept annotations, neuron activations, label
//! evaluations) is an `S x d` binary matrix. Internally each sample occupies
//! `ceil(d / 64)` little-endian `u64` words, so bit `j` of a sample lives in
//! word `j / 64` at position `j % 64`. Serialized payloads use the byte view of
//! the same layout: `ceil(d / 8)` bytes per sample, least-significant bit first.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    samples: usize,
    features: usize,
    words_per_sample: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(samples: usize, features: usize) -> Self {
        let words_per_sample = features.div_ceil(64);
        Self {
            samples,
            features,
            words_per_sample,
            words: vec![0; samples * words_per_sample],
        }
    }

    pub fn ones(samples: usize, features: usize) -> Self {
        let mut m = Self::zeros(samples, features);
        m.words.iter_mut().for_each(|w| *w = u64::MAX);
        m.clear_padding();
        m
    }

    /// Builds a matrix from per-sample boolean rows.
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let features = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), features);
        for (x, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != features {
                return Err(Error::DimensionMismatch {
                    expected: (rows.len(), features),
                    actual: (rows.len(), row.len()),
                });
            }
            for (j, &bit) in row.iter().enumerate() {
                if bit {
                    m.set(x, j, true);
                }
            }
        }
        Ok(m)
    }

    /// Number of payload bytes a single sample occupies on disk.
    pub fn bytes_per_sample(features: usize) -> usize {
        features.div_ceil(8)
    }

    /// Parses a packed payload. Non-zero padding bits are rejected so that
    /// serialization stays canonical.
    pub fn from_packed_bytes(samples: usize, features: usize, bytes: &[u8]) -> Result<Self> {
        let bps = Self::bytes_per_sample(features);
        let expected = samples * bps;
        if bytes.len() != expected {
            return Err(Error::Format {
                offset: 0,
                message: format!(
                    "payload length {} does not match S*ceil(d/8) = {expected}",
                    bytes.len()
                ),
            });
        }
        let mut m = Self::zeros(samples, features);
        let tail_bits = features % 8;
        for x in 0..samples {
            let row = &bytes[x * bps..(x + 1) * bps];
            if tail_bits != 0 {
                let last = row[bps - 1];
                if last >> tail_bits != 0 {
                    return Err(Error::Format {
                        offset: x * bps + bps - 1,
                        message: format!("non-zero padding bits in sample {x}"),
                    });
                }
            }
            let dst = m.sample_words_mut(x);
            for (i, &b) in row.iter().enumerate() {
                dst[i / 8] |= u64::from(b) << (8 * (i % 8));
            }
        }
        Ok(m)
    }

    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let bps = Self::bytes_per_sample(self.features);
        let mut out = Vec::with_capacity(self.samples * bps);
        for x in 0..self.samples {
            let words = self.sample_words(x);
            out.extend(words.iter().flat_map(|w| w.to_le_bytes()).take(bps));
        }
        out
    }

    #[inline]
    pub fn samples(&self) -> usize {
        self.samples
    }

    #[inline]
    pub fn features(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.samples, self.features)
    }

    #[inline]
    pub fn words_per_sample(&self) -> usize {
        self.words_per_sample
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn sample_words(&self, x: usize) -> &[u64] {
        &self.words[x * self.words_per_sample..(x + 1) * self.words_per_sample]
    }

    #[inline]
    fn sample_words_mut(&mut self, x: usize) -> &mut [u64] {
        &mut self.words[x * self.words_per_sample..(x + 1) * self.words_per_sample]
    }

    #[inline]
    pub fn get(&self, x: usize, j: usize) -> bool {
        debug_assert!(x < self.samples && j < self.features);
        self.words[x * self.words_per_sample + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, j: usize, value: bool) {
        assert!(
            x < self.samples && j < self.features,
            "bit ({x}, {j}) out of range"
        );
        let w = &mut self.words[x * self.words_per_sample + j / 64];
        if value {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn sample_count_ones(&self, x: usize) -> u32 {
        self.sample_words(x).iter().map(|w| w.count_ones()).sum()
    }

    /// Per-sample popcounts.
    pub fn row_counts(&self) -> Vec<u32> {
        (0..self.samples)
            .map(|x| self.sample_count_ones(x))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Per-sample popcount of `self AND other`, without materializing the result.
    pub fn and_row_counts(&self, other: &BitMatrix) -> Vec<u32> {
        debug_assert_eq!(self.shape(), other.shape());
        self.words
            .chunks(self.words_per_sample.max(1))
            .zip(other.words.chunks(self.words_per_sample.max(1)))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum())
            .take(self.samples)
            .collect()
    }

    pub fn and_count(&self, other: &BitMatrix) -> u64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a & b).count_ones()))
            .sum()
    }

    pub fn or_count(&self, other: &BitMatrix) -> u64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a | b).count_ones()))
            .sum()
    }

    pub fn intersects(&self, other: &BitMatrix) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn or_assign(&mut self, other: &BitMatrix) {
        self.words
            .iter_mut()
            .zip(&other.words)
            .for_each(|(a, b)| *a |= b);
    }

    pub fn and_assign(&mut self, other: &BitMatrix) {
        self.words
            .iter_mut()
            .zip(&other.words)
            .for_each(|(a, b)| *a &= b);
    }

    pub fn and_not_assign(&mut self, other: &BitMatrix) {
        self.words
            .iter_mut()
            .zip(&other.words)
            .for_each(|(a, b)| *a &= !b);
    }

    pub fn and(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = self.clone();
        out.and_assign(other);
        out
    }

    pub fn or(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = self.clone();
        out.or_assign(other);
        out
    }

    pub fn and_not(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = self.clone();
        out.and_not_assign(other);
        out
    }

    pub fn not(&self) -> BitMatrix {
        let mut out = self.clone();
        out.words.iter_mut().for_each(|w| *w = !*w);
        out.clear_padding();
        out
    }

    /// Iterates over `(sample, feature)` positions of set bits.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.samples).flat_map(move |x| {
            self.sample_words(x)
                .iter()
                .enumerate()
                .flat_map(move |(wi, &w)| {
                    let mut w = w;
                    std::iter::from_fn(move || {
                        if w == 0 {
                            return None;
                        }
                        let b = w.trailing_zeros() as usize;
                        w &= w - 1;
                        Some((x, wi * 64 + b))
                    })
                })
        })
    }

    fn clear_padding(&mut self) {
        let rem = self.features % 64;
        if rem == 0 || self.words_per_sample == 0 {
            return;
        }
        let mask = (1u64 << rem) - 1;
        let wps = self.words_per_sample;
        for x in 0..self.samples {
            self.words[x * wps + wps - 1] &= mask;
        }
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.samples, self.features)?;
        for x in 0..self.samples.min(16) {
            let row: String = (0..self.features.min(96))
                .map(|j| if self.get(x, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}
