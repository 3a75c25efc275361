//! Binary archive formats.
//!
//! All integers are little-endian.
//!
//! * `CMA1` concept archive: magic, `u32 K`, `u32 S`, `u32 d`, then `K` name
//!   entries (`u16` length + UTF-8 bytes), then `K` mask payloads of
//!   `S * ceil(d / 8)` bytes each in name-table order.
//! * `NAM1` neuron mask: magic, `u32 S`, `u32 d`, one payload.
//! * `NAF1` raw activations: magic, `u32 S`, `u32 d`, `S * d` IEEE-754 `f32`
//!   values, sample-major.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use super::dataset::{ConceptDataset, NeuronMask, RawActivations};
use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};

pub const CONCEPT_MAGIC: &[u8; 4] = b"CMA1";
pub const NEURON_MAGIC: &[u8; 4] = b"NAM1";
pub const ACTIVATION_MAGIC: &[u8; 4] = b"NAF1";

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Accept concepts whose mask is all zeros instead of failing.
    pub allow_empty_concepts: bool,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Format {
                offset: self.pos,
                message: format!(
                    "truncated {what}: expected {n} bytes, found {}",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(Error::Format {
                offset: 0,
                message: format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(expected)
                ),
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format {
                offset: self.pos,
                message: format!(
                    "{} trailing bytes after payload",
                    self.bytes.len() - self.pos
                ),
            });
        }
        Ok(())
    }

    /// Reads one packed mask, checking the whole remaining length first so the
    /// error names the full expected size.
    fn payload(&mut self, samples: usize, features: usize, what: &str) -> Result<BitMatrix> {
        let len = samples
            .checked_mul(BitMatrix::bytes_per_sample(features))
            .ok_or_else(|| Error::Format {
                offset: self.pos,
                message: "payload size overflows".into(),
            })?;
        let start = self.pos;
        let bytes = self.take(len, what)?;
        BitMatrix::from_packed_bytes(samples, features, bytes).map_err(|e| match e {
            Error::Format { offset, message } => Error::Format {
                offset: start + offset,
                message,
            },
            other => other,
        })
    }
}

/// Detected file kind, by magic bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    ConceptArchive,
    NeuronMask,
    Activations,
}

pub fn sniff(bytes: &[u8]) -> Option<FileKind> {
    match bytes.get(..4)? {
        m if m == CONCEPT_MAGIC => Some(FileKind::ConceptArchive),
        m if m == NEURON_MAGIC => Some(FileKind::NeuronMask),
        m if m == ACTIVATION_MAGIC => Some(FileKind::Activations),
        _ => None,
    }
}

pub fn decode_concept_archive(bytes: &[u8], opts: LoadOptions) -> Result<ConceptDataset> {
    let mut r = Reader::new(bytes);
    r.magic(CONCEPT_MAGIC)?;
    let k = r.u32("concept count")? as usize;
    let s = r.u32("sample count")? as usize;
    let d = r.u32("feature count")? as usize;
    if k == 0 {
        return Err(Error::Format {
            offset: 4,
            message: "archive declares zero concepts".into(),
        });
    }
    let mut names = Vec::with_capacity(k.min(1 << 16));
    let mut seen = std::collections::HashSet::new();
    for i in 0..k {
        let at = r.pos;
        let len = r.u16("name length")? as usize;
        let raw = r.take(len, "concept name")?;
        let name = std::str::from_utf8(raw).map_err(|_| Error::Format {
            offset: at + 2,
            message: format!("concept name {i} is not valid UTF-8"),
        })?;
        if !seen.insert(name.to_owned()) {
            return Err(Error::Format {
                offset: at,
                message: format!("duplicate concept name `{name}`"),
            });
        }
        names.push(name.to_owned());
    }
    let bps = BitMatrix::bytes_per_sample(d);
    let expected = k as u128 * s as u128 * bps as u128;
    let remaining = (bytes.len() - r.pos) as u128;
    if remaining != expected {
        return Err(Error::Format {
            offset: r.pos,
            message: format!(
                "mask payload is {remaining} bytes, expected K*S*ceil(d/8) = {expected}"
            ),
        });
    }
    let mut masks = Vec::with_capacity(k);
    for name in &names {
        masks.push(r.payload(s, d, &format!("mask of `{name}`"))?);
    }
    r.finish()?;
    let dataset = ConceptDataset::new(names, masks)?;
    let empty = dataset.empty_concepts();
    if let Some(&first) = empty.first() {
        if opts.allow_empty_concepts {
            warn!(
                "{} concept(s) have empty masks, first is `{}`",
                empty.len(),
                dataset.name(first)
            );
        } else {
            return Err(Error::EmptyConcept(dataset.name(first).to_owned()));
        }
    }
    Ok(dataset)
}

pub fn encode_concept_archive(dataset: &ConceptDataset) -> Result<Vec<u8>> {
    let (s, d) = dataset.shape();
    let mut out = Vec::new();
    out.extend_from_slice(CONCEPT_MAGIC);
    out.extend_from_slice(&dim_u32(dataset.len(), "concept count")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(s, "sample count")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(d, "feature count")?.to_le_bytes());
    for name in dataset.names() {
        let len = u16::try_from(name.len()).map_err(|_| {
            Error::InvalidDataset(format!("concept name `{name}` longer than 65535 bytes"))
        })?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for mask in dataset.masks() {
        out.extend_from_slice(&mask.to_packed_bytes());
    }
    Ok(out)
}

pub fn decode_neuron_mask(bytes: &[u8]) -> Result<NeuronMask> {
    let mut r = Reader::new(bytes);
    r.magic(NEURON_MAGIC)?;
    let s = r.u32("sample count")? as usize;
    let d = r.u32("feature count")? as usize;
    let mask = r.payload(s, d, "neuron mask")?;
    r.finish()?;
    Ok(NeuronMask::new(mask))
}

pub fn encode_neuron_mask(neuron: &NeuronMask) -> Result<Vec<u8>> {
    let (s, d) = neuron.shape();
    let mut out = Vec::new();
    out.extend_from_slice(NEURON_MAGIC);
    out.extend_from_slice(&dim_u32(s, "sample count")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(d, "feature count")?.to_le_bytes());
    out.extend_from_slice(&neuron.mask().to_packed_bytes());
    Ok(out)
}

pub fn decode_activations(bytes: &[u8]) -> Result<RawActivations> {
    let mut r = Reader::new(bytes);
    r.magic(ACTIVATION_MAGIC)?;
    let s = r.u32("sample count")? as usize;
    let d = r.u32("feature count")? as usize;
    let n = s
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format {
            offset: 4,
            message: "activation count overflows".into(),
        })?;
    let raw = r.take(n, "activations")?;
    r.finish()?;
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    RawActivations::new(s, d, values)
}

pub fn encode_activations(raw: &RawActivations) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + raw.values.len() * 4);
    out.extend_from_slice(ACTIVATION_MAGIC);
    out.extend_from_slice(&dim_u32(raw.samples, "sample count")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(raw.features, "feature count")?.to_le_bytes());
    for v in &raw.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidDataset(format!("{what} {v} does not fit in u32")))
}

pub fn load_concept_archive(path: impl AsRef<Path>) -> Result<ConceptDataset> {
    load_concept_archive_with(path, LoadOptions::default())
}

pub fn load_concept_archive_with(
    path: impl AsRef<Path>,
    opts: LoadOptions,
) -> Result<ConceptDataset> {
    decode_concept_archive(&fs::read(path)?, opts)
}

pub fn write_concept_archive(dataset: &ConceptDataset, path: impl AsRef<Path>) -> Result<()> {
    write_all(path, &encode_concept_archive(dataset)?)
}

pub fn load_neuron_mask(path: impl AsRef<Path>) -> Result<NeuronMask> {
    decode_neuron_mask(&fs::read(path)?)
}

pub fn write_neuron_mask(neuron: &NeuronMask, path: impl AsRef<Path>) -> Result<()> {
    write_all(path, &encode_neuron_mask(neuron)?)
}

pub fn load_activations(path: impl AsRef<Path>) -> Result<RawActivations> {
    decode_activations(&fs::read(path)?)
}

pub fn write_activations(raw: &RawActivations, path: impl AsRef<Path>) -> Result<()> {
    write_all(path, &encode_activations(raw)?)
}

fn write_all(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}
