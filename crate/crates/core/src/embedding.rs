//! Unit-norm term embeddings, the cosine kernel and the `AMQE` binary format.
//!
//! File layout (all little-endian): magic `AMQE`, `u32` version (1), `u32`
//! dimension, `u64` record count, then one record per term sorted by code:
//! `u64` code followed by `dim` `f32` components.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dictionary, TermCode};

pub const MAGIC: &[u8; 4] = b"AMQE";
pub const FORMAT_VERSION: u32 = 1;

/// Allowed deviation of a stored vector's norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("non-finite component at index {0}")]
    NonFinite(usize),
    #[error("mean of composite vectors is the zero vector")]
    ZeroMean,
    #[error("no vectors to average")]
    Empty,
    #[error("vector for code {code} has norm {norm}, expected 1")]
    NotUnit { code: TermCode, norm: f64 },
    #[error("vector has norm {0}, expected 1")]
    NotUnitVector(f64),
    #[error("embedding file: {0}")]
    Format(String),
    #[error("embedding file truncated")]
    Truncated,
    #[error("dictionary code {0} has no embedding")]
    MissingCode(TermCode),
    #[error("embedding for code {0} is not in the dictionary")]
    ExtraCode(TermCode),
    #[error("duplicate embedding for code {0}")]
    DuplicateCode(TermCode),
    #[error("dimension must be at least {min}, got {got}")]
    BadDimension { min: usize, got: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A unit-norm vector with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Scales `raw` to unit Euclidean norm.
    pub fn normalize(raw: &[f64]) -> Result<Self, EmbeddingError> {
        if let Some(i) = raw.iter().position(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(i));
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbeddingError::ZeroVector);
        }
        Ok(EmbeddingVector(raw.iter().map(|x| x / norm).collect()))
    }

    /// Accepts components that are already unit norm within [`NORM_TOLERANCE`].
    pub fn from_unit(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(i));
        }
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EmbeddingError::NotUnitVector(norm));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity of two unit vectors, clamped to [-1, 1].
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(dot(&a.0, &b.0).clamp(-1.0, 1.0))
}

/// Componentwise mean of `vectors`, renormalized.
pub fn mean_composite(vectors: &[&EmbeddingVector]) -> Result<EmbeddingVector, EmbeddingError> {
    let first = vectors.first().ok_or(EmbeddingError::Empty)?;
    let dim = first.dim();
    let mut acc = vec![0.0; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                left: dim,
                right: v.dim(),
            });
        }
        for (a, x) in acc.iter_mut().zip(&v.0) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    // relative to unit inputs, a mean this short is cancellation noise
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(EmbeddingError::ZeroMean);
    }
    EmbeddingVector::normalize(&acc)
}

/// Embeddings for every term of a dictionary, stored row-major in code order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    codes: Vec<TermCode>,
    values: Vec<f64>,
}

impl EmbeddingStore {
    pub fn from_vectors(
        dim: usize,
        vectors: impl IntoIterator<Item = (TermCode, EmbeddingVector)>,
    ) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::BadDimension { min: 1, got: 0 });
        }
        let mut sorted = BTreeMap::new();
        for (code, v) in vectors {
            if v.dim() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    left: dim,
                    right: v.dim(),
                });
            }
            if sorted.insert(code, v).is_some() {
                return Err(EmbeddingError::DuplicateCode(code));
            }
        }
        let mut codes = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len() * dim);
        for (code, v) in sorted {
            codes.push(code);
            values.extend_from_slice(&v.0);
        }
        Ok(EmbeddingStore { dim, codes, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[TermCode] {
        &self.codes
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, code: TermCode) -> Option<EmbeddingVector> {
        self.codes
            .binary_search(&code)
            .ok()
            .map(|i| EmbeddingVector(self.row(i).to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermCode, &[f64])> {
        self.codes
            .iter()
            .enumerate()
            .map(move |(i, &c)| (c, self.row(i)))
    }

    /// Checks that the store has exactly one vector per dictionary code.
    pub fn check_coverage(&self, dictionary: &Dictionary) -> Result<(), EmbeddingError> {
        if let Some(code) = dictionary
            .codes()
            .find(|c| self.codes.binary_search(c).is_err())
        {
            return Err(EmbeddingError::MissingCode(code));
        }
        if let Some(&code) = self.codes.iter().find(|&&c| !dictionary.contains(c)) {
            return Err(EmbeddingError::ExtraCode(code));
        }
        Ok(())
    }

    /// Cosine of `probe` against every stored vector, in code order.
    pub fn score_all(
        &self,
        probe: &EmbeddingVector,
    ) -> Result<Vec<(TermCode, f64)>, EmbeddingError> {
        if probe.dim() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                left: self.dim,
                right: probe.dim(),
            });
        }
        Ok(self
            .iter()
            .map(|(code, row)| (code, dot(row, &probe.0).clamp(-1.0, 1.0)))
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.codes.len() as u64).to_le_bytes())?;
        for (code, row) in self.iter() {
            out.write_all(&code.0.to_le_bytes())?;
            for &x in row {
                out.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, EmbeddingError> {
        let mut header = [0u8; 20];
        read_exact(&mut input, &mut header)?;
        if &header[0..4] != MAGIC {
            return Err(EmbeddingError::Format("bad magic bytes".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(EmbeddingError::Format(format!(
                "unsupported version {version}"
            )));
        }
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(EmbeddingError::Format("dimension 0".into()));
        }
        let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
        let mut codes = Vec::new();
        let mut values = Vec::new();
        let mut record = vec![0u8; 8 + 4 * dim];
        for _ in 0..count {
            read_exact(&mut input, &mut record)?;
            let code = TermCode(u64::from_le_bytes(record[0..8].try_into().unwrap()));
            if let Some(&prev) = codes.last() {
                if code == prev {
                    return Err(EmbeddingError::DuplicateCode(code));
                }
                if code < prev {
                    return Err(EmbeddingError::Format(format!(
                        "records not sorted by code at {code}"
                    )));
                }
            }
            let start = values.len();
            for chunk in record[8..].chunks_exact(4) {
                values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
            }
            let row = &values[start..];
            if let Some(i) = row.iter().position(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite(i));
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(EmbeddingError::NotUnit { code, norm });
            }
            codes.push(code);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(EmbeddingError::Format(
                "trailing bytes after last record".into(),
            ));
        }
        Ok(EmbeddingStore { dim, codes, values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut buf = Vec::with_capacity(20 + self.codes.len() * (8 + 4 * self.dim));
        self.write_to(&mut buf)?;
        fs::write(path, buf)
    }

    /// Loads an embedding file and checks it covers `dictionary` exactly.
    pub fn load(path: impl AsRef<Path>, dictionary: &Dictionary) -> Result<Self, EmbeddingError> {
        let bytes = fs::read(path)?;
        let store = Self::read_from(bytes.as_slice())?;
        store.check_coverage(dictionary)?;
        Ok(store)
    }
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<(), EmbeddingError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => EmbeddingError::Truncated,
        _ => EmbeddingError::Io(e),
    })
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    dictionary: &Dictionary,
) -> Result<EmbeddingStore, EmbeddingError> {
    EmbeddingStore::load(path, dictionary)
}

pub fn save_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> io::Result<()> {
    store.save(path)
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded pseudo-random Gaussian direction for one code, rounded to storage
/// precision so that a saved and reloaded store is bitwise identical.
pub fn synth_vector(code: TermCode, dim: usize, seed: u64) -> EmbeddingVector {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(code.0)));
    let raw = gaussian_vector(&mut rng, dim);
    let unit = EmbeddingVector::normalize(&raw).expect("gaussian draw is non-zero");
    EmbeddingVector(unit.0.iter().map(|&x| x as f32 as f64).collect())
}

/// Box-Muller standard normal draws.
pub fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim + 1);
    while out.len() < dim {
        // (0, 1] keeps ln finite
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        out.push(r * theta.cos());
        out.push(r * theta.sin());
    }
    out.truncate(dim);
    out
}

/// Deterministic synthetic store covering `dictionary`; each vector depends
/// only on `(code, dim, seed)`.
pub fn synth_embeddings(
    dictionary: &Dictionary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingStore, EmbeddingError> {
    if dim < 2 {
        return Err(EmbeddingError::BadDimension { min: 2, got: dim });
    }
    EmbeddingStore::from_vectors(
        dim,
        dictionary
            .codes()
            .map(|code| (code, synth_vector(code, dim, seed))),
    )
}
