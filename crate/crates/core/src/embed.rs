//! Text embeddings and cosine similarity.
//!
//! The default embedder hashes character n-grams into a fixed number of
//! buckets with a sign hash, then L2-normalizes. It is deterministic for a
//! given `(text, config)` and needs no model files; anything implementing
//! [`Embedder`] can replace it.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::case::{Case, FeatureMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("vector must have positive dimension"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange { what: "vector entry".into(), value: *bad });
        }
        Ok(Vector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Cosine similarity in `[-1, 1]`; 0 when either operand has zero norm.
///
/// The denominator is `sqrt(|a|² |b|²)`, which makes `cosine(a, a)` exactly 1
/// and the function exactly symmetric.
pub fn cosine(a: &Vector, b: &Vector) -> Result<f64> {
    let dot = a.dot(b)?;
    let denom = (a.norm_sq() * b.norm_sq()).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedderConfig {
    pub dim: usize,
    pub ngram: usize,
    pub seed: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig { dim: 256, ngram: 3, seed: 0 }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::config(format!("embedder dim must be >= 2, got {}", self.dim)));
        }
        if self.ngram < 1 {
            return Err(Error::config("embedder ngram must be >= 1"));
        }
        Ok(())
    }

    /// Stable fingerprint stored in library files; embeddings from
    /// different configs are not comparable.
    pub fn digest(&self) -> String {
        let text = format!("hashing-v1 dim={} ngram={} seed={}", self.dim, self.ngram, self.seed);
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

pub trait Embedder {
    fn embed(&self, text: &str) -> Vector;
    fn dim(&self) -> usize;
    fn digest(&self) -> String;
}

#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    cfg: EmbedderConfig,
}

impl HashingEmbedder {
    pub fn new(cfg: EmbedderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(HashingEmbedder { cfg })
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.cfg
    }

    fn hash(&self, bytes: &[u8]) -> u64 {
        // FNV-1a with the seed folded into the offset basis
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // final avalanche so low bits depend on every byte
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
        h
    }

    fn bump(&self, acc: &mut [f64], gram: &str) {
        let h = self.hash(gram.as_bytes());
        let idx = (h % self.cfg.dim as u64) as usize;
        acc[idx] += if h >> 63 == 1 { -1.0 } else { 1.0 };
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, text: &str) -> Vector {
        let dim = self.cfg.dim;
        let mut acc = vec![0.0; dim];
        if text.is_empty() {
            return Vector(acc);
        }
        let chars: Vec<char> = text.chars().collect();
        if chars.len() <= self.cfg.ngram {
            self.bump(&mut acc, text);
        } else {
            for w in chars.windows(self.cfg.ngram) {
                let gram: String = w.iter().collect();
                self.bump(&mut acc, &gram);
            }
        }
        if acc.iter().all(|v| *v == 0.0) {
            // every gram cancelled out; fall back to the whole-text bucket
            let h = self.hash(text.as_bytes());
            acc[(h % dim as u64) as usize] = 1.0;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut acc {
            *v /= norm;
        }
        Vector(acc)
    }

    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn digest(&self) -> String {
        self.cfg.digest()
    }
}

pub fn embed(text: &str, cfg: &EmbedderConfig) -> Result<Vector> {
    Ok(HashingEmbedder::new(*cfg)?.embed(text))
}

/// Embeds a problem through its canonical rendering.
pub fn embed_problem(embedder: &dyn Embedder, problem: &FeatureMap) -> Vector {
    if problem.is_empty() {
        return Vector::zeros(embedder.dim());
    }
    embedder.embed(&problem.to_string())
}

/// Embeds a case. Only the problem component is embedded, since retrieval
/// compares queries against problems.
pub fn embed_case(embedder: &dyn Embedder, case: &Case) -> Vector {
    embed_problem(embedder, &case.problem)
}
