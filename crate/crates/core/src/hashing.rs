//! Hash-kernel projection of sparse PPR vectors into `dim` dimensions.
//!
//! # Hash function
//!
//! `hash32(seed, id)` is MurmurHash3_x86_32 over the four little-endian bytes
//! of the node id:
//!
//! ```text
//! k  = id
//! k *= 0xcc9e2d51; k = rotl(k, 15); k *= 0x1b873593
//! h  = seed ^ k;   h = rotl(h, 13); h = h * 5 + 0xe6546b64
//! h ^= 4
//! h ^= h >> 16; h *= 0x85ebca6b
//! h ^= h >> 13; h *= 0xc2b2ae35
//! h ^= h >> 16
//! ```
//!
//! (all arithmetic wrapping mod 2^32). The bucket of node `i` is
//! `hash32(seed_index, i) % dim`, and its sign is `+1` when the lowest bit of
//! `hash32(seed_sign, i)` is zero, `-1` otherwise.
//!
//! # Projection
//!
//! For every node `i` with `p(i) > 0`, in ascending node order,
//! `w[bucket(i)] += sign(i) * max(ln(p(i) * n), 0)`. Non-positive entries are
//! skipped.

use std::ops::{Add, Deref};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sparse::SparseVector;

const C1: u32 = 0xcc9e_2d51;
const C2: u32 = 0x1b87_3593;

#[inline]
fn fmix32(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x85eb_ca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2_ae35);
    h ^= h >> 16;
    h
}

#[inline]
fn mix_block(h: u32, mut k: u32) -> u32 {
    k = k.wrapping_mul(C1);
    k = k.rotate_left(15);
    k = k.wrapping_mul(C2);
    let h = h ^ k;
    h.rotate_left(13).wrapping_mul(5).wrapping_add(0xe654_6b64)
}

/// MurmurHash3_x86_32.
pub fn murmur3_32(key: &[u8], seed: u32) -> u32 {
    let mut h = seed;
    let mut blocks = key.chunks_exact(4);
    for block in &mut blocks {
        let k = u32::from_le_bytes([block[0], block[1], block[2], block[3]]);
        h = mix_block(h, k);
    }
    let tail = blocks.remainder();
    if !tail.is_empty() {
        let mut k = 0u32;
        for (i, &b) in tail.iter().enumerate() {
            k ^= u32::from(b) << (8 * i);
        }
        k = k.wrapping_mul(C1);
        k = k.rotate_left(15);
        k = k.wrapping_mul(C2);
        h ^= k;
    }
    h ^= key.len() as u32;
    fmix32(h)
}

#[inline]
pub fn hash32(seed: u32, id: NodeId) -> u32 {
    fmix32(mix_block(seed, id.0) ^ 4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashConfig {
    dim: usize,
    seed_index: u32,
    seed_sign: u32,
}

impl HashConfig {
    pub fn new(dim: usize, seed_index: u32, seed_sign: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        if seed_index == seed_sign {
            return Err(Error::InvalidParameter(
                "index and sign seeds must differ".into(),
            ));
        }
        Ok(HashConfig {
            dim,
            seed_index,
            seed_sign,
        })
    }

    /// Derives both seeds from one user seed; the sign seed is the index seed
    /// xor `0x9e3779b9`.
    pub fn from_seed(dim: usize, seed: u32) -> Result<Self> {
        Self::new(dim, seed, seed ^ 0x9e37_79b9)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed_index(&self) -> u32 {
        self.seed_index
    }

    pub fn seed_sign(&self) -> u32 {
        self.seed_sign
    }

    #[inline]
    pub fn h_index(&self, i: NodeId) -> usize {
        (hash32(self.seed_index, i) % self.dim as u32) as usize
    }

    #[inline]
    pub fn h_sign(&self, i: NodeId) -> f64 {
        if hash32(self.seed_sign, i) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, c: f64) -> EmbeddingVector {
        EmbeddingVector(self.0.iter().map(|x| c * x).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &EmbeddingVector, b: f64) -> EmbeddingVector {
        EmbeddingVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(v: Vec<f64>) -> Self {
        EmbeddingVector(v)
    }
}

impl Deref for EmbeddingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Add for &EmbeddingVector {
    type Output = EmbeddingVector;

    fn add(self, rhs: &EmbeddingVector) -> EmbeddingVector {
        self.combine(1.0, rhs, 1.0)
    }
}

/// Signed bucket sum of the given values, accumulated in iteration order.
pub fn hash_kernel(
    values: impl IntoIterator<Item = (NodeId, f64)>,
    cfg: &HashConfig,
) -> EmbeddingVector {
    let mut w = EmbeddingVector::zeros(cfg.dim());
    for (i, x) in values {
        if x != 0.0 {
            w.0[cfg.h_index(i)] += cfg.h_sign(i) * x;
        }
    }
    w
}

/// `max(ln(p * n), 0)`, or 0 for non-positive `p`.
#[inline]
pub fn log_scaled(p: f64, n: usize) -> f64 {
    if p > 0.0 {
        (p * n as f64).ln().max(0.0)
    } else {
        0.0
    }
}

/// Embeds a PPR estimate for a graph with `n` non-isolated nodes.
/// Contributions are summed in ascending node order.
pub fn project(p: &SparseVector, n: usize, cfg: &HashConfig) -> EmbeddingVector {
    let mut w = EmbeddingVector::zeros(cfg.dim());
    let scale = n as f64;
    p.for_each_ascending(|i, x| {
        let y = x * scale;
        if y > 1.0 {
            w.0[cfg.h_index(i)] += cfg.h_sign(i) * y.ln();
        }
    });
    w
}

/// Bucket and sign of every id below a bound, computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTable {
    cfg: HashConfig,
    /// `bucket << 1 | negative` per id.
    slots: Vec<u32>,
}

impl BucketTable {
    pub fn new(cfg: HashConfig) -> Self {
        BucketTable {
            cfg,
            slots: Vec::new(),
        }
    }

    pub fn config(&self) -> &HashConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Extends the table to cover ids `0..bound`.
    pub fn cover(&mut self, bound: usize) {
        for id in self.slots.len()..bound {
            let node = NodeId(id as u32);
            let negative = self.cfg.h_sign(node) < 0.0;
            self.slots
                .push((self.cfg.h_index(node) as u32) << 1 | u32::from(negative));
        }
    }

    #[inline]
    fn slot(&self, i: NodeId) -> (usize, f64) {
        match self.slots.get(i.index()) {
            Some(&s) => ((s >> 1) as usize, if s & 1 == 1 { -1.0 } else { 1.0 }),
            None => (self.cfg.h_index(i), self.cfg.h_sign(i)),
        }
    }

    /// Same result as [`project`], bit for bit.
    pub fn project(&self, p: &SparseVector, n: usize) -> EmbeddingVector {
        let mut w = EmbeddingVector::zeros(self.cfg.dim());
        let scale = n as f64;
        p.for_each_ascending(|i, x| {
            let y = x * scale;
            if y > 1.0 {
                let (bucket, sign) = self.slot(i);
                w.0[bucket] += sign * y.ln();
            }
        });
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from the C++ MurmurHash3 implementation.
    #[test]
    fn murmur_reference_vectors() {
        assert_eq!(fmix32(0), 0);
        assert_eq!(fmix32(1), 1364076727);
        assert_eq!(fmix32(5), 3423425485);
        assert_eq!(fmix32(2147483647), 4190899880);
        assert_eq!(fmix32(4294967295), 2180083513);

        assert_eq!(murmur3_32(b"t", 0), 3397902157);
        assert_eq!(murmur3_32(b"te", 0), 3988319771);
        assert_eq!(murmur3_32(b"tes", 0), 196677210);
        assert_eq!(murmur3_32(b"test", 0), 3127628307);
        assert_eq!(murmur3_32(b"tested", 0), 2247989476);
        assert_eq!(
            murmur3_32(b"8hv20cjwicnsj vw m000'.'.][][]...!!@3", 0),
            4212741639
        );
        assert_eq!(murmur3_32(b"t", 25436347), 960607349);
        assert_eq!(murmur3_32(b"te", 25436347), 2834341637);
        assert_eq!(murmur3_32(b"tes", 25436347), 1163171263);
        assert_eq!(murmur3_32(b"tested", 25436347), 3592599130);
        assert_eq!(
            murmur3_32(b"8hv20cjwicnsj vw m000'.'.][][]...!!@3", 25436347),
            2503360452
        );
    }

    #[test]
    fn node_hash_matches_byte_hash() {
        for id in [0u32, 1, 7, 255, 65_536, 123_456_789, u32::MAX] {
            for seed in [0u32, 42, 0xdead_beef] {
                assert_eq!(hash32(seed, NodeId(id)), murmur3_32(&id.to_le_bytes(), seed));
            }
        }
    }

    #[test]
    fn bucket_table_matches_project() {
        let cfg = HashConfig::from_seed(16, 9).unwrap();
        let mut table = BucketTable::new(cfg.clone());
        table.cover(300);
        assert_eq!(table.len(), 300);
        let mut hashed = SparseVector::new();
        let mut dense = SparseVector::new();
        for i in 0..400u32 {
            let x = f64::from(i % 17 + 1) / 500.0;
            if i % 3 == 0 {
                hashed.set(NodeId(i * 5), x);
            }
            dense.set(NodeId(i), x);
        }
        for p in [&hashed, &dense] {
            let a = project(p, 200, &cfg);
            let b = table.project(p, 200);
            assert_eq!(a.values(), b.values());
            assert!(!a.is_zero());
        }
    }

    #[test]
    fn config_validation() {
        assert!(HashConfig::new(0, 1, 2).is_err());
        assert!(HashConfig::new(8, 3, 3).is_err());
        let cfg = HashConfig::from_seed(8, 17).unwrap();
        assert_ne!(cfg.seed_index(), cfg.seed_sign());
    }

    #[test]
    fn dim_one_single_bucket() {
        let cfg = HashConfig::from_seed(1, 5).unwrap();
        assert!((0..1000).all(|i| cfg.h_index(NodeId(i)) == 0));
    }

    #[test]
    fn hashes_are_deterministic() {
        let cfg = HashConfig::from_seed(128, 99).unwrap();
        for i in 0..100 {
            assert_eq!(cfg.h_index(NodeId(i)), cfg.h_index(NodeId(i)));
            assert_eq!(cfg.h_sign(NodeId(i)), cfg.h_sign(NodeId(i)));
            assert_eq!(cfg.h_sign(NodeId(i)).powi(2), 1.0);
        }
    }

    #[test]
    fn buckets_are_balanced() {
        let cfg = HashConfig::from_seed(128, 2024).unwrap();
        let mut counts = [0usize; 128];
        for i in 0..100_000 {
            counts[cfg.h_index(NodeId(i))] += 1;
        }
        let expected = 100_000.0 / 128.0;
        let slack = 5.0 * f64::sqrt(expected);
        for c in counts {
            assert!((c as f64 - expected).abs() <= slack, "bucket count {c}");
        }
    }

    #[test]
    fn signs_are_balanced() {
        let cfg = HashConfig::from_seed(128, 2024).unwrap();
        let plus = (0..100_000)
            .filter(|&i| cfg.h_sign(NodeId(i)) > 0.0)
            .count();
        let frac = plus as f64 / 100_000.0;
        assert!((frac - 0.5).abs() <= 0.01, "fraction {frac}");
    }

    #[test]
    fn uniform_ppv_projects_to_zero() {
        let n = 10;
        let p: SparseVector = (0..n).map(|i| (NodeId(i), 1.0 / n as f64)).collect();
        let w = project(&p, n as usize, &HashConfig::from_seed(16, 1).unwrap());
        assert!(w.is_zero());
    }

    #[test]
    fn single_entry_projection() {
        let cfg = HashConfig::from_seed(8, 3).unwrap();
        let p: SparseVector = [(NodeId(7), 0.5)].into_iter().collect();
        let w = project(&p, 4, &cfg);
        let nonzero: Vec<usize> = (0..8).filter(|&i| w[i] != 0.0).collect();
        assert_eq!(nonzero, vec![cfg.h_index(NodeId(7))]);
        assert!((w[nonzero[0]].abs() - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(w[nonzero[0]].signum(), cfg.h_sign(NodeId(7)));
    }

    #[test]
    fn negative_entries_are_ignored() {
        let cfg = HashConfig::from_seed(8, 3).unwrap();
        let p: SparseVector = [(NodeId(1), -0.3), (NodeId(2), 0.5)].into_iter().collect();
        let q: SparseVector = [(NodeId(2), 0.5)].into_iter().collect();
        assert_eq!(project(&p, 10, &cfg), project(&q, 10, &cfg));
    }
}
