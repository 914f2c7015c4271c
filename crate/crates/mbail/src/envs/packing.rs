//! Packing sets of sign vectors with small pairwise correlation.
//!
//! Sign vectors in `{-1, +1}^d` are stored as `u64` bitmasks, bit `i` set
//! meaning coordinate `i` equals `+1`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inner product of two sign vectors given as bitmasks.
pub fn sign_dot(x: u64, y: u64, d: usize) -> i64 {
    let agree = d as i64 - (x ^ y).count_ones() as i64;
    let disagree = (x ^ y).count_ones() as i64;
    agree - disagree
}

/// L1 distance between two sign vectors: 2 times the Hamming distance.
pub fn sign_l1(x: u64, y: u64) -> i64 {
    2 * (x ^ y).count_ones() as i64
}

/// Expands a bitmask into a `±1` vector.
pub fn sign_vec(x: u64, d: usize) -> Vec<f64> {
    (0..d).map(|i| if (x >> i) & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

/// A set of sign vectors whose pairwise inner products are at most
/// `d * gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingSet {
    pub dim: usize,
    pub gamma: f64,
    pub vectors: Vec<u64>,
}

impl PackingSet {
    /// Target cardinality for the sampled construction:
    /// `ceil(exp(d * gamma^2 / 4)) - 1`.
    pub fn target_size(dim: usize, gamma: f64) -> usize {
        let raw = (dim as f64 * gamma * gamma / 4.0).exp().ceil() as usize;
        raw.saturating_sub(1)
    }

    /// Builds a packing set for dimension `dim` with correlation bound
    /// `gamma`. Dimensions up to 16 are handled by an exhaustive greedy scan
    /// over all bitmasks; larger dimensions use seeded rejection sampling
    /// aimed at the target cardinality with a retry cap of 100 times the
    /// target.
    pub fn build(dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if dim == 0 || dim > 64 {
            return Err(Error::Validation(format!("packing dimension {dim} out of range")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Validation(format!("gamma {gamma} out of [0, 1]")));
        }
        let cap = (dim as f64 * gamma).floor() as i64;
        if dim <= 16 {
            let mut vectors: Vec<u64> = Vec::new();
            for x in 0..(1u64 << dim) {
                if vectors.iter().all(|&y| sign_dot(x, y, dim) <= cap) {
                    vectors.push(x);
                }
            }
            return Ok(Self { dim, gamma, vectors });
        }
        let target = Self::target_size(dim, gamma);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors: Vec<u64> = Vec::new();
        let mut attempts = 0usize;
        let max_attempts = 100 * target.max(1);
        while vectors.len() < target && attempts < max_attempts {
            attempts += 1;
            let mask = if dim == 64 { u64::MAX } else { (1u64 << dim) - 1 };
            let x = rng.gen::<u64>() & mask;
            if vectors.iter().all(|&y| sign_dot(x, y, dim) <= cap) {
                vectors.push(x);
            }
        }
        if vectors.len() < target {
            return Err(Error::PackingConstruction { achieved: vectors.len(), target });
        }
        Ok(Self { dim, gamma, vectors })
    }

    /// Exhaustive greedy set under the stronger cap `<x, x'> <= 0`, which
    /// gives `|x - x'|_1 >= d` between distinct members. Only supported for
    /// `dim <= 16`.
    pub fn build_separated(dim: usize) -> Result<Self> {
        if dim == 0 || dim > 16 {
            return Err(Error::Validation(format!(
                "separated packing dimension {dim} outside 1..=16"
            )));
        }
        let mut vectors: Vec<u64> = Vec::new();
        for x in 0..(1u64 << dim) {
            if vectors.iter().all(|&y| sign_dot(x, y, dim) <= 0) {
                vectors.push(x);
            }
        }
        Ok(Self { dim, gamma: 0.0, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Verifies the pairwise correlation bound directly.
    pub fn verify(&self) -> bool {
        let cap = (self.dim as f64 * self.gamma).floor() as i64;
        for (i, &x) in self.vectors.iter().enumerate() {
            for &y in &self.vectors[i + 1..] {
                if sign_dot(x, y, self.dim) > cap {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_dot_matches_expansion() {
        let d = 7;
        for (x, y) in [(0u64, 0u64), (0b1010101, 0b0101010), (0b1111111, 0b1110000), (5, 99)] {
            let (x, y) = (x & ((1 << d) - 1), y & ((1 << d) - 1));
            let vx = sign_vec(x, d);
            let vy = sign_vec(y, d);
            let expect: f64 = vx.iter().zip(&vy).map(|(a, b)| a * b).sum();
            assert_eq!(sign_dot(x, y, d) as f64, expect);
        }
    }

    #[test]
    fn l1_is_twice_hamming() {
        assert_eq!(sign_l1(0b1011, 0b0010), 2 * 2);
        assert_eq!(sign_l1(7, 7), 0);
    }

    #[test]
    fn small_dims_verify_and_are_nontrivial() {
        for d in [2usize, 4, 8, 12] {
            let p = PackingSet::build(d, 0.5, 0).unwrap();
            assert!(p.verify(), "d={d}");
            assert!(p.len() >= 2, "d={d} gave {}", p.len());
        }
    }

    #[test]
    fn sampled_dim_is_deterministic_per_seed() {
        let a = PackingSet::build(24, 0.5, 11).unwrap();
        let b = PackingSet::build(24, 0.5, 11).unwrap();
        assert_eq!(a.vectors, b.vectors);
        assert!(a.verify());
        assert_eq!(a.len(), PackingSet::target_size(24, 0.5));
    }

    #[test]
    fn separated_sets_have_l1_at_least_d() {
        for d in [2usize, 3, 4, 6] {
            let p = PackingSet::build_separated(d).unwrap();
            assert!(p.verify(), "d={d}");
            for (i, &x) in p.vectors.iter().enumerate() {
                for &y in &p.vectors[i + 1..] {
                    assert!(sign_l1(x, y) >= d as i64);
                }
            }
        }
    }

    #[test]
    fn target_size_formula() {
        // exp(64 / 16) = e^4 = 54.598, ceil 55, minus 1.
        assert_eq!(PackingSet::target_size(64, 0.5), 54);
    }
}
