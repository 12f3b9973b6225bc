//! Per-vertex Flajolet-Martin register matrices.
//!
//! Each vertex owns `J` 8-bit registers, one per simulation, stored
//! contiguously so the diffusion kernel touches one cache run per vertex.
//! A register holds the leading-zero count of a 32-bit hash, so values stay
//! in `0..=32` and merging is a pairwise maximum.

use rayon::prelude::*;

use crate::hashing::murmur3_32;
use crate::{Error, Result};

/// Multiplicative correction factor for the arithmetic-mean cardinality
/// estimate. The mean of max-of-clz registers concentrates at
/// `log2(c) + 0.33..`, so `2^mean` overshoots the true cardinality `c` by a
/// factor of about `1.293 = 1/PHI`; scaling by `PHI` removes that bias.
pub const PHI: f64 = 0.77351;

/// Seed for hashing vertex IDs into register init values.
pub const VERTEX_HASH_SEED: u32 = 0x6d5a_56c1;
/// Seed for hashing simulation indices; distinct from the vertex seed so the
/// two streams are decorrelated.
pub const REGISTER_HASH_SEED: u32 = 0x3c69_b939;

fn hash_u32(x: u32, seed: u32) -> u32 {
    murmur3_32(&x.to_le_bytes(), seed)
}

/// Init value of register `(v, j)`: leading zeros of `hash(v) XOR hash(j)`.
pub fn init_register(v: u32, j: u32) -> u8 {
    (hash_u32(v, VERTEX_HASH_SEED) ^ hash_u32(j, REGISTER_HASH_SEED)).leading_zeros() as u8
}

/// n x J matrix of 8-bit FM registers; one row per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchMatrix {
    n: usize,
    j: usize,
    regs: Vec<u8>,
}

impl SketchMatrix {
    pub fn zeros(n: usize, j: usize) -> Self {
        SketchMatrix { n, j, regs: vec![0; n * j] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn row(&self, v: u32) -> &[u8] {
        &self.regs[v as usize * self.j..(v as usize + 1) * self.j]
    }

    pub fn row_mut(&mut self, v: u32) -> &mut [u8] {
        &mut self.regs[v as usize * self.j..(v as usize + 1) * self.j]
    }

    pub(crate) fn regs_mut(&mut self) -> &mut [u8] {
        &mut self.regs
    }

    /// Resets every register to its vertex/simulation init hash value, i.e.
    /// every vertex reaches exactly itself.
    pub fn init_vertex_registers(&mut self) {
        let j = self.j;
        let reg_hashes: Vec<u32> =
            (0..j as u32).map(|r| hash_u32(r, REGISTER_HASH_SEED)).collect();
        self.regs
            .par_chunks_mut(j)
            .enumerate()
            .for_each(|(v, row)| {
                let hv = hash_u32(v as u32, VERTEX_HASH_SEED);
                for (r, reg) in row.iter_mut().enumerate() {
                    *reg = (hv ^ reg_hashes[r]).leading_zeros() as u8;
                }
            });
    }
}

/// Pairwise maximum of two register vectors.
pub fn merge(a: &[u8], b: &[u8]) -> Result<Vec<u8>> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "register length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| x.max(y)).collect())
}

/// In-place variant of [`merge`].
pub fn merge_into(acc: &mut [u8], other: &[u8]) -> Result<()> {
    if acc.len() != other.len() {
        return Err(Error::validation(format!(
            "register length mismatch: {} vs {}",
            acc.len(),
            other.len()
        )));
    }
    for (x, &y) in acc.iter_mut().zip(other) {
        *x = (*x).max(y);
    }
    Ok(())
}

/// Cardinality estimate `2^mean(regs) * PHI`.
pub fn estimate(regs: &[u8]) -> f64 {
    estimate_from_sum(regs.iter().map(|&r| r as u64).sum(), regs.len())
}

/// Same estimate from a precomputed register sum.
pub fn estimate_from_sum(sum: u64, len: usize) -> f64 {
    let mean = sum as f64 / len as f64;
    mean.exp2() * PHI
}

/// Register sum of the pairwise maximum, without materializing it. The
/// estimate is a monotone function of this sum, so it doubles as an exact
/// argmax key.
pub fn merged_register_sum(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.max(y) as u64).sum()
}

/// `estimate(merge(a, b))` without the intermediate vector.
pub fn estimate_merged(a: &[u8], b: &[u8]) -> f64 {
    estimate_from_sum(merged_register_sum(a, b), a.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clz_extremes() {
        assert_eq!(0xffff_ffffu32.leading_zeros(), 0);
        assert_eq!(0x0000_0001u32.leading_zeros(), 31);
    }

    #[test]
    fn init_matches_definition() {
        let mut m = SketchMatrix::zeros(8, 4);
        m.init_vertex_registers();
        for v in 0..8u32 {
            for j in 0..4u32 {
                assert_eq!(m.row(v)[j as usize], init_register(v, j));
            }
        }
    }

    #[test]
    fn init_register_tail_is_geometric() {
        // fraction of (v, j) pairs with register >= k should be about 2^-k
        let mut counts = [0u64; 8];
        let total: u64 = 1_000_000;
        let j_dim = 100u32;
        for v in 0..(total / j_dim as u64) as u32 {
            for j in 0..j_dim {
                let r = init_register(v, j);
                for (k, c) in counts.iter_mut().enumerate() {
                    if r as usize >= k {
                        *c += 1;
                    }
                }
            }
        }
        for (k, &c) in counts.iter().enumerate() {
            let frac = c as f64 / total as f64;
            let expect = 0.5f64.powi(k as i32);
            assert!(
                (frac - expect).abs() < 0.01 + expect * 0.05,
                "k={k} frac={frac} expect={expect}"
            );
        }
    }

    #[test]
    fn merge_identity_and_idempotence() {
        let m = vec![3u8, 1, 7, 0];
        let zeros = vec![0u8; 4];
        assert_eq!(merge(&m, &zeros).unwrap(), m);
        assert_eq!(merge(&m, &m).unwrap(), m);
        assert_eq!(merge(&[3, 1], &[2, 5]).unwrap(), vec![3, 5]);
    }

    #[test]
    fn merge_length_mismatch_is_error() {
        assert!(merge(&[1, 2], &[1]).is_err());
        let mut acc = vec![1u8, 2];
        assert!(merge_into(&mut acc, &[1]).is_err());
    }

    #[test]
    fn estimate_constant_registers() {
        let zeros = vec![0u8; 16];
        assert!((estimate(&zeros) - PHI).abs() < 1e-9);
        let tens = vec![10u8; 16];
        assert!((estimate(&tens) - 1024.0 * PHI).abs() < 1e-6);
        assert!((estimate(&tens) - 792.074).abs() < 0.001);
    }

    /// Test-only stream insertion following the sketch-add rule.
    fn add_item(regs: &mut [u8], item: u64) {
        for (j, reg) in regs.iter_mut().enumerate() {
            let h = murmur3_32(&item.to_le_bytes(), VERTEX_HASH_SEED)
                ^ hash_u32(j as u32, REGISTER_HASH_SEED);
            *reg = (*reg).max(h.leading_zeros() as u8);
        }
    }

    #[test]
    fn estimate_tracks_true_cardinality() {
        let mut regs = vec![0u8; 256];
        let c = 100_000u64;
        for i in 0..c {
            add_item(&mut regs, i.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        }
        let e = estimate(&regs);
        assert!(
            (e - c as f64).abs() / (c as f64) < 0.20,
            "estimate {e} for true {c}"
        );
    }

    #[test]
    fn estimate_merged_equals_composition() {
        let a: Vec<u8> = (0..64).map(|i| init_register(i, 0)).collect();
        let b: Vec<u8> = (0..64).map(|i| init_register(i + 64, 1)).collect();
        let merged = merge(&a, &b).unwrap();
        assert_eq!(estimate_merged(&a, &b), estimate(&merged));
        let zeros = vec![0u8; 64];
        assert_eq!(estimate_merged(&zeros, &a), estimate(&a));
        // b absorbed by a pairwise-dominating vector
        let dom: Vec<u8> = b.iter().map(|&x| x.saturating_add(1)).collect();
        assert_eq!(estimate_merged(&dom, &b), estimate(&dom));
    }

    proptest! {
        #[test]
        fn merge_is_a_join_semilattice(
            a in proptest::collection::vec(0u8..=32, 16),
            b in proptest::collection::vec(0u8..=32, 16),
            c in proptest::collection::vec(0u8..=32, 16),
        ) {
            let ab = merge(&a, &b).unwrap();
            let ba = merge(&b, &a).unwrap();
            prop_assert_eq!(&ab, &ba);
            let ab_c = merge(&ab, &c).unwrap();
            let a_bc = merge(&a, &merge(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(merge(&a, &a).unwrap(), a.clone());
        }

        #[test]
        fn estimate_is_monotone_under_merge(
            a in proptest::collection::vec(0u8..=32, 16),
            b in proptest::collection::vec(0u8..=32, 16),
        ) {
            let e = estimate_merged(&a, &b);
            prop_assert!(e >= estimate(&a) - 1e-12);
            prop_assert!(e >= estimate(&b) - 1e-12);
        }
    }

    #[test]
    fn subset_streams_estimate_lower() {
        let mut small = vec![0u8; 64];
        let mut big = vec![0u8; 64];
        for i in 0..500u64 {
            add_item(&mut small, i);
            add_item(&mut big, i);
        }
        for i in 500..5_000u64 {
            add_item(&mut big, i);
        }
        assert!(estimate(&big) >= estimate(&small));
    }

    #[test]
    fn accuracy_across_seeds() {
        // median relative error over 50 seeded streams, J = 256
        for &c in &[100u64, 1_000, 10_000] {
            let mut errs: Vec<f64> = Vec::new();
            for seed in 0..50u64 {
                let mut regs = vec![0u8; 256];
                let mut state = seed.wrapping_mul(0x5851_f42d_4c95_7f2d).wrapping_add(1);
                for _ in 0..c {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    add_item(&mut regs, state);
                }
                let e = estimate(&regs);
                errs.push((e - c as f64).abs() / c as f64);
            }
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = errs[errs.len() / 2];
            assert!(median <= 0.15, "c={c} median rel err {median}");
        }
    }
}
