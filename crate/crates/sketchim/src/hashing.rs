//! Murmur3 edge hashing, per-simulation salts, and the fused-sampling
//! predicate.
//!
//! An edge `(u,v)` gets one 31-bit hash `h`. Its presence in simulation `r`
//! is decided by `(salts[r] XOR h) / h_max < w`, so the full family of
//! sampled subgraphs is a pure function of the graph and the salt set and is
//! never stored.

use std::io::Write;

use crate::graph::CsrGraph;
use crate::{Error, Result};

/// Hash domain upper limit: 2^31 - 1, so a probability of exactly 1.0 is
/// reachable.
pub const H_MAX: u32 = 0x7fff_ffff;

/// Bit-exact MurmurHash3 x86 32-bit.
pub fn murmur3_32(data: &[u8], seed: u32) -> u32 {
    const C1: u32 = 0xcc9e_2d51;
    const C2: u32 = 0x1b87_3593;
    let mut h = seed;
    let chunks = data.chunks_exact(4);
    let tail = chunks.remainder();
    for chunk in chunks {
        let mut k = u32::from_le_bytes(chunk.try_into().unwrap());
        k = k.wrapping_mul(C1);
        k = k.rotate_left(15);
        k = k.wrapping_mul(C2);
        h ^= k;
        h = h.rotate_left(13);
        h = h.wrapping_mul(5).wrapping_add(0xe654_6b64);
    }
    if !tail.is_empty() {
        let mut k = 0u32;
        for (i, &b) in tail.iter().enumerate() {
            k ^= (b as u32) << (8 * i);
        }
        k = k.wrapping_mul(C1);
        k = k.rotate_left(15);
        k = k.wrapping_mul(C2);
        h ^= k;
    }
    h ^= data.len() as u32;
    h ^= h >> 16;
    h = h.wrapping_mul(0x85eb_ca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2_ae35);
    h ^= h >> 16;
    h
}

/// Hash of the directed edge `(u,v)`: Murmur3 of the two vertex IDs as
/// little-endian 32-bit words, reduced mod 2^31.
pub fn edge_hash(u: u32, v: u32) -> u32 {
    let mut buf = [0u8; 8];
    buf[..4].copy_from_slice(&u.to_le_bytes());
    buf[4..].copy_from_slice(&v.to_le_bytes());
    murmur3_32(&buf, 0) & H_MAX
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The per-simulation XOR salts; together with the edge hashes this defines
/// every sampled subgraph implicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationSet {
    pub salts: Vec<u32>,
    pub master_seed: u64,
}

impl SimulationSet {
    /// Derives `j` 31-bit salts reproducibly from `master_seed`.
    pub fn new(j: usize, master_seed: u64) -> Result<Self> {
        if j == 0 {
            return Err(Error::validation("simulation count must be at least 1"));
        }
        let mut state = master_seed;
        let salts = (0..j).map(|_| (splitmix64(&mut state) >> 33) as u32).collect();
        Ok(SimulationSet { salts, master_seed })
    }

    pub fn j(&self) -> usize {
        self.salts.len()
    }
}

/// Precomputed `edge_hash` per CSR edge slot, aligned with `adj`.
#[derive(Debug, Clone)]
pub struct EdgeHashCache {
    pub hashes: Vec<u32>,
}

impl EdgeHashCache {
    pub fn build(graph: &CsrGraph) -> Self {
        let mut hashes = Vec::with_capacity(graph.m);
        for u in 0..graph.n as u32 {
            for &v in graph.neighbors(u) {
                hashes.push(edge_hash(u, v));
            }
        }
        EdgeHashCache { hashes }
    }
}

/// `(salts[r] XOR h) / h_max`, in double precision.
pub fn sample_probability(h: u32, r: usize, sims: &SimulationSet) -> f64 {
    ((sims.salts[r] ^ h) as f64) / (H_MAX as f64)
}

/// True iff the edge with hash `h` is present in simulation `r` under
/// weight `w`: strict `sample_probability < w`.
pub fn edge_live(h: u32, r: usize, sims: &SimulationSet, w: f64) -> bool {
    sample_probability(h, r, sims) < w
}

/// Smallest integer `t` such that `x < t` is equivalent to
/// `(x as f64) / h_max < w` for every `x` in `[0, 2^31)`.
///
/// Lets the kernel replace the division with one XOR and one integer
/// compare while staying exactly equal to [`edge_live`].
pub fn live_threshold(w: f64) -> u32 {
    if w <= 0.0 {
        return 0;
    }
    if w > 1.0 {
        return H_MAX + 1;
    }
    // Start from the real-arithmetic boundary and fix up any f64-rounding
    // disagreement in the division-based predicate.
    let mut t = (w * H_MAX as f64).ceil() as i64;
    t = t.clamp(0, H_MAX as i64 + 1);
    while t > 0 && ((t - 1) as f64) / (H_MAX as f64) >= w {
        t -= 1;
    }
    while t <= H_MAX as i64 && (t as f64) / (H_MAX as f64) < w {
        t += 1;
    }
    t as u32
}

/// One histogram bin of the sampling-bias report.
#[derive(Debug, Clone, Copy)]
pub struct BiasBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub expected: f64,
    /// Relative deviation of `count` from `expected`.
    pub bias: f64,
}

/// Empirical distribution of the fused-sampling probabilities.
#[derive(Debug, Clone)]
pub struct BiasReport {
    pub bins: Vec<BiasBin>,
    pub draws: u64,
    /// CDF evaluated at 0.0, 0.1, ..., 1.0.
    pub cdf_deciles: Vec<f64>,
    /// `sup |CDF(x) - x|` over bin boundaries.
    pub max_cdf_deviation: f64,
}

const BIAS_BINS: usize = 100;

/// Draws `P(u,v)_r` over edges x simulations (in CSR-then-simulation order,
/// capped at `samples` draws) and summarizes how uniform they are.
pub fn bias_report(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    sims: &SimulationSet,
    samples: u64,
) -> Result<BiasReport> {
    if graph.m == 0 {
        return Err(Error::validation("bias report needs a nonempty graph"));
    }
    let total_pairs = graph.m as u64 * sims.j() as u64;
    let draws = samples.min(total_pairs);
    let mut counts = vec![0u64; BIAS_BINS];
    let mut drawn = 0u64;
    'outer: for &h in &hashes.hashes {
        for r in 0..sims.j() {
            if drawn == draws {
                break 'outer;
            }
            let p = sample_probability(h, r, sims);
            let bin = ((p * BIAS_BINS as f64) as usize).min(BIAS_BINS - 1);
            counts[bin] += 1;
            drawn += 1;
        }
    }
    let expected = draws as f64 / BIAS_BINS as f64;
    let bins: Vec<BiasBin> = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| BiasBin {
            lo: i as f64 / BIAS_BINS as f64,
            hi: (i + 1) as f64 / BIAS_BINS as f64,
            count,
            expected,
            bias: (count as f64 - expected) / expected,
        })
        .collect();
    let mut max_dev = 0.0f64;
    let mut cum = 0u64;
    let mut cdf_at = vec![0.0; BIAS_BINS + 1];
    for (i, &count) in counts.iter().enumerate() {
        cum += count;
        cdf_at[i + 1] = cum as f64 / draws as f64;
        let x = (i + 1) as f64 / BIAS_BINS as f64;
        max_dev = max_dev.max((cdf_at[i + 1] - x).abs());
    }
    let cdf_deciles = (0..=10).map(|d| cdf_at[d * (BIAS_BINS / 10)]).collect();
    Ok(BiasReport { bins, draws, cdf_deciles, max_cdf_deviation: max_dev })
}

impl BiasReport {
    /// CSV with columns `bin_lo,bin_hi,count,expected,bias`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bin_lo,bin_hi,count,expected,bias")?;
        for b in &self.bins {
            writeln!(out, "{},{},{},{},{}", b.lo, b.hi, b.count, b.expected, b.bias)?;
        }
        Ok(())
    }
}
