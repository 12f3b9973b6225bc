//! Pull-based diffusion kernel that converges the sketch matrix.
//!
//! Each iteration, every frontier vertex `u` walks its outgoing CSR row and,
//! for every simulation in which the edge is sampled and `u` is not already
//! blocked, pulls the target's register into its own via max. The next
//! frontier holds the in-neighbors of every vertex whose registers changed,
//! since only they can still gain from a re-pull. Registers are bounded and
//! monotone, so the frontier empties in finitely many iterations; an
//! early-exit ratio cuts the tail where only a few stragglers remain live.

use std::sync::atomic::{AtomicU8, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::graph::CsrGraph;
use crate::hashing::{live_threshold, EdgeHashCache, SimulationSet};
use crate::sketch::SketchMatrix;
use crate::ExecMode;

/// Per-simulation bitsets of vertices already influenced by the current seed
/// set. Layout is one row of `J` bits per vertex so the kernel reads a
/// vertex's block status in one or two words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachSet {
    n: usize,
    j: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl ReachSet {
    pub fn empty(n: usize, j: usize) -> Self {
        let words_per_row = j.div_ceil(64);
        ReachSet { n, j, words_per_row, bits: vec![0; n * words_per_row] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn set(&mut self, v: u32, sim: usize) {
        let row = v as usize * self.words_per_row;
        self.bits[row + sim / 64] |= 1u64 << (sim % 64);
    }

    pub fn get(&self, v: u32, sim: usize) -> bool {
        let row = v as usize * self.words_per_row;
        self.bits[row + sim / 64] >> (sim % 64) & 1 != 0
    }

    pub fn row(&self, v: u32) -> &[u64] {
        let row = v as usize * self.words_per_row;
        &self.bits[row..row + self.words_per_row]
    }

    /// True iff `v` is blocked in no simulation.
    pub fn row_is_zero(&self, v: u32) -> bool {
        self.row(v).iter().all(|&w| w == 0)
    }

    /// True iff `v` is blocked in every simulation.
    pub fn blocked_in_all(&self, v: u32) -> bool {
        let mut remaining = self.j;
        for &word in self.row(v) {
            let width = remaining.min(64);
            let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            if word & mask != mask {
                return false;
            }
            remaining -= width;
        }
        true
    }

    /// Number of set bits in simulation `sim` across all vertices.
    pub fn count_sim(&self, sim: usize) -> usize {
        (0..self.n as u32).filter(|&v| self.get(v, sim)).count()
    }
}

/// Controls for [`simulate`].
#[derive(Debug, Clone, Copy)]
pub struct DiffusionOptions {
    /// Exit once the live ratio `|L|/n` drops to this value or below.
    pub eps_c: f64,
    pub mode: ExecMode,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        DiffusionOptions { eps_c: 0.02, mode: ExecMode::Strict }
    }
}

/// Snapshot of the frontier, passed to the per-iteration trace callback.
#[derive(Debug, Clone, Copy)]
pub struct FrontierStats {
    pub iteration: u32,
    pub live_count: usize,
    pub elapsed_ms: f64,
}

/// Outcome of one [`simulate`] call.
#[derive(Debug, Clone, Copy)]
pub struct DiffusionStats {
    pub iterations: u32,
    pub final_live: usize,
}

/// Runs the fused-sampling diffusion until the live ratio drops to
/// `eps_c` (or the frontier empties) and leaves the converged registers in
/// `matrix`. Vertices blocked in `reach` never receive merges in the
/// corresponding simulation.
pub fn simulate(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    sims: &SimulationSet,
    matrix: &mut SketchMatrix,
    reach: &ReachSet,
    opts: &DiffusionOptions,
    mut trace: Option<&mut dyn FnMut(&FrontierStats)>,
) -> DiffusionStats {
    assert_eq!(matrix.n(), graph.n);
    assert_eq!(matrix.j(), sims.j());
    let n = graph.n;
    let thresholds: Vec<u32> = graph.weight.iter().map(|&w| live_threshold(w as f64)).collect();
    let (rxadj, radj) = reverse_adjacency(graph);
    let mut frontier: Vec<u32> = (0..n as u32).collect();
    let mut marked = vec![false; n];
    let mut iterations = 0u32;
    let start = Instant::now();

    while !frontier.is_empty() && frontier.len() as f64 / n as f64 > opts.eps_c {
        iterations += 1;
        let changed = match opts.mode {
            ExecMode::Strict => strict_iteration(graph, hashes, &thresholds, sims, matrix, reach, &frontier),
            ExecMode::Relaxed => relaxed_iteration(graph, hashes, &thresholds, sims, matrix, reach, &frontier),
        };
        frontier.clear();
        for &v in &changed {
            let r = v as usize;
            for &u in &radj[rxadj[r] as usize..rxadj[r + 1] as usize] {
                if !marked[u as usize] {
                    marked[u as usize] = true;
                    frontier.push(u);
                }
            }
        }
        for &u in &frontier {
            marked[u as usize] = false;
        }
        frontier.sort_unstable();
        if let Some(cb) = trace.as_deref_mut() {
            cb(&FrontierStats {
                iteration: iterations,
                live_count: frontier.len(),
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    DiffusionStats { iterations, final_live: frontier.len() }
}

/// In-neighbor lists in CSR form, used to grow the frontier after an
/// iteration: exactly the predecessors of changed vertices can still gain.
fn reverse_adjacency(graph: &CsrGraph) -> (Vec<u32>, Vec<u32>) {
    let n = graph.n;
    let mut rxadj = vec![0u32; n + 1];
    for &v in &graph.adj {
        rxadj[v as usize + 1] += 1;
    }
    for i in 0..n {
        rxadj[i + 1] += rxadj[i];
    }
    let mut radj = vec![0u32; graph.adj.len()];
    let mut cursor = rxadj.clone();
    for u in 0..n as u32 {
        for e in graph.edge_range(u) {
            let v = graph.adj[e] as usize;
            radj[cursor[v] as usize] = u;
            cursor[v] += 1;
        }
    }
    (rxadj, radj)
}

/// Computes the merged row for one frontier vertex, reading target rows
/// through `read_row`. Returns true iff any register grew.
#[inline]
fn pull_row(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    thresholds: &[u32],
    sims: &SimulationSet,
    reach: &ReachSet,
    u: u32,
    out: &mut [u8],
    read_row: impl Fn(u32, usize) -> u8,
) -> bool {
    let j = sims.j();
    let mut changed = false;
    let unblocked = reach.row_is_zero(u);
    for e in graph.edge_range(u) {
        let v = graph.adj[e];
        let h = hashes.hashes[e];
        let t = thresholds[e];
        if t == 0 {
            continue;
        }
        if unblocked {
            for (r, slot) in out.iter_mut().enumerate().take(j) {
                if (sims.salts[r] ^ h) < t {
                    let val = read_row(v, r);
                    if val > *slot {
                        *slot = val;
                        changed = true;
                    }
                }
            }
        } else {
            for (r, slot) in out.iter_mut().enumerate().take(j) {
                if (sims.salts[r] ^ h) < t && !reach.get(u, r) {
                    let val = read_row(v, r);
                    if val > *slot {
                        *slot = val;
                        changed = true;
                    }
                }
            }
        }
    }
    changed
}

/// Barrier-separated iteration: all reads see the previous iteration's
/// registers, so the result is independent of thread count.
fn strict_iteration(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    thresholds: &[u32],
    sims: &SimulationSet,
    matrix: &mut SketchMatrix,
    reach: &ReachSet,
    frontier: &[u32],
) -> Vec<u32> {
    let j = sims.j();
    let mut buffer = vec![0u8; frontier.len() * j];
    let matrix_ref = &*matrix;
    let changed: Vec<bool> = frontier
        .par_iter()
        .zip(buffer.par_chunks_mut(j))
        .map(|(&u, out)| {
            out.copy_from_slice(matrix_ref.row(u));
            pull_row(graph, hashes, thresholds, sims, reach, u, out, |v, r| {
                matrix_ref.row(v)[r]
            })
        })
        .collect();
    let mut next = Vec::new();
    for (i, &u) in frontier.iter().enumerate() {
        if changed[i] {
            matrix.row_mut(u).copy_from_slice(&buffer[i * j..(i + 1) * j]);
            next.push(u);
        }
    }
    next
}

/// In-place iteration: reads may observe same-iteration updates of other
/// rows. Safe because updates are monotone maxima over atomics; only the
/// owning worker writes a row.
fn relaxed_iteration(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    thresholds: &[u32],
    sims: &SimulationSet,
    matrix: &mut SketchMatrix,
    reach: &ReachSet,
    frontier: &[u32],
) -> Vec<u32> {
    let j = sims.j();
    let regs = matrix.regs_mut();
    // AtomicU8 has the same layout as u8; relaxed ordering is enough since
    // any interleaving only delays monotone convergence.
    let atomic: &[AtomicU8] =
        unsafe { std::slice::from_raw_parts(regs.as_ptr() as *const AtomicU8, regs.len()) };
    frontier
        .par_iter()
        .filter_map(|&u| {
            let base = u as usize * j;
            let mut out = vec![0u8; j];
            for (r, slot) in out.iter_mut().enumerate() {
                *slot = atomic[base + r].load(Ordering::Relaxed);
            }
            let changed = pull_row(graph, hashes, thresholds, sims, reach, u, &mut out, |v, r| {
                atomic[v as usize * j + r].load(Ordering::Relaxed)
            });
            if changed {
                for (r, &val) in out.iter().enumerate() {
                    atomic[base + r].store(val, Ordering::Relaxed);
                }
                Some(u)
            } else {
                None
            }
        })
        .collect()
}
