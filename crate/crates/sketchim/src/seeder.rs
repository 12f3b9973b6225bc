//! Greedy seed selection over sketch estimates with error-adaptive
//! rebuilding.
//!
//! Each step picks the vertex whose merged sketch promises the largest
//! reach, then measures the actual reach on the very same sampled subgraphs
//! (same salts). When the sketch's marginal estimate drifts too far from the
//! measured marginal gain, the registers are rebuilt on the residual graph,
//! with everything the seed set already reaches blocked per simulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{simulate, DiffusionOptions, ReachSet};
use crate::graph::CsrGraph;
use crate::hashing::{live_threshold, EdgeHashCache, SimulationSet};
use crate::sketch::{self, SketchMatrix};
use crate::{Error, ExecMode, Result};

/// Error thresholds controlling sketch rebuilds and diffusion early exit.
///
/// `INFINITY` disables a threshold; zero makes it always trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPolicy {
    pub eps_l: f64,
    pub eps_g: f64,
    pub eps_c: f64,
}

impl Default for ErrorPolicy {
    fn default() -> Self {
        ErrorPolicy { eps_l: 0.3, eps_g: 0.01, eps_c: 0.02 }
    }
}

impl ErrorPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.eps_l < 0.0 || self.eps_g < 0.0 || !(0.0..=1.0).contains(&self.eps_c) {
            return Err(Error::validation("error thresholds must be non-negative"));
        }
        Ok(())
    }

    /// Never rebuild after the initial sketch construction.
    pub fn never_rebuild() -> Self {
        ErrorPolicy { eps_l: f64::INFINITY, eps_g: f64::INFINITY, ..Default::default() }
    }

    /// Rebuild on every step.
    pub fn always_rebuild() -> Self {
        ErrorPolicy { eps_l: 0.0, eps_g: 0.0, ..Default::default() }
    }
}

/// One greedy step of the selection loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedStep {
    /// Chosen vertex (compacted ID).
    pub vertex: u32,
    /// Sketch estimate of the reach gained since the last rebuild.
    pub estimate: f64,
    /// Measured marginal influence since the last rebuild.
    pub delta: f64,
    /// Measured influence of the seed set so far.
    pub sigma: f64,
    pub err_l: f64,
    pub err_g: f64,
    pub rebuilt: bool,
}

/// Ordered seeds with the per-step audit trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub seeds: Vec<u32>,
    pub steps: Vec<SeedStep>,
    /// Mean reach of the full seed set over the fused-sample subgraphs.
    pub sigma_final: f64,
}

impl SeedResult {
    pub fn rebuild_count(&self) -> usize {
        self.steps.iter().filter(|s| s.rebuilt).count()
    }
}

/// Decides whether the sketches are stale: true unless the local or the
/// global error test passes. A non-positive `delta` counts as infinite local
/// error.
pub fn should_rebuild(e: f64, delta: f64, sigma: f64, policy: &ErrorPolicy) -> bool {
    let err_l = if delta > 0.0 { ((e - delta) / delta).abs() } else { f64::INFINITY };
    let err_g = ((e - delta) / sigma).abs();
    !(err_l < policy.eps_l || err_g < policy.eps_g)
}

/// Exact per-simulation reachability of `seeds` on the fused-sample
/// subgraphs, plus the mean reach `sigma`. Uses the same salts as the sketch
/// diffusion, so the measured influence refers to exactly the subgraphs the
/// sketches summarize.
pub fn exact_reach(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    sims: &SimulationSet,
    seeds: &[u32],
) -> (ReachSet, f64) {
    let j = sims.j();
    let thresholds: Vec<u32> = graph.weight.iter().map(|&w| live_threshold(w as f64)).collect();
    let visited_lists: Vec<Vec<u32>> = (0..j)
        .into_par_iter()
        .map(|sim| {
            let salt = sims.salts[sim];
            let mut visited = vec![false; graph.n];
            let mut order = Vec::new();
            let mut stack = Vec::new();
            for &s in seeds {
                if !visited[s as usize] {
                    visited[s as usize] = true;
                    order.push(s);
                    stack.push(s);
                }
            }
            while let Some(u) = stack.pop() {
                for e in graph.edge_range(u) {
                    let v = graph.adj[e];
                    if !visited[v as usize] && (salt ^ hashes.hashes[e]) < thresholds[e] {
                        visited[v as usize] = true;
                        order.push(v);
                        stack.push(v);
                    }
                }
            }
            order
        })
        .collect();
    let mut reach = ReachSet::empty(graph.n, j);
    let mut total = 0usize;
    for (sim, list) in visited_lists.iter().enumerate() {
        total += list.len();
        for &v in list {
            reach.set(v, sim);
        }
    }
    (reach, total as f64 / j as f64)
}

/// Argmax of the merged register sum over eligible vertices; ties break to
/// the lowest vertex ID. The register sum orders vertices exactly like the
/// cardinality estimate, which is a monotone function of it.
fn best_candidate(
    matrix: &SketchMatrix,
    seed_sketch: &[u8],
    eligible: &[bool],
) -> Option<u32> {
    (0..matrix.n() as u32)
        .into_par_iter()
        .filter(|&v| eligible[v as usize])
        .map(|v| (sketch::merged_register_sum(seed_sketch, matrix.row(v)), std::cmp::Reverse(v)))
        .max()
        .map(|(_, std::cmp::Reverse(v))| v)
}

/// The main selection loop: one initial sketch build, then `k` greedy picks
/// with error-adaptive rebuilds.
pub fn select_seeds(
    graph: &CsrGraph,
    hashes: &EdgeHashCache,
    k: usize,
    sims: &SimulationSet,
    policy: &ErrorPolicy,
    mode: ExecMode,
) -> Result<SeedResult> {
    policy.validate()?;
    if k > graph.n {
        return Err(Error::validation(format!(
            "seed count {k} exceeds vertex count {}",
            graph.n
        )));
    }
    if k == 0 {
        return Ok(SeedResult { seeds: vec![], steps: vec![], sigma_final: 0.0 });
    }
    let j = sims.j();
    let diffusion_opts = DiffusionOptions { eps_c: policy.eps_c, mode };

    let mut matrix = SketchMatrix::zeros(graph.n, j);
    matrix.init_vertex_registers();
    let empty_reach = ReachSet::empty(graph.n, j);
    simulate(graph, hashes, sims, &mut matrix, &empty_reach, &diffusion_opts, None);

    let mut seed_sketch = vec![0u8; j];
    let mut influence_at_rebuild = 0.0f64;
    let mut seeds: Vec<u32> = Vec::with_capacity(k);
    let mut steps: Vec<SeedStep> = Vec::with_capacity(k);
    // Vertices eligible for the argmax scan: not yet selected and, since the
    // last rebuild, not blocked in every simulation.
    let mut eligible = vec![true; graph.n];

    for _ in 0..k {
        let s = best_candidate(&matrix, &seed_sketch, &eligible)
            .ok_or_else(|| Error::validation("no eligible seed candidates remain"))?;
        seeds.push(s);
        eligible[s as usize] = false;
        let e = sketch::estimate_merged(&seed_sketch, matrix.row(s));
        let (reach, sigma) = exact_reach(graph, hashes, sims, &seeds);
        let delta = sigma - influence_at_rebuild;
        let err_l = if delta > 0.0 { ((e - delta) / delta).abs() } else { f64::INFINITY };
        let err_g = ((e - delta) / sigma).abs();
        let rebuilt = should_rebuild(e, delta, sigma, policy);
        if rebuilt {
            matrix.init_vertex_registers();
            // rebuilt sketches count unblocked vertices only; a register of a
            // blocked (vertex, simulation) pair must contribute nothing
            for v in 0..graph.n as u32 {
                if !reach.row_is_zero(v) {
                    let row = matrix.row_mut(v);
                    for (sim, reg) in row.iter_mut().enumerate() {
                        if reach.get(v, sim) {
                            *reg = 0;
                        }
                    }
                }
            }
            simulate(graph, hashes, sims, &mut matrix, &reach, &diffusion_opts, None);
            seed_sketch.iter_mut().for_each(|r| *r = 0);
            influence_at_rebuild = sigma;
            for v in 0..graph.n as u32 {
                if eligible[v as usize] && reach.blocked_in_all(v) {
                    eligible[v as usize] = false;
                }
            }
        } else {
            sketch::merge_into(&mut seed_sketch, matrix.row(s))?;
        }
        steps.push(SeedStep { vertex: s, estimate: e, delta, sigma, err_l, err_g, rebuilt });
    }
    let sigma_final = steps.last().map(|s| s.sigma).unwrap_or(0.0);
    Ok(SeedResult { seeds, steps, sigma_final })
}
