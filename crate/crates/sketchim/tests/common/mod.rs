//! Deterministic graph fixtures shared by the integration suites.

use sketchim::graph::{build_csr, CsrGraph, Edge, EdgeList};

/// Small deterministic generator so fixtures never depend on external data.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    pub fn below(&mut self, n: u64) -> u64 {
        (self.next_u64() >> 11) % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Directed random graph with `out_deg` distinct targets per vertex and a
/// constant edge probability.
pub fn er_graph(n: u32, out_deg: u32, w: f32, seed: u64) -> CsrGraph {
    let mut rng = Lcg::new(seed);
    let mut edges = Vec::with_capacity((n * out_deg) as usize);
    for u in 0..n {
        let mut picked = Vec::new();
        while picked.len() < out_deg as usize {
            let v = rng.below(n as u64) as u32;
            if v != u && !picked.contains(&v) {
                picked.push(v);
                edges.push(Edge { u, v, w });
            }
        }
    }
    build_csr(&EdgeList { edges, original_ids: (0..n as u64).collect() })
}

/// Citation-network-scale fixture: 15,235 vertices, ~59k undirected
/// co-authorship edges. Papers are small cliques drawn from heavy-tailed
/// communities, giving hub degrees around 100 and strong local overlap.
pub fn citation_fixture(w: f32) -> CsrGraph {
    const N: u32 = 15_235;
    let mut rng = Lcg::new(0xc0a);
    // communities with heavy-tailed sizes
    let mut sizes = Vec::new();
    let mut assigned = 0u32;
    while assigned < N {
        let s = (20.0 / (1.0 - rng.unit()).powf(0.8)).min(1500.0) as u32;
        let s = s.min(N - assigned).max(5.min(N - assigned));
        sizes.push(s);
        assigned += s;
    }
    let mut starts = Vec::with_capacity(sizes.len());
    let mut acc = 0u32;
    for &s in &sizes { starts.push(acc); acc += s; }
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    // papers: clique authors zipf-weighted inside one community
    while pairs.len() < 58_892 {
        let c = rng.below(sizes.len() as u64) as usize;
        let (start, size) = (starts[c], sizes[c]);
        let na = 2 + rng.below(3) as usize;
        let mut authors = Vec::new();
        while authors.len() < na {
            // zipf-ish rank within the community
            let r = (size as f64 * rng.unit().powf(2.0)) as u32;
            let v = start + r.min(size - 1);
            if !authors.contains(&v) { authors.push(v); }
        }
        // occasional external co-author
        if rng.below(10) == 0 {
            let v = rng.below(N as u64) as u32;
            if !authors.contains(&v) { authors.push(v); }
        }
        for i in 0..authors.len() {
            for k in i + 1..authors.len() {
                let (a, b) = (authors[i].min(authors[k]), authors[i].max(authors[k]));
                if seen.insert((a, b)) { pairs.push((a, b)); }
            }
        }
    }
    let mut edges = Vec::with_capacity(pairs.len() * 2);
    for &(u, v) in &pairs {
        edges.push(Edge { u, v, w });
        edges.push(Edge { u: v, v: u, w });
    }
    build_csr(&EdgeList { edges, original_ids: (0..N as u64).collect() })
}
