//! Edge-list parsing, weight assignment, and the CSR graph structure.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use crate::{Error, Result};

/// A directed edge with a raw weight, on compacted vertex IDs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub w: f32,
}

/// Parsed edges plus the compaction map back to original IDs.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub edges: Vec<Edge>,
    /// `original_ids[i]` is the input-file ID of compacted vertex `i`.
    pub original_ids: Vec<u64>,
}

impl EdgeList {
    pub fn vertex_count(&self) -> usize {
        self.original_ids.len()
    }
}

/// Options for [`parse_edge_list`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// When false, each input line emits both edge directions.
    pub directed: bool,
    pub comment_prefix: char,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { directed: true, comment_prefix: '#' }
    }
}

/// Parses a whitespace-separated edge list (`u v` or `u v w` per line).
///
/// Vertex IDs are compacted to `0..n-1` in first-appearance order. Undirected
/// inputs emit both directions. Missing weights default to 1.0.
pub fn parse_edge_list<R: BufRead>(reader: R, options: &ParseOptions) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut id_map: HashMap<u64, u32> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut compact = |raw: u64, original_ids: &mut Vec<u64>| -> u32 {
        *id_map.entry(raw).or_insert_with(|| {
            original_ids.push(raw);
            (original_ids.len() - 1) as u32
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(options.comment_prefix) {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let u: u64 = parse_field(fields.next(), line_no, "source vertex")?;
        let v: u64 = parse_field(fields.next(), line_no, "target vertex")?;
        let w: f32 = match fields.next() {
            Some(tok) => tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid weight {tok:?}"),
            })?,
            None => 1.0,
        };
        if fields.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: "too many fields".into() });
        }
        if w < 0.0 {
            return Err(Error::validation(format!("negative weight on line {line_no}")));
        }
        let cu = compact(u, &mut original_ids);
        let cv = compact(v, &mut original_ids);
        edges.push(Edge { u: cu, v: cv, w });
        if !options.directed {
            edges.push(Edge { u: cv, v: cu, w });
        }
    }
    Ok(EdgeList { edges, original_ids })
}

fn parse_field(tok: Option<&str>, line_no: usize, what: &str) -> Result<u64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line: line_no,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("invalid {what} {tok:?}"),
    })
}

/// Diffusion-probability assignment for the edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightModel {
    /// Every edge gets the same probability.
    Constant(f32),
    /// Incoming edges of `v` get `1 / |in-neighbors of v|`.
    WeightedCascade,
    /// Keep the weights from the input file.
    Raw,
}

impl std::str::FromStr for WeightModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "wc" {
            Ok(WeightModel::WeightedCascade)
        } else if s == "raw" {
            Ok(WeightModel::Raw)
        } else if let Some(val) = s.strip_prefix("const:") {
            let w: f32 = val
                .parse()
                .map_err(|_| Error::validation(format!("invalid weight model {s:?}")))?;
            Ok(WeightModel::Constant(w))
        } else {
            Err(Error::validation(format!(
                "invalid weight model {s:?} (expected const:<w>, wc, or raw)"
            )))
        }
    }
}

/// Overwrites edge weights according to `model`.
///
/// Weighted-cascade in-degrees are counted over the deduplicated edge set
/// with self-loops removed, matching what [`build_csr`] keeps.
pub fn assign_weights(edges: &mut EdgeList, model: WeightModel) -> Result<()> {
    match model {
        WeightModel::Raw => {
            for e in &edges.edges {
                if e.w > 1.0 {
                    return Err(Error::validation(format!(
                        "raw weight {} out of [0,1] on edge ({},{})",
                        e.w, e.u, e.v
                    )));
                }
            }
        }
        WeightModel::Constant(w) => {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::validation(format!("constant weight {w} out of [0,1]")));
            }
            for e in &mut edges.edges {
                e.w = w;
            }
        }
        WeightModel::WeightedCascade => {
            let in_deg = dedup_in_degrees(edges);
            for e in &mut edges.edges {
                if e.u != e.v {
                    e.w = 1.0 / in_deg[e.v as usize] as f32;
                }
            }
        }
    }
    Ok(())
}

fn dedup_in_degrees(edges: &EdgeList) -> Vec<u32> {
    let n = edges.vertex_count();
    let mut pairs: Vec<(u32, u32)> = edges
        .edges
        .iter()
        .filter(|e| e.u != e.v)
        .map(|e| (e.u, e.v))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut deg = vec![0u32; n];
    for (_, v) in pairs {
        deg[v as usize] += 1;
    }
    deg
}

/// Immutable directed graph in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph {
    pub n: usize,
    pub m: usize,
    /// `xadj[i]..xadj[i+1]` is vertex `i`'s slice of `adj`/`weight`.
    pub xadj: Vec<u32>,
    pub adj: Vec<u32>,
    pub weight: Vec<f32>,
    pub in_degree: Vec<u32>,
    /// Compacted vertex -> input-file ID.
    pub original_ids: Vec<u64>,
}

impl CsrGraph {
    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[self.xadj[u as usize] as usize..self.xadj[u as usize + 1] as usize]
    }

    pub fn edge_range(&self, u: u32) -> std::ops::Range<usize> {
        self.xadj[u as usize] as usize..self.xadj[u as usize + 1] as usize
    }

    pub fn out_degree(&self, u: u32) -> usize {
        (self.xadj[u as usize + 1] - self.xadj[u as usize]) as usize
    }

    /// Maps an original input-file vertex ID to its compacted ID.
    pub fn compact_id(&self, original: u64) -> Option<u32> {
        // Built lazily by callers that need it often; a linear scan is fine
        // for one-off lookups such as seed files.
        self.original_ids
            .iter()
            .position(|&x| x == original)
            .map(|i| i as u32)
    }
}

/// Builds the CSR structure. Self-loops are dropped; duplicate `(u,v)` pairs
/// are merged keeping the maximum weight.
pub fn build_csr(edges: &EdgeList) -> CsrGraph {
    let n = edges.vertex_count();
    let mut list: Vec<Edge> = edges.edges.iter().copied().filter(|e| e.u != e.v).collect();
    list.sort_unstable_by_key(|e| (e.u, e.v));
    // merge duplicates, keep max weight
    let mut merged: Vec<Edge> = Vec::with_capacity(list.len());
    for e in list {
        match merged.last_mut() {
            Some(last) if last.u == e.u && last.v == e.v => {
                last.w = last.w.max(e.w);
            }
            _ => merged.push(e),
        }
    }
    let m = merged.len();
    let mut xadj = vec![0u32; n + 1];
    for e in &merged {
        xadj[e.u as usize + 1] += 1;
    }
    for i in 0..n {
        xadj[i + 1] += xadj[i];
    }
    let mut adj = Vec::with_capacity(m);
    let mut weight = Vec::with_capacity(m);
    let mut in_degree = vec![0u32; n];
    for e in &merged {
        adj.push(e.v);
        weight.push(e.w);
        in_degree[e.v as usize] += 1;
    }
    CsrGraph {
        n,
        m,
        xadj,
        adj,
        weight,
        in_degree,
        original_ids: edges.original_ids.clone(),
    }
}

/// Convenience: parse, assign weights, and build in one go.
pub fn load_graph<R: BufRead>(
    reader: R,
    options: &ParseOptions,
    model: WeightModel,
) -> Result<CsrGraph> {
    let mut edges = parse_edge_list(reader, options)?;
    assign_weights(&mut edges, model)?;
    Ok(build_csr(&edges))
}

const CSR_MAGIC: &[u8; 4] = b"CSR1";

/// Writes the binary CSR cache: `"CSR1"`, `n`, `m` as little-endian u64,
/// then `xadj` and `adj` as u32 and `weight` as f32.
pub fn write_csr_cache<W: Write>(graph: &CsrGraph, mut out: W) -> Result<()> {
    out.write_all(CSR_MAGIC)?;
    out.write_all(&(graph.n as u64).to_le_bytes())?;
    out.write_all(&(graph.m as u64).to_le_bytes())?;
    for x in &graph.xadj {
        out.write_all(&x.to_le_bytes())?;
    }
    for a in &graph.adj {
        out.write_all(&a.to_le_bytes())?;
    }
    for w in &graph.weight {
        out.write_all(&w.to_le_bytes())?;
    }
    Ok(())
}

/// Reads the binary CSR cache written by [`write_csr_cache`]. In-degrees are
/// recomputed; original IDs become the identity map.
pub fn read_csr_cache<R: Read>(mut input: R) -> Result<CsrGraph> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != CSR_MAGIC {
        return Err(Error::validation("bad CSR cache magic"));
    }
    let mut buf8 = [0u8; 8];
    input.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8) as usize;
    input.read_exact(&mut buf8)?;
    let m = u64::from_le_bytes(buf8) as usize;
    let mut buf4 = [0u8; 4];
    let mut read_u32 = |input: &mut R| -> Result<u32> {
        input.read_exact(&mut buf4)?;
        Ok(u32::from_le_bytes(buf4))
    };
    let mut xadj = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        xadj.push(read_u32(&mut input)?);
    }
    let mut adj = Vec::with_capacity(m);
    for _ in 0..m {
        adj.push(read_u32(&mut input)?);
    }
    let mut weight = Vec::with_capacity(m);
    let mut buf4 = [0u8; 4];
    for _ in 0..m {
        input.read_exact(&mut buf4)?;
        weight.push(f32::from_le_bytes(buf4));
    }
    if xadj.len() != n + 1 || xadj[0] != 0 || xadj[n] as usize != m {
        return Err(Error::validation("corrupt CSR cache offsets"));
    }
    let mut in_degree = vec![0u32; n];
    for &v in &adj {
        if v as usize >= n {
            return Err(Error::validation("CSR cache adjacency target out of range"));
        }
        in_degree[v as usize] += 1;
    }
    Ok(CsrGraph {
        n,
        m,
        xadj,
        adj,
        weight,
        in_degree,
        original_ids: (0..n as u64).collect(),
    })
}
