//! Simple graphs, d-regular generators and the plain-text edge-list format.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{param, Error, Result};
use crate::seed::{rng_from_seed, uniform_below};

/// Undirected simple graph with sorted adjacency and stable edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: u32,
    /// Edges `(u, v)` with `u < v`, sorted.
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
    /// `adj_eid[v][j]` is the id of the edge `{v, adj[v][j]}`.
    adj_eid: Vec<Vec<u32>>,
}

impl SimpleGraph {
    pub fn from_edges(n: u32, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut list: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(param(format!("edge {{{u}, {v}}} out of range for n = {n}")));
            }
            if u == v {
                return Err(param(format!("loop at vertex {u}")));
            }
            list.push(if u < v { (u, v) } else { (v, u) });
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(param(format!("repeated edge {{{}, {}}}", w[0].0, w[0].1)));
        }
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n as usize];
        for (id, &(u, v)) in list.iter().enumerate() {
            adj[u as usize].push((v, id as u32));
            adj[v as usize].push((u, id as u32));
        }
        let mut neighbours = Vec::with_capacity(n as usize);
        let mut ids = Vec::with_capacity(n as usize);
        for mut row in adj {
            row.sort_unstable();
            neighbours.push(row.iter().map(|p| p.0).collect());
            ids.push(row.iter().map(|p| p.1).collect());
        }
        Ok(Self {
            n,
            edges: list,
            adj: neighbours,
            adj_eid: ids,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbours(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn edge_ids(&self, v: u32) -> &[u32] {
        &self.adj_eid[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    /// "n d" header followed by the sorted edge list.
    pub fn to_edge_list(&self) -> String {
        let d = self.regular_degree().unwrap_or(0);
        let mut out = format!("{} {}\n", self.n, d);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// A simple graph in which every vertex has degree `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    graph: SimpleGraph,
    d: u32,
}

impl RegularGraph {
    pub fn new(graph: SimpleGraph, d: u32) -> Result<Self> {
        match graph.regular_degree() {
            Some(deg) if deg == d as usize || graph.n() == 0 => Ok(Self { graph, d }),
            _ => Err(param(format!("graph is not {d}-regular"))),
        }
    }

    pub fn n(&self) -> u32 {
        self.graph.n()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.graph
    }

    pub fn to_edge_list(&self) -> String {
        self.graph.to_edge_list()
    }

    /// Parses the "n d" + edge-list format and checks regularity.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| param("empty graph file"))?;
        let (n, d) = parse_pair(header)?;
        let mut edges = Vec::new();
        for line in lines {
            edges.push(parse_pair(line)?);
        }
        if edges.len() as u64 * 2 != n as u64 * d as u64 {
            return Err(param(format!(
                "expected {} edges, found {}",
                n as u64 * d as u64 / 2,
                edges.len()
            )));
        }
        Self::new(SimpleGraph::from_edges(n, edges)?, d)
    }
}

fn parse_pair(line: &str) -> Result<(u32, u32)> {
    let mut it = line.split_whitespace().map(str::parse::<u32>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(param(format!("malformed graph line {line:?}"))),
    }
}

pub fn check_feasible(n: u32, d: u32) -> Result<()> {
    if d == 0 || d >= n {
        return Err(param(format!("need 1 <= d < n, got n = {n}, d = {d}")));
    }
    if !(n as u64 * d as u64).is_multiple_of(2) {
        return Err(param(format!("n d must be even, got n = {n}, d = {d}")));
    }
    Ok(())
}

/// `v ~ v +- 1, ..., v +- floor(d/2) (mod n)`, plus `v + n/2` when `d` is odd.
pub fn gen_circulant(n: u32, d: u32) -> Result<RegularGraph> {
    check_feasible(n, d)?;
    let mut edges = Vec::with_capacity(n as usize * d as usize / 2);
    for v in 0..n {
        for off in 1..=d / 2 {
            edges.push((v, (v + off) % n));
        }
        if d % 2 == 1 && v < n / 2 {
            edges.push((v, v + n / 2));
        }
    }
    RegularGraph::new(SimpleGraph::from_edges(n, edges)?, d)
}

/// Switch budget of the pairing-model repair.
pub fn pairing_switch_budget(n: u32, d: u32) -> u64 {
    10 * n as u64 * d as u64
}

/// Pairing model followed by degree-preserving switchings until simple.
pub fn gen_pairing(n: u32, d: u32, seed: u64) -> Result<RegularGraph> {
    check_feasible(n, d)?;
    let mut rng = rng_from_seed(seed);
    let mut points: Vec<u32> = (0..n).flat_map(|v| std::iter::repeat_n(v, d as usize)).collect();
    for i in (1..points.len()).rev() {
        let j = uniform_below(&mut rng, i as u64 + 1) as usize;
        points.swap(i, j);
    }
    let mut edges: Vec<(u32, u32)> = points.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    let key = |u: u32, v: u32| -> u64 {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        ((a as u64) << 32) | b as u64
    };
    let mut mult: HashMap<u64, u32> = HashMap::with_capacity(edges.len());
    for &(u, v) in &edges {
        *mult.entry(key(u, v)).or_insert(0) += 1;
    }
    let is_bad = |mult: &HashMap<u64, u32>, (u, v): (u32, u32)| u == v || mult[&key(u, v)] > 1;
    let mut pending: Vec<usize> = (0..edges.len()).filter(|&i| is_bad(&mult, edges[i])).collect();

    let budget = pairing_switch_budget(n, d);
    let mut used = 0u64;
    let count = edges.len() as u64;
    while let Some(i) = pending.pop() {
        while is_bad(&mult, edges[i]) {
            if used >= budget {
                return Err(Error::Generation(format!(
                    "pairing repair exceeded {budget} switches for n = {n}, d = {d}"
                )));
            }
            used += 1;
            let j = uniform_below(&mut rng, count) as usize;
            if j == i {
                continue;
            }
            let (a, b) = edges[i];
            let (c, e) = if uniform_below(&mut rng, 2) == 0 {
                edges[j]
            } else {
                (edges[j].1, edges[j].0)
            };
            // {a,b},{c,e} -> {a,c},{b,e}
            if a == c || b == e || key(a, c) == key(b, e) {
                continue;
            }
            if mult.get(&key(a, c)).copied().unwrap_or(0) > 0 || mult.get(&key(b, e)).copied().unwrap_or(0) > 0 {
                continue;
            }
            for k in [key(a, b), key(c, e)] {
                let m = mult.get_mut(&k).expect("present edge");
                *m -= 1;
                if *m == 0 {
                    mult.remove(&k);
                }
            }
            mult.insert(key(a, c), 1);
            mult.insert(key(b, e), 1);
            edges[i] = (a, c);
            edges[j] = (b, e);
        }
    }
    RegularGraph::new(SimpleGraph::from_edges(n, edges)?, d)
}
