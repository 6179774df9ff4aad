//! Graph data model, DIMACS ingestion, generators, products, and exact
//! small-scale oracles for the stability, chromatic and fractional
//! chromatic numbers.
//!
//! The exact oracles are deliberately brute-force with hard size caps;
//! they serve as ground truth for the relaxation machinery built on
//! top of the conic solver.

use crate::conic::{BlockKind, ConicProblem, Sense, SolveStatus, SparseBlockMat};
use crate::linalg::SymMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Entries with absolute value above this threshold count as support.
pub const SUPPORT_TOL: f64 = 1e-12;

const ALPHA_CAP: usize = 25;
const CHI_CAP: usize = 14;
const CP_GRAPH_CAP: usize = 20;
const ISO_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what}: size {n} exceeds cap {cap}")]
    SizeCapExceeded { what: String, n: usize, cap: usize },
    #[error(transparent)]
    Conic(#[from] crate::conic::ConicError),
}

/// Finite simple graph on vertices 0..n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>, // sorted, u < v, deduplicated
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::InvalidParameter(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                return Err(GraphError::InvalidParameter(format!("loop at vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Graph { n, edges: set.into_iter().collect() })
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// u and v adjacent or equal.
    pub fn adjacent_or_equal(&self, u: usize, v: usize) -> bool {
        u == v || self.has_edge(u, v)
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| self.has_edge(u, v)).collect()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == u || b == u).count()
    }

    /// Adjacency bitmasks; only valid for n <= 64.
    fn adj_masks(&self) -> Vec<u64> {
        assert!(self.n <= 64);
        let mut adj = vec![0u64; self.n];
        for &(u, v) in &self.edges {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        adj
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p edge {} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            s.push_str(&format!("e {} {}\n", u + 1, v + 1));
        }
        s
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.edges.len())
    }
}

/// Parse the DIMACS edge format: "p edge n m" then "e u v" (1-based).
/// Duplicate edge lines collapse to a single edge.
pub fn parse_dimacs(text: &str) -> Result<Graph, GraphError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('c') {
            continue;
        }
        if let Some(rest) = l.strip_prefix('p') {
            if n.is_some() {
                return Err(GraphError::Parse { line, msg: "duplicate problem line".into() });
            }
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 || (toks[0] != "edge" && toks[0] != "col") {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected 'p edge <n> <m>', got {l:?}"),
                });
            }
            let nn: usize = toks[1]
                .parse()
                .map_err(|_| GraphError::Parse { line, msg: format!("bad vertex count {:?}", toks[1]) })?;
            let _m: usize = toks[2]
                .parse()
                .map_err(|_| GraphError::Parse { line, msg: format!("bad edge count {:?}", toks[2]) })?;
            n = Some(nn);
        } else if let Some(rest) = l.strip_prefix('e') {
            let nn = n.ok_or(GraphError::Parse { line, msg: "edge before problem line".into() })?;
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(GraphError::Parse { line, msg: format!("expected 'e <u> <v>', got {l:?}") });
            }
            let u: usize = toks[0]
                .parse()
                .map_err(|_| GraphError::Parse { line, msg: format!("bad endpoint {:?}", toks[0]) })?;
            let v: usize = toks[1]
                .parse()
                .map_err(|_| GraphError::Parse { line, msg: format!("bad endpoint {:?}", toks[1]) })?;
            if u == 0 || v == 0 || u > nn || v > nn {
                return Err(GraphError::Parse { line, msg: format!("endpoint out of range in {l:?}") });
            }
            if u == v {
                return Err(GraphError::Parse { line, msg: format!("loop at vertex {u}") });
            }
            edges.push((u - 1, v - 1));
        } else {
            return Err(GraphError::Parse { line, msg: format!("unrecognized line {l:?}") });
        }
    }
    let n = n.ok_or(GraphError::Parse { line: 1, msg: "missing problem line".into() })?;
    Graph::new(n, edges)
}

/// Complementary graph; an involution.
pub fn complement(g: &Graph) -> Graph {
    let mut edges = Vec::new();
    for u in 0..g.n {
        for v in (u + 1)..g.n {
            if !g.has_edge(u, v) {
                edges.push((u, v));
            }
        }
    }
    Graph { n: g.n, edges }
}

/// Cartesian product G x K_t: vertex (u, i) mapped to index u*t + i;
/// (u,i) ~ (v,j) iff (u = v and i != j) or (u ~ v and i = j).
pub fn cartesian_k(g: &Graph, t: usize) -> Result<Graph, GraphError> {
    if t < 1 {
        return Err(GraphError::InvalidParameter("t must be >= 1".into()));
    }
    let mut edges = Vec::new();
    for u in 0..g.n {
        for i in 0..t {
            for j in (i + 1)..t {
                edges.push((u * t + i, u * t + j));
            }
        }
    }
    for &(u, v) in &g.edges {
        for i in 0..t {
            edges.push((u * t + i, v * t + i));
        }
    }
    Graph::new(g.n * t, edges)
}

/// Orthogonality-condition graph G_t on V x [t] (vertex (u, i) at index
/// u*t + i): distinct vertices adjacent iff (i != j and u adjacent or
/// equal to v) or (i = j and u != v).
pub fn ortho_graph_gt(g: &Graph, t: usize) -> Result<Graph, GraphError> {
    if t < 1 {
        return Err(GraphError::InvalidParameter("t must be >= 1".into()));
    }
    let n = g.n;
    let mut edges = Vec::new();
    for u in 0..n {
        for i in 0..t {
            for v in u..n {
                let jstart = if v == u { i + 1 } else { 0 };
                for j in jstart..t {
                    let adjacent = if i != j { g.adjacent_or_equal(u, v) } else { u != v };
                    if adjacent {
                        edges.push((u * t + i, v * t + j));
                    }
                }
            }
        }
    }
    Graph::new(n * t, edges)
}

/// Named graph families for the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Cycle(usize),
    Complete(usize),
    Kneser(usize, usize),
    Omega(usize),
    Petersen,
    Empty(usize),
}

impl Family {
    /// Parse a generator string such as "cycle:5" or "kneser:5,2".
    pub fn parse(s: &str) -> Result<Family, GraphError> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, p),
            None => (s, ""),
        };
        let nums: Vec<usize> = if params.is_empty() {
            Vec::new()
        } else {
            params
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| GraphError::InvalidParameter(format!("bad parameter {t:?} in {s:?}")))
                })
                .collect::<Result<_, _>>()?
        };
        let want = |k: usize| -> Result<(), GraphError> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(GraphError::InvalidParameter(format!(
                    "{name} expects {k} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        match name {
            "cycle" => {
                want(1)?;
                Ok(Family::Cycle(nums[0]))
            }
            "complete" => {
                want(1)?;
                Ok(Family::Complete(nums[0]))
            }
            "kneser" => {
                want(2)?;
                Ok(Family::Kneser(nums[0], nums[1]))
            }
            "omega" => {
                want(1)?;
                Ok(Family::Omega(nums[0]))
            }
            "petersen" => {
                want(0)?;
                Ok(Family::Petersen)
            }
            "empty" => {
                want(1)?;
                Ok(Family::Empty(nums[0]))
            }
            _ => Err(GraphError::InvalidParameter(format!("unknown family {name:?}"))),
        }
    }
}

fn subsets_of_size(n: usize, r: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut stack = vec![(0u32, 0usize, 0usize)]; // (mask, next, count)
    while let Some((mask, next, count)) = stack.pop() {
        if count == r {
            out.push(mask);
            continue;
        }
        for k in next..n {
            stack.push((mask | (1 << k), k + 1, count + 1));
        }
    }
    out.sort_unstable();
    out
}

/// Generate a graph from a named family.
pub fn generate(family: &Family) -> Result<Graph, GraphError> {
    match *family {
        Family::Cycle(n) => {
            if n < 3 {
                return Err(GraphError::InvalidParameter("cycle needs n >= 3".into()));
            }
            Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
        }
        Family::Complete(n) => {
            if n < 1 {
                return Err(GraphError::InvalidParameter("complete needs n >= 1".into()));
            }
            Graph::new(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))))
        }
        Family::Empty(n) => {
            if n < 1 {
                return Err(GraphError::InvalidParameter("empty needs n >= 1".into()));
            }
            Ok(Graph::empty(n))
        }
        Family::Kneser(n, r) => {
            if r < 1 || n < 2 * r {
                return Err(GraphError::InvalidParameter("kneser needs 1 <= r and n >= 2r".into()));
            }
            if n > 20 {
                return Err(GraphError::SizeCapExceeded { what: "kneser".into(), n, cap: 20 });
            }
            let subsets = subsets_of_size(n, r);
            let v = subsets.len();
            let mut edges = Vec::new();
            for a in 0..v {
                for b in (a + 1)..v {
                    if subsets[a] & subsets[b] == 0 {
                        edges.push((a, b));
                    }
                }
            }
            Graph::new(v, edges)
        }
        Family::Omega(n) => {
            if n == 0 || n % 4 != 0 {
                return Err(GraphError::InvalidParameter("omega needs n a positive multiple of 4".into()));
            }
            if n > 12 {
                return Err(GraphError::SizeCapExceeded { what: "omega".into(), n, cap: 12 });
            }
            // vertices: all +-1 vectors encoded as bitmasks; adjacent iff
            // orthogonal, i.e. they differ in exactly n/2 coordinates.
            let v = 1usize << n;
            let mut edges = Vec::new();
            for a in 0..v {
                for b in (a + 1)..v {
                    if ((a ^ b) as u32).count_ones() as usize == n / 2 {
                        edges.push((a, b));
                    }
                }
            }
            Graph::new(v, edges)
        }
        Family::Petersen => generate(&Family::Kneser(5, 2)),
    }
}

/// Support graph of a symmetric matrix: edge {i, j} iff |A_ij| exceeds
/// the support threshold and i != j.
pub fn support_graph(a: &SymMatrix) -> Graph {
    let n = a.dim();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if a.get(i, j).abs() > SUPPORT_TOL {
                edges.push((i, j));
            }
        }
    }
    Graph { n, edges }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportClass {
    Bipartite,
    Cycle,
    /// no odd cycle of length >= 5 occurs as a subgraph
    CpGraph,
    Other,
}

pub fn is_bipartite(g: &Graph) -> bool {
    let mut color = vec![-1i8; g.n];
    let adj: Vec<Vec<usize>> = (0..g.n).map(|u| g.neighbors(u)).collect();
    for s in 0..g.n {
        if color[s] >= 0 {
            continue;
        }
        color[s] = 0;
        let mut queue = vec![s];
        while let Some(u) = queue.pop() {
            for &v in &adj[u] {
                if color[v] < 0 {
                    color[v] = 1 - color[u];
                    queue.push(v);
                } else if color[v] == color[u] {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_connected(g: &Graph) -> bool {
    if g.n == 0 {
        return true;
    }
    let adj: Vec<Vec<usize>> = (0..g.n).map(|u| g.neighbors(u)).collect();
    let mut seen = vec![false; g.n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == g.n
}

/// Classify a support graph: BIPARTITE, then CYCLE (connected 2-regular
/// spanning), then CP_GRAPH (no odd cycle of length >= 5 as subgraph,
/// by exhaustive cycle search capped at n = 20), else OTHER.
pub fn classify_support(g: &Graph) -> Result<SupportClass, GraphError> {
    if is_bipartite(g) {
        return Ok(SupportClass::Bipartite);
    }
    if g.n >= 3 && is_connected(g) && (0..g.n).all(|u| g.degree(u) == 2) {
        return Ok(SupportClass::Cycle);
    }
    if g.n > CP_GRAPH_CAP {
        return Err(GraphError::SizeCapExceeded {
            what: "CP_GRAPH detection".into(),
            n: g.n,
            cap: CP_GRAPH_CAP,
        });
    }
    if has_odd_cycle_ge5(g) {
        Ok(SupportClass::Other)
    } else {
        Ok(SupportClass::CpGraph)
    }
}

/// Exhaustive search for an odd cycle of length >= 5 as a subgraph.
/// Bipartite biconnected components cannot host one and are skipped;
/// inside the remaining blocks, simple cycles are enumerated with
/// canonical-root pruning (only vertices above the root may extend a
/// path) and the search exits on the first hit.
fn has_odd_cycle_ge5(g: &Graph) -> bool {
    for block in biconnected_components(g) {
        if block.len() < 5 {
            continue;
        }
        let sub = induced(g, &block);
        if is_bipartite(&sub) {
            continue;
        }
        if block_has_odd_cycle_ge5(&sub) {
            return true;
        }
    }
    false
}

fn induced(g: &Graph, idx: &[usize]) -> Graph {
    let pos: std::collections::HashMap<usize, usize> =
        idx.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for &(u, v) in &g.edges {
        if let (Some(&a), Some(&b)) = (pos.get(&u), pos.get(&v)) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    Graph { n: idx.len(), edges }
}

fn block_has_odd_cycle_ge5(g: &Graph) -> bool {
    let adj: Vec<Vec<usize>> = (0..g.n).map(|u| g.neighbors(u)).collect();
    let mut on_path = vec![false; g.n];
    for root in 0..g.n {
        on_path.iter_mut().for_each(|b| *b = false);
        on_path[root] = true;
        if dfs_odd_cycle(root, root, 1, &adj, &mut on_path) {
            return true;
        }
    }
    false
}

fn dfs_odd_cycle(root: usize, u: usize, len: usize, adj: &[Vec<usize>], on_path: &mut [bool]) -> bool {
    for &v in &adj[u] {
        if v == root && len >= 5 && len % 2 == 1 {
            return true;
        }
        if v <= root || on_path[v] {
            continue;
        }
        on_path[v] = true;
        if dfs_odd_cycle(root, v, len + 1, adj, on_path) {
            return true;
        }
        on_path[v] = false;
    }
    false
}

/// Biconnected components (vertex sets) by Hopcroft-Tarjan.
fn biconnected_components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n;
    let adj: Vec<Vec<usize>> = (0..n).map(|u| g.neighbors(u)).collect();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();

    for s in 0..n {
        if disc[s] != usize::MAX {
            continue;
        }
        // iterative DFS: (vertex, parent, next child index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(s, usize::MAX, 0)];
        disc[s] = timer;
        low[s] = timer;
        timer += 1;
        while let Some(frame) = stack.last_mut() {
            let (u, parent, ci) = (frame.0, frame.1, frame.2);
            if ci < adj[u].len() {
                frame.2 += 1;
                let v = adj[u][ci];
                if v == parent {
                    continue;
                }
                if disc[v] == usize::MAX {
                    edge_stack.push((u, v));
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, u, 0));
                } else if disc[v] < disc[u] {
                    edge_stack.push((u, v));
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(pframe) = stack.last() {
                    let p = pframe.0;
                    low[p] = low[p].min(low[u]);
                    if low[u] >= disc[p] {
                        let mut verts = BTreeSet::new();
                        while let Some(&(a, b)) = edge_stack.last() {
                            verts.insert(a);
                            verts.insert(b);
                            edge_stack.pop();
                            if (a == p && b == u) || (a == u && b == p) {
                                break;
                            }
                        }
                        if !verts.is_empty() {
                            comps.push(verts.into_iter().collect());
                        }
                    }
                }
            }
        }
    }
    comps
}

/// Exact stability number by branch and bound (n <= 25).
pub fn exact_alpha(g: &Graph) -> Result<usize, GraphError> {
    if g.n > ALPHA_CAP {
        return Err(GraphError::SizeCapExceeded { what: "exact_alpha".into(), n: g.n, cap: ALPHA_CAP });
    }
    if g.n == 0 {
        return Ok(0);
    }
    let adj = g.adj_masks();
    let full: u64 = if g.n == 64 { !0 } else { (1u64 << g.n) - 1 };
    let mut best = 0usize;
    alpha_rec(full, 0, &mut best, &adj);
    Ok(best)
}

fn alpha_rec(p: u64, current: usize, best: &mut usize, adj: &[u64]) {
    if p == 0 {
        *best = (*best).max(current);
        return;
    }
    if current + p.count_ones() as usize <= *best {
        return;
    }
    // branch on the vertex of maximum residual degree
    let mut v = usize::MAX;
    let mut maxdeg = 0usize;
    let mut bits = p;
    while bits != 0 {
        let u = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let d = (adj[u] & p).count_ones() as usize;
        if v == usize::MAX || d > maxdeg {
            maxdeg = d;
            v = u;
        }
    }
    // include v first (tends to lift the bound early)
    alpha_rec(p & !adj[v] & !(1 << v), current + 1, best, adj);
    alpha_rec(p & !(1 << v), current, best, adj);
}

/// Exact chromatic number by iterated k-colorability search (n <= 14).
pub fn exact_chi(g: &Graph) -> Result<usize, GraphError> {
    if g.n > CHI_CAP {
        return Err(GraphError::SizeCapExceeded { what: "exact_chi".into(), n: g.n, cap: CHI_CAP });
    }
    if g.n == 0 {
        return Ok(0);
    }
    let lb = greedy_clique_size(g).max(1);
    for k in lb..=g.n {
        if k_colorable(g, k).is_some() {
            return Ok(k);
        }
    }
    Ok(g.n)
}

fn greedy_clique_size(g: &Graph) -> usize {
    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by_key(|&u| std::cmp::Reverse(g.degree(u)));
    let mut best = 0;
    for &start in &order {
        let mut clique = vec![start];
        for &u in &order {
            if u != start && clique.iter().all(|&c| g.has_edge(u, c)) {
                clique.push(u);
            }
        }
        best = best.max(clique.len());
    }
    best
}

/// Backtracking k-coloring; returns a proper coloring when one exists.
pub fn k_colorable(g: &Graph, k: usize) -> Option<Vec<usize>> {
    let n = g.n;
    if n == 0 {
        return Some(Vec::new());
    }
    let adj: Vec<Vec<usize>> = (0..n).map(|u| g.neighbors(u)).collect();
    let mut colors = vec![usize::MAX; n];
    let mut used = 0usize;
    fn rec(colors: &mut Vec<usize>, used: &mut usize, adj: &[Vec<usize>], k: usize, n: usize) -> bool {
        // most-constrained uncolored vertex
        let mut pick = usize::MAX;
        let mut pick_avail = usize::MAX;
        for u in 0..n {
            if colors[u] != usize::MAX {
                continue;
            }
            let mut mask = 0usize;
            for &v in &adj[u] {
                if colors[v] != usize::MAX {
                    mask |= 1 << colors[v];
                }
            }
            let avail = k - (mask.count_ones() as usize).min(k);
            if avail == 0 {
                return false;
            }
            if avail < pick_avail {
                pick_avail = avail;
                pick = u;
            }
        }
        if pick == usize::MAX {
            return true;
        }
        let mut forbidden = 0usize;
        for &v in &adj[pick] {
            if colors[v] != usize::MAX {
                forbidden |= 1 << colors[v];
            }
        }
        // allow at most one brand-new color (symmetry breaking)
        let cap = (*used + 1).min(k);
        for c in 0..cap {
            if forbidden & (1 << c) != 0 {
                continue;
            }
            let was_new = c == *used;
            colors[pick] = c;
            if was_new {
                *used += 1;
            }
            if rec(colors, used, adj, k, n) {
                return true;
            }
            colors[pick] = usize::MAX;
            if was_new {
                *used -= 1;
            }
        }
        false
    }
    if rec(&mut colors, &mut used, &adj, k, n) {
        Some(colors)
    } else {
        None
    }
}

/// Rational value with denominator witness, used for chi_f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Best rational approximation with denominator at most `max_den`
    /// (continued-fraction convergents plus the final semiconvergent).
    pub fn approx(x: f64, max_den: u64) -> Rational {
        assert!(x.is_finite() && max_den >= 1);
        let neg = x < 0.0;
        let target = x.abs();
        let mut t = target;
        let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, t.floor() as i64, 1i64);
        let mut frac = t - t.floor();
        while frac > 1e-15 {
            t = 1.0 / frac;
            let a = t.floor() as i64;
            frac = t - t.floor();
            let (p2, q2) = (a * p1 + p0, a * q1 + q0);
            if q2 as u64 > max_den {
                // best semiconvergent under the cap
                let k = ((max_den as i64) - q0) / q1;
                let conv = Rational { num: p1, den: q1 };
                let semi = if k >= 1 { Some(Rational { num: k * p1 + p0, den: k * q1 + q0 }) } else { None };
                let best = pick_closer(target, conv, semi);
                return Rational { num: sign(neg, best.num), den: best.den };
            }
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
        }
        Rational { num: sign(neg, p1), den: q1 }
    }
}

fn sign(neg: bool, v: i64) -> i64 {
    if neg {
        -v
    } else {
        v
    }
}

fn pick_closer(x: f64, a: Rational, b: Option<Rational>) -> Rational {
    match b {
        None => a,
        Some(b) => {
            if (b.value() - x).abs() < (a.value() - x).abs() {
                b
            } else {
                a
            }
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// All maximal stable sets (as sorted vertex lists), by Bron-Kerbosch
/// with pivoting on the complement.
pub fn maximal_stable_sets(g: &Graph) -> Vec<Vec<usize>> {
    assert!(g.n <= 64);
    // stable sets of G = cliques of the complement
    let comp = complement(g);
    let adj = comp.adj_masks();
    let mut out = Vec::new();
    let full: u64 = if g.n == 64 { !0 } else { (1u64 << g.n) - 1 };
    bron_kerbosch(0, full, 0, &adj, &mut out);
    let mut sets: Vec<Vec<usize>> = out
        .into_iter()
        .map(|mask| (0..g.n).filter(|&v| mask & (1 << v) != 0).collect())
        .collect();
    sets.sort();
    sets
}

fn bron_kerbosch(r: u64, p: u64, x: u64, adj: &[u64], out: &mut Vec<u64>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    // pivot: vertex of P | X with most neighbors in P
    let mut pivot = usize::MAX;
    let mut best = -1i64;
    let mut scan = p | x;
    while scan != 0 {
        let u = scan.trailing_zeros() as usize;
        scan &= scan - 1;
        let cnt = (adj[u] & p).count_ones() as i64;
        if cnt > best {
            best = cnt;
            pivot = u;
        }
    }
    let mut cand = if pivot == usize::MAX { p } else { p & !adj[pivot] };
    let mut p = p;
    let mut x = x;
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        let bit = 1u64 << v;
        cand &= cand - 1;
        bron_kerbosch(r | bit, p & adj[v], x & adj[v], adj, out);
        p &= !bit;
        x |= bit;
    }
}

/// Exact fractional chromatic number: minimize the total weight of
/// maximal stable sets covering every vertex at least once (n <= 14),
/// solved as a nonnegative-blocks-only conic program, then
/// reconstructed as a rational with denominator bounded by the number
/// of maximal stable sets.
pub fn exact_chi_f(g: &Graph) -> Result<Rational, GraphError> {
    if g.n > CHI_CAP {
        return Err(GraphError::SizeCapExceeded { what: "exact_chi_f".into(), n: g.n, cap: CHI_CAP });
    }
    if g.n == 0 {
        return Ok(Rational { num: 0, den: 1 });
    }
    let sets = maximal_stable_sets(g);
    let k = sets.len();
    // min sum lambda_h  s.t.  sum_{h: v in S_h} lambda_h - u_v = 1
    let mut p = ConicProblem::new(Sense::Min, vec![BlockKind::Nonneg(k), BlockKind::Nonneg(g.n)]);
    for h in 0..k {
        p.objective.push_lin(0, h, 1.0);
    }
    for v in 0..g.n {
        let mut row = SparseBlockMat::new();
        for (h, s) in sets.iter().enumerate() {
            if s.contains(&v) {
                row.push_lin(0, h, 1.0);
            }
        }
        row.push_lin(1, v, -1.0);
        p.add_constraint(row, 1.0);
    }
    let out = p.solve(1e-9, 300)?;
    if out.status != SolveStatus::Optimal {
        return Err(GraphError::InvalidParameter(format!(
            "fractional chromatic LP did not converge (status {:?})",
            out.status
        )));
    }
    let val = out.primal_value;
    let rat = Rational::approx(val, k as u64);
    if (rat.value() - val).abs() > 1e-6 {
        return Err(GraphError::InvalidParameter(format!(
            "rational reconstruction failed: {val} vs {rat}"
        )));
    }
    Ok(rat)
}

/// Both sides of the equivalence "chi(G) <= t iff alpha(G x K_t) = n".
pub fn chvatal_check(g: &Graph, t: usize) -> Result<(bool, bool), GraphError> {
    if t < 1 {
        return Err(GraphError::InvalidParameter("t must be >= 1".into()));
    }
    let chi_le_t = exact_chi(g)? <= t;
    let prod = cartesian_k(g, t)?;
    let alpha_eq_n = exact_alpha(&prod)? == g.n;
    Ok((chi_le_t, alpha_eq_n))
}

/// Brute-force isomorphism test for n <= 8.
pub fn is_isomorphic_brute(a: &Graph, b: &Graph) -> Result<bool, GraphError> {
    if a.n != b.n || a.edges.len() != b.edges.len() {
        return Ok(false);
    }
    if a.n > ISO_CAP {
        return Err(GraphError::SizeCapExceeded { what: "isomorphism".into(), n: a.n, cap: ISO_CAP });
    }
    let mut da: Vec<usize> = (0..a.n).map(|u| a.degree(u)).collect();
    let mut db: Vec<usize> = (0..b.n).map(|u| b.degree(u)).collect();
    da.sort_unstable();
    db.sort_unstable();
    if da != db {
        return Ok(false);
    }
    let mut perm: Vec<usize> = (0..a.n).collect();
    loop {
        if a.edges.iter().all(|&(u, v)| b.has_edge(perm[u], perm[v])) {
            return Ok(true);
        }
        if !next_permutation(&mut perm) {
            return Ok(false);
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Erdos-Renyi G(n, p) with a fixed seed; used by the test suites.
pub fn random_gnp(n: usize, prob: f64, seed: u64) -> Graph {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_range(0.0..1.0) < prob {
                edges.push((u, v));
            }
        }
    }
    Graph { n, edges }
}
