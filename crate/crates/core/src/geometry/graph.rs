//! Sample adjacency graphs and shortest-path distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Symmetric weighted adjacency lists.
pub type Adjacency = Vec<Vec<(usize, f64)>>;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    d: f64,
    v: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra distances from `source`; nodes farther than `cutoff` stay at +∞.
pub fn shortest_paths(adj: &Adjacency, source: usize, cutoff: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { d: 0.0, v: source });
    while let Some(Entry { d, v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] && nd <= cutoff {
                dist[w] = nd;
                heap.push(Entry { d: nd, v: w });
            }
        }
    }
    dist
}

/// Row-major strides of an index grid.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

/// Neighbour offsets: unit steps along each axis and diagonal steps within
/// each pair of axes.
fn stencil(dims: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for a in 0..dims {
        for s in [-1i64, 1] {
            let mut o = vec![0i64; dims];
            o[a] = s;
            out.push(o);
        }
    }
    for a in 0..dims {
        for b in a + 1..dims {
            for sa in [-1i64, 1] {
                for sb in [-1i64, 1] {
                    let mut o = vec![0i64; dims];
                    o[a] = sa;
                    o[b] = sb;
                    out.push(o);
                }
            }
        }
    }
    out
}

/// Adjacency of a structured grid occupying node indices
/// `base .. base + Π shape`, edge lengths from `length(a, b)`.
pub fn structured_edges<F: Fn(usize, usize) -> f64>(
    adj: &mut Adjacency,
    base: usize,
    shape: &[usize],
    periodic: &[bool],
    length: F,
) {
    let st = strides(shape);
    let total: usize = shape.iter().product();
    let offsets = stencil(shape.len());
    let mut idx = vec![0i64; shape.len()];
    for lin in 0..total {
        let mut rem = lin;
        for d in 0..shape.len() {
            idx[d] = (rem / st[d]) as i64;
            rem %= st[d];
        }
        'off: for o in &offsets {
            let mut nb = 0usize;
            for d in 0..shape.len() {
                let mut v = idx[d] + o[d];
                let m = shape[d] as i64;
                if v < 0 || v >= m {
                    if periodic[d] && m > 2 {
                        v = v.rem_euclid(m);
                    } else {
                        continue 'off;
                    }
                }
                nb += v as usize * st[d];
            }
            let (a, b) = (base + lin, base + nb);
            if a != b {
                adj[a].push((b, length(a, b)));
            }
        }
    }
}

/// Add an undirected edge.
pub fn add_edge(adj: &mut Adjacency, a: usize, b: usize, len: f64) {
    adj[a].push((b, len));
    adj[b].push((a, len));
}
