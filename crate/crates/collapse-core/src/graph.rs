//! Weighted graphs on point clouds: k-nearest-neighbour construction over an
//! embedding and Dijkstra shortest paths. Length metrics on sampled spaces
//! reduce to these.

use crate::{Error, Result};
use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// Undirected weighted graph in adjacency-list form.
#[derive(Debug, Clone)]
pub struct Graph {
    pub adj: Vec<Vec<(u32, f64)>>,
}

struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the closest node first
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Insert an undirected edge; parallel edges are allowed (Dijkstra takes
    /// the cheapest anyway).
    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        self.adj[a].push((b as u32, w));
        self.adj[b].push((a as u32, w));
    }

    /// Single-source shortest-path distances; unreachable nodes get +∞.
    pub fn dijkstra(&self, src: usize) -> Vec<f64> {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: src as u32 });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            let u = node as usize;
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    heap.push(HeapEntry { dist: nd, node: v });
                }
            }
        }
        dist
    }

    pub fn distance(&self, src: usize, dst: usize) -> f64 {
        self.dijkstra(src)[dst]
    }
}

/// k-nearest-neighbour graph: candidates ranked by Euclidean distance in the
/// `embed` coordinates, edge weights from the supplied exact length. Brute
/// force O(n²) — cloud sizes here stay in the low thousands.
pub fn knn_graph<const D: usize>(
    embed: &[[f64; D]],
    k: usize,
    mut length: impl FnMut(usize, usize) -> f64,
) -> Result<Graph> {
    let n = embed.len();
    if n < 2 || k == 0 {
        return Err(Error::Grid("knn graph needs at least two points and k >= 1"));
    }
    let k = k.min(n - 1);
    let mut g = Graph::new(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut d2 = 0.0;
            for a in 0..D {
                let d = embed[i][a] - embed[j][a];
                d2 += d * d;
            }
            cand.push((d2, j));
        }
        cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in cand.iter().take(k) {
            // undirected; avoid double-inserting the symmetric half
            if !g.adj[i].iter().any(|&(v, _)| v as usize == j) {
                g.add_edge(i, j, length(i, j));
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::TWO_PI;

    #[test]
    fn dijkstra_on_hand_built_graph() {
        let mut g = Graph::new(5);
        g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 2.0);
        g.add_edge(0, 3, 10.0);
        g.add_edge(2, 3, 1.0);
        let d = g.dijkstra(0);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 1.0);
        assert_eq!(d[2], 3.0);
        assert_eq!(d[3], 4.0);
        assert!(d[4].is_infinite());
        // symmetry
        assert_eq!(g.distance(3, 0), 4.0);
    }

    #[test]
    fn knn_circle_distance_approximates_arc_length() {
        let n = 128;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = TWO_PI * i as f64 / n as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let chord = |i: usize, j: usize| {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            dx.hypot(dy)
        };
        let g = knn_graph(&pts, 4, chord).unwrap();
        let d = g.distance(0, n / 2);
        // polygonal path slightly undershoots the half-circumference
        assert!(d <= core::f64::consts::PI + 1e-12, "{d}");
        assert!((d - core::f64::consts::PI).abs() < 0.02, "{d}");
    }

    #[test]
    fn knn_triangle_inequality_spot_check() {
        let pts: Vec<[f64; 2]> = [
            [0.0, 0.0],
            [1.0, 0.1],
            [2.0, -0.1],
            [3.0, 0.0],
            [1.5, 1.5],
        ]
        .into_iter()
        .collect();
        let euclid = |i: usize, j: usize| {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            dx.hypot(dy)
        };
        let g = knn_graph(&pts, 2, euclid).unwrap();
        for a in 0..pts.len() {
            let da = g.dijkstra(a);
            for b in 0..pts.len() {
                let db = g.dijkstra(b);
                for c in 0..pts.len() {
                    if da[b].is_finite() && db[c].is_finite() {
                        assert!(da[c] <= da[b] + db[c] + 1e-12);
                    }
                }
            }
        }
    }
}
