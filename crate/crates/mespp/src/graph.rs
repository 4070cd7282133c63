//! Environment graphs, hop distances, and per-searcher reachability.
//!
//! Environments are undirected, connected, simple graphs with vertices
//! labeled `1..=n`. Index `0` is reserved everywhere for the capture state of
//! a belief vector, so vertex labels never collide with it. All types here
//! are immutable after construction and safe to share across threads.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::Error;
use crate::Result;

/// 1-based vertex label.
pub type Vertex = usize;

/// Undirected, connected, simple graph over vertices `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    adjacency: Vec<Vec<Vertex>>,
    adjacency_closed: Vec<Vec<Vertex>>,
}

impl Graph {
    /// Builds a graph from an edge list, validating simplicity, vertex
    /// ranges, and connectivity.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput {
                what: "graph",
                message: "vertex count must be at least 1".into(),
            });
        }
        let mut normalized = BTreeSet::new();
        for &(u, v) in edges {
            for w in [u, v] {
                if w < 1 || w > n {
                    return Err(Error::InvalidVertex { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let e = (u.min(v), u.max(v));
            if !normalized.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
        }
        let edges: Vec<(Vertex, Vertex)> = normalized.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u - 1].push(v);
            adjacency[v - 1].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let adjacency_closed = adjacency
            .iter()
            .enumerate()
            .map(|(i, list)| {
                let v = i + 1;
                let mut closed = Vec::with_capacity(list.len() + 1);
                closed.extend(list.iter().copied().filter(|&u| u < v));
                closed.push(v);
                closed.extend(list.iter().copied().filter(|&u| u > v));
                closed
            })
            .collect();
        let graph = Self {
            n,
            edges,
            adjacency,
            adjacency_closed,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    /// Builds a 4-connected grid with `rows * cols` vertices.
    ///
    /// Labeling is row-major: the vertex at row `r`, column `c` (0-based) is
    /// `r * cols + c + 1`, so instances are reproducible from the dimensions
    /// alone.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput {
                what: "grid",
                message: format!("dimensions must be positive, got {rows}x{cols}"),
            });
        }
        let at = |r: usize, c: usize| r * cols + c + 1;
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((at(r, c), at(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((at(r, c), at(r + 1, c)));
                }
            }
        }
        Self::from_edges(rows * cols, &edges)
    }

    /// Parses the line-oriented graph file format.
    ///
    /// The first non-comment line is `n=<count>`; every following line is
    /// `e <u> <v>` declaring one undirected edge. `#` starts a comment that
    /// runs to the end of the line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match n {
                None => {
                    let rest = line.strip_prefix('n').and_then(|r| {
                        let r = r.trim_start();
                        r.strip_prefix('=')
                    });
                    let Some(value) = rest else {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected `n=<count>` header, got `{line}`"),
                        });
                    };
                    let count: usize = value.trim().parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("invalid vertex count `{}`", value.trim()),
                    })?;
                    n = Some(count);
                }
                Some(_) => {
                    let mut fields = line.split_whitespace();
                    if fields.next() != Some("e") {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected `e <u> <v>`, got `{line}`"),
                        });
                    }
                    let mut endpoint = || -> Result<Vertex> {
                        let field = fields.next().ok_or(Error::Parse {
                            line: line_no,
                            message: "edge line needs two endpoints".into(),
                        })?;
                        field.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("invalid vertex `{field}`"),
                        })
                    };
                    let u = endpoint()?;
                    let v = endpoint()?;
                    if fields.next().is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "trailing tokens after edge declaration".into(),
                        });
                    }
                    edges.push((u, v));
                }
            }
        }
        let Some(n) = n else {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: "missing `n=<count>` header".into(),
            });
        };
        Self::from_edges(n, &edges)
    }

    /// Renders the graph in the same file format accepted by [`Graph::parse`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "e {u} {v}");
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        v >= 1 && v <= self.n
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if self.contains_vertex(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex {
                vertex: v,
                n: self.n,
            })
        }
    }

    /// Open neighborhood of `v`, sorted ascending.
    pub fn neighbors(&self, v: Vertex) -> Result<&[Vertex]> {
        self.check_vertex(v)?;
        Ok(&self.adjacency[v - 1])
    }

    /// Closed neighborhood of `v` (neighbors plus `v` itself), sorted
    /// ascending. These are the legal one-step moves of a searcher at `v`.
    pub fn neighbors_closed(&self, v: Vertex) -> Result<&[Vertex]> {
        self.check_vertex(v)?;
        Ok(&self.adjacency_closed[v - 1])
    }

    fn bfs(&self, source: Vertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        dist[source - 1] = 0;
        let mut frontier = vec![source];
        let mut next = Vec::new();
        let mut level = 0u32;
        while !frontier.is_empty() {
            level += 1;
            for &u in &frontier {
                for &w in &self.adjacency[u - 1] {
                    if dist[w - 1] == u32::MAX {
                        dist[w - 1] = level;
                        next.push(w);
                    }
                }
            }
            frontier.clear();
            std::mem::swap(&mut frontier, &mut next);
        }
        dist
    }

    fn check_connected(&self) -> Result<()> {
        let dist = self.bfs(1);
        match dist.iter().position(|&d| d == u32::MAX) {
            Some(idx) => Err(Error::Disconnected {
                from: 1,
                to: idx + 1,
            }),
            None => Ok(()),
        }
    }
}

/// All-pairs hop distances of a connected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<u32>,
}

impl DistanceMatrix {
    /// Computes exact hop distances by breadth-first search from every
    /// vertex.
    pub fn compute(graph: &Graph) -> Result<Self> {
        let n = graph.vertex_count();
        let mut hops = Vec::with_capacity(n * n);
        for source in 1..=n {
            let row = graph.bfs(source);
            if let Some(idx) = row.iter().position(|&d| d == u32::MAX) {
                return Err(Error::Disconnected {
                    from: source,
                    to: idx + 1,
                });
            }
            hops.extend(row);
        }
        Ok(Self { n, hops })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Hop distance between `u` and `v`.
    pub fn hops(&self, u: Vertex, v: Vertex) -> u32 {
        debug_assert!(u >= 1 && u <= self.n && v >= 1 && v <= self.n);
        self.hops[(u - 1) * self.n + (v - 1)]
    }

    /// Greatest distance from `v` to any other vertex.
    pub fn eccentricity(&self, v: Vertex) -> u32 {
        let row = &self.hops[(v - 1) * self.n..v * self.n];
        row.iter().copied().max().unwrap_or(0)
    }
}

/// The `(vertex, step)` states a searcher can occupy given its start vertex:
/// exactly the pairs with `hops(start, v) <= t` for `t` up to the horizon.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    start: Vertex,
    horizon: usize,
    per_step: Vec<Vec<Vertex>>,
}

impl ReachableSet {
    pub fn compute(
        graph: &Graph,
        distances: &DistanceMatrix,
        start: Vertex,
        horizon: usize,
    ) -> Result<Self> {
        graph.check_vertex(start)?;
        let n = graph.vertex_count();
        let per_step = (0..=horizon)
            .map(|t| {
                (1..=n)
                    .filter(|&v| distances.hops(start, v) as usize <= t)
                    .collect()
            })
            .collect();
        Ok(Self {
            start,
            horizon,
            per_step,
        })
    }

    pub fn start(&self) -> Vertex {
        self.start
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Vertices reachable at exactly step `t`, sorted ascending.
    pub fn at(&self, t: usize) -> &[Vertex] {
        &self.per_step[t]
    }

    pub fn contains(&self, v: Vertex, t: usize) -> bool {
        t <= self.horizon && self.per_step[t].binary_search(&v).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn grid_2x2_edges() {
        let g = Graph::grid(2, 2).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edges(), &[(1, 2), (1, 3), (2, 4), (3, 4)]);
    }

    #[test]
    fn grid_1x1_degenerate() {
        let g = Graph::grid(1, 1).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn grid_10x10_edge_count() {
        let g = Graph::grid(10, 10).unwrap();
        assert_eq!(g.vertex_count(), 100);
        assert_eq!(g.edge_count(), 180);
    }

    #[test]
    fn grid_edge_count_formula() {
        for rows in 1..=5 {
            for cols in 1..=5 {
                let g = Graph::grid(rows, cols).unwrap();
                assert_eq!(g.edge_count(), rows * (cols - 1) + cols * (rows - 1));
            }
        }
    }

    #[test]
    fn closed_neighborhood_includes_self() {
        let g = Graph::grid(2, 2).unwrap();
        assert_eq!(g.neighbors_closed(1).unwrap(), &[1, 2, 3]);
        let p = path_graph(3);
        assert_eq!(p.neighbors_closed(2).unwrap(), &[1, 2, 3]);
        let single = Graph::grid(1, 1).unwrap();
        assert_eq!(single.neighbors_closed(1).unwrap(), &[1]);
    }

    #[test]
    fn neighbors_rejects_out_of_range() {
        let g = Graph::grid(2, 2).unwrap();
        assert!(matches!(
            g.neighbors_closed(5),
            Err(Error::InvalidVertex { vertex: 5, n: 4 })
        ));
        assert!(matches!(g.neighbors(0), Err(Error::InvalidVertex { .. })));
    }

    #[test]
    fn distances_on_grids() {
        let g = Graph::grid(2, 2).unwrap();
        let d = DistanceMatrix::compute(&g).unwrap();
        assert_eq!(d.hops(1, 4), 2);
        for v in 1..=4 {
            assert_eq!(d.hops(v, v), 0);
        }
        let big = Graph::grid(10, 10).unwrap();
        let d = DistanceMatrix::compute(&big).unwrap();
        assert_eq!(d.hops(1, 100), 18);
    }

    #[test]
    fn distances_match_single_source_bfs() {
        let g = Graph::grid(3, 4).unwrap();
        let d = DistanceMatrix::compute(&g).unwrap();
        for source in 1..=g.vertex_count() {
            let row = g.bfs(source);
            for v in 1..=g.vertex_count() {
                assert_eq!(d.hops(source, v), row[v - 1]);
            }
        }
    }

    #[test]
    fn distance_edge_iff_one_hop() {
        let g = Graph::grid(3, 3).unwrap();
        let d = DistanceMatrix::compute(&g).unwrap();
        for u in 1..=9 {
            for v in 1..=9 {
                let is_edge = g.neighbors(u).unwrap().contains(&v);
                assert_eq!(d.hops(u, v) == 1, is_edge);
            }
        }
    }

    #[test]
    fn reachable_states_small() {
        let g = Graph::grid(2, 2).unwrap();
        let d = DistanceMatrix::compute(&g).unwrap();
        let r = ReachableSet::compute(&g, &d, 1, 2).unwrap();
        assert_eq!(r.at(0), &[1]);
        assert_eq!(r.at(1), &[1, 2, 3]);
        assert_eq!(r.at(2), &[1, 2, 3, 4]);

        let p = path_graph(3);
        let pd = DistanceMatrix::compute(&p).unwrap();
        let r = ReachableSet::compute(&p, &pd, 1, 2).unwrap();
        assert_eq!(r.at(2), &[1, 2, 3]);
    }

    #[test]
    fn reachable_states_monotone_and_saturating() {
        let g = Graph::grid(3, 3).unwrap();
        let d = DistanceMatrix::compute(&g).unwrap();
        for start in 1..=9 {
            let ecc = d.eccentricity(start) as usize;
            let r = ReachableSet::compute(&g, &d, start, ecc + 2).unwrap();
            for t in 0..ecc + 2 {
                assert!(r.at(t).len() <= r.at(t + 1).len());
                for &v in r.at(t) {
                    assert!(r.contains(v, t + 1));
                }
            }
            assert_eq!(r.at(ecc).len(), 9);
        }
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let g = Graph::parse("n=2\ne 1 2\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges(), &[(1, 2)]);

        let p = Graph::parse("# a path\nn=3\ne 1 2\ne 2 3\n").unwrap();
        assert_eq!(p.edges(), &[(1, 2), (2, 3)]);

        let reparsed = Graph::parse(&p.to_file_string()).unwrap();
        assert_eq!(reparsed, p);

        assert!(matches!(
            Graph::parse("n=2\ne 1 1\n"),
            Err(Error::SelfLoop(1))
        ));
        assert!(matches!(
            Graph::parse("n=2\ne 1 2\ne 2 1\n"),
            Err(Error::DuplicateEdge(1, 2))
        ));
        assert!(matches!(
            Graph::parse("n=4\ne 1 2\ne 3 4\n"),
            Err(Error::Disconnected { .. })
        ));
        let err = Graph::parse("n=2\nedge 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(
            Graph::parse("e 1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Graph::parse("n=3\ne 1 4\n"),
            Err(Error::InvalidVertex { vertex: 4, n: 3 })
        ));
    }
}
