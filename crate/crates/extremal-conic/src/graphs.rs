//! Finite simple graphs and the DIMACS-flavored edge-list format.

use thiserror::Error;

/// An undirected simple graph on vertices `0..vertex_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    /// Normalized edge list: `u < v`, sorted, deduplicated.
    edges: Vec<(u32, u32)>,
    /// Adjacency bitmasks (supported up to 64 vertices; larger graphs keep
    /// an empty table and fall back to edge-list queries).
    adj: Vec<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge endpoint {v} out of range (vertex count {count})")]
    VertexOutOfRange { v: u32, count: usize },
    #[error("loop at vertex {v}")]
    Loop { v: u32 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Graph {
    pub fn new(vertex_count: usize, edges: &[(u32, u32)]) -> Result<Graph, GraphError> {
        let mut norm: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a as usize >= vertex_count {
                return Err(GraphError::VertexOutOfRange {
                    v: a,
                    count: vertex_count,
                });
            }
            if b as usize >= vertex_count {
                return Err(GraphError::VertexOutOfRange {
                    v: b,
                    count: vertex_count,
                });
            }
            if a == b {
                return Err(GraphError::Loop { v: a });
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut adj = Vec::new();
        if vertex_count <= 64 {
            adj = vec![0u64; vertex_count];
            for &(a, b) in &norm {
                adj[a as usize] |= 1 << b;
                adj[b as usize] |= 1 << a;
            }
        }
        Ok(Graph {
            vertex_count,
            edges: norm,
            adj,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        if a == b {
            return false;
        }
        if !self.adj.is_empty() {
            return self.adj[a as usize] & (1 << b) != 0;
        }
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Adjacency bitmask of `v` (graphs with at most 64 vertices).
    pub fn neighbors_mask(&self, v: u32) -> u64 {
        self.adj[v as usize]
    }

    /// A set of vertices (bitmask) is independent if no two are adjacent.
    pub fn is_independent_mask(&self, mask: u64) -> bool {
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros();
            rest &= rest - 1;
            if self.adj[v as usize] & rest != 0 {
                return false;
            }
        }
        true
    }

    pub fn is_independent(&self, set: &[u32]) -> bool {
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                if self.has_edge(a, b) {
                    return false;
                }
            }
        }
        true
    }

    pub fn empty(n: usize) -> Graph {
        Graph::new(n, &[]).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                edges.push((a, b));
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
        Graph::new(n, &edges).unwrap()
    }

    /// The Petersen graph: outer 5-cycle, inner pentagram, spokes.
    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5u32 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Graph::new(10, &edges).unwrap()
    }

    /// Parse the DIMACS-flavored format: lines `p edge <V> <E>`, then
    /// `e <u> <v>` with 1-based vertices; `c` comment lines and blank lines
    /// are ignored.
    pub fn parse_dimacs(text: &str) -> Result<Graph, GraphError> {
        let mut vertex_count: Option<usize> = None;
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("p") => {
                    if vertex_count.is_some() {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: "duplicate problem line".into(),
                        });
                    }
                    if parts.next() != Some("edge") {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: "expected `p edge <V> <E>`".into(),
                        });
                    }
                    let v: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| GraphError::Parse {
                            line: line_no,
                            message: "bad vertex count".into(),
                        })?;
                    // The edge count field is tolerated but not trusted.
                    vertex_count = Some(v);
                }
                Some("e") => {
                    let Some(vc) = vertex_count else {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: "edge before problem line".into(),
                        });
                    };
                    let mut read = || -> Result<u32, GraphError> {
                        parts
                            .next()
                            .and_then(|s| s.parse::<u32>().ok())
                            .ok_or_else(|| GraphError::Parse {
                                line: line_no,
                                message: "bad edge endpoint".into(),
                            })
                    };
                    let a = read()?;
                    let b = read()?;
                    if a == 0 || b == 0 || a as usize > vc || b as usize > vc {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: format!("endpoint out of range 1..={vc}"),
                        });
                    }
                    if a == b {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: "loops are not allowed".into(),
                        });
                    }
                    edges.push((a - 1, b - 1));
                }
                Some(other) => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: format!("unknown record `{other}`"),
                    });
                }
                None => {}
            }
        }
        let Some(vc) = vertex_count else {
            return Err(GraphError::Parse {
                line: 1,
                message: "missing problem line".into(),
            });
        };
        Graph::new(vc, &edges)
    }

    /// Serialize in the same DIMACS-flavored format (1-based).
    pub fn to_dimacs(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "p edge {} {}", self.vertex_count, self.edges.len()).unwrap();
        for &(a, b) in &self.edges {
            writeln!(out, "e {} {}", a + 1, b + 1).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_edges() {
        let g = Graph::new(4, &[(2, 1), (1, 2), (3, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 3), (1, 2)]);
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Graph::new(3, &[(0, 3)]),
            Err(GraphError::VertexOutOfRange { v: 3, count: 3 })
        );
        assert_eq!(Graph::new(3, &[(1, 1)]), Err(GraphError::Loop { v: 1 }));
    }

    #[test]
    fn parses_dimacs_with_comments() {
        let text = "c a comment\n\np edge 5 2\ne 1 2\ne 4 5\n";
        let g = Graph::parse_dimacs(text).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edges(), &[(0, 1), (3, 4)]);
        let again = Graph::parse_dimacs(&g.to_dimacs()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "p edge 3 1\ne 1 9\n";
        match Graph::parse_dimacs(bad) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match Graph::parse_dimacs("e 1 2\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn petersen_shape() {
        let g = Graph::petersen();
        assert_eq!(g.vertex_count(), 10);
        assert_eq!(g.edge_count(), 15);
        for v in 0..10 {
            assert_eq!(g.neighbors_mask(v).count_ones(), 3);
        }
    }
}
