//! Finite simple graphs, random generators and leaf removal.

mod generators;
mod leaf_removal;

use std::io::{BufRead, Write};

pub use generators::{gen_configuration, gen_erdos_renyi, ConfigurationStats, GraphSource};
pub use leaf_removal::{
    karp_sipser, ks_round_marginals, leaf_removal_fast, KsLabel, KsResult, LeafRemoval, RoundMarginal,
    RoundMarginals,
};

use crate::error::{Error, Result};

/// Undirected simple graph in CSR form. Neighbour lists are sorted, there are
/// no self-loops and no repeated edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    /// Builds a simple graph; self-loops and repeated edges are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let edges: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| {
                assert!(u < n && v < n, "edge ({u},{v}) out of range for n={n}");
                (u as u32, v as u32)
            })
            .collect();
        let mut deg = vec![0usize; n + 1];
        for &(u, v) in &edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut nbrs = vec![0u32; offsets[n]];
        for &(u, v) in &edges {
            nbrs[fill[u as usize]] = v;
            fill[u as usize] += 1;
            nbrs[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        // Sort and dedup each list, compacting in place.
        let mut out_offsets = vec![0usize; n + 1];
        let mut write = 0usize;
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            nbrs[lo..hi].sort_unstable();
            let mut last = u32::MAX;
            for i in lo..hi {
                let w = nbrs[i];
                if w != last {
                    nbrs[write] = w;
                    write += 1;
                    last = w;
                }
            }
            out_offsets[v + 1] = write;
        }
        nbrs.truncate(write);
        Self {
            offsets: out_offsets,
            neighbors: nbrs,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    /// Subgraph induced on `vertices`; vertex `i` of the result is `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut index = vec![u32::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i as u32;
        }
        let edges = vertices.iter().enumerate().flat_map(|(i, &v)| {
            let index = &index;
            self.neighbors(v).iter().filter_map(move |&w| {
                let j = index[w as usize];
                (j != u32::MAX && (i as u32) < j).then_some((i, j as usize))
            })
        });
        Graph::from_edges(vertices.len(), edges.collect::<Vec<_>>())
    }

    /// The graph with vertex `v` renamed `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n());
        Graph::from_edges(self.n(), self.edges().map(|(u, v)| (perm[u], perm[v])).collect::<Vec<_>>())
    }

    /// Removes every edge incident to `v`.
    pub fn isolate(&self, v: usize) -> Graph {
        Graph::from_edges(self.n(), self.edges().filter(|&(a, b)| a != v && b != v).collect::<Vec<_>>())
    }

    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (u, v) in self.edges() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }

    /// Dense 0/1 adjacency matrix.
    pub fn dense_adjacency(&self) -> Vec<Vec<i64>> {
        let n = self.n();
        let mut a = vec![vec![0i64; n]; n];
        for (u, v) in self.edges() {
            a[u][v] = 1;
            a[v][u] = 1;
        }
        a
    }

    /// Writes `# n=<n>` followed by one `u v` line per edge, sorted, 0-indexed.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# n={}", self.n())?;
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Reads the `u v` edge-list format. A `# n=<n>` line fixes the vertex
    /// count (keeping isolated vertices); otherwise it is `max index + 1`.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_index = None::<usize>;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("n=") {
                    declared = Some(n.trim().parse().map_err(|_| Error::EdgeList {
                        line: lineno + 1,
                        reason: format!("bad vertex count `{n}`"),
                    })?);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                let tok = parts.next().ok_or(Error::EdgeList {
                    line: lineno + 1,
                    reason: "expected two vertex indices".into(),
                })?;
                tok.parse().map_err(|_| Error::EdgeList {
                    line: lineno + 1,
                    reason: format!("`{tok}` is not a vertex index"),
                })
            };
            let (u, v) = (next()?, next()?);
            max_index = Some(max_index.map_or(u.max(v), |m: usize| m.max(u).max(v)));
            edges.push((u, v));
        }
        let inferred = max_index.map_or(0, |m| m + 1);
        let n = match declared {
            Some(n) if n < inferred => {
                return Err(Error::EdgeList {
                    line: 0,
                    reason: format!("declared n={n} but an edge uses vertex {}", inferred - 1),
                })
            }
            Some(n) => n,
            None => inferred,
        };
        Ok(Graph::from_edges(n, edges))
    }
}
