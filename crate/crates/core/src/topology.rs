//! Population structures: the periodic square lattice and Barabási–Albert
//! scale-free graphs.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    /// `side × side` torus with von Neumann neighbourhoods.
    Lattice { side: usize },
    /// Barabási–Albert graph where each arriving node brings `m` edges.
    ScaleFree { m: usize },
    /// Arbitrary undirected graph built from an edge list.
    Custom,
}

/// Immutable undirected simple graph stored in compressed adjacency form.
///
/// Neighbour lists are sorted ascending and free of duplicates and self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    kind: NetworkKind,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
}

impl Network {
    fn from_adjacency(kind: NetworkKind, mut adjacency: Vec<Vec<NodeId>>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for (i, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_unstable();
            adj.dedup();
            adj.retain(|&j| j != i);
            neighbors.extend_from_slice(adj);
            offsets.push(neighbors.len());
        }
        Network {
            kind,
            offsets,
            neighbors,
        }
    }

    /// Builds a graph from an undirected edge list. Duplicate edges collapse;
    /// self-loops are rejected.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("a network needs at least one node"));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) references a node outside 0..{node_count}"
                )));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on node {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Ok(Self::from_adjacency(NetworkKind::Custom, adjacency))
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: NodeId) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn mean_degree(&self) -> f64 {
        self.neighbors.len() as f64 / self.node_count() as f64
    }

    /// Each undirected edge once, smaller id first, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(i) = stack.pop() {
            for &j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
        reached == n
    }

    /// Side length when this is a lattice.
    pub fn lattice_side(&self) -> Result<usize> {
        match self.kind {
            NetworkKind::Lattice { side } => Ok(side),
            _ => Err(Error::UnsupportedTopology),
        }
    }

    /// Writes the edge list as CSV with header `src,dst`.
    pub fn write_edge_list<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst"])?;
        for (a, b) in self.edges() {
            w.write_record([a.to_string(), b.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<edge list>", e))?;
        Ok(())
    }
}

/// Periodic `side × side` lattice; node `(row, col)` has id `row * side + col`.
pub fn build_lattice(side: usize) -> Result<Network> {
    if side < 2 {
        return Err(Error::invalid(format!("lattice side must be >= 2, got {side}")));
    }
    let n = side * side;
    let adjacency = (0..n)
        .map(|i| {
            let (r, c) = (i / side, i % side);
            vec![
                ((r + side - 1) % side) * side + c,
                ((r + 1) % side) * side + c,
                r * side + (c + side - 1) % side,
                r * side + (c + 1) % side,
            ]
        })
        .collect();
    Ok(Network::from_adjacency(NetworkKind::Lattice { side }, adjacency))
}

/// Barabási–Albert preferential attachment.
///
/// Starts from a complete graph on `m + 1` nodes; every later node links to `m`
/// distinct existing nodes chosen with probability proportional to degree.
pub fn build_scale_free<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Network> {
    if m == 0 {
        return Err(Error::invalid("scale-free attachment count m must be >= 1"));
    }
    if n <= m {
        return Err(Error::invalid(format!(
            "scale-free graph needs n > m, got n={n}, m={m}"
        )));
    }
    let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    // One entry per edge endpoint: uniform draws from it are degree-proportional.
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * (m * (m + 1) / 2 + m * n));
    for a in 0..=m {
        for b in (a + 1)..=m {
            adjacency[a].push(b);
            adjacency[b].push(a);
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in (m + 1)..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            adjacency[new].push(t);
            adjacency[t].push(new);
            endpoints.push(new);
            endpoints.push(t);
        }
    }
    Ok(Network::from_adjacency(NetworkKind::ScaleFree { m }, adjacency))
}

#[inline]
fn axis_distance(a: usize, b: usize, side: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(side - d)
}

/// Manhattan distance on the torus.
pub fn lattice_distance(net: &Network, i: NodeId, j: NodeId) -> Result<usize> {
    let side = net.lattice_side()?;
    Ok(torus_distance(side, i, j))
}

#[inline]
pub(crate) fn torus_distance(side: usize, i: NodeId, j: NodeId) -> usize {
    axis_distance(i / side, j / side, side) + axis_distance(i % side, j % side, side)
}

/// Largest Manhattan distance realizable on a torus of the given side.
pub fn max_lattice_distance(side: usize) -> usize {
    2 * (side / 2)
}

/// Displacements `(drow, dcol)` modulo `side` whose torus length is exactly `l`.
pub(crate) fn offsets_at_distance(side: usize, l: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for dr in 0..side {
        let ar = dr.min(side - dr);
        if ar > l {
            continue;
        }
        for dc in 0..side {
            if ar + dc.min(side - dc) == l {
                out.push((dr, dc));
            }
        }
    }
    out
}

/// Every unordered pair `{i, j}` at torus distance `l`, each yielded once with `i < j`.
#[derive(Clone, Debug)]
pub struct PairsAtDistance {
    side: usize,
    offsets: Vec<(usize, usize)>,
    node: NodeId,
    offset: usize,
    remaining: usize,
}

impl PairsAtDistance {
    /// Total number of pairs, known without iterating.
    pub fn pair_count(&self) -> usize {
        self.remaining
    }
}

impl Iterator for PairsAtDistance {
    type Item = (NodeId, NodeId);

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.side * self.side;
        while self.node < n {
            if self.offset == self.offsets.len() {
                self.offset = 0;
                self.node += 1;
                continue;
            }
            let (dr, dc) = self.offsets[self.offset];
            self.offset += 1;
            let (r, c) = (self.node / self.side, self.node % self.side);
            let j = ((r + dr) % self.side) * self.side + (c + dc) % self.side;
            if self.node < j {
                self.remaining -= 1;
                return Some((self.node, j));
            }
        }
        None
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for PairsAtDistance {}

pub fn pairs_at_distance(net: &Network, l: usize) -> Result<PairsAtDistance> {
    let side = net.lattice_side()?;
    if l == 0 {
        return Err(Error::invalid("pair distance must be >= 1"));
    }
    let offsets = offsets_at_distance(side, l);
    // Each ordered pair corresponds to exactly one displacement.
    let remaining = side * side * offsets.len() / 2;
    Ok(PairsAtDistance {
        side,
        offsets,
        node: 0,
        offset: 0,
        remaining,
    })
}
