use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Undirected simple graph on players `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Network {
    adj: Vec<BTreeSet<usize>>,
}

fn norm(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Network {
    pub fn empty(n: usize) -> Self {
        Network { adj: vec![BTreeSet::new(); n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Network::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.adj[i].insert(j);
                g.adj[j].insert(i);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Network::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Builds from an edge bitmask where bit `edge_index(i, j, n)` marks link ij.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut g = Network::empty(n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if mask >> k & 1 == 1 {
                    g.adj[i].insert(j);
                    g.adj[j].insert(i);
                }
                k += 1;
            }
        }
        g
    }

    pub fn mask(&self) -> u64 {
        let n = self.n();
        assert!(n * (n.saturating_sub(1)) / 2 <= 64, "edge mask needs n <= 11");
        self.edges().fold(0, |m, (i, j)| m | 1 << edge_index(i, j, n))
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(BTreeSet::len).collect()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[i].iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n() && self.adj[i].contains(&j)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, s)| s.range(i + 1..).map(move |&j| (i, j)))
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for x in [i, j] {
            if x >= self.n() {
                return Err(Error::NodeOutOfRange { index: x, n: self.n() });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        if !self.adj[i].insert(j) {
            let (a, b) = norm(i, j);
            return Err(Error::DuplicateEdge(a, b));
        }
        self.adj[j].insert(i);
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        if !self.adj[i].remove(&j) {
            let (a, b) = norm(i, j);
            return Err(Error::MissingLink(a, b));
        }
        self.adj[j].remove(&i);
        Ok(())
    }

    /// g + ij
    pub fn with_edge(&self, i: usize, j: usize) -> Result<Self> {
        let mut g = self.clone();
        g.add_edge(i, j)?;
        Ok(g)
    }

    /// g − ij
    pub fn without_edge(&self, i: usize, j: usize) -> Result<Self> {
        let mut g = self.clone();
        g.remove_edge(i, j)?;
        Ok(g)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut g = Network::empty(self.n());
        for (i, j) in self.edges() {
            g.adj[perm[i]].insert(perm[j]);
            g.adj[perm[j]].insert(perm[i]);
        }
        g
    }

    /// Disjoint union; nodes of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Network) -> Self {
        let off = self.n();
        let mut adj = self.adj.clone();
        adj.extend(other.adj.iter().map(|s| s.iter().map(|&j| j + off).collect()));
        Network { adj }
    }
}

/// Bit position of link ij (i ≠ j) in the row-major upper-triangle order.
pub fn edge_index(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = norm(i, j);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Serialize for Network {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawNetwork { n: self.n(), edges: self.edges().map(|(i, j)| [i, j]).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawNetwork::deserialize(d)?;
        let edges: Vec<_> = raw.edges.iter().map(|e| (e[0], e[1])).collect();
        Network::from_edges(raw.n, &edges).map_err(serde::de::Error::custom)
    }
}
