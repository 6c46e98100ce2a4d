//! Exhaustive small-instance ground truth.
//!
//! Payoffs come from enumerating the protocol's outcome space (requester, favor type,
//! availability vector, provider choice) for every labeled graph, never from the closed
//! forms in `payoff`. Verdicts then apply the definitions directly on edge bitmasks.

use std::collections::HashSet;
use std::io::Write;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{edge_index, Network};
use crate::society::Society;

/// Largest `n` for classification (full payoff tables are `2^{n(n−1)/2}` rows).
pub const CLASSIFY_CAP: usize = 6;
/// Largest `n` for isomorphism-class enumeration.
pub const ENUMERATE_CAP: usize = 7;

/// Slack for weak inequalities on margins; outcome sums carry rounding noise.
const MARGIN_TOL: f64 = 1e-9;
/// Payoff differences within this are ties.
const PAYOFF_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dedupe {
    Isomorphism,
    AllLabeled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationScope {
    pub n: usize,
    pub dedupe: Dedupe,
}

fn n_edges(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Permutation tables: `maps[k][e]` is the image of edge bit `e` under permutation `k`.
fn edge_maps(n: usize) -> Vec<Vec<usize>> {
    let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
    (0..n)
        .permutations(n)
        .map(|perm| pairs.iter().map(|&(a, b)| edge_index(perm[a], perm[b], n)).collect())
        .collect()
}

/// Smallest relabeled bitmask over all permutations.
pub fn canonical_mask(mask: u64, maps: &[Vec<usize>]) -> u64 {
    maps.iter()
        .map(|m| {
            let mut out = 0u64;
            let mut rest = mask;
            while rest != 0 {
                let e = rest.trailing_zeros() as usize;
                out |= 1 << m[e];
                rest &= rest - 1;
            }
            out
        })
        .min()
        .unwrap_or(mask)
}

/// Edge bitmasks of all labeled graphs, or one canonical mask per isomorphism class
/// (sorted), built by adding one vertex at a time to the previous level's classes.
pub fn enumerate_masks(scope: EnumerationScope) -> Result<Vec<u64>> {
    let n = scope.n;
    match scope.dedupe {
        Dedupe::AllLabeled => {
            if n > CLASSIFY_CAP {
                return Err(Error::EnumerationCap { n, cap: CLASSIFY_CAP });
            }
            Ok((0..1u64 << n_edges(n)).collect())
        }
        Dedupe::Isomorphism => {
            if n > ENUMERATE_CAP {
                return Err(Error::EnumerationCap { n, cap: ENUMERATE_CAP });
            }
            let mut classes = vec![0u64];
            for k in 1..n {
                let maps = edge_maps(k + 1);
                let mut next = HashSet::new();
                for &m in &classes {
                    let base = Network::from_mask(k, m);
                    for sub in 0..1u64 << k {
                        let mut g = base.disjoint_union(&Network::empty(1));
                        for x in 0..k {
                            if sub >> x & 1 == 1 {
                                g.add_edge(x, k)?;
                            }
                        }
                        next.insert(canonical_mask(g.mask(), &maps));
                    }
                }
                classes = next.into_iter().sorted().collect();
            }
            Ok(classes)
        }
    }
}

pub fn enumerate_graphs(scope: EnumerationScope) -> Result<Vec<Network>> {
    Ok(enumerate_masks(scope)?.into_iter().map(|m| Network::from_mask(scope.n, m)).collect())
}

/// Outcome-space payoffs and favor flows for every labeled graph on `n` nodes.
pub struct PayoffTable {
    n: usize,
    /// `payoff[mask * n + i]`
    payoff: Vec<f64>,
    /// `flow[(mask * n + r) * n + j]`: per-period probability that `j` serves `r`.
    flow: Vec<f64>,
}

impl PayoffTable {
    pub fn build(society: &Society) -> Result<Self> {
        let n = society.n();
        if n > CLASSIFY_CAP {
            return Err(Error::EnumerationCap { n, cap: CLASSIFY_CAP });
        }
        let nf = society.matrix.n_favor_types();
        // Column per favor type: who can provide it, with what probability.
        let cols: Vec<Vec<f64>> =
            (0..nf).map(|f| (0..n).map(|i| society.matrix.prob(i, f)).collect()).collect();
        let per_type = society.params.alpha / nf as f64;
        let masks = 1usize << n_edges(n);
        let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..masks)
            .into_par_iter()
            .map(|mask| {
                let g = Network::from_mask(n, mask as u64);
                let mut u = vec![0.0; n];
                let mut flow = vec![0.0; n * n];
                for r in 0..n {
                    let nb: Vec<usize> = g.neighbors(r).collect();
                    for col in &cols {
                        for avail in 0..1u32 << nb.len() {
                            let mut w = per_type;
                            for (k, &j) in nb.iter().enumerate() {
                                let pj = col[j];
                                w *= if avail >> k & 1 == 1 { pj } else { 1.0 - pj };
                            }
                            let able = avail.count_ones();
                            if w == 0.0 || able == 0 {
                                continue;
                            }
                            u[r] += w * society.players[r].v;
                            let share = w / able as f64;
                            for (k, &j) in nb.iter().enumerate() {
                                if avail >> k & 1 == 1 {
                                    u[j] -= share * society.players[j].c;
                                    flow[r * n + j] += share;
                                }
                            }
                        }
                    }
                }
                (u, flow)
            })
            .collect();
        let mut payoff = Vec::with_capacity(masks * n);
        let mut flow = Vec::with_capacity(masks * n * n);
        for (u, f) in chunks {
            payoff.extend(u);
            flow.extend(f);
        }
        Ok(PayoffTable { n, payoff, flow })
    }

    pub fn payoff(&self, mask: u64, i: usize) -> f64 {
        self.payoff[mask as usize * self.n + i]
    }

    /// Expected favors per period that `r` receives from `j`.
    pub fn flow(&self, mask: u64, r: usize, j: usize) -> f64 {
        self.flow[(mask as usize * self.n + r) * self.n + j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphVerdict {
    pub mask: u64,
    pub stable: bool,
    pub strongly_stable: bool,
    pub sst_with_transfers: bool,
}

struct Judge<'a> {
    n: usize,
    society: &'a Society,
    table: &'a PayoffTable,
}

impl Judge<'_> {
    fn bit(&self, i: usize, j: usize) -> u64 {
        1 << edge_index(i, j, self.n)
    }

    /// Sustainability margin of `i` on link `ij ∈ g`, with an extra per-period
    /// transfer term `extra` credited to `i` in `g` only.
    fn margin(&self, g: u64, i: usize, j: usize, extra: f64) -> f64 {
        let t = &self.society.players[i];
        let with = self.table.payoff(g, i) + extra;
        let without = self.table.payoff(g & !self.bit(i, j), i);
        t.delta / (1.0 - t.delta) * (with - without) - (t.c - self.society.params.gamma)
    }

    fn stable(&self, g: u64) -> bool {
        (0..self.n).tuple_combinations().all(|(i, j)| {
            g & self.bit(i, j) == 0
                || (self.margin(g, i, j, 0.0) >= -MARGIN_TOL && self.margin(g, j, i, 0.0) >= -MARGIN_TOL)
        })
    }

    fn incident(&self, g: u64, i: usize, j: usize) -> u64 {
        (0..self.n)
            .filter(|&k| k != i && k != j)
            .flat_map(|k| [self.bit(i, k), self.bit(j, k)])
            .fold(0, |m, b| m | b)
            & g
    }

    /// Every `g′` obtainable from `g` by pair `ij`.
    fn deviations(&self, g: u64, i: usize, j: usize) -> impl Iterator<Item = u64> {
        let inc = self.incident(g, i, j);
        let add = self.bit(i, j);
        let mut sub = inc;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = (g & !sub) | add;
            if sub == 0 {
                done = true;
            } else {
                sub = (sub - 1) & inc;
            }
            Some(out)
        })
    }

    /// Checks all four conditions for transfers `(t_i, t_j)`.
    fn violates_with(&self, g: u64, g2: u64, i: usize, j: usize, t_i: f64, t_j: f64) -> bool {
        let tb = self.table;
        // ũ_i = u_i − (favors i receives from j)·t_i + (favors j receives from i)·t_j
        let e_i = -tb.flow(g2, i, j) * t_i + tb.flow(g2, j, i) * t_j;
        let e_j = -e_i;
        let gain_i = tb.payoff(g2, i) + e_i - tb.payoff(g, i);
        let gain_j = tb.payoff(g2, j) + e_j - tb.payoff(g, j);
        self.margin(g2, i, j, e_i) >= -MARGIN_TOL
            && self.margin(g2, j, i, e_j) >= -MARGIN_TOL
            && gain_i >= -PAYOFF_TOL
            && gain_j >= -PAYOFF_TOL
            && (gain_i > PAYOFF_TOL || gain_j > PAYOFF_TOL)
    }

    /// Searches transfer amounts paid by one side: the four constraint values are
    /// affine in the amount, so it suffices to test 0, each root, the midpoints between
    /// roots, and a point past the last root.
    fn violates_with_some_transfer(&self, g: u64, g2: u64, i: usize, j: usize) -> bool {
        if self.violates_with(g, g2, i, j, 0.0, 0.0) {
            return true;
        }
        let can = |x: usize| self.society.players[x].can_transfer;
        for payer_i in [true, false] {
            if !can(if payer_i { i } else { j }) {
                continue;
            }
            let at = |s: f64| if payer_i { (s, 0.0) } else { (0.0, s) };
            let values = |s: f64| {
                let (ti, tj) = at(s);
                let e_i = -self.table.flow(g2, i, j) * ti + self.table.flow(g2, j, i) * tj;
                [
                    self.margin(g2, i, j, e_i),
                    self.margin(g2, j, i, -e_i),
                    self.table.payoff(g2, i) + e_i - self.table.payoff(g, i),
                    self.table.payoff(g2, j) - e_i - self.table.payoff(g, j),
                ]
            };
            let (v0, v1) = (values(0.0), values(1.0));
            let mut roots: Vec<f64> = v0
                .iter()
                .zip(&v1)
                .filter(|(a, b)| a != b)
                .map(|(a, b)| a / (a - b))
                .filter(|s| *s > 0.0 && s.is_finite())
                .collect();
            roots.sort_by(f64::total_cmp);
            let mut cands = roots.clone();
            cands.extend(roots.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            if let Some(&first) = roots.first() {
                cands.push(0.5 * first);
            }
            cands.push(roots.last().map_or(1.0, |r| 2.0 * r + 1.0));
            for s in cands {
                let (ti, tj) = at(s);
                if self.violates_with(g, g2, i, j, ti, tj) {
                    return true;
                }
            }
        }
        false
    }

    fn pair_violation(&self, g: u64, transfers: bool) -> bool {
        (0..self.n).tuple_combinations().any(|(i, j)| {
            g & self.bit(i, j) == 0
                && self.deviations(g, i, j).any(|g2| {
                    if transfers {
                        self.violates_with_some_transfer(g, g2, i, j)
                    } else {
                        self.violates_with(g, g2, i, j, 0.0, 0.0)
                    }
                })
        })
    }

    fn verdict(&self, g: u64) -> GraphVerdict {
        let stable = self.stable(g);
        GraphVerdict {
            mask: g,
            stable,
            strongly_stable: stable && !self.pair_violation(g, false),
            sst_with_transfers: stable && !self.pair_violation(g, true),
        }
    }
}

/// Definition-level verdicts for every graph in scope. `society` is resized to `scope.n`.
pub fn classify_all(scope: EnumerationScope, society: &Society) -> Result<Vec<GraphVerdict>> {
    if scope.n > CLASSIFY_CAP {
        return Err(Error::EnumerationCap { n: scope.n, cap: CLASSIFY_CAP });
    }
    let society = society.resized(scope.n);
    let table = PayoffTable::build(&society)?;
    classify_with_table(scope, &society, &table)
}

/// As [`classify_all`] with a prebuilt table for `society` (already at `scope.n`).
pub fn classify_with_table(
    scope: EnumerationScope,
    society: &Society,
    table: &PayoffTable,
) -> Result<Vec<GraphVerdict>> {
    let judge = Judge { n: scope.n, society, table };
    let masks = enumerate_masks(scope)?;
    Ok(masks.par_iter().map(|&g| judge.verdict(g)).collect())
}

/// Masks of the stable graphs in scope. `society` is resized to `scope.n`.
pub fn stable_masks(scope: EnumerationScope, society: &Society) -> Result<Vec<u64>> {
    let society = society.resized(scope.n);
    let table = PayoffTable::build(&society)?;
    let judge = Judge { n: scope.n, society: &society, table: &table };
    let masks = enumerate_masks(scope)?;
    Ok(masks.into_par_iter().filter(|&g| judge.stable(g)).collect())
}

/// Largest degree among stable graphs in scope.
pub fn max_stable_degree(scope: EnumerationScope, society: &Society) -> Result<usize> {
    Ok(stable_masks(scope, society)?
        .into_iter()
        .map(|g| Network::from_mask(scope.n, g).degrees().into_iter().max().unwrap_or(0))
        .max()
        .unwrap_or(0))
}

pub fn write_classification_csv<W: Write>(out: W, n: usize, verdicts: &[GraphVerdict]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "graph_id", "stable", "strongly_stable", "sst_with_transfers"])?;
    for v in verdicts {
        w.write_record([
            n.to_string(),
            v.mask.to_string(),
            v.stable.to_string(),
            v.strongly_stable.to_string(),
            v.sst_with_transfers.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
