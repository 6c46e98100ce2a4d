//! Pairwise deviations, strong stability (with and without transfers), degree-count
//! audits, regular constructions and stratification summaries.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::payoff::{payoff, provider_share, substitutable_from_degrees};
use crate::society::{FavorMatrix, Society, TransferScheme};
use crate::stability::{cooperation_bound, is_stable, player_bound, sustainability_margin};

/// Default limit on `d_i + d_j` for exhaustive removal subsets.
pub const DEVIATION_CAP: usize = 24;

/// Link `ij` added; `removed` links (each incident to `i` or `j`) dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub i: usize,
    pub j: usize,
    pub removed: Vec<(usize, usize)>,
}

impl Deviation {
    pub fn apply(&self, net: &Network) -> Result<Network> {
        let mut g = net.clone();
        for &(a, b) in &self.removed {
            g.remove_edge(a, b)?;
        }
        g.add_edge(self.i, self.j)?;
        Ok(g)
    }
}

/// Links incident to `i` or `j`, as sorted `(min, max)` pairs.
pub fn removable_links(i: usize, j: usize, net: &Network) -> Vec<(usize, usize)> {
    net.neighbors(i)
        .map(|k| (i.min(k), i.max(k)))
        .chain(net.neighbors(j).map(|k| (j.min(k), j.max(k))))
        .sorted()
        .collect()
}

/// All `2^(d_i+d_j)` deviations for the pair, by removal-set size then lexicographically.
pub fn enumerate_deviations(i: usize, j: usize, net: &Network) -> Result<impl Iterator<Item = Deviation>> {
    if i == j {
        return Err(Error::SelfLoop(i));
    }
    if net.has_edge(i, j) {
        return Err(Error::LinkPresent(i.min(j), i.max(j)));
    }
    let links = removable_links(i, j, net);
    let m = links.len();
    Ok((0..=m).flat_map(move |s| {
        let links = links.clone();
        (0..m).combinations(s).map(move |idx| Deviation {
            i,
            j,
            removed: idx.iter().map(|&k| links[k]).collect(),
        })
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// Every removal subset.
    Exact,
    /// At most one removed link per deviating player.
    ProofPattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { mode: SearchMode::Exact, cap: DEVIATION_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub deviation: Deviation,
    pub transfers: Option<TransferScheme>,
    /// Sustainability margins of `ij` in `g′`, transfers included.
    pub margin_i: f64,
    pub margin_j: f64,
    /// `ũ(g′) − u(g)` for each player.
    pub gain_i: f64,
    pub gain_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub witness: Option<ViolationWitness>,
    /// Pairs skipped because `d_i + d_j` exceeded the cap.
    pub truncated_pairs: Vec<(usize, usize)>,
    pub deviations_checked: u64,
    pub warnings: Vec<String>,
}

impl SearchReport {
    /// No witness and nothing skipped.
    pub fn verified(&self) -> bool {
        self.witness.is_none() && self.truncated_pairs.is_empty()
    }
}

/// Payoff facts about one deviation.
struct DevEval {
    u_i: f64,
    u_j: f64,
    /// `u(g′) − u(g′−ij)`.
    gain_link_i: f64,
    gain_link_j: f64,
    margin_i: f64,
    margin_j: f64,
    w_i: f64,
    w_j: f64,
}

struct Evaluator<'a> {
    net: &'a Network,
    society: &'a Society,
    deg: Vec<usize>,
    /// Per-node count of removed links in the current subset, per side.
    cut_i: Vec<u8>,
    cut_j: Vec<u8>,
    buf: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    fn new(net: &'a Network, society: &'a Society) -> Self {
        Evaluator {
            net,
            society,
            deg: net.degrees(),
            cut_i: vec![0; net.n()],
            cut_j: vec![0; net.n()],
            buf: Vec::new(),
        }
    }

    fn k(&self, x: usize) -> (f64, f64) {
        let t = &self.society.players[x];
        (t.delta / (1.0 - t.delta), t.c - self.society.params.gamma)
    }

    fn eval(&mut self, i: usize, j: usize, removed: &[(usize, usize)]) -> Result<DevEval> {
        match self.society.matrix {
            FavorMatrix::Substitutable { p } => Ok(self.eval_fast(p, i, j, removed)),
            _ => self.eval_generic(i, j, removed),
        }
    }

    fn eval_generic(&self, i: usize, j: usize, removed: &[(usize, usize)]) -> Result<DevEval> {
        let dev = Deviation { i, j, removed: removed.to_vec() };
        let g2 = dev.apply(self.net)?;
        let g2m = g2.without_edge(i, j)?;
        let s = self.society;
        let u_i = payoff(i, &g2, s)?.total;
        let u_j = payoff(j, &g2, s)?.total;
        Ok(DevEval {
            u_i,
            u_j,
            gain_link_i: u_i - payoff(i, &g2m, s)?.total,
            gain_link_j: u_j - payoff(j, &g2m, s)?.total,
            margin_i: sustainability_margin(i, j, &g2, s)?,
            margin_j: sustainability_margin(j, i, &g2, s)?,
            w_i: 0.0,
            w_j: 0.0,
        })
    }

    /// Same arithmetic as `payoff_substitutable`, on degrees adjusted for the subset.
    fn side(&mut self, p: f64, me: usize, other: usize, d_other: usize) -> (f64, f64, usize) {
        let s = self.society;
        let t = &s.players[me];
        let cut_me = if me < other { &self.cut_i } else { &self.cut_j };
        self.buf.clear();
        for k in self.net.neighbors(me) {
            if cut_me[k] == 0 {
                let d = self.deg[k] - self.cut_i[k] as usize - self.cut_j[k] as usize;
                self.buf.push(d);
            }
        }
        let d_me = self.buf.len() + 1;
        let (b0, c0) = substitutable_from_degrees(s.params.alpha, p, t.v, t.c, d_me - 1, &mut self.buf);
        self.buf.push(d_other);
        let (b1, c1) = substitutable_from_degrees(s.params.alpha, p, t.v, t.c, d_me, &mut self.buf);
        (b1 - c1, (b1 - c1) - (b0 - c0), d_me)
    }

    fn eval_fast(&mut self, p: f64, i: usize, j: usize, removed: &[(usize, usize)]) -> DevEval {
        // `cut_i` tracks links dropped at the smaller index of the pair.
        let (lo, hi) = (i.min(j), i.max(j));
        for &(a, b) in removed {
            if a == lo || b == lo {
                self.cut_i[a + b - lo] += 1;
                self.cut_i[lo] += 1;
            } else {
                self.cut_j[a + b - hi] += 1;
                self.cut_j[hi] += 1;
            }
        }
        let d_lo = self.deg[lo] - self.cut_i[lo] as usize + 1;
        let d_hi = self.deg[hi] - self.cut_j[hi] as usize + 1;
        let (u_lo, g_lo, _) = self.side(p, lo, hi, d_hi);
        let (u_hi, g_hi, _) = self.side(p, hi, lo, d_lo);
        for &(a, b) in removed {
            if a == lo || b == lo {
                self.cut_i[a + b - lo] -= 1;
                self.cut_i[lo] -= 1;
            } else {
                self.cut_j[a + b - hi] -= 1;
                self.cut_j[hi] -= 1;
            }
        }
        let alpha = self.society.params.alpha;
        let (w_lo, w_hi) = (alpha * provider_share(p, d_lo), alpha * provider_share(p, d_hi));
        let margin = |x: usize, gain: f64| {
            let (k, r) = self.k(x);
            k * gain - r
        };
        let (m_lo, m_hi) = (margin(lo, g_lo), margin(hi, g_hi));
        if i == lo {
            DevEval {
                u_i: u_lo,
                u_j: u_hi,
                gain_link_i: g_lo,
                gain_link_j: g_hi,
                margin_i: m_lo,
                margin_j: m_hi,
                w_i: w_lo,
                w_j: w_hi,
            }
        } else {
            DevEval {
                u_i: u_hi,
                u_j: u_lo,
                gain_link_i: g_hi,
                gain_link_j: g_lo,
                margin_i: m_hi,
                margin_j: m_lo,
                w_i: w_hi,
                w_j: w_lo,
            }
        }
    }
}

/// Def-7 check with no transfers.
fn plain_violation(e: &DevEval, base_i: f64, base_j: f64) -> Option<(f64, f64)> {
    let ok = e.margin_i >= 0.0
        && e.margin_j >= 0.0
        && e.u_i >= base_i
        && e.u_j >= base_j
        && (e.u_i > base_i || e.u_j > base_j);
    ok.then_some((e.u_i - base_i, e.u_j - base_j))
}

/// Feasible expected net transfer `E` to `i` (`ũ_i = u_i + E`, `ũ_j = u_j − E`).
///
/// Every constraint is a half-line in `E`; returns the midpoint of the intersection, or
/// its single point when the strict-improvement requirement still holds there.
fn transfer_solution(
    e: &DevEval,
    base_i: f64,
    base_j: f64,
    ki: (f64, f64),
    kj: (f64, f64),
    can: (bool, bool),
) -> Option<f64> {
    let a = base_i - e.u_i;
    let b = e.u_j - base_j;
    let lo_range = if can.0 { f64::NEG_INFINITY } else { 0.0 };
    let hi_range = if can.1 { f64::INFINITY } else { 0.0 };
    let lo = (ki.1 / ki.0 - e.gain_link_i).max(a).max(lo_range);
    let hi = (e.gain_link_j - kj.1 / kj.0).min(b).min(hi_range);
    if lo < hi {
        Some(0.5 * (lo + hi))
    } else if lo == hi && (lo > a || lo < b) {
        Some(lo)
    } else {
        None
    }
}

fn guard_warnings(society: &Society) -> Vec<String> {
    let mut out = Vec::new();
    if society.is_homogeneous() {
        return out;
    }
    for i in 0..society.n() {
        let b = player_bound(society, i);
        let t = &society.players[i];
        let same = society
            .players
            .iter()
            .enumerate()
            .filter(|&(k, u)| k != i && u.v == t.v && u.c == t.c && u.delta == t.delta)
            .count();
        if same < b {
            out.push(format!("player {i}: bound {b} but only {same} other players share its type"));
            break;
        }
    }
    out
}

fn search(net: &Network, society: &Society, opts: SearchOptions, transfers: bool) -> Result<SearchReport> {
    let pairs: Vec<(usize, usize)> = (0..net.n()).tuple_combinations().collect();
    search_pairs(net, society, opts, transfers, &pairs, usize::MAX)
}

/// As [`search`], visiting unlinked pairs in the given order and dropping at most
/// `max_removed` links.
fn search_pairs(
    net: &Network,
    society: &Society,
    opts: SearchOptions,
    transfers: bool,
    pairs: &[(usize, usize)],
    max_removed: usize,
) -> Result<SearchReport> {
    let st = is_stable(net, society)?;
    if let Some((a, b)) = st.witness {
        return Err(Error::NotStable(a.min(b), a.max(b)));
    }
    if transfers && !matches!(society.matrix, FavorMatrix::Substitutable { .. }) {
        return Err(Error::MatrixKind { expected: "substitutable" });
    }
    let n = net.n();
    let base: Vec<f64> = (0..n).map(|i| payoff(i, net, society).map(|u| u.total)).collect::<Result<_>>()?;
    let mut ev = Evaluator::new(net, society);
    let mut report = SearchReport {
        witness: None,
        truncated_pairs: Vec::new(),
        deviations_checked: 0,
        warnings: guard_warnings(society),
    };
    for &(i, j) in pairs {
        if net.has_edge(i, j) {
            continue;
        }
        if net.degree(i) + net.degree(j) > opts.cap {
            report.truncated_pairs.push((i, j));
            continue;
        }
        let links = removable_links(i, j, net);
        let m = links.len();
        let max_size = match opts.mode {
            SearchMode::Exact => m,
            SearchMode::ProofPattern => m.min(2),
        }
        .min(max_removed);
        let can = (society.players[i].can_transfer, society.players[j].can_transfer);
        let (ki, kj) = (ev.k(i), ev.k(j));
        for s in 0..=max_size {
            for idx in (0..m).combinations(s) {
                let removed: Vec<_> = idx.iter().map(|&k| links[k]).collect();
                if opts.mode == SearchMode::ProofPattern {
                    let at_i = removed.iter().filter(|&&(a, b)| a == i || b == i).count();
                    if at_i > 1 || s - at_i > 1 {
                        continue;
                    }
                }
                report.deviations_checked += 1;
                let e = ev.eval(i, j, &removed)?;
                let deviation = || Deviation { i, j, removed: removed.clone() };
                if !transfers || !(can.0 || can.1) {
                    if let Some((gain_i, gain_j)) = plain_violation(&e, base[i], base[j]) {
                        report.witness = Some(ViolationWitness {
                            deviation: deviation(),
                            transfers: transfers.then(TransferScheme::default),
                            margin_i: e.margin_i,
                            margin_j: e.margin_j,
                            gain_i,
                            gain_j,
                        });
                        return Ok(report);
                    }
                    continue;
                }
                if let Some(x) = transfer_solution(&e, base[i], base[j], ki, kj, can) {
                    let t = if x > 0.0 {
                        TransferScheme { t_i: 0.0, t_j: x / e.w_j }
                    } else if x < 0.0 {
                        TransferScheme { t_i: -x / e.w_i, t_j: 0.0 }
                    } else {
                        TransferScheme::default()
                    };
                    report.witness = Some(ViolationWitness {
                        deviation: deviation(),
                        transfers: Some(t),
                        margin_i: ki.0 * (e.gain_link_i + x) - ki.1,
                        margin_j: kj.0 * (e.gain_link_j - x) - kj.1,
                        gain_i: e.u_i + x - base[i],
                        gain_j: e.u_j - x - base[j],
                    });
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

/// First pair deviation violating strong stability, in canonical order.
pub fn find_violation(net: &Network, society: &Society, opts: SearchOptions) -> Result<SearchReport> {
    search(net, society, opts, false)
}

/// As [`find_violation`], letting transfer-capable players attach per-favor payments.
pub fn find_violation_with_transfers(
    net: &Network,
    society: &Society,
    opts: SearchOptions,
) -> Result<SearchReport> {
    search(net, society, opts, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeCount {
    pub degree: usize,
    pub count: usize,
    pub cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeCountAudit {
    pub bound: usize,
    /// Degrees `0..bound` with at least one player.
    pub counts: Vec<DegreeCount>,
    /// Degrees whose count exceeds `degree + 1`.
    pub flagged: Vec<usize>,
    pub passes: bool,
}

/// Counts players below the bound per degree; more than `k+1` players of degree `k`
/// rules out strong stability.
pub fn audit_degree_counts(net: &Network, society: &Society) -> DegreeCountAudit {
    let bound = cooperation_bound(&society.type_params(0));
    let degs = net.degrees();
    let counts: Vec<DegreeCount> = (0..bound)
        .map(|k| DegreeCount { degree: k, count: degs.iter().filter(|&&d| d == k).count(), cap: k + 1 })
        .filter(|c| c.count > 0)
        .collect();
    let flagged: Vec<usize> = counts.iter().filter(|c| c.count > c.cap).map(|c| c.degree).collect();
    DegreeCountAudit { bound, passes: flagged.is_empty(), counts, flagged }
}

/// Circulant `degree`-regular graph: `i ~ i±1..=i±⌊degree/2⌋`, plus `i ~ i+n/2` when
/// `degree` is odd.
pub fn build_regular_network(n: usize, degree: usize) -> Result<Network> {
    if n <= degree || (n * degree) % 2 == 1 {
        return Err(Error::RegularInfeasible { n, degree });
    }
    let mut g = Network::empty(n);
    for i in 0..n {
        for s in 1..=degree / 2 {
            let j = (i + s) % n;
            if !g.has_edge(i, j) {
                g.add_edge(i, j)?;
            }
        }
        if degree % 2 == 1 && i < n / 2 {
            g.add_edge(i, i + n / 2)?;
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub players: usize,
    pub fraction_at_bound: f64,
    pub cross_links: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn classify_stratification(net: &Network, society: &Society) -> Vec<GroupSummary> {
    society
        .groups()
        .into_iter()
        .map(|g| {
            let members: Vec<usize> = (0..society.n()).filter(|&i| society.players[i].group == g).collect();
            let at_bound = members.iter().filter(|&&i| net.degree(i) == player_bound(society, i)).count();
            let cross_links = net
                .edges()
                .filter(|&(a, b)| (society.players[a].group == g) != (society.players[b].group == g))
                .count();
            let mut degree_histogram = BTreeMap::new();
            for &i in &members {
                *degree_histogram.entry(net.degree(i)).or_insert(0) += 1;
            }
            GroupSummary {
                fraction_at_bound: at_bound as f64 / members.len() as f64,
                players: members.len(),
                group: g,
                cross_links,
                degree_histogram,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementOutcome {
    pub network: Network,
    pub steps: usize,
    /// Stable with no violation found.
    pub converged: bool,
}

/// Repeatedly drops an unsustainable link or applies a violating deviation.
///
/// Each step takes a deviation dropping as few links as possible, with pairs in a fresh
/// seeded order; a fixed order can cycle on swaps that leave one player indifferent.
pub fn improvement_path(
    net: &Network,
    society: &Society,
    opts: SearchOptions,
    transfers: bool,
    max_steps: usize,
    seed: u64,
) -> Result<ImprovementOutcome> {
    let mut g = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..net.n()).tuple_combinations().collect();
    for steps in 0..max_steps {
        let st = is_stable(&g, society)?;
        if let Some((a, b)) = st.witness {
            g.remove_edge(a, b)?;
            continue;
        }
        pairs.shuffle(&mut rng);
        let mut rep = None;
        for k in 0..=2 * (g.n().max(1) - 1) {
            let r = search_pairs(&g, society, opts, transfers, &pairs, k)?;
            let found = r.witness.is_some();
            rep = Some(r);
            if found {
                break;
            }
        }
        let rep = rep.expect("at least one search ran");
        match rep.witness {
            Some(w) => g = w.deviation.apply(&g)?,
            None => return Ok(ImprovementOutcome { network: g, steps, converged: rep.verified() }),
        }
    }
    Ok(ImprovementOutcome { network: g, steps: max_steps, converged: false })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub label: String,
    pub start_edges: usize,
    pub outcome: ImprovementOutcome,
    pub violation: Option<ViolationWitness>,
}

/// Heuristic search for a network that is strongly stable with transfers.
///
/// Tries a relabeled regular network at the common bound and a per-group stratified
/// network, each followed by local repair. Non-exhaustive.
pub fn search_sst(society: &Society, seed: u64, max_steps: usize) -> Result<Vec<CandidateOutcome>> {
    let n = society.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut starts = Vec::new();

    let b = (0..n).map(|i| player_bound(society, i)).min().unwrap_or(0).min(n.saturating_sub(1));
    let b = if (n * b) % 2 == 1 { b - 1 } else { b };
    starts.push(("regular".to_string(), build_regular_network(n, b)?.relabel(&perm)));

    let mut strat = Network::empty(n);
    for g in society.groups() {
        let members: Vec<usize> = perm.iter().copied().filter(|&i| society.players[i].group == g).collect();
        let k = members.len();
        let gb = player_bound(society, members[0]).min(k.saturating_sub(1));
        let gb = if (k * gb) % 2 == 1 { gb - 1 } else { gb };
        let local = build_regular_network(k, gb)?;
        for (a, c) in local.edges() {
            strat.add_edge(members[a], members[c])?;
        }
    }
    starts.push(("stratified".to_string(), strat));

    let opts = SearchOptions::default();
    let mut out = Vec::new();
    for (label, g) in starts {
        let outcome = improvement_path(&g, society, opts, true, max_steps, seed)?;
        let violation = if outcome.converged {
            None
        } else {
            search(&outcome.network, society, opts, true).ok().and_then(|r| r.witness)
        };
        out.push(CandidateOutcome { label, start_edges: g.edge_count(), outcome, violation });
    }
    Ok(out)
}
