//! Bilateral, community and legal enforcement compared on per-period payoffs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::society::{LegalCost, Society, SocietyParams};
use crate::stability::{cooperation_bound, player_bound, stability_lhs, sustainability_margin};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub check: String,
    pub necessary_conditions_hold: bool,
    pub violations: Vec<String>,
    /// Within-community links in blocks that are not cliques; accepted but not verified.
    pub unverified_within_links: Vec<(usize, usize)>,
}

/// Necessary conditions for community-enforced stability.
///
/// Small-community members stay within their bound; anyone above it links only inside
/// a large community; cross-community links must be bilaterally sustainable.
pub fn is_community_stable(
    net: &Network,
    partition: &[Vec<usize>],
    society: &Society,
) -> Result<CommunityReport> {
    let n = net.n();
    let mut block = vec![usize::MAX; n];
    for (b, members) in partition.iter().enumerate() {
        for &x in members {
            block[x] = b;
        }
    }
    if let Some(x) = block.iter().position(|&b| b == usize::MAX) {
        return Err(Error::Config(format!("player {x} is in no community")));
    }
    let clique = |b: usize| {
        let m = &partition[b];
        m.iter().enumerate().all(|(k, &x)| m[k + 1..].iter().all(|&y| net.has_edge(x, y)))
    };
    let mut violations = Vec::new();
    for i in 0..n {
        let bound = player_bound(society, i);
        let size = partition[block[i]].len();
        let d = net.degree(i);
        if size <= bound && d > bound {
            violations.push(format!("player {i}: {d} links exceed bound {bound} in a small community"));
        }
        if d > bound {
            if size <= bound {
                continue;
            }
            if let Some(j) = net.neighbors(i).find(|&j| block[j] != block[i]) {
                violations.push(format!(
                    "player {i}: {d} links exceed bound {bound} but links outside its community to {j}"
                ));
            }
        }
    }
    let mut unverified = Vec::new();
    for (i, j) in net.edges() {
        if block[i] != block[j] {
            for (a, b) in [(i, j), (j, i)] {
                let m = sustainability_margin(a, b, net, society)?;
                if m < 0.0 {
                    violations.push(format!("cross link ({i}, {j}): margin of {a} is {m:.6}"));
                }
            }
        } else if !clique(block[i]) {
            unverified.push((i, j));
        }
    }
    Ok(CommunityReport {
        check: "necessary-conditions check".to_string(),
        necessary_conditions_hold: violations.is_empty(),
        violations,
        unverified_within_links: unverified,
    })
}

/// `U(n+1, κ) = α(v−c)(1−(1−p)^n) − nκ` for a clique community of `n+1`.
pub fn community_payoff(n: usize, kappa: f64, t: &SocietyParams) -> f64 {
    t.alpha * (t.v - t.c) * (1.0 - t.q().powi(n as i32)) - n as f64 * kappa
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityOptimum {
    /// Community size `|φ|`, self included.
    pub size: usize,
    pub payoff: f64,
}

/// Best community size at link cost `kappa`; ties go to the smaller size.
pub fn optimal_community_size(kappa: f64, t: &SocietyParams) -> Result<CommunityOptimum> {
    if !(kappa > 0.0) {
        return Err(Error::UnboundedCommunity);
    }
    let q = t.q();
    let scale = t.alpha * (t.v - t.c) * -q.ln();
    // Stationary point of the concave extension in n.
    let x = (kappa / scale).ln() / q.ln();
    let candidates: Vec<usize> = if x <= 0.0 {
        vec![0]
    } else {
        let f = x.floor().min(1e15) as usize;
        vec![f, f + 1]
    };
    let mut best = CommunityOptimum { size: 1, payoff: f64::NEG_INFINITY };
    for n in candidates {
        let u = community_payoff(n, kappa, t);
        if u > best.payoff {
            best = CommunityOptimum { size: n + 1, payoff: u };
        }
    }
    Ok(best)
}

/// Per-period payoff on a regular network at the bound for punishment `gamma`.
pub fn bilateral_value(t: &SocietyParams, gamma: f64) -> (usize, f64) {
    let b = cooperation_bound(&t.with_gamma(gamma));
    (b, t.alpha * (t.v - t.c) * (1.0 - t.q().powi(b as i32)))
}

/// `U_P`: bilateral enforcement with no legal punishment.
pub fn pure_bilateral_payoff(t: &SocietyParams) -> f64 {
    bilateral_value(t, 0.0).1
}

/// Punishment levels `γ_n` at which degree `n` first becomes sustainable.
///
/// `γ_n` solves the regular constraint with equality and is nudged to the smallest
/// float with `B*(γ_n) ≥ n`. Only `0 < γ_n < c` is returned.
pub fn legal_candidates(t: &SocietyParams) -> Vec<(usize, f64)> {
    let q = t.q();
    let mut out = Vec::new();
    let mut n = 1usize;
    loop {
        let nf = n as f64;
        // A positive left side needs n·q^{n−1} > c/v; past the peak of n·q^{n−1} that
        // can only fail from here on.
        if nf * -q.ln() >= 1.0 && nf * q.powi(n as i32 - 1) <= t.c / t.v {
            break;
        }
        let mut g = t.c - stability_lhs(n, t) / (1.0 - t.delta);
        if g > 0.0 && g < t.c {
            while g < t.c && cooperation_bound(&t.with_gamma(g)) < n {
                g = g.next_up();
            }
            while g > 0.0 && cooperation_bound(&t.with_gamma(g.next_down())) >= n {
                g = g.next_down();
            }
            if g < t.c {
                out.push((n, g));
            }
        }
        n += 1;
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegalOptimum {
    pub gamma: f64,
    pub bound: usize,
    pub payoff: f64,
}

/// `U(γ) = α(v−c)(1−(1−p)^{B*(γ)}) − C(γ)/N`, with `N = 1` outside population mode.
pub fn legal_payoff(
    t: &SocietyParams,
    cost: &LegalCost,
    gamma: f64,
    population: Option<usize>,
) -> (usize, f64) {
    let (b, benefit) = bilateral_value(t, gamma);
    let per_player = population.map_or(1.0, |n| n as f64);
    (b, benefit - cost.eval(gamma, t.c) / per_player)
}

/// Best punishment among `{0} ∪ {γ_n}`; ties go to the smaller `γ`.
pub fn optimal_legal_gamma(t: &SocietyParams, cost: &LegalCost, population: Option<usize>) -> LegalOptimum {
    let (b0, u0) = legal_payoff(t, cost, 0.0, population);
    let mut best = LegalOptimum { gamma: 0.0, bound: b0, payoff: u0 };
    for (_, g) in legal_candidates(t) {
        let (b, u) = legal_payoff(t, cost, g, population);
        if u > best.payoff {
            best = LegalOptimum { gamma: g, bound: b, payoff: u };
        }
    }
    best
}

/// `sup{κ : U_C(κ) ≥ target}` by bisection; `∞` if the community always wins and 0 if
/// it never does.
pub fn community_threshold(t: &SocietyParams, target: f64) -> f64 {
    if target <= 0.0 {
        return f64::INFINITY;
    }
    if target >= t.alpha * (t.v - t.c) {
        return 0.0;
    }
    let gap = |k: f64| optimal_community_size(k, t).map_or(f64::INFINITY, |o| o.payoff) - target;
    let (mut lo, mut hi) = (0.0, t.alpha * (t.v - t.c) * t.p);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaThresholds {
    pub kappa_p: f64,
    pub kappa_l: f64,
    pub u_p: f64,
    pub u_l: f64,
}

pub fn kappa_thresholds(t: &SocietyParams, cost: &LegalCost) -> KappaThresholds {
    let u_p = pure_bilateral_payoff(t);
    let u_l = optimal_legal_gamma(t, cost, None).payoff;
    KappaThresholds { kappa_p: community_threshold(t, u_p), kappa_l: community_threshold(t, u_l), u_p, u_l }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    PureBilateral,
    Community,
    Legal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismComparison {
    pub kappa: f64,
    pub u_p: f64,
    pub community_size: usize,
    pub u_c: f64,
    pub gamma_star: f64,
    pub legal_bound: usize,
    pub u_l: f64,
    pub winner: Mechanism,
    pub kappa_p: f64,
    pub kappa_l: f64,
}

/// Ties favor bilateral, then community.
pub fn compare_mechanisms(
    t: &SocietyParams,
    kappa: f64,
    cost: &LegalCost,
    population: Option<usize>,
) -> Result<MechanismComparison> {
    let u_p = pure_bilateral_payoff(t);
    let com = optimal_community_size(kappa, t)?;
    let legal = optimal_legal_gamma(t, cost, population);
    let th = kappa_thresholds(t, cost);
    let mut winner = (Mechanism::PureBilateral, u_p);
    for cand in [(Mechanism::Community, com.payoff), (Mechanism::Legal, legal.payoff)] {
        if cand.1 > winner.1 {
            winner = cand;
        }
    }
    Ok(MechanismComparison {
        kappa,
        u_p,
        community_size: com.size,
        u_c: com.payoff,
        gamma_star: legal.gamma,
        legal_bound: legal.bound,
        u_l: legal.payoff,
        winner: winner.0,
        kappa_p: th.kappa_p,
        kappa_l: th.kappa_l,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationRow {
    pub n: usize,
    pub gamma_star: f64,
    pub bound: usize,
    pub payoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationAnalysis {
    pub rows: Vec<PopulationRow>,
    /// Smallest grid `N` where legal enforcement beats pure bilateral.
    pub n_bar: Option<usize>,
    /// Smallest grid `N` where legal enforcement beats the community at `kappa`.
    pub n_bar_kappa: Option<usize>,
    pub gamma_nondecreasing: bool,
}

/// Legal enforcement with the cost shared across a population of `N`.
pub fn population_analysis(
    t: &SocietyParams,
    cost: &LegalCost,
    n_grid: &[usize],
    kappa: Option<f64>,
) -> Result<PopulationAnalysis> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("population grid must be strictly increasing".into()));
    }
    let u_p = pure_bilateral_payoff(t);
    let u_c = kappa.map(|k| optimal_community_size(k, t)).transpose()?.map(|o| o.payoff);
    let rows: Vec<PopulationRow> = n_grid
        .iter()
        .map(|&n| {
            let o = optimal_legal_gamma(t, cost, Some(n));
            PopulationRow { n, gamma_star: o.gamma, bound: o.bound, payoff: o.payoff }
        })
        .collect();
    let n_bar = rows.iter().find(|r| r.payoff > u_p).map(|r| r.n);
    let n_bar_kappa = u_c.and_then(|uc| rows.iter().find(|r| r.payoff > uc).map(|r| r.n));
    let gamma_nondecreasing = rows.windows(2).all(|w| w[1].gamma_star >= w[0].gamma_star);
    Ok(PopulationAnalysis { rows, n_bar, n_bar_kappa, gamma_nondecreasing })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub kappa: f64,
    pub size: usize,
    pub u_c: f64,
    pub u_p: f64,
    pub u_l: f64,
}

pub fn kappa_table(t: &SocietyParams, cost: &LegalCost, kappas: &[f64]) -> Result<Vec<KappaRow>> {
    let u_p = pure_bilateral_payoff(t);
    let u_l = optimal_legal_gamma(t, cost, None).payoff;
    kappas
        .iter()
        .map(|&kappa| {
            let o = optimal_community_size(kappa, t)?;
            Ok(KappaRow { kappa, size: o.size, u_c: o.payoff, u_p, u_l })
        })
        .collect()
}

pub fn write_kappa_csv<W: Write>(out: W, rows: &[KappaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kappa", "community_size", "u_c", "u_p", "u_l"])?;
    for r in rows {
        w.write_record([
            r.kappa.to_string(),
            r.size.to_string(),
            r.u_c.to_string(),
            r.u_p.to_string(),
            r.u_l.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_population_csv<W: Write>(out: W, rows: &[PopulationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "gamma_star", "payoff"])?;
    for r in rows {
        w.write_record([r.n.to_string(), r.gamma_star.to_string(), r.payoff.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
