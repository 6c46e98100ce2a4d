//! Link sustainability, stability verdicts and the cooperation bound `B*`.
//!
//! All inequalities are weak: a margin of exactly zero is sustainable.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::payoff::payoff;
use crate::society::{FavorMatrix, Society, SocietyParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkVerdict {
    pub i: usize,
    pub j: usize,
    /// Margin of `i` for keeping the link to `j`.
    pub margin_i: f64,
    pub margin_j: f64,
    pub sustainable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SustainabilityReport {
    pub links: Vec<LinkVerdict>,
    pub stable: bool,
    /// `(deviator, partner)` for an unsustainable link: the highest-degree deviator,
    /// then the most negative margin.
    pub witness: Option<(usize, usize)>,
}

fn monopolistic_margin(t: &SocietyParams, p_hat: f64) -> f64 {
    t.delta / (1.0 - t.delta) * p_hat * (t.v - t.c) - (t.c - t.gamma)
}

/// `δ_i/(1−δ_i)·(u_i(g) − u_i(g−ij)) − (c_i − γ)`.
pub fn sustainability_margin(i: usize, j: usize, net: &Network, society: &Society) -> Result<f64> {
    if !net.has_edge(i, j) {
        return Err(Error::MissingLink(i.min(j), i.max(j)));
    }
    let t = society.type_params(i);
    if let FavorMatrix::Monopolistic { p, n_favor_types } = society.matrix {
        return Ok(monopolistic_margin(&t, society.params.alpha * p / n_favor_types as f64));
    }
    let with = payoff(i, net, society)?.total;
    let without = payoff(i, &net.without_edge(i, j)?, society)?.total;
    Ok(t.delta / (1.0 - t.delta) * (with - without) - (t.c - t.gamma))
}

pub fn is_stable(net: &Network, society: &Society) -> Result<SustainabilityReport> {
    let mut links = Vec::with_capacity(net.edge_count());
    let mut worst: Option<(usize, f64, (usize, usize))> = None;
    for (i, j) in net.edges() {
        let margin_i = sustainability_margin(i, j, net, society)?;
        let margin_j = sustainability_margin(j, i, net, society)?;
        for (a, b, m) in [(i, j, margin_i), (j, i, margin_j)] {
            if m < 0.0 {
                let key = (net.degree(a), m, (a, b));
                let better = match worst {
                    None => true,
                    Some((d, wm, _)) => key.0 > d || (key.0 == d && m < wm),
                };
                if better {
                    worst = Some(key);
                }
            }
        }
        links.push(LinkVerdict { i, j, margin_i, margin_j, sustainable: margin_i >= 0.0 && margin_j >= 0.0 });
    }
    Ok(SustainabilityReport { stable: worst.is_none(), witness: worst.map(|w| w.2), links })
}

/// Left side of the regular-network constraint at degree `n`:
/// `δαv(1−p)^{n−1}p − δαc(1−(1−p)^n)/n`.
pub fn stability_lhs(n: usize, t: &SocietyParams) -> f64 {
    let q = t.q();
    let (a, d) = (t.alpha, t.delta);
    d * a * t.v * q.powi(n as i32 - 1) * t.p - d * a * t.c * (1.0 - q.powi(n as i32)) / n as f64
}

/// Right side `(1−δ)(c−γ)`.
pub fn stability_rhs(t: &SocietyParams) -> f64 {
    (1.0 - t.delta) * (t.c - t.gamma)
}

/// Largest `n ≥ 1` whose regular constraint holds, or 0.
///
/// The scan stops once the benefit term alone, `δαvp(1−p)^{n−1}`, is below the right
/// side; no larger `n` can qualify.
pub fn cooperation_bound(t: &SocietyParams) -> usize {
    let rhs = stability_rhs(t);
    let mut best = 0;
    let mut n = 1usize;
    while t.delta * t.alpha * t.v * t.p * t.q().powi(n as i32 - 1) >= rhs {
        if stability_lhs(n, t) >= rhs {
            best = n;
        }
        n += 1;
        if n > 1 << 24 {
            break;
        }
    }
    best
}

/// `B*` of player `i`'s type.
pub fn player_bound(society: &Society, i: usize) -> usize {
    cooperation_bound(&society.type_params(i))
}

/// Highest cost `c` at which degree `n` is sustainable in a regular network.
///
/// Exact root of the regular constraint in `c`; reduces to
/// `δαv(1−p)^{n−1}p / (1−δ + (α/n)δ(1−(1−p)^n))` at `γ = 0`.
pub fn cutoff_cost(n: usize, t: &SocietyParams) -> f64 {
    assert!(n >= 1, "cutoff_cost needs n >= 1");
    let q = t.q();
    let a = t.delta * t.alpha * t.v * q.powi(n as i32 - 1) * t.p;
    let d = 1.0 - t.delta + t.alpha / n as f64 * t.delta * (1.0 - q.powi(n as i32));
    (a + (1.0 - t.delta) * t.gamma) / d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSeries {
    pub parameter: String,
    pub values: Vec<f64>,
    pub bounds: Vec<usize>,
    /// `true` if `B*` should rise with the parameter.
    pub increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub series: Vec<ScanSeries>,
    pub counterexamples: Vec<String>,
}

/// Grids over which `B*` is scanned with the other parameters at `base`.
#[derive(Clone, Debug, Default)]
pub struct ScanGrid {
    pub delta: Vec<f64>,
    pub v: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn comparative_statics_scan(base: &SocietyParams, grid: &ScanGrid) -> MonotonicityReport {
    type Setter = fn(&mut SocietyParams, f64);
    let dims: [(&str, &Vec<f64>, Setter, bool); 4] = [
        ("delta", &grid.delta, |p, x| p.delta = x, true),
        ("v", &grid.v, |p, x| p.v = x, true),
        ("gamma", &grid.gamma, |p, x| p.gamma = x, true),
        ("c", &grid.c, |p, x| p.c = x, false),
    ];
    let mut report = MonotonicityReport { series: Vec::new(), counterexamples: Vec::new() };
    for (name, values, set, increasing) in dims {
        let mut values = values.clone();
        values.sort_by(f64::total_cmp);
        let bounds: Vec<usize> = values
            .iter()
            .map(|&x| {
                let mut p = base.clone();
                set(&mut p, x);
                cooperation_bound(&p)
            })
            .collect();
        for k in 1..bounds.len() {
            let ok = if increasing { bounds[k] >= bounds[k - 1] } else { bounds[k] <= bounds[k - 1] };
            if !ok {
                report.counterexamples.push(format!(
                    "{name}: B*({}) = {} but B*({}) = {}",
                    values[k - 1],
                    bounds[k - 1],
                    values[k],
                    bounds[k]
                ));
            }
        }
        report.series.push(ScanSeries { parameter: name.to_string(), values, bounds, increasing });
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonopolisticVerdict {
    CompleteStable,
    EmptyOnly,
}

/// Every link has the same margin `δ/(1−δ)·p̂(v−c) − (c−γ)`, so either all are
/// sustainable or none is.
pub fn monopolistic_verdict(society: &Society) -> Result<MonopolisticVerdict> {
    let FavorMatrix::Monopolistic { p, n_favor_types } = society.matrix else {
        return Err(Error::MatrixKind { expected: "monopolistic" });
    };
    let p_hat = society.params.alpha * p / n_favor_types as f64;
    Ok(if monopolistic_margin(&society.params, p_hat) >= 0.0 {
        MonopolisticVerdict::CompleteStable
    } else {
        MonopolisticVerdict::EmptyOnly
    })
}

/// Lowest rich-player cost that still leaves `B*(c_r) = B*(c_p)`: `c(B*(c_p)+1)`,
/// clamped to `[0, c_p]`.
pub fn rich_cost_threshold(c_p: f64, t: &SocietyParams) -> f64 {
    let poor = t.with_c(c_p);
    cutoff_cost(cooperation_bound(&poor) + 1, &poor).clamp(0.0, c_p)
}

/// Degree bound for a general matrix with lower entry bound `p̲`.
///
/// `b*` is the largest `b ≥ 0` with `αv(1−p̲)^b ≥ (1−δ)(c−γ)/δ`. Each neighbor is
/// certified by a favor type that at most `b*` other neighbors can supply, so at most
/// `b*+1` neighbors per type and `|F|·(b*+1)` in total; 0 when no link can pay off.
pub fn general_matrix_bound(society: &Society) -> Result<usize> {
    let FavorMatrix::General { p_lower, .. } = &society.matrix else {
        return Err(Error::MatrixKind { expected: "general" });
    };
    let nf = society.matrix.n_favor_types();
    let mut bound = 0;
    for i in 0..society.n() {
        let t = society.type_params(i);
        let rhs = (1.0 - t.delta) * (t.c - t.gamma) / t.delta;
        let holds = |b: usize| t.alpha * t.v * (1.0 - p_lower).powi(b as i32) >= rhs;
        if !holds(0) {
            continue;
        }
        let mut b = 0;
        while b < 1 << 24 && holds(b + 1) {
            b += 1;
        }
        bound = bound.max(nf * (b + 1));
    }
    Ok(bound)
}

/// Gain from one cross link between cliques, with the cost term at `n+1`:
/// `h(m,n) = −c + αδ/(1−δ)·(v((1−p)^m − (1−p)^{m+1}) − c/(n+1)·(1−(1−p)^{n+1}))`,
/// Diagnostic only; verdicts use the exact margins.
pub fn cross_clique_gain(m: usize, n: usize, t: &SocietyParams) -> f64 {
    let q = t.q();
    let k = t.alpha * t.delta / (1.0 - t.delta);
    -t.c + k
        * (t.v * (q.powi(m as i32) - q.powi(m as i32 + 1))
            - t.c / (n + 1) as f64 * (1.0 - q.powi(n as i32 + 1)))
}

/// Rows `(n, lhs, rhs)` of the regular constraint for `n = 1..=n_max`.
pub fn bound_curve(t: &SocietyParams, n_max: usize) -> Vec<(usize, f64, f64)> {
    (1..=n_max).map(|n| (n, stability_lhs(n, t), stability_rhs(t))).collect()
}

pub fn write_curve_csv<W: Write>(out: W, t: &SocietyParams, n_max: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "lhs", "rhs"])?;
    for (n, l, r) in bound_curve(t, n_max) {
        w.write_record([n.to_string(), l.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> SocietyParams {
        SocietyParams { n_players: 5, alpha: 0.1, p: 0.2, v: 5.3, c: 1.5, gamma: 1.0, delta: 0.95 }
    }

    #[test]
    fn cutoff_brackets_the_bound() {
        let t = baseline();
        let b = cooperation_bound(&t);
        assert!(cutoff_cost(b, &t) >= t.c);
        assert!(cutoff_cost(b + 1, &t) < t.c);
    }

    #[test]
    fn degree_one_margin_closed_form() {
        let t = baseline();
        let s = Society::homogeneous(SocietyParams { n_players: 2, ..t.clone() });
        let g = Network::complete(2);
        let m = sustainability_margin(0, 1, &g, &s).unwrap();
        let expect = t.delta / (1.0 - t.delta) * t.alpha * t.p * (t.v - t.c) - (t.c - t.gamma);
        assert!((m - expect).abs() < 1e-12);
    }

    #[test]
    fn no_bound_when_single_link_fails() {
        let mut t = baseline();
        t.delta = 0.2;
        assert_eq!(cooperation_bound(&t), 0);
    }

    #[test]
    fn curve_csv_header() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &baseline(), 3).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,lhs,rhs\n1,"));
        assert_eq!(s.lines().count(), 4);
    }
}
