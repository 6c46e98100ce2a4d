//! Expected per-period payoffs.
//!
//! The requester's value `v_i` is credited on the benefit side and the provider's own
//! cost `c_i` on the cost side, so homogeneous and typed societies share one path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::society::{EnforcementConfig, FavorMatrix, Society, TransferScheme};

/// Default neighbor cap for [`payoff_general`].
pub const GENERAL_DEGREE_CAP: usize = 15;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PayoffBreakdown {
    pub benefit: f64,
    pub cost: f64,
    pub transfer_in: f64,
    pub transfer_out: f64,
    pub maintenance: f64,
    pub total: f64,
}

impl PayoffBreakdown {
    fn new(benefit: f64, cost: f64) -> Self {
        PayoffBreakdown { benefit, cost, total: benefit - cost, ..Default::default() }
    }

    fn retotal(mut self) -> Self {
        self.total = self.benefit - self.cost + self.transfer_in - self.transfer_out - self.maintenance;
        self
    }
}

/// Chance that a specific neighbor of a degree-`d` player is the one asked, given a
/// request: `(1 − (1−p)^d)/d`. Zero for `d = 0`.
pub fn provider_share(p: f64, d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    (1.0 - (1.0 - p).powi(d as i32)) / d as f64
}

/// Substitutable payoff from degrees alone.
///
/// `nbr_degrees` is sorted in place so that equal neighbor multisets always sum in the
/// same order and compare bit-for-bit equal.
pub(crate) fn substitutable_from_degrees(
    alpha: f64,
    p: f64,
    v: f64,
    c: f64,
    degree: usize,
    nbr_degrees: &mut [usize],
) -> (f64, f64) {
    let benefit = alpha * v * (1.0 - (1.0 - p).powi(degree as i32));
    nbr_degrees.sort_unstable();
    let load: f64 = nbr_degrees.iter().map(|&d| provider_share(p, d)).sum();
    (benefit, alpha * c * load)
}

/// `u_i(g)` for any matrix kind, with the default general-matrix cap.
pub fn payoff(i: usize, net: &Network, society: &Society) -> Result<PayoffBreakdown> {
    match society.matrix {
        FavorMatrix::Substitutable { .. } => payoff_substitutable(i, net, society),
        FavorMatrix::Monopolistic { .. } => payoff_monopolistic(i, net, society),
        FavorMatrix::General { .. } => payoff_general(i, net, society, GENERAL_DEGREE_CAP),
    }
}

pub fn payoff_substitutable(i: usize, net: &Network, society: &Society) -> Result<PayoffBreakdown> {
    let FavorMatrix::Substitutable { p } = society.matrix else {
        return Err(Error::MatrixKind { expected: "substitutable" });
    };
    let t = &society.players[i];
    let mut nd: Vec<usize> = net.neighbors(i).map(|j| net.degree(j)).collect();
    let (b, c) = substitutable_from_degrees(society.params.alpha, p, t.v, t.c, net.degree(i), &mut nd);
    Ok(PayoffBreakdown::new(b, c))
}

/// Each link is worth `p̂ = αp/N` per period in each direction.
pub fn payoff_monopolistic(i: usize, net: &Network, society: &Society) -> Result<PayoffBreakdown> {
    let FavorMatrix::Monopolistic { p, n_favor_types } = society.matrix else {
        return Err(Error::MatrixKind { expected: "monopolistic" });
    };
    let t = &society.players[i];
    let p_hat = society.params.alpha * p / n_favor_types as f64;
    let d = net.degree(i) as f64;
    Ok(PayoffBreakdown::new(d * p_hat * t.v, d * p_hat * t.c))
}

/// `E[1/(1+K)]` for `K` a sum of independent Bernoulli(`probs[k]`).
fn inverse_share(probs: impl Iterator<Item = f64>) -> f64 {
    let mut dist = vec![1.0];
    for q in probs {
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &w) in dist.iter().enumerate() {
            next[k] += w * (1.0 - q);
            next[k + 1] += w * q;
        }
        dist = next;
    }
    dist.iter().enumerate().map(|(k, w)| w / (k + 1) as f64).sum()
}

/// Exact protocol expectation for an arbitrary provision matrix.
///
/// Provider choice among able neighbors is uniform, so the cost side reduces to a
/// Poisson-binomial count of the requester's other able neighbors.
pub fn payoff_general(i: usize, net: &Network, society: &Society, cap: usize) -> Result<PayoffBreakdown> {
    let m = &society.matrix;
    let d = net.degree(i);
    if d > cap {
        return Err(Error::DegreeCap { player: i, degree: d, cap });
    }
    let nf = m.n_favor_types();
    let w = society.params.alpha / nf as f64;
    let t = &society.players[i];
    let mut benefit = 0.0;
    let mut cost = 0.0;
    for f in 0..nf {
        let none_able: f64 = net.neighbors(i).map(|j| 1.0 - m.prob(j, f)).product();
        benefit += w * t.v * (1.0 - none_able);
        let p_if = m.prob(i, f);
        if p_if == 0.0 {
            continue;
        }
        for j in net.neighbors(i) {
            let others = net.neighbors(j).filter(|&k| k != i).map(|k| m.prob(k, f));
            cost += w * t.c * p_if * inverse_share(others);
        }
    }
    Ok(PayoffBreakdown::new(benefit, cost))
}

/// Expected favors per period that `x` receives from one given neighbor, `w(x,g)`.
pub fn transfer_weight(x: usize, net: &Network, society: &Society) -> Result<f64> {
    let FavorMatrix::Substitutable { p } = society.matrix else {
        return Err(Error::MatrixKind { expected: "substitutable" });
    };
    Ok(society.params.alpha * provider_share(p, net.degree(x)))
}

/// `ũ_i = u_i − w(i,g)·t_i + w(j,g)·t_j` for the relationship `ij`.
pub fn payoff_with_transfers(
    i: usize,
    j: usize,
    net: &Network,
    scheme: TransferScheme,
    society: &Society,
) -> Result<PayoffBreakdown> {
    if !net.has_edge(i, j) {
        return Err(Error::MissingLink(i.min(j), i.max(j)));
    }
    let mut out = payoff_substitutable(i, net, society)?;
    out.transfer_out = transfer_weight(i, net, society)? * scheme.t_i;
    out.transfer_in = transfer_weight(j, net, society)? * scheme.t_j;
    Ok(out.retotal())
}

/// Adds the per-period maintenance implied by `society.enforcement`.
pub fn payoff_with_enforcement(i: usize, net: &Network, society: &Society) -> Result<PayoffBreakdown> {
    let mut out = payoff(i, net, society)?;
    out.maintenance = match &society.enforcement {
        EnforcementConfig::PureBilateral => 0.0,
        EnforcementConfig::Community { partition, kappa } => {
            let size = partition.iter().find(|b| b.contains(&i)).map_or(1, Vec::len);
            (size - 1) as f64 * kappa
        }
        EnforcementConfig::Legal { cost, population_mode } => {
            let c = cost.eval(society.params.gamma, society.params.c);
            if *population_mode {
                c / society.n() as f64
            } else {
                c
            }
        }
    };
    Ok(out.retotal())
}
