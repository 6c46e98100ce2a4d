//! Seeded Monte Carlo of the per-period favor protocol under bilateral grim trigger.
//!
//! Draws come from ChaCha streams positioned by `(period, player)`: stream 0 holds the
//! per-period need draws, stream `r+1` holds requester `r`'s draws. Observing events
//! never shifts any draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::society::Society;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestConvention {
    /// Each player needs a favor with probability α, independently; index order.
    #[default]
    Independent,
    /// At most one requester per period; needs `n·α ≤ 1`.
    AtMostOne,
}

/// `player` refuses `partner`'s first request addressed to it at or after `period`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationScript {
    pub player: usize,
    pub partner: usize,
    pub period: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub periods: u64,
    pub seed: u64,
    pub convention: RequestConvention,
    pub deviation: Option<DeviationScript>,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(periods: u64, seed: u64) -> Self {
        SimConfig { periods, seed, convention: RequestConvention::Independent, deviation: None, batches: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Provided,
    Refused,
    Unserved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub period: u64,
    pub requester: usize,
    pub favor_type: usize,
    pub provider: Option<usize>,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub periods: u64,
    pub mean_payoff: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Favors received, provided and refused, per player.
    pub received: Vec<u64>,
    pub provided: Vec<u64>,
    pub refused: Vec<u64>,
    pub requests: u64,
    pub provisions: u64,
    pub refusals: u64,
    pub unserved: u64,
    pub link_removals: u64,
    pub final_network: Network,
}

impl SimResult {
    /// Total realized payoff of `i` from its event counts.
    pub fn total_payoff(&self, i: usize, society: &Society) -> f64 {
        let t = &society.players[i];
        self.received[i] as f64 * t.v
            - self.provided[i] as f64 * t.c
            - self.refused[i] as f64 * society.params.gamma
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

/// Index in `0..k` from one uniform draw; keeps the per-request draw count fixed.
fn pick(rng: &mut ChaCha8Rng, k: usize) -> usize {
    ((uniform(rng) * k as f64) as usize).min(k - 1)
}

pub fn simulate(net: &Network, society: &Society, config: &SimConfig) -> Result<SimResult> {
    simulate_observed(net, society, config, |_| {})
}

pub fn simulate_observed(
    net: &Network,
    society: &Society,
    config: &SimConfig,
    mut observe: impl FnMut(&Event),
) -> Result<SimResult> {
    let n = net.n();
    let alpha = society.params.alpha;
    if config.periods == 0 {
        return Err(Error::Config("periods must be at least 1".into()));
    }
    if config.convention == RequestConvention::AtMostOne && n as f64 * alpha > 1.0 {
        return Err(Error::RequestMass(n as f64 * alpha));
    }
    let matrix = &society.matrix;
    let nf = matrix.n_favor_types();
    let batches = config.batches.clamp(1, config.periods as usize);
    let need_words = 2 * n as u128 + 2;
    let req_words = 2 * (n as u128 + 4);

    let mut g = net.clone();
    let mut broken: Vec<(usize, usize)> = Vec::new();
    let mut used_deviation = false;
    let mut streams = ChaCha8Rng::seed_from_u64(config.seed);

    // Per-batch counts: received, provided, refused.
    let mut batch_counts = vec![[0u64; 3]; n];
    let mut batch_means: Vec<Vec<f64>> = vec![Vec::with_capacity(batches); n];
    let mut res = SimResult {
        periods: config.periods,
        mean_payoff: vec![0.0; n],
        std_error: vec![0.0; n],
        received: vec![0; n],
        provided: vec![0; n],
        refused: vec![0; n],
        requests: 0,
        provisions: 0,
        refusals: 0,
        unserved: 0,
        link_removals: 0,
        final_network: Network::empty(n),
    };
    let mut requesters = Vec::with_capacity(n);
    let mut able = Vec::with_capacity(n);
    let mut batch = 0usize;
    let mut batch_start = 0u64;

    for t in 0..config.periods {
        for (a, b) in broken.drain(..) {
            g.remove_edge(a, b)?;
            res.link_removals += 1;
        }

        streams.set_stream(0);
        streams.set_word_pos(t as u128 * need_words);
        requesters.clear();
        match config.convention {
            RequestConvention::Independent => {
                for i in 0..n {
                    if uniform(&mut streams) < alpha {
                        requesters.push(i);
                    }
                }
            }
            RequestConvention::AtMostOne => {
                let u = uniform(&mut streams);
                if u < n as f64 * alpha {
                    requesters.push(((u / alpha) as usize).min(n - 1));
                }
            }
        }

        for &r in &requesters {
            streams.set_stream(r as u64 + 1);
            streams.set_word_pos(t as u128 * req_words);
            res.requests += 1;
            let f = pick(&mut streams, nf);
            able.clear();
            for j in g.neighbors(r) {
                let live = !broken.contains(&(r.min(j), r.max(j)));
                if uniform(&mut streams) < matrix.prob(j, f) && live {
                    able.push(j);
                }
            }
            let (provider, action) = if able.is_empty() {
                res.unserved += 1;
                (None, Action::Unserved)
            } else {
                let j = able[pick(&mut streams, able.len())];
                let refuse = match config.deviation {
                    Some(d) => !used_deviation && d.player == j && d.partner == r && t >= d.period,
                    None => false,
                };
                if refuse {
                    used_deviation = true;
                    broken.push((r.min(j), r.max(j)));
                    res.refusals += 1;
                    res.refused[j] += 1;
                    batch_counts[j][2] += 1;
                    (Some(j), Action::Refused)
                } else {
                    res.provisions += 1;
                    res.received[r] += 1;
                    res.provided[j] += 1;
                    batch_counts[r][0] += 1;
                    batch_counts[j][1] += 1;
                    (Some(j), Action::Provided)
                }
            };
            observe(&Event { period: t, requester: r, favor_type: f, provider, action });
        }

        let boundary = (batch as u64 + 1) * config.periods / batches as u64;
        if t + 1 == boundary {
            let len = (t + 1 - batch_start) as f64;
            for i in 0..n {
                let tp = &society.players[i];
                let [rc, pv, rf] = batch_counts[i];
                let total = rc as f64 * tp.v - pv as f64 * tp.c - rf as f64 * society.params.gamma;
                batch_means[i].push(total / len);
                batch_counts[i] = [0; 3];
            }
            batch += 1;
            batch_start = t + 1;
        }
    }
    for (a, b) in broken.drain(..) {
        g.remove_edge(a, b)?;
        res.link_removals += 1;
    }

    for (i, m) in batch_means.iter().enumerate() {
        res.mean_payoff[i] = res.total_payoff(i, society) / config.periods as f64;
        let k = m.len() as f64;
        if m.len() > 1 {
            let mu = m.iter().sum::<f64>() / k;
            let var = m.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (k - 1.0);
            res.std_error[i] = (var / k).sqrt();
        }
    }
    res.final_network = g;
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo payoff estimates for any matrix kind, including degrees past the exact cap.
pub fn estimate_payoff_general(
    net: &Network,
    society: &Society,
    config: &SimConfig,
) -> Result<Vec<Estimate>> {
    let r = simulate(net, society, &SimConfig { deviation: None, ..config.clone() })?;
    Ok(r.mean_payoff
        .iter()
        .zip(&r.std_error)
        .map(|(&mean, &std_error)| Estimate { mean, std_error })
        .collect())
}
