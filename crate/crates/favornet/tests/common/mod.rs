//! Shared fixtures: the reference parameter sets, random draws, and small networks.
#![allow(dead_code)]

use favornet::society::{FavorMatrix, PlayerType};
use favornet::{Network, Society, SocietyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn baseline(n: usize) -> SocietyParams {
    SocietyParams { n_players: n, alpha: 0.1, p: 0.2, v: 5.3, c: 1.5, gamma: 1.0, delta: 0.95 }
}

pub fn patient(n: usize) -> SocietyParams {
    SocietyParams { n_players: n, alpha: 0.15, p: 0.25, v: 7.0, c: 1.0, gamma: 0.0, delta: 0.99 }
}

/// Poor-player cost 1.3; rich players use `c = 1`.
pub fn unequal(n: usize) -> SocietyParams {
    SocietyParams { n_players: n, alpha: 0.1, p: 0.1, v: 9.0, c: 1.3, gamma: 0.0, delta: 0.95 }
}

pub fn homogeneous(t: SocietyParams) -> Society {
    Society::homogeneous(t)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random valid parameters: log-uniform δ ∈ [.8,.999], α ∈ [.01,.5], p ∈ [.05,.5],
/// v/c ∈ [1.1,10]; γ/c uniform in [0,.9]; c log-uniform in [0.5, 2].
pub fn random_params(seed: u64, n: usize) -> SocietyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = log_uniform(&mut rng, 0.5, 2.0);
    SocietyParams {
        n_players: n,
        delta: log_uniform(&mut rng, 0.8, 0.999),
        alpha: log_uniform(&mut rng, 0.01, 0.5),
        p: log_uniform(&mut rng, 0.05, 0.5),
        v: c * log_uniform(&mut rng, 1.1, 10.0),
        gamma: c * rng.random_range(0.0..0.9),
        c,
    }
}

/// The three named sets followed by 25 random draws.
pub fn parameter_suite(n: usize) -> Vec<(String, SocietyParams)> {
    let mut out = vec![
        ("baseline".to_string(), baseline(n)),
        ("patient".to_string(), patient(n)),
        ("unequal".to_string(), unequal(n)),
    ];
    out.extend((0..25).map(|k| (format!("draw{k}"), random_params(1000 + k, n))));
    out
}

pub fn player(v: f64, c: f64, delta: f64, group: &str) -> PlayerType {
    PlayerType { v, c, delta, can_transfer: false, group: group.to_string() }
}

/// `rich` players with `c = 1` followed by `poor` with `c = 1.3`, otherwise the `unequal` set.
/// With `transfers`, exactly the rich players can pay.
pub fn rich_poor(rich: usize, poor: usize, transfers: bool) -> Society {
    let t = unequal(rich + poor);
    let mut s = Society::homogeneous(t.clone());
    s.players = (0..rich)
        .map(|_| player(t.v, 1.0, t.delta, "rich"))
        .chain((0..poor).map(|_| player(t.v, 1.3, t.delta, "poor")))
        .collect();
    for p in s.players.iter_mut().take(rich) {
        p.can_transfer = transfers;
    }
    s
}

/// Disjoint union of complete graphs of the given sizes.
pub fn cliques(sizes: &[usize]) -> Network {
    sizes.iter().fold(Network::empty(0), |g, &k| g.disjoint_union(&Network::complete(k)))
}

pub fn general_matrix(rows: Vec<Vec<f64>>) -> FavorMatrix {
    let p_lower = rows.iter().flatten().copied().filter(|&x| x > 0.0).fold(1.0, f64::min);
    FavorMatrix::General { rows, p_lower }
}

/// Stratified network: 8 rich players on a 4-regular graph, 8 poor players on a 2-regular graph.
pub fn stratified_society(transfers: bool) -> (Society, Network) {
    let s = rich_poor(8, 8, transfers);
    let rich = favornet::strong::build_regular_network(8, 4).unwrap();
    let poor = favornet::strong::build_regular_network(8, 2).unwrap();
    (s, rich.disjoint_union(&poor))
}
