//! Domain data: parameters, player types, favor matrices, enforcement settings.
//!
//! Everything here is plain value data. Game logic lives in the other modules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::network::Network;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocietyParams {
    pub n_players: usize,
    pub alpha: f64,
    pub p: f64,
    pub v: f64,
    pub c: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl SocietyParams {
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn with_c(&self, c: f64) -> Self {
        SocietyParams { c, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        SocietyParams { gamma, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerType {
    pub v: f64,
    pub c: f64,
    pub delta: f64,
    #[serde(default)]
    pub can_transfer: bool,
    #[serde(default = "default_group")]
    pub group: String,
}

pub fn default_group() -> String {
    "all".to_string()
}

/// Provision probabilities `p_{if}`. Favor types are drawn uniformly from `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FavorMatrix {
    /// One favor type; everyone provides it with probability `p`.
    Substitutable {
        p: f64,
    },
    /// Player `f` is the only possible provider of favor type `f`.
    Monopolistic {
        p: f64,
        n_favor_types: usize,
    },
    General {
        rows: Vec<Vec<f64>>,
        p_lower: f64,
    },
}

impl FavorMatrix {
    pub fn n_favor_types(&self) -> usize {
        match self {
            FavorMatrix::Substitutable { .. } => 1,
            FavorMatrix::Monopolistic { n_favor_types, .. } => *n_favor_types,
            FavorMatrix::General { rows, .. } => rows.first().map_or(0, Vec::len),
        }
    }

    /// Probability that player `i` is able to provide favor type `f`.
    pub fn prob(&self, i: usize, f: usize) -> f64 {
        match self {
            FavorMatrix::Substitutable { p } => *p,
            FavorMatrix::Monopolistic { p, .. } => {
                if i == f {
                    *p
                } else {
                    0.0
                }
            }
            FavorMatrix::General { rows, .. } => rows[i][f],
        }
    }

    /// Dense `n × |F|` copy of the matrix.
    pub fn to_rows(&self, n_players: usize) -> Vec<Vec<f64>> {
        let nf = self.n_favor_types();
        (0..n_players).map(|i| (0..nf).map(|f| self.prob(i, f)).collect()).collect()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FavorMatrix::Substitutable { .. } => "substitutable",
            FavorMatrix::Monopolistic { .. } => "monopolistic",
            FavorMatrix::General { .. } => "general",
        }
    }
}

/// Per-favor transfers on one relationship: `t_i` is paid by `i` each time `j` provides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransferScheme {
    pub t_i: f64,
    pub t_j: f64,
}

/// Legal cost `C(γ) = k0 + a·γ/(c−γ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegalCost {
    pub k0: f64,
    pub a: f64,
}

impl LegalCost {
    pub fn eval(&self, gamma: f64, c: f64) -> f64 {
        if gamma >= c {
            return f64::INFINITY;
        }
        self.k0 + self.a * gamma / (c - gamma)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EnforcementConfig {
    #[default]
    PureBilateral,
    Community {
        partition: Vec<Vec<usize>>,
        kappa: f64,
    },
    Legal {
        cost: LegalCost,
        #[serde(default)]
        population_mode: bool,
    },
}

/// Parameters plus per-player types, favor matrix and enforcement mode.
///
/// A homogeneous society is one whose player types are all equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Society {
    pub params: SocietyParams,
    pub players: Vec<PlayerType>,
    pub matrix: FavorMatrix,
    #[serde(default)]
    pub enforcement: EnforcementConfig,
}

impl Society {
    pub fn homogeneous(params: SocietyParams) -> Self {
        let t = PlayerType {
            v: params.v,
            c: params.c,
            delta: params.delta,
            can_transfer: false,
            group: default_group(),
        };
        Society {
            players: vec![t; params.n_players],
            matrix: FavorMatrix::Substitutable { p: params.p },
            params,
            enforcement: EnforcementConfig::PureBilateral,
        }
    }

    pub fn n(&self) -> usize {
        self.params.n_players
    }

    pub fn with_matrix(mut self, matrix: FavorMatrix) -> Self {
        self.matrix = matrix;
        self
    }

    pub fn with_transfers(mut self, can_transfer: bool) -> Self {
        for t in &mut self.players {
            t.can_transfer = can_transfer;
        }
        self
    }

    /// Parameters as seen by player `i`: own v, c, δ; `p` from a substitutable matrix.
    pub fn type_params(&self, i: usize) -> SocietyParams {
        let t = &self.players[i];
        let p = match self.matrix {
            FavorMatrix::Substitutable { p } => p,
            _ => self.params.p,
        };
        SocietyParams { v: t.v, c: t.c, delta: t.delta, p, ..self.params.clone() }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.players.windows(2).all(|w| w[0].v == w[1].v && w[0].c == w[1].c && w[0].delta == w[1].delta)
    }

    /// Same society on `n` players: the first `n` types, extended with copies of the last.
    pub fn resized(&self, n: usize) -> Society {
        let mut s = self.clone();
        s.params.n_players = n;
        let last = s.players.last().cloned();
        s.players.truncate(n);
        while s.players.len() < n {
            s.players.push(last.clone().expect("society has at least one player"));
        }
        match &mut s.matrix {
            FavorMatrix::Substitutable { .. } => {}
            FavorMatrix::Monopolistic { n_favor_types, .. } => *n_favor_types = n,
            FavorMatrix::General { rows, .. } => {
                let last = rows.last().cloned().unwrap_or_default();
                rows.truncate(n);
                while rows.len() < n {
                    rows.push(last.clone());
                }
            }
        }
        if let EnforcementConfig::Community { .. } = s.enforcement {
            s.enforcement = EnforcementConfig::PureBilateral;
        }
        s
    }

    /// Group labels in order of first appearance.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.players {
            if !out.contains(&t.group) {
                out.push(t.group.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Every violated invariant; empty means valid.
pub fn validate(society: &Society, net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad =
        |loc: &str, msg: &str| out.push(Violation { location: loc.to_string(), message: msg.to_string() });
    let pr = &society.params;
    let finite = [pr.alpha, pr.p, pr.v, pr.c, pr.gamma, pr.delta].iter().all(|x| x.is_finite());
    if !finite {
        bad("params", "all parameters must be finite");
    }
    if pr.n_players == 0 {
        bad("params.n", "n_players must be positive");
    }
    if !(pr.alpha > 0.0 && pr.alpha <= 1.0) {
        bad("params.alpha", "0 < alpha <= 1 required");
    }
    if !(pr.p > 0.0 && pr.p < 1.0) {
        bad("params.p", "0 < p < 1 required");
    }
    if !(pr.delta > 0.0 && pr.delta < 1.0) {
        bad("params.delta", "0 < delta < 1 required");
    }
    if !(pr.v > pr.c && pr.c > 0.0) {
        bad("params", "v > c > 0 required");
    }
    if pr.gamma < 0.0 {
        bad("params.gamma", "gamma >= 0 required");
    }
    if !(pr.gamma < pr.c) {
        bad("params.gamma", "gamma < c required");
    }

    if society.players.len() != pr.n_players {
        bad("players", "one player type per player required");
    }
    for (i, t) in society.players.iter().enumerate() {
        let loc = format!("players[{i}]");
        if !(t.v > t.c && t.c > 0.0) {
            bad(&loc, "v > c > 0 required");
        }
        if !(t.delta > 0.0 && t.delta < 1.0) {
            bad(&loc, "0 < delta < 1 required");
        }
        if !(pr.gamma < t.c) {
            bad(&loc, "gamma < c required");
        }
    }

    if net.n() != pr.n_players {
        bad("network", "network size must equal n_players");
    }

    match &society.matrix {
        FavorMatrix::Substitutable { p } => {
            if !(*p > 0.0 && *p <= 1.0) {
                bad("matrix.p", "0 < p <= 1 required");
            }
        }
        FavorMatrix::Monopolistic { p, n_favor_types } => {
            if !(*p > 0.0 && *p <= 1.0) {
                bad("matrix.p", "0 < p <= 1 required");
            }
            if *n_favor_types != pr.n_players {
                bad("matrix", "|N| = |F| required");
            }
        }
        FavorMatrix::General { rows, p_lower } => {
            if !(*p_lower > 0.0 && *p_lower <= 1.0) {
                bad("matrix.p_lower", "0 < p_lower <= 1 required");
            }
            if rows.len() != pr.n_players {
                bad("matrix.rows", "one row per player required");
            }
            let nf = rows.first().map_or(0, Vec::len);
            if nf == 0 {
                bad("matrix.rows", "at least one favor type required");
            }
            for (i, row) in rows.iter().enumerate() {
                let loc = format!("matrix.rows[{i}]");
                if row.len() != nf {
                    bad(&loc, "all rows must have |F| entries");
                }
                if row.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    bad(&loc, "entries must lie in [0, 1]");
                }
                if !row.iter().any(|&x| x > 0.0) {
                    bad(&loc, "at least one positive entry required");
                }
                if row.iter().any(|&x| x > 0.0 && x < *p_lower) {
                    bad(&loc, "nonzero entries must be >= p_lower");
                }
            }
        }
    }

    match &society.enforcement {
        EnforcementConfig::PureBilateral => {}
        EnforcementConfig::Community { partition, kappa } => {
            if !(*kappa >= 0.0 && kappa.is_finite()) {
                bad("enforcement.kappa", "kappa >= 0 required");
            }
            let mut seen = vec![0usize; pr.n_players];
            for block in partition {
                for &x in block {
                    if x >= pr.n_players {
                        bad("enforcement.partition", "player index out of range");
                    } else {
                        seen[x] += 1;
                    }
                }
            }
            if seen.iter().any(|&k| k > 1) {
                bad("enforcement.partition", "blocks must be disjoint");
            }
            if seen.contains(&0) {
                bad("enforcement.partition", "blocks must cover all players");
            }
        }
        EnforcementConfig::Legal { cost, .. } => {
            if !(cost.k0 > 0.0 && cost.a > 0.0) {
                bad("enforcement.cost", "k0 > 0 and a > 0 required");
            }
        }
    }
    out
}
