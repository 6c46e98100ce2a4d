//! JSON society documents and DOT export.
//!
//! ```json
//! { "params": {"alpha": 0.1, "p": 0.2, "v": 5.3, "c": 1.5, "gamma": 1.0, "delta": 0.95},
//!   "n": 5, "edges": [[0, 1]],
//!   "players": [{"v": 5.3, "c": 1.5, "delta": 0.95, "can_transfer": false, "group": "all"}],
//!   "matrix": {"kind": "substitutable"},
//!   "enforcement": {"mode": "pure_bilateral"} }
//! ```
//!
//! `players`, `matrix`, `enforcement`, `edges` and `n` are optional. Missing `n` is taken
//! from `players`, else from the largest edge endpoint, else 1. A missing matrix is
//! substitutable with `params.p`; a monopolistic matrix defaults to `|F| = n`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::society::{validate, EnforcementConfig, FavorMatrix, PlayerType, Society, SocietyParams};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    p: f64,
    v: f64,
    c: f64,
    gamma: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_favor_types: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_lower: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<RawParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    players: Option<Vec<PlayerType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    enforcement: Option<EnforcementConfig>,
}

fn infer_n(raw: &RawDocument) -> usize {
    raw.n
        .or_else(|| raw.players.as_ref().map(Vec::len))
        .or_else(|| raw.edges.iter().flatten().max().map(|m| m + 1))
        .unwrap_or(1)
}

fn build_network(n: usize, edges: &[[usize; 2]]) -> Result<Network> {
    let pairs: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
    Network::from_edges(n, &pairs)
}

fn build_matrix(raw: Option<RawMatrix>, params: &SocietyParams) -> Result<FavorMatrix> {
    let Some(m) = raw else {
        return Ok(FavorMatrix::Substitutable { p: params.p });
    };
    let p = m.p.unwrap_or(params.p);
    match m.kind.as_str() {
        "substitutable" => Ok(FavorMatrix::Substitutable { p }),
        "monopolistic" => {
            Ok(FavorMatrix::Monopolistic { p, n_favor_types: m.n_favor_types.unwrap_or(params.n_players) })
        }
        "general" => {
            let rows =
                m.rows.ok_or_else(|| Error::Config("matrix.rows: required for kind \"general\"".into()))?;
            let p_lower = m
                .p_lower
                .unwrap_or_else(|| rows.iter().flatten().copied().filter(|&x| x > 0.0).fold(1.0, f64::min));
            Ok(FavorMatrix::General { rows, p_lower })
        }
        other => Err(Error::Config(format!(
            "matrix.kind: unknown kind {other:?} (expected substitutable, monopolistic or general)"
        ))),
    }
}

/// Parses and validates a full society document.
pub fn parse_society(json: &str) -> Result<(Society, Network)> {
    let raw: RawDocument = serde_json::from_str(json)?;
    let n = infer_n(&raw);
    let rp =
        raw.params.as_ref().ok_or_else(|| Error::Config("params: required in a society document".into()))?;
    let params = SocietyParams {
        n_players: n,
        alpha: rp.alpha,
        p: rp.p,
        v: rp.v,
        c: rp.c,
        gamma: rp.gamma,
        delta: rp.delta,
    };
    let net = build_network(n, &raw.edges)?;
    let mut society = Society::homogeneous(params.clone());
    if let Some(players) = raw.players {
        society.players = players;
    }
    society.matrix = build_matrix(raw.matrix, &params)?;
    society.enforcement = raw.enforcement.unwrap_or_default();
    let violations = validate(&society, &net);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations.iter().map(ToString::to_string).collect()));
    }
    Ok((society, net))
}

/// Parses a network-only document `{ "n": …, "edges": … }`.
pub fn parse_network(json: &str) -> Result<Network> {
    let raw: RawDocument = serde_json::from_str(json)?;
    build_network(infer_n(&raw), &raw.edges)
}

pub fn load_society(path: impl AsRef<Path>) -> Result<(Society, Network)> {
    parse_society(&std::fs::read_to_string(path)?)
}

pub fn society_to_json(society: &Society, net: &Network) -> Result<String> {
    let pr = &society.params;
    let matrix = match &society.matrix {
        FavorMatrix::Substitutable { p } => RawMatrix {
            kind: "substitutable".into(),
            p: Some(*p),
            n_favor_types: None,
            rows: None,
            p_lower: None,
        },
        FavorMatrix::Monopolistic { p, n_favor_types } => RawMatrix {
            kind: "monopolistic".into(),
            p: Some(*p),
            n_favor_types: Some(*n_favor_types),
            rows: None,
            p_lower: None,
        },
        FavorMatrix::General { rows, p_lower } => RawMatrix {
            kind: "general".into(),
            p: None,
            n_favor_types: None,
            rows: Some(rows.clone()),
            p_lower: Some(*p_lower),
        },
    };
    let raw = RawDocument {
        params: Some(RawParams {
            alpha: pr.alpha,
            p: pr.p,
            v: pr.v,
            c: pr.c,
            gamma: pr.gamma,
            delta: pr.delta,
        }),
        n: Some(pr.n_players),
        edges: net.edges().map(|(i, j)| [i, j]).collect(),
        players: Some(society.players.clone()),
        matrix: Some(matrix),
        enforcement: Some(society.enforcement.clone()),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

pub fn save_society(path: impl AsRef<Path>, society: &Society, net: &Network) -> Result<()> {
    std::fs::write(path, society_to_json(society, net)? + "\n")?;
    Ok(())
}

const SHAPES: [&str; 6] = ["circle", "box", "diamond", "triangle", "hexagon", "ellipse"];

/// Undirected DOT graph; node shape encodes the group label.
pub fn to_dot(net: &Network, society: Option<&Society>) -> String {
    let groups = society.map(Society::groups).unwrap_or_default();
    let mut out = String::from("graph favors {\n");
    for i in 0..net.n() {
        match society {
            Some(s) => {
                let g = &s.players[i].group;
                let k = groups.iter().position(|x| x == g).unwrap_or(0);
                let _ = writeln!(
                    out,
                    "  {i} [label=\"{i}\", group=\"{g}\", shape={}];",
                    SHAPES[k % SHAPES.len()]
                );
            }
            None => {
                let _ = writeln!(out, "  {i} [label=\"{i}\", shape=circle];");
            }
        }
    }
    for (i, j) in net.edges() {
        let _ = writeln!(out, "  {i} -- {j};");
    }
    out.push_str("}\n");
    out
}
