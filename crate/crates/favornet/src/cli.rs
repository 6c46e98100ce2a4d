//! Command-line surface. Machine output (JSON, CSV, DOT) goes to stdout or the named
//! file; the human summary goes to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::document::{load_society, to_dot};
use crate::enforcement::{
    compare_mechanisms, kappa_table, population_analysis, write_kappa_csv, write_population_csv,
};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::oracle::{classify_all, write_classification_csv, Dedupe, EnumerationScope, CLASSIFY_CAP};
use crate::simulate::{simulate, DeviationScript, RequestConvention, SimConfig};
use crate::society::{validate, EnforcementConfig, LegalCost, Society, SocietyParams};
use crate::stability::{cooperation_bound, is_stable, write_curve_csv};
use crate::strong::{
    audit_degree_counts, classify_stratification, find_violation, find_violation_with_transfers, search_sst,
    SearchOptions,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success; for `check`, the queried property holds
  1  `check` ran but the property fails (or the search was truncated)
  2  error: bad flags, unreadable file, invalid society

CSV schemas:
  bound --curve       n,lhs,rhs
  enforce --csv-dir   kappa.csv: kappa,community_size,u_c,u_p,u_l
                      population.csv: n,gamma_star,payoff
  oracle              n,graph_id,stable,strongly_stable,sst_with_transfers
                      (graph_id is the edge bitmask, bit k = k-th pair (i<j) in row-major order)";

#[derive(Debug, Parser)]
#[command(name = "favornet", version, about = "Favor-exchange network analysis", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cooperation bound B* for homogeneous parameters.
    Bound(BoundArgs),
    /// Stability, optionally strong stability, of the society's network.
    Check(CheckArgs),
    /// Heuristic search (construction + local repair) for a network strongly stable
    /// with transfers. Not exhaustive.
    FindSst(FindSstArgs),
    /// Seeded Monte Carlo of the favor protocol.
    Simulate(SimulateArgs),
    /// Compare bilateral, community and legal enforcement.
    Enforce(EnforceArgs),
    /// Per-group degree and cross-link summary.
    Stratify(SocietyArg),
    /// Brute-force classification of every small graph.
    Oracle(OracleArgs),
    /// Graphviz DOT of the society's network.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub v: f64,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub delta: f64,
    /// Write the stability curve pair over n = 1..=curve-max.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub curve_max: usize,
}

#[derive(Debug, Args)]
pub struct SocietyArg {
    #[arg(long)]
    pub society: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub society: PathBuf,
    #[arg(long)]
    pub strong: bool,
    /// Strong stability with transfers (implies --strong).
    #[arg(long)]
    pub transfers: bool,
    /// Only deviations dropping at most one link per player.
    #[arg(long)]
    pub proof_pattern: bool,
    /// Skip pairs with d_i + d_j above this.
    #[arg(long, default_value_t = crate::strong::DEVIATION_CAP)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct FindSstArgs {
    #[arg(long)]
    pub society: PathBuf,
    /// Player count; the society's types are truncated or extended with the last type.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConventionArg {
    Independent,
    AtMostOne,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub society: PathBuf,
    #[arg(long)]
    pub periods: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "independent")]
    pub convention: ConventionArg,
    /// `i,j,t`: player i refuses j's first request at or after period t.
    #[arg(long)]
    pub deviate: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub batches: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EnforceMode {
    Compare,
}

#[derive(Debug, Args)]
pub struct EnforceArgs {
    #[arg(long)]
    pub society: PathBuf,
    #[arg(long, value_enum, default_value = "compare")]
    pub mode: EnforceMode,
    /// Community link cost; defaults to the society's community setting.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// `k0,a` for C(γ) = k0 + a·γ/(c−γ); defaults to the society's legal setting.
    #[arg(long)]
    pub costfn: Option<String>,
    /// Share the legal cost across a population of this size.
    #[arg(long)]
    pub population: Option<usize>,
    /// Comma-separated population sizes for the population table.
    #[arg(long, value_delimiter = ',')]
    pub ngrid: Vec<usize>,
    /// Comma-separated κ values for the κ table.
    #[arg(long, value_delimiter = ',')]
    pub kappa_grid: Vec<f64>,
    /// Directory for kappa.csv and population.csv.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub society: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub nmax: usize,
    /// Every labeled graph instead of one per isomorphism class.
    #[arg(long)]
    pub labeled: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    #[arg(long)]
    pub society: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match execute(&cli.command, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs one command; `Ok(false)` means a queried property fails.
pub fn execute(cmd: &Command, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Bound(a) => bound(a, out, log),
        Command::Check(a) => check(a, out, log),
        Command::FindSst(a) => find_sst(a, out, log),
        Command::Simulate(a) => sim(a, out, log),
        Command::Enforce(a) => enforce(a, out, log),
        Command::Stratify(a) => stratify(a, out, log),
        Command::Oracle(a) => oracle(a, out, log),
        Command::ExportDot(a) => export_dot(a, out, log),
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Loads and validates; violations become one error.
fn load(path: &Path) -> Result<(Society, Network)> {
    let (s, g) = load_society(path)?;
    let v = validate(&s, &g);
    if !v.is_empty() {
        return Err(Error::Invalid(v.iter().map(|x| format!("{}: {}", x.location, x.message)).collect()));
    }
    Ok((s, g))
}

fn bound(a: &BoundArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let t = SocietyParams {
        n_players: 1,
        alpha: a.alpha,
        p: a.p,
        v: a.v,
        c: a.c,
        gamma: a.gamma,
        delta: a.delta,
    };
    let probe = Society::homogeneous(SocietyParams { n_players: 2, ..t.clone() });
    let issues: Vec<String> = validate(&probe, &Network::empty(2))
        .into_iter()
        .map(|v| format!("{}: {}", v.location, v.message))
        .collect();
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    let b = cooperation_bound(&t);
    if let Some(path) = &a.curve {
        write_curve_csv(File::create(path)?, &t, a.curve_max)?;
    }
    emit(out, &serde_json::json!({ "b_star": b }))?;
    writeln!(log, "B* = {b}")?;
    Ok(true)
}

fn check(a: &CheckArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, g) = load(&a.society)?;
    let st = is_stable(&g, &s)?;
    writeln!(log, "stable: {}", st.stable)?;
    if !(a.strong || a.transfers) {
        emit(out, &st)?;
        return Ok(st.stable);
    }
    if !st.stable {
        emit(out, &serde_json::json!({ "stability": st, "strong": null }))?;
        writeln!(log, "strongly stable: false (not stable)")?;
        return Ok(false);
    }
    let opts = SearchOptions {
        mode: if a.proof_pattern {
            crate::strong::SearchMode::ProofPattern
        } else {
            crate::strong::SearchMode::Exact
        },
        cap: a.cap,
    };
    let rep = if a.transfers {
        find_violation_with_transfers(&g, &s, opts)?
    } else {
        find_violation(&g, &s, opts)?
    };
    let audit = s.is_homogeneous().then(|| audit_degree_counts(&g, &s));
    let label = if a.transfers { "strongly stable with transfers" } else { "strongly stable" };
    let holds = rep.verified();
    match (&rep.witness, rep.truncated_pairs.is_empty()) {
        (Some(w), _) => writeln!(
            log,
            "{label}: false (pair {},{} dropping {} link(s))",
            w.deviation.i,
            w.deviation.j,
            w.deviation.removed.len()
        )?,
        (None, true) => writeln!(log, "{label}: true")?,
        (None, false) => writeln!(
            log,
            "{label}: unverified ({} pair(s) above the deviation cap)",
            rep.truncated_pairs.len()
        )?,
    }
    for w in &rep.warnings {
        writeln!(log, "warning: {w}")?;
    }
    if let Some(au) = &audit {
        writeln!(log, "degree-count audit: {}", if au.passes { "passes" } else { "fails" })?;
    }
    emit(out, &serde_json::json!({ "stability": st, "strong": rep, "degree_audit": audit }))?;
    Ok(holds)
}

fn find_sst(a: &FindSstArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, _) = load(&a.society)?;
    let s = a.n.map_or(s.clone(), |n| s.resized(n));
    let found = search_sst(&s, a.seed, a.max_steps)?;
    writeln!(log, "heuristic search (non-exhaustive)")?;
    for c in &found {
        writeln!(
            log,
            "{}: {} -> {} links, {}",
            c.label,
            c.start_edges,
            c.outcome.network.edge_count(),
            if c.outcome.converged { "no violation found" } else { "violation remains" }
        )?;
    }
    emit(out, &found)?;
    Ok(true)
}

fn parse_deviation(s: &str) -> Result<DeviationScript> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("--deviate expects i,j,t (got {s:?})"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(DeviationScript {
        player: parts[0].parse().map_err(|_| bad())?,
        partner: parts[1].parse().map_err(|_| bad())?,
        period: parts[2].parse().map_err(|_| bad())?,
    })
}

fn sim(a: &SimulateArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, g) = load(&a.society)?;
    let deviation = a.deviate.as_deref().map(parse_deviation).transpose()?;
    if let Some(d) = deviation {
        if d.player >= g.n() || d.partner >= g.n() {
            return Err(Error::Config("--deviate player out of range".into()));
        }
    }
    let config = SimConfig {
        periods: a.periods,
        seed: a.seed,
        convention: match a.convention {
            ConventionArg::Independent => RequestConvention::Independent,
            ConventionArg::AtMostOne => RequestConvention::AtMostOne,
        },
        deviation,
        batches: a.batches,
    };
    let r = simulate(&g, &s, &config)?;
    writeln!(
        log,
        "{} periods: {} requests, {} provided, {} refused, {} unserved",
        r.periods, r.requests, r.provisions, r.refusals, r.unserved
    )?;
    emit(out, &r)?;
    Ok(true)
}

fn parse_cost(s: &str) -> Result<LegalCost> {
    let bad = || Error::Config(format!("--costfn expects k0,a (got {s:?})"));
    let (k0, a) = s.split_once(',').ok_or_else(bad)?;
    Ok(LegalCost { k0: k0.trim().parse().map_err(|_| bad())?, a: a.trim().parse().map_err(|_| bad())? })
}

fn enforce(a: &EnforceArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, _) = load(&a.society)?;
    if !s.is_homogeneous() {
        return Err(Error::Config("enforcement comparison needs a homogeneous society".into()));
    }
    let t = s.type_params(0);
    let cost = match (&a.costfn, &s.enforcement) {
        (Some(c), _) => parse_cost(c)?,
        (None, EnforcementConfig::Legal { cost, .. }) => *cost,
        _ => return Err(Error::Config("--costfn required".into())),
    };
    let kappa = match (a.kappa, &s.enforcement) {
        (Some(k), _) => k,
        (None, EnforcementConfig::Community { kappa, .. }) => *kappa,
        _ => return Err(Error::Config("--kappa required".into())),
    };
    let cmp = compare_mechanisms(&t, kappa, &cost, a.population)?;
    let kappas = if a.kappa_grid.is_empty() { vec![kappa] } else { a.kappa_grid.clone() };
    let ktab = kappa_table(&t, &cost, &kappas)?;
    let pop =
        (!a.ngrid.is_empty()).then(|| population_analysis(&t, &cost, &a.ngrid, Some(kappa))).transpose()?;
    if let Some(dir) = &a.csv_dir {
        std::fs::create_dir_all(dir)?;
        write_kappa_csv(File::create(dir.join("kappa.csv"))?, &ktab)?;
        if let Some(p) = &pop {
            write_population_csv(File::create(dir.join("population.csv"))?, &p.rows)?;
        }
    }
    writeln!(
        log,
        "U_P = {:.6}, U_C = {:.6} (size {}), U_L = {:.6} (gamma* = {:.6}); winner: {:?}",
        cmp.u_p, cmp.u_c, cmp.community_size, cmp.u_l, cmp.gamma_star, cmp.winner
    )?;
    emit(out, &serde_json::json!({ "comparison": cmp, "kappa_table": ktab, "population": pop }))?;
    Ok(true)
}

fn stratify(a: &SocietyArg, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, g) = load(&a.society)?;
    let groups = classify_stratification(&g, &s);
    for x in &groups {
        writeln!(log, "{}: at-bound {:.1}, cross-links {}", x.group, x.fraction_at_bound, x.cross_links)?;
    }
    emit(out, &groups)?;
    Ok(true)
}

fn oracle(a: &OracleArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, _) = load(&a.society)?;
    if a.nmax > CLASSIFY_CAP {
        return Err(Error::EnumerationCap { n: a.nmax, cap: CLASSIFY_CAP });
    }
    let dedupe = if a.labeled { Dedupe::AllLabeled } else { Dedupe::Isomorphism };
    let mut buf = Vec::new();
    for n in 1..=a.nmax {
        let verdicts = classify_all(EnumerationScope { n, dedupe }, &s)?;
        let mut part = Vec::new();
        write_classification_csv(&mut part, n, &verdicts)?;
        // One header for the whole file.
        let body = if n == 1 {
            &part[..]
        } else {
            &part[part.iter().position(|&b| b == b'\n').map_or(0, |k| k + 1)..]
        };
        buf.extend_from_slice(body);
        writeln!(
            log,
            "n = {n}: {} graphs, {} stable, {} strongly stable, {} with transfers",
            verdicts.len(),
            verdicts.iter().filter(|v| v.stable).count(),
            verdicts.iter().filter(|v| v.strongly_stable).count(),
            verdicts.iter().filter(|v| v.sst_with_transfers).count()
        )?;
    }
    match &a.output {
        Some(p) => std::fs::write(p, &buf)?,
        None => out.write_all(&buf)?,
    }
    Ok(true)
}

fn export_dot(a: &ExportDotArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<bool> {
    let (s, g) = load(&a.society)?;
    let dot = to_dot(&g, Some(&s));
    match &a.output {
        Some(p) => {
            std::fs::write(p, dot)?;
            writeln!(log, "wrote {}", p.display())?;
        }
        None => out.write_all(dot.as_bytes())?,
    }
    Ok(true)
}
