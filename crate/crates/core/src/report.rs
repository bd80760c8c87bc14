//! TSV rank reports and their comparison.
//!
//! A report is `#` comment lines, a header row, and one row per episode with
//! the columns in [`COLUMNS`]. Rows are sorted by `rank_part` descending, then
//! `rank_ind` descending, then id.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::candidates::CandidateSet;
use crate::dataset::Dataset;
use crate::rank::{kendall_tau_b, rho_eta, Combined, RankError};

pub const COLUMNS: [&str; 10] =
    ["id", "support", "mu_ind", "rank_ind", "mu_part", "rank_part", "method", "explainer", "rho", "eta"];

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub support: u64,
    pub mu_ind: f64,
    pub rank_ind: f64,
    pub mu_part: f64,
    pub rank_part: f64,
    pub method: String,
    pub explainer: String,
    pub rho: f64,
    pub eta: f64,
}

impl ReportRow {
    pub fn from_combined(id: &str, combined: &Combined<f64>, explainer: String) -> Self {
        let (rho, eta) = rho_eta(combined.independence.rank, combined.partition.rank);
        ReportRow {
            id: id.to_owned(),
            support: combined.support,
            mu_ind: combined.independence.mu,
            rank_ind: combined.independence.rank,
            mu_part: combined.partition.mu,
            rank_part: combined.partition.rank,
            method: combined.partition.method.to_string(),
            explainer,
            rho,
            eta,
        }
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "support" => self.support as f64,
            "mu_ind" => self.mu_ind,
            "rank_ind" => self.rank_ind,
            "mu_part" => self.mu_part,
            "rank_part" => self.rank_part,
            "rho" => self.rho,
            "eta" => self.eta,
            _ => return None,
        })
    }
}

/// Report order: `rank_part` desc, `rank_ind` desc, id asc.
pub fn report_order(a: &ReportRow, b: &ReportRow) -> Ordering {
    b.rank_part.total_cmp(&a.rank_part).then_with(|| b.rank_ind.total_cmp(&a.rank_ind)).then_with(|| a.id.cmp(&b.id))
}

/// Rows for every successfully ranked candidate plus `(id, message)` for the
/// failures, rows sorted.
pub fn build_rows(
    candidates: &CandidateSet,
    results: &[Result<Combined<f64>, RankError>],
    dataset: &Dataset,
) -> (Vec<ReportRow>, Vec<(String, String)>) {
    let mut rows = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (c, r) in candidates.items().iter().zip(results) {
        match r {
            Ok(comb) => {
                let expl = comb.partition.explainer.describe(&c.episode, dataset.alphabet(), candidates);
                rows.push(ReportRow::from_combined(&c.id, comb, expl));
            }
            Err(e) => errors.push((c.id.clone(), e.to_string())),
        }
    }
    rows.sort_by(report_order);
    (rows, errors)
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else {
        format!("{x}")
    }
}

/// Renders a report. `comments` go first, each prefixed with `# `. With
/// `log10`, the two rank columns are divided by `ln 10`.
pub fn write_report(rows: &[ReportRow], errors: &[(String, String)], comments: &[String], log10: bool) -> String {
    let scale = if log10 { std::f64::consts::LN_10 } else { 1.0 };
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    if log10 {
        out.push_str("# ranks: log10\n");
    }
    for (id, msg) in errors {
        let _ = writeln!(out, "# error\t{id}\t{msg}");
    }
    out.push_str(&COLUMNS.join("\t"));
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            r.support,
            fmt_num(r.mu_ind),
            fmt_num(r.rank_ind / scale),
            fmt_num(r.mu_part),
            fmt_num(r.rank_part / scale),
            r.method,
            r.explainer,
            fmt_num(r.rho),
            fmt_num(r.eta),
        );
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("missing header row")]
    NoHeader,
    #[error("header does not match the report columns")]
    BadHeader,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("reports differ in ids: only in first {only_a:?}, only in second {only_b:?}")]
    IdMismatch { only_a: Vec<String>, only_b: Vec<String> },
}

/// Parses a report written by [`write_report`]. Ranks are returned as
/// written, so a `log10` report stays in log10.
pub fn parse_report(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(ReportError::NoHeader)?;
    if header.split('\t').collect::<Vec<_>>() != COLUMNS {
        return Err(ReportError::BadHeader);
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let line = i + 1;
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != COLUMNS.len() {
            return Err(ReportError::Row { line, message: format!("expected {} fields", COLUMNS.len()) });
        }
        let num = |k: usize| -> Result<f64, ReportError> {
            f[k].parse().map_err(|_| ReportError::Row { line, message: format!("bad number {:?}", f[k]) })
        };
        rows.push(ReportRow {
            id: f[0].to_owned(),
            support: f[1].parse().map_err(|_| ReportError::Row { line, message: format!("bad support {:?}", f[1]) })?,
            mu_ind: num(2)?,
            rank_ind: num(3)?,
            mu_part: num(4)?,
            rank_part: num(5)?,
            method: f[6].to_owned(),
            explainer: f[7].to_owned(),
            rho: num(8)?,
            eta: num(9)?,
        });
    }
    Ok(rows)
}

/// Episode shape classes used to stratify τ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    ParallelPair,
    Large,
    Other,
}

impl Stratum {
    pub fn of(size: usize, parallel: bool) -> Self {
        if size == 2 && parallel {
            Stratum::ParallelPair
        } else if size > 2 {
            Stratum::Large
        } else {
            Stratum::Other
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stratum::ParallelPair => "parallel-2",
            Stratum::Large => "size>2",
            Stratum::Other => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredId {
    pub id: String,
    pub support: u64,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub column: String,
    /// `(stratum name, pairs, τ-b)`; the first entry is every episode.
    pub tau: Vec<(String, usize, Option<f64>)>,
    pub top_rho: Vec<ScoredId>,
    /// Restricted to rows with `support >= mu_part`.
    pub top_eta: Vec<ScoredId>,
}

/// Descending by score with non-finite scores last, then by id.
fn top_k(mut v: Vec<ScoredId>, k: usize, key: impl Fn(&ScoredId) -> f64) -> Vec<ScoredId> {
    v.sort_by(|x, y| {
        let (a, b) = (key(x), key(y));
        b.is_finite().cmp(&a.is_finite()).then_with(|| b.total_cmp(&a)).then_with(|| x.id.cmp(&y.id))
    });
    v.truncate(k);
    v
}

/// Pairs `(a, b)` per id: within one report `a = rank_ind`, `b = rank_part`;
/// across two reports `a` and `b` are `column` of each. `strata` maps ids to
/// episode shapes; ids without an entry only count towards the overall τ.
pub fn compare(
    a: &[ReportRow],
    b: Option<&[ReportRow]>,
    column: &str,
    strata: &HashMap<String, Stratum>,
    top: usize,
) -> Result<Comparison, ReportError> {
    let mut pairs: Vec<ScoredId> = Vec::with_capacity(a.len());
    match b {
        None => {
            for r in a {
                pairs.push(ScoredId {
                    id: r.id.clone(),
                    support: r.support,
                    a: r.rank_ind,
                    b: r.rank_part,
                    rho: r.rho,
                    eta: if (r.support as f64) >= r.mu_part { r.eta } else { f64::NAN },
                });
            }
        }
        Some(b) => {
            let by_id: HashMap<&str, &ReportRow> = b.iter().map(|r| (r.id.as_str(), r)).collect();
            let ids_a: HashMap<&str, &ReportRow> = a.iter().map(|r| (r.id.as_str(), r)).collect();
            let mut only_a: Vec<String> =
                a.iter().filter(|r| !by_id.contains_key(r.id.as_str())).map(|r| r.id.clone()).collect();
            let mut only_b: Vec<String> =
                b.iter().filter(|r| !ids_a.contains_key(r.id.as_str())).map(|r| r.id.clone()).collect();
            if !only_a.is_empty() || !only_b.is_empty() {
                only_a.sort();
                only_b.sort();
                return Err(ReportError::IdMismatch { only_a, only_b });
            }
            for ra in a {
                let rb = by_id[ra.id.as_str()];
                let x = ra.column(column).ok_or_else(|| ReportError::UnknownColumn(column.to_owned()))?;
                let y = rb.column(column).ok_or_else(|| ReportError::UnknownColumn(column.to_owned()))?;
                let (rho, eta) = rho_eta(x, y);
                pairs.push(ScoredId {
                    id: ra.id.clone(),
                    support: ra.support,
                    a: x,
                    b: y,
                    rho,
                    eta: if (rb.support as f64) >= rb.mu_part { eta } else { f64::NAN },
                });
            }
        }
    }
    pairs.sort_by(|x, y| x.id.cmp(&y.id));

    let tau_of = |sel: &[&ScoredId]| {
        let xs: Vec<f64> = sel.iter().map(|p| p.a).collect();
        let ys: Vec<f64> = sel.iter().map(|p| p.b).collect();
        (sel.len(), kendall_tau_b(&xs, &ys))
    };
    let all: Vec<&ScoredId> = pairs.iter().collect();
    let (n, t) = tau_of(&all);
    let mut tau = vec![("all".to_owned(), n, t)];
    if !strata.is_empty() {
        for s in [Stratum::ParallelPair, Stratum::Large] {
            let sel: Vec<&ScoredId> = pairs.iter().filter(|p| strata.get(&p.id) == Some(&s)).collect();
            let (n, t) = tau_of(&sel);
            tau.push((s.name().to_owned(), n, t));
        }
    }
    let top_rho = top_k(pairs.clone(), top, |p| p.rho);
    let eta_ok: Vec<ScoredId> = pairs.into_iter().filter(|p| !p.eta.is_nan()).collect();
    let top_eta = top_k(eta_ok, top, |p| p.eta);
    Ok(Comparison { column: column.to_owned(), tau, top_rho, top_eta })
}

pub fn write_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# column: {}", c.column);
    out.push_str("section\tstratum\tpairs\ttau_b\n");
    for (name, n, t) in &c.tau {
        let t = t.map_or_else(|| "undefined".to_owned(), fmt_num);
        let _ = writeln!(out, "tau\t{name}\t{n}\t{t}");
    }
    for (name, list) in [("top_rho", &c.top_rho), ("top_eta", &c.top_eta)] {
        let _ = writeln!(out, "# {name}");
        let _ = writeln!(out, "{name}\tid\tsupport\ta\tb\trho\teta");
        for (i, p) in list.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                p.id,
                p.support,
                fmt_num(p.a),
                fmt_num(p.b),
                fmt_num(p.rho),
                fmt_num(p.eta)
            );
        }
    }
    out
}
