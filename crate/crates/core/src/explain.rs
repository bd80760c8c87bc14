//! Human-readable dump of an episode's machine and every model the combined
//! rank evaluates. States are named `H1, H2, …` in machine order.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::alphabet::Alphabet;
use crate::candidates::CandidateSet;
use crate::dataset::Dataset;
use crate::episode::{Episode, VertexSet};
use crate::machine::{EdgeSet, Machine};
use crate::model::{Fit, LabelClasses};
use crate::rank::{Evaluation, Explainer, PreparedEpisode, RankError, RankOptions};

fn state_name(s: usize) -> String {
    format!("H{}", s + 1)
}

fn render_state(ep: &Episode, w: VertexSet, alphabet: &Alphabet) -> String {
    let parts: Vec<String> = w.iter().map(|v| format!("{v}:{}", alphabet.name(ep.label(v)))).collect();
    format!("{{{}}}", parts.join(", "))
}

fn render_edges(machine: &Machine, set: &EdgeSet) -> String {
    if set.is_empty() {
        return "-".to_owned();
    }
    set.iter()
        .map(|e| {
            let edge = &machine.edges()[e];
            format!("{}->{}", state_name(edge.from), state_name(edge.to))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// States and labelled edges of a machine.
pub fn render_machine(machine: &Machine, alphabet: &Alphabet) -> String {
    let ep = machine.episode();
    let mut out = String::new();
    let _ = writeln!(out, "states {}", machine.num_states());
    for (i, &w) in machine.states().iter().enumerate() {
        let mut tag = String::new();
        if i == machine.source() {
            tag.push_str(" source");
        }
        if i == machine.sink() {
            tag.push_str(" sink");
        }
        let _ = writeln!(out, "  {} {}{}", state_name(i), render_state(ep, w, alphabet), tag);
    }
    let _ = writeln!(out, "edges {}", machine.num_edges());
    for e in machine.edges() {
        let _ = writeln!(out, "  {} -{}-> {}", state_name(e.from), alphabet.name(e.label), state_name(e.to));
    }
    out
}

fn params_json(fit: &Fit<f64>, classes: &LabelClasses, alphabet: &Alphabet) -> Value {
    let u: serde_json::Map<String, Value> =
        fit.params.u.iter().enumerate().map(|(c, &v)| (classes.class_name(c, alphabet), json!(v))).collect();
    json!({
        "u": u,
        "pinned": classes.class_name(fit.params.pinned, alphabet),
        "t1": fit.params.t1,
        "t2": fit.params.t2,
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "converged": fit.converged,
    })
}

fn num_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct Explanation {
    pub text: String,
    /// Fitted parameters of every evaluated model.
    pub models: Value,
}

/// Fits every model the combined rank considers and renders them.
pub fn explain(
    id: &str,
    episode: &Episode,
    dataset: &Dataset,
    candidates: &CandidateSet,
    options: &RankOptions<f64>,
) -> Result<Explanation, RankError> {
    let alphabet = dataset.alphabet();
    let prep = PreparedEpisode::new(episode, dataset, options.limits)?;
    let m = &prep.machine;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "episode {id} = {} ({} vertices, {} edges)",
        episode.notation(alphabet),
        episode.len(),
        episode.num_edges()
    );
    let _ = writeln!(text, "support {}", prep.support());
    text.push_str(&render_machine(m, alphabet));
    let prefixes = m.states();
    let _ = writeln!(text, "prefix graphs {}", prefixes.len());
    for w in prefixes {
        let _ = writeln!(text, "  {}", render_state(episode, *w, alphabet));
    }

    let mut models = Vec::new();
    let mut render = |name: String, ev: &Evaluation<f64>, shared: bool, text: &mut String| {
        let r = &ev.result;
        let _ = writeln!(text, "model {name}");
        let _ = writeln!(text, "  C1: {}", render_edges(m, &ev.spec.c1));
        let _ = writeln!(text, "  C2: {}", render_edges(m, &ev.spec.c2));
        if shared {
            let _ = writeln!(text, "  same as independence");
        }
        let mut entry = json!({
            "model": name,
            "c1": ev.spec.c1.iter().collect::<Vec<_>>(),
            "c2": ev.spec.c2.iter().collect::<Vec<_>>(),
            "mu": num_json(r.mu),
            "sigma2": num_json(r.sigma2),
            "rank": num_json(r.rank),
            "method": r.method.to_string(),
        });
        if let Some(fit) = &ev.fit {
            let us: Vec<String> = fit
                .params
                .u
                .iter()
                .enumerate()
                .map(|(c, u)| format!("{}={u:.6}", prep.classes.class_name(c, alphabet)))
                .collect();
            let _ = writeln!(text, "  u: {}", us.join(" "));
            let _ = writeln!(text, "  t1={:.6} t2={:.6}", fit.params.t1, fit.params.t2);
            entry["params"] = params_json(fit, &prep.classes, alphabet);
        }
        let _ = writeln!(text, "  mu={:.6} sigma2={:.6} rank={:.6} method={}", r.mu, r.sigma2, r.rank, r.method);
        models.push(entry);
    };

    let ind = prep.independence(options)?;
    render("independence".to_owned(), &ind, false, &mut text);
    let specs = prep.partition_specs(candidates)?;
    let mut best: Option<(Explainer, f64)> = None;
    let mut all_trivial = true;
    for (explainer, spec) in specs {
        let name = explainer.describe(episode, alphabet, candidates);
        let shared = spec.is_independence();
        let ev = if shared {
            Evaluation { spec, fit: ind.fit.clone(), result: ind.result.clone() }
        } else {
            all_trivial = false;
            prep.evaluate(spec, explainer, options)?
        };
        render(name, &ev, shared, &mut text);
        let r = if shared { ind.result.rank } else { ev.result.rank };
        let e = if shared { Explainer::Independence } else { explainer };
        if best.map_or(true, |(_, b)| r < b) {
            best = Some((e, r));
        }
    }
    let (winner, r_part) = best.unwrap_or((Explainer::Independence, ind.result.rank));
    let _ = writeln!(
        text,
        "rank_ind={:.6} rank_part={:.6} explainer={}",
        ind.result.rank,
        r_part,
        winner.describe(episode, alphabet, candidates)
    );
    if all_trivial {
        let _ = writeln!(text, "note: partition equals independence");
    }
    Ok(Explanation { text, models: Value::Array(models) })
}
