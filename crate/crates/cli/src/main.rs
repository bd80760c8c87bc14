//! `eprank`: generate corpora, mine candidates, rank, compare and explain.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use episode_rank::dataset::{load_sequences, save_dataset};
use episode_rank::explain::explain;
use episode_rank::generate::{generate, GeneratorConfig, GeneratorKind};
use episode_rank::io::{load_episodes, save_episodes};
use episode_rank::machine::block_prefix;
use episode_rank::miner::{mine, MineOptions};
use episode_rank::rank::{rank_all, Explainer, PreparedEpisode, RankError, RankOptions};
use episode_rank::report::{build_rows, compare, parse_report, write_comparison, write_report, ReportRow, Stratum};
use episode_rank::{CandidateSet, Dataset, PartitionSpec, VertexSet};

#[derive(Parser, Debug)]
#[command(name = "eprank", version, about = "Rank episodes against independence and partition models")]
struct Cli {
    /// Worker threads for ranking; defaults to all cores.
    #[arg(long, global = true, env = "EPRANK_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic corpus, one sequence per line.
    Generate(GenerateArgs),
    /// Mine serial and parallel candidate episodes into a JSONL file.
    Mine(MineArgs),
    /// Rank candidate episodes and write a TSV report.
    Rank(RankArgs),
    /// Kendall tau and top-k rho/eta for one report or between two.
    Compare(CompareArgs),
    /// Print an episode's machine and every model the combined rank fits.
    Explain(ExplainArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Plant,
    Plant2,
    Gap,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Gap probability of the planted episode (gap corpora only).
    #[arg(long)]
    gap_p: Option<f64>,
    #[arg(long)]
    num_sequences: Option<usize>,
}

#[derive(Args, Debug, Clone, Copy)]
struct MineFlags {
    #[arg(long, default_value_t = 10)]
    min_support: u64,
    /// Longest serial episode.
    #[arg(long, default_value_t = 4)]
    max_len: usize,
    /// Largest parallel episode.
    #[arg(long, default_value_t = 3)]
    max_size: usize,
    /// Also add pairwise intersections of serial episodes.
    #[arg(long)]
    merge_intersections: bool,
}

impl MineFlags {
    fn options(&self) -> MineOptions {
        MineOptions {
            min_support: self.min_support,
            max_len: self.max_len,
            max_size: self.max_size,
            merge_intersections: self.merge_intersections,
        }
    }

    fn describe(&self) -> String {
        format!(
            "min_support={} max_len={} max_size={} merge_intersections={}",
            self.min_support, self.max_len, self.max_size, self.merge_intersections
        )
    }
}

#[derive(Args, Debug)]
struct MineArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    mine: MineFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[arg(long)]
    data: PathBuf,
    /// Candidate episodes; mined from the data when absent.
    #[arg(long)]
    episodes: Option<PathBuf>,
    /// Chain unordered equal-label vertices instead of rejecting them.
    #[arg(long)]
    strictify: bool,
    #[command(flatten)]
    mine: MineFlags,
    /// Exact Poisson-binomial tail (datasets up to --exact-limit sequences).
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = episode_rank::rank::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    /// Report ranks in log10 instead of natural log.
    #[arg(long)]
    log10: bool,
    /// Leave out the timestamp and timing comments.
    #[arg(long)]
    no_timestamp: bool,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    report_a: PathBuf,
    report_b: Option<PathBuf>,
    /// Column compared between two reports.
    #[arg(long, default_value = "rank_part")]
    column: String,
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Episode file used to stratify tau by episode shape.
    #[arg(long)]
    episodes: Option<PathBuf>,
    #[arg(long)]
    strictify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    episodes: PathBuf,
    /// Id of the episode to explain.
    #[arg(long)]
    id: String,
    #[arg(long)]
    strictify: bool,
    #[arg(long)]
    exact: bool,
    /// Write the fitted parameters of every model as JSON.
    #[arg(long)]
    dump_model: Option<PathBuf>,
    /// Expert: also fit the partition (W, V\W) for W given as vertex
    /// indices, even when W is not a prefix graph.
    #[arg(long, value_delimiter = ',')]
    split: Option<Vec<usize>>,
}

struct Failure {
    code: u8,
    message: String,
}

fn data_error(e: impl Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn usage_error(e: impl Display) -> Failure {
    Failure { code: 1, message: e.to_string() }
}

fn numerical_error(e: impl Display) -> Failure {
    Failure { code: 3, message: e.to_string() }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| data_error(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(data_error),
    }
}

fn load_data(path: &Path) -> Result<Dataset, Failure> {
    load_sequences(path).map_err(data_error)
}

fn load_candidates(path: &Path, dataset: &mut Dataset, strictify: bool) -> Result<CandidateSet, Failure> {
    let file = load_episodes(path, dataset.alphabet_mut(), strictify).map_err(data_error)?;
    for id in &file.duplicates {
        eprintln!("warning: {id} repeats an earlier episode and is skipped");
    }
    Ok(file.candidates)
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let kind = match args.kind {
        Kind::Plant => GeneratorKind::Plant,
        Kind::Plant2 => GeneratorKind::Plant2,
        Kind::Gap => GeneratorKind::Gap,
    };
    let mut config = GeneratorConfig::defaults(kind, args.seed);
    if let Some(p) = args.gap_p {
        if kind != GeneratorKind::Gap {
            return Err(usage_error("--gap-p applies to --kind gap only"));
        }
        config = GeneratorConfig::gap(args.seed, p);
    }
    if let Some(n) = args.num_sequences {
        config.num_sequences = n;
    }
    let generated = generate(&config).map_err(usage_error)?;
    save_dataset(&generated.dataset, &args.out).map_err(data_error)?;
    eprintln!(
        "{} sequences, {} events, planted {:?} into {:?} sequences",
        generated.dataset.len(),
        generated.dataset.num_events(),
        generated.placed,
        generated.sequences_with_plant
    );
    Ok(())
}

fn cmd_mine(args: &MineArgs) -> Result<(), Failure> {
    let dataset = load_data(&args.data)?;
    let set = mine(&dataset, &args.mine.options());
    save_episodes(set.items(), dataset.alphabet(), &args.out).map_err(data_error)?;
    eprintln!("{} episodes", set.len());
    Ok(())
}

fn rank_options(exact: bool, exact_limit: usize) -> RankOptions<f64> {
    RankOptions { exact, exact_limit, ..RankOptions::default() }
}

fn cmd_rank(args: &RankArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let mut dataset = load_data(&args.data)?;
    let mut comments = Vec::new();
    if !args.no_timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        comments.push(format!("timestamp: {secs} (unix seconds)"));
    }
    comments.push(format!("eprank rank {}", env!("CARGO_PKG_VERSION")));
    comments.push(format!(
        "data: {} ({} sequences, {} events)",
        args.data.display(),
        dataset.len(),
        dataset.num_events()
    ));
    let candidates = match &args.episodes {
        Some(path) => {
            comments.push(format!("episodes: {} strictify={}", path.display(), args.strictify));
            load_candidates(path, &mut dataset, args.strictify)?
        }
        None => {
            comments.push(format!("episodes: mined {}", args.mine.describe()));
            mine(&dataset, &args.mine.options())
        }
    };
    comments.push(format!("candidates: {}", candidates.len()));
    let exact = args.exact && dataset.len() <= args.exact_limit;
    if args.exact && !exact {
        eprintln!(
            "warning: {} sequences exceed --exact-limit {}; using approximations",
            dataset.len(),
            args.exact_limit
        );
    }
    comments.push(format!("tail: exact={exact} exact_limit={} log10={}", args.exact_limit, args.log10));

    let opts = rank_options(exact, args.exact_limit);
    let results = rank_all(&candidates, &dataset, &opts);
    let numerical = results.iter().filter(|r| matches!(r, Err(RankError::Fit { .. }))).count();
    let (rows, errors) = build_rows(&candidates, &results, &dataset);
    let mut text = write_report(&rows, &errors, &comments, args.log10);
    if !args.no_timestamp {
        text.push_str(&format!("# elapsed: {:.3} s\n", started.elapsed().as_secs_f64()));
    }
    emit(args.out.as_deref(), &text)?;
    if !errors.is_empty() {
        eprintln!("{} episodes not ranked; see the # error lines", errors.len());
    }
    if numerical > 0 {
        return Err(numerical_error(format!("{numerical} episodes failed to fit")));
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<Vec<ReportRow>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| data_error(format!("cannot read {}: {e}", path.display())))?;
    parse_report(&text).map_err(|e| data_error(format!("{}: {e}", path.display())))
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let a = read_report(&args.report_a)?;
    let b = args.report_b.as_deref().map(read_report).transpose()?;
    let mut strata = HashMap::new();
    if let Some(path) = &args.episodes {
        let mut alphabet = Default::default();
        let file = load_episodes(path, &mut alphabet, args.strictify).map_err(data_error)?;
        for c in file.candidates.items() {
            strata.insert(c.id.clone(), Stratum::of(c.episode.len(), c.episode.is_parallel()));
        }
    }
    if b.is_none() && args.column != "rank_part" {
        return Err(usage_error("--column applies when comparing two reports"));
    }
    let c = compare(&a, b.as_deref(), &args.column, &strata, args.top).map_err(data_error)?;
    emit(args.out.as_deref(), &write_comparison(&c))
}

fn cmd_explain(args: &ExplainArgs) -> Result<(), Failure> {
    let mut dataset = load_data(&args.data)?;
    let candidates = load_candidates(&args.episodes, &mut dataset, args.strictify)?;
    let index = candidates.position(&args.id).ok_or_else(|| data_error(format!("unknown episode id {}", args.id)))?;
    let episode = &candidates.get(index).episode;
    let opts = rank_options(args.exact, RankOptions::<f64>::default().exact_limit);
    let ex = explain(&args.id, episode, &dataset, &candidates, &opts).map_err(|e| match e {
        RankError::Fit { .. } => numerical_error(e),
        RankError::Machine(_) => data_error(e),
    })?;
    let mut text = ex.text;
    if let Some(split) = &args.split {
        if let Some(&v) = split.iter().find(|&&v| v >= episode.len()) {
            return Err(usage_error(format!("--split vertex {v} is outside 0..{}", episode.len())));
        }
        let w = VertexSet::from_vertices(split.iter().copied());
        let prep = PreparedEpisode::new(episode, &dataset, opts.limits).map_err(data_error)?;
        let m = &prep.machine;
        let rest = episode.vertices().difference(w);
        let spec = PartitionSpec::new(m, block_prefix(m, w), block_prefix(m, rest)).map_err(usage_error)?;
        let ev = prep.evaluate(spec, Explainer::Prefix(w), &opts).map_err(numerical_error)?;
        let r = &ev.result;
        text.push_str(&format!(
            "split W={:?} prefix={} complement_prefix={}\n  mu={:.6} sigma2={:.6} rank={:.6} method={}\n",
            w.iter().collect::<Vec<_>>(),
            episode.is_prefix(w),
            episode.is_prefix(rest),
            r.mu,
            r.sigma2,
            r.rank,
            r.method
        ));
    }
    if let Some(path) = &args.dump_model {
        let json = serde_json::to_string_pretty(&ex.models).map_err(data_error)?;
        fs::write(path, json + "\n").map_err(|e| data_error(format!("cannot write {}: {e}", path.display())))?;
    }
    emit(None, &text)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage_error("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage_error)?;
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Explain(a) => cmd_explain(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
