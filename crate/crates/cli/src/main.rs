use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, IsTerminal, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use cogtop_core::index::read_corpus;
use cogtop_core::{
    enumerate_topology, evaluate_with, fixtures, parse_query, stable_retrieve, verify, EvalParams,
    Index, IndexConfig, Lexicon, TokenizerConfig, Verdict,
};
use cogtop_service::{index_path, AppState, ServiceConfig, Session};
use serde_json::{json, Value};

/// Exit status for command-line usage errors.
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "cogtop",
    version,
    about = "Cognitive retrieval over synonym-class distances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a JSONL corpus and store it in the index directory.
    Ingest(IngestArgs),
    /// Evaluate a query and print the retrieval set as JSON.
    Query(QueryArgs),
    /// Read queries from stdin as successive refinements of one session.
    Repl(ReplArgs),
    /// Compare a query with a perturbation; the exit status encodes the verdict.
    Stability(StabilityArgs),
    /// Enumerate the open sets generated by a file of queries.
    Topology(TopologyArgs),
    /// Check the retrieval laws on seeded random systems.
    Verify(VerifyArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Index name inside the index directory, or a path to an index file.
    #[arg(long, short = 'i')]
    index: String,
    #[arg(long, env = "COGTOP_INDEX_DIR", default_value = ".cogtop")]
    index_dir: PathBuf,
}

impl IndexArgs {
    fn path(&self) -> PathBuf {
        let direct = PathBuf::from(&self.index);
        if direct.is_file() {
            direct
        } else {
            index_path(&self.index_dir, &self.index)
        }
    }

    fn load(&self) -> Result<Index> {
        let path = self.path();
        let file =
            File::open(&path).with_context(|| format!("cannot open index {}", path.display()))?;
        Index::read_snapshot(BufReader::new(file))
            .with_context(|| format!("cannot read index {}", path.display()))
    }
}

#[derive(Args)]
struct IngestArgs {
    /// JSONL corpus with one `{"id", "text", "meta"?}` object per line.
    #[arg(long, required_unless_present = "fixture")]
    corpus: Option<PathBuf>,
    #[arg(long, env = "COGTOP_LEXICON")]
    lexicon: Option<PathBuf>,
    /// Load a built-in fixture instead of `--corpus` and `--lexicon`.
    #[arg(long, conflicts_with = "corpus")]
    fixture: Option<String>,
    /// Stopword file, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Context whose layout is precomputed.
    #[arg(long)]
    context: Option<String>,
    #[arg(long)]
    shards: Option<usize>,
    /// Index name; defaults to the corpus file stem or the fixture name.
    #[arg(long, conflicts_with = "out")]
    name: Option<String>,
    /// Snapshot path; defaults to `<index-dir>/<name>.index.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "COGTOP_INDEX_DIR", default_value = ".cogtop")]
    index_dir: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, short = 'e')]
    epsilon: f64,
    #[arg(long, short = 'c')]
    context: Option<String>,
    /// Radius for one elementary leaf, as `POSITION=RADIUS`.
    #[arg(long = "leaf-eps", value_parser = parse_leaf_eps)]
    leaf_eps: Vec<(usize, f64)>,
    /// Print matching document ids one per line instead of JSON.
    #[arg(long)]
    ids: bool,
    query: String,
}

#[derive(Args)]
struct ReplArgs {
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, short = 'e')]
    epsilon: f64,
    #[arg(long, short = 'c')]
    context: Option<String>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, short = 'e')]
    epsilon: f64,
    #[arg(long, short = 'c')]
    context: Option<String>,
    #[arg(long, short = 'q')]
    query: String,
    #[arg(long, short = 'p')]
    perturbed: String,
}

#[derive(Args)]
struct TopologyArgs {
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, short = 'e')]
    epsilon: f64,
    #[arg(long, short = 'c')]
    context: Option<String>,
    /// File with one query per line.
    #[arg(long)]
    queries: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Lexicon used when an upload names none.
    #[arg(long, env = "COGTOP_LEXICON")]
    lexicon: Option<PathBuf>,
    #[arg(long, env = "COGTOP_INDEX_DIR", default_value = ".cogtop")]
    index_dir: PathBuf,
    /// Sessions file; defaults to `sessions.json` inside the index directory.
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// Directory of static files served next to the API.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

fn parse_leaf_eps(s: &str) -> Result<(usize, f64), String> {
    let (pos, eps) = s
        .split_once('=')
        .ok_or_else(|| format!("expected POSITION=RADIUS, got `{s}`"))?;
    let pos = pos
        .trim()
        .parse()
        .map_err(|e| format!("bad position: {e}"))?;
    let eps = eps.trim().parse().map_err(|e| format!("bad radius: {e}"))?;
    Ok((pos, eps))
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn exit_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Stable => 0,
        Verdict::DriftDetected => 2,
        Verdict::SignificantCognitiveChange => 3,
        Verdict::EmptyRetrieval => 4,
    }
}

fn ingest(args: IngestArgs) -> Result<u8> {
    let (records, lexicon, mut config, default_name) = if let Some(name) = &args.fixture {
        let f = fixtures::by_name(name).ok_or_else(|| {
            let known: Vec<&str> = fixtures::ALL.iter().map(|f| f.name).collect();
            anyhow!("unknown fixture `{name}`; known: {}", known.join(", "))
        })?;
        (f.corpus()?, f.lexicon()?, f.config(), f.name.to_string())
    } else {
        let corpus = args.corpus.as_ref().expect("clap requires --corpus");
        let lexicon_path = args
            .lexicon
            .as_ref()
            .ok_or_else(|| anyhow!("no lexicon: pass --lexicon or set COGTOP_LEXICON"))?;
        let records = read_corpus(BufReader::new(
            File::open(corpus).with_context(|| format!("cannot open {}", corpus.display()))?,
        ))?;
        let lexicon = Lexicon::load(BufReader::new(
            File::open(lexicon_path)
                .with_context(|| format!("cannot open {}", lexicon_path.display()))?,
        ))?;
        let stem = corpus
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("index")
            .to_string();
        (records, lexicon, IndexConfig::default(), stem)
    };
    if let Some(path) = &args.stopwords {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        config.tokenizer = TokenizerConfig::from_stopword_list(&text);
    }
    config.context = args.context.clone();
    config.shards = args.shards;
    let name = args.name.unwrap_or(default_name);
    let index = Index::ingest(records, Arc::new(lexicon), config)?;
    let path = args
        .out
        .unwrap_or_else(|| index_path(&args.index_dir, &name));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    index.write_snapshot(BufWriter::new(File::create(&path)?))?;
    print_json(&json!({
        "name": name,
        "path": path.display().to_string(),
        "documents": index.len(),
        "partitions": index.partitions().len(),
        "shards": index.shards().len(),
    }))?;
    Ok(0)
}

fn query(args: QueryArgs) -> Result<u8> {
    let index = args.index.load()?;
    let ast = parse_query(&args.query).map_err(|e| anyhow!("{e}"))?;
    let mut params = EvalParams::new(args.epsilon, args.context.as_deref());
    for (leaf, eps) in args.leaf_eps {
        params = params.with_leaf_epsilon(leaf, eps);
    }
    let result = evaluate_with(&index, &ast, &params)?;
    if args.ids {
        let mut out = io::stdout().lock();
        for id in &result.doc_ids {
            writeln!(out, "{id}")?;
        }
    } else {
        let mut value = serde_json::to_value(&result)?;
        value["query"] = json!(args.query);
        value["elementary"] = json!(ast.is_elementary());
        print_json(&value)?;
    }
    Ok(0)
}

fn repl(args: ReplArgs) -> Result<u8> {
    let index = args.index.load()?;
    let interactive = io::stdin().is_terminal();
    cogtop_core::retrieval::check_epsilon(args.epsilon)?;
    index.layout_for(args.context.as_deref())?;
    let mut session = Session::new(
        "repl".into(),
        args.index.index.clone(),
        args.epsilon,
        args.context,
    );
    let prompt = || {
        if interactive {
            eprint!("> ");
            let _ = io::stderr().flush();
        }
    };
    prompt();
    for line in io::stdin().lock().lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            prompt();
            continue;
        }
        if let Some(cmd) = line.strip_prefix(':') {
            let (name, arg) = cmd.split_once(' ').unwrap_or((cmd, ""));
            match name {
                "quit" | "q" => break,
                "eps" => match arg.trim().parse::<f64>() {
                    Ok(e) if e > 0.0 && e < 1.0 => session.epsilon = e,
                    _ => eprintln!("error: radius must lie strictly between 0 and 1"),
                },
                "history" => print_json(&serde_json::to_value(&session)?)?,
                _ => eprintln!("error: unknown command `:{name}` (try :eps, :history, :quit)"),
            }
            prompt();
            continue;
        }
        match session.refine(&index, line, None) {
            Ok(entry) => print_json(&serde_json::to_value(&entry)?)?,
            Err(e) => {
                let position = e
                    .body
                    .position
                    .map(|p| format!(" at byte {p}"))
                    .unwrap_or_default();
                eprintln!("error{position}: {}", e.body.message);
            }
        }
        prompt();
    }
    Ok(0)
}

fn stability(args: StabilityArgs) -> Result<u8> {
    let index = args.index.load()?;
    let q = parse_query(&args.query).map_err(|e| anyhow!("{e}"))?;
    let q2 = parse_query(&args.perturbed).map_err(|e| anyhow!("{e}"))?;
    let report = stable_retrieve(&index, &q, &q2, args.epsilon, args.context.as_deref())?;
    print_json(&serde_json::to_value(&report)?)?;
    Ok(exit_code(report.verdict))
}

fn read_queries(path: &Path) -> Result<Vec<cogtop_core::QueryAst>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_query(l).map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}

fn topology(args: TopologyArgs) -> Result<u8> {
    let index = args.index.load()?;
    let queries = read_queries(&args.queries)?;
    let family = enumerate_topology(&index, &queries, args.epsilon, args.context.as_deref())?;
    print_json(&serde_json::to_value(&family)?)?;
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Result<u8> {
    let report = verify::run(args.seed, args.cases);
    if args.json {
        print_json(&serde_json::to_value(&report)?)?;
    } else {
        println!("seed {}  cases {}", report.seed, report.cases);
        print!("{}", report.table());
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn serve(args: ServeArgs) -> Result<u8> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let sessions = args
        .sessions
        .unwrap_or_else(|| args.index_dir.join("sessions.json"));
    let config = ServiceConfig {
        lexicon: args.lexicon,
        index_dir: Some(args.index_dir),
        sessions_file: Some(sessions),
        ui_dir: args.ui_dir,
    };
    let state = Arc::new(AppState::load(config)?);
    let runtime = tokio::runtime::Runtime::new()?;
    let addr = SocketAddr::new(args.host, args.port);
    runtime.block_on(cogtop_service::serve(state, addr, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Query(a) => query(a),
        Command::Repl(a) => repl(a),
        Command::Stability(a) => stability(a),
        Command::Topology(a) => topology(a),
        Command::Verify(a) => run_verify(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|i| i.kind() == io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .is_some_and(|j| j.io_error_kind() == Some(io::ErrorKind::BrokenPipe))
    })
}
