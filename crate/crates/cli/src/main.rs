use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use charspace::annotation::{
    apply_merge_map, build_registry, parse_bundle, parse_merge_map, AnnotationBundle, Registry,
};
use charspace::config::{NovelConfig, RunConfig};
use charspace::embed::{render_disk_svg, train, write_loss_trace, EmbedConfig};
use charspace::ingest::{segment_document, strip_boilerplate, Document, RawText};
use charspace::metrics::{compute_metrics, MetricsConfig};
use charspace::network::{read_graphml, write_adjacency_csv, write_graphml, NetworkKind};
use charspace::pipeline::{analyse, run_corpus, Resources, NETWORKS};
use charspace::report::{build_report, emit_report, render_network_svg, Table};
use charspace::stats::{evaluate, ScoreTable};
use charspace::tagger::{write_scores_csv, write_spans_jsonl};
use charspace_llm::{
    run_chapter_counts, ChapterText, ClientConfig, EndpointConfig, Granularity, HttpTransport, MockTransport, Transport,
};

/// Character representations, networks and corpus statistics for novels.
#[derive(Parser)]
#[command(name = "charspace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strip boilerplate and split a plain-text novel into chapters,
    /// paragraphs and sentences
    Ingest(IngestArgs),
    /// Build the character registry from an annotation bundle
    Registry(RegistryArgs),
    /// Score the six components per chapter and character
    Tag(TagArgs),
    /// Build one character network
    Graph(GraphArgs),
    /// Centrality and global measures of a GraphML network
    Metrics(MetricsArgs),
    /// Compare predicted scores with gold scores
    Eval(EvalArgs),
    /// Corpus-level network and component tables
    CorpusStats(CorpusArgs),
    /// Gender representation and edge-share tables
    Gender(CorpusArgs),
    /// Train a two-dimensional Poincaré embedding of a network
    Embed(EmbedArgs),
    /// Count components with a chat-completion model
    AnnotateLlm(LlmArgs),
    /// Run the full corpus pipeline and write every artifact
    Report(CorpusArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    text: PathBuf,
    #[arg(long)]
    id: String,
    #[arg(long)]
    title: Option<String>,
    /// Keep text before the first chapter heading
    #[arg(long)]
    keep_preamble: bool,
    /// Regular expression matching a whole chapter-heading line
    #[arg(long)]
    heading_pattern: Option<String>,
    /// Output document JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RegistryOpts {
    /// Annotation bundle directory
    #[arg(long)]
    bundle: PathBuf,
    /// Novel id used in outputs; defaults to the bundle directory name
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    merge_map: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_total: usize,
    #[arg(long, default_value_t = 1)]
    min_proper: usize,
    #[arg(long)]
    pronouns: Option<PathBuf>,
    #[arg(long)]
    supersenses: Option<PathBuf>,
}

#[derive(Args)]
struct RegistryArgs {
    #[command(flatten)]
    opts: RegistryOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NovelOpts {
    /// Document JSON written by `ingest`
    #[arg(long)]
    doc: PathBuf,
    #[command(flatten)]
    registry: RegistryOpts,
    #[arg(long)]
    appearance: Option<PathBuf>,
    #[arg(long)]
    verb_overrides: Option<PathBuf>,
    /// Largest paragraph gap between paired quotes in the dialogue network
    #[arg(long, default_value_t = 1)]
    dialogue_gap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TagArgs {
    #[command(flatten)]
    novel: NovelOpts,
    /// Output scores CSV
    #[arg(long)]
    out: PathBuf,
    /// Also write the tagged spans as JSON lines
    #[arg(long)]
    spans: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    novel: NovelOpts,
    /// cooccurrence, dialogue or discussion
    #[arg(long, value_parser = parse_network)]
    network: NetworkKind,
    /// Output GraphML
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    adjacency: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Write the per-component results as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    /// INI run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Output coordinates CSV
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    loss: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Characters labelled in the SVG
    #[arg(long, default_value_t = 10)]
    labels: usize,
}

#[derive(Args)]
struct LlmArgs {
    /// Document JSON written by `ingest`
    #[arg(long)]
    doc: PathBuf,
    /// Character names, one per line
    #[arg(long, conflicts_with = "registry")]
    characters: Option<PathBuf>,
    /// Registry JSON written by `registry`
    #[arg(long)]
    registry: Option<PathBuf>,
    /// `full` or a `+`-joined subset of chunked, per-character, per-tag
    #[arg(long, default_value = "full")]
    mode: String,
    /// Chat-completion URL; the API key is read from --api-key-env
    #[arg(long, conflicts_with = "mock")]
    endpoint: Option<String>,
    /// JSONL script for the offline mock transport
    #[arg(long)]
    mock: Option<PathBuf>,
    #[arg(long, default_value = "gpt-4o-mini")]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value = "CHARSPACE_LLM_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// Output predicted scores CSV
    #[arg(long)]
    out: PathBuf,
    /// Per-chapter and book telemetry JSON
    #[arg(long)]
    telemetry: Option<PathBuf>,
}

fn parse_network(s: &str) -> Result<NetworkKind, String> {
    NetworkKind::parse(s).ok_or_else(|| format!("unknown network `{s}`"))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?))
}

impl RegistryOpts {
    fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| {
            self.bundle
                .file_name()
                .map_or_else(|| "novel".to_string(), |n| n.to_string_lossy().into_owned())
        })
    }

    fn run_config(&self) -> RunConfig {
        RunConfig {
            min_total: self.min_total,
            min_proper: self.min_proper,
            pronouns: self.pronouns.clone(),
            supersenses: self.supersenses.clone(),
            ..RunConfig::default()
        }
    }

    fn novel(&self, doc: &Path) -> NovelConfig {
        let id = self.id();
        NovelConfig {
            title: id.clone(),
            id,
            text: doc.to_path_buf(),
            bundle: self.bundle.clone(),
            first_person: false,
            merge_map: self.merge_map.clone(),
            gold: None,
        }
    }

    fn load(&self, res: &Resources) -> Result<AnnotationBundle> {
        if !self.bundle.is_dir() {
            bail!("bundle directory {} does not exist", self.bundle.display());
        }
        Ok(parse_bundle(&self.bundle, &self.id(), &res.supersenses)?)
    }
}

impl NovelOpts {
    fn resources(&self) -> Result<Resources> {
        let cfg = RunConfig {
            appearance: self.appearance.clone(),
            verb_overrides: self.verb_overrides.clone(),
            dialogue_gap: self.dialogue_gap,
            seed: self.seed,
            embed: false,
            ..self.registry.run_config()
        };
        Ok(Resources::from_config(&cfg)?)
    }

    fn document(&self) -> Result<Document> {
        serde_json::from_reader(open(&self.doc)?).with_context(|| format!("{} is not a document JSON", self.doc.display()))
    }
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let cfg = RunConfig {
        keep_preamble: a.keep_preamble,
        heading_pattern: a.heading_pattern.clone(),
        ..RunConfig::default()
    };
    let res = Resources::from_config(&cfg)?;
    if !a.text.exists() {
        bail!("input text {} does not exist", a.text.display());
    }
    let raw = RawText::load(&a.text)?;
    let stripped = strip_boilerplate(&raw)?;
    let title = a.title.unwrap_or_else(|| a.id.clone());
    let doc = segment_document(&a.id, &title, &stripped.body, &res.segment)?;
    write_json(&a.out, &doc)?;
    eprintln!(
        "{}: {} chapters, {} paragraphs{}",
        a.id,
        doc.chapters.len(),
        doc.paragraphs().count(),
        if stripped.sentinels_missing { " (no boilerplate sentinels)" } else { "" }
    );
    Ok(())
}

fn cmd_registry(a: RegistryArgs) -> Result<()> {
    let cfg = a.opts.run_config();
    let res = Resources::from_config(&cfg)?;
    let bundle = a.opts.load(&res)?;
    let mut registry: Registry = build_registry(&bundle, &res.registry);
    if let Some(path) = &a.opts.merge_map {
        let entries = parse_merge_map(&read_file(path)?)?;
        registry = apply_merge_map(&registry, &entries, &bundle, &res.registry.pronouns)?;
    }
    write_json(&a.out, &registry)?;
    eprintln!("{} characters, {} clusters excluded", registry.len(), registry.excluded.len());
    Ok(())
}

fn cmd_tag(a: TagArgs) -> Result<()> {
    let res = a.novel.resources()?;
    let doc = a.novel.document()?;
    let bundle = a.novel.registry.load(&res)?;
    let novel = a.novel.registry.novel(&a.novel.doc);
    let (registry, book, _, _) = analyse(&novel, &doc, &bundle, &res)?;
    let mut w = create(&a.out)?;
    write_scores_csv(&mut w, &novel.id, &registry, &book)?;
    w.flush()?;
    if let Some(path) = &a.spans {
        let spans: Vec<_> = book.spans().cloned().collect();
        let mut w = create(path)?;
        write_spans_jsonl(&mut w, &spans)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_graph(a: GraphArgs) -> Result<()> {
    let res = a.novel.resources()?;
    let doc = a.novel.document()?;
    let bundle = a.novel.registry.load(&res)?;
    let novel = a.novel.registry.novel(&a.novel.doc);
    let (_, _, graphs, _) = analyse(&novel, &doc, &bundle, &res)?;
    let g = &graphs[NETWORKS.iter().position(|&k| k == a.network).expect("every kind is built")];
    let mut w = create(&a.out)?;
    write_graphml(&mut w, g)?;
    w.flush()?;
    if let Some(path) = &a.adjacency {
        let mut w = create(path)?;
        write_adjacency_csv(&mut w, g)?;
        w.flush()?;
    }
    if let Some(path) = &a.svg {
        let mut w = create(path)?;
        render_network_svg(g, 40, &mut w)?;
        w.flush()?;
    }
    eprintln!("{}: {} nodes, {} edges", a.network.as_str(), g.len(), g.edges.len());
    Ok(())
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let g = read_graphml(open(&a.graph)?)?;
    let cfg = MetricsConfig {
        seed: a.seed,
        ..MetricsConfig::default()
    };
    write_json(&a.out, &compute_metrics(&g, &cfg))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "---".to_string(), |v| format!("{v:.3}"))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let gold = ScoreTable::read_csv(open(&a.gold)?).with_context(|| a.gold.display().to_string())?;
    let pred = ScoreTable::read_csv(open(&a.pred)?).with_context(|| a.pred.display().to_string())?;
    let results = evaluate(&gold, &pred)?;
    let mut out = io::stdout().lock();
    writeln!(out, "component\tMAE\tbias\tpearson")?;
    for r in &results {
        writeln!(out, "{}\t{:.3}\t{}\t{}", r.component, r.mae, fmt_opt(r.bias), fmt_opt(r.pearson))?;
    }
    if let Some(path) = &a.out {
        write_json(path, &results)?;
    }
    Ok(())
}

fn print_table(out: &mut impl Write, t: &Table) -> io::Result<()> {
    writeln!(out, "{}", t.title)?;
    writeln!(out, "\t{}", t.columns.join("\t"))?;
    for r in &t.rows {
        let cells: Vec<&str> = r.cells.iter().map(|c| c.text.as_str()).collect();
        writeln!(out, "{}\t{}", r.label, cells.join("\t"))?;
    }
    for n in &t.notes {
        writeln!(out, "note: {n}")?;
    }
    writeln!(out)
}

fn load_config(a: &CorpusArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(out) = &a.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

/// Runs the corpus and writes and prints the tables whose ids pass `keep`.
fn corpus_tables(a: CorpusArgs, keep: fn(&str) -> bool) -> Result<()> {
    let mut cfg = load_config(&a)?;
    cfg.embed = false;
    let runs = run_corpus(&cfg)?;
    let report = build_report(&runs, cfg.top_k)?;
    let dir = cfg.out.join("report");
    let mut out = io::stdout().lock();
    for t in report.tables.iter().filter(|t| keep(&t.id)) {
        let path = dir.join(format!("{}.csv", t.id));
        let mut w = create(&path)?;
        t.write_csv(&mut w)?;
        w.flush()?;
        print_table(&mut out, t)?;
    }
    for n in &report.footer {
        writeln!(out, "{n}")?;
    }
    Ok(())
}

fn is_gender_table(id: &str) -> bool {
    id.starts_with("gender")
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let g = read_graphml(open(&a.graph)?)?;
    let cfg = EmbedConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: a.seed,
        ..EmbedConfig::default()
    };
    let r = train(&g, &cfg)?;
    let mut w = create(&a.out)?;
    r.embedding.write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = &a.loss {
        let mut w = create(path)?;
        write_loss_trace(&mut w, &r.loss_trace)?;
        w.flush()?;
    }
    if let Some(path) = &a.svg {
        let mut w = create(path)?;
        render_disk_svg(&r.embedding, &g, a.labels, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn character_names(a: &LlmArgs) -> Result<Vec<String>> {
    match (&a.characters, &a.registry) {
        (Some(path), _) => Ok(read_file(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()),
        (None, Some(path)) => {
            let r: Registry = serde_json::from_reader(open(path)?).with_context(|| format!("{} is not a registry JSON", path.display()))?;
            Ok(r.characters.into_iter().map(|c| c.canonical_name).collect())
        }
        (None, None) => unreachable!("checked by the caller"),
    }
}

fn cmd_annotate_llm(a: LlmArgs) -> Result<()> {
    let granularity = Granularity::parse(&a.mode)?;
    let doc: Document = serde_json::from_reader(open(&a.doc)?).with_context(|| format!("{} is not a document JSON", a.doc.display()))?;
    let characters = character_names(&a)?;
    if characters.is_empty() {
        bail!("no character names given");
    }
    let transport: Box<dyn Transport> = match (&a.endpoint, &a.mock) {
        (Some(url), None) => {
            let mut cfg = EndpointConfig::new(url, &a.model);
            cfg.temperature = a.temperature;
            cfg.api_key_env = a.api_key_env.clone();
            Box::new(HttpTransport::new(cfg)?)
        }
        (None, Some(path)) => Box::new(MockTransport::load(path)?),
        _ => unreachable!("checked by the caller"),
    };
    let chapters: Vec<ChapterText> = doc
        .chapters
        .iter()
        .map(|c| ChapterText {
            index: c.index,
            text: c.paragraphs.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join("\n\n"),
        })
        .collect();
    let cfg = ClientConfig {
        model: a.model.clone(),
        temperature: a.temperature,
        parallelism: a.parallelism,
    };
    let run = run_chapter_counts(&chapters, &characters, granularity, transport.as_ref(), &cfg)?;
    let mut w = create(&a.out)?;
    run.score_table(&doc.id).write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = &a.telemetry {
        let chapters: Vec<_> = run
            .costs
            .iter()
            .map(|(ch, c)| serde_json::json!({"chapter": ch, "cost": c, "telemetry": c.telemetry()}))
            .collect();
        write_json(
            path,
            &serde_json::json!({
                "granularity": granularity.to_string(),
                "book": run.book_telemetry(),
                "chapters": chapters,
                "skipped": run.skipped,
                "unknown_names": run.unknown_names.iter().map(|(k, v)| (k.to_string(), v)).collect::<std::collections::BTreeMap<_, _>>(),
            }),
        )?;
    }
    eprintln!("{} requests, {} chapters skipped", run.requests(), run.skipped.len());
    Ok(())
}

fn cmd_report(a: CorpusArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    let runs = run_corpus(&cfg)?;
    let (report, manifest) = emit_report(&cfg, &runs, &cfg.out)?;
    eprintln!(
        "{} novels ({} excluded), {} tables, {} artifacts under {}",
        report.included.len(),
        report.excluded.len(),
        report.tables.len(),
        manifest.artifacts.len(),
        cfg.out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Registry(a) => cmd_registry(a),
        Command::Tag(a) => cmd_tag(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Eval(a) => cmd_eval(a),
        Command::CorpusStats(a) => corpus_tables(a, |id| !is_gender_table(id)),
        Command::Gender(a) => corpus_tables(a, is_gender_table),
        Command::Embed(a) => cmd_embed(a),
        Command::AnnotateLlm(a) => cmd_annotate_llm(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Command::AnnotateLlm(a) = &cli.command {
        if a.endpoint.is_none() && a.mock.is_none() {
            eprintln!("error: annotate-llm needs --endpoint <URL> or --mock <SCRIPT>");
            return ExitCode::from(2);
        }
        if a.characters.is_none() && a.registry.is_none() {
            eprintln!("error: annotate-llm needs --characters <FILE> or --registry <FILE>");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
