//! Command-line frontend.
//!
//! Exit codes: `0` success, `1` domain error (violations, unknown ids, ticks
//! out of range, missing scenario), `2` I/O or syntax error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::fusion::{to_dot, ColoredGraph};
use crate::gen::{generate_streams, StreamKind, StreamModel};
use crate::model::{self, to_pretty, Document, ModelError, Scenario};
use crate::plan::{self, apply_to_graph, ImprovementAction, LevelSteps, PerAction};
use crate::reveal::{reveal, MinSize, RevealedStructure, StructureSpec};
use crate::stream::{self, tick_graph, TrackConfig, TrackLog};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_IO: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "cliquefuse", version, about = "Critical structure revelation over fused system graphs")]
pub struct Cli {
    /// Write the machine-readable report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Suppress the human-readable output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model document and list every violation.
    Validate { file: PathBuf },
    /// Reveal structures in one cluster's integrated graph.
    Reveal {
        file: PathBuf,
        #[arg(long)]
        cluster: String,
        /// Scenario tick whose states color the graph.
        #[arg(long, default_value_t = 0)]
        tick: usize,
        #[command(flatten)]
        detection: DetectionArgs,
        /// Write the graph in Graphviz format.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Replay the scenario and track structures with the k-of-m rule.
    Run {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        detection: DetectionArgs,
        /// Write one `tick_NNN.dot` per tick into this directory.
        #[arg(long, value_name = "DIR")]
        dot_dir: Option<PathBuf>,
    },
    /// Cheapest improvements destroying the structures revealed at a tick.
    Plan {
        file: PathBuf,
        #[arg(long)]
        tick: usize,
        #[command(flatten)]
        detection: DetectionArgs,
        #[arg(long, value_enum, default_value_t = CostKind::Steps)]
        cost: CostKind,
    },
    /// Generate synthetic state streams as a mergeable `states` block.
    Gen {
        file: PathBuf,
        #[arg(long = "model", value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ticks: usize,
        /// Level distribution, comma separated (initial distribution for
        /// `markov`). Defaults to uniform.
        #[arg(long)]
        dist: Option<String>,
        /// Markov transition rows, `;` separated, entries comma separated.
        #[arg(long)]
        transition: Option<String>,
    },
}

#[derive(Args, Debug, Default)]
struct DetectionArgs {
    #[arg(long)]
    threshold: Option<u8>,
    /// Integer or `cluster`.
    #[arg(long)]
    min_size: Option<String>,
    /// Also report structures of at least this size below `min_size`.
    #[arg(long)]
    sub_floor: Option<usize>,
    #[arg(long)]
    quasi_edges: Option<usize>,
    #[arg(long)]
    quasi_vertices: Option<usize>,
    #[arg(long)]
    secondary_threshold: Option<u8>,
    /// Report every qualifying set, not only maximal ones.
    #[arg(long)]
    all: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CostKind {
    /// One unit per level step.
    Steps,
    /// One unit per improved component.
    Action,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Constant,
    Iid,
    Markov,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn domain(message: impl ToString) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Syntax { .. } => Self::io(format!("{}: {e}", e.code())),
            _ => Self::domain(format!("{}: {e}", e.code())),
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::domain(e)
            }
        }
    )*};
}
domain_from!(
    crate::fusion::FusionError,
    crate::reveal::RevealError,
    crate::stream::StreamError,
    crate::plan::PlanError,
    crate::gen::GenError
);

/// Machine-readable report written by `--json`.
#[derive(Serialize)]
struct RunReport<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    input_digest: String,
    model: Value,
    payload: Value,
}

struct Input {
    doc: Document,
    digest: String,
}

fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let digest = format!("sha256:{}", hex::encode(Sha256::digest(&bytes)));
    let text = String::from_utf8(bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok((text, digest))
}

fn load(path: &Path) -> Result<Input, CliError> {
    let (text, digest) = read_input(path)?;
    Ok(Input {
        doc: model::parse_model(&text)?,
        digest,
    })
}

fn scenario(doc: &Document) -> Result<&Scenario, CliError> {
    doc.scenario
        .as_ref()
        .ok_or_else(|| CliError::domain("document has no scenario"))
}

impl DetectionArgs {
    fn spec(&self, doc: &Document) -> Result<StructureSpec, CliError> {
        let mut spec = doc.detection.clone().unwrap_or_default();
        if let Some(l) = self.threshold {
            spec.threshold = l;
        }
        if let Some(m) = &self.min_size {
            spec.min_size = match m.as_str() {
                "cluster" => MinSize::Cluster,
                n => MinSize::Fixed(
                    n.parse()
                        .map_err(|_| CliError::domain(format!("invalid --min-size `{n}`")))?,
                ),
            };
        }
        if let Some(f) = self.sub_floor {
            spec.sub_size_floor = Some(f);
        }
        if let Some(d) = self.quasi_edges {
            spec.max_missing_edges = d;
        }
        if let Some(d) = self.quasi_vertices {
            spec.max_offending_vertices = d;
        }
        if let Some(l2) = self.secondary_threshold {
            spec.secondary_threshold = Some(l2);
        }
        if self.all {
            spec.maximal_only = false;
        }
        spec.check(doc.model.scale.levels)?;
        Ok(spec)
    }
}

fn model_summary(doc: &Document) -> Value {
    json!({
        "components": doc.model.components.len(),
        "functions": doc.model.functions.len(),
        "clusters": doc.model.clusters.len(),
        "levels": doc.model.scale.levels,
        "ticks": doc.scenario.as_ref().map(|s| s.ticks),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write_report(path: &Path, command: &str, input: &Input, payload: Value) -> Result<(), CliError> {
    let report = RunReport {
        tool: "cliquefuse",
        version: env!("CARGO_PKG_VERSION"),
        command,
        input_digest: input.digest.clone(),
        model: model_summary(&input.doc),
        payload,
    };
    write_file(path, &to_pretty(&serde_json::to_value(report).expect("serializable")))
}

fn graph_summary(g: &ColoredGraph) -> Value {
    json!({
        "vertices": g.vertices(),
        "colors": g.colors(),
        "edges": g.edges().collect::<Vec<_>>(),
    })
}

fn fmt_list<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
    }
}

fn structure_line(s: &RevealedStructure) -> String {
    let missing: Vec<String> = s.missing_edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    format!(
        "{}  size={}  missing={}  offending={}",
        s.id,
        s.size(),
        fmt_list(&missing),
        fmt_list(&s.offending_vertices)
    )
}

fn action_text(actions: &[ImprovementAction]) -> String {
    if actions.is_empty() {
        return "(none)".into();
    }
    actions
        .iter()
        .map(|a| format!("{} {}->{}", a.component, a.from, a.to))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn cmd_validate(cli: &Cli, file: &Path, out: &mut String) -> Result<u8, CliError> {
    let (text, digest) = read_input(file)?;
    let doc = model::parse_document_unchecked(&text)?;
    let mut violations = model::validate(&doc.model, doc.scenario.as_ref());
    violations.extend(model::validate_config(&doc));
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    if violations.is_empty() {
        let _ = writeln!(out, "ok: {} components, {} functions, {} clusters",
            doc.model.components.len(), doc.model.functions.len(), doc.model.clusters.len());
    }
    if let Some(path) = &cli.json {
        let input = Input { doc, digest };
        write_report(path, "validate", &input, json!({ "violations": violations }))?;
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
}

fn cmd_reveal(
    cli: &Cli,
    file: &Path,
    cluster: &str,
    tick: usize,
    detection: &DetectionArgs,
    dot: Option<&Path>,
    out: &mut String,
) -> Result<u8, CliError> {
    let input = load(file)?;
    let doc = &input.doc;
    let spec = detection.spec(doc)?;
    let sc = scenario(doc)?;
    let states = sc
        .states_at(tick)
        .ok_or_else(|| CliError::domain(format!("tick {tick} out of range 0..{}", sc.ticks)))?;
    let graph = crate::fusion::integrated_graph(&doc.model, cluster, &states)?;
    let found = reveal(&graph, &spec)?;

    let _ = writeln!(
        out,
        "cluster {cluster} at tick {tick}: {} vertices, {} edges",
        graph.vertex_count(),
        graph.edge_count()
    );
    if found.is_empty() {
        let _ = writeln!(out, "no structures");
    }
    for s in &found {
        let _ = writeln!(out, "{}", structure_line(s));
    }
    if let Some(path) = dot {
        write_file(path, &to_dot(&graph, cluster))?;
    }
    if let Some(path) = &cli.json {
        let payload = json!({
            "cluster": cluster,
            "tick": tick,
            "spec": spec,
            "graph": graph_summary(&graph),
            "structures": found,
        });
        write_report(path, "reveal", &input, payload)?;
    }
    Ok(EXIT_OK)
}

fn render_log(log: &TrackLog, out: &mut String) {
    for r in &log.ticks {
        let cluster = r.cluster.as_ref().map_or("idle".to_string(), |c| c.to_string());
        let _ = writeln!(out, "t{}  {:<6} revealed: {}", r.tick, cluster, fmt_list(&r.revealed));
    }
    if log.tracks.is_empty() {
        let _ = writeln!(out, "no tracks");
        return;
    }
    let _ = writeln!(out, "tracks:");
    for t in log.tracks.values() {
        let initiated = t.initiated_at.map_or("-".to_string(), |t| format!("t{t}"));
        let _ = writeln!(
            out,
            "{}  hits={}  active={}  initiated={}",
            t.id,
            fmt_list(&t.hit_ticks()),
            fmt_list(&t.active_ticks),
            initiated
        );
    }
}

fn cmd_run(
    cli: &Cli,
    file: &Path,
    k: Option<usize>,
    m: Option<usize>,
    detection: &DetectionArgs,
    dot_dir: Option<&Path>,
    out: &mut String,
) -> Result<u8, CliError> {
    let input = load(file)?;
    let doc = &input.doc;
    let spec = detection.spec(doc)?;
    let sc = scenario(doc)?;
    let base = doc.track.unwrap_or_default();
    let cfg = TrackConfig::new(k.unwrap_or(base.k), m.unwrap_or(base.m))?;
    let log = stream::run(&doc.model, sc, &spec, cfg)?;
    render_log(&log, out);

    if let Some(dir) = dot_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        for t in 0..sc.ticks {
            let g = tick_graph(&doc.model, sc, t)?;
            write_file(&dir.join(format!("tick_{t:03}.dot")), &to_dot(&g, &format!("tick {t}")))?;
        }
    }
    if let Some(path) = &cli.json {
        let payload = json!({
            "k": cfg.k,
            "m": cfg.m,
            "spec": spec,
            "log": log,
        });
        write_report(path, "run", &input, payload)?;
    }
    Ok(EXIT_OK)
}

fn cmd_plan(
    cli: &Cli,
    file: &Path,
    tick: usize,
    detection: &DetectionArgs,
    cost: CostKind,
    out: &mut String,
) -> Result<u8, CliError> {
    let input = load(file)?;
    let doc = &input.doc;
    let spec = detection.spec(doc)?;
    let sc = scenario(doc)?;
    let graph = tick_graph(&doc.model, sc, tick)?;
    let targets = plan::destruction_targets(&graph, &spec)?;
    let chosen: crate::Plan = match cost {
        CostKind::Steps => plan::destruction_plan(&graph, &targets, &spec, &LevelSteps)?,
        CostKind::Action => plan::destruction_plan(&graph, &targets, &spec, &PerAction)?,
    };
    let remaining = reveal(&apply_to_graph(&graph, &chosen.actions)?, &spec)?;

    let cluster = sc.chain[tick].as_ref().map_or("idle".to_string(), |c| c.to_string());
    let _ = writeln!(out, "tick {tick} ({cluster}): {} target(s)", targets.len());
    for s in &targets {
        let _ = writeln!(out, "  {}", structure_line(s));
    }
    let _ = writeln!(out, "plan: {}  cost {}", action_text(&chosen.actions), chosen.cost);
    if chosen.alternatives.len() > 1 {
        let alts: Vec<String> = chosen.alternatives.iter().map(|a| action_text(a)).collect();
        let _ = writeln!(out, "alternatives: {}", alts.join(" | "));
    }
    let _ = writeln!(out, "post-plan structures: {}", remaining.len());

    if let Some(path) = &cli.json {
        let payload = json!({
            "tick": tick,
            "cluster": sc.chain[tick],
            "spec": spec,
            "targets": targets,
            "plan": chosen,
            "post_plan_structures": remaining.len(),
        });
        write_report(path, "plan", &input, payload)?;
    }
    Ok(if remaining.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
}

fn parse_row(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::domain(format!("invalid probability `{x}`")))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    cli: &Cli,
    file: &Path,
    kind: GenKind,
    seed: u64,
    ticks: usize,
    dist: Option<&str>,
    transition: Option<&str>,
    out: &mut String,
) -> Result<u8, CliError> {
    let input = load(file)?;
    let doc = &input.doc;
    let levels = usize::from(doc.model.scale.levels);
    let uniform = vec![1.0 / levels as f64; levels];
    let dist = dist.map(parse_row).transpose()?;
    let kind = match kind {
        GenKind::Constant => match (dist, doc.scenario.as_ref().and_then(|s| s.states_at(0))) {
            (None, Some(states)) => StreamKind::Fixed { levels: states.global },
            (d, _) => StreamKind::Constant {
                initial: d.unwrap_or(uniform),
            },
        },
        GenKind::Iid => StreamKind::Iid {
            distribution: dist.unwrap_or(uniform),
        },
        GenKind::Markov => StreamKind::Markov {
            transition: match transition {
                Some(t) => t.split(';').map(parse_row).collect::<Result<_, _>>()?,
                None => vec![uniform.clone(); levels],
            },
            initial: dist.unwrap_or(uniform),
        },
    };
    let streams = generate_streams(&doc.model, ticks, &StreamModel { kind, seed })?;
    let block = to_pretty(&json!({ "states": streams }));
    if let Some(path) = &cli.json {
        write_file(path, &block)?;
    }
    out.push_str(&block);
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli, out: &mut String) -> Result<u8, CliError> {
    match &cli.command {
        Command::Validate { file } => cmd_validate(cli, file, out),
        Command::Reveal {
            file,
            cluster,
            tick,
            detection,
            dot,
        } => cmd_reveal(cli, file, cluster, *tick, detection, dot.as_deref(), out),
        Command::Run {
            file,
            k,
            m,
            detection,
            dot_dir,
        } => cmd_run(cli, file, *k, *m, detection, dot_dir.as_deref(), out),
        Command::Plan {
            file,
            tick,
            detection,
            cost,
        } => cmd_plan(cli, file, *tick, detection, *cost, out),
        Command::Gen {
            file,
            kind,
            seed,
            ticks,
            dist,
            transition,
        } => cmd_gen(cli, file, *kind, *seed, *ticks, dist.as_deref(), transition.as_deref(), out),
    }
}

/// Runs the command line and returns the process exit code. Human output goes
/// to `stdout`; errors go to stderr.
pub fn main_with_args<I, T>(args: I, stdout: &mut impl Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let mut out = String::new();
    let code = match dispatch(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    let gen = matches!(cli.command, Command::Gen { .. });
    if !cli.quiet || (gen && cli.json.is_none()) {
        let _ = stdout.write_all(out.as_bytes());
    }
    code
}
