use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use bellcanon::canonical::{
    facet_check, local_bound, local_lower_bound, Canonicalizer, DecompositionTree, Node,
    ReductionStep, DEFAULT_STRATEGY_CAP,
};
use bellcanon::compendium::{
    canonical_key, match_expression, InterchangeDocument, Metadata, Notation, Record, Store,
};
use bellcanon::expr::{
    format_rational, parse_rational, BellExpression, OrientedExpression, Rational,
};
use bellcanon::symmgroup::RelabelingGroup;
use bellcanon::{Error, Result, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bellcanon",
    version,
    about = "Canonical forms and a catalogue of Bell inequalities"
)]
struct Cli {
    /// Output style.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text, global = true)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Structured,
}

#[derive(Args, Clone)]
struct Input {
    /// Interchange document to read; `-` reads standard input.
    input: Option<PathBuf>,
    /// Scenario for coefficients given on the command line, e.g. "(2,2,2)".
    #[arg(long)]
    scenario: Option<String>,
    /// Coefficients separated by spaces or commas; integers or p/q.
    #[arg(long, allow_hyphen_values = true)]
    coefficients: Option<String>,
    /// Notation of command-line coefficients.
    #[arg(long, default_value = "probabilities")]
    notation: String,
    /// Upper bound `expression ≤ BOUND` for command-line input.
    #[arg(long, allow_hyphen_values = true)]
    bound: Option<String>,
    /// Bound set the command-line bound belongs to.
    #[arg(long, default_value = "local")]
    bound_set: String,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical form with witness and orbit rank.
    Canon(Input),
    /// Full decomposition tree.
    Decompose(Input),
    /// Rank of the expression in its sorted orbit.
    Rank(Input),
    /// Orbit element of the given rank.
    Unrank {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        rank: String,
    },
    /// Local bound from deterministic strategies.
    LocalBound {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_STRATEGY_CAP)]
        strategy_cap: u64,
    },
    /// Whether `expression ≤ bound` is a facet of the local polytope.
    FacetCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_STRATEGY_CAP)]
        strategy_cap: u64,
    },
    /// Decompose and look every factor up in the store.
    Match {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        db: PathBuf,
    },
    /// Canonicalize documents and add them to the store.
    Import {
        files: Vec<PathBuf>,
        #[arg(long)]
        db: PathBuf,
        /// Merge metadata into an existing record with the same key.
        #[arg(long)]
        merge: bool,
    },
    /// Print a stored record as a document.
    Export {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, default_value = "probabilities")]
        notation: String,
    },
    /// Store maintenance.
    Db {
        #[command(subcommand)]
        command: DbCommand,
    },
}

#[derive(Subcommand)]
enum DbCommand {
    /// Rebuild the index from the record files.
    RebuildIndex {
        #[arg(long)]
        db: PathBuf,
    },
}

fn read_text(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Format(format!("standard input: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

fn load(input: &Input) -> Result<OrientedExpression> {
    match (&input.input, &input.scenario) {
        (Some(path), None) => InterchangeDocument::parse(&read_text(path)?)?.oriented(),
        (None, Some(s)) => {
            let scenario: Scenario = s.parse()?;
            let coefficients = input
                .coefficients
                .as_deref()
                .ok_or_else(|| Error::Format("--coefficients is required with --scenario".into()))?
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()?;
            let notation: Notation = input.notation.parse()?;
            let doc = InterchangeDocument {
                scenario,
                notation,
                coefficients,
                bounds: BTreeMap::new(),
                metadata: Metadata::default(),
            };
            let mut oe = doc.oriented()?;
            if let Some(b) = &input.bound {
                oe = oe.with_bound(&input.bound_set, parse_rational(b)?);
            }
            Ok(oe)
        }
        (Some(_), Some(_)) => Err(Error::Format(
            "give either a document or --scenario, not both".into(),
        )),
        (None, None) => Err(Error::Format(
            "no input: give a document path or --scenario with --coefficients".into(),
        )),
    }
}

fn coeffs(e: &BellExpression) -> String {
    e.coefficients()
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(" ")
}

fn coeffs_json(e: &BellExpression) -> Value {
    json!(e
        .coefficients()
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>())
}

fn step_text(s: &ReductionStep) -> String {
    match s {
        ReductionStep::Reorder { map, .. } => format!(
            "reorder parties {:?}",
            map.parties.iter().map(|p| p + 1).collect::<Vec<_>>()
        ),
        ReductionStep::RemoveParty { party, .. } => format!("remove party {}", party + 1),
        ReductionStep::RemoveSetting { party, setting, .. } => {
            format!("remove setting {} of party {}", setting + 1, party + 1)
        }
        ReductionStep::MergeOutcomes {
            party,
            setting,
            kept,
            removed,
            ..
        } => format!(
            "merge outcome {} into {} for setting {} of party {}",
            removed + 1,
            kept + 1,
            setting + 1,
            party + 1
        ),
    }
}

fn bounds_text(oe: &OrientedExpression) -> String {
    oe.bounds
        .iter()
        .map(|(k, b)| format!("{k} <= {}", format_rational(&b.value)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn tree_text(t: &DecompositionTree, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    out.push_str(&format!(
        "{pad}{}: sign {} scale {} shift {}\n",
        t.scenario,
        if t.sign < 0 { "-" } else { "+" },
        format_rational(&t.scale),
        format_rational(&t.shift)
    ));
    for s in &t.removed.steps {
        out.push_str(&format!("{pad}  {}\n", step_text(s)));
    }
    match &t.node {
        Node::Leaf(l) => {
            let e = &l.canonical.expression;
            out.push_str(&format!("{pad}  leaf {}\n", e.scenario()));
            out.push_str(&format!("{pad}    canonical: {}\n", coeffs(e)));
            if !l.canonical.bounds.is_empty() {
                out.push_str(&format!("{pad}    bounds: {}\n", bounds_text(&l.canonical)));
            }
            out.push_str(&format!("{pad}    witness: {}\n", l.witness));
            out.push_str(&format!("{pad}    rank: {}\n", l.rank));
        }
        Node::Product(p) => {
            let blocks: Vec<String> = p
                .partition
                .iter()
                .map(|b| {
                    let v: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
                    format!("{{{}}}", v.join(","))
                })
                .collect();
            out.push_str(&format!(
                "{pad}  product kappa {} parties {}\n",
                format_rational(&p.kappa),
                blocks.join(" ")
            ));
            for c in &p.children {
                tree_text(c, depth + 2, out);
            }
        }
    }
}

fn tree_json(t: &DecompositionTree) -> Value {
    let node = match &t.node {
        Node::Leaf(l) => json!({
            "leaf": {
                "scenario": l.canonical.expression.scenario().to_string(),
                "canonical": coeffs_json(&l.canonical.expression),
                "bounds": l.canonical.bounds.iter()
                    .map(|(k, b)| (k.clone(), json!(format_rational(&b.value))))
                    .collect::<serde_json::Map<_, _>>(),
                "witness": l.witness.images().iter().map(|i| i + 1).collect::<Vec<_>>(),
                "rank": l.rank.to_string(),
                "key": canonical_key(&l.canonical.expression).ok(),
            }
        }),
        Node::Product(p) => json!({
            "product": {
                "kappa": format_rational(&p.kappa),
                "partition": p.partition.iter()
                    .map(|b| b.iter().map(|i| i + 1).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "children": p.children.iter().map(tree_json).collect::<Vec<_>>(),
            }
        }),
    };
    json!({
        "scenario": t.scenario.to_string(),
        "sign": t.sign,
        "scale": format_rational(&t.scale),
        "shift": format_rational(&t.shift),
        "removed": t.removed.steps.iter().map(step_text).collect::<Vec<_>>(),
        "node": node,
    })
}

fn emit(format: OutputFormat, text: String, value: Value) {
    match format {
        OutputFormat::Text => print!("{text}"),
        OutputFormat::Structured => println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("json values serialize")
        ),
    }
}

fn canonical_group(e: &BellExpression) -> Result<RelabelingGroup> {
    if !e.scenario().is_canonical() {
        return Err(Error::NonCanonicalScenario(format!(
            "{} (canonical order is {})",
            e.scenario(),
            e.scenario().canonical().0
        )));
    }
    RelabelingGroup::new(e.scenario())
}

fn run(cli: Cli) -> Result<()> {
    let c = Canonicalizer::new();
    let f = cli.format;
    match cli.command {
        Command::Canon(input) => {
            let oe = load(&input)?;
            let tree = c.decompose(&oe)?;
            let mut text = String::new();
            let leaves = tree.leaves();
            if leaves.len() > 1 {
                text.push_str(&format!(
                    "composite expression with {} factors\n",
                    leaves.len()
                ));
            }
            for l in &leaves {
                let e = &l.canonical.expression;
                text.push_str(&format!("scenario: {}\n", e.scenario()));
                text.push_str(&format!("canonical: {}\n", coeffs(e)));
                if !l.canonical.bounds.is_empty() {
                    text.push_str(&format!("bounds: {}\n", bounds_text(&l.canonical)));
                }
                text.push_str(&format!("witness: {}\n", l.witness));
                text.push_str(&format!("rank: {}\n", l.rank));
                text.push_str(&format!("key: {}\n", canonical_key(e)?));
            }
            emit(f, text, tree_json(&tree));
        }
        Command::Decompose(input) => {
            let tree = c.decompose(&load(&input)?)?;
            let mut text = String::new();
            tree_text(&tree, 0, &mut text);
            emit(f, text, tree_json(&tree));
        }
        Command::Rank(input) => {
            let e = load(&input)?.expression;
            let g = canonical_group(&e)?;
            let (min, _) = g.lex_min(&e)?;
            let rank = g.rank_in_orbit(&min, &e)?;
            let size = g.orbit_size(&e)?;
            emit(
                f,
                format!("rank: {rank}\norbit size: {size}\n"),
                json!({"rank": rank.to_string(), "orbit_size": size.to_string()}),
            );
        }
        Command::Unrank { input, rank } => {
            let e = load(&input)?.expression;
            let g = canonical_group(&e)?;
            let r: BigUint = rank.parse().map_err(|_| {
                Error::RankOutOfRange(format!("'{rank}' is not a positive integer"))
            })?;
            let (min, _) = g.lex_min(&e)?;
            let x = g.unrank(&min, &r)?;
            emit(
                f,
                format!("{}\n", coeffs(&x)),
                json!({"scenario": x.scenario().to_string(), "coefficients": coeffs_json(&x)}),
            );
        }
        Command::LocalBound {
            input,
            strategy_cap,
        } => {
            let e = load(&input)?.expression;
            let upper = local_bound(&e, strategy_cap)?;
            let lower = local_lower_bound(&e, strategy_cap)?;
            emit(
                f,
                format!(
                    "local bound: {}\nlocal minimum: {}\n",
                    format_rational(&upper),
                    format_rational(&lower)
                ),
                json!({"upper": format_rational(&upper), "lower": format_rational(&lower)}),
            );
        }
        Command::FacetCheck {
            input,
            strategy_cap,
        } => {
            let oe = load(&input)?;
            let beta: Rational = oe
                .bound("local")
                .cloned()
                .ok_or_else(|| Error::MissingBound("a local bound is required".into()))?;
            let facet = facet_check(&oe.expression, &beta, strategy_cap)?;
            emit(f, format!("facet: {facet}\n"), json!({ "facet": facet }));
        }
        Command::Match { input, db } => {
            let store = Store::open(&db)?;
            let report = match_expression(&c, &store, &load(&input)?)?;
            let mut text = String::new();
            let mut items = Vec::new();
            for l in &report.leaves {
                let names = l
                    .record
                    .as_ref()
                    .map(|r| r.metadata.names.join(", "))
                    .unwrap_or_default();
                let path: Vec<String> = l.path.iter().map(|i| (i + 1).to_string()).collect();
                text.push_str(&format!(
                    "factor {} {}: {} ({}) witness {} rank {}\n",
                    if path.is_empty() {
                        "root".to_string()
                    } else {
                        path.join(".")
                    },
                    l.canonical.scenario(),
                    if l.record.is_some() {
                        "known"
                    } else {
                        "unknown"
                    },
                    if names.is_empty() {
                        l.key.as_str()
                    } else {
                        names.as_str()
                    },
                    l.witness,
                    l.rank
                ));
                items.push(json!({
                    "path": l.path,
                    "scenario": l.canonical.scenario().to_string(),
                    "key": l.key,
                    "known": l.record.is_some(),
                    "names": l.record.as_ref().map(|r| r.metadata.names.clone()).unwrap_or_default(),
                    "witness": l.witness.images().iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "rank": l.rank.to_string(),
                }));
            }
            emit(
                f,
                text,
                json!({ "leaves": items, "tree": tree_json(&report.tree) }),
            );
        }
        Command::Import { files, db, merge } => {
            if files.is_empty() {
                return Err(Error::Format("no documents given".into()));
            }
            let mut store = Store::open(&db)?;
            let mut text = String::new();
            let mut items = Vec::new();
            for path in &files {
                let doc = InterchangeDocument::parse(&read_text(path)?)?;
                let provenance = doc
                    .bounds
                    .iter()
                    .filter_map(|(k, b)| b.provenance.clone().map(|p| (k.clone(), p)))
                    .collect();
                let rec =
                    Record::canonicalize(&c, &doc.oriented()?, provenance, doc.metadata.clone())?;
                let outcome = store.store(&c, &rec, merge)?;
                text.push_str(&format!("{} {:?} {}\n", rec.key, outcome, path.display()));
                items.push(json!({
                    "file": path.display().to_string(),
                    "key": rec.key,
                    "outcome": format!("{outcome:?}"),
                }));
            }
            emit(f, text, json!(items));
        }
        Command::Export { db, key, notation } => {
            let store = Store::open(&db)?;
            let rec = store
                .lookup(&key)?
                .ok_or_else(|| Error::Store(format!("no record with key {key}")))?;
            let text = rec.to_document(notation.parse()?).to_text();
            emit(f, text.clone(), json!({ "key": key, "document": text }));
        }
        Command::Db {
            command: DbCommand::RebuildIndex { db },
        } => {
            let mut store = Store::open(&db)?;
            let n = store.rebuild_index()?;
            emit(f, format!("indexed {n} records\n"), json!({ "records": n }));
        }
    }
    Ok(())
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
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
