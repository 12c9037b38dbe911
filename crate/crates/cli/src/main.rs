//! `qistring`: generate strings, check and search for reductions, export
//! catalog maps, and drive the tree-separation construction.
//!
//! Exit status is 0 on a pass or a found witness, 2 on a failed check or an
//! exhausted search, and 1 on usage, input or resource errors.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qistring::catalog::{catalog_entries, catalog_lookup, emit_csv};
use qistring::check::{
    c_from_ab, check_derived_invariants_with, check_window_with, parse_rational, read_map_csv, write_map_csv,
    CheckOptions, CheckReport, MapKind, ReductionMap,
};
use qistring::search::{min_c, search, witness_map, Outcome, SearchProblem, DEFAULT_NODE_BUDGET};
use qistring::separation::{
    compile_reduction, extract_branch, lead_of, tree_from_ref, verify_compiled, Branch, CompiledReduction,
    SeparationStrings, VerifyOptions, DEFAULT_SAMPLES,
};
use qistring::strings::{registry_get, InfiniteString, Reference};
use qistring::Error;

const SCHEMA: u64 = 1;

#[derive(Parser)]
#[command(
    name = "qistring",
    version,
    about = "Quasi-isometric reductions between infinite strings"
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ManyOne,
    OneOne,
    Permutation,
}

impl From<Mode> for MapKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::ManyOne => MapKind::ManyOne,
            Mode::OneOne => MapKind::OneOne,
            Mode::Permutation => MapKind::Permutation,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print letters `from..from+n-1` of a string.
    Gen {
        #[arg(long)]
        string: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        from: u64,
    },
    /// Check the defining conditions of a reduction on `[1..n]`.
    Check(CheckArgs),
    /// Check the derived invariants (collisions, crossovers, gaps,
    /// displacement) on `[1..n]`.
    Invariants(CheckArgs),
    /// Search for a C-reduction on the first n positions.
    Search {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        c: u64,
        #[arg(long)]
        n: u64,
        /// Target bound; defaults to n*c + c, or at least n + 2c^2 for permutations.
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, value_enum, default_value = "many-one")]
        mode: Mode,
        #[arg(long, env = "QISTRING_BUDGET", default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
        /// Write the witness as `x,fx` CSV.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Smallest C in 1..=c-max with a witness on n positions.
    MinC {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        c_max: u64,
        #[arg(long, value_enum, default_value = "many-one")]
        mode: Mode,
        #[arg(long, env = "QISTRING_BUDGET", default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// List or export catalog maps.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// The tree-separation construction.
    #[command(subcommand)]
    Sep(SepCommand),
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    target: String,
}

#[derive(Args)]
struct CheckArgs {
    /// A catalog reference (optionally prefixed `catalog:`), or a path to an
    /// `x,fx` CSV file.
    #[arg(long)]
    map: String,
    /// Source string, required for CSV maps.
    #[arg(long)]
    source: Option<String>,
    /// Target string, required for CSV maps.
    #[arg(long)]
    target: Option<String>,
    /// Constant C; defaults to the map's declared constant.
    #[arg(long, conflicts_with = "ab")]
    c: Option<u64>,
    /// Two-constant form `A,B` (rationals), converted to C.
    #[arg(long)]
    ab: Option<String>,
    /// Separate constant for the order condition.
    #[arg(long)]
    order_c: Option<u64>,
    #[arg(long)]
    n: u64,
    /// Defaults to the map's own kind, or many-one for CSV maps.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 100)]
    violation_limit: usize,
}

#[derive(Subcommand)]
enum CatalogCommand {
    List,
    /// Write `f(1..=window)` of a catalog map as `x,fx` CSV.
    Emit {
        name: String,
        #[arg(long)]
        window: u64,
    },
}

#[derive(Args)]
struct TreeArg {
    #[arg(long, default_value = "full")]
    tree: String,
}

#[derive(Subcommand)]
enum SepCommand {
    /// Stage layouts of theta and zeta.
    Build {
        #[command(flatten)]
        tree: TreeArg,
        #[arg(long, default_value_t = 3)]
        stages: u32,
    },
    /// Leads of the compiled reduction following a branch.
    Compile {
        #[command(flatten)]
        tree: TreeArg,
        #[arg(long)]
        branch: String,
        #[arg(long, default_value_t = 6)]
        stages: u32,
    },
    /// Read a branch off a reduction from theta to zeta.
    Extract {
        /// `compiled(...)` or `catalog:compiled(...)`, or an `x,fx` CSV file.
        #[arg(long)]
        map: String,
        /// Tree for CSV maps.
        #[command(flatten)]
        tree: TreeArg,
        #[arg(long)]
        c: u64,
        #[arg(long)]
        n0: u32,
        #[arg(long)]
        n1: u32,
    },
    /// Verify the compiled reduction through a stage.
    Verify {
        #[command(flatten)]
        tree: TreeArg,
        #[arg(long, default_value = "ones")]
        branch: String,
        #[arg(long)]
        stage: u32,
        #[arg(long)]
        sampled: bool,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// What a command produced: a JSON report, its one-line text form, and
/// whether the outcome was positive.
struct Rendered {
    report: Value,
    text: String,
    positive: bool,
}

fn string_ref(text: &str) -> Result<InfiniteString> {
    let r = Reference::parse(text)?;
    registry_get(&r).with_context(|| format!("resolving string `{text}`"))
}

fn read_table(path: &Path) -> Result<Vec<u64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_map_csv(BufReader::new(file))?)
}

/// A catalog reference, or a CSV table between the given strings.
fn resolve_map(spec: &str, source: Option<&str>, target: Option<&str>) -> Result<ReductionMap> {
    if let Some(r) = spec.strip_prefix("catalog:") {
        return Ok(catalog_lookup(r)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return catalog_lookup(spec)
            .with_context(|| format!("map `{spec}` is neither a catalog reference nor an existing CSV file"));
    }
    let (Some(s), Some(t)) = (source, target) else {
        bail!("CSV maps need --source and --target");
    };
    let table = read_table(path)?;
    Ok(ReductionMap::from_table(
        spec,
        string_ref(s)?,
        string_ref(t)?,
        table,
        1,
        MapKind::ManyOne,
    )?)
}

fn check_text(r: &CheckReport) -> String {
    let mut s = format!(
        "{} {}: {} on {}..{} (C={}, order C={}), {} violations, measured C={}",
        r.mode,
        r.map,
        if r.passed() { "pass" } else { "fail" },
        r.window.lo,
        r.window.hi,
        r.step_c,
        r.order_c,
        r.violation_count,
        r.stats.min_empirical_c
    );
    if let Some(v) = r.violations.first() {
        let w: Vec<String> = v.witness.iter().map(|p| p.to_string()).collect();
        s.push_str(&format!("; first: {:?} at [{}]", v.kind, w.join(",")));
    }
    s
}

fn run_check(args: &CheckArgs, invariants: bool) -> Result<Rendered> {
    let mut f = resolve_map(&args.map, args.source.as_deref(), args.target.as_deref())?;
    let c = match (&args.c, &args.ab) {
        (Some(c), _) => *c,
        (None, Some(ab)) => {
            let (a, b) = ab.split_once(',').context("--ab expects A,B")?;
            c_from_ab(&parse_rational(a)?, &parse_rational(b)?)?
        }
        (None, None) => f.declared_c(),
    };
    f = f.with_declared_c(c)?;
    if let Some(m) = args.mode {
        f = f.with_kind(m.into());
    }
    let opts = CheckOptions {
        step_c: Some(c),
        order_c: Some(args.order_c.unwrap_or(c)),
        violation_limit: args.violation_limit,
        ..CheckOptions::default()
    };
    // The invariants presuppose the window conditions, so a window failure
    // is reported as the negative outcome of `invariants` too.
    let window = check_window_with(&f, args.n, &opts)?;
    let report = if invariants && window.passed() {
        check_derived_invariants_with(&f, args.n, &opts)?
    } else {
        window
    };
    Ok(Rendered {
        text: check_text(&report),
        positive: report.passed(),
        report: serde_json::to_value(&report)?,
    })
}

fn write_csv_file(path: &Path, table: &[u64]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_map_csv(BufWriter::new(file), table)?;
    Ok(())
}

fn run_sep(cmd: &SepCommand) -> Result<Rendered> {
    let tree_of = |t: &TreeArg| -> Result<_> { Ok(tree_from_ref(&Reference::parse(&t.tree)?)?) };
    match cmd {
        SepCommand::Build { tree, stages } => {
            let strings = SeparationStrings::new(tree_of(tree)?);
            let layouts = strings.build_layouts(*stages)?;
            let last = layouts.last().expect("at least one stage");
            Ok(Rendered {
                text: format!(
                    "{} stages over `{}`: theta through stage {} has {} letters",
                    layouts.len(),
                    strings.tree_name(),
                    last.n,
                    &last.theta_offset + &last.theta_len
                ),
                report: json!({ "tree": strings.tree_name(), "stages": layouts.iter().map(|l| &**l).collect::<Vec<_>>() }),
                positive: true,
            })
        }
        SepCommand::Compile { tree, branch, stages } => {
            let f = compile_reduction(tree_of(tree)?, Branch::parse(branch)?)?;
            let compiled = f.structure::<CompiledReduction>().expect("compiled structure");
            let stage_list = (1..=*stages)
                .map(|n| compiled.stage(n))
                .collect::<qistring::Result<Vec<_>>>()?;
            let leads: Vec<String> = stage_list.iter().skip(1).map(|s| s.lead_out().to_string()).collect();
            Ok(Rendered {
                text: format!(
                    "{}: final-join leads for stages 2..={stages}: {}",
                    f.name(),
                    leads.join(" ")
                ),
                report: json!({
                    "map": f.name(),
                    "declared_c": f.declared_c(),
                    "stages": stage_list.iter().map(|s| &**s).collect::<Vec<_>>(),
                }),
                positive: true,
            })
        }
        SepCommand::Extract { map, tree, c, n0, n1 } => {
            let f = if Path::new(map).exists() {
                let strings = SeparationStrings::new(tree_of(tree)?);
                let table = read_table(Path::new(map))?;
                ReductionMap::from_table(
                    map.as_str(),
                    strings.theta(),
                    strings.zeta(),
                    table,
                    *c,
                    MapKind::ManyOne,
                )?
            } else {
                catalog_lookup(map)?
            };
            let leads = (*n0..=*n1)
                .map(|n| lead_of(&f, n, 4))
                .collect::<qistring::Result<Vec<_>>>();
            match extract_branch(&f, *c, *n0, *n1) {
                Ok(word) => {
                    let bits: String = word.iter().map(|b| char::from(b'0' + b)).collect();
                    Ok(Rendered {
                        text: format!("{}: branch prefix {bits}", f.name()),
                        report: json!({ "map": f.name(), "branch": bits, "leads": leads? }),
                        positive: true,
                    })
                }
                Err(
                    e
                    @ (Error::LeadUndefined { .. } | Error::LeadNotEncoding { .. } | Error::StabilityViolation { .. }),
                ) => Ok(Rendered {
                    text: format!("{}: no branch: {e}", f.name()),
                    report: json!({ "map": f.name(), "branch": null, "failure": e.to_string() }),
                    positive: false,
                }),
                Err(e) => Err(e.into()),
            }
        }
        SepCommand::Verify {
            tree,
            branch,
            stage,
            sampled,
            samples,
            seed,
        } => {
            let opts = VerifyOptions {
                sampled: *sampled,
                samples: *samples,
                seed: *seed,
            };
            let report = verify_compiled(tree_of(tree)?, Branch::parse(branch)?, *stage, &opts)?;
            Ok(Rendered {
                text: check_text(&report),
                positive: report.passed(),
                report: serde_json::to_value(&report)?,
            })
        }
    }
}

/// Runs a command; `Ok(None)` means it wrote its own output.
fn run(cli: &Cli) -> Result<Option<Rendered>> {
    Ok(Some(match &cli.command {
        Command::Gen { string, n, from } => {
            if *from < 1 {
                bail!("--from must be at least 1");
            }
            let s = string_ref(string)?;
            let word: String = (*from..from + n).map(|p| s.symbol_at(p).label()).collect();
            let mut out = output(cli)?;
            writeln!(out, "{word}")?;
            return Ok(None);
        }
        Command::Check(args) => run_check(args, false)?,
        Command::Invariants(args) => run_check(args, true)?,
        Command::Search {
            pair,
            c,
            n,
            m,
            mode,
            budget,
            witness_out,
        } => {
            let mut p = SearchProblem::new(
                string_ref(&pair.source)?,
                string_ref(&pair.target)?,
                *c,
                *n,
                (*mode).into(),
            )?
            .with_budget(*budget);
            if let Some(m) = m {
                p = p.with_target_len(*m)?;
            }
            let r = search(&p)?;
            if let (Some(path), Some(w)) = (witness_out, r.witness()) {
                write_csv_file(path, witness_map(&p, w.to_vec())?.table(*n)?.as_slice())?;
            }
            let found = matches!(r.outcome, Outcome::Found(_));
            let text = if found {
                format!("found a {} {c}-reduction on {n} positions ({} nodes)", p.mode, r.nodes)
            } else {
                format!(
                    "no {} {c}-reduction over window {n} (target bound {}, {} nodes)",
                    p.mode, p.m, r.nodes
                )
            };
            let mut report = serde_json::to_value(&r)?;
            report["source"] = json!(pair.source);
            report["target"] = json!(pair.target);
            report["c"] = json!(c);
            report["n"] = json!(n);
            report["m"] = json!(p.m);
            report["mode"] = json!(p.mode);
            Rendered {
                report,
                text,
                positive: found,
            }
        }
        Command::MinC {
            pair,
            n,
            c_max,
            mode,
            budget,
        } => {
            let kind: MapKind = (*mode).into();
            let found = min_c(
                &string_ref(&pair.source)?,
                &string_ref(&pair.target)?,
                *n,
                *c_max,
                kind,
                *budget,
            )?;
            let text = match &found {
                Some((c, _)) => format!("smallest C with a {kind} witness on {n} positions: {c}"),
                None => format!("no {kind} C-reduction for C <= {c_max} over window {n}"),
            };
            Rendered {
                report: json!({
                    "source": pair.source,
                    "target": pair.target,
                    "n": n,
                    "c_max": c_max,
                    "mode": kind,
                    "c": found.as_ref().map(|f| f.0),
                    "witness": found.as_ref().map(|f| &f.1),
                }),
                text,
                positive: found.is_some(),
            }
        }
        Command::Catalog(CatalogCommand::List) => {
            let entries = catalog_entries();
            Rendered {
                text: entries
                    .iter()
                    .map(|e| format!("{:<20} C={:<28} {}", e.name, e.constant, e.summary))
                    .collect::<Vec<_>>()
                    .join("\n"),
                report: json!({ "entries": entries }),
                positive: true,
            }
        }
        Command::Catalog(CatalogCommand::Emit { name, window }) => {
            let f = catalog_lookup(name)?;
            emit_csv(&f, *window, output(cli)?)?;
            return Ok(None);
        }
        Command::Sep(cmd) => run_sep(cmd)?,
    }))
}

fn output(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(cli: &Cli, o: &Rendered) -> Result<()> {
    let mut out = output(cli)?;
    match cli.format {
        Format::Json => {
            let mut report = o.report.clone();
            if let Value::Object(map) = &mut report {
                map.insert("schema".into(), json!(SCHEMA));
            }
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Text => writeln!(out, "{}", o.text)?,
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli).and_then(|o| {
        if let Some(o) = &o {
            emit(&cli, o)?;
        }
        Ok(o.map_or(true, |o| o.positive))
    }) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// A reader that stopped early, as in `qistring catalog list | head`.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || matches!(c.downcast_ref::<Error>(), Some(Error::Io(io)) if io.kind() == io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .is_some_and(|j| j.io_error_kind() == Some(io::ErrorKind::BrokenPipe))
    })
}
