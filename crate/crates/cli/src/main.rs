//! `geoform`: parse, expand, translate, check and reduce geometry sentences.
//!
//! Exit codes: 0 success, 1 a parse error or a result that does not match
//! its expectation, 2 an environment problem (unreadable file, bad
//! configuration, no solver).

mod config;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use geoform_core::corpus::{check_item, find, load_corpus, parse_items, CorpusItem};
use geoform_core::defs::{expand, ExpandOptions};
use geoform_core::logic::{well_sorted, Formula, Lang};
use geoform_core::models::{CheckConfig, ModelKind, Status};
use geoform_core::rcf::{coordinatize, emit_solver, solve_external, EmitMode, Verdict};
use geoform_core::syntax::{parse_blocks, print};
use geoform_core::xlate::{e2_to_ed, ed_to_e2_with, FrameMode};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "geoform", version, about = "Distance-based Euclidean geometry sentences: parse, expand, translate, check, reduce")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Sampling seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Samples per check
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Numeric tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Angle tolerance in degrees
    #[arg(long = "angle-tol", global = true)]
    angle_tol: Option<f64>,
    /// cartesian2, cartesianN (with --dim), cartesian3, ..., disk
    #[arg(long, global = true)]
    model: Option<String>,
    /// Dimension for `cartesian` and for coordinatization
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Solver command, e.g. "z3 -in"
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Solver time limit in seconds
    #[arg(long = "solver-timeout", global = true)]
    solver_timeout: Option<u64>,
    /// Machine-readable output
    #[arg(long, global = true)]
    json: bool,
    /// Write output here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Input {
    /// Sentence file (`-` for standard input)
    file: Option<PathBuf>,
    /// Use a built-in corpus item instead of a file
    #[arg(long, conflicts_with = "file")]
    item: Option<String>,
    /// Language when the file has no `# lang:` header
    #[arg(long)]
    lang: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    E2,
    Ed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Frame {
    Existential,
    Free,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, sort-check and print canonical text
    Parse(Input),
    /// Replace defined atoms by their bodies
    Expand {
        #[command(flatten)]
        input: Input,
        /// Expand to primitives instead of one level
        #[arg(long)]
        full: bool,
    },
    /// Translate between E2 and Ed
    Translate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long, value_enum, default_value = "existential")]
        frame: Frame,
    },
    /// Check corpus items (or the items of a file) in a model
    Check {
        /// Item names; `D1..D7` expands to a numbered range, `all` to every item
        names: Vec<String>,
        /// Sentence file with `# name:` and `# expect:` headers
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Coordinatize to real arithmetic and emit or solve
    Reduce {
        #[command(flatten)]
        input: Input,
        /// Print the solver text
        #[arg(long, conflicts_with = "solve")]
        emit: bool,
        /// Run the configured solver
        #[arg(long)]
        solve: bool,
        /// Ask for satisfiability instead of validity (with --emit)
        #[arg(long)]
        sat: bool,
    },
    /// Check every corpus item in every model it has an expectation for
    VerifyAxioms,
}

/// A failure carrying its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn user(msg: impl Into<String>) -> Fail {
        Fail { code: 1, msg: msg.into() }
    }
    fn env(msg: impl Into<String>) -> Fail {
        Fail { code: 2, msg: msg.into() }
    }
}

/// Output text plus the exit code to use after writing it.
struct Done {
    text: String,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let flags = Overrides {
        seed: g.seed,
        samples: g.samples,
        tol: g.tol,
        angle_tol: g.angle_tol,
        model: g.model.clone(),
        dim: g.dim,
        solver: g.solver.clone(),
        solver_timeout: g.solver_timeout,
    };
    let cwd = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
    let cfg = match config::resolve(&flags, &|k| std::env::var(k).ok(), &cwd) {
        Ok(c) => c,
        Err(e) => return report(Fail::env(e)),
    };
    let result = match &cli.cmd {
        Cmd::Parse(input) => cmd_parse(input),
        Cmd::Expand { input, full } => cmd_expand(input, *full),
        Cmd::Translate { input, to, frame } => cmd_translate(input, *to, *frame),
        Cmd::Check { names, file } => cmd_check(names, file.as_ref(), &cfg),
        Cmd::Reduce { input, emit, solve, sat } => cmd_reduce(input, *emit, *solve, *sat, &cfg, g.json),
        Cmd::VerifyAxioms => cmd_verify(&cfg, g.json),
    };
    match result {
        Ok(done) => {
            let written = match &g.out {
                Some(p) => std::fs::write(p, &done.text).map_err(|e| format!("{}: {e}", p.display())),
                None => std::io::stdout().write_all(done.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::from(done.code),
                Err(e) => report(Fail::env(e)),
            }
        }
        Err(f) => report(f),
    }
}

fn report(f: Fail) -> ExitCode {
    eprintln!("geoform: {}", f.msg);
    ExitCode::from(f.code)
}

fn ok(text: String) -> Result<Done, Fail> {
    Ok(Done { text, code: 0 })
}

/// A sentence to work on, with its display name and language.
struct Sentence {
    name: Option<String>,
    lang: Lang,
    formula: Formula,
}

fn read_source(path: &PathBuf) -> Result<String, Fail> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Fail::env(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Fail::env(format!("{}: {e}", path.display())))
}

fn load(input: &Input, default_lang: Lang) -> Result<Vec<Sentence>, Fail> {
    let default_lang = match &input.lang {
        Some(l) => Lang::from_name(l).ok_or_else(|| Fail::user(format!("unknown language '{l}' (e2, ed, eda)")))?,
        None => default_lang,
    };
    if let Some(name) = &input.item {
        let it = find(name).ok_or_else(|| Fail::user(format!("no corpus item named '{name}'")))?;
        let f = it.sentence().ok_or_else(|| Fail::user(format!("{name} is a schema")))?;
        return Ok(vec![Sentence { name: Some(name.clone()), lang: it.lang, formula: f.clone() }]);
    }
    let path = input.file.as_ref().ok_or_else(|| Fail::user("give a file or --item"))?;
    let text = read_source(path)?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for b in parse_blocks(&text, default_lang) {
        if b.text.trim().is_empty() {
            continue;
        }
        match b.result {
            Ok(f) => {
                let ds = well_sorted(&f, b.lang);
                if ds.is_empty() {
                    out.push(Sentence { name: b.name, lang: b.lang, formula: f });
                } else {
                    errors.extend(ds.iter().map(|d| format!("{}: {d}", path.display())));
                }
            }
            Err(ds) => errors.extend(ds.iter().map(|d| format!("{}:{d}", path.display()))),
        }
    }
    if !errors.is_empty() {
        return Err(Fail::user(errors.join("\n")));
    }
    if out.is_empty() {
        return Err(Fail::user(format!("{}: no sentence", path.display())));
    }
    Ok(out)
}

/// Print sentences in the input file format, so the output parses again.
fn render(items: &[(Option<String>, Lang, String)]) -> String {
    let single = items.len() == 1 && items[0].0.is_none();
    let mut s = String::new();
    for (i, (name, lang, text)) in items.iter().enumerate() {
        if i > 0 {
            s.push_str("---\n");
        }
        if !single {
            if let Some(n) = name {
                s.push_str(&format!("# name: {n}\n"));
            }
            s.push_str(&format!("# lang: {}\n", lang.name().to_ascii_lowercase()));
        }
        s.push_str(text);
        s.push('\n');
    }
    s
}

fn cmd_parse(input: &Input) -> Result<Done, Fail> {
    let ss = load(input, Lang::ED)?;
    ok(render(&ss.into_iter().map(|s| (s.name, s.lang, print(&s.formula))).collect::<Vec<_>>()))
}

fn cmd_expand(input: &Input, full: bool) -> Result<Done, Fail> {
    let opts = if full { ExpandOptions::full() } else { ExpandOptions::one() };
    let mut out = Vec::new();
    for s in load(input, Lang::ED)? {
        let g = expand(&s.formula, s.lang, opts).map_err(|e| Fail::user(e.to_string()))?;
        out.push((s.name, s.lang, print(&g)));
    }
    ok(render(&out))
}

fn cmd_translate(input: &Input, to: Target, frame: Frame) -> Result<Done, Fail> {
    let (from, lang) = match to {
        Target::Ed => (Lang::E2, Lang::ED),
        Target::E2 => (Lang::EDA, Lang::E2),
    };
    let mode = match frame {
        Frame::Existential => FrameMode::Existential,
        Frame::Free => FrameMode::Free,
    };
    let mut out = Vec::new();
    for s in load(input, from)? {
        let g = match to {
            Target::Ed => e2_to_ed(&s.formula),
            Target::E2 => ed_to_e2_with(&s.formula, mode).map(|(g, _)| g),
        }
        .map_err(|e| Fail::user(e.to_string()))?;
        out.push((s.name, lang.with_dim(s.lang.dim), print(&g)));
    }
    ok(render(&out))
}

/// `D1..D7` to `D1, ..., D7`; anything else is returned as is.
fn expand_range(arg: &str) -> Vec<String> {
    let split = |s: &str| -> Option<(String, u32)> {
        let i = s.find(|c: char| c.is_ascii_digit())?;
        Some((s[..i].to_string(), s[i..].parse().ok()?))
    };
    if let Some((a, b)) = arg.split_once("..") {
        if let (Some((pa, na)), Some((pb, nb))) = (split(a), split(b)) {
            if pa == pb && na <= nb {
                return (na..=nb).map(|n| format!("{pa}{n}")).collect();
            }
        }
    }
    vec![arg.to_string()]
}

fn check_config(cfg: &RunConfig, model: ModelKind) -> CheckConfig {
    CheckConfig { seed: cfg.seed, samples: cfg.samples, tol: cfg.tol, angle_tol: cfg.angle_tol, ..CheckConfig::new(model) }
}

/// One check as JSON, with its expectation and whether it matched. Items
/// without an expectation in the model are expected to hold.
fn run_one(item: &CorpusItem, model: ModelKind, cfg: &RunConfig) -> (Value, bool) {
    let expected = item.expected_in(model);
    match check_item(item, &check_config(cfg, model)) {
        Ok(r) => {
            let matched = match expected {
                Some(e) => e.matches(r.status),
                None => r.status == Status::Pass,
            };
            let mut v = serde_json::to_value(&r).expect("reports serialize");
            v["expected"] = json!(expected.map(|e| e.to_string()));
            v["match"] = json!(matched);
            (v, matched)
        }
        Err(e) => (
            json!({
                "name": item.name,
                "model": model.label(),
                "status": "Error",
                "error": e.to_string(),
                "expected": expected.map(|e| e.to_string()),
                "match": false,
            }),
            false,
        ),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn cmd_check(names: &[String], file: Option<&PathBuf>, cfg: &RunConfig) -> Result<Done, Fail> {
    let model = cfg.model.unwrap_or(ModelKind::Cartesian(2));
    let mut items: Vec<CorpusItem> = Vec::new();
    for arg in names {
        if arg == "all" {
            items.extend(load_corpus().iter().cloned());
            continue;
        }
        for n in expand_range(arg) {
            items.push(find(&n).ok_or_else(|| Fail::user(format!("no corpus item named '{n}'")))?.clone());
        }
    }
    if let Some(path) = file {
        let text = read_source(path)?;
        // Corpus items keep a static file label for their messages.
        let label: &'static str = Box::leak(path.display().to_string().into_boxed_str());
        items.extend(parse_items(label, &text).map_err(|e| Fail::user(e.to_string()))?);
    }
    if items.is_empty() {
        return Err(Fail::user("nothing to check: give item names or --file"));
    }
    let rows: Vec<(Value, bool)> = items.par_iter().map(|it| run_one(it, model, cfg)).collect();
    let all = rows.iter().all(|(_, m)| *m);
    let text = pretty(&Value::Array(rows.into_iter().map(|(v, _)| v).collect()));
    Ok(Done { text, code: if all { 0 } else { 1 } })
}

fn cmd_verify(cfg: &RunConfig, as_json: bool) -> Result<Done, Fail> {
    let jobs: Vec<(&CorpusItem, ModelKind)> = load_corpus()
        .iter()
        .flat_map(|it| it.models().into_iter().filter(|m| cfg.model.is_none_or(|c| c == *m)).map(move |m| (it, m)))
        .collect();
    let rows: Vec<(Value, bool)> = jobs.par_iter().map(|(it, m)| run_one(it, *m, cfg)).collect();
    let mismatches = rows.iter().filter(|(_, m)| !*m).count();
    let text = if as_json {
        let summary: Vec<Value> = rows
            .iter()
            .map(|(v, _)| {
                json!({
                    "name": v["name"],
                    "model": v["model"],
                    "status": v["status"],
                    "expected": v["expected"],
                    "match": v["match"],
                })
            })
            .collect();
        pretty(&json!({ "seed": cfg.seed, "samples": cfg.samples, "rows": summary, "mismatches": mismatches }))
    } else {
        let mut s = format!("{:<24} {:<12} {:<12} {:<12} {}\n", "item", "model", "status", "expected", "match");
        for (v, m) in &rows {
            let field = |k: &str| v[k].as_str().unwrap_or("-").to_string();
            s.push_str(&format!(
                "{:<24} {:<12} {:<12} {:<12} {}\n",
                field("name"),
                field("model"),
                field("status"),
                field("expected"),
                if *m { "yes" } else { "NO" }
            ));
        }
        s.push_str(&format!("{} checks, {mismatches} mismatches\n", rows.len()));
        s
    };
    Ok(Done { text, code: if mismatches == 0 { 0 } else { 1 } })
}

fn cmd_reduce(input: &Input, emit: bool, solve: bool, sat: bool, cfg: &RunConfig, as_json: bool) -> Result<Done, Fail> {
    if !emit && !solve {
        return Err(Fail::user("give --emit or --solve"));
    }
    let ss = load(input, Lang::EDA)?;
    if ss.len() != 1 {
        return Err(Fail::user(format!("reduce takes one sentence, found {}", ss.len())));
    }
    let c = coordinatize(&ss[0].formula, cfg.dim).map_err(|e| Fail::user(e.to_string()))?;
    let mode = if sat && emit { EmitMode::Satisfiability } else { EmitMode::Validity };
    let text = emit_solver(&c.formula, mode);
    if emit {
        return ok(text);
    }
    let Some(solver) = &cfg.solver else {
        return Err(Fail::env("SolverUnavailable: no solver configured (--solver, GEOFORM_SOLVER or geoform.conf)"));
    };
    let v = solve_external(&text, solver, cfg.solver_timeout).map_err(|e| Fail::user(e.to_string()))?;
    let (label, detail, code) = match &v {
        Verdict::Valid => ("Valid", None, 0),
        Verdict::Invalid(m) => ("Invalid", Some(m.clone()), 1),
        Verdict::Unknown => ("Unknown", None, 1),
        Verdict::SolverUnavailable(why) => return Err(Fail::env(format!("SolverUnavailable: {why}"))),
    };
    let out = if as_json {
        pretty(&json!({ "verdict": label, "model": detail }))
    } else {
        match detail {
            Some(m) => format!("{label}\n{m}\n"),
            None => format!("{label}\n"),
        }
    };
    Ok(Done { text: out, code })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_ranges() {
        assert_eq!(expand_range("D1..D3"), ["D1", "D2", "D3"]);
        assert_eq!(expand_range("T9..T11"), ["T9", "T10", "T11"]);
        assert_eq!(expand_range("D3..D1"), ["D3..D1"]);
        assert_eq!(expand_range("A1..T2"), ["A1..T2"]);
        assert_eq!(expand_range("pythagoras"), ["pythagoras"]);
    }
}
