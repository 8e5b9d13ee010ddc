//! Randomized checking of sentences against a model.
//!
//! Universal variables are sampled (by a sample recipe when one exists,
//! otherwise by [`HintSampler`]); existential variables come from a
//! witness recipe. The matrix is then evaluated with tolerance.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::eval::{eval_qf, Assignment, AtomTrace, EvalCtx, EvalError};
use super::geom::ModelKind;
use super::sample::{HintSampler, SampleBox};
use super::script::{random_point, ScriptEnv, ScriptError, Val};
use super::witnesses::Recipes;
use crate::logic::{free_vars, prenex, split_prefix, Formula, Quant, Sort};

const CHUNK: usize = 250;
const MAX_FAILURES: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub model: ModelKind,
    pub tol: f64,
    pub angle_tol: f64,
    pub samples: usize,
    pub seed: u64,
    /// Coordinate half-width for Cartesian sampling.
    pub box_width: f64,
}

impl CheckConfig {
    pub fn new(model: ModelKind) -> CheckConfig {
        CheckConfig { model, tol: 1e-9, angle_tol: 1e-6, samples: 10_000, seed: 42, box_width: 10.0 }
    }

    pub fn ctx(&self) -> EvalCtx {
        EvalCtx { model: self.model, tol: self.tol, angle_tol: self.angle_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Unsupported,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Failure {
    pub bindings: serde_json::Value,
    #[serde(rename = "atomTrace")]
    pub atom_trace: Vec<AtomTrace>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub model: String,
    pub seed: u64,
    pub samples: usize,
    pub status: Status,
    pub failures: Vec<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Samples dropped because a constructed point left the model.
    #[serde(skip_serializing_if = "is_zero")]
    pub skipped: usize,
    /// Total failing samples, of which at most ten are listed.
    #[serde(rename = "failureCount")]
    pub failure_count: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl CheckReport {
    pub fn unsupported(name: &str, cfg: &CheckConfig, reason: impl Into<String>) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            model: cfg.model.label(),
            seed: cfg.seed,
            samples: 0,
            status: Status::Unsupported,
            failures: Vec::new(),
            reason: Some(reason.into()),
            skipped: 0,
            failure_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("{item}: no witness recipe for existential variable(s) {vars}")]
    WitnessScriptMissing { item: String, vars: String },
    #[error("{item}: witness for {var} depends on {on}, which is quantified later")]
    WitnessTooEarly { item: String, var: String, on: String },
    #[error("{item}: {err}")]
    Recipe { item: String, err: ScriptError },
    #[error("{item}: recipe produced the wrong sort for {var}")]
    RecipeSort { item: String, var: String },
    #[error("{item}: {err}")]
    Eval { item: String, err: EvalError },
}

impl CheckError {
    /// True for square roots of clearly negative values and similar.
    pub fn is_recipe_domain_error(&self) -> bool {
        matches!(self, CheckError::Recipe { err: ScriptError::Domain { .. }, .. })
    }
}

enum Outcome {
    Ok,
    Skipped,
    Failed(Failure),
}

/// Check `sentence` in `cfg.model`. Free variables count as universally
/// quantified.
pub fn check(name: &str, sentence: &Formula, cfg: &CheckConfig, recipes: &Recipes) -> Result<CheckReport, CheckError> {
    let mut closed = sentence.clone();
    for (v, s) in free_vars(sentence).into_iter().rev() {
        closed = Formula::ForAll(v, s, Box::new(closed));
    }
    let pf = prenex(&closed);
    let (prefix, matrix) = split_prefix(&pf);

    let exist: Vec<&(Quant, String, Sort)> = prefix.iter().filter(|(q, _, _)| *q == Quant::Ex).collect();
    let first_ex = prefix.iter().position(|(q, _, _)| *q == Quant::Ex);
    let alternating = first_ex.is_some_and(|i| prefix[i..].iter().any(|(q, _, _)| *q == Quant::All));
    if !exist.is_empty() {
        match &recipes.witness {
            None if alternating => {
                return Ok(CheckReport::unsupported(
                    name,
                    cfg,
                    "quantifier prefix has an existential before a universal and no witness recipe",
                ))
            }
            None => {
                let vars: Vec<&str> = exist.iter().map(|(_, v, _)| v.as_str()).collect();
                return Err(CheckError::WitnessScriptMissing { item: name.to_string(), vars: vars.join(",") });
            }
            Some(w) => {
                let deps = w.dependencies();
                let outs: BTreeSet<&str> = w.outputs().into_iter().collect();
                for (i, (q, v, _)) in prefix.iter().enumerate() {
                    if *q != Quant::Ex {
                        continue;
                    }
                    if !outs.contains(v.as_str()) {
                        return Err(CheckError::WitnessScriptMissing { item: name.to_string(), vars: v.clone() });
                    }
                    let later: BTreeSet<&str> = prefix[i..].iter().map(|(_, n, _)| n.as_str()).collect();
                    if let Some(bad) = deps[v].iter().find(|d| later.contains(d.as_str())) {
                        return Err(CheckError::WitnessTooEarly {
                            item: name.to_string(),
                            var: v.clone(),
                            on: bad.clone(),
                        });
                    }
                }
            }
        }
    }

    let universals: Vec<(String, Sort)> =
        prefix.iter().filter(|(q, _, _)| *q == Quant::All).map(|(_, v, s)| (v.clone(), *s)).collect();
    let existentials: Vec<(String, Sort)> = exist.iter().map(|(_, v, s)| (v.clone(), *s)).collect();
    let sampler = HintSampler::new(matrix);
    let bx = SampleBox::for_model(cfg.model, cfg.box_width);
    let cx = cfg.ctx();

    let chunks = cfg.samples.div_ceil(CHUNK);
    let results: Vec<Result<Vec<Outcome>, CheckError>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(ci as u64);
            let n = CHUNK.min(cfg.samples - ci * CHUNK);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(one_sample(name, matrix, &universals, &existentials, cfg, &cx, bx, recipes, &sampler, &mut rng)?);
            }
            Ok(out)
        })
        .collect();

    let mut report = CheckReport {
        name: name.to_string(),
        model: cfg.model.label(),
        seed: cfg.seed,
        samples: 0,
        status: Status::Pass,
        failures: Vec::new(),
        reason: None,
        skipped: 0,
        failure_count: 0,
    };
    for r in results {
        for o in r? {
            match o {
                Outcome::Skipped => report.skipped += 1,
                Outcome::Ok => report.samples += 1,
                Outcome::Failed(f) => {
                    report.samples += 1;
                    report.failure_count += 1;
                    if report.failures.len() < MAX_FAILURES {
                        report.failures.push(f);
                    }
                }
            }
        }
    }
    if report.failure_count > 0 {
        report.status = Status::Fail;
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn one_sample(
    name: &str,
    matrix: &Formula,
    universals: &[(String, Sort)],
    existentials: &[(String, Sort)],
    cfg: &CheckConfig,
    cx: &EvalCtx,
    bx: SampleBox,
    recipes: &Recipes,
    sampler: &HintSampler,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome, CheckError> {
    let rerr = |err| CheckError::Recipe { item: name.to_string(), err };
    let mut asg = Assignment::default();
    if let Some(s) = &recipes.sample {
        let mut env = ScriptEnv { model: cfg.model, tol: cfg.tol, bound: bx.points, rng: &mut *rng, vars: BTreeMap::new() };
        s.run(&mut env).map_err(rerr)?;
        let vars = env.vars;
        for (v, sort) in universals {
            match (vars.get(v), sort) {
                (Some(Val::Pt(p)), Sort::Point) => asg.set_point(v, p.clone()),
                (Some(Val::Num(x)), Sort::Number) => asg.set_number(v, *x),
                (None, _) => {}
                _ => return Err(CheckError::RecipeSort { item: name.to_string(), var: v.clone() }),
            }
        }
        for (v, sort) in universals {
            match sort {
                Sort::Point if !asg.points.contains_key(v) => asg.set_point(v, random_point(cfg.model, bx.points, rng)),
                Sort::Number if !asg.numbers.contains_key(v) => {
                    asg.set_number(v, rand::Rng::gen_range(&mut *rng, -bx.numbers..bx.numbers))
                }
                _ => {}
            }
        }
    } else {
        sampler.sample(universals, cfg.model, bx, rng, &mut asg);
    }
    if asg.points.values().any(|p| !cfg.model.valid_point(p)) {
        return Ok(Outcome::Skipped);
    }

    let mut witness_trace = Vec::new();
    if let Some(w) = recipes.witness.as_ref().filter(|_| !existentials.is_empty()) {
        let mut vars: BTreeMap<String, Val> = BTreeMap::new();
        for (k, p) in &asg.points {
            vars.insert(k.clone(), Val::Pt(p.clone()));
        }
        for (k, x) in &asg.numbers {
            vars.insert(k.clone(), Val::Num(*x));
        }
        let mut env = ScriptEnv { model: cfg.model, tol: cfg.tol, bound: bx.points, rng: &mut *rng, vars };
        w.run(&mut env).map_err(rerr)?;
        for (v, sort) in existentials {
            match (env.vars.get(v), sort) {
                (Some(Val::Pt(p)), Sort::Point) => {
                    if !cfg.model.valid_point(p) {
                        witness_trace.push(AtomTrace {
                            atom: format!("witness {v}"),
                            value: false,
                            detail: format!("{p:?} is not a point of the model"),
                        });
                    }
                    asg.set_point(v, p.clone());
                }
                (Some(Val::Num(x)), Sort::Number) => asg.set_number(v, *x),
                _ => return Err(CheckError::RecipeSort { item: name.to_string(), var: v.clone() }),
            }
        }
    }
    if !witness_trace.is_empty() {
        return Ok(Outcome::Failed(Failure { bindings: asg.to_json(), atom_trace: witness_trace }));
    }
    match eval_qf(matrix, &asg, cx) {
        Ok((true, _)) => Ok(Outcome::Ok),
        Ok((false, trace)) => Ok(Outcome::Failed(Failure { bindings: asg.to_json(), atom_trace: trace })),
        Err(err) => Err(CheckError::Eval { item: name.to_string(), err }),
    }
}

/// Like [`check`], but an atom without semantics in the model turns into
/// an Unsupported report instead of an error.
pub fn check_or_unsupported(
    name: &str,
    sentence: &Formula,
    cfg: &CheckConfig,
    recipes: &Recipes,
) -> Result<CheckReport, CheckError> {
    match check(name, sentence, cfg, recipes) {
        Err(CheckError::Eval { err: e @ EvalError::NoSemantics { .. }, .. }) => {
            Ok(CheckReport::unsupported(name, cfg, e.to_string()))
        }
        other => other,
    }
}
