//! Recipe files: named sample and witness scripts per corpus item.
//!
//! A file is a sequence of sections, each headed `[item kind family]`
//! where kind is `sample` or `witness` and family is `cartesian2`,
//! `cartesian3`, ..., `cartesian` (any dimension), `disk` or `any`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use thiserror::Error;

use super::geom::ModelKind;
use super::script::{Script, ScriptError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RecipeKind {
    Sample,
    Witness,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecipeFileError {
    #[error("line {0}: malformed section header")]
    Header(usize),
    #[error("line {0}: script text before the first section")]
    Orphan(usize),
    #[error("duplicate section [{0}]")]
    Duplicate(String),
    #[error(transparent)]
    Script(#[from] ScriptError),
}

/// All recipes of a file, keyed by (item, kind, family).
#[derive(Debug, Clone, Default)]
pub struct ScriptSet {
    map: BTreeMap<(String, RecipeKind, String), Script>,
}

/// The sample and witness scripts selected for one item in one model.
#[derive(Debug, Clone, Default)]
pub struct Recipes {
    pub sample: Option<Script>,
    pub witness: Option<Script>,
}

impl ScriptSet {
    pub fn parse(text: &str) -> Result<ScriptSet, RecipeFileError> {
        let mut set = ScriptSet::default();
        let mut cur: Option<((String, RecipeKind, String), usize, String)> = None;
        let finish = |cur: Option<((String, RecipeKind, String), usize, String)>,
                          set: &mut ScriptSet|
         -> Result<(), RecipeFileError> {
            if let Some((key, line, body)) = cur {
                let s = Script::parse_at(&body, line)?;
                let label = format!("{} {:?} {}", key.0, key.1, key.2);
                if set.map.insert(key, s).is_some() {
                    return Err(RecipeFileError::Duplicate(label));
                }
            }
            Ok(())
        };
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let t = line.trim();
            if let Some(h) = t.strip_prefix('[') {
                let h = h.strip_suffix(']').ok_or(RecipeFileError::Header(ln))?;
                let parts: Vec<&str> = h.split_whitespace().collect();
                let kind = match parts.get(1) {
                    Some(&"sample") => RecipeKind::Sample,
                    Some(&"witness") => RecipeKind::Witness,
                    _ => return Err(RecipeFileError::Header(ln)),
                };
                if parts.len() != 3 {
                    return Err(RecipeFileError::Header(ln));
                }
                finish(cur.take(), &mut set)?;
                cur = Some(((parts[0].to_string(), kind, parts[2].to_string()), ln + 1, String::new()));
            } else if let Some((_, _, body)) = cur.as_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !t.is_empty() && !t.starts_with('#') {
                return Err(RecipeFileError::Orphan(ln));
            }
        }
        finish(cur, &mut set)?;
        Ok(set)
    }

    /// The most specific script for `item` in `model`: exact family first,
    /// then `cartesian` for any Cartesian model, then `any`.
    pub fn lookup(&self, item: &str, kind: RecipeKind, model: ModelKind) -> Option<&Script> {
        let mut fams = vec![model.label()];
        if let ModelKind::Cartesian(_) = model {
            fams.push("cartesian".into());
        }
        fams.push("any".into());
        fams.into_iter().find_map(|f| self.map.get(&(item.to_string(), kind, f)))
    }

    pub fn recipes(&self, item: &str, model: ModelKind) -> Recipes {
        Recipes {
            sample: self.lookup(item, RecipeKind::Sample, model).cloned(),
            witness: self.lookup(item, RecipeKind::Witness, model).cloned(),
        }
    }

    /// Items that have at least one witness script.
    pub fn witness_items(&self) -> Vec<&str> {
        let mut v: Vec<&str> =
            self.map.keys().filter(|k| k.1 == RecipeKind::Witness).map(|k| k.0.as_str()).collect();
        v.dedup();
        v
    }

    /// Whether any recipe is registered under `item`.
    pub fn has_item(&self, item: &str) -> bool {
        self.map.keys().any(|k| k.0 == item)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

const RECIPES: &str = include_str!("../../corpus/recipes.txt");

/// The recipes shipped with the corpus.
pub fn builtin_witnesses() -> &'static ScriptSet {
    static SET: OnceLock<ScriptSet> = OnceLock::new();
    SET.get_or_init(|| ScriptSet::parse(RECIPES).unwrap_or_else(|e| panic!("built-in recipe file: {e}")))
}
