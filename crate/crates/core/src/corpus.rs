//! The built-in sentence corpus: axioms, theorems and schema instances with
//! per-model expectations.
//!
//! Items are stored as sentence files. Besides `name` and `lang`, a block
//! may carry these headers:
//!
//! - `expect: cartesian2=Holds disk=Fails ...` (required, and must mention
//!   `cartesian2`)
//! - `ref:` where the statement comes from
//! - `dim:` dimension of the home model (default 2)
//! - `recipes:` borrow the sample and witness recipes of another item
//! - `schema:` the item is a schema; the header holds its template and the
//!   block has no sentence
//! - `instance:` name of a concrete instance of a schema
//! - `unsupported:` reason reported in models where the expectation is
//!   `Unsupported`

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::logic::{well_sorted, Formula, Lang};
use crate::models::{builtin_witnesses, CheckConfig, CheckError, CheckReport, ModelKind, Recipes, Status};
use crate::syntax::parse_blocks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expectation {
    Holds,
    Fails,
    Unsupported,
}

impl Expectation {
    pub fn parse(s: &str) -> Option<Expectation> {
        match s {
            "Holds" => Some(Expectation::Holds),
            "Fails" => Some(Expectation::Fails),
            "Unsupported" => Some(Expectation::Unsupported),
            _ => None,
        }
    }

    /// Whether a check outcome agrees with this expectation.
    pub fn matches(self, s: Status) -> bool {
        matches!(
            (self, s),
            (Expectation::Holds, Status::Pass)
                | (Expectation::Fails, Status::Fail)
                | (Expectation::Unsupported, Status::Unsupported)
        )
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemKind {
    Sentence(Formula),
    /// A schema: template text and the name of its instance item, if any.
    Schema { template: String, instance: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub name: String,
    pub lang: Lang,
    pub kind: ItemKind,
    /// Keyed by model label (`cartesian2`, `cartesian3`, `disk`, ...).
    pub expected: BTreeMap<String, Expectation>,
    /// Item whose recipes are used, when recipes exist.
    pub witness_ref: Option<String>,
    pub reference: String,
    pub unsupported: Option<String>,
    /// Source file of the item, for messages.
    pub file: &'static str,
}

impl CorpusItem {
    pub fn sentence(&self) -> Option<&Formula> {
        match &self.kind {
            ItemKind::Sentence(f) => Some(f),
            ItemKind::Schema { .. } => None,
        }
    }

    pub fn expected_in(&self, model: ModelKind) -> Option<Expectation> {
        self.expected.get(&model.label()).copied()
    }

    pub fn recipes(&self, model: ModelKind) -> Recipes {
        match &self.witness_ref {
            Some(r) => builtin_witnesses().recipes(r, model),
            None => Recipes::default(),
        }
    }

    /// Models named in the expectations, in label order.
    pub fn models(&self) -> Vec<ModelKind> {
        self.expected.keys().filter_map(|l| ModelKind::from_label(l)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("{file}: block without a name")]
    Unnamed { file: String },
    #[error("{file}: {name}: {msg}")]
    Item { file: String, name: String, msg: String },
}

const FILES: &[(&str, &str)] = &[
    ("axioms.geo", include_str!("../corpus/axioms.geo")),
    ("dimension.geo", include_str!("../corpus/dimension.geo")),
    ("angles.geo", include_str!("../corpus/angles.geo")),
    ("theorems.geo", include_str!("../corpus/theorems.geo")),
    ("tarski.geo", include_str!("../corpus/tarski.geo")),
    ("analytic.geo", include_str!("../corpus/analytic.geo")),
];

/// Parse corpus items from one sentence file. Blocks without a `name`
/// header are treated as file comments when they have no sentence text.
pub fn parse_items(file: &'static str, text: &str) -> Result<Vec<CorpusItem>, CorpusError> {
    let mut out = Vec::new();
    for block in parse_blocks(text, Lang::ED) {
        let name = match &block.name {
            Some(n) => n.clone(),
            None if block.text.trim().is_empty() => continue,
            None => return Err(CorpusError::Unnamed { file: file.into() }),
        };
        let bad = |msg: String| CorpusError::Item { file: file.into(), name: name.clone(), msg };
        let h = &block.headers;
        let dim = match h.get("dim") {
            Some(d) => d.parse::<usize>().map_err(|_| bad(format!("bad dim '{d}'")))?,
            None => 2,
        };
        let lang = block.lang.with_dim(dim);
        let mut expected = BTreeMap::new();
        for part in h.get("expect").map(|s| s.as_str()).unwrap_or("").split_whitespace() {
            let (m, e) = part.split_once('=').ok_or_else(|| bad(format!("bad expectation '{part}'")))?;
            if ModelKind::from_label(m).is_none() {
                return Err(bad(format!("unknown model '{m}'")));
            }
            let e = Expectation::parse(e).ok_or_else(|| bad(format!("unknown expectation '{e}'")))?;
            expected.insert(m.to_string(), e);
        }
        if !expected.contains_key("cartesian2") {
            return Err(bad("no expectation for cartesian2".into()));
        }
        let kind = match h.get("schema") {
            Some(t) => {
                if !block.text.trim().is_empty() {
                    return Err(bad("a schema has no sentence body".into()));
                }
                ItemKind::Schema { template: t.clone(), instance: h.get("instance").cloned() }
            }
            None => {
                let f = block.result.clone().map_err(|ds| {
                    bad(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))
                })?;
                let ds = well_sorted(&f, lang);
                if !ds.is_empty() {
                    return Err(bad(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")));
                }
                ItemKind::Sentence(f)
            }
        };
        let rname = h.get("recipes").cloned().unwrap_or_else(|| name.clone());
        let witness_ref = builtin_witnesses().has_item(&rname).then_some(rname);
        out.push(CorpusItem {
            name,
            lang,
            kind,
            expected,
            witness_ref,
            reference: h.get("ref").cloned().unwrap_or_default(),
            unsupported: h.get("unsupported").cloned(),
            file,
        });
    }
    Ok(out)
}

/// All built-in items, in file order.
pub fn load_corpus() -> &'static [CorpusItem] {
    static ITEMS: OnceLock<Vec<CorpusItem>> = OnceLock::new();
    ITEMS.get_or_init(|| {
        let mut all = Vec::new();
        for (file, text) in FILES {
            match parse_items(file, text) {
                Ok(items) => all.extend(items),
                Err(e) => panic!("built-in corpus: {e}"),
            }
        }
        all
    })
}

pub fn find(name: &str) -> Option<&'static CorpusItem> {
    load_corpus().iter().find(|i| i.name == name)
}

/// Check one item in `cfg.model`. Schemas, and items declared unsupported
/// in that model, give an Unsupported report without sampling.
pub fn check_item(item: &CorpusItem, cfg: &CheckConfig) -> Result<CheckReport, CheckError> {
    let f = match &item.kind {
        ItemKind::Schema { instance, .. } => {
            let mut why = "axiom schema: no single sentence to check".to_string();
            if let Some(i) = instance {
                why.push_str(&format!("; see the instance {i}"));
            }
            return Ok(CheckReport::unsupported(&item.name, cfg, why));
        }
        ItemKind::Sentence(f) => f,
    };
    if item.expected_in(cfg.model) == Some(Expectation::Unsupported) {
        if let Some(why) = &item.unsupported {
            return Ok(CheckReport::unsupported(&item.name, cfg, why.clone()));
        }
    }
    crate::models::check::check_or_unsupported(&item.name, f, cfg, &item.recipes(cfg.model))
}
