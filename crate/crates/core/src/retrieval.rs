//! ε-ball retrieval and Boolean query evaluation.
//!
//! An elementary query retrieves every document within `cd < ε` of its
//! anchor. When some document coincides with the query the anchor is that
//! document's partition; otherwise the query's own canonical set stands in,
//! which yields the same ball whenever such a document exists. Compound
//! queries are evaluated structurally over the document space `DS`:
//!
//! | query      | retrieval                         |
//! |------------|-----------------------------------|
//! | `p AND q`  | `f(p) ∩ f(q)`                     |
//! | `p OR q`   | `f(p) ∪ f(q)`                     |
//! | `NOT p`    | `DS ∖ f(p)`                       |
//! | `p -> q`   | `(DS ∖ f(p)) ∪ f(q)`              |
//! | `p <-> q`  | `f(p -> q) ∩ f(q -> p)`           |

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::docset::DocSet;
use crate::index::{Index, IndexError};
use crate::lexicon::CanonicalWordSet;
use crate::metric::MetricError;
use crate::query::QueryAst;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("epsilon {0} must lie strictly between 0 and 1")]
    BadEpsilon(f64),
    #[error("expected an elementary query")]
    NotElementary,
    #[error("query has no words after tokenization")]
    EmptyQuery,
    #[error("query sequence is empty")]
    EmptySequence,
    #[error("{0} generators exceed the enumeration limit of {max}", max = MAX_GENERATORS)]
    TooManyGenerators(usize),
    #[error("topology enumeration too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

impl From<MetricError> for RetrievalError {
    fn from(e: MetricError) -> Self {
        RetrievalError::Index(IndexError::Metric(e))
    }
}

pub(crate) const MAX_GENERATORS: usize = 6;

/// Whether [`retrieve_anchor`] may skip shards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scan {
    #[default]
    Pruned,
    Full,
}

/// Documents retrieved for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalSet {
    #[serde(rename = "docs")]
    pub doc_ids: Vec<String>,
    #[serde(skip)]
    pub positions: DocSet,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<CanonicalWordSet>,
    /// Some document coincides with the query's canonical form.
    pub exact_match: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    /// `cd(anchor, d)` per retrieved document; elementary queries only.
    pub distances: BTreeMap<String, f64>,
}

impl RetrievalSet {
    fn compound(index: &Index, positions: DocSet, epsilon: f64, ctx: Option<&str>) -> Self {
        Self {
            doc_ids: index.ids(&positions),
            positions,
            epsilon,
            anchor: None,
            exact_match: false,
            context: ctx.map(str::to_string),
            distances: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<(), RetrievalError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(RetrievalError::BadEpsilon(epsilon))
    }
}

/// Canonical anchor of an elementary query under the index tokenizer.
pub fn anchor_of(
    index: &Index,
    query: &QueryAst,
    ctx: Option<&str>,
) -> Result<CanonicalWordSet, RetrievalError> {
    let words = query.words().ok_or(RetrievalError::NotElementary)?;
    let anchor = index.canonicalize_words(words, ctx)?;
    if anchor.is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    Ok(anchor)
}

/// `f(q) = {d ∈ DS : cd(anchor, d) < ε}`.
pub fn retrieve(
    index: &Index,
    query: &QueryAst,
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<RetrievalSet, RetrievalError> {
    check_epsilon(epsilon)?;
    let anchor = anchor_of(index, query, ctx)?;
    retrieve_anchor(index, &anchor, epsilon, ctx, Scan::Pruned)
}

/// ε-ball around an already canonical anchor.
pub fn retrieve_anchor(
    index: &Index,
    anchor: &CanonicalWordSet,
    epsilon: f64,
    ctx: Option<&str>,
    scan: Scan,
) -> Result<RetrievalSet, RetrievalError> {
    if anchor.is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    let layout = index.layout_for(ctx)?;
    let metric = index.metric(ctx)?;
    let candidates = match scan {
        Scan::Pruned => index.candidate_partitions(&layout, anchor, epsilon)?,
        Scan::Full => (0..layout.partitions().len()).collect(),
    };

    let mut hits = Vec::new();
    let mut distances = BTreeMap::new();
    for p in candidates {
        let part = &layout.partitions()[p];
        let d = metric.cd_extended(anchor, &part.words, layout.vocabulary());
        if d.value < epsilon {
            for doc in part.docs.iter() {
                hits.push(doc);
                distances.insert(index.document(doc).id.clone(), d.value);
            }
        }
    }
    let positions: DocSet = hits.into_iter().collect();
    let exact_match = layout
        .partitions()
        .binary_search_by(|p| p.words.class_ids.cmp(&anchor.class_ids))
        .is_ok();
    Ok(RetrievalSet {
        doc_ids: index.ids(&positions),
        positions,
        epsilon,
        anchor: Some(anchor.clone()),
        exact_match,
        context: ctx.map(str::to_string),
        distances,
    })
}

/// Radius settings for [`evaluate_with`].
#[derive(Debug, Clone, Default)]
pub struct EvalParams {
    pub epsilon: f64,
    /// Radius per elementary leaf, by left-to-right leaf position.
    pub leaf_epsilons: HashMap<usize, f64>,
    pub context: Option<String>,
}

impl EvalParams {
    pub fn new(epsilon: f64, context: Option<&str>) -> Self {
        Self {
            epsilon,
            leaf_epsilons: HashMap::new(),
            context: context.map(str::to_string),
        }
    }

    pub fn with_leaf_epsilon(mut self, leaf: usize, epsilon: f64) -> Self {
        self.leaf_epsilons.insert(leaf, epsilon);
        self
    }
}

pub fn evaluate(
    index: &Index,
    ast: &QueryAst,
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<RetrievalSet, RetrievalError> {
    evaluate_with(index, ast, &EvalParams::new(epsilon, ctx))
}

pub fn evaluate_with(
    index: &Index,
    ast: &QueryAst,
    params: &EvalParams,
) -> Result<RetrievalSet, RetrievalError> {
    check_epsilon(params.epsilon)?;
    for &e in params.leaf_epsilons.values() {
        check_epsilon(e)?;
    }
    let ctx = params.context.as_deref();
    if ast.is_elementary() {
        let eps = params
            .leaf_epsilons
            .get(&0)
            .copied()
            .unwrap_or(params.epsilon);
        return retrieve(index, ast, eps, ctx);
    }
    let mut leaf = 0;
    let docs = eval_node(index, ast, params, &mut leaf)?;
    Ok(RetrievalSet::compound(index, docs, params.epsilon, ctx))
}

fn eval_node(
    index: &Index,
    ast: &QueryAst,
    params: &EvalParams,
    leaf: &mut usize,
) -> Result<DocSet, RetrievalError> {
    let n = index.len();
    let ctx = params.context.as_deref();
    Ok(match ast {
        QueryAst::Elementary(_) => {
            let eps = params
                .leaf_epsilons
                .get(leaf)
                .copied()
                .unwrap_or(params.epsilon);
            *leaf += 1;
            retrieve(index, ast, eps, ctx)?.positions
        }
        QueryAst::And(l, r) => {
            let l = eval_node(index, l, params, leaf)?;
            l.intersection(&eval_node(index, r, params, leaf)?)
        }
        QueryAst::Or(l, r) => {
            let l = eval_node(index, l, params, leaf)?;
            l.union(&eval_node(index, r, params, leaf)?)
        }
        QueryAst::Not(c) => eval_node(index, c, params, leaf)?.complement(n),
        QueryAst::Implies(l, r) => {
            let l = eval_node(index, l, params, leaf)?;
            l.complement(n).union(&eval_node(index, r, params, leaf)?)
        }
        QueryAst::Iff(l, r) => {
            let l = eval_node(index, l, params, leaf)?;
            let r = eval_node(index, r, params, leaf)?;
            let forward = l.complement(n).union(&r);
            let backward = r.complement(n).union(&l);
            forward.intersection(&backward)
        }
    })
}
