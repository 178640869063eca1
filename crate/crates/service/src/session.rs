//! Refinement sessions: an ordered history of queries against one corpus.
//!
//! Each refinement is evaluated at the session radius. When both the new
//! query and the most recent earlier elementary query are elementary, the
//! entry also carries the stability report comparing the two; compound
//! refinements are marked `NotApplicable`.

use cogtop_core::{evaluate, parse_query, stable_retrieve, Index, QueryAst};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ApiError;

pub const NOT_APPLICABLE: &str = "NotApplicable";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub corpus_id: String,
    pub epsilon: f64,
    #[serde(rename = "context_id", default)]
    pub context: Option<String>,
    pub created_at: String,
    pub updated_at: String,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub query: String,
    pub elementary: bool,
    pub epsilon: f64,
    pub results: Value,
    /// Stability report against the previous elementary query.
    pub stability: Option<Value>,
    /// Verdict of `stability`, `NotApplicable` for compound queries, `null` otherwise.
    pub verdict: Option<String>,
    pub at: String,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Session {
    pub fn new(id: String, corpus_id: String, epsilon: f64, context: Option<String>) -> Self {
        let created_at = now();
        Self {
            id,
            corpus_id,
            epsilon,
            context,
            updated_at: created_at.clone(),
            created_at,
            history: Vec::new(),
        }
    }

    fn previous_elementary(&self) -> Option<&HistoryEntry> {
        self.history.iter().rev().find(|e| e.elementary)
    }

    /// Evaluates `query` and builds the next history entry without recording it.
    pub fn refinement(
        &self,
        index: &Index,
        query: &str,
        epsilon: Option<f64>,
    ) -> Result<HistoryEntry, ApiError> {
        let ast = parse_query(query)?;
        let eps = epsilon.unwrap_or(self.epsilon);
        let ctx = self.context.as_deref();
        let results = evaluate(index, &ast, eps, ctx)?;
        let elementary = ast.is_elementary();
        let (stability, verdict) = if !elementary {
            (None, Some(NOT_APPLICABLE.to_string()))
        } else if let Some(prev) = self.previous_elementary() {
            let prev_ast: QueryAst = parse_query(&prev.query)?;
            let report = stable_retrieve(index, &prev_ast, &ast, eps, ctx)?;
            let verdict = report.verdict.as_str().to_string();
            (Some(to_value(&report)?), Some(verdict))
        } else {
            (None, None)
        };
        Ok(HistoryEntry {
            step: self.history.len(),
            query: query.to_string(),
            elementary,
            epsilon: eps,
            results: to_value(&results)?,
            stability,
            verdict,
            at: now(),
        })
    }

    pub fn refine(
        &mut self,
        index: &Index,
        query: &str,
        epsilon: Option<f64>,
    ) -> Result<HistoryEntry, ApiError> {
        let entry = self.refinement(index, query, epsilon)?;
        self.record(entry.clone());
        Ok(entry)
    }

    /// Appends an entry built by [`Session::refinement`].
    pub fn record(&mut self, entry: HistoryEntry) {
        self.updated_at = entry.at.clone();
        self.history.push(entry);
    }
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Result<Value, ApiError> {
    serde_json::to_value(v).map_err(|e| ApiError::internal(e.to_string()))
}
