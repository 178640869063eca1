use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::Router;
use cogtop_core::index::read_corpus;
use cogtop_core::retrieval::check_epsilon;
use cogtop_core::{
    enumerate_topology, evaluate_with, parse_query, perturb, stable_retrieve, CanonicalWordSet,
    ClassId, Edit, EvalParams, Index, IndexConfig, Lexicon, LexiconFile, RetrievalSet,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::error::ApiError;
use crate::session::{to_value, Session};
use crate::{index_path, AppState};

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub(crate) fn api() -> Router<Arc<AppState>> {
    Router::new()
        .route("/health", get(health))
        .route("/corpora", get(list_corpora).post(create_corpus))
        .route("/corpora/{id}/partitions", get(partitions))
        .route("/corpora/{id}/topology", get(topology))
        .route("/query", post(query))
        .route("/stability", post(stability))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/refine", post(refine))
}

/// `Json` extractor whose rejections use the service error shape.
struct Body<T>(T);

impl<S, T> FromRequest<S> for Body<T>
where
    axum::Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, ApiError> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Body(v)),
            Err(rej) => Err(ApiError::new(rej.status(), "BadRequest", rej.body_text())),
        }
    }
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn corpus(state: &AppState, id: &str) -> ApiResult<Arc<Index>> {
    state
        .corpus(id)
        .ok_or_else(|| ApiError::not_found("corpus", id))
}

async fn health() -> axum::Json<Value> {
    axum::Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Serialize)]
struct CorpusSummary {
    corpus_id: String,
    documents: usize,
    partitions: usize,
    shards: usize,
    contexts: Vec<String>,
}

fn summary(id: &str, index: &Index) -> CorpusSummary {
    CorpusSummary {
        corpus_id: id.to_string(),
        documents: index.len(),
        partitions: index.partitions().len(),
        shards: index.shards().len(),
        contexts: index.lexicon().context_ids().map(str::to_string).collect(),
    }
}

async fn list_corpora(State(state): Shared) -> axum::Json<Vec<CorpusSummary>> {
    let corpora = state.corpora.read().expect("corpora lock");
    axum::Json(corpora.iter().map(|(id, ix)| summary(id, ix)).collect())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LexiconRef {
    Inline(LexiconFile),
    Path(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateCorpus {
    corpus_id: Option<String>,
    /// JSONL text, one `{id, text, meta?}` record per line.
    corpus: Option<String>,
    /// Server-side path of a JSONL corpus file.
    path: Option<String>,
    lexicon: Option<LexiconRef>,
    #[serde(default)]
    config: IndexConfig,
}

fn resolve_lexicon(state: &AppState, r: Option<LexiconRef>) -> ApiResult<Arc<Lexicon>> {
    match r {
        Some(LexiconRef::Inline(file)) => Ok(Arc::new(Lexicon::from_file(file)?)),
        Some(LexiconRef::Path(path)) => {
            let file = File::open(&path)
                .map_err(|e| ApiError::bad_request("InvalidLexicon", format!("{path}: {e}")))?;
            Ok(Arc::new(Lexicon::load(BufReader::new(file))?))
        }
        None => state.default_lexicon.clone().ok_or_else(|| {
            ApiError::bad_request("InvalidLexicon", "no lexicon given and no server default")
        }),
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

async fn create_corpus(
    State(state): Shared,
    Body(req): Body<CreateCorpus>,
) -> ApiResult<impl IntoResponse> {
    let id = req
        .corpus_id
        .clone()
        .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    if !valid_id(&id) {
        return Err(ApiError::bad_request(
            "InvalidId",
            "corpus ids use ASCII letters, digits, `-`, `_` and `.`",
        ));
    }
    if state.corpus(&id).is_some() {
        return Err(ApiError::conflict(format!("corpus `{id}` already exists")));
    }
    let records = match (&req.corpus, &req.path) {
        (Some(text), None) => read_corpus(text.as_bytes())?,
        (None, Some(path)) => {
            let file = File::open(path)
                .map_err(|e| ApiError::bad_request("InvalidCorpus", format!("{path}: {e}")))?;
            read_corpus(BufReader::new(file))?
        }
        _ => {
            return Err(ApiError::bad_request(
                "InvalidCorpus",
                "give exactly one of `corpus` and `path`",
            ))
        }
    };
    let lexicon = resolve_lexicon(&state, req.lexicon)?;
    let config = req.config;
    let index = blocking(move || Ok(Index::ingest(records, lexicon, config)?)).await?;
    if let Some(dir) = &state.config.index_dir {
        std::fs::create_dir_all(dir).map_err(|e| ApiError::internal(e.to_string()))?;
        let file =
            File::create(index_path(dir, &id)).map_err(|e| ApiError::internal(e.to_string()))?;
        index.write_snapshot(std::io::BufWriter::new(file))?;
    }
    let body = summary(&id, &index);
    {
        let mut corpora = state.corpora.write().expect("corpora lock");
        if corpora.contains_key(&id) {
            return Err(ApiError::conflict(format!("corpus `{id}` already exists")));
        }
        corpora.insert(id, Arc::new(index));
    }
    Ok((StatusCode::CREATED, axum::Json(body)))
}

#[derive(Deserialize, Default)]
struct ContextParam {
    context: Option<String>,
}

fn labels(index: &Index, set: &CanonicalWordSet) -> Vec<String> {
    set.iter()
        .map(|c| match c {
            ClassId::Known(id) => index
                .lexicon()
                .class_members(*id)
                .first()
                .cloned()
                .unwrap_or_else(|| c.to_string()),
            ClassId::Unknown(w) => w.clone(),
        })
        .collect()
}

async fn partitions(
    State(state): Shared,
    Path(id): Path<String>,
    Query(p): Query<ContextParam>,
) -> ApiResult<axum::Json<Value>> {
    let index = corpus(&state, &id)?;
    let layout = index.layout_for(p.context.as_deref())?;
    let parts: Vec<Value> = layout
        .partitions()
        .iter()
        .map(|part| {
            json!({
                "id": part.id,
                "words": labels(&index, &part.words),
                "docs": index.ids(&part.docs),
            })
        })
        .collect();
    let shards: Vec<Value> = layout
        .shards()
        .iter()
        .map(|s| {
            json!({
                "shard_id": s.shard_id,
                "representative": layout.partitions()[s.representative].id,
                "partitions": s.partitions.iter().map(|&i| &layout.partitions()[i].id).collect::<Vec<_>>(),
                "centroid": labels(&index, &s.centroid),
                "radius": s.radius,
            })
        })
        .collect();
    Ok(axum::Json(json!({
        "corpus_id": id,
        "context": p.context,
        "documents": index.len(),
        "partitions": parts,
        "shards": shards,
    })))
}

#[derive(Deserialize)]
struct TopologyParams {
    /// Queries separated by `;`.
    queries: String,
    epsilon: f64,
    context: Option<String>,
}

async fn topology(
    State(state): Shared,
    Path(id): Path<String>,
    Query(p): Query<TopologyParams>,
) -> ApiResult<axum::Json<Value>> {
    let index = corpus(&state, &id)?;
    let mut qs = Vec::new();
    let mut offset = 0;
    for part in p.queries.split(';') {
        if !part.trim().is_empty() {
            qs.push(parse_query(part).map_err(|mut e| {
                e.position += offset;
                e
            })?);
        }
        offset += part.len() + 1;
    }
    check_epsilon(p.epsilon)?;
    let family = blocking(move || {
        Ok(enumerate_topology(
            &index,
            &qs,
            p.epsilon,
            p.context.as_deref(),
        )?)
    })
    .await?;
    Ok(axum::Json(to_value(&family)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    corpus_id: String,
    query: String,
    epsilon: f64,
    context: Option<String>,
    /// Radius per elementary leaf, keyed by left-to-right leaf position.
    #[serde(default)]
    leaf_epsilons: HashMap<usize, f64>,
}

#[derive(Serialize)]
struct QueryResponse {
    query: String,
    elementary: bool,
    #[serde(flatten)]
    result: RetrievalSet,
}

async fn query(
    State(state): Shared,
    Body(req): Body<QueryRequest>,
) -> ApiResult<axum::Json<Value>> {
    let ast = parse_query(&req.query)?;
    let index = corpus(&state, &req.corpus_id)?;
    let mut params = EvalParams::new(req.epsilon, req.context.as_deref());
    for (leaf, eps) in req.leaf_epsilons {
        params = params.with_leaf_epsilon(leaf, eps);
    }
    let elementary = ast.is_elementary();
    let result = blocking(move || Ok(evaluate_with(&index, &ast, &params)?)).await?;
    Ok(axum::Json(to_value(&QueryResponse {
        query: req.query,
        elementary,
        result,
    })?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilityRequest {
    corpus_id: String,
    query: String,
    /// The perturbed query; alternatively give `delta`.
    perturbed: Option<String>,
    delta: Option<Vec<Edit>>,
    epsilon: f64,
    context: Option<String>,
}

async fn stability(
    State(state): Shared,
    Body(req): Body<StabilityRequest>,
) -> ApiResult<axum::Json<Value>> {
    let q = parse_query(&req.query)?;
    let q2 = match (req.perturbed, req.delta) {
        (Some(text), None) => parse_query(&text)?,
        (None, Some(delta)) => perturb(&q, &delta)?.result,
        _ => {
            return Err(ApiError::bad_request(
                "InvalidRequest",
                "give exactly one of `perturbed` and `delta`",
            ))
        }
    };
    let index = corpus(&state, &req.corpus_id)?;
    let report = blocking(move || {
        Ok(stable_retrieve(
            &index,
            &q,
            &q2,
            req.epsilon,
            req.context.as_deref(),
        )?)
    })
    .await?;
    Ok(axum::Json(to_value(&report)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    corpus_id: String,
    epsilon: f64,
    context: Option<String>,
}

async fn create_session(
    State(state): Shared,
    Body(req): Body<CreateSession>,
) -> ApiResult<impl IntoResponse> {
    check_epsilon(req.epsilon)?;
    let index = corpus(&state, &req.corpus_id)?;
    index.layout_for(req.context.as_deref())?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), req.corpus_id, req.epsilon, req.context);
    let mut body = to_value(&session)?;
    body["session_id"] = json!(id);
    state
        .sessions
        .write()
        .expect("sessions lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, axum::Json(body)))
}

async fn list_sessions(State(state): Shared) -> axum::Json<Value> {
    let sessions = state.session_snapshot().await;
    axum::Json(Value::Array(
        sessions
            .iter()
            .map(|s| {
                json!({
                    "id": s.id,
                    "corpus_id": s.corpus_id,
                    "epsilon": s.epsilon,
                    "steps": s.history.len(),
                })
            })
            .collect(),
    ))
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> ApiResult<axum::Json<Value>> {
    let session = state
        .session(&id)
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    let guard = session.lock().await;
    Ok(axum::Json(to_value(&*guard)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RefineRequest {
    query: String,
    epsilon: Option<f64>,
}

async fn refine(
    State(state): Shared,
    Path(id): Path<String>,
    Body(req): Body<RefineRequest>,
) -> ApiResult<axum::Json<Value>> {
    let handle = state
        .session(&id)
        .ok_or_else(|| ApiError::not_found("session", &id))?;
    let mut guard = handle.lock().await;
    let index = corpus(&state, &guard.corpus_id)?;
    let snapshot = guard.clone();
    let entry = blocking(move || snapshot.refinement(&index, &req.query, req.epsilon)).await?;
    guard.record(entry.clone());
    Ok(axum::Json(to_value(&entry)?))
}
