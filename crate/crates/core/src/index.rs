//! Corpus ingestion, partitioning and shard pruning.
//!
//! Documents whose canonical word sets coincide form one partition. The
//! partitions are then grouped into shards around a representative; a shard
//! whose lower bound `cd(q, centroid) - radius` already reaches `ε` cannot
//! hold any document of the ε-ball around `q` and is skipped.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::docset::DocSet;
use crate::lexicon::{CanonicalWordSet, Lexicon, LexiconError, LexiconFile};
use crate::metric::{CognitiveMetric, DistanceValue, MetricError, Normalization, VocabularyView};

/// Snapshot format version written by [`Index::write_snapshot`].
pub const SNAPSHOT_VERSION: u32 = 1;
const SNAPSHOT_FORMAT: &str = "cogtop-index";

/// Pruning bound slack: shards are skipped only when the bound clears `ε` by this much.
const PRUNE_SLACK: f64 = 1e-9;

pub const DEFAULT_STOPWORDS: &[&str] = &["to", "in", "a", "the", "of"];

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate document id `{0}`")]
    DuplicateDocumentId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document `{0}` has no words after tokenization")]
    EmptyDocument(String),
    #[error("corpus line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub stopwords: Vec<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TokenizerConfig {
    /// No stopwords at all.
    pub fn keep_all() -> Self {
        Self {
            stopwords: Vec::new(),
        }
    }

    /// One stopword per line; blank lines and `#` comments are ignored.
    pub fn from_stopword_list(text: &str) -> Self {
        Self {
            stopwords: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    #[serde(default)]
    pub tokenizer: TokenizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default)]
    pub normalization: Normalization,
    /// Number of shards; `None` means `ceil(sqrt(#partitions))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shards: Option<usize>,
}

/// Lowercased alphanumeric tokens with stopwords removed.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !config.stopwords.iter().any(|s| s == t))
        .collect()
}

/// One line of a JSON Lines corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }
}

/// Parses a JSON Lines corpus. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>, IndexError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| IndexError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    /// Canonical set under the index's build context.
    pub words: CanonicalWordSet,
    /// Canonical set under the base lexicon, for re-projection into other contexts.
    pub base_words: CanonicalWordSet,
    pub partition_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

/// Documents sharing one canonical word set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub id: String,
    pub words: CanonicalWordSet,
    pub docs: DocSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardSummary {
    pub shard_id: usize,
    /// Positions into the partition list.
    pub partitions: Vec<usize>,
    /// Position of the representative partition.
    pub representative: usize,
    pub centroid: CanonicalWordSet,
    pub radius: f64,
}

/// Partitions, shards and vocabulary under one context.
#[derive(Debug, Clone)]
pub struct Layout {
    context: Option<String>,
    partitions: Vec<Partition>,
    doc_partition: Vec<u32>,
    vocabulary: VocabularyView,
    shards: Vec<ShardSummary>,
}

impl Layout {
    pub fn context(&self) -> Option<&str> {
        self.context.as_deref()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition_of(&self, doc: u32) -> usize {
        self.doc_partition[doc as usize] as usize
    }

    pub fn vocabulary(&self) -> &VocabularyView {
        &self.vocabulary
    }

    pub fn shards(&self) -> &[ShardSummary] {
        &self.shards
    }
}

/// Immutable corpus snapshot.
#[derive(Debug, Clone)]
pub struct Index {
    lexicon: Arc<Lexicon>,
    config: IndexConfig,
    documents: Vec<Document>,
    by_id: HashMap<String, u32>,
    layout: Layout,
}

/// Groups canonical sets by equality; output sorted by set, members by position.
pub fn build_partitions<'a>(
    sets: impl IntoIterator<Item = &'a CanonicalWordSet>,
) -> Vec<(CanonicalWordSet, DocSet)> {
    let mut groups: BTreeMap<&CanonicalWordSet, Vec<u32>> = BTreeMap::new();
    for (i, set) in sets.into_iter().enumerate() {
        groups.entry(set).or_default().push(i as u32);
    }
    groups
        .into_iter()
        .map(|(set, docs)| (set.clone(), DocSet::from_sorted(docs)))
        .collect()
}

/// Hex fingerprint of a canonical set's class ids.
pub fn fingerprint(set: &CanonicalWordSet) -> String {
    let encoded = serde_json::to_vec(&set.class_ids).expect("class ids serialize");
    let digest = Sha256::digest(&encoded);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl Index {
    pub fn ingest(
        corpus: impl IntoIterator<Item = CorpusRecord>,
        lexicon: Arc<Lexicon>,
        config: IndexConfig,
    ) -> Result<Self, IndexError> {
        let ctx = config.context.as_deref();
        lexicon.view(ctx)?;

        let mut records: Vec<CorpusRecord> = corpus.into_iter().collect();
        if records.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        records.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(IndexError::DuplicateDocumentId(w[0].id.clone()));
        }

        let documents = records
            .into_par_iter()
            .map(|r| {
                let tokens = tokenize(&r.text, &config.tokenizer);
                if tokens.is_empty() {
                    return Err(IndexError::EmptyDocument(r.id));
                }
                let base_words = lexicon.canonicalize(&tokens, None)?;
                let words = lexicon.project(&base_words, ctx)?;
                Ok(Document {
                    id: r.id,
                    raw_text: r.text,
                    partition_id: fingerprint(&words),
                    words,
                    base_words,
                    meta: r.meta,
                })
            })
            .collect::<Result<Vec<_>, IndexError>>()?;

        let by_id = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i as u32))
            .collect();
        let layout = build_layout(
            &lexicon,
            documents.iter().map(|d| &d.words),
            ctx,
            config.normalization,
            config.shards,
            true,
        )?;
        Ok(Self {
            lexicon,
            config,
            documents,
            by_id,
            layout,
        })
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn lexicon_arc(&self) -> Arc<Lexicon> {
        Arc::clone(&self.lexicon)
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn context(&self) -> Option<&str> {
        self.config.context.as_deref()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, pos: u32) -> &Document {
        &self.documents[pos as usize]
    }

    pub fn position(&self, id: &str) -> Option<u32> {
        self.by_id.get(id).copied()
    }

    pub fn ids(&self, set: &DocSet) -> Vec<String> {
        set.iter().map(|p| self.document(p).id.clone()).collect()
    }

    /// Resolves ids to a set; unknown ids are reported as an error message.
    pub fn doc_set<S: AsRef<str>>(&self, ids: &[S]) -> Result<DocSet, String> {
        ids.iter()
            .map(|id| {
                self.position(id.as_ref())
                    .ok_or_else(|| format!("unknown document `{}`", id.as_ref()))
            })
            .collect()
    }

    pub fn all_docs(&self) -> DocSet {
        DocSet::full(self.len())
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.layout.partitions
    }

    pub fn shards(&self) -> &[ShardSummary] {
        &self.layout.shards
    }

    pub fn vocabulary(&self) -> &VocabularyView {
        &self.layout.vocabulary
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.config.tokenizer)
    }

    /// Layout under `ctx`; the build context is precomputed, others are derived
    /// per call and carry no shards.
    pub fn layout_for(&self, ctx: Option<&str>) -> Result<Cow<'_, Layout>, IndexError> {
        if ctx == self.context() {
            return Ok(Cow::Borrowed(&self.layout));
        }
        let view_sets = self
            .documents
            .iter()
            .map(|d| self.lexicon.project(&d.base_words, ctx))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cow::Owned(build_layout(
            &self.lexicon,
            view_sets.iter(),
            ctx,
            self.config.normalization,
            None,
            false,
        )?))
    }

    pub fn metric(&self, ctx: Option<&str>) -> Result<CognitiveMetric<'_>, IndexError> {
        Ok(CognitiveMetric::new(
            &self.lexicon,
            ctx,
            self.config.normalization,
        )?)
    }

    /// Canonical form of free text under `ctx`, using the index tokenizer.
    pub fn canonicalize_text(
        &self,
        text: &str,
        ctx: Option<&str>,
    ) -> Result<CanonicalWordSet, IndexError> {
        Ok(self.lexicon.canonicalize(&self.tokenize(text), ctx)?)
    }

    /// Canonical form of pre-split words, applying the index stopword list.
    pub fn canonicalize_words<S: AsRef<str>>(
        &self,
        words: &[S],
        ctx: Option<&str>,
    ) -> Result<CanonicalWordSet, IndexError> {
        let joined = words
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        self.canonicalize_text(&joined, ctx)
    }

    /// `cd(q, d)` for one document, over the index vocabulary extended by `q`.
    pub fn distance_to_doc(
        &self,
        query: &CanonicalWordSet,
        doc: u32,
        ctx: Option<&str>,
    ) -> Result<DistanceValue, IndexError> {
        let layout = self.layout_for(ctx)?;
        let metric = self.metric(ctx)?;
        if query.is_empty() {
            return Err(MetricError::EmptyOperand.into());
        }
        let p = &layout.partitions[layout.partition_of(doc)];
        Ok(metric.cd_extended(query, &p.words, &layout.vocabulary))
    }

    /// Documents not ruled out by the shard bound for `cd(q, ·) < ε`.
    pub fn prune_candidates(
        &self,
        query: &CanonicalWordSet,
        epsilon: f64,
    ) -> Result<DocSet, IndexError> {
        let parts = self.candidate_partitions(&self.layout, query, epsilon)?;
        Ok(parts
            .into_iter()
            .flat_map(|p| self.layout.partitions[p].docs.iter())
            .collect())
    }

    /// Partition positions surviving the shard bound, sorted.
    pub(crate) fn candidate_partitions(
        &self,
        layout: &Layout,
        query: &CanonicalWordSet,
        epsilon: f64,
    ) -> Result<Vec<usize>, IndexError> {
        if query.is_empty() {
            return Err(MetricError::EmptyOperand.into());
        }
        if layout.shards.is_empty() {
            return Ok((0..layout.partitions.len()).collect());
        }
        let metric = self.metric(layout.context())?;
        let mut out: Vec<usize> = layout
            .shards
            .par_iter()
            .filter(|s| {
                let to_centroid = metric.cd_extended(query, &s.centroid, &layout.vocabulary);
                to_centroid.value - s.radius < epsilon + PRUNE_SLACK
            })
            .flat_map_iter(|s| s.partitions.iter().copied())
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Minimum cross-pair distance between two document sets.
    pub fn cd_sets(
        &self,
        lhs: &DocSet,
        rhs: &DocSet,
        ctx: Option<&str>,
    ) -> Result<DistanceValue, IndexError> {
        let layout = self.layout_for(ctx)?;
        let metric = self.metric(ctx)?;
        let words = |s: &DocSet| -> Vec<&CanonicalWordSet> {
            s.iter()
                .map(|d| &layout.partitions[layout.partition_of(d)].words)
                .collect()
        };
        Ok(metric.cd_sets(words(lhs), words(rhs), &layout.vocabulary)?)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            lexicon: self.lexicon.source().clone(),
            documents: self
                .documents
                .iter()
                .map(|d| SnapshotDocument {
                    id: d.id.clone(),
                    text: d.raw_text.clone(),
                    meta: d.meta.clone(),
                    partition_id: d.partition_id.clone(),
                })
                .collect(),
            partitions: self
                .layout
                .partitions
                .iter()
                .map(|p| SnapshotPartition {
                    id: p.id.clone(),
                    words: p.words.clone(),
                    docs: self.ids(&p.docs),
                })
                .collect(),
            shards: self
                .layout
                .shards
                .iter()
                .map(|s| SnapshotShard {
                    shard_id: s.shard_id,
                    partitions: s
                        .partitions
                        .iter()
                        .map(|&p| self.layout.partitions[p].id.clone())
                        .collect(),
                    centroid: s.centroid.clone(),
                    radius: s.radius,
                })
                .collect(),
        }
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<(), IndexError> {
        serde_json::to_writer_pretty(&mut out, &self.snapshot())?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Rebuilds an index from a snapshot and checks it against the stored layout.
    pub fn read_snapshot<R: Read>(input: R) -> Result<Self, IndexError> {
        let snap: Snapshot = serde_json::from_reader(input)?;
        Self::from_snapshot(snap)
    }

    pub fn from_snapshot(snap: Snapshot) -> Result<Self, IndexError> {
        if snap.format != SNAPSHOT_FORMAT {
            return Err(IndexError::Snapshot(format!(
                "unexpected format `{}`",
                snap.format
            )));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(IndexError::Snapshot(format!(
                "unsupported snapshot version {}",
                snap.version
            )));
        }
        let lexicon = Arc::new(Lexicon::from_file(snap.lexicon.clone())?);
        let records = snap.documents.iter().map(|d| CorpusRecord {
            id: d.id.clone(),
            text: d.text.clone(),
            meta: d.meta.clone(),
        });
        let index = Self::ingest(records, lexicon, snap.config.clone())?;
        let rebuilt = index.snapshot();
        if rebuilt.partitions != snap.partitions || rebuilt.documents != snap.documents {
            return Err(IndexError::Snapshot(
                "stored partitions do not match the rebuilt index".to_string(),
            ));
        }
        Ok(index)
    }
}

fn build_layout<'a>(
    lexicon: &Lexicon,
    sets: impl Iterator<Item = &'a CanonicalWordSet>,
    ctx: Option<&str>,
    normalization: Normalization,
    shard_count: Option<usize>,
    with_shards: bool,
) -> Result<Layout, IndexError> {
    let sets: Vec<&CanonicalWordSet> = sets.collect();
    let mut doc_partition = vec![0u32; sets.len()];
    let partitions: Vec<Partition> = build_partitions(sets.iter().copied())
        .into_iter()
        .enumerate()
        .map(|(i, (words, docs))| {
            for d in docs.iter() {
                doc_partition[d as usize] = i as u32;
            }
            Partition {
                id: fingerprint(&words),
                words,
                docs,
            }
        })
        .collect();
    let vocabulary = VocabularyView::for_lexicon(
        lexicon,
        partitions
            .iter()
            .flat_map(|p| p.words.class_ids.iter().cloned()),
        ctx,
    )?;
    let shards = if with_shards {
        let metric = CognitiveMetric::new(lexicon, ctx, normalization)?;
        build_shards(&metric, &partitions, &vocabulary, shard_count)
    } else {
        Vec::new()
    };
    Ok(Layout {
        context: ctx.map(str::to_string),
        partitions,
        doc_partition,
        vocabulary,
        shards,
    })
}

/// Greedy farthest-first representatives; every partition joins its nearest one.
fn build_shards(
    metric: &CognitiveMetric<'_>,
    partitions: &[Partition],
    vocab: &VocabularyView,
    shard_count: Option<usize>,
) -> Vec<ShardSummary> {
    let n = partitions.len();
    if n == 0 {
        return Vec::new();
    }
    let k = shard_count
        .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
        .clamp(1, n);

    let distances_from = |c: usize| -> Vec<f64> {
        partitions
            .par_iter()
            .map(|p| {
                metric
                    .cd_extended(&partitions[c].words, &p.words, vocab)
                    .value
            })
            .collect()
    };

    let mut centers = vec![0usize];
    let mut nearest = distances_from(0);
    let mut owner = vec![0usize; n];
    while centers.len() < k {
        let (far, &far_dist) =
            nearest
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, cur| {
                    if *cur.1 > *best.1 {
                        cur
                    } else {
                        best
                    }
                });
        if far_dist <= 0.0 {
            break;
        }
        let slot = centers.len();
        centers.push(far);
        for (p, d) in distances_from(far).into_iter().enumerate() {
            if d < nearest[p] {
                nearest[p] = d;
                owner[p] = slot;
            }
        }
    }

    let mut shards: Vec<ShardSummary> = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| ShardSummary {
            shard_id: i,
            partitions: Vec::new(),
            representative: c,
            centroid: partitions[c].words.clone(),
            radius: 0.0,
        })
        .collect();
    for p in 0..n {
        let s = &mut shards[owner[p]];
        s.partitions.push(p);
        s.radius = s.radius.max(nearest[p]);
    }
    shards
}

/// On-disk index snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub config: IndexConfig,
    pub lexicon: LexiconFile,
    pub documents: Vec<SnapshotDocument>,
    pub partitions: Vec<SnapshotPartition>,
    pub shards: Vec<SnapshotShard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
    pub partition_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPartition {
    pub id: String,
    pub words: CanonicalWordSet,
    pub docs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotShard {
    pub shard_id: usize,
    pub partitions: Vec<String>,
    pub centroid: CanonicalWordSet,
    pub radius: f64,
}
