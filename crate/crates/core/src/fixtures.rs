//! Small corpora shipped with the crate, used by tests, `verify` and the demos.

use std::sync::Arc;

use crate::index::{read_corpus, CorpusRecord, Index, IndexConfig, IndexError, TokenizerConfig};
use crate::lexicon::{Lexicon, LexiconError};
use crate::query::{parse_query, QueryAst};

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub lexicon_json: &'static str,
    pub corpus_jsonl: &'static str,
    pub stopwords: &'static str,
    pub queries_text: &'static str,
    /// Radius the fixture was designed around.
    pub epsilon: f64,
    pub contexts: &'static [&'static str],
}

macro_rules! fixture {
    ($name:literal, $eps:expr, $ctx:expr) => {
        Fixture {
            name: $name,
            lexicon_json: include_str!(concat!("../fixtures/", $name, "/lexicon.json")),
            corpus_jsonl: include_str!(concat!("../fixtures/", $name, "/corpus.jsonl")),
            stopwords: include_str!(concat!("../fixtures/", $name, "/stopwords.txt")),
            queries_text: include_str!(concat!("../fixtures/", $name, "/queries.txt")),
            epsilon: $eps,
            contexts: $ctx,
        }
    };
}

pub const DESK: Fixture = fixture!("desk", 0.5, &[]);
pub const DESK3: Fixture = fixture!("desk3", 0.5, &[]);
pub const DEFENSE: Fixture = fixture!("defense", 0.3, &["air-defense"]);
pub const DRIFT: Fixture = fixture!("drift", 0.165, &[]);
pub const CONVERGENCE: Fixture = fixture!("convergence", 0.1, &[]);
pub const TRANSACTIONAL: Fixture = fixture!("transactional", 0.3, &["transactional"]);

pub const ALL: &[Fixture] = &[DESK, DESK3, DEFENSE, DRIFT, CONVERGENCE, TRANSACTIONAL];

pub fn by_name(name: &str) -> Option<&'static Fixture> {
    ALL.iter().find(|f| f.name == name)
}

impl Fixture {
    pub fn lexicon(&self) -> Result<Lexicon, LexiconError> {
        Lexicon::from_json(self.lexicon_json)
    }

    pub fn corpus(&self) -> Result<Vec<CorpusRecord>, IndexError> {
        read_corpus(self.corpus_jsonl.as_bytes())
    }

    pub fn config(&self) -> IndexConfig {
        IndexConfig {
            tokenizer: TokenizerConfig::from_stopword_list(self.stopwords),
            ..IndexConfig::default()
        }
    }

    pub fn index(&self) -> Result<Index, IndexError> {
        self.index_with(self.config())
    }

    pub fn index_with(&self, config: IndexConfig) -> Result<Index, IndexError> {
        Index::ingest(self.corpus()?, Arc::new(self.lexicon()?), config)
    }

    pub fn query_lines(&self) -> impl Iterator<Item = &'static str> {
        self.queries_text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
    }

    pub fn queries(&self) -> Vec<QueryAst> {
        self.query_lines()
            .map(|l| parse_query(l).expect("fixture queries parse"))
            .collect()
    }
}
