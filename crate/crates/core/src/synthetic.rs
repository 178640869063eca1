//! Seeded generators for lexicons, corpora and queries.
//!
//! Every generator takes an explicit RNG so runs are reproducible from a seed.
//! Word `c{i}w{j}` is the `j`-th member of class `i`; `u{k}` words are never
//! in any lexicon.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::index::{CorpusRecord, Index, IndexConfig, IndexError, TokenizerConfig};
use crate::lexicon::{ContextFile, Lexicon, LexiconFile, PairEntry};
use crate::query::QueryAst;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// How inter-class distances are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    /// Some pairs uniform in `[0.5, 1]`, the rest at the default.
    Sparse,
    /// Every pair from distinct points on a line, all below 1.
    Line,
}

pub fn class_word(class: usize, member: usize) -> String {
    format!("c{class}w{member}")
}

/// A validated random lexicon; a context fusing two classes is attached when it validates.
pub fn random_lexicon<R: Rng>(rng: &mut R, classes: usize, table: Table) -> LexiconFile {
    let members: Vec<Vec<String>> = (0..classes)
        .map(|c| {
            (0..rng.gen_range(1..=3))
                .map(|j| class_word(c, j))
                .collect()
        })
        .collect();

    let mut pairs = Vec::new();
    match table {
        Table::Sparse => {
            for i in 0..classes {
                for j in i + 1..classes {
                    if rng.gen_bool(0.6) {
                        let v = round(rng.gen_range(0.5..=1.0));
                        pairs.push(PairEntry(class_word(i, 0), class_word(j, 0), v));
                    }
                }
            }
        }
        Table::Line => {
            let mut slots: Vec<usize> = (0..classes).collect();
            slots.shuffle(rng);
            let points: Vec<f64> = slots
                .iter()
                .map(|&s| (s as f64 + rng.gen_range(0.0..0.5)) / classes as f64)
                .collect();
            for i in 0..classes {
                for j in i + 1..classes {
                    let v = (points[i] - points[j]).abs();
                    pairs.push(PairEntry(class_word(i, 0), class_word(j, 0), v));
                }
            }
        }
    }

    let mut file = LexiconFile {
        classes: members,
        pairs,
        ..LexiconFile::default()
    };
    if classes >= 2 {
        let a = rng.gen_range(0..classes);
        let b = (a + rng.gen_range(1..classes)) % classes;
        let mut with_context = file.clone();
        with_context.contexts.insert(
            "ctx".to_string(),
            ContextFile {
                merges: vec![vec![class_word(a, 0), class_word(b, 0)]],
                pair_overrides: Vec::new(),
            },
        );
        if Lexicon::from_file(with_context.clone()).is_ok() {
            file = with_context;
        }
    }
    file
}

fn round(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Words of `classes`, each written as a random member, possibly repeated, shuffled.
pub fn spell<R: Rng>(rng: &mut R, lex: &LexiconFile, classes: &[usize]) -> Vec<String> {
    let mut words: Vec<String> = classes
        .iter()
        .map(|&c| {
            lex.classes[c]
                .choose(rng)
                .expect("classes are nonempty")
                .clone()
        })
        .collect();
    if !words.is_empty() && rng.gen_bool(0.3) {
        let dup = words.choose(rng).cloned().expect("nonempty");
        words.push(dup);
    }
    words.shuffle(rng);
    words
}

/// `1..=max` distinct random classes.
pub fn random_classes<R: Rng>(rng: &mut R, lex: &LexiconFile, max: usize) -> Vec<usize> {
    let k = rng.gen_range(1..=max.min(lex.classes.len()).max(1));
    let mut picked = rand::seq::index::sample(rng, lex.classes.len(), k).into_vec();
    picked.sort_unstable();
    picked
}

/// A random word set, occasionally with a word outside the lexicon.
pub fn random_word_set<R: Rng>(rng: &mut R, lex: &LexiconFile, max: usize) -> Vec<String> {
    let classes = random_classes(rng, lex, max);
    let mut words = spell(rng, lex, &classes);
    if rng.gen_bool(0.15) {
        words.push(format!("u{}", rng.gen_range(0..4)));
    }
    words
}

/// Three differently spelled word lists with identical classes.
pub fn equivalent_triple<R: Rng>(rng: &mut R, lex: &LexiconFile, max: usize) -> [Vec<String>; 3] {
    let classes = random_classes(rng, lex, max);
    [
        spell(rng, lex, &classes),
        spell(rng, lex, &classes),
        spell(rng, lex, &classes),
    ]
}

/// Replaces every word by a random member of its class.
pub fn synonym_substitution<R: Rng>(
    rng: &mut R,
    lex: &LexiconFile,
    words: &[String],
) -> Vec<String> {
    words
        .iter()
        .map(|w| {
            lex.classes
                .iter()
                .find(|c| c.contains(w))
                .and_then(|c| c.choose(rng))
                .unwrap_or(w)
                .clone()
        })
        .collect()
}

/// `n` documents drawn from a pool of templates, so partitions often hold several documents.
pub fn random_corpus<R: Rng>(rng: &mut R, lex: &LexiconFile, n: usize) -> Vec<CorpusRecord> {
    let templates: Vec<Vec<String>> = (0..(n / 2).max(1))
        .map(|_| random_word_set(rng, lex, 4))
        .collect();
    (0..n)
        .map(|i| {
            let template = templates.choose(rng).expect("nonempty");
            let words = synonym_substitution(rng, lex, template);
            CorpusRecord::new(format!("d{i:03}"), words.join(" "))
        })
        .collect()
}

/// A random lexicon together with a corpus over it.
#[derive(Debug, Clone)]
pub struct System {
    pub lexicon: LexiconFile,
    pub corpus: Vec<CorpusRecord>,
}

impl System {
    pub fn random<R: Rng>(rng: &mut R, classes: usize, docs: usize) -> Self {
        let table = if rng.gen_bool(0.5) {
            Table::Sparse
        } else {
            Table::Line
        };
        let lexicon = random_lexicon(rng, classes, table);
        let corpus = random_corpus(rng, &lexicon, docs);
        Self { lexicon, corpus }
    }

    pub fn index(&self) -> Result<Index, IndexError> {
        self.index_with(None)
    }

    pub fn index_with(&self, context: Option<&str>) -> Result<Index, IndexError> {
        Index::ingest(
            self.corpus.clone(),
            Arc::new(Lexicon::from_file(self.lexicon.clone())?),
            IndexConfig {
                tokenizer: TokenizerConfig::keep_all(),
                context: context.map(str::to_string),
                ..IndexConfig::default()
            },
        )
    }

    pub fn has_context(&self) -> bool {
        self.lexicon.contexts.contains_key("ctx")
    }
}

/// A random Boolean query of at most `depth` levels over the given leaves.
pub fn random_ast<R: Rng>(rng: &mut R, leaves: &[Vec<String>], depth: usize) -> QueryAst {
    if depth == 0 || rng.gen_bool(0.25) {
        return QueryAst::leaf(leaves.choose(rng).expect("leaves nonempty"));
    }
    let sub = |rng: &mut R| random_ast(rng, leaves, depth - 1);
    match rng.gen_range(0..5) {
        0 => QueryAst::and(sub(rng), sub(rng)),
        1 => QueryAst::or(sub(rng), sub(rng)),
        2 => QueryAst::not(sub(rng)),
        3 => QueryAst::implies(sub(rng), sub(rng)),
        _ => QueryAst::iff(sub(rng), sub(rng)),
    }
}

/// A topic-clustered corpus with Zipf-distributed partition sizes.
///
/// Each topic owns a family of classes at mutual distance 0.1; classes of
/// different topics sit at the default distance 1. Partition `r` (by rank)
/// belongs to topic `r mod topics` and holds roughly `docs / (r · H)` documents.
#[derive(Debug, Clone)]
pub struct Skew {
    pub system: System,
    pub topics: usize,
    pub classes_per_topic: usize,
    /// Class indices of each partition's word set, by rank.
    pub partitions: Vec<Vec<usize>>,
}

pub const SKEW_DOCS: usize = 100_000;
pub const SKEW_PARTITIONS: usize = 1_000;

impl Skew {
    pub fn generate(seed: u64, docs: usize, partitions: usize) -> Self {
        const TOPICS: usize = 20;
        const FAMILY: usize = 10;
        const SET_SIZE: usize = 5;
        let mut rng = rng(seed);

        let class_of = |topic: usize, k: usize| topic * FAMILY + k;
        let classes: Vec<Vec<String>> = (0..TOPICS * FAMILY)
            .map(|c| (0..2).map(|j| class_word(c, j)).collect())
            .collect();
        let mut pairs = Vec::new();
        for t in 0..TOPICS {
            for i in 0..FAMILY {
                for j in i + 1..FAMILY {
                    pairs.push(PairEntry(
                        class_word(class_of(t, i), 0),
                        class_word(class_of(t, j), 0),
                        0.1,
                    ));
                }
            }
        }
        let lexicon = LexiconFile {
            classes,
            pairs,
            ..LexiconFile::default()
        };

        let mut seen: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); TOPICS];
        let mut sets = Vec::with_capacity(partitions);
        for rank in 0..partitions {
            let topic = rank % TOPICS;
            loop {
                let mut ks = rand::seq::index::sample(&mut rng, FAMILY, SET_SIZE).into_vec();
                ks.sort_unstable();
                let set: Vec<usize> = ks.into_iter().map(|k| class_of(topic, k)).collect();
                if seen[topic].insert(set.clone()) {
                    sets.push(set);
                    break;
                }
            }
        }

        let sizes = zipf_sizes(docs, partitions);
        let mut corpus = Vec::with_capacity(docs);
        for (set, &size) in sets.iter().zip(&sizes) {
            for _ in 0..size {
                let words = spell(&mut rng, &lexicon, set);
                corpus.push(CorpusRecord::new(
                    format!("s{:06}", corpus.len()),
                    words.join(" "),
                ));
            }
        }
        Self {
            system: System { lexicon, corpus },
            topics: TOPICS,
            classes_per_topic: FAMILY,
            partitions: sets,
        }
    }

    /// A query of 1 to 5 classes from one topic, sometimes with a stray word.
    pub fn random_query<R: Rng>(&self, rng: &mut R) -> Vec<String> {
        let topic = rng.gen_range(0..self.topics);
        let k = rng.gen_range(1..=5);
        let classes: Vec<usize> = rand::seq::index::sample(rng, self.classes_per_topic, k)
            .into_iter()
            .map(|c| topic * self.classes_per_topic + c)
            .collect();
        let mut words = spell(rng, &self.system.lexicon, &classes);
        if rng.gen_bool(0.1) {
            words.push("u0".to_string());
        }
        words
    }
}

/// Partition sizes proportional to `1 / rank`, at least 1 each, summing to `docs`.
pub fn zipf_sizes(docs: usize, partitions: usize) -> Vec<usize> {
    assert!(docs >= partitions, "every partition needs a document");
    let h: f64 = (1..=partitions).map(|r| 1.0 / r as f64).sum();
    let mut sizes: Vec<usize> = (1..=partitions)
        .map(|r| ((docs as f64 / (r as f64 * h)).floor() as usize).max(1))
        .collect();
    let total: usize = sizes.iter().sum();
    if total < docs {
        sizes[0] += docs - total;
    } else {
        let mut excess = total - docs;
        for s in sizes.iter_mut() {
            let take = excess.min(*s - 1);
            *s -= take;
            excess -= take;
        }
    }
    sizes
}
