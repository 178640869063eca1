//! Cognitive retrieval over synonym-class pseudo-metrics.

pub mod docset;
pub mod fixtures;
pub mod index;
pub mod lexicon;
pub mod metric;
pub mod query;
pub mod retrieval;
pub mod stability;
pub mod synthetic;
pub mod topology;
pub mod verify;

pub use docset::DocSet;
pub use index::{CorpusRecord, Index, IndexConfig, IndexError, TokenizerConfig};
pub use lexicon::{CanonicalWordSet, ClassId, Lexicon, LexiconError, LexiconFile};
pub use metric::{CognitiveMetric, DistanceValue, MetricError, Normalization, VocabularyView};
pub use query::{parse_query, perturb, Edit, Perturbation, QueryAst, QueryError, SyntaxError};
pub use retrieval::{
    evaluate, evaluate_with, retrieve, retrieve_anchor, EvalParams, RetrievalError, RetrievalSet,
    Scan,
};
pub use stability::{
    check_sequence_convergence, perturbation_magnitude, stability_check, stable_retrieve,
    ConvergenceReport, PartitionDistance, StabilityReport, TailCheck, Verdict,
};
pub use topology::{
    boolean_retrievals, enumerate_topology, is_cognitively_connected, Connectedness, TopologyFamily,
};
