//! Perturbation-stable retrieval, drift detection and query-sequence convergence.

use serde::Serialize;

use crate::docset::DocSet;
use crate::index::Index;
use crate::metric::{DistanceValue, MetricError};
use crate::query::QueryAst;
use crate::retrieval::{
    anchor_of, check_epsilon, retrieve_anchor, RetrievalError, RetrievalSet, Scan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Stable,
    DriftDetected,
    SignificantCognitiveChange,
    EmptyRetrieval,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "Stable",
            Verdict::DriftDetected => "DriftDetected",
            Verdict::SignificantCognitiveChange => "SignificantCognitiveChange",
            Verdict::EmptyRetrieval => "EmptyRetrieval",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `cd_sets` between the two retrievals, or why it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PartitionDistance {
    Value(f64),
    Undefined { error: String },
}

impl PartitionDistance {
    pub fn value(&self) -> Option<f64> {
        match self {
            PartitionDistance::Value(v) => Some(*v),
            PartitionDistance::Undefined { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub query: String,
    pub perturbed: String,
    pub perturbation_magnitude: f64,
    pub threshold: f64,
    pub radius_used: f64,
    pub set_q: RetrievalSet,
    #[serde(rename = "set_q_prime")]
    pub set_q_perturbed: RetrievalSet,
    pub partition_distance: PartitionDistance,
    /// `R_q ∪ R_q'` when stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merged: Option<Vec<String>>,
    pub verdict: Verdict,
}

fn elementary_text(q: &QueryAst) -> Result<String, RetrievalError> {
    Ok(q.words().ok_or(RetrievalError::NotElementary)?.join(" "))
}

/// `cd(q, q')` over the index vocabulary.
pub fn perturbation_magnitude(
    q: &QueryAst,
    q_perturbed: &QueryAst,
    index: &Index,
    ctx: Option<&str>,
) -> Result<DistanceValue, RetrievalError> {
    let a = anchor_of(index, q, ctx).map_err(empty_as_operand)?;
    let b = anchor_of(index, q_perturbed, ctx).map_err(empty_as_operand)?;
    let layout = index.layout_for(ctx)?;
    Ok(index.metric(ctx)?.cd_extended(&a, &b, layout.vocabulary()))
}

fn empty_as_operand(e: RetrievalError) -> RetrievalError {
    match e {
        RetrievalError::EmptyQuery => MetricError::EmptyOperand.into(),
        other => other,
    }
}

/// Whether the partition distance between two retrievals is exactly zero.
pub fn stability_check(
    r1: &RetrievalSet,
    r2: &RetrievalSet,
    index: &Index,
) -> Result<bool, RetrievalError> {
    let ctx = r1.context.as_deref();
    Ok(index.cd_sets(&r1.positions, &r2.positions, ctx)?.is_zero())
}

fn partition_distance(
    r1: &RetrievalSet,
    r2: &RetrievalSet,
    index: &Index,
) -> Result<(PartitionDistance, bool), RetrievalError> {
    let ctx = r1.context.as_deref();
    match index.cd_sets(&r1.positions, &r2.positions, ctx) {
        Ok(d) => Ok((PartitionDistance::Value(d.value), d.is_zero())),
        Err(crate::index::IndexError::Metric(MetricError::EmptyRetrievalSet)) => Ok((
            PartitionDistance::Undefined {
                error: "EmptyRetrievalSet".to_string(),
            },
            false,
        )),
        Err(e) => Err(e.into()),
    }
}

/// Retrieve `q` and its perturbation `q'` at radius `ε/3` and classify the change.
pub fn stable_retrieve(
    index: &Index,
    q: &QueryAst,
    q_perturbed: &QueryAst,
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<StabilityReport, RetrievalError> {
    check_epsilon(epsilon)?;
    let query = elementary_text(q)?;
    let perturbed = elementary_text(q_perturbed)?;
    let anchor = anchor_of(index, q, ctx)?;
    let anchor_perturbed = anchor_of(index, q_perturbed, ctx)?;
    let radius = epsilon / 3.0;

    let layout = index.layout_for(ctx)?;
    let magnitude = index
        .metric(ctx)?
        .cd_extended(&anchor, &anchor_perturbed, layout.vocabulary());

    let (set_q, set_q_perturbed) = rayon::join(
        || retrieve_anchor(index, &anchor, radius, ctx, Scan::Pruned),
        || retrieve_anchor(index, &anchor_perturbed, radius, ctx, Scan::Pruned),
    );
    let (set_q, set_q_perturbed) = (set_q?, set_q_perturbed?);
    let (partition_distance, zero) = partition_distance(&set_q, &set_q_perturbed, index)?;

    let verdict = if magnitude.value >= radius {
        Verdict::SignificantCognitiveChange
    } else if set_q.is_empty() || set_q_perturbed.is_empty() {
        Verdict::EmptyRetrieval
    } else if zero {
        Verdict::Stable
    } else {
        Verdict::DriftDetected
    };
    let merged = (verdict == Verdict::Stable)
        .then(|| index.ids(&set_q.positions.union(&set_q_perturbed.positions)));

    Ok(StabilityReport {
        query,
        perturbed,
        perturbation_magnitude: magnitude.value,
        threshold: epsilon,
        radius_used: radius,
        set_q,
        set_q_perturbed,
        partition_distance,
        merged,
        verdict,
    })
}

/// Stability of the retrievals of `sequence[index]` and `sequence[index + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub index: usize,
    /// Absent when either retrieval is empty.
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub sequence: Vec<String>,
    pub target: String,
    pub distances: Vec<f64>,
    pub epsilon: f64,
    pub converged_at: Option<usize>,
    pub tail_stability: Vec<TailCheck>,
}

impl ConvergenceReport {
    /// Every consecutive tail pair was checked and found stable.
    pub fn tail_stable(&self) -> bool {
        self.converged_at.is_some() && self.tail_stability.iter().all(|t| t.stable == Some(true))
    }
}

/// Least `m` with `cd(q_n, q) < ε` for every supplied `n ≥ m`.
pub fn check_sequence_convergence(
    index: &Index,
    sequence: &[QueryAst],
    target: &QueryAst,
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<ConvergenceReport, RetrievalError> {
    check_epsilon(epsilon)?;
    if sequence.is_empty() {
        return Err(RetrievalError::EmptySequence);
    }
    let target_anchor = anchor_of(index, target, ctx).map_err(empty_as_operand)?;
    let anchors = sequence
        .iter()
        .map(|q| anchor_of(index, q, ctx).map_err(empty_as_operand))
        .collect::<Result<Vec<_>, _>>()?;

    let layout = index.layout_for(ctx)?;
    let metric = index.metric(ctx)?;
    let distances: Vec<f64> = anchors
        .iter()
        .map(|a| {
            metric
                .cd_extended(a, &target_anchor, layout.vocabulary())
                .value
        })
        .collect();
    let tail = distances.iter().rev().take_while(|&&d| d < epsilon).count();
    let converged_at = (tail > 0).then(|| distances.len() - tail);

    let mut tail_stability = Vec::new();
    if let Some(m) = converged_at {
        let radius = epsilon / 3.0;
        let sets = anchors[m..]
            .iter()
            .map(|a| Ok(retrieve_anchor(index, a, radius, ctx, Scan::Pruned)?.positions))
            .collect::<Result<Vec<DocSet>, RetrievalError>>()?;
        for (offset, pair) in sets.windows(2).enumerate() {
            let stable = if pair[0].is_empty() || pair[1].is_empty() {
                None
            } else {
                Some(index.cd_sets(&pair[0], &pair[1], ctx)?.is_zero())
            };
            tail_stability.push(TailCheck {
                index: m + offset,
                stable,
            });
        }
    }

    Ok(ConvergenceReport {
        sequence: sequence
            .iter()
            .map(elementary_text)
            .collect::<Result<_, _>>()?,
        target: elementary_text(target)?,
        distances,
        epsilon,
        converged_at,
        tail_stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{CorpusRecord, IndexConfig, TokenizerConfig};
    use crate::lexicon::Lexicon;
    use crate::query::parse_query;
    use std::sync::Arc;

    fn index(lexicon: &str, docs: &[(&str, &str)]) -> Index {
        Index::ingest(
            docs.iter()
                .map(|(id, t)| CorpusRecord::new(*id, *t))
                .collect::<Vec<_>>(),
            Arc::new(Lexicon::from_json(lexicon).unwrap()),
            IndexConfig {
                tokenizer: TokenizerConfig::keep_all(),
                ..IndexConfig::default()
            },
        )
        .unwrap()
    }

    fn desk() -> Index {
        index(
            r#"{"classes": [["a"], ["b"]], "pairs": [["a", "b", 0.4]]}"#,
            &[("doc_a", "a"), ("doc_b", "b")],
        )
    }

    fn q(s: &str) -> QueryAst {
        parse_query(s).unwrap()
    }

    #[test]
    fn desk_magnitude() {
        let ix = desk();
        let d = perturbation_magnitude(&q("a"), &q("b"), &ix, None).unwrap();
        assert!((d.value - 0.4).abs() < 1e-12);
        assert!(perturbation_magnitude(&q("a"), &q("a"), &ix, None)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn desk_significant_change() {
        let ix = desk();
        let report = stable_retrieve(&ix, &q("a"), &q("b"), 0.9, None).unwrap();
        assert_eq!(report.verdict, Verdict::SignificantCognitiveChange);
        assert_eq!(report.radius_used, 0.9 / 3.0);
        assert_eq!(report.set_q.doc_ids, ["doc_a"]);
        assert_eq!(report.set_q_perturbed.doc_ids, ["doc_b"]);
        assert!(report.merged.is_none());
    }

    #[test]
    fn identical_query_is_stable() {
        let ix = desk();
        let report = stable_retrieve(&ix, &q("a"), &q("a"), 0.5, None).unwrap();
        assert_eq!(report.verdict, Verdict::Stable);
        assert_eq!(report.partition_distance, PartitionDistance::Value(0.0));
        assert_eq!(report.merged.as_deref(), Some(&["doc_a".to_string()][..]));
    }

    #[test]
    fn stability_check_cases() {
        let ix = desk();
        let ra = retrieve_anchor(&ix, &ix.partitions()[0].words, 0.3, None, Scan::Full).unwrap();
        let rb = retrieve_anchor(&ix, &ix.partitions()[1].words, 0.3, None, Scan::Full).unwrap();
        assert!(stability_check(&ra, &ra, &ix).unwrap());
        assert!(!stability_check(&ra, &rb, &ix).unwrap());
    }

    #[test]
    fn empty_retrieval_verdict() {
        let ix = desk();
        let report = stable_retrieve(&ix, &q("zzz"), &q("zzz"), 0.3, None).unwrap();
        assert_eq!(report.verdict, Verdict::EmptyRetrieval);
        assert!(report.partition_distance.value().is_none());
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["partition_distance"]["error"], "EmptyRetrievalSet");
        assert_eq!(json["verdict"], "EmptyRetrieval");
    }

    #[test]
    fn rejects_compound_and_bad_epsilon() {
        let ix = desk();
        assert!(matches!(
            stable_retrieve(&ix, &q("a AND b"), &q("a"), 0.5, None),
            Err(RetrievalError::NotElementary)
        ));
        assert!(matches!(
            stable_retrieve(&ix, &q("a"), &q("a"), 1.0, None),
            Err(RetrievalError::BadEpsilon(_))
        ));
    }

    #[test]
    fn convergence_prefix() {
        let ix = index(
            r#"{"classes": [["a", "a2"], ["b"], ["e"]],
                "pairs": [["a", "b", 0.4], ["a", "e", 0.2], ["b", "e", 0.4]]}"#,
            &[("d1", "a"), ("d2", "b"), ("d3", "e")],
        );
        let seq = [q("b"), q("e"), q("a2"), q("a")];
        let report = check_sequence_convergence(&ix, &seq, &q("a"), 0.1, None).unwrap();
        assert_eq!(report.converged_at, Some(2));
        assert!((report.distances[0] - 0.4).abs() < 1e-12);
        assert!((report.distances[1] - 0.2).abs() < 1e-12);
        assert_eq!(&report.distances[2..], [0.0, 0.0]);
        assert!(report.tail_stable());

        let never = check_sequence_convergence(&ix, &[q("b"), q("e")], &q("a"), 0.1, None).unwrap();
        assert_eq!(never.converged_at, None);
        assert!(never.tail_stability.is_empty());

        let constant =
            check_sequence_convergence(&ix, &vec![q("a"); 3], &q("a"), 0.1, None).unwrap();
        assert_eq!(constant.converged_at, Some(0));
        assert!(matches!(
            check_sequence_convergence(&ix, &[], &q("a"), 0.1, None),
            Err(RetrievalError::EmptySequence)
        ));
    }
}
