//! Set-level cognitive distance.
//!
//! `cog_star(z, A)` is the mean word distance from class `z` to the classes
//! of `A`; `cd(A, B)` is zero when `A` and `B` have the same canonical form
//! and otherwise the largest gap `|cog_star(z, A) - cog_star(z, B)|` over the
//! vocabulary. `cd` is a pseudo-metric on canonical sets for any lexicon that
//! passed load-time validation.
//!
//! The sup only needs to visit classes that are in `A ∪ B` or explicitly
//! paired with one of them. Every other class sees both sets at the default
//! distance and contributes one shared "generic" term.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{CanonicalWordSet, ClassId, Lexicon, LexiconError, View};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("distance requested on an empty word set")]
    EmptyOperand,
    #[error("vocabulary does not contain class {0}")]
    VocabularyMismatch(ClassId),
    #[error("distance requested on an empty retrieval set")]
    EmptyRetrievalSet,
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

/// How `cog_star` aggregates word distances over a set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `(1/|A|) Σ cog(z, x)`; keeps every distance in `[0, 1]`.
    #[default]
    Mean,
    /// Unnormalized `Σ cog(z, x)`. Can exceed 1.
    RawSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceValue {
    pub value: f64,
    /// Set only when the zero comes from identical class structure, never from rounding.
    pub exact_zero: bool,
}

impl DistanceValue {
    pub const ZERO: DistanceValue = DistanceValue {
        value: 0.0,
        exact_zero: true,
    };

    fn from_sup(value: f64) -> Self {
        Self {
            value,
            exact_zero: value == 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.exact_zero
    }
}

/// The finite word universe a sup ranges over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyView {
    class_ids: Vec<ClassId>,
    /// Also contains words unknown to the lexicon and to every document.
    #[serde(default)]
    open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<String>,
    #[serde(skip)]
    members: HashSet<ClassId>,
}

impl VocabularyView {
    /// A closed vocabulary over exactly the given classes.
    pub fn new(ids: impl IntoIterator<Item = ClassId>, context: Option<String>) -> Self {
        let mut class_ids: Vec<ClassId> = ids.into_iter().collect();
        class_ids.sort();
        class_ids.dedup();
        let members = class_ids.iter().cloned().collect();
        Self {
            class_ids,
            open: false,
            context,
            members,
        }
    }

    /// Every class of the lexicon view plus the given extra classes, open to unseen words.
    pub fn for_lexicon(
        lex: &Lexicon,
        extra: impl IntoIterator<Item = ClassId>,
        context: Option<&str>,
    ) -> Result<Self, LexiconError> {
        let ids = lex.view_classes(context)?.into_iter().chain(extra);
        Ok(Self::new(ids, context.map(str::to_string)).open())
    }

    pub fn open(mut self) -> Self {
        self.open = true;
        self
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn context(&self) -> Option<&str> {
        self.context.as_deref()
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty() && !self.open
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        if self.members.len() != self.class_ids.len() {
            return self.class_ids.binary_search(id).is_ok();
        }
        self.members.contains(id)
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }
}

/// Distance functions bound to one lexicon view.
#[derive(Clone, Copy)]
pub struct CognitiveMetric<'a> {
    lex: &'a Lexicon,
    view: &'a View,
    norm: Normalization,
}

impl<'a> CognitiveMetric<'a> {
    pub fn new(
        lex: &'a Lexicon,
        ctx: Option<&str>,
        norm: Normalization,
    ) -> Result<Self, LexiconError> {
        Ok(Self {
            lex,
            view: lex.view(ctx)?,
            norm,
        })
    }

    pub fn lexicon(&self) -> &'a Lexicon {
        self.lex
    }

    pub fn normalization(&self) -> Normalization {
        self.norm
    }

    fn cog(&self, a: &ClassId, b: &ClassId) -> f64 {
        self.lex.class_distance_in(self.view, a, b)
    }

    fn aggregate(&self, sum: f64, n: usize) -> f64 {
        match self.norm {
            Normalization::Mean => sum / n as f64,
            Normalization::RawSum => sum,
        }
    }

    /// Distance from one class to a set.
    pub fn cog_star(&self, z: &ClassId, set: &CanonicalWordSet) -> Result<f64, MetricError> {
        if set.is_empty() {
            return Err(MetricError::EmptyOperand);
        }
        Ok(self.cog_star_unchecked(z, set))
    }

    fn cog_star_unchecked(&self, z: &ClassId, set: &CanonicalWordSet) -> f64 {
        let mut sum = 0.0;
        for x in set.iter() {
            sum += self.cog(z, x);
        }
        self.aggregate(sum, set.len())
    }

    /// `cog_star` for a class with no explicit tie to any member and not a member itself.
    fn generic_star(&self, set: &CanonicalWordSet) -> f64 {
        let d = self.lex.default_distance();
        let mut sum = 0.0;
        for _ in set.iter() {
            sum += d;
        }
        self.aggregate(sum, set.len())
    }

    /// `cd(A, B)` over `vocab`, which must contain both operands.
    pub fn cd(
        &self,
        a: &CanonicalWordSet,
        b: &CanonicalWordSet,
        vocab: &VocabularyView,
    ) -> Result<DistanceValue, MetricError> {
        if a.is_empty() || b.is_empty() {
            return Err(MetricError::EmptyOperand);
        }
        if let Some(missing) = a.iter().chain(b.iter()).find(|id| !vocab.contains(id)) {
            return Err(MetricError::VocabularyMismatch(missing.clone()));
        }
        Ok(self.cd_extended(a, b, vocab))
    }

    /// `cd(A, B)` over `vocab ∪ A ∪ B`. Operands must be nonempty.
    pub(crate) fn cd_extended(
        &self,
        a: &CanonicalWordSet,
        b: &CanonicalWordSet,
        vocab: &VocabularyView,
    ) -> DistanceValue {
        debug_assert!(!a.is_empty() && !b.is_empty());
        if a.same_classes(b) {
            return DistanceValue::ZERO;
        }

        let mut visited: HashSet<&ClassId> = HashSet::new();
        let mut sup: f64 = 0.0;
        let mut term = |z: &ClassId| {
            let gap = (self.cog_star_unchecked(z, a) - self.cog_star_unchecked(z, b)).abs();
            sup = sup.max(gap);
        };
        for z in a.iter().chain(b.iter()) {
            if visited.insert(z) {
                term(z);
            }
        }
        let outside_operands = a
            .iter()
            .chain(b.iter())
            .filter(|id| !vocab.contains(id))
            .collect::<HashSet<_>>()
            .len();

        let mut neighbours: Vec<ClassId> = Vec::new();
        for x in a.iter().chain(b.iter()) {
            if let ClassId::Known(c) = x {
                for &(n, _) in self.view.neighbors(*c) {
                    neighbours.push(ClassId::Known(n));
                }
            }
        }
        let mut seen_neighbours = HashSet::new();
        let mut visited_count = visited.len();
        for z in &neighbours {
            if visited.contains(z) || !vocab.contains(z) || !seen_neighbours.insert(z) {
                continue;
            }
            visited_count += 1;
            term(z);
        }

        let universe = vocab.len() + outside_operands;
        if vocab.is_open() || universe > visited_count {
            let gap = (self.generic_star(a) - self.generic_star(b)).abs();
            sup = sup.max(gap);
        }
        DistanceValue::from_sup(sup)
    }

    /// `min cd(x, y)` over `x ∈ lhs`, `y ∈ rhs`.
    pub fn cd_sets<'s, L, R>(
        &self,
        lhs: L,
        rhs: R,
        vocab: &VocabularyView,
    ) -> Result<DistanceValue, MetricError>
    where
        L: IntoIterator<Item = &'s CanonicalWordSet>,
        R: IntoIterator<Item = &'s CanonicalWordSet>,
    {
        let lhs = distinct(lhs);
        let rhs = distinct(rhs);
        if lhs.is_empty() || rhs.is_empty() {
            return Err(MetricError::EmptyRetrievalSet);
        }
        let mut best: Option<DistanceValue> = None;
        for x in &lhs {
            for y in &rhs {
                if x.is_empty() || y.is_empty() {
                    return Err(MetricError::EmptyOperand);
                }
                let d = self.cd_extended(x, y, vocab);
                if d.exact_zero {
                    return Ok(d);
                }
                if best.is_none_or(|b| d.value < b.value) {
                    best = Some(d);
                }
            }
        }
        Ok(best.expect("operands are nonempty"))
    }
}

fn distinct<'s>(sets: impl IntoIterator<Item = &'s CanonicalWordSet>) -> Vec<&'s CanonicalWordSet> {
    let mut out: Vec<&CanonicalWordSet> = sets.into_iter().collect();
    out.sort_by(|a, b| a.class_ids.cmp(&b.class_ids));
    out.dedup_by(|a, b| a.class_ids == b.class_ids);
    out
}

/// `cog_star` under the base view with mean normalization.
pub fn cog_star(
    lex: &Lexicon,
    z: &ClassId,
    set: &CanonicalWordSet,
    ctx: Option<&str>,
) -> Result<f64, MetricError> {
    CognitiveMetric::new(lex, ctx, Normalization::Mean)?.cog_star(z, set)
}

/// `cd` with mean normalization under the vocabulary's context.
pub fn cd(
    lex: &Lexicon,
    a: &CanonicalWordSet,
    b: &CanonicalWordSet,
    vocab: &VocabularyView,
) -> Result<DistanceValue, MetricError> {
    CognitiveMetric::new(lex, vocab.context(), Normalization::Mean)?.cd(a, b, vocab)
}
