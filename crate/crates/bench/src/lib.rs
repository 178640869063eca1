//! Shared inputs for the benchmarks.

use cogtop_core::synthetic::{self, Skew};
use cogtop_core::{Index, QueryAst};

/// Skewed corpus with `docs` documents over `partitions` distinct word sets.
pub fn skew(docs: usize, partitions: usize) -> (Skew, Index) {
    let skew = Skew::generate(7, docs, partitions);
    let index = skew.system.index().expect("skew corpus indexes");
    (skew, index)
}

/// Deterministic elementary queries drawn from the skew topics.
pub fn queries(skew: &Skew, n: usize) -> Vec<QueryAst> {
    let mut rng = synthetic::rng(11);
    (0..n)
        .map(|_| QueryAst::leaf(&skew.random_query(&mut rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_are_deterministic() {
        let (a, ia) = skew(500, 20);
        let (b, _) = skew(500, 20);
        assert_eq!(ia.len(), 500);
        assert_eq!(queries(&a, 5), queries(&b, 5));
    }
}
