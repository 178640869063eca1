//! The retrieval topology generated by a finite query family, and
//! cognitive connectedness.
//!
//! Two enumerations are provided on purpose. [`boolean_retrievals`] lists
//! every finite union of finite intersections of retrieval sets, working on
//! the Venn atoms of the generators. [`enumerate_topology`] closes the
//! generators (plus `∅` and `DS`) under pairwise `∩`/`∪` on document masks.
//! They agree up to the adjoined whole space.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::docset::DocSet;
use crate::index::Index;
use crate::query::QueryAst;
use crate::retrieval::{check_epsilon, retrieve, RetrievalError, MAX_GENERATORS};

/// Largest document space [`enumerate_topology`] will close exhaustively.
pub const MAX_TOPOLOGY_DOCS: usize = 12;

/// Cap on the size of any enumerated family.
const MAX_FAMILY: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyFamily {
    pub generators: Vec<Vec<String>>,
    pub opens: Vec<Vec<String>>,
    #[serde(skip)]
    pub generator_sets: Vec<DocSet>,
    #[serde(skip)]
    pub open_sets: Vec<DocSet>,
}

fn generator_sets(
    index: &Index,
    queries: &[QueryAst],
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<Vec<DocSet>, RetrievalError> {
    check_epsilon(epsilon)?;
    if queries.len() > MAX_GENERATORS {
        return Err(RetrievalError::TooManyGenerators(queries.len()));
    }
    queries
        .iter()
        .map(|q| Ok(retrieve(index, q, epsilon, ctx)?.positions))
        .collect()
}

/// Every set expressible as `⋃_j ⋂_i f(q_ij)` over `queries`, including `∅`.
pub fn boolean_retrievals(
    index: &Index,
    queries: &[QueryAst],
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<Vec<DocSet>, RetrievalError> {
    let gens = generator_sets(index, queries, epsilon, ctx)?;
    dnf_family(&gens, index.len())
}

/// DNF enumeration over generator sets of a document space of size `n`.
pub fn dnf_family(gens: &[DocSet], n: usize) -> Result<Vec<DocSet>, RetrievalError> {
    if gens.len() > MAX_GENERATORS {
        return Err(RetrievalError::TooManyGenerators(gens.len()));
    }
    // Venn atoms: documents grouped by which generators contain them.
    let mut atom_of_signature: HashMap<u8, usize> = HashMap::new();
    let mut atoms: Vec<(u8, Vec<u32>)> = Vec::new();
    for doc in 0..n as u32 {
        let sig = gens
            .iter()
            .enumerate()
            .filter(|(_, g)| g.contains(doc))
            .fold(0u8, |s, (i, _)| s | (1 << i));
        if sig == 0 {
            continue;
        }
        let slot = *atom_of_signature.entry(sig).or_insert_with(|| {
            atoms.push((sig, Vec::new()));
            atoms.len() - 1
        });
        atoms[slot].1.push(doc);
    }

    // One intersection term per nonempty generator subset, as an atom mask.
    let mut terms: BTreeSet<u64> = BTreeSet::new();
    for subset in 1u8..(1u16 << gens.len()) as u8 {
        let mask = atoms
            .iter()
            .enumerate()
            .filter(|(_, (sig, _))| sig & subset == subset)
            .fold(0u64, |m, (i, _)| m | (1 << i));
        terms.insert(mask);
    }

    let mut family: HashSet<u64> = HashSet::from([0]);
    let mut frontier: Vec<u64> = vec![0];
    while let Some(current) = frontier.pop() {
        for &t in &terms {
            let next = current | t;
            if family.insert(next) {
                if family.len() > MAX_FAMILY {
                    return Err(RetrievalError::TooLarge(format!(
                        "more than {MAX_FAMILY} Boolean retrievals"
                    )));
                }
                frontier.push(next);
            }
        }
    }

    let mut out: Vec<DocSet> = family
        .into_iter()
        .map(|mask| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .flat_map(|(_, (_, docs))| docs.iter().copied())
                .collect()
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Closure of the generated subbasis under finite `∩` and `∪`, with `∅` and `DS`.
pub fn enumerate_topology(
    index: &Index,
    queries: &[QueryAst],
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<TopologyFamily, RetrievalError> {
    if index.len() > MAX_TOPOLOGY_DOCS {
        return Err(RetrievalError::TooLarge(format!(
            "{} documents exceed the limit of {MAX_TOPOLOGY_DOCS}",
            index.len()
        )));
    }
    let gens = generator_sets(index, queries, epsilon, ctx)?;
    let open_sets = closure_family(&gens, index.len())?;
    Ok(TopologyFamily {
        generators: gens.iter().map(|g| index.ids(g)).collect(),
        opens: open_sets.iter().map(|o| index.ids(o)).collect(),
        generator_sets: gens,
        open_sets,
    })
}

/// Pairwise `∩`/`∪` fixpoint over bitmasks of a space with at most 64 documents.
pub fn closure_family(gens: &[DocSet], n: usize) -> Result<Vec<DocSet>, RetrievalError> {
    if n > 64 {
        return Err(RetrievalError::TooLarge(format!(
            "{n} documents exceed the bitmask closure limit"
        )));
    }
    let to_mask = |s: &DocSet| s.iter().fold(0u64, |m, d| m | (1 << d));
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut family: BTreeSet<u64> = gens.iter().map(to_mask).collect();
    family.insert(0);
    family.insert(full);
    loop {
        let members: Vec<u64> = family.iter().copied().collect();
        let mut grew = false;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                grew |= family.insert(a & b);
                grew |= family.insert(a | b);
            }
        }
        if family.len() > MAX_FAMILY {
            return Err(RetrievalError::TooLarge(format!(
                "more than {MAX_FAMILY} open sets"
            )));
        }
        if !grew {
            break;
        }
    }
    let mut out: Vec<DocSet> = family
        .into_iter()
        .map(|m| (0..n as u32).filter(|d| m & (1 << d) != 0).collect())
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Connectedness {
    pub connected: bool,
    /// A splitting pair of opens when disconnected.
    pub witness: Option<(Vec<String>, Vec<String>)>,
}

/// Whether `docs` cannot be written as `G ∪ H` for opens `G`, `H` that both
/// meet `docs` and share no pair of documents coinciding under `ctx`.
pub fn is_cognitively_connected(
    index: &Index,
    docs: &DocSet,
    queries: &[QueryAst],
    epsilon: f64,
    ctx: Option<&str>,
) -> Result<Connectedness, RetrievalError> {
    let topology = enumerate_topology(index, queries, epsilon, ctx)?;
    let layout = index.layout_for(ctx)?;
    let inside: Vec<&DocSet> = topology
        .open_sets
        .iter()
        .filter(|o| !o.is_empty() && o.is_subset(docs))
        .collect();
    let coincide = |g: &DocSet, h: &DocSet| {
        g.iter().any(|a| {
            h.iter()
                .any(|b| layout.partition_of(a) == layout.partition_of(b))
        })
    };
    for (i, g) in inside.iter().enumerate() {
        for h in &inside[i..] {
            if g.union(h) == *docs && !coincide(g, h) {
                return Ok(Connectedness {
                    connected: false,
                    witness: Some((index.ids(g), index.ids(h))),
                });
            }
        }
    }
    Ok(Connectedness {
        connected: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> DocSet {
        v.iter().copied().collect()
    }

    #[test]
    fn dnf_two_overlapping_generators() {
        let gens = [set(&[0, 1]), set(&[1, 2])];
        let family = dnf_family(&gens, 3).unwrap();
        let expected = vec![
            set(&[]),
            set(&[0, 1]),
            set(&[0, 1, 2]),
            set(&[1]),
            set(&[1, 2]),
        ];
        assert_eq!(family, expected);
    }

    #[test]
    fn dnf_edge_cases() {
        assert_eq!(dnf_family(&[], 4).unwrap(), vec![set(&[])]);
        assert_eq!(
            dnf_family(&[set(&[2])], 4).unwrap(),
            vec![set(&[]), set(&[2])]
        );
        let too_many = vec![set(&[0]); MAX_GENERATORS + 1];
        assert!(matches!(
            dnf_family(&too_many, 2),
            Err(RetrievalError::TooManyGenerators(7))
        ));
    }

    #[test]
    fn closure_adds_empty_and_whole_space() {
        assert_eq!(
            closure_family(&[], 3).unwrap(),
            vec![set(&[]), set(&[0, 1, 2])]
        );
        let gens = [set(&[0, 1]), set(&[1, 2])];
        let mut expected = dnf_family(&gens, 3).unwrap();
        expected.push(set(&[0, 1, 2]));
        expected.sort();
        expected.dedup();
        assert_eq!(closure_family(&gens, 3).unwrap(), expected);
    }

    #[test]
    fn closed_generators_stay_put() {
        let gens = [set(&[0]), set(&[0, 1])];
        assert_eq!(
            closure_family(&gens, 3).unwrap(),
            vec![set(&[]), set(&[0]), set(&[0, 1]), set(&[0, 1, 2])]
        );
    }
}
