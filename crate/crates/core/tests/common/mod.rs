//! Brute-force reference implementation built straight from the lexicon file.
//!
//! Nothing here calls into the metric, index or retrieval code: classes are
//! rebuilt from the raw file, every distance is a full sup over the whole
//! vocabulary, and retrieval is a linear scan over documents.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use cogtop_core::lexicon::LexiconFile;
use cogtop_core::QueryAst;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Class(usize),
    Word(String),
}

pub type Set = BTreeSet<Key>;

pub struct Oracle {
    class_of: HashMap<String, usize>,
    /// Class labels in use after context fusion.
    classes: BTreeSet<usize>,
    dist: BTreeMap<(usize, usize), f64>,
    default: f64,
}

impl Oracle {
    pub fn new(file: &LexiconFile, ctx: Option<&str>) -> Self {
        let mut class_of: HashMap<String, usize> = HashMap::new();
        let mut next = 0;
        for members in &file.classes {
            for w in members {
                class_of.insert(w.to_lowercase(), next);
            }
            next += 1;
        }
        let mut mention = |w: &str, class_of: &mut HashMap<String, usize>| {
            if !class_of.contains_key(w) {
                class_of.insert(w.to_string(), next);
                next += 1;
            }
        };
        for p in &file.pairs {
            mention(&p.0.to_lowercase(), &mut class_of);
            mention(&p.1.to_lowercase(), &mut class_of);
        }
        for c in file.contexts.values() {
            for w in c.merges.iter().flatten() {
                mention(&w.to_lowercase(), &mut class_of);
            }
            for p in &c.pair_overrides {
                mention(&p.0.to_lowercase(), &mut class_of);
                mention(&p.1.to_lowercase(), &mut class_of);
            }
        }
        let n = next;
        let mut base = BTreeMap::new();
        for p in &file.pairs {
            let (a, b) = (class_of[&p.0.to_lowercase()], class_of[&p.1.to_lowercase()]);
            base.insert((a.min(b), a.max(b)), p.2);
        }
        let base_cog = |a: usize, b: usize| -> f64 {
            if a == b {
                0.0
            } else {
                *base
                    .get(&(a.min(b), a.max(b)))
                    .unwrap_or(&file.default_distance)
            }
        };

        // Fuse classes by repeated relabelling to the smallest member.
        let mut label: Vec<usize> = (0..n).collect();
        let overlay = ctx.map(|c| &file.contexts[c]);
        if let Some(overlay) = overlay {
            loop {
                let mut changed = false;
                for group in &overlay.merges {
                    let ids: Vec<usize> = group
                        .iter()
                        .map(|w| label[class_of[&w.to_lowercase()]])
                        .collect();
                    let min = *ids.iter().min().unwrap();
                    for l in label.iter_mut() {
                        if ids.contains(l) && *l != min {
                            *l = min;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        let classes: BTreeSet<usize> = label.iter().copied().collect();
        let mut dist = BTreeMap::new();
        for &a in &classes {
            for &b in &classes {
                if a < b {
                    let mut best = f64::INFINITY;
                    for x in (0..n).filter(|&x| label[x] == a) {
                        for y in (0..n).filter(|&y| label[y] == b) {
                            best = best.min(base_cog(x, y));
                        }
                    }
                    dist.insert((a, b), best);
                }
            }
        }
        if let Some(overlay) = overlay {
            for p in &overlay.pair_overrides {
                let a = label[class_of[&p.0.to_lowercase()]];
                let b = label[class_of[&p.1.to_lowercase()]];
                dist.insert((a.min(b), a.max(b)), p.2);
            }
        }
        let class_of = class_of.into_iter().map(|(w, c)| (w, label[c])).collect();
        Self {
            class_of,
            classes,
            dist,
            default: file.default_distance,
        }
    }

    pub fn key(&self, word: &str) -> Key {
        let w = word.to_lowercase();
        match self.class_of.get(&w) {
            Some(&c) => Key::Class(c),
            None => Key::Word(w),
        }
    }

    pub fn canon<S: AsRef<str>>(&self, words: &[S]) -> Set {
        words.iter().map(|w| self.key(w.as_ref())).collect()
    }

    pub fn cog(&self, a: &Key, b: &Key) -> f64 {
        if a == b {
            return 0.0;
        }
        match (a, b) {
            (Key::Class(x), Key::Class(y)) => self.dist[&(*x.min(y), *x.max(y))],
            _ => self.default,
        }
    }

    pub fn cog_star(&self, z: &Key, set: &Set) -> f64 {
        set.iter().map(|y| self.cog(z, y)).sum::<f64>() / set.len() as f64
    }

    /// Every lexicon class, the given extra keys, and one word nobody uses.
    pub fn universe<'a>(&self, extra: impl IntoIterator<Item = &'a Set>) -> Set {
        let mut u: Set = self.classes.iter().map(|&c| Key::Class(c)).collect();
        for s in extra {
            u.extend(s.iter().cloned());
        }
        u.insert(Key::Word("\u{0}unseen".to_string()));
        u
    }

    pub fn cd(&self, a: &Set, b: &Set, universe: &Set) -> f64 {
        assert!(!a.is_empty() && !b.is_empty());
        if a == b {
            return 0.0;
        }
        let mut sup: f64 = 0.0;
        for z in universe.iter().chain(a).chain(b) {
            sup = sup.max((self.cog_star(z, a) - self.cog_star(z, b)).abs());
        }
        sup
    }
}

/// A corpus seen through the oracle.
pub struct Scan {
    pub oracle: Oracle,
    pub ids: Vec<String>,
    pub docs: Vec<Set>,
    pub universe: Set,
}

impl Scan {
    /// `docs` are `(id, tokens)` pairs.
    pub fn new(file: &LexiconFile, ctx: Option<&str>, docs: &[(String, Vec<String>)]) -> Self {
        let oracle = Oracle::new(file, ctx);
        let mut sorted: Vec<&(String, Vec<String>)> = docs.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let sets: Vec<Set> = sorted.iter().map(|(_, w)| oracle.canon(w)).collect();
        let universe = oracle.universe(&sets);
        Self {
            ids: sorted.iter().map(|(id, _)| id.clone()).collect(),
            docs: sets,
            universe,
            oracle,
        }
    }

    pub fn all(&self) -> BTreeSet<usize> {
        (0..self.docs.len()).collect()
    }

    pub fn cd(&self, a: &Set, b: &Set) -> f64 {
        let universe = self.oracle.universe([&self.universe, a, b]);
        self.oracle.cd(a, b, &universe)
    }

    pub fn ball<S: AsRef<str>>(&self, words: &[S], eps: f64) -> BTreeSet<usize> {
        let q = self.oracle.canon(words);
        (0..self.docs.len())
            .filter(|&d| self.cd(&q, &self.docs[d]) < eps)
            .collect()
    }

    pub fn ids(&self, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&d| self.ids[d].clone()).collect()
    }

    /// Structural evaluation with a radius per leaf position.
    pub fn eval(&self, ast: &QueryAst, radius: &dyn Fn(usize) -> f64) -> BTreeSet<usize> {
        let mut leaf = 0;
        self.eval_node(ast, radius, &mut leaf)
    }

    fn eval_node(
        &self,
        ast: &QueryAst,
        radius: &dyn Fn(usize) -> f64,
        leaf: &mut usize,
    ) -> BTreeSet<usize> {
        let all = self.all();
        match ast {
            QueryAst::Elementary(words) => {
                let eps = radius(*leaf);
                *leaf += 1;
                self.ball(words, eps)
            }
            QueryAst::And(l, r) => {
                let l = self.eval_node(l, radius, leaf);
                l.intersection(&self.eval_node(r, radius, leaf))
                    .copied()
                    .collect()
            }
            QueryAst::Or(l, r) => {
                let l = self.eval_node(l, radius, leaf);
                l.union(&self.eval_node(r, radius, leaf)).copied().collect()
            }
            QueryAst::Not(c) => all
                .difference(&self.eval_node(c, radius, leaf))
                .copied()
                .collect(),
            QueryAst::Implies(l, r) => {
                let l = self.eval_node(l, radius, leaf);
                let r = self.eval_node(r, radius, leaf);
                all.iter()
                    .filter(|d| !l.contains(d) || r.contains(d))
                    .copied()
                    .collect()
            }
            QueryAst::Iff(l, r) => {
                let l = self.eval_node(l, radius, leaf);
                let r = self.eval_node(r, radius, leaf);
                all.iter()
                    .filter(|d| l.contains(d) == r.contains(d))
                    .copied()
                    .collect()
            }
        }
    }
}

/// Every union of intersections of `gens`, plus the empty set, by brute closure.
pub fn closure(gens: &[BTreeSet<usize>], whole: &BTreeSet<usize>) -> BTreeSet<BTreeSet<usize>> {
    let mut family: BTreeSet<BTreeSet<usize>> = gens.iter().cloned().collect();
    family.insert(BTreeSet::new());
    family.insert(whole.clone());
    loop {
        let snapshot: Vec<BTreeSet<usize>> = family.iter().cloned().collect();
        let before = family.len();
        for a in &snapshot {
            for b in &snapshot {
                family.insert(a.intersection(b).copied().collect());
                family.insert(a.union(b).copied().collect());
            }
        }
        if family.len() == before {
            return family;
        }
    }
}
