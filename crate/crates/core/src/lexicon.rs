//! Word-level cognitive similarity.
//!
//! A [`Lexicon`] groups words into synonym classes and assigns a distance
//! in `[0, 1]` to every pair of classes. Distance zero is reserved for
//! class co-membership, so two words "cognitively coincide" exactly when
//! they land in the same class. Pairs that are not listed explicitly sit at
//! `default_distance`.
//!
//! Contexts are overlays: a context may fuse several classes into one and
//! override pair values. Every context view is resolved and validated at
//! load time, so lookups never mutate anything.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default distance between classes with no explicit pair entry.
pub const DEFAULT_DISTANCE: f64 = 1.0;

/// Absolute rounding allowance for the load-time triangle check.
pub const TRIANGLE_TOLERANCE: f64 = 1e-12;

/// Similarity threshold below which quantized provider distances snap to zero.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("lexicon read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon validation error: {0}")]
    Validation(String),
    #[error("unknown context `{0}`")]
    UnknownContext(String),
}

/// Serialized lexicon, exactly as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconFile {
    #[serde(default)]
    pub classes: Vec<Vec<String>>,
    #[serde(default)]
    pub pairs: Vec<PairEntry>,
    #[serde(default = "default_distance")]
    pub default_distance: f64,
    #[serde(default)]
    pub contexts: BTreeMap<String, ContextFile>,
}

fn default_distance() -> f64 {
    DEFAULT_DISTANCE
}

impl Default for LexiconFile {
    fn default() -> Self {
        Self {
            classes: Vec::new(),
            pairs: Vec::new(),
            default_distance: DEFAULT_DISTANCE,
            contexts: BTreeMap::new(),
        }
    }
}

/// `["w1", "w2", value]`: one representative word per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry(pub String, pub String, pub f64);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextFile {
    #[serde(default)]
    pub merges: Vec<Vec<String>>,
    #[serde(default)]
    pub pair_overrides: Vec<PairEntry>,
}

/// Identifier of a synonym class.
///
/// Classes declared by the lexicon are numbered; words the lexicon has never
/// seen form their own singleton class keyed by the word itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassId {
    Known(u32),
    Unknown(String),
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassId::Known(id) => write!(f, "#{id}"),
            ClassId::Unknown(word) => f.write_str(word),
        }
    }
}

/// A deduplicated, sorted set of class ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalWordSet {
    pub class_ids: Vec<ClassId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

impl CanonicalWordSet {
    pub fn new(ids: impl IntoIterator<Item = ClassId>, context: Option<String>) -> Self {
        let mut class_ids: Vec<ClassId> = ids.into_iter().collect();
        class_ids.sort();
        class_ids.dedup();
        Self { class_ids, context }
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.class_ids.binary_search(id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassId> {
        self.class_ids.iter()
    }

    /// Same classes, ignoring the context tag.
    pub fn same_classes(&self, other: &Self) -> bool {
        self.class_ids == other.class_ids
    }
}

/// One resolved view of the class structure: the base lexicon or a context.
#[derive(Debug, Clone)]
pub(crate) struct View {
    /// Base class id -> view class id. Fused groups take their smallest member id.
    remap: Vec<u32>,
    /// Sorted distinct view class ids.
    classes: Vec<u32>,
    pairs: HashMap<(u32, u32), f64>,
    neighbors: HashMap<u32, Vec<(u32, f64)>>,
}

impl View {
    fn new(remap: Vec<u32>, pairs: HashMap<(u32, u32), f64>) -> Self {
        let mut classes = remap.clone();
        classes.sort_unstable();
        classes.dedup();
        let mut neighbors: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for (&(a, b), &v) in &pairs {
            neighbors.entry(a).or_default().push((b, v));
            neighbors.entry(b).or_default().push((a, v));
        }
        for list in neighbors.values_mut() {
            list.sort_by_key(|&(c, _)| c);
        }
        Self {
            remap,
            classes,
            pairs,
            neighbors,
        }
    }

    pub(crate) fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub(crate) fn neighbors(&self, class: u32) -> &[(u32, f64)] {
        self.neighbors.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    fn pair(&self, a: u32, b: u32) -> Option<f64> {
        self.pairs.get(&ordered(a, b)).copied()
    }
}

fn ordered(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Validated, immutable lexicon.
#[derive(Debug, Clone)]
pub struct Lexicon {
    source: LexiconFile,
    word_class: HashMap<String, u32>,
    class_words: Vec<Vec<String>>,
    default_distance: f64,
    base: View,
    contexts: BTreeMap<String, View>,
}

impl Lexicon {
    /// Reads and validates a lexicon file.
    pub fn load<R: Read>(source: R) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_reader(source)?;
        Self::from_file(file)
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    /// A lexicon with no classes: every distinct word sits at the default distance.
    pub fn empty() -> Self {
        Self::from_file(LexiconFile::default()).expect("empty lexicon is valid")
    }

    pub fn from_file(file: LexiconFile) -> Result<Self, LexiconError> {
        let d = file.default_distance;
        if !(d > 0.0 && d <= 1.0) {
            return Err(invalid(format!("default_distance {d} must lie in (0, 1]")));
        }

        let mut word_class: HashMap<String, u32> = HashMap::new();
        let mut class_words: Vec<Vec<String>> = Vec::new();

        for (i, class) in file.classes.iter().enumerate() {
            if class.is_empty() {
                return Err(invalid(format!("class {i} is empty")));
            }
            let id = class_words.len() as u32;
            let mut members = Vec::new();
            for raw in class {
                let word = normalize_word(raw)?;
                if let Some(&prev) = word_class.get(&word) {
                    if prev == id {
                        continue;
                    }
                    return Err(invalid(format!(
                        "word `{word}` appears in classes {prev} and {id}"
                    )));
                }
                word_class.insert(word.clone(), id);
                members.push(word);
            }
            class_words.push(members);
        }

        // Words mentioned only by pair entries or contexts become singleton classes.
        let mut intern = |raw: &str| -> Result<u32, LexiconError> {
            let word = normalize_word(raw)?;
            if let Some(&id) = word_class.get(&word) {
                return Ok(id);
            }
            let id = class_words.len() as u32;
            word_class.insert(word.clone(), id);
            class_words.push(vec![word]);
            Ok(id)
        };

        let mut base_entries = Vec::with_capacity(file.pairs.len());
        for PairEntry(x, y, v) in &file.pairs {
            base_entries.push((intern(x)?, intern(y)?, *v, x.clone(), y.clone()));
        }
        let mut context_entries = Vec::new();
        for (name, ctx) in &file.contexts {
            let mut merges = Vec::new();
            for group in &ctx.merges {
                let ids = group
                    .iter()
                    .map(|w| intern(w))
                    .collect::<Result<Vec<_>, _>>()?;
                merges.push(ids);
            }
            let mut overrides = Vec::new();
            for PairEntry(x, y, v) in &ctx.pair_overrides {
                overrides.push((intern(x)?, intern(y)?, *v, x.clone(), y.clone()));
            }
            context_entries.push((name.clone(), merges, overrides));
        }

        let n = class_words.len();
        let identity: Vec<u32> = (0..n as u32).collect();
        let mut base_pairs = HashMap::new();
        for (a, b, v, x, y) in base_entries {
            insert_pair(&mut base_pairs, a, b, v, &x, &y, None)?;
        }
        let base = View::new(identity, base_pairs);
        validate_triangle(&base, d, None)?;

        let mut contexts = BTreeMap::new();
        for (name, merges, overrides) in context_entries {
            let view = build_context_view(&base, n, d, &merges, &overrides, &name)?;
            validate_triangle(&view, d, Some(&name))?;
            contexts.insert(name, view);
        }

        Ok(Self {
            source: file,
            word_class,
            class_words,
            default_distance: d,
            base,
            contexts,
        })
    }

    pub fn source(&self) -> &LexiconFile {
        &self.source
    }

    pub fn default_distance(&self) -> f64 {
        self.default_distance
    }

    pub fn class_count(&self) -> usize {
        self.class_words.len()
    }

    pub fn context_ids(&self) -> impl Iterator<Item = &str> {
        self.contexts.keys().map(String::as_str)
    }

    pub fn has_context(&self, ctx: &str) -> bool {
        self.contexts.contains_key(ctx)
    }

    /// Words of a base class.
    pub fn class_members(&self, class: u32) -> &[String] {
        self.class_words
            .get(class as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All words declared by the lexicon, sorted.
    pub fn words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.word_class.keys().map(String::as_str).collect();
        words.sort_unstable();
        words
    }

    pub(crate) fn view(&self, ctx: Option<&str>) -> Result<&View, LexiconError> {
        match ctx {
            None => Ok(&self.base),
            Some(name) => self
                .contexts
                .get(name)
                .ok_or_else(|| LexiconError::UnknownContext(name.to_string())),
        }
    }

    /// Class of a single word under a context.
    pub fn class_of(&self, word: &str, ctx: Option<&str>) -> Result<ClassId, LexiconError> {
        let view = self.view(ctx)?;
        Ok(self.class_in(view, word))
    }

    fn class_in(&self, view: &View, word: &str) -> ClassId {
        let lowered;
        let word = if word.chars().any(char::is_uppercase) {
            lowered = word.to_lowercase();
            lowered.as_str()
        } else {
            word
        };
        match self.word_class.get(word) {
            Some(&base) => ClassId::Known(view.remap[base as usize]),
            None => ClassId::Unknown(word.to_string()),
        }
    }

    /// Word-level cognitive distance.
    pub fn cog(&self, x: &str, y: &str, ctx: Option<&str>) -> Result<f64, LexiconError> {
        let view = self.view(ctx)?;
        let cx = self.class_in(view, x);
        let cy = self.class_in(view, y);
        Ok(self.class_distance_in(view, &cx, &cy))
    }

    /// Distance between two classes of the same view.
    pub fn class_distance(
        &self,
        a: &ClassId,
        b: &ClassId,
        ctx: Option<&str>,
    ) -> Result<f64, LexiconError> {
        Ok(self.class_distance_in(self.view(ctx)?, a, b))
    }

    pub(crate) fn class_distance_in(&self, view: &View, a: &ClassId, b: &ClassId) -> f64 {
        if a == b {
            return 0.0;
        }
        match (a, b) {
            (ClassId::Known(x), ClassId::Known(y)) => {
                view.pair(*x, *y).unwrap_or(self.default_distance)
            }
            _ => self.default_distance,
        }
    }

    /// Maps words to their class ids; unknown words become singleton classes.
    pub fn canonicalize<S: AsRef<str>>(
        &self,
        words: &[S],
        ctx: Option<&str>,
    ) -> Result<CanonicalWordSet, LexiconError> {
        let view = self.view(ctx)?;
        Ok(CanonicalWordSet::new(
            words.iter().map(|w| self.class_in(view, w.as_ref())),
            ctx.map(str::to_string),
        ))
    }

    /// Re-expresses a base-view canonical set under a context.
    pub fn project(
        &self,
        set: &CanonicalWordSet,
        ctx: Option<&str>,
    ) -> Result<CanonicalWordSet, LexiconError> {
        let view = self.view(ctx)?;
        Ok(self.project_in(view, set, ctx))
    }

    pub(crate) fn project_in(
        &self,
        view: &View,
        set: &CanonicalWordSet,
        ctx: Option<&str>,
    ) -> CanonicalWordSet {
        CanonicalWordSet::new(
            set.class_ids.iter().map(|id| match id {
                ClassId::Known(base) => ClassId::Known(view.remap[*base as usize]),
                other => other.clone(),
            }),
            ctx.map(str::to_string),
        )
    }

    /// Symmetric set similarity: equal canonical forms.
    pub fn sets_cognitively_similar<S: AsRef<str>>(
        &self,
        a: &[S],
        b: &[S],
        ctx: Option<&str>,
    ) -> Result<bool, LexiconError> {
        Ok(self.canonicalize(a, ctx)? == self.canonicalize(b, ctx)?)
    }

    /// One-directional variant: every word of `a` has a class-mate in `b`.
    pub fn sets_cognitively_subsumed<S: AsRef<str>>(
        &self,
        a: &[S],
        b: &[S],
        ctx: Option<&str>,
    ) -> Result<bool, LexiconError> {
        let ca = self.canonicalize(a, ctx)?;
        let cb = self.canonicalize(b, ctx)?;
        let subsumed = ca.iter().all(|id| cb.contains(id));
        Ok(subsumed)
    }

    /// Every known class id of a view, as [`ClassId`]s.
    pub fn view_classes(&self, ctx: Option<&str>) -> Result<Vec<ClassId>, LexiconError> {
        Ok(self
            .view(ctx)?
            .classes()
            .iter()
            .map(|&c| ClassId::Known(c))
            .collect())
    }
}

fn invalid(msg: String) -> LexiconError {
    LexiconError::Validation(msg)
}

fn normalize_word(raw: &str) -> Result<String, LexiconError> {
    let word = raw.trim().to_lowercase();
    if word.is_empty() {
        return Err(invalid("empty word".to_string()));
    }
    if word.chars().any(char::is_whitespace) {
        return Err(invalid(format!("`{word}` is not a single token")));
    }
    Ok(word)
}

fn insert_pair(
    pairs: &mut HashMap<(u32, u32), f64>,
    a: u32,
    b: u32,
    v: f64,
    x: &str,
    y: &str,
    ctx: Option<&str>,
) -> Result<(), LexiconError> {
    let place = ctx
        .map(|c| format!(" in context `{c}`"))
        .unwrap_or_default();
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(format!(
            "pair ({x}, {y}) = {v}{place} lies outside [0, 1]"
        )));
    }
    if a == b {
        if v == 0.0 {
            return Ok(());
        }
        return Err(invalid(format!(
            "pair ({x}, {y}){place} names one class but has nonzero value {v}"
        )));
    }
    if v == 0.0 {
        return Err(invalid(format!(
            "pair ({x}, {y}){place} is zero between distinct classes; merge them instead"
        )));
    }
    match pairs.insert(ordered(a, b), v) {
        Some(prev) if prev != v => Err(invalid(format!(
            "pair ({x}, {y}){place} given conflicting values {prev} and {v}"
        ))),
        _ => Ok(()),
    }
}

fn build_context_view(
    base: &View,
    n: usize,
    d: f64,
    merges: &[Vec<u32>],
    overrides: &[(u32, u32, f64, String, String)],
    name: &str,
) -> Result<View, LexiconError> {
    let mut uf = UnionFind::<u32>::new(n);
    for group in merges {
        for pair in group.windows(2) {
            uf.union(pair[0], pair[1]);
        }
    }
    // Representative of a fused group = its smallest base id.
    let mut smallest: HashMap<u32, u32> = HashMap::new();
    for c in 0..n as u32 {
        let root = uf.find(c);
        let e = smallest.entry(root).or_insert(c);
        *e = (*e).min(c);
    }
    let remap: Vec<u32> = (0..n as u32).map(|c| smallest[&uf.find(c)]).collect();
    let mut group_size: HashMap<u32, usize> = HashMap::new();
    for &v in &remap {
        *group_size.entry(v).or_default() += 1;
    }

    // Between view classes: min over member pairs, absent member pairs counting as `d`.
    let mut acc: HashMap<(u32, u32), (f64, usize)> = HashMap::new();
    for (&(a, b), &v) in &base.pairs {
        let (va, vb) = (remap[a as usize], remap[b as usize]);
        if va == vb {
            continue;
        }
        let e = acc.entry(ordered(va, vb)).or_insert((f64::INFINITY, 0));
        e.0 = e.0.min(v);
        e.1 += 1;
    }
    let mut pairs = HashMap::with_capacity(acc.len());
    for ((a, b), (min, count)) in acc {
        let members = group_size[&a] * group_size[&b];
        let v = if count < members { min.min(d) } else { min };
        pairs.insert((a, b), v);
    }
    for (a, b, v, x, y) in overrides {
        let (va, vb) = (remap[*a as usize], remap[*b as usize]);
        if !(0.0..=1.0).contains(v) {
            return Err(invalid(format!(
                "override ({x}, {y}) = {v} in context `{name}` lies outside [0, 1]"
            )));
        }
        if va == vb {
            if *v == 0.0 {
                continue;
            }
            return Err(invalid(format!(
                "override ({x}, {y}) in context `{name}` targets one fused class"
            )));
        }
        if *v == 0.0 {
            return Err(invalid(format!(
                "override ({x}, {y}) in context `{name}` is zero; use a merge"
            )));
        }
        pairs.insert(ordered(va, vb), *v);
    }
    Ok(View::new(remap, pairs))
}

/// Checks `cog(x, y) <= cog(x, z) + cog(z, y)` over every triple of view
/// classes, plus one virtual class standing for any word the lexicon does
/// not know (distance `d` to everything).
///
/// A failing triple always contains an explicit edge; the walk covers
/// explicit pairs and their neighbourhoods.
fn validate_triangle(view: &View, d: f64, ctx: Option<&str>) -> Result<(), LexiconError> {
    let place = ctx
        .map(|c| format!(" in context `{c}`"))
        .unwrap_or_default();
    let cog = |a: u32, b: u32| -> f64 {
        if a == b {
            0.0
        } else {
            view.pair(a, b).unwrap_or(d)
        }
    };
    let fail = |x: u32, y: u32, z: u32, lhs: f64, rhs: f64| {
        invalid(format!(
            "triangle inequality violated{place}: cog(#{x}, #{y}) = {lhs} > cog(#{x}, #{z}) + cog(#{z}, #{y}) = {rhs}"
        ))
    };

    // Explicit edges against every third class.
    for (&(x, y), &v) in &view.pairs {
        // Some class, at minimum the virtual unknown one, is adjacent to neither.
        if v > 2.0 * d {
            return Err(invalid(format!(
                "pair (#{x}, #{y}) = {v}{place} exceeds twice the default distance {d}"
            )));
        }
        let mut seen = HashSet::new();
        for &(z, _) in view.neighbors(x).iter().chain(view.neighbors(y)) {
            if z == x || z == y || !seen.insert(z) {
                continue;
            }
            let rhs = cog(x, z) + cog(z, y);
            if v > rhs + TRIANGLE_TOLERANCE {
                return Err(fail(x, y, z, v, rhs));
            }
        }
    }

    // Default edges (x, y) can only fail through a z explicitly tied to both.
    for &z in view.classes() {
        let nbrs = view.neighbors(z);
        for (i, &(x, vx)) in nbrs.iter().enumerate() {
            for &(y, vy) in &nbrs[i + 1..] {
                if vx + vy + TRIANGLE_TOLERANCE < d && view.pair(x, y).is_none() {
                    return Err(fail(x, y, z, d, vx + vy));
                }
            }
        }
    }
    Ok(())
}

/// Builds a class-quantized lexicon file from a continuous distance provider.
///
/// Distances below `threshold` snap to zero; the resulting zero edges are
/// fused by connected components. Between components the smallest member
/// distance is kept. The output still has to pass [`Lexicon::from_file`].
pub fn quantize_provider<F>(
    words: &[String],
    distance: F,
    threshold: f64,
    default_distance: f64,
) -> LexiconFile
where
    F: Fn(&str, &str) -> f64,
{
    let n = words.len();
    let mut uf = UnionFind::<usize>::new(n);
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = distance(&words[i], &words[j]).clamp(0.0, 1.0);
            dist[i][j] = v;
            dist[j][i] = v;
            if v < threshold {
                uf.union(i, j);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &root) in labels.iter().enumerate() {
        groups.entry(root).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let classes = groups
        .iter()
        .map(|g| g.iter().map(|&i| words[i].clone()).collect())
        .collect();
    let mut pairs = Vec::new();
    for (gi, a) in groups.iter().enumerate() {
        for b in &groups[gi + 1..] {
            let min = a
                .iter()
                .flat_map(|&i| b.iter().map(move |&j| (i, j)))
                .map(|(i, j)| dist[i][j])
                .fold(f64::INFINITY, f64::min);
            if min < default_distance {
                pairs.push(PairEntry(words[a[0]].clone(), words[b[0]].clone(), min));
            }
        }
    }
    LexiconFile {
        classes,
        pairs,
        default_distance,
        contexts: BTreeMap::new(),
    }
}
