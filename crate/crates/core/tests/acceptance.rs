//! Acceptance criteria 1-11, one line per criterion.
//!
//! Expected values come from the brute-force oracle in `common`, never from
//! the code under test.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cogtop_core::fixtures::{self, Fixture};
use cogtop_core::lexicon::LexiconFile;
use cogtop_core::synthetic::{self, Skew, System, Table};
use cogtop_core::{
    boolean_retrievals, check_sequence_convergence, enumerate_topology, evaluate, evaluate_with,
    parse_query, perturbation_magnitude, retrieve, retrieve_anchor, stability_check,
    stable_retrieve, CognitiveMetric, EvalParams, Index, Lexicon, Normalization, QueryAst, Scan,
    Verdict, VocabularyView,
};
use common::{closure, Oracle, Scan as OracleScan, Set};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(x: impl std::fmt::Display) -> String {
    x.to_string()
}

fn tokens(text: &str, stopwords: &[&str]) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(&t.as_str()))
        .collect()
}

fn fixture_file(f: &Fixture) -> LexiconFile {
    serde_json::from_str(f.lexicon_json).unwrap()
}

fn fixture_scan(f: &Fixture, ctx: Option<&str>) -> OracleScan {
    let stop: Vec<&str> = f
        .stopwords
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let docs: Vec<(String, Vec<String>)> = f
        .corpus()
        .unwrap()
        .into_iter()
        .map(|r| (r.id, tokens(&r.text, &stop)))
        .collect();
    OracleScan::new(&fixture_file(f), ctx, &docs)
}

fn system_scan(system: &System, ctx: Option<&str>) -> OracleScan {
    let docs: Vec<(String, Vec<String>)> = system
        .corpus
        .iter()
        .map(|r| (r.id.clone(), tokens(&r.text, &[])))
        .collect();
    OracleScan::new(&system.lexicon, ctx, &docs)
}

fn positions_to_set(index: &Index, ids: &[String]) -> BTreeSet<usize> {
    ids.iter()
        .map(|id| index.position(id).unwrap() as usize)
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let mut worst_gap: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = synthetic::rng(seed);
        for i in 0..100 {
            let table = if i % 2 == 0 {
                Table::Sparse
            } else {
                Table::Line
            };
            let classes = rng.gen_range(2..=10);
            let file = synthetic::random_lexicon(&mut rng, classes, table);
            let lex = Lexicon::from_file(file.clone()).map_err(e)?;
            let words: Vec<Vec<String>> = (0..3)
                .map(|_| synthetic::random_word_set(&mut rng, &file, 4))
                .collect();
            let sets: Vec<_> = words
                .iter()
                .map(|w| lex.canonicalize(w, None).unwrap())
                .collect();
            let vocab = VocabularyView::for_lexicon(
                &lex,
                sets.iter().flat_map(|s| s.iter().cloned()),
                None,
            )
            .map_err(e)?;
            let metric = CognitiveMetric::new(&lex, None, Normalization::Mean).map_err(e)?;
            let d = |x: usize, y: usize| metric.cd(&sets[x], &sets[y], &vocab).unwrap().value;
            let (ab, ba, ac, cb) = (d(0, 1), d(1, 0), d(0, 2), d(2, 1));
            ensure(ab >= 0.0 && ba >= 0.0, || {
                format!("seed {seed}: negative distance")
            })?;
            ensure(ab == ba, || {
                format!("seed {seed}: cd(A,B)={ab} cd(B,A)={ba}")
            })?;
            ensure(ab <= ac + cb + 1e-9, || {
                format!("seed {seed}: triangle {ab} > {ac} + {cb}")
            })?;

            let oracle = Oracle::new(&file, None);
            let osets: Vec<Set> = words.iter().map(|w| oracle.canon(w)).collect();
            let universe = oracle.universe(&osets);
            let want = oracle.cd(&osets[0], &osets[1], &universe);
            worst_gap = worst_gap.max((want - ab).abs());
            ensure((want - ab).abs() < 1e-12, || {
                format!("seed {seed}: cd = {ab}, oracle = {want}")
            })?;
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{cases} cases, max |cd - oracle| = {worst_gap:.1e}, {elapsed:.2?}"
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = synthetic::rng(2);
    let mut cases = 0;
    while cases < 500 {
        let classes = rng.gen_range(2..=10);
        let file = synthetic::random_lexicon(&mut rng, classes, Table::Sparse);
        let lex = Lexicon::from_file(file.clone()).map_err(e)?;
        let oracle = Oracle::new(&file, None);
        let vocab = VocabularyView::for_lexicon(&lex, [], None).map_err(e)?;
        let metric = CognitiveMetric::new(&lex, None, Normalization::Mean).map_err(e)?;
        for _ in 0..10 {
            let [a, b, c] = synthetic::equivalent_triple(&mut rng, &file, 4);
            ensure(
                oracle.canon(&a) == oracle.canon(&b) && oracle.canon(&b) == oracle.canon(&c),
                || "generator produced inequivalent sets".into(),
            )?;
            let canon = |w: &[String]| lex.canonicalize(w, None).unwrap();
            let (ca, cb, cc) = (canon(&a), canon(&b), canon(&c));
            let bc = metric.cd(&cb, &cc, &vocab).map_err(e)?;
            ensure(bc.is_zero() && bc.value == 0.0, || {
                format!("cd(B,C) = {}", bc.value)
            })?;
            ensure(metric.cd(&ca, &cb, &vocab).map_err(e)?.is_zero(), || {
                "cd(A,B) != 0".into()
            })?;
            let sim =
                |x: &[String], y: &[String]| lex.sets_cognitively_similar(x, y, None).unwrap();
            ensure(
                sim(&a, &a) && sim(&a, &b) && sim(&b, &a) && sim(&a, &c),
                || "similarity is not an equivalence on the triple".into(),
            )?;
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} equivalent triples, cd(B,C) exactly 0 in all"
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = synthetic::rng(3);
    let mut pairs_checked = 0;
    for corpus in 0..50 {
        let classes = rng.gen_range(3..=10);
        let docs = rng.gen_range(2..=100);
        let system = System::random(&mut rng, classes, docs);
        let index = system.index().map_err(e)?;
        let scan = system_scan(&system, None);
        let metric = index.metric(None).map_err(e)?;
        let vocab = index.vocabulary();

        let mut seen = BTreeSet::new();
        for p in index.partitions() {
            for d in p.docs.iter() {
                ensure(seen.insert(d), || {
                    format!("corpus {corpus}: doc {d} in two partitions")
                })?;
            }
        }
        ensure(seen.len() == index.len(), || {
            format!("corpus {corpus}: not covering")
        })?;

        for p in index.partitions() {
            let members: Vec<u32> = p.docs.iter().collect();
            for &x in &members {
                for &y in &members {
                    let (dx, dy) = (index.document(x), index.document(y));
                    ensure(
                        metric.cd(&dx.words, &dy.words, vocab).map_err(e)?.is_zero(),
                        || format!("corpus {corpus}: cd({}, {}) != 0", dx.id, dy.id),
                    )?;
                    ensure(scan.docs[x as usize] == scan.docs[y as usize], || {
                        format!("corpus {corpus}: oracle separates {} and {}", dx.id, dy.id)
                    })?;
                    pairs_checked += 1;
                }
            }
        }
        let reps: Vec<u32> = index
            .partitions()
            .iter()
            .map(|p| p.docs.as_slice()[0])
            .collect();
        for (i, &x) in reps.iter().enumerate() {
            for &y in &reps[i + 1..] {
                let (dx, dy) = (index.document(x), index.document(y));
                let got = metric.cd(&dx.words, &dy.words, vocab).map_err(e)?.value;
                let want = scan.cd(&scan.docs[x as usize], &scan.docs[y as usize]);
                ensure(got > 0.0 && want > 0.0, || {
                    format!("corpus {corpus}: representatives {} {} at 0", dx.id, dy.id)
                })?;
            }
        }
        let oracle_partitions: BTreeSet<&Set> = scan.docs.iter().collect();
        ensure(oracle_partitions.len() == index.partitions().len(), || {
            format!("corpus {corpus}: partition count differs from oracle")
        })?;
    }
    Ok(format!(
        "50 corpora, {pairs_checked} intra-partition pairs at exact 0"
    ))
}

fn criterion_4() -> Outcome {
    let mut pairs = 0;
    for f in fixtures::ALL {
        let index = f.index().map_err(e)?;
        let scan = fixture_scan(f, None);
        let parts = index.partitions();
        for (i, p) in parts.iter().enumerate() {
            for (j, q) in parts.iter().enumerate() {
                let pq = index.cd_sets(&p.docs, &q.docs, None).map_err(e)?;
                let qp = index.cd_sets(&q.docs, &p.docs, None).map_err(e)?;
                ensure(pq.value >= 0.0 && pq == qp, || {
                    format!("{}: asymmetric", f.name)
                })?;
                ensure(pq.is_zero() == (i == j), || {
                    format!("{}: Cd_P({}, {}) = {}", f.name, p.id, q.id, pq.value)
                })?;
                let want = p
                    .docs
                    .iter()
                    .flat_map(|x| q.docs.iter().map(move |y| (x, y)))
                    .map(|(x, y)| scan.cd(&scan.docs[x as usize], &scan.docs[y as usize]))
                    .fold(f64::INFINITY, f64::min);
                ensure((want - pq.value).abs() < 1e-12, || {
                    format!("{}: Cd_P = {}, oracle = {want}", f.name, pq.value)
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!(
        "{pairs} partition pairs over {} fixtures",
        fixtures::ALL.len()
    ))
}

fn fixture_words(f: &Fixture) -> Vec<String> {
    let file = fixture_file(f);
    let mut words: BTreeSet<String> = file.classes.iter().flatten().cloned().collect();
    words.insert("unheard".to_string());
    words.into_iter().collect()
}

fn random_fixture_query<R: Rng>(rng: &mut R, words: &[String]) -> Vec<String> {
    let k = rng.gen_range(1..=4.min(words.len()));
    (0..k)
        .map(|_| words[rng.gen_range(0..words.len())].clone())
        .collect()
}

fn criterion_5() -> Outcome {
    let mut rng = synthetic::rng(5);
    let mut checks = 0;
    for f in fixtures::ALL {
        let index = f.index().map_err(e)?;
        let words = fixture_words(f);
        let contexts: Vec<Option<&str>> = std::iter::once(None)
            .chain(f.contexts.iter().map(|c| Some(*c)))
            .collect();
        for i in 0..200 {
            let ctx = contexts[i % contexts.len()];
            let q = QueryAst::leaf(&random_fixture_query(&mut rng, &words));
            let a: f64 = rng.gen_range(0.001..0.999);
            let b: f64 = rng.gen_range(0.001..0.999);
            let (lo, hi) = (a.min(b), a.max(b));
            if lo == hi {
                continue;
            }
            let small = retrieve(&index, &q, lo, ctx).map_err(e)?;
            let large = retrieve(&index, &q, hi, ctx).map_err(e)?;
            ensure(small.positions.is_subset(&large.positions), || {
                format!("{}: f({q}, {lo}) not inside f({q}, {hi})", f.name)
            })?;
            let scan = fixture_scan(f, ctx);
            let want = scan.ball(q.words().unwrap(), lo);
            ensure(positions_to_set(&index, &small.doc_ids) == want, || {
                format!("{}: f({q}, {lo}) differs from oracle", f.name)
            })?;
            checks += 1;
        }
    }
    Ok(format!("{checks} (q, e1 < e2) pairs, inclusion exact"))
}

fn criterion_6() -> Outcome {
    let mut rng = synthetic::rng(6);
    let mut pairs = 0;
    while pairs < 100 {
        let classes = rng.gen_range(3..=10);
        let docs = rng.gen_range(2..=40);
        let system = System::random(&mut rng, classes, docs);
        let index = system.index().map_err(e)?;
        let doc = &system.corpus[rng.gen_range(0..system.corpus.len())];
        let base = tokens(&doc.text, &[]);
        let q1 = synthetic::synonym_substitution(&mut rng, &system.lexicon, &base);
        let q2 = synthetic::synonym_substitution(&mut rng, &system.lexicon, &base);
        let oracle = Oracle::new(&system.lexicon, None);
        ensure(oracle.canon(&q1) == oracle.canon(&q2), || {
            "pair is not equivalent".into()
        })?;
        let eps = rng.gen_range(0.001..0.999);
        let r1 = retrieve(&index, &QueryAst::leaf(&q1), eps, None).map_err(e)?;
        let r2 = retrieve(&index, &QueryAst::leaf(&q2), eps, None).map_err(e)?;
        if r1.is_empty() || r2.is_empty() {
            continue;
        }
        ensure(r1.exact_match && r2.exact_match, || {
            "missing exact match".into()
        })?;
        ensure(!r1.positions.intersection(&r2.positions).is_empty(), || {
            format!("{q1:?} and {q2:?} disjoint at {eps}")
        })?;
        pairs += 1;
    }
    Ok(format!(
        "{pairs} equivalent pairs, every intersection nonempty"
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = synthetic::rng(7);
    let mut asts = 0;
    let mut identities = 0;
    while asts < 320 {
        let classes = rng.gen_range(3..=9);
        let docs = rng.gen_range(5..=50);
        let system = System::random(&mut rng, classes, docs);
        let ctx = (system.has_context() && rng.gen_bool(0.3)).then_some("ctx");
        let index = system.index().map_err(e)?;
        let scan = system_scan(&system, ctx);
        let leaves: Vec<Vec<String>> = (0..4)
            .map(|_| synthetic::random_word_set(&mut rng, &system.lexicon, 3))
            .collect();
        for _ in 0..8 {
            let eps = rng.gen_range(0.01..0.99);
            let ast = synthetic::random_ast(&mut rng, &leaves, 5);
            let got = evaluate(&index, &ast, eps, ctx).map_err(e)?;
            let want = scan.eval(&ast, &|_| eps);
            ensure(positions_to_set(&index, &got.doc_ids) == want, || {
                format!(
                    "{ast} at {eps}: {:?} vs oracle {:?}",
                    got.doc_ids,
                    scan.ids(&want)
                )
            })?;
            asts += 1;

            // Each connective against its set-theoretic form, both sides from raw scans.
            let p = synthetic::random_ast(&mut rng, &leaves, 2);
            let q = synthetic::random_ast(&mut rng, &leaves, 2);
            let f = |a: &QueryAst| -> Result<BTreeSet<usize>, String> {
                let r = evaluate(&index, a, eps, ctx).map_err(e)?;
                Ok(positions_to_set(&index, &r.doc_ids))
            };
            let o = |a: &QueryAst| scan.eval(a, &|_| eps);
            let all = scan.all();
            let (fp, fq) = (o(&p), o(&q));
            let not = |a: &QueryAst| QueryAst::not(a.clone());
            let laws: Vec<(&str, QueryAst, BTreeSet<usize>)> = vec![
                ("and", QueryAst::and(p.clone(), q.clone()), &fp & &fq),
                ("or", QueryAst::or(p.clone(), q.clone()), &fp | &fq),
                ("not", not(&p), &all - &fp),
                (
                    "implies",
                    QueryAst::implies(p.clone(), q.clone()),
                    &(&all - &fp) | &fq,
                ),
                (
                    "implies as or-not",
                    QueryAst::or(not(&p), q.clone()),
                    &(&all - &fp) | &fq,
                ),
                (
                    "de morgan or",
                    not(&QueryAst::and(not(&p), not(&q))),
                    &fp | &fq,
                ),
                (
                    "de morgan and",
                    not(&QueryAst::or(not(&p), not(&q))),
                    &fp & &fq,
                ),
                (
                    "iff",
                    QueryAst::iff(p.clone(), q.clone()),
                    &(&(&all - &fp) | &fq) & &(&(&all - &fq) | &fp),
                ),
            ];
            for (name, ast, want) in laws {
                ensure(f(&ast)? == want, || {
                    format!("{name} law fails for {p}, {q} at {eps}")
                })?;
                identities += 1;
            }
            ensure(
                &f(&not(&p))? | &fp == all && (&f(&not(&p))? & &fp).is_empty(),
                || "complement laws fail".into(),
            )?;

            // Per-leaf radii on a conjunction and a disjunction of two leaves.
            let (e1, e2) = (rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
            let (l1, l2) = (&leaves[0], &leaves[1]);
            let b1 = scan.ball(l1, e1);
            let b2 = scan.ball(l2, e2);
            let params = EvalParams::new(eps, ctx)
                .with_leaf_epsilon(0, e1)
                .with_leaf_epsilon(1, e2);
            for (ast, want) in [
                (
                    QueryAst::and(QueryAst::leaf(l1), QueryAst::leaf(l2)),
                    &b1 & &b2,
                ),
                (
                    QueryAst::or(QueryAst::leaf(l1), QueryAst::leaf(l2)),
                    &b1 | &b2,
                ),
            ] {
                let got = evaluate_with(&index, &ast, &params).map_err(e)?;
                ensure(positions_to_set(&index, &got.doc_ids) == want, || {
                    format!("per-leaf radii fail for {ast} at ({e1}, {e2})")
                })?;
                identities += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{asts} random ASTs and {identities} identities, 0 violations, {elapsed:.2?}"
    ))
}

fn criterion_8() -> Outcome {
    let mut rng = synthetic::rng(8);
    let mut opens = 0;
    for system_no in 0..30 {
        let classes = rng.gen_range(3..=8);
        let docs = rng.gen_range(2..=10);
        let system = System::random(&mut rng, classes, docs);
        let index = system.index().map_err(e)?;
        let scan = system_scan(&system, None);
        let words: Vec<Vec<String>> = (0..rng.gen_range(0..=4))
            .map(|_| synthetic::random_word_set(&mut rng, &system.lexicon, 3))
            .collect();
        let qs: Vec<QueryAst> = words.iter().map(|w| QueryAst::leaf(w)).collect();
        let eps = rng.gen_range(0.01..0.99);

        let family = enumerate_topology(&index, &qs, eps, None).map_err(e)?;
        let mut dnf = boolean_retrievals(&index, &qs, eps, None).map_err(e)?;
        dnf.push(index.all_docs());
        dnf.sort();
        dnf.dedup();
        ensure(family.open_sets == dnf, || {
            format!("system {system_no}: opens differ from DNF family plus DS")
        })?;

        let gens: Vec<BTreeSet<usize>> = words.iter().map(|w| scan.ball(w, eps)).collect();
        let want = closure(&gens, &scan.all());
        let got: BTreeSet<BTreeSet<usize>> = family
            .opens
            .iter()
            .map(|ids| positions_to_set(&index, ids))
            .collect();
        ensure(got == want, || {
            format!("system {system_no}: topology differs from oracle")
        })?;
        opens += got.len();
    }
    Ok(format!("30 systems, {opens} open sets, families equal"))
}

fn criterion_9() -> Outcome {
    let f = &fixtures::DEFENSE;
    let index = f.index().map_err(e)?;
    let q = parse_query("enemy drone activity northern sector").map_err(e)?;
    let uav = parse_query("enemy uav activity northern sector").map_err(e)?;
    let report = stable_retrieve(&index, &q, &uav, 0.3, None).map_err(e)?;
    ensure(report.verdict == Verdict::Stable, || {
        format!("verdict {}", report.verdict)
    })?;
    ensure(report.partition_distance.value() == Some(0.0), || {
        "Cd_P not exactly 0".into()
    })?;
    let merged = report.merged.clone().unwrap_or_default();
    ensure(
        merged == report.set_q.doc_ids && merged == report.set_q_perturbed.doc_ids,
        || "merged set differs from the retrievals".into(),
    )?;

    let scan = fixture_scan(f, None);
    let want = scan.ball(q.words().unwrap(), 0.1);
    ensure(
        positions_to_set(&index, &report.set_q.doc_ids) == want,
        || {
            format!(
                "R_q = {:?}, oracle {:?}",
                report.set_q.doc_ids,
                scan.ids(&want)
            )
        },
    )?;

    let other = parse_query("allied convoy supply southern port").map_err(e)?;
    let changed = stable_retrieve(&index, &q, &other, 0.3, None).map_err(e)?;
    ensure(
        changed.verdict == Verdict::SignificantCognitiveChange,
        || format!("unrelated perturbation gave {}", changed.verdict),
    )?;
    let magnitude = scan.cd(
        &scan.oracle.canon(q.words().unwrap()),
        &scan.oracle.canon(other.words().unwrap()),
    );
    ensure(magnitude >= 0.1, || format!("oracle magnitude {magnitude}"))?;
    Ok(format!(
        "drone/uav Stable with merged {:?}; unrelated change at cd {magnitude:.3}",
        merged
    ))
}

fn criterion_10() -> Outcome {
    let build = Instant::now();
    let skew = Skew::generate(10, synthetic::SKEW_DOCS, synthetic::SKEW_PARTITIONS);
    let index = skew.system.index().map_err(e)?;
    let build = build.elapsed();
    ensure(
        index.partitions().len() == synthetic::SKEW_PARTITIONS,
        || format!("{} partitions", index.partitions().len()),
    )?;

    let mut rng = synthetic::rng(1010);
    let mut fractions = Vec::new();
    let mut latencies = Vec::new();
    for _ in 0..200 {
        let words = skew.random_query(&mut rng);
        let eps = rng.gen_range(0.01..0.5);
        let anchor = index.canonicalize_words(&words, None).map_err(e)?;
        let t = Instant::now();
        let pruned = retrieve_anchor(&index, &anchor, eps, None, Scan::Pruned).map_err(e)?;
        latencies.push(t.elapsed());
        let full = retrieve_anchor(&index, &anchor, eps, None, Scan::Full).map_err(e)?;
        ensure(pruned.positions == full.positions, || {
            format!("pruned and full scans differ for {words:?} at {eps}")
        })?;
        let candidates = index.prune_candidates(&anchor, eps).map_err(e)?;
        ensure(full.positions.is_subset(&candidates), || {
            "candidates miss a hit".into()
        })?;
        fractions.push(candidates.len() as f64 / index.len() as f64);
    }

    // Spot-check hits against the oracle on a subsample of partitions.
    let oracle = Oracle::new(&skew.system.lexicon, None);
    let words = skew.random_query(&mut rng);
    let q = oracle.canon(&words);
    let reps: Vec<Set> = index
        .partitions()
        .iter()
        .map(|p| oracle.canon(&tokens(&index.document(p.docs.as_slice()[0]).raw_text, &[])))
        .collect();
    let universe = oracle.universe(reps.iter().chain([&q]));
    let anchor = index.canonicalize_words(&words, None).map_err(e)?;
    let got = retrieve_anchor(&index, &anchor, 0.2, None, Scan::Pruned).map_err(e)?;
    for (p, rep) in index.partitions().iter().zip(&reps).step_by(7) {
        let inside = oracle.cd(&q, rep, &universe) < 0.2;
        let first = p.docs.as_slice()[0];
        ensure(inside == got.positions.contains(first), || {
            format!("partition {} disagrees with oracle", p.id)
        })?;
    }

    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    let max = fractions.iter().copied().fold(0.0, f64::max);
    latencies.sort();
    let p95 = latencies[latencies.len() * 95 / 100];
    ensure(mean < 0.30, || format!("mean candidate fraction {mean:.3}"))?;
    ensure(p95 < Duration::from_millis(250), || {
        format!("p95 latency {p95:?}")
    })?;
    Ok(format!(
        "200 queries equal to full scan; candidates mean {:.1}% max {:.1}%; p95 {p95:.2?}; build {build:.2?}",
        mean * 100.0,
        max * 100.0
    ))
}

fn criterion_11() -> Outcome {
    let mut rng = synthetic::rng(11);
    let mut perturbations = 0;
    while perturbations < 200 {
        let classes = rng.gen_range(3..=10);
        let docs = rng.gen_range(2..=40);
        let system = System::random(&mut rng, classes, docs);
        let index = system.index().map_err(e)?;
        let doc = &system.corpus[rng.gen_range(0..system.corpus.len())];
        let base = tokens(&doc.text, &[]);
        let q = QueryAst::leaf(&synthetic::synonym_substitution(
            &mut rng,
            &system.lexicon,
            &base,
        ));
        let q2 = QueryAst::leaf(&synthetic::synonym_substitution(
            &mut rng,
            &system.lexicon,
            &base,
        ));
        let eps = rng.gen_range(0.01..0.99);
        let magnitude = perturbation_magnitude(&q, &q2, &index, None).map_err(e)?;
        let report = stable_retrieve(&index, &q, &q2, eps, None).map_err(e)?;
        let gate = magnitude.value < eps / 3.0;
        let inhabited = !report.set_q.is_empty() && !report.set_q_perturbed.is_empty();
        let exact = report.set_q.exact_match && report.set_q_perturbed.exact_match;
        if !(gate && inhabited && exact) {
            continue;
        }
        ensure(
            stability_check(&report.set_q, &report.set_q_perturbed, &index).map_err(e)?,
            || format!("{q} -> {q2} at {eps} unstable"),
        )?;
        ensure(report.verdict == Verdict::Stable, || {
            format!("verdict {}", report.verdict)
        })?;
        perturbations += 1;
    }

    let f = &fixtures::CONVERGENCE;
    let index = f.index().map_err(e)?;
    let target = parse_query("a").map_err(e)?;
    let report =
        check_sequence_convergence(&index, &f.queries(), &target, f.epsilon, None).map_err(e)?;
    let scan = fixture_scan(f, None);
    let t = scan.oracle.canon(&["a"]);
    let want: Vec<f64> = f
        .query_lines()
        .map(|l| scan.cd(&scan.oracle.canon(&tokens(l, &[])), &t))
        .collect();
    ensure(
        report
            .distances
            .iter()
            .zip(&want)
            .all(|(g, w)| (g - w).abs() < 1e-12),
        || format!("distances {:?} vs oracle {want:?}", report.distances),
    )?;
    ensure(report.converged_at == Some(2), || {
        format!("converged at {:?}", report.converged_at)
    })?;
    ensure(report.tail_stable(), || "converged tail not stable".into())?;
    Ok(format!(
        "{perturbations} gated perturbations stable; convergence fixture converged at 2 with stable tail"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("pseudo-metric axioms", criterion_1),
        ("equivalent sets at distance zero", criterion_2),
        ("partition correctness", criterion_3),
        ("partition distance", criterion_4),
        ("nesting of retrievals", criterion_5),
        ("overlap of equivalent queries", criterion_6),
        ("Boolean laws against brute force", criterion_7),
        ("topology equals Boolean retrievals", criterion_8),
        ("drone/uav scenario", criterion_9),
        ("pruning soundness and selectivity", criterion_10),
        ("perturbation stability and convergence", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
