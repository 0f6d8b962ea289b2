//! Acceptance suite: one test per criterion, each printing a pass line.
//! Everything runs in fact-set mode without a network except the final
//! criterion, which replays the committed llm cache offline.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qadoc_core::algebra::{decomp, distance, distance_ratio, union};
use qadoc_core::category::QACategory;
use qadoc_core::constraints::{gen_tasks, to_jsonl, verify_task, TaskKind};
use qadoc_core::lattice::{
    enumerate_hierarchical, extend, factor_extension, factor_summary, is_hierarchical, join, meet,
    suppress, AdditionSpec, ExtensionSpec, Selection,
};
use qadoc_core::measures::{diversity_depth_entropy, entropy_family, information_content};
use qadoc_core::model::{make_assertion, Assertion, Fact, FactSet, QAPair};
use qadoc_core::oracle::{FactSetOracle, LlmOracle, OracleCache};
use qadoc_core::ortho::{orthogonalize, signature_partition, verify_orthogonal};
use qadoc_core::pipeline::{merge_pair, DocumentContext, PipelineConfig};
use qadoc_core::rd::{operational_curve, sweep, RDPoint, Strategy};
use qadoc_core::relations::Relation;
use qadoc_core::rhetoric::{NodeId, SyntheticDocument};
use qadoc_core::scalar::exact_ratio;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn load_fixture(name: &str) -> DocumentContext {
    let raw = std::fs::read_to_string(fixtures_dir().join(name)).unwrap();
    let synth = SyntheticDocument::from_json(&raw).unwrap();
    DocumentContext::from_synthetic(&synth, &PipelineConfig::default(), &FactSetOracle::new())
        .unwrap()
}

fn pass(criterion: u32, message: &str) {
    println!("ACCEPTANCE PASS: criterion {criterion} — {message}");
}

fn assertion_from_keys(keys: &[usize]) -> Assertion {
    let facts: Vec<Fact> = keys
        .iter()
        .map(|k| Fact::definite(format!("k{k}"), format!("v{k}")).unwrap())
        .collect();
    make_assertion("generated", Some(facts)).unwrap()
}

fn qa_from_keys(keys: &[usize]) -> QAPair {
    let facts = FactSet::from_facts(
        keys.iter().map(|k| Fact::definite(format!("k{k}"), format!("v{k}")).unwrap()),
    )
    .unwrap();
    QAPair::from_facts(facts, None).unwrap()
}

fn random_key_set(rng: &mut StdRng, universe: usize, allow_empty: bool) -> Vec<usize> {
    loop {
        let keys: Vec<usize> = (0..universe).filter(|_| rng.gen_bool(0.4)).collect();
        if allow_empty || !keys.is_empty() {
            return keys;
        }
    }
}

/// Criterion 1: the two-question sky fixture gives d = 1/2 exactly.
#[test]
fn criterion_01_sky_example_metric() {
    let oracle = FactSetOracle::new();
    let blue = make_assertion(
        "the sky is blue",
        Some(vec![
            Fact::definite("color-of-sky", "blue").unwrap(),
            Fact::definite("sky-is-blue", "yes").unwrap(),
        ]),
    )
    .unwrap();
    let not_blue = make_assertion(
        "the sky is not blue",
        Some(vec![Fact::definite("sky-is-blue", "no").unwrap()]),
    )
    .unwrap();
    assert_eq!(distance_ratio(&blue, &not_blue, &oracle).unwrap(), exact_ratio(1, 2));
    assert_eq!(distance::<f64>(&blue, &not_blue, &oracle).unwrap(), 0.5);
    pass(1, "d(\"the sky is blue\", \"the sky is not blue\") = 0.5 exactly");
}

/// Criterion 2: metric axioms over 10,000 seeded triples in exact rationals.
#[test]
fn criterion_02_metric_axioms() {
    let oracle = FactSetOracle::new();
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let mut checked = 0u32;
    for _ in 0..10_000 {
        let a = assertion_from_keys(&random_key_set(&mut rng, 16, true));
        let b = assertion_from_keys(&random_key_set(&mut rng, 16, true));
        let c = assertion_from_keys(&random_key_set(&mut rng, 16, true));
        let dab = distance_ratio(&a, &b, &oracle).unwrap();
        let dba = distance_ratio(&b, &a, &oracle).unwrap();
        let dac = distance_ratio(&a, &c, &oracle).unwrap();
        let dbc = distance_ratio(&b, &c, &oracle).unwrap();
        assert_eq!(dab, dba, "symmetry");
        assert_eq!(distance_ratio(&a, &a, &oracle).unwrap(), exact_ratio(0, 1), "d(a,a)=0");
        assert!(dac <= dab + dbc, "triangle inequality: {dac} > {dab} + {dbc}");
        checked += 1;
    }
    assert_eq!(checked, 10_000);
    pass(2, "symmetry, identity, and triangle inequality exact on 10,000 triples");
}

/// Criterion 3: the orthogonalizer equals the signature-partition oracle on
/// 1,000 seeded corpora of ≤ 6 QAs over ≤ 12 facts.
#[test]
fn criterion_03_orthogonalizer_matches_brute_force() {
    let oracle = FactSetOracle::new();
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    for case in 0..1_000 {
        let universe = rng.gen_range(1..=12usize);
        let qa_count = rng.gen_range(1..=6usize);
        let qas: Vec<QAPair> = (0..qa_count)
            .map(|_| qa_from_keys(&random_key_set(&mut rng, universe, false)))
            .collect();
        let procedural = orthogonalize(&qas, &oracle, 3).unwrap();
        let ground_truth = signature_partition(&qas).unwrap();
        let lhs: BTreeSet<FactSet> =
            procedural.atoms.iter().map(|a| a.facts().unwrap().clone()).collect();
        let rhs: BTreeSet<FactSet> =
            ground_truth.atoms.iter().map(|a| a.facts().unwrap().clone()).collect();
        assert_eq!(lhs, rhs, "case {case}");
        assert!(procedural.unresolved.is_empty(), "case {case} left overlaps");
        assert!(verify_orthogonal(&procedural, &oracle).unwrap().is_empty());
    }
    pass(3, "orthogonalize equals signature_partition on 1,000 seeded corpora");
}

/// Criterion 4: decomposition conserves the pair's facts on 1,000 seeded
/// pairs, and the inconsistent union reproduces the blue/gray structure.
#[test]
fn criterion_04_decomposition_conservation_and_inconsistent_union() {
    let oracle = FactSetOracle::new();
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for case in 0..1_000 {
        let qa1 = qa_from_keys(&random_key_set(&mut rng, 10, false));
        let qa2 = qa_from_keys(&random_key_set(&mut rng, 10, false));
        let triple = decomp(&qa1, &qa2, &oracle).unwrap();
        let recomposed = triple
            .pieces()
            .fold(FactSet::new(), |acc, p| acc.merge_union(p.facts().unwrap()));
        let original = qa1.facts().unwrap().merge_union(qa2.facts().unwrap());
        assert_eq!(recomposed, original, "case {case}");
    }

    // "what is the color of the water and the sky? (blue)" ∪
    // "are the sky and the clouds both gray? (yes)"
    let water_sky = QAPair::from_facts(
        FactSet::from_facts([
            Fact::definite("color-of-water", "blue").unwrap(),
            Fact::definite("color-of-sky", "blue").unwrap(),
        ])
        .unwrap(),
        None,
    )
    .unwrap();
    let sky_clouds = QAPair::from_facts(
        FactSet::from_facts([
            Fact::definite("color-of-sky", "gray").unwrap(),
            Fact::definite("color-of-clouds", "gray").unwrap(),
        ])
        .unwrap(),
        None,
    )
    .unwrap();
    let merged = union(&water_sky, &sky_clouds, &oracle).unwrap();
    let facts = merged.facts().unwrap();
    let values = |k: &str| -> Vec<String> {
        facts.values_of(k).unwrap().iter().cloned().collect()
    };
    assert_eq!(facts.len(), 3);
    assert_eq!(values("color-of-water"), ["blue"]);
    assert_eq!(values("color-of-clouds"), ["gray"]);
    assert_eq!(values("color-of-sky"), ["blue", "gray"]);
    pass(4, "1,000 decompositions conserve facts; inconsistent union isolates blue-or-gray");
}

/// Criterion 5: the three-assertion fixture has 8 selections, 5 hierarchical,
/// closed under meet and join.
#[test]
fn criterion_05_lattice_counts() {
    let ctx = load_fixture("abc.json");
    assert_eq!(1usize << ctx.dag.len(), 8);
    let hierarchical = enumerate_hierarchical(&ctx.dag, 4096).unwrap();
    assert_eq!(hierarchical.len(), 5);
    for s1 in &hierarchical {
        for s2 in &hierarchical {
            assert!(is_hierarchical(&join(s1, s2), &ctx.dag).unwrap());
            assert!(is_hierarchical(&meet(s1, s2), &ctx.dag).unwrap());
        }
    }
    pass(5, "8 selections, 5 hierarchical, closed under meet/join over all 25 pairs");
}

/// Criterion 6: the three morphism diagrams count 1, 2, 1 chains and give
/// content entropy 0, 1, 0 bits exactly.
#[test]
fn criterion_06_chain_counting() {
    let oracle = FactSetOracle::new();
    let qa = |keys: &[&str]| -> QAPair {
        QAPair::from_facts(
            FactSet::from_facts(keys.iter().map(|k| Fact::definite(*k, "v").unwrap())).unwrap(),
            None,
        )
        .unwrap()
    };

    // left: C→B, D→B, B→A
    let mut left = QACategory::new();
    let c = left.add_object(qa(&["c1"]), &oracle).unwrap();
    let d = left.add_object(qa(&["d1"]), &oracle).unwrap();
    let b = left.add_object(qa(&["c1", "d1"]), &oracle).unwrap();
    let a = left.add_object(qa(&["c1", "d1", "a1"]), &oracle).unwrap();
    left.add_morphism(&c, &b, &oracle).unwrap();
    left.add_morphism(&d, &b, &oracle).unwrap();
    left.add_morphism(&b, &a, &oracle).unwrap();

    // center: D→C, C→A, C→B
    let mut center = QACategory::new();
    let d2 = center.add_object(qa(&["x1"]), &oracle).unwrap();
    let c2 = center.add_object(qa(&["x1", "x2"]), &oracle).unwrap();
    let a2 = center.add_object(qa(&["x1", "x2", "a1"]), &oracle).unwrap();
    let b2 = center.add_object(qa(&["x1", "x2", "b1"]), &oracle).unwrap();
    center.add_morphism(&d2, &c2, &oracle).unwrap();
    center.add_morphism(&c2, &a2, &oracle).unwrap();
    center.add_morphism(&c2, &b2, &oracle).unwrap();

    // right: F→E, E→C, E→D, C→B, D→B, B→A
    let mut right = QACategory::new();
    let f3 = right.add_object(qa(&["e1"]), &oracle).unwrap();
    let e3 = right.add_object(qa(&["e1", "e2"]), &oracle).unwrap();
    let c3 = right.add_object(qa(&["e1", "e2", "c1"]), &oracle).unwrap();
    let d3 = right.add_object(qa(&["e1", "e2", "d1"]), &oracle).unwrap();
    let b3 = right.add_object(qa(&["e1", "e2", "c1", "d1"]), &oracle).unwrap();
    let a3 = right.add_object(qa(&["e1", "e2", "c1", "d1", "a1"]), &oracle).unwrap();
    right.add_morphism(&f3, &e3, &oracle).unwrap();
    right.add_morphism(&e3, &c3, &oracle).unwrap();
    right.add_morphism(&e3, &d3, &oracle).unwrap();
    right.add_morphism(&c3, &b3, &oracle).unwrap();
    right.add_morphism(&d3, &b3, &oracle).unwrap();
    right.add_morphism(&b3, &a3, &oracle).unwrap();

    for (cat, chains, ce) in [(&left, 1, 0.0f64), (&center, 2, 1.0), (&right, 1, 0.0)] {
        let report = cat.chain_report();
        assert_eq!(report.heads.len(), chains);
        assert_eq!(qadoc_core::measures::content_entropy::<f64>(cat).unwrap(), ce);
    }
    pass(6, "the three diagrams count 1, 2, 1 chains with CE 0.0, 1.0, 0.0 bits");
}

fn random_doc(rng: &mut StdRng, id: &str, universe: &[usize]) -> DocumentContext {
    let leaf_count = rng.gen_range(1..=3usize);
    let mut nodes = Vec::new();
    let mut texts = Vec::new();
    for i in 0..leaf_count {
        let mut keys: Vec<usize> =
            universe.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if keys.is_empty() {
            keys.push(universe[rng.gen_range(0..universe.len())]);
        }
        let text = format!("Sentence {i} of {id} covers {} facts.", keys.len());
        texts.push(text.clone());
        let facts: Vec<serde_json::Value> = keys
            .iter()
            .map(|k| serde_json::json!({"key": format!("k{k}"), "values": [format!("v{k}")]}))
            .collect();
        nodes.push(serde_json::json!({
            "id": format!("n{i}"), "text": text, "facts": facts, "children": [],
        }));
    }
    let children: Vec<String> = (0..leaf_count).map(|i| format!("n{i}")).collect();
    let mut all_nodes = vec![serde_json::json!({
        "id": "root", "text": format!("Summary of {id}."), "facts": [], "children": children,
    })];
    all_nodes.extend(nodes);
    let synth = serde_json::json!({
        "id": id, "text": texts.join(" "), "nodes": all_nodes, "root": "root",
    });
    let synth = SyntheticDocument::from_json(&synth.to_string()).unwrap();
    DocumentContext::from_synthetic(&synth, &PipelineConfig::default(), &FactSetOracle::new())
        .unwrap()
}

/// Criterion 7: measure algebra on 100 seeded document pairs.
#[test]
fn criterion_07_measure_algebra() {
    let oracle = FactSetOracle::new();
    let config = PipelineConfig::default();
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let universe: Vec<usize> = (0..10).collect();
    for case in 0..100 {
        let d1 = random_doc(&mut rng, &format!("d1-{case}"), &universe);
        let d2 = random_doc(&mut rng, &format!("d2-{case}"), &universe);
        let forward = merge_pair(&d1, &d2, &config, &oracle).unwrap();
        let backward = merge_pair(&d2, &d1, &config, &oracle).unwrap();
        let mi = forward.mutual_information();
        assert_eq!(mi, backward.mutual_information(), "MI symmetric, case {case}");
        let ic2 = information_content(&d2);
        assert!(mi <= ic2 && mi <= information_content(&d1), "MI bounded, case {case}");
        let ig = forward.information_gain_second_given_first();
        assert_eq!(ig + mi, ic2, "IG + MI = IC(D2), case {case}");
        for ctx in [&d1, &d2] {
            let (e0, e, _) = diversity_depth_entropy::<f64>(ctx).unwrap();
            assert!(e <= e0 + 1e-12, "E ≤ E0, case {case}");
        }
    }
    // no redundancy: all three coincide
    let (e0, e, e1) = entropy_family::<f64>(&[1, 1, 1, 1]).unwrap();
    assert_eq!((e0, e, e1), (8.0, 8.0, 8.0));
    pass(7, "IG + MI = IC exactly, MI symmetric, IG ≥ 0, E ≤ E0 on 100 seeded pairs");
}

/// Criterion 8: 200 seeded mixed extensions factor into superdocument then
/// elaboration and recompose structurally; summary factorizations recompose
/// atom sets exactly.
#[test]
fn criterion_08_factorization_theorems() {
    let oracle = FactSetOracle::new();
    let config = PipelineConfig::default();
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let bases = [load_fixture("abc.json"), load_fixture("nested.json")];

    for case in 0..200 {
        let ctx = &bases[case % bases.len()];
        let addition_count = rng.gen_range(1..=4usize);
        let node_ids: Vec<NodeId> = ctx.dag.nodes.keys().cloned().collect();
        let mut additions: Vec<AdditionSpec> = Vec::new();
        for i in 0..addition_count {
            let attach_under = match rng.gen_range(0..10u32) {
                0..=2 => None,
                3..=6 => Some(node_ids[rng.gen_range(0..node_ids.len())].to_string()),
                _ => additions
                    .iter()
                    .filter(|a| a.attach_under.is_none())
                    .map(|a| format!("x-{}", addition_node_digest(a)))
                    .next()
                    .or_else(|| Some(node_ids[0].to_string())),
            };
            additions.push(AdditionSpec {
                text: format!("Extension sentence {case}-{i}."),
                facts: vec![Fact::definite(format!("x{case}-{i}"), "yes").unwrap()],
                attach_under,
                allow_overlap: false,
            });
        }
        let spec = ExtensionSpec { additions };
        let direct = extend(ctx, &spec, &config, &oracle).unwrap();
        let (supers, elabs) = factor_extension(&spec);
        assert!(supers.additions.iter().all(|a| a.attach_under.is_none()));
        assert!(elabs.additions.iter().all(|a| a.attach_under.is_some()));
        let stage1 = extend(ctx, &supers, &config, &oracle).unwrap();
        let stage2 = extend(&stage1.context, &elabs, &config, &oracle).unwrap();
        assert_eq!(
            direct.structural_digest(),
            stage2.structural_digest(),
            "extension recomposition, case {case}"
        );
    }

    // dual: summary factorization recomposes atom sets exactly
    let mut rng = StdRng::seed_from_u64(0x5eed_0088);
    for case in 0..200 {
        let ctx = &bases[case % bases.len()];
        let kept: BTreeSet<NodeId> = ctx
            .dag
            .nodes
            .keys()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        let sel = Selection { kept };
        let (sub_step, quot_step) = factor_summary(ctx, &sel).unwrap();
        let recomposed = meet(&sub_step, &quot_step);
        assert_eq!(recomposed, sel, "selection recomposition, case {case}");
        let atoms_direct = suppress(ctx, &sel, true).unwrap().atoms;
        let atoms_recomposed = suppress(ctx, &recomposed, true).unwrap().atoms;
        assert_eq!(atoms_direct, atoms_recomposed, "atom recomposition, case {case}");
        // the subdocument step keeps whole chains: its atoms include the kept ones
        let sub_atoms = suppress(ctx, &sub_step, true).unwrap().atoms;
        assert!(atoms_direct.is_subset(&sub_atoms));
    }
    pass(8, "200 extensions and 200 summaries factor and recompose exactly");
}

fn addition_node_digest(add: &AdditionSpec) -> String {
    let facts = FactSet::from_facts(add.facts.iter().cloned()).unwrap();
    let anchor = add.attach_under.clone().unwrap_or_default();
    qadoc_core::model::qa_id(&format!("{}@{anchor}", add.text), "", Some(&facts))
        .short()
        .to_string()
}

/// Criterion 9: operational curves are monotone, endpoints are forced, and
/// the merged envelope dominates every single-method curve.
#[test]
fn criterion_09_rate_distortion() {
    let oracle = FactSetOracle::new();
    for fixture in ["abc.json", "edu.json", "nested.json"] {
        let ctx = load_fixture(fixture);
        let total: u64 = ctx
            .dag
            .nodes
            .values()
            .map(|n| qadoc_core::model::word_count(&n.assertion.text) as u64)
            .sum();
        let budgets: Vec<u64> = vec![0, 3, 6, 9, 14, total + 5];
        let mut merged: Vec<RDPoint<f64>> = Vec::new();
        let mut singles = Vec::new();
        for strategy in Strategy::ALL {
            let points = sweep::<f64>(&ctx, strategy, &budgets, &oracle, 17).unwrap();
            assert_eq!(points.first().unwrap().distortion, 1.0, "{fixture} {strategy:?} rate 0");
            assert_eq!(points.last().unwrap().distortion, 0.0, "{fixture} {strategy:?} full rate");
            let curve = operational_curve(&points).unwrap();
            for w in curve.steps.windows(2) {
                assert!(w[1].1 <= w[0].1, "monotone, {fixture} {strategy:?}");
            }
            merged.extend(points);
            singles.push(curve);
        }
        let envelope = operational_curve(&merged).unwrap();
        for w in envelope.steps.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        for single in &singles {
            for (rate, _) in &single.steps {
                assert!(envelope.at(*rate) <= single.at(*rate) + 1e-12, "envelope, {fixture}");
            }
        }
    }
    pass(9, "curves monotone, endpoints forced, envelope dominates on all sweeps");
}

/// Criterion 10: relation composition equals the brute-force path oracle and
/// is associative on 500 seeded triples; identity laws hold exactly.
#[test]
fn criterion_10_relation_calculus() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0010);
    let labels = |tag: &str, n: usize| -> Vec<qadoc_core::model::QAId> {
        (0..n).map(|i| qadoc_core::model::qa_id(&format!("{tag}{i}"), "", None)).collect()
    };
    let random_relation = |rng: &mut StdRng, rows: &[qadoc_core::model::QAId], cols: &[qadoc_core::model::QAId]| {
        let mut rel = Relation::new(rows.to_vec(), cols.to_vec());
        for i in 0..rows.len() {
            for j in 0..cols.len() {
                if rng.gen_bool(0.3) {
                    rel.set(i, j);
                }
            }
        }
        rel
    };
    for case in 0..500 {
        let (na, nb, nc, nd) = (
            rng.gen_range(1..=8usize),
            rng.gen_range(1..=8usize),
            rng.gen_range(1..=8usize),
            rng.gen_range(1..=8usize),
        );
        let (la, lb, lc, ld) =
            (labels("a", na), labels("b", nb), labels("c", nc), labels("d", nd));
        let f = random_relation(&mut rng, &lb, &la); // D_a → D_b
        let g = random_relation(&mut rng, &lc, &lb); // D_b → D_c
        let h = random_relation(&mut rng, &ld, &lc); // D_c → D_d

        // brute-force path oracle: (i, j) related iff some k links them
        let gf = Relation::compose(&g, &f).unwrap();
        for i in 0..nc {
            for j in 0..na {
                let expect = (0..nb).any(|k| g.get(i, k) && f.get(k, j));
                assert_eq!(gf.get(i, j), expect, "path oracle, case {case}");
            }
        }
        let left = Relation::compose(&Relation::compose(&h, &g).unwrap(), &f).unwrap();
        let right = Relation::compose(&h, &Relation::compose(&g, &f).unwrap()).unwrap();
        assert_eq!(left, right, "associativity, case {case}");

        let id_b = Relation::identity(lb.clone());
        let id_a = Relation::identity(la.clone());
        assert_eq!(Relation::compose(&id_b, &f).unwrap(), f, "left identity");
        assert_eq!(Relation::compose(&f, &id_a).unwrap(), f, "right identity");
    }
    pass(10, "composition matches the path oracle and associates on 500 triples");
}

/// Criterion 11: structure-derived tasks verify true, planted negatives
/// verify false, and generation is byte-identical from the seed.
#[test]
fn criterion_11_constraint_tasks() {
    let abc = load_fixture("abc.json");
    let nested = load_fixture("nested.json");
    for kind in TaskKind::ALL {
        // composable morphism pairs need the nested document's depth
        let ctx = if kind == TaskKind::Transitivity { &nested } else { &abc };
        let tasks = gen_tasks(ctx, kind, 25, 41, false).unwrap();
        assert_eq!(tasks.len(), 25);
        for task in &tasks {
            assert!(task.verifier_verdict, "{kind} structure-derived task");
            assert!(verify_task(task).unwrap());
        }
        let planted = gen_tasks(ctx, kind, 25, 43, true).unwrap();
        for task in &planted {
            assert!(!task.verifier_verdict, "{kind} planted task");
            assert!(!verify_task(task).unwrap());
        }
        let again = gen_tasks(ctx, kind, 25, 41, false).unwrap();
        assert_eq!(to_jsonl(&tasks).unwrap(), to_jsonl(&again).unwrap(), "{kind} reproducible");
    }
    pass(11, "tasks verify 100% true / 100% false (planted), byte-identical from seed");
}

/// Criterion 12: two full CLI runs on the ABC and EDU fixtures produce
/// byte-identical report, CSV, and JSONL outputs.
#[test]
fn criterion_12_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_qadoc");
    let work = tempfile::tempdir().unwrap();
    let run = |doc: &str, out: &std::path::Path| {
        let doc_path = fixtures_dir().join(doc);
        for args in [
            vec!["measure", doc_path.to_str().unwrap()],
            vec!["rd", doc_path.to_str().unwrap(), "--budgets", "0,4,8,16,40"],
            vec![
                "constraints",
                doc_path.to_str().unwrap(),
                "--kind",
                "lattice-closure",
                "--count",
                "8",
            ],
        ] {
            let status = Command::new(bin)
                .args(&args)
                .args(["--seed", "9", "--out", out.to_str().unwrap()])
                .status()
                .unwrap();
            assert!(status.success(), "qadoc {args:?} failed");
        }
    };
    for doc in ["abc.json", "edu.json"] {
        let out1 = work.path().join(format!("{doc}-run1"));
        let out2 = work.path().join(format!("{doc}-run2"));
        run(doc, &out1);
        run(doc, &out2);
        for file in ["measure.json", "rd.csv", "rd.curve.csv", "rd.json", "tasks.jsonl", "constraints.json"] {
            let a = std::fs::read(out1.join(file)).unwrap();
            let b = std::fs::read(out2.join(file)).unwrap();
            assert_eq!(a, b, "{doc}/{file} differs between runs");
            assert!(!a.is_empty());
        }
    }
    pass(12, "two CLI runs on ABC and EDU are byte-identical across all outputs");
}

/// Criterion 13: with the committed golden cache and --offline, the llm-mode
/// EDU pipeline completes and reproduces the recorded per-node orthogonal
/// assertions byte-identically.
#[test]
fn criterion_13_llm_offline_replay() {
    let cache = fixtures_dir().join("edu_llm_cache.jsonl");
    let golden = std::fs::read_to_string(fixtures_dir().join("edu_llm_ortho.golden.txt")).unwrap();

    // through the library
    let oracle = LlmOracle::new(
        qadoc_core::oracle::EndpointConfig {
            base_url: "http://offline.invalid".into(),
            model: "scripted-mock-v1".into(),
            api_key_env: None,
            timeout_secs: 5,
        },
        OracleCache::open(&cache).unwrap(),
        true,
    );
    let config = PipelineConfig { mode: qadoc_core::model::Mode::Llm, ..Default::default() };
    let ctx = DocumentContext::from_text("edu", &common::edu_text(), &config, &oracle).unwrap();
    assert_eq!(ctx.render_ortho_by_node(), golden);

    // through the CLI with --offline
    let bin = env!("CARGO_BIN_EXE_qadoc");
    let work = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = work.path().join(format!("run{run}"));
        let status = Command::new(bin)
            .args([
                "ortho",
                fixtures_dir().join("edu.txt").to_str().unwrap(),
                "--mode",
                "llm",
                "--offline",
                "--cache",
                cache.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "offline CLI replay failed");
        outputs.push(std::fs::read_to_string(out.join("ortho.txt")).unwrap());
    }
    assert_eq!(outputs[0], golden);
    assert_eq!(outputs[0], outputs[1]);
    pass(13, "offline replay reproduces the recorded orthogonal assertions byte-identically");
}
