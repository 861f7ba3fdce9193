//! Top-level acceptance checks. Each test pins one behavioral contract,
//! verifies it against an independently written oracle, and prints one
//! pass line with the tolerance it used.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use versekit_core::corpus::{Document, Kind, Label, Line, Provenance};
use versekit_core::features::FeatureVector;
use versekit_core::heuristics::HeuristicEncoder;
use versekit_core::model::{GbdtModel, ModelKind, Node, TrainConfig};
use versekit_core::pipeline::{self, ExperimentSpec};
use versekit_core::promptkit::{
    build_augmentation_prompt, build_rectification_prompt, AUGMENTATION_TEMPLATE,
    RECTIFICATION_TEMPLATE,
};
use versekit_core::stats::{paired_t_test, t_cdf, AgreementTable, StatsError};
use versekit_core::textproc::{segment, Scheme};
use versekit_core::{evaluate, ConfusionMatrix, MetricsReport};

fn doc(id: &str, lines: &[(&str, u8)]) -> Document {
    Document {
        id: id.to_owned(),
        title: id.to_owned(),
        kind: Kind::Rhyme,
        source_language: "en".to_owned(),
        lines: lines
            .iter()
            .enumerate()
            .map(|(index, (text, label))| Line {
                index,
                text: (*text).to_owned(),
                label: Label::try_from(*label).expect("binary label"),
            })
            .collect(),
        provenance: Provenance::Original,
        parent_id: None,
    }
}

fn bit_label(bit: bool) -> Label {
    if bit {
        Label::Stereotypical
    } else {
        Label::NonStereotypical
    }
}

#[test]
fn criterion_1_heuristic_bits_worked_example() {
    let encoder = HeuristicEncoder::builtin();
    let lexicon = &encoder.lexicon;
    assert!(
        lexicon.female_names.contains(&vec!["wife".to_owned()]),
        "shipped lexicon must list `wife` as a female reference"
    );
    assert!(
        lexicon.stereotype_phrases.contains(&vec![
            "couldn't".to_owned(),
            "keep".to_owned(),
            "her".to_owned()
        ]),
        "shipped lexicon must list the phrase `couldn't keep her`"
    );
    let bits = encoder.encode("had a wife but couldn't keep her");
    assert_eq!(bits, [0, 1, 1, 1, 0]);
    println!("criterion 1 PASS: encode(\"had a wife but couldn't keep her\") = [0 1 1 1 0] exactly with the shipped lexicon");
}

#[test]
fn criterion_2_planted_phrase_run_is_perfect() {
    // The study dataset is not redistributable, so this check runs the
    // substitute construction: positives are exactly the documents that
    // contain a stereotype phrase from the shipped lexicon, which makes
    // the heuristic stereotype bit a perfect predictor.
    let mut docs = Vec::new();
    for i in 0..20 {
        docs.push(doc(
            &format!("s{i}"),
            &[
                (&format!("The lark sang over meadow {i}"), 0),
                ("She had a wife but couldn't keep her", 1),
                ("Green leaves drifted slowly down", 0),
            ],
        ));
        docs.push(doc(
            &format!("n{i}"),
            &[
                (&format!("The lark sang over meadow {i}"), 0),
                ("The cat sat by the warm fire", 0),
                ("Green leaves drifted slowly down", 0),
            ],
        ));
    }
    let spec = ExperimentSpec {
        scheme: Scheme::Full,
        heuristics: true,
        model: ModelKind::Gbdt,
        train: TrainConfig {
            rounds: 30,
            ..TrainConfig::default()
        },
        ..ExperimentSpec::default()
    };
    let report = pipeline::run_experiment(&docs, &spec).expect("run succeeds");
    assert_eq!(report.document_metrics.accuracy, 1.0);
    assert_eq!(report.segment_metrics.accuracy, 1.0);
    assert!(report.test_documents > 0);
    println!(
        "criterion 2 PASS: planted-phrase corpus classified with document accuracy 1.0 exactly \
         ({} test documents)",
        report.test_documents
    );
}

#[test]
fn criterion_3_out_of_scope_substitutions() {
    // Transformer baselines and the original annotation/survey data are
    // not part of this toolkit, so their published figures cannot be
    // recomputed here. The agreement, t-distribution, and boosting suites
    // below stand in; this test pins the boundary and spot-checks each
    // stand-in entry point.
    assert!("bert".parse::<ModelKind>().is_err());
    let table = AgreementTable::parse("1 1\n1 0\n0 1\n0 0\n1 1\n").expect("valid table");
    let alpha = table.krippendorff_alpha().expect("non-degenerate");
    assert!((alpha - (1.0 - (4.0 / 10.0) / (2.0 * 4.0 * 6.0 / (10.0 * 9.0)))).abs() < 1e-15);
    assert_eq!(t_cdf(0.0, 7), 0.5);
    assert!(paired_t_test(&[2.0, 3.0, 4.0], &[1.0, 1.0, 1.0]).is_ok());
    println!("criterion 3 PASS: transformer rows and external annotation/survey figures stay out of scope; agreement, t-distribution, and boosting suites stand in");
}

/// Coincidence-matrix agreement computed from the general pooled formula,
/// independently of the library implementation.
fn alpha_oracle(pairs: &[(u8, u8)]) -> Option<f64> {
    let raters_per_unit = 2.0f64;
    let mut coincidence = [[0.0f64; 2]; 2];
    for &(a, b) in pairs {
        let (a, b) = (a as usize, b as usize);
        let weight = 1.0 / (raters_per_unit - 1.0);
        coincidence[a][b] += weight;
        coincidence[b][a] += weight;
    }
    let totals = [
        coincidence[0][0] + coincidence[0][1],
        coincidence[1][0] + coincidence[1][1],
    ];
    let n: f64 = totals.iter().sum();
    let observed = (coincidence[0][1] + coincidence[1][0]) / n;
    let expected = (totals[0] * totals[1] + totals[1] * totals[0]) / (n * (n - 1.0));
    if expected == 0.0 {
        None
    } else {
        Some(1.0 - observed / expected)
    }
}

#[test]
fn criterion_4_agreement_alpha_oracle() {
    for pairs in [
        vec![(1, 1), (0, 0), (1, 1)],
        vec![(0, 0), (1, 1), (0, 0), (1, 1), (1, 1)],
    ] {
        let table = AgreementTable::new(
            pairs
                .iter()
                .map(|&(a, b)| (bit_label(a == 1), bit_label(b == 1)))
                .collect(),
        )
        .expect("nonempty");
        assert_eq!(table.krippendorff_alpha().expect("mixed labels"), 1.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let mut compared = 0usize;
    let mut max_err = 0.0f64;
    while compared < 1000 {
        let n = rng.random_range(1..=20);
        let pairs: Vec<(u8, u8)> = (0..n)
            .map(|_| (rng.random_range(0..2), rng.random_range(0..2)))
            .collect();
        let table = AgreementTable::new(
            pairs
                .iter()
                .map(|&(a, b)| (bit_label(a == 1), bit_label(b == 1)))
                .collect(),
        )
        .expect("nonempty");
        match alpha_oracle(&pairs) {
            Some(expected) => {
                let got = table
                    .krippendorff_alpha()
                    .expect("oracle says non-degenerate");
                max_err = max_err.max((got - expected).abs());
                assert!(
                    (got - expected).abs() < 1e-12,
                    "alpha {got} vs oracle {expected} on {pairs:?}"
                );
                compared += 1;
            }
            None => {
                assert!(matches!(
                    table.krippendorff_alpha(),
                    Err(StatsError::DegenerateAgreement)
                ));
            }
        }
    }

    assert!(matches!(
        AgreementTable::new(vec![(Label::Stereotypical, Label::Stereotypical)])
            .expect("nonempty")
            .krippendorff_alpha(),
        Err(StatsError::DegenerateAgreement)
    ));
    println!(
        "criterion 4 PASS: perfect tables give exactly 1.0, {compared} random tables match the \
         pooled oracle within 1e-12 (max err {max_err:.2e}), degenerate tables raise the error"
    );
}

/// Simpson integration of a symmetric density from 0 to `x`.
fn simpson<F: Fn(f64) -> f64>(f: F, to: f64, steps: usize) -> f64 {
    let h = to / steps as f64;
    let mut sum = f(0.0) + f(to);
    for i in 1..steps {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(i as f64 * h);
    }
    sum * h / 3.0
}

fn normal_cdf_oracle(x: f64) -> f64 {
    let pdf = |v: f64| (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + x.signum() * simpson(pdf, x.abs(), 10_000)
}

/// Two-sided tail probability under two degrees of freedom, by quadrature
/// of the density 1/(2*sqrt(2)) * (1 + x^2/2)^(-3/2).
fn p_two_tailed_oracle_df2(t: f64) -> f64 {
    let pdf = |v: f64| (1.0 + v * v / 2.0).powf(-1.5) / (2.0 * 2.0f64.sqrt());
    2.0 * (0.5 - simpson(pdf, t.abs(), 20_000))
}

#[test]
fn criterion_5_t_distribution_oracle() {
    for df in [1, 2, 3, 10, 200, 1000] {
        assert_eq!(t_cdf(0.0, df), 0.5, "df {df}");
    }

    let mut max_cauchy_err = 0.0f64;
    for i in 0..=200 {
        let t = -10.0 + 0.1 * i as f64;
        let closed_form = 0.5 + t.atan() / std::f64::consts::PI;
        let err = (t_cdf(t, 1) - closed_form).abs();
        max_cauchy_err = max_cauchy_err.max(err);
        assert!(err < 1e-12, "t {t}: {err}");
    }

    let mut max_normal_err = 0.0f64;
    for t in [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 1.96, 3.0] {
        let err = (t_cdf(t, 1000) - normal_cdf_oracle(t)).abs();
        max_normal_err = max_normal_err.max(err);
        assert!(err < 1e-3, "t {t}: {err}");
    }

    let result = paired_t_test(&[2.0, 3.0, 4.0], &[1.0, 1.0, 1.0]).expect("valid input");
    assert!((result.t - 3.4641).abs() < 1e-4);
    assert_eq!(result.df, 2);
    let p_oracle = p_two_tailed_oracle_df2(result.t);
    // Quadrature self-check against the closed form for two degrees of
    // freedom before trusting it as the oracle.
    let closed = 2.0 * (0.5 - result.t / (2.0 * (2.0 + result.t * result.t).sqrt()));
    assert!((p_oracle - closed).abs() < 1e-10);
    assert!(
        (result.p_two_tailed - p_oracle).abs() < 1e-6,
        "p {} vs oracle {p_oracle}",
        result.p_two_tailed
    );
    println!(
        "criterion 5 PASS: t_cdf(0, df) = 0.5 exactly; df=1 within 1e-12 of the Cauchy form \
         (max err {max_cauchy_err:.2e}); df=1000 within 1e-3 of the normal oracle (max err \
         {max_normal_err:.2e}); paired test t = 3.4641 +/- 1e-4 with p within 1e-6 of quadrature"
    );
}

fn random_dataset(rng: &mut ChaCha8Rng) -> (Vec<FeatureVector>, Vec<Label>) {
    let n = rng.random_range(8..=200);
    let width = rng.random_range(1..=50);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut entries = Vec::new();
        for f in 0..width {
            if rng.random::<f64>() < 0.3 {
                entries.push((f, rng.random_range(1..=5) as f64));
            }
        }
        let has_first = entries.first().is_some_and(|&(f, _)| f == 0);
        let flip = rng.random::<f64>() < 0.15;
        rows.push(FeatureVector { entries, width });
        labels.push(bit_label(has_first != flip));
    }
    (rows, labels)
}

/// Recomputes every leaf value from the closed form -G/(H+lambda)*lr by
/// replaying margins round by round, and checks that every leaf received
/// at least one training row.
fn replay_leaf_values(model: &GbdtModel, rows: &[FeatureVector], labels: &[Label]) -> (usize, f64) {
    let lr = model.config.learning_rate;
    let lambda = model.config.l2_lambda;
    let mut margins = vec![model.base_score; rows.len()];
    let mut checked = 0usize;
    let mut max_err = 0.0f64;
    for tree in &model.trees {
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            let mut at = 0usize;
            loop {
                match &tree.nodes[at] {
                    Node::Leaf { .. } => break,
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        at = if row.value(*feature) < *threshold {
                            *left
                        } else {
                            *right
                        };
                    }
                }
            }
            members.entry(at).or_default().push(i);
        }
        let leaf_count = tree
            .nodes
            .iter()
            .filter(|node| matches!(node, Node::Leaf { .. }))
            .count();
        assert_eq!(members.len(), leaf_count, "every leaf must receive rows");
        for (node, rows_here) in &members {
            let Node::Leaf { value } = &tree.nodes[*node] else {
                panic!("rows must land on leaves");
            };
            let mut g = 0.0;
            let mut h = 0.0;
            for &i in rows_here {
                let p = 1.0 / (1.0 + (-margins[i]).exp());
                g += p - f64::from(labels[i].bit());
                h += p * (1.0 - p);
            }
            let expected = -g / (h + lambda) * lr;
            max_err = max_err.max((expected - value).abs());
            checked += 1;
            for &i in rows_here {
                margins[i] += value;
            }
        }
    }
    (checked, max_err)
}

#[test]
fn criterion_6_boosted_trees_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let config = TrainConfig {
        rounds: 10,
        ..TrainConfig::default()
    };
    let mut leaves_checked = 0usize;
    let mut max_leaf_err = 0.0f64;
    for dataset in 0..100 {
        let (rows, labels) = random_dataset(&mut rng);
        let (model, losses) = GbdtModel::train_traced(&rows, &labels, config).expect("trains");
        for pair in losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-10,
                "dataset {dataset}: loss rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
        if dataset % 5 == 0 {
            let (checked, err) = replay_leaf_values(&model, &rows, &labels);
            leaves_checked += checked;
            max_leaf_err = max_leaf_err.max(err);
            assert!(err < 1e-10, "dataset {dataset}: leaf error {err}");
        }
    }
    assert!(leaves_checked > 0);

    let (rows, labels) = random_dataset(&mut ChaCha8Rng::seed_from_u64(602));
    let first = GbdtModel::train(&rows, &labels, config).expect("trains");
    let second = GbdtModel::train(&rows, &labels, config).expect("trains");
    assert_eq!(first.to_model_string(), second.to_model_string());

    let toy_rows: Vec<FeatureVector> = (0..12)
        .map(|i| FeatureVector {
            entries: vec![(0, if i < 6 { 0.0 } else { 2.0 })],
            width: 1,
        })
        .collect();
    let toy_labels: Vec<Label> = (0..12).map(|i| bit_label(i >= 6)).collect();
    let toy = GbdtModel::train(
        &toy_rows,
        &toy_labels,
        TrainConfig {
            rounds: 20,
            ..TrainConfig::default()
        },
    )
    .expect("trains");
    for (row, label) in toy_rows.iter().zip(&toy_labels) {
        let p = toy.predict_proba(row).expect("width matches");
        assert_eq!(bit_label(p > 0.5), *label);
    }
    println!(
        "criterion 6 PASS: training loss non-increasing on 100 random datasets (tolerance 1e-10); \
         {leaves_checked} leaf values match the closed form within 1e-10 (max err \
         {max_leaf_err:.2e}); same-seed dumps byte-identical; separable toy exact in 20 rounds"
    );
}

fn metrics_oracle(truths: &[Label], preds: &[Label]) -> (f64, f64, f64, f64) {
    let mut tp = 0.0f64;
    let mut fp = 0.0f64;
    let mut tn = 0.0f64;
    let mut fn_ = 0.0f64;
    for (truth, pred) in truths.iter().zip(preds) {
        match (truth.is_stereotypical(), pred.is_stereotypical()) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (false, false) => tn += 1.0,
            (true, false) => fn_ += 1.0,
        }
    }
    let prf = |tp: f64, fp: f64, fn_: f64| {
        let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let recall = if tp + fn_ == 0.0 {
            0.0
        } else {
            tp / (tp + fn_)
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        (precision, recall, f1)
    };
    let pos = prf(tp, fp, fn_);
    let neg = prf(tn, fn_, fp);
    let total = tp + fp + tn + fn_;
    let accuracy = if total == 0.0 { 0.0 } else { (tp + tn) / total };
    (
        accuracy,
        (pos.0 + neg.0) / 2.0,
        (pos.1 + neg.1) / 2.0,
        (pos.2 + neg.2) / 2.0,
    )
}

#[test]
fn criterion_7_metrics_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let mut max_err = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        let truths: Vec<Label> = (0..n).map(|_| bit_label(rng.random::<bool>())).collect();
        let preds: Vec<Label> = (0..n).map(|_| bit_label(rng.random::<bool>())).collect();
        let report = evaluate(&truths, &preds).expect("lengths match");
        let (accuracy, precision, recall, f1) = metrics_oracle(&truths, &preds);
        for (got, expected) in [
            (report.accuracy, accuracy),
            (report.macro_precision, precision),
            (report.macro_recall, recall),
            (report.macro_f1, f1),
        ] {
            max_err = max_err.max((got - expected).abs());
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    let balanced = MetricsReport::from_confusion(ConfusionMatrix {
        true_positive: 1,
        false_positive: 1,
        true_negative: 1,
        false_negative: 1,
    });
    assert_eq!(balanced.accuracy, 0.5);
    assert_eq!(balanced.macro_precision, 0.5);
    assert_eq!(balanced.macro_recall, 0.5);
    assert_eq!(balanced.macro_f1, 0.5);
    println!(
        "criterion 7 PASS: macro metrics match brute-force recomputation on 1000 random vectors \
         within 1e-12 (max err {max_err:.2e}); the (1,1,1,1) matrix scores 0.5 on all four"
    );
}

#[test]
fn criterion_8_segmentation_and_leakage() {
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    for _ in 0..1000 {
        let n = rng.random_range(1..=400);
        let lines: Vec<(String, u8)> = (0..n).map(|i| (format!("line {i}"), 0)).collect();
        let line_refs: Vec<(&str, u8)> = lines
            .iter()
            .map(|(text, label)| (text.as_str(), *label))
            .collect();
        let document = doc("tiling", &line_refs);
        for scheme in Scheme::ALL {
            let segments = segment(&document, scheme);
            assert_eq!(segments.len(), scheme.segment_count(n));
            let mut covered = 0usize;
            for seg in &segments {
                assert_eq!(seg.line_span.0, covered, "spans must tile in order");
                assert!(seg.line_span.1 > seg.line_span.0);
                if let Some(window) = scheme.window() {
                    assert!(seg.line_span.1 - seg.line_span.0 <= window);
                }
                covered = seg.line_span.1;
            }
            assert_eq!(covered, n, "spans must cover every line");
        }
    }

    // Forty documents; `margery`, `zyqqat`, and the planted phrase occur
    // only in p0, so whenever p0 lands in the test partition none of them
    // may survive into the fitted vocabulary or restricted lexicon.
    let mut docs = Vec::new();
    docs.push(doc(
        "p0",
        &[
            ("Margery zyqqat sat among the cinders", 1),
            ("And hummed a winter tune", 0),
        ],
    ));
    for i in 0..39 {
        if i % 2 == 0 {
            docs.push(doc(
                &format!("s{i}"),
                &[
                    (&format!("The river bent past stone {i}"), 0),
                    ("She had a wife but couldn't keep her", 1),
                ],
            ));
        } else {
            docs.push(doc(
                &format!("n{i}"),
                &[
                    (&format!("The river bent past stone {i}"), 0),
                    ("The cat sat by the warm fire", 0),
                ],
            ));
        }
    }
    let base = ExperimentSpec {
        train: TrainConfig {
            rounds: 5,
            ..TrainConfig::default()
        },
        ..ExperimentSpec::default()
    };
    let margery = vec!["margery".to_owned()];
    let planted_phrase: Vec<String> = ["sat", "among", "the", "cinders"]
        .iter()
        .map(|s| (*s).to_owned())
        .collect();
    let mut held_out_runs = 0usize;
    for seed in 0..100 {
        let spec = ExperimentSpec {
            seed,
            ..base.clone()
        };
        let fitted = pipeline::fit(&docs, &spec).expect("fit succeeds");
        let in_test = fitted.split.test.iter().any(|id| id == "p0");
        let lexicon = fitted.lexicon().expect("heuristics are on");
        if in_test {
            held_out_runs += 1;
            assert!(fitted.vectorizer.vocab.index_of("zyqqat").is_none());
            assert!(fitted.vectorizer.vocab.index_of("margery").is_none());
            assert!(!lexicon.female_names.contains(&margery));
            assert!(!lexicon.stereotype_phrases.contains(&planted_phrase));
        } else {
            assert!(fitted.vectorizer.vocab.index_of("zyqqat").is_some());
        }
    }
    assert!(
        held_out_runs > 0,
        "p0 must land in the test partition sometimes"
    );
    println!(
        "criterion 8 PASS: segment tiling holds for all schemes on 1000 random line counts; \
         planted test-only tokens leaked into no vocabulary or lexicon across 100 splits \
         ({held_out_runs} held p0 out)"
    );
}

#[test]
fn criterion_9_prompt_templates() {
    let augmentation_expected = "Replace [*nouns or subject/objects from the poem or rhyme*] \
                                 with synonyms. Keep the poem rhyme scheme and sentence \
                                 formation intact forcefully";
    let rectification_expected = "Change the poem to remove gender stereotypes and make sure to \
                                  keep sentence formation and rhyme scheme close to the original \
                                  as much as possible.";
    assert_eq!(AUGMENTATION_TEMPLATE, augmentation_expected);
    assert_eq!(RECTIFICATION_TEMPLATE, rectification_expected);

    let document = doc("r1", &[("Jack be nimble", 0), ("Jack be quick", 0)]);
    let augment = build_augmentation_prompt(&document).expect("original document");
    assert!(augment.prompt_text.contains(augmentation_expected));
    assert_eq!(
        augment.prompt_text,
        format!("{augmentation_expected}\n\nJack be nimble\nJack be quick")
    );
    let rectify = build_rectification_prompt(&document, true).expect("flagged");
    assert!(rectify.prompt_text.contains(rectification_expected));
    assert_eq!(
        rectify.prompt_text,
        format!("{rectification_expected}\n\nJack be nimble\nJack be quick")
    );
    println!(
        "criterion 9 PASS: both instruction templates appear byte-for-byte in every built prompt"
    );
}
