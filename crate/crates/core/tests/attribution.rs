mod common;

use biasaudit::attribution::{consistency_report, topk_membership, ConsistencyConfig};
use biasaudit::lexicon::{load_lexicon, DescriptorMatcher, MatchOptions};
use biasaudit::attribution::{load_attributions, AttributionError};
use biasaudit::Language;
use common::{fixture, planted};

#[test]
fn planted_sign_is_flagged() {
    let lex = load_lexicon(&fixture("lexicon.tsv")).unwrap();
    let m = DescriptorMatcher::for_language(&lex, Language::Fr, MatchOptions::default());
    let recs = planted(40, 9);
    let rows = consistency_report(&recs, &m, &ConsistencyConfig::default()).unwrap();
    let v = rows.iter().find(|r| r.descriptor == "victime").expect("victime row");
    assert_eq!(v.count_positive_toward_dismissal, 40);
    assert_eq!(v.count_negative_toward_dismissal, 0);
    assert_eq!(v.consistency, 1.0);
    assert!(v.flagged);
}

#[test]
fn topk_is_monotone_in_k() {
    let lex = load_lexicon(&fixture("lexicon.tsv")).unwrap();
    let m = DescriptorMatcher::for_language(&lex, Language::Fr, MatchOptions::default());
    let recs = planted(200, 10);
    let rows = topk_membership(&recs, &m, &[1, 5, 10, 20, 50, 100]).unwrap();
    let v: Vec<_> = rows.iter().filter(|r| r.descriptor == "victime").collect();
    assert_eq!(v.len(), 6);
    for w in v.windows(2) {
        assert!(w[0].k < w[1].k);
        assert!(w[0].occurrences_in_topk <= w[1].occurrences_in_topk);
        assert_eq!(w[0].occurrences_total, w[1].occurrences_total);
    }
    for r in &v {
        let cells: u64 = r.total_by_cell.iter().flatten().sum();
        assert_eq!(cells, r.occurrences_total);
        let cells_in: u64 = r.in_topk_by_cell.iter().flatten().sum();
        assert_eq!(cells_in, r.occurrences_in_topk);
    }
    assert_eq!(v.last().unwrap().occurrences_in_topk, 200);
}

#[test]
fn empty_inputs_give_empty_reports() {
    let lex = load_lexicon(&fixture("lexicon.tsv")).unwrap();
    let m = DescriptorMatcher::for_language(&lex, Language::Fr, MatchOptions::default());
    assert!(topk_membership(&[], &m, &[10]).unwrap().is_empty());
    assert!(consistency_report(&[], &m, &ConsistencyConfig::default()).unwrap().is_empty());
    let empty = lex.filter(|_| false);
    let m = DescriptorMatcher::for_language(&empty, Language::Fr, MatchOptions::default());
    assert!(topk_membership(&planted(5, 1), &m, &[10]).unwrap().is_empty());
}

#[test]
fn malformed_records_are_rejected_with_line_numbers() {
    let good = r#"{"unit_id":"a#0","predicted":0,"true_label":1,"attribution_target":0,"words":["x"],"attributions":[0.5]}"#;
    let bad = [
        r#"{"unit_id":"a#0","predicted":0,"true_label":1,"attribution_target":0,"words":["x","y"],"attributions":[0.5]}"#,
        r#"{"unit_id":"a#0","predicted":0,"true_label":1,"attribution_target":0,"words":["x"],"attributions":[1.5]}"#,
        r#"{"unit_id":"a#0","predicted":2,"true_label":1,"attribution_target":0,"words":["x"],"attributions":[0.5]}"#,
        r#"{"unit_id":"a#0","predicted":0,"true_label":1,"words":["x"],"attributions":[0.5]}"#,
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.jsonl");
    std::fs::write(&path, format!("{good}\n")).unwrap();
    assert_eq!(load_attributions(&path).unwrap().len(), 1);
    for b in bad {
        std::fs::write(&path, format!("{good}\n{b}\n")).unwrap();
        let err = load_attributions(&path).expect_err(b);
        assert!(err.to_string().contains(":2") || err.to_string().contains("line 2"), "{err}");
    }
    assert!(matches!(load_attributions(&dir.path().join("missing.jsonl")), Err(AttributionError::Io(_))));
}

#[test]
fn flipping_target_and_sign_is_an_involution() {
    let lex = load_lexicon(&fixture("lexicon.tsv")).unwrap();
    let m = DescriptorMatcher::for_language(&lex, Language::Fr, MatchOptions::default());
    let recs = planted(50, 4);
    let flipped: Vec<_> = recs
        .iter()
        .cloned()
        .map(|mut r| {
            r.attribution_target = r.attribution_target.other();
            r.attributions.iter_mut().for_each(|a| *a = -*a);
            r
        })
        .collect();
    let cfg = ConsistencyConfig::default();
    assert_eq!(consistency_report(&recs, &m, &cfg).unwrap(), consistency_report(&flipped, &m, &cfg).unwrap());
}
