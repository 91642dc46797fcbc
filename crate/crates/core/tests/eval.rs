mod common;

use biasaudit::eval::{aggregate_document, aggregate_votes, classification_report, ConfusionMatrix, TieBreak};
use biasaudit::{Label, PredictionRecord};
use common::{brute_majority, Lcg};

fn pred(unit: &str, l: Label) -> PredictionRecord {
    PredictionRecord { unit_id: unit.into(), predicted: l, scores: None }
}

#[test]
fn every_vote_sequence_up_to_seven_matches_counting() {
    for n in 1..=7u32 {
        for bits in 0..(1u32 << n) {
            let labels: Vec<Label> =
                (0..n).map(|i| if bits >> i & 1 == 1 { Label::Approval } else { Label::Dismissal }).collect();
            let recs: Vec<PredictionRecord> =
                labels.iter().enumerate().map(|(i, &l)| pred(&format!("d#{i}"), l)).collect();
            let refs: Vec<&PredictionRecord> = recs.iter().collect();
            let got = aggregate_document("d", &refs, TieBreak::MajorityClass).unwrap();
            assert_eq!(got.predicted, brute_majority(&labels), "{labels:?}");
            let mut rev = refs.clone();
            rev.reverse();
            assert_eq!(aggregate_document("d", &rev, TieBreak::MajorityClass).unwrap().predicted, got.predicted);
        }
    }
}

#[test]
fn even_split_goes_to_dismissal() {
    let recs = [pred("x#0", Label::Approval), pred("x#1", Label::Dismissal)];
    let v = aggregate_votes(&recs, TieBreak::MajorityClass).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].unit_id, "x");
    assert_eq!(v[0].predicted, Label::Dismissal);
}

#[test]
fn grouping_conserves_documents() {
    let mut rng = Lcg(3);
    let mut recs = Vec::new();
    for d in 0..200 {
        for c in 0..1 + rng.below(6) {
            let l = if rng.below(2) == 0 { Label::Dismissal } else { Label::Approval };
            recs.push(pred(&format!("doc{d:03}#{c}"), l));
        }
    }
    let v = aggregate_votes(&recs, TieBreak::MajorityClass).unwrap();
    assert_eq!(v.len(), 200);
    assert!(v.windows(2).all(|w| w[0].unit_id < w[1].unit_id));
}

fn oracle(p: &[(Label, Label)], positive: Label) -> (f64, f64, f64) {
    let tp = p.iter().filter(|&&(a, b)| a == positive && b == positive).count() as f64;
    let pp = p.iter().filter(|&&(a, _)| a == positive).count() as f64;
    let ap = p.iter().filter(|&&(_, b)| b == positive).count() as f64;
    let prec = if pp == 0.0 { 0.0 } else { tp / pp };
    let rec = if ap == 0.0 { 0.0 } else { tp / ap };
    let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
    (prec, rec, f1)
}

#[test]
fn random_confusions_match_direct_computation() {
    let mut rng = Lcg(21);
    for _ in 0..2000 {
        let n = rng.below(40) as usize;
        let pairs: Vec<(Label, Label)> = (0..n)
            .map(|_| {
                let l = |x| if x == 0 { Label::Dismissal } else { Label::Approval };
                (l(rng.below(2)), l(rng.below(2)))
            })
            .collect();
        let m = ConfusionMatrix::from_pairs(&pairs);
        assert_eq!(m.total() as usize, n);
        let r = match classification_report(&pairs) {
            Ok(r) => r,
            Err(_) => {
                assert_eq!(n, 0);
                continue;
            }
        };
        assert_eq!(r.support as usize, n);
        assert_eq!(r.dismissal.support + r.approval.support, r.support);
        for label in Label::ALL {
            let (p, rc, f) = oracle(&pairs, label);
            let c = r.class(label);
            assert!((c.precision - p).abs() < 1e-12 && (c.recall - rc).abs() < 1e-12 && (c.f1 - f).abs() < 1e-12);
        }
        let correct = pairs.iter().filter(|(a, b)| a == b).count() as f64;
        assert!((r.accuracy - correct / n as f64).abs() < 1e-12);
    }
}

#[test]
fn zero_division_is_reported() {
    let pairs = vec![(Label::Dismissal, Label::Dismissal); 5];
    let r = classification_report(&pairs).unwrap();
    assert_eq!(r.approval.precision, 0.0);
    assert_eq!(r.approval.recall, 0.0);
    assert!(!r.diagnostics.is_empty());
    assert_eq!(r.accuracy, 1.0);
}
