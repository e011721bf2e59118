mod common;

use common::{brute_classify, features, pt, random_matrix, raw_rows, rng};
use proptest::prelude::*;
use rand::Rng;
use triskel::classifier::{
    acceptance_count, classify, evaluate, ClassId, Knowledgebase, ReferenceVector, Scoring,
};
use triskel::features::{assimilate, FeatureMatrix, TriangleFeatures};
use triskel::geometry::Point2D;

/// Training samples of three classes drawn on different spans, so the
/// length intervals overlap only partly.
fn training(seed: u64, per_class: usize) -> Vec<(ClassId, FeatureMatrix)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for class in 1..=3u32 {
        for _ in 0..per_class {
            let m = r.random_range(3..9);
            out.push((class, random_matrix(&mut r, m, 20.0 * f64::from(class))));
        }
    }
    out
}

fn ref_intervals(kb: &Knowledgebase) -> Vec<(ClassId, Vec<[[f64; 2]; 6]>)> {
    kb.classes()
        .iter()
        .map(|c| {
            let refs = c
                .references
                .iter()
                .map(|r| r.intervals.intervals().map(|i| [i.lo(), i.hi()]))
                .collect();
            (c.class_id, refs)
        })
        .collect()
}

#[test]
fn split_evaluation_matches_brute_force_accuracy() {
    let data = training(11, 10);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, s) in data.into_iter().enumerate() {
        if i % 10 < 7 {
            train.push(s)
        } else {
            test.push(s)
        }
    }
    let kb = Knowledgebase::train(&train).unwrap();
    let summary = evaluate(&kb, &test, Scoring::Raw).unwrap();
    let refs = ref_intervals(&kb);
    let correct = test
        .iter()
        .filter(|(c, fm)| brute_classify(&raw_rows(fm), &refs).0 == *c)
        .count();
    assert_eq!(summary.total, test.len() as u64);
    assert_eq!(summary.correct, correct as u64);
    assert_eq!(summary.accuracy, correct as f64 / test.len() as f64);
}

#[test]
fn disjoint_everywhere_still_assigns_smallest_class() {
    let kb = Knowledgebase::train(&training(5, 2)).unwrap();
    // far larger than anything trained, with an angle profile no trained
    // triangle reaches
    let row = TriangleFeatures::new([1e6, 6e5, 4.1e5], [179.9, 0.06, 0.04]).unwrap();
    let test = FeatureMatrix::new(vec![row]).unwrap();
    let r = classify(&test, &kb).unwrap();
    assert!(r.scores.iter().all(|s| s.ac == 0));
    assert_eq!((r.predicted_class, r.tie), (1, true));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scores_are_bounded_and_agree_with_triple_loop(seed in any::<u64>(), m in 1..12usize) {
        let kb = Knowledgebase::train(&training(seed, 4)).unwrap();
        let test = random_matrix(&mut rng(seed ^ 0xabc), m, 40.0);
        let r = classify(&test, &kb).unwrap();
        let (want, counts) = brute_classify(&raw_rows(&test), &ref_intervals(&kb));
        prop_assert_eq!(r.predicted_class, want);
        for (s, (acl, aca)) in r.scores.iter().zip(counts) {
            prop_assert_eq!((s.acl, s.aca, s.ac), (acl, aca, acl + aca));
            prop_assert!(s.acl <= 3 * m as u64 * s.references && s.aca <= 3 * m as u64 * s.references);
            prop_assert_eq!(s.max_possible, 6 * m as u64 * s.references);
            prop_assert!(s.ac <= s.max_possible);
        }
        let top = r.scores.iter().map(|s| s.ac).max().unwrap();
        prop_assert_eq!(r.scores.iter().find(|s| s.class_id == r.predicted_class).unwrap().ac, top);
    }

    #[test]
    fn every_sample_accepts_itself_completely(seed in any::<u64>(), m in 1..20usize) {
        let fm = random_matrix(&mut rng(seed), m, 50.0);
        let kb = Knowledgebase::train(&[(1, fm.clone())]).unwrap();
        let acc = acceptance_count(&fm, &kb.classes()[0].references).unwrap();
        prop_assert_eq!(acc.total(), 6 * m as u64);
    }

    #[test]
    fn more_references_never_lower_a_count(seed in any::<u64>()) {
        let data = training(seed, 5);
        let test = random_matrix(&mut rng(seed.wrapping_add(1)), 6, 40.0);
        let refs: Vec<_> = data.iter().map(|(c, fm)| ReferenceVector {
            class_id: *c, sample_id: 1, intervals: assimilate(fm),
        }).collect();
        let mut last = 0;
        for n in 1..=refs.len() {
            let ac = acceptance_count(&test, &refs[..n]).unwrap().total();
            prop_assert!(ac >= last);
            last = ac;
        }
    }

    #[test]
    fn order_of_triangles_and_references_is_irrelevant(seed in any::<u64>()) {
        let data = training(seed, 4);
        let test = random_matrix(&mut rng(!seed), 7, 40.0);
        let base = classify(&test, &Knowledgebase::train(&data).unwrap()).unwrap();

        let mut rows = test.rows().to_vec();
        rows.reverse();
        rows.rotate_left(3);
        let shuffled_test = FeatureMatrix::new(rows).unwrap();
        let mut shuffled_data = data.clone();
        shuffled_data.reverse();
        let other = classify(&shuffled_test, &Knowledgebase::train(&shuffled_data).unwrap()).unwrap();
        prop_assert_eq!(base, other);
    }

    #[test]
    fn ten_times_larger_sample_loses_only_length_votes(seed in any::<u64>()) {
        // near-equilateral with side ~30, so 10x lies above every trained
        // length
        let mut r = rng(seed);
        let mut jitter = || r.random_range(-2.0..2.0);
        let corners: Vec<[Point2D; 3]> = (0..6)
            .map(|_| [
                pt(jitter(), jitter()),
                pt(30.0 + jitter(), jitter()),
                pt(15.0 + jitter(), 26.0 + jitter()),
            ])
            .collect();
        let sample = FeatureMatrix::new(corners.iter().map(|&p| features(p)).collect()).unwrap();
        let big = FeatureMatrix::new(
            corners.iter().map(|p| features(p.map(|q| pt(10.0 * q.x(), 10.0 * q.y())))).collect(),
        )
        .unwrap();

        let own = [ReferenceVector { class_id: 1, sample_id: 1, intervals: assimilate(&sample) }];
        prop_assert_eq!(acceptance_count(&sample, &own).unwrap().lengths, 18);
        prop_assert_eq!(acceptance_count(&big, &own).unwrap().lengths, 0);

        // other samples' bounds are not attained by this sample, so the
        // rounding of the rescaled angles cannot move them across one
        let others: Vec<_> = training(seed, 3)
            .iter()
            .map(|(c, fm)| ReferenceVector { class_id: *c, sample_id: 1, intervals: assimilate(fm) })
            .collect();
        let (before, after) = (acceptance_count(&sample, &others).unwrap(), acceptance_count(&big, &others).unwrap());
        prop_assert_eq!(after.lengths, 0);
        prop_assert_eq!(after.angles, before.angles);
    }
}
