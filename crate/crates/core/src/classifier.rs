//! Acceptance-count voting over per-sample interval reference vectors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{assimilate, FeatureError, FeatureMatrix, IntervalVector};

pub type ClassId = u32;

pub const KB_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("no training samples")]
    EmptyTrainingSet,
    #[error("no test samples")]
    EmptyTestSet,
    #[error("class has no reference vectors")]
    EmptyClass,
    #[error("class id must be positive")]
    ZeroClassId,
    #[error("test sample labelled with class {0}, which the knowledgebase does not know")]
    UnknownClass(ClassId),
    #[error("malformed knowledgebase: {0}")]
    Malformed(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

/// Interval vector of one training sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceVector {
    pub class_id: ClassId,
    pub sample_id: u32,
    pub intervals: IntervalVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEntry {
    pub class_id: ClassId,
    pub name: String,
    pub references: Vec<ReferenceVector>,
}

/// Trained state: reference vectors grouped by class, ascending class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KbDocument", into = "KbDocument")]
pub struct Knowledgebase {
    classes: Vec<ClassEntry>,
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbDocument {
    format_version: u32,
    fingerprint: String,
    classes: Vec<KbClassHeader>,
    references: Vec<ReferenceVector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbClassHeader {
    class_id: ClassId,
    name: String,
    references: usize,
}

impl From<Knowledgebase> for KbDocument {
    fn from(kb: Knowledgebase) -> Self {
        let classes = kb
            .classes
            .iter()
            .map(|c| KbClassHeader {
                class_id: c.class_id,
                name: c.name.clone(),
                references: c.references.len(),
            })
            .collect();
        let references = kb.classes.into_iter().flat_map(|c| c.references).collect();
        KbDocument {
            format_version: KB_FORMAT_VERSION,
            fingerprint: kb.fingerprint,
            classes,
            references,
        }
    }
}

impl TryFrom<KbDocument> for Knowledgebase {
    type Error = ClassifierError;

    fn try_from(doc: KbDocument) -> Result<Self> {
        if doc.format_version != KB_FORMAT_VERSION {
            return Err(ClassifierError::Malformed(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        let expected: Vec<usize> = doc.classes.iter().map(|h| h.references).collect();
        let mut classes: Vec<ClassEntry> = doc
            .classes
            .into_iter()
            .map(|h| ClassEntry {
                class_id: h.class_id,
                name: h.name,
                references: Vec::new(),
            })
            .collect();
        for r in doc.references {
            let entry = classes
                .iter_mut()
                .find(|c| c.class_id == r.class_id)
                .ok_or_else(|| {
                    ClassifierError::Malformed(format!("reference for undeclared class {}", r.class_id))
                })?;
            entry.references.push(r);
        }
        for (c, n) in classes.iter().zip(expected) {
            if c.references.len() != n {
                return Err(ClassifierError::Malformed(format!(
                    "class {} declares {n} references but has {}",
                    c.class_id,
                    c.references.len()
                )));
            }
        }
        Knowledgebase::from_classes(classes, doc.fingerprint)
    }
}

impl Knowledgebase {
    /// One reference vector per sample; samples keep their input order
    /// within a class. Classes are named `class-<id>`.
    pub fn train(samples: &[(ClassId, FeatureMatrix)]) -> Result<Self> {
        Self::train_named(samples, &BTreeMap::new(), String::new())
    }

    pub fn train_named(
        samples: &[(ClassId, FeatureMatrix)],
        names: &BTreeMap<ClassId, String>,
        fingerprint: String,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        let mut grouped: BTreeMap<ClassId, Vec<ReferenceVector>> = BTreeMap::new();
        for (class_id, fm) in samples {
            if *class_id == 0 {
                return Err(ClassifierError::ZeroClassId);
            }
            let refs = grouped.entry(*class_id).or_default();
            refs.push(ReferenceVector {
                class_id: *class_id,
                sample_id: refs.len() as u32 + 1,
                intervals: assimilate(fm),
            });
        }
        let classes = grouped
            .into_iter()
            .map(|(class_id, references)| ClassEntry {
                class_id,
                name: names
                    .get(&class_id)
                    .cloned()
                    .unwrap_or_else(|| format!("class-{class_id}")),
                references,
            })
            .collect();
        Self::from_classes(classes, fingerprint)
    }

    /// Assemble from explicit entries, checking id uniqueness and that no
    /// class is empty.
    pub fn from_classes(mut classes: Vec<ClassEntry>, fingerprint: String) -> Result<Self> {
        if classes.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        classes.sort_by_key(|c| c.class_id);
        for w in classes.windows(2) {
            if w[0].class_id == w[1].class_id {
                return Err(ClassifierError::Malformed(format!(
                    "duplicate class id {}",
                    w[0].class_id
                )));
            }
        }
        for c in &classes {
            if c.class_id == 0 {
                return Err(ClassifierError::ZeroClassId);
            }
            if c.references.is_empty() {
                return Err(ClassifierError::EmptyClass);
            }
            if let Some(r) = c
                .references
                .iter()
                .find(|r| r.class_id != c.class_id || r.sample_id == 0)
            {
                return Err(ClassifierError::Malformed(format!(
                    "reference {}/{} filed under class {}",
                    r.class_id, r.sample_id, c.class_id
                )));
            }
        }
        Ok(Self { classes, fingerprint })
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    pub fn class(&self, class_id: ClassId) -> Option<&ClassEntry> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn vector_count(&self) -> usize {
        self.classes.iter().map(|c| c.references.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acceptance {
    /// ACL: accepted length features.
    pub lengths: u64,
    /// ACA: accepted angle features.
    pub angles: u64,
}

impl Acceptance {
    /// AC = ACL + ACA.
    pub fn total(&self) -> u64 {
        self.lengths + self.angles
    }
}

/// Count the (triangle, column, reference) triples whose crisp value lies
/// in the reference interval, endpoints included.
pub fn acceptance_count(test: &FeatureMatrix, class_refs: &[ReferenceVector]) -> Result<Acceptance> {
    if test.is_empty() {
        return Err(FeatureError::EmptyMatrix.into());
    }
    if class_refs.is_empty() {
        return Err(ClassifierError::EmptyClass);
    }
    let mut acc = Acceptance {
        lengths: 0,
        angles: 0,
    };
    for r in class_refs {
        let (li, ai) = (r.intervals.lengths(), r.intervals.angles());
        for row in test.rows() {
            let (l, a) = (row.lengths(), row.angles());
            for p in 0..3 {
                acc.lengths += u64::from(li[p].contains(l[p]));
                acc.angles += u64::from(ai[p].contains(a[p]));
            }
        }
    }
    Ok(acc)
}

/// How per-class counts are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    /// Raw AC_j.
    #[default]
    Raw,
    /// AC_j / n_j, so classes with more references get no head start.
    PerReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class_id: ClassId,
    pub acl: u64,
    pub aca: u64,
    pub ac: u64,
    pub references: u64,
    /// 6 · m · n_j.
    pub max_possible: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub predicted_class: ClassId,
    pub scores: Vec<ClassScore>,
    pub tie: bool,
}

pub fn classify(test: &FeatureMatrix, kb: &Knowledgebase) -> Result<ClassificationResult> {
    classify_with(test, kb, Scoring::Raw)
}

/// Highest score wins; ties go to the smallest class id and are flagged.
pub fn classify_with(
    test: &FeatureMatrix,
    kb: &Knowledgebase,
    scoring: Scoring,
) -> Result<ClassificationResult> {
    let m = test.len() as u64;
    let mut scores = Vec::with_capacity(kb.classes.len());
    for c in &kb.classes {
        let acc = acceptance_count(test, &c.references)?;
        let n = c.references.len() as u64;
        scores.push(ClassScore {
            class_id: c.class_id,
            acl: acc.lengths,
            aca: acc.angles,
            ac: acc.total(),
            references: n,
            max_possible: 6 * m * n,
        });
    }
    // a/b > c/d  <=>  a·d > c·b for positive denominators
    let beats = |x: &ClassScore, y: &ClassScore| -> std::cmp::Ordering {
        match scoring {
            Scoring::Raw => x.ac.cmp(&y.ac),
            Scoring::PerReference => (u128::from(x.ac) * u128::from(y.references))
                .cmp(&(u128::from(y.ac) * u128::from(x.references))),
        }
    };
    let mut best = 0;
    let mut tie = false;
    for k in 1..scores.len() {
        match beats(&scores[k], &scores[best]) {
            std::cmp::Ordering::Greater => {
                best = k;
                tie = false;
            }
            std::cmp::Ordering::Equal => tie = true,
            std::cmp::Ordering::Less => {}
        }
    }
    Ok(ClassificationResult {
        predicted_class: scores[best].class_id,
        scores,
        tie,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub actual: ClassId,
    pub predicted: ClassId,
    pub tie: bool,
}

/// Rows are actual classes, columns predicted classes, both in
/// `class_ids` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_ids: Vec<ClassId>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_ids: Vec<ClassId>) -> Self {
        let n = class_ids.len();
        Self {
            class_ids,
            counts: vec![vec![0; n]; n],
        }
    }

    fn index(&self, id: ClassId) -> Option<usize> {
        self.class_ids.binary_search(&id).ok()
    }

    pub fn record(&mut self, actual: ClassId, predicted: ClassId) -> Result<()> {
        let r = self.index(actual).ok_or(ClassifierError::UnknownClass(actual))?;
        let c = self
            .index(predicted)
            .ok_or(ClassifierError::UnknownClass(predicted))?;
        self.counts[r][c] += 1;
        Ok(())
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        debug_assert_eq!(self.class_ids, other.class_ids);
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (v, o) in row.iter_mut().zip(orow) {
                *v += o;
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual\\predicted");
        for id in &self.class_ids {
            let _ = write!(out, ",{id}");
        }
        out.push('\n');
        for (id, row) in self.class_ids.iter().zip(&self.counts) {
            let _ = write!(out, "{id}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub total: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub ties: u64,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<Prediction>,
}

/// Classify every test sample (in parallel) and tally the outcome in
/// input order.
pub fn evaluate(
    kb: &Knowledgebase,
    test_set: &[(ClassId, FeatureMatrix)],
    scoring: Scoring,
) -> Result<EvaluationSummary> {
    if test_set.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let results: Vec<ClassificationResult> = test_set
        .par_iter()
        .map(|(_, fm)| classify_with(fm, kb, scoring))
        .collect::<Result<_>>()?;
    let mut confusion = ConfusionMatrix::new(kb.classes.iter().map(|c| c.class_id).collect());
    let mut predictions = Vec::with_capacity(results.len());
    let (mut correct, mut ties) = (0, 0);
    for ((actual, _), r) in test_set.iter().zip(results) {
        confusion.record(*actual, r.predicted_class)?;
        correct += u64::from(*actual == r.predicted_class);
        ties += u64::from(r.tie);
        predictions.push(Prediction {
            actual: *actual,
            predicted: r.predicted_class,
            tie: r.tie,
        });
    }
    let total = test_set.len() as u64;
    Ok(EvaluationSummary {
        total,
        correct,
        accuracy: correct as f64 / total as f64,
        ties,
        confusion,
        predictions,
    })
}
