//! Repeated stratified train/test trials over a processed corpus.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::corpus::Corpus;
use super::pipeline::{run_pipeline, Stage};
use super::HarnessError;
use crate::classifier::{evaluate, ClassId, ConfusionMatrix, Knowledgebase, Scoring};
use crate::features::FeatureMatrix;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Relative to the corpus root.
    pub file: PathBuf,
    pub features: FeatureMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetClass {
    pub class_id: ClassId,
    pub name: String,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnusableSample {
    pub class_id: ClassId,
    pub file: PathBuf,
    pub stage: Stage,
    pub reason: String,
}

/// Feature matrices of every usable sample, plus the ones that were not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub corpus_checksum: String,
    pub config_fingerprint: String,
    pub classes: Vec<DatasetClass>,
    pub unusable: Vec<UnusableSample>,
}

/// Run the pipeline over every corpus sample in parallel. Unusable samples
/// are set aside; any other stage failure aborts.
pub fn build_dataset(corpus: &Corpus, cfg: &PipelineConfig) -> Result<Dataset, HarnessError> {
    cfg.validate()?;
    let jobs: Vec<(ClassId, PathBuf)> = corpus
        .classes
        .iter()
        .flat_map(|c| c.files.iter().map(|f| (c.class_id, f.clone())))
        .collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|(_, rel)| run_pipeline(&corpus.root.join(rel), cfg).map(|a| a.features.matrix))
        .collect();

    let mut classes: Vec<DatasetClass> = corpus
        .classes
        .iter()
        .map(|c| DatasetClass {
            class_id: c.class_id,
            name: c.name.clone(),
            samples: Vec::new(),
        })
        .collect();
    let mut unusable = Vec::new();
    for ((class_id, file), outcome) in jobs.into_iter().zip(outcomes) {
        match outcome {
            Ok(features) => {
                let class = classes.iter_mut().find(|c| c.class_id == class_id).unwrap();
                class.samples.push(Sample { file, features });
            }
            Err(e) if e.is_unusable() => {
                log::info!("unusable sample {}: {e}", file.display());
                unusable.push(UnusableSample {
                    class_id,
                    file,
                    stage: e.stage,
                    reason: e.failure.to_string(),
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Dataset {
        corpus_checksum: corpus.checksum.clone(),
        config_fingerprint: cfg.fingerprint(),
        classes,
        unusable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub training_fraction: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for TrialPlan {
    fn default() -> Self {
        Self {
            training_fraction: 0.8,
            trials: 5,
            seed: 42,
        }
    }
}

impl TrialPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.training_fraction > 0.0 && self.training_fraction < 1.0) {
            return Err(HarnessError::Config(format!(
                "training fraction must be in (0, 1), got {}",
                self.training_fraction
            )));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be positive".into()));
        }
        Ok(())
    }
}

/// Training-set size for a class of `n` samples: the rounded fraction,
/// kept within `1..n` so that both sides are non-empty.
pub fn train_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Per class, the sorted indices of the training and test samples.
pub type Split = Vec<(Vec<usize>, Vec<usize>)>;

/// Stratified split: every class is shuffled on its own with the trial's
/// generator and cut at `train_size`. Trial `t` uses ChaCha stream `t` of
/// `seed`, so the same trial draws the same permutation at any fraction.
pub fn stratified_split(
    class_sizes: &[(String, usize)],
    fraction: f64,
    seed: u64,
    trial: usize,
) -> Result<Split, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut out = Vec::with_capacity(class_sizes.len());
    for (name, n) in class_sizes {
        if *n < 2 {
            return Err(HarnessError::SplitInfeasible {
                class: name.clone(),
                usable: *n,
            });
        }
        let mut order: Vec<usize> = (0..*n).collect();
        order.shuffle(&mut rng);
        let k = train_size(*n, fraction);
        let mut train = order[..k].to_vec();
        let mut test = order[k..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        out.push((train, test));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: ClassId,
    pub name: String,
    pub usable: usize,
    pub unusable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub correct: u64,
    pub accuracy: f64,
    pub ties: u64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub corpus_checksum: String,
    pub config_fingerprint: String,
    pub scoring: Scoring,
    pub training_fraction: f64,
    pub seed: u64,
    pub classes: Vec<ClassReport>,
    pub trials: Vec<TrialReport>,
    pub summary: AccuracySummary,
    /// Sum of the per-trial confusion matrices.
    pub confusion: ConfusionMatrix,
    pub unusable: Vec<UnusableSample>,
}

impl EvaluationReport {
    /// One line per trial.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("training_fraction,trial,train_size,test_size,correct,accuracy\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.training_fraction, t.trial, t.train_size, t.test_size, t.correct, t.accuracy
            );
        }
        out
    }
}

/// Max/min/mean accuracy per training fraction, ready to plot.
pub fn plot_csv(reports: &[EvaluationReport]) -> String {
    let mut out = String::from("training_fraction,max,min,mean\n");
    for r in reports {
        let s = r.summary;
        let _ = writeln!(out, "{},{},{},{}", r.training_fraction, s.max, s.min, s.mean);
    }
    out
}

/// Train and test `plan.trials` times on fresh splits of `dataset`.
pub fn evaluate_dataset(
    dataset: &Dataset,
    plan: &TrialPlan,
    cfg: &PipelineConfig,
) -> Result<EvaluationReport, HarnessError> {
    plan.validate()?;
    let sizes: Vec<(String, usize)> = dataset
        .classes
        .iter()
        .map(|c| (c.name.clone(), c.samples.len()))
        .collect();
    let names: BTreeMap<ClassId, String> = dataset
        .classes
        .iter()
        .map(|c| (c.class_id, c.name.clone()))
        .collect();
    let scoring = cfg.scoring();

    let trials: Vec<TrialReport> = (0..plan.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialReport, HarnessError> {
            let split = stratified_split(&sizes, plan.training_fraction, plan.seed, t)?;
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (class, (tr, te)) in dataset.classes.iter().zip(&split) {
                train.extend(
                    tr.iter()
                        .map(|&i| (class.class_id, class.samples[i].features.clone())),
                );
                test.extend(
                    te.iter()
                        .map(|&i| (class.class_id, class.samples[i].features.clone())),
                );
            }
            let kb = Knowledgebase::train_named(&train, &names, dataset.config_fingerprint.clone())?;
            let s = evaluate(&kb, &test, scoring)?;
            Ok(TrialReport {
                trial: t + 1,
                train_size: train.len(),
                test_size: test.len(),
                correct: s.correct,
                accuracy: s.accuracy,
                ties: s.ties,
                confusion: s.confusion,
            })
        })
        .collect::<Result<_, _>>()?;

    let accs: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
    let summary = AccuracySummary {
        max: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: accs.iter().copied().fold(f64::INFINITY, f64::min),
        mean: accs.iter().sum::<f64>() / accs.len() as f64,
    };
    let mut confusion = ConfusionMatrix::new(dataset.classes.iter().map(|c| c.class_id).collect());
    for t in &trials {
        confusion.add(&t.confusion);
    }
    let classes = dataset
        .classes
        .iter()
        .map(|c| ClassReport {
            class_id: c.class_id,
            name: c.name.clone(),
            usable: c.samples.len(),
            unusable: dataset
                .unusable
                .iter()
                .filter(|u| u.class_id == c.class_id)
                .count(),
        })
        .collect();
    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        corpus_checksum: dataset.corpus_checksum.clone(),
        config_fingerprint: dataset.config_fingerprint.clone(),
        scoring,
        training_fraction: plan.training_fraction,
        seed: plan.seed,
        classes,
        trials,
        summary,
        confusion,
        unusable: dataset.unusable.clone(),
    })
}

pub fn run_evaluation(
    corpus: &Corpus,
    plan: &TrialPlan,
    cfg: &PipelineConfig,
) -> Result<EvaluationReport, HarnessError> {
    plan.validate()?;
    evaluate_dataset(&build_dataset(corpus, cfg)?, plan, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TriangleFeatures;

    fn fm(scale: f64) -> FeatureMatrix {
        let r = TriangleFeatures::new(
            [5.0 * scale, 4.0 * scale, 3.0 * scale],
            [90.0, 53.13010235415598, 36.86989764584402],
        )
        .unwrap();
        FeatureMatrix::new(vec![r]).unwrap()
    }

    fn toy(per_class: usize) -> Dataset {
        let classes = (1..=3)
            .map(|c| DatasetClass {
                class_id: c,
                name: format!("c{c}"),
                samples: (0..per_class)
                    .map(|i| Sample {
                        file: PathBuf::from(format!("c{c}/{i}.pgm")),
                        features: fm(10.0 * c as f64 + 0.1 * i as f64),
                    })
                    .collect(),
            })
            .collect();
        Dataset {
            corpus_checksum: "x".into(),
            config_fingerprint: "y".into(),
            classes,
            unusable: vec![],
        }
    }

    #[test]
    fn train_sizes() {
        assert_eq!(train_size(30, 0.4), 12);
        assert_eq!(train_size(30, 0.6), 18);
        assert_eq!(train_size(30, 0.8), 24);
        assert_eq!(train_size(2, 0.9), 1);
        assert_eq!(train_size(5, 0.01), 1);
    }

    #[test]
    fn split_is_a_partition_and_nested() {
        let sizes = vec![("a".to_string(), 10), ("b".to_string(), 7)];
        for t in 0..5 {
            let s40 = stratified_split(&sizes, 0.4, 9, t).unwrap();
            let s80 = stratified_split(&sizes, 0.8, 9, t).unwrap();
            for ((tr, te), (_, n)) in s40.iter().zip(&sizes) {
                let mut all: Vec<usize> = tr.iter().chain(te).copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..*n).collect::<Vec<_>>());
            }
            for ((a, _), (b, _)) in s40.iter().zip(&s80) {
                assert!(a.iter().all(|i| b.contains(i)));
            }
        }
        assert_ne!(
            stratified_split(&sizes, 0.5, 9, 0).unwrap(),
            stratified_split(&sizes, 0.5, 9, 1).unwrap()
        );
        let tiny = vec![("a".to_string(), 1)];
        assert!(matches!(
            stratified_split(&tiny, 0.5, 9, 0),
            Err(HarnessError::SplitInfeasible { .. })
        ));
    }

    #[test]
    fn report_shape_and_determinism() {
        let ds = toy(10);
        let plan = TrialPlan {
            training_fraction: 0.8,
            trials: 5,
            seed: 7,
        };
        let cfg = PipelineConfig::default();
        let r = evaluate_dataset(&ds, &plan, &cfg).unwrap();
        assert_eq!(r.trials.len(), 5);
        assert!(r.summary.min <= r.summary.mean && r.summary.mean <= r.summary.max);
        for t in &r.trials {
            assert_eq!((t.train_size, t.test_size), (24, 6));
        }
        let total: u64 = r.confusion.counts.iter().flatten().sum();
        assert_eq!(total, 30);
        let again = evaluate_dataset(&ds, &plan, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        assert_eq!(r.trials_csv().lines().count(), 6);
        assert_eq!(plot_csv(&[r]).lines().count(), 2);
    }

    #[test]
    fn bad_plans_rejected() {
        let ds = toy(4);
        let cfg = PipelineConfig::default();
        for plan in [
            TrialPlan {
                training_fraction: 0.0,
                ..Default::default()
            },
            TrialPlan {
                training_fraction: 1.0,
                ..Default::default()
            },
            TrialPlan {
                trials: 0,
                ..Default::default()
            },
        ] {
            assert!(evaluate_dataset(&ds, &plan, &cfg).is_err());
        }
    }
}
