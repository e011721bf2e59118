//! Mask to feature matrix: thin, trace, simplify, prune, detect,
//! triangulate, measure.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::PipelineConfig;
use super::io::{read_mask, write_json, write_pgm};
use super::HarnessError;
use crate::features::{sample_features, FeatureError, SampleFeatures};
use crate::geometry::{delaunay, GeometryError, Triangulation};
use crate::skeleton::{
    boundary_polygon, dce, detect_points, largest_component, prune_skeleton, thin, BinaryRaster, Polygon,
    SkeletonError, SkeletonPoints,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Read,
    Thin,
    Boundary,
    Dce,
    Prune,
    Detect,
    Triangulate,
    Features,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Read => "read",
            Stage::Thin => "thin",
            Stage::Boundary => "boundary",
            Stage::Dce => "dce",
            Stage::Prune => "prune",
            Stage::Detect => "detect",
            Stage::Triangulate => "triangulate",
            Stage::Features => "features",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageFailure {
    #[error("{0}")]
    Read(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("only {points} skeleton point(s), need at least 3")]
    Unusable { points: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub struct PipelineError {
    pub path: Option<PathBuf>,
    pub stage: Stage,
    #[source]
    pub failure: StageFailure,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}: ", p.display())?;
        }
        write!(f, "{} stage: {}", self.stage, self.failure)
    }
}

impl PipelineError {
    fn at(stage: Stage, failure: impl Into<StageFailure>) -> Self {
        Self {
            path: None,
            stage,
            failure: failure.into(),
        }
    }

    pub fn with_path(mut self, path: &Path) -> Self {
        self.path = Some(path.to_path_buf());
        self
    }

    /// The sample yields no usable triangle (too few skeleton points, or
    /// all of them collinear). Batch evaluation counts and skips these.
    pub fn is_unusable(&self) -> bool {
        matches!(
            self.failure,
            StageFailure::Unusable { .. }
                | StageFailure::Geometry(GeometryError::TooFewPoints(_))
                | StageFailure::Geometry(GeometryError::AllCollinear)
                | StageFailure::Feature(FeatureError::NoValidTriangles)
        )
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self.failure, StageFailure::Geometry(GeometryError::Invariant(_)))
    }
}

pub type StageResult<T> = std::result::Result<T, PipelineError>;

/// Skeleton stages of one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonArtifacts {
    /// Largest foreground component of the input.
    pub shape: BinaryRaster,
    pub thinned: BinaryRaster,
    pub contour: Polygon,
    pub simplified: Polygon,
    pub pruned: BinaryRaster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineArtifacts {
    pub skeleton: SkeletonArtifacts,
    pub points: SkeletonPoints,
    pub triangulation: Triangulation,
    pub features: SampleFeatures,
}

pub fn skeletonize(mask: &BinaryRaster, cfg: &PipelineConfig) -> StageResult<SkeletonArtifacts> {
    let shape = largest_component(mask).map_err(|e| PipelineError::at(Stage::Thin, e))?;
    let thinned = thin(&shape).map_err(|e| PipelineError::at(Stage::Thin, e))?;
    let contour = boundary_polygon(&shape).map_err(|e| PipelineError::at(Stage::Boundary, e))?;
    let simplified = dce(&contour, cfg.dce_stop()).map_err(|e| PipelineError::at(Stage::Dce, e))?;
    let pruned = prune_skeleton(&thinned, &simplified, cfg.prune_radius);
    if pruned.foreground_count() == 0 {
        return Err(PipelineError::at(Stage::Prune, SkeletonError::EmptyMask));
    }
    Ok(SkeletonArtifacts {
        shape,
        thinned,
        contour,
        simplified,
        pruned,
    })
}

/// Endpoints and junctions of a pruned skeleton, and their triangulation.
pub fn triangulate_skeleton(
    pruned: &BinaryRaster,
    cfg: &PipelineConfig,
) -> StageResult<(SkeletonPoints, Triangulation)> {
    let points = detect_points(pruned).map_err(|e| PipelineError::at(Stage::Detect, e))?;
    if points.len() < 3 {
        return Err(PipelineError::at(
            Stage::Detect,
            StageFailure::Unusable { points: points.len() },
        ));
    }
    let tri =
        delaunay(&points.all(), &cfg.tolerances()).map_err(|e| PipelineError::at(Stage::Triangulate, e))?;
    Ok((points, tri))
}

pub fn measure(tri: &Triangulation, cfg: &PipelineConfig) -> StageResult<SampleFeatures> {
    sample_features(tri, &cfg.tolerances()).map_err(|e| PipelineError::at(Stage::Features, e))
}

pub fn process_mask(mask: &BinaryRaster, cfg: &PipelineConfig) -> StageResult<PipelineArtifacts> {
    let skeleton = skeletonize(mask, cfg)?;
    let (points, triangulation) = triangulate_skeleton(&skeleton.pruned, cfg)?;
    let features = measure(&triangulation, cfg)?;
    Ok(PipelineArtifacts {
        skeleton,
        points,
        triangulation,
        features,
    })
}

/// Read the mask at `path` and run every stage on it.
pub fn run_pipeline(path: &Path, cfg: &PipelineConfig) -> StageResult<PipelineArtifacts> {
    let mask = read_mask(path, cfg.threshold)
        .map_err(|e| PipelineError::at(Stage::Read, StageFailure::Read(e.to_string())).with_path(path))?;
    process_mask(&mask, cfg).map_err(|e| e.with_path(path))
}

/// File names written by [`dump_intermediates`] for a sample stem.
pub struct DumpPaths {
    pub thinned: PathBuf,
    pub skeleton: PathBuf,
    pub contour: PathBuf,
    pub simplified: PathBuf,
    pub points: PathBuf,
    pub triangulation: PathBuf,
    pub features: PathBuf,
}

impl DumpPaths {
    pub fn new(dir: &Path, stem: &str) -> Self {
        let f = |suffix: &str| dir.join(format!("{stem}.{suffix}"));
        Self {
            thinned: f("thinned.pgm"),
            skeleton: f("skeleton.pgm"),
            contour: f("contour.json"),
            simplified: f("dce.json"),
            points: f("points.json"),
            triangulation: f("triangulation.json"),
            features: f("features.json"),
        }
    }
}

pub fn dump_intermediates(a: &PipelineArtifacts, dir: &Path, stem: &str) -> Result<DumpPaths, HarnessError> {
    let paths = DumpPaths::new(dir, stem);
    write_pgm(&a.skeleton.thinned, &paths.thinned)?;
    write_pgm(&a.skeleton.pruned, &paths.skeleton)?;
    write_json(&paths.contour, &a.skeleton.contour)?;
    write_json(&paths.simplified, &a.skeleton.simplified)?;
    write_json(&paths.points, &a.points)?;
    write_json(&paths.triangulation, &a.triangulation)?;
    write_json(&paths.features, &a.features.matrix)?;
    Ok(paths)
}
