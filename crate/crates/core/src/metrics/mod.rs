//! Per-case airway metrics.
//!
//! Voxel overlap: DSC, precision, sensitivity and specificity.
//! Topological completeness: TD (tree length detected) and BD (branch
//! detected), measured on the centerline of the reference. A reference branch
//! counts as detected when strictly more than 80% of its centerline voxels lie
//! inside the prediction. Every metric is computed after the prediction has
//! been reduced to its largest connected component.

mod cache;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cache::SkeletonCache;

use crate::error::{Error, Result};
use crate::topology::{largest_component, parse_branches, skeletonize, SkeletonGraph};
use crate::volume::{confusion, shape_check, ConfusionCounts, VoxelMask};

/// Fraction of a branch's centerline that must be covered, exclusive.
pub const BRANCH_DETECTION_THRESHOLD: f64 = 0.8;

pub fn dsc(c: &ConfusionCounts) -> Result<f64> {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        return Err(Error::UndefinedMetric("DSC: prediction and reference are both empty"));
    }
    Ok(100.0 * (2 * c.tp) as f64 / denom as f64)
}

/// Precision; `None` when the prediction is empty.
pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.tp + c.fp;
    (denom > 0).then(|| 100.0 * c.tp as f64 / denom as f64)
}

pub fn sensitivity(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.tp + c.fn_;
    if denom == 0 {
        return Err(Error::UndefinedMetric("sensitivity: reference is empty"));
    }
    Ok(100.0 * c.tp as f64 / denom as f64)
}

/// Specificity, 100·tn / (|I| − |Y|).
pub fn specificity(c: &ConfusionCounts, total_voxels: u64) -> Result<f64> {
    let denom = total_voxels.saturating_sub(c.reference());
    if denom == 0 {
        return Err(Error::UndefinedMetric("specificity: reference fills the grid"));
    }
    Ok(100.0 * c.tn as f64 / denom as f64)
}

/// Which centerline is checked against which mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageDirection {
    /// Reference centerline inside the prediction. Keeps TD and BD within [0, 100].
    #[default]
    Reference,
    /// Prediction centerline inside the reference.
    Prediction,
}

impl FromStr for CoverageDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(CoverageDirection::Reference),
            "prediction" => Ok(CoverageDirection::Prediction),
            other => Err(Error::Parse(format!(
                "coverage direction `{other}` (expected reference|prediction)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub min_branch_mm: f64,
    pub coverage_direction: CoverageDirection,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            min_branch_mm: 0.0,
            coverage_direction: CoverageDirection::Reference,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeCoverage {
    pub t_det: f64,
    pub t_ref: f64,
    pub b_det: usize,
    pub b_ref: usize,
    pub per_branch_coverage: Vec<f64>,
}

impl TreeCoverage {
    pub fn td(&self) -> f64 {
        100.0 * (self.t_det / self.t_ref)
    }

    pub fn bd(&self) -> f64 {
        100.0 * self.b_det as f64 / self.b_ref as f64
    }
}

/// Measures how much of `skel` lies inside `mask`.
///
/// Detected length sums the centerline steps whose two voxels are both inside;
/// a branch is detected when more than 80% of its own voxels are inside.
pub fn tree_coverage(mask: &VoxelMask, skel: &SkeletonGraph) -> Result<TreeCoverage> {
    if skel.branches.is_empty() {
        return Err(Error::EmptyReference);
    }
    let inside = mask.data();
    let mut cov = TreeCoverage {
        b_ref: skel.branches.len(),
        ..TreeCoverage::default()
    };
    for b in &skel.branches {
        let (mut full, mut hit) = (0.0, 0.0);
        for (a, c) in b.segments() {
            let step = skel.step_length(a, c);
            full += step;
            if inside[a] && inside[c] {
                hit += step;
            }
        }
        cov.t_ref += full;
        cov.t_det += hit;
        let own = b.interior();
        let fraction = if own.is_empty() {
            // a branch made only of junction anchors; judge it by its path
            b.path.iter().filter(|&&v| inside[v]).count() as f64 / b.path.len() as f64
        } else {
            own.iter().filter(|&&v| inside[v]).count() as f64 / own.len() as f64
        };
        if fraction > BRANCH_DETECTION_THRESHOLD {
            cov.b_det += 1;
        }
        cov.per_branch_coverage.push(fraction);
    }
    if cov.t_ref <= 0.0 {
        return Err(Error::EmptyReference);
    }
    Ok(cov)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: String,
    #[serde(rename = "TD")]
    pub td: f64,
    #[serde(rename = "BD")]
    pub bd: f64,
    #[serde(rename = "DSC")]
    pub dsc: f64,
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "Sen")]
    pub sen: f64,
    #[serde(rename = "Spe")]
    pub spe: f64,
    pub confusion: ConfusionCounts,
    pub coverage: TreeCoverage,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CaseMetrics {
    pub fn values(&self) -> [f64; 6] {
        [self.td, self.bd, self.dsc, self.precision, self.sen, self.spe]
    }
}

/// Builds the parsed reference centerline, consulting `cache` for the thinning.
pub fn reference_skeleton(gt: &VoxelMask, min_branch_mm: f64, cache: Option<&SkeletonCache>) -> SkeletonGraph {
    let raw = match cache {
        Some(c) => SkeletonGraph::from_voxels(gt.dims(), gt.spacing(), c.thinned(gt).as_ref().clone()),
        None => skeletonize(gt),
    };
    parse_branches(&raw, gt.spacing(), min_branch_mm)
}

/// Full per-case pipeline: largest component of the prediction, voxel
/// overlap against the reference, then centerline coverage.
pub fn evaluate_case(
    case_id: &str,
    pred: &VoxelMask,
    gt: &VoxelMask,
    opts: &EvalOptions,
    cache: Option<&SkeletonCache>,
) -> Result<CaseMetrics> {
    let check = shape_check(pred, gt)?;
    let mut warnings: Vec<String> = check.spacing_warning.into_iter().collect();
    for w in &warnings {
        log::warn!("{case_id}: {w}");
    }

    let pred_lcc = largest_component(pred).with_spacing(gt.spacing());
    let counts = confusion(&pred_lcc, gt)?;

    let dsc_v = dsc(&counts)?;
    let precision_v = precision(&counts).unwrap_or_else(|| {
        warnings.push("empty prediction: precision reported as 0".into());
        0.0
    });
    let sen_v = sensitivity(&counts)?;
    let spe_v = specificity(&counts, gt.total_voxels() as u64)?;

    let reference = reference_skeleton(gt, opts.min_branch_mm, cache);
    let coverage = match opts.coverage_direction {
        CoverageDirection::Reference => tree_coverage(&pred_lcc, &reference)?,
        CoverageDirection::Prediction => {
            if reference.branches.is_empty() {
                return Err(Error::EmptyReference);
            }
            let pred_skel = parse_branches(&skeletonize(&pred_lcc), gt.spacing(), opts.min_branch_mm);
            let mut c = if pred_skel.branches.is_empty() {
                TreeCoverage::default()
            } else {
                tree_coverage(gt, &pred_skel)?
            };
            c.t_ref = reference.tree_length();
            c.b_ref = reference.branches.len();
            c
        }
    };

    Ok(CaseMetrics {
        case_id: case_id.to_string(),
        td: coverage.td(),
        bd: coverage.bd(),
        dsc: dsc_v,
        precision: precision_v,
        sen: sen_v,
        spe: spe_v,
        confusion: counts,
        coverage,
        warnings,
    })
}
