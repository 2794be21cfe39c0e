//! Evaluation toolkit for tree-structured volumetric segmentations such as
//! pulmonary airways.
//!
//! The pipeline mirrors common airway-challenge practice: the prediction is
//! reduced to its largest 26-connected component, voxel overlap is scored with
//! DSC/precision/sensitivity/specificity, and topological completeness is
//! measured on the centerline of the reference (tree length detected, TD, and
//! branch detected, BD). Team results aggregate into leaderboards whose
//! stability can be checked with Kendall's tau.
//!
//! | module | purpose |
//! |---|---|
//! | [`volume`] | masks, spacing, NIfTI-1 and `.tbm` I/O, confusion counts |
//! | [`topology`] | component labeling, largest component, thinning, branch parsing |
//! | [`metrics`] | per-case metrics and the reference-skeleton cache |
//! | [`ranking`] | aggregation, weighted scores, leaderboards, Kendall's tau |
//! | [`phantom`] | synthetic bifurcating tube trees with exact truth |
//! | [`cli`] | batch orchestration behind the `treeval` binary |

pub mod cli;
pub mod error;
pub mod metrics;
pub mod phantom;
pub mod ranking;
pub mod topology;
pub mod volume;

pub use error::{Error, Result};
pub use metrics::{evaluate_case, CaseMetrics, EvalOptions};
pub use topology::{largest_component, label_components, parse_branches, skeletonize, SkeletonGraph};
pub use volume::{load_mask, save_mask, Spacing, VoxelMask};
