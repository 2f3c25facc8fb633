//! Geometric and segmentation evaluation of predicted assemblies.

mod assignment;
mod geometric;
mod kdtree;
mod segmentation;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use assignment::min_cost_assignment;
pub use geometric::{
    chamfer_distance, emd, hausdorff, matched_cost, occupancy, voxel_cell, voxel_iou,
    DEFAULT_EMD_POINTS, DEFAULT_VOXEL_RESOLUTION,
};
pub use kdtree::KdTree;
pub use segmentation::{rand_index, segmentation_covering, variation_of_information};

use crate::geometry::{assembly_surface, Assembly, PointCloud, Primitive, PrimitiveClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Surface samples per shape.
    pub n_points: usize,
    pub emd_points: usize,
    pub voxel_resolution: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_points: 10_000,
            emd_points: DEFAULT_EMD_POINTS,
            voxel_resolution: DEFAULT_VOXEL_RESOLUTION,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.emd_points == 0 || self.voxel_resolution == 0 {
            return Err(Error::InvalidInput(
                "eval n_points, emd_points and voxel_resolution must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub id: String,
    pub cd: f64,
    pub emd: f64,
    pub hausdorff: f64,
    pub voxel_iou: f64,
    pub ri: Option<f64>,
    pub voi: Option<f64>,
    pub sc: Option<f64>,
}

/// Reference shape: either an assembly (its primitive indices serve as
/// instance labels) or a point cloud, labeled or not.
#[derive(Debug, Clone, Copy)]
pub enum GroundTruth<'a> {
    Assembly(&'a Assembly),
    Points(&'a PointCloud),
}

/// Label of the nearest point of `pred` for every point of `gt`.
pub fn transfer_labels_from(gt: &PointCloud, pred: &PointCloud) -> Result<Vec<u32>> {
    let labels = pred
        .labels()
        .ok_or_else(|| Error::InvalidInput("predicted cloud carries no labels".into()))?;
    let tree = KdTree::new(pred.points());
    Ok(gt
        .points()
        .iter()
        .map(|p| labels[tree.nearest(p).expect("non-empty cloud").0])
        .collect())
}

/// Samples `n_pred_points` on `pred` and gives every `gt` point the primitive
/// index of its nearest sample.
pub fn transfer_labels<R: rand::Rng + ?Sized>(
    gt: &PointCloud,
    pred: &Assembly,
    n_pred_points: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if gt.labels().is_none() {
        return Err(Error::InvalidInput("ground-truth cloud carries no labels".into()));
    }
    if n_pred_points == 0 {
        return Err(Error::InvalidInput("n_pred_points must be positive".into()));
    }
    let cloud = assembly_surface(pred, n_pred_points, rng)?;
    transfer_labels_from(gt, &cloud)
}

fn sampler(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full evaluation of one prediction. Both surfaces are sampled from the
/// same seed, so identical assemblies produce identical point sets.
pub fn evaluate(id: &str, pred: &Assembly, gt: GroundTruth<'_>, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let pred_cloud = assembly_surface(pred, cfg.n_points, &mut sampler(cfg.seed))?;
    let owned;
    let gt_cloud = match gt {
        GroundTruth::Assembly(a) => {
            owned = assembly_surface(a, cfg.n_points, &mut sampler(cfg.seed))?;
            &owned
        }
        GroundTruth::Points(c) => c,
    };
    let mut report = EvalReport {
        id: id.to_string(),
        cd: chamfer_distance(&pred_cloud, gt_cloud)?,
        emd: emd(&pred_cloud, gt_cloud, cfg.emd_points)?,
        hausdorff: hausdorff(&pred_cloud, gt_cloud)?,
        voxel_iou: voxel_iou(&pred_cloud, gt_cloud, cfg.voxel_resolution)?,
        ri: None,
        voi: None,
        sc: None,
    };
    if let Some(gt_labels) = gt_cloud.labels() {
        if gt_labels.len() >= 2 {
            let transferred = transfer_labels_from(gt_cloud, &pred_cloud)?;
            report.ri = Some(rand_index(gt_labels, &transferred)?);
            report.voi = Some(variation_of_information(gt_labels, &transferred)?);
            report.sc = Some(segmentation_covering(gt_labels, &transferred)?);
        }
    }
    Ok(report)
}

/// Evaluates `(id, prediction, reference)` triples in parallel; output order
/// follows input order.
pub fn evaluate_batch(
    items: &[(String, Assembly, Assembly)],
    cfg: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    items
        .par_iter()
        .map(|(id, pred, gt)| evaluate(id, pred, GroundTruth::Assembly(gt), cfg))
        .collect()
}

/// Per-metric means. Segmentation means cover only the reports that have
/// them and are absent when none do.
pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no reports to aggregate".into()));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let opt_mean = |f: fn(&EvalReport) -> Option<f64>| {
        let vals: Vec<f64> = reports.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    Ok(EvalReport {
        id: "mean".into(),
        cd: mean(|r| r.cd),
        emd: mean(|r| r.emd),
        hausdorff: mean(|r| r.hausdorff),
        voxel_iou: mean(|r| r.voxel_iou),
        ri: opt_mean(|r| r.ri),
        voi: opt_mean(|r| r.voi),
        sc: opt_mean(|r| r.sc),
    })
}

/// One cuboid spanning the axis-aligned bounding box of `cloud`; scales are
/// clamped into (0, 1].
pub fn bounding_box_baseline(cloud: &PointCloud) -> Assembly {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in cloud.points() {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut scale = [0.0; 3];
    let mut translation = [0.0; 3];
    for k in 0..3 {
        scale[k] = ((hi[k] - lo[k]) / 2.0).clamp(1e-3, 1.0);
        translation[k] = ((hi[k] + lo[k]) / 2.0).clamp(-1.0, 1.0);
    }
    Assembly::new(vec![Primitive::new(PrimitiveClass::Cuboid, scale, [0.0; 3], translation)])
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::Parse { path: path.to_path_buf(), line, message: format!("{kind:?}") },
    }
}

/// Writes per-sample rows followed by the aggregate row.
pub fn write_report_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let io = |e| csv_error(path, e);
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in reports {
        w.serialize(r).map_err(io)?;
    }
    w.serialize(aggregate(reports)?).map_err(io)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<EvalReport>> {
    let io = |e| csv_error(path, e);
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(io)
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    samples: Vec<EvalReport>,
    aggregate: EvalReport,
}

/// `{"samples": [...], "aggregate": {...}}`
pub fn write_report_json(reports: &[EvalReport], path: &Path) -> Result<()> {
    let doc = ReportFile { samples: reports.to_vec(), aggregate: aggregate(reports)? };
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
