//! Point-set distances and voxel occupancy overlap.

use std::collections::HashSet;

use super::assignment::min_cost_assignment;
use super::kdtree::KdTree;
use crate::geometry::{farthest_point_sample, PointCloud};
use crate::{Error, Result};

pub const DEFAULT_EMD_POINTS: usize = 256;
pub const DEFAULT_VOXEL_RESOLUTION: usize = 32;

fn check(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("empty point cloud".into()));
    }
    Ok(())
}

/// Squared nearest-neighbor distance from every point of `from` into `to`.
pub(crate) fn nearest_sq(from: &[[f64; 3]], to: &[[f64; 3]]) -> Vec<f64> {
    let tree = KdTree::new(to);
    from.iter()
        .map(|p| tree.nearest(p).map_or(f64::INFINITY, |(_, d)| d))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Chamfer distance: sum of both directed mean squared nearest distances.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check(a, b)?;
    Ok(mean(&nearest_sq(a.points(), b.points())) + mean(&nearest_sq(b.points(), a.points())))
}

/// Symmetric Hausdorff distance (unsquared).
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check(a, b)?;
    let directed = |x: &PointCloud, y: &PointCloud| {
        nearest_sq(x.points(), y.points()).into_iter().fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

/// Earth mover's distance between farthest-point subsamples of equal size
/// `min(n_sub, |a|, |b|)`: mean Euclidean cost of the optimal matching.
pub fn emd(a: &PointCloud, b: &PointCloud, n_sub: usize) -> Result<f64> {
    check(a, b)?;
    if n_sub == 0 {
        return Err(Error::InvalidInput("n_sub must be positive".into()));
    }
    let n = n_sub.min(a.len()).min(b.len());
    let pick = |c: &PointCloud| -> Vec<[f64; 3]> {
        farthest_point_sample(c.points(), n, 0).into_iter().map(|i| c.points()[i]).collect()
    };
    let (pa, pb) = (pick(a), pick(b));
    Ok(matched_cost(&pa, &pb))
}

/// Mean Euclidean cost of the optimal one-to-one matching of equal-size sets.
pub fn matched_cost(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut cost = Vec::with_capacity(n * n);
    for p in a {
        for q in b {
            cost.push(super::kdtree::dist2(p, q).sqrt());
        }
    }
    let assign = min_cost_assignment(&cost, n);
    assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>() / n as f64
}

/// Occupancy cell of a point on a `resolution`³ grid over [−1, 1]³. Returns
/// whether the point had to be clamped.
pub fn voxel_cell(p: &[f64; 3], resolution: usize) -> ([usize; 3], bool) {
    let mut cell = [0; 3];
    let mut clamped = false;
    for k in 0..3 {
        let t = (p[k] + 1.0) / 2.0 * resolution as f64;
        if !(-1.0..=1.0).contains(&p[k]) {
            clamped = true;
        }
        cell[k] = if t.is_nan() || t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(resolution - 1)
        };
    }
    (cell, clamped)
}

pub fn occupancy(points: &[[f64; 3]], resolution: usize) -> HashSet<[usize; 3]> {
    let mut outside = 0usize;
    let cells = points
        .iter()
        .map(|p| {
            let (c, clamped) = voxel_cell(p, resolution);
            outside += clamped as usize;
            c
        })
        .collect();
    if outside > 0 {
        log::warn!("{outside} points outside [-1,1]^3 clamped into boundary voxels");
    }
    cells
}

/// Intersection over union of the two occupancy grids.
pub fn voxel_iou(a: &PointCloud, b: &PointCloud, resolution: usize) -> Result<f64> {
    check(a, b)?;
    if resolution == 0 {
        return Err(Error::InvalidInput("voxel resolution must be positive".into()));
    }
    let ga = occupancy(a.points(), resolution);
    let gb = occupancy(b.points(), resolution);
    let inter = ga.intersection(&gb).count();
    let union = ga.len() + gb.len() - inter;
    Ok(inter as f64 / union as f64)
}
