//! Partition agreement between two labelings of the same points.

use std::collections::BTreeMap;

use crate::{Error, Result};

struct Contingency {
    n: usize,
    joint: BTreeMap<(u32, u32), usize>,
    rows: BTreeMap<u32, usize>,
    cols: BTreeMap<u32, usize>,
}

impl Contingency {
    fn new(x: &[u32], y: &[u32]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "label arrays differ in length: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("need at least two labeled points".into()));
        }
        let mut c = Contingency { n: x.len(), joint: BTreeMap::new(), rows: BTreeMap::new(), cols: BTreeMap::new() };
        for (&a, &b) in x.iter().zip(y) {
            *c.joint.entry((a, b)).or_default() += 1;
            *c.rows.entry(a).or_default() += 1;
            *c.cols.entry(b).or_default() += 1;
        }
        Ok(c)
    }
}

fn pairs(k: usize) -> f64 {
    let k = k as f64;
    k * (k - 1.0) / 2.0
}

fn entropy<'a>(counts: impl Iterator<Item = &'a usize>, n: f64) -> f64 {
    counts
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Fraction of point pairs on which both labelings agree (same/different).
pub fn rand_index(x: &[u32], y: &[u32]) -> Result<f64> {
    let c = Contingency::new(x, y)?;
    let total = pairs(c.n);
    let same_both: f64 = c.joint.values().map(|&k| pairs(k)).sum();
    let same_x: f64 = c.rows.values().map(|&k| pairs(k)).sum();
    let same_y: f64 = c.cols.values().map(|&k| pairs(k)).sum();
    let agree = total + 2.0 * same_both - same_x - same_y;
    Ok((agree / total).clamp(0.0, 1.0))
}

/// H(X) + H(Y) − 2 I(X;Y), natural log.
pub fn variation_of_information(x: &[u32], y: &[u32]) -> Result<f64> {
    let c = Contingency::new(x, y)?;
    let n = c.n as f64;
    let hx = entropy(c.rows.values(), n);
    let hy = entropy(c.cols.values(), n);
    let hxy = entropy(c.joint.values(), n);
    // I = H(X) + H(Y) − H(X,Y)
    Ok((2.0 * hxy - hx - hy).max(0.0))
}

/// Σ over segments R of `x`: |R|/n · max IoU(R, R′) over segments R′ of `y`.
pub fn segmentation_covering(x: &[u32], y: &[u32]) -> Result<f64> {
    let c = Contingency::new(x, y)?;
    let mut best: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(a, b), &k) in &c.joint {
        let iou = k as f64 / (c.rows[&a] + c.cols[&b] - k) as f64;
        let e = best.entry(a).or_insert(0.0);
        *e = e.max(iou);
    }
    let n = c.n as f64;
    Ok(best.iter().map(|(a, iou)| c.rows[a] as f64 / n * iou).sum::<f64>().min(1.0))
}
