//! Area-weighted uniform surface sampling.

use std::sync::OnceLock;

use nalgebra::Vector3;
use rand::Rng;

use super::{mesh::standard_mesh, Assembly, PointCloud, Primitive, PrimitiveClass, TriangleMesh};
use super::DEFAULT_MESH_RESOLUTION;
use crate::{Error, Result};

fn cached_standard_mesh(class: PrimitiveClass) -> &'static TriangleMesh {
    static MESHES: OnceLock<Vec<TriangleMesh>> = OnceLock::new();
    &MESHES.get_or_init(|| {
        PrimitiveClass::ALL
            .iter()
            .map(|&c| standard_mesh(c, DEFAULT_MESH_RESOLUTION))
            .collect()
    })[class.index()]
}

/// The primitive's world mesh at the default resolution.
fn world_mesh(p: &Primitive) -> TriangleMesh {
    let mut mesh = cached_standard_mesh(p.class).clone();
    let m = p.linear_map();
    let t = Vector3::from(p.translation);
    for v in &mut mesh.vertices {
        *v = (m * Vector3::from(*v) + t).into();
    }
    mesh
}

/// Surface area of the transformed primitive mesh.
pub fn surface_area(p: &Primitive) -> f64 {
    world_mesh(p).area()
}

fn sample_mesh<R: Rng + ?Sized>(mesh: &TriangleMesh, n: usize, rng: &mut R) -> Vec<[f64; 3]> {
    let mut cdf = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.triangle_area(f);
        cdf.push(total);
    }
    (0..n)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let face = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
            let [a, b, c] = mesh.faces[face].map(|i| Vector3::from(mesh.vertices[i as usize]));
            let r1 = rng.random::<f64>().sqrt();
            let r2 = rng.random::<f64>();
            (a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)).into()
        })
        .collect()
}

/// Draws `n` points uniformly (by area, after transformation) from the
/// surface of `p`.
pub fn sample_surface<R: Rng + ?Sized>(p: &Primitive, n: usize, rng: &mut R) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    PointCloud::new(sample_mesh(&world_mesh(p), n, rng))
}

/// Splits `total` into integer parts proportional to `weights`, handing the
/// leftover units to the largest fractional remainders (earlier index wins
/// ties).
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if sum <= 0.0 {
        let mut out = vec![total / weights.len(); weights.len()];
        for slot in out.iter_mut().take(total % weights.len()) {
            *slot += 1;
        }
        return out;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Samples `n` points over a whole assembly, allocating them to primitives
/// in proportion to surface area. Labels hold the source primitive index.
pub fn assembly_surface<R: Rng + ?Sized>(a: &Assembly, n: usize, rng: &mut R) -> Result<PointCloud> {
    if a.is_empty() {
        return Err(Error::EmptyAssembly);
    }
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let meshes: Vec<TriangleMesh> = a.primitives.iter().map(world_mesh).collect();
    let areas: Vec<f64> = meshes.iter().map(TriangleMesh::area).collect();
    let counts = largest_remainder(&areas, n);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (index, (mesh, &count)) in meshes.iter().zip(&counts).enumerate() {
        points.extend(sample_mesh(mesh, count, rng));
        labels.extend(std::iter::repeat_n(index as u32, count));
    }
    PointCloud::with_labels(points, labels)
}
