//! Triangle meshes of the standard and transformed primitives.

use std::f64::consts::PI;

use super::{Primitive, PrimitiveClass};

/// Resolution used for sampling and export unless the caller picks one.
pub const DEFAULT_MESH_RESOLUTION: usize = 64;

/// Indexed triangle mesh with outward (counter-clockwise) winding.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn triangle_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face].map(|i| self.vertices[i as usize]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        0.5 * (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.triangle_area(f)).sum()
    }

    /// True when every directed edge is matched by exactly one opposite edge.
    pub fn is_watertight(&self) -> bool {
        use std::collections::HashMap;
        let mut edges: HashMap<(u32, u32), i32> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        edges
            .iter()
            .all(|(&(a, b), &count)| count == 1 && edges.get(&(b, a)) == Some(&1))
    }
}

fn cuboid() -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| {
            let sign = |bit: usize| if i & bit != 0 { 1.0 } else { -1.0 };
            [sign(1), sign(2), sign(4)]
        })
        .collect();
    // vertex index bits: x = 1, y = 2, z = 4
    let quads: [[u32; 4]; 6] = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let faces = quads
        .iter()
        .flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]])
        .collect();
    TriangleMesh { vertices, faces }
}

fn sphere(resolution: usize) -> TriangleMesh {
    let bands = resolution.max(2);
    let segments = (2 * resolution).max(3);
    let mut vertices = vec![[0.0, 0.0, 1.0]];
    for i in 1..bands {
        let (st, ct) = (PI * i as f64 / bands as f64).sin_cos();
        for j in 0..segments {
            let (sp, cp) = (2.0 * PI * j as f64 / segments as f64).sin_cos();
            vertices.push([st * cp, st * sp, ct]);
        }
    }
    vertices.push([0.0, 0.0, -1.0]);
    let south = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * segments + j % segments) as u32;

    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
        faces.push([south, ring(bands - 1, j + 1), ring(bands - 1, j)]);
    }
    // Each band quad is fanned around a vertex on the sphere at its center,
    // which keeps the chord deviation of the triangles small.
    for i in 1..bands - 1 {
        let (st, ct) = (PI * (i as f64 + 0.5) / bands as f64).sin_cos();
        for j in 0..segments {
            let (sp, cp) = (2.0 * PI * (j as f64 + 0.5) / segments as f64).sin_cos();
            let m = vertices.len() as u32;
            vertices.push([st * cp, st * sp, ct]);
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            faces.extend([[a, c, m], [c, d, m], [d, b, m], [b, a, m]]);
        }
    }
    TriangleMesh { vertices, faces }
}

fn cylinder(resolution: usize) -> TriangleMesh {
    let segments = resolution.max(3);
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for z in [-1.0, 1.0] {
        for j in 0..segments {
            let (s, c) = (2.0 * PI * j as f64 / segments as f64).sin_cos();
            vertices.push([c, s, z]);
        }
    }
    vertices.push([0.0, 0.0, -1.0]);
    vertices.push([0.0, 0.0, 1.0]);
    let bottom = |j: usize| (j % segments) as u32;
    let top = |j: usize| (segments + j % segments) as u32;
    let (bottom_center, top_center) = ((2 * segments) as u32, (2 * segments + 1) as u32);

    let mut faces = Vec::with_capacity(4 * segments);
    for j in 0..segments {
        faces.push([bottom(j), bottom(j + 1), top(j + 1)]);
        faces.push([bottom(j), top(j + 1), top(j)]);
        faces.push([bottom_center, bottom(j + 1), bottom(j)]);
        faces.push([top_center, top(j), top(j + 1)]);
    }
    TriangleMesh { vertices, faces }
}

/// Mesh of the untransformed standard primitive. The cuboid is always the
/// minimal 8-vertex box; `resolution` sets latitude bands of the sphere
/// (with twice as many longitude segments) and radial segments of the
/// cylinder.
pub fn standard_mesh(class: PrimitiveClass, resolution: usize) -> TriangleMesh {
    match class {
        PrimitiveClass::Cuboid => cuboid(),
        PrimitiveClass::Ellipsoid => sphere(resolution),
        PrimitiveClass::EllipticalCylinder => cylinder(resolution),
    }
}

/// Mesh of `p` in world coordinates.
pub fn primitive_mesh(p: &Primitive, resolution: usize) -> TriangleMesh {
    let mut mesh = standard_mesh(p.class, resolution);
    let m = p.linear_map();
    let t = nalgebra::Vector3::from(p.translation);
    for v in &mut mesh.vertices {
        *v = (m * nalgebra::Vector3::from(*v) + t).into();
    }
    mesh
}
