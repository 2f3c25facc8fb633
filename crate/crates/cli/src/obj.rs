//! Wavefront OBJ export of assemblies, one object per primitive.

use std::fmt::Write;

use primasm_core::geometry::primitive_mesh;
use primasm_core::Assembly;

/// Object name of primitive `index`.
pub fn group_name(index: usize, class: &str) -> String {
    format!("prim_{index}_{class}")
}

pub fn assembly_to_obj(a: &Assembly, resolution: usize) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for (i, p) in a.primitives.iter().enumerate() {
        let mesh = primitive_mesh(p, resolution);
        writeln!(out, "o {}", group_name(i, p.class.name())).unwrap();
        for v in &mesh.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2]).unwrap();
        }
        for f in &mesh.faces {
            let [a, b, c] = f.map(|k| k as usize + base);
            writeln!(out, "f {a} {b} {c}").unwrap();
        }
        base += mesh.vertices.len();
    }
    out
}
