//! Legacy ASCII VTK snapshots (`UNSTRUCTURED_GRID`, biquadratic quads).

use std::io::Write;
use std::path::Path;

use ccst_linalg::Scalar;

use crate::mesh::Mesh;
use crate::{CoreError, Result};

/// VTK cell type id of the 9-node quadrilateral.
pub const BIQUADRATIC_QUAD: u8 = 28;

/// Fields attached to a snapshot; any of them may be omitted.
#[derive(Debug, Clone, Copy, Default)]
pub struct Snapshot<'a, T> {
    /// Full interleaved displacement, two values per node.
    pub u: Option<&'a [T]>,
    /// One rotation per corner node.
    pub theta: Option<&'a [T]>,
    /// One multiplier per element.
    pub s: Option<&'a [T]>,
}

fn check_len(field: &'static str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(CoreError::InvalidParameter {
            field,
            value: got as f64,
            reason: "field length does not match the mesh",
        });
    }
    Ok(())
}

/// Corner rotations extended to every node by bilinear interpolation.
pub fn rotation_at_nodes<T: Scalar>(mesh: &Mesh<T>, theta: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); mesh.num_nodes()];
    let half = T::lit(0.5);
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let c = mesh.element_corners(e).map(|k| theta[k]);
        for k in 0..4 {
            out[nodes[k]] = c[k];
            out[nodes[4 + k]] = half * (c[k] + c[(k + 1) % 4]);
        }
        out[nodes[8]] = T::lit(0.25) * (c[0] + c[1] + c[2] + c[3]);
    }
    out
}

pub fn write<T: Scalar, W: Write>(mesh: &Mesh<T>, fields: &Snapshot<'_, T>, title: &str, mut w: W) -> Result<()> {
    let nn = mesh.num_nodes();
    let ne = mesh.num_elements();
    if let Some(u) = fields.u {
        check_len("u", u.len(), 2 * nn)?;
    }
    if let Some(t) = fields.theta {
        check_len("theta", t.len(), mesh.num_corners())?;
    }
    if let Some(s) = fields.s {
        check_len("s", s.len(), ne)?;
    }
    let title = title.replace('\n', " ");
    writeln!(w, "# vtk DataFile Version 3.0")?;
    if fields.theta.is_some() {
        writeln!(w, "{title}; theta off corner nodes is bilinearly interpolated (display only)")?;
    } else {
        writeln!(w, "{title}")?;
    }
    writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS {nn} double")?;
    for p in mesh.nodes() {
        writeln!(w, "{:e} {:e} 0", p[0].to_f64_lossy(), p[1].to_f64_lossy())?;
    }
    writeln!(w, "CELLS {ne} {}", ne * 10)?;
    for nodes in mesh.elements() {
        write!(w, "9")?;
        for n in nodes {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "{BIQUADRATIC_QUAD}")?;
    }
    if fields.u.is_some() || fields.theta.is_some() {
        writeln!(w, "POINT_DATA {nn}")?;
    }
    if let Some(u) = fields.u {
        writeln!(w, "VECTORS u double")?;
        for d in u.chunks_exact(2) {
            writeln!(w, "{:e} {:e} 0", d[0].to_f64_lossy(), d[1].to_f64_lossy())?;
        }
    }
    if let Some(t) = fields.theta {
        writeln!(w, "SCALARS theta double 1\nLOOKUP_TABLE default")?;
        for v in rotation_at_nodes(mesh, t) {
            writeln!(w, "{:e}", v.to_f64_lossy())?;
        }
    }
    if let Some(s) = fields.s {
        writeln!(w, "CELL_DATA {ne}\nSCALARS s double 1\nLOOKUP_TABLE default")?;
        for v in s {
            writeln!(w, "{:e}", v.to_f64_lossy())?;
        }
    }
    Ok(())
}

pub fn write_file<T: Scalar>(mesh: &Mesh<T>, fields: &Snapshot<'_, T>, title: &str, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write(mesh, fields, title, &mut w)?;
    w.flush()?;
    Ok(())
}
