//! Legacy ASCII VTK unstructured grids. Fields are sampled at the mesh
//! vertices; region-wise fields are stitched (conduit value on the
//! interface) and zero outside their region.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{fmt_f64, IoError};
use crate::discretization::{Discretization, FieldSet};
use crate::fem::FeSpace;
use crate::mesh::Region;

const VTK_TRIANGLE: usize = 5;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<usize>,
    pub point_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
}

fn scalar_at(space: &FeSpace, coeffs: &[f64], vertex: usize) -> Option<f64> {
    space.vertex_node(vertex).map(|n| coeffs[n])
}

fn vector_at(space: &FeSpace, coeffs: &[f64], vertex: usize) -> Option<[f64; 2]> {
    space.vertex_node(vertex).map(|n| [coeffs[space.dof(n, 0)], coeffs[space.dof(n, 1)]])
}

/// Renders `state` as a VTK file with point data `phi`, `mu`, `p`, `u` and
/// cell data `region` (0 conduit, 1 matrix)
pub fn write_vtk(disc: &Discretization, state: &FieldSet, title: &str) -> String {
    let mesh = disc.mesh();
    let nv = mesh.vertices().len();
    let nt = mesh.triangles().len();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {nv} double");
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(0.0));
    }
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "{VTK_TRIANGLE}");
    }
    let _ = writeln!(out, "CELL_DATA {nt}");
    let _ = writeln!(out, "SCALARS region int 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for r in mesh.regions() {
        let _ = writeln!(out, "{}", if *r == Region::Conduit { 0 } else { 1 });
    }
    let _ = writeln!(out, "POINT_DATA {nv}");
    let phase = disc.phase();
    let stitched = |f: &dyn Fn(Region, usize) -> Option<f64>| -> Vec<f64> {
        (0..nv).map(|v| f(Region::Conduit, v).or_else(|| f(Region::Matrix, v)).unwrap_or(0.0)).collect()
    };
    let scalars: [(&str, Vec<f64>); 3] = [
        ("phi", (0..nv).map(|v| scalar_at(phase, &state.phi, v).unwrap_or(0.0)).collect()),
        ("mu", (0..nv).map(|v| scalar_at(phase, &state.mu, v).unwrap_or(0.0)).collect()),
        ("p", stitched(&|r, v| scalar_at(disc.pressure(r), state.pressure(r), v))),
    ];
    for (name, values) in &scalars {
        let _ = writeln!(out, "SCALARS {name} double 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for x in values {
            let _ = writeln!(out, "{}", fmt_f64(*x));
        }
    }
    let _ = writeln!(out, "VECTORS u double");
    for v in 0..nv {
        let u = vector_at(disc.velocity(Region::Conduit), &state.u_c, v)
            .or_else(|| vector_at(disc.velocity(Region::Matrix), &state.u_m, v))
            .unwrap_or([0.0; 2]);
        let _ = writeln!(out, "{} {} {}", fmt_f64(u[0]), fmt_f64(u[1]), fmt_f64(0.0));
    }
    out
}

struct Tokens<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn err(&self, reason: impl Into<String>) -> IoError {
        IoError::Format { line: self.line, reason: reason.into() }
    }

    fn next_line(&mut self) -> Option<Vec<&'a str>> {
        for (i, l) in self.lines.by_ref() {
            self.line = i + 1;
            let fields: Vec<&str> = l.split_whitespace().collect();
            if !fields.is_empty() {
                return Some(fields);
            }
        }
        None
    }

    fn expect_line(&mut self) -> Result<Vec<&'a str>, IoError> {
        self.next_line().ok_or_else(|| self.err("unexpected end of file"))
    }

    fn numbers<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>, IoError> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            for f in self.expect_line()? {
                out.push(f.parse().map_err(|_| self.err(format!("cannot parse {f:?}")))?);
            }
        }
        if out.len() != count {
            return Err(self.err("too many values on a line"));
        }
        Ok(out)
    }
}

fn count(tokens: &Tokens, s: &str) -> Result<usize, IoError> {
    s.parse().map_err(|_| tokens.err(format!("bad count {s:?}")))
}

/// Parses the subset of legacy ASCII VTK written by [`write_vtk`]
pub fn parse_vtk(text: &str) -> Result<VtkData, IoError> {
    let mut t = Tokens { lines: text.lines().enumerate().peekable(), line: 0 };
    let mut first = || t.lines.next().map(|(_, l)| l.to_string());
    let version = first().unwrap_or_default();
    if !version.starts_with("# vtk DataFile Version") {
        return Err(IoError::Format { line: 1, reason: "missing VTK version line".into() });
    }
    let _title = t.lines.next();
    t.line = 2;
    if t.expect_line()? != ["ASCII"] {
        return Err(t.err("only ASCII files are supported"));
    }
    if t.expect_line()? != ["DATASET", "UNSTRUCTURED_GRID"] {
        return Err(t.err("only UNSTRUCTURED_GRID datasets are supported"));
    }
    let mut data = VtkData::default();
    let mut section_len = 0;
    let mut in_points = true;
    while let Some(fields) = t.next_line() {
        match fields.as_slice() {
            ["POINTS", n, _] => {
                let n = count(&t, n)?;
                data.points = t.numbers::<f64>(3 * n)?.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            }
            ["CELLS", n, size] => {
                let (n, size) = (count(&t, n)?, count(&t, size)?);
                let flat = t.numbers::<usize>(size)?;
                let mut i = 0;
                for _ in 0..n {
                    let k = *flat.get(i).ok_or_else(|| t.err("truncated CELLS"))?;
                    data.cells.push(flat.get(i + 1..i + 1 + k).ok_or_else(|| t.err("truncated CELLS"))?.to_vec());
                    i += k + 1;
                }
            }
            ["CELL_TYPES", n] => {
                let n = count(&t, n)?;
                data.cell_types = t.numbers(n)?;
            }
            ["POINT_DATA", n] => {
                section_len = count(&t, n)?;
                in_points = true;
            }
            ["CELL_DATA", n] => {
                section_len = count(&t, n)?;
                in_points = false;
            }
            ["SCALARS", name, _, rest @ ..] => {
                if rest.first().is_some_and(|c| *c != "1") {
                    return Err(t.err("only single-component scalars are supported"));
                }
                if t.expect_line()?.first() != Some(&"LOOKUP_TABLE") {
                    return Err(t.err("expected LOOKUP_TABLE"));
                }
                let values = t.numbers::<f64>(section_len)?;
                let target = if in_points { &mut data.point_scalars } else { &mut data.cell_scalars };
                target.insert(name.to_string(), values);
            }
            ["VECTORS", name, _] if in_points => {
                let values = t.numbers::<f64>(3 * section_len)?;
                data.point_vectors.insert(name.to_string(), values.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
            }
            other => return Err(t.err(format!("unsupported record {:?}", other.first()))),
        }
    }
    Ok(data)
}
