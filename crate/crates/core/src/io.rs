//! VTK legacy output, a plain-text mesh dump and DOF value tables.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::femspace::FeSpace;
use crate::mesh::{DomainTag, Mesh, Point};

const VTK_TRIANGLE: u8 = 5;
const VTK_QUADRATIC_TRIANGLE: u8 = 22;

/// Writes the trial space as an ASCII `UNSTRUCTURED_GRID`. Points are the
/// DOF locations, so P2 meshes use quadratic triangles. `coeffs` becomes
/// the point field `u`; `cell_fields` are per-element scalars.
pub fn write_vtk<W: Write>(
    mut out: W,
    space: &FeSpace<'_>,
    coeffs: Option<&[f64]>,
    cell_fields: &[(&str, &[f64])],
) -> Result<()> {
    let mesh = space.mesh();
    let n = space.num_dofs();
    let ne = mesh.num_elements();
    if let Some(c) = coeffs {
        if c.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: c.len(),
            });
        }
    }
    for (_, f) in cell_fields {
        if f.len() != ne {
            return Err(Error::Dimension {
                expected: ne,
                got: f.len(),
            });
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "fecvx P{} solution", space.degree())?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for d in space.dofs() {
        writeln!(out, "{:.16e} {:.16e} 0", d.location[0], d.location[1])?;
    }
    // VTK orders the midpoints (01, 12, 20), i.e. opposite vertices 2, 0, 1
    let order: &[usize] = if space.degree() == 1 {
        &[0, 1, 2]
    } else {
        &[0, 1, 2, 5, 3, 4]
    };
    writeln!(out, "CELLS {ne} {}", ne * (order.len() + 1))?;
    for e in 0..ne {
        let dofs = space.element_dofs(e);
        let ids: Vec<String> = order.iter().map(|&k| dofs[k].to_string()).collect();
        writeln!(out, "{} {}", order.len(), ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    let ty = if space.degree() == 1 {
        VTK_TRIANGLE
    } else {
        VTK_QUADRATIC_TRIANGLE
    };
    for _ in 0..ne {
        writeln!(out, "{ty}")?;
    }
    if let Some(c) = coeffs {
        writeln!(out, "POINT_DATA {n}")?;
        writeln!(out, "SCALARS u double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in c {
            writeln!(out, "{v:.16e}")?;
        }
    }
    writeln!(out, "CELL_DATA {ne}")?;
    writeln!(out, "SCALARS generation int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for el in mesh.elements() {
        writeln!(out, "{}", el.generation)?;
    }
    for (name, f) in cell_fields {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in *f {
            writeln!(out, "{v:.16e}")?;
        }
    }
    Ok(())
}

/// Line-oriented dump keeping vertex order, orientation, refinement edges
/// and generations, so refinement can resume after [`read_mesh`].
pub fn write_mesh<W: Write>(mut out: W, mesh: &Mesh) -> Result<()> {
    writeln!(out, "fecvx-mesh 1")?;
    match mesh.domain() {
        DomainTag::UnitSquare => writeln!(out, "domain unit_square")?,
        DomainTag::Rectangle => writeln!(out, "domain rectangle")?,
        DomainTag::Disk { radius } => writeln!(out, "domain disk {radius:e}")?,
        DomainTag::Polygon => writeln!(out, "domain polygon")?,
    }
    writeln!(out, "vertices {}", mesh.num_vertices())?;
    for v in mesh.vertices() {
        writeln!(out, "{:e} {:e}", v.coords[0], v.coords[1])?;
    }
    writeln!(out, "elements {}", mesh.num_elements())?;
    for el in mesh.elements() {
        let [a, b, c] = el.vertices;
        writeln!(out, "{a} {b} {c} {}", el.generation)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            let l = self.inner.next().ok_or_else(|| self.err("unexpected end of input"))??;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(t.split_whitespace().map(str::to_owned).collect());
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn header(&mut self, key: &str) -> Result<Vec<String>> {
        let f = self.next()?;
        if f.first().map(String::as_str) != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(f)
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut r = Lines {
        inner: input.lines(),
        line: 0,
    };
    let magic = r.next()?;
    if magic != ["fecvx-mesh", "1"] {
        return Err(r.err("not a fecvx mesh dump"));
    }
    let d = r.header("domain")?;
    let domain = match d.get(1).map(String::as_str) {
        Some("unit_square") => DomainTag::UnitSquare,
        Some("rectangle") => DomainTag::Rectangle,
        Some("polygon") => DomainTag::Polygon,
        Some("disk") => DomainTag::Disk {
            radius: r.parse(d.get(2).ok_or_else(|| r.err("missing disk radius"))?)?,
        },
        _ => return Err(r.err("unknown domain")),
    };
    let nv: usize = {
        let f = r.header("vertices")?;
        r.parse(f.get(1).ok_or_else(|| r.err("missing count"))?)?
    };
    let mut coords: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let f = r.next()?;
        if f.len() != 2 {
            return Err(r.err("expected two coordinates"));
        }
        coords.push([r.parse(&f[0])?, r.parse(&f[1])?]);
    }
    let ne: usize = {
        let f = r.header("elements")?;
        r.parse(f.get(1).ok_or_else(|| r.err("missing count"))?)?
    };
    let mut tris = Vec::with_capacity(ne);
    let mut gens = Vec::with_capacity(ne);
    for _ in 0..ne {
        let f = r.next()?;
        if f.len() != 4 {
            return Err(r.err("expected three vertex ids and a generation"));
        }
        let t = [r.parse(&f[0])?, r.parse(&f[1])?, r.parse(&f[2])?];
        if t.iter().any(|&v: &usize| v >= nv) {
            return Err(r.err("vertex id out of range"));
        }
        tris.push(t);
        gens.push(r.parse(&f[3])?);
    }
    Mesh::from_oriented(coords, &tris, &gens, domain)
}

/// `dof,x,y,value` rows.
pub fn write_dofs<W: Write>(mut out: W, space: &FeSpace<'_>, coeffs: &[f64]) -> Result<()> {
    if coeffs.len() != space.num_dofs() {
        return Err(Error::Dimension {
            expected: space.num_dofs(),
            got: coeffs.len(),
        });
    }
    writeln!(out, "dof,x,y,value")?;
    for (i, (d, v)) in space.dofs().iter().zip(coeffs).enumerate() {
        writeln!(out, "{i},{:e},{:e},{v:e}", d.location[0], d.location[1])?;
    }
    Ok(())
}

/// Reads the `value` column written by [`write_dofs`].
pub fn read_dofs<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "dof,x,y,value" {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected header `dof,x,y,value`".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: i + 1,
            msg: msg.into(),
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(err("expected 4 columns"));
        }
        let id: usize = cols[0].trim().parse().map_err(|_| err("bad dof index"))?;
        if id != out.len() {
            return Err(err("dof indices must be consecutive"));
        }
        out.push(cols[3].trim().parse().map_err(|_| err("bad value"))?);
    }
    Ok(out)
}
