//! Conforming triangulations of planar domains with newest-vertex bisection.
//!
//! Every element stores its vertices counter-clockwise and ordered so that
//! the refinement edge is `(v0, v1)`; local edge `k` is the edge opposite
//! local vertex `k`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Local index of the refinement edge `(v0, v1)`.
pub const REFINEMENT_EDGE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub coords: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: usize,
    pub vertices: [usize; 3],
    /// Local edge index of the refinement edge; always [`REFINEMENT_EDGE`].
    pub refinement_edge: usize,
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// One element for boundary edges, two for interior edges.
    pub elements: Vec<usize>,
    /// Outward unit normal of boundary edges.
    pub normal: Option<Point>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements.len() == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    UnitSquare,
    Rectangle,
    /// Centered at the origin; new boundary vertices are snapped to the circle.
    Disk {
        radius: f64,
    },
    Polygon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Every square cell split by its `/` diagonal.
    Diagonal,
    /// Diagonal direction alternating from column to column.
    Chevron,
    /// Both diagonals of every cell (four triangles around a cell center).
    Crisscross,
    /// Diagonal direction alternating like a checkerboard, so grid nodes
    /// have alternately eight and four neighbors.
    UnionJack,
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "diagonal" => Ok(Pattern::Diagonal),
            "chevron" | "alternating" => Ok(Pattern::Chevron),
            "crisscross" => Ok(Pattern::Crisscross),
            "union_jack" | "unionjack" => Ok(Pattern::UnionJack),
            _ => Err(Error::UnknownPattern(s.to_string())),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Diagonal => "diagonal",
            Pattern::Chevron => "chevron",
            Pattern::Crisscross => "crisscross",
            Pattern::UnionJack => "union_jack",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        min: [0.0, 0.0],
        max: [1.0, 1.0],
    };

    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    elements: Vec<Element>,
    edges: Vec<Edge>,
    element_edges: Vec<[usize; 3]>,
    domain: DomainTag,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh {
    /// Builds a mesh from raw triangles, orienting each counter-clockwise and
    /// choosing its longest edge as refinement edge.
    pub fn from_triangles(coords: Vec<Point>, triangles: &[[usize; 3]], domain: DomainTag) -> Result<Self> {
        let mut tris = Vec::with_capacity(triangles.len());
        for (id, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= coords.len()) {
                return Err(Error::DegenerateElement(id));
            }
            let p = t.map(|v| coords[v]);
            // local edge k is opposite vertex k; rotate the longest to slot 2
            let len = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
            let mut best = 2;
            for k in [0, 1] {
                if len[k] > len[best] * (1.0 + 1e-12) {
                    best = k;
                }
            }
            let mut v = match best {
                0 => [t[1], t[2], t[0]],
                1 => [t[2], t[0], t[1]],
                _ => *t,
            };
            if signed_area(coords[v[0]], coords[v[1]], coords[v[2]]) < 0.0 {
                v.swap(0, 1);
            }
            tris.push(v);
        }
        Self::from_oriented(coords, &tris, &vec![0; tris.len()], domain)
    }

    /// Builds a mesh keeping the given vertex order; `(v0, v1)` becomes the
    /// refinement edge. Clockwise triangles are flipped.
    pub fn from_oriented(
        coords: Vec<Point>,
        triangles: &[[usize; 3]],
        generations: &[u32],
        domain: DomainTag,
    ) -> Result<Self> {
        if coords.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidParameter("non-finite vertex coordinate".into()));
        }
        let vertices = coords
            .iter()
            .enumerate()
            .map(|(id, &coords)| Vertex { id, coords })
            .collect();
        let mut elements = Vec::with_capacity(triangles.len());
        for (id, t) in triangles.iter().enumerate() {
            let mut v = *t;
            if v.iter().any(|&i| i >= coords.len()) {
                return Err(Error::DegenerateElement(id));
            }
            let a = signed_area(coords[v[0]], coords[v[1]], coords[v[2]]);
            let scale = dist(coords[v[0]], coords[v[1]]).powi(2);
            if !(a.abs() > 1e-14 * scale) {
                return Err(Error::DegenerateElement(id));
            }
            if a < 0.0 {
                v.swap(0, 1);
            }
            elements.push(Element {
                id,
                vertices: v,
                refinement_edge: REFINEMENT_EDGE,
                generation: generations.get(id).copied().unwrap_or(0),
            });
        }
        let mut mesh = Mesh {
            vertices,
            elements,
            edges: Vec::new(),
            element_edges: Vec::new(),
            domain,
        };
        mesh.build_edges()?;
        Ok(mesh)
    }

    fn build_edges(&mut self) -> Result<()> {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = Vec::with_capacity(self.elements.len());
        for el in &self.elements {
            let v = el.vertices;
            let mut ids = [0; 3];
            for (k, id) in ids.iter_mut().enumerate() {
                let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
                let e = *index.entry(key(a, b)).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [a.min(b), a.max(b)],
                        elements: Vec::new(),
                        normal: None,
                    });
                    edges.len() - 1
                });
                edges[e].elements.push(el.id);
                if edges[e].elements.len() > 2 {
                    return Err(Error::NonConforming(format!(
                        "edge ({a}, {b}) shared by more than two elements"
                    )));
                }
                *id = e;
            }
            element_edges.push(ids);
        }
        for (el, ids) in self.elements.iter().zip(&element_edges) {
            for (k, &e) in ids.iter().enumerate() {
                if edges[e].elements.len() == 1 {
                    // counter-clockwise traversal a → b has the outside on the right
                    let a = self.vertices[el.vertices[(k + 1) % 3]].coords;
                    let b = self.vertices[el.vertices[(k + 2) % 3]].coords;
                    let d = sub(b, a);
                    let l = d[0].hypot(d[1]);
                    edges[e].normal = Some([d[1] / l, -d[0] / l]);
                }
            }
        }
        self.edges = edges;
        self.element_edges = element_edges;
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn coords(&self, v: usize) -> Point {
        self.vertices[v].coords
    }

    /// Edge ids of an element; entry `k` is the edge opposite local vertex `k`.
    pub fn element_edges(&self, e: usize) -> [usize; 3] {
        self.element_edges[e]
    }

    pub fn element_coords(&self, e: usize) -> [Point; 3] {
        self.elements[e].vertices.map(|v| self.vertices[v].coords)
    }

    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_coords(e);
        signed_area(a, b, c)
    }

    /// Longest edge length of an element.
    pub fn diameter(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_coords(e);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_coords(e);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.coords(a), self.coords(b))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.area(e)).sum()
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.diameter(e)).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        (0..self.num_edges())
            .map(|e| self.edge_length(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest interior angle (radians) over all elements.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for e in 0..self.num_elements() {
            let p = self.element_coords(e);
            for k in 0..3 {
                let u = sub(p[(k + 1) % 3], p[k]);
                let w = sub(p[(k + 2) % 3], p[k]);
                let c = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
                best = best.min(c.clamp(-1.0, 1.0).acos());
            }
        }
        best
    }

    /// Boundary edge ids in storage order.
    pub fn boundary_edges(&self) -> Vec<usize> {
        (0..self.num_edges()).filter(|&e| self.edges[e].is_boundary()).collect()
    }

    /// Boundary edges with their outward normals.
    pub fn boundary(&self) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.is_boundary()).collect()
    }

    /// `true` for vertices on a boundary edge.
    pub fn boundary_vertex_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.num_vertices()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        flags
    }

    /// Elements incident to each vertex, in increasing id order.
    pub fn vertex_patches(&self) -> Vec<Vec<usize>> {
        let mut patches = vec![Vec::new(); self.num_vertices()];
        for el in &self.elements {
            for &v in &el.vertices {
                patches[v].push(el.id);
            }
        }
        patches
    }

    /// Checks edge adjacency, orientation and (for rectangles) area coverage.
    pub fn check_conforming(&self) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.elements.is_empty() || e.elements.len() > 2 {
                return Err(Error::NonConforming(format!(
                    "edge {i} has {} elements",
                    e.elements.len()
                )));
            }
            if let Some(n) = e.normal {
                if (n[0].hypot(n[1]) - 1.0).abs() > 1e-12 {
                    return Err(Error::NonConforming(format!("edge {i} normal not unit")));
                }
            }
        }
        for el in &self.elements {
            if self.area(el.id) <= 0.0 {
                return Err(Error::DegenerateElement(el.id));
            }
        }
        // hanging nodes show up as vertices in the interior of a boundary edge
        let bflags = self.boundary_vertex_flags();
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let (a, b) = (self.coords(e.vertices[0]), self.coords(e.vertices[1]));
            let len = dist(a, b);
            for (v, vert) in self.vertices.iter().enumerate() {
                if v == e.vertices[0] || v == e.vertices[1] || !bflags[v] && self.domain_is_polygonal() {
                    continue;
                }
                let p = vert.coords;
                if signed_area(a, b, p).abs() <= 1e-12 * len * len {
                    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
                    if t > 1e-12 && t < 1.0 - 1e-12 {
                        return Err(Error::NonConforming(format!("hanging vertex {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn domain_is_polygonal(&self) -> bool {
        !matches!(self.domain, DomainTag::Disk { .. })
    }

    /// Element containing `p` and its barycentric coordinates; on shared
    /// edges the lowest element id wins.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        for e in 0..self.num_elements() {
            let l = self.barycentric(e, p);
            let tol = 1e-12;
            if l.iter().all(|&x| x >= -tol) {
                return Some((e, l));
            }
        }
        None
    }

    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.element_coords(e);
        let area = signed_area(a, b, c);
        [
            signed_area(p, b, c) / area,
            signed_area(a, p, c) / area,
            signed_area(a, b, p) / area,
        ]
    }

    pub fn point_at(&self, e: usize, l: [f64; 3]) -> Point {
        let [a, b, c] = self.element_coords(e);
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }

    /// Newest-vertex bisection of the marked elements plus the closure
    /// needed to keep the mesh conforming.
    pub fn bisect(&self, marked: &[usize]) -> Result<Mesh> {
        self.bisect_with_parents(marked).map(|(m, _)| m)
    }

    /// Like [`Mesh::bisect`], also returning the parent element of every new
    /// element.
    pub fn bisect_with_parents(&self, marked: &[usize]) -> Result<(Mesh, Vec<usize>)> {
        for &m in marked {
            if m >= self.num_elements() {
                return Err(Error::UnknownElement(m));
            }
        }
        if marked.is_empty() {
            return Ok((self.clone(), (0..self.num_elements()).collect()));
        }
        let refinement_key = |el: &Element| key(el.vertices[0], el.vertices[1]);
        let mut marked_edges: HashSet<(usize, usize)> =
            marked.iter().map(|&m| refinement_key(&self.elements[m])).collect();
        // closure: an element with any marked edge must bisect its refinement edge
        loop {
            let mut changed = false;
            for el in &self.elements {
                let r = refinement_key(el);
                if marked_edges.contains(&r) {
                    continue;
                }
                let v = el.vertices;
                if marked_edges.contains(&key(v[1], v[2])) || marked_edges.contains(&key(v[2], v[0])) {
                    marked_edges.insert(r);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let boundary: HashSet<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| e.is_boundary())
            .map(|e| (e.vertices[0], e.vertices[1]))
            .collect();
        let mut coords: Vec<Point> = self.vertices.iter().map(|v| v.coords).collect();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut tris = Vec::with_capacity(self.num_elements() * 2);
        let mut gens = Vec::with_capacity(self.num_elements() * 2);
        let mut parents = Vec::with_capacity(self.num_elements() * 2);
        let radius = match self.domain {
            DomainTag::Disk { radius } => Some(radius),
            _ => None,
        };
        for (parent, el) in self.elements.iter().enumerate() {
            // depth-first so children stay next to each other
            let mut stack = vec![(el.vertices, el.generation)];
            while let Some((v, g)) = stack.pop() {
                let r = key(v[0], v[1]);
                if !marked_edges.contains(&r) {
                    tris.push(v);
                    gens.push(g);
                    parents.push(parent);
                    continue;
                }
                let m = *midpoints.entry(r).or_insert_with(|| {
                    let (a, b) = (coords[v[0]], coords[v[1]]);
                    let mut p = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                    if let (Some(rad), true) = (radius, boundary.contains(&r)) {
                        let n = p[0].hypot(p[1]);
                        p = [p[0] * rad / n, p[1] * rad / n];
                    }
                    coords.push(p);
                    coords.len() - 1
                });
                // pushed in reverse so the first child is emitted first
                stack.push(([v[1], v[2], m], g + 1));
                stack.push(([v[2], v[0], m], g + 1));
            }
        }
        Ok((Mesh::from_oriented(coords, &tris, &gens, self.domain)?, parents))
    }

    /// Bisects each marked element `bisections` times (descendants of marked
    /// elements are re-marked after every round), with closure.
    pub fn refine_marked(&self, marked: &[usize], bisections: usize) -> Result<Mesh> {
        let mut mesh = self.clone();
        let mut current: Vec<usize> = marked.to_vec();
        for round in 0..bisections {
            let (next, parents) = mesh.bisect_with_parents(&current)?;
            if round + 1 < bisections {
                let set: HashSet<usize> = current.iter().copied().collect();
                current = (0..next.num_elements())
                    .filter(|e| set.contains(&parents[*e]))
                    .collect();
            }
            mesh = next;
        }
        Ok(mesh)
    }

    /// One bisection of every element (plus closure).
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let all: Vec<usize> = (0..self.num_elements()).collect();
        self.bisect(&all)
    }

    /// Sorted set of element ids whose centroid satisfies `pred`.
    pub fn select(&self, pred: impl Fn(Point) -> bool) -> BTreeSet<usize> {
        (0..self.num_elements()).filter(|&e| pred(self.centroid(e))).collect()
    }
}

/// Structured triangulation of `rect` with `n` cells per side.
pub fn structured_mesh(pattern: Pattern, n: usize, rect: Rect) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::ZeroSubdivisions);
    }
    let (w, h) = (rect.max[0] - rect.min[0], rect.max[1] - rect.min[1]);
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::DegenerateRect);
    }
    let (dx, dy) = (w / n as f64, h / n as f64);
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut coords = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n {
                rect.max[0]
            } else {
                rect.min[0] + i as f64 * dx
            };
            let y = if j == n {
                rect.max[1]
            } else {
                rect.min[1] + j as f64 * dy
            };
            coords.push([x, y]);
        }
    }
    let mut tris = Vec::new();
    for q in 0..n {
        for p in 0..n {
            let (a, b, c, d) = (grid(p, q), grid(p + 1, q), grid(p + 1, q + 1), grid(p, q + 1));
            let slash = match pattern {
                Pattern::Diagonal => true,
                Pattern::Chevron => p % 2 == 0,
                Pattern::UnionJack => (p + q) % 2 == 0,
                Pattern::Crisscross => {
                    coords.push([rect.min[0] + (p as f64 + 0.5) * dx, rect.min[1] + (q as f64 + 0.5) * dy]);
                    let m = coords.len() - 1;
                    tris.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
                    continue;
                }
            };
            if slash {
                tris.extend([[a, b, c], [a, c, d]]);
            } else {
                tris.extend([[a, b, d], [b, c, d]]);
            }
        }
    }
    let domain = if rect == Rect::UNIT {
        DomainTag::UnitSquare
    } else {
        DomainTag::Rectangle
    };
    Mesh::from_triangles(coords, &tris, domain)
}

/// Polygonal disk centered at the origin: eight sectors refined by
/// `level` rounds of uniform bisection, boundary vertices on the circle.
pub fn disk_mesh(radius: f64, level: i32) -> Result<Mesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::BadRadius(radius));
    }
    if level < 0 {
        return Err(Error::NegativeLevel(level));
    }
    let mut coords = vec![[0.0, 0.0]];
    for k in 0..8 {
        let t = k as f64 * std::f64::consts::FRAC_PI_4;
        coords.push([radius * t.cos(), radius * t.sin()]);
    }
    // the boundary chord is the refinement edge of every sector
    let tris: Vec<[usize; 3]> = (0..8).map(|k| [1 + k, 1 + (k + 1) % 8, 0]).collect();
    let mut mesh = Mesh::from_oriented(coords, &tris, &[0; 8], DomainTag::Disk { radius })?;
    for _ in 0..level {
        mesh = mesh.refine_uniform()?;
    }
    Ok(mesh)
}
