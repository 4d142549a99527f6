//! Quadrilateral meshes, isoparametric mapping, point location and the
//! line-oriented text format.
//!
//! Text format (`#` starts a comment line):
//!
//! ```text
//! nodes <N>
//! <id> <x> <y>            # N lines, ids 0..N-1 in order
//! elements <M>
//! <id> <n1> <n2> <n3> <n4> <material>   # M lines, counter-clockwise
//! tags <K>
//! nodeset <name> <count> <id> <id> ...
//! edgeset <name> <count> <elem>:<local_edge> ...
//! ```
//!
//! Local edge `k` joins local nodes `k` and `(k+1) % 4`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quadrature::shape_unchecked;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub coords: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub id: usize,
    pub nodes: [usize; 4],
    pub material: usize,
}

/// Named boundary set: nodes plus (element, local edge) pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tag {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Loaded part of each edge as a parameter range from its first to its
    /// second node; empty when every edge is loaded over its full length.
    pub spans: Vec<[f64; 2]>,
}

impl Tag {
    pub fn span(&self, i: usize) -> [f64; 2] {
        self.spans.get(i).copied().unwrap_or([0.0, 1.0])
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
    pub tags: BTreeMap<String, Tag>,
}

/// Isoparametric map evaluated at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct Jacobian {
    pub j: [[f64; 2]; 2],
    pub det: f64,
    pub inv: [[f64; 2]; 2],
    pub x: [f64; 2],
}

pub fn build_structured_grid(
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    origin: [f64; 2],
) -> Result<Mesh> {
    if nx == 0 || ny == 0 || !(width > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "structured grid needs nx, ny >= 1 and positive size (got {nx}x{ny}, {width}x{height})"
        )));
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| origin[0] + width * i as f64 / nx as f64)
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| origin[1] + height * j as f64 / ny as f64)
        .collect();
    build_tensor_grid(&xs, &ys)
}

/// Tensor-product grid through the given strictly increasing coordinate
/// lines. Tags "left", "right", "bottom", "top".
pub fn build_tensor_grid(xs: &[f64], ys: &[f64]) -> Result<Mesh> {
    let inc = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
    if !inc(xs) || !inc(ys) {
        return Err(Error::InvalidArgument(
            "grid lines must be strictly increasing with at least two entries".into(),
        ));
    }
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let nid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            nodes.push(Node {
                id: nid(i, j),
                coords: [x, y],
            });
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push(Element {
                id: j * nx + i,
                nodes: [nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)],
                material: 0,
            });
        }
    }
    let eid = |i: usize, j: usize| j * nx + i;
    let mut tags = BTreeMap::new();
    tags.insert(
        "bottom".to_string(),
        Tag {
            nodes: (0..=nx).map(|i| nid(i, 0)).collect(),
            edges: (0..nx).map(|i| (eid(i, 0), 0)).collect(),
            spans: Vec::new(),
        },
    );
    tags.insert(
        "right".to_string(),
        Tag {
            nodes: (0..=ny).map(|j| nid(nx, j)).collect(),
            edges: (0..ny).map(|j| (eid(nx - 1, j), 1)).collect(),
            spans: Vec::new(),
        },
    );
    tags.insert(
        "top".to_string(),
        Tag {
            nodes: (0..=nx).map(|i| nid(i, ny)).collect(),
            edges: (0..nx).map(|i| (eid(i, ny - 1), 2)).collect(),
            spans: Vec::new(),
        },
    );
    tags.insert(
        "left".to_string(),
        Tag {
            nodes: (0..=ny).map(|j| nid(0, j)).collect(),
            edges: (0..ny).map(|j| (eid(0, j), 3)).collect(),
            spans: Vec::new(),
        },
    );
    Ok(Mesh {
        nodes,
        elements,
        tags,
    })
}

/// Grid lines on [a, b] with spacing growing geometrically from `h0` at `a`
/// to at most `h1` at `b`; the last spacing is adjusted to land on `b`.
pub fn graded_lines(a: f64, b: f64, h0: f64, h1: f64, ratio: f64) -> Vec<f64> {
    let mut v = vec![a];
    let mut h = h0;
    let dir = if b > a { 1.0 } else { -1.0 };
    let len = (b - a).abs();
    let mut s = 0.0;
    while s + h < len - 0.5 * h {
        s += h;
        v.push(a + dir * s);
        h = (h * ratio).min(h1);
    }
    v.push(b);
    if dir < 0.0 {
        v.reverse();
    }
    v
}

/// `n` uniform intervals on [a, b], excluding `a`.
pub fn uniform_lines(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

impl Mesh {
    pub fn xy(&self, node: usize) -> [f64; 2] {
        self.nodes[node].coords
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        let el = &self.elements[e];
        [
            self.xy(el.nodes[0]),
            self.xy(el.nodes[1]),
            self.xy(el.nodes[2]),
            self.xy(el.nodes[3]),
        ]
    }

    pub fn element_area(&self, e: usize) -> f64 {
        polygon_area(&self.element_coords(e))
    }

    pub fn element_centroid(&self, e: usize) -> [f64; 2] {
        let c = self.element_coords(e);
        [
            0.25 * (c[0][0] + c[1][0] + c[2][0] + c[3][0]),
            0.25 * (c[0][1] + c[1][1] + c[2][1] + c[3][1]),
        ]
    }

    /// Square root of the element area.
    pub fn element_size(&self, e: usize) -> f64 {
        self.element_area(e).abs().sqrt()
    }

    pub fn min_element_size(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| self.element_size(e))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for n in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(n.coords[k]);
                hi[k] = hi[k].max(n.coords[k]);
            }
        }
        (lo, hi)
    }

    pub fn tag(&self, name: &str) -> Result<&Tag> {
        self.tags
            .get(name)
            .ok_or_else(|| Error::config(format!("unknown boundary tag '{name}'")))
    }

    /// Elements attached to each node.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut v = vec![Vec::new(); self.nodes.len()];
        for el in &self.elements {
            for &n in &el.nodes {
                v[n].push(el.id);
            }
        }
        v
    }

    /// Element edges that belong to exactly one element.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for el in &self.elements {
            for k in 0..4 {
                let a = el.nodes[k];
                let b = el.nodes[(k + 1) % 4];
                count
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((el.id, k));
            }
        }
        count
            .into_values()
            .filter(|v| v.len() == 1)
            .map(|v| v[0])
            .collect()
    }

    pub fn edge_nodes(&self, e: usize, k: usize) -> (usize, usize) {
        let el = &self.elements[e];
        (el.nodes[k], el.nodes[(k + 1) % 4])
    }

    /// Creates or replaces a tag with the boundary nodes and edges that
    /// satisfy the predicates (edges are tested at their midpoint).
    pub fn tag_boundary_where(
        &mut self,
        name: &str,
        node_pred: impl Fn([f64; 2]) -> bool,
        edge_pred: impl Fn([f64; 2]) -> bool,
    ) {
        let edges: Vec<(usize, usize)> = self
            .boundary_edges()
            .into_iter()
            .filter(|&(e, k)| {
                let (a, b) = self.edge_nodes(e, k);
                let (pa, pb) = (self.xy(a), self.xy(b));
                edge_pred([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])])
            })
            .collect();
        let mut on_boundary = vec![false; self.nodes.len()];
        for &(e, k) in &self.boundary_edges() {
            let (a, b) = self.edge_nodes(e, k);
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
        let nodes: Vec<usize> = (0..self.nodes.len())
            .filter(|&n| on_boundary[n] && node_pred(self.xy(n)))
            .collect();
        self.tags.insert(
            name.to_string(),
            Tag {
                nodes,
                edges,
                spans: Vec::new(),
            },
        );
    }

    /// Creates or replaces a tag with the boundary nodes inside the box and
    /// the boundary edges overlapping it, each clipped to the box so a load
    /// can stop part way along an edge. `None` leaves an axis unbounded.
    pub fn tag_boundary_box(&mut self, name: &str, x: Option<[f64; 2]>, y: Option<[f64; 2]>) {
        let (lo, hi) = self.bounding_box();
        let tol = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let range = |r: Option<[f64; 2]>| r.map_or([f64::NEG_INFINITY, f64::INFINITY], |r| [r[0] - tol, r[1] + tol]);
        let (rx, ry) = (range(x), range(y));
        let inside = |p: [f64; 2]| p[0] >= rx[0] && p[0] <= rx[1] && p[1] >= ry[0] && p[1] <= ry[1];
        let mut tag = Tag::default();
        let mut on_boundary = vec![false; self.nodes.len()];
        for (e, k) in self.boundary_edges() {
            let (a, b) = self.edge_nodes(e, k);
            on_boundary[a] = true;
            on_boundary[b] = true;
            let (pa, pb) = (self.xy(a), self.xy(b));
            // parametric clip of the edge against each slab
            let mut s = [0.0f64, 1.0f64];
            for (d, r) in [(0, rx), (1, ry)] {
                let (p0, dp) = (pa[d], pb[d] - pa[d]);
                if dp.abs() <= tol {
                    if p0 < r[0] || p0 > r[1] {
                        s = [1.0, 0.0];
                    }
                } else {
                    let (t0, t1) = ((r[0] - p0) / dp, (r[1] - p0) / dp);
                    s[0] = s[0].max(t0.min(t1));
                    s[1] = s[1].min(t0.max(t1));
                }
            }
            if s[1] - s[0] > 1e-6 {
                tag.edges.push((e, k));
                tag.spans.push([s[0].max(0.0), s[1].min(1.0)]);
            }
        }
        tag.nodes = (0..self.nodes.len())
            .filter(|&n| on_boundary[n] && inside(self.xy(n)))
            .collect();
        if tag.spans.iter().all(|s| *s == [0.0, 1.0]) {
            tag.spans.clear();
        }
        self.tags.insert(name.to_string(), tag);
    }

    /// Creates or replaces a node-only tag from an arbitrary predicate.
    pub fn tag_nodes_where(&mut self, name: &str, pred: impl Fn([f64; 2]) -> bool) {
        let nodes = (0..self.nodes.len())
            .filter(|&n| pred(self.xy(n)))
            .collect();
        self.tags.insert(
            name.to_string(),
            Tag {
                nodes,
                ..Tag::default()
            },
        );
    }

    /// Sets the material id of every element whose centroid satisfies `pred`.
    pub fn set_material_where(&mut self, material: usize, pred: impl Fn([f64; 2]) -> bool) {
        for e in 0..self.elements.len() {
            if pred(self.element_centroid(e)) {
                self.elements[e].material = material;
            }
        }
    }

    /// Duplicates `nodes`; elements for which `use_copy(centroid)` holds are
    /// reconnected to the copies. Tag memberships are inherited by copies.
    /// Returns the new mesh and the map original → copy.
    pub fn split_nodes(
        &self,
        nodes: &[usize],
        use_copy: impl Fn([f64; 2]) -> bool,
    ) -> (Mesh, BTreeMap<usize, usize>) {
        let mut m = self.clone();
        let mut map = BTreeMap::new();
        for &n in nodes {
            let id = m.nodes.len();
            m.nodes.push(Node {
                id,
                coords: self.xy(n),
            });
            map.insert(n, id);
        }
        for e in 0..m.elements.len() {
            if use_copy(self.element_centroid(e)) {
                for slot in m.elements[e].nodes.iter_mut() {
                    if let Some(&c) = map.get(slot) {
                        *slot = c;
                    }
                }
            }
        }
        for tag in m.tags.values_mut() {
            let extra: Vec<usize> = tag.nodes.iter().filter_map(|n| map.get(n).copied()).collect();
            tag.nodes.extend(extra);
        }
        (m, map)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i || !n.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidArgument(format!("node {i}: bad id or coordinates")));
            }
        }
        for (i, el) in self.elements.iter().enumerate() {
            if el.id != i {
                return Err(Error::InvalidArgument(format!("element {i}: id mismatch")));
            }
            for (a, &n) in el.nodes.iter().enumerate() {
                if n >= self.nodes.len() {
                    return Err(Error::InvalidArgument(format!(
                        "element {i}: node {n} does not exist"
                    )));
                }
                if el.nodes[..a].contains(&n) {
                    return Err(Error::DegenerateGeometry(format!(
                        "element {i}: repeated node {n}"
                    )));
                }
            }
            for xi in [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [0.0, 0.0]] {
                jacobian(self, i, xi)?;
            }
        }
        for (name, tag) in &self.tags {
            if tag.nodes.iter().any(|&n| n >= self.nodes.len())
                || tag.edges.iter().any(|&(e, k)| e >= self.elements.len() || k > 3)
            {
                return Err(Error::InvalidArgument(format!("tag '{name}' out of range")));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for n in &self.nodes {
            let _ = writeln!(s, "{} {:e} {:e}", n.id, n.coords[0], n.coords[1]);
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for el in &self.elements {
            let [a, b, c, d] = el.nodes;
            let _ = writeln!(s, "{} {a} {b} {c} {d} {}", el.id, el.material);
        }
        let _ = writeln!(s, "tags {}", self.tags.len());
        for (name, tag) in &self.tags {
            let _ = write!(s, "nodeset {name} {}", tag.nodes.len());
            for n in &tag.nodes {
                let _ = write!(s, " {n}");
            }
            let _ = writeln!(s);
            let _ = write!(s, "edgeset {name} {}", tag.edges.len());
            for (e, k) in &tag.edges {
                let _ = write!(s, " {e}:{k}");
            }
            let _ = writeln!(s);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, msg: &str| Error::MeshFormat {
            line,
            msg: msg.to_string(),
        };
        let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<usize> {
            let (ln, l) = lines.next().ok_or_else(|| err(0, &format!("missing '{key}' header")))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(err(ln, &format!("expected '{key} <count>'")));
            }
            it.next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| err(ln, "bad count"))
        };
        let mut mesh = Mesh::default();
        let nn = header(&mut lines, "nodes")?;
        for i in 0..nn {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated node list"))?;
            let v: Vec<&str> = l.split_whitespace().collect();
            if v.len() != 3 {
                return Err(err(ln, "node line needs 'id x y'"));
            }
            let id: usize = v[0].parse().map_err(|_| err(ln, "bad node id"))?;
            if id != i {
                return Err(err(ln, "node ids must be dense and ordered"));
            }
            let x: f64 = v[1].parse().map_err(|_| err(ln, "bad x"))?;
            let y: f64 = v[2].parse().map_err(|_| err(ln, "bad y"))?;
            mesh.nodes.push(Node { id, coords: [x, y] });
        }
        let ne = header(&mut lines, "elements")?;
        for i in 0..ne {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated element list"))?;
            let v: Vec<&str> = l.split_whitespace().collect();
            if v.len() != 6 {
                return Err(err(ln, "only 4-node quadrilaterals are supported: 'id n1 n2 n3 n4 mat'"));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|_| err(ln, "bad integer"));
            let id = p(v[0])?;
            if id != i {
                return Err(err(ln, "element ids must be dense and ordered"));
            }
            mesh.elements.push(Element {
                id,
                nodes: [p(v[1])?, p(v[2])?, p(v[3])?, p(v[4])?],
                material: p(v[5])?,
            });
        }
        if let Some((ln, l)) = lines.next() {
            let mut it = l.split_whitespace();
            if it.next() != Some("tags") {
                return Err(err(ln, "expected 'tags <count>'"));
            }
            for (ln, l) in lines {
                let v: Vec<&str> = l.split_whitespace().collect();
                if v.len() < 3 {
                    return Err(err(ln, "tag line needs 'kind name count ...'"));
                }
                let count: usize = v[2].parse().map_err(|_| err(ln, "bad count"))?;
                if v.len() != 3 + count {
                    return Err(err(ln, "tag entry count mismatch"));
                }
                let tag = mesh.tags.entry(v[1].to_string()).or_default();
                match v[0] {
                    "nodeset" => {
                        for s in &v[3..] {
                            tag.nodes.push(s.parse().map_err(|_| err(ln, "bad node id"))?);
                        }
                    }
                    "edgeset" => {
                        for s in &v[3..] {
                            let (a, b) = s.split_once(':').ok_or_else(|| err(ln, "edge must be elem:k"))?;
                            tag.edges.push((
                                a.parse().map_err(|_| err(ln, "bad element id"))?,
                                b.parse().map_err(|_| err(ln, "bad local edge"))?,
                            ));
                        }
                    }
                    _ => return Err(err(ln, "tag kind must be nodeset or edgeset")),
                }
            }
        }
        mesh.validate()?;
        Ok(mesh)
    }
}

pub fn jacobian(mesh: &Mesh, e: usize, xi: [f64; 2]) -> Result<Jacobian> {
    let c = mesh.element_coords(e);
    let (n, dn) = shape_unchecked(xi);
    let jac = jacobian_from(&c, &n, &dn);
    if !(jac.det > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "element {e}: det J = {} at ({}, {})",
            jac.det, xi[0], xi[1]
        )));
    }
    Ok(jac)
}

pub(crate) fn jacobian_from(c: &[[f64; 2]; 4], n: &[f64; 4], dn: &[[f64; 2]; 4]) -> Jacobian {
    let mut j = [[0.0; 2]; 2];
    let mut x = [0.0; 2];
    for a in 0..4 {
        for r in 0..2 {
            x[r] += n[a] * c[a][r];
            for s in 0..2 {
                // J[r][s] = d x_r / d xi_s
                j[r][s] += dn[a][s] * c[a][r];
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = if det != 0.0 {
        [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ]
    } else {
        [[0.0; 2]; 2]
    };
    Jacobian { j, det, inv, x }
}

/// Physical gradients dN/dx from reference gradients.
pub(crate) fn physical_gradients(dn: &[[f64; 2]; 4], inv: &[[f64; 2]; 2]) -> [[f64; 2]; 4] {
    let mut g = [[0.0; 2]; 4];
    for a in 0..4 {
        // dN/dx_r = sum_s dN/dxi_s * dxi_s/dx_r ; dxi/dx = inv(J)
        for r in 0..2 {
            g[a][r] = dn[a][0] * inv[0][r] + dn[a][1] * inv[1][r];
        }
    }
    g
}

/// Inverse isoparametric map by Newton iteration. Returns the reference
/// point if `x` lies inside the element (with tolerance).
pub fn inverse_map(c: &[[f64; 2]; 4], x: [f64; 2]) -> Option<[f64; 2]> {
    let mut xi = [0.0, 0.0];
    for _ in 0..30 {
        let (n, dn) = shape_unchecked(xi);
        let jac = jacobian_from(c, &n, &dn);
        if jac.det == 0.0 {
            return None;
        }
        let r = [x[0] - jac.x[0], x[1] - jac.x[1]];
        let d = [
            jac.inv[0][0] * r[0] + jac.inv[0][1] * r[1],
            jac.inv[1][0] * r[0] + jac.inv[1][1] * r[1],
        ];
        xi[0] += d[0];
        xi[1] += d[1];
        if d[0].abs() + d[1].abs() < 1e-14 {
            break;
        }
        if xi[0].abs() > 3.0 || xi[1].abs() > 3.0 {
            return None;
        }
    }
    const TOL: f64 = 1e-10;
    if xi[0].abs() <= 1.0 + TOL && xi[1].abs() <= 1.0 + TOL {
        Some([xi[0].clamp(-1.0, 1.0), xi[1].clamp(-1.0, 1.0)])
    } else {
        None
    }
}

pub fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    let mut a = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        a += p[i][0] * p[j][1] - p[j][0] * p[i][1];
    }
    0.5 * a
}

/// Uniform bucket grid over element bounding boxes for point location.
#[derive(Debug, Clone)]
pub struct Locator {
    lo: [f64; 2],
    cell: [f64; 2],
    n: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Locator {
        let (lo, hi) = mesh.bounding_box();
        let ne = mesh.elements.len().max(1);
        let side = (ne as f64).sqrt().ceil() as usize;
        let n = [side.max(1), side.max(1)];
        let span = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let cell = [span[0] / n[0] as f64, span[1] / n[1] as f64];
        let mut buckets = vec![Vec::new(); n[0] * n[1]];
        let idx = |v: f64, k: usize| -> usize {
            (((v - lo[k]) / cell[k]).floor().max(0.0) as usize).min(n[k] - 1)
        };
        for e in 0..mesh.elements.len() {
            let c = mesh.element_coords(e);
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for p in &c {
                for k in 0..2 {
                    blo[k] = blo[k].min(p[k]);
                    bhi[k] = bhi[k].max(p[k]);
                }
            }
            let eps = [1e-9 * span[0], 1e-9 * span[1]];
            for j in idx(blo[1] - eps[1], 1)..=idx(bhi[1] + eps[1], 1) {
                for i in idx(blo[0] - eps[0], 0)..=idx(bhi[0] + eps[0], 0) {
                    buckets[j * n[0] + i].push(e);
                }
            }
        }
        Locator {
            lo,
            cell,
            n,
            buckets,
        }
    }

    /// Element containing `x` and the reference coordinates of `x` in it.
    pub fn locate(&self, mesh: &Mesh, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let fi = (x[0] - self.lo[0]) / self.cell[0];
        let fj = (x[1] - self.lo[1]) / self.cell[1];
        if !(fi > -1e-6 && fj > -1e-6 && fi < self.n[0] as f64 + 1e-6 && fj < self.n[1] as f64 + 1e-6) {
            return None;
        }
        let i = (fi.floor().max(0.0) as usize).min(self.n[0] - 1);
        let j = (fj.floor().max(0.0) as usize).min(self.n[1] - 1);
        for &e in &self.buckets[j * self.n[0] + i] {
            if let Some(xi) = inverse_map(&mesh.element_coords(e), x) {
                return Some((e, xi));
            }
        }
        None
    }
}
