//! Classification of bisected elements and Heaviside-enriched nodes.
//!
//! An element is bisected when a crack chain crosses it from boundary to
//! boundary leaving positive area on both sides. Candidate nodes are the
//! nodes of bisected elements; a candidate is enriched when no active tip
//! lies inside its support and the smaller side of its support holds at
//! least `delta_s` of the support area. Nodes sitting on a crack are moved
//! to its positive side by a perturbation of 1e-9·h.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::levelset::{cross, dot, norm, signed_distance, sub, CrackGeometry};
use crate::mesh::{polygon_area, Mesh};

/// Relative level-set perturbation for points lying on a crack.
pub const PERTURBATION: f64 = 1e-9;

/// Default support-ratio cutoff.
pub const DELTA_S: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct CutInfo {
    pub crack: usize,
    /// Crack pieces inside the element, ordered along the crack.
    pub chain: Vec<[f64; 2]>,
    pub area_pos: f64,
    pub area_neg: f64,
    /// Sub-polygons on the positive and negative side (counter-clockwise).
    pub poly_pos: Vec<[f64; 2]>,
    pub poly_neg: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TipElement {
    pub crack: usize,
    pub tip: usize,
    pub element: usize,
}

#[derive(Debug, Clone)]
pub struct EnrichmentMap {
    pub cracks: Vec<CrackGeometry>,
    /// Crack enriching each node, if any.
    pub node_crack: Vec<Option<usize>>,
    /// ψ indicator, 1 for enriched nodes.
    pub psi: Vec<u8>,
    /// min(A⁺,A⁻)/(A⁺+A⁻) over the support for candidate nodes, else 0.
    pub support_ratio: Vec<f64>,
    /// Perturbed nodal level sets, `node_phi[crack][node]`.
    pub node_phi: Vec<Vec<f64>>,
    /// Bisected elements.
    pub cuts: BTreeMap<usize, CutInfo>,
    /// Elements with at least one enriched node, sorted.
    pub enriched_elements: Vec<usize>,
    pub tip_elements: Vec<TipElement>,
    /// Length scale for the perturbation (smallest element size).
    pub h: f64,
}

impl EnrichmentMap {
    pub fn empty(mesh: &Mesh) -> EnrichmentMap {
        EnrichmentMap {
            cracks: Vec::new(),
            node_crack: vec![None; mesh.nodes.len()],
            psi: vec![0; mesh.nodes.len()],
            support_ratio: vec![0.0; mesh.nodes.len()],
            node_phi: Vec::new(),
            cuts: BTreeMap::new(),
            enriched_elements: Vec::new(),
            tip_elements: Vec::new(),
            h: mesh.min_element_size(),
        }
    }

    pub fn enriched_nodes(&self) -> Vec<usize> {
        (0..self.psi.len()).filter(|&n| self.psi[n] == 1).collect()
    }

    pub fn is_enriched_element(&self, e: usize) -> bool {
        self.enriched_elements.binary_search(&e).is_ok()
    }

    /// Perturbed level set of crack `c` at `x`.
    pub fn phi(&self, c: usize, x: [f64; 2]) -> f64 {
        perturb(signed_distance(x, &self.cracks[c]).phi, self.h)
    }
}

pub fn perturb(phi: f64, h: f64) -> f64 {
    let d = PERTURBATION * h;
    if phi.abs() < d {
        d
    } else {
        phi
    }
}

pub fn classify_enrichment(
    mesh: &Mesh,
    cracks: &[CrackGeometry],
    delta_s: f64,
) -> Result<EnrichmentMap> {
    if !(delta_s > 0.0 && delta_s < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "delta_s must lie in (0, 0.5), got {delta_s}"
        )));
    }
    for c in cracks {
        c.validate()?;
    }
    let mut map = EnrichmentMap::empty(mesh);
    if mesh.elements.is_empty() {
        return Ok(map);
    }
    map.cracks = cracks.to_vec();
    let h = map.h;
    let nn = mesh.nodes.len();
    map.node_phi = cracks
        .iter()
        .map(|c| {
            (0..nn)
                .map(|n| perturb(signed_distance(mesh.xy(n), c).phi, h))
                .collect()
        })
        .collect();

    let node_elems = mesh.node_elements();
    let mut candidates: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nn];
    let mut bisect_count: BTreeMap<usize, usize> = BTreeMap::new();

    for (ci, crack) in cracks.iter().enumerate() {
        let shifted = crack.offset(PERTURBATION * h);
        let (clo, chi) = bbox(&shifted.vertices);
        let mut cuts_c: BTreeMap<usize, CutInfo> = BTreeMap::new();
        for e in 0..mesh.elements.len() {
            let quad = mesh.element_coords(e);
            let (elo, ehi) = bbox(&quad);
            if elo[0] > chi[0] || elo[1] > chi[1] || ehi[0] < clo[0] || ehi[1] < clo[1] {
                continue;
            }
            if let Some(cut) = cut_element(&quad, &shifted, ci, e)? {
                cuts_c.insert(e, cut);
            }
        }
        // tip elements and blocked nodes
        let mut blocked = vec![false; nn];
        for tip in 0..2 {
            if !crack.tip_active[tip] {
                continue;
            }
            let (p, _) = shifted.tip(tip);
            for e in 0..mesh.elements.len() {
                let quad = mesh.element_coords(e);
                let tol = 1e-10 * mesh.element_size(e);
                if !point_in_convex(&quad, p, tol) {
                    continue;
                }
                map.tip_elements.push(TipElement {
                    crack: ci,
                    tip,
                    element: e,
                });
                for a in 0..4 {
                    let on_outer = [(a + 1) % 4, (a + 2) % 4]
                        .iter()
                        .any(|&k| point_on_segment(quad[k], quad[(k + 1) % 4], p, tol));
                    if !on_outer {
                        blocked[mesh.elements[e].nodes[a]] = true;
                    }
                }
            }
        }
        // support areas per side
        let side_area = |e: usize| -> (f64, f64) {
            if let Some(cut) = cuts_c.get(&e) {
                (cut.area_pos, cut.area_neg)
            } else {
                let a = mesh.element_area(e);
                let phi = perturb(signed_distance(mesh.element_centroid(e), crack).phi, h);
                if phi >= 0.0 {
                    (a, 0.0)
                } else {
                    (0.0, a)
                }
            }
        };
        let mut seen = vec![false; nn];
        for (&e, _) in &cuts_c {
            for &n in &mesh.elements[e].nodes {
                if seen[n] {
                    continue;
                }
                seen[n] = true;
                let (mut ap, mut an) = (0.0, 0.0);
                for &se in &node_elems[n] {
                    let (p, q) = side_area(se);
                    ap += p;
                    an += q;
                }
                let ratio = ap.min(an) / (ap + an);
                map.support_ratio[n] = map.support_ratio[n].max(ratio);
                if !blocked[n] && ratio >= delta_s {
                    candidates[n].push((ci, map.node_phi[ci][n].abs()));
                }
            }
        }
        for (e, cut) in cuts_c {
            *bisect_count.entry(e).or_default() += 1;
            if bisect_count[&e] > 1 {
                return Err(Error::GeometryConflict(format!(
                    "element {e} is bisected by more than one crack"
                )));
            }
            map.cuts.insert(e, cut);
        }
    }

    // a nodal support may be bisected by one crack only
    for n in 0..nn {
        let mut owner: Option<usize> = None;
        for &e in &node_elems[n] {
            if let Some(cut) = map.cuts.get(&e) {
                match owner {
                    Some(c) if c != cut.crack => {
                        return Err(Error::GeometryConflict(format!(
                            "support of node {n} is bisected by cracks {c} and {}",
                            cut.crack
                        )));
                    }
                    _ => owner = Some(cut.crack),
                }
            }
        }
    }
    for n in 0..nn {
        if let Some(&(c, _)) = candidates[n]
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        {
            map.node_crack[n] = Some(c);
            map.psi[n] = 1;
        }
    }
    let mut elems: Vec<usize> = (0..mesh.elements.len())
        .filter(|&e| mesh.elements[e].nodes.iter().any(|&n| map.psi[n] == 1))
        .collect();
    elems.sort_unstable();
    map.enriched_elements = elems;
    Ok(map)
}

fn bbox(p: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for q in p {
        for k in 0..2 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    }
    (lo, hi)
}

pub(crate) fn point_on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2], tol: f64) -> bool {
    let d = sub(b, a);
    let l2 = dot(d, d);
    let t = (dot(sub(p, a), d) / l2).clamp(0.0, 1.0);
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    norm(sub(p, q)) <= tol
}

pub(crate) fn point_in_convex(quad: &[[f64; 2]; 4], p: [f64; 2], tol: f64) -> bool {
    (0..4).all(|k| {
        let a = quad[k];
        let b = quad[(k + 1) % 4];
        let e = sub(b, a);
        cross(e, sub(p, a)) / norm(e) >= -tol
    })
}

/// Boundary position of a point on the quad: (edge, parameter along edge).
fn boundary_position(quad: &[[f64; 2]; 4], p: [f64; 2]) -> (usize, f64, f64) {
    let mut best = (0usize, 0.0f64, f64::INFINITY);
    for k in 0..4 {
        let a = quad[k];
        let d = sub(quad[(k + 1) % 4], a);
        let t = (dot(sub(p, a), d) / dot(d, d)).clamp(0.0, 1.0);
        let q = [a[0] + t * d[0], a[1] + t * d[1]];
        let dist = norm(sub(p, q));
        if dist < best.2 {
            best = (k, t, dist);
        }
    }
    best
}

/// Clips the polyline against the convex quad and, if a single chain
/// crosses it from boundary to boundary, returns the split.
fn cut_element(
    quad: &[[f64; 2]; 4],
    crack: &CrackGeometry,
    ci: usize,
    e: usize,
) -> Result<Option<CutInfo>> {
    let v = &crack.vertices;
    let size = polygon_area(quad).abs().sqrt();
    let tol = 1e-10 * size;
    // pieces (segment, t_enter, t_leave)
    let mut pieces: Vec<(usize, f64, f64)> = Vec::new();
    for s in 0..v.len() - 1 {
        let p0 = v[s];
        let d = sub(v[s + 1], p0);
        let (mut te, mut tl) = (0.0f64, 1.0f64);
        let mut empty = false;
        for k in 0..4 {
            let a = quad[k];
            let ed = sub(quad[(k + 1) % 4], a);
            let nin = [-ed[1], ed[0]];
            let num = dot(nin, sub(p0, a));
            let den = dot(nin, d);
            if den == 0.0 {
                if num < 0.0 {
                    empty = true;
                    break;
                }
            } else {
                let t = -num / den;
                if den > 0.0 {
                    te = te.max(t);
                } else {
                    tl = tl.min(t);
                }
            }
        }
        if !empty && te < tl {
            pieces.push((s, te, tl));
        }
    }
    if pieces.is_empty() {
        return Ok(None);
    }
    // group into chains of consecutive pieces
    let at = |s: usize, t: f64| -> [f64; 2] {
        let d = sub(v[s + 1], v[s]);
        [v[s][0] + t * d[0], v[s][1] + t * d[1]]
    };
    let mut chains: Vec<Vec<(usize, f64, f64)>> = Vec::new();
    for p in pieces {
        match chains.last_mut() {
            Some(ch) if {
                let l = ch.last().unwrap();
                l.0 + 1 == p.0 && l.2 >= 1.0 && p.1 <= 0.0
            } =>
            {
                ch.push(p)
            }
            _ => chains.push(vec![p]),
        }
    }
    let mut through: Vec<Vec<[f64; 2]>> = Vec::new();
    for ch in &chains {
        let mut pts = vec![at(ch[0].0, ch[0].1)];
        for p in ch {
            pts.push(at(p.0, p.2));
        }
        let a = pts[0];
        let b = *pts.last().unwrap();
        if norm(sub(b, a)) <= tol {
            continue;
        }
        let on_a = boundary_position(quad, a).2 <= tol;
        let on_b = boundary_position(quad, b).2 <= tol;
        if on_a && on_b {
            through.push(pts);
        }
    }
    if through.is_empty() {
        return Ok(None);
    }
    if through.len() > 1 {
        return Err(Error::GeometryConflict(format!(
            "crack {ci} crosses element {e} more than once; refine the mesh"
        )));
    }
    let chain = through.pop().unwrap();
    let a = chain[0];
    let b = *chain.last().unwrap();
    let (ka, ua, _) = boundary_position(quad, a);
    let (kb, ub, _) = boundary_position(quad, b);
    // left polygon: chain a→b, then counter-clockwise along the boundary b→a
    let mut left = chain.clone();
    left.extend(walk_corners(quad, (kb, ub), (ka, ua)));
    let total = polygon_area(quad);
    let area_pos = polygon_area(&left).max(0.0);
    let area_neg = (total - area_pos).max(0.0);
    if area_pos <= 1e-14 * total || area_neg <= 1e-14 * total {
        return Ok(None);
    }
    let mut right: Vec<[f64; 2]> = chain.iter().rev().copied().collect();
    right.extend(walk_corners(quad, (ka, ua), (kb, ub)));
    Ok(Some(CutInfo {
        crack: ci,
        chain,
        area_pos,
        area_neg,
        poly_pos: left,
        poly_neg: right,
    }))
}

/// Quad corners met walking counter-clockwise from one boundary position
/// to another.
fn walk_corners(quad: &[[f64; 2]; 4], from: (usize, f64), to: (usize, f64)) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    if from.0 == to.0 && to.1 > from.1 {
        return out;
    }
    let mut k = (from.0 + 1) % 4;
    out.push(quad[k]);
    while k != to.0 {
        k = (k + 1) % 4;
        out.push(quad[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_grid;

    #[test]
    fn horizontal_split_areas() {
        let m = build_structured_grid(1, 1, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let c = CrackGeometry::new(vec![[-0.5, 0.3], [1.5, 0.3]], [false, false]).unwrap();
        let map = classify_enrichment(&m, &[c], DELTA_S).unwrap();
        let cut = &map.cuts[&0];
        assert!((cut.area_pos - 0.7).abs() < 1e-8);
        assert!((cut.area_neg - 0.3).abs() < 1e-8);
        assert!((polygon_area(&cut.poly_neg) - 0.3).abs() < 1e-8);
        assert_eq!(map.enriched_nodes(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn reversed_crack_swaps_sides() {
        let m = build_structured_grid(1, 1, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let c = CrackGeometry::new(vec![[1.5, 0.3], [-0.5, 0.3]], [false, false]).unwrap();
        let map = classify_enrichment(&m, &[c], DELTA_S).unwrap();
        assert!((map.cuts[&0].area_pos - 0.3).abs() < 1e-8);
    }

    #[test]
    fn outside_crack_gives_empty_map() {
        let m = build_structured_grid(4, 4, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let c = CrackGeometry::new(vec![[2.0, 2.0], [3.0, 2.5]], [true, true]).unwrap();
        let map = classify_enrichment(&m, &[c], DELTA_S).unwrap();
        assert!(map.enriched_nodes().is_empty());
        assert!(map.enriched_elements.is_empty());
        assert!(map.cuts.is_empty());
    }

    #[test]
    fn small_support_ratio_excluded() {
        // crack 1e-3 above the row y = 0.5 of a 2x2 unit grid (h = 0.5)
        let m = build_structured_grid(2, 2, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let c = CrackGeometry::new(vec![[-1.0, 0.501], [2.0, 0.501]], [false, false]).unwrap();
        let map = classify_enrichment(&m, &[c], DELTA_S).unwrap();
        // top row nodes: support ratio 0.002/2/0.5… = 0.001 < δ_s
        for n in 6..9 {
            assert!(map.support_ratio[n] < DELTA_S);
            assert_eq!(map.psi[n], 0);
        }
        for n in 3..6 {
            assert_eq!(map.psi[n], 1);
        }
    }

    #[test]
    fn tip_element_terminates_enrichment() {
        let m = build_structured_grid(4, 4, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let c = CrackGeometry::new(vec![[-0.1, 0.4], [0.6, 0.4]], [false, true]).unwrap();
        let map = classify_enrichment(&m, &[c], DELTA_S).unwrap();
        // tip lies in element (2,1); its nodes are not enriched
        let tip_el = 4 + 2;
        assert!(map.tip_elements.iter().any(|t| t.element == tip_el));
        for &n in &m.elements[tip_el].nodes {
            assert_eq!(map.psi[n], 0);
        }
        assert!(!map.cuts.contains_key(&tip_el));
        // nodes at x = 0 and 0.25 on both rows are enriched
        for n in [5, 6, 10, 11] {
            assert_eq!(map.psi[n], 1, "node {n}");
        }
    }

    #[test]
    fn edge_aligned_crack_uses_perturbation() {
        let m = build_structured_grid(4, 4, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let c = CrackGeometry::new(vec![[0.0, 0.5], [0.5, 0.5]], [false, true]).unwrap();
        let map = classify_enrichment(&m, &[c], DELTA_S).unwrap();
        // only the nodes on the line y = 0.5 left of the tip are enriched
        assert_eq!(map.enriched_nodes(), vec![10, 11]);
        assert!(map.node_phi[0][11] > 0.0);
    }
}
