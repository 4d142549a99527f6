//! Frictionless penalty contact and thermal contact on crack faces.
//!
//! Line integrals over a crack are replaced by domain integrals with the
//! regularized Dirac δ_ε(φ) = exp(−φ²/ε²)/(ε√π). Each Gauss point of a band
//! of elements around the crack becomes a contact point: its integrand
//! (gap, temperature jump) is evaluated at the closest point on the crack,
//! and its weight δ_ε(φ)·dΩ is rescaled so that the weights sum to the
//! crack length. Points whose closest point is a crack end are left out.
//!
//! With g = [[u]]·n = (2ΣN_i ũ_i)·n, the contact energy is ½k_N⟨−g⟩₊²
//! and the thermal term h_cont[[T]] acts on the mechanically active set
//! only.

use serde::{Deserialize, Serialize};

use crate::dof::Field;
use crate::enrichment::EnrichmentMap;
use crate::error::{Error, Result};
use crate::levelset::{norm, signed_distance, sub, CrackGeometry};
use crate::mesh::{Locator, Mesh};
use crate::model::{ElementContext, Layout, Model, ModelSpec};
use crate::quadrature::{gauss_rule, shape_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal penalty (Pa/m).
    pub k_n: f64,
    /// Contact heat transfer coefficient (W/(m²·°C)).
    pub h_cont: f64,
    /// Dirac width ε; half the local element size when absent.
    pub delta_width: Option<f64>,
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_n > 0.0) || !(self.h_cont >= 0.0) || self.delta_width.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::InvalidArgument(
                "contact requires k_n > 0, h_cont >= 0 and delta_width > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Quadrature point of the contact line integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPoint {
    pub crack: usize,
    /// Closest point on the crack and the element containing it.
    pub x: [f64; 2],
    pub element: usize,
    pub normal: [f64; 2],
    /// Calibrated weight (length units).
    pub weight: f64,
    /// (basis index in the element, shape value) of the enriched basis
    /// functions of this crack at `x`.
    pub basis: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPointState {
    pub x: [f64; 2],
    pub g_n: f64,
    pub t_n: f64,
    pub jump_t: f64,
    pub active: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactSummary {
    pub active_length: f64,
    pub normal_force: f64,
    pub max_penetration: f64,
    pub max_complementarity: f64,
    pub max_jump_t_active: f64,
}

pub fn dirac(phi: f64, eps: f64) -> f64 {
    (-(phi * phi) / (eps * eps)).exp() / (eps * std::f64::consts::PI.sqrt())
}

/// Band-integration sample: (Gauss point, dΩ, level-set sample).
struct BandPoint {
    dv: f64,
    phi: f64,
    foot: [f64; 2],
    normal: [f64; 2],
}

fn in_slab(crack: &CrackGeometry, seg: usize, t: f64) -> bool {
    let last = crack.num_segments() - 1;
    !((seg == 0 && t <= 0.0) || (seg == last && t >= 1.0))
}

fn band_points(mesh: &Mesh, crack: &CrackGeometry, eps: f64) -> Result<Vec<BandPoint>> {
    let rule = gauss_rule(20)?;
    let reach = 5.0 * eps;
    let mut out = Vec::new();
    for e in 0..mesh.elements.len() {
        let c = mesh.element_coords(e);
        let cen = mesh.element_centroid(e);
        let rad = c.iter().map(|p| norm(sub(*p, cen))).fold(0.0, f64::max);
        if signed_distance(cen, crack).phi.abs() > reach + rad {
            continue;
        }
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let (n, dn) = shape_unchecked(*xi);
            let jac = crate::mesh::jacobian_from(&c, &n, &dn);
            let s = signed_distance(jac.x, crack);
            if s.phi.abs() > reach || !in_slab(crack, s.closest_segment, s.t) {
                continue;
            }
            let v = &crack.vertices;
            let k = s.closest_segment;
            let d = sub(v[k + 1], v[k]);
            out.push(BandPoint {
                dv: w * jac.det,
                phi: s.phi,
                foot: [v[k][0] + s.t * d[0], v[k][1] + s.t * d[1]],
                normal: s.normal,
            });
        }
    }
    Ok(out)
}

/// ∫δ_ε(φ) dΩ over the band of elements around the crack, excluding the
/// caps beyond the crack ends. Approaches the crack length inside the mesh.
pub fn dirac_calibration(mesh: &Mesh, crack: &CrackGeometry, eps: f64) -> Result<f64> {
    Ok(band_points(mesh, crack, eps)?
        .iter()
        .map(|p| dirac(p.phi, eps) * p.dv)
        .sum())
}

/// Length of the crack inside the mesh.
pub fn inside_length(mesh: &Mesh, locator: &Locator, crack: &CrackGeometry) -> f64 {
    let h = mesh.min_element_size();
    let v = &crack.vertices;
    let mut len = 0.0;
    for s in 0..v.len() - 1 {
        let d = sub(v[s + 1], v[s]);
        let l = norm(d);
        let pieces = ((l / (1e-3 * h)).ceil() as usize).max(1);
        let dl = l / pieces as f64;
        for k in 0..pieces {
            let t = (k as f64 + 0.5) / pieces as f64;
            let x = [v[s][0] + t * d[0], v[s][1] + t * d[1]];
            if locator.locate(mesh, x).is_some() {
                len += dl;
            }
        }
    }
    len
}

fn default_width(mesh: &Mesh, enr: &EnrichmentMap, c: usize) -> f64 {
    let sizes: Vec<f64> = enr
        .cuts
        .iter()
        .filter(|(_, cut)| cut.crack == c)
        .map(|(&e, _)| mesh.element_size(e))
        .collect();
    if sizes.is_empty() {
        0.5 * mesh.min_element_size()
    } else {
        0.5 * sizes.iter().sum::<f64>() / sizes.len() as f64
    }
}

pub(crate) fn build_contact_points(
    spec: &ModelSpec,
    enr: &EnrichmentMap,
    contexts: &[ElementContext],
    locator: &Locator,
) -> Result<(Vec<ContactPoint>, Vec<f64>)> {
    let mut points = Vec::new();
    let mut factors = vec![1.0; spec.cracks.len()];
    if !spec.fields.mechanics {
        return Ok((points, factors));
    }
    for (c, crack) in spec.cracks.iter().enumerate() {
        let Some(params) = spec.contact.get(c).copied().flatten() else {
            continue;
        };
        params.validate()?;
        if !enr.cuts.values().any(|cut| cut.crack == c) {
            continue;
        }
        let eps = params
            .delta_width
            .unwrap_or_else(|| default_width(&spec.mesh, enr, c));
        let band = band_points(&spec.mesh, crack, eps)?;
        let integral: f64 = band.iter().map(|p| dirac(p.phi, eps) * p.dv).sum();
        let length = inside_length(&spec.mesh, locator, crack);
        if integral <= 0.0 || length <= 0.0 {
            continue;
        }
        let factor = length / integral;
        factors[c] = factor;
        let cutoff = 1e-12 / eps;
        for p in band {
            let delta = dirac(p.phi, eps);
            if delta < cutoff {
                continue;
            }
            let Some((e, xi)) = locator.locate(&spec.mesh, p.foot) else {
                continue;
            };
            let (n, _) = shape_unchecked(xi);
            let basis: Vec<(usize, f64)> = contexts[e]
                .basis
                .iter()
                .enumerate()
                .filter(|(_, b)| b.crack == Some(c))
                .map(|(i, b)| (i, n[b.local]))
                .collect();
            if basis.is_empty() {
                continue;
            }
            points.push(ContactPoint {
                crack: c,
                x: p.foot,
                element: e,
                normal: p.normal,
                weight: factor * delta * p.dv,
                basis,
            });
        }
    }
    Ok((points, factors))
}

fn enr_dof(model: &Model, e: usize, bi: usize, f: Field) -> Option<usize> {
    let lay = Layout::new(model.dofs.fields, model.contexts[e].nb);
    lay.idx(f, bi).map(|i| model.elem_dofs[e][i])
}

/// Normal gap and temperature jump at a contact point.
pub fn point_jumps(model: &Model, p: &ContactPoint, x: &[f64]) -> (f64, f64) {
    let mut jump = [0.0; 3];
    for &(bi, n) in &p.basis {
        for (k, f) in [Field::Ux, Field::Uy, Field::T].into_iter().enumerate() {
            if let Some(d) = enr_dof(model, p.element, bi, f) {
                jump[k] += 2.0 * n * x[d];
            }
        }
    }
    (jump[0] * p.normal[0] + jump[1] * p.normal[1], jump[2])
}

/// Normal gap g_N = [[u]]·n at a point of the crack.
pub fn normal_gap(model: &Model, crack: usize, x_on_crack: [f64; 2], x: &[f64]) -> Result<f64> {
    let (e, xi) = model
        .locator
        .locate(model.mesh(), x_on_crack)
        .ok_or(Error::OutOfDomain(x_on_crack[0], x_on_crack[1]))?;
    let (n, _) = shape_unchecked(xi);
    let basis: Vec<(usize, f64)> = model.contexts[e]
        .basis
        .iter()
        .enumerate()
        .filter(|(_, b)| b.crack == Some(crack))
        .map(|(i, b)| (i, n[b.local]))
        .collect();
    if basis.is_empty() {
        return Err(Error::OutOfDomain(x_on_crack[0], x_on_crack[1]));
    }
    let normal = signed_distance(x_on_crack, &model.spec.cracks[crack]).normal;
    let p = ContactPoint {
        crack,
        x: x_on_crack,
        element: e,
        normal,
        weight: 0.0,
        basis,
    };
    Ok(point_jumps(model, &p, x).0)
}

pub fn has_contact(model: &Model) -> bool {
    !model.contact_points.is_empty()
}

/// Residual and (optionally) Jacobian values of the contact terms.
pub fn contact_residual_and_jacobian(
    model: &Model,
    x: &[f64],
    with_jacobian: bool,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut r = vec![0.0; model.dofs.total_dofs];
    let mut jac = with_jacobian.then(|| vec![0.0; model.pattern.nnz()]);
    let heat = model.dofs.fields.heat;
    for p in &model.contact_points {
        let params = model.spec.contact[p.crack].unwrap();
        let (g, jt) = point_jumps(model, p, x);
        if g >= 0.0 {
            continue;
        }
        let e = p.element;
        let lay = Layout::new(model.dofs.fields, model.contexts[e].nb);
        let m = lay.len;
        let dofs = &model.elem_dofs[e];
        let w = p.weight;
        let kn = params.k_n;
        let h = params.h_cont;
        for &(bi, ni) in &p.basis {
            let ix = lay.idx(Field::Ux, bi).unwrap();
            let iy = lay.idx(Field::Uy, bi).unwrap();
            r[dofs[ix]] += kn * g * 2.0 * ni * p.normal[0] * w;
            r[dofs[iy]] += kn * g * 2.0 * ni * p.normal[1] * w;
            let it = if heat { lay.idx(Field::T, bi) } else { None };
            if let Some(it) = it {
                r[dofs[it]] += h * jt * 2.0 * ni * w;
            }
            if let Some(jv) = jac.as_mut() {
                let pos = &model.positions[e];
                for &(bj, nj) in &p.basis {
                    let jx = lay.idx(Field::Ux, bj).unwrap();
                    let jy = lay.idx(Field::Uy, bj).unwrap();
                    let s = kn * 4.0 * ni * nj * w;
                    let nn = p.normal;
                    jv[pos[ix * m + jx] as usize] += s * nn[0] * nn[0];
                    jv[pos[ix * m + jy] as usize] += s * nn[0] * nn[1];
                    jv[pos[iy * m + jx] as usize] += s * nn[1] * nn[0];
                    jv[pos[iy * m + jy] as usize] += s * nn[1] * nn[1];
                    if let Some(it) = it {
                        let jt_ = lay.idx(Field::T, bj).unwrap();
                        jv[pos[it * m + jt_] as usize] += h * 4.0 * ni * nj * w;
                    }
                }
            }
        }
    }
    (r, jac)
}

/// Active set signature (for detecting active-set changes).
pub fn active_set(model: &Model, x: &[f64]) -> Vec<bool> {
    model
        .contact_points
        .iter()
        .map(|p| point_jumps(model, p, x).0 < 0.0)
        .collect()
}

pub fn contact_states(model: &Model, x: &[f64]) -> Vec<ContactPointState> {
    model
        .contact_points
        .iter()
        .map(|p| {
            let kn = model.spec.contact[p.crack].unwrap().k_n;
            let (g, jt) = point_jumps(model, p, x);
            let active = g < 0.0;
            ContactPointState {
                x: p.x,
                g_n: g,
                t_n: if active { kn * g } else { 0.0 },
                jump_t: jt,
                active,
                weight: p.weight,
            }
        })
        .collect()
}

pub fn summarize(states: &[ContactPointState]) -> ContactSummary {
    let mut s = ContactSummary::default();
    for p in states {
        if p.active {
            s.active_length += p.weight;
            s.normal_force += -p.t_n * p.weight;
            s.max_penetration = s.max_penetration.max(-p.g_n);
            s.max_jump_t_active = s.max_jump_t_active.max(p.jump_t.abs());
        }
        s.max_complementarity = s.max_complementarity.max((p.g_n * p.t_n).abs());
    }
    s
}
