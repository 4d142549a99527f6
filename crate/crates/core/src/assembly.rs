//! Element and global assembly of the coupled weak forms.
//!
//! The discrete residual is R(x) = C ẋ + K x + N(x) − F(t). K and C collect
//! every linear term and are assembled once per crack topology; N holds the
//! convective heat transport (and contact, see `contact`). Rows per field:
//!
//! momentum: ∫Bᵀ(Dε − γ(T − T_ref)m − αp m) = ∫Nρb + ∫N t̄
//! flow:     ∫η(α∇·u̇ + ṗ/Q_t − β_t Ṫ) + ∫∇η·(k/μ)∇p = ∫η q̄_f + ∫∇η·(k/μ)ρ_f b
//! heat:     ∫η((ρC)Ṫ + ρ_fC_f ẇ·∇T) + ∫∇η·λ∇T = ∫η q̄_T
//!
//! Enriched basis functions are N_a·ψ_a with piecewise-constant ψ_a, so
//! their gradients are ψ_a∇N_a. Crack faces carry no interface terms: p and
//! T are discontinuous there, which makes the crack impermeable and
//! adiabatic.

use rayon::prelude::*;

use crate::dof::{Field, NeumannKind, ThmState};
use crate::error::Result;
use crate::levelset::heaviside;
use crate::material::MixtureProps;
use crate::mesh::{jacobian_from, physical_gradients};
use crate::model::{ElementContext, Layout, Model};
use crate::quadrature::{gauss_legendre, shape_unchecked};

/// Global K, C values on the model pattern plus constant loads.
#[derive(Debug, Clone)]
pub struct LinearOperators {
    pub k: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
}

/// Dense element matrices, row-major over the local layout.
#[derive(Debug, Clone)]
pub struct LocalBlock {
    pub m: usize,
    pub k: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
}

impl LocalBlock {
    pub fn zeros(m: usize) -> LocalBlock {
        LocalBlock {
            m,
            k: vec![0.0; m * m],
            c: vec![0.0; m * m],
            f: vec![0.0; m],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Physics {
    pub momentum: bool,
    pub flow: bool,
    pub heat: bool,
}

impl Physics {
    pub const ALL: Physics = Physics {
        momentum: true,
        flow: true,
        heat: true,
    };
}

pub fn element_momentum(
    ctx: &ElementContext,
    mat: &MixtureProps,
    lay: &Layout,
    t_ref: f64,
    dtheta: f64,
    body: [f64; 2],
    out: &mut LocalBlock,
) {
    let (Some(ux), Some(uy)) = (lay.off[0], lay.off[1]) else {
        return;
    };
    let m = out.m;
    let nb = ctx.nb;
    let d = &mat.d;
    let op = lay.off[Field::P.index()];
    let ot = lay.off[Field::T.index()];
    for q in 0..ctx.ng {
        let dv = ctx.dv[q];
        let n = &ctx.n[q * nb..(q + 1) * nb];
        let g = &ctx.g[q * nb..(q + 1) * nb];
        for a in 0..nb {
            let (ga0, ga1) = (g[a][0], g[a][1]);
            if ga0 == 0.0 && ga1 == 0.0 && n[a] == 0.0 {
                continue;
            }
            // rows of Bᵀ D for node a: [ga0 0 ga1; 0 ga1 ga0] · D
            let bd_x = [
                ga0 * d[0][0] + ga1 * d[2][0],
                ga0 * d[0][1] + ga1 * d[2][1],
                ga0 * d[0][2] + ga1 * d[2][2],
            ];
            let bd_y = [
                ga1 * d[1][0] + ga0 * d[2][0],
                ga1 * d[1][1] + ga0 * d[2][1],
                ga1 * d[1][2] + ga0 * d[2][2],
            ];
            let rx = ux + a;
            let ry = uy + a;
            for b in 0..nb {
                let (gb0, gb1) = (g[b][0], g[b][1]);
                out.k[rx * m + ux + b] += (bd_x[0] * gb0 + bd_x[2] * gb1) * dv;
                out.k[rx * m + uy + b] += (bd_x[1] * gb1 + bd_x[2] * gb0) * dv;
                out.k[ry * m + ux + b] += (bd_y[0] * gb0 + bd_y[2] * gb1) * dv;
                out.k[ry * m + uy + b] += (bd_y[1] * gb1 + bd_y[2] * gb0) * dv;
                if let Some(op) = op {
                    out.k[rx * m + op + b] -= mat.alpha * ga0 * n[b] * dv;
                    out.k[ry * m + op + b] -= mat.alpha * ga1 * n[b] * dv;
                }
                if let Some(ot) = ot {
                    out.k[rx * m + ot + b] -= mat.gamma * ga0 * n[b] * dv;
                    out.k[ry * m + ot + b] -= mat.gamma * ga1 * n[b] * dv;
                }
            }
            if ot.is_some() {
                out.f[rx] -= mat.gamma * t_ref * ga0 * dv;
                out.f[ry] -= mat.gamma * t_ref * ga1 * dv;
            } else if dtheta != 0.0 {
                out.f[rx] += mat.gamma * dtheta * ga0 * dv;
                out.f[ry] += mat.gamma * dtheta * ga1 * dv;
            }
            out.f[rx] += n[a] * mat.rho * body[0] * dv;
            out.f[ry] += n[a] * mat.rho * body[1] * dv;
        }
    }
}

pub fn element_flow(
    ctx: &ElementContext,
    mat: &MixtureProps,
    lay: &Layout,
    body: [f64; 2],
    out: &mut LocalBlock,
) {
    let Some(op) = lay.off[Field::P.index()] else {
        return;
    };
    let m = out.m;
    let nb = ctx.nb;
    let ou = lay.off[0].zip(lay.off[1]);
    let ot = lay.off[Field::T.index()];
    let mob = mat.mobility;
    for q in 0..ctx.ng {
        let dv = ctx.dv[q];
        let n = &ctx.n[q * nb..(q + 1) * nb];
        let g = &ctx.g[q * nb..(q + 1) * nb];
        for a in 0..nb {
            let r = op + a;
            for b in 0..nb {
                out.k[r * m + op + b] += mob * (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * dv;
                out.c[r * m + op + b] += mat.inv_qt * n[a] * n[b] * dv;
                if let Some((ux, uy)) = ou {
                    out.c[r * m + ux + b] += mat.alpha * n[a] * g[b][0] * dv;
                    out.c[r * m + uy + b] += mat.alpha * n[a] * g[b][1] * dv;
                }
                if let Some(ot) = ot {
                    out.c[r * m + ot + b] -= mat.beta_t * n[a] * n[b] * dv;
                }
            }
            out.f[r] += mob * mat.rho_f * (g[a][0] * body[0] + g[a][1] * body[1]) * dv;
        }
    }
}

pub fn element_heat(ctx: &ElementContext, mat: &MixtureProps, lay: &Layout, out: &mut LocalBlock) {
    let Some(ot) = lay.off[Field::T.index()] else {
        return;
    };
    let m = out.m;
    let nb = ctx.nb;
    for q in 0..ctx.ng {
        let dv = ctx.dv[q];
        let n = &ctx.n[q * nb..(q + 1) * nb];
        let g = &ctx.g[q * nb..(q + 1) * nb];
        for a in 0..nb {
            let r = ot + a;
            for b in 0..nb {
                out.k[r * m + ot + b] +=
                    mat.lambda_eff * (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * dv;
                out.c[r * m + ot + b] += mat.rhoc_eff * n[a] * n[b] * dv;
            }
        }
    }
}

/// Local linear block of one element for the selected physics.
pub fn element_linear(model: &Model, e: usize, which: Physics) -> LocalBlock {
    let ctx = &model.contexts[e];
    let lay = Layout::new(model.dofs.fields, ctx.nb);
    let mat = model.material(e);
    let mut blk = LocalBlock::zeros(lay.len);
    let sp = &model.spec;
    if which.momentum {
        element_momentum(ctx, mat, &lay, sp.t_ref, model.imposed_dtheta(), sp.body_force, &mut blk);
    }
    if which.flow {
        element_flow(ctx, mat, &lay, sp.body_force, &mut blk);
    }
    if which.heat {
        element_heat(ctx, mat, &lay, &mut blk);
    }
    blk
}

pub fn assemble(model: &Model, which: Physics) -> LinearOperators {
    let nnz = model.pattern.nnz();
    let blocks: Vec<LocalBlock> = (0..model.contexts.len())
        .into_par_iter()
        .map(|e| element_linear(model, e, which))
        .collect();
    let mut ops = LinearOperators {
        k: vec![0.0; nnz],
        c: vec![0.0; nnz],
        f: vec![0.0; model.dofs.total_dofs],
    };
    for (e, blk) in blocks.iter().enumerate() {
        let pos = &model.positions[e];
        let dofs = &model.elem_dofs[e];
        for (i, p) in pos.iter().enumerate() {
            ops.k[*p as usize] += blk.k[i];
            ops.c[*p as usize] += blk.c[i];
        }
        for (i, &d) in dofs.iter().enumerate() {
            ops.f[d] += blk.f[i];
        }
    }
    ops
}

pub fn assemble_momentum(model: &Model) -> LinearOperators {
    assemble(
        model,
        Physics {
            momentum: true,
            flow: false,
            heat: false,
        },
    )
}

pub fn assemble_flow(model: &Model) -> LinearOperators {
    assemble(
        model,
        Physics {
            momentum: false,
            flow: true,
            heat: false,
        },
    )
}

pub fn assemble_heat(model: &Model) -> LinearOperators {
    assemble(
        model,
        Physics {
            momentum: false,
            flow: false,
            heat: true,
        },
    )
}

pub fn assemble_linear(model: &Model) -> LinearOperators {
    assemble(model, Physics::ALL)
}

/// Whether the convective term is present anywhere.
pub fn has_convection(model: &Model) -> bool {
    model.dofs.fields.flow
        && model.dofs.fields.heat
        && model
            .spec
            .materials
            .iter()
            .any(|m| m.mobility > 0.0 && m.rhoc_f > 0.0)
}

/// Convective heat residual ∫η ρ_fC_f ẇ·∇T and, on request, its Jacobian
/// values on the model pattern.
pub fn assemble_convection(model: &Model, x: &[f64], with_jacobian: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut r = vec![0.0; model.dofs.total_dofs];
    if !has_convection(model) {
        return (r, with_jacobian.then(|| vec![0.0; model.pattern.nnz()]));
    }
    let b = model.spec.body_force;
    let locals: Vec<(Vec<f64>, Vec<f64>)> = (0..model.contexts.len())
        .into_par_iter()
        .map(|e| {
            let ctx = &model.contexts[e];
            let mat = model.material(e);
            let lay = Layout::new(model.dofs.fields, ctx.nb);
            let m = lay.len;
            let mut re = vec![0.0; m];
            let mut je = if with_jacobian { vec![0.0; m * m] } else { Vec::new() };
            if mat.mobility <= 0.0 || mat.rhoc_f <= 0.0 {
                return (re, je);
            }
            let dofs = &model.elem_dofs[e];
            let op = lay.off[Field::P.index()].unwrap();
            let ot = lay.off[Field::T.index()].unwrap();
            let nb = ctx.nb;
            for q in 0..ctx.ng {
                let dv = ctx.dv[q];
                let n = &ctx.n[q * nb..(q + 1) * nb];
                let g = &ctx.g[q * nb..(q + 1) * nb];
                let mut gp = [0.0; 2];
                let mut gt = [0.0; 2];
                for a in 0..nb {
                    let pa = x[dofs[op + a]];
                    let ta = x[dofs[ot + a]];
                    gp[0] += g[a][0] * pa;
                    gp[1] += g[a][1] * pa;
                    gt[0] += g[a][0] * ta;
                    gt[1] += g[a][1] * ta;
                }
                let w = [
                    mat.mobility * (-gp[0] + mat.rho_f * b[0]),
                    mat.mobility * (-gp[1] + mat.rho_f * b[1]),
                ];
                let adv = w[0] * gt[0] + w[1] * gt[1];
                for a in 0..nb {
                    let s = mat.rhoc_f * n[a] * dv;
                    re[ot + a] += s * adv;
                    if with_jacobian && s != 0.0 {
                        for bb in 0..nb {
                            je[(ot + a) * m + ot + bb] += s * (w[0] * g[bb][0] + w[1] * g[bb][1]);
                            je[(ot + a) * m + op + bb] -=
                                s * mat.mobility * (g[bb][0] * gt[0] + g[bb][1] * gt[1]);
                        }
                    }
                }
            }
            (re, je)
        })
        .collect();
    let mut jv = with_jacobian.then(|| vec![0.0; model.pattern.nnz()]);
    for (e, (re, je)) in locals.into_iter().enumerate() {
        for (i, &d) in model.elem_dofs[e].iter().enumerate() {
            r[d] += re[i];
        }
        if let Some(jv) = jv.as_mut() {
            for (i, p) in model.positions[e].iter().enumerate() {
                jv[*p as usize] += je[i];
            }
        }
    }
    (r, jv)
}

const REF_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Edge-integrated boundary loads at time t: tractions, normal pressure,
/// fluid and heat inflow. Enriched rows use ψ evaluated along the edge.
pub fn assemble_neumann(model: &Model, t: f64) -> Result<Vec<f64>> {
    let mut f = vec![0.0; model.dofs.total_dofs];
    let mesh = model.mesh();
    let enr = &model.enrichment;
    let (s_pts, s_w) = gauss_legendre(4)?;
    for bc in &model.spec.bcs.neumann {
        let fields: &[Field] = match bc.kind {
            NeumannKind::TractionX => &[Field::Ux],
            NeumannKind::TractionY => &[Field::Uy],
            NeumannKind::NormalPressure => &[Field::Ux, Field::Uy],
            NeumannKind::FluidFlux => &[Field::P],
            NeumannKind::HeatFlux => &[Field::T],
        };
        if !fields.iter().all(|&fl| model.dofs.fields.has(fl)) {
            continue;
        }
        let value = bc.value.value(t);
        let tag = mesh
            .tag(&bc.tag)
            .map_err(|_| crate::Error::config(format!("unknown boundary tag '{}'", bc.tag)))?;
        for (i, &(e, k)) in tag.edges.iter().enumerate() {
            let ctx = &model.contexts[e];
            let coords = mesh.element_coords(e);
            let (r0, r1) = (REF_CORNERS[k], REF_CORNERS[(k + 1) % 4]);
            let (p0, p1) = (coords[k], coords[(k + 1) % 4]);
            let d = [p1[0] - p0[0], p1[1] - p0[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let normal = [d[1] / len, -d[0] / len];
            let lay = Layout::new(model.dofs.fields, ctx.nb);
            let dofs = &model.elem_dofs[e];
            let at = |s: f64| [p0[0] + s * d[0], p0[1] + s * d[1]];
            // integrate piecewise between crack crossings
            let [s0, s1] = tag.span(i);
            let mut cuts = vec![s0, s1];
            for c in ctx.basis.iter().filter_map(|b| b.crack) {
                if let Some(s) = level_set_root(|s| enr.phi(c, at(s)), s0, s1) {
                    cuts.push(s);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for piece in cuts.windows(2) {
                let (a, b) = (piece[0], piece[1]);
                for (g, w) in s_pts.iter().zip(&s_w) {
                    // edge parameter in [0, 1] and the matching reference point
                    let q = a + 0.5 * (1.0 + g) * (b - a);
                    let xi = [r0[0] + q * (r1[0] - r0[0]), r0[1] + q * (r1[1] - r0[1])];
                    let (n, _) = shape_unchecked(xi);
                    let x = at(q);
                    let ds = w * 0.5 * (b - a) * len;
                    for (bi, bf) in ctx.basis.iter().enumerate() {
                        let psi = match bf.crack {
                            None => 1.0,
                            Some(c) => {
                                let node = ctx.nodes[bf.local];
                                (heaviside(enr.phi(c, x)) - heaviside(enr.node_phi[c][node])) as f64
                            }
                        };
                        let nv = psi * n[bf.local] * ds;
                        if nv == 0.0 {
                            continue;
                        }
                        match bc.kind {
                            NeumannKind::NormalPressure => {
                                f[dofs[lay.idx(Field::Ux, bi).unwrap()]] -= value * normal[0] * nv;
                                f[dofs[lay.idx(Field::Uy, bi).unwrap()]] -= value * normal[1] * nv;
                            }
                            _ => f[dofs[lay.idx(fields[0], bi).unwrap()]] += value * nv,
                        }
                    }
                }
            }
        }
    }
    Ok(f)
}

/// Sign change of `phi` on [a, b] located by bisection.
fn level_set_root(phi: impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let (mut lo, mut hi) = (a, b);
    let (fa, fb) = (phi(lo), phi(hi));
    if fa == 0.0 || fb == 0.0 || (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if (phi(m) > 0.0) == (fa > 0.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Field values and gradients at a point of an element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointEval {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub p: f64,
    pub t: f64,
    /// grad_u[i][j] = ∂u_i/∂x_j
    pub grad_u: [[f64; 2]; 2],
    pub grad_p: [f64; 2],
    pub grad_t: [f64; 2],
}

impl PointEval {
    pub fn strain(&self) -> [f64; 3] {
        [
            self.grad_u[0][0],
            self.grad_u[1][1],
            self.grad_u[0][1] + self.grad_u[1][0],
        ]
    }
}

/// Evaluates the state at reference point `xi` of element `e`. `side`
/// overrides the level-set sign of the enrichment when the point lies on
/// the crack (used for face sampling).
pub fn point_eval(model: &Model, state: &ThmState, e: usize, xi: [f64; 2], side: Option<f64>) -> PointEval {
    let mesh = model.mesh();
    let ctx = &model.contexts[e];
    let enr = &model.enrichment;
    let coords = mesh.element_coords(e);
    let (n, dn) = shape_unchecked(xi);
    let jac = jacobian_from(&coords, &n, &dn);
    let gr = physical_gradients(&dn, &jac.inv);
    let x = jac.x;
    let dofs = &model.elem_dofs[e];
    let lay = Layout::new(model.dofs.fields, ctx.nb);
    let mut out = PointEval {
        x,
        ..Default::default()
    };
    for (bi, b) in ctx.basis.iter().enumerate() {
        let psi = match b.crack {
            None => 1.0,
            Some(c) => {
                let node = ctx.nodes[b.local];
                let phi = side.unwrap_or_else(|| enr.phi(c, x));
                (heaviside(phi) - heaviside(enr.node_phi[c][node])) as f64
            }
        };
        if psi == 0.0 {
            continue;
        }
        let nv = psi * n[b.local];
        let gv = [psi * gr[b.local][0], psi * gr[b.local][1]];
        let val = |f: Field| lay.idx(f, bi).map_or(0.0, |i| state.x[dofs[i]]);
        let (ux, uy, p, t) = (val(Field::Ux), val(Field::Uy), val(Field::P), val(Field::T));
        out.u[0] += nv * ux;
        out.u[1] += nv * uy;
        out.p += nv * p;
        out.t += nv * t;
        for j in 0..2 {
            out.grad_u[0][j] += gv[j] * ux;
            out.grad_u[1][j] += gv[j] * uy;
            out.grad_p[j] += gv[j] * p;
            out.grad_t[j] += gv[j] * t;
        }
    }
    out
}
