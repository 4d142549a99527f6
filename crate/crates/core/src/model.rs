//! A discretized problem: mesh, materials, cracks and boundary data, plus
//! everything derived from the crack topology (enrichment, DOF numbering,
//! element quadrature caches, sparsity pattern and contact points).

use std::sync::Arc;

use rayon::prelude::*;

use crate::contact::{build_contact_points, ContactParams, ContactPoint};
use crate::dof::{build_dof_map, BoundaryConditionSet, DofMap, Field, FieldSet, ThmState};
use crate::enrichment::{classify_enrichment, EnrichmentMap};
use crate::error::{Error, Result};
use crate::levelset::{heaviside, CrackGeometry};
use crate::material::MixtureProps;
use crate::mesh::{jacobian_from, physical_gradients, Locator, Mesh};
use crate::quadrature::{gauss_rule, shape_unchecked, QuadratureRule};
use crate::sparse::SparsePattern;

/// Gauss order on elements without enriched nodes.
pub const STD_ORDER: usize = 2;
/// Gauss order on elements with at least one enriched node.
pub const ENR_ORDER: usize = 20;

/// Uniform initial values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialConditions {
    pub p: f64,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub mesh: Mesh,
    /// Indexed by element material id.
    pub materials: Vec<MixtureProps>,
    pub cracks: Vec<CrackGeometry>,
    /// Contact settings per crack (`None`: traction-free faces).
    pub contact: Vec<Option<ContactParams>>,
    pub bcs: BoundaryConditionSet,
    pub fields: FieldSet,
    /// Stress-free reference temperature.
    pub t_ref: f64,
    pub body_force: [f64; 2],
    /// Uniform temperature seen by the mechanics when the heat field is
    /// not solved for.
    pub temperature: Option<f64>,
    pub delta_s: f64,
    pub initial: InitialConditions,
}

/// Basis function of an element: standard N_a or enriched N_a·ψ_a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub local: usize,
    pub crack: Option<usize>,
}

/// Cached quadrature data of one element. Arrays are point-major:
/// `n[q * nb + a]`.
#[derive(Debug, Clone)]
pub struct ElementContext {
    pub element: usize,
    pub nodes: [usize; 4],
    pub material: usize,
    pub basis: Vec<Basis>,
    pub nb: usize,
    pub ng: usize,
    pub x: Vec<[f64; 2]>,
    pub dv: Vec<f64>,
    pub n: Vec<f64>,
    pub g: Vec<[f64; 2]>,
}

impl ElementContext {
    pub fn build(
        mesh: &Mesh,
        enr: &EnrichmentMap,
        e: usize,
        std_rule: &QuadratureRule,
        enr_rule: &QuadratureRule,
    ) -> Result<ElementContext> {
        let el = &mesh.elements[e];
        let coords = mesh.element_coords(e);
        let mut basis: Vec<Basis> = (0..4).map(|a| Basis { local: a, crack: None }).collect();
        for a in 0..4 {
            let node = el.nodes[a];
            if enr.psi[node] == 1 {
                basis.push(Basis {
                    local: a,
                    crack: enr.node_crack[node],
                });
            }
        }
        let rule = if basis.len() > 4 { enr_rule } else { std_rule };
        let nb = basis.len();
        let ng = rule.points.len();
        let mut ctx = ElementContext {
            element: e,
            nodes: el.nodes,
            material: el.material,
            basis,
            nb,
            ng,
            x: Vec::with_capacity(ng),
            dv: Vec::with_capacity(ng),
            n: Vec::with_capacity(ng * nb),
            g: Vec::with_capacity(ng * nb),
        };
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let (n, dn) = shape_unchecked(*xi);
            let jac = jacobian_from(&coords, &n, &dn);
            if !(jac.det > 0.0) {
                return Err(Error::DegenerateGeometry(format!(
                    "element {e}: det J = {} at Gauss point",
                    jac.det
                )));
            }
            let gr = physical_gradients(&dn, &jac.inv);
            ctx.x.push(jac.x);
            ctx.dv.push(w * jac.det);
            for b in &ctx.basis {
                let psi = match b.crack {
                    None => 1.0,
                    Some(c) => {
                        let node = el.nodes[b.local];
                        (heaviside(enr.phi(c, jac.x)) - heaviside(enr.node_phi[c][node])) as f64
                    }
                };
                ctx.n.push(psi * n[b.local]);
                ctx.g.push([psi * gr[b.local][0], psi * gr[b.local][1]]);
            }
        }
        Ok(ctx)
    }

    /// Global DOF of every local unknown, ordered field-major over the
    /// active fields.
    pub fn global_dofs(&self, dofs: &DofMap) -> Vec<usize> {
        let mut out = Vec::with_capacity(4 * self.nb);
        for f in dofs.fields.fields() {
            for b in &self.basis {
                let node = self.nodes[b.local];
                let d = match b.crack {
                    None => dofs.std_dof(node, f),
                    Some(_) => dofs.enr_dof(node, f),
                };
                out.push(d.expect("basis without a DOF"));
            }
        }
        out
    }
}

/// Local offsets of each field block in an element vector.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub nb: usize,
    pub off: [Option<usize>; 4],
    pub len: usize,
}

impl Layout {
    pub fn new(fields: FieldSet, nb: usize) -> Layout {
        let mut off = [None; 4];
        let mut k = 0;
        for f in fields.fields() {
            off[f.index()] = Some(k);
            k += nb;
        }
        Layout { nb, off, len: k }
    }

    pub fn idx(&self, f: Field, a: usize) -> Option<usize> {
        self.off[f.index()].map(|o| o + a)
    }
}

pub struct Model {
    pub spec: ModelSpec,
    pub enrichment: EnrichmentMap,
    pub dofs: DofMap,
    pub contexts: Vec<ElementContext>,
    pub elem_dofs: Vec<Vec<usize>>,
    pub pattern: Arc<SparsePattern>,
    pub positions: Vec<Vec<u32>>,
    pub locator: Locator,
    pub contact_points: Vec<ContactPoint>,
    /// Calibration factor of the regularized Dirac per crack.
    pub dirac_factor: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Model> {
        spec.mesh.validate()?;
        let mut errs = Vec::new();
        for (e, el) in spec.mesh.elements.iter().enumerate() {
            if el.material >= spec.materials.len() {
                errs.push(format!("element {e}: unknown material id {}", el.material));
                break;
            }
        }
        if spec.fields.flow {
            for (i, m) in spec.materials.iter().enumerate() {
                if m.mobility <= 0.0 && m.inv_qt <= 0.0 {
                    errs.push(format!(
                        "materials[{i}]: flow is active but the material has no pore fluid"
                    ));
                }
            }
        }
        if spec.contact.len() != spec.cracks.len() {
            errs.push("contact settings must be given per crack".into());
        }
        if !spec.fields.mechanics && spec.contact.iter().any(|c| c.is_some()) {
            errs.push("contact needs the mechanics field".into());
        }
        for (i, c) in spec.contact.iter().enumerate() {
            if let Some(c) = c {
                if let Err(e) = c.validate() {
                    errs.push(format!("cracks[{i}].contact: {e}"));
                }
            }
        }
        if !spec.fields.mechanics && !spec.fields.flow && !spec.fields.heat {
            errs.push("no active fields".into());
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        spec.bcs.validate(&spec.mesh)?;
        let locator = Locator::new(&spec.mesh);
        let mut model = Model {
            enrichment: EnrichmentMap::empty(&spec.mesh),
            dofs: build_dof_map(&spec.mesh, &EnrichmentMap::empty(&spec.mesh), spec.fields)?,
            contexts: Vec::new(),
            elem_dofs: Vec::new(),
            pattern: Arc::new(SparsePattern::from_element_dofs(0, &[]).0),
            positions: Vec::new(),
            locator,
            contact_points: Vec::new(),
            dirac_factor: Vec::new(),
            spec,
        };
        model.rebuild()?;
        Ok(model)
    }

    /// Recomputes everything that depends on the crack geometry.
    pub fn rebuild(&mut self) -> Result<()> {
        let spec = &self.spec;
        let enrichment = classify_enrichment(&spec.mesh, &spec.cracks, spec.delta_s)?;
        let dofs = build_dof_map(&spec.mesh, &enrichment, spec.fields)?;
        let std_rule = gauss_rule(STD_ORDER)?;
        let enr_rule = gauss_rule(ENR_ORDER)?;
        let contexts = (0..spec.mesh.elements.len())
            .into_par_iter()
            .map(|e| ElementContext::build(&spec.mesh, &enrichment, e, &std_rule, &enr_rule))
            .collect::<Result<Vec<_>>>()?;
        let elem_dofs: Vec<Vec<usize>> = contexts.iter().map(|c| c.global_dofs(&dofs)).collect();
        let (pattern, positions) = SparsePattern::from_element_dofs(dofs.total_dofs, &elem_dofs);
        let (points, factors) = build_contact_points(spec, &enrichment, &contexts, &self.locator)?;
        self.enrichment = enrichment;
        self.dofs = dofs;
        self.contexts = contexts;
        self.elem_dofs = elem_dofs;
        self.pattern = Arc::new(pattern);
        self.positions = positions;
        self.contact_points = points;
        self.dirac_factor = factors;
        Ok(())
    }

    pub fn mesh(&self) -> &Mesh {
        &self.spec.mesh
    }

    pub fn material(&self, e: usize) -> &MixtureProps {
        &self.spec.materials[self.spec.mesh.elements[e].material]
    }

    pub fn initial_state(&self) -> ThmState {
        let mut s = ThmState::zeros(&self.dofs);
        for n in 0..self.dofs.num_nodes {
            if let Some(d) = self.dofs.std_dof(n, Field::P) {
                s.x[d] = self.spec.initial.p;
            }
            if let Some(d) = self.dofs.std_dof(n, Field::T) {
                s.x[d] = self.spec.initial.t;
            }
        }
        s
    }

    /// Moves a state onto the current DOF map: standard values are kept,
    /// enriched values restart from zero.
    pub fn transfer_state(&self, old: &ThmState, old_dofs: &DofMap) -> ThmState {
        let mut s = ThmState::zeros(&self.dofs);
        s.t = old.t;
        for n in 0..self.dofs.num_nodes {
            for f in Field::ALL {
                if let (Some(a), Some(b)) = (old_dofs.std_dof(n, f), self.dofs.std_dof(n, f)) {
                    s.x[b] = old.x[a];
                }
            }
        }
        s
    }

    /// Temperature change driving thermal strain when heat is inactive.
    pub fn imposed_dtheta(&self) -> f64 {
        match (self.dofs.fields.heat, self.spec.temperature) {
            (false, Some(t)) => t - self.spec.t_ref,
            _ => 0.0,
        }
    }

    pub fn constraints(&self, t: f64) -> Result<Vec<(usize, f64)>> {
        let phi = &self.enrichment.node_phi;
        self.spec.bcs.constraints(&self.spec.mesh, &self.dofs, t, |a, b| {
            phi.iter().any(|p| (p[a] > 0.0) != (p[b] > 0.0))
        })
    }
}
