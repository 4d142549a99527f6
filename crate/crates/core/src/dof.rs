//! Global DOF numbering, boundary conditions and field reconstruction.
//!
//! Numbering is field-blocked: the standard DOFs of every active field come
//! first (node-ordered, one block per field in the order ux, uy, p, T),
//! followed by the enriched blocks in the same field order over the
//! enriched nodes. Enriched DOFs exist only where ψ = 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::enrichment::EnrichmentMap;
use crate::error::{Error, Result};
use crate::levelset::heaviside;
use crate::mesh::{Locator, Mesh};
use crate::quadrature::shape_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Ux,
    Uy,
    P,
    T,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Ux, Field::Uy, Field::P, Field::T];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Ux => "ux",
            Field::Uy => "uy",
            Field::P => "p",
            Field::T => "T",
        }
    }
}

/// Which physics are solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSet {
    pub mechanics: bool,
    pub flow: bool,
    pub heat: bool,
}

impl FieldSet {
    pub const ALL: FieldSet = FieldSet {
        mechanics: true,
        flow: true,
        heat: true,
    };

    pub fn fields(&self) -> Vec<Field> {
        let mut f = Vec::new();
        if self.mechanics {
            f.extend([Field::Ux, Field::Uy]);
        }
        if self.flow {
            f.push(Field::P);
        }
        if self.heat {
            f.push(Field::T);
        }
        f
    }

    pub fn has(&self, f: Field) -> bool {
        match f {
            Field::Ux | Field::Uy => self.mechanics,
            Field::P => self.flow,
            Field::T => self.heat,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub num_nodes: usize,
    pub fields: FieldSet,
    pub enriched_nodes: Vec<usize>,
    enr_pos: Vec<Option<usize>>,
    std_offset: [Option<usize>; 4],
    enr_offset: [Option<usize>; 4],
    pub total_dofs: usize,
}

pub fn build_dof_map(mesh: &Mesh, enrichment: &EnrichmentMap, fields: FieldSet) -> Result<DofMap> {
    if mesh.nodes.is_empty() || mesh.elements.is_empty() {
        return Err(Error::InvalidArgument("empty mesh".into()));
    }
    if enrichment.psi.len() != mesh.nodes.len() {
        return Err(Error::InvalidArgument(
            "enrichment map does not match the mesh".into(),
        ));
    }
    let nn = mesh.nodes.len();
    let enriched_nodes = enrichment.enriched_nodes();
    let mut enr_pos = vec![None; nn];
    for (k, &n) in enriched_nodes.iter().enumerate() {
        enr_pos[n] = Some(k);
    }
    let ne = enriched_nodes.len();
    let mut std_offset = [None; 4];
    let mut enr_offset = [None; 4];
    let mut next = 0;
    for f in fields.fields() {
        std_offset[f.index()] = Some(next);
        next += nn;
    }
    for f in fields.fields() {
        enr_offset[f.index()] = Some(next);
        next += ne;
    }
    Ok(DofMap {
        num_nodes: nn,
        fields,
        enriched_nodes,
        enr_pos,
        std_offset,
        enr_offset,
        total_dofs: next,
    })
}

impl DofMap {
    pub fn std_dof(&self, node: usize, f: Field) -> Option<usize> {
        self.std_offset[f.index()].map(|o| o + node)
    }

    pub fn enr_dof(&self, node: usize, f: Field) -> Option<usize> {
        let o = self.enr_offset[f.index()]?;
        self.enr_pos[node].map(|k| o + k)
    }

    pub fn is_enriched(&self, node: usize) -> bool {
        self.enr_pos[node].is_some()
    }

    /// Field owning a global DOF.
    pub fn field_of(&self, dof: usize) -> Field {
        let ne = self.enriched_nodes.len();
        for f in Field::ALL {
            if let Some(o) = self.std_offset[f.index()] {
                if dof >= o && dof < o + self.num_nodes {
                    return f;
                }
            }
            if let Some(o) = self.enr_offset[f.index()] {
                if dof >= o && dof < o + ne {
                    return f;
                }
            }
        }
        panic!("dof {dof} out of range")
    }

    /// All DOFs of a field, standard then enriched.
    pub fn field_dofs(&self, f: Field) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(o) = self.std_offset[f.index()] {
            out.extend(o..o + self.num_nodes);
        }
        if let Some(o) = self.enr_offset[f.index()] {
            out.extend(o..o + self.enriched_nodes.len());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThmState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl ThmState {
    pub fn zeros(dofs: &DofMap) -> ThmState {
        ThmState {
            x: vec![0.0; dofs.total_dofs],
            t: 0.0,
        }
    }

    /// Standard nodal value, zero for inactive fields.
    pub fn nodal(&self, dofs: &DofMap, node: usize, f: Field) -> f64 {
        dofs.std_dof(node, f).map_or(0.0, |d| self.x[d])
    }
}

/// Scalar function of time used for boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeFunction {
    Constant { value: f64 },
    /// Linear from `from` at `t0` to `to` at `t1`, constant outside.
    Ramp { from: f64, to: f64, t0: f64, t1: f64 },
    /// `before` for t < `at`, `after` from `at` on.
    Step { before: f64, after: f64, at: f64 },
}

impl TimeFunction {
    pub fn constant(value: f64) -> TimeFunction {
        TimeFunction::Constant { value }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant { value } => value,
            TimeFunction::Ramp { from, to, t0, t1 } => {
                if t <= t0 {
                    from
                } else if t >= t1 {
                    to
                } else {
                    from + (to - from) * (t - t0) / (t1 - t0)
                }
            }
            TimeFunction::Step { before, after, at } => {
                if t < at {
                    before
                } else {
                    after
                }
            }
        }
    }

    pub fn scaled(&self, s: f64) -> TimeFunction {
        match *self {
            TimeFunction::Constant { value } => TimeFunction::Constant { value: s * value },
            TimeFunction::Ramp { from, to, t0, t1 } => TimeFunction::Ramp {
                from: s * from,
                to: s * to,
                t0,
                t1,
            },
            TimeFunction::Step { before, after, at } => TimeFunction::Step {
                before: s * before,
                after: s * after,
                at,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBc {
    pub tag: String,
    pub field: Field,
    pub value: TimeFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeumannKind {
    TractionX,
    TractionY,
    /// Pressure acting against the outward normal (traction −p·n).
    NormalPressure,
    /// Fluid inflow per unit length (m/s).
    FluidFlux,
    /// Heat inflow per unit length (W/m²).
    HeatFlux,
}

impl NeumannKind {
    fn fields(self) -> &'static [Field] {
        match self {
            NeumannKind::TractionX => &[Field::Ux],
            NeumannKind::TractionY => &[Field::Uy],
            NeumannKind::NormalPressure => &[Field::Ux, Field::Uy],
            NeumannKind::FluidFlux => &[Field::P],
            NeumannKind::HeatFlux => &[Field::T],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannBc {
    pub tag: String,
    pub kind: NeumannKind,
    pub value: TimeFunction,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryConditionSet {
    pub dirichlet: Vec<DirichletBc>,
    pub neumann: Vec<NeumannBc>,
}

/// Nodes of a tag: its node set, or the end nodes of its edges when it
/// has no explicit nodes.
pub fn tag_nodes(mesh: &Mesh, tag: &str) -> Result<Vec<usize>> {
    let t = mesh
        .tag(tag)
        .map_err(|_| Error::config(format!("unknown boundary tag '{tag}'")))?;
    // explicit node lists win; edge-only tags (mesh files) use edge ends
    let mut nodes = t.nodes.clone();
    if !nodes.is_empty() {
        return Ok(nodes);
    }
    for &(e, k) in &t.edges {
        let (a, b) = mesh.edge_nodes(e, k);
        nodes.push(a);
        nodes.push(b);
    }
    nodes.sort_unstable();
    nodes.dedup();
    Ok(nodes)
}

impl BoundaryConditionSet {
    /// Checks tags, conflicting Dirichlet values and Dirichlet/Neumann
    /// overlap. All problems are reported together.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let mut errs = Vec::new();
        let mut fixed: BTreeMap<(usize, Field), &TimeFunction> = BTreeMap::new();
        for (i, bc) in self.dirichlet.iter().enumerate() {
            match tag_nodes(mesh, &bc.tag) {
                Ok(nodes) => {
                    for n in nodes {
                        if let Some(prev) = fixed.insert((n, bc.field), &bc.value) {
                            if *prev != bc.value {
                                errs.push(format!(
                                    "bcs.dirichlet[{i}]: node {n} field {} has two different prescribed values",
                                    bc.field.name()
                                ));
                            }
                        }
                    }
                }
                Err(_) => errs.push(format!("bcs.dirichlet[{i}].tag: unknown tag '{}'", bc.tag)),
            }
        }
        for (i, bc) in self.neumann.iter().enumerate() {
            let Ok(t) = mesh.tag(&bc.tag) else {
                errs.push(format!("bcs.neumann[{i}].tag: unknown tag '{}'", bc.tag));
                continue;
            };
            if t.edges.is_empty() {
                errs.push(format!("bcs.neumann[{i}].tag: '{}' has no edges", bc.tag));
            }
            for &(e, k) in &t.edges {
                let (a, b) = mesh.edge_nodes(e, k);
                let overlap = bc
                    .kind
                    .fields()
                    .iter()
                    .all(|&f| fixed.contains_key(&(a, f)) && fixed.contains_key(&(b, f)));
                if overlap {
                    errs.push(format!(
                        "bcs.neumann[{i}]: edge ({a},{b}) of '{}' is also fully Dirichlet",
                        bc.tag
                    ));
                    break;
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Constrained DOFs and values at time t, sorted by DOF.
    ///
    /// Enriched DOFs are fixed to zero on boundary edges crossed by a crack
    /// (`crossed(a, b)`) whose two nodes are both prescribed for the field,
    /// so the crack cannot open a jump in the prescribed value. Where the condition stops at the crack (a reservoir ending at
    /// a sheet pile), the enriched DOF stays free and the far side of the
    /// crack is not tied to the boundary value.
    pub fn constraints(
        &self,
        mesh: &Mesh,
        dofs: &DofMap,
        t: f64,
        crossed: impl Fn(usize, usize) -> bool,
    ) -> Result<Vec<(usize, f64)>> {
        let mut map = BTreeMap::new();
        let mut prescribed: BTreeMap<Field, Vec<bool>> = BTreeMap::new();
        for bc in &self.dirichlet {
            if !dofs.fields.has(bc.field) {
                continue;
            }
            let v = bc.value.value(t);
            let mark = prescribed.entry(bc.field).or_insert_with(|| vec![false; mesh.nodes.len()]);
            for n in tag_nodes(mesh, &bc.tag)? {
                mark[n] = true;
                if let Some(d) = dofs.std_dof(n, bc.field) {
                    map.insert(d, v);
                }
            }
        }
        if !dofs.enriched_nodes.is_empty() {
            for (e, k) in mesh.boundary_edges() {
                let (a, b) = mesh.edge_nodes(e, k);
                for (&f, mark) in &prescribed {
                    if mark[a] && mark[b] && crossed(a, b) {
                        for n in [a, b] {
                            if let Some(d) = dofs.enr_dof(n, f) {
                                map.insert(d, 0.0);
                            }
                        }
                    }
                }
            }
        }
        Ok(map.into_iter().collect())
    }
}

/// Point values of the physical fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldValues {
    pub u: [f64; 2],
    pub p: f64,
    pub t: f64,
}

impl FieldValues {
    pub fn get(&self, f: Field) -> f64 {
        match f {
            Field::Ux => self.u[0],
            Field::Uy => self.u[1],
            Field::P => self.p,
            Field::T => self.t,
        }
    }
}

/// Evaluates u, p, T at x. Points on a crack take the positive side.
pub fn evaluate_field(
    x: [f64; 2],
    state: &ThmState,
    mesh: &Mesh,
    locator: &Locator,
    enrichment: &EnrichmentMap,
    dofs: &DofMap,
) -> Result<FieldValues> {
    let (e, xi) = locator
        .locate(mesh, x)
        .ok_or(Error::OutOfDomain(x[0], x[1]))?;
    Ok(evaluate_in_element(e, xi, x, state, mesh, enrichment, dofs))
}

pub(crate) fn evaluate_in_element(
    e: usize,
    xi: [f64; 2],
    x: [f64; 2],
    state: &ThmState,
    mesh: &Mesh,
    enrichment: &EnrichmentMap,
    dofs: &DofMap,
) -> FieldValues {
    let (n, _) = shape_unchecked(xi);
    let mut vals = [0.0; 4];
    for (a, &node) in mesh.elements[e].nodes.iter().enumerate() {
        let psi = match enrichment.node_crack[node] {
            Some(c) if dofs.is_enriched(node) => {
                (heaviside(enrichment.phi(c, x)) - heaviside(enrichment.node_phi[c][node])) as f64
            }
            _ => 0.0,
        };
        for f in Field::ALL {
            if let Some(d) = dofs.std_dof(node, f) {
                vals[f.index()] += n[a] * state.x[d];
            }
            if psi != 0.0 {
                if let Some(d) = dofs.enr_dof(node, f) {
                    vals[f.index()] += n[a] * psi * state.x[d];
                }
            }
        }
    }
    FieldValues {
        u: [vals[0], vals[1]],
        p: vals[2],
        t: vals[3],
    }
}
