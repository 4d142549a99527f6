#![allow(dead_code)]

pub mod checks;

use xthm::contact::ContactParams;
use xthm::dof::{BoundaryConditionSet, DirichletBc, Field, FieldSet, NeumannBc, NeumannKind, TimeFunction};
use xthm::levelset::CrackGeometry;
use xthm::material::{derive_solid, MixtureProps, PlaneMode, SolidProps};
use xthm::mesh::Mesh;
use xthm::model::{InitialConditions, ModelSpec};

pub fn solid(e: f64, nu: f64, mode: PlaneMode) -> MixtureProps {
    derive_solid(
        &SolidProps {
            e,
            nu,
            rho_s: 2000.0,
            ks: None,
            beta_s: 3e-5,
            lambda_s: 2.0,
            c_s: 1000.0,
            f_t: Some(1e6),
            g_f: None,
        },
        mode,
    )
    .unwrap()
}

pub fn spec(mesh: Mesh, mat: MixtureProps, fields: FieldSet) -> ModelSpec {
    ModelSpec {
        mesh,
        materials: vec![mat],
        cracks: Vec::new(),
        contact: Vec::new(),
        bcs: BoundaryConditionSet::default(),
        fields,
        t_ref: 0.0,
        body_force: [0.0, 0.0],
        temperature: None,
        delta_s: 0.005,
        initial: InitialConditions::default(),
    }
}

pub fn with_crack(mut s: ModelSpec, crack: CrackGeometry, contact: Option<ContactParams>) -> ModelSpec {
    s.cracks.push(crack);
    s.contact.push(contact);
    s
}

pub fn fix(s: &mut ModelSpec, tag: &str, field: Field, value: f64) {
    s.bcs.dirichlet.push(DirichletBc {
        tag: tag.into(),
        field,
        value: TimeFunction::constant(value),
    });
}

pub fn load(s: &mut ModelSpec, tag: &str, kind: NeumannKind, value: f64) {
    s.bcs.neumann.push(NeumannBc {
        tag: tag.into(),
        kind,
        value: TimeFunction::constant(value),
    });
}

pub const MECH: FieldSet = FieldSet {
    mechanics: true,
    flow: false,
    heat: false,
};
pub const HEAT: FieldSet = FieldSet {
    mechanics: false,
    flow: false,
    heat: true,
};
pub const TM: FieldSet = FieldSet {
    mechanics: true,
    flow: false,
    heat: true,
};
