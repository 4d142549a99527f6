//! Result export: legacy VTK, probe CSV and SIF CSV.
//!
//! CSV files start with a header `t,<name>.<field>,...` and hold SI values
//! printed with 15 significant digits, so readers recover the doubles
//! used here to about 1 ulp·10.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::assembly::{point_eval, PointEval};
use crate::config::{field_by_name, ProbeSpec};
use crate::contact::{contact_states, has_contact, summarize};
use crate::dof::{Field, ThmState};
use crate::error::{Error, Result};
use crate::fracture::SifResult;
use crate::material::{darcy_velocity, effective_stress, total_stress, MixtureProps};
use crate::mesh::inverse_map;
use crate::model::Model;

/// 15 significant digits.
pub fn fmt15(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.14e}")
    }
}

/// Derived quantities at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Derived {
    /// Total stress (xx, yy, xy).
    pub sigma: [f64; 3],
    pub darcy: [f64; 2],
    pub heat_flux: [f64; 2],
}

pub fn derived(model: &Model, mat: &MixtureProps, pe: &PointEval) -> Derived {
    let f = model.dofs.fields;
    let t = if f.heat { pe.t } else { model.spec.t_ref + model.imposed_dtheta() };
    let eff = effective_stress(mat, pe.strain(), t, model.spec.t_ref);
    let sigma = total_stress(eff, if f.flow { pe.p } else { 0.0 }, mat.alpha);
    let darcy = if f.flow {
        darcy_velocity(mat, pe.grad_p, model.spec.body_force)
    } else {
        [0.0; 2]
    };
    let heat_flux = if f.heat {
        [-mat.lambda_eff * pe.grad_t[0], -mat.lambda_eff * pe.grad_t[1]]
    } else {
        [0.0; 2]
    };
    Derived { sigma, darcy, heat_flux }
}

struct VtkCell {
    points: Vec<usize>,
    kind: u8,
    data: Derived,
}

struct VtkPoint {
    x: [f64; 2],
    u: [f64; 2],
    p: f64,
    t: f64,
    psi: f64,
}

/// Legacy ASCII unstructured grid. Elements cut by a crack are written as
/// one polygon per side, each with its own points, so jumps stay sharp.
pub fn vtk_string(model: &Model, state: &ThmState) -> String {
    let mesh = model.mesh();
    let dofs = &model.dofs;
    let enr = &model.enrichment;
    let mut points: Vec<VtkPoint> = (0..mesh.nodes.len())
        .map(|n| VtkPoint {
            x: mesh.xy(n),
            u: [state.nodal(dofs, n, Field::Ux), state.nodal(dofs, n, Field::Uy)],
            p: state.nodal(dofs, n, Field::P),
            t: state.nodal(dofs, n, Field::T),
            psi: enr.psi[n] as f64,
        })
        .collect();
    let mut cells = Vec::with_capacity(mesh.elements.len());
    for (e, el) in mesh.elements.iter().enumerate() {
        let mat = model.material(e);
        let coords = mesh.element_coords(e);
        match enr.cuts.get(&e) {
            None => {
                let pe = point_eval(model, state, e, [0.0, 0.0], None);
                cells.push(VtkCell {
                    points: el.nodes.to_vec(),
                    kind: 9,
                    data: derived(model, mat, &pe),
                });
            }
            Some(cut) => {
                let psi = el.nodes.iter().map(|&n| enr.psi[n]).max().unwrap_or(0) as f64;
                for (poly, side) in [(&cut.poly_pos, 1.0), (&cut.poly_neg, -1.0)] {
                    if poly.len() < 3 {
                        continue;
                    }
                    let mut ids = Vec::with_capacity(poly.len());
                    let mut c = [0.0; 2];
                    for &x in poly.iter() {
                        let xi = inverse_map(&coords, x).unwrap_or([0.0, 0.0]);
                        let pe = point_eval(model, state, e, xi, Some(side));
                        ids.push(points.len());
                        points.push(VtkPoint {
                            x,
                            u: pe.u,
                            p: pe.p,
                            t: pe.t,
                            psi,
                        });
                        c[0] += x[0] / poly.len() as f64;
                        c[1] += x[1] / poly.len() as f64;
                    }
                    let xi = inverse_map(&coords, c).unwrap_or([0.0, 0.0]);
                    let pe = point_eval(model, state, e, xi, Some(side));
                    cells.push(VtkCell {
                        points: ids,
                        kind: 7,
                        data: derived(model, mat, &pe),
                    });
                }
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "xthm t={}", fmt15(state.t));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{} {} 0", fmt15(p.x[0]), fmt15(p.x[1]));
    }
    let size: usize = cells.iter().map(|c| c.points.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", cells.len(), size);
    for c in &cells {
        let _ = write!(s, "{}", c.points.len());
        for p in &c.points {
            let _ = write!(s, " {p}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for c in &cells {
        let _ = writeln!(s, "{}", c.kind);
    }
    let _ = writeln!(s, "POINT_DATA {}", points.len());
    let _ = writeln!(s, "VECTORS u double");
    for p in &points {
        let _ = writeln!(s, "{} {} 0", fmt15(p.u[0]), fmt15(p.u[1]));
    }
    for (name, get) in [
        ("p", (|p: &VtkPoint| p.p) as fn(&VtkPoint) -> f64),
        ("T", |p| p.t),
        ("psi", |p| p.psi),
    ] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for p in &points {
            let _ = writeln!(s, "{}", fmt15(get(p)));
        }
    }
    let _ = writeln!(s, "CELL_DATA {}", cells.len());
    let _ = writeln!(s, "TENSORS sigma double");
    for c in &cells {
        let [xx, yy, xy] = c.data.sigma;
        let _ = writeln!(s, "{} {} 0\n{} {} 0\n0 0 0", fmt15(xx), fmt15(xy), fmt15(xy), fmt15(yy));
    }
    for (name, get) in [
        ("darcy_velocity", (|d: &Derived| d.darcy) as fn(&Derived) -> [f64; 2]),
        ("heat_flux", |d| d.heat_flux),
    ] {
        let _ = writeln!(s, "VECTORS {name} double");
        for c in &cells {
            let v = get(&c.data);
            let _ = writeln!(s, "{} {} 0", fmt15(v[0]), fmt15(v[1]));
        }
    }
    s
}

pub fn write_vtk(model: &Model, state: &ThmState, path: &Path) -> Result<()> {
    std::fs::write(path, vtk_string(model, state))?;
    Ok(())
}

/// Point probe resolved to an element.
#[derive(Debug, Clone)]
pub struct Probe {
    pub name: String,
    pub at: [f64; 2],
    pub fields: Vec<Field>,
    element: usize,
    xi: [f64; 2],
}

impl Probe {
    pub fn new(model: &Model, name: &str, at: [f64; 2], fields: &[Field]) -> Result<Probe> {
        let (element, xi) = model
            .locator
            .locate(model.mesh(), at)
            .ok_or(Error::OutOfDomain(at[0], at[1]))?;
        Ok(Probe {
            name: name.into(),
            at,
            fields: fields.to_vec(),
            element,
            xi,
        })
    }

    pub fn from_spec(model: &Model, spec: &ProbeSpec) -> Result<Probe> {
        let fields: Vec<Field> = spec
            .fields
            .iter()
            .map(|f| field_by_name(f).ok_or_else(|| Error::config(format!("probe {}: unknown field {f}", spec.name))))
            .collect::<Result<_>>()?;
        Probe::new(model, &spec.name, [spec.at[0].0, spec.at[1].0], &fields)
    }

    pub fn eval(&self, model: &Model, state: &ThmState) -> Vec<f64> {
        let pe = point_eval(model, state, self.element, self.xi, None);
        self.fields
            .iter()
            .map(|f| match f {
                Field::Ux => pe.u[0],
                Field::Uy => pe.u[1],
                Field::P => pe.p,
                Field::T => pe.t,
            })
            .collect()
    }
}

/// Probe CSV writer; contact diagnostics are appended when the model has
/// contact.
pub struct ProbeCsv {
    out: Box<dyn Write>,
    pub probes: Vec<Probe>,
    contact: bool,
}

impl ProbeCsv {
    pub fn new(model: &Model, probes: Vec<Probe>, out: Box<dyn Write>) -> Result<ProbeCsv> {
        let mut w = ProbeCsv {
            out,
            probes,
            contact: has_contact(model),
        };
        let mut header = vec!["t".to_string()];
        for p in &w.probes {
            for f in &p.fields {
                header.push(format!("{}.{}", p.name, f.name()));
            }
        }
        if w.contact {
            header.extend(
                ["contact.active_length", "contact.normal_force", "contact.max_penetration"]
                    .map(String::from),
            );
        }
        writeln!(w.out, "{}", header.join(","))?;
        Ok(w)
    }

    pub fn create(model: &Model, probes: Vec<Probe>, path: &Path) -> Result<ProbeCsv> {
        ProbeCsv::new(model, probes, Box::new(BufWriter::new(File::create(path)?)))
    }

    pub fn row(&mut self, model: &Model, state: &ThmState) -> Result<()> {
        let mut v = vec![state.t];
        for p in &self.probes {
            v.extend(p.eval(model, state));
        }
        if self.contact {
            let s = summarize(&contact_states(model, &state.x));
            v.extend([s.active_length, s.normal_force, s.max_penetration]);
        }
        let line: Vec<String> = v.into_iter().map(fmt15).collect();
        writeln!(self.out, "{}", line.join(","))?;
        self.out.flush()?;
        Ok(())
    }
}

/// Per-tip SIF rows: t, crack, tip, K_I, K_II, J, F_I, theta_c.
pub struct SifCsv {
    out: Box<dyn Write>,
}

pub const SIF_HEADER: &str = "t,crack,tip,K_I,K_II,J,F_I,theta_c";

impl SifCsv {
    pub fn new(mut out: Box<dyn Write>) -> Result<SifCsv> {
        writeln!(out, "{SIF_HEADER}")?;
        Ok(SifCsv { out })
    }

    pub fn create(path: &Path) -> Result<SifCsv> {
        SifCsv::new(Box::new(BufWriter::new(File::create(path)?)))
    }

    pub fn row(&mut self, t: f64, crack: usize, tip: usize, s: &SifResult, f_i: f64, theta_c: f64) -> Result<()> {
        writeln!(
            self.out,
            "{},{crack},{tip},{},{},{},{},{}",
            fmt15(t),
            fmt15(s.k_i),
            fmt15(s.k_ii),
            fmt15(s.j),
            fmt15(f_i),
            fmt15(theta_c)
        )?;
        self.out.flush()?;
        Ok(())
    }
}

/// Parsed CSV: header and rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: std::result::Result<Vec<f64>, _> = l.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::InvalidArgument(format!("CSV row {}: {e}", i + 2)))?;
        if row.len() != header.len() {
            return Err(Error::InvalidArgument(format!("CSV row {} has {} columns", i + 2, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
