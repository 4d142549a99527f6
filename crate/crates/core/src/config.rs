//! Run configuration: TOML with optional unit strings.
//!
//! Any physical value may be written as a bare number (SI) or as a string
//! "<number> <unit>", e.g. `E = "9 GPa"` or `k_n = "1e9 MN/m^3"`. Values are
//! converted to SI at parse time and dumped back as plain numbers, so
//! parse → dump → parse is lossless.
//!
//! Each section is decoded on its own and every problem found is reported
//! with its path, e.g. `materials[1].E: unknown unit 'Gpa'`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::contact::ContactParams;
use crate::dof::{BoundaryConditionSet, DirichletBc, Field, FieldSet, NeumannBc, NeumannKind, TimeFunction};
use crate::error::{Error, Result};
use crate::fracture::DomainOptions;
use crate::levelset::CrackGeometry;
use crate::material::{derive_mixture, derive_solid, FluidProps, MixtureProps, PlaneMode, SolidProps};
use crate::mesh::{build_structured_grid, build_tensor_grid, graded_lines, Mesh};
use crate::model::{InitialConditions, ModelSpec};
use crate::solver::{Scheme, SolverSettings};

const UNITS: &[(&str, f64)] = &[
    ("Pa", 1.0),
    ("kPa", 1e3),
    ("MPa", 1e6),
    ("GPa", 1e9),
    ("m", 1.0),
    ("cm", 1e-2),
    ("mm", 1e-3),
    ("km", 1e3),
    ("s", 1.0),
    ("min", 60.0),
    ("h", 3600.0),
    ("d", 86400.0),
    ("N", 1.0),
    ("kN", 1e3),
    ("MN", 1e6),
    ("N/m", 1.0),
    ("kN/m", 1e3),
    ("MN/m", 1e6),
    ("N/mm", 1e3),
    ("Pa/m", 1.0),
    ("N/m^3", 1.0),
    ("kN/m^3", 1e3),
    ("MN/m^3", 1e6),
    ("GN/m^3", 1e9),
    ("m/s", 1.0),
    ("m/s^2", 1.0),
    ("m^2", 1.0),
    ("kg/m^3", 1.0),
    ("Pa.s", 1.0),
    ("mPa.s", 1e-3),
    ("degC", 1.0),
    ("C", 1.0),
    ("1/degC", 1.0),
    ("1/C", 1.0),
    ("1/K", 1.0),
    ("W/(m.degC)", 1.0),
    ("W/(m.C)", 1.0),
    ("W/(m^2.degC)", 1.0),
    ("W/(m^2.C)", 1.0),
    ("W/m^2", 1.0),
    ("J/(kg.degC)", 1.0),
    ("J/(kg.C)", 1.0),
    ("rad", 1.0),
    ("deg", std::f64::consts::PI / 180.0),
];

/// Parses "<number>" or "<number> <unit>" into SI.
pub fn parse_quantity(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let (num, unit) = match t.find(|c: char| c.is_whitespace()) {
        Some(i) => (&t[..i], t[i..].trim()),
        None => (t, ""),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| format!("'{text}' is not a number with an optional unit"))?;
    if unit.is_empty() {
        return Ok(v);
    }
    let unit = unit.replace('°', "deg").replace('·', ".").replace('³', "^3").replace('²', "^2");
    UNITS
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| v * f)
        .ok_or_else(|| format!("unknown unit '{unit}'"))
}

/// A physical value in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Q(pub f64);

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Q;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or a \"<number> <unit>\" string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Q, E> {
                Ok(Q(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Q, E> {
                Ok(Q(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Q, E> {
                Ok(Q(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Q, E> {
                parse_quantity(v).map(Q).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Boundary value: a constant or a time function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Constant(Q),
    Function(FunctionSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: Q },
    Ramp { from: Q, to: Q, t0: Q, t1: Q },
    Step { before: Q, after: Q, at: Q },
}

impl ValueSpec {
    pub fn to_time_function(&self) -> TimeFunction {
        match self {
            ValueSpec::Constant(q) => TimeFunction::constant(q.0),
            ValueSpec::Function(FunctionSpec::Constant { value }) => TimeFunction::constant(value.0),
            ValueSpec::Function(FunctionSpec::Ramp { from, to, t0, t1 }) => TimeFunction::Ramp {
                from: from.0,
                to: to.0,
                t0: t0.0,
                t1: t1.0,
            },
            ValueSpec::Function(FunctionSpec::Step { before, after, at }) => TimeFunction::Step {
                before: before.0,
                after: after.0,
                at: at.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub to: Q,
    /// Number of uniform intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Target size at the segment start (uniform if `h_end` is absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Q>,
    /// Size reached at the segment end with geometric growth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_end: Option<Q>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: Q,
    pub segments: Vec<Segment>,
}

impl AxisSpec {
    pub fn lines(&self) -> std::result::Result<Vec<f64>, String> {
        let mut v = vec![self.start.0];
        let mut a = self.start.0;
        for (i, s) in self.segments.iter().enumerate() {
            let b = s.to.0;
            if !(b > a) {
                return Err(format!("segments[{i}].to must exceed the previous coordinate"));
            }
            let len = b - a;
            let pts: Vec<f64> = match (s.n, s.h, s.h_end) {
                (Some(n), None, None) if n > 0 => (1..=n).map(|k| a + len * k as f64 / n as f64).collect(),
                (None, Some(h), None) if h.0 > 0.0 => {
                    let n = (len / h.0).round().max(1.0) as usize;
                    (1..=n).map(|k| a + len * k as f64 / n as f64).collect()
                }
                (None, Some(h0), Some(h1)) if h0.0 > 0.0 && h1.0 > 0.0 => {
                    let g = if h1.0 >= h0.0 {
                        graded_lines(a, b, h0.0, h1.0, 1.15)
                    } else {
                        let mut r: Vec<f64> = graded_lines(b, a, h1.0, h0.0, 1.15);
                        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
                        r
                    };
                    g.into_iter().skip(1).collect()
                }
                _ => return Err(format!("segments[{i}]: give n, h, or h with h_end (all > 0)")),
            };
            v.extend(pts);
            a = b;
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagSpec {
    pub name: String,
    /// "boundary" (boundary nodes and edges) or "nodes" (any node).
    #[serde(default = "default_tag_kind")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[Q; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[Q; 2]>,
    /// Nearest node to a point (kind "point").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[Q; 2]>,
}

fn default_tag_kind() -> String {
    "boundary".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub material: usize,
    pub x: [Q; 2],
    pub y: [Q; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshKind {
    Structured {
        nx: usize,
        ny: usize,
        width: Q,
        height: Q,
        #[serde(default)]
        origin: [Q; 2],
    },
    Tensor {
        x: AxisSpec,
        y: AxisSpec,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    #[serde(flatten)]
    pub kind: MeshKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<TagSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSpec {
    pub rho_f: Q,
    #[serde(rename = "Kf")]
    pub kf: Q,
    pub mu_f: Q,
    #[serde(default)]
    pub beta_f: Q,
    #[serde(default)]
    pub lambda_f: Q,
    #[serde(rename = "C_f", default)]
    pub c_f: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "E")]
    pub e: Q,
    pub nu: f64,
    #[serde(default)]
    pub rho_s: Q,
    #[serde(rename = "Ks", default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Q>,
    #[serde(default)]
    pub beta_s: Q,
    #[serde(default)]
    pub lambda_s: Q,
    #[serde(rename = "C_s", default)]
    pub c_s: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_t: Option<Q>,
    #[serde(rename = "G_f", default, skip_serializing_if = "Option::is_none")]
    pub g_f: Option<Q>,
    /// Porosity and permeability; both required with `fluid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidSpec>,
}

impl MaterialSpec {
    pub fn solid(&self) -> SolidProps {
        SolidProps {
            e: self.e.0,
            nu: self.nu,
            rho_s: self.rho_s.0,
            ks: self.ks.map(|q| q.0),
            beta_s: self.beta_s.0,
            lambda_s: self.lambda_s.0,
            c_s: self.c_s.0,
            f_t: self.f_t.map(|q| q.0),
            g_f: self.g_f.map(|q| q.0),
        }
    }

    pub fn derive(&self, mode: PlaneMode) -> Result<MixtureProps> {
        match &self.fluid {
            None => derive_solid(&self.solid(), mode),
            Some(f) => derive_mixture(
                &self.solid(),
                &FluidProps {
                    rho_f: f.rho_f.0,
                    kf: f.kf.0,
                    mu_f: f.mu_f.0,
                    beta_f: f.beta_f.0,
                    lambda_f: f.lambda_f.0,
                    c_f: f.c_f.0,
                },
                self.n.unwrap_or(f64::NAN),
                self.k_f.map_or(f64::NAN, |q| q.0),
                mode,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    pub k_n: Q,
    #[serde(default)]
    pub h_cont: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_width: Option<Q>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackSpec {
    pub vertices: Vec<[Q; 2]>,
    /// Active flags of the first and last vertex.
    pub tips: [bool; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<ContactSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    pub tag: String,
    pub field: String,
    pub value: ValueSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannSpec {
    pub tag: String,
    pub kind: NeumannKind,
    pub value: ValueSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSpec {
    #[serde(default)]
    pub dirichlet: Vec<DirichletSpec>,
    #[serde(default)]
    pub neumann: Vec<NeumannSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub p: Q,
    #[serde(rename = "T", default)]
    pub t: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub delta_a: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_t: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_eval: Option<Q>,
    #[serde(default = "default_max_growth")]
    pub max_per_step: usize,
}

fn default_max_growth() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StudySpec {
    Stationary {
        #[serde(default)]
        t: Q,
    },
    Transient {
        t_end: Q,
        /// Output instants; `n_outputs` uniform instants up to t_end if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output_times: Option<Vec<Q>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_outputs: Option<usize>,
    },
    /// Stationary solves over a parameter. The only parameter is
    /// "temperature", the uniform temperature seen by the mechanics.
    Sweep {
        parameter: String,
        values: Vec<Q>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        growth: Option<GrowthSpec>,
    },
}

impl StudySpec {
    pub fn output_times(&self) -> Vec<f64> {
        match self {
            StudySpec::Transient {
                t_end,
                output_times,
                n_outputs,
            } => match output_times {
                Some(v) => v.iter().map(|q| q.0).collect(),
                None => {
                    let n = n_outputs.unwrap_or(10).max(1);
                    (1..=n).map(|k| t_end.0 * k as f64 / n as f64).collect()
                }
            },
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub dt: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<Q>,
    #[serde(default = "default_tol_rel")]
    pub newton_tol_rel: f64,
    #[serde(default = "default_tol_abs")]
    pub newton_tol_abs: [f64; 3],
    #[serde(default = "default_max_newton")]
    pub max_newton: usize,
}

fn one() -> Q {
    Q(1.0)
}
fn default_tol_rel() -> f64 {
    SolverSettings::default().newton_tol_rel
}
fn default_tol_abs() -> [f64; 3] {
    SolverSettings::default().newton_tol_abs
}
fn default_max_newton() -> usize {
    SolverSettings::default().max_newton
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            scheme: Scheme::BackwardEuler,
            dt: Q(1.0),
            dt_min: None,
            newton_tol_rel: default_tol_rel(),
            newton_tol_abs: default_tol_abs(),
            max_newton: default_max_newton(),
        }
    }
}

impl SolverSpec {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            scheme: self.scheme,
            dt: self.dt.0,
            dt_min: self.dt_min.map_or(self.dt.0 * 1e-4, |q| q.0),
            newton_tol_rel: self.newton_tol_rel,
            newton_tol_abs: self.newton_tol_abs,
            max_newton: self.max_newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub name: String,
    pub at: [Q; 2],
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write a VTK file at every k-th output instant (0: never).
    #[serde(default = "default_vtk_every")]
    pub vtk_every: usize,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_log")]
    pub log: String,
    /// Per-tip SIF rows at every output when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sif_csv: Option<String>,
    /// Temperature amplitude θ₀ used to report the normalized SIF F_I.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sif_theta0: Option<Q>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_vtk_every() -> usize {
    1
}
fn default_csv() -> String {
    "probes.csv".into()
}
fn default_log() -> String {
    "convergence.jsonl".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            vtk_every: default_vtk_every(),
            csv: default_csv(),
            log: default_log(),
            sif_csv: None,
            sif_theta0: None,
        }
    }
}

/// Interaction-integral annulus; defaults 1.5h and 3h of the tip element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SifSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<Q>,
    #[serde(default = "default_sif_order")]
    pub order: usize,
}

fn default_sif_order() -> usize {
    DomainOptions::default().order
}

impl Default for SifSpec {
    fn default() -> Self {
        SifSpec {
            r1: None,
            r2: None,
            order: default_sif_order(),
        }
    }
}

impl SifSpec {
    pub fn domain(&self) -> DomainOptions {
        DomainOptions {
            r1: self.r1.map(|q| q.0),
            r2: self.r2.map(|q| q.0),
            order: self.order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Any of "u", "p", "T".
    pub fields: Vec<String>,
    pub plane: PlaneMode,
    pub t_ref: Q,
    pub body_force: [Q; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Q>,
    pub delta_s: f64,
    pub study: StudySpec,
    pub mesh: MeshSpec,
    pub materials: Vec<MaterialSpec>,
    #[serde(default)]
    pub cracks: Vec<CrackSpec>,
    #[serde(default)]
    pub bc: BcSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
    #[serde(default)]
    pub sif: SifSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

const TOP_KEYS: &[&str] = &[
    "title",
    "fields",
    "plane",
    "t_ref",
    "body_force",
    "temperature",
    "delta_s",
    "study",
    "mesh",
    "materials",
    "cracks",
    "bc",
    "initial",
    "solver",
    "probes",
    "sif",
    "output",
];

fn take<T: for<'de> Deserialize<'de>>(
    table: &toml::Table,
    key: &str,
    errs: &mut Vec<String>,
) -> Option<T> {
    let v = table.get(key)?;
    match v.clone().try_into::<T>() {
        Ok(t) => Some(t),
        Err(e) => {
            errs.push(format!("{key}: {}", e.message().trim()));
            None
        }
    }
}

fn take_list<T: for<'de> Deserialize<'de>>(
    table: &toml::Table,
    key: &str,
    errs: &mut Vec<String>,
) -> Vec<T> {
    let Some(v) = table.get(key) else {
        return Vec::new();
    };
    let Some(arr) = v.as_array() else {
        errs.push(format!("{key}: expected an array of tables"));
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, item) in arr.iter().enumerate() {
        match item.clone().try_into::<T>() {
            Ok(t) => out.push(t),
            Err(e) => errs.push(format!("{key}[{i}]: {}", e.message().trim())),
        }
    }
    out
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(format!("syntax: {}", e.to_string().trim())))?;
    let mut errs = Vec::new();
    for k in table.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            errs.push(format!("{k}: unknown key"));
        }
    }
    let title = take::<String>(&table, "title", &mut errs);
    let fields = take::<Vec<String>>(&table, "fields", &mut errs);
    if fields.is_none() && !table.contains_key("fields") {
        errs.push("fields: missing (list of \"u\", \"p\", \"T\")".into());
    }
    let plane = take::<PlaneMode>(&table, "plane", &mut errs).unwrap_or_default();
    let t_ref = take::<Q>(&table, "t_ref", &mut errs).unwrap_or_default();
    let body_force = take::<[Q; 2]>(&table, "body_force", &mut errs).unwrap_or_default();
    let temperature = take::<Q>(&table, "temperature", &mut errs);
    let delta_s = take::<f64>(&table, "delta_s", &mut errs).unwrap_or(crate::enrichment::DELTA_S);
    let study = take::<StudySpec>(&table, "study", &mut errs);
    if study.is_none() && !table.contains_key("study") {
        errs.push("study: missing".into());
    }
    let mesh = take::<MeshSpec>(&table, "mesh", &mut errs);
    if mesh.is_none() && !table.contains_key("mesh") {
        errs.push("mesh: missing".into());
    }
    let materials = take_list::<MaterialSpec>(&table, "materials", &mut errs);
    if !table.contains_key("materials") {
        errs.push("materials: missing".into());
    }
    let cracks = take_list::<CrackSpec>(&table, "cracks", &mut errs);
    let bc = take::<BcSpec>(&table, "bc", &mut errs).unwrap_or_default();
    let initial = take::<InitialSpec>(&table, "initial", &mut errs).unwrap_or_default();
    let solver = take::<SolverSpec>(&table, "solver", &mut errs).unwrap_or_default();
    let probes = take_list::<ProbeSpec>(&table, "probes", &mut errs);
    let sif = take::<SifSpec>(&table, "sif", &mut errs).unwrap_or_default();
    let output = take::<OutputSpec>(&table, "output", &mut errs).unwrap_or_default();
    let (Some(fields), Some(study), Some(mesh)) = (fields, study, mesh) else {
        return Err(Error::Config(errs));
    };
    let cfg = RunConfig {
        title,
        fields,
        plane,
        t_ref,
        body_force,
        temperature,
        delta_s,
        study,
        mesh,
        materials,
        cracks,
        bc,
        initial,
        solver,
        probes,
        sif,
        output,
    };
    errs.extend(cfg.check());
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let MeshKind::File { path: p } = &mut cfg.mesh.kind {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

/// Serializes to TOML with every value in SI.
pub fn dump_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::config(format!("dump: {e}")))
}

pub fn field_by_name(name: &str) -> Option<Field> {
    match name {
        "ux" => Some(Field::Ux),
        "uy" => Some(Field::Uy),
        "p" => Some(Field::P),
        "T" => Some(Field::T),
        _ => None,
    }
}

impl RunConfig {
    pub fn field_set(&self) -> FieldSet {
        let has = |s: &str| self.fields.iter().any(|f| f == s);
        FieldSet {
            mechanics: has("u"),
            flow: has("p"),
            heat: has("T"),
        }
    }

    /// Cross-reference checks that need no mesh.
    fn check(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (i, f) in self.fields.iter().enumerate() {
            if !["u", "p", "T"].contains(&f.as_str()) {
                errs.push(format!("fields[{i}]: unknown field '{f}' (use u, p, T)"));
            }
        }
        let fs = self.field_set();
        let mut ids = BTreeSet::new();
        for (i, m) in self.materials.iter().enumerate() {
            if !ids.insert(m.id) {
                errs.push(format!("materials[{i}].id: duplicate id {}", m.id));
            }
            if m.fluid.is_some() && (m.n.is_none() || m.k_f.is_none()) {
                errs.push(format!("materials[{i}]: a fluid needs n and k_f"));
            }
            if fs.flow && m.fluid.is_none() {
                errs.push(format!("materials[{i}].fluid: required when p is solved"));
            }
            if let Err(e) = m.derive(self.plane) {
                errs.push(format!("materials[{i}]: {e}"));
            }
        }
        let max_id = ids.iter().next_back().copied();
        if let Some(max) = max_id {
            if ids.len() != max + 1 {
                errs.push("materials: ids must be 0..N-1 without gaps".into());
            }
        }
        for (i, r) in self.mesh.regions.iter().enumerate() {
            if !ids.contains(&r.material) {
                errs.push(format!("mesh.regions[{i}].material: unknown material id {}", r.material));
            }
        }
        for (i, t) in self.mesh.tags.iter().enumerate() {
            match t.kind.as_str() {
                "boundary" | "nodes" => {}
                "point" if t.at.is_some() => {}
                "point" => errs.push(format!("mesh.tags[{i}].at: required for kind 'point'")),
                k => errs.push(format!("mesh.tags[{i}].kind: unknown kind '{k}'")),
            }
        }
        for (i, c) in self.cracks.iter().enumerate() {
            let v: Vec<[f64; 2]> = c.vertices.iter().map(|p| [p[0].0, p[1].0]).collect();
            if let Err(e) = CrackGeometry::new(v, c.tips) {
                errs.push(format!("cracks[{i}].vertices: {e}"));
            }
            if let Some(ct) = &c.contact {
                if !fs.mechanics {
                    errs.push(format!("cracks[{i}].contact: needs the u field"));
                }
                if let Err(e) = ct.params().validate() {
                    errs.push(format!("cracks[{i}].contact: {e}"));
                }
            }
        }
        for (i, d) in self.bc.dirichlet.iter().enumerate() {
            match d.field.as_str() {
                "ux" | "uy" | "p" | "T" => {
                    let f = field_by_name(&d.field).unwrap();
                    if !fs.has(f) {
                        errs.push(format!("bc.dirichlet[{i}].field: '{}' is not solved for", d.field));
                    }
                }
                other => errs.push(format!("bc.dirichlet[{i}].field: unknown field '{other}'")),
            }
        }
        for (i, p) in self.probes.iter().enumerate() {
            for f in &p.fields {
                if field_by_name(f).is_none_or(|f| !fs.has(f)) {
                    errs.push(format!("probes[{i}].fields: '{f}' is not a solved field"));
                }
            }
        }
        match (self.sif.r1, self.sif.r2) {
            (Some(a), Some(b)) if !(a.0 > 0.0 && b.0 > a.0) => errs.push("sif: need 0 < r1 < r2".into()),
            (Some(_), None) | (None, Some(_)) => errs.push("sif: give both r1 and r2".into()),
            _ => {}
        }
        if self.sif.order == 0 {
            errs.push("sif.order: must be >= 1".into());
        }
        if let Err(Error::Config(e)) = self.solver.settings().validate() {
            errs.extend(e);
        }
        match &self.study {
            StudySpec::Transient { t_end, .. } => {
                if !(t_end.0 > 0.0) {
                    errs.push("study.t_end: must be > 0".into());
                }
                let ts = self.study.output_times();
                if ts.windows(2).any(|w| w[1] <= w[0]) || ts.first().is_some_and(|t| *t <= 0.0) {
                    errs.push("study.output_times: must be positive and increasing".into());
                }
            }
            StudySpec::Sweep { parameter, values, .. } => {
                if parameter != "temperature" {
                    errs.push(format!("study.parameter: unknown sweep parameter '{parameter}'"));
                }
                let inc = values.windows(2).all(|w| w[1].0 > w[0].0);
                let dec = values.windows(2).all(|w| w[1].0 < w[0].0);
                if !(inc || dec) {
                    errs.push("study.values: must be monotone".into());
                }
            }
            StudySpec::Stationary { .. } => {}
        }
        if matches!(self.study, StudySpec::Sweep { .. }) && fs.heat {
            errs.push("study: a temperature sweep needs the T field off".into());
        }
        errs
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let mut mesh = match &self.mesh.kind {
            MeshKind::Structured {
                nx,
                ny,
                width,
                height,
                origin,
            } => build_structured_grid(*nx, *ny, width.0, height.0, [origin[0].0, origin[1].0])?,
            MeshKind::Tensor { x, y } => {
                let xs = x.lines().map_err(|e| Error::config(format!("mesh.x.{e}")))?;
                let ys = y.lines().map_err(|e| Error::config(format!("mesh.y.{e}")))?;
                build_tensor_grid(&xs, &ys)?
            }
            MeshKind::File { path } => Mesh::from_text(&std::fs::read_to_string(path)?)?,
        };
        let (lo, hi) = mesh.bounding_box();
        let tol = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let inside = |v: f64, r: &Option<[Q; 2]>| r.is_none_or(|r| v >= r[0].0 - tol && v <= r[1].0 + tol);
        for r in &self.mesh.regions {
            mesh.set_material_where(r.material, |c| {
                c[0] >= r.x[0].0 && c[0] <= r.x[1].0 && c[1] >= r.y[0].0 && c[1] <= r.y[1].0
            });
        }
        for t in &self.mesh.tags {
            match t.kind.as_str() {
                "boundary" => {
                    let r = |v: &Option<[Q; 2]>| v.map(|r| [r[0].0, r[1].0]);
                    mesh.tag_boundary_box(&t.name, r(&t.x), r(&t.y))
                }
                "nodes" => mesh.tag_nodes_where(&t.name, |p| inside(p[0], &t.x) && inside(p[1], &t.y)),
                _ => {
                    let at = t.at.unwrap();
                    let target = [at[0].0, at[1].0];
                    let d2 = |n: usize| {
                        let p = mesh.xy(n);
                        (p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2)
                    };
                    let best = (0..mesh.nodes.len())
                        .min_by(|&a, &b| d2(a).total_cmp(&d2(b)))
                        .unwrap_or(0);
                    let xy = mesh.xy(best);
                    mesh.tag_nodes_where(&t.name, |p| p == xy);
                }
            }
        }
        Ok(mesh)
    }

    pub fn cracks(&self) -> Result<Vec<CrackGeometry>> {
        self.cracks
            .iter()
            .map(|c| CrackGeometry::new(c.vertices.iter().map(|p| [p[0].0, p[1].0]).collect(), c.tips))
            .collect()
    }

    pub fn materials(&self) -> Result<Vec<MixtureProps>> {
        let mut ms = self.materials.clone();
        ms.sort_by_key(|m| m.id);
        ms.iter().map(|m| m.derive(self.plane)).collect()
    }

    pub fn boundary_conditions(&self) -> BoundaryConditionSet {
        BoundaryConditionSet {
            dirichlet: self
                .bc
                .dirichlet
                .iter()
                .map(|d| DirichletBc {
                    tag: d.tag.clone(),
                    field: field_by_name(&d.field).unwrap_or(Field::Ux),
                    value: d.value.to_time_function(),
                })
                .collect(),
            neumann: self
                .bc
                .neumann
                .iter()
                .map(|n| NeumannBc {
                    tag: n.tag.clone(),
                    kind: n.kind,
                    value: n.value.to_time_function(),
                })
                .collect(),
        }
    }

    /// Everything the model needs. Tag references are checked here since
    /// they need the mesh.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mesh = self.build_mesh()?;
        let mut errs = Vec::new();
        let nmat = self.materials.len();
        if let Some(e) = mesh.elements.iter().find(|e| e.material >= nmat) {
            errs.push(format!("mesh: element {} uses unknown material id {}", e.id, e.material));
        }
        let bcs = self.boundary_conditions();
        if let Err(Error::Config(e)) = bcs.validate(&mesh) {
            errs.extend(e.into_iter().map(|m| format!("bc: {m}")));
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        Ok(ModelSpec {
            mesh,
            materials: self.materials()?,
            cracks: self.cracks()?,
            contact: self.cracks.iter().map(|c| c.contact.as_ref().map(|c| c.params())).collect(),
            bcs,
            fields: self.field_set(),
            t_ref: self.t_ref.0,
            body_force: [self.body_force[0].0, self.body_force[1].0],
            temperature: self.temperature.map(|q| q.0),
            delta_s: self.delta_s,
            initial: InitialConditions {
                p: self.initial.p.0,
                t: self.initial.t.0,
            },
        })
    }
}

impl ContactSpec {
    pub fn params(&self) -> ContactParams {
        ContactParams {
            k_n: self.k_n.0,
            h_cont: self.h_cont.0,
            delta_width: self.delta_width.map(|q| q.0),
        }
    }
}
