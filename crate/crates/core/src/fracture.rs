//! Stress intensity factors and the maximum hoop stress growth criterion.
//!
//! The interaction integral is evaluated in the tip frame with the domain
//! form and a plateau weight q (1 for r ≤ r1, linear to 0 at r2):
//!
//! I = ∫ (σ_ij u^a_i,1 + σ^a_ij u_i,1 − σ_ij ε^a_ij δ_1j) q_,j dA
//!   + ∫ σ^a_kk ε*_,1 q dA
//!
//! where ε* is the isotropic eigenstrain carried by temperature and pore
//! pressure: the stress is σ = Dε − s·m with s = γ(T − T_ref) + αp. The
//! trace σ^a_kk includes σ^a_33 in plane strain.

use crate::assembly::point_eval;
use crate::dof::ThmState;
use crate::error::{Error, Result};
use crate::levelset::{dot, norm, sub, update_crack, CrackGeometry};
use crate::material::{MixtureProps, PlaneMode};
use crate::model::Model;
use crate::quadrature::gauss_rule;
use crate::mesh::jacobian_from;
use crate::quadrature::shape_unchecked;
use crate::solver::GrowthDecision;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipFrame {
    pub tip: [f64; 2],
    /// x′ axis, pointing ahead of the tip.
    pub e1: [f64; 2],
    /// y′ axis.
    pub e2: [f64; 2],
    pub a: f64,
    /// +1 when the crack's positive level-set side is y′ > 0.
    pub side_sign: f64,
}

impl TipFrame {
    pub fn new(crack: &CrackGeometry, tip_index: usize) -> TipFrame {
        let (tip, e1) = crack.tip(tip_index);
        TipFrame {
            tip,
            e1,
            e2: [-e1[1], e1[0]],
            a: crack.length(),
            side_sign: if tip_index == 1 { 1.0 } else { -1.0 },
        }
    }

    pub fn to_local(&self, x: [f64; 2]) -> [f64; 2] {
        let d = sub(x, self.tip);
        [dot(d, self.e1), dot(d, self.e2)]
    }

    /// Rotates a global vector into the frame.
    pub fn vec_local(&self, v: [f64; 2]) -> [f64; 2] {
        [dot(v, self.e1), dot(v, self.e2)]
    }

    /// Rotates a global tensor into the frame: R A Rᵀ.
    pub fn tensor_local(&self, a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let r = [self.e1, self.e2];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[i][j] += r[i][k] * a[k][l] * r[j][l];
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SifResult {
    pub k_i: f64,
    pub k_ii: f64,
    /// Independent J from the domain form.
    pub j: f64,
    pub e_prime: f64,
}

impl SifResult {
    /// (K_I² + K_II²)/E′.
    pub fn j_from_k(&self) -> f64 {
        (self.k_i * self.k_i + self.k_ii * self.k_ii) / self.e_prime
    }
}

/// Elastic constants entering the asymptotic fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elastic {
    pub e: f64,
    pub nu: f64,
    pub mode: PlaneMode,
}

impl Elastic {
    pub fn of(m: &MixtureProps) -> Elastic {
        Elastic {
            e: m.e,
            nu: m.nu,
            mode: m.mode,
        }
    }

    pub fn e_prime(&self) -> f64 {
        match self.mode {
            PlaneMode::PlaneStrain => self.e / (1.0 - self.nu * self.nu),
            PlaneMode::PlaneStress => self.e,
        }
    }

    fn kappa(&self) -> f64 {
        match self.mode {
            PlaneMode::PlaneStrain => 3.0 - 4.0 * self.nu,
            PlaneMode::PlaneStress => (3.0 - self.nu) / (1.0 + self.nu),
        }
    }

    fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    /// σ_33 factor on σ_11 + σ_22 for the in-plane trace.
    fn trace_factor(&self) -> f64 {
        match self.mode {
            PlaneMode::PlaneStrain => 1.0 + self.nu,
            PlaneMode::PlaneStress => 1.0,
        }
    }
}

/// Near-tip fields for unit K in the tip frame: stress (σ11, σ22, σ12) and
/// displacement gradient ∂u_i/∂x_j.
pub fn auxiliary_fields(
    r: f64,
    theta: f64,
    mode: Mode,
    el: Elastic,
) -> Result<([f64; 3], [[f64; 2]; 2])> {
    if !(r > 0.0) {
        return Err(Error::SingularPoint(format!(
            "auxiliary fields need r > 0, got {r}"
        )));
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let (s3, c3) = (1.5 * theta).sin_cos();
    let f = 1.0 / (2.0 * std::f64::consts::PI * r).sqrt();
    let kap = el.kappa();
    let cc = 1.0 / (2.0 * el.mu() * (2.0 * std::f64::consts::PI).sqrt());
    // u = √r·g(θ); g and g′
    let (sig, g, dg) = match mode {
        Mode::I => (
            [
                f * c * (1.0 - s * s3),
                f * c * (1.0 + s * s3),
                f * c * s * c3,
            ],
            [
                cc * c * (kap - 1.0 + 2.0 * s * s),
                cc * s * (kap + 1.0 - 2.0 * c * c),
            ],
            [
                cc * (-0.5 * s * (kap - 1.0 + 2.0 * s * s) + 2.0 * s * c * c),
                cc * (0.5 * c * (kap + 1.0 - 2.0 * c * c) + 2.0 * s * s * c),
            ],
        ),
        Mode::II => (
            [
                -f * s * (2.0 + c * c3),
                f * s * c * c3,
                f * c * (1.0 - s * s3),
            ],
            [
                cc * s * (kap + 1.0 + 2.0 * c * c),
                -cc * c * (kap - 1.0 - 2.0 * s * s),
            ],
            [
                cc * (0.5 * c * (kap + 1.0 + 2.0 * c * c) - 2.0 * s * s * c),
                cc * (0.5 * s * (kap - 1.0 - 2.0 * s * s) + 2.0 * s * c * c),
            ],
        ),
    };
    let sr = r.sqrt();
    let (st, ct) = theta.sin_cos();
    let mut grad = [[0.0; 2]; 2];
    for i in 0..2 {
        let du_dr = g[i] / (2.0 * sr);
        let du_dt = sr * dg[i];
        grad[i][0] = ct * du_dr - st / r * du_dt;
        grad[i][1] = st * du_dr + ct / r * du_dt;
    }
    Ok((sig, grad))
}

pub fn sifs_from_interaction(i_mode_i: f64, i_mode_ii: f64, e_prime: f64) -> (f64, f64) {
    (0.5 * e_prime * i_mode_i, 0.5 * e_prime * i_mode_ii)
}

/// F_I = K_I / ((E/(1−ν))·α·θ₀·√(πa)).
pub fn normalized_sif(k_i: f64, e: f64, nu: f64, alpha_t: f64, theta0: f64, a: f64) -> Result<f64> {
    let den = e / (1.0 - nu) * alpha_t * theta0 * (std::f64::consts::PI * a).sqrt();
    if !(den.is_finite() && den != 0.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument(
            "normalized SIF denominator is zero".into(),
        ));
    }
    Ok(k_i / den)
}

/// Kink angle of the maximum hoop stress criterion.
pub fn kink_angle(k_i: f64, k_ii: f64) -> f64 {
    if k_ii == 0.0 {
        return 0.0;
    }
    2.0 * ((k_i - (k_i * k_i + 8.0 * k_ii * k_ii).sqrt()) / (4.0 * k_ii)).atan()
}

/// Hoop stress of the K field at (r, θ).
pub fn hoop_stress(k_i: f64, k_ii: f64, r: f64, theta: f64) -> f64 {
    let (s, c) = (0.5 * theta).sin_cos();
    1.0 / (2.0 * std::f64::consts::PI * r).sqrt() * c * (k_i * c * c - 1.5 * k_ii * 2.0 * s * c)
}

/// Returns (grow, kink angle): grow when the hoop stress at r_eval along
/// the kink direction exceeds f_t.
pub fn hoop_growth_check(k_i: f64, k_ii: f64, f_t: f64, r_eval: f64) -> (bool, f64) {
    let th = kink_angle(k_i, k_ii);
    (hoop_stress(k_i, k_ii, r_eval, th) > f_t, th)
}

/// Options of the domain integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainOptions {
    /// Inner and outer radii; defaults 1.5h and 3h of the tip element.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    /// Gauss order on elements without enrichment.
    pub order: usize,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions {
            r1: None,
            r2: None,
            order: 8,
        }
    }
}

/// Actual-state quantities in the tip frame at one point.
struct Sample {
    pos: [f64; 2],
    grad_u: [[f64; 2]; 2],
    sig: [f64; 3],
    /// Eigenstrain and its x′ derivative (isotropic).
    es: f64,
    des1: f64,
    sig33: f64,
}

fn sample(model: &Model, state: &ThmState, frame: &TipFrame, e: usize, xi: [f64; 2], side: Option<f64>) -> Sample {
    let pe = point_eval(model, state, e, xi, side);
    let mat = model.material(e);
    let t_ref = model.spec.t_ref;
    let heat = model.dofs.fields.heat;
    let flow = model.dofs.fields.flow;
    let th = if heat { pe.t - t_ref } else { model.imposed_dtheta() };
    let p = if flow { pe.p } else { 0.0 };
    let s = mat.gamma * th + mat.alpha * p;
    let ds = [
        (if heat { mat.gamma * pe.grad_t[0] } else { 0.0 }) + (if flow { mat.alpha * pe.grad_p[0] } else { 0.0 }),
        (if heat { mat.gamma * pe.grad_t[1] } else { 0.0 }) + (if flow { mat.alpha * pe.grad_p[1] } else { 0.0 }),
    ];
    let cfac = match mat.mode {
        PlaneMode::PlaneStrain => 1.0 / (3.0 * mat.kt),
        PlaneMode::PlaneStress => (1.0 - mat.nu) / mat.e,
    };
    let eps = pe.strain();
    let d = &mat.d;
    let sg = [
        d[0][0] * eps[0] + d[0][1] * eps[1] + d[0][2] * eps[2] - s,
        d[1][0] * eps[0] + d[1][1] * eps[1] + d[1][2] * eps[2] - s,
        d[2][0] * eps[0] + d[2][1] * eps[1] + d[2][2] * eps[2],
    ];
    // σ33 in plane strain: λ(ε11+ε22) − 3K e*, with e* = s/(3K)
    let sig33 = match mat.mode {
        PlaneMode::PlaneStrain => {
            let lam = mat.e * mat.nu / ((1.0 + mat.nu) * (1.0 - 2.0 * mat.nu));
            lam * (eps[0] + eps[1]) - s
        }
        PlaneMode::PlaneStress => 0.0,
    };
    let st = frame.tensor_local([[sg[0], sg[2]], [sg[2], sg[1]]]);
    let gu = frame.tensor_local(pe.grad_u);
    let ds_local = frame.vec_local(ds);
    Sample {
        pos: frame.to_local(pe.x),
        grad_u: gu,
        sig: [st[0][0], st[1][1], st[0][1]],
        es: cfac * s,
        des1: cfac * ds_local[0],
        sig33,
    }
}

fn polar(frame: &TipFrame, model: &Model, crack: usize, pos: [f64; 2], x: [f64; 2]) -> (f64, f64) {
    let r = norm(pos);
    let mut th = pos[1].atan2(pos[0]);
    if th.abs() > 0.5 * std::f64::consts::PI {
        let phi = model.enrichment.phi(crack, x);
        let sgn = if phi >= 0.0 { frame.side_sign } else { -frame.side_sign };
        th = sgn * th.abs();
    }
    (r, th)
}

fn tip_size(model: &Model, frame: &TipFrame) -> f64 {
    match model.locator.locate(model.mesh(), frame.tip) {
        Some((e, _)) => model.mesh().element_size(e),
        None => model.mesh().min_element_size(),
    }
}

fn radii(model: &Model, frame: &TipFrame, opts: &DomainOptions) -> Result<(f64, f64)> {
    let h = tip_size(model, frame);
    let r1 = opts.r1.unwrap_or(1.5 * h);
    let r2 = opts.r2.unwrap_or(3.0 * h);
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::InvalidArgument("domain radii need 0 < r1 < r2".into()));
    }
    for k in 0..64 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
        let x = [
            frame.tip[0] + r2 * (a.cos() * frame.e1[0] + a.sin() * frame.e2[0]),
            frame.tip[1] + r2 * (a.cos() * frame.e1[1] + a.sin() * frame.e2[1]),
        ];
        if model.locator.locate(model.mesh(), x).is_none() {
            return Err(Error::IntegrationDomain(format!(
                "integration disk of radius {r2} around ({}, {}) leaves the mesh",
                frame.tip[0], frame.tip[1]
            )));
        }
    }
    Ok((r1, r2))
}

/// Quadrature over the disk r < r2: (element, ξ, dA) triples.
fn disk_points(model: &Model, frame: &TipFrame, r2: f64, order: usize) -> Result<Vec<(usize, [f64; 2], f64)>> {
    let mesh = model.mesh();
    let low = gauss_rule(order)?;
    let high = gauss_rule(20)?;
    let mut out = Vec::new();
    for e in 0..mesh.elements.len() {
        let c = mesh.element_coords(e);
        let cen = mesh.element_centroid(e);
        let rad = c.iter().map(|p| norm(sub(*p, cen))).fold(0.0, f64::max);
        if norm(sub(cen, frame.tip)) > r2 + rad {
            continue;
        }
        let rule = if model.contexts[e].nb > 4 || model.enrichment.cuts.contains_key(&e) {
            &high
        } else {
            &low
        };
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let (n, dn) = shape_unchecked(*xi);
            let jac = jacobian_from(&c, &n, &dn);
            if norm(sub(jac.x, frame.tip)) < r2 {
                out.push((e, *xi, w * jac.det));
            }
        }
    }
    Ok(out)
}

fn q_weight(r: f64, r1: f64, r2: f64) -> (f64, f64) {
    if r <= r1 {
        (1.0, 0.0)
    } else if r < r2 {
        ((r2 - r) / (r2 - r1), -1.0 / (r2 - r1))
    } else {
        (0.0, 0.0)
    }
}

/// Domain interaction integral for one auxiliary mode.
pub fn interaction_integral(
    model: &Model,
    state: &ThmState,
    crack: usize,
    tip_index: usize,
    mode: Mode,
    opts: &DomainOptions,
) -> Result<f64> {
    let frame = TipFrame::new(&model.spec.cracks[crack], tip_index);
    let (r1, r2) = radii(model, &frame, opts)?;
    let mut total = 0.0;
    for (e, xi, da) in disk_points(model, &frame, r2, opts.order)? {
        let s = sample(model, state, &frame, e, xi, None);
        let xg = {
            let (n, dn) = shape_unchecked(xi);
            jacobian_from(&model.mesh().element_coords(e), &n, &dn).x
        };
        let (r, th) = polar(&frame, model, crack, s.pos, xg);
        if r <= 0.0 {
            continue;
        }
        let el = Elastic::of(model.material(e));
        let (sa, ga) = auxiliary_fields(r, th, mode, el)?;
        let (q, dq_dr) = q_weight(r, r1, r2);
        let dq = [dq_dr * s.pos[0] / r, dq_dr * s.pos[1] / r];
        let sig = [[s.sig[0], s.sig[2]], [s.sig[2], s.sig[1]]];
        let siga = [[sa[0], sa[2]], [sa[2], sa[1]]];
        let eps_a = [
            [ga[0][0], 0.5 * (ga[0][1] + ga[1][0])],
            [0.5 * (ga[0][1] + ga[1][0]), ga[1][1]],
        ];
        let mut w12 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                w12 += sig[i][j] * eps_a[i][j];
            }
        }
        let mut integrand = 0.0;
        for j in 0..2 {
            let mut v = 0.0;
            for i in 0..2 {
                v += sig[i][j] * ga[i][0] + siga[i][j] * s.grad_u[i][0];
            }
            if j == 0 {
                v -= w12;
            }
            integrand += v * dq[j];
        }
        let trace_a = el.trace_factor() * (sa[0] + sa[1]);
        integrand += trace_a * s.des1 * q;
        total += integrand * da;
    }
    Ok(total)
}

/// Domain-form J of the actual field (with eigenstrain terms).
pub fn j_integral(model: &Model, state: &ThmState, crack: usize, tip_index: usize, opts: &DomainOptions) -> Result<f64> {
    let frame = TipFrame::new(&model.spec.cracks[crack], tip_index);
    let (r1, r2) = radii(model, &frame, opts)?;
    let mut total = 0.0;
    for (e, xi, da) in disk_points(model, &frame, r2, opts.order)? {
        let s = sample(model, state, &frame, e, xi, None);
        let r = norm(s.pos);
        if r <= 0.0 {
            continue;
        }
        let (q, dq_dr) = q_weight(r, r1, r2);
        let dq = [dq_dr * s.pos[0] / r, dq_dr * s.pos[1] / r];
        let sig = [[s.sig[0], s.sig[2]], [s.sig[2], s.sig[1]]];
        let eps = [
            [s.grad_u[0][0], 0.5 * (s.grad_u[0][1] + s.grad_u[1][0])],
            [0.5 * (s.grad_u[0][1] + s.grad_u[1][0]), s.grad_u[1][1]],
        ];
        let mat = model.material(e);
        // W = ½σ:(ε − ε*) including the out-of-plane part in plane strain
        let mut w = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let em = eps[i][j] - if i == j { s.es } else { 0.0 };
                w += 0.5 * sig[i][j] * em;
            }
        }
        let trace = match mat.mode {
            PlaneMode::PlaneStrain => {
                w += 0.5 * s.sig33 * (-s.es);
                s.sig[0] + s.sig[1] + s.sig33
            }
            PlaneMode::PlaneStress => s.sig[0] + s.sig[1],
        };
        let mut integrand = 0.0;
        for j in 0..2 {
            let mut v = 0.0;
            for i in 0..2 {
                v += sig[i][j] * s.grad_u[i][0];
            }
            if j == 0 {
                v -= w;
            }
            integrand += v * dq[j];
        }
        integrand += trace * s.des1 * q;
        total += integrand * da;
    }
    Ok(total)
}

/// Contour form of the interaction integral on a circle of radius `rc`
/// (no eigenstrain area term), sampled at `n` points.
pub fn interaction_contour(
    model: &Model,
    state: &ThmState,
    crack: usize,
    tip_index: usize,
    mode: Mode,
    rc: f64,
    n: usize,
) -> Result<f64> {
    let frame = TipFrame::new(&model.spec.cracks[crack], tip_index);
    let pi = std::f64::consts::PI;
    let mut total = 0.0;
    for k in 0..n {
        let th = -pi + (k as f64 + 0.5) * 2.0 * pi / n as f64;
        let (st, ct) = th.sin_cos();
        let x = [
            frame.tip[0] + rc * (ct * frame.e1[0] + st * frame.e2[0]),
            frame.tip[1] + rc * (ct * frame.e1[1] + st * frame.e2[1]),
        ];
        let (e, xi) = model
            .locator
            .locate(model.mesh(), x)
            .ok_or(Error::IntegrationDomain(format!("contour point ({}, {}) outside mesh", x[0], x[1])))?;
        let side = if th.abs() > 0.5 * pi {
            Some(if th >= 0.0 { frame.side_sign } else { -frame.side_sign } * 1.0)
        } else {
            None
        };
        let s = sample(model, state, &frame, e, xi, side);
        let el = Elastic::of(model.material(e));
        let (sa, ga) = auxiliary_fields(rc, th, mode, el)?;
        let nrm = [ct, st];
        let sig = [[s.sig[0], s.sig[2]], [s.sig[2], s.sig[1]]];
        let siga = [[sa[0], sa[2]], [sa[2], sa[1]]];
        let eps_a = [
            [ga[0][0], 0.5 * (ga[0][1] + ga[1][0])],
            [0.5 * (ga[0][1] + ga[1][0]), ga[1][1]],
        ];
        let mut w12 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                w12 += sig[i][j] * eps_a[i][j];
            }
        }
        let mut v = w12 * nrm[0];
        for i in 0..2 {
            for j in 0..2 {
                v -= (sig[i][j] * ga[i][0] + siga[i][j] * s.grad_u[i][0]) * nrm[j];
            }
        }
        total += v * rc * 2.0 * pi / n as f64;
    }
    Ok(total)
}

/// K_I, K_II from the domain interaction integral plus an independent J.
pub fn compute_sifs(model: &Model, state: &ThmState, crack: usize, tip_index: usize, opts: &DomainOptions) -> Result<SifResult> {
    let c = &model.spec.cracks[crack];
    if !c.tip_active[tip_index] {
        return Err(Error::InvalidArgument(format!(
            "tip {tip_index} of crack {crack} is not active"
        )));
    }
    let frame = TipFrame::new(c, tip_index);
    let e = model
        .locator
        .locate(model.mesh(), frame.tip)
        .ok_or(Error::OutOfDomain(frame.tip[0], frame.tip[1]))?
        .0;
    let ep = Elastic::of(model.material(e)).e_prime();
    let i1 = interaction_integral(model, state, crack, tip_index, Mode::I, opts)?;
    let i2 = interaction_integral(model, state, crack, tip_index, Mode::II, opts)?;
    let (k_i, k_ii) = sifs_from_interaction(i1, i2, ep);
    let j = j_integral(model, state, crack, tip_index, opts)?;
    Ok(SifResult {
        k_i,
        k_ii,
        j,
        e_prime: ep,
    })
}

/// Growth settings of the hoop criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSettings {
    pub delta_a: f64,
    /// Hoop stress evaluation radius; half the tip element size if absent.
    pub r_eval: Option<f64>,
    /// Tensile strength; the tip material's f_t if absent.
    pub f_t: Option<f64>,
    pub domain: DomainOptions,
}

/// Checks every active tip and extends the cracks that satisfy the
/// criterion. A tip leaving the mesh stops growth.
pub fn growth_step(model: &Model, state: &ThmState, settings: &GrowthSettings) -> Result<(GrowthDecision, Vec<(usize, usize, SifResult, f64, bool)>)> {
    let mut cracks = model.spec.cracks.clone();
    let mut any = false;
    let mut report = Vec::new();
    for (ci, c) in model.spec.cracks.iter().enumerate() {
        for tip in 0..2 {
            if !c.tip_active[tip] {
                continue;
            }
            let sif = compute_sifs(model, state, ci, tip, &settings.domain)?;
            let frame = TipFrame::new(c, tip);
            let (e, _) = model
                .locator
                .locate(model.mesh(), frame.tip)
                .ok_or(Error::OutOfDomain(frame.tip[0], frame.tip[1]))?;
            let f_t = settings
                .f_t
                .or(model.material(e).f_t)
                .ok_or_else(|| Error::config("growth needs a tensile strength f_t"))?;
            let r_eval = settings
                .r_eval
                .unwrap_or(0.5 * model.mesh().element_size(e));
            let (grow, angle) = hoop_growth_check(sif.k_i, sif.k_ii, f_t, r_eval);
            report.push((ci, tip, sif, angle, grow));
            if grow {
                let next = update_crack(&cracks[ci], tip, angle, settings.delta_a)?;
                let (new_tip, _) = next.tip(tip);
                if model.locator.locate(model.mesh(), new_tip).is_none() {
                    return Ok((
                        GrowthDecision::Stop(format!(
                            "crack {ci} reached the boundary at ({:.6}, {:.6})",
                            new_tip[0], new_tip[1]
                        )),
                        report,
                    ));
                }
                cracks[ci] = next;
                any = true;
            }
        }
    }
    Ok((if any { GrowthDecision::Grow(cracks) } else { GrowthDecision::Keep }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el() -> Elastic {
        Elastic {
            e: 9e9,
            nu: 0.3,
            mode: PlaneMode::PlaneStrain,
        }
    }

    #[test]
    fn mode_i_on_symmetry_line() {
        let (s, _) = auxiliary_fields(0.01, 0.0, Mode::I, el()).unwrap();
        let k = 1.0 / (2.0 * std::f64::consts::PI * 0.01).sqrt();
        assert!((s[1] - k).abs() < 1e-12 * k);
        assert!(s[2].abs() < 1e-12 * k);
        let (s, _) = auxiliary_fields(0.01, 0.0, Mode::II, el()).unwrap();
        assert!(s[1].abs() < 1e-12 * k);
    }

    #[test]
    fn inverse_sqrt_scaling_and_singularity() {
        let (a, _) = auxiliary_fields(0.01, 0.7, Mode::I, el()).unwrap();
        let (b, _) = auxiliary_fields(0.04, 0.7, Mode::I, el()).unwrap();
        for k in 0..3 {
            assert!((a[k] / 2.0 - b[k]).abs() < 1e-12 * a[k].abs().max(1.0));
        }
        assert!(matches!(
            auxiliary_fields(0.0, 0.0, Mode::I, el()),
            Err(Error::SingularPoint(_))
        ));
    }

    #[test]
    fn kink_angles() {
        assert_eq!(kink_angle(1.0, 0.0), 0.0);
        let a = kink_angle(0.0, 1.0).to_degrees();
        assert!((a + 70.5288).abs() < 1e-3);
        assert!(kink_angle(1.0, 0.3) < 0.0);
        assert!(kink_angle(1.0, -0.3) > 0.0);
    }

    #[test]
    fn sif_conversion() {
        let ep = 2e10;
        let (k1, k2) = sifs_from_interaction(2.0 / ep, 0.0, ep);
        assert!((k1 - 1.0).abs() < 1e-12 && k2 == 0.0);
        let f = normalized_sif(2.0, 1.0, 0.5, 1.0, 1.0, 1.0 / std::f64::consts::PI).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!(normalized_sif(1.0, 1.0, 0.3, 1.0, 0.0, 1.0).is_err());
    }
}
