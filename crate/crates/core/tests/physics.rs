mod common;

use common::*;
use std::f64::consts::PI;
use xthm::assembly::point_eval;
use xthm::contact::{contact_states, summarize, ContactParams};
use xthm::dof::{Field, NeumannKind};
use xthm::fracture::{auxiliary_fields, compute_sifs, DomainOptions, Elastic, Mode};
use xthm::levelset::CrackGeometry;
use xthm::material::PlaneMode;
use xthm::mesh::build_structured_grid;
use xthm::model::Model;
use xthm::solver::{solve_stationary, Scheme, Solver, SolverSettings};

fn nodal(model: &Model, s: &xthm::dof::ThmState, n: usize, f: Field) -> f64 {
    s.nodal(&model.dofs, n, f)
}

#[test]
fn uniaxial_patch_is_exact() {
    let mut mesh = build_structured_grid(5, 4, 1.0, 1.0, [0.0, 0.0]).unwrap();
    // distort interior nodes
    for n in mesh.nodes.iter_mut() {
        let [x, y] = n.coords;
        if x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0 {
            n.coords = [x + 0.03 * (7.0 * y).sin(), y + 0.02 * (5.0 * x).cos()];
        }
    }
    let mat = solid(1e9, 0.25, PlaneMode::PlaneStrain);
    let mut s = spec(mesh, mat, MECH);
    fix(&mut s, "left", Field::Ux, 0.0);
    fix(&mut s, "bottom", Field::Uy, 0.0);
    load(&mut s, "right", NeumannKind::TractionX, 1e6);
    let model = Model::new(s).unwrap();
    let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
    let (e, nu) = (1e9, 0.25);
    let exx = 1e6 * (1.0 - nu * nu) / e;
    let eyy = -1e6 * nu * (1.0 + nu) / e;
    for n in 0..model.mesh().nodes.len() {
        let [x, y] = model.mesh().xy(n);
        assert!((nodal(&model, &st, n, Field::Ux) - exx * x).abs() < 1e-12);
        assert!((nodal(&model, &st, n, Field::Uy) - eyy * y).abs() < 1e-12);
    }
}

#[test]
fn free_thermal_expansion() {
    for (mode, factor) in [(PlaneMode::PlaneStrain, 1.3), (PlaneMode::PlaneStress, 1.0)] {
        let mesh = build_structured_grid(4, 4, 2.0, 1.0, [0.0, 0.0]).unwrap();
        let mat = solid(5e9, 0.3, mode);
        let alpha = mat.alpha_lin();
        let mut s = spec(mesh, mat, TM);
        fix(&mut s, "left", Field::Ux, 0.0);
        fix(&mut s, "bottom", Field::Uy, 0.0);
        for t in ["left", "right", "top", "bottom"] {
            fix(&mut s, t, Field::T, 40.0);
        }
        let model = Model::new(s).unwrap();
        let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
        let n = model.mesh().nodes.len() - 1;
        let ux = nodal(&model, &st, n, Field::Ux);
        let expect = factor * alpha * 40.0 * 2.0;
        assert!((ux - expect).abs() < 1e-9 * expect, "{mode:?}: {ux} vs {expect}");
    }
}

#[test]
fn steady_conduction_with_flux() {
    let mesh = build_structured_grid(10, 2, 1.0, 0.2, [0.0, 0.0]).unwrap();
    let mut mat = solid(1e9, 0.3, PlaneMode::PlaneStrain);
    mat.lambda_eff = 4.0;
    let mut s = spec(mesh, mat, HEAT);
    fix(&mut s, "left", Field::T, 10.0);
    load(&mut s, "right", NeumannKind::HeatFlux, 8.0);
    let model = Model::new(s).unwrap();
    let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
    for n in 0..model.mesh().nodes.len() {
        let x = model.mesh().xy(n)[0];
        assert!((nodal(&model, &st, n, Field::T) - (10.0 + 2.0 * x)).abs() < 1e-10);
    }
}

/// T(0,t) = 1, insulated end, T(x,0) = 0, unit diffusivity on [0, 1].
fn conduction_series(x: f64, t: f64) -> f64 {
    let mut s = 1.0;
    for k in 0..200 {
        let m = (2 * k + 1) as f64 * PI / 2.0;
        s -= 2.0 / m * (m * x).sin() * (-m * m * t).exp();
    }
    s
}

fn transient_bar(scheme: Scheme, dt: f64) -> f64 {
    let mesh = build_structured_grid(100, 1, 1.0, 0.01, [0.0, 0.0]).unwrap();
    let mut mat = solid(1e9, 0.3, PlaneMode::PlaneStrain);
    mat.lambda_eff = 1.0;
    mat.rhoc_eff = 1.0;
    let mut s = spec(mesh, mat, HEAT);
    fix(&mut s, "left", Field::T, 1.0);
    let model = Model::new(s).unwrap();
    let settings = SolverSettings {
        scheme,
        dt,
        dt_min: dt * 1e-3,
        ..Default::default()
    };
    let mut solver = Solver::new(&model, settings).unwrap();
    let out = solver.solve_transient(model.initial_state(), &[0.1], |_| Ok(())).unwrap();
    let mut err: f64 = 0.0;
    for n in 0..101 {
        let x = model.mesh().xy(n)[0];
        err = err.max((nodal(&model, &out[0], n, Field::T) - conduction_series(x, 0.1)).abs());
    }
    err
}

#[test]
fn transient_conduction_matches_series() {
    let be = transient_bar(Scheme::BackwardEuler, 1e-3);
    assert!(be < 5e-3, "backward Euler error {be}");
    let ga = transient_bar(Scheme::GeneralizedAlpha { rho_inf: 0.5 }, 2e-3);
    assert!(ga < 5e-3, "generalized-alpha error {ga}");
}

#[test]
fn through_crack_separates_blocks() {
    let mesh = build_structured_grid(6, 7, 1.0, 1.0, [0.0, 0.0]).unwrap();
    let mat = solid(1e9, 0.3, PlaneMode::PlaneStrain);
    let crack = CrackGeometry::new(vec![[-0.1, 0.5], [1.1, 0.5]], [false, false]).unwrap();
    let mut s = with_crack(spec(mesh, mat, MECH), crack, None);
    fix(&mut s, "bottom", Field::Ux, 0.0);
    fix(&mut s, "bottom", Field::Uy, 0.0);
    fix(&mut s, "top", Field::Ux, 0.0);
    fix(&mut s, "top", Field::Uy, 0.01);
    let model = Model::new(s).unwrap();
    let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
    for (x, y, uy) in [(0.3, 0.52, 0.01), (0.7, 0.48, 0.0), (0.5, 0.9, 0.01), (0.1, 0.1, 0.0)] {
        let (e, xi) = model.locator.locate(model.mesh(), [x, y]).unwrap();
        let pe = point_eval(&model, &st, e, xi, None);
        assert!((pe.u[1] - uy).abs() < 1e-12, "({x}, {y}): {}", pe.u[1]);
        assert!(pe.strain().iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn contact_transmits_pressure() {
    let mesh = build_structured_grid(6, 7, 1.0, 1.0, [0.0, 0.0]).unwrap();
    let mat = solid(1e9, 0.3, PlaneMode::PlaneStrain);
    let crack = CrackGeometry::new(vec![[-0.1, 0.5], [1.1, 0.5]], [false, false]).unwrap();
    let params = ContactParams {
        k_n: 1e12,
        h_cont: 0.0,
        delta_width: None,
    };
    let mut s = with_crack(spec(mesh, mat, MECH), crack, Some(params));
    fix(&mut s, "bottom", Field::Uy, 0.0);
    fix(&mut s, "left", Field::Ux, 0.0);
    load(&mut s, "top", NeumannKind::TractionY, -1e6);
    let model = Model::new(s).unwrap();
    let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
    let sum = summarize(&contact_states(&model, &st.x));
    assert!((sum.active_length - 1.0).abs() < 1e-4, "{sum:?}");
    assert!((sum.normal_force - 1e6).abs() < 1e-3 * 1e6, "{sum:?}");
    assert!((sum.max_penetration - 1e-6).abs() < 1e-2 * 1e-6, "{sum:?}");
}

fn k_field_problem(k1: f64, k2: f64, opts: DomainOptions) -> (f64, f64, f64, f64) {
    let n = 41;
    let mut mesh = build_structured_grid(n, n, 2.0, 2.0, [-1.0, -1.0]).unwrap();
    let el = Elastic {
        e: 1e9,
        nu: 0.3,
        mode: PlaneMode::PlaneStrain,
    };
    let mat = solid(el.e, el.nu, el.mode);
    let boundary: Vec<usize> = {
        let mut b: Vec<usize> = ["left", "right", "top", "bottom"]
            .iter()
            .flat_map(|t| mesh.tags[*t].nodes.clone())
            .collect();
        b.sort();
        b.dedup();
        b
    };
    let mut values = Vec::new();
    for &node in &boundary {
        let [x, y] = mesh.xy(node);
        let name = format!("n{node}");
        mesh.tag_nodes_where(&name, |p| p == [x, y]);
        // displacement of the K field
        let r = (x * x + y * y).sqrt();
        let th = y.atan2(x);
        let u = k_displacement(r, th, k1, k2, el);
        values.push((name, u));
    }
    let crack = CrackGeometry::new(vec![[-1.5, 0.0], [0.0, 0.0]], [false, true]).unwrap();
    let mut s = with_crack(spec(mesh, mat, MECH), crack, None);
    for (name, u) in values {
        fix(&mut s, &name, Field::Ux, u[0]);
        fix(&mut s, &name, Field::Uy, u[1]);
    }
    let model = Model::new(s).unwrap();
    let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
    let r = compute_sifs(&model, &st, 0, 1, &opts).unwrap();
    (r.k_i, r.k_ii, r.j, r.j_from_k())
}

fn k_displacement(r: f64, th: f64, k1: f64, k2: f64, el: Elastic) -> [f64; 2] {
    let mu = el.e / (2.0 * (1.0 + el.nu));
    let kap = 3.0 - 4.0 * el.nu;
    let (s, c) = (0.5 * th).sin_cos();
    let f = (r / (2.0 * PI)).sqrt() / (2.0 * mu);
    [
        f * (k1 * c * (kap - 1.0 + 2.0 * s * s) + k2 * s * (kap + 1.0 + 2.0 * c * c)),
        f * (k1 * s * (kap + 1.0 - 2.0 * c * c) - k2 * c * (kap - 1.0 - 2.0 * s * s)),
    ]
}

#[test]
fn auxiliary_displacement_gradient_matches_finite_difference() {
    let el = Elastic {
        e: 2e9,
        nu: 0.3,
        mode: PlaneMode::PlaneStrain,
    };
    for (mode, k) in [(Mode::I, [1.0, 0.0]), (Mode::II, [0.0, 1.0])] {
        for &(x, y) in &[(0.3, 0.2), (-0.2, 0.1), (0.1, -0.4), (-0.3, -0.05)] {
            let r: f64 = (x * x + y * y) as f64;
            let (_, g) = auxiliary_fields(r.sqrt(), (y as f64).atan2(x), mode, el).unwrap();
            let h = 1e-6;
            let u = |x: f64, y: f64| k_displacement((x * x + y * y).sqrt(), y.atan2(x), k[0], k[1], el);
            for j in 0..2 {
                let (dx, dy) = if j == 0 { (h, 0.0) } else { (0.0, h) };
                let up = u(x + dx, y + dy);
                let um = u(x - dx, y - dy);
                for i in 0..2 {
                    let fd = (up[i] - um[i]) / (2.0 * h);
                    assert!((fd - g[i][j]).abs() < 1e-6 * g[i][j].abs().max(1e-10), "{mode:?} {i}{j}: {fd} vs {}", g[i][j]);
                }
            }
        }
    }
}

#[test]
fn auxiliary_stress_follows_hooke() {
    for mode_ in [PlaneMode::PlaneStrain, PlaneMode::PlaneStress] {
        let el = Elastic {
            e: 2e9,
            nu: 0.3,
            mode: mode_,
        };
        let d = xthm::material::elasticity_matrix(el.e, el.nu, mode_);
        for mode in [Mode::I, Mode::II] {
            for th in [-2.5, -1.0, 0.3, 1.7, 3.0] {
                let (s, g) = auxiliary_fields(0.2, th, mode, el).unwrap();
                let eps = [g[0][0], g[1][1], g[0][1] + g[1][0]];
                for i in 0..3 {
                    let h: f64 = (0..3).map(|j| d[i][j] * eps[j]).sum();
                    assert!((h - s[i]).abs() < 1e-9 * s.iter().map(|v| v.abs()).fold(0.0, f64::max));
                }
            }
        }
    }
}

#[test]
fn interaction_integral_recovers_imposed_k() {
    let opts = DomainOptions {
        r1: Some(0.3),
        r2: Some(0.6),
        order: 8,
    };
    let (k1, k2, j, jk) = k_field_problem(1e6, 0.0, opts);
    assert!((k1 - 1e6).abs() < 0.03e6, "K_I = {k1}");
    assert!(k2.abs() < 0.01e6, "K_II = {k2}");
    assert!((j - jk).abs() < 0.05 * jk);
    let (k1, k2, _, _) = k_field_problem(0.5e6, 1e6, opts);
    assert!((k1 - 0.5e6).abs() < 0.03e6, "K_I = {k1}");
    assert!((k2 - 1e6).abs() < 0.03e6, "K_II = {k2}");
}

#[test]
fn default_radii_are_reasonable() {
    let (k1, _, _, _) = k_field_problem(1e6, 0.0, DomainOptions::default());
    assert!((k1 - 1e6).abs() < 0.1e6, "K_I = {k1}");
}
