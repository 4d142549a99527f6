//! Invariants checked over randomized inputs, plus determinism and
//! consistency properties of the solver.

mod common;

use common::checks::*;
use common::*;
use proptest::prelude::*;
use xthm::assembly::assemble_linear;
use xthm::benchmarks::{config, NAMES};
use xthm::config::{dump_config, parse_config, MeshKind, StudySpec, Q};
use xthm::contact::{contact_states, summarize, ContactParams};
use xthm::dof::{Field, NeumannKind, ThmState};
use xthm::fracture::kink_angle;
use xthm::levelset::{signed_distance, CrackGeometry};
use xthm::material::{elasticity_matrix, PlaneMode};
use xthm::mesh::build_structured_grid;
use xthm::model::Model;
use xthm::output::vtk_string;
use xthm::runner::{run, RunOptions};
use xthm::solver::{solve_stationary, solve_transient, Scheme, SolverSettings};

// ---------------------------------------------------------------------------
// shape functions and quadrature

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn shape_functions_partition_unity(xi in -1.0f64..=1.0, eta in -1.0f64..=1.0) {
        prop_assert!(partition_error([xi, eta]) < 1e-13);
    }
}

#[test]
fn gauss_legendre_integrates_monomials_exactly() {
    for n in 1..=20 {
        assert!(gauss_error(n) < 1e-12, "n = {n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_areas_sum_to_domain(nx in 1usize..30, ny in 1usize..30, w in 0.1f64..10.0, h in 0.1f64..10.0) {
        let mesh = build_structured_grid(nx, ny, w, h, [-1.0, 2.0]).unwrap();
        let total: f64 = (0..mesh.elements.len()).map(|e| mesh.element_area(e)).sum();
        prop_assert!((total - w * h).abs() < 1e-12 * w * h);
    }

    #[test]
    fn distorted_grid_areas_sum_to_domain(n in 2usize..15, amp in 0.0f64..0.2) {
        let mesh = distorted_grid(n, n, amp);
        let total: f64 = (0..mesh.elements.len()).map(|e| mesh.element_area(e)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------------------
// level sets and enrichment

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn enrichment_matches_brute_force_support_areas(
        n in 3usize..12,
        amp in 0.0f64..0.15,
        y0 in 0.05f64..0.95,
        y1 in 0.05f64..0.95,
        delta_s in 0.001f64..0.2,
    ) {
        let r = enrichment_oracle(n, amp, y0, y1, delta_s);
        prop_assert!(r.is_ok(), "{}", r.unwrap_err());
    }

    #[test]
    fn heaviside_flips_when_crack_is_reversed(
        y0 in 0.1f64..0.9, y1 in 0.1f64..0.9, x in 0.0f64..1.0, y in 0.0f64..1.0,
    ) {
        let crack = CrackGeometry::new(vec![[0.0, y0], [0.5, 0.5], [1.0, y1]], [true, true]).unwrap();
        let a = signed_distance([x, y], &crack).phi;
        prop_assume!(a.abs() > 1e-9);
        let b = signed_distance([x, y], &crack.reversed()).phi;
        prop_assert!((a + b).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn shifted_enrichment_vanishes_at_nodes(
        y0 in 0.1f64..0.9, y1 in 0.1f64..0.9, seed in any::<u64>(),
    ) {
        let err = nodal_vanishing_error(y0, y1, seed);
        prop_assume!(err.is_some());
        prop_assert!(err.unwrap() < 1e-12);
    }

    #[test]
    fn crack_jump_is_twice_enriched_interpolant(
        y0 in 0.2f64..0.8, y1 in 0.2f64..0.8, xs in 0.05f64..0.95, seed in any::<u64>(),
    ) {
        prop_assert!(jump_error(y0, y1, xs, seed) < 1e-6);
    }

    #[test]
    fn regularized_dirac_integrates_to_crack_length(
        ax in 0.2f64..0.8, ay in 0.2f64..0.8, bx in 0.2f64..0.8, by in 0.2f64..0.8,
    ) {
        prop_assume!(((bx - ax).powi(2) + (by - ay).powi(2)).sqrt() > 0.2);
        prop_assert!(dirac_error([ax, ay], [bx, by]) < 0.01);
    }
}

// ---------------------------------------------------------------------------
// patch tests and constraints

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn uniform_stress_patch(amp in 0.0f64..0.3) {
        prop_assert!(uniform_stress_patch_error(amp) < 1e-10);
    }

    #[test]
    fn linear_temperature_patch(amp in 0.0f64..0.2, lo in -100.0f64..100.0, hi in -100.0f64..100.0) {
        prop_assume!(lo.abs().max(hi.abs()) > 1e-3);
        let (e, bc) = linear_patch_error(HEAT, Field::T, solid(1e9, 0.3, PlaneMode::PlaneStrain), amp, lo, hi);
        prop_assert!(e < 1e-10 && bc < 1e-12, "{e} {bc}");
    }

    #[test]
    fn linear_pressure_patch(amp in 0.0f64..0.2, lo in 1e4f64..1e6, hi in 0.0f64..1e4) {
        let (e, bc) = linear_patch_error(FLOW, Field::P, porous(PlaneMode::PlaneStrain), amp, lo, hi);
        prop_assert!(e < 1e-10 && bc < 1e-12, "{e} {bc}");
    }
}

#[test]
fn dof_count_is_fields_times_standard_plus_enriched() {
    for fields in [MECH, HEAT, TM, THM] {
        let mesh = build_structured_grid(9, 9, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let crack = CrackGeometry::new(vec![[-0.1, 0.45], [0.6, 0.52]], [false, true]).unwrap();
        let s = with_crack(spec(mesh, porous(PlaneMode::PlaneStrain), fields), crack, None);
        let model = Model::new(s).unwrap();
        let nf = fields.fields().len();
        let ne = model.enrichment.enriched_nodes().len();
        assert!(ne > 0);
        assert_eq!(model.dofs.total_dofs, nf * (100 + ne));
    }
}

// ---------------------------------------------------------------------------
// materials and assembly

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn elasticity_matrix_is_spd(e in 1e3f64..1e12, nu in -0.99f64..0.49, stress in any::<bool>()) {
        let mode = if stress { PlaneMode::PlaneStress } else { PlaneMode::PlaneStrain };
        let d = elasticity_matrix(e, nu, mode);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(d[i][j], d[j][i]);
            }
        }
        // leading principal minors
        let m1 = d[0][0];
        let m2 = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        let m3 = m2 * d[2][2];
        prop_assert!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0);
    }

    #[test]
    fn elasticity_matrix_is_linear_in_modulus(e in 1e3f64..1e12, s in 0.01f64..100.0, nu in -0.9f64..0.49) {
        for mode in [PlaneMode::PlaneStrain, PlaneMode::PlaneStress] {
            let a = elasticity_matrix(e, nu, mode);
            let b = elasticity_matrix(s * e, nu, mode);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((b[i][j] - s * a[i][j]).abs() <= 1e-12 * (s * a[0][0]).abs());
                }
            }
        }
    }

    #[test]
    fn kink_angle_opposes_mode_two(k1 in 0.0f64..1e7, k2 in -1e7f64..1e7) {
        prop_assume!(k2.abs() > 1e-3);
        let th = kink_angle(k1, k2);
        prop_assert_eq!(th.signum(), -k2.signum());
        prop_assert!(th.abs() <= 70.5288f64.to_radians() + 1e-9);
    }
}

#[test]
fn assembled_diagonal_blocks_are_symmetric() {
    let mesh = build_structured_grid(6, 6, 1.0, 1.0, [0.0, 0.0]).unwrap();
    let crack = CrackGeometry::new(vec![[-0.1, 0.47], [0.62, 0.55]], [false, true]).unwrap();
    let s = with_crack(spec(mesh, porous(PlaneMode::PlaneStrain), THM), crack, None);
    let model = Model::new(s).unwrap();
    let ops = assemble_linear(&model);
    for values in [&ops.k, &ops.c] {
        let dense = model.pattern.to_dense(values);
        let scale = dense.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dense.len() {
            for j in 0..i {
                if model.dofs.field_of(i) != model.dofs.field_of(j) {
                    continue;
                }
                assert!((dense[i][j] - dense[j][i]).abs() <= 1e-12 * scale, "({i},{j})");
            }
        }
    }
}

#[test]
fn crack_outside_mesh_reproduces_plain_fem() {
    let build = |crack: Option<CrackGeometry>| {
        let mesh = build_structured_grid(8, 6, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let mut s = spec(mesh, solid(2e9, 0.3, PlaneMode::PlaneStrain), TM);
        if let Some(c) = crack {
            s = with_crack(s, c, None);
        }
        fix(&mut s, "bottom", Field::Ux, 0.0);
        fix(&mut s, "bottom", Field::Uy, 0.0);
        fix(&mut s, "bottom", Field::T, 10.0);
        load(&mut s, "top", NeumannKind::TractionX, 1e5);
        load(&mut s, "top", NeumannKind::HeatFlux, 50.0);
        let model = Model::new(s).unwrap();
        solve_stationary(&model, &SolverSettings::default()).unwrap().x
    };
    let plain = build(None);
    let outside = build(Some(CrackGeometry::new(vec![[2.0, 0.2], [3.0, 0.8]], [true, true]).unwrap()));
    assert_eq!(plain.len(), outside.len());
    for (a, b) in plain.iter().zip(&outside) {
        assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-12), "{a} vs {b}");
    }
}

#[test]
fn halving_penalty_doubles_penetration() {
    let penetration = |k_n: f64| {
        let mesh = build_structured_grid(6, 7, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let crack = CrackGeometry::new(vec![[-0.1, 0.5], [1.1, 0.5]], [false, false]).unwrap();
        let params = ContactParams {
            k_n,
            h_cont: 0.0,
            delta_width: None,
        };
        let mut s = with_crack(spec(mesh, solid(1e9, 0.3, PlaneMode::PlaneStrain), MECH), crack, Some(params));
        fix(&mut s, "bottom", Field::Uy, 0.0);
        fix(&mut s, "left", Field::Ux, 0.0);
        load(&mut s, "top", NeumannKind::TractionY, -1e6);
        let model = Model::new(s).unwrap();
        let st = solve_stationary(&model, &SolverSettings::default()).unwrap();
        summarize(&contact_states(&model, &st.x)).max_penetration
    };
    let ratio = penetration(5e11) / penetration(1e12);
    assert!((ratio - 2.0).abs() < 0.05 * 2.0, "ratio {ratio}");
}

// ---------------------------------------------------------------------------
// fracture quantities on the steady thermal edge crack

#[test]
fn thermal_sif_is_domain_independent_and_consistent_with_j() {
    let (path, jk) = sif_consistency();
    assert!(path < 0.03, "K_I changes by {path}");
    assert!(jk < 0.05, "J differs from K^2/E' by {jk}");
}

#[test]
fn normalized_sif_is_independent_of_modulus() {
    let cfg = steady_edge_crack();
    let a = tip_record(&cfg);
    let mut stiff = cfg.clone();
    stiff.materials[0].e = Q(2.0 * cfg.materials[0].e.0);
    let b = tip_record(&stiff);
    assert!((b.sif.k_i / a.sif.k_i - 2.0).abs() < 2e-6);
    assert!((b.f_i - a.f_i).abs() < 1e-6 * a.f_i.abs(), "{} vs {}", a.f_i, b.f_i);
}

// ---------------------------------------------------------------------------
// configuration, output and determinism

#[test]
fn shipped_configs_parse_and_round_trip() {
    for name in NAMES {
        let cfg = config(name).unwrap();
        cfg.model_spec().unwrap();
        let again = parse_config(&dump_config(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again, "{name}");
    }
    assert_eq!(config("edge_crack_thermal").unwrap().materials[0].e.0, 9e9);
}

fn vtk_sections(text: &str) -> Vec<(String, usize)> {
    text.lines()
        .filter_map(|l| {
            let w: Vec<&str> = l.split_whitespace().collect();
            match w.first() {
                Some(&("POINTS" | "CELLS" | "CELL_TYPES" | "POINT_DATA" | "CELL_DATA")) => {
                    Some((w[0].to_string(), w[1].parse().unwrap()))
                }
                _ => None,
            }
        })
        .collect()
}

#[test]
fn vtk_layout_and_zero_state() {
    let mesh = build_structured_grid(6, 6, 1.0, 1.0, [0.0, 0.0]).unwrap();
    let crack = CrackGeometry::new(vec![[-0.1, 0.47], [0.62, 0.55]], [false, true]).unwrap();
    let s = with_crack(spec(mesh, porous(PlaneMode::PlaneStrain), THM), crack, None);
    let model = Model::new(s).unwrap();
    let text = vtk_string(&model, &ThmState::zeros(&model.dofs));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert_eq!(lines[2], "ASCII");
    assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
    let sec = vtk_sections(&text);
    let names: Vec<&str> = sec.iter().map(|s| s.0.as_str()).collect();
    assert_eq!(names, ["POINTS", "CELLS", "CELL_TYPES", "POINT_DATA", "CELL_DATA"]);
    let npts = sec[0].1;
    let ncells = sec[1].1;
    let ncut = model.enrichment.cuts.len();
    assert!(ncut > 0);
    // each cut element is written as two sub-cells
    assert_eq!(ncells, 36 + ncut);
    assert_eq!(sec[2].1, ncells);
    assert_eq!(sec[3].1, npts);
    assert_eq!(sec[4].1, ncells);
    let types: Vec<&str> = lines.iter().skip_while(|l| !l.starts_with("CELL_TYPES")).skip(1).take(ncells).copied().collect();
    assert_eq!(types.iter().filter(|t| **t == "7").count(), 2 * ncut);
    assert_eq!(types.iter().filter(|t| **t == "9").count(), 36 - ncut);
    // every data block except psi is zero for a zero state
    let mut block = "";
    for l in &lines {
        if l.starts_with("VECTORS") || l.starts_with("SCALARS") || l.starts_with("TENSORS") {
            block = l.split_whitespace().nth(1).unwrap();
            continue;
        }
        if block.is_empty() || block == "psi" || l.starts_with("LOOKUP") || l.starts_with("CELL_DATA") {
            continue;
        }
        for v in l.split_whitespace() {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{block}: {l}");
        }
    }
}

#[test]
fn repeated_runs_write_identical_files() {
    let mut cfg = config("edge_crack_thermal").unwrap();
    cfg.mesh.kind = MeshKind::Structured {
        nx: 10,
        ny: 40,
        width: Q(0.5),
        height: Q(2.0),
        origin: [Q(0.0), Q(0.0)],
    };
    cfg.study = StudySpec::Transient {
        t_end: Q(2.0),
        output_times: None,
        n_outputs: Some(4),
    };
    cfg.sif.r1 = Some(Q(0.1));
    cfg.sif.r2 = Some(Q(0.2));
    let root = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("determinism");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = root.join(format!("run{k}"));
        let _ = std::fs::remove_dir_all(&dir);
        let o = run(&cfg, &RunOptions { dir: Some(dir.clone()), sifs: false }).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = o
            .files
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 2);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn time_schemes_agree_at_steady_state() {
    let solve = |scheme: Scheme| {
        let mesh = build_structured_grid(6, 6, 1.0, 1.0, [0.0, 0.0]).unwrap();
        let crack = CrackGeometry::new(vec![[-0.1, 0.5], [0.6, 0.5]], [false, true]).unwrap();
        let mut s = with_crack(spec(mesh, solid(1e9, 0.3, PlaneMode::PlaneStrain), HEAT), crack, None);
        fix(&mut s, "left", Field::T, 20.0);
        fix(&mut s, "right", Field::T, -5.0);
        load(&mut s, "top", NeumannKind::HeatFlux, 3.0);
        let model = Model::new(s).unwrap();
        let settings = SolverSettings {
            scheme,
            dt: 1e5,
            newton_tol_rel: 1e-13,
            ..SolverSettings::default()
        };
        let states = solve_transient(&model, &settings, &[1e8]).unwrap();
        let steady = solve_stationary(&model, &SolverSettings::default()).unwrap();
        (states.last().unwrap().x.clone(), steady.x)
    };
    let (be, steady) = solve(Scheme::BackwardEuler);
    let (ga, _) = solve(Scheme::GeneralizedAlpha { rho_inf: 0.5 });
    let scale = steady.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..steady.len() {
        assert!((be[i] - steady[i]).abs() < 1e-8 * scale, "BE dof {i}: {} vs {}", be[i], steady[i]);
        assert!((ga[i] - steady[i]).abs() < 1e-8 * scale, "gen-alpha dof {i}");
    }
}
