mod common;

use boltseq::linalg::Cholesky;
use boltseq::model::{build_full_stiffness, build_layout, ModelParams, ReducedModel, HOLE_COUNT};
use boltseq::solver::solve_linear;
use boltseq::Model;
use rand::Rng;

use common::*;

fn model() -> Model {
    Model::build(&ModelParams::default()).unwrap()
}

#[test]
fn unit_loads_match_full_plate() {
    let params = ModelParams::default();
    let m = model();
    let loads: Vec<Vec<f64>> = (0..HOLE_COUNT)
        .map(|j| (0..HOLE_COUNT).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let full = full_plate_response(&params, &loads);
    for (j, (f, u_full)) in loads.iter().zip(&full).enumerate() {
        let u = solve_linear(m.kc(), f).unwrap();
        let scale = u_full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max_abs_diff(&u, u_full) <= 1e-9 * scale, "column {j}");
    }
}

#[test]
fn random_loads_match_full_plate_on_other_grids() {
    let mut rng = rng(11);
    for (k_edge, k_ground) in [(50.0, 3.0), (3000.0, 0.5)] {
        let params = ModelParams {
            k_edge,
            k_ground,
            ..ModelParams::default()
        };
        let m = Model::build(&params).unwrap();
        let loads: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..HOLE_COUNT).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for (f, u_full) in loads.iter().zip(full_plate_response(&params, &loads)) {
            let u = solve_linear(m.kc(), f).unwrap();
            let scale = u_full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(max_abs_diff(&u, &u_full) <= 1e-9 * scale);
        }
    }
}

#[test]
fn reduced_stiffness_is_mirror_symmetric() {
    let m = model();
    let layout = m.layout();
    let kc = m.kc();
    let scale = kc.max_abs();
    for i in 0..HOLE_COUNT {
        for j in 0..HOLE_COUNT {
            let d = kc[(i, j)] - kc[(layout.mirror(i), layout.mirror(j))];
            assert!(d.abs() <= 1e-10 * scale, "({i}, {j})");
        }
    }
}

#[test]
fn full_and_reduced_are_positive_definite() {
    let p = ModelParams::default();
    let full = build_full_stiffness(&build_layout(), p.k_edge, p.k_ground).unwrap();
    assert_eq!(full.k.rows(), p.grid.nx * p.grid.ny);
    assert!(Cholesky::factor(&full.k).unwrap().min_pivot() > 0.0);
    let kc = model().kc().clone();
    assert_eq!(kc.asymmetry(), 0.0);
    assert!(Cholesky::factor(&kc).unwrap().min_pivot() > 0.0);
}

#[test]
fn stiffer_edges_spread_load_further() {
    let soft = Model::build(&ModelParams {
        k_edge: 100.0,
        ..ModelParams::default()
    })
    .unwrap();
    let stiff = model();
    let mut f = vec![0.0; HOLE_COUNT];
    f[10] = 1.0;
    let ratio = |m: &Model| {
        let u = solve_linear(m.kc(), &f).unwrap();
        u[13] / u[10]
    };
    assert!(ratio(&stiff) > ratio(&soft));
}

#[test]
fn single_precision_model_tracks_double() {
    let p = ModelParams::default();
    let m64 = model();
    let m32 = ReducedModel::<f32>::build(&p).unwrap();
    let scale = m64.kc().max_abs();
    for i in 0..HOLE_COUNT {
        for j in 0..HOLE_COUNT {
            let d = m32.kc()[(i, j)] as f64 - m64.kc()[(i, j)];
            assert!(d.abs() <= 1e-4 * scale);
        }
    }
}

#[test]
fn layout_geometry() {
    let l = build_layout();
    assert_eq!(l.len(), HOLE_COUNT);
    assert_eq!(l.position(0), (10.0, 20.0));
    assert_eq!(l.position(39), (580.0, 40.0));
    assert_eq!(l.mirror(0), 19);
    assert_eq!(l.mirror(21), 38);
    assert_eq!(l.mirror_axis(), 295.0);
    for i in 0..HOLE_COUNT {
        assert_eq!(l.mirror(l.mirror(i)), i);
        let (x, y) = l.position(i);
        assert_eq!(l.position(l.mirror(i)), (590.0 - x, y));
        assert_eq!(l.block_of(i), (i % 20) / 4);
    }
}

#[test]
fn rejects_bad_parameters() {
    for p in [
        ModelParams {
            k_edge: 0.0,
            ..ModelParams::default()
        },
        ModelParams {
            k_ground: -1.0,
            ..ModelParams::default()
        },
        ModelParams {
            k_f: 0.0,
            ..ModelParams::default()
        },
    ] {
        assert!(Model::build(&p).is_err());
    }
}
