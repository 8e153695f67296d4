//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use boltseq::model::{HoleLayout, ModelParams};
use boltseq::{Matrix, Qp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense Gaussian elimination with partial pivoting; `b` holds one
/// right-hand side per column.
pub fn gauss_solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut b: Vec<Vec<f64>> = b.to_vec();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            if f == 0.0 {
                continue;
            }
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            for k in 0..m {
                b[r][k] -= f * b[c][k];
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for r in (0..n).rev() {
        for k in 0..m {
            let s: f64 = ((r + 1)..n).map(|j| a[r][j] * x[j][k]).sum();
            x[r][k] = (b[r][k] - s) / a[r][r];
        }
    }
    x
}

/// Full plate stiffness assembled from scratch (spring per grid edge plus a
/// ground spring per node) and the node index of every hole.
pub fn plate_oracle(params: &ModelParams) -> (Vec<Vec<f64>>, Vec<usize>) {
    let g = params.grid;
    let id = |ix: usize, iy: usize| ix * g.ny + iy;
    let n = g.nx * g.ny;
    let mut k = vec![vec![0.0; n]; n];
    for ix in 0..g.nx {
        for iy in 0..g.ny {
            let a = id(ix, iy);
            k[a][a] += params.k_ground;
            let mut link = |b: usize| {
                k[a][a] += params.k_edge;
                k[b][b] += params.k_edge;
                k[a][b] -= params.k_edge;
                k[b][a] -= params.k_edge;
            };
            if ix + 1 < g.nx {
                link(id(ix + 1, iy));
            }
            if iy + 1 < g.ny {
                link(id(ix, iy + 1));
            }
        }
    }
    let layout = HoleLayout::on_grid(g).unwrap();
    let holes = layout
        .holes()
        .iter()
        .map(|h| id((h.x / g.spacing).round() as usize, (h.y / g.spacing).round() as usize))
        .collect();
    (k, holes)
}

/// Hole displacements of the full plate under hole loads, one column per load.
pub fn full_plate_response(params: &ModelParams, loads: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (k, holes) = plate_oracle(params);
    let n = k.len();
    let mut rhs = vec![vec![0.0; loads.len()]; n];
    for (c, f) in loads.iter().enumerate() {
        for (i, &node) in holes.iter().enumerate() {
            rhs[node][c] = f[i];
        }
    }
    let u = gauss_solve(&k, &rhs);
    loads
        .iter()
        .enumerate()
        .map(|(c, _)| holes.iter().map(|&node| u[node][c]).collect())
        .collect()
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum::<f64>();
        }
        h[(i, i)] += 0.1 + rng.gen_range(0.0..1.0);
    }
    h.symmetrize();
    h
}

pub fn random_qp(rng: &mut ChaCha8Rng, n: usize) -> Qp {
    let h = random_spd(rng, n);
    let b = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let ub = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Qp::new(h, b, ub).unwrap()
}

/// Global minimiser by enumerating all 2^n active sets: each set fixes its
/// coordinates at the bound, the rest solve the reduced stationarity system;
/// the feasible candidate with the lowest objective wins.
pub fn brute_force_qp(p: &Qp) -> Vec<f64> {
    let n = p.dim();
    let h: Vec<Vec<f64>> = (0..n).map(|i| p.h.row(i).to_vec()).collect();
    let objective = |w: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            s += 0.5 * w[i] * (0..n).map(|j| h[i][j] * w[j]).sum::<f64>() - p.b[i] * w[i];
        }
        s
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let fixed = |i: usize| mask & (1 << i) != 0;
        let free: Vec<usize> = (0..n).filter(|&i| !fixed(i)).collect();
        let mut w: Vec<f64> = (0..n).map(|i| if fixed(i) { p.ub[i] } else { 0.0 }).collect();
        if !free.is_empty() {
            let a: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| h[i][j]).collect())
                .collect();
            let r: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| {
                    let c: f64 = (0..n).filter(|&j| fixed(j)).map(|j| h[i][j] * p.ub[j]).sum();
                    vec![p.b[i] - c]
                })
                .collect();
            let x = gauss_solve(&a, &r);
            for (k, &i) in free.iter().enumerate() {
                w[i] = x[k][0];
            }
        }
        if (0..n).any(|i| w[i] > p.ub[i] + 1e-12) {
            continue;
        }
        let f = objective(&w);
        if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
            best = Some((f, w));
        }
    }
    best.expect("the all-active set is always feasible").1
}

/// Largest violation among the four KKT conditions with `H w - b + lambda = 0`.
pub fn kkt_residual(p: &Qp, w: &[f64], lambda: &[f64]) -> f64 {
    let hw = p.h.mul_vec(w);
    let mut worst: f64 = 0.0;
    for i in 0..p.dim() {
        worst = worst
            .max((hw[i] - p.b[i] + lambda[i]).abs())
            .max((w[i] - p.ub[i]).max(0.0))
            .max((-lambda[i]).max(0.0))
            .max((lambda[i] * (p.ub[i] - w[i])).abs());
    }
    worst
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Whether the policy's choice at `state` was decided by the lowest-index
/// tie-break, recomputed from each policy's own criterion.
pub fn decision_tied(
    state: &boltseq::State<'_>,
    scenario: &boltseq::Scenario,
    policy: boltseq::heuristics::Policy,
    prev_gaps: &[f64],
) -> bool {
    use boltseq::heuristics::hull::{hull_area, hull_perimeter};
    use boltseq::heuristics::{kf_scores, Policy};

    if state.log().is_empty() && (scenario.start.is_some() || policy != Policy::Kf) {
        // a configured start is forced; without one the opening is an
        // arbitrary lowest-index choice
        return scenario.start.is_none();
    }
    let layout = state.model().layout();
    let gaps = state.gaps();
    let forces = state.current_forces();
    let installed: Vec<usize> = state.installed_holes().collect();
    let open: Vec<usize> = scenario
        .holes
        .iter()
        .copied()
        .filter(|&h| !state.is_installed(h))
        .collect();
    let scores: Vec<f64> = match policy {
        Policy::MaxGap => scenario.holes.iter().map(|&h| gaps[h]).collect(),
        Policy::GapGradient => open.iter().map(|&h| prev_gaps[h] - gaps[h]).collect(),
        Policy::Kf => kf_scores(state, scenario).unwrap().into_iter().map(|(_, v)| v).collect(),
        Policy::MaxPerim | Policy::MaxArea => {
            if installed.iter().any(|&h| forces[h] < scenario.force_floor) {
                installed.iter().map(|&h| -forces[h]).collect()
            } else if installed.len() < 2 {
                open.iter().map(|&c| layout.distance(installed[0], c)).collect()
            } else {
                open.iter()
                    .map(|&c| {
                        let pts: Vec<_> = installed
                            .iter()
                            .chain(std::iter::once(&c))
                            .map(|&h| layout.position(h))
                            .collect();
                        if policy == Policy::MaxPerim {
                            hull_perimeter(&pts)
                        } else {
                            hull_area(&pts)
                        }
                    })
                    .collect()
            }
        }
        _ => unimplemented!("tie detection for {policy}"),
    };
    let mut s = scores;
    s.sort_by(|a, b| b.total_cmp(a));
    s.len() >= 2 && (s[0] - s[1]).abs() <= 1e-9 * s[0].abs().max(1.0)
}

/// Compares a run with the run on the mirrored scenario up to the first
/// tie-broken decision in either. Returns `(equivariant, compared_steps)`.
pub fn mirror_equivariant(
    model: &boltseq::Model,
    scenario: &boltseq::Scenario,
    policy: boltseq::heuristics::Policy,
) -> (bool, usize) {
    use boltseq::heuristics::run_heuristic;
    let mirrored = scenario.mirrored(model);
    let a = run_heuristic(model, scenario, policy).unwrap();
    let b = run_heuristic(model, &mirrored, policy).unwrap();
    let layout = model.layout();
    let n = a.sequence.len().max(b.sequence.len());
    for i in 0..n {
        let tied = |r: &boltseq::Run, sc: &boltseq::Scenario| {
            i < r.sequence.len() && {
                let st = boltseq::State::replay(model, &r.sequence[..i]).unwrap();
                let prev = &r.trace[i.saturating_sub(1)].gaps;
                decision_tied(&st, sc, policy, prev)
            }
        };
        if tied(&a, scenario) || tied(&b, &mirrored) {
            return (true, i);
        }
        match (a.sequence.get(i), b.sequence.get(i)) {
            (Some(x), Some(y)) if layout.mirror(x.hole) == y.hole && x.kind == y.kind => {}
            _ => return (false, i),
        }
    }
    (true, n)
}
