//! Synthetic two-plate joint: hole layout, spring-network stiffness and its
//! condensation onto the fastener holes.
//!
//! The plate is a rectangular grid with one scalar closure unknown per node.
//! Neighbouring nodes are coupled by springs of stiffness `k_edge` and every
//! node is tied to ground by a spring `k_ground`, which keeps the operator
//! positive definite without clamping an edge. Eliminating all non-hole nodes
//! with a Schur complement yields the 40x40 reduced stiffness `Kc`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Real;

pub const HOLE_COUNT: usize = 40;
pub const HOLE_ROWS: usize = 2;
pub const HOLE_COLS: usize = 20;
pub const BLOCK_COUNT: usize = 5;
/// Hole columns per block.
const BLOCK_WIDTH: usize = HOLE_COLS / BLOCK_COUNT;

/// Rectangular node grid in millimetres, origin at node (0, 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            nx: 60,
            ny: 7,
            spacing: 10.0,
        }
    }
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Node sitting exactly at `(x, y)`, if any.
    pub fn node_at(&self, x: f64, y: f64) -> Option<usize> {
        let fx = x / self.spacing;
        let fy = y / self.spacing;
        let (ix, iy) = (fx.round(), fy.round());
        let on_node = (fx - ix).abs() < 1e-9 && (fy - iy).abs() < 1e-9;
        if !on_node || ix < 0.0 || iy < 0.0 {
            return None;
        }
        let (ix, iy) = (ix as usize, iy as usize);
        (ix < self.nx && iy < self.ny).then(|| self.node(ix, iy))
    }

    /// Undirected 4-neighbour edges, each listed once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |iy| {
            (0..self.nx).flat_map(move |ix| {
                let here = self.node(ix, iy);
                let right = (ix + 1 < self.nx).then(|| (here, self.node(ix + 1, iy)));
                let up = (iy + 1 < self.ny).then(|| (here, self.node(ix, iy + 1)));
                right.into_iter().chain(up)
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hole {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub block: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoleLayout {
    holes: Vec<Hole>,
    grid: Grid,
    /// Grid node of each hole.
    nodes: Vec<usize>,
}

/// The default 2x20 hole pattern on the default grid.
pub fn build_layout() -> HoleLayout {
    HoleLayout::on_grid(Grid::default()).expect("default grid contains every hole")
}

impl HoleLayout {
    /// Places the 2x20 hole pattern (30 mm pitch along x, 20 mm along y) on `grid`.
    pub fn on_grid(grid: Grid) -> Result<Self> {
        if grid.nx == 0 || grid.ny == 0 || !(grid.spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("degenerate grid {grid:?}")));
        }
        let holes: Vec<Hole> = (0..HOLE_COUNT)
            .map(|index| {
                let col = index % HOLE_COLS;
                let row = index / HOLE_COLS;
                Hole {
                    index,
                    x: 10.0 + 30.0 * col as f64,
                    y: 20.0 + 20.0 * row as f64,
                    block: col / BLOCK_WIDTH,
                }
            })
            .collect();
        let nodes = holes
            .iter()
            .map(|h| {
                grid.node_at(h.x, h.y).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "hole {} at ({}, {}) is not a node of grid {grid:?}",
                        h.index, h.x, h.y
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { holes, grid, nodes })
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn hole(&self, i: usize) -> &Hole {
        &self.holes[i]
    }

    pub fn len(&self) -> usize {
        self.holes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Grid node of each hole, in hole order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn position(&self, i: usize) -> (f64, f64) {
        (self.holes[i].x, self.holes[i].y)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (xa, ya) = self.position(a);
        let (xb, yb) = self.position(b);
        (xa - xb).hypot(ya - yb)
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.holes[i].block
    }

    pub fn block_holes(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        self.holes
            .iter()
            .filter(move |h| h.block == block)
            .map(|h| h.index)
    }

    /// Mean x coordinate of a block's holes.
    pub fn block_center(&self, block: usize) -> f64 {
        let xs: Vec<f64> = self.block_holes(block).map(|i| self.holes[i].x).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    /// Hole mirrored about the vertical centre line of the pattern.
    pub fn mirror(&self, i: usize) -> usize {
        let row = i / HOLE_COLS;
        let col = i % HOLE_COLS;
        row * HOLE_COLS + (HOLE_COLS - 1 - col)
    }

    /// x coordinate of the mirror line.
    pub fn mirror_axis(&self) -> f64 {
        let (lo, hi) = self
            .holes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
                (lo.min(h.x), hi.max(h.x))
            });
        0.5 * (lo + hi)
    }
}

/// `k_edge * L + k_ground * I` for the 4-neighbour graph Laplacian `L` of `grid`.
pub fn grid_stiffness<T: Real>(grid: &Grid, k_edge: T, k_ground: T) -> Result<Matrix<T>> {
    if !(k_edge > T::zero()) || !(k_ground > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "stiffness must be positive (k_edge = {k_edge}, k_ground = {k_ground})"
        )));
    }
    let n = grid.node_count();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = k_ground;
    }
    for (a, b) in grid.edges() {
        k.add_diagonal(a, k_edge);
        k.add_diagonal(b, k_edge);
        k[(a, b)] = k[(a, b)] - k_edge;
        k[(b, a)] = k[(b, a)] - k_edge;
    }
    Ok(k)
}

/// Stiffness over every grid DOF together with the DOFs retained by condensation.
#[derive(Clone, Debug)]
pub struct FullStiffness<T> {
    pub k: Matrix<T>,
    /// Row of each retained (hole) DOF, in hole order.
    pub computational: Vec<usize>,
}

impl<T: Real> FullStiffness<T> {
    pub fn new(k: Matrix<T>, computational: Vec<usize>) -> Result<Self> {
        if !k.is_square() {
            return Err(Error::Dimension("stiffness must be square".into()));
        }
        let mut seen = vec![false; k.rows()];
        for &c in &computational {
            if c >= k.rows() || std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidParameter(format!(
                    "computational DOF {c} out of range or repeated"
                )));
            }
        }
        Ok(Self { k, computational })
    }

    pub fn dim(&self) -> usize {
        self.k.rows()
    }

    /// DOFs not retained, in ascending order.
    pub fn remaining(&self) -> Vec<usize> {
        let mut keep = vec![false; self.dim()];
        for &c in &self.computational {
            keep[c] = true;
        }
        (0..self.dim()).filter(|&i| !keep[i]).collect()
    }
}

pub fn build_full_stiffness<T: Real>(
    layout: &HoleLayout,
    k_edge: T,
    k_ground: T,
) -> Result<FullStiffness<T>> {
    let k = grid_stiffness(&layout.grid(), k_edge, k_ground)?;
    FullStiffness::new(k, layout.nodes().to_vec())
}

/// `K_cc - K_cr K_rr^{-1} K_cr^T` over the computational DOFs of `full`.
pub fn schur_complement<T: Real>(full: &FullStiffness<T>) -> Result<Matrix<T>> {
    let c = &full.computational;
    let r = full.remaining();
    let k_cc = full.k.select(c, c);
    if r.is_empty() {
        return Ok(k_cc);
    }
    let k_rr = full.k.select(&r, &r);
    let k_rc = full.k.select(&r, c);
    let factor = Cholesky::factor(&k_rr)
        .map_err(|e| Error::Numerical(format!("interior block K_rr is singular: {e}")))?;
    let x = factor.solve_matrix(&k_rc);
    let coupling = k_rc.transpose().matmul(&x);
    let mut kc = k_cc;
    for i in 0..kc.rows() {
        for j in 0..kc.cols() {
            kc[(i, j)] = kc[(i, j)] - coupling[(i, j)];
        }
    }
    kc.symmetrize();
    Ok(kc)
}

/// Physical parameters of the synthetic joint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Spring between neighbouring grid nodes (N/mm).
    pub k_edge: f64,
    /// Spring from every node to ground (N/mm).
    pub k_ground: f64,
    /// Axial stiffness of an installed fastener (N/mm).
    pub k_f: f64,
    /// Initial gap at every hole (mm).
    pub initial_gap: f64,
    pub grid: Grid,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            k_edge: 1200.0,
            k_ground: 1.0,
            k_f: 2500.0,
            initial_gap: 6.0,
            grid: Grid::default(),
        }
    }
}

/// Condensed joint: hole stiffness, initial gaps and fastener stiffness.
#[derive(Clone, Debug)]
pub struct ReducedModel<T> {
    kc: Matrix<T>,
    layout: HoleLayout,
    g0: Vec<T>,
    fastener_stiffness: T,
}

impl<T: Real> ReducedModel<T> {
    pub fn build(params: &ModelParams) -> Result<Self> {
        let layout = HoleLayout::on_grid(params.grid)?;
        let full = build_full_stiffness(&layout, T::lit(params.k_edge), T::lit(params.k_ground))?;
        let kc = schur_complement(&full)?;
        Self::from_parts(
            kc,
            layout,
            vec![T::lit(params.initial_gap); HOLE_COUNT],
            T::lit(params.k_f),
        )
    }

    /// Assembles a model from an already condensed stiffness (e.g. a reloaded dump).
    pub fn from_parts(kc: Matrix<T>, layout: HoleLayout, g0: Vec<T>, k_f: T) -> Result<Self> {
        let n = layout.len();
        if kc.rows() != n || kc.cols() != n || g0.len() != n {
            return Err(Error::Dimension(format!(
                "reduced model expects {n} holes, got Kc {}x{} and {} gaps",
                kc.rows(),
                kc.cols(),
                g0.len()
            )));
        }
        if !(k_f > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "fastener stiffness must be positive, got {k_f}"
            )));
        }
        if kc.asymmetry() > T::tol(1e-12) {
            return Err(Error::InvalidParameter("Kc is not symmetric".into()));
        }
        Cholesky::factor(&kc)?;
        Ok(Self {
            kc,
            layout,
            g0,
            fastener_stiffness: k_f,
        })
    }

    pub fn kc(&self) -> &Matrix<T> {
        &self.kc
    }

    pub fn layout(&self) -> &HoleLayout {
        &self.layout
    }

    pub fn g0(&self) -> &[T] {
        &self.g0
    }

    pub fn fastener_stiffness(&self) -> T {
        self.fastener_stiffness
    }

    pub fn hole_count(&self) -> usize {
        self.g0.len()
    }

    /// Largest `|(P Kc P^T - Kc)_ij|` for the hole mirror permutation `P`.
    pub fn mirror_defect(&self) -> T {
        let n = self.hole_count();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let (mi, mj) = (self.layout.mirror(i), self.layout.mirror(j));
                worst = worst.max((self.kc[(mi, mj)] - self.kc[(i, j)]).abs());
            }
        }
        worst
    }
}
