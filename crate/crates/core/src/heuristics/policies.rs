//! Next-action rules. Each is a pure function of the current state; ties are
//! always resolved towards the lowest hole index.

use crate::assembly::{Action, AssemblyState, INSTALL_FORCE};
use crate::error::Result;
use crate::linalg::norm2;
use crate::model::HoleLayout;
use crate::scalar::Real;
use crate::solver::solve_linear;

use super::hull::{hull_area, hull_perimeter, Point};
use super::{GapDelta, Scenario};

/// Opening install when nothing has happened yet: the configured starter,
/// else the lowest scenario hole.
fn opening<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Option<Action> {
    s.log()
        .is_empty()
        .then(|| Action::install(sc.start.unwrap_or(sc.holes[0])))
}

/// Hole with the largest value; `holes` must be ascending.
pub fn argmax_over<T: Real>(holes: &[usize], value: impl Fn(usize) -> T) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for &h in holes {
        let v = value(h);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((h, v));
        }
    }
    best.map(|(h, _)| h)
}

/// Hole whose value is closest to `target`; `holes` must be ascending.
pub fn closest_to<T: Real>(holes: &[usize], values: &[T], target: T) -> Option<usize> {
    argmax_over(holes, |h| -(values[h] - target).abs())
}

pub fn max_gap_next<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Option<Action> {
    if let Some(a) = opening(s, sc) {
        return Some(a);
    }
    let gaps = s.gaps();
    argmax_over(&sc.holes, |h| gaps[h]).map(|h| s.action_at(h))
}

/// Hole closest to `min + (max - min) / n` over the scenario gaps.
pub fn max_min_divide_pick<T: Real>(gaps: &[T], holes: &[usize], n: usize) -> Option<usize> {
    let (lo, hi) = holes.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &h| {
        (lo.min(gaps[h]), hi.max(gaps[h]))
    });
    let n = T::from_usize(n.max(1)).expect("divisor fits scalar");
    closest_to(holes, gaps, lo + (hi - lo) / n)
}

pub fn max_min_divide_next<T: Real>(
    s: &AssemblyState<'_, T>,
    sc: &Scenario<T>,
) -> Option<Action> {
    if let Some(a) = opening(s, sc) {
        return Some(a);
    }
    max_min_divide_pick(&s.gaps(), &sc.holes, sc.n_divisor).map(|h| s.action_at(h))
}

/// Block to work in after acting in `last_block`.
///
/// Adjacent blocks holding scenario holes compete on the largest gap over all
/// of their holes; when neither neighbour holds any scenario hole, the block
/// with the nearest centre is used.
pub fn blockwise_block<T: Real>(
    layout: &HoleLayout,
    gaps: &[T],
    holes: &[usize],
    last_block: usize,
) -> Option<usize> {
    let eligible = |b: usize| holes.iter().any(|&h| layout.block_of(h) == b);
    let max_gap = |b: usize| layout.block_holes(b).map(|h| gaps[h]).fold(T::neg_infinity(), T::max);

    let mut best: Option<(usize, T)> = None;
    let neighbours = [last_block.checked_sub(1), Some(last_block + 1)];
    for b in neighbours.into_iter().flatten().filter(|&b| eligible(b)) {
        let g = max_gap(b);
        if best.is_none_or(|(_, m)| g > m) {
            best = Some((b, g));
        }
    }
    if let Some((b, _)) = best {
        return Some(b);
    }

    let mut blocks: Vec<usize> = holes.iter().map(|&h| layout.block_of(h)).collect();
    blocks.sort_unstable();
    blocks.dedup();
    let here = layout.block_center(last_block);
    let distance = |b: usize| (layout.block_center(b) - here).abs();
    let others: Vec<usize> = blocks.iter().copied().filter(|&b| b != last_block).collect();
    let pool = if others.is_empty() { blocks } else { others };
    pool.into_iter()
        .min_by(|&a, &b| distance(a).total_cmp(&distance(b)).then(a.cmp(&b)))
}

/// Scenario hole in `block` whose gap is closest to the midpoint of the
/// smallest and largest gap over all holes of the block.
pub fn blockwise_pick<T: Real>(
    layout: &HoleLayout,
    gaps: &[T],
    holes: &[usize],
    block: usize,
) -> Option<usize> {
    let (lo, hi) = layout
        .block_holes(block)
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), h| {
            (lo.min(gaps[h]), hi.max(gaps[h]))
        });
    let members: Vec<usize> = holes
        .iter()
        .copied()
        .filter(|&h| layout.block_of(h) == block)
        .collect();
    closest_to(&members, gaps, (lo + hi) * T::lit(0.5))
}

pub fn blockwise_next<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Option<Action> {
    let last = match s.last_action() {
        None => return opening(s, sc),
        Some(a) => a,
    };
    let layout = s.model().layout();
    let gaps = s.gaps();
    let block = blockwise_block(layout, &gaps, &sc.holes, layout.block_of(last.hole))?;
    blockwise_pick(layout, &gaps, &sc.holes, block).map(|h| s.action_at(h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HullMeasure {
    Perimeter,
    Area,
}

impl HullMeasure {
    fn of(self, points: &[Point]) -> f64 {
        match self {
            HullMeasure::Perimeter => hull_perimeter(points),
            HullMeasure::Area => hull_area(points),
        }
    }
}

/// Uninstalled candidate that maximises the hull measure of the installed
/// positions plus the candidate. With fewer than two installed fasteners the
/// candidate farthest from the existing one wins.
pub fn hull_pick(
    layout: &HoleLayout,
    installed: &[usize],
    candidates: &[usize],
    measure: HullMeasure,
) -> Option<usize> {
    if installed.len() < 2 {
        let anchor = installed.first().copied();
        return argmax_over(candidates, |c| anchor.map_or(0.0, |a| layout.distance(a, c)));
    }
    let mut points: Vec<Point> = installed.iter().map(|&h| layout.position(h)).collect();
    points.push((0.0, 0.0));
    argmax_over(candidates, |c| {
        let last = points.len() - 1;
        let mut pts = points.clone();
        pts[last] = layout.position(c);
        measure.of(&pts)
    })
}

/// Refasten the weakest fastener below the force floor, otherwise install
/// where the hull of installed fasteners grows most.
pub fn hull_next<T: Real>(
    s: &AssemblyState<'_, T>,
    sc: &Scenario<T>,
    measure: HullMeasure,
) -> Option<Action> {
    if let Some(a) = opening(s, sc) {
        return Some(a);
    }
    let forces = s.current_forces();
    let installed: Vec<usize> = s.installed_holes().collect();
    let weakest = argmax_over(&installed, |h| -forces[h]);
    if let Some(h) = weakest.filter(|&h| forces[h] < sc.force_floor) {
        return Some(Action::refasten(h));
    }
    let candidates: Vec<usize> = sc.holes.iter().copied().filter(|&h| !s.is_installed(h)).collect();
    hull_pick(s.model().layout(), &installed, &candidates, measure).map(Action::install)
}

pub fn maxperim_next<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Option<Action> {
    hull_next(s, sc, HullMeasure::Perimeter)
}

pub fn maxarea_next<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Option<Action> {
    hull_next(s, sc, HullMeasure::Area)
}

/// Candidate with the largest gap change between consecutive states.
pub fn gap_gradient_pick<T: Real>(
    prev_gaps: &[T],
    gaps: &[T],
    candidates: &[usize],
    delta: GapDelta,
) -> Option<usize> {
    argmax_over(candidates, |h| match delta {
        GapDelta::Reduction => prev_gaps[h] - gaps[h],
        GapDelta::Increase => gaps[h] - prev_gaps[h],
    })
}

/// Installs only: the uninstalled scenario hole whose gap moved most during
/// the previous action. `None` once every scenario hole is installed.
pub fn gap_gradient_next<T: Real>(
    s: &AssemblyState<'_, T>,
    sc: &Scenario<T>,
    prev_gaps: &[T],
) -> Option<Action> {
    if let Some(a) = opening(s, sc) {
        return Some(a);
    }
    let candidates: Vec<usize> = sc.holes.iter().copied().filter(|&h| !s.is_installed(h)).collect();
    gap_gradient_pick(prev_gaps, &s.gaps(), &candidates, sc.gap_delta).map(Action::install)
}

/// Predicted displacement change for acting at each scenario hole:
/// `|| U_init - U_j ||_2`, where `U_j` re-solves the spring system with hole
/// `j` at a pure 1000 N load.
///
/// Non-penetration is not enforced in the prediction. The contact reactions
/// of the current equilibrium are kept as fixed loads, so `U_init` is the
/// current closure and an action that re-imposes the current state scores 0.
pub fn kf_scores<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Result<Vec<(usize, T)>> {
    let (h, mut b) = s.equilibrium_system(None);
    let u_init = s.closure();
    let hw = h.mul_vec(u_init);
    for (bi, hwi) in b.iter_mut().zip(&hw) {
        // subtract the reaction b - H w where contact holds the plates apart
        let reaction = (*bi - *hwi).max(T::zero());
        *bi = *bi - reaction;
    }
    sc.holes
        .iter()
        .map(|&j| {
            let mut hj = h.clone();
            let mut bj = b.clone();
            if let Some(f) = s.fastener(j) {
                hj.add_diagonal(j, -f.k_f);
                bj[j] = bj[j] - (f.nominal + f.k_f * f.anchor);
            }
            bj[j] = bj[j] + T::lit(INSTALL_FORCE);
            let uj = solve_linear(&hj, &bj)?;
            let diff: Vec<T> = u_init.iter().zip(&uj).map(|(&a, &b)| a - b).collect();
            Ok((j, norm2(&diff)))
        })
        .collect()
}

pub fn kf_next<T: Real>(s: &AssemblyState<'_, T>, sc: &Scenario<T>) -> Result<Option<Action>> {
    if s.log().is_empty() {
        if let Some(start) = sc.start {
            return Ok(Some(Action::install(start)));
        }
    }
    // Scores are computed by separate solves, so mirror-image candidates agree
    // only to round-off; anything within a relative 1e-9 of the best is a tie.
    let scores = kf_scores(s, sc)?;
    let top = scores.iter().fold(T::neg_infinity(), |m, &(_, v)| m.max(v));
    let slack = T::tol(1e-9) * top.abs().max(T::one());
    let best = scores.iter().find(|&&(_, v)| v >= top - slack).map(|&(h, _)| h);
    Ok(best.map(|h| s.action_at(h)))
}
