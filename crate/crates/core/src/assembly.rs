//! Stateful fastener simulator.
//!
//! An action (install or refasten) at hole `h` solves for the equilibrium in
//! which `h` carries a pure 1000 N clamping force while every other installed
//! fastener acts as a linear spring around its anchor:
//!
//! ```text
//!     force_j = nominal_j - k_f * (w_j - anchor_j)
//! ```
//!
//! After the solve, fastener `h` becomes such a spring anchored at its new
//! closure, so it reads exactly 1000 N until a later action moves `w_h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ReducedModel;
use crate::scalar::Real;
use crate::solver::{solve_qp, QpProblem};

/// Clamping force applied by every install and refasten (N).
pub const INSTALL_FORCE: f64 = 1000.0;
/// Half-width of the acceptable force band around [`INSTALL_FORCE`] (N).
pub const FORCE_BAND: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Install,
    Refasten,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Install => "install",
            ActionKind::Refasten => "refasten",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub hole: usize,
    pub kind: ActionKind,
}

impl Action {
    pub fn install(hole: usize) -> Self {
        Self {
            hole,
            kind: ActionKind::Install,
        }
    }

    pub fn refasten(hole: usize) -> Self {
        Self {
            hole,
            kind: ActionKind::Refasten,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastenerState<T> {
    pub hole: usize,
    /// Closure at the last action on this fastener (mm).
    pub anchor: T,
    /// Preload at the last action (N).
    pub nominal: T,
    /// Fastener stiffness (N/mm).
    pub k_f: T,
}

impl<T: Real> FastenerState<T> {
    pub fn force(&self, closure: T) -> T {
        self.nominal - self.k_f * (closure - self.anchor)
    }
}

/// Population statistics of gaps and forces over all holes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapStats<T> {
    pub gap_mean: T,
    pub gap_var: T,
    pub gap_std: T,
    pub force_mean: T,
    pub force_var: T,
}

impl<T: Real> GapStats<T> {
    pub fn from_values(gaps: &[T], forces: &[T]) -> Self {
        let (gap_mean, gap_var) = mean_var(gaps);
        let (force_mean, force_var) = mean_var(forces);
        Self {
            gap_mean,
            gap_var,
            gap_std: gap_var.sqrt(),
            force_mean,
            force_var,
        }
    }

    pub fn to_f64(&self) -> GapStats<f64> {
        GapStats {
            gap_mean: self.gap_mean.to_f64_lossy(),
            gap_var: self.gap_var.to_f64_lossy(),
            gap_std: self.gap_std.to_f64_lossy(),
            force_mean: self.force_mean.to_f64_lossy(),
            force_var: self.force_var.to_f64_lossy(),
        }
    }
}

/// Population mean and variance; `(0, 0)` for an empty slice.
fn mean_var<T: Real>(v: &[T]) -> (T, T) {
    if v.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::from_usize(v.len()).expect("length fits scalar");
    let mean = v.iter().copied().sum::<T>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    (mean, var)
}

#[derive(Clone, Debug)]
pub struct AssemblyState<'m, T> {
    model: &'m ReducedModel<T>,
    installed: Vec<Option<FastenerState<T>>>,
    w: Vec<T>,
    log: Vec<Action>,
}

impl<'m, T: Real> AssemblyState<'m, T> {
    /// Open assembly: no fasteners, zero closure.
    pub fn new(model: &'m ReducedModel<T>) -> Self {
        let n = model.hole_count();
        Self {
            model,
            installed: vec![None; n],
            w: vec![T::zero(); n],
            log: Vec::new(),
        }
    }

    /// Rebuilds a state by applying `log` to an open assembly.
    pub fn replay(model: &'m ReducedModel<T>, log: &[Action]) -> Result<Self> {
        log.iter()
            .try_fold(Self::new(model), |s, &a| s.apply_action(a))
    }

    pub fn model(&self) -> &'m ReducedModel<T> {
        self.model
    }

    pub fn hole_count(&self) -> usize {
        self.w.len()
    }

    pub fn closure(&self) -> &[T] {
        &self.w
    }

    pub fn log(&self) -> &[Action] {
        &self.log
    }

    pub fn last_action(&self) -> Option<Action> {
        self.log.last().copied()
    }

    pub fn fastener(&self, hole: usize) -> Option<&FastenerState<T>> {
        self.installed.get(hole).and_then(Option::as_ref)
    }

    pub fn is_installed(&self, hole: usize) -> bool {
        self.fastener(hole).is_some()
    }

    pub fn installed_holes(&self) -> impl Iterator<Item = usize> + '_ {
        self.installed
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().map(|_| i))
    }

    pub fn installed_count(&self) -> usize {
        self.installed.iter().flatten().count()
    }

    /// The action kind a policy must use at `hole` given current occupancy.
    pub fn action_at(&self, hole: usize) -> Action {
        if self.is_installed(hole) {
            Action::refasten(hole)
        } else {
            Action::install(hole)
        }
    }

    fn check_action(&self, a: Action) -> Result<()> {
        if a.hole >= self.hole_count() {
            return Err(Error::Precondition(format!("hole {} does not exist", a.hole)));
        }
        match (a.kind, self.is_installed(a.hole)) {
            (ActionKind::Install, true) => Err(Error::Precondition(format!(
                "install on occupied hole {}",
                a.hole
            ))),
            (ActionKind::Refasten, false) => Err(Error::Precondition(format!(
                "refasten on empty hole {}",
                a.hole
            ))),
            _ => Ok(()),
        }
    }

    /// Stiffness and load with every installed fastener except `pure` as a
    /// spring, and `pure` (if any) carrying a plain 1000 N force.
    pub(crate) fn equilibrium_system(&self, pure: Option<usize>) -> (Matrix<T>, Vec<T>) {
        let mut h = self.model.kc().clone();
        let mut b = vec![T::zero(); self.hole_count()];
        for (j, f) in self.installed.iter().enumerate() {
            if let Some(f) = f {
                if Some(j) != pure {
                    h.add_diagonal(j, f.k_f);
                    b[j] = f.nominal + f.k_f * f.anchor;
                }
            }
        }
        if let Some(j) = pure {
            b[j] = T::lit(INSTALL_FORCE);
        }
        (h, b)
    }

    /// Installs or refastens, recomputing the contact equilibrium.
    pub fn apply_action(&self, a: Action) -> Result<Self> {
        self.check_action(a)?;
        let (h, b) = self.equilibrium_system(Some(a.hole));
        let problem = QpProblem::new(h, b, self.model.g0().to_vec())?;
        let solution = solve_qp(&problem)?;

        let mut next = self.clone();
        next.w = solution.w;
        next.installed[a.hole] = Some(FastenerState {
            hole: a.hole,
            anchor: next.w[a.hole],
            nominal: T::lit(INSTALL_FORCE),
            k_f: self.model.fastener_stiffness(),
        });
        next.log.push(a);
        Ok(next)
    }

    /// Fastener loads; empty holes read zero.
    pub fn current_forces(&self) -> Vec<T> {
        self.installed
            .iter()
            .zip(&self.w)
            .map(|(f, &w)| f.as_ref().map_or(T::zero(), |f| f.force(w)))
            .collect()
    }

    /// `g0 - w` at every hole.
    pub fn gaps(&self) -> Vec<T> {
        self.model
            .g0()
            .iter()
            .zip(&self.w)
            .map(|(&g, &w)| g - w)
            .collect()
    }

    pub fn stats(&self) -> GapStats<T> {
        GapStats::from_values(&self.gaps(), &self.current_forces())
    }

    /// Every scenario hole installed and every installed force within 1000 +/- 25 N.
    pub fn is_converged(&self, scenario: &[usize]) -> bool {
        let forces = self.current_forces();
        let installed: Vec<bool> = self.installed.iter().map(Option::is_some).collect();
        forces_converged(&forces, &installed, scenario)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            holes: self.hole_count(),
            installed: self.installed_holes().collect(),
            gaps: self.gaps().into_iter().map(T::to_f64_lossy).collect(),
            forces: self
                .current_forces()
                .into_iter()
                .map(T::to_f64_lossy)
                .collect(),
            log: self.log.clone(),
        }
    }
}

/// Convergence test on raw values, see [`AssemblyState::is_converged`].
pub fn forces_converged<T: Real>(forces: &[T], installed: &[bool], scenario: &[usize]) -> bool {
    let lo = T::lit(INSTALL_FORCE - FORCE_BAND);
    let hi = T::lit(INSTALL_FORCE + FORCE_BAND);
    scenario.iter().all(|&h| installed.get(h).copied().unwrap_or(false))
        && forces
            .iter()
            .zip(installed)
            .filter(|(_, &on)| on)
            .all(|(&f, _)| f >= lo && f <= hi)
}

/// Serializable view of a state.
///
/// JSON shape: `{"holes": 40, "installed": [..], "gaps": [..], "forces": [..],
/// "log": [{"hole": 10, "kind": "install"}, ..]}` with gaps in mm and forces in N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub holes: usize,
    pub installed: Vec<usize>,
    pub gaps: Vec<f64>,
    pub forces: Vec<f64>,
    pub log: Vec<Action>,
}

/// Statistics of the hypothetical simultaneous installation of every scenario
/// fastener as a pure 1000 N force.
pub fn simultaneous_oracle<T: Real>(
    model: &ReducedModel<T>,
    scenario: &[usize],
) -> Result<GapStats<T>> {
    let n = model.hole_count();
    if scenario.is_empty() {
        return Err(Error::InvalidParameter("oracle needs a non-empty scenario".into()));
    }
    let mut b = vec![T::zero(); n];
    for &h in scenario {
        if h >= n {
            return Err(Error::InvalidParameter(format!("hole {h} does not exist")));
        }
        b[h] = T::lit(INSTALL_FORCE);
    }
    let problem = QpProblem::new(model.kc().clone(), b.clone(), model.g0().to_vec())?;
    let w = solve_qp(&problem)?.w;
    let gaps: Vec<T> = model.g0().iter().zip(&w).map(|(&g, &x)| g - x).collect();
    Ok(GapStats::from_values(&gaps, &b))
}
