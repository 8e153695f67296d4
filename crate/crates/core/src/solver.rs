//! Equilibrium solves: the upper-bounded convex QP that enforces
//! non-penetration, plus the plain SPD solve and energy used for prediction.
//!
//! The QP is
//!
//! ```text
//!     minimize   1/2 w' H w - b' w
//!     subject to w <= ub
//! ```
//!
//! with `H` symmetric positive definite. Multipliers are reported with the sign
//! convention `H w - b + lambda = 0`, `lambda >= 0`, so they read as contact
//! reactions.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, Matrix};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct QpProblem<T> {
    pub h: Matrix<T>,
    pub b: Vec<T>,
    pub ub: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution<T> {
    pub w: Vec<T>,
    pub multipliers: Vec<T>,
    /// Indices held at their bound, ascending.
    pub active: Vec<usize>,
    pub iterations: usize,
}

impl<T: Real> QpProblem<T> {
    pub fn new(h: Matrix<T>, b: Vec<T>, ub: Vec<T>) -> Result<Self> {
        let p = Self { h, b, ub };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.b.len();
        if self.h.rows() != n || self.h.cols() != n || self.ub.len() != n {
            return Err(Error::Dimension(format!(
                "QP with H {}x{}, b {}, ub {}",
                self.h.rows(),
                self.h.cols(),
                n,
                self.ub.len()
            )));
        }
        if let Some(i) = self.ub.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidParameter(format!("upper bound {i} is not finite")));
        }
        Ok(())
    }

    pub fn objective(&self, w: &[T]) -> T {
        energy(&self.h, w, &self.b)
    }
}

impl<T: Real> QpSolution<T> {
    /// `||H w - b + lambda||_inf`.
    pub fn stationarity_residual(&self, p: &QpProblem<T>) -> T {
        let hw = p.h.mul_vec(&self.w);
        let r: Vec<T> = (0..p.dim())
            .map(|i| hw[i] - p.b[i] + self.multipliers[i])
            .collect();
        norm_inf(&r)
    }
}

/// `1/2 U' H U - F' U`.
pub fn energy<T: Real>(h: &Matrix<T>, u: &[T], f: &[T]) -> T {
    T::lit(0.5) * dot(u, &h.mul_vec(u)) - dot(f, u)
}

/// Solves `H U = b` for symmetric positive-definite `H`.
pub fn solve_linear<T: Real>(h: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    if h.rows() != b.len() {
        return Err(Error::Dimension(format!(
            "{}x{} system with {} right-hand sides",
            h.rows(),
            h.cols(),
            b.len()
        )));
    }
    Ok(Cholesky::factor(h)?.solve(b))
}

/// Primal active-set method over the upper-bound box.
///
/// Starts from the unconstrained minimiser clipped to the box. Each iteration
/// either takes a full step to the minimiser of the current face, adding the
/// first blocking bound if the step leaves the box, or releases the bound
/// with the most negative multiplier. Ties go to the lowest index, so the
/// result is a deterministic function of the input.
pub fn solve_qp<T: Real>(p: &QpProblem<T>) -> Result<QpSolution<T>> {
    p.validate()?;
    let n = p.dim();
    let max_iterations = 10 * n;
    let drop_tol = T::tol(1e-12) * T::one().max(norm_inf(&p.b));

    let mut w = solve_linear(&p.h, &p.b)?;
    let mut active = vec![false; n];
    for i in 0..n {
        if w[i] >= p.ub[i] {
            w[i] = p.ub[i];
            active[i] = true;
        }
    }

    for iteration in 0..=max_iterations {
        let target = face_minimizer(p, &active)?;

        let mut step = T::one();
        let mut blocking = None;
        for i in (0..n).filter(|&i| !active[i]) {
            let d = target[i] - w[i];
            if target[i] > p.ub[i] && d > T::zero() {
                let ratio = (p.ub[i] - w[i]).max(T::zero()) / d;
                if ratio < step {
                    step = ratio;
                    blocking = Some(i);
                }
            }
        }

        match blocking {
            Some(i) => {
                for j in (0..n).filter(|&j| !active[j]) {
                    w[j] = w[j] + step * (target[j] - w[j]);
                }
                w[i] = p.ub[i];
                active[i] = true;
            }
            None => {
                w = target;
                let hw = p.h.mul_vec(&w);
                let mut multipliers = vec![T::zero(); n];
                let mut release: Option<(usize, T)> = None;
                for i in (0..n).filter(|&i| active[i]) {
                    let lambda = p.b[i] - hw[i];
                    multipliers[i] = lambda;
                    if lambda < -drop_tol && release.is_none_or(|(_, m)| lambda < m) {
                        release = Some((i, lambda));
                    }
                }
                match release {
                    Some((i, _)) => active[i] = false,
                    None => {
                        for m in multipliers.iter_mut() {
                            *m = m.max(T::zero());
                        }
                        return Ok(QpSolution {
                            w,
                            multipliers,
                            active: (0..n).filter(|&i| active[i]).collect(),
                            iterations: iteration,
                        });
                    }
                }
            }
        }
    }

    Err(Error::Numerical(format!(
        "active-set QP did not converge in {max_iterations} iterations (n = {n}, {} bounds active)",
        active.iter().filter(|&&a| a).count()
    )))
}

/// Minimiser of the objective with active bounds fixed at `ub`.
fn face_minimizer<T: Real>(p: &QpProblem<T>, active: &[bool]) -> Result<Vec<T>> {
    let n = p.dim();
    let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
    let mut out: Vec<T> = (0..n)
        .map(|i| if active[i] { p.ub[i] } else { T::zero() })
        .collect();
    if free.is_empty() {
        return Ok(out);
    }
    let rhs: Vec<T> = free
        .iter()
        .map(|&i| {
            let coupled = (0..n)
                .filter(|&j| active[j])
                .fold(T::zero(), |acc, j| acc + p.h[(i, j)] * p.ub[j]);
            p.b[i] - coupled
        })
        .collect();
    let x = solve_linear(&p.h.select(&free, &free), &rhs)?;
    for (k, &i) in free.iter().enumerate() {
        out[i] = x[k];
    }
    Ok(out)
}
