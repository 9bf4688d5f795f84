//! Box-constrained convex quadratic programming,
//! `min ½ xᵀHx + gᵀx  s.t.  lower ≤ x ≤ upper`, and the tension
//! distribution problems built on it.
//!
//! The solver is a primal active-set method. Each iteration fixes the
//! variables in the working set at their bounds and solves the reduced
//! equality problem on the free block with a Cholesky factorisation. A
//! projected-gradient loop takes over if the active-set iteration budget is
//! exhausted, which only happens on degenerate working sets.

mod tension;

pub use tension::{solve_tension, solve_tension_compensated, TensionDistribution, TensionWeights};

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default KKT tolerance used by the tension solvers.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    h: DMatrix<f64>,
    g: DVector<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        h: DMatrix<f64>,
        g: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Result<Self> {
        let m = g.len();
        if h.shape() != (m, m) || lower.len() != m || upper.len() != m {
            return Err(Error::contract(format!(
                "QP dimensions disagree: H {:?}, g {}, bounds {}/{}",
                h.shape(),
                m,
                lower.len(),
                upper.len()
            )));
        }
        let scale = h.amax().max(1.0);
        for i in 0..m {
            for j in (i + 1)..m {
                if (h[(i, j)] - h[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::domain(format!("H is not symmetric at ({i}, {j})")));
                }
            }
        }
        for i in 0..m {
            if !(lower[i] <= upper[i]) {
                return Err(Error::domain(format!(
                    "empty box for variable {i}: [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(QpProblem { h, g, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x + &self.g
    }

    /// Infinity norm of `x - P(x - ∇f(x))`, zero exactly at a KKT point.
    pub fn kkt_residual(&self, x: &DVector<f64>) -> f64 {
        let grad = self.gradient(x);
        (0..self.dim())
            .map(|i| (x[i] - (x[i] - grad[i]).clamp(self.lower[i], self.upper[i])).abs())
            .fold(0.0, f64::max)
    }

    fn project(&self, x: &mut DVector<f64>) {
        for i in 0..self.dim() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensionSolution {
    pub t_ref: DVector<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    /// Indices sitting exactly on a bound at the solution.
    pub active_set: BTreeSet<usize>,
    pub iterations: usize,
    /// True when the projected-gradient fallback produced the answer.
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Reusable solver. Holds scratch buffers, so one instance must not be
/// shared between concurrent calls.
#[derive(Debug, Clone)]
pub struct BoxQpSolver {
    tol: f64,
    max_fallback_iter: usize,
    state: Vec<Bound>,
    free: Vec<usize>,
}

impl BoxQpSolver {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::contract(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        Ok(BoxQpSolver {
            tol,
            max_fallback_iter: 200_000,
            state: Vec::new(),
            free: Vec::new(),
        })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn snap(&self, p: &QpProblem, x: &mut DVector<f64>) {
        for (i, s) in self.state.iter().enumerate() {
            match s {
                Bound::Lower => x[i] = p.lower[i],
                Bound::Upper => x[i] = p.upper[i],
                Bound::Free => {}
            }
        }
    }

    /// Minimiser of the reduced problem on the current free set.
    fn free_minimiser(&mut self, p: &QpProblem, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.free.clear();
        self.free
            .extend((0..p.dim()).filter(|&i| self.state[i] == Bound::Free));
        let nf = self.free.len();
        let mut target = x.clone();
        if nf == 0 {
            return Ok(target);
        }
        let mut hff = DMatrix::zeros(nf, nf);
        let mut rhs = DVector::zeros(nf);
        for (a, &i) in self.free.iter().enumerate() {
            let mut r = -p.g[i];
            for j in 0..p.dim() {
                if self.state[j] != Bound::Free {
                    r -= p.h[(i, j)] * x[j];
                }
            }
            rhs[a] = r;
            for (b, &j) in self.free.iter().enumerate() {
                hff[(a, b)] = p.h[(i, j)];
            }
        }
        let chol = hff
            .cholesky()
            .ok_or_else(|| Error::Numerical("Hessian block is not positive definite".into()))?;
        let sol = chol.solve(&rhs);
        for (a, &i) in self.free.iter().enumerate() {
            target[i] = sol[a];
        }
        Ok(target)
    }

    pub fn solve(&mut self, p: &QpProblem) -> Result<TensionSolution> {
        let m = p.dim();
        // Factorisation doubles as the positive-definiteness check.
        let full =
            p.h.clone()
                .cholesky()
                .ok_or_else(|| Error::Numerical("H is not positive definite".into()))?;

        // Start from the projection of the unconstrained minimiser.
        let mut x = full.solve(&(-&p.g));
        self.state.clear();
        for i in 0..m {
            let s = if x[i] <= p.lower[i] {
                Bound::Lower
            } else if x[i] >= p.upper[i] {
                Bound::Upper
            } else {
                Bound::Free
            };
            self.state.push(s);
        }
        self.snap(p, &mut x);

        let max_iter = 10 * m + 20;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            iterations += 1;
            let target = self.free_minimiser(p, &x)?;

            // Longest feasible step towards the reduced minimiser.
            let mut alpha = 1.0;
            let mut blocking = None;
            for &i in &self.free {
                let step = target[i] - x[i];
                if step < 0.0 && target[i] < p.lower[i] {
                    let a = (p.lower[i] - x[i]) / step;
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, Bound::Lower));
                    }
                } else if step > 0.0 && target[i] > p.upper[i] {
                    let a = (p.upper[i] - x[i]) / step;
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, Bound::Upper));
                    }
                }
            }

            if let Some((i, bound)) = blocking {
                let alpha = alpha.max(0.0);
                for &k in &self.free {
                    x[k] += alpha * (target[k] - x[k]);
                }
                self.state[i] = bound;
                self.snap(p, &mut x);
                p.project(&mut x);
                continue;
            }

            for &k in &self.free {
                x[k] = target[k];
            }
            p.project(&mut x);

            // Multipliers of the working set: release the most violated one.
            let grad = p.gradient(&x);
            let mut worst = None;
            let mut worst_val = -self.tol;
            for i in 0..m {
                let lambda = match self.state[i] {
                    Bound::Lower => grad[i],
                    Bound::Upper => -grad[i],
                    Bound::Free => continue,
                };
                if lambda < worst_val {
                    worst_val = lambda;
                    worst = Some(i);
                }
            }
            match worst {
                Some(i) => self.state[i] = Bound::Free,
                None => {
                    converged = true;
                    break;
                }
            }
        }

        let mut used_fallback = false;
        if !converged || p.kkt_residual(&x) > self.tol {
            used_fallback = true;
            iterations += self.projected_gradient(p, &mut x);
        }

        let active_set = (0..m)
            .filter(|&i| x[i] == p.lower[i] || x[i] == p.upper[i])
            .collect();
        Ok(TensionSolution {
            objective: p.objective(&x),
            kkt_residual: p.kkt_residual(&x),
            t_ref: x,
            active_set,
            iterations,
            used_fallback,
        })
    }

    /// Projected gradient with a fixed 1/L step. Returns iterations used.
    fn projected_gradient(&self, p: &QpProblem, x: &mut DVector<f64>) -> usize {
        let lipschitz = (0..p.dim())
            .map(|i| p.h.row(i).abs().sum())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let step = 1.0 / lipschitz;
        for k in 0..self.max_fallback_iter {
            if p.kkt_residual(x) <= self.tol {
                return k;
            }
            let grad = p.gradient(x);
            *x -= grad * step;
            p.project(x);
        }
        self.max_fallback_iter
    }
}

/// One-shot convenience wrapper around [`BoxQpSolver`].
pub fn solve_box_qp(p: &QpProblem, tol: f64) -> Result<TensionSolution> {
    BoxQpSolver::new(tol)?.solve(p)
}
