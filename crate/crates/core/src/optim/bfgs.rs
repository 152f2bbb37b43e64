//! Box-constrained quasi-Newton minimizer.
//!
//! Gradient-projection BFGS: a dense inverse-Hessian approximation drives
//! the search direction restricted to free variables (a variable counts as
//! bound when it sits on its box face with the gradient pushing outward),
//! clipped to a feasible ray and explored with a strong-Wolfe line search
//! capped at the first new bound hit. Accepted iterates are monotone in `f`
//! and never leave the box; Wolfe curvature keeps the update pairs well
//! conditioned. The dense update is affordable because parameter vectors
//! stay in the hundreds here.

use crate::{RMat, RVec};

/// Per-coordinate interval; use infinities for unbounded coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn free() -> Self {
        Bound { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }
    pub fn interval(lower: f64, upper: f64) -> Self {
        Bound { lower, upper }
    }
}

/// Outcome of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// Accepted a descent step.
    Accepted,
    /// No descent found; the iterate is unchanged. Usually a stationary
    /// point at working precision.
    NoProgress,
}

const ARMIJO_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_SEARCH_EVALS: usize = 30;
const BOUND_TOL: f64 = 1e-12;

/// The optimizer state. Call [`BoundedBfgs::step`] repeatedly with a fused
/// value-and-gradient callback.
pub struct BoundedBfgs {
    x: RVec,
    f: f64,
    g: RVec,
    bounds: Vec<Bound>,
    /// Inverse-Hessian approximation; `None` until the first curvature pair.
    h_inv: Option<RMat>,
    evaluated: bool,
}

struct ProbeResult {
    x: RVec,
    f: f64,
    g: RVec,
    slope: f64,
}

impl BoundedBfgs {
    pub fn new(x0: RVec, bounds: Vec<Bound>) -> Self {
        assert_eq!(x0.len(), bounds.len());
        let n = x0.len();
        let mut x = x0;
        for i in 0..n {
            x[i] = x[i].clamp(bounds[i].lower, bounds[i].upper);
        }
        BoundedBfgs { x, f: f64::INFINITY, g: RVec::zeros(n), bounds, h_inv: None, evaluated: false }
    }

    pub fn x(&self) -> &RVec {
        &self.x
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn gradient(&self) -> &RVec {
        &self.g
    }

    /// Infinity norm of the projected gradient (0 at a box-constrained
    /// stationary point).
    pub fn projected_gradient_norm(&self) -> f64 {
        let mut out = 0.0_f64;
        for i in 0..self.x.len() {
            let step = (self.x[i] - self.g[i]).clamp(self.bounds[i].lower, self.bounds[i].upper);
            out = out.max((step - self.x[i]).abs());
        }
        out
    }

    /// Variables pinned to a face with the gradient pushing outward.
    fn active_mask(&self) -> Vec<bool> {
        (0..self.x.len())
            .map(|i| {
                let b = self.bounds[i];
                (self.x[i] <= b.lower + BOUND_TOL && self.g[i] > 0.0)
                    || (self.x[i] >= b.upper - BOUND_TOL && self.g[i] < 0.0)
            })
            .collect()
    }

    fn direction(&self, mask: &[bool]) -> RVec {
        let n = self.x.len();
        let g_free = RVec::from_iterator(
            n,
            self.g.iter().enumerate().map(|(i, v)| if mask[i] { 0.0 } else { *v }),
        );
        let mut d = match &self.h_inv {
            Some(h) => -(h * &g_free),
            None => {
                let norm = g_free.norm();
                if norm > 1.0 {
                    -(&g_free / norm)
                } else {
                    -g_free.clone()
                }
            }
        };
        for (i, v) in d.iter_mut().enumerate() {
            if mask[i] {
                *v = 0.0;
            }
        }
        d
    }

    /// Zero out components that would immediately leave the box, then the
    /// largest feasible step along the remaining ray.
    fn clip_to_feasible(&self, dir: &mut RVec) -> f64 {
        for i in 0..dir.len() {
            let b = self.bounds[i];
            if (self.x[i] <= b.lower + BOUND_TOL && dir[i] < 0.0)
                || (self.x[i] >= b.upper - BOUND_TOL && dir[i] > 0.0)
            {
                dir[i] = 0.0;
            }
        }
        let mut alpha_max = f64::INFINITY;
        for i in 0..dir.len() {
            let b = self.bounds[i];
            if dir[i] > 0.0 {
                alpha_max = alpha_max.min((b.upper - self.x[i]) / dir[i]);
            } else if dir[i] < 0.0 {
                alpha_max = alpha_max.min((b.lower - self.x[i]) / dir[i]);
            }
        }
        alpha_max.max(0.0)
    }

    fn probe<F>(&self, dir: &RVec, alpha: f64, eval: &mut F) -> ProbeResult
    where
        F: FnMut(&RVec) -> (f64, RVec),
    {
        let mut x = &self.x + dir * alpha;
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.bounds[i].lower, self.bounds[i].upper);
        }
        let (f, g) = eval(&x);
        let slope = g.dot(dir);
        ProbeResult { x, f, g, slope }
    }

    /// Strong-Wolfe line search along `dir`, capped at `alpha_max`
    /// (bracketing phase then bisection zoom).
    fn wolfe_search<F>(&self, dir: &RVec, alpha_max: f64, eval: &mut F) -> Option<ProbeResult>
    where
        F: FnMut(&RVec) -> (f64, RVec),
    {
        let slope0 = self.g.dot(dir);
        if slope0 >= 0.0 {
            return None;
        }
        let mut evals = 0usize;
        let mut alpha_prev = 0.0_f64;
        let mut f_prev = self.f;
        let mut alpha = alpha_max.min(1.0);
        let mut bracket: Option<(f64, f64, f64)> = None; // (lo, f_lo, hi)
        let mut first = true;
        while evals < MAX_SEARCH_EVALS {
            let p = self.probe(dir, alpha, eval);
            evals += 1;
            if p.f > self.f + ARMIJO_C1 * alpha * slope0 || (!first && p.f >= f_prev) {
                bracket = Some((alpha_prev, f_prev, alpha));
                break;
            }
            if p.slope.abs() <= -WOLFE_C2 * slope0 {
                return Some(p);
            }
            if p.slope >= 0.0 {
                bracket = Some((alpha, p.f, alpha_prev));
                break;
            }
            if alpha >= alpha_max {
                // Bound-limited step that still satisfies Armijo.
                return Some(p);
            }
            alpha_prev = alpha;
            f_prev = p.f;
            alpha = (2.0 * alpha).min(alpha_max);
            first = false;
        }
        let (mut lo, mut f_lo, mut hi) = bracket?;
        let mut best: Option<ProbeResult> = None;
        while evals < MAX_SEARCH_EVALS {
            let mid = 0.5 * (lo + hi);
            if (hi - lo).abs() * dir.norm() < 1e-16 {
                break;
            }
            let p = self.probe(dir, mid, eval);
            evals += 1;
            if p.f > self.f + ARMIJO_C1 * mid * slope0 || p.f >= f_lo {
                hi = mid;
            } else {
                if p.slope.abs() <= -WOLFE_C2 * slope0 {
                    return Some(p);
                }
                if p.slope * (hi - lo) >= 0.0 {
                    hi = lo;
                }
                lo = mid;
                f_lo = p.f;
                best = Some(p);
            }
        }
        // Fall back to the best Armijo point seen in the zoom.
        best
    }

    fn bfgs_update(&mut self, s: &RVec, y: &RVec) {
        let sy = s.dot(y);
        if sy <= 1e-12 * s.norm() * y.norm() {
            return;
        }
        let n = s.len();
        let rho = 1.0 / sy;
        if self.h_inv.is_none() {
            // Seed scaled to the newest curvature.
            self.h_inv = Some(RMat::identity(n, n) * (sy / y.dot(y)));
        }
        let h = self.h_inv.as_mut().unwrap();
        // H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ, expanded as
        // H + (ρ + ρ² yᵀHy) s sᵀ - ρ (s (Hy)ᵀ + (Hy) sᵀ)  [H symmetric]
        let hy = &*h * y;
        let yhy = y.dot(&hy);
        let coeff_ss = rho + rho * rho * yhy;
        for i in 0..n {
            let si = s[i];
            let hyi = hy[i];
            for j in 0..n {
                h[(i, j)] += coeff_ss * si * s[j] - rho * (si * hy[j] + hyi * s[j]);
            }
        }
    }

    /// One quasi-Newton iteration. `eval` returns `(f, gradient)` and must
    /// be deterministic for a given `x`.
    pub fn step<F>(&mut self, eval: &mut F) -> StepOutcome
    where
        F: FnMut(&RVec) -> (f64, RVec),
    {
        if !self.evaluated {
            let (f, g) = eval(&self.x);
            self.f = f;
            self.g = g;
            self.evaluated = true;
        }
        let mask = self.active_mask();
        for attempt in 0..2 {
            let mut dir = if attempt == 0 {
                self.direction(&mask)
            } else {
                // Retry once as plain projected descent.
                self.h_inv = None;
                self.direction(&mask)
            };
            if dir.dot(&self.g) >= 0.0 {
                continue;
            }
            let alpha_max = self.clip_to_feasible(&mut dir);
            if alpha_max <= 0.0 || dir.norm() == 0.0 {
                continue;
            }
            if let Some(p) = self.wolfe_search(&dir, alpha_max, eval) {
                let s = &p.x - &self.x;
                let y = &p.g - &self.g;
                self.bfgs_update(&s, &y);
                self.x = p.x;
                self.f = p.f;
                self.g = p.g;
                return StepOutcome::Accepted;
            }
        }
        StepOutcome::NoProgress
    }
}

/// Convenience driver: run up to `max_iter` steps or until the projected
/// gradient drops below `g_tol`. Returns the iteration count.
pub fn minimize_simple<F>(opt: &mut BoundedBfgs, eval: &mut F, max_iter: usize, g_tol: f64) -> usize
where
    F: FnMut(&RVec) -> (f64, RVec),
{
    for it in 0..max_iter {
        match opt.step(eval) {
            StepOutcome::Accepted => {
                if opt.projected_gradient_norm() <= g_tol {
                    return it + 1;
                }
            }
            StepOutcome::NoProgress => return it,
        }
    }
    max_iter
}

/// Dense quadratic used by the self-tests.
#[doc(hidden)]
pub fn quadratic_bowl<'a>(
    center: &'a RVec,
    hess_diag: &'a RVec,
) -> impl Fn(&RVec) -> (f64, RVec) + 'a {
    move |x: &RVec| {
        let d = x - center;
        let f = 0.5 * d.iter().zip(hess_diag.iter()).map(|(v, h)| h * v * v).sum::<f64>();
        let g = RVec::from_iterator(x.len(), d.iter().zip(hess_diag.iter()).map(|(v, h)| h * v));
        (f, g)
    }
}
