//! Cost and analytic gradient of the spline-parametrized gate-design
//! problem.
//!
//! The pulse unitary is `U(h⃗, θ) = R_Z(θ) D_S ⋯ D_1` with
//! `D_s = exp(-i M(c⃗_s))`, the compiled expansion evaluated on segment
//! `s`'s polynomial. The cost is
//! `J = ½ Σ_r (1 - Re⟨φ_r|U|ψ_r⟩) + λ_T T`.
//!
//! Gradients accumulate segment by segment from forward states
//! `ψ^{(s)} = D_s ⋯ D_1 ψ_r` and backward states
//! `λ^{(s)} = (R D_S ⋯ D_{s+1})† φ_r`:
//!
//! ```text
//! ∂⟨φ|U|ψ⟩/∂c_j = -i ⟨λ^{(s-1)}| Φ_s(∂M_j) |ψ^{(s-1)}⟩
//!              = -i ∂a^{(j)} · Φ_sᵀ w,   w_μ = ⟨λ^{(s-1)}|L_μ|ψ^{(s-1)}⟩
//! ```
//!
//! so each segment needs one transposed adjoint-series application per
//! trajectory and one dot product per parameter. Everything is pulled back
//! through the spline Jacobian at the end. Segment eigendecompositions are
//! computed once per evaluation and shared by the cost, all trajectories,
//! and both sweep directions.

use std::sync::Arc;

use rayon::prelude::*;

use crate::coeffs::CoeffTensor;
use crate::error::{MagnusError, Result};
use crate::eval::{truncation_error, Propagator};
use crate::grad::{adjoint_series_transpose, build_grad_tensors, d_a_dd, d_a_dt, GradTensors};
use crate::lie::{compute_structure_constants, LieBasis, StructureConstants};
use crate::operator::HermitianOperator;
use crate::optim::bfgs::Bound;
use crate::spline::{c_coeff_index, c_dt_index, spline_jacobian, spline_to_segments, HermiteSpline};
use crate::{C64, CMat, CVec, RVec};

/// Compiled model bundle: everything an optimization or scan needs,
/// derived deterministically from an artifact.
pub struct CompiledModel {
    pub basis: LieBasis,
    pub sc: StructureConstants,
    pub tensor: CoeffTensor,
    pub grads: GradTensors,
    pub a: HermitianOperator,
    pub b: HermitianOperator,
}

impl CompiledModel {
    pub fn new(basis: LieBasis, sc: StructureConstants, tensor: CoeffTensor) -> Result<Self> {
        let a = basis.assemble(basis.a_coeffs())?;
        let b = basis.assemble(basis.b_coeffs())?;
        let grads = build_grad_tensors(&tensor);
        Ok(CompiledModel { basis, sc, tensor, grads, a, b })
    }

    /// Rebuild from a loaded artifact (structure constants are recomputed;
    /// they are deterministic given the basis).
    pub fn from_artifact(tensor: CoeffTensor, basis: LieBasis) -> Result<Self> {
        let sc = compute_structure_constants(&basis)?;
        Self::new(basis, sc, tensor)
    }

    pub fn dim_h(&self) -> usize {
        self.basis.dim_h()
    }
}

/// One gate-design problem instance.
pub struct ControlProblem {
    pub model: Arc<CompiledModel>,
    /// Target unitary on the full model space.
    pub target: CMat,
    /// `(ψ_r, φ_r = target ψ_r)` pairs.
    pub trajectories: Vec<(CVec, CVec)>,
    /// Spline smoothness class L; segment polynomials have degree 2L+1.
    pub smoothness: usize,
    /// Total-duration box `(T_min, T_max)`, enforced per segment as
    /// `T_min/S <= Δt_s <= T_max/S`.
    pub t_bounds: (f64, f64),
    /// Duration Lagrange weight λ_T.
    pub lambda_t: f64,
    /// Threshold ε\* on the summed per-segment truncation error.
    pub eps_star: f64,
    /// Adjoint-series truncation order (defaults to k_M).
    pub k_d: usize,
    /// Hard cap on spline refinement.
    pub segment_cap: usize,
    /// Diagonal of the single-qubit-rotation generator `K` (R = exp(-iθK)).
    pub rz_k_diag: RVec,
}

/// Everything a cost evaluation reports.
#[derive(Debug, Clone)]
pub struct CostEval {
    pub j: f64,
    pub j_t: f64,
    pub j_total: f64,
    pub overlaps: Vec<C64>,
    pub eps_segments: Vec<f64>,
    pub sum_eps: f64,
    pub duration: f64,
}

struct SegmentData {
    /// None for zero-length segments (identity propagator).
    prop: Option<Propagator>,
    total: RVec,
    eps: f64,
    dt: f64,
    controls: Vec<f64>,
}

impl ControlProblem {
    pub fn dim(&self) -> usize {
        self.model.dim_h()
    }

    /// Per-coordinate bounds for the packed vector `(h⃗, θ)`.
    pub fn bounds_for(&self, spline: &HermiteSpline) -> Vec<Bound> {
        let s = spline.segment_count();
        let mut bounds = Vec::with_capacity(spline.param_count() + 1);
        for _ in 0..s {
            bounds.push(Bound::interval(self.t_bounds.0 / s as f64, self.t_bounds.1 / s as f64));
        }
        for _ in s..spline.param_count() {
            bounds.push(Bound::free());
        }
        bounds.push(Bound::free()); // θ
        bounds
    }

    pub fn pack(&self, spline: &HermiteSpline, theta: f64) -> RVec {
        let h = spline.to_params();
        let mut out = Vec::with_capacity(h.len() + 1);
        out.extend(h.iter().copied());
        out.push(theta);
        RVec::from_vec(out)
    }

    pub fn unpack(&self, x: &RVec, segments: usize) -> Result<(HermiteSpline, f64)> {
        let h = RVec::from_iterator(x.len() - 1, x.iter().take(x.len() - 1).copied());
        let spline = HermiteSpline::from_params(self.smoothness, segments, &h)?;
        Ok((spline, x[x.len() - 1]))
    }

    /// Diagonal of `R_Z(θ)^{⊗n}` in the model space.
    fn rz_diag(&self, theta: f64) -> CVec {
        CVec::from_iterator(
            self.rz_k_diag.len(),
            self.rz_k_diag.iter().map(|k| C64::new(0.0, -theta * k).exp()),
        )
    }

    fn segment_data(&self, spline: &HermiteSpline) -> Result<Vec<SegmentData>> {
        let segs = spline_to_segments(spline)?;
        let m = self.model.tensor.meta.m as usize;
        let k_max = self.model.tensor.meta.k_max as usize;
        segs.segments
            .par_iter()
            .map(|(dt, poly)| {
                if poly.degree() > m {
                    return Err(MagnusError::Validation(format!(
                        "segment polynomial degree {} exceeds compiled maximum {m}; \
                         the artifact must be generated with m >= 2L+1",
                        poly.degree()
                    )));
                }
                let mut controls = poly.coeffs().to_vec();
                controls.resize(m + 1, 0.0);
                if *dt == 0.0 {
                    return Ok(SegmentData {
                        prop: None,
                        total: RVec::zeros(self.model.basis.dim_g()),
                        eps: 0.0,
                        dt: 0.0,
                        controls,
                    });
                }
                let slices = self.model.tensor.eval_slices(*dt, &controls);
                let eps = truncation_error(&slices[k_max - 1], &self.model.tensor.basis_l1_norms);
                let mut total = RVec::zeros(self.model.basis.dim_g());
                for s in &slices {
                    total += s;
                }
                let op = self.model.basis.assemble(&total)?;
                Ok(SegmentData {
                    prop: Some(Propagator::new(&op)?),
                    total,
                    eps,
                    dt: *dt,
                    controls,
                })
            })
            .collect()
    }

    fn apply(prop: &Option<Propagator>, v: &CVec) -> CVec {
        match prop {
            Some(p) => p.apply(v),
            None => v.clone(),
        }
    }

    fn apply_adjoint(prop: &Option<Propagator>, v: &CVec) -> CVec {
        match prop {
            Some(p) => p.apply_adjoint(v),
            None => v.clone(),
        }
    }

    fn cost_from_segments(&self, segments: &[SegmentData], theta: f64) -> CostEval {
        let rz = self.rz_diag(theta);
        let overlaps: Vec<C64> = self
            .trajectories
            .par_iter()
            .map(|(psi0, phi)| {
                let mut psi = psi0.clone();
                for seg in segments {
                    psi = Self::apply(&seg.prop, &psi);
                }
                psi.zip_apply(&rz, |v, r| *v *= r);
                phi.dotc(&psi)
            })
            .collect();
        let j = 0.5 * overlaps.iter().map(|o| 1.0 - o.re).sum::<f64>();
        let duration: f64 = segments.iter().map(|s| s.dt).sum();
        let j_t = self.lambda_t * duration;
        let eps_segments: Vec<f64> = segments.iter().map(|s| s.eps).collect();
        let sum_eps = eps_segments.iter().sum();
        CostEval {
            j,
            j_t,
            j_total: j + j_t,
            overlaps,
            eps_segments,
            sum_eps,
            duration,
        }
    }

    /// Cost only.
    pub fn cost(&self, spline: &HermiteSpline, theta: f64) -> Result<CostEval> {
        let segments = self.segment_data(spline)?;
        Ok(self.cost_from_segments(&segments, theta))
    }

    /// Cost and the full analytic gradient with respect to `(h⃗, θ)`.
    pub fn cost_and_gradient(
        &self,
        spline: &HermiteSpline,
        theta: f64,
    ) -> Result<(CostEval, RVec)> {
        let segments = self.segment_data(spline)?;
        let eval = self.cost_from_segments(&segments, theta);
        let n_seg = segments.len();
        let m = self.model.tensor.meta.m as usize;
        let dim_g = self.model.basis.dim_g();
        let rz = self.rz_diag(theta);

        // Per-trajectory forward and backward sweeps; per segment collect
        // V_s = Σ_r Im(Φᵀ w^{(r,s)}) and the θ term.
        struct TrajectoryPiece {
            v_per_segment: Vec<RVec>,
            dtheta: f64,
        }
        let pieces: Vec<TrajectoryPiece> = self
            .trajectories
            .par_iter()
            .map(|(psi0, phi)| {
                // Forward states ψ^{(s)}, s = 0..=S.
                let mut fwd = Vec::with_capacity(n_seg + 1);
                fwd.push(psi0.clone());
                for seg in &segments {
                    let next = Self::apply(&seg.prop, fwd.last().unwrap());
                    fwd.push(next);
                }
                // θ derivative: -i<φ|K R ψ^{(S)}>; J picks up -Im/2 later.
                let mut z = fwd[n_seg].clone();
                z.zip_apply(&rz, |v, r| *v *= r);
                let kz = CVec::from_iterator(
                    z.len(),
                    z.iter().zip(self.rz_k_diag.iter()).map(|(v, k)| v * C64::new(*k, 0.0)),
                );
                let dtheta = phi.dotc(&kz).im;

                // Backward states λ^{(s)} and per-segment contractions.
                let mut lambda = phi.clone();
                lambda.zip_apply(&rz, |v, r| *v *= r.conj());
                let mut v_per_segment = vec![RVec::zeros(dim_g); n_seg];
                for s in (0..n_seg).rev() {
                    lambda = Self::apply_adjoint(&segments[s].prop, &lambda);
                    // w_mu = <λ^{(s-1)} | L_mu | ψ^{(s-1)}>; only Im(w)
                    // survives Re(-i ∂a·Φᵀw), and Φᵀ is real-linear.
                    let psi = &fwd[s];
                    let mut w_im = RVec::zeros(dim_g);
                    for mu in 0..dim_g {
                        let lpsi = self.model.basis.element(mu).matrix() * psi;
                        w_im[mu] = lambda.dotc(&lpsi).im;
                    }
                    v_per_segment[s] = adjoint_series_transpose(
                        &self.model.sc,
                        &segments[s].total,
                        &w_im,
                        self.k_d,
                    );
                }
                TrajectoryPiece { v_per_segment, dtheta }
            })
            .collect();

        let mut v_sum: Vec<RVec> = vec![RVec::zeros(dim_g); n_seg];
        let mut dtheta = 0.0;
        for piece in &pieces {
            for (acc, v) in v_sum.iter_mut().zip(&piece.v_per_segment) {
                *acc += v;
            }
            dtheta += piece.dtheta;
        }
        dtheta *= -0.5;

        // dJ/dc in the (Δt_s, d_0..d_m) packing.
        let mut dj_dc = RVec::zeros(n_seg * (m + 2));
        for (s, seg) in segments.iter().enumerate() {
            let poly = crate::eval::PolynomialControl::new(seg.controls.clone())?;
            let da_dt = d_a_dt(&self.model.grads, seg.dt, &poly)?;
            dj_dc[c_dt_index(s, m)] = -0.5 * da_dt.dot(&v_sum[s]);
            for alpha in 0..=m {
                let da = d_a_dd(&self.model.grads, seg.dt, &poly, alpha as u8)?;
                dj_dc[c_coeff_index(s, alpha, m)] = -0.5 * da.dot(&v_sum[s]);
            }
        }

        // Pull back through the spline Jacobian and add the duration term.
        let jac = spline_jacobian(spline)?;
        let dj_dh = jac.transpose() * &dj_dc;
        let mut grad = Vec::with_capacity(dj_dh.len() + 1);
        grad.extend(dj_dh.iter().copied());
        for item in grad.iter_mut().take(n_seg) {
            *item += self.lambda_t;
        }
        grad.push(dtheta);
        Ok((eval, RVec::from_vec(grad)))
    }
}
