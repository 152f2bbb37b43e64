//! Evaluation of the compiled expansion: coefficient polynomials, effective
//! Hamiltonians, propagators, truncation-error estimate, convergence check.

use crate::coeffs::CoeffTensor;
use crate::error::{MagnusError, Result};
use crate::lie::LieBasis;
use crate::operator::HermitianOperator;
use crate::quad::integrate_adaptive;
use crate::{C64, CMat, CVec, RVec};

/// Control polynomial `d(t) = Σ_γ d_γ t^γ / γ!`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialControl {
    coeffs: Vec<f64>,
}

impl PolynomialControl {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(MagnusError::Validation("control needs at least d_0".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(MagnusError::Validation("control coefficients must be finite".into()));
        }
        Ok(PolynomialControl { coeffs })
    }

    pub fn zero(degree: usize) -> Self {
        PolynomialControl { coeffs: vec![0.0; degree + 1] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `d(t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// `d^(order)(t)`; exact for the polynomial.
    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        // d^(o)(t) = Σ_{γ >= o} d_γ t^{γ-o} / (γ-o)!
        let mut acc = 0.0;
        let mut tp = 1.0;
        let mut fact = 1.0;
        for (idx, gamma) in (order..self.coeffs.len()).enumerate() {
            if idx > 0 {
                tp *= t;
                fact *= idx as f64;
            }
            acc += self.coeffs[gamma] * tp / fact;
        }
        acc
    }

    /// Re-expand about `t0`: the returned polynomial satisfies
    /// `shifted(s) = self(t0 + s)`. In the `d_γ/γ!` convention the new
    /// coefficients are simply the derivatives at `t0`.
    pub fn shift(&self, t0: f64) -> Self {
        let coeffs = (0..self.coeffs.len()).map(|o| self.derivative(t0, o)).collect();
        PolynomialControl { coeffs }
    }
}

/// Per-order coefficient slices plus the assembled operator.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    /// `a^{[k]}`, k = 1..=k_M (index k-1).
    pub slices: Vec<RVec>,
    /// `Σ_k a^{[k]}`.
    pub total: RVec,
    /// Segment duration the slices were evaluated at.
    pub t: f64,
    /// `Σ_μ total_μ L_μ`.
    pub operator: HermitianOperator,
}

/// Evaluate the per-order coefficient slices `a^{[k]}(t, d⃗)`.
///
/// The convergence criterion is a separate advisory check
/// ([`check_convergence`]); exceeding it degrades accuracy but is not an
/// error here.
pub fn eval_coeffs(ct: &CoeffTensor, t: f64, d: &PolynomialControl) -> Result<Vec<RVec>> {
    if !(t > 0.0) {
        return Err(MagnusError::Validation(format!("evaluation time must be positive, got {t}")));
    }
    if d.degree() > ct.meta.m as usize {
        return Err(MagnusError::Validation(format!(
            "control degree {} exceeds the compiled maximum {}",
            d.degree(),
            ct.meta.m
        )));
    }
    let mut dvec = d.coeffs().to_vec();
    dvec.resize(ct.meta.m as usize + 1, 0.0);
    Ok(ct.eval_slices(t, &dvec))
}

/// Assemble `Σ_μ (Σ_k a^{[k]}_μ) L_μ` into an [`EffectiveHamiltonian`].
pub fn assemble(basis: &LieBasis, slices: Vec<RVec>, t: f64) -> Result<EffectiveHamiltonian> {
    let dim_g = basis.dim_g();
    if slices.is_empty() || slices.iter().any(|s| s.len() != dim_g) {
        return Err(MagnusError::DimensionMismatch(format!(
            "slice lengths do not match basis size {dim_g}"
        )));
    }
    let mut total = RVec::zeros(dim_g);
    for s in &slices {
        total += s;
    }
    let operator = basis.assemble(&total)?;
    Ok(EffectiveHamiltonian { slices, total, t, operator })
}

/// Unitary `exp(-i M)` through the Hermitian eigendecomposition of `M`.
/// Eigenpairs are computed once and reused across repeated applications.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigvecs: CMat,
    phases: CVec,
}

impl Propagator {
    pub fn new(m: &HermitianOperator) -> Result<Self> {
        if m.matrix().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MagnusError::Validation("non-finite entries in effective Hamiltonian".into()));
        }
        let eig = crate::eigen::hermitian_eigen(m.matrix())?;
        let phases = CVec::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| C64::new(0.0, -l).exp()),
        );
        Ok(Propagator { eigvecs: eig.eigenvectors, phases })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `exp(-i M) ψ`.
    pub fn apply(&self, psi: &CVec) -> CVec {
        let mut y = self.eigvecs.adjoint() * psi;
        y.zip_apply(&self.phases, |v, p| *v *= p);
        &self.eigvecs * y
    }

    /// `exp(+i M) ψ` (the adjoint propagator).
    pub fn apply_adjoint(&self, psi: &CVec) -> CVec {
        let mut y = self.eigvecs.adjoint() * psi;
        y.zip_apply(&self.phases, |v, p| *v *= p.conj());
        &self.eigvecs * y
    }

    /// Dense `exp(-i M)`.
    pub fn unitary(&self) -> CMat {
        let mut scaled = self.eigvecs.clone();
        for (j, p) in self.phases.iter().enumerate() {
            for v in scaled.column_mut(j).iter_mut() {
                *v *= p;
            }
        }
        scaled * self.eigvecs.adjoint()
    }
}

/// Propagate a normalized state under the effective Hamiltonian:
/// `exp(-i M) ψ`.
pub fn propagate(m: &EffectiveHamiltonian, psi: &CVec) -> Result<CVec> {
    if psi.len() != m.operator.dim() {
        return Err(MagnusError::DimensionMismatch(format!(
            "state of length {} vs operator dim {}",
            psi.len(),
            m.operator.dim()
        )));
    }
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(MagnusError::Validation(format!("state norm {n} is not 1 within 1e-10")));
    }
    Ok(Propagator::new(&m.operator)?.apply(psi))
}

/// Truncation-error estimate from the top-order slice:
/// `ε_M = sqrt(Σ_μ (a^{[k_M]}_μ)² ‖L_μ‖₁²)`.
pub fn truncation_error(top_slice: &RVec, basis_l1_norms: &[f64]) -> f64 {
    top_slice
        .iter()
        .zip(basis_l1_norms)
        .map(|(a, n)| (a * n).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Magnus convergence criterion `∫_0^t ‖A + d(s) B‖₂ ds < π`.
///
/// The spectral-norm integral is evaluated with an adaptive composite
/// Gauss–Legendre rule to 1e-8 relative. The criterion is sufficient only:
/// exceeding it is an advisory, not a hard failure.
pub fn check_convergence(
    a: &HermitianOperator,
    b: &HermitianOperator,
    t: f64,
    d: &PolynomialControl,
) -> Result<(f64, bool)> {
    if a.dim() != b.dim() {
        return Err(MagnusError::DimensionMismatch("generator dims differ".into()));
    }
    if t <= 0.0 {
        return Ok((0.0, true));
    }
    let bound = integrate_adaptive(
        |s| {
            let h = a.matrix() + b.matrix() * C64::new(d.value(s), 0.0);
            HermitianOperator::new_unchecked(h).spectral_norm()
        },
        0.0,
        t,
        1e-8,
    )?;
    Ok((bound, bound < std::f64::consts::PI))
}
