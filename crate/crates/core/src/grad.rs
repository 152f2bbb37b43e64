//! Analytic derivatives of the compiled expansion and of the propagator.
//!
//! Both derivative tensors are pure reindexings of `T` and are rebuilt at
//! load time rather than persisted:
//!
//! * time: `T̃ = (k + Σγ) · T`, giving
//!   `∂a/∂t = Σ T̃ t^{k-1} Π d_γ t^γ`;
//! * controls: `D^{(α)}` collects, for every `T` entry and every position of
//!   its exponent tuple, the entry with that position removed — so
//!   `∂a/∂d_α = Σ D^{(α)} t^{k+α} Π d_{γ'} t^{γ'}`, with multiplicities
//!   arising naturally from repeated exponents.
//!
//! The propagator derivative uses the truncated adjoint series
//! `∂U = -i U Σ_{j=0}^{k_D} i^j/(j+1)! ad_M^j(∂M)`. When `M` and `∂M` both
//! live in the Lie basis the series is a structure-constant recursion: with
//! the Hermitian bracket, `ad_M` contributes a factor `i` per level, so the
//! coefficient recursion `Σ_j (-1)^j/(j+1)! C_a^j (∂a)` stays real.

use std::collections::BTreeMap;

use crate::coeffs::{plan_from_sorted, CoeffTensor, EvalPlan, TensorKey};
use crate::error::{MagnusError, Result};
use crate::eval::{EffectiveHamiltonian, PolynomialControl, Propagator};
use crate::lie::{LieBasis, StructureConstants};
use crate::operator::{commutator, HermitianOperator};
use crate::{C64, CMat, RVec};

/// Derivative tensors derived from a [`CoeffTensor`].
#[derive(Debug, Clone)]
pub struct GradTensors {
    k_max: u8,
    gamma: u8,
    m: u8,
    dim_g: usize,
    ttilde: BTreeMap<TensorKey, f64>,
    d_by_alpha: Vec<BTreeMap<TensorKey, f64>>,
    ttilde_plan: EvalPlan,
    d_plans: Vec<EvalPlan>,
}

impl GradTensors {
    pub fn dim_g(&self) -> usize {
        self.dim_g
    }

    pub fn max_alpha(&self) -> u8 {
        self.m
    }

    pub fn ttilde_entries(&self) -> &BTreeMap<TensorKey, f64> {
        &self.ttilde
    }

    pub fn d_entries(&self, alpha: u8) -> &BTreeMap<TensorKey, f64> {
        &self.d_by_alpha[alpha as usize]
    }
}

/// Build both derivative tensors from `T`.
pub fn build_grad_tensors(ct: &CoeffTensor) -> GradTensors {
    let m = ct.meta.m as usize;
    let mut ttilde: BTreeMap<TensorKey, f64> = BTreeMap::new();
    let mut d_by_alpha: Vec<BTreeMap<TensorKey, f64>> = vec![BTreeMap::new(); m + 1];
    for (key, v) in ct.entries() {
        let total = key.k as u32 + key.gammas.iter().map(|g| *g as u32).sum::<u32>();
        ttilde.insert(key.clone(), total as f64 * v);
        for pos in 0..key.gammas.len() {
            let alpha = key.gammas[pos];
            let mut rest = key.gammas.clone();
            rest.remove(pos);
            let sub = TensorKey { k: key.k, p: key.p, mu: key.mu, gammas: rest };
            *d_by_alpha[alpha as usize].entry(sub).or_insert(0.0) += v;
        }
    }
    let sortedvec = |map: &BTreeMap<TensorKey, f64>| -> Vec<(TensorKey, f64)> {
        map.iter().map(|(k, v)| (k.clone(), *v)).collect()
    };
    let ttilde_plan = plan_from_sorted(&sortedvec(&ttilde));
    let d_plans = d_by_alpha.iter().map(|m| plan_from_sorted(&sortedvec(m))).collect();
    GradTensors {
        k_max: ct.meta.k_max,
        gamma: ct.meta.gamma,
        m: ct.meta.m,
        dim_g: ct.meta.dim_g as usize,
        ttilde,
        d_by_alpha,
        ttilde_plan,
        d_plans,
    }
}

fn powers(t: f64, up_to: usize) -> Vec<f64> {
    let mut tp = vec![1.0; up_to + 1];
    for i in 1..tp.len() {
        tp[i] = tp[i - 1] * t;
    }
    tp
}

fn padded_controls(gt: &GradTensors, d: &PolynomialControl) -> Result<Vec<f64>> {
    if d.degree() > gt.m as usize {
        return Err(MagnusError::Validation(format!(
            "control degree {} exceeds compiled maximum {}",
            d.degree(),
            gt.m
        )));
    }
    let mut dv = d.coeffs().to_vec();
    dv.resize(gt.m as usize + 1, 0.0);
    Ok(dv)
}

/// `∂a/∂t` summed over orders.
pub fn d_a_dt(gt: &GradTensors, t: f64, d: &PolynomialControl) -> Result<RVec> {
    let dv = padded_controls(gt, d)?;
    let tp = powers(t, gt.gamma as usize);
    let mut out = RVec::zeros(gt.dim_g);
    gt.ttilde_plan.accumulate_sum(&mut out, &tp, &dv, -1);
    Ok(out)
}

/// `∂a/∂d_α` summed over orders.
pub fn d_a_dd(gt: &GradTensors, t: f64, d: &PolynomialControl, alpha: u8) -> Result<RVec> {
    if alpha > gt.m {
        return Err(MagnusError::Validation(format!(
            "alpha = {alpha} exceeds compiled control degree {}",
            gt.m
        )));
    }
    let dv = padded_controls(gt, d)?;
    let tp = powers(t, gt.gamma as usize);
    let mut out = RVec::zeros(gt.dim_g);
    gt.d_plans[alpha as usize].accumulate_sum(&mut out, &tp, &dv, alpha as i32);
    Ok(out)
}

/// Coefficients of `Φ(X) = Σ_{j=0}^{k_d} i^j/(j+1)! ad_M^j(X)` in the Lie
/// basis, given the coefficients of `M` and `X`.
pub fn adjoint_series_coeffs(
    sc: &StructureConstants,
    m_coeffs: &RVec,
    x_coeffs: &RVec,
    k_d: usize,
) -> RVec {
    let mut acc = x_coeffs.clone();
    let mut term = x_coeffs.clone();
    let mut fact = 1.0;
    for j in 1..=k_d {
        term = sc.hbracket_coeffs(m_coeffs, &term);
        fact *= (j + 1) as f64;
        // i^j from the series times i^j from the Hermitian bracket.
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc.axpy(sign / fact, &term, 1.0);
    }
    acc
}

/// Adjoint of [`adjoint_series_coeffs`] in its `x` argument:
/// `⟨w, Φ(x)⟩ = ⟨Φᵀ(w), x⟩`.
pub fn adjoint_series_transpose(
    sc: &StructureConstants,
    m_coeffs: &RVec,
    w: &RVec,
    k_d: usize,
) -> RVec {
    let mut acc = w.clone();
    let mut term = w.clone();
    let mut fact = 1.0;
    for j in 1..=k_d {
        term = sc.hbracket_adjoint_coeffs(m_coeffs, &term);
        fact *= (j + 1) as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc.axpy(sign / fact, &term, 1.0);
    }
    acc
}

/// Dense propagator derivative `∂U = -i U Σ_{j<=k_D} i^j/(j+1)! ad_M^j(∂M)`.
///
/// Falls back to dense commutators; the Lie-basis route is
/// [`propagator_derivative_in_basis`].
pub fn propagator_derivative(
    m: &EffectiveHamiltonian,
    dm: &HermitianOperator,
    k_d: usize,
) -> Result<CMat> {
    if m.operator.dim() != dm.dim() {
        return Err(MagnusError::DimensionMismatch("M and dM dims differ".into()));
    }
    let u = Propagator::new(&m.operator)?.unitary();
    let mut acc = dm.matrix().clone();
    let mut term = dm.matrix().clone();
    let mut fact = 1.0;
    for j in 1..=k_d {
        term = commutator(m.operator.matrix(), &term);
        fact *= (j + 1) as f64;
        let phase = C64::new(0.0, 1.0).powu(j as u32) / C64::new(fact, 0.0);
        acc += &term * phase;
    }
    Ok(u * acc * C64::new(0.0, -1.0))
}

/// Propagator derivative with `M`, `∂M` expressed in the Lie basis: the
/// adjoint series runs over structure constants, then a single dense
/// assembly and one unitary multiplication.
pub fn propagator_derivative_in_basis(
    basis: &LieBasis,
    sc: &StructureConstants,
    m_coeffs: &RVec,
    dm_coeffs: &RVec,
    k_d: usize,
) -> Result<CMat> {
    let phi = adjoint_series_coeffs(sc, m_coeffs, dm_coeffs, k_d);
    let phi_op = basis.assemble(&phi)?;
    let m_op = basis.assemble(m_coeffs)?;
    let u = Propagator::new(&m_op)?.unitary();
    Ok(u * phi_op.matrix() * C64::new(0.0, -1.0))
}
