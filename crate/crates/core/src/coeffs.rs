//! Compilation of the dynamical coefficient tensors.
//!
//! `compute_s` walks, for every expansion order `k ≤ k_M`, the trees of
//! order `k-1`, the generator placements at their leaves, and the admissible
//! control-monomial exponents, accumulating
//!
//! ```text
//! S^{(k,p)}_{μ,γ⃗} = Π_l (1/γ_l!) · Σ_τ α(τ) Σ_{q⃗} β_{μ,q⃗,τ} · I_τ(γ⃗ @ q⃗)
//! ```
//!
//! where `β` is the Hermitian-bracket chain of the placement and `I_τ` the
//! exact tree integral with `x^{γ_l}` at the control leaves. Working with
//! the bracket `-i[·,·]` throughout absorbs the `(-i)^{k-1}` phase of the
//! expansion, so every stored value is real.
//!
//! Two placements are skipped before any contraction:
//!
//! * both leaves of a bottom-level commutator hold the same generator — the
//!   chain vanishes by self-commutation;
//! * the control leaf of a bottom-level commutator carries exponent 0 —
//!   swapping the two generators of that commutator gives a second admissible
//!   configuration with the same tree integral and an exactly negated chain,
//!   so the pair cancels identically. Skipping both members keeps the
//!   cancellation exact in floating point; in particular all
//!   constant-control entries of order `k ≥ 2` come out exactly zero.
//!
//! `symmetrize_to_t` folds the position-ordered `S` entries onto sorted
//! exponent tuples, which is the form the evaluator consumes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{MagnusError, Result};
use crate::lie::{LieBasis, StructureConstants};
use crate::trees::{
    enumerate_trees, rational_to_f64, tree_commutator_chain, tree_monomial_integral, tree_weight,
    BinaryTree,
};
use crate::RVec;

/// Accumulated entries at or below this magnitude are dropped.
pub const ENTRY_DROP_TOL: f64 = 1e-14;

/// Key of one tensor entry. `gammas` is position-ordered (by ascending
/// control-leaf label) in [`STensor`] and sorted non-decreasing in
/// [`CoeffTensor`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TensorKey {
    pub k: u8,
    pub p: u8,
    pub mu: u32,
    pub gammas: Vec<u8>,
}

/// Shape parameters shared by `S` and `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorMeta {
    /// Magnus truncation order `k_M`.
    pub k_max: u8,
    /// Time-truncation order Γ: keys satisfy `k + Σγ ≤ Γ`.
    pub gamma: u8,
    /// Maximum control-polynomial degree.
    pub m: u8,
    /// Lie-basis size.
    pub dim_g: u32,
}

/// Position-ordered dynamical coefficients straight out of the tree sweep.
#[derive(Debug, Clone)]
pub struct STensor {
    pub meta: TensorMeta,
    pub basis_l1_norms: Vec<f64>,
    pub model_digest: [u8; 32],
    entries: BTreeMap<TensorKey, f64>,
}

impl STensor {
    pub fn entries(&self) -> &BTreeMap<TensorKey, f64> {
        &self.entries
    }
}

/// The compiled artifact: γ-sorted sparse coefficients plus the evaluation
/// plan grouped by monomial.
#[derive(Debug, Clone)]
pub struct CoeffTensor {
    pub meta: TensorMeta,
    pub basis_l1_norms: Vec<f64>,
    pub model_digest: [u8; 32],
    entries: Vec<(TensorKey, f64)>,
    plan: EvalPlan,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct EvalPlan {
    groups: Vec<PlanGroup>,
    mus: Vec<u32>,
    vals: Vec<f64>,
}

impl EvalPlan {
    /// Accumulate `Σ value · t^{total_deg + deg_shift} · Π d_γ` into `out`,
    /// summing over all orders. `tp` must hold `t^0..t^max` with
    /// `max >= total_deg + deg_shift` for every group.
    pub(crate) fn accumulate_sum(&self, out: &mut RVec, tp: &[f64], d: &[f64], deg_shift: i32) {
        for g in &self.groups {
            let deg = g.total_deg as i32 + deg_shift;
            debug_assert!(deg >= 0);
            let mut coeff = tp[deg as usize];
            for &gamma in &g.gammas {
                coeff *= d[gamma as usize];
                if coeff == 0.0 {
                    break;
                }
            }
            if coeff == 0.0 {
                continue;
            }
            for idx in g.lo as usize..g.hi as usize {
                out[self.mus[idx] as usize] += coeff * self.vals[idx];
            }
        }
    }
}

pub(crate) fn plan_from_sorted(entries: &[(TensorKey, f64)]) -> EvalPlan {
    build_plan(entries)
}

#[derive(Debug, Clone)]
struct PlanGroup {
    k: u8,
    /// Total time degree `k + Σγ`.
    total_deg: u8,
    gammas: Vec<u8>,
    lo: u32,
    hi: u32,
}

impl CoeffTensor {
    /// Build from sorted or unsorted raw entries; keys must already carry
    /// sorted `gammas`. Entries with `|value| <= ENTRY_DROP_TOL` are dropped.
    pub fn from_entries(
        meta: TensorMeta,
        basis_l1_norms: Vec<f64>,
        model_digest: [u8; 32],
        entries: impl IntoIterator<Item = (TensorKey, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(TensorKey, f64)> = entries
            .into_iter()
            .filter(|(_, v)| v.abs() > ENTRY_DROP_TOL)
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let t = CoeffTensor {
            plan: build_plan(&entries),
            meta,
            basis_l1_norms,
            model_digest,
            entries,
        };
        t.validate_keys()?;
        Ok(t)
    }

    pub fn entries(&self) -> &[(TensorKey, f64)] {
        &self.entries
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// Check every key against the admissible set: `1 ≤ k ≤ k_M`,
    /// `0 ≤ p ≤ k`, sorted `γ_i ≤ γ_{i+1} ≤ m`, `k + Σγ ≤ Γ`, `μ < dim_g`,
    /// and every value finite and above the drop tolerance.
    pub fn validate_keys(&self) -> Result<()> {
        for (key, v) in &self.entries {
            let ok = key.k >= 1
                && key.k <= self.meta.k_max
                && key.p <= key.k
                && key.gammas.len() == key.p as usize
                && key.mu < self.meta.dim_g
                && key.gammas.windows(2).all(|w| w[0] <= w[1])
                && key.gammas.iter().all(|g| *g <= self.meta.m)
                && key.k as u32 + key.gammas.iter().map(|g| *g as u32).sum::<u32>()
                    <= self.meta.gamma as u32
                && v.is_finite()
                && v.abs() > ENTRY_DROP_TOL;
            if !ok {
                return Err(MagnusError::Validation(format!(
                    "tensor entry out of bounds: {key:?} -> {v}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluate the per-order coefficient slices `a^{[k]}`, `k = 1..=k_M`,
    /// at time `t` and control coefficients `d` (length `m + 1`, in the
    /// `d(t) = Σ d_γ t^γ / γ!` convention).
    ///
    /// Returned as `slices[k-1][μ]`. Monomials `t^{k+Σγ}` are computed once
    /// per degree and shared across groups.
    pub fn eval_slices(&self, t: f64, d: &[f64]) -> Vec<RVec> {
        let dim_g = self.meta.dim_g as usize;
        let mut slices = vec![RVec::zeros(dim_g); self.meta.k_max as usize];
        // t^0 .. t^Γ
        let mut tp = vec![1.0_f64; self.meta.gamma as usize + 1];
        for i in 1..tp.len() {
            tp[i] = tp[i - 1] * t;
        }
        for g in &self.plan.groups {
            let mut coeff = tp[g.total_deg as usize];
            for &gamma in &g.gammas {
                coeff *= d[gamma as usize];
                if coeff == 0.0 {
                    break;
                }
            }
            if coeff == 0.0 {
                continue;
            }
            let slice = &mut slices[g.k as usize - 1];
            for idx in g.lo as usize..g.hi as usize {
                slice[self.plan.mus[idx] as usize] += coeff * self.plan.vals[idx];
            }
        }
        slices
    }
}

fn build_plan(sorted_entries: &[(TensorKey, f64)]) -> EvalPlan {
    // Group by (k, gammas); within a group the (mu, val) pairs are stored
    // contiguously. Entry order inside a group follows the key sort, which
    // fixes the accumulation order.
    let mut by_group: BTreeMap<(u8, Vec<u8>), Vec<(u32, f64)>> = BTreeMap::new();
    for (key, v) in sorted_entries {
        by_group
            .entry((key.k, key.gammas.clone()))
            .or_default()
            .push((key.mu, *v));
    }
    let mut plan = EvalPlan::default();
    for ((k, gammas), pairs) in by_group {
        let lo = plan.mus.len() as u32;
        for (mu, v) in pairs {
            plan.mus.push(mu);
            plan.vals.push(v);
        }
        let hi = plan.mus.len() as u32;
        let total = k as u32 + gammas.iter().map(|g| *g as u32).sum::<u32>();
        plan.groups.push(PlanGroup { k, total_deg: total as u8, gammas, lo, hi });
    }
    plan
}

/// Content digest binding the compiled tensors to their model: generators
/// (as reconstructed from the basis), generation cutoff, and the three
/// truncation orders.
pub fn model_digest(basis: &LieBasis, k_max: u8, gamma: u8, m: u8) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((basis.dim_h() as u64).to_le_bytes());
    let a = basis.assemble(basis.a_coeffs()).expect("basis assemble");
    let b = basis.assemble(basis.b_coeffs()).expect("basis assemble");
    for op in [a, b] {
        for z in op.matrix().iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    h.update(basis.gen_eps_l().to_le_bytes());
    h.update([k_max, gamma, m]);
    h.finalize().into()
}

/// Compute the position-ordered tensor `S` for orders `1..=k_max`.
///
/// Trees at each order are processed as independent tasks and merged in a
/// fixed (order, tree-index) sequence, so the result is bit-reproducible
/// regardless of thread count. Exact rational weights are converted to `f64`
/// once per accumulated term.
pub fn compute_s(
    basis: &LieBasis,
    sc: &StructureConstants,
    k_max: u8,
    gamma: u8,
    m: u8,
) -> Result<STensor> {
    if k_max < 1 {
        return Err(MagnusError::Validation("k_max must be >= 1".into()));
    }
    if gamma < k_max {
        return Err(MagnusError::Validation(format!(
            "gamma = {gamma} must be >= k_max = {k_max}"
        )));
    }
    if sc.dim_g() != basis.dim_g() {
        return Err(MagnusError::DimensionMismatch(
            "structure constants do not match basis".into(),
        ));
    }
    if !basis.is_closed() && basis.gen_max_depth() < k_max as u32 {
        return Err(MagnusError::Closure(format!(
            "basis generated to depth {} is too shallow for order {k_max}",
            basis.gen_max_depth()
        )));
    }

    let mut tasks: Vec<(u8, std::sync::Arc<BinaryTree>)> = Vec::new();
    for k in 1..=k_max {
        for tree in enumerate_trees(k as usize - 1)?.iter() {
            tasks.push((k, tree.clone()));
        }
    }

    let partials: Vec<Result<BTreeMap<TensorKey, f64>>> = tasks
        .par_iter()
        .map(|(k, tree)| accumulate_tree(*k, tree, basis, sc, gamma, m))
        .collect();

    let mut entries: BTreeMap<TensorKey, f64> = BTreeMap::new();
    for partial in partials {
        for (key, v) in partial? {
            *entries.entry(key).or_insert(0.0) += v;
        }
    }
    entries.retain(|_, v| v.abs() > ENTRY_DROP_TOL);
    for (key, v) in &entries {
        if !v.is_finite() {
            return Err(MagnusError::Convention(format!(
                "non-finite tensor entry at {key:?}"
            )));
        }
    }

    Ok(STensor {
        meta: TensorMeta { k_max, gamma, m, dim_g: basis.dim_g() as u32 },
        basis_l1_norms: basis.l1_norms().to_vec(),
        model_digest: model_digest(basis, k_max, gamma, m),
        entries,
    })
}

fn accumulate_tree(
    k: u8,
    tree: &BinaryTree,
    basis: &LieBasis,
    sc: &StructureConstants,
    gamma: u8,
    m: u8,
) -> Result<BTreeMap<TensorKey, f64>> {
    let mut local: BTreeMap<TensorKey, f64> = BTreeMap::new();
    let leaves = tree.leaf_count();
    debug_assert_eq!(leaves, k as usize);
    let bottoms = tree.bottom_pairs();
    let budget = (gamma - k) as u32;
    // Every bottom-level commutator needs a control leaf with exponent >= 1,
    // otherwise the configuration pair-cancels (module docs).
    if (bottoms.len() as u32) > budget && leaves > 1 {
        return Ok(local);
    }
    if !bottoms.is_empty() && m == 0 {
        return Ok(local);
    }

    let alpha = tree_weight(tree);
    let factorials: Vec<BigRational> = {
        let mut f = vec![BigRational::one()];
        for i in 1..=m as usize {
            f.push(f[i - 1].clone() * BigRational::from(BigInt::from(i)));
        }
        f
    };

    let a = basis.a_coeffs();
    let b = basis.b_coeffs();

    for placement in 0u64..(1u64 << leaves) {
        let is_b = |label: u32| placement >> (label - 1) & 1 == 1;
        if bottoms.iter().any(|&(u, v)| is_b(u) == is_b(v)) {
            continue; // self-commuting bottom pair
        }
        let q: Vec<u32> = (1..=leaves as u32).filter(|l| is_b(*l)).collect();
        let p = q.len();
        // Minimum exponents: 1 at the control side of each bottom pair.
        let min_exp: Vec<u32> = q
            .iter()
            .map(|l| u32::from(bottoms.iter().any(|&(u, v)| u == *l || v == *l)))
            .collect();
        let min_sum: u32 = min_exp.iter().sum();
        if min_sum > budget {
            continue;
        }

        let chain = tree_commutator_chain(tree, placement, a, b, sc)?;
        if chain.iter().all(|v| *v == 0.0) {
            continue;
        }

        // Lexicographic enumeration of admissible exponent tuples.
        let mut exps: Vec<u32> = min_exp.clone();
        loop {
            let total: u32 = exps.iter().sum();
            if total <= budget && exps.iter().all(|e| *e <= m as u32) {
                emit_term(&mut local, k, tree, &alpha, &factorials, &q, &exps, &chain)?;
            }
            // Advance: increment last position; carry resets to min_exp.
            let mut pos = p;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                exps[pos] += 1;
                let partial: u32 = exps[..=pos].iter().sum::<u32>()
                    + min_exp[pos + 1..].iter().sum::<u32>();
                if exps[pos] <= m as u32 && partial <= budget {
                    for i in pos + 1..p {
                        exps[i] = min_exp[i];
                    }
                    break;
                }
                exps[pos] = min_exp[pos];
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if p == 0 || pos == usize::MAX {
                break;
            }
        }
    }
    Ok(local)
}

#[allow(clippy::too_many_arguments)]
fn emit_term(
    local: &mut BTreeMap<TensorKey, f64>,
    k: u8,
    tree: &BinaryTree,
    alpha: &BigRational,
    factorials: &[BigRational],
    q: &[u32],
    exps: &[u32],
    chain: &RVec,
) -> Result<()> {
    let exp_map: BTreeMap<u32, u32> = q.iter().copied().zip(exps.iter().copied()).collect();
    let integral = tree_monomial_integral(tree, &exp_map)?;
    let mut term = alpha.clone() * integral;
    for &e in exps {
        term /= factorials[e as usize].clone();
    }
    let scale = rational_to_f64(&term);
    if scale == 0.0 {
        return Ok(());
    }
    let gammas: Vec<u8> = exps.iter().map(|e| *e as u8).collect();
    for (mu, c) in chain.iter().enumerate() {
        if *c != 0.0 {
            let key = TensorKey { k, p: q.len() as u8, mu: mu as u32, gammas: gammas.clone() };
            *local.entry(key).or_insert(0.0) += scale * c;
        }
    }
    Ok(())
}

/// Fold the position-ordered tensor onto sorted exponent tuples:
/// `T_{μ, sort(γ⃗)} = Σ_{distinct orderings} S_{μ, γ⃗}`. Polynomial
/// evaluation is unchanged by the fold.
pub fn symmetrize_to_t(s: &STensor) -> Result<CoeffTensor> {
    let mut folded: BTreeMap<TensorKey, f64> = BTreeMap::new();
    for (key, v) in s.entries() {
        let mut gammas = key.gammas.clone();
        gammas.sort_unstable();
        let sorted = TensorKey { k: key.k, p: key.p, mu: key.mu, gammas };
        *folded.entry(sorted).or_insert(0.0) += v;
    }
    CoeffTensor::from_entries(s.meta, s.basis_l1_norms.clone(), s.model_digest, folded)
}

/// Evaluate the position-ordered tensor directly (test cross-checks).
pub fn eval_s_slices(s: &STensor, t: f64, d: &[f64]) -> Vec<RVec> {
    let dim_g = s.meta.dim_g as usize;
    let mut slices = vec![RVec::zeros(dim_g); s.meta.k_max as usize];
    for (key, v) in s.entries() {
        let mut coeff = *v * t.powi(key.k as i32);
        for &g in &key.gammas {
            coeff *= d[g as usize] * t.powi(g as i32);
        }
        slices[key.k as usize - 1][key.mu as usize] += coeff;
    }
    slices
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{compute_structure_constants, generate_lie_algebra, DEFAULT_EPS_L};
    use crate::operator::HermitianOperator;
    use crate::{C64, CMat};
    use approx::assert_abs_diff_eq;

    fn zx_toy() -> (LieBasis, StructureConstants) {
        let z = CMat::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ]);
        let x = CMat::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let a = HermitianOperator::new(z).unwrap();
        let b = HermitianOperator::new(x).unwrap();
        let basis = generate_lie_algebra(&a, &b, 6, DEFAULT_EPS_L).unwrap();
        let sc = compute_structure_constants(&basis).unwrap();
        (basis, sc)
    }

    #[test]
    fn order_one_closed_form() {
        let (basis, sc) = zx_toy();
        let m = 3u8;
        let s = compute_s(&basis, &sc, 1, 6, m).unwrap();
        // Expected entries: (1,0,mu,()) -> a_mu, (1,1,mu,(g)) -> b_mu/(g!(g+1)).
        let mut count = 0;
        for (key, v) in s.entries() {
            match key.p {
                0 => {
                    assert_abs_diff_eq!(*v, basis.a_coeffs()[key.mu as usize], epsilon = 1e-15);
                }
                1 => {
                    let g = key.gammas[0] as usize;
                    let fact: f64 = (1..=g).product::<usize>() as f64;
                    let expect = basis.b_coeffs()[key.mu as usize] / (fact * (g as f64 + 1.0));
                    assert_abs_diff_eq!(*v, expect, epsilon = 1e-15);
                }
                _ => panic!("unexpected p at order 1"),
            }
            count += 1;
        }
        // a has one nonzero coefficient, b has one, per gamma 0..=m.
        assert_eq!(count, 1 + (m as usize + 1));
    }

    #[test]
    fn order_two_constant_slice_vanishes() {
        let (basis, sc) = zx_toy();
        let s = compute_s(&basis, &sc, 2, 6, 2).unwrap();
        for (key, _) in s.entries() {
            if key.k == 2 {
                assert!(
                    !key.gammas.iter().all(|g| *g == 0),
                    "constant-control entry at order 2 should be exactly absent: {key:?}"
                );
                assert!(key.p >= 1, "p = 0 entries at order 2 are self-commuting");
            }
        }
    }

    #[test]
    fn order_two_linear_control_matches_hand_integral() {
        // M_2 for d(t) = d_1 t on generators A, B reduces to
        // (d_1 t^3 / 12) i[A, B]; in the Hermitian-bracket basis the k = 2,
        // gamma = (1) entry is -1/12 times the chain of -i[A, B].
        let (basis, sc) = zx_toy();
        let s = compute_s(&basis, &sc, 2, 6, 2).unwrap();
        let chain = sc.hbracket_coeffs(basis.a_coeffs(), basis.b_coeffs());
        for (mu, c) in chain.iter().enumerate() {
            let key = TensorKey { k: 2, p: 1, mu: mu as u32, gammas: vec![1] };
            let got = s.entries().get(&key).copied().unwrap_or(0.0);
            assert_abs_diff_eq!(got, -c / 12.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn symmetrization_example() {
        // S(...,(0,1)) = 2, S(...,(1,0)) = 3 -> T(...,(0,1)) = 5.
        let meta = TensorMeta { k_max: 2, gamma: 6, m: 2, dim_g: 1 };
        let mut entries = BTreeMap::new();
        entries.insert(TensorKey { k: 2, p: 2, mu: 0, gammas: vec![0, 1] }, 2.0);
        entries.insert(TensorKey { k: 2, p: 2, mu: 0, gammas: vec![1, 0] }, 3.0);
        entries.insert(TensorKey { k: 1, p: 1, mu: 0, gammas: vec![2] }, 4.0);
        let s = STensor {
            meta,
            basis_l1_norms: vec![1.0],
            model_digest: [0; 32],
            entries,
        };
        let t = symmetrize_to_t(&s).unwrap();
        let sorted_key = TensorKey { k: 2, p: 2, mu: 0, gammas: vec![0, 1] };
        let entry = t.entries().iter().find(|(k, _)| *k == sorted_key).unwrap();
        assert_abs_diff_eq!(entry.1, 5.0, epsilon = 1e-15);
        // p = 1 entries pass through unchanged.
        let passthrough = TensorKey { k: 1, p: 1, mu: 0, gammas: vec![2] };
        let entry = t.entries().iter().find(|(k, _)| *k == passthrough).unwrap();
        assert_abs_diff_eq!(entry.1, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn s_and_t_evaluate_identically() {
        let (basis, sc) = zx_toy();
        let s = compute_s(&basis, &sc, 3, 9, 2).unwrap();
        let t = symmetrize_to_t(&s).unwrap();
        let mut rng = crate::rng::rng_from_seed(99);
        use rand::Rng;
        for _ in 0..20 {
            let tv: f64 = rng.gen_range(0.05..0.5);
            let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s_slices = eval_s_slices(&s, tv, &d);
            let t_slices = t.eval_slices(tv, &d);
            for k in 0..3 {
                for mu in 0..basis.dim_g() {
                    assert_abs_diff_eq!(s_slices[k][mu], t_slices[k][mu], epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn gamma_monotonicity() {
        let (basis, sc) = zx_toy();
        let lo = symmetrize_to_t(&compute_s(&basis, &sc, 3, 6, 2).unwrap()).unwrap();
        let hi = symmetrize_to_t(&compute_s(&basis, &sc, 3, 8, 2).unwrap()).unwrap();
        assert!(hi.n_entries() >= lo.n_entries());
        for (key, v) in lo.entries() {
            let in_hi = hi.entries().iter().find(|(k, _)| k == key);
            let (_, hv) = in_hi.expect("entry lost when gamma grew");
            assert_eq!(*hv, *v, "shared entry changed with gamma");
        }
    }

    #[test]
    fn determinism_bit_for_bit() {
        let (basis, sc) = zx_toy();
        let s1 = compute_s(&basis, &sc, 4, 8, 2).unwrap();
        let s2 = compute_s(&basis, &sc, 4, 8, 2).unwrap();
        assert_eq!(s1.entries().len(), s2.entries().len());
        for ((k1, v1), (k2, v2)) in s1.entries().iter().zip(s2.entries()) {
            assert_eq!(k1, k2);
            assert_eq!(v1.to_bits(), v2.to_bits());
        }
    }

    #[test]
    fn key_bounds_enforced() {
        let (basis, sc) = zx_toy();
        let t = symmetrize_to_t(&compute_s(&basis, &sc, 4, 9, 3).unwrap()).unwrap();
        t.validate_keys().unwrap();
        for (key, _) in t.entries() {
            assert!(key.k >= 1 && key.k <= 4);
            assert!(key.p <= key.k);
            assert!(key.k as u32 + key.gammas.iter().map(|g| *g as u32).sum::<u32>() <= 9);
        }
    }

    #[test]
    fn rejects_gamma_below_k() {
        let (basis, sc) = zx_toy();
        assert!(compute_s(&basis, &sc, 4, 3, 2).is_err());
    }
}
