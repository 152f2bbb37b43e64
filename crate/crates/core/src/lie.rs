//! Generation of the dynamical Lie algebra spanned by `{A, B}` and its
//! structure constants.
//!
//! All basis elements are kept Hermitian by working with the bracket
//! `(X, Y) ↦ -i[X, Y]`, which also makes every structure constant real:
//! `-i[L_i, L_j] = Σ_k c_ijk L_k`. The conventional constants `f_ijk` of
//! `[L_i, L_j] = Σ f_ijk L_k` are recovered as `f_ijk = i · c_ijk`.
//!
//! Elements are Hilbert–Schmidt-orthonormalized as they are generated, so
//! projections are plain inner products and the expansion coefficients of
//! Hermitian operators are real.

use rayon::prelude::*;

use crate::error::{MagnusError, Result};
use crate::operator::{hbracket, hs_inner, l1_norm, HermitianOperator};
use crate::{C64, CMat, RVec};

/// Default ℓ1 cutoff for discarding near-dependent bracket candidates.
pub const DEFAULT_EPS_L: f64 = 1e-5;

/// Residual tolerance above which a bracket is declared outside the basis.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Structure constants smaller than this are dropped from the sparse tensor.
pub const SC_DROP_TOL: f64 = 1e-12;

/// Ordered, HS-orthonormal Hermitian basis `L_1..L_D` of the generated
/// algebra, with bookkeeping used downstream.
#[derive(Debug, Clone)]
pub struct LieBasis {
    elements: Vec<HermitianOperator>,
    depth: Vec<u32>,
    l1_norms: Vec<f64>,
    a_coeffs: RVec,
    b_coeffs: RVec,
    /// Requested generation depth.
    gen_max_depth: u32,
    /// True when a sweep added nothing before the depth cap: the algebra is
    /// fully closed and usable at any expansion order.
    closed: bool,
    /// ℓ1 cutoff used during generation (part of the model identity).
    gen_eps_l: f64,
}

impl LieBasis {
    pub fn dim_g(&self) -> usize {
        self.elements.len()
    }

    /// Hilbert-space dimension of the elements.
    pub fn dim_h(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn element(&self, mu: usize) -> &HermitianOperator {
        &self.elements[mu]
    }

    /// Commutation depth at which each element first appeared (generators
    /// have depth 1).
    pub fn depths(&self) -> &[u32] {
        &self.depth
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// ℓ1 operator norms of the (normalized) elements.
    pub fn l1_norms(&self) -> &[f64] {
        &self.l1_norms
    }

    /// Coefficients of the generator `A` in this basis.
    pub fn a_coeffs(&self) -> &RVec {
        &self.a_coeffs
    }

    /// Coefficients of the generator `B` in this basis.
    pub fn b_coeffs(&self) -> &RVec {
        &self.b_coeffs
    }

    /// Depth the generation was asked to reach.
    pub fn gen_max_depth(&self) -> u32 {
        self.gen_max_depth
    }

    /// Whether generation terminated because the algebra closed.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// ℓ1 cutoff the basis was generated with.
    pub fn gen_eps_l(&self) -> f64 {
        self.gen_eps_l
    }

    /// Rebuild a basis from raw parts (artifact loading). Trusts the caller
    /// on orthonormality; `a`/`b` coefficient vectors must match `elements`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        elements: Vec<HermitianOperator>,
        depth: Vec<u32>,
        l1_norms: Vec<f64>,
        a_coeffs: RVec,
        b_coeffs: RVec,
        gen_max_depth: u32,
        closed: bool,
        gen_eps_l: f64,
    ) -> Result<Self> {
        let d = elements.len();
        if d == 0 {
            return Err(MagnusError::Validation("empty basis".into()));
        }
        if depth.len() != d || l1_norms.len() != d || a_coeffs.len() != d || b_coeffs.len() != d {
            return Err(MagnusError::DimensionMismatch(
                "basis part lengths disagree".into(),
            ));
        }
        Ok(LieBasis {
            elements,
            depth,
            l1_norms,
            a_coeffs,
            b_coeffs,
            gen_max_depth,
            closed,
            gen_eps_l,
        })
    }

    /// Assemble the dense operator `Σ_μ coeffs_μ L_μ`.
    pub fn assemble(&self, coeffs: &RVec) -> Result<HermitianOperator> {
        if coeffs.len() != self.dim_g() {
            return Err(MagnusError::DimensionMismatch(format!(
                "coefficient vector of length {} for basis of size {}",
                coeffs.len(),
                self.dim_g()
            )));
        }
        let n = self.dim_h();
        let mut m = CMat::zeros(n, n);
        for (c, l) in coeffs.iter().zip(self.elements.iter()) {
            if *c != 0.0 {
                m += l.matrix() * C64::new(*c, 0.0);
            }
        }
        Ok(HermitianOperator::new_unchecked(m))
    }
}

/// Sparse real tensor `c_ijk` of the Hermitian bracket,
/// `-i[L_i, L_j] = Σ_k c_ijk L_k`. Both orientations of every pair are
/// stored, with `c_jik = -c_ijk` exact by construction.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    dim_g: usize,
    /// Entries sorted by (i, j, k).
    entries: Vec<(u32, u32, u32, f64)>,
    /// CSR-style offsets: entries of pair (i, j) occupy
    /// `pair_offsets[i*dim_g + j] .. pair_offsets[i*dim_g + j + 1]`.
    pair_offsets: Vec<u32>,
}

impl StructureConstants {
    pub fn dim_g(&self) -> usize {
        self.dim_g
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, u32, f64)] {
        &self.entries
    }

    /// Build from raw triplets (tests, tools). Entries are sorted; both
    /// orientations must be supplied by the caller.
    pub fn from_triplets(dim_g: usize, mut entries: Vec<(u32, u32, u32, f64)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1, e.2));
        let pair_offsets = build_offsets(dim_g, &entries);
        StructureConstants { dim_g, entries, pair_offsets }
    }

    /// Coefficients of `-i[X, Y]` given the coefficients of `X` and `Y`.
    pub fn hbracket_coeffs(&self, x: &RVec, y: &RVec) -> RVec {
        let d = self.dim_g;
        let mut out = RVec::zeros(d);
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..d {
                let yj = y[j];
                if yj == 0.0 {
                    continue;
                }
                let lo = self.pair_offsets[i * d + j] as usize;
                let hi = self.pair_offsets[i * d + j + 1] as usize;
                let xy = xi * yj;
                for &(_, _, k, c) in &self.entries[lo..hi] {
                    out[k as usize] += xy * c;
                }
            }
        }
        out
    }

    /// Transpose contraction against the second slot:
    /// `out_ν = Σ_{μ,k} m_μ c_{μνk} w_k`. This is the adjoint of
    /// `y ↦ hbracket_coeffs(m, y)` and drives gradient pullbacks.
    pub fn hbracket_adjoint_coeffs(&self, m: &RVec, w: &RVec) -> RVec {
        let d = self.dim_g;
        let mut out = RVec::zeros(d);
        for &(i, j, k, c) in &self.entries {
            let mi = m[i as usize];
            if mi != 0.0 {
                out[j as usize] += mi * c * w[k as usize];
            }
        }
        out
    }
}

fn build_offsets(dim_g: usize, sorted_entries: &[(u32, u32, u32, f64)]) -> Vec<u32> {
    let mut offsets = vec![0u32; dim_g * dim_g + 1];
    for &(i, j, _, _) in sorted_entries {
        offsets[i as usize * dim_g + j as usize + 1] += 1;
    }
    for idx in 0..dim_g * dim_g {
        offsets[idx + 1] += offsets[idx];
    }
    offsets
}

/// Generate the dynamical Lie algebra of `{A, B}` breadth-first up to
/// `max_depth` commutation generations (generators sit at depth 1).
///
/// Candidates are `-i[g, L]` for `g ∈ {A, B}` in that order and `L` by basis
/// index over the previous generation, orthogonalized against everything
/// already kept. A candidate is discarded when its post-orthogonalization ℓ1
/// norm falls below `eps_l · min(‖A‖₁, ‖B‖₁)`. Generation stops early once a
/// sweep adds nothing.
pub fn generate_lie_algebra(
    a: &HermitianOperator,
    b: &HermitianOperator,
    max_depth: u32,
    eps_l: f64,
) -> Result<LieBasis> {
    if a.dim() != b.dim() {
        return Err(MagnusError::DimensionMismatch(format!(
            "generators of dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if max_depth < 1 {
        return Err(MagnusError::Validation("max_depth must be >= 1".into()));
    }
    if !(eps_l > 0.0) {
        return Err(MagnusError::Validation("eps_l must be positive".into()));
    }
    let a_l1 = a.l1_norm();
    let b_l1 = b.l1_norm();
    let ref_norm = match (a_l1 > 0.0, b_l1 > 0.0) {
        (true, true) => a_l1.min(b_l1),
        (true, false) => a_l1,
        (false, true) => b_l1,
        (false, false) => {
            return Err(MagnusError::Validation("both generators are zero".into()));
        }
    };
    let cutoff = eps_l * ref_norm;

    let mut elements: Vec<HermitianOperator> = Vec::new();
    let mut depth: Vec<u32> = Vec::new();

    let push_candidate = |cand: CMat, d: u32, elements: &mut Vec<HermitianOperator>, depth: &mut Vec<u32>| {
        let reduced = orthogonalize(cand, elements);
        if l1_norm(&reduced) < cutoff {
            return false;
        }
        let nrm = reduced.norm();
        elements.push(HermitianOperator::new_unchecked(reduced / C64::new(nrm, 0.0)));
        depth.push(d);
        true
    };

    // Depth 1: the generators themselves.
    push_candidate(a.matrix().clone(), 1, &mut elements, &mut depth);
    push_candidate(b.matrix().clone(), 1, &mut elements, &mut depth);
    if elements.is_empty() {
        return Err(MagnusError::Validation("generators vanish under the cutoff".into()));
    }

    let mut frontier_start = 0usize;
    let mut frontier_end = elements.len();
    let mut cur_depth = 1u32;
    while cur_depth < max_depth && frontier_start < frontier_end {
        for g in [a, b] {
            for idx in frontier_start..frontier_end {
                let cand = hbracket(g.matrix(), elements[idx].matrix());
                push_candidate(cand, cur_depth + 1, &mut elements, &mut depth);
            }
        }
        frontier_start = frontier_end;
        frontier_end = elements.len();
        cur_depth += 1;
    }
    // Closed iff the last processed sweep produced nothing (the loop then
    // stopped with an empty frontier rather than at the depth cap).
    let closed = frontier_start == frontier_end;

    let basis = LieBasis {
        l1_norms: elements.iter().map(|e| e.l1_norm()).collect(),
        depth,
        a_coeffs: project_coeffs(a.matrix(), &elements),
        b_coeffs: project_coeffs(b.matrix(), &elements),
        elements,
        gen_max_depth: max_depth,
        closed,
        gen_eps_l: eps_l,
    };
    Ok(basis)
}

/// Two-pass Gram–Schmidt against the kept elements; returns the residual
/// (not normalized).
fn orthogonalize(mut v: CMat, elements: &[HermitianOperator]) -> CMat {
    for _ in 0..2 {
        for l in elements {
            let ip = hs_inner(l.matrix(), &v);
            if ip.norm() != 0.0 {
                v -= l.matrix() * ip;
            }
        }
    }
    v
}

fn project_coeffs(m: &CMat, elements: &[HermitianOperator]) -> RVec {
    RVec::from_iterator(elements.len(), elements.iter().map(|l| hs_inner(l.matrix(), m).re))
}

/// Project an operator onto the basis: real coefficients
/// `coeffs_μ = Tr(L_μ† op)` and the Frobenius norm of what is left over.
pub fn project_onto_basis(
    op: &HermitianOperator,
    basis: &LieBasis,
) -> Result<(RVec, f64)> {
    if op.dim() != basis.dim_h() {
        return Err(MagnusError::DimensionMismatch(format!(
            "operator dim {} vs basis dim {}",
            op.dim(),
            basis.dim_h()
        )));
    }
    let coeffs = project_coeffs(op.matrix(), basis.elements());
    let mut resid = op.matrix().clone();
    for (c, l) in coeffs.iter().zip(basis.elements()) {
        resid -= l.matrix() * C64::new(*c, 0.0);
    }
    Ok((coeffs, resid.norm()))
}

/// Structure constants of the basis: every ordered pair of `-i[L_i, L_j]`
/// projected via HS inner products. Fails with a closure error naming the
/// first offending pair when a bracket leaves the basis by more than
/// [`CLOSURE_TOL`] in Frobenius norm, which signals that the generation
/// depth is too small for the requested expansion order.
pub fn compute_structure_constants(basis: &LieBasis) -> Result<StructureConstants> {
    let d = basis.dim_g();
    let pairs: Vec<(u32, u32)> = (0..d as u32)
        .flat_map(|i| ((i + 1)..d as u32).map(move |j| (i, j)))
        .collect();
    let per_pair: Vec<Result<Vec<(u32, u32, u32, f64)>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let v = hbracket(basis.element(i as usize).matrix(), basis.element(j as usize).matrix());
            let mut out = Vec::new();
            let mut resid = v.clone();
            for (k, l) in basis.elements().iter().enumerate() {
                let ip = hs_inner(l.matrix(), &v);
                if ip.norm() == 0.0 {
                    continue;
                }
                if ip.im.abs() > 1e-10 {
                    return Err(MagnusError::Convention(format!(
                        "projection of -i[L_{}, L_{}] onto L_{} has imaginary part {:.3e}; \
                         the Hermitian-bracket bookkeeping is broken",
                        i + 1,
                        j + 1,
                        k + 1,
                        ip.im
                    )));
                }
                resid -= l.matrix() * ip;
                let c = ip.re;
                if c.abs() >= SC_DROP_TOL {
                    out.push((i, j, k as u32, c));
                    out.push((j, i, k as u32, -c));
                }
            }
            let r = resid.norm();
            if r > CLOSURE_TOL {
                return Err(MagnusError::Closure(format!(
                    "-i[L_{}, L_{}] leaves the basis with residual {:.3e} (depths {} and {}); \
                     increase the generation depth",
                    i + 1,
                    j + 1,
                    r,
                    basis.depths()[i as usize],
                    basis.depths()[j as usize],
                )));
            }
            Ok(out)
        })
        .collect();

    let mut entries = Vec::new();
    for chunk in per_pair {
        entries.extend(chunk?);
    }
    entries.sort_by_key(|e| (e.0, e.1, e.2));
    let pair_offsets = build_offsets(d, &entries);
    Ok(StructureConstants { dim_g: d, entries, pair_offsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutator;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    pub(crate) fn pauli(which: char) -> CMat {
        let (a, b, c, d) = match which {
            'x' => (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            'y' => (C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)),
            'z' => (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)),
            _ => unreachable!(),
        };
        CMat::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(seed);
        let m = DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        HermitianOperator::new_unchecked(h)
    }

    #[test]
    fn su2_closure_from_z_and_x() {
        let a = HermitianOperator::new(pauli('z')).unwrap();
        let b = HermitianOperator::new(pauli('x')).unwrap();
        let basis = generate_lie_algebra(&a, &b, 3, DEFAULT_EPS_L).unwrap();
        assert_eq!(basis.dim_g(), 3);
        // Orthonormality.
        for i in 0..3 {
            for j in 0..3 {
                let ip = basis.element(i).hs_inner(basis.element(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
            }
        }
        // Reconstruction of the generators.
        let (a_back, ra) = project_onto_basis(&a, &basis).unwrap();
        assert!(ra <= 1e-10);
        let reassembled = basis.assemble(&a_back).unwrap();
        assert!((reassembled.matrix() - a.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn identical_generators_collapse_to_one() {
        let a = random_hermitian(4, 7);
        let basis = generate_lie_algebra(&a, &a, 4, DEFAULT_EPS_L).unwrap();
        assert_eq!(basis.dim_g(), 1);
        assert_abs_diff_eq!(
            (basis.element(0).matrix() * C64::new(a.frobenius_norm(), 0.0) - a.matrix()).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = random_hermitian(2, 1);
        let b = random_hermitian(4, 2);
        assert!(generate_lie_algebra(&a, &b, 2, DEFAULT_EPS_L).is_err());
    }

    /// Brute-force closure oracle: vectorize operators, extend a spanning set
    /// by rank tests on repeated Hermitian brackets until it stops growing.
    fn closure_dim_oracle(a: &CMat, b: &CMat) -> usize {
        let n = a.nrows();
        let vectorize = |m: &CMat| {
            let mut v = Vec::with_capacity(2 * n * n);
            for z in m.iter() {
                v.push(z.re);
                v.push(z.im);
            }
            nalgebra::DVector::<f64>::from_vec(v)
        };
        let mut ops: Vec<CMat> = vec![a.clone(), b.clone()];
        let rank = |ops: &[CMat]| {
            let cols: Vec<_> = ops.iter().map(&vectorize).collect();
            let m = nalgebra::DMatrix::<f64>::from_columns(&cols);
            m.svd(false, false)
                .singular_values
                .iter()
                .filter(|s| **s > 1e-9)
                .count()
        };
        loop {
            let mut grew = false;
            let snapshot = ops.clone();
            let r0 = rank(&ops);
            for g in [a, b] {
                for op in &snapshot {
                    let cand = hbracket(g, op);
                    if cand.norm() < 1e-12 {
                        continue;
                    }
                    let mut trial = ops.clone();
                    trial.push(cand.clone());
                    if rank(&trial) > rank(&ops) {
                        ops.push(cand);
                        grew = true;
                    }
                }
            }
            if !grew || rank(&ops) == r0 && !grew {
                break;
            }
        }
        rank(&ops)
    }

    #[test]
    fn sparse_two_qubit_matches_bruteforce_closure() {
        // A = Z1 Z2, B = X1 + X2.
        let z = pauli('z');
        let x = pauli('x');
        let id = CMat::identity(2, 2);
        let a = crate::operator::kron(&z, &z);
        let b = crate::operator::kron(&x, &id) + crate::operator::kron(&id, &x);
        let expect = closure_dim_oracle(&a, &b);
        let basis = generate_lie_algebra(
            &HermitianOperator::new(a).unwrap(),
            &HermitianOperator::new(b).unwrap(),
            6,
            DEFAULT_EPS_L,
        )
        .unwrap();
        assert_eq!(basis.dim_g(), expect);
    }

    #[test]
    fn structure_constants_su2() {
        let a = HermitianOperator::new(pauli('z')).unwrap();
        let b = HermitianOperator::new(pauli('x')).unwrap();
        let basis = generate_lie_algebra(&a, &b, 3, DEFAULT_EPS_L).unwrap();
        let sc = compute_structure_constants(&basis).unwrap();
        // -i[Z/√2, X/√2] = √2 (Y/√2): c(0,1,2) = √2.
        let c = sc
            .entries()
            .iter()
            .find(|e| (e.0, e.1) == (0, 1))
            .expect("missing (0,1) entry");
        assert_eq!(c.2, 2);
        assert_abs_diff_eq!(c.3, 2.0_f64.sqrt(), epsilon = 1e-12);
        // Exact antisymmetry, exhaustively.
        for &(i, j, k, v) in sc.entries() {
            let neg = sc
                .entries()
                .iter()
                .find(|e| (e.0, e.1, e.2) == (j, i, k))
                .expect("missing mirrored entry");
            assert_eq!(neg.3, -v);
        }
    }

    #[test]
    fn structure_constants_single_element_basis() {
        let a = random_hermitian(3, 5);
        let basis = generate_lie_algebra(&a, &a, 2, DEFAULT_EPS_L).unwrap();
        let sc = compute_structure_constants(&basis).unwrap();
        assert_eq!(sc.n_entries(), 0);
    }

    #[test]
    fn structure_constants_reconstruct_brackets() {
        let z = pauli('z');
        let x = pauli('x');
        let id = CMat::identity(2, 2);
        let a = HermitianOperator::new(crate::operator::kron(&z, &z)).unwrap();
        let b = HermitianOperator::new(crate::operator::kron(&x, &id) + crate::operator::kron(&id, &x)).unwrap();
        let basis = generate_lie_algebra(&a, &b, 8, DEFAULT_EPS_L).unwrap();
        let sc = compute_structure_constants(&basis).unwrap();
        for i in 0..basis.dim_g() {
            for j in (i + 1)..basis.dim_g() {
                let direct = hbracket(basis.element(i).matrix(), basis.element(j).matrix());
                let mut x_vec = RVec::zeros(basis.dim_g());
                let mut y_vec = RVec::zeros(basis.dim_g());
                x_vec[i] = 1.0;
                y_vec[j] = 1.0;
                let coeffs = sc.hbracket_coeffs(&x_vec, &y_vec);
                let back = basis.assemble(&coeffs).unwrap();
                assert!(
                    (back.matrix() - &direct).norm() <= 1e-9,
                    "pair ({i},{j}) residual {}",
                    (back.matrix() - &direct).norm()
                );
            }
        }
    }

    #[test]
    fn closure_error_on_shallow_depth() {
        // so-like algebra of the two-qubit sparse model does not close at
        // depth 2, so the pair table must refuse.
        let z = pauli('z');
        let x = pauli('x');
        let id = CMat::identity(2, 2);
        let a = HermitianOperator::new(crate::operator::kron(&z, &z)).unwrap();
        let b = HermitianOperator::new(crate::operator::kron(&x, &id) + crate::operator::kron(&id, &x)).unwrap();
        let basis = generate_lie_algebra(&a, &b, 2, DEFAULT_EPS_L).unwrap();
        match compute_structure_constants(&basis) {
            Err(MagnusError::Closure(_)) => {}
            other => panic!("expected closure error, got {other:?}"),
        }
    }

    #[test]
    fn projection_of_basis_combinations() {
        let a = HermitianOperator::new(pauli('z')).unwrap();
        let b = HermitianOperator::new(pauli('x')).unwrap();
        let basis = generate_lie_algebra(&a, &b, 3, DEFAULT_EPS_L).unwrap();
        // op = 2 L_0 + 3 L_2
        let mut coeffs = RVec::zeros(3);
        coeffs[0] = 2.0;
        coeffs[2] = 3.0;
        let op = basis.assemble(&coeffs).unwrap();
        let (back, resid) = project_onto_basis(&op, &basis).unwrap();
        assert!(resid <= 1e-12);
        assert_abs_diff_eq!(back[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_residual_matches_gram_schmidt_oracle() {
        // Random Hermitian op outside the su(2) span (has identity part).
        let op = random_hermitian(2, 11);
        let a = HermitianOperator::new(pauli('z')).unwrap();
        let b = HermitianOperator::new(pauli('x')).unwrap();
        let basis = generate_lie_algebra(&a, &b, 3, DEFAULT_EPS_L).unwrap();
        let (coeffs, resid) = project_onto_basis(&op, &basis).unwrap();
        // Oracle: explicit Gram-Schmidt of op against the basis.
        let mut r = op.matrix().clone();
        for l in basis.elements() {
            let ip = hs_inner(l.matrix(), op.matrix());
            r -= l.matrix() * ip;
        }
        assert_abs_diff_eq!(resid, r.norm(), epsilon = 1e-12);
        for (mu, l) in basis.elements().iter().enumerate() {
            assert_abs_diff_eq!(coeffs[mu], hs_inner(l.matrix(), op.matrix()).re, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjoint_contraction_identity() {
        // <w, C(x, y)> = <C^T(x, w), y> for the pairing over the last slot.
        let a = HermitianOperator::new(pauli('z')).unwrap();
        let b = HermitianOperator::new(pauli('x')).unwrap();
        let basis = generate_lie_algebra(&a, &b, 3, DEFAULT_EPS_L).unwrap();
        let sc = compute_structure_constants(&basis).unwrap();
        let x = RVec::from_vec(vec![0.3, -1.2, 0.7]);
        let y = RVec::from_vec(vec![1.1, 0.4, -0.2]);
        let w = RVec::from_vec(vec![-0.6, 0.9, 0.35]);
        let lhs = w.dot(&sc.hbracket_coeffs(&x, &y));
        let rhs = sc.hbracket_adjoint_coeffs(&x, &w).dot(&y);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn bracket_convention_recovers_paper_constant() {
        // f_ijk = i c_ijk: check on su(2) that [L_i, L_j] = Σ f L_k holds.
        let a = HermitianOperator::new(pauli('z')).unwrap();
        let b = HermitianOperator::new(pauli('x')).unwrap();
        let basis = generate_lie_algebra(&a, &b, 3, DEFAULT_EPS_L).unwrap();
        let sc = compute_structure_constants(&basis).unwrap();
        let plain = commutator(basis.element(0).matrix(), basis.element(1).matrix());
        let mut rebuilt = CMat::zeros(2, 2);
        for &(i, j, k, c) in sc.entries() {
            if (i, j) == (0, 1) {
                rebuilt += basis.element(k as usize).matrix() * C64::new(0.0, c);
            }
        }
        assert!((plain - rebuilt).norm() <= 1e-12);
    }
}
