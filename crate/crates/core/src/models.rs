//! Hamiltonian control models, target gates, and reference states.
//!
//! Three models, all of the single-control form `H(t) = A + d(t) B`:
//!
//! * `sparse`  — 1-D transverse-field Ising chain: `A = Σ Z_i Z_{i+1}`,
//!   `B = Σ X_i`.
//! * `dense`   — long-range Ising: `A = Σ_{i<j} Z_i Z_j / |i-j|`, same `B`.
//! * `rydberg` — perfect-blockade three-level model (per atom
//!   `{|0>, |1>, |r>}`): `A = ½ Σ_i X_i Q_[i]`, `B = ½ Σ_i Z_i` with
//!   `X = |0><0| + |r><1| + |1><r|`, `Z = |0><0| + |1><1| - |r><r|`,
//!   `Q = |0><0| + |1><1|`, and `Q_[i]` the product of `Q_j` over `j ≠ i`.
//!
//! Gates built for the Rydberg model act on the full `3^n` space and leave
//! every component containing `|r>` untouched; the cost function only ever
//! sees them on qubit-subspace states, but a fixed convention is needed for
//! matrix-level comparisons.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MagnusError, Result};
use crate::operator::{kron, HermitianOperator};
use crate::rng::rng_from_seed;
use crate::{C64, CMat, CVec};

/// Which control model to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sparse,
    Dense,
    Rydberg,
}

impl std::str::FromStr for ModelKind {
    type Err = MagnusError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(ModelKind::Sparse),
            "dense" => Ok(ModelKind::Dense),
            "rydberg" => Ok(ModelKind::Rydberg),
            other => Err(MagnusError::Validation(format!(
                "unknown model '{other}' (expected sparse, dense, or rydberg)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Sparse => "sparse",
            ModelKind::Dense => "dense",
            ModelKind::Rydberg => "rydberg",
        })
    }
}

/// A model selection: kind plus atom/qubit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(MagnusError::Validation("model needs n >= 1".into()));
        }
        match kind {
            ModelKind::Sparse | ModelKind::Dense if n > 10 => Err(MagnusError::Limit(format!(
                "ising model with n = {n} exceeds the dim <= 1024 guard"
            ))),
            ModelKind::Rydberg if n > 5 => Err(MagnusError::Limit(format!(
                "rydberg model with n = {n} exceeds the n <= 5 guard"
            ))),
            _ => Ok(ModelSpec { kind, n }),
        }
    }

    /// Local dimension: 2 for the Ising models, 3 for rydberg.
    pub fn local_dim(&self) -> usize {
        match self.kind {
            ModelKind::Sparse | ModelKind::Dense => 2,
            ModelKind::Rydberg => 3,
        }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.n as u32)
    }
}

fn qubit_op(which: char) -> CMat {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    match which {
        'x' => CMat::from_row_slice(2, 2, &[o, l, l, o]),
        'z' => CMat::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => unreachable!(),
    }
}

/// Three-level single-atom operators in the basis `(|0>, |1>, |r>)`.
fn rydberg_op(which: char) -> CMat {
    let mut m = CMat::zeros(3, 3);
    let l = C64::new(1.0, 0.0);
    match which {
        // X = |0><0| + |r><1| + |1><r|
        'x' => {
            m[(0, 0)] = l;
            m[(2, 1)] = l;
            m[(1, 2)] = l;
        }
        // Z = |0><0| + |1><1| - |r><r|
        'z' => {
            m[(0, 0)] = l;
            m[(1, 1)] = l;
            m[(2, 2)] = -l;
        }
        // Q = |0><0| + |1><1|
        'q' => {
            m[(0, 0)] = l;
            m[(1, 1)] = l;
        }
        _ => unreachable!(),
    }
    m
}

/// Embed a local operator at site `site` of `n` sites with local dimension
/// `ld`, identity elsewhere.
fn embed(local: &CMat, site: usize, n: usize, ld: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for i in 0..n {
        let factor = if i == site { local.clone() } else { CMat::identity(ld, ld) };
        out = kron(&out, &factor);
    }
    out
}

/// Build the generator pair `(A, B)` of a model.
pub fn build_model(spec: &ModelSpec) -> Result<(HermitianOperator, HermitianOperator)> {
    let n = spec.n;
    let dim = spec.dim();
    match spec.kind {
        ModelKind::Sparse => {
            let z = qubit_op('z');
            let x = qubit_op('x');
            let mut a = CMat::zeros(dim, dim);
            for i in 0..n.saturating_sub(1) {
                a += embed(&z, i, n, 2) * embed(&z, i + 1, n, 2);
            }
            let mut b = CMat::zeros(dim, dim);
            for i in 0..n {
                b += embed(&x, i, n, 2);
            }
            Ok((HermitianOperator::new(a)?, HermitianOperator::new(b)?))
        }
        ModelKind::Dense => {
            let z = qubit_op('z');
            let x = qubit_op('x');
            let mut a = CMat::zeros(dim, dim);
            for i in 0..n {
                for j in (i + 1)..n {
                    // Couplings 1/|i-j| as exact rationals, converted once.
                    let jij = 1.0 / (j - i) as f64;
                    a += embed(&z, i, n, 2) * embed(&z, j, n, 2) * C64::new(jij, 0.0);
                }
            }
            let mut b = CMat::zeros(dim, dim);
            for i in 0..n {
                b += embed(&x, i, n, 2);
            }
            Ok((HermitianOperator::new(a)?, HermitianOperator::new(b)?))
        }
        ModelKind::Rydberg => {
            let x = rydberg_op('x');
            let z = rydberg_op('z');
            let q = rydberg_op('q');
            let mut a = CMat::zeros(dim, dim);
            for i in 0..n {
                let mut term = embed(&x, i, n, 3);
                for j in 0..n {
                    if j != i {
                        term *= embed(&q, j, n, 3);
                    }
                }
                a += term;
            }
            a *= C64::new(0.5, 0.0);
            let mut b = CMat::zeros(dim, dim);
            for i in 0..n {
                b += embed(&z, i, n, 3);
            }
            b *= C64::new(0.5, 0.0);
            Ok((HermitianOperator::new(a)?, HermitianOperator::new(b)?))
        }
    }
}

/// Index of the basis state with qubit values `bits` (big-endian site order)
/// in a register of local dimension `ld`.
fn state_index(digits: &[usize], ld: usize) -> usize {
    digits.iter().fold(0, |acc, d| acc * ld + d)
}

/// The parametrized multi-controlled phase gate on `n` atoms:
/// `e^{iφ}` on every computational basis state except `|1>^{⊗n}`, identity
/// on `|1>^{⊗n}` and on any component containing `|r>`.
pub fn ckp_gate(n: usize, phi: f64, local_dim: usize) -> Result<CMat> {
    if n < 1 {
        return Err(MagnusError::Validation("ckp gate needs n >= 1".into()));
    }
    let dim = local_dim.pow(n as u32);
    let mut g = CMat::identity(dim, dim);
    let phase = C64::new(0.0, phi).exp();
    let all_ones = (1usize << n) - 1;
    for mask in 0..(1usize << n) {
        if mask == all_ones {
            continue;
        }
        let digits: Vec<usize> = (0..n).map(|s| (mask >> (n - 1 - s)) & 1).collect();
        g[(state_index(&digits, local_dim), state_index(&digits, local_dim))] = phase;
    }
    Ok(g)
}

/// Product of single-atom Z rotations
/// `R_Z(θ) = I cos(θ/2) - i (I - 2|1><1|) sin(θ/2)` on the qubit levels,
/// identity on `|r>`.
pub fn rz_product(n: usize, theta: f64, local_dim: usize) -> CMat {
    let mut local = CMat::identity(local_dim, local_dim);
    local[(0, 0)] = C64::new(0.0, -theta / 2.0).exp();
    local[(1, 1)] = C64::new(0.0, theta / 2.0).exp();
    let mut out = CMat::identity(1, 1);
    for _ in 0..n {
        out = kron(&out, &local);
    }
    out
}

/// Generator `K` of [`rz_product`]: `R(θ) = exp(-i θ K)` with
/// `K = Σ_i (|0><0|_i - |1><1|_i) / 2` (zero on `|r>`).
pub fn rz_generator(n: usize, local_dim: usize) -> CMat {
    let mut local = CMat::zeros(local_dim, local_dim);
    local[(0, 0)] = C64::new(0.5, 0.0);
    local[(1, 1)] = C64::new(-0.5, 0.0);
    let dim = local_dim.pow(n as u32);
    let mut out = CMat::zeros(dim, dim);
    for i in 0..n {
        out += embed(&local, i, n, local_dim);
    }
    out
}

/// The permutation-symmetric product states
/// `|ψ_i> = |1>^{⊗i} |0>^{⊗(n-i)}`, `i = 0..=n`, in the `3^n` space.
pub fn symmetric_basis_states(n: usize) -> Vec<CVec> {
    let dim = 3usize.pow(n as u32);
    (0..=n)
        .map(|i| {
            let digits: Vec<usize> = (0..n).map(|s| usize::from(s < i)).collect();
            let mut v = CVec::zeros(dim);
            v[state_index(&digits, 3)] = C64::new(1.0, 0.0);
            v
        })
        .collect()
}

/// Haar-random state: normalized vector of iid complex standard normals.
pub fn haar_state(dim: usize, seed: u64) -> Result<CVec> {
    if dim < 1 {
        return Err(MagnusError::Validation("haar_state needs dim >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut v = CVec::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let n = v.norm();
    v /= C64::new(n, 0.0);
    Ok(v)
}
