//! Binary trees indexing the nested integrals of commutators in the Magnus
//! expansion.
//!
//! A tree is either a leaf or a pair `(left, right)` standing for
//! `[∫ left, right]`: the left subtree is integrated up to the time argument
//! shared by the pair and its right subtree. The set `𝕋_k` of trees of order
//! `k` (k+1 leaves, |𝕋_k| = Catalan(k)) is built recursively from all splits
//! `k = order(left) + order(right) + 1`.
//!
//! Leaves carry canonical labels 1..=k+1, assigned by a depth-first traversal
//! that visits the right (non-integrated) child before descending into
//! integrated branches. Label 1 therefore sits at the end of the right spine
//! and carries the outermost integration time.
//!
//! Weights and monomial integrals are exact rationals; high orders mix
//! Bernoulli numbers with nested-integral denominators and cancel
//! catastrophically in floating point.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{MagnusError, Result};
use crate::lie::StructureConstants;
use crate::RVec;

/// Hard guard on the tree order: |𝕋_k| is the k-th Catalan number.
pub const MAX_TREE_ORDER: usize = 12;

/// A node of a [`BinaryTree`]. `Pair(left, right)` reads `[∫ left, right]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Leaf { label: u32 },
    Pair { left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Pair { left, right } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Assign canonical labels: right child first, then the integrated left
    /// branch. `next` is the next free 1-based label.
    fn assign_labels(&mut self, next: &mut u32) {
        match self {
            TreeNode::Leaf { label } => {
                *label = *next;
                *next += 1;
            }
            TreeNode::Pair { left, right } => {
                right.assign_labels(next);
                left.assign_labels(next);
            }
        }
    }
}

/// An Iserles–Nørsett tree of order `k` with `k + 1` canonically labeled
/// leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTree {
    root: TreeNode,
    order: usize,
}

impl BinaryTree {
    /// The single order-0 tree.
    pub fn leaf() -> Self {
        BinaryTree { root: TreeNode::Leaf { label: 1 }, order: 0 }
    }

    /// Compose `[∫ left, right]`; the result has order
    /// `order(left) + order(right) + 1` and freshly assigned labels.
    pub fn pair(left: &BinaryTree, right: &BinaryTree) -> Self {
        let mut root = TreeNode::Pair {
            left: Box::new(left.root.clone()),
            right: Box::new(right.root.clone()),
        };
        let mut next = 1;
        root.assign_labels(&mut next);
        let order = left.order + right.order + 1;
        BinaryTree { root, order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn leaf_count(&self) -> usize {
        self.order + 1
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Labels of bottom-level commutators: pairs whose children are both
    /// leaves, as `(left_label, right_label)`.
    pub fn bottom_pairs(&self) -> Vec<(u32, u32)> {
        fn walk(node: &TreeNode, out: &mut Vec<(u32, u32)>) {
            if let TreeNode::Pair { left, right } = node {
                if let (TreeNode::Leaf { label: ll }, TreeNode::Leaf { label: rl }) =
                    (left.as_ref(), right.as_ref())
                {
                    out.push((*ll, *rl));
                } else {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

type TreeSet = Arc<Vec<Arc<BinaryTree>>>;

fn tree_cache() -> &'static Mutex<HashMap<usize, TreeSet>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, TreeSet>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// All trees of order `k`, deterministically ordered (left order ascending,
/// then left index, then right index). Results are memoized per `k`.
pub fn enumerate_trees(k: usize) -> Result<TreeSet> {
    if k > MAX_TREE_ORDER {
        return Err(MagnusError::Limit(format!(
            "tree order {k} exceeds the guard {MAX_TREE_ORDER} (|T_k| is the k-th Catalan number)"
        )));
    }
    if let Some(hit) = tree_cache().lock().unwrap().get(&k) {
        return Ok(hit.clone());
    }
    let set: TreeSet = if k == 0 {
        Arc::new(vec![Arc::new(BinaryTree::leaf())])
    } else {
        let mut out = Vec::new();
        for left_order in 0..k {
            let right_order = k - 1 - left_order;
            let lefts = enumerate_trees(left_order)?;
            let rights = enumerate_trees(right_order)?;
            for l in lefts.iter() {
                for r in rights.iter() {
                    out.push(Arc::new(BinaryTree::pair(l, r)));
                }
            }
        }
        Arc::new(out)
    };
    tree_cache().lock().unwrap().insert(k, set.clone());
    Ok(set)
}

/// Bernoulli numbers `B_0..=B_n` with the `B_1 = -1/2` convention.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    // Sum_{j=0}^{m} C(m+1, j) B_j = 0 for m >= 1.
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one(); // C(m+1, 0)
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from(binom.clone()) * bj;
            // C(m+1, j+1) = C(m+1, j) * (m+1-j) / (j+1)
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from(BigInt::from(m + 1)));
    }
    b
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

/// Exact weight α(τ): split the tree along its right spine into subtrees
/// τ_1..τ_s, then α(τ) = B_s / s! · Π α(τ_l), with α(leaf) = 1.
pub fn tree_weight(tree: &BinaryTree) -> BigRational {
    fn weight(node: &TreeNode) -> BigRational {
        match node {
            TreeNode::Leaf { .. } => BigRational::one(),
            TreeNode::Pair { .. } => {
                let mut spine_subtrees: Vec<&TreeNode> = Vec::new();
                let mut cur = node;
                while let TreeNode::Pair { left, right } = cur {
                    spine_subtrees.push(left);
                    cur = right;
                }
                let s = spine_subtrees.len();
                let bern = bernoulli_numbers(s).pop().unwrap();
                let mut w = bern / BigRational::from(factorial(s));
                for sub in spine_subtrees {
                    w *= weight(sub);
                }
                w
            }
        }
    }
    weight(&tree.root)
}

/// Exact value of the chained integral over `[0, 1]` defined by `tree`, with
/// the leaf labeled `l` contributing `x_l^{exponents[l]}` (missing labels
/// mean exponent 0).
///
/// The sweep runs leaf-to-root: integrating a branch whose accumulated
/// exponent is γ contributes a factor `1/(γ+1)` and raises the parent's
/// exponent by `γ+1`; siblings of a pair share the time argument, so their
/// exponents add. The result equals the coefficient of `t^{k + Σγ}` of the
/// unnormalized integral.
pub fn tree_monomial_integral(
    tree: &BinaryTree,
    exponents: &BTreeMap<u32, u32>,
) -> Result<BigRational> {
    let n_leaves = tree.leaf_count() as u32;
    for &label in exponents.keys() {
        if label == 0 || label > n_leaves {
            return Err(MagnusError::Validation(format!(
                "exponent refers to leaf label {label}, tree has labels 1..={n_leaves}"
            )));
        }
    }
    // Returns (coefficient, exponent in the node's own time argument).
    fn sweep(node: &TreeNode, exps: &BTreeMap<u32, u32>) -> (BigRational, u64) {
        match node {
            TreeNode::Leaf { label } => {
                let g = exps.get(label).copied().unwrap_or(0) as u64;
                (BigRational::one(), g)
            }
            TreeNode::Pair { left, right } => {
                let (cl, el) = sweep(left, exps);
                let (cr, er) = sweep(right, exps);
                let denom = BigRational::from(BigInt::from(el + 1));
                (cl * cr / denom, el + 1 + er)
            }
        }
    }
    let (coeff, pow) = sweep(&tree.root, exponents);
    Ok(coeff / BigRational::from(BigInt::from(pow + 1)))
}

/// Evaluate the Hermitian-bracket commutator chain of a tree in the Lie
/// basis. Bit `label - 1` of `placement` selects the control-carrying
/// generator (coefficients `b`) at that leaf; unset bits select `a`. Each
/// pair contracts `-i[x, y]` through the structure constants, so the result
/// stays real. Self-commuting subchains short-circuit to the zero vector.
pub fn tree_commutator_chain(
    tree: &BinaryTree,
    placement: u64,
    a: &RVec,
    b: &RVec,
    sc: &StructureConstants,
) -> Result<RVec> {
    let d = sc.dim_g();
    if a.len() != d || b.len() != d {
        return Err(MagnusError::DimensionMismatch(format!(
            "chain coefficients have lengths {}/{}, structure constants have dim {}",
            a.len(),
            b.len(),
            d
        )));
    }
    fn eval(
        node: &TreeNode,
        placement: u64,
        a: &RVec,
        b: &RVec,
        sc: &StructureConstants,
    ) -> RVec {
        match node {
            TreeNode::Leaf { label } => {
                if placement >> (label - 1) & 1 == 1 {
                    b.clone()
                } else {
                    a.clone()
                }
            }
            TreeNode::Pair { left, right } => {
                let x = eval(left, placement, a, b, sc);
                if x.iter().all(|v| *v == 0.0) {
                    return x;
                }
                let y = eval(right, placement, a, b, sc);
                if y.iter().all(|v| *v == 0.0) {
                    return y;
                }
                sc.hbracket_coeffs(&x, &y)
            }
        }
    }
    Ok(eval(&tree.root, placement, a, b, sc))
}

/// Convert an exact rational to `f64`. The single point where tree
/// arithmetic leaves exact-land.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    // Scale into a range where numerator/denominator both fit in f64.
    let num = r.numer();
    let den = r.denom();
    let nf = bigint_to_f64(num);
    let df = bigint_to_f64(den);
    nf / df
}

fn bigint_to_f64(v: &BigInt) -> f64 {
    // Values appearing in weights/integrals are far inside f64 range, but be
    // defensive anyway.
    let s = v.to_string();
    s.parse::<f64>().unwrap_or(if v.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}
