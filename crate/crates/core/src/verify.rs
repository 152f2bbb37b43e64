//! Independent oracles and experiment harnesses.
//!
//! Nothing in here shares code with the compiled-tensor path: the ODE
//! reference integrates the Schrödinger equation directly with an explicit
//! 8th-order Runge–Kutta method, and the quadrature oracle evaluates the
//! first three expansion terms from their integral definitions with nested
//! Gauss–Legendre rules and dense matrix commutators.

use rayon::prelude::*;

use crate::coeffs::CoeffTensor;
use crate::error::{MagnusError, Result};
use crate::eval::{assemble, eval_coeffs, PolynomialControl, Propagator};
use crate::lie::LieBasis;
use crate::models::haar_state;
use crate::operator::{commutator, HermitianOperator};
use crate::quad::{gauss_legendre, scale_to};
use crate::rng::{rng_from_seed, subseed};
use crate::{C64, CMat, CVec};

/// One sample of an error scan.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub t: f64,
    pub sample_id: usize,
    pub eps: f64,
    /// Sample sits at the floating-point floor and is excluded from fits.
    pub floor: bool,
}

/// Aggregate of one scan-grid point.
#[derive(Debug, Clone)]
pub struct ScanAggregate {
    pub t: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Result of an error scan: per-sample rows, per-t aggregates, and the
/// fitted apparent power law.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub aggregates: Vec<ScanAggregate>,
    /// Fitted exponent of mean error vs t, over the fit window.
    pub k_app: Option<f64>,
    pub fit_window: (f64, f64),
    pub fit_points: usize,
}

/// Fit window for the apparent power law: the lower edge suppresses the
/// floating-point floor, the upper edge the pre-asymptotic regime.
pub const FIT_WINDOW: (f64, f64) = (1e-14, 1e-2);

// ---------------------------------------------------------------------------
// High-order Runge-Kutta reference
// ---------------------------------------------------------------------------

/// Cooper–Verner 11-stage, 8th-order explicit tableau (entries are algebraic
/// in √21).
fn cooper_verner() -> (Vec<Vec<f64>>, Vec<f64>) {
    let s = 21f64.sqrt();
    let a: Vec<Vec<f64>> = vec![
        vec![],
        vec![1.0 / 2.0],
        vec![1.0 / 4.0, 1.0 / 4.0],
        vec![1.0 / 7.0, -(7.0 + 3.0 * s) / 98.0, (21.0 + 5.0 * s) / 49.0],
        vec![(11.0 + s) / 84.0, 0.0, (18.0 + 4.0 * s) / 63.0, (21.0 - s) / 252.0],
        vec![
            (5.0 + s) / 48.0,
            0.0,
            (9.0 + s) / 36.0,
            (-231.0 + 14.0 * s) / 360.0,
            (63.0 - 7.0 * s) / 80.0,
        ],
        vec![
            (10.0 - s) / 42.0,
            0.0,
            (-432.0 + 92.0 * s) / 315.0,
            (633.0 - 145.0 * s) / 90.0,
            (-504.0 + 115.0 * s) / 70.0,
            (63.0 - 13.0 * s) / 35.0,
        ],
        vec![
            1.0 / 14.0,
            0.0,
            0.0,
            0.0,
            (14.0 - 3.0 * s) / 126.0,
            (13.0 - 3.0 * s) / 63.0,
            1.0 / 9.0,
        ],
        vec![
            1.0 / 32.0,
            0.0,
            0.0,
            0.0,
            (91.0 - 21.0 * s) / 576.0,
            11.0 / 72.0,
            -(385.0 + 75.0 * s) / 1152.0,
            (63.0 + 13.0 * s) / 128.0,
        ],
        vec![
            1.0 / 14.0,
            0.0,
            0.0,
            0.0,
            1.0 / 9.0,
            -(733.0 + 147.0 * s) / 2205.0,
            (515.0 + 111.0 * s) / 504.0,
            -(51.0 + 11.0 * s) / 56.0,
            (132.0 + 28.0 * s) / 245.0,
        ],
        vec![
            0.0,
            0.0,
            0.0,
            0.0,
            (-42.0 + 7.0 * s) / 18.0,
            (-18.0 + 28.0 * s) / 45.0,
            -(273.0 + 53.0 * s) / 72.0,
            (301.0 + 53.0 * s) / 72.0,
            (28.0 - 28.0 * s) / 45.0,
            (49.0 - 7.0 * s) / 18.0,
        ],
    ];
    let b = vec![
        1.0 / 20.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        49.0 / 180.0,
        16.0 / 45.0,
        49.0 / 180.0,
        1.0 / 20.0,
    ];
    (a, b)
}

fn rk8_fixed_steps(
    a_op: &CMat,
    b_op: &CMat,
    d: &PolynomialControl,
    t: f64,
    psi0: &CVec,
    steps: usize,
) -> CVec {
    let (a, b) = cooper_verner();
    let c: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let h = t / steps as f64;
    let rhs = |time: f64, psi: &CVec| -> CVec {
        let hmat = a_op + b_op * C64::new(d.value(time), 0.0);
        (hmat * psi) * C64::new(0.0, -1.0)
    };
    let mut psi = psi0.clone();
    for step in 0..steps {
        let t0 = step as f64 * h;
        let mut k: Vec<CVec> = Vec::with_capacity(11);
        for stage in 0..11 {
            let mut y = psi.clone();
            for (j, aij) in a[stage].iter().enumerate() {
                if *aij != 0.0 {
                    y += &k[j] * C64::new(h * aij, 0.0);
                }
            }
            k.push(rhs(t0 + c[stage] * h, &y));
        }
        for (j, bj) in b.iter().enumerate() {
            if *bj != 0.0 {
                psi += &k[j] * C64::new(h * bj, 0.0);
            }
        }
    }
    psi
}

/// Reference propagation of `dψ/dt = -i (A + d(t) B) ψ` with a fixed-step
/// 8th-order explicit Runge–Kutta method. No renormalization is applied —
/// norm drift is part of the error budget.
///
/// The result is validated by step doubling: integrating again with `2 ×
/// steps` must change the state by no more than 1e-13 in 2-norm, otherwise
/// the reference is declared unconverged. The finer of the two states is
/// returned.
pub fn ode_reference(
    a: &HermitianOperator,
    b: &HermitianOperator,
    d: &PolynomialControl,
    t: f64,
    psi0: &CVec,
    steps: usize,
) -> Result<CVec> {
    if steps < 16 {
        return Err(MagnusError::Validation("reference needs steps >= 16".into()));
    }
    if a.dim() != b.dim() || psi0.len() != a.dim() {
        return Err(MagnusError::DimensionMismatch("operator/state dims disagree".into()));
    }
    let coarse = rk8_fixed_steps(a.matrix(), b.matrix(), d, t, psi0, steps);
    let fine = rk8_fixed_steps(a.matrix(), b.matrix(), d, t, psi0, 2 * steps);
    let drift = (&fine - &coarse).norm();
    if drift > 1e-13 {
        return Err(MagnusError::Numeric(format!(
            "reference unconverged: step doubling moved the state by {drift:.3e}"
        )));
    }
    Ok(fine)
}

// ---------------------------------------------------------------------------
// Quadrature oracle for the first three expansion terms
// ---------------------------------------------------------------------------

/// The first `k_max <= 3` Magnus terms from their nested-integral
/// definitions, evaluated with Gauss–Legendre rules of increasing order
/// until two levels agree to 1e-10 in Frobenius norm.
pub fn magnus_terms_quadrature(
    a: &HermitianOperator,
    b: &HermitianOperator,
    d: &PolynomialControl,
    t: f64,
    k_max: usize,
) -> Result<Vec<CMat>> {
    if !(1..=3).contains(&k_max) {
        return Err(MagnusError::Validation("quadrature oracle supports k_max in 1..=3".into()));
    }
    let mut prev: Option<Vec<CMat>> = None;
    for n in [8usize, 16, 32, 64] {
        let cur = magnus_terms_fixed_order(a.matrix(), b.matrix(), d, t, k_max, n);
        if let Some(p) = &prev {
            let diff: f64 = p
                .iter()
                .zip(&cur)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            let scale = cur.iter().map(|m| m.norm()).fold(1.0, f64::max);
            if diff <= 1e-10 * scale {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Err(MagnusError::Numeric(
        "nested quadrature did not stabilize to 1e-10".into(),
    ))
}

/// Sum of the quadrature terms as a Hermitian operator (symmetrized to kill
/// roundoff-level anti-Hermitian residue).
pub fn quadrature_oracle(
    a: &HermitianOperator,
    b: &HermitianOperator,
    d: &PolynomialControl,
    t: f64,
    k_max: usize,
) -> Result<HermitianOperator> {
    let terms = magnus_terms_quadrature(a, b, d, t, k_max)?;
    let dim = a.dim();
    let mut sum = CMat::zeros(dim, dim);
    for term in terms {
        sum += term;
    }
    let herm = (&sum + sum.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::new(herm)
}

fn magnus_terms_fixed_order(
    a: &CMat,
    b: &CMat,
    d: &PolynomialControl,
    t: f64,
    k_max: usize,
    n: usize,
) -> Vec<CMat> {
    let ham = |s: f64| -> CMat { a + b * C64::new(d.value(s), 0.0) };
    let (base_x, base_w) = gauss_legendre(n);
    let dim = a.nrows();
    let mut out = Vec::with_capacity(k_max);

    // M1 = ∫_0^t H
    let (x1, w1) = scale_to(&base_x, &base_w, 0.0, t);
    let mut m1 = CMat::zeros(dim, dim);
    for (x, w) in x1.iter().zip(&w1) {
        m1 += ham(*x) * C64::new(*w, 0.0);
    }
    out.push(m1);

    if k_max >= 2 {
        // M2 = -i/2 ∫_0^t dt1 ∫_0^{t1} dt2 [H(t1), H(t2)]
        let mut m2 = CMat::zeros(dim, dim);
        for (t1, w_1) in x1.iter().zip(&w1) {
            let h1 = ham(*t1);
            let (x2, w2) = scale_to(&base_x, &base_w, 0.0, *t1);
            let mut inner = CMat::zeros(dim, dim);
            for (t2, w_2) in x2.iter().zip(&w2) {
                inner += ham(*t2) * C64::new(*w_2, 0.0);
            }
            m2 += commutator(&h1, &inner) * C64::new(*w_1, 0.0);
        }
        m2 *= C64::new(0.0, -0.5);
        out.push(m2);
    }

    if k_max >= 3 {
        // M3 = -1/6 ∫∫∫_{t3<t2<t1} ([H1,[H2,H3]] + [H3,[H2,H1]])
        let mut m3 = CMat::zeros(dim, dim);
        for (t1, w_1) in x1.iter().zip(&w1) {
            let h1 = ham(*t1);
            let (x2, w2) = scale_to(&base_x, &base_w, 0.0, *t1);
            let mut mid = CMat::zeros(dim, dim);
            for (t2, w_2) in x2.iter().zip(&w2) {
                let h2 = ham(*t2);
                let (x3, w3) = scale_to(&base_x, &base_w, 0.0, *t2);
                for (t3, w_3) in x3.iter().zip(&w3) {
                    let h3 = ham(*t3);
                    let term = commutator(&h1, &commutator(&h2, &h3))
                        + commutator(&h3, &commutator(&h2, &h1));
                    mid += term * C64::new(w_2 * w_3, 0.0);
                }
            }
            m3 += mid * C64::new(*w_1, 0.0);
        }
        m3 *= C64::new(-1.0 / 6.0, 0.0);
        out.push(m3);
    }
    out
}

// ---------------------------------------------------------------------------
// Error-scaling scans
// ---------------------------------------------------------------------------

/// For each grid time and sample, propagate a Haar-random state once with
/// the compiled expansion truncated at `k_eval` and once with the ODE
/// reference, and record `ε = ‖ψ_M - ψ_ODE‖₂`. Control coefficients are
/// drawn uniformly from `[-1, 1]` up to the compiled degree. The fitted
/// exponent `k_app` comes from a log-log least-squares fit of the per-t mean
/// over [`FIT_WINDOW`].
#[allow(clippy::too_many_arguments)]
pub fn error_scan(
    basis: &LieBasis,
    ct: &CoeffTensor,
    a: &HermitianOperator,
    b: &HermitianOperator,
    k_eval: u8,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<ScanResult> {
    if k_eval < 1 || k_eval > ct.meta.k_max {
        return Err(MagnusError::Validation(format!(
            "k_eval = {k_eval} outside 1..={}",
            ct.meta.k_max
        )));
    }
    if t_grid.is_empty() || n_samples == 0 {
        return Err(MagnusError::Validation("empty scan grid".into()));
    }
    let m = ct.meta.m as usize;
    let tasks: Vec<(usize, usize)> = (0..t_grid.len())
        .flat_map(|ti| (0..n_samples).map(move |s| (ti, s)))
        .collect();
    let rows: Vec<Result<ScanRow>> = tasks
        .par_iter()
        .map(|&(ti, sample)| {
            let t = t_grid[ti];
            let stream = (ti * n_samples + sample) as u64;
            let task_seed = subseed(seed, stream);
            let psi0 = haar_state(a.dim(), task_seed)?;
            let mut rng = rng_from_seed(subseed(task_seed, 1));
            use rand::Rng;
            let coeffs: Vec<f64> = (0..=m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let d = PolynomialControl::new(coeffs)?;
            let psi_ode = ode_reference(a, b, &d, t, &psi0, 100)?;
            let slices = eval_coeffs(ct, t, &d)?;
            let eh = assemble(basis, slices[..k_eval as usize].to_vec(), t)?;
            let psi_m = Propagator::new(&eh.operator)?.apply(&psi0);
            let eps = (&psi_m - &psi_ode).norm();
            Ok(ScanRow { t, sample_id: sample, eps, floor: eps < FIT_WINDOW.0 })
        })
        .collect();

    let mut all_rows = Vec::with_capacity(rows.len());
    for r in rows {
        all_rows.push(r?);
    }

    let aggregates: Vec<ScanAggregate> = t_grid
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let slice = &all_rows[ti * n_samples..(ti + 1) * n_samples];
            let mean = slice.iter().map(|r| r.eps).sum::<f64>() / n_samples as f64;
            let min = slice.iter().map(|r| r.eps).fold(f64::INFINITY, f64::min);
            let max = slice.iter().map(|r| r.eps).fold(0.0, f64::max);
            ScanAggregate { t, mean, min, max }
        })
        .collect();

    let fit_points: Vec<(f64, f64)> = aggregates
        .iter()
        .filter(|agg| agg.mean > FIT_WINDOW.0 && agg.mean < FIT_WINDOW.1)
        .map(|agg| (agg.t, agg.mean))
        .collect();
    let k_app = fit_power_law(&fit_points);

    Ok(ScanResult {
        rows: all_rows,
        aggregates,
        k_app,
        fit_window: FIT_WINDOW,
        fit_points: fit_points.len(),
    })
}

/// Least-squares slope of `log eps` against `log t`. Needs at least two
/// distinct abscissae.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(t, e)| (t.ln(), e.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Write the scan as CSV: per-sample rows then a fit summary comment line.
pub fn write_scan_csv<W: std::io::Write>(scan: &ScanResult, mut w: W) -> Result<()> {
    writeln!(w, "t,sample_id,eps_me,eps_floor_flag")?;
    for row in &scan.rows {
        writeln!(
            w,
            "{:.17e},{},{:.17e},{}",
            row.t,
            row.sample_id,
            row.eps,
            u8::from(row.floor)
        )?;
    }
    match scan.k_app {
        Some(k) => writeln!(
            w,
            "# fit: k_app={:.6} window=[{:.1e},{:.1e}] points={}",
            k, scan.fit_window.0, scan.fit_window.1, scan.fit_points
        )?,
        None => writeln!(w, "# fit: k_app=nan (empty valid window)")?,
    }
    Ok(())
}
