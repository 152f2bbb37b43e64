//! Hermite-spline pulse parametrization.
//!
//! A spline of class `C^L` with `S` segments is parametrized by
//! `h⃗ = (Δt_1..Δt_S, h_0^{(0)}..h_L^{(S)})`: per node the value and first
//! `L` derivatives, per segment a duration. Each segment carries the
//! polynomial of degree `2L+1` (in segment-local time, `d(t) = Σ d_n t^n/n!`)
//! that matches the node data at both ends; the `(2L+2)`-constraint linear
//! solve is exact for polynomial data.
//!
//! The evaluator works in per-segment coordinates
//! `c⃗_s = (Δt_s, d_0^{(s)}..d_m^{(s)})`, so gradient-based optimization
//! needs the Jacobian `∂c⃗/∂h⃗`; it is assembled from the variational form
//! of the matching constraints, one pseudo-inverted block per segment.

use nalgebra::DMatrix;

use crate::error::{MagnusError, Result};
use crate::eval::PolynomialControl;
use crate::{RMat, RVec};

/// Relative singular-value threshold for the per-segment pseudo-inverse.
const PINV_RTOL: f64 = 1e-12;

/// Control pulse as Hermite nodes plus segment durations.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline {
    smoothness: usize,
    dt: Vec<f64>,
    /// `(S+1) × (L+1)` node data `h_l^{(s)}`.
    nodes: Vec<Vec<f64>>,
}

impl HermiteSpline {
    pub fn new(smoothness: usize, dt: Vec<f64>, nodes: Vec<Vec<f64>>) -> Result<Self> {
        if dt.is_empty() {
            return Err(MagnusError::Validation("spline needs at least one segment".into()));
        }
        if nodes.len() != dt.len() + 1 {
            return Err(MagnusError::Validation(format!(
                "expected {} nodes for {} segments, got {}",
                dt.len() + 1,
                dt.len(),
                nodes.len()
            )));
        }
        if nodes.iter().any(|n| n.len() != smoothness + 1) {
            return Err(MagnusError::Validation(format!(
                "every node needs {} entries (value + {} derivatives)",
                smoothness + 1,
                smoothness
            )));
        }
        if dt.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(MagnusError::Validation("segment durations must be non-negative".into()));
        }
        Ok(HermiteSpline { smoothness, dt, nodes })
    }

    /// Smoothness class L.
    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn segment_count(&self) -> usize {
        self.dt.len()
    }

    pub fn durations(&self) -> &[f64] {
        &self.dt
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn total_duration(&self) -> f64 {
        self.dt.iter().sum()
    }

    /// Degree of the per-segment polynomial, `2L + 1`.
    pub fn poly_degree(&self) -> usize {
        2 * self.smoothness + 1
    }

    /// `(S+1)(L+1) + S`.
    pub fn param_count(&self) -> usize {
        (self.segment_count() + 1) * (self.smoothness + 1) + self.segment_count()
    }

    /// Flatten to the parameter vector `(Δt_1..Δt_S, h_0^{(0)}..h_L^{(S)})`.
    pub fn to_params(&self) -> RVec {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&self.dt);
        for node in &self.nodes {
            out.extend_from_slice(node);
        }
        RVec::from_vec(out)
    }

    /// Inverse of [`Self::to_params`].
    pub fn from_params(smoothness: usize, segments: usize, params: &RVec) -> Result<Self> {
        let expect = (segments + 1) * (smoothness + 1) + segments;
        if params.len() != expect {
            return Err(MagnusError::DimensionMismatch(format!(
                "parameter vector of length {}, expected {}",
                params.len(),
                expect
            )));
        }
        let dt: Vec<f64> = params.iter().take(segments).copied().collect();
        let mut nodes = Vec::with_capacity(segments + 1);
        for s in 0..=segments {
            let base = segments + s * (smoothness + 1);
            nodes.push((0..=smoothness).map(|l| params[base + l]).collect());
        }
        HermiteSpline::new(smoothness, dt, nodes)
    }

    /// Pulse value at a global time (clamped to the pulse span).
    pub fn value(&self, t_global: f64) -> Result<f64> {
        let segs = spline_to_segments(self)?;
        let mut t = t_global.max(0.0);
        for (idx, (dt, poly)) in segs.segments.iter().enumerate() {
            if t <= *dt || idx == segs.segments.len() - 1 {
                return Ok(poly.value(t.min(*dt)));
            }
            t -= dt;
        }
        unreachable!()
    }
}

/// Per-segment coordinates `(Δt_s, d(t) = Σ d_n t^n/n!)`.
#[derive(Debug, Clone)]
pub struct SegmentPolynomials {
    pub segments: Vec<(f64, PolynomialControl)>,
}

impl SegmentPolynomials {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|(dt, _)| dt).sum()
    }
}

/// End-condition row: `h_l^{(s)} = Σ_{n=l}^m d_n Δt^{n-l}/(n-l)!`.
fn end_row(l: usize, m: usize, dt: f64) -> Vec<f64> {
    let mut row = vec![0.0; m + 1];
    let mut fact = 1.0;
    let mut power = 1.0;
    for (idx, n) in (l..=m).enumerate() {
        if idx > 0 {
            power *= dt;
            fact *= idx as f64;
        }
        row[n] = power / fact;
    }
    row
}

/// Solve every segment's `(2L+2) × (2L+2)` matching system.
pub fn spline_to_segments(h: &HermiteSpline) -> Result<SegmentPolynomials> {
    let l_max = h.smoothness;
    let m = h.poly_degree();
    let n_unknowns = m + 1;
    let mut segments = Vec::with_capacity(h.segment_count());
    for s in 0..h.segment_count() {
        let dt = h.dt[s];
        if dt == 0.0 {
            // Zero-length segment: the polynomial is underdetermined (start
            // and end conditions coincide); extend the start node data.
            let mut coeffs = vec![0.0; n_unknowns];
            coeffs[..=l_max].copy_from_slice(&h.nodes[s]);
            segments.push((dt, PolynomialControl::new(coeffs)?));
            continue;
        }
        let mut a = DMatrix::<f64>::zeros(n_unknowns, n_unknowns);
        let mut rhs = RVec::zeros(n_unknowns);
        for l in 0..=l_max {
            a[(l, l)] = 1.0;
            rhs[l] = h.nodes[s][l];
        }
        for l in 0..=l_max {
            let row = end_row(l, m, dt);
            for (n, v) in row.iter().enumerate() {
                a[(l_max + 1 + l, n)] = *v;
            }
            rhs[l_max + 1 + l] = h.nodes[s + 1][l];
        }
        let lu = a.lu();
        let coeffs = lu.solve(&rhs).ok_or_else(|| {
            MagnusError::Numeric(format!("singular Hermite system at segment {s} (dt = {dt})"))
        })?;
        segments.push((dt, PolynomialControl::new(coeffs.iter().copied().collect())?));
    }
    Ok(SegmentPolynomials { segments })
}

/// Index of `Δt_s` (0-based segment) in the `c⃗` packing.
pub fn c_dt_index(segment: usize, m: usize) -> usize {
    segment * (m + 2)
}

/// Index of `d_n^{(s)}` in the `c⃗` packing.
pub fn c_coeff_index(segment: usize, n: usize, m: usize) -> usize {
    segment * (m + 2) + 1 + n
}

/// Jacobian `∂c⃗/∂h⃗` of the segment coordinates with respect to the spline
/// parameters, `c⃗ = (Δt_1, d⃗^{(1)}, ..., Δt_S, d⃗^{(S)})` against
/// `h⃗ = (Δt_1..Δt_S, nodes...)`.
///
/// Built from the variational matching equations `A δh = B δc`; `B` is block
/// diagonal per segment and inverted blockwise by an SVD pseudo-inverse with
/// relative threshold `1e-12`.
pub fn spline_jacobian(h: &HermiteSpline) -> Result<RMat> {
    let l_max = h.smoothness;
    let m = h.poly_degree();
    let seg_rows = m + 2; // Δt equation + (L+1) start + (L+1) end
    let dim_c = h.segment_count() * seg_rows;
    let dim_h = h.param_count();
    let segs = spline_to_segments(h)?;
    let mut jac = RMat::zeros(dim_c, dim_h);

    let h_node_index = |s: usize, l: usize| h.segment_count() + s * (l_max + 1) + l;

    for s in 0..h.segment_count() {
        let dt = h.dt[s];
        let d = segs.segments[s].1.coeffs();
        // B block: rows are (Δt eq, start eqs, end eqs), columns (Δt, d_0..d_m).
        let mut b = DMatrix::<f64>::zeros(seg_rows, seg_rows);
        b[(0, 0)] = 1.0;
        for l in 0..=l_max {
            b[(1 + l, 1 + l)] = 1.0;
        }
        for l in 0..=l_max {
            let r = 1 + (l_max + 1) + l;
            let row = end_row(l, m, dt);
            for (n, v) in row.iter().enumerate() {
                b[(r, 1 + n)] = *v;
            }
            // Δt-dependence of the end condition:
            // Σ_{n=l+1}^m d_n Δt^{n-l-1}/(n-l-1)!
            let mut v = 0.0;
            let mut fact = 1.0;
            let mut power = 1.0;
            for (idx, n) in ((l + 1)..=m).enumerate() {
                if idx > 0 {
                    power *= dt;
                    fact *= idx as f64;
                }
                v += d[n] * power / fact;
            }
            b[(r, 0)] = v;
        }
        // A block: same rows against the global h coordinates.
        let mut a = DMatrix::<f64>::zeros(seg_rows, dim_h);
        a[(0, s)] = 1.0; // δΔt'_s
        for l in 0..=l_max {
            a[(1 + l, h_node_index(s, l))] = 1.0;
            a[(1 + (l_max + 1) + l, h_node_index(s + 1, l))] = 1.0;
        }
        let svd = b.svd(true, true);
        let smax = svd.singular_values.max();
        let binv_a = svd
            .pseudo_inverse(PINV_RTOL * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| MagnusError::Numeric(format!("pseudo-inverse failed: {e}")))?
            * a;
        jac.view_mut((s * seg_rows, 0), (seg_rows, dim_h)).copy_from(&binv_a);
    }
    Ok(jac)
}

/// Refine a spline to `new_segments` by subdividing existing segments (the
/// piece with the largest current duration splits first), sampling the new
/// node values and derivatives exactly off the existing segment polynomials.
/// The represented pulse is unchanged pointwise and the total duration is
/// preserved exactly.
pub fn resample(h: &HermiteSpline, new_segments: usize) -> Result<HermiteSpline> {
    let s_old = h.segment_count();
    if new_segments <= s_old {
        return Err(MagnusError::Validation(format!(
            "resample target {new_segments} must exceed current {s_old}"
        )));
    }
    // Pieces per old segment: split the largest current piece, ties to the
    // lowest segment index.
    let mut pieces = vec![1usize; s_old];
    for _ in 0..(new_segments - s_old) {
        let mut best = 0;
        let mut best_len = f64::NEG_INFINITY;
        for (s, &n) in pieces.iter().enumerate() {
            let len = h.dt[s] / n as f64;
            if len > best_len {
                best_len = len;
                best = s;
            }
        }
        pieces[best] += 1;
    }

    let l_max = h.smoothness;
    let segs = spline_to_segments(h)?;
    let mut dt_new = Vec::with_capacity(new_segments);
    let mut nodes_new: Vec<Vec<f64>> = Vec::with_capacity(new_segments + 1);
    nodes_new.push(h.nodes[0].clone());
    for s in 0..s_old {
        let n = pieces[s];
        let (dt, poly) = &segs.segments[s];
        // Split into n equal pieces; the piece sum reproduces dt exactly up
        // to one rounding, so pin the last piece to the remainder.
        let step = dt / n as f64;
        for j in 1..=n {
            if j < n {
                dt_new.push(step);
                let tau = step * j as f64;
                nodes_new.push((0..=l_max).map(|l| poly.derivative(tau, l)).collect());
            } else {
                dt_new.push(dt - step * (n - 1) as f64);
                nodes_new.push(h.nodes[s + 1].clone());
            }
        }
    }
    HermiteSpline::new(l_max, dt_new, nodes_new)
}

/// Write the pulse in the plain-text exchange format: a documented header,
/// then one row per node with the duration of the following segment (0 on
/// the final node).
pub fn write_pulse<W: std::io::Write>(h: &HermiteSpline, mut w: W) -> Result<()> {
    writeln!(w, "# hermite spline pulse")?;
    writeln!(w, "# L={} S={}", h.smoothness, h.segment_count())?;
    writeln!(
        w,
        "# columns: dt_next value deriv1..deriv{} (dt_next is 0 on the last row)",
        h.smoothness
    )?;
    for (s, node) in h.nodes.iter().enumerate() {
        let dt = if s < h.segment_count() { h.dt[s] } else { 0.0 };
        let mut row = format!("{dt:.17e}");
        for v in node {
            row.push_str(&format!(" {v:.17e}"));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Parse the text format written by [`write_pulse`].
pub fn read_pulse<R: std::io::BufRead>(r: R) -> Result<HermiteSpline> {
    let mut smoothness: Option<usize> = None;
    let mut segments: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("L=") {
                    smoothness = v.parse().ok();
                } else if let Some(v) = tok.strip_prefix("S=") {
                    segments = v.parse().ok();
                }
            }
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse::<f64>).collect();
        rows.push(vals.map_err(|e| MagnusError::Validation(format!("bad pulse row: {e}")))?);
    }
    let l_max = smoothness
        .ok_or_else(|| MagnusError::Validation("pulse file is missing the L= header".into()))?;
    let s_count = segments
        .ok_or_else(|| MagnusError::Validation("pulse file is missing the S= header".into()))?;
    if rows.len() != s_count + 1 {
        return Err(MagnusError::Validation(format!(
            "pulse file has {} rows, expected {}",
            rows.len(),
            s_count + 1
        )));
    }
    let mut dt = Vec::with_capacity(s_count);
    let mut nodes = Vec::with_capacity(s_count + 1);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != l_max + 2 {
            return Err(MagnusError::Validation(format!(
                "pulse row {i} has {} columns, expected {}",
                row.len(),
                l_max + 2
            )));
        }
        if i < s_count {
            dt.push(row[0]);
        }
        nodes.push(row[1..].to_vec());
    }
    HermiteSpline::new(l_max, dt, nodes)
}

/// Sample a function and its first `L` derivatives (by central differences
/// of width `1e-5` per level) onto a uniform spline over `[0, total]`.
pub fn spline_from_function<F: Fn(f64) -> f64>(
    f: F,
    total: f64,
    segments: usize,
    smoothness: usize,
) -> Result<HermiteSpline> {
    if !(total > 0.0) || segments == 0 {
        return Err(MagnusError::Validation("need total > 0 and segments >= 1".into()));
    }
    let dt = total / segments as f64;
    let fd_step = 1e-5 * total.max(1.0);
    // Derivative of order l by iterated central differences.
    fn deriv<F: Fn(f64) -> f64>(f: &F, t: f64, l: usize, h: f64) -> f64 {
        if l == 0 {
            f(t)
        } else {
            (deriv(f, t + h, l - 1, h) - deriv(f, t - h, l - 1, h)) / (2.0 * h)
        }
    }
    let nodes: Vec<Vec<f64>> = (0..=segments)
        .map(|s| {
            let t = dt * s as f64;
            (0..=smoothness).map(|l| deriv(&f, t, l, fd_step)).collect()
        })
        .collect();
    HermiteSpline::new(smoothness, vec![dt; segments], nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_spline(seed: u64, l_max: usize, s: usize) -> HermiteSpline {
        let mut rng = crate::rng::rng_from_seed(seed);
        let dt: Vec<f64> = (0..s).map(|_| rng.gen_range(0.3..1.2)).collect();
        let nodes: Vec<Vec<f64>> = (0..=s)
            .map(|_| (0..=l_max).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        HermiteSpline::new(l_max, dt, nodes).unwrap()
    }

    #[test]
    fn classic_cubic_hermite() {
        // L=1, Δt=1, values (0,1), derivatives (0,0): d(t) = 3t² - 2t³,
        // i.e. (d0, d1, d2, d3) = (0, 0, 6, -12) in the d_n t^n/n! basis.
        let h = HermiteSpline::new(1, vec![1.0], vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let segs = spline_to_segments(&h).unwrap();
        let d = segs.segments[0].1.coeffs();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[3], -12.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_nodes_give_constant_polynomials() {
        let c = 0.73;
        let h = HermiteSpline::new(
            1,
            vec![0.5, 0.8, 0.3],
            vec![vec![c, 0.0]; 4],
        )
        .unwrap();
        let segs = spline_to_segments(&h).unwrap();
        for (_, poly) in &segs.segments {
            assert_abs_diff_eq!(poly.coeffs()[0], c, epsilon = 1e-13);
            for n in 1..poly.coeffs().len() {
                assert_abs_diff_eq!(poly.coeffs()[n], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn segments_match_nodes_at_both_ends() {
        let h = random_spline(3, 2, 4);
        let segs = spline_to_segments(&h).unwrap();
        for (s, (dt, poly)) in segs.segments.iter().enumerate() {
            for l in 0..=h.smoothness() {
                assert_abs_diff_eq!(poly.derivative(0.0, l), h.nodes()[s][l], epsilon = 1e-12);
                assert_abs_diff_eq!(poly.derivative(*dt, l), h.nodes()[s + 1][l], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn global_smoothness_across_interior_nodes() {
        let h = random_spline(11, 2, 5);
        let segs = spline_to_segments(&h).unwrap();
        for s in 0..h.segment_count() - 1 {
            let (dt, left) = &segs.segments[s];
            let (_, right) = &segs.segments[s + 1];
            for l in 0..=h.smoothness() {
                assert_abs_diff_eq!(
                    left.derivative(*dt, l),
                    right.derivative(0.0, l),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = random_spline(7, 1, 3);
        let jac = spline_jacobian(&h).unwrap();
        let params = h.to_params();
        let step = 1e-6;
        let c_of = |p: &RVec| -> RVec {
            let sp = HermiteSpline::from_params(1, 3, p).unwrap();
            let segs = spline_to_segments(&sp).unwrap();
            let mut c = Vec::new();
            for (dt, poly) in segs.segments {
                c.push(dt);
                c.extend_from_slice(poly.coeffs());
            }
            RVec::from_vec(c)
        };
        for j in 0..params.len() {
            let mut plus = params.clone();
            plus[j] += step;
            let mut minus = params.clone();
            minus[j] -= step;
            let fd = (c_of(&plus) - c_of(&minus)) / (2.0 * step);
            for i in 0..fd.len() {
                let rel = (jac[(i, j)] - fd[i]).abs() / (1.0 + fd[i].abs());
                assert!(rel <= 1e-7, "J[{i},{j}] = {} vs fd {}", jac[(i, j)], fd[i]);
            }
        }
    }

    #[test]
    fn start_value_feeds_only_first_segment_d0() {
        let h = random_spline(19, 1, 3);
        let jac = spline_jacobian(&h).unwrap();
        let m = h.poly_degree();
        // Column of h_0^{(0)}.
        let col = h.segment_count();
        assert_abs_diff_eq!(jac[(c_coeff_index(0, 0, m), col)], 1.0, epsilon = 1e-10);
        // d_0 of later segments is untouched by the first node's value.
        for s in 1..h.segment_count() {
            assert_abs_diff_eq!(jac[(c_coeff_index(s, 0, m), col)], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn duration_sensitivity_of_cubic() {
        // For the classic cubic, ∂d3/∂Δt by finite differences.
        let mk = |dt: f64| {
            HermiteSpline::new(1, vec![dt], vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap()
        };
        let h = mk(1.0);
        let jac = spline_jacobian(&h).unwrap();
        let step = 1e-6;
        let d3 = |dt: f64| spline_to_segments(&mk(dt)).unwrap().segments[0].1.coeffs()[3];
        let fd = (d3(1.0 + step) - d3(1.0 - step)) / (2.0 * step);
        let got = jac[(c_coeff_index(0, 3, 3), 0)];
        let rel = (got - fd).abs() / (1.0 + fd.abs());
        assert!(rel <= 1e-7, "dd3/ddt {got} vs fd {fd}");
    }

    #[test]
    fn pulse_value_chain_rule() {
        // ∂ d(τ) / ∂h via the Jacobian against direct finite differences at
        // a fixed global time.
        let l_max = 1;
        let s_count = 3;
        let h = random_spline(23, l_max, s_count);
        let tau = 0.6 * h.total_duration();
        let m = h.poly_degree();
        let jac = spline_jacobian(&h).unwrap();
        let segs = spline_to_segments(&h).unwrap();
        // Locate the segment of tau.
        let mut seg = 0;
        let mut local = tau;
        while seg < s_count - 1 && local > segs.segments[seg].0 {
            local -= segs.segments[seg].0;
            seg += 1;
        }
        let poly = &segs.segments[seg].1;
        // Analytic row: value depends on d_n^{(seg)} explicitly and on the
        // durations of earlier segments through the local time.
        let params = h.to_params();
        let mut grad = RVec::zeros(params.len());
        let mut tp = 1.0;
        let mut fact = 1.0;
        for n in 0..=m {
            if n > 0 {
                tp *= local;
                fact *= n as f64;
            }
            let crow = c_coeff_index(seg, n, m);
            for j in 0..params.len() {
                grad[j] += tp / fact * jac[(crow, j)];
            }
        }
        let slope = poly.derivative(local, 1);
        for r in 0..seg {
            // local = tau - Σ_{r<seg} Δt_r, and Δt_r is itself c-coordinate
            // c_dt_index(r): pull its dependence on h through the Jacobian.
            let crow = c_dt_index(r, m);
            for j in 0..params.len() {
                grad[j] -= slope * jac[(crow, j)];
            }
        }
        for j in 0..params.len() {
            let step = 1e-6;
            let mut plus = params.clone();
            plus[j] += step;
            let mut minus = params.clone();
            minus[j] -= step;
            let vp = HermiteSpline::from_params(l_max, s_count, &plus).unwrap().value(tau).unwrap();
            let vm = HermiteSpline::from_params(l_max, s_count, &minus).unwrap().value(tau).unwrap();
            let fd = (vp - vm) / (2.0 * step);
            let rel = (grad[j] - fd).abs() / (1.0 + fd.abs());
            assert!(rel <= 1e-6, "param {j}: chain {} vs fd {fd}", grad[j]);
        }
    }

    #[test]
    fn resample_preserves_pulse_exactly() {
        let h = random_spline(31, 1, 3);
        let total = h.total_duration();
        let fine = resample(&h, 6).unwrap();
        assert_eq!(fine.segment_count(), 6);
        assert_abs_diff_eq!(fine.total_duration(), total, epsilon = 1e-15);
        assert_eq!(fine.param_count(), 7 * 2 + 6);
        for i in 0..=200 {
            let t = total * i as f64 / 200.0;
            assert_abs_diff_eq!(
                fine.value(t).unwrap(),
                h.value(t).unwrap(),
                epsilon = 1e-12
            );
        }
        // Resampling again preserves the shape too.
        let finer = resample(&fine, 11).unwrap();
        for i in 0..=100 {
            let t = total * i as f64 / 100.0;
            assert_abs_diff_eq!(
                finer.value(t).unwrap(),
                h.value(t).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn resample_rejects_shrinking() {
        let h = random_spline(37, 1, 4);
        assert!(resample(&h, 4).is_err());
        assert!(resample(&h, 3).is_err());
    }

    #[test]
    fn pulse_text_round_trip() {
        let h = random_spline(41, 2, 3);
        let mut buf = Vec::new();
        write_pulse(&h, &mut buf).unwrap();
        let back = read_pulse(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn sampled_cosine_matches_function_at_nodes() {
        let f = |t: f64| 0.1 * (2.0 * std::f64::consts::PI * t / 3.0).cos();
        let h = spline_from_function(f, 9.0, 21, 1).unwrap();
        assert_eq!(h.segment_count(), 21);
        assert_abs_diff_eq!(h.total_duration(), 9.0, epsilon = 1e-12);
        for (s, node) in h.nodes().iter().enumerate() {
            let t = 9.0 * s as f64 / 21.0;
            assert_abs_diff_eq!(node[0], f(t), epsilon = 1e-9);
        }
    }
}
