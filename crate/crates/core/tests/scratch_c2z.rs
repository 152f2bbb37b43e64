use std::sync::Arc;
use std::time::Instant;

use magnus_poly::coeffs::{compute_s, symmetrize_to_t};
use magnus_poly::lie::{compute_structure_constants, generate_lie_algebra, DEFAULT_EPS_L};
use magnus_poly::models::{build_model, ckp_gate, rz_generator, symmetric_basis_states, ModelKind, ModelSpec};
use magnus_poly::optim::{minimize, CompiledModel, ControlProblem, MinimizeOptions};
use magnus_poly::spline::spline_from_function;
use magnus_poly::{CVec, RVec};

#[test]
fn probe_c2z() {
    let t0 = Instant::now();
    let spec = ModelSpec::new(ModelKind::Rydberg, 3).unwrap();
    let (a, b) = build_model(&spec).unwrap();
    let basis = generate_lie_algebra(&a, &b, 24, DEFAULT_EPS_L).unwrap();
    println!(
        "basis: dim_g = {}, closed = {}, max depth = {}, {:.2?}",
        basis.dim_g(),
        basis.is_closed(),
        basis.max_depth(),
        t0.elapsed()
    );
    let t1 = Instant::now();
    let sc = compute_structure_constants(&basis).unwrap();
    println!("sc: {} entries, {:.2?}", sc.n_entries(), t1.elapsed());
    let t2 = Instant::now();
    let (k_m, gamma, m) = (8u8, 12u8, 3u8);
    let tensor = symmetrize_to_t(&compute_s(&basis, &sc, k_m, gamma, m).unwrap()).unwrap();
    println!("tensor: {} entries, {:.2?}", tensor.n_entries(), t2.elapsed());

    let n = 3;
    let target = ckp_gate(n, std::f64::consts::PI, 3).unwrap();
    let trajectories: Vec<(CVec, CVec)> = symmetric_basis_states(n)
        .into_iter()
        .map(|psi| {
            let phi = &target * &psi;
            (psi, phi)
        })
        .collect();
    let k_diag = RVec::from_iterator(
        3usize.pow(n as u32),
        rz_generator(n, 3).diagonal().iter().map(|z| z.re),
    );
    let model = Arc::new(CompiledModel::new(basis, sc, tensor).unwrap());
    let problem = ControlProblem {
        model,
        target,
        trajectories,
        smoothness: 1,
        t_bounds: (4.0, 18.0),
        lambda_t: 1e-3,
        eps_star: 1e-6,
        k_d: k_m as usize,
        segment_cap: 512,
        rz_k_diag: k_diag,
    };
    let spline = spline_from_function(
        |t| 0.1 * (2.0 * std::f64::consts::PI * t / 3.0).cos(),
        9.0,
        21,
        1,
    )
    .unwrap();
    let t3 = Instant::now();
    let max_iter: usize = std::env::var("C2Z_ITERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(400);
    let theta0: f64 = std::env::var("C2Z_THETA")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0.0);
    let opts = MinimizeOptions { max_iter, ..Default::default() };
    let out = minimize(&problem, spline, theta0, &opts).unwrap();
    println!(
        "optimize: status {} J {:.3e} J_T {:.3e} T {:.3} S {} rows {} theta {:.4} in {:.2?}",
        out.status,
        out.final_eval.j,
        out.final_eval.j_t,
        out.final_eval.duration,
        out.spline.segment_count(),
        out.trace.rows.len(),
        out.theta,
        t3.elapsed()
    );
    for (r, o) in out.final_eval.overlaps.iter().enumerate() {
        println!("  overlap {r}: {:.4} + {:.4}i (|o| = {:.4})", o.re, o.im, o.norm());
    }
    for row in out.trace.rows.iter().step_by(40) {
        println!(
            "  it {:4} J {:.4e} T {:.3} S {:3} eps {:.2e} {}",
            row.iter, row.j, row.duration, row.segments, row.sum_eps, row.event
        );
    }

    if std::env::var_os("C2Z_FDCHECK").is_some() {
        let s_count = out.spline.segment_count();
        let (_, grad) = problem.cost_and_gradient(&out.spline, out.theta).unwrap();
        let x0 = problem.pack(&out.spline, out.theta);
        let h = 1e-6;
        let mut worst = (0.0_f64, 0usize);
        for j in 0..x0.len() {
            let mut plus = x0.clone();
            plus[j] += h;
            let mut minus = x0.clone();
            minus[j] -= h;
            let (sp, tp) = problem.unpack(&plus, s_count).unwrap();
            let (sm, tm) = problem.unpack(&minus, s_count).unwrap();
            let fp = problem.cost(&sp, tp).unwrap().j_total;
            let fm = problem.cost(&sm, tm).unwrap().j_total;
            let fd = (fp - fm) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / (1.0 + fd.abs());
            if rel > worst.0 {
                worst = (rel, j);
            }
        }
        println!("FD check at working point: worst rel {:.3e} at coord {}", worst.0, worst.1);
    }

    // pack/unpack round trip sanity
    let x_rt = problem.pack(&out.spline, out.theta);
    let (sp_rt, th_rt) = problem.unpack(&x_rt, out.spline.segment_count()).unwrap();
    println!(
        "round trip: spline equal = {}, theta equal = {}",
        sp_rt == out.spline,
        th_rt == out.theta
    );
    if sp_rt != out.spline {
        for (i, (a, b)) in out
            .spline
            .durations()
            .iter()
            .zip(sp_rt.durations())
            .enumerate()
        {
            if a != b {
                println!("  dt[{i}]: {a} vs {b}");
            }
        }
        for (i, (a, b)) in out.spline.nodes().iter().zip(sp_rt.nodes()).enumerate() {
            if a != b {
                println!("  node[{i}]: {a:?} vs {b:?}");
            }
        }
    }

    // Directional probe at the final iterate: does -g actually descend?
    let s_count = out.spline.segment_count();
    let (ev0, g) = problem.cost_and_gradient(&out.spline, out.theta).unwrap();
    println!("final |g| = {:.4e}, J_total = {:.6e}", g.norm(), ev0.j_total);
    let x0 = problem.pack(&out.spline, out.theta);
    for eps in [0.0, 1e-8, 1e-6, 1e-4, 1e-2] {
        let xt = &x0 - &g * eps;
        let (sp, th) = problem.unpack(&xt, s_count).unwrap();
        match problem.cost(&sp, th) {
            Ok(ev) => println!(
                "  eps {eps:.1e}: J_total {:.10e} (delta {:+.3e}, predicted {:+.3e})",
                ev.j_total,
                ev.j_total - ev0.j_total,
                -eps * g.norm_squared()
            ),
            Err(e) => println!("  eps {eps:.1e}: cost error: {e}"),
        }
    }

    // Per-segment propagator continuity under the same perturbation.
    use magnus_poly::eval::{assemble, eval_coeffs, Propagator};
    use magnus_poly::spline::spline_to_segments;
    let eps = 1e-8;
    let xt = &x0 - &g * eps;
    let (sp1, _) = problem.unpack(&xt, s_count).unwrap();
    let segs0 = spline_to_segments(&out.spline).unwrap();
    let segs1 = spline_to_segments(&sp1).unwrap();
    for (s, ((dt0, p0), (dt1, p1))) in segs0.segments.iter().zip(&segs1.segments).enumerate() {
        let m0 = assemble(
            &problem.model.basis,
            eval_coeffs(&problem.model.tensor, *dt0, p0).unwrap(),
            *dt0,
        )
        .unwrap();
        let m1 = assemble(
            &problem.model.basis,
            eval_coeffs(&problem.model.tensor, *dt1, p1).unwrap(),
            *dt1,
        )
        .unwrap();
        let dm = (m0.operator.matrix() - m1.operator.matrix()).norm();
        let u0 = Propagator::new(&m0.operator).unwrap().unitary();
        let u1 = Propagator::new(&m1.operator).unwrap().unitary();
        let du = (&u0 - &u1).norm();
        if du > 1e-6 {
            let e = m0.operator.matrix().clone().symmetric_eigen();
            let gram = (e.eigenvectors.adjoint() * &e.eigenvectors
                - magnus_poly::CMat::identity(27, 27))
            .norm();
            let mut lam = magnus_poly::CMat::zeros(27, 27);
            for i in 0..27 {
                lam[(i, i)] = magnus_poly::C64::new(e.eigenvalues[i], 0.0);
            }
            let recon = (&e.eigenvectors * lam * e.eigenvectors.adjoint()
                - m0.operator.matrix())
            .norm();
            let mut evs: Vec<f64> = e.eigenvalues.iter().copied().collect();
            evs.sort_by(f64::total_cmp);
            let min_gap = evs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            println!(
                "  segment {s}: |dM| {dm:.3e} |dU| {du:.3e} |V'V-I| {gram:.3e} |VLV'-M| {recon:.3e} min gap {min_gap:.3e}"
            );
        }
    }
}
