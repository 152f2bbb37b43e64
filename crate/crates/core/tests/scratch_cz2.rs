use std::sync::Arc;

use magnus_poly::coeffs::{compute_s, symmetrize_to_t};
use magnus_poly::lie::{compute_structure_constants, generate_lie_algebra, DEFAULT_EPS_L};
use magnus_poly::models::{build_model, ckp_gate, rz_generator, symmetric_basis_states, ModelKind, ModelSpec};
use magnus_poly::optim::{minimize, CompiledModel, ControlProblem, MinimizeOptions};
use magnus_poly::spline::spline_from_function;
use magnus_poly::{CVec, RVec};

#[test]
fn probe_cz_two_atoms() {
    let spec = ModelSpec::new(ModelKind::Rydberg, 2).unwrap();
    let (a, b) = build_model(&spec).unwrap();
    let basis = generate_lie_algebra(&a, &b, 24, DEFAULT_EPS_L).unwrap();
    let sc = compute_structure_constants(&basis).unwrap();
    println!("dim_g = {}", basis.dim_g());
    let (k_m, gamma, m) = (6u8, 10u8, 3u8);
    let tensor = symmetrize_to_t(&compute_s(&basis, &sc, k_m, gamma, m).unwrap()).unwrap();

    let n = 2;
    let target = ckp_gate(n, std::f64::consts::PI, 3).unwrap();
    let trajectories: Vec<(CVec, CVec)> = symmetric_basis_states(n)
        .into_iter()
        .map(|psi| {
            let phi = &target * &psi;
            (psi, phi)
        })
        .collect();
    let k_diag = RVec::from_iterator(
        9,
        rz_generator(n, 3).diagonal().iter().map(|z| z.re),
    );
    let model = Arc::new(CompiledModel::new(basis, sc, tensor).unwrap());
    let problem = ControlProblem {
        model,
        target,
        trajectories,
        smoothness: 1,
        t_bounds: (4.0, 14.0),
        lambda_t: 1e-3,
        eps_star: 1e-6,
        k_d: k_m as usize,
        segment_cap: 512,
        rz_k_diag: k_diag,
    };
    let spline = spline_from_function(
        |t| 0.1 * (2.0 * std::f64::consts::PI * t / 3.0).cos(),
        8.0,
        19,
        1,
    )
    .unwrap();
    let opts = MinimizeOptions { max_iter: 2000, ..Default::default() };
    let out = minimize(&problem, spline, 0.0, &opts).unwrap();
    println!(
        "status {} J {:.3e} T {:.3} S {} theta {:.4}",
        out.status,
        out.final_eval.j,
        out.final_eval.duration,
        out.spline.segment_count(),
        out.theta
    );
    for row in out.trace.rows.iter().step_by(100) {
        println!("  it {:4} J {:.4e} T {:.3} S {:3}", row.iter, row.j, row.duration, row.segments);
    }
}
