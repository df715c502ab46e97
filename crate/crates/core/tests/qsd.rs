use qsd_core::coeffs::solve_coefficients;
use qsd_core::noise::validate_noise;
use qsd_core::trajectory::quadrature_ensemble_nodes;
use qsd_core::{
    closed_system, pseudomode_lindblad, quadrature_ensemble, run_ensemble, trace_distance, EomVariant, InitialState, NoiseSampler,
    ParameterSet, SimulationResult,
};

fn max_td(a: &SimulationResult, b: &SimulationResult) -> f64 {
    a.rho.iter().zip(&b.rho).map(|(x, y)| trace_distance(x, y).unwrap()).fold(0.0, f64::max)
}

fn closed_params(init: InitialState) -> ParameterSet {
    ParameterSet { bath_strength: 0.0, t_max: 2.0, initial_state: init, eom_variant: EomVariant::Corrected, ..Default::default() }
}

#[test]
fn quadrature_reproduces_closed_dynamics() {
    for init in [InitialState::BellPsiPlus, InitialState::KetEE, InitialState::BellPhiPlus] {
        let err = |dt: f64| {
            let p = ParameterSet { dt, ..closed_params(init) };
            let grid = p.grid().unwrap();
            max_td(&quadrature_ensemble(&p, &grid).unwrap(), &closed_system(&p, &grid).unwrap())
        };
        let (coarse, fine) = (err(0.01), err(0.005));
        assert!(fine < 1e-3, "{}: {fine}", init.name());
        assert!(coarse / fine > 3.0, "{}: {coarse} -> {fine}", init.name());
    }
}

#[test]
fn quadrature_converged_in_nodes() {
    let p = closed_params(InitialState::KetEE);
    let grid = p.grid().unwrap();
    let a = quadrature_ensemble_nodes(&p, &grid, 20).unwrap();
    let b = quadrature_ensemble_nodes(&p, &grid, 30).unwrap();
    assert!(max_td(&a, &b) < 1e-9);
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let p = ParameterSet { n_traj: 2000, ..closed_params(InitialState::KetEE) };
    let grid = p.grid().unwrap();
    let mc = run_ensemble(&p, &grid).unwrap();
    let q = quadrature_ensemble(&p, &grid).unwrap();
    let d = max_td(&mc, &q);
    assert!(d < 0.05, "{d}");
    // batch error bars are of the right size
    for k in (0..mc.len()).step_by(20) {
        assert!((mc.concurrence[k] - q.concurrence[k]).abs() < 6.0 * mc.concurrence_stderr[k] + 1e-3, "t = {}", mc.times[k]);
    }
}

#[test]
fn small_ensemble_tracks_pseudomode_oracle() {
    let p = ParameterSet { n_traj: 1000, t_max: 2.0, eom_variant: EomVariant::Symmetrized, ..Default::default() };
    let grid = p.grid().unwrap();
    let d = max_td(&run_ensemble(&p, &grid).unwrap(), &pseudomode_lindblad(&p, &grid).unwrap());
    assert!(d < 0.06, "{d}");
}

#[test]
fn ensemble_is_deterministic() {
    let p = ParameterSet { n_traj: 200, t_max: 1.0, seed: 42, ..Default::default() };
    let grid = p.grid().unwrap();
    let a = run_ensemble(&p, &grid).unwrap();
    let b = run_ensemble(&p, &grid).unwrap();
    assert_eq!(a, b);
    let c = run_ensemble(&ParameterSet { seed: 43, ..p }, &grid).unwrap();
    assert_ne!(a.rho, c.rho);
}

#[test]
fn sampled_noise_passes_moment_checks() {
    let p = ParameterSet { bath_rate: 0.5, t_max: 3.0, dt: 0.05, ..Default::default() };
    let grid = p.grid().unwrap();
    let sampler = NoiseSampler::new(&p, grid).unwrap();
    let paths: Vec<_> = (0..2000).map(|k| sampler.realization(7, k)).collect();
    let report = validate_noise(&paths, &p, &grid).unwrap();
    assert!(!report.any_flagged(), "{report:?}");

    // same paths judged against a kernel twice as strong
    let wrong = ParameterSet { bath_strength: 2.0, ..p };
    let report = validate_noise(&paths, &wrong, &grid).unwrap();
    assert!(report.checks.iter().any(|c| c.name == "cov_y_beta" && c.flagged));
}

#[test]
fn coefficient_fields_are_second_order() {
    let base = ParameterSet { t_max: 2.0, eom_variant: EomVariant::Symmetrized, ..Default::default() };
    let fields: Vec<_> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let p = ParameterSet { dt, ..base.clone() };
            solve_coefficients(&p, &p.grid().unwrap()).unwrap()
        })
        .collect();
    // compare N_j, M_j at the coarse grid times
    let diff = |a: usize, b: usize| {
        let n = fields[0].grid().len();
        let mut d: f64 = 0.0;
        for i in 0..n {
            let (ia, ib) = (i << a, i << b);
            for j in 0..4 {
                d = d.max((fields[a].big_n(ia)[j] - fields[b].big_n(ib)[j]).norm());
                d = d.max((fields[a].big_m(ia)[j] - fields[b].big_m(ib)[j]).norm());
            }
        }
        d
    };
    let order = (diff(0, 1) / diff(1, 2)).log2();
    assert!(order > 1.8 && order < 2.5, "observed order {order}");
}

#[test]
fn closed_fields_have_no_bath_part() {
    let p = closed_params(InitialState::KetEE);
    let f = solve_coefficients(&p, &p.grid().unwrap()).unwrap();
    for i in 0..f.grid().len() {
        assert!(f.big_m(i).iter().all(|z| z.norm() == 0.0));
    }
}
