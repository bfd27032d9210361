use qdf::operators::DensityOperator;
use qdf::random::{random_channel, seeded};
use qdf::transfer::{cost, gradient, optimize, target_components, ControlProblem, ControlPulse, OptimizeOptions};

fn problem() -> ControlProblem {
    ControlProblem::fully_controllable(2, 1.0, 8, DensityOperator::basis_state(2, 0)).unwrap()
}

#[test]
fn gradient_agrees_with_wide_differences() {
    let prob = problem();
    let mut rng = seeded(5);
    let target = target_components(&random_channel(2, 2, &mut rng), &prob.basis).unwrap();
    let pulse = ControlPulse::random(prob.n_steps, prob.controls.len(), 0.7, &mut rng);
    let g = gradient(&prob, &pulse, &target, 1e-6).unwrap();
    let x = pulse.flat();
    let nc = prob.controls.len();
    for k in (0..x.len()).step_by(7) {
        let h = 1e-4;
        let mut xp = x.clone();
        xp[k] += h;
        let mut xm = x.clone();
        xm[k] -= h;
        let fp = cost(&prob, &ControlPulse::from_flat(&xp, prob.n_steps, nc), &target).unwrap();
        let fm = cost(&prob, &ControlPulse::from_flat(&xm, prob.n_steps, nc), &target).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "param {k}: {fd} vs {}", g[k]);
    }
}

#[test]
fn random_rank_two_targets_are_reached() {
    let prob = problem();
    let opts = OptimizeOptions {
        max_iters: 500,
        restarts: 10,
        seed: 17,
        ..Default::default()
    };
    let mut rng = seeded(2024);
    let mut solved = 0;
    for i in 0..10 {
        let target = target_components(&random_channel(2, 2, &mut rng), &prob.basis).unwrap();
        let res = optimize(&prob, &target, &opts).unwrap();
        eprintln!("target {i}: cost {:.3e} restart {} iters {}", res.final_cost, res.restart, res.iterations);
        if res.final_cost <= 1e-4 {
            solved += 1;
        }
    }
    assert!(solved >= 8, "{solved}/10 targets reached");
}
