use qdf::distance::channel_distance_1to1;
use qdf::operators::DensityOperator;
use qdf::protocols::coherent::{lv_nested, lv_simulate, rank_two_from_generator, two_term_qubit_schedule, NestedSchedules};
use qdf::protocols::splitting::{split_build, split_run};
use qdf::random::{random_channel, random_density, random_isometry, seeded};

#[test]
fn trotter_error_is_first_order_in_cycle_count() {
    let sched = two_term_qubit_schedule(8).unwrap();
    let target = rank_two_from_generator(&sched.averaged(), 1.2).unwrap();
    let anc = DensityOperator::basis_state(2, 0);
    let scaled: Vec<f64> = [8, 16, 32, 64, 128]
        .iter()
        .map(|&n| lv_simulate(&target, &sched.with_cycles(n).unwrap(), &anc).unwrap().trotter_error * n as f64)
        .collect();
    let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo <= 2.0, "error x N spread {scaled:?}");
}

#[test]
fn achieved_channel_converges_to_target() {
    let sched = two_term_qubit_schedule(8).unwrap();
    let target = rank_two_from_generator(&sched.averaged(), 0.9).unwrap();
    let anc = DensityOperator::basis_state(2, 0);
    let want = target.channel().unwrap();
    let mut last = f64::MAX;
    for n in [4, 16, 64] {
        let out = lv_simulate(&target, &sched.with_cycles(n).unwrap(), &anc).unwrap();
        let d = channel_distance_1to1(&out.achieved, &want, 4, 0).unwrap().lower_bound;
        assert!(d < last);
        last = d;
    }
    assert!(last < 5e-2);
}

#[test]
fn nested_protocol_reproduces_random_rank_three_qubit_channels() {
    let mut rng = seeded(301);
    let anc = DensityOperator::basis_state(2, 0);
    for _ in 0..5 {
        let ch = random_channel(2, 3, &mut rng);
        let out = lv_nested(ch.kraus().ops(), &NestedSchedules::Spectral { cycles: 64 }, &[anc.clone(), anc.clone()]).unwrap();
        assert!(out.stage_tp_residuals.iter().all(|&r| r <= 1e-9));
        let ideal_err = qdf::operators::max_abs_diff(out.ideal.choi().matrix(), ch.choi().matrix());
        assert!(ideal_err <= 1e-9, "ideal nesting error {ideal_err}");
        assert!(out.target_error <= 5e-2);
    }
}

#[test]
fn splitting_fixes_every_input_of_random_targets() {
    let mut rng = seeded(302);
    for d_s in 2..=6 {
        for d_t in 1..d_s {
            let v = random_isometry(d_s, d_t, &mut rng);
            let pi = &v * v.adjoint();
            let cfg = split_build(d_s, &pi).unwrap();
            assert_eq!(cfg.k, d_s.div_ceil(d_t));
            let rho = random_density(d_s, &mut rng);
            let out = split_run(&cfg, &rho).unwrap();
            let pop = (&pi * out.matrix()).trace().re;
            assert!((pop - 1.0).abs() < 1e-11, "d_s={d_s} d_t={d_t}: {pop}");
        }
    }
}
