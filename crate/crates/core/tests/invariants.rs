use proptest::prelude::*;

use qdf::channel::{choi_to_kraus, extremality_test, kraus_to_choi, reduced_channel, Channel};
use qdf::dilation::{dilate_via_subsystem, find_eps_pure_subsystem_with_cofactor, joint_output};
use qdf::io::{emit_document, parse_document, Document};
use qdf::operators::{max_abs_diff, partial_trace, tensor, tv_distance, CompositeSpace, DensityOperator};
use qdf::random::{random_channel, random_density, random_isometry, random_pure_state, seeded};
use qdf::spectral::eigh;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=3).prop_flat_map(|d| (Just(d), 1..=d * d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn choi_is_a_normalized_state((d, m) in dims(), seed in any::<u64>()) {
        let ch = random_channel(d, m, &mut seeded(seed));
        let choi = ch.choi().matrix();
        prop_assert!((choi.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(eigh(choi).values.iter().all(|&v| v > -1e-12));
        prop_assert!(ch.choi().tp_residual() < 1e-12);
        prop_assert!(qdf::channel::kraus_rank(&ch) <= m);
    }

    #[test]
    fn kraus_choi_round_trip((d, m) in dims(), seed in any::<u64>()) {
        let ch = random_channel(d, m, &mut seeded(seed));
        let back = choi_to_kraus(ch.choi(), 1e-12).unwrap();
        prop_assert!(max_abs_diff(kraus_to_choi(&back).matrix(), ch.choi().matrix()) < 1e-12);
        prop_assert!(back.tp_residual() < 1e-10);
    }

    #[test]
    fn channels_preserve_states((d, m) in dims(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ch = random_channel(d, m, &mut rng);
        let rho = random_density(d, &mut rng);
        prop_assert!(DensityOperator::new(ch.apply_matrix(rho.matrix())).is_ok());
    }

    #[test]
    fn channels_contract_trace_distance((d, m) in dims(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ch = random_channel(d, m, &mut rng);
        let a = random_density(d, &mut rng);
        let b = random_density(d, &mut rng);
        let fa = DensityOperator::new(ch.apply_matrix(a.matrix())).unwrap();
        let fb = DensityOperator::new(ch.apply_matrix(b.matrix())).unwrap();
        prop_assert!(tv_distance(&fa, &fb).unwrap() <= tv_distance(&a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn partial_trace_of_product(de in 1usize..4, ds in 1usize..4, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_density(de, &mut rng);
        let b = random_density(ds, &mut rng);
        let joint = tensor(a.matrix(), b.matrix());
        let space = CompositeSpace::new(vec![de, ds]).unwrap();
        prop_assert!(max_abs_diff(&partial_trace(&joint, &space, 0).unwrap(), a.matrix()) < 1e-12);
        prop_assert!(max_abs_diff(&partial_trace(&joint, &space, 1).unwrap(), b.matrix()) < 1e-12);
    }

    #[test]
    fn pure_ancilla_dilation_is_exact((d, m) in dims(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let target = random_channel(d, m, &mut rng);
        let env = DensityOperator::from_pure(&random_pure_state(m, &mut rng)).unwrap();
        let init = find_eps_pure_subsystem_with_cofactor(&env, m, 1).unwrap();
        let rep = dilate_via_subsystem(&target, &init).unwrap();
        let achieved = reduced_channel(rep.w.matrix(), &rep.env_state, d).unwrap();
        prop_assert!(max_abs_diff(achieved.choi().matrix(), target.choi().matrix()) < 1e-10);
        let rho = random_density(d, &mut rng);
        let out = joint_output(rep.w.matrix(), &rep.env_state, &rho).unwrap();
        prop_assert!(max_abs_diff(out.matrix(), &target.apply_matrix(rho.matrix())) < 1e-10);
    }

    #[test]
    fn extremality_ignores_kraus_representation((d, m) in dims(), extra in 1usize..3, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ch = random_channel(d, m, &mut rng);
        let ops = ch.kraus().ops();
        let v = random_isometry(ops.len() + extra, ops.len(), &mut rng);
        let mixed: Vec<_> = (0..ops.len() + extra)
            .map(|i| ops.iter().enumerate().fold(ops[0].scale(0.0), |acc, (j, op)| acc + op * v[(i, j)]))
            .collect();
        let remixed = Channel::from_kraus_ops(mixed).unwrap();
        prop_assert_eq!(extremality_test(&ch, 1e-8).is_extreme, extremality_test(&remixed, 1e-8).is_extreme);
        prop_assert!(max_abs_diff(remixed.choi().matrix(), ch.choi().matrix()) < 1e-12);
    }

    #[test]
    fn documents_round_trip_exactly((d, m) in dims(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ch = random_channel(d, m, &mut rng);
        let text = emit_document(&Document::Kraus(ch.kraus().clone()));
        let Document::Kraus(back) = parse_document(&text).unwrap() else { panic!("kind changed") };
        for (a, b) in back.ops().iter().zip(ch.kraus().ops()) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(emit_document(&Document::Kraus(back)), text);
        let rho = random_density(d, &mut rng);
        let text = emit_document(&Document::State(rho.clone()));
        let Document::State(back) = parse_document(&text).unwrap() else { panic!("kind changed") };
        prop_assert_eq!(back.matrix(), rho.matrix());
    }
}
