//! Dilation on a mixed environment that is only approximately pure on a
//! virtual qubit.

use qdf::dilation::{dilate_via_subsystem, find_eps_pure_subsystem, verify_dilation};
use qdf::operators::DensityOperator;
use qdf::random::{random_channel, seeded};

fn main() -> qdf::Result<()> {
    let mut rng = seeded(7);
    let target = random_channel(2, 2, &mut rng);
    for tail in [0.0, 0.01, 0.05] {
        let env = DensityOperator::diagonal(&[0.6 - tail, 0.4, tail, 0.0])?;
        // m = 2 gives cofactor f = 2: the virtual qubit is pure on a
        // two-dimensional block carrying all but `tail` of the weight
        let init = find_eps_pure_subsystem(&env, 2)?;
        let report = dilate_via_subsystem(&target, &init)?;
        let err = verify_dilation(&report, &target, 20, 1)?;
        println!(
            "tail {tail:.2}: f = {}, eps = {:.3}, measured error {err:.2e}, method {}",
            init.decomp().f(),
            init.epsilon(),
            report.method.as_str()
        );
    }
    Ok(())
}
