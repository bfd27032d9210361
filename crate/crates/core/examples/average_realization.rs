//! Realizing a non-extreme channel on average with a single pure qubit
//! ancilla, then sampling the classical randomness.

use qdf::average::{realize_on_average, sampled_output};
use qdf::dilation::find_eps_pure_subsystem;
use qdf::operators::{max_abs_diff, DensityOperator};
use qdf::Channel;

fn main() -> qdf::Result<()> {
    let target = Channel::depolarizing(0.6)?;
    let init = find_eps_pure_subsystem(&DensityOperator::basis_state(2, 0), 2)?;
    let ar = realize_on_average(&target, &init)?;
    println!("components: {}", ar.dilations.len());
    for (p, r) in ar.distribution.as_slice().iter().zip(&ar.dilations) {
        println!("  weight {p:.4}  method {}  error {:.1e}", r.method.as_str(), r.eps_measured);
    }
    println!("averaged channel error: {:.2e}", ar.eps_measured);

    let rho = DensityOperator::basis_state(2, 0);
    let want = target.apply_matrix(rho.matrix());
    for draws in [100, 10_000] {
        let got = sampled_output(&ar, rho.matrix(), draws, 5)?;
        println!("{draws:>6} draws: deviation {:.3e}", max_abs_diff(&got, &want));
    }
    Ok(())
}
