//! Exact dilation of amplitude damping on a pure qubit ancilla.

use qdf::dilation::{stinespring_complete, verify_dilation, DilationReport, Method};
use qdf::operators::DensityOperator;
use qdf::Channel;

fn main() -> qdf::Result<()> {
    let target = Channel::amplitude_damping(0.36)?;
    let w = stinespring_complete(target.kraus())?;
    println!("joint unitary (ancilla first):\n{}", w.matrix());

    let report = DilationReport {
        w,
        env_state: DensityOperator::basis_state(2, 0),
        d_s: 2,
        eps_certified: 0.0,
        eps_measured: 0.0,
        method: Method::StinespringPure,
        diagnostics: vec![],
    };
    println!("worst output error: {:.2e}", verify_dilation(&report, &target, 20, 0)?);
    Ok(())
}
