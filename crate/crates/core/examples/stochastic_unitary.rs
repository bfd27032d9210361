//! A mixed-unitary channel from a diagonal environment whose spectrum
//! majorizes the mixing weights.

use qdf::design::{design_stochastic_unitary, DiagonalInitialization, StochasticUnitarySpec};
use qdf::majorization::ProbabilityVector;
use qdf::operators::{pauli_x, pauli_z, DensityOperator, UnitaryOperator};

fn main() -> qdf::Result<()> {
    let spec = StochasticUnitarySpec::new(
        vec![
            UnitaryOperator::identity(2),
            UnitaryOperator::new(pauli_x())?,
            UnitaryOperator::new(pauli_z())?,
        ],
        ProbabilityVector::new(vec![0.5, 0.3, 0.2])?,
    )?;
    for pops in [[0.7, 0.2, 0.1], [0.4, 0.35, 0.25]] {
        let env = DensityOperator::diagonal(&pops)?;
        let init = DiagonalInitialization::from_environment(&env, 3, 1)?;
        match design_stochastic_unitary(&spec, &init) {
            Ok(r) => println!("env {pops:?}: realized, measured error {:.2e}", r.eps_measured),
            Err(e) => println!("env {pops:?}: {e}"),
        }
    }
    Ok(())
}
