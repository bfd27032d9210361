//! Convex mixture of two extreme channels on an eight-level environment
//! with spectrum (0.6, 0.4, 0, ...).

use qdf::design::{block_convex_design, block_convex_plan, ConvexCombinationSpec};
use qdf::majorization::ProbabilityVector;
use qdf::operators::{hadamard, DensityOperator, UnitaryOperator};
use qdf::Channel;

fn main() -> qdf::Result<()> {
    let spec = ConvexCombinationSpec::new(
        ProbabilityVector::new(vec![0.6, 0.4])?,
        vec![Channel::amplitude_damping(0.5)?, Channel::unitary(&UnitaryOperator::new(hadamard())?)],
    )?;
    let mut spectrum = vec![0.0; 8];
    spectrum[0] = 0.6;
    spectrum[1] = 0.4;
    let env = DensityOperator::diagonal(&spectrum)?;
    let plan = block_convex_plan(&spec, &env)?;
    println!(
        "cofactor {}, block masses {:?}, kernel {}/{}",
        plan.f, plan.block_mass, plan.kernel_needed, plan.kernel_available
    );
    let report = block_convex_design(&spec, &env)?;
    println!("measured error {:.2e}", report.eps_measured);

    match block_convex_design(&spec, &DensityOperator::maximally_mixed(8)) {
        Ok(_) => println!("maximally mixed environment unexpectedly accepted"),
        Err(e) => println!("maximally mixed environment: {e}"),
    }
    Ok(())
}
