//! Coherent rank-two synthesis with one ancilla qubit and an averaged
//! entangling Hamiltonian, plus the effect of a noisy ancilla.

use qdf::operators::{c, DensityOperator};
use qdf::protocols::coherent::{lv_noisy_ancilla, lv_polar_extract, lv_simulate, rank_two_from_generator, two_term_qubit_schedule};
use qdf::Channel;

fn main() -> qdf::Result<()> {
    let anc = DensityOperator::basis_state(2, 0);
    let sched = two_term_qubit_schedule(8)?;
    let target = rank_two_from_generator(&sched.averaged(), 1.2)?;
    println!("cycles  trotter error");
    for n in [8, 16, 32, 64, 128] {
        let out = lv_simulate(&target, &sched.with_cycles(n)?, &anc)?;
        println!("{n:>6}  {:.3e}", out.trotter_error);
    }

    let ad = Channel::amplitude_damping(0.36)?;
    let t = lv_polar_extract(&ad.kraus().ops()[0], &ad.kraus().ops()[1])?;
    println!("\nancilla excited weight  error lower bound");
    for w1 in [0.0, 0.05, 0.1, 0.2] {
        let out = lv_noisy_ancilla(&t, 1.0 - w1, w1, c(0.0, 0.0))?;
        println!("{w1:>22.2}  {:.3e}", out.error_lower_bound);
    }
    Ok(())
}
