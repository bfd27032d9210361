//! Piecewise-constant control search for a joint unitary whose reduced
//! action is amplitude damping.

use qdf::channel::reduced_channel;
use qdf::distance::channel_distance_1to1;
use qdf::operators::DensityOperator;
use qdf::transfer::{optimize, propagate, target_components, ControlProblem, OptimizeOptions};
use qdf::Channel;

fn main() -> qdf::Result<()> {
    let prob = ControlProblem::fully_controllable(2, 1.0, 6, DensityOperator::basis_state(2, 0))?;
    let target = Channel::amplitude_damping(0.7)?;
    let comps = target_components(&target, &prob.basis)?;
    let res = optimize(
        &prob,
        &comps,
        &OptimizeOptions {
            max_iters: 300,
            restarts: 3,
            ..Default::default()
        },
    )?;
    println!("restart {} won after {} iterations", res.restart, res.iterations);
    for (i, c) in res.cost_trace.iter().enumerate().step_by(10.max(res.cost_trace.len() / 8)) {
        println!("  step {i:>4}: cost {c:.3e}");
    }
    println!("final cost {:.3e}", res.final_cost);
    let achieved = reduced_channel(&propagate(&prob, &res.pulse)?, &prob.rho_e, 2)?;
    println!("channel distance {:.3e}", channel_distance_1to1(&achieved, &target, 8, 0)?.lower_bound);
    Ok(())
}
