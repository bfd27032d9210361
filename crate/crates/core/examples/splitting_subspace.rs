//! One-shot stabilization of a two-dimensional target subspace of a
//! five-level system.

use qdf::operators::{max_abs_diff, DensityOperator};
use qdf::protocols::splitting::{split_build, split_closed_form, split_run, split_run_with_ancilla, target_population};
use qdf::random::{random_density, random_isometry, seeded};

fn main() -> qdf::Result<()> {
    let mut rng = seeded(21);
    let v = random_isometry(5, 2, &mut rng);
    let cfg = split_build(5, &(&v * v.adjoint()))?;
    println!("ancilla dimension {}", cfg.k);
    let rho = random_density(5, &mut rng);
    let out = split_run(&cfg, &rho)?;
    println!("population in target: {:.15}", target_population(&cfg, &out));
    println!("closed form residual: {:.2e}", max_abs_diff(out.matrix(), split_closed_form(&cfg, &rho)?.matrix()));

    let mut w = vec![0.025; cfg.k];
    w[0] = 1.0 - 0.025 * (cfg.k - 1) as f64;
    let noisy = split_run_with_ancilla(&cfg, &rho, &DensityOperator::diagonal(&w)?)?;
    println!("noisy ancilla population: {:.6}", target_population(&cfg, &noisy));
    Ok(())
}
