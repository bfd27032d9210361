//! Feedback decoupling of a qubit from a four-level bath under a
//! σ_z ⊗ B₀ coupling.

use qdf::operators::{c, diag_real, pauli_z, ComplexMatrix, ComplexVector, DensityOperator};
use qdf::protocols::feedback::{fbdd_check, fbdd_run, FbddConfig};
use qdf::random::{random_density, random_hermitian, random_pure_state, seeded};

fn main() -> qdf::Result<()> {
    let mut rng = seeded(11);
    let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
    let cfg = FbddConfig::new(
        ComplexMatrix::zeros(2, 2),
        random_hermitian(4, &mut rng),
        pauli_z(),
        random_hermitian(4, &mut rng),
        3.0,
        None,
        psi,
    )?;
    let check = fbdd_check(&cfg)?;
    println!("coupling spectrum {:?}, checks passed: {}", check.spectrum, check.passed());
    let out = fbdd_run(&cfg, &random_density(4, &mut rng), false)?;
    println!("fidelity with feedback: {:.12}", out.fidelity);

    let mut bad = cfg.clone();
    bad.s0 = diag_real(&[2.0, -1.0, -1.0]);
    bad.h_s = ComplexMatrix::zeros(3, 3);
    bad.d_s = 3;
    bad.psi = random_pure_state(3, &mut rng);
    let rho_b = DensityOperator::maximally_mixed(4);
    if let Err(e) = fbdd_run(&bad, &rho_b, false) {
        println!("unmixed coupling refused: {e}");
    }
    println!("forced anyway, fidelity {:.4}", fbdd_run(&bad, &rho_b, true)?.fidelity);
    Ok(())
}
