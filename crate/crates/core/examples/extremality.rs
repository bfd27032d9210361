use qdf::channel::{extremality_test, kraus_rank};
use qdf::random::{random_unitary, seeded};
use qdf::tolerance::TOL_EXTREME;
use qdf::Channel;

fn main() -> qdf::Result<()> {
    let mut rng = seeded(3);
    let cases = [
        ("unitary", Channel::unitary(&random_unitary(2, &mut rng))),
        ("amplitude damping 0.4", Channel::amplitude_damping(0.4)?),
        ("dephasing 0.3", Channel::dephasing(0.3)?),
        ("depolarizing 0.5", Channel::depolarizing(0.5)?),
    ];
    println!("{:<24} {:>5} {:>8} {:>9}", "channel", "rank", "extreme", "sigma_min");
    for (name, ch) in &cases {
        let v = extremality_test(ch, TOL_EXTREME);
        println!("{name:<24} {:>5} {:>8} {:>9.2e}", kraus_rank(ch), v.is_extreme, v.min_singular_value);
    }
    Ok(())
}
