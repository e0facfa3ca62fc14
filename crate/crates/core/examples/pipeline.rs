//! Embedding → SWAP-equivariant W → SWAP-covariant channel → pool to one
//! qubit → single-qubit readout, for a handful of swap2d points.

use repkit::equivariant::{build_qnn, equivariant_generators};
use repkit::numerics::{partial_trace, pauli_z};
use repkit::qml::{TaskKind, TaskSpec};
use repkit::random::{haar_unitary, rng};
use repkit::representations::swap_rep;
use repkit::twirl::{apply_channel, channel_equivariance_residual, twirl_channel, unitary_channel};
use repkit::Tolerance;

fn main() -> repkit::Result<()> {
    let tol = Tolerance::default();
    let swap = swap_rep();
    let set = equivariant_generators(&swap, &tol);
    let layout: Vec<_> = (1..set.dim()).map(|k| (k, 0.3 * k as f64)).collect();
    let w = build_qnn(&set, &layout)?;

    let raw = unitary_channel(&haar_unitary(4, &mut rng(4)));
    let g = swap.group().expect("finite").clone();
    let phi = twirl_channel(&swap, &swap, &raw, &g, &tol)?;
    println!("channel covariance residual {:.2e}", channel_equivariance_residual(&swap, &swap, &phi));

    let data = TaskSpec::new(TaskKind::Swap2d, 8, 1).generate()?;
    for s in &data.states {
        let evolved = &w * &s.rho * w.adjoint();
        let mixed = apply_channel(&phi, &evolved)?;
        let pooled = partial_trace(&mixed, &[2, 2], &[0])?;
        let z = (pauli_z() * pooled).trace().re;
        println!("label {} → ⟨Z⟩ {z:+.4}", s.label);
    }
    Ok(())
}
