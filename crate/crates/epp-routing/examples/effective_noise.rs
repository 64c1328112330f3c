//! Walks the effective-noise model of embedded interactions: the closed-form
//! channel against exact composition, and the per-schedule effective rate.

use epp_routing::noise::{
    effective_multiplier, effective_strength, embedded_cnot_channel,
    exact_embedded_cnot_channel, pair_depolarizing_marginal, Pauli, SwapCounts,
};
use epp_routing::surface_router::golden_schedule;
use epp_routing::topology::LatticeKind;

fn main() {
    let p = 1e-3;

    let marginal = pair_depolarizing_marginal(p);
    println!("one-leg marginal of pair depolarizing({p}): {marginal:?}");
    println!("  error weight {:.6e} = 4p/5", 1.0 - marginal[0]);

    // The closed form keeps only terms linear in the fault strengths; the
    // exact composition propagates every fault through the later ideal gates
    // and traces out the routing wires. They agree to O(p^2).
    println!("\nclosed form vs exact composition, entrywise |difference|:");
    for counts in [
        SwapCounts::new(0, 0, 0),
        SwapCounts::new(1, 0, 0),
        SwapCounts::new(2, 1, 0),
        SwapCounts::new(0, 0, 1),
        SwapCounts::new(1, 1, 2),
    ] {
        let approx = embedded_cnot_channel(p, 3.0 * p, counts);
        let exact = exact_embedded_cnot_channel(p, 3.0 * p, counts);
        let worst = Pauli::ALL
            .into_iter()
            .flat_map(|a| Pauli::ALL.into_iter().map(move |b| (a, b)))
            .map(|(a, b)| (approx.prob(a, b) - exact.prob(a, b)).abs())
            .fold(0.0f64, f64::max);
        println!(
            "  type-1 {}+{}, type-2 {}: worst entry gap {worst:.2e} (p^2 = {:.0e})",
            counts.type1_first,
            counts.type1_second,
            counts.type2,
            p * p
        );
    }

    println!("\nper-schedule effective rates at p = {p}:");
    for lattice in [LatticeKind::HeavyHex, LatticeKind::Hexagonal] {
        let schedule = golden_schedule(lattice);
        let report = schedule.validate().unwrap();
        let (n1, n2) = (report.mean_type1_per_leg(), report.mean_type2());
        // Type-1 swaps lower to three extra CNOTs, type-2 swaps to one, so
        // their fault strengths differ.
        let p_swap = if report.type2_per_cell_round == 0 {
            3.0 * p
        } else {
            p
        };
        println!(
            "  {}: {:.3} type-1 per leg, {:.3} type-2 per interaction",
            lattice.token(),
            n1,
            n2
        );
        println!(
            "    p_eff' = {:.4e} = {:.2} p",
            effective_strength(p, p_swap, n1, n2),
            effective_multiplier(n1, n2)
        );
    }
}
