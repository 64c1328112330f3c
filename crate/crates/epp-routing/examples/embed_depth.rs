//! Embeds the distance-3 memory experiment on both built-in lattices and
//! reports the cost side of the ledger: swap counts, extra CNOTs per swap,
//! and the packed two-qubit depth of one syndrome-extraction round.

use epp_routing::experiment::{bulk_round_depth, golden_embedded, per_round_two_qubit_depth};
use epp_routing::surface_router::golden_schedule;
use epp_routing::topology::LatticeKind;

fn main() {
    for lattice in [LatticeKind::Hexagonal, LatticeKind::HeavyHex] {
        let schedule = golden_schedule(lattice);
        let report = schedule.validate().unwrap();
        println!("== {} ({}) ==", lattice.token(), schedule.variant);
        println!(
            "cell schedule: {} swap layers, {} type-1 + {} type-2 per cell round",
            schedule.num_swap_layers(),
            report.type1_per_cell_round,
            report.type2_per_cell_round
        );

        let embedded = golden_embedded(lattice, 3, 3).unwrap();
        let cert = &embedded.certification;
        println!(
            "embedded d=3, 3 rounds: {} type-1 + {} type-2 swaps, {} two-qubit gates",
            cert.type1_swaps, cert.type2_swaps, cert.two_qubit_gates
        );
        println!(
            "  mean swaps: {:.3} type-1 per leg, {:.3} type-2 per interaction",
            cert.mean_type1_per_leg(),
            cert.mean_type2()
        );
        println!(
            "lowering: each swap cost {:?} extra CNOTs, {} computational CNOTs cancelled",
            embedded.lowering.uniform_extra_cnots(),
            embedded.lowering.cancelled_computational
        );

        let depth = per_round_two_qubit_depth(&schedule, 3).unwrap();
        let bulk = bulk_round_depth(&schedule).unwrap();
        println!("packed two-qubit depth per round: {depth} on the d=3 patch, {bulk} in the bulk\n");
    }
}
