//! Routes small abstract CNOT circuits onto a hexagonal patch with the
//! greedy router, certifies the results, and lowers them to bare CNOTs.
//!
//! The router may only insert swaps that keep error patterns intact: hops
//! onto state-free routing qubits (type 1), or exchanges between two
//! computational qubits that share a gate in a neighbouring computational
//! layer (type 2). Those typing rules can deadlock the greedy search, so the
//! demo first shows a cramped instance failing, then a roomier one routing.

use epp_routing::circuit::{Circuit, Gate, Layer};
use epp_routing::router::{certify, lower, route, RoutedItem, RouterConfig};
use epp_routing::topology::{Coord, DeviceGraph, LatticeKind};

fn brickwork() -> Circuit {
    let mut circuit = Circuit::new(6);
    let cnots = |pairs: &[(usize, usize)]| {
        Layer::new(pairs.iter().map(|&(c, t)| Gate::cnot(c, t)).collect())
    };
    circuit.push_layer(cnots(&[(0, 1), (2, 3), (4, 5)])).unwrap();
    circuit.push_layer(cnots(&[(1, 2), (3, 4)])).unwrap();
    circuit.push_layer(cnots(&[(0, 1), (2, 3), (4, 5)])).unwrap();
    circuit
}

fn main() {
    let circuit = brickwork();
    let device = DeviceGraph::lattice_region(LatticeKind::Hexagonal, 0..6, 0..4).unwrap();
    println!(
        "device: hexagonal patch, {} qubits / {} couplers",
        device.num_nodes(),
        device.num_edges()
    );
    let place = |spots: &[(i64, i64)]| -> Vec<_> {
        spots
            .iter()
            .map(|&(x, y)| device.node(Coord::new(x, y)).unwrap())
            .collect()
    };

    // Three pairs converging on the same few couplers: every move that would
    // still help is a comp-comp swap between non-partners, which the typing
    // rules forbid.
    let cramped = place(&[(0, 0), (3, 0), (0, 2), (3, 2), (0, 3), (3, 3)]);
    match route(&circuit, &device, cramped, &RouterConfig::default()) {
        Ok(_) => println!("cramped layout: routed (unexpected)"),
        Err(err) => println!("cramped layout: {err}"),
    }

    // One column per pair leaves routing qubits on every approach path.
    let roomy = place(&[(0, 0), (0, 3), (2, 0), (2, 3), (4, 0), (4, 3)]);
    let routed = route(&circuit, &device, roomy, &RouterConfig::default()).unwrap();
    let swap_layers = routed
        .items
        .iter()
        .filter(|i| matches!(i, RoutedItem::Swaps { .. }))
        .count();
    println!("roomy layout: routed with {swap_layers} swap layers");

    let report = certify(&routed).unwrap();
    println!(
        "certified: {} type-1 + {} type-2 swaps across {} two-qubit gates",
        report.type1_swaps, report.type2_swaps, report.two_qubit_gates
    );
    println!("report: {}", serde_json::to_string(&report).unwrap());

    let lowered = lower(&routed).unwrap();
    println!(
        "lowered: each swap cost {:?} extra CNOTs, packed two-qubit depth {}",
        lowered.stats.uniform_extra_cnots(),
        lowered.stats.two_qubit_depth
    );

    // A three-qubit chain where the cheapest move is a type-2 exchange: the
    // middle qubit already talked to the bottom one, so swapping them is an
    // allowed exchange and makes the bottom qubit adjacent to the top.
    let mut chain = Circuit::new(3);
    for pairs in [[(0usize, 1usize)].as_slice(), &[(0, 2)], &[(0, 1)]] {
        chain
            .push_layer(Layer::new(
                pairs.iter().map(|&(c, t)| Gate::cnot(c, t)).collect(),
            ))
            .unwrap();
    }
    let initial = place(&[(1, 0), (1, 1), (1, 2)]);
    let routed = route(&chain, &device, initial, &RouterConfig::default()).unwrap();
    let report = certify(&routed).unwrap();
    println!(
        "chain demo: {} type-1, {} type-2 (partner exchange instead of a detour)",
        report.type1_swaps, report.type2_swaps
    );
}
