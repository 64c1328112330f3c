//! Tour of the built-in device lattices: unit cells, finite regions, and the
//! periodic tori used by the schedule search.

use epp_routing::topology::{Coord, DeviceGraph, LatticeKind};

fn main() {
    for kind in [LatticeKind::Hexagonal, LatticeKind::HeavyHex] {
        let (v1, v2) = kind.cell_vectors();
        println!("== {} ==", kind.token());
        println!(
            "unit cell spans {:?} x {:?} with {} sites: {:?}",
            (v1.x, v1.y),
            (v2.x, v2.y),
            kind.sites_per_cell(),
            kind.cell_sites()
        );

        let graph = DeviceGraph::lattice(kind, 3, 3).unwrap();
        let mut by_degree = [0usize; 4];
        for id in 0..graph.num_nodes() {
            by_degree[graph.degree(id)] += 1;
        }
        println!(
            "3x3 cells: {} qubits, {} couplers, degree histogram {:?} (max degree {})",
            graph.num_nodes(),
            graph.num_edges(),
            by_degree,
            kind.max_degree()
        );

        let torus = DeviceGraph::torus(kind, 3).unwrap();
        println!(
            "3x3 torus: {} qubits, periodic {}, wrap period {:?}",
            torus.num_nodes(),
            torus.is_periodic(),
            torus.period().unwrap()
        );

        // Membership queries work on raw coordinates without building a graph.
        let probes = [Coord::new(0, 0), Coord::new(1, 1), Coord::new(0, 1)];
        for c in probes {
            println!("  site_exists({:>2},{:>2}) = {}", c.x, c.y, kind.site_exists(c));
        }
        println!();
    }

    // Distances come from breadth-first search over couplers, which is what
    // the router minimizes when it picks swap moves.
    let graph = DeviceGraph::lattice(LatticeKind::HeavyHex, 2, 2).unwrap();
    let distances = graph.all_pairs_distances();
    let a = graph.node(Coord::new(0, 0)).unwrap();
    let b = graph.node(Coord::new(4, 4)).unwrap();
    println!(
        "heavy-hex walk from (0,0) to (4,4): {} coupler steps",
        distances.dist(a, b)
    );
}
