use epp_routing::embedder::embed_memory;
use epp_routing::experiment::swap_fault_audit;
use epp_routing::surface_router::{golden_schedule, SurfaceCode};
use epp_routing::topology::LatticeKind;

fn main() {
    for kind in [LatticeKind::Hexagonal, LatticeKind::HeavyHex] {
        let code = SurfaceCode::new(3).unwrap();
        let schedule = golden_schedule(kind);
        let embedded = embed_memory(&code, &schedule, 3).unwrap();
        let t = std::time::Instant::now();
        let audit = swap_fault_audit(&embedded.routed).unwrap();
        println!(
            "{kind:?}: locs={} singles={} pairs={} wv={} lv={} maxw={} in {:.1?}",
            audit.swap_locations, audit.single_paths, audit.pair_paths,
            audit.weight_violations, audit.leak_violations, audit.max_single_weight,
            t.elapsed()
        );
    }
}
