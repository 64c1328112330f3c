//! Searches for minimum-depth unit-cell schedules on both built-in lattices
//! and prints the resulting tables with their per-cell swap costs.
//!
//! The shipped schedule tables under data/ were produced by this program.
//! Optional arguments narrow the sweep:
//!
//! ```text
//! unit_cell_search [lattice] [variant] [max-swap-layers]
//! ```

use std::time::Instant;

use epp_routing::surface_router::{search_cell_schedule, ScheduleVariant, SearchConfig};
use epp_routing::topology::LatticeKind;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let only_lattice = args.first().map(|s| {
        LatticeKind::from_token(s).unwrap_or_else(|| panic!("unknown lattice {s:?}"))
    });
    let only_variant = args.get(1).map(|s| {
        ScheduleVariant::from_token(s).unwrap_or_else(|| panic!("unknown variant {s:?}"))
    });
    let max_swap_layers: usize = args.get(2).map_or(6, |s| s.parse().expect("layer budget"));
    for lattice in [LatticeKind::Hexagonal, LatticeKind::HeavyHex] {
        if only_lattice.is_some_and(|l| l != lattice) {
            continue;
        }
        for variant in ScheduleVariant::ALL {
            if only_variant.is_some_and(|v| v != variant) {
                continue;
            }
            for allow_type2 in [true, false] {
                let config = SearchConfig {
                    max_swap_layers,
                    allow_type2,
                };
                let started = Instant::now();
                print!(
                    "{} / {}{}: ",
                    lattice.token(),
                    variant.token(),
                    if allow_type2 { "" } else { " (hops only)" },
                );
                match search_cell_schedule(lattice, variant, &config) {
                    Ok(schedule) => {
                        let report = schedule.validate().expect("search output validates");
                        println!(
                            "{} swap layers, {} type-1 and {} type-2 swaps per cell round ({:.1?})",
                            schedule.num_swap_layers(),
                            report.type1_per_cell_round,
                            report.type2_per_cell_round,
                            started.elapsed(),
                        );
                        println!("{}", schedule.to_csv());
                    }
                    Err(err) => println!("failed: {err} ({:.1?})", started.elapsed()),
                }
            }
        }
    }
}
