//! Small Monte Carlo sweep: abstract distance-3 memory against its embedding
//! on the hexagonal lattice, with a power-law slope fit and the fitted
//! horizontal scale between the two curves.
//!
//! Shot counts are kept small here so the example finishes in seconds; the
//! command-line `sweep` and `fit` subcommands run the full-size version.

use epp_routing::experiment::{
    abstract_instance, fit_peff, fit_slope, geometric_grid, golden_embedded, sweep,
};
use epp_routing::surface_router::ScheduleVariant;
use epp_routing::topology::LatticeKind;

fn main() {
    let shots = 40_000;
    let rounds = 3;

    let abstract_side = abstract_instance(3, ScheduleVariant::Hvvh, rounds).unwrap();
    let embedded = golden_embedded(LatticeKind::Hexagonal, 3, rounds).unwrap();

    let abstract_ps = geometric_grid(2e-3, 8e-3, 4);
    let embedded_ps: Vec<f64> = abstract_ps.iter().map(|p| p / 1.25).collect();

    println!("abstract d=3 ({shots} shots per point):");
    let abstract_points = sweep(&abstract_side.dict, &abstract_ps, shots, 100).unwrap();
    for pt in &abstract_points {
        println!(
            "  p={:.3e}  p_L={:.3e} +- {:.1e}",
            pt.p,
            pt.estimate.rate(),
            pt.estimate.std_error()
        );
    }

    println!("embedded hexagonal d=3:");
    let embedded_points = sweep(&embedded.instance.dict, &embedded_ps, shots, 200).unwrap();
    for pt in &embedded_points {
        println!(
            "  p={:.3e}  p_L={:.3e} +- {:.1e}",
            pt.p,
            pt.estimate.rate(),
            pt.estimate.std_error()
        );
    }

    let fit = fit_slope(&abstract_points).unwrap();
    println!(
        "\nabstract slope: {:.2} +- {:.2} (d=3 corrects 1 fault, so ~2)",
        fit.slope, fit.slope_stderr
    );
    let scale = fit_peff(&abstract_points, &embedded_points).unwrap();
    println!(
        "fitted horizontal scale embedded/abstract: {:.3} +- {:.3} (analytic 1.25)",
        scale.scale, scale.scale_stderr
    );
}
