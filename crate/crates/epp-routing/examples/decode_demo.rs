//! Decodes noisy memory shots on the abstract distance-3 surface code: builds
//! the detector dictionary, prepares the matching decoder, walks through a
//! few shots by hand, then estimates the logical error rate.

use epp_routing::decoder::PreparedDecoder;
use epp_routing::experiment::{abstract_instance, logical_error_rate};
use epp_routing::sim::{bits, sample_shot, shot_rng};
use epp_routing::surface_router::ScheduleVariant;

fn main() {
    let p = 3e-3;
    let instance = abstract_instance(3, ScheduleVariant::Hvvh, 3).unwrap();
    let dict = &instance.dict;
    println!(
        "distance-3 memory, 3 rounds: {} fault sites, {} detectors",
        dict.sites().num_faults(),
        dict.num_detectors()
    );

    let decoder = PreparedDecoder::new(dict, p).unwrap();

    println!("\nfirst shots at p = {p}:");
    let mut mask = vec![0u64; dict.words()];
    for shot in 0..8 {
        let mut rng = shot_rng(7, shot);
        let flipped = sample_shot(dict, p, &mut rng, &mut mask);
        let defects = bits::count_ones(&mask);
        let predicted = decoder.decode(&mask);
        println!(
            "  shot {shot}: {defects} defects, predicted flip {predicted}, actual {flipped} -> {}",
            if predicted == flipped { "ok" } else { "LOGICAL ERROR" }
        );
    }

    let shots = 200_000;
    let est = logical_error_rate(dict, &decoder, p, shots, 11);
    println!(
        "\n{} shots: {} failures, p_L = {:.3e} +- {:.1e}",
        est.shots,
        est.failures,
        est.rate(),
        est.std_error()
    );
}
