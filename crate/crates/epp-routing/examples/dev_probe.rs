use epp_routing::noise::{embedded_cnot_channel, exact_embedded_cnot_channel, Pauli, SwapCounts};

fn main() {
    let p = 1e-3;
    for p_swap in [p, 3.0 * p] {
        let mut worst = (0.0f64, SwapCounts::default(), Pauli::I, Pauli::I);
        for n11 in 0..=2 {
            for n12 in 0..=2 {
                for n2 in 0..=2 {
                    let counts = SwapCounts::new(n11, n12, n2);
                    let formula = embedded_cnot_channel(p, p_swap, counts);
                    let exact = exact_embedded_cnot_channel(p, p_swap, counts);
                    for a in Pauli::ALL {
                        for b in Pauli::ALL {
                            let gap = (formula.prob(a, b) - exact.prob(a, b)).abs();
                            if gap > worst.0 {
                                worst = (gap, counts, a, b);
                            }
                        }
                    }
                }
            }
        }
        println!(
            "p_swap={:.0e}: worst gap {:.3e} = {:.2} p^2 at {:?} entry {:?}{:?}",
            p_swap,
            worst.0,
            worst.0 / (p * p),
            worst.1,
            worst.2,
            worst.3
        );
    }
}
