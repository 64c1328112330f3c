//! Circuit-level depolarizing noise and effective channels for embedded gates.
//!
//! The fault model is uniform: every gate is a fault location of total
//! probability `p`. Resets and measurements suffer a classical flip (an X on
//! the qubit, before the gate for measurements), single-qubit gates draw one
//! of X, Y, Z with probability `p/3` each, and CNOTs draw one of the 15
//! non-identity two-qubit Paulis with probability `p/15` each. Idle qubits
//! are noiseless.
//!
//! On top of that sits the accounting for routed gates. A CNOT whose
//! embedding is dressed with swap moves picks up extra noise: each type-1
//! swap (computational with routing qubit) contributes its depolarizing
//! marginal to one leg, each type-2 swap (both computational) contributes to
//! the pair. [`embedded_cnot_channel`] gives the first-order closed form for
//! the resulting two-qubit channel; [`exact_embedded_cnot_channel`] computes
//! the same channel exactly by dense composition and is the reference the
//! closed form is tested against.

use serde::{Deserialize, Serialize};

use crate::circuit::Gate;

/// Single-qubit Pauli, phase-free.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const ERRORS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i]
    }

    /// X component in the symplectic (x, z) encoding.
    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Z component in the symplectic (x, z) encoding.
    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Product up to phase: bitwise XOR of symplectic components.
    pub fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(
            self.x_bit() ^ other.x_bit(),
            self.z_bit() ^ other.z_bit(),
        )
    }

    pub fn commutes_with(self, other: Pauli) -> bool {
        // Symplectic form: anticommute iff x1 z2 + z1 x2 is odd.
        (self.x_bit() & other.z_bit()) == (self.z_bit() & other.x_bit())
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        })
    }
}

/// What kind of fault a gate location can produce.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FaultKind {
    /// X after a reset: the wrong computational state was prepared.
    PrepFlip,
    /// X before a measurement: the recorded outcome is flipped.
    MeasFlip,
    /// One of X, Y, Z after a single-qubit gate.
    SingleDepolarizing,
    /// One of the 15 non-identity two-qubit Paulis after a CNOT.
    PairDepolarizing,
}

impl FaultKind {
    pub fn for_gate(gate: &Gate) -> FaultKind {
        match gate {
            Gate::PrepZ { .. } => FaultKind::PrepFlip,
            Gate::MeasZ { .. } => FaultKind::MeasFlip,
            Gate::H { .. } => FaultKind::SingleDepolarizing,
            Gate::Cnot { .. } => FaultKind::PairDepolarizing,
        }
    }

    /// Number of equiprobable fault alternatives at this location. The total
    /// location probability is always `p`, split evenly.
    pub fn menu_len(self) -> usize {
        match self {
            FaultKind::PrepFlip | FaultKind::MeasFlip => 1,
            FaultKind::SingleDepolarizing => 3,
            FaultKind::PairDepolarizing => 15,
        }
    }

    /// Measurement flips act before their gate; everything else after.
    pub fn before_gate(self) -> bool {
        matches!(self, FaultKind::MeasFlip)
    }

    /// The `k`-th fault alternative as Paulis on (first, second) gate qubit.
    /// The second entry is `I` for single-qubit gates.
    pub fn effect(self, k: usize) -> (Pauli, Pauli) {
        debug_assert!(k < self.menu_len());
        match self {
            FaultKind::PrepFlip | FaultKind::MeasFlip => (Pauli::X, Pauli::I),
            FaultKind::SingleDepolarizing => (Pauli::ERRORS[k], Pauli::I),
            FaultKind::PairDepolarizing => {
                let idx = k + 1; // skip I (x) I
                (Pauli::from_index(idx / 4), Pauli::from_index(idx % 4))
            }
        }
    }
}

/// Probability distribution over two-qubit Paulis, indexed (first, second).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitChannel {
    probs: [[f64; 4]; 4],
}

impl TwoQubitChannel {
    pub fn from_probs(probs: [[f64; 4]; 4]) -> Self {
        TwoQubitChannel { probs }
    }

    pub fn prob(&self, a: Pauli, b: Pauli) -> f64 {
        self.probs[a.index()][b.index()]
    }

    pub fn no_error(&self) -> f64 {
        self.probs[0][0]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    pub fn error_prob(&self) -> f64 {
        self.total() - self.no_error()
    }

    /// The 15 non-identity entries in (first, second) index order.
    pub fn error_entries(&self) -> impl Iterator<Item = (Pauli, Pauli, f64)> + '_ {
        Pauli::ALL.into_iter().flat_map(move |a| {
            Pauli::ALL.into_iter().filter_map(move |b| {
                if (a, b) == (Pauli::I, Pauli::I) {
                    None
                } else {
                    Some((a, b, self.prob(a, b)))
                }
            })
        })
    }
}

/// Swap moves attached to one embedded CNOT.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapCounts {
    /// Type-1 swaps (with a routing qubit) touching the first leg.
    pub type1_first: u32,
    /// Type-1 swaps touching the second leg.
    pub type1_second: u32,
    /// Type-2 swaps of the interacting pair itself.
    pub type2: u32,
}

impl SwapCounts {
    pub fn new(type1_first: u32, type1_second: u32, type2: u32) -> Self {
        SwapCounts {
            type1_first,
            type1_second,
            type2,
        }
    }

    pub fn total(&self) -> u32 {
        self.type1_first + self.type1_second + self.type2
    }
}

/// Marginal of the two-qubit depolarizing channel of strength `p` on one
/// qubit: each of X, Y, Z with probability `4p/15`.
pub fn pair_depolarizing_marginal(p: f64) -> [f64; 4] {
    let each = 4.0 * p / 15.0;
    [1.0 - 3.0 * each, each, each, each]
}

/// First-order two-qubit channel of a CNOT with fault probability `p`
/// dressed with swap moves of fault probability `p_swap` each.
///
/// Type-1 swaps act on (computational, routing) pairs, so only their
/// single-leg marginal (4/5 of the fault weight, uniform over X, Y, Z)
/// reaches the interacting pair; type-2 swaps act on the pair directly. The
/// sixteen entries sum to one identically, which is what makes the identity
/// entry well defined without renormalization.
pub fn embedded_cnot_channel(p: f64, p_swap: f64, counts: SwapCounts) -> TwoQubitChannel {
    let n11 = f64::from(counts.type1_first);
    let n12 = f64::from(counts.type1_second);
    let n2 = f64::from(counts.type2);
    let first_only = (p + p_swap * (4.0 * n11 + n2)) / 15.0;
    let second_only = (p + p_swap * (4.0 * n12 + n2)) / 15.0;
    let both = (p + p_swap * n2) / 15.0;
    let no_error = 1.0 - p - p_swap * (0.8 * (n11 + n12) + n2);
    let mut probs = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            probs[a][b] = match (a, b) {
                (0, 0) => no_error,
                (_, 0) => first_only,
                (0, _) => second_only,
                _ => both,
            };
        }
    }
    TwoQubitChannel::from_probs(probs)
}

/// Single effective fault strength of an embedded interaction:
/// `p + p_swap * (4/5 * mean_type1_per_leg + mean_type2)`.
///
/// `mean_type1_per_leg` is the average number of type-1 swaps per interaction
/// leg (half the per-interaction total), `mean_type2` the average number of
/// type-2 swaps per interaction.
pub fn effective_strength(p: f64, p_swap: f64, mean_type1_per_leg: f64, mean_type2: f64) -> f64 {
    p + p_swap * (0.8 * mean_type1_per_leg + mean_type2)
}

/// Effective-rate multiplier of a whole schedule under the standard cost
/// model: a type-1 swap decomposes to three extra CNOTs (fault strength 3p)
/// while a type-2 swap merges with its flanking interaction and adds one
/// (strength p). The embedded circuit then behaves like the abstract one at
/// `p_eff = multiplier * p`.
pub fn effective_multiplier(mean_type1_per_leg: f64, mean_type2: f64) -> f64 {
    1.0 + 3.0 * 0.8 * mean_type1_per_leg + mean_type2
}

/// Joint probability of a correlated mechanism in which `order` type-1 swap
/// moves all touch the same routing wire: each contributes the 4/5 marginal
/// fraction of its fault weight.
pub fn correlated_probability(p_swap: f64, order: u32) -> f64 {
    (0.8 * p_swap).powi(order as i32)
}

/// Exact effective channel of an embedded CNOT, for validating
/// [`embedded_cnot_channel`].
///
/// Model: an ideal CNOT followed by two-qubit depolarizing of strength `p`,
/// then each swap as an ideal SWAP followed by two-qubit depolarizing of
/// strength `p_swap` on the swapped wires. Each type-1 swap moves the leg
/// onto a fresh routing wire; type-2 swaps exchange the two legs. Faults
/// propagate through all later ideal gates, and routing wires are traced out
/// at the end. Order: the CNOT, type-1 swaps on the first leg, type-1 swaps
/// on the second, then type-2 swaps; all orders agree to first order in the
/// strengths.
pub fn exact_embedded_cnot_channel(p: f64, p_swap: f64, counts: SwapCounts) -> TwoQubitChannel {
    let wires = 2 + counts.type1_first as usize + counts.type1_second as usize;
    let mut state = WireState::new(wires);
    // Wire assignment: 0, 1 start as the two legs; 2.. are routing wires.
    let mut pos = [0usize, 1usize];
    let mut next_free = 2;

    state.cnot(pos[0], pos[1]);
    state.depolarize_pair(pos[0], pos[1], p);
    for leg in 0..2 {
        let moves = if leg == 0 {
            counts.type1_first
        } else {
            counts.type1_second
        };
        for _ in 0..moves {
            let r = next_free;
            next_free += 1;
            state.swap(pos[leg], r);
            state.depolarize_pair(pos[leg], r, p_swap);
            pos[leg] = r;
        }
    }
    for _ in 0..counts.type2 {
        state.swap(pos[0], pos[1]);
        state.depolarize_pair(pos[0], pos[1], p_swap);
        pos.swap(0, 1);
    }
    state.marginal_pair(pos[0], pos[1])
}

/// Dense distribution over Pauli strings on a small set of wires. Each wire
/// occupies two bits of the index: bit `2w` is the X component, bit `2w + 1`
/// the Z component, so applying a Pauli fault is an index XOR.
struct WireState {
    wires: usize,
    probs: Vec<f64>,
}

impl WireState {
    fn new(wires: usize) -> Self {
        assert!(wires <= 12, "dense representation limited to 12 wires");
        let mut probs = vec![0.0; 1 << (2 * wires)];
        probs[0] = 1.0;
        WireState { wires, probs }
    }

    fn x_bit(w: usize) -> usize {
        1 << (2 * w)
    }

    fn z_bit(w: usize) -> usize {
        1 << (2 * w + 1)
    }

    /// Conjugates every Pauli string through an ideal CNOT: X on the control
    /// spreads to the target, Z on the target spreads to the control.
    fn cnot(&mut self, control: usize, target: usize) {
        let (xc, zc) = (Self::x_bit(control), Self::z_bit(control));
        let (xt, zt) = (Self::x_bit(target), Self::z_bit(target));
        let mut next = vec![0.0; self.probs.len()];
        for (idx, &pr) in self.probs.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            let mut out = idx;
            if idx & xc != 0 {
                out ^= xt;
            }
            if idx & zt != 0 {
                out ^= zc;
            }
            next[out] += pr;
        }
        self.probs = next;
    }

    /// Conjugates through an ideal SWAP: exchanges the two wires' components.
    fn swap(&mut self, a: usize, b: usize) {
        let (xa, za) = (Self::x_bit(a), Self::z_bit(a));
        let (xb, zb) = (Self::x_bit(b), Self::z_bit(b));
        let mut next = vec![0.0; self.probs.len()];
        for (idx, &pr) in self.probs.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            let mut out = idx & !(xa | za | xb | zb);
            if idx & xa != 0 {
                out |= xb;
            }
            if idx & za != 0 {
                out |= zb;
            }
            if idx & xb != 0 {
                out |= xa;
            }
            if idx & zb != 0 {
                out |= za;
            }
            next[out] += pr;
        }
        self.probs = next;
    }

    /// Convolves with two-qubit depolarizing of strength `p` on wires (a, b).
    fn depolarize_pair(&mut self, a: usize, b: usize, p: f64) {
        let mut masks = Vec::with_capacity(15);
        for pa in Pauli::ALL {
            for pb in Pauli::ALL {
                if (pa, pb) == (Pauli::I, Pauli::I) {
                    continue;
                }
                let mut m = 0usize;
                if pa.x_bit() {
                    m |= Self::x_bit(a);
                }
                if pa.z_bit() {
                    m |= Self::z_bit(a);
                }
                if pb.x_bit() {
                    m |= Self::x_bit(b);
                }
                if pb.z_bit() {
                    m |= Self::z_bit(b);
                }
                masks.push(m);
            }
        }
        let each = p / 15.0;
        let mut next = vec![0.0; self.probs.len()];
        for (idx, &pr) in self.probs.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            next[idx] += pr * (1.0 - p);
            for &m in &masks {
                next[idx ^ m] += pr * each;
            }
        }
        self.probs = next;
    }

    /// Sums out every wire except (a, b), returning their joint channel.
    fn marginal_pair(&self, a: usize, b: usize) -> TwoQubitChannel {
        let mut probs = [[0.0; 4]; 4];
        for (idx, &pr) in self.probs.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            let pa = Pauli::from_bits(idx & Self::x_bit(a) != 0, idx & Self::z_bit(a) != 0);
            let pb = Pauli::from_bits(idx & Self::x_bit(b) != 0, idx & Self::z_bit(b) != 0);
            probs[pa.index()][pb.index()] += pr;
        }
        let _ = self.wires;
        TwoQubitChannel::from_probs(probs)
    }
}
