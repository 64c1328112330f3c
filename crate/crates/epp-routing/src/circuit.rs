//! Layered stabilizer circuits.
//!
//! A [`Circuit`] is a sequence of layers over a fixed qubit register; each
//! layer is a list of gates with pairwise disjoint support, so gates within a
//! layer commute and execute in one timestep. Qubit indices are plain `usize`:
//! abstract circuits index an abstract register, device circuits reuse the
//! device graph's node ids.
//!
//! Gate order inside a layer is preserved exactly as built. Measurement
//! results are indexed by traversal order (layer by layer, gate by gate), so
//! two circuits that emit corresponding measurements in the same order agree
//! on measurement indices even when their qubit numbering differs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One gate. Swaps never appear here: routed schedules lower swap moves into
/// CNOT triples before anything is simulated, so the noise model sees only
/// these four operations.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    /// Reset to |0>.
    PrepZ { q: usize },
    /// Destructive Z-basis measurement.
    MeasZ { q: usize },
    /// Hadamard.
    H { q: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn prep_z(q: usize) -> Self {
        Gate::PrepZ { q }
    }

    pub fn meas_z(q: usize) -> Self {
        Gate::MeasZ { q }
    }

    pub fn h(q: usize) -> Self {
        Gate::H { q }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    /// Supported qubits as (first, optional second).
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::PrepZ { q } | Gate::MeasZ { q } | Gate::H { q } => (q, None),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::MeasZ { .. })
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("gate on qubit {qubit} exceeds register of {num_qubits}")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("layer {layer} touches qubit {qubit} twice")]
    OverlappingSupport { layer: usize, qubit: usize },
    #[error("cnot with identical control and target {q}")]
    DegenerateCnot { q: usize },
}

/// One timestep: gates with pairwise disjoint support, in emission order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Layer {
    gates: Vec<Gate>,
}

impl Layer {
    pub fn new(gates: Vec<Gate>) -> Self {
        Layer { gates }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    /// Number of two-qubit gates in the layer.
    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }
}

impl FromIterator<Gate> for Layer {
    fn from_iter<T: IntoIterator<Item = Gate>>(iter: T) -> Self {
        Layer::new(iter.into_iter().collect())
    }
}

/// A layered circuit over `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Circuit {
    num_qubits: usize,
    layers: Vec<Layer>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            layers: Vec::new(),
        }
    }

    /// Appends a layer after validating qubit bounds and disjoint support.
    pub fn push_layer(&mut self, layer: Layer) -> Result<(), CircuitError> {
        let idx = self.layers.len();
        let mut seen = vec![false; self.num_qubits];
        for gate in layer.gates() {
            if let Gate::Cnot { control, target } = gate {
                if control == target {
                    return Err(CircuitError::DegenerateCnot { q: *control });
                }
            }
            let (a, b) = gate.qubits();
            for q in std::iter::once(a).chain(b) {
                if q >= self.num_qubits {
                    return Err(CircuitError::QubitOutOfRange {
                        qubit: q,
                        num_qubits: self.num_qubits,
                    });
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(CircuitError::OverlappingSupport {
                        layer: idx,
                        qubit: q,
                    });
                }
            }
        }
        self.layers.push(layer);
        Ok(())
    }

    /// Convenience wrapper building the layer from a gate list.
    pub fn push_gates(&mut self, gates: Vec<Gate>) -> Result<(), CircuitError> {
        self.push_layer(Layer::new(gates))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_measurements(&self) -> usize {
        self.gates().filter(|g| g.is_measurement()).count()
    }

    /// All gates in traversal order.
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flat_map(|l| l.gates().iter())
    }

    /// Measurements in traversal order as (measurement index, qubit).
    pub fn measurements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.gates()
            .filter(|g| g.is_measurement())
            .enumerate()
            .map(|(i, g)| (i, g.qubits().0))
    }

    /// Number of layers containing at least one two-qubit gate. This is the
    /// depth measure used when comparing schedules, since single-qubit layers
    /// are cheap on hardware and noiseless bookkeeping here.
    pub fn two_qubit_depth(&self) -> usize {
        self.layers.iter().filter(|l| l.two_qubit_count() > 0).count()
    }

    pub fn to_description(&self) -> CircuitDescription {
        CircuitDescription {
            num_qubits: self.num_qubits,
            layers: self.layers.iter().map(|l| l.gates().to_vec()).collect(),
        }
    }

    pub fn from_description(desc: CircuitDescription) -> Result<Self, CircuitError> {
        let mut circuit = Circuit::new(desc.num_qubits);
        for gates in desc.layers {
            circuit.push_gates(gates)?;
        }
        Ok(circuit)
    }
}

/// Serializable form of a [`Circuit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitDescription {
    pub num_qubits: usize,
    pub layers: Vec<Vec<Gate>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn push_layer_validates() {
        let mut c = Circuit::new(3);
        c.push_gates(vec![Gate::h(0), Gate::cnot(1, 2)]).unwrap();
        assert_eq!(
            c.push_gates(vec![Gate::h(3)]).unwrap_err(),
            CircuitError::QubitOutOfRange { qubit: 3, num_qubits: 3 }
        );
        assert_eq!(
            c.push_gates(vec![Gate::cnot(0, 1), Gate::h(1)]).unwrap_err(),
            CircuitError::OverlappingSupport { layer: 1, qubit: 1 }
        );
        assert_eq!(
            c.push_gates(vec![Gate::cnot(2, 2)]).unwrap_err(),
            CircuitError::DegenerateCnot { q: 2 }
        );
        assert_eq!(c.num_layers(), 1);
    }

    #[test]
    fn measurement_indices_follow_traversal_order() {
        let mut c = Circuit::new(4);
        c.push_gates(vec![Gate::meas_z(2), Gate::meas_z(0)]).unwrap();
        c.push_gates(vec![Gate::h(1)]).unwrap();
        c.push_gates(vec![Gate::meas_z(1)]).unwrap();
        let order: Vec<_> = c.measurements().collect();
        assert_eq!(order, vec![(0, 2), (1, 0), (2, 1)]);
        assert_eq!(c.num_measurements(), 3);
    }

    #[test]
    fn two_qubit_depth_ignores_single_qubit_layers() {
        let mut c = Circuit::new(3);
        c.push_gates(vec![Gate::prep_z(0)]).unwrap();
        c.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        c.push_gates(vec![Gate::h(0), Gate::h(1)]).unwrap();
        c.push_gates(vec![Gate::cnot(1, 2)]).unwrap();
        assert_eq!(c.two_qubit_depth(), 2);
        assert_eq!(c.num_layers(), 4);
    }

    fn arb_gate(num_qubits: usize) -> impl Strategy<Value = Gate> {
        let q = 0..num_qubits;
        prop_oneof![
            q.clone().prop_map(Gate::prep_z),
            q.clone().prop_map(Gate::meas_z),
            q.clone().prop_map(Gate::h),
            (0..num_qubits, 0..num_qubits)
                .prop_filter("distinct", |(a, b)| a != b)
                .prop_map(|(c, t)| Gate::cnot(c, t)),
        ]
    }

    proptest! {
        // Any circuit that validates also survives a description round trip
        // unchanged, and any layer accepted by push_layer has disjoint support.
        #[test]
        fn description_round_trip(
            gates in proptest::collection::vec(arb_gate(6), 0..40),
        ) {
            let mut c = Circuit::new(6);
            let mut layer = Vec::new();
            let mut used = [false; 6];
            for g in gates {
                let (a, b) = g.qubits();
                let clash = used[a] || b.map_or(false, |b| used[b]);
                if clash {
                    c.push_gates(std::mem::take(&mut layer)).unwrap();
                    used = [false; 6];
                }
                used[g.qubits().0] = true;
                if let (_, Some(b)) = g.qubits() {
                    used[b] = true;
                }
                layer.push(g);
            }
            if !layer.is_empty() {
                c.push_gates(layer).unwrap();
            }
            let json = serde_json::to_string(&c.to_description()).unwrap();
            let back = Circuit::from_description(serde_json::from_str(&json).unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
