//! Greedy error-pattern-preserving routing for layered circuits.
//!
//! Routing inserts swap layers between the computational layers of an
//! abstract circuit so every two-qubit gate lands on adjacent device nodes.
//! Only two swap flavors are allowed, chosen so a routed circuit never turns
//! a low-weight fault into a higher-weight abstract error pattern:
//!
//! * type 1: a computational qubit swaps with a routing qubit (one that holds
//!   no abstract qubit);
//! * type 2: two computational qubits swap, but only if they share a
//!   two-qubit gate in the computational layer immediately before or after
//!   the swap run they sit in.
//!
//! Routing-routing swaps are pointless and forbidden outright, so every swap
//! either moves an abstract qubit through empty space or exchanges a pair
//! that was interacting anyway.
//!
//! The router itself is a greedy heuristic over the distance objective
//! `R = sum of device distances between partners of upcoming two-qubit
//! gates`; [`certify`] independently validates any routed schedule, and
//! [`lower`] turns one into a flat device circuit with swaps decomposed into
//! CNOT triples and adjacent identical CNOT pairs cancelled.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitDescription, CircuitError, Gate, Layer};
use crate::topology::{DeviceGraph, DistanceMatrix, NodeId, TopologyError};

/// Bijective-on-its-image map from abstract qubits to device nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    to_node: Vec<NodeId>,
    holder: Vec<Option<usize>>,
}

impl Placement {
    pub fn new(assignment: Vec<NodeId>, num_nodes: usize) -> Result<Self, RouterError> {
        let mut holder = vec![None; num_nodes];
        for (q, &n) in assignment.iter().enumerate() {
            if n >= num_nodes {
                return Err(RouterError::PlacementNodeOutOfRange { qubit: q, node: n });
            }
            if let Some(prev) = holder[n].replace(q) {
                return Err(RouterError::PlacementCollision {
                    node: n,
                    first: prev,
                    second: q,
                });
            }
        }
        Ok(Placement {
            to_node: assignment,
            holder,
        })
    }

    /// Places qubit `i` on node `i`.
    pub fn compact(num_qubits: usize, num_nodes: usize) -> Result<Self, RouterError> {
        Placement::new((0..num_qubits).collect(), num_nodes)
    }

    pub fn num_qubits(&self) -> usize {
        self.to_node.len()
    }

    pub fn node_of(&self, qubit: usize) -> NodeId {
        self.to_node[qubit]
    }

    pub fn qubit_at(&self, node: NodeId) -> Option<usize> {
        self.holder[node]
    }

    pub fn is_computational(&self, node: NodeId) -> bool {
        self.holder[node].is_some()
    }

    pub fn assignment(&self) -> &[NodeId] {
        &self.to_node
    }

    /// Applies a swap of the contents of two nodes.
    pub fn swap_nodes(&mut self, a: NodeId, b: NodeId) {
        let qa = self.holder[a];
        let qb = self.holder[b];
        if let Some(q) = qa {
            self.to_node[q] = b;
        }
        if let Some(q) = qb {
            self.to_node[q] = a;
        }
        self.holder[a] = qb;
        self.holder[b] = qa;
    }
}

/// Error-pattern-preserving swap classification.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum SwapKind {
    /// Computational qubit with routing qubit.
    Type1,
    /// Two computational qubits sharing a flanking two-qubit gate.
    Type2,
}

/// One scheduled step of a routed circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum RoutedItem {
    /// Execute abstract layer `layer` at the current placement.
    Computational { layer: usize },
    /// Apply disjoint swaps, given as device node pairs.
    Swaps { swaps: Vec<(NodeId, NodeId)> },
}

/// A routed schedule: the abstract circuit, the device, where each abstract
/// qubit starts, and the interleaving of computational layers and swap
/// layers. Device gates are always derived from this rather than stored, so
/// the schedule cannot drift out of sync with its own bookkeeping.
#[derive(Clone, Debug)]
pub struct RoutedCircuit {
    pub abstract_circuit: Circuit,
    pub device: DeviceGraph,
    pub initial_placement: Vec<NodeId>,
    pub items: Vec<RoutedItem>,
}

/// Serializable form of [`RoutedCircuit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoutedCircuitDescription {
    pub abstract_circuit: CircuitDescription,
    pub device: crate::topology::DeviceDescription,
    pub initial_placement: Vec<NodeId>,
    pub items: Vec<RoutedItem>,
}

impl RoutedCircuit {
    pub fn to_description(&self) -> RoutedCircuitDescription {
        RoutedCircuitDescription {
            abstract_circuit: self.abstract_circuit.to_description(),
            device: self.device.to_description(),
            initial_placement: self.initial_placement.clone(),
            items: self.items.clone(),
        }
    }

    pub fn from_description(desc: RoutedCircuitDescription) -> Result<Self, RouterError> {
        Ok(RoutedCircuit {
            abstract_circuit: Circuit::from_description(desc.abstract_circuit)
                .map_err(RouterError::Circuit)?,
            device: DeviceGraph::from_description(desc.device).map_err(RouterError::Topology)?,
            initial_placement: desc.initial_placement,
            items: desc.items,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouterError {
    #[error("placement maps qubit {qubit} to nonexistent node {node}")]
    PlacementNodeOutOfRange { qubit: usize, node: NodeId },
    #[error("placement maps qubits {first} and {second} both to node {node}")]
    PlacementCollision {
        node: NodeId,
        first: usize,
        second: usize,
    },
    #[error("placement covers {placed} qubits but the circuit has {expected}")]
    PlacementSizeMismatch { placed: usize, expected: usize },
    #[error("qubits {0} and {1} are on disconnected device components")]
    Disconnected(usize, usize),
    #[error("no allowed swap makes progress before layer {layer}")]
    Stuck { layer: usize },
    #[error("exceeded {limit} swap layers before layer {layer}")]
    SwapBudgetExceeded { layer: usize, limit: usize },
    #[error(transparent)]
    Circuit(CircuitError),
    #[error(transparent)]
    Topology(TopologyError),
}

/// Router tuning knobs.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RouterConfig {
    /// How many upcoming computational layers contribute distance terms to
    /// the objective. 1 means only the imminent layer.
    pub lookahead: usize,
    /// Safety bound on swap layers inserted before a single computational
    /// layer; exceeding it is reported as an error instead of livelocking.
    pub max_swap_layers_per_gap: usize,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            lookahead: 1,
            max_swap_layers_per_gap: 64,
        }
    }
}

/// Unordered abstract qubit pair.
fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Two-qubit gate partners of one abstract layer.
fn layer_pairs(layer: &Layer) -> Vec<(usize, usize)> {
    layer
        .gates()
        .iter()
        .filter_map(|g| match *g {
            Gate::Cnot { control, target } => Some(pair_key(control, target)),
            _ => None,
        })
        .collect()
}

/// Routes `circuit` onto `device` starting from `initial`, inserting
/// error-pattern-preserving swap layers so that every two-qubit gate acts on
/// adjacent nodes when its layer executes.
pub fn route(
    circuit: &Circuit,
    device: &DeviceGraph,
    initial: Vec<NodeId>,
    config: &RouterConfig,
) -> Result<RoutedCircuit, RouterError> {
    if initial.len() != circuit.num_qubits() {
        return Err(RouterError::PlacementSizeMismatch {
            placed: initial.len(),
            expected: circuit.num_qubits(),
        });
    }
    let mut placement = Placement::new(initial.clone(), device.num_nodes())?;
    let distances = device.all_pairs_distances();
    let all_pairs: Vec<Vec<(usize, usize)>> =
        circuit.layers().iter().map(layer_pairs).collect();

    let mut items = Vec::new();
    for (k, pairs) in all_pairs.iter().enumerate() {
        // Pairs the objective tracks: this layer plus lookahead.
        let scope: Vec<(usize, usize)> = all_pairs[k..circuit.num_layers().min(k + config.lookahead)]
            .iter()
            .flatten()
            .copied()
            .collect();
        // Type-2 swaps in this gap may pair partners of the previous or the
        // imminent computational layer.
        let mut allowed_type2: HashSet<(usize, usize)> = pairs.iter().copied().collect();
        if k > 0 {
            allowed_type2.extend(all_pairs[k - 1].iter().copied());
        }

        for &(a, b) in pairs {
            if distances
                .get(placement.node_of(a), placement.node_of(b))
                .is_none()
            {
                return Err(RouterError::Disconnected(a, b));
            }
        }

        let mut inserted = 0usize;
        while !satisfied(pairs, &placement, &distances) {
            let swaps = build_swap_layer(
                device,
                &distances,
                &mut placement,
                &scope,
                pairs,
                &allowed_type2,
            );
            let swaps = match swaps {
                Some(s) => s,
                None => return Err(RouterError::Stuck { layer: k }),
            };
            items.push(RoutedItem::Swaps { swaps });
            inserted += 1;
            if inserted > config.max_swap_layers_per_gap {
                return Err(RouterError::SwapBudgetExceeded {
                    layer: k,
                    limit: config.max_swap_layers_per_gap,
                });
            }
        }
        items.push(RoutedItem::Computational { layer: k });
    }

    Ok(RoutedCircuit {
        abstract_circuit: circuit.clone(),
        device: device.clone(),
        initial_placement: initial,
        items,
    })
}

fn satisfied(pairs: &[(usize, usize)], placement: &Placement, d: &DistanceMatrix) -> bool {
    pairs
        .iter()
        .all(|&(a, b)| d.dist(placement.node_of(a), placement.node_of(b)) <= 1)
}

fn objective(scope: &[(usize, usize)], placement: &Placement, d: &DistanceMatrix) -> u64 {
    scope
        .iter()
        .map(|&(a, b)| u64::from(d.dist(placement.node_of(a), placement.node_of(b))))
        .sum()
}

/// Builds one swap layer greedily: repeatedly commit the allowed swap with
/// the largest strict decrease of the objective (ties to the lowest edge id)
/// among swaps disjoint from those already committed. If no swap strictly
/// decreases the objective, falls back to the lowest-id allowed swap that
/// strictly shortens at least one unsatisfied imminent pair. Returns `None`
/// when even the fallback finds nothing; the layer is applied to `placement`
/// as it is built.
fn build_swap_layer(
    device: &DeviceGraph,
    d: &DistanceMatrix,
    placement: &mut Placement,
    scope: &[(usize, usize)],
    imminent: &[(usize, usize)],
    allowed_type2: &HashSet<(usize, usize)>,
) -> Option<Vec<(NodeId, NodeId)>> {
    let swap_allowed = |placement: &Placement, a: NodeId, b: NodeId| {
        match (placement.qubit_at(a), placement.qubit_at(b)) {
            (None, None) => false,
            (Some(_), None) | (None, Some(_)) => true,
            (Some(qa), Some(qb)) => allowed_type2.contains(&pair_key(qa, qb)),
        }
    };

    let mut used: HashSet<NodeId> = HashSet::new();
    let mut committed: Vec<(NodeId, NodeId)> = Vec::new();
    loop {
        let before = objective(scope, placement, d);
        let mut best: Option<(u64, usize)> = None; // (objective after, edge id)
        for (eid, &(a, b)) in device.edges().iter().enumerate() {
            if used.contains(&a) || used.contains(&b) || !swap_allowed(placement, a, b) {
                continue;
            }
            placement.swap_nodes(a, b);
            let after = objective(scope, placement, d);
            placement.swap_nodes(a, b);
            if after < before && best.map_or(true, |(ba, be)| (after, eid) < (ba, be)) {
                best = Some((after, eid));
            }
        }
        match best {
            Some((_, eid)) => {
                let (a, b) = device.edge_endpoints(eid);
                placement.swap_nodes(a, b);
                used.insert(a);
                used.insert(b);
                committed.push((a, b));
            }
            None => break,
        }
    }
    if !committed.is_empty() {
        return Some(committed);
    }

    // Fallback: a single swap that shortens some unsatisfied imminent pair.
    for (eid, &(a, b)) in device.edges().iter().enumerate() {
        let _ = eid;
        if !swap_allowed(placement, a, b) {
            continue;
        }
        let shortens = imminent.iter().any(|&(qa, qb)| {
            let before = d.dist(placement.node_of(qa), placement.node_of(qb));
            if before <= 1 {
                return false;
            }
            placement.swap_nodes(a, b);
            let after = d.dist(placement.node_of(qa), placement.node_of(qb));
            placement.swap_nodes(a, b);
            after < before
        });
        if shortens {
            placement.swap_nodes(a, b);
            return Some(vec![(a, b)]);
        }
    }
    None
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertifyError {
    #[error("invalid placement: {0}")]
    Placement(Box<RouterError>),
    #[error("items execute abstract layer {found} where {expected} was due")]
    LayerOutOfOrder { found: usize, expected: usize },
    #[error("items cover {covered} of {expected} abstract layers")]
    LayerCoverage { covered: usize, expected: usize },
    #[error("two-qubit gate {gate} of layer {layer} acts on non-adjacent nodes {a} and {b}")]
    NonAdjacentGate {
        layer: usize,
        gate: usize,
        a: NodeId,
        b: NodeId,
    },
    #[error("swap on non-adjacent nodes {a} and {b}")]
    NonAdjacentSwap { a: NodeId, b: NodeId },
    #[error("swap layer touches node {node} twice")]
    OverlappingSwaps { node: NodeId },
    #[error("swap between two routing qubits {a} and {b}")]
    RoutingRoutingSwap { a: NodeId, b: NodeId },
    #[error("type-2 swap of abstract qubits {qa} and {qb} without a shared flanking gate")]
    UnjustifiedType2 { qa: usize, qb: usize },
}

/// Structural summary of a certified schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub swap_layers: usize,
    pub swap_runs: usize,
    pub type1_swaps: usize,
    pub type2_swaps: usize,
    /// Total two-qubit gates across all computational layers.
    pub two_qubit_gates: usize,
}

impl CertifyReport {
    /// Mean type-1 swaps per interaction leg.
    pub fn mean_type1_per_leg(&self) -> f64 {
        self.type1_swaps as f64 / (2.0 * self.two_qubit_gates as f64)
    }

    /// Mean type-2 swaps per interaction.
    pub fn mean_type2(&self) -> f64 {
        self.type2_swaps as f64 / self.two_qubit_gates as f64
    }
}

/// Validates a routed schedule independently of how it was built: layer
/// order and coverage, gate and swap adjacency, swap disjointness, and the
/// error-pattern-preservation rules for every swap. Returns counts used by
/// the effective-noise accounting.
pub fn certify(routed: &RoutedCircuit) -> Result<CertifyReport, CertifyError> {
    let abstract_pairs: Vec<Vec<(usize, usize)>> = routed
        .abstract_circuit
        .layers()
        .iter()
        .map(layer_pairs)
        .collect();
    let mut placement = Placement::new(
        routed.initial_placement.clone(),
        routed.device.num_nodes(),
    )
    .map_err(|e| CertifyError::Placement(Box::new(e)))?;
    if routed.initial_placement.len() != routed.abstract_circuit.num_qubits() {
        return Err(CertifyError::Placement(Box::new(
            RouterError::PlacementSizeMismatch {
                placed: routed.initial_placement.len(),
                expected: routed.abstract_circuit.num_qubits(),
            },
        )));
    }

    // The flanking computational layers of each item's swap run, for type-2
    // legality: nearest Computational item before and after the run.
    let mut next_comp_layer = vec![None; routed.items.len()];
    let mut upcoming = None;
    for (i, item) in routed.items.iter().enumerate().rev() {
        if let RoutedItem::Computational { layer } = item {
            upcoming = Some(*layer);
        }
        next_comp_layer[i] = upcoming;
    }

    let mut report = CertifyReport::default();
    let mut expected_layer = 0usize;
    let mut prev_comp_layer: Option<usize> = None;
    let mut in_run = false;
    for (i, item) in routed.items.iter().enumerate() {
        match item {
            RoutedItem::Computational { layer } => {
                if *layer != expected_layer {
                    return Err(CertifyError::LayerOutOfOrder {
                        found: *layer,
                        expected: expected_layer,
                    });
                }
                expected_layer += 1;
                let gates = routed.abstract_circuit.layers()[*layer].gates();
                for (g, gate) in gates.iter().enumerate() {
                    if let Gate::Cnot { control, target } = gate {
                        let (a, b) = (placement.node_of(*control), placement.node_of(*target));
                        if !routed.device.are_adjacent(a, b) {
                            return Err(CertifyError::NonAdjacentGate {
                                layer: *layer,
                                gate: g,
                                a,
                                b,
                            });
                        }
                        report.two_qubit_gates += 1;
                    }
                }
                prev_comp_layer = Some(*layer);
                in_run = false;
            }
            RoutedItem::Swaps { swaps } => {
                if !in_run {
                    report.swap_runs += 1;
                    in_run = true;
                }
                report.swap_layers += 1;
                let mut touched = HashSet::new();
                let mut flanking: HashSet<(usize, usize)> = HashSet::new();
                if let Some(l) = prev_comp_layer {
                    flanking.extend(abstract_pairs[l].iter().copied());
                }
                if let Some(l) = next_comp_layer[i] {
                    flanking.extend(abstract_pairs[l].iter().copied());
                }
                for &(a, b) in swaps {
                    if !routed.device.are_adjacent(a, b) {
                        return Err(CertifyError::NonAdjacentSwap { a, b });
                    }
                    for n in [a, b] {
                        if !touched.insert(n) {
                            return Err(CertifyError::OverlappingSwaps { node: n });
                        }
                    }
                    match (placement.qubit_at(a), placement.qubit_at(b)) {
                        (None, None) => {
                            return Err(CertifyError::RoutingRoutingSwap { a, b });
                        }
                        (Some(_), None) | (None, Some(_)) => report.type1_swaps += 1,
                        (Some(qa), Some(qb)) => {
                            if !flanking.contains(&pair_key(qa, qb)) {
                                return Err(CertifyError::UnjustifiedType2 { qa, qb });
                            }
                            report.type2_swaps += 1;
                        }
                    }
                }
                for &(a, b) in swaps {
                    placement.swap_nodes(a, b);
                }
            }
        }
    }
    if expected_layer != routed.abstract_circuit.num_layers() {
        return Err(CertifyError::LayerCoverage {
            covered: expected_layer,
            expected: routed.abstract_circuit.num_layers(),
        });
    }
    Ok(report)
}

/// Where a lowered gate came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum GateOrigin {
    Computational,
    /// `swap` is a running swap index, `leg` the position in its CNOT triple.
    Swap { swap: usize, leg: u8 },
}

/// A routed schedule flattened to a plain device circuit.
#[derive(Clone, Debug)]
pub struct LoweredSchedule {
    pub circuit: Circuit,
    pub stats: LoweringStats,
}

/// Swap decomposition accounting of a lowering.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoweringStats {
    /// Net CNOTs each swap adds relative to the abstract circuit: surviving
    /// decomposition legs minus computational CNOTs its legs absorbed. A
    /// plain swap costs 3; the standard interacting-pair cancellation costs
    /// 1; pathological schedules can even go negative when a swap collapses
    /// repeated abstract gates.
    pub extra_cnots_per_swap: Vec<i32>,
    /// Computational CNOTs removed by cancellation.
    pub cancelled_computational: usize,
    /// Two-qubit gate timesteps of the lowered circuit.
    pub two_qubit_depth: usize,
}

impl LoweringStats {
    /// True when every swap cost the same CNOT overhead; that common count
    /// times the base fault probability is the per-swap fault strength.
    pub fn uniform_extra_cnots(&self) -> Option<i32> {
        let first = *self.extra_cnots_per_swap.first()?;
        self.extra_cnots_per_swap
            .iter()
            .all(|&c| c == first)
            .then_some(first)
    }
}

/// Flattens a routed schedule into a device circuit.
///
/// Swaps become CNOT triples oriented to meet any cancellation partner: a
/// computational CNOT on the same node pair in the immediately adjacent
/// timestep annihilates against the facing decomposition CNOT, which is what
/// makes a type-2 swap of an interacting pair cost one extra CNOT instead of
/// three. The cancellation pass only ever removes an adjacent identical CNOT
/// pair in which at least one side comes from a swap, so abstract gate
/// structure is never touched.
pub fn lower(routed: &RoutedCircuit) -> Result<LoweredSchedule, CertifyError> {
    certify(routed)?;
    let num_nodes = routed.device.num_nodes();
    let mut placement = Placement::new(routed.initial_placement.clone(), num_nodes)
        .map_err(|e| CertifyError::Placement(Box::new(e)))?;

    // Emit the naive stream: layers of (gate, origin).
    let mut layers: Vec<Vec<(Gate, GateOrigin)>> = Vec::new();
    let mut swap_count = 0usize;

    // Pre-compute, for each Swaps item, whether it is first/last of its run
    // and which computational layers flank the run.
    let mut next_comp = vec![None; routed.items.len()];
    let mut upcoming = None;
    for (i, item) in routed.items.iter().enumerate().rev() {
        if let RoutedItem::Computational { layer } = item {
            upcoming = Some(*layer);
        }
        next_comp[i] = upcoming;
    }

    for (i, item) in routed.items.iter().enumerate() {
        match item {
            RoutedItem::Computational { layer } => {
                let gates = routed.abstract_circuit.layers()[*layer]
                    .gates()
                    .iter()
                    .map(|g| {
                        let mapped = match *g {
                            Gate::PrepZ { q } => Gate::prep_z(placement.node_of(q)),
                            Gate::MeasZ { q } => Gate::meas_z(placement.node_of(q)),
                            Gate::H { q } => Gate::h(placement.node_of(q)),
                            Gate::Cnot { control, target } => {
                                Gate::cnot(placement.node_of(control), placement.node_of(target))
                            }
                        };
                        (mapped, GateOrigin::Computational)
                    })
                    .collect::<Vec<_>>();
                layers.push(gates);
            }
            RoutedItem::Swaps { swaps } => {
                let first_of_run = !matches!(
                    i.checked_sub(1).map(|j| &routed.items[j]),
                    Some(RoutedItem::Swaps { .. })
                );
                let last_of_run = !matches!(
                    routed.items.get(i + 1),
                    Some(RoutedItem::Swaps { .. })
                );
                // Decomposition orientation per swap: match a flanking
                // computational CNOT on the same pair when adjacency makes
                // cancellation possible; otherwise control = lower node id.
                let mut triple_layers: [Vec<(Gate, GateOrigin)>; 3] = Default::default();
                for &(a, b) in swaps {
                    let orientation = swap_orientation(
                        routed,
                        &placement,
                        (a, b),
                        first_of_run.then(|| prev_comp_of(routed, i)).flatten(),
                        if last_of_run { next_comp[i] } else { None },
                    );
                    let (u, v) = orientation;
                    let id = swap_count;
                    swap_count += 1;
                    triple_layers[0].push((Gate::cnot(u, v), GateOrigin::Swap { swap: id, leg: 0 }));
                    triple_layers[1].push((Gate::cnot(v, u), GateOrigin::Swap { swap: id, leg: 1 }));
                    triple_layers[2].push((Gate::cnot(u, v), GateOrigin::Swap { swap: id, leg: 2 }));
                    placement.swap_nodes(a, b);
                }
                layers.extend(triple_layers);
            }
        }
    }

    // Cancellation: remove adjacent identical CNOT pairs (same ordered node
    // pair, no intervening gate on either node, at least one side swap-born).
    // Removing a pair can make an older identical pair adjacent, so iterate
    // to a fixed point; every removal is an exact CNOT * CNOT = identity.
    let mut removed: Vec<Vec<bool>> = layers.iter().map(|l| vec![false; l.len()]).collect();
    let mut removed_pairs: Vec<((usize, usize), (usize, usize))> = Vec::new();
    loop {
        let mut changed = false;
        // last_seen[node] = (layer, index) of the latest surviving gate.
        let mut last_seen: Vec<Option<(usize, usize)>> = vec![None; num_nodes];
        for li in 0..layers.len() {
            for gi in 0..layers[li].len() {
                if removed[li][gi] {
                    continue;
                }
                let (gate, origin) = layers[li][gi];
                if let Gate::Cnot { control, target } = gate {
                    if let (Some(pc), Some(pt)) = (last_seen[control], last_seen[target]) {
                        if pc == pt && !removed[pc.0][pc.1] {
                            let (prev_gate, prev_origin) = layers[pc.0][pc.1];
                            let swap_born = matches!(origin, GateOrigin::Swap { .. })
                                || matches!(prev_origin, GateOrigin::Swap { .. });
                            if prev_gate == gate && swap_born {
                                removed[pc.0][pc.1] = true;
                                removed[li][gi] = true;
                                removed_pairs.push((pc, (li, gi)));
                                changed = true;
                                // Fall through; last_seen keeps the older
                                // entries, rediscovered next pass.
                            }
                        }
                    }
                }
                if !removed[li][gi] {
                    let (q1, q2) = gate.qubits();
                    last_seen[q1] = Some((li, gi));
                    if let Some(q2) = q2 {
                        last_seen[q2] = Some((li, gi));
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Stats: net extra CNOTs per swap = surviving legs minus absorbed
    // computational CNOTs.
    let mut extra = vec![3i32; swap_count];
    let mut cancelled_computational = 0usize;
    for &(first, second) in &removed_pairs {
        let origins = [layers[first.0][first.1].1, layers[second.0][second.1].1];
        for o in origins {
            if let GateOrigin::Swap { swap, .. } = o {
                extra[swap] -= 1;
            }
        }
        match origins {
            [GateOrigin::Computational, GateOrigin::Swap { swap, .. }]
            | [GateOrigin::Swap { swap, .. }, GateOrigin::Computational] => {
                cancelled_computational += 1;
                extra[swap] -= 1;
            }
            _ => {}
        }
    }

    // Pack: fold a layer into its predecessor when the two act on disjoint
    // qubits, reusing slots freed by cancellation. Whole-layer moves keep
    // per-qubit gate order and the measurement stream intact.
    let mut packed: Vec<Vec<Gate>> = layers
        .iter()
        .enumerate()
        .map(|(li, layer)| {
            layer
                .iter()
                .enumerate()
                .filter(|(gi, _)| !removed[li][*gi])
                .map(|(_, &(g, _))| g)
                .collect::<Vec<Gate>>()
        })
        .filter(|l| !l.is_empty())
        .collect();
    let mut i = 1;
    while i < packed.len() {
        let mut used = vec![false; num_nodes];
        for g in &packed[i - 1] {
            let (a, b) = g.qubits();
            used[a] = true;
            if let Some(b) = b {
                used[b] = true;
            }
        }
        let disjoint = packed[i].iter().all(|g| {
            let (a, b) = g.qubits();
            !used[a] && b.is_none_or(|b| !used[b])
        });
        if disjoint {
            let moved = packed.remove(i);
            packed[i - 1].extend(moved);
        } else {
            i += 1;
        }
    }
    let mut circuit = Circuit::new(num_nodes);
    for gates in packed {
        circuit
            .push_gates(gates)
            .expect("disjointness survives lowering");
    }
    let two_qubit_depth = circuit.two_qubit_depth();
    Ok(LoweredSchedule {
        circuit,
        stats: LoweringStats {
            extra_cnots_per_swap: extra,
            cancelled_computational,
            two_qubit_depth,
        },
    })
}

fn prev_comp_of(routed: &RoutedCircuit, item: usize) -> Option<usize> {
    routed.items[..item].iter().rev().find_map(|it| match it {
        RoutedItem::Computational { layer } => Some(*layer),
        _ => None,
    })
}

/// Chooses (control, target) for a swap's CNOT triple. If a flanking
/// computational layer contains a CNOT on this exact device pair (evaluated
/// at the right placement time), orient to face it so cancellation fires.
fn swap_orientation(
    routed: &RoutedCircuit,
    placement: &Placement,
    (a, b): (NodeId, NodeId),
    prev_layer: Option<usize>,
    next_layer: Option<usize>,
) -> (NodeId, NodeId) {
    let find_pair = |layer: usize, pa: NodeId, pb: NodeId, map: &dyn Fn(usize) -> NodeId| {
        routed.abstract_circuit.layers()[layer]
            .gates()
            .iter()
            .find_map(|g| match *g {
                Gate::Cnot { control, target } => {
                    let (c, t) = (map(control), map(target));
                    ((c, t) == (pa, pb) || (c, t) == (pb, pa)).then_some((c, t))
                }
                _ => None,
            })
    };
    // Before the swap: current placement maps the previous layer's gates.
    if let Some(l) = prev_layer {
        if let Some((c, t)) = find_pair(l, a, b, &|q| placement.node_of(q)) {
            return (c, t);
        }
    }
    // After the swap: the two nodes exchange contents.
    if let Some(l) = next_layer {
        let post = |q: usize| {
            let n = placement.node_of(q);
            if n == a {
                b
            } else if n == b {
                a
            } else {
                n
            }
        };
        if let Some((c, t)) = find_pair(l, a, b, &post) {
            return (c, t);
        }
    }
    (a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Coord;
    use proptest::prelude::*;

    fn path_device(n: i64) -> DeviceGraph {
        let coords: Vec<Coord> = (0..n).map(|x| Coord::new(x, 0)).collect();
        let edges = (0..n - 1)
            .map(|x| (Coord::new(x, 0), Coord::new(x + 1, 0)))
            .collect();
        DeviceGraph::from_parts(coords, edges).unwrap()
    }

    #[test]
    fn distant_pair_routes_with_type1_swaps() {
        let device = path_device(4);
        let mut circuit = Circuit::new(2);
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        let routed = route(&circuit, &device, vec![0, 3], &RouterConfig::default()).unwrap();
        let report = certify(&routed).unwrap();
        assert_eq!(report.type2_swaps, 0);
        assert!(report.type1_swaps >= 2);
        // Both qubits can step inward simultaneously, so one layer suffices.
        assert_eq!(report.swap_layers, 1);
    }

    #[test]
    fn type2_swap_used_when_no_routing_qubits_exist() {
        let device = path_device(3);
        let mut circuit = Circuit::new(3);
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        circuit.push_gates(vec![Gate::cnot(0, 2)]).unwrap();
        let routed = route(&circuit, &device, vec![0, 1, 2], &RouterConfig::default()).unwrap();
        let report = certify(&routed).unwrap();
        assert_eq!(report.type1_swaps, 0);
        assert_eq!(report.type2_swaps, 1);
        assert_eq!(report.two_qubit_gates, 2);

        // The type-2 swap pair interacts in the layer before it, so the
        // facing CNOTs cancel: one extra CNOT, device depth 3.
        let lowered = lower(&routed).unwrap();
        assert_eq!(lowered.stats.extra_cnots_per_swap, vec![1]);
        assert_eq!(lowered.stats.cancelled_computational, 1);
        assert_eq!(lowered.stats.two_qubit_depth, 3);
    }

    #[test]
    fn plain_swap_costs_three_cnots() {
        let device = path_device(4);
        let mut circuit = Circuit::new(2);
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        let routed = route(&circuit, &device, vec![0, 3], &RouterConfig::default()).unwrap();
        let lowered = lower(&routed).unwrap();
        // Type-1 swaps have no cancellation partner.
        assert!(lowered
            .stats
            .extra_cnots_per_swap
            .iter()
            .all(|&c| c == 3));
        assert_eq!(lowered.stats.cancelled_computational, 0);
    }

    #[test]
    fn disconnected_pair_is_an_error() {
        let coords = vec![Coord::new(0, 0), Coord::new(5, 5)];
        let device = DeviceGraph::from_parts(coords, vec![]).unwrap();
        let mut circuit = Circuit::new(2);
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        let err = route(&circuit, &device, vec![0, 1], &RouterConfig::default()).unwrap_err();
        assert_eq!(err, RouterError::Disconnected(0, 1));
    }

    #[test]
    fn router_rejects_stuck_instances() {
        // Three computational qubits on a path, but the distant pair never
        // shares a gate with its blocker, so no legal swap helps.
        let device = path_device(3);
        let mut circuit = Circuit::new(3);
        circuit.push_gates(vec![Gate::cnot(0, 2)]).unwrap();
        let err = route(&circuit, &device, vec![0, 1, 2], &RouterConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            RouterError::Stuck { layer: 0 } | RouterError::SwapBudgetExceeded { layer: 0, .. }
        ));
    }

    #[test]
    fn certify_rejects_tampered_schedules() {
        let device = path_device(4);
        let mut circuit = Circuit::new(2);
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        let routed = route(&circuit, &device, vec![0, 3], &RouterConfig::default()).unwrap();

        // Routing-routing swap.
        let mut bad = routed.clone();
        bad.items.insert(
            0,
            RoutedItem::Swaps {
                swaps: vec![(1, 2)],
            },
        );
        assert_eq!(
            certify(&bad).unwrap_err(),
            CertifyError::RoutingRoutingSwap { a: 1, b: 2 }
        );

        // Non-adjacent swap.
        let mut bad = routed.clone();
        bad.items.insert(
            0,
            RoutedItem::Swaps {
                swaps: vec![(0, 3)],
            },
        );
        assert_eq!(
            certify(&bad).unwrap_err(),
            CertifyError::NonAdjacentSwap { a: 0, b: 3 }
        );

        // Unjustified type-2: make both qubits adjacent computational and
        // swap them with no shared gate anywhere nearby.
        let mut circuit2 = Circuit::new(2);
        circuit2.push_gates(vec![Gate::h(0), Gate::h(1)]).unwrap();
        let bad = RoutedCircuit {
            abstract_circuit: circuit2,
            device: path_device(2),
            initial_placement: vec![0, 1],
            items: vec![
                RoutedItem::Swaps {
                    swaps: vec![(0, 1)],
                },
                RoutedItem::Computational { layer: 0 },
            ],
        };
        assert_eq!(
            certify(&bad).unwrap_err(),
            CertifyError::UnjustifiedType2 { qa: 0, qb: 1 }
        );

        // Missing layer coverage.
        let mut bad = routed.clone();
        bad.items.pop();
        assert_eq!(
            certify(&bad).unwrap_err(),
            CertifyError::LayerCoverage {
                covered: 0,
                expected: 1
            }
        );
    }

    #[test]
    fn description_round_trip() {
        let device = path_device(4);
        let mut circuit = Circuit::new(2);
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        let routed = route(&circuit, &device, vec![0, 3], &RouterConfig::default()).unwrap();
        let json = serde_json::to_string(&routed.to_description()).unwrap();
        let back = RoutedCircuit::from_description(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.items, routed.items);
        assert_eq!(back.initial_placement, routed.initial_placement);
        certify(&back).unwrap();
    }

    #[test]
    fn lowering_preserves_measurement_count_and_maps_qubits() {
        let device = path_device(5);
        let mut circuit = Circuit::new(2);
        circuit.push_gates(vec![Gate::prep_z(0), Gate::prep_z(1)]).unwrap();
        circuit.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        circuit.push_gates(vec![Gate::meas_z(0), Gate::meas_z(1)]).unwrap();
        let routed = route(&circuit, &device, vec![0, 4], &RouterConfig::default()).unwrap();
        let lowered = lower(&routed).unwrap();
        assert_eq!(lowered.circuit.num_measurements(), 2);
        assert_eq!(lowered.circuit.num_qubits(), 5);
        // Measurement emission order follows the abstract layer's order.
        let meas: Vec<usize> = lowered.circuit.measurements().map(|(_, q)| q).collect();
        assert_eq!(meas.len(), 2);
        assert_ne!(meas[0], meas[1]);
    }

    proptest! {
        // Whatever the router emits must certify, and lowering must keep
        // swap accounting consistent with the certification report.
        #[test]
        fn routed_output_always_certifies(
            n_qubits in 2usize..5,
            device_len in 4i64..8,
            layer_picks in proptest::collection::vec((0usize..4, 0usize..4), 1..5),
        ) {
            let device = path_device(device_len);
            let mut circuit = Circuit::new(n_qubits);
            for (a, b) in layer_picks {
                let (a, b) = (a % n_qubits, b % n_qubits);
                if a != b {
                    circuit.push_gates(vec![Gate::cnot(a, b)]).unwrap();
                }
            }
            prop_assume!(circuit.num_layers() > 0);
            // Spread the qubits out across the path.
            let initial: Vec<NodeId> = (0..n_qubits)
                .map(|q| q * (device_len as usize - 1) / (n_qubits - 1).max(1))
                .collect();
            let mut uniq = initial.clone();
            uniq.dedup();
            prop_assume!(uniq.len() == initial.len());

            match route(&circuit, &device, initial, &RouterConfig::default()) {
                Ok(routed) => {
                    let report = certify(&routed).expect("router output certifies");
                    let lowered = lower(&routed).expect("router output lowers");
                    prop_assert_eq!(
                        lowered.stats.extra_cnots_per_swap.len(),
                        report.type1_swaps + report.type2_swaps
                    );
                    // Conservation: device CNOTs = abstract CNOTs plus the
                    // summed net extras of all swaps.
                    let device_cnots = lowered
                        .circuit
                        .gates()
                        .filter(|g| g.is_two_qubit())
                        .count() as i64;
                    let net: i64 = lowered
                        .stats
                        .extra_cnots_per_swap
                        .iter()
                        .map(|&c| i64::from(c))
                        .sum();
                    prop_assert_eq!(device_cnots, report.two_qubit_gates as i64 + net);
                }
                Err(RouterError::Stuck { .. } | RouterError::SwapBudgetExceeded { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(format!("unexpected {e}"))),
            }
        }
    }
}
