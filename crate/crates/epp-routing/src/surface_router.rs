//! Rotated surface-code patches and the periodic schedules that run them on
//! degree-limited hardware.
//!
//! The code is laid out on an interleaved integer grid in which data and
//! ancilla qubits alternate by coordinate parity and every plaquette corner is
//! one unit step away from its ancilla. A syndrome-extraction round is four
//! CNOT layers bracketed by ancilla preparation, basis changes, and readout;
//! [`ScheduleVariant`] fixes the CNOT directions. On hardware, a round is
//! realised by tiling one [`CellSchedule`]: a short, translation-invariant
//! program of swap layers interleaved with the CNOT layers, found once per
//! lattice by [`search_cell_schedule`] and shipped as a data file.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, Layer};
use crate::sim::{DetectorClass, DetectorMap, DetectorSpec};
use crate::topology::{Coord, DeviceGraph, LatticeKind, TopologyError};

/// The four sublattices of the interleaved grid, distinguished by coordinate
/// parity. Data qubits split into two sublattices because a periodic schedule
/// moves each sublattice as a rigid unit; ancillas split by stabilizer type.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Species {
    XData,
    ZData,
    XAncilla,
    ZAncilla,
}

impl Species {
    pub const ALL: [Species; 4] = [
        Species::XData,
        Species::ZData,
        Species::XAncilla,
        Species::ZAncilla,
    ];

    pub fn index(self) -> usize {
        match self {
            Species::XData => 0,
            Species::ZData => 1,
            Species::XAncilla => 2,
            Species::ZAncilla => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::XData => "x_data",
            Species::ZData => "z_data",
            Species::XAncilla => "x_ancilla",
            Species::ZAncilla => "z_ancilla",
        }
    }

    pub fn is_data(self) -> bool {
        matches!(self, Species::XData | Species::ZData)
    }

    pub fn is_ancilla(self) -> bool {
        !self.is_data()
    }

    /// Representative position inside the 2x2 grid cell.
    pub fn cell_offset(self) -> Coord {
        match self {
            Species::XData => Coord::new(0, 0),
            Species::ZData => Coord::new(1, 1),
            Species::XAncilla => Coord::new(1, 0),
            Species::ZAncilla => Coord::new(0, 1),
        }
    }

    /// Which sublattice a grid coordinate belongs to.
    pub fn of_grid(c: Coord) -> Species {
        match (c.x.rem_euclid(2), c.y.rem_euclid(2)) {
            (0, 0) => Species::XData,
            (1, 1) => Species::ZData,
            (1, 0) => Species::XAncilla,
            _ => Species::ZAncilla,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Stabilizer type measured by an ancilla.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StabKind {
    X,
    Z,
}

/// What an abstract qubit of the patch does.
#[derive(Clone, Debug)]
pub enum CodeRole {
    Data {
        row: i64,
        col: i64,
    },
    Ancilla {
        stab: StabKind,
        /// Abstract ids of the data qubits in this plaquette.
        support: Vec<usize>,
    },
}

/// One abstract qubit of the patch.
#[derive(Clone, Debug)]
pub struct CodeSite {
    pub grid: Coord,
    pub role: CodeRole,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum SurfaceCodeError {
    #[error("code distance must be at least 2, got {0}")]
    DistanceTooSmall(usize),
}

/// Distance-d rotated surface code on the interleaved grid.
///
/// Data qubit (row, col) sits at grid position (row + col, col - row); the
/// ancilla of the plaquette whose top-left data corner is (row, col) sits one
/// step further along the row diagonal. Abstract qubit ids follow (y, x) order
/// of the grid positions.
#[derive(Debug)]
pub struct SurfaceCode {
    distance: usize,
    sites: Vec<CodeSite>,
    index: HashMap<Coord, usize>,
    data_ids: Vec<usize>,
    ancilla_ids: Vec<usize>,
}

impl SurfaceCode {
    pub fn new(distance: usize) -> Result<Self, SurfaceCodeError> {
        if distance < 2 {
            return Err(SurfaceCodeError::DistanceTooSmall(distance));
        }
        let d = distance as i64;
        let mut raw: Vec<(Coord, CodeRole)> = Vec::new();
        for row in 0..d {
            for col in 0..d {
                let grid = Coord::new(row + col, col - row);
                raw.push((grid, CodeRole::Data { row, col }));
            }
        }
        // Plaquettes are indexed by their lowest (row, col) data corner.
        for prow in -1..d {
            for pcol in -1..d {
                let corners = [(0, 0), (1, 0), (0, 1), (1, 1)]
                    .iter()
                    .filter(|(dr, dc)| {
                        let (r, c) = (prow + dr, pcol + dc);
                        (0..d).contains(&r) && (0..d).contains(&c)
                    })
                    .count();
                let stab = if (prow + pcol).rem_euclid(2) == 0 {
                    StabKind::X
                } else {
                    StabKind::Z
                };
                let keep = match corners {
                    4 => true,
                    2 => match stab {
                        StabKind::X => prow == -1 || prow == d - 1,
                        StabKind::Z => pcol == -1 || pcol == d - 1,
                    },
                    _ => false,
                };
                if keep {
                    let grid = Coord::new(prow + pcol + 1, pcol - prow);
                    raw.push((
                        grid,
                        CodeRole::Ancilla {
                            stab,
                            support: Vec::new(),
                        },
                    ));
                }
            }
        }
        raw.sort_by_key(|(g, _)| (g.y, g.x));
        let index: HashMap<Coord, usize> = raw.iter().enumerate().map(|(i, (g, _))| (*g, i)).collect();
        let mut sites: Vec<CodeSite> = raw
            .into_iter()
            .map(|(grid, role)| CodeSite { grid, role })
            .collect();
        for i in 0..sites.len() {
            let grid = sites[i].grid;
            if let CodeRole::Ancilla { support, .. } = &mut sites[i].role {
                *support = [(0, 1), (1, 0), (0, -1), (-1, 0)]
                    .iter()
                    .filter_map(|&(dx, dy)| index.get(&grid.offset(dx, dy)).copied())
                    .collect();
                support.sort_unstable();
            }
        }
        let mut data_ids = Vec::new();
        let mut ancilla_ids = Vec::new();
        for (i, s) in sites.iter().enumerate() {
            debug_assert_eq!(
                Species::of_grid(s.grid).is_data(),
                matches!(s.role, CodeRole::Data { .. })
            );
            match s.role {
                CodeRole::Data { .. } => data_ids.push(i),
                CodeRole::Ancilla { .. } => ancilla_ids.push(i),
            }
        }
        Ok(SurfaceCode {
            distance,
            sites,
            index,
            data_ids,
            ancilla_ids,
        })
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn num_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[CodeSite] {
        &self.sites
    }

    pub fn site(&self, id: usize) -> &CodeSite {
        &self.sites[id]
    }

    pub fn id_at(&self, grid: Coord) -> Option<usize> {
        self.index.get(&grid).copied()
    }

    pub fn species(&self, id: usize) -> Species {
        Species::of_grid(self.sites[id].grid)
    }

    /// Abstract ids of data qubits, ascending.
    pub fn data_ids(&self) -> &[usize] {
        &self.data_ids
    }

    /// Abstract ids of kept ancillas, ascending.
    pub fn ancilla_ids(&self) -> &[usize] {
        &self.ancilla_ids
    }

    /// Data ids of the horizontal logical-Z representative (data row 0).
    pub fn logical_z_data(&self) -> Vec<usize> {
        (0..self.distance as i64)
            .map(|c| self.index[&Coord::new(c, c)])
            .collect()
    }

    /// Data ids of the vertical logical-X representative (data column 0).
    pub fn logical_x_data(&self) -> Vec<usize> {
        (0..self.distance as i64)
            .map(|r| self.index[&Coord::new(r, -r)])
            .collect()
    }
}

/// CNOT direction pattern of the four syndrome-extraction layers.
///
/// The names spell the step axes (horizontal or vertical on the grid). Only
/// patterns whose X and Z orderings agree on every shared data pair measure
/// deterministic stabilizers. In the plain variants the two ancilla species
/// sweep their shared-axis layers in opposite order, which keeps two-qubit
/// ancilla faults off both logical directions; the parallel variants sweep in
/// the same order, trading that protection on one logical for more freedom in
/// where each species can sit during routing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ScheduleVariant {
    Hvvh,
    Vhhv,
    HvvhParallel,
    VhhvParallel,
}

impl ScheduleVariant {
    pub const ALL: [ScheduleVariant; 4] = [
        ScheduleVariant::Hvvh,
        ScheduleVariant::Vhhv,
        ScheduleVariant::HvvhParallel,
        ScheduleVariant::VhhvParallel,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ScheduleVariant::Hvvh => "hvvh",
            ScheduleVariant::Vhhv => "vhhv",
            ScheduleVariant::HvvhParallel => "hvvh-parallel",
            ScheduleVariant::VhhvParallel => "vhhv-parallel",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.token() == s)
    }

    /// Grid step from an ancilla to its data partner in CNOT layer `layer`.
    pub fn data_dir(self, layer: usize, anc: Species) -> Coord {
        const W: Coord = Coord::new(-1, 0);
        const E: Coord = Coord::new(1, 0);
        const N: Coord = Coord::new(0, 1);
        const S: Coord = Coord::new(0, -1);
        debug_assert!(anc.is_ancilla());
        let dirs: [Coord; 4] = match (self, anc) {
            (ScheduleVariant::Hvvh, Species::XAncilla) => [W, N, S, E],
            (ScheduleVariant::Hvvh, _) => [W, S, N, E],
            (ScheduleVariant::Vhhv, Species::XAncilla) => [N, W, E, S],
            (ScheduleVariant::Vhhv, _) => [N, E, W, S],
            (ScheduleVariant::HvvhParallel, _) => [W, N, S, E],
            (ScheduleVariant::VhhvParallel, _) => [N, W, E, S],
        };
        dirs[layer]
    }
}

impl fmt::Display for ScheduleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One translation-invariant CNOT family: every data qubit of `data` species
/// in cell t interacts with the `anc` ancilla of cell t + `anc_cell_offset`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Family {
    pub data: Species,
    pub anc: Species,
    pub anc_cell_offset: Coord,
}

/// The two families making up CNOT layer `layer` of a variant.
pub fn families(variant: ScheduleVariant, layer: usize) -> [Family; 2] {
    let mut out = [Family {
        data: Species::XData,
        anc: Species::XAncilla,
        anc_cell_offset: Coord::new(0, 0),
    }; 2];
    for (slot, anc) in [Species::XAncilla, Species::ZAncilla].into_iter().enumerate() {
        let data_pos = anc.cell_offset().add(variant.data_dir(layer, anc));
        let data = Species::of_grid(data_pos);
        debug_assert!(data.is_data());
        let data_cell = Coord::new(data_pos.x.div_euclid(2), data_pos.y.div_euclid(2));
        out[slot] = Family {
            data,
            anc,
            anc_cell_offset: Coord::new(-data_cell.x, -data_cell.y),
        };
    }
    out
}

/// Gate layers of one syndrome-extraction round, indexed by abstract qubit id
/// of `code`. A mirrored round runs the CNOT layers in reverse order; on
/// hardware this lets consecutive rounds share one self-inverse swap program.
pub fn se_round_gates(code: &SurfaceCode, variant: ScheduleVariant, mirror: bool) -> Vec<Vec<Gate>> {
    let mut layers = Vec::with_capacity(8);
    layers.push(code.ancilla_ids().iter().map(|&a| Gate::prep_z(a)).collect());
    let x_ancillas: Vec<usize> = code
        .ancilla_ids()
        .iter()
        .copied()
        .filter(|&a| code.species(a) == Species::XAncilla)
        .collect();
    layers.push(x_ancillas.iter().map(|&a| Gate::h(a)).collect());
    let order: [usize; 4] = if mirror { [3, 2, 1, 0] } else { [0, 1, 2, 3] };
    for k in order {
        let mut gates = Vec::new();
        for &a in code.ancilla_ids() {
            let anc = code.species(a);
            let partner = code.site(a).grid.add(variant.data_dir(k, anc));
            if let Some(dq) = code.id_at(partner) {
                gates.push(match anc {
                    Species::XAncilla => Gate::cnot(a, dq),
                    _ => Gate::cnot(dq, a),
                });
            }
        }
        layers.push(gates);
    }
    layers.push(x_ancillas.iter().map(|&a| Gate::h(a)).collect());
    layers.push(code.ancilla_ids().iter().map(|&a| Gate::meas_z(a)).collect());
    layers
}

/// Detector and observable definitions for a `rounds`-round Z-basis memory
/// experiment, in terms of measurement indices of the circuit built by
/// [`memory_circuit`]. The same map applies to any device realisation that
/// preserves measurement emission order.
pub fn memory_detector_map(code: &SurfaceCode, rounds: usize) -> DetectorMap {
    let num_anc = code.ancilla_ids().len();
    let anc_rank: HashMap<usize, usize> = code
        .ancilla_ids()
        .iter()
        .enumerate()
        .map(|(rank, &id)| (id, rank))
        .collect();
    let data_rank: HashMap<usize, usize> = code
        .data_ids()
        .iter()
        .enumerate()
        .map(|(rank, &id)| (id, rank))
        .collect();
    let meas = |rank: usize, round: usize| round * num_anc + rank;
    let final_meas = |id: usize| rounds * num_anc + data_rank[&id];

    let mut detectors = Vec::new();
    for round in 0..rounds {
        for &a in code.ancilla_ids() {
            let rank = anc_rank[&a];
            match (code.species(a), round) {
                (Species::ZAncilla, 0) => detectors.push(DetectorSpec {
                    measurements: vec![meas(rank, 0)],
                    class: DetectorClass::Z,
                }),
                (Species::ZAncilla, r) => detectors.push(DetectorSpec {
                    measurements: vec![meas(rank, r - 1), meas(rank, r)],
                    class: DetectorClass::Z,
                }),
                (_, 0) => {}
                (_, r) => detectors.push(DetectorSpec {
                    measurements: vec![meas(rank, r - 1), meas(rank, r)],
                    class: DetectorClass::X,
                }),
            }
        }
    }
    for &a in code.ancilla_ids() {
        if code.species(a) == Species::ZAncilla {
            let mut measurements = vec![meas(anc_rank[&a], rounds - 1)];
            if let CodeRole::Ancilla { support, .. } = &code.site(a).role {
                measurements.extend(support.iter().map(|&d| final_meas(d)));
            }
            detectors.push(DetectorSpec {
                measurements,
                class: DetectorClass::Z,
            });
        }
    }
    let observable = code.logical_z_data().into_iter().map(final_meas).collect();
    DetectorMap {
        detectors,
        observable,
    }
}

/// Abstract circuit of a Z-basis memory experiment: data preparation, `rounds`
/// syndrome-extraction rounds, transversal data readout. With `alternate` set,
/// odd rounds run mirrored, matching the embedded schedule's round structure.
pub fn memory_circuit(
    code: &SurfaceCode,
    variant: ScheduleVariant,
    rounds: usize,
    alternate: bool,
) -> Result<(Circuit, DetectorMap), CircuitError> {
    assert!(rounds >= 1, "memory experiment needs at least one round");
    let mut circuit = Circuit::new(code.num_qubits());
    circuit.push_layer(Layer::new(
        code.data_ids().iter().map(|&q| Gate::prep_z(q)).collect(),
    ))?;
    for round in 0..rounds {
        let mirror = alternate && round % 2 == 1;
        for gates in se_round_gates(code, variant, mirror) {
            circuit.push_layer(Layer::new(gates))?;
        }
    }
    circuit.push_layer(Layer::new(
        code.data_ids().iter().map(|&q| Gate::meas_z(q)).collect(),
    ))?;
    let map = memory_detector_map(code, rounds);
    debug_assert!(map.validate(circuit.num_measurements()).is_ok());
    Ok((circuit, map))
}

/// One species move inside a swap layer of a cell schedule.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CellMove {
    Stay,
    Up,
    Down,
    Left,
    Right,
}

impl CellMove {
    pub const ALL: [CellMove; 5] = [
        CellMove::Stay,
        CellMove::Up,
        CellMove::Down,
        CellMove::Left,
        CellMove::Right,
    ];

    pub fn delta(self) -> Coord {
        match self {
            CellMove::Stay => Coord::new(0, 0),
            CellMove::Up => Coord::new(0, 1),
            CellMove::Down => Coord::new(0, -1),
            CellMove::Left => Coord::new(-1, 0),
            CellMove::Right => Coord::new(1, 0),
        }
    }

    pub fn opposite(self) -> CellMove {
        match self {
            CellMove::Stay => CellMove::Stay,
            CellMove::Up => CellMove::Down,
            CellMove::Down => CellMove::Up,
            CellMove::Left => CellMove::Right,
            CellMove::Right => CellMove::Left,
        }
    }

    pub fn glyph(self) -> char {
        match self {
            CellMove::Stay => 'i',
            CellMove::Up => 'u',
            CellMove::Down => 'd',
            CellMove::Left => 'l',
            CellMove::Right => 'r',
        }
    }

    pub fn from_glyph(c: char) -> Option<CellMove> {
        match c {
            'i' => Some(CellMove::Stay),
            'u' => Some(CellMove::Up),
            'd' => Some(CellMove::Down),
            'l' => Some(CellMove::Left),
            'r' => Some(CellMove::Right),
            _ => None,
        }
    }
}

/// One step of a cell schedule: execute the next CNOT layer, or apply one
/// swap layer given as a move per species (indexed per [`Species::ALL`]).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScheduleStep {
    CnotLayer(usize),
    Swaps([CellMove; 4]),
}

/// Translation-invariant program executing one syndrome-extraction round's
/// CNOT layers on a device lattice.
///
/// `placement` gives the rest position of each species inside the device unit
/// cell (indexed per [`Species::ALL`]); the qubit of species s in abstract
/// cell (i, j) starts at `placement[s] + i*v1 + j*v2` for the lattice cell
/// vectors. Swap layers move whole sublattices one site at a time; a species
/// either swaps with an empty routing site or exchanges with a partner species
/// moving in the opposite direction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CellSchedule {
    pub lattice: LatticeKind,
    pub variant: ScheduleVariant,
    pub placement: [Coord; 4],
    pub steps: Vec<ScheduleStep>,
}

/// One swap of a validated swap layer, described per unit cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CellSwap {
    /// `species` steps onto an empty routing site.
    Type1 { species: Species, dir: CellMove },
    /// A data qubit exchanges with an ancilla it shares a flanking CNOT with;
    /// the ancilla belongs to the cell `anc_cell_offset` away from the data.
    Type2 {
        data: Species,
        anc: Species,
        anc_cell_offset: Coord,
        data_dir: CellMove,
    },
}

/// Per-layer swap breakdown produced by [`CellSchedule::validate`].
#[derive(Clone, Debug)]
pub struct SwapLayerDetail {
    pub swaps: Vec<CellSwap>,
}

/// Swap cost summary of one validated cell schedule, per unit cell per round.
#[derive(Clone, Debug)]
pub struct CellScheduleReport {
    pub swap_layers: Vec<SwapLayerDetail>,
    pub type1_per_cell_round: usize,
    pub type2_per_cell_round: usize,
    pub cnots_per_cell_round: usize,
}

impl CellScheduleReport {
    /// Average number of qubit-site hops per CNOT leg.
    pub fn mean_type1_per_leg(&self) -> f64 {
        self.type1_per_cell_round as f64 / (2.0 * self.cnots_per_cell_round as f64)
    }

    /// Average number of partner exchanges per CNOT.
    pub fn mean_type2(&self) -> f64 {
        self.type2_per_cell_round as f64 / self.cnots_per_cell_round as f64
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum CellScheduleError {
    #[error("placement entry {0} is not a site of the lattice cell")]
    PlacementNotASite(usize),
    #[error("placement entries {0} and {1} occupy the same site")]
    PlacementCollision(usize, usize),
    #[error("step {step}: swap layer is invalid: {reason}")]
    InvalidSwapLayer { step: usize, reason: String },
    #[error("step {step}: CNOT layer {layer} expected, found {found}")]
    LayerOutOfOrder {
        step: usize,
        layer: usize,
        found: usize,
    },
    #[error("step {step}: CNOT layer {layer} has non-adjacent partners")]
    LayerNotAdjacent { step: usize, layer: usize },
    #[error("schedule ends with {executed} of 4 CNOT layers executed")]
    Incomplete { executed: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Shared geometry tables for replaying and searching cell schedules on a
/// small periodic torus.
struct CellContext {
    torus: DeviceGraph,
    cells: i64,
    cell_w: i64,
    cell_h: i64,
    variant: ScheduleVariant,
    /// node -> step target per non-stay move, None if the target is not a site
    step_tab: Vec<[Option<u8>; 4]>,
    /// node -> index of its cell-site residue
    residue: Vec<u8>,
    dist: Vec<u8>,
    n: usize,
}

const MAX_TORUS_NODES: usize = 128;

impl CellContext {
    fn new(lattice: LatticeKind, variant: ScheduleVariant, cells: u32) -> Result<Self, TopologyError> {
        let torus = DeviceGraph::torus(lattice, cells)?;
        let n = torus.num_nodes();
        assert!(n <= MAX_TORUS_NODES, "schedule torus too large");
        let sites = lattice.cell_sites();
        let (v1, v2) = lattice.cell_vectors();
        let (cell_w, cell_h) = (v1.x, v2.y);
        let mut step_tab = vec![[None; 4]; n];
        let mut residue = vec![0u8; n];
        for id in 0..n {
            let c = torus.coord(id);
            for (slot, mv) in CellMove::ALL[1..].iter().enumerate() {
                step_tab[id][slot] = torus.node(c.add(mv.delta())).map(|t| t as u8);
            }
            let res = Coord::new(c.x.rem_euclid(cell_w), c.y.rem_euclid(cell_h));
            residue[id] = sites
                .iter()
                .position(|&s| s == res)
                .expect("torus node residue is a cell site") as u8;
        }
        let full = torus.all_pairs_distances();
        let mut dist = vec![u8::MAX; n * n];
        for a in 0..n {
            for b in 0..n {
                dist[a * n + b] = full.dist(a, b) as u8;
            }
        }
        Ok(CellContext {
            torus,
            cells: i64::from(cells),
            cell_w,
            cell_h,
            variant,
            step_tab,
            residue,
            dist,
            n,
        })
    }

    fn dist(&self, a: u8, b: u8) -> u8 {
        self.dist[a as usize * self.n + b as usize]
    }

    fn step(&self, node: u8, mv: CellMove) -> Option<u8> {
        match mv {
            CellMove::Stay => Some(node),
            _ => self.step_tab[node as usize][move_slot(mv)],
        }
    }

    /// Torus node of the instance `cell_offset` cells away from `rep`.
    fn translate(&self, rep: u8, cell_offset: Coord) -> u8 {
        let c = self.torus.coord(rep as usize);
        let t = c.add(Coord::new(cell_offset.x * self.cell_w, cell_offset.y * self.cell_h));
        self.torus.node(t).expect("cell translation stays on torus") as u8
    }

    /// Cell offset separating two same-residue nodes, centred to |q| <= 1.
    fn cell_offset(&self, from: u8, to: u8) -> Coord {
        let a = self.torus.coord(from as usize);
        let b = self.torus.coord(to as usize);
        let centred = |q: i64| {
            let m = q.rem_euclid(self.cells);
            if m > self.cells / 2 {
                m - self.cells
            } else {
                m
            }
        };
        debug_assert_eq!((b.x - a.x).rem_euclid(self.cell_w), 0);
        debug_assert_eq!((b.y - a.y).rem_euclid(self.cell_h), 0);
        Coord::new(
            centred((b.x - a.x).div_euclid(self.cell_w)),
            centred((b.y - a.y).div_euclid(self.cell_h)),
        )
    }

    /// Families a swap may justify a partner exchange with while CNOT layer
    /// `pending` is the next to execute.
    fn window(&self, pending: usize) -> Vec<Family> {
        let mut out = Vec::with_capacity(4);
        if pending > 0 {
            out.extend(families(self.variant, pending - 1));
        }
        if pending < 4 {
            out.extend(families(self.variant, pending));
        }
        out
    }

    /// Whether CNOT layer `k` is executable with species representatives at
    /// `reps`: every family's data qubit must sit adjacent to its partner.
    fn executable(&self, reps: &[u8; 4], k: usize) -> bool {
        families(self.variant, k).iter().all(|f| {
            let anc = self.translate(reps[f.anc.index()], f.anc_cell_offset);
            self.dist(reps[f.data.index()], anc) == 1
        })
    }

    /// Applies one swap layer if it is a valid set of disjoint transpositions
    /// obeying the swap typing rules; returns new representative positions and
    /// the per-cell swap breakdown.
    fn try_moves(
        &self,
        reps: &[u8; 4],
        pending: usize,
        moves: &[CellMove; 4],
    ) -> Result<([u8; 4], Vec<CellSwap>), String> {
        if moves.iter().all(|&m| m == CellMove::Stay) {
            return Err("all species stay".into());
        }
        let window = self.window(pending);
        let mut new_reps = *reps;
        let mut swaps = Vec::new();
        // Residue index -> species currently resting there.
        let mut holder = [None::<usize>; 16];
        for s in 0..4 {
            holder[self.residue[reps[s] as usize] as usize] = Some(s);
        }
        let mut claimed: u16 = 0;
        for s in 0..4 {
            if moves[s] == CellMove::Stay {
                continue;
            }
            let target = self
                .step(reps[s], moves[s])
                .ok_or_else(|| format!("{} steps off the lattice", Species::ALL[s]))?;
            let t_res = self.residue[target as usize] as usize;
            new_reps[s] = target;
            match holder[t_res] {
                Some(other) if other == s => {
                    return Err(format!("{} steps within its own residue", Species::ALL[s]))
                }
                Some(other) => {
                    if moves[other] != moves[s].opposite() {
                        return Err(format!(
                            "{} displaces {} without a mutual exchange",
                            Species::ALL[s],
                            Species::ALL[other]
                        ));
                    }
                    if s > other {
                        continue; // already recorded from the partner's side
                    }
                    let (data, anc) = if Species::ALL[s].is_data() {
                        (s, other)
                    } else {
                        (other, s)
                    };
                    if Species::ALL[data].is_ancilla() || Species::ALL[anc].is_data() {
                        return Err(format!(
                            "{} and {} exchange but are not a data-ancilla pair",
                            Species::ALL[s],
                            Species::ALL[other]
                        ));
                    }
                    let data_target = self.step(reps[data], moves[data]).expect("checked above");
                    let offset = self.cell_offset(reps[anc], data_target);
                    let fam = Family {
                        data: Species::ALL[data],
                        anc: Species::ALL[anc],
                        anc_cell_offset: offset,
                    };
                    if !window.contains(&fam) {
                        return Err(format!(
                            "{} and {} exchange without a flanking CNOT layer",
                            Species::ALL[s],
                            Species::ALL[other]
                        ));
                    }
                    swaps.push(CellSwap::Type2 {
                        data: fam.data,
                        anc: fam.anc,
                        anc_cell_offset: fam.anc_cell_offset,
                        data_dir: moves[data],
                    });
                }
                None => {
                    if claimed & (1 << t_res) != 0 {
                        return Err(format!(
                            "{} targets an empty site already claimed",
                            Species::ALL[s]
                        ));
                    }
                    claimed |= 1 << t_res;
                    swaps.push(CellSwap::Type1 {
                        species: Species::ALL[s],
                        dir: moves[s],
                    });
                }
            }
        }
        Ok((new_reps, swaps))
    }
}

fn move_slot(mv: CellMove) -> usize {
    match mv {
        CellMove::Stay => unreachable!("stay has no step slot"),
        CellMove::Up => 0,
        CellMove::Down => 1,
        CellMove::Left => 2,
        CellMove::Right => 3,
    }
}

impl CellSchedule {
    /// Replays the schedule on a small torus, checking every swap layer and
    /// CNOT layer, and reports per-cell swap costs.
    pub fn validate(&self) -> Result<CellScheduleReport, CellScheduleError> {
        let ctx = CellContext::new(self.lattice, self.variant, 3)?;
        let sites = self.lattice.cell_sites();
        for (i, p) in self.placement.iter().enumerate() {
            if !sites.contains(p) {
                return Err(CellScheduleError::PlacementNotASite(i));
            }
            for (j, q) in self.placement.iter().enumerate().take(i) {
                if p == q {
                    return Err(CellScheduleError::PlacementCollision(j, i));
                }
            }
        }
        let mut reps = [0u8; 4];
        for s in 0..4 {
            reps[s] = ctx
                .torus
                .node(self.placement[s])
                .expect("cell site exists on torus") as u8;
        }
        let mut pending = 0usize;
        let mut layers = Vec::new();
        let mut type1 = 0usize;
        let mut type2 = 0usize;
        for (step, item) in self.steps.iter().enumerate() {
            match item {
                ScheduleStep::CnotLayer(k) => {
                    if *k != pending {
                        return Err(CellScheduleError::LayerOutOfOrder {
                            step,
                            layer: pending,
                            found: *k,
                        });
                    }
                    if !ctx.executable(&reps, *k) {
                        return Err(CellScheduleError::LayerNotAdjacent { step, layer: *k });
                    }
                    pending += 1;
                }
                ScheduleStep::Swaps(moves) => {
                    let (new_reps, swaps) = ctx.try_moves(&reps, pending, moves).map_err(|reason| {
                        CellScheduleError::InvalidSwapLayer { step, reason }
                    })?;
                    reps = new_reps;
                    for sw in &swaps {
                        match sw {
                            CellSwap::Type1 { .. } => type1 += 1,
                            CellSwap::Type2 { .. } => type2 += 1,
                        }
                    }
                    layers.push(SwapLayerDetail { swaps });
                }
            }
        }
        if pending != 4 {
            return Err(CellScheduleError::Incomplete { executed: pending });
        }
        Ok(CellScheduleReport {
            swap_layers: layers,
            type1_per_cell_round: type1,
            type2_per_cell_round: type2,
            cnots_per_cell_round: 8,
        })
    }

    /// Number of swap layers in the schedule.
    pub fn num_swap_layers(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, ScheduleStep::Swaps(_)))
            .count()
    }

    /// Serialises to the schedule table format: a comment header naming the
    /// lattice and variant, a column header, the rest placement, then one row
    /// per step with a move glyph per species.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# lattice={} variant={}\n",
            self.lattice.token(),
            self.variant.token()
        ));
        out.push_str("step,x_data,z_data,x_ancilla,z_ancilla\n");
        let place: Vec<String> = self
            .placement
            .iter()
            .map(|c| format!("{} {}", c.x, c.y))
            .collect();
        out.push_str(&format!("start,{}\n", place.join(",")));
        let mut swap_no = 0;
        for step in &self.steps {
            match step {
                ScheduleStep::CnotLayer(k) => {
                    out.push_str(&format!("C{},.,.,.,.\n", k + 1));
                }
                ScheduleStep::Swaps(moves) => {
                    swap_no += 1;
                    let row: Vec<String> =
                        moves.iter().map(|m| m.glyph().to_string()).collect();
                    out.push_str(&format!("S{},{}\n", swap_no, row.join(",")));
                }
            }
        }
        out
    }

    /// Parses the format written by [`CellSchedule::to_csv`].
    pub fn from_csv(text: &str) -> Result<CellSchedule, ScheduleParseError> {
        let mut lattice = None;
        let mut variant = None;
        let mut placement: Option<[Coord; 4]> = None;
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for token in rest.split_whitespace() {
                    if let Some(v) = token.strip_prefix("lattice=") {
                        lattice = Some(LatticeKind::from_token(v).ok_or_else(|| {
                            ScheduleParseError::new(lineno, format!("unknown lattice `{v}`"))
                        })?);
                    } else if let Some(v) = token.strip_prefix("variant=") {
                        variant = Some(ScheduleVariant::from_token(v).ok_or_else(|| {
                            ScheduleParseError::new(lineno, format!("unknown variant `{v}`"))
                        })?);
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields[0] == "step" {
                continue; // column header
            }
            if fields.len() != 5 {
                return Err(ScheduleParseError::new(
                    lineno,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            }
            match fields[0] {
                "start" => {
                    let mut place = [Coord::new(0, 0); 4];
                    for (i, f) in fields[1..].iter().enumerate() {
                        let mut parts = f.split_whitespace().map(str::parse::<i64>);
                        let (x, y) = match (parts.next(), parts.next(), parts.next()) {
                            (Some(Ok(x)), Some(Ok(y)), None) => (x, y),
                            _ => {
                                return Err(ScheduleParseError::new(
                                    lineno,
                                    format!("bad placement entry `{f}`"),
                                ))
                            }
                        };
                        place[i] = Coord::new(x, y);
                    }
                    placement = Some(place);
                }
                label if label.starts_with('C') => {
                    let k: usize = label[1..].parse().map_err(|_| {
                        ScheduleParseError::new(lineno, format!("bad layer label `{label}`"))
                    })?;
                    if !(1..=4).contains(&k) {
                        return Err(ScheduleParseError::new(
                            lineno,
                            format!("layer label `{label}` out of range"),
                        ));
                    }
                    steps.push(ScheduleStep::CnotLayer(k - 1));
                }
                label if label.starts_with('S') => {
                    let mut moves = [CellMove::Stay; 4];
                    for (i, f) in fields[1..].iter().enumerate() {
                        let mut chars = f.chars();
                        let m = match (chars.next(), chars.next()) {
                            (Some(c), None) => CellMove::from_glyph(c),
                            _ => None,
                        };
                        moves[i] = m.ok_or_else(|| {
                            ScheduleParseError::new(lineno, format!("bad move `{f}`"))
                        })?;
                    }
                    steps.push(ScheduleStep::Swaps(moves));
                }
                label => {
                    return Err(ScheduleParseError::new(
                        lineno,
                        format!("unknown row label `{label}`"),
                    ))
                }
            }
        }
        Ok(CellSchedule {
            lattice: lattice.ok_or_else(|| ScheduleParseError::new(0, "missing lattice header"))?,
            variant: variant.ok_or_else(|| ScheduleParseError::new(0, "missing variant header"))?,
            placement: placement
                .ok_or_else(|| ScheduleParseError::new(0, "missing start placement row"))?,
            steps,
        })
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
#[error("schedule table line {line}: {message}")]
pub struct ScheduleParseError {
    pub line: usize,
    pub message: String,
}

impl ScheduleParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ScheduleParseError {
            line: line + 1,
            message: message.into(),
        }
    }
}

/// Search limits for [`search_cell_schedule`].
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    /// Largest number of swap layers to try before giving up.
    pub max_swap_layers: usize,
    /// Permit data-ancilla exchanges. Disabling restricts the search to
    /// schedules that only hop through routing sites, whose uniform per-swap
    /// cost keeps the closed-form noise accounting exact.
    pub allow_type2: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_swap_layers: 8,
            allow_type2: true,
        }
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum SearchError {
    #[error("no schedule found within {max_swap_layers} swap layers")]
    NoScheduleFound { max_swap_layers: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Breadth-first state: packed representative positions plus the index of the
/// next CNOT layer. Executing a layer costs nothing; a swap layer costs one.
fn pack(reps: &[u8; 4], pending: u8) -> u32 {
    reps.iter()
        .enumerate()
        .fold(u32::from(pending) << 28, |acc, (i, &r)| {
            acc | (u32::from(r) << (7 * i))
        })
}

fn unpack(key: u32) -> ([u8; 4], u8) {
    let mut reps = [0u8; 4];
    for (i, r) in reps.iter_mut().enumerate() {
        *r = ((key >> (7 * i)) & 0x7f) as u8;
    }
    (reps, (key >> 28) as u8)
}

struct SearchNode {
    depth: u8,
    parent: u32,
    action: u16,
}

const ACTION_EXECUTE: u16 = u16::MAX;
const ACTION_START: u16 = u16::MAX - 1;

fn encode_moves(moves: &[CellMove; 4]) -> u16 {
    moves.iter().enumerate().fold(0u16, |acc, (i, &m)| {
        let code = CellMove::ALL.iter().position(|&x| x == m).unwrap() as u16;
        acc | (code << (3 * i))
    })
}

fn decode_moves(action: u16) -> [CellMove; 4] {
    let mut moves = [CellMove::Stay; 4];
    for (i, m) in moves.iter_mut().enumerate() {
        *m = CellMove::ALL[((action >> (3 * i)) & 0x7) as usize];
    }
    moves
}

/// Fewest swap layers needed before the next CNOT layer can possibly execute:
/// each swap layer shortens a data-ancilla separation by at most two.
fn lower_bound(ctx: &CellContext, reps: &[u8; 4], pending: usize) -> usize {
    if pending >= 4 {
        return 0;
    }
    families(ctx.variant, pending)
        .iter()
        .map(|f| {
            let anc = ctx.translate(reps[f.anc.index()], f.anc_cell_offset);
            let d = usize::from(ctx.dist(reps[f.data.index()], anc));
            d.saturating_sub(1).div_ceil(2)
        })
        .max()
        .unwrap_or(0)
}

/// Searches one placement for a schedule using at most `cap` swap layers.
/// Zero-or-one-cost breadth-first search over (positions, pending layer).
fn search_placement(
    ctx: &CellContext,
    start: &[u8; 4],
    cap: usize,
    allow_type2: bool,
    move_menu: &[[CellMove; 4]],
) -> Option<Vec<ScheduleStep>> {
    let start_key = pack(start, 0);
    let mut info: HashMap<u32, SearchNode> = HashMap::new();
    info.insert(
        start_key,
        SearchNode {
            depth: 0,
            parent: start_key,
            action: ACTION_START,
        },
    );
    let mut queue: VecDeque<(u32, u8)> = VecDeque::new();
    queue.push_back((start_key, 0));
    let mut goal = None;
    while let Some((key, depth)) = queue.pop_front() {
        if info[&key].depth != depth {
            continue; // superseded entry
        }
        let (reps, pending) = unpack(key);
        if pending == 4 {
            goal = Some(key);
            break;
        }
        let pending = usize::from(pending);
        if ctx.executable(&reps, pending) {
            let next = pack(&reps, pending as u8 + 1);
            let better = info.get(&next).map_or(true, |n| depth < n.depth);
            if better {
                info.insert(
                    next,
                    SearchNode {
                        depth,
                        parent: key,
                        action: ACTION_EXECUTE,
                    },
                );
                queue.push_front((next, depth));
            }
        }
        if usize::from(depth) >= cap {
            continue;
        }
        for moves in move_menu {
            let Ok((new_reps, swaps)) = ctx.try_moves(&reps, pending, moves) else {
                continue;
            };
            if !allow_type2 && swaps.iter().any(|s| matches!(s, CellSwap::Type2 { .. })) {
                continue;
            }
            let new_depth = depth + 1;
            if usize::from(new_depth) + lower_bound(ctx, &new_reps, pending) > cap {
                continue;
            }
            let next = pack(&new_reps, pending as u8);
            let better = info.get(&next).map_or(true, |n| new_depth < n.depth);
            if better {
                info.insert(
                    next,
                    SearchNode {
                        depth: new_depth,
                        parent: key,
                        action: encode_moves(moves),
                    },
                );
                queue.push_back((next, new_depth));
            }
        }
    }
    let mut key = goal?;
    let mut steps = Vec::new();
    loop {
        let node = &info[&key];
        match node.action {
            ACTION_START => break,
            ACTION_EXECUTE => {
                let (_, pending) = unpack(key);
                steps.push(ScheduleStep::CnotLayer(usize::from(pending) - 1));
            }
            action => steps.push(ScheduleStep::Swaps(decode_moves(action))),
        }
        key = node.parent;
    }
    steps.reverse();
    Some(steps)
}

/// Finds a minimum-swap-layer cell schedule for `lattice` under `variant`.
///
/// Tries every placement of the four species into the unit cell, deepening the
/// swap-layer budget until some placement admits a schedule; among solutions
/// at the minimal budget the lowest-numbered placement wins, so the result is
/// deterministic. Placements are searched in parallel.
pub fn search_cell_schedule(
    lattice: LatticeKind,
    variant: ScheduleVariant,
    config: &SearchConfig,
) -> Result<CellSchedule, SearchError> {
    let ctx = CellContext::new(lattice, variant, 3)?;
    let sites = lattice.cell_sites();
    let mut placements: Vec<[u8; 4]> = Vec::new();
    let site_nodes: Vec<u8> = sites
        .iter()
        .map(|&c| ctx.torus.node(c).expect("cell site on torus") as u8)
        .collect();
    let k = site_nodes.len();
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                for d in 0..k {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        placements.push([site_nodes[a], site_nodes[b], site_nodes[c], site_nodes[d]]);
                    }
                }
            }
        }
    }
    let move_menu: Vec<[CellMove; 4]> = (1..5usize.pow(4))
        .map(|i| {
            let mut moves = [CellMove::Stay; 4];
            let mut rest = i;
            for m in moves.iter_mut() {
                *m = CellMove::ALL[rest % 5];
                rest /= 5;
            }
            moves
        })
        .collect();
    for cap in 0..=config.max_swap_layers {
        let hit = placements
            .par_iter()
            .enumerate()
            .filter_map(|(idx, start)| {
                search_placement(&ctx, start, cap, config.allow_type2, &move_menu)
                    .map(|steps| (idx, steps))
            })
            .min_by_key(|(idx, _)| *idx);
        if let Some((idx, steps)) = hit {
            let start = placements[idx];
            let mut placement = [Coord::new(0, 0); 4];
            for s in 0..4 {
                placement[s] = ctx.torus.coord(start[s] as usize);
            }
            return Ok(CellSchedule {
                lattice,
                variant,
                placement,
                steps,
            });
        }
    }
    Err(SearchError::NoScheduleFound {
        max_swap_layers: config.max_swap_layers,
    })
}

/// Built-in schedule table for a lattice, selected for lowest swap cost.
pub fn golden_schedule(lattice: LatticeKind) -> CellSchedule {
    let text = match lattice {
        LatticeKind::HeavyHex => include_str!("../data/heavy_hex_schedule.csv"),
        LatticeKind::Hexagonal => include_str!("../data/hexagonal_schedule.csv"),
    };
    CellSchedule::from_csv(text).expect("built-in schedule table parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::tableau::TableauSim;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn code_counts() {
        for d in [2usize, 3, 5] {
            let code = SurfaceCode::new(d).unwrap();
            assert_eq!(code.data_ids().len(), d * d);
            assert_eq!(code.ancilla_ids().len(), d * d - 1);
            assert_eq!(code.num_qubits(), 2 * d * d - 1);
            if d % 2 == 1 {
                let x_count = code
                    .ancilla_ids()
                    .iter()
                    .filter(|&&a| {
                        matches!(code.site(a).role, CodeRole::Ancilla { stab: StabKind::X, .. })
                    })
                    .count();
                assert_eq!(2 * x_count, d * d - 1, "d={d}");
            }
        }
        assert_eq!(
            SurfaceCode::new(1).unwrap_err(),
            SurfaceCodeError::DistanceTooSmall(1)
        );
    }

    #[test]
    fn stabilizers_commute_and_logicals_anticommute() {
        let code = SurfaceCode::new(5).unwrap();
        let supports: Vec<(StabKind, Vec<usize>)> = code
            .ancilla_ids()
            .iter()
            .map(|&a| match &code.site(a).role {
                CodeRole::Ancilla { stab, support } => (*stab, support.clone()),
                _ => unreachable!(),
            })
            .collect();
        for (i, (ka, sa)) in supports.iter().enumerate() {
            for (kb, sb) in supports.iter().take(i) {
                if ka != kb {
                    let overlap = sa.iter().filter(|q| sb.contains(q)).count();
                    assert_eq!(overlap % 2, 0);
                }
            }
        }
        let lz = code.logical_z_data();
        let lx = code.logical_x_data();
        for (kind, sup) in &supports {
            let against = match kind {
                StabKind::X => &lz,
                StabKind::Z => &lx,
            };
            let overlap = sup.iter().filter(|q| against.contains(q)).count();
            assert_eq!(overlap % 2, 0, "stabilizer crosses a logical oddly");
        }
        let cross = lz.iter().filter(|q| lx.contains(q)).count();
        assert_eq!(cross % 2, 1);
    }

    #[test]
    fn species_parity_matches_roles() {
        let code = SurfaceCode::new(3).unwrap();
        for (id, site) in code.sites().iter().enumerate() {
            match (&site.role, code.species(id)) {
                (CodeRole::Data { .. }, s) => assert!(s.is_data()),
                (CodeRole::Ancilla { stab: StabKind::X, .. }, s) => {
                    assert_eq!(s, Species::XAncilla)
                }
                (CodeRole::Ancilla { stab: StabKind::Z, .. }, s) => {
                    assert_eq!(s, Species::ZAncilla)
                }
            }
        }
    }

    #[test]
    fn layer_families_share_an_axis() {
        for variant in ScheduleVariant::ALL {
            for k in 0..4 {
                let dx = variant.data_dir(k, Species::XAncilla);
                let dz = variant.data_dir(k, Species::ZAncilla);
                assert_eq!(dx.x.abs(), dz.x.abs(), "{variant} layer {k}");
                let [f1, f2] = families(variant, k);
                assert_ne!(f1.data, f2.data);
                assert_ne!(f1.anc, f2.anc);
            }
        }
    }

    /// The load-bearing schedule test: in a noiseless run every detector
    /// parity and the logical observable must come out zero regardless of the
    /// random measurement outcomes drawn along the way.
    #[test]
    fn memory_detectors_deterministic() {
        let code = SurfaceCode::new(3).unwrap();
        for variant in ScheduleVariant::ALL {
            for alternate in [false, true] {
                let (circuit, map) = memory_circuit(&code, variant, 3, alternate).unwrap();
                map.validate(circuit.num_measurements()).unwrap();
                for seed in 0..4u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let out = TableauSim::run(&circuit, &mut rng);
                    for (i, det) in map.detectors.iter().enumerate() {
                        let parity = det
                            .measurements
                            .iter()
                            .fold(false, |acc, &m| acc ^ out[m]);
                        assert!(
                            !parity,
                            "{variant} alternate={alternate} seed={seed} detector {i} fired"
                        );
                    }
                    let obs = map.observable.iter().fold(false, |acc, &m| acc ^ out[m]);
                    assert!(!obs, "{variant} alternate={alternate} seed={seed} observable");
                }
            }
        }
    }

    #[test]
    fn memory_detector_count() {
        let code = SurfaceCode::new(3).unwrap();
        let map = memory_detector_map(&code, 3);
        // 4 first-round checks + 2 * 8 consecutive-round pairs + 4 final.
        assert_eq!(map.detectors.len(), 24);
        assert_eq!(map.observable.len(), 3);
    }

    #[test]
    fn hex_search_finds_single_swap_layer() {
        let schedule = search_cell_schedule(
            LatticeKind::Hexagonal,
            ScheduleVariant::Hvvh,
            &SearchConfig {
                max_swap_layers: 2,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        assert_eq!(schedule.num_swap_layers(), 1);
        let report = schedule.validate().unwrap();
        assert_eq!(report.type1_per_cell_round, 0);
        assert_eq!(report.type2_per_cell_round, 2);
    }

    #[test]
    fn schedule_csv_round_trip() {
        let schedule = search_cell_schedule(
            LatticeKind::Hexagonal,
            ScheduleVariant::Hvvh,
            &SearchConfig {
                max_swap_layers: 2,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        let text = schedule.to_csv();
        let back = CellSchedule::from_csv(&text).unwrap();
        assert_eq!(schedule, back);
    }

    #[test]
    fn validate_rejects_tampering() {
        let mut schedule = search_cell_schedule(
            LatticeKind::Hexagonal,
            ScheduleVariant::Hvvh,
            &SearchConfig {
                max_swap_layers: 2,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        let swap_at = schedule
            .steps
            .iter()
            .position(|s| matches!(s, ScheduleStep::Swaps(_)))
            .unwrap();
        if let ScheduleStep::Swaps(moves) = &mut schedule.steps[swap_at] {
            moves[0] = CellMove::Stay;
        }
        assert!(schedule.validate().is_err());

        let mut reordered = schedule;
        if let ScheduleStep::Swaps(moves) = &mut reordered.steps[swap_at] {
            *moves = [CellMove::Stay; 4];
        }
        reordered.steps.swap(0, 1);
        assert!(reordered.validate().is_err());
    }

    #[test]
    fn golden_schedules_validate() {
        for lattice in [LatticeKind::HeavyHex, LatticeKind::Hexagonal] {
            let schedule = golden_schedule(lattice);
            assert_eq!(schedule.lattice, lattice);
            let report = schedule.validate().unwrap();
            match lattice {
                LatticeKind::HeavyHex => {
                    assert_eq!(schedule.num_swap_layers(), 5);
                    assert_eq!(report.type1_per_cell_round, 12);
                    assert_eq!(report.type2_per_cell_round, 2);
                }
                LatticeKind::Hexagonal => {
                    assert_eq!(schedule.num_swap_layers(), 1);
                    assert_eq!(report.type1_per_cell_round, 0);
                    assert_eq!(report.type2_per_cell_round, 2);
                }
            }
        }
    }

    /// Builds the memory circuit for an arbitrary pair of per-layer CNOT
    /// direction tables, bypassing [`ScheduleVariant`]. Returns `None` when
    /// some layer would touch a qubit twice.
    fn raw_memory_circuit(
        code: &SurfaceCode,
        x: [Coord; 4],
        z: [Coord; 4],
        rounds: usize,
    ) -> Option<Circuit> {
        let mut circuit = Circuit::new(code.num_qubits());
        let layer = |gates| Layer::new(gates);
        circuit
            .push_layer(layer(
                code.data_ids().iter().map(|&q| Gate::prep_z(q)).collect(),
            ))
            .ok()?;
        let x_anc: Vec<usize> = code
            .ancilla_ids()
            .iter()
            .copied()
            .filter(|&a| code.species(a) == Species::XAncilla)
            .collect();
        for round in 0..rounds {
            let order: [usize; 4] = if round % 2 == 1 { [3, 2, 1, 0] } else { [0, 1, 2, 3] };
            circuit
                .push_layer(layer(
                    code.ancilla_ids().iter().map(|&a| Gate::prep_z(a)).collect(),
                ))
                .ok()?;
            circuit
                .push_layer(layer(x_anc.iter().map(|&a| Gate::h(a)).collect()))
                .ok()?;
            for k in order {
                let mut gates = Vec::new();
                for &a in code.ancilla_ids() {
                    let anc = code.species(a);
                    let dir = if anc == Species::XAncilla { x[k] } else { z[k] };
                    if let Some(dq) = code.id_at(code.site(a).grid.add(dir)) {
                        gates.push(match anc {
                            Species::XAncilla => Gate::cnot(a, dq),
                            _ => Gate::cnot(dq, a),
                        });
                    }
                }
                circuit.push_layer(layer(gates)).ok()?;
            }
            circuit
                .push_layer(layer(x_anc.iter().map(|&a| Gate::h(a)).collect()))
                .ok()?;
            circuit
                .push_layer(layer(
                    code.ancilla_ids().iter().map(|&a| Gate::meas_z(a)).collect(),
                ))
                .ok()?;
        }
        circuit
            .push_layer(layer(
                code.data_ids().iter().map(|&q| Gate::meas_z(q)).collect(),
            ))
            .ok()?;
        Some(circuit)
    }

    /// Census over all 24 x 24 ordered direction tables: a table pair yields a
    /// working memory circuit exactly when both species visit the axes in the
    /// order H,V,V,H or V,H,H,V and agree on that order. The four shipped
    /// variants are among the 16 survivors.
    #[test]
    fn direction_table_census() {
        use crate::sim::shot_rng;
        use crate::sim::tableau::TableauSim;

        const DIRS: [Coord; 4] = [
            Coord::new(1, 0),
            Coord::new(-1, 0),
            Coord::new(0, 1),
            Coord::new(0, -1),
        ];
        let mut perms = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let d = 6 - a - b - c;
                    if a != b && a != c && b != c && d < 4 {
                        perms.push([a, b, c, d]);
                    }
                }
            }
        }
        assert_eq!(perms.len(), 24);

        let code = SurfaceCode::new(3).unwrap();
        let rounds = 2;
        let map = memory_detector_map(&code, rounds);
        let deterministic = |circuit: &Circuit| {
            (0..3).all(|seed| {
                let meas = TableauSim::run(circuit, &mut shot_rng(seed, 0));
                map.detectors.iter().all(|d| {
                    d.measurements.iter().filter(|&&m| meas[m]).count() % 2 == 0
                }) && map.observable.iter().filter(|&&m| meas[m]).count() % 2 == 0
            })
        };

        let mut valid = Vec::new();
        let mut overlap = 0usize;
        let mut nondeterministic = 0usize;
        for xp in &perms {
            for zp in &perms {
                let x = xp.map(|i| DIRS[i]);
                let z = zp.map(|i| DIRS[i]);
                match raw_memory_circuit(&code, x, z, rounds) {
                    None => overlap += 1,
                    Some(circuit) if deterministic(&circuit) => valid.push((x, z)),
                    Some(_) => nondeterministic += 1,
                }
            }
        }
        assert_eq!(
            (valid.len(), overlap, nondeterministic),
            (16, 480, 80),
            "census counts changed"
        );
        let axis_word = |t: &[Coord; 4]| t.map(|c| if c.y == 0 { 'H' } else { 'V' });
        for (x, z) in &valid {
            let word = axis_word(x);
            assert_eq!(word, axis_word(z));
            assert!(word == ['H', 'V', 'V', 'H'] || word == ['V', 'H', 'H', 'V']);
        }
        for variant in ScheduleVariant::ALL {
            let table = |anc| std::array::from_fn(|k| variant.data_dir(k, anc));
            let pair = (table(Species::XAncilla), table(Species::ZAncilla));
            assert!(
                valid.contains(&pair),
                "{variant} is not in the valid set"
            );
        }
    }

    /// Slow: regenerates both built-in tables from scratch and compares. The
    /// heavy-hex table was produced with partner exchanges disabled so the
    /// schedule has a uniform per-swap cost.
    #[test]
    #[ignore]
    fn search_matches_golden_schedules() {
        for lattice in [LatticeKind::HeavyHex, LatticeKind::Hexagonal] {
            let golden = golden_schedule(lattice);
            let report = golden.validate().unwrap();
            let found = search_cell_schedule(
                lattice,
                golden.variant,
                &SearchConfig {
                    max_swap_layers: golden.num_swap_layers(),
                    allow_type2: report.type2_per_cell_round > 0,
                },
            )
            .unwrap();
            assert_eq!(found, golden);
        }
    }
}
