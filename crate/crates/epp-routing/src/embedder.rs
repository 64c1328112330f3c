//! Tiles a unit-cell schedule across a surface-code patch, producing a routed
//! memory experiment on a finite device region.
//!
//! Tiling is literal: the abstract qubit of species s in grid cell (i, j)
//! rests at `placement[s] + i*v1 + j*v2`, swap layers apply the same move to
//! every instance of a species, and syndrome-extraction rounds alternate
//! forward and mirrored so the self-inverse swap program returns every qubit
//! to rest after two rounds. Near the patch boundary a partner exchange whose
//! counterpart does not exist degrades into a plain hop onto the empty site,
//! which keeps all instances of a species in lockstep. The result is an
//! ordinary [`RoutedCircuit`], so certification and lowering give the same
//! guarantees as for any routed schedule.

use std::collections::HashMap;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate};
use crate::router::{certify, CertifyError, CertifyReport, RoutedCircuit, RoutedItem};
use crate::sim::DetectorMap;
use crate::surface_router::{
    families, memory_circuit, CellMove, CellSchedule, CellScheduleError, CellSwap, ScheduleStep,
    Species, SurfaceCode, SwapLayerDetail,
};
use crate::topology::{Coord, DeviceGraph, NodeId, TopologyError};

/// A memory experiment embedded on hardware: the certified routed schedule
/// plus the detector definitions it shares with its abstract counterpart.
#[derive(Debug)]
pub struct EmbeddedMemory {
    pub routed: RoutedCircuit,
    pub detectors: DetectorMap,
    pub report: CertifyReport,
    pub rounds: usize,
}

#[derive(Error, Debug)]
pub enum EmbedError {
    #[error(transparent)]
    Schedule(#[from] CellScheduleError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

/// Embeds a `rounds`-round Z-basis memory experiment for `code` on the device
/// lattice of `schedule`, sizing the region to cover every position the
/// schedule visits. The returned schedule is certified.
pub fn embed_memory(
    code: &SurfaceCode,
    schedule: &CellSchedule,
    rounds: usize,
) -> Result<EmbeddedMemory, EmbedError> {
    assert!(rounds >= 1, "memory experiment needs at least one round");
    let cell_report = schedule.validate()?;
    let (v1, v2) = schedule.lattice.cell_vectors();

    let n = code.num_qubits();
    let mut species = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    let mut rest = Vec::with_capacity(n);
    let mut by_species_cell: HashMap<(usize, (i64, i64)), usize> = HashMap::new();
    let mut ids_of_species: [Vec<usize>; 4] = Default::default();
    for id in 0..n {
        let grid = code.site(id).grid;
        let sp = Species::of_grid(grid);
        let cell = (grid.x.div_euclid(2), grid.y.div_euclid(2));
        let pos = schedule.placement[sp.index()]
            .add(v1.scale(cell.0))
            .add(v2.scale(cell.1));
        species.push(sp);
        cells.push(cell);
        rest.push(pos);
        by_species_cell.insert((sp.index(), cell), id);
        ids_of_species[sp.index()].push(id);
    }

    // Every displacement a species accumulates during a round; mirrored
    // rounds revisit the same offsets in reverse.
    let mut disp_sets: [Vec<Coord>; 4] = Default::default();
    {
        let mut disp = [Coord::new(0, 0); 4];
        for set in &mut disp_sets {
            set.push(Coord::new(0, 0));
        }
        for step in &schedule.steps {
            if let ScheduleStep::Swaps(moves) = step {
                for s in 0..4 {
                    disp[s] = disp[s].add(moves[s].delta());
                    disp_sets[s].push(disp[s]);
                }
            }
        }
    }
    let mut xs = (i64::MAX, i64::MIN);
    let mut ys = (i64::MAX, i64::MIN);
    for id in 0..n {
        for d in &disp_sets[species[id].index()] {
            let p = rest[id].add(*d);
            xs = (xs.0.min(p.x), xs.1.max(p.x));
            ys = (ys.0.min(p.y), ys.1.max(p.y));
        }
    }
    let device = DeviceGraph::lattice_region(schedule.lattice, xs.0..xs.1 + 1, ys.0..ys.1 + 1)?;
    let initial_placement: Vec<NodeId> = rest
        .iter()
        .map(|&p| device.node(p).expect("rest position inside region"))
        .collect();

    let (abstract_circuit, detectors) = memory_circuit(code, schedule.variant, rounds, true)?;

    // Forward round program: CNOT layers and swap layers with their details.
    enum RoundStep<'a> {
        Cnot(usize),
        Swap(&'a SwapLayerDetail, [CellMove; 4]),
    }
    let mut forward = Vec::new();
    {
        let mut swap_idx = 0;
        for step in &schedule.steps {
            match step {
                ScheduleStep::CnotLayer(k) => forward.push(RoundStep::Cnot(*k)),
                ScheduleStep::Swaps(moves) => {
                    forward.push(RoundStep::Swap(&cell_report.swap_layers[swap_idx], *moves));
                    swap_idx += 1;
                }
            }
        }
    }

    let emit_layer = |detail: &SwapLayerDetail, flip: bool, disp: &[Coord; 4]| {
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
        let node = |p: Coord| device.node(p).expect("swap endpoint inside region");
        for sw in &detail.swaps {
            match *sw {
                CellSwap::Type1 {
                    species: sp, dir, ..
                } => {
                    let d = if flip { dir.opposite() } else { dir }.delta();
                    for &id in &ids_of_species[sp.index()] {
                        let from = rest[id].add(disp[sp.index()]);
                        pairs.push((node(from), node(from.add(d))));
                    }
                }
                CellSwap::Type2 {
                    data,
                    anc,
                    anc_cell_offset,
                    data_dir,
                } => {
                    let d = if flip { data_dir.opposite() } else { data_dir }.delta();
                    for &id in &ids_of_species[data.index()] {
                        let from = rest[id].add(disp[data.index()]);
                        pairs.push((node(from), node(from.add(d))));
                    }
                    // An ancilla whose data partner is off the patch still
                    // moves, hopping onto the partner's empty site.
                    for &id in &ids_of_species[anc.index()] {
                        let partner = (
                            cells[id].0 - anc_cell_offset.x,
                            cells[id].1 - anc_cell_offset.y,
                        );
                        if !by_species_cell.contains_key(&(data.index(), partner)) {
                            let from = rest[id].add(disp[anc.index()]);
                            pairs.push((node(from), node(from.sub(d))));
                        }
                    }
                }
            }
        }
        pairs
    };

    let mut items = vec![RoutedItem::Computational { layer: 0 }];
    let mut next_layer = 1;
    let mut disp = [Coord::new(0, 0); 4];
    for round in 0..rounds {
        let mirror = round % 2 == 1;
        items.push(RoutedItem::Computational { layer: next_layer });
        items.push(RoutedItem::Computational {
            layer: next_layer + 1,
        });
        let cnot_base = next_layer + 2;
        let order: Vec<usize> = if mirror {
            (0..forward.len()).rev().collect()
        } else {
            (0..forward.len()).collect()
        };
        for i in order {
            match &forward[i] {
                RoundStep::Cnot(k) => {
                    let offset = if mirror { 3 - k } else { *k };
                    items.push(RoutedItem::Computational {
                        layer: cnot_base + offset,
                    });
                }
                RoundStep::Swap(detail, moves) => {
                    let swaps = emit_layer(detail, mirror, &disp);
                    items.push(RoutedItem::Swaps { swaps });
                    for s in 0..4 {
                        let m = if mirror {
                            moves[s].opposite()
                        } else {
                            moves[s]
                        };
                        disp[s] = disp[s].add(m.delta());
                    }
                }
            }
        }
        items.push(RoutedItem::Computational {
            layer: next_layer + 6,
        });
        items.push(RoutedItem::Computational {
            layer: next_layer + 7,
        });
        next_layer += 8;
    }
    items.push(RoutedItem::Computational { layer: next_layer });

    let routed = RoutedCircuit {
        abstract_circuit,
        device,
        initial_placement,
        items,
    };
    let report = certify(&routed)?;
    Ok(EmbeddedMemory {
        routed,
        detectors,
        report,
        rounds,
    })
}

/// Tiles the schedule over a periodic `cells` x `cells` torus of its lattice:
/// the boundary-free analogue of [`embed_memory`], carrying only the CNOT
/// layers of each round. Every partner exchange finds its counterpart, so no
/// swap degrades into a hop; the lowered depth of the result measures the
/// schedule's bulk cost per round.
pub fn tile_torus(
    schedule: &CellSchedule,
    cells: u32,
    rounds: usize,
) -> Result<RoutedCircuit, EmbedError> {
    assert!(rounds >= 1, "tiling needs at least one round");
    let cell_report = schedule.validate()?;
    let device = DeviceGraph::torus(schedule.lattice, cells)?;
    let (v1, v2) = schedule.lattice.cell_vectors();
    let c = i64::from(cells);

    // Abstract qubit per (cell, species); grid coordinates wrap modulo the
    // 2c x 2c interleaved frame.
    let mut grid_of = Vec::new();
    let mut rest = Vec::new();
    let mut id_at: HashMap<(i64, i64), usize> = HashMap::new();
    let mut ids_of_species: [Vec<usize>; 4] = Default::default();
    for i in 0..c {
        for j in 0..c {
            for sp in Species::ALL {
                let id = grid_of.len();
                let grid = sp.cell_offset().add(Coord::new(2 * i, 2 * j));
                grid_of.push(grid);
                id_at.insert((grid.x, grid.y), id);
                ids_of_species[sp.index()].push(id);
                rest.push(
                    schedule.placement[sp.index()]
                        .add(v1.scale(i))
                        .add(v2.scale(j)),
                );
            }
        }
    }
    let initial_placement: Vec<NodeId> = rest
        .iter()
        .map(|&p| device.node(p).expect("rest position on torus"))
        .collect();

    let wrap = |g: Coord| (g.x.rem_euclid(2 * c), g.y.rem_euclid(2 * c));
    let mut abstract_circuit = Circuit::new(grid_of.len());
    let mut items = Vec::new();
    let mut next_layer = 0usize;
    let mut disp = [Coord::new(0, 0); 4];
    for round in 0..rounds {
        let mirror = round % 2 == 1;
        let step_range: Vec<usize> = if mirror {
            (0..schedule.steps.len()).rev().collect()
        } else {
            (0..schedule.steps.len()).collect()
        };
        let mut swap_idx_fwd = 0usize;
        let swap_details: Vec<&SwapLayerDetail> = schedule
            .steps
            .iter()
            .filter_map(|s| {
                if matches!(s, ScheduleStep::Swaps(_)) {
                    let d = &cell_report.swap_layers[swap_idx_fwd];
                    swap_idx_fwd += 1;
                    Some(d)
                } else {
                    None
                }
            })
            .collect();
        let mut seen_swaps = 0usize;
        let swap_ordinal = |seen: usize| {
            if mirror {
                swap_details.len() - 1 - seen
            } else {
                seen
            }
        };
        for si in step_range {
            match schedule.steps[si] {
                ScheduleStep::CnotLayer(k) => {
                    let mut gates = Vec::new();
                    for fam in families(schedule.variant, k) {
                        for &a in &ids_of_species[fam.anc.index()] {
                            let data_grid = grid_of[a].add(
                                schedule.variant.data_dir(k, fam.anc),
                            );
                            let dq = id_at[&wrap(data_grid)];
                            gates.push(match fam.anc {
                                Species::XAncilla => Gate::cnot(a, dq),
                                _ => Gate::cnot(dq, a),
                            });
                        }
                    }
                    gates.sort_unstable_by_key(|g| g.qubits().0);
                    gates.dedup();
                    abstract_circuit.push_gates(gates)?;
                    items.push(RoutedItem::Computational { layer: next_layer });
                    next_layer += 1;
                }
                ScheduleStep::Swaps(moves) => {
                    let detail = swap_details[swap_ordinal(seen_swaps)];
                    seen_swaps += 1;
                    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
                    let node = |p: Coord| device.node(p).expect("swap endpoint on torus");
                    for sw in &detail.swaps {
                        let (sp, dir) = match *sw {
                            CellSwap::Type1 { species, dir } => (species, dir),
                            CellSwap::Type2 { data, data_dir, .. } => (data, data_dir),
                        };
                        let d = if mirror { dir.opposite() } else { dir }.delta();
                        for &id in &ids_of_species[sp.index()] {
                            let from = rest[id].add(disp[sp.index()]);
                            pairs.push((node(from), node(from.add(d))));
                        }
                    }
                    items.push(RoutedItem::Swaps { swaps: pairs });
                    for s in 0..4 {
                        let m = if mirror {
                            moves[s].opposite()
                        } else {
                            moves[s]
                        };
                        disp[s] = disp[s].add(m.delta());
                    }
                }
            }
        }
    }

    let routed = RoutedCircuit {
        abstract_circuit,
        device,
        initial_placement,
        items,
    };
    certify(&routed)?;
    Ok(routed)
}

/// A routing site crossed by two or more hops within one swap run. A single
/// fault event there can spread to `order` computational qubits, with
/// probability falling as the `order`-th power of the per-swap strength.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CorrelatedMechanism {
    /// Swap run ordinal within the schedule.
    pub run: usize,
    pub node: NodeId,
    pub order: usize,
}

/// Enumerates correlated mechanisms of a routed schedule: per maximal run of
/// swap layers, every node that rests as a routing wire at the start of the
/// run and participates in two or more plain hops during it.
pub fn correlated_mechanisms(routed: &RoutedCircuit) -> Vec<CorrelatedMechanism> {
    let num_nodes = routed.device.num_nodes();
    let mut computational = vec![false; num_nodes];
    for &node in &routed.initial_placement {
        computational[node] = true;
    }
    let mut out = Vec::new();
    let mut run = 0;
    let mut in_run = false;
    let mut run_start_roles = Vec::new();
    let mut counts: HashMap<NodeId, usize> = HashMap::new();
    let flush = |counts: &mut HashMap<NodeId, usize>, run: usize, out: &mut Vec<_>| {
        let mut hits: Vec<(NodeId, usize)> =
            counts.drain().filter(|&(_, c)| c >= 2).collect();
        hits.sort_unstable();
        out.extend(hits.into_iter().map(|(node, order)| CorrelatedMechanism {
            run,
            node,
            order,
        }));
    };
    for item in &routed.items {
        match item {
            RoutedItem::Computational { .. } => {
                if in_run {
                    flush(&mut counts, run, &mut out);
                    run += 1;
                    in_run = false;
                }
            }
            RoutedItem::Swaps { swaps } => {
                if !in_run {
                    in_run = true;
                    run_start_roles.clone_from(&computational);
                }
                for &(a, b) in swaps {
                    if computational[a] != computational[b] {
                        for node in [a, b] {
                            if !run_start_roles[node] {
                                *counts.entry(node).or_insert(0) += 1;
                            }
                        }
                    }
                    computational.swap(a, b);
                }
            }
        }
    }
    if in_run {
        flush(&mut counts, run, &mut out);
    }
    out
}
