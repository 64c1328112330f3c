//! Memory-experiment orchestration: instance assembly, Monte Carlo logical
//! error rates, sweeps over physical error rates, and the two fits used to
//! compare embedded against abstract performance.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{CircuitError, Gate};
use crate::decoder::{DecoderError, PreparedDecoder};
use crate::embedder::{embed_memory, tile_torus, EmbedError};
use crate::noise::Pauli;
use crate::router::{
    certify, lower, CertifyError, CertifyReport, LoweringStats, Placement, RoutedCircuit,
    RoutedItem, SwapKind,
};
use crate::sim::{
    bits, sample_shot, shot_rng, DetectorDictionary, DetectorMapError, FaultDictionary,
    PauliFrame,
};
use crate::surface_router::{
    golden_schedule, memory_circuit, CellSchedule, CellScheduleError, ScheduleVariant,
    SurfaceCode, SurfaceCodeError,
};
use crate::topology::LatticeKind;

#[derive(Error, Debug)]
pub enum ExperimentError {
    #[error(transparent)]
    Code(#[from] SurfaceCodeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Schedule(#[from] CellScheduleError),
    #[error(transparent)]
    Detectors(#[from] DetectorMapError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Lowering(#[from] CertifyError),
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Error, Debug, PartialEq)]
pub enum FitError {
    #[error("only {usable} usable points after sub-threshold selection, need {needed}")]
    InsufficientData { usable: usize, needed: usize },
    #[error("abstract and embedded logical-rate ranges do not overlap")]
    NoOverlap,
    #[error("logical rate does not grow with p (slope {slope})")]
    DegenerateSlope { slope: f64 },
}

/// A circuit plus its fault dictionary, ready for sampling and decoding.
pub struct MemoryInstance {
    pub circuit: crate::circuit::Circuit,
    pub dict: DetectorDictionary,
}

/// Abstract-side memory experiment at the given distance.
pub fn abstract_instance(
    distance: usize,
    variant: ScheduleVariant,
    rounds: usize,
) -> Result<MemoryInstance, ExperimentError> {
    let code = SurfaceCode::new(distance)?;
    let (circuit, map) = memory_circuit(&code, variant, rounds, true)?;
    let dict = DetectorDictionary::compose(&FaultDictionary::build(&circuit), &map)?;
    Ok(MemoryInstance { circuit, dict })
}

/// Device-side memory experiment: embedded, certified, and lowered.
pub struct EmbeddedInstance {
    pub instance: MemoryInstance,
    pub certification: CertifyReport,
    pub lowering: LoweringStats,
}

pub fn embedded_instance(
    distance: usize,
    schedule: &CellSchedule,
    rounds: usize,
) -> Result<EmbeddedInstance, ExperimentError> {
    let code = SurfaceCode::new(distance)?;
    let embedded = embed_memory(&code, schedule, rounds)?;
    let lowered = lower(&embedded.routed)?;
    let dict = DetectorDictionary::compose(
        &FaultDictionary::build(&lowered.circuit),
        &embedded.detectors,
    )?;
    Ok(EmbeddedInstance {
        instance: MemoryInstance {
            circuit: lowered.circuit,
            dict,
        },
        certification: embedded.report,
        lowering: lowered.stats,
    })
}

/// Two-qubit timestep count of one syndrome-extraction round on the device,
/// measured by differencing two embedding depths so that start-up and readout
/// layers cancel.
pub fn per_round_two_qubit_depth(
    schedule: &CellSchedule,
    distance: usize,
) -> Result<usize, ExperimentError> {
    let code = SurfaceCode::new(distance)?;
    let depth = |rounds: usize| -> Result<usize, ExperimentError> {
        let embedded = embed_memory(&code, schedule, rounds)?;
        Ok(lower(&embedded.routed)?.stats.two_qubit_depth)
    };
    let grown = depth(4)? - depth(2)?;
    debug_assert_eq!(grown % 2, 0, "round structure repeats every two rounds");
    Ok(grown / 2)
}

/// Two-qubit timestep count of one round in the bulk, measured on a periodic
/// tiling so that patch boundaries contribute nothing. Boundary exchanges that
/// degrade into hops are a finite-patch artefact; this is the depth a large
/// patch approaches in its interior.
pub fn bulk_round_depth(schedule: &CellSchedule) -> Result<usize, ExperimentError> {
    let depth = |rounds: usize| -> Result<usize, ExperimentError> {
        let routed = tile_torus(schedule, 3, rounds)?;
        Ok(lower(&routed)?.stats.two_qubit_depth)
    };
    let grown = depth(4)? - depth(2)?;
    debug_assert_eq!(grown % 2, 0, "round structure repeats every two rounds");
    Ok(grown / 2)
}

/// Binomial Monte Carlo tally.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub shots: u64,
    pub failures: u64,
}

impl McEstimate {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.shots as f64
    }

    pub fn std_error(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.shots as f64).sqrt()
    }
}

/// Samples `shots` decoding attempts at physical rate `p`. Shot `i` always
/// draws from `shot_rng(seed, i)`, so results are independent of thread count
/// and chunking.
pub fn logical_error_rate(
    dict: &DetectorDictionary,
    decoder: &PreparedDecoder,
    p: f64,
    shots: u64,
    seed: u64,
) -> McEstimate {
    let failures = (0..shots)
        .into_par_iter()
        .map_init(
            || vec![0u64; dict.words()],
            |mask, shot| {
                let mut rng = shot_rng(seed, shot);
                let flipped = sample_shot(dict, p, &mut rng, mask);
                u64::from(decoder.decode(mask) != flipped)
            },
        )
        .sum();
    McEstimate { shots, failures }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub estimate: McEstimate,
}

/// Runs `logical_error_rate` across a grid of physical rates, building one
/// decoder per rate. Point `i` uses seed `seed + i`.
pub fn sweep(
    dict: &DetectorDictionary,
    ps: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    ps.iter()
        .enumerate()
        .map(|(i, &p)| {
            let decoder = PreparedDecoder::new(dict, p)?;
            Ok(SweepPoint {
                p,
                estimate: logical_error_rate(dict, &decoder, p, shots, seed + i as u64),
            })
        })
        .collect()
}

/// Exhaustive sweep over every single fault: how many are decoded to the
/// wrong observable value. A fault with an empty detector signature counts as
/// miscorrected when it flips the observable, since no decoder can see it.
pub struct SingleFaultSweep {
    pub faults: usize,
    pub miscorrected: usize,
}

pub fn single_fault_sweep(dict: &DetectorDictionary, decoder: &PreparedDecoder) -> SingleFaultSweep {
    let miscorrected = (0..dict.sites().num_faults())
        .into_par_iter()
        .filter(|&fault_id| {
            let mask = dict.mask(fault_id);
            let flips = dict.observable_flip(fault_id);
            if bits::count_ones(mask) == 0 {
                flips
            } else {
                decoder.decode(mask) != flips
            }
        })
        .count();
    SingleFaultSweep {
        faults: dict.sites().num_faults(),
        miscorrected,
    }
}

/// One injectable fault location: a swap-constituent CNOT, tagged with the
/// swap it belongs to and its position in the replayed step stream.
struct SwapSite {
    swap: usize,
    kind: SwapKind,
    wires: (usize, usize),
    pos: usize,
    run: usize,
}

/// Replay of a routed circuit as a flat gate stream with markers where each
/// block of consecutive swap layers ends.
enum AuditStep {
    Gate(Gate),
    RunEnd(usize),
}

/// A single injected fault, reduced to what the pair phase needs: its weight
/// on computational wires at the end of its own swap run, the budget that
/// weight is held to, and the full frame at that boundary.
struct FaultRecord {
    site: usize,
    weight: u8,
    budget: u8,
    frame: Vec<u64>,
}

/// Outcome of exhaustively injecting two-qubit Pauli faults after every
/// swap-constituent CNOT of a routed circuit.
///
/// Each fault is propagated to the end of the swap run that contains it and
/// weighed on computational wires against the faulty swap's budget: one error
/// for a swap with a routing or vacant wire, two for an exchange of a
/// computational pair. The residue left on routing wires then travels alone to
/// the end of the circuit and must never reach a computational wire or flip a
/// measurement. Fault pairs reuse the cached run-end frames: two faults
/// meeting at one boundary combine by XOR before weighing, faults at
/// different boundaries each answer for their own weight, and two faults on
/// the same swap share a single budget.
#[derive(Clone, Copy, Debug, Default)]
pub struct SwapFaultAudit {
    pub swap_locations: usize,
    pub single_paths: usize,
    pub pair_paths: u64,
    pub weight_violations: usize,
    pub leak_violations: usize,
    pub max_single_weight: usize,
}

pub fn swap_fault_audit(routed: &RoutedCircuit) -> Result<SwapFaultAudit, ExperimentError> {
    certify(routed)?;
    let num_nodes = routed.device.num_nodes();
    let mut placement = Placement::new(routed.initial_placement.clone(), num_nodes)
        .expect("placement was just certified");

    let mut steps = Vec::new();
    let mut sites = Vec::new();
    let mut boundaries: Vec<Vec<bool>> = Vec::new();
    let mut swap_index = 0usize;
    for (i, item) in routed.items.iter().enumerate() {
        match item {
            RoutedItem::Computational { layer } => {
                for g in routed.abstract_circuit.layers()[*layer].gates() {
                    let mapped = match *g {
                        Gate::PrepZ { q } => Gate::prep_z(placement.node_of(q)),
                        Gate::MeasZ { q } => Gate::meas_z(placement.node_of(q)),
                        Gate::H { q } => Gate::h(placement.node_of(q)),
                        Gate::Cnot { control, target } => {
                            Gate::cnot(placement.node_of(control), placement.node_of(target))
                        }
                    };
                    steps.push(AuditStep::Gate(mapped));
                }
            }
            RoutedItem::Swaps { swaps } => {
                for &(a, b) in swaps {
                    let kind =
                        if placement.is_computational(a) && placement.is_computational(b) {
                            SwapKind::Type2
                        } else {
                            SwapKind::Type1
                        };
                    let (u, v) = (a.min(b), a.max(b));
                    for leg in 0..3u8 {
                        let (c, t) = if leg == 1 { (v, u) } else { (u, v) };
                        steps.push(AuditStep::Gate(Gate::cnot(c, t)));
                        sites.push(SwapSite {
                            swap: swap_index,
                            kind,
                            wires: (u, v),
                            pos: steps.len(),
                            run: boundaries.len(),
                        });
                    }
                    swap_index += 1;
                    placement.swap_nodes(a, b);
                }
                if !matches!(routed.items.get(i + 1), Some(RoutedItem::Swaps { .. })) {
                    steps.push(AuditStep::RunEnd(boundaries.len()));
                    boundaries
                        .push((0..num_nodes).map(|n| placement.is_computational(n)).collect());
                }
            }
        }
    }

    let words = bits::words_for(num_nodes);
    let comp_weight = |frame: &PauliFrame, mask: &[bool]| {
        (0..num_nodes)
            .filter(|&n| mask[n] && frame.get(n) != Pauli::I)
            .count()
    };

    let run_single = |site_id: usize, site: &SwapSite, p1: Pauli, p2: Pauli| {
        let mut frame = PauliFrame::new(num_nodes);
        frame.apply(site.wires.0, p1);
        frame.apply(site.wires.1, p2);
        let mut record = None;
        let mut weight_violations = 0usize;
        let mut leak_violations = 0usize;
        let mut max_weight = 0usize;
        for step in &steps[site.pos..] {
            match step {
                AuditStep::Gate(g) => {
                    if frame.step(g) == Some(true) {
                        leak_violations += 1;
                    }
                }
                AuditStep::RunEnd(run) => {
                    let mask = &boundaries[*run];
                    if *run == site.run {
                        let w = comp_weight(&frame, mask);
                        let budget = match site.kind {
                            SwapKind::Type1 => 1,
                            SwapKind::Type2 => 2,
                        };
                        if w > budget {
                            weight_violations += 1;
                        }
                        max_weight = w;
                        let mut packed = vec![0u64; 2 * words];
                        let (xs, zs) = packed.split_at_mut(words);
                        for n in 0..num_nodes {
                            let p = frame.get(n);
                            if p.x_bit() {
                                bits::set(xs, n);
                            }
                            if p.z_bit() {
                                bits::set(zs, n);
                            }
                        }
                        record = Some(FaultRecord {
                            site: site_id,
                            weight: w as u8,
                            budget: budget as u8,
                            frame: packed,
                        });
                        for n in 0..num_nodes {
                            if mask[n] {
                                let p = frame.get(n);
                                frame.apply(n, p);
                            }
                        }
                    } else if record.is_some() && comp_weight(&frame, mask) != 0 {
                        leak_violations += 1;
                    }
                }
            }
        }
        let record = record.expect("every swap run is closed by a boundary");
        (record, weight_violations, leak_violations, max_weight)
    };

    let singles: Vec<_> = sites
        .par_iter()
        .enumerate()
        .flat_map_iter(|(site_id, site)| {
            Pauli::ALL.into_iter().flat_map(move |p1| {
                Pauli::ALL
                    .into_iter()
                    .filter(move |&p2| (p1, p2) != (Pauli::I, Pauli::I))
                    .map(move |p2| run_single(site_id, site, p1, p2))
            })
        })
        .collect();

    let mut audit = SwapFaultAudit {
        swap_locations: sites.len(),
        single_paths: singles.len(),
        ..Default::default()
    };
    let mut records = Vec::with_capacity(singles.len());
    for (record, weight_violations, leak_violations, max_weight) in singles {
        audit.weight_violations += weight_violations;
        audit.leak_violations += leak_violations;
        audit.max_single_weight = audit.max_single_weight.max(max_weight);
        records.push(record);
    }

    let boundary_words: Vec<Vec<u64>> = boundaries
        .iter()
        .map(|mask| {
            let mut w = vec![0u64; words];
            for (n, &c) in mask.iter().enumerate() {
                if c {
                    bits::set(&mut w, n);
                }
            }
            w
        })
        .collect();

    let (pair_paths, pair_violations) = (0..records.len())
        .into_par_iter()
        .map(|i| {
            let a = &records[i];
            let sa = &sites[a.site];
            let mut paths = 0u64;
            let mut violations = 0usize;
            for b in &records[i + 1..] {
                if a.site == b.site {
                    continue;
                }
                let sb = &sites[b.site];
                let budget = if sa.swap == sb.swap {
                    a.budget.max(b.budget)
                } else {
                    a.budget + b.budget
                } as usize;
                let weight = if sa.run == sb.run {
                    let mask = &boundary_words[sa.run];
                    (0..words)
                        .map(|k| {
                            let x = (a.frame[k] ^ b.frame[k]) & mask[k];
                            let z = (a.frame[words + k] ^ b.frame[words + k]) & mask[k];
                            (x | z).count_ones() as usize
                        })
                        .sum()
                } else {
                    (a.weight + b.weight) as usize
                };
                if weight > budget {
                    violations += 1;
                }
                paths += 1;
            }
            (paths, violations)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    audit.pair_paths = pair_paths;
    audit.weight_violations += pair_violations;

    Ok(audit)
}

/// Sub-threshold point selection shared by both fits: resolved failures, rate
/// below 0.1, relative standard error below 20%.
fn usable(points: &[SweepPoint]) -> Vec<(f64, f64, f64)> {
    points
        .iter()
        .filter_map(|pt| {
            let r = pt.estimate.rate();
            let se = pt.estimate.std_error();
            (pt.estimate.failures > 0 && r < 0.1 && se / r < 0.2)
                .then(|| (pt.p.ln(), r.ln(), se / r))
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct SlopeFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

/// Weighted least-squares power-law fit `ln p_L = intercept + slope ln p`,
/// with per-point weights from the binomial standard errors.
pub fn fit_slope(points: &[SweepPoint]) -> Result<SlopeFit, FitError> {
    let pts = usable(points);
    if pts.len() < 2 {
        return Err(FitError::InsufficientData {
            usable: pts.len(),
            needed: 2,
        });
    }
    let weights: Vec<f64> = pts.iter().map(|&(_, _, s)| 1.0 / (s * s)).collect();
    let wsum: f64 = weights.iter().sum();
    let xbar = pts
        .iter()
        .zip(&weights)
        .map(|(&(x, _, _), w)| w * x)
        .sum::<f64>()
        / wsum;
    let ybar = pts
        .iter()
        .zip(&weights)
        .map(|(&(_, y, _), w)| w * y)
        .sum::<f64>()
        / wsum;
    let sxx: f64 = pts
        .iter()
        .zip(&weights)
        .map(|(&(x, _, _), w)| w * (x - xbar) * (x - xbar))
        .sum();
    let sxy: f64 = pts
        .iter()
        .zip(&weights)
        .map(|(&(x, y, _), w)| w * (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        slope_stderr: (1.0 / sxx).sqrt(),
        intercept: ybar - slope * xbar,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct PeffFit {
    pub scale: f64,
    pub scale_stderr: f64,
}

/// Fits the horizontal scale `s` such that the embedded curve overlays the
/// abstract one under `p -> s p`: the abstract curve anchors a power law and
/// each embedded point votes for the shift that lands it on that law.
pub fn fit_peff(
    abstract_points: &[SweepPoint],
    embedded_points: &[SweepPoint],
) -> Result<PeffFit, FitError> {
    let anchor = fit_slope(abstract_points)?;
    if anchor.slope <= 0.0 {
        return Err(FitError::DegenerateSlope {
            slope: anchor.slope,
        });
    }
    let emb = usable(embedded_points);
    if emb.is_empty() {
        return Err(FitError::InsufficientData {
            usable: 0,
            needed: 1,
        });
    }
    let abs_rates: Vec<f64> = usable(abstract_points).iter().map(|&(_, y, _)| y).collect();
    let (abs_lo, abs_hi) = bounds(&abs_rates);
    let emb_rates: Vec<f64> = emb.iter().map(|&(_, y, _)| y).collect();
    let (emb_lo, emb_hi) = bounds(&emb_rates);
    if emb_lo > abs_hi || abs_lo > emb_hi {
        return Err(FitError::NoOverlap);
    }
    // ln r = intercept + slope (ln s + ln p)  =>  one ln s estimate per point.
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y, sigma) in &emb {
        let ln_s = (y - anchor.intercept) / anchor.slope - x;
        let var = (sigma / anchor.slope) * (sigma / anchor.slope);
        num += ln_s / var;
        den += 1.0 / var;
    }
    let ln_s = num / den;
    Ok(PeffFit {
        scale: ln_s.exp(),
        scale_stderr: ln_s.exp() * (1.0 / den).sqrt(),
    })
}

fn bounds(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// One emitted result row. `lattice` is the device lattice token, or
/// "abstract" for the un-routed reference curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub lattice: String,
    pub variant: ScheduleVariant,
    pub distance: usize,
    pub point: SweepPoint,
}

pub const CURVE_CSV_HEADER: &str = "lattice,variant,d,p,shots,logical_errors,p_L,stderr";

pub fn write_curve_csv(out: &mut impl Write, rows: &[CurveRow]) -> io::Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for row in rows {
        let est = row.point.estimate;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.lattice,
            row.variant,
            row.distance,
            row.point.p,
            est.shots,
            est.failures,
            est.rate(),
            est.std_error(),
        )?;
    }
    Ok(())
}

pub fn read_curve_csv(input: impl BufRead) -> Result<Vec<CurveRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line == CURVE_CSV_HEADER) {
            continue;
        }
        let fail = |reason: &str| ExperimentError::Csv {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(fail("expected 8 fields"));
        }
        let variant =
            ScheduleVariant::from_token(fields[1]).ok_or_else(|| fail("unknown variant"))?;
        let parse_u = |s: &str| s.parse::<u64>().map_err(|_| fail("bad integer"));
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| fail("bad number"));
        rows.push(CurveRow {
            lattice: fields[0].to_string(),
            variant,
            distance: parse_u(fields[2])? as usize,
            point: SweepPoint {
                p: parse_f(fields[3])?,
                estimate: McEstimate {
                    shots: parse_u(fields[4])?,
                    failures: parse_u(fields[5])?,
                },
            },
        });
    }
    Ok(rows)
}

/// Convenience accessor for fit commands reading mixed CSV files.
pub fn select_points(rows: &[CurveRow], lattice: &str, distance: usize) -> Vec<SweepPoint> {
    rows.iter()
        .filter(|r| r.lattice == lattice && r.distance == distance)
        .map(|r| r.point)
        .collect()
}

/// The p grid used by the shipped sweep defaults: geometric spacing from
/// `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let step = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| lo * step.powi(i as i32)).collect()
}

/// Dictionary of the lattice's golden schedule, checked against its shipped
/// certification counts.
pub fn golden_embedded(
    lattice: LatticeKind,
    distance: usize,
    rounds: usize,
) -> Result<EmbeddedInstance, ExperimentError> {
    embedded_instance(distance, &golden_schedule(lattice), rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synth_point(p: f64, shots: u64, rate: f64) -> SweepPoint {
        SweepPoint {
            p,
            estimate: McEstimate {
                shots,
                failures: (rate * shots as f64).round() as u64,
            },
        }
    }

    #[test]
    fn slope_fit_recovers_synthetic_power_law() {
        let points: Vec<SweepPoint> = [1e-3, 2e-3, 4e-3]
            .iter()
            .map(|&p| synth_point(p, 4_000_000, 30.0 * p * p))
            .collect();
        let fit = fit_slope(&points).unwrap();
        assert_relative_eq!(fit.slope, 2.0, max_relative = 0.02);
        assert!(fit.slope_stderr < 0.2);
    }

    #[test]
    fn peff_fit_recovers_synthetic_scale() {
        let abstract_points: Vec<SweepPoint> = [2e-3, 3e-3, 4.5e-3]
            .iter()
            .map(|&p| synth_point(p, 4_000_000, 500.0 * p * p))
            .collect();
        let embedded_points: Vec<SweepPoint> = [0.8e-3, 1.2e-3, 1.6e-3]
            .iter()
            .map(|&p| synth_point(p, 4_000_000, 500.0 * (3.1 * p) * (3.1 * p)))
            .collect();
        let fit = fit_peff(&abstract_points, &embedded_points).unwrap();
        assert_relative_eq!(fit.scale, 3.1, max_relative = 0.05);
    }

    #[test]
    fn peff_fit_rejects_disjoint_ranges() {
        let abstract_points: Vec<SweepPoint> = [4e-3, 6e-3]
            .iter()
            .map(|&p| synth_point(p, 1_000_000, 400.0 * p * p))
            .collect();
        let embedded_points: Vec<SweepPoint> = [1e-4, 2e-4]
            .iter()
            .map(|&p| synth_point(p, 10_000_000, 400.0 * p * p))
            .collect();
        assert!(matches!(
            fit_peff(&abstract_points, &embedded_points),
            Err(FitError::NoOverlap)
        ));
    }

    #[test]
    fn curve_csv_round_trips() {
        let rows = vec![
            CurveRow {
                lattice: "abstract".into(),
                variant: ScheduleVariant::Hvvh,
                distance: 3,
                point: synth_point(2e-3, 1000, 0.02),
            },
            CurveRow {
                lattice: "heavy-hex".into(),
                variant: ScheduleVariant::Hvvh,
                distance: 5,
                point: synth_point(1e-3, 5000, 0.001),
            },
        ];
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &rows).unwrap();
        let parsed = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, rows);
        assert_eq!(select_points(&parsed, "abstract", 3).len(), 1);
    }

    #[test]
    fn abstract_sampling_matches_decoding_pipeline() {
        let inst = abstract_instance(3, ScheduleVariant::Hvvh, 3).unwrap();
        let decoder = PreparedDecoder::new(&inst.dict, 2e-3).unwrap();
        let est = logical_error_rate(&inst.dict, &decoder, 2e-3, 20_000, 7);
        assert_eq!(est.shots, 20_000);
        // Far below threshold the logical rate is small but nonzero.
        assert!(est.rate() < 0.05, "rate {}", est.rate());
        let repeat = logical_error_rate(&inst.dict, &decoder, 2e-3, 20_000, 7);
        assert_eq!(est, repeat);
    }

    #[test]
    fn swap_fault_audit_finds_no_violations_on_hex() {
        let code = SurfaceCode::new(3).unwrap();
        let schedule = golden_schedule(LatticeKind::Hexagonal);
        let embedded = embed_memory(&code, &schedule, 2).unwrap();
        let audit = swap_fault_audit(&embedded.routed).unwrap();
        assert_eq!(audit.swap_locations % 3, 0);
        assert_eq!(audit.single_paths, audit.swap_locations * 15);
        assert!(audit.pair_paths > 0);
        assert_eq!(audit.weight_violations, 0);
        assert_eq!(audit.leak_violations, 0);
        assert_eq!(audit.max_single_weight, 2);
    }

    #[test]
    fn geometric_grid_spans_requested_range() {
        let grid = geometric_grid(1e-3, 8e-3, 4);
        assert_eq!(grid.len(), 4);
        assert_relative_eq!(grid[0], 1e-3);
        assert_relative_eq!(grid[3], 8e-3);
        assert_relative_eq!(grid[1] / grid[0], grid[2] / grid[1]);
    }
}
