//! Pauli-frame simulation and fault dictionaries.
//!
//! Everything simulated here is a stabilizer circuit under stochastic Pauli
//! noise, so the state never needs representing: only the Pauli frame (the
//! accumulated error relative to a noiseless reference run) is tracked, and
//! measurement outcomes are recorded as flips of the reference outcome. Flips
//! are linear over GF(2) in the injected faults, which the whole toolkit
//! leans on:
//!
//! * [`propagate_faults`] pushes an explicit fault set through a circuit and
//!   is the reference semantics.
//! * [`FaultDictionary::build`] computes, for every possible single fault,
//!   the set of measurements it flips. It back-propagates each measurement's
//!   observable through the circuit instead of forward-propagating each fault,
//!   which is cheaper by the ratio of fault count to measurement count.
//! * [`DetectorDictionary`] folds measurement flips into detector flips and a
//!   logical-observable flip per fault. Sampling a noisy shot is then a
//!   geometric skip over fault sites plus a handful of XORs, independent of
//!   circuit depth.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::noise::{FaultKind, Pauli};

/// Fixed-width bit mask helpers used for measurement and detector sets.
pub mod bits {
    pub fn words_for(bits: usize) -> usize {
        bits.div_ceil(64)
    }

    pub fn get(mask: &[u64], i: usize) -> bool {
        mask[i / 64] >> (i % 64) & 1 != 0
    }

    pub fn set(mask: &mut [u64], i: usize) {
        mask[i / 64] |= 1 << (i % 64);
    }

    pub fn flip(mask: &mut [u64], i: usize) {
        mask[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(dst: &mut [u64], src: &[u64]) {
        debug_assert_eq!(dst.len(), src.len());
        for (d, s) in dst.iter_mut().zip(src) {
            *d ^= s;
        }
    }

    pub fn count_ones(mask: &[u64]) -> usize {
        mask.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(mask: &[u64]) -> impl Iterator<Item = usize> + '_ {
        mask.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    /// Parity of the AND of two equal-length masks.
    pub fn overlap_parity(a: &[u64], b: &[u64]) -> bool {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
            & 1
            != 0
    }
}

/// One potential fault: a site (gate) and which menu alternative fires.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FaultInstance {
    /// Linear gate index in circuit traversal order.
    pub site: usize,
    /// Index into the site's fault menu.
    pub alternative: usize,
}

/// Per-gate fault site info, linearized in traversal order.
#[derive(Clone, Debug)]
pub struct SiteTable {
    sites: Vec<(Gate, FaultKind)>,
    /// Prefix sums of menu lengths: fault id range of site `s` is
    /// `base[s]..base[s + 1]`.
    base: Vec<usize>,
    num_qubits: usize,
}

impl SiteTable {
    pub fn from_circuit(circuit: &Circuit) -> Self {
        let mut sites = Vec::new();
        let mut base = vec![0];
        for gate in circuit.gates() {
            let kind = FaultKind::for_gate(gate);
            sites.push((*gate, kind));
            base.push(base.last().unwrap() + kind.menu_len());
        }
        SiteTable {
            sites,
            base,
            num_qubits: circuit.num_qubits(),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_faults(&self) -> usize {
        *self.base.last().unwrap()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gate(&self, site: usize) -> Gate {
        self.sites[site].0
    }

    pub fn kind(&self, site: usize) -> FaultKind {
        self.sites[site].1
    }

    pub fn fault_id(&self, instance: FaultInstance) -> usize {
        debug_assert!(instance.alternative < self.kind(instance.site).menu_len());
        self.base[instance.site] + instance.alternative
    }

    pub fn instance(&self, fault_id: usize) -> FaultInstance {
        let site = self.base.partition_point(|&b| b <= fault_id) - 1;
        FaultInstance {
            site,
            alternative: fault_id - self.base[site],
        }
    }

    /// The Pauli effect of a fault on the site's (first, second) qubit.
    pub fn effect(&self, instance: FaultInstance) -> (Pauli, Pauli) {
        self.kind(instance.site).effect(instance.alternative)
    }

    pub fn instances(&self) -> impl Iterator<Item = FaultInstance> + '_ {
        (0..self.num_sites()).flat_map(|site| {
            (0..self.kind(site).menu_len()).map(move |alternative| FaultInstance {
                site,
                alternative,
            })
        })
    }
}

/// Pauli frame over a qubit register: the accumulated error relative to a
/// noiseless run, in symplectic (x, z) components.
#[derive(Clone, Debug)]
pub struct PauliFrame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(num_qubits: usize) -> Self {
        PauliFrame {
            x: vec![false; num_qubits],
            z: vec![false; num_qubits],
        }
    }

    pub fn clear(&mut self) {
        self.x.fill(false);
        self.z.fill(false);
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x[q], self.z[q])
    }

    pub fn apply(&mut self, q: usize, p: Pauli) {
        self.x[q] ^= p.x_bit();
        self.z[q] ^= p.z_bit();
    }

    /// Advances the frame through an ideal gate. For measurements the flip of
    /// the recorded outcome is returned.
    pub fn step(&mut self, gate: &Gate) -> Option<bool> {
        match *gate {
            Gate::PrepZ { q } => {
                self.x[q] = false;
                self.z[q] = false;
                None
            }
            Gate::MeasZ { q } => Some(self.x[q]),
            Gate::H { q } => {
                std::mem::swap(&mut self.x[q], &mut self.z[q]);
                None
            }
            Gate::Cnot { control, target } => {
                self.x[target] ^= self.x[control];
                self.z[control] ^= self.z[target];
                None
            }
        }
    }
}

/// Reference semantics: forward-propagates an explicit fault set and returns
/// the measurement flips in traversal order.
pub fn propagate_faults(circuit: &Circuit, faults: &[FaultInstance]) -> Vec<bool> {
    let mut frame = PauliFrame::new(circuit.num_qubits());
    let mut flips = Vec::with_capacity(circuit.num_measurements());
    let mut site = 0usize;
    for layer in circuit.layers() {
        for gate in layer.gates() {
            let kind = FaultKind::for_gate(gate);
            let inject = |frame: &mut PauliFrame, before: bool| {
                for f in faults.iter().filter(|f| f.site == site) {
                    if kind.before_gate() == before {
                        let (p1, p2) = kind.effect(f.alternative);
                        let (q1, q2) = gate.qubits();
                        frame.apply(q1, p1);
                        if let Some(q2) = q2 {
                            frame.apply(q2, p2);
                        }
                    }
                }
            };
            inject(&mut frame, true);
            if let Some(flip) = frame.step(gate) {
                flips.push(flip);
            }
            inject(&mut frame, false);
            site += 1;
        }
    }
    flips
}

/// For every possible single fault, the set of measurements it flips.
///
/// Masks are fault-major bit masks over measurement indices. By linearity the
/// flips of any fault set are the XOR of its members' masks.
#[derive(Debug)]
pub struct FaultDictionary {
    sites: SiteTable,
    num_measurements: usize,
    words: usize,
    masks: Vec<u64>,
}

impl FaultDictionary {
    pub fn build(circuit: &Circuit) -> Self {
        let sites = SiteTable::from_circuit(circuit);
        let num_measurements = circuit.num_measurements();
        let words = bits::words_for(num_measurements);
        let num_faults = sites.num_faults();

        // Measurement index -> site index.
        let meas_sites: Vec<usize> = (0..sites.num_sites())
            .filter(|&s| sites.gate(s).is_measurement())
            .collect();

        // Back-propagate each measurement independently, collecting the fault
        // ids that flip it.
        let per_measurement: Vec<Vec<u32>> = meas_sites
            .par_iter()
            .map(|&m_site| back_propagate(&sites, m_site))
            .collect();

        let mut masks = vec![0u64; num_faults * words];
        for (m, flipped) in per_measurement.iter().enumerate() {
            for &fid in flipped {
                bits::set(&mut masks[fid as usize * words..][..words], m);
            }
        }
        FaultDictionary {
            sites,
            num_measurements,
            words,
            masks,
        }
    }

    pub fn sites(&self) -> &SiteTable {
        &self.sites
    }

    pub fn num_measurements(&self) -> usize {
        self.num_measurements
    }

    pub fn mask(&self, fault_id: usize) -> &[u64] {
        &self.masks[fault_id * self.words..][..self.words]
    }

    /// Measurement indices flipped by one fault.
    pub fn flipped_measurements(&self, fault_id: usize) -> impl Iterator<Item = usize> + '_ {
        bits::ones(self.mask(fault_id))
    }
}

/// Walks the circuit backwards from a measurement site, maintaining the dual
/// functional of that measurement's flip bit as a Pauli (z-component `a`
/// pairs with X errors, x-component `b` with Z errors). A fault flips the
/// measurement iff its effect anticommutes with the functional at the fault's
/// insertion point.
fn back_propagate(sites: &SiteTable, m_site: usize) -> Vec<u32> {
    let mut a = vec![false; sites.num_qubits()]; // pairs with x components
    let mut b = vec![false; sites.num_qubits()]; // pairs with z components
    let mut flipped = Vec::new();
    for site in (0..=m_site).rev() {
        let gate = sites.gate(site);
        let kind = sites.kind(site);
        if site == m_site {
            a[gate.qubits().0] = true;
        }
        let evaluate = |a: &[bool], b: &[bool], flipped: &mut Vec<u32>| {
            let (q1, q2) = gate.qubits();
            for alt in 0..kind.menu_len() {
                let (p1, p2) = kind.effect(alt);
                let mut flip = (a[q1] & p1.x_bit()) ^ (b[q1] & p1.z_bit());
                if let Some(q2) = q2 {
                    flip ^= (a[q2] & p2.x_bit()) ^ (b[q2] & p2.z_bit());
                }
                if flip {
                    flipped.push(
                        sites.fault_id(FaultInstance {
                            site,
                            alternative: alt,
                        }) as u32,
                    );
                }
            }
        };
        // After-gate faults see the functional before pulling back through
        // the gate; before-gate faults (measurement flips) see it after.
        if !kind.before_gate() {
            evaluate(&a, &b, &mut flipped);
        }
        match gate {
            Gate::PrepZ { q } => {
                a[q] = false;
                b[q] = false;
            }
            Gate::MeasZ { .. } => {}
            Gate::H { q } => {
                std::mem::swap(&mut a[q], &mut b[q]);
                let _ = q;
            }
            Gate::Cnot { control, target } => {
                a[control] ^= a[target];
                b[target] ^= b[control];
            }
        }
        if kind.before_gate() {
            evaluate(&a, &b, &mut flipped);
        }
    }
    flipped
}

/// Which stabilizer type a detector compares.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum DetectorClass {
    X,
    Z,
}

/// One detector: a parity of measurement outcomes that is deterministic in
/// the absence of faults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub measurements: Vec<usize>,
    pub class: DetectorClass,
}

/// Detector definitions plus the logical observable for one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorMap {
    pub detectors: Vec<DetectorSpec>,
    /// Measurement indices whose parity is the logical observable.
    pub observable: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DetectorMapError {
    #[error("detector {detector} references measurement {measurement} of {available}")]
    MeasurementOutOfRange {
        detector: usize,
        measurement: usize,
        available: usize,
    },
    #[error("observable references measurement {measurement} of {available}")]
    ObservableOutOfRange {
        measurement: usize,
        available: usize,
    },
}

impl DetectorMap {
    pub fn validate(&self, num_measurements: usize) -> Result<(), DetectorMapError> {
        for (d, spec) in self.detectors.iter().enumerate() {
            if let Some(&m) = spec.measurements.iter().find(|&&m| m >= num_measurements) {
                return Err(DetectorMapError::MeasurementOutOfRange {
                    detector: d,
                    measurement: m,
                    available: num_measurements,
                });
            }
        }
        if let Some(&m) = self.observable.iter().find(|&&m| m >= num_measurements) {
            return Err(DetectorMapError::ObservableOutOfRange {
                measurement: m,
                available: num_measurements,
            });
        }
        Ok(())
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }
}

/// Per-fault detector flips and observable flip: the fault dictionary folded
/// through a detector map. This is the sampling and decoding workhorse; it
/// depends only on the circuit, not on the noise strength.
#[derive(Debug)]
pub struct DetectorDictionary {
    sites: SiteTable,
    classes: Vec<DetectorClass>,
    words: usize,
    masks: Vec<u64>,
    observable_flip: Vec<bool>,
}

impl DetectorDictionary {
    pub fn compose(dict: &FaultDictionary, map: &DetectorMap) -> Result<Self, DetectorMapError> {
        map.validate(dict.num_measurements())?;
        let meas_words = dict.words;
        // Detector and observable masks over measurement indices.
        let as_mask = |measurements: &[usize]| {
            let mut m = vec![0u64; meas_words];
            for &i in measurements {
                bits::flip(&mut m, i);
            }
            m
        };
        let detector_masks: Vec<Vec<u64>> = map
            .detectors
            .iter()
            .map(|d| as_mask(&d.measurements))
            .collect();
        let observable_mask = as_mask(&map.observable);

        let num_faults = dict.sites.num_faults();
        let words = bits::words_for(map.num_detectors());
        let mut masks = vec![0u64; num_faults * words];
        let mut observable_flip = vec![false; num_faults];
        masks
            .par_chunks_mut(words)
            .zip(observable_flip.par_iter_mut())
            .enumerate()
            .for_each(|(fid, (mask, obs))| {
                let fault_mask = dict.mask(fid);
                for (d, dm) in detector_masks.iter().enumerate() {
                    if bits::overlap_parity(fault_mask, dm) {
                        bits::set(mask, d);
                    }
                }
                *obs = bits::overlap_parity(fault_mask, &observable_mask);
            });
        Ok(DetectorDictionary {
            sites: dict.sites.clone(),
            classes: map.detectors.iter().map(|d| d.class).collect(),
            words,
            masks,
            observable_flip,
        })
    }

    pub fn sites(&self) -> &SiteTable {
        &self.sites
    }

    pub fn num_detectors(&self) -> usize {
        self.classes.len()
    }

    pub fn detector_class(&self, d: usize) -> DetectorClass {
        self.classes[d]
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn mask(&self, fault_id: usize) -> &[u64] {
        &self.masks[fault_id * self.words..][..self.words]
    }

    pub fn observable_flip(&self, fault_id: usize) -> bool {
        self.observable_flip[fault_id]
    }

    /// Detector indices flipped by one fault.
    pub fn flipped_detectors(&self, fault_id: usize) -> impl Iterator<Item = usize> + '_ {
        bits::ones(self.mask(fault_id))
    }

    /// The (detector flips, observable flip) signature of one fault.
    pub fn signature(&self, fault_id: usize) -> (Vec<usize>, bool) {
        (
            self.flipped_detectors(fault_id).collect(),
            self.observable_flip(fault_id),
        )
    }
}

/// Deterministic per-shot RNG: decorrelates shots so the stream is identical
/// regardless of how shots are scheduled across threads.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ shot.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Samples one noisy shot: every site faults independently with probability
/// `p`, faulting sites pick a menu alternative uniformly. Returns the
/// observable flip; detector flips are XORed into `detectors_out` (which is
/// cleared first).
///
/// Site iteration uses geometric skips, so the cost scales with the expected
/// fault count rather than the circuit size.
pub fn sample_shot(
    dict: &DetectorDictionary,
    p: f64,
    rng: &mut impl Rng,
    detectors_out: &mut [u64],
) -> bool {
    assert_eq!(detectors_out.len(), dict.words);
    detectors_out.fill(0);
    let mut observable = false;
    if p <= 0.0 {
        return observable;
    }
    let num_sites = dict.sites.num_sites();
    let ln_q = (1.0 - p).ln(); // -inf when p == 1: skip becomes 0
    let mut site = 0usize;
    loop {
        if p < 1.0 {
            let u: f64 = rng.gen::<f64>();
            // Geometric skip: number of non-faulting sites before the next
            // faulting one.
            let skip = ((1.0 - u).ln() / ln_q).floor();
            if !skip.is_finite() || skip >= (num_sites - site) as f64 {
                break;
            }
            site += skip as usize;
        }
        if site >= num_sites {
            break;
        }
        let menu = dict.sites.kind(site).menu_len();
        let alternative = if menu == 1 { 0 } else { rng.gen_range(0..menu) };
        let fid = dict.sites.fault_id(FaultInstance { site, alternative });
        bits::xor_assign(detectors_out, dict.mask(fid));
        observable ^= dict.observable_flip(fid);
        site += 1;
        if site >= num_sites {
            break;
        }
    }
    observable
}

pub mod tableau {
    //! Reference stabilizer simulator with sign tracking.
    //!
    //! Slow but trustworthy: unlike the Pauli-frame machinery above, which
    //! presumes measurement parities of interest are deterministic, this
    //! simulator computes actual outcomes (drawing random bits where physics
    //! demands them). Its role is validation: a detector definition is sound
    //! precisely when its parity agrees across independently seeded runs.

    use rand::Rng;

    use crate::circuit::{Circuit, Gate};

    /// Aaronson-Gottesman tableau: destabilizer rows then stabilizer rows.
    pub struct TableauSim {
        n: usize,
        /// 2n rows; row i is destabilizer i for i < n, stabilizer i - n after.
        x: Vec<Vec<bool>>,
        z: Vec<Vec<bool>>,
        r: Vec<bool>,
    }

    impl TableauSim {
        /// All qubits in |0>.
        pub fn new(n: usize) -> Self {
            let mut x = vec![vec![false; n]; 2 * n];
            let mut z = vec![vec![false; n]; 2 * n];
            for q in 0..n {
                x[q][q] = true; // destabilizer X_q
                z[n + q][q] = true; // stabilizer Z_q
            }
            TableauSim {
                n,
                x,
                z,
                r: vec![false; 2 * n],
            }
        }

        /// Phase exponent contribution of multiplying single-qubit Paulis
        /// (x1, z1) * (x2, z2), in units of i, mod 4 (returns -1, 0, or 1).
        fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i8 {
            match (x1, z1) {
                (false, false) => 0,
                (true, true) => (z2 as i8) - (x2 as i8),
                (true, false) => (z2 as i8) * (2 * (x2 as i8) - 1),
                (false, true) => (x2 as i8) * (1 - 2 * (z2 as i8)),
            }
        }

        /// row[h] *= row[i]
        fn rowsum(&mut self, h: usize, i: usize) {
            let mut phase: i32 = 2 * (self.r[h] as i32) + 2 * (self.r[i] as i32);
            for q in 0..self.n {
                phase += i32::from(Self::g(self.x[i][q], self.z[i][q], self.x[h][q], self.z[h][q]));
            }
            debug_assert!(phase.rem_euclid(2) == 0);
            self.r[h] = phase.rem_euclid(4) == 2;
            for q in 0..self.n {
                self.x[h][q] ^= self.x[i][q];
                self.z[h][q] ^= self.z[i][q];
            }
        }

        fn hadamard(&mut self, q: usize) {
            for i in 0..2 * self.n {
                self.r[i] ^= self.x[i][q] & self.z[i][q];
                let t = self.x[i][q];
                self.x[i][q] = self.z[i][q];
                self.z[i][q] = t;
            }
        }

        fn cnot(&mut self, c: usize, t: usize) {
            for i in 0..2 * self.n {
                self.r[i] ^= self.x[i][c] & self.z[i][t] & !(self.x[i][t] ^ self.z[i][c]);
                self.x[i][t] ^= self.x[i][c];
                self.z[i][c] ^= self.z[i][t];
            }
        }

        fn pauli_x(&mut self, q: usize) {
            for i in 0..2 * self.n {
                self.r[i] ^= self.z[i][q];
            }
        }

        fn measure_z(&mut self, q: usize, rng: &mut impl Rng) -> bool {
            let n = self.n;
            if let Some(p) = (n..2 * n).find(|&i| self.x[i][q]) {
                // Random outcome: Z_q anticommutes with stabilizer p.
                for i in (0..2 * n).filter(|&i| i != p) {
                    if self.x[i][q] {
                        self.rowsum(i, p);
                    }
                }
                // Destabilizer slot inherits the old stabilizer.
                self.x[p - n] = self.x[p].clone();
                self.z[p - n] = self.z[p].clone();
                self.r[p - n] = self.r[p];
                self.x[p].fill(false);
                self.z[p].fill(false);
                self.z[p][q] = true;
                let outcome = rng.gen_bool(0.5);
                self.r[p] = outcome;
                outcome
            } else {
                // Deterministic outcome: accumulate into a scratch row.
                let scratch = self.x.len();
                self.x.push(vec![false; n]);
                self.z.push(vec![false; n]);
                self.r.push(false);
                for i in 0..n {
                    if self.x[i][q] {
                        self.rowsum(scratch, i + n);
                    }
                }
                let outcome = self.r[scratch];
                self.x.pop();
                self.z.pop();
                self.r.pop();
                outcome
            }
        }

        /// Applies one gate; measurements return their outcome.
        pub fn apply(&mut self, gate: &Gate, rng: &mut impl Rng) -> Option<bool> {
            match *gate {
                Gate::PrepZ { q } => {
                    if self.measure_z(q, rng) {
                        self.pauli_x(q);
                    }
                    None
                }
                Gate::MeasZ { q } => Some(self.measure_z(q, rng)),
                Gate::H { q } => {
                    self.hadamard(q);
                    None
                }
                Gate::Cnot { control, target } => {
                    self.cnot(control, target);
                    None
                }
            }
        }

        /// Runs a whole circuit, returning measurement outcomes in traversal
        /// order.
        pub fn run(circuit: &Circuit, rng: &mut impl Rng) -> Vec<bool> {
            let mut sim = TableauSim::new(circuit.num_qubits());
            let mut outcomes = Vec::with_capacity(circuit.num_measurements());
            for layer in circuit.layers() {
                for gate in layer.gates() {
                    if let Some(m) = sim.apply(gate, rng) {
                        outcomes.push(m);
                    }
                }
            }
            outcomes
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// prep, prep | cnot | meas, meas
    fn spread_circuit() -> Circuit {
        let mut c = Circuit::new(2);
        c.push_gates(vec![Gate::prep_z(0), Gate::prep_z(1)]).unwrap();
        c.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        c.push_gates(vec![Gate::meas_z(0), Gate::meas_z(1)]).unwrap();
        c
    }

    #[test]
    fn prep_flip_spreads_through_cnot() {
        let c = spread_circuit();
        // X after the control's reset flips both measurements.
        let flips = propagate_faults(&c, &[FaultInstance { site: 0, alternative: 0 }]);
        assert_eq!(flips, vec![true, true]);
        // X after the target's reset flips only the target measurement.
        let flips = propagate_faults(&c, &[FaultInstance { site: 1, alternative: 0 }]);
        assert_eq!(flips, vec![false, true]);
    }

    #[test]
    fn cnot_fault_menu_matches_propagation() {
        let c = spread_circuit();
        let sites = SiteTable::from_circuit(&c);
        // Site 2 is the CNOT. Z (x) I after it flips nothing measurable;
        // I (x) X flips the target's measurement only.
        for alt in 0..15 {
            let (p1, p2) = sites.kind(2).effect(alt);
            let flips = propagate_faults(&c, &[FaultInstance { site: 2, alternative: alt }]);
            assert_eq!(flips[0], p1.x_bit(), "first leg of {p1}{p2}");
            assert_eq!(flips[1], p2.x_bit(), "second leg of {p1}{p2}");
        }
    }

    #[test]
    fn hadamard_exposes_z_faults() {
        let mut c = Circuit::new(1);
        c.push_gates(vec![Gate::prep_z(0)]).unwrap();
        c.push_gates(vec![Gate::h(0)]).unwrap();
        c.push_gates(vec![Gate::h(0)]).unwrap();
        c.push_gates(vec![Gate::meas_z(0)]).unwrap();
        // Z between the Hadamards acts like X at the measurement.
        let flips = propagate_faults(&c, &[FaultInstance { site: 1, alternative: 2 }]);
        assert_eq!(flips, vec![true]);
        // Z after the second Hadamard does not.
        let flips = propagate_faults(&c, &[FaultInstance { site: 2, alternative: 2 }]);
        assert_eq!(flips, vec![false]);
    }

    #[test]
    fn measurement_flip_faults_flip_their_own_outcome() {
        let c = spread_circuit();
        let flips = propagate_faults(&c, &[FaultInstance { site: 3, alternative: 0 }]);
        assert_eq!(flips, vec![true, false]);
        let flips = propagate_faults(&c, &[FaultInstance { site: 4, alternative: 0 }]);
        assert_eq!(flips, vec![false, true]);
    }

    /// A richer hand circuit: mid-circuit measurement with re-preparation,
    /// Hadamards, and crossing CNOTs over four qubits.
    fn mixed_circuit() -> Circuit {
        let mut c = Circuit::new(4);
        c.push_gates(vec![
            Gate::prep_z(0),
            Gate::prep_z(1),
            Gate::prep_z(2),
            Gate::prep_z(3),
        ])
        .unwrap();
        c.push_gates(vec![Gate::h(0), Gate::h(2)]).unwrap();
        c.push_gates(vec![Gate::cnot(0, 1), Gate::cnot(2, 3)]).unwrap();
        c.push_gates(vec![Gate::cnot(1, 2)]).unwrap();
        c.push_gates(vec![Gate::meas_z(2)]).unwrap();
        c.push_gates(vec![Gate::prep_z(2)]).unwrap();
        c.push_gates(vec![Gate::cnot(3, 2)]).unwrap();
        c.push_gates(vec![Gate::h(0)]).unwrap();
        c.push_gates(vec![
            Gate::meas_z(0),
            Gate::meas_z(1),
            Gate::meas_z(2),
            Gate::meas_z(3),
        ])
        .unwrap();
        c
    }

    #[test]
    fn dictionary_agrees_with_forward_propagation() {
        let c = mixed_circuit();
        let dict = FaultDictionary::build(&c);
        for inst in dict.sites().instances().collect::<Vec<_>>() {
            let forward = propagate_faults(&c, &[inst]);
            let fid = dict.sites().fault_id(inst);
            let from_dict: Vec<bool> = (0..c.num_measurements())
                .map(|m| bits::get(dict.mask(fid), m))
                .collect();
            assert_eq!(from_dict, forward, "fault {inst:?}");
        }
    }

    #[test]
    fn dictionary_is_linear_over_fault_pairs() {
        let c = mixed_circuit();
        let dict = FaultDictionary::build(&c);
        let instances: Vec<_> = dict.sites().instances().collect();
        // All pairs: forward propagation of both equals XOR of single masks.
        for (i, &f1) in instances.iter().enumerate() {
            for &f2 in &instances[i + 1..] {
                let forward = propagate_faults(&c, &[f1, f2]);
                let (id1, id2) = (dict.sites().fault_id(f1), dict.sites().fault_id(f2));
                for m in 0..c.num_measurements() {
                    let xored = bits::get(dict.mask(id1), m) ^ bits::get(dict.mask(id2), m);
                    assert_eq!(xored, forward[m], "{f1:?} + {f2:?} at measurement {m}");
                }
            }
        }
    }

    #[test]
    fn detector_dictionary_folds_parities() {
        let c = spread_circuit();
        let dict = FaultDictionary::build(&c);
        let map = DetectorMap {
            detectors: vec![
                DetectorSpec {
                    measurements: vec![0, 1],
                    class: DetectorClass::Z,
                },
                DetectorSpec {
                    measurements: vec![1],
                    class: DetectorClass::X,
                },
            ],
            observable: vec![0],
        };
        let det = DetectorDictionary::compose(&dict, &map).unwrap();
        // X after control reset flips both measurements: parity detector
        // stays quiet, single-measurement detector fires, observable flips.
        let fid = dict.sites().fault_id(FaultInstance { site: 0, alternative: 0 });
        assert_eq!(det.signature(fid), (vec![1], true));
        // X after target reset: parity detector and single both fire.
        let fid = dict.sites().fault_id(FaultInstance { site: 1, alternative: 0 });
        assert_eq!(det.signature(fid), (vec![0, 1], false));
    }

    #[test]
    fn detector_map_validation_catches_bad_indices() {
        let c = spread_circuit();
        let dict = FaultDictionary::build(&c);
        let map = DetectorMap {
            detectors: vec![DetectorSpec {
                measurements: vec![7],
                class: DetectorClass::Z,
            }],
            observable: vec![],
        };
        assert_eq!(
            DetectorDictionary::compose(&dict, &map).unwrap_err(),
            DetectorMapError::MeasurementOutOfRange {
                detector: 0,
                measurement: 7,
                available: 2
            }
        );
    }

    #[test]
    fn sampling_is_deterministic_and_respects_extremes() {
        let c = mixed_circuit();
        let dict = FaultDictionary::build(&c);
        let map = DetectorMap {
            detectors: vec![DetectorSpec {
                measurements: vec![0, 3],
                class: DetectorClass::Z,
            }],
            observable: vec![4],
        };
        let det = DetectorDictionary::compose(&dict, &map).unwrap();
        let mut out1 = vec![0u64; det.words()];
        let mut out2 = vec![0u64; det.words()];

        let mut r1 = shot_rng(42, 7);
        let mut r2 = shot_rng(42, 7);
        let o1 = sample_shot(&det, 0.3, &mut r1, &mut out1);
        let o2 = sample_shot(&det, 0.3, &mut r2, &mut out2);
        assert_eq!((o1, &out1), (o2, &out2));

        let o = sample_shot(&det, 0.0, &mut shot_rng(1, 1), &mut out1);
        assert!(!o);
        assert!(out1.iter().all(|&w| w == 0));

        // p = 1: every site faults; the shot is the XOR of one alternative
        // per site, so repeated sampling stays deterministic per rng stream.
        let mut r1 = shot_rng(9, 0);
        let mut r2 = shot_rng(9, 0);
        let o1 = sample_shot(&det, 1.0, &mut r1, &mut out1);
        let o2 = sample_shot(&det, 1.0, &mut r2, &mut out2);
        assert_eq!((o1, out1), (o2, out2));
    }

    #[test]
    fn sampled_fault_rate_matches_p() {
        // Count faulting sites via a dictionary whose detectors are single
        // measurements; compare the empirical mean against p within 5 sigma.
        let mut c = Circuit::new(1);
        c.push_gates(vec![Gate::prep_z(0)]).unwrap();
        for _ in 0..50 {
            c.push_gates(vec![Gate::h(0)]).unwrap();
        }
        c.push_gates(vec![Gate::meas_z(0)]).unwrap();
        let dict = FaultDictionary::build(&c);
        let p = 0.07;
        let shots = 20_000u64;
        let map = DetectorMap {
            detectors: vec![DetectorSpec {
                measurements: vec![0],
                class: DetectorClass::Z,
            }],
            observable: vec![],
        };
        let det = DetectorDictionary::compose(&dict, &map).unwrap();
        let mut out = vec![0u64; det.words()];
        let mut fired = 0u64;
        for shot in 0..shots {
            let mut rng = shot_rng(1234, shot);
            sample_shot(&det, p, &mut rng, &mut out);
            if bits::get(&out, 0) {
                fired += 1;
            }
        }
        // Each H site flips the final measurement with probability 2p/3:
        // whatever the remaining Hadamard count, exactly two of the three
        // Pauli alternatives end with an X component. The reset and the
        // measurement flip with probability p. Fold the independent flip
        // odds into the exact final flip probability.
        let flip_final = {
            let mut even = 1.0 - p;
            for _ in 0..50 {
                let f = p * 2.0 / 3.0;
                even = even * (1.0 - f) + (1.0 - even) * f;
            }
            1.0 - (even * (1.0 - p) + (1.0 - even) * p)
        };
        let mean = fired as f64 / shots as f64;
        let sigma = (flip_final * (1.0 - flip_final) / shots as f64).sqrt();
        assert!(
            (mean - flip_final).abs() < 5.0 * sigma,
            "mean {mean:.4} expected {flip_final:.4} sigma {sigma:.5}"
        );
    }

    #[test]
    fn tableau_ghz_outcomes_agree() {
        let mut c = Circuit::new(3);
        c.push_gates(vec![Gate::prep_z(0), Gate::prep_z(1), Gate::prep_z(2)])
            .unwrap();
        c.push_gates(vec![Gate::h(0)]).unwrap();
        c.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        c.push_gates(vec![Gate::cnot(1, 2)]).unwrap();
        c.push_gates(vec![Gate::meas_z(0), Gate::meas_z(1), Gate::meas_z(2)])
            .unwrap();
        let mut saw_one = false;
        let mut saw_zero = false;
        for seed in 0..32 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = tableau::TableauSim::run(&c, &mut rng);
            assert_eq!(out[0], out[1]);
            assert_eq!(out[1], out[2]);
            saw_one |= out[0];
            saw_zero |= !out[0];
        }
        assert!(saw_one && saw_zero, "GHZ outcome should be random");
    }

    #[test]
    fn tableau_deterministic_outcomes() {
        // Prepared |0>, CNOT ladder, measured in Z: all outcomes forced to 0.
        let mut c = Circuit::new(4);
        c.push_gates((0..4).map(Gate::prep_z).collect()).unwrap();
        c.push_gates(vec![Gate::cnot(0, 1), Gate::cnot(2, 3)]).unwrap();
        c.push_gates(vec![Gate::cnot(1, 2)]).unwrap();
        c.push_gates((0..4).map(Gate::meas_z).collect()).unwrap();
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(tableau::TableauSim::run(&c, &mut rng), vec![false; 4]);
        }
    }

    #[test]
    fn tableau_prep_resets_entangled_qubit() {
        // Entangle, reset one half, measure both: the reset qubit reads 0 and
        // the partner keeps a random but now independent value.
        let mut c = Circuit::new(2);
        c.push_gates(vec![Gate::prep_z(0), Gate::prep_z(1)]).unwrap();
        c.push_gates(vec![Gate::h(0)]).unwrap();
        c.push_gates(vec![Gate::cnot(0, 1)]).unwrap();
        c.push_gates(vec![Gate::prep_z(0)]).unwrap();
        c.push_gates(vec![Gate::meas_z(0), Gate::meas_z(1)]).unwrap();
        for seed in 0..16 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = tableau::TableauSim::run(&c, &mut rng);
            assert!(!out[0]);
        }
    }
}
