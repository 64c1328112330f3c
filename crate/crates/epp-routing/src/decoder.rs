//! Exact minimum-weight perfect-matching decoder.
//!
//! The matching graph is derived from the circuit itself: every possible
//! single fault is looked up in a [`DetectorDictionary`], its detector flips
//! are split by detector class, and each class projection becomes an edge
//! (two defects), a boundary edge (one defect), or a combination of existing
//! edges (three or four defects, decomposed like any other correlated error
//! source). Edge probabilities from distinct mechanisms combine as
//! `q1 + q2 - 2 q1 q2` and weights are `ln((1 - q) / q)`.
//!
//! Decoding is exact, not approximate: defects are partitioned into clusters
//! that provably decouple (a pair is only worth matching if its path cost
//! beats sending both defects to the boundary), each cluster is solved by
//! subset dynamic programming, and oversized clusters fall back to exhaustive
//! branch and bound. The predicted observable flip is the parity of the
//! matched paths' observable crossings.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::sim::{bits, DetectorClass, DetectorDictionary};

#[derive(Error, Debug)]
pub enum DecoderError {
    #[error("noise strength {0} outside (0, 0.5)")]
    InvalidProbability(f64),
    #[error("fault {fault_id} flips {defects:?} in one class and no decomposition into known edges exists")]
    NonGraphlike { fault_id: usize, defects: Vec<usize> },
    #[error("fault {fault_id} flips the observable without touching its detector class")]
    UndetectedObservableFlip { fault_id: usize },
    #[error("edge {defects:?} ends up more likely than not (q = {q})")]
    EdgeTooLikely { defects: Vec<usize>, q: f64 },
    #[error("detector {detector} has no path to the boundary")]
    BoundaryUnreachable { detector: usize },
}

/// Total-order f64 wrapper for heap keys.
#[derive(PartialEq, PartialOrd)]
struct Cost(f64);

impl Eq for Cost {}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Clone, Copy)]
struct EdgeAccum {
    q: f64,
    /// Probability of the dominant mechanism, which donates the parity.
    best: f64,
    observable: bool,
}

impl EdgeAccum {
    fn absorb(&mut self, p: f64, observable: bool) {
        self.q = self.q + p - 2.0 * self.q * p;
        if p > self.best {
            self.best = p;
            self.observable = observable;
        }
    }
}

type EdgeMap = HashMap<(usize, Option<usize>), EdgeAccum>;

/// One detector class's matching tables: local node ids, pairwise matched
/// path costs with observable parities, and boundary costs.
struct ClassTables {
    /// Global detector id per local node.
    nodes: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64, bool)>>,
    dist: Vec<f64>,
    path_obs: Vec<bool>,
    boundary: Vec<f64>,
    boundary_obs: Vec<bool>,
    /// Whether any edge of this class can flip the observable; if not the
    /// class never contributes to the prediction and is skipped per shot.
    has_observable: bool,
}

impl ClassTables {
    fn dist(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.nodes.len() + v]
    }

    fn path_obs(&self, u: usize, v: usize) -> bool {
        self.path_obs[u * self.nodes.len() + v]
    }
}

/// A matching decoder specialised to one circuit and one physical error rate.
pub struct PreparedDecoder {
    /// Local (class, node) of every global detector, if it is a graph node.
    locate: Vec<Option<(usize, usize)>>,
    classes: [ClassTables; 2],
}

const CLASS_ORDER: [DetectorClass; 2] = [DetectorClass::Z, DetectorClass::X];

/// Defect counts up to this size are matched by subset DP; larger clusters
/// use branch and bound.
const DP_LIMIT: usize = 16;

impl PreparedDecoder {
    pub fn new(dict: &DetectorDictionary, p: f64) -> Result<Self, DecoderError> {
        if !(0.0..0.5).contains(&p) || p == 0.0 {
            return Err(DecoderError::InvalidProbability(p));
        }
        let mut edges: [EdgeMap; 2] = [EdgeMap::new(), EdgeMap::new()];
        // Class pieces too large to be edges, decomposed after all elementary
        // edges are known.
        let mut deferred: Vec<(usize, usize, Vec<usize>, bool, f64)> = Vec::new();

        let sites = dict.sites();
        for fault_id in 0..sites.num_faults() {
            let site = sites.instance(fault_id).site;
            let p_fault = p / sites.kind(site).menu_len() as f64;
            let mut pieces: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for d in dict.flipped_detectors(fault_id) {
                let slot = class_slot(dict.detector_class(d));
                pieces[slot].push(d);
            }
            let observable = dict.observable_flip(fault_id);
            if observable && pieces[0].is_empty() {
                return Err(DecoderError::UndetectedObservableFlip { fault_id });
            }
            for (slot, piece) in pieces.into_iter().enumerate() {
                let piece_obs = observable && slot == 0;
                match piece.len() {
                    0 => {}
                    1 | 2 => {
                        accumulate(&mut edges[slot], edge_key(&piece), p_fault, piece_obs);
                    }
                    _ => deferred.push((fault_id, slot, piece, piece_obs, p_fault)),
                }
            }
        }

        for (fault_id, slot, piece, piece_obs, p_fault) in deferred {
            let blocks = decompose(&edges[slot], &piece, piece_obs)
                .ok_or(DecoderError::NonGraphlike { fault_id, defects: piece })?;
            for block in blocks {
                let obs = edges[slot][&block].observable;
                accumulate(&mut edges[slot], block, p_fault, obs);
            }
        }

        let num_detectors = dict.num_detectors();
        let mut locate = vec![None; num_detectors];
        let mut classes = Vec::with_capacity(2);
        for (slot, class_edges) in edges.iter().enumerate() {
            let tables = ClassTables::build(class_edges, num_detectors)?;
            for (local, &d) in tables.nodes.iter().enumerate() {
                locate[d] = Some((slot, local));
            }
            classes.push(tables);
        }
        let classes: [ClassTables; 2] = classes.try_into().ok().expect("two classes");
        Ok(PreparedDecoder { locate, classes })
    }

    /// Predicts the observable flip for one shot's detector outcomes.
    pub fn decode(&self, detector_mask: &[u64]) -> bool {
        let mut defects: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for d in bits::ones(detector_mask) {
            let (slot, local) = self.locate[d].expect("defect on a graph detector");
            defects[slot].push(local);
        }
        let mut prediction = false;
        for (slot, class) in self.classes.iter().enumerate() {
            if class.has_observable && !defects[slot].is_empty() {
                prediction ^= match_class(class, &defects[slot]);
            }
        }
        prediction
    }
}

fn class_slot(class: DetectorClass) -> usize {
    CLASS_ORDER.iter().position(|&c| c == class).unwrap()
}

fn edge_key(piece: &[usize]) -> (usize, Option<usize>) {
    match *piece {
        [u] => (u, None),
        [u, v] => (u.min(v), Some(u.max(v))),
        _ => unreachable!("edge pieces have one or two defects"),
    }
}

fn accumulate(edges: &mut EdgeMap, key: (usize, Option<usize>), p: f64, observable: bool) {
    match edges.entry(key) {
        Entry::Occupied(mut e) => e.get_mut().absorb(p, observable),
        Entry::Vacant(e) => {
            e.insert(EdgeAccum {
                q: p,
                best: p,
                observable,
            });
        }
    }
}

/// Splits a 3- or 4-defect class piece into known edges and boundary edges
/// whose observable parities XOR to the piece's. Among valid splits the most
/// probable one (by product of edge probabilities) wins.
fn decompose(
    edges: &EdgeMap,
    piece: &[usize],
    piece_obs: bool,
) -> Option<Vec<(usize, Option<usize>)>> {
    let mut best: Option<(f64, Vec<(usize, Option<usize>)>)> = None;
    let mut blocks = Vec::new();
    split(edges, piece, piece_obs, 0.0, &mut blocks, &mut best);
    best.map(|(_, b)| b)
}

fn split(
    edges: &EdgeMap,
    rest: &[usize],
    need_obs: bool,
    log_q: f64,
    blocks: &mut Vec<(usize, Option<usize>)>,
    best: &mut Option<(f64, Vec<(usize, Option<usize>)>)>,
) {
    let Some((&first, tail)) = rest.split_first() else {
        if !need_obs && best.as_ref().is_none_or(|(lq, _)| log_q > *lq) {
            *best = Some((log_q, blocks.clone()));
        }
        return;
    };
    let mut try_block = |key: (usize, Option<usize>), remaining: Vec<usize>, blocks: &mut Vec<_>| {
        if let Some(acc) = edges.get(&key) {
            blocks.push(key);
            split(
                edges,
                &remaining,
                need_obs ^ acc.observable,
                log_q + acc.q.ln(),
                blocks,
                best,
            );
            blocks.pop();
        }
    };
    try_block((first, None), tail.to_vec(), blocks);
    for (i, &other) in tail.iter().enumerate() {
        let mut remaining = tail.to_vec();
        remaining.remove(i);
        try_block(edge_key(&[first, other]), remaining, blocks);
    }
}

impl ClassTables {
    fn build(edges: &EdgeMap, num_detectors: usize) -> Result<Self, DecoderError> {
        let mut seen = vec![false; num_detectors];
        for (&(u, v), acc) in edges {
            if acc.q >= 0.5 {
                let mut defects = vec![u];
                defects.extend(v);
                return Err(DecoderError::EdgeTooLikely { defects, q: acc.q });
            }
            seen[u] = true;
            if let Some(v) = v {
                seen[v] = true;
            }
        }
        let nodes: Vec<usize> = (0..num_detectors).filter(|&d| seen[d]).collect();
        let local: HashMap<usize, usize> =
            nodes.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut boundary_seed = Vec::new();
        let mut has_observable = false;
        for (&(u, v), acc) in edges {
            let w = ((1.0 - acc.q) / acc.q).ln();
            has_observable |= acc.observable;
            match v {
                Some(v) => {
                    let (u, v) = (local[&u], local[&v]);
                    adjacency[u].push((v, w, acc.observable));
                    adjacency[v].push((u, w, acc.observable));
                }
                None => boundary_seed.push((local[&u], w, acc.observable)),
            }
        }

        let mut tables = ClassTables {
            nodes,
            adjacency,
            dist: vec![f64::INFINITY; n * n],
            path_obs: vec![false; n * n],
            boundary: vec![f64::INFINITY; n],
            boundary_obs: vec![false; n],
            has_observable,
        };
        for u in 0..n {
            let (dist, obs) = tables.dijkstra(&[(u, 0.0, false)]);
            tables.dist[u * n..(u + 1) * n].copy_from_slice(&dist);
            tables.path_obs[u * n..(u + 1) * n].copy_from_slice(&obs);
        }
        let (dist, obs) = tables.dijkstra(&boundary_seed);
        for (u, &d) in dist.iter().enumerate() {
            if d.is_infinite() {
                return Err(DecoderError::BoundaryUnreachable {
                    detector: tables.nodes[u],
                });
            }
            tables.boundary[u] = d;
            tables.boundary_obs[u] = obs[u];
        }
        Ok(tables)
    }

    /// Dijkstra from a seed set, tracking the observable parity of each
    /// shortest path. Ties resolve to the earliest settled predecessor, so
    /// parities are deterministic.
    fn dijkstra(&self, seeds: &[(usize, f64, bool)]) -> (Vec<f64>, Vec<bool>) {
        let n = self.adjacency.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut obs = vec![false; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &(u, w, o) in seeds {
            if w < dist[u] {
                dist[u] = w;
                obs[u] = o;
                heap.push(Reverse((Cost(w), u)));
            }
        }
        while let Some(Reverse((Cost(d), u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, w, o) in &self.adjacency[u] {
                let next = d + w;
                if next < dist[v] {
                    dist[v] = next;
                    obs[v] = obs[u] ^ o;
                    heap.push(Reverse((Cost(next), v)));
                }
            }
        }
        (dist, obs)
    }
}

/// Exact minimum-weight matching of one class's defect list; returns the
/// observable parity of the optimal pairing.
fn match_class(class: &ClassTables, defects: &[usize]) -> bool {
    // A pair is only worth matching if its path beats both boundary costs,
    // so connected components under that relation decouple exactly.
    let k = defects.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..k {
        for j in i + 1..k {
            let worth = class.dist(defects[i], defects[j])
                < class.boundary[defects[i]] + class.boundary[defects[j]];
            if worth {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut clusters: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..k {
        let root = find(&mut parent, i);
        clusters.entry(root).or_default().push(defects[i]);
    }
    let mut parity = false;
    for cluster in clusters.values() {
        parity ^= if cluster.len() <= DP_LIMIT {
            match_cluster_dp(class, cluster)
        } else {
            match_cluster_branch_bound(class, cluster)
        };
    }
    parity
}

fn match_cluster_dp(class: &ClassTables, cluster: &[usize]) -> bool {
    let k = cluster.len();
    let full = (1usize << k) - 1;
    let mut cost = vec![f64::INFINITY; full + 1];
    let mut choice = vec![u8::MAX; full + 1];
    cost[0] = 0.0;
    for set in 1..=full {
        let i = set.trailing_zeros() as usize;
        let rest = set & !(1 << i);
        let mut best = class.boundary[cluster[i]] + cost[rest];
        let mut pick = u8::MAX;
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let c = class.dist(cluster[i], cluster[j]) + cost[rest & !(1 << j)];
            if c < best {
                best = c;
                pick = j as u8;
            }
        }
        cost[set] = best;
        choice[set] = pick;
    }
    let mut parity = false;
    let mut set = full;
    while set != 0 {
        let i = set.trailing_zeros() as usize;
        match choice[set] {
            u8::MAX => {
                parity ^= class.boundary_obs[cluster[i]];
                set &= !(1 << i);
            }
            j => {
                parity ^= class.path_obs(cluster[i], cluster[j as usize]);
                set &= !(1 << i | 1 << j as usize);
            }
        }
    }
    parity
}

fn match_cluster_branch_bound(class: &ClassTables, cluster: &[usize]) -> bool {
    // Admissible per-defect bound: boundary, or half the cheapest pairing.
    let halves: Vec<f64> = cluster
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let pair = cluster
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| class.dist(u, v))
                .fold(f64::INFINITY, f64::min);
            class.boundary[u].min(pair / 2.0)
        })
        .collect();
    struct Search<'a> {
        class: &'a ClassTables,
        cluster: &'a [usize],
        halves: &'a [f64],
        matched: Vec<bool>,
        best: f64,
        best_parity: bool,
    }
    impl Search<'_> {
        fn bound(&self) -> f64 {
            self.matched
                .iter()
                .zip(self.halves)
                .filter(|(m, _)| !**m)
                .map(|(_, h)| h)
                .sum()
        }
        fn run(&mut self, acc: f64, parity: bool) {
            let Some(i) = self.matched.iter().position(|m| !m) else {
                if acc < self.best {
                    self.best = acc;
                    self.best_parity = parity;
                }
                return;
            };
            if acc + self.bound() >= self.best {
                return;
            }
            self.matched[i] = true;
            for j in i + 1..self.cluster.len() {
                if self.matched[j] {
                    continue;
                }
                self.matched[j] = true;
                self.run(
                    acc + self.class.dist(self.cluster[i], self.cluster[j]),
                    parity ^ self.class.path_obs(self.cluster[i], self.cluster[j]),
                );
                self.matched[j] = false;
            }
            self.run(
                acc + self.class.boundary[self.cluster[i]],
                parity ^ self.class.boundary_obs[self.cluster[i]],
            );
            self.matched[i] = false;
        }
    }
    let mut search = Search {
        class,
        cluster,
        halves: &halves,
        matched: vec![false; cluster.len()],
        best: f64::INFINITY,
        best_parity: false,
    };
    search.run(0.0, false);
    search.best_parity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{sample_shot, shot_rng, DetectorDictionary, FaultDictionary};
    use crate::surface_router::{memory_circuit, ScheduleVariant, SurfaceCode};

    fn prepared(distance: usize, rounds: usize, p: f64) -> (DetectorDictionary, PreparedDecoder) {
        let code = SurfaceCode::new(distance).unwrap();
        let (circuit, map) = memory_circuit(&code, ScheduleVariant::Vhhv, rounds, true).unwrap();
        let dict = DetectorDictionary::compose(&FaultDictionary::build(&circuit), &map).unwrap();
        let decoder = PreparedDecoder::new(&dict, p).unwrap();
        (dict, decoder)
    }

    /// Exhaustive matcher over a whole defect list, ignoring the cluster
    /// decomposition: global minimum weight, its parity, and whether another
    /// matching within `eps` has opposite parity.
    fn oracle(class: &ClassTables, defects: &[usize], eps: f64) -> (f64, bool, bool) {
        fn explore(
            class: &ClassTables,
            left: &mut Vec<usize>,
            acc: f64,
            parity: bool,
            found: &mut Vec<(f64, bool)>,
        ) {
            let Some(i) = left.pop() else {
                found.push((acc, parity));
                return;
            };
            explore(
                class,
                left,
                acc + class.boundary[i],
                parity ^ class.boundary_obs[i],
                found,
            );
            for pos in 0..left.len() {
                let j = left.remove(pos);
                explore(
                    class,
                    left,
                    acc + class.dist(i, j),
                    parity ^ class.path_obs(i, j),
                    found,
                );
                left.insert(pos, j);
            }
            left.push(i);
        }
        let mut found = Vec::new();
        explore(class, &mut defects.to_vec(), 0.0, false, &mut found);
        let &(min, parity) = found
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least the all-boundary matching");
        let ambiguous = found
            .iter()
            .any(|&(w, o)| (w - min).abs() <= eps && o != parity);
        (min, parity, ambiguous)
    }

    fn matching_weight(class: &ClassTables, defects: &[usize]) -> f64 {
        // Reuses the DP on each cluster and sums, mirroring match_class.
        let k = defects.len();
        let mut total = 0.0;
        let mut used = vec![false; k];
        for i in 0..k {
            if used[i] {
                continue;
            }
            let mut cluster = vec![i];
            used[i] = true;
            let mut frontier = vec![i];
            while let Some(u) = frontier.pop() {
                for v in 0..k {
                    if !used[v]
                        && class.dist(defects[u], defects[v])
                            < class.boundary[defects[u]] + class.boundary[defects[v]]
                    {
                        used[v] = true;
                        cluster.push(v);
                        frontier.push(v);
                    }
                }
            }
            let ids: Vec<usize> = cluster.iter().map(|&i| defects[i]).collect();
            let full = (1usize << ids.len()) - 1;
            let mut cost = vec![f64::INFINITY; full + 1];
            cost[0] = 0.0;
            for set in 1..=full {
                let a = set.trailing_zeros() as usize;
                let rest = set & !(1 << a);
                let mut best = class.boundary[ids[a]] + cost[rest];
                let mut others = rest;
                while others != 0 {
                    let b = others.trailing_zeros() as usize;
                    others &= others - 1;
                    best = best.min(class.dist(ids[a], ids[b]) + cost[rest & !(1 << b)]);
                }
                cost[set] = best;
            }
            total += cost[full];
        }
        total
    }

    #[test]
    fn clustered_matching_agrees_with_exhaustive_search() {
        let (dict, decoder) = prepared(3, 3, 4e-3);
        let mut mask = vec![0u64; dict.words()];
        let mut checked = 0usize;
        for shot in 0..600u64 {
            let mut rng = shot_rng(11, shot);
            sample_shot(&dict, 4e-3, &mut rng, &mut mask);
            for (slot, class) in decoder.classes.iter().enumerate() {
                let defects: Vec<usize> = bits::ones(&mask)
                    .filter_map(|d| decoder.locate[d])
                    .filter(|&(s, _)| s == slot)
                    .map(|(_, local)| local)
                    .collect();
                if defects.is_empty() || defects.len() > 10 {
                    continue;
                }
                let (oracle_w, oracle_parity, ambiguous) = oracle(class, &defects, 1e-9);
                let w = matching_weight(class, &defects);
                assert!(
                    (w - oracle_w).abs() < 1e-9,
                    "cluster weight {w} vs exhaustive {oracle_w}"
                );
                if !ambiguous {
                    assert_eq!(match_class(class, &defects), oracle_parity);
                }
                checked += 1;
            }
        }
        assert!(checked > 200, "only {checked} non-trivial syndromes checked");
    }

    #[test]
    fn every_single_fault_is_corrected() {
        let (dict, decoder) = prepared(3, 3, 1e-3);
        for fault_id in 0..dict.sites().num_faults() {
            let mask = dict.mask(fault_id);
            if bits::count_ones(mask) == 0 {
                assert!(
                    !dict.observable_flip(fault_id),
                    "fault {fault_id} flips the observable invisibly"
                );
                continue;
            }
            assert_eq!(
                decoder.decode(mask),
                dict.observable_flip(fault_id),
                "fault {fault_id} with defects {:?} miscorrected",
                dict.signature(fault_id).0,
            );
        }
    }

    #[test]
    fn branch_bound_matches_dp_on_forced_clusters() {
        let (dict, decoder) = prepared(5, 4, 8e-3);
        let mut mask = vec![0u64; dict.words()];
        let mut checked = 0usize;
        for shot in 0..400u64 {
            let mut rng = shot_rng(29, shot);
            sample_shot(&dict, 8e-3, &mut rng, &mut mask);
            for (slot, class) in decoder.classes.iter().enumerate() {
                let defects: Vec<usize> = bits::ones(&mask)
                    .filter_map(|d| decoder.locate[d])
                    .filter(|&(s, _)| s == slot)
                    .map(|(_, local)| local)
                    .collect();
                if defects.len() < 4 || defects.len() > 14 {
                    continue;
                }
                let dp_parity = match_cluster_dp(class, &defects);
                let bb_parity = match_cluster_branch_bound(class, &defects);
                // Both are exact minimisers; parities can only differ on ties.
                let (w, _, ambiguous) = oracle(class, &defects, 1e-9);
                if defects.len() <= 10 {
                    let _ = w;
                    if !ambiguous {
                        assert_eq!(dp_parity, bb_parity);
                    }
                } else {
                    assert_eq!(dp_parity, bb_parity);
                }
                checked += 1;
            }
        }
        assert!(checked > 30, "only {checked} clusters exercised");
    }

    #[test]
    fn rejects_out_of_range_probability() {
        let code = SurfaceCode::new(3).unwrap();
        let (circuit, map) = memory_circuit(&code, ScheduleVariant::Hvvh, 2, true).unwrap();
        let dict = DetectorDictionary::compose(&FaultDictionary::build(&circuit), &map).unwrap();
        assert!(matches!(
            PreparedDecoder::new(&dict, 0.0),
            Err(DecoderError::InvalidProbability(_))
        ));
        assert!(matches!(
            PreparedDecoder::new(&dict, 0.6),
            Err(DecoderError::InvalidProbability(_))
        ));
    }

    #[test]
    fn x_only_syndromes_never_flip_the_prediction() {
        let (dict, decoder) = prepared(3, 2, 2e-3);
        // Find a fault with defects only in the class that cannot flip the
        // observable and check the decoder stays quiet on it.
        let mut found = false;
        for fault_id in 0..dict.sites().num_faults() {
            let mask = dict.mask(fault_id);
            if bits::count_ones(mask) == 0 || dict.observable_flip(fault_id) {
                continue;
            }
            let all_x = dict
                .flipped_detectors(fault_id)
                .all(|d| dict.detector_class(d) == DetectorClass::X);
            if all_x {
                assert!(!decoder.decode(mask));
                found = true;
            }
        }
        assert!(found, "no purely X-class fault in the dictionary");
    }
}
