//! Device connectivity graphs.
//!
//! Two degree-3 lattices are built in: the heavy-hexagon lattice (10 sites per
//! translation cell) and the hexagonal lattice in brick-wall form (4 sites per
//! cell). Both are defined by an infinite-lattice site rule plus integer cell
//! vectors, so the same rule yields finite rectangular regions for embedding
//! and small periodic tori for unit-cell schedule search. Arbitrary device
//! graphs can also be loaded from an explicit node/edge description.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node index into a [`DeviceGraph`]. Dense, assigned in (y, x) coordinate
/// order at construction time.
pub type NodeId = usize;

/// Edge index into a [`DeviceGraph`]. Dense, assigned in sorted endpoint
/// order, so "lowest edge id" is a deterministic tie-break.
pub type EdgeId = usize;

/// Integer lattice coordinate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: i64,
    pub y: i64,
}

impl Coord {
    pub const fn new(x: i64, y: i64) -> Self {
        Coord { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Coord::new(self.x + dx, self.y + dy)
    }

    pub fn add(self, other: Coord) -> Self {
        Coord::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Coord) -> Self {
        Coord::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, k: i64) -> Self {
        Coord::new(self.x * k, self.y * k)
    }
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// How a device qubit is used by an embedding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Role {
    /// Carries an abstract circuit qubit.
    Computational,
    /// Ancillary wire used only to move computational qubits around.
    Routing,
}

/// Built-in translation-invariant lattice families.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    /// Heavy-hexagon lattice: full rows on even y, sparse connector sites on
    /// odd y. 10 sites per 4x4 cell, 12-site faces, maximum degree 3.
    HeavyHex,
    /// Hexagonal lattice in brick-wall form: every site present, full vertical
    /// chains, alternating horizontal links. 4 sites per 2x2 cell, degree 3.
    Hexagonal,
}

impl LatticeKind {
    /// Translation vectors of the unit cell.
    pub fn cell_vectors(self) -> (Coord, Coord) {
        match self {
            LatticeKind::HeavyHex => (Coord::new(4, 0), Coord::new(0, 4)),
            LatticeKind::Hexagonal => (Coord::new(2, 0), Coord::new(0, 2)),
        }
    }

    /// Sites of the fundamental cell, offsets from the cell origin.
    pub fn cell_sites(self) -> &'static [Coord] {
        const HEAVY_HEX: [Coord; 10] = [
            Coord::new(0, 0),
            Coord::new(1, 0),
            Coord::new(2, 0),
            Coord::new(3, 0),
            Coord::new(0, 1),
            Coord::new(0, 2),
            Coord::new(1, 2),
            Coord::new(2, 2),
            Coord::new(3, 2),
            Coord::new(2, 3),
        ];
        const HEXAGONAL: [Coord; 4] = [
            Coord::new(0, 0),
            Coord::new(1, 0),
            Coord::new(0, 1),
            Coord::new(1, 1),
        ];
        match self {
            LatticeKind::HeavyHex => &HEAVY_HEX,
            LatticeKind::Hexagonal => &HEXAGONAL,
        }
    }

    pub fn sites_per_cell(self) -> usize {
        self.cell_sites().len()
    }

    /// Stable text token used in schedule files and command-line flags.
    pub fn token(self) -> &'static str {
        match self {
            LatticeKind::HeavyHex => "heavy-hex",
            LatticeKind::Hexagonal => "hexagonal",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "heavy-hex" => Some(LatticeKind::HeavyHex),
            "hexagonal" => Some(LatticeKind::Hexagonal),
            _ => None,
        }
    }

    pub fn max_degree(self) -> usize {
        3
    }

    /// Whether the infinite lattice has a site at `c`.
    pub fn site_exists(self, c: Coord) -> bool {
        match self {
            LatticeKind::HeavyHex => match c.y.rem_euclid(4) {
                0 | 2 => true,
                1 => c.x.rem_euclid(4) == 0,
                3 => c.x.rem_euclid(4) == 2,
                _ => unreachable!(),
            },
            LatticeKind::Hexagonal => true,
        }
    }

    /// Whether the infinite lattice links `a` and `b`. Only unit-length links
    /// exist; everything else is `false`.
    pub fn edge_exists(self, a: Coord, b: Coord) -> bool {
        if !self.site_exists(a) || !self.site_exists(b) {
            return false;
        }
        let d = b.sub(a);
        let horizontal = (d.x.abs(), d.y) == (1, 0);
        let vertical = (d.x, d.y.abs()) == (0, 1);
        match self {
            // Even rows are fully linked chains; odd-row connector sites hang
            // between them, so every vertical unit pair of sites is linked.
            LatticeKind::HeavyHex => (horizontal && a.y.rem_euclid(2) == 0) || vertical,
            // Brick wall: vertical chains everywhere, horizontal link on the
            // sublattice where the left endpoint has even x + y.
            LatticeKind::Hexagonal => {
                if vertical {
                    true
                } else if horizontal {
                    let left = if d.x == 1 { a } else { b };
                    (left.x + left.y).rem_euclid(2) == 0
                } else {
                    false
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate node at {0}")]
    DuplicateNode(Coord),
    #[error("edge endpoint {0} is not a node")]
    UnknownEndpoint(Coord),
    #[error("self-loop at {0}")]
    SelfLoop(Coord),
    #[error("duplicate edge {0} - {1}")]
    DuplicateEdge(Coord, Coord),
    #[error("torus size {0} cells is too small for distinct wrapped sites")]
    TorusTooSmall(u32),
}

/// Undirected device connectivity graph with integer coordinates.
///
/// Nodes are numbered in ascending (y, x) order, edges in ascending
/// `(min(a, b), max(a, b))` node-id order; both orders are deterministic
/// functions of the node set, which downstream tie-break rules rely on.
#[derive(Clone, Debug)]
pub struct DeviceGraph {
    kind: Option<LatticeKind>,
    coords: Vec<Coord>,
    index: HashMap<Coord, NodeId>,
    adjacency: Vec<Vec<NodeId>>,
    edges: Vec<(NodeId, NodeId)>,
    edge_index: HashMap<(NodeId, NodeId), EdgeId>,
    /// Coordinate wrap moduli for periodic graphs.
    period: Option<(i64, i64)>,
}

impl DeviceGraph {
    /// Finite rectangular patch of a built-in lattice covering
    /// `cells_x` x `cells_y` unit cells anchored at the origin.
    pub fn lattice(kind: LatticeKind, cells_x: u32, cells_y: u32) -> Result<Self, TopologyError> {
        let (vx, vy) = kind.cell_vectors();
        Self::lattice_region(
            kind,
            0..vx.x * i64::from(cells_x),
            0..vy.y * i64::from(cells_y),
        )
    }

    /// Finite patch of a built-in lattice over explicit coordinate ranges.
    pub fn lattice_region(
        kind: LatticeKind,
        xs: Range<i64>,
        ys: Range<i64>,
    ) -> Result<Self, TopologyError> {
        let mut coords = Vec::new();
        for y in ys.clone() {
            for x in xs.clone() {
                let c = Coord::new(x, y);
                if kind.site_exists(c) {
                    coords.push(c);
                }
            }
        }
        let in_region = |c: Coord| xs.contains(&c.x) && ys.contains(&c.y);
        let mut edges = Vec::new();
        for &c in &coords {
            for n in [c.offset(1, 0), c.offset(0, 1)] {
                if in_region(n) && kind.edge_exists(c, n) {
                    edges.push((c, n));
                }
            }
        }
        let mut graph = Self::from_parts(coords, edges)?;
        graph.kind = Some(kind);
        Ok(graph)
    }

    /// Periodic `cells` x `cells` torus of a built-in lattice. Used by the
    /// unit-cell schedule search, which needs boundary-free translation
    /// invariance.
    pub fn torus(kind: LatticeKind, cells: u32) -> Result<Self, TopologyError> {
        if cells < 2 {
            return Err(TopologyError::TorusTooSmall(cells));
        }
        let (vx, vy) = kind.cell_vectors();
        let (px, py) = (vx.x * i64::from(cells), vy.y * i64::from(cells));
        let mut coords = Vec::new();
        for y in 0..py {
            for x in 0..px {
                let c = Coord::new(x, y);
                if kind.site_exists(c) {
                    coords.push(c);
                }
            }
        }
        let wrap = |c: Coord| Coord::new(c.x.rem_euclid(px), c.y.rem_euclid(py));
        let mut edges = Vec::new();
        for &c in &coords {
            for n in [c.offset(1, 0), c.offset(0, 1)] {
                // The site rules have the cell vectors as periods, so edge
                // existence can be checked before wrapping.
                if kind.edge_exists(c, n) {
                    edges.push((c, wrap(n)));
                }
            }
        }
        let mut graph = Self::from_parts(coords, edges)?;
        graph.kind = Some(kind);
        graph.period = Some((px, py));
        Ok(graph)
    }

    /// Build from explicit node coordinates and coordinate edge pairs.
    pub fn from_parts(
        mut coords: Vec<Coord>,
        edge_coords: Vec<(Coord, Coord)>,
    ) -> Result<Self, TopologyError> {
        if coords.is_empty() {
            return Err(TopologyError::Empty);
        }
        coords.sort_by_key(|c| (c.y, c.x));
        let mut index = HashMap::with_capacity(coords.len());
        for (id, &c) in coords.iter().enumerate() {
            if index.insert(c, id).is_some() {
                return Err(TopologyError::DuplicateNode(c));
            }
        }
        let mut edges = Vec::with_capacity(edge_coords.len());
        for &(ca, cb) in &edge_coords {
            let a = *index.get(&ca).ok_or(TopologyError::UnknownEndpoint(ca))?;
            let b = *index.get(&cb).ok_or(TopologyError::UnknownEndpoint(cb))?;
            if a == b {
                return Err(TopologyError::SelfLoop(ca));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(TopologyError::DuplicateEdge(coords[w[0].0], coords[w[0].1]));
        }
        let mut adjacency = vec![Vec::new(); coords.len()];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (eid, &(a, b)) in edges.iter().enumerate() {
            adjacency[a].push(b);
            adjacency[b].push(a);
            edge_index.insert((a, b), eid);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(DeviceGraph {
            kind: None,
            coords,
            index,
            adjacency,
            edges,
            edge_index,
            period: None,
        })
    }

    pub fn kind(&self) -> Option<LatticeKind> {
        self.kind
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// Coordinate wrap moduli, if periodic.
    pub fn period(&self) -> Option<(i64, i64)> {
        self.period
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn coord(&self, id: NodeId) -> Coord {
        self.coords[id]
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    /// Maps a coordinate to its node, wrapping into the fundamental domain
    /// first if the graph is periodic.
    pub fn node(&self, c: Coord) -> Option<NodeId> {
        self.index.get(&self.canonical(c)).copied()
    }

    /// Wraps a coordinate into the fundamental domain of a periodic graph;
    /// identity on finite graphs.
    pub fn canonical(&self, c: Coord) -> Coord {
        match self.period {
            Some((px, py)) => Coord::new(c.x.rem_euclid(px), c.y.rem_euclid(py)),
            None => c,
        }
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id].len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_endpoints(&self, id: EdgeId) -> (NodeId, NodeId) {
        self.edges[id]
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.edge_between(a, b).is_some()
    }

    /// Breadth-first distances from `from` to every node; `None` marks
    /// unreachable nodes.
    pub fn bfs_distances(&self, from: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.num_nodes()];
        dist[from] = Some(0);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have distances");
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// All-pairs shortest-path matrix. Intended for the modest graphs the
    /// router and certifier work on; quadratic memory.
    pub fn all_pairs_distances(&self) -> DistanceMatrix {
        let rows = (0..self.num_nodes())
            .map(|n| self.bfs_distances(n))
            .collect();
        DistanceMatrix { rows }
    }

    pub fn to_description(&self) -> DeviceDescription {
        DeviceDescription {
            kind: self.kind,
            period: self.period,
            nodes: self.coords.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.coords[a], self.coords[b]))
                .collect(),
        }
    }

    pub fn from_description(desc: DeviceDescription) -> Result<Self, TopologyError> {
        let mut graph = Self::from_parts(desc.nodes, desc.edges)?;
        graph.kind = desc.kind;
        graph.period = desc.period;
        Ok(graph)
    }
}

/// Serializable form of a [`DeviceGraph`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviceDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<LatticeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<(i64, i64)>,
    pub nodes: Vec<Coord>,
    pub edges: Vec<(Coord, Coord)>,
}

/// Dense all-pairs distance table.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    rows: Vec<Vec<Option<u32>>>,
}

impl DistanceMatrix {
    pub fn get(&self, a: NodeId, b: NodeId) -> Option<u32> {
        self.rows[a][b]
    }

    /// Distance between connected nodes; panics if unreachable, which callers
    /// use as an invariant check after confirming connectivity.
    pub fn dist(&self, a: NodeId, b: NodeId) -> u32 {
        self.rows[a][b].expect("nodes are connected")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn heavy_hex_cell_sites_match_site_rule() {
        let kind = LatticeKind::HeavyHex;
        let sites = kind.cell_sites();
        assert_eq!(sites.len(), 10);
        for y in 0..4 {
            for x in 0..4 {
                let c = Coord::new(x, y);
                assert_eq!(sites.contains(&c), kind.site_exists(c), "site {c}");
            }
        }
    }

    #[test]
    fn hexagonal_cell_sites_match_site_rule() {
        let kind = LatticeKind::Hexagonal;
        assert_eq!(kind.cell_sites().len(), 4);
        for y in -3..7 {
            for x in -3..7 {
                assert!(kind.site_exists(Coord::new(x, y)));
            }
        }
    }

    #[test]
    fn site_rules_are_cell_periodic() {
        for kind in [LatticeKind::HeavyHex, LatticeKind::Hexagonal] {
            let (vx, vy) = kind.cell_vectors();
            for y in -5..5 {
                for x in -5..5 {
                    let c = Coord::new(x, y);
                    assert_eq!(kind.site_exists(c), kind.site_exists(c.add(vx)));
                    assert_eq!(kind.site_exists(c), kind.site_exists(c.add(vy)));
                    let n = c.offset(1, 0);
                    assert_eq!(kind.edge_exists(c, n), kind.edge_exists(c.add(vy), n.add(vy)));
                    let m = c.offset(0, 1);
                    assert_eq!(kind.edge_exists(c, m), kind.edge_exists(c.add(vx), m.add(vx)));
                }
            }
        }
    }

    #[test]
    fn torus_degree_profiles() {
        // Heavy hex: per cell, the four junction row sites have degree 3 and
        // the six remaining sites degree 2, giving 12 edges per cell.
        let g = DeviceGraph::torus(LatticeKind::HeavyHex, 3).unwrap();
        assert_eq!(g.num_nodes(), 90);
        assert_eq!(g.num_edges(), 108);
        let by_degree = |d| (0..g.num_nodes()).filter(|&n| g.degree(n) == d).count();
        assert_eq!(by_degree(3), 36);
        assert_eq!(by_degree(2), 54);

        // Hexagonal brick wall is 3-regular on the torus.
        let g = DeviceGraph::torus(LatticeKind::Hexagonal, 3).unwrap();
        assert_eq!(g.num_nodes(), 36);
        assert_eq!(g.num_edges(), 54);
        for n in 0..g.num_nodes() {
            assert_eq!(g.degree(n), 3, "node {}", g.coord(n));
        }
    }

    #[test]
    fn finite_patch_counts_and_degree_bound() {
        let g = DeviceGraph::lattice(LatticeKind::HeavyHex, 3, 3).unwrap();
        assert_eq!(g.num_nodes(), 90);
        for n in 0..g.num_nodes() {
            assert!(g.degree(n) <= 3);
        }
        let g = DeviceGraph::lattice(LatticeKind::Hexagonal, 3, 3).unwrap();
        assert_eq!(g.num_nodes(), 36);
        for n in 0..g.num_nodes() {
            assert!(g.degree(n) <= 3);
        }
    }

    #[test]
    fn edges_join_lattice_neighbors() {
        for kind in [LatticeKind::HeavyHex, LatticeKind::Hexagonal] {
            let g = DeviceGraph::lattice(kind, 2, 2).unwrap();
            for &(a, b) in g.edges() {
                let (ca, cb) = (g.coord(a), g.coord(b));
                let d = cb.sub(ca);
                assert_eq!(d.x.abs() + d.y.abs(), 1, "{ca} - {cb}");
                assert!(kind.edge_exists(ca, cb));
            }
        }
    }

    #[test]
    fn node_order_and_edge_order_are_canonical() {
        let g = DeviceGraph::lattice(LatticeKind::Hexagonal, 2, 2).unwrap();
        for w in g.coords().windows(2) {
            assert!((w[0].y, w[0].x) < (w[1].y, w[1].x));
        }
        for w in g.edges().windows(2) {
            assert!(w[0] < w[1]);
        }
        for (eid, &(a, b)) in g.edges().iter().enumerate() {
            assert_eq!(g.edge_between(a, b), Some(eid));
            assert_eq!(g.edge_between(b, a), Some(eid));
        }
    }

    #[test]
    fn periodic_lookup_wraps() {
        let g = DeviceGraph::torus(LatticeKind::Hexagonal, 3).unwrap();
        let a = g.node(Coord::new(0, 0)).unwrap();
        assert_eq!(g.node(Coord::new(6, -6)), Some(a));
        assert_eq!(g.node(Coord::new(-6, 12)), Some(a));
    }

    #[test]
    fn from_parts_rejects_malformed_input() {
        let c = |x, y| Coord::new(x, y);
        assert_eq!(
            DeviceGraph::from_parts(vec![], vec![]).unwrap_err(),
            TopologyError::Empty
        );
        assert_eq!(
            DeviceGraph::from_parts(vec![c(0, 0), c(0, 0)], vec![]).unwrap_err(),
            TopologyError::DuplicateNode(c(0, 0))
        );
        assert_eq!(
            DeviceGraph::from_parts(vec![c(0, 0)], vec![(c(0, 0), c(1, 0))]).unwrap_err(),
            TopologyError::UnknownEndpoint(c(1, 0))
        );
        assert_eq!(
            DeviceGraph::from_parts(vec![c(0, 0)], vec![(c(0, 0), c(0, 0))]).unwrap_err(),
            TopologyError::SelfLoop(c(0, 0))
        );
        assert_eq!(
            DeviceGraph::from_parts(
                vec![c(0, 0), c(1, 0)],
                vec![(c(0, 0), c(1, 0)), (c(1, 0), c(0, 0))]
            )
            .unwrap_err(),
            TopologyError::DuplicateEdge(c(0, 0), c(1, 0))
        );
    }

    #[test]
    fn description_round_trip_preserves_structure() {
        let g = DeviceGraph::torus(LatticeKind::HeavyHex, 3).unwrap();
        let json = serde_json::to_string(&g.to_description()).unwrap();
        let back = DeviceGraph::from_description(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.kind(), g.kind());
        assert_eq!(back.period(), g.period());
        assert_eq!(back.coords(), g.coords());
        assert_eq!(back.edges(), g.edges());
    }

    proptest! {
        // BFS sanity on a lattice patch: symmetry and the triangle inequality.
        #[test]
        fn distances_are_symmetric_and_triangular(
            seed in 0usize..1000,
            hex in proptest::bool::ANY,
        ) {
            let kind = if hex { LatticeKind::Hexagonal } else { LatticeKind::HeavyHex };
            let g = DeviceGraph::lattice(kind, 3, 3).unwrap();
            let n = g.num_nodes();
            let (a, b, c) = (seed % n, (seed / 7) % n, (seed / 49) % n);
            let m = g.all_pairs_distances();
            prop_assert_eq!(m.get(a, b), m.get(b, a));
            if let (Some(ab), Some(bc), Some(ac)) = (m.get(a, b), m.get(b, c), m.get(a, c)) {
                prop_assert!(ac <= ab + bc);
            }
        }

        // Adjacent nodes are at distance one and distance respects edges.
        #[test]
        fn edge_endpoints_are_at_distance_one(edge_pick in 0usize..200) {
            let g = DeviceGraph::lattice(LatticeKind::HeavyHex, 3, 3).unwrap();
            let (a, b) = g.edges()[edge_pick % g.num_edges()];
            let d = g.bfs_distances(a);
            prop_assert_eq!(d[b], Some(1));
        }
    }
}
