//! Evolvable recurrent network genotype.
//!
//! Nodes carry a continuous depth in `[0, 1]`: inputs sit at 0, outputs at 1
//! and hidden nodes strictly in between. Feed-forward edges (`time_skip == 0`)
//! must go from lower to higher depth, which keeps every per-step graph
//! acyclic. Recurrent edges (`time_skip >= 1`) may connect any pair of nodes,
//! self-loops included, but never target an input node.
//!
//! Node and edge ids are handed out by an [`Innovations`] allocator shared by
//! the whole population, so the same id always denotes the same structural
//! component and crossover can line parents up by id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::{CellKind, LSTM_FORGET_BIAS};
use crate::error::{Error, Result};

pub type NodeId = u64;
pub type EdgeId = u64;

/// Half-width of the uniform range new weights and node parameters are drawn from.
pub const INIT_RANGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Reads column `index` of the input row.
    Input(usize),
    /// Produces forecast `index`.
    Output(usize),
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
    pub cell: CellKind,
    pub depth: f64,
    pub enabled: bool,
    pub params: Vec<f64>,
}

impl NodeGene {
    pub fn is_hidden(&self) -> bool {
        self.kind == NodeKind::Hidden
    }

    pub fn is_input(&self) -> bool {
        matches!(self.kind, NodeKind::Input(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGene {
    pub id: EdgeId,
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
    pub enabled: bool,
    pub time_skip: u32,
}

impl EdgeGene {
    pub fn key(&self) -> EdgeKey {
        EdgeKey { source: self.source, target: self.target, time_skip: self.time_skip }
    }

    pub fn is_recurrent(&self) -> bool {
        self.time_skip > 0
    }
}

/// Structural identity of an edge: two edges with the same key are the same
/// connection, whatever their ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub source: NodeId,
    pub target: NodeId,
    pub time_skip: u32,
}

/// How a genome came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Seed,
    Mutation,
    IntraCrossover,
    InterCrossover,
    Repopulation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub route: Route,
    pub parents: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub id: u64,
    pub nodes: Vec<NodeGene>,
    pub edges: Vec<EdgeGene>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Validation MSE; `None` until evaluated.
    pub fitness: Option<f64>,
    pub generation_born: usize,
    pub island_id: usize,
    pub lineage: Lineage,
}

/// Population-wide id allocator for nodes and edges. Ids are never reused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Innovations {
    next_node: NodeId,
    next_edge: EdgeId,
}

impl Innovations {
    /// Allocator whose first ids follow the seed genome's fixed ids.
    pub fn after_seed(n_inputs: usize, n_outputs: usize) -> Self {
        Innovations {
            next_node: (n_inputs + n_outputs) as NodeId,
            next_edge: (n_inputs * n_outputs) as EdgeId,
        }
    }

    /// Allocator that continues after the largest ids used in `genomes`.
    pub fn covering<'a>(genomes: impl IntoIterator<Item = &'a Genome>) -> Self {
        let mut inn = Innovations { next_node: 0, next_edge: 0 };
        for g in genomes {
            if let Some(n) = g.nodes.iter().map(|n| n.id).max() {
                inn.next_node = inn.next_node.max(n + 1);
            }
            if let Some(e) = g.edges.iter().map(|e| e.id).max() {
                inn.next_edge = inn.next_edge.max(e + 1);
            }
        }
        inn
    }

    pub fn node(&mut self) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        id
    }

    pub fn edge(&mut self) -> EdgeId {
        let id = self.next_edge;
        self.next_edge += 1;
        id
    }
}

pub(crate) fn random_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-INIT_RANGE..=INIT_RANGE)
}

/// Fresh parameters for a newly created node, forget-gate shift included.
pub(crate) fn random_node_params<R: Rng + ?Sized>(cell: CellKind, rng: &mut R) -> Vec<f64> {
    let mut params: Vec<f64> = (0..cell.parameter_count()).map(|_| random_weight(rng)).collect();
    if cell.has_forget_gate() {
        params[LSTM_FORGET_BIAS] += 1.0;
    }
    params
}

/// Builds the minimal genome: every input wired straight to every output.
///
/// Topology (and ids) are identical on every call; only the weights are random.
/// Input `i` gets node id `i`, output `j` node id `inputs + j`.
pub fn seed_genome<R: Rng + ?Sized>(
    input_names: &[String],
    output_names: &[String],
    rng: &mut R,
) -> Result<Genome> {
    if input_names.is_empty() || output_names.is_empty() {
        return Err(Error::InvalidArgument(
            "seed genome needs at least one input and one output".into(),
        ));
    }
    let n_in = input_names.len();
    let mut nodes = Vec::with_capacity(n_in + output_names.len());
    for i in 0..n_in {
        nodes.push(NodeGene {
            id: i as NodeId,
            kind: NodeKind::Input(i),
            cell: CellKind::Simple,
            depth: 0.0,
            enabled: true,
            params: vec![random_weight(rng)],
        });
    }
    for j in 0..output_names.len() {
        nodes.push(NodeGene {
            id: (n_in + j) as NodeId,
            kind: NodeKind::Output(j),
            cell: CellKind::Simple,
            depth: 1.0,
            enabled: true,
            params: vec![random_weight(rng)],
        });
    }
    let mut edges = Vec::with_capacity(n_in * output_names.len());
    for i in 0..n_in {
        for j in 0..output_names.len() {
            edges.push(EdgeGene {
                id: (i * output_names.len() + j) as EdgeId,
                source: i as NodeId,
                target: (n_in + j) as NodeId,
                weight: random_weight(rng),
                enabled: true,
                time_skip: 0,
            });
        }
    }
    Ok(Genome {
        id: 0,
        nodes,
        edges,
        input_names: input_names.to_vec(),
        output_names: output_names.to_vec(),
        fitness: None,
        generation_born: 0,
        island_id: 0,
        lineage: Lineage { route: Route::Seed, parents: Vec::new() },
    })
}

/// A broken genome invariant, as reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateNodeId(NodeId),
    DuplicateEdgeId(EdgeId),
    /// Input/output parameter without exactly one matching node.
    IoArity { role: &'static str, index: usize, count: usize },
    /// An input or output node that is disabled, non-simple or mis-placed.
    IoNode(NodeId),
    DepthOutOfRange(NodeId),
    ParamCount(NodeId),
    DanglingEdge(EdgeId),
    /// Feed-forward edge that does not go strictly deeper.
    Acyclicity(EdgeId),
    EdgeIntoInput(EdgeId),
    DuplicateEnabledEdge(EdgeKey),
    NonFinite { what: &'static str, id: u64 },
    NegativeFitness,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNodeId(id) => write!(f, "duplicate node id {id}"),
            Violation::DuplicateEdgeId(id) => write!(f, "duplicate edge id {id}"),
            Violation::IoArity { role, index, count } => {
                write!(f, "{role} {index} has {count} nodes, expected 1")
            }
            Violation::IoNode(id) => write!(f, "malformed input/output node {id}"),
            Violation::DepthOutOfRange(id) => write!(f, "node {id} depth out of range"),
            Violation::ParamCount(id) => write!(f, "node {id} has wrong parameter count"),
            Violation::DanglingEdge(id) => write!(f, "edge {id} references a missing node"),
            Violation::Acyclicity(id) => write!(f, "acyclicity: feed-forward edge {id} does not increase depth"),
            Violation::EdgeIntoInput(id) => write!(f, "edge {id} targets an input node"),
            Violation::DuplicateEnabledEdge(k) => write!(
                f,
                "more than one enabled edge {} -> {} (skip {})",
                k.source, k.target, k.time_skip
            ),
            Violation::NonFinite { what, id } => write!(f, "non-finite parameter on {what} {id}"),
            Violation::NegativeFitness => write!(f, "negative fitness"),
        }
    }
}

/// Lists every invariant the genome breaks. An empty list means valid.
pub fn validate(genome: &Genome) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut by_id: BTreeMap<NodeId, &NodeGene> = BTreeMap::new();
    for n in &genome.nodes {
        if by_id.insert(n.id, n).is_some() {
            out.push(Violation::DuplicateNodeId(n.id));
        }
        let depth_ok = match n.kind {
            NodeKind::Input(_) => n.depth == 0.0,
            NodeKind::Output(_) => n.depth == 1.0,
            NodeKind::Hidden => n.depth > 0.0 && n.depth < 1.0,
        };
        if !depth_ok {
            out.push(Violation::DepthOutOfRange(n.id));
        }
        if !n.is_hidden() && (!n.enabled || n.cell != CellKind::Simple) {
            out.push(Violation::IoNode(n.id));
        }
        if n.params.len() != n.cell.parameter_count() {
            out.push(Violation::ParamCount(n.id));
        }
        if n.params.iter().any(|p| !p.is_finite()) {
            out.push(Violation::NonFinite { what: "node", id: n.id });
        }
    }
    for (role, len) in [("input", genome.input_names.len()), ("output", genome.output_names.len())] {
        for index in 0..len {
            let count = genome
                .nodes
                .iter()
                .filter(|n| match (role, n.kind) {
                    ("input", NodeKind::Input(i)) | ("output", NodeKind::Output(i)) => i == index,
                    _ => false,
                })
                .count();
            if count != 1 {
                out.push(Violation::IoArity { role, index, count });
            }
        }
    }
    for n in &genome.nodes {
        match n.kind {
            NodeKind::Input(i) if i >= genome.input_names.len() => out.push(Violation::IoNode(n.id)),
            NodeKind::Output(i) if i >= genome.output_names.len() => out.push(Violation::IoNode(n.id)),
            _ => {}
        }
    }

    let mut edge_ids = BTreeSet::new();
    let mut enabled_keys = BTreeSet::new();
    for e in &genome.edges {
        if !edge_ids.insert(e.id) {
            out.push(Violation::DuplicateEdgeId(e.id));
        }
        if !e.weight.is_finite() {
            out.push(Violation::NonFinite { what: "edge", id: e.id });
        }
        let (Some(src), Some(dst)) = (by_id.get(&e.source), by_id.get(&e.target)) else {
            out.push(Violation::DanglingEdge(e.id));
            continue;
        };
        if dst.is_input() {
            out.push(Violation::EdgeIntoInput(e.id));
        }
        if e.time_skip == 0 && src.depth >= dst.depth {
            out.push(Violation::Acyclicity(e.id));
        }
        if e.enabled && !enabled_keys.insert(e.key()) {
            out.push(Violation::DuplicateEnabledEdge(e.key()));
        }
    }
    if let Some(f) = genome.fitness {
        if f.is_nan() {
            out.push(Violation::NonFinite { what: "genome", id: genome.id });
        } else if f < 0.0 {
            out.push(Violation::NegativeFitness);
        }
    }
    out
}

/// Hash of the genome's structure, ignoring weights, fitness and bookkeeping.
///
/// Independent of the order nodes and edges are stored in.
pub fn structural_hash(genome: &Genome) -> u64 {
    let mut nodes: Vec<_> = genome
        .nodes
        .iter()
        .map(|n| (n.id, n.kind, n.cell, n.depth.to_bits(), n.enabled))
        .collect();
    nodes.sort_unstable_by_key(|n| n.0);
    let mut edges: Vec<_> = genome.edges.iter().map(|e| (e.key(), e.enabled)).collect();
    edges.sort_unstable();
    let mut h = DefaultHasher::new();
    genome.input_names.hash(&mut h);
    genome.output_names.hash(&mut h);
    nodes.hash(&mut h);
    edges.hash(&mut h);
    h.finish()
}

impl Genome {
    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeGene> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn edge_by_key(&self, key: EdgeKey) -> Option<&EdgeGene> {
        self.edges.iter().find(|e| e.key() == key)
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_names.len()
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_hidden() && n.enabled).count()
    }

    pub fn enabled_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.enabled).count()
    }

    /// Ids of nodes that lie on an enabled path from an input to an output.
    /// Everything else is dormant and contributes nothing at execution.
    pub fn active_nodes(&self) -> BTreeSet<NodeId> {
        let enabled: BTreeSet<NodeId> = self.nodes.iter().filter(|n| n.enabled).map(|n| n.id).collect();
        let live_edges: Vec<&EdgeGene> = self
            .edges
            .iter()
            .filter(|e| e.enabled && enabled.contains(&e.source) && enabled.contains(&e.target))
            .collect();
        let flood = |starts: Vec<NodeId>, forward: bool| -> BTreeSet<NodeId> {
            let mut seen: BTreeSet<NodeId> = starts.iter().copied().collect();
            let mut stack = starts;
            while let Some(n) = stack.pop() {
                for e in &live_edges {
                    let (from, to) = if forward { (e.source, e.target) } else { (e.target, e.source) };
                    if from == n && seen.insert(to) {
                        stack.push(to);
                    }
                }
            }
            seen
        };
        let inputs = self.nodes.iter().filter(|n| n.is_input()).map(|n| n.id).collect();
        let outputs = self
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Output(_)))
            .map(|n| n.id)
            .collect();
        let fwd = flood(inputs, true);
        let bwd = flood(outputs, false);
        let mut active: BTreeSet<NodeId> = fwd.intersection(&bwd).copied().collect();
        active.extend(self.nodes.iter().filter(|n| !n.is_hidden()).map(|n| n.id));
        active
    }

    /// True when every output is reachable from at least one input.
    pub fn outputs_connected(&self) -> bool {
        let enabled: BTreeSet<NodeId> = self.nodes.iter().filter(|n| n.enabled).map(|n| n.id).collect();
        let mut seen: BTreeSet<NodeId> = self.nodes.iter().filter(|n| n.is_input()).map(|n| n.id).collect();
        let mut stack: Vec<NodeId> = seen.iter().copied().collect();
        while let Some(n) = stack.pop() {
            for e in &self.edges {
                if e.enabled && e.source == n && enabled.contains(&e.target) && seen.insert(e.target) {
                    stack.push(e.target);
                }
            }
        }
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Output(_)))
            .all(|n| seen.contains(&n.id))
    }

    /// Number of weights and node parameters, counted over active structure only.
    pub fn trainable_count(&self) -> usize {
        let active = self.active_nodes();
        let edges = self
            .edges
            .iter()
            .filter(|e| e.enabled && active.contains(&e.source) && active.contains(&e.target))
            .count();
        let params: usize = self
            .nodes
            .iter()
            .filter(|n| active.contains(&n.id))
            .map(|n| n.params.len())
            .sum();
        edges + params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn seed_shapes() {
        let g = seed_genome(&names(&["a", "b"]), &names(&["y"]), &mut rng()).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.enabled && e.time_skip == 0));
        assert!(g.fitness.is_none());

        let g = seed_genome(&names(&["x"]), &names(&["x_future"]), &mut rng()).unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (2, 1));

        let inputs: Vec<String> = (0..22).map(|i| format!("p{i}")).collect();
        let g = seed_genome(&inputs, &names(&["power"]), &mut rng()).unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (23, 22));
        assert_eq!(g.hidden_count(), 0);
    }

    #[test]
    fn seed_rejects_empty_names() {
        assert!(seed_genome(&[], &names(&["y"]), &mut rng()).is_err());
        assert!(seed_genome(&names(&["x"]), &[], &mut rng()).is_err());
    }

    #[test]
    fn seed_topology_is_deterministic() {
        let a = seed_genome(&names(&["a", "b"]), &names(&["y"]), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = seed_genome(&names(&["a", "b"]), &names(&["y"]), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_ne!(a.edges[0].weight, b.edges[0].weight);
        assert_eq!(structural_hash(&a), structural_hash(&b));
        assert!(validate(&a).is_empty());
    }

    #[test]
    fn backwards_feed_forward_edge_is_reported() {
        let mut g = seed_genome(&names(&["x"]), &names(&["y"]), &mut rng()).unwrap();
        for (id, depth) in [(10, 0.7), (11, 0.3)] {
            g.nodes.push(NodeGene {
                id,
                kind: NodeKind::Hidden,
                cell: CellKind::Simple,
                depth,
                enabled: true,
                params: vec![0.0],
            });
        }
        g.edges.push(EdgeGene { id: 5, source: 10, target: 11, weight: 0.1, enabled: true, time_skip: 0 });
        assert_eq!(validate(&g), vec![Violation::Acyclicity(5)]);

        // The same connection as a recurrent edge is fine.
        g.edges[1].time_skip = 3;
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn nan_weight_is_reported() {
        let mut g = seed_genome(&names(&["x"]), &names(&["y"]), &mut rng()).unwrap();
        g.edges[0].weight = f64::NAN;
        assert_eq!(validate(&g), vec![Violation::NonFinite { what: "edge", id: 0 }]);
    }

    #[test]
    fn duplicate_enabled_edge_is_reported() {
        let mut g = seed_genome(&names(&["x"]), &names(&["y"]), &mut rng()).unwrap();
        let mut dup = g.edges[0].clone();
        dup.id = 9;
        g.edges.push(dup);
        assert_eq!(validate(&g).len(), 1);
        g.edges[1].enabled = false;
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn hash_ignores_weights_and_order() {
        let mut r = rng();
        let mut g = seed_genome(&names(&["a", "b", "c"]), &names(&["y", "z"]), &mut r).unwrap();
        let h = structural_hash(&g);
        assert_eq!(h, structural_hash(&g.clone()));
        g.edges.shuffle(&mut r);
        g.nodes.shuffle(&mut r);
        assert_eq!(h, structural_hash(&g));
        g.edges[0].weight += 1.0;
        assert_eq!(h, structural_hash(&g));
        g.nodes.push(NodeGene {
            id: 99,
            kind: NodeKind::Hidden,
            cell: CellKind::Gru,
            depth: 0.5,
            enabled: true,
            params: vec![0.0; 9],
        });
        assert_ne!(h, structural_hash(&g));
    }

    #[test]
    fn dormant_nodes_are_inactive() {
        let mut g = seed_genome(&names(&["x"]), &names(&["y"]), &mut rng()).unwrap();
        g.nodes.push(NodeGene {
            id: 5,
            kind: NodeKind::Hidden,
            cell: CellKind::Simple,
            depth: 0.5,
            enabled: true,
            params: vec![0.0],
        });
        // Reaches the output but is not fed by any input.
        g.edges.push(EdgeGene { id: 3, source: 5, target: 1, weight: 1.0, enabled: true, time_skip: 0 });
        assert!(!g.active_nodes().contains(&5));
        g.edges.push(EdgeGene { id: 4, source: 0, target: 5, weight: 1.0, enabled: true, time_skip: 0 });
        assert!(g.active_nodes().contains(&5));
    }

    #[test]
    fn lstm_nodes_get_forget_shift() {
        let mut r = rng();
        let p = random_node_params(CellKind::Lstm, &mut r);
        assert!(p[LSTM_FORGET_BIAS] >= 0.5 && p[LSTM_FORGET_BIAS] <= 1.5);
        assert!(p.iter().enumerate().all(|(i, v)| i == LSTM_FORGET_BIAS || v.abs() <= 0.5));
    }
}
