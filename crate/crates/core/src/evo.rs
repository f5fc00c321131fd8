//! Mutation, crossover and Lamarckian weight inheritance.
//!
//! Every operator builds the child's structure first and then fills in
//! weights with [`inherit_weights`]: components the child shares with a parent
//! keep that parent's trained values, and only brand-new components are
//! randomly initialized.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::CellKind;
use crate::error::{Error, Result};
use crate::genome::{random_node_params, random_weight, EdgeGene, EdgeKey, Genome, Innovations, NodeGene, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    AddEdge,
    AddRecurrentEdge,
    EnableEdge,
    DisableEdge,
    AddNode,
    SplitNode,
    MergeNode,
    EnableNode,
    DisableNode,
    Clone,
}

impl MutationKind {
    pub const ALL: [MutationKind; 10] = [
        MutationKind::AddEdge,
        MutationKind::AddRecurrentEdge,
        MutationKind::EnableEdge,
        MutationKind::DisableEdge,
        MutationKind::AddNode,
        MutationKind::SplitNode,
        MutationKind::MergeNode,
        MutationKind::EnableNode,
        MutationKind::DisableNode,
        MutationKind::Clone,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub mutation_rate: f64,
    pub intra_crossover_rate: f64,
    pub inter_crossover_rate: f64,
    /// Relative selection weight of each mutation; missing kinds are disabled.
    pub mutation_weights: BTreeMap<MutationKind, f64>,
    pub min_time_skip: u32,
    pub max_time_skip: u32,
    /// Chance that structure found only in the weaker parent is carried over.
    pub other_parent_inclusion: f64,
    /// Chance that a shared component takes the better parent's weight instead
    /// of the mean of both parents.
    pub better_weight_probability: f64,
    /// Inapplicable mutations are redrawn this many times before cloning.
    pub max_retries: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig::islands()
    }
}

impl OperatorConfig {
    fn with_rates(mutation: f64, intra: f64, inter: f64) -> Self {
        OperatorConfig {
            mutation_rate: mutation,
            intra_crossover_rate: intra,
            inter_crossover_rate: inter,
            mutation_weights: MutationKind::ALL.iter().map(|&k| (k, 0.1)).collect(),
            min_time_skip: 1,
            max_time_skip: 10,
            other_parent_inclusion: 0.5,
            better_weight_probability: 0.5,
            max_retries: 20,
        }
    }

    /// Rates used with a single population: 0.4 mutation, 0.6 crossover.
    pub fn single_population() -> Self {
        Self::with_rates(0.4, 0.6, 0.0)
    }

    /// Rates used with multiple islands: 0.3 mutation, 0.3 intra-island and
    /// 0.4 inter-island crossover.
    pub fn islands() -> Self {
        Self::with_rates(0.3, 0.3, 0.4)
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.mutation_rate, self.intra_crossover_rate, self.inter_crossover_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || (rates.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("reproduction rates must lie in [0, 1] and sum to 1".into()));
        }
        let total: f64 = self.mutation_weights.values().sum();
        if self.mutation_weights.values().any(|w| *w < 0.0) || total <= 0.0 {
            return Err(Error::Config("mutation weights must be non-negative with a positive sum".into()));
        }
        if self.min_time_skip == 0 || self.min_time_skip > self.max_time_skip {
            return Err(Error::Config("time skip range must satisfy 1 <= min <= max".into()));
        }
        for p in [self.other_parent_inclusion, self.better_weight_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config("crossover probabilities must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    fn draw_mutation<R: Rng + ?Sized>(&self, rng: &mut R) -> MutationKind {
        let total: f64 = self.mutation_weights.values().sum();
        let mut u = rng.random::<f64>() * total;
        for (&k, &w) in &self.mutation_weights {
            if u < w {
                return k;
            }
            u -= w;
        }
        // Rounding at the top end of the range.
        *self.mutation_weights.keys().next_back().unwrap_or(&MutationKind::Clone)
    }
}

/// Counts of components whose values came from a parent versus fresh draws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InheritStats {
    pub inherited_edges: usize,
    pub initialized_edges: usize,
    pub inherited_nodes: usize,
    pub initialized_nodes: usize,
}

/// Gives every child edge (matched by source, target and time skip) and node
/// (matched by id) the trained values of the first parent in `parents` that
/// has it. Unmatched components get fresh random values.
pub fn inherit_weights<R: Rng + ?Sized>(child: &mut Genome, parents: &[&Genome], rng: &mut R) -> InheritStats {
    let mut stats = InheritStats::default();
    let edge_lookup: Vec<BTreeMap<EdgeKey, f64>> = parents
        .iter()
        .map(|p| p.edges.iter().map(|e| (e.key(), e.weight)).collect())
        .collect();
    for e in &mut child.edges {
        match edge_lookup.iter().find_map(|m| m.get(&e.key())) {
            Some(&w) => {
                e.weight = w;
                stats.inherited_edges += 1;
            }
            None => {
                e.weight = random_weight(rng);
                stats.initialized_edges += 1;
            }
        }
    }
    for n in &mut child.nodes {
        let from_parent = parents
            .iter()
            .find_map(|p| p.node(n.id).filter(|pn| pn.cell == n.cell).map(|pn| pn.params.clone()));
        match from_parent {
            Some(params) => {
                n.params = params;
                stats.inherited_nodes += 1;
            }
            None => {
                n.params = random_node_params(n.cell, rng);
                stats.initialized_nodes += 1;
            }
        }
    }
    stats
}

fn fresh_child(parent: &Genome) -> Genome {
    let mut child = parent.clone();
    child.fitness = None;
    child
}

fn random_cell<R: Rng + ?Sized>(rng: &mut R) -> CellKind {
    *CellKind::ALL.choose(rng).expect("non-empty")
}

fn hidden_node(id: u64, depth: f64, cell: CellKind) -> NodeGene {
    NodeGene { id, kind: NodeKind::Hidden, cell, depth, enabled: true, params: vec![0.0; cell.parameter_count()] }
}

fn new_edge(inn: &mut Innovations, source: u64, target: u64, time_skip: u32) -> EdgeGene {
    EdgeGene { id: inn.edge(), source, target, weight: 0.0, enabled: true, time_skip }
}

/// Enables an existing edge with `key`, or appends a new one.
fn connect(child: &mut Genome, inn: &mut Innovations, key: EdgeKey) {
    if let Some(e) = child.edges.iter_mut().find(|e| e.key() == key) {
        e.enabled = true;
    } else {
        child.edges.push(new_edge(inn, key.source, key.target, key.time_skip));
    }
}

fn enabled_keys(g: &Genome) -> BTreeSet<EdgeKey> {
    g.edges.iter().filter(|e| e.enabled).map(EdgeGene::key).collect()
}

/// Between 1 and `max_count` distinct items, the count drawn uniformly.
fn random_subset<T: Copy, R: Rng + ?Sized>(items: &[T], max_count: usize, rng: &mut R) -> Vec<T> {
    let k = rng.random_range(1..=max_count.clamp(1, items.len()));
    items.choose_multiple(rng, k).copied().collect()
}

/// Mean number of enabled in- or out-edges over the nodes that can have them,
/// rounded up.
fn mean_degree(g: &Genome, incoming: bool) -> usize {
    let nodes: Vec<&NodeGene> = g
        .nodes
        .iter()
        .filter(|n| n.enabled && if incoming { !n.is_input() } else { !matches!(n.kind, NodeKind::Output(_)) })
        .collect();
    let edges = g.edges.iter().filter(|e| e.enabled).count();
    if nodes.is_empty() {
        1
    } else {
        edges.div_ceil(nodes.len()).max(1)
    }
}

/// Splits `items` into two non-empty groups (a single item goes to both).
fn split_two<T: Copy, R: Rng + ?Sized>(items: &[T], rng: &mut R) -> (Vec<T>, Vec<T>) {
    if items.len() == 1 {
        return (items.to_vec(), items.to_vec());
    }
    let mut shuffled = items.to_vec();
    shuffled.shuffle(rng);
    let (mut a, mut b) = (vec![shuffled[0]], vec![shuffled[1]]);
    for &x in &shuffled[2..] {
        if rng.random_bool(0.5) {
            a.push(x)
        } else {
            b.push(x)
        }
    }
    (a, b)
}

fn add_edge<R: Rng + ?Sized>(parent: &Genome, inn: &mut Innovations, rng: &mut R) -> Option<Genome> {
    let live = enabled_keys(parent);
    let enabled: Vec<&NodeGene> = parent.nodes.iter().filter(|n| n.enabled).collect();
    let mut candidates = Vec::new();
    for a in &enabled {
        for b in &enabled {
            let key = EdgeKey { source: a.id, target: b.id, time_skip: 0 };
            if a.depth < b.depth && !b.is_input() && !live.contains(&key) {
                candidates.push(key);
            }
        }
    }
    let key = *candidates.choose(rng)?;
    let mut child = fresh_child(parent);
    connect(&mut child, inn, key);
    Some(child)
}

fn add_recurrent_edge<R: Rng + ?Sized>(
    parent: &Genome,
    cfg: &OperatorConfig,
    inn: &mut Innovations,
    rng: &mut R,
) -> Option<Genome> {
    let live = enabled_keys(parent);
    let sources: Vec<u64> = parent.nodes.iter().filter(|n| n.enabled).map(|n| n.id).collect();
    let targets: Vec<u64> = parent.nodes.iter().filter(|n| n.enabled && !n.is_input()).map(|n| n.id).collect();
    for _ in 0..32 {
        let key = EdgeKey {
            source: *sources.choose(rng)?,
            target: *targets.choose(rng)?,
            time_skip: rng.random_range(cfg.min_time_skip..=cfg.max_time_skip),
        };
        if !live.contains(&key) {
            let mut child = fresh_child(parent);
            connect(&mut child, inn, key);
            return Some(child);
        }
    }
    None
}

fn enable_edge<R: Rng + ?Sized>(parent: &Genome, rng: &mut R) -> Option<Genome> {
    let live = enabled_keys(parent);
    let candidates: Vec<usize> = (0..parent.edges.len())
        .filter(|&i| !parent.edges[i].enabled && !live.contains(&parent.edges[i].key()))
        .collect();
    let i = *candidates.choose(rng)?;
    let mut child = fresh_child(parent);
    child.edges[i].enabled = true;
    Some(child)
}

fn disable_edge<R: Rng + ?Sized>(parent: &Genome, rng: &mut R) -> Option<Genome> {
    let mut candidates: Vec<usize> = (0..parent.edges.len()).filter(|&i| parent.edges[i].enabled).collect();
    candidates.shuffle(rng);
    for i in candidates {
        let mut child = fresh_child(parent);
        child.edges[i].enabled = false;
        if child.outputs_connected() {
            return Some(child);
        }
    }
    None
}

fn add_node<R: Rng + ?Sized>(parent: &Genome, inn: &mut Innovations, rng: &mut R) -> Option<Genome> {
    let depth = loop {
        let d: f64 = rng.random();
        if d > 0.0 {
            break d;
        }
    };
    let active = parent.active_nodes();
    let usable: Vec<&NodeGene> = parent.nodes.iter().filter(|n| n.enabled && active.contains(&n.id)).collect();
    let below: Vec<u64> = usable.iter().filter(|n| n.depth < depth).map(|n| n.id).collect();
    let above: Vec<u64> = usable.iter().filter(|n| n.depth > depth && !n.is_input()).map(|n| n.id).collect();
    if below.is_empty() || above.is_empty() {
        return None;
    }
    let mut child = fresh_child(parent);
    let id = inn.node();
    child.nodes.push(hidden_node(id, depth, random_cell(rng)));
    for src in random_subset(&below, mean_degree(parent, true), rng) {
        child.edges.push(new_edge(inn, src, id, 0));
    }
    for dst in random_subset(&above, mean_degree(parent, false), rng) {
        child.edges.push(new_edge(inn, id, dst, 0));
    }
    Some(child)
}

fn split_node<R: Rng + ?Sized>(parent: &Genome, inn: &mut Innovations, rng: &mut R) -> Option<Genome> {
    let candidates: Vec<&NodeGene> = parent.nodes.iter().filter(|n| n.is_hidden() && n.enabled).collect();
    let node = *candidates.choose(rng)?;
    let n = node.id;
    let incident: Vec<&EdgeGene> = parent.edges.iter().filter(|e| e.enabled && (e.source == n || e.target == n)).collect();
    let ins: Vec<(u64, u32)> = incident.iter().filter(|e| e.target == n && e.source != n).map(|e| (e.source, e.time_skip)).collect();
    let outs: Vec<(u64, u32)> = incident.iter().filter(|e| e.source == n && e.target != n).map(|e| (e.target, e.time_skip)).collect();
    let loops: Vec<u32> = incident.iter().filter(|e| e.source == n && e.target == n).map(|e| e.time_skip).collect();
    if ins.is_empty() || outs.is_empty() {
        return None;
    }
    let mut child = fresh_child(parent);
    for e in child.edges.iter_mut().filter(|e| e.source == n || e.target == n) {
        e.enabled = false;
    }
    child.node_mut(n)?.enabled = false;

    let (ins_a, ins_b) = split_two(&ins, rng);
    let (outs_a, outs_b) = split_two(&outs, rng);
    for (ins, outs) in [(ins_a, outs_a), (ins_b, outs_b)] {
        let id = inn.node();
        child.nodes.push(hidden_node(id, node.depth, random_cell(rng)));
        for (src, skip) in ins {
            child.edges.push(new_edge(inn, src, id, skip));
        }
        for (dst, skip) in outs {
            child.edges.push(new_edge(inn, id, dst, skip));
        }
        for &skip in &loops {
            child.edges.push(new_edge(inn, id, id, skip));
        }
    }
    Some(child)
}

fn merge_node<R: Rng + ?Sized>(parent: &Genome, inn: &mut Innovations, rng: &mut R) -> Option<Genome> {
    let candidates: Vec<&NodeGene> = parent.nodes.iter().filter(|n| n.is_hidden() && n.enabled).collect();
    if candidates.len() < 2 {
        return None;
    }
    let pair: Vec<&&NodeGene> = candidates.choose_multiple(rng, 2).collect();
    let (a, b) = (pair[0], pair[1]);
    let merged_depth = 0.5 * (a.depth + b.depth);
    let id = inn.node();
    let remap = |x: u64| if x == a.id || x == b.id { id } else { x };
    let depth_of = |x: u64| if x == id { merged_depth } else { parent.node(x).map_or(f64::NAN, |n| n.depth) };

    let mut keys = BTreeSet::new();
    for e in parent.edges.iter().filter(|e| e.enabled) {
        if ![e.source, e.target].iter().any(|&x| x == a.id || x == b.id) {
            continue;
        }
        let key = EdgeKey { source: remap(e.source), target: remap(e.target), time_skip: e.time_skip };
        if key.time_skip == 0 && depth_of(key.source) >= depth_of(key.target) {
            continue;
        }
        keys.insert(key);
    }
    let mut child = fresh_child(parent);
    for e in child.edges.iter_mut().filter(|e| [a.id, b.id].contains(&e.source) || [a.id, b.id].contains(&e.target)) {
        e.enabled = false;
    }
    for x in [a.id, b.id] {
        child.node_mut(x)?.enabled = false;
    }
    child.nodes.push(hidden_node(id, merged_depth, random_cell(rng)));
    for key in keys {
        child.edges.push(new_edge(inn, key.source, key.target, key.time_skip));
    }
    Some(child)
}

fn enable_node<R: Rng + ?Sized>(parent: &Genome, rng: &mut R) -> Option<Genome> {
    let candidates: Vec<usize> = (0..parent.nodes.len())
        .filter(|&i| parent.nodes[i].is_hidden() && !parent.nodes[i].enabled)
        .collect();
    let i = *candidates.choose(rng)?;
    let mut child = fresh_child(parent);
    child.nodes[i].enabled = true;
    Some(child)
}

fn disable_node<R: Rng + ?Sized>(parent: &Genome, rng: &mut R) -> Option<Genome> {
    let mut candidates: Vec<usize> = (0..parent.nodes.len())
        .filter(|&i| parent.nodes[i].is_hidden() && parent.nodes[i].enabled)
        .collect();
    candidates.shuffle(rng);
    for i in candidates {
        let mut child = fresh_child(parent);
        child.nodes[i].enabled = false;
        if child.outputs_connected() {
            return Some(child);
        }
    }
    None
}

/// Applies one specific mutation, or returns `None` when it cannot apply to
/// `parent` (or would disconnect an output).
pub fn apply_mutation<R: Rng + ?Sized>(
    kind: MutationKind,
    parent: &Genome,
    cfg: &OperatorConfig,
    inn: &mut Innovations,
    rng: &mut R,
) -> Option<Genome> {
    let mut child = match kind {
        MutationKind::AddEdge => add_edge(parent, inn, rng),
        MutationKind::AddRecurrentEdge => add_recurrent_edge(parent, cfg, inn, rng),
        MutationKind::EnableEdge => enable_edge(parent, rng),
        MutationKind::DisableEdge => disable_edge(parent, rng),
        MutationKind::AddNode => add_node(parent, inn, rng),
        MutationKind::SplitNode => split_node(parent, inn, rng),
        MutationKind::MergeNode => merge_node(parent, inn, rng),
        MutationKind::EnableNode => enable_node(parent, rng),
        MutationKind::DisableNode => disable_node(parent, rng),
        MutationKind::Clone => Some(fresh_child(parent)),
    }?;
    if !child.outputs_connected() {
        return None;
    }
    inherit_weights(&mut child, &[parent], rng);
    Some(child)
}

/// Produces a child with exactly one structural change drawn from the
/// configured mutation weights, falling back to a clone when the drawn
/// mutations keep turning out inapplicable.
pub fn mutate<R: Rng + ?Sized>(
    parent: &Genome,
    cfg: &OperatorConfig,
    inn: &mut Innovations,
    rng: &mut R,
) -> (Genome, MutationKind) {
    for _ in 0..cfg.max_retries {
        let kind = cfg.draw_mutation(rng);
        if let Some(child) = apply_mutation(kind, parent, cfg, inn, rng) {
            return (child, kind);
        }
    }
    (fresh_child(parent), MutationKind::Clone)
}

/// Recombines two parents. The child keeps all of `better`'s structure; edges
/// found only in `other` are carried over with `cfg.other_parent_inclusion`
/// probability (bringing their endpoint nodes along). Values of components
/// present in both parents are `better`'s or the mean of both.
pub fn crossover<R: Rng + ?Sized>(
    better: &Genome,
    other: &Genome,
    cfg: &OperatorConfig,
    rng: &mut R,
) -> Result<Genome> {
    if better.input_names != other.input_names || better.output_names != other.output_names {
        return Err(Error::contract("crossover parents have different inputs or outputs"));
    }
    let mut child = fresh_child(better);
    let present: BTreeSet<EdgeKey> = better.edges.iter().map(EdgeGene::key).collect();
    for e in &other.edges {
        if present.contains(&e.key()) || !rng.random_bool(cfg.other_parent_inclusion) {
            continue;
        }
        for end in [e.source, e.target] {
            if child.node(end).is_none() {
                child.nodes.push(other.node(end).expect("parent edges reference parent nodes").clone());
            }
        }
        child.edges.push(e.clone());
    }
    inherit_weights(&mut child, &[better, other], rng);

    for e in &mut child.edges {
        if let (Some(b), Some(o)) = (better.edge_by_key(e.key()), other.edge_by_key(e.key())) {
            if !rng.random_bool(cfg.better_weight_probability) {
                e.weight = 0.5 * (b.weight + o.weight);
            }
        }
    }
    for n in &mut child.nodes {
        if let (Some(b), Some(o)) = (better.node(n.id), other.node(n.id)) {
            if b.cell == o.cell && !rng.random_bool(cfg.better_weight_probability) {
                for (i, p) in n.params.iter_mut().enumerate() {
                    *p = 0.5 * (b.params[i] + o.params[i]);
                }
            }
        }
    }
    Ok(child)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{seed_genome, structural_hash, validate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seed(n_in: usize) -> (Genome, Innovations) {
        let names: Vec<String> = (0..n_in).map(|i| format!("x{i}")).collect();
        let g = seed_genome(&names, &["y".into()], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        (g, Innovations::after_seed(n_in, 1))
    }

    #[test]
    fn clone_keeps_structure_and_weights() {
        let (g, mut inn) = seed(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = apply_mutation(MutationKind::Clone, &g, &OperatorConfig::default(), &mut inn, &mut rng).unwrap();
        assert_eq!(structural_hash(&c), structural_hash(&g));
        assert_eq!(c.edges, g.edges);
        assert_eq!(c.nodes, g.nodes);
    }

    #[test]
    fn add_node_on_minimal_seed() {
        let (g, mut inn) = seed(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = apply_mutation(MutationKind::AddNode, &g, &OperatorConfig::default(), &mut inn, &mut rng).unwrap();
        assert_eq!(c.nodes.len(), 3);
        assert!(c.edges.len() >= 3);
        assert!(validate(&c).is_empty());
        assert_eq!(c.edges[0].weight, g.edges[0].weight);
    }

    #[test]
    fn seed_cannot_lose_its_only_edge() {
        let (g, mut inn) = seed(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = OperatorConfig::default();
        assert!(apply_mutation(MutationKind::DisableEdge, &g, &cfg, &mut inn, &mut rng).is_none());
        assert!(apply_mutation(MutationKind::SplitNode, &g, &cfg, &mut inn, &mut rng).is_none());
        assert!(apply_mutation(MutationKind::MergeNode, &g, &cfg, &mut inn, &mut rng).is_none());
        assert!(apply_mutation(MutationKind::EnableEdge, &g, &cfg, &mut inn, &mut rng).is_none());
    }

    #[test]
    fn mutate_falls_back_to_clone() {
        let (g, mut inn) = seed(1);
        let mut cfg = OperatorConfig::default();
        cfg.mutation_weights = [(MutationKind::DisableEdge, 1.0)].into_iter().collect();
        let (child, kind) = mutate(&g, &cfg, &mut inn, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(kind, MutationKind::Clone);
        assert_eq!(child.edges, g.edges);
    }

    #[test]
    fn new_edge_is_the_only_fresh_weight() {
        let (g, mut inn) = seed(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let child = apply_mutation(MutationKind::AddRecurrentEdge, &g, &OperatorConfig::default(), &mut inn, &mut rng).unwrap();
        let mut again = child.clone();
        let stats = inherit_weights(&mut again, &[&g], &mut rng);
        assert_eq!(stats.initialized_edges, 1);
        assert_eq!(stats.inherited_edges, g.edges.len());
        assert_eq!(stats.initialized_nodes, 0);
    }

    #[test]
    fn self_crossover_is_identity_in_structure() {
        let (g, mut inn) = seed(2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = OperatorConfig::default();
        let (g, _) = mutate(&g, &cfg, &mut inn, &mut rng);
        let c = crossover(&g, &g, &cfg, &mut rng).unwrap();
        assert_eq!(structural_hash(&c), structural_hash(&g));
        assert_eq!(c.edges, g.edges);
    }

    #[test]
    fn forced_inclusion_unions_edges() {
        let (g, mut inn) = seed(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cfg = OperatorConfig::default();
        let a = apply_mutation(MutationKind::AddNode, &g, &cfg, &mut inn, &mut rng).unwrap();
        let b = apply_mutation(MutationKind::AddNode, &g, &cfg, &mut inn, &mut rng).unwrap();
        cfg.other_parent_inclusion = 1.0;
        let c = crossover(&a, &b, &cfg, &mut rng).unwrap();
        let keys = |g: &Genome| g.edges.iter().map(EdgeGene::key).collect::<BTreeSet<_>>();
        let union: BTreeSet<_> = keys(&a).union(&keys(&b)).copied().collect();
        assert_eq!(keys(&c), union);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn arity_mismatch_is_a_contract_error() {
        let (a, _) = seed(1);
        let (b, _) = seed(2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(crossover(&a, &b, &OperatorConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_child() {
        let (g, inn) = seed(2);
        let cfg = OperatorConfig::default();
        let run = || {
            let mut inn = inn.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut cur = g.clone();
            for _ in 0..30 {
                cur = mutate(&cur, &cfg, &mut inn, &mut rng).0;
            }
            cur
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn preset_rates_validate() {
        OperatorConfig::islands().validate().unwrap();
        OperatorConfig::single_population().validate().unwrap();
        let mut bad = OperatorConfig::islands();
        bad.inter_crossover_rate = 0.5;
        assert!(bad.validate().is_err());
    }
}
