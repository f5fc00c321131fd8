//! Islands of elite genomes, offspring generation and extinction.

use std::cmp::Ordering;

use log::{info, warn};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evo::{crossover, mutate, OperatorConfig};
use crate::genome::{Genome, Innovations, Lineage, Route};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub islands: usize,
    pub elite_capacity: usize,
    pub generated_per_island: usize,
    /// Generations between extinction events; 0 disables extinction.
    pub extinct_frequency: usize,
    pub operators: OperatorConfig,
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.islands == 0 || self.elite_capacity == 0 || self.generated_per_island == 0 {
            return Err(Error::Config("islands, elite capacity and generated count must be positive".into()));
        }
        self.operators.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    pub id: usize,
    /// Sorted best first once evaluated.
    pub elite: Vec<Genome>,
    pub generated: Vec<Genome>,
    pub best_fitness: Option<f64>,
    /// Generations since the island's best genome last changed.
    pub stagnation: usize,
    best_id: Option<u64>,
}

impl Island {
    pub fn new(id: usize, elite: Vec<Genome>) -> Self {
        Island { id, elite, generated: Vec::new(), best_fitness: None, stagnation: 0, best_id: None }
    }

    /// Lowest-fitness evaluated elite member.
    pub fn best(&self) -> Option<&Genome> {
        self.elite.iter().filter(|g| g.fitness.is_some()).min_by(|a, b| rank_order(a, b))
    }

    fn refresh_stats(&mut self) {
        let (fit, id) = match self.best() {
            Some(b) => (b.fitness, Some(b.id)),
            None => (None, None),
        };
        if id.is_some() && id == self.best_id {
            self.stagnation += 1;
        } else {
            self.stagnation = 0;
        }
        self.best_fitness = fit;
        self.best_id = id;
    }
}

/// Ordering used everywhere genomes compete: fitness, then older first, then
/// lower id. Unevaluated genomes sort last.
pub fn rank_order(a: &Genome, b: &Genome) -> Ordering {
    let fa = a.fitness.unwrap_or(f64::INFINITY);
    let fb = b.fitness.unwrap_or(f64::INFINITY);
    fa.total_cmp(&fb)
        .then(a.fitness.is_none().cmp(&b.fitness.is_none()))
        .then(a.generation_born.cmp(&b.generation_born))
        .then(a.id.cmp(&b.id))
}

/// Keeps the `n` best of `elite ∪ generated`, sorted best first.
pub fn select_elite(elite: Vec<Genome>, generated: Vec<Genome>, n: usize) -> Result<Vec<Genome>> {
    let mut all: Vec<Genome> = elite.into_iter().chain(generated).collect();
    if all.is_empty() {
        return Err(Error::contract("elite selection over an empty candidate set"));
    }
    if let Some(g) = all.iter().find(|g| g.fitness.is_none()) {
        return Err(Error::contract(format!("genome {} reached selection unevaluated", g.id)));
    }
    all.sort_by(rank_order);
    all.truncate(n);
    Ok(all)
}

/// A record of one extinction event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extinction {
    pub generation: usize,
    pub island: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub config: PopulationConfig,
    pub islands: Vec<Island>,
    pub global_best: Genome,
    pub innovations: Innovations,
    pub extinctions: Vec<Extinction>,
    next_genome_id: u64,
}

impl PopulationState {
    /// Every island starts with one copy of `seed` (each with its own genome id).
    pub fn new(seed: &Genome, config: PopulationConfig) -> Result<Self> {
        config.validate()?;
        let mut single = config.clone();
        if single.islands == 1 && single.operators.inter_crossover_rate > 0.0 {
            info!(
                "single island: folding inter-island rate {} into intra-island crossover",
                single.operators.inter_crossover_rate
            );
            single.operators.intra_crossover_rate += single.operators.inter_crossover_rate;
            single.operators.inter_crossover_rate = 0.0;
        }
        let islands: Vec<Island> = (0..config.islands)
            .map(|i| {
                let mut g = seed.clone();
                g.id = i as u64;
                g.island_id = i;
                g.fitness = None;
                Island::new(i, vec![g])
            })
            .collect();
        Ok(PopulationState {
            global_best: islands[0].elite[0].clone(),
            innovations: Innovations::covering(std::iter::once(seed)),
            islands,
            config: single,
            extinctions: Vec::new(),
            next_genome_id: config.islands as u64,
        })
    }

    fn next_id(&mut self) -> u64 {
        let id = self.next_genome_id;
        self.next_genome_id += 1;
        id
    }

    fn stamp(&mut self, mut child: Genome, island: usize, generation: usize, lineage: Lineage) -> Genome {
        child.id = self.next_id();
        child.island_id = island;
        child.generation_born = generation;
        child.fitness = None;
        child.lineage = lineage;
        child
    }

    /// Draws `generated_per_island` children from the elite of `island`.
    pub fn generate_offspring<R: Rng + ?Sized>(
        &mut self,
        island: usize,
        generation: usize,
        rng: &mut R,
    ) -> Result<Vec<Genome>> {
        if self.islands.get(island).is_none_or(|i| i.elite.is_empty()) {
            return Err(Error::contract(format!("island {island} has no elite to breed from")));
        }
        let ops = self.config.operators.clone();
        let mut out = Vec::with_capacity(self.config.generated_per_island);
        for _ in 0..self.config.generated_per_island {
            let u: f64 = rng.random();
            let mut route = if u < ops.mutation_rate {
                Route::Mutation
            } else if u < ops.mutation_rate + ops.intra_crossover_rate {
                Route::IntraCrossover
            } else {
                Route::InterCrossover
            };
            let donors: Vec<usize> = (0..self.islands.len())
                .filter(|&j| j != island && self.islands[j].best().is_some())
                .collect();
            if route == Route::InterCrossover && donors.is_empty() {
                route = Route::IntraCrossover;
            }
            if route == Route::IntraCrossover && self.islands[island].elite.len() < 2 {
                route = Route::Mutation;
            }
            let elite = &self.islands[island].elite;
            let (child, parents) = match route {
                Route::Mutation => {
                    let parent = elite.choose(rng).expect("non-empty elite");
                    let (child, _) = mutate(parent, &ops, &mut self.innovations, rng);
                    (child, vec![parent.id])
                }
                Route::IntraCrossover => {
                    let pair: Vec<&Genome> = elite.choose_multiple(rng, 2).collect();
                    let (a, b) = order_pair(pair[0], pair[1]);
                    (crossover(a, b, &ops, rng)?, vec![a.id, b.id])
                }
                _ => {
                    let mine = elite.choose(rng).expect("non-empty elite");
                    let donor = *donors.choose(rng).expect("checked above");
                    let theirs = self.islands[donor].best().expect("donor has an evaluated best");
                    let (a, b) = order_pair(mine, theirs);
                    (crossover(a, b, &ops, rng)?, vec![a.id, b.id])
                }
            };
            let child = self.stamp(child, island, generation, Lineage { route, parents });
            out.push(child);
        }
        Ok(out)
    }

    /// Island ids ordered best first by their best elite fitness.
    pub fn rank_islands(&self) -> Result<Vec<usize>> {
        let mut bests = Vec::with_capacity(self.islands.len());
        for isl in &self.islands {
            let best = isl
                .best()
                .and_then(|g| g.fitness)
                .ok_or_else(|| Error::contract(format!("island {} has no evaluated genome", isl.id)))?;
            bests.push((best, isl.id));
        }
        bests.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(bests.into_iter().map(|(_, id)| id).collect())
    }

    /// Erases `island` and refills its elite with mutants of the global best.
    pub fn repopulate<R: Rng + ?Sized>(&mut self, island: usize, generation: usize, rng: &mut R) {
        let best = self.global_best.clone();
        let ops = self.config.operators.clone();
        let mut elite = Vec::with_capacity(self.config.elite_capacity);
        for _ in 0..self.config.elite_capacity {
            let (child, _) = mutate(&best, &ops, &mut self.innovations, rng);
            let lineage = Lineage { route: Route::Repopulation, parents: vec![best.id] };
            elite.push(self.stamp(child, island, generation, lineage));
        }
        let isl = &mut self.islands[island];
        isl.elite = elite;
        isl.generated.clear();
        isl.best_fitness = None;
        isl.best_id = None;
        isl.stagnation = 0;
    }

    /// Replaces each island's elite by selection over its evaluated elite and
    /// generated genomes, then refreshes the global best.
    pub fn select_all(&mut self) -> Result<()> {
        let n = self.config.elite_capacity;
        for isl in &mut self.islands {
            let elite = std::mem::take(&mut isl.elite);
            let generated = std::mem::take(&mut isl.generated);
            isl.elite = select_elite(elite, generated, n)?;
            isl.refresh_stats();
        }
        self.update_global_best().map(|_| ())
    }

    /// Minimum-fitness genome across all island elites; unevaluated genomes
    /// are ignored.
    pub fn update_global_best(&mut self) -> Result<&Genome> {
        let best = self
            .islands
            .iter()
            .filter_map(Island::best)
            .min_by(|a, b| rank_order(a, b))
            .ok_or_else(|| Error::contract("no evaluated genome in any island"))?;
        self.global_best = best.clone();
        Ok(&self.global_best)
    }

    /// Runs the extinction step after 0-based generation `generation`: every
    /// `extinct_frequency` completed generations the worst island is
    /// repopulated.
    pub fn maybe_extinct<R: Rng + ?Sized>(&mut self, generation: usize, rng: &mut R) -> Option<usize> {
        let f = self.config.extinct_frequency;
        if f == 0 || !(generation + 1).is_multiple_of(f) {
            return None;
        }
        let worst = match self.rank_islands() {
            Ok(order) => *order.last()?,
            Err(e) => {
                warn!("skipping extinction at generation {generation}: {e}");
                return None;
            }
        };
        info!("generation {generation}: repopulating island {worst}");
        self.repopulate(worst, generation, rng);
        self.extinctions.push(Extinction { generation, island: worst });
        Some(worst)
    }

    pub fn population_size(&self) -> usize {
        self.islands.iter().map(|i| i.elite.len() + i.generated.len()).sum()
    }
}

fn order_pair<'a>(a: &'a Genome, b: &'a Genome) -> (&'a Genome, &'a Genome) {
    if rank_order(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}
