//! NSGA-II over scenario chromosomes with nuclear-gene crossover and the
//! diversity-seeking property mutation.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{EpisodeTrace, TerminalOutcome};
use crate::geom::{dist2, Vec2};
use crate::scenario::{
    NuclearGene, PropertyDomain, ScenarioChromosome, ScenarioError, POSITION_DOMAIN,
};

#[derive(Debug, Error, PartialEq)]
pub enum GaError {
    #[error("vector dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("missing trace for individual {0}")]
    MissingTrace(usize),
    #[error("crossover point {s} out of range for {len} nuclear genes")]
    CrossoverPoint { s: usize, len: usize },
    #[error("empty mutation candidate set")]
    NoCandidates,
    #[error("invalid GA config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub threshold_c: f64,
    pub threshold_m: f64,
    pub m: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            generations: 20,
            threshold_c: 0.2,
            threshold_m: 0.8,
            m: 5,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(GaError::Config("population_size must be even and >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold_c) || !(0.0..=1.0).contains(&self.threshold_m) {
            return Err(GaError::Config("thresholds must lie in [0, 1]".into()));
        }
        if self.m == 0 {
            return Err(GaError::Config("m must be >= 1".into()));
        }
        Ok(())
    }
}

/// Objective values; all three are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    pub dtl: f64,
    pub ttl: f64,
    pub diversity: f64,
}

impl FitnessVector {
    pub fn objectives(&self) -> [f64; 3] {
        [self.dtl, self.ttl, self.diversity]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<G> {
    pub chromosome: G,
    pub fitness: FitnessVector,
    pub rank: usize,
    pub crowding: f64,
}

/// A property-addressable gene.
pub trait Gene: Clone + PartialEq {
    fn property_count(&self) -> usize;
    fn property(&self, j: usize) -> f64;
    fn set_property(&mut self, j: usize, v: f64);
    fn domain(&self, j: usize) -> PropertyDomain;
}

/// A chromosome viewed as an ordered list of nuclear genes.
pub trait Genome: Clone + Send + Sync {
    type G: Gene;
    fn genes(&self) -> Vec<Self::G>;
    fn from_genes(genes: &[Self::G]) -> Self;
    fn to_vector(&self) -> Vec<f64>;
    fn scenario(&self) -> &ScenarioChromosome;
    fn validate(&self) -> Result<(), ScenarioError>;
}

impl Gene for NuclearGene {
    fn property_count(&self) -> usize {
        NuclearGene::property_count(self)
    }
    fn property(&self, j: usize) -> f64 {
        NuclearGene::property(self, j)
    }
    fn set_property(&mut self, j: usize, v: f64) {
        NuclearGene::set_property(self, j, v)
    }
    fn domain(&self, j: usize) -> PropertyDomain {
        NuclearGene::domain(self, j)
    }
}

impl Genome for ScenarioChromosome {
    type G = NuclearGene;
    fn genes(&self) -> Vec<NuclearGene> {
        self.nuclear_genes()
    }
    fn from_genes(genes: &[NuclearGene]) -> Self {
        ScenarioChromosome::from_nuclear_genes(genes)
    }
    fn to_vector(&self) -> Vec<f64> {
        ScenarioChromosome::to_vector(self)
    }
    fn scenario(&self) -> &ScenarioChromosome {
        self
    }
    fn validate(&self) -> Result<(), ScenarioError> {
        ScenarioChromosome::validate(self)
    }
}

/// Scenario extended with a destination per object (object gene carries
/// type, start, speed and destination).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteChromosome {
    pub scenario: ScenarioChromosome,
    pub destinations: Vec<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteGene {
    Base(NuclearGene),
    Object(NuclearGene, Vec2),
}

impl Gene for RouteGene {
    fn property_count(&self) -> usize {
        match self {
            RouteGene::Base(g) => g.property_count(),
            RouteGene::Object(g, _) => g.property_count() + 2,
        }
    }
    fn property(&self, j: usize) -> f64 {
        match self {
            RouteGene::Base(g) => g.property(j),
            RouteGene::Object(g, d) => {
                let n = g.property_count();
                if j < n {
                    g.property(j)
                } else {
                    d[j - n]
                }
            }
        }
    }
    fn set_property(&mut self, j: usize, v: f64) {
        match self {
            RouteGene::Base(g) => g.set_property(j, v),
            RouteGene::Object(g, d) => {
                let n = g.property_count();
                if j < n {
                    g.set_property(j, v)
                } else {
                    d[j - n] = v
                }
            }
        }
    }
    fn domain(&self, j: usize) -> PropertyDomain {
        match self {
            RouteGene::Base(g) => g.domain(j),
            RouteGene::Object(g, _) => {
                if j < g.property_count() {
                    g.domain(j)
                } else {
                    POSITION_DOMAIN
                }
            }
        }
    }
}

impl RouteChromosome {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, object_count: usize) -> Self {
        let scenario = ScenarioChromosome::random_with_objects(rng, object_count);
        let destinations = (0..object_count)
            .map(|_| [POSITION_DOMAIN.sample(rng), POSITION_DOMAIN.sample(rng)])
            .collect();
        RouteChromosome {
            scenario,
            destinations,
        }
    }
}

impl Genome for RouteChromosome {
    type G = RouteGene;
    fn genes(&self) -> Vec<RouteGene> {
        let mut d = self.destinations.iter();
        self.scenario
            .nuclear_genes()
            .into_iter()
            .map(|g| match g {
                NuclearGene::Object(_) => RouteGene::Object(g, *d.next().expect("one destination per object")),
                other => RouteGene::Base(other),
            })
            .collect()
    }
    fn from_genes(genes: &[RouteGene]) -> Self {
        let mut base = Vec::with_capacity(genes.len());
        let mut destinations = Vec::new();
        for g in genes {
            match *g {
                RouteGene::Base(b) => base.push(b),
                RouteGene::Object(b, d) => {
                    base.push(b);
                    destinations.push(d);
                }
            }
        }
        RouteChromosome {
            scenario: ScenarioChromosome::from_nuclear_genes(&base),
            destinations,
        }
    }
    fn to_vector(&self) -> Vec<f64> {
        let mut v = self.scenario.to_vector();
        for d in &self.destinations {
            v.extend_from_slice(d);
        }
        v
    }
    fn scenario(&self) -> &ScenarioChromosome {
        &self.scenario
    }
    fn validate(&self) -> Result<(), ScenarioError> {
        self.scenario.validate()?;
        let bad: Vec<String> = self
            .destinations
            .iter()
            .enumerate()
            .flat_map(|(i, d)| {
                d.iter()
                    .enumerate()
                    .filter(|(_, v)| !POSITION_DOMAIN.contains(**v))
                    .map(move |(j, _)| format!("objects[{i}].destination[{j}] out of [-1,1]"))
            })
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Range(bad))
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean distance from each vector to every vector of the set (self included).
pub fn diversity_of_vectors(vectors: &[Vec<f64>]) -> Result<Vec<f64>, GaError> {
    let k = vectors.len();
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
            return Err(GaError::Dimension(first.len(), bad.len()));
        }
    }
    let mut sums = vec![0.0; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = euclid(&vectors[i], &vectors[j]);
            sums[i] += d;
            sums[j] += d;
        }
    }
    Ok(sums.into_iter().map(|s| s / k as f64).collect())
}

pub fn diversity_scores<G: Genome>(generation: &[G]) -> Result<Vec<f64>, GaError> {
    let vectors: Vec<Vec<f64>> = generation.iter().map(|g| g.to_vector()).collect();
    diversity_of_vectors(&vectors)
}

/// Distance-to-landing and time-to-landing of one trace, with the map
/// diagonal standing in for non-landing outcomes.
pub fn trace_objectives(trace: &EpisodeTrace, diagonal: f64, timeout: f64) -> (f64, f64) {
    let dtl = match trace.outcome {
        Some(TerminalOutcome::Landed { x, y }) => dist2([x, y], trace.marker),
        _ => diagonal,
    };
    (dtl, trace.duration.min(timeout))
}

pub fn evaluate_generation<G: Genome>(
    population: &[G],
    traces: &[&EpisodeTrace],
    diagonal: f64,
    timeout: f64,
) -> Result<Vec<Individual<G>>, GaError> {
    if traces.len() < population.len() {
        return Err(GaError::MissingTrace(traces.len()));
    }
    let div = diversity_scores(population)?;
    Ok(population
        .iter()
        .zip(traces)
        .zip(div)
        .map(|((c, t), diversity)| {
            let (dtl, ttl) = trace_objectives(t, diagonal, timeout);
            Individual {
                chromosome: c.clone(),
                fitness: FitnessVector { dtl, ttl, diversity },
                rank: 0,
                crowding: 0.0,
            }
        })
        .collect())
}

/// `a` dominates `b` under maximization.
pub fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Fast non-dominated sort; returns fronts of indices.
pub fn nondominated_sort(points: &[[f64; 3]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    let mut fronts = vec![Vec::new()];
    for p in 0..n {
        for q in 0..n {
            if dominates(&points[p], &points[q]) {
                dominated_by[p].push(q);
            } else if dominates(&points[q], &points[p]) {
                count[p] += 1;
            }
        }
        if count[p] == 0 {
            fronts[0].push(p);
        }
    }
    let mut i = 0;
    while !fronts[i].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[i] {
            for &q in &dominated_by[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(next);
        i += 1;
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(points: &[[f64; 3]]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..3 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| points[a][m].total_cmp(&points[b][m]).then(a.cmp(&b)));
        let lo = points[order[0]][m];
        let hi = points[order[n - 1]][m];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let gap = points[order[w + 1]][m] - points[order[w - 1]][m];
            d[order[w]] += gap / range;
        }
    }
    d
}

/// Assigns rank and crowding in place.
pub fn rank_population<G>(pop: &mut [Individual<G>]) {
    let points: Vec<[f64; 3]> = pop.iter().map(|i| i.fitness.objectives()).collect();
    for (r, front) in nondominated_sort(&points).into_iter().enumerate() {
        let fp: Vec<[f64; 3]> = front.iter().map(|&i| points[i]).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&fp)) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
}

fn selection_order(a: (usize, f64, usize), b: (usize, f64, usize)) -> Ordering {
    a.0.cmp(&b.0)
        .then_with(|| b.1.total_cmp(&a.1))
        .then(a.2.cmp(&b.2))
}

/// Best `population_size` of `P_t ∪ O_t` by (rank, -crowding, index).
/// Rank and crowding must already be assigned on the union.
pub fn select_parents<G: Clone>(union: &[Individual<G>], population_size: usize) -> Vec<Individual<G>> {
    let mut order: Vec<usize> = (0..union.len()).collect();
    order.sort_by(|&a, &b| {
        selection_order(
            (union[a].rank, union[a].crowding, a),
            (union[b].rank, union[b].crowding, b),
        )
    });
    order.into_iter().take(population_size).map(|i| union[i].clone()).collect()
}

/// Swaps every nuclear gene at position `s` or later.
pub fn nuclear_gene_crossover<G: Genome>(a: &G, b: &G, s: usize) -> Result<(G, G), GaError> {
    let mut ga = a.genes();
    let mut gb = b.genes();
    if s >= ga.len() || ga.len() != gb.len() {
        return Err(GaError::CrossoverPoint { s, len: ga.len() });
    }
    for k in s..ga.len() {
        std::mem::swap(&mut ga[k], &mut gb[k]);
    }
    Ok((G::from_genes(&ga), G::from_genes(&gb)))
}

/// The candidate farthest (sum of absolute differences) from the property
/// values of the generation; ties go to the lowest index.
pub fn property_mutation(candidates: &[f64], generation_values: &[f64]) -> Result<f64, GaError> {
    let mut best: Option<(f64, f64)> = None;
    for &c in candidates {
        let score: f64 = generation_values.iter().map(|y| (c - y).abs()).sum();
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((c, score));
        }
    }
    best.map(|(c, _)| c).ok_or(GaError::NoCandidates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationStrategy {
    /// Best of `m` candidates by distance to the generation.
    Diversity,
    /// Plain uniform resampling.
    Uniform,
}

/// Crossover and mutation on already-selected parents, producing offspring.
pub fn variation<G: Genome, R: Rng + ?Sized>(
    parents: &[G],
    cfg: &GaConfig,
    strategy: MutationStrategy,
    rng: &mut R,
) -> Vec<G> {
    let mut offspring: Vec<G> = Vec::with_capacity(parents.len());
    for pair in parents.chunks(2) {
        if let [a, b] = pair {
            let r: f64 = rng.random();
            if r > cfg.threshold_c {
                let len = a.genes().len();
                let s = rng.random_range(0..len);
                let (x, y) = nuclear_gene_crossover(a, b, s).expect("s drawn within range");
                offspring.push(x);
                offspring.push(y);
            } else {
                offspring.push(a.clone());
                offspring.push(b.clone());
            }
        } else {
            offspring.push(pair[0].clone());
        }
    }

    let parent_genes: Vec<Vec<G::G>> = parents.iter().map(|p| p.genes()).collect();
    for child in offspring.iter_mut() {
        let mut genes = child.genes();
        for (i, gene) in genes.iter_mut().enumerate() {
            for j in 0..gene.property_count() {
                let r: f64 = rng.random();
                if r <= cfg.threshold_m {
                    continue;
                }
                let domain = gene.domain(j);
                let value = match strategy {
                    MutationStrategy::Diversity => {
                        let candidates: Vec<f64> = (0..cfg.m).map(|_| domain.sample(rng)).collect();
                        let column: Vec<f64> = parent_genes.iter().map(|g| g[i].property(j)).collect();
                        property_mutation(&candidates, &column).expect("m >= 1")
                    }
                    MutationStrategy::Uniform => domain.sample(rng),
                };
                gene.set_property(j, value);
            }
        }
        *child = G::from_genes(&genes);
    }
    offspring
}

/// Full variation step: rank the union, select `P_{t+1}`, and derive `O_{t+1}`.
/// Diversity is recomputed over the union before ranking.
pub fn vary<G: Genome, R: Rng + ?Sized>(
    parents: &[Individual<G>],
    offspring: &[Individual<G>],
    cfg: &GaConfig,
    strategy: MutationStrategy,
    rng: &mut R,
) -> (Vec<Individual<G>>, Vec<G>) {
    let mut union: Vec<Individual<G>> = parents.iter().chain(offspring).cloned().collect();
    let chromosomes: Vec<G> = union.iter().map(|i| i.chromosome.clone()).collect();
    if let Ok(div) = diversity_scores(&chromosomes) {
        for (ind, d) in union.iter_mut().zip(div) {
            ind.fitness.diversity = d;
        }
    }
    rank_population(&mut union);
    let next = select_parents(&union, cfg.population_size);
    let selected: Vec<G> = next.iter().map(|i| i.chromosome.clone()).collect();
    let children = variation(&selected, cfg, strategy, rng);
    (next, children)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diversity_hand_example() {
        let d = diversity_of_vectors(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((d[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!(diversity_of_vectors(&[vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn simple_fronts() {
        assert_eq!(nondominated_sort(&[[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]), vec![vec![1], vec![0]]);
        assert_eq!(nondominated_sort(&[[2.0, 1.0, 1.0], [1.0, 2.0, 1.0]]), vec![vec![0, 1]]);
    }

    #[test]
    fn crowding_examples() {
        assert_eq!(crowding_distance(&[[1.0, 1.0, 1.0]]), vec![f64::INFINITY]);
        let c = crowding_distance(&[[0.0, 1.0, 1.0], [0.5, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        assert_eq!(c[1], 1.0);
        assert!(c[0].is_infinite() && c[2].is_infinite());
    }

    #[test]
    fn mutation_hand_example() {
        assert_eq!(property_mutation(&[0.05, 0.9], &[0.1, 0.2]).unwrap(), 0.9);
        assert_eq!(property_mutation(&[0.3], &[]).unwrap(), 0.3);
        assert_eq!(property_mutation(&[], &[0.1]), Err(GaError::NoCandidates));
    }

    #[test]
    fn crossover_at_zero_swaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ScenarioChromosome::random_with_objects(&mut rng, 3);
        let b = ScenarioChromosome::random_with_objects(&mut rng, 3);
        let (x, y) = nuclear_gene_crossover(&a, &b, 0).unwrap();
        assert_eq!((x, y), (b.clone(), a.clone()));
        assert!(nuclear_gene_crossover(&a, &b, 13).is_err());
    }

    #[test]
    fn no_variation_at_unit_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let parents: Vec<ScenarioChromosome> =
            (0..6).map(|_| ScenarioChromosome::random_with_objects(&mut rng, 3)).collect();
        let cfg = GaConfig {
            threshold_c: 1.0,
            threshold_m: 1.0,
            ..Default::default()
        };
        let kids = variation(&parents, &cfg, MutationStrategy::Diversity, &mut rng);
        assert_eq!(kids, parents);
    }

    #[test]
    fn route_genome_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = RouteChromosome::random(&mut rng, 3);
        assert_eq!(RouteChromosome::from_genes(&r.genes()), r);
        assert_eq!(r.to_vector().len(), 23 + 6);
        let cfg = GaConfig {
            threshold_m: 0.0,
            ..Default::default()
        };
        let kids = variation(&[r.clone(), r], &cfg, MutationStrategy::Uniform, &mut rng);
        assert!(kids.iter().all(|k| k.validate().is_ok()));
    }
}
