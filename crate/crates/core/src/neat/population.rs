use rand::Rng;
use serde::{Deserialize, Serialize};

use super::genome::{compatibility, crossover, Genome, NodeId, FIRST_OUTPUT};
use super::innovation::InnovationDb;
use super::{NeatError, NeatParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u32,
    pub representative: Genome,
    /// Indices into the population's genome list.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation: u32,
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    pub threshold: f64,
    pub next_species_id: u32,
}

impl Population {
    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }
}

/// `size` minimal genomes sharing one innovation history, speciated with
/// the initial threshold.
pub fn initial_population<R: Rng + ?Sized>(
    rng: &mut R,
    outputs: usize,
    size: usize,
    params: &NeatParams,
) -> Result<(Population, InnovationDb), NeatError> {
    if outputs == 0 {
        return Err(NeatError::NoOutputs);
    }
    if size == 0 {
        return Err(NeatError::EmptyPopulation);
    }
    let mut db = InnovationDb::new(FIRST_OUTPUT + outputs as NodeId);
    let mut genomes: Vec<Genome> = (0..size)
        .map(|_| Genome::minimal(outputs, &mut db, rng, params.weight_init_range))
        .collect();
    let mut next_species_id = 0;
    let species = speciate(
        &mut genomes,
        Vec::new(),
        params.compat_threshold,
        params,
        &mut next_species_id,
    );
    let population = Population {
        generation: 0,
        genomes,
        species,
        threshold: params.compat_threshold,
        next_species_id,
    };
    Ok((population, db))
}

/// Assign every genome to the first species whose representative lies
/// strictly closer than `threshold`, founding a new species (represented by
/// the founder) otherwise. `previous` supplies existing species and their
/// representatives; their member lists are rebuilt. Empty species are
/// dropped.
pub fn speciate(
    genomes: &mut [Genome],
    previous: Vec<Species>,
    threshold: f64,
    params: &NeatParams,
    next_species_id: &mut u32,
) -> Vec<Species> {
    let mut species: Vec<Species> = previous
        .into_iter()
        .map(|s| Species {
            members: Vec::new(),
            ..s
        })
        .collect();
    for (i, g) in genomes.iter_mut().enumerate() {
        let home = species
            .iter()
            .position(|s| compatibility(g, &s.representative, params.c1, params.c2, params.c3) < threshold);
        let k = match home {
            Some(k) => k,
            None => {
                species.push(Species {
                    id: *next_species_id,
                    representative: g.clone(),
                    members: Vec::new(),
                });
                *next_species_id += 1;
                species.len() - 1
            }
        };
        species[k].members.push(i);
        g.species = Some(species[k].id);
    }
    species.retain(|s| !s.members.is_empty());
    species
}

/// Split `slots` proportionally to `weights` (largest remainder; ties go to
/// the lower index). Zero total weight falls back to `fallback`.
fn apportion(weights: &[f64], fallback: &[f64], slots: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let (weights, total) = if total > 0.0 {
        (weights, total)
    } else {
        (fallback, fallback.iter().sum())
    };
    let exact: Vec<f64> = weights.iter().map(|w| w / total * slots as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(slots.saturating_sub(assigned)) {
        quota[k] += 1;
    }
    quota
}

/// Produce the next generation.
///
/// Offspring quotas are proportional to each species' total shared fitness
/// (raw fitness divided by species size, summed over members). The global
/// champion is copied unchanged first; species of at least
/// `species_elitism_min_size` members also keep their champion. Remaining
/// offspring come from the top `survival_fraction` of each species, by
/// crossover with probability `crossover_prob` or by cloning, and are then
/// mutated. Population size is preserved exactly.
pub fn next_generation<R: Rng + ?Sized>(
    population: &Population,
    fitnesses: &[f64],
    rng: &mut R,
    db: &mut InnovationDb,
    params: &NeatParams,
) -> Result<Population, NeatError> {
    let size = population.genomes.len();
    if fitnesses.len() != size {
        return Err(NeatError::FitnessLength {
            expected: size,
            got: fitnesses.len(),
        });
    }
    if size == 0 {
        return Err(NeatError::EmptyPopulation);
    }
    if let Some(index) = fitnesses.iter().position(|f| !f.is_finite() || *f < 0.0) {
        return Err(NeatError::InvalidFitness {
            index,
            value: fitnesses[index],
        });
    }
    let by_fitness = |a: &usize, b: &usize| fitnesses[*b].total_cmp(&fitnesses[*a]).then(a.cmp(b));
    let champion = (0..size).min_by(by_fitness).expect("non-empty");

    let ranked: Vec<Vec<usize>> = population
        .species
        .iter()
        .map(|s| {
            let mut m = s.members.clone();
            m.sort_by(by_fitness);
            m
        })
        .collect();
    let shared: Vec<f64> = ranked
        .iter()
        .map(|m| m.iter().map(|&i| fitnesses[i]).sum::<f64>() / m.len() as f64)
        .collect();
    let sizes: Vec<f64> = ranked.iter().map(|m| m.len() as f64).collect();
    let quotas = apportion(&shared, &sizes, size - 1);

    let mut children = Vec::with_capacity(size);
    children.push(Genome {
        species: None,
        ..population.genomes[champion].clone()
    });
    for (members, &quota) in ranked.iter().zip(&quotas) {
        let mut quota = quota;
        if quota == 0 {
            continue;
        }
        let best = members[0];
        if members.len() >= params.species_elitism_min_size && best != champion {
            children.push(Genome {
                species: None,
                ..population.genomes[best].clone()
            });
            quota -= 1;
        }
        let survivors = ((params.survival_fraction * members.len() as f64).ceil() as usize).clamp(1, members.len());
        let pool = &members[..survivors];
        for _ in 0..quota {
            let mut child = if pool.len() >= 2 && rng.random_bool(params.crossover_prob) {
                let i = rng.random_range(0..pool.len());
                let mut j = rng.random_range(0..pool.len() - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = (pool[i], pool[j]);
                let (fa, fb) = (fitnesses[a], fitnesses[b]);
                let (fitter, other) = if by_fitness(&a, &b).is_le() { (a, b) } else { (b, a) };
                crossover(
                    &population.genomes[fitter],
                    &population.genomes[other],
                    fa == fb,
                    params.reenable_prob,
                    rng,
                )
            } else {
                population.genomes[pool[rng.random_range(0..pool.len())]].clone()
            };
            child.species = None;
            child.mutate(rng, db, params);
            children.push(child);
        }
    }
    debug_assert_eq!(children.len(), size);

    let previous: Vec<Species> = population
        .species
        .iter()
        .map(|s| Species {
            id: s.id,
            representative: population.genomes[s.members[rng.random_range(0..s.members.len())]].clone(),
            members: Vec::new(),
        })
        .collect();
    let mut next_species_id = population.next_species_id;
    let species = speciate(
        &mut children,
        previous,
        population.threshold,
        params,
        &mut next_species_id,
    );
    let threshold = match species.len().cmp(&params.target_species) {
        std::cmp::Ordering::Less => (population.threshold - params.threshold_step).max(params.min_threshold),
        std::cmp::Ordering::Greater => population.threshold + params.threshold_step,
        std::cmp::Ordering::Equal => population.threshold,
    };
    Ok(Population {
        generation: population.generation + 1,
        genomes: children,
        species,
        threshold,
        next_species_id,
    })
}
