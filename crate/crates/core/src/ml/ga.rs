use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{encode_labels, Columns};
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Per-gene replacement probability.
    pub mutation_rate: f64,
    pub subset_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Folds of the cross-validated fitness.
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 500,
            crossover_rate: 0.8,
            mutation_rate: 0.1,
            subset_size: 10,
            generations: 50,
            tournament_size: 3,
            cv_folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    /// Sorted, distinct feature indices.
    pub selected: Vec<usize>,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Chromosome,
    pub initial_population: Vec<Chromosome>,
    /// Best-ever fitness after each generation, starting with the initial one.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Deals each class's samples round-robin over `k` folds after a seeded
/// shuffle, so every fold sees each class in proportion.
pub fn stratified_folds(y: &[u32], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<(u32, Vec<usize>)> = Vec::new();
    for (i, &l) in y.iter().enumerate() {
        match by_class.iter_mut().find(|(c, _)| *c == l) {
            Some((_, v)) => v.push(i),
            None => by_class.push((l, vec![i])),
        }
    }
    by_class.sort_by_key(|(c, _)| *c);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Mean held-out accuracy of trees fitted on the `columns` of `x`.
pub fn cv_accuracy(x: &[Vec<f64>], y: &[u32], columns: &[usize], folds: &[usize], k: usize) -> f64 {
    let (classes, yk) = encode_labels(y);
    let cols: Vec<Vec<f64>> = columns.iter().map(|&c| x.iter().map(|r| r[c]).collect()).collect();
    let data = Columns::new(cols.iter().map(|c| c.as_slice()).collect(), &yk, &classes);
    let local: Vec<usize> = (0..columns.len()).collect();
    fold_accuracy(&data, &local, folds, k)
}

fn fold_accuracy(data: &Columns, columns: &[usize], folds: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    let mut used = 0;
    let mut keep = vec![false; folds.len()];
    for f in 0..k {
        keep.iter_mut().zip(folds).for_each(|(kp, &fold)| *kp = fold != f);
        let tested = keep.iter().filter(|&&kp| !kp).count();
        if tested == 0 || tested == folds.len() {
            continue;
        }
        let tree = data.fit(columns, &keep);
        let hits = (0..folds.len())
            .filter(|&i| !keep[i] && data.classes[data.y[i]] == tree.predict_by(|c| data.cols[columns[c]][i]))
            .count();
        total += hits as f64 / tested as f64;
        used += 1;
    }
    if used == 0 {
        0.0
    } else {
        total / used as f64
    }
}

fn validate(cfg: &GaConfig, n_features: usize) -> Result<(), MlError> {
    if cfg.subset_size > n_features {
        return Err(MlError::SubsetTooLarge { subset: cfg.subset_size, features: n_features });
    }
    let rates = [cfg.crossover_rate, cfg.mutation_rate];
    if cfg.subset_size == 0
        || cfg.population_size == 0
        || cfg.tournament_size == 0
        || rates.iter().any(|r| !(0.0..=1.0).contains(r))
    {
        return Err(MlError::Config("GA sizes must be positive and rates in [0, 1]".into()));
    }
    Ok(())
}

/// Evolves feature subsets of `cfg.subset_size` indices out of `n_features`,
/// maximising `fitness`.
pub fn ga_search(
    n_features: usize,
    cfg: &GaConfig,
    mut fitness: impl FnMut(&[usize]) -> f64,
) -> Result<GaOutcome, MlError> {
    validate(cfg, n_features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut evaluate = |genes: Vec<usize>, cache: &mut HashMap<Vec<usize>, f64>| {
        let f = *cache.entry(genes.clone()).or_insert_with(|| fitness(&genes));
        Chromosome { selected: genes, fitness: f }
    };

    if n_features == cfg.subset_size {
        let only = evaluate((0..n_features).collect(), &mut cache);
        return Ok(GaOutcome {
            best: only.clone(),
            initial_population: vec![only.clone()],
            history: vec![only.fitness],
            evaluations: 1,
        });
    }

    let mut population: Vec<Chromosome> = (0..cfg.population_size)
        .map(|_| {
            let mut genes = index::sample(&mut rng, n_features, cfg.subset_size).into_vec();
            genes.sort_unstable();
            evaluate(genes, &mut cache)
        })
        .collect();
    let initial_population = population.clone();
    let fittest = |pop: &[Chromosome]| {
        let mut best = &pop[0];
        for c in pop {
            if c.fitness > best.fitness {
                best = c;
            }
        }
        best.clone()
    };
    let mut best = fittest(&population);
    let mut history = vec![best.fitness];

    for _ in 0..cfg.generations {
        let elite = fittest(&population);
        let mut next = vec![elite];
        while next.len() < cfg.population_size {
            let a = tournament(&population, cfg.tournament_size, &mut rng);
            let b = tournament(&population, cfg.tournament_size, &mut rng);
            let mut genes = if rng.gen_bool(cfg.crossover_rate) {
                crossover(&a.selected, &b.selected, n_features, &mut rng)
            } else {
                a.selected.clone()
            };
            mutate(&mut genes, n_features, cfg.mutation_rate, &mut rng);
            genes.sort_unstable();
            next.push(evaluate(genes, &mut cache));
        }
        population = next;
        let gen_best = fittest(&population);
        if gen_best.fitness > best.fitness {
            best = gen_best;
        }
        history.push(best.fitness);
    }
    Ok(GaOutcome { best, initial_population, history, evaluations: cache.len() })
}

fn tournament<'a, R: Rng>(pop: &'a [Chromosome], size: usize, rng: &mut R) -> &'a Chromosome {
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.gen_range(0..pop.len())];
        if c.fitness > best.fitness {
            best = c;
        }
    }
    best
}

/// Uniform crossover, then repair: drop duplicate genes and refill from the
/// parents' remaining genes, then from unused features.
fn crossover<R: Rng>(a: &[usize], b: &[usize], n_features: usize, rng: &mut R) -> Vec<usize> {
    let size = a.len();
    let mut child: Vec<usize> = Vec::with_capacity(size);
    for (&x, &y) in a.iter().zip(b) {
        let g = if rng.gen_bool(0.5) { x } else { y };
        if !child.contains(&g) {
            child.push(g);
        }
    }
    let mut spare: Vec<usize> = a.iter().chain(b).copied().filter(|g| !child.contains(g)).collect();
    spare.sort_unstable();
    spare.dedup();
    spare.shuffle(rng);
    for g in spare {
        if child.len() == size {
            break;
        }
        child.push(g);
    }
    while child.len() < size {
        let g = rng.gen_range(0..n_features);
        if !child.contains(&g) {
            child.push(g);
        }
    }
    child
}

fn mutate<R: Rng>(genes: &mut [usize], n_features: usize, rate: f64, rng: &mut R) {
    if genes.len() == n_features {
        return;
    }
    for k in 0..genes.len() {
        if rng.gen_bool(rate) {
            loop {
                let g = rng.gen_range(0..n_features);
                if !genes.contains(&g) {
                    genes[k] = g;
                    break;
                }
            }
        }
    }
}

/// Selects the feature subset whose tree has the best stratified
/// cross-validated accuracy.
pub fn ga_select_features(x: &[Vec<f64>], y: &[u32], cfg: &GaConfig) -> Result<GaOutcome, MlError> {
    if x.is_empty() {
        return Err(MlError::Empty);
    }
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch { samples: x.len(), labels: y.len() });
    }
    let n_features = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != n_features) {
        return Err(MlError::Dimension { expected: n_features, got: row.len() });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    let k = cfg.cv_folds.clamp(2, x.len().max(2));
    let folds = stratified_folds(y, k, cfg.seed.wrapping_add(1));
    let (classes, yk) = encode_labels(y);
    let cols: Vec<Vec<f64>> = (0..n_features).map(|f| x.iter().map(|r| r[f]).collect()).collect();
    let data = Columns::new(cols.iter().map(|c| c.as_slice()).collect(), &yk, &classes);
    ga_search(n_features, cfg, |genes| fold_accuracy(&data, genes, &folds, k))
}
