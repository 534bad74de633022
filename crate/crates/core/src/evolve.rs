//! Elitist non-dominated sorting genetic algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nlsolver::{Point, RunCounters};
use crate::pareto::{dominates, filter_nondominated, Front, ParetoPoint, Sense};
use crate::scalar::Scalar;
use crate::scalarize::MooProblem;

/// Pareto rank of every point: 0 for the non-dominated set, k for the set
/// that becomes non-dominated once ranks below k are removed.
pub fn nondominated_sort<T: Scalar>(points: &[Vec<T>], senses: &[Sense]) -> Result<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&points[i], &points[j], senses)? {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&points[j], &points[i], senses)? {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut k = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = k;
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        current = next;
        k += 1;
    }
    Ok(rank)
}

/// Crowding distance within one front. Boundary points of every objective
/// are infinite; interior points sum their neighbours' normalized gaps.
pub fn crowding_distance<T: Scalar>(front: &[Vec<T>], senses: &[Sense]) -> Result<Vec<T>> {
    let n = front.len();
    if n == 0 {
        return Err(Error::EmptyInput("front"));
    }
    if let Some(p) = front.iter().find(|p| p.len() != senses.len()) {
        return Err(Error::LengthMismatch {
            expected: senses.len(),
            got: p.len(),
        });
    }
    let mut dist = vec![T::zero(); n];
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..senses.len() {
        order.sort_by(|&a, &b| front[a][m].partial_cmp(&front[b][m]).unwrap_or(std::cmp::Ordering::Equal));
        let lo = front[order[0]][m];
        let hi = front[order[n - 1]][m];
        dist[order[0]] = T::infinity();
        dist[order[n - 1]] = T::infinity();
        let span = hi - lo;
        if span <= T::zero() {
            continue;
        }
        for k in 1..n.saturating_sub(1) {
            let i = order[k];
            if dist[i].is_finite() {
                dist[i] = dist[i] + (front[order[k + 1]][m] - front[order[k - 1]][m]) / span;
            }
        }
    }
    Ok(dist)
}

fn default_pop() -> usize {
    60
}
fn default_gens() -> usize {
    100
}
fn default_pc() -> f64 {
    0.9
}
fn default_eta_c() -> f64 {
    15.0
}
fn default_pm() -> f64 {
    1.0 / 3.0
}
fn default_eta_m() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    #[serde(default = "default_pop")]
    pub pop: usize,
    #[serde(default = "default_gens")]
    pub gens: usize,
    /// Crossover probability per mating pair.
    #[serde(default = "default_pc")]
    pub pc: f64,
    #[serde(default = "default_eta_c")]
    pub eta_c: f64,
    /// Mutation probability per variable.
    #[serde(default = "default_pm")]
    pub pm: f64,
    #[serde(default = "default_eta_m")]
    pub eta_m: f64,
    /// `None` keeps the best `pop` of parents and offspring together. `Some(e)`
    /// carries over only the best `⌈e·pop⌉` of that union and fills the rest
    /// with the best offspring.
    #[serde(default)]
    pub elite_fraction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop: default_pop(),
            gens: default_gens(),
            pc: default_pc(),
            eta_c: default_eta_c(),
            pm: default_pm(),
            eta_m: default_eta_m(),
            elite_fraction: None,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.pop < 4 || self.pop % 2 != 0 {
            return bad(format!("population must be even and at least 4, got {}", self.pop));
        }
        for (name, p) in [("pc", self.pc), ("pm", self.pm)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, eta) in [("eta_c", self.eta_c), ("eta_m", self.eta_m)] {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("{name} must be positive, got {eta}"));
            }
        }
        if let Some(e) = self.elite_fraction {
            if !(0.0..=0.5).contains(&e) {
                return bad(format!("elite fraction must lie in [0, 0.5], got {e}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    /// Box-scaled variables in `[0, 1]³`.
    pub genes: Point,
    pub x: Point,
    pub responses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    /// Rank-0 set of the final population, duplicates collapsed, ordered by
    /// the first response.
    pub front: Front<f64>,
    pub population: Vec<Individual>,
    /// Best natural value of every objective within the rank-0 set, per
    /// generation (index 0 is the initial population).
    pub extremes: Vec<Vec<f64>>,
    pub counters: RunCounters,
}

struct Ranked {
    rank: Vec<usize>,
    crowding: Vec<f64>,
}

fn minimization_form(pop: &[Individual], senses: &[Sense]) -> Vec<Vec<f64>> {
    pop.iter()
        .map(|ind| ind.responses.iter().zip(senses).map(|(v, s)| s.sign::<f64>() * v).collect())
        .collect()
}

fn rank_population(pop: &[Individual], senses: &[Sense]) -> Result<Ranked> {
    let values = minimization_form(pop, senses);
    let all_min = vec![Sense::Minimize; senses.len()];
    let rank = nondominated_sort(&values, &all_min)?;
    let mut crowding = vec![0.0; pop.len()];
    let max_rank = rank.iter().copied().max().unwrap_or(0);
    for r in 0..=max_rank {
        let members: Vec<usize> = (0..pop.len()).filter(|&i| rank[i] == r).collect();
        if members.is_empty() {
            continue;
        }
        let front: Vec<Vec<f64>> = members.iter().map(|&i| values[i].clone()).collect();
        for (&i, d) in members.iter().zip(crowding_distance(&front, &all_min)?) {
            crowding[i] = d;
        }
    }
    Ok(Ranked { rank, crowding })
}

/// Indices sorted best first by (rank, crowding descending, index).
fn best_order(r: &Ranked) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..r.rank.len()).collect();
    idx.sort_by(|&a, &b| {
        r.rank[a]
            .cmp(&r.rank[b])
            .then(r.crowding[b].partial_cmp(&r.crowding[a]).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.cmp(&b))
    });
    idx
}

fn tournament(r: &Ranked, rng: &mut ChaCha8Rng) -> usize {
    let n = r.rank.len();
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    let better = |i: usize, j: usize| r.rank[i] < r.rank[j] || (r.rank[i] == r.rank[j] && r.crowding[i] > r.crowding[j]);
    if better(b, a) {
        b
    } else {
        a
    }
}

/// Simulated binary crossover on `[0, 1]`, variable-wise with probability 1/2.
fn sbx(p1: &Point, p2: &Point, eta: f64, rng: &mut ChaCha8Rng) -> (Point, Point) {
    let mut c1 = *p1;
    let mut c2 = *p2;
    for i in 0..3 {
        if rng.gen::<f64>() > 0.5 {
            continue;
        }
        let u = rng.gen::<f64>();
        let swap = rng.gen::<f64>() < 0.5;
        let (y1, y2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        if y2 - y1 <= 1e-14 {
            continue;
        }
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * y1 / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (1.0 - y2) / (y2 - y1));
        let a = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(0.0, 1.0);
        let b = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(0.0, 1.0);
        if swap {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation on `[0, 1]`.
fn mutate(genes: &mut Point, pm: f64, eta: f64, rng: &mut ChaCha8Rng) {
    for y in genes.iter_mut() {
        if rng.gen::<f64>() >= pm {
            continue;
        }
        let r = rng.gen::<f64>();
        let pow = 1.0 / (eta + 1.0);
        let dq = if r < 0.5 {
            let xy = 1.0 - *y;
            (2.0 * r + (1.0 - 2.0 * r) * xy.powf(eta + 1.0)).powf(pow) - 1.0
        } else {
            let xy = *y;
            1.0 - (2.0 * (1.0 - r) + 2.0 * (r - 0.5) * xy.powf(eta + 1.0)).powf(pow)
        };
        *y = (*y + dq).clamp(0.0, 1.0);
    }
}

fn evaluate(problem: &MooProblem, genes: Vec<Point>) -> Vec<Individual> {
    let bounds = *problem.bounds();
    genes
        .into_par_iter()
        .map(|g| {
            let x = bounds.from_unit(&g);
            Individual {
                genes: g,
                x,
                responses: problem.responses(&x),
            }
        })
        .collect()
}

fn rank0_extremes(pop: &[Individual], r: &Ranked, senses: &[Sense]) -> Vec<f64> {
    senses
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let vals = (0..pop.len()).filter(|&i| r.rank[i] == 0).map(|i| pop[i].responses[m]);
            match s {
                Sense::Minimize => vals.fold(f64::INFINITY, f64::min),
                Sense::Maximize => vals.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Runs the GA on a box-constrained problem. Random numbers are drawn only
/// in the sequential variation phase, so results do not depend on how the
/// parallel evaluation is scheduled.
pub fn run_ga(problem: &MooProblem, config: &GaConfig) -> Result<GaOutcome> {
    config.validate()?;
    if !problem.constraints().inequalities.is_empty() || !problem.constraints().equalities.is_empty() {
        return Err(Error::InvalidProblem("the genetic algorithm handles box constraints only".into()));
    }
    let senses = problem.senses();
    let n = config.pop;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial: Vec<Point> = (0..n).map(|_| std::array::from_fn(|_| rng.gen::<f64>())).collect();
    let mut pop = evaluate(problem, initial);
    let mut ranked = rank_population(&pop, &senses)?;
    let mut extremes = vec![rank0_extremes(&pop, &ranked, &senses)];

    for _ in 0..config.gens {
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let a = &pop[tournament(&ranked, &mut rng)].genes;
            let b = &pop[tournament(&ranked, &mut rng)].genes;
            let (mut c1, mut c2) = if rng.gen::<f64>() < config.pc {
                sbx(a, b, config.eta_c, &mut rng)
            } else {
                (*a, *b)
            };
            mutate(&mut c1, config.pm, config.eta_m, &mut rng);
            mutate(&mut c2, config.pm, config.eta_m, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        let offspring = evaluate(problem, children);

        pop = match config.elite_fraction {
            None => {
                let union: Vec<Individual> = pop.into_iter().chain(offspring).collect();
                let r = rank_population(&union, &senses)?;
                select(&union, &best_order(&r)[..n])
            }
            Some(e) => {
                let keep = ((e * n as f64).ceil() as usize).min(n);
                let union: Vec<Individual> = pop.iter().cloned().chain(offspring.iter().cloned()).collect();
                let r = rank_population(&union, &senses)?;
                let elite = best_order(&r)[..keep].to_vec();
                let taken: Vec<usize> = elite.iter().filter(|&&i| i >= n).map(|&i| i - n).collect();
                let rest: Vec<Individual> = offspring
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken.contains(i))
                    .map(|(_, ind)| ind.clone())
                    .collect();
                let ro = rank_population(&rest, &senses)?;
                let mut next = select(&union, &elite);
                next.extend(select(&rest, &best_order(&ro)[..n - keep]));
                next
            }
        };
        ranked = rank_population(&pop, &senses)?;
        extremes.push(rank0_extremes(&pop, &ranked, &senses));
    }

    let label = format!("seed={}", config.seed);
    let mut best: Vec<ParetoPoint<f64>> = (0..n)
        .filter(|&i| ranked.rank[i] == 0)
        .map(|i| ParetoPoint::new(pop[i].x, pop[i].responses.clone(), "genetic_algorithm", label.clone()))
        .collect();
    best.sort_by(|a, b| a.responses[0].total_cmp(&b.responses[0]).then(a.x.iter().map(|v| v.to_bits()).cmp(b.x.iter().map(|v| v.to_bits()))));
    let best = filter_nondominated(&best, &senses, 0.0)?;
    let objectives = problem.objectives().len() as u64;
    Ok(GaOutcome {
        front: Front::new(best, senses),
        population: pop,
        extremes,
        counters: RunCounters {
            iterations: config.gens as u64,
            function_evals: (n * (config.gens + 1)) as u64 * objectives,
            gradient_evals: 0,
        },
    })
}

fn select(pool: &[Individual], idx: &[usize]) -> Vec<Individual> {
    idx.iter().map(|&i| pool[i].clone()).collect()
}
