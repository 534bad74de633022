//! Classical scalarization routines over a bi- (or multi-) objective problem:
//! global criterion, lexicographic ordering, normalized weighted sum and
//! ε-constraint, plus the individual optima they depend on.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Bounds;
use crate::error::{Error, Result};
use crate::nlsolver::{multistart_minimize, ConstraintSet, MultistartConfig, Point, RunCounters, SmoothFn, SolveOutcome};
use crate::pareto::{Front, ParetoPoint, Sense};
use crate::polymodel::Polynomial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub model: Polynomial<f64>,
    pub sense: Sense,
}

impl Objective {
    pub fn minimize(model: Polynomial<f64>) -> Self {
        Self {
            model,
            sense: Sense::Minimize,
        }
    }

    pub fn maximize(model: Polynomial<f64>) -> Self {
        Self {
            model,
            sense: Sense::Maximize,
        }
    }

    pub fn name(&self) -> &str {
        self.model.response()
    }

    fn sign(&self) -> f64 {
        self.sense.sign::<f64>()
    }

    /// Natural-unit value.
    pub fn value(&self, x: &Point) -> f64 {
        self.model.evaluate(x)
    }

    /// Value in minimization form.
    fn min_form(&self, x: &Point) -> f64 {
        self.sign() * self.model.evaluate(x)
    }

    fn min_form_gradient(&self, x: &Point) -> Point {
        self.model.gradient(x).map(|g| self.sign() * g)
    }

    fn to_min_form(&self, natural: f64) -> f64 {
        self.sign() * natural
    }

    /// Negation turns argmax into argmin.
    fn as_minimization(&self) -> MinForm {
        MinForm(self.clone())
    }
}

struct MinForm(Objective);

impl SmoothFn for MinForm {
    fn value(&self, x: &Point) -> f64 {
        self.0.min_form(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        self.0.min_form_gradient(x)
    }
}

/// Inequality `min_form(f)(x) − bound ≤ 0`.
struct UpperBound {
    objective: Objective,
    bound: f64,
}

impl SmoothFn for UpperBound {
    fn value(&self, x: &Point) -> f64 {
        self.objective.min_form(x) - self.bound
    }

    fn gradient(&self, x: &Point) -> Point {
        self.objective.min_form_gradient(x)
    }
}

#[derive(Debug, Clone)]
pub struct MooProblem {
    objectives: Vec<Objective>,
    constraints: ConstraintSet,
}

impl MooProblem {
    pub fn new(objectives: Vec<Objective>, constraints: ConstraintSet) -> Result<Self> {
        if objectives.len() < 2 {
            return Err(Error::InvalidProblem(format!(
                "at least two objectives required, got {}",
                objectives.len()
            )));
        }
        Ok(Self {
            objectives,
            constraints,
        })
    }

    /// Minimize `ra`, maximize `mrr` over `bounds`.
    pub fn machining(ra: Polynomial<f64>, mrr: Polynomial<f64>, bounds: Bounds<f64>) -> Self {
        Self {
            objectives: vec![Objective::minimize(ra), Objective::maximize(mrr)],
            constraints: ConstraintSet::new(bounds),
        }
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn bounds(&self) -> &Bounds<f64> {
        &self.constraints.bounds
    }

    pub fn senses(&self) -> Vec<Sense> {
        self.objectives.iter().map(|o| o.sense).collect()
    }

    pub fn responses(&self, x: &Point) -> Vec<f64> {
        self.objectives.iter().map(|o| o.value(x)).collect()
    }

    pub fn objective_index(&self, name: &str) -> Option<usize> {
        self.objectives.iter().position(|o| o.name().eq_ignore_ascii_case(name))
    }
}

/// Best and worst feasible value of every objective, in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtopiaRecord {
    pub optima: Vec<f64>,
    pub optimum_points: Vec<Point>,
    pub anti_optima: Vec<f64>,
    pub anti_optimum_points: Vec<Point>,
    pub counters: RunCounters,
}

impl UtopiaRecord {
    /// Feasible-region extremes of each objective, ordered low to high.
    pub fn normalization(&self) -> Result<NormalizationBounds> {
        let (min, max) = self
            .optima
            .iter()
            .zip(&self.anti_optima)
            .map(|(&a, &b)| (a.min(b), a.max(b)))
            .unzip();
        NormalizationBounds::new(min, max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationBounds {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::LengthMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        if let Some(i) = min.iter().zip(&max).position(|(a, b)| !(a < b)) {
            return Err(Error::DegenerateNormalization(i));
        }
        Ok(Self { min, max })
    }
}

/// `(value − min) / (max − min)`, unclamped.
pub fn normalize(value: f64, min: f64, max: f64) -> Result<f64> {
    if !(min < max) {
        return Err(Error::DegenerateNormalization(0));
    }
    Ok((value - min) / (max - min))
}

fn solve_named(
    name: &str,
    objective: &dyn SmoothFn,
    constraints: &ConstraintSet,
    config: &MultistartConfig,
) -> Result<SolveOutcome> {
    let out = multistart_minimize(objective, constraints, config).map_err(|e| Error::Solver {
        objective: name.to_string(),
        source: Box::new(e),
    })?;
    if !out.is_feasible(&config.tolerances) {
        return Err(Error::Solver {
            objective: name.to_string(),
            source: Box::new(Error::Infeasible(format!(
                "no feasible point found (violation {:e})",
                out.constraint_violation
            ))),
        });
    }
    Ok(out)
}

/// Multistart optimum and anti-optimum of every objective.
pub fn individual_optima(problem: &MooProblem, config: &MultistartConfig) -> Result<UtopiaRecord> {
    let jobs: Vec<(usize, bool)> = (0..problem.objectives.len()).flat_map(|i| [(i, false), (i, true)]).collect();
    let solved = jobs
        .par_iter()
        .map(|&(i, anti)| {
            let obj = &problem.objectives[i];
            let target = Objective {
                model: obj.model.clone(),
                sense: match (obj.sense, anti) {
                    (s, false) => s,
                    (Sense::Minimize, true) => Sense::Maximize,
                    (Sense::Maximize, true) => Sense::Minimize,
                },
            };
            let label = if anti {
                format!("{} (anti-optimum)", obj.name())
            } else {
                obj.name().to_string()
            };
            solve_named(&label, &target.as_minimization(), &problem.constraints, config)
        })
        .collect::<Vec<Result<SolveOutcome>>>();
    let mut rec = UtopiaRecord {
        optima: Vec::new(),
        optimum_points: Vec::new(),
        anti_optima: Vec::new(),
        anti_optimum_points: Vec::new(),
        counters: RunCounters::default(),
    };
    for ((i, anti), out) in jobs.into_iter().zip(solved) {
        let out = out?;
        let value = problem.objectives[i].value(&out.x_star);
        rec.counters += out.counters;
        if anti {
            rec.anti_optima.push(value);
            rec.anti_optimum_points.push(out.x_star);
        } else {
            rec.optima.push(value);
            rec.optimum_points.push(out.x_star);
        }
    }
    Ok(rec)
}

/// A solved scalarized subproblem together with its natural-unit responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub outcome: SolveOutcome,
    pub responses: Vec<f64>,
}

impl Solution {
    fn new(problem: &MooProblem, outcome: SolveOutcome) -> Self {
        let responses = problem.responses(&outcome.x_star);
        Self { outcome, responses }
    }

    pub fn x(&self) -> Point {
        self.outcome.x_star
    }
}

/// `(Σ |fᵢ − fᵢ*|^p / |fᵢ*|^p)^(1/p)` for minimization-form values.
pub fn global_criterion_value(values: &[f64], utopia: &[f64], p: u32) -> f64 {
    let r: Vec<f64> = values.iter().zip(utopia).map(|(f, u)| (f - u).abs() / u.abs()).collect();
    let m = r.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * r.iter().map(|v| (v / m).powi(p as i32)).sum::<f64>().powf(1.0 / p as f64)
}

struct GlobalCriterion {
    objectives: Vec<Objective>,
    utopia: Vec<f64>,
    p: u32,
}

impl SmoothFn for GlobalCriterion {
    fn value(&self, x: &Point) -> f64 {
        let v: Vec<f64> = self.objectives.iter().map(|o| o.min_form(x)).collect();
        global_criterion_value(&v, &self.utopia, self.p)
    }

    fn gradient(&self, x: &Point) -> Point {
        let p = self.p as i32;
        let mut r = Vec::with_capacity(self.objectives.len());
        let mut dr = Vec::with_capacity(self.objectives.len());
        for (o, &u) in self.objectives.iter().zip(&self.utopia) {
            let d = o.min_form(x) - u;
            let s = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            r.push(d.abs() / u.abs());
            dr.push(o.min_form_gradient(x).map(|g| s * g / u.abs()));
        }
        let m = r.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            return [0.0; 3];
        }
        let sum: f64 = r.iter().map(|v| (v / m).powi(p)).sum();
        let outer = sum.powf(1.0 / self.p as f64 - 1.0);
        let mut g = [0.0; 3];
        for (ri, dri) in r.iter().zip(&dr) {
            let w = outer * (ri / m).powi(p - 1);
            for k in 0..3 {
                g[k] += w * dri[k];
            }
        }
        g
    }

    fn cost(&self) -> u64 {
        self.objectives.len() as u64
    }
}

pub fn global_criterion(
    problem: &MooProblem,
    utopia: &UtopiaRecord,
    p: u32,
    config: &MultistartConfig,
) -> Result<Solution> {
    if p == 0 {
        return Err(Error::InvalidConfig("global criterion exponent p must be ≥ 1".into()));
    }
    let utopia_min: Vec<f64> = problem
        .objectives
        .iter()
        .zip(&utopia.optima)
        .map(|(o, &v)| o.to_min_form(v))
        .collect();
    if let Some(i) = utopia_min.iter().position(|&u| u == 0.0) {
        return Err(Error::ZeroUtopia(i));
    }
    let f = GlobalCriterion {
        objectives: problem.objectives.clone(),
        utopia: utopia_min,
        p,
    };
    let out = solve_named(&format!("global criterion p={p}"), &f, &problem.constraints, config)?;
    Ok(Solution::new(problem, out))
}

/// One parameter value of a sweep and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: String,
    pub value: f64,
    pub solution: Option<Solution>,
    pub error: Option<String>,
    /// Extra flags such as `weak_pareto_only` or `constraint active`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SweepPoint {
    fn from_result(param: String, value: f64, result: Result<(Solution, Vec<String>)>) -> Self {
        match result {
            Ok((solution, notes)) => Self {
                param,
                value,
                solution: Some(solution),
                error: None,
                notes,
            },
            Err(e) => Self {
                param,
                value,
                solution: None,
                error: Some(e.to_string()),
                notes: Vec::new(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub method: String,
    pub points: Vec<SweepPoint>,
    pub senses: Vec<Sense>,
}

impl Sweep {
    pub fn counters(&self) -> RunCounters {
        self.points
            .iter()
            .filter_map(|p| p.solution.as_ref())
            .map(|s| s.outcome.counters)
            .sum()
    }

    /// Every solved point in grid order, dominated ones flagged but kept.
    pub fn front(&self) -> Front<f64> {
        let points = self
            .points
            .iter()
            .filter_map(|p| {
                p.solution
                    .as_ref()
                    .map(|s| ParetoPoint::new(s.x(), s.responses.clone(), &self.method, &p.param))
            })
            .collect();
        let mut front = Front::new(points, self.senses.clone());
        front.annotate().expect("responses match senses");
        front
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> {
        self.points.iter().filter_map(|p| p.solution.as_ref())
    }
}

fn run_sweep<F>(problem: &MooProblem, method: &str, grid: Vec<(String, f64)>, solve: F) -> Sweep
where
    F: Fn(f64) -> Result<(Solution, Vec<String>)> + Sync,
{
    let points = grid
        .into_par_iter()
        .map(|(param, v)| SweepPoint::from_result(param, v, solve(v)))
        .collect();
    Sweep {
        method: method.to_string(),
        points,
        senses: problem.senses(),
    }
}

pub fn global_criterion_sweep(
    problem: &MooProblem,
    utopia: &UtopiaRecord,
    ps: &[u32],
    config: &MultistartConfig,
) -> Result<Sweep> {
    if ps.iter().any(|&p| p == 0) {
        return Err(Error::InvalidConfig("global criterion exponent p must be ≥ 1".into()));
    }
    let grid = ps.iter().map(|&p| (format!("p={p}"), p as f64)).collect();
    Ok(run_sweep(problem, "global_criterion", grid, |p| {
        global_criterion(problem, utopia, p as u32, config).map(|s| (s, Vec::new()))
    }))
}

struct WeightedSum {
    objectives: Vec<Objective>,
    weights: Vec<f64>,
    // minimization-form lower end and span of each objective
    offset: Vec<f64>,
    span: Vec<f64>,
}

impl SmoothFn for WeightedSum {
    fn value(&self, x: &Point) -> f64 {
        self.objectives
            .iter()
            .enumerate()
            .map(|(i, o)| self.weights[i] * (o.min_form(x) - self.offset[i]) / self.span[i])
            .sum()
    }

    fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 3];
        for (i, o) in self.objectives.iter().enumerate() {
            let d = o.min_form_gradient(x);
            for k in 0..3 {
                g[k] += self.weights[i] * d[k] / self.span[i];
            }
        }
        g
    }

    fn cost(&self) -> u64 {
        self.objectives.len() as u64
    }
}

pub const WEAK_PARETO_ONLY: &str = "weak_pareto_only";

/// Minimizes the weighted sum of normalized minimization-form objectives.
/// Returns the solution and whether a zero weight restricts it to weak
/// Pareto optimality.
pub fn weighted_sum(
    problem: &MooProblem,
    weights: &[f64],
    norm: &NormalizationBounds,
    config: &MultistartConfig,
) -> Result<(Solution, bool)> {
    let n = problem.objectives.len();
    if weights.len() != n {
        return Err(Error::InvalidWeights(format!("expected {n} weights, got {}", weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("negative weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    let norm = NormalizationBounds::new(norm.min.clone(), norm.max.clone())?;
    if norm.min.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: norm.min.len(),
        });
    }
    let (offset, span) = problem
        .objectives
        .iter()
        .enumerate()
        .map(|(i, o)| match o.sense {
            Sense::Minimize => (norm.min[i], norm.max[i] - norm.min[i]),
            Sense::Maximize => (-norm.max[i], norm.max[i] - norm.min[i]),
        })
        .unzip();
    let f = WeightedSum {
        objectives: problem.objectives.clone(),
        weights: weights.to_vec(),
        offset,
        span,
    };
    let out = solve_named(&format!("weighted sum w={weights:?}"), &f, &problem.constraints, config)?;
    let weak = weights.iter().any(|&w| w == 0.0);
    Ok((Solution::new(problem, out), weak))
}

/// Weight on the first objective stepped from 0 to 1 in `steps` values;
/// the second objective takes the remainder.
pub fn weighted_sum_sweep(
    problem: &MooProblem,
    utopia: &UtopiaRecord,
    steps: usize,
    config: &MultistartConfig,
) -> Result<Sweep> {
    if steps < 2 {
        return Err(Error::InvalidConfig("weighted sum sweep needs at least 2 steps".into()));
    }
    if problem.objectives.len() != 2 {
        return Err(Error::InvalidProblem("weighted sum sweep is defined for two objectives".into()));
    }
    let norm = utopia.normalization()?;
    let grid = (0..steps)
        .map(|k| {
            let w = k as f64 / (steps - 1) as f64;
            (format!("w={}", fmt_param(w)), w)
        })
        .collect();
    Ok(run_sweep(problem, "weighted_sum", grid, |w| {
        let (s, weak) = weighted_sum(problem, &[w, 1.0 - w], &norm, config)?;
        Ok((s, if weak { vec![WEAK_PARETO_ONLY.to_string()] } else { Vec::new() }))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintActivity {
    pub objective: String,
    /// Natural-unit bound: an upper limit for minimized objectives, a lower
    /// limit for maximized ones.
    pub epsilon: f64,
    pub value: f64,
    pub active: bool,
}

/// Relative distance below which an ε bound counts as active.
const ACTIVE_TOL: f64 = 1e-4;

/// Optimizes objective `primary` with every other objective bounded by its ε
/// (natural units, one per non-primary objective in order).
pub fn epsilon_constraint(
    problem: &MooProblem,
    primary: usize,
    epsilons: &[f64],
    config: &MultistartConfig,
) -> Result<(Solution, Vec<ConstraintActivity>)> {
    let n = problem.objectives.len();
    if primary >= n {
        return Err(Error::InvalidProblem(format!("objective index {primary} out of range")));
    }
    if epsilons.len() != n - 1 {
        return Err(Error::LengthMismatch {
            expected: n - 1,
            got: epsilons.len(),
        });
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != primary).collect();
    let mut constraints = problem.constraints.clone();
    for (&i, &eps) in others.iter().zip(epsilons) {
        let o = &problem.objectives[i];
        constraints.inequalities.push(Arc::new(UpperBound {
            objective: o.clone(),
            bound: o.to_min_form(eps),
        }));
    }
    let target = problem.objectives[primary].as_minimization();
    let out = multistart_minimize(&target, &constraints, config)?;
    if !out.is_feasible(&config.tolerances) {
        let bounds: Vec<String> = others
            .iter()
            .zip(epsilons)
            .map(|(&i, e)| {
                let o = &problem.objectives[i];
                let op = if o.sense == Sense::Minimize { "<=" } else { ">=" };
                format!("{} {op} {e}", o.name())
            })
            .collect();
        return Err(Error::Infeasible(format!("no feasible point with {}", bounds.join(", "))));
    }
    let sol = Solution::new(problem, out);
    let activity = others
        .iter()
        .zip(epsilons)
        .map(|(&i, &eps)| {
            let value = sol.responses[i];
            ConstraintActivity {
                objective: problem.objectives[i].name().to_string(),
                epsilon: eps,
                value,
                active: (value - eps).abs() <= ACTIVE_TOL * eps.abs().max(1.0),
            }
        })
        .collect();
    Ok((sol, activity))
}

/// The ε grid between the other objective's optimum and anti-optimum.
pub fn epsilon_grid(utopia: &UtopiaRecord, other: usize, n_points: usize) -> Vec<f64> {
    let lo = utopia.optima[other];
    let hi = utopia.anti_optima[other];
    (0..n_points)
        .map(|k| lo + k as f64 * (hi - lo) / (n_points - 1) as f64)
        .collect()
}

pub fn epsilon_sweep(
    problem: &MooProblem,
    utopia: &UtopiaRecord,
    primary: usize,
    n_points: usize,
    config: &MultistartConfig,
) -> Result<Sweep> {
    if n_points < 2 {
        return Err(Error::InvalidConfig("ε sweep needs at least 2 points".into()));
    }
    if problem.objectives.len() != 2 || primary > 1 {
        return Err(Error::InvalidProblem("ε sweep is defined for two objectives".into()));
    }
    let other = 1 - primary;
    let grid = epsilon_grid(utopia, other, n_points)
        .into_iter()
        .map(|e| (format!("eps={}", fmt_param(e)), e))
        .collect();
    Ok(run_sweep(problem, "epsilon_constraint", grid, |eps| {
        let (s, act) = epsilon_constraint(problem, primary, &[eps], config)?;
        let notes = act
            .iter()
            .filter(|a| a.active)
            .map(|a| format!("{} active", a.objective))
            .collect();
        Ok((s, notes))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicographicStage {
    pub objective: String,
    pub solution: Solution,
    /// Minimization-form optimum carried into later stages as a bound.
    pub stage_optimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicographicResult {
    pub stages: Vec<LexicographicStage>,
}

impl LexicographicResult {
    pub fn last(&self) -> &LexicographicStage {
        self.stages.last().expect("at least one stage")
    }

    pub fn counters(&self) -> RunCounters {
        self.stages.iter().map(|s| s.solution.outcome.counters).sum()
    }
}

/// Relative slack added to every earlier stage optimum.
pub const LEXICOGRAPHIC_SLACK: f64 = 1e-6;
/// Box-scaled distance under which two stage points count as equal.
pub const LEXICOGRAPHIC_EQUALITY_TOL: f64 = 1e-4;

pub fn lexicographic(
    problem: &MooProblem,
    order: &[usize],
    equality_tol: f64,
    config: &MultistartConfig,
) -> Result<LexicographicResult> {
    lexicographic_over(&problem.objectives, &problem.constraints, order, equality_tol, config)
}

/// Lexicographic optimization over a bare objective list (which may hold a
/// single objective).
pub fn lexicographic_over(
    objectives: &[Objective],
    base: &ConstraintSet,
    order: &[usize],
    equality_tol: f64,
    config: &MultistartConfig,
) -> Result<LexicographicResult> {
    let mut seen = vec![false; objectives.len()];
    if order.len() != objectives.len() || order.iter().any(|&i| i >= objectives.len() || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::InvalidProblem(format!(
            "order {order:?} is not a permutation of {} objectives",
            objectives.len()
        )));
    }
    let responses = |x: &Point| objectives.iter().map(|o| o.value(x)).collect::<Vec<_>>();
    let mut constraints = base.clone();
    let mut stages: Vec<LexicographicStage> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let obj = &objectives[i];
        let out = multistart_minimize(&obj.as_minimization(), &constraints, config)?;
        if !out.is_feasible(&config.tolerances) {
            let held: Vec<&str> = stages.iter().map(|s| s.objective.as_str()).collect();
            return Err(Error::Infeasible(format!(
                "lexicographic stage {} ({}) infeasible while holding {}",
                k + 1,
                obj.name(),
                if held.is_empty() { "no prior objective".to_string() } else { held.join(", ") }
            )));
        }
        let stage_optimum = obj.min_form(&out.x_star);
        let solution = Solution {
            responses: responses(&out.x_star),
            outcome: out,
        };
        let repeated = stages.last().is_some_and(|prev| {
            let a = base.bounds.to_unit(&prev.solution.x());
            let b = base.bounds.to_unit(&solution.x());
            (0..3).all(|d| (a[d] - b[d]).abs() <= equality_tol)
        });
        constraints.inequalities.push(Arc::new(UpperBound {
            objective: obj.clone(),
            bound: stage_optimum + LEXICOGRAPHIC_SLACK * stage_optimum.abs(),
        }));
        stages.push(LexicographicStage {
            objective: obj.name().to_string(),
            solution,
            stage_optimum,
        });
        if repeated {
            break;
        }
    }
    Ok(LexicographicResult { stages })
}

fn fmt_param(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// A problem with its solver settings and lazily computed, cached utopia record.
pub struct Study {
    problem: MooProblem,
    config: MultistartConfig,
    utopia: OnceLock<UtopiaRecord>,
}

impl Study {
    pub fn new(problem: MooProblem, config: MultistartConfig) -> Self {
        Self {
            problem,
            config,
            utopia: OnceLock::new(),
        }
    }

    pub fn problem(&self) -> &MooProblem {
        &self.problem
    }

    pub fn config(&self) -> &MultistartConfig {
        &self.config
    }

    pub fn utopia(&self) -> Result<&UtopiaRecord> {
        if let Some(u) = self.utopia.get() {
            return Ok(u);
        }
        let rec = individual_optima(&self.problem, &self.config)?;
        Ok(self.utopia.get_or_init(|| rec))
    }

    /// Cached utopia counters are not included; they are reported once via
    /// [`Study::utopia`].
    pub fn global_criterion_sweep(&self, ps: &[u32]) -> Result<Sweep> {
        global_criterion_sweep(&self.problem, self.utopia()?, ps, &self.config)
    }

    pub fn weighted_sum_sweep(&self, steps: usize) -> Result<Sweep> {
        weighted_sum_sweep(&self.problem, self.utopia()?, steps, &self.config)
    }

    pub fn epsilon_sweep(&self, primary: usize, n_points: usize) -> Result<Sweep> {
        epsilon_sweep(&self.problem, self.utopia()?, primary, n_points, &self.config)
    }

    pub fn lexicographic(&self, order: &[usize]) -> Result<LexicographicResult> {
        lexicographic(&self.problem, order, LEXICOGRAPHIC_EQUALITY_TOL, &self.config)
    }
}
