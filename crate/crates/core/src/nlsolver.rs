//! Local minimization of a smooth function over the design box with smooth
//! inequality constraints.
//!
//! The outer loop is an augmented Lagrangian (method of multipliers) on the
//! inequalities; each subproblem is solved by a projected BFGS iteration on the
//! box. Variables are mapped onto the unit cube before solving, so all
//! tolerances refer to that scaled problem. Objective and constraint values are
//! further divided by `max(1, |value at the box center|)`.

use std::ops::{Add, AddAssign};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Bounds;
use crate::error::{Error, Result};
use crate::polymodel::Polynomial;

pub type Point = [f64; 3];

/// A smooth scalar function of the three design variables.
pub trait SmoothFn: Send + Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;

    /// Model evaluations consumed by one call of `value` (or `gradient`).
    fn cost(&self) -> u64 {
        1
    }
}

impl SmoothFn for Polynomial<f64> {
    fn value(&self, x: &Point) -> f64 {
        self.evaluate(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        Polynomial::gradient(self, x)
    }
}

impl<F: SmoothFn + ?Sized> SmoothFn for Arc<F> {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        (**self).gradient(x)
    }

    fn cost(&self) -> u64 {
        (**self).cost()
    }
}

/// Adapter turning a value closure and a gradient closure into a [`SmoothFn`].
pub struct FnPair<F, G> {
    value: F,
    gradient: G,
    cost: u64,
}

pub fn smooth_fn<F, G>(value: F, gradient: G) -> FnPair<F, G>
where
    F: Fn(&Point) -> f64 + Send + Sync,
    G: Fn(&Point) -> Point + Send + Sync,
{
    FnPair { value, gradient, cost: 1 }
}

impl<F, G> FnPair<F, G> {
    pub fn with_cost(mut self, cost: u64) -> Self {
        self.cost = cost;
        self
    }
}

impl<F, G> SmoothFn for FnPair<F, G>
where
    F: Fn(&Point) -> f64 + Send + Sync,
    G: Fn(&Point) -> Point + Send + Sync,
{
    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        (self.gradient)(x)
    }

    fn cost(&self) -> u64 {
        self.cost
    }
}

pub type SharedFn = Arc<dyn SmoothFn>;

/// Box bounds plus inequality constraints `g(x) ≤ 0`. Equalities are carried
/// so problems can be described completely, but [`minimize`] rejects them.
#[derive(Clone)]
pub struct ConstraintSet {
    pub bounds: Bounds<f64>,
    pub inequalities: Vec<SharedFn>,
    pub equalities: Vec<SharedFn>,
}

impl ConstraintSet {
    pub fn new(bounds: Bounds<f64>) -> Self {
        Self {
            bounds,
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn with_inequality(mut self, g: SharedFn) -> Self {
        self.inequalities.push(g);
        self
    }
}

impl std::fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintSet")
            .field("bounds", &self.bounds)
            .field("inequalities", &self.inequalities.len())
            .field("equalities", &self.equalities.len())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounters {
    pub iterations: u64,
    pub function_evals: u64,
    pub gradient_evals: u64,
}

impl Add for RunCounters {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            iterations: self.iterations + o.iterations,
            function_evals: self.function_evals + o.function_evals,
            gradient_evals: self.gradient_evals + o.gradient_evals,
        }
    }
}

impl AddAssign for RunCounters {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for RunCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Projected-gradient / complementarity tolerance on the scaled problem.
    pub kkt_tol: f64,
    /// Maximum scaled inequality violation accepted as feasible.
    pub feas_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-8,
            feas_tol: 1e-6,
            max_outer: 50,
            max_inner: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub x_star: Point,
    /// Objective in the units of the function passed to the solver.
    pub objective: f64,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Largest scaled positive part over the inequalities.
    pub constraint_violation: f64,
    /// Multipliers of the inequalities for the unscaled objective and constraints.
    pub multipliers: Vec<f64>,
    pub counters: RunCounters,
}

impl SolveOutcome {
    pub fn is_feasible(&self, tol: &Tolerances) -> bool {
        self.constraint_violation <= tol.feas_tol
    }
}

/// Evaluates objective and constraints in unit coordinates and keeps count.
struct Scaled<'a> {
    objective: &'a dyn SmoothFn,
    inequalities: &'a [SharedFn],
    bounds: Bounds<f64>,
    range: Point,
    obj_scale: f64,
    con_scale: Vec<f64>,
    // 0 during feasibility restoration, 1 otherwise
    obj_weight: f64,
    counters: RunCounters,
}

struct Values {
    f: f64,
    g: Vec<f64>,
}

impl<'a> Scaled<'a> {
    fn new(objective: &'a dyn SmoothFn, constraints: &'a ConstraintSet) -> Self {
        let bounds = constraints.bounds;
        let mut s = Self {
            objective,
            inequalities: &constraints.inequalities,
            bounds,
            range: bounds.range(),
            obj_scale: 1.0,
            con_scale: vec![1.0; constraints.inequalities.len()],
            obj_weight: 1.0,
            counters: RunCounters::default(),
        };
        let center = bounds.center();
        s.count_values();
        s.obj_scale = objective.value(&center).abs().max(1.0);
        for (scale, g) in s.con_scale.iter_mut().zip(s.inequalities) {
            *scale = g.value(&center).abs().max(1.0);
        }
        s
    }

    fn count_values(&mut self) {
        self.counters.function_evals +=
            self.objective.cost() + self.inequalities.iter().map(|g| g.cost()).sum::<u64>();
    }

    fn x(&self, u: &Point) -> Point {
        self.bounds.from_unit(u)
    }

    fn values(&mut self, u: &Point) -> Result<Values> {
        let x = self.x(u);
        self.count_values();
        let f = self.obj_weight * self.objective.value(&x) / self.obj_scale;
        let g: Vec<f64> = self
            .inequalities
            .iter()
            .zip(&self.con_scale)
            .map(|(c, s)| c.value(&x) / s)
            .collect();
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x));
        }
        Ok(Values { f, g })
    }

    fn gradients(&mut self, u: &Point) -> Result<(Point, Vec<Point>)> {
        let x = self.x(u);
        self.counters.gradient_evals +=
            self.objective.cost() + self.inequalities.iter().map(|g| g.cost()).sum::<u64>();
        let to_unit = |g: Point, s: f64| -> Point { std::array::from_fn(|i| g[i] * self.range[i] / s) };
        let df = to_unit(self.objective.gradient(&x), self.obj_scale / self.obj_weight);
        let dg: Vec<Point> = self
            .inequalities
            .iter()
            .zip(&self.con_scale)
            .map(|(c, &s)| to_unit(c.gradient(&x), s))
            .collect();
        if df.iter().chain(dg.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x));
        }
        Ok((df, dg))
    }
}

/// Augmented Lagrangian merit for `g ≤ 0` with multipliers `lambda` and penalty `rho`.
fn merit_value(v: &Values, lambda: &[f64], rho: f64) -> f64 {
    v.f + v
        .g
        .iter()
        .zip(lambda)
        .map(|(&g, &l)| {
            let shifted = (l + rho * g).max(0.0);
            (shifted * shifted - l * l) / (2.0 * rho)
        })
        .sum::<f64>()
}

fn merit_gradient(v: &Values, df: &Point, dg: &[Point], lambda: &[f64], rho: f64) -> Point {
    let mut grad = *df;
    for ((&g, &l), d) in v.g.iter().zip(lambda).zip(dg) {
        let m = (l + rho * g).max(0.0);
        if m > 0.0 {
            for k in 0..3 {
                grad[k] += m * d[k];
            }
        }
    }
    grad
}

fn projected_gradient(u: &Point, grad: &Point) -> Point {
    std::array::from_fn(|i| {
        if u[i] <= 0.0 {
            grad[i].min(0.0)
        } else if u[i] >= 1.0 {
            grad[i].max(0.0)
        } else {
            grad[i]
        }
    })
}

fn norm_inf(v: &Point) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn clamp_unit(u: &Point) -> Point {
    u.map(|v| v.clamp(0.0, 1.0))
}

struct InnerResult {
    u: Point,
    values: Values,
    stationarity: f64,
}

/// Projected BFGS on the unit cube for the merit at fixed multipliers.
fn inner_solve(
    eval: &mut Scaled<'_>,
    start: Point,
    lambda: &[f64],
    rho: f64,
    tol: &Tolerances,
) -> Result<InnerResult> {
    let mut u = clamp_unit(&start);
    let mut vals = eval.values(&u)?;
    let mut phi = merit_value(&vals, lambda, rho);
    let (df, dg) = eval.gradients(&u)?;
    let mut grad = merit_gradient(&vals, &df, &dg, lambda, rho);
    let mut h = identity();
    let mut fresh = true;

    for _ in 0..tol.max_inner {
        let pg = projected_gradient(&u, &grad);
        if norm_inf(&pg) <= tol.kkt_tol {
            break;
        }
        eval.counters.iterations += 1;

        let free: [bool; 3] = std::array::from_fn(|i| pg[i] != 0.0 || (u[i] > 0.0 && u[i] < 1.0));
        let mut d = direction(&h, &grad, &free);
        if dot(&d, &grad) >= 0.0 {
            h = identity();
            fresh = true;
            d = direction(&h, &grad, &free);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        let d_norm = norm_inf(&d);
        while alpha * d_norm > 1e-16 {
            let trial = clamp_unit(&std::array::from_fn(|i| u[i] + alpha * d[i]));
            let step: Point = std::array::from_fn(|i| trial[i] - u[i]);
            if norm_inf(&step) == 0.0 {
                break;
            }
            let tv = eval.values(&trial)?;
            let tphi = merit_value(&tv, lambda, rho);
            if tphi <= phi + 1e-4 * dot(&grad, &step) {
                accepted = Some((trial, tv, tphi, step));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_vals, next_phi, s)) = accepted else {
            if !fresh {
                // Retry once along the steepest projected descent.
                h = identity();
                fresh = true;
                continue;
            }
            break;
        };

        let (df, dg) = eval.gradients(&next)?;
        let next_grad = merit_gradient(&next_vals, &df, &dg, lambda, rho);
        // Curvature only along the variables that moved.
        let y: Point = std::array::from_fn(|i| if free[i] { next_grad[i] - grad[i] } else { 0.0 });
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let gamma = sy / dot(&y, &y);
                h = identity().map(|row| row.map(|v| v * gamma));
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        let stalled = (phi - next_phi).abs() <= 1e-16 * phi.abs().max(1.0) && norm_inf(&s) <= 1e-15;
        u = next;
        vals = next_vals;
        phi = next_phi;
        grad = next_grad;
        if stalled {
            break;
        }
    }
    let stationarity = norm_inf(&projected_gradient(&u, &grad));
    Ok(InnerResult {
        u,
        values: vals,
        stationarity,
    })
}

type Mat3 = [[f64; 3]; 3];

fn identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

/// `-H·g` restricted to the free variables.
fn direction(h: &Mat3, grad: &Point, free: &[bool; 3]) -> Point {
    std::array::from_fn(|i| {
        if !free[i] {
            return 0.0;
        }
        -(0..3).filter(|&j| free[j]).map(|j| h[i][j] * grad[j]).sum::<f64>()
    })
}

fn bfgs_update(h: &mut Mat3, s: &Point, y: &Point, sy: f64) {
    let rho = 1.0 / sy;
    let hy: Point = std::array::from_fn(|i| dot(&h[i], y));
    let yhy = dot(y, &hy);
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Minimizes `objective` from `start` subject to `constraints`.
///
/// If the augmented Lagrangian ends infeasible, the start is first driven to
/// feasibility on the constraints alone and the solve is repeated from there
/// with a stiff initial penalty. Counters cover both attempts.
pub fn minimize(
    objective: &dyn SmoothFn,
    constraints: &ConstraintSet,
    start: &Point,
    tol: &Tolerances,
) -> Result<SolveOutcome> {
    if !constraints.equalities.is_empty() {
        return Err(Error::EqualityUnsupported);
    }
    if !constraints.bounds.contains(start) {
        return Err(Error::StartOutOfBounds(*start));
    }
    let mut eval = Scaled::new(objective, constraints);
    let u0 = constraints.bounds.to_unit(start);
    let first = augmented_lagrangian(&mut eval, u0, INITIAL_PENALTY, tol)?;
    if first.constraint_violation <= tol.feas_tol {
        return Ok(first.finish(eval.counters));
    }
    eval.obj_weight = 0.0;
    let m = constraints.inequalities.len();
    let restored = inner_solve(&mut eval, u0, &vec![0.0; m], 1.0, tol)?;
    eval.obj_weight = 1.0;
    if restored.values.g.iter().any(|&g| g > tol.feas_tol) {
        return Ok(first.finish(eval.counters));
    }
    let mut best = first;
    for rho0 in RESTORED_PENALTIES {
        let next = augmented_lagrangian(&mut eval, restored.u, rho0, tol)?;
        if next.constraint_violation < best.constraint_violation {
            best = next;
        }
        if best.constraint_violation <= tol.feas_tol {
            break;
        }
    }
    Ok(best.finish(eval.counters))
}

const INITIAL_PENALTY: f64 = 10.0;
const RESTORED_PENALTIES: [f64; 3] = [1e4, 1e6, 1e8];

struct Attempt {
    outcome: SolveOutcome,
    constraint_violation: f64,
}

impl Attempt {
    fn finish(mut self, counters: RunCounters) -> SolveOutcome {
        self.outcome.counters = counters;
        self.outcome
    }
}

fn augmented_lagrangian(eval: &mut Scaled<'_>, start: Point, rho0: f64, tol: &Tolerances) -> Result<Attempt> {
    let m = eval.inequalities.len();
    let mut lambda = vec![0.0; m];
    let mut rho = rho0;
    let mut u = start;
    let mut prev_violation = f64::INFINITY;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut violation = 0.0;
    let mut last_values = None;

    for _ in 0..tol.max_outer.max(1) {
        let inner = inner_solve(eval, u, &lambda, rho, tol)?;
        let moved = inner.u != u;
        u = inner.u;
        let g = &inner.values.g;
        let next_lambda: Vec<f64> = g.iter().zip(&lambda).map(|(&gi, &l)| (l + rho * gi).max(0.0)).collect();
        violation = g.iter().fold(0.0f64, |acc, &gi| acc.max(gi));
        let complementarity = g
            .iter()
            .zip(&next_lambda)
            .fold(0.0f64, |acc, (&gi, &l)| acc.max((l * gi).abs()));
        kkt = inner.stationarity.max(complementarity);
        let prev_lambda = std::mem::replace(&mut lambda, next_lambda);
        last_values = Some(inner.values);
        if violation <= tol.feas_tol && kkt <= tol.kkt_tol {
            converged = true;
            break;
        }
        if m == 0 || (!moved && violation <= tol.feas_tol && lambda == prev_lambda) {
            break;
        }
        if violation > tol.feas_tol && violation > 0.25 * prev_violation {
            rho = (rho * 10.0).min(1e10);
        }
        prev_violation = violation;
    }

    let x_star = eval.x(&u);
    let multipliers = lambda
        .iter()
        .zip(&eval.con_scale)
        .map(|(l, s)| l * eval.obj_scale / s)
        .collect();
    let values = last_values.expect("at least one outer iteration");
    Ok(Attempt {
        outcome: SolveOutcome {
            x_star,
            objective: values.f * eval.obj_scale,
            converged,
            kkt_residual: kkt,
            constraint_violation: violation,
            multipliers,
            counters: RunCounters::default(),
        },
        constraint_violation: violation,
    })
}

/// Start points for a multistart run: the box center first, then a Latin
/// hypercube sample of `n - 1` points drawn from a ChaCha8 stream seeded with `seed`.
pub fn start_points(bounds: &Bounds<f64>, n: usize, seed: u64) -> Vec<Point> {
    let mut starts = Vec::with_capacity(n);
    if n == 0 {
        return starts;
    }
    starts.push(bounds.center());
    let strata = n - 1;
    if strata == 0 {
        return starts;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut p: Vec<usize> = (0..strata).collect();
        p.shuffle(&mut rng);
        perms.push(p);
    }
    for k in 0..strata {
        let u: Point = std::array::from_fn(|i| (perms[i][k] as f64 + rng.gen::<f64>()) / strata as f64);
        starts.push(bounds.from_unit(&u));
    }
    starts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultistartConfig {
    pub starts: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Best feasible outcome over seeded starts; counters are summed over all
/// starts. Starts may run in parallel, the reduction is in start order.
pub fn multistart_minimize(
    objective: &dyn SmoothFn,
    constraints: &ConstraintSet,
    config: &MultistartConfig,
) -> Result<SolveOutcome> {
    if config.starts == 0 {
        return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
    }
    let starts = start_points(&constraints.bounds, config.starts, config.seed);
    let outcomes: Vec<Result<SolveOutcome>> = starts
        .par_iter()
        .map(|s| minimize(objective, constraints, s, &config.tolerances))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(best_of(outcomes, &config.tolerances))
}

/// Picks feasible-before-infeasible, then the lowest objective (feasible) or
/// the lowest violation (infeasible). Ties keep the earliest index.
fn best_of(outcomes: Vec<SolveOutcome>, tol: &Tolerances) -> SolveOutcome {
    let total: RunCounters = outcomes.iter().map(|o| o.counters).sum();
    let mut best: Option<SolveOutcome> = None;
    for o in outcomes {
        let better = match &best {
            None => true,
            Some(b) => match (o.is_feasible(tol), b.is_feasible(tol)) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => o.objective < b.objective,
                (false, false) => o.constraint_violation < b.constraint_violation,
            },
        };
        if better {
            best = Some(o);
        }
    }
    let mut best = best.expect("non-empty outcome list");
    best.counters = total;
    best
}
