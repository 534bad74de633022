use pareto_forge::dataset::builtin_case_study;
use pareto_forge::nlsolver::ConstraintSet;
use pareto_forge::regression::{fit_ols, Response};
use pareto_forge::scalarize::{
    epsilon_constraint, global_criterion, global_criterion_value, weighted_sum, Objective,
    LEXICOGRAPHIC_SLACK,
};
use pareto_forge::{run_ga, Bounds, GaConfig, MooProblem, MultistartConfig, PolyBasis, PolynomialModel, Sense, Study};
use proptest::prelude::*;
use rayon::prelude::*;

const RA: usize = 0;
const MRR: usize = 1;

fn models() -> (PolynomialModel, PolynomialModel) {
    let data = builtin_case_study();
    (
        fit_ols(&data, PolyBasis::FullQuadraticTriple, Response::Ra).unwrap().model,
        fit_ols(&data, PolyBasis::FullQuadraticTriple, Response::Mrr).unwrap().model,
    )
}

fn machining() -> MooProblem {
    let (ra, mrr) = models();
    MooProblem::machining(ra, mrr, Bounds::case_study())
}

/// Same problem with MRR stated as minimize(−MRR).
fn negated() -> MooProblem {
    let (ra, mrr) = models();
    MooProblem::new(
        vec![Objective::minimize(ra), Objective::minimize(mrr.scaled(-1.0))],
        ConstraintSet::new(Bounds::case_study()),
    )
    .unwrap()
}

fn assert_same_point(a: [f64; 3], b: [f64; 3], what: &str) {
    let range = Bounds::case_study().range();
    for k in 0..3 {
        assert!((a[k] - b[k]).abs() <= 1e-9 * range[k], "{what}: {a:?} vs {b:?}");
    }
}

#[test]
fn negated_maximization_gives_same_points() {
    let cfg = MultistartConfig::default();
    let (max, min) = (Study::new(machining(), cfg), Study::new(negated(), cfg));
    let (um, un) = (max.utopia().unwrap(), min.utopia().unwrap());
    assert_same_point(um.optimum_points[MRR], un.optimum_points[MRR], "utopia");

    let a = global_criterion(max.problem(), um, 2, &cfg).unwrap();
    let b = global_criterion(min.problem(), un, 2, &cfg).unwrap();
    assert_same_point(a.x(), b.x(), "global criterion");

    for w in [0.3, 0.9] {
        let a = weighted_sum(max.problem(), &[w, 1.0 - w], &um.normalization().unwrap(), &cfg).unwrap();
        let b = weighted_sum(min.problem(), &[w, 1.0 - w], &un.normalization().unwrap(), &cfg).unwrap();
        assert_same_point(a.0.x(), b.0.x(), "weighted sum");
    }

    let a = epsilon_constraint(max.problem(), MRR, &[0.7107], &cfg).unwrap();
    let b = epsilon_constraint(min.problem(), MRR, &[0.7107], &cfg).unwrap();
    assert_same_point(a.0.x(), b.0.x(), "ε-constraint");

    let a = max.lexicographic(&[MRR, RA]).unwrap();
    let b = min.lexicographic(&[MRR, RA]).unwrap();
    assert_same_point(a.last().solution.x(), b.last().solution.x(), "lexicographic");

    let ga = GaConfig { seed: 5, gens: 20, ..GaConfig::default() };
    let a = run_ga(max.problem(), &ga).unwrap();
    let b = run_ga(min.problem(), &ga).unwrap();
    let mut xa: Vec<_> = a.front.points.iter().map(|p| p.x).collect();
    let mut xb: Vec<_> = b.front.points.iter().map(|p| p.x).collect();
    xa.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xb.sort_by(|p, q| p.partial_cmp(q).unwrap());
    assert_eq!(xa, xb);
}

#[test]
fn positive_weights_are_not_dominated_by_grid() {
    let study = Study::new(machining(), MultistartConfig::default());
    let p = study.problem();
    let bounds = *p.bounds();
    let (lo, hi) = (bounds.lower(), bounds.upper());
    let n = 201usize;
    let axis = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let x = [axis(0, idx / (n * n)), axis(1, (idx / n) % n), axis(2, idx % n)];
            let r = p.responses(&x);
            (r[RA], r[MRR])
        })
        .collect();
    let span = |f: fn(&(f64, f64)) -> f64| {
        let (a, b) = grid.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        b - a
    };
    let tol = [1e-3 * span(|g| g.0), 1e-3 * span(|g| g.1)];

    let norm = study.utopia().unwrap().normalization().unwrap();
    for k in 1..10 {
        let w = k as f64 / 10.0;
        let (s, weak) = weighted_sum(p, &[w, 1.0 - w], &norm, study.config()).unwrap();
        assert!(!weak);
        let (ra, mrr) = (s.responses[RA], s.responses[MRR]);
        let beaten = grid.par_iter().any(|&(r, m)| r < ra - tol[0] && m > mrr + tol[1]);
        assert!(!beaten, "w={w}: ({ra}, {mrr}) is dominated by a grid point");
    }
}

#[test]
fn active_epsilon_bound_is_met_with_equality() {
    let study = Study::new(machining(), MultistartConfig::default());
    let sweep = study.epsilon_sweep(MRR, 11).unwrap();
    let tol = study.config().tolerances.feas_tol;
    let mut active = 0;
    for pt in &sweep.points {
        let s = pt.solution.as_ref().expect("every ε point is feasible");
        assert!(s.responses[RA] <= pt.value * (1.0 + tol), "{}: Ra {}", pt.param, s.responses[RA]);
        if pt.notes.iter().any(|n| n == "Ra active") {
            active += 1;
            assert!((s.responses[RA] - pt.value).abs() <= tol * pt.value.max(1.0), "{}", pt.param);
        }
    }
    assert!(active >= 2, "only {active} active bounds");
    let mrr: Vec<f64> = sweep.solutions().map(|s| s.responses[MRR]).collect();
    assert!(mrr.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)), "{mrr:?}");
}

#[test]
fn lexicographic_stages_never_worsen_fixed_objectives() {
    let study = Study::new(machining(), MultistartConfig::default());
    let p = study.problem();
    let tol = study.config().tolerances.feas_tol;
    for order in [[MRR, RA], [RA, MRR]] {
        let lex = study.lexicographic(&order).unwrap();
        for (i, fixed) in lex.stages.iter().enumerate() {
            let k = p.objective_index(&fixed.objective).unwrap();
            let sign = if p.objectives()[k].sense == Sense::Minimize { 1.0 } else { -1.0 };
            let allowed = (LEXICOGRAPHIC_SLACK + tol) * fixed.stage_optimum.abs().max(1.0);
            for later in &lex.stages[i + 1..] {
                let worse = sign * (later.solution.responses[k] - fixed.stage_optimum);
                assert!(worse <= allowed, "{order:?}: {} worsened by {worse}", fixed.objective);
            }
        }
    }
}

fn response_pair() -> impl Strategy<Value = [f64; 2]> {
    [0.3f64..3.0, 100.0f64..40000.0]
}

proptest! {
    #[test]
    fn criterion_nonnegative_and_zero_only_at_utopia(v in response_pair(), u in response_pair(), p in 1u32..=20) {
        let c = global_criterion_value(&v, &u, p);
        prop_assert!(c >= 0.0);
        prop_assert_eq!(c == 0.0, v == u);
        prop_assert_eq!(global_criterion_value(&u, &u, p), 0.0);
    }

    #[test]
    fn outer_root_keeps_argmin(cands in prop::collection::vec(response_pair(), 1..40), u in response_pair(), p in 1u32..=20) {
        let rooted: Vec<f64> = cands.iter().map(|v| global_criterion_value(v, &u, p)).collect();
        let unrooted: Vec<f64> = cands
            .iter()
            .map(|v| (0..2).map(|i| ((v[i] - u[i]).abs() / u[i].abs()).powi(p as i32)).sum())
            .collect();
        let argmin = |xs: &[f64]| (0..xs.len()).min_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap()).unwrap();
        let best = rooted.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(rooted[argmin(&unrooted)] <= best * (1.0 + 1e-12));
    }
}
