use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pareto_forge::dataset::{builtin_case_study, load_experiments, validate_records, Schema};
use pareto_forge::evolve::run_ga;
use pareto_forge::pareto::{merge_fronts, read_front_csv, write_front_csv};
use pareto_forge::polymodel::published_model;
use pareto_forge::regression::{compare_models, diagnose, fit_ols, ModelPair, Response, ResponseSummary};
use pareto_forge::report::{scatter_svg, write_comparison_csv, write_efficiency_csv, EfficiencyRow, Series};
use pareto_forge::scalarize::{LexicographicResult, Study, Sweep, UtopiaRecord};
use pareto_forge::{
    ExperimentRecord, FitDiagnostics, Front, GaConfig, MooProblem, ParetoPoint, PolyBasis, PublishedModel,
    RunCounters, Sense,
};
use serde::Serialize;

use crate::config::{DataSource, Method, ModelSource, RunConfig};

fn records(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    Ok(match &cfg.data {
        DataSource::Builtin => builtin_case_study(),
        DataSource::Csv(path) => load_experiments(path, &Schema::default())?,
    })
}

fn published_pair(quadratic: bool) -> ModelPair<f64> {
    if quadratic {
        ModelPair {
            ra: published_model(PublishedModel::RaQuadratic),
            mrr: published_model(PublishedModel::MrrQuadratic),
        }
    } else {
        ModelPair {
            ra: published_model(PublishedModel::RaLinear),
            mrr: published_model(PublishedModel::MrrLinear),
        }
    }
}

struct Fitted {
    ra: FitDiagnostics,
    mrr: FitDiagnostics,
}

fn fit(cfg: &RunConfig, data: &[ExperimentRecord]) -> Result<Fitted> {
    let fitted = match cfg.models {
        ModelSource::Refit => Fitted {
            ra: fit_ols(data, PolyBasis::FullQuadraticTriple, Response::Ra)?,
            mrr: fit_ols(data, PolyBasis::FullQuadraticTriple, Response::Mrr)?,
        },
        source => {
            let pair = published_pair(source == ModelSource::Eq23);
            Fitted {
                ra: diagnose(data, &pair.ra, Response::Ra)?,
                mrr: diagnose(data, &pair.mrr, Response::Mrr)?,
            }
        }
    };
    for d in [&fitted.ra, &fitted.mrr] {
        if d.condition_warning {
            eprintln!(
                "warning: {} design matrix is ill-conditioned (estimate {:.3e})",
                d.model.response(),
                d.condition_estimate.unwrap_or(f64::INFINITY)
            );
        }
    }
    Ok(fitted)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct FitReport<'a> {
    models: ModelSource,
    records: usize,
    ra: &'a FitDiagnostics,
    mrr: &'a FitDiagnostics,
    /// Models above (a) against the published linear-interaction pair (b).
    comparison: ComparisonSummary<'a>,
}

#[derive(Serialize)]
struct ComparisonSummary<'a> {
    ra: &'a ResponseSummary<f64>,
    mrr: &'a ResponseSummary<f64>,
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let data = records(cfg)?;
    let fitted = fit(cfg, &data)?;
    let selected = ModelPair {
        ra: fitted.ra.model.clone(),
        mrr: fitted.mrr.model.clone(),
    };
    let cmp = compare_models(&data, &selected, &published_pair(false))?;
    prepare_out(&cfg.out)?;
    write_comparison_csv(&cmp.rows, create(&cfg.out, "comparison.csv")?)?;
    write_json(
        &cfg.out,
        "fit.json",
        &FitReport {
            models: cfg.models,
            records: data.len(),
            ra: &fitted.ra,
            mrr: &fitted.mrr,
            comparison: ComparisonSummary {
                ra: &cmp.ra,
                mrr: &cmp.mrr,
            },
        },
    )?;
    for (name, s) in [("Ra", &cmp.ra), ("MRR", &cmp.mrr)] {
        println!(
            "{name}: MAPD {:.4} (baseline {:.4}), predicted range [{:.4}, {:.4}]",
            s.mapd_a, s.mapd_b, s.min_predicted_a, s.max_predicted_a
        );
    }
    Ok(())
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    let data = records(cfg)?;
    let report = validate_records(&data, &cfg.bounds);
    println!("{} records checked", report.records);
    for v in &report.violations {
        println!("{v}");
    }
    if !report.is_clean() {
        bail!("{} violation(s) found", report.violations.len());
    }
    Ok(())
}

fn problem(cfg: &RunConfig) -> Result<MooProblem> {
    let data = records(cfg)?;
    let fitted = fit(cfg, &data)?;
    Ok(MooProblem::machining(fitted.ra.model, fitted.mrr.model, cfg.bounds))
}

fn objective_index(problem: &MooProblem, name: &str) -> Result<usize> {
    problem
        .objective_index(name)
        .with_context(|| format!("unknown objective `{name}` (expected ra or mrr)"))
}

#[derive(Serialize)]
struct MethodOutcome {
    method: &'static str,
    counters: RunCounters,
    #[serde(skip_serializing_if = "Option::is_none")]
    utopia: Option<UtopiaRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Sweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lexicographic: Option<LexicographicResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    genetic: Option<GeneticSummary>,
    #[serde(skip)]
    front: Front,
}

#[derive(Serialize)]
struct GeneticSummary {
    config: GaConfig,
    front: Vec<ParetoPoint>,
    extremes: Vec<Vec<f64>>,
}

fn run_method(method: Method, study: &Study, cfg: &RunConfig) -> Result<MethodOutcome> {
    let p = study.problem();
    let used_utopia = || -> Result<UtopiaRecord> { Ok(study.utopia()?.clone()) };
    let blank = |method: Method, counters| MethodOutcome {
        method: method.name(),
        counters,
        utopia: None,
        sweep: None,
        lexicographic: None,
        genetic: None,
        front: Front::new(Vec::new(), p.senses()),
    };
    let from_sweep = |sweep: Sweep, utopia: UtopiaRecord| {
        let mut out = blank(method, sweep.counters() + utopia.counters);
        out.front = sweep.front();
        out.sweep = Some(sweep);
        out.utopia = Some(utopia);
        out
    };
    Ok(match method {
        Method::GlobalCriterion => from_sweep(study.global_criterion_sweep(&cfg.method.p_values)?, used_utopia()?),
        Method::WeightedSum => from_sweep(study.weighted_sum_sweep(cfg.method.weight_steps)?, used_utopia()?),
        Method::EpsilonConstraint => {
            let primary = objective_index(p, &cfg.method.primary)?;
            from_sweep(study.epsilon_sweep(primary, cfg.method.epsilon_points)?, used_utopia()?)
        }
        Method::Lexicographic => {
            let order = cfg
                .method
                .order
                .iter()
                .map(|n| objective_index(p, n))
                .collect::<Result<Vec<_>>>()?;
            let lex = study.lexicographic(&order)?;
            let last = &lex.last().solution;
            let tag = format!("order={}", cfg.method.order.join(">"));
            let mut out = blank(method, lex.counters());
            out.front = Front::new(
                vec![ParetoPoint::new(last.x(), last.responses.clone(), method.name(), tag)],
                p.senses(),
            );
            out.lexicographic = Some(lex);
            out
        }
        Method::GeneticAlgorithm => {
            let ga = run_ga(p, &cfg.ga)?;
            let mut out = blank(method, ga.counters);
            out.genetic = Some(GeneticSummary {
                config: cfg.ga,
                front: ga.front.points.clone(),
                extremes: ga.extremes,
            });
            out.front = ga.front;
            out
        }
        Method::All => unreachable!("expanded by the caller"),
    })
}

fn axis_label(p: &MooProblem, i: usize) -> String {
    let m = &p.objectives()[i].model;
    if m.units().is_empty() {
        m.response().to_string()
    } else {
        format!("{} ({})", m.response(), m.units())
    }
}

fn response_names(p: &MooProblem) -> Vec<String> {
    p.objectives().iter().map(|o| o.name().to_lowercase()).collect()
}

fn series(label: &str, points: &[ParetoPoint]) -> Series {
    Series {
        label: label.to_string(),
        points: points.iter().map(|q| (q.responses[0], q.responses[1])).collect(),
    }
}

fn write_front(dir: &Path, stem: &str, p: &MooProblem, points: &[ParetoPoint], plot: &[Series], title: &str) -> Result<()> {
    let names = response_names(p);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    write_front_csv(points, &names, create(dir, &format!("{stem}.csv"))?)?;
    let svg = scatter_svg(plot, &axis_label(p, 0), &axis_label(p, 1), title);
    let path = dir.join(format!("{stem}.svg"));
    fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))
}

fn run_all(cfg: &RunConfig, methods: &[Method]) -> Result<(MooProblem, Vec<MethodOutcome>)> {
    let problem = problem(cfg)?;
    let study = Study::new(problem.clone(), cfg.solver.multistart());
    prepare_out(&cfg.out)?;
    let mut outcomes = Vec::new();
    for &m in methods {
        let out = run_method(m, &study, cfg)?;
        let title = format!("Pareto front: {}", m.name().replace('_', " "));
        write_front(
            &cfg.out,
            &format!("front_{}", m.name()),
            &problem,
            &out.front.points,
            &[series(m.name(), &out.front.points)],
            &title,
        )?;
        write_json(&cfg.out, &format!("outcome_{}.json", m.name()), &out)?;
        report_failures(&out);
        println!(
            "{}: {} point(s), {} iterations, {} function evaluations",
            m.name(),
            out.front.len(),
            out.counters.iterations,
            out.counters.function_evals
        );
        outcomes.push(out);
    }
    if methods.len() > 1 {
        // Identical points keep the first label, so smaller fronts go first to
        // keep single-point routines visible.
        let mut fronts: Vec<Front> = outcomes.iter().map(|o| o.front.clone()).collect();
        fronts.sort_by_key(|f| f.len());
        let merged = merge_fronts(&fronts, cfg.method.merge_eps)?;
        let plot: Vec<Series> = outcomes.iter().map(|o| series(o.method, &o.front.points)).collect();
        write_front(&cfg.out, "front_all", &problem, &merged.points, &plot, "Pareto fronts of all methods")?;
    }
    Ok((problem, outcomes))
}

fn report_failures(out: &MethodOutcome) {
    if let Some(s) = &out.sweep {
        for p in &s.points {
            if let Some(e) = &p.error {
                eprintln!("{} {}: {e}", out.method, p.param);
            }
        }
    }
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<()> {
    run_all(cfg, &cfg.method.method.selected())?;
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    let (_, outcomes) = run_all(cfg, &Method::ROUTINES)?;
    let rows: Vec<EfficiencyRow> = outcomes.iter().map(|o| EfficiencyRow::new(o.method, o.counters)).collect();
    write_efficiency_csv(&rows, create(&cfg.out, "efficiency.csv")?)?;
    println!("{:<20} {:>12} {:>16}", "routine", "iterations", "function evals");
    for r in &rows {
        println!("{:<20} {:>12} {:>16}", r.routine, r.iterations, r.function_evals);
    }
    Ok(())
}

/// Merges existing front CSVs (by default every `front_<method>.csv` in the
/// output directory) into `front_all.csv` and `front_all.svg`.
pub fn cmd_front(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<()> {
    let inputs: Vec<PathBuf> = if inputs.is_empty() {
        let mut found: Vec<PathBuf> = fs::read_dir(&cfg.out)
            .with_context(|| format!("reading {}", cfg.out.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name.starts_with("front_") && name.ends_with(".csv") && name != "front_all.csv"
            })
            .collect();
        found.sort();
        found
    } else {
        inputs.to_vec()
    };
    if inputs.is_empty() {
        bail!("no front CSV files to merge");
    }
    let senses = vec![Sense::Minimize, Sense::Maximize];
    let mut names: Option<Vec<String>> = None;
    let mut fronts = Vec::new();
    let mut plot = Vec::new();
    for path in &inputs {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let (cols, points) = read_front_csv::<f64, _>(f)?;
        if cols.len() != 2 {
            bail!("{}: expected two response columns, found {}", path.display(), cols.len());
        }
        match &names {
            Some(n) if *n != cols => bail!("{}: response columns {:?} differ from {:?}", path.display(), cols, n),
            _ => names = Some(cols),
        }
        let label = points.first().map(|q| q.method.clone()).unwrap_or_default();
        plot.push(series(&label, &points));
        fronts.push(Front::new(points, senses.clone()));
    }
    let merged = merge_fronts(&fronts, cfg.method.merge_eps)?;
    let names = names.unwrap_or_default();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    prepare_out(&cfg.out)?;
    write_front_csv(&merged.points, &refs, create(&cfg.out, "front_all.csv")?)?;
    let svg = scatter_svg(&plot, &names[0], &names[1], "Pareto fronts of all methods");
    fs::write(cfg.out.join("front_all.svg"), svg)?;
    println!("{} point(s) survive from {} file(s)", merged.len(), inputs.len());
    Ok(())
}
