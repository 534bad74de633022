//! Least-squares fitting of response-surface models and the APD/MAPD
//! diagnostics used to compare competing model sets.

use serde::Serialize;

use crate::dataset::ExperimentRecord;
use crate::error::{Error, Result};
use crate::polymodel::{PolyBasis, Polynomial};
use crate::scalar::Scalar;

/// Condition estimates above this raise the warning flag.
pub const CONDITION_WARNING: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Ra,
    Mrr,
}

impl Response {
    pub fn of<T: Copy>(self, r: &ExperimentRecord<T>) -> T {
        match self {
            Response::Ra => r.ra,
            Response::Mrr => r.mrr,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Response::Ra => "Ra",
            Response::Mrr => "MRR",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Response::Ra => "um",
            Response::Mrr => "mm3/min",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitDiagnostics<T> {
    pub model: Polynomial<T>,
    pub predicted: Vec<T>,
    pub apd: Vec<T>,
    pub mapd: T,
    pub max_predicted: T,
    pub min_predicted: T,
    /// 1-norm condition estimate of the column-scaled design matrix; absent
    /// for models that were not fitted here.
    pub condition_estimate: Option<T>,
    pub condition_warning: bool,
}

/// |actual − predicted| / |actual|.
pub fn apd<T: Scalar>(actual: T, predicted: T) -> Result<T> {
    if actual == T::zero() {
        return Err(Error::ZeroActual);
    }
    Ok((actual - predicted).abs() / actual.abs())
}

pub fn mapd<T: Scalar>(apds: &[T]) -> Result<T> {
    if apds.is_empty() {
        return Err(Error::EmptyInput("mapd of an empty list"));
    }
    let n = T::from_usize(apds.len()).expect("length fits scalar");
    Ok(apds.iter().copied().sum::<T>() / n)
}

/// Predictions and deviation statistics of `model` against `records`.
pub fn diagnose<T: Scalar>(
    records: &[ExperimentRecord<T>],
    model: &Polynomial<T>,
    response: Response,
) -> Result<FitDiagnostics<T>> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted: Vec<T> = records.iter().map(|r| model.evaluate(&r.design())).collect();
    let apd = records
        .iter()
        .zip(&predicted)
        .map(|(r, &p)| apd(response.of(r), p))
        .collect::<Result<Vec<_>>>()?;
    let mapd = mapd(&apd)?;
    let max_predicted = predicted.iter().copied().fold(T::neg_infinity(), T::max);
    let min_predicted = predicted.iter().copied().fold(T::infinity(), T::min);
    Ok(FitDiagnostics {
        model: model.clone(),
        predicted,
        apd,
        mapd,
        max_predicted,
        min_predicted,
        condition_estimate: None,
        condition_warning: false,
    })
}

/// Result of a dense least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    pub condition_estimate: T,
}

/// Minimizes ‖A·β − y‖₂ for a tall dense row-major `A` by Householder QR on
/// the column-scaled matrix. Returned coefficients are in the original units.
pub fn least_squares<T: Scalar>(rows: &[Vec<T>], y: &[T]) -> Result<LeastSquares<T>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n != y.len() {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    if n < m || m == 0 {
        return Err(Error::TooFewRecords { records: n, coefficients: m });
    }

    let mut scale = vec![T::zero(); m];
    for row in rows {
        for (s, &v) in scale.iter_mut().zip(row) {
            *s = s.max(v.abs());
        }
    }
    if scale.iter().any(|&s| s == T::zero()) {
        return Err(Error::RankDeficient { condition: f64::INFINITY });
    }
    // Column-major working copy.
    let mut a: Vec<Vec<T>> = (0..m).map(|j| rows.iter().map(|r| r[j] / scale[j]).collect()).collect();
    let mut b = y.to_vec();

    for k in 0..m {
        let norm = a[k][k..].iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(Error::RankDeficient { condition: f64::INFINITY });
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = a[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().map(|&e| e * e).sum::<T>();
        if vnorm2 == T::zero() {
            continue;
        }
        let reflect = |col: &mut [T]| {
            let dot = col.iter().zip(&v).map(|(&c, &e)| c * e).sum::<T>();
            let f = T::of(2.0) * dot / vnorm2;
            for (c, &e) in col.iter_mut().zip(&v) {
                *c = *c - f * e;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..]);
    }

    // R is upper triangular: r(i, j) = a[j][i] for i <= j.
    let r = |i: usize, j: usize| a[j][i];
    let max_diag = (0..m).map(|i| r(i, i).abs()).fold(T::zero(), T::max);
    let tiny = T::epsilon() * T::from_usize(n).unwrap() * max_diag;
    if (0..m).any(|i| r(i, i).abs() <= tiny) {
        return Err(Error::RankDeficient { condition: f64::INFINITY });
    }

    let mut z = vec![T::zero(); m];
    for i in (0..m).rev() {
        let s = ((i + 1)..m).map(|j| r(i, j) * z[j]).sum::<T>();
        z[i] = (b[i] - s) / r(i, i);
    }

    // Explicit R⁻¹ (m is tiny) for a 1-norm condition estimate.
    let mut inv = vec![vec![T::zero(); m]; m];
    for c in 0..m {
        for i in (0..=c).rev() {
            let rhs = if i == c { T::one() } else { T::zero() };
            let s = ((i + 1)..=c).map(|j| r(i, j) * inv[j][c]).sum::<T>();
            inv[i][c] = (rhs - s) / r(i, i);
        }
    }
    let norm1 = |get: &dyn Fn(usize, usize) -> T| {
        (0..m)
            .map(|j| (0..m).map(|i| get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    };
    let r_norm = norm1(&|i, j| if i <= j { r(i, j) } else { T::zero() });
    let inv_norm = norm1(&|i, j| inv[i][j]);
    let condition_estimate = r_norm * inv_norm;

    let coefficients = z.iter().zip(&scale).map(|(&c, &s)| c / s).collect();
    Ok(LeastSquares {
        coefficients,
        condition_estimate,
    })
}

/// Ordinary least-squares fit of `response` on `basis` over all records.
pub fn fit_ols<T: Scalar>(
    records: &[ExperimentRecord<T>],
    basis: PolyBasis,
    response: Response,
) -> Result<FitDiagnostics<T>> {
    if records.len() < basis.len() {
        return Err(Error::TooFewRecords {
            records: records.len(),
            coefficients: basis.len(),
        });
    }
    let rows: Vec<Vec<T>> = records.iter().map(|r| basis.eval(&r.design())).collect();
    let y: Vec<T> = records.iter().map(|r| response.of(r)).collect();
    let ls = least_squares(&rows, &y)?;
    let model = Polynomial::new(basis, ls.coefficients, response.name(), response.units())?;
    let mut diag = diagnose(records, &model, response)?;
    diag.condition_warning = ls.condition_estimate.to_f64_lossy() > CONDITION_WARNING;
    diag.condition_estimate = Some(ls.condition_estimate);
    Ok(diag)
}

/// A surface-roughness model paired with a removal-rate model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelPair<T> {
    pub ra: Polynomial<T>,
    pub mrr: Polynomial<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow<T> {
    pub record: ExperimentRecord<T>,
    pub a_ra: T,
    pub a_mrr: T,
    pub b_ra: T,
    pub b_mrr: T,
    pub apd_a_ra: T,
    pub apd_a_mrr: T,
    pub apd_b_ra: T,
    pub apd_b_mrr: T,
}

/// Per-response summary: MAPD and extreme predicted values for both pairs.
#[derive(Debug, Clone, Serialize)]
pub struct ResponseSummary<T> {
    pub mapd_a: T,
    pub mapd_b: T,
    pub max_predicted_a: T,
    pub min_predicted_a: T,
    pub max_predicted_b: T,
    pub min_predicted_b: T,
    pub winner: Winner,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison<T> {
    pub rows: Vec<ComparisonRow<T>>,
    pub ra: ResponseSummary<T>,
    pub mrr: ResponseSummary<T>,
}

fn summarize<T: Scalar>(a: &FitDiagnostics<T>, b: &FitDiagnostics<T>) -> ResponseSummary<T> {
    let winner = if a.mapd < b.mapd {
        Winner::A
    } else if b.mapd < a.mapd {
        Winner::B
    } else {
        Winner::Tie
    };
    ResponseSummary {
        mapd_a: a.mapd,
        mapd_b: b.mapd,
        max_predicted_a: a.max_predicted,
        min_predicted_a: a.min_predicted,
        max_predicted_b: b.max_predicted,
        min_predicted_b: b.min_predicted,
        winner,
    }
}

pub fn compare_models<T: Scalar>(
    records: &[ExperimentRecord<T>],
    a: &ModelPair<T>,
    b: &ModelPair<T>,
) -> Result<ModelComparison<T>> {
    let a_ra = diagnose(records, &a.ra, Response::Ra)?;
    let a_mrr = diagnose(records, &a.mrr, Response::Mrr)?;
    let b_ra = diagnose(records, &b.ra, Response::Ra)?;
    let b_mrr = diagnose(records, &b.mrr, Response::Mrr)?;
    let rows = records
        .iter()
        .enumerate()
        .map(|(i, r)| ComparisonRow {
            record: *r,
            a_ra: a_ra.predicted[i],
            a_mrr: a_mrr.predicted[i],
            b_ra: b_ra.predicted[i],
            b_mrr: b_mrr.predicted[i],
            apd_a_ra: a_ra.apd[i],
            apd_a_mrr: a_mrr.apd[i],
            apd_b_ra: b_ra.apd[i],
            apd_b_mrr: b_mrr.apd[i],
        })
        .collect();
    Ok(ModelComparison {
        rows,
        ra: summarize(&a_ra, &b_ra),
        mrr: summarize(&a_mrr, &b_mrr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::builtin_case_study;
    use crate::polymodel::{published_model, PublishedModel};
    use proptest::prelude::*;

    #[test]
    fn apd_examples() {
        assert!((apd(2.23f64, 2.274947).unwrap() - 0.0202).abs() <= 1e-4);
        assert!((apd(730.0f64, 485.692).unwrap() - 0.3347).abs() <= 1e-4);
        assert_eq!(apd(3.5, 3.5).unwrap(), 0.0);
        assert_eq!(apd(-2.0, -2.0).unwrap(), 0.0);
        assert!(matches!(apd(0.0, 1.0), Err(Error::ZeroActual)));
    }

    #[test]
    fn mapd_examples() {
        assert!((mapd(&[0.1f64, 0.3]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(mapd::<f64>(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn too_few_records() {
        let recs = &builtin_case_study::<f64>()[..5];
        let err = fit_ols(recs, PolyBasis::FullQuadraticTriple, Response::Ra).unwrap_err();
        assert!(matches!(err, Error::TooFewRecords { records: 5, coefficients: 11 }));
        assert!(err.to_string().contains("fewer records than coefficients"));
    }

    #[test]
    fn rank_deficient_design() {
        // Only two speed levels cannot support a vc² term alongside vc.
        let recs: Vec<_> = builtin_case_study::<f64>().into_iter().filter(|r| r.vc != 157.0).collect();
        let err = fit_ols(&recs, PolyBasis::FullQuadraticTriple, Response::Ra).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }), "{err:?}");
    }

    #[test]
    fn refit_matches_published_predictions() {
        let recs = builtin_case_study::<f64>();
        let fit = fit_ols(&recs, PolyBasis::FullQuadraticTriple, Response::Ra).unwrap();
        assert!((fit.predicted[0] - 2.274947).abs() <= 0.01);
        assert!((fit.mapd - 0.0235).abs() <= 0.002, "{}", fit.mapd);
        assert!((fit.max_predicted - 2.556).abs() <= 0.01);
        assert!(!fit.condition_warning);
        assert!(fit.max_predicted >= fit.min_predicted);
    }

    #[test]
    fn generate_then_refit_recovers_coefficients() {
        let truth = published_model::<f64>(PublishedModel::MrrQuadratic);
        let recs: Vec<_> = builtin_case_study::<f64>()
            .into_iter()
            .map(|mut r| {
                r.mrr = truth.evaluate(&r.design());
                r
            })
            .collect();
        let fit = fit_ols(&recs, PolyBasis::FullQuadraticTriple, Response::Mrr).unwrap();
        for (got, want) in fit.model.coefficients().iter().zip(truth.coefficients()) {
            assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn residuals_orthogonal_to_design_columns() {
        let recs = builtin_case_study::<f64>();
        for response in [Response::Ra, Response::Mrr] {
            let fit = fit_ols(&recs, PolyBasis::FullQuadraticTriple, response).unwrap();
            let y: Vec<f64> = recs.iter().map(|r| response.of(r)).collect();
            let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let resid: Vec<f64> = y.iter().zip(&fit.predicted).map(|(a, p)| a - p).collect();
            for j in 0..11 {
                let col: Vec<f64> = recs.iter().map(|r| PolyBasis::FullQuadraticTriple.eval(&r.design())[j]).collect();
                let col_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dot: f64 = col.iter().zip(&resid).map(|(c, r)| c * r).sum();
                assert!(dot.abs() <= 1e-6 * col_norm * y_norm, "{response:?} col {j}: {dot}");
            }
        }
    }

    #[test]
    fn f32_refit_close_to_f64() {
        let fit64 = fit_ols(&builtin_case_study::<f64>(), PolyBasis::FullQuadraticTriple, Response::Ra).unwrap();
        let fit32 = fit_ols(&builtin_case_study::<f32>(), PolyBasis::FullQuadraticTriple, Response::Ra).unwrap();
        for (a, b) in fit64.predicted.iter().zip(&fit32.predicted) {
            assert!((a - *b as f64).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_pairs_tie() {
        let recs = builtin_case_study::<f64>();
        let pair = ModelPair {
            ra: published_model(PublishedModel::RaQuadratic),
            mrr: published_model(PublishedModel::MrrQuadratic),
        };
        let cmp = compare_models(&recs, &pair, &pair).unwrap();
        assert_eq!(cmp.ra.winner, Winner::Tie);
        assert_eq!(cmp.mrr.winner, Winner::Tie);
        for row in &cmp.rows {
            assert_eq!(row.a_ra, row.b_ra);
            assert_eq!(row.apd_a_mrr, row.apd_b_mrr);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn predictions_invariant_to_record_order(perm in Just((0..27usize).collect::<Vec<_>>()).prop_shuffle()) {
            let recs = builtin_case_study::<f64>();
            let shuffled: Vec<_> = perm.iter().map(|&i| recs[i]).collect();
            let base = fit_ols(&recs, PolyBasis::FullQuadraticTriple, Response::Mrr).unwrap();
            let fit = fit_ols(&shuffled, PolyBasis::FullQuadraticTriple, Response::Mrr).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!((fit.predicted[k] - base.predicted[i]).abs() <= 1e-8 * base.predicted[i].abs());
            }
        }
    }
}
