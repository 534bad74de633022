//! Polynomial response-surface models in (vc, fz, t) with analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed monomial bases in the three design variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyBasis {
    /// 1, vc, fz, t, vc·fz, vc·t, fz·t
    LinearInteraction,
    /// 1, vc, fz, t, vc², fz², t², vc·fz, vc·t, fz·t, vc·fz·t
    FullQuadraticTriple,
}

impl PolyBasis {
    pub const fn len(self) -> usize {
        match self {
            PolyBasis::LinearInteraction => 7,
            PolyBasis::FullQuadraticTriple => 11,
        }
    }

    pub fn term_names(self) -> &'static [&'static str] {
        match self {
            PolyBasis::LinearInteraction => &["1", "vc", "fz", "t", "vc*fz", "vc*t", "fz*t"],
            PolyBasis::FullQuadraticTriple => &[
                "1", "vc", "fz", "t", "vc^2", "fz^2", "t^2", "vc*fz", "vc*t", "fz*t", "vc*fz*t",
            ],
        }
    }

    /// Monomial values at `x` in fixed term order.
    pub fn eval<T: Scalar>(self, x: &[T; 3]) -> Vec<T> {
        let [v, f, t] = *x;
        let one = T::one();
        match self {
            PolyBasis::LinearInteraction => vec![one, v, f, t, v * f, v * t, f * t],
            PolyBasis::FullQuadraticTriple => vec![
                one,
                v,
                f,
                t,
                v * v,
                f * f,
                t * t,
                v * f,
                v * t,
                f * t,
                v * f * t,
            ],
        }
    }

    /// Partial derivatives of every monomial, one row per term.
    pub fn jacobian<T: Scalar>(self, x: &[T; 3]) -> Vec<[T; 3]> {
        let [v, f, t] = *x;
        let (z, o, two) = (T::zero(), T::one(), T::of(2.0));
        let mut rows = vec![[z, z, z], [o, z, z], [z, o, z], [z, z, o]];
        if self == PolyBasis::FullQuadraticTriple {
            rows.extend([[two * v, z, z], [z, two * f, z], [z, z, two * t]]);
        }
        rows.extend([[f, v, z], [t, z, v], [z, t, f]]);
        if self == PolyBasis::FullQuadraticTriple {
            rows.push([f * t, v * t, v * f]);
        }
        rows
    }
}

/// A response model: coefficients over a [`PolyBasis`] plus response metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawPolynomial<T>",
    bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Polynomial<T> {
    basis: PolyBasis,
    response: String,
    units: String,
    coefficients: Vec<T>,
}

#[derive(Deserialize)]
struct RawPolynomial<T> {
    basis: PolyBasis,
    response: String,
    #[serde(default)]
    units: String,
    coefficients: Vec<T>,
}

impl<T: Scalar> TryFrom<RawPolynomial<T>> for Polynomial<T> {
    type Error = Error;

    fn try_from(raw: RawPolynomial<T>) -> Result<Self> {
        Polynomial::new(raw.basis, raw.coefficients, raw.response, raw.units)
    }
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(
        basis: PolyBasis,
        coefficients: Vec<T>,
        response: impl Into<String>,
        units: impl Into<String>,
    ) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::InvalidModel(format!(
                "{:?} needs {} coefficients, got {}",
                basis,
                basis.len(),
                coefficients.len()
            )));
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidModel(format!("coefficient {i} is not finite")));
        }
        Ok(Self {
            basis,
            response: response.into(),
            units: units.into(),
            coefficients,
        })
    }

    pub fn basis(&self) -> PolyBasis {
        self.basis
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn evaluate(&self, x: &[T; 3]) -> T {
        self.basis
            .eval(x)
            .into_iter()
            .zip(&self.coefficients)
            .map(|(m, &c)| m * c)
            .sum()
    }

    pub fn gradient(&self, x: &[T; 3]) -> [T; 3] {
        let mut g = [T::zero(); 3];
        for (row, &c) in self.basis.jacobian(x).iter().zip(&self.coefficients) {
            for k in 0..3 {
                g[k] = g[k] + c * row[k];
            }
        }
        g
    }

    /// Same basis and metadata with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|&c| c * factor).collect(),
            ..self.clone()
        }
    }

    pub fn cast<U: Scalar>(&self) -> Polynomial<U> {
        Polynomial {
            basis: self.basis,
            response: self.response.clone(),
            units: self.units.clone(),
            coefficients: self.coefficients.iter().map(|c| U::of(c.to_f64_lossy())).collect(),
        }
    }
}

/// The four published model equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PublishedModel {
    /// Ra, 7-term linear-interaction model from the source experiment study.
    RaLinear,
    /// MRR counterpart of [`PublishedModel::RaLinear`].
    MrrLinear,
    /// Ra, 11-term model (printed, rounded coefficients).
    RaQuadratic,
    /// MRR, 11-term model (printed, rounded coefficients).
    MrrQuadratic,
}

/// Returns a published model with its coefficients exactly as printed.
pub fn published_model<T: Scalar>(which: PublishedModel) -> Polynomial<T> {
    let (basis, coefs, response, units): (_, &[f64], _, _) = match which {
        PublishedModel::RaLinear => (
            PolyBasis::LinearInteraction,
            &[2.65599, -0.00726733, 1.70439, -0.012765, -0.00273646, 0.000505119, 1.47321],
            "Ra",
            "um",
        ),
        PublishedModel::MrrLinear => (
            PolyBasis::LinearInteraction,
            &[7927.21, -43.31, -84934.4, -19818.0, 464.12, 108.295, 212917.0],
            "MRR",
            "mm3/min",
        ),
        PublishedModel::RaQuadratic => (
            PolyBasis::FullQuadraticTriple,
            &[
                3.082776, -0.01425, 4.330794, 0.465279, 1.85e-5, -5.78704, -0.15278, -0.00862, -0.00142,
                -2.73511, 0.018687,
            ],
            "Ra",
            "um",
        ),
        PublishedModel::MrrQuadratic => (
            PolyBasis::FullQuadraticTriple,
            &[
                -2345.09, 10.37705, 24983.71, 7079.912, -0.01672, -34722.2, -4166.67, -64.9643, -13.6425,
                -66322.5, 1403.922,
            ],
            "MRR",
            "mm3/min",
        ),
    };
    Polynomial::new(basis, coefs.iter().map(|&c| T::of(c)).collect(), response, units)
        .expect("published coefficients match their basis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Bounds;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn basis_eval_examples() {
        let q = PolyBasis::FullQuadraticTriple;
        let mut e = vec![0.0; 11];
        e[0] = 1.0;
        assert_eq!(q.eval(&[0.0, 0.0, 0.0]), e);
        assert_eq!(q.eval(&[1.0, 1.0, 1.0]), vec![1.0; 11]);
        assert_eq!(
            PolyBasis::LinearInteraction.eval(&[2.0, 3.0, 4.0]),
            vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0]
        );
        assert_eq!(q.term_names().len(), q.len());
    }

    #[test]
    fn printed_coefficients() {
        let ra = published_model::<f64>(PublishedModel::RaQuadratic);
        assert_eq!(ra.coefficients()[0], 3.082776);
        assert_eq!(ra.coefficients()[1], -0.01425);
        assert_eq!(ra.coefficients()[4], 1.85e-5);
        let mrr = published_model::<f64>(PublishedModel::MrrQuadratic);
        assert_eq!(mrr.coefficients()[10], 1403.922);
        let ra_lin = published_model::<f64>(PublishedModel::RaLinear);
        assert_eq!(ra_lin.coefficients().len(), 7);
        assert_eq!(ra_lin.coefficients()[6], 1.47321);
    }

    #[test]
    fn printed_models_at_corners() {
        let mrr = published_model::<f64>(PublishedModel::MrrQuadratic);
        let v = mrr.evaluate(&[314.0, 0.16, 0.6]);
        assert!(close(v, 35240.0, 2.0), "{v}");
        let ra = published_model::<f64>(PublishedModel::RaQuadratic);
        let v = ra.evaluate(&[314.0, 0.04, 0.2]);
        assert!(close(v, 0.5055, 0.01), "{v}");
    }

    #[test]
    fn zero_and_constant_models() {
        let zero = Polynomial::new(PolyBasis::FullQuadraticTriple, vec![0.0; 11], "z", "").unwrap();
        assert_eq!(zero.evaluate(&[123.0, 0.1, 0.3]), 0.0);
        let mut c = vec![0.0; 11];
        c[0] = 4.0;
        let constant = Polynomial::new(PolyBasis::FullQuadraticTriple, c, "c", "").unwrap();
        assert_eq!(constant.gradient(&[5.0, 6.0, 7.0]), [0.0, 0.0, 0.0]);
        let mut c = vec![0.0; 7];
        c[1] = 2.5;
        let linear = Polynomial::new(PolyBasis::LinearInteraction, c, "l", "").unwrap();
        assert_eq!(linear.gradient(&[5.0, 6.0, 7.0]), [2.5, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(Polynomial::new(PolyBasis::LinearInteraction, vec![1.0; 11], "r", "").is_err());
        assert!(Polynomial::new(PolyBasis::LinearInteraction, vec![f64::NAN; 7], "r", "").is_err());
    }

    #[test]
    fn json_schema() {
        let ra = published_model::<f64>(PublishedModel::RaQuadratic);
        let text = serde_json::to_string(&ra).unwrap();
        assert!(text.starts_with(r#"{"basis":"full_quadratic_triple","response":"Ra","units":"um","coefficients":["#));
        let back: Polynomial<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ra);
        let bad = r#"{"basis":"linear_interaction","response":"Ra","units":"um","coefficients":[1,2]}"#;
        assert!(serde_json::from_str::<Polynomial<f64>>(bad).is_err());
    }

    #[test]
    fn f32_evaluation_tracks_f64() {
        let ra64 = published_model::<f64>(PublishedModel::RaQuadratic);
        let ra32 = published_model::<f32>(PublishedModel::RaQuadratic);
        let x = [200.0, 0.1, 0.4];
        let a = ra64.evaluate(&x);
        let b = ra32.evaluate(&x.map(|v| v as f32)) as f64;
        assert!(close(a, b, 1e-4), "{a} vs {b}");
    }

    fn unit_point() -> impl Strategy<Value = [f64; 3]> {
        [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0]
    }

    proptest! {
        #[test]
        fn evaluate_is_linear_in_coefficients(
            c1 in proptest::collection::vec(-10.0f64..10.0, 11),
            c2 in proptest::collection::vec(-10.0f64..10.0, 11),
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            x in [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0],
        ) {
            let q = PolyBasis::FullQuadraticTriple;
            let combo: Vec<f64> = c1.iter().zip(&c2).map(|(p, q)| a * p + b * q).collect();
            let m1 = Polynomial::new(q, c1, "a", "").unwrap();
            let m2 = Polynomial::new(q, c2, "b", "").unwrap();
            let m = Polynomial::new(q, combo, "ab", "").unwrap();
            let lhs = m.evaluate(&x);
            let rhs = a * m1.evaluate(&x) + b * m2.evaluate(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn quadratic_basis_contains_interaction_basis(x in [-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0]) {
            let full = PolyBasis::FullQuadraticTriple.eval(&x);
            let lin = PolyBasis::LinearInteraction.eval(&x);
            let picked: Vec<f64> = [0, 1, 2, 3, 7, 8, 9].iter().map(|&i| full[i]).collect();
            prop_assert_eq!(picked, lin);
        }

        #[test]
        fn printed_model_gradients_match_central_differences(u in unit_point()) {
            let bounds = Bounds::<f64>::case_study();
            let x = bounds.from_unit(&u);
            let range = bounds.range();
            for which in [PublishedModel::RaLinear, PublishedModel::MrrLinear, PublishedModel::RaQuadratic, PublishedModel::MrrQuadratic] {
                let m = published_model::<f64>(which);
                let g = m.gradient(&x);
                for k in 0..3 {
                    let h = 1e-5 * range[k];
                    let (mut xp, mut xm) = (x, x);
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (m.evaluate(&xp) - m.evaluate(&xm)) / (2.0 * h);
                    let scale = g[k].abs().max(1e-3 * m.evaluate(&x).abs() / range[k]);
                    prop_assert!((fd - g[k]).abs() <= 1e-5 * scale, "{which:?} k={k}: {fd} vs {}", g[k]);
                }
            }
        }
    }
}
