//! Dominance tests, non-dominated filtering and merging of labelled fronts.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Factor that turns the objective into a minimization.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        }
    }
}

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates<T: Scalar>(a: &[T], b: &[T], senses: &[Sense]) -> Result<bool> {
    dominates_within(a, b, senses, T::zero())
}

/// [`dominates`] with a relative tolerance: differences smaller than
/// `eps · max(|aᵢ|, |bᵢ|)` count as ties.
pub fn dominates_within<T: Scalar>(a: &[T], b: &[T], senses: &[Sense], eps: T) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() != senses.len() {
        return Err(Error::LengthMismatch { expected: senses.len(), got: a.len() });
    }
    let mut strictly = false;
    for ((&ai, &bi), &s) in a.iter().zip(b).zip(senses) {
        let tol = eps * ai.abs().max(bi.abs());
        // Positive `gain` means a is better in this objective.
        let gain = s.sign::<T>() * (bi - ai);
        if gain < -tol {
            return Ok(false);
        }
        if gain > tol {
            strictly = true;
        }
    }
    Ok(strictly)
}

fn same_within<T: Scalar>(a: &[T], b: &[T], eps: T) -> bool {
    a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= eps * x.abs().max(y.abs()))
}

/// A labelled design point with its natural-unit responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint<T> {
    pub x: [T; 3],
    pub responses: Vec<T>,
    pub method: String,
    pub param: String,
    /// Set by [`Front::annotate`] when another point of the front dominates this one.
    #[serde(default)]
    pub dominated: bool,
}

impl<T: Scalar> ParetoPoint<T> {
    pub fn new(x: [T; 3], responses: Vec<T>, method: impl Into<String>, param: impl Into<String>) -> Self {
        Self {
            x,
            responses,
            method: method.into(),
            param: param.into(),
            dominated: false,
        }
    }
}

/// Non-dominated subset in original order. Identical response vectors keep
/// their first occurrence.
pub fn filter_nondominated<T: Scalar>(
    points: &[ParetoPoint<T>],
    senses: &[Sense],
    eps: T,
) -> Result<Vec<ParetoPoint<T>>> {
    let mut keep = vec![true; points.len()];
    for (i, p) in points.iter().enumerate() {
        for q in points {
            if dominates_within(&q.responses, &p.responses, senses, eps)? {
                keep[i] = false;
                break;
            }
        }
    }
    let mut out: Vec<ParetoPoint<T>> = Vec::new();
    for (p, k) in points.iter().zip(keep) {
        if k && !out.iter().any(|o| same_within(&o.responses, &p.responses, eps)) {
            let mut p = p.clone();
            p.dominated = false;
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front<T> {
    pub points: Vec<ParetoPoint<T>>,
    pub senses: Vec<Sense>,
}

impl<T: Scalar> Front<T> {
    pub fn new(points: Vec<ParetoPoint<T>>, senses: Vec<Sense>) -> Self {
        Self { points, senses }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Flags every point dominated by another point of the front, keeping all.
    pub fn annotate(&mut self) -> Result<()> {
        let flags = self
            .points
            .iter()
            .map(|p| {
                self.points
                    .iter()
                    .try_fold(false, |acc, q| Ok(acc || dominates(&q.responses, &p.responses, &self.senses)?))
            })
            .collect::<Result<Vec<bool>>>()?;
        for (p, f) in self.points.iter_mut().zip(flags) {
            p.dominated = f;
        }
        Ok(())
    }

    pub fn filtered(&self, eps: T) -> Result<Self> {
        Ok(Self {
            points: filter_nondominated(&self.points, &self.senses, eps)?,
            senses: self.senses.clone(),
        })
    }
}

/// Concatenates fronts and re-filters for dominance; method labels survive.
pub fn merge_fronts<T: Scalar>(fronts: &[Front<T>], eps: T) -> Result<Front<T>> {
    let Some(first) = fronts.first() else {
        return Ok(Front::new(Vec::new(), Vec::new()));
    };
    if fronts.iter().any(|f| f.senses != first.senses) {
        return Err(Error::SenseMismatch);
    }
    let all: Vec<ParetoPoint<T>> = fronts.iter().flat_map(|f| f.points.iter().cloned()).collect();
    Ok(Front::new(filter_nondominated(&all, &first.senses, eps)?, first.senses.clone()))
}

/// Writes `method,param,vc,fz,t,<response names…>` rows.
pub fn write_front_csv<T: Scalar, W: Write>(points: &[ParetoPoint<T>], response_names: &[&str], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    let mut header = vec!["method", "param", "vc", "fz", "t"];
    header.extend_from_slice(response_names);
    wtr.write_record(&header).map_err(err)?;
    for p in points {
        if p.responses.len() != response_names.len() {
            return Err(Error::LengthMismatch {
                expected: response_names.len(),
                got: p.responses.len(),
            });
        }
        let mut row = vec![p.method.clone(), p.param.clone()];
        row.extend(p.x.iter().chain(&p.responses).map(|v| v.to_string()));
        wtr.write_record(&row).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Reads rows written by [`write_front_csv`]; every column after `t` is a response.
pub fn read_front_csv<T: Scalar, R: Read>(reader: R) -> Result<(Vec<String>, Vec<ParetoPoint<T>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    for (i, want) in ["method", "param", "vc", "fz", "t"].iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == *want => {}
            _ => return Err(Error::MissingColumn(want.to_string())),
        }
    }
    let names: Vec<String> = headers.iter().skip(5).map(String::from).collect();
    let mut points = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Csv(e.to_string()))?;
        let num = |k: usize| -> Result<T> {
            let cell = row.get(k).unwrap_or("");
            cell.parse::<f64>().map(T::of).map_err(|_| Error::ParseCell {
                row: i + 1,
                column: headers.get(k).unwrap_or("?").to_string(),
                value: cell.to_string(),
            })
        };
        let x = [num(2)?, num(3)?, num(4)?];
        let responses = (5..headers.len()).map(num).collect::<Result<Vec<_>>>()?;
        points.push(ParetoPoint::new(x, responses, &row[0], &row[1]));
    }
    Ok((names, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MIN_MAX: [Sense; 2] = [Sense::Minimize, Sense::Maximize];

    fn pt(ra: f64, mrr: f64, method: &str) -> ParetoPoint<f64> {
        ParetoPoint::new([0.0; 3], vec![ra, mrr], method, "")
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.5, 10000.0], &[0.6, 9000.0], &MIN_MAX).unwrap());
        assert!(!dominates(&[0.5, 10000.0], &[0.5, 10000.0], &MIN_MAX).unwrap());
        let a = [0.5055, 2781.8];
        let b = [0.7962, 35241.0];
        assert!(!dominates(&a, &b, &MIN_MAX).unwrap());
        assert!(!dominates(&b, &a, &MIN_MAX).unwrap());
        assert!(matches!(
            dominates(&[1.0], &[1.0, 2.0], &MIN_MAX),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tolerance_turns_near_ties_into_ties() {
        let a = [0.5, 1000.0];
        let b = [0.5 + 1e-9, 1000.0];
        assert!(dominates(&a, &b, &MIN_MAX).unwrap());
        assert!(!dominates_within(&a, &b, &MIN_MAX, 1e-6).unwrap());
    }

    #[test]
    fn filter_examples() {
        assert!(filter_nondominated::<f64>(&[], &MIN_MAX, 0.0).unwrap().is_empty());
        let pts = vec![pt(0.5, 100.0, "a"), pt(0.6, 90.0, "b"), pt(0.7, 50.0, "c")];
        let out = filter_nondominated(&pts, &MIN_MAX, 0.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].method, "a");

        let dups = vec![pt(0.7, 200.0, "x"), pt(0.5, 100.0, "y"), pt(0.7, 200.0, "z")];
        let out = filter_nondominated(&dups, &MIN_MAX, 0.0).unwrap();
        let labels: Vec<_> = out.iter().map(|p| p.method.as_str()).collect();
        assert_eq!(labels, ["x", "y"]);
    }

    #[test]
    fn annotate_keeps_dominated_points() {
        let mut f = Front::new(vec![pt(0.5, 100.0, "a"), pt(0.6, 90.0, "b")], MIN_MAX.to_vec());
        f.annotate().unwrap();
        assert_eq!(f.len(), 2);
        assert!(!f.points[0].dominated);
        assert!(f.points[1].dominated);
    }

    #[test]
    fn merge_examples() {
        let single = Front::new(vec![pt(0.5, 100.0, "a"), pt(0.6, 90.0, "a")], MIN_MAX.to_vec());
        let merged = merge_fronts(&[single.clone()], 0.0).unwrap();
        assert_eq!(merged, single.filtered(0.0).unwrap());

        let f1 = Front::new(vec![pt(0.5, 100.0, "ws")], MIN_MAX.to_vec());
        let f2 = Front::new(vec![pt(0.4, 120.0, "gc")], MIN_MAX.to_vec());
        let merged = merge_fronts(&[f1.clone(), f2], 0.0).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.points[0].method, "gc");

        let f3 = Front::new(vec![pt(0.5, 100.0, "x")], vec![Sense::Minimize, Sense::Minimize]);
        assert!(matches!(merge_fronts(&[f1, f3], 0.0), Err(Error::SenseMismatch)));
    }

    #[test]
    fn front_csv_round_trip() {
        let pts = vec![
            ParetoPoint::new([314.0, 0.16, 0.6], vec![0.796229517563293, 35240.53504195233], "lexicographic", "stage=1"),
            ParetoPoint::new([313.9944, 0.040241, 0.2051], vec![0.508056, 2879.604], "ga", "seed=1"),
        ];
        let mut buf = Vec::new();
        write_front_csv(&pts, &["ra", "mrr"], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,param,vc,fz,t,ra,mrr\n"));
        let (names, back) = read_front_csv::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(names, ["ra", "mrr"]);
        assert_eq!(back, pts);
    }

    fn triple() -> impl Strategy<Value = [Vec<f64>; 3]> {
        // Small integer grid so ties and dominance both occur often.
        let v = || proptest::collection::vec((0i32..4).prop_map(f64::from), 2);
        [v(), v(), v()]
    }

    fn brute_dominates(a: &[f64], b: &[f64]) -> bool {
        // senses (min, max)
        let no_worse = a[0] <= b[0] && a[1] >= b[1];
        let better = a[0] < b[0] || a[1] > b[1];
        no_worse && better
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn dominance_axioms([a, b, c] in triple()) {
            let d = |x: &[f64], y: &[f64]| dominates(x, y, &MIN_MAX).unwrap();
            prop_assert_eq!(d(&a, &b), brute_dominates(&a, &b));
            prop_assert!(!d(&a, &a));
            if d(&a, &b) {
                prop_assert!(!d(&b, &a));
            }
            if d(&a, &b) && d(&b, &c) {
                prop_assert!(d(&a, &c));
            }
        }
    }

    fn cloud() -> impl Strategy<Value = Vec<ParetoPoint<f64>>> {
        proptest::collection::vec(((0i32..6).prop_map(f64::from), (0i32..6).prop_map(f64::from)), 0..25)
            .prop_map(|v| v.into_iter().map(|(a, b)| pt(a, b, "p")).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn filter_idempotent_and_order_free(pts in cloud(), seed in any::<u64>()) {
            let once = filter_nondominated(&pts, &MIN_MAX, 0.0).unwrap();
            let twice = filter_nondominated(&once, &MIN_MAX, 0.0).unwrap();
            prop_assert_eq!(&once, &twice);
            for p in &once {
                for q in &once {
                    prop_assert!(!dominates(&q.responses, &p.responses, &MIN_MAX).unwrap());
                }
            }

            let mut shuffled = pts.clone();
            let n = shuffled.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let other = filter_nondominated(&shuffled, &MIN_MAX, 0.0).unwrap();
            let key = |v: &[ParetoPoint<f64>]| {
                let mut k: Vec<(i64, i64)> = v.iter().map(|p| (p.responses[0] as i64, p.responses[1] as i64)).collect();
                k.sort();
                k
            };
            prop_assert_eq!(key(&once), key(&other));
        }
    }
}
