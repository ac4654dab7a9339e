//! Numeric checks of the three auxiliary inequalities behind the bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::family::log2_3;
use crate::graph_cert::alpha_sup_value;

/// Relative tolerance on `lhs <= rhs`.
pub const TAU_INEQ: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IneqSample {
    pub inputs: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub slack: f64,
}

impl IneqSample {
    fn new(inputs: Vec<f64>, lhs: f64, rhs: f64) -> Self {
        Self { inputs, lhs, rhs, holds: lhs <= rhs + TAU_INEQ * rhs.abs(), slack: rhs - lhs }
    }

    pub fn relative_slack(&self) -> f64 {
        self.slack / self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// `a x^p + 2 b y^p <= (a + b)(x + y)^p` with `p = log2(3) - 1`, under the
/// hypothesis `a x^p >= b y^p`. Returns `None` when the hypothesis fails.
pub fn check_ineq_avg(a: f64, b: f64, x: f64, y: f64) -> Result<Option<IneqSample>> {
    if !(a >= 0.0 && b >= 0.0 && x >= 1.0 && y >= 1.0) {
        return precondition(format!("need a, b >= 0 and x, y >= 1, got ({a}, {b}, {x}, {y})"));
    }
    let p = log2_3() - 1.0;
    let (ax, by) = (a * x.powf(p), b * y.powf(p));
    if ax < by {
        return Ok(None);
    }
    Ok(Some(IneqSample::new(vec![a, b, x, y], ax + 2.0 * by, (a + b) * (x + y).powf(p))))
}

/// `log(2i - 2) / log(i)`.
pub fn alpha_ratio(i: usize) -> f64 {
    (2.0 * i as f64 - 2.0).ln() / (i as f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSup {
    pub argmax: usize,
    pub value: f64,
    /// The maximiser is 4 and the maximum equals `log(6) / log(4)`.
    pub maximizer_ok: bool,
    /// `1 + 1/log2(i) < log(6)/log(4)` for every `11 <= i <= i_max`.
    pub tail_ok: bool,
    pub tail_checked: usize,
}

/// Scans `i = 2..=i_max` for the maximum of `log(2i - 2) / log(i)`.
pub fn alpha_sup(i_max: usize) -> Result<AlphaSup> {
    if i_max < 4 {
        return precondition(format!("i_max must be at least 4, got {i_max}"));
    }
    let (mut argmax, mut value) = (2, alpha_ratio(2));
    for i in 3..=i_max {
        let v = alpha_ratio(i);
        if v > value {
            argmax = i;
            value = v;
        }
    }
    let target = alpha_sup_value();
    let mut tail_ok = true;
    let mut tail_checked = 0;
    for i in 11..=i_max {
        tail_checked += 1;
        if 1.0 + 1.0 / (i as f64).log2() >= target {
            tail_ok = false;
        }
    }
    Ok(AlphaSup { argmax, value, maximizer_ok: argmax == 4 && value == target, tail_ok, tail_checked })
}

/// Smallest exponent admissible for [`check_ineq_2`] on a list of length `l`.
pub fn ineq2_threshold(l: usize) -> f64 {
    (2..=l).map(alpha_ratio).fold(f64::NEG_INFINITY, f64::max)
}

/// `a_l^p + a_{l-1}^p + sum_{i <= l-2} 2 a_i^p <= (sum a_i)^p` for a
/// nondecreasing list with entries `>= 1`. Returns `None` when `p` is below
/// [`ineq2_threshold`].
pub fn check_ineq_2(a: &[f64], p: f64) -> Result<Option<IneqSample>> {
    let l = a.len();
    if l < 2 {
        return precondition("the list needs at least two entries");
    }
    if a.iter().any(|&v| !(v >= 1.0)) || a.windows(2).any(|w| w[0] > w[1]) {
        return precondition("entries must be nondecreasing and at least 1");
    }
    if p < ineq2_threshold(l) {
        return Ok(None);
    }
    let lhs = a[l - 1].powf(p)
        + a[l - 2].powf(p)
        + a[..l - 2].iter().map(|v| 2.0 * v.powf(p)).sum::<f64>();
    let rhs = a.iter().sum::<f64>().powf(p);
    let mut inputs = a.to_vec();
    inputs.push(p);
    Ok(Some(IneqSample::new(inputs, lhs, rhs)))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IneqBatch {
    pub checked: usize,
    pub failures: Vec<IneqSample>,
    /// Sample with the smallest relative slack.
    pub tightest: Option<IneqSample>,
}

fn merge_batches(mut a: IneqBatch, b: IneqBatch) -> IneqBatch {
    a.checked += b.checked;
    a.failures.extend(b.failures);
    a.tightest = match (a.tightest, b.tightest) {
        (Some(x), Some(y)) => Some(if y.relative_slack() < x.relative_slack() { y } else { x }),
        (x, y) => x.or(y),
    };
    a
}

fn record(batch: &mut IneqBatch, s: IneqSample) {
    batch.checked += 1;
    if batch.tightest.as_ref().is_none_or(|t| s.relative_slack() < t.relative_slack()) {
        batch.tightest = Some(s.clone());
    }
    if !s.holds {
        batch.failures.push(s);
    }
}

const CHUNK: usize = 4096;

fn run_chunks(count: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng, &mut IneqBatch) + Sync) -> IneqBatch {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut batch = IneqBatch::default();
            let todo = CHUNK.min(count - c * CHUNK);
            while batch.checked < todo {
                f(&mut rng, &mut batch);
            }
            batch
        })
        .reduce(IneqBatch::default, merge_batches)
}

/// `count` admissible random tuples for [`check_ineq_avg`].
pub fn sample_ineq_avg(count: usize, seed: u64) -> IneqBatch {
    run_chunks(count, seed, |rng, batch| {
        let (mut a, mut b) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let (mut x, mut y) = (rng.gen_range(1.0..100.0), rng.gen_range(1.0..100.0));
        let p = log2_3() - 1.0;
        if a * f64::powf(x, p) < b * f64::powf(y, p) {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut x, &mut y);
        }
        if let Ok(Some(s)) = check_ineq_avg(a, b, x, y) {
            record(batch, s);
        }
    })
}

/// `count` admissible random lists (length 2..=10) for [`check_ineq_2`].
pub fn sample_ineq_2(count: usize, seed: u64) -> IneqBatch {
    run_chunks(count, seed, |rng, batch| {
        let l = rng.gen_range(2..=10);
        let mut a: Vec<f64> = (0..l)
            .map(|_| if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(1.0..50.0) })
            .collect();
        a.sort_by(f64::total_cmp);
        let p = ineq2_threshold(l) + if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5) };
        if let Ok(Some(s)) = check_ineq_2(&a, p) {
            record(batch, s);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avg_examples() {
        let eq = check_ineq_avg(1.0, 1.0, 1.0, 1.0).unwrap().unwrap();
        assert!((eq.lhs - 3.0).abs() < 1e-12 && (eq.rhs - 3.0).abs() < 1e-12);
        assert!(eq.relative_slack().abs() <= 1e-12);
        let s = check_ineq_avg(2.0, 1.0, 2.0, 1.0).unwrap().unwrap();
        assert!((s.lhs - 5.0).abs() < 1e-12, "{}", s.lhs);
        assert!((s.rhs - 5.704_522_494_691_117).abs() < 1e-9, "{}", s.rhs);
        assert!(s.holds);
        assert!(check_ineq_avg(1.0, 2.0, 1.0, 1.0).unwrap().is_none());
        assert!(check_ineq_avg(1.0, 2.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn alpha_sup_examples() {
        let r = alpha_sup(4).unwrap();
        assert_eq!(r.argmax, 4);
        assert!((r.value - 1.292_481_250_360_578).abs() < 1e-12);
        assert!(r.maximizer_ok);
        assert!((alpha_ratio(3) - 1.261_859_507_142_915).abs() < 1e-12);
        assert!((alpha_ratio(5) - 1.292_029_674_220_179).abs() < 1e-12);
        assert!(alpha_sup(3).is_err());
        let wide = alpha_sup(2000).unwrap();
        assert!(wide.maximizer_ok && wide.tail_ok);
    }

    #[test]
    fn ineq2_examples() {
        let p = alpha_sup_value();
        let four = check_ineq_2(&[1.0; 4], p).unwrap().unwrap();
        assert!((four.lhs - 6.0).abs() < 1e-12 && (four.rhs - 6.0).abs() < 1e-12);
        let three = check_ineq_2(&[1.0; 3], p).unwrap().unwrap();
        assert_eq!(three.lhs, 4.0);
        assert!((three.rhs - 4.136_854_781_603_211).abs() < 1e-9, "{}", three.rhs);
        assert!(check_ineq_2(&[1.0; 4], 1.2).unwrap().is_none());
        assert!(check_ineq_2(&[2.0, 1.0], 1.5).is_err());
        assert!(check_ineq_2(&[1.0], 1.5).is_err());
    }

    #[test]
    fn small_batches_pass() {
        let a = sample_ineq_avg(5000, 1);
        assert_eq!(a.checked, 5000);
        assert!(a.failures.is_empty());
        let b = sample_ineq_2(5000, 2);
        assert_eq!(b.checked, 5000);
        assert!(b.failures.is_empty(), "{:?}", &b.failures[..b.failures.len().min(3)]);
    }
}
