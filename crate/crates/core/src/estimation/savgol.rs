//! Savitzky-Golay smoothing.
//!
//! Weights come from solving the polynomial least-squares normal equations
//! with Gaussian elimination over any [`Field`], so the same routine yields
//! exact rational weights or floating point ones.

use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::scalar::{Field, Real};

pub const DEFAULT_WINDOW: usize = 7;
pub const DEFAULT_ORDER: usize = 2;

fn pow<F: Field>(base: &F, exp: usize) -> F {
    (0..exp).fold(F::one(), |acc, _| acc * base.clone())
}

/// Solves `m x = rhs` in place by Gauss-Jordan elimination with partial pivoting.
fn solve<F: Field>(mut m: Vec<Vec<F>>, mut rhs: Vec<F>) -> Option<Vec<F>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| {
            m[a][col]
                .abs_val()
                .partial_cmp(&m[b][col].abs_val())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col] == F::zero() {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in 0..n {
            if row == col || m[row][col] == F::zero() {
                continue;
            }
            let f = m[row][col].clone() / m[col][col].clone();
            let pivot_row = m[col].clone();
            for (dst, v) in m[row][col..n].iter_mut().zip(&pivot_row[col..n]) {
                *dst = dst.clone() - f.clone() * v.clone();
            }
            let v = rhs[col].clone();
            rhs[row] = rhs[row].clone() - f * v;
        }
    }
    Some((0..n).map(|i| rhs[i].clone() / m[i][i].clone()).collect())
}

/// Weights that evaluate the least-squares polynomial of degree `order`, fitted
/// to a `window`-sample run centred on 0, at integer position `at`.
pub fn savgol_weights<F: Field>(window: usize, order: usize, at: i64) -> Result<Vec<F>, EstimationError> {
    if window.is_multiple_of(2) || window <= order {
        return Err(EstimationError::InvalidWindow { window, order });
    }
    let half = (window / 2) as i64;
    let xs: Vec<F> = (-half..=half).map(F::from_int).collect();
    let n = order + 1;
    let gram: Vec<Vec<F>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| xs.iter().fold(F::zero(), |acc, x| acc + pow(x, r + c)))
                .collect()
        })
        .collect();
    let t = F::from_int(at);
    let basis: Vec<F> = (0..n).map(|k| pow(&t, k)).collect();
    let z = solve(gram, basis).ok_or(EstimationError::InvalidWindow { window, order })?;
    Ok(xs
        .iter()
        .map(|x| (0..n).fold(F::zero(), |acc, k| acc + z[k].clone() * pow(x, k)))
        .collect())
}

/// Uniformly sampled scalar series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal<T> {
    pub samples: Vec<T>,
    pub period_s: T,
}

impl<T: Real> Signal<T> {
    pub fn new(samples: Vec<T>, period_s: T) -> Self {
        Self { samples, period_s }
    }
}

/// Savitzky-Golay filter with precomputed weights for every window position.
#[derive(Debug, Clone)]
pub struct SavgolFilter<T> {
    window: usize,
    /// `rows[p]` evaluates the window polynomial at window index `p`.
    rows: Vec<Vec<T>>,
}

impl<T: Real> SavgolFilter<T> {
    pub fn new(window: usize, order: usize) -> Result<Self, EstimationError> {
        let half = (window / 2) as i64;
        let rows = (-half..=half)
            .map(|at| savgol_weights::<T>(window, order, at))
            .collect::<Result<_, _>>()?;
        Ok(Self { window, rows })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn centre_weights(&self) -> &[T] {
        &self.rows[self.window / 2]
    }

    /// Interior points use the centred window; the first and last `window/2`
    /// points reuse the polynomial fitted to the first or last window.
    pub fn apply(&self, xs: &[T]) -> Result<Vec<T>, EstimationError> {
        let w = self.window;
        if xs.len() < w {
            return Err(EstimationError::SignalTooShort {
                len: xs.len(),
                window: w,
            });
        }
        let half = w / 2;
        let dot = |weights: &[T], start: usize| {
            weights
                .iter()
                .zip(&xs[start..start + w])
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
        };
        let n = xs.len();
        Ok((0..n)
            .map(|i| {
                if i < half {
                    dot(&self.rows[i], 0)
                } else if i + half >= n {
                    dot(&self.rows[w - (n - i)], n - w)
                } else {
                    dot(self.centre_weights(), i - half)
                }
            })
            .collect())
    }
}

/// Window-7, order-2 smoothing of a uniformly sampled signal.
pub fn savgol_smooth<T: Real>(signal: &Signal<T>) -> Result<Signal<T>, EstimationError> {
    let filter = SavgolFilter::new(DEFAULT_WINDOW, DEFAULT_ORDER)?;
    Ok(Signal {
        samples: filter.apply(&signal.samples)?,
        period_s: signal.period_s,
    })
}
