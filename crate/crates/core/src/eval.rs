//! Evaluation metrics: relative MSE against a ground truth and
//! sign-prediction accuracy on held-out observations.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::observe::BinaryObservations;

/// Metrics of one run; `relative_mse` is present only when a ground truth
/// exists, `sign_accuracy` only when a test set does.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricReport {
    pub relative_mse: Option<f64>,
    pub sign_accuracy: Option<f64>,
    pub n_test: usize,
}

/// `||M_hat - M*||_F^2 / ||M*||_F^2`.
pub fn relative_mse(m_hat: &Array2<f64>, m_star: &Array2<f64>) -> Result<f64> {
    if m_hat.dim() != m_star.dim() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            m_hat.dim(),
            m_star.dim()
        )));
    }
    let denom: f64 = m_star.iter().map(|x| x * x).sum();
    if denom == 0.0 {
        return Err(Error::invalid("ground truth has zero Frobenius norm"));
    }
    let num: f64 = m_hat
        .iter()
        .zip(m_star.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(num / denom)
}

/// Fraction of test entries whose sign the estimate predicts correctly.
/// Exact-zero predictions count as incorrect.
pub fn sign_accuracy(m_hat: &Array2<f64>, test: &BinaryObservations) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    if m_hat.nrows() != test.mask().m() || m_hat.ncols() != test.mask().n() {
        return Err(Error::invalid(format!(
            "matrix is {} x {}, test set is on {} x {}",
            m_hat.nrows(),
            m_hat.ncols(),
            test.mask().m(),
            test.mask().n()
        )));
    }
    let correct = test
        .iter()
        .filter(|&(i, j, y)| {
            let v = m_hat[[i, j]];
            (v > 0.0 && y == 1) || (v < 0.0 && y == -1)
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}
