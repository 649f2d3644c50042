//! Regression error metrics on raw per-element targets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fea::FeaSolution;
use crate::simp::DensityField;

/// Denominator offset in MAPE and the outlier threshold.
pub const EPSILON: f64 = 0.01;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("length mismatch: {pred} predictions vs {truth} targets")]
    Length { pred: usize, truth: usize },
    #[error("empty input")]
    Empty,
    #[error("{path}: {reason}")]
    Read { path: String, reason: String },
}

fn check(pred: &[f64], truth: &[f64]) -> Result<(), MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::Length { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum::<f64>() / pred.len() as f64)
}

/// Percent; `(100/n) Σ |p_i − p̂_i| / (p_i + ε)` with `p` the truth.
pub fn mape(pred: &[f64], truth: &[f64], eps: f64) -> Result<f64, MetricError> {
    check(pred, truth)?;
    Ok(100.0 * pred.iter().zip(truth).map(|(p, t)| (t - p).abs() / (t + eps)).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub count: usize,
    pub mse: f64,
    /// Percent.
    pub mape: f64,
    /// Percent of elements with `|error| > ε`.
    pub outlier_fraction: f64,
    /// MAPE over elements whose truth exceeds ε; zero when there are none.
    pub conditional_mape: f64,
    pub conditional_count: usize,
}

pub fn outlier_report(pred: &[f64], truth: &[f64], eps: f64) -> Result<MetricReport, MetricError> {
    check(pred, truth)?;
    let n = pred.len();
    let outliers = pred.iter().zip(truth).filter(|(p, t)| (*t - *p).abs() > eps).count();
    let (cp, ct): (Vec<f64>, Vec<f64>) = pred.iter().zip(truth).filter(|(_, t)| **t > eps).map(|(p, t)| (*p, *t)).unzip();
    Ok(MetricReport {
        count: n,
        mse: mse(pred, truth)?,
        mape: mape(pred, truth, eps)?,
        outlier_fraction: 100.0 * outliers as f64 / n as f64,
        conditional_mape: if ct.is_empty() { 0.0 } else { mape(&cp, &ct, eps)? },
        conditional_count: ct.len(),
    })
}

/// Per-element values from a solution file (von Mises column), a density file,
/// or a plain whitespace-separated list of numbers.
pub fn read_values(path: &Path) -> Result<Vec<f64>, MetricError> {
    let err = |reason: String| MetricError::Read { path: path.display().to_string(), reason };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let head = text.split_whitespace().next().unwrap_or("");
    match head {
        "residual" => FeaSolution::from_text(&text).map(|s| s.von_mises).map_err(|e| err(e.to_string())),
        "elements" => DensityField::from_text(&text).map(|d| d.densities).map_err(|e| err(e.to_string())),
        _ => text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("`{t}` is not a number"))))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(mse(&[4.0, 2.0], &[4.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mape(&[0.01], &[0.0], EPSILON).unwrap(), 100.0);
        assert_eq!(mape(&[3.0], &[3.0], EPSILON).unwrap(), 0.0);
        let m = mape(&[2.1], &[2.0], EPSILON).unwrap();
        assert!((m - 100.0 * 0.1 / 2.01).abs() < 1e-12);
        assert!((m - 4.975).abs() < 1e-3);
    }

    #[test]
    fn errors() {
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(MetricError::Length { .. })));
        assert!(matches!(mape(&[], &[], EPSILON), Err(MetricError::Empty)));
        assert!(outlier_report(&[1.0], &[], EPSILON).is_err());
    }

    #[test]
    fn outliers() {
        let r = outlier_report(&[0.02, 1.0], &[0.0, 1.0], EPSILON).unwrap();
        assert_eq!(r.outlier_fraction, 50.0);
        assert_eq!(r.conditional_count, 1);
        assert_eq!(r.conditional_mape, 0.0);
        let r = outlier_report(&[1.0, 2.0], &[1.0, 2.0], EPSILON).unwrap();
        assert_eq!((r.mse, r.mape, r.outlier_fraction), (0.0, 0.0, 0.0));
    }
}
