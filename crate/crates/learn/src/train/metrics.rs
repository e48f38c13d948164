//! Error metrics over flat arrays.

use super::TrainError;

fn check(y: &[f64], y_hat: &[f64], min: usize) -> Result<(), TrainError> {
    if y.len() != y_hat.len() {
        return Err(TrainError::Metric(format!("length mismatch: {} targets vs {} predictions", y.len(), y_hat.len())));
    }
    if y.len() < min {
        return Err(TrainError::Metric(format!("need at least {min} values, got {}", y.len())));
    }
    Ok(())
}

/// `(1/N) sum |y_i - y_hat_i|` over all elements.
pub fn l1_metric(y: &[f64], y_hat: &[f64]) -> Result<f64, TrainError> {
    check(y, y_hat, 1)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Mean absolute error; the same quantity as [`l1_metric`], named for tables.
pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64, TrainError> {
    l1_metric(y, y_hat)
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64, TrainError> {
    check(y, y_hat, 1)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2_metric(y: &[f64], y_hat: &[f64]) -> Result<f64, TrainError> {
    check(y, y_hat, 2)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(TrainError::Metric("R² is undefined for constant targets".into()));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(l1_metric(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), 0.0);
        assert_eq!(l1_metric(&[1.0; 4], &[0.0; 4]).unwrap(), 1.0);
        assert!((l1_metric(&[0.0, 0.5, 1.0], &[0.1, 0.7, 0.9]).unwrap() - 0.4 / 3.0).abs() < 1e-15);
        assert_eq!(r2_metric(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r2_metric(&[1.0, 2.0, 3.0], &[2.0; 3]).unwrap(), 0.0);
        assert!((r2_metric(&[1.0, 2.0, 3.0], &[1.1, 2.0, 2.9]).unwrap() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn rejections() {
        assert!(l1_metric(&[1.0], &[1.0, 2.0]).is_err());
        assert!(l1_metric(&[], &[]).is_err());
        assert!(r2_metric(&[2.0, 2.0], &[1.0, 3.0]).unwrap_err().to_string().contains("constant"));
        assert!(r2_metric(&[2.0], &[2.0]).is_err());
    }
}
