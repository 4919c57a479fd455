use super::EstimationError;

/// Compensated (Neumaier) sum; the result depends only on the order of
/// `values`.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    neumaier_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample standard deviation.
pub fn fit_sigma(values: &[f64]) -> Result<f64, EstimationError> {
    if values.len() < 2 {
        return Err(EstimationError::Statistics(format!(
            "standard deviation needs at least 2 values, got {}",
            values.len()
        )));
    }
    Ok(sample_sigma(values))
}

/// As [`fit_sigma`], but zero for fewer than two values.
pub fn sample_sigma(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = neumaier_sum(values.iter().map(|x| (x - m) * (x - m)));
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(v), 2.0);
    }

    #[test]
    fn sigma_edge_cases() {
        assert_eq!(fit_sigma(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!((fit_sigma(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(fit_sigma(&[1.0]).is_err());
        assert_eq!(sample_sigma(&[1.0]), 0.0);
    }
}
