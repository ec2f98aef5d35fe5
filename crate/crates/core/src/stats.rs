use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error and sample count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            samples: 1,
        }
    }

    /// Mean and standard error of the mean from i.i.d. values.
    pub fn from_iid(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            samples: n,
        }
    }

    /// Batch-means estimate: the values are split into `batches` contiguous
    /// groups and the standard error is taken over the group means.
    pub fn from_batches(values: &[f64], batches: usize) -> Self {
        let n = values.len();
        let batches = batches.clamp(1, n.max(1));
        if n < 2 || batches < 2 {
            return Self::from_iid(values);
        }
        let size = n / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| {
                let end = if b + 1 == batches { n } else { (b + 1) * size };
                let chunk = &values[b * size..end];
                chunk.iter().sum::<f64>() / chunk.len() as f64
            })
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        Self {
            mean,
            stderr: (var / batches as f64).sqrt(),
            samples: n,
        }
    }

    pub fn within(&self, target: f64, sigmas: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.stderr + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_estimate() {
        let e = Estimate::from_iid(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn batch_means_of_constant_has_zero_error() {
        let e = Estimate::from_batches(&[0.5; 1000], 20);
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.samples, 1000);
    }
}
