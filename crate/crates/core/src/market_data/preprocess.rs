use super::MarketDataError;

/// Statistics used to clip and log-transform one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessParams {
    pub mean: f64,
    pub std: f64,
    pub log_offset: f64,
}

impl PreprocessParams {
    /// Mean and population standard deviation of `training`; the log offset
    /// is `max(0, -min(clipped)) + 1` so every clipped training value maps
    /// to a logarithm argument of at least 1.
    pub fn fit(training: &[f64]) -> Self {
        let n = training.len().max(1) as f64;
        let mean = training.iter().sum::<f64>() / n;
        let var = training.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut params = PreprocessParams {
            mean,
            std: var.sqrt(),
            log_offset: 0.0,
        };
        let min = clip_outliers(training, &params)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        params.log_offset = (-min).max(0.0) + 1.0;
        params
    }

    pub fn lower(&self) -> f64 {
        self.mean - 3.0 * self.std
    }

    pub fn upper(&self) -> f64 {
        self.mean + 3.0 * self.std
    }

    /// Clip then log. Values outside the training range can fall below the
    /// offset's guarantee; their log argument is floored at a tiny positive
    /// number instead of failing.
    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        clip_outliers(values, self)
            .into_iter()
            .map(|v| (v + self.log_offset).max(1e-9).ln())
            .collect()
    }

    pub fn inverse(&self, values: &[f64]) -> Vec<f64> {
        inverse_log_transform(values, self.log_offset)
    }
}

/// Clamps every value into `[mean - 3 std, mean + 3 std]`.
pub fn clip_outliers(values: &[f64], params: &PreprocessParams) -> Vec<f64> {
    let (lo, hi) = (params.lower(), params.upper());
    values
        .iter()
        .map(|&v| {
            if v > hi {
                hi
            } else if v < lo {
                lo
            } else {
                v
            }
        })
        .collect()
}

pub fn log_transform(values: &[f64], offset: f64) -> Result<Vec<f64>, MarketDataError> {
    values
        .iter()
        .map(|&v| {
            let arg = v + offset;
            if arg > 0.0 {
                Ok(arg.ln())
            } else {
                Err(MarketDataError::LogDomain { value: v, offset })
            }
        })
        .collect()
}

pub fn inverse_log_transform(values: &[f64], offset: f64) -> Vec<f64> {
    values.iter().map(|v| v.exp() - offset).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(mean: f64, std: f64) -> PreprocessParams {
        PreprocessParams {
            mean,
            std,
            log_offset: 1.0,
        }
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_outliers(&[5.0, 5.0, 5.0], &params(5.0, 0.0)), vec![5.0; 3]);
        // mu + 3 sigma = 16, mu - 3 sigma = 4
        assert_eq!(clip_outliers(&[20.0], &params(10.0, 2.0)), vec![16.0]);
        assert_eq!(clip_outliers(&[-20.0], &params(10.0, 2.0)), vec![4.0]);
        assert_eq!(clip_outliers(&[11.0], &params(10.0, 2.0)), vec![11.0]);
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_transform(&[0.0], 1.0).unwrap(), vec![0.0]);
        let e = std::f64::consts::E;
        assert!((log_transform(&[e - 1.0], 1.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!(matches!(
            log_transform(&[-2.0], 1.0),
            Err(MarketDataError::LogDomain { .. })
        ));
        assert_eq!(inverse_log_transform(&[0.0], 1.0), vec![0.0]);
        assert!((inverse_log_transform(&[1.0], 1.0)[0] - (e - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn fitted_offset_keeps_arguments_positive() {
        let data = [-30.0, -5.0, 0.0, 12.0, 40.0];
        let p = PreprocessParams::fit(&data);
        let clipped = clip_outliers(&data, &p);
        assert!(clipped.iter().all(|v| v + p.log_offset >= 1.0 - 1e-12));
        let logged = log_transform(&clipped, p.log_offset).unwrap();
        assert!(logged.iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn clip_is_idempotent_and_bounded(
            xs in prop::collection::vec(-1e3f64..1e3, 1..50),
            mean in -100f64..100.0,
            std in 0f64..50.0,
        ) {
            let p = params(mean, std);
            let once = clip_outliers(&xs, &p);
            prop_assert_eq!(clip_outliers(&once, &p), once.clone());
            for (&c, &x) in once.iter().zip(&xs) {
                prop_assert!(c >= p.lower() && c <= p.upper());
                if x >= p.lower() && x <= p.upper() {
                    prop_assert_eq!(c, x);
                }
            }
        }

        #[test]
        fn clip_is_monotone(
            pairs in prop::collection::vec((-1e3f64..1e3, 0f64..100.0), 1..40),
            mean in -100f64..100.0,
            std in 0f64..50.0,
        ) {
            let p = params(mean, std);
            let xs: Vec<f64> = pairs.iter().map(|(x, _)| *x).collect();
            let ys: Vec<f64> = pairs.iter().map(|(x, d)| x + d).collect();
            let (cx, cy) = (clip_outliers(&xs, &p), clip_outliers(&ys, &p));
            for (a, b) in cx.iter().zip(&cy) {
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn log_round_trip(xs in prop::collection::vec(0f64..1e6, 1..50)) {
            let back = inverse_log_transform(&log_transform(&xs, 1.0).unwrap(), 1.0);
            for (x, y) in xs.iter().zip(&back) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
