use super::nelder_mead::{self, Options};
use super::spec::SarimaSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SarimaModel {
    pub spec: SarimaSpec,
    /// Non-seasonal AR coefficients, `(1 - phi_1 B - ... - phi_p B^p)`.
    pub phi: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    /// Non-seasonal MA coefficients, `(1 - theta_1 B - ... - theta_q B^q)`.
    pub theta: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    /// Constant on the differenced scale.
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("series of length {got} too short, need {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("differenced series has zero variance; coefficients are not identifiable")]
    Degenerate,
    #[error("optimizer did not converge")]
    NonConvergence { best: Box<SarimaModel> },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForecastStepError {
    #[error("horizon must be positive")]
    Horizon,
    #[error("history of length {got} too short, need {needed}")]
    ShortHistory { needed: usize, got: usize },
}

impl SarimaModel {
    /// Model with every coefficient zero.
    pub fn zero(spec: SarimaSpec) -> Self {
        SarimaModel {
            spec,
            phi: vec![0.0; spec.p],
            seasonal_phi: vec![0.0; spec.seasonal_p],
            theta: vec![0.0; spec.q],
            seasonal_theta: vec![0.0; spec.seasonal_q],
            mu: 0.0,
            sigma2: 0.0,
        }
    }

    /// `(lag, c)` pairs such that the AR side reads `w_t - sum c w_{t-lag}`.
    fn ar_lags(&self) -> Vec<(usize, f64)> {
        lag_form(&multiply(
            &short_poly(&self.phi),
            &seasonal_poly(&self.seasonal_phi, self.spec.period),
        ))
    }

    /// `(lag, c)` pairs such that the MA side reads `e_t - sum c e_{t-lag}`.
    fn ma_lags(&self) -> Vec<(usize, f64)> {
        lag_form(&multiply(
            &short_poly(&self.theta),
            &seasonal_poly(&self.seasonal_theta, self.spec.period),
        ))
    }

    fn max_ar_lag(&self) -> usize {
        self.spec.p + self.spec.seasonal_p * self.spec.period
    }

    /// One-step residuals on the differenced series. Residuals before the
    /// largest AR lag are zero.
    pub fn residuals(&self, w: &[f64]) -> Vec<f64> {
        let ar = self.ar_lags();
        let ma = self.ma_lags();
        let t0 = self.max_ar_lag();
        let mut eps = vec![0.0; w.len()];
        for t in t0..w.len() {
            let mut e = w[t] - self.mu;
            for &(k, c) in &ar {
                e -= c * w[t - k];
            }
            for &(k, c) in &ma {
                if k <= t {
                    e += c * eps[t - k];
                }
            }
            eps[t] = e;
        }
        eps
    }

    fn stable(&self) -> bool {
        let r = 1.01;
        [
            &self.phi,
            &self.seasonal_phi,
            &self.theta,
            &self.seasonal_theta,
        ]
        .iter()
        .all(|c| roots_outside(c, r))
    }
}

/// `1 - c_1 x - ... - c_n x^n` as ascending coefficients.
fn short_poly(c: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(c.iter().map(|v| -v)).collect()
}

fn seasonal_poly(c: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; c.len() * s + 1];
    out[0] = 1.0;
    for (j, v) in c.iter().enumerate() {
        out[(j + 1) * s] = -v;
    }
    out
}

fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn lag_form(poly: &[f64]) -> Vec<(usize, f64)> {
    poly.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (k, -c))
        .collect()
}

/// Whether `1 - sum c_i z^i` has every root strictly outside `|z| = radius`.
/// Rescales so the question becomes unit-circle stability, then runs the
/// Schur–Cohn step-down recursion on the reflection coefficients.
fn roots_outside(c: &[f64], radius: f64) -> bool {
    let mut a: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(i, v)| v * radius.powi(i as i32 + 1))
        .collect();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let n = a.len();
        let denom = 1.0 - k * k;
        a = (0..n - 1).map(|i| (a[i] + k * a[n - 2 - i]) / denom).collect();
    }
    true
}

/// `(1 - B)^d (1 - B^s)^D` applied to `values`.
pub fn apply_differencing(values: &[f64], spec: &SarimaSpec) -> Result<Vec<f64>, ForecastStepError> {
    let loss = spec.differencing_loss();
    if values.len() <= loss {
        return Err(ForecastStepError::ShortHistory {
            needed: loss + 1,
            got: values.len(),
        });
    }
    let mut out = values.to_vec();
    for _ in 0..spec.d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    for _ in 0..spec.seasonal_d {
        let s = spec.period;
        out = (s..out.len()).map(|t| out[t] - out[t - s]).collect();
    }
    Ok(out)
}

/// Inverse of [`apply_differencing`]: rebuilds the series from its first
/// `d + D*s` values and the differenced tail.
pub fn integrate(head: &[f64], differenced: &[f64], spec: &SarimaSpec) -> Vec<f64> {
    let lags = differencing_lags(spec);
    let mut y = head.to_vec();
    for &w in differenced {
        let t = y.len();
        let v = w + lags.iter().map(|&(k, c)| c * y[t - k]).sum::<f64>();
        y.push(v);
    }
    y
}

fn differencing_lags(spec: &SarimaSpec) -> Vec<(usize, f64)> {
    let mut poly = vec![1.0];
    for _ in 0..spec.d {
        poly = multiply(&poly, &[1.0, -1.0]);
    }
    for _ in 0..spec.seasonal_d {
        poly = multiply(&poly, &seasonal_poly(&[1.0], spec.period));
    }
    lag_form(&poly)
}

const MAX_ITER_PER_DIM: usize = 2_000;
const RESTARTS: usize = 4;

/// Conditional-sum-of-squares fit on the differenced series.
pub fn fit_sarima(values: &[f64], spec: &SarimaSpec) -> Result<SarimaModel, FitError> {
    let needed = spec.min_fit_length();
    if values.len() < needed {
        return Err(FitError::TooShort {
            needed,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let w = apply_differencing(values, spec).expect("length checked above");
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 1e-20 * (1.0 + mean * mean) {
        return Err(FitError::Degenerate);
    }

    let n_coef = spec.num_coefficients();
    let unpack = |x: &[f64]| -> SarimaModel {
        let mut it = x.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { (&mut it).take(k).collect() };
        let phi = take(spec.p);
        let seasonal_phi = take(spec.seasonal_p);
        let theta = take(spec.q);
        let seasonal_theta = take(spec.seasonal_q);
        SarimaModel {
            spec: *spec,
            phi,
            seasonal_phi,
            theta,
            seasonal_theta,
            mu: x[n_coef],
            sigma2: 0.0,
        }
    };
    let t0 = spec.p + spec.seasonal_p * spec.period;
    let css = |m: &SarimaModel| -> f64 { m.residuals(&w)[t0..].iter().map(|e| e * e).sum() };
    let objective = |x: &[f64]| -> f64 {
        let m = unpack(x);
        let value = css(&m);
        if !value.is_finite() {
            return f64::MAX;
        }
        if m.stable() {
            value
        } else {
            1e6 * (1.0 + value)
        }
    };

    let dim = n_coef + 1;
    let mut x = vec![0.0; dim];
    x[n_coef] = mean;
    let mut steps = vec![0.1; dim];
    steps[n_coef] = 0.1 * var.sqrt().max(mean.abs()).max(1e-6);
    let opts = Options {
        max_iter: MAX_ITER_PER_DIM * dim,
        ftol: 1e-12,
        xtol: 1e-7,
    };
    let mut best = nelder_mead::minimize(objective, &x, &steps, &opts);
    for _ in 1..RESTARTS {
        x.clone_from(&best.x);
        let again = nelder_mead::minimize(objective, &x, &steps, &opts);
        let improved = again.f < best.f - 1e-10 * best.f.abs();
        best = if again.f <= best.f { again } else { best };
        if !improved && best.converged {
            break;
        }
    }

    let mut model = unpack(&best.x);
    let effective = (w.len() - t0) as f64;
    model.sigma2 = css(&model) / effective;
    if best.converged && model.stable() {
        Ok(model)
    } else {
        Err(FitError::NonConvergence {
            best: Box::new(model),
        })
    }
}

/// Recursive multi-step point forecasts in the units of `history`.
pub fn forecast_steps(
    model: &SarimaModel,
    history: &[f64],
    horizon: usize,
) -> Result<Vec<f64>, ForecastStepError> {
    if horizon == 0 {
        return Err(ForecastStepError::Horizon);
    }
    let spec = &model.spec;
    let needed = spec.differencing_loss() + model.max_ar_lag().max(1);
    if history.len() < needed {
        return Err(ForecastStepError::ShortHistory {
            needed,
            got: history.len(),
        });
    }
    let mut w = apply_differencing(history, spec)?;
    let mut eps = model.residuals(&w);
    let ar = model.ar_lags();
    let ma = model.ma_lags();
    for _ in 0..horizon {
        let t = w.len();
        let mut next = model.mu;
        for &(k, c) in &ar {
            next += c * w[t - k];
        }
        for &(k, c) in &ma {
            if k <= t {
                next -= c * eps[t - k];
            }
        }
        w.push(next);
        eps.push(0.0);
    }
    let lags = differencing_lags(spec);
    let mut y = history.to_vec();
    for &wt in &w[w.len() - horizon..] {
        let t = y.len();
        let v = wt + lags.iter().map(|&(k, c)| c * y[t - k]).sum::<f64>();
        y.push(v);
    }
    Ok(y.split_off(history.len()))
}
