//! Trainable posterior parameters and the Adam optimizer.

use crate::error::Result;
use crate::variational::{DiagonalGaussian, MIN_VARIANCE};

/// Posterior parameters in their unconstrained form: means and log-variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalParams {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl VariationalParams {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Self {
        assert_eq!(mean.len(), log_var.len());
        Self { mean, log_var }
    }

    pub fn with_variance(mean: Vec<f64>, variance: f64) -> Self {
        let lv = variance.max(MIN_VARIANCE).ln();
        let n = mean.len();
        Self::new(mean, vec![lv; n])
    }

    pub fn from_gaussian(g: &DiagonalGaussian) -> Self {
        Self::new(
            g.mean().to_vec(),
            g.variance().iter().map(|v| v.ln()).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_gaussian(&self) -> Result<DiagonalGaussian> {
        DiagonalGaussian::from_log_variance(self.mean.clone(), &self.log_var)
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(&self.log_var).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step_where(params, grads, |_| true);
    }

    /// Step that leaves coordinates with `active(j) == false` and their moments untouched.
    pub fn step_where(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        active: impl Fn(usize) -> bool,
    ) {
        debug_assert_eq!(params.len(), grads.len());
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (j, ((p, g), (m, v))) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
            .enumerate()
        {
            if !active(j) {
                continue;
            }
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
        }
    }
}

/// Adam over both halves of a [`VariationalParams`]. The log-variance is
/// clamped at the variance floor after every step.
#[derive(Debug, Clone)]
pub struct PosteriorOptimizer {
    mean: Adam,
    log_var: Adam,
}

impl PosteriorOptimizer {
    pub fn new(dim: usize, learning_rate: f64) -> Self {
        Self {
            mean: Adam::new(dim, learning_rate),
            log_var: Adam::new(dim, learning_rate),
        }
    }

    pub fn step(
        &mut self,
        params: &mut VariationalParams,
        grad_mean: &[f64],
        grad_log_var: &[f64],
    ) {
        self.step_where(params, grad_mean, grad_log_var, |_| true);
    }

    /// Step only the coordinates for which `active` holds.
    pub fn step_where(
        &mut self,
        params: &mut VariationalParams,
        grad_mean: &[f64],
        grad_log_var: &[f64],
        active: impl Fn(usize) -> bool,
    ) {
        self.mean.step_where(&mut params.mean, grad_mean, &active);
        self.log_var
            .step_where(&mut params.log_var, grad_log_var, &active);
        let floor = MIN_VARIANCE.ln();
        params.log_var.iter_mut().for_each(|lv| *lv = lv.max(floor));
    }
}
