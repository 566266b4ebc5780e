//! Optimizer and early-stopping helpers shared by the NLI and generator
//! training loops.

use serde::{Deserialize, Serialize};

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Dense update of every parameter.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let (c1, c2) = self.corrections();
        for i in 0..params.len() {
            self.update(i, params, grads[i], c1, c2);
        }
    }

    /// Sparse update touching only `indices`; moments of other parameters are
    /// left as they are (lazy Adam).
    pub fn step_sparse(&mut self, params: &mut [f64], grads: &[f64], indices: &[usize]) {
        self.t += 1;
        let (c1, c2) = self.corrections();
        for &i in indices {
            self.update(i, params, grads[i], c1, c2);
        }
    }

    fn corrections(&self) -> (f64, f64) {
        let t = self.t as i32;
        (1.0 - self.beta1.powi(t), 1.0 - self.beta2.powi(t))
    }

    #[inline]
    fn update(&mut self, i: usize, params: &mut [f64], g: f64, c1: f64, c2: f64) {
        self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
        self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
        let m_hat = self.m[i] / c1;
        let v_hat = self.v[i] / c2;
        params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Patience-based early stopping. Only strict improvements reset patience.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    direction: Direction,
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    stale: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(direction: Direction, patience: usize) -> Self {
        EarlyStopping {
            direction,
            patience,
            best: None,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, value: f64) -> Observation {
        let improved = match self.best {
            None => true,
            Some(best) => match self.direction {
                Direction::Maximize => value > best,
                Direction::Minimize => value < best,
            },
        };
        if improved {
            self.best = Some(value);
            self.best_epoch = epoch;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        Observation {
            improved,
            stop: self.stale >= self.patience,
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}
